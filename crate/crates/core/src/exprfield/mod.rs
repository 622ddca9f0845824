//! Coefficient fields on coordinate charts: parsing, evaluation and exact
//! derivatives of any order.

mod expr;
mod parse;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::{Differentiator, Evaluator, Expr};
pub use parse::parse_expression;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("parse error at byte {offset}: expected one of [{}], found {found}", expected.join(", "))]
    Parse {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier '{name}' at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error: {reason}")]
    Domain { reason: String },
    #[error("point has {found} coordinates, need at least {expected}")]
    PointDimension { expected: usize, found: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}

const ALIASES: [&str; 4] = ["x", "y", "z", "t"];

/// Distance to a division singularity below which sample points are rejected.
pub const SINGULARITY_MARGIN: f64 = 1e-3;

/// A coordinate chart `R^n` with named coordinates.
///
/// Default names are `x1..xn`; when `n <= 4` the aliases `x, y, z, t` refer to
/// `x1..x4` in that order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Chart {
    dim: usize,
    names: Vec<String>,
    default_names: bool,
    domain: Option<Vec<(f64, f64)>>,
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.names == other.names
    }
}

impl Chart {
    pub fn euclidean(dim: usize) -> Self {
        assert!((1..=64).contains(&dim), "chart dimension must be in 1..=64");
        Self {
            dim,
            names: (1..=dim).map(|i| format!("x{i}")).collect(),
            default_names: true,
            domain: None,
        }
    }

    pub fn with_names(names: Vec<String>) -> Result<Self, ExprError> {
        if names.is_empty() || names.len() > 64 {
            return Err(ExprError::InvalidChart(
                "chart dimension must be in 1..=64".into(),
            ));
        }
        for (i, n) in names.iter().enumerate() {
            let valid = n
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid || matches!(n.as_str(), "sin" | "cos" | "exp") {
                return Err(ExprError::InvalidChart(format!(
                    "'{n}' is not a usable coordinate name"
                )));
            }
            if names[..i].contains(n) {
                return Err(ExprError::InvalidChart(format!(
                    "duplicate coordinate name '{n}'"
                )));
            }
        }
        let default_names = names
            .iter()
            .enumerate()
            .all(|(i, n)| *n == format!("x{}", i + 1));
        Ok(Self {
            dim: names.len(),
            names,
            default_names,
            domain: None,
        })
    }

    pub fn with_domain(mut self, bounds: Vec<(f64, f64)>) -> Result<Self, ExprError> {
        if bounds.len() != self.dim {
            return Err(ExprError::InvalidChart(format!(
                "domain has {} intervals for a {}-dimensional chart",
                bounds.len(),
                self.dim
            )));
        }
        if let Some((i, _)) = bounds
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(ExprError::InvalidChart(format!(
                "domain interval {} must satisfy min < max",
                i + 1
            )));
        }
        self.domain = Some(bounds);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coordinate_names(&self) -> &[String] {
        &self.names
    }

    pub fn domain_hint(&self) -> Option<&[(f64, f64)]> {
        self.domain.as_deref()
    }

    /// The sampling box: the declared domain or `[-1, 1]^n`.
    pub fn sampling_box(&self) -> Vec<(f64, f64)> {
        self.domain
            .clone()
            .unwrap_or_else(|| vec![(-1.0, 1.0); self.dim])
    }

    /// True when the sampling box contains the origin, so straight segments
    /// from the origin stay inside it.
    pub fn star_shaped_about_origin(&self) -> bool {
        self.sampling_box()
            .iter()
            .all(|(lo, hi)| *lo <= 0.0 && 0.0 <= *hi)
    }

    pub fn coordinate_index(&self, name: &str) -> Option<usize> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Some(i);
        }
        if self.default_names && self.dim <= 4 {
            return ALIASES[..self.dim].iter().position(|a| *a == name);
        }
        None
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ExprError> {
        parse_expression(text, self)
    }

    /// Draws a point uniformly from the sampling box, rejecting points where
    /// any of `fields` is undefined or within [`SINGULARITY_MARGIN`] of a
    /// division singularity.
    pub fn sample_point<R: Rng>(&self, rng: &mut R, fields: &[Expr]) -> Vec<f64> {
        let bounds = self.sampling_box();
        let mut last = Vec::new();
        for _ in 0..1000 {
            let p: Vec<f64> = bounds.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect();
            let mut ev = Evaluator::new(&p);
            let ok = fields.iter().all(|f| ev.eval(f).is_ok_and(f64::is_finite))
                && ev.min_divisor() >= SINGULARITY_MARGIN;
            if ok {
                return p;
            }
            last = p;
        }
        last
    }
}

/// A scalar coefficient function on a chart.
#[derive(Clone, Debug)]
pub struct SmoothField {
    chart: Arc<Chart>,
    expr: Expr,
}

impl SmoothField {
    pub fn new(chart: Arc<Chart>, expr: Expr) -> Self {
        Self { chart, expr }
    }

    pub fn parse(text: &str, chart: Arc<Chart>) -> Result<Self, ExprError> {
        let expr = parse_expression(text, &chart)?;
        Ok(Self { chart, expr })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        if point.len() != self.chart.dim() {
            return Err(ExprError::PointDimension {
                expected: self.chart.dim(),
                found: point.len(),
            });
        }
        self.expr.eval(point)
    }

    /// Exact partial derivative along coordinate `index`.
    pub fn derivative(&self, index: usize) -> SmoothField {
        assert!(index < self.chart.dim(), "coordinate index out of range");
        Self {
            chart: self.chart.clone(),
            expr: self.expr.derivative(index),
        }
    }

    /// Central difference `(f(p + h e_i) - f(p - h e_i)) / 2h`.
    pub fn fd_oracle(&self, point: &[f64], index: usize, h: f64) -> Result<f64, ExprError> {
        fd_central(&self.expr, point, index, h)
    }
}

impl std::fmt::Display for SmoothField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.expr.display_with(self.chart.coordinate_names()))
    }
}

/// Central finite difference of an expression; the independent check on
/// exact differentiation.
pub fn fd_central(expr: &Expr, point: &[f64], index: usize, h: f64) -> Result<f64, ExprError> {
    if !(h > 0.0) {
        return Err(ExprError::InvalidStep(h));
    }
    let mut plus = point.to_vec();
    let mut minus = point.to_vec();
    plus[index] += h;
    minus[index] -= h;
    let fp = expr.eval(&plus)?;
    let fm = expr.eval(&minus)?;
    Ok((fp - fm) / (2.0 * h))
}
