//! Lie-algebra-bundle valued and endomorphism valued differential forms on a
//! trivialized bundle `chart x g`, expressed in a fixed working frame `e_a`.

pub mod identities;
pub mod multiindex;
mod ops;
pub mod oracle;
mod scalar;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exprfield::{Chart, Evaluator, Expr, ExprError};
use crate::liecore::LieAlgebra;

pub use ops::*;
pub use scalar::{contract, symbolic_determinant, Gradient, ScalarForm};

fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::ChartMismatch(format!(
            "{}-dimensional chart ({}) vs {}-dimensional chart ({})",
            a.dim(),
            a.coordinate_names().join(","),
            b.dim(),
            b.coordinate_names().join(",")
        )))
    }
}

fn same_algebra(a: &Arc<LieAlgebra>, b: &Arc<LieAlgebra>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::AlgebraMismatch)
    }
}

/// `omega = sum_a omega^a (x) e_a`, one scalar `k`-form per fibre index.
#[derive(Clone, Debug)]
pub struct KForm {
    chart: Arc<Chart>,
    algebra: Arc<LieAlgebra>,
    degree: usize,
    comps: Vec<ScalarForm>,
}

impl KForm {
    pub fn new(
        chart: Arc<Chart>,
        algebra: Arc<LieAlgebra>,
        degree: usize,
        comps: Vec<ScalarForm>,
    ) -> Result<Self> {
        if comps.len() != algebra.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} fibre components for a {}-dimensional algebra",
                comps.len(),
                algebra.dim()
            )));
        }
        if let Some(bad) = comps
            .iter()
            .find(|c| c.dim() != chart.dim() || c.degree() != degree)
        {
            return Err(Error::ShapeMismatch(format!(
                "component is a {}-form on R^{}, expected a {degree}-form on R^{}",
                bad.degree(),
                bad.dim(),
                chart.dim()
            )));
        }
        Ok(Self {
            chart,
            algebra,
            degree,
            comps,
        })
    }

    pub(crate) fn from_parts(
        chart: Arc<Chart>,
        algebra: Arc<LieAlgebra>,
        degree: usize,
        comps: Vec<ScalarForm>,
    ) -> Self {
        debug_assert_eq!(comps.len(), algebra.dim());
        Self {
            chart,
            algebra,
            degree,
            comps,
        }
    }

    pub fn zero(chart: Arc<Chart>, algebra: Arc<LieAlgebra>, degree: usize) -> Self {
        let comps = vec![ScalarForm::zero(chart.dim(), degree); algebra.dim()];
        Self::from_parts(chart, algebra, degree, comps)
    }

    /// Single fibre direction: `form (x) e_a`.
    pub fn along(
        chart: Arc<Chart>,
        algebra: Arc<LieAlgebra>,
        a: usize,
        form: ScalarForm,
    ) -> Result<Self> {
        let mut out = Self::zero(chart, algebra, form.degree());
        if a >= out.comps.len() {
            return Err(Error::ShapeMismatch(format!("fibre index {} out of range", a + 1)));
        }
        out.comps[a] = form;
        Self::new(out.chart, out.algebra, out.degree, out.comps)
    }

    /// Constant section `sum_a v[a] e_a` as a 0-form.
    pub fn constant_section(chart: Arc<Chart>, algebra: Arc<LieAlgebra>, v: &[f64]) -> Self {
        let n = chart.dim();
        let comps = v
            .iter()
            .map(|c| ScalarForm::function(n, Expr::constant(*c)))
            .collect();
        Self::from_parts(chart, algebra, 0, comps)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[ScalarForm] {
        &self.comps
    }

    pub fn component(&self, a: usize) -> &ScalarForm {
        &self.comps[a]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        same_chart(&self.chart, &other.chart)?;
        same_algebra(&self.algebra, &other.algebra)?;
        if self.degree != other.degree {
            return Err(Error::ShapeMismatch(format!(
                "degree {} vs degree {}",
                self.degree, other.degree
            )));
        }
        Ok(())
    }

    pub fn map(&self, mut op: impl FnMut(&ScalarForm) -> ScalarForm) -> Self {
        Self::from_parts(
            self.chart.clone(),
            self.algebra.clone(),
            self.degree,
            self.comps.iter().map(&mut op).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::from_parts(
            self.chart.clone(),
            self.algebra.clone(),
            self.degree,
            self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::from_parts(
            self.chart.clone(),
            self.algebra.clone(),
            self.degree,
            self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect(),
        ))
    }

    pub fn neg(&self) -> Self {
        self.map(ScalarForm::neg)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c.scale(factor))
    }

    /// Every coefficient expression, fibre-major.
    pub fn expressions(&self) -> impl Iterator<Item = &Expr> {
        self.comps.iter().flat_map(|c| c.components().iter())
    }

    /// Component values `[a][I]` at the evaluator's point.
    pub fn eval(&self, ev: &mut Evaluator) -> Result<Vec<Vec<f64>>, ExprError> {
        self.comps.iter().map(|c| c.eval(ev)).collect()
    }

    pub fn eval_at(&self, point: &[f64]) -> Result<Vec<Vec<f64>>> {
        if point.len() != self.chart.dim() {
            return Err(ExprError::PointDimension {
                expected: self.chart.dim(),
                found: point.len(),
            }
            .into());
        }
        Ok(self.eval(&mut Evaluator::new(point))?)
    }

    /// Value `omega(v_1, .., v_k)` in the fibre, from component values.
    pub fn contract_values(values: &[Vec<f64>], dim: usize, degree: usize, vectors: &[&[f64]]) -> Vec<f64> {
        values
            .iter()
            .map(|v| contract(v, dim, degree, vectors))
            .collect()
    }
}

/// Textual form: 1-based fibre index -> multi-index such as `dx^dy` -> expression.
pub type FormTable = BTreeMap<String, BTreeMap<String, String>>;

/// `dx^dy` style name of a sorted multi-index; `1` for the empty one.
pub fn multi_index_name(chart: &Chart, mask: multiindex::Mask) -> String {
    if mask == 0 {
        return "1".into();
    }
    multiindex::indices(mask)
        .iter()
        .map(|&i| format!("d{}", chart.coordinate_names()[i]))
        .collect::<Vec<_>>()
        .join("^")
}

/// Parses `dx^dy` into its coordinate tuple; `1` or the empty string is the
/// empty tuple.
pub fn parse_multi_index(chart: &Chart, text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() || text == "1" {
        return Ok(Vec::new());
    }
    text.split('^')
        .map(|piece| {
            let piece = piece.trim();
            piece
                .strip_prefix('d')
                .and_then(|name| chart.coordinate_index(name))
                .ok_or_else(|| {
                    Error::ShapeMismatch(format!(
                        "{piece:?} is not a coordinate differential of ({})",
                        chart.coordinate_names().join(", ")
                    ))
                })
        })
        .collect()
}

impl KForm {
    /// Nonzero components as text.
    pub fn to_table(&self) -> FormTable {
        let names = self.chart.coordinate_names();
        let mut out = FormTable::new();
        for (a, comp) in self.comps.iter().enumerate() {
            let entries: BTreeMap<String, String> = comp
                .masks()
                .iter()
                .zip(comp.components())
                .filter(|(_, e)| !e.is_zero())
                .map(|(m, e)| (multi_index_name(&self.chart, *m), e.display_with(names).to_string()))
                .collect();
            if !entries.is_empty() {
                out.insert((a + 1).to_string(), entries);
            }
        }
        out
    }

    /// Inverse of [`KForm::to_table`]; reordered multi-indices pick up
    /// their permutation sign and repeated ones vanish.
    pub fn from_table(
        chart: Arc<Chart>,
        algebra: Arc<LieAlgebra>,
        degree: usize,
        table: &FormTable,
    ) -> Result<Self> {
        let n = algebra.dim();
        let mut terms: Vec<Vec<(Vec<usize>, Expr)>> = vec![Vec::new(); n];
        for (fibre, entries) in table {
            let a = fibre
                .parse::<usize>()
                .ok()
                .filter(|a| (1..=n).contains(a))
                .ok_or_else(|| Error::ShapeMismatch(format!("fibre index {fibre:?} is not in 1..={n}")))?;
            for (index, expr) in entries {
                let tuple = parse_multi_index(&chart, index)?;
                if tuple.len() != degree {
                    return Err(Error::ShapeMismatch(format!(
                        "{index:?} has degree {}, expected {degree}",
                        tuple.len()
                    )));
                }
                terms[a - 1].push((tuple, chart.parse(expr)?));
            }
        }
        let dim = chart.dim();
        let comps = terms
            .iter()
            .map(|t| ScalarForm::from_tuples(dim, degree, t))
            .collect();
        KForm::new(chart, algebra, degree, comps)
    }
}

/// `T = sum T[a][b] (x) (e_a (x) e^b)`, acting by `T(e_b) = sum_a T[a][b] e_a`.
#[derive(Clone, Debug)]
pub struct EndForm {
    chart: Arc<Chart>,
    algebra: Arc<LieAlgebra>,
    degree: usize,
    comps: Vec<Vec<ScalarForm>>,
}

impl EndForm {
    pub fn new(
        chart: Arc<Chart>,
        algebra: Arc<LieAlgebra>,
        degree: usize,
        comps: Vec<Vec<ScalarForm>>,
    ) -> Result<Self> {
        let n = algebra.dim();
        if comps.len() != n || comps.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "endomorphism entries must form a {n}x{n} array"
            )));
        }
        if comps
            .iter()
            .flatten()
            .any(|c| c.dim() != chart.dim() || c.degree() != degree)
        {
            return Err(Error::ShapeMismatch(format!(
                "endomorphism entries must be {degree}-forms on R^{}",
                chart.dim()
            )));
        }
        Ok(Self {
            chart,
            algebra,
            degree,
            comps,
        })
    }

    pub(crate) fn from_parts(
        chart: Arc<Chart>,
        algebra: Arc<LieAlgebra>,
        degree: usize,
        comps: Vec<Vec<ScalarForm>>,
    ) -> Self {
        Self {
            chart,
            algebra,
            degree,
            comps,
        }
    }

    pub fn zero(chart: Arc<Chart>, algebra: Arc<LieAlgebra>, degree: usize) -> Self {
        let n = algebra.dim();
        let comps = vec![vec![ScalarForm::zero(chart.dim(), degree); n]; n];
        Self::from_parts(chart, algebra, degree, comps)
    }

    pub fn identity(chart: Arc<Chart>, algebra: Arc<LieAlgebra>) -> Self {
        let mut out = Self::zero(chart, algebra, 0);
        let dim = out.chart.dim();
        for (a, row) in out.comps.iter_mut().enumerate() {
            row[a] = ScalarForm::function(dim, Expr::one());
        }
        out
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Entry `T[a][b]`.
    pub fn entry(&self, a: usize, b: usize) -> &ScalarForm {
        &self.comps[a][b]
    }

    pub fn entries(&self) -> &[Vec<ScalarForm>] {
        &self.comps
    }

    pub fn set_entry(&mut self, a: usize, b: usize, form: ScalarForm) -> Result<()> {
        if form.degree() != self.degree || form.dim() != self.chart.dim() {
            return Err(Error::ShapeMismatch("entry degree or chart differs".into()));
        }
        self.comps[a][b] = form;
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        same_chart(&self.chart, &other.chart)?;
        same_algebra(&self.algebra, &other.algebra)?;
        if self.degree != other.degree {
            return Err(Error::ShapeMismatch(format!(
                "degree {} vs degree {}",
                self.degree, other.degree
            )));
        }
        Ok(())
    }

    pub fn map(&self, mut op: impl FnMut(&ScalarForm) -> ScalarForm) -> Self {
        Self::from_parts(
            self.chart.clone(),
            self.algebra.clone(),
            self.degree,
            self.comps
                .iter()
                .map(|r| r.iter().map(&mut op).collect())
                .collect(),
        )
    }

    /// Entry-wise exterior derivative.
    pub fn d(&self) -> Self {
        let mut grad = Gradient::new(self.chart.dim());
        Self::from_parts(
            self.chart.clone(),
            self.algebra.clone(),
            self.degree + 1,
            self.comps
                .iter()
                .map(|r| r.iter().map(|c| c.d_with(&mut grad)).collect())
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::from_parts(
            self.chart.clone(),
            self.algebra.clone(),
            self.degree,
            self.comps
                .iter()
                .zip(&other.comps)
                .map(|(r, s)| r.iter().zip(s).map(|(a, b)| a.add(b)).collect())
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(ScalarForm::neg)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c.scale(factor))
    }

    /// Matrix product with wedge on entries: `(S ^ T)[a][c] = sum_b S[a][b] ^ T[b][c]`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        same_chart(&self.chart, &other.chart)?;
        same_algebra(&self.algebra, &other.algebra)?;
        let n = self.algebra.dim();
        let dim = self.chart.dim();
        let degree = self.degree + other.degree;
        let comps = (0..n)
            .map(|a| {
                (0..n)
                    .map(|c| {
                        (0..n).fold(ScalarForm::zero(dim, degree), |acc, b| {
                            if self.comps[a][b].is_literal_zero() || other.comps[b][c].is_literal_zero() {
                                acc
                            } else {
                                acc.add(&self.comps[a][b].wedge(&other.comps[b][c]))
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(Self::from_parts(
            self.chart.clone(),
            self.algebra.clone(),
            degree,
            comps,
        ))
    }

    pub fn expressions(&self) -> impl Iterator<Item = &Expr> {
        self.comps
            .iter()
            .flat_map(|r| r.iter().flat_map(|c| c.components().iter()))
    }

    /// Entry values `[a][b][I]`.
    pub fn eval(&self, ev: &mut Evaluator) -> Result<Vec<Vec<Vec<f64>>>, ExprError> {
        self.comps
            .iter()
            .map(|r| r.iter().map(|c| c.eval(ev)).collect())
            .collect()
    }
}

/// Connection coefficients in the working frame:
/// `nabla_{d_i} e_a = sum_b Gamma[b][a][i] e_b`, stored as the
/// endomorphism-valued 1-form `Gamma[b][a] = sum_i Gamma[b][a][i] dx^i`.
#[derive(Clone, Debug)]
pub struct Connection {
    one_forms: EndForm,
}

impl Connection {
    pub fn flat(chart: Arc<Chart>, algebra: Arc<LieAlgebra>) -> Self {
        Self {
            one_forms: EndForm::zero(chart, algebra, 1),
        }
    }

    /// From `gamma[b][a][i]`.
    pub fn from_coefficients(
        chart: Arc<Chart>,
        algebra: Arc<LieAlgebra>,
        gamma: Vec<Vec<Vec<Expr>>>,
    ) -> Result<Self> {
        let n = algebra.dim();
        let m = chart.dim();
        if gamma.len() != n
            || gamma.iter().any(|r| r.len() != n || r.iter().any(|c| c.len() != m))
        {
            return Err(Error::ShapeMismatch(format!(
                "connection coefficients must be a {n}x{n}x{m} array"
            )));
        }
        let comps = gamma
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| ScalarForm::from_components(m, 1, c))
                    .collect()
            })
            .collect();
        Ok(Self {
            one_forms: EndForm::from_parts(chart, algebra, 1, comps),
        })
    }

    pub fn from_end_form(one_forms: EndForm) -> Result<Self> {
        if one_forms.degree() != 1 {
            return Err(Error::ShapeMismatch(
                "connection coefficients form an End-valued 1-form".into(),
            ));
        }
        Ok(Self { one_forms })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.one_forms.chart()
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        self.one_forms.algebra()
    }

    /// `Gamma[b][a][i]`.
    pub fn gamma(&self, b: usize, a: usize, i: usize) -> &Expr {
        &self.one_forms.entry(b, a).components()[i]
    }

    pub fn coefficients(&self) -> Vec<Vec<Vec<Expr>>> {
        self.one_forms
            .entries()
            .iter()
            .map(|r| r.iter().map(|c| c.components().to_vec()).collect())
            .collect()
    }

    pub fn as_end_form(&self) -> &EndForm {
        &self.one_forms
    }

    /// `nabla + D` for an End-valued 1-form `D`.
    pub fn shifted(&self, d: &EndForm) -> Result<Self> {
        Self::from_end_form(self.one_forms.add(d)?)
    }

    pub fn is_literal_flat(&self) -> bool {
        self.one_forms.expressions().all(Expr::is_zero)
    }

    pub fn expressions(&self) -> impl Iterator<Item = &Expr> {
        self.one_forms.expressions()
    }
}

/// Textual connection: `b -> a -> dx -> Gamma[b][a][x]`, 1-based fibre indices.
pub type ConnectionTable = BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>>;

impl Connection {
    pub fn to_table(&self) -> ConnectionTable {
        let chart = self.chart().clone();
        let names = chart.coordinate_names();
        let mut out = ConnectionTable::new();
        for (b, row) in self.one_forms.entries().iter().enumerate() {
            for (a, form) in row.iter().enumerate() {
                let entries: BTreeMap<String, String> = form
                    .components()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| !e.is_zero())
                    .map(|(i, e)| (format!("d{}", names[i]), e.display_with(names).to_string()))
                    .collect();
                if !entries.is_empty() {
                    out.entry((b + 1).to_string())
                        .or_default()
                        .insert((a + 1).to_string(), entries);
                }
            }
        }
        out
    }

    pub fn from_table(chart: Arc<Chart>, algebra: Arc<LieAlgebra>, table: &ConnectionTable) -> Result<Self> {
        let n = algebra.dim();
        let index = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|a| (1..=n).contains(a))
                .ok_or_else(|| Error::ShapeMismatch(format!("fibre index {s:?} is not in 1..={n}")))
        };
        let mut gamma = vec![vec![vec![Expr::zero(); chart.dim()]; n]; n];
        for (b, row) in table {
            let b = index(b)? - 1;
            for (a, entries) in row {
                let a = index(a)? - 1;
                for (slot, expr) in entries {
                    let tuple = parse_multi_index(&chart, slot)?;
                    if tuple.len() != 1 {
                        return Err(Error::ShapeMismatch(format!(
                            "connection coefficients are 1-forms, got {slot:?}"
                        )));
                    }
                    let i = tuple[0];
                    gamma[b][a][i] = gamma[b][a][i].add(&chart.parse(expr)?);
                }
            }
        }
        Self::from_coefficients(chart, algebra, gamma)
    }
}

/// Smooth map between charts given by its component expressions on the source.
#[derive(Clone, Debug)]
pub struct SmoothMap {
    source: Arc<Chart>,
    target: Arc<Chart>,
    comps: Vec<Expr>,
    jac: Vec<Vec<Expr>>,
}

impl SmoothMap {
    pub fn new(source: Arc<Chart>, target: Arc<Chart>, comps: Vec<Expr>) -> Result<Self> {
        if comps.len() != target.dim() {
            return Err(Error::ShapeMismatch(format!(
                "map has {} components, target has dimension {}",
                comps.len(),
                target.dim()
            )));
        }
        if let Some(bad) = comps.iter().find(|e| e.vars() >> source.dim() != 0) {
            return Err(Error::ShapeMismatch(format!(
                "map component {bad} uses coordinates beyond the source dimension"
            )));
        }
        let mut grad = Gradient::new(source.dim());
        let jac = comps
            .iter()
            .map(|c| (0..source.dim()).map(|m| grad.partial(c, m)).collect())
            .collect();
        Ok(Self {
            source,
            target,
            comps,
            jac,
        })
    }

    pub fn identity(chart: Arc<Chart>) -> Self {
        let comps = (0..chart.dim()).map(Expr::var).collect();
        Self::new(chart.clone(), chart, comps).expect("identity map is well formed")
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    /// `DX[j][mu] = d_mu X^j`.
    pub fn jacobian(&self) -> &[Vec<Expr>] {
        &self.jac
    }

    /// Image point and Jacobian at a source point.
    pub fn eval(&self, point: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), ExprError> {
        if point.len() != self.source.dim() {
            return Err(ExprError::PointDimension {
                expected: self.source.dim(),
                found: point.len(),
            });
        }
        let mut ev = Evaluator::new(point);
        let image = self.comps.iter().map(|c| ev.eval(c)).collect::<Result<_, _>>()?;
        let jac = self
            .jac
            .iter()
            .map(|row| row.iter().map(|e| ev.eval(e)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        Ok((image, jac))
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        same_chart(inner.target(), &self.source)?;
        let comps = self
            .comps
            .iter()
            .map(|c| c.substitute(inner.components()))
            .collect();
        SmoothMap::new(inner.source.clone(), self.target.clone(), comps)
    }
}
