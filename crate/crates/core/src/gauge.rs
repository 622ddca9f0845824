//! Gauge scenarios on a trivialized Lie algebra bundle and the physical
//! objects built from them: field strength, infinitesimal gauge
//! transformations, the Yang-Mills-Higgs Lagrangian density and the Bianchi
//! defect.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprfield::{Chart, Evaluator, Expr};
use crate::forms::{
    ad_compose, curvature, derivation_residual, ext_cov_deriv, hodge_star_scalar,
    pullback_connection, pullback_form, wedge_bracket, Connection, KForm, ScalarForm, SmoothMap,
};
use crate::liecore::{FibreMetric, LieAlgebra};
use crate::tolerance::{self, Residual};

/// A complete gauge configuration.
///
/// `twist` is the 2-form on the target whose adjoint action must equal the
/// connection's curvature. The gauge field lives on spacetime in the
/// pulled-back working frame, so brackets use the same constants.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spacetime: Arc<Chart>,
    /// Diagonal of the constant spacetime metric.
    pub spacetime_signs: Vec<f64>,
    pub target: Arc<Chart>,
    /// Diagonal of the constant target metric.
    pub target_metric: Vec<f64>,
    pub algebra: Arc<LieAlgebra>,
    pub fibre_metric: FibreMetric,
    pub connection: Connection,
    pub twist: KForm,
    pub potential: Expr,
    pub map: SmoothMap,
    pub gauge_field: KForm,
}

/// Residuals of the two compatibility conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Compatibility {
    /// The connection differentiates the bracket.
    pub bracket: f64,
    /// `R_nabla = ad o twist`.
    pub curvature: f64,
}

impl Compatibility {
    pub fn holds(&self, tol: f64) -> bool {
        self.bracket <= tol && self.curvature <= tol
    }

    fn require(&self, tol: f64) -> Result<()> {
        if self.bracket > tol {
            return Err(Error::PreconditionFailed {
                hypothesis: "connection differentiates the bracket".into(),
                residual: self.bracket,
            });
        }
        if self.curvature > tol {
            return Err(Error::PreconditionFailed {
                hypothesis: "curvature equals ad of the twist".into(),
                residual: self.curvature,
            });
        }
        Ok(())
    }
}

fn check_signs(signs: &[f64], chart: &Chart, what: &str, positive: bool) -> Result<()> {
    if signs.len() != chart.dim() {
        return Err(Error::MetricDimensionMismatch {
            expected: chart.dim(),
            found: signs.len(),
        });
    }
    let ok = signs
        .iter()
        .all(|s| if positive { *s > 0.0 } else { *s == 1.0 || *s == -1.0 });
    if !ok {
        return Err(Error::ShapeMismatch(format!("{what} metric entries are invalid: {signs:?}")));
    }
    Ok(())
}

impl Scenario {
    /// Validates chart, algebra and degree consistency of every field.
    pub fn validate(&self) -> Result<()> {
        check_signs(&self.spacetime_signs, &self.spacetime, "spacetime", false)?;
        check_signs(&self.target_metric, &self.target, "target", true)?;
        if self.fibre_metric.dim() != self.algebra.dim() {
            return Err(Error::ShapeMismatch(format!(
                "fibre metric is {0}x{0} for a {1}-dimensional algebra",
                self.fibre_metric.dim(),
                self.algebra.dim()
            )));
        }
        let on = |c: &Arc<Chart>, want: &Arc<Chart>, what: &str| -> Result<()> {
            if c == want {
                Ok(())
            } else {
                Err(Error::ChartMismatch(format!("{what} lives on the wrong chart")))
            }
        };
        on(self.connection.chart(), &self.target, "connection")?;
        on(self.twist.chart(), &self.target, "twist")?;
        on(self.map.target(), &self.target, "map target")?;
        on(self.map.source(), &self.spacetime, "map source")?;
        on(self.gauge_field.chart(), &self.spacetime, "gauge field")?;
        for alg in [
            self.connection.algebra(),
            self.twist.algebra(),
            self.gauge_field.algebra(),
        ] {
            if alg != &self.algebra {
                return Err(Error::AlgebraMismatch);
            }
        }
        if self.twist.degree() != 2 {
            return Err(Error::ShapeMismatch("twist must be a 2-form".into()));
        }
        if self.gauge_field.degree() != 1 {
            return Err(Error::ShapeMismatch("gauge field must be a 1-form".into()));
        }
        if self.potential.vars() >> self.target.dim() != 0 {
            return Err(Error::ShapeMismatch(
                "potential uses coordinates beyond the target dimension".into(),
            ));
        }
        Ok(())
    }

    pub fn with_gauge_field(&self, gauge_field: KForm) -> Self {
        Self {
            gauge_field,
            ..self.clone()
        }
    }

    /// `R_nabla - ad o twist`, entry-wise.
    pub fn curvature_mismatch(&self) -> Result<crate::forms::EndForm> {
        curvature(&self.connection).sub(&ad_compose(&self.twist))
    }

    /// Both compatibility residuals, maximised over target points.
    pub fn compatibility(&self, target_points: &[Vec<f64>]) -> Result<Compatibility> {
        let bracket = derivation_residual(&self.connection, target_points)?;
        let mismatch = self.curvature_mismatch()?;
        let mut worst: f64 = 0.0;
        for p in target_points {
            let mut ev = Evaluator::new(p);
            for e in mismatch.expressions() {
                worst = worst.max(ev.eval(e)?.abs());
            }
        }
        Ok(Compatibility {
            bracket,
            curvature: worst,
        })
    }

    pub fn require_compatibility(&self, target_points: &[Vec<f64>]) -> Result<Compatibility> {
        let c = self.compatibility(target_points)?;
        c.require(tolerance::COMPATIBILITY)?;
        Ok(c)
    }

    /// Expressions that must be finite at spacetime sample points.
    fn spacetime_fields(&self) -> Vec<Expr> {
        self.map
            .components()
            .iter()
            .chain(self.gauge_field.expressions())
            .cloned()
            .collect()
    }

    fn target_fields(&self) -> Vec<Expr> {
        self.connection
            .expressions()
            .chain(self.twist.expressions())
            .chain(std::iter::once(&self.potential))
            .cloned()
            .collect()
    }

    pub fn sample_spacetime<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
        let fields = self.spacetime_fields();
        (0..count)
            .map(|_| self.spacetime.sample_point(rng, &fields))
            .collect()
    }

    pub fn sample_target<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
        let fields = self.target_fields();
        (0..count)
            .map(|_| self.target.sample_point(rng, &fields))
            .collect()
    }

    /// The connection pulled back along the map.
    pub fn pulled_connection(&self) -> Result<Connection> {
        pullback_connection(&self.map, &self.connection)
    }
}

/// Worst gap between two forms' coefficients over sample points.
pub fn form_residual(a: &KForm, b: &KForm, points: &[Vec<f64>]) -> Result<Residual> {
    if a.degree() != b.degree() || a.components().len() != b.components().len() {
        return Err(Error::ShapeMismatch("compared forms differ in shape".into()));
    }
    let mut acc = Residual::default();
    for p in points {
        let mut ev = Evaluator::new(p);
        for (x, y) in a.expressions().zip(b.expressions()) {
            acc.record(ev.eval(x)?, ev.eval(y)?);
        }
    }
    Ok(acc)
}

/// Largest coefficient magnitude over sample points.
pub fn form_max_abs(a: &KForm, points: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let mut ev = Evaluator::new(p);
        for x in a.expressions() {
            worst = worst.max(ev.eval(x)?.abs());
        }
    }
    Ok(worst)
}

fn field_strength_with(s: &Scenario, pulled: &Connection, gauge_field: &KForm) -> Result<KForm> {
    let d_a = ext_cov_deriv(pulled, gauge_field)?;
    let aa = wedge_bracket(gauge_field, gauge_field)?.scale(0.5);
    let twist = pullback_form(&s.map, &s.twist)?;
    d_a.add(&aa)?.add(&twist)
}

/// `G = d^{X*nabla} A + 1/2 [A ^ A] + X^! twist`.
pub fn field_strength(s: &Scenario) -> Result<KForm> {
    field_strength_with(s, &s.pulled_connection()?, &s.gauge_field)
}

fn check_generator(s: &Scenario, generator: &KForm) -> Result<()> {
    if generator.degree() != 0 {
        return Err(Error::ShapeMismatch("gauge generator must be a 0-form".into()));
    }
    if generator.chart() != &s.spacetime {
        return Err(Error::ChartMismatch("gauge generator must live on spacetime".into()));
    }
    Ok(())
}

fn gauge_variation_a_with(s: &Scenario, pulled: &Connection, generator: &KForm) -> Result<KForm> {
    check_generator(s, generator)?;
    wedge_bracket(generator, &s.gauge_field)?.sub(&ext_cov_deriv(pulled, generator)?)
}

/// `delta A = [eps, A] - d^{X*nabla} eps`; the map is never varied.
pub fn gauge_variation_a(s: &Scenario, generator: &KForm) -> Result<KForm> {
    gauge_variation_a_with(s, &s.pulled_connection()?, generator)
}

/// Both faces of the covariance of `G`.
#[derive(Clone, Debug)]
pub struct GaugeVariation {
    /// `d/dt G(A + t delta A)` at `t = 0`.
    pub numeric: KForm,
    /// `[eps, G]`.
    pub algebraic: KForm,
    pub residual: Residual,
}

/// `G(A + t delta A)` is quadratic in `t`, so the symmetric difference at
/// `t = 1/2` is its exact derivative at zero.
pub fn gauge_variation_g(
    s: &Scenario,
    generator: &KForm,
    points: &[Vec<f64>],
) -> Result<GaugeVariation> {
    let pulled = s.pulled_connection()?;
    let delta = gauge_variation_a_with(s, &pulled, generator)?;
    let half = delta.scale(0.5);
    let plus = field_strength_with(s, &pulled, &s.gauge_field.add(&half)?)?;
    let minus = field_strength_with(s, &pulled, &s.gauge_field.sub(&half)?)?;
    let numeric = plus.sub(&minus)?;
    let algebraic = wedge_bracket(generator, &field_strength_with(s, &pulled, &s.gauge_field)?)?;
    let residual = form_residual(&numeric, &algebraic, points)?;
    Ok(GaugeVariation {
        numeric,
        algebraic,
        residual,
    })
}

/// Top-degree coefficient of `left ^ *right`.
fn star_pairing(signs: &[f64], left: &ScalarForm, right: &ScalarForm) -> Result<Expr> {
    let top = left.wedge(&hodge_star_scalar(signs, right)?);
    Ok(top.components().first().cloned().unwrap_or_else(Expr::zero))
}

fn density_with(s: &Scenario, g: &KForm) -> Result<Expr> {
    let eta = &s.spacetime_signs;
    let kappa = s.fibre_metric.matrix();
    let mut terms = Vec::new();
    let n = s.algebra.dim();
    for a in 0..n {
        for b in 0..n {
            let k = kappa[(a, b)];
            if k == 0.0 || g.component(a).is_literal_zero() || g.component(b).is_literal_zero() {
                continue;
            }
            terms.push(star_pairing(eta, g.component(a), g.component(b))?.scale(-0.5 * k));
        }
    }
    let m = s.spacetime.dim();
    for (j, row) in s.map.jacobian().iter().enumerate() {
        let dx = ScalarForm::from_components(m, 1, row.clone());
        if dx.is_literal_zero() {
            continue;
        }
        terms.push(star_pairing(eta, &dx, &dx)?.scale(s.target_metric[j]));
    }
    let volume = hodge_star_scalar(eta, &ScalarForm::function(m, s.potential.substitute(s.map.components())))?;
    terms.push(volume.components()[0].clone());
    Ok(Expr::sum(&terms))
}

/// Coefficient of the oriented volume form `dx^1 ^ .. ^ dx^m` in
/// `-1/2 kappa(G ^ *G) + g(DX ^ *DX) + *(V o X)`.
pub fn lagrangian_density(s: &Scenario) -> Result<Expr> {
    density_with(s, &field_strength(s)?)
}

/// Requires an ad-invariant fibre metric and both compatibility conditions.
pub fn require_gauge_hypotheses(s: &Scenario, target_points: &[Vec<f64>]) -> Result<()> {
    let invariance = s.algebra.check_ad_invariance(&s.fibre_metric)?;
    if invariance > tolerance::COMPATIBILITY {
        return Err(Error::PreconditionFailed {
            hypothesis: "fibre metric is ad-invariant".into(),
            residual: invariance,
        });
    }
    s.require_compatibility(target_points)?;
    Ok(())
}

/// Exact `t`-derivative at zero of the density along `A + t delta A`.
///
/// The density is quartic in `t`; the five-point stencil with `h = 1/2` is
/// exact through degree five.
pub fn gauge_invariance_residual(
    s: &Scenario,
    generator: &KForm,
    spacetime_points: &[Vec<f64>],
    target_points: &[Vec<f64>],
) -> Result<f64> {
    require_gauge_hypotheses(s, target_points)?;
    let pulled = s.pulled_connection()?;
    let delta = gauge_variation_a_with(s, &pulled, generator)?;
    let density_at = |t: f64| -> Result<Expr> {
        let a = s.gauge_field.add(&delta.scale(t))?;
        density_with(s, &field_strength_with(s, &pulled, &a)?)
    };
    let h = 0.5;
    let (p1, m1, p2, m2) = (density_at(h)?, density_at(-h)?, density_at(2.0 * h)?, density_at(-2.0 * h)?);
    let mut worst: f64 = 0.0;
    for p in spacetime_points {
        let mut ev = Evaluator::new(p);
        let derivative = (8.0 * (ev.eval(&p1)? - ev.eval(&m1)?) - (ev.eval(&p2)? - ev.eval(&m2)?)) / (12.0 * h);
        if derivative.is_nan() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(derivative.abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct BianchiDefect {
    /// `d^{X*nabla} G + [A ^ G]`.
    pub defect: KForm,
    /// `X^!(d^nabla twist)`.
    pub predicted: KForm,
    pub residual: Residual,
}

pub fn bianchi_defect(
    s: &Scenario,
    spacetime_points: &[Vec<f64>],
    target_points: &[Vec<f64>],
) -> Result<BianchiDefect> {
    s.require_compatibility(target_points)?;
    let pulled = s.pulled_connection()?;
    let g = field_strength_with(s, &pulled, &s.gauge_field)?;
    let defect = ext_cov_deriv(&pulled, &g)?.add(&wedge_bracket(&s.gauge_field, &g)?)?;
    let predicted = pullback_form(&s.map, &ext_cov_deriv(&s.connection, &s.twist)?)?;
    let residual = form_residual(&defect, &predicted, spacetime_points)?;
    Ok(BianchiDefect {
        defect,
        predicted,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::SmoothMap;

    fn abelian_plane(gauge: &str) -> Scenario {
        let m = Arc::new(Chart::euclidean(2));
        let n = Arc::new(Chart::euclidean(1));
        let alg = Arc::new(LieAlgebra::named("u1").unwrap());
        let a = KForm::new(
            m.clone(),
            alg.clone(),
            1,
            vec![ScalarForm::from_components(2, 1, vec![Expr::zero(), m.parse(gauge).unwrap()])],
        )
        .unwrap();
        Scenario {
            spacetime: m.clone(),
            spacetime_signs: vec![1.0, 1.0],
            target: n.clone(),
            target_metric: vec![1.0],
            algebra: alg.clone(),
            fibre_metric: FibreMetric::identity(1),
            connection: Connection::flat(n.clone(), alg.clone()),
            twist: KForm::zero(n.clone(), alg, 2),
            potential: Expr::zero(),
            map: SmoothMap::new(m, n, vec![Expr::constant(0.3)]).unwrap(),
            gauge_field: a,
        }
    }

    #[test]
    fn abelian_density_is_minus_half() {
        let s = abelian_plane("x");
        s.validate().unwrap();
        let l = lagrangian_density(&s).unwrap();
        assert_eq!(l.eval(&[0.2, 0.9]).unwrap(), -0.5);
    }

    #[test]
    fn potential_only_density() {
        let mut s = abelian_plane("0");
        s.potential = Expr::constant(2.5);
        assert_eq!(lagrangian_density(&s).unwrap().eval(&[0.1, 0.1]).unwrap(), 2.5);
    }

    #[test]
    fn star_pairing_matches_metric_pairing() {
        let signs = [1.0, -1.0, -1.0, -1.0];
        let c = Chart::euclidean(4);
        let f = ScalarForm::from_components(
            4,
            2,
            ["x", "y", "x*z", "1", "t", "y^2"].iter().map(|e| c.parse(e).unwrap()).collect(),
        );
        let direct = crate::forms::metric_pairing(&signs, &f, &f).unwrap();
        let star = star_pairing(&signs, &f, &f).unwrap();
        let p = [0.3, -0.2, 0.8, 0.5];
        assert!((direct.eval(&p).unwrap() - star.eval(&p).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn su2_variation_of_constant_generator() {
        let c = Arc::new(Chart::euclidean(2));
        let alg = Arc::new(LieAlgebra::named("su2").unwrap());
        let a = KForm::along(c.clone(), alg.clone(), 0, ScalarForm::monomial(2, 1, Expr::one())).unwrap();
        let s = Scenario {
            spacetime: c.clone(),
            spacetime_signs: vec![1.0, 1.0],
            target: c.clone(),
            target_metric: vec![1.0, 1.0],
            algebra: alg.clone(),
            fibre_metric: FibreMetric::identity(3),
            connection: Connection::flat(c.clone(), alg.clone()),
            twist: KForm::zero(c.clone(), alg.clone(), 2),
            potential: Expr::zero(),
            map: SmoothMap::identity(c.clone()),
            gauge_field: a,
        };
        let eps = KForm::constant_section(c.clone(), alg, &[0.0, 0.0, 1.0]);
        let d = gauge_variation_a(&s, &eps).unwrap();
        assert_eq!(d.component(1).components()[0].as_constant(), Some(1.0));
        assert!(d.component(0).is_literal_zero() && d.component(2).is_literal_zero());
    }
}
