use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprfield::{Chart, Evaluator, Expr};
use crate::forms::{
    ad_compose, ext_cov_deriv, wedge_bracket, Connection, FormTable, KForm, ScalarForm, SmoothMap,
};
use crate::gauge::{form_max_abs, Scenario};
use crate::liecore::{invariant_metric, pseudo_inverse, LieAlgebra};
use crate::tolerance;

use super::centre::{apply_fibre_matrix, centre_projector, closedness_check, dnabla_zeta};
use super::poincare::poincare_primitive;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// The invariant 3-form vanishes on the sampled region.
    LocallyZero,
    /// The invariant is nonzero but has a local centre-valued primitive.
    NonzeroRepresentativeButExact,
    /// The sampling box does not contain the origin; exactness is undecided.
    NotStarShapedDomain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    /// `d^nabla twist`.
    pub invariant: FormTable,
    pub invariant_max_coefficient: f64,
    pub centre_residual: f64,
    pub closedness_residual: f64,
    pub primitive: Option<FormTable>,
    pub exactness_residual: Option<f64>,
    pub verdict: Verdict,
}

/// Representative-level obstruction analysis on the scenario's target chart.
///
/// Closedness failure on a star-shaped chart is reported as `NotClosed`.
pub fn obstruction_report(s: &Scenario, target_points: &[Vec<f64>]) -> Result<ObstructionReport> {
    s.require_compatibility(target_points)?;
    let inv = dnabla_zeta(&s.connection, &s.twist, target_points)?;
    let closedness_residual = closedness_check(&s.connection, &s.twist, target_points)?;
    let max = form_max_abs(&inv.form, target_points)?;
    let mut report = ObstructionReport {
        invariant: inv.form.to_table(),
        invariant_max_coefficient: max,
        centre_residual: inv.centre_residual,
        closedness_residual,
        primitive: None,
        exactness_residual: None,
        verdict: Verdict::NotStarShapedDomain,
    };
    if !s.target.star_shaped_about_origin() {
        return Ok(report);
    }
    if closedness_residual > tolerance::CENTRE {
        return Err(Error::NotClosed {
            residual: closedness_residual,
        });
    }
    let centre = apply_fibre_matrix(&centre_projector(&s.algebra), &inv.form);
    let primitive = poincare_primitive(&centre, target_points)?;
    report.primitive = Some(primitive.form.to_table());
    report.exactness_residual = Some(primitive.residual);
    report.verdict = if max <= tolerance::IDENTITY {
        Verdict::LocallyZero
    } else {
        Verdict::NonzeroRepresentativeButExact
    };
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct InnerExtraction {
    pub lambda: KForm,
    /// Max |coefficient of nabla + ad o lambda| over points.
    pub residual: f64,
}

/// Writes `nabla = flat - ad o lambda` by inverting the adjoint map, which
/// needs a trivial centre.
pub fn extract_inner_lambda(nabla: &Connection, points: &[Vec<f64>]) -> Result<InnerExtraction> {
    let alg = nabla.algebra();
    let centre_dim = alg.centre_basis().ncols();
    if centre_dim > 0 {
        return Err(Error::CentreAmbiguity { centre_dim });
    }
    let n = alg.dim();
    let m = nabla.chart().dim();
    let pinv = pseudo_inverse(&alg.stacked_ad());
    let comps = (0..n)
        .map(|c| {
            let coeffs = (0..m)
                .map(|i| {
                    let terms: Vec<Expr> = (0..n * n)
                        .filter(|row| pinv[(c, *row)].abs() > 1e-14)
                        .map(|row| nabla.gamma(row / n, row % n, i).scale(-pinv[(c, row)]))
                        .collect();
                    Expr::sum(&terms)
                })
                .collect();
            ScalarForm::from_components(m, 1, coeffs)
        })
        .collect();
    let lambda = KForm::new(nabla.chart().clone(), alg.clone(), 1, comps)?;
    let flattened = nabla.shifted(&ad_compose(&lambda))?;
    let mut residual: f64 = 0.0;
    for p in points {
        let mut ev = Evaluator::new(p);
        for e in flattened.expressions() {
            residual = residual.max(ev.eval(e)?.abs());
        }
    }
    if residual > tolerance::COMPATIBILITY {
        return Err(Error::NotInnerValued { residual });
    }
    Ok(InnerExtraction { lambda, residual })
}

fn check_points(chart: &Chart) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    (0..16).map(|_| chart.sample_point(&mut rng, &[])).collect()
}

/// First centre basis vector with its largest entry made positive and
/// round-off cleaned.
fn centre_direction(alg: &LieAlgebra) -> Result<Vec<f64>> {
    let z = alg.centre_basis();
    if z.ncols() == 0 {
        return Err(Error::NoCentre);
    }
    let mut v: Vec<f64> = z.column(0).iter().copied().collect();
    let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    for x in &mut v {
        *x = if x.abs() < 1e-14 { 0.0 } else { *x * lead.signum() };
        if (*x - 1.0).abs() < 1e-14 {
            *x = 1.0;
        }
    }
    Ok(v)
}

/// A flat-connection scenario on `R^target_dim` whose centre-valued twist has
/// nonvanishing covariant derivative, so no redefinition can remove it.
///
/// Default twist: `x3 dx1 ^ dx2 (x) z` for the first centre direction `z`.
/// Spacetime is Minkowski `R^4` with coordinates `(t, x, y, z)` mapped to the
/// first target coordinates.
pub fn canonical_nonclassical(
    target_dim: usize,
    algebra: Arc<LieAlgebra>,
    twist: Option<KForm>,
) -> Result<Scenario> {
    let z = centre_direction(&algebra)?;
    if target_dim < 3 {
        return Err(Error::DimensionTooSmall {
            required: 3,
            found: target_dim,
        });
    }
    let target = Arc::new(Chart::euclidean(target_dim));
    let fibre_metric = invariant_metric(&algebra).ok_or_else(|| Error::PreconditionFailed {
        hypothesis: "algebra admits an ad-invariant fibre metric".into(),
        residual: f64::NAN,
    })?;
    let twist = match twist {
        Some(t) => t,
        None => {
            let base = ScalarForm::monomial(target_dim, 0b011, Expr::var(2));
            let comps = z.iter().map(|c| base.scale(*c)).collect();
            KForm::new(target.clone(), algebra.clone(), 2, comps)?
        }
    };
    let spacetime = Arc::new(Chart::with_names(
        ["t", "x", "y", "z"].map(String::from).to_vec(),
    )?);
    let map_comps = (0..target_dim)
        .map(|j| if j < 3 { Expr::var(j + 1) } else { Expr::zero() })
        .collect();
    let s = Scenario {
        spacetime: spacetime.clone(),
        spacetime_signs: vec![1.0, -1.0, -1.0, -1.0],
        target: target.clone(),
        target_metric: vec![1.0; target_dim],
        algebra: algebra.clone(),
        fibre_metric,
        connection: Connection::flat(target.clone(), algebra.clone()),
        twist,
        potential: Expr::zero(),
        map: SmoothMap::new(spacetime.clone(), target.clone(), map_comps)?,
        gauge_field: KForm::zero(spacetime, algebra, 1),
    };
    s.validate()?;
    let points = check_points(&target);
    let split = super::centre_project(&s.twist, &points)?;
    if split.residual > tolerance::EXACT {
        return Err(Error::PreconditionFailed {
            hypothesis: "twist is centre-valued".into(),
            residual: split.residual,
        });
    }
    let inv = dnabla_zeta(&s.connection, &s.twist, &points)?;
    let max = form_max_abs(&inv.form, &points)?;
    if max <= tolerance::IDENTITY {
        return Err(Error::PreconditionFailed {
            hypothesis: "twist has nonvanishing covariant derivative".into(),
            residual: max,
        });
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Max over points of the pointwise Euclidean norm of the redefined twist.
    pub max_norm: f64,
    pub min_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaCertificate {
    pub invariant_max_coefficient: f64,
    /// Set when the invariant is nonzero: it is unchanged by every
    /// redefinition and would vanish for a vanishing twist.
    pub issued: bool,
    pub trials: Vec<TrialOutcome>,
}

fn pointwise_norm(form: &KForm, ev: &mut Evaluator) -> Result<f64> {
    let mut sq = 0.0;
    for e in form.expressions() {
        sq += ev.eval(e)?.powi(2);
    }
    Ok(sq.sqrt())
}

/// Certificate that no redefinition removes the twist, plus the empirical
/// norms of the twist after each trial redefinition.
pub fn no_vanishing_zeta_certificate(
    s: &Scenario,
    trials: &[KForm],
    target_points: &[Vec<f64>],
) -> Result<ZetaCertificate> {
    let inv = ext_cov_deriv(&s.connection, &s.twist)?;
    let max = form_max_abs(&inv, target_points)?;
    let mut outcomes = Vec::with_capacity(trials.len());
    for lambda in trials {
        let redefined = s
            .twist
            .sub(&ext_cov_deriv(&s.connection, lambda)?)?
            .add(&wedge_bracket(lambda, lambda)?.scale(0.5))?;
        let mut max_norm: f64 = 0.0;
        let mut min_norm = f64::INFINITY;
        for p in target_points {
            let norm = pointwise_norm(&redefined, &mut Evaluator::new(p))?;
            max_norm = max_norm.max(norm);
            min_norm = min_norm.min(norm);
        }
        outcomes.push(TrialOutcome { max_norm, min_norm });
    }
    Ok(ZetaCertificate {
        invariant_max_coefficient: max,
        issued: max > tolerance::IDENTITY,
        trials: outcomes,
    })
}
