//! Field redefinitions `(A, twist, nabla) -> (A + X^! lambda,
//! twist - d^nabla lambda + 1/2 [lambda ^ lambda], nabla - ad o lambda)` and
//! the analysis downstream of them: compatibility, the centre-valued
//! invariant `d^nabla twist`, its local primitive, inner flattening and the
//! canonical non-classical scenarios.

mod centre;
mod construct;
mod poincare;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprfield::Evaluator;
use crate::forms::{
    ad_compose, derivation_residual, ext_cov_deriv, pullback_form, wedge_bracket, Connection,
    FormTable, KForm,
};
use crate::gauge::{field_strength, form_residual, Scenario};
use crate::tolerance::Residual;

pub use centre::{
    centre_project, check_compat_curvature, closedness_check, dnabla_zeta, solve_zeta, CentreSplit,
    InvariantForm, ZetaSolution,
};
pub use construct::{
    canonical_nonclassical, extract_inner_lambda, no_vanishing_zeta_certificate,
    obstruction_report, InnerExtraction, ObstructionReport, TrialOutcome, Verdict,
    ZetaCertificate,
};
pub use poincare::{poincare_primitive, Primitive, QUADRATURE_ORDER};

/// Redefines the gauge field, twist and connection by `lambda`; metrics,
/// potential and map are untouched.
pub fn apply_redefinition(s: &Scenario, lambda: &KForm) -> Result<Scenario> {
    if lambda.degree() != 1 {
        return Err(Error::ShapeMismatch("redefinition parameter must be a 1-form".into()));
    }
    if lambda.chart() != &s.target {
        return Err(Error::ChartMismatch("redefinition parameter must live on the target".into()));
    }
    if lambda.algebra() != &s.algebra {
        return Err(Error::AlgebraMismatch);
    }
    let gauge_field = s.gauge_field.add(&pullback_form(&s.map, lambda)?)?;
    let twist = s
        .twist
        .sub(&ext_cov_deriv(&s.connection, lambda)?)?
        .add(&wedge_bracket(lambda, lambda)?.scale(0.5))?;
    let connection = s.connection.shifted(&ad_compose(lambda).neg())?;
    Ok(Scenario {
        gauge_field,
        twist,
        connection,
        ..s.clone()
    })
}

/// Max |bracket-derivation defect| of a connection over target points.
pub fn check_compat_bracket(nabla: &Connection, points: &[Vec<f64>]) -> Result<f64> {
    derivation_residual(nabla, points)
}

/// Residuals use the relative measure `|a - b| / (1 + max(|a|, |b|))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RedefinitionReport {
    pub lambda: FormTable,
    pub field_strength_residual: f64,
    pub involution_residual: f64,
    pub compat_bracket_after: f64,
    pub compat_curvature_after: f64,
}

fn connection_residual(a: &Connection, b: &Connection, points: &[Vec<f64>]) -> Result<Residual> {
    let mut acc = Residual::default();
    for p in points {
        let mut ev = Evaluator::new(p);
        for (x, y) in a.expressions().zip(b.expressions()) {
            acc.record(ev.eval(x)?, ev.eval(y)?);
        }
    }
    Ok(acc)
}

/// Field-strength invariance, round trip through `-lambda` and preserved
/// compatibility, for a scenario that is compatible to begin with.
pub fn verify_redefinition(
    s: &Scenario,
    lambda: &KForm,
    spacetime_points: &[Vec<f64>],
    target_points: &[Vec<f64>],
) -> Result<RedefinitionReport> {
    s.require_compatibility(target_points)?;
    let redefined = apply_redefinition(s, lambda)?;
    let g_before = field_strength(s)?;
    let g_after = field_strength(&redefined)?;
    let field_strength_residual = form_residual(&g_before, &g_after, spacetime_points)?.relative;

    let back = apply_redefinition(&redefined, &lambda.neg())?;
    let mut round = form_residual(&s.gauge_field, &back.gauge_field, spacetime_points)?;
    round.merge(form_residual(&s.twist, &back.twist, target_points)?);
    round.merge(connection_residual(&s.connection, &back.connection, target_points)?);

    let after = redefined.compatibility(target_points)?;
    Ok(RedefinitionReport {
        lambda: lambda.to_table(),
        field_strength_residual,
        involution_residual: round.relative,
        compat_bracket_after: after.bracket,
        compat_curvature_after: after.curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprfield::{Chart, Expr};
    use crate::forms::{curvature, ScalarForm, SmoothMap};
    use crate::liecore::{FibreMetric, LieAlgebra};
    use std::sync::Arc;

    fn flat_scenario(alg: &str) -> Scenario {
        let c = Arc::new(Chart::euclidean(2));
        let alg = Arc::new(LieAlgebra::named(alg).unwrap());
        Scenario {
            spacetime: c.clone(),
            spacetime_signs: vec![1.0, 1.0],
            target: c.clone(),
            target_metric: vec![1.0, 1.0],
            algebra: alg.clone(),
            fibre_metric: FibreMetric::identity(alg.dim()),
            connection: Connection::flat(c.clone(), alg.clone()),
            twist: KForm::zero(c.clone(), alg.clone(), 2),
            potential: Expr::zero(),
            map: SmoothMap::identity(c.clone()),
            gauge_field: KForm::zero(c, alg, 1),
        }
    }

    #[test]
    fn su2_redefinition_matches_curvature() {
        let s = flat_scenario("su2");
        let c = s.target.clone();
        let lambda = KForm::along(
            c.clone(),
            s.algebra.clone(),
            2,
            ScalarForm::monomial(2, 0b10, c.parse("x").unwrap()),
        )
        .unwrap();
        let r = apply_redefinition(&s, &lambda).unwrap();
        assert_eq!(r.twist.component(2).components()[0].as_constant(), Some(-1.0));
        let mismatch = curvature(&r.connection).sub(&ad_compose(&r.twist)).unwrap();
        let mut ev = Evaluator::new(&[0.3, 0.2]);
        for e in mismatch.expressions() {
            assert_eq!(ev.eval(e).unwrap(), 0.0);
        }
    }

    #[test]
    fn abelian_redefinition_is_minus_d_lambda() {
        let s = flat_scenario("u1");
        let c = s.target.clone();
        let lambda = KForm::along(
            c.clone(),
            s.algebra.clone(),
            0,
            ScalarForm::from_components(2, 1, vec![c.parse("y^2").unwrap(), c.parse("x*y").unwrap()]),
        )
        .unwrap();
        let r = apply_redefinition(&s, &lambda).unwrap();
        assert!(r.connection.is_literal_flat());
        // -d(y^2 dx + xy dy) = -(y - 2y) dx^dy = y dx^dy
        assert_eq!(r.twist.component(0).components()[0].eval(&[0.5, 0.25]).unwrap(), 0.25);
        let pts = vec![vec![0.1, 0.4], vec![-0.6, 0.9]];
        let report = verify_redefinition(&s, &lambda, &pts, &pts).unwrap();
        assert!(report.field_strength_residual <= 1e-12);
        assert_eq!(report.involution_residual, 0.0);
    }

    #[test]
    fn zero_redefinition_changes_nothing() {
        let s = flat_scenario("su2");
        let zero = KForm::zero(s.target.clone(), s.algebra.clone(), 1);
        let pts = vec![vec![0.1, 0.4]];
        let report = verify_redefinition(&s, &zero, &pts, &pts).unwrap();
        assert_eq!(report.field_strength_residual, 0.0);
        assert_eq!(report.involution_residual, 0.0);
        assert_eq!(report.compat_bracket_after, 0.0);
        assert_eq!(report.compat_curvature_after, 0.0);
        assert!(report.lambda.is_empty());
    }
}
