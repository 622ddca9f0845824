use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprfield::{Evaluator, Expr};
use crate::forms::{ad_compose, curvature, derivation_residual, ext_cov_deriv, Connection, KForm, ScalarForm};
use crate::liecore::{pseudo_inverse, LieAlgebra};
use crate::tolerance;

/// Entries below this are treated as exact zeros when building symbolic
/// linear combinations from numeric projectors.
const CLEAN: f64 = 1e-14;

/// Max |R_nabla - ad o twist| over target points.
pub fn check_compat_curvature(nabla: &Connection, twist: &KForm, points: &[Vec<f64>]) -> Result<f64> {
    let mismatch = curvature(nabla).sub(&ad_compose(twist))?;
    let mut worst: f64 = 0.0;
    for p in points {
        let mut ev = Evaluator::new(p);
        for e in mismatch.expressions() {
            worst = worst.max(ev.eval(e)?.abs());
        }
    }
    Ok(worst)
}

fn require_compat(nabla: &Connection, twist: &KForm, points: &[Vec<f64>]) -> Result<()> {
    let bracket = derivation_residual(nabla, points)?;
    if bracket > tolerance::COMPATIBILITY {
        return Err(Error::PreconditionFailed {
            hypothesis: "connection differentiates the bracket".into(),
            residual: bracket,
        });
    }
    let curv = check_compat_curvature(nabla, twist, points)?;
    if curv > tolerance::COMPATIBILITY {
        return Err(Error::PreconditionFailed {
            hypothesis: "curvature equals ad of the twist".into(),
            residual: curv,
        });
    }
    Ok(())
}

/// Minimum-norm pointwise solutions of `ad(v) = R_slot`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaSolution {
    /// `samples[point][slot][a]`, slots in lexicographic order of `i < j`.
    pub samples: Vec<Vec<Vec<f64>>>,
    pub residual: f64,
}

/// Solves the curvature condition for a twist at each point by least
/// squares on the stacked adjoint map; the answer is unique up to the centre.
pub fn solve_zeta(nabla: &Connection, points: &[Vec<f64>]) -> Result<ZetaSolution> {
    let alg = nabla.algebra();
    let n = alg.dim();
    let stacked = alg.stacked_ad();
    let pinv = pseudo_inverse(&stacked);
    let r = curvature(nabla);
    let slots = crate::forms::multiindex::count(nabla.chart().dim(), 2);
    let mut samples = Vec::with_capacity(points.len());
    let mut residual: f64 = 0.0;
    for p in points {
        let values = r.eval(&mut Evaluator::new(p))?;
        let mut per_slot = Vec::with_capacity(slots);
        for slot in 0..slots {
            let rhs = DVector::from_fn(n * n, |row, _| values[row / n][row % n][slot]);
            let v = &pinv * &rhs;
            let defect = (&stacked * &v - &rhs).amax();
            residual = residual.max(defect);
            per_slot.push(v.iter().copied().collect());
        }
        samples.push(per_slot);
    }
    if residual > tolerance::COMPATIBILITY {
        return Err(Error::NotInAdjointImage { residual });
    }
    Ok(ZetaSolution { samples, residual })
}

/// `d^nabla twist` together with how far it leaves the centre.
#[derive(Clone, Debug)]
pub struct InvariantForm {
    pub form: KForm,
    /// Max |ad(value)| over points and 3-form slots.
    pub centre_residual: f64,
}

pub fn dnabla_zeta(nabla: &Connection, twist: &KForm, points: &[Vec<f64>]) -> Result<InvariantForm> {
    require_compat(nabla, twist, points)?;
    let form = ext_cov_deriv(nabla, twist)?;
    let alg = twist.algebra();
    let mut centre_residual: f64 = 0.0;
    for p in points {
        let values = form.eval(&mut Evaluator::new(p))?;
        let slots = values.first().map_or(0, Vec::len);
        for slot in 0..slots {
            let v: Vec<f64> = values.iter().map(|c| c[slot]).collect();
            centre_residual = centre_residual.max(alg.ad_matrix(&v)?.amax());
        }
    }
    Ok(InvariantForm {
        form,
        centre_residual,
    })
}

/// Orthogonal projector onto the centre, with negligible entries zeroed.
pub(crate) fn centre_projector(alg: &LieAlgebra) -> DMatrix<f64> {
    let z = alg.centre_basis();
    let mut p = &z * z.transpose();
    p.apply(|x| {
        if x.abs() < CLEAN {
            *x = 0.0
        }
    });
    p
}

/// Applies a constant fibre matrix to every component of a form.
pub(crate) fn apply_fibre_matrix(m: &DMatrix<f64>, omega: &KForm) -> KForm {
    let n = omega.algebra().dim();
    let dim = omega.chart().dim();
    let comps = (0..n)
        .map(|a| {
            (0..n)
                .filter(|b| m[(a, *b)] != 0.0)
                .fold(ScalarForm::zero(dim, omega.degree()), |acc, b| {
                    acc.add(&omega.component(b).scale(m[(a, b)]))
                })
        })
        .collect();
    KForm::new(omega.chart().clone(), omega.algebra().clone(), omega.degree(), comps)
        .expect("projection preserves shape")
}

#[derive(Clone, Debug)]
pub struct CentreSplit {
    pub centre: KForm,
    pub complement: KForm,
    /// Max |complement coefficient| over points.
    pub residual: f64,
}

/// Pointwise orthogonal projection onto the centre of the algebra.
pub fn centre_project(omega: &KForm, points: &[Vec<f64>]) -> Result<CentreSplit> {
    let p = centre_projector(omega.algebra());
    let centre = apply_fibre_matrix(&p, omega);
    let complement = omega.sub(&centre)?;
    let mut residual: f64 = 0.0;
    for pt in points {
        let mut ev = Evaluator::new(pt);
        for e in complement.expressions() {
            residual = residual.max(ev.eval(e)?.abs());
        }
    }
    Ok(CentreSplit {
        centre,
        complement,
        residual,
    })
}

/// Max |nabla z| over points for each centre basis vector `z`: the
/// connection must restrict to the trivial flat connection on the centre.
pub(crate) fn centre_flatness(nabla: &Connection, points: &[Vec<f64>]) -> Result<f64> {
    let alg = nabla.algebra();
    let z = alg.centre_basis();
    let n = alg.dim();
    let m = nabla.chart().dim();
    let mut exprs: Vec<Expr> = Vec::new();
    for k in 0..z.ncols() {
        for b in 0..n {
            for i in 0..m {
                let terms: Vec<Expr> = (0..n)
                    .filter(|a| z[(*a, k)].abs() > CLEAN)
                    .map(|a| nabla.gamma(b, a, i).scale(z[(a, k)]))
                    .collect();
                exprs.push(Expr::sum(&terms));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for p in points {
        let mut ev = Evaluator::new(p);
        for e in &exprs {
            worst = worst.max(ev.eval(e)?.abs());
        }
    }
    Ok(worst)
}

/// `d^Xi(d^nabla twist)`: the plain exterior derivative of the centre part in
/// the parallel centre frame; returns its max |coefficient|.
pub fn closedness_check(nabla: &Connection, twist: &KForm, points: &[Vec<f64>]) -> Result<f64> {
    require_compat(nabla, twist, points)?;
    let flat = centre_flatness(nabla, points)?;
    if flat > tolerance::COMPATIBILITY {
        return Err(Error::PreconditionFailed {
            hypothesis: "connection is trivial on the centre".into(),
            residual: flat,
        });
    }
    let dnz = ext_cov_deriv(nabla, twist)?;
    let centre = apply_fibre_matrix(&centre_projector(twist.algebra()), &dnz);
    let closed = centre.map(ScalarForm::d);
    let mut worst: f64 = 0.0;
    for p in points {
        let mut ev = Evaluator::new(p);
        for e in closed.expressions() {
            worst = worst.max(ev.eval(e)?.abs());
        }
    }
    Ok(worst)
}
