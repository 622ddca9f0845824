use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::exprfield::{Evaluator, Expr};
use crate::forms::{KForm, ScalarForm};
use crate::tolerance;

/// Gauss-Legendre order of the homotopy integral; exact for integrands of
/// polynomial degree up to `2 * QUADRATURE_ORDER - 1` in `t`.
pub const QUADRATURE_ORDER: usize = 20;

/// Nodes and weights on `[0, 1]`.
fn unit_interval_rule() -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(QUADRATURE_ORDER).expect("nonzero order");
    GaussLegendre::new(order)
        .as_node_weight_pairs()
        .iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// `(K omega)(x) = int_0^1 t^(k-1) i_x omega(t x) dt`.
fn homotopy(form: &ScalarForm, rule: &[(f64, f64)]) -> ScalarForm {
    let dim = form.dim();
    let k = form.degree();
    let coords: Vec<Expr> = (0..dim).map(Expr::var).collect();
    let averaged = form.map(|f| {
        if f.is_zero() {
            return Expr::zero();
        }
        let terms: Vec<Expr> = rule
            .iter()
            .map(|(t, w)| {
                let scaled: Vec<Expr> = coords.iter().map(|c| c.scale(*t)).collect();
                f.substitute(&scaled).scale(w * t.powi(k as i32 - 1))
            })
            .collect();
        Expr::sum(&terms)
    });
    averaged.radial_contraction(&coords)
}

#[derive(Clone, Debug)]
pub struct Primitive {
    pub form: KForm,
    /// Max |d(K omega) - omega| over the verification points.
    pub residual: f64,
}

/// Primitive of a closed form on a chart whose sampling box is star-shaped
/// about the origin, computed fibre component by fibre component and checked
/// by differentiating it back.
pub fn poincare_primitive(omega: &KForm, points: &[Vec<f64>]) -> Result<Primitive> {
    if omega.degree() == 0 {
        return Err(Error::ShapeMismatch("a primitive needs a form of degree at least 1".into()));
    }
    if !omega.chart().star_shaped_about_origin() {
        return Err(Error::PreconditionFailed {
            hypothesis: "domain is star-shaped about the origin".into(),
            residual: f64::NAN,
        });
    }
    let closedness = omega.map(ScalarForm::d);
    let mut not_closed: f64 = 0.0;
    for p in points {
        let mut ev = Evaluator::new(p);
        for e in closedness.expressions() {
            not_closed = not_closed.max(ev.eval(e)?.abs());
        }
    }
    if not_closed > tolerance::CENTRE {
        return Err(Error::NotClosed { residual: not_closed });
    }
    let rule = unit_interval_rule();
    let comps = omega.components().iter().map(|c| homotopy(c, &rule)).collect();
    let form = KForm::new(omega.chart().clone(), omega.algebra().clone(), omega.degree() - 1, comps)?;
    let back = form.map(ScalarForm::d);
    let mut residual: f64 = 0.0;
    for p in points {
        let mut ev = Evaluator::new(p);
        for (a, b) in back.expressions().zip(omega.expressions()) {
            let gap = (ev.eval(a)? - ev.eval(b)?).abs();
            residual = residual.max(if gap.is_nan() { f64::INFINITY } else { gap });
        }
    }
    if residual > tolerance::QUADRATURE_GATE {
        return Err(Error::QuadratureDegradation { residual });
    }
    Ok(Primitive { form, residual })
}
