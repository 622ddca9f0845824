//! Slow reference evaluations of the graded products, pullbacks and the
//! exterior covariant derivative, written directly from their
//! permutation-sum and invariant definitions. They act on numeric values at a
//! single point and never touch the coordinate formulas in `ops`.

use crate::error::Result;
use crate::exprfield::{Evaluator, ExprError};
use crate::liecore::LieAlgebra;

use super::multiindex::{factorial, permutations};
use super::{contract, Connection, EndForm, Gradient, KForm};

/// A multilinear alternating map evaluated on tangent vectors, with values
/// in a fixed-length real vector (fibre or flattened endomorphism).
pub trait Alternating {
    fn degree(&self) -> usize;
    fn apply(&self, vectors: &[&[f64]]) -> Vec<f64>;
}

/// Numeric component values of a form at one point.
#[derive(Clone, Debug)]
pub struct PointForm {
    pub dim: usize,
    pub degree: usize,
    /// `values[a][I]`; endomorphism forms are flattened row-major as `a * n + b`.
    pub values: Vec<Vec<f64>>,
}

impl PointForm {
    pub fn of_kform(omega: &KForm, ev: &mut Evaluator) -> Result<Self, ExprError> {
        Ok(Self {
            dim: omega.chart().dim(),
            degree: omega.degree(),
            values: omega.eval(ev)?,
        })
    }

    pub fn of_end_form(t: &EndForm, ev: &mut Evaluator) -> Result<Self, ExprError> {
        Ok(Self {
            dim: t.chart().dim(),
            degree: t.degree(),
            values: t.eval(ev)?.into_iter().flatten().collect(),
        })
    }
}

impl Alternating for PointForm {
    fn degree(&self) -> usize {
        self.degree
    }

    fn apply(&self, vectors: &[&[f64]]) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| contract(v, self.dim, self.degree, vectors))
            .collect()
    }
}

/// `omega_{X(p)}(DX Y_1, .., DX Y_l)`: the target form evaluated at the image
/// point on pushed-forward vectors.
pub struct Pushforward<'a> {
    pub at_image: &'a dyn Alternating,
    /// `DX[j][mu]` at `p`.
    pub jacobian: Vec<Vec<f64>>,
}

impl Alternating for Pushforward<'_> {
    fn degree(&self) -> usize {
        self.at_image.degree()
    }

    fn apply(&self, vectors: &[&[f64]]) -> Vec<f64> {
        let pushed: Vec<Vec<f64>> = vectors
            .iter()
            .map(|y| {
                self.jacobian
                    .iter()
                    .map(|row| row.iter().zip(y.iter()).map(|(d, v)| d * v).sum())
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = pushed.iter().map(Vec::as_slice).collect();
        self.at_image.apply(&refs)
    }
}

fn split_sum(
    left: usize,
    right: usize,
    vectors: &[&[f64]],
    mut term: impl FnMut(&[&[f64]], &[&[f64]]) -> Vec<f64>,
    len: usize,
) -> Vec<f64> {
    assert_eq!(vectors.len(), left + right, "vector count must equal total degree");
    let mut out = vec![0.0; len];
    let norm = factorial(left) * factorial(right);
    for (perm, sign) in permutations(left + right) {
        let permuted: Vec<&[f64]> = perm.iter().map(|&i| vectors[i]).collect();
        let t = term(&permuted[..left], &permuted[left..]);
        for (o, v) in out.iter_mut().zip(t) {
            *o += sign * v / norm;
        }
    }
    out
}

/// `[omega ^ psi](Y) = 1/(l! k!) sum_sigma sgn(sigma) [omega(Y_sigma..), psi(Y_sigma..)]`.
pub fn bracket(
    alg: &LieAlgebra,
    omega: &dyn Alternating,
    psi: &dyn Alternating,
    vectors: &[&[f64]],
) -> Vec<f64> {
    split_sum(
        omega.degree(),
        psi.degree(),
        vectors,
        |l, r| {
            alg.bracket(&omega.apply(l), &psi.apply(r))
                .expect("fibre values have algebra dimension")
        },
        alg.dim(),
    )
}

/// `(T ^ omega)(Y) = 1/(m! l!) sum_sigma sgn(sigma) T(Y_sigma..)(omega(Y_sigma..))`
/// with `t` flattened row-major over an `n x n` endomorphism.
pub fn end_action(n: usize, t: &dyn Alternating, omega: &dyn Alternating, vectors: &[&[f64]]) -> Vec<f64> {
    split_sum(
        t.degree(),
        omega.degree(),
        vectors,
        |l, r| {
            let m = t.apply(l);
            let v = omega.apply(r);
            (0..n)
                .map(|a| (0..n).map(|b| m[a * n + b] * v[b]).sum())
                .collect()
        },
        n,
    )
}

/// Scalar wedge `(f ^ g)(Y)` from the permutation sum.
pub fn scalar_wedge(f: &dyn Alternating, g: &dyn Alternating, vectors: &[&[f64]]) -> f64 {
    split_sum(
        f.degree(),
        g.degree(),
        vectors,
        |l, r| vec![f.apply(l)[0] * g.apply(r)[0]],
        1,
    )[0]
}

/// Oracle bracket of two alternating maps.
pub struct Bracket<'a> {
    pub algebra: &'a LieAlgebra,
    pub left: &'a dyn Alternating,
    pub right: &'a dyn Alternating,
}

impl Alternating for Bracket<'_> {
    fn degree(&self) -> usize {
        self.left.degree() + self.right.degree()
    }

    fn apply(&self, vectors: &[&[f64]]) -> Vec<f64> {
        bracket(self.algebra, self.left, self.right, vectors)
    }
}

/// Oracle action of an endomorphism-valued map on a fibre-valued one.
pub struct EndAction<'a> {
    pub fibre_dim: usize,
    pub end: &'a dyn Alternating,
    pub form: &'a dyn Alternating,
}

impl Alternating for EndAction<'_> {
    fn degree(&self) -> usize {
        self.end.degree() + self.form.degree()
    }

    fn apply(&self, vectors: &[&[f64]]) -> Vec<f64> {
        end_action(self.fibre_dim, self.end, self.form, vectors)
    }
}

/// `ad(omega(Y))`, flattened row-major.
pub struct Adjoint<'a> {
    pub algebra: &'a LieAlgebra,
    pub inner: &'a dyn Alternating,
}

impl Alternating for Adjoint<'_> {
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn apply(&self, vectors: &[&[f64]]) -> Vec<f64> {
        let m = self
            .algebra
            .ad_matrix(&self.inner.apply(vectors))
            .expect("fibre values have algebra dimension");
        let n = self.algebra.dim();
        (0..n * n).map(|k| m[(k / n, k % n)]).collect()
    }
}

/// `sum_i c_i omega_i` of equal-degree maps.
pub struct Combination<'a> {
    pub terms: Vec<(f64, &'a dyn Alternating)>,
}

impl Alternating for Combination<'_> {
    fn degree(&self) -> usize {
        self.terms.first().map_or(0, |(_, t)| t.degree())
    }

    fn apply(&self, vectors: &[&[f64]]) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for (c, t) in &self.terms {
            let v = t.apply(vectors);
            if out.is_empty() {
                out = vec![0.0; v.len()];
            }
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        out
    }
}

/// The zero map of a given degree and value length.
pub struct Zero {
    pub degree: usize,
    pub len: usize,
}

impl Alternating for Zero {
    fn degree(&self) -> usize {
        self.degree
    }

    fn apply(&self, _: &[&[f64]]) -> Vec<f64> {
        vec![0.0; self.len]
    }
}

/// Exterior covariant derivative from the invariant formula for constant
/// coordinate vector fields (all Lie brackets vanish):
/// `(d^nabla omega)(Y_0..Y_k) = sum_i (-1)^i nabla_{Y_i}(omega(.., Y_i omitted, ..))`.
pub struct CovariantDerivative {
    omega: KForm,
    partials: Vec<KForm>,
    nabla: Connection,
}

impl CovariantDerivative {
    pub fn new(nabla: &Connection, omega: &KForm) -> Self {
        let dim = omega.chart().dim();
        let mut grads: Vec<Gradient> = (0..dim).map(|_| Gradient::new(dim)).collect();
        let partials = (0..dim)
            .map(|m| {
                omega.map(|c| c.map(|e| grads[m].partial(e, m)))
            })
            .collect();
        Self {
            omega: omega.clone(),
            partials,
            nabla: nabla.clone(),
        }
    }

    pub fn at(&self, ev: &mut Evaluator) -> Result<CovariantDerivativeAt, ExprError> {
        let omega = PointForm::of_kform(&self.omega, ev)?;
        let partials = self
            .partials
            .iter()
            .map(|p| PointForm::of_kform(p, ev))
            .collect::<Result<_, _>>()?;
        let gamma = self
            .nabla
            .coefficients()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| c.iter().map(|e| ev.eval(e)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(CovariantDerivativeAt {
            omega,
            partials,
            gamma,
        })
    }
}

pub struct CovariantDerivativeAt {
    omega: PointForm,
    partials: Vec<PointForm>,
    gamma: Vec<Vec<Vec<f64>>>,
}

impl Alternating for CovariantDerivativeAt {
    fn degree(&self) -> usize {
        self.omega.degree + 1
    }

    fn apply(&self, vectors: &[&[f64]]) -> Vec<f64> {
        let n = self.omega.values.len();
        let mut out = vec![0.0; n];
        for (i, y) in vectors.iter().enumerate() {
            let rest: Vec<&[f64]> = vectors
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| *v)
                .collect();
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let value = self.omega.apply(&rest);
            for (m, ym) in y.iter().enumerate() {
                if *ym == 0.0 {
                    continue;
                }
                for (o, dv) in out.iter_mut().zip(self.partials[m].apply(&rest)) {
                    *o += sign * ym * dv;
                }
            }
            for (b, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (a, va) in value.iter().enumerate() {
                    let g: f64 = self.gamma[b][a].iter().zip(y.iter()).map(|(g, yj)| g * yj).sum();
                    acc += g * va;
                }
                *o += sign * acc;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprfield::Chart;
    use crate::forms::{ext_cov_deriv, wedge_bracket, ScalarForm};
    use std::sync::Arc;

    #[test]
    fn bracket_oracle_matches_coordinate_formula() {
        let chart = Arc::new(Chart::euclidean(3));
        let alg = Arc::new(LieAlgebra::named("su2").unwrap());
        let p = |s: &str| chart.parse(s).unwrap();
        let w = KForm::new(
            chart.clone(),
            alg.clone(),
            1,
            vec![
                ScalarForm::from_components(3, 1, vec![p("x*y"), p("1"), p("z")]),
                ScalarForm::from_components(3, 1, vec![p("y"), p("x^2"), p("0")]),
                ScalarForm::from_components(3, 1, vec![p("sin(z)"), p("0"), p("x-y")]),
            ],
        )
        .unwrap();
        let fast = wedge_bracket(&w, &w).unwrap();
        let pt = [0.3, -0.4, 0.8];
        let mut ev = Evaluator::new(&pt);
        let wp = PointForm::of_kform(&w, &mut ev).unwrap();
        let fp = PointForm::of_kform(&fast, &mut ev).unwrap();
        let y1 = [0.2, 1.0, -0.5];
        let y2 = [1.5, 0.1, 0.7];
        let slow = bracket(&alg, &wp, &wp, &[&y1, &y2]);
        let quick = fp.apply(&[&y1, &y2]);
        for (a, b) in slow.iter().zip(&quick) {
            assert!((a - b).abs() < 1e-12);
        }
        // [A ^ A](Y, Z) = 2 [A(Y), A(Z)]
        let direct = alg.bracket(&wp.apply(&[&y1]), &wp.apply(&[&y2])).unwrap();
        for (a, b) in slow.iter().zip(&direct) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn invariant_formula_matches_local_formula() {
        let chart = Arc::new(Chart::euclidean(2));
        let alg = Arc::new(LieAlgebra::named("su2").unwrap());
        let p = |s: &str| chart.parse(s).unwrap();
        let gamma = vec![
            vec![vec![p("0"), p("x")], vec![p("y"), p("1")], vec![p("0"), p("0")]],
            vec![vec![p("x*y"), p("0")], vec![p("0"), p("0")], vec![p("2"), p("y")]],
            vec![vec![p("0"), p("0")], vec![p("1"), p("x")], vec![p("y^2"), p("0")]],
        ];
        let nabla = Connection::from_coefficients(chart.clone(), alg.clone(), gamma).unwrap();
        let w = KForm::new(
            chart.clone(),
            alg.clone(),
            1,
            vec![
                ScalarForm::from_components(2, 1, vec![p("x*y"), p("y")]),
                ScalarForm::from_components(2, 1, vec![p("1"), p("x^2")]),
                ScalarForm::from_components(2, 1, vec![p("y"), p("0")]),
            ],
        )
        .unwrap();
        let fast = ext_cov_deriv(&nabla, &w).unwrap();
        let pt = [0.7, -0.2];
        let mut ev = Evaluator::new(&pt);
        let slow = CovariantDerivative::new(&nabla, &w).at(&mut ev).unwrap();
        let quick = PointForm::of_kform(&fast, &mut ev).unwrap();
        let (y0, y1) = ([0.4, 1.3], [-0.9, 0.6]);
        for (a, b) in slow.apply(&[&y0, &y1]).iter().zip(quick.apply(&[&y0, &y1])) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
