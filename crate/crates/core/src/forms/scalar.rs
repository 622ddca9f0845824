//! Real-valued differential forms on a chart, stored on sorted multi-indices.

use crate::exprfield::{Differentiator, Evaluator, Expr, ExprError};

use super::multiindex::{self, Mask};

/// A scalar `k`-form `sum_I f_I dx^I` on an `n`-dimensional chart.
///
/// Forms of degree above `n` have no components and act as zero.
#[derive(Clone, Debug)]
pub struct ScalarForm {
    dim: usize,
    degree: usize,
    comps: Vec<Expr>,
}

/// Per-coordinate differentiators shared across many components.
pub struct Gradient {
    diffs: Vec<Differentiator>,
}

impl Gradient {
    pub fn new(dim: usize) -> Self {
        Self {
            diffs: (0..dim).map(Differentiator::new).collect(),
        }
    }

    pub fn partial(&mut self, e: &Expr, index: usize) -> Expr {
        self.diffs[index].diff(e)
    }
}

impl ScalarForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            comps: vec![Expr::zero(); multiindex::count(dim, degree)],
        }
    }

    /// 0-form with the given coefficient.
    pub fn function(dim: usize, f: Expr) -> Self {
        Self {
            dim,
            degree: 0,
            comps: vec![f],
        }
    }

    /// `f dx^I` for a sorted multi-index mask.
    pub fn monomial(dim: usize, mask: Mask, f: Expr) -> Self {
        let mut out = Self::zero(dim, multiindex::degree(mask));
        if !out.comps.is_empty() {
            out.comps[multiindex::position(dim, mask)] = f;
        }
        out
    }

    /// Builds a form from components given on arbitrary index tuples;
    /// repeated or reordered tuples accumulate with the permutation sign.
    pub fn from_tuples(dim: usize, degree: usize, terms: &[(Vec<usize>, Expr)]) -> Self {
        let mut out = Self::zero(dim, degree);
        for (tuple, f) in terms {
            assert_eq!(tuple.len(), degree, "index tuple length must equal degree");
            if let Some((mask, s)) = multiindex::sort_sign(tuple) {
                out.add_to(mask, &f.scale(s));
            }
        }
        out
    }

    pub fn from_components(dim: usize, degree: usize, comps: Vec<Expr>) -> Self {
        assert_eq!(comps.len(), multiindex::count(dim, degree));
        Self { dim, degree, comps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn masks(&self) -> Vec<Mask> {
        multiindex::basis(self.dim, self.degree)
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn component(&self, mask: Mask) -> &Expr {
        &self.comps[multiindex::position(self.dim, mask)]
    }

    pub fn is_literal_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    fn add_to(&mut self, mask: Mask, f: &Expr) {
        let p = multiindex::position(self.dim, mask);
        self.comps[p] = self.comps[p].add(f);
    }

    fn zip(&self, other: &Self, op: impl Fn(&Expr, &Expr) -> Expr) -> Self {
        assert_eq!(self.dim, other.dim, "form dimension mismatch");
        assert_eq!(self.degree, other.degree, "form degree mismatch");
        Self {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| op(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, Expr::add)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, Expr::sub)
    }

    pub fn map(&self, op: impl FnMut(&Expr) -> Expr) -> Self {
        Self {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(op).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(Expr::neg)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|e| e.scale(factor))
    }

    pub fn mul_function(&self, f: &Expr) -> Self {
        self.map(|e| e.mul(f))
    }

    /// Local wedge formula: sum over disjoint index pairs with merge signs.
    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "form dimension mismatch");
        let degree = self.degree + other.degree;
        let mut out = Self::zero(self.dim, degree);
        if out.comps.is_empty() {
            return out;
        }
        let left = self.masks();
        let right = other.masks();
        let mut terms: Vec<Vec<Expr>> = vec![Vec::new(); out.comps.len()];
        for (i, a) in left.iter().zip(&self.comps) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in right.iter().zip(&other.comps) {
                if b.is_zero() {
                    continue;
                }
                if let Some(s) = multiindex::wedge_sign(*i, *j) {
                    let p = multiindex::position(self.dim, i | j);
                    terms[p].push(a.mul(b).scale(s));
                }
            }
        }
        for (c, t) in out.comps.iter_mut().zip(&terms) {
            *c = Expr::sum(t);
        }
        out
    }

    /// Exterior derivative `d(f dx^I) = sum_i (d_i f) dx^i ^ dx^I`.
    pub fn d(&self) -> Self {
        self.d_with(&mut Gradient::new(self.dim))
    }

    pub fn d_with(&self, grad: &mut Gradient) -> Self {
        let degree = self.degree + 1;
        let mut out = Self::zero(self.dim, degree);
        if out.comps.is_empty() {
            return out;
        }
        let mut terms: Vec<Vec<Expr>> = vec![Vec::new(); out.comps.len()];
        for (mask, f) in self.masks().iter().zip(&self.comps) {
            if f.vars() == 0 {
                continue;
            }
            for i in 0..self.dim {
                if !f.depends_on(i) {
                    continue;
                }
                if let Some(s) = multiindex::wedge_sign(1 << i, *mask) {
                    let p = multiindex::position(self.dim, mask | (1 << i));
                    terms[p].push(grad.partial(f, i).scale(s));
                }
            }
        }
        for (c, t) in out.comps.iter_mut().zip(&terms) {
            *c = Expr::sum(t);
        }
        out
    }

    /// Pullback along a map with components `map` (expressions on the
    /// source chart) and Jacobian `jac[j][mu] = d_mu X^j`.
    pub fn pullback(&self, map: &[Expr], jac: &[Vec<Expr>], source_dim: usize) -> Self {
        assert_eq!(map.len(), self.dim, "map must have one component per target coordinate");
        let mut out = Self::zero(source_dim, self.degree);
        if out.comps.is_empty() {
            return out;
        }
        let source_masks = out.masks();
        let target_masks = self.masks();
        let composed: Vec<Expr> = self.comps.iter().map(|f| f.substitute(map)).collect();
        for (p, smask) in source_masks.iter().enumerate() {
            let mu = multiindex::indices(*smask);
            let mut terms = Vec::new();
            for (tmask, f) in target_masks.iter().zip(&composed) {
                if f.is_zero() {
                    continue;
                }
                let js = multiindex::indices(*tmask);
                let minor: Vec<Vec<Expr>> = js
                    .iter()
                    .map(|&j| mu.iter().map(|&m| jac[j][m].clone()).collect())
                    .collect();
                let det = symbolic_determinant(&minor);
                if det.is_zero() {
                    continue;
                }
                terms.push(f.mul(&det));
            }
            out.comps[p] = Expr::sum(&terms);
        }
        out
    }

    /// Hodge star for the diagonal metric `signs` (entries +-1):
    /// `*dx^I = (prod_{i in I} s_i) eps(I, I^c) dx^(I^c)`.
    pub fn hodge(&self, signs: &[f64]) -> Self {
        assert_eq!(signs.len(), self.dim, "metric dimension mismatch");
        let full: Mask = if self.dim == 64 { !0 } else { (1 << self.dim) - 1 };
        let mut out = Self::zero(self.dim, self.dim.saturating_sub(self.degree));
        if self.degree > self.dim {
            return out;
        }
        for (mask, f) in self.masks().iter().zip(&self.comps) {
            let comp = full & !mask;
            let metric: f64 = multiindex::indices(*mask).iter().map(|&i| signs[i]).product();
            let eps = multiindex::wedge_sign(*mask, comp).expect("complement is disjoint");
            out.add_to(comp, &f.scale(metric * eps));
        }
        out
    }

    /// Interior product with the vector field whose components are `coords`:
    /// `i_x(f dx^I) = sum_m (-1)^m x^(i_m) f dx^(I \ i_m)`.
    pub fn radial_contraction(&self, coords: &[Expr]) -> Self {
        assert!(self.degree >= 1, "cannot contract a 0-form");
        let mut out = Self::zero(self.dim, self.degree - 1);
        for (mask, f) in self.masks().iter().zip(&self.comps) {
            if f.is_zero() {
                continue;
            }
            for (m, i) in multiindex::indices(*mask).into_iter().enumerate() {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out.add_to(mask & !(1 << i), &f.mul(&coords[i]).scale(sign));
            }
        }
        out
    }

    pub fn eval(&self, ev: &mut Evaluator) -> Result<Vec<f64>, ExprError> {
        self.comps.iter().map(|c| ev.eval(c)).collect()
    }
}

/// Determinant of a small symbolic matrix by cofactor expansion.
pub fn symbolic_determinant(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        n => {
            let mut terms = Vec::new();
            for c in 0..n {
                if m[0][c].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != c)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let t = m[0][c].mul(&symbolic_determinant(&minor));
                terms.push(if c % 2 == 0 { t } else { t.neg() });
            }
            Expr::sum(&terms)
        }
    }
}

/// Contracts component values (ordered as `basis(dim, degree)`) with a tuple
/// of tangent vectors.
pub fn contract(values: &[f64], dim: usize, degree: usize, vectors: &[&[f64]]) -> f64 {
    assert_eq!(vectors.len(), degree);
    multiindex::basis(dim, degree)
        .iter()
        .zip(values)
        .map(|(m, v)| if *v == 0.0 { 0.0 } else { v * multiindex::evaluate_on(*m, vectors) })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprfield::Chart;

    fn p(chart: &Chart, s: &str) -> Expr {
        chart.parse(s).unwrap()
    }

    #[test]
    fn exterior_derivative_and_d_squared() {
        let c = Chart::euclidean(3);
        let f = ScalarForm::function(3, p(&c, "x^2*y*sin(z) + exp(x*y)"));
        let ddf = f.d().d();
        let pt = [0.3, -0.2, 0.9];
        for v in ddf.eval(&mut Evaluator::new(&pt)).unwrap() {
            assert!(v.abs() < 1e-14);
        }
        let w = ScalarForm::monomial(2, 0b10, p(&Chart::euclidean(2), "x"));
        let dw = w.d();
        assert_eq!(dw.component(0b11).eval(&[0.4, 0.1]).unwrap(), 1.0);
    }

    #[test]
    fn wedge_signs() {
        let c = Chart::euclidean(2);
        let dx = ScalarForm::monomial(2, 0b01, Expr::one());
        let dy = ScalarForm::monomial(2, 0b10, Expr::one());
        assert_eq!(dx.wedge(&dy).component(0b11).as_constant(), Some(1.0));
        assert_eq!(dy.wedge(&dx).component(0b11).as_constant(), Some(-1.0));
        assert!(dx.wedge(&dx).is_literal_zero());
        let three = ScalarForm::monomial(2, 0b11, p(&c, "x")).wedge(&dx);
        assert_eq!(three.degree(), 3);
        assert!(three.components().is_empty());
    }

    #[test]
    fn pullback_by_square_map() {
        let target = Chart::euclidean(2);
        let source = Chart::with_names(vec!["u".into(), "v".into()]).unwrap();
        let w = ScalarForm::monomial(2, 0b11, Expr::one());
        let map = vec![p(&source, "u^2"), p(&source, "v")];
        let jac: Vec<Vec<Expr>> = map
            .iter()
            .map(|m| (0..2).map(|i| m.derivative(i)).collect())
            .collect();
        let pb = w.pullback(&map, &jac, 2);
        assert_eq!(pb.component(0b11).eval(&[1.5, 0.0]).unwrap(), 3.0);
        let _ = target;
    }

    #[test]
    fn hodge_conventions() {
        let e = [1.0, 1.0];
        let dx = ScalarForm::monomial(2, 0b01, Expr::one());
        let dy = ScalarForm::monomial(2, 0b10, Expr::one());
        assert_eq!(dx.hodge(&e).component(0b10).as_constant(), Some(1.0));
        assert_eq!(dy.hodge(&e).component(0b01).as_constant(), Some(-1.0));
        let one = ScalarForm::function(2, Expr::one());
        assert_eq!(one.hodge(&e).component(0b11).as_constant(), Some(1.0));
        let mink = [1.0, -1.0];
        assert_eq!(dx.hodge(&mink).component(0b10).as_constant(), Some(1.0));
        assert_eq!(dy.hodge(&mink).component(0b01).as_constant(), Some(1.0));
    }

    #[test]
    fn symbolic_determinant_3x3() {
        let m: Vec<Vec<Expr>> = [[2.0, -1.0, 0.5], [0.3, 4.0, 1.0], [-2.0, 0.0, 1.5]]
            .iter()
            .map(|r| r.iter().map(|v| Expr::constant(*v)).collect())
            .collect();
        let numeric = multiindex::determinant(
            m.iter()
                .map(|r| r.iter().map(|e| e.as_constant().unwrap()).collect())
                .collect(),
        );
        assert!((symbolic_determinant(&m).as_constant().unwrap() - numeric).abs() < 1e-12);
    }
}
