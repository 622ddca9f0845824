//! Seeded generators of polynomial fields and compatible scenarios.
//!
//! Polynomials have total degree at most [`POLY_DEGREE`] with coefficients
//! uniform in `[-1, 1]`.

use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::exprfield::{Chart, Expr};
use crate::forms::{ad_compose, multiindex, Connection, EndForm, KForm, ScalarForm, SmoothMap};
use crate::gauge::Scenario;
use crate::liecore::{FibreMetric, LieAlgebra};
use crate::redef::apply_redefinition;

pub const POLY_DEGREE: u32 = 2;

/// Algebras of the compatible-scenario sweep.
pub const SWEEP_ALGEBRAS: [&str; 3] = ["u1^3", "su2", "u1+su2"];

/// Exponent vectors of all monomials in `dim` variables up to `degree`.
fn exponents(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; dim]];
    for i in 0..dim {
        let mut next = Vec::new();
        for e in &out {
            let used: u32 = e.iter().sum();
            for k in 0..=(degree - used) {
                let mut f = e.clone();
                f[i] = k;
                next.push(f);
            }
        }
        out = next;
    }
    out
}

pub fn polynomial<R: Rng>(rng: &mut R, dim: usize) -> Expr {
    let terms: Vec<Expr> = exponents(dim, POLY_DEGREE)
        .into_iter()
        .map(|e| {
            let mono = e
                .iter()
                .enumerate()
                .filter(|(_, k)| **k > 0)
                .fold(Expr::one(), |acc, (i, k)| acc.mul(&Expr::var(i).powi(*k as i32)));
            mono.scale(rng.gen_range(-1.0..1.0))
        })
        .collect();
    Expr::sum(&terms)
}

pub fn scalar_form<R: Rng>(rng: &mut R, dim: usize, degree: usize) -> ScalarForm {
    let comps = (0..multiindex::count(dim, degree)).map(|_| polynomial(rng, dim)).collect();
    ScalarForm::from_components(dim, degree, comps)
}

pub fn form<R: Rng>(rng: &mut R, chart: &Arc<Chart>, algebra: &Arc<LieAlgebra>, degree: usize) -> KForm {
    let comps = (0..algebra.dim()).map(|_| scalar_form(rng, chart.dim(), degree)).collect();
    KForm::new(chart.clone(), algebra.clone(), degree, comps).expect("generated shapes agree")
}

pub fn end_form<R: Rng>(rng: &mut R, chart: &Arc<Chart>, algebra: &Arc<LieAlgebra>, degree: usize) -> EndForm {
    let n = algebra.dim();
    let entries = (0..n)
        .map(|_| (0..n).map(|_| scalar_form(rng, chart.dim(), degree)).collect())
        .collect();
    EndForm::new(chart.clone(), algebra.clone(), degree, entries).expect("generated shapes agree")
}

/// Generic connection; not a derivation of the bracket in general.
pub fn connection<R: Rng>(rng: &mut R, chart: &Arc<Chart>, algebra: &Arc<LieAlgebra>) -> Connection {
    Connection::from_end_form(end_form(rng, chart, algebra, 1)).expect("degree-1 end form")
}

/// `flat - ad o lambda` together with its `lambda`.
pub fn inner_connection<R: Rng>(
    rng: &mut R,
    chart: &Arc<Chart>,
    algebra: &Arc<LieAlgebra>,
) -> (Connection, KForm) {
    let lambda = form(rng, chart, algebra, 1);
    let nabla = Connection::flat(chart.clone(), algebra.clone())
        .shifted(&ad_compose(&lambda).neg())
        .expect("same chart and algebra");
    (nabla, lambda)
}

pub fn map<R: Rng>(rng: &mut R, source: &Arc<Chart>, target: &Arc<Chart>) -> SmoothMap {
    let comps = (0..target.dim()).map(|_| polynomial(rng, source.dim())).collect();
    SmoothMap::new(source.clone(), target.clone(), comps).expect("generated shapes agree")
}

/// Centre-valued 2-form: a random scalar 2-form along each centre direction.
pub fn centre_two_form<R: Rng>(rng: &mut R, chart: &Arc<Chart>, algebra: &Arc<LieAlgebra>) -> KForm {
    let centre = algebra.centre_basis();
    let mut out = KForm::zero(chart.clone(), algebra.clone(), 2);
    for z in centre.column_iter() {
        let f = scalar_form(rng, chart.dim(), 2);
        let comps = z.iter().map(|c| if c.abs() < 1e-14 { ScalarForm::zero(chart.dim(), 2) } else { f.scale(*c) }).collect();
        let along = KForm::new(chart.clone(), algebra.clone(), 2, comps).expect("generated shapes agree");
        out = out.add(&along).expect("same chart and algebra");
    }
    out
}

pub fn minkowski4() -> Arc<Chart> {
    Arc::new(Chart::with_names(["t", "x", "y", "z"].map(String::from).to_vec()).expect("distinct names"))
}

/// Compatible scenario: Minkowski `R^4` into `R^3`, a flat connection with a
/// centre-valued twist, redefined by a random `lambda`. The identity fibre
/// metric is ad-invariant for every sweep algebra.
pub fn compatible_scenario<R: Rng>(rng: &mut R, algebra: &str) -> Result<Scenario> {
    let algebra = Arc::new(LieAlgebra::named(algebra)?);
    let spacetime = minkowski4();
    let target = Arc::new(Chart::euclidean(3));
    let base = Scenario {
        spacetime: spacetime.clone(),
        spacetime_signs: vec![1.0, -1.0, -1.0, -1.0],
        target: target.clone(),
        target_metric: vec![1.0; 3],
        algebra: algebra.clone(),
        fibre_metric: FibreMetric::identity(algebra.dim()),
        connection: Connection::flat(target.clone(), algebra.clone()),
        twist: centre_two_form(rng, &target, &algebra),
        potential: polynomial(rng, 3),
        map: map(rng, &spacetime, &target),
        gauge_field: form(rng, &spacetime, &algebra, 1),
    };
    base.validate()?;
    let lambda = form(rng, &target, &algebra, 1);
    apply_redefinition(&base, &lambda)
}

/// `count` points from the chart's sampling box.
pub fn points<R: Rng>(rng: &mut R, chart: &Chart, count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| chart.sample_point(rng, &[])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn monomial_count() {
        assert_eq!(exponents(3, 2).len(), 10);
        assert_eq!(exponents(4, 2).len(), 15);
        assert!(exponents(4, 2).iter().all(|e| e.iter().sum::<u32>() <= 2));
    }

    #[test]
    fn generators_are_deterministic() {
        let a = polynomial(&mut ChaCha8Rng::seed_from_u64(3), 2);
        let b = polynomial(&mut ChaCha8Rng::seed_from_u64(3), 2);
        assert_eq!(a.eval(&[0.3, -0.2]).unwrap(), b.eval(&[0.3, -0.2]).unwrap());
    }

    #[test]
    fn sweep_scenarios_are_compatible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tag in SWEEP_ALGEBRAS {
            let s = compatible_scenario(&mut rng, tag).unwrap();
            let pts = points(&mut rng, &s.target, 10);
            let c = s.compatibility(&pts).unwrap();
            assert!(c.holds(1e-10), "{tag}: {c:?}");
            assert!(!s.connection.is_literal_flat() || s.algebra.is_abelian());
        }
    }
}
