use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exprfield::{Evaluator, Expr};

use super::{same_algebra, same_chart, Connection, EndForm, Gradient, KForm, ScalarForm, SmoothMap};

fn sign(exponent: usize) -> f64 {
    if exponent.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `[omega ^ psi][a] = sum_{b,c} C[a][b][c] omega[b] ^ psi[c]`.
pub fn wedge_bracket(omega: &KForm, psi: &KForm) -> Result<KForm> {
    same_chart(&omega.chart, &psi.chart)?;
    same_algebra(&omega.algebra, &psi.algebra)?;
    let dim = omega.chart.dim();
    let degree = omega.degree + psi.degree;
    let alg = &omega.algebra;
    let mut products: Vec<Vec<Option<ScalarForm>>> = vec![vec![None; alg.dim()]; alg.dim()];
    let mut comps = vec![ScalarForm::zero(dim, degree); alg.dim()];
    for (a, b, c, coeff) in alg.nonzero_constants() {
        let (l, r) = (&omega.comps[b], &psi.comps[c]);
        if l.is_literal_zero() || r.is_literal_zero() {
            continue;
        }
        let prod = products[b][c].get_or_insert_with(|| l.wedge(r));
        comps[a] = comps[a].add(&prod.scale(coeff));
    }
    Ok(KForm::from_parts(
        omega.chart.clone(),
        omega.algebra.clone(),
        degree,
        comps,
    ))
}

/// `(T ^ omega)[a] = sum_b T[a][b] ^ omega[b]`.
pub fn wedge_end(t: &EndForm, omega: &KForm) -> Result<KForm> {
    same_chart(&t.chart, &omega.chart)?;
    same_algebra(&t.algebra, &omega.algebra)?;
    let dim = omega.chart.dim();
    let degree = t.degree + omega.degree;
    let comps = t
        .comps
        .iter()
        .map(|row| {
            row.iter()
                .zip(&omega.comps)
                .filter(|(e, w)| !e.is_literal_zero() && !w.is_literal_zero())
                .fold(ScalarForm::zero(dim, degree), |acc, (e, w)| acc.add(&e.wedge(w)))
        })
        .collect();
    Ok(KForm::from_parts(
        omega.chart.clone(),
        omega.algebra.clone(),
        degree,
        comps,
    ))
}

/// `(ad o lambda)[a][b] = sum_c C[a][c][b] lambda[c]`.
pub fn ad_compose(lambda: &KForm) -> EndForm {
    let n = lambda.algebra.dim();
    let dim = lambda.chart.dim();
    let mut comps = vec![vec![ScalarForm::zero(dim, lambda.degree); n]; n];
    for (a, c, b, coeff) in lambda.algebra.nonzero_constants() {
        if !lambda.comps[c].is_literal_zero() {
            comps[a][b] = comps[a][b].add(&lambda.comps[c].scale(coeff));
        }
    }
    EndForm::from_parts(lambda.chart.clone(), lambda.algebra.clone(), lambda.degree, comps)
}

fn check_connection(nabla: &Connection, chart: &Arc<crate::exprfield::Chart>, alg: &Arc<crate::liecore::LieAlgebra>) -> Result<()> {
    same_chart(nabla.chart(), chart)?;
    same_algebra(nabla.algebra(), alg)
}

/// `(d^nabla omega)[b] = d omega[b] + (-1)^l sum_a omega[a] ^ Gamma[b][a]`.
pub fn ext_cov_deriv(nabla: &Connection, omega: &KForm) -> Result<KForm> {
    check_connection(nabla, &omega.chart, &omega.algebra)?;
    let mut grad = Gradient::new(omega.chart.dim());
    let gamma = nabla.as_end_form();
    let s = sign(omega.degree);
    let comps = (0..omega.algebra.dim())
        .map(|b| {
            let mut acc = omega.comps[b].d_with(&mut grad);
            for (a, w) in omega.comps.iter().enumerate() {
                let g = gamma.entry(b, a);
                if !w.is_literal_zero() && !g.is_literal_zero() {
                    acc = acc.add(&w.wedge(g).scale(s));
                }
            }
            acc
        })
        .collect();
    Ok(KForm::from_parts(
        omega.chart.clone(),
        omega.algebra.clone(),
        omega.degree + 1,
        comps,
    ))
}

/// Induced derivative on End-valued `m`-forms:
/// `d^nabla T = dT + Gamma ^ T - (-1)^m T ^ Gamma`.
pub fn ext_cov_deriv_end(nabla: &Connection, t: &EndForm) -> Result<EndForm> {
    check_connection(nabla, &t.chart, &t.algebra)?;
    let dt = t.d();
    let gamma = nabla.as_end_form();
    let left = gamma.wedge(t)?;
    let right = t.wedge(gamma)?.scale(sign(t.degree));
    dt.add(&left)?.sub(&right)
}

/// Curvature from `(d^nabla)^2` on the constant frame sections:
/// `R[b][a] = ((d^nabla)^2 e_a)[b]`.
pub fn curvature(nabla: &Connection) -> EndForm {
    let chart = nabla.chart().clone();
    let alg = nabla.algebra().clone();
    let n = alg.dim();
    let mut comps = vec![Vec::with_capacity(n); n];
    for a in 0..n {
        let mut unit = vec![0.0; n];
        unit[a] = 1.0;
        let e = KForm::constant_section(chart.clone(), alg.clone(), &unit);
        let once = ext_cov_deriv(nabla, &e).expect("frame section lives on the connection chart");
        let twice = ext_cov_deriv(nabla, &once).expect("frame section lives on the connection chart");
        for (b, row) in comps.iter_mut().enumerate() {
            row.push(twice.comps[b].clone());
        }
    }
    EndForm::from_parts(chart, alg, 2, comps)
}

/// Curvature from the structure equation `R = d Gamma + Gamma ^ Gamma`.
pub fn curvature_structure_equation(nabla: &Connection) -> EndForm {
    let gamma = nabla.as_end_form();
    gamma
        .d()
        .add(&gamma.wedge(gamma).expect("same chart"))
        .expect("same shape")
}

/// Defect of `nabla` being a derivation of the constant bracket, per
/// `(a, b, c, i)`:
/// `sum_d C[d][b][c] Gamma[a][d][i] - sum_d (Gamma[d][b][i] C[a][d][c] + Gamma[d][c][i] C[a][b][d])`.
pub fn derivation_defect(nabla: &Connection) -> Vec<Expr> {
    let alg = nabla.algebra();
    let n = alg.dim();
    let m = nabla.chart().dim();
    let mut out = Vec::new();
    for i in 0..m {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut terms = Vec::new();
                    for d in 0..n {
                        let (cd, cb, cc) = (alg.c(d, b, c), alg.c(a, d, c), alg.c(a, b, d));
                        if cd != 0.0 {
                            terms.push(nabla.gamma(a, d, i).scale(cd));
                        }
                        if cb != 0.0 {
                            terms.push(nabla.gamma(d, b, i).scale(-cb));
                        }
                        if cc != 0.0 {
                            terms.push(nabla.gamma(d, c, i).scale(-cc));
                        }
                    }
                    let e = Expr::sum(&terms);
                    if !e.is_zero() {
                        out.push(e);
                    }
                }
            }
        }
    }
    out
}

/// Max absolute derivation defect over sample points.
pub fn derivation_residual(nabla: &Connection, points: &[Vec<f64>]) -> Result<f64> {
    let defect = derivation_defect(nabla);
    let mut worst: f64 = 0.0;
    for p in points {
        let mut ev = Evaluator::new(p);
        for e in &defect {
            worst = worst.max(ev.eval(e)?.abs());
        }
    }
    Ok(worst)
}

fn pullback_scalar(x: &SmoothMap, form: &ScalarForm) -> ScalarForm {
    form.pullback(x.components(), x.jacobian(), x.source().dim())
}

/// `X^! omega`, coefficient-wise by Jacobian minors.
pub fn pullback_form(x: &SmoothMap, omega: &KForm) -> Result<KForm> {
    same_chart(x.target(), &omega.chart)?;
    let comps = omega.comps.iter().map(|c| pullback_scalar(x, c)).collect();
    Ok(KForm::from_parts(
        x.source().clone(),
        omega.algebra.clone(),
        omega.degree,
        comps,
    ))
}

/// `X^! T`, entry-wise.
pub fn pullback_end(x: &SmoothMap, t: &EndForm) -> Result<EndForm> {
    same_chart(x.target(), &t.chart)?;
    let comps = t
        .comps
        .iter()
        .map(|row| row.iter().map(|c| pullback_scalar(x, c)).collect())
        .collect();
    Ok(EndForm::from_parts(
        x.source().clone(),
        t.algebra.clone(),
        t.degree,
        comps,
    ))
}

/// `(X* Gamma)[b][a][mu] = sum_i Gamma[b][a][i] o X * DX[i][mu]`.
pub fn pullback_connection(x: &SmoothMap, nabla: &Connection) -> Result<Connection> {
    let end = pullback_end(x, nabla.as_end_form())?;
    Connection::from_end_form(end)
}

fn check_signs(signs: &[f64], dim: usize) -> Result<()> {
    if signs.len() != dim {
        return Err(Error::MetricDimensionMismatch {
            expected: dim,
            found: signs.len(),
        });
    }
    Ok(())
}

/// Hodge star of a scalar form for the diagonal metric `signs`.
pub fn hodge_star_scalar(signs: &[f64], form: &ScalarForm) -> Result<ScalarForm> {
    check_signs(signs, form.dim())?;
    Ok(form.hodge(signs))
}

/// Hodge star applied to every fibre component.
pub fn hodge_star(signs: &[f64], omega: &KForm) -> Result<KForm> {
    check_signs(signs, omega.chart.dim())?;
    let degree = omega.chart.dim().saturating_sub(omega.degree);
    let comps = omega.comps.iter().map(|c| c.hodge(signs)).collect();
    Ok(KForm::from_parts(
        omega.chart.clone(),
        omega.algebra.clone(),
        degree,
        comps,
    ))
}

/// `<dx^I, dx^J> = delta_IJ prod_{i in I} s_i`, the induced pairing on scalar forms.
pub fn metric_pairing(signs: &[f64], left: &ScalarForm, right: &ScalarForm) -> Result<Expr> {
    check_signs(signs, left.dim())?;
    if left.dim() != right.dim() || left.degree() != right.degree() {
        return Err(Error::ShapeMismatch("paired forms differ in shape".into()));
    }
    let terms: Vec<Expr> = left
        .masks()
        .iter()
        .zip(left.components().iter().zip(right.components()))
        .filter(|(_, (a, b))| !a.is_zero() && !b.is_zero())
        .map(|(mask, (a, b))| {
            let s: f64 = super::multiindex::indices(*mask).iter().map(|&i| signs[i]).product();
            a.mul(b).scale(s)
        })
        .collect();
    Ok(Expr::sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprfield::Chart;
    use crate::liecore::LieAlgebra;

    fn setup(n: usize, alg: &str) -> (Arc<Chart>, Arc<LieAlgebra>) {
        (
            Arc::new(Chart::euclidean(n)),
            Arc::new(LieAlgebra::named(alg).unwrap()),
        )
    }

    fn one_form(chart: &Arc<Chart>, alg: &Arc<LieAlgebra>, a: usize, i: usize, f: &str) -> KForm {
        let form = ScalarForm::monomial(chart.dim(), 1 << i, chart.parse(f).unwrap());
        KForm::along(chart.clone(), alg.clone(), a, form).unwrap()
    }

    fn constant(e: &Expr) -> f64 {
        e.as_constant().unwrap_or_else(|| panic!("{e} is not constant"))
    }

    #[test]
    fn su2_bracket_of_dx_e1_plus_dy_e2() {
        let (c, g) = setup(2, "su2");
        let a = one_form(&c, &g, 0, 0, "1").add(&one_form(&c, &g, 1, 1, "1")).unwrap();
        let aa = wedge_bracket(&a, &a).unwrap();
        assert_eq!(aa.degree(), 2);
        assert_eq!(constant(&aa.component(2).components()[0]), 2.0);
        assert!(aa.component(0).is_literal_zero() && aa.component(1).is_literal_zero());
    }

    #[test]
    fn abelian_bracket_vanishes() {
        let (c, g) = setup(3, "u1^3");
        let w = one_form(&c, &g, 0, 1, "x*z").add(&one_form(&c, &g, 2, 0, "y")).unwrap();
        assert!(wedge_bracket(&w, &w).unwrap().expressions().all(Expr::is_zero));
    }

    #[test]
    fn ad_compose_su2_e3() {
        let (c, g) = setup(2, "su2");
        let lam = one_form(&c, &g, 2, 0, "1");
        let ad = ad_compose(&lam);
        assert_eq!(constant(&ad.entry(1, 0).components()[0]), 1.0);
        assert_eq!(constant(&ad.entry(0, 1).components()[0]), -1.0);
        let w = one_form(&c, &g, 0, 1, "x").add(&one_form(&c, &g, 1, 0, "y^2")).unwrap();
        let lhs = wedge_end(&ad, &w).unwrap();
        let rhs = wedge_bracket(&lam, &w).unwrap();
        let mut ev = Evaluator::new(&[0.3, -0.7]);
        assert_eq!(lhs.eval(&mut ev).unwrap(), rhs.eval(&mut ev).unwrap());
    }

    #[test]
    fn wedge_end_scalar_entry() {
        let (c, g) = setup(2, "su2");
        let mut t = EndForm::zero(c.clone(), g.clone(), 0);
        t.set_entry(0, 0, ScalarForm::function(2, c.parse("x").unwrap())).unwrap();
        let w = one_form(&c, &g, 0, 1, "1");
        let out = wedge_end(&t, &w).unwrap();
        assert_eq!(out.component(0).components()[1].eval(&[2.5, 1.0]).unwrap(), 2.5);
        let id = EndForm::identity(c.clone(), g.clone());
        let same = wedge_end(&id, &w).unwrap();
        assert_eq!(constant(&same.component(0).components()[1]), 1.0);
    }

    #[test]
    fn flat_exterior_derivative() {
        let (c, g) = setup(2, "su2");
        let flat = Connection::flat(c.clone(), g.clone());
        let w = one_form(&c, &g, 0, 1, "x");
        let dw = ext_cov_deriv(&flat, &w).unwrap();
        assert_eq!(constant(&dw.component(0).components()[0]), 1.0);
    }

    #[test]
    fn curvature_of_inner_connection() {
        let (c, g) = setup(2, "su2");
        let lam = one_form(&c, &g, 2, 1, "x");
        let nabla = Connection::flat(c.clone(), g.clone())
            .shifted(&ad_compose(&lam).neg())
            .unwrap();
        let r = curvature(&nabla);
        let r2 = curvature_structure_equation(&nabla);
        let zeta = KForm::along(
            c.clone(),
            g.clone(),
            2,
            ScalarForm::monomial(2, 0b11, Expr::constant(-1.0)),
        )
        .unwrap();
        let expected = ad_compose(&zeta);
        let pt = [0.4, -1.1];
        let mut ev = Evaluator::new(&pt);
        let a = r.eval(&mut ev).unwrap();
        let b = r2.eval(&mut ev).unwrap();
        let e = expected.eval(&mut ev).unwrap();
        assert_eq!(a, e);
        assert_eq!(b, e);
    }

    #[test]
    fn pullback_connection_chain_rule() {
        let n = Arc::new(Chart::euclidean(2));
        let m = Arc::new(Chart::with_names(vec!["t".into()]).unwrap());
        let g = Arc::new(LieAlgebra::named("u1").unwrap());
        let gamma = vec![vec![vec![n.parse("y").unwrap(), Expr::zero()]]];
        let nabla = Connection::from_coefficients(n.clone(), g, gamma).unwrap();
        let x = SmoothMap::new(m.clone(), n, vec![m.parse("t").unwrap(), m.parse("t^2").unwrap()]).unwrap();
        let pulled = pullback_connection(&x, &nabla).unwrap();
        assert_eq!(pulled.gamma(0, 0, 0).eval(&[1.7]).unwrap(), 1.7f64.powi(2));
    }

    #[test]
    fn hodge_checks_metric_length() {
        let (c, g) = setup(2, "u1");
        let w = one_form(&c, &g, 0, 0, "1");
        assert_eq!(
            hodge_star(&[1.0, 1.0, 1.0], &w).unwrap_err(),
            Error::MetricDimensionMismatch { expected: 2, found: 3 }
        );
        let star = hodge_star(&[1.0, 1.0], &w).unwrap();
        assert_eq!(constant(&star.component(0).components()[1]), 1.0);
    }

    #[test]
    fn plane_sign_table() {
        let star = |signs: &[f64], degree: usize, mask: u64| {
            let f = ScalarForm::monomial(2, mask, Expr::one());
            assert_eq!(f.degree(), degree);
            hodge_star_scalar(signs, &f).unwrap().components().iter().map(|e| e.as_constant().unwrap()).collect::<Vec<_>>()
        };
        // Euclidean: *dx = dy, *dy = -dx, *1 = dx^dy.
        assert_eq!(star(&[1.0, 1.0], 1, 0b01), vec![0.0, 1.0]);
        assert_eq!(star(&[1.0, 1.0], 1, 0b10), vec![-1.0, 0.0]);
        assert_eq!(star(&[1.0, 1.0], 0, 0b00), vec![1.0]);
        // Minkowski (+,-) on (t, x): *dt = dx, *dx = dt, *(dt^dx) = -1.
        assert_eq!(star(&[1.0, -1.0], 1, 0b01), vec![0.0, 1.0]);
        assert_eq!(star(&[1.0, -1.0], 1, 0b10), vec![1.0, 0.0]);
        assert_eq!(star(&[1.0, -1.0], 2, 0b11), vec![-1.0]);
    }

    #[test]
    fn mismatched_charts_are_rejected() {
        let (c, g) = setup(2, "su2");
        let other = Arc::new(Chart::euclidean(3));
        let w = one_form(&c, &g, 0, 0, "1");
        let v = one_form(&other, &g, 0, 0, "1");
        assert!(matches!(wedge_bracket(&w, &v), Err(Error::ChartMismatch(_))));
        let h = Arc::new(LieAlgebra::named("heisenberg3").unwrap());
        let u = one_form(&c, &h, 0, 0, "1");
        assert_eq!(wedge_bracket(&w, &u).unwrap_err(), Error::AlgebraMismatch);
    }
}
