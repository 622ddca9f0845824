//! The ten calculus identities, each checked by comparing a coordinate-formula
//! side against an oracle side on tangent-vector tuples at sample points.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprfield::Evaluator;
use crate::tolerance::{self, Residual};

use super::multiindex;
use super::oracle::{
    Adjoint, Alternating, Bracket, Combination, CovariantDerivative, EndAction, PointForm,
    Pushforward, Zero,
};
use super::{
    ad_compose, derivation_residual, ext_cov_deriv, ext_cov_deriv_end, pullback_connection,
    pullback_form, wedge_bracket, wedge_end, Connection, EndForm, KForm, SmoothMap,
};

/// Random vector tuples added per sample point on top of the coordinate basis tuples.
pub const RANDOM_TUPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityTag {
    /// `d^{X*nabla}(X^! omega) = X^!(d^nabla omega)`
    PullbackCommute,
    /// `d^{nabla + D} omega = d^nabla omega + D ^ omega`
    DifferentialSplit,
    /// `d^nabla(T ^ omega) = d^nabla T ^ omega + (-1)^m T ^ d^nabla omega`
    LeibnizEnd,
    /// `(ad o omega) ^ psi = [omega ^ psi]`
    AdWedge,
    /// `X^![omega ^ psi] = [X^! omega ^ X^! psi]`
    PullbackBracket,
    /// `[omega ^ psi] = -(-1)^{lk} [psi ^ omega]`
    GradedAntisymmetry,
    /// `[omega ^ [omega ^ omega]] = 0`
    JacobiForm,
    /// `ad o X^! omega = X^!(ad o omega)`
    AdPullback,
    /// `d^nabla [omega ^ psi] = [d^nabla omega ^ psi] + (-1)^l [omega ^ d^nabla psi]`
    LeibnizBracket,
    /// `d^nabla(ad o omega) = ad o d^nabla omega`
    DAdCommute,
}

impl IdentityTag {
    pub const ALL: [IdentityTag; 10] = [
        IdentityTag::PullbackCommute,
        IdentityTag::DifferentialSplit,
        IdentityTag::LeibnizEnd,
        IdentityTag::AdWedge,
        IdentityTag::PullbackBracket,
        IdentityTag::GradedAntisymmetry,
        IdentityTag::JacobiForm,
        IdentityTag::AdPullback,
        IdentityTag::LeibnizBracket,
        IdentityTag::DAdCommute,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            IdentityTag::PullbackCommute => "pullback_commute",
            IdentityTag::DifferentialSplit => "differential_split",
            IdentityTag::LeibnizEnd => "leibniz_end",
            IdentityTag::AdWedge => "ad_wedge",
            IdentityTag::PullbackBracket => "pullback_bracket",
            IdentityTag::GradedAntisymmetry => "graded_antisymmetry",
            IdentityTag::JacobiForm => "jacobi_form",
            IdentityTag::AdPullback => "ad_pullback",
            IdentityTag::LeibnizBracket => "leibniz_bracket",
            IdentityTag::DAdCommute => "d_ad_commute",
        }
    }

    pub fn equation(self) -> &'static str {
        match self {
            IdentityTag::PullbackCommute => "d^{X*nabla}(X^! omega) = X^!(d^nabla omega)",
            IdentityTag::DifferentialSplit => "d^{nabla+D} omega = d^nabla omega + D ^ omega",
            IdentityTag::LeibnizEnd => {
                "d^nabla(T ^ omega) = d^nabla T ^ omega + (-1)^m T ^ d^nabla omega"
            }
            IdentityTag::AdWedge => "(ad o omega) ^ psi = [omega ^ psi]",
            IdentityTag::PullbackBracket => "X^!([omega ^ psi]) = [X^! omega ^ X^! psi]",
            IdentityTag::GradedAntisymmetry => "[omega ^ psi] = -(-1)^{lk} [psi ^ omega]",
            IdentityTag::JacobiForm => "[omega ^ [omega ^ omega]] = 0",
            IdentityTag::AdPullback => "ad o X^! omega = X^!(ad o omega)",
            IdentityTag::LeibnizBracket => {
                "d^nabla([omega ^ psi]) = [d^nabla omega ^ psi] + (-1)^l [omega ^ d^nabla psi]"
            }
            IdentityTag::DAdCommute => "d^nabla(ad o omega) = ad o d^nabla omega",
        }
    }

    /// Whether the identity needs the connection to differentiate the bracket.
    pub fn requires_derivation_law(self) -> bool {
        matches!(self, IdentityTag::LeibnizBracket | IdentityTag::DAdCommute)
    }

    /// Whether sample points live on the source chart of the map.
    pub fn samples_source(self) -> bool {
        matches!(
            self,
            IdentityTag::PullbackCommute | IdentityTag::PullbackBracket | IdentityTag::AdPullback
        )
    }
}

impl fmt::Display for IdentityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for IdentityTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdentityTag::ALL
            .into_iter()
            .find(|t| t.tag() == s)
            .ok_or_else(|| {
                Error::ShapeMismatch(format!(
                    "unknown identity {s:?}; expected one of {}",
                    IdentityTag::ALL.map(IdentityTag::tag).join(", ")
                ))
            })
    }
}

/// Everything an identity may consume; each tag reads only what it needs.
#[derive(Clone, Debug, Default)]
pub struct IdentityInputs {
    pub omega: Option<KForm>,
    pub psi: Option<KForm>,
    /// End-valued form `T` for the Leibniz rule.
    pub end: Option<EndForm>,
    /// End-valued 1-form `D` shifting the connection.
    pub shift: Option<EndForm>,
    pub nabla: Option<Connection>,
    pub map: Option<SmoothMap>,
}

fn need<'a, T>(value: &'a Option<T>, tag: IdentityTag, what: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::ShapeMismatch(format!("identity {tag} needs {what}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub absolute: f64,
    pub relative: f64,
    pub points: usize,
    pub evaluations: usize,
}

/// Coordinate basis tuples followed by seeded random tuples.
pub fn vector_tuples<R: Rng>(dim: usize, degree: usize, rng: &mut R) -> Vec<Vec<Vec<f64>>> {
    let unit = |i: usize| {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    };
    let mut out: Vec<Vec<Vec<f64>>> = multiindex::basis(dim, degree)
        .into_iter()
        .map(|m| multiindex::indices(m).into_iter().map(unit).collect())
        .collect();
    if degree <= dim {
        for _ in 0..RANDOM_TUPLES {
            out.push(
                (0..degree)
                    .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect(),
            );
        }
    }
    out
}

fn compare(
    lhs: &dyn Alternating,
    rhs: &dyn Alternating,
    tuples: &[Vec<Vec<f64>>],
    acc: &mut Residual,
) -> usize {
    for t in tuples {
        let refs: Vec<&[f64]> = t.iter().map(Vec::as_slice).collect();
        acc.record_slices(&lhs.apply(&refs), &rhs.apply(&refs));
    }
    tuples.len()
}

fn sign(exponent: usize) -> f64 {
    if exponent.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Evaluates both sides of the identity at every point on basis and random
/// tangent-vector tuples and returns the worst absolute and relative gaps.
///
/// Derivation-law identities first check that `nabla` differentiates the
/// bracket and fail with `PreconditionFailed` otherwise.
pub fn verify_calculus_identity(
    tag: IdentityTag,
    inputs: &IdentityInputs,
    points: &[Vec<f64>],
    seed: u64,
) -> Result<IdentityResidual> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Residual::default();
    let mut evaluations = 0;
    let omega = need(&inputs.omega, tag, "a form omega")?;
    let alg = omega.algebra().clone();
    let n = alg.dim();
    let sample_dim = if tag.samples_source() {
        need(&inputs.map, tag, "a smooth map X")?.source().dim()
    } else {
        omega.chart().dim()
    };
    if let Some(p) = points.iter().find(|p| p.len() != sample_dim) {
        return Err(Error::ShapeMismatch(format!(
            "sample point has {} coordinates, identity {tag} samples a {sample_dim}-dimensional chart",
            p.len()
        )));
    }
    if tag.requires_derivation_law() {
        let nabla = need(&inputs.nabla, tag, "a connection")?;
        let residual = derivation_residual(nabla, points)?;
        if residual > tolerance::COMPATIBILITY {
            return Err(Error::PreconditionFailed {
                hypothesis: "connection differentiates the bracket".into(),
                residual,
            });
        }
    }

    match tag {
        IdentityTag::PullbackCommute => {
            let (x, nabla) = (need(&inputs.map, tag, "a map")?, need(&inputs.nabla, tag, "a connection")?);
            let lhs = ext_cov_deriv(&pullback_connection(x, nabla)?, &pullback_form(x, omega)?)?;
            let oracle = CovariantDerivative::new(nabla, omega);
            for p in points {
                let (image, jacobian) = x.eval(p)?;
                let l = PointForm::of_kform(&lhs, &mut Evaluator::new(p))?;
                let at_image = oracle.at(&mut Evaluator::new(&image))?;
                let r = Pushforward { at_image: &at_image, jacobian };
                let tuples = vector_tuples(sample_dim, lhs.degree(), &mut rng);
                evaluations += compare(&l, &r, &tuples, &mut acc);
            }
        }
        IdentityTag::DifferentialSplit => {
            let nabla = need(&inputs.nabla, tag, "a connection")?;
            let shift = need(&inputs.shift, tag, "an End-valued 1-form D")?;
            let lhs = ext_cov_deriv(&nabla.shifted(shift)?, omega)?;
            let oracle = CovariantDerivative::new(nabla, omega);
            for p in points {
                let mut ev = Evaluator::new(p);
                let l = PointForm::of_kform(&lhs, &mut ev)?;
                let d = oracle.at(&mut ev)?;
                let dp = PointForm::of_end_form(shift, &mut ev)?;
                let w = PointForm::of_kform(omega, &mut ev)?;
                let action = EndAction { fibre_dim: n, end: &dp, form: &w };
                let r = Combination { terms: vec![(1.0, &d), (1.0, &action)] };
                let tuples = vector_tuples(sample_dim, lhs.degree(), &mut rng);
                evaluations += compare(&l, &r, &tuples, &mut acc);
            }
        }
        IdentityTag::LeibnizEnd => {
            let nabla = need(&inputs.nabla, tag, "a connection")?;
            let t = need(&inputs.end, tag, "an End-valued form T")?;
            let lhs = ext_cov_deriv(nabla, &wedge_end(t, omega)?)?;
            let dt = ext_cov_deriv_end(nabla, t)?;
            let oracle = CovariantDerivative::new(nabla, omega);
            for p in points {
                let mut ev = Evaluator::new(p);
                let l = PointForm::of_kform(&lhs, &mut ev)?;
                let dtp = PointForm::of_end_form(&dt, &mut ev)?;
                let tp = PointForm::of_end_form(t, &mut ev)?;
                let w = PointForm::of_kform(omega, &mut ev)?;
                let dw = oracle.at(&mut ev)?;
                let first = EndAction { fibre_dim: n, end: &dtp, form: &w };
                let second = EndAction { fibre_dim: n, end: &tp, form: &dw };
                let r = Combination {
                    terms: vec![(1.0, &first), (sign(t.degree()), &second)],
                };
                let tuples = vector_tuples(sample_dim, lhs.degree(), &mut rng);
                evaluations += compare(&l, &r, &tuples, &mut acc);
            }
        }
        IdentityTag::AdWedge => {
            let psi = need(&inputs.psi, tag, "a second form psi")?;
            let lhs = wedge_end(&ad_compose(omega), psi)?;
            for p in points {
                let mut ev = Evaluator::new(p);
                let l = PointForm::of_kform(&lhs, &mut ev)?;
                let w = PointForm::of_kform(omega, &mut ev)?;
                let s = PointForm::of_kform(psi, &mut ev)?;
                let r = Bracket { algebra: &alg, left: &w, right: &s };
                let tuples = vector_tuples(sample_dim, lhs.degree(), &mut rng);
                evaluations += compare(&l, &r, &tuples, &mut acc);
            }
        }
        IdentityTag::PullbackBracket => {
            let x = need(&inputs.map, tag, "a map")?;
            let psi = need(&inputs.psi, tag, "a second form psi")?;
            let lhs = pullback_form(x, &wedge_bracket(omega, psi)?)?;
            for p in points {
                let (image, jacobian) = x.eval(p)?;
                let l = PointForm::of_kform(&lhs, &mut Evaluator::new(p))?;
                let mut ev = Evaluator::new(&image);
                let w = PointForm::of_kform(omega, &mut ev)?;
                let s = PointForm::of_kform(psi, &mut ev)?;
                let pw = Pushforward { at_image: &w, jacobian: jacobian.clone() };
                let ps = Pushforward { at_image: &s, jacobian };
                let r = Bracket { algebra: &alg, left: &pw, right: &ps };
                let tuples = vector_tuples(sample_dim, lhs.degree(), &mut rng);
                evaluations += compare(&l, &r, &tuples, &mut acc);
            }
        }
        IdentityTag::GradedAntisymmetry => {
            let psi = need(&inputs.psi, tag, "a second form psi")?;
            let lhs = wedge_bracket(omega, psi)?;
            let factor = -sign(omega.degree() * psi.degree());
            for p in points {
                let mut ev = Evaluator::new(p);
                let l = PointForm::of_kform(&lhs, &mut ev)?;
                let w = PointForm::of_kform(omega, &mut ev)?;
                let s = PointForm::of_kform(psi, &mut ev)?;
                let swapped = Bracket { algebra: &alg, left: &s, right: &w };
                let r = Combination { terms: vec![(factor, &swapped)] };
                let tuples = vector_tuples(sample_dim, lhs.degree(), &mut rng);
                evaluations += compare(&l, &r, &tuples, &mut acc);
            }
        }
        IdentityTag::JacobiForm => {
            let fast = wedge_bracket(omega, &wedge_bracket(omega, omega)?)?;
            let degree = fast.degree();
            for p in points {
                let mut ev = Evaluator::new(p);
                let l = PointForm::of_kform(&fast, &mut ev)?;
                let w = PointForm::of_kform(omega, &mut ev)?;
                let inner = Bracket { algebra: &alg, left: &w, right: &w };
                let slow = Bracket { algebra: &alg, left: &w, right: &inner };
                let zero = Zero { degree, len: n };
                let tuples = vector_tuples(sample_dim, degree, &mut rng);
                evaluations += compare(&l, &zero, &tuples, &mut acc);
                evaluations += compare(&slow, &zero, &tuples, &mut acc);
            }
        }
        IdentityTag::AdPullback => {
            let x = need(&inputs.map, tag, "a map")?;
            let lhs = ad_compose(&pullback_form(x, omega)?);
            for p in points {
                let (image, jacobian) = x.eval(p)?;
                let l = PointForm::of_end_form(&lhs, &mut Evaluator::new(p))?;
                let w = PointForm::of_kform(omega, &mut Evaluator::new(&image))?;
                let ad = Adjoint { algebra: &alg, inner: &w };
                let r = Pushforward { at_image: &ad, jacobian };
                let tuples = vector_tuples(sample_dim, lhs.degree(), &mut rng);
                evaluations += compare(&l, &r, &tuples, &mut acc);
            }
        }
        IdentityTag::LeibnizBracket => {
            let nabla = need(&inputs.nabla, tag, "a connection")?;
            let psi = need(&inputs.psi, tag, "a second form psi")?;
            let lhs = CovariantDerivative::new(nabla, &wedge_bracket(omega, psi)?);
            let dw = CovariantDerivative::new(nabla, omega);
            let ds = CovariantDerivative::new(nabla, psi);
            for p in points {
                let mut ev = Evaluator::new(p);
                let l = lhs.at(&mut ev)?;
                let w = PointForm::of_kform(omega, &mut ev)?;
                let s = PointForm::of_kform(psi, &mut ev)?;
                let dwp = dw.at(&mut ev)?;
                let dsp = ds.at(&mut ev)?;
                let first = Bracket { algebra: &alg, left: &dwp, right: &s };
                let second = Bracket { algebra: &alg, left: &w, right: &dsp };
                let r = Combination {
                    terms: vec![(1.0, &first), (sign(omega.degree()), &second)],
                };
                let tuples = vector_tuples(sample_dim, l.degree(), &mut rng);
                evaluations += compare(&l, &r, &tuples, &mut acc);
            }
        }
        IdentityTag::DAdCommute => {
            let nabla = need(&inputs.nabla, tag, "a connection")?;
            let lhs = ext_cov_deriv_end(nabla, &ad_compose(omega))?;
            let dw = CovariantDerivative::new(nabla, omega);
            for p in points {
                let mut ev = Evaluator::new(p);
                let l = PointForm::of_end_form(&lhs, &mut ev)?;
                let dwp = dw.at(&mut ev)?;
                let r = Adjoint { algebra: &alg, inner: &dwp };
                let tuples = vector_tuples(sample_dim, lhs.degree(), &mut rng);
                evaluations += compare(&l, &r, &tuples, &mut acc);
            }
        }
    }
    Ok(IdentityResidual {
        absolute: acc.absolute,
        relative: acc.relative,
        points: points.len(),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprfield::{Chart, Expr};
    use crate::forms::ScalarForm;
    use crate::liecore::LieAlgebra;
    use std::sync::Arc;

    fn points(dim: usize, count: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        (0..count)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn tags_round_trip() {
        for t in IdentityTag::ALL {
            assert_eq!(t.tag().parse::<IdentityTag>().unwrap(), t);
        }
        assert!("nope".parse::<IdentityTag>().is_err());
    }

    #[test]
    fn abelian_pullback_bracket_is_zero() {
        let chart = Arc::new(Chart::euclidean(2));
        let alg = Arc::new(LieAlgebra::named("u1^2").unwrap());
        let p = |s: &str| chart.parse(s).unwrap();
        let w = KForm::new(
            chart.clone(),
            alg.clone(),
            1,
            vec![
                ScalarForm::from_components(2, 1, vec![p("x"), p("y^2")]),
                ScalarForm::from_components(2, 1, vec![p("1"), p("x*y")]),
            ],
        )
        .unwrap();
        let x = SmoothMap::new(chart.clone(), chart.clone(), vec![p("x+y"), p("x*y")]).unwrap();
        let inputs = IdentityInputs {
            omega: Some(w.clone()),
            psi: Some(w),
            map: Some(x),
            ..Default::default()
        };
        let r = verify_calculus_identity(IdentityTag::PullbackBracket, &inputs, &points(2, 5), 1).unwrap();
        assert_eq!(r.absolute, 0.0);
    }

    #[test]
    fn derivation_guard_triggers() {
        let chart = Arc::new(Chart::euclidean(2));
        let alg = Arc::new(LieAlgebra::named("su2").unwrap());
        let mut gamma = vec![vec![vec![Expr::zero(); 2]; 3]; 3];
        gamma[0][0][0] = Expr::one();
        let nabla = Connection::from_coefficients(chart.clone(), alg.clone(), gamma).unwrap();
        let w = KForm::zero(chart, alg, 1);
        let inputs = IdentityInputs {
            omega: Some(w.clone()),
            psi: Some(w),
            nabla: Some(nabla),
            ..Default::default()
        };
        match verify_calculus_identity(IdentityTag::LeibnizBracket, &inputs, &points(2, 3), 1) {
            Err(Error::PreconditionFailed { residual, .. }) => assert_eq!(residual, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_inputs_are_shape_errors() {
        let chart = Arc::new(Chart::euclidean(2));
        let alg = Arc::new(LieAlgebra::named("su2").unwrap());
        let inputs = IdentityInputs {
            omega: Some(KForm::zero(chart, alg, 1)),
            ..Default::default()
        };
        assert!(matches!(
            verify_calculus_identity(IdentityTag::AdWedge, &inputs, &points(2, 1), 0),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
