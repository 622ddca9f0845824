//! Expression DAG for smooth coefficient fields.
//!
//! Nodes are reference counted and shared freely. Every node caches the set
//! of coordinates it depends on as a bitmask, which lets differentiation
//! short-circuit whole subtrees. Evaluation and differentiation memoize on
//! node identity so shared subgraphs are visited once per pass.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::ExprError;

#[derive(Debug)]
pub(crate) enum Node {
    Const(f64),
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, i32),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
}

#[derive(Debug)]
pub(crate) struct Inner {
    pub(crate) node: Node,
    vars: u64,
}

/// A shared, immutable expression over chart coordinates `x[0..n)`.
#[derive(Clone, Debug)]
pub struct Expr(pub(crate) Arc<Inner>);

impl Expr {
    fn wrap(node: Node) -> Self {
        let vars = match &node {
            Node::Const(_) => 0,
            Node::Var(i) => 1u64 << *i,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.vars() | b.vars()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
                a.vars()
            }
        };
        Expr(Arc::new(Inner { node, vars }))
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0.node
    }

    fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    fn is_shared(&self) -> bool {
        Arc::strong_count(&self.0) > 1
    }

    /// Bitmask of coordinate indices this expression depends on.
    pub fn vars(&self) -> u64 {
        self.0.vars
    }

    pub fn depends_on(&self, index: usize) -> bool {
        index < 64 && self.vars() & (1u64 << index) != 0
    }

    pub fn constant(value: f64) -> Self {
        Self::wrap(Node::Const(value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Coordinate function `x[index]`.
    pub fn var(index: usize) -> Self {
        assert!(index < 64, "at most 64 coordinates are supported");
        Self::wrap(Node::Var(index))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// True when the expression is the literal zero. Not a numeric test.
    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn add(&self, other: &Expr) -> Expr {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(a), _) if a == 0.0 => other.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::wrap(Node::Add(self.clone(), other.clone())),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (Some(a), _) if a == 0.0 => other.neg(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::wrap(Node::Sub(self.clone(), other.clone())),
        }
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => Expr::zero(),
            (Some(a), _) if a == 1.0 => other.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            (Some(a), _) if a == -1.0 => other.neg(),
            (_, Some(b)) if b == -1.0 => self.neg(),
            _ => Self::wrap(Node::Mul(self.clone(), other.clone())),
        }
    }

    pub fn scale(&self, factor: f64) -> Expr {
        self.mul(&Expr::constant(factor))
    }

    pub fn div(&self, other: &Expr) -> Expr {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::constant(a / b),
            (Some(a), _) if a == 0.0 => Expr::zero(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            _ => Self::wrap(Node::Div(self.clone(), other.clone())),
        }
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => Self::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn powi(&self, exponent: i32) -> Expr {
        match (self.as_constant(), exponent) {
            (_, 0) => Expr::one(),
            (_, 1) => self.clone(),
            (Some(c), n) if c != 0.0 || n > 0 => Expr::constant(c.powi(n)),
            _ => Self::wrap(Node::Pow(self.clone(), exponent)),
        }
    }

    pub fn sin(&self) -> Expr {
        match self.as_constant() {
            Some(c) => Expr::constant(c.sin()),
            None => Self::wrap(Node::Sin(self.clone())),
        }
    }

    pub fn cos(&self) -> Expr {
        match self.as_constant() {
            Some(c) => Expr::constant(c.cos()),
            None => Self::wrap(Node::Cos(self.clone())),
        }
    }

    pub fn exp(&self) -> Expr {
        match self.as_constant() {
            Some(c) => Expr::constant(c.exp()),
            None => Self::wrap(Node::Exp(self.clone())),
        }
    }

    /// Sum of an iterator of expressions; empty sums are zero.
    pub fn sum<'a>(terms: impl IntoIterator<Item = &'a Expr>) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, t| acc.add(t))
    }

    /// Exact partial derivative with respect to coordinate `index`.
    pub fn derivative(&self, index: usize) -> Expr {
        Differentiator::new(index).diff(self)
    }

    /// Replaces every `Var(j)` by `values[j]`.
    pub fn substitute(&self, values: &[Expr]) -> Expr {
        Substituter::new(values).apply(self)
    }

    /// Single-point evaluation. Use [`Evaluator`] when many expressions share
    /// subgraphs and are evaluated at the same point.
    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        Evaluator::new(point).eval(self)
    }

    /// Number of distinct nodes reachable from this expression.
    pub fn node_count(&self) -> usize {
        fn walk(e: &Expr, seen: &mut std::collections::HashSet<usize>) {
            if !seen.insert(e.key()) {
                return;
            }
            match e.node() {
                Node::Const(_) | Node::Var(_) => {}
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
                Node::Neg(a) | Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
                    walk(a, seen)
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        walk(self, &mut seen);
        seen.len()
    }

    /// Renders the expression using the given coordinate names. The output
    /// parses back to a numerically identical expression.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Rendered { expr: self, names }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render(self, &|i| format!("x{}", i + 1), f)
    }
}

struct Rendered<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render(
            self.expr,
            &|i| {
                self.names
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", i + 1))
            },
            f,
        )
    }
}

fn render(e: &Expr, name: &dyn Fn(usize) -> String, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Const(c) => {
            if *c < 0.0 {
                write!(f, "({c:?})")
            } else {
                write!(f, "{c:?}")
            }
        }
        Node::Var(i) => write!(f, "{}", name(*i)),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            let op = match e.node() {
                Node::Add(..) => '+',
                Node::Sub(..) => '-',
                Node::Mul(..) => '*',
                _ => '/',
            };
            f.write_str("(")?;
            render(a, name, f)?;
            write!(f, " {op} ")?;
            render(b, name, f)?;
            f.write_str(")")
        }
        Node::Neg(a) => {
            f.write_str("(-")?;
            render(a, name, f)?;
            f.write_str(")")
        }
        Node::Pow(a, n) => {
            f.write_str("(")?;
            render(a, name, f)?;
            if *n < 0 {
                write!(f, ")^({n})")
            } else {
                write!(f, ")^{n}")
            }
        }
        Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
            let fun = match e.node() {
                Node::Sin(_) => "sin",
                Node::Cos(_) => "cos",
                _ => "exp",
            };
            write!(f, "{fun}(")?;
            render(a, name, f)?;
            f.write_str(")")
        }
    }
}

/// Memoizing derivative with respect to one coordinate.
///
/// Reusing one differentiator across the components of a form keeps shared
/// subgraphs shared in the result.
pub struct Differentiator {
    index: usize,
    cache: HashMap<usize, (Expr, Expr)>,
}

impl Differentiator {
    pub fn new(index: usize) -> Self {
        Self {
            index,
            cache: HashMap::new(),
        }
    }

    pub fn diff(&mut self, e: &Expr) -> Expr {
        if !e.depends_on(self.index) {
            return Expr::zero();
        }
        let shared = e.is_shared();
        if shared {
            if let Some((_, d)) = self.cache.get(&e.key()) {
                return d.clone();
            }
        }
        let d = match e.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(_) => Expr::one(),
            Node::Add(a, b) => self.diff(a).add(&self.diff(b)),
            Node::Sub(a, b) => self.diff(a).sub(&self.diff(b)),
            Node::Mul(a, b) => {
                let da = self.diff(a);
                let db = self.diff(b);
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                let da = self.diff(a);
                let db = self.diff(b);
                if db.is_zero() {
                    da.div(b)
                } else {
                    da.div(b).sub(&a.mul(&db).div(&b.powi(2)))
                }
            }
            Node::Neg(a) => self.diff(a).neg(),
            Node::Pow(a, n) => {
                let da = self.diff(a);
                a.powi(n - 1).scale(f64::from(*n)).mul(&da)
            }
            Node::Sin(a) => a.cos().mul(&self.diff(a)),
            Node::Cos(a) => a.sin().mul(&self.diff(a)).neg(),
            Node::Exp(a) => e.mul(&self.diff(a)),
        };
        if shared {
            self.cache.insert(e.key(), (e.clone(), d.clone()));
        }
        d
    }
}

struct Substituter<'a> {
    values: &'a [Expr],
    cache: HashMap<usize, (Expr, Expr)>,
}

impl<'a> Substituter<'a> {
    fn new(values: &'a [Expr]) -> Self {
        Self {
            values,
            cache: HashMap::new(),
        }
    }

    fn apply(&mut self, e: &Expr) -> Expr {
        if e.vars() == 0 {
            return e.clone();
        }
        let shared = e.is_shared();
        if shared {
            if let Some((_, r)) = self.cache.get(&e.key()) {
                return r.clone();
            }
        }
        let r = match e.node() {
            Node::Const(_) => e.clone(),
            Node::Var(i) => self.values[*i].clone(),
            Node::Add(a, b) => self.apply(a).add(&self.apply(b)),
            Node::Sub(a, b) => self.apply(a).sub(&self.apply(b)),
            Node::Mul(a, b) => self.apply(a).mul(&self.apply(b)),
            Node::Div(a, b) => self.apply(a).div(&self.apply(b)),
            Node::Neg(a) => self.apply(a).neg(),
            Node::Pow(a, n) => self.apply(a).powi(*n),
            Node::Sin(a) => self.apply(a).sin(),
            Node::Cos(a) => self.apply(a).cos(),
            Node::Exp(a) => self.apply(a).exp(),
        };
        if shared {
            self.cache.insert(e.key(), (e.clone(), r.clone()));
        }
        r
    }
}

/// Point evaluator with a cache over shared nodes.
///
/// Keeps every cached node alive, so a single evaluator may be reused across
/// unrelated expressions at the same point.
pub struct Evaluator<'p> {
    point: &'p [f64],
    cache: HashMap<usize, (Expr, f64)>,
    min_divisor: f64,
}

impl<'p> Evaluator<'p> {
    pub fn new(point: &'p [f64]) -> Self {
        Self {
            point,
            cache: HashMap::new(),
            min_divisor: f64::INFINITY,
        }
    }

    pub fn point(&self) -> &[f64] {
        self.point
    }

    /// Smallest absolute divisor (or base of a negative power) seen so far.
    pub fn min_divisor(&self) -> f64 {
        self.min_divisor
    }

    pub fn eval(&mut self, e: &Expr) -> Result<f64, ExprError> {
        let shared = e.is_shared();
        if shared {
            if let Some((_, v)) = self.cache.get(&e.key()) {
                return Ok(*v);
            }
        }
        let v = match e.node() {
            Node::Const(c) => *c,
            Node::Var(i) => *self.point.get(*i).ok_or(ExprError::PointDimension {
                expected: *i + 1,
                found: self.point.len(),
            })?,
            Node::Add(a, b) => self.eval(a)? + self.eval(b)?,
            Node::Sub(a, b) => self.eval(a)? - self.eval(b)?,
            Node::Mul(a, b) => self.eval(a)? * self.eval(b)?,
            Node::Div(a, b) => {
                let num = self.eval(a)?;
                let den = self.eval(b)?;
                self.min_divisor = self.min_divisor.min(den.abs());
                if den == 0.0 {
                    return Err(ExprError::Domain {
                        reason: "division by zero".into(),
                    });
                }
                num / den
            }
            Node::Neg(a) => -self.eval(a)?,
            Node::Pow(a, n) => {
                let base = self.eval(a)?;
                if *n < 0 {
                    self.min_divisor = self.min_divisor.min(base.abs());
                    if base == 0.0 {
                        return Err(ExprError::Domain {
                            reason: "negative power of zero".into(),
                        });
                    }
                }
                base.powi(*n)
            }
            Node::Sin(a) => self.eval(a)?.sin(),
            Node::Cos(a) => self.eval(a)?.cos(),
            Node::Exp(a) => self.eval(a)?.exp(),
        };
        if shared {
            self.cache.insert(e.key(), (e.clone(), v));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var(0)
    }
    fn y() -> Expr {
        Expr::var(1)
    }

    #[test]
    fn folding_keeps_literals_small() {
        assert!(x().mul(&Expr::zero()).is_zero());
        assert_eq!(Expr::constant(2.0).add(&Expr::constant(3.0)).as_constant(), Some(5.0));
        assert_eq!(x().neg().neg().node_count(), 1);
    }

    #[test]
    fn derivative_of_power_and_trig() {
        let f = x().powi(3).mul(&y().sin());
        let dfx = f.derivative(0);
        let dfy = f.derivative(1);
        let p = [1.5, 0.3];
        assert!((dfx.eval(&p).unwrap() - 3.0 * 2.25 * 0.3f64.sin()).abs() < 1e-14);
        assert!((dfy.eval(&p).unwrap() - 3.375 * 0.3f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn quotient_rule() {
        let f = Expr::one().div(&x());
        let d = f.derivative(0);
        assert!((d.eval(&[2.0]).unwrap() + 0.25).abs() < 1e-15);
        assert!(matches!(f.eval(&[0.0]), Err(ExprError::Domain { .. })));
    }

    #[test]
    fn negative_powers_are_guarded() {
        let f = x().powi(-2);
        assert!((f.eval(&[2.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!(f.eval(&[0.0]).is_err());
        let d = f.derivative(0);
        assert!((d.eval(&[2.0]).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn substitution_composes() {
        let f = x().mul(&y());
        let g = f.substitute(&[y().powi(2), x().add(&Expr::one())]);
        assert!((g.eval(&[2.0, 3.0]).unwrap() - 27.0).abs() < 1e-15);
    }

    #[test]
    fn shared_subgraphs_are_cached() {
        let mut e = x().add(&y());
        for _ in 0..40 {
            e = e.mul(&e);
        }
        assert!(e.node_count() < 100);
        let v = e.eval(&[0.5, 0.5]).unwrap();
        assert_eq!(v, 1.0);
        let d = e.derivative(0);
        assert!(d.node_count() < 1000);
    }
}
