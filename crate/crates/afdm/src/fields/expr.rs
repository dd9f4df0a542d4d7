use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

use super::grid::GridInterp;
use super::quad::{self, QuadratureRule};
use crate::num::{Jet1, Jet2, Scalar, MAX_DIM};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("coordinate index {mu} out of range")]
    IndexOutOfRange { mu: usize },
    #[error("non-finite integrand sample at {point:?} (fiber coordinate {fiber})")]
    NonFiniteSample { point: Vec<f64>, fiber: usize },
    #[error("mixed signature (eps1 != eps2) is hyperbolic; supply the field analytically instead")]
    UnsupportedSignature,
    #[error("composite-simpson needs an even, nonzero panel count (got {panels})")]
    PanelsOdd { panels: usize },
    #[error("grid must have at least 3 points per axis (got {n1} x {n2})")]
    GridTooSmall { n1: usize, n2: usize },
    #[error("grid axis not strictly increasing")]
    BadGridAxis,
    #[error("linear solve failed to reach the residual target ({residual:.3e} after {iters} iterations)")]
    SolverStalled { residual: f64, iters: usize },
    #[error("coordinate {values:?} has wrong length or non-finite entries (chart dim {dim})")]
    BadCoord { values: Vec<f64>, dim: usize },
}

/// A point of the active chart: coordinate values plus the chart dimension
/// they belong to. Entries must be finite and the length must match.
#[derive(Clone, Debug, PartialEq)]
pub struct Coord {
    values: Vec<f64>,
    dim: usize,
}

impl Coord {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self, FieldError> {
        if values.len() != dim || values.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::BadCoord { values, dim });
        }
        Ok(Coord { values, dim })
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub(crate) type E = Arc<Expr>;

#[derive(Debug)]
pub(crate) enum Expr {
    Const(f64),
    Coord(usize),
    Add(E, E),
    Sub(E, E),
    Mul(E, E),
    Div(E, E),
    Neg(E),
    Sin(E),
    Cos(E),
    Exp(E),
    /// ln |x|
    LnAbs(E),
    /// sqrt |x|
    SqrtAbs(E),
    Sinh(E),
    Cosh(E),
    Tanh(E),
    Abs(E),
    Powi(E, i32),
    /// |x|^p
    PowAbs(E, f64),
    /// Bicubic grid sample, differentiated (dx, dy) times along its two axes.
    Grid(Arc<GridInterp>, u8, u8),
    /// Running integral of `f` along `fiber` from `lower` to the current
    /// fiber coordinate.
    FiberIntegral { f: E, fiber: usize, lower: f64, rule: QuadratureRule },
}

/// Evaluation context: coordinate values, plus coordinates that are pinned
/// to constants (quadrature sample points do not carry seed derivatives).
pub(crate) struct EvalCtx<'a> {
    pub dim: usize,
    pub u: &'a [f64],
    /// bitmask of coordinates treated as constants
    pub pinned: u32,
}

impl<'a> EvalCtx<'a> {
    fn coord<S: EvalScalar>(&self, i: usize) -> S {
        if self.pinned & (1 << i) != 0 {
            S::constant(self.dim, self.u[i])
        } else {
            S::seed(self.dim, i, self.u[i])
        }
    }
}

/// Scalar types fields can be evaluated into.
pub(crate) trait EvalScalar: Scalar + Sized {
    fn constant(dim: usize, v: f64) -> Self;
    fn seed(dim: usize, mu: usize, val: f64) -> Self;
    /// Bivariate chain rule: `g` has value/derivatives
    /// `[g, ga, gb, gaa, gab, gbb]` at `(a.value(), b.value())`.
    fn chain2(a: &Self, b: &Self, g: &[f64; 6]) -> Self;
    /// Assemble the jet of `F(.., y) = int_lower^y f dt` from the integral
    /// of the integrand jets (fiber pinned) and the integrand jet at the
    /// evaluation point itself.
    fn assemble_integral(fiber: usize, inner: Self, f_end: &Self) -> Self;
    fn max_abs(&self) -> f64;
}

impl EvalScalar for f64 {
    fn constant(_dim: usize, v: f64) -> Self {
        v
    }
    fn seed(_dim: usize, _mu: usize, val: f64) -> Self {
        val
    }
    fn chain2(_a: &Self, _b: &Self, g: &[f64; 6]) -> Self {
        g[0]
    }
    fn assemble_integral(_fiber: usize, inner: Self, _f_end: &Self) -> Self {
        inner
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl EvalScalar for Jet1 {
    fn constant(dim: usize, v: f64) -> Self {
        Jet1::constant(dim, v)
    }
    fn seed(dim: usize, mu: usize, val: f64) -> Self {
        Jet1::coord(dim, mu, val)
    }
    fn chain2(a: &Self, b: &Self, g: &[f64; 6]) -> Self {
        let mut r = Jet1::constant(a.dim, g[0]);
        for i in 0..a.dim {
            r.grad[i] = g[1] * a.grad[i] + g[2] * b.grad[i];
        }
        r
    }
    fn assemble_integral(fiber: usize, mut inner: Self, f_end: &Self) -> Self {
        inner.grad[fiber] = f_end.val;
        inner
    }
    fn max_abs(&self) -> f64 {
        let mut m = self.val.abs();
        for i in 0..self.dim {
            m = m.max(self.grad[i].abs());
        }
        m
    }
}

impl EvalScalar for Jet2 {
    fn constant(dim: usize, v: f64) -> Self {
        Jet2::constant(dim, v)
    }
    fn seed(dim: usize, mu: usize, val: f64) -> Self {
        Jet2::coord(dim, mu, val)
    }
    fn chain2(a: &Self, b: &Self, g: &[f64; 6]) -> Self {
        let d = a.dim;
        let mut r = Jet2::constant(d, g[0]);
        for i in 0..d {
            r.grad[i] = g[1] * a.grad[i] + g[2] * b.grad[i];
        }
        for i in 0..d {
            for j in 0..d {
                r.hess[i][j] = g[1] * a.hess[i][j]
                    + g[2] * b.hess[i][j]
                    + g[3] * a.grad[i] * a.grad[j]
                    + g[4] * (a.grad[i] * b.grad[j] + b.grad[i] * a.grad[j])
                    + g[5] * b.grad[i] * b.grad[j];
            }
        }
        r
    }
    fn assemble_integral(fiber: usize, mut inner: Self, f_end: &Self) -> Self {
        let d = inner.dim;
        inner.grad[fiber] = f_end.val;
        for m in 0..d {
            inner.hess[fiber][m] = f_end.grad[m];
            inner.hess[m][fiber] = f_end.grad[m];
        }
        inner
    }
    fn max_abs(&self) -> f64 {
        let mut m = self.val.abs();
        for i in 0..self.dim {
            m = m.max(self.grad[i].abs());
            for j in 0..self.dim {
                m = m.max(self.hess[i][j].abs());
            }
        }
        m
    }
}

impl Expr {
    pub(crate) fn eval_s<S: EvalScalar>(&self, ctx: &EvalCtx) -> S {
        match self {
            Expr::Const(c) => S::constant(ctx.dim, *c),
            Expr::Coord(i) => ctx.coord(*i),
            Expr::Add(a, b) => a.eval_s::<S>(ctx).add(&b.eval_s::<S>(ctx)),
            Expr::Sub(a, b) => a.eval_s::<S>(ctx).sub(&b.eval_s::<S>(ctx)),
            Expr::Mul(a, b) => a.eval_s::<S>(ctx).mul(&b.eval_s::<S>(ctx)),
            Expr::Div(a, b) => a.eval_s::<S>(ctx).div(&b.eval_s::<S>(ctx)),
            Expr::Neg(a) => a.eval_s::<S>(ctx).neg(),
            Expr::Sin(a) => a.eval_s::<S>(ctx).sin(),
            Expr::Cos(a) => a.eval_s::<S>(ctx).cos(),
            Expr::Exp(a) => a.eval_s::<S>(ctx).exp(),
            Expr::LnAbs(a) => a.eval_s::<S>(ctx).ln_abs(),
            Expr::SqrtAbs(a) => a.eval_s::<S>(ctx).sqrt_abs(),
            Expr::Sinh(a) => a.eval_s::<S>(ctx).sinh(),
            Expr::Cosh(a) => a.eval_s::<S>(ctx).cosh(),
            Expr::Tanh(a) => a.eval_s::<S>(ctx).tanh(),
            Expr::Abs(a) => a.eval_s::<S>(ctx).abs(),
            Expr::Powi(a, n) => a.eval_s::<S>(ctx).powi(*n),
            Expr::PowAbs(a, p) => a.eval_s::<S>(ctx).pow_abs(*p),
            Expr::Grid(g, dx, dy) => {
                let a = ctx.coord::<S>(g.c0);
                let b = ctx.coord::<S>(g.c1);
                let d = g.sample(a.value(), b.value(), *dx, *dy);
                S::chain2(&a, &b, &d)
            }
            Expr::FiberIntegral { f, fiber, lower, rule } => {
                quad::eval_integral::<S>(f, *fiber, *lower, rule, ctx)
            }
        }
    }

    /// Structural constant detection (for closed-form fast paths).
    pub(crate) fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            Expr::Neg(a) => a.as_const().map(|v| -v),
            _ => None,
        }
    }
}

/// A smooth scalar function of the shell coordinates, with exact first and
/// second partial derivatives. Immutable and cheap to clone; safe to share
/// between threads.
#[derive(Clone)]
pub struct ScalarField(pub(crate) E);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField")
    }
}

fn e(x: Expr) -> E {
    Arc::new(x)
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        ScalarField(e(Expr::Const(c)))
    }

    /// The coordinate function `u^mu` (0-based index).
    pub fn coord(mu: usize) -> Self {
        assert!(mu < MAX_DIM, "coordinate index {mu} out of range");
        ScalarField(e(Expr::Coord(mu)))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }
    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn sin(&self) -> Self {
        ScalarField(e(Expr::Sin(self.0.clone())))
    }
    pub fn cos(&self) -> Self {
        ScalarField(e(Expr::Cos(self.0.clone())))
    }
    pub fn exp(&self) -> Self {
        ScalarField(e(Expr::Exp(self.0.clone())))
    }
    /// ln |f|
    pub fn ln_abs(&self) -> Self {
        ScalarField(e(Expr::LnAbs(self.0.clone())))
    }
    /// sqrt |f|
    pub fn sqrt_abs(&self) -> Self {
        ScalarField(e(Expr::SqrtAbs(self.0.clone())))
    }
    pub fn sinh(&self) -> Self {
        ScalarField(e(Expr::Sinh(self.0.clone())))
    }
    pub fn cosh(&self) -> Self {
        ScalarField(e(Expr::Cosh(self.0.clone())))
    }
    pub fn tanh(&self) -> Self {
        ScalarField(e(Expr::Tanh(self.0.clone())))
    }
    pub fn abs(&self) -> Self {
        ScalarField(e(Expr::Abs(self.0.clone())))
    }
    pub fn powi(&self, n: i32) -> Self {
        ScalarField(e(Expr::Powi(self.0.clone(), n)))
    }
    /// |f|^p
    pub fn pow_abs(&self, p: f64) -> Self {
        ScalarField(e(Expr::PowAbs(self.0.clone(), p)))
    }
    pub fn squared(&self) -> Self {
        self.powi(2)
    }

    pub fn as_const(&self) -> Option<f64> {
        self.0.as_const()
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        let ctx = EvalCtx { dim: u.len().min(MAX_DIM), u, pinned: 0 };
        self.0.eval_s::<f64>(&ctx)
    }

    pub fn eval_jet1(&self, u: &[f64], dim: usize) -> Jet1 {
        let ctx = EvalCtx { dim, u, pinned: 0 };
        self.0.eval_s::<Jet1>(&ctx)
    }

    pub fn eval_jet2(&self, u: &[f64], dim: usize) -> Jet2 {
        let ctx = EvalCtx { dim, u, pinned: 0 };
        self.0.eval_s::<Jet2>(&ctx)
    }

    /// Symbolic partial derivative along `mu` (exact).
    pub(crate) fn diff(&self, mu: usize) -> ScalarField {
        ScalarField(diff_expr(&self.0, mu))
    }

    /// Replace coordinate `mu` by the constant `v` (tree rewrite).
    pub fn substitute(&self, mu: usize, v: f64) -> ScalarField {
        ScalarField(subst(&self.0, mu, v))
    }

    /// Numeric probe: max |d f / d u^mu| over the given sample points.
    pub fn max_partial_at(&self, mu: usize, dim: usize, pts: &[Vec<f64>]) -> f64 {
        pts.iter()
            .map(|p| self.eval_jet1(p, dim).grad[mu].abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn field_from_grid(g: Arc<GridInterp>) -> ScalarField {
    ScalarField(e(Expr::Grid(g, 0, 0)))
}

pub(crate) fn field_integral(
    f: &ScalarField,
    fiber: usize,
    lower: f64,
    rule: QuadratureRule,
) -> ScalarField {
    ScalarField(e(Expr::FiberIntegral { f: f.0.clone(), fiber, lower, rule }))
}

fn zero() -> E {
    e(Expr::Const(0.0))
}

fn is_zero(x: &E) -> bool {
    matches!(**x, Expr::Const(c) if c == 0.0)
}

fn add(a: E, b: E) -> E {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    e(Expr::Add(a, b))
}

fn sub(a: E, b: E) -> E {
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return e(Expr::Neg(b));
    }
    e(Expr::Sub(a, b))
}

fn mul(a: E, b: E) -> E {
    if is_zero(&a) || is_zero(&b) {
        return zero();
    }
    if let Expr::Const(c) = *a {
        if c == 1.0 {
            return b;
        }
    }
    if let Expr::Const(c) = *b {
        if c == 1.0 {
            return a;
        }
    }
    e(Expr::Mul(a, b))
}

fn div(a: E, b: E) -> E {
    if is_zero(&a) {
        return zero();
    }
    e(Expr::Div(a, b))
}

fn diff_expr(x: &E, mu: usize) -> E {
    match &**x {
        Expr::Const(_) => zero(),
        Expr::Coord(i) => {
            if *i == mu {
                e(Expr::Const(1.0))
            } else {
                zero()
            }
        }
        Expr::Add(a, b) => add(diff_expr(a, mu), diff_expr(b, mu)),
        Expr::Sub(a, b) => sub(diff_expr(a, mu), diff_expr(b, mu)),
        Expr::Mul(a, b) => add(mul(diff_expr(a, mu), b.clone()), mul(a.clone(), diff_expr(b, mu))),
        Expr::Div(a, b) => {
            // (a/b)' = a'/b - a b'/b^2
            let t1 = div(diff_expr(a, mu), b.clone());
            let t2 = div(mul(a.clone(), diff_expr(b, mu)), e(Expr::Powi(b.clone(), 2)));
            sub(t1, t2)
        }
        Expr::Neg(a) => {
            let d = diff_expr(a, mu);
            if is_zero(&d) {
                zero()
            } else {
                e(Expr::Neg(d))
            }
        }
        Expr::Sin(a) => mul(e(Expr::Cos(a.clone())), diff_expr(a, mu)),
        Expr::Cos(a) => mul(e(Expr::Neg(e(Expr::Sin(a.clone())))), diff_expr(a, mu)),
        Expr::Exp(a) => mul(e(Expr::Exp(a.clone())), diff_expr(a, mu)),
        Expr::LnAbs(a) => div(diff_expr(a, mu), a.clone()),
        // d sqrt|x| = x x' / (2 |x|^{3/2})
        Expr::SqrtAbs(a) => div(
            mul(a.clone(), diff_expr(a, mu)),
            mul(e(Expr::Const(2.0)), e(Expr::PowAbs(a.clone(), 1.5))),
        ),
        Expr::Sinh(a) => mul(e(Expr::Cosh(a.clone())), diff_expr(a, mu)),
        Expr::Cosh(a) => mul(e(Expr::Sinh(a.clone())), diff_expr(a, mu)),
        Expr::Tanh(a) => {
            let t = e(Expr::Tanh(a.clone()));
            let sech2 = sub(e(Expr::Const(1.0)), e(Expr::Powi(t, 2)));
            mul(sech2, diff_expr(a, mu))
        }
        Expr::Abs(a) => mul(div(a.clone(), e(Expr::Abs(a.clone()))), diff_expr(a, mu)),
        Expr::Powi(a, n) => {
            if *n == 0 {
                return zero();
            }
            mul(
                mul(e(Expr::Const(f64::from(*n))), e(Expr::Powi(a.clone(), n - 1))),
                diff_expr(a, mu),
            )
        }
        // d |x|^p = p x |x|^{p-2} x'
        Expr::PowAbs(a, p) => mul(
            mul(
                e(Expr::Const(*p)),
                mul(a.clone(), e(Expr::PowAbs(a.clone(), p - 2.0))),
            ),
            diff_expr(a, mu),
        ),
        Expr::Grid(g, dx, dy) => {
            if mu == g.c0 {
                if *dx >= 3 {
                    zero()
                } else {
                    e(Expr::Grid(g.clone(), dx + 1, *dy))
                }
            } else if mu == g.c1 {
                if *dy >= 3 {
                    zero()
                } else {
                    e(Expr::Grid(g.clone(), *dx, dy + 1))
                }
            } else {
                zero()
            }
        }
        Expr::FiberIntegral { f, fiber, lower, rule } => {
            if mu == *fiber {
                f.clone()
            } else {
                let df = diff_expr(f, mu);
                if is_zero(&df) {
                    zero()
                } else {
                    e(Expr::FiberIntegral { f: df, fiber: *fiber, lower: *lower, rule: *rule })
                }
            }
        }
    }
}

fn subst(x: &E, mu: usize, v: f64) -> E {
    match &**x {
        Expr::Const(_) => x.clone(),
        Expr::Coord(i) => {
            if *i == mu {
                e(Expr::Const(v))
            } else {
                x.clone()
            }
        }
        Expr::Add(a, b) => add(subst(a, mu, v), subst(b, mu, v)),
        Expr::Sub(a, b) => sub(subst(a, mu, v), subst(b, mu, v)),
        Expr::Mul(a, b) => mul(subst(a, mu, v), subst(b, mu, v)),
        Expr::Div(a, b) => div(subst(a, mu, v), subst(b, mu, v)),
        Expr::Neg(a) => e(Expr::Neg(subst(a, mu, v))),
        Expr::Sin(a) => e(Expr::Sin(subst(a, mu, v))),
        Expr::Cos(a) => e(Expr::Cos(subst(a, mu, v))),
        Expr::Exp(a) => e(Expr::Exp(subst(a, mu, v))),
        Expr::LnAbs(a) => e(Expr::LnAbs(subst(a, mu, v))),
        Expr::SqrtAbs(a) => e(Expr::SqrtAbs(subst(a, mu, v))),
        Expr::Sinh(a) => e(Expr::Sinh(subst(a, mu, v))),
        Expr::Cosh(a) => e(Expr::Cosh(subst(a, mu, v))),
        Expr::Tanh(a) => e(Expr::Tanh(subst(a, mu, v))),
        Expr::Abs(a) => e(Expr::Abs(subst(a, mu, v))),
        Expr::Powi(a, n) => e(Expr::Powi(subst(a, mu, v), *n)),
        Expr::PowAbs(a, p) => e(Expr::PowAbs(subst(a, mu, v), *p)),
        Expr::Grid(..) => x.clone(),
        Expr::FiberIntegral { f, fiber, lower, rule } => {
            // substituting the fiber coordinate itself would freeze the
            // upper limit; not needed by any caller, so keep it symbolic
            e(Expr::FiberIntegral { f: subst(f, mu, v), fiber: *fiber, lower: *lower, rule: *rule })
        }
    }
}

macro_rules! field_binop {
    ($tr:ident, $m:ident, $variant:ident) => {
        impl $tr for ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: ScalarField) -> ScalarField {
                ScalarField(e(Expr::$variant(self.0, rhs.0)))
            }
        }
        impl $tr for &ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: &ScalarField) -> ScalarField {
                ScalarField(e(Expr::$variant(self.0.clone(), rhs.0.clone())))
            }
        }
        impl $tr<f64> for ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: f64) -> ScalarField {
                ScalarField(e(Expr::$variant(self.0, e(Expr::Const(rhs)))))
            }
        }
        impl $tr<ScalarField> for f64 {
            type Output = ScalarField;
            fn $m(self, rhs: ScalarField) -> ScalarField {
                ScalarField(e(Expr::$variant(e(Expr::Const(self)), rhs.0)))
            }
        }
    };
}

field_binop!(Add, add, Add);
field_binop!(Sub, sub, Sub);
field_binop!(Mul, mul, Mul);
field_binop!(Div, div, Div);

impl Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField(e(Expr::Neg(self.0)))
    }
}
impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField(e(Expr::Neg(self.0.clone())))
    }
}
