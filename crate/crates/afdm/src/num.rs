//! Forward-mode jet arithmetic.
//!
//! Every scalar quantity in the engine is evaluated either as a plain `f64`,
//! as a [`Jet1`] (value + gradient) or as a [`Jet2`] (value + gradient +
//! Hessian) over the active chart coordinates. The jets are the flattened
//! form of (nested) dual-number evaluation, so all derivatives are exact up
//! to roundoff; finite differences appear only in test oracles.

/// Hard ceiling on chart dimension (shell count `s <= 4`, dim = 4 + 2s).
pub const MAX_DIM: usize = 12;

/// First-order jet: value and gradient over `dim` coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Jet1 {
    pub dim: usize,
    pub val: f64,
    pub grad: [f64; MAX_DIM],
}

/// Second-order jet: value, gradient and (symmetric) Hessian.
#[derive(Clone, Debug)]
pub struct Jet2 {
    pub dim: usize,
    pub val: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet1 {
    #[inline]
    pub fn constant(dim: usize, val: f64) -> Self {
        Jet1 { dim, val, grad: [0.0; MAX_DIM] }
    }

    /// Jet seeded for coordinate `mu` (d u^mu / d u^mu = 1).
    #[inline]
    pub fn coord(dim: usize, mu: usize, val: f64) -> Self {
        let mut j = Self::constant(dim, val);
        j.grad[mu] = 1.0;
        j
    }
}

impl Jet2 {
    #[inline]
    pub fn constant(dim: usize, val: f64) -> Self {
        Jet2 { dim, val, grad: [0.0; MAX_DIM], hess: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    #[inline]
    pub fn coord(dim: usize, mu: usize, val: f64) -> Self {
        let mut j = Self::constant(dim, val);
        j.grad[mu] = 1.0;
        j
    }

    /// Drop the Hessian.
    #[inline]
    pub fn to_jet1(&self) -> Jet1 {
        Jet1 { dim: self.dim, val: self.val, grad: self.grad }
    }

    /// First-order jet of the partial derivative along `mu`: value is
    /// `grad[mu]`, gradient is the `mu`-th Hessian row.
    #[inline]
    pub fn partial_jet(&self, mu: usize) -> Jet1 {
        Jet1 { dim: self.dim, val: self.grad[mu], grad: self.hess[mu] }
    }

    pub fn is_finite(&self) -> bool {
        if !self.val.is_finite() {
            return false;
        }
        for i in 0..self.dim {
            if !self.grad[i].is_finite() {
                return false;
            }
            for j in 0..self.dim {
                if !self.hess[i][j].is_finite() {
                    return false;
                }
            }
        }
        true
    }
}

/// Scalar types the field/tensor algebra can be evaluated over.
///
/// `f64`, `Jet1` and `Jet2` implement it; generic code (field evaluation,
/// Christoffel assembly, small matrix inverses) is written once against this
/// trait.
pub trait Scalar: Clone {
    fn from_f64_like(&self, v: f64) -> Self;
    fn value(&self) -> f64;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;

    fn scale(&self, c: f64) -> Self;
    /// Chain rule for a univariate function with derivatives `d0 = f(x)`,
    /// `d1 = f'(x)`, `d2 = f''(x)` evaluated at `self.value()`.
    fn chain(&self, d0: f64, d1: f64, d2: f64) -> Self;

    fn sin(&self) -> Self {
        let x = self.value();
        self.chain(x.sin(), x.cos(), -x.sin())
    }
    fn cos(&self) -> Self {
        let x = self.value();
        self.chain(x.cos(), -x.sin(), -x.cos())
    }
    fn exp(&self) -> Self {
        let e = self.value().exp();
        self.chain(e, e, e)
    }
    /// ln |x| (derivative 1/x is sign-free).
    fn ln_abs(&self) -> Self {
        let x = self.value();
        self.chain(x.abs().ln(), 1.0 / x, -1.0 / (x * x))
    }
    /// sqrt |x| with derivative sign(x)/(2 sqrt|x|).
    fn sqrt_abs(&self) -> Self {
        let x = self.value();
        let s = x.abs().sqrt();
        let sg = if x < 0.0 { -1.0 } else { 1.0 };
        self.chain(s, sg / (2.0 * s), -1.0 / (4.0 * s * s * s))
    }
    fn sinh(&self) -> Self {
        let x = self.value();
        self.chain(x.sinh(), x.cosh(), x.sinh())
    }
    fn cosh(&self) -> Self {
        let x = self.value();
        self.chain(x.cosh(), x.sinh(), x.cosh())
    }
    fn tanh(&self) -> Self {
        let x = self.value();
        let t = x.tanh();
        let s = 1.0 - t * t;
        self.chain(t, s, -2.0 * t * s)
    }
    fn abs(&self) -> Self {
        let x = self.value();
        let sg = if x < 0.0 { -1.0 } else { 1.0 };
        self.chain(x.abs(), sg, 0.0)
    }
    fn powi(&self, n: i32) -> Self {
        let x = self.value();
        let d1 = f64::from(n) * x.powi(n - 1);
        let d2 = f64::from(n) * f64::from(n - 1) * x.powi(n - 2);
        self.chain(x.powi(n), d1, d2)
    }
    /// |x|^p, derivative p sign(x) |x|^(p-1).
    fn pow_abs(&self, p: f64) -> Self {
        let x = self.value();
        let a = x.abs();
        let sg = if x < 0.0 { -1.0 } else { 1.0 };
        self.chain(a.powf(p), p * sg * a.powf(p - 1.0), p * (p - 1.0) * a.powf(p - 2.0))
    }
    fn recip(&self) -> Self {
        self.powi(-1)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64_like(&self, v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    #[inline]
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    #[inline]
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    #[inline]
    fn neg(&self) -> Self {
        -self
    }
    #[inline]
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    #[inline]
    fn chain(&self, d0: f64, _d1: f64, _d2: f64) -> Self {
        d0
    }
}

impl Scalar for Jet1 {
    #[inline]
    fn from_f64_like(&self, v: f64) -> Self {
        Jet1::constant(self.dim, v)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.val
    }
    fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        r.val += o.val;
        for i in 0..self.dim {
            r.grad[i] += o.grad[i];
        }
        r
    }
    fn sub(&self, o: &Self) -> Self {
        let mut r = *self;
        r.val -= o.val;
        for i in 0..self.dim {
            r.grad[i] -= o.grad[i];
        }
        r
    }
    fn mul(&self, o: &Self) -> Self {
        let mut r = Jet1::constant(self.dim, self.val * o.val);
        for i in 0..self.dim {
            r.grad[i] = self.grad[i] * o.val + self.val * o.grad[i];
        }
        r
    }
    fn div(&self, o: &Self) -> Self {
        let inv = 1.0 / o.val;
        let v = self.val * inv;
        let mut r = Jet1::constant(self.dim, v);
        for i in 0..self.dim {
            r.grad[i] = (self.grad[i] - v * o.grad[i]) * inv;
        }
        r
    }
    fn neg(&self) -> Self {
        let mut r = *self;
        r.val = -r.val;
        for i in 0..self.dim {
            r.grad[i] = -r.grad[i];
        }
        r
    }
    fn scale(&self, c: f64) -> Self {
        let mut r = *self;
        r.val *= c;
        for i in 0..self.dim {
            r.grad[i] *= c;
        }
        r
    }
    fn chain(&self, d0: f64, d1: f64, _d2: f64) -> Self {
        let mut r = Jet1::constant(self.dim, d0);
        for i in 0..self.dim {
            r.grad[i] = d1 * self.grad[i];
        }
        r
    }
}

impl Scalar for Jet2 {
    #[inline]
    fn from_f64_like(&self, v: f64) -> Self {
        Jet2::constant(self.dim, v)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.val
    }
    fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.val += o.val;
        for i in 0..self.dim {
            r.grad[i] += o.grad[i];
            for j in 0..self.dim {
                r.hess[i][j] += o.hess[i][j];
            }
        }
        r
    }
    fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.val -= o.val;
        for i in 0..self.dim {
            r.grad[i] -= o.grad[i];
            for j in 0..self.dim {
                r.hess[i][j] -= o.hess[i][j];
            }
        }
        r
    }
    fn mul(&self, o: &Self) -> Self {
        let d = self.dim;
        let mut r = Jet2::constant(d, self.val * o.val);
        for i in 0..d {
            r.grad[i] = self.grad[i] * o.val + self.val * o.grad[i];
        }
        for i in 0..d {
            for j in 0..d {
                r.hess[i][j] = self.hess[i][j] * o.val
                    + self.grad[i] * o.grad[j]
                    + self.grad[j] * o.grad[i]
                    + self.val * o.hess[i][j];
            }
        }
        r
    }
    fn div(&self, o: &Self) -> Self {
        // f/g = f * g^-1 with (g^-1)' = -g'/g^2, (g^-1)'' = -g''/g^2 + 2 g'^2/g^3
        let inv = o.chain(1.0 / o.val, -1.0 / (o.val * o.val), 2.0 / (o.val * o.val * o.val));
        self.mul(&inv)
    }
    fn neg(&self) -> Self {
        self.scale(-1.0)
    }
    fn scale(&self, c: f64) -> Self {
        let mut r = self.clone();
        r.val *= c;
        for i in 0..self.dim {
            r.grad[i] *= c;
            for j in 0..self.dim {
                r.hess[i][j] *= c;
            }
        }
        r
    }
    fn chain(&self, d0: f64, d1: f64, d2: f64) -> Self {
        let d = self.dim;
        let mut r = Jet2::constant(d, d0);
        for i in 0..d {
            r.grad[i] = d1 * self.grad[i];
        }
        for i in 0..d {
            for j in 0..d {
                r.hess[i][j] = d1 * self.hess[i][j] + d2 * self.grad[i] * self.grad[j];
            }
        }
        r
    }
}

/// In-place Gauss-Jordan inverse of an `n x n` matrix stored row-major,
/// generic over the scalar type (plain values or jets). Partial pivoting on
/// the underlying values. Returns `false` on a (numerically) singular pivot.
pub fn invert_matrix<S: Scalar>(n: usize, a: &mut Vec<S>) -> bool {
    debug_assert_eq!(a.len(), n * n);
    let one = a[0].from_f64_like(1.0);
    let zero = a[0].from_f64_like(0.0);
    let mut inv: Vec<S> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            inv.push(if i == j { one.clone() } else { zero.clone() });
        }
    }
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].value().abs();
        for r in col + 1..n {
            let v = a[r * n + col].value().abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return false;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
                inv.swap(col * n + j, piv * n + j);
            }
        }
        let p = a[col * n + col].clone();
        for j in 0..n {
            a[col * n + j] = a[col * n + j].div(&p);
            inv[col * n + j] = inv[col * n + j].div(&p);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col].clone();
            if f.value() == 0.0 {
                // still must clear jet parts
            }
            for j in 0..n {
                let t = f.mul(&a[col * n + j]);
                a[r * n + j] = a[r * n + j].sub(&t);
                let t = f.mul(&inv[col * n + j]);
                inv[r * n + j] = inv[r * n + j].sub(&t);
            }
        }
    }
    *a = inv;
    true
}
