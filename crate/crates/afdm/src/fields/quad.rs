use super::expr::{field_integral, EvalCtx, EvalScalar, Expr, FieldError, ScalarField};

/// 8-point Gauss-Legendre nodes/weights on [-1, 1].
const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_2,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_2,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadKind {
    CompositeSimpson,
    GaussLegendre,
}

/// Panel-doubling quadrature rule along one fiber coordinate.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureRule {
    pub kind: QuadKind,
    /// initial panel count (doubled until converged)
    pub panels: usize,
    /// relative tolerance between successive refinements
    pub refinement_tolerance: f64,
}

/// Refinement cap: 2^14 panels.
pub const MAX_PANELS: usize = 1 << 14;

impl QuadratureRule {
    pub fn new(kind: QuadKind, panels: usize, tol: f64) -> Result<Self, FieldError> {
        if kind == QuadKind::CompositeSimpson && (panels == 0 || panels % 2 != 0) {
            return Err(FieldError::PanelsOdd { panels });
        }
        Ok(QuadratureRule { kind, panels: panels.max(1), refinement_tolerance: tol })
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule { kind: QuadKind::CompositeSimpson, panels: 8, refinement_tolerance: 1e-10 }
    }
}

/// `F` with `F(.., y) = int_lower^y f(.., t) dt` along `fiber_index`, other
/// coordinates held fixed. With `upper_as_coordinate = false` the roles are
/// swapped: the running endpoint becomes the lower limit, i.e. the result is
/// `int_y^lower = -int_lower^y`.
pub fn integrate_fiber(
    f: &ScalarField,
    fiber_index: usize,
    lower: f64,
    upper_as_coordinate: bool,
    rule: QuadratureRule,
) -> Result<ScalarField, FieldError> {
    if fiber_index >= crate::num::MAX_DIM {
        return Err(FieldError::IndexOutOfRange { mu: fiber_index });
    }
    let field = field_integral(f, fiber_index, lower, rule);
    Ok(if upper_as_coordinate { field } else { -field })
}

fn sample<S: EvalScalar>(f: &Expr, fiber: usize, t: f64, ctx: &EvalCtx) -> S {
    let mut u = ctx.u.to_vec();
    u[fiber] = t;
    let child = EvalCtx { dim: ctx.dim, u: &u, pinned: ctx.pinned | (1 << fiber) };
    f.eval_s::<S>(&child)
}

fn pass<S: EvalScalar>(
    f: &Expr,
    fiber: usize,
    a: f64,
    b: f64,
    n: usize,
    kind: QuadKind,
    ctx: &EvalCtx,
) -> S {
    let h = (b - a) / n as f64;
    match kind {
        QuadKind::CompositeSimpson => {
            // n panels here means n subintervals of the composite rule
            // (kept even by construction).
            let mut acc: S = sample::<S>(f, fiber, a, ctx);
            acc = acc.add(&sample::<S>(f, fiber, b, ctx));
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                let s: S = sample::<S>(f, fiber, a + h * k as f64, ctx);
                acc = acc.add(&s.scale(w));
            }
            acc.scale(h / 3.0)
        }
        QuadKind::GaussLegendre => {
            let mut acc: S = sample::<S>(f, fiber, a, ctx).scale(0.0);
            for k in 0..n {
                let pa = a + h * k as f64;
                let mid = pa + 0.5 * h;
                for (x, w) in GL8_X.iter().zip(GL8_W.iter()) {
                    let s: S = sample::<S>(f, fiber, mid + 0.5 * h * x, ctx);
                    acc = acc.add(&s.scale(w * 0.5 * h));
                }
            }
            acc
        }
    }
}

/// Adaptive evaluation of a running fiber integral, in any scalar order.
/// Integrates the integrand jets with the fiber pinned, then installs the
/// fundamental-theorem endpoint derivatives.
pub(crate) fn eval_integral<S: EvalScalar>(
    f: &Expr,
    fiber: usize,
    lower: f64,
    rule: &QuadratureRule,
    ctx: &EvalCtx,
) -> S {
    let upper = ctx.u[fiber];
    let inner: S = if (upper - lower).abs() < 1e-300 {
        sample::<S>(f, fiber, lower, ctx).scale(0.0)
    } else {
        let mut n = rule.panels.max(2);
        if rule.kind == QuadKind::CompositeSimpson && n % 2 == 1 {
            n += 1;
        }
        let mut prev: S = pass(f, fiber, lower, upper, n, rule.kind, ctx);
        loop {
            if n * 2 > MAX_PANELS {
                break prev;
            }
            n *= 2;
            let cur: S = pass(f, fiber, lower, upper, n, rule.kind, ctx);
            let delta = cur.sub(&prev).max_abs();
            let scale = 1.0 + cur.max_abs();
            if delta <= rule.refinement_tolerance * scale {
                break cur;
            }
            prev = cur;
        }
    };
    if !inner.value().is_finite() {
        // surfaced as a poisoned value; builders scan domains and report
        // the offending point before curvature work starts
        return inner;
    }
    // endpoint jet of the integrand at the evaluation point itself
    let f_end: S = f.eval_s::<S>(ctx);
    if ctx.pinned & (1 << fiber) != 0 {
        // fiber pinned by an enclosing quadrature: no endpoint seed to fill
        return inner;
    }
    S::assemble_integral(fiber, inner, &f_end)
}

/// Scan helper: report the first non-finite integrand sample on a segment.
pub fn check_integrand_finite(
    f: &ScalarField,
    fiber: usize,
    lower: f64,
    upper: f64,
    base: &[f64],
    samples: usize,
) -> Result<(), FieldError> {
    for k in 0..=samples {
        let t = lower + (upper - lower) * k as f64 / samples as f64;
        let mut u = base.to_vec();
        u[fiber] = t;
        if !f.eval(&u).is_finite() {
            return Err(FieldError::NonFiniteSample { point: u, fiber });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::diff;

    #[test]
    fn polynomial_is_exact() {
        // int_0^1 3 t^2 dt = 1
        let f = 3.0 * ScalarField::coord(3).powi(2);
        let big_f = integrate_fiber(&f, 3, 0.0, true, QuadratureRule::default()).unwrap();
        let v = big_f.eval(&[0.0, 0.0, 0.0, 1.0]);
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn zero_integrand() {
        let f = ScalarField::zero();
        let big_f = integrate_fiber(&f, 3, 0.0, true, QuadratureRule::default()).unwrap();
        assert_eq!(big_f.eval(&[1.0, 2.0, 3.0, 4.0]), 0.0);
    }

    #[test]
    fn exp_closed_form() {
        let f = ScalarField::coord(3).exp();
        let big_f = integrate_fiber(&f, 3, 0.0, true, QuadratureRule::default()).unwrap();
        let v = big_f.eval(&[0.0, 0.0, 0.0, 0.7]);
        assert!((v - ((0.7f64).exp() - 1.0)).abs() <= 1e-10, "{v}");
    }

    #[test]
    fn gauss_legendre_matches() {
        let f = (ScalarField::coord(3) * ScalarField::coord(0)).sin();
        let rule = QuadratureRule::new(QuadKind::GaussLegendre, 2, 1e-12).unwrap();
        let big_f = integrate_fiber(&f, 3, 0.1, true, rule).unwrap();
        let u = [0.8, 0.0, 0.0, 1.3];
        // closed form: int sin(a t) dt = (cos(a*0.1) - cos(a*1.3))/a
        let a = 0.8;
        let want = ((a * 0.1f64).cos() - (a * 1.3f64).cos()) / a;
        assert!((big_f.eval(&u) - want).abs() < 1e-12);
    }

    #[test]
    fn derivative_recovers_integrand() {
        let f = (ScalarField::coord(0) + ScalarField::coord(3)).exp()
            + ScalarField::coord(3).powi(2) * ScalarField::coord(1);
        let big_f = integrate_fiber(&f, 3, -0.5, true, QuadratureRule::default()).unwrap();
        let d = diff(&big_f, 3).unwrap();
        let mut rng = crate::sampling::rng(5);
        use rand::Rng;
        for _ in 0..20 {
            let u: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!((d.eval(&u) - f.eval(&u)).abs() <= 1e-10);
        }
    }

    #[test]
    fn cross_derivatives_of_integral() {
        // F(x, y) = int_0^y sin(x t) dt; dF/dx = int_0^y t cos(x t) dt
        let f = (ScalarField::coord(0) * ScalarField::coord(3)).sin();
        let big_f = integrate_fiber(&f, 3, 0.0, true, QuadratureRule::default()).unwrap();
        let u = [0.9, 0.0, 0.0, 1.1];
        let j = big_f.eval_jet2(&u, 4);
        // closed form F = (1 - cos(x y))/x
        let (x, y) = (0.9, 1.1);
        let fv = (1.0 - (x * y as f64).cos()) / x;
        let fx = ((x * y as f64).cos() - 1.0) / (x * x) + y * (x * y).sin() / x;
        let fy = (x * y).sin();
        let fyy = x * (x * y).cos();
        let fxy = y * (x * y).cos();
        assert!((j.val - fv).abs() < 1e-10);
        assert!((j.grad[0] - fx).abs() < 1e-10);
        assert!((j.grad[3] - fy).abs() < 1e-12);
        assert!((j.hess[3][3] - fyy).abs() < 1e-12);
        assert!((j.hess[0][3] - fxy).abs() < 1e-10);
        assert!((j.hess[3][0] - fxy).abs() < 1e-10);
    }

    #[test]
    fn non_finite_sample_detected() {
        let f = ScalarField::one() / ScalarField::coord(3);
        let err = check_integrand_finite(&f, 3, -1.0, 1.0, &[0.0; 4], 16).unwrap_err();
        match err {
            FieldError::NonFiniteSample { point, fiber } => {
                assert_eq!(fiber, 3);
                assert_eq!(point[3], 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
