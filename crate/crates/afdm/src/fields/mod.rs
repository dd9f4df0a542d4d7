//! Scalar fields over shell coordinates.
//!
//! A [`ScalarField`] is a closed-form composite (arithmetic, elementary
//! functions, abs-guarded powers) extended with two non-elementary builders:
//! grid-backed bicubic interpolants (Poisson solver output) and running
//! integrals along a fiber coordinate (quadrature). Fields evaluate to plain
//! values or to first/second order jets; all derivatives are exact.
//!
//! Differentiation is symbolic on the expression tree, so the result of
//! [`diff`] is again a field with full jet capability.

mod expr;
mod grid;
mod quad;

pub use expr::{Coord, FieldError, ScalarField};
pub use grid::{analytic_psi, solve_poisson_2d, AnalyticPsi, Grid2D, PoissonSolution};
pub use quad::{integrate_fiber, QuadKind, QuadratureRule};

pub(crate) use expr::Expr;

/// Exact partial derivative of `f` along coordinate `mu`.
///
/// The returned field is a new closed-form composite; evaluating its own
/// first and second derivatives therefore remains exact (third derivatives
/// of `f` are produced symbolically, then propagated by jets).
pub fn diff(f: &ScalarField, mu: usize) -> Result<ScalarField, FieldError> {
    if mu >= crate::num::MAX_DIM {
        return Err(FieldError::IndexOutOfRange { mu });
    }
    Ok(f.diff(mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Jet2;

    fn p4(u: [f64; 4]) -> Vec<f64> {
        u.to_vec()
    }

    #[test]
    fn diff_polynomial() {
        // f = u1 * u2^2 -> d/du2 = 2 u1 u2  (coordinates are 0-based here)
        let f = ScalarField::coord(0) * ScalarField::coord(1).powi(2);
        let d = diff(&f, 1).unwrap();
        for (a, b) in [(0.3, -1.2), (1.7, 0.4), (-0.5, 2.2)] {
            let u = p4([a, b, 0.0, 0.0]);
            assert!((d.eval(&u) - 2.0 * a * b).abs() < 1e-14);
        }
    }

    #[test]
    fn diff_constant_is_zero() {
        let f = ScalarField::constant(4.25);
        let d = diff(&f, 2).unwrap();
        assert_eq!(d.eval(&p4([1.0, 2.0, 3.0, 4.0])), 0.0);
    }

    #[test]
    fn diff_matches_central_difference() {
        // f = sin(u4), d/du4 at 0.3 -> cos(0.3); FD oracle with h = 1e-5
        let f = ScalarField::coord(3).sin();
        let d = diff(&f, 3).unwrap();
        let u = p4([0.0, 0.0, 0.0, 0.3]);
        let exact = d.eval(&u);
        assert!((exact - (0.3f64).cos()).abs() < 1e-14);
        let h = 1e-5;
        let fd = ((0.3 + h).sin() - (0.3 - h).sin()) / (2.0 * h);
        assert!((exact - fd).abs() <= 1e-9);
    }

    #[test]
    fn index_out_of_range_rejected() {
        let f = ScalarField::coord(0);
        assert!(diff(&f, 99).is_err());
    }

    #[test]
    fn mixed_partials_commute() {
        use rand::Rng;
        let mut rng = crate::sampling::rng(17);
        let f = (ScalarField::coord(0) * ScalarField::coord(3)).sin()
            * (ScalarField::coord(1) * ScalarField::constant(0.4)).exp()
            + ScalarField::coord(2).powi(3) / (ScalarField::constant(2.0) + ScalarField::coord(0).cosh());
        for _ in 0..100 {
            let u: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
            let j: Jet2 = f.eval_jet2(&u, 4);
            for a in 0..4 {
                for b in 0..4 {
                    let lhs = j.hess[a][b];
                    let rhs = j.hess[b][a];
                    assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
                }
            }
        }
    }

    #[test]
    fn diff_agrees_with_richardson_fd() {
        use rand::Rng;
        let mut rng = crate::sampling::rng(23);
        let f = (ScalarField::coord(0) + ScalarField::coord(1).powi(2)).sin()
            + (ScalarField::coord(3) * ScalarField::constant(0.7)).exp();
        for mu in 0..4 {
            let d = diff(&f, mu).unwrap();
            for _ in 0..20 {
                let u: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let h = 1e-5;
                let at = |s: f64| {
                    let mut v = u.clone();
                    v[mu] += s;
                    f.eval(&v)
                };
                let d1 = (at(h) - at(-h)) / (2.0 * h);
                let d2 = (at(2.0 * h) - at(-2.0 * h)) / (4.0 * h);
                let richardson = (4.0 * d1 - d2) / 3.0;
                assert!((d.eval(&u) - richardson).abs() <= 1e-7);
            }
        }
    }
}
