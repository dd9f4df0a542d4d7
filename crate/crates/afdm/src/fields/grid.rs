use std::sync::Arc;

use super::expr::{field_from_grid, FieldError, ScalarField};
use crate::fields::diff;

/// Uniform 2-d grid with Dirichlet boundary data, for the horizontal
/// Poisson problem. Axes live on chart coordinates `c0`, `c1` (the base
/// coordinates `x^1`, `x^2` by default).
#[derive(Clone)]
pub struct Grid2D {
    pub x1_range: [f64; 2],
    pub x2_range: [f64; 2],
    pub n1: usize,
    pub n2: usize,
    pub boundary_values: ScalarField,
    pub c0: usize,
    pub c1: usize,
}

impl Grid2D {
    pub fn new(
        x1_range: [f64; 2],
        x2_range: [f64; 2],
        n1: usize,
        n2: usize,
        boundary_values: ScalarField,
    ) -> Result<Self, FieldError> {
        if n1 < 3 || n2 < 3 {
            return Err(FieldError::GridTooSmall { n1, n2 });
        }
        if x1_range[1] <= x1_range[0] || x2_range[1] <= x2_range[0] {
            return Err(FieldError::BadGridAxis);
        }
        Ok(Grid2D { x1_range, x2_range, n1, n2, boundary_values, c0: 0, c1: 1 })
    }
}

/// Node data for a bicubic (Catmull-Rom) interpolant over a uniform grid.
#[derive(Debug)]
pub struct GridInterp {
    pub c0: usize,
    pub c1: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>, // row-major [ix * ny + iy]
}

/// Catmull-Rom weights and their s-derivatives up to order 3.
fn cr_weights(s: f64, order: u8) -> [f64; 4] {
    match order {
        0 => [
            0.5 * (-s * s * s + 2.0 * s * s - s),
            0.5 * (3.0 * s * s * s - 5.0 * s * s + 2.0),
            0.5 * (-3.0 * s * s * s + 4.0 * s * s + s),
            0.5 * (s * s * s - s * s),
        ],
        1 => [
            0.5 * (-3.0 * s * s + 4.0 * s - 1.0),
            0.5 * (9.0 * s * s - 10.0 * s),
            0.5 * (-9.0 * s * s + 8.0 * s + 1.0),
            0.5 * (3.0 * s * s - 2.0 * s),
        ],
        2 => [
            0.5 * (-6.0 * s + 4.0),
            0.5 * (18.0 * s - 10.0),
            0.5 * (-18.0 * s + 8.0),
            0.5 * (6.0 * s - 2.0),
        ],
        3 => [-3.0, 9.0, -9.0, 3.0],
        _ => [0.0; 4],
    }
}

impl GridInterp {
    fn node(&self, ix: isize, iy: isize) -> f64 {
        // quadratic extrapolation ghosts keep edge patches cubic
        let pick = |i: isize, n: usize, other: isize, along_x: bool| -> f64 {
            let get = |a: isize, b: isize| {
                let (ix, iy) = if along_x { (a, b) } else { (b, a) };
                self.values[ix as usize * self.ny + iy as usize]
            };
            if i < 0 {
                3.0 * get(0, other) - 3.0 * get(1, other) + get(2, other)
            } else if i as usize >= n {
                let m = n as isize - 1;
                3.0 * get(m, other) - 3.0 * get(m - 1, other) + get(m - 2, other)
            } else {
                get(i, other)
            }
        };
        if ix >= 0 && (ix as usize) < self.nx && iy >= 0 && (iy as usize) < self.ny {
            self.values[ix as usize * self.ny + iy as usize]
        } else if iy >= 0 && (iy as usize) < self.ny {
            pick(ix, self.nx, iy, true)
        } else if ix >= 0 && (ix as usize) < self.nx {
            pick(iy, self.ny, ix, false)
        } else {
            // corner ghost: extrapolate along x of extrapolated-y values
            let gy = |i: isize| -> f64 {
                let g = |a: isize, b: isize| self.node(a, b);
                if iy < 0 {
                    3.0 * g(i, 0) - 3.0 * g(i, 1) + g(i, 2)
                } else {
                    let m = self.ny as isize - 1;
                    3.0 * g(i, m) - 3.0 * g(i, m - 1) + g(i, m - 2)
                }
            };
            if ix < 0 {
                3.0 * gy(0) - 3.0 * gy(1) + gy(2)
            } else {
                let m = self.nx as isize - 1;
                3.0 * gy(m) - 3.0 * gy(m - 1) + gy(m - 2)
            }
        }
    }

    fn axis_cell(x: f64, x0: f64, h: f64, n: usize) -> (isize, f64) {
        let t = (x - x0) / h;
        let mut i = t.floor() as isize;
        if i < 0 {
            i = 0;
        }
        if i > n as isize - 2 {
            i = n as isize - 2;
        }
        (i, t - i as f64)
    }

    fn d(&self, x: f64, y: f64, dx: u8, dy: u8) -> f64 {
        if dx > 3 || dy > 3 {
            return 0.0;
        }
        let (ix, s) = Self::axis_cell(x, self.x0, self.hx, self.nx);
        let (iy, t) = Self::axis_cell(y, self.y0, self.hy, self.ny);
        let wx = cr_weights(s, dx);
        let wy = cr_weights(t, dy);
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                acc += wx[a] * wy[b] * self.node(ix - 1 + a as isize, iy - 1 + b as isize);
            }
        }
        acc / self.hx.powi(i32::from(dx)) / self.hy.powi(i32::from(dy))
    }

    /// Value and derivatives `[g, g_a, g_b, g_aa, g_ab, g_bb]` of the
    /// `(dx, dy)`-differentiated interpolant at physical `(x, y)`.
    pub(crate) fn sample(&self, x: f64, y: f64, dx: u8, dy: u8) -> [f64; 6] {
        [
            self.d(x, y, dx, dy),
            self.d(x, y, dx + 1, dy),
            self.d(x, y, dx, dy + 1),
            self.d(x, y, dx + 2, dy),
            self.d(x, y, dx + 1, dy + 1),
            self.d(x, y, dx, dy + 2),
        ]
    }
}

/// Result of the 2-d horizontal solve: the interpolating field plus the
/// discrete solution for stencil-level inspection.
pub struct PoissonSolution {
    pub psi: ScalarField,
    pub interp: Arc<GridInterp>,
    pub stencil_residual_max: f64,
    pub iterations: usize,
}

/// Solve `eps1 d11 psi + eps2 d22 psi = 2 lambda` with Dirichlet data on a
/// uniform grid (5-point stencil, conjugate gradients). Mixed signatures are
/// hyperbolic and rejected; callers go through [`analytic_psi`] instead.
pub fn solve_poisson_2d(
    source: &ScalarField,
    eps1: f64,
    eps2: f64,
    grid: &Grid2D,
) -> Result<PoissonSolution, FieldError> {
    if (eps1 - eps2).abs() > 0.0 || eps1 == 0.0 {
        if eps1 != eps2 {
            return Err(FieldError::UnsupportedSignature);
        }
    }
    let (n1, n2) = (grid.n1, grid.n2);
    let hx = (grid.x1_range[1] - grid.x1_range[0]) / (n1 - 1) as f64;
    let hy = (grid.x2_range[1] - grid.x2_range[0]) / (n2 - 1) as f64;
    let xat = |i: usize| grid.x1_range[0] + hx * i as f64;
    let yat = |j: usize| grid.x2_range[0] + hy * j as f64;

    let mut vals = vec![0.0f64; n1 * n2];
    let mut rhs = vec![0.0f64; n1 * n2];
    let mut u = vec![0.0f64; crate::num::MAX_DIM];
    for i in 0..n1 {
        for j in 0..n2 {
            u[grid.c0] = xat(i);
            u[grid.c1] = yat(j);
            let s = 2.0 * source.eval(&u) / eps1;
            if !s.is_finite() {
                return Err(FieldError::NonFiniteSample { point: u.clone(), fiber: grid.c0 });
            }
            rhs[i * n2 + j] = s;
            if i == 0 || j == 0 || i == n1 - 1 || j == n2 - 1 {
                vals[i * n2 + j] = grid.boundary_values.eval(&u);
            }
        }
    }

    // interior unknowns, CG on A x = b with A = -discrete laplacian (SPD)
    let (m1, m2) = (n1 - 2, n2 - 2);
    let idx = |i: usize, j: usize| (i - 1) * m2 + (j - 1);
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 1..n1 - 1 {
            for j in 1..n2 - 1 {
                let c = x[idx(i, j)];
                let xl = if i > 1 { x[idx(i - 1, j)] } else { 0.0 };
                let xr = if i < n1 - 2 { x[idx(i + 1, j)] } else { 0.0 };
                let yd = if j > 1 { x[idx(i, j - 1)] } else { 0.0 };
                let yu = if j < n2 - 2 { x[idx(i, j + 1)] } else { 0.0 };
                out[idx(i, j)] =
                    (2.0 * c - xl - xr) / (hx * hx) + (2.0 * c - yd - yu) / (hy * hy);
            }
        }
    };
    let mut b = vec![0.0f64; m1 * m2];
    for i in 1..n1 - 1 {
        for j in 1..n2 - 1 {
            let mut v = -rhs[i * n2 + j];
            if i == 1 {
                v += vals[(i - 1) * n2 + j] / (hx * hx);
            }
            if i == n1 - 2 {
                v += vals[(i + 1) * n2 + j] / (hx * hx);
            }
            if j == 1 {
                v += vals[i * n2 + j - 1] / (hy * hy);
            }
            if j == n2 - 2 {
                v += vals[i * n2 + j + 1] / (hy * hy);
            }
            b[idx(i, j)] = v;
        }
    }

    let n = m1 * m2;
    let mut x = vec![0.0f64; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0f64; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let target = 1e-9;
    let max_iters = 200 * (n1.max(n2)) + 200;
    let mut iters = 0;
    while iters < max_iters {
        if rr.sqrt() < 1e-14 * (1.0 + b.iter().map(|v| v * v).sum::<f64>().sqrt()) {
            break;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        iters += 1;
        if rr_new.sqrt() < target && iters % 8 == 0 {
            // residual of CG is the stencil residual of the original system
            let rmax = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rmax < target {
                rr = rr_new;
                break;
            }
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }

    for i in 1..n1 - 1 {
        for j in 1..n2 - 1 {
            vals[i * n2 + j] = x[idx(i, j)];
        }
    }

    // measure the true stencil residual of eps*(laplacian) = 2 lambda
    let mut rmax = 0.0f64;
    for i in 1..n1 - 1 {
        for j in 1..n2 - 1 {
            let lap = (vals[(i + 1) * n2 + j] - 2.0 * vals[i * n2 + j] + vals[(i - 1) * n2 + j])
                / (hx * hx)
                + (vals[i * n2 + j + 1] - 2.0 * vals[i * n2 + j] + vals[i * n2 + j - 1])
                    / (hy * hy);
            rmax = rmax.max((lap - rhs[i * n2 + j]).abs());
        }
    }
    if rmax > 1e-8 {
        return Err(FieldError::SolverStalled { residual: rmax, iters });
    }

    let interp = Arc::new(GridInterp {
        c0: grid.c0,
        c1: grid.c1,
        x0: grid.x1_range[0],
        y0: grid.x2_range[0],
        hx,
        hy,
        nx: n1,
        ny: n2,
        values: vals,
    });
    Ok(PoissonSolution {
        psi: field_from_grid(interp.clone()),
        interp,
        stencil_residual_max: rmax,
        iterations: iters,
    })
}

/// Closed-form horizontal conformal factors together with the source each
/// one induces through the 2-d stencil equation.
pub enum AnalyticPsi {
    /// `psi = lam0 (eps1 x1^2 + eps2 x2^2)/2`, inducing the constant `lam0`.
    Quadratic { lam0: f64 },
    /// `psi = amplitude sin(x1) sin(x2)`.
    SeparableSin { amplitude: f64 },
    /// Any closed-form field of the base coordinates.
    Custom { psi: ScalarField },
}

/// Returns `(psi, lambda)` with `lambda = (eps1 d11 psi + eps2 d22 psi)/2`
/// exactly (symbolic differentiation for the custom family).
pub fn analytic_psi(family: AnalyticPsi, eps1: f64, eps2: f64) -> (ScalarField, ScalarField) {
    match family {
        AnalyticPsi::Quadratic { lam0 } => {
            let x1 = ScalarField::coord(0);
            let x2 = ScalarField::coord(1);
            let psi = ScalarField::constant(lam0 * 0.5)
                * (ScalarField::constant(eps1) * x1.powi(2)
                    + ScalarField::constant(eps2) * x2.powi(2));
            (psi, ScalarField::constant(lam0))
        }
        AnalyticPsi::SeparableSin { amplitude } => {
            let x1 = ScalarField::coord(0);
            let x2 = ScalarField::coord(1);
            let psi = ScalarField::constant(amplitude) * x1.sin() * x2.sin();
            let lam = ScalarField::constant(-amplitude * (eps1 + eps2) * 0.5) * x1.sin() * x2.sin();
            (psi, lam)
        }
        AnalyticPsi::Custom { psi } => {
            let d11 = diff(&diff(&psi, 0).unwrap(), 0).unwrap();
            let d22 = diff(&diff(&psi, 1).unwrap(), 1).unwrap();
            let lam = 0.5 * (eps1 * d11 + eps2 * d22);
            (psi, lam)
        }
    }
}
