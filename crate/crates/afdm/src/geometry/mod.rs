//! Shell charts, d-metrics, N-connections and N-adapted frames.
//!
//! Coordinates are 0-based: the horizontal block is `{0, 1}` and the fiber
//! block of shell `k` is `{2+2k, 3+2k}` for `k = 0..=s` (total dimension
//! `4 + 2s`). The first fiber coordinate of each shell is its Killing
//! direction under the stationary ansatz; the second is the one the
//! quadrature recursion integrates along.

mod frame;

pub use frame::{frame_at, jet_group_dim, nonholonomy, FrameBasis};

use thiserror::Error;

use crate::fields::ScalarField;
use crate::num::MAX_DIM;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("shell count {s} exceeds the configured cap {cap}")]
    TooManyShells { s: usize, cap: usize },
    #[error("expected {expected} coefficients for {what}, got {got}")]
    CoefficientCount { what: &'static str, expected: usize, got: usize },
    #[error("signature must have one entry of modulus 1 per coordinate")]
    BadSignature,
    #[error("stationary-ansatz violation: {what} depends on coordinate {coord} (|d| = {magnitude:.3e} at {point:?})")]
    AnsatzViolation { what: String, coord: usize, magnitude: f64, point: Vec<f64> },
    #[error("block coefficient {what} vanishes at {point:?} (value {value:.3e})")]
    DegenerateBlock { what: String, point: Vec<f64>, value: f64 },
    #[error("point dimension {got} does not match chart dimension {dim}")]
    PointDim { got: usize, dim: usize },
    #[error("combinatorial overflow in jet group dimension for n={n}, m={m}, r={r}")]
    Overflow { n: u64, m: u64, r: u64 },
    #[error("arguments must satisfy n, m >= 1 and r >= 1")]
    BadJetArgs,
}

/// Index block: horizontal or the vertical block of one shell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    H,
    V(usize),
}

/// Default cap on the shell count (dimension 10); raise explicitly through
/// [`ShellChart::with_cap`] if a deeper tower is needed.
pub const DEFAULT_SHELL_CAP: usize = 3;
/// Absolute ceiling implied by the jet arithmetic width.
pub const MAX_SHELLS: usize = (MAX_DIM - 4) / 2;

/// The 2+2+...+2 coordinate bookkeeping of a shell tower.
#[derive(Clone, Debug)]
pub struct ShellChart {
    s: usize,
    dim: usize,
}

impl ShellChart {
    pub fn new(s: usize) -> Result<Self, GeomError> {
        Self::with_cap(s, DEFAULT_SHELL_CAP)
    }

    pub fn with_cap(s: usize, cap: usize) -> Result<Self, GeomError> {
        let cap = cap.min(MAX_SHELLS);
        if s > cap {
            return Err(GeomError::TooManyShells { s, cap });
        }
        Ok(ShellChart { s, dim: 4 + 2 * s })
    }

    pub fn shells(&self) -> usize {
        self.s
    }
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Block membership of a coordinate index.
    pub fn block_of(&self, idx: usize) -> Block {
        if idx < 2 {
            Block::H
        } else {
            Block::V((idx - 2) / 2)
        }
    }

    /// Fiber coordinate indices `(odd, even)` of shell `k`; the first is the
    /// shell's Killing direction, the second its integration direction.
    pub fn fiber(&self, k: usize) -> (usize, usize) {
        (2 + 2 * k, 3 + 2 * k)
    }

    /// Dimension of the base of shell `k` (all indices below its fiber).
    pub fn base_dim(&self, k: usize) -> usize {
        2 + 2 * k
    }

    /// Human-readable coordinate labels (x1, x2, y3, y4, z5, ...).
    pub fn label(&self, idx: usize) -> String {
        match idx {
            0 | 1 => format!("x{}", idx + 1),
            2 | 3 => format!("y{}", idx + 1),
            _ => format!("z{}", idx + 1),
        }
    }
}

/// Dependency discipline of the metric data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzClass {
    /// Stationary shell ansatz: shell-`k` data may depend on the base of
    /// shell `k` and on its own even fiber coordinate, never on its own
    /// Killing coordinate or on higher shells. Required by the generators
    /// and by the closed-form Ricci components.
    Killing,
    /// No dependency restriction (products, conformal v-deformations, ...);
    /// only the generic curvature stack applies.
    General,
}

/// N-connection coefficients `N^{a_k}_mu` per shell: `coeffs[k][a][mu]`
/// with `a = 0` the odd (Killing-direction) component and `a = 1` the even
/// one, `mu < 2 + 2k`.
#[derive(Clone, Debug)]
pub struct NConnection {
    coeffs: Vec<[Vec<ScalarField>; 2]>,
}

impl NConnection {
    /// Zero N-connection for `s + 1` shells.
    pub fn zero(chart: &ShellChart) -> Self {
        let coeffs = (0..=chart.shells())
            .map(|k| {
                let base = chart.base_dim(k);
                [vec![ScalarField::zero(); base], vec![ScalarField::zero(); base]]
            })
            .collect();
        NConnection { coeffs }
    }

    pub fn new(chart: &ShellChart, coeffs: Vec<[Vec<ScalarField>; 2]>) -> Result<Self, GeomError> {
        if coeffs.len() != chart.shells() + 1 {
            return Err(GeomError::CoefficientCount {
                what: "N-connection shells",
                expected: chart.shells() + 1,
                got: coeffs.len(),
            });
        }
        for (k, pair) in coeffs.iter().enumerate() {
            for comp in pair {
                if comp.len() != chart.base_dim(k) {
                    return Err(GeomError::CoefficientCount {
                        what: "N-connection lower indices",
                        expected: chart.base_dim(k),
                        got: comp.len(),
                    });
                }
            }
        }
        Ok(NConnection { coeffs })
    }

    /// Set one coefficient: shell `k`, fiber component `a` (0 = odd, 1 =
    /// even), lower index `mu`.
    pub fn set(&mut self, k: usize, a: usize, mu: usize, f: ScalarField) {
        self.coeffs[k][a][mu] = f;
    }

    pub fn get(&self, k: usize, a: usize, mu: usize) -> &ScalarField {
        &self.coeffs[k][a][mu]
    }

    pub fn shells(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// A distinguished metric: diagonal horizontal pair, one diagonal vertical
/// pair per shell, signature, and the N-connection gluing them.
#[derive(Clone, Debug)]
pub struct DMetric {
    chart: ShellChart,
    g: [ScalarField; 2],
    h: Vec<[ScalarField; 2]>,
    nconn: NConnection,
    signs: Vec<f64>,
    ansatz: AnsatzClass,
}

impl DMetric {
    pub fn new(
        chart: ShellChart,
        g: [ScalarField; 2],
        h: Vec<[ScalarField; 2]>,
        nconn: NConnection,
        signs: Vec<f64>,
        ansatz: AnsatzClass,
    ) -> Result<Self, GeomError> {
        if h.len() != chart.shells() + 1 {
            return Err(GeomError::CoefficientCount {
                what: "vertical blocks",
                expected: chart.shells() + 1,
                got: h.len(),
            });
        }
        if nconn.shells() != chart.shells() {
            return Err(GeomError::CoefficientCount {
                what: "N-connection shells",
                expected: chart.shells() + 1,
                got: nconn.shells() + 1,
            });
        }
        if signs.len() != chart.dim() || signs.iter().any(|s| s.abs() != 1.0) {
            return Err(GeomError::BadSignature);
        }
        Ok(DMetric { chart, g, h, nconn, signs, ansatz })
    }

    /// Flat metric of the given signature (identity blocks, zero N).
    pub fn flat(chart: ShellChart, signs: Vec<f64>) -> Result<Self, GeomError> {
        let g = [
            ScalarField::constant(signs[0]),
            ScalarField::constant(signs[1]),
        ];
        let h = (0..=chart.shells())
            .map(|k| {
                let (o, e) = chart.fiber(k);
                [ScalarField::constant(signs[o]), ScalarField::constant(signs[e])]
            })
            .collect();
        let n = NConnection::zero(&chart);
        DMetric::new(chart, g, h, n, signs, AnsatzClass::General)
    }

    pub fn chart(&self) -> &ShellChart {
        &self.chart
    }
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
    pub fn shells(&self) -> usize {
        self.chart.shells()
    }
    pub fn nconn(&self) -> &NConnection {
        &self.nconn
    }
    pub fn signs(&self) -> &[f64] {
        &self.signs
    }
    pub fn ansatz(&self) -> AnsatzClass {
        self.ansatz
    }

    pub fn g(&self, i: usize) -> &ScalarField {
        &self.g[i]
    }

    /// Vertical coefficient of shell `k`: `a = 0` odd, `a = 1` even.
    pub fn h(&self, k: usize, a: usize) -> &ScalarField {
        &self.h[k][a]
    }

    /// The diagonal frame-metric coefficient for a coordinate index.
    pub fn diag_coefficient(&self, idx: usize) -> &ScalarField {
        match self.chart.block_of(idx) {
            Block::H => &self.g[idx],
            Block::V(k) => {
                let (o, _) = self.chart.fiber(k);
                &self.h[k][idx - o]
            }
        }
    }

    /// Replace one vertical coefficient (used by perturbation probes and
    /// conformal deformations); drops to the general ansatz class.
    pub fn with_h(&self, k: usize, a: usize, f: ScalarField, class: AnsatzClass) -> Self {
        let mut m = self.clone();
        m.h[k][a] = f;
        m.ansatz = class;
        m
    }

    pub fn with_ansatz(mut self, class: AnsatzClass) -> Self {
        self.ansatz = class;
        self
    }

    /// Numeric dependency validation of the stationary ansatz at the given
    /// sample points: every shell-`k` coefficient must be independent of its
    /// own Killing coordinate and of all higher-shell coordinates, and the
    /// horizontal pair must depend on the base only.
    pub fn validate_ansatz(&self, pts: &[Vec<f64>]) -> Result<(), GeomError> {
        let dim = self.dim();
        let tol = crate::tol::FIBER_INDEPENDENCE;
        let mut check = |f: &ScalarField, what: &str, forbidden: &[usize]| -> Result<(), GeomError> {
            for p in pts {
                let j = f.eval_jet1(p, dim);
                for &c in forbidden {
                    let scale = 1.0 + j.val.abs();
                    if j.grad[c].abs() > tol * scale {
                        return Err(GeomError::AnsatzViolation {
                            what: what.to_string(),
                            coord: c,
                            magnitude: j.grad[c].abs(),
                            point: p.clone(),
                        });
                    }
                }
            }
            Ok(())
        };
        let all_above = |lo: usize| -> Vec<usize> { (lo..dim).collect() };
        for i in 0..2 {
            check(&self.g[i], &format!("g{}", i + 1), &all_above(2))?;
        }
        for k in 0..=self.shells() {
            let (odd, even) = self.chart.fiber(k);
            let mut forbidden = vec![odd];
            forbidden.extend(all_above(even + 1));
            for a in 0..2 {
                check(&self.h[k][a], &format!("h{}", 2 + odd + a + 1), &forbidden)?;
            }
            for a in 0..2 {
                for mu in 0..self.chart.base_dim(k) {
                    check(
                        self.nconn.get(k, a, mu),
                        &format!("N[{k}][{a}][{mu}]"),
                        &forbidden,
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Check that every block coefficient is nonzero at the sample points.
    pub fn validate_nondegenerate(&self, pts: &[Vec<f64>]) -> Result<(), GeomError> {
        for p in pts {
            for idx in 0..self.dim() {
                let v = self.diag_coefficient(idx).eval(p);
                if !v.is_finite() || v.abs() < 1e-14 {
                    return Err(GeomError::DegenerateBlock {
                        what: self.chart.label(idx),
                        point: p.clone(),
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    /// Full coordinate-basis metric matrix at `p` (symmetric, `dim x dim`):
    /// the co-frame congruence of the diagonal frame blocks, which recovers
    /// the block form with `g_{ij} + h_{ab} N^a_i N^b_j` corners shell by
    /// shell, and the plain block-diagonal matrix when `N = 0`.
    pub fn coordinate_matrix(&self, p: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let fr = frame::frame_at(self, p);
        let mut out = vec![0.0; dim * dim];
        let diag: Vec<f64> = (0..dim).map(|i| self.diag_coefficient(i).eval(p)).collect();
        for mu in 0..dim {
            for nu in 0..dim {
                let mut acc = 0.0;
                for alpha in 0..dim {
                    acc += fr.dual[alpha * dim + mu] * fr.dual[alpha * dim + nu] * diag[alpha];
                }
                out[mu * dim + nu] = acc;
            }
        }
        out
    }
}

/// `(e_alpha f)(p)`: the N-adapted frame derivative of a scalar field.
pub fn apply_frame(m: &DMetric, f: &ScalarField, alpha: usize, p: &[f64]) -> f64 {
    let dim = m.dim();
    let fr = frame::frame_at(m, p);
    let j = f.eval_jet1(p, dim);
    let mut acc = 0.0;
    for mu in 0..dim {
        acc += fr.frame[alpha * dim + mu] * j.grad[mu];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_layout() {
        let c = ShellChart::new(2).unwrap();
        assert_eq!(c.dim(), 8);
        assert_eq!(c.block_of(0), Block::H);
        assert_eq!(c.block_of(3), Block::V(0));
        assert_eq!(c.block_of(6), Block::V(2));
        assert_eq!(c.fiber(1), (4, 5));
        assert_eq!(c.base_dim(2), 6);
        assert!(ShellChart::new(4).is_err());
        assert!(ShellChart::with_cap(4, 4).is_ok());
    }

    #[test]
    fn ansatz_validation_flags_killing_dependence() {
        let chart = ShellChart::new(0).unwrap();
        let signs = vec![1.0, 1.0, -1.0, 1.0];
        let mut h3 = ScalarField::coord(3).exp();
        let h4 = ScalarField::one();
        let g = [ScalarField::one(), ScalarField::one()];
        let n = NConnection::zero(&chart);
        let pts = vec![vec![0.3, 0.4, 0.5, 0.6]];
        let m = DMetric::new(
            chart.clone(),
            g.clone(),
            vec![[h3.clone(), h4.clone()]],
            n.clone(),
            signs.clone(),
            AnsatzClass::Killing,
        )
        .unwrap();
        assert!(m.validate_ansatz(&pts).is_ok());

        h3 = ScalarField::coord(2).exp(); // depends on the Killing coordinate
        let m = DMetric::new(chart, g, vec![[h3, h4]], n, signs, AnsatzClass::Killing).unwrap();
        let err = m.validate_ansatz(&pts).unwrap_err();
        assert!(matches!(err, GeomError::AnsatzViolation { coord: 2, .. }));
    }
}
