use super::{DMetric, GeomError};
use crate::num::{invert_matrix, Jet1, Scalar};

/// N-adapted frame and co-frame at a point, as `dim x dim` matrices.
///
/// `frame[alpha * dim + mu]` is the `d/du^mu` component of `e_alpha`:
/// base rows are elongated by `-N`, fiber rows are coordinate directions.
/// `dual[alpha * dim + mu]` gives `e^alpha = dual[..] du^mu`; the dual is
/// the inverse-transpose of the frame matrix, so duality holds to roundoff.
#[derive(Clone, Debug)]
pub struct FrameBasis {
    pub dim: usize,
    pub frame: Vec<f64>,
    pub dual: Vec<f64>,
}

impl FrameBasis {
    /// max |e^alpha(e_beta) - delta| (should sit at roundoff).
    pub fn duality_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let mut acc = 0.0;
                for mu in 0..d {
                    acc += self.dual[a * d + mu] * self.frame[b * d + mu];
                }
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((acc - want).abs());
            }
        }
        worst
    }
}

/// Frame matrix rows as plain values.
pub(crate) fn frame_matrix(m: &DMetric, p: &[f64]) -> Vec<f64> {
    let dim = m.dim();
    let mut e = vec![0.0; dim * dim];
    for alpha in 0..dim {
        e[alpha * dim + alpha] = 1.0;
    }
    for k in 0..=m.shells() {
        let (odd, even) = m.chart().fiber(k);
        for mu in 0..m.chart().base_dim(k) {
            e[mu * dim + odd] -= m.nconn().get(k, 0, mu).eval(p);
            e[mu * dim + even] -= m.nconn().get(k, 1, mu).eval(p);
        }
    }
    e
}

/// Frame matrix with first-derivative jets of every entry (for commutators
/// and connection coefficients).
pub(crate) fn frame_matrix_jets(m: &DMetric, p: &[f64]) -> Vec<Jet1> {
    let dim = m.dim();
    let mut e = vec![Jet1::constant(dim, 0.0); dim * dim];
    for alpha in 0..dim {
        e[alpha * dim + alpha] = Jet1::constant(dim, 1.0);
    }
    for k in 0..=m.shells() {
        let (odd, even) = m.chart().fiber(k);
        for mu in 0..m.chart().base_dim(k) {
            let n0 = m.nconn().get(k, 0, mu).eval_jet1(p, dim);
            let n1 = m.nconn().get(k, 1, mu).eval_jet1(p, dim);
            e[mu * dim + odd] = e[mu * dim + odd].sub(&n0);
            e[mu * dim + even] = e[mu * dim + even].sub(&n1);
        }
    }
    e
}

/// N-adapted frame and co-frame of `m` at `p`.
pub fn frame_at(m: &DMetric, p: &[f64]) -> FrameBasis {
    let dim = m.dim();
    let frame = frame_matrix(m, p);
    // dual = inverse of the transpose
    let mut t = vec![0.0f64; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            t[a * dim + b] = frame[b * dim + a];
        }
    }
    let ok = invert_matrix(dim, &mut t);
    debug_assert!(ok, "frame matrix is unit-triangular up to ordering; always invertible");
    FrameBasis { dim, frame, dual: t }
}

/// Nonholonomy coefficients of the frame pair `(alpha, beta)` at `p`:
/// `[e_alpha, e_beta] = W^gamma e_gamma`, returned as the vector over
/// `gamma`. Antisymmetry in `(alpha, beta)` is exact by construction.
pub fn nonholonomy(m: &DMetric, alpha: usize, beta: usize, p: &[f64]) -> Vec<f64> {
    let dim = m.dim();
    let ej = frame_matrix_jets(m, p);
    let fr = frame_at(m, p);
    // commutator in coordinate components
    let mut c = vec![0.0f64; dim];
    for mu in 0..dim {
        let mut acc = 0.0;
        for nu in 0..dim {
            acc += ej[alpha * dim + nu].val * ej[beta * dim + mu].grad[nu]
                - ej[beta * dim + nu].val * ej[alpha * dim + mu].grad[nu];
        }
        c[mu] = acc;
    }
    // convert to frame components
    let mut w = vec![0.0f64; dim];
    for gamma in 0..dim {
        let mut acc = 0.0;
        for mu in 0..dim {
            acc += fr.dual[gamma * dim + mu] * c[mu];
        }
        w[gamma] = acc;
    }
    w
}

/// Dimension of the `r`-th jet group fiber over dimensions `(n, m)`:
/// `m * (C(n + r, n) - 1)`, the count of symmetric multi-index coordinates.
pub fn jet_group_dim(n: u64, m: u64, r: u64) -> Result<u64, GeomError> {
    if n < 1 || m < 1 || r < 1 {
        return Err(GeomError::BadJetArgs);
    }
    let binom = |a: u64, b: u64| -> Option<u64> {
        let b = b.min(a - b);
        let mut acc: u128 = 1;
        for i in 0..b {
            acc = acc.checked_mul((a - i) as u128)?;
            acc /= (i + 1) as u128;
        }
        u64::try_from(acc).ok()
    };
    let c = binom(n + r, n).ok_or(GeomError::Overflow { n, m, r })?;
    m.checked_mul(c - 1).ok_or(GeomError::Overflow { n, m, r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;
    use crate::geometry::{AnsatzClass, DMetric, NConnection, ShellChart};
    use crate::sampling;
    use rand::Rng;

    fn flat4() -> DMetric {
        let chart = ShellChart::new(0).unwrap();
        DMetric::flat(chart, vec![1.0, 1.0, -1.0, 1.0]).unwrap()
    }

    #[test]
    fn zero_n_gives_identity_frame() {
        let m = flat4();
        let fr = frame_at(&m, &[0.1, 0.2, 0.3, 0.4]);
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert_eq!(fr.frame[a * 4 + b], want);
                assert_eq!(fr.dual[a * 4 + b], want);
            }
        }
    }

    #[test]
    fn constant_n_elongation_row() {
        // n1 = c, w1 = d constants: e_1 = d/dx1 - c d/dy3 - d d/dy4
        let chart = ShellChart::new(0).unwrap();
        let mut n = NConnection::zero(&chart);
        n.set(0, 0, 0, ScalarField::constant(0.7));
        n.set(0, 1, 0, ScalarField::constant(-1.3));
        let m = DMetric::new(
            chart,
            [ScalarField::one(), ScalarField::one()],
            vec![[ScalarField::constant(-1.0), ScalarField::one()]],
            n,
            vec![1.0, 1.0, -1.0, 1.0],
            AnsatzClass::Killing,
        )
        .unwrap();
        let fr = frame_at(&m, &[0.0; 4]);
        assert_eq!(fr.frame[0], 1.0);
        assert_eq!(fr.frame[2], -0.7);
        assert_eq!(fr.frame[3], 1.3);
        // co-frame e^3 = dy3 + n_i dx^i
        assert_eq!(fr.dual[2 * 4 + 2], 1.0);
        assert_eq!(fr.dual[2 * 4 + 0], 0.7);
    }

    /// Random polynomial N up to s = 2: duality and congruence at 1e-12.
    #[test]
    fn duality_and_congruence_random() {
        let mut rng = sampling::rng(99);
        for s in 0..=2usize {
            let chart = ShellChart::new(s).unwrap();
            let dim = chart.dim();
            let mut n = NConnection::zero(&chart);
            for k in 0..=s {
                for a in 0..2 {
                    for mu in 0..chart.base_dim(k) {
                        let coords: Vec<usize> = (0..chart.base_dim(k)).collect();
                        n.set(k, a, mu, sampling::poly_field(&mut rng, &coords));
                    }
                }
            }
            let mut signs = vec![1.0; dim];
            signs[2] = -1.0;
            let h = (0..=s)
                .map(|k| {
                    let (o, _) = chart.fiber(k);
                    [
                        ScalarField::constant(signs[o]) * (0.3 * ScalarField::coord(0)).exp(),
                        ScalarField::one() + 0.2 * ScalarField::coord(1).powi(2),
                    ]
                })
                .collect();
            let m = DMetric::new(
                chart,
                [ScalarField::one() + 0.1 * ScalarField::coord(0).powi(2), ScalarField::one()],
                h,
                n,
                signs,
                AnsatzClass::General,
            )
            .unwrap();
            for _ in 0..10 {
                let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.8..0.8)).collect();
                let fr = frame_at(&m, &p);
                assert!(fr.duality_defect() <= 1e-12);

                // congruence: frame^T G_coord frame = diag blocks
                let g = m.coordinate_matrix(&p);
                for a in 0..dim {
                    for b in 0..dim {
                        let mut acc = 0.0;
                        for mu in 0..dim {
                            for nu in 0..dim {
                                acc += fr.frame[a * dim + mu] * g[mu * dim + nu] * fr.frame[b * dim + nu];
                            }
                        }
                        let want = if a == b { m.diag_coefficient(a).eval(&p) } else { 0.0 };
                        assert!(
                            (acc - want).abs() <= 1e-12 * (1.0 + want.abs()),
                            "congruence defect at ({a},{b}): {} vs {}",
                            acc,
                            want
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn coordinate_matrix_blocks() {
        // N = 0: diag(1,1,-1,1)
        let m = flat4();
        let g = m.coordinate_matrix(&[0.0; 4]);
        let want = [1.0, 1.0, -1.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { want[i] } else { 0.0 };
                assert!((g[i * 4 + j] - expect).abs() < 1e-15);
            }
        }

        // h4 = 1, w1 = 0.5: entry (1,4) = 0.5 and (1,1) = g1 + 0.25
        let chart = ShellChart::new(0).unwrap();
        let mut n = NConnection::zero(&chart);
        n.set(0, 1, 0, ScalarField::constant(0.5));
        let m = DMetric::new(
            chart,
            [ScalarField::one(), ScalarField::one()],
            vec![[ScalarField::one(), ScalarField::one()]],
            n,
            vec![1.0; 4],
            AnsatzClass::Killing,
        )
        .unwrap();
        let g = m.coordinate_matrix(&[0.0; 4]);
        assert!((g[0 * 4 + 3] - 0.5).abs() < 1e-15);
        assert!((g[0 * 4 + 0] - 1.25).abs() < 1e-15);
    }

    #[test]
    fn apply_frame_matches_expansion() {
        use crate::geometry::apply_frame;
        let mut rng = sampling::rng(7);
        let chart = ShellChart::new(1).unwrap();
        let dim = chart.dim();
        let mut n = NConnection::zero(&chart);
        for k in 0..=1usize {
            for a in 0..2 {
                for mu in 0..chart.base_dim(k) {
                    let coords: Vec<usize> = (0..chart.base_dim(k)).collect();
                    n.set(k, a, mu, sampling::poly_field(&mut rng, &coords));
                }
            }
        }
        let m = DMetric::new(
            chart,
            [ScalarField::one(), ScalarField::one()],
            vec![
                [ScalarField::constant(-1.0), ScalarField::one()],
                [ScalarField::one(), ScalarField::one()],
            ],
            n,
            vec![1.0, 1.0, -1.0, 1.0, 1.0, 1.0],
            AnsatzClass::General,
        )
        .unwrap();

        // f = z5 and alpha = 1 (x1 row): e_1 f = -N^{z5}_1 = -(shell-1 odd)
        let f = ScalarField::coord(4);
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        let got = apply_frame(&m, &f, 0, &p);
        let want = -m.nconn().get(1, 0, 0).eval(&p);
        assert!((got - want).abs() < 1e-14);

        // random case against the explicit chain expansion
        let f = sampling::smooth_field(&mut rng, &[0, 2, 3, 4, 5], 0.8);
        for alpha in 0..dim {
            let got = apply_frame(&m, &f, alpha, &p);
            let j = f.eval_jet1(&p, dim);
            let mut want = j.grad[alpha];
            if alpha < 2 {
                want -= m.nconn().get(0, 0, alpha).eval(&p) * j.grad[2]
                    + m.nconn().get(0, 1, alpha).eval(&p) * j.grad[3];
            }
            if alpha < 4 {
                want -= m.nconn().get(1, 0, alpha).eval(&p) * j.grad[4]
                    + m.nconn().get(1, 1, alpha).eval(&p) * j.grad[5];
            }
            assert!((got - want).abs() <= 1e-12, "alpha = {alpha}");
        }
    }

    #[test]
    fn nonholonomy_against_commutator_on_functions() {
        let mut rng = sampling::rng(31);
        let chart = ShellChart::new(0).unwrap();
        let mut n = NConnection::zero(&chart);
        for a in 0..2 {
            for mu in 0..2 {
                n.set(0, a, mu, sampling::poly_field(&mut rng, &[0, 1, 3]));
            }
        }
        let m = DMetric::new(
            chart,
            [ScalarField::one(), ScalarField::one()],
            vec![[ScalarField::constant(-1.0), ScalarField::one()]],
            n,
            vec![1.0, 1.0, -1.0, 1.0],
            AnsatzClass::Killing,
        )
        .unwrap();
        let p = vec![0.4, -0.3, 0.7, 0.2];
        let dim = 4;
        let fr = frame_at(&m, &p);

        // solve for W from the commutator applied to 6 random quadratics
        for (alpha, beta) in [(0usize, 1usize), (0, 3), (1, 3)] {
            let w = nonholonomy(&m, alpha, beta, &p);
            // antisymmetry exact
            let wba = nonholonomy(&m, beta, alpha, &p);
            for g in 0..dim {
                assert_eq!(w[g], -wba[g]);
            }
            let mut a_mat: Vec<Vec<f64>> = Vec::new();
            let mut b_vec: Vec<f64> = Vec::new();
            for _ in 0..6 {
                let f = sampling::poly_field(&mut rng, &[0, 1, 2, 3]);
                // [e_a, e_b] f via second derivatives
                let j2 = f.eval_jet2(&p, dim);
                let ej = frame_matrix_jets(&m, &p);
                let mut comm = 0.0;
                for mu in 0..dim {
                    for nu in 0..dim {
                        comm += ej[alpha * dim + nu].val
                            * (ej[beta * dim + mu].grad[nu] * j2.grad[mu]
                                + ej[beta * dim + mu].val * j2.hess[nu][mu]);
                        comm -= ej[beta * dim + nu].val
                            * (ej[alpha * dim + mu].grad[nu] * j2.grad[mu]
                                + ej[alpha * dim + mu].val * j2.hess[nu][mu]);
                    }
                }
                // W^gamma (e_gamma f) = comm
                let row: Vec<f64> = (0..dim)
                    .map(|g| {
                        (0..dim).map(|mu| fr.frame[g * dim + mu] * j2.grad[mu]).sum::<f64>()
                    })
                    .collect();
                a_mat.push(row);
                b_vec.push(comm);
            }
            // least squares via normal equations (4x4)
            let mut ata = vec![0.0f64; dim * dim];
            let mut atb = vec![0.0f64; dim];
            for r in 0..a_mat.len() {
                for i in 0..dim {
                    atb[i] += a_mat[r][i] * b_vec[r];
                    for j in 0..dim {
                        ata[i * dim + j] += a_mat[r][i] * a_mat[r][j];
                    }
                }
            }
            assert!(invert_matrix(dim, &mut ata));
            for g in 0..dim {
                let mut sol = 0.0;
                for j in 0..dim {
                    sol += ata[g * dim + j] * atb[j];
                }
                assert!((sol - w[g]).abs() <= 1e-9, "W^{g}: {} vs {}", sol, w[g]);
            }
        }
    }

    #[test]
    fn omega_pattern_for_w_only() {
        // 4-d with w_i = w_i(x, y4), n = 0: the y4-components of the
        // nonholonomy match d2 w1 - d1 w2 - w2 d4 w1 + w1 d4 w2.
        let chart = ShellChart::new(0).unwrap();
        let mut n = NConnection::zero(&chart);
        let w1 = (ScalarField::coord(0) + 0.5 * ScalarField::coord(3)).sin();
        let w2 = ScalarField::coord(1) * ScalarField::coord(3);
        n.set(0, 1, 0, w1.clone());
        n.set(0, 1, 1, w2.clone());
        let m = DMetric::new(
            chart,
            [ScalarField::one(), ScalarField::one()],
            vec![[ScalarField::constant(-1.0), ScalarField::one()]],
            n,
            vec![1.0, 1.0, -1.0, 1.0],
            AnsatzClass::Killing,
        )
        .unwrap();
        let p = vec![0.3, 0.9, -0.2, 0.6];
        let w = nonholonomy(&m, 0, 1, &p);
        let j1 = w1.eval_jet1(&p, 4);
        let j2 = w2.eval_jet1(&p, 4);
        let want = j1.grad[1] - j2.grad[0] - j2.val * j1.grad[3] + j1.val * j2.grad[3];
        // [e_1, e_2] = J^4_{12} d4 with J^4_{12} = e_2(w_1) - e_1(w_2)
        assert!((w[3] - want).abs() <= 1e-13, "{} vs {}", w[3], want);
        assert!(w[0].abs() < 1e-14 && w[1].abs() < 1e-14);
    }

    #[test]
    fn jet_group_dimension() {
        // r = 1 identifies with GL(m): dim = m^2 when n = m
        for m in 1..=6u64 {
            assert_eq!(jet_group_dim(m, m, 1).unwrap(), m * m);
        }
        // r = 1 generally: m * n
        assert_eq!(jet_group_dim(5, 3, 1).unwrap(), 15);
        // n = m = 2, r = 2: 4 first-order + 6 symmetric second-order = 10
        assert_eq!(jet_group_dim(2, 2, 2).unwrap(), 10);
        assert!(jet_group_dim(0, 1, 1).is_err());
        assert!(jet_group_dim(200, 1_000_000_000_000, 60).is_err());
    }

    /// Independent oracle: enumerate symmetric multi-indices directly.
    #[test]
    fn jet_group_dimension_enumeration() {
        fn multisets(n: u64, k: u64) -> u64 {
            // count monotone index tuples of length k over n symbols
            fn rec(n: u64, k: u64, start: u64) -> u64 {
                if k == 0 {
                    return 1;
                }
                (start..n).map(|i| rec(n, k - 1, i)).sum()
            }
            rec(n, k, 0)
        }
        for n in 1..=4u64 {
            for m in 1..=4u64 {
                for r in 2..=3u64 {
                    let count: u64 = (1..=r).map(|k| m * multisets(n, k)).sum();
                    assert_eq!(jet_group_dim(n, m, r).unwrap(), count, "n={n} m={m} r={r}");
                }
            }
        }
    }
}
