//! Rounding a nearly self-consistent POVM to a projective sub-measurement:
//! eigenvalue truncation, rank reduction, then an SVD projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, CMat, CVec};
use crate::measure::{consistency, state_distance_left, strong_self_consistency, BipartiteState, Outcome, SubMeasurement};

/// Eigenvalue slack when comparing against the truncation threshold.
pub const EIG_TOL: f64 = 1e-9;
/// Singular values below this make the SVD projection defective.
pub const RANK_TOL: f64 = 1e-10;

/// `trunc_delta(x)`: 1 if `x >= 1 - delta`, else 0.
pub fn trunc(x: f64, delta: f64) -> f64 {
    if x >= 1.0 - delta - EIG_TOL {
        1.0
    } else {
        0.0
    }
}

/// `(x - trunc_delta(x))^2 <= (x - x^2) / delta` for `x in [0,1]`, `delta in (0, 1/2]`.
pub fn scalar_trunc_inequality_check(x: f64, delta: f64) -> bool {
    let t = if x >= 1.0 - delta { 1.0 } else { 0.0 };
    (x - t).powi(2) <= (x - x * x) / delta + 1e-15
}

/// Stage 1 output: per-outcome orthonormal eigenvectors kept by truncation.
#[derive(Clone, Debug)]
pub struct Rounded {
    pub vectors: Vec<Vec<CVec>>,
}

impl Rounded {
    pub fn projectors(&self, dim: usize) -> Vec<CMat> {
        self.vectors.iter().map(|vs| vs.iter().fold(CMat::zeros(dim, dim), |acc, v| acc + v * v.adjoint())).collect()
    }

    pub fn total_rank(&self) -> usize {
        self.vectors.iter().map(Vec::len).sum()
    }
}

/// `R_a = trunc_delta(A_a)` with eigenvalues clamped to `[0, 1 + 1e-9]` first.
pub fn round_to_projectors(ops: &[CMat], delta: f64) -> Rounded {
    let vectors = ops
        .iter()
        .map(|a| {
            let (vals, vecs) = eigh(a);
            vals.iter()
                .enumerate()
                .filter(|(_, &x)| trunc(x.clamp(0.0, 1.0 + EIG_TOL), delta) == 1.0)
                .map(|(i, _)| vecs.column(i).into_owned())
                .collect()
        })
        .collect();
    Rounded { vectors }
}

/// Keeps the `dim` eigenvectors with the largest overlaps `<psi| v v^dagger (x) I |psi>`.
pub fn rank_reduce(r: &Rounded, state: &BipartiteState) -> Rounded {
    let dim = state.da;
    if r.total_rank() <= dim {
        return r.clone();
    }
    let rho = state.reduced_left();
    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    for (a, vs) in r.vectors.iter().enumerate() {
        for (i, v) in vs.iter().enumerate() {
            let o = v.dotc(&(&rho * v)).re;
            all.push((o, a, i));
        }
    }
    // largest first; ties broken by position for determinism
    all.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut keep = vec![Vec::new(); r.vectors.len()];
    for &(_, a, i) in all.iter().take(dim) {
        keep[a].push(i);
    }
    let vectors = keep
        .into_iter()
        .enumerate()
        .map(|(a, mut idx)| {
            idx.sort_unstable();
            idx.into_iter().map(|i| r.vectors[a][i].clone()).collect()
        })
        .collect();
    Rounded { vectors }
}

/// `X = sum_{a,i} |a,i><v_{a,i}|`, `X_hat = U V^dagger` from its SVD, `P_a = X_hat^dagger T_a X_hat`.
pub fn svd_project(q: &Rounded, dim: usize) -> Result<Vec<CMat>> {
    let m = q.total_rank();
    if m == 0 {
        return Ok(vec![CMat::zeros(dim, dim); q.vectors.len()]);
    }
    let mut x = CMat::zeros(m, dim);
    let mut row = 0;
    let mut rows_of = Vec::new();
    for vs in &q.vectors {
        let start = row;
        for v in vs {
            x.set_row(row, &v.adjoint());
            row += 1;
        }
        rows_of.push(start..row);
    }
    let svd = x.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let xh = u * vt;
    let gram = &xh * xh.adjoint();
    let resid = (gram - CMat::identity(m, m)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if resid > RANK_TOL.sqrt() {
        return Err(Error::Solver(format!("defective SVD projection (residual {resid:.2e})")));
    }
    Ok(rows_of
        .into_iter()
        .map(|rg| {
            let block = xh.rows(rg.start, rg.len());
            block.adjoint() * block
        })
        .collect())
}

/// Result of rounding one measurement, with every stage's measured quantities.
#[derive(Clone, Debug)]
pub struct Orthogonalized<L> {
    pub p: SubMeasurement<L>,
    /// Measured `zeta`.
    pub zeta: f64,
    /// `zeta > 1/4`: the output is the zero family.
    pub flagged: bool,
    pub stats: OrthoStats,
}

/// Measured stage distances and completeness, with the bounds they are compared to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrthoStats {
    pub delta: f64,
    /// `sum_a ||(A_a - R_a) (x) I psi||^2`, bound `2 sqrt(zeta)`.
    pub round_distance: f64,
    /// `sum_a ||(A_a - Q_a) (x) I psi||^2`, bound `12 sqrt(zeta)`.
    pub reduce_distance: f64,
    /// `<psi| Q (x) I |psi>`, bound `1 - 11 zeta^{1/4}`.
    pub q_completeness: f64,
    /// `max eig sum_a R_a`, bound `1 + 2 sqrt(zeta)`.
    pub r_norm: f64,
    /// `sum_a ||(A_a - P_a) (x) I psi||^2`.
    pub distance: f64,
    pub bound: f64,
    pub projectivity_residual: f64,
}

/// Measurement case: `A`, `B` measurements with `A_a (x) I ~ I (x) B_a` at measured `zeta`.
/// Bound on the output distance is `84 zeta^{1/4}`.
pub fn orthogonalize<L: Clone + PartialEq>(a: &SubMeasurement<L>, b: &SubMeasurement<L>, state: &BipartiteState) -> Result<Orthogonalized<L>> {
    if !a.is_measurement() || !b.is_measurement() {
        return Err(Error::Measurement("orthogonalize expects measurements; use orthogonalize_sub".into()));
    }
    if a.dim != state.da || b.dim != state.db {
        return Err(Error::Dimension("families do not match the state".into()));
    }
    let zeta = consistency(&[(1.0, a, b)], state)?.max(0.0);
    let bound = 84.0 * zeta.powf(0.25);
    let dim = a.dim;
    if zeta > 0.25 {
        let p = SubMeasurement { dim, outcomes: a.outcomes.clone(), ops: vec![CMat::zeros(dim, dim); a.len()] };
        let distance = state_distance_left(&[(1.0, a, &p)], state)?;
        let stats = OrthoStats { distance, bound, ..Default::default() };
        return Ok(Orthogonalized { p, zeta, flagged: true, stats });
    }
    let delta = zeta.sqrt();
    let rounded = round_to_projectors(&a.ops, delta);
    let r_ops = rounded.projectors(dim);
    let reduced = rank_reduce(&rounded, state);
    let q_ops = reduced.projectors(dim);
    let p_ops = svd_project(&reduced, dim)?;
    let fam = |ops: Vec<CMat>| SubMeasurement { dim, outcomes: a.outcomes.clone(), ops };
    let (r, q, p) = (fam(r_ops), fam(q_ops), fam(p_ops));
    let stats = OrthoStats {
        delta,
        round_distance: state_distance_left(&[(1.0, a, &r)], state)?,
        reduce_distance: state_distance_left(&[(1.0, a, &q)], state)?,
        q_completeness: state.expect_left(&q.total()),
        r_norm: crate::linalg::max_eig(&r.total()),
        distance: state_distance_left(&[(1.0, a, &p)], state)?,
        bound,
        projectivity_residual: p.projectivity_residual(),
    };
    Ok(Orthogonalized { p, zeta, flagged: false, stats })
}

/// Sub-measurement case on a permutation-invariant state: rounds `completion(A)` and
/// drops the `Bot` outcome. `zeta` is the strong self-consistency deficit; bound `100 zeta^{1/4}`.
pub fn orthogonalize_sub<L: Clone + PartialEq>(a: &SubMeasurement<L>, state: &BipartiteState) -> Result<Orthogonalized<L>> {
    let zeta = strong_self_consistency(&[(1.0, a)], state)?.max(0.0);
    let full = a.complete();
    let inner = orthogonalize(&full, &full, state)?;
    let p = inner.p.restrict_to(|l| !matches!(l, Outcome::Bot)).map_labels(|l| match l {
        Outcome::Val(v) => v.clone(),
        Outcome::Bot => unreachable!(),
    });
    let mut stats = inner.stats;
    stats.distance = state_distance_left(&[(1.0, a, &p)], state)?;
    stats.bound = 100.0 * zeta.powf(0.25);
    Ok(Orthogonalized { p, zeta, flagged: inner.flagged, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, frob, random_povm, random_projective, random_unitary};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn conj(ops: &[CMat]) -> Vec<CMat> {
        ops.iter().map(|o| o.map(|z| z.conj())).collect()
    }

    #[test]
    fn projective_input_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ops = random_projective(4, 3, &mut rng);
        let a = SubMeasurement::new(vec![0, 1, 2], ops.clone()).unwrap();
        let b = SubMeasurement::new(vec![0, 1, 2], conj(&ops)).unwrap();
        let st = BipartiteState::max_entangled(4);
        let out = orthogonalize(&a, &b, &st).unwrap();
        assert!(out.zeta < 1e-12);
        for (x, y) in out.p.ops.iter().zip(&a.ops) {
            assert!(frob(&(x - y)) < 1e-8);
        }
    }

    #[test]
    fn perturbed_family_within_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..20 {
            let n = 3 + trial % 4;
            let proj = random_projective(n, 3, &mut rng);
            let noise = random_povm(n, 3, &mut rng);
            let eta = 0.02 * (trial % 5) as f64;
            let ops: Vec<CMat> = proj.iter().zip(&noise).map(|(p, q)| p * c(1.0 - eta) + q * c(eta)).collect();
            let a = SubMeasurement::new(vec![0, 1, 2], ops.clone()).unwrap();
            let b = SubMeasurement::new(vec![0, 1, 2], conj(&ops)).unwrap();
            let st = BipartiteState::max_entangled(n);
            let out = orthogonalize(&a, &b, &st).unwrap();
            assert!(!out.flagged);
            let s = out.stats;
            assert!(s.projectivity_residual < 1e-8);
            assert!(s.distance <= s.bound + 1e-7);
            assert!(s.q_completeness >= 1.0 - 11.0 * out.zeta.powf(0.25) - 1e-7);
            assert!(s.round_distance <= 2.0 * out.zeta.sqrt() + 1e-7);
            assert!(s.reduce_distance <= 12.0 * out.zeta.sqrt() + 1e-7);
            assert!(s.r_norm <= 1.0 + 2.0 * out.zeta.sqrt() + 1e-7);
            assert!(out.p.total().iter().all(|z| z.norm().is_finite()));
            assert!(crate::linalg::max_eig(&out.p.total()) <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn large_zeta_is_flagged() {
        let n = 2;
        let half = crate::linalg::eye(n) * c(0.5);
        let a = SubMeasurement::new(vec![0, 1], vec![half.clone(), half]).unwrap();
        let st = BipartiteState::max_entangled(n);
        let out = orthogonalize(&a, &a, &st).unwrap();
        assert!(out.flagged);
        assert!(out.p.ops.iter().all(|o| frob(o) == 0.0));
        assert!(out.stats.distance <= out.stats.bound);
    }

    #[test]
    fn sub_measurement_wrapper() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let u = random_unitary(n, &mut rng);
        // real-orthogonal projectors keep the maximally entangled state symmetric-compatible
        let ops: Vec<CMat> = random_projective(n, 3, &mut rng).into_iter().map(|p| (&u * p * u.adjoint()).map(|z| c(z.re))).collect();
        let ops: Vec<CMat> = ops.into_iter().map(|o| crate::linalg::hermitian_part(&o)).collect();
        let psd: Vec<CMat> = ops.iter().map(|o| crate::linalg::spectral_map(o, |x| x.clamp(0.0, 1.0)) * c(0.3)).collect();
        let a = SubMeasurement::new(vec![0, 1, 2], psd).unwrap();
        let st = BipartiteState::max_entangled(n);
        let out = orthogonalize_sub(&a, &st).unwrap();
        assert!(out.p.is_projective());
        assert!(out.stats.distance <= out.stats.bound + 1e-7);
    }

    proptest! {
        #[test]
        fn trunc_inequality(x in 0.0f64..=1.0, delta in 1e-6f64..=0.5) {
            prop_assert!(scalar_trunc_inequality_check(x, delta));
        }
    }

    #[test]
    fn trunc_boundaries() {
        assert!(scalar_trunc_inequality_check(0.0, 0.3));
        assert!(scalar_trunc_inequality_check(0.7, 0.3));
        assert!(scalar_trunc_inequality_check(1.0, 0.5));
        assert_eq!(trunc(0.7, 0.3), 1.0);
        assert_eq!(trunc(0.69, 0.3), 0.0);
    }
}
