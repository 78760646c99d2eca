//! Naimark dilation of POVM families to projective measurements on an enlarged space.

use crate::error::{guard, Error, Result};
use crate::linalg::{c, eye, kron, orthonormal_complement, psd_sqrt, CMat, CVec, ONE};
use crate::measure::{BipartiteState, SubMeasurement};

/// Largest local dimension after attaching auxiliary registers.
pub const MAX_DILATED_DIM: u128 = 4096;

/// One dilated question: the isometry-completing unitary and the projective family.
#[derive(Clone, Debug)]
pub struct Dilation<L> {
    /// Auxiliary register state `|aux>`.
    pub aux: CVec,
    /// `U` with `U (phi (x) aux) = sum_a sqrt(A_a) phi (x) |a>` (plus the `|bot>` branch).
    pub unitary: CMat,
    /// `U^dagger (I (x) |a><a|) U` for every original outcome.
    pub family: SubMeasurement<L>,
}

/// Auxiliary dimension: one slot per outcome, plus `|bot>` when the family is incomplete.
pub fn aux_dim<L: Clone + PartialEq>(a: &SubMeasurement<L>) -> usize {
    a.len() + usize::from(!a.is_measurement())
}

/// Dilates a single family; `aux` defaults to `|0>`.
pub fn dilate<L: Clone + PartialEq>(a: &SubMeasurement<L>, aux: Option<&CVec>) -> Result<Dilation<L>> {
    let n = a.dim;
    let k = aux_dim(a);
    guard("dilated dimension", (n * k) as u128, MAX_DILATED_DIM)?;
    let aux = match aux {
        Some(v) if v.len() == k => v / c(v.norm()),
        Some(v) => return Err(Error::Dimension(format!("aux vector has length {}, need {k}", v.len()))),
        None => {
            let mut v = CVec::zeros(k);
            v[0] = ONE;
            v
        }
    };
    // V = sum_a sqrt(A_a) (x) |a>, stacked so the aux index is innermost
    let mut roots: Vec<CMat> = a.ops.iter().map(psd_sqrt).collect();
    if k > a.len() {
        roots.push(psd_sqrt(&(eye(n) - a.total())));
    }
    let mut v = CMat::zeros(n * k, n);
    for (s, r) in roots.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                v[(i * k + s, j)] = r[(i, j)];
            }
        }
    }
    let aux_col = CMat::from_column_slice(k, 1, aux.as_slice());
    let w0 = kron(&eye(n), &aux_col);
    let vc = orthonormal_complement(&v);
    let wc = orthonormal_complement(&w0);
    if vc.ncols() != wc.ncols() {
        return Err(Error::Measurement("dilation isometry is rank deficient".into()));
    }
    let u = &v * w0.adjoint() + &vc * wc.adjoint();
    let ops = (0..a.len())
        .map(|s| {
            let mut proj = CMat::zeros(k, k);
            proj[(s, s)] = ONE;
            let p = kron(&eye(n), &proj);
            u.adjoint() * p * &u
        })
        .collect();
    Ok(Dilation { aux, unitary: u, family: SubMeasurement { dim: n * k, outcomes: a.outcomes.clone(), ops } })
}

/// Dilates all questions of one party: one auxiliary register per question, joint
/// auxiliary state the product of the per-question `aux` vectors.
pub fn dilate_party<L: Clone + PartialEq>(fams: &[SubMeasurement<L>], auxes: Option<&[CVec]>) -> Result<(Vec<SubMeasurement<L>>, CVec)> {
    let n = fams.first().map_or(0, |f| f.dim);
    if fams.iter().any(|f| f.dim != n) {
        return Err(Error::Dimension("families act on different spaces".into()));
    }
    let dims: Vec<usize> = fams.iter().map(aux_dim).collect();
    let total: u128 = dims.iter().fold(n as u128, |acc, &k| acc.saturating_mul(k as u128));
    guard("dilated dimension", total, MAX_DILATED_DIM)?;
    let kt: usize = dims.iter().product();
    let dils: Vec<Dilation<L>> = fams
        .iter()
        .enumerate()
        .map(|(x, f)| dilate(f, auxes.map(|a| &a[x])))
        .collect::<Result<_>>()?;
    let aux = dils.iter().fold(CVec::from_element(1, ONE), |acc, d| acc.kronecker(&d.aux));
    // mixed-radix digits of the joint aux index, first register most significant
    let digit = |mut idx: usize, x: usize| {
        for y in (x + 1..dims.len()).rev() {
            idx /= dims[y];
        }
        idx % dims[x]
    };
    let out = dils
        .iter()
        .enumerate()
        .map(|(x, dl)| {
            let kx = dims[x];
            let ops = dl
                .family
                .ops
                .iter()
                .map(|op| {
                    CMat::from_fn(n * kt, n * kt, |r, s| {
                        let (i, a) = (r / kt, r % kt);
                        let (j, b) = (s / kt, s % kt);
                        let others_match = (0..dims.len()).all(|y| y == x || digit(a, y) == digit(b, y));
                        if others_match {
                            op[(i * kx + digit(a, x), j * kx + digit(b, x))]
                        } else {
                            c(0.0)
                        }
                    })
                })
                .collect();
            SubMeasurement { dim: n * kt, outcomes: dl.family.outcomes.clone(), ops }
        })
        .collect();
    Ok((out, aux))
}

/// `psi_hat = psi (x) aux_A (x) aux_B`, regrouped as `(H_A (x) aux_A) (x) (H_B (x) aux_B)`.
pub fn dilate_state(state: &BipartiteState, aux_a: &CVec, aux_b: &CVec) -> Result<BipartiteState> {
    let outer = aux_a * aux_b.transpose();
    BipartiteState::from_matrix(&kron(state.matrix(), &outer))
}

/// Dilates both parties' families and the shared state.
pub fn naimark_dilate<L: Clone + PartialEq>(
    a: &[SubMeasurement<L>],
    b: &[SubMeasurement<L>],
    state: &BipartiteState,
) -> Result<(Vec<SubMeasurement<L>>, Vec<SubMeasurement<L>>, BipartiteState)> {
    let (ah, aux_a) = dilate_party(a, None)?;
    let (bh, aux_b) = dilate_party(b, None)?;
    Ok((ah, bh, dilate_state(state, &aux_a, &aux_b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob, random_povm, random_projective, random_unit_vector};
    use crate::measure::{consistency, cross_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dilation_compresses_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = SubMeasurement::new(vec![0, 1, 2], random_povm(3, 3, &mut rng)).unwrap();
        let dl = dilate(&a, None).unwrap();
        assert!(frob(&(dl.unitary.adjoint() * &dl.unitary - eye(9))) < 1e-10);
        assert!(dl.family.is_projective());
        let w0 = kron(&eye(3), &CMat::from_column_slice(3, 1, dl.aux.as_slice()));
        for (x, y) in dl.family.ops.iter().zip(&a.ops) {
            assert!(frob(&(w0.adjoint() * x * &w0 - y)) < 1e-10);
        }
    }

    #[test]
    fn sub_measurement_gets_bot_slot() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ops: Vec<CMat> = random_povm(2, 2, &mut rng).into_iter().map(|o| o * c(0.5)).collect();
        let a = SubMeasurement::new(vec![0, 1], ops).unwrap();
        assert_eq!(aux_dim(&a), 3);
        let dl = dilate(&a, None).unwrap();
        assert!(dl.family.is_projective());
        assert!(!dl.family.is_measurement());
    }

    #[test]
    fn joint_statistics_preserved_multi_question() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<_> = (0..2).map(|_| SubMeasurement::new(vec![0, 1], random_povm(2, 2, &mut rng)).unwrap()).collect();
        let b: Vec<_> = (0..2).map(|_| SubMeasurement::new(vec![0, 1], random_povm(2, 2, &mut rng)).unwrap()).collect();
        let st = BipartiteState::new(2, 2, random_unit_vector(4, &mut rng)).unwrap();
        let (ah, bh, sh) = naimark_dilate(&a, &b, &st).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let p = st.expect(&a[x].ops[i], &b[y].ops[j]);
                        let ph = sh.expect(&ah[x].ops[i], &bh[y].ops[j]);
                        assert!((p - ph).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn projective_input_keeps_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = SubMeasurement::new(vec![0, 1], random_projective(3, 2, &mut rng)).unwrap();
        let st = BipartiteState::max_entangled(3);
        let (ah, bh, sh) = naimark_dilate(std::slice::from_ref(&a), std::slice::from_ref(&a), &st).unwrap();
        let before = consistency(&[(1.0, &a, &a)], &st).unwrap();
        let after = consistency(&[(1.0, &ah[0], &bh[0])], &sh).unwrap();
        assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn half_identity_example() {
        // A_0 = A_1 = I/2 with aux |+>: U = I and A_hat_a = I (x) |a><a|
        let n = 2;
        let a = SubMeasurement::new(vec![0, 1], vec![eye(n) * c(0.5), eye(n) * c(0.5)]).unwrap();
        let plus = CVec::from_element(2, c(std::f64::consts::FRAC_1_SQRT_2));
        let dl = dilate(&a, Some(&plus)).unwrap();
        assert!(frob(&(&dl.unitary - eye(2 * n))) < 1e-12);
        let st = BipartiteState::new(n, n, random_unit_vector(n * n, &mut ChaCha8Rng::seed_from_u64(5))).unwrap();
        let sh = dilate_state(&st, &plus, &plus).unwrap();
        assert!((consistency(&[(1.0, &a, &a)], &st).unwrap() - 0.5).abs() < 1e-12);
        assert!((consistency(&[(1.0, &dl.family, &dl.family)], &sh).unwrap() - 0.5).abs() < 1e-12);
        assert!(cross_distance(&[(1.0, &a, &a)], &st).unwrap().abs() < 1e-12);
        assert!((cross_distance(&[(1.0, &dl.family, &dl.family)], &sh).unwrap() - 1.0).abs() < 1e-12);
    }
}
