//! Seeded random instances for experiments and batch checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::field::{Fe, Field};
use crate::linalg::{c, hermitian_part, random_gaussian, random_povm, random_projective, spectral_map, CMat};
use crate::measure::{BipartiteState, SubMeasurement};
use crate::poly::{MultiPoly, Point, PolySpace};
use crate::protocol::Rational;
use crate::strategy::{embed_classical, ClassicalStrategy, QuantumFamilies, QuantumStrategy};

pub fn random_poly(space: &PolySpace, rng: &mut impl Rng) -> MultiPoly {
    space.get(rng.random_range(0..space.len()))
}

/// Honest strategy for a uniformly random `g` in `P(m,q,d)`.
pub fn random_honest(field: &Field, m: usize, d: usize, rng: &mut impl Rng) -> Result<(MultiPoly, ClassicalStrategy)> {
    let g = random_poly(&PolySpace::new(field, m, d)?, rng);
    Ok((g.clone(), ClassicalStrategy::honest(field, &g)?))
}

/// Equal-weight mixture of one honest strategy and `n - 1` honest strategies with one
/// corrupted point value each (the same in both roles).
pub fn noisy_mixture(field: &Field, m: usize, d: usize, n: usize, rng: &mut impl Rng) -> Result<Vec<(Rational, ClassicalStrategy)>> {
    let space = PolySpace::new(field, m, d)?;
    (0..n.max(1))
        .map(|i| {
            let g = random_poly(&space, rng);
            let mut s = ClassicalStrategy::honest(field, &g)?;
            if i > 0 {
                let pts: Vec<Point> = s.roles[0].points.keys().cloned().collect();
                let u = pts[rng.random_range(0..pts.len())].clone();
                let v = Fe(rng.random_range(0..field.q()));
                for t in &mut s.roles {
                    t.points.insert(u.clone(), v);
                }
            }
            Ok((Rational::new(1, n.max(1) as i64), s))
        })
        .collect()
}

/// Haar-ish real orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> CMat {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_diagonal(&r.diagonal().map(|x| if x < 0.0 { -1.0 } else { 1.0 }));
    (q * signs).map(c)
}

fn conj_family<L: Clone>(f: &SubMeasurement<L>, o: &CMat) -> SubMeasurement<L> {
    SubMeasurement { dim: f.dim, outcomes: f.outcomes.clone(), ops: f.ops.iter().map(|a| o * a * o.transpose()).collect() }
}

fn conj_families(f: &QuantumFamilies, o: &CMat) -> QuantumFamilies {
    QuantumFamilies {
        points: f.points.iter().map(|(k, v)| (k.clone(), conj_family(v, o))).collect(),
        axis: f.axis.iter().map(|(k, v)| (k.clone(), conj_family(v, o))).collect(),
        diag: f.diag.iter().map(|(k, v)| (k.clone(), conj_family(v, o))).collect(),
    }
}

/// Conjugates both parties by the same real orthogonal `o`; the state matrix goes to
/// `o M o^T`. All statistics and the swap symmetry are unchanged.
pub fn rotate(s: &QuantumStrategy, o: &CMat) -> Result<QuantumStrategy> {
    let state = BipartiteState::from_matrix(&(o * s.state.matrix() * o.transpose()))?;
    Ok(QuantumStrategy {
        state,
        roles: [conj_families(&s.roles[0], o), conj_families(&s.roles[1], o)],
        ..s.clone()
    })
}

/// A noisy mixture embedded and conjugated by a random real orthogonal matrix.
pub fn rotated_mixture(field: &Field, m: usize, d: usize, n: usize, rng: &mut impl Rng) -> Result<QuantumStrategy> {
    let s = embed_classical(&noisy_mixture(field, m, d, n, rng)?)?;
    let o = random_orthogonal(s.state.da, rng);
    rotate(&s, &o)
}

/// Points-only strategy: a random rank-split projective measurement at every point on
/// `C^n` for role A, its entrywise conjugate for role B, on the maximally entangled state.
/// Generically non-commuting; lines carry no measurements.
pub fn random_points_strategy(field: &Field, m: usize, d: usize, n: usize, rng: &mut impl Rng) -> Result<QuantumStrategy> {
    let labels: Vec<Fe> = field.elements().collect();
    let mut roles: [QuantumFamilies; 2] = Default::default();
    for u in crate::poly::points(field, m) {
        let ops = random_projective(n, labels.len(), rng);
        roles[1].points.insert(u.clone(), SubMeasurement::new(labels.clone(), conj_ops(&ops))?);
        roles[0].points.insert(u, SubMeasurement::new(labels.clone(), ops)?);
    }
    Ok(QuantumStrategy { m, d, state: BipartiteState::max_entangled(n), roles, symmetric: false, projective: true })
}

/// `(1 - eta) P + eta N` for a random projective `P` and random POVM `N`.
pub fn near_projective(n: usize, k: usize, eta: f64, rng: &mut impl Rng) -> Vec<CMat> {
    let proj = random_projective(n, k, rng);
    let noise = random_povm(n, k, rng);
    proj.iter().zip(&noise).map(|(p, q)| p * c(1.0 - eta) + q * c(eta)).collect()
}

/// Real symmetric variant of [`near_projective`]: diagonal projectors of a random split,
/// conjugated by a random real orthogonal matrix, mixed with the real part of a random POVM.
/// Suitable for `A (x) A` on the maximally entangled state.
pub fn near_projective_real(n: usize, k: usize, eta: f64, rng: &mut impl Rng) -> Vec<CMat> {
    let o = random_orthogonal(n, rng);
    let slot: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    let noise = random_povm(n, k, rng);
    (0..k)
        .map(|a| {
            let p = CMat::from_diagonal(&crate::linalg::CVec::from_fn(n, |i, _| c(if slot[i] == a { 1.0 } else { 0.0 })));
            let real_noise = noise[a].map(|z| c(z.re));
            &o * p * o.transpose() * c(1.0 - eta) + real_noise * c(eta)
        })
        .collect()
}

/// Entrywise complex conjugate, so that `A (x) I psi = I (x) conj(A) psi` on the maximally entangled state.
pub fn conj_ops(ops: &[CMat]) -> Vec<CMat> {
    ops.iter().map(|o| o.map(|z| z.conj())).collect()
}

/// Operators with spectrum in `(0, 1)`: a logistic map of random Hermitian matrices.
pub fn random_contractions(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<CMat> {
    (0..n).map(|_| spectral_map(&hermitian_part(&random_gaussian(dim, dim, rng)), |x| 1.0 / (1.0 + (-x).exp()))).collect()
}

/// One random polynomial sub-measurement per `x` in `F_q`: up to three labels in
/// `P(m,q,d)` on projectors of a random split of `C^n`, with one slot left as the deficit.
pub fn random_slices(field: &Field, m: usize, d: usize, n: usize, rng: &mut impl Rng) -> Result<Vec<SubMeasurement<MultiPoly>>> {
    let space = PolySpace::new(field, m, d)?;
    field
        .elements()
        .map(|_| {
            let mut labels: Vec<MultiPoly> = (0..3).map(|_| random_poly(&space, rng)).collect();
            labels.sort();
            labels.dedup();
            let mut ops = random_projective(n, labels.len() + 1, rng);
            ops.pop();
            SubMeasurement::new(labels, ops)
        })
        .collect()
}

/// Honest slices `x -> h(., x)` of an `(m+1)`-variate polynomial, each on `C^n`.
pub fn honest_slices(field: &Field, h: &MultiPoly, n: usize) -> Result<Vec<SubMeasurement<MultiPoly>>> {
    field.elements().map(|x| SubMeasurement::new(vec![h.slice_last(field, x)], vec![crate::linalg::eye(n)])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob;
    use crate::protocol::TestParams;
    use crate::strategy::pass_probabilities_quantum;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = random_orthogonal(5, &mut rng);
        assert!(frob(&(&o * o.transpose() - crate::linalg::eye(5))) < 1e-12);
        assert!(o.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn rotation_keeps_statistics_and_symmetry() {
        let f = Field::of_order(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = embed_classical(&noisy_mixture(&f, 1, 1, 3, &mut rng).unwrap()).unwrap();
        let r = rotate(&s, &random_orthogonal(3, &mut rng)).unwrap();
        r.validate().unwrap();
        assert!(r.state.is_symmetric());
        let tp = TestParams::new(1, 1);
        let a = pass_probabilities_quantum(&f, &tp, &s).unwrap();
        let b = pass_probabilities_quantum(&f, &tp, &r).unwrap();
        assert!((a.eps - b.eps).abs() < 1e-12 && (a.delta - b.delta).abs() < 1e-12 && (a.gamma - b.gamma).abs() < 1e-12);
    }

    #[test]
    fn real_near_projective_is_a_real_measurement() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ops = near_projective_real(5, 3, 0.1, &mut rng);
        let a = SubMeasurement::new(vec![0, 1, 2], ops).unwrap();
        assert!(a.is_measurement());
        assert!(a.ops.iter().all(|o| o.iter().all(|z| z.im == 0.0)));
        let exact = SubMeasurement::new(vec![0, 1, 2], near_projective_real(5, 3, 0.0, &mut rng)).unwrap();
        assert!(exact.is_projective());
    }

    #[test]
    fn slices_are_sub_measurements() {
        let f = Field::of_order(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in random_slices(&f, 1, 1, 4, &mut rng).unwrap() {
            s.validate().unwrap();
            assert!(s.is_projective() && !s.is_measurement());
        }
    }
}
