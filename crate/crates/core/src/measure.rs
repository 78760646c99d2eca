//! Sub-measurements, bipartite states and the distances between measurement families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eye, frob, hermiticity_residual, max_eig, min_eig, projector_residual, zeros, CMat, CVec};

/// Completeness tolerance: `sum_a A_a = I` within this Frobenius distance.
pub const MEASUREMENT_TOL: f64 = 1e-9;
/// Hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalue floor for positivity checks.
pub const PSD_FLOOR: f64 = -1e-10;
/// Projectivity tolerance.
pub const PROJECTIVE_TOL: f64 = 1e-9;

/// Outcome-labelled family of PSD operators with `sum <= I`.
/// Outcomes with zero operators are kept so label sets line up across families.
#[derive(Clone, Debug, PartialEq)]
pub struct SubMeasurement<L> {
    pub dim: usize,
    pub outcomes: Vec<L>,
    pub ops: Vec<CMat>,
}

/// Outcome of a completed family: an original label or the extra outcome `Bot`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome<L> {
    Val(L),
    Bot,
}

impl<L: Clone + PartialEq> SubMeasurement<L> {
    /// Builds and validates a sub-measurement.
    pub fn new(outcomes: Vec<L>, ops: Vec<CMat>) -> Result<Self> {
        let s = Self::new_unchecked(outcomes, ops)?;
        s.validate()?;
        Ok(s)
    }

    /// Builds without the positivity checks (dimensions are still checked).
    pub fn new_unchecked(outcomes: Vec<L>, ops: Vec<CMat>) -> Result<Self> {
        if outcomes.len() != ops.len() {
            return Err(Error::Measurement("label and operator counts differ".into()));
        }
        let dim = ops.first().map_or(0, |o| o.nrows());
        if ops.iter().any(|o| o.nrows() != dim || o.ncols() != dim) {
            return Err(Error::Dimension("operators of different sizes".into()));
        }
        Ok(SubMeasurement { dim, outcomes, ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// The complete part `sum_a A_a`.
    pub fn total(&self) -> CMat {
        self.ops.iter().fold(zeros(self.dim), |acc, a| acc + a)
    }

    pub fn get(&self, label: &L) -> Option<&CMat> {
        self.outcomes.iter().position(|l| l == label).map(|i| &self.ops[i])
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.ops.iter().enumerate() {
            let h = hermiticity_residual(a);
            if h > HERMITIAN_TOL {
                return Err(Error::Measurement(format!("operator {i} not Hermitian (residual {h:.2e})")));
            }
            let e = min_eig(a);
            if e < PSD_FLOOR {
                return Err(Error::Measurement(format!("operator {i} not PSD (min eigenvalue {e:.2e})")));
            }
        }
        let top = max_eig(&self.total());
        if top > 1.0 + MEASUREMENT_TOL {
            return Err(Error::Measurement(format!("sum exceeds identity (max eigenvalue {top:.12})")));
        }
        Ok(())
    }

    /// `||sum_a A_a - I||_F`.
    pub fn completeness_residual(&self) -> f64 {
        frob(&(self.total() - eye(self.dim)))
    }

    pub fn is_measurement(&self) -> bool {
        self.completeness_residual() <= MEASUREMENT_TOL
    }

    /// Largest `||A_a A_b - delta_ab A_a||_F`.
    pub fn projectivity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.ops.iter().enumerate() {
            worst = worst.max(projector_residual(a));
            for b in &self.ops[i + 1..] {
                worst = worst.max(frob(&(a * b)));
            }
        }
        worst
    }

    pub fn is_projective(&self) -> bool {
        self.projectivity_residual() <= PROJECTIVE_TOL
    }

    /// Adds the outcome `Bot` with operator `I - sum_a A_a`.
    pub fn complete(&self) -> SubMeasurement<Outcome<L>> {
        let mut outcomes: Vec<Outcome<L>> = self.outcomes.iter().cloned().map(Outcome::Val).collect();
        let mut ops = self.ops.clone();
        outcomes.push(Outcome::Bot);
        ops.push(eye(self.dim) - self.total());
        SubMeasurement { dim: self.dim, outcomes, ops }
    }

    /// Groups outcomes by `f`, labels in order of first appearance.
    pub fn post_process<M: Clone + PartialEq>(&self, f: impl Fn(&L) -> M) -> SubMeasurement<M> {
        let mut outcomes: Vec<M> = Vec::new();
        let mut ops: Vec<CMat> = Vec::new();
        for (l, a) in self.outcomes.iter().zip(&self.ops) {
            let key = f(l);
            match outcomes.iter().position(|k| *k == key) {
                Some(i) => ops[i] += a,
                None => {
                    outcomes.push(key);
                    ops.push(a.clone());
                }
            }
        }
        SubMeasurement { dim: self.dim, outcomes, ops }
    }

    /// Groups outcomes by `f` onto a fixed label list.
    pub fn post_process_onto<M: Clone + PartialEq>(&self, f: impl Fn(&L) -> M, labels: &[M]) -> Result<SubMeasurement<M>> {
        let mut ops = vec![zeros(self.dim); labels.len()];
        for (l, a) in self.outcomes.iter().zip(&self.ops) {
            let key = f(l);
            let i = labels
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::Measurement("post-processing leaves the label set".into()))?;
            ops[i] += a;
        }
        Ok(SubMeasurement { dim: self.dim, outcomes: labels.to_vec(), ops })
    }

    /// Relabels without changing operators.
    pub fn map_labels<M>(&self, f: impl Fn(&L) -> M) -> SubMeasurement<M> {
        SubMeasurement { dim: self.dim, outcomes: self.outcomes.iter().map(f).collect(), ops: self.ops.clone() }
    }

    /// Drops the given labels (used to discard `Bot` after a completion round trip).
    pub fn restrict_to(&self, keep: impl Fn(&L) -> bool) -> SubMeasurement<L> {
        let (outcomes, ops) = self
            .outcomes
            .iter()
            .zip(&self.ops)
            .filter(|(l, _)| keep(l))
            .map(|(l, a)| (l.clone(), a.clone()))
            .unzip();
        SubMeasurement { dim: self.dim, outcomes, ops }
    }
}

/// Unit vector in `C^{da} (x) C^{db}`, stored with its `da x db` coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    pub da: usize,
    pub db: usize,
    pub psi: CVec,
    mat: CMat,
}

impl BipartiteState {
    pub fn new(da: usize, db: usize, psi: CVec) -> Result<Self> {
        if psi.len() != da * db {
            return Err(Error::Dimension(format!("state length {} != {da}*{db}", psi.len())));
        }
        let n = psi.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Strategy(format!("state norm {n} is not 1")));
        }
        let mat = CMat::from_fn(da, db, |i, j| psi[i * db + j]);
        Ok(BipartiteState { da, db, psi, mat })
    }

    /// Normalizes before building.
    pub fn normalized(da: usize, db: usize, psi: CVec) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::Strategy("zero state".into()));
        }
        Self::new(da, db, psi / c(n))
    }

    pub fn from_matrix(mat: &CMat) -> Result<Self> {
        let (da, db) = mat.shape();
        let psi = CVec::from_fn(da * db, |k, _| mat[(k / db, k % db)]);
        Self::normalized(da, db, psi)
    }

    /// `sum_i |ii> / sqrt(n)`.
    pub fn max_entangled(n: usize) -> Self {
        Self::from_matrix(&eye(n)).expect("nonzero")
    }

    /// Coefficient matrix `Psi` with `psi = sum Psi_ij |i>|j>`.
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// `<psi| X (x) Y |psi> = Tr(Psi^dagger X Psi Y^T)`.
    pub fn expect(&self, x: &CMat, y: &CMat) -> f64 {
        // Tr(Psi^dagger X Psi Y^T) = sum_ij conj(Psi_ij) (X Psi Y^T)_ij
        let prod = x * &self.mat * y.transpose();
        self.mat.iter().zip(prod.iter()).map(|(p, q)| (p.conj() * q).re).sum()
    }

    /// `<psi| X (x) I |psi>`.
    pub fn expect_left(&self, x: &CMat) -> f64 {
        let xm = x * &self.mat;
        self.mat.iter().zip(xm.iter()).map(|(p, q)| (p.conj() * q).re).sum()
    }

    /// `<psi| I (x) Y |psi>`.
    pub fn expect_right(&self, y: &CMat) -> f64 {
        let my = &self.mat * y.transpose();
        self.mat.iter().zip(my.iter()).map(|(p, q)| (p.conj() * q).re).sum()
    }

    /// Reduced state of the first party, `Psi Psi^dagger`.
    pub fn reduced_left(&self) -> CMat {
        &self.mat * self.mat.adjoint()
    }

    /// `||psi - SWAP psi||`, zero for permutation-invariant states.
    pub fn swap_residual(&self) -> f64 {
        if self.da != self.db {
            return f64::INFINITY;
        }
        frob(&(&self.mat - self.mat.transpose()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.swap_residual() <= 1e-9
    }

    /// `SWAP psi` as a state on `C^{db} (x) C^{da}`.
    pub fn swapped(&self) -> Self {
        Self::from_matrix(&self.mat.transpose()).expect("unit state")
    }
}

/// Which notion a [`DistanceReport`] measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    Consistency,
    StateDependent,
}

/// A measured distance with its paper-style bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub kind: DistanceKind,
    pub value: f64,
    pub bound: Option<f64>,
}

fn check_labels<L: PartialEq>(a: &SubMeasurement<L>, b: &SubMeasurement<L>) -> Result<()> {
    if a.outcomes != b.outcomes {
        return Err(Error::Measurement("outcome label sets differ".into()));
    }
    if a.dim == 0 || b.dim == 0 {
        return Err(Error::Dimension("empty operator family".into()));
    }
    Ok(())
}

/// A question-indexed pair of families with its probability weight.
pub type WeightedPair<'a, L> = (f64, &'a SubMeasurement<L>, &'a SubMeasurement<L>);

/// `E_x sum_{a != b} <psi| A^x_a (x) B^x_b |psi>` (A on the first party, B on the second).
pub fn consistency<L: Clone + PartialEq>(pairs: &[WeightedPair<'_, L>], state: &BipartiteState) -> Result<f64> {
    let mut total = 0.0;
    for (w, a, b) in pairs {
        check_labels(a, b)?;
        if a.dim != state.da || b.dim != state.db {
            return Err(Error::Dimension("family does not act on the state".into()));
        }
        let all = state.expect(&a.total(), &b.total());
        let same: f64 = a.ops.iter().zip(&b.ops).map(|(x, y)| state.expect(x, y)).sum();
        total += w * (all - same);
    }
    Ok(total)
}

/// `E_x sum_a <psi| A^x_a (x) B^x_a |psi>`.
pub fn agreement<L: Clone + PartialEq>(pairs: &[WeightedPair<'_, L>], state: &BipartiteState) -> Result<f64> {
    let mut total = 0.0;
    for (w, a, b) in pairs {
        check_labels(a, b)?;
        total += w * a.ops.iter().zip(&b.ops).map(|(x, y)| state.expect(x, y)).sum::<f64>();
    }
    Ok(total)
}

/// `E_x sum_a ||(A^x_a - B^x_a) psi||^2` for operators on the whole space of `psi`.
pub fn state_distance<L: Clone + PartialEq>(pairs: &[WeightedPair<'_, L>], psi: &CVec) -> Result<f64> {
    let mut total = 0.0;
    for (w, a, b) in pairs {
        check_labels(a, b)?;
        if a.dim != psi.len() || b.dim != psi.len() {
            return Err(Error::Dimension("operator and vector sizes differ".into()));
        }
        total += w * a.ops.iter().zip(&b.ops).map(|(x, y)| ((x - y) * psi).norm_squared()).sum::<f64>();
    }
    Ok(total)
}

/// `E_x sum_a ||(A^x_a - B^x_a) (x) I psi||^2`, both families on the first party.
pub fn state_distance_left<L: Clone + PartialEq>(pairs: &[WeightedPair<'_, L>], state: &BipartiteState) -> Result<f64> {
    let mut total = 0.0;
    for (w, a, b) in pairs {
        check_labels(a, b)?;
        total += w * a.ops.iter().zip(&b.ops).map(|(x, y)| ((x - y) * state.matrix()).norm_squared()).sum::<f64>();
    }
    Ok(total)
}

/// `E_x sum_a ||(A^x_a (x) I - I (x) B^x_a) psi||^2`.
pub fn cross_distance<L: Clone + PartialEq>(pairs: &[WeightedPair<'_, L>], state: &BipartiteState) -> Result<f64> {
    let mut total = 0.0;
    let m = state.matrix();
    for (w, a, b) in pairs {
        check_labels(a, b)?;
        total += w * a
            .ops
            .iter()
            .zip(&b.ops)
            .map(|(x, y)| (x * m - m * y.transpose()).norm_squared())
            .sum::<f64>();
    }
    Ok(total)
}

/// Strong self-consistency deficit `<psi|A (x) I|psi> - E_x sum_a <psi|A^x_a (x) A^x_a|psi>`
/// on a permutation-invariant state.
pub fn strong_self_consistency<L: Clone + PartialEq>(fams: &[(f64, &SubMeasurement<L>)], state: &BipartiteState) -> Result<f64> {
    let r = state.swap_residual();
    if r > 1e-9 {
        return Err(Error::NonSymmetric(r));
    }
    let mut total = 0.0;
    for (w, a) in fams {
        let comp = state.expect_left(&a.total());
        let same: f64 = a.ops.iter().map(|x| state.expect(x, x)).sum();
        total += w * (comp - same);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_povm, random_projective, random_unit_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sm(ops: Vec<CMat>) -> SubMeasurement<usize> {
        SubMeasurement::new((0..ops.len()).collect(), ops).unwrap()
    }

    #[test]
    fn expectation_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let st = BipartiteState::new(2, 3, random_unit_vector(6, &mut rng)).unwrap();
        let x = random_povm(2, 2, &mut rng).remove(0);
        let y = random_povm(3, 2, &mut rng).remove(0);
        let full = x.kronecker(&y);
        let direct = (st.psi.adjoint() * full * &st.psi)[(0, 0)].re;
        assert!((st.expect(&x, &y) - direct).abs() < 1e-12);
        assert!((st.expect_left(&x) - st.expect(&x, &eye(3))).abs() < 1e-12);
        assert!((st.expect_right(&y) - st.expect(&eye(2), &y)).abs() < 1e-12);
    }

    #[test]
    fn aligned_projective_family_is_consistent() {
        let e0 = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(0.0)]));
        let e1 = eye(2) - &e0;
        let a = sm(vec![e0.clone(), e1]);
        let st = BipartiteState::max_entangled(2);
        assert!(consistency(&[(1.0, &a, &a)], &st).unwrap().abs() < 1e-12);
        assert!(strong_self_consistency(&[(1.0, &a)], &st).unwrap().abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let st = BipartiteState::normalized(3, 3, random_unit_vector(9, &mut rng)).unwrap();
        for n in 1..5 {
            let a = sm(vec![eye(3) * c(1.0 / n as f64); n]);
            let v = consistency(&[(1.0, &a, &a)], &st).unwrap();
            assert!((v - (n as f64 - 1.0) / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn consistency_of_measurements_is_one_minus_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let st = BipartiteState::new(3, 3, random_unit_vector(9, &mut rng)).unwrap();
            let a = sm(random_povm(3, 4, &mut rng));
            let b = sm(random_povm(3, 4, &mut rng));
            let cons = consistency(&[(1.0, &a, &b)], &st).unwrap();
            let agr = agreement(&[(1.0, &a, &b)], &st).unwrap();
            assert!((cons - (1.0 - agr)).abs() < 1e-10);
        }
    }

    #[test]
    fn post_processing_and_completion() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = sm(random_povm(3, 4, &mut rng));
        let same = a.post_process(|&l| l);
        assert_eq!(same, a);
        let parity = a.post_process(|&l| l % 2);
        assert_eq!(parity.outcomes, vec![0, 1]);
        assert!(frob(&(parity.total() - a.total())) < 1e-12);
        let comp = a.complete();
        assert!(frob(comp.get(&Outcome::Bot).unwrap()) < 1e-9);
        let half = sm(vec![eye(2) * c(0.25), eye(2) * c(0.5)]);
        let hc = half.complete();
        assert!(hc.is_measurement());
        assert!(frob(&(hc.get(&Outcome::Bot).unwrap() - eye(2) * c(0.25))) < 1e-12);
        assert!(a.post_process_onto(|&l| l + 10, &[0usize]).is_err());
    }

    #[test]
    fn invalid_families_rejected() {
        let bad = vec![eye(2) * c(0.7), eye(2) * c(0.7)];
        assert!(SubMeasurement::new(vec![0, 1], bad).is_err());
        let neg = vec![eye(2) * c(-0.1)];
        assert!(SubMeasurement::new(vec![0], neg).is_err());
    }

    #[test]
    fn projective_distance_is_twice_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let st = BipartiteState::new(3, 3, random_unit_vector(9, &mut rng)).unwrap();
            let a = sm(random_projective(3, 3, &mut rng));
            let b = sm(random_projective(3, 3, &mut rng));
            let cons = consistency(&[(1.0, &a, &b)], &st).unwrap();
            let dist = cross_distance(&[(1.0, &a, &b)], &st).unwrap();
            assert!((dist - 2.0 * cons).abs() < 1e-10);
        }
    }

    #[test]
    fn nonsymmetric_state_rejected() {
        let st = BipartiteState::new(2, 2, CVec::from_vec(vec![c(0.0), c(1.0), c(0.0), c(0.0)])).unwrap();
        let a = sm(vec![eye(2)]);
        assert!(matches!(strong_self_consistency(&[(1.0, &a)], &st), Err(Error::NonSymmetric(_))));
    }
}
