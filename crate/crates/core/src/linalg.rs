//! Dense complex linear algebra helpers and seeded random operators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian matrix.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let e = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| e.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

/// `f(A)` for Hermitian `A` via its eigendecomposition.
pub fn spectral_map(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(a);
    let d = CMat::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&x| c(f(x)))));
    &vecs * d * vecs.adjoint()
}

/// Square root of a PSD matrix (negative drift clamped to zero).
pub fn psd_sqrt(a: &CMat) -> CMat {
    spectral_map(a, |x| x.max(0.0).sqrt())
}

/// Inverse square root of a positive definite matrix.
pub fn inv_sqrt(a: &CMat) -> CMat {
    spectral_map(a, |x| 1.0 / x.sqrt())
}

pub fn min_eig(a: &CMat) -> f64 {
    eigh(a).0.first().copied().unwrap_or(0.0)
}

pub fn max_eig(a: &CMat) -> f64 {
    eigh(a).0.last().copied().unwrap_or(0.0)
}

pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace_re(a: &CMat) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].re).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `||A - A^dagger||_F`.
pub fn hermiticity_residual(a: &CMat) -> f64 {
    frob(&(a - a.adjoint()))
}

/// `||P^2 - P||_F`.
pub fn projector_residual(p: &CMat) -> f64 {
    frob(&(p * p - p))
}

/// Orthonormal basis for the orthogonal complement of the columns of `v`
/// (assumed orthonormal), by Gram-Schmidt over the standard basis in order.
pub fn orthonormal_complement(v: &CMat) -> CMat {
    let n = v.nrows();
    let k = v.ncols();
    let mut basis: Vec<CVec> = (0..k).map(|j| v.column(j).into_owned()).collect();
    let mut extra: Vec<CVec> = Vec::new();
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut w = CVec::zeros(n);
        w[i] = ONE;
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
        }
        let nrm = w.norm();
        if nrm > 1e-8 {
            w /= c(nrm);
            basis.push(w.clone());
            extra.push(w);
        }
    }
    let mut out = CMat::zeros(n, extra.len());
    for (j, w) in extra.iter().enumerate() {
        out.set_column(j, w);
    }
    out
}

pub fn random_gaussian(n: usize, m: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(n, m, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let g = random_gaussian(n, n, rng);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let col = u.column(j) * ph;
        u.set_column(j, &col);
    }
    u
}

pub fn random_unit_vector(n: usize, rng: &mut impl Rng) -> CVec {
    let g = random_gaussian(n, 1, rng);
    let v = g.column(0).into_owned();
    let nrm = v.norm();
    v / c(nrm)
}

/// Random POVM with `k` outcomes on `C^n`: `S^{-1/2} W_a S^{-1/2}` for Wishart `W_a`.
pub fn random_povm(n: usize, k: usize, rng: &mut impl Rng) -> Vec<CMat> {
    let ws: Vec<CMat> = (0..k)
        .map(|_| {
            let g = random_gaussian(n, n, rng);
            &g * g.adjoint()
        })
        .collect();
    let s: CMat = ws.iter().fold(zeros(n), |acc, w| acc + w);
    let r = inv_sqrt(&s);
    ws.iter().map(|w| hermitian_part(&(&r * w * &r))).collect()
}

/// Random projective measurement with `k` outcomes: a random basis split into
/// `k` groups (sizes as equal as possible; some may be empty when `k > n`).
pub fn random_projective(n: usize, k: usize, rng: &mut impl Rng) -> Vec<CMat> {
    let u = random_unitary(n, rng);
    let mut ops = vec![zeros(n); k];
    for j in 0..n {
        let a = if j < k { j } else { rng.random_range(0..k) };
        let col = u.column(j).into_owned();
        ops[a] += &col * col.adjoint();
    }
    ops
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_objects_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_unitary(5, &mut rng);
        assert!(frob(&(&u * u.adjoint() - eye(5))) < 1e-12);
        let povm = random_povm(4, 3, &mut rng);
        let s = povm.iter().fold(zeros(4), |a, b| a + b);
        assert!(frob(&(s - eye(4))) < 1e-10);
        assert!(povm.iter().all(|a| min_eig(a) > -1e-12));
        let proj = random_projective(4, 3, &mut rng);
        assert!(proj.iter().all(|p| projector_residual(p) < 1e-10));
    }

    #[test]
    fn complement_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_unitary(6, &mut rng);
        let v = u.columns(0, 2).into_owned();
        let w = orthonormal_complement(&v);
        assert_eq!(w.ncols(), 4);
        assert!(frob(&(w.adjoint() * &w - eye(4))) < 1e-10);
        assert!(frob(&(v.adjoint() * &w)) < 1e-10);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_gaussian(4, 4, &mut rng);
        let a = &g * g.adjoint();
        let s = psd_sqrt(&a);
        assert!(frob(&(&s * &s - &a)) < 1e-9);
    }
}
