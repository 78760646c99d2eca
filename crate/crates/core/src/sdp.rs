//! The self-improvement SDP and the improved measurement built from its optimum.
//!
//! Primal: `max sum_g Tr(T_g A_g)` over `T_g >= 0`, `sum_g T_g <= I`.
//! Dual: `min Tr Z` over `Z >= A_g` for all `g`.
//! The dual is solved by a log-barrier path-following method; on the central path
//! `T_g = (Z - A_g)^{-1} / t` sums to the identity, which is the optimal pair with
//! `sum_g T_g = I` and `T_g (Z - A_g) = 0` in the limit.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds::{constants, BoundReport};
use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::linalg::{c, eye, frob, inv_sqrt, kron, max_eig, min_eig, trace_re, CMat};
use crate::measure::{consistency, cross_distance, strong_self_consistency, SubMeasurement, WeightedPair};
use crate::orthogonalize::orthogonalize_sub;
use crate::poly::{points, MultiPoly, PolySpace};
use crate::strategy::{Goodness, QuantumStrategy};

pub const MAX_SDP_DIM: usize = 64;
pub const MAX_SDP_CONSTRAINTS: usize = 1024;

/// `A_g` for every outcome label `g`.
#[derive(Clone, Debug)]
pub struct SdpInstance<L> {
    pub dim: usize,
    pub labels: Vec<L>,
    pub constraints: Vec<CMat>,
}

impl<L> SdpInstance<L> {
    pub fn new(labels: Vec<L>, constraints: Vec<CMat>) -> Result<Self> {
        let dim = constraints.first().map_or(0, |a| a.nrows());
        if labels.len() != constraints.len() || constraints.is_empty() {
            return Err(Error::Param("need one label per constraint and at least one constraint".into()));
        }
        if dim > MAX_SDP_DIM || constraints.len() > MAX_SDP_CONSTRAINTS {
            return Err(Error::Guard { what: "sdp size", size: (dim * constraints.len()) as u128, limit: (MAX_SDP_DIM * MAX_SDP_CONSTRAINTS) as u128 });
        }
        if constraints.iter().any(|a| a.nrows() != dim || a.ncols() != dim) {
            return Err(Error::Dimension("constraints of different sizes".into()));
        }
        Ok(SdpInstance { dim, labels, constraints })
    }

    /// `sum_j max_g (A_g)_jj` when every constraint is diagonal.
    pub fn diagonal_oracle(&self) -> Option<f64> {
        let offdiag = self.constraints.iter().any(|a| (0..self.dim).any(|i| (0..self.dim).any(|j| i != j && a[(i, j)].norm() > 1e-12)));
        if offdiag {
            return None;
        }
        Some((0..self.dim).map(|j| self.constraints.iter().map(|a| a[(j, j)].re).fold(f64::NEG_INFINITY, f64::max)).sum())
    }
}

/// Solver knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdpOptions {
    /// Target for the barrier gap `M r / t`.
    pub gap: f64,
    /// Newton-decrement threshold for centering.
    pub centering: f64,
    pub max_newton: usize,
    /// Barrier parameter growth per outer step.
    pub mu: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { gap: 1e-9, centering: 1e-9, max_newton: 2000, mu: 10.0 }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub t: Vec<CMat>,
    pub z: CMat,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    /// `max_g ||T_g Z - T_g A_g||_F`.
    pub slackness: f64,
    /// `||sum_g T_g - I||_F`.
    pub completeness_residual: f64,
    /// `min_g lambda_min(Z - A_g)`.
    pub dual_feasibility: f64,
    /// Primal objective change caused by the final projection onto `sum T = I`.
    pub projection_shift: f64,
    pub newton_steps: usize,
}

/// Solver diagnostics in serializable form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSummary {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub slackness: f64,
    pub completeness_residual: f64,
    pub dual_feasibility: f64,
    pub projection_shift: f64,
    pub newton_steps: usize,
}

impl SdpSolution {
    pub fn summary(&self) -> SdpSummary {
        SdpSummary {
            primal: self.primal,
            dual: self.dual,
            gap: self.gap,
            slackness: self.slackness,
            completeness_residual: self.completeness_residual,
            dual_feasibility: self.dual_feasibility,
            projection_shift: self.projection_shift,
            newton_steps: self.newton_steps,
        }
    }
}

/// Orthonormal (trace inner product) real basis of `r x r` Hermitian matrices.
fn hermitian_basis(r: usize) -> Vec<CMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(r * r);
    for j in 0..r {
        let mut e = CMat::zeros(r, r);
        e[(j, j)] = c(1.0);
        out.push(e);
    }
    for j in 0..r {
        for k in j + 1..r {
            let mut e = CMat::zeros(r, r);
            e[(j, k)] = c(s);
            e[(k, j)] = c(s);
            out.push(e);
            let mut f = CMat::zeros(r, r);
            f[(j, k)] = num_complex::Complex64::new(0.0, -s);
            f[(k, j)] = num_complex::Complex64::new(0.0, s);
            out.push(f);
        }
    }
    out
}

struct Barrier<'a> {
    a: &'a [CMat],
    basis: Vec<CMat>,
    /// Columns `vec(E_k)`.
    bmat: CMat,
}

impl<'a> Barrier<'a> {
    fn new(a: &'a [CMat], r: usize) -> Self {
        let basis = hermitian_basis(r);
        let mut bmat = CMat::zeros(r * r, basis.len());
        for (k, e) in basis.iter().enumerate() {
            bmat.set_column(k, &CMat::from_column_slice(r * r, 1, e.as_slice()).column(0));
        }
        Barrier { a, basis, bmat }
    }

    /// Cholesky factors of every `Z - A_g`, or `None` if any is not positive definite.
    fn slacks(&self, z: &CMat) -> Option<Vec<Cholesky<num_complex::Complex64, nalgebra::Dyn>>> {
        self.a.iter().map(|a| Cholesky::new(crate::linalg::hermitian_part(&(z - a)))).collect()
    }

    fn value(&self, z: &CMat, t: f64) -> Option<f64> {
        let ch = self.slacks(z)?;
        let logdet: f64 = ch.iter().map(|l| l.l_dirty().diagonal().iter().take(z.nrows()).map(|d| 2.0 * d.re.ln()).sum::<f64>()).sum();
        Some(t * trace_re(z) - logdet)
    }

    fn inverses(&self, z: &CMat) -> Option<Vec<CMat>> {
        Some(self.slacks(z)?.into_iter().map(|l| crate::linalg::hermitian_part(&l.inverse())).collect())
    }

    /// Gradient and Hessian in the Hermitian basis.
    fn derivatives(&self, w: &[CMat], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let r = self.basis[0].nrows();
        let sum_w = w.iter().fold(CMat::zeros(r, r), |acc, x| acc + x);
        let gm = eye(r) * c(t) - sum_w;
        let grad = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|e| trace_re(&(e * &gm))));
        let kr = w.iter().fold(CMat::zeros(r * r, r * r), |acc, x| acc + kron(&x.transpose(), x));
        let h = self.bmat.adjoint() * kr * &self.bmat;
        (grad, h.map(|z| z.re))
    }

    fn to_mat(&self, x: &DVector<f64>) -> CMat {
        self.basis.iter().zip(x.iter()).fold(CMat::zeros(self.basis[0].nrows(), self.basis[0].nrows()), |acc, (e, &v)| acc + e * c(v))
    }
}

fn newton_direction(grad: &DVector<f64>, h: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = grad.len();
    let d = DVector::from_iterator(n, (0..n).map(|i| 1.0 / h[(i, i)].max(1e-300).sqrt()));
    let scaled = DMatrix::from_fn(n, n, |i, j| h[(i, j)] * d[i] * d[j]);
    let rhs = -grad.component_mul(&d);
    let mut ridge = 0.0;
    for _ in 0..8 {
        let m = &scaled + DMatrix::identity(n, n) * ridge;
        if let Some(ch) = Cholesky::new(m) {
            return Ok(ch.solve(&rhs).component_mul(&d));
        }
        ridge = if ridge == 0.0 { 1e-14 } else { ridge * 100.0 };
    }
    Err(Error::Solver("Newton system is not positive definite".into()))
}

/// Solves the pair: closed form when every constraint is diagonal, barrier method otherwise.
pub fn solve<L>(inst: &SdpInstance<L>, opts: &SdpOptions) -> Result<SdpSolution> {
    match inst.diagonal_oracle() {
        Some(_) => Ok(solve_diagonal(inst)),
        None => solve_barrier(inst, opts),
    }
}

/// Diagonal instances: `Z_jj = max_g (A_g)_jj`, and `T_g` puts weight on coordinate `j`
/// for the maximizing `g`, split equally among ties.
pub fn solve_diagonal<L>(inst: &SdpInstance<L>) -> SdpSolution {
    let r = inst.dim;
    let mut z = CMat::zeros(r, r);
    let mut t = vec![CMat::zeros(r, r); inst.constraints.len()];
    for j in 0..r {
        let best = inst.constraints.iter().map(|a| a[(j, j)].re).fold(f64::NEG_INFINITY, f64::max);
        z[(j, j)] = c(best);
        let ties: Vec<usize> = (0..inst.constraints.len()).filter(|&g| inst.constraints[g][(j, j)].re >= best - 1e-12).collect();
        for &g in &ties {
            t[g][(j, j)] = c(1.0 / ties.len() as f64);
        }
    }
    let primal: f64 = t.iter().zip(&inst.constraints).map(|(tg, a)| trace_re(&(tg * a))).sum();
    finish(inst, t, z, primal, 0)
}

/// Barrier path-following solve, then projection of the primal onto `sum_g T_g = I`.
pub fn solve_barrier<L>(inst: &SdpInstance<L>, opts: &SdpOptions) -> Result<SdpSolution> {
    let r = inst.dim;
    let mcount = inst.constraints.len() as f64;
    let bar = Barrier::new(&inst.constraints, r);
    let top = inst.constraints.iter().map(max_eig).fold(0.0, f64::max);
    let mut z = eye(r) * c(1.0 + top.max(1.0));
    let mut t = 1.0;
    let t_final = mcount * r as f64 / opts.gap;
    let mut steps = 0;
    loop {
        // centering
        loop {
            let w = bar.inverses(&z).ok_or_else(|| Error::Solver("iterate left the feasible region".into()))?;
            let (grad, h) = bar.derivatives(&w, t);
            let dx = newton_direction(&grad, &h)?;
            let lambda2 = -grad.dot(&dx);
            if lambda2 / 2.0 <= opts.centering {
                break;
            }
            steps += 1;
            if steps > opts.max_newton {
                return Err(Error::Solver(format!("no convergence after {steps} Newton steps (t = {t:.3e}, decrement {lambda2:.3e})")));
            }
            let lam = lambda2.max(0.0).sqrt();
            let mut alpha = if lam < 0.25 { 1.0 } else { 1.0 / (1.0 + lam) };
            let dz = bar.to_mat(&dx);
            let base = bar.value(&z, t).expect("current iterate is feasible");
            loop {
                let cand = &z + &dz * c(alpha);
                match bar.value(&cand, t) {
                    Some(v) if v <= base + 1e-12 * base.abs().max(1.0) || lam < 0.25 => {
                        z = cand;
                        break;
                    }
                    _ => alpha *= 0.5,
                }
                if alpha < 1e-16 {
                    return Err(Error::Solver("line search stalled".into()));
                }
            }
            if lam < 1e-7 {
                break;
            }
        }
        if t >= t_final {
            break;
        }
        t = (t * opts.mu).min(t_final);
    }
    let w = bar.inverses(&z).ok_or_else(|| Error::Solver("final iterate infeasible".into()))?;
    let raw: Vec<CMat> = w.iter().map(|x| x * c(1.0 / t)).collect();
    let raw_primal: f64 = raw.iter().zip(&inst.constraints).map(|(tg, a)| trace_re(&(tg * a))).sum();
    let s = raw.iter().fold(CMat::zeros(r, r), |acc, x| acc + x);
    let si = inv_sqrt(&crate::linalg::hermitian_part(&s));
    let tt: Vec<CMat> = raw.iter().map(|x| crate::linalg::hermitian_part(&(&si * x * &si))).collect();
    Ok(finish(inst, tt, z, raw_primal, steps))
}

fn finish<L>(inst: &SdpInstance<L>, t: Vec<CMat>, z: CMat, raw_primal: f64, steps: usize) -> SdpSolution {
    let r = inst.dim;
    let primal: f64 = t.iter().zip(&inst.constraints).map(|(tg, a)| trace_re(&(tg * a))).sum();
    let dual = trace_re(&z);
    let slackness = t.iter().zip(&inst.constraints).map(|(tg, a)| frob(&(tg * (&z - a)))).fold(0.0, f64::max);
    let sum = t.iter().fold(CMat::zeros(r, r), |acc, x| acc + x);
    let dual_feasibility = inst.constraints.iter().map(|a| min_eig(&(&z - a))).fold(f64::INFINITY, f64::min);
    SdpSolution {
        completeness_residual: frob(&(sum - eye(r))),
        gap: (dual - primal).abs(),
        primal,
        dual,
        slackness,
        dual_feasibility,
        projection_shift: (primal - raw_primal).abs(),
        newton_steps: steps,
        t,
        z,
    }
}

/// `A_g = E_u A^u_{g(u)}` over all `g in P(m,q,d)`, from role A's point measurements.
pub fn build_instance(field: &Field, s: &QuantumStrategy) -> Result<SdpInstance<MultiPoly>> {
    let space = PolySpace::new(field, s.m, s.d)?;
    if space.len() > MAX_SDP_CONSTRAINTS {
        return Err(Error::Guard { what: "sdp constraints", size: space.len() as u128, limit: MAX_SDP_CONSTRAINTS as u128 });
    }
    let pts: Vec<_> = points(field, s.m).collect();
    let dim = s.state.da;
    let fams = pts
        .iter()
        .map(|u| s.roles[0].points.get(u).ok_or_else(|| Error::Strategy(format!("no point measurement at {u:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let w = c(1.0 / pts.len() as f64);
    let labels: Vec<MultiPoly> = space.iter().collect();
    let constraints = labels
        .iter()
        .map(|g| {
            pts.iter().zip(&fams).fold(CMat::zeros(dim, dim), |acc, (u, fam)| match fam.get(&g.eval(field, u)) {
                Some(op) => acc + op * w,
                None => acc,
            })
        })
        .collect();
    SdpInstance::new(labels, constraints)
}

/// The four self-improvement properties of `H`, measured, against `zeta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImproveReport {
    /// Measured consistency of `G` with `A`.
    pub nu: f64,
    pub zeta: f64,
    pub completeness: BoundReport,
    pub consistency: BoundReport,
    pub self_consistency: BoundReport,
    pub boundedness: BoundReport,
    /// `min_h lambda_min(Z - E_u A^u_{h(u)})`; nonnegative up to solver tolerance.
    pub z_dominance: f64,
    pub sdp: SdpSummary,
}

#[derive(Clone, Debug)]
pub struct Improved {
    pub h: SubMeasurement<MultiPoly>,
    pub z: CMat,
    pub solution: SdpSolution,
    pub report: ImproveReport,
}

/// `zeta = 3000 m (eps^{1/32} + delta^{1/32} + (d/q)^{1/32})`.
pub fn improvement_zeta(m: usize, d: usize, q: u32, good: &Goodness) -> f64 {
    let e = constants::SELF_IMPROVE_EXP;
    constants::SELF_IMPROVE * m as f64 * (good.eps.max(0.0).powf(e) + good.delta.max(0.0).powf(e) + (d as f64 / q as f64).powf(e))
}

fn check_symmetric_projective(s: &QuantumStrategy) -> Result<()> {
    if !s.state.is_symmetric() {
        return Err(Error::NonSymmetric(s.state.swap_residual()));
    }
    if s.roles[0].points.values().any(|f| !f.is_projective() || !f.is_measurement()) {
        return Err(Error::Strategy("points measurements must be projective".into()));
    }
    Ok(())
}

/// Post-processes a polynomial-valued family to values at `u`, over all of `F_q`.
pub fn eval_at(field: &Field, fam: &SubMeasurement<MultiPoly>, u: &[Fe]) -> Result<SubMeasurement<Fe>> {
    let labels: Vec<Fe> = field.elements().collect();
    fam.post_process_onto(|g| g.eval(field, u), &labels)
}

/// `E_u sum_{a != b} <psi| A^u_a (x) F_{[f(u)=b]} |psi>`.
pub fn consistency_with_points(field: &Field, s: &QuantumStrategy, fam: &SubMeasurement<MultiPoly>) -> Result<f64> {
    let pts: Vec<_> = points(field, s.m).collect();
    let labels: Vec<Fe> = field.elements().collect();
    let evals = pts.iter().map(|u| eval_at(field, fam, u)).collect::<Result<Vec<_>>>()?;
    let afams = pts
        .iter()
        .map(|u| s.roles[0].points.get(u).ok_or_else(|| Error::Strategy(format!("no point measurement at {u:?}")))?.post_process_onto(|a| *a, &labels))
        .collect::<Result<Vec<_>>>()?;
    let w = 1.0 / pts.len() as f64;
    let pairs: Vec<WeightedPair<'_, Fe>> = afams.iter().zip(&evals).map(|(a, e)| (w, a, e)).collect();
    consistency(&pairs, &s.state)
}

fn report_for(
    field: &Field,
    s: &QuantumStrategy,
    h: &SubMeasurement<MultiPoly>,
    z: &CMat,
    inst: &SdpInstance<MultiPoly>,
    nu: f64,
    zeta: f64,
    sol: &SdpSolution,
    projective: bool,
) -> Result<ImproveReport> {
    let total = h.total();
    let completeness = s.state.expect_left(&total);
    let cons = consistency_with_points(field, s, h)?;
    let selfc = if projective { cross_distance(&[(1.0, h, h)], &s.state)? } else { strong_self_consistency(&[(1.0, h)], &s.state)? };
    let bounded = s.state.expect(z, &(eye(total.nrows()) - &total));
    let z_dominance = inst.constraints.iter().map(|a| min_eig(&(z - a))).fold(f64::INFINITY, f64::min);
    Ok(ImproveReport {
        nu,
        zeta,
        completeness: BoundReport::at_least("completeness", completeness, 1.0 - nu - zeta).with_floor(0.0),
        consistency: BoundReport::new("consistency_with_points", cons, zeta).with_cap(1.0),
        self_consistency: BoundReport::new("strong_self_consistency", selfc, zeta).with_cap(if projective { 2.0 } else { 1.0 }),
        boundedness: BoundReport::new("boundedness", bounded, zeta).with_cap(max_eig(z).max(0.0)),
        z_dominance,
        sdp: sol.summary(),
    })
}

/// `H_h = E_u A^u_{h(u)} T_h A^u_{h(u)}` from the SDP optimum, with its property report.
pub fn improve(field: &Field, s: &QuantumStrategy, g: &SubMeasurement<MultiPoly>, good: &Goodness, opts: &SdpOptions) -> Result<Improved> {
    check_symmetric_projective(s)?;
    let nu = consistency_with_points(field, s, g)?;
    let inst = build_instance(field, s)?;
    let sol = solve(&inst, opts)?;
    let pts: Vec<_> = points(field, s.m).collect();
    let w = c(1.0 / pts.len() as f64);
    let dim = inst.dim;
    let ops: Vec<CMat> = inst
        .labels
        .iter()
        .zip(&sol.t)
        .map(|(hp, th)| {
            pts.iter().fold(CMat::zeros(dim, dim), |acc, u| match s.roles[0].points[u].get(&hp.eval(field, u)) {
                Some(a) => acc + a * th * a * w,
                None => acc,
            })
        })
        .collect();
    let h = SubMeasurement::new_unchecked(inst.labels.clone(), ops)?;
    let zeta = improvement_zeta(s.m, s.d, field.q(), good);
    let report = report_for(field, s, &h, &sol.z, &inst, nu, zeta, &sol, false)?;
    Ok(Improved { h, z: sol.z.clone(), solution: sol, report })
}

/// `improve` followed by orthogonalization of `H`; the report is recomputed for the projective output.
pub fn projective_improve(field: &Field, s: &QuantumStrategy, g: &SubMeasurement<MultiPoly>, good: &Goodness, opts: &SdpOptions) -> Result<Improved> {
    let imp = improve(field, s, g, good, opts)?;
    let ortho = orthogonalize_sub(&imp.h, &s.state)?;
    let inst = build_instance(field, s)?;
    let report = report_for(field, s, &ortho.p, &imp.z, &inst, imp.report.nu, imp.report.zeta, &imp.solution, true)?;
    Ok(Improved { h: ortho.p, z: imp.z, solution: imp.solution, report })
}
