//! Measured witnesses for the commutativity lemmas and the main soundness statement.
//!
//! Every check returns a [`BoundReport`]; constants come from [`crate::bounds::constants`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::{constants, BoundReport};
use crate::error::{Error, Result, StageContext};
use crate::field::{Fe, Field};
use crate::linalg::{eye, frob, min_eig, CMat};
use crate::measure::{consistency, cross_distance, BipartiteState, SubMeasurement, WeightedPair};
use crate::pasting::{complete_pasted, paste_and_report, PastingParams, PastingReport};
use crate::poly::{points, AxisLine, MultiPoly, Point, PolySpace};
use crate::protocol::TestParams;
use crate::sdp::{consistency_with_points, eval_at, projective_improve, ImproveReport, SdpOptions};
use crate::strategy::{pass_probabilities_quantum, symmetrize, Goodness, QuantumFamilies, QuantumStrategy};

/// `||(X (x) I) psi||^2`.
fn left_norm_sq(state: &BipartiteState, x: &CMat) -> f64 {
    frob(&(x * state.matrix())).powi(2)
}

/// `sum_{a,b} ||([X_a, Y_b] (x) I) psi||^2`.
fn commutator_mass<L: Clone + PartialEq, M: Clone + PartialEq>(state: &BipartiteState, x: &SubMeasurement<L>, y: &SubMeasurement<M>) -> f64 {
    let mut total = 0.0;
    for a in &x.ops {
        for b in &y.ops {
            total += left_norm_sq(state, &(a * b - b * a));
        }
    }
    total
}

fn point_family<'a>(fam: &'a QuantumFamilies, u: &Point) -> Result<&'a SubMeasurement<Fe>> {
    fam.points.get(u).ok_or_else(|| Error::Strategy(format!("no point measurement at {u:?}")))
}

/// `E_{u,v} sum_{a,b} ||[A^u_a, A^v_b] (x) I psi||^2` against `32 gamma m`.
pub fn points_commutativity(field: &Field, s: &QuantumStrategy, good: &Goodness) -> Result<BoundReport> {
    if !(s.symmetric && s.projective) {
        return Err(Error::Strategy("points commutativity needs a symmetric projective strategy".into()));
    }
    let fams: Vec<_> = points(field, s.m).map(|u| point_family(&s.roles[0], &u)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for (i, a) in fams.iter().enumerate() {
        // the summand is symmetric in (u, v) and vanishes on the diagonal
        for b in &fams[..i] {
            total += 2.0 * commutator_mass(&s.state, a, b);
        }
    }
    let measured = total / (fams.len() * fams.len()) as f64;
    let bound = constants::POINTS_COMMUTE * good.gamma * s.m as f64;
    Ok(BoundReport::new("points_commutativity", measured, bound).with_cap(4.0))
}

/// Point measurements of the slice `x`: `u -> A^{(u,x)}`.
pub fn slice_points(field: &Field, fam: &QuantumFamilies, m_plus_1: usize, x: Fe) -> Result<BTreeMap<Point, SubMeasurement<Fe>>> {
    points(field, m_plus_1 - 1)
        .map(|u| {
            let mut ux = u.clone();
            ux.push(x);
            Ok((u, point_family(fam, &ux)?.clone()))
        })
        .collect()
}

/// The `x`-restricted strategy on `m` variables: points `A^{(u,x)}` and the axis lines
/// of the slice. Diagonal lines are not carried over.
pub fn restrict_strategy(field: &Field, s: &QuantumStrategy, x: Fe) -> Result<QuantumStrategy> {
    if s.m < 2 {
        return Err(Error::Param("restriction needs at least two variables".into()));
    }
    let m = s.m - 1;
    let restrict = |fam: &QuantumFamilies| -> Result<QuantumFamilies> {
        let pts = slice_points(field, fam, s.m, x)?;
        let mut axis = BTreeMap::new();
        for (l, g) in &fam.axis {
            if l.dir < m && l.base[m] == x {
                axis.insert(AxisLine { dir: l.dir, base: l.base[..m].to_vec() }, g.clone());
            }
        }
        Ok(QuantumFamilies { points: pts, axis, diag: BTreeMap::new() })
    };
    let roles = [restrict(&s.roles[0])?, restrict(&s.roles[1])?];
    Ok(QuantumStrategy { m, d: s.d, state: s.state.clone(), roles, symmetric: s.symmetric, projective: s.projective })
}

/// Measured hypotheses of the commutativity-of-`G` statements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GHypotheses {
    /// `E_{u,x}` consistency of `A^{u,x} (x) I` with `I (x) G^x_{[g(u)=a]}`.
    pub consistency: f64,
    /// `E_x` state distance between `G^x (x) I` and `I (x) G^x`.
    pub self_consistency: f64,
    /// `E_x <psi| (I - G^x) (x) Z^x |psi>`; `None` without certificates.
    pub boundedness: Option<f64>,
    /// `min_{x,g} lambda_min(Z^x - E_u A^{u,x}_{g(u)})`; `None` without certificates.
    pub z_dominance: Option<f64>,
    /// Largest of the measured hypotheses.
    pub zeta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GCommReport {
    pub hypotheses: GHypotheses,
    /// The boundedness hypothesis was checked against supplied `Z^x`.
    pub boundedness_verified: bool,
    /// `E_{x,y} sum_{g,h} ||[G^x_g, G^y_h] (x) I psi||^2` against `30 m (gamma^{1/4} + zeta^{1/4} + (d/q)^{1/4})`.
    pub raw: BoundReport,
    /// Evaluated version `[G^x_{[g(u)=a]}, G^y_{[h(v)=b]}]` against `48 m (gamma^{1/2} + zeta^{1/2})`.
    pub data_processed: BoundReport,
}

/// `E_u A^{u,x}_{g(u)}` for every `g`, as the slice's SDP constraint matrices.
fn averaged_points(field: &Field, pts: &BTreeMap<Point, SubMeasurement<Fe>>, m: usize, d: usize, dim: usize) -> Result<Vec<CMat>> {
    let space = PolySpace::new(field, m, d)?;
    let w = crate::linalg::c(1.0 / pts.len() as f64);
    Ok(space
        .iter()
        .map(|g| {
            pts.iter().fold(CMat::zeros(dim, dim), |acc, (u, fam)| match fam.get(&g.eval(field, u)) {
                Some(op) => acc + op * w,
                None => acc,
            })
        })
        .collect())
}

/// Commutativity of the slice families `G^x` of an `(m+1)`-variate symmetric strategy.
pub fn g_commutativity(
    field: &Field,
    s: &QuantumStrategy,
    slices: &[SubMeasurement<MultiPoly>],
    z: Option<&[CMat]>,
    good: &Goodness,
) -> Result<GCommReport> {
    let q = field.q() as usize;
    if s.m < 2 {
        return Err(Error::Param("slice families need a strategy on at least two variables".into()));
    }
    if slices.len() != q {
        return Err(Error::Param(format!("need one slice per field element, got {}", slices.len())));
    }
    if !s.state.is_symmetric() {
        return Err(Error::NonSymmetric(s.state.swap_residual()));
    }
    let m = s.m - 1;
    let state = &s.state;
    let pts: Vec<Point> = points(field, m).collect();
    let xs: Vec<Fe> = field.elements().collect();
    let labels: Vec<Fe> = xs.clone();

    // evaluated families G^x_{[g(u)=a]}, indexed [x][u]
    let evals: Vec<Vec<SubMeasurement<Fe>>> = slices
        .iter()
        .map(|g| pts.iter().map(|u| eval_at(field, g, u)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut cons = 0.0;
    for (x, row) in xs.iter().zip(&evals) {
        let sp = slice_points(field, &s.roles[0], s.m, *x)?;
        let afams: Vec<SubMeasurement<Fe>> = pts.iter().map(|u| sp[u].post_process_onto(|a| *a, &labels)).collect::<Result<_>>()?;
        let w = 1.0 / pts.len() as f64;
        let pairs: Vec<WeightedPair<'_, Fe>> = afams.iter().zip(row).map(|(a, e)| (w, a, e)).collect();
        cons += consistency(&pairs, state)? / q as f64;
    }
    let selfc = {
        let pairs: Vec<WeightedPair<'_, MultiPoly>> = slices.iter().map(|g| (1.0 / q as f64, g, g)).collect();
        cross_distance(&pairs, state)?
    };
    let (boundedness, z_dominance) = match z {
        Some(zs) => {
            if zs.len() != q {
                return Err(Error::Param(format!("need one Z per field element, got {}", zs.len())));
            }
            let mut b = 0.0;
            let mut dom = f64::INFINITY;
            for ((x, g), zx) in xs.iter().zip(slices).zip(zs) {
                b += state.expect(&(eye(g.dim) - g.total()), zx) / q as f64;
                let sp = slice_points(field, &s.roles[0], s.m, *x)?;
                for a in averaged_points(field, &sp, m, s.d, state.da)? {
                    dom = dom.min(min_eig(&(zx - a)));
                }
            }
            (Some(b), Some(dom))
        }
        None => (None, None),
    };
    let zeta = cons.max(selfc).max(boundedness.unwrap_or(0.0));
    let hyp = GHypotheses { consistency: cons, self_consistency: selfc, boundedness, z_dominance, zeta };

    let mut raw = 0.0;
    for (i, gx) in slices.iter().enumerate() {
        for gy in &slices[..i] {
            raw += 2.0 * commutator_mass(state, gx, gy);
        }
    }
    raw /= (q * q) as f64;

    let flat: Vec<&SubMeasurement<Fe>> = evals.iter().flatten().collect();
    let mut dp = 0.0;
    for (i, a) in flat.iter().enumerate() {
        for b in &flat[..i] {
            dp += 2.0 * commutator_mass(state, a, b);
        }
    }
    dp /= (flat.len() * flat.len()) as f64;

    let mf = m as f64;
    let dq = s.d as f64 / q as f64;
    let raw_bound = constants::G_COMMUTE * mf * (good.gamma.max(0.0).powf(0.25) + zeta.powf(0.25) + dq.powf(0.25));
    let dp_bound = constants::G_COMMUTE_DATA * mf * (good.gamma.max(0.0).sqrt() + zeta.sqrt());
    Ok(GCommReport {
        hypotheses: hyp,
        boundedness_verified: z.is_some(),
        raw: BoundReport::new("g_commutativity", raw, raw_bound).with_cap(4.0),
        data_processed: BoundReport::new("g_commutativity_evaluated", dp, dp_bound).with_cap(4.0),
    })
}

/// `nu = 100000 k^2 m^4 (eps^{1/40000} + (d/q)^{1/40000} + exp(-k/(2560000 m^2)))`.
pub fn main_theorem_nu(m: usize, d: usize, q: u32, k: usize, eps: f64) -> f64 {
    let (mf, kf) = (m as f64, k as f64);
    let e = constants::MAIN_EXP;
    constants::MAIN
        * kf
        * kf
        * mf.powi(4)
        * (eps.max(0.0).powf(e) + (d as f64 / q as f64).powf(e) + (-kf / (constants::MAIN_TAIL * mf * mf)).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainReport {
    pub k: usize,
    /// Overall failure probability of the test.
    pub eps: f64,
    pub nu: f64,
    /// `nu >= 1`: every consistency bound below holds trivially.
    pub vacuous: bool,
    /// `A^{A,u}_a (x) I` against `I (x) G^B_{[g(u)=a]}`.
    pub consistency_a: BoundReport,
    /// `I (x) A^{B,u}_a` against `G^A_{[g(u)=a]} (x) I`.
    pub consistency_b: BoundReport,
    /// `G^A_g (x) I` against `I (x) G^B_g`.
    pub self_consistency: BoundReport,
}

/// Measured consistency of candidate measurements `G^A, G^B` with the points, and with
/// each other, against the main theorem's `nu`.
pub fn main_theorem_witness(
    field: &Field,
    s: &QuantumStrategy,
    ga: &SubMeasurement<MultiPoly>,
    gb: &SubMeasurement<MultiPoly>,
    k: usize,
    eps: f64,
) -> Result<MainReport> {
    if k < s.m * s.d {
        return Err(Error::Param(format!("k = {k} is below md = {}", s.m * s.d)));
    }
    let nu = main_theorem_nu(s.m, s.d, field.q(), k, eps);
    let ca = consistency_with_points(field, s, gb)?;
    let pts: Vec<_> = points(field, s.m).collect();
    let labels: Vec<Fe> = field.elements().collect();
    let evals: Vec<_> = pts.iter().map(|u| eval_at(field, ga, u)).collect::<Result<_>>()?;
    let bfams: Vec<_> = pts
        .iter()
        .map(|u| point_family(&s.roles[1], u)?.post_process_onto(|a| *a, &labels))
        .collect::<Result<_>>()?;
    let w = 1.0 / pts.len() as f64;
    let pairs: Vec<WeightedPair<'_, Fe>> = evals.iter().zip(&bfams).map(|(e, b)| (w, e, b)).collect();
    let cb = consistency(&pairs, &s.state)?;
    let mut union = ga.outcomes.clone();
    for g in &gb.outcomes {
        if !union.contains(g) {
            union.push(g.clone());
        }
    }
    let ga2 = ga.post_process_onto(|g| g.clone(), &union)?;
    let gb2 = gb.post_process_onto(|g| g.clone(), &union)?;
    let cs = consistency(&[(1.0, &ga2, &gb2)], &s.state)?;
    Ok(MainReport {
        k,
        eps,
        nu,
        vacuous: nu >= 1.0,
        consistency_a: BoundReport::new("main_consistency_a", ca, nu).with_cap(1.0),
        consistency_b: BoundReport::new("main_consistency_b", cb, nu).with_cap(1.0),
        self_consistency: BoundReport::new("main_self_consistency", cs, nu).with_cap(1.0),
    })
}

fn uni_to_multi(f: &crate::poly::UniPoly, d: usize) -> Result<MultiPoly> {
    MultiPoly::from_coeffs(1, d, f.with_bound(d)?.coeffs)
}

/// Base case `m = 1`: the line measurement of `role` on the only axis-parallel line,
/// relabelled as univariate polynomials.
pub fn base_case(s: &QuantumStrategy, role: usize) -> Result<SubMeasurement<MultiPoly>> {
    if s.m != 1 {
        return Err(Error::Param(format!("base case needs m = 1, got {}", s.m)));
    }
    let line = AxisLine { dir: 0, base: vec![Fe(0)] };
    let fam = s.roles[role].axis.get(&line).ok_or_else(|| Error::Strategy("no measurement on the axis line".into()))?;
    let outcomes = fam.outcomes.iter().map(|f| uni_to_multi(f, s.d)).collect::<Result<Vec<_>>>()?;
    SubMeasurement::new_unchecked(outcomes, fam.ops.clone())
}

/// Settings of the candidate pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Parameter of the main theorem.
    pub k: usize,
    pub pasting: PastingParams,
    pub sdp: SdpOptions,
}

/// Per-slice record of the induction step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub x: u32,
    /// Consistency of the slice's base-case measurement with its points.
    pub base_consistency: f64,
    pub improve: ImproveReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub m: usize,
    pub q: u32,
    pub d: usize,
    pub goodness: Goodness,
    /// The witness was measured on the symmetrized strategy.
    pub symmetrized: bool,
    pub points_commutativity: Option<BoundReport>,
    pub slices: Vec<SliceReport>,
    pub g_commutativity: Option<GCommReport>,
    pub pasting: Option<PastingReport>,
    pub main: MainReport,
}

/// Candidate `G^A, G^B` and the measured report.
///
/// For `m = 1` the candidates are the two roles' line measurements. For `m = 2` the
/// strategy is symmetrized if needed; each slice's base-case measurement is improved to a
/// projective one, the slices are pasted, and the result is completed with `h* = 0`.
/// Larger `m` would need the diagonal lines of each slice and is rejected.
pub fn soundness_report(field: &Field, s: &QuantumStrategy, params: &PipelineParams) -> Result<(SubMeasurement<MultiPoly>, SubMeasurement<MultiPoly>, SoundnessReport)> {
    let tp = TestParams::new(s.m, s.d);
    let good = pass_probabilities_quantum(field, &tp, s).stage("goodness")?;
    let eps = 1.0 - good.pass_probability(&tp);
    match s.m {
        1 => {
            let ga = base_case(s, 0).stage("base case")?;
            let gb = base_case(s, 1).stage("base case")?;
            let main = main_theorem_witness(field, s, &ga, &gb, params.k, eps).stage("witness")?;
            let pc = if s.symmetric && s.projective { Some(points_commutativity(field, s, &good).stage("points commutativity")?) } else { None };
            let report = SoundnessReport {
                m: s.m,
                q: field.q(),
                d: s.d,
                goodness: good,
                symmetrized: false,
                points_commutativity: pc,
                slices: Vec::new(),
                g_commutativity: None,
                pasting: None,
                main,
            };
            Ok((ga, gb, report))
        }
        2 => {
            let symmetrized = !s.symmetric;
            let sym = if symmetrized { symmetrize(s).stage("symmetrize")? } else { s.clone() };
            let good = if symmetrized { pass_probabilities_quantum(field, &tp, &sym).stage("goodness")? } else { good };
            let eps = 1.0 - good.pass_probability(&tp);
            let mut slices = Vec::new();
            let mut zs = Vec::new();
            let mut reports = Vec::new();
            for x in field.elements() {
                let sx = restrict_strategy(field, &sym, x).stage("restrict")?;
                let g0 = base_case(&sx, 1).stage("base case")?;
                let base_consistency = consistency_with_points(field, &sx, &g0).stage("base case")?;
                let gx = Goodness { eps: base_consistency, ..good };
                let imp = projective_improve(field, &sx, &g0, &gx, &params.sdp).stage("improve")?;
                reports.push(SliceReport { x: x.0, base_consistency, improve: imp.report.clone() });
                slices.push(imp.h);
                zs.push(imp.z);
            }
            let pc = if sym.projective { Some(points_commutativity(field, &sym, &good).stage("points commutativity")?) } else { None };
            let zeta = reports.iter().map(|r| r.improve.zeta).fold(0.0, f64::max);
            let gc = g_commutativity(field, &sym, &slices, Some(&zs), &good).stage("g commutativity")?;
            let (h, prep) = paste_and_report(field, &sym, &slices, &params.pasting, &good, zeta).stage("paste")?;
            let g = complete_pasted(&h, sym.m, sym.d);
            let main = main_theorem_witness(field, &sym, &g, &g, params.k, eps).stage("witness")?;
            let report = SoundnessReport {
                m: s.m,
                q: field.q(),
                d: s.d,
                goodness: good,
                symmetrized,
                points_commutativity: pc,
                slices: reports,
                g_commutativity: Some(gc),
                pasting: Some(prep),
                main,
            };
            Ok((g.clone(), g, report))
        }
        m => Err(Error::Param(format!("the candidate pipeline covers m = 1 and m = 2, got m = {m}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::strategy::{embed_classical, ClassicalStrategy};
    use num_rational::Ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn honest(field: &Field, m: usize, d: usize, seed: u64) -> (MultiPoly, QuantumStrategy) {
        let space = PolySpace::new(field, m, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = space.get(rng.random_range(0..space.len()));
        let s = embed_classical(&[(Ratio::from_integer(1), ClassicalStrategy::honest(field, &g).unwrap())]).unwrap();
        (g, s)
    }

    /// Classical mixture of honest and point-corrupted strategies.
    fn noisy(field: &Field, m: usize, d: usize, seed: u64) -> QuantumStrategy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = PolySpace::new(field, m, d).unwrap();
        let mix: Vec<_> = (0..3)
            .map(|i| {
                let g = space.get(rng.random_range(0..space.len()));
                let mut s = ClassicalStrategy::honest(field, &g).unwrap();
                if i > 0 {
                    let pts: Vec<Point> = s.roles[0].points.keys().cloned().collect();
                    let u = &pts[rng.random_range(0..pts.len())];
                    let v = Fe(rng.random_range(0..field.q()));
                    for r in 0..2 {
                        s.roles[r].points.insert(u.clone(), v);
                    }
                }
                (Ratio::new(1, 3), s)
            })
            .collect();
        embed_classical(&mix).unwrap()
    }

    #[test]
    fn honest_points_commute() {
        let f = Field::of_order(3).unwrap();
        let (_, s) = honest(&f, 2, 1, 1);
        let good = pass_probabilities_quantum(&f, &TestParams::new(2, 1), &s).unwrap();
        assert!(good.gamma.abs() < 1e-12);
        let r = points_commutativity(&f, &s, &good).unwrap();
        assert!(r.measured.abs() < 1e-12);
    }

    #[test]
    fn noncommuting_points_measured() {
        // A^0 in the computational basis, A^1 in the Hadamard basis, on an EPR pair
        let f = Field::of_order(2).unwrap();
        let (_, mut s) = honest(&f, 1, 1, 2);
        s.state = BipartiteState::max_entangled(2);
        let comp = vec![CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![c(1.0), c(0.0)])), CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![c(0.0), c(1.0)]))];
        let plus = CMat::from_fn(2, 2, |_, _| c(0.5));
        let minus = CMat::from_fn(2, 2, |i, j| if i == j { c(0.5) } else { c(-0.5) });
        for r in 0..2 {
            s.roles[r].points.insert(vec![Fe(0)], SubMeasurement::new(f.elements().collect(), comp.clone()).unwrap());
            s.roles[r].points.insert(vec![Fe(1)], SubMeasurement::new(f.elements().collect(), vec![plus.clone(), minus.clone()]).unwrap());
        }
        let r = points_commutativity(&f, &s, &Goodness { eps: 0.0, delta: 0.0, gamma: 0.0 }).unwrap();
        // each of the 4 commutators has ||C||_F^2 = 1/2, so tr(rho C^dag C) = 1/4; the two
        // ordered pairs of distinct points carry mass 1 each, out of 4 ordered pairs
        assert!((r.measured - 0.5).abs() < 1e-12, "{}", r.measured);
        assert!(r.margin < 0.0);
    }

    #[test]
    fn perturbed_points_commutativity_within_bound() {
        let f = Field::of_order(3).unwrap();
        let tp = TestParams::new(2, 1);
        for seed in 0..5 {
            let s = noisy(&f, 2, 1, seed);
            let s = symmetrize(&s).unwrap();
            let good = pass_probabilities_quantum(&f, &tp, &s).unwrap();
            let r = points_commutativity(&f, &s, &good).unwrap();
            assert!(r.holds(1e-7), "{r:?}");
        }
    }

    #[test]
    fn honest_slices_commute() {
        let f = Field::of_order(3).unwrap();
        let (g, s) = honest(&f, 2, 1, 4);
        let slices: Vec<_> = f.elements().map(|x| SubMeasurement::new(vec![g.slice_last(&f, x)], vec![eye(1)]).unwrap()).collect();
        let good = Goodness { eps: 0.0, delta: 0.0, gamma: 0.0 };
        let z: Vec<CMat> = f.elements().map(|_| eye(1)).collect();
        let r = g_commutativity(&f, &s, &slices, Some(&z), &good).unwrap();
        assert!(r.raw.measured.abs() < 1e-12);
        assert!(r.data_processed.measured.abs() < 1e-12);
        assert!(r.hypotheses.consistency.abs() < 1e-12);
        assert!(r.hypotheses.boundedness.unwrap().abs() < 1e-12);
        assert!(r.hypotheses.z_dominance.unwrap() >= -1e-12);
        let r2 = g_commutativity(&f, &s, &slices, None, &good).unwrap();
        assert!(!r2.boundedness_verified && r2.hypotheses.boundedness.is_none());
    }

    #[test]
    fn nu_is_vacuous_at_desk_scale() {
        for (m, k) in [(1, 1), (2, 2), (3, 10)] {
            assert!(main_theorem_nu(m, 1, 5, k, 0.0) >= 1.0);
            assert!(main_theorem_nu(m, 1, 5, k, 1e-12) >= 1.0);
        }
    }

    #[test]
    fn honest_main_witness_is_zero() {
        let f = Field::of_order(3).unwrap();
        let (g, s) = honest(&f, 2, 1, 5);
        let gm = SubMeasurement::new(vec![g], vec![eye(1)]).unwrap();
        let r = main_theorem_witness(&f, &s, &gm, &gm, 2, 0.0).unwrap();
        assert!(r.vacuous);
        assert!(r.consistency_a.measured.abs() < 1e-12);
        assert!(r.consistency_b.measured.abs() < 1e-12);
        assert!(r.self_consistency.measured.abs() < 1e-12);
        assert!(main_theorem_witness(&f, &s, &gm, &gm, 1, 0.0).is_err());
    }

    #[test]
    fn base_case_consistency_is_axis_failure() {
        let f = Field::of_order(5).unwrap();
        let tp = TestParams::new(1, 1);
        for seed in 0..4 {
            let s = symmetrize(&noisy(&f, 1, 1, seed)).unwrap();
            let good = pass_probabilities_quantum(&f, &tp, &s).unwrap();
            let g = base_case(&s, 1).unwrap();
            let cons = consistency_with_points(&f, &s, &g).unwrap();
            assert!((cons - good.eps).abs() < 1e-12, "{cons} vs {}", good.eps);
        }
    }

    #[test]
    fn pipeline_m1_honest() {
        let f = Field::of_order(5).unwrap();
        let (_, s) = honest(&f, 1, 1, 6);
        let p = PipelineParams { k: 1, pasting: PastingParams::new(2), sdp: SdpOptions::default() };
        let (_, _, r) = soundness_report(&f, &s, &p).unwrap();
        assert!(r.main.vacuous);
        assert!(r.main.consistency_a.measured.abs() < 1e-12);
        assert!(r.main.self_consistency.measured.abs() < 1e-12);
    }

    #[test]
    fn pipeline_m2_honest_recovers_polynomial() {
        let f = Field::of_order(3).unwrap();
        let (g, s) = honest(&f, 2, 1, 7);
        let p = PipelineParams { k: 2, pasting: PastingParams::new(2), sdp: SdpOptions::default() };
        let (ga, _, r) = soundness_report(&f, &s, &p).unwrap();
        assert!(!r.symmetrized);
        let op = ga.get(&g).unwrap();
        assert!(frob(&(op - eye(1))) < 1e-6, "{op}");
        assert!(r.main.consistency_a.measured < 1e-6);
        assert!(r.g_commutativity.as_ref().unwrap().raw.measured < 1e-9);
    }

    #[test]
    fn pipeline_rejects_large_m() {
        let f = Field::of_order(2).unwrap();
        let (_, s) = honest(&f, 3, 1, 8);
        let p = PipelineParams { k: 3, pasting: PastingParams::new(2), sdp: SdpOptions::default() };
        let e = soundness_report(&f, &s, &p).unwrap_err();
        assert!(matches!(e, Error::Param(_)));
    }

    #[test]
    fn stage_attribution() {
        let f = Field::of_order(3).unwrap();
        let (_, mut s) = honest(&f, 2, 1, 9);
        // a non-projective point measurement makes the improvement stage fail
        let u = vec![Fe(0), Fe(0)];
        let fam = s.roles[0].points[&u].clone();
        let ops = vec![eye(1) * c(0.5), eye(1) * c(0.5), eye(1) * c(0.0)];
        let half = SubMeasurement::new(f.elements().collect(), ops).unwrap();
        assert_eq!(fam.dim, 1);
        for r in 0..2 {
            s.roles[r].points.insert(u.clone(), half.clone());
        }
        s.projective = false;
        let p = PipelineParams { k: 2, pasting: PastingParams::new(2), sdp: SdpOptions::default() };
        match soundness_report(&f, &s, &p).unwrap_err() {
            Error::Stage { stage, .. } => assert_eq!(stage, "improve"),
            e => panic!("unexpected {e}"),
        }
    }
}
