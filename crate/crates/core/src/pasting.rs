//! Pasting parallel slice measurements into a measurement over one more variable.
//!
//! Slices are indexed by the value `x` of the new (last) coordinate. Each `G^x` is a
//! projective sub-measurement over `P(m,q,d)`; its completion `Ĝ^x` adds `Bot`.
//! For coordinates `x_1..x_k` the sandwich `Ĥ = Ĝ^{x_1}_{g_1} ⋯ Ĝ^{x_k}_{g_k} ⋯ Ĝ^{x_1}_{g_1}`
//! equals `M M^†` with `M = Ĝ^{x_1}_{g_1} ⋯ Ĝ^{x_k}_{g_k}`, which is how it is computed.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::error::{guard, Error, Result};
use crate::field::{Fe, Field};
use crate::linalg::{eye, frob, max_eig, min_eig, spectral_map, zeros, CMat};
use crate::measure::{BipartiteState, Outcome, SubMeasurement};
use crate::poly::{interpolate_parallel, MultiPoly, PolySpace};
use crate::sdp::consistency_with_points;
use crate::strategy::{Goodness, QuantumStrategy};

pub type Rational = Ratio<i64>;

/// Coordinate tuples enumerated exactly up to this many; sampled beyond.
pub const MAX_EXACT_TUPLES: u128 = 100_000;
/// Operators with Frobenius norm below this are pruned from the sandwich search.
pub const PRUNE_TOL: f64 = 1e-13;

/// Which distribution the slice coordinates `x_1..x_k` are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordRegime {
    /// Pairwise distinct coordinates.
    Distinct,
    /// Independent uniform coordinates. Colliding coordinates pin fewer than `d+1`
    /// slices, so the result can exceed `I`; kept for comparison with `Distinct`.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PastingParams {
    pub k: usize,
    pub regime: CoordRegime,
    /// Sample count when the tuple set is too large to enumerate.
    pub samples: usize,
    pub seed: u64,
}

impl PastingParams {
    pub fn new(k: usize) -> Self {
        PastingParams { k, regime: CoordRegime::Distinct, samples: 2000, seed: 0 }
    }
}

/// Hamming weight of a type string.
pub fn weight(tau: &[bool]) -> usize {
    tau.iter().filter(|&&b| b).count()
}

/// Type of an outcome tuple: `true` where the entry is not `Bot`.
pub fn type_of<L>(gs: &[Outcome<L>]) -> Vec<bool> {
    gs.iter().map(|g| matches!(g, Outcome::Val(_))).collect()
}

/// All ordered `k`-tuples of pairwise distinct field elements, lexicographic.
pub fn distinct_tuples(field: &Field, k: usize) -> Result<Vec<Vec<Fe>>> {
    let q = field.q() as usize;
    if k > q {
        return Err(Error::Param(format!("k = {k} exceeds q = {q}")));
    }
    guard("distinct tuples", falling(q as u128, k as u128), MAX_EXACT_TUPLES)?;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(q: usize, k: usize, cur: &mut Vec<Fe>, out: &mut Vec<Vec<Fe>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in 0..q as u32 {
            if !cur.contains(&Fe(x)) {
                cur.push(Fe(x));
                rec(q, k, cur, out);
                cur.pop();
            }
        }
    }
    rec(q, k, &mut cur, &mut out);
    Ok(out)
}

fn falling(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n.saturating_sub(i)))
}

/// Exact total variation distance between uniform `F_q^k` and `Distinct_k`, with the
/// two bounds `k(k-1)/(2q)` and `k^2/q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TvCheck {
    pub exact: Rational,
    pub pair_bound: Rational,
    pub square_bound: Rational,
}

impl TvCheck {
    pub fn holds(&self) -> bool {
        self.exact <= self.pair_bound && self.pair_bound <= self.square_bound
    }
}

/// The distance equals the collision probability `1 - q^{(k)}/q^k`.
pub fn tv_distance_bound_check(q: u32, k: usize) -> Result<TvCheck> {
    if k as u64 > q as u64 {
        return Err(Error::Param(format!("k = {k} exceeds q = {q}")));
    }
    let total = crate::error::sat_pow(q as u128, k as u128);
    guard("q^k", total, i64::MAX as u128)?;
    let distinct = falling(q as u128, k as u128);
    let (k, q) = (k as i64, q as i64);
    Ok(TvCheck {
        exact: Rational::new((total - distinct) as i64, total as i64),
        pair_bound: Rational::new(k * (k - 1), 2 * q),
        square_bound: Rational::new(k * k, q),
    })
}

/// Completions `Ĝ^x` of the slice families, indexed by `x`; checks projectivity.
pub fn complete_slices(slices: &[SubMeasurement<MultiPoly>]) -> Result<Vec<SubMeasurement<Outcome<MultiPoly>>>> {
    slices
        .iter()
        .enumerate()
        .map(|(x, g)| {
            if !g.is_projective() {
                return Err(Error::Measurement(format!("slice {x} is not projective")));
            }
            Ok(g.complete())
        })
        .collect()
}

/// One sandwich operator `Ĥ^{x_1..x_k}_{g_1..g_k}`.
pub fn sandwich(ghat: &[SubMeasurement<Outcome<MultiPoly>>], xs: &[Fe], gs: &[Outcome<MultiPoly>]) -> Result<CMat> {
    if xs.len() != gs.len() {
        return Err(Error::Param("coordinate and outcome tuples differ in length".into()));
    }
    let n = ghat.first().map_or(0, |g| g.dim);
    let mut mm = eye(n);
    for (x, g) in xs.iter().zip(gs) {
        let fam = slice_at(ghat, *x)?;
        let op = fam.get(g).ok_or_else(|| Error::Measurement("outcome not in slice family".into()))?;
        mm = mm * op;
    }
    Ok(&mm * mm.adjoint())
}

fn slice_at<L>(fams: &[SubMeasurement<L>], x: Fe) -> Result<&SubMeasurement<L>> {
    fams.get(x.0 as usize).ok_or_else(|| Error::Param(format!("no slice at x = {}", x.0)))
}

/// All nonzero sandwich operators for `xs`, found by depth-first search over outcome
/// tuples; a prefix whose product vanishes is not extended.
pub fn sandwich_terms(ghat: &[SubMeasurement<Outcome<MultiPoly>>], xs: &[Fe]) -> Result<Vec<(Vec<Outcome<MultiPoly>>, CMat)>> {
    let fams: Vec<_> = xs.iter().map(|&x| slice_at(ghat, x)).collect::<Result<_>>()?;
    let n = fams.first().map_or(0, |g| g.dim);
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), eye(n))];
    while let Some((gs, mm)) = stack.pop() {
        let i = gs.len();
        if i == fams.len() {
            let h = &mm * mm.adjoint();
            out.push((gs, h));
            continue;
        }
        for (g, op) in fams[i].outcomes.iter().zip(&fams[i].ops).rev() {
            let next = &mm * op;
            if frob(&next) > PRUNE_TOL {
                let mut gs2 = gs.clone();
                gs2.push(g.clone());
                stack.push((gs2, next));
            }
        }
    }
    Ok(out)
}

/// `|| sum over outcome tuples of Ĥ - I ||_F`.
pub fn telescoping_residual(ghat: &[SubMeasurement<Outcome<MultiPoly>>], xs: &[Fe]) -> Result<f64> {
    let terms = sandwich_terms(ghat, xs)?;
    let n = ghat.first().map_or(0, |g| g.dim);
    let sum = terms.iter().fold(zeros(n), |acc, (_, h)| acc + h);
    Ok(frob(&(sum - eye(n))))
}

/// Largest `|| sum_{g_k} Ĥ^{x_1..x_k}_{g_1..g_k} - Ĥ^{x_1..x_{k-1}}_{g_1..g_{k-1}} ||_F`.
pub fn marginal_residual(ghat: &[SubMeasurement<Outcome<MultiPoly>>], xs: &[Fe]) -> Result<f64> {
    let Some((_, prefix)) = xs.split_last() else {
        return Ok(0.0);
    };
    let full = sandwich_terms(ghat, xs)?;
    let short = sandwich_terms(ghat, prefix)?;
    let n = ghat.first().map_or(0, |g| g.dim);
    let mut worst: f64 = 0.0;
    for (gs, h) in &short {
        let marg = full.iter().filter(|(g2, _)| g2[..prefix.len()] == gs[..]).fold(zeros(n), |acc, (_, o)| acc + o);
        worst = worst.max(frob(&(marg - h)));
    }
    // prefixes absent from `short` have zero sandwich; their extensions must vanish too
    for (g2, o) in &full {
        if !short.iter().any(|(gs, _)| g2[..prefix.len()] == gs[..]) {
            worst = worst.max(frob(o));
        }
    }
    Ok(worst)
}

/// Adds `op` to the entry for `h`, keeping labels unique.
fn accumulate(acc: &mut Vec<(MultiPoly, CMat)>, h: MultiPoly, op: CMat) {
    match acc.iter_mut().find(|(g, _)| *g == h) {
        Some((_, a)) => *a += op,
        None => acc.push((h, op)),
    }
}

/// `H^{x_1..x_k}_h = sum_{w : |w| >= d+1} Ĥ_{h_w}`, returned as `(h, operator)` pairs.
///
/// A tuple of type `w` with `|w| >= d+1` contributes to every `h` whose restrictions
/// match its non-`Bot` entries. With `d+1` distinct nodes among them that `h` is the
/// interpolant; with fewer (repeated coordinates) every consistent `h` is enumerated.
pub fn pasted_for_coords(
    field: &Field,
    ghat: &[SubMeasurement<Outcome<MultiPoly>>],
    xs: &[Fe],
    d: usize,
) -> Result<Vec<(MultiPoly, CMat)>> {
    let mut acc: Vec<(MultiPoly, CMat)> = Vec::new();
    for (gs, op) in sandwich_terms(ghat, xs)? {
        let known: Vec<(Fe, &MultiPoly)> = xs
            .iter()
            .zip(&gs)
            .filter_map(|(x, g)| match g {
                Outcome::Val(p) => Some((*x, p)),
                Outcome::Bot => None,
            })
            .collect();
        if known.len() < d + 1 {
            continue;
        }
        let mut nodes: Vec<(Fe, MultiPoly)> = Vec::new();
        for (x, p) in &known {
            if !nodes.iter().any(|(y, _)| y == x) {
                nodes.push((*x, (*p).clone()));
            }
        }
        let consistent = |h: &MultiPoly| known.iter().all(|(x, p)| h.slice_last(field, *x) == **p);
        if nodes.len() >= d + 1 {
            nodes.truncate(d + 1);
            let h = interpolate_parallel(field, &nodes, d)?;
            if consistent(&h) {
                accumulate(&mut acc, h, op);
            }
        } else {
            let m = known[0].1.m;
            let space = PolySpace::new(field, m + 1, d)?;
            for h in space.iter().filter(|h| consistent(h)) {
                accumulate(&mut acc, h, op.clone());
            }
        }
    }
    Ok(acc)
}

/// Coordinate tuples and weights for the averaging step.
pub fn coordinate_average(field: &Field, params: &PastingParams) -> Result<Vec<(f64, Vec<Fe>)>> {
    let q = field.q() as usize;
    let k = params.k;
    if k > q && params.regime == CoordRegime::Distinct {
        return Err(Error::Param(format!("k = {k} exceeds q = {q}")));
    }
    let count = match params.regime {
        CoordRegime::Distinct => falling(q as u128, k as u128),
        CoordRegime::Uniform => crate::error::sat_pow(q as u128, k as u128),
    };
    if count <= MAX_EXACT_TUPLES {
        let tuples = match params.regime {
            CoordRegime::Distinct => distinct_tuples(field, k)?,
            CoordRegime::Uniform => (0..count as usize)
                .map(|mut n| {
                    let mut t = vec![Fe(0); k];
                    for x in t.iter_mut().rev() {
                        *x = Fe((n % q) as u32);
                        n /= q;
                    }
                    t
                })
                .collect(),
        };
        let w = 1.0 / tuples.len() as f64;
        return Ok(tuples.into_iter().map(|t| (w, t)).collect());
    }
    if params.samples == 0 {
        return Err(Error::Param("sampling needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let w = 1.0 / params.samples as f64;
    Ok((0..params.samples)
        .map(|_| {
            let t = match params.regime {
                CoordRegime::Distinct => {
                    let mut pool: Vec<u32> = (0..q as u32).collect();
                    (0..k)
                        .map(|i| {
                            let j = rng.random_range(i..q);
                            pool.swap(i, j);
                            Fe(pool[i])
                        })
                        .collect()
                }
                CoordRegime::Uniform => (0..k).map(|_| Fe(rng.random_range(0..q as u32))).collect(),
            };
            (w, t)
        })
        .collect())
}

/// `H_h = E_{x_1..x_k} H^{x_1..x_k}_h`, a sub-measurement over `P(m+1,q,d)`.
/// Only outcomes with nonzero operators are listed, ordered by polynomial index.
pub fn pasted_measurement(
    field: &Field,
    slices: &[SubMeasurement<MultiPoly>],
    d: usize,
    params: &PastingParams,
) -> Result<SubMeasurement<MultiPoly>> {
    if slices.len() != field.q() as usize {
        return Err(Error::Param(format!("need one slice per field element, got {}", slices.len())));
    }
    if params.k < d + 1 {
        return Err(Error::Param(format!("k = {} is below d + 1 = {}", params.k, d + 1)));
    }
    let ghat = complete_slices(slices)?;
    let mut acc: Vec<(MultiPoly, CMat)> = Vec::new();
    for (w, xs) in coordinate_average(field, params)? {
        for (h, op) in pasted_for_coords(field, &ghat, &xs, d)? {
            accumulate(&mut acc, h, op * crate::linalg::c(w));
        }
    }
    let key = |h: &MultiPoly| h.coeffs.iter().rev().fold(0u128, |a, c| a * field.q() as u128 + c.0 as u128);
    acc.sort_by_key(|(h, _)| key(h));
    let (outcomes, ops) = acc.into_iter().unzip();
    SubMeasurement::new_unchecked(outcomes, ops)
}

/// Completion onto a measurement: the deficit `I - sum H` goes to `h* = 0`.
pub fn complete_pasted(h: &SubMeasurement<MultiPoly>, m_plus_1: usize, d: usize) -> SubMeasurement<MultiPoly> {
    let star = MultiPoly::zero(m_plus_1, d);
    let deficit = eye(h.dim) - h.total();
    let mut out = h.clone();
    match out.outcomes.iter().position(|g| *g == star) {
        Some(i) => out.ops[i] += deficit,
        None => {
            out.outcomes.insert(0, star);
            out.ops.insert(0, deficit);
        }
    }
    out
}

/// First construction on exactly `d+1` coordinates: `G^{x_1}_{h|x_1} ⋯ G^{x_{d+1}}_{h|x_{d+1}} ⋯ G^{x_1}_{h|x_1}`.
/// Hosted for experiments; no guarantees are attached to it.
pub fn first_construction(
    field: &Field,
    slices: &[SubMeasurement<MultiPoly>],
    xs: &[Fe],
    d: usize,
) -> Result<SubMeasurement<MultiPoly>> {
    if xs.len() != d + 1 {
        return Err(Error::Param(format!("need {} coordinates, got {}", d + 1, xs.len())));
    }
    let fams: Vec<_> = xs.iter().map(|&x| slice_at(slices, x)).collect::<Result<_>>()?;
    let n = fams.first().map_or(0, |g| g.dim);
    let mut acc: Vec<(MultiPoly, CMat)> = Vec::new();
    let mut stack: Vec<(Vec<(Fe, MultiPoly)>, CMat)> = vec![(Vec::new(), eye(n))];
    while let Some((nodes, mm)) = stack.pop() {
        let i = nodes.len();
        if i == fams.len() {
            let h = interpolate_parallel(field, &nodes, d)?;
            accumulate(&mut acc, h, &mm * mm.adjoint());
            continue;
        }
        for (g, op) in fams[i].outcomes.iter().zip(&fams[i].ops) {
            let next = &mm * op;
            if frob(&next) > PRUNE_TOL {
                let mut nodes2 = nodes.clone();
                nodes2.push((xs[i], g.clone()));
                stack.push((nodes2, next));
            }
        }
    }
    let (outcomes, ops) = acc.into_iter().unzip();
    SubMeasurement::new_unchecked(outcomes, ops)
}

/// `P[Bin(k, p) >= d+1]`.
pub fn binomial_tail(p: f64, k: usize, d: usize) -> f64 {
    let mut coef = 1.0;
    let mut sum = 0.0;
    for r in 0..=k {
        if r > 0 {
            coef *= (k - r + 1) as f64 / r as f64;
        }
        if r > d {
            sum += coef * p.powi(r as i32) * (1.0 - p).powi((k - r) as i32);
        }
    }
    sum
}

/// `F(X) = sum_{r=d+1}^k C(k,r) X^r (I-X)^{k-r}` through the eigendecomposition of `X`.
pub fn binomial_matrix_f(x: &CMat, k: usize, d: usize) -> Result<CMat> {
    let lo = min_eig(x);
    let hi = max_eig(x);
    if lo < -1e-9 || hi > 1.0 + 1e-9 {
        return Err(Error::Param(format!("spectrum [{lo:.3e}, {hi:.3e}] outside [0, 1]")));
    }
    Ok(spectral_map(x, |l| binomial_tail(l.clamp(0.0, 1.0), k, d)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernoffReport {
    pub kappa: f64,
    pub theta: f64,
    /// `<psi| F(X) (x) I |psi>`.
    pub value: f64,
    pub bound: BoundReport,
}

/// Both sides of `<F(X) (x) I> >= 1 - kappa/(1-theta) - exp(-theta^2 k/2)`, with
/// `kappa = 1 - <X (x) I>`.
pub fn chernoff_completeness_check(x: &CMat, psi: &BipartiteState, k: usize, d: usize, theta: f64) -> Result<ChernoffReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Param(format!("theta = {theta} outside (0, 1)")));
    }
    if (k as f64) < 2.0 * d as f64 / theta {
        return Err(Error::Param(format!("k = {k} is below 2d/theta = {}", 2.0 * d as f64 / theta)));
    }
    let f = binomial_matrix_f(x, k, d)?;
    let kappa = 1.0 - psi.expect_left(x);
    let value = psi.expect_left(&f);
    let rhs = 1.0 - kappa / (1.0 - theta) - (-theta * theta * k as f64 / 2.0).exp();
    Ok(ChernoffReport { kappa, theta, value, bound: BoundReport::at_least("chernoff_completeness", value, rhs).with_floor(0.0) })
}

/// `lambda (1 - lambda^d) <= 2 (lambda^{d+1} (1 - lambda))^{1/(d+1)}`.
pub fn scalar_ineq_check(lambda: f64, d: u32) -> bool {
    scalar_ineq_margin(lambda, d) >= -1e-12
}

/// Right side minus left side of [`scalar_ineq_check`].
pub fn scalar_ineq_margin(lambda: f64, d: u32) -> f64 {
    let lhs = lambda * (1.0 - lambda.powi(d as i32));
    let rhs = 2.0 * (lambda.powi(d as i32 + 1) * (1.0 - lambda)).max(0.0).powf(1.0 / (d as f64 + 1.0));
    rhs - lhs
}

/// `sigma` of the pasting theorem and its ingredients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PastingSigma {
    pub nu: f64,
    pub sigma: f64,
    /// `k >= 400 m d`, the regime the constants are stated for.
    pub in_regime: bool,
}

/// `nu = 100 k^2 m (eps^{1/32} + delta^{1/32} + gamma^{1/32} + zeta^{1/32} + (d/q)^{1/32})`,
/// `sigma = kappa (1 + 1/(100m)) + 2 nu + exp(-k/(80000 m^2))`; `m` counts the slice variables.
pub fn pasting_sigma(m: usize, q: u32, d: usize, k: usize, good: &Goodness, zeta: f64, kappa: f64) -> PastingSigma {
    let e = 1.0 / 32.0;
    let mf = m as f64;
    let kf = k as f64;
    let sum = good.eps.max(0.0).powf(e)
        + good.delta.max(0.0).powf(e)
        + good.gamma.max(0.0).powf(e)
        + zeta.max(0.0).powf(e)
        + (d as f64 / q as f64).powf(e);
    let nu = 100.0 * kf * kf * mf * sum;
    let sigma = kappa * (1.0 + 1.0 / (100.0 * mf)) + 2.0 * nu + (-kf / (80_000.0 * mf * mf)).exp();
    PastingSigma { nu, sigma, in_regime: k >= 400 * m * d }
}

/// Measured quantities of a pasting run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PastingReport {
    pub k: usize,
    pub regime: CoordRegime,
    pub outcomes: usize,
    /// `lambda_max(sum_h H_h) - 1`; at most about zero for a sub-measurement.
    pub sum_excess: f64,
    pub completeness: f64,
    pub sigma: PastingSigma,
    /// Consistency of the points of `s` with the completed `H`, against `sigma`.
    pub consistency: BoundReport,
}

/// Pastes the slices and measures consistency of the completed result with the points
/// of the `(m+1)`-variate strategy `s`.
pub fn paste_and_report(
    field: &Field,
    s: &QuantumStrategy,
    slices: &[SubMeasurement<MultiPoly>],
    params: &PastingParams,
    good: &Goodness,
    zeta: f64,
) -> Result<(SubMeasurement<MultiPoly>, PastingReport)> {
    if s.m == 0 {
        return Err(Error::Param("pasting needs at least one variable".into()));
    }
    let m = s.m - 1;
    let h = pasted_measurement(field, slices, s.d, params)?;
    let n = slices[0].dim;
    let sum_excess = if h.is_empty() { -1.0 } else { max_eig(&h.total()) - 1.0 };
    let gsum = slices.iter().fold(zeros(n), |acc, g| acc + g.total()) * crate::linalg::c(1.0 / slices.len() as f64);
    let kappa = 1.0 - s.state.expect_left(&gsum);
    let completeness = if h.is_empty() { 0.0 } else { s.state.expect_left(&h.total()) };
    let sigma = pasting_sigma(m.max(1), field.q(), s.d, params.k, good, zeta, kappa);
    let full = complete_pasted(&h, s.m, s.d);
    let cons = consistency_with_points(field, s, &full)?;
    let report = PastingReport {
        k: params.k,
        regime: params.regime,
        outcomes: h.len(),
        sum_excess,
        completeness,
        sigma,
        consistency: BoundReport::new("pasting_consistency", cons, sigma.sigma).with_cap(1.0),
    };
    Ok((h, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, random_projective, random_unit_vector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn honest_slices(field: &Field, h: &MultiPoly, n: usize) -> Vec<SubMeasurement<MultiPoly>> {
        field.elements().map(|x| SubMeasurement::new(vec![h.slice_last(field, x)], vec![eye(n)]).unwrap()).collect()
    }

    fn random_slices(field: &Field, m: usize, d: usize, n: usize, seed: u64) -> Vec<SubMeasurement<MultiPoly>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = PolySpace::new(field, m, d).unwrap();
        field
            .elements()
            .map(|_| {
                let labels: Vec<MultiPoly> = (0..3).map(|_| space.get(rng.random_range(0..space.len()))).collect();
                let mut labels2 = labels.clone();
                labels2.dedup();
                let k = labels2.len();
                // three projectors onto a random split, one slot left as the deficit
                let mut ops = random_projective(n, k + 1, &mut rng);
                ops.pop();
                SubMeasurement::new(labels2, ops).unwrap()
            })
            .collect()
    }

    #[test]
    fn tv_examples() {
        let t = tv_distance_bound_check(4, 2).unwrap();
        assert_eq!(t.exact, Rational::new(1, 4));
        assert_eq!(t.pair_bound, Rational::new(1, 4));
        assert_eq!(t.square_bound, Rational::from_integer(1));
        assert!(t.holds());
        assert_eq!(tv_distance_bound_check(7, 1).unwrap().exact, Rational::from_integer(0));
        assert!(tv_distance_bound_check(3, 4).is_err());
    }

    #[test]
    fn tv_matches_enumeration() {
        // collision probability by brute force over all q^k tuples
        for (q, k) in [(5u32, 3usize), (7, 2), (4, 4), (8, 3)] {
            let total = (q as usize).pow(k as u32);
            let mut coll = 0;
            for n in 0..total {
                let digits: Vec<usize> = (0..k).map(|i| (n / (q as usize).pow(i as u32)) % q as usize).collect();
                if (0..k).any(|i| (0..i).any(|j| digits[i] == digits[j])) {
                    coll += 1;
                }
            }
            let t = tv_distance_bound_check(q, k).unwrap();
            assert_eq!(t.exact, Rational::new(coll, total as i64));
            assert!(t.holds());
        }
    }

    #[test]
    fn distinct_tuple_count() {
        let f = Field::of_order(5).unwrap();
        let t = distinct_tuples(&f, 3).unwrap();
        assert_eq!(t.len(), 60);
        assert!(t.iter().all(|x| x[0] != x[1] && x[1] != x[2] && x[0] != x[2]));
    }

    #[test]
    fn single_slot_sandwich_is_projector() {
        let f = Field::of_order(3).unwrap();
        let slices = random_slices(&f, 1, 1, 4, 1);
        let ghat = complete_slices(&slices).unwrap();
        for (gs, h) in sandwich_terms(&ghat, &[Fe(1)]).unwrap() {
            let op = ghat[1].get(&gs[0]).unwrap();
            assert!(frob(&(h - op)) < 1e-10);
        }
    }

    #[test]
    fn commuting_diagonal_sandwich_is_product() {
        let f = Field::of_order(3).unwrap();
        let space = PolySpace::new(&f, 1, 1).unwrap();
        let n = 4;
        // diagonal projectors: basis vector i goes to outcome (i + x) mod 3, or Bot when that is 2
        let slices: Vec<_> = (0..3)
            .map(|x| {
                let labels = vec![space.get(0), space.get(1)];
                let ops = (0..2)
                    .map(|o| CMat::from_fn(n, n, |i, j| if i == j && (i + x) % 3 == o { c(1.0) } else { c(0.0) }))
                    .collect();
                SubMeasurement::new(labels, ops).unwrap()
            })
            .collect();
        let ghat = complete_slices(&slices).unwrap();
        let xs = [Fe(0), Fe(2)];
        for (gs, h) in sandwich_terms(&ghat, &xs).unwrap() {
            let a = ghat[0].get(&gs[0]).unwrap();
            let b = ghat[2].get(&gs[1]).unwrap();
            assert!(frob(&(h - a * b)) < 1e-12);
        }
    }

    #[test]
    fn telescoping_and_marginals() {
        let f = Field::of_order(5).unwrap();
        let slices = random_slices(&f, 1, 1, 3, 2);
        let ghat = complete_slices(&slices).unwrap();
        for xs in [vec![Fe(0), Fe(3), Fe(1)], vec![Fe(4), Fe(2)], vec![Fe(2), Fe(2), Fe(0)]] {
            assert!(telescoping_residual(&ghat, &xs).unwrap() < 1e-9);
            assert!(marginal_residual(&ghat, &xs).unwrap() < 1e-9);
        }
    }

    #[test]
    fn non_projective_slices_rejected() {
        let g = SubMeasurement::new(vec![MultiPoly::zero(1, 1)], vec![eye(2) * c(0.5)]).unwrap();
        assert!(complete_slices(&[g.clone(), g]).is_err());
    }

    #[test]
    fn honest_slices_paste_to_interpolant() {
        let f = Field::of_order(5).unwrap();
        let h = MultiPoly::from_terms(&f, 2, 1, &[(Fe(2), vec![1, 1]), (Fe(3), vec![0, 1]), (Fe(1), vec![0, 0])]).unwrap();
        let slices = honest_slices(&f, &h, 2);
        let nodes: Vec<_> = [Fe(1), Fe(4)].iter().map(|&x| (x, h.slice_last(&f, x))).collect();
        assert_eq!(interpolate_parallel(&f, &nodes, 1).unwrap(), h);
        let out = pasted_measurement(&f, &slices, 1, &PastingParams::new(3)).unwrap();
        assert_eq!(out.outcomes, vec![h.clone()]);
        assert!(frob(&(&out.ops[0] - eye(2))) < 1e-12);
        let full = complete_pasted(&out, 2, 1);
        assert!(full.is_measurement());
    }

    #[test]
    fn random_pasting_is_sub_measurement() {
        let f = Field::of_order(3).unwrap();
        let slices = random_slices(&f, 1, 1, 3, 3);
        let h = pasted_measurement(&f, &slices, 1, &PastingParams::new(3)).unwrap();
        h.validate().unwrap();
        assert!(max_eig(&h.total()) <= 1.0 + 1e-9);
        assert!(complete_pasted(&h, 2, 1).is_measurement());
    }

    #[test]
    fn uniform_regime_overcounts_collisions() {
        // a tuple with x_1 = x_2 fixes one slice only, so it feeds every h agreeing there
        let f = Field::of_order(3).unwrap();
        let h = MultiPoly::from_terms(&f, 2, 1, &[(Fe(1), vec![1, 1])]).unwrap();
        let p = PastingParams { k: 2, regime: CoordRegime::Uniform, samples: 0, seed: 0 };
        let out = pasted_measurement(&f, &honest_slices(&f, &h, 1), 1, &p).unwrap();
        assert_eq!(out.len(), 25);
        let at = |g: &MultiPoly| out.get(g).unwrap()[(0, 0)].re;
        assert!((at(&h) - 1.0).abs() < 1e-12);
        // 3 collision tuples of weight 1/9, each shared with 8 other polynomials
        let total: f64 = out.ops.iter().map(|o| o[(0, 0)].re).sum();
        assert!((total - (1.0 + 24.0 / 9.0)).abs() < 1e-12);
    }

    #[test]
    fn sampled_average_is_reproducible() {
        let f = Field::of_order(7).unwrap();
        let p = PastingParams { k: 7, regime: CoordRegime::Distinct, samples: 50, seed: 9 };
        let a = coordinate_average(&f, &p).unwrap();
        assert_eq!(a.len(), 5040);
        let p = PastingParams { k: 7, regime: CoordRegime::Uniform, samples: 50, seed: 9 };
        let a = coordinate_average(&f, &p).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a, coordinate_average(&f, &p).unwrap());
    }

    #[test]
    fn first_construction_honest() {
        let f = Field::of_order(5).unwrap();
        let h = MultiPoly::from_terms(&f, 2, 1, &[(Fe(4), vec![1, 0]), (Fe(1), vec![0, 1])]).unwrap();
        let out = first_construction(&f, &honest_slices(&f, &h, 2), &[Fe(0), Fe(3)], 1).unwrap();
        assert_eq!(out.outcomes, vec![h]);
    }

    #[test]
    fn f_identity_and_binomial() {
        assert!(frob(&(binomial_matrix_f(&eye(3), 5, 2).unwrap() - eye(3))) < 1e-12);
        // P[Bin(20, 0.9) >= 2] = 1 - 0.1^20 - 20 * 0.9 * 0.1^19
        let oracle = 1.0 - 0.1f64.powi(20) - 20.0 * 0.9 * 0.1f64.powi(19);
        let fx = binomial_matrix_f(&(eye(2) * c(0.9)), 20, 1).unwrap();
        assert!((fx[(0, 0)].re - oracle).abs() < 1e-14);
        assert!(binomial_matrix_f(&(eye(2) * c(1.5)), 3, 1).is_err());
    }

    #[test]
    fn f_commutes_and_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_projective(4, 2, &mut rng);
        let x = &p[0] * c(0.3) + &p[1] * c(0.8);
        let fx = binomial_matrix_f(&x, 9, 2).unwrap();
        assert!(frob(&(&fx * &x - &x * &fx)) < 1e-10);
        assert!(min_eig(&fx) >= -1e-12 && max_eig(&fx) <= 1.0 + 1e-12);
    }

    #[test]
    fn chernoff_bound_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = random_projective(3, 3, &mut rng);
            let x = &p[0] * c(0.95) + &p[1] * c(0.99) + &p[2] * c(rng.random_range(0.0..1.0));
            let psi = BipartiteState::new(3, 3, random_unit_vector(9, &mut rng)).unwrap();
            let r = chernoff_completeness_check(&x, &psi, 40, 2, 0.2).unwrap();
            assert!(r.bound.holds(0.0), "{r:?}");
        }
        assert!(chernoff_completeness_check(&eye(2), &BipartiteState::max_entangled(2), 3, 2, 0.5).is_err());
    }

    #[test]
    fn scalar_endpoints() {
        for d in 1..=10 {
            assert!(scalar_ineq_check(0.0, d));
            assert!(scalar_ineq_check(1.0, d));
        }
    }

    #[test]
    fn sigma_regime_flag() {
        let g = Goodness { eps: 0.0, delta: 0.0, gamma: 0.0 };
        let s = pasting_sigma(1, 5, 1, 3, &g, 0.0, 0.0);
        assert!(!s.in_regime);
        assert!(s.sigma > 1.0);
        assert!(pasting_sigma(1, 5, 1, 400, &g, 0.0, 0.0).in_regime);
    }

    proptest! {
        #[test]
        fn scalar_inequality_holds(lambda in 0.0f64..=1.0, d in 1u32..=10) {
            prop_assert!(scalar_ineq_check(lambda, d));
        }
    }
}
