//! Classical and quantum prover strategies, their exact pass probabilities, and symmetrization.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::linalg::{c, eye, CMat, CVec};
use crate::measure::{BipartiteState, SubMeasurement};
use crate::poly::{points, AxisLine, DiagonalLine, MultiPoly, Point, UniPoly};
use crate::protocol::{enumerate_subtest, sample_round, verdict, Answer, Question, Rational, Role, RoundSample, Subtest, TestParams};

/// Failure probabilities of the three subtests, exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactGoodness {
    pub eps: Rational,
    pub delta: Rational,
    pub gamma: Rational,
}

impl ExactGoodness {
    pub fn to_f64(self) -> Goodness {
        let f = |r: Rational| *r.numer() as f64 / *r.denom() as f64;
        Goodness { eps: f(self.eps), delta: f(self.delta), gamma: f(self.gamma) }
    }
}

/// Failure probabilities of the axis, self-consistency and diagonal subtests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Goodness {
    pub eps: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl Goodness {
    /// Overall pass probability under the given subtest weights.
    pub fn pass_probability(&self, params: &TestParams) -> f64 {
        let w: Vec<f64> = params.weights.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect();
        1.0 - w[0] * self.eps - w[1] * self.delta - w[2] * self.gamma
    }
}

/// The questions a strategy must answer: all points, axis lines and diagonal lines.
#[derive(Clone, Debug, Default)]
pub struct QuestionSupport {
    pub points: Vec<Point>,
    pub axis: Vec<AxisLine>,
    pub diag: Vec<DiagonalLine>,
}

impl QuestionSupport {
    pub fn new(field: &Field, m: usize) -> Result<Self> {
        let npts = (field.q() as u128).pow(m as u32);
        crate::error::guard("q^(2m) line enumeration", npts * npts, 100_000_000)?;
        let pts: Vec<Point> = points(field, m).collect();
        let mut axis = BTreeSet::new();
        let mut diag = BTreeSet::new();
        for u in &pts {
            for i in 0..m {
                axis.insert(AxisLine::through(u, i));
            }
            for v in &pts {
                diag.insert(DiagonalLine::through(field, u, v));
            }
        }
        Ok(QuestionSupport { points: pts, axis: axis.into_iter().collect(), diag: diag.into_iter().collect() })
    }
}

/// Deterministic answer tables for one role.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassicalTables {
    pub points: BTreeMap<Point, Fe>,
    pub axis: BTreeMap<AxisLine, UniPoly>,
    pub diag: BTreeMap<DiagonalLine, Answer>,
}

impl ClassicalTables {
    pub fn answer(&self, q: &Question) -> Result<Answer> {
        let missing = || Error::Strategy(format!("no answer for {q:?}"));
        match q {
            Question::Point(u) => self.points.get(u).map(|&a| Answer::Value(a)).ok_or_else(missing),
            Question::Axis(l) => self.axis.get(l).map(|f| Answer::Poly(f.clone())).ok_or_else(missing),
            Question::Diag(l) => self.diag.get(l).cloned().ok_or_else(missing),
        }
    }
}

/// Deterministic classical strategy, possibly with different tables per role.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalStrategy {
    pub m: usize,
    pub d: usize,
    pub roles: [ClassicalTables; 2],
}

impl ClassicalStrategy {
    /// Same tables for both roles.
    pub fn symmetric(m: usize, d: usize, tables: ClassicalTables) -> Self {
        ClassicalStrategy { m, d, roles: [tables.clone(), tables] }
    }

    /// Tables built from answer functions over the full question support.
    pub fn from_fns(
        field: &Field,
        m: usize,
        d: usize,
        point_fn: impl Fn(&Point) -> Fe,
        axis_fn: impl Fn(&AxisLine) -> UniPoly,
        diag_fn: impl Fn(&DiagonalLine) -> Answer,
    ) -> Result<Self> {
        let sup = QuestionSupport::new(field, m)?;
        let tables = ClassicalTables {
            points: sup.points.iter().map(|u| (u.clone(), point_fn(u))).collect(),
            axis: sup.axis.iter().map(|l| (l.clone(), axis_fn(l))).collect(),
            diag: sup.diag.iter().map(|l| (l.clone(), diag_fn(l))).collect(),
        };
        Ok(Self::symmetric(m, d, tables))
    }

    /// Answers every question with the restriction of a fixed `g` in `P(m,q,d)`.
    pub fn honest(field: &Field, g: &MultiPoly) -> Result<Self> {
        Self::from_fns(
            field,
            g.m,
            g.d,
            |u| g.eval(field, u),
            |l| g.restrict_axis(field, l),
            |l| diag_answer(l, g.restrict_diagonal(field, l)),
        )
    }

    pub fn answer(&self, r: Role, q: &Question) -> Result<Answer> {
        self.roles[r.index()].answer(q)
    }

    /// Checks degree bounds and answer formats.
    pub fn validate(&self, field: &Field) -> Result<()> {
        for t in &self.roles {
            for f in t.axis.values() {
                if f.bound() != self.d || f.coeffs.iter().any(|c| c.0 >= field.q()) {
                    return Err(Error::Strategy("axis answer with wrong degree bound".into()));
                }
            }
            for (l, a) in &t.diag {
                let ok = match a {
                    Answer::Value(_) => l.is_degenerate(),
                    Answer::Poly(f) => !l.is_degenerate() && f.bound() == self.m * self.d,
                };
                if !ok {
                    return Err(Error::Strategy(format!("diagonal answer format mismatch on {l:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Answer format for a diagonal line: a single value on the degenerate line.
pub fn diag_answer(l: &DiagonalLine, f: UniPoly) -> Answer {
    if l.is_degenerate() {
        Answer::Value(f.coeffs[0])
    } else {
        Answer::Poly(f)
    }
}

fn answers_for(s: &ClassicalStrategy, r: &RoundSample) -> Result<[Answer; 2]> {
    Ok([s.answer(Role::A, r.question(Role::A))?, s.answer(Role::B, r.question(Role::B))?])
}

/// Exact failure probabilities of a deterministic classical strategy.
pub fn pass_probabilities_classical(field: &Field, params: &TestParams, s: &ClassicalStrategy) -> Result<ExactGoodness> {
    let mut fail = [Rational::zero(); 3];
    for (k, sub) in Subtest::ALL.iter().enumerate() {
        for r in enumerate_subtest(field, params, *sub)? {
            if !verdict(field, params, &r, &answers_for(s, &r)?)? {
                fail[k] += r.mass;
            }
        }
    }
    Ok(ExactGoodness { eps: fail[0], delta: fail[1], gamma: fail[2] })
}

/// Exact failure probabilities of a shared-randomness mixture of deterministic strategies.
pub fn pass_probabilities_mixture(field: &Field, params: &TestParams, mix: &[(Rational, ClassicalStrategy)]) -> Result<ExactGoodness> {
    let mut out = ExactGoodness { eps: Rational::zero(), delta: Rational::zero(), gamma: Rational::zero() };
    for (p, s) in mix {
        let g = pass_probabilities_classical(field, params, s)?;
        out.eps += *p * g.eps;
        out.delta += *p * g.delta;
        out.gamma += *p * g.gamma;
    }
    Ok(out)
}

/// Sample mean and standard error of a Monte Carlo pass-probability estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
}

impl McEstimate {
    fn from_count(hits: usize, n: usize) -> Self {
        let mean = hits as f64 / n as f64;
        McEstimate { samples: n, mean, stderr: (mean * (1.0 - mean) / n as f64).sqrt() }
    }
}

/// Monte Carlo estimate of the overall pass probability of a classical strategy.
pub fn monte_carlo_classical(field: &Field, params: &TestParams, s: &ClassicalStrategy, n: usize, rng: &mut impl Rng) -> Result<McEstimate> {
    let mut hits = 0;
    for _ in 0..n {
        let r = sample_round(field, params, rng);
        if verdict(field, params, &r, &answers_for(s, &r)?)? {
            hits += 1;
        }
    }
    Ok(McEstimate::from_count(hits, n))
}

/// The strategy answering with `h = x_1^{d+1}` except that lines in direction 1 give up
/// and answer the zero polynomial. Needs `m >= 2` so diagonal answers fit degree `m d`.
pub fn example_1_5(field: &Field, m: usize, d: usize) -> Result<ClassicalStrategy> {
    if d + 1 > field.q() as usize - 1 {
        return Err(Error::Param(format!("need d + 1 <= q - 1, got d = {d}, q = {}", field.q())));
    }
    if m < 2 {
        return Err(Error::Param("diagonal answers of degree d + 1 need m >= 2".into()));
    }
    let e = (d + 1) as u64;
    let h = |u: &Point| field.pow(u[0], e);
    ClassicalStrategy::from_fns(
        field,
        m,
        d,
        h,
        |l| {
            if l.dir == 0 {
                UniPoly::zero(d)
            } else {
                UniPoly::constant(field.pow(l.base[0], e), d)
            }
        },
        |l| {
            if l.is_degenerate() {
                return Answer::Value(h(&l.base));
            }
            // (b + t v)^{d+1} by repeated multiplication
            let (b, v) = (l.base[0], l.dir[0]);
            let mut f = vec![Fe(0); m * d + 1];
            f[0] = Fe(1);
            for _ in 0..=d {
                let mut g = vec![Fe(0); m * d + 1];
                for k in 0..f.len() {
                    g[k] = field.add(g[k], field.mul(f[k], b));
                    if k + 1 < g.len() {
                        g[k + 1] = field.add(g[k + 1], field.mul(f[k], v));
                    }
                }
                f = g;
            }
            Answer::Poly(UniPoly { coeffs: f })
        },
    )
}

/// Axis-test loss counting every round whose line answer differs from the points
/// function on that line as lost, the accounting that gives the Example-1.5 strategy
/// a loss of exactly `1/m`.
pub fn axis_loss_line_accounting(field: &Field, params: &TestParams, s: &ClassicalStrategy) -> Result<Rational> {
    let mut loss = Rational::zero();
    for r in enumerate_subtest(field, params, Subtest::Axis)? {
        let role = r.line_role.expect("axis rounds have a line role");
        let Question::Axis(l) = r.question(role) else { unreachable!() };
        let Answer::Poly(f) = s.answer(role, r.question(role))? else {
            return Err(Error::Answer("axis answer must be a polynomial".into()));
        };
        let pts = &s.roles[role.other().index()].points;
        let mismatch = field.elements().any(|t| pts.get(&l.point_at(t)).is_some_and(|&a| a != f.eval(field, t)));
        if mismatch {
            loss += r.mass;
        }
    }
    Ok(loss)
}

/// Largest agreement fraction between a points table and any member of `P(m,q,d)`.
pub fn max_agreement(field: &Field, m: usize, d: usize, table: &BTreeMap<Point, Fe>) -> Result<Rational> {
    let space = crate::poly::PolySpace::new(field, m, d)?;
    let pts: Vec<Point> = points(field, m).collect();
    let target: Vec<Fe> = pts.iter().map(|u| table.get(u).copied().ok_or_else(|| Error::Strategy("points table not total".into()))).collect::<Result<_>>()?;
    // monomial value tables: g(u) = sum_k c_k mono_k(u)
    let nmono = (d + 1).pow(m as u32);
    let probe = MultiPoly::zero(m, d);
    let mono: Vec<Vec<Fe>> = (0..nmono)
        .map(|k| {
            let e = probe.exponents(k);
            pts.iter().map(|u| e.iter().zip(u).fold(Fe(1), |acc, (&ej, &x)| field.mul(acc, field.pow(x, ej as u64)))).collect()
        })
        .collect();
    let mut best = 0usize;
    let mut vals = vec![Fe(0); pts.len()];
    for n in 0..space.len() {
        let g = space.get(n);
        vals.iter_mut().for_each(|v| *v = Fe(0));
        for (k, &ck) in g.coeffs.iter().enumerate() {
            if ck.is_zero() {
                continue;
            }
            for (v, &mk) in vals.iter_mut().zip(&mono[k]) {
                *v = field.add(*v, field.mul(ck, mk));
            }
        }
        let agree = vals.iter().zip(&target).filter(|(a, b)| a == b).count();
        best = best.max(agree);
    }
    Ok(Ratio::new(best as i64, pts.len() as i64))
}

/// Per-role measurement families of a quantum strategy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuantumFamilies {
    pub points: BTreeMap<Point, SubMeasurement<Fe>>,
    pub axis: BTreeMap<AxisLine, SubMeasurement<UniPoly>>,
    pub diag: BTreeMap<DiagonalLine, SubMeasurement<Answer>>,
}

/// Shared state plus per-role families; role A acts on the first tensor factor.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumStrategy {
    pub m: usize,
    pub d: usize,
    pub state: BipartiteState,
    pub roles: [QuantumFamilies; 2],
    pub symmetric: bool,
    pub projective: bool,
}

impl QuantumStrategy {
    pub fn dims(&self) -> (usize, usize) {
        (self.state.da, self.state.db)
    }

    /// Checks every family is a measurement on the right factor, projectivity when claimed,
    /// and permutation invariance plus shared families when symmetric.
    pub fn validate(&self) -> Result<()> {
        let (da, db) = self.dims();
        if da * db > 64 * 64 {
            return Err(Error::Guard { what: "strategy dimension", size: (da * db) as u128, limit: 64 * 64 });
        }
        for (r, fam) in self.roles.iter().enumerate() {
            let dim = if r == 0 { da } else { db };
            let check = |m: &SubMeasurement<()>| -> Result<()> {
                if m.dim != dim {
                    return Err(Error::Strategy("family dimension does not match its party".into()));
                }
                m.validate()?;
                if !m.is_measurement() {
                    return Err(Error::Strategy(format!("family is not a measurement (residual {:.2e})", m.completeness_residual())));
                }
                if self.projective && !m.is_projective() {
                    return Err(Error::Strategy("family claimed projective is not".into()));
                }
                Ok(())
            };
            fam.points.values().try_for_each(|m| check(&m.map_labels(|_| ())))?;
            fam.axis.values().try_for_each(|m| check(&m.map_labels(|_| ())))?;
            fam.diag.values().try_for_each(|m| check(&m.map_labels(|_| ())))?;
        }
        if self.symmetric {
            let res = self.state.swap_residual();
            if res > 1e-9 {
                return Err(Error::NonSymmetric(res));
            }
            if self.roles[0] != self.roles[1] {
                return Err(Error::Strategy("symmetric strategy must share families".into()));
            }
        }
        Ok(())
    }

    fn point_family(&self, r: Role, u: &Point) -> Result<&SubMeasurement<Fe>> {
        self.roles[r.index()].points.get(u).ok_or_else(|| Error::Strategy(format!("no point measurement at {u:?}")))
    }

    /// Line measurement at `q` post-processed to the value at `u`, as a vector indexed by field element.
    fn line_values(&self, field: &Field, r: Role, q: &Question, u: &Point) -> Result<Vec<CMat>> {
        let dim = if r == Role::A { self.state.da } else { self.state.db };
        let mut out = vec![CMat::zeros(dim, dim); field.q() as usize];
        match q {
            Question::Axis(l) => {
                let fam = self.roles[r.index()].axis.get(l).ok_or_else(|| Error::Strategy(format!("no axis measurement at {l:?}")))?;
                let t = l.param(u);
                for (f, op) in fam.outcomes.iter().zip(&fam.ops) {
                    out[f.eval(field, t).0 as usize] += op;
                }
            }
            Question::Diag(l) => {
                let fam = self.roles[r.index()].diag.get(l).ok_or_else(|| Error::Strategy(format!("no diagonal measurement at {l:?}")))?;
                let t = l.param(u);
                for (a, op) in fam.outcomes.iter().zip(&fam.ops) {
                    let v = match a {
                        Answer::Value(v) => *v,
                        Answer::Poly(f) => f.eval(field, t),
                    };
                    out[v.0 as usize] += op;
                }
            }
            Question::Point(_) => return Err(Error::Strategy("not a line question".into())),
        }
        Ok(out)
    }

    fn point_values(&self, field: &Field, r: Role, u: &Point) -> Result<Vec<CMat>> {
        let fam = self.point_family(r, u)?;
        let mut out = vec![CMat::zeros(fam.dim, fam.dim); field.q() as usize];
        for (a, op) in fam.outcomes.iter().zip(&fam.ops) {
            out[a.0 as usize] += op;
        }
        Ok(out)
    }

    /// Acceptance probability of one round.
    pub fn accept_probability(&self, field: &Field, r: &RoundSample) -> Result<f64> {
        let (xs, ys) = match r.line_role {
            None => (self.point_values(field, Role::A, &r.point)?, self.point_values(field, Role::B, &r.point)?),
            Some(role) => {
                let line = self.line_values(field, role, r.question(role), &r.point)?;
                let pt = self.point_values(field, role.other(), &r.point)?;
                if role == Role::A {
                    (line, pt)
                } else {
                    (pt, line)
                }
            }
        };
        Ok(xs.iter().zip(&ys).map(|(x, y)| self.state.expect(x, y)).sum())
    }
}

/// Exact (dense contraction) failure probabilities of a quantum strategy.
pub fn pass_probabilities_quantum(field: &Field, params: &TestParams, s: &QuantumStrategy) -> Result<Goodness> {
    let mut fail = [0.0; 3];
    for (k, sub) in Subtest::ALL.iter().enumerate() {
        for r in enumerate_subtest(field, params, *sub)? {
            let w = *r.mass.numer() as f64 / *r.mass.denom() as f64;
            fail[k] += w * (1.0 - s.accept_probability(field, &r)?);
        }
    }
    Ok(Goodness { eps: fail[0], delta: fail[1], gamma: fail[2] })
}

/// Monte Carlo estimate of the pass probability: sampled questions, Bernoulli verdicts.
pub fn monte_carlo_quantum(field: &Field, params: &TestParams, s: &QuantumStrategy, n: usize, rng: &mut impl Rng) -> Result<McEstimate> {
    let mut hits = 0;
    for _ in 0..n {
        let r = sample_round(field, params, rng);
        let p = s.accept_probability(field, &r)?;
        if rng.random::<f64>() < p {
            hits += 1;
        }
    }
    Ok(McEstimate::from_count(hits, n))
}

fn diag_indicator<L: Clone + Ord>(labels_per_seed: &[L]) -> SubMeasurement<L> {
    let outcomes: Vec<L> = labels_per_seed.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let n = labels_per_seed.len();
    let ops = outcomes
        .iter()
        .map(|o| CMat::from_diagonal(&CVec::from_fn(n, |s, _| if &labels_per_seed[s] == o { c(1.0) } else { c(0.0) })))
        .collect();
    SubMeasurement { dim: n, outcomes, ops }
}

/// Embeds a shared-randomness mixture of deterministic strategies as a commuting
/// quantum strategy: `psi = sum_s sqrt(p_s) |s>|s>`, diagonal indicator measurements.
pub fn embed_classical(mix: &[(Rational, ClassicalStrategy)]) -> Result<QuantumStrategy> {
    let first = &mix.first().ok_or_else(|| Error::Strategy("empty mixture".into()))?.1;
    let n = mix.len();
    let mut psi = CMat::zeros(n, n);
    for (s, (p, _)) in mix.iter().enumerate() {
        psi[(s, s)] = c((*p.numer() as f64 / *p.denom() as f64).sqrt());
    }
    let state = BipartiteState::from_matrix(&psi)?;
    let mut roles: [QuantumFamilies; 2] = Default::default();
    for r in Role::BOTH {
        let t0 = &first.roles[r.index()];
        let fam = &mut roles[r.index()];
        for u in t0.points.keys() {
            let labels: Vec<Fe> = mix.iter().map(|(_, s)| s.roles[r.index()].points.get(u).copied().ok_or_else(|| Error::Strategy("mixture supports differ".into()))).collect::<Result<_>>()?;
            fam.points.insert(u.clone(), diag_indicator(&labels));
        }
        for l in t0.axis.keys() {
            let labels: Vec<UniPoly> = mix.iter().map(|(_, s)| s.roles[r.index()].axis.get(l).cloned().ok_or_else(|| Error::Strategy("mixture supports differ".into()))).collect::<Result<_>>()?;
            fam.axis.insert(l.clone(), diag_indicator(&labels));
        }
        for l in t0.diag.keys() {
            let labels: Vec<Answer> = mix.iter().map(|(_, s)| s.roles[r.index()].diag.get(l).cloned().ok_or_else(|| Error::Strategy("mixture supports differ".into()))).collect::<Result<_>>()?;
            fam.diag.insert(l.clone(), diag_indicator(&labels));
        }
    }
    let symmetric = roles[0] == roles[1];
    Ok(QuantumStrategy { m: first.m, d: first.d, state, roles, symmetric, projective: true })
}

/// `|0><0| (x) A + |1><1| (x) B` on merged outcome labels.
pub fn block_diag<L: Clone + PartialEq>(a: &SubMeasurement<L>, b: &SubMeasurement<L>) -> SubMeasurement<L> {
    let mut outcomes = a.outcomes.clone();
    for l in &b.outcomes {
        if !outcomes.contains(l) {
            outcomes.push(l.clone());
        }
    }
    let (da, db) = (a.dim, b.dim);
    let ops = outcomes
        .iter()
        .map(|l| {
            let mut m = CMat::zeros(da + db, da + db);
            if let Some(x) = a.get(l) {
                m.view_mut((0, 0), (da, da)).copy_from(x);
            }
            if let Some(y) = b.get(l) {
                m.view_mut((da, da), (db, db)).copy_from(y);
            }
            m
        })
        .collect();
    SubMeasurement { dim: da + db, outcomes, ops }
}

fn merge_maps<K: Ord + Clone + std::fmt::Debug, L: Clone + PartialEq>(
    a: &BTreeMap<K, SubMeasurement<L>>,
    b: &BTreeMap<K, SubMeasurement<L>>,
) -> Result<BTreeMap<K, SubMeasurement<L>>> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(Error::Strategy("roles answer different question sets".into()));
    }
    Ok(a.iter().map(|(k, x)| (k.clone(), block_diag(x, &b[k]))).collect())
}

/// Symmetric strategy on `C^2 (x) C^D` per party with
/// `psi_sym = (|0>|1> psi + |1>|0> SWAP psi) / sqrt 2` and role-controlled measurements.
pub fn symmetrize(s: &QuantumStrategy) -> Result<QuantumStrategy> {
    let (da, db) = s.dims();
    if da != db {
        return Err(Error::Dimension(format!("symmetrization needs equal local dimensions, got {da} and {db}")));
    }
    let n = da;
    let psi = s.state.matrix();
    let mut big = CMat::zeros(2 * n, 2 * n);
    let h = c(std::f64::consts::FRAC_1_SQRT_2);
    for i in 0..n {
        for j in 0..n {
            big[(i, n + j)] = psi[(i, j)] * h;
            big[(n + i, j)] = psi[(j, i)] * h;
        }
    }
    let state = BipartiteState::from_matrix(&big)?;
    let (fa, fb) = (&s.roles[0], &s.roles[1]);
    let fam = QuantumFamilies {
        points: merge_maps(&fa.points, &fb.points)?,
        axis: merge_maps(&fa.axis, &fb.axis)?,
        diag: merge_maps(&fa.diag, &fb.diag)?,
    };
    Ok(QuantumStrategy { m: s.m, d: s.d, state, roles: [fam.clone(), fam], symmetric: true, projective: s.projective })
}

/// Compression `(<r| (x) I) G (|r> (x) I)` of a measurement on the symmetrized space back
/// to role `r`'s block.
pub fn unsymmetrize_measurement<L: Clone + PartialEq>(g: &SubMeasurement<L>, r: Role) -> Result<SubMeasurement<L>> {
    if g.dim % 2 != 0 {
        return Err(Error::Dimension("odd dimension cannot carry a role qubit".into()));
    }
    let n = g.dim / 2;
    let off = r.index() * n;
    let ops = g.ops.iter().map(|x| x.view((off, off), (n, n)).into_owned()).collect();
    Ok(SubMeasurement { dim: n, outcomes: g.outcomes.clone(), ops })
}

/// Identity-valued families on `dim` for a strategy skeleton (used when loading partial files).
pub fn trivial_point_family(field: &Field, dim: usize) -> SubMeasurement<Fe> {
    let mut ops = vec![CMat::zeros(dim, dim); field.q() as usize];
    ops[0] = eye(dim);
    SubMeasurement { dim, outcomes: field.elements().collect(), ops }
}
