//! The (m,q,d) low individual degree test: question distribution, answers and verdicts.

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{guard, sat_pow, Error, Result};
use crate::field::{Fe, Field};
use crate::poly::{points, AxisLine, DiagonalLine, Point, UniPoly};

pub type Rational = Ratio<i64>;

/// Largest enumerated question support.
pub const MAX_SUPPORT: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    A,
    B,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::A, Role::B];

    pub fn other(self) -> Role {
        match self {
            Role::A => Role::B,
            Role::B => Role::A,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subtest {
    Axis,
    SelfCons,
    Diag,
}

impl Subtest {
    pub const ALL: [Subtest; 3] = [Subtest::Axis, Subtest::SelfCons, Subtest::Diag];
}

/// Test parameters. Subtest weights default to 1/3 each.
#[derive(Clone, Debug, PartialEq)]
pub struct TestParams {
    pub m: usize,
    pub d: usize,
    pub weights: [Rational; 3],
}

impl TestParams {
    pub fn new(m: usize, d: usize) -> Self {
        let third = Rational::new(1, 3);
        TestParams { m, d, weights: [third; 3] }
    }

    pub fn with_weights(m: usize, d: usize, weights: [Rational; 3]) -> Result<Self> {
        if weights.iter().any(|w| *w < Rational::zero()) {
            return Err(Error::Param("negative subtest weight".into()));
        }
        if weights.iter().copied().sum::<Rational>() != Rational::one() {
            return Err(Error::Param("subtest weights must sum to 1".into()));
        }
        Ok(TestParams { m, d, weights })
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Param("m must be at least 1".into()));
        }
        Self::with_weights(self.m, self.d, self.weights).map(|_| ())
    }

    pub fn weight(&self, s: Subtest) -> Rational {
        self.weights[s as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Question {
    Point(Point),
    Axis(AxisLine),
    Diag(DiagonalLine),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Answer {
    Value(Fe),
    Poly(UniPoly),
}

impl Answer {
    pub fn value(&self) -> Option<Fe> {
        match self {
            Answer::Value(a) => Some(*a),
            Answer::Poly(_) => None,
        }
    }
}

/// One point of the question distribution's support.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundSample {
    pub subtest: Subtest,
    /// Role receiving the line; `None` for the self-consistency test.
    pub line_role: Option<Role>,
    /// The point `u`.
    pub point: Point,
    /// Questions indexed by role.
    pub questions: [Question; 2],
    pub mass: Rational,
}

impl RoundSample {
    pub fn question(&self, r: Role) -> &Question {
        &self.questions[r.index()]
    }

    /// Value of the line answer at `u`'s parameter, or the value itself for point/degenerate answers.
    fn line_value(field: &Field, q: &Question, ans: &Answer, u: &[Fe], d: usize, m: usize) -> Result<Fe> {
        match (q, ans) {
            (Question::Axis(l), Answer::Poly(f)) if f.bound() == d => Ok(f.eval(field, l.param(u))),
            (Question::Diag(l), Answer::Value(a)) if l.is_degenerate() => Ok(*a),
            (Question::Diag(l), Answer::Poly(f)) if !l.is_degenerate() && f.bound() == m * d => {
                Ok(f.eval(field, l.param(u)))
            }
            _ => Err(Error::Answer(format!("answer {ans:?} does not fit question {q:?}"))),
        }
    }
}

fn assemble(subtest: Subtest, line_role: Option<Role>, u: Point, line_q: Option<Question>, mass: Rational) -> RoundSample {
    let pq = Question::Point(u.clone());
    let questions = match (line_role, line_q) {
        (Some(Role::A), Some(lq)) => [lq, pq],
        (Some(Role::B), Some(lq)) => [pq, lq],
        _ => [pq.clone(), pq],
    };
    RoundSample { subtest, line_role, point: u, questions, mass }
}

/// Support of one subtest with masses conditioned on that subtest (summing to 1).
pub fn enumerate_subtest(field: &Field, params: &TestParams, subtest: Subtest) -> Result<Vec<RoundSample>> {
    let (m, q) = (params.m, field.q() as u128);
    let npts = sat_pow(q, m as u128);
    let size = match subtest {
        Subtest::Axis => 2 * npts * m as u128,
        Subtest::SelfCons => npts,
        Subtest::Diag => 2 * npts * (1..=m as u128).map(|i| sat_pow(q, i)).sum::<u128>(),
    };
    guard("question support", size, MAX_SUPPORT)?;
    let npts = npts as i64;
    let mut out = Vec::with_capacity(size as usize);
    match subtest {
        Subtest::Axis => {
            let mass = Rational::new(1, 2 * npts * m as i64);
            for r in Role::BOTH {
                for u in points(field, m) {
                    for i in 0..m {
                        let l = AxisLine::through(&u, i);
                        out.push(assemble(subtest, Some(r), u.clone(), Some(Question::Axis(l)), mass));
                    }
                }
            }
        }
        Subtest::SelfCons => {
            let mass = Rational::new(1, npts);
            for u in points(field, m) {
                out.push(assemble(subtest, None, u, None, mass));
            }
        }
        Subtest::Diag => {
            for r in Role::BOTH {
                for u in points(field, m) {
                    for i in 1..=m {
                        push_diag(field, m, i, r, &u, Rational::new(1, 2 * npts * m as i64), &mut out);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn push_diag(field: &Field, m: usize, i: usize, r: Role, u: &Point, base_mass: Rational, out: &mut Vec<RoundSample>) {
    let qi = (field.q() as i64).pow(i as u32);
    let mass = base_mass * Rational::new(1, qi);
    for head in points(field, i) {
        let mut v = head;
        v.resize(m, Fe(0));
        let l = DiagonalLine::through(field, u, &v);
        out.push(assemble(Subtest::Diag, Some(r), u.clone(), Some(Question::Diag(l)), mass));
    }
}

/// Exact support of the full test distribution; masses sum to 1.
pub fn enumerate_rounds(field: &Field, params: &TestParams) -> Result<Vec<RoundSample>> {
    params.validate()?;
    let mut all = Vec::new();
    for s in Subtest::ALL {
        let w = params.weight(s);
        if w.is_zero() {
            continue;
        }
        for mut r in enumerate_subtest(field, params, s)? {
            r.mass *= w;
            all.push(r);
        }
    }
    Ok(all)
}

/// The diagonal test conditioned on direction index `j` (1-based); masses sum to 1.
pub fn restricted_diag_distribution(field: &Field, params: &TestParams, j: usize) -> Result<Vec<RoundSample>> {
    if j == 0 || j > params.m {
        return Err(Error::Param(format!("j = {j} outside 1..={}", params.m)));
    }
    let npts = sat_pow(field.q() as u128, params.m as u128);
    guard("question support", 2 * npts * sat_pow(field.q() as u128, j as u128), MAX_SUPPORT)?;
    let mut out = Vec::new();
    for r in Role::BOTH {
        for u in points(field, params.m) {
            push_diag(field, params.m, j, r, &u, Rational::new(1, 2 * npts as i64), &mut out);
        }
    }
    Ok(out)
}

/// Accept/reject for a pair of answers indexed by role.
pub fn verdict(field: &Field, params: &TestParams, sample: &RoundSample, answers: &[Answer; 2]) -> Result<bool> {
    match sample.line_role {
        None => match (&answers[0], &answers[1]) {
            (Answer::Value(a), Answer::Value(b)) => Ok(a == b),
            _ => Err(Error::Answer("self-consistency answers must be values".into())),
        },
        Some(r) => {
            let la = &answers[r.index()];
            let pa = answers[r.other().index()]
                .value()
                .ok_or_else(|| Error::Answer("point answer must be a value".into()))?;
            let lv = RoundSample::line_value(field, sample.question(r), la, &sample.point, params.d, params.m)?;
            Ok(lv == pa)
        }
    }
}

/// Draws one round from the test distribution.
pub fn sample_round(field: &Field, params: &TestParams, rng: &mut impl Rng) -> RoundSample {
    let x: f64 = rng.random();
    let w: Vec<f64> = params.weights.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect();
    let subtest = if x < w[0] {
        Subtest::Axis
    } else if x < w[0] + w[1] {
        Subtest::SelfCons
    } else {
        Subtest::Diag
    };
    let m = params.m;
    let u: Point = (0..m).map(|_| Fe(rng.random_range(0..field.q()))).collect();
    let role = if rng.random::<bool>() { Role::A } else { Role::B };
    let npts = (field.q() as i64).pow(m as u32);
    let wt = params.weight(subtest);
    match subtest {
        Subtest::SelfCons => assemble(subtest, None, u, None, wt * Rational::new(1, npts)),
        Subtest::Axis => {
            let i = rng.random_range(0..m);
            let l = AxisLine::through(&u, i);
            assemble(subtest, Some(role), u, Some(Question::Axis(l)), wt * Rational::new(1, 2 * npts * m as i64))
        }
        Subtest::Diag => {
            let i = rng.random_range(1..=m);
            let mut v: Point = (0..i).map(|_| Fe(rng.random_range(0..field.q()))).collect();
            v.resize(m, Fe(0));
            let l = DiagonalLine::through(field, &u, &v);
            let mass = wt * Rational::new(1, 2 * npts * m as i64 * (field.q() as i64).pow(i as u32));
            assemble(subtest, Some(role), u, Some(Question::Diag(l)), mass)
        }
    }
}
