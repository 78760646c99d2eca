//! Strategy files, canonical JSON output and round transcripts.
//!
//! Field elements are written as coefficient lists `[c_0, .., c_{t-1}]` over `F_p`;
//! operators as row-major lists of `[re, im]` pairs.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::linalg::{CMat, CVec};
use crate::measure::{BipartiteState, SubMeasurement};
use crate::poly::{AxisLine, DiagonalLine, MultiPoly, UniPoly};
use crate::protocol::{verdict, Answer, Question, Rational, RoundSample, Subtest, TestParams};
use crate::strategy::{embed_classical, ClassicalStrategy, ClassicalTables, QuantumFamilies, QuantumStrategy};

/// Significant digits kept for floats in canonical JSON.
pub const FLOAT_DIGITS: usize = 12;

/// `{p, t, modulus?}`; the modulus defaults to the library's choice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    #[serde(default = "one")]
    pub t: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u32>>,
}

fn one() -> u32 {
    1
}

impl FieldSpec {
    pub fn build(&self) -> Result<Field> {
        match &self.modulus {
            Some(md) => {
                if md.len() != self.t as usize + 1 {
                    return Err(Error::Field(format!("modulus needs {} coefficients", self.t + 1)));
                }
                Field::with_modulus(self.p, md.clone())
            }
            None => Field::new(self.p, self.t),
        }
    }

    pub fn of(field: &Field) -> Self {
        FieldSpec { p: field.p(), t: field.t(), modulus: Some(field.params().modulus.clone()) }
    }
}

pub type ElemRepr = Vec<u32>;

pub fn elem_out(field: &Field, x: Fe) -> ElemRepr {
    field.coeffs(x)
}

pub fn elem_in(field: &Field, c: &[u32]) -> Result<Fe> {
    field.elem(c)
}

fn elems_out(field: &Field, xs: &[Fe]) -> Vec<ElemRepr> {
    xs.iter().map(|&x| elem_out(field, x)).collect()
}

fn elems_in(field: &Field, xs: &[ElemRepr]) -> Result<Vec<Fe>> {
    xs.iter().map(|c| elem_in(field, c)).collect()
}

/// `{m, d, coeffs}` with coefficients in the library's exponent order (last variable innermost).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyRepr {
    pub m: usize,
    pub d: usize,
    pub coeffs: Vec<ElemRepr>,
}

impl PolyRepr {
    pub fn of(field: &Field, g: &MultiPoly) -> Self {
        PolyRepr { m: g.m, d: g.d, coeffs: elems_out(field, &g.coeffs) }
    }

    pub fn build(&self, field: &Field) -> Result<MultiPoly> {
        MultiPoly::from_coeffs(self.m, self.d, elems_in(field, &self.coeffs)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisRepr {
    pub dir: usize,
    pub base: Vec<ElemRepr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagRepr {
    pub base: Vec<ElemRepr>,
    pub dir: Vec<ElemRepr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerRepr {
    Value(ElemRepr),
    Poly(Vec<ElemRepr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionRepr {
    Point(Vec<ElemRepr>),
    Axis(AxisRepr),
    Diag(DiagRepr),
}

fn axis_out(field: &Field, l: &AxisLine) -> AxisRepr {
    AxisRepr { dir: l.dir, base: elems_out(field, &l.base) }
}

fn axis_in(field: &Field, m: usize, r: &AxisRepr) -> Result<AxisLine> {
    let base = elems_in(field, &r.base)?;
    if base.len() != m || r.dir >= m || !base[r.dir].is_zero() {
        return Err(Error::Strategy(format!("axis line {r:?} is not canonical")));
    }
    Ok(AxisLine { dir: r.dir, base })
}

fn diag_out(field: &Field, l: &DiagonalLine) -> DiagRepr {
    DiagRepr { base: elems_out(field, &l.base), dir: elems_out(field, &l.dir) }
}

fn diag_in(field: &Field, m: usize, r: &DiagRepr) -> Result<DiagonalLine> {
    let base = elems_in(field, &r.base)?;
    let dir = elems_in(field, &r.dir)?;
    if base.len() != m || dir.len() != m {
        return Err(Error::Strategy("diagonal line of wrong length".into()));
    }
    let l = DiagonalLine { base, dir };
    if DiagonalLine::through(field, &l.base, &l.dir) != l {
        return Err(Error::Strategy(format!("diagonal line {r:?} is not canonical")));
    }
    Ok(l)
}

fn answer_out(field: &Field, a: &Answer) -> AnswerRepr {
    match a {
        Answer::Value(x) => AnswerRepr::Value(elem_out(field, *x)),
        Answer::Poly(f) => AnswerRepr::Poly(elems_out(field, &f.coeffs)),
    }
}

fn answer_in(field: &Field, a: &AnswerRepr) -> Result<Answer> {
    Ok(match a {
        AnswerRepr::Value(x) => Answer::Value(elem_in(field, x)?),
        AnswerRepr::Poly(f) => Answer::Poly(UniPoly { coeffs: elems_in(field, f)? }),
    })
}

pub fn question_out(field: &Field, q: &Question) -> QuestionRepr {
    match q {
        Question::Point(u) => QuestionRepr::Point(elems_out(field, u)),
        Question::Axis(l) => QuestionRepr::Axis(axis_out(field, l)),
        Question::Diag(l) => QuestionRepr::Diag(diag_out(field, l)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointEntry {
    pub point: Vec<ElemRepr>,
    pub value: ElemRepr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisEntry {
    pub line: AxisRepr,
    pub poly: Vec<ElemRepr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagEntry {
    pub line: DiagRepr,
    pub answer: AnswerRepr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TablesRepr {
    pub points: Vec<PointEntry>,
    pub axis: Vec<AxisEntry>,
    pub diag: Vec<DiagEntry>,
}

impl TablesRepr {
    pub fn of(field: &Field, t: &ClassicalTables) -> Self {
        TablesRepr {
            points: t.points.iter().map(|(u, a)| PointEntry { point: elems_out(field, u), value: elem_out(field, *a) }).collect(),
            axis: t.axis.iter().map(|(l, f)| AxisEntry { line: axis_out(field, l), poly: elems_out(field, &f.coeffs) }).collect(),
            diag: t.diag.iter().map(|(l, a)| DiagEntry { line: diag_out(field, l), answer: answer_out(field, a) }).collect(),
        }
    }

    pub fn build(&self, field: &Field, m: usize) -> Result<ClassicalTables> {
        let mut t = ClassicalTables::default();
        for e in &self.points {
            let u = elems_in(field, &e.point)?;
            if u.len() != m {
                return Err(Error::Strategy("point of wrong length".into()));
            }
            t.points.insert(u, elem_in(field, &e.value)?);
        }
        for e in &self.axis {
            t.axis.insert(axis_in(field, m, &e.line)?, UniPoly { coeffs: elems_in(field, &e.poly)? });
        }
        for e in &self.diag {
            t.diag.insert(diag_in(field, m, &e.line)?, answer_in(field, &e.answer)?);
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureEntry {
    /// Probability as `"a/b"` or an integer string.
    pub weight: String,
    /// One table (shared by both roles) or two (roles A, B).
    pub roles: Vec<TablesRepr>,
}

pub type MatrixRepr = Vec<[f64; 2]>;

pub fn matrix_out(a: &CMat) -> MatrixRepr {
    let (r, c) = a.shape();
    (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| [a[(i, j)].re, a[(i, j)].im]).collect()
}

pub fn matrix_in(v: &MatrixRepr, n: usize) -> Result<CMat> {
    if v.len() != n * n {
        return Err(Error::Dimension(format!("operator has {} entries, need {}", v.len(), n * n)));
    }
    Ok(CMat::from_fn(n, n, |i, j| Complex64::new(v[i * n + j][0], v[i * n + j][1])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeEntry<L> {
    pub label: L,
    pub op: MatrixRepr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry<Q, L> {
    pub question: Q,
    pub outcomes: Vec<OutcomeEntry<L>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamiliesRepr {
    pub points: Vec<FamilyEntry<Vec<ElemRepr>, ElemRepr>>,
    pub axis: Vec<FamilyEntry<AxisRepr, Vec<ElemRepr>>>,
    pub diag: Vec<FamilyEntry<DiagRepr, AnswerRepr>>,
}

fn family_out<L, R>(fam: &SubMeasurement<L>, label: impl Fn(&L) -> R) -> Vec<OutcomeEntry<R>> {
    fam.outcomes.iter().zip(&fam.ops).map(|(l, op)| OutcomeEntry { label: label(l), op: matrix_out(op) }).collect()
}

fn family_in<L: Clone + PartialEq, R>(entries: &[OutcomeEntry<R>], n: usize, label: impl Fn(&R) -> Result<L>) -> Result<SubMeasurement<L>> {
    let outcomes = entries.iter().map(|e| label(&e.label)).collect::<Result<Vec<_>>>()?;
    let ops = entries.iter().map(|e| matrix_in(&e.op, n)).collect::<Result<Vec<_>>>()?;
    if ops.is_empty() {
        return Err(Error::Strategy("family without outcomes".into()));
    }
    SubMeasurement::new_unchecked(outcomes, ops)
}

impl FamiliesRepr {
    pub fn of(field: &Field, f: &QuantumFamilies) -> Self {
        FamiliesRepr {
            points: f
                .points
                .iter()
                .map(|(u, g)| FamilyEntry { question: elems_out(field, u), outcomes: family_out(g, |a| elem_out(field, *a)) })
                .collect(),
            axis: f
                .axis
                .iter()
                .map(|(l, g)| FamilyEntry { question: axis_out(field, l), outcomes: family_out(g, |p| elems_out(field, &p.coeffs)) })
                .collect(),
            diag: f
                .diag
                .iter()
                .map(|(l, g)| FamilyEntry { question: diag_out(field, l), outcomes: family_out(g, |a| answer_out(field, a)) })
                .collect(),
        }
    }

    pub fn build(&self, field: &Field, m: usize, n: usize) -> Result<QuantumFamilies> {
        let mut out = QuantumFamilies::default();
        for e in &self.points {
            let u = elems_in(field, &e.question)?;
            if u.len() != m {
                return Err(Error::Strategy("point of wrong length".into()));
            }
            out.points.insert(u, family_in(&e.outcomes, n, |a| elem_in(field, a))?);
        }
        for e in &self.axis {
            let l = axis_in(field, m, &e.question)?;
            out.axis.insert(l, family_in(&e.outcomes, n, |p| Ok(UniPoly { coeffs: elems_in(field, p)? }))?);
        }
        for e in &self.diag {
            let l = diag_in(field, m, &e.question)?;
            out.diag.insert(l, family_in(&e.outcomes, n, |a| answer_in(field, a))?);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StrategyBody {
    Classical {
        mixture: Vec<MixtureEntry>,
    },
    Quantum {
        dims: [usize; 2],
        /// `psi` row-major over `i * db + j`.
        state: MatrixRepr,
        #[serde(default)]
        symmetric: bool,
        #[serde(default)]
        projective: bool,
        /// One family set (shared) or two (roles A, B).
        roles: Vec<FamiliesRepr>,
    },
}

/// On-disk strategy: a header plus classical tables or quantum operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyFile {
    pub field: FieldSpec,
    pub m: usize,
    pub d: usize,
    #[serde(flatten)]
    pub body: StrategyBody,
}

/// A validated strategy.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Classical(Vec<(Rational, ClassicalStrategy)>),
    Quantum(QuantumStrategy),
}

impl Strategy {
    pub fn m(&self) -> usize {
        match self {
            Strategy::Classical(mix) => mix[0].1.m,
            Strategy::Quantum(s) => s.m,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Strategy::Classical(mix) => mix[0].1.d,
            Strategy::Quantum(s) => s.d,
        }
    }

    /// Quantum form; mixtures are embedded with shared randomness.
    pub fn to_quantum(&self) -> Result<QuantumStrategy> {
        match self {
            Strategy::Classical(mix) => embed_classical(mix),
            Strategy::Quantum(s) => Ok(s.clone()),
        }
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Strategy(format!("bad weight {s:?}"));
    let r = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (i64, i64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if b == 0 {
                return Err(bad());
            }
            Rational::new(a, b)
        }
        None => Rational::from_integer(s.trim().parse().map_err(|_| bad())?),
    };
    if r < Rational::from_integer(0) {
        return Err(bad());
    }
    Ok(r)
}

fn two_roles<T: Clone>(v: &[T]) -> Result<[T; 2]> {
    match v {
        [a] => Ok([a.clone(), a.clone()]),
        [a, b] => Ok([a.clone(), b.clone()]),
        _ => Err(Error::Strategy(format!("expected 1 or 2 role entries, got {}", v.len()))),
    }
}

impl StrategyFile {
    /// Builds and validates the strategy and its field.
    pub fn load(&self) -> Result<(Field, Strategy)> {
        let field = self.field.build()?;
        let (m, d) = (self.m, self.d);
        if m == 0 {
            return Err(Error::Strategy("m must be positive".into()));
        }
        let strat = match &self.body {
            StrategyBody::Classical { mixture } => {
                if mixture.is_empty() {
                    return Err(Error::Strategy("empty mixture".into()));
                }
                let mut mix = Vec::new();
                for e in mixture {
                    let w = parse_rational(&e.weight)?;
                    let [a, b] = two_roles(&e.roles)?;
                    let s = ClassicalStrategy { m, d, roles: [a.build(&field, m)?, b.build(&field, m)?] };
                    s.validate(&field)?;
                    mix.push((w, s));
                }
                let total: Rational = mix.iter().map(|(w, _)| *w).sum();
                if total != Rational::from_integer(1) {
                    return Err(Error::Strategy(format!("mixture weights sum to {total}")));
                }
                Strategy::Classical(mix)
            }
            StrategyBody::Quantum { dims, state, symmetric, projective, roles } => {
                let [da, db] = *dims;
                if state.len() != da * db {
                    return Err(Error::Dimension(format!("state has {} entries, need {}", state.len(), da * db)));
                }
                let psi = CVec::from_iterator(da * db, state.iter().map(|z| Complex64::new(z[0], z[1])));
                let st = BipartiteState::new(da, db, psi)?;
                let [ra, rb] = two_roles(roles)?;
                let s = QuantumStrategy {
                    m,
                    d,
                    state: st,
                    roles: [ra.build(&field, m, da)?, rb.build(&field, m, db)?],
                    symmetric: *symmetric,
                    projective: *projective,
                };
                s.validate()?;
                Strategy::Quantum(s)
            }
        };
        Ok((field, strat))
    }

    pub fn classical(field: &Field, mix: &[(Rational, ClassicalStrategy)]) -> Self {
        let (m, d) = (mix[0].1.m, mix[0].1.d);
        let mixture = mix
            .iter()
            .map(|(w, s)| {
                let roles = if s.roles[0] == s.roles[1] {
                    vec![TablesRepr::of(field, &s.roles[0])]
                } else {
                    s.roles.iter().map(|t| TablesRepr::of(field, t)).collect()
                };
                MixtureEntry { weight: w.to_string(), roles }
            })
            .collect();
        StrategyFile { field: FieldSpec::of(field), m, d, body: StrategyBody::Classical { mixture } }
    }

    pub fn quantum(field: &Field, s: &QuantumStrategy) -> Self {
        let roles = if s.roles[0] == s.roles[1] {
            vec![FamiliesRepr::of(field, &s.roles[0])]
        } else {
            s.roles.iter().map(|f| FamiliesRepr::of(field, f)).collect()
        };
        let state = s.state.psi.iter().map(|z| [z.re, z.im]).collect();
        StrategyFile {
            field: FieldSpec::of(field),
            m: s.m,
            d: s.d,
            body: StrategyBody::Quantum { dims: [s.state.da, s.state.db], state, symmetric: s.symmetric, projective: s.projective, roles },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Strategy(format!("strategy file: {e}")))
    }
}

/// Rounds to [`FLOAT_DIGITS`] significant digits.
pub fn round_float(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{:.*e}", FLOAT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn canonical_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_float(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical_value).collect()),
        Value::Object(o) => {
            let sorted: BTreeMap<String, Value> = o.into_iter().map(|(k, v)| (k, canonical_value(v))).collect();
            Value::Object(sorted.into_iter().collect())
        }
        v => v,
    }
}

/// Pretty JSON with sorted keys and floats rounded to fixed precision; non-finite floats become `null`.
pub fn to_canonical_json<T: Serialize>(x: &T) -> Result<String> {
    let v = serde_json::to_value(x).map_err(|e| Error::Param(format!("serialization: {e}")))?;
    let mut s = serde_json::to_string_pretty(&canonical_value(v)).map_err(|e| Error::Param(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// One audited round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub subtest: Subtest,
    /// Role that received the line; absent for the self-consistency test.
    pub role: Option<crate::protocol::Role>,
    pub questions: [QuestionRepr; 2],
    pub answers: [AnswerRepr; 2],
    pub accept: bool,
    pub mass: String,
}

/// Transcript of a deterministic strategy over the given rounds.
pub fn transcript(field: &Field, params: &TestParams, s: &ClassicalStrategy, rounds: &[RoundSample]) -> Result<Vec<TranscriptLine>> {
    use crate::protocol::Role;
    rounds
        .iter()
        .map(|r| {
            let answers = [s.answer(Role::A, r.question(Role::A))?, s.answer(Role::B, r.question(Role::B))?];
            let accept = verdict(field, params, r, &answers)?;
            Ok(TranscriptLine {
                subtest: r.subtest,
                role: r.line_role,
                questions: [question_out(field, &r.questions[0]), question_out(field, &r.questions[1])],
                answers: [answer_out(field, &answers[0]), answer_out(field, &answers[1])],
                accept,
                mass: r.mass.to_string(),
            })
        })
        .collect()
}

/// JSON-lines rendering of a transcript.
pub fn transcript_jsonl(lines: &[TranscriptLine]) -> Result<String> {
    let mut out = String::new();
    for l in lines {
        out.push_str(&serde_json::to_string(l).map_err(|e| Error::Param(format!("serialization: {e}")))?);
        out.push('\n');
    }
    Ok(out)
}
