//! The six commands. Each returns a JSON body plus CSV summary rows.

use lidtest_core::diagnostics::{soundness_report as pipeline, PipelineParams};
use lidtest_core::gen;
use lidtest_core::io::{parse_rational, transcript, transcript_jsonl, PolyRepr, Strategy, StrategyFile};
use lidtest_core::linalg::{c, max_eig, random_povm, random_unit_vector, trace_re, zeros};
use lidtest_core::measure::{consistency, BipartiteState, SubMeasurement};
use lidtest_core::naimark::naimark_dilate;
use lidtest_core::orthogonalize::{orthogonalize, orthogonalize_sub};
use lidtest_core::pasting::{
    chernoff_completeness_check, complete_slices, pasted_measurement, telescoping_residual, tv_distance_bound_check, PastingParams,
};
use lidtest_core::poly::MultiPoly;
use lidtest_core::protocol::{enumerate_rounds, sample_round, verdict, Rational, Role, Subtest, TestParams};
use lidtest_core::sdp::{build_instance, solve};
use lidtest_core::spectral::{variance_report, HypercubeGraph};
use lidtest_core::strategy::{
    axis_loss_line_accounting, example_1_5, max_agreement, pass_probabilities_mixture, pass_probabilities_quantum, ClassicalStrategy,
    QuantumStrategy,
};
use lidtest_core::{Error, Fe, Field};
use rand::Rng;
use serde_json::{json, Value};

use crate::batch::{self, instance_rng};
use crate::config::{Generator, Method, PovmMode, RunConfig, SliceSource};
use crate::output::{Report, Row};
use crate::{row, CliError};

/// Monte Carlo rounds per independently seeded chunk.
const MC_CHUNK: usize = 1000;
/// Tolerance for "statistics preserved" in the Naimark batch.
const NAIMARK_TOL: f64 = 1e-9;
/// Slack in the Poincaré comparison.
const POINCARE_TOL: f64 = 1e-9;

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn field(cfg: &RunConfig) -> Result<Field, CliError> {
    let f = match &cfg.params.field {
        Some(spec) => spec.build(),
        None => Field::of_order(cfg.params.q),
    };
    f.map_err(|e| CliError::Config(format!("field: {e}")))
}

fn test_params(cfg: &RunConfig, m: usize, d: usize) -> Result<TestParams, CliError> {
    match &cfg.params.weights {
        None => Ok(TestParams::new(m, d)),
        Some(ws) => {
            let w = [parse_rational(&ws[0]), parse_rational(&ws[1]), parse_rational(&ws[2])];
            let w = w.map(|r| r.map_err(|e| CliError::Config(e.to_string())));
            let [a, b, c] = w;
            TestParams::with_weights(m, d, [a?, b?, c?]).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

/// Strategy named by the config: the file if given, else the generator (or `default`)
/// seeded for instance `i`.
fn strategy(cfg: &RunConfig, default: Generator, i: usize) -> Result<(Field, Strategy), CliError> {
    if let Some(path) = &cfg.strategy {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return Ok(StrategyFile::from_json(&text)?.load()?);
    }
    let f = field(cfg)?;
    let (m, d) = (cfg.params.m, cfg.params.d);
    let mut rng = instance_rng(cfg.seed, i);
    let one = Rational::from_integer(1);
    let s = match cfg.generator.unwrap_or(default) {
        Generator::Honest => Strategy::Classical(vec![(one, gen::random_honest(&f, m, d, &mut rng)?.1)]),
        Generator::Example => Strategy::Classical(vec![(one, example_1_5(&f, m, d)?)]),
        Generator::Noisy => Strategy::Classical(gen::noisy_mixture(&f, m, d, 3, &mut rng)?),
        Generator::Rotated => Strategy::Quantum(gen::rotated_mixture(&f, m, d, 3, &mut rng)?),
    };
    Ok((f, s))
}

fn generator_name(cfg: &RunConfig, default: Generator) -> Value {
    match (&cfg.strategy, cfg.generator) {
        (Some(p), _) => json!({ "file": p.display().to_string() }),
        (None, g) => json!({ "generator": g.unwrap_or(default) }),
    }
}

fn rat(r: Rational) -> Value {
    json!({ "exact": r.to_string(), "value": *r.numer() as f64 / *r.denom() as f64 })
}

fn subtest_index(s: Subtest) -> usize {
    match s {
        Subtest::Axis => 0,
        Subtest::SelfCons => 1,
        Subtest::Diag => 2,
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    rounds: [usize; 3],
    fails: [usize; 3],
}

fn accept_sample(field: &Field, tp: &TestParams, s: &Strategy, rng: &mut impl Rng) -> Result<(Subtest, bool), Error> {
    let r = sample_round(field, tp, rng);
    let ok = match s {
        Strategy::Classical(mix) => {
            let mut x: f64 = rng.random();
            let mut pick = &mix[mix.len() - 1].1;
            for (w, c) in mix {
                let p = *w.numer() as f64 / *w.denom() as f64;
                if x < p {
                    pick = c;
                    break;
                }
                x -= p;
            }
            verdict(field, tp, &r, &[pick.answer(Role::A, r.question(Role::A))?, pick.answer(Role::B, r.question(Role::B))?])?
        }
        Strategy::Quantum(q) => rng.random::<f64>() < q.accept_probability(field, &r)?,
    };
    Ok((r.subtest, ok))
}

fn monte_carlo(cfg: &RunConfig, field: &Field, tp: &TestParams, s: &Strategy) -> Result<Value, CliError> {
    let n = cfg.run_test.samples;
    let chunks = n.div_ceil(MC_CHUNK);
    let tallies = batch::run(chunks, cfg.workers, |j| -> Result<Tally, Error> {
        let mut rng = instance_rng(cfg.seed, j);
        let mut t = Tally::default();
        for _ in 0..MC_CHUNK.min(n - j * MC_CHUNK) {
            let (st, ok) = accept_sample(field, tp, s, &mut rng)?;
            t.rounds[subtest_index(st)] += 1;
            t.fails[subtest_index(st)] += usize::from(!ok);
        }
        Ok(t)
    })?;
    let mut t = Tally::default();
    for x in &tallies {
        for i in 0..3 {
            t.rounds[i] += x.rounds[i];
            t.fails[i] += x.fails[i];
        }
    }
    let est = |fails: usize, rounds: usize| {
        let p = if rounds == 0 { 0.0 } else { fails as f64 / rounds as f64 };
        let se = if rounds == 0 { 0.0 } else { (p * (1.0 - p) / rounds as f64).sqrt() };
        json!({ "rounds": rounds, "failure": p, "stderr": se })
    };
    let total_fails: usize = t.fails.iter().sum();
    Ok(json!({
        "samples": n,
        "eps": est(t.fails[0], t.rounds[0]),
        "delta": est(t.fails[1], t.rounds[1]),
        "gamma": est(t.fails[2], t.rounds[2]),
        "overall_failure": est(total_fails, n),
    }))
}

fn exact(field: &Field, tp: &TestParams, s: &Strategy) -> Result<Value, Error> {
    match s {
        Strategy::Classical(mix) => {
            let g = pass_probabilities_mixture(field, tp, mix)?;
            let fail = tp.weights[0] * g.eps + tp.weights[1] * g.delta + tp.weights[2] * g.gamma;
            Ok(json!({ "eps": rat(g.eps), "delta": rat(g.delta), "gamma": rat(g.gamma), "overall_failure": rat(fail) }))
        }
        Strategy::Quantum(q) => {
            let g = pass_probabilities_quantum(field, tp, q)?;
            Ok(json!({
                "eps": { "value": g.eps }, "delta": { "value": g.delta }, "gamma": { "value": g.gamma },
                "overall_failure": { "value": 1.0 - g.pass_probability(tp) },
            }))
        }
    }
}

fn is_guard(e: &Error) -> bool {
    matches!(e.root(), Error::Guard { .. })
}

fn z_score(exact: &Value, mc: &Value) -> Value {
    let (Some(x), Some(y), Some(se)) = (exact["value"].as_f64(), mc["failure"].as_f64(), mc["stderr"].as_f64()) else {
        return Value::Null;
    };
    if se > 0.0 {
        json!((y - x) / se)
    } else if (y - x).abs() < 1e-12 {
        json!(0.0)
    } else {
        Value::Null
    }
}

fn example_extras(field: &Field, tp: &TestParams, s: &ClassicalStrategy) -> Result<Value, Error> {
    let loss = axis_loss_line_accounting(field, tp, s)?;
    let agree = max_agreement(field, s.m, s.d, &s.roles[0].points)?;
    let bound = Rational::from_integer(1) - Rational::from_integer(s.m as i64) * loss + Rational::new(s.d as i64 + 1, field.q() as i64);
    Ok(json!({
        "axis_loss_line_accounting": rat(loss),
        "expected_axis_loss": rat(Rational::new(1, s.m as i64)),
        "max_agreement": rat(agree),
        "agreement_bound": rat(bound),
        "holds": loss == Rational::new(1, s.m as i64) && agree <= bound,
    }))
}

pub fn run_test(cfg: &RunConfig) -> Result<Report, CliError> {
    let (field, s) = strategy(cfg, Generator::Honest, 0)?;
    let tp = test_params(cfg, s.m(), s.d())?;
    let method = cfg.run_test.method;
    let ex = match method {
        Method::MonteCarlo => None,
        Method::Exact | Method::Both => Some(exact(&field, &tp, &s)?),
        Method::Auto => match exact(&field, &tp, &s) {
            Ok(v) => Some(v),
            Err(e) if is_guard(&e) => None,
            Err(e) => return Err(e.into()),
        },
    };
    let mc = match (method, &ex) {
        (Method::MonteCarlo | Method::Both, _) | (Method::Auto, None) => Some(monte_carlo(cfg, &field, &tp, &s)?),
        _ => None,
    };
    let mut body = json!({
        "source": generator_name(cfg, Generator::Honest),
        "m": s.m(), "d": s.d(), "q": field.q(),
        "weights": tp.weights.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "exact": ex, "monte_carlo": mc,
    });
    if let (Some(e), Some(m)) = (&ex, &mc) {
        body["z_scores"] = json!({
            "eps": z_score(&e["eps"], &m["eps"]),
            "delta": z_score(&e["delta"], &m["delta"]),
            "gamma": z_score(&e["gamma"], &m["gamma"]),
        });
    }
    let single = match &s {
        Strategy::Classical(mix) if mix.len() == 1 => Some(&mix[0].1),
        _ => None,
    };
    if cfg.strategy.is_none() && cfg.generator == Some(Generator::Example) {
        if let Some(c) = single {
            body["example"] = example_extras(&field, &tp, c)?;
        }
    }
    if let Some(path) = &cfg.run_test.transcript {
        let c = single.ok_or_else(|| CliError::Config("transcripts need a deterministic classical strategy".into()))?;
        let lines = transcript(&field, &tp, c, &enumerate_rounds(&field, &tp)?)?;
        std::fs::write(path, transcript_jsonl(&lines)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        body["transcript"] = json!({ "path": path.display().to_string(), "rounds": lines.len() });
    }
    let rows = [("axis", "eps"), ("self_consistency", "delta"), ("diagonal", "gamma"), ("overall", "overall_failure")]
        .iter()
        .enumerate()
        .map(|(i, (name, key))| {
            let e = ex.as_ref().map(|e| e[key]["value"].clone()).unwrap_or(Value::Null);
            let (f, se) = mc.as_ref().map_or((Value::Null, Value::Null), |m| (m[key]["failure"].clone(), m[key]["stderr"].clone()));
            let w = tp.weights.get(i).map_or("1".into(), |w| w.to_string());
            row!("subtest" => name, "weight" => w, "exact_failure" => e, "mc_failure" => f, "mc_stderr" => se)
        })
        .collect();
    Ok(Report { body, rows })
}

fn naimark_instance(cfg: &RunConfig, i: usize) -> Result<(Value, Row, bool), Error> {
    let c = &cfg.round_povm;
    let mut rng = instance_rng(cfg.seed, i);
    let labels: Vec<usize> = (0..c.outcomes).collect();
    let a = SubMeasurement::new(labels.clone(), random_povm(c.dim, c.outcomes, &mut rng))?;
    let b = SubMeasurement::new(labels, random_povm(c.dim, c.outcomes, &mut rng))?;
    let st = BipartiteState::new(c.dim, c.dim, random_unit_vector(c.dim * c.dim, &mut rng))?;
    let (ah, bh, sh) = naimark_dilate(std::slice::from_ref(&a), std::slice::from_ref(&b), &st)?;
    let mut dev: f64 = 0.0;
    for (x, xh) in a.ops.iter().zip(&ah[0].ops) {
        for (y, yh) in b.ops.iter().zip(&bh[0].ops) {
            dev = dev.max((st.expect(x, y) - sh.expect(xh, yh)).abs());
        }
    }
    let before = consistency(&[(1.0, &a, &b)], &st)?;
    let after = consistency(&[(1.0, &ah[0], &bh[0])], &sh)?;
    let projective = ah[0].is_projective() && bh[0].is_projective();
    let ok = dev <= NAIMARK_TOL && projective;
    let v = json!({ "instance": i, "dilated_dim": [sh.da, sh.db], "max_stat_deviation": dev, "consistency_before": before, "consistency_after": after, "projective": projective });
    let r = row!("instance" => i, "dilated_dim" => sh.da, "max_stat_deviation" => dev, "consistency_before" => before, "consistency_after" => after, "holds" => ok);
    Ok((v, r, ok))
}

fn ortho_instance(cfg: &RunConfig, i: usize) -> Result<(Value, Row, bool), Error> {
    let c = &cfg.round_povm;
    let mut rng = instance_rng(cfg.seed, i);
    let st = BipartiteState::max_entangled(c.dim);
    let out = if c.mode == PovmMode::Sub {
        let mut ops = gen::near_projective_real(c.dim, c.outcomes + 1, c.noise, &mut rng);
        ops.pop();
        orthogonalize_sub(&SubMeasurement::new((0..c.outcomes).collect(), ops)?, &st)?
    } else {
        let ops = gen::near_projective(c.dim, c.outcomes, c.noise, &mut rng);
        let a = SubMeasurement::new((0..c.outcomes).collect::<Vec<usize>>(), ops.clone())?;
        let b = SubMeasurement::new((0..c.outcomes).collect(), gen::conj_ops(&ops))?;
        orthogonalize(&a, &b, &st)?
    };
    let s = out.stats;
    let ok = s.distance <= s.bound + cfg.tolerances.bound;
    let v = json!({ "instance": i, "zeta": out.zeta, "flagged": out.flagged, "stats": to_value(&s), "holds": ok });
    let r = row!(
        "instance" => i, "zeta" => out.zeta, "flagged" => out.flagged, "distance" => s.distance, "bound" => s.bound,
        "q_completeness" => s.q_completeness, "projectivity_residual" => s.projectivity_residual, "holds" => ok
    );
    Ok((v, r, ok))
}

pub fn round_povm(cfg: &RunConfig) -> Result<Report, CliError> {
    let res = batch::run(cfg.instances, cfg.workers, |i| match cfg.round_povm.mode {
        PovmMode::Naimark => naimark_instance(cfg, i),
        _ => ortho_instance(cfg, i),
    })?;
    let passed = res.iter().filter(|x| x.2).count();
    let (items, rows): (Vec<Value>, Vec<Row>) = res.into_iter().map(|(v, r, _)| (v, r)).unzip();
    let body = json!({ "mode": cfg.round_povm.mode, "instances": items.len(), "passed": passed, "results": items });
    Ok(Report { body, rows })
}

fn outcome_weights(g: &SubMeasurement<MultiPoly>, field: &Field, state: &BipartiteState, role: Role) -> Value {
    let items: Vec<Value> = g
        .outcomes
        .iter()
        .zip(&g.ops)
        .map(|(h, op)| {
            let w = if role == Role::A { state.expect_left(op) } else { state.expect_right(op) };
            json!({ "poly": to_value(&PolyRepr::of(field, h)), "weight": w })
        })
        .collect();
    json!(items)
}

pub fn soundness_report(cfg: &RunConfig) -> Result<Report, CliError> {
    let (field, s) = strategy(cfg, Generator::Noisy, 0)?;
    let q: QuantumStrategy = s.to_quantum()?;
    let k = cfg.params.k;
    let pp = PipelineParams {
        k,
        pasting: PastingParams { k, regime: cfg.paste.regime, samples: cfg.paste.samples, seed: cfg.seed },
        sdp: cfg.sdp,
    };
    let (ga, gb, rep) = pipeline(&field, &q, &pp)?;
    // the pipeline may have symmetrized; weights are against the state the witness used
    let state = if rep.symmetrized { lidtest_core::strategy::symmetrize(&q)?.state } else { q.state.clone() };
    let body = json!({
        "source": generator_name(cfg, Generator::Noisy),
        "report": to_value(&rep),
        "ga": outcome_weights(&ga, &field, &state, Role::A),
        "gb": outcome_weights(&gb, &field, &state, Role::B),
    });
    let main = &rep.main;
    let rows = vec![row!(
        "m" => rep.m, "q" => rep.q, "d" => rep.d, "k" => main.k,
        "eps" => rep.goodness.eps, "delta" => rep.goodness.delta, "gamma" => rep.goodness.gamma,
        "nu" => main.nu, "vacuous" => main.vacuous,
        "consistency_a" => main.consistency_a.measured, "consistency_b" => main.consistency_b.measured,
        "self_consistency" => main.self_consistency.measured
    )];
    Ok(Report { body, rows })
}

pub fn spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let f = field(cfg)?;
    let m = cfg.params.m;
    let g = HypercubeGraph::new(&f, m)?;
    let sys = g.character_eigensystem();
    let (residual, gram) = g.verify_eigensystem(&sys);
    let big_m = g.order() as f64;
    let eig_error = sys.iter().map(|e| (e.eigenvalue - (m - e.weight) as f64 / (m as f64 * big_m)).abs()).fold(0.0, f64::max);
    let gap = g.spectral_gap();
    let predicted = 1.0 / (m as f64 * big_m);
    let dim = cfg.spectrum.dim;
    let res = batch::run(cfg.instances, cfg.workers, |i| -> Result<(Value, Row), Error> {
        let mut rng = instance_rng(cfg.seed, i);
        let ops = gen::random_contractions(g.order(), dim, &mut rng);
        let st = BipartiteState::new(dim, dim, random_unit_vector(dim * dim, &mut rng))?;
        let v = variance_report(&g, &ops, &st)?;
        let ok = v.global <= m as f64 * v.local + POINCARE_TOL;
        Ok((
            json!({ "instance": i, "local": v.local, "global": v.global, "holds": ok }),
            row!("instance" => i, "local" => v.local, "global" => v.global, "m_local" => m as f64 * v.local, "holds" => ok),
        ))
    })?;
    let passed = res.iter().filter(|(v, _)| v["holds"] == json!(true)).count();
    let (items, rows): (Vec<Value>, Vec<Row>) = res.into_iter().unzip();
    let body = json!({
        "m": m, "q": f.q(), "vertices": g.order(),
        "eigen_residual": residual, "gram_residual": gram, "eigenvalue_error": eig_error,
        "spectral_gap": gap, "predicted_gap": predicted, "gap_error": (gap - predicted).abs(),
        "laplacian_spectrum": g.laplacian_spectrum(),
        "poincare": { "instances": items.len(), "passed": passed, "results": items },
    });
    Ok(Report { body, rows })
}

pub fn sdp(cfg: &RunConfig) -> Result<Report, CliError> {
    let n = if cfg.strategy.is_some() { 1 } else { cfg.instances };
    let res = batch::run(n, cfg.workers, |i| -> Result<(Value, Row), CliError> {
        let (field, s) = strategy(cfg, Generator::Rotated, i)?;
        let q = s.to_quantum()?;
        let inst = build_instance(&field, &q)?;
        let sol = solve(&inst, &cfg.sdp)?;
        let oracle = inst.diagonal_oracle();
        let err = oracle.map(|o| (sol.dual - o).abs());
        let sm = sol.summary();
        Ok((
            json!({ "instance": i, "dim": inst.dim, "labels": inst.labels.len(), "summary": to_value(&sm), "diagonal_oracle": oracle, "oracle_error": err }),
            row!(
                "instance" => i, "dim" => inst.dim, "labels" => inst.labels.len(), "primal" => sm.primal, "dual" => sm.dual,
                "gap" => sm.gap, "slackness" => sm.slackness, "oracle_error" => err
            ),
        ))
    })?;
    let (items, rows): (Vec<Value>, Vec<Row>) = res.into_iter().unzip();
    let body = json!({ "source": generator_name(cfg, Generator::Rotated), "instances": items.len(), "results": items });
    Ok(Report { body, rows })
}

pub fn paste(cfg: &RunConfig) -> Result<Report, CliError> {
    let f = field(cfg)?;
    let (m, d, k) = (cfg.params.m, cfg.params.d, cfg.params.k);
    let n = cfg.paste.slice_dim;
    let q = f.q() as usize;
    let theta = cfg.params.theta;
    let xs: Vec<Fe> = (0..k).map(|j| Fe((j % q) as u32)).collect();
    let res = batch::run(cfg.instances, cfg.workers, |i| -> Result<(Value, Row), Error> {
        let mut rng = instance_rng(cfg.seed, i);
        let (slices, truth) = match cfg.paste.source {
            SliceSource::Random => (gen::random_slices(&f, m, d, n, &mut rng)?, None),
            SliceSource::Honest => {
                let space = lidtest_core::poly::PolySpace::new(&f, m + 1, d)?;
                let h = gen::random_poly(&space, &mut rng);
                (gen::honest_slices(&f, &h, n)?, Some(h))
            }
        };
        let params = PastingParams { k, regime: cfg.paste.regime, samples: cfg.paste.samples, seed: rng.random() };
        let h = pasted_measurement(&f, &slices, d, &params)?;
        let tele = telescoping_residual(&complete_slices(&slices)?, &xs)?;
        let total = h.total();
        let excess = max_eig(&total) - 1.0;
        let completeness = trace_re(&total) / n as f64;
        let exact = truth.map(|t| h.outcomes == vec![t] && (completeness - 1.0).abs() < 1e-9);
        // Chernoff check on the averaged slice completeness, when k >= 2d/theta
        let chernoff = if k as f64 >= 2.0 * d as f64 / theta {
            let x = slices.iter().map(|g| g.total()).fold(zeros(n), |acc, t| acc + t) / c(q as f64);
            Some(chernoff_completeness_check(&x, &BipartiteState::max_entangled(n), k, d, theta)?)
        } else {
            None
        };
        let (cv, cb) = (chernoff.as_ref().map(|r| r.value), chernoff.as_ref().map(|r| r.bound.bound));
        Ok((
            json!({ "instance": i, "outcomes": h.len(), "sum_excess": excess, "completeness": completeness, "telescoping_residual": tele, "honest_exact": exact, "chernoff": chernoff }),
            row!("instance" => i, "outcomes" => h.len(), "sum_excess" => excess, "completeness" => completeness, "telescoping_residual" => tele, "honest_exact" => exact, "chernoff_value" => cv, "chernoff_bound" => cb),
        ))
    })?;
    let tv = if k <= q { Some(tv_distance_bound_check(f.q(), k)?) } else { None };
    let (items, rows): (Vec<Value>, Vec<Row>) = res.into_iter().unzip();
    let body = json!({
        "m": m, "q": f.q(), "d": d, "k": k, "theta": theta, "regime": cfg.paste.regime, "source": cfg.paste.source,
        "tv": tv.map(|t| json!({ "exact": t.exact.to_string(), "pair_bound": t.pair_bound.to_string(), "square_bound": t.square_bound.to_string(), "holds": t.holds() })),
        "results": items,
    });
    Ok(Report { body, rows })
}
