//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest harness so
//! the lines always reach stdout; exits nonzero when any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lidtest_core::diagnostics::base_case;
use lidtest_core::gen;
use lidtest_core::linalg::{random_povm, random_unit_vector};
use lidtest_core::measure::{consistency, cross_distance, BipartiteState, SubMeasurement};
use lidtest_core::naimark::{dilate, dilate_state, naimark_dilate};
use lidtest_core::orthogonalize::{orthogonalize, scalar_trunc_inequality_check};
use lidtest_core::pasting::{
    complete_slices, distinct_tuples, pasted_measurement, scalar_ineq_check, telescoping_residual, tv_distance_bound_check, PastingParams,
};
use lidtest_core::poly::{agreement_fraction, enumerate_polyspace, points, PolySpace};
use lidtest_core::protocol::{Rational, TestParams};
use lidtest_core::sdp::{build_instance, improve, solve, solve_barrier, SdpOptions};
use lidtest_core::spectral::{variance_report, HypercubeGraph};
use lidtest_core::strategy::{
    axis_loss_line_accounting, embed_classical, example_1_5, max_agreement, pass_probabilities_classical, pass_probabilities_quantum,
};
use lidtest_core::{Fe, Field, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CHAR_TOL: f64 = 1e-10;
const CHAR_TIME: Duration = Duration::from_secs(1);
const SZ_TIME: Duration = Duration::from_secs(30);
const EIGEN_TOL: f64 = 1e-10;
const POINCARE_TOL: f64 = 1e-9;
const EXAMPLE_TIME: Duration = Duration::from_secs(60);
const NAIMARK_TOL: f64 = 1e-9;
const PROJECTIVITY_TOL: f64 = 1e-8;
const BOUND_TOL: f64 = 1e-7;
const GAP_TOL: f64 = 1e-6;
const SLACK_TOL: f64 = 1e-5;
const ORACLE_TOL: f64 = 1e-7;
const SDP_TIME: Duration = Duration::from_secs(120);
const TELESCOPE_TOL: f64 = 1e-9;
const GRID: usize = 10_000;

type Verdict = Result<(bool, String)>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn character_sums() -> Verdict {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for q in [2, 3, 4, 5, 7, 8, 9] {
        let f = Field::of_order(q)?;
        for a in f.elements() {
            let s = f.character_sum(a);
            let target = Complex64::new(if a.is_zero() { 1.0 } else { 0.0 }, 0.0);
            worst = worst.max((s - target).norm());
        }
    }
    let dt = t0.elapsed();
    Ok((worst <= CHAR_TOL && dt < CHAR_TIME, format!("max deviation {worst:.2e}, {dt:?}")))
}

fn schwartz_zippel() -> Verdict {
    let t0 = Instant::now();
    let mut pairs = 0usize;
    let mut violations = 0usize;
    for (m, q, d) in [(1, 5, 2), (2, 3, 1), (2, 4, 1)] {
        let f = Field::of_order(q)?;
        let all = enumerate_polyspace(&f, m, d)?;
        let bound = Rational::new((m * d) as i64, q as i64);
        for (i, g) in all.iter().enumerate() {
            for h in &all[i + 1..] {
                pairs += 1;
                if agreement_fraction(&f, g, h)? > bound {
                    violations += 1;
                }
            }
        }
    }
    let dt = t0.elapsed();
    Ok((violations == 0 && dt < SZ_TIME, format!("{pairs} pairs, {violations} violations, {dt:?}")))
}

fn hypercube_spectrum() -> Verdict {
    let mut worst_res: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for (m, q) in [(1, 2), (2, 2), (2, 3), (3, 2)] {
        let f = Field::of_order(q)?;
        let g = HypercubeGraph::new(&f, m)?;
        let big_m = g.order() as f64;
        let sys = g.character_eigensystem();
        let (res, gram) = g.verify_eigensystem(&sys);
        let formula = sys.iter().map(|e| (e.eigenvalue - (m - e.weight) as f64 / (m as f64 * big_m)).abs()).fold(0.0, f64::max);
        worst_res = worst_res.max(res).max(gram).max(formula);
        worst_gap = worst_gap.max((g.spectral_gap() - 1.0 / (m as f64 * big_m)).abs());
    }
    Ok((worst_res <= EIGEN_TOL && worst_gap <= EIGEN_TOL, format!("eigen residual {worst_res:.2e}, gap error {worst_gap:.2e}")))
}

fn poincare() -> Verdict {
    let f = Field::of_order(3)?;
    let g = HypercubeGraph::new(&f, 2)?;
    let mut fails = 0;
    let mut worst = f64::INFINITY;
    for seed in 0..200 {
        let mut r = rng(seed);
        let dim = 2 + (seed as usize % 2);
        let ops = gen::random_contractions(g.order(), dim, &mut r);
        let st = BipartiteState::new(dim, dim, random_unit_vector(dim * dim, &mut r))?;
        let v = variance_report(&g, &ops, &st)?;
        let margin = 2.0 * v.local - v.global;
        worst = worst.min(margin);
        if margin < -POINCARE_TOL {
            fails += 1;
        }
    }
    Ok((fails == 0, format!("200 instances, {fails} failures, min margin {worst:.3e}")))
}

fn honest_completeness() -> Verdict {
    let f = Field::of_order(4)?;
    let tp = TestParams::new(2, 1);
    let mut r = rng(5);
    let zero = Rational::from_integer(0);
    let mut bad = 0;
    for _ in 0..20 {
        let (_, s) = gen::random_honest(&f, 2, 1, &mut r)?;
        let g = pass_probabilities_classical(&f, &tp, &s)?;
        if g.eps != zero || g.delta != zero || g.gamma != zero {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("20 honest strategies, {bad} with nonzero failure")))
}

fn example_reproduction() -> Verdict {
    let t0 = Instant::now();
    let mut ok = true;
    let mut notes = vec![];
    for (m, q, d) in [(2, 5, 1), (3, 4, 1)] {
        let f = Field::of_order(q)?;
        let s = example_1_5(&f, m, d)?;
        let tp = TestParams::new(m, d);
        let eps = axis_loss_line_accounting(&f, &tp, &s)?;
        let agree = max_agreement(&f, m, d, &s.roles[0].points)?;
        let target = Rational::new(1, m as i64);
        let bound = Rational::from_integer(1) - Rational::from_integer(m as i64) * target + Rational::new(d as i64 + 1, q as i64);
        ok &= eps == target && agree <= bound;
        notes.push(format!("({m},{q},{d}): eps {eps}, agreement {agree} <= {bound}"));
    }
    let dt = t0.elapsed();
    Ok((ok && dt < EXAMPLE_TIME, format!("{}, {dt:?}", notes.join("; "))))
}

fn naimark() -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut r = rng(1000 + seed);
        let n = 1 + r.random_range(0..8usize);
        let k = 1 + r.random_range(0..5usize);
        let labels: Vec<usize> = (0..k).collect();
        let a = SubMeasurement::new(labels.clone(), random_povm(n, k, &mut r))?;
        let b = SubMeasurement::new(labels, random_povm(n, k, &mut r))?;
        let st = BipartiteState::new(n, n, random_unit_vector(n * n, &mut r))?;
        let (ah, bh, sh) = naimark_dilate(std::slice::from_ref(&a), std::slice::from_ref(&b), &st)?;
        for (x, xh) in a.ops.iter().zip(&ah[0].ops) {
            for (y, yh) in b.ops.iter().zip(&bh[0].ops) {
                worst = worst.max((st.expect(x, y) - sh.expect(xh, yh)).abs());
            }
        }
    }
    // A_0 = A_1 = I/2: state distance 0 before dilation, 1 after; consistency stays 1/2
    let n = 2;
    let half = lidtest_core::linalg::eye(n) * Complex64::new(0.5, 0.0);
    let a = SubMeasurement::new(vec![0, 1], vec![half.clone(), half])?;
    let plus = lidtest_core::linalg::CVec::from_element(2, Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let dl = dilate(&a, Some(&plus))?;
    let st = BipartiteState::new(n, n, random_unit_vector(n * n, &mut rng(7)))?;
    let sh = dilate_state(&st, &plus, &plus)?;
    let before = cross_distance(&[(1.0, &a, &a)], &st)?;
    let after = cross_distance(&[(1.0, &dl.family, &dl.family)], &sh)?;
    let cons = (consistency(&[(1.0, &a, &a)], &st)?, consistency(&[(1.0, &dl.family, &dl.family)], &sh)?);
    let ok = worst <= NAIMARK_TOL && before.abs() <= NAIMARK_TOL && after >= 1.0 - NAIMARK_TOL;
    Ok((
        ok,
        format!(
            "100 pairs, max deviation {worst:.2e}; example: state distance {before:.1e} -> {after:.6}, consistency {:.3} -> {:.3}",
            cons.0, cons.1
        ),
    ))
}

fn orthogonalization() -> Verdict {
    let mut fails = 0;
    let (mut max_zeta, mut min_margin, mut max_proj): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    let mut count = 0;
    let mut seed = 0;
    while count < 100 {
        let mut r = rng(2000 + seed);
        seed += 1;
        let n = 2 + r.random_range(0..15usize);
        let k = 2 + r.random_range(0..3usize).min(n - 1);
        let eta = 0.1 * r.random::<f64>();
        let ops = gen::near_projective(n, k, eta, &mut r);
        let a = SubMeasurement::new((0..k).collect::<Vec<_>>(), ops.clone())?;
        let b = SubMeasurement::new((0..k).collect(), gen::conj_ops(&ops))?;
        let st = BipartiteState::max_entangled(n);
        let out = orthogonalize(&a, &b, &st)?;
        if out.zeta > 0.25 {
            continue;
        }
        count += 1;
        let s = out.stats;
        let z4 = out.zeta.powf(0.25);
        max_zeta = max_zeta.max(out.zeta);
        max_proj = max_proj.max(s.projectivity_residual);
        min_margin = min_margin.min(84.0 * z4 - s.distance);
        if s.projectivity_residual > PROJECTIVITY_TOL || s.distance > 84.0 * z4 + BOUND_TOL || s.q_completeness < 1.0 - 11.0 * z4 - BOUND_TOL {
            fails += 1;
        }
    }
    Ok((fails == 0, format!("100 pairs, max zeta {max_zeta:.3e}, projectivity {max_proj:.1e}, min margin {min_margin:.3e}, {fails} failures")))
}

fn sdp() -> Verdict {
    let t0 = Instant::now();
    let f = Field::of_order(3)?;
    let opts = SdpOptions::default();
    let (mut gap, mut slack, mut oracle_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for seed in 0..50u64 {
        let mut r = rng(3000 + seed);
        let n = 2 + (seed as usize % 7);
        let (inst, commuting) = if seed % 2 == 0 {
            (build_instance(&f, &gen::random_points_strategy(&f, 1, 1, n, &mut r)?)?, false)
        } else {
            (build_instance(&f, &embed_classical(&gen::noisy_mixture(&f, 1, 1, n, &mut r)?)?)?, true)
        };
        let sol = if commuting { solve_barrier(&inst, &opts)? } else { solve(&inst, &opts)? };
        gap = gap.max(sol.gap);
        slack = slack.max(sol.slackness);
        if commuting {
            let o = inst.diagonal_oracle().expect("embedded mixtures are diagonal");
            oracle_err = oracle_err.max((sol.dual - o).abs());
        }
    }
    let dt = t0.elapsed();
    let ok = gap <= GAP_TOL && slack <= SLACK_TOL && oracle_err <= ORACLE_TOL && dt < SDP_TIME;
    Ok((ok, format!("50 instances, gap {gap:.2e}, slackness {slack:.2e}, oracle error {oracle_err:.2e}, {dt:?}")))
}

fn self_improvement() -> Verdict {
    let f = Field::of_order(3)?;
    let tp = TestParams::new(1, 1);
    let mut fails = 0;
    let mut min_margin = f64::INFINITY;
    for seed in 0..25u64 {
        let mut r = rng(4000 + seed);
        let s = gen::rotated_mixture(&f, 1, 1, 2 + (seed as usize % 3), &mut r)?;
        let good = pass_probabilities_quantum(&f, &tp, &s)?;
        let g = base_case(&s, 1)?;
        let imp = improve(&f, &s, &g, &good, &SdpOptions::default())?;
        let rep = &imp.report;
        let margins = [rep.completeness.margin, rep.consistency.margin, rep.self_consistency.margin, rep.boundedness.margin];
        let m = margins.iter().copied().fold(f64::INFINITY, f64::min);
        min_margin = min_margin.min(m);
        if imp.h.validate().is_err() || m < -BOUND_TOL {
            fails += 1;
        }
    }
    Ok((fails == 0, format!("25 instances, min margin {min_margin:.3e}, {fails} failures")))
}

fn pasting() -> Verdict {
    let (m, q, d, k) = (1, 5, 1, 3);
    let f = Field::of_order(q)?;
    let mut r = rng(5000);
    let slices = gen::random_slices(&f, m, d, 3, &mut r)?;
    let ghat = complete_slices(&slices)?;
    let mut tele: f64 = 0.0;
    let all: Vec<Vec<Fe>> = points(&f, k).collect();
    for xs in &all {
        tele = tele.max(telescoping_residual(&ghat, xs)?);
    }
    let mut honest_ok = true;
    for _ in 0..5 {
        let h = gen::random_poly(&PolySpace::new(&f, m + 1, d)?, &mut r);
        let out = pasted_measurement(&f, &gen::honest_slices(&f, &h, 2)?, d, &PastingParams::new(k))?;
        honest_ok &= out.outcomes == vec![h.clone()] && (&out.ops[0] - lidtest_core::linalg::eye(2)).norm() < TELESCOPE_TOL;
    }
    let mut tv_ok = true;
    let mut tv_notes = vec![];
    for kk in 1..=q as usize {
        let t = tv_distance_bound_check(q, kk)?;
        tv_ok &= t.exact <= t.pair_bound && (kk != 2 || t.exact == t.pair_bound);
        tv_notes.push(format!("k={kk}: {} <= {}", t.exact, t.pair_bound));
    }
    let ok = tele <= TELESCOPE_TOL && honest_ok && tv_ok && distinct_tuples(&f, k)?.len() == 60;
    Ok((ok, format!("{} tuples, telescoping {tele:.1e}, honest exact {honest_ok}, TV {}", all.len(), tv_notes.join(", "))))
}

fn scalar_lemmas() -> Verdict {
    let side = (GRID as f64).sqrt() as usize;
    let mut trunc_bad = 0;
    for i in 0..side {
        let x = i as f64 / (side - 1) as f64;
        for j in 0..side {
            let delta = 0.5 * (j + 1) as f64 / side as f64;
            if !scalar_trunc_inequality_check(x, delta) {
                trunc_bad += 1;
            }
        }
    }
    let mut ineq_bad = 0;
    for d in 1..=10u32 {
        for i in 0..GRID {
            if !scalar_ineq_check(i as f64 / (GRID - 1) as f64, d) {
                ineq_bad += 1;
            }
        }
    }
    Ok((trunc_bad == 0 && ineq_bad == 0, format!("trunc: {trunc_bad}/{} violations, lambda: {ineq_bad}/{} violations", side * side, 10 * GRID)))
}

fn cli_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_lidtest");
    let dir = std::env::temp_dir().join(format!("lidtest-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| lidtest_core::Error::Param(e.to_string()))?;
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "seed = 11\ninstances = 3\n[params]\nm = 1\nq = 3\nd = 1\nk = 2\n[run_test]\nmethod = \"both\"\nsamples = 3000\n")
        .map_err(|e| lidtest_core::Error::Param(e.to_string()))?;
    let mut same = 0;
    let mut worker_free = 0;
    let cmds = ["run-test", "round-povm", "soundness-report", "spectrum", "sdp", "paste"];
    let body = |out: &[u8]| serde_json::from_slice::<serde_json::Value>(out).ok().map(|v| v["report"].clone());
    for c in cmds {
        let run = |workers: &str| Command::new(bin).args([c, "--config", cfg.to_str().unwrap_or(""), "--workers", workers]).output();
        if let (Ok(a), Ok(b), Ok(one)) = (run("3"), run("3"), run("1")) {
            if a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty() {
                same += 1;
            }
            if body(&a.stdout).is_some() && body(&a.stdout) == body(&one.stdout) {
                worker_free += 1;
            }
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    let n = cmds.len();
    Ok((same == n && worker_free == n, format!("{same}/{n} commands byte-identical across reruns, {worker_free}/{n} reports independent of worker count")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 13] = [
        ("character sums", character_sums),
        ("Schwartz-Zippel exhaustive", schwartz_zippel),
        ("hypercube spectrum", hypercube_spectrum),
        ("Poincaré variance", poincare),
        ("honest completeness", honest_completeness),
        ("line-dropping example", example_reproduction),
        ("Naimark dilation", naimark),
        ("orthogonalization", orthogonalization),
        ("SDP", sdp),
        ("self-improvement", self_improvement),
        ("pasting", pasting),
        ("scalar lemmas", scalar_lemmas),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
