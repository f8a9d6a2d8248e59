//! Acceptance suite: one line per criterion, nonzero exit if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use pvarsym::harness::{builtin_suite, run_experiment, ExperimentReport, Outcome, RunOptions, EXPERIMENT_IDS};
use pvarsym::pvar::{pvar_bruteforce, pvar_exact};
use pvarsym::RandomState;
use quadrature::double_exponential;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma;

struct Line {
    ok: bool,
    detail: String,
}

fn line(ok: bool, detail: impl Into<String>) -> Line {
    Line { ok, detail: detail.into() }
}

fn opts(out: &std::path::Path, workers: usize) -> RunOptions {
    RunOptions { workers, out: Some(out.to_path_buf()), ..RunOptions::default() }
}

fn m(r: &ExperimentReport, name: &str) -> f64 {
    r.metric(name).unwrap_or_else(|| panic!("{} has no metric {name}", r.id))
}

fn failed_checks(r: &ExperimentReport) -> String {
    let bad: Vec<String> = r
        .checks
        .iter()
        .filter(|c| c.outcome != Outcome::Pass)
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing checks: {}", bad.join(", "))
    }
}

/// Max over all partitions containing both endpoints, by enumeration.
fn naive_pvar(v: &[Vec<f64>], p: f64) -> f64 {
    let n = v.len();
    let inner = n - 2;
    let mut best = 0.0f64;
    for mask in 0u32..(1 << inner) {
        let mut prev = 0;
        let mut s = 0.0;
        for j in 1..n {
            if j == n - 1 || mask & (1 << (j - 1)) != 0 {
                let d: f64 = v[j].iter().zip(&v[prev]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                s += d.powf(p);
                prev = j;
            }
        }
        best = best.max(s);
    }
    best
}

fn random_sequence(rng: &mut RandomState, i: usize) -> Vec<Vec<f64>> {
    let n = rng.random_range(2..=12);
    let d = 1 + i % 2;
    (0..n).map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect()
}

fn c1_pvar_oracle(r: &ExperimentReport) -> Line {
    let mut rng = RandomState::new(7);
    let mut mismatches = 0;
    let mut oracle_gap = 0.0f64;
    for i in 0..500 {
        let v = random_sequence(&mut rng, i);
        for p in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let e = pvar_exact(&v, p).unwrap().value;
            if e != pvar_bruteforce(&v, p).unwrap().value {
                mismatches += 1;
            }
            let o = naive_pvar(&v, p);
            oracle_gap = oracle_gap.max((e - o).abs() / o.max(1e-300));
        }
    }
    let ok = r.verdict == Outcome::Pass
        && m(r, "mismatches") == 0.0
        && m(r, "comparisons") == 2500.0
        && mismatches == 0
        && oracle_gap <= 1e-12
        && r.runtime_secs < 60.0;
    line(
        ok,
        format!(
            "harness mismatches {} of {}; local mismatches {mismatches} of 2500; max rel gap to enumeration {oracle_gap:.1e}; {:.1} s",
            m(r, "mismatches"),
            m(r, "comparisons"),
            r.runtime_secs
        ),
    )
}

fn c2_stable(r: &ExperimentReport) -> Line {
    let g = m(r, "growth_ratio[p=1]");
    let ok = r.verdict == Outcome::Pass && g >= 1.2 && r.runtime_secs < 300.0;
    line(ok, format!("growth ratio at p=1 {g:.4}, at p=1.5 {:.4}; {:.1} s{}", m(r, "growth_ratio[p=1.5]"), r.runtime_secs, failed_checks(r)))
}

fn index_line(r: &ExperimentReport, target: f64, tol: f64, max_secs: f64) -> Line {
    let v = m(r, "v_hat");
    let ok = r.verdict == Outcome::Pass && (v - target).abs() <= tol && r.runtime_secs < max_secs;
    line(ok, format!("v_hat {v} (target {target} +- {tol}); {:.1} s{}", r.runtime_secs, failed_checks(r)))
}

fn c4_stablelike(r: &ExperimentReport) -> Line {
    // a(x) = 0.3 + 0.2 sin^2 x: twice the sup is 1.0, twice a(0) is 0.6
    let unif_target = 2.0 * (0.3 + 0.2);
    let loc_target = 2.0 * 0.3;
    let (u, l) = (m(r, "beta_unif"), m(r, "beta_loc"));
    let ok = r.verdict == Outcome::Pass && (u - unif_target).abs() <= 0.05 && (l - loc_target).abs() <= 0.05;
    line(ok, format!("beta_unif {u:.5} (target {unif_target}), beta_loc {l:.5} (target {loc_target})"))
}

fn c5_gbm_mc(r: &ExperimentReport) -> Line {
    let (x, xi) = (1.0f64, 2.0f64);
    let exact = x * x * xi * xi / 2.0;
    let err = (m(r, "estimate_re") - exact).hypot(m(r, "estimate_im"));
    let ok = r.verdict == Outcome::Pass && err <= 0.2 && r.runtime_secs < 120.0;
    line(ok, format!("estimate {:.5}{:+.5}i vs {exact}, error {err:.4}; {:.1} s", m(r, "estimate_re"), m(r, "estimate_im"), r.runtime_secs))
}

fn c6_gbm_indices(r: &ExperimentReport) -> Line {
    let (s1, s0, unb) = (m(r, "spot_x1"), m(r, "spot_x0"), m(r, "h_uniform_unbounded"));
    let ok = r.verdict == Outcome::Pass && (s1 - 2.0).abs() <= 0.05 && s0.abs() <= 0.05 && unb == 1.0;
    line(ok, format!("spot(1) {s1:.5}, spot(0) {s0:.5}, H_uniform unbounded {}", unb == 1.0))
}

fn c7_sandwich(r: &ExperimentReport) -> Line {
    let mut per_model: BTreeMap<String, [f64; 3]> = BTreeMap::new();
    for metric in &r.metrics {
        if let Some((model, kind)) = metric.name.rsplit_once('.') {
            let slot = match kind {
                "beta_loc" => 0,
                "beta_unif1" => 1,
                "beta_unif" => 2,
                _ => continue,
            };
            per_model.entry(model.to_string()).or_insert([f64::NAN; 3])[slot] = metric.value;
        }
    }
    let mut bad = Vec::new();
    let mut covered = 0;
    for (model, [loc, u1, u]) in &per_model {
        if !u.is_finite() {
            continue;
        }
        covered += 1;
        if !(*loc <= u1 + 0.05 && *u1 <= u + 0.05) {
            bad.push(format!("{model}: {loc} / {u1} / {u}"));
        }
    }
    let ok = r.verdict == Outcome::Pass && bad.is_empty() && covered >= 8;
    line(ok, format!("{covered} finite-index models checked{}", if bad.is_empty() { String::new() } else { format!("; violations {}", bad.join(", ")) }))
}

fn c8_transfer(r: &ExperimentReport) -> Line {
    let (b1, u, pe) = (m(r, "driver_beta1"), m(r, "beta_unif"), m(r, "projection_beta_unif"));
    let want = 1.0f64.max(1.2);
    let ok = r.verdict == Outcome::Pass && (u - b1).abs() <= 0.05 && (pe - want).abs() <= 0.05;
    line(ok, format!("beta_unif(X) {u:.5} vs beta1(Z) {b1:.5}; projection {pe:.5} vs {want}"))
}

/// `2 c int_0^inf (1 - exp(-y^lambda)) y^{-1-alpha} dy` via `y = e^u`.
fn d_quadrature(alpha: f64, lambda: f64) -> f64 {
    let c = gamma(1.0 + alpha) * (PI * alpha / 2.0).sin() / PI;
    let f = |u: f64| -(-(lambda * u).exp()).exp_m1() * (-alpha * u).exp();
    let mut total = 0.0;
    let mut a = -200.0;
    while a < 80.0 {
        total += double_exponential::integrate(f, a, a + 2.0, 1e-14).integral;
        a += 2.0;
    }
    2.0 * c * total
}

fn c9_d(r: &ExperimentReport) -> Line {
    let oracle = d_quadrature(1.2, 1.5);
    let v = m(r, "d_high_lambda");
    let rel = (v - oracle).abs() / oracle;
    let lo = m(r, "d_low_lambda_lower_bound");
    let ok = r.verdict == Outcome::Pass && rel <= 1e-6 && lo >= 1e6;
    line(ok, format!("D(1.5) {v} vs quadrature {oracle}, rel {rel:.1e}; D(1.0) lower bound {lo:.3e}"))
}

fn c10_h(r: &ExperimentReport) -> Line {
    let g = m(r, "growth_low_lambda");
    let ok = r.verdict == Outcome::Pass && g >= 3.0;
    line(ok, format!("growth at lambda=0.8 {g:.3}; ratio at lambda=1.5 {:.3}{}", m(r, "ratio_high_lambda"), failed_checks(r)))
}

fn c11_cogarch(r: &ExperimentReport) -> Line {
    let e = m(r, "max_rel_error");
    let ok = r.verdict == Outcome::Pass && e <= 1e-8;
    line(ok, format!("max rel error {e:.2e}; median V1 growth {:.4}", m(r, "median_v1_growth")))
}

fn c13_gou(r: &ExperimentReport) -> Line {
    let exact = (1.0 - (-2.0f64).exp()) / 2.0;
    let (v, se) = (m(r, "var"), m(r, "se"));
    let ok = r.verdict == Outcome::Pass && (v - exact).abs() <= 3.0 * se;
    line(ok, format!("Var {v:.5} vs {exact:.5}, se {se:.5}"))
}

fn c14_cantor(r: &ExperimentReport) -> Line {
    let q = |n: i32| ((2f64.powi(-n) + 3f64.powi(-n)) / 2.0).sin() * 3f64.powi(n);
    let mut bad = Vec::new();
    let mut max_gap = 0.0f64;
    for n in 5..=15 {
        let ratio = q(n + 1) / q(n);
        max_gap = max_gap.max((ratio - m(r, &format!("ratio[n={n}]"))).abs());
        if !(1.45..=1.55).contains(&ratio) {
            bad.push(format!("n={n}: {ratio:.5}"));
        }
    }
    let ok = bad.is_empty() && max_gap <= 1e-12 && r.verdict == Outcome::Pass;
    line(ok, format!("harness vs oracle gap {max_gap:.1e}; out of range: {}", if bad.is_empty() { "none".into() } else { bad.join(", ") }))
}

fn c15_determinism(first: &[ExperimentReport], out: &std::path::Path) -> Line {
    let mut diffs = Vec::new();
    for r in first {
        if r.id == "determinism" {
            continue;
        }
        let again = run_experiment(&r.id, &opts(&out.join("w4"), 4)).unwrap();
        if again.fingerprint() != r.fingerprint() {
            diffs.push(r.id.clone());
        }
    }
    let det = first.iter().find(|r| r.id == "determinism").unwrap();
    let ok = diffs.is_empty() && det.verdict == Outcome::Pass;
    line(
        ok,
        format!(
            "workers 1 vs 4 identical for {} experiments{}; repeat-run experiment {}",
            first.len() - 1 - diffs.len(),
            if diffs.is_empty() { String::new() } else { format!(", differ: {}", diffs.join(", ")) },
            det.verdict.as_str()
        ),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let suite = builtin_suite();
    assert_eq!(suite.len(), 15);
    let start = Instant::now();
    let reports: Vec<ExperimentReport> =
        EXPERIMENT_IDS.iter().map(|id| run_experiment(id, &opts(&dir.path().join("w1"), 1)).unwrap()).collect();
    let get = |id: &str| reports.iter().find(|r| r.id == id).unwrap();

    let lines: Vec<(&str, Line)> = vec![
        ("pvar-oracle", c1_pvar_oracle(get("pvar-oracle"))),
        ("stable-dichotomy-1.2", c2_stable(get("stable-dichotomy-1.2"))),
        ("bm-index", index_line(get("bm-index"), 2.0, 0.15, f64::INFINITY)),
        ("stablelike-index", c4_stablelike(get("stablelike-index"))),
        ("gbm-symbol-mc", c5_gbm_mc(get("gbm-symbol-mc"))),
        ("gbm-indices", c6_gbm_indices(get("gbm-indices"))),
        ("index-sandwich", c7_sandwich(get("index-sandwich"))),
        ("sde-transfer", c8_transfer(get("sde-transfer"))),
        ("d-dichotomy", c9_d(get("d-dichotomy"))),
        ("h-trend", c10_h(get("h-trend"))),
        ("cogarch-closedform", c11_cogarch(get("cogarch-closedform"))),
        ("bns-gvar", index_line(get("bns-gvar"), 2.0, 0.15, 300.0)),
        ("gou-gaussian", c13_gou(get("gou-gaussian"))),
        ("cantor-divergence", c14_cantor(get("cantor-divergence"))),
        ("determinism", c15_determinism(&reports, dir.path())),
    ];

    let mut failures = 0;
    for (i, (id, l)) in lines.iter().enumerate() {
        println!("criterion {:>2} {:<22} {}  {}", i + 1, id, if l.ok { "PASS" } else { "FAIL" }, l.detail);
        failures += usize::from(!l.ok);
    }
    println!("acceptance: {} of {} criteria pass ({:.0} s)", lines.len() - failures, lines.len(), start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
