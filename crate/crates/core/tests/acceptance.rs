//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p olla-core --test acceptance`.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use olla_core::bounds::{
    exact_binomial_tail, left_tail_bound, max_distinct_arms, required_samples, right_tail_bound,
    ExplorationParams, Tail,
};
use olla_core::harness::{self, ExperimentConfig, MetricsReport};
use olla_core::policies::{OllaPolicy, SwitchingController, ThompsonPolicy, UcbPolicy};
use olla_core::seed::derive_seed;
use olla_core::synth::{run_synth, tail_play_counts, SynthConfig, SyntheticBandit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEVEN: [f64; 7] = [0.98, 0.96, 0.93, 0.90, 0.85, 0.78, 0.70];
const MASTER: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn synth(policy: &str, trials: u32) -> SynthConfig {
    SynthConfig::from_toml_str(&format!(
        "arm_success = {SEVEN:?}\nbeta = 0.9\nepsilon = 0.05\ndelta = 0.05\n\
         policy = \"{policy}\"\ntrials = {trials}\nseed = {MASTER}\n"
    ))
    .expect("synthetic config")
}

fn sample_complexity() -> Outcome {
    let p = ExplorationParams::new(0.9, 0.05, 0.05, 3).unwrap();
    let n = required_samples(&p);
    let k = max_distinct_arms(3);
    outcome(
        (360..=380).contains(&n) && k == 3,
        format!(
            "N = {n} per arm (band [360, 380]), k = {k}, N*k = {}",
            n * u64::from(k)
        ),
    )
}

fn complexity_reduction() -> Outcome {
    let pbs = run_synth(&synth("pbs", 100)).unwrap();
    let me = run_synth(&synth("median_elimination", 100)).unwrap();
    let (a, b) = (
        pbs.total_exploration_samples(),
        me.total_exploration_samples(),
    );
    outcome(
        5 * a <= b,
        format!(
            "100 paired seeds: PBS {a} vs median elimination {b} samples (ratio {:.1}, need >= 5)",
            b as f64 / a as f64
        ),
    )
}

fn pac_guarantee() -> Outcome {
    let pbs = run_synth(&synth("pbs", 500))
        .unwrap()
        .epsilon_optimal_frequency();
    let fin = run_synth(&synth("final", 500))
        .unwrap()
        .epsilon_optimal_frequency();
    outcome(
        pbs >= 0.95 && fin >= 0.95,
        format!("500 trials: PBS {pbs:.3}, final {fin:.3} with true success in [0.85, 0.95] (need >= 0.95)"),
    )
}

fn tail_bounds() -> Outcome {
    // nβ is rounded to the nearest integer first when within 1e-9 of it
    let snap = |x: f64| {
        if (x - x.round()).abs() < 1e-9 {
            x.round()
        } else {
            x
        }
    };
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for n in [10u64, 50, 100, 500] {
        for i in 1..20 {
            for j in 1..20 {
                let beta = f64::from(i) * 0.05;
                let beta_l = f64::from(j) * 0.05;
                let (exact, bound) = if beta > beta_l {
                    let k = snap(n as f64 * beta).ceil() as u64;
                    (
                        exact_binomial_tail(n, beta_l, k, Tail::Right),
                        right_tail_bound(n, beta, beta_l).unwrap(),
                    )
                } else if beta < beta_l {
                    let k = snap(n as f64 * beta).floor() as u64;
                    (
                        exact_binomial_tail(n, beta_l, k, Tail::Left),
                        left_tail_bound(n, beta, beta_l).unwrap(),
                    )
                } else {
                    continue;
                };
                checked += 1;
                worst = worst.max(exact / bound);
                if exact > bound * (1.0 + 1e-9) {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{checked} grid points, {violations} violations, max exact/bound = {worst:.4}"),
    )
}

fn mab_labels(report: &MetricsReport) -> Vec<String> {
    report
        .policies
        .iter()
        .filter(|p| p.starts_with("mab"))
        .cloned()
        .collect()
}

fn bler_control(report: &MetricsReport) -> Outcome {
    let s = |l: &str| report.summary(l).expect("policy in default run");
    let (m10, m75, cl, no) = (s("mab-10"), s("mab-7.5"), s("clustering"), s("no-olla"));
    let mab: Vec<_> = mab_labels(report)
        .iter()
        .flat_map(|l| report.for_policy(l).cloned().collect::<Vec<_>>())
        .collect();
    let within = mab.iter().filter(|u| u.within_target()).count() as f64 / mab.len() as f64;
    let checks = [
        (0.07..=0.12).contains(&m10.avg_bler),
        (0.05..=0.095).contains(&m75.avg_bler),
        within >= 0.7,
        cl.avg_bler <= 0.05,
        no.avg_bler >= 0.15,
    ];
    let mark = |ok: bool| if ok { "ok" } else { "MISS" };
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "mab-10 {:.4} in [0.07, 0.12] {}; mab-7.5 {:.4} in [0.05, 0.095] {}; \
             MAB UEs at/below target {:.3} >= 0.7 {}; clustering {:.4} <= 0.05 {}; \
             no-olla {:.4} >= 0.15 {}",
            m10.avg_bler,
            mark(checks[0]),
            m75.avg_bler,
            mark(checks[1]),
            within,
            mark(checks[2]),
            cl.avg_bler,
            mark(checks[3]),
            no.avg_bler,
            mark(checks[4])
        ),
    )
}

fn throughput_order(report: &MetricsReport) -> Outcome {
    let t = |l: &str| report.summary(l).unwrap().avg_throughput_mbps;
    let (m10, no, cl) = (t("mab-10"), t("no-olla"), t("clustering"));
    outcome(
        m10 > no && no > cl,
        format!("mab-10 {m10:.4} > no-olla {no:.4} > clustering {cl:.4} Mbps"),
    )
}

fn conservative_convergence() -> Outcome {
    const SEEDS: u64 = 10;
    let mut fractions = [0.0f64; 2];
    for s in 0..SEEDS {
        let seed = derive_seed(MASTER, s, "index-policies");
        let policies: [Box<dyn OllaPolicy>; 2] = [
            Box::new(ThompsonPolicy::new(3, seed)),
            Box::new(UcbPolicy::new(3)),
        ];
        for (i, mut p) in policies.into_iter().enumerate() {
            let mut bandit = SyntheticBandit::new(&SEVEN, seed).unwrap();
            let counts = tail_play_counts(p.as_mut(), &mut bandit, 50_000, 10_000);
            fractions[i] += counts[0] as f64 / 10_000.0 / SEEDS as f64;
        }
    }
    let [ts, ucb] = fractions;
    outcome(
        ts > 0.9 && ucb > 0.5,
        format!(
            "share of arm -L in last 10k of 50k steps, mean of {SEEDS} seeds: \
             Thompson {ts:.3} (> 0.9), UCB {ucb:.3} (> 0.5)"
        ),
    )
}

fn switching_controller() -> Outcome {
    // offset -1 succeeds with 0.93, offset 0 with 0.88
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER, 0, "switch"));
    let mut c = SwitchingController::new((-1, 0), 0.9, None);
    let mut acks = 0u64;
    let steps = 100_000u64;
    for _ in 0..steps {
        let p = if c.next_offset() == -1 { 0.93 } else { 0.88 };
        let ack = rng.random::<f64>() < p;
        acks += u64::from(ack);
        c.record(ack);
    }
    let rate = acks as f64 / steps as f64;
    outcome(
        (0.88..=0.92).contains(&rate),
        format!("achieved success {rate:.4} over {steps} steps (band [0.88, 0.92])"),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&p).unwrap())
        })
        .collect()
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let timed = |id: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (id, name, o, t.elapsed().as_secs_f64())
    };

    results.push(timed(1, "sample-complexity formula", &sample_complexity));
    results.push(timed(
        2,
        "complexity reduction vs median elimination",
        &complexity_reduction,
    ));
    results.push(timed(3, "PAC guarantee", &pac_guarantee));
    results.push(timed(4, "tail-bound soundness", &tail_bounds));

    let tmp = tempfile::tempdir().expect("temp dir");
    let config = ExperimentConfig::bundled();
    let start = Instant::now();
    let (run_a, _, _) = harness::run_to_dir(&config, Some(&tmp.path().join("a"))).unwrap();
    let sim_secs = start.elapsed().as_secs_f64();
    let report = run_a.report;
    let mut r5 = timed(5, "BLER control", &|| bler_control(&report));
    r5.3 += sim_secs;
    results.push(r5);
    results.push(timed(6, "throughput ordering", &|| {
        throughput_order(&report)
    }));
    results.push(timed(
        7,
        "conservative convergence",
        &conservative_convergence,
    ));
    results.push(timed(8, "switching controller", &switching_controller));
    results.push(timed(9, "determinism", &|| {
        harness::run_to_dir(&config, Some(&tmp.path().join("b"))).unwrap();
        let (a, b) = (dir_bytes(&tmp.path().join("a")), dir_bytes(&tmp.path().join("b")));
        let s1 = run_synth(&synth("final", 50)).unwrap().outcomes_csv();
        let s2 = run_synth(&synth("final", 50)).unwrap().outcomes_csv();
        let names: Vec<&str> = a.iter().map(|f| f.0.as_str()).collect();
        outcome(
            a == b && !a.is_empty() && s1 == s2,
            format!("simulation CSVs {names:?} and synthetic outcome CSV byte-identical across two runs"),
        )
    }));

    let mut failed = 0;
    for (id, name, o, secs) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} [{id}] {name}: {} ({secs:.1}s)", o.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
