//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use gbsm_core::approximation::{build_empirical_mdp, sample_complexity_ssa, Dataset};
use gbsm_core::bounds::BoundReport;
use gbsm_core::experiments::{child_seed, properties_trial, run_trials, ExperimentConfig, ExperimentKind, TrialRow};
use gbsm_core::mdp::{garnet_generate, GarnetConfig};
use gbsm_core::metric::{gbsm, gbsm_traced, FixedPointConfig, DEFAULT_TOL};
use gbsm_core::practical::{compute_gbsm_practical, PracticalConfig};
use gbsm_core::transport::{wasserstein1, wasserstein1_oracle, Distribution};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMAS: [f64; 3] = [0.1, 0.5, 0.9];
const MASTER_SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn full_garnet(gamma: f64, seed: u64) -> GarnetConfig {
    GarnetConfig {
        num_states: 20,
        num_actions: 5,
        branching_fraction: 0.5,
        gamma,
        reward_max: 1.0,
        seed,
    }
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize) -> Distribution {
    let mut w: Vec<f64> = (0..len)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..len)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    Distribution::new(w.iter().map(|x| x / total).collect()).unwrap()
}

fn transport_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let mut worst = 0.0_f64;
    let mut agree = 0;
    for _ in 0..500 {
        let (n, m) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let p = random_distribution(&mut rng, n);
        let q = random_distribution(&mut rng, m);
        let cost = Array2::from_shape_fn((n, m), |_| rng.random_range(0.0..3.0));
        let fast = wasserstein1(&p, &q, cost.view()).unwrap().cost;
        let slow = wasserstein1_oracle(&p, &q, cost.view()).unwrap();
        let err = (fast - slow).abs();
        worst = worst.max(err);
        agree += (err <= 1e-6) as usize;
    }
    Outcome {
        pass: agree == 500,
        detail: format!("{agree}/500 within 1e-6, max error {worst:.2e}"),
    }
}

/// The 50 metric-property triples shared by the axiom and value-gap criteria.
fn property_reports() -> Vec<BoundReport> {
    let fp = FixedPointConfig::with_tol(DEFAULT_TOL);
    (0..50)
        .map(|t| {
            let g = t % GAMMAS.len();
            let seed = child_seed(MASTER_SEED, g, t);
            let cfg = full_garnet(GAMMAS[g], 0);
            let m1 = garnet_generate(&cfg.with_seed(seed)).unwrap();
            let m2 = garnet_generate(&cfg.with_seed(seed.wrapping_add(1))).unwrap();
            let m3 = garnet_generate(&cfg.with_seed(seed.wrapping_add(2))).unwrap();
            properties_trial(&m1, &m2, &m3, &fp).unwrap()
        })
        .collect()
}

fn check_rate(reports: &[BoundReport], names: &[&str]) -> (usize, Vec<String>) {
    let mut failures = Vec::new();
    let passed = reports
        .iter()
        .filter(|r| {
            let bad: Vec<&str> = names.iter().copied().filter(|n| r.get_check(n) != Some(true)).collect();
            if !bad.is_empty() {
                failures.push(format!("trial {} (gamma {}): {}", r.trial_id, r.gamma, bad.join(",")));
            }
            bad.is_empty()
        })
        .count();
    (passed, failures)
}

fn metric_axioms(reports: &[BoundReport]) -> Outcome {
    let (passed, failures) = check_rate(reports, &["symmetry", "triangle", "identity", "cap"]);
    let worst = |name: &str| {
        reports
            .iter()
            .filter_map(|r| r.get_measurement(name))
            .fold(0.0, f64::max)
    };
    Outcome {
        pass: passed == reports.len(),
        detail: format!(
            "{passed}/{} triples; max symmetry gap {:.2e}, max triangle excess {:.2e}{}",
            reports.len(),
            worst("symmetry_gap"),
            worst("triangle_excess"),
            failure_suffix(&failures)
        ),
    }
}

fn value_gap(reports: &[BoundReport]) -> Outcome {
    let (passed, failures) = check_rate(reports, &["value_gap"]);
    Outcome {
        pass: passed == reports.len(),
        detail: format!("{passed}/{} trials contained{}", reports.len(), failure_suffix(&failures)),
    }
}

fn failure_suffix(failures: &[String]) -> String {
    if failures.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", failures.join("; "))
    }
}

fn campaign(kind: ExperimentKind) -> Vec<TrialRow> {
    let mut cfg = ExperimentConfig::new(kind, "unused.csv");
    cfg.trials = 100;
    cfg.gammas = GAMMAS.to_vec();
    cfg.garnet = full_garnet(0.9, 0);
    cfg.seed = MASTER_SEED;
    run_trials(&cfg).unwrap()
}

/// Counts trials where every named bound contains the ground truth and every
/// named check passes; errors count as failures.
fn campaign_outcome(rows: &[TrialRow], bounds: &[&str], checks: &[&str]) -> Outcome {
    let mut failures = Vec::new();
    let mut passed = 0;
    for row in rows {
        match &row.outcome {
            Ok(r) => {
                let mut bad: Vec<String> = bounds
                    .iter()
                    .filter(|b| !r.get_bound(b).is_some_and(|e| e.contained))
                    .map(|b| format!("{b} not contained"))
                    .collect();
                bad.extend(checks.iter().filter(|c| r.get_check(c) != Some(true)).map(|c| format!("{c} failed")));
                if bad.is_empty() {
                    passed += 1;
                } else {
                    failures.push(format!("trial {} (gamma {}): {}", row.trial_id, row.gamma, bad.join(",")));
                }
            }
            Err(e) => failures.push(format!("trial {} (gamma {}): error {e}", row.trial_id, row.gamma)),
        }
    }
    let per_gamma: Vec<String> = GAMMAS
        .iter()
        .map(|&g| {
            let group: Vec<&BoundReport> = rows
                .iter()
                .filter(|r| r.gamma == g)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let ratio = |name: &str| {
                let v: Vec<f64> = group
                    .iter()
                    .filter(|r| r.ground_truth > 0.0)
                    .filter_map(|r| r.get_bound(name).map(|b| b.value / r.ground_truth))
                    .collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            };
            format!("gamma {g}: mean {}/truth {:.3}", bounds[0], ratio(bounds[0]))
        })
        .collect();
    Outcome {
        pass: passed == rows.len(),
        detail: format!(
            "{passed}/{} trials; {}{}",
            rows.len(),
            per_gamma.join(", "),
            failure_suffix(&failures)
        ),
    }
}

/// Corollary-1 containment of the identity-transfer regret, plus the ordering
/// against the per-action metric. Theorem 6 and the δ-greedy transfer are
/// reported alongside.
fn policy_transfer() -> Outcome {
    let rows = campaign(ExperimentKind::Transfer);
    let mut o = campaign_outcome(&rows, &["corollary1"], &["hausdorff_le_conf"]);
    let reports: Vec<&BoundReport> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let contained = |name: &str| {
        reports
            .iter()
            .filter(|r| r.get_bound(name).is_some_and(|b| b.contained))
            .count()
    };
    let greedy = reports
        .iter()
        .filter(|r| r.get_check("greedy_contained") == Some(true))
        .count();
    o.detail = format!(
        "{}; theorem6 contained {}/{n}, corollary1 contains delta-greedy transfer {greedy}/{n}, \
         conference corollary1 contained {}/{n}",
        o.detail,
        contained("theorem6"),
        contained("corollary1_conf"),
        n = rows.len()
    );
    o
}

fn sample_complexity() -> Outcome {
    let (eps, alpha, gamma) = (0.4, 0.1, 0.5);
    let k = sample_complexity_ssa(eps, alpha, gamma, 1.0, 4).unwrap().ceil() as usize;
    let fp = FixedPointConfig::with_tol(DEFAULT_TOL);
    let mut within = 0;
    let mut worst = 0.0_f64;
    for rep in 0..200 {
        let seed = child_seed(MASTER_SEED, 0, rep);
        let m = garnet_generate(&GarnetConfig {
            num_states: 4,
            num_actions: 2,
            branching_fraction: 0.5,
            gamma,
            reward_max: 1.0,
            seed,
        })
        .unwrap();
        let m_hat = build_empirical_mdp(&m, k, seed ^ 0xabcd).unwrap();
        let err = 2.0 * gbsm(&m, &m_hat, &fp).unwrap().diagonal_max();
        worst = worst.max(err);
        within += (err <= eps) as usize;
    }
    Outcome {
        pass: within >= 180,
        detail: format!("K = {k}; {within}/200 repetitions with error <= {eps}; max error {worst:.4}"),
    }
}

fn practical_self_consistency() -> Outcome {
    let gamma = 0.9;
    let m = garnet_generate(&full_garnet(gamma, MASTER_SEED)).unwrap();
    let per_pair = 10_000;
    let data = Dataset::sample_from(&m, per_pair, MASTER_SEED);
    let cfg = PracticalConfig {
        eta1: per_pair,
        eta2: DEFAULT_TOL,
        max_iters: None,
    };
    let out = compute_gbsm_practical(&data, &m, &cfg).unwrap();
    let limit = 0.05 * m.reward_max() / (1.0 - gamma);
    let diag = out.metric.diagonal_max();
    let full = out.report.target_states.len() == 20 && out.report.source_states.len() == 20;
    Outcome {
        pass: full && diag <= limit,
        detail: format!(
            "{} tuples, {} target / {} source states, diagonal max {diag:.4} (limit {limit})",
            data.len(),
            out.report.target_states.len(),
            out.report.source_states.len()
        ),
    }
}

fn convergence_rate() -> Outcome {
    let mut worst_margin = f64::NEG_INFINITY;
    let mut passed = 0;
    let mut notes = Vec::new();
    for pair in 0..10 {
        let gamma = if pair % 2 == 0 { 0.9 } else { 0.5 };
        let seed = child_seed(MASTER_SEED, 1, pair);
        let cfg = full_garnet(gamma, seed);
        let m1 = garnet_generate(&cfg).unwrap();
        let m2 = garnet_generate(&cfg.with_seed(seed.wrapping_add(1))).unwrap();
        let stop = gbsm(&m1, &m2, &FixedPointConfig::with_tol(DEFAULT_TOL)).unwrap().iterations;
        let mut iterates = Vec::new();
        let d_final = gbsm_traced(&m1, &m2, &FixedPointConfig::with_tol(1e-12), |_, d, _| {
            iterates.push(d.to_vec())
        })
        .unwrap();
        let err = |d: &[f64]| {
            d.iter()
                .zip(d_final.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let window: Vec<f64> = iterates[stop - 10..stop].iter().map(|d| err(d)).collect();
        let ratio = window.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        worst_margin = worst_margin.max(ratio - gamma);
        if ratio <= gamma + 0.02 {
            passed += 1;
        } else {
            notes.push(format!("pair {pair} (gamma {gamma}) ratio {ratio:.4}"));
        }
    }
    Outcome {
        pass: passed == 10,
        detail: format!(
            "{passed}/10 pairs; worst per-sweep ratio minus gamma {worst_margin:+.4}{}",
            failure_suffix(&notes)
        ),
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = run();
        all &= o.pass;
        println!(
            "criterion {id:>2} {name}: {} ({}; {:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };

    report(1, "transport oracle equivalence", &mut transport_oracle);
    let mut props = Vec::new();
    report(2, "metric axioms", &mut || {
        props = property_reports();
        metric_axioms(&props)
    });
    report(3, "value-difference bound", &mut || value_gap(&props));
    report(4, "policy transfer", &mut policy_transfer);
    report(5, "value-function approximation chain", &mut || {
        campaign_outcome(
            &campaign(ExperimentKind::Vfa),
            &["gbsm_sigma"],
            &["sigma_le_bsm_over", "bsm_over_le_legacy"],
        )
    });
    report(6, "aggregation metric error", &mut || {
        campaign_outcome(&campaign(ExperimentKind::SsaAgg), &["gbsm"], &["gbsm_le_legacy"])
    });
    report(7, "estimation metric error", &mut || {
        campaign_outcome(&campaign(ExperimentKind::SsaEst), &["gbsm"], &["gbsm_le_legacy"])
    });
    report(8, "sample complexity", &mut sample_complexity);
    report(9, "practical algorithm self-consistency", &mut practical_self_consistency);
    report(10, "fixed-point convergence rate", &mut convergence_rate);

    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
