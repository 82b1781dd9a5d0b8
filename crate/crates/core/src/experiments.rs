//! Seeded experiment campaigns over random Garnet MDPs. Each campaign runs
//! `trials` independent trials per discount factor, writes one CSV row per
//! trial and summarizes containment rates and tightness ratios.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approximation::{perturb_mdp_gaussian, AggregationMap, Dataset};
use crate::bounds::{
    containment_slack, on_policy_vfa_check, ssa_aggregation_check, ssa_estimation_check, transfer_check,
    value_gap_slack, value_gaps_bounded, vfa_check, BoundReport, EstimationVariant, StateActionMaps,
};
use crate::mdp::{garnet_generate, value_iteration, GarnetConfig, Mdp};
use crate::metric::{gbsm, tv_surrogate, FixedPointConfig, MetricMatrix};
use crate::practical::{compute_gbsm_practical, PracticalConfig};

/// Noise levels cycled through by trial index when no level is fixed.
pub const DEFAULT_NOISE_LEVELS: [f64; 3] = [0.1, 0.2, 0.3];
/// Samples per state-action pair for the practical campaign when none is given.
pub const DEFAULT_PRACTICAL_SAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("spot check failed: {0}")]
    SpotCheck(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Transfer,
    Vfa,
    SsaAgg,
    SsaEst,
    Practical,
    Properties,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Transfer,
        ExperimentKind::Vfa,
        ExperimentKind::SsaAgg,
        ExperimentKind::SsaEst,
        ExperimentKind::Practical,
        ExperimentKind::Properties,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Transfer => "transfer",
            ExperimentKind::Vfa => "vfa",
            ExperimentKind::SsaAgg => "ssa_agg",
            ExperimentKind::SsaEst => "ssa_est",
            ExperimentKind::Practical => "practical",
            ExperimentKind::Properties => "properties",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| ExperimentError::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub trials: usize,
    pub gammas: Vec<f64>,
    /// Template for generated MDPs; its `gamma` and `seed` are overridden per trial.
    pub garnet: GarnetConfig,
    /// Fixed noise level; `None` cycles through [`DEFAULT_NOISE_LEVELS`].
    pub noise_std: Option<f64>,
    /// Samples per state-action pair; selects sampled estimation in `ssa_est`.
    pub sample_k: Option<usize>,
    pub agg_fraction: f64,
    pub seed: u64,
    pub output_path: PathBuf,
    pub tol: f64,
    /// Map target states to their nearest source state instead of the identity.
    pub nearest_map: bool,
    pub eta1: usize,
    pub eta2: f64,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, output_path: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            experiment,
            trials: 100,
            gammas: vec![0.1, 0.5, 0.9],
            garnet: GarnetConfig::default(),
            noise_std: None,
            sample_k: None,
            agg_fraction: 0.5,
            seed: 0,
            output_path: output_path.into(),
            tol: crate::metric::DEFAULT_TOL,
            nearest_map: false,
            eta1: 10,
            eta2: crate::metric::DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.gammas.is_empty() {
            return bad("at least one discount factor is required".into());
        }
        if let Some(g) = self.gammas.iter().find(|g| !(0.0..1.0).contains(*g)) {
            return bad(format!("discount factor {g} is outside [0, 1)"));
        }
        if !(self.agg_fraction > 0.0 && self.agg_fraction <= 1.0) {
            return bad(format!("aggregation fraction {} is outside (0, 1]", self.agg_fraction));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if let Some(std) = self.noise_std {
            if !(std >= 0.0 && std.is_finite()) {
                return bad(format!("noise standard deviation must be nonnegative, got {std}"));
            }
        }
        if self.sample_k == Some(0) {
            return bad("sample count must be at least 1".into());
        }
        if self.experiment == ExperimentKind::Practical && self.eta1 > self.practical_samples() {
            return bad(format!(
                "eta1 = {} exceeds the {} samples drawn per state-action pair",
                self.eta1,
                self.practical_samples()
            ));
        }
        PracticalConfig {
            eta1: self.eta1,
            eta2: self.eta2,
            max_iters: None,
        }
        .validate()
        .or_else(|e| bad(e.to_string()))?;
        self.garnet
            .with_gamma(self.gammas[0])
            .validate()
            .or_else(|e| bad(e.to_string()))
    }

    fn practical_samples(&self) -> usize {
        self.sample_k.unwrap_or(DEFAULT_PRACTICAL_SAMPLES)
    }

    fn fixed_point(&self) -> FixedPointConfig {
        FixedPointConfig::with_tol(self.tol)
    }

    fn noise_for(&self, trial: usize) -> f64 {
        self.noise_std
            .unwrap_or(DEFAULT_NOISE_LEVELS[trial % DEFAULT_NOISE_LEVELS.len()])
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` at discount index `gamma_index`, independent of
/// execution order: a splitmix64 chain over the three counters.
pub fn child_seed(master: u64, gamma_index: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ gamma_index as u64) ^ trial as u64)
}

/// Outcome of one trial: a report, or the error that aborted it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial_id: usize,
    pub gamma: f64,
    pub outcome: Result<BoundReport, String>,
}

/// Seeds for the MDPs of one trial.
struct TrialSeeds(ChaCha8Rng);

impl TrialSeeds {
    fn next(&mut self) -> u64 {
        rand::Rng::random(&mut self.0)
    }
}

fn run_trial(cfg: &ExperimentConfig, gamma: f64, trial: usize, seed: u64) -> Result<BoundReport, String> {
    let fp = cfg.fixed_point();
    let mut seeds = TrialSeeds(ChaCha8Rng::seed_from_u64(seed));
    let template = cfg.garnet.with_gamma(gamma);
    let garnet = |seeds: &mut TrialSeeds| garnet_generate(&template.with_seed(seeds.next()));
    let e = |x: &dyn fmt::Display| x.to_string();
    let n = template.num_states;
    let report = match cfg.experiment {
        ExperimentKind::Transfer => {
            let m1 = garnet(&mut seeds).map_err(|x| e(&x))?;
            let m2 = garnet(&mut seeds).map_err(|x| e(&x))?;
            let maps = if cfg.nearest_map {
                StateActionMaps::nearest(&gbsm(&m1, &m2, &fp).map_err(|x| e(&x))?, m1.num_actions())
            } else {
                StateActionMaps::identity(n, template.num_actions)
            };
            let mut r = transfer_check(&m1, &m2, &maps, &fp).map_err(|x| e(&x))?;
            r.variant = if cfg.nearest_map { "nearest".into() } else { "identity".into() };
            r
        }
        ExperimentKind::Vfa => {
            let m = garnet(&mut seeds).map_err(|x| e(&x))?;
            let agg = AggregationMap::random(n, cfg.agg_fraction, seeds.next()).map_err(|x| e(&x))?;
            let mut r = vfa_check(&m, &agg, &fp).map_err(|x| e(&x))?;
            // The uniform policy respects any aggregation.
            let pi = crate::mdp::Policy::uniform(n, template.num_actions);
            let on = on_policy_vfa_check(&m, &agg, &pi, &fp).map_err(|x| e(&x))?;
            r.check("on_policy_chain", on.all_pass());
            r.measure("on_policy_ground_truth", on.ground_truth);
            for b in &on.bounds {
                r.measure(&format!("on_policy_{}", b.name), b.value);
            }
            r.variant = format!("fraction{}", cfg.agg_fraction);
            r
        }
        ExperimentKind::SsaAgg => {
            let m = garnet(&mut seeds).map_err(|x| e(&x))?;
            let agg = AggregationMap::random(n, cfg.agg_fraction, seeds.next()).map_err(|x| e(&x))?;
            let mut r = ssa_aggregation_check(&m, &m, &agg, &agg, &fp).map_err(|x| e(&x))?;
            r.variant = format!("fraction{}", cfg.agg_fraction);
            r
        }
        ExperimentKind::SsaEst => {
            let m = garnet(&mut seeds).map_err(|x| e(&x))?;
            let variant = match cfg.sample_k {
                Some(k) => EstimationVariant::Sampled(k),
                None => EstimationVariant::Gaussian(cfg.noise_for(trial)),
            };
            ssa_estimation_check(&m, &m, variant, &fp, seeds.next()).map_err(|x| e(&x))?
        }
        ExperimentKind::Practical => practical_trial(cfg, &mut seeds, &template, &fp, trial)?,
        ExperimentKind::Properties => {
            let m1 = garnet(&mut seeds).map_err(|x| e(&x))?;
            let m2 = garnet(&mut seeds).map_err(|x| e(&x))?;
            let m3 = garnet(&mut seeds).map_err(|x| e(&x))?;
            properties_trial(&m1, &m2, &m3, &fp).map_err(|x| e(&x))?
        }
    };
    Ok(report)
}

/// Source is a Garnet MDP; the target is a noisy copy observed through samples.
fn practical_trial(
    cfg: &ExperimentConfig,
    seeds: &mut TrialSeeds,
    template: &GarnetConfig,
    fp: &FixedPointConfig,
    trial: usize,
) -> Result<BoundReport, String> {
    let e = |x: &dyn fmt::Display| x.to_string();
    let source = garnet_generate(&template.with_seed(seeds.next())).map_err(|x| e(&x))?;
    let std = cfg.noise_for(trial);
    let target = perturb_mdp_gaussian(&source, std, seeds.next()).map_err(|x| e(&x))?;
    let k = cfg.practical_samples();
    let data = Dataset::sample_from(&target, k, seeds.next());
    let pcfg = PracticalConfig {
        eta1: cfg.eta1,
        eta2: cfg.eta2,
        max_iters: None,
    };
    let out = compute_gbsm_practical(&data, &source, &pcfg).map_err(|x| e(&x))?;
    let exact = gbsm(&target, &source, fp).map_err(|x| e(&x))?;
    let mut gt = 0.0_f64;
    for (i, &s) in out.report.target_states.iter().enumerate() {
        for (j, &t) in out.report.source_states.iter().enumerate() {
            gt = gt.max((out.metric.get(i, j) - exact.get(s, t)).abs());
        }
    }
    // Every pair is sampled k ≥ eta1 times, so both restricted spaces are full.
    let est_err = gbsm(&target, &out.target.mdp, fp).map_err(|x| e(&x))?.diagonal_max();
    let slack = containment_slack(fp, template.gamma).max(containment_slack(
        &FixedPointConfig::with_tol(cfg.eta2),
        template.gamma,
    ));
    let mut r = BoundReport::new(template.gamma, gt, slack);
    r.variant = format!("gaussian_std{std}_k{k}");
    r.bound("estimation", est_err, true);
    r.check("residual_le_eta2", out.report.residual <= cfg.eta2);
    r.check(
        "cap",
        out.metric.max() <= source.reward_max() / (1.0 - template.gamma) + cfg.eta2,
    );
    r.measure("target_states", out.report.target_states.len() as f64);
    r.measure("source_states", out.report.source_states.len() as f64);
    r.measure("dropped_tuples", out.report.dropped_tuples as f64);
    r.measure("iterations", out.report.iterations as f64);
    r.measure("diag_practical", out.metric.diagonal_max());
    Ok(r)
}

/// Symmetry, triangle, identity, cap and value-gap checks on three MDPs.
pub fn properties_trial(
    m1: &Mdp,
    m2: &Mdp,
    m3: &Mdp,
    fp: &FixedPointConfig,
) -> Result<BoundReport, crate::metric::MetricError> {
    let gamma = m1.gamma();
    let tol = fp.tol;
    let d12 = gbsm(m1, m2, fp)?;
    let d21 = gbsm(m2, m1, fp)?;
    let d23 = gbsm(m2, m3, fp)?;
    let d13 = gbsm(m1, m3, fp)?;
    let d11 = gbsm(m1, m1, fp)?;

    let symmetry = d12.sup_distance(&d21.transpose());
    let triangle = triangle_excess(&d12, &d23, &d13);
    let identity = d11.diagonal_max();
    let cap = m1.reward_max().max(m2.reward_max()).max(m3.reward_max()) / (1.0 - gamma);
    let max_entry = [&d12, &d21, &d23, &d13, &d11].iter().map(|d| d.max()).fold(0.0, f64::max);
    let vtol = tol * 0.01;
    let v1 = value_iteration(m1, vtol);
    let v2 = value_iteration(m2, vtol);
    let surrogate = if m1.num_states() == m2.num_states() && m1.num_actions() == m2.num_actions() {
        Some(tv_surrogate(m1, m2)?.bound)
    } else {
        None
    };

    let mut r = BoundReport::new(gamma, 0.0, containment_slack(fp, gamma));
    r.check("symmetry", symmetry <= 2.0 * tol);
    r.check("triangle", triangle <= 3.0 * tol);
    r.check("identity", identity <= tol / (1.0 - gamma));
    r.check("cap", max_entry <= cap + tol);
    r.check("value_gap", value_gaps_bounded(&v1, &v2, &d12, value_gap_slack(fp, gamma)));
    if let Some(s) = surrogate {
        r.check("tv_surrogate", d12.diagonal_max() <= s + tol);
    }
    r.measure("symmetry_gap", symmetry);
    r.measure("triangle_excess", triangle);
    r.measure("identity_diag", identity);
    r.measure("max_entry", max_entry);
    r.measure("tv_surrogate", surrogate.unwrap_or(f64::NAN));
    r.measure("diag_max", d12.diagonal_max());
    Ok(r)
}

/// `max_{s,s''} (d13(s,s'') − min_{s'} (d12(s,s') + d23(s',s'')))`, floored at zero.
pub fn triangle_excess(d12: &MetricMatrix, d23: &MetricMatrix, d13: &MetricMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for s in 0..d13.rows() {
        for u in 0..d13.cols() {
            let via = (0..d12.cols())
                .map(|t| d12.get(s, t) + d23.get(t, u))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d13.get(s, u) - via);
        }
    }
    worst
}

/// All trials of a campaign, in `(gamma index, trial index)` order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRow>, ExperimentError> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.gammas.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(g, t)| {
            let gamma = cfg.gammas[g];
            let trial_id = g * cfg.trials + t;
            let outcome = run_trial(cfg, gamma, t, child_seed(cfg.seed, g, t)).map(|mut r| {
                r.trial_id = trial_id;
                r.gamma = gamma;
                r
            });
            TrialRow {
                trial_id,
                gamma,
                outcome,
            }
        })
        .collect())
}

/// Column layout shared by every row of a campaign.
struct Columns {
    bounds: Vec<String>,
    checks: Vec<String>,
    measurements: Vec<String>,
}

impl Columns {
    fn from_rows(rows: &[TrialRow]) -> Self {
        let mut cols = Columns {
            bounds: Vec::new(),
            checks: Vec::new(),
            measurements: Vec::new(),
        };
        let push = |list: &mut Vec<String>, name: &str| {
            if !list.iter().any(|n| n == name) {
                list.push(name.to_string());
            }
        };
        for r in rows.iter().filter_map(|r| r.outcome.as_ref().ok()) {
            r.bounds.iter().for_each(|b| push(&mut cols.bounds, &b.name));
            r.checks.iter().for_each(|(n, _)| push(&mut cols.checks, n));
            r.measurements.iter().for_each(|(n, _)| push(&mut cols.measurements, n));
        }
        cols
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["trial_id", "gamma", "variant", "status", "ground_truth", "slack"]
            .into_iter()
            .map(String::from)
            .collect();
        h.extend(self.bounds.iter().cloned());
        h.extend(self.bounds.iter().map(|n| format!("contained_{n}")));
        h.extend(self.checks.iter().map(|n| format!("check_{n}")));
        h.extend(self.measurements.iter().cloned());
        h
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes rows as CSV. Floats use the shortest representation that parses
/// back to the same value.
pub fn write_rows<W: Write>(rows: &[TrialRow], writer: W) -> Result<(), ExperimentError> {
    let cols = Columns::from_rows(rows);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(cols.header())?;
    for row in rows {
        let mut rec = vec![row.trial_id.to_string(), row.gamma.to_string()];
        match &row.outcome {
            Ok(r) => {
                rec.push(r.variant.clone());
                rec.push("ok".into());
                rec.push(r.ground_truth.to_string());
                rec.push(r.slack.to_string());
                rec.extend(cols.bounds.iter().map(|n| opt(r.get_bound(n).map(|b| b.value))));
                rec.extend(cols.bounds.iter().map(|n| opt(r.get_bound(n).map(|b| b.contained))));
                rec.extend(cols.checks.iter().map(|n| opt(r.get_check(n))));
                rec.extend(cols.measurements.iter().map(|n| opt(r.get_measurement(n))));
            }
            Err(msg) => {
                rec.push(String::new());
                rec.push(format!("error: {msg}"));
                rec.resize(cols.header().len(), String::new());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub name: String,
    pub proven: bool,
    pub containment_rate: f64,
    /// Mean of `bound / ground_truth` over trials with a positive ground truth.
    pub mean_tightness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSummary {
    pub gamma: f64,
    pub trials: usize,
    pub failures: usize,
    pub bounds: Vec<BoundSummary>,
    pub checks: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub experiment: ExperimentKind,
    pub per_gamma: Vec<GammaSummary>,
}

impl CampaignSummary {
    pub fn from_rows(experiment: ExperimentKind, gammas: &[f64], rows: &[TrialRow]) -> Self {
        let cols = Columns::from_rows(rows);
        let per_gamma = gammas
            .iter()
            .map(|&gamma| {
                let group: Vec<&TrialRow> = rows.iter().filter(|r| r.gamma == gamma).collect();
                let ok: Vec<&BoundReport> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
                let rate = |hits: usize| if ok.is_empty() { 0.0 } else { hits as f64 / ok.len() as f64 };
                let bounds = cols
                    .bounds
                    .iter()
                    .map(|name| {
                        let entries: Vec<_> = ok
                            .iter()
                            .filter_map(|r| r.get_bound(name).map(|b| (r.ground_truth, b)))
                            .collect();
                        let ratios: Vec<f64> = entries
                            .iter()
                            .filter(|(gt, _)| *gt > 0.0)
                            .map(|(gt, b)| b.value / gt)
                            .collect();
                        BoundSummary {
                            name: name.clone(),
                            proven: entries.first().is_none_or(|(_, b)| b.proven),
                            containment_rate: rate(entries.iter().filter(|(_, b)| b.contained).count()),
                            mean_tightness: if ratios.is_empty() {
                                f64::NAN
                            } else {
                                ratios.iter().sum::<f64>() / ratios.len() as f64
                            },
                        }
                    })
                    .collect();
                let checks = cols
                    .checks
                    .iter()
                    .map(|name| {
                        (
                            name.clone(),
                            rate(ok.iter().filter(|r| r.get_check(name) == Some(true)).count()),
                        )
                    })
                    .collect();
                GammaSummary {
                    gamma,
                    trials: group.len(),
                    failures: group.len() - ok.len(),
                    bounds,
                    checks,
                }
            })
            .collect();
        CampaignSummary { experiment, per_gamma }
    }

    /// Every theorem-backed bound contained and every check passed, with no failed trials.
    pub fn all_pass(&self) -> bool {
        self.per_gamma.iter().all(|g| {
            g.failures == 0
                && g.bounds.iter().all(|b| !b.proven || b.containment_rate == 1.0)
                && g.checks.iter().all(|(_, r)| *r == 1.0)
        })
    }
}

impl fmt::Display for CampaignSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "experiment {}", self.experiment)?;
        for g in &self.per_gamma {
            writeln!(f, "gamma {}: {} trials, {} failed", g.gamma, g.trials, g.failures)?;
            for b in &g.bounds {
                writeln!(
                    f,
                    "  bound {:<20} contained {:>6.1}%  mean bound/truth {:.4}{}",
                    b.name,
                    100.0 * b.containment_rate,
                    b.mean_tightness,
                    if b.proven { "" } else { "  (empirical)" }
                )?;
            }
            for (name, r) in &g.checks {
                writeln!(f, "  check {:<20} passed {:>6.1}%", name, 100.0 * r)?;
            }
        }
        Ok(())
    }
}

/// Recomputes `contained_<name>` from the recorded bound, ground truth and
/// slack on up to `count` randomly chosen successful rows. Returns the number
/// of rows checked.
pub fn spot_check_csv<R: Read>(reader: R, count: usize, seed: u64) -> Result<usize, ExperimentError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    let idx = |name: &str| header.iter().position(|h| h == name);
    let status = idx("status").ok_or_else(|| ExperimentError::SpotCheck("no status column".into()))?;
    let (gt, slack) = match (idx("ground_truth"), idx("slack")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(ExperimentError::SpotCheck("missing ground_truth or slack".into())),
    };
    let pairs: Vec<(usize, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("contained_").and_then(&idx).map(|b| (b, i)))
        .collect();
    let records: Vec<csv::StringRecord> = rdr
        .records()
        .filter(|r| r.as_ref().map_or(true, |r| &r[status] == "ok"))
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, records.len(), count.min(records.len()));
    let num = |rec: &csv::StringRecord, i: usize| -> Result<f64, ExperimentError> {
        rec[i]
            .parse::<f64>()
            .map_err(|_| ExperimentError::SpotCheck(format!("unparsable number `{}`", &rec[i])))
    };
    for k in picks.iter() {
        let rec = &records[k];
        let (g, s) = (num(rec, gt)?, num(rec, slack)?);
        for &(b, c) in &pairs {
            let expected = num(rec, b)? >= g - s;
            let recorded = rec[c]
                .parse::<bool>()
                .map_err(|_| ExperimentError::SpotCheck(format!("unparsable flag `{}`", &rec[c])))?;
            if expected != recorded {
                return Err(ExperimentError::SpotCheck(format!(
                    "row {} column {} records {recorded}, recomputed {expected}",
                    &rec[0], &header[c]
                )));
            }
        }
    }
    Ok(picks.len())
}

/// Runs the campaign, writes its CSV to `cfg.output_path`, spot-checks five
/// rows of the written file and returns the summary.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<(Vec<TrialRow>, CampaignSummary), ExperimentError> {
    let rows = run_trials(cfg)?;
    let mut out = BufWriter::new(File::create(&cfg.output_path)?);
    write_rows(&rows, &mut out)?;
    out.flush()?;
    drop(out);
    spot_check_csv(File::open(&cfg.output_path)?, 5, cfg.seed)?;
    let summary = CampaignSummary::from_rows(cfg.experiment, &cfg.gammas, &rows);
    Ok((rows, summary))
}
