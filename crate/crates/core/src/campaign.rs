//! Monte Carlo drops, per-user spectral efficiency and CDF summaries.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{NetworkConfig, Scenario, UserId};
use crate::downlink::{
    dl_power_control, dl_se, dl_sinr_empirical, dl_terms, DlMode, DownlinkTerms, EmpiricalDownlink, PowerPolicy,
};
use crate::error::{ConfigError, Error, Result};
use crate::estimation::{assign_pilots, estimate_channels, EstimateSet};
use crate::propagation::{draw_channels, large_scale, BetaTable};
use crate::rng::{RandomStream, Stage};
use crate::topology::{place_topology, Topology};
use crate::uplink::{ul_se, ul_sinr_empirical, ul_terms, CovarianceSet, EmpiricalUplink, UplinkPower, UplinkTerms};

/// Spectral efficiency and SINRs of one user in one drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeSample {
    pub scenario: Scenario,
    pub drop_index: u64,
    pub cell: usize,
    pub user: usize,
    pub se_ul: f64,
    pub se_dl: f64,
    pub gamma_ul: f64,
    pub gamma_dl_paper: f64,
    pub gamma_dl_rigorous: f64,
}

/// Large-scale and estimation state of a drop.
#[derive(Debug, Clone)]
pub struct DropState {
    pub topology: Topology,
    pub beta: BetaTable,
    pub estimates: EstimateSet,
}

/// Runs the physical chain for a drop with a given geometry.
pub fn simulate_drop(config: &NetworkConfig, topology: Topology, drop_index: u64) -> Result<DropState> {
    let dims = config.dims();
    let seed = config.seed;
    let beta =
        large_scale(&topology, &config.path_loss, dims, &mut RandomStream::new(seed, drop_index, Stage::Shadowing));
    let channels = draw_channels(&beta, config, &mut RandomStream::new(seed, drop_index, Stage::SmallScale))?;
    let pilots = assign_pilots(config)?;
    let estimates = estimate_channels(
        &channels,
        &beta,
        &pilots,
        config,
        &mut RandomStream::new(seed, drop_index, Stage::Estimation),
    )?;
    Ok(DropState { topology, beta, estimates })
}

/// Per-user results for a drop with a given geometry.
pub fn evaluate_drop(config: &NetworkConfig, topology: Topology, drop_index: u64) -> Result<Vec<SeSample>> {
    let state = simulate_drop(config, topology, drop_index)?;
    samples_for(config, &state, drop_index)
}

fn samples_for(config: &NetworkConfig, state: &DropState, drop_index: u64) -> Result<Vec<SeSample>> {
    let dims = config.dims();
    let sigma2 = config.noise_power()?;
    let cov = CovarianceSet::new(&state.beta, &state.estimates)?;
    let eta = UplinkPower::full(dims);
    let alpha = state.estimates.alpha_table();
    let pc = dl_power_control(alpha, PowerPolicy::Uniform)?;
    (0..dims.users())
        .map(|u| {
            let user = dims.user(u);
            let gamma_ul = ul_terms(&state.estimates, &cov, &eta, sigma2 / config.p_u, user)?.sinr();
            let dl = dl_terms(alpha, &state.beta, &pc, sigma2 / config.p_d, user)?;
            let sample = SeSample {
                scenario: config.scenario,
                drop_index,
                cell: user.cell,
                user: user.k,
                se_ul: ul_se(gamma_ul, config.tau_p, config.tau_c),
                se_dl: dl_se(dl.sinr(DlMode::Paper)),
                gamma_ul,
                gamma_dl_paper: dl.sinr(DlMode::Paper),
                gamma_dl_rigorous: dl.sinr(DlMode::Rigorous),
            };
            if [sample.se_ul, sample.se_dl, sample.gamma_ul, sample.gamma_dl_paper, sample.gamma_dl_rigorous]
                .iter()
                .any(|v| !v.is_finite())
            {
                return Err(Error::Numerical(format!("non-finite result for {user:?} in drop {drop_index}")));
            }
            Ok(sample)
        })
        .collect()
}

/// Places a fresh geometry for `drop_index` and evaluates every user.
pub fn run_drop(config: &NetworkConfig, drop_index: u64) -> Result<Vec<SeSample>> {
    let topology = place_topology(config, &mut RandomStream::new(config.seed, drop_index, Stage::Topology), drop_index);
    evaluate_drop(config, topology, drop_index)
}

/// Lower-interpolation empirical quantile of an ascending slice: the element
/// at index `ceil(q n) - 1`, clamped to `[0, n - 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Empty);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile {q} outside [0, 1]")));
    }
    let n = sorted.len();
    // Absorbs rounding in q * n so that e.g. 0.05 * 100 selects index 4.
    let rank = (q * n as f64 - 1e-9).ceil() as i64 - 1;
    Ok(sorted[rank.clamp(0, n as i64 - 1) as usize])
}

/// Empirical CDF of a set of per-user SE samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSummary {
    sorted: Vec<f64>,
}

impl CdfSummary {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite sample".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn percentile(&self, q: f64) -> Result<f64> {
        percentile(&self.sorted, q)
    }

    /// 95%-likely rate, the 5th percentile.
    pub fn likely95(&self) -> f64 {
        self.percentile(0.05).expect("non-empty")
    }

    pub fn median(&self) -> f64 {
        self.percentile(0.5).expect("non-empty")
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.n() as f64
    }

    /// Distribution-free standard error of the 5th percentile: half the spread
    /// between the order statistics one binomial standard deviation either
    /// side of rank `0.05 n`.
    pub fn likely95_stderr(&self) -> f64 {
        let q = 0.05;
        let delta = (q * (1.0 - q) / self.n() as f64).sqrt();
        let hi = self.percentile((q + delta).min(1.0)).expect("non-empty");
        let lo = self.percentile((q - delta).max(0.0)).expect("non-empty");
        0.5 * (hi - lo)
    }
}

/// All samples of one scenario plus their UL and DL CDFs.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub config: NetworkConfig,
    pub samples: Vec<SeSample>,
    pub ul: CdfSummary,
    pub dl: CdfSummary,
}

impl CampaignResult {
    pub fn scenario(&self) -> Scenario {
        self.config.scenario
    }
}

/// Runs `config.drops` drops in parallel and concatenates them in drop order.
pub fn run_campaign(config: &NetworkConfig) -> Result<CampaignResult> {
    config.validate()?;
    let per_drop: Vec<Vec<SeSample>> =
        (0..config.drops as u64).into_par_iter().map(|d| run_drop(config, d)).collect::<Result<_>>()?;
    let samples: Vec<SeSample> = per_drop.into_iter().flatten().collect();
    let ul = CdfSummary::new(samples.iter().map(|s| s.se_ul).collect())?;
    let dl = CdfSummary::new(samples.iter().map(|s| s.se_dl).collect())?;
    Ok(CampaignResult { config: config.clone(), samples, ul, dl })
}

/// Scenario comparisons require the same total antenna count and user count.
pub fn check_equal_budget(configs: &[NetworkConfig]) -> Result<(), ConfigError> {
    let Some(first) = configs.first() else { return Ok(()) };
    for c in &configs[1..] {
        if c.total_antennas() != first.total_antennas() || c.total_users() != first.total_users() {
            return Err(ConfigError::new(format!(
                "{} has {} antennas / {} users but {} has {} / {}; pass --allow-unequal to compare anyway",
                c.scenario,
                c.total_antennas(),
                c.total_users(),
                first.scenario,
                first.total_antennas(),
                first.total_users()
            )));
        }
    }
    Ok(())
}

pub const CSV_HEADER: &str = "scenario,drop,cell,user,se_ul,se_dl,gamma_ul,gamma_dl_paper,gamma_dl_rigorous";

/// One row per sample, scenarios in the given order.
pub fn write_results_csv<W: Write>(results: &[CampaignResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in results.iter().flat_map(|r| &r.samples) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.scenario,
            s.drop_index,
            s.cell,
            s.user,
            s.se_ul,
            s.se_dl,
            s.gamma_ul,
            s.gamma_dl_paper,
            s.gamma_dl_rigorous
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkSummary {
    pub mean: f64,
    pub median: f64,
    pub likely95: f64,
    pub likely95_stderr: f64,
}

impl From<&CdfSummary> for LinkSummary {
    fn from(c: &CdfSummary) -> Self {
        Self { mean: c.mean(), median: c.median(), likely95: c.likely95(), likely95_stderr: c.likely95_stderr() }
    }
}

/// Per-scenario entry of the summary file.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub likely95_ul: f64,
    pub likely95_dl: f64,
    pub ul: LinkSummary,
    pub dl: LinkSummary,
}

impl From<&CampaignResult> for ScenarioSummary {
    fn from(r: &CampaignResult) -> Self {
        Self {
            n: r.ul.n(),
            mean: r.ul.mean(),
            median: r.ul.median(),
            likely95_ul: r.ul.likely95(),
            likely95_dl: r.dl.likely95(),
            ul: (&r.ul).into(),
            dl: (&r.dl).into(),
        }
    }
}

/// Summary keyed by scenario name.
pub fn summary_json(results: &[CampaignResult]) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = results
        .iter()
        .map(|r| (r.scenario().to_string(), serde_json::to_value(ScenarioSummary::from(r)).expect("serialisable")))
        .collect();
    serde_json::Value::Object(map)
}

/// Analytic and simulated term powers for one user.
#[derive(Debug, Clone, Serialize)]
pub struct UserDiagnostics {
    pub cell: usize,
    pub user: usize,
    pub ul_analytic: UplinkTerms,
    pub ul_empirical: EmpiricalUplink,
    pub dl_analytic: DownlinkTerms,
    pub gamma_dl_paper: f64,
    pub gamma_dl_rigorous: f64,
    pub dl_empirical: EmpiricalDownlink,
}

#[derive(Debug, Clone, Serialize)]
pub struct DropDiagnostics {
    pub scenario: Scenario,
    pub drop_index: u64,
    pub n_samples: usize,
    pub users: Vec<UserDiagnostics>,
}

/// Runs both oracles for user 0 of every cell of a drop.
pub fn drop_diagnostics(config: &NetworkConfig, drop_index: u64, n_samples: usize) -> Result<DropDiagnostics> {
    let topology = place_topology(config, &mut RandomStream::new(config.seed, drop_index, Stage::Topology), drop_index);
    let state = simulate_drop(config, topology, drop_index)?;
    let dims = config.dims();
    let sigma2 = config.noise_power()?;
    let cov = CovarianceSet::new(&state.beta, &state.estimates)?;
    let eta = UplinkPower::full(dims);
    let alpha = state.estimates.alpha_table();
    let pc = dl_power_control(alpha, PowerPolicy::Uniform)?;
    let mut rng = RandomStream::new(config.seed, drop_index, Stage::Diagnostics);
    let users = (0..dims.cells)
        .map(|cell| {
            let user = UserId::new(cell, 0);
            let ul_nr = sigma2 / config.p_u;
            let dl_nr = sigma2 / config.p_d;
            let dl_analytic = dl_terms(alpha, &state.beta, &pc, dl_nr, user)?;
            Ok(UserDiagnostics {
                cell,
                user: 0,
                ul_analytic: ul_terms(&state.estimates, &cov, &eta, ul_nr, user)?,
                ul_empirical: ul_sinr_empirical(&state.estimates, &cov, &eta, ul_nr, user, n_samples, &mut rng)?,
                gamma_dl_paper: dl_analytic.sinr(DlMode::Paper),
                gamma_dl_rigorous: dl_analytic.sinr(DlMode::Rigorous),
                dl_analytic,
                dl_empirical: dl_sinr_empirical(alpha, &state.beta, &pc, dl_nr, user, n_samples, &mut rng)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DropDiagnostics { scenario: config.scenario, drop_index, n_samples, users })
}
