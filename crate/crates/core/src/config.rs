//! Deployment parameters.
//!
//! A [`NetworkConfig`] is read from a flat text document of `key = value`
//! lines. Blank lines and `#` comments are ignored, unknown or repeated keys are
//! rejected, and every error carries the offending line number. Keys that are
//! absent take the values of [`NetworkConfig::reference`].

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{ConfigError, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// cBS per cell plus edge access points.
    Hmmimo,
    /// Distributed access points only, one logical cell.
    Cfmmimo,
    /// Co-located array per cell only.
    Cmmimo,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Hmmimo, Scenario::Cfmmimo, Scenario::Cmmimo];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Hmmimo => "hmmimo",
            Scenario::Cfmmimo => "cfmmimo",
            Scenario::Cmmimo => "cmmimo",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hmmimo" => Ok(Scenario::Hmmimo),
            "cfmmimo" => Ok(Scenario::Cfmmimo),
            "cmmimo" => Ok(Scenario::Cmmimo),
            other => Err(format!("unknown scenario '{other}' (expected hmmimo, cfmmimo or cmmimo)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    Iid,
    LocalScattering,
}

impl FadingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FadingMode::Iid => "iid",
            FadingMode::LocalScattering => "local_scattering",
        }
    }
}

impl FromStr for FadingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "iid" => Ok(FadingMode::Iid),
            "local_scattering" => Ok(FadingMode::LocalScattering),
            other => Err(format!("unknown fading mode '{other}' (expected iid or local_scattering)")),
        }
    }
}

/// Three-slope path loss with log-normal shadowing beyond the far breakpoint.
///
/// With distances in km:
///
/// ```text
/// PL(d) = L + 35 log10(d)                         d > d1
///       = L + 15 log10(d1) + 20 log10(d)          d0 < d <= d1
///       = L + 15 log10(d1) + 20 log10(d0)         d <= d0
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathLossModel {
    pub pl_ref_db: f64,
    pub pl_d0_m: f64,
    pub pl_d1_m: f64,
    pub shadow_sigma_db: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self { pl_ref_db: 140.7, pl_d0_m: 10.0, pl_d1_m: 50.0, shadow_sigma_db: 8.0 }
    }
}

impl PathLossModel {
    /// Path loss in dB (positive) at distance `d_m` meters.
    pub fn path_loss_db(&self, d_m: f64) -> f64 {
        let km = |m: f64| (m / 1000.0).log10();
        if d_m > self.pl_d1_m {
            self.pl_ref_db + 35.0 * km(d_m)
        } else if d_m > self.pl_d0_m {
            self.pl_ref_db + 15.0 * km(self.pl_d1_m) + 20.0 * km(d_m)
        } else {
            self.pl_ref_db + 15.0 * km(self.pl_d1_m) + 20.0 * km(self.pl_d0_m)
        }
    }

    /// Whether shadowing applies at this distance.
    pub fn shadowed(&self, d_m: f64) -> bool {
        d_m > self.pl_d1_m
    }
}

/// User index inside a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UserId {
    pub cell: usize,
    pub k: usize,
}

impl UserId {
    pub fn new(cell: usize, k: usize) -> Self {
        Self { cell, k }
    }
}

/// Array dimensions shared by every per-drop table.
///
/// Site 0 of a cell is its cBS (`cbs_antennas` antennas, possibly zero); sites
/// `1..=eaps` are its eAPs (`eap_antennas` each). A cell's composite vector
/// stacks the cBS block first, then the eAP blocks in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub cells: usize,
    pub users_per_cell: usize,
    pub cbs_antennas: usize,
    pub eaps: usize,
    pub eap_antennas: usize,
}

impl Dims {
    pub fn users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    pub fn flat(&self, user: UserId) -> usize {
        debug_assert!(user.cell < self.cells && user.k < self.users_per_cell);
        user.cell * self.users_per_cell + user.k
    }

    pub fn user(&self, flat: usize) -> UserId {
        UserId::new(flat / self.users_per_cell, flat % self.users_per_cell)
    }

    pub fn users_in(&self, cell: usize) -> Range<usize> {
        cell * self.users_per_cell..(cell + 1) * self.users_per_cell
    }

    /// Sites per cell, including the (possibly empty) cBS.
    pub fn sites(&self) -> usize {
        self.eaps + 1
    }

    /// `M_c`, service antennas per cell.
    pub fn antennas(&self) -> usize {
        self.cbs_antennas + self.eaps * self.eap_antennas
    }

    /// Antenna range of `site` within the composite vector.
    pub fn site_range(&self, site: usize) -> Range<usize> {
        if site == 0 {
            0..self.cbs_antennas
        } else {
            let start = self.cbs_antennas + (site - 1) * self.eap_antennas;
            start..start + self.eap_antennas
        }
    }

    pub fn site_of_antenna(&self, antenna: usize) -> usize {
        if antenna < self.cbs_antennas {
            0
        } else {
            1 + (antenna - self.cbs_antennas) / self.eap_antennas
        }
    }
}

/// All scalar parameters of a deployment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkConfig {
    pub cells: usize,
    pub cbs_antennas: usize,
    pub eaps_per_cell: usize,
    pub eap_antennas: usize,
    pub users_per_cell: usize,
    pub tau_c: usize,
    pub tau_p: usize,
    pub p_u: f64,
    pub p_d: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub area_m: f64,
    pub cell_m: f64,
    pub eap_inset_m: f64,
    pub min_distance_m: f64,
    pub drops: usize,
    pub seed: u64,
    pub fading_mode: FadingMode,
    pub angular_spread_deg: f64,
    pub scenario: Scenario,
    pub path_loss: PathLossModel,
    pub pilot_gain: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::reference()
    }
}

/// Config file keys, in canonical order.
pub const KEYS: [&str; 26] = [
    "scenario",
    "C",
    "N_b",
    "L_c",
    "N_a",
    "K_c",
    "tau_c",
    "tau_p",
    "p_u",
    "p_d",
    "noise_psd_dbm_hz",
    "noise_figure_db",
    "bandwidth_hz",
    "area_m",
    "cell_m",
    "eap_inset_m",
    "min_distance_m",
    "drops",
    "seed",
    "fading_mode",
    "angular_spread_deg",
    "pl_ref_db",
    "pl_d0_m",
    "pl_d1_m",
    "shadow_sigma_db",
    "pilot_gain",
];

impl NetworkConfig {
    /// Full-scale heterogeneous deployment: 1 km square, four 500 m cells,
    /// 64-antenna cBS and sixteen 4-antenna eAPs per cell, 8 users per cell.
    pub fn reference() -> Self {
        Self {
            cells: 4,
            cbs_antennas: 64,
            eaps_per_cell: 16,
            eap_antennas: 4,
            users_per_cell: 8,
            tau_c: 200,
            tau_p: 8,
            p_u: 0.1,
            p_d: 1.0,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            bandwidth_hz: 5e6,
            area_m: 1000.0,
            cell_m: 500.0,
            eap_inset_m: 10.0,
            min_distance_m: 5.0,
            drops: 100_000,
            seed: 1,
            fading_mode: FadingMode::Iid,
            angular_spread_deg: 15.0,
            scenario: Scenario::Hmmimo,
            path_loss: PathLossModel::default(),
            pilot_gain: false,
        }
    }

    /// Reference geometry scaled to 128 antennas and 8 users with the same
    /// 50/50 cBS/eAP antenna split and 10^3 drops.
    pub fn desk() -> Self {
        Self { cbs_antennas: 16, eaps_per_cell: 4, users_per_cell: 2, drops: 1000, ..Self::reference() }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            cells: self.cells,
            users_per_cell: self.users_per_cell,
            cbs_antennas: self.cbs_antennas,
            eaps: self.eaps_per_cell,
            eap_antennas: self.eap_antennas,
        }
    }

    /// Service antennas per cell, `M_c = N_b + L_c N_a`.
    pub fn antennas_per_cell(&self) -> usize {
        self.cbs_antennas + self.eaps_per_cell * self.eap_antennas
    }

    pub fn total_antennas(&self) -> usize {
        self.cells * self.antennas_per_cell()
    }

    pub fn total_users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    pub fn cells_per_side(&self) -> usize {
        (self.area_m / self.cell_m).round() as usize
    }

    /// Thermal noise power in watts.
    pub fn noise_power(&self) -> Result<f64> {
        noise_power(self)
    }

    /// Effective pilot power used by the estimator.
    pub fn pilot_power(&self) -> f64 {
        if self.pilot_gain {
            self.tau_p as f64 * self.p_u
        } else {
            self.p_u
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::new(msg));
        if !(self.bandwidth_hz > 0.0) {
            return err(format!("bandwidth_hz must be positive, got {}", self.bandwidth_hz));
        }
        if !(self.p_u > 0.0) || !(self.p_d > 0.0) {
            return err("p_u and p_d must be positive".into());
        }
        if self.tau_p > self.tau_c {
            return err(format!("tau_p ({}) exceeds tau_c ({})", self.tau_p, self.tau_c));
        }
        if self.users_per_cell == 0 {
            return err("K_c must be at least 1".into());
        }
        if self.users_per_cell > self.tau_p {
            return err(format!(
                "K_c ({}) exceeds tau_p ({}); in-cell pilots must be orthogonal",
                self.users_per_cell, self.tau_p
            ));
        }
        if self.antennas_per_cell() == 0 {
            return err("cell has no service antennas (N_b + L_c N_a = 0)".into());
        }
        if self.eaps_per_cell > 0 && self.eap_antennas == 0 {
            return err("N_a must be at least 1 when L_c > 0".into());
        }
        if !(self.cell_m > 0.0) || !(self.area_m > 0.0) {
            return err("area_m and cell_m must be positive".into());
        }
        let ratio = self.area_m / self.cell_m;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return err(format!("area_m ({}) is not an integer multiple of cell_m ({})", self.area_m, self.cell_m));
        }
        let side = ratio.round() as usize;
        if self.cells != side * side {
            return err(format!("C = {} but (area_m/cell_m)^2 = {}", self.cells, side * side));
        }
        if !(self.eap_inset_m >= 0.0) || 2.0 * self.eap_inset_m >= self.cell_m {
            return err("eap_inset_m must lie in [0, cell_m/2)".into());
        }
        if !(self.min_distance_m >= 0.0) || 2.0 * self.min_distance_m >= self.cell_m {
            return err("min_distance_m must lie in [0, cell_m/2)".into());
        }
        if self.drops == 0 {
            return err("drops must be at least 1".into());
        }
        if !(self.angular_spread_deg >= 0.0) {
            return err("angular_spread_deg must be non-negative".into());
        }
        let pl = &self.path_loss;
        if !(pl.pl_d0_m > 0.0) || !(pl.pl_d1_m > pl.pl_d0_m) || !(pl.shadow_sigma_db >= 0.0) {
            return err("path loss requires 0 < pl_d0_m < pl_d1_m and shadow_sigma_db >= 0".into());
        }
        match self.scenario {
            Scenario::Cmmimo if self.eaps_per_cell != 0 => err("cmmimo requires L_c = 0".into()),
            Scenario::Cfmmimo if self.cbs_antennas != 0 || self.cells != 1 => {
                err("cfmmimo requires N_b = 0 and C = 1".into())
            }
            _ => Ok(()),
        }
    }

    /// Equivalent deployment for another architecture with the same total
    /// antenna budget and user count.
    ///
    /// Only an `hmmimo` configuration can be mapped to the other two; any
    /// configuration maps to its own scenario unchanged. `cmmimo` moves every
    /// eAP antenna into the cBS. `cfmmimo` collapses the region into one logical
    /// cell holding `C M_c / N_a` access points of `N_a` antennas and raises
    /// `tau_p` to the total user count if needed, so pilots stay orthogonal.
    pub fn for_scenario(&self, scenario: Scenario) -> Result<NetworkConfig, ConfigError> {
        if scenario == self.scenario {
            return Ok(self.clone());
        }
        if self.scenario != Scenario::Hmmimo {
            return Err(ConfigError::new(format!(
                "cannot derive {scenario} from a {} configuration; provide an hmmimo base",
                self.scenario
            )));
        }
        let mut out = self.clone();
        out.scenario = scenario;
        match scenario {
            Scenario::Hmmimo => unreachable!(),
            Scenario::Cmmimo => {
                out.cbs_antennas = self.antennas_per_cell();
                out.eaps_per_cell = 0;
            }
            Scenario::Cfmmimo => {
                let per_ap = self.eap_antennas.max(1);
                out.cells = 1;
                out.cell_m = self.area_m;
                out.cbs_antennas = 0;
                out.eap_antennas = per_ap;
                out.eaps_per_cell = self.total_antennas() / per_ap;
                out.users_per_cell = self.total_users();
                out.tau_p = self.tau_p.max(out.users_per_cell);
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Parse a flat `key = value` document on top of the reference defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::reference();
        let mut seen: Vec<&str> = Vec::new();
        let mut explicit_cells = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line_no, format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&canonical) = KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::at(line_no, format!("unknown key '{key}'")));
            };
            if seen.contains(&canonical) {
                return Err(ConfigError::at(line_no, format!("duplicate key '{key}'")));
            }
            seen.push(canonical);
            let bad = |e: String| ConfigError::at(line_no, format!("invalid value for '{key}': {e}"));
            match canonical {
                "scenario" => cfg.scenario = value.parse().map_err(bad)?,
                "C" => explicit_cells = Some((line_no, parse_num::<usize>(value).map_err(bad)?)),
                "N_b" => cfg.cbs_antennas = parse_num(value).map_err(bad)?,
                "L_c" => cfg.eaps_per_cell = parse_num(value).map_err(bad)?,
                "N_a" => cfg.eap_antennas = parse_num(value).map_err(bad)?,
                "K_c" => cfg.users_per_cell = parse_num(value).map_err(bad)?,
                "tau_c" => cfg.tau_c = parse_num(value).map_err(bad)?,
                "tau_p" => cfg.tau_p = parse_num(value).map_err(bad)?,
                "p_u" => cfg.p_u = parse_num(value).map_err(bad)?,
                "p_d" => cfg.p_d = parse_num(value).map_err(bad)?,
                "noise_psd_dbm_hz" => cfg.noise_psd_dbm_hz = parse_num(value).map_err(bad)?,
                "noise_figure_db" => cfg.noise_figure_db = parse_num(value).map_err(bad)?,
                "bandwidth_hz" => cfg.bandwidth_hz = parse_num(value).map_err(bad)?,
                "area_m" => cfg.area_m = parse_num(value).map_err(bad)?,
                "cell_m" => cfg.cell_m = parse_num(value).map_err(bad)?,
                "eap_inset_m" => cfg.eap_inset_m = parse_num(value).map_err(bad)?,
                "min_distance_m" => cfg.min_distance_m = parse_num(value).map_err(bad)?,
                "drops" => cfg.drops = parse_num(value).map_err(bad)?,
                "seed" => cfg.seed = parse_num(value).map_err(bad)?,
                "fading_mode" => cfg.fading_mode = value.parse().map_err(bad)?,
                "angular_spread_deg" => cfg.angular_spread_deg = parse_num(value).map_err(bad)?,
                "pl_ref_db" => cfg.path_loss.pl_ref_db = parse_num(value).map_err(bad)?,
                "pl_d0_m" => cfg.path_loss.pl_d0_m = parse_num(value).map_err(bad)?,
                "pl_d1_m" => cfg.path_loss.pl_d1_m = parse_num(value).map_err(bad)?,
                "shadow_sigma_db" => cfg.path_loss.shadow_sigma_db = parse_num(value).map_err(bad)?,
                "pilot_gain" => cfg.pilot_gain = parse_num(value).map_err(bad)?,
                _ => unreachable!("key list and match arms out of sync"),
            }
        }
        // C defaults to the value implied by the geometry.
        let side = (cfg.area_m / cfg.cell_m).round().max(0.0) as usize;
        match explicit_cells {
            Some((line_no, c)) if c != side * side => {
                return Err(ConfigError::at(line_no, format!("C = {c} but (area_m/cell_m)^2 = {}", side * side)))
            }
            Some((_, c)) => cfg.cells = c,
            None => cfg.cells = side * side,
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key with its resolved value, one per line, in canonical order.
    pub fn to_canonical_text(&self) -> String {
        let pl = &self.path_loss;
        let values: [String; 26] = [
            self.scenario.to_string(),
            self.cells.to_string(),
            self.cbs_antennas.to_string(),
            self.eaps_per_cell.to_string(),
            self.eap_antennas.to_string(),
            self.users_per_cell.to_string(),
            self.tau_c.to_string(),
            self.tau_p.to_string(),
            fmt_f64(self.p_u),
            fmt_f64(self.p_d),
            fmt_f64(self.noise_psd_dbm_hz),
            fmt_f64(self.noise_figure_db),
            fmt_f64(self.bandwidth_hz),
            fmt_f64(self.area_m),
            fmt_f64(self.cell_m),
            fmt_f64(self.eap_inset_m),
            fmt_f64(self.min_distance_m),
            self.drops.to_string(),
            self.seed.to_string(),
            self.fading_mode.as_str().to_string(),
            fmt_f64(self.angular_spread_deg),
            fmt_f64(pl.pl_ref_db),
            fmt_f64(pl.pl_d0_m),
            fmt_f64(pl.pl_d1_m),
            fmt_f64(pl.shadow_sigma_db),
            self.pilot_gain.to_string(),
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn parse_num<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("'{value}' ({e})"))
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Thermal noise power in watts:
/// `10^((psd + 10 log10(B) + NF - 30) / 10)`.
pub fn noise_power(config: &NetworkConfig) -> Result<f64> {
    noise_power_w(config.noise_psd_dbm_hz, config.bandwidth_hz, config.noise_figure_db)
}

pub fn noise_power_w(psd_dbm_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::Config(ConfigError::new(format!("bandwidth must be positive, got {bandwidth_hz}"))));
    }
    let dbm = psd_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db;
    Ok(10f64.powf((dbm - 30.0) / 10.0))
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}
