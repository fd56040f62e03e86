use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hetmimo_core::campaign::{drop_diagnostics, summary_json, write_results_csv};
use hetmimo_core::validation::{run_validation, ValidationOptions};
use hetmimo_core::{check_equal_budget, run_campaign, CampaignResult, Error, NetworkConfig, Scenario};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::plot::{cdf_svg, Curve};

/// Why a command stopped, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Validation tolerance violated or the simulation failed.
    Check(String),
    /// Unreadable or invalid configuration.
    Config(String),
    /// Output could not be written.
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Check(m) | Failure::Config(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(c) => Failure::Config(c.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Hmmimo,
    Cfmmimo,
    Cmmimo,
    All,
}

impl ScenarioArg {
    fn scenarios(self) -> Vec<Scenario> {
        match self {
            ScenarioArg::Hmmimo => vec![Scenario::Hmmimo],
            ScenarioArg::Cfmmimo => vec![Scenario::Cfmmimo],
            ScenarioArg::Cmmimo => vec![Scenario::Cmmimo],
            ScenarioArg::All => Scenario::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Configuration file; repeat to compare several. Defaults to the built-in
    /// full-scale preset.
    #[arg(long = "config", value_name = "PATH")]
    pub configs: Vec<PathBuf>,
    /// Scenarios to run. Other scenarios are derived from an hmmimo config.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long)]
    pub drops: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub output: PathBuf,
    /// Write cdf_ul.svg and cdf_dl.svg.
    #[arg(long)]
    pub emit_plot: bool,
    /// Write diagnostics.json with analytic and simulated term powers for drop 0.
    #[arg(long)]
    pub diagnostics: bool,
    /// Compare scenarios even if their antenna or user totals differ.
    #[arg(long)]
    pub allow_unequal: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Relative tolerance applied to every statistical check.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Also report the literal downlink own-term variance against the closed
    /// form used for SE, without failing on it.
    #[arg(long)]
    pub paper_mode_dl: bool,
    /// Random instances per suite.
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct Manifest {
    config_hash: String,
    artifact_version: &'static str,
    timestamp: String,
    scenarios: Vec<Scenario>,
    outputs: Vec<String>,
}

fn load_configs(args: &RunArgs) -> Result<Vec<NetworkConfig>, Failure> {
    let mut bases = Vec::new();
    if args.configs.is_empty() {
        bases.push(NetworkConfig::reference());
    }
    for path in &args.configs {
        let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let cfg = NetworkConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        bases.push(cfg);
    }
    let mut out = Vec::new();
    for base in bases {
        let mut base = base;
        if let Some(d) = args.drops {
            base.drops = d;
        }
        if let Some(s) = args.seed {
            base.seed = s;
        }
        match args.scenario {
            None => out.push(base),
            Some(sel) => {
                for s in sel.scenarios() {
                    out.push(base.for_scenario(s).map_err(|e| Failure::Config(e.to_string()))?);
                }
            }
        }
    }
    for cfg in &out {
        cfg.validate().map_err(|e| Failure::Config(format!("{}: {e}", cfg.scenario)))?;
    }
    Ok(out)
}

/// SHA-256 of the canonical text of every configuration, in run order.
pub fn config_hash(configs: &[NetworkConfig]) -> String {
    let mut h = Sha256::new();
    for c in configs {
        h.update(c.to_canonical_text().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<String, Failure> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
    Ok(name.to_owned())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String, Failure> {
    write_file(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

pub fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let configs = load_configs(args)?;
    if !args.allow_unequal {
        check_equal_budget(&configs).map_err(|e| Failure::Config(e.to_string()))?;
    }
    fs::create_dir_all(&args.output).map_err(io_err(&args.output))?;

    let mut results: Vec<CampaignResult> = Vec::new();
    for cfg in &configs {
        let r = run_campaign(cfg)?;
        println!(
            "{:<8} drops={:<7} samples={:<8} UL likely95={:.4} mean={:.4}  DL likely95={:.4} mean={:.4}",
            cfg.scenario,
            cfg.drops,
            r.ul.n(),
            r.ul.likely95(),
            r.ul.mean(),
            r.dl.likely95(),
            r.dl.mean()
        );
        results.push(r);
    }

    let dir = args.output.as_path();
    let mut outputs = vec![write_file(dir, "results.csv", |w| write_results_csv(&results, w))?];
    outputs.push(write_json(dir, "summary.json", &summary_json(&results))?);
    if args.emit_plot {
        for (name, title, pick) in
            [("cdf_ul.svg", "Uplink per-user SE", true), ("cdf_dl.svg", "Downlink per-user SE", false)]
        {
            let curves: Vec<Curve> = results
                .iter()
                .map(|r| Curve { label: r.scenario().to_string(), cdf: if pick { r.ul.clone() } else { r.dl.clone() } })
                .collect();
            let svg = cdf_svg(title, &curves);
            outputs.push(write_file(dir, name, |w| w.write_all(svg.as_bytes()))?);
        }
    }
    if args.diagnostics {
        let diags = configs.iter().map(|c| drop_diagnostics(c, 0, 2_000)).collect::<Result<Vec<_>, _>>()?;
        outputs.push(write_json(dir, "diagnostics.json", &diags)?);
    }
    let manifest = Manifest {
        config_hash: config_hash(&configs),
        artifact_version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        scenarios: configs.iter().map(|c| c.scenario).collect(),
        outputs: outputs.clone(),
    };
    write_json(dir, "manifest.json", &manifest)?;
    println!("wrote {} and manifest.json to {}", outputs.join(", "), dir.display());
    Ok(())
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    if let Some(t) = args.tolerance {
        if t.is_nan() || t <= 0.0 {
            return Err(Failure::Config(format!("tolerance must be positive, got {t}")));
        }
    }
    let opts = ValidationOptions {
        instances: args.instances,
        tolerance: args.tolerance,
        paper_mode_dl: args.paper_mode_dl,
        seed: args.seed,
        ..ValidationOptions::default()
    };
    let report = run_validation(&opts)?;
    for c in &report.checks {
        println!("{c}");
    }
    let failed: Vec<_> = report.failures().collect();
    if failed.is_empty() {
        println!("all {} checks within tolerance", report.checks.iter().filter(|c| !c.informational).count());
        Ok(())
    } else {
        let names: Vec<String> = failed.iter().map(|c| format!("{} #{} {}", c.suite, c.instance, c.term)).collect();
        Err(Failure::Check(format!("{} check(s) out of tolerance: {}", failed.len(), names.join("; "))))
    }
}
