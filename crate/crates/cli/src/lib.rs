//! `edclust` subcommands: `cluster`, `simulate` and `benchmark`.

pub mod io;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use edclust_core::baselines::{BaselineMethod, BaselineSpec};
use edclust_core::eval::{EnergyMode, ExperimentReport};
use edclust_core::hclust::default_k_max;
use edclust_core::{
    agglomerate, build_experiment, cut, log_growth, normalize, run_experiment, select_k,
    silhouette, KMode, Method, Partition, Scenario, SilhouetteReport, SimSpec, TimeSeriesPanel,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::io::{matrix_to_csv, panel_to_csv, read_panel_csv, to_json_bytes, write_atomic};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Data(format!("{}: {err}", path.display()))
    }

    /// 2 for usage errors, 3 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
        }
    }
}

fn data_err(e: edclust_core::Error) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "edclust", version, about = "Energy-distance clustering of time series components")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster the columns of a CSV panel.
    Cluster(ClusterArgs),
    /// Write a simulated benchmark panel and its ground truth.
    Simulate(SimulateArgs),
    /// Run a replicated simulation study and score each method.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    None,
    Normalize,
    LogGrowth,
    LogGrowthThenNormalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Joint,
    BivariateSum,
}

impl From<Mode> for EnergyMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Joint => EnergyMode::Joint,
            Mode::BivariateSum => EnergyMode::BivariateSum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Energy,
    Acf,
    Pacf,
    Per,
    PerLp,
    IntPer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioArg {
    Nonlinear16,
    Arma20,
    Var40,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Nonlinear16 => Scenario::Nonlinear16,
            ScenarioArg::Arma20 => Scenario::Arma20,
            ScenarioArg::Var40 => Scenario::Var40,
        }
    }
}

/// Number of clusters: a fixed count or `auto` (silhouette).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clusters {
    Auto,
    Fixed(usize),
}

fn parse_clusters(s: &str) -> Result<Clusters, String> {
    match s {
        "auto" => Ok(Clusters::Auto),
        _ => s
            .parse::<usize>()
            .ok()
            .filter(|&k| k >= 1)
            .map(Clusters::Fixed)
            .ok_or_else(|| format!("expected a positive integer or `auto`, got `{s}`")),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    pub transform: Transform,
    #[arg(long, value_enum, default_value = "joint")]
    pub mode: Mode,
    #[arg(long, default_value_t = 1)]
    pub lag: usize,
    #[arg(long, value_enum, default_value = "energy")]
    pub method: MethodKind,
    #[arg(long = "acf-L", default_value_t = 10)]
    pub acf_l: usize,
    #[arg(long = "acf-p", default_value_t = BaselineSpec::DEFAULT_P_WEIGHT)]
    pub acf_p: f64,
    #[arg(long, value_parser = parse_clusters, default_value = "auto")]
    pub clusters: Clusters,
    /// Largest cluster count tried with `--clusters auto` (default min(d-1, 10)).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Recorded for provenance; clustering itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = edclust_core::simgen::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchmarkArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    /// Base seed; replicate `r` uses `seed ^ r`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = edclust_core::simgen::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Methods to compare (repeatable).
    #[arg(long, value_enum)]
    pub method: Vec<MethodKind>,
    /// Lags for energy methods (repeatable).
    #[arg(long, default_values_t = [1])]
    pub lag: Vec<usize>,
    #[arg(long, value_enum, default_value = "joint")]
    pub mode: Mode,
    /// Maximum lags for ACF/PACF methods (repeatable).
    #[arg(long = "acf-L", default_values_t = [10])]
    pub acf_l: Vec<usize>,
    #[arg(long = "acf-p", default_value_t = BaselineSpec::DEFAULT_P_WEIGHT)]
    pub acf_p: f64,
    /// `auto` scores silhouette-chosen partitions; any number uses the true count.
    #[arg(long, value_parser = parse_clusters, default_value = "4")]
    pub clusters: Clusters,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cluster(a) => cmd_cluster(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Benchmark(a) => cmd_benchmark(&a).map(|_| ()),
    }
}

fn config_json<T: Serialize>(args: &T) -> String {
    serde_json::to_string(args).expect("configs serialize")
}

fn baseline_method(kind: MethodKind) -> Option<BaselineMethod> {
    match kind {
        MethodKind::Energy => None,
        MethodKind::Acf => Some(BaselineMethod::Acf),
        MethodKind::Pacf => Some(BaselineMethod::Pacf),
        MethodKind::Per => Some(BaselineMethod::Per),
        MethodKind::PerLp => Some(BaselineMethod::PerLp),
        MethodKind::IntPer => Some(BaselineMethod::IntPer),
    }
}

fn build_method(kind: MethodKind, lag: usize, mode: Mode, acf_l: usize, acf_p: f64) -> Result<Method, CliError> {
    let usage = |e: edclust_core::Error| CliError::Usage(e.to_string());
    Ok(match baseline_method(kind) {
        None => Method::Energy { lag, mode: mode.into() },
        Some(m @ (BaselineMethod::Acf | BaselineMethod::Pacf)) => {
            Method::Baseline(BaselineSpec::new(m, acf_l, acf_p).map_err(usage)?)
        }
        Some(m) => Method::periodogram(m),
    })
}

fn apply_transform(panel: TimeSeriesPanel, t: Transform) -> Result<TimeSeriesPanel, CliError> {
    match t {
        Transform::None => Ok(panel),
        Transform::Normalize => normalize(&panel).map_err(data_err),
        Transform::LogGrowth => log_growth(&panel).map_err(data_err),
        Transform::LogGrowthThenNormalize => {
            normalize(&log_growth(&panel).map_err(data_err)?).map_err(data_err)
        }
    }
}

fn labelled(part: &Partition, names: &[String]) -> serde_json::Value {
    let labels: serde_json::Map<String, serde_json::Value> = names
        .iter()
        .zip(part.labels())
        .map(|(n, l)| (n.clone(), json!(l + 1)))
        .collect();
    let clusters: Vec<Vec<&String>> = part
        .clusters()
        .iter()
        .map(|c| c.iter().map(|&i| &names[i]).collect())
        .collect();
    json!({ "k": part.num_clusters(), "labels": labels, "clusters": clusters })
}

/// Full pipeline on a CSV panel. Writes `dissimilarity.csv`,
/// `dendrogram.json`, `dendrogram.nwk` and `partition.json` to `--out-dir`.
pub fn cmd_cluster(args: &ClusterArgs) -> Result<(), CliError> {
    if let (Clusters::Auto, Some(k)) = (args.clusters, args.k_max) {
        if k < 2 {
            return Err(CliError::Usage("--k-max must be at least 2".into()));
        }
    }
    let method = build_method(args.method, args.lag, args.mode, args.acf_l, args.acf_p)?;
    let config = config_json(args);

    let panel = apply_transform(read_panel_csv(&args.input)?, args.transform)?;
    let names = panel.names().to_vec();
    let d = method.dissimilarity(&panel).map_err(data_err)?;
    let dend = agglomerate(&d).map_err(data_err)?;

    let (part, sil): (Partition, Option<(usize, Vec<SilhouetteReport>)>) = match args.clusters {
        Clusters::Fixed(k) => {
            if k > d.size() {
                return Err(CliError::Usage(format!("--clusters {k} exceeds {} components", d.size())));
            }
            (cut(&dend, k).map_err(data_err)?, None)
        }
        Clusters::Auto => {
            let k_max = args.k_max.unwrap_or_else(|| default_k_max(d.size()));
            if k_max + 1 > d.size() {
                return Err(CliError::Usage(format!(
                    "--k-max {k_max} needs more than {} components",
                    d.size()
                )));
            }
            let (k, reports) = select_k(&dend, &d, k_max).map_err(data_err)?;
            (cut(&dend, k).map_err(data_err)?, Some((k, reports)))
        }
    };

    let version = edclust_core::VERSION;
    let config_value: serde_json::Value = serde_json::from_str(&config).expect("valid json");
    let out = &args.out_dir;
    write_atomic(&out.join("dissimilarity.csv"), matrix_to_csv(&d, &names, &config).as_bytes())?;

    let dendrogram = json!({
        "edclust_version": version,
        "config": config_value,
        "leaves": names,
        "merges": dend.merges(),
    });
    write_atomic(&out.join("dendrogram.json"), &to_json_bytes(&dendrogram)?)?;

    let newick = dend.to_newick(&names).map_err(data_err)?;
    let nwk = format!(
        "[edclust {version} method={} transform={} lag={} mode={}]\n{newick}\n",
        method,
        serde_json::to_value(args.transform).expect("enum").as_str().unwrap_or(""),
        args.lag,
        serde_json::to_value(args.mode).expect("enum").as_str().unwrap_or(""),
    );
    write_atomic(&out.join("dendrogram.nwk"), nwk.as_bytes())?;

    let mut partition = json!({
        "edclust_version": version,
        "config": config_value,
        "method": method.to_string(),
    });
    partition["partition"] = labelled(&part, &names);
    if let Some((k, reports)) = sil {
        let chosen = &reports[k - 2];
        partition["silhouette"] = json!({
            "k": k,
            "average": chosen.average,
            "values": names.iter().cloned().zip(chosen.values.iter().map(|&v| json!(v))).collect::<serde_json::Map<_, _>>(),
            "candidates": reports.iter().map(|r| json!({"k": r.k, "average": r.average})).collect::<Vec<_>>(),
        });
    } else if part.num_clusters() >= 2 {
        let s = silhouette(&d, &part).map_err(data_err)?;
        partition["silhouette"] = json!({ "k": s.k, "average": s.average });
    }
    write_atomic(&out.join("partition.json"), &to_json_bytes(&partition)?)?;
    Ok(())
}

/// Writes `panel.csv` and `truth.json` for one simulated panel.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let spec = SimSpec {
        scenario: args.scenario.into(),
        n: args.n,
        seed: args.seed,
        burn_in: args.burn_in,
    };
    let (panel, truth) = build_experiment(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = config_json(args);
    write_atomic(&args.out_dir.join("panel.csv"), panel_to_csv(&panel, &config).as_bytes())?;
    let truth_json = json!({
        "edclust_version": edclust_core::VERSION,
        "config": serde_json::from_str::<serde_json::Value>(&config).expect("valid json"),
        "spec": spec,
        "k0": truth.k0,
        "partition": labelled(&truth.partition, panel.names()),
    });
    write_atomic(&args.out_dir.join("truth.json"), &to_json_bytes(&truth_json)?)?;
    Ok(())
}

/// Replicated study. Writes `report.json` and a flat `scores.csv`.
pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<ExperimentReport, CliError> {
    if args.method.is_empty() {
        return Err(CliError::Usage("at least one --method is required".into()));
    }
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let mut methods = Vec::new();
    for &kind in &args.method {
        match kind {
            MethodKind::Energy => {
                for &lag in &args.lag {
                    methods.push(build_method(kind, lag, args.mode, 0, args.acf_p)?);
                }
            }
            MethodKind::Acf | MethodKind::Pacf => {
                for &l in &args.acf_l {
                    methods.push(build_method(kind, 0, args.mode, l, args.acf_p)?);
                }
            }
            _ => methods.push(build_method(kind, 0, args.mode, 0, args.acf_p)?),
        }
    }
    let spec = SimSpec {
        scenario: args.scenario.into(),
        n: args.n,
        seed: args.seed,
        burn_in: args.burn_in,
    };
    let k_mode = match args.clusters {
        Clusters::Auto => KMode::Silhouette,
        Clusters::Fixed(_) => KMode::KnownK0,
    };
    let report = run_experiment(&spec, &methods, args.reps, args.seed, k_mode).map_err(data_err)?;

    let config = config_json(args);
    let doc = json!({
        "edclust_version": edclust_core::VERSION,
        "config": serde_json::from_str::<serde_json::Value>(&config).expect("valid json"),
        "report": report,
    });
    write_atomic(&args.out_dir.join("report.json"), &to_json_bytes(&doc)?)?;

    let mut csv = io::provenance_line(&config);
    csv.push_str("method,replicate,seed,similarity,clusters\n");
    for m in &report.methods {
        for (r, (score, k)) in m.scores.iter().zip(&m.clusters).enumerate() {
            csv.push_str(&format!(
                "{},{r},{},{},{k}\n",
                m.method,
                report.replicate_seeds[r],
                io::format_f64(*score)
            ));
        }
    }
    write_atomic(&args.out_dir.join("scores.csv"), csv.as_bytes())?;
    Ok(report)
}
