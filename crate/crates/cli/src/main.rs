//! `bivox`: mine, analyze, serve, export and compare bicluster catalogs.
//!
//! Each subcommand prints one JSON summary line on stdout (one per δ for a
//! mining sweep); progress and diagnostics go to stderr. Exit codes: 0
//! success, 1 usage, 2 data error, 3 internal error, 4 `compare` found a
//! difference.

mod compare;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bivox::analysis::{AnalysisBundle, AnalysisOptions, Linkage};
use bivox::data::load_normalized;
use bivox::miner::{brute_force_oracle, mine_all_with_workers, VarId, ORACLE_MAX_VARIABLES, ORACLE_MAX_VOXELS};
use bivox::synth::{generate, SyntheticConfig};
use bivox::{BiclusterCatalog, DatasetManifest, Dims, Error, MiningParams, Provenance};
use bivox_server::{AppState, SelectionRef};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const USAGE: u8 = 1;
const DATA: u8 = 2;
const INTERNAL: u8 = 3;
const DIFFER: u8 = 4;

#[derive(Parser)]
#[command(
    name = "bivox",
    version,
    about = "Closed bicluster mining and co-analysis for multivariate volumes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine every closed δ-coherent bicluster of a dataset.
    Mine(MineArgs),
    /// Enumerate biclusters by brute force; tiny instances only.
    Oracle(OracleArgs),
    /// Diff two catalogs (exit 0 when they hold the same biclusters, 4 otherwise).
    Compare(CompareArgs),
    /// Write the co-analysis bundle: variable-set table, dendrograms, groups, projections.
    Analyze(AnalyzeArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Export a catalog, a probability volume or parallel-coordinate data.
    Export(ExportArgs),
    /// Write a seeded synthetic dataset with a planted coherent region.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Minimum bicluster size as a fraction of all voxels.
    #[arg(long, default_value_t = 0.002)]
    minv_frac: f64,
    /// Drop biclusters larger than this fraction of all voxels (1 disables).
    #[arg(long, default_value_t = 0.10)]
    max_voxel_frac: f64,
    /// Restrict mining to these variable ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<VarId>>,
    /// Largest variable-set size to enumerate.
    #[arg(long)]
    max_card: Option<usize>,
}

impl ParamArgs {
    fn params(&self, delta: f64) -> MiningParams {
        MiningParams {
            delta,
            minv_frac: self.minv_frac,
            max_voxel_frac: self.max_voxel_frac,
            variable_subset: self.vars.clone(),
            max_cardinality: self.max_card,
        }
    }
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Catalog path. A sweep needs a `{delta}` placeholder, e.g. `cat-{delta}.json`.
    #[arg(long, short)]
    out: PathBuf,
    /// Tolerance in normalized units; a comma-separated list runs a sweep.
    #[arg(long, value_delimiter = ',', default_value = "20")]
    delta: Vec<f64>,
    #[command(flatten)]
    params: ParamArgs,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Write the compact binary catalog instead of JSON.
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    delta: f64,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkageArg {
    Weighted,
    Average,
}

#[derive(Args)]
struct AnalysisArgs {
    /// Dendrogram linkage: WPGMA (weighted) or UPGMA (average).
    #[arg(long, value_enum, default_value = "weighted")]
    linkage: LinkageArg,
    #[arg(long, default_value_t = bivox::analysis::DEFAULT_TARGET_GROUPS)]
    target_groups: usize,
    /// Largest merge height allowed inside a default group.
    #[arg(long, default_value_t = bivox::analysis::DEFAULT_COHERENCE)]
    coherence: f64,
}

impl AnalysisArgs {
    fn options(&self) -> Result<AnalysisOptions, CliError> {
        if self.target_groups == 0 {
            return Err(CliError::usage("--target-groups must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.coherence) {
            return Err(CliError::usage("--coherence must lie in [0, 1]"));
        }
        Ok(AnalysisOptions {
            linkage: match self.linkage {
                LinkageArg::Weighted => Linkage::Weighted,
                LinkageArg::Average => Linkage::Average,
            },
            target_groups: self.target_groups,
            coherence: self.coherence,
            ..AnalysisOptions::default()
        })
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Require `Authorization: Bearer <token>` on every route but /api/health.
    #[arg(long)]
    token: Option<String>,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ExportKind {
    Catalog,
    ProbabilityVolume,
    Pcdata,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long, value_enum)]
    kind: ExportKind,
    /// `bicluster:ID` or `group:VARSET-GROUP` (default grouping).
    #[arg(long)]
    selection: Option<SelectionRef>,
    /// Histogram bins for pcdata.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, short)]
    out: PathBuf,
    /// Catalog export in the binary form.
    #[arg(long)]
    binary: bool,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the raw files and manifest.json.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Tolerance the planted region is built for (pair spread at most δ/2).
    #[arg(long, default_value_t = 20.0)]
    delta: f64,
    /// Grid edge length.
    #[arg(long, default_value_t = 32)]
    size: usize,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Params(_) => USAGE,
            Error::OutOfMemory { .. } => INTERNAL,
            _ => DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = u8> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Mine(a) => mine(a),
        Command::Oracle(a) => oracle(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Analyze(a) => analyze(a),
        Command::Serve(a) => serve(a),
        Command::Export(a) => export(a),
        Command::Synth(a) => synth(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn save_catalog(catalog: &BiclusterCatalog, path: &Path, binary: bool) -> CliResult<()> {
    if binary {
        write_file(path, &catalog.to_binary())
    } else {
        write_file(path, catalog.to_json().as_bytes())
    }
}

fn delta_path(template: &Path, delta: f64) -> PathBuf {
    PathBuf::from(template.to_string_lossy().replace("{delta}", &delta.to_string()))
}

fn mine(args: MineArgs) -> CliResult {
    if args.delta.len() > 1 && !args.out.to_string_lossy().contains("{delta}") {
        return Err(CliError::usage("a δ sweep needs a {delta} placeholder in --out"));
    }
    let manifest = DatasetManifest::from_path(&args.manifest)?;
    let runs: Vec<MiningParams> = args.delta.iter().map(|&d| args.params.params(d)).collect();
    for p in &runs {
        p.validate(manifest.variables.len())?;
    }
    let (matrix, _) = load_normalized(&manifest)?;
    let provenance = Provenance::of(&manifest);
    eprintln!(
        "loaded '{}': {} voxels x {} variables",
        manifest.name,
        matrix.n_voxels(),
        matrix.n_vars()
    );
    for p in runs {
        let start = Instant::now();
        let catalog = mine_all_with_workers(&matrix, &p, args.workers)?.with_provenance(provenance.clone());
        let seconds = start.elapsed().as_secs_f64();
        let out = delta_path(&args.out, p.delta);
        save_catalog(&catalog, &out, args.binary)?;
        eprintln!(
            "delta {}: {} biclusters in {seconds:.2}s -> {}",
            p.delta,
            catalog.len(),
            out.display()
        );
        let summary = json!({
            "command": "mine",
            "dataset": manifest.name,
            "delta": p.delta,
            "minv": p.min_voxels(matrix.n_voxels()),
            "biclusters": catalog.len(),
            "varsets": catalog.varsets().count(),
            "seconds": seconds,
            "workers": args.workers,
            "catalog": out,
        });
        println!("{summary}");
    }
    Ok(0)
}

fn oracle(args: OracleArgs) -> CliResult {
    let manifest = DatasetManifest::from_path(&args.manifest)?;
    let params = args.params.params(args.delta);
    params.validate(manifest.variables.len())?;
    let (n, m) = (
        manifest.dims.len(),
        params.active_variables(manifest.variables.len()).len(),
    );
    if n > ORACLE_MAX_VOXELS || m > ORACLE_MAX_VARIABLES {
        return Err(Error::TooLarge(format!(
            "{n} voxels x {m} variables; the oracle handles at most {ORACLE_MAX_VOXELS} x {ORACLE_MAX_VARIABLES}"
        ))
        .into());
    }
    let (matrix, _) = load_normalized(&manifest)?;
    let start = Instant::now();
    let catalog = brute_force_oracle(&matrix, &params)?.with_provenance(Provenance::of(&manifest));
    save_catalog(&catalog, &args.out, args.binary)?;
    let summary = json!({
        "command": "oracle",
        "dataset": manifest.name,
        "delta": params.delta,
        "biclusters": catalog.len(),
        "seconds": start.elapsed().as_secs_f64(),
        "catalog": args.out,
    });
    println!("{summary}");
    Ok(0)
}

fn compare_cmd(args: CompareArgs) -> CliResult {
    let a = BiclusterCatalog::load(&args.a)?;
    let b = BiclusterCatalog::load(&args.b)?;
    let report = compare::compare(&a, &b);
    let mut line = serde_json::to_value(&report).map_err(|e| CliError {
        code: INTERNAL,
        message: e.to_string(),
    })?;
    line["command"] = json!("compare");
    println!("{line}");
    Ok(if report.identical { 0 } else { DIFFER })
}

fn load_checked(manifest: &Path, catalog: &Path) -> CliResult<(DatasetManifest, BiclusterCatalog)> {
    let manifest = DatasetManifest::from_path(manifest)?;
    let catalog = BiclusterCatalog::load(catalog)?;
    catalog.check_provenance(&manifest)?;
    Ok((manifest, catalog))
}

fn analyze(args: AnalyzeArgs) -> CliResult {
    let options = args.analysis.options()?;
    let (manifest, catalog) = load_checked(&args.manifest, &args.catalog)?;
    let (matrix, _) = load_normalized(&manifest)?;
    let start = Instant::now();
    let bundle = AnalysisBundle::compute(&catalog, &matrix, &options)?;
    write_file(&args.out, bundle.to_json().as_bytes())?;
    let summary = json!({
        "command": "analyze",
        "dataset": manifest.name,
        "biclusters": catalog.len(),
        "varsets": bundle.varsets.len(),
        "seconds": start.elapsed().as_secs_f64(),
        "bundle": args.out,
    });
    println!("{summary}");
    Ok(0)
}

fn serve(args: ServeArgs) -> CliResult {
    let options = args.analysis.options()?;
    let state = AppState::load(&args.manifest, &args.catalog, options)?.with_token(args.token);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError {
            code: INTERNAL,
            message: e.to_string(),
        })?;
    runtime
        .block_on(bivox_server::serve(state, args.bind))
        .map_err(|e| CliError {
            code: INTERNAL,
            message: format!("serving on {}: {e}", args.bind),
        })?;
    Ok(0)
}

fn f32_le(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn export(args: ExportArgs) -> CliResult {
    match (args.kind, args.selection) {
        (ExportKind::Catalog, Some(_)) => {
            return Err(CliError::usage("--selection does not apply to a catalog export"))
        }
        (ExportKind::ProbabilityVolume | ExportKind::Pcdata, None) => {
            return Err(CliError::usage("this export needs --selection"))
        }
        _ => {}
    }
    if args.bins.is_some() && args.kind != ExportKind::Pcdata {
        return Err(CliError::usage("--bins only applies to pcdata"));
    }
    if args.binary && args.kind != ExportKind::Catalog {
        return Err(CliError::usage("--binary only applies to a catalog export"));
    }
    let options = args.analysis.options()?;
    let state = AppState::load(&args.manifest, &args.catalog, options)?;
    let mut summary = json!({ "command": "export", "out": args.out });
    match (args.kind, args.selection) {
        (ExportKind::Catalog, _) => {
            save_catalog(&state.catalog, &args.out, args.binary)?;
            summary["kind"] = json!("catalog");
            summary["biclusters"] = json!(state.catalog.len());
        }
        (ExportKind::ProbabilityVolume, Some(sel)) => {
            let vol = state.volume(sel, None)?;
            write_file(&args.out, &f32_le(&vol.values))?;
            let Dims { nx, ny, nz } = vol.dims;
            summary["kind"] = json!("probability_volume");
            summary["dims"] = json!([nx, ny, nz]);
        }
        (ExportKind::Pcdata, Some(sel)) => {
            let pc = state.pcdata(sel, None, args.bins)?;
            let text = serde_json::to_string(&pc).map_err(|e| CliError {
                code: INTERNAL,
                message: e.to_string(),
            })?;
            write_file(&args.out, text.as_bytes())?;
            summary["kind"] = json!("pcdata");
            summary["voxels"] = json!(pc.voxel_count);
        }
        _ => unreachable!("checked above"),
    }
    println!("{summary}");
    Ok(0)
}

fn synth(args: SynthArgs) -> CliResult {
    if args.size < 2 {
        return Err(CliError::usage("--size must be at least 2"));
    }
    let mut config = SyntheticConfig::planted_default(args.seed, args.delta);
    config.dims = Dims::new(args.size, args.size, args.size);
    config.name = format!("synthetic-{}", args.size);
    let data = generate(&config)?;
    let manifest = data.write(&args.out)?;
    let planted: Vec<_> = data
        .planted
        .iter()
        .map(|r| json!({ "variables": r.variables, "voxels": r.voxels }))
        .collect();
    let planted_path = args.out.join("planted.json");
    write_file(&planted_path, serde_json::Value::from(planted).to_string().as_bytes())?;
    let summary = json!({
        "command": "synth",
        "manifest": manifest,
        "planted": planted_path,
        "seed": args.seed,
        "voxels": data.matrix.n_voxels(),
        "variables": data.matrix.n_vars(),
    });
    println!("{summary}");
    Ok(0)
}
