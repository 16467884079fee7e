//! The `craternav` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 input-data error, 3 runtime failure.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::catalog::{
    generate_synthetic, load_catalog, write_catalog, ColumnMap, CraterCatalog, LoadOptions, SyntheticSpec,
};
use crate::config::{load_config, render_config};
use crate::error::Error;
use crate::io::{
    sha256_file, write_rmse_table, write_steps_csv, CatalogFingerprint, ManifestCommand, OutputFile, RunManifest,
    MANIFEST_SCHEMA,
};
use crate::plot::write_run_plots;
use crate::scenario::{crater_limit_sweep, run_scenario, CraterLimit, ScenarioConfig, DEFAULT_SWEEP_LIMITS};
use crate::sensor::ThresholdUnits;
use crate::TOOL_VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const STEPS_FILE: &str = "steps.csv";
pub const RMSE_FILE: &str = "rmse_table.csv";

#[derive(Debug, Parser)]
#[command(
    name = "craternav",
    version,
    about = "Crater-based lunar descent navigation simulator"
)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crater catalog tools.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Run one descent and write steps.csv.
    Run(RunArgs),
    /// Run the descent once per crater limit and write rmse_table.csv.
    Sweep(SweepArgs),
    /// Rerun a command from its manifest.
    Replay(ReplayArgs),
    /// Print the default scenario configuration.
    DefaultConfig,
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// Convert a delimited crater table into the canonical catalog CSV.
    Import(ImportArgs),
    /// Write a synthetic catalog with a truncated power-law size distribution.
    Generate(GenerateArgs),
    /// Print the diameter breakdown of a catalog.
    Summary { catalog: PathBuf },
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `robbins`, or `field=column` pairs for id, name, lat, lon, diameter.
    #[arg(long)]
    pub columns: Option<String>,
    /// Rows with smaller diameters are skipped; 0 keeps everything.
    #[arg(long, default_value_t = 1.0)]
    pub min_diameter_km: f64,
    /// Per-row rejection report (CSV). Defaults to `<out>.rejected.csv`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::catalog::LUNAR_TOTAL_COUNT)]
    pub count: usize,
    #[arg(long)]
    pub d_min_km: Option<f64>,
    #[arg(long)]
    pub d_max_km: Option<f64>,
    /// Cumulative size-frequency slope; defaults to the lunar calibration.
    #[arg(long)]
    pub exponent: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct CommonRunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write SVG charts next to the CSV output.
    #[arg(long)]
    pub plots: bool,
    /// Zero measurement noise and certain identification.
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long, value_parser = parse_units)]
    pub eq9_units: Option<ThresholdUnits>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonRunArgs,
    /// Crater limit for this run (integer or `unlimited`).
    #[arg(long, value_parser = parse_limit)]
    pub limit: Option<CraterLimit>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonRunArgs,
    /// Comma-separated crater limits, e.g. `10,20,50,100,200,unlimited`.
    #[arg(long, value_parser = parse_limit, value_delimiter = ',')]
    pub limits: Option<Vec<CraterLimit>>,
    /// RMSE window `start,end` in seconds.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Catalog to use instead of the path recorded in the manifest (its hash must still match).
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Fail unless every output hash matches the manifest.
    #[arg(long)]
    pub verify: bool,
}

fn parse_units(s: &str) -> Result<ThresholdUnits, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_limit(s: &str) -> Result<CraterLimit, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("window must be `start,end`")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad window start `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad window end `{b}`"))?;
    if !(a.is_finite() && b.is_finite() && b >= a) {
        return Err(format!("window [{a}, {b}] is not an interval"));
    }
    Ok((a, b))
}

/// A failure tagged with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_RUNTIME };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    init_logging(cli.verbose);
    match execute(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

pub fn execute(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Catalog(c) => cmd_catalog(c, out),
        Command::Run(a) => cmd_run(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Replay(a) => cmd_replay(a, out),
        Command::DefaultConfig => {
            write!(out, "{}", render_config(&ScenarioConfig::default())).map_err(Error::from)?;
            Ok(())
        }
    }
}

fn print_summary(cat: &CraterCatalog, out: &mut dyn Write) -> CmdResult {
    let s = cat.summary();
    writeln!(out, "{} craters loaded", s.total).map_err(Error::from)?;
    writeln!(out, "  larger than 1 km:  {}", s.above_1km).map_err(Error::from)?;
    writeln!(out, "  larger than 5 km:  {}", s.above_5km).map_err(Error::from)?;
    writeln!(out, "  larger than 20 km: {}", s.above_20km).map_err(Error::from)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Error> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::file(path, e))
}

fn read_catalog(path: &Path) -> Result<CraterCatalog, Error> {
    let file = fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let opts = LoadOptions {
        source_name: Some(path.display().to_string()),
        ..Default::default()
    };
    let (cat, report) = load_catalog(BufReader::new(file), &opts)?;
    for r in &report.rejected {
        log::warn!("{}: line {} rejected: {}", path.display(), r.line, r.reason);
    }
    Ok(cat)
}

pub fn cmd_catalog(cmd: CatalogCommand, out: &mut dyn Write) -> CmdResult {
    match cmd {
        CatalogCommand::Import(a) => {
            let column_map = match &a.columns {
                Some(spec) => ColumnMap::parse(spec).map_err(|e| Failure::usage(e.to_string()))?,
                None => ColumnMap::default(),
            };
            if !(a.min_diameter_km >= 0.0) {
                return Err(Failure::usage("--min-diameter-km must be nonnegative"));
            }
            let opts = LoadOptions {
                column_map,
                min_diameter_km: (a.min_diameter_km > 0.0).then_some(a.min_diameter_km),
                source_name: Some(a.input.display().to_string()),
            };
            let file = fs::File::open(&a.input).map_err(|e| Error::file(&a.input, e))?;
            let (cat, report) = load_catalog(BufReader::new(file), &opts)?;
            let mut w = create(&a.out)?;
            write_catalog(&cat, &mut w)?;
            w.flush().map_err(Error::from)?;
            let report_path = a.report.unwrap_or_else(|| {
                let mut p = a.out.clone().into_os_string();
                p.push(".rejected.csv");
                p.into()
            });
            report.write_csv(create(&report_path)?)?;
            print_summary(&cat, out)?;
            writeln!(
                out,
                "{} rows read, {} rejected, {} below the minimum diameter",
                report.rows_read,
                report.rejected.len(),
                report.below_min_diameter
            )
            .map_err(Error::from)?;
            Ok(())
        }
        CatalogCommand::Generate(a) => {
            let lunar = SyntheticSpec::lunar(a.seed);
            let spec = SyntheticSpec {
                count: a.count,
                d_min_km: a.d_min_km.unwrap_or(lunar.d_min_km),
                d_max_km: a.d_max_km.unwrap_or(lunar.d_max_km),
                exponent: a.exponent.unwrap_or(lunar.exponent),
                seed: a.seed,
            };
            spec.validate().map_err(|e| Failure::usage(e.to_string()))?;
            let cat = generate_synthetic(&spec)?;
            let mut w = create(&a.out)?;
            write_catalog(&cat, &mut w)?;
            w.flush().map_err(Error::from)?;
            print_summary(&cat, out)
        }
        CatalogCommand::Summary { catalog } => print_summary(&read_catalog(&catalog)?, out),
    }
}

/// Config from file (or defaults) with command-line overrides applied.
fn resolve_config(common: &CommonRunArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.noiseless {
        cfg = cfg.noiseless();
    }
    if let Some(units) = common.eq9_units {
        cfg.eq9_units = units;
    }
    if let Some(c) = &common.catalog {
        cfg.catalog_path = Some(c.display().to_string());
    }
    if cfg.catalog_path.is_none() {
        return Err(Failure::usage(
            "no catalog given: pass --catalog <FILE> or set catalog_path in the config\n\nUsage: craternav run --catalog <FILE> --out-dir <DIR> [--config <FILE>]",
        ));
    }
    cfg.validate()?;
    Ok(cfg)
}

struct LoadedCatalog {
    catalog: CraterCatalog,
    fingerprint: CatalogFingerprint,
}

fn load_with_fingerprint(path: &Path) -> Result<LoadedCatalog, Error> {
    let sha256 = sha256_file(path)?;
    let catalog = read_catalog(path)?;
    Ok(LoadedCatalog {
        fingerprint: CatalogFingerprint {
            path: path.display().to_string(),
            sha256,
            count: catalog.len(),
        },
        catalog,
    })
}

fn prepare_out_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))
}

fn hash_outputs(dir: &Path, names: &[String]) -> Result<Vec<OutputFile>, Error> {
    names
        .iter()
        .map(|n| {
            Ok(OutputFile {
                path: n.clone(),
                sha256: sha256_file(&dir.join(n))?,
            })
        })
        .collect()
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), Error> {
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_toml()).map_err(|e| Error::file(&path, e))
}

pub fn cmd_run(args: RunArgs, out: &mut dyn Write) -> CmdResult {
    let mut cfg = resolve_config(&args.common)?;
    if let Some(limit) = args.limit {
        cfg.crater_limit = limit;
    }
    let path = PathBuf::from(cfg.catalog_path.clone().expect("resolved config has a catalog"));
    let loaded = load_with_fingerprint(&path)?;
    let manifest = execute_run(&cfg, &loaded, &args.common.out_dir, args.common.plots)?;
    let run_steps = manifest.outputs.len();
    writeln!(out, "wrote {run_steps} files to {}", args.common.out_dir.display()).map_err(Error::from)?;
    Ok(())
}

fn execute_run(cfg: &ScenarioConfig, loaded: &LoadedCatalog, dir: &Path, plots: bool) -> Result<RunManifest, Failure> {
    prepare_out_dir(dir)?;
    let run = run_scenario(cfg, &loaded.catalog)?;
    let mut names = vec![STEPS_FILE.to_string()];
    let mut w = create(&dir.join(STEPS_FILE))?;
    write_steps_csv(&run.records, &mut w)?;
    w.flush().map_err(Error::from)?;
    if plots {
        names.extend(write_run_plots(&run.records, dir, "")?);
    }
    info!("run: {} steps, termination {:?}", run.records.len(), run.termination);
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        tool_version: TOOL_VERSION.into(),
        command: ManifestCommand::Run,
        seed: cfg.seed,
        limits: None,
        window_s: None,
        plots,
        catalog: loaded.fingerprint.clone(),
        config: cfg.clone(),
        outputs: hash_outputs(dir, &names)?,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn cmd_sweep(args: SweepArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = resolve_config(&args.common)?;
    let limits = args.limits.unwrap_or_else(|| DEFAULT_SWEEP_LIMITS.to_vec());
    let window = args.window.unwrap_or((cfg.rmse_window_start_s, cfg.rmse_window_end_s));
    check_window(&cfg, window)?;
    let path = PathBuf::from(cfg.catalog_path.clone().expect("resolved config has a catalog"));
    let loaded = load_with_fingerprint(&path)?;
    let manifest = execute_sweep(&cfg, &loaded, &limits, window, &args.common.out_dir, args.common.plots)?;
    writeln!(
        out,
        "wrote {} files to {}",
        manifest.outputs.len(),
        args.common.out_dir.display()
    )
    .map_err(Error::from)?;
    Ok(())
}

fn check_window(cfg: &ScenarioConfig, window: (f64, f64)) -> CmdResult {
    if window.1 < 0.0 || window.0 > cfg.duration_s || window.1 < window.0 {
        return Err(Failure::usage(format!(
            "RMSE window [{}, {}] s lies outside the run [0, {}] s",
            window.0, window.1, cfg.duration_s
        )));
    }
    Ok(())
}

fn execute_sweep(
    cfg: &ScenarioConfig,
    loaded: &LoadedCatalog,
    limits: &[CraterLimit],
    window: (f64, f64),
    dir: &Path,
    plots: bool,
) -> Result<RunManifest, Failure> {
    let mut distinct = limits.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != limits.len() {
        return Err(Failure::usage("crater limits must be distinct"));
    }
    prepare_out_dir(dir)?;
    let sweep = crater_limit_sweep(cfg, &loaded.catalog, limits, window).map_err(|e| match e {
        Error::EmptyWindow { start, end } => Failure::runtime(format!(
            "no converged estimates in the RMSE window [{start}, {end}] s; the descent may end before it"
        )),
        other => other.into(),
    })?;
    let mut names = vec![RMSE_FILE.to_string()];
    let mut w = create(&dir.join(RMSE_FILE))?;
    write_rmse_table(&sweep.table, &mut w)?;
    w.flush().map_err(Error::from)?;
    for ((limit, _), run) in sweep.table.columns.iter().zip(&sweep.runs) {
        let name = format!("steps_limit_{limit}.csv");
        let mut w = create(&dir.join(&name))?;
        write_steps_csv(&run.records, &mut w)?;
        w.flush().map_err(Error::from)?;
        names.push(name);
        if plots {
            names.extend(write_run_plots(&run.records, dir, &format!("limit_{limit}_"))?);
        }
    }
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        tool_version: TOOL_VERSION.into(),
        command: ManifestCommand::Sweep,
        seed: cfg.seed,
        limits: Some(limits.to_vec()),
        window_s: Some([window.0, window.1]),
        plots,
        catalog: loaded.fingerprint.clone(),
        config: cfg.clone(),
        outputs: hash_outputs(dir, &names)?,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn cmd_replay(args: ReplayArgs, out: &mut dyn Write) -> CmdResult {
    let recorded = RunManifest::load(&args.manifest)?;
    if recorded.tool_version != TOOL_VERSION {
        log::warn!(
            "manifest written by version {}, replaying with {}",
            recorded.tool_version,
            TOOL_VERSION
        );
    }
    let path = args.catalog.unwrap_or_else(|| PathBuf::from(&recorded.catalog.path));
    let loaded = load_with_fingerprint(&path)?;
    if loaded.fingerprint.sha256 != recorded.catalog.sha256 {
        return Err(Error::Manifest(format!(
            "catalog {} has hash {}, manifest expects {}",
            path.display(),
            loaded.fingerprint.sha256,
            recorded.catalog.sha256
        ))
        .into());
    }
    let mut cfg = recorded.config.clone();
    cfg.seed = recorded.seed;
    let fresh = match recorded.command {
        ManifestCommand::Run => execute_run(&cfg, &loaded, &args.out_dir, recorded.plots)?,
        ManifestCommand::Sweep => {
            let limits = recorded
                .limits
                .clone()
                .ok_or_else(|| Failure::from(Error::Manifest("sweep manifest lists no limits".into())))?;
            let [a, b] = recorded
                .window_s
                .ok_or_else(|| Failure::from(Error::Manifest("sweep manifest has no window".into())))?;
            execute_sweep(&cfg, &loaded, &limits, (a, b), &args.out_dir, recorded.plots)?
        }
    };
    let mismatched: Vec<&str> = recorded
        .outputs
        .iter()
        .filter(|o| !fresh.outputs.iter().any(|f| f.path == o.path && f.sha256 == o.sha256))
        .map(|o| o.path.as_str())
        .collect();
    if mismatched.is_empty() {
        writeln!(out, "replay reproduced all {} outputs", recorded.outputs.len()).map_err(Error::from)?;
        Ok(())
    } else if args.verify {
        Err(Failure::runtime(format!(
            "outputs differ from the manifest: {}",
            mismatched.join(", ")
        )))
    } else {
        writeln!(out, "outputs differ from the manifest: {}", mismatched.join(", ")).map_err(Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(
            std::iter::once("craternav").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run(&["sweep", "--out-dir", "x", "--limits", "10,many"]).0, EXIT_USAGE);
        assert_eq!(run(&["sweep", "--out-dir", "x", "--window", "5"]).0, EXIT_USAGE);
        let (code, _, err) = run(&["run", "--out-dir", "x"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("no catalog given") && err.contains("Usage"));
    }

    #[test]
    fn help_and_version_exit_0() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("sweep"));
        assert_eq!(run(&["--version"]).0, EXIT_OK);
    }

    #[test]
    fn default_config_parses_back() {
        let (code, out, _) = run(&["default-config"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(crate::config::parse_config(&out).unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn window_parsing() {
        assert_eq!(parse_window("1800, 2400").unwrap(), (1800.0, 2400.0));
        assert!(parse_window("2400,1800").is_err());
        assert!(parse_window("x,1").is_err());
    }
}
