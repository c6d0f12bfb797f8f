use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use etoff::certify::{Certifier, RelationId, CSV_HEADER};
use etoff::correction::SearchConfig;
use etoff::harness::{
    bound_ordering, bounds_table, run_sweep, selftest, SweepConfig, SweepSummary, BOUNDS_HEADER,
};
use etoff::quantum::Instance;

const SEED_ENV: &str = "ETOFF_SEED";

#[derive(Parser)]
#[command(
    name = "etoff",
    version,
    about = "Certify entropic noise-disturbance trade-off relations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify one relation on an instance file.
    Certify(CertifyArgs),
    /// Certify relations on randomly sampled instances.
    Sweep(SweepArgs),
    /// Tabulate the overlap bounds over a grid.
    Bounds(BoundsArgs),
    /// Run the built-in consistency checks.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags take precedence over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SearchArgs {
    /// Correction-search restarts per strategy.
    #[arg(long)]
    restarts: Option<usize>,
    /// Iteration cap per restart.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Seed for randomised steps (falls back to the config file, then ETOFF_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: SearchArgs,
    /// Instance file holding X, Z and the instrument.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    relation: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated relation ids.
    #[arg(long, value_delimiter = ',')]
    relation: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write the sweep summary as JSON to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated overlap values in (0, 1].
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Output file for the JSON report (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Additional instance fixtures to validate.
    #[arg(long)]
    fixture: Vec<PathBuf>,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    dim: Option<usize>,
    samples: Option<usize>,
    relations: Option<Vec<String>>,
    alphas: Option<Vec<f64>>,
    betas: Option<Vec<f64>>,
    c_grid: Option<Vec<f64>>,
    seed: Option<u64>,
    restarts: Option<usize>,
    max_iterations: Option<usize>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    instance: Option<PathBuf>,
}

/// Failure of a command: `Usage` for bad input (exit 2), `Failed` for a
/// check or certificate that did not pass (exit 1).
enum Failure {
    Usage(String),
    Failed(String),
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, Failure> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => serde_json::from_str(&read_file(p)?)
            .map_err(|e| usage(format!("config {}: {e}", p.display()))),
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn resolve_seed(flag: Option<u64>, cfg: &RunConfig) -> Result<Option<u64>, Failure> {
    match flag.or(cfg.seed) {
        Some(s) => Ok(Some(s)),
        None => env_seed(),
    }
}

fn search_config(args: &SearchArgs, cfg: &RunConfig, seed: u64) -> SearchConfig {
    let mut s = SearchConfig::default();
    if let Some(r) = args.restarts.or(cfg.restarts) {
        s.restarts = r;
    }
    if let Some(i) = args.max_iterations.or(cfg.max_iterations) {
        s.max_iterations = i;
    }
    s.seed = seed;
    s
}

fn emit(out: Option<&PathBuf>, text: &str) -> CmdResult {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| usage(format!("cannot write output: {e}")))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(usage)
}

fn parse_relation(s: &str) -> Result<RelationId, Failure> {
    s.parse().map_err(usage)
}

fn grid(flag: Vec<f64>, cfg: Option<Vec<f64>>, name: &str) -> Result<Vec<f64>, Failure> {
    let g = if flag.is_empty() {
        cfg.unwrap_or_default()
    } else {
        flag
    };
    if g.is_empty() {
        return Err(usage(format!("--{name} grid is empty")));
    }
    Ok(g)
}

fn certify_cmd(args: CertifyArgs) -> CmdResult {
    let cfg = load_config(args.common.config.as_ref())?;
    let path = args
        .instance
        .or(cfg.instance.clone())
        .ok_or_else(|| usage("--instance is required"))?;
    let instance: Instance = serde_json::from_str(&read_file(&path)?)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let relation = match args
        .relation
        .or_else(|| cfg.relations.as_ref().and_then(|r| r.first().cloned()))
    {
        Some(r) => parse_relation(&r)?,
        None => return Err(usage("--relation is required")),
    };
    let alpha = args
        .alpha
        .or(cfg.alphas.as_ref().and_then(|a| a.first().copied()))
        .ok_or_else(|| usage("--alpha is required"))?;
    let beta = args
        .beta
        .or(cfg.betas.as_ref().and_then(|a| a.first().copied()))
        .ok_or_else(|| usage("--beta is required"))?;
    let seed = resolve_seed(args.search.seed, &cfg)?.unwrap_or(0);
    let search = search_config(&args.search, &cfg, seed);

    let mut certifier = Certifier::from_instance(&instance, search).map_err(usage)?;
    let cert = certifier.certify(relation, alpha, beta).map_err(usage)?;
    let text = match args.common.format.or(cfg.format).unwrap_or(Format::Json) {
        Format::Json => to_json(&cert)?,
        Format::Csv => format!("{CSV_HEADER}\n{}\n", cert.row().to_csv()),
    };
    emit(args.common.out.as_ref().or(cfg.out.as_ref()), &text)?;
    if cert.passed {
        Ok(())
    } else {
        Err(Failure::Failed(format!(
            "{} violated at alpha = {alpha}, beta = {beta}: margin {:e}",
            relation, cert.margin
        )))
    }
}

fn print_summary(s: &SweepSummary) {
    eprintln!(
        "d = {}, {} samples, seed {}: {} certificates, {} failed, min margin {:e}",
        s.dim, s.samples, s.seed, s.certificates, s.failures, s.min_margin
    );
    for (r, st) in &s.by_relation {
        eprintln!(
            "  {r}: {} certificates, {} failed, min margin {:e}",
            st.certificates, st.failures, st.min_margin
        );
    }
    for r in &s.rejected {
        eprintln!(
            "  rejected {} (alpha = {}, beta = {}): {}",
            r.relation, r.alpha, r.beta, r.reason
        );
    }
    for e in &s.errors {
        eprintln!("  error: {e}");
    }
}

fn sweep_cmd(args: SweepArgs) -> CmdResult {
    let cfg = load_config(args.common.config.as_ref())?;
    let seed = resolve_seed(args.search.seed, &cfg)?.ok_or_else(|| {
        usage(format!(
            "a seed is required (--seed, config `seed` or {SEED_ENV})"
        ))
    })?;
    let relation_names = if args.relation.is_empty() {
        cfg.relations.clone().unwrap_or_default()
    } else {
        args.relation
    };
    if relation_names.is_empty() {
        return Err(usage("--relation list is empty"));
    }
    let relations = relation_names
        .iter()
        .map(|r| parse_relation(r))
        .collect::<Result<Vec<_>, _>>()?;
    let sweep = SweepConfig {
        dim: args
            .dim
            .or(cfg.dim)
            .ok_or_else(|| usage("--dim is required"))?,
        samples: args
            .samples
            .or(cfg.samples)
            .ok_or_else(|| usage("--samples is required"))?,
        relations,
        alphas: grid(args.alpha, cfg.alphas.clone(), "alpha")?,
        betas: grid(args.beta, cfg.betas.clone(), "beta")?,
        seed,
        search: search_config(&args.search, &cfg, seed),
        jobs: args.jobs.or(cfg.jobs).unwrap_or(0),
    };
    let report = run_sweep(&sweep).map_err(usage)?;
    let text = match args.common.format.or(cfg.format).unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv(),
        Format::Json => to_json(&report)?,
    };
    emit(args.common.out.as_ref().or(cfg.out.as_ref()), &text)?;
    if let Some(p) = &args.summary {
        emit(Some(p), &to_json(&report.summary)?)?;
    }
    print_summary(&report.summary);
    if report.summary.all_passed() {
        Ok(())
    } else {
        Err(Failure::Failed(format!(
            "{} of {} certificates failed, {} errors",
            report.summary.failures,
            report.summary.certificates,
            report.summary.errors.len()
        )))
    }
}

fn bounds_cmd(args: BoundsArgs) -> CmdResult {
    let cfg = load_config(args.common.config.as_ref())?;
    let cs = grid(args.c, cfg.c_grid.clone(), "c")?;
    let alphas = grid(args.alpha, cfg.alphas.clone(), "alpha")?;
    let betas = grid(args.beta, cfg.betas.clone(), "beta")?;
    let rows = bounds_table(&cs, &alphas, &betas).map_err(usage)?;
    let text = match args.common.format.or(cfg.format).unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = format!("{BOUNDS_HEADER}\n");
            for r in &rows {
                s.push_str(&r.to_csv());
                s.push('\n');
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Table<'a> {
                rows: &'a [etoff::harness::BoundsRow],
                order_one: Vec<etoff::harness::BoundOrdering>,
            }
            to_json(&Table {
                rows: &rows,
                order_one: bound_ordering(&cs).map_err(usage)?,
            })?
        }
    };
    emit(args.common.out.as_ref().or(cfg.out.as_ref()), &text)
}

fn selftest_cmd(args: SelftestArgs) -> CmdResult {
    let fixtures = args
        .fixture
        .iter()
        .map(|p| Ok((p.display().to_string(), read_file(p)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let report = selftest(&fixtures);
    emit(args.out.as_ref(), &to_json(&report)?)?;
    match report.first_failure {
        None => Ok(()),
        Some(f) => Err(Failure::Failed(f)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    let result = match cli.command {
        Command::Certify(a) => certify_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Selftest(a) => selftest_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
