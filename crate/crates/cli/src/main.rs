use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wishmix::baselines::WardVariant;
use wishmix::io::{self, FitConfig, KSource, ModelName, PipelineOptions, Preset, ScanName, SimulateConfig};
use wishmix::postprocess::ContingencyTable2x2;
use wishmix::spd::SpdMetric;
use wishmix::{Error, Result};

/// Bayesian clustering of SPD matrices with MFM-Wishart mixtures.
///
/// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
#[derive(Parser)]
#[command(name = "wishmix", version)]
struct Cli {
    /// Worker threads for parallel steps.
    #[arg(long, global = true, env = io::THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset bundle from a TOML config.
    Simulate(SimulateArgs),
    /// Turn per-subject time-series tables into a bundle of correlation matrices.
    Pipeline(PipelineArgs),
    /// Run the sampler on a dataset bundle.
    Fit(FitArgs),
    /// Ward and PAM on pairwise Riemannian distances.
    Baselines(BaselinesArgs),
    /// Score run results and baseline labels against true labels.
    Evaluate(EvaluateArgs),
    /// Aggregate metrics files over replicates.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    scales: Option<String>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    nu0: Option<f64>,
    #[arg(long)]
    t: Option<usize>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Directory of .csv/.tsv/.txt tables, one per subject.
    dir: PathBuf,
    /// 1-based channels, e.g. `40-46` or `1,3,5-7`; all when omitted.
    #[arg(long)]
    channels: Option<String>,
    /// Rows kept per file; the shortest file's length when omitted.
    #[arg(long)]
    length: Option<usize>,
    /// Skip the first row of every file.
    #[arg(long)]
    header: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Mfm,
    Dpm,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Simulation,
    Application,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanArg {
    Sequential,
    Random,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset bundle.
    dataset: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reuse the settings embedded in an earlier run result.
    #[arg(long, conflicts_with = "config")]
    from_result: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    proposal_sd: Option<f64>,
    #[arg(long)]
    kappa0: Option<f64>,
    #[arg(long)]
    nu_lo: Option<f64>,
    #[arg(long)]
    nu_hi: Option<f64>,
    #[arg(long)]
    psi0_scale: Option<f64>,
    #[arg(long)]
    nu_init: Option<f64>,
    #[arg(long, value_enum)]
    scan: Option<ScanArg>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    AffineInvariant,
    LogEuclidean,
}

#[derive(Clone, Copy, ValueEnum)]
enum WardArg {
    D2,
    D,
}

#[derive(Args)]
struct BaselinesArgs {
    dataset: PathBuf,
    /// Fixed number of clusters.
    #[arg(long, conflicts_with = "from_result", required_unless_present = "from_result")]
    k: Option<usize>,
    /// Take K from the Dahl partition of a run result.
    #[arg(long)]
    from_result: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "affine-invariant")]
    metric: MetricArg,
    #[arg(long, value_enum, default_value = "d2")]
    ward: WardArg,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset bundle holding the true labels.
    #[arg(long, required_unless_present = "table")]
    truth: Option<PathBuf>,
    /// Run results and baseline label files.
    estimates: Vec<PathBuf>,
    /// Print the Fisher exact test for a 2x2 table given as a,b,c,d.
    #[arg(long, value_parser = parse_table)]
    table: Option<ContingencyTable2x2>,
    #[arg(long, short, required_unless_present = "table")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Metrics files from `evaluate`.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

fn parse_table(s: &str) -> std::result::Result<ContingencyTable2x2, String> {
    let cells: Vec<u64> = s
        .split(',')
        .map(|c| c.trim().parse().map_err(|_| format!("{c:?} is not a count")))
        .collect::<std::result::Result<_, _>>()?;
    match cells[..] {
        [a, b, c, d] => Ok(ContingencyTable2x2::new(a, b, c, d)),
        _ => Err(format!("expected four counts a,b,c,d, got {}", cells.len())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wishmix: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let threads = io::thread_count(cli.threads)?;
    io::with_threads(threads, move || dispatch(cli.command))?
}

fn config_dir(path: Option<&Path>) -> PathBuf {
    path.and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default()
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => {
            let base: SimulateConfig = match &a.config {
                Some(p) => io::read_toml(p)?,
                None => SimulateConfig::default(),
            };
            let over = SimulateConfig {
                seed: a.seed,
                n: a.n,
                k0: a.k0,
                nu: a.nu,
                scales: a.scales,
                phi: a.phi,
                nu0: a.nu0,
                t: a.t,
                ..Default::default()
            };
            let bundle = io::cmd_simulate(&base.overlay(&over), &config_dir(a.config.as_deref()), &a.out)?;
            println!("wrote {} matrices of dimension {} to {}", bundle.len(), bundle.dim, a.out.display());
        }
        Command::Pipeline(a) => {
            let options = PipelineOptions {
                channels: a.channels.as_deref().map(str::parse).transpose()?,
                length: a.length,
                header: a.header,
            };
            let bundle = io::cmd_pipeline(&a.dir, &options, &a.out)?;
            println!("wrote {} correlation matrices of dimension {} to {}", bundle.len(), bundle.dim, a.out.display());
        }
        Command::Fit(a) => {
            let base = match (&a.config, &a.from_result) {
                (Some(p), _) => io::read_toml(p)?,
                (None, Some(r)) => io::RunResult::read(r)?.config,
                (None, None) => FitConfig::default(),
            };
            let over = FitConfig {
                seed: a.seed,
                model: a.model.map(|m| match m {
                    ModelArg::Mfm => ModelName::Mfm,
                    ModelArg::Dpm => ModelName::Dpm,
                }),
                preset: a.preset.map(|p| match p {
                    PresetArg::Simulation => Preset::Simulation,
                    PresetArg::Application => Preset::Application,
                }),
                iterations: a.iterations,
                burn_in: a.burn_in,
                thin: a.thin,
                proposal_sd: a.proposal_sd,
                kappa0: a.kappa0,
                nu_lo: a.nu_lo,
                nu_hi: a.nu_hi,
                psi0_scale: a.psi0_scale,
                nu_init: a.nu_init,
                scan: a.scan.map(|s| match s {
                    ScanArg::Sequential => ScanName::Sequential,
                    ScanArg::Random => ScanName::Random,
                }),
                gamma: a.gamma,
                lambda: a.lambda,
                alpha: a.alpha,
                ..Default::default()
            };
            let mut merged = base.overlay(&over);
            if a.psi0_scale.is_some() {
                merged.psi0 = None;
            }
            let r = io::cmd_fit(&a.dataset, &merged, &a.out)?;
            println!(
                "K+ = {}  nu mean = {:.3} [{:.3}, {:.3}]  ESS = {:.1}  acceptance = {:.3}  {:.2}s",
                r.partition.k_plus, r.nu.mean, r.nu.lower, r.nu.upper, r.nu.ess, r.nu.acceptance_rate, r.timing.total_seconds
            );
        }
        Command::Baselines(a) => {
            let k = match (a.k, a.from_result) {
                (Some(k), _) => KSource::Fixed(k),
                (None, Some(p)) => KSource::FromResult(p),
                (None, None) => return Err(Error::config("baselines", "give --k or --from-result")),
            };
            let metric = match a.metric {
                MetricArg::AffineInvariant => SpdMetric::AffineInvariant,
                MetricArg::LogEuclidean => SpdMetric::LogEuclidean,
            };
            let ward = match a.ward {
                WardArg::D2 => WardVariant::D2,
                WardArg::D => WardVariant::D,
            };
            let f = io::cmd_baselines(&a.dataset, &k, metric, ward, &a.out)?;
            println!("k = {}: {}", f.k, f.methods.iter().map(|m| m.method.as_str()).collect::<Vec<_>>().join(", "));
        }
        Command::Evaluate(a) => {
            if let Some(t) = &a.table {
                let r = io::ContingencyReport::new(*t)?;
                println!("{:?}: Fisher two-sided p = {:.3}", r.cells, r.fisher_p);
            }
            if let (Some(truth), Some(out)) = (&a.truth, &a.out) {
                let m = io::cmd_evaluate(truth, &a.estimates, out)?;
                for e in &m.entries {
                    println!("{:<8} K = {} (true {})  ARI = {:.4}", e.method, e.k_hat, m.k0, e.ari);
                }
            }
        }
        Command::Report(a) => {
            let r = io::cmd_report(&a.files, &a.out)?;
            print!("{}", r.to_table());
        }
    }
    Ok(())
}
