use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use scenario_barrier::certify::GuaranteeMode;
use scenario_barrier::pipeline::{
    self, cmd_run, plotdata, reproduce, sweep, validate_files, RunConfig, SweepParameter, EXIT_ERROR,
};

#[derive(Parser, Debug)]
#[command(
    name = "scenario-barrier",
    version,
    about = "Data-driven barrier certificates with a physics-informed filter"
)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the guarantee mode (deterministic | probabilistic).
    #[arg(long, global = true)]
    mode: Option<GuaranteeMode>,
    /// Disables the physics-informed filter.
    #[arg(long, global = true)]
    no_filter: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pipeline for one configuration.
    Run,
    /// All eight reference experiments side by side with published values.
    Reproduce,
    /// One run per value of a parameter.
    Sweep {
        /// delta | samples | beta
        #[arg(long)]
        param: SweepParameter,
        /// Comma-separated list or start:stop:count.
        #[arg(long)]
        values: String,
    },
    /// CSV tables for plotting from a run report.
    Plotdata {
        #[arg(long)]
        report: PathBuf,
    },
    /// Checks a certificate against the ground-truth system.
    Validate {
        #[arg(long)]
        certificate: PathBuf,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let Some(path) = &cli.config else {
        bail!("--config is required for this command");
    };
    let mut cfg = RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg = cfg.with_mode(mode);
    }
    if cli.no_filter {
        cfg.filter = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>, fallback: &str) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| Path::new("out").join(cfg.and_then(|c| c.name.clone()).unwrap_or_else(|| fallback.into())))
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Run => {
            let cfg = load_config(cli)?;
            let out = out_dir(cli, Some(&cfg), "run");
            let (report, code) = cmd_run(&cfg, &out)?;
            let c = &report.certification;
            println!(
                "{}: retained {}/{}  eta {:.6}  L {:.4}  condition {:.6}  {:?}",
                cfg.name.as_deref().unwrap_or("run"),
                report.retained,
                report.samples,
                c.eta,
                c.lipschitz,
                c.condition_value,
                c.verdict
            );
            println!(
                "empirical violations {}/{}",
                report.safety.violations, report.safety.trajectories
            );
            println!("wrote {}", out.display());
            Ok(code)
        }
        Command::Reproduce => {
            let out = out_dir(cli, None, "reproduce");
            let table = reproduce(cli.seed.unwrap_or(0));
            table.write_all(&out)?;
            print!("{}", table.to_text());
            println!("wrote {}", out.display());
            Ok(0)
        }
        Command::Sweep { param, values } => {
            let cfg = load_config(cli)?;
            let values = sweep::parse_values(values)?;
            let out = out_dir(cli, Some(&cfg), "sweep");
            fs::create_dir_all(&out)?;
            let rows = sweep(&cfg, *param, &values);
            let path = out.join(format!("sweep-{}.csv", param.name()));
            pipeline::sweep::write_csv(&rows, &path)?;
            for r in &rows {
                match &r.error {
                    None => println!(
                        "{}={}  P={}  eta={:.6}  condition={:.6}",
                        param,
                        r.value,
                        r.retained,
                        r.eta.unwrap_or(f64::NAN),
                        r.condition.unwrap_or(f64::NAN)
                    ),
                    Some(e) => println!("{}={}  {e}", param, r.value),
                }
            }
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::Plotdata { report } => {
            let out = cli
                .out
                .clone()
                .unwrap_or_else(|| report.parent().unwrap_or(Path::new(".")).join("plot"));
            for path in plotdata(report, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Validate { certificate } => {
            let Some(config) = &cli.config else {
                bail!("--config is required for validate");
            };
            let report = validate_files(config, certificate)?;
            let out = out_dir(cli, None, "validate");
            fs::create_dir_all(&out)?;
            let path = out.join("validation.json");
            fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
            println!(
                "max residual {:.6e}  conditions hold {}  empirical violations {}/{}",
                report.residuals.max_residual(),
                report.conditions_hold,
                report.safety.violations,
                report.safety.trajectories
            );
            println!("wrote {}", path.display());
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
