use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fogna::coupling::CouplingModel;
use fogna_cli::commands::{
    coarray_report, coupling_table, design, dof_table, fogna_array, parse_kind, parse_positions,
    parse_split,
};
use fogna_cli::config::ExperimentConfig;
use fogna_cli::experiments::{resolve, rmse_sweep};
use fogna_cli::output::{csv_string, write_csv, write_jsonl};
use fogna_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "fogna",
    version,
    about = "FOGNA sparse array design and fourth-order DOA experiments"
)]
struct Cli {
    /// Directory for CSV and JSONL outputs.
    #[arg(long, global = true, env = "FOGNA_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for Monte-Carlo trials.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal FOGNA split, positions and DOF for N sensors; writes the search trace.
    Design { sensors: usize },
    /// Co-array hole analysis as JSON.
    Coarray {
        /// Explicit positions, e.g. `0,1,5,8`.
        #[arg(long, conflicts_with_all = ["fogna", "split"])]
        positions: Option<String>,
        /// FOGNA with N sensors at the optimal split.
        #[arg(long, conflicts_with = "split")]
        fogna: Option<usize>,
        /// FOGNA with an explicit split, e.g. `5,3,3`.
        #[arg(long)]
        split: Option<String>,
        /// Co-arrays to report: sca, dca, foca1, foca2, foca3, foeca.
        #[arg(long, value_delimiter = ',', default_value = "foeca")]
        kind: Vec<String>,
        /// Include per-lag multiplicities.
        #[arg(long)]
        entries: bool,
    },
    /// DOF comparison rows for the given sensor counts.
    DofTable {
        #[arg(required = true)]
        sensors: Vec<usize>,
    },
    /// FOGNA coupling leakage for the given sensor counts.
    CouplingTable {
        #[arg(required = true)]
        sensors: Vec<usize>,
    },
    /// Seeded resolution or capacity trials.
    Resolve(ExperimentArgs),
    /// Seeded RMSE sweep over SNR and snapshot counts.
    Rmse(ExperimentArgs),
}

#[derive(clap::Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set seed=7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ExperimentArgs {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply_overrides(&self.overrides)?;
        Ok(cfg)
    }
}

fn report_failures(failed: &[(usize, CliError)], total: usize) -> CliResult<()> {
    for (n, e) in failed {
        eprintln!("N = {n}: {e}");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Partial {
            failed: failed.len(),
            total,
        })
    }
}

fn note_written(path: &Path) {
    eprintln!("wrote {}", path.display());
}

fn run(cli: Cli) -> CliResult<()> {
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Design { sensors } => {
            let report = design(sensors)?;
            print!("{}", report.summary());
            note_written(&write_csv(
                out,
                &format!("design_N{sensors}.csv"),
                &report.trace,
            )?);
        }
        Command::Coarray {
            positions,
            fogna,
            split,
            kind,
            entries,
        } => {
            let array = match (positions, fogna, split) {
                (Some(p), _, _) => parse_positions(&p)?,
                (_, Some(n), _) => fogna_array(n)?,
                (_, _, Some(s)) => fogna::geometry::build_fogna(&parse_split(&s)?)?,
                _ => {
                    return Err(CliError::Usage(
                        "give --positions, --fogna or --split".into(),
                    ))
                }
            };
            let kinds = kind
                .iter()
                .map(|k| parse_kind(k))
                .collect::<CliResult<Vec<_>>>()?;
            let report = coarray_report(&array, &kinds, entries)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::DofTable { sensors } => {
            let (rows, failed) = dof_table(&sensors);
            print!("{}", csv_string(&rows)?);
            note_written(&write_csv(out, "dof_table.csv", &rows)?);
            report_failures(&failed, sensors.len())?;
        }
        Command::CouplingTable { sensors } => {
            let (rows, failed) = coupling_table(&sensors, &CouplingModel::default());
            print!("{}", csv_string(&rows)?);
            note_written(&write_csv(out, "coupling_table.csv", &rows)?);
            report_failures(&failed, sensors.len())?;
        }
        Command::Resolve(args) => {
            let cfg = args.load()?;
            let report = resolve(&cfg, cli.jobs)?;
            println!(
                "seed = {}\nsensors = {} {:?}\nresolved within {}°: {}/{} ({:.1}%)",
                report.seed,
                report.sensors,
                report.positions,
                report.tolerance,
                report.successes,
                report.trials.len(),
                100.0 * report.success_rate()
            );
            note_written(&write_csv(out, "resolve.csv", &report.rows())?);
            note_written(&write_jsonl(out, "resolve_trials.jsonl", &report.trials)?);
            let failed: Vec<(usize, CliError)> = report
                .trials
                .iter()
                .enumerate()
                .filter_map(|(i, t)| {
                    t.failure
                        .as_ref()
                        .map(|f| (i, CliError::Usage(format!("trial seed {}: {f}", t.seed))))
                })
                .collect();
            report_failures(&failed, report.trials.len())?;
        }
        Command::Rmse(args) => {
            let cfg = args.load()?;
            let report = rmse_sweep(&cfg, cli.jobs)?;
            println!("seed = {}", report.seed);
            print!("{}", csv_string(&report.points)?);
            note_written(&write_csv(out, "rmse.csv", &report.points)?);
            note_written(&write_jsonl(out, "rmse_trials.jsonl", &report.trials)?);
            let failed: usize = report.points.iter().map(|p| p.failures).sum();
            if failed > 0 {
                for t in report.trials.iter().filter(|t| t.failure.is_some()) {
                    eprintln!(
                        "snr {} dB, K {}, seed {}: {}",
                        t.snr_db,
                        t.snapshots,
                        t.seed,
                        t.failure.as_deref().unwrap_or_default()
                    );
                }
                return Err(CliError::Partial {
                    failed,
                    total: report.trials.len(),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
