use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use areavolt::harness::{self, emit_table, error_sweep, parse_splits, TableFormat};
use areavolt::ingest::{stream_monitor, AdmittanceMode, InputSource, MonitorConfig, OutputSink};
use areavolt::margin::{IndexKind, DEFAULT_THRESHOLD_PCT};
use areavolt::network::CorridorTopology;
use areavolt::powerflow::PfNetwork;

#[derive(Parser)]
#[command(
    name = "areavolt",
    version,
    about = "Corridor voltage collapse margin monitor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce each frame of a synchrophasor CSV stream and report margin indices.
    ///
    /// Exit status: 0 when all frames were processed without alarm, 2 when
    /// any frame alarmed, 1 on a fatal input error.
    Monitor {
        #[arg(long)]
        topology: PathBuf,
        /// Frame CSV file, or `-` for standard input.
        #[arg(long, default_value = "-")]
        input: String,
        /// `estimate` to take line admittances from each frame, or a line file.
        #[arg(long, default_value = "estimate")]
        admittance: String,
        #[arg(long, default_value = "apparent")]
        index: IndexKind,
        /// Alarm threshold in percent of the collapse value.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_PCT)]
        threshold: f64,
        /// Report CSV file, or `-` for standard output.
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Compare complete and reduced system maximum power over load splits.
    Sweep {
        /// Power-flow network; defaults to the bundled four-bus case.
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        topology: Option<PathBuf>,
        #[arg(long)]
        splits: Option<PathBuf>,
        /// Output file, or `-` for standard output.
        #[arg(long, default_value = "-")]
        output: String,
        #[arg(long, default_value = "csv")]
        format: TableFormat,
    },
    /// Reproduce the equal-voltage four-bus reduction example.
    GoldenTable1,
}

fn sweep(
    network: Option<PathBuf>,
    topology: Option<PathBuf>,
    splits: Option<PathBuf>,
    output: &str,
    format: TableFormat,
) -> Result<()> {
    let (default_net, default_topo, default_splits) = harness::default_sweep_inputs();
    let net = match network {
        Some(p) => PfNetwork::load(&p).with_context(|| format!("loading {}", p.display()))?,
        None => default_net,
    };
    let topo = match topology {
        Some(p) => {
            CorridorTopology::load(&p).with_context(|| format!("loading {}", p.display()))?
        }
        None => default_topo,
    };
    let splits = match splits {
        Some(p) => {
            let text =
                fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            parse_splits(&text, &topo)?
        }
        None => default_splits,
    };
    let rows = error_sweep(&net, &topo, &splits)?;
    let table = emit_table(&rows, format);
    if output == "-" {
        std::io::stdout().write_all(table.as_bytes())?;
    } else {
        fs::write(output, table).with_context(|| format!("writing {output}"))?;
    }
    Ok(())
}

fn show(p: areavolt::Phasor) -> String {
    if p.im == 0.0 {
        format!("{:.6}", p.re)
    } else {
        format!("{:.6}", p)
    }
}

fn golden() -> Result<()> {
    let out = harness::run_perfect_reduction()?;
    for c in out.published_checks.iter().chain(&out.self_checks) {
        println!(
            "{:<40} expected {:<28} got {:<28} rel err {:.2e}",
            c.quantity,
            show(c.expected),
            show(c.actual),
            c.rel_err
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Monitor {
            topology,
            input,
            admittance,
            index,
            threshold,
            output,
        } => {
            let config = MonitorConfig {
                topology_path: topology,
                input: InputSource::from_arg(&input),
                admittance: AdmittanceMode::from_arg(&admittance),
                index,
                threshold_pct: threshold,
                output: OutputSink::from_arg(&output),
            };
            match stream_monitor(&config) {
                Ok(summary) => {
                    log::info!(
                        "{} frames, {} alarms, {} diagnostics",
                        summary.frames,
                        summary.alarms,
                        summary.diagnostics
                    );
                    return ExitCode::from(summary.exit_code() as u8);
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Sweep {
            network,
            topology,
            splits,
            output,
            format,
        } => sweep(network, topology, splits, &output, format),
        Command::GoldenTable1 => golden(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
