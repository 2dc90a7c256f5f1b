//! `delaylab`: closed-form and simulated mean packet delays for a
//! single-cell 802.11 DCF WLAN.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use delaylab::spec::Engine;
use delaylab::{emit_report, load_spec, run_experiment, ReportFormat};
use delaylab_core::sim::dcf::estimate_capacity;
use delaylab_core::{aggregate_capacity, run_dcf, MacParams, RunBudget, SimConfig};

#[derive(Parser)]
#[command(name = "delaylab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format: csv or text.
    #[arg(long, default_value = "text")]
    format: ReportFormat,
}

#[derive(Args)]
struct RunOverrides {
    /// Override the spec's replication count.
    #[arg(long)]
    replications: Option<usize>,
    /// Override the base seed (also settable via DELAYLAB_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form delays of a scenario (no simulation).
    Analytic {
        spec: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the simulation engines selected in the scenario file.
    Simulate {
        spec: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        run: RunOverrides,
        /// Restrict to one engine: dcf or rps_oracle.
        #[arg(long)]
        engine: Option<String>,
        /// Write a per-packet trace of the first replication (CSV:
        /// node,arrival_time_s,delivery_time_s,bytes,fragments).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run analytic and simulated pipelines and print the comparison table.
    Compare {
        spec: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        run: RunOverrides,
    },
    /// Saturated-channel capacity: renewal-reward value and, optionally, a
    /// simulation estimate.
    Capacity {
        /// Number of contending stations.
        #[arg(long)]
        nodes: u32,
        /// Packet size used by every station.
        #[arg(long, default_value_t = 1500.0)]
        packet_bytes: f64,
        /// Also measure capacity with the saturated simulator.
        #[arg(long)]
        simulate: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn apply_overrides(spec: &mut delaylab::ExperimentSpec, run: &RunOverrides) {
    if let Some(r) = run.replications {
        spec.run.replications = r;
    }
    if let Some(s) = run.seed {
        spec.run.seed = Some(s);
    }
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Analytic { spec, output } => {
            let mut spec = load_spec(&spec)?;
            spec.engines = vec![Engine::Analytic];
            let table = run_experiment(&spec)?;
            print!("{}", emit_report(&table, output.format));
        }
        Command::Simulate {
            spec,
            output,
            run,
            engine,
            trace,
        } => {
            let mut spec = load_spec(&spec)?;
            apply_overrides(&mut spec, &run);
            spec.engines.retain(|e| *e != Engine::Analytic);
            if let Some(engine) = engine {
                let keep = match engine.as_str() {
                    "dcf" => Engine::Dcf,
                    "rps_oracle" | "rps" => Engine::RpsOracle,
                    other => anyhow::bail!("unknown engine {other:?}, expected dcf or rps_oracle"),
                };
                spec.engines = vec![keep];
            }
            if spec.engines.is_empty() {
                anyhow::bail!("scenario selects no simulation engine");
            }
            if let Some(path) = trace {
                write_trace(&spec, &path)?;
            }
            let table = run_experiment(&spec)?;
            print!("{}", emit_report(&table, output.format));
        }
        Command::Compare { spec, output, run } => {
            let mut spec = load_spec(&spec)?;
            apply_overrides(&mut spec, &run);
            let table = run_experiment(&spec)?;
            print!("{}", emit_report(&table, output.format));
        }
        Command::Capacity {
            nodes,
            packet_bytes,
            simulate,
            seed,
        } => {
            let mac = MacParams::mimic_802_11b_1mbps();
            let cap = aggregate_capacity(&mac, nodes, packet_bytes * 8.0, 1e-12)?;
            println!(
                "renewal-reward: {:.2} pkts/s ({:.0} bits/s), beta = {:.5}, p = {:.5}",
                cap.pkts_per_s, cap.throughput_bps, cap.fixed_point.beta, cap.fixed_point.p
            );
            if simulate {
                let cfg = SimConfig::new(seed.unwrap_or(1), RunBudget::horizon(300.0));
                let est = estimate_capacity(&mac, nodes, packet_bytes, &cfg)?;
                println!("saturated simulation: {:.2} pkts/s", est.pkts_per_s);
            }
        }
    }
    Ok(())
}

/// Runs the first replication of the CSMA/CA engine with tracing enabled and
/// writes one CSV record per delivered packet.
fn write_trace(spec: &delaylab::ExperimentSpec, path: &PathBuf) -> anyhow::Result<()> {
    let scenario = spec
        .scenario()
        .with_lambdas(&spec.lambda_rows()[0])
        .context("trace scenario")?;
    let cfg = SimConfig {
        seed: spec.seed(),
        budget: RunBudget {
            horizon_s: spec.run.horizon_s,
            max_packets: spec.run.max_packets,
        },
        warmup_frac: spec.run.warmup_frac,
    };
    let mut records = Vec::new();
    run_dcf(&scenario, &spec.mac, &cfg, Some(&mut records))?;
    let mut out = String::from("node,arrival_time_s,delivery_time_s,bytes,fragments\n");
    for r in &records {
        out.push_str(&format!(
            "{},{:.9},{:.9},{:.1},{}\n",
            r.node, r.arrival_s, r.delivery_s, r.bytes, r.fragments
        ));
    }
    fs::write(path, out).with_context(|| format!("writing trace to {}", path.display()))?;
    Ok(())
}
