//! `ocs-sim`: single runs, parameter sweeps and model tables.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ocs_core::metrics::{self, write_csv};
use ocs_core::models::{self, Format};
use ocs_core::sim::{self, write_event_log, RunOptions};
use ocs_core::sweep::{self, SweepSpec};
use ocs_core::{ConfigError, SimConfig};

#[derive(Parser)]
#[command(name = "ocs-sim", version, about = "Optical circuit-switch scheduler simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file.
    Simulate(SimulateArgs),
    /// Run every valid permutation of a sweep grid.
    Sweep(SweepArgs),
    /// Print the energy, cost or scalability tables.
    Models(ModelsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricsFormat {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// TOML config with [network], [scheduler] and [traffic] sections.
    #[arg(long)]
    config: PathBuf,
    /// Overrides traffic.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides traffic.n_epochs.
    #[arg(long)]
    epochs: Option<u64>,
    /// Metrics file; omitted means metrics go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: MetricsFormat,
    /// Epochs excluded from the statistics.
    #[arg(long, default_value_t = 0)]
    warmup_discard: u64,
    /// Per-request CSV of completed requests.
    #[arg(long)]
    event_log: Option<PathBuf>,
    /// Skip the per-epoch invariant audit.
    #[arg(long)]
    no_check: bool,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// TOML sweep spec; the built-in grid is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single master seed, replaces the grid file's seed list.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated master seeds, replaces the grid file's seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Overrides base.traffic.n_epochs.
    #[arg(long)]
    epochs: Option<u64>,
    /// Output directory for sweep.csv and skipped.csv.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, default_value_t = 0)]
    warmup_discard: u64,
    #[arg(long)]
    no_check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Energy,
    Cost,
    Scale,
}

#[derive(clap::Args)]
struct ModelsArgs {
    #[arg(value_enum)]
    table: Table,
    #[arg(long, value_enum, default_value = "text")]
    format: TableFormat,
    /// Transmitter option for `energy` (all combinations when omitted).
    #[arg(long)]
    tx: Option<String>,
    /// Receiver option for `energy`.
    #[arg(long)]
    rx: Option<String>,
    /// Transceivers per node for `scale`.
    #[arg(long, value_delimiter = ',', default_values_t = [4u64, 8, 16, 32, 64])]
    x: Vec<u64>,
    /// Nodes per rack for `scale`.
    #[arg(long, default_value_t = 64)]
    nodes: u64,
    #[arg(long, default_value_t = 100.0)]
    line_rate_gbps: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
    Json,
}

impl From<TableFormat> for Format {
    fn from(f: TableFormat) -> Self {
        match f {
            TableFormat::Text => Format::Text,
            TableFormat::Csv => Format::Csv,
            TableFormat::Json => Format::Json,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Models(args) => print_models(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let missing = matches!(e.downcast_ref::<ConfigError>(), Some(ConfigError::NotFound(_)))
                || matches!(e.downcast_ref::<sweep::SweepError>(), Some(sweep::SweepError::NotFound(_)));
            ExitCode::from(if missing { 2 } else { 1 })
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut config = SimConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.traffic.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        config.traffic.n_epochs = epochs;
    }
    let config = config.validate()?;
    let opts = RunOptions {
        warmup_discard: args.warmup_discard,
        event_log: args.event_log.is_some(),
        check_invariants: !args.no_check,
    };
    let out = sim::run(&config, &opts)?;
    let m = &out.metrics;
    let summary = format!(
        "{} E={} R={} {} load={:.2} seed={}: throughput {:.4}, usage {:.4}, latency mean {:.0} ns p99.9 {:.0} ns, tx buffer {:.0} B/node",
        m.algorithm,
        m.epoch_ns,
        m.requests_per_node,
        m.distribution,
        m.load,
        m.seed,
        m.throughput,
        m.wavelength_usage,
        m.latency_mean_ns,
        m.latency_p999_ns,
        m.tx_buffer_mean_bytes
    );
    // keep stdout clean when the metrics themselves go there
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }

    let mut sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    match args.format {
        MetricsFormat::Csv => write_csv(&mut sink, [m])?,
        MetricsFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, &metrics::to_json(m, &out.latencies))?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    if let Some(path) = &args.event_log {
        let mut f = create(path)?;
        write_event_log(&mut f, &out.events)?;
        f.flush()?;
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let mut spec = match &args.config {
        Some(path) => SweepSpec::load(path)?,
        None => SweepSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seeds = vec![seed];
    }
    if let Some(seeds) = args.seeds {
        spec.seeds = seeds;
    }
    if let Some(epochs) = args.epochs {
        spec.base.traffic.n_epochs = epochs;
    }
    let plan = spec.plan();
    if plan.runs.is_empty() && plan.skipped.is_empty() {
        println!("empty grid, nothing to run");
        return Ok(());
    }
    let total = plan.runs.len();
    eprintln!("{total} runs, {} permutations skipped", plan.skipped.len());
    let opts = RunOptions { warmup_discard: args.warmup_discard, event_log: false, check_invariants: !args.no_check };
    let report = sweep::execute(plan, args.parallel, &opts)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let csv_path = args.out.join("sweep.csv");
    let mut f = create(&csv_path)?;
    write_csv(&mut f, &report.rows)?;
    f.flush()?;
    let mut skipped = csv::Writer::from_writer(create(&args.out.join("skipped.csv"))?);
    skipped.write_record(["algorithm", "epoch_ns", "requests_per_node", "distribution", "load", "reason"])?;
    for s in &report.skipped {
        let p = &s.point;
        skipped.write_record([
            p.algorithm.to_string(),
            p.epoch_ns.to_string(),
            p.requests_per_node.to_string(),
            p.distribution.to_string(),
            format!("{:.2}", p.load),
            s.reason.to_string(),
        ])?;
    }
    skipped.flush()?;
    println!("{} of {total} runs written to {}", report.rows.len(), csv_path.display());

    if let Some(fail) = report.failures.first() {
        let p = &fail.point;
        bail!(
            "{} of {total} runs failed; first: {} E={} R={} {} load={:.2} seed {}: {}",
            report.failures.len(),
            p.algorithm,
            p.epoch_ns,
            p.requests_per_node,
            p.distribution,
            p.load,
            fail.master_seed,
            fail.error
        );
    }
    Ok(())
}

fn print_models(args: ModelsArgs) -> Result<()> {
    let format = Format::from(args.format);
    let text = match args.table {
        Table::Energy => {
            let mut rows = models::energy_table(args.line_rate_gbps);
            if let Some(tx) = &args.tx {
                let tx: models::TransceiverOption = tx.parse()?;
                if !tx.transmitter {
                    return Err(models::ModelError::NotTransmitter(tx.name).into());
                }
                rows.retain(|r| r.tx == tx.name);
            }
            if let Some(rx) = &args.rx {
                let rx: models::TransceiverOption = rx.parse()?;
                if rx.transmitter {
                    return Err(models::ModelError::NotReceiver(rx.name).into());
                }
                rows.retain(|r| r.rx == rx.name);
            }
            models::render_energy(&rows, format)
        }
        Table::Cost => models::render_cost(&models::cost_table(), format),
        Table::Scale => {
            let rows = args
                .x
                .iter()
                .map(|&x| models::scalability_row(x, args.nodes, args.line_rate_gbps))
                .collect::<Result<Vec<_>, _>>()?;
            models::render_scale(&rows, format)
        }
    };
    print!("{text}");
    Ok(())
}
