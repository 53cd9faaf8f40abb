use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spikemoe::mem::trace_to_csv;
use spikemoe::report::{compare_runs, execute, execute_pair, load_plan, render_report, ReportFormat, Run};

#[derive(Parser)]
#[command(version, about = "Spiking MoE / MHA accelerator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one workload under its configured calibration.
    Run(Opts),
    /// Simulate one workload under the built-in 2D and 3D calibrations.
    Compare(Opts),
}

#[derive(Args)]
struct Opts {
    /// Workload config (TOML, or JSON with a .json extension).
    config: PathBuf,
    /// Report format: json, or csv with one `path,value` row per field.
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Overrides the config's weight and input seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Memory access trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Token-to-expert routing CSV (MoE only).
    #[arg(long)]
    dump_routing: Option<PathBuf>,
    /// Calibration actually used; `compare` writes `<stem>.2d.<ext>` and `<stem>.3d.<ext>`.
    #[arg(long)]
    dump_calibration: Option<PathBuf>,
    /// Packed output spike tensor.
    #[arg(long)]
    dump_output: Option<PathBuf>,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn dump_artifacts(opts: &Opts, run: &Run) -> Result<()> {
    if let Some(p) = &opts.trace {
        write(p, trace_to_csv(&run.trace))?;
    }
    if let Some(p) = &opts.dump_routing {
        match &run.routing {
            Some(table) => write(p, table.to_csv())?,
            None => bail!("--dump-routing needs a moe workload"),
        }
    }
    if let Some(p) = &opts.dump_output {
        run.output.write_to(p)?;
    }
    Ok(())
}

fn emit(opts: &Opts, text: String) -> Result<()> {
    match &opts.out {
        Some(p) => write(p, text),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(opts) => {
            let mut plan = load_plan(&opts.config)?;
            if let Some(seed) = opts.seed {
                plan = plan.with_seed(seed);
            }
            let run = execute(&plan)?;
            dump_artifacts(&opts, &run)?;
            if let Some(p) = &opts.dump_calibration {
                run.calibration.save(p)?;
            }
            for e in run.result.capacity.overflows() {
                eprintln!(
                    "warning: {} needs {} bits for {}, capacity is {}",
                    e.level, e.required_bits, e.holds, e.capacity_bits
                );
            }
            emit(&opts, render_report(&run.result, opts.format))
        }
        Command::Compare(opts) => {
            let mut plan = load_plan(&opts.config)?;
            if let Some(seed) = opts.seed {
                plan = plan.with_seed(seed);
            }
            let pair = execute_pair(&plan)?;
            // events do not depend on the calibration, so either run's artifacts will do
            dump_artifacts(&opts, &pair.0)?;
            if let Some(p) = &opts.dump_calibration {
                pair.0.calibration.save(with_suffix(p, "2d"))?;
                pair.1.calibration.save(with_suffix(p, "3d"))?;
            }
            let report = compare_runs(&pair);
            if !report.functional_equal {
                bail!("2D and 3D runs produced different outputs");
            }
            emit(&opts, render_report(&report, opts.format))
        }
    }
}
