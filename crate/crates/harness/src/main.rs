use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use btree_bench::{emit_csv, run, Structure, Workload, WorkloadKind};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StructureArg {
    Belga,
    Classic,
    RbsimReplay,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WorkloadArg {
    Sequential,
    Uniform,
    Zipf,
    WorkingSet,
    Alternating,
    Trace,
}

/// Benchmark a search structure on a generated or replayed workload and
/// report unit costs against the interleave lower bound.
#[derive(Parser, Debug)]
#[command(name = "btree-bench", version, about)]
struct Args {
    /// Structure to run.
    #[arg(long, value_enum)]
    structure: StructureArg,

    /// Universe size: keys are 1..=N.
    #[arg(long = "N")]
    n: u32,

    /// Branching parameter of the machine.
    #[arg(long = "B")]
    b: u32,

    /// Workload shape.
    #[arg(long, value_enum)]
    workload: WorkloadArg,

    /// Number of searches to run.
    #[arg(long)]
    ops: u64,

    /// Random seed; runs are deterministic per seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Zipf exponent (only with --workload zipf).
    #[arg(long, default_value_t = 1.1)]
    alpha: f64,

    /// Trace file, one decimal key per line (only with --workload trace).
    #[arg(long)]
    trace: Option<PathBuf>,

    /// Write per-operation records and the summary to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("btree-bench: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn execute(args: Args) -> Result<(), String> {
    if args.n > (1 << 26) {
        return Err("universe sizes beyond 2^26 are not supported at desk scale".into());
    }
    let kind = match args.workload {
        WorkloadArg::Sequential => WorkloadKind::Sequential,
        WorkloadArg::Uniform => WorkloadKind::Uniform,
        WorkloadArg::Zipf => WorkloadKind::Zipf { alpha: args.alpha },
        WorkloadArg::WorkingSet => WorkloadKind::WorkingSet,
        WorkloadArg::Alternating => WorkloadKind::Alternating,
        WorkloadArg::Trace => WorkloadKind::Trace {
            path: args
                .trace
                .clone()
                .ok_or("--workload trace needs --trace <file>")?,
        },
    };
    let structure = match args.structure {
        StructureArg::Belga => Structure::Belga,
        StructureArg::Classic => Structure::Classic,
        StructureArg::RbsimReplay => Structure::RbsimReplay,
    };
    let workload = Workload {
        kind,
        n: args.n,
        b: args.b,
        ops: args.ops,
        seed: args.seed,
    };
    let report = run(structure, &workload).map_err(|e| e.to_string())?;
    let s = &report.summary;
    if s.large_b_warning {
        eprintln!(
            "btree-bench: warning: B={} exceeds (log2 N)^3, outside the guaranteed regime",
            s.b
        );
    }
    println!(
        "structure={} N={} B={} ops={} seed={}",
        s.structure, s.n, s.b, s.ops, s.seed
    );
    println!(
        "total_cost={} mean_cost={:.3} interleave={} ratio={:.4}",
        s.total_cost,
        s.total_cost as f64 / s.ops as f64,
        s.interleave,
        s.ratio
    );
    if let Some(path) = &args.csv {
        emit_csv(&report, path).map_err(|e| e.to_string())?;
        println!("csv written to {}", path.display());
    }
    Ok(())
}
