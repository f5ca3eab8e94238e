use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use phasesync::bounds::{check_proof_inequalities, Bound};
use phasesync::harness::{
    emit_csv, instance_seed, run_delta_sweep, run_dim_sweep, run_instance, run_noise_sweep, to_csv, ExperimentConfig,
    InstanceOutcome, InstanceSpec, Method, SweepTable,
};
use phasesync::synth::WeightScheme;

/// Seeded angular synchronization experiments.
#[derive(Parser, Debug)]
#[command(name = "phasesync", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean errors and bounds against the angular noise level.
    NoiseSweep(SweepArgs),
    /// Runtimes against the dimension at a fixed noise level.
    DimSweep(SweepArgs),
    /// Errors and bounds against the band width.
    DeltaSweep(SweepArgs),
    /// Solve one instance and print its bound report.
    Solve(SolveArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Dimension.
    #[arg(long, default_value_t = 64)]
    d: usize,
    /// Band width of the measurement pattern.
    #[arg(long, default_value_t = 16)]
    delta: usize,
    /// Weight scheme: unit, amplitude or squared.
    #[arg(long, default_value = "unit")]
    scheme: WeightScheme,
    /// Comma-separated subset of er, lsp, sdp.
    #[arg(long, value_delimiter = ',', default_values = ["er", "lsp", "sdp"])]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 2020)]
    seed: u64,
    /// Relative magnitude perturbation of the weights, in [0, 1).
    #[arg(long = "mag-eps", default_value_t = 0.0)]
    mag_eps: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Noise levels in degrees. Noise sweep: the grid; dim sweep: the first
    /// value; delta sweep: the per-curve levels.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<usize>>,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    /// Timed repetitions per instance (the median is kept).
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Pretty,
    Csv,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Noise level in degrees.
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Pretty)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config(args: &SweepArgs) -> ExperimentConfig {
    let c = &args.common;
    let mut cfg = ExperimentConfig {
        d: c.d,
        delta: c.delta,
        scheme: c.scheme,
        methods: c.methods.clone(),
        trials: args.trials,
        seed: c.seed,
        magnitude_noise_eps: c.mag_eps,
        timing_repeats: args.repeats,
        ..Default::default()
    };
    if let Some(dims) = &args.dims {
        cfg.dims = dims.clone();
    }
    if let Some(deltas) = &args.deltas {
        cfg.deltas = deltas.clone();
    }
    cfg
}

fn write_table(table: &SweepTable, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => emit_csv(table, path).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{}", to_csv(table));
            Ok(())
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn report_csv(o: &InstanceOutcome) -> String {
    let r = &o.report;
    let mut s = String::from("quantity,value\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(s, "{k},{v}");
    };
    row("dist_er", format!("{:?}", r.dist_er));
    row("dist_lsp", fmt_opt(r.dist_lsp));
    row("dist_sdp", fmt_opt(r.dist_sdp));
    row("dist_er_normalized", fmt_opt(r.dist_er_normalized));
    row("spectral_gap", format!("{:?}", r.spectral_gap));
    row("normalized_gap", format!("{:?}", r.normalized_gap));
    row("c_z", format!("{:?}", r.c_z));
    row("sdp_rank", o.sdp.as_ref().map(|s| s.numerical_rank.to_string()).unwrap_or_default());
    row("tight_sdp", r.tight_sdp().map(|b| b.to_string()).unwrap_or_default());
    for b in Bound::applicable(r.scheme) {
        row(&format!("bound_{}", b.name()), fmt_opt(r.get(b)));
    }
    s
}

fn report_pretty(o: &InstanceOutcome, alpha: f64) -> Result<String> {
    let r = &o.report;
    let mut s = String::new();
    writeln!(s, "scheme {}  alpha {alpha} deg  d {}", r.scheme.name(), o.graph.dim())?;
    writeln!(s, "spectral gap {:.6e}  normalized gap {:.6e}  c_z {:.6}", r.spectral_gap, r.normalized_gap, r.c_z)?;
    writeln!(s, "\ndistance to ground truth")?;
    writeln!(s, "  {:<16} {:.6e}", "er", r.dist_er)?;
    for (name, v) in [("lsp", r.dist_lsp), ("sdp", r.dist_sdp), ("er_normalized", r.dist_er_normalized)] {
        if let Some(v) = v {
            writeln!(s, "  {name:<16} {v:.6e}")?;
        }
    }
    if let Some(sdp) = &o.sdp {
        writeln!(s, "\nsdp rank {}  dual gap {:.3e}", sdp.numerical_rank, sdp.objective - sdp.dual_bound)?;
    }
    if let Some(c) = &r.certificate {
        writeln!(s, "tightness certificate {} (noise {:.4e} vs threshold {:.4e})", c.holds, c.noise_norm, c.threshold)?;
    }
    writeln!(s, "\nbounds")?;
    for b in Bound::applicable(r.scheme) {
        if let Some(v) = r.get(b) {
            let dist = r.distance_for(b.target());
            let mark = match dist {
                Some(x) if x > v * (1.0 + 1e-9) + 1e-9 => "  VIOLATED",
                _ => "",
            };
            writeln!(s, "  {:<16} {v:.6e}{mark}", b.name())?;
        }
    }
    if let Some(lsp) = &o.lsp {
        writeln!(s, "\nproof inequalities")?;
        for c in check_proof_inequalities(&o.graph, &o.measurements, &o.er, lsp)? {
            writeln!(s, "  {:<40} {:.4e} <= {:.4e}  {}", c.name, c.lhs, c.rhs, if c.holds { "ok" } else { "FAILS" })?;
        }
    }
    Ok(s)
}

fn solve(args: &SolveArgs) -> Result<()> {
    let c = &args.common;
    if !(args.alpha.is_finite() && args.alpha >= 0.0) {
        bail!("noise level {} must be finite and nonnegative", args.alpha);
    }
    let spec = InstanceSpec {
        d: c.d,
        delta: c.delta,
        scheme: c.scheme,
        alpha_deg: args.alpha,
        magnitude_noise_eps: c.mag_eps,
        seed: instance_seed(c.seed, &[args.alpha], 0),
    };
    let outcome = run_instance(&spec, &c.methods, 1)?;
    let text = match args.format {
        Format::Pretty => report_pretty(&outcome, args.alpha)?,
        Format::Csv => report_csv(&outcome),
    };
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::NoiseSweep(args) => {
            let mut cfg = config(&args);
            if let Some(a) = &args.alphas {
                cfg.alphas_deg = a.clone();
            }
            write_table(&run_noise_sweep(&cfg)?, args.out.as_ref())
        }
        Command::DimSweep(args) => {
            let mut cfg = config(&args);
            if let Some(a) = &args.alphas {
                match a.as_slice() {
                    [alpha] => cfg.dim_sweep_alpha_deg = *alpha,
                    _ => bail!("the dimension sweep takes a single noise level"),
                }
            }
            write_table(&run_dim_sweep(&cfg)?, args.out.as_ref())
        }
        Command::DeltaSweep(args) => {
            let mut cfg = config(&args);
            if let Some(a) = &args.alphas {
                cfg.delta_sweep_alphas_deg = a.clone();
            }
            write_table(&run_delta_sweep(&cfg)?, args.out.as_ref())
        }
        Command::Solve(args) => solve(&args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
