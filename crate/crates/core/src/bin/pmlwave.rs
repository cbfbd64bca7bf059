use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pmlwave::config::{parse_config, Preset, SimulationConfig};
use pmlwave::damping::{eval_zeta, zeta_bar_from_reflection};
use pmlwave::harness::{
    convergence_study, l2_error_series, reference_run, reflection_sweep, required_half_width,
    sample_times, sampled_run, sweep_config, ConvergenceSpec, ERROR_CSV_HEADER,
};
use pmlwave::io::{export_image, write_csv, write_snapshot, CsvCell, Snapshot};
use pmlwave::sim::run;
use pmlwave::stability::{assemble, random_pairs, stability_scan};
use pmlwave::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pmlwave",
    version,
    about = "Wave propagation with a perfectly matched layer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write snapshots, images and an amplitude history.
    Run(ScenarioArgs),
    /// Compare a run with an enlarged-domain reference and write the L2 error.
    Errors {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        reference: ReferenceArgs,
    },
    /// Error curves for several peak damping values against one reference.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        reference: ReferenceArgs,
        /// Comma-separated peak damping values.
        #[arg(long, value_delimiter = ',', default_value = "20,40,60,80")]
        zeta_bar: Vec<f64>,
    },
    /// Observed order of accuracy on a standing mode.
    Convergence {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Number of grids; each halves the spacing.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Coarsest spacing.
        #[arg(long, default_value_t = 0.05)]
        dx: f64,
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        #[arg(long, default_value = "convergence.csv")]
        out: PathBuf,
    },
    /// Eigenvalue scan of the first-order symbol.
    Stability {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Fixed damping values (one per axis); random when omitted.
        #[arg(long, value_delimiter = ',')]
        zeta: Option<Vec<f64>>,
        /// Number of random samples.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 10.0)]
        zeta_max: f64,
        #[arg(long, default_value_t = 20.0)]
        k_max: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Include the zero-order terms.
        #[arg(long)]
        lower_order: bool,
        #[arg(long, default_value = "stability.csv")]
        out: PathBuf,
    },
    /// Damping profile across one layer-bounded axis.
    Profile {
        #[arg(long, default_value_t = 0.5)]
        half_width: f64,
        #[arg(long, default_value_t = 0.1)]
        layer_width: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, conflicts_with = "reflection")]
        zeta_bar: Option<f64>,
        #[arg(long)]
        reflection: Option<f64>,
        #[arg(long, default_value_t = 241)]
        points: usize,
        #[arg(long, default_value = "profile.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML configuration file.
    config: Option<PathBuf>,
    /// Start from a preset (point2d, hetero2d, point3d) instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Override the grid spacing.
    #[arg(long)]
    dx: Option<f64>,
    /// Override the final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReferenceArgs {
    /// Half width of the reference box; the smallest causal value by default.
    #[arg(long)]
    reference_half_width: Option<f64>,
    /// Number of error samples over `[0, t_end]`.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

impl ScenarioArgs {
    fn load(&self) -> Result<SimulationConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => parse_config(path).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
                other => other,
            })?,
            (None, Some(name)) => Preset::from_name(name)?.config(None)?,
            (None, None) => {
                return Err(Error::Config("give a config file or --preset".into()));
            }
        };
        if let Some(dx) = self.dx {
            cfg = cfg.with_dx(dx).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(t) = self.t_end {
            let old = cfg.t_end;
            cfg.t_end = t;
            cfg.snapshots = if old > 0.0 {
                cfg.snapshots.iter().map(|s| s * t / old).collect()
            } else {
                vec![0.0, t]
            };
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn reference_for(cfg: &SimulationConfig, args: &ReferenceArgs) -> Result<(Vec<f64>, f64)> {
    let times = sample_times(cfg.t_end, args.samples.max(1));
    let minimal = required_half_width(cfg, cfg.t_end);
    let a = args.reference_half_width.unwrap_or_else(|| {
        let h = cfg.grid.min_spacing();
        let ext = cfg.grid.axis(0).half_width + cfg.grid.axis(0).layer_width;
        // smallest half width on the node lattice that is causal
        ext + ((minimal - ext).max(0.0) / h).ceil() * h
    });
    Ok((times, a))
}

fn cmd_run(args: &ScenarioArgs) -> Result<()> {
    let cfg = args.load()?;
    let (mut solver, mut state) = cfg.build()?;
    let dt = solver.dt();
    let grid = solver.grid().clone();
    std::fs::create_dir_all(&cfg.output)?;
    let mem = solver.aux_memory();
    eprintln!(
        "{}D grid {:?}, dt = {dt:e}, {} auxiliary scalars",
        grid.dim(),
        grid.node_counts(),
        mem.aux_scalars()
    );
    let out = cfg.output.clone();
    let summary = run(
        &mut solver,
        &mut state,
        cfg.t_end,
        &cfg.snapshots,
        |k, st| {
            let snap = Snapshot::of_state(&grid, st, dt);
            let stem = out.join(format!("snap_{k:03}"));
            write_snapshot(&snap, &stem)?;
            export_image(&snap, &stem.with_extension("pgm"))?;
            Ok(())
        },
    )?;
    write_csv(
        &out.join("history.csv"),
        &["t", "max_abs", "max_abs_domain"],
        summary
            .history
            .iter()
            .map(|s| [s.time, s.max_abs, s.max_abs_domain]),
    )?;
    println!(
        "{} steps to t = {}, max |u| = {:e}, output in {}",
        summary.steps,
        summary.steps as f64 * dt,
        summary.max_abs,
        out.display()
    );
    Ok(())
}

fn cmd_errors(args: &ScenarioArgs, refs: &ReferenceArgs) -> Result<()> {
    let cfg = args.load()?;
    let (times, a) = reference_for(&cfg, refs)?;
    let reference = reference_run(&cfg, a, &times)?;
    let series = l2_error_series(&sampled_run(&cfg, &times)?, &reference)?;
    let path = cfg.output.join("errors.csv");
    write_csv(&path, &ERROR_CSV_HEADER, series.rows())?;
    println!(
        "peak L2 error {:e}, final {:e}, reference half width {a}; wrote {}",
        series.peak(),
        series.l2_error.last().copied().unwrap_or(0.0),
        path.display()
    );
    Ok(())
}

fn cmd_sweep(args: &ScenarioArgs, refs: &ReferenceArgs, zeta_bars: &[f64]) -> Result<()> {
    let cfg = sweep_config(&args.load()?, zeta_bars)?;
    let (times, a) = reference_for(&cfg, refs)?;
    let reference = reference_run(&cfg, a, &times)?;
    for (z, series) in reflection_sweep(&cfg, zeta_bars, &reference)? {
        let path = cfg.output.join(format!("errors_zeta_{z}.csv"));
        write_csv(&path, &ERROR_CSV_HEADER, series.rows())?;
        println!(
            "zeta_bar = {z}: peak {:e}, final {:e} -> {}",
            series.peak(),
            series.l2_error.last().copied().unwrap_or(0.0),
            path.display()
        );
    }
    Ok(())
}

fn cmd_convergence(dim: usize, levels: usize, dx: f64, t_end: f64, out: &Path) -> Result<()> {
    let hs = (0..levels).map(|k| dx / f64::from(1u32 << k)).collect();
    let mut spec = ConvergenceSpec::standing_mode(dim, hs);
    spec.t_end = t_end;
    let report = convergence_study(&spec)?;
    let rows = report.levels.iter().enumerate().map(|(k, l)| {
        let order = if k == 0 || report.exact {
            String::new()
        } else {
            report.orders[k - 1].cell()
        };
        vec![
            l.dx.cell(),
            l.dt.cell(),
            l.steps.cell(),
            l.error.cell(),
            order,
        ]
    });
    write_csv(out, &["dx", "dt", "steps", "error", "order"], rows)?;
    if report.exact {
        println!("all errors are zero (exact)");
    } else {
        println!("observed orders {:?}", report.orders);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_stability(
    dim: usize,
    zeta: Option<&[f64]>,
    samples: usize,
    zeta_max: f64,
    k_max: f64,
    c: f64,
    seed: u64,
    lower: bool,
    out: &Path,
) -> Result<()> {
    if !(dim == 2 || dim == 3) {
        return Err(Error::Config(format!("dim must be 2 or 3, got {dim}")));
    }
    let mut pairs = random_pairs(dim, samples, zeta_max, k_max, None, seed);
    if let Some(z) = zeta {
        assemble(z, c)?;
        if z.len() != dim {
            return Err(Error::Config(format!("--zeta needs {dim} values")));
        }
        pairs.iter_mut().for_each(|p| p.0 = z.to_vec());
    }
    let summary = stability_scan(c, &pairs, lower)?;
    let mut header: Vec<String> = (1..=dim).map(|i| format!("k{i}")).collect();
    header.extend((1..=dim).map(|i| format!("zeta{i}")));
    header.extend(["max_re".to_string(), "completeness".to_string()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = summary.samples.iter().map(|s| {
        let mut row: Vec<String> = s.k.iter().chain(&s.zeta).map(|v| v.cell()).collect();
        row.push(s.max_re.cell());
        row.push(if s.complete { "complete" } else { "defective" }.to_string());
        row
    });
    write_csv(out, &header, rows)?;
    println!(
        "{} samples: max Re = {:e}, max Re/(c|k|) = {:e}, {} defective",
        summary.samples.len(),
        summary.max_re,
        summary.max_re_scaled,
        summary.defective
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_profile(
    a: f64,
    l: f64,
    c: f64,
    zeta_bar: Option<f64>,
    reflection: Option<f64>,
    points: usize,
    out: &Path,
) -> Result<()> {
    let zbar = match (zeta_bar, reflection) {
        (Some(z), _) => z,
        (None, Some(r)) => zeta_bar_from_reflection(c, l, r)?,
        (None, None) => 80.0,
    };
    if points < 2 || !(a > 0.0 && l > 0.0) {
        return Err(Error::Config("need points >= 2 and positive widths".into()));
    }
    let ext = a + l;
    let rows = (0..points).map(|n| {
        let x = -ext + 2.0 * ext * n as f64 / (points - 1) as f64;
        [x, eval_zeta(x, a, l, zbar)]
    });
    write_csv(out, &["x", "zeta"], rows)?;
    println!("zeta_bar = {zbar}; wrote {}", out.display());
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PMLWAVE_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            Error::Config(format!(
                "PMLWAVE_THREADS must be a positive integer, got `{v}`"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot set up {n} threads: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Errors {
            scenario,
            reference,
        } => cmd_errors(&scenario, &reference),
        Command::Sweep {
            scenario,
            reference,
            zeta_bar,
        } => cmd_sweep(&scenario, &reference, &zeta_bar),
        Command::Convergence {
            dim,
            levels,
            dx,
            t_end,
            out,
        } => cmd_convergence(dim, levels, dx, t_end, &out),
        Command::Stability {
            dim,
            zeta,
            samples,
            zeta_max,
            k_max,
            c,
            seed,
            lower_order,
            out,
        } => cmd_stability(
            dim,
            zeta.as_deref(),
            samples,
            zeta_max,
            k_max,
            c,
            seed,
            lower_order,
            &out,
        ),
        Command::Profile {
            half_width,
            layer_width,
            c,
            zeta_bar,
            reflection,
            points,
            out,
        } => cmd_profile(
            half_width,
            layer_width,
            c,
            zeta_bar,
            reflection,
            points,
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
