//! `fgl`: coefficient tables, the discrete fractional Laplacian, simulations and
//! the reproduction experiments.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
//! 3 an acceptance window was violated.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fgl_core::coeffs::{coeff_table, Family};
use fgl_core::config::{
    energy_csv, parse_config, run_config, snapshot_csv, snapshot_name, write_atomic, write_run_outputs, Cell, Csv,
    IterationStats, RunManifest,
};
use fgl_core::harness::{
    convergence_sweep, example3_run, invariant_suite, table1_agrees, table1_experiment,
    table1_target, ConvergenceTable, Example3Options, Example3Variant, ITERATION_CAP, REFERENCE_PAIR, TABLE1_ALPHAS,
    TABLE1_DENOMINATORS, TABLE_ALPHAS, TABLE_PAIRS,
};
use fgl_core::operators::{assemble, poly_exact_frac_laplacian, Grid1D, PolyOracle};
use fgl_core::solver::{LinearSolverChoice, RunOptions};
use fgl_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Parser)]
#[command(name = "fgl", version, about = "Compact fourth-order solver for coupled fractional Ginzburg-Landau systems")]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generating-function coefficient table as CSV (m, kappa).
    Coeffs {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "g4")]
        family: Family,
        /// Largest index m.
        #[arg(long)]
        length: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Discrete vs exact fractional Laplacian of x^4 (1-x)^4 on [0, 1].
    Laplacian {
        #[arg(long)]
        alpha: f64,
        /// Number of intervals.
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time integration from a TOML/JSON config (or a previous manifest).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated snapshot times, overriding the config.
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy of the compact formula on the standard (alpha, h) grid.
    Table1 {
        #[arg(long, default_value = "table1")]
        out: PathBuf,
    },
    /// Convergence orders for one of the two standard parameter sets.
    Converge {
        #[arg(long)]
        table: ConvergenceTable,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Reference step size.
        #[arg(long, default_value_t = REFERENCE_PAIR.0)]
        tau_ref: f64,
        /// Reference mesh size.
        #[arg(long, default_value_t = REFERENCE_PAIR.1)]
        h_ref: f64,
        #[arg(long, default_value = "auto")]
        linear_solver: LinearSolverChoice,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Soliton collision runs.
    Example3 {
        #[arg(long)]
        variant: Example3Variant,
        #[arg(long, default_value_t = 512)]
        nx: usize,
        #[arg(long, default_value_t = 100)]
        steps_per_unit: usize,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        /// Keep a space-time row every this many steps.
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        /// Start from zero fields.
        #[arg(long)]
        zero: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the invariant suite and prints one line per check.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with an exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NonConvergence(_) | Error::StepFailed { .. } | Error::LinearSolve(_) | Error::PrecisionLoss { .. } => {
                EXIT_NUMERICAL
            }
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Coeffs {
            alpha,
            family,
            length,
            out,
        } => coeffs(alpha, family, length, &out),
        Command::Laplacian { alpha, nx, out } => laplacian(alpha, nx, &out),
        Command::Simulate { config, snapshots, out } => simulate(&config, snapshots, out),
        Command::Table1 { out } => table1(&out),
        Command::Converge {
            table,
            alphas,
            tau_ref,
            h_ref,
            linear_solver,
            out,
        } => converge(table, alphas, (tau_ref, h_ref), linear_solver, out),
        Command::Example3 {
            variant,
            nx,
            steps_per_unit,
            t_final,
            snapshots,
            record_every,
            zero,
            out,
        } => {
            let opts = Example3Options {
                nx,
                steps_per_unit,
                t_final,
                snapshot_times: snapshots.unwrap_or_default(),
                record_every,
                zero_initial: zero,
                ..Example3Options::default()
            };
            example3(variant, &opts, out)
        }
        Command::Verify { seed, out } => verify(seed, out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ACCEPTANCE),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn finish(manifest: &RunManifest, dir: &Path) -> Outcome {
    let path = manifest.write(dir)?;
    println!("wrote {}", path.display());
    for a in manifest.acceptance.iter().filter(|a| !a.passed) {
        eprintln!("acceptance window violated: {} {}", a.name, a.detail);
    }
    Ok(manifest.all_accepted())
}

fn coeffs(alpha: f64, family: Family, length: usize, out: &Path) -> Outcome {
    let mut manifest = RunManifest::new("coeffs");
    manifest.parameters = serde_json::json!({ "alpha": alpha, "family": format!("{family:?}"), "length": length });
    let table = manifest.time("coefficients", || coeff_table(alpha, family, length))?;
    let mut csv = Csv::new(&["m", "kappa"]);
    for (m, k) in table.values.iter().enumerate() {
        csv.row([Cell::from(m), Cell::from(*k)]);
    }
    csv.write(out)?;
    manifest.outputs.push(out.display().to_string());
    let dir = match out.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    finish(&manifest, dir)
}

fn laplacian(alpha: f64, nx: usize, out: &Path) -> Outcome {
    let mut manifest = RunManifest::new("laplacian");
    manifest.parameters = serde_json::json!({ "alpha": alpha, "nx": nx, "function": "x^4 (1-x)^4" });
    let oracle = PolyOracle::example1();
    let grid = Grid1D::new(0.0, 1.0, nx)?;
    let op = manifest.time("assemble", || assemble(alpha, grid))?;
    let xs = grid.interior_nodes();
    let u: Vec<f64> = xs.iter().map(|&x| oracle.eval(x)).collect();
    let y = manifest.time("apply", || op.frac_laplacian_real(&u))?;
    let mut csv = Csv::new(&["x", "discrete", "exact", "abs_error"]);
    let mut worst: f64 = 0.0;
    for (&x, &d) in xs.iter().zip(&y) {
        let e = poly_exact_frac_laplacian(&oracle, alpha, x)?;
        worst = worst.max((d - e).abs());
        csv.row([Cell::from(x), Cell::from(d), Cell::from(e), Cell::from((d - e).abs())]);
    }
    csv.write(&out.join("laplacian.csv"))?;
    manifest.outputs.push("laplacian.csv".into());
    println!("max abs error {worst:.6e}");
    finish(&manifest, out)
}

fn simulate(config: &Path, snapshots: Option<Vec<f64>>, out: Option<PathBuf>) -> Outcome {
    let mut cfg = parse_config(config)?;
    if let Some(s) = snapshots {
        cfg.snapshots = s;
        // re-validate the override through the same path
        cfg = cfg.to_raw().validate()?;
    }
    if let Some(o) = out {
        cfg.directory = Some(o);
    }
    let dir = cfg.directory.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut manifest = RunManifest::new("simulate");
    manifest.config = Some(cfg.to_raw());
    let (grid, output) = manifest.time("run", || run_config(&cfg))?;
    let names = manifest.time("write", || write_run_outputs(&dir, &cfg, &grid, &output))?;
    manifest.outputs = names;
    manifest.iterations = Some(IterationStats {
        steps: output.reports.len(),
        max_iterations: output.max_iterations(),
        median_iterations: output.median_iterations(),
    });
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    manifest.warnings = output.warnings.clone();
    let b = &output.bound;
    manifest.accept(
        "energy_bound",
        !b.precondition || b.holds(),
        format!("max ln(W/W0) = {:.6e}, bound {:.6e}, tau*gamma <= 1/2: {}", b.max_log_growth, b.log_bound, b.precondition),
    );
    println!(
        "{} steps, max {} iterations, final W = {:.6e}",
        output.reports.len(),
        output.max_iterations(),
        output.trace.points.last().map_or(0.0, |p| p.1)
    );
    finish(&manifest, &dir)
}

fn table1(out: &Path) -> Outcome {
    let mut manifest = RunManifest::new("table1");
    let hs: Vec<f64> = TABLE1_DENOMINATORS.iter().map(|&d| 1.0 / d as f64).collect();
    manifest.parameters = serde_json::json!({ "alphas": TABLE1_ALPHAS, "h": hs, "x": 0.5 });
    let rows = manifest.time("experiment", || table1_experiment(&TABLE1_ALPHAS, &hs, 0.5))?;
    let mut csv = Csv::new(&[
        "alpha", "h", "discrete", "exact", "abs_error", "order", "target_abs_error", "target_order", "agrees",
    ]);
    for r in &rows {
        let (pe, po) = table1_target(r.alpha, r.h).map_or((None, None), |(e, o)| (Some(e), o));
        let ok = table1_agrees(r).unwrap_or(false);
        csv.row([
            Cell::from(r.alpha),
            Cell::from(r.h),
            Cell::from(r.discrete),
            Cell::from(r.exact),
            Cell::from(r.abs_error),
            Cell::from(r.order),
            Cell::from(pe),
            Cell::from(po),
            Cell::from(ok),
        ]);
        println!(
            "alpha={:<4} h=1/{:<4} error={:.6e} order={}",
            r.alpha,
            (1.0 / r.h).round(),
            r.abs_error,
            r.order.map_or("-".into(), |o| format!("{o:.4}"))
        );
        manifest.accept(format!("table1 alpha={} h=1/{}", r.alpha, (1.0 / r.h).round()), ok, "");
    }
    csv.write(&out.join("table1.csv"))?;
    manifest.outputs.push("table1.csv".into());
    finish(&manifest, out)
}

fn converge(
    table: ConvergenceTable,
    alphas: Option<Vec<f64>>,
    reference: (f64, f64),
    linear_solver: LinearSolverChoice,
    out: Option<PathBuf>,
) -> Outcome {
    let dir = out.unwrap_or_else(|| PathBuf::from(format!("table{}", table.number())));
    let alphas = alphas.unwrap_or_else(|| TABLE_ALPHAS.to_vec());
    let opts = RunOptions {
        linear_solver,
        ..RunOptions::default()
    };
    let mut manifest = RunManifest::new("converge");
    manifest.parameters = serde_json::json!({
        "table": table.number(),
        "alphas": alphas,
        "pairs": TABLE_PAIRS,
        "reference": [reference.0, reference.1],
        "model": alphas.iter().map(|&a| table.params(a)).collect::<Vec<_>>(),
    });
    let results = manifest.time("experiment", || {
        convergence_sweep(table, &alphas, &TABLE_PAIRS, reference, &opts)
    })?;
    let mut csv = Csv::new(&[
        "alpha",
        "tau",
        "h",
        "error_u",
        "error_v",
        "error_l2h",
        "unweighted_sum",
        "temporal_order",
        "spatial_order",
        "error_ratio",
        "max_iterations",
        "median_iterations",
        "energy_precondition",
        "energy_bound_holds",
        "target_error",
        "target_temporal_order",
        "target_spatial_order",
    ]);
    let mut max_iter = 0;
    for (alpha, res) in alphas.iter().zip(&results) {
        let target = TABLE_ALPHAS
            .iter()
            .position(|a| (a - alpha).abs() < 1e-12)
            .map(|i| table.targets()[i]);
        for (k, r) in res.rows.iter().enumerate() {
            let (pe, pt, ps) = match target {
                Some(p) if k == 0 => (Some(p.0), None, None),
                Some(p) => (Some(p.1), Some(p.2), Some(p.3)),
                None => (None, None, None),
            };
            max_iter = max_iter.max(r.stats.max_iterations);
            csv.row([
                Cell::from(r.alpha),
                Cell::from(r.tau),
                Cell::from(r.h),
                Cell::from(r.error_u),
                Cell::from(r.error_v),
                Cell::from(r.error_l2h),
                Cell::from(r.unweighted_sum),
                Cell::from(r.temporal_order),
                Cell::from(r.spatial_order),
                Cell::from(r.error_ratio),
                Cell::from(r.stats.max_iterations),
                Cell::from(r.stats.median_iterations),
                Cell::from(r.stats.energy_bound.precondition),
                Cell::from(r.stats.energy_bound.holds()),
                Cell::from(pe),
                Cell::from(pt),
                Cell::from(ps),
            ]);
            if let (Some(t), Some(s), Some(q)) = (r.temporal_order, r.spatial_order, r.error_ratio) {
                println!(
                    "alpha={:<4} error {:.6e} -> {:.6e}  temporal {:.4}  spatial {:.4}  ratio {:.3}",
                    r.alpha, res.rows[k - 1].error_l2h, r.error_l2h, t, s, q
                );
                manifest.accept(
                    format!("orders alpha={}", r.alpha),
                    r.orders_within_windows(),
                    format!("temporal {t:.4}, spatial {s:.4}, ratio {q:.3}"),
                );
            }
            manifest.accept(format!("energy alpha={} tau={}", r.alpha, r.tau), r.bound_ok(), "");
            for w in &r.stats.warnings {
                manifest.warnings.push(format!("alpha={} tau={}: {w}", r.alpha, r.tau));
            }
        }
        max_iter = max_iter.max(res.reference.max_iterations);
    }
    manifest.accept("iterations", max_iter <= ITERATION_CAP, format!("max {max_iter}"));
    csv.write(&dir.join(format!("table{}.csv", table.number())))?;
    manifest.outputs.push(format!("table{}.csv", table.number()));
    finish(&manifest, &dir)
}

fn example3(variant: Example3Variant, opts: &Example3Options, out: Option<PathBuf>) -> Outcome {
    let dir = out.unwrap_or_else(|| PathBuf::from(variant.to_string()));
    let mut manifest = RunManifest::new("example3");
    manifest.parameters = serde_json::json!({
        "variant": variant.to_string(),
        "nx": opts.nx,
        "steps_per_unit": opts.steps_per_unit,
        "t_final": opts.t_final,
        "record_every": opts.record_every,
        "zero_initial": opts.zero_initial,
        "members": variant.members(),
    });
    let members = manifest.time("run", || example3_run(variant, opts))?;
    for (i, m) in members.iter().enumerate() {
        let tag = format!("member{i}");
        let mut st = Csv::new(&["t", "x", "abs_u", "abs_v"]);
        for (t, au, av) in &m.spacetime {
            for (j, (a, b)) in au.iter().zip(av).enumerate() {
                st.row([Cell::from(*t), Cell::from(m.grid.node(j + 1)), Cell::from(*a), Cell::from(*b)]);
            }
        }
        let name = format!("{tag}_spacetime.csv");
        st.write(&dir.join(&name))?;
        manifest.outputs.push(name);
        let name = format!("{tag}_energy.csv");
        energy_csv(&m.energy).write(&dir.join(&name))?;
        manifest.outputs.push(name);
        for (k, s) in m.snapshots.iter().enumerate() {
            let name = format!("{tag}_{}", snapshot_name(k, s.t));
            snapshot_csv(&m.grid, s).write(&dir.join(&name))?;
            manifest.outputs.push(name);
        }
        for w in &m.warnings {
            eprintln!("warning: {}: {w}", m.label);
        }
        manifest.warnings.extend(m.warnings.iter().map(|w| format!("{}: {w}", m.label)));
        manifest.accept(
            format!("energy {}", m.label),
            !m.bound.precondition || m.bound.holds(),
            format!("max ln(W/W0) = {:.6e}, bound {:.6e}", m.bound.max_log_growth, m.bound.log_bound),
        );
        manifest.accept(format!("iterations {}", m.label), m.max_iterations <= ITERATION_CAP, format!("max {}", m.max_iterations));
        println!(
            "{tag} {}: max {} iterations, W(0) = {:.6e}, W(T) = {:.6e}",
            m.label,
            m.max_iterations,
            m.energy.first().map_or(0.0, |p| p.1),
            m.energy.last().map_or(0.0, |p| p.1)
        );
    }
    let mut index = Csv::new(&["member", "label", "alpha", "gamma1", "gamma2", "final_energy"]);
    for (i, m) in members.iter().enumerate() {
        index.row([
            Cell::from(i),
            Cell::from(m.label.as_str()),
            Cell::from(m.params.alpha),
            Cell::from(m.params.gamma1),
            Cell::from(m.params.gamma2),
            Cell::from(m.energy.last().map_or(0.0, |p| p.1)),
        ]);
    }
    index.write(&dir.join("members.csv"))?;
    manifest.outputs.push("members.csv".into());
    if variant == Example3Variant::Fig74 && !opts.zero_initial {
        // larger gamma must leave more energy at the end
        let finals: Vec<f64> = members.iter().map(|m| m.energy.last().map_or(0.0, |p| p.1)).collect();
        let ordered = finals.windows(2).all(|w| w[0] > w[1]);
        manifest.accept("final energy ordered by gamma", ordered, format!("{finals:?}"));
    }
    finish(&manifest, &dir)
}

fn verify(seed: u64, out: Option<PathBuf>) -> Outcome {
    let mut manifest = RunManifest::new("verify");
    manifest.parameters = serde_json::json!({ "seed": seed });
    let report = manifest.time("suite", || invariant_suite(seed))?;
    let text = report.to_text();
    print!("{text}");
    for c in &report.checks {
        manifest.accept(format!("{}/{}", c.module, c.name), c.status != fgl_core::harness::Status::Fail, "");
    }
    match out {
        Some(dir) => {
            write_atomic(&dir.join("report.txt"), text.as_bytes())?;
            let mut csv = Csv::new(&["module", "name", "status", "measured", "detail"]);
            for c in &report.checks {
                csv.row([
                    Cell::from(c.module.as_str()),
                    Cell::from(c.name.as_str()),
                    Cell::from(c.status.to_string()),
                    Cell::from(c.measured),
                    Cell::from(c.detail.as_str()),
                ]);
            }
            csv.write(&dir.join("checks.csv"))?;
            manifest.outputs = vec!["report.txt".into(), "checks.csv".into()];
            let path = manifest.write(&dir)?;
            eprintln!("wrote {}", path.display());
            Ok(report.all_passed())
        }
        None => Ok(report.all_passed()),
    }
}
