//! `proxot` command line: divergence runs, epsilon sweeps, Gaussian closed
//! forms, particle flows, and a benchmark harness.
//!
//! Exit codes: 0 success, 1 input error, 2 solver convergence warning.

mod config;
mod report;

use clap::{Args, Parser, Subcommand};
use config::FileConfig;
use proxot::exact_ot::solve_exact_ot;
use proxot::fixtures::{random_cost, random_simplex};
use proxot::flow::{run_flow, FlowConfig};
use proxot::gaussian::{
    gaussian_interpolant_curve, proximal_gaussian_1d, proximal_gaussian_diag, Gaussian1D,
    GaussianDiag,
};
use proxot::measures::{build_cost, CostSpec, DiscreteMeasure};
use proxot::prox::{divergence_curve, solve_proximal, SolverConfig};
use proxot::rng::SplitMix64;
use report::{csv_row, digest_file, RunReport};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "proxot",
    version,
    about = "Proximal optimal transport divergences for discrete measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the divergence between two CSV sample files
    Divergence(DivergenceArgs),
    /// Solve a log-spaced grid of epsilon values and emit a curve CSV
    Sweep(SweepArgs),
    /// Closed-form Gaussian divergence and interpolant curve
    Gaussian(GaussianArgs),
    /// Deterministic particle flow from source samples toward target samples
    Flow(FlowArgs),
    /// Time the exact and proximal solvers on random instances
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Initial smoothing (default: median cost)
    #[arg(long)]
    eta_start: Option<f64>,
    /// Final smoothing (default: 1e-3 x median cost)
    #[arg(long)]
    eta_end: Option<f64>,
    /// Scaling iterations per annealing stage
    #[arg(long)]
    max_iter: Option<usize>,
    /// Skip the certificate polish phase
    #[arg(long)]
    no_polish: bool,
    /// Relative primal-dual gap target for polishing
    #[arg(long)]
    gap_tol: Option<f64>,
}

impl SolverArgs {
    fn build(&self, cfg: &FileConfig) -> Result<SolverConfig, String> {
        let mut solver = SolverConfig::default();
        solver.eta_start = cfg.resolve_opt(self.eta_start, "eta-start")?;
        solver.eta_end = cfg.resolve_opt(self.eta_end, "eta-end")?;
        if let Some(n) = cfg.resolve_opt(self.max_iter, "max-iter")? {
            solver.max_iterations = n;
        }
        solver.gap_tol = cfg.resolve_opt(self.gap_tol, "gap-tol")?;
        if self.no_polish {
            solver.polish = false;
        }
        Ok(solver)
    }
}

#[derive(Args)]
struct DivergenceArgs {
    /// CSV sample file for the source measure P
    #[arg(long)]
    p_samples: PathBuf,
    /// CSV sample file for the target measure Q
    #[arg(long)]
    q_samples: PathBuf,
    /// Proximal weight on the KL term
    #[arg(long)]
    eps: Option<f64>,
    /// Power-distance exponent (default 2)
    #[arg(long)]
    cost_p: Option<f64>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value config file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    p_samples: PathBuf,
    #[arg(long)]
    q_samples: PathBuf,
    /// Grid spec start:end:count, log spaced
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    cost_p: Option<f64>,
    /// Write the curve CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct GaussianArgs {
    /// Mean(s) of P, comma separated for the diagonal case
    #[arg(long)]
    m1: String,
    /// Std(s) of P
    #[arg(long)]
    s1: String,
    /// Mean(s) of Q
    #[arg(long)]
    m2: String,
    /// Std(s) of Q
    #[arg(long)]
    s2: String,
    /// Single epsilon
    #[arg(long)]
    eps: Option<f64>,
    /// Grid spec start:end:count, log spaced
    #[arg(long)]
    eps_grid: Option<String>,
    /// Write the curve CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FlowArgs {
    /// CSV sample file with the initial particles
    #[arg(long)]
    source: PathBuf,
    /// CSV sample file with the target samples
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    eps: Option<f64>,
    /// Euler step size
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cost_p: Option<f64>,
    /// Output prefix: writes `<prefix>_trajectory.csv` and `<prefix>_series.csv`
    #[arg(long, default_value = "flow")]
    out_prefix: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated instance sizes
    #[arg(long)]
    sizes: Option<String>,
    /// Trials per size
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Write the timing CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

enum CliError {
    Input(String),
}

impl From<proxot::Error> for CliError {
    fn from(e: proxot::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<String> for CliError {
    fn from(e: String) -> Self {
        CliError::Input(e)
    }
}

fn main() {
    // PROXOT_THREADS caps the worker pool used for particle updates and
    // epsilon sweeps; the default is the machine's available parallelism.
    if let Ok(raw) = std::env::var("PROXOT_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: PROXOT_THREADS must be a positive integer, got `{raw}`");
                std::process::exit(1);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Divergence(args) => cmd_divergence(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Gaussian(args) => cmd_gaussian(args),
        Command::Flow(args) => cmd_flow(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn load_measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    DiscreteMeasure::from_csv_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_eps_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("eps grid `{spec}` must look like start:end:count"));
    }
    let start: f64 = parts[0].parse().map_err(|_| format!("bad grid start `{}`", parts[0]))?;
    let end: f64 = parts[1].parse().map_err(|_| format!("bad grid end `{}`", parts[1]))?;
    let count: usize = parts[2].parse().map_err(|_| format!("bad grid count `{}`", parts[2]))?;
    if !(start > 0.0 && end > start) {
        return Err("eps grid needs 0 < start < end".into());
    }
    if count < 2 {
        return Err("eps grid needs at least 2 points".into());
    }
    let (ls, le) = (start.ln(), end.ln());
    let mut grid: Vec<f64> = (0..count)
        .map(|k| (ls + (le - ls) * k as f64 / (count - 1) as f64).exp())
        .collect();
    // pin the endpoints exactly; exp(ln x) wobbles in the last bit
    grid[0] = start;
    grid[count - 1] = end;
    Ok(grid)
}

fn write_text(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(path) => {
            std::fs::write(path, contents)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        }
        None => {
            print!("{contents}");
            std::io::stdout().flush().ok();
        }
    }
    Ok(())
}

fn echo_command() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn cmd_divergence(args: DivergenceArgs) -> Result<i32, CliError> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let eps: f64 = cfg.resolve(args.eps, "eps", None)?;
    let cost_p: f64 = cfg.resolve(args.cost_p, "cost-p", Some(2.0))?;
    let solver = args.solver.build(&cfg)?;

    let p = load_measure(&args.p_samples)?;
    let q = load_measure(&args.q_samples)?;
    let cost = build_cost(&p, &q, &CostSpec::power(cost_p)?)?;

    let start = Instant::now();
    let solution = solve_proximal(p.weights(), q.weights(), &cost, eps, &solver)?;
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut digests = BTreeMap::new();
    for path in [&args.p_samples, &args.q_samples] {
        digests.insert(
            path.display().to_string(),
            digest_file(path).map_err(|e| CliError::Input(e.to_string()))?,
        );
    }
    let report = RunReport::new(
        echo_command(),
        digests,
        eps,
        cost_p,
        &solution,
        timing_ms,
        &solver,
    );
    let json = report.to_json();
    match &args.out {
        Some(path) => {
            write_text(Some(path), &json)?;
            eprintln!(
                "divergence {:.12e}  gap {:.3e}  ({} iterations, {:.1} ms) -> {}",
                solution.divergence,
                solution.gap,
                solution.iterations,
                timing_ms,
                path.display()
            );
        }
        None => println!("{json}"),
    }
    if solution.converged {
        Ok(0)
    } else {
        eprintln!(
            "warning: certificate gap {:.3e} did not reach the convergence target",
            solution.gap
        );
        Ok(2)
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, CliError> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let grid_spec: String = cfg.resolve(args.eps_grid.clone(), "eps-grid", None)?;
    let cost_p: f64 = cfg.resolve(args.cost_p, "cost-p", Some(2.0))?;
    let solver = args.solver.build(&cfg)?;
    let eps_list = parse_eps_grid(&grid_spec)?;

    let p = load_measure(&args.p_samples)?;
    let q = load_measure(&args.q_samples)?;
    let cost = build_cost(&p, &q, &CostSpec::power(cost_p)?)?;

    let curve = divergence_curve(p.weights(), q.weights(), &cost, &eps_list, &solver)?;
    let (plan, _) = solve_exact_ot(p.weights(), q.weights(), &cost)?;

    let mut out = String::from("eps,divergence,divergence_over_eps,gap\n");
    let mut worst_gap = 0.0f64;
    for (eps, sol) in &curve {
        worst_gap = worst_gap.max(sol.gap);
        out.push_str(&csv_row(&[*eps, sol.divergence, sol.divergence / eps, sol.gap]));
        out.push('\n');
    }
    write_text(args.out.as_deref(), &out)?;
    eprintln!("exact transport cost: {:.12e}", plan.value());
    if let Some((_, last)) = curve.last() {
        eprintln!(
            "largest-eps divergence: {:.12e} ({} points)",
            last.divergence,
            curve.len()
        );
    }
    if curve.iter().all(|(_, s)| s.converged) {
        Ok(0)
    } else {
        eprintln!("warning: some solves did not reach the certificate target (worst gap {worst_gap:.3e})");
        Ok(2)
    }
}

fn parse_vector(raw: &str, name: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("cannot parse {name} component `{s}`")))
        })
        .collect()
}

fn cmd_gaussian(args: GaussianArgs) -> Result<i32, CliError> {
    let m1 = parse_vector(&args.m1, "m1")?;
    let s1 = parse_vector(&args.s1, "s1")?;
    let m2 = parse_vector(&args.m2, "m2")?;
    let s2 = parse_vector(&args.s2, "s2")?;
    let dim = m1.len();
    if s1.len() != dim || m2.len() != dim || s2.len() != dim {
        return Err(CliError::Input(
            "m1, s1, m2, s2 must all have the same number of components".into(),
        ));
    }
    let eps_list = match (&args.eps, &args.eps_grid) {
        (Some(e), None) => vec![*e],
        (None, Some(spec)) => parse_eps_grid(spec)?,
        _ => {
            return Err(CliError::Input(
                "exactly one of --eps and --eps-grid is required".into(),
            ))
        }
    };

    let mut out = String::new();
    if dim == 1 {
        let p = Gaussian1D::new(m1[0], s1[0])?;
        let q = Gaussian1D::new(m2[0], s2[0])?;
        out.push_str("eps,m_R,sigma_R,divergence\n");
        for point in gaussian_interpolant_curve(p, q, &eps_list)? {
            out.push_str(&csv_row(&[point.eps, point.mean_r, point.std_r, point.divergence]));
            out.push('\n');
        }
        let (divergence, r) = proximal_gaussian_1d(p, q, *eps_list.last().unwrap())?;
        eprintln!(
            "divergence {:.12e} at eps {}, R = N({}, {}^2)",
            divergence,
            eps_list.last().unwrap(),
            r.mean,
            r.std
        );
    } else {
        let p = GaussianDiag::new(m1, s1)?;
        let q = GaussianDiag::new(m2, s2)?;
        let mut header = String::from("eps");
        for k in 0..dim {
            header.push_str(&format!(",m_R_{k}"));
        }
        for k in 0..dim {
            header.push_str(&format!(",sigma_R_{k}"));
        }
        header.push_str(",divergence\n");
        out.push_str(&header);
        let mut last = None;
        for &eps in &eps_list {
            let (divergence, r) = proximal_gaussian_diag(&p, &q, eps)?;
            let mut row = vec![eps];
            row.extend_from_slice(r.means());
            row.extend_from_slice(r.stds());
            row.push(divergence);
            out.push_str(&csv_row(&row));
            out.push('\n');
            last = Some(divergence);
        }
        if let Some(d) = last {
            eprintln!("divergence {:.12e} at eps {}", d, eps_list.last().unwrap());
        }
    }
    write_text(args.out.as_deref(), &out)?;
    Ok(0)
}

fn cmd_flow(args: FlowArgs) -> Result<i32, CliError> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let eps: f64 = cfg.resolve(args.eps, "eps", None)?;
    let dt: f64 = cfg.resolve(args.dt, "dt", None)?;
    let steps: usize = cfg.resolve(args.steps, "steps", None)?;
    let snapshot_every: usize = cfg.resolve(args.snapshot_every, "snapshot-every", Some(10))?;
    let seed: u64 = cfg.resolve(args.seed, "seed", Some(0))?;
    let cost_p: f64 = cfg.resolve(args.cost_p, "cost-p", Some(2.0))?;

    let source = load_measure(&args.source)?;
    let target = load_measure(&args.target)?;

    let mut flow_cfg = FlowConfig::new(eps, dt, steps, cost_p, seed)?;
    flow_cfg.snapshot_every = snapshot_every;
    let solver_overrides = args.solver.build(&cfg)?;
    flow_cfg.solver.eta_start = solver_overrides.eta_start;
    flow_cfg.solver.eta_end = solver_overrides.eta_end;
    flow_cfg.solver.max_iterations = solver_overrides.max_iterations;
    flow_cfg.solver.polish = solver_overrides.polish;
    if let Some(g) = solver_overrides.gap_tol {
        flow_cfg.solver.gap_tol = Some(g);
    }

    let start = Instant::now();
    let state = run_flow(&source, &target, &flow_cfg)?;
    let elapsed = start.elapsed();

    let dim = source.dim();
    let mut trajectory = String::from("step,particle_id");
    for k in 0..dim {
        trajectory.push_str(&format!(",x{k}"));
    }
    trajectory.push('\n');
    for record in &state.history {
        if let Some(snapshot) = &record.snapshot {
            for (pid, point) in snapshot.iter().enumerate() {
                trajectory.push_str(&format!("{},{}", record.step, pid));
                for x in point {
                    trajectory.push_str(&format!(",{x}"));
                }
                trajectory.push('\n');
            }
        }
    }
    for (pid, point) in state.particles.iter().enumerate() {
        trajectory.push_str(&format!("{},{}", state.step_index, pid));
        for x in point {
            trajectory.push_str(&format!(",{x}"));
        }
        trajectory.push('\n');
    }

    let mut series = String::from("step,divergence,gap\n");
    for record in &state.history {
        series.push_str(&format!("{},", record.step));
        series.push_str(&csv_row(&[record.divergence, record.gap]));
        series.push('\n');
    }

    let traj_path = PathBuf::from(format!("{}_trajectory.csv", args.out_prefix));
    let series_path = PathBuf::from(format!("{}_series.csv", args.out_prefix));
    write_text(Some(&traj_path), &trajectory)?;
    write_text(Some(&series_path), &series)?;

    let last = state.history.last();
    eprintln!(
        "{} steps in {:.2?}; final divergence {}  -> {}, {}",
        state.step_index,
        elapsed,
        last.map(|r| r.divergence.to_string()).unwrap_or_else(|| "n/a".into()),
        traj_path.display(),
        series_path.display()
    );
    if !state.increase_warnings.is_empty() {
        eprintln!(
            "warning: certified divergence rose at steps {:?}",
            state.increase_warnings
        );
    }
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<i32, CliError> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let sizes_raw: String = cfg.resolve(args.sizes.clone(), "sizes", Some("10,50".to_string()))?;
    let trials: usize = cfg.resolve(args.trials, "trials", Some(3))?;
    let seed: u64 = cfg.resolve(args.seed, "seed", Some(0))?;
    let eps: f64 = cfg.resolve(args.eps, "eps", Some(1.0))?;
    let sizes: Vec<usize> = sizes_raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("bad size `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    if sizes.is_empty() || sizes.iter().any(|&n| n == 0) {
        return Err(CliError::Input("sizes must be positive integers".into()));
    }
    if trials == 0 {
        return Err(CliError::Input("trials must be positive".into()));
    }

    let mut rng = SplitMix64::new(seed);
    let solver = SolverConfig::default();
    let mut out = String::from("size,trial,exact_value,exact_ms,prox_value,prox_gap,prox_ms\n");
    let mut medians = Vec::new();
    for &size in &sizes {
        let mut exact_times = Vec::new();
        let mut prox_times = Vec::new();
        for trial in 0..trials {
            let a = random_simplex(&mut rng, size);
            let b = random_simplex(&mut rng, size);
            let cost = random_cost(&mut rng, size, size, 4.0);

            let t = Instant::now();
            let (plan, _) = solve_exact_ot(&a, &b, &cost)?;
            let exact_ms = t.elapsed().as_secs_f64() * 1e3;

            let t = Instant::now();
            let sol = solve_proximal(&a, &b, &cost, eps, &solver)?;
            let prox_ms = t.elapsed().as_secs_f64() * 1e3;

            out.push_str(&format!("{size},{trial},"));
            out.push_str(&csv_row(&[plan.value(), exact_ms, sol.divergence, sol.gap, prox_ms]));
            out.push('\n');
            exact_times.push(exact_ms);
            prox_times.push(prox_ms);
        }
        let median = |mut v: Vec<f64>| -> f64 {
            v.sort_by(|a, b| a.total_cmp(b));
            v[v.len() / 2]
        };
        medians.push((size, median(exact_times), median(prox_times)));
    }
    write_text(args.out.as_deref(), &out)?;
    eprintln!("size,exact_median_ms,prox_median_ms");
    for (size, exact, prox) in medians {
        eprintln!("{size},{exact:.3},{prox:.3}");
    }
    Ok(0)
}
