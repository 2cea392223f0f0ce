//! Command implementations behind the `soav` binary. Each command returns
//! a process exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::admm::{self, SolveResult, SolveStatus};
use crate::analysis::{self, convexity_check, discreteness_report, value_sweep, ValueFunction};
use crate::cost::{snap, switch_analysis, CostProfile, DEFAULT_SNAP_TOL};
use crate::io::{self, ProblemFile};
use crate::lp;
use crate::mpc::{self, run_mpc, AbortReason, MpcConfig, SolverChoice, Trajectory};
use crate::numerics::norm2;
use crate::plant::{discretize, normalize, DiscreteProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "soav", version, about = "Finite-alphabet LTI control with a sum-of-absolute-values cost")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Open-loop solve from x0 over one horizon.
    Solve(SolveArgs),
    /// Closed-loop receding-horizon run.
    Mpc(MpcArgs),
    /// Value function over the [sweep] grid, plus a convexity check.
    Sweep(SweepArgs),
    /// Cross-solver and structural checks on random reachable states.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Admm,
    Lp,
}

impl From<SolverArg> for SolverChoice {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Admm => SolverChoice::Admm,
            SolverArg::Lp => SolverChoice::Lp,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::Admm)]
    pub solver: SolverArg,
    /// Replace samples within the snap tolerance by their level.
    #[arg(long)]
    pub snap: bool,
    #[arg(long, default_value_t = DEFAULT_SNAP_TOL)]
    pub snap_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Control plot; the state plot goes next to it with a `-state` suffix.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MpcArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::Lp)]
    pub solver: SolverArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random convexity triples.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Mpc(a) => cmd_mpc(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Check(a) => cmd_check(&a),
    }
}

fn load(path: &Path) -> Option<ProblemFile> {
    match ProblemFile::load(path) {
        Ok(p) => Some(p),
        Err(e) => {
            eprintln!("error: {e}");
            None
        }
    }
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> bool {
    let res = File::create(path).and_then(|f| {
        let mut w = BufWriter::new(f);
        write(&mut w)?;
        w.flush()
    });
    if let Err(e) = res {
        eprintln!("error: cannot write {}: {e}", path.display());
        return false;
    }
    true
}

/// `plots/run.svg` → `plots/run-state.svg`.
pub fn state_plot_path(control_plot: &Path) -> PathBuf {
    let stem = control_plot.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    control_plot.with_file_name(format!("{stem}-state.svg"))
}

fn write_plots(path: &Path, traj: &Trajectory, title: &str) -> bool {
    let control = io::control_plot(traj, &format!("{title}: control"));
    let state = io::state_plot(traj, &format!("{title}: state"));
    write_file(path, |w| w.write_all(control.as_bytes()))
        && write_file(&state_plot_path(path), |w| w.write_all(state.as_bytes()))
}

fn discrete_problem(p: &ProblemFile) -> crate::Result<(DiscreteProblem, CostProfile, f64)> {
    let norm = normalize(&p.plant, &p.alphabet)?;
    let problem = discretize(&norm.plant, &norm.alphabet, p.horizon, p.nu, &p.x0)?;
    Ok((problem, CostProfile::new(&norm.alphabet)?, p.alphabet.u_max()))
}

fn solve_with(choice: SolverChoice, problem: &DiscreteProblem, p: &ProblemFile) -> crate::Result<SolveResult> {
    match choice {
        SolverChoice::Lp => lp::solve_reference(problem),
        SolverChoice::Admm => admm::solve(problem, &p.admm),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> i32 {
    let Some(p) = load(&args.problem) else {
        return EXIT_INPUT;
    };
    let (problem, profile, u_scale) = match discrete_problem(&p) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let choice: SolverChoice = args.solver.into();
    let res = match solve_with(choice, &problem, &p) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: solver failed: {e}");
            return EXIT_NONCONVERGENCE;
        }
    };
    if matches!(res.status, SolveStatus::Infeasible | SolveStatus::InfeasibleSuspected) {
        eprintln!("infeasible: x0 cannot be steered to the origin within T ({})", res.status.as_str());
        return EXIT_INFEASIBLE;
    }
    let scaled_levels = profile.alphabet().symmetric_levels();
    let mut z = res.z.clone();
    if args.snap {
        for v in &mut z {
            if let Some(l) = snap(*v, &scaled_levels, args.snap_tol) {
                *v = l;
            }
        }
    }
    let traj = match mpc::open_loop(&problem, &z, res.objective, u_scale) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NONCONVERGENCE;
        }
    };
    let norm_plant = match normalize(&p.plant, &p.alphabet) {
        Ok(n) => n.plant,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    println!("solver: {}", choice.as_str());
    println!("status: {}", res.status.as_str());
    println!("iterations: {}", res.iterations);
    println!("objective: {:.9}", res.objective);
    println!("jmin: {:.9}", profile.jmin(p.horizon));
    println!("terminal residual: {:.3e}", res.terminal_residual);
    match switch_analysis(&res.z, &profile, &norm_plant, p.horizon, args.snap_tol, p.omega) {
        Ok(rep) => {
            println!(
                "switches: {} (bound {:.2}{})",
                rep.count,
                rep.bound,
                if rep.bound_applies { "" } else { ", hypotheses unmet" }
            );
            println!("off-alphabet samples: {}", rep.off_alphabet);
        }
        Err(e) => println!("switches: unavailable ({e})"),
    }
    let disc = discreteness_report(&res.z, profile.alphabet(), args.snap_tol);
    println!("discreteness: {:.4}", disc.fraction);

    if !write_file(&args.out, |w| io::write_trajectory_csv(&traj, w)) {
        return EXIT_INPUT;
    }
    if let Some(plot) = &args.plot {
        if !write_plots(plot, &traj, "open-loop SOAV control") {
            return EXIT_INPUT;
        }
    }
    match res.status {
        SolveStatus::Converged => EXIT_OK,
        _ => {
            eprintln!("warning: solver stopped at max_iter without converging");
            EXIT_NONCONVERGENCE
        }
    }
}

pub fn cmd_mpc(args: &MpcArgs) -> i32 {
    let Some(p) = load(&args.problem) else {
        return EXIT_INPUT;
    };
    let Some(section) = &p.mpc else {
        eprintln!("error: {}: the mpc command needs an [mpc] section", args.problem.display());
        return EXIT_INPUT;
    };
    let config = MpcConfig {
        horizon: p.horizon,
        nu: p.nu,
        end_time: section.end_time,
        solver: args.solver.into(),
        admm: p.admm.clone(),
    };
    let traj = match run_mpc(&p.plant, &p.alphabet, &section.schedule, &p.x0, &config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    for s in &traj.steps {
        println!(
            "t = {:>8.3}  V = {:.9}  iterations = {}  |x| = {:.4e}",
            s.time,
            s.value,
            s.iterations,
            norm2(&s.state)
        );
    }
    println!("final |x| = {:.6e} at t = {}", norm2(traj.final_state()), traj.times.last().copied().unwrap_or(0.0));
    if !write_file(&args.out, |w| io::write_trajectory_csv(&traj, w)) {
        return EXIT_INPUT;
    }
    if let Some(plot) = &args.plot {
        if !write_plots(plot, &traj, "SOAV model predictive control") {
            return EXIT_INPUT;
        }
    }
    match &traj.aborted {
        None => EXIT_OK,
        Some(a) => {
            eprintln!("aborted at t = {}: {:?}", a.time, a.reason);
            if a.reason == AbortReason::Infeasible && traj.steps.is_empty() {
                eprintln!("infeasible: x0 cannot be steered to the origin within T");
                EXIT_INFEASIBLE
            } else {
                EXIT_NONCONVERGENCE
            }
        }
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> i32 {
    let Some(p) = load(&args.problem) else {
        return EXIT_INPUT;
    };
    let Some(grid) = &p.sweep else {
        eprintln!("error: {}: the sweep command needs a [sweep] section", args.problem.display());
        return EXIT_INPUT;
    };
    let vf = match ValueFunction::new(&p.plant, &p.alphabet, p.horizon, p.nu) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let samples = match value_sweep(&vf, grid) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NONCONVERGENCE;
        }
    };
    if !write_file(&args.out, |w| io::write_sweep_csv(&samples, p.plant.dim(), w)) {
        return EXIT_INPUT;
    }
    let feasible = samples.iter().filter(|s| s.is_feasible()).count();
    println!("points: {} ({} feasible)", samples.len(), feasible);
    if feasible < 3 {
        println!("convexity: skipped (fewer than 3 feasible points)");
        return EXIT_OK;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    match convexity_check(&vf, &samples, args.trials, 1e-6, &mut rng) {
        Ok(r) => {
            println!(
                "convexity: {} ({} of {} triples violated, worst gap {:.3e})",
                if r.passed() { "pass" } else { "FAIL" },
                r.violations,
                r.trials,
                r.worst_violation
            );
            if r.passed() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_NONCONVERGENCE
        }
    }
}

/// Outcome of one entry in the check table.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass(String),
    Fail(String),
    Skipped(String),
    NotApplicable(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass(_) => "pass",
            Verdict::Fail(_) => "FAIL",
            Verdict::Skipped(_) => "skipped",
            Verdict::NotApplicable(_) => "not applicable",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            Verdict::Pass(s) | Verdict::Fail(s) | Verdict::Skipped(s) | Verdict::NotApplicable(s) => s,
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

/// Runs the check suite and returns `(name, verdict)` rows.
/// Largest grid size at which ADMM and LP controls are compared entrywise.
pub const CONTROL_COMPARE_MAX_NU: usize = 40;

pub fn check_suite(p: &ProblemFile, seed: u64, trials: usize) -> crate::Result<Vec<(&'static str, Verdict)>> {
    let (base, profile, _) = discrete_problem(p)?;
    let plant = normalize(&p.plant, &p.alphabet)?.plant;
    let controllable = plant.is_controllable();
    let nonsingular = plant.is_nonsingular();
    let jmin = profile.jmin(p.horizon);
    let n = plant.dim();
    let gram = admm::GramFactor::new(&base, p.admm.resolved_scale(&base))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut worst_rel: f64 = 0.0;
    let mut worst_dz: f64 = 0.0;
    let mut dz_checked = 0usize;
    let mut unscoped_dz: f64 = 0.0;
    let mut bound_trials = 0usize;
    let mut unconverged = 0usize;
    let u_min = p.alphabet.u_min();
    let mut eq_failures = Vec::new();
    let mut floor_worst = f64::INFINITY;
    let mut switch_worst: Option<(usize, f64)> = None;
    let mut disc_worst: f64 = 1.0;
    let mut bound = f64::NAN;
    for k in 0..trials {
        let xi = analysis::random_reachable_state(&base, &mut rng)?;
        let problem = base.with_initial_state(&xi)?;
        let reference = lp::solve_reference(&problem)?;
        if reference.status != SolveStatus::Converged {
            eq_failures.push(format!("trial {k}: reference solve reported {}", reference.status.as_str()));
            continue;
        }
        let fast = admm::solve_with(&problem, &p.admm, &gram)?;
        let rel = (fast.objective - reference.objective).abs() / reference.objective.abs().max(1e-12);
        worst_rel = worst_rel.max(rel);
        let usable = match fast.status {
            SolveStatus::Converged => true,
            SolveStatus::MaxIter => {
                unconverged += 1;
                fast.terminal_residual <= 1e-4
            }
            _ => false,
        };
        if !usable || rel > 1e-4 {
            eq_failures.push(format!(
                "trial {k}: ADMM {} rel gap {rel:.2e} residual {:.2e}",
                fast.status.as_str(),
                fast.terminal_residual
            ));
        }
        let outside_min_set = reference.objective > jmin * (1.0 + 1e-6);
        let dz = fast
            .z
            .iter()
            .zip(&reference.z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // the optimum is unique only outside the minimum-cost set
        if nonsingular && controllable && outside_min_set {
            if base.nu <= CONTROL_COMPARE_MAX_NU {
                dz_checked += 1;
                worst_dz = worst_dz.max(dz);
                if dz > 1e-3 {
                    eq_failures.push(format!("trial {k}: control gap {dz:.2e}"));
                }
            } else {
                unscoped_dz = unscoped_dz.max(dz);
            }
        }
        floor_worst = floor_worst.min(reference.objective - jmin);
        if !outside_min_set && u_min > 0.0 {
            continue;
        }
        bound_trials += 1;
        let rep = switch_analysis(&reference.z, &profile, &plant, p.horizon, DEFAULT_SNAP_TOL, p.omega)?;
        bound = rep.bound;
        if switch_worst.is_none_or(|(c, _)| rep.count > c) {
            switch_worst = Some((rep.count, rep.bound));
        }
        let disc = discreteness_report(&reference.z, profile.alphabet(), DEFAULT_SNAP_TOL);
        disc_worst = disc_worst.min(disc.fraction);
    }

    let mut rows = Vec::new();
    rows.push((
        "ADMM/LP equivalence",
        if eq_failures.is_empty() {
            Verdict::Pass({
                let mut msg = if dz_checked > 0 || unscoped_dz == 0.0 {
                    format!("{trials} states, worst rel gap {worst_rel:.2e}, worst control gap {worst_dz:.2e} over {dz_checked}")
                } else {
                    format!(
                        "{trials} states, worst rel gap {worst_rel:.2e}, control gap {unscoped_dz:.2e} not compared (nu > {CONTROL_COMPARE_MAX_NU})"
                    )
                };
                if unconverged > 0 {
                    msg.push_str(&format!(", {unconverged} ADMM runs hit max_iter"));
                }
                msg
            })
        } else {
            Verdict::Fail(eq_failures.join("; "))
        },
    ));
    let zero_cost = profile.cost(&vec![0.0; base.nu], base.h)?;
    let floor_ok = floor_worst >= -1e-8 && (zero_cost - jmin).abs() <= 1e-9;
    rows.push((
        "cost floor",
        if floor_ok {
            Verdict::Pass(format!("min V - jmin = {floor_worst:.3e}, cost(0) = {zero_cost:.9}"))
        } else {
            Verdict::Fail(format!("min V - jmin = {floor_worst:.3e}, cost(0) = {zero_cost:.9}"))
        },
    ));
    if !controllable {
        let why = "(A, B) is not controllable".to_string();
        rows.push(("switching bound", Verdict::Skipped(why.clone())));
        rows.push(("discreteness budget", Verdict::Skipped(why)));
    } else if !nonsingular {
        let (count, b) = switch_worst.unwrap_or((0, bound));
        let why = format!("A is singular (observed {count} switches, nominal bound {b:.2})");
        rows.push(("switching bound", Verdict::NotApplicable(why)));
        rows.push(("discreteness budget", Verdict::NotApplicable("A is singular".into())));
    } else if bound_trials == 0 {
        let why = "every sampled state lies in the minimum-cost set".to_string();
        rows.push(("switching bound", Verdict::Skipped(why.clone())));
        rows.push(("discreteness budget", Verdict::Skipped(why)));
    } else {
        let (count, b) = switch_worst.unwrap_or((0, bound));
        rows.push((
            "switching bound",
            if (count as f64) < b {
                Verdict::Pass(format!("max switches {count} < {b:.2}"))
            } else {
                Verdict::Fail(format!("max switches {count} >= {b:.2}"))
            },
        ));
        let need = 1.0 - (b + 2.0 * n as f64) / base.nu as f64;
        rows.push((
            "discreteness budget",
            if disc_worst >= need {
                Verdict::Pass(format!("min fraction {disc_worst:.4} >= {need:.4}"))
            } else {
                Verdict::Fail(format!("min fraction {disc_worst:.4} < {need:.4}"))
            },
        ));
    }
    Ok(rows)
}

pub fn cmd_check(args: &CheckArgs) -> i32 {
    let Some(p) = load(&args.problem) else {
        return EXIT_INPUT;
    };
    let rows = match check_suite(&p, args.seed, args.trials) {
        Ok(r) => r,
        Err(e) => {
            error!("check suite aborted: {e}");
            eprintln!("error: {e}");
            return EXIT_CHECK_FAILED;
        }
    };
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (name, v) in &rows {
        println!("{name:<width$}  {:<14}  {}", v.label(), v.detail());
    }
    let failed: Vec<&str> = rows.iter().filter(|r| r.1.is_failure()).map(|r| r.0).collect();
    if failed.is_empty() {
        info!("all checks passed");
        EXIT_OK
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        EXIT_CHECK_FAILED
    }
}
