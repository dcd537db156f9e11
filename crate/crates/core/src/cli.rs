// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! `critical-prep train|prune|evaluate|analyze <subcommand>`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{self, AmplitudeMode, FiniteDifference, NoiseChannel, Perturbation, PhaseGrid};
use crate::config::RunConfig;
use crate::dynamics::{final_fidelity, write_trajectory_csv, NoiseRates, Propagator, Trajectory};
use crate::error::Error;
use crate::hilbert::{ground_state_numeric, DensityMatrix, StateVector};
use crate::prune::{pruned_task, rank_fields, SimilarityReport};
use crate::rl::{train, EnvMode, Environment, FileSink, TaskSpec, TrainSummary};
use crate::schedule::PulseSchedule;

#[derive(Debug, Parser)]
#[command(name = "critical-prep", version, about = "Pulse design for critical ground-state preparation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy and record the best schedule.
    Train(TrainArgs),
    /// Rank the fields of a schedule by trajectory similarity.
    Prune(PruneArgs),
    /// Propagate one schedule and report its fidelity.
    Evaluate(EvaluateArgs),
    /// Diagnostics of a schedule or of the model.
    Analyze {
        #[command(subcommand)]
        which: AnalyzeCommand,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides run.output_dir.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Caps parallel rollouts and sweep tasks.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[command(flatten)]
    pub common: Common,
    /// Stage-1 schedule (JSON).
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub keep_top: usize,
    /// Train again on the kept fields.
    #[arg(long)]
    pub retrain: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub schedule: PathBuf,
    /// Lindblad evolution with the given rates.
    #[arg(long)]
    pub open: bool,
    #[arg(long, default_value_t = 0.0)]
    pub kappa1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub kappa2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub kappa3: f64,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub schedule: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Forward,
    Central,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AmplitudeModeArg {
    Multiplicative,
    Additive,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Quantum Fisher information along a schedule or of the static family.
    Qfi {
        /// Config; required unless --static.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Analytic squeezed-vacuum family at the couplings in --g.
        #[arg(long = "static")]
        static_family: bool,
        #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5, 0.7, 0.9])]
        g: Vec<f64>,
        #[arg(long, default_value_t = analysis::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Central)]
        method: MethodArg,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Populations of the lowest instantaneous eigenstates.
    Populations {
        #[command(flatten)]
        args: ScheduleArgs,
        #[arg(long, default_value_t = 10)]
        m: usize,
    },
    /// Cavity Wigner functions of the initial and final states.
    Wigner {
        #[command(flatten)]
        args: ScheduleArgs,
        /// Half-width of the square x, p window.
        #[arg(long, default_value_t = 4.0)]
        extent: f64,
        #[arg(long, default_value_t = 81)]
        points: usize,
    },
    /// Fidelity under Gaussian parameter noise.
    Robustness {
        #[command(flatten)]
        args: ScheduleArgs,
        /// omega_d, phi<i> or lambda<i>; repeatable.
        #[arg(long, value_delimiter = ',', default_values_t = ["omega_d".to_string(), "phi2".to_string(), "lambda2".to_string()])]
        chi: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05])]
        beta: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        realizations: usize,
        #[arg(long, value_enum, default_value_t = AmplitudeModeArg::Multiplicative)]
        amplitude_mode: AmplitudeModeArg,
        /// Defaults to run.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Open-system fidelity over a grid of one dissipation rate.
    Dissipation {
        #[command(flatten)]
        args: ScheduleArgs,
        /// kappa1, kappa2 or kappa3.
        #[arg(long, default_value = "kappa1")]
        channel: String,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.005, 0.01, 0.02, 0.05])]
        kappas: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        kappa1: f64,
        #[arg(long, default_value_t = 0.0)]
        kappa2: f64,
        #[arg(long, default_value_t = 0.01)]
        kappa3: f64,
    },
    /// Excitation energies over a coupling grid.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        g_start: f64,
        #[arg(long, default_value_t = 1.0)]
        g_end: f64,
        #[arg(long, default_value_t = 0.01)]
        g_step: f64,
        /// Number of excitation gaps E_n − E₀, n = 1..=m.
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Integer or "auto"; defaults to the config value.
        #[arg(long)]
        fock_cutoff: Option<String>,
    },
}

/// Command failure split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Prune(a) => cmd_prune(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Analyze { which } => cmd_analyze(which),
    }
}

struct Loaded {
    cfg: RunConfig,
    out: PathBuf,
}

fn load(common: &Common) -> CliResult<Loaded> {
    let mut cfg = RunConfig::load(&common.config).map_err(usage)?;
    if let Some(w) = common.workers {
        cfg.run.workers = w;
    }
    let out = cfg.output_dir(common.output_dir.as_deref());
    Ok(Loaded { cfg, out })
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(Error::io(dir, e)))
}

fn load_schedule(path: &Path) -> CliResult<PulseSchedule> {
    PulseSchedule::load(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn task_of(cfg: &RunConfig) -> CliResult<TaskSpec> {
    cfg.task().map_err(usage)
}

fn pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        b = b.num_threads(workers);
    }
    let p = b.build().map_err(|e| CliError::Usage(format!("workers: {e}")))?;
    Ok(p.install(f))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    analysis::write_json(value, path).map_err(CliError::Runtime)
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let Loaded { mut cfg, out } = load(&a.common)?;
    if let Some(n) = a.episodes {
        cfg.run.episodes = n;
    }
    if let Some(s) = a.seed {
        cfg.run.seed = s;
    }
    let task = task_of(&cfg)?;
    ensure_dir(&out)?;
    let snapshot = out.join("config.toml");
    std::fs::write(&snapshot, cfg.to_toml().map_err(usage)?).map_err(|e| CliError::Runtime(Error::io(&snapshot, e)))?;
    let mut sink = FileSink::create(&out)?;
    let log = train(&task, &cfg.ppo, &cfg.train_options(), &mut sink)?;
    drop(sink);
    let summary = log.summary();
    write_json(&summary, &out.join("summary.json"))?;
    print_summary(&summary, &out);
    Ok(())
}

fn print_summary(s: &TrainSummary, out: &Path) {
    match (s.best_episode, s.best_duration) {
        (Some(ep), Some(t)) => println!(
            "best F = {:.6} at ωT = {:.4} (episode {ep} of {}, {} failed)",
            s.best_fidelity, t, s.episodes, s.failures
        ),
        _ => println!("no successful episode in {} ({} failed)", s.episodes, s.failures),
    }
    println!("artifacts in {}", out.display());
}

/// Propagator plus initial and target states for an arbitrary schedule: the
/// model and cutoff come from the config, g₀ and g_c from the schedule ramp.
struct Setup {
    prop: Propagator,
    psi0: StateVector,
    target: StateVector,
}

fn setup(cfg: &RunConfig, schedule: &PulseSchedule) -> CliResult<Setup> {
    let model = cfg.model().map_err(usage)?;
    let space = model.space(cfg.fock_cutoff().map_err(usage)?).map_err(usage)?;
    let prop = Propagator::new(model, space, cfg.integrator).map_err(usage)?;
    let (_, psi0) = ground_state_numeric(&model.hamiltonian(schedule.ramp.g0, &space)?)?;
    let (_, target) = ground_state_numeric(&model.hamiltonian(schedule.ramp.gc, &space)?)?;
    Ok(Setup { prop, psi0, target })
}

fn schedule_env(cfg: &RunConfig, schedule: &PulseSchedule) -> CliResult<Environment> {
    let mut task = task_of(cfg)?;
    task.g0 = schedule.ramp.g0;
    task.gc = schedule.ramp.gc;
    task.field_mask = [false; 5];
    for k in schedule.active_kinds() {
        task.field_mask[k.index() - 1] = true;
    }
    if task.field_mask.iter().all(|m| !m) {
        task.field_mask = TaskSpec::desk_scale().field_mask;
    }
    task.noise = None;
    Environment::new(task, EnvMode::Episodic).map_err(usage)
}

#[derive(Serialize)]
struct PruneSummary<'a> {
    report: &'a SimilarityReport,
    keep_top: usize,
    stage1_fidelity: f64,
    stage1_duration: f64,
    stage2: Option<TrainSummary>,
}

fn cmd_prune(a: PruneArgs) -> CliResult<()> {
    let Loaded { cfg, out } = load(&a.common)?;
    let schedule = load_schedule(&a.schedule)?;
    let s = setup(&cfg, &schedule)?;
    ensure_dir(&out)?;
    let report = pool(cfg.run.workers, || rank_fields(&s.prop, &schedule, &s.psi0))??;
    let rid = &cfg.run.run_id;
    write_json(&report, &analysis::output_path(&out, rid, "similarity", "json"))?;
    print!("{}", report.table());
    let stage1_fidelity = final_fidelity(&s.prop.evolve_pure(&schedule, &s.psi0)?, &s.target)?;
    let stage2 = if a.retrain {
        let task = pruned_task(&task_of(&cfg)?, &report, a.keep_top).map_err(usage)?;
        let dir = out.join("stage2");
        let mut sink = FileSink::create(&dir)?;
        let log = train(&task, &cfg.ppo, &cfg.train_options(), &mut sink)?;
        drop(sink);
        let summary = log.summary();
        write_json(&summary, &dir.join("summary.json"))?;
        print_summary(&summary, &dir);
        Some(summary)
    } else {
        None
    };
    let summary = PruneSummary {
        report: &report,
        keep_top: a.keep_top,
        stage1_fidelity,
        stage1_duration: schedule.duration,
        stage2,
    };
    write_json(&summary, &analysis::output_path(&out, rid, "prune", "json"))?;
    Ok(())
}

#[derive(Serialize)]
struct EvaluateSummary {
    fidelity: f64,
    norm_drift: f64,
    duration: f64,
    open_system: bool,
    noise: Option<NoiseRates>,
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult<()> {
    let Loaded { cfg, out } = load(&a.common)?;
    let schedule = load_schedule(&a.schedule)?;
    let s = setup(&cfg, &schedule)?;
    let noise = if a.open {
        Some(NoiseRates::new(a.kappa1, a.kappa2, a.kappa3).map_err(usage)?)
    } else {
        None
    };
    let traj: Trajectory = match &noise {
        None => s.prop.evolve_pure(&schedule, &s.psi0)?,
        Some(rates) => s.prop.evolve_lindblad(&schedule, &DensityMatrix::from_pure(&s.psi0), rates)?,
    };
    let summary = EvaluateSummary {
        fidelity: final_fidelity(&traj, &s.target)?,
        norm_drift: traj.max_norm_drift(),
        duration: schedule.duration,
        open_system: noise.is_some(),
        noise,
    };
    ensure_dir(&out)?;
    let rid = &cfg.run.run_id;
    write_trajectory_csv(&traj, Some(&s.target), &analysis::output_path(&out, rid, "trajectory", "csv"))?;
    write_json(&summary, &analysis::output_path(&out, rid, "evaluate", "json"))?;
    println!(
        "F = {:.9}  norm drift = {:.3e}  ωT = {:.6}",
        summary.fidelity, summary.norm_drift, summary.duration
    );
    Ok(())
}

fn cmd_analyze(which: AnalyzeCommand) -> CliResult<()> {
    match which {
        AnalyzeCommand::Qfi {
            config,
            schedule,
            static_family,
            g,
            delta,
            method,
            output_dir,
            run_id,
        } => {
            let method = match method {
                MethodArg::Forward => FiniteDifference::Forward,
                MethodArg::Central => FiniteDifference::Central,
            };
            let (result, out, rid) = if static_family {
                let cfg = config.as_deref().map(RunConfig::load).transpose().map_err(usage)?;
                let rid = run_id.unwrap_or_else(|| cfg.as_ref().map_or("static".into(), |c| c.run.run_id.clone()));
                let out = match &cfg {
                    Some(c) => c.output_dir(output_dir.as_deref()),
                    None => output_dir
                        .or_else(|| std::env::var_os(crate::config::OUTPUT_DIR_ENV).map(PathBuf::from))
                        .unwrap_or_else(|| PathBuf::from("runs").join(&rid)),
                };
                (analysis::qfi_static_sweep(&g, delta, method).map_err(usage)?, out, rid)
            } else {
                let (Some(config), Some(schedule)) = (config, schedule) else {
                    return Err(CliError::Usage("qfi needs --config and --schedule (or --static)".into()));
                };
                let cfg = RunConfig::load(&config).map_err(usage)?;
                let sched = load_schedule(&schedule)?;
                let s = setup(&cfg, &sched)?;
                let r = analysis::qfi_finite_difference(&s.prop, &sched, &s.psi0, delta, method)?;
                let rid = run_id.unwrap_or(cfg.run.run_id.clone());
                (r, cfg.output_dir(output_dir.as_deref()), rid)
            };
            ensure_dir(&out)?;
            analysis::write_qfi_csv(&result, &analysis::output_path(&out, &rid, "qfi", "csv"))?;
            write_json(&result, &analysis::output_path(&out, &rid, "qfi", "json"))?;
            let last = result.qfi_values.len() - 1;
            println!("I = {:.6e} (bound {:.6e}) at the last point", result.qfi_values[last], result.bound_values[last]);
        }
        AnalyzeCommand::Populations { args, m } => {
            let Loaded { cfg, out } = load(&args.common)?;
            let sched = load_schedule(&args.schedule)?;
            let s = setup(&cfg, &sched)?;
            let traj = s.prop.evolve_pure(&sched, &s.psi0)?;
            let r = analysis::instantaneous_populations(s.prop.model(), s.prop.space(), &sched, &traj, m)
                .map_err(usage)?;
            ensure_dir(&out)?;
            let rid = &cfg.run.run_id;
            analysis::write_populations_csv(&r, &analysis::output_path(&out, rid, "populations", "csv"))?;
            write_json(&r, &analysis::output_path(&out, rid, "populations", "json"))?;
            println!("P0(T) = {:.6}", r.populations.last().map_or(0.0, |c| c[0]));
        }
        AnalyzeCommand::Wigner { args, extent, points } => {
            let Loaded { cfg, out } = load(&args.common)?;
            let sched = load_schedule(&args.schedule)?;
            let s = setup(&cfg, &sched)?;
            let grid = PhaseGrid {
                x: (-extent, extent),
                p: (-extent, extent),
                nx: points,
                np: points,
            };
            let traj = s.prop.evolve_pure(&sched, &s.psi0)?;
            let states = traj.pure_states().expect("pure evolution");
            ensure_dir(&out)?;
            let rid = &cfg.run.run_id;
            let mut summary = serde_json::Map::new();
            for (name, psi) in [("initial", &states[0]), ("final", &states[states.len() - 1])] {
                let rho = DensityMatrix::from_pure(psi).partial_trace_emitter(s.prop.space())?;
                let w = analysis::wigner_function(&rho, &grid).map_err(usage)?;
                let tag = format!("wigner_{name}");
                analysis::write_wigner_csv(&w, &analysis::output_path(&out, rid, &tag, "csv"))?;
                let (x2, p2) = w.second_moments();
                summary.insert(
                    name.into(),
                    serde_json::json!({ "integral": w.integral(), "x2": x2, "p2": p2, "min": w.min_value() }),
                );
                println!("{name}: ∫W = {:.6}  <x²> = {x2:.6}  <p²> = {p2:.6}", w.integral());
            }
            write_json(&summary, &analysis::output_path(&out, rid, "wigner", "json"))?;
        }
        AnalyzeCommand::Robustness {
            args,
            chi,
            beta,
            realizations,
            amplitude_mode,
            seed,
        } => {
            let Loaded { cfg, out } = load(&args.common)?;
            let sched = load_schedule(&args.schedule)?;
            let env = schedule_env(&cfg, &sched)?;
            let mode = match amplitude_mode {
                AmplitudeModeArg::Multiplicative => AmplitudeMode::Multiplicative,
                AmplitudeModeArg::Additive => AmplitudeMode::Additive,
            };
            let params: Vec<Perturbation> = chi.iter().map(|c| c.parse()).collect::<Result<_, _>>().map_err(usage)?;
            let seed = seed.unwrap_or(cfg.run.seed);
            ensure_dir(&out)?;
            let rid = &cfg.run.run_id;
            let mut results = Vec::new();
            for p in params {
                let r = pool(cfg.run.workers, || {
                    analysis::robustness_sweep(&env, &sched, p, mode, &beta, realizations, seed)
                })?
                .map_err(|e| match e {
                    Error::InvalidParameter { .. } => usage(e),
                    e => CliError::Runtime(e),
                })?;
                analysis::write_robustness_csv(&r, &analysis::output_path(&out, rid, &format!("robustness_{p}"), "csv"))?;
                let worst = r.mean_fidelity.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                println!("{p}: F = {:.6}, worst mean {:.6}", r.unperturbed_fidelity, worst);
                results.push(r);
            }
            write_json(&results, &analysis::output_path(&out, rid, "robustness", "json"))?;
        }
        AnalyzeCommand::Dissipation {
            args,
            channel,
            kappas,
            kappa1,
            kappa2,
            kappa3,
        } => {
            let Loaded { cfg, out } = load(&args.common)?;
            let sched = load_schedule(&args.schedule)?;
            let env = schedule_env(&cfg, &sched)?;
            let channel: NoiseChannel = channel.parse().map_err(usage)?;
            let fixed = NoiseRates::new(kappa1, kappa2, kappa3).map_err(usage)?;
            let r = pool(cfg.run.workers, || analysis::dissipation_sweep(&env, &sched, channel, &kappas, fixed))??;
            ensure_dir(&out)?;
            let rid = &cfg.run.run_id;
            analysis::write_dissipation_csv(&r, &analysis::output_path(&out, rid, "dissipation", "csv"))?;
            write_json(&r, &analysis::output_path(&out, rid, "dissipation", "json"))?;
            for (k, f) in r.kappa_grid.iter().zip(&r.fidelity) {
                match f {
                    Some(f) => println!("κ = {k}: F = {f:.6}"),
                    None => println!("κ = {k}: failed"),
                }
            }
        }
        AnalyzeCommand::Spectrum {
            common,
            g_start,
            g_end,
            g_step,
            m,
            fock_cutoff,
        } => {
            let Loaded { cfg, out } = load(&common)?;
            let model = cfg.model().map_err(usage)?;
            let grid = analysis::coupling_grid(g_start, g_end, g_step).map_err(usage)?;
            let cutoff = match fock_cutoff.as_deref() {
                None => match &cfg.model.fock_cutoff {
                    crate::config::CutoffSetting::Fixed(n) => Some(*n),
                    _ => None,
                },
                Some("auto") => None,
                Some(s) => Some(
                    s.parse::<usize>()
                        .map_err(|_| CliError::Usage(format!("--fock-cutoff: `{s}` is not an integer or auto")))?,
                ),
            };
            let r = analysis::spectrum_sweep(&model, &grid, m + 1, cutoff).map_err(|e| match e {
                Error::InvalidParameter { .. } => usage(e),
                e => CliError::Runtime(e),
            })?;
            ensure_dir(&out)?;
            let rid = &cfg.run.run_id;
            analysis::write_spectrum_csv(&r, &analysis::output_path(&out, rid, "spectrum", "csv"))?;
            write_json(&r, &analysis::output_path(&out, rid, "spectrum", "json"))?;
            println!("{} couplings, fock_cutoff {}", r.g.len(), r.fock_cutoff);
        }
    }
    Ok(())
}
