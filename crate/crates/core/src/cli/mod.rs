//! Command-line front end. Every command writes its numeric artifacts plus a
//! `manifest.json` that `--replay` can re-run bit-for-bit.

use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analytic::{
    pi_ana_policy, probe, solve_phase_two, solve_single_phase, solve_two_phase,
    solve_two_phase_with, AnalyticSolution, SearchConfig, Stop, TwoPhasePolicy, WorstCaseParams,
};
use crate::cheby::{ChebyModel, MAX_HORNER_DEGREE};
use crate::env::{mc_rollout, write_mc_trajectory_csv, EnvKind, McParams, McState, PendulumParams};
use crate::evalharness::{
    eval_mc, eval_mc_with, eval_pendulum, heatmap_export, linspace, policy_l2_distance, EvalReport,
};
use crate::policy::{DeterministicPolicy, PolicyFile};
use crate::train::{train_protocol, Algo, AlgoConfig, InitConfig, TrainSpec};
use crate::{rng, Error};

/// Deterministic evaluation episodes per run when selecting the best run.
pub const SELECTION_EPISODES: usize = 50;
const HEATMAP_RES: usize = 201;
const L2_RES: usize = 100;
const DENSITY_BINS: usize = 50;

#[derive(Debug, Clone, Parser)]
#[command(
    name = "chebycar",
    version,
    about = "Analytical Mountain Car control and Chebyshev policy training"
)]
pub struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Re-run the command recorded in a manifest.
    #[arg(long, global = true, value_name = "MANIFEST")]
    pub replay: Option<PathBuf>,
    /// Print a human-readable summary instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Directory for artifacts and the manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve for the analytical optimum or evaluate the worst-case policy.
    Analytic(AnalyticArgs),
    /// Train Chebyshev policies with the best-of-n protocol.
    Train(TrainArgs),
    /// Evaluate a stored policy or the analytical worst-case policy.
    Eval(EvalArgs),
    /// Rollout throughput and Horner operation counts per degree.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    Two,
    Worst,
    OptX0,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticArgs {
    /// Start position (at rest), inside [-0.6, -0.4].
    #[arg(long, default_value_t = -0.55, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, value_enum, default_value_t = Mode::Two)]
    pub mode: Mode,
    /// Grid size over the start interval for `worst` and `opt-x0`.
    #[arg(long, default_value_t = 100)]
    pub scan_x0: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// mountaincar or pendulum.
    #[arg(long, default_value = "mountaincar")]
    pub env: EnvKind,
    /// reinforce, ars or ppo.
    #[arg(long)]
    pub algo: Algo,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Defaults to min(degree, 3).
    #[arg(long)]
    pub sigma_degree: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Base seed; run i uses seed + i. `CHEBY_SEED` overrides it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file overriding the algorithm defaults (plus an optional "init").
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["policy", "analytic_worst"])))]
pub struct EvalArgs {
    /// Policy JSON written by `train`.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Evaluate the worst-case analytical policy instead.
    #[arg(long)]
    pub analytic_worst: bool,
    /// Defaults to the environment recorded in the policy file.
    #[arg(long)]
    pub env: Option<EnvKind>,
    /// Starts for Mountain Car (default 100), points per axis for Pendulum (default 50).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Also write the 201x201 phase-plane action map.
    #[arg(long)]
    pub heatmap: bool,
    /// Start of a trajectory to overlay on the heatmap.
    #[arg(long, allow_hyphen_values = true)]
    pub overlay_x0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Inclusive degree range, e.g. `1..50`.
    #[arg(long, default_value = "1..10")]
    pub degree_sweep: String,
    /// Environment steps timed per degree.
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
}

/// Exit code 2 for usage and configuration problems, 3 when a command ran but
/// produced no result (all training runs diverged, no analytical solution).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    /// Arguments after the program name, as they would be typed.
    pub command: Vec<String>,
    /// Fully resolved configuration.
    pub config: Value,
    /// SHA-256 of the compact JSON of `config`.
    pub config_hash: String,
    pub base_seed: Option<u64>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// What a command hands back: the stdout summary and the manifest inputs.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Value,
    pub pretty: String,
    pub manifest: Option<ExperimentManifest>,
}

struct Sink {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Sink {
    fn new(dir: Option<PathBuf>) -> CliResult<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn write<F>(&mut self, name: &str, f: F) -> CliResult<()>
    where
        F: FnOnce(&mut dyn Write) -> crate::Result<()>,
    {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

/// Parses `args` (including the program name), runs the command and writes
/// the manifest when an output directory was given.
pub fn run_from<I, S>(args: I) -> CliResult<Outcome>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli, args.get(1..).unwrap_or_default().to_vec())
}

/// Runs a parsed command line; `echo` is recorded in the manifest.
pub fn run(cli: Cli, echo: Vec<String>) -> CliResult<Outcome> {
    let (command, echo, seed_override, out) = match &cli.replay {
        Some(path) => {
            if cli.command.is_some() {
                return Err(CliError::Usage("--replay takes no subcommand".into()));
            }
            let text = fs::read_to_string(path)?;
            let m: ExperimentManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid manifest: {e}")))?;
            let inner = Cli::try_parse_from(
                std::iter::once("chebycar".to_string()).chain(m.command.clone()),
            )
            .map_err(|e| CliError::Usage(format!("manifest command: {e}")))?;
            let out = cli.out.clone().or(inner.out);
            let command = inner
                .command
                .ok_or_else(|| CliError::Usage("manifest has no command".into()))?;
            (command, strip_out(&m.command), m.base_seed, out)
        }
        None => {
            let command = cli.command.clone().ok_or_else(|| {
                CliError::Usage("missing subcommand (analytic, train, eval, bench)".into())
            })?;
            (command, strip_out(&echo), None, cli.out.clone())
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let mut sink = Sink::new(out)?;
    let (summary, pretty, config, seed) = pool.install(|| match &command {
        Command::Analytic(a) => cmd_analytic(a, &mut sink),
        Command::Train(a) => cmd_train(a, seed_override, &mut sink),
        Command::Eval(a) => cmd_eval(a, &mut sink),
        Command::Bench(a) => cmd_bench(a, &mut sink),
    })?;
    let manifest = match &sink.dir {
        Some(dir) => {
            let m = ExperimentManifest {
                command: echo,
                config_hash: config_hash(&config),
                config,
                base_seed: seed,
                artifacts: sink.files.clone(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
            };
            fs::write(
                dir.join("manifest.json"),
                serde_json::to_string_pretty(&m).map_err(Error::from)?,
            )?;
            Some(m)
        }
        None => None,
    };
    Ok(Outcome {
        summary,
        pretty,
        manifest,
    })
}

/// The echo is replayed with an explicit `--out`, so it must not carry one.
fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

type Done = (Value, String, Value, Option<u64>);

fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::from(Error::from(e)))
}

fn report_line(name: &str, r: &EvalReport) -> String {
    let mut s = format!(
        "{name:<12} mean {:>9.4}  std {:>7.4}  min {:>9.4}  max {:>9.4}  t* {:>6.1}  failures {}",
        r.returns.mean, r.returns.std, r.returns.min, r.returns.max, r.t_star.mean, r.failures
    );
    if let Some(g) = r.regret {
        s.push_str(&format!("  regret {g:+.4}"));
    }
    if let Some(d) = r.l2_to_ana {
        s.push_str(&format!("  l2 {d:.4}"));
    }
    s
}

fn report_summary(r: &EvalReport) -> Value {
    json!({
        "returns": r.returns,
        "t_star": r.t_star,
        "v_star": r.v_star,
        "regret": r.regret,
        "l2_to_ana": r.l2_to_ana,
        "failures": r.failures,
    })
}

fn cmd_analytic(a: &AnalyticArgs, sink: &mut Sink) -> CliResult<Done> {
    let params = McParams::default();
    let cfg = SearchConfig::default();
    let config = json!({ "command": "analytic", "args": a, "search": cfg });
    match a.mode {
        Mode::Single | Mode::Two => {
            let sol = match a.mode {
                Mode::Single => solve_single_phase(a.x0, &params, &cfg)?,
                _ => solve_two_phase(a.x0, &params, &cfg)?,
            };
            if a.mode == Mode::Single {
                write_loss_curve(a.x0, &params, &cfg, sink)?;
            }
            let sol = sol.ok_or_else(|| {
                CliError::Failed(format!("no feasible solution from x0 = {}", a.x0))
            })?;
            write_solution(&sol, sink)?;
            let pretty = solution_pretty(&sol);
            Ok((to_value(&sol)?, pretty, config, None))
        }
        Mode::Worst => {
            let worst = WorstCaseParams::default();
            let policy = pi_ana_policy(&worst, &params)?;
            let report = eval_mc(&policy, a.scan_x0, &params)?;
            let report = report.clone().with_regret(&report).with_l2(0.0);
            sink.json("report.json", &report)?;
            sink.write("starts.csv", |w| report.write_starts_csv(w))?;
            if let Some(b) = &policy.boundary {
                sink.write("boundary.csv", |w| b.write_csv(w))?;
            }
            let traj = mc_rollout(|s: &McState| policy.action(s.x, s.v), a.x0, &params)?;
            sink.write("trajectory.csv", |w| write_mc_trajectory_csv(&traj, w))?;
            let summary =
                json!({ "policy": "pi_ana", "params": worst, "report": report_summary(&report) });
            Ok((summary, report_line("pi_ana", &report), config, None))
        }
        Mode::OptX0 => {
            let ana = pi_ana_policy(&WorstCaseParams::default(), &params)?;
            let ana_report = eval_mc(&ana, a.scan_x0, &params)?;
            let two = solve_phase_two(&params)?;
            let starts = linspace(crate::env::START_LO, crate::env::START_HI, a.scan_x0);
            let report = eval_mc_with(&starts, &params, |x0| {
                let sol = solve_two_phase_with(x0, &params, &cfg, &two)?.ok_or_else(|| {
                    Error::Domain(format!("no two-phase solution from x0 = {x0}"))
                })?;
                Ok(sol.trajectory)
            })?
            .with_regret(&ana_report);
            sink.json("report.json", &report)?;
            sink.write("starts.csv", |w| report.write_starts_csv(w))?;
            sink.write("boundary.csv", |w| two.boundary.write_csv(w))?;
            let summary =
                json!({ "policy": "pi_opt_x0", "C2": two.c2, "report": report_summary(&report) });
            Ok((summary, report_line("pi_opt,x0", &report), config, None))
        }
    }
}

fn write_solution(sol: &AnalyticSolution, sink: &mut Sink) -> CliResult<()> {
    sink.json("solution.json", sol)?;
    sink.write("trajectory.csv", |w| {
        write_mc_trajectory_csv(&sol.trajectory, w)
    })?;
    if let Some(b) = sol.boundary() {
        sink.write("boundary.csv", |w| b.write_csv(w))?;
    }
    Ok(())
}

fn solution_pretty(sol: &AnalyticSolution) -> String {
    let gain = |g: Option<f64>| g.map_or("-".to_string(), |c| format!("{c:.6}"));
    format!(
        "x0 {:.6}  k {}  C {}  C1 {}  C2 {}  loss {:.6}  R {:.4}  t* {}  v* {:.3e}  v_wall {:.3e}",
        sol.x0,
        sol.k,
        gain(sol.c),
        gain(sol.c1),
        gain(sol.c2),
        sol.loss,
        sol.ret,
        sol.t_star,
        sol.v_star,
        sol.v_wall
    )
}

/// Loss of the single-phase policy over the log-spaced gain scan:
/// `C,loss,strokes,goal`.
fn write_loss_curve(
    x0: f64,
    params: &McParams,
    cfg: &SearchConfig,
    sink: &mut Sink,
) -> CliResult<()> {
    if sink.dir.is_none() {
        return Ok(());
    }
    let worst = WorstCaseParams::default();
    let (lo, hi) = (cfg.c_lo.ln(), cfg.c_hi.ln());
    let n = cfg.scan_points.max(2);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let c = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
        let p = probe(
            |s: &McState| TwoPhasePolicy::single(c, &worst).action(s.x, s.v),
            McState::at_rest(x0),
            params,
            params.t_max as usize,
            cfg.k_max,
        )?;
        rows.push((c, p.loss, p.strokes, p.stop == Stop::Goal));
    }
    sink.write("loss_curve.csv", |w| {
        writeln!(w, "C,loss,strokes,goal")?;
        for (c, loss, k, goal) in &rows {
            writeln!(w, "{c},{loss},{k},{}", u8::from(*goal))?;
        }
        Ok(())
    })
}

fn resolve_seed(cli_seed: u64) -> CliResult<u64> {
    match std::env::var("CHEBY_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("CHEBY_SEED must be a u64, got '{s}'"))),
        Err(_) => Ok(cli_seed),
    }
}

/// Applies a JSON override file to `spec`. Keys must name fields of the
/// algorithm config (nested objects are merged) or be `"init"`.
pub fn apply_config_overrides(spec: &mut TrainSpec, overrides: &Value) -> crate::Result<()> {
    let obj = overrides
        .as_object()
        .ok_or_else(|| Error::Config("config file must hold a JSON object".into()))?;
    let mut base = serde_json::to_value(&spec.config)?;
    for (k, v) in obj {
        if k == "init" {
            spec.init = serde_json::from_value::<InitConfig>(v.clone())?;
            continue;
        }
        match base.get_mut(k) {
            Some(slot) => merge(slot, v),
            None => return Err(Error::Config(format!("unknown config key '{k}'"))),
        }
    }
    let algo = spec.algo();
    spec.config = serde_json::from_value::<AlgoConfig>(base)?;
    if spec.algo() != algo {
        return Err(Error::Config(format!(
            "config file is for '{}' but --algo is '{}'",
            spec.algo().name(),
            algo.name()
        )));
    }
    Ok(())
}

fn merge(slot: &mut Value, v: &Value) {
    match (slot.as_object_mut(), v.as_object()) {
        (Some(dst), Some(src)) => {
            for (k, v) in src {
                match dst.get_mut(k) {
                    Some(d) => merge(d, v),
                    None => {
                        dst.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        _ => *slot = v.clone(),
    }
}

fn cmd_train(a: &TrainArgs, seed_override: Option<u64>, sink: &mut Sink) -> CliResult<Done> {
    let seed = match seed_override {
        Some(s) => s,
        None => resolve_seed(a.seed)?,
    };
    let mut spec = TrainSpec::new(a.env, a.algo, a.degree, seed);
    if let Some(s) = a.sigma_degree {
        spec.sigma_degree = s;
    }
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(Error::from)?;
        apply_config_overrides(&mut spec, &v)?;
    }
    spec.validate()?;
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let config = json!({ "command": "train", "spec": spec, "runs": a.runs, "selection_episodes": SELECTION_EPISODES });
    let started = Instant::now();
    let res = train_protocol(&spec, a.runs, SELECTION_EPISODES)?;
    let elapsed = started.elapsed().as_secs_f64();
    for (i, run) in res.runs.iter().enumerate() {
        sink.json(&format!("runs/{i:02}/run.json"), &run.artifact())?;
        sink.write(&format!("runs/{i:02}/curve.csv"), |w| {
            run.write_curve_csv(w)
        })?;
    }
    sink.json(
        "runs.json",
        &json!({ "spec": spec, "summaries": res.summaries, "best": res.best }),
    )?;
    let diverged = res.summaries.iter().filter(|s| s.diverged).count();
    let (Some(best), Some(summary)) = (res.best_run(), res.best_summary()) else {
        return Err(CliError::Failed(format!("all {} runs diverged", a.runs)));
    };
    let policy = best.policy.as_ref().expect("selected runs carry a policy");
    let file = PolicyFile::new(spec.env, spec.algo().name(), summary.seed, policy);
    sink.json("best_policy.json", &file)?;
    let eval = summary.eval.expect("selected runs are evaluated");
    let mut out = json!({
        "env": spec.env.name(),
        "algo": spec.algo().name(),
        "degree": spec.degree,
        "runs": a.runs,
        "diverged": diverged,
        "best_index": summary.index,
        "best_seed": summary.seed,
        "best_eval": eval,
    });
    let mut pretty = format!(
        "{} {} d={} runs={} diverged={}  best run {} (seed {}): mean {:.4} std {:.4} min {:.4} max {:.4}",
        spec.env.name(),
        spec.algo().name(),
        spec.degree,
        a.runs,
        diverged,
        summary.index,
        summary.seed,
        eval.mean,
        eval.std,
        eval.min,
        eval.max
    );
    match spec.env {
        EnvKind::MountainCar => {
            let report = mc_report(policy, 100)?;
            sink.json("best_eval.json", &report)?;
            sink.write("best_starts.csv", |w| report.write_starts_csv(w))?;
            out["grid"] = report_summary(&report);
            pretty.push('\n');
            pretty.push_str(&report_line("grid", &report));
        }
        EnvKind::Pendulum => {
            let report = eval_pendulum(policy, 50, &PendulumParams::default())?;
            sink.json("best_eval.json", &report)?;
            sink.write("density.csv", |w| report.write_density_csv(DENSITY_BINS, w))?;
            out["grid"] = json!({ "returns": report.returns });
            pretty.push_str(&format!(
                "\ngrid 50x50   mean {:.4}  std {:.4}  min {:.4}  max {:.4}",
                report.returns.mean, report.returns.std, report.returns.min, report.returns.max
            ));
        }
    }
    pretty.push_str(&format!("\nwall clock {elapsed:.1} s"));
    Ok((out, pretty, config, Some(seed)))
}

/// Grid evaluation with regret and action distance against the worst-case policy.
fn mc_report<P: DeterministicPolicy>(policy: &P, grid: usize) -> CliResult<EvalReport> {
    let params = McParams::default();
    let ana = pi_ana_policy(&WorstCaseParams::default(), &params)?;
    let ana_report = eval_mc(&ana, grid, &params)?;
    let l2 = policy_l2_distance(policy, &ana, L2_RES, L2_RES)?;
    Ok(eval_mc(policy, grid, &params)?
        .with_regret(&ana_report)
        .with_l2(l2))
}

fn cmd_eval(a: &EvalArgs, sink: &mut Sink) -> CliResult<Done> {
    let config = json!({
        "command": "eval",
        "policy": a.policy.as_ref().map(|p| p.display().to_string()),
        "analytic_worst": a.analytic_worst,
        "env": a.env.map(|e| e.name()),
        "grid": a.grid,
        "heatmap": a.heatmap,
        "overlay_x0": a.overlay_x0,
    });
    if a.analytic_worst {
        if a.env == Some(EnvKind::Pendulum) {
            return Err(CliError::Usage(
                "--analytic-worst is a Mountain Car policy".into(),
            ));
        }
        let policy = pi_ana_policy(&WorstCaseParams::default(), &McParams::default())?;
        let (summary, pretty) = eval_mc_artifacts(&policy, "pi_ana", a, sink)?;
        return Ok((summary, pretty, config, None));
    }
    let path = a.policy.as_ref().expect("clap enforces a policy source");
    let file = PolicyFile::load(path)
        .map_err(|e| CliError::Usage(format!("invalid policy file {}: {e}", path.display())))?;
    let env = file.env;
    if a.env.is_some_and(|e| e != env) {
        return Err(CliError::Usage(format!(
            "policy file is for '{}', not '{}'",
            env.name(),
            a.env.unwrap().name()
        )));
    }
    let policy = file
        .into_policy()
        .map_err(|e| CliError::Usage(format!("invalid policy file {}: {e}", path.display())))?;
    let (summary, pretty) = match env {
        EnvKind::MountainCar => eval_mc_artifacts(&policy, "policy", a, sink)?,
        EnvKind::Pendulum => {
            if a.heatmap || a.overlay_x0.is_some() {
                return Err(CliError::Usage(
                    "heatmaps are available for Mountain Car only".into(),
                ));
            }
            let n = a.grid.unwrap_or(50);
            let report = eval_pendulum(&policy, n, &PendulumParams::default())?;
            sink.json("report.json", &report)?;
            sink.write("density.csv", |w| report.write_density_csv(DENSITY_BINS, w))?;
            let pretty = format!(
                "pendulum {n}x{n}  mean {:.4}  std {:.4}  min {:.4}  max {:.4}",
                report.returns.mean, report.returns.std, report.returns.min, report.returns.max
            );
            (json!({ "returns": report.returns }), pretty)
        }
    };
    Ok((summary, pretty, config, None))
}

fn eval_mc_artifacts<P: DeterministicPolicy>(
    policy: &P,
    name: &str,
    a: &EvalArgs,
    sink: &mut Sink,
) -> CliResult<(Value, String)> {
    let grid = a.grid.unwrap_or(100);
    if grid == 0 {
        return Err(CliError::Usage("--grid must be positive".into()));
    }
    let report = mc_report(policy, grid)?;
    sink.json("report.json", &report)?;
    sink.write("starts.csv", |w| report.write_starts_csv(w))?;
    if a.heatmap || a.overlay_x0.is_some() {
        let hm = heatmap_export(
            policy,
            HEATMAP_RES,
            HEATMAP_RES,
            a.overlay_x0,
            &McParams::default(),
        )?;
        if a.heatmap {
            sink.write("heatmap.csv", |w| hm.write_csv(w))?;
        }
        if let Some(t) = &hm.overlay {
            sink.write("overlay.csv", |w| write_mc_trajectory_csv(t, w))?;
        }
    }
    Ok((
        json!({ "policy": name, "report": report_summary(&report) }),
        report_line(name, &report),
    ))
}

pub fn parse_degree_sweep(s: &str) -> CliResult<RangeInclusive<usize>> {
    let bad = || CliError::Usage(format!("degree sweep must look like 'a..b', got '{s}'"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b): (usize, usize) = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if a > b {
        return Err(CliError::Usage(format!("empty degree sweep '{s}'")));
    }
    if a == 0 {
        return Err(CliError::Usage("degrees start at 1".into()));
    }
    Ok(a..=b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub degree: usize,
    pub steps_per_s: f64,
    /// `None` above the largest degree with a power-basis form.
    pub mults: Option<u64>,
}

/// Times deterministic Mountain Car rollouts of a random degree-`d` policy.
pub fn bench_degree(d: usize, steps: u64) -> crate::Result<BenchRow> {
    let params = McParams::default();
    let mut r = rng::seeded(d as u64, rng::stream::INIT);
    let n = (d + 1) * (d + 1);
    let coeffs: Vec<f64> = (0..n).map(|_| r.gen_range(-1e-3..1e-3)).collect();
    let model = ChebyModel::new(d, params.bounds(), coeffs)?;
    let mults = if d <= MAX_HORNER_DEGREE {
        Some(model.eval_horner(&[-0.5, 0.0])?.1.mults)
    } else {
        None
    };
    let started = Instant::now();
    let mut done = 0u64;
    let mut k = 0usize;
    while done < steps.max(1) {
        let x0 = -0.6 + 0.2 * ((k % 11) as f64 / 10.0);
        let traj = crate::env::try_rollout_from(
            |s: &McState| model.eval(&[s.x, s.v]),
            McState::at_rest(x0),
            &params,
        )?;
        done += traj.steps() as u64;
        k += 1;
    }
    let secs = started.elapsed().as_secs_f64().max(1e-9);
    Ok(BenchRow {
        degree: d,
        steps_per_s: done as f64 / secs,
        mults,
    })
}

fn cmd_bench(a: &BenchArgs, sink: &mut Sink) -> CliResult<Done> {
    let range = parse_degree_sweep(&a.degree_sweep)?;
    let config = json!({ "command": "bench", "degree_sweep": a.degree_sweep, "steps": a.steps });
    let rows = range
        .map(|d| bench_degree(d, a.steps))
        .collect::<crate::Result<Vec<_>>>()?;
    sink.write("bench.csv", |w| {
        writeln!(w, "degree,steps_per_s,mults")?;
        for r in &rows {
            let m = r.mults.map_or(String::new(), |m| m.to_string());
            writeln!(w, "{},{},{m}", r.degree, r.steps_per_s)?;
        }
        Ok(())
    })?;
    let pretty = rows
        .iter()
        .map(|r| {
            format!(
                "d={:<3} {:>12.0} steps/s  mults {}",
                r.degree,
                r.steps_per_s,
                r.mults.map_or("-".to_string(), |m| m.to_string())
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok((to_value(&rows)?, pretty, config, None))
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    let pretty = cli.pretty;
    match run(cli, std::env::args().skip(1).collect()) {
        Ok(o) => {
            if pretty {
                println!("{}", o.pretty);
            } else {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&o.summary).unwrap_or_default()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
