//! The `fado` command line: optimize, check, oracle, verify-optimal and gen.

pub mod check;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fado::floorplan::{balanced_initial, min_cut_initial};
use fado::instancegen::{gen_instance, GenSpec, Monotonicity};
use fado::model::{Configuration, Instance};
use fado::oracle::{self, OracleStatus, VerdictKind, VerifyOptions};
use fado::packer::PackState;
use fado::search::{run, Initial, LevelBound, SearchOptions};
use fado::Problem;
use serde_json::json;

use report::{Flags, InputPaths, ResultFile, RunManifest};

/// Process exit codes. Stable across releases.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const BUDGET: i32 = 3;
    /// `verify-optimal` found a faster legal configuration.
    pub const COUNTEREXAMPLE: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(
    name = "fado",
    version,
    about = "Directive and floorplan co-optimization for multi-die FPGAs"
)]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boot a floorplan and run the co-optimization loop.
    Optimize(OptimizeArgs),
    /// Replay legality and routing checks on a result.json.
    Check(CheckArgs),
    /// Exact optimum of a small instance.
    Oracle(OracleArgs),
    /// Check that no faster configuration than a result has a legal floorplan.
    VerifyOptimal(VerifyArgs),
    /// Generate a synthetic instance.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Directory holding design.json, qor.json and device.json.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[arg(long)]
    pub design: Option<PathBuf>,
    #[arg(long)]
    pub qor: Option<PathBuf>,
    #[arg(long)]
    pub device: Option<PathBuf>,
}

impl InputArgs {
    fn path(&self, explicit: &Option<PathBuf>, file: &str) -> Option<PathBuf> {
        explicit
            .clone()
            .or_else(|| self.dir.as_ref().map(|d| d.join(file)))
    }

    fn is_empty(&self) -> bool {
        self.dir.is_none() && self.design.is_none() && self.qor.is_none() && self.device.is_none()
    }

    fn resolve(&self) -> Result<(PathBuf, PathBuf, PathBuf), Failure> {
        let need = |p: Option<PathBuf>, what: &str| {
            p.ok_or_else(|| Failure::usage(format!("missing --{what} (or --dir)")))
        };
        Ok((
            need(self.path(&self.design, "design.json"), "design")?,
            need(self.path(&self.qor, "qor.json"), "qor")?,
            need(self.path(&self.device, "device.json"), "device")?,
        ))
    }

    fn load(&self) -> Result<(Instance, InputPaths), Failure> {
        let (design, qor, device) = self.resolve()?;
        let inst = Instance::load(&device, &design, &qor)?;
        let paths = InputPaths {
            design: Some(design.display().to_string()),
            qor: Some(qor.display().to_string()),
            device: Some(device.display().to_string()),
        };
        Ok((inst, paths))
    }
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    /// Override the device's utilization limit.
    #[arg(long)]
    pub util_limit: Option<f64>,
    /// Override the SLL budget fraction of each die-boundary half.
    #[arg(long)]
    pub sll_limit: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitialArg {
    Mincut,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    Min,
    Max,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Output directory for all artifacts.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "mincut")]
    pub initial: InitialArg,
    /// Fixed look-ahead step count instead of the loop-derived one.
    #[arg(long)]
    pub lookahead: Option<usize>,
    /// Summation limit used when deriving the look-ahead step count.
    #[arg(long, value_enum, default_value = "min")]
    pub level_bound: BoundArg,
    #[arg(long)]
    pub iter_cap: Option<usize>,
    /// Keep the booting floorplan; only in-place directive changes are accepted.
    #[arg(long)]
    pub frozen_floorplan: bool,
    /// Also write directives.tcl.
    #[arg(long)]
    pub tcl_stub: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    pub result: PathBuf,
    /// Check against these inputs instead of the copy embedded in the result.
    #[command(flatten)]
    pub inputs: InputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Search node budget.
    #[arg(long, default_value_t = 50_000_000)]
    pub budget: u64,
    /// Write the optimal witness as result.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    pub result: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub sample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Node budget per floorplan search.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    /// Write a counterexample as result.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Monotone,
    NonMonotone,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// toy, mixed or small.
    #[arg(long)]
    pub preset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the preset's monotonicity mode.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub out: PathBuf,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: exit::USAGE,
            error: anyhow!(msg.into()),
        }
    }
}

impl From<fado::Error> for Failure {
    fn from(e: fado::Error) -> Self {
        let code = match e {
            fado::Error::Infeasible(_) | fado::Error::Unroutable { .. } => exit::INFEASIBLE,
            _ => exit::USAGE,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure {
            code: exit::USAGE,
            error,
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name), runs the command and returns the
/// exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    let out = match &cli.command {
        Command::Optimize(a) => cmd_optimize(a),
        Command::Check(a) => cmd_check(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::VerifyOptimal(a) => cmd_verify_optimal(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match out {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn apply_limits(inst: &mut Instance, limits: &LimitArgs) -> Result<(), Failure> {
    for (name, v) in [
        ("util-limit", limits.util_limit),
        ("sll-limit", limits.sll_limit),
    ] {
        if let Some(v) = v {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Failure::usage(format!("--{name} {v} outside (0, 1]")));
            }
        }
    }
    if let Some(v) = limits.util_limit {
        inst.device.util_limit = v;
    }
    if let Some(v) = limits.sll_limit {
        inst.device.sll_limit = v;
    }
    Ok(())
}

fn create_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::from)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

pub fn cmd_optimize(a: &OptimizeArgs) -> CmdResult {
    let (mut inst, paths) = a.inputs.load()?;
    apply_limits(&mut inst, &a.limits)?;
    let initial = match a.initial {
        InitialArg::Mincut => Initial::Mincut,
        InitialArg::Balanced => Initial::Balanced,
    };
    let level_bound = match a.level_bound {
        BoundArg::Min => LevelBound::Min,
        BoundArg::Max => LevelBound::Max,
    };
    let flags = Flags {
        util_limit: a.limits.util_limit,
        sll_limit: a.limits.sll_limit,
        lookahead: a.lookahead,
        iteration_cap: a.iter_cap,
        seed: None,
        initial: Some(initial),
        level_bound: Some(level_bound),
        frozen_floorplan: a.frozen_floorplan,
    };
    let mut manifest = RunManifest::new("optimize", paths, flags);
    let clock = Instant::now();
    let problem = Problem::new(inst);

    let config = Configuration::baseline(&problem.instance.qor);
    let (fp, cut) = match initial {
        Initial::Mincut => {
            let (fp, cut) = min_cut_initial(&problem, &config)?;
            (fp, Some(cut))
        }
        Initial::Balanced => (balanced_initial(&problem, &config)?, None),
    };
    let pack = PackState::new(&problem, fp, config)
        .map_err(|e| fado::Error::Infeasible(format!("booting floorplan: {e}")))?;
    let options = SearchOptions {
        lookahead: a.lookahead,
        level_bound,
        iteration_cap: a.iter_cap,
        frozen_floorplan: a.frozen_floorplan,
    };
    let st = run(&problem, pack, &options)?;
    let elapsed = clock.elapsed().as_secs_f64();
    manifest.finish(elapsed);

    create_out(&a.out)?;
    let result = ResultFile::new(&problem, &st.pack, manifest).with_search(&st);
    result.write(&a.out.join("result.json"))?;
    report::write_trace(&a.out.join("trace.csv"), &st.log)?;
    report::write_moves(&a.out.join("moves.csv"), &st.log)?;
    report::write_floorplan(
        &a.out.join("floorplan.json"),
        &problem,
        &result,
        cut.as_ref(),
    )?;
    fs::write(
        a.out.join("directives.txt"),
        report::directives_text(&problem, &st.pack.config),
    )
    .context("writing directives.txt")?;
    if a.tcl_stub {
        fs::write(
            a.out.join("directives.tcl"),
            report::tcl_stub(&problem, &st.pack.config),
        )
        .context("writing directives.tcl")?;
    }

    println!(
        "design latency    {} (baseline {})",
        result.design_latency, result.baseline_latency
    );
    println!("max utilization   {:.3}", result.max_utilization);
    println!("max SLL use       {:.3}", result.max_sll_utilization);
    println!(
        "iterations        {}{}",
        result.iterations,
        if st.cap_reached { " (cap reached)" } else { "" }
    );
    println!("wall time         {elapsed:.3} s");
    Ok(exit::OK)
}

pub fn cmd_check(a: &CheckArgs) -> CmdResult {
    let result = ResultFile::load(&a.result)?;
    let inst = if a.inputs.is_empty() {
        result.instance.to_instance()?
    } else {
        let (mut inst, _) = a.inputs.load()?;
        let flags = &result.manifest.flags;
        apply_limits(
            &mut inst,
            &LimitArgs {
                util_limit: flags.util_limit,
                sll_limit: flags.sll_limit,
            },
        )?;
        inst
    };
    let problem = Problem::new(inst);
    let report = check::check_result(&problem, &result)?;
    if report.passed() {
        println!("PASS: legal, SLL table conserved, routing matches a full recompute");
        Ok(exit::OK)
    } else {
        for f in &report.findings {
            println!("{f}");
        }
        println!("FAIL: {} violation(s)", report.findings.len());
        Ok(exit::INFEASIBLE)
    }
}

pub fn cmd_oracle(a: &OracleArgs) -> CmdResult {
    let (mut inst, paths) = a.inputs.load()?;
    apply_limits(&mut inst, &a.limits)?;
    let flags = Flags {
        util_limit: a.limits.util_limit,
        sll_limit: a.limits.sll_limit,
        ..Flags::default()
    };
    let mut manifest = RunManifest::new("oracle", paths, flags);
    let clock = Instant::now();
    let problem = Problem::new(inst);
    let res = oracle::solve(&problem, a.budget)?;
    manifest.finish(clock.elapsed().as_secs_f64());
    let design = &problem.instance.design;
    let qor = &problem.instance.qor;
    let witness = res.witness.as_ref().map(|w| {
        json!({
            "configuration": w.config.to_named(design, qor),
            "assignment": (0..design.num_functions())
                .map(|f| (design.function_name(f).to_string(), w.floorplan.slot_of(f)))
                .collect::<std::collections::BTreeMap<_, _>>(),
        })
    });
    print_json(&json!({
        "status": res.status,
        "latency": res.latency,
        "nodes": res.nodes,
        "witness": witness,
    }));
    if let (Some(out), Some(w)) = (&a.out, res.witness) {
        create_out(out)?;
        ResultFile::new(&problem, &w.into_state(), manifest).write(&out.join("result.json"))?;
    }
    Ok(match res.status {
        OracleStatus::Optimal => exit::OK,
        OracleStatus::Infeasible => exit::INFEASIBLE,
        OracleStatus::BudgetExceeded => exit::BUDGET,
    })
}

pub fn cmd_verify_optimal(a: &VerifyArgs) -> CmdResult {
    let result = ResultFile::load(&a.result)?;
    let problem = Problem::new(result.instance.to_instance()?);
    let state = result.state(&problem)?;
    let opts = VerifyOptions {
        sample: a.sample,
        seed: a.seed,
        budget: a.budget,
    };
    let clock = Instant::now();
    let v = oracle::verify_optimal(&problem, &state.config, &opts)?;
    let design = &problem.instance.design;
    let qor = &problem.instance.qor;
    print_json(&json!({
        "verdict": v.verdict,
        "latency": v.latency,
        "better_configs": v.better_configs,
        "checked": v.checked,
        "coverage": v.coverage,
        "counterexample": v.counterexample.as_ref().map(|(lat, w)| json!({
            "latency": lat,
            "configuration": w.config.to_named(design, qor),
        })),
    }));
    if let (Some(out), Some((_, w))) = (&a.out, v.counterexample) {
        let flags = Flags {
            seed: Some(a.seed),
            ..result.manifest.flags.clone()
        };
        let mut manifest =
            RunManifest::new("verify-optimal", result.manifest.inputs.clone(), flags);
        manifest.finish(clock.elapsed().as_secs_f64());
        create_out(out)?;
        ResultFile::new(&problem, &w.into_state(), manifest).write(&out.join("result.json"))?;
    }
    Ok(match v.verdict {
        VerdictKind::Optimal => exit::OK,
        VerdictKind::Counterexample => exit::COUNTEREXAMPLE,
        VerdictKind::Inconclusive => exit::BUDGET,
    })
}

pub fn cmd_gen(a: &GenArgs) -> CmdResult {
    let mut spec = GenSpec::preset(&a.preset, a.seed)?;
    if let Some(m) = a.mode {
        spec.mode = match m {
            ModeArg::Monotone => Monotonicity::Monotone,
            ModeArg::NonMonotone => Monotonicity::NonMonotone,
        };
    }
    let g = gen_instance(&spec)?;
    g.write_to(&a.out)?;
    println!(
        "wrote {} functions to {}",
        g.design
            .kernels
            .iter()
            .map(|k| k.functions.len())
            .sum::<usize>(),
        a.out.display()
    );
    Ok(exit::OK)
}
