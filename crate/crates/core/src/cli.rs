//! `lel` command-line frontend.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::balance::{balance_report, check_gns, check_kms, fig1_sweep};
use crate::divergence::relative_entropy;
use crate::error::{LelError, Result};
use crate::flow::{
    comparison_check, comparison_constants, divergence_trace, gradient_flow_residual, integrate_with,
    k_lower, lsi_constants, suggest_dt, theorem_constants, IntegrateOptions, LsiBudget,
};
use crate::generator::{check_primitive, spectral_gap, GnsGenerator};
use crate::io::{load_generator, load_state, write_atomic, LoadedGenerator};
use crate::matcore::DensityMatrix;
use crate::random::{random_density, random_state_near, seeded};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "lel", version, about = "Detailed balance, Rényi gradient flows and decay constants for Lindblad generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Validate,
    Dbcheck,
    Fig1,
    Simulate,
    Gradflow,
    Constants,
    Compare,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the generator's structure and report GNS and primitivity verdicts
    Validate(Flags),
    /// Detailed-balance report (GNS, KMS, BKM, SRD over --alphas) as JSON
    Dbcheck(Flags),
    /// SRD residual sweep as CSV `alpha,residual`
    Fig1(Flags),
    /// Integrate the flow and emit CSV `t,alpha,D,I`
    Simulate(Flags),
    /// Gradient-flow residuals over random states as CSV
    Gradflow(Flags),
    /// Log-Sobolev, comparison and theorem constants as JSON
    Constants(Flags),
    /// Check the comparison inequality along the flow
    Compare(Flags),
}

// Every flag can also come from the `--config` JSON file (same names, `-` → `_`).
#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    /// JSON file or builtin:carlen-maas | builtin:qubit-xz | builtin:depolarizing?gamma=..&sigma=p1,p2,..
    #[arg(long)]
    pub generator: Option<String>,
    /// random | sigma | near | path to a CSV block or JSON rows
    #[arg(long)]
    pub rho0: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma list or start:stop:step
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Keep every k-th integration step.
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    /// Random states for gradflow.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Multi-start count for constants.
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with any of these flags (`-` → `_`); command-line values win
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Flags {
    /// Command-line values win over the config file.
    fn merged(self) -> Result<Flags> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)?;
        let file: Flags = serde_json::from_str(&text)?;
        Ok(Flags {
            generator: self.generator.or(file.generator),
            rho0: self.rho0.or(file.rho0),
            seed: self.seed.or(file.seed),
            alphas: self.alphas.or(file.alphas),
            t_end: self.t_end.or(file.t_end),
            dt: self.dt.or(file.dt),
            record_every: self.record_every.or(file.record_every),
            eps: self.eps.or(file.eps),
            alpha0: self.alpha0.or(file.alpha0),
            alpha1: self.alpha1.or(file.alpha1),
            samples: self.samples.or(file.samples),
            starts: self.starts.or(file.starts),
            iterations: self.iterations.or(file.iterations),
            out: self.out.or(file.out),
            config: self.config,
        })
    }
}

/// A fully resolved invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub flags: Flags,
}

/// `a,b,c` or `start:stop:step` (inclusive, with a half-step guard).
pub fn parse_alphas(s: &str) -> Result<Vec<f64>> {
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| LelError::Parse(format!("'{x}' is not a number")))
    };
    let v: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(LelError::Parse(format!("range '{s}' must be start:stop:step")));
        }
        let (a, b, h) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(h > 0.0) || b < a {
            return Err(LelError::Parse(format!("range '{s}' needs step > 0 and stop ≥ start")));
        }
        let m = ((b - a) / h + 0.5).floor() as usize;
        (0..=m).map(|k| a + k as f64 * h).collect()
    } else {
        s.split(',').map(parse).collect::<Result<_>>()?
    };
    if let Some(bad) = v.iter().find(|a| !(**a > 0.0)) {
        return Err(LelError::Parse(format!("alpha values must be positive, got {bad}")));
    }
    Ok(v)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn exit_code(e: &LelError) -> i32 {
    match e {
        _ if e.is_validation() => EXIT_VALIDATION,
        LelError::Numerical(_) | LelError::Singular { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn failure_json(e: &LelError) -> serde_json::Value {
    match e {
        LelError::Validation { condition, index, detail } => json!({
            "status": "fail",
            "failures": [{ "condition": condition, "index": index, "detail": detail }],
        }),
        other => json!({
            "status": "fail",
            "failures": [{ "condition": "structure", "index": null, "detail": other.to_string() }],
        }),
    }
}

struct Output {
    text: String,
    code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: EXIT_OK }
    }
}

fn emit(flags: &Flags, out: &Output) -> Result<()> {
    match &flags.out {
        Some(p) => write_atomic(p, out.text.as_bytes()),
        None => {
            print!("{}", out.text);
            Ok(())
        }
    }
}

fn generator(flags: &Flags) -> Result<LoadedGenerator> {
    let spec = flags
        .generator
        .as_deref()
        .ok_or_else(|| LelError::Parse("--generator is required".into()))?;
    load_generator(spec)
}

fn alphas(flags: &Flags, default: &str) -> Result<Vec<f64>> {
    parse_alphas(flags.alphas.as_deref().unwrap_or(default))
}

fn default_eps(g: &GnsGenerator) -> f64 {
    g.stationary().min_eig().powi(2) / 8.0
}

/// A state with D(ρ‖σ) ≤ ε, drawn along a random direction from σ.
fn near_state(g: &GnsGenerator, eps: f64, seed: u64) -> Result<DensityMatrix> {
    let sigma = g.stationary();
    let mut t = 0.5;
    for _ in 0..60 {
        let rho = random_state_near(sigma, t, &mut seeded(seed));
        if relative_entropy(&rho, sigma)? <= eps {
            return Ok(rho);
        }
        t /= 2.0;
    }
    Err(LelError::Numerical("could not draw a state within ε of σ".into()))
}

fn initial_state(flags: &Flags, g: &GnsGenerator, default: &str) -> Result<DensityMatrix> {
    let seed = flags.seed.unwrap_or(0);
    match flags.rho0.as_deref().unwrap_or(default) {
        "random" => Ok(random_density(g.dim(), &mut seeded(seed))),
        "sigma" => Ok(g.stationary().clone()),
        "near" => near_state(g, flags.eps.unwrap_or_else(|| default_eps(g)), seed),
        path => {
            let rho = load_state(Path::new(path))?;
            if rho.dim() != g.dim() {
                return Err(LelError::Structural(format!(
                    "state has dimension {} but the generator has {}",
                    rho.dim(),
                    g.dim()
                )));
            }
            Ok(rho)
        }
    }
}

fn cmd_validate(flags: &Flags) -> Result<Output> {
    let loaded = match generator(flags) {
        Ok(g) => g,
        Err(e) if e.is_validation() => {
            let mut text = String::from("GNS: fail\n");
            text += &serde_json::to_string_pretty(&failure_json(&e))?;
            text.push('\n');
            return Ok(Output { text, code: EXIT_VALIDATION });
        }
        Err(e) => return Err(e),
    };
    let g = loaded.as_dyn();
    let prim = check_primitive(g);
    let mut text = String::new();
    let mut failures = Vec::new();
    match &loaded {
        LoadedGenerator::Gns(gg) => {
            let _ = writeln!(text, "label: {}", g.label());
            let _ = writeln!(text, "GNS: pass");
            let _ = writeln!(text, "spectral gap: {}", fmt(spectral_gap(gg)?.gap));
        }
        LoadedGenerator::Raw(_) => {
            let r = check_gns(g)?;
            let _ = writeln!(text, "label: {}", g.label());
            let _ = writeln!(text, "GNS: fail (residual {})", fmt(r));
            failures.push(json!({ "condition": "GNS detailed balance", "index": null, "detail": format!("residual {r:e}") }));
            let _ = writeln!(text, "KMS residual: {}", fmt(check_kms(g)?));
        }
    }
    let _ = writeln!(text, "primitive: {}", if prim.primitive { "pass" } else { "fail" });
    if !prim.primitive {
        failures.push(json!({ "condition": "primitivity", "index": null, "detail": format!("kernel dimension {}", prim.kernel_dim) }));
    }
    if failures.is_empty() {
        Ok(Output::ok(text))
    } else {
        text += &serde_json::to_string_pretty(&json!({ "status": "fail", "failures": failures }))?;
        text.push('\n');
        Ok(Output { text, code: EXIT_VALIDATION })
    }
}

fn cmd_dbcheck(flags: &Flags) -> Result<Output> {
    let g = generator(flags)?;
    let a = alphas(flags, "0.25:6:0.25")?;
    let report = balance_report(g.as_dyn(), &a)?;
    Ok(Output::ok(serde_json::to_string_pretty(&report)? + "\n"))
}

fn cmd_fig1(flags: &Flags) -> Result<Output> {
    let g = generator(flags)?;
    let a = alphas(flags, "0.25:6:0.25")?;
    let mut text = String::from("alpha,residual\n");
    for (alpha, r) in fig1_sweep(g.as_dyn(), &a)? {
        let _ = writeln!(text, "{},{}", fmt(alpha), fmt(r));
    }
    Ok(Output::ok(text))
}

fn cmd_simulate(flags: &Flags) -> Result<Output> {
    let loaded = generator(flags)?;
    let g = loaded.require_gns()?;
    let a = alphas(flags, "1,2")?;
    let rho0 = initial_state(flags, g, "random")?;
    let t_end = flags.t_end.unwrap_or(10.0);
    let dt = match flags.dt {
        Some(dt) => dt,
        None => suggest_dt(g, 0.01),
    };
    let traj = integrate_with(
        g,
        &rho0,
        IntegrateOptions {
            t_end,
            dt,
            record_every: flags.record_every.unwrap_or(1),
        },
    )?;
    let trace = divergence_trace(&traj, g, &a)?;
    let mut text = String::from("t,alpha,D,I\n");
    for r in &trace.rows {
        let _ = writeln!(text, "{},{},{},{}", fmt(r.t), fmt(r.alpha), fmt(r.d), fmt(r.i));
    }
    Ok(Output::ok(text))
}

fn cmd_gradflow(flags: &Flags) -> Result<Output> {
    let loaded = generator(flags)?;
    let g = loaded.require_gns()?;
    let a = alphas(flags, "0.5,1,1.5,2,3")?;
    let samples = flags.samples.unwrap_or(20);
    let mut rng = seeded(flags.seed.unwrap_or(0));
    let states: Vec<DensityMatrix> = (0..samples).map(|_| random_density(g.dim(), &mut rng)).collect();
    let mut text = String::from("sample,alpha,residual\n");
    for (k, rho) in states.iter().enumerate() {
        for &alpha in &a {
            let _ = writeln!(text, "{k},{},{}", fmt(alpha), fmt(gradient_flow_residual(g, rho, alpha)?));
        }
    }
    Ok(Output::ok(text))
}

fn cmd_constants(flags: &Flags) -> Result<Output> {
    let loaded = generator(flags)?;
    let g = loaded.require_gns()?;
    let mut budget = LsiBudget::default();
    if let Some(s) = flags.starts {
        budget.starts = s;
    }
    if let Some(i) = flags.iterations {
        budget.iterations = i;
    }
    budget.seed = flags.seed.unwrap_or(budget.seed);
    let mut report = lsi_constants(g, budget)?;
    let eps = flags.eps.unwrap_or_else(|| default_eps(g));
    let sigma = g.stationary();
    let k = k_lower(report.lambda_l, report.lambda_min);
    report.comparison = Some(comparison_constants(
        flags.alpha0.unwrap_or(2.0),
        flags.alpha1.unwrap_or(4.0),
        eps,
        sigma,
        &g.omegas(),
        k,
    )?);
    if flags.rho0.is_some() {
        let rho0 = initial_state(flags, g, "near")?;
        report.theorem = Some(theorem_constants(
            flags.alpha1.unwrap_or(4.0),
            eps,
            &rho0,
            sigma,
            &g.omegas(),
            k,
            report.lambda_l,
        )?);
    }
    Ok(Output::ok(serde_json::to_string_pretty(&report)? + "\n"))
}

fn cmd_compare(flags: &Flags) -> Result<Output> {
    let loaded = generator(flags)?;
    let g = loaded.require_gns()?;
    let eps = flags.eps.unwrap_or_else(|| default_eps(g));
    let rho0 = initial_state(flags, g, "near")?;
    let lam = spectral_gap(g)?.gap;
    let k = k_lower(lam, g.stationary().min_eig());
    let c = comparison_check(g, &rho0, flags.alpha0.unwrap_or(2.0), flags.alpha1.unwrap_or(4.0), eps, k)?;
    let code = if c.pass { EXIT_OK } else { EXIT_VALIDATION };
    Ok(Output {
        text: serde_json::to_string_pretty(&c)? + "\n",
        code,
    })
}

fn configure_threads() {
    if let Some(n) = std::env::var("LEL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(command: CommandKind, flags: &Flags) -> Result<Output> {
    match command {
        CommandKind::Validate => cmd_validate(flags),
        CommandKind::Dbcheck => cmd_dbcheck(flags),
        CommandKind::Fig1 => cmd_fig1(flags),
        CommandKind::Simulate => cmd_simulate(flags),
        CommandKind::Gradflow => cmd_gradflow(flags),
        CommandKind::Constants => cmd_constants(flags),
        CommandKind::Compare => cmd_compare(flags),
    }
}

fn check_config(flags: &Flags) -> Result<()> {
    if let Some(dt) = flags.dt {
        if !(dt > 0.0) {
            return Err(LelError::Parse(format!("--dt must be positive, got {dt}")));
        }
    }
    if let Some(t) = flags.t_end {
        if !(t >= 0.0) {
            return Err(LelError::Parse(format!("--t-end must be non-negative, got {t}")));
        }
    }
    if let Some(a) = &flags.alphas {
        parse_alphas(a)?;
    }
    Ok(())
}

/// Runs one command and returns the process exit status.
pub fn run_command(command: CommandKind, flags: Flags) -> i32 {
    let result = flags.merged().and_then(|flags| {
        check_config(&flags)?;
        let out = dispatch(command, &flags)?;
        emit(&flags, &out)?;
        Ok(out.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            if code == EXIT_VALIDATION {
                eprintln!("{}", failure_json(&e));
            }
            code
        }
    }
}

pub fn run(config: RunConfig) -> i32 {
    let kind: CommandKind = match serde_json::from_value(json!(config.command)) {
        Ok(k) => k,
        Err(_) => {
            eprintln!("error: unknown command '{}'", config.command);
            eprintln!("{}", <Cli as clap::CommandFactory>::command().render_usage());
            return EXIT_USAGE;
        }
    };
    run_command(kind, config.flags)
}

/// Parses `args` (including the program name) and runs.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    let (kind, flags) = match cli.command {
        Command::Validate(f) => (CommandKind::Validate, f),
        Command::Dbcheck(f) => (CommandKind::Dbcheck, f),
        Command::Fig1(f) => (CommandKind::Fig1, f),
        Command::Simulate(f) => (CommandKind::Simulate, f),
        Command::Gradflow(f) => (CommandKind::Gradflow, f),
        Command::Constants(f) => (CommandKind::Constants, f),
        Command::Compare(f) => (CommandKind::Compare, f),
    };
    run_command(kind, flags)
}
