//! Command-line front end: capacity bounds, minimal sequences, objective
//! evaluation, phi0 curves, and finite-size simulation.
//!
//! Configuration comes from a flat-key JSON file (`--config`) mirroring the
//! CLI flags; explicit CLI flags override file values. Exit codes: 0 on
//! success, 2 on configuration errors, 3 on numerical failures.

use clap::{Args, Parser, Subcommand, ValueEnum};
use relu_inject::mc_lab::{phase_sweep, AnnealSchedule, SweepRow};
use relu_inject::rdt_kernels::GammaSphForm;
use relu_inject::rdt_objective::{
    phi0_lifted_with, phi0_plain, InjectivityMode, Method, NetworkProfile, ObjectiveBreakdown,
    SaddleVariables,
};
use relu_inject::saddle_solver::{
    capacity_root, minimal_sequence, saddle_solve, CapacityResult, SolverConfig,
};
use relu_inject::special_math::QuadratureGrid;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "relu-inject",
    about = "Injectivity capacity bounds for deep ReLU networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the capacity bound alpha_l for a given admissible prefix
    Capacity(CapacityArgs),
    /// Build the minimally admissible sequence layer by layer
    Sequence(SequenceArgs),
    /// Evaluate the objective breakdown at user-supplied saddle variables
    Evaluate(EvaluateArgs),
    /// Tabulate the saddle value phi0 against a grid of last-layer alphas
    Sweep(SweepArgs),
    /// Finite-size Monte Carlo feasibility-witness frequencies
    Simulate(SimulateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OutFormat {
    Json,
    Csv,
    #[value(name = "pretty", alias = "pretty-table")]
    #[serde(rename = "pretty", alias = "pretty-table")]
    Pretty,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// JSON config file with flat keys mirroring the CLI flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (stdout when omitted)
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    /// Residual tolerance on |phi0| at a capacity root
    #[arg(long, global = true)]
    objective_tol: Option<f64>,
    /// Per-block stationarity tolerance
    #[arg(long, global = true)]
    var_tol: Option<f64>,
    /// Objective-evaluation budget per outer optimizer run
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Jittered restarts for cold saddle solves
    #[arg(long, global = true)]
    multistarts: Option<usize>,
    /// Seed for solver multistart jitter
    #[arg(long, global = true)]
    rng_seed: Option<u64>,
    /// Initial capacity bracket factor
    #[arg(long, global = true)]
    alpha_bracket_factor: Option<f64>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of layers l (inferred from the prefix when omitted)
    #[arg(long)]
    layers: Option<usize>,
    /// First-layer expansion coefficient (the supplied constant)
    #[arg(long)]
    alpha1: Option<f64>,
    /// Full admissible prefix alpha_1..alpha_{l-1}, comma separated
    #[arg(long, value_delimiter = ',')]
    prefix: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Args)]
struct SequenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    max_layers: Option<usize>,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// JSON file holding a previously emitted capacity result (round trip)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Full expansion profile alpha_1..alpha_l
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Radii r_1..r_{l-1}
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// Square-root-trick auxiliaries gamma_bar_1..gamma_bar_l
    #[arg(long, value_delimiter = ',')]
    gamma_bar: Option<Vec<f64>>,
    /// Norm-constraint multipliers gamma_1..gamma_{l-1}
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    /// Threshold multiplier nu
    #[arg(long)]
    nu: Option<f64>,
    /// Lifting temperature (lifted method only)
    #[arg(long)]
    c3: Option<f64>,
    /// Spherical-term form for the lifted constant: the stationary
    /// sqrt(c3^2+4) root or the printed sqrt(c3+4) variant
    #[arg(long, value_enum)]
    compat_gamma_sph: Option<GammaSphArg>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Admissible prefix alpha_1..alpha_{l-1}, comma separated
    #[arg(long, value_delimiter = ',')]
    prefix: Option<Vec<f64>>,
    /// Last-layer alpha grid, comma separated
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input dimension n = m_0
    #[arg(long)]
    n: Option<usize>,
    /// Admissible prefix alpha_1..alpha_{l-1}, comma separated
    #[arg(long, value_delimiter = ',')]
    prefix: Option<Vec<f64>>,
    /// Last-layer alpha grid, comma separated
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Independent instances per grid point
    #[arg(long)]
    trials: Option<usize>,
    /// Minimizer restarts per instance
    #[arg(long)]
    restarts: Option<usize>,
    /// Master seed for instance sampling and minimization
    #[arg(long)]
    seed: Option<u64>,
    /// Annealing stages
    #[arg(long)]
    stages: Option<usize>,
    /// Projected-gradient steps per stage
    #[arg(long)]
    steps_per_stage: Option<usize>,
    #[arg(long)]
    eps_start: Option<f64>,
    #[arg(long)]
    eps_end: Option<f64>,
    #[arg(long)]
    init_step: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Weak,
    Strong,
}

impl From<ModeArg> for InjectivityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Weak => InjectivityMode::Weak,
            ModeArg::Strong => InjectivityMode::Strong,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Plain,
    Lifted,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Plain => Method::Plain,
            MethodArg::Lifted => Method::Lifted,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum GammaSphArg {
    Stationary,
    Printed,
}

impl From<GammaSphArg> for GammaSphForm {
    fn from(g: GammaSphArg) -> Self {
        match g {
            GammaSphArg::Stationary => GammaSphForm::Stationary,
            GammaSphArg::Printed => GammaSphForm::Printed,
        }
    }
}

/// Flat-key JSON config mirroring the CLI flags. Unknown keys are rejected
/// with a named error.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<String>,
    layers: Option<usize>,
    alpha1: Option<f64>,
    prefix: Option<Vec<f64>>,
    alphas: Option<Vec<f64>>,
    mode: Option<ModeArg>,
    method: Option<MethodArg>,
    objective_tol: Option<f64>,
    var_tol: Option<f64>,
    max_iters: Option<usize>,
    multistarts: Option<usize>,
    rng_seed: Option<u64>,
    alpha_bracket_factor: Option<f64>,
    max_layers: Option<usize>,
    input: Option<PathBuf>,
    r: Option<Vec<f64>>,
    gamma_bar: Option<Vec<f64>>,
    gamma: Option<Vec<f64>>,
    nu: Option<f64>,
    c3: Option<f64>,
    compat_gamma_sph: Option<GammaSphArg>,
    alpha_grid: Option<Vec<f64>>,
    n: Option<usize>,
    trials: Option<usize>,
    restarts: Option<usize>,
    seed: Option<u64>,
    stages: Option<usize>,
    steps_per_stage: Option<usize>,
    eps_start: Option<f64>,
    eps_end: Option<f64>,
    init_step: Option<f64>,
    output: Option<PathBuf>,
    format: Option<OutFormat>,
}

enum CliError {
    /// Exit code 2
    Config(String),
    /// Exit code 3
    Numerical(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => m,
        }
    }
}

fn classify(e: relu_inject::Error) -> CliError {
    use relu_inject::Error as E;
    match e {
        E::NoSignChange { .. } | E::NonConvergence { .. } => CliError::Numerical(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn load_file_config(path: Option<&PathBuf>, command: &str) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: FileConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
    if let Some(cmd) = &cfg.command {
        if cmd != command {
            return Err(CliError::Config(format!(
                "config file names command \"{cmd}\" but \"{command}\" was invoked"
            )));
        }
    }
    Ok(cfg)
}

fn pick<T>(cli: Option<T>, file: Option<T>) -> Option<T> {
    cli.or(file)
}

fn solver_config(common: &CommonArgs, file: &FileConfig) -> SolverConfig {
    let d = SolverConfig::default();
    SolverConfig {
        objective_tol: pick(common.objective_tol, file.objective_tol).unwrap_or(d.objective_tol),
        var_tol: pick(common.var_tol, file.var_tol).unwrap_or(d.var_tol),
        max_iters: pick(common.max_iters, file.max_iters).unwrap_or(d.max_iters),
        multistarts: pick(common.multistarts, file.multistarts).unwrap_or(d.multistarts),
        rng_seed: pick(common.rng_seed, file.rng_seed).unwrap_or(d.rng_seed),
        alpha_bracket_factor: pick(common.alpha_bracket_factor, file.alpha_bracket_factor)
            .unwrap_or(d.alpha_bracket_factor),
    }
}

fn output_target(common: &CommonArgs, file: &FileConfig) -> (Option<PathBuf>, OutFormat) {
    let path = pick(common.output.clone(), file.output.clone());
    let format = pick(common.format, file.format).unwrap_or(OutFormat::Pretty);
    (path, format)
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        None => {
            print!("{text}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::Config(format!("cannot write output: {e}")))
        }
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
    }
}

/// Formats a float with at least 6 significant digits.
fn fnum(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e7) {
        format!("{v:.9e}")
    } else {
        format!("{v:.9}")
    }
}

fn resolve_prefix(
    layers: Option<usize>,
    alpha1: Option<f64>,
    prefix: Option<Vec<f64>>,
) -> Result<Vec<f64>, CliError> {
    let prefix = match (prefix, alpha1) {
        (Some(p), _) if !p.is_empty() => p,
        (_, Some(a1)) => vec![a1],
        (Some(_), None) => {
            return Err(CliError::Config(
                "missing required field --alpha1 (or a nonempty --prefix)".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "missing required field --alpha1 (or --prefix)".into(),
            ))
        }
    };
    if let Some(l) = layers {
        if l != prefix.len() + 1 {
            return Err(CliError::Config(format!(
                "--layers {l} is inconsistent with a prefix of length {} (expected {})",
                prefix.len(),
                l.saturating_sub(1)
            )));
        }
    }
    Ok(prefix)
}

fn capacity_json(res: &CapacityResult) -> String {
    let mut s = serde_json::to_string_pretty(res).expect("serializable result");
    s.push('\n');
    s
}

fn capacity_pretty(res: &CapacityResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "capacity bound ({} injectivity, {} method)\n",
        res.mode, res.method
    ));
    out.push_str(&format!(
        "  profile alphas     : {}\n",
        res.alphas.iter().map(|v| fnum(*v)).collect::<Vec<_>>().join(", ")
    ));
    out.push_str(&format!("  alpha_bound        : {}\n", fnum(res.alpha_bound)));
    out.push_str(&format!(
        "  relative expansion : {}\n",
        fnum(res.relative_expansion)
    ));
    out.push_str(&format!("  residual |phi0|    : {}\n", fnum(res.residual)));
    out.push_str(&format!("  converged          : {}\n", res.converged));
    if let Some(v) = &res.vars_at_opt {
        out.push_str(&format!(
            "  r                  : {}\n",
            v.r.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(", ")
        ));
        out.push_str(&format!(
            "  gamma_bar          : {}\n",
            v.gamma_bar.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(", ")
        ));
        out.push_str(&format!(
            "  gamma              : {}\n",
            v.gamma.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(", ")
        ));
        out.push_str(&format!("  nu                 : {}\n", fnum(v.nu)));
        if let Some(c3) = v.c3 {
            out.push_str(&format!("  c3                 : {}\n", fnum(c3)));
        }
    }
    out
}

fn capacity_csv(results: &[CapacityResult]) -> String {
    let mut out =
        String::from("layer,alpha_bound,relative_expansion,residual,converged\n");
    for (i, r) in results.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            fnum(r.alpha_bound),
            fnum(r.relative_expansion),
            fnum(r.residual),
            r.converged
        ));
    }
    out
}

fn run_capacity(args: CapacityArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_ref(), "capacity")?;
    let prefix = resolve_prefix(
        pick(args.layers, file.layers),
        pick(args.alpha1, file.alpha1),
        pick(args.prefix.clone(), file.prefix.clone()),
    )?;
    let mode: InjectivityMode = pick(args.mode, file.mode).unwrap_or(ModeArg::Weak).into();
    let method: Method = pick(args.method, file.method)
        .unwrap_or(MethodArg::Plain)
        .into();
    let cfg = solver_config(&args.common, &file);
    let res = capacity_root(&prefix, mode, method, &cfg).map_err(classify)?;
    if !res.converged {
        return Err(CliError::Numerical(format!(
            "capacity search did not reach tolerance: residual {} at alpha {}",
            res.residual, res.alpha_bound
        )));
    }
    let (path, format) = output_target(&args.common, &file);
    let text = match format {
        OutFormat::Json => capacity_json(&res),
        OutFormat::Pretty => capacity_pretty(&res),
        OutFormat::Csv => capacity_csv(std::slice::from_ref(&res)),
    };
    emit(path.as_ref(), &text)
}

fn run_sequence(args: SequenceArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_ref(), "sequence")?;
    let max_layers = pick(args.max_layers, file.max_layers)
        .ok_or_else(|| CliError::Config("missing required field --max-layers".into()))?;
    let alpha1 = pick(args.alpha1, file.alpha1)
        .ok_or_else(|| CliError::Config("missing required field --alpha1".into()))?;
    let mode: InjectivityMode = pick(args.mode, file.mode).unwrap_or(ModeArg::Weak).into();
    let method: Method = pick(args.method, file.method)
        .unwrap_or(MethodArg::Plain)
        .into();
    let cfg = solver_config(&args.common, &file);
    let results = minimal_sequence(max_layers, alpha1, mode, method, &cfg).map_err(classify)?;
    if let Some(bad) = results.iter().find(|r| !r.converged) {
        return Err(CliError::Numerical(format!(
            "layer {} capacity search did not reach tolerance: residual {}",
            bad.alphas.len(),
            bad.residual
        )));
    }
    let (path, format) = output_target(&args.common, &file);
    let text = match format {
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(&results).expect("serializable results");
            s.push('\n');
            s
        }
        OutFormat::Csv => capacity_csv(&results),
        OutFormat::Pretty => {
            let mut head = String::from("layer              ");
            let mut caps = String::from("alpha (capacity)   ");
            let mut exps = String::from("relative expansion ");
            for (i, r) in results.iter().enumerate() {
                head.push_str(&format!("{:>16}", i + 1));
                caps.push_str(&format!("{:>16.6}", r.alpha_bound));
                exps.push_str(&format!("{:>16.6}", r.relative_expansion));
            }
            format!("{head}\n{caps}\n{exps}\n")
        }
    };
    emit(path.as_ref(), &text)
}

fn breakdown_text(b: &ObjectiveBreakdown, format: OutFormat) -> String {
    match format {
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(b).expect("serializable breakdown");
            s.push('\n');
            s
        }
        OutFormat::Csv => {
            let mut out = String::from("term,value\n");
            for (i, t) in b.layer_terms.iter().enumerate() {
                out.push_str(&format!("layer_{},{}\n", i + 1, fnum(*t)));
            }
            out.push_str(&format!("last_layer,{}\n", fnum(b.last_layer_term)));
            out.push_str(&format!("nu,{}\n", fnum(b.nu_term)));
            out.push_str(&format!("constant,{}\n", fnum(b.constant_term)));
            out.push_str(&format!("total,{}\n", fnum(b.total)));
            out
        }
        OutFormat::Pretty => {
            let mut out = String::from("objective breakdown\n");
            for (i, t) in b.layer_terms.iter().enumerate() {
                out.push_str(&format!("  layer {:<2} term : {}\n", i + 1, fnum(*t)));
            }
            out.push_str(&format!("  last layer    : {}\n", fnum(b.last_layer_term)));
            out.push_str(&format!("  nu term       : {}\n", fnum(b.nu_term)));
            out.push_str(&format!("  constant      : {}\n", fnum(b.constant_term)));
            out.push_str(&format!("  total (phi0)  : {}\n", fnum(b.total)));
            out
        }
    }
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_ref(), "evaluate")?;
    let grid = QuadratureGrid::standard();

    let input = pick(args.input.clone(), file.input.clone());
    let (profile, method, vars) = if let Some(input) = input {
        let text = std::fs::read_to_string(&input).map_err(|e| {
            CliError::Config(format!("cannot read input {}: {e}", input.display()))
        })?;
        let res: CapacityResult = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("invalid capacity result {}: {e}", input.display()))
        })?;
        let vars = res.vars_at_opt.ok_or_else(|| {
            CliError::Config("input result carries no saddle variables".into())
        })?;
        let profile = NetworkProfile::new(res.alphas, res.mode).map_err(classify)?;
        (profile, res.method, vars)
    } else {
        let alphas = pick(args.alphas.clone(), file.alphas.clone())
            .ok_or_else(|| CliError::Config("missing required field --alphas".into()))?;
        let mode: InjectivityMode = pick(args.mode, file.mode)
            .ok_or_else(|| CliError::Config("missing required field --mode".into()))?
            .into();
        let method: Method = pick(args.method, file.method)
            .ok_or_else(|| CliError::Config("missing required field --method".into()))?
            .into();
        let vars = SaddleVariables {
            r: pick(args.r.clone(), file.r.clone())
                .ok_or_else(|| CliError::Config("missing required field --r".into()))?,
            gamma_bar: pick(args.gamma_bar.clone(), file.gamma_bar.clone())
                .ok_or_else(|| CliError::Config("missing required field --gamma-bar".into()))?,
            gamma: pick(args.gamma.clone(), file.gamma.clone()).unwrap_or_default(),
            nu: pick(args.nu, file.nu)
                .ok_or_else(|| CliError::Config("missing required field --nu".into()))?,
            c3: pick(args.c3, file.c3),
        };
        let profile = NetworkProfile::new(alphas, mode).map_err(classify)?;
        (profile, method, vars)
    };

    let form: GammaSphForm = pick(args.compat_gamma_sph, file.compat_gamma_sph)
        .unwrap_or(GammaSphArg::Stationary)
        .into();
    let breakdown = match method {
        Method::Plain => phi0_plain(&profile, &vars, &grid).map_err(classify)?,
        Method::Lifted => phi0_lifted_with(&profile, &vars, &grid, form).map_err(classify)?,
    };
    let (path, format) = output_target(&args.common, &file);
    emit(path.as_ref(), &breakdown_text(&breakdown, format))
}

#[derive(Serialize)]
struct SweepPoint {
    alpha_l: f64,
    phi0: f64,
    converged: bool,
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_ref(), "sweep")?;
    let prefix = pick(args.prefix.clone(), file.prefix.clone()).unwrap_or_default();
    let alpha_grid = pick(args.alpha_grid.clone(), file.alpha_grid.clone())
        .filter(|g| !g.is_empty())
        .ok_or_else(|| CliError::Config("missing required field --alpha-grid".into()))?;
    let mode: InjectivityMode = pick(args.mode, file.mode).unwrap_or(ModeArg::Weak).into();
    let method: Method = pick(args.method, file.method)
        .unwrap_or(MethodArg::Plain)
        .into();
    let cfg = solver_config(&args.common, &file);

    let mut points = Vec::with_capacity(alpha_grid.len());
    for &alpha_l in &alpha_grid {
        let mut alphas = prefix.clone();
        alphas.push(alpha_l);
        let profile = NetworkProfile::new(alphas, mode).map_err(classify)?;
        let sol = saddle_solve(&profile, method, &cfg).map_err(classify)?;
        points.push(SweepPoint {
            alpha_l,
            phi0: sol.breakdown.total,
            converged: sol.converged,
        });
    }
    let (path, format) = output_target(&args.common, &file);
    let text = match format {
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(&points).expect("serializable points");
            s.push('\n');
            s
        }
        OutFormat::Csv => {
            let mut out = String::from("alpha_l,phi0,converged\n");
            for p in &points {
                out.push_str(&format!("{},{},{}\n", fnum(p.alpha_l), fnum(p.phi0), p.converged));
            }
            out
        }
        OutFormat::Pretty => {
            let mut out =
                format!("phi0 vs alpha_l ({mode} injectivity, {method} method)\n");
            for p in &points {
                out.push_str(&format!("  {:>12}  {:>16}\n", fnum(p.alpha_l), fnum(p.phi0)));
            }
            out
        }
    };
    emit(path.as_ref(), &text)
}

fn sweep_rows_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("alpha_l,trials,witnesses,frequency\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fnum(r.alpha_l),
            r.trials,
            r.witnesses,
            fnum(r.frequency)
        ));
    }
    out
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_ref(), "simulate")?;
    let n = pick(args.n, file.n)
        .ok_or_else(|| CliError::Config("missing required field --n".into()))?;
    let prefix = pick(args.prefix.clone(), file.prefix.clone()).unwrap_or_default();
    let alpha_grid = pick(args.alpha_grid.clone(), file.alpha_grid.clone())
        .filter(|g| !g.is_empty())
        .ok_or_else(|| CliError::Config("missing required field --alpha-grid".into()))?;
    let mode: InjectivityMode = pick(args.mode, file.mode).unwrap_or(ModeArg::Weak).into();
    let trials = pick(args.trials, file.trials).unwrap_or(50);
    let restarts = pick(args.restarts, file.restarts).unwrap_or(4);
    let seed = pick(args.seed, file.seed).unwrap_or(0);
    let d = AnnealSchedule::default();
    let schedule = AnnealSchedule {
        eps_start: pick(args.eps_start, file.eps_start).unwrap_or(d.eps_start),
        eps_end: pick(args.eps_end, file.eps_end).unwrap_or(d.eps_end),
        stages: pick(args.stages, file.stages).unwrap_or(d.stages),
        steps_per_stage: pick(args.steps_per_stage, file.steps_per_stage)
            .unwrap_or(d.steps_per_stage),
        init_step: pick(args.init_step, file.init_step).unwrap_or(d.init_step),
    };
    let rows = phase_sweep(n, &prefix, &alpha_grid, mode, trials, restarts, &schedule, seed)
        .map_err(classify)?;
    let (path, format) = output_target(&args.common, &file);
    let text = match format {
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("serializable rows");
            s.push('\n');
            s
        }
        OutFormat::Csv | OutFormat::Pretty => sweep_rows_csv(&rows),
    };
    emit(path.as_ref(), &text)
}

fn main() {
    relu_inject::configure_workers_from_env();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Capacity(a) => run_capacity(a),
        Command::Sequence(a) => run_sequence(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Simulate(a) => run_simulate(a),
    };
    if let Err(e) = result {
        let payload = serde_json::json!({ "error": e.message() });
        eprintln!("{payload}");
        std::process::exit(e.code());
    }
}
