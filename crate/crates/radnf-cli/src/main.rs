//! Command-line driver: file ingestion, dispatch into the engine, and
//! report emission.
//!
//! Exit codes: 0 success; 1 usage or parse error; 2 precondition violation
//! (not in the radial class, invalid flow specification, caps too small);
//! 3 numerical non-convergence; 4 internal assertion failure.

mod flowfile;
mod report;
mod symfile;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use radnf::flow::{
    limit_map_probe, linearization_residual, transport_residual, transport_solve, wminus_map,
    FlowError, FlowParams, ProbeGrid, SampleBox, TransportDirection,
};
use radnf::lower::{normalize_full, replay_full};
use radnf::principal::{normalize_principal, replay_principal, NormalizeError};
use radnf::sampling::run_hamilton_trials;
use radnf::symbol::{radial_check, ClassicalSymbol};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "radnf",
    version,
    about = "Radial-point normal forms: symbolic certificates and flow verification"
)]
struct Cli {
    /// Path for the JSON report (a .txt sibling is written next to it).
    /// Defaults to $RADNF_OUT_DIR/<command>.json, else ./<command>.json.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the principal part of a symbol file for radial-class membership
    CheckRadial { file: PathBuf },
    /// Reduce the principal part to z and emit the certificate with its replay
    NormalizePrincipal {
        file: PathBuf,
        /// Re-truncate to this filtration cap before normalizing
        #[arg(long = "cap-fil", value_name = "N")]
        cap_fil: Option<u32>,
        /// Re-truncate to this y-degree cap before normalizing
        #[arg(long = "cap-y", value_name = "M")]
        cap_y: Option<u32>,
    },
    /// Normalize a classical symbol to (z; p0(y); 0; ..) through K stages
    NormalizeFull {
        file: PathBuf,
        /// Number of lower-order stages to clear
        #[arg(long, default_value_t = 3, value_name = "K")]
        stages: u32,
        #[arg(long = "cap-fil", value_name = "N")]
        cap_fil: Option<u32>,
        #[arg(long = "cap-y", value_name = "M")]
        cap_y: Option<u32>,
    },
    /// Random jets: Hamilton field and bracket against the canonical-coordinate oracle
    VerifyHamilton {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute the conjugacy map W- and its linearization residual on a box
    FlowLinearize {
        file: PathBuf,
        /// Horizon cap for the doubling limit
        #[arg(long = "T", value_name = "T")]
        t_max: Option<f64>,
        /// Absolute and relative tolerance for the limit and the integrator
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Evaluate the transport integral at the base point and check Vf + cf = g
    TransportSolve {
        file: PathBuf,
        /// Zeroth-order coefficient c in Vf + cf = g
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        c: f64,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Divided-difference smoothness probe of the limit map across L
    LimitProbe { file: PathBuf },
}

enum CliError {
    Usage(String),
    Precondition(String),
    Numerics(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Numerics(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Precondition(m)
            | CliError::Numerics(m)
            | CliError::Internal(m) => m,
        }
    }
}

impl From<NormalizeError> for CliError {
    fn from(e: NormalizeError) -> CliError {
        match e {
            NormalizeError::NotRadial(_)
            | NormalizeError::BadFiltration { .. }
            | NormalizeError::CapsTooSmall(_)
            | NormalizeError::NonConvergent { .. } => CliError::Precondition(e.to_string()),
            NormalizeError::InductiveHypothesisViolated { .. } | NormalizeError::Internal(_) => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> CliError {
        match e {
            FlowError::InvalidSpec(_) | FlowError::NonHyperbolic { .. } => {
                CliError::Precondition(e.to_string())
            }
            FlowError::StepFailure { .. }
            | FlowError::NoConvergence { .. }
            | FlowError::DivergentIntegral { .. } => CliError::Numerics(e.to_string()),
            FlowError::Internal(_) => CliError::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::CheckRadial { file } => check_radial(&file, cli.out),
        Command::NormalizePrincipal { file, cap_fil, cap_y } => {
            norm_principal(&file, cap_fil, cap_y, cli.out)
        }
        Command::NormalizeFull { file, stages, cap_fil, cap_y } => {
            norm_full(&file, stages, cap_fil, cap_y, cli.out)
        }
        Command::VerifyHamilton { n, degree, trials, seed } => {
            verify_hamilton(n, degree, trials, seed, cli.out)
        }
        Command::FlowLinearize { file, t_max, tol } => flow_linearize(&file, t_max, tol, cli.out),
        Command::TransportSolve { file, c, tol } => transport(&file, c, tol, cli.out),
        Command::LimitProbe { file } => limit_probe(&file, cli.out),
    }
}

fn read_symbol(path: &PathBuf) -> Result<ClassicalSymbol, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    symfile::parse_symbol(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_flow(path: &PathBuf) -> Result<flowfile::FlowFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    flowfile::parse_flow(&text).map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        // spec-level failures are preconditions, not syntax
        if e.message.starts_with("invalid flow specification")
            || e.message.starts_with("eigenvalue")
        {
            CliError::Precondition(msg)
        } else {
            CliError::Usage(msg)
        }
    })
}

fn emit(out: Option<PathBuf>, slug: &str, json: &Value, text: &str) -> Result<(), CliError> {
    let path = report::resolve_out(out, slug);
    report::emit(&path, json, text)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn caps_json(symbol: &ClassicalSymbol) -> Value {
    let caps = symbol.caps();
    json!({ "n": caps.n, "fil_cap": caps.fil_cap, "y_cap": caps.y_cap })
}

fn filtration_text(f: &Option<u32>) -> String {
    match f {
        None => "exact".into(),
        Some(k) => format!("fil {k}"),
    }
}

fn check_radial(file: &PathBuf, out: Option<PathBuf>) -> Result<u8, CliError> {
    let symbol = read_symbol(file)?;
    let rep = radial_check(&symbol);
    let doc = json!({
        "command": "check-radial",
        "input": file.display().to_string(),
        "caps": caps_json(&symbol),
        "in_class": rep.in_class,
        "lambda": rep.lambda_factor,
        "failures": rep.failures,
    });
    let mut text = format!("check-radial: {}\n", file.display());
    text.push_str(&format!("in_class: {}, lambda: {}\n", rep.in_class, rep.lambda_factor));
    if !rep.failures.is_empty() {
        text.push_str("failures:\n");
        for f in &rep.failures {
            text.push_str(&format!("  - {f}\n"));
        }
    }
    emit(out, "check-radial", &doc, &text)?;
    Ok(if rep.in_class { 0 } else { 2 })
}

fn norm_principal(
    file: &PathBuf,
    cap_fil: Option<u32>,
    cap_y: Option<u32>,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let symbol = read_symbol(file)?;
    let symbol = symfile::with_caps(&symbol, cap_fil, cap_y).map_err(CliError::Usage)?;
    let p = symbol.principal();
    let cert = normalize_principal(p)?;
    let replay = replay_principal(&cert, p)?;
    // canonical rendering of what was actually normalized, caps overrides
    // applied, so the certificate is reproducible without the input file
    let doc = json!({
        "command": "normalize-principal",
        "input": file.display().to_string(),
        "symbol": symfile::emit_symbol(&symbol),
        "caps": caps_json(&symbol),
        "certificate": cert,
        "replay": replay,
    });
    let levels: Vec<u32> = cert.generators.iter().map(|g| g.level).collect();
    let text = format!(
        "normalize-principal: {}\ncaps: {}\nelliptic factor: {}\ngenerators: {} at levels {:?}\nresidual: {}\nreplay: {}\n",
        file.display(),
        symbol.caps(),
        cert.elliptic_factor,
        cert.generators.len(),
        levels,
        filtration_text(&cert.residual.filtration_order()),
        if replay.pass { "pass" } else { "FAIL" },
    );
    emit(out, "normalize-principal", &doc, &text)?;
    if replay.pass {
        Ok(0)
    } else {
        Err(CliError::Internal("certificate replay failed".into()))
    }
}

fn norm_full(
    file: &PathBuf,
    stages: u32,
    cap_fil: Option<u32>,
    cap_y: Option<u32>,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let symbol = read_symbol(file)?;
    let symbol = symfile::with_caps(&symbol, cap_fil, cap_y).map_err(CliError::Usage)?;
    let cert = normalize_full(&symbol, stages)?;
    let replay = replay_full(&cert, &symbol)?;
    let doc = json!({
        "command": "normalize-full",
        "input": file.display().to_string(),
        "symbol": symfile::emit_symbol(&symbol),
        "caps": caps_json(&symbol),
        "stages": stages,
        "certificate": cert,
        "replay": replay,
    });
    let residuals: Vec<String> =
        replay.order_residual_filtrations.iter().map(filtration_text).collect();
    let text = format!(
        "normalize-full: {}\ncaps: {}, stages: {}, routing: {:?}\np0: {}\norder residuals: [{}]\nreplay: {}\n",
        file.display(),
        symbol.caps(),
        stages,
        cert.routing,
        cert.p0,
        residuals.join(", "),
        if replay.pass { "pass" } else { "FAIL" },
    );
    emit(out, "normalize-full", &doc, &text)?;
    if replay.pass {
        Ok(0)
    } else {
        Err(CliError::Internal("certificate replay failed".into()))
    }
}

fn verify_hamilton(
    n: usize,
    degree: u32,
    trials: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    if n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    let rep = run_hamilton_trials(n, degree, trials, seed);
    let doc = json!({ "command": "verify-hamilton", "report": rep });
    let mut text = format!(
        "verify-hamilton: n={} degree={} trials={} seed={}\noracle matches: {}/{}\n",
        n, degree, trials, seed, rep.matches, rep.trials,
    );
    if let Some(m) = &rep.first_mismatch {
        text.push_str(&format!("first mismatch: {m}\n"));
    }
    let pass = rep.all_match();
    emit(out, "verify-hamilton", &doc, &text)?;
    if pass {
        Ok(0)
    } else {
        Err(CliError::Internal("bracket oracle mismatch".into()))
    }
}

fn flow_params(t_max: Option<f64>, tol: Option<f64>) -> Result<FlowParams, CliError> {
    let mut params = FlowParams::default();
    if let Some(t) = t_max {
        params.t_max = t;
    }
    if let Some(tol) = tol {
        params.abs_tol = tol;
        params.rel_tol = tol;
    }
    params.validate()?;
    Ok(params)
}

fn origin(dim: usize) -> DVector<f64> {
    DVector::zeros(dim)
}

fn flow_linearize(
    file: &PathBuf,
    t_max: Option<f64>,
    tol: Option<f64>,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let ff = read_flow(file)?;
    let params = flow_params(t_max, tol)?;
    let center = ff.base.clone().unwrap_or_else(|| origin(ff.spec.dim));
    let sbox = SampleBox {
        center: center.clone(),
        half_width: ff.box_half_width.unwrap_or(0.25),
        per_axis: ff.box_per_axis.unwrap_or(3),
    };
    let w = wminus_map(&ff.spec, &center, &params)?;
    let res = linearization_residual(&ff.spec, &sbox, &params)?;
    let doc = json!({
        "command": "flow-linearize",
        "input": file.display().to_string(),
        "params": { "abs_tol": params.abs_tol, "rel_tol": params.rel_tol,
                    "t_max": params.t_max, "fd_step": params.fd_step },
        "box": { "center": report::vec_json(&center),
                 "half_width": sbox.half_width, "per_axis": sbox.per_axis },
        "wminus": { "point": report::vec_json(&w.point),
                    "cauchy_diff": w.cauchy_diff, "horizon": w.horizon },
        "max_residual": res.max_residual,
        "samples": res.samples,
    });
    let text = format!(
        "flow-linearize: {}\nt_max: {}, tol: abs {:.1e} / rel {:.1e}, fd step {:.1e}\nW-(base) = {} (cauchy diff {:.3e}, horizon {})\nlinearization residual: max {:.3e} over {} samples\n",
        file.display(),
        params.t_max,
        params.abs_tol,
        params.rel_tol,
        params.fd_step,
        report::vec_text(&w.point),
        w.cauchy_diff,
        w.horizon,
        res.max_residual,
        res.samples,
    );
    emit(out, "flow-linearize", &doc, &text)?;
    Ok(0)
}

fn transport(
    file: &PathBuf,
    c: f64,
    tol: Option<f64>,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let ff = read_flow(file)?;
    let g = ff.g.clone().ok_or_else(|| {
        CliError::Precondition(format!("{}: no transport data (`g:` lines)", file.display()))
    })?;
    let params = flow_params(None, tol)?;
    let x = ff.base.clone().unwrap_or_else(|| origin(ff.spec.dim));
    let direction = TransportDirection::Forward;
    let value = transport_solve(&ff.spec, &g, c, &x, direction, &params)?;
    let residual = transport_residual(&ff.spec, &g, c, &x, direction, &params)?;
    let doc = json!({
        "command": "transport-solve",
        "input": file.display().to_string(),
        "c": c,
        "direction": "forward",
        "base": report::vec_json(&x),
        "value": value,
        "residual": residual,
    });
    let text = format!(
        "transport-solve: {}\nc = {}, direction = forward\nf(base) = {:.12e}\nresidual |Vf + cf - g| = {:.3e}\n",
        file.display(),
        c,
        value,
        residual,
    );
    emit(out, "transport-solve", &doc, &text)?;
    Ok(0)
}

fn limit_probe(file: &PathBuf, out: Option<PathBuf>) -> Result<u8, CliError> {
    let ff = read_flow(file)?;
    let dim = ff.spec.dim;
    let direction = ff.direction.clone().unwrap_or_else(|| {
        let mut e = origin(dim);
        e[dim - 1] = 1.0;
        e
    });
    let grid = ProbeGrid {
        base: ff.base.clone().unwrap_or_else(|| origin(dim)),
        direction,
        h0: ff.h0.unwrap_or(0.05),
    };
    let params = FlowParams::default();
    let rep = limit_map_probe(&ff.spec, &grid, &params)?;
    let doc = json!({
        "command": "limit-probe",
        "input": file.display().to_string(),
        "base": report::vec_json(&grid.base),
        "direction": report::vec_json(&grid.direction),
        "h0": grid.h0,
        "stabilized": rep.stabilized,
        "max_delta": rep.max_delta,
        "tolerance": rep.tolerance,
        "first_derivative": report::vecs_json(&rep.first_derivative),
        "second_derivative": report::vecs_json(&rep.second_derivative),
    });
    // not stabilizing is a finding, not a failure: the report carries it
    let text = format!(
        "limit-probe: {}\nh0 = {}, base = {}, direction = {}\nstabilized: {} (max delta {:.3e}, tolerance {:.1e})\nfirst derivative at finest mesh: {}\nsecond derivative at finest mesh: {}\n",
        file.display(),
        grid.h0,
        report::vec_text(&grid.base),
        report::vec_text(&grid.direction),
        rep.stabilized,
        rep.max_delta,
        rep.tolerance,
        report::vec_text(rep.first_derivative.last().expect("three refinement levels")),
        report::vec_text(rep.second_derivative.last().expect("three refinement levels")),
    );
    emit(out, "limit-probe", &doc, &text)?;
    Ok(0)
}
