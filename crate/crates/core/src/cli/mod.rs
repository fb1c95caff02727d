//! Command-line driver: `direct`, `inverse`, `pe`, `roundtrip`, `verify`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::accelerant::potential_from_accelerant;
use crate::direct::{initial_defect, DirectSolver};
use crate::inverse::{reconstruct, DEFAULT_TOL};
use crate::io::{
    atomic_write, lambda_tag, parse_lambda_list, read_json, read_sampled, read_triple, write_accelerant,
    write_fundamental_csv, write_function_csv, write_json, write_potential, write_triple, KernelKind,
};
use crate::numerics::{max_abs, Grid};
use crate::pseudo_exp::{pe_accelerant, pe_potential, pe_state, random_triple, AdmissibleTriple};
use crate::verify::{verify_accelerant, verify_potential, verify_triple, Report};
use crate::{Error, Result, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_ACCELERANT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "accelerant", version, about = "Accelerants, potentials and fundamental solutions of canonical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Accelerant JSON -> potential, fundamental solutions, diagnostics.
    Direct(Flags),
    /// Potential JSON -> accelerant and diagnostics.
    Inverse(Flags),
    /// Closed-form k, v, u for an admissible triple (file or --seed).
    Pe(Flags),
    /// k -> v -> k or v -> k -> v, depending on the input kind.
    Roundtrip(Flags),
    /// Run the invariant suite and print a pass/fail table.
    Verify(Flags),
}

#[derive(Args, Debug, Clone)]
struct Flags {
    /// Input JSON (accelerant, potential or triple).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Number of grid intervals for closed-form inputs.
    #[arg(long, default_value_t = 200)]
    grid_n: usize,
    /// Interval length for closed-form inputs.
    #[arg(long = "T", default_value_t = 1.0)]
    t_end: f64,
    /// Comma-separated spectral parameters, e.g. "0,1,0.5-2i".
    #[arg(long, default_value = "0,1")]
    lambda: String,
    /// Neumann series tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Seed for a random admissible triple when no input is given.
    #[arg(long)]
    seed: Option<u64>,
    /// State dimension of the random triple.
    #[arg(long, default_value_t = 2)]
    nn: usize,
    /// Block size of the random triple.
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Cross-check the similarity kernel by direct substitution.
    #[arg(long)]
    cross_check: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Direct,
    Inverse,
    Pe,
    Roundtrip,
    Verify,
}

/// Validated command configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub n: usize,
    pub t_end: f64,
    pub lambdas: Vec<C64>,
    pub tol: f64,
    pub seed: Option<u64>,
    pub nn: usize,
    pub r: usize,
    pub cross_check: bool,
}

impl RunConfig {
    fn from_flags(command: CommandKind, f: Flags) -> Result<Self> {
        if f.grid_n < 8 {
            return Err(Error::Parse(format!("--grid-n must be at least 8, got {}", f.grid_n)));
        }
        if !(f.t_end > 0.0 && f.t_end.is_finite()) {
            return Err(Error::Parse(format!("--T must be positive, got {}", f.t_end)));
        }
        if !(f.tol > 0.0) {
            return Err(Error::Parse(format!("--tol must be positive, got {}", f.tol)));
        }
        let lambdas = parse_lambda_list(&f.lambda)?;
        Ok(RunConfig {
            command,
            input: f.input,
            out_dir: f.out_dir,
            n: f.grid_n,
            t_end: f.t_end,
            lambdas,
            tol: f.tol,
            seed: f.seed,
            nn: f.nn,
            r: f.r,
            cross_check: f.cross_check,
        })
    }

    fn grid(&self) -> Result<Grid> {
        Grid::new(self.t_end, self.n)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn require_input(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| Error::Parse("--input is required".into()))
    }
}

/// Result of one command: a short stdout summary and whether any check failed.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: String,
    pub checks_failed: bool,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotPositive { .. } => EXIT_NOT_ACCELERANT,
        Error::Validation { .. } | Error::NoConvergence { .. } => EXIT_VALIDATION,
        _ => EXIT_USAGE,
    }
}

pub fn run() -> i32 {
    run_with_args(std::env::args_os())
}

pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (kind, flags) = match cli.command {
        Command::Direct(f) => (CommandKind::Direct, f),
        Command::Inverse(f) => (CommandKind::Inverse, f),
        Command::Pe(f) => (CommandKind::Pe, f),
        Command::Roundtrip(f) => (CommandKind::Roundtrip, f),
        Command::Verify(f) => (CommandKind::Verify, f),
    };
    let result = RunConfig::from_flags(kind, flags).and_then(|c| execute(&c));
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            if out.checks_failed {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(config: &RunConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&config.out_dir)?;
    match config.command {
        CommandKind::Direct => cmd_direct(config),
        CommandKind::Inverse => cmd_inverse(config),
        CommandKind::Pe => cmd_pe(config),
        CommandKind::Roundtrip => cmd_roundtrip(config),
        CommandKind::Verify => cmd_verify(config),
    }
}

fn ok(summary: String) -> Result<Outcome> {
    Ok(Outcome { summary, checks_failed: false })
}

pub fn cmd_direct(config: &RunConfig) -> Result<Outcome> {
    let k = crate::io::read_accelerant(config.require_input()?)?;
    let solver = DirectSolver::new(&k)?;
    let v = solver.potential()?;
    write_potential(&config.out("potential.json"), &v)?;
    write_function_csv(&config.out("potential.csv"), "v", &v.to_function())?;
    let pos = solver.positivity();
    let (imin, margin) = pos
        .min_eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
    let mut unitarity = serde_json::Map::new();
    for &z in &config.lambdas {
        let u = solver.fundamental_solution(z)?;
        let ub = solver.fundamental_solution(z.conj())?;
        write_fundamental_csv(&config.out(&format!("u_{}.csv", lambda_tag(z))), &u)?;
        unitarity.insert(
            lambda_tag(z),
            json!({ "j_unitarity": u.j_unitarity_residual(&ub), "initial_defect": initial_defect(&u) }),
        );
    }
    let diag = json!({
        "positivity": {
            "min_margin": margin,
            "tau_at_min": pos.taus.get(imin).copied().unwrap_or(0.0),
        },
        "fundamental_solution": Value::Object(unitarity),
    });
    write_json(&config.out("diagnostics.json"), &diag)?;
    ok(format!("direct: n = {}, min positivity margin {margin:.3e}\n", k.grid().n()))
}

pub fn cmd_inverse(config: &RunConfig) -> Result<Outcome> {
    let v = crate::io::read_potential(config.require_input()?)?;
    let rec = reconstruct(&v, config.tol, config.cross_check)?;
    write_accelerant(&config.out("accelerant.json"), &rec.k)?;
    write_function_csv(&config.out("accelerant.csv"), "k", &rec.k.to_function())?;
    let d = &rec.diagnostics;
    let diag = json!({
        "residuals": {
            "lambda_normalization": d.lambda_normalization,
            "similarity": d.ea_le,
            "st_displacement": d.st_displacement,
            "st_direct": d.st_direct,
            "lambda_theta": d.lambda_theta,
            "e0_identity": d.e0_identity,
            "normalization_at_zero": d.normalization_at_zero,
            "row_identities": d.row_identities,
            "fg": d.fg,
            "rho_defect": d.rho_defect,
            "roundtrip": d.roundtrip,
        },
        "neumann_terms": d.neumann_terms,
        "term_norms": d.term_norms,
        "positivity_margin": d.positivity_margin,
        "cross_check": d.cross_check,
        "validation_tolerance": d.validation_tolerance,
        "jump_at_zero": max_abs(&rec.k.jump()),
    });
    write_json(&config.out("diagnostics.json"), &diag)?;
    ok(format!(
        "inverse: n = {}, {} Neumann terms, round trip {:.3e}, |k(0+) - k(0+)*| = {:.3e}\n",
        v.grid().n(),
        d.neumann_terms,
        d.roundtrip,
        max_abs(&rec.k.jump())
    ))
}

fn triple_or_seed(config: &RunConfig) -> Result<AdmissibleTriple> {
    match (&config.input, config.seed) {
        (Some(p), _) => read_triple(p),
        (None, Some(seed)) => random_triple(config.nn, config.r, seed),
        (None, None) => Err(Error::Parse("give --input (triple JSON) or --seed".into())),
    }
}

pub fn cmd_pe(config: &RunConfig) -> Result<Outcome> {
    let triple = triple_or_seed(config)?;
    let grid = config.grid()?;
    write_triple(&config.out("triple.json"), &triple)?;
    let k = pe_accelerant(&triple, &grid)?;
    let v = pe_potential(&triple, &grid)?;
    write_accelerant(&config.out("accelerant.json"), &k)?;
    write_function_csv(&config.out("accelerant.csv"), "k", &k.to_function())?;
    write_potential(&config.out("potential.json"), &v)?;
    write_function_csv(&config.out("potential.csv"), "v", &v.to_function())?;
    let state = pe_state(&triple, &grid)?;
    for &z in &config.lambdas {
        let samples = (0..grid.len()).map(|i| state.fundamental(i, z)).collect::<Result<Vec<_>>>()?;
        let u = crate::direct::FundamentalSolutionSample::new(z, grid.clone(), samples)?;
        write_fundamental_csv(&config.out(&format!("u_{}.csv", lambda_tag(z))), &u)?;
    }
    ok(format!("pe: nn = {}, r = {}, n = {}\n", triple.nn(), triple.r(), grid.n()))
}

fn interior_max(a: &[crate::CMat], b: &[crate::CMat]) -> f64 {
    let n = a.len().saturating_sub(1);
    (1..n).map(|i| crate::numerics::max_abs_diff(&a[i], &b[i])).fold(0.0, f64::max)
}

fn full_max(a: &[crate::CMat], b: &[crate::CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| crate::numerics::max_abs_diff(x, y)).fold(0.0, f64::max)
}

pub fn cmd_roundtrip(config: &RunConfig) -> Result<Outcome> {
    let file = read_sampled(config.require_input()?)?;
    let (direction, full, interior) = match file.kind {
        KernelKind::Accelerant => {
            let k = file.to_accelerant()?;
            let v = potential_from_accelerant(&k)?;
            let k2 = reconstruct(&v, config.tol, config.cross_check)?.k;
            write_accelerant(&config.out("roundtrip_accelerant.json"), &k2)?;
            ("k->v->k", full_max(k.samples(), k2.samples()), interior_max(k.samples(), k2.samples()))
        }
        KernelKind::Potential => {
            let v = file.to_potential()?;
            let k = reconstruct(&v, config.tol, config.cross_check)?.k;
            let v2 = potential_from_accelerant(&k)?;
            write_potential(&config.out("roundtrip_potential.json"), &v2)?;
            ("v->k->v", full_max(v.samples(), v2.samples()), interior_max(v.samples(), v2.samples()))
        }
    };
    let summary = json!({ "direction": direction, "max_error": full, "interior_max_error": interior, "n": file.n });
    write_json(&config.out("roundtrip.json"), &summary)?;
    ok(format!("roundtrip {direction}: max error {full:.3e}, interior {interior:.3e}\n"))
}

/// Suite for whatever the input holds: a triple, an accelerant or a potential.
pub fn verify_input(config: &RunConfig) -> Result<Report> {
    let Some(path) = &config.input else {
        return verify_triple(&triple_or_seed(config)?, &config.grid()?, config.tol);
    };
    let value: Value = read_json(path)?;
    if value.get("kind").is_some() {
        let file = read_sampled(path)?;
        match file.kind {
            KernelKind::Accelerant => verify_accelerant(&file.to_accelerant()?, config.tol),
            KernelKind::Potential => verify_potential(&file.to_potential()?, config.tol),
        }
    } else {
        verify_triple(&read_triple(path)?, &config.grid()?, config.tol)
    }
}

pub fn cmd_verify(config: &RunConfig) -> Result<Outcome> {
    let report = verify_input(config)?;
    write_json(&config.out("verify.json"), &report)?;
    let table = report.table();
    atomic_write(&config.out("verify.txt"), table.as_bytes())?;
    let failed = report.failures().len();
    let mut summary = table;
    summary.push_str(&format!("{} checks, {} failed\n", report.checks.len(), failed));
    Ok(Outcome { summary, checks_failed: failed > 0 })
}
