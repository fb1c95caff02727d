//! Acceptance criteria, one pass/fail line each. Run with `--nocapture` to see
//! the table.

use std::time::{Duration, Instant};

use accelerant::accelerant::potential_from_accelerant;
use accelerant::canonical::{integrate_canonical, integrate_canonical_fine};
use accelerant::direct::DirectSolver;
use accelerant::inverse::{accelerant_from_potential, reconstruct};
use accelerant::numerics::{max_abs, max_abs_diff, scalar, Grid};
use accelerant::pseudo_exp::{pe_accelerant, pe_potential, pe_state, random_triple, AdmissibleTriple};
use accelerant::verify::{verify_triple, Bound, SUITE_C, TOLERANCE_FLOOR};
use accelerant::{Accelerant, CMat, Potential, Result, C64};

const SEED: u64 = 7;
const TOL: f64 = 1e-10;

// criterion 1
const C1_ERROR: f64 = 1e-4;
const C1_RUNTIME: Duration = Duration::from_secs(10);
const C1_RATIO: f64 = 3.5;
/// Errors at or below this are rounding, where a convergence ratio means nothing.
const ROUNDING_FLOOR: f64 = 1e-12;
// criterion 2
const C2_ERROR: f64 = 1e-6;
const C2_STEP: f64 = 1e-3;
const C2_RUNTIME: Duration = Duration::from_secs(30);
// criterion 3
const C3_ERROR: f64 = 5e-3;
// criterion 4
const C4_ODE: f64 = 1e-6;
const C4_DIRECT: f64 = 5e-3;
// criterion 5
const C5_CONSTANT: f64 = 1e-2;
const C5_PE: f64 = 5e-2;
const C5_RUNTIME: Duration = Duration::from_secs(300);
// criterion 6
const C6_ERROR: f64 = 1e-2;
// criterion 7
const C7_RUNTIME: Duration = Duration::from_secs(600);
/// Smallest error reduction from n = 100 to n = 200 accepted as second order.
const C7_ORDER_RATIO: f64 = 3.0;
// criterion 8
const C8_JUMP: f64 = 0.1;

struct Line {
    id: usize,
    passed: bool,
    detail: String,
}

fn grid(n: usize) -> Grid {
    Grid::new(1.0, n).unwrap()
}

fn triple() -> AdmissibleTriple {
    random_triple(2, 1, SEED).unwrap()
}

fn constant_triple() -> AdmissibleTriple {
    let c = |x: f64| scalar(C64::new(x, 0.0));
    accelerant::pseudo_exp::validate_triple(c(0.0), c(1.0), c(0.0)).unwrap()
}

fn inverse_linear(g: &Grid) -> Potential {
    Potential::from_fn(g, |t| scalar(C64::new(0.0, 2.0 / (1.0 + 2.0 * t)))).unwrap()
}

fn interior(a: &[CMat], b: &[CMat]) -> f64 {
    (1..a.len() - 1).map(|i| max_abs_diff(&a[i], &b[i])).fold(0.0, f64::max)
}

fn all_nodes(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| max_abs_diff(x, y)).fold(0.0, f64::max)
}

fn constant_kernel_error(n: usize) -> Result<f64> {
    let g = grid(n);
    let k = Accelerant::constant(&g, &scalar(C64::new(-2.0, 0.0)))?;
    let v = potential_from_accelerant(&k)?;
    Ok(all_nodes(v.samples(), inverse_linear(&g).samples()))
}

fn criterion_1() -> Result<Line> {
    let start = Instant::now();
    let e400 = constant_kernel_error(400)?;
    let elapsed = start.elapsed();
    let e800 = constant_kernel_error(800)?;
    let ratio = e400 / e800;
    let converges = ratio >= C1_RATIO || (e400 <= ROUNDING_FLOOR && e800 <= ROUNDING_FLOOR);
    // the constant kernel is reproduced to rounding, so the convergence order
    // is also measured on the nn = 2 pseudo-exponential accelerant
    let tr = triple();
    let pe = |n: usize| -> Result<f64> {
        let g = grid(n);
        let v = potential_from_accelerant(&pe_accelerant(&tr, &g)?)?;
        Ok(all_nodes(v.samples(), pe_potential(&tr, &g)?.samples()))
    };
    let (o200, o400) = (pe(200)?, pe(400)?);
    let passed = e400 <= C1_ERROR && elapsed <= C1_RUNTIME && converges && o200 / o400 >= C1_RATIO;
    Ok(Line {
        id: 1,
        passed,
        detail: format!(
            "constant kernel: err(400) = {e400:.2e} <= {C1_ERROR:.0e}, time {:.2}s <= {}s, err(800) = {e800:.2e} \
             (ratio {ratio:.2}, rounding floor {ROUNDING_FLOOR:.0e}); nn = 2 kernel: err(200)/err(400) = {:.2} >= {C1_RATIO}",
            elapsed.as_secs_f64(),
            C1_RUNTIME.as_secs(),
            o200 / o400
        ),
    })
}

fn criterion_2() -> Result<Line> {
    let start = Instant::now();
    let tr = triple();
    let n = (1.0 / C2_STEP).round() as usize;
    let coarse = grid(n);
    let fine = coarse.refined(2);
    let v_fine = pe_potential(&tr, &fine)?;
    let state = pe_state(&tr, &coarse)?;
    let mut err: f64 = 0.0;
    for z in [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
        let u = integrate_canonical_fine(&v_fine, z)?;
        for i in 0..coarse.len() {
            err = err.max(max_abs_diff(&state.fundamental(i, z)?, u.at(i)));
        }
    }
    let elapsed = start.elapsed();
    Ok(Line {
        id: 2,
        passed: err <= C2_ERROR && elapsed <= C2_RUNTIME,
        detail: format!(
            "closed-form u vs RK4 (h = {C2_STEP:.0e}), lambda in {{0, 1, i}}: {err:.2e} <= {C2_ERROR:.0e}, time {:.2}s <= {}s",
            elapsed.as_secs_f64(),
            C2_RUNTIME.as_secs()
        ),
    })
}

fn criterion_3(solver: &DirectSolver, v: &Potential) -> Result<Line> {
    let mut err: f64 = 0.0;
    for z in [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] {
        err = err.max(solver.fundamental_solution(z)?.max_diff(&integrate_canonical(v, z)?));
    }
    Ok(Line {
        id: 3,
        passed: err <= C3_ERROR,
        detail: format!("direct formulas vs ODE, n = 200, lambda in {{0, 1}}: {err:.2e} <= {C3_ERROR:.0e}"),
    })
}

fn criterion_4(solver: &DirectSolver, v: &Potential) -> Result<Line> {
    let mut ode: f64 = 0.0;
    let mut direct: f64 = 0.0;
    for z in [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 1.0)] {
        ode = ode.max(integrate_canonical(v, z)?.j_unitarity_residual(&integrate_canonical(v, z.conj())?));
        direct = direct.max(solver.fundamental_solution(z)?.j_unitarity_residual(&solver.fundamental_solution(z.conj())?));
    }
    Ok(Line {
        id: 4,
        passed: ode <= C4_ODE && direct <= C4_DIRECT,
        detail: format!("j-unitarity: ODE {ode:.2e} <= {C4_ODE:.0e}, direct formulas {direct:.2e} <= {C4_DIRECT:.0e}"),
    })
}

fn criterion_5() -> Result<Line> {
    let start = Instant::now();
    let g = grid(200);
    let c = constant_triple();
    let k1 = accelerant_from_potential(&pe_potential(&c, &g)?, TOL)?;
    let e1 = interior(k1.samples(), pe_accelerant(&c, &g)?.samples());
    let tr = triple();
    let k2 = accelerant_from_potential(&pe_potential(&tr, &g)?, TOL)?;
    let e2 = interior(k2.samples(), pe_accelerant(&tr, &g)?.samples());
    let elapsed = start.elapsed();
    Ok(Line {
        id: 5,
        passed: e1 <= C5_CONSTANT && e2 <= C5_PE && elapsed <= C5_RUNTIME,
        detail: format!(
            "reconstruction, interior nodes: constant {e1:.2e} <= {C5_CONSTANT:.0e}, nn = 2 {e2:.2e} <= {C5_PE:.0e}, \
             time {:.2}s <= {}s",
            elapsed.as_secs_f64(),
            C5_RUNTIME.as_secs()
        ),
    })
}

fn criterion_6() -> Result<Line> {
    let g = grid(200);
    let tr = triple();
    let cases: Vec<(&str, Accelerant, Potential)> = vec![
        ("zero", Accelerant::zero(&g, 1), Potential::zero(&g, 1)),
        ("constant", pe_accelerant(&constant_triple(), &g)?, pe_potential(&constant_triple(), &g)?),
        ("nn = 2", pe_accelerant(&tr, &g)?, pe_potential(&tr, &g)?),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, k, v) in &cases {
        let kvk = accelerant_from_potential(&potential_from_accelerant(k)?, TOL)?;
        let e_k = all_nodes(k.samples(), kvk.samples());
        let vkv = potential_from_accelerant(&accelerant_from_potential(v, TOL)?)?;
        let e_v = all_nodes(v.samples(), vkv.samples());
        worst = worst.max(e_k).max(e_v);
        parts.push(format!("{name}: k->v->k {e_k:.2e}, v->k->v {e_v:.2e}"));
    }
    Ok(Line {
        id: 6,
        passed: worst <= C6_ERROR,
        detail: format!("round trips, all nodes, n = 200 ({}): max {worst:.2e} <= {C6_ERROR:.0e}", parts.join("; ")),
    })
}

fn criterion_7() -> Result<Line> {
    let tr = triple();
    let start = Instant::now();
    let out_dir = tempfile::tempdir().map_err(accelerant::Error::Io)?;
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_accelerant"))
        .args(["verify", "--seed", &SEED.to_string(), "--grid-n", "200", "--out-dir"])
        .arg(out_dir.path())
        .output()
        .map_err(accelerant::Error::Io)?;
    let elapsed = start.elapsed();
    let fine = verify_triple(&tr, &grid(200), TOL)?;
    let coarse = verify_triple(&tr, &grid(100), TOL)?;
    let failed: Vec<String> = fine.failures().iter().map(|c| c.name.clone()).collect();

    // every check with a C h^2 tolerance must also drop at second order
    let h = grid(200).h();
    let mut slow = Vec::new();
    let mut ordered = 0;
    for c in &fine.checks {
        let second_order = c.tolerance == accelerant::verify::tolerance(Bound::Order(2), h);
        let Some(prev) = coarse.get(&c.name) else { continue };
        if second_order && prev.residual > 1e3 * ROUNDING_FLOOR {
            ordered += 1;
            if prev.residual / c.residual < C7_ORDER_RATIO {
                slow.push(format!("{} ({:.2})", c.name, prev.residual / c.residual));
            }
        }
    }
    let passed = fine.all_passed() && slow.is_empty() && status.status.success() && elapsed <= C7_RUNTIME;
    Ok(Line {
        id: 7,
        passed,
        detail: format!(
            "invariant suite, nn = 2, n = 200: {}/{} within max({TOLERANCE_FLOOR:.0e}, {SUITE_C} h^p) or fixed bounds{}; \
             {ordered} second-order residuals drop >= {C7_ORDER_RATIO}x from n = 100{}; `verify` exit {:?}, \
             time {:.2}s <= {}s",
            fine.checks.len() - failed.len(),
            fine.checks.len(),
            if failed.is_empty() { String::new() } else { format!(" (failed: {})", failed.join(", ")) },
            if slow.is_empty() { String::new() } else { format!(" (slow: {})", slow.join(", ")) },
            status.status.code(),
            elapsed.as_secs_f64(),
            C7_RUNTIME.as_secs()
        ),
    })
}

fn criterion_8() -> Result<Line> {
    let g = grid(200);
    let v = Potential::from_fn(&g, |t| {
        let a = C64::new(0.0, 2.0) / (C64::new(1.0, 0.0) + C64::new(0.0, -2.0 * t).exp());
        scalar(-C64::i() * a)
    })?;
    let rec = reconstruct(&v, TOL, true)?;
    let jump = max_abs(&rec.k.jump());
    Ok(Line {
        id: 8,
        passed: jump > C8_JUMP,
        detail: format!(
            "non-continuous accelerant: validations pass ({} Neumann terms), |k(0+) - k(0+)*| = {jump:.3} > {C8_JUMP}",
            rec.diagnostics.neumann_terms
        ),
    })
}

fn report(id: usize, r: Result<Line>) -> Line {
    r.unwrap_or_else(|e| Line { id, passed: false, detail: format!("error: {e}") })
}

fn main() {
    let g = grid(200);
    let k = pe_accelerant(&triple(), &g).unwrap();
    let solver = DirectSolver::new(&k).unwrap();
    let v = solver.potential().unwrap();
    let lines = vec![
        report(1, criterion_1()),
        report(2, criterion_2()),
        report(3, criterion_3(&solver, &v)),
        report(4, criterion_4(&solver, &v)),
        report(5, criterion_5()),
        report(6, criterion_6()),
        report(7, criterion_7()),
        report(8, criterion_8()),
    ];
    for l in &lines {
        println!("criterion {}: {} | {}", l.id, if l.passed { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
