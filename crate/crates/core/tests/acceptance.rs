//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the report reads top to bottom; exits nonzero on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torus_eig::bounds::{conjectured_sup, remark_scan, threshold_b, upper_bound_u};
use torus_eig::verify::{
    derivative_checks, galerkin_suite, ratio_invariance_checks, renormalize_checks, sup_energy_checks,
    threshold_region, trial_suite, uniform_bound_grid, Check,
};
use torus_eig::TorusParams;

const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn from_checks(checks: &[Check]) -> Outcome {
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed()).collect();
    let detail = if failed.is_empty() {
        checks
            .iter()
            .map(|c| format!("{}={:.3e}", c.name, c.measured))
            .collect::<Vec<_>>()
            .join(", ")
    } else {
        failed
            .iter()
            .map(|c| {
                format!(
                    "{} measured {:.3e} tol {:?} {}",
                    c.name,
                    c.measured,
                    c.tolerance,
                    c.note.as_deref().unwrap_or("")
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    };
    Outcome {
        pass: !checks.is_empty() && failed.is_empty(),
        detail,
    }
}

fn criterion(n: usize, limit: Option<Duration>, f: impl FnOnce() -> Outcome, failures: &mut usize) {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    if let Some(limit) = limit {
        if took > limit {
            out.pass = false;
            out.detail
                .push_str(&format!("; over the {:.0} s budget", limit.as_secs_f64()));
        }
    }
    if !out.pass {
        *failures += 1;
    }
    println!(
        "criterion {n} {} ({:.2} s) {}",
        if out.pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        out.detail
    );
}

fn corners() -> Outcome {
    let eq = (upper_bound_u(&TorusParams::equilateral()) - 16.0 * PI * PI / 3f64.sqrt()).abs();
    let sq = (upper_bound_u(&TorusParams::square()) - 8.0 * PI * PI).abs();
    Outcome {
        pass: eq <= 1e-10 && sq <= 1e-10,
        detail: format!("|U(1/2,√3/2) - 16π²/√3| = {eq:.3e}, |U(0,1) - 8π²| = {sq:.3e}"),
    }
}

fn threshold() -> Outcome {
    let root = match threshold_b(0.5, conjectured_sup()) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: format!("bisection failed: {e}"),
            }
        }
    };
    let region = threshold_region(200);
    Outcome {
        pass: root > 1.70 && root < 1.76 && region.passed(),
        detail: format!(
            "root b = {root:.12}, max margin for b >= 1.76 = {:.3e}",
            region.measured
        ),
    }
}

fn trial() -> Outcome {
    let checks: Vec<Check> = trial_suite()
        .into_iter()
        .filter(|c| {
            matches!(
                c.name.as_str(),
                "h-boundary-constancy" | "h-hemisphere-symmetry" | "cap-search" | "fold-energy-halving"
            )
        })
        .collect();
    let mut out = from_checks(&checks);
    out.pass &= checks.len() == 4;
    out
}

fn galerkin() -> Outcome {
    let checks: Vec<Check> = galerkin_suite()
        .into_iter()
        .filter(|c| {
            c.name == "galerkin-flat-exactness" || c.name.starts_with("certificate") || c.name == "lambda1-torus-max"
        })
        .collect();
    let certs = checks.iter().filter(|c| c.name.starts_with("certificate-")).count();
    let mut out = from_checks(&checks);
    if out.pass {
        out.detail = format!(
            "{certs} certificates below U; {}",
            out.detail.split(", certificate-").next().unwrap_or("")
        );
        let l1 = checks
            .iter()
            .find(|c| c.name == "lambda1-torus-max")
            .map(|c| c.measured);
        out.detail
            .push_str(&format!(", max λ̄₁ = {:.6}", l1.unwrap_or(f64::NAN)));
    }
    out.pass &= certs == 15;
    out
}

fn remark() -> Outcome {
    match remark_scan(400) {
        Ok(r) => Outcome {
            pass: true,
            detail: format!(
                "sup U/A_c = {:.15} at ({:.4}, {:.4}); 91/25 = {}: exceeds {}; 4: exceeds {}",
                r.sup_ratio, r.argmax_a, r.argmax_b, r.remark_constant, r.exceeds_remark_constant, r.exceeds_four
            ),
        },
        Err(e) => Outcome {
            pass: false,
            detail: e.to_string(),
        },
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut failures = 0;
    let total = Instant::now();
    criterion(1, None, corners, &mut failures);
    criterion(
        2,
        Some(secs(5)),
        || from_checks(&[uniform_bound_grid(400, 4.0)]),
        &mut failures,
    );
    criterion(3, Some(secs(1)), threshold, &mut failures);
    criterion(
        4,
        None,
        || from_checks(&derivative_checks(&mut ChaCha8Rng::seed_from_u64(SEED), 50)),
        &mut failures,
    );
    criterion(
        5,
        Some(secs(120)),
        || from_checks(&sup_energy_checks(64)),
        &mut failures,
    );
    criterion(
        6,
        None,
        || from_checks(&ratio_invariance_checks(&mut ChaCha8Rng::seed_from_u64(SEED), 10)),
        &mut failures,
    );
    criterion(
        7,
        None,
        || {
            let checks: Vec<Check> = renormalize_checks(&mut ChaCha8Rng::seed_from_u64(SEED))
                .into_iter()
                .filter(|c| c.name != "renormalize-continuity")
                .collect();
            from_checks(&checks)
        },
        &mut failures,
    );
    criterion(8, Some(secs(180)), trial, &mut failures);
    criterion(9, Some(secs(120)), galerkin, &mut failures);
    criterion(10, Some(secs(5)), remark, &mut failures);
    println!(
        "{} of 10 criteria passed in {:.1} s",
        10 - failures,
        total.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
