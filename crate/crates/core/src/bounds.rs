//! Closed-form upper bound for `λ̄₂` on a conformal class of flat tori.
//!
//! With `s = a² + b²` and `S = sqrt(s (8 + s))`,
//!
//! ```text
//! U(a,b) = 16π² / (3√6 b) · sqrt(2 + s + S) / (s + S) · (3 s + S)
//! ```
//!
//! is the minimum over `r ∈ (2/3, 1)` of the energy profile
//! `F(r) = 16π² (s (1 - r) + r) / (3√3 b r sqrt(1 - r))`, attained at
//! `r₀ = 4 s / (3 s + S)`. The competing branch on `r ∈ [1/2, 2/3]` is
//! `8π² (s + 2) / (3 b)`, never smaller than `F(r₀)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moduli::TorusParams;
use crate::optimize::bisect;

const PI2: f64 = PI * PI;

/// Band around `s = 1` in which `r₀` is replaced by its limit `2/3`.
pub const DEGENERATE_BAND: f64 = 1e-9;

/// Upper end of the `b` interval searched by [`threshold_b`].
pub const THRESHOLD_B_MAX: f64 = 100.0;

/// The conjectured supremum `8π²/√3 + 8π` of `λ̄₂` over all tori.
pub fn conjectured_sup() -> f64 {
    8.0 * PI2 / 3f64.sqrt() + 8.0 * PI
}

/// `8π²/√3`, the maximal first normalized eigenvalue on tori.
pub fn lambda1_torus_max() -> f64 {
    8.0 * PI2 / 3f64.sqrt()
}

/// `16π²/√3`, the value of `U` at the equilateral torus.
pub fn uniform_bound() -> f64 {
    16.0 * PI2 / 3f64.sqrt()
}

/// Every intermediate quantity of the bound at one point of moduli space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub a: f64,
    pub b: f64,
    pub in_region: bool,
    /// `a² + b²`
    pub s: f64,
    #[serde(rename = "S")]
    pub big_s: f64,
    pub r0: f64,
    pub low_branch: f64,
    #[serde(rename = "F_at_r0")]
    pub f_at_r0: f64,
    #[serde(rename = "U")]
    pub u: f64,
}

#[inline]
fn big_s(s: f64) -> f64 {
    (s * (8.0 + s)).sqrt()
}

#[inline]
fn profile(s: f64, b: f64, r: f64) -> f64 {
    16.0 * PI2 * (s * (1.0 - r) + r) / (3.0 * 3f64.sqrt() * b * r * (1.0 - r).sqrt())
}

/// The bound `U(a, b)`. Defined for any `b > 0`; only meaningful on the
/// fundamental region.
pub fn upper_bound_u(params: &TorusParams) -> f64 {
    let s = params.s();
    let ss = big_s(s);
    16.0 * PI2 / (3.0 * 6f64.sqrt() * params.b()) * (2.0 + s + ss).sqrt() / (s + ss) * (3.0 * s + ss)
}

/// The energy profile `F(r)` on the open interval `(2/3, 1)`.
pub fn profile_f(params: &TorusParams, r: f64) -> Result<f64> {
    if !(r > 2.0 / 3.0 && r < 1.0) {
        return Err(Error::OutOfRange(format!("r = {r} is outside (2/3, 1)")));
    }
    Ok(profile(params.s(), params.b(), r))
}

/// Minimizer `r₀` of `F`, with the limit `2/3` on the arc `a² + b² = 1`.
///
/// Evaluated as `4s / (3s + S)`, the rationalized form of
/// `(3s - S) / (2(s - 1))`, which has no cancellation near `s = 1`.
pub fn r_star(params: &TorusParams) -> f64 {
    let s = params.s();
    if (s - 1.0).abs() < DEGENERATE_BAND {
        return 2.0 / 3.0;
    }
    4.0 * s / (3.0 * s + big_s(s))
}

/// `8π² (a² + b² + 2) / (3b)`: the bound from `r ∈ [1/2, 2/3]`.
pub fn branch_bound_low(params: &TorusParams) -> f64 {
    8.0 * PI2 * (params.s() + 2.0) / (3.0 * params.b())
}

pub fn bound_breakdown(params: &TorusParams) -> BoundBreakdown {
    let s = params.s();
    let r0 = r_star(params);
    BoundBreakdown {
        a: params.a(),
        b: params.b(),
        in_region: params.is_in_fundamental_region(),
        s,
        big_s: big_s(s),
        r0,
        low_branch: branch_bound_low(params),
        f_at_r0: profile(s, params.b(), r0),
        u: upper_bound_u(params),
    }
}

/// `a² + b² - a`, the quantity selecting the conformal-area branch.
#[inline]
pub fn bryant_parameter(params: &TorusParams) -> f64 {
    params.s() - params.a()
}

/// Conformal area of `T_{a,b}` (two branches split at `a² + b² - a = 2`).
pub fn conformal_area(params: &TorusParams) -> f64 {
    let c = bryant_parameter(params);
    let b = params.b();
    if c <= 2.0 + 1e-12 {
        4.0 * PI2 * b / (1.0 + c)
    } else {
        8.0 * PI2 * b * (1.0 + c).sqrt() / (3.0 * 3f64.sqrt() * c)
    }
}

/// Closed-form `∂U/∂a`.
pub fn partial_du_da(params: &TorusParams) -> f64 {
    let (a, b) = (params.a(), params.b());
    let s = params.s();
    let ss = big_s(s);
    let (a2, b2) = (a * a, b * b);
    let poly = a2 * a2 + 2.0 * a2 * b2 + a2 * ss + 9.0 * a2 + b2 * b2 + b2 * ss + 9.0 * b2 + 5.0 * ss + 8.0;
    128.0 * PI2 * a * s * poly / (3.0 * 6f64.sqrt() * b * ss * (s + ss).powi(2) * (s + ss + 2.0).sqrt())
}

/// Closed-form `∂U/∂b`.
pub fn partial_du_db(params: &TorusParams) -> f64 {
    let (a, b) = (params.a(), params.b());
    let s = params.s();
    let ss = big_s(s);
    let (a2, b2) = (a * a, b * b);
    let a4 = a2 * a2;
    let poly = a4 * a2
        + 2.0 * a4 * b2
        + a4 * ss
        + 10.0 * a4
        + a2 * b2 * b2
        + a2 * b2 * ss
        + 11.0 * a2 * b2
        + 6.0 * a2 * ss
        + 16.0 * a2
        + b2 * b2
        + b2 * ss
        + 8.0 * b2
        + 2.0 * ss;
    -128.0 * PI2 * s * poly / (3.0 * 6f64.sqrt() * b2 * ss * (s + ss).powi(2) * (s + ss + 2.0).sqrt())
}

/// `U - (8π²/√3 + 8π)`; negative values certify the conjectured inequality
/// on this conformal class.
pub fn conjecture_margin(params: &TorusParams) -> f64 {
    upper_bound_u(params) - conjectured_sup()
}

/// Root in `b` of `U(a, b) = target` on `[sqrt(1 - a²), 100]`, by bisection.
pub fn threshold_b(a: f64, target: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&a) {
        return Err(Error::OutOfRange(format!("a = {a} is outside [0, 1/2]")));
    }
    let lo = (1.0 - a * a).sqrt();
    let g = |b: f64| upper_bound_u(&TorusParams::new(a, b).expect("b > 0")) - target;
    // U(a, lo) can equal the target up to rounding (e.g. U(0,1) = 8π²).
    if g(lo).abs() <= 1e-13 * target.abs().max(1.0) {
        return Ok(lo);
    }
    bisect(g, lo, THRESHOLD_B_MAX, 1e-10, "U(a, b) - target")
}

/// `U / A_c` on the first conformal-area branch.
pub fn remark_ratio(params: &TorusParams) -> Result<f64> {
    let c = bryant_parameter(params);
    if c > 2.0 + 1e-12 {
        return Err(Error::OutOfRange(format!(
            "a² + b² - a = {c} exceeds 2; the ratio is only defined on the first branch"
        )));
    }
    Ok(upper_bound_u(params) / conformal_area(params))
}

/// Supremum of `U / A_c` over a grid on `ℳ ∩ {a² + b² - a <= 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemarkReport {
    pub sup_ratio: f64,
    pub argmax_a: f64,
    pub argmax_b: f64,
    pub points: usize,
    pub remark_constant: f64,
    pub exceeds_remark_constant: bool,
    pub exceeds_four: bool,
}

/// Scan `U / A_c` on `steps × steps` points of `ℳ ∩ {a² + b² - a <= 2}`.
///
/// Columns run over `a ∈ [0, 1/2]`; each column spans `b` from the lower arc
/// `sqrt(1 - a²)` to the branch curve `sqrt(2 + a - a²)`.
pub fn remark_scan(steps: usize) -> Result<RemarkReport> {
    if steps < 2 {
        return Err(Error::OutOfRange("remark scan needs at least 2 steps".into()));
    }
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let mut points = 0;
    for i in 0..steps {
        let a = 0.5 * i as f64 / (steps - 1) as f64;
        let b_lo = (1.0 - a * a).sqrt();
        let b_hi = (2.0 + a - a * a).sqrt();
        for j in 0..steps {
            let b = b_lo + (b_hi - b_lo) * j as f64 / (steps - 1) as f64;
            let params = TorusParams::new(a, b)?;
            let ratio = remark_ratio(&params)?;
            points += 1;
            if ratio > best.0 {
                best = (ratio, a, b);
            }
        }
    }
    let remark_constant = 91.0 / 25.0;
    Ok(RemarkReport {
        sup_ratio: best.0,
        argmax_a: best.1,
        argmax_b: best.2,
        points,
        remark_constant,
        exceeds_remark_constant: best.0 >= remark_constant,
        exceeds_four: best.0 > 4.0 + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::golden_section_min;

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs()
    }

    fn tp(a: f64, b: f64) -> TorusParams {
        TorusParams::new(a, b).unwrap()
    }

    #[test]
    fn u_corner_values() {
        assert!(rel(upper_bound_u(&TorusParams::equilateral()), 16.0 * PI2 / 3f64.sqrt()) < 1e-14);
        assert!(rel(upper_bound_u(&TorusParams::square()), 8.0 * PI2) < 1e-14);
    }

    #[test]
    fn u_asymptotics() {
        // s(1 - r0) -> 1 and r0 -> 1, so U levels off at 32π²/(3√3)
        let limit = 32.0 * PI2 / (3.0 * 3f64.sqrt());
        assert!(rel(upper_bound_u(&tp(0.0, 100.0)), limit) < 0.01);
        assert!(rel(upper_bound_u(&tp(0.5, 1e4)), limit) < 1e-6);
    }

    #[test]
    fn profile_limits() {
        let r = 2.0 / 3.0 + 1e-10;
        assert!(rel(profile_f(&TorusParams::square(), r).unwrap(), 8.0 * PI2) < 1e-8);
        assert!(
            rel(
                profile_f(&TorusParams::equilateral(), r).unwrap(),
                16.0 * PI2 / 3f64.sqrt()
            ) < 1e-8
        );
        assert!(profile_f(&TorusParams::square(), 2.0 / 3.0).is_err());
        assert!(profile_f(&TorusParams::square(), 1.0).is_err());
    }

    #[test]
    fn square_profile_minimum_sits_at_left_end() {
        let p = TorusParams::square();
        let (r, f) = golden_section_min(|r| profile_f(&p, r).unwrap(), 2.0 / 3.0 + 1e-12, 1.0 - 1e-9, 1e-12);
        assert!(r - 2.0 / 3.0 < 1e-5);
        assert!(rel(f, 8.0 * PI2) < 1e-9);
    }

    #[test]
    fn r_star_values() {
        assert_eq!(r_star(&TorusParams::square()), 2.0 / 3.0);
        assert!((r_star(&tp(0.0, 2.0)) - (2.0 - 2.0 / 3f64.sqrt())).abs() < 1e-15);
        // the printed 0/0 form, evaluated away from s = 1
        for &(a, b) in &[(0.0, 2.0), (0.3, 1.4), (0.5, 3.0)] {
            let p = tp(a, b);
            let s = p.s();
            let printed = (3.0 * s - (s * (s + 8.0)).sqrt()) / (2.0 * (s - 1.0));
            assert!((r_star(&p) - printed).abs() < 1e-13);
        }
        // numeric limit along s -> 1
        let p = tp(0.0, 1.0 + 1e-7);
        assert!((r_star(&p) - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn r_star_is_argmin() {
        for &(a, b) in &[(0.0, 2.0), (0.3, 1.4), (0.5, 1.76), (0.1, 5.0)] {
            let p = tp(a, b);
            let (r, _) = golden_section_min(|r| profile_f(&p, r).unwrap(), 2.0 / 3.0 + 1e-12, 1.0 - 1e-12, 1e-13);
            assert!((r - r_star(&p)).abs() < 1e-8, "({a},{b}): {r} vs {}", r_star(&p));
        }
    }

    #[test]
    fn low_branch_values() {
        assert!(rel(branch_bound_low(&TorusParams::square()), 8.0 * PI2) < 1e-15);
        assert!(rel(branch_bound_low(&TorusParams::equilateral()), 16.0 * PI2 / 3f64.sqrt()) < 1e-14);
        assert!(rel(branch_bound_low(&tp(0.0, 2.0)), 8.0 * PI2) < 1e-15);
    }

    #[test]
    fn conformal_area_values() {
        assert!(rel(conformal_area(&TorusParams::square()), 2.0 * PI2) < 1e-15);
        assert!(rel(conformal_area(&TorusParams::equilateral()), 4.0 * PI2 / 3f64.sqrt()) < 1e-14);
        let want = 4.0 * PI2 * 5f64.sqrt() / (3.0 * 3f64.sqrt());
        assert!(rel(conformal_area(&tp(0.0, 2.0)), want) < 1e-14);
    }

    #[test]
    fn conformal_area_branches_agree_on_switch_curve() {
        for &a in &[0.0f64, 0.2, 0.5] {
            let b = (2.0 + a - a * a).sqrt();
            let c = 2.0;
            let first = 4.0 * PI2 * b / (1.0 + c);
            let second = 8.0 * PI2 * b * (1.0 + c).sqrt() / (3.0 * 3f64.sqrt() * c);
            assert!(rel(first, second) < 1e-14);
            assert!(rel(conformal_area(&tp(a, b)), first) < 1e-14);
        }
    }

    #[test]
    fn derivative_signs_and_values() {
        assert_eq!(partial_du_da(&tp(0.0, 1.7)), 0.0);
        let p = tp(0.3, 1.5);
        let h = 1e-5;
        let fd_a = (upper_bound_u(&tp(0.3 + h, 1.5)) - upper_bound_u(&tp(0.3 - h, 1.5))) / (2.0 * h);
        let fd_b = (upper_bound_u(&tp(0.3, 1.5 + h)) - upper_bound_u(&tp(0.3, 1.5 - h))) / (2.0 * h);
        assert!(rel(partial_du_da(&p), fd_a) < 1e-6);
        assert!(rel(partial_du_db(&p), fd_b) < 1e-6);
        assert!(partial_du_da(&p) > 0.0 && partial_du_db(&p) < 0.0);
    }

    #[test]
    fn conjecture_margin_values() {
        let m = conjecture_margin(&TorusParams::equilateral());
        assert!((m - (8.0 * PI2 / 3f64.sqrt() - 8.0 * PI)).abs() < 1e-12 && m > 0.0);
        assert!(conjecture_margin(&tp(0.5, 1.8)) < 0.0);
        let m = conjecture_margin(&TorusParams::square());
        assert!((m - (8.0 * PI2 - 8.0 * PI2 / 3f64.sqrt() - 8.0 * PI)).abs() < 1e-12);
        assert!((m - 8.2).abs() < 0.1);
    }

    #[test]
    fn threshold_values() {
        let b = threshold_b(0.5, conjectured_sup()).unwrap();
        assert!(b > 1.70 && b < 1.76, "{b}");
        assert!((threshold_b(0.0, 8.0 * PI2).unwrap() - 1.0).abs() < 1e-10);
        let b = threshold_b(0.5, 16.0 * PI2 / 3f64.sqrt()).unwrap();
        assert!((b - 3f64.sqrt() / 2.0).abs() < 1e-10);
        assert!(matches!(threshold_b(0.5, 1.0), Err(Error::NoBracket { .. })));
        assert!(threshold_b(0.7, 100.0).is_err());
    }

    #[test]
    fn breakdown_invariants() {
        for &(a, b) in &[(0.0, 1.0), (0.5, 0.8660254037844386), (0.2, 1.3), (0.5, 4.0)] {
            let bd = bound_breakdown(&tp(a, b));
            assert!(bd.big_s >= 3.0 - 1e-12);
            assert!(bd.f_at_r0 <= bd.low_branch * (1.0 + 1e-12));
            assert!(rel(bd.f_at_r0, bd.u) < 1e-12);
        }
    }

    #[test]
    fn remark_ratio_corners_equal_four() {
        assert!((remark_ratio(&TorusParams::square()).unwrap() - 4.0).abs() < 1e-12);
        assert!((remark_ratio(&TorusParams::equilateral()).unwrap() - 4.0).abs() < 1e-12);
        assert!(remark_ratio(&tp(0.0, 2.0)).is_err());
    }
}
