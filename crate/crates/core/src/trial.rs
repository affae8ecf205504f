//! Trial maps for the second eigenvalue built by folding along a cap.
//!
//! Start from `f = φ_ξ ∘ Ψ` with `ξ` chosen so that `∫ f = 0`. For a cap `C`,
//! fold `f` onto `C`, renormalize the folded measure with `ξ_C`, and measure
//! the correlation `h(C) = ∫ (φ_{ξ_C} ∘ F_C ∘ f) f₁` against a first
//! eigenfunction `f₁`. A cap with `h = 0` yields four admissible trial
//! functions.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{psi3_sup_energy, sample_map, MapSample, TorusGrid, TrigMap};
use crate::error::{Error, Result};
use crate::flat_spectrum::{eigenfunction_eval, enumerate_spectrum, Mode, Parity};
use crate::moduli::TorusParams;
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::sphere::{
    dot, norm, reflect_into, renormalize_from, BallPoint, Cap, CapMaps, DiscreteMeasure, MobiusMap, RenormalizeOptions,
    SpherePoint,
};

/// Nodes whose pull-back lies within this height of the cap boundary are
/// treated as inside.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Renormalization tolerance used throughout the construction.
pub const RENORM_TOL: f64 = 1e-11;

/// Relative search threshold: `|h| < SEARCH_RTOL · ‖f₁‖ · mass`.
pub const SEARCH_RTOL: f64 = 1e-6;

const T_RANGE: f64 = 0.95;

/// A unit vector in the first eigenspace:
/// `√(2/b) (cos(angle)·f_parity + sin(angle)·f_other)` for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F1Choice {
    pub mode: Mode,
    pub parity: Parity,
    pub angle: f64,
}

impl F1Choice {
    /// The first mode of the `λ₁` entry, cosine parity, angle 0.
    pub fn default_for(params: &TorusParams) -> Result<Self> {
        let spec = enumerate_spectrum(params, 1)?;
        let entry = spec.entry_of(1).expect("spectrum covers index 1");
        Ok(Self {
            mode: entry.modes[0],
            parity: Parity::Cos,
            angle: 0.0,
        })
    }

    pub fn eval(&self, params: &TorusParams, x: f64, y: f64) -> f64 {
        let scale = (2.0 / params.b()).sqrt();
        let (s, c) = self.angle.sin_cos();
        scale
            * (c * eigenfunction_eval(params, self.mode, self.parity, x, y)
                + s * eigenfunction_eval(params, self.mode, self.parity.other(), x, y))
    }
}

#[derive(Debug, Clone)]
pub struct TrialContext {
    params: TorusParams,
    r: f64,
    grid: TorusGrid,
    f1_choice: F1Choice,
    f1: Vec<f64>,
    xi: BallPoint,
    renorm_residual: f64,
    /// Sample of `φ_ξ ∘ Ψ`.
    sample: MapSample,
    correlation: [f64; 4],
}

impl TrialContext {
    pub fn params(&self) -> &TorusParams {
        &self.params
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn f1_choice(&self) -> &F1Choice {
        &self.f1_choice
    }

    pub fn f1(&self) -> &[f64] {
        &self.f1
    }

    pub fn xi(&self) -> &BallPoint {
        &self.xi
    }

    pub fn renorm_residual(&self) -> f64 {
        self.renorm_residual
    }

    pub fn sample(&self) -> &MapSample {
        &self.sample
    }

    pub fn mass(&self) -> f64 {
        self.params.b()
    }

    /// `∫ f₁²` by quadrature.
    pub fn f1_norm(&self) -> f64 {
        self.grid
            .integrate(&self.f1.iter().map(|v| v * v).collect::<Vec<_>>())
            .sqrt()
    }

    /// `∫ (φ_ξ ∘ Ψ) f₁`.
    pub fn correlation(&self) -> [f64; 4] {
        self.correlation
    }

    pub fn threshold(&self) -> f64 {
        SEARCH_RTOL * self.f1_norm() * self.mass()
    }

    /// False when `φ_ξ ∘ Ψ` is already orthogonal to `f₁`.
    pub fn needs_folding(&self) -> bool {
        norm(&self.correlation) >= self.threshold()
    }
}

pub fn build_context(params: TorusParams, r: f64, grid: TorusGrid, f1_choice: F1Choice) -> Result<TrialContext> {
    if grid.params() != &params {
        return Err(Error::InvalidParams("grid belongs to a different torus".into()));
    }
    let psi = TrigMap::psi3(params, r)?;
    let raw = sample_map(&grid, &psi, true);
    let w = grid.cell_weight();
    let measure = DiscreteMeasure::new(4, raw.values().to_vec(), vec![w; grid.len()])?;
    let renorm = renormalize_from(
        &measure,
        &BallPoint::origin(4),
        RenormalizeOptions {
            tol: RENORM_TOL,
            ..Default::default()
        },
    )?;
    let sample = raw.compose_mobius(&MobiusMap::new(&renorm.xi));
    let f1: Vec<f64> = (0..grid.len())
        .map(|k| {
            let (x, y) = grid.point(k);
            f1_choice.eval(&params, x, y)
        })
        .collect();
    let mut correlation = [0.0; 4];
    for (k, fk) in f1.iter().enumerate() {
        for (c, v) in correlation.iter_mut().zip(sample.value(k)) {
            *c += w * fk * v;
        }
    }
    Ok(TrialContext {
        params,
        r,
        grid,
        f1_choice,
        f1,
        xi: renorm.xi,
        renorm_residual: renorm.residual,
        sample,
        correlation,
    })
}

/// `h` at one cap, with the data behind it.
#[derive(Debug, Clone, Serialize)]
pub struct HEval {
    pub h: [f64; 4],
    pub norm: f64,
    pub xi_c: BallPoint,
    pub renorm_residual: f64,
    /// Fraction of nodes that were reflected.
    pub reflected_fraction: f64,
}

struct Folded {
    points: Vec<f64>,
    inside: Vec<bool>,
    boundary: Vec<bool>,
    preimages: Vec<f64>,
}

fn fold_sample(ctx: &TrialContext, maps: &CapMaps) -> Result<Folded> {
    let n = ctx.grid.len();
    let mut points = vec![0.0; 4 * n];
    let mut preimages = vec![0.0; 4 * n];
    let mut inside = vec![false; n];
    let mut boundary = vec![false; n];
    for k in 0..n {
        let x = ctx.sample.value(k);
        let side = maps.side(x)?;
        boundary[k] = side.height.abs() < BOUNDARY_BAND;
        inside[k] = side.height > -BOUNDARY_BAND;
        let out = &mut points[4 * k..4 * k + 4];
        if inside[k] {
            out.copy_from_slice(x);
        } else {
            maps.reflect_from_preimage(&side.preimage, out);
        }
        preimages[4 * k..4 * k + 4].copy_from_slice(&side.preimage);
    }
    Ok(Folded {
        points,
        inside,
        boundary,
        preimages,
    })
}

fn h_from_folded(ctx: &TrialContext, folded: &Folded) -> Result<HEval> {
    let w = ctx.grid.cell_weight();
    let measure = DiscreteMeasure::new(4, folded.points.clone(), vec![w; ctx.grid.len()])?;
    let renorm = renormalize_from(
        &measure,
        &BallPoint::origin(4),
        RenormalizeOptions {
            tol: RENORM_TOL,
            ..Default::default()
        },
    )?;
    let map = MobiusMap::new(&renorm.xi);
    let mut h = [0.0; 4];
    let mut img = [0.0; 4];
    for (k, x) in measure.points().chunks(4).enumerate() {
        map.apply_into(x, &mut img);
        for i in 0..4 {
            h[i] += w * ctx.f1[k] * img[i];
        }
    }
    let reflected = folded.inside.iter().filter(|&&i| !i).count();
    Ok(HEval {
        h,
        norm: norm(&h),
        xi_c: renorm.xi,
        renorm_residual: renorm.residual,
        reflected_fraction: reflected as f64 / ctx.grid.len() as f64,
    })
}

/// `h(C) = ∫ (φ_{ξ_C} ∘ F_C ∘ φ_ξ ∘ Ψ) f₁`.
pub fn vector_h(ctx: &TrialContext, cap: &Cap) -> Result<HEval> {
    if cap.center().dim() != 4 {
        return Err(Error::OutOfRange("cap must lie on S³".into()));
    }
    let folded = fold_sample(ctx, &cap.maps())?;
    h_from_folded(ctx, &folded)
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizedH {
    pub eval: HEval,
    /// `h/|h|`, absent when `|h| <= 1e-12`.
    pub unit: Option<[f64; 4]>,
}

pub fn normalized_h(ctx: &TrialContext, cap: &Cap) -> Result<NormalizedH> {
    let eval = vector_h(ctx, cap)?;
    let unit = (eval.norm > 1e-12).then(|| eval.h.map(|v| v / eval.norm));
    Ok(NormalizedH { eval, unit })
}

/// Directions for the coarse cap grid: `±eᵢ` followed by the first
/// `2·density` points of a Halton(2,3,5) sequence mapped uniformly onto S³.
/// The list for `2·density` extends the list for `density`.
pub fn search_directions(density: usize) -> Vec<[f64; 4]> {
    let mut dirs = Vec::with_capacity(8 + 2 * density);
    for i in 0..4 {
        for s in [1.0, -1.0] {
            let mut v = [0.0; 4];
            v[i] = s;
            dirs.push(v);
        }
    }
    for k in 1..=2 * density {
        let (u1, u2, u3) = (radical_inverse(k, 2), radical_inverse(k, 3), radical_inverse(k, 5));
        let (c, d) = ((1.0 - u1).sqrt(), u1.sqrt());
        let (s2, c2) = (2.0 * PI * u2).sin_cos();
        let (s3, c3) = (2.0 * PI * u3).sin_cos();
        dirs.push([c * s2, c * c2, d * s3, d * c3]);
    }
    dirs
}

fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let (mut inv, mut f) = (0.0, 1.0 / base as f64);
    while k > 0 {
        inv += (k % base) as f64 * f;
        k /= base;
        f /= base as f64;
    }
    inv
}

/// `t_j = 0.95 (2j - density)/density`, `j = 0..=density`; contains 0 for
/// even densities and nests under doubling.
pub fn search_heights(density: usize) -> Vec<f64> {
    (0..=density)
        .map(|j| T_RANGE * (2.0 * j as f64 - density as f64) / density as f64)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CapCandidate {
    pub p: [f64; 4],
    pub t: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapSearch {
    /// `None` when no folding is needed (the whole sphere works).
    pub cap: Option<Cap>,
    pub residual: f64,
    pub threshold: f64,
    pub success: bool,
    /// Best residual over the coarse grid alone.
    pub coarse_residual: f64,
    /// Every evaluated cap with residual below the threshold.
    pub below_threshold: Vec<CapCandidate>,
    pub evaluations: usize,
}

/// Search `(p,t) ∈ S³ × (-0.95, 0.95)` for a cap with `h = 0`: a coarse grid
/// followed by Nelder–Mead on `(p, t)` from the best grid point.
pub fn search_orthogonal_cap(ctx: &TrialContext, density: usize) -> Result<CapSearch> {
    if density < 2 {
        return Err(Error::OutOfRange("grid density must be at least 2".into()));
    }
    let threshold = ctx.threshold();
    if !ctx.needs_folding() {
        return Ok(CapSearch {
            cap: None,
            residual: 0.0,
            threshold,
            success: true,
            coarse_residual: 0.0,
            below_threshold: Vec::new(),
            evaluations: 0,
        });
    }
    let residual_at = |p: &[f64], t: f64| -> f64 {
        let Ok(center) = SpherePoint::new(p.to_vec()) else {
            return f64::INFINITY;
        };
        let Ok(cap) = Cap::new(center, t) else {
            return f64::INFINITY;
        };
        vector_h(ctx, &cap).map(|e| e.norm).unwrap_or(f64::INFINITY)
    };

    let dirs = search_directions(density);
    let heights = search_heights(density);
    let candidates: Vec<([f64; 4], f64)> = dirs
        .iter()
        .flat_map(|p| heights.iter().map(move |&t| (*p, t)))
        .collect();
    let coarse: Vec<CapCandidate> = candidates
        .par_iter()
        .map(|&(p, t)| CapCandidate {
            p,
            t,
            residual: residual_at(&p, t),
        })
        .collect();
    let mut evaluations = coarse.len();
    // first minimum in candidate order breaks ties
    let best = coarse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.residual.total_cmp(&b.1.residual).then(a.0.cmp(&b.0)))
        .map(|(_, c)| c.clone())
        .ok_or_else(|| Error::OutOfRange("empty cap grid".into()))?;
    let coarse_residual = best.residual;
    let mut below: Vec<CapCandidate> = coarse.iter().filter(|c| c.residual < threshold).cloned().collect();

    let mut best_p = best.p;
    let mut best_t = best.t;
    let mut best_r = best.residual;
    if best_r >= threshold {
        let start = [best.p[0], best.p[1], best.p[2], best.p[3], best.t];
        let objective = |z: &[f64]| {
            if z[4].abs() >= 0.999 || norm(&z[..4]) < 1e-3 {
                return 1e30;
            }
            residual_at(&z[..4], z[4])
        };
        let res = nelder_mead(
            objective,
            &start,
            NelderMeadOptions {
                initial_step: 0.05,
                max_evals: 600,
                f_tol: threshold * 1e-3,
                x_tol: 1e-8,
            },
        );
        evaluations += res.evals;
        if res.value < best_r {
            let n = norm(&res.x[..4]);
            best_p = [res.x[0] / n, res.x[1] / n, res.x[2] / n, res.x[3] / n];
            best_t = res.x[4];
            best_r = res.value;
            if best_r < threshold {
                below.push(CapCandidate {
                    p: best_p,
                    t: best_t,
                    residual: best_r,
                });
            }
        }
    }
    Ok(CapSearch {
        cap: Some(Cap::new(SpherePoint::new(best_p.to_vec())?, best_t)?),
        residual: best_r,
        threshold,
        success: best_r < threshold,
        coarse_residual,
        below_threshold: below,
        evaluations,
    })
}

/// Admissibility and energy data for the trial map at a cap.
#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub h: [f64; 4],
    /// `∫ Gᵢ / mass` for the four components of the trial map `G`.
    pub means: [f64; 4],
    /// `∫ Gᵢ f₁`.
    pub correlations: [f64; 4],
    /// `E(G) = ½ ∫ |∇G|²`.
    pub energy: f64,
    /// `λ₂ · area <= 2 E(G)`, the Rayleigh bound from the four components.
    pub rayleigh_bound: f64,
    /// `sup_ξ E(φ_ξ ∘ Ψ)` in closed form.
    pub sup_energy: f64,
    /// `E(F_C ∘ φ_ξ ∘ Ψ)` over the whole torus.
    pub fold_energy: f64,
    /// `∫` of the unfolded energy density over the preimage of the cap.
    pub inside_energy: f64,
    /// `|fold_energy - 2·inside_energy| / fold_energy`.
    pub fold_halving_defect: f64,
}

/// Assemble the trial map `G = φ_{ξ_C} ∘ F_C ∘ φ_ξ ∘ Ψ` with analytic partials.
pub fn trial_report(ctx: &TrialContext, cap: &Cap) -> Result<TrialReport> {
    let maps = cap.maps();
    let folded = fold_sample(ctx, &maps)?;
    let heval = h_from_folded(ctx, &folded)?;
    let outer = MobiusMap::new(&heval.xi_c);
    let n = ctx.grid.len();
    let w = ctx.grid.cell_weight();
    let (mut values, mut dx, mut dy) = (vec![0.0; 4 * n], vec![0.0; 4 * n], vec![0.0; 4 * n]);
    let (mut fdx, mut fdy) = (vec![0.0; 4 * n], vec![0.0; 4 * n]);
    let mut inside_energy = 0.0;
    for k in 0..n {
        let s = &ctx.sample;
        let r = 4 * k..4 * k + 4;
        if folded.inside[k] {
            fdx[r.clone()].copy_from_slice(s.dx(k));
            fdy[r.clone()].copy_from_slice(s.dy(k));
            // trapezoid weight 1/2 on the boundary
            let share = if folded.boundary[k] { 0.5 } else { 1.0 };
            inside_energy += share * 0.5 * w * s.grad_sq(k);
        } else {
            let y = &folded.preimages[r.clone()];
            maps.reflect_differential(y, s.dx(k), &mut fdx[r.clone()]);
            maps.reflect_differential(y, s.dy(k), &mut fdy[r.clone()]);
        }
        let x = &folded.points[r.clone()];
        outer.apply_into(x, &mut values[r.clone()]);
        outer.differential_into(x, &fdx[r.clone()], &mut dx[r.clone()]);
        outer.differential_into(x, &fdy[r.clone()], &mut dy[r.clone()]);
    }
    let fold_energy = 0.5
        * w
        * (0..n)
            .map(|k| {
                dot(&fdx[4 * k..4 * k + 4], &fdx[4 * k..4 * k + 4])
                    + dot(&fdy[4 * k..4 * k + 4], &fdy[4 * k..4 * k + 4])
            })
            .sum::<f64>();
    let g = MapSample::from_parts(4, values, dx, dy);
    let energy = crate::energy::dirichlet_energy(&g, &ctx.grid);
    let mass = ctx.mass();
    let mut means = [0.0; 4];
    let mut correlations = [0.0; 4];
    for k in 0..n {
        for i in 0..4 {
            means[i] += w * g.value(k)[i] / mass;
            correlations[i] += w * g.value(k)[i] * ctx.f1[k];
        }
    }
    Ok(TrialReport {
        h: heval.h,
        means,
        correlations,
        energy,
        rayleigh_bound: 2.0 * energy,
        sup_energy: psi3_sup_energy(&ctx.params, ctx.r)?,
        fold_energy,
        inside_energy,
        fold_halving_defect: (fold_energy - 2.0 * inside_energy).abs() / fold_energy,
    })
}

/// `|H(p,0) - R_p H(-p,0)|`; `None` when either `h` vanishes.
pub fn hemisphere_symmetry_residual(ctx: &TrialContext, p: &SpherePoint) -> Result<Option<f64>> {
    let plus = normalized_h(ctx, &Cap::hemisphere(p.clone()))?;
    let minus = normalized_h(ctx, &Cap::hemisphere(p.neg()))?;
    Ok(match (plus.unit, minus.unit) {
        (Some(u), Some(mut v)) => {
            reflect_into(p.as_slice(), &mut v);
            Some(u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        }
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_context(n: usize, r: f64) -> TrialContext {
        let params = TorusParams::square();
        let grid = TorusGrid::square(params, n).unwrap();
        build_context(params, r, grid, F1Choice::default_for(&params).unwrap()).unwrap()
    }

    #[test]
    fn default_f1_is_lowest_cosine() {
        let f = F1Choice::default_for(&TorusParams::square()).unwrap();
        assert_eq!(f.mode, Mode::canonical(1, 0));
        assert_eq!(f.parity, Parity::Cos);
    }

    #[test]
    fn context_invariants() {
        let ctx = square_context(32, 0.55);
        let n = ctx.grid.len();
        let w = ctx.grid.cell_weight();
        let mean: f64 = ctx.f1.iter().sum::<f64>() * w;
        assert!(mean.abs() < 1e-10);
        assert!((ctx.f1_norm() - 1.0).abs() < 1e-10);
        let mut c = [0.0; 4];
        for k in 0..n {
            for (ci, v) in c.iter_mut().zip(ctx.sample.value(k)) {
                *ci += w * v;
            }
        }
        assert!(norm(&c) < 1e-10);
        // the symmetric square torus needs no renormalization
        assert!(ctx.xi.norm() < 1e-12);
        let want = (0.55f64).sqrt() * (0.5f64).sqrt();
        assert!((ctx.correlation[0] - want).abs() < 1e-12);
        assert!(ctx.correlation[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(ctx.needs_folding());
    }

    #[test]
    fn orthogonal_f1_needs_no_folding() {
        let params = TorusParams::square();
        let grid = TorusGrid::square(params, 32).unwrap();
        // mode (1,1) is orthogonal to every component of Ψ
        let f1 = F1Choice {
            mode: Mode::canonical(1, 1),
            parity: Parity::Cos,
            angle: 0.3,
        };
        let ctx = build_context(params, 0.55, grid, f1).unwrap();
        assert!(!ctx.needs_folding());
        let search = search_orthogonal_cap(&ctx, 4).unwrap();
        assert!(search.cap.is_none() && search.residual == 0.0);
    }

    #[test]
    fn boundary_limit_is_correlation() {
        let ctx = square_context(32, 0.55);
        let c = ctx.correlation();
        let cn = norm(&c);
        for p in search_directions(4).iter().take(6) {
            let cap = Cap::new(SpherePoint::new(p.to_vec()).unwrap(), 0.999).unwrap();
            let h = normalized_h(&ctx, &cap).unwrap().unit.unwrap();
            let dev: f64 = h.iter().zip(&c).map(|(a, b)| (a - b / cn).powi(2)).sum::<f64>().sqrt();
            assert!(dev < 1e-3, "{dev}");
        }
    }

    #[test]
    fn hemisphere_symmetry() {
        let ctx = square_context(32, 0.6);
        for p in search_directions(4).iter().skip(8).take(5) {
            let res = hemisphere_symmetry_residual(&ctx, &SpherePoint::new(p.to_vec()).unwrap()).unwrap();
            assert!(res.unwrap() < 1e-8);
        }
    }

    #[test]
    fn folded_measure_is_renormalized() {
        let ctx = square_context(32, 0.6);
        let cap = Cap::new(SpherePoint::new(vec![0.3, -0.5, 0.2, 0.7]).unwrap(), 0.4).unwrap();
        let e = vector_h(&ctx, &cap).unwrap();
        assert!(e.renorm_residual < 1e-10);
        assert!(e.reflected_fraction > 0.0);
    }

    #[test]
    fn heights_and_directions_nest() {
        assert!(search_heights(16).contains(&0.0));
        let h8 = search_heights(8);
        let h16 = search_heights(16);
        assert!(h8.iter().all(|t| h16.contains(t)));
        let d8 = search_directions(8);
        assert_eq!(&search_directions(16)[..d8.len()], &d8[..]);
        assert!(d8.iter().all(|d| (norm(d) - 1.0).abs() < 1e-15));
    }

    #[test]
    fn search_finds_orthogonal_cap() {
        let ctx = square_context(32, 0.55);
        let s = search_orthogonal_cap(&ctx, 4).unwrap();
        assert!(s.success, "{}", s.residual);
        let report = trial_report(&ctx, s.cap.as_ref().unwrap()).unwrap();
        assert!(report.means.iter().all(|m| m.abs() < 1e-8));
        assert!(report.correlations.iter().all(|c| c.abs() < 1e-6));
        assert!(report.energy <= 2.0 * report.sup_energy);
        assert!(report.fold_halving_defect < 1e-6, "{}", report.fold_halving_defect);
    }
}
