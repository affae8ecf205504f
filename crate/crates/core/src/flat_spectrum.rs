//! Exact Laplace spectrum of flat tori from the dual lattice.
//!
//! For the lattice `Z(1,0) + Z(a,b)` the eigenvalues are
//! `λ_pq = 4π² (q² + ((p - q a)/b)²)` with eigenfunctions
//! `cos` and `sin` of `2π⟨(q, (p - q a)/b), (x, y)⟩`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moduli::TorusParams;

/// Relative tolerance under which two lattice eigenvalues are merged.
pub const MERGE_RTOL: f64 = 1e-9;

/// Largest spectral index `enumerate_spectrum` accepts.
pub const MAX_INDEX: usize = 10_000;

/// A dual-lattice index on the half lattice `q > 0` or `q = 0, p >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode {
    p: i64,
    q: i64,
}

impl Mode {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q > 0 || (q == 0 && p >= 0) {
            Ok(Self { p, q })
        } else {
            Err(Error::OutOfRange(format!(
                "mode ({p}, {q}) is not on the half lattice q > 0 or (q = 0, p >= 0)"
            )))
        }
    }

    /// Representative of `±(p, q)` on the half lattice.
    pub fn canonical(p: i64, q: i64) -> Self {
        if q > 0 || (q == 0 && p >= 0) {
            Self { p, q }
        } else {
            Self { p: -p, q: -q }
        }
    }

    pub const ZERO: Mode = Mode { p: 0, q: 0 };

    #[inline]
    pub fn p(&self) -> i64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn is_zero(&self) -> bool {
        self.p == 0 && self.q == 0
    }

    /// Number of real eigenfunctions carried by the mode.
    pub fn dimension(&self) -> usize {
        if self.is_zero() {
            1
        } else {
            2
        }
    }

    /// Ordering key used within a merged eigenvalue: `(q, p)`.
    fn order_key(&self) -> (i64, i64) {
        (self.q, self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

impl Parity {
    pub fn other(self) -> Self {
        match self {
            Parity::Cos => Parity::Sin,
            Parity::Sin => Parity::Cos,
        }
    }
}

/// Frequency vector `(q, (p - q a)/b)` of a mode in Cartesian coordinates.
#[inline]
pub fn frequency(params: &TorusParams, mode: Mode) -> [f64; 2] {
    let q = mode.q as f64;
    [q, (mode.p as f64 - q * params.a()) / params.b()]
}

pub fn mode_eigenvalue(params: &TorusParams, mode: Mode) -> f64 {
    let [k1, k2] = frequency(params, mode);
    4.0 * PI * PI * (k1 * k1 + k2 * k2)
}

/// `cos` or `sin` of `2π⟨frequency, (x, y)⟩`.
pub fn eigenfunction_eval(params: &TorusParams, mode: Mode, parity: Parity, x: f64, y: f64) -> f64 {
    let [k1, k2] = frequency(params, mode);
    let phase = 2.0 * PI * (k1 * x + k2 * y);
    match parity {
        Parity::Cos => phase.cos(),
        Parity::Sin => phase.sin(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub modes: Vec<Mode>,
}

/// Distinct eigenvalues in increasing order, each with its multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumList {
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumList {
    /// `λ_k` counted with multiplicity, `λ_0 = 0`.
    pub fn eigenvalue(&self, k: usize) -> Option<f64> {
        let mut seen = 0;
        for e in &self.entries {
            seen += e.multiplicity;
            if k < seen {
                return Some(e.eigenvalue);
            }
        }
        None
    }

    /// The entry that holds `λ_k`.
    pub fn entry_of(&self, k: usize) -> Option<&SpectrumEntry> {
        let mut seen = 0;
        for e in &self.entries {
            seen += e.multiplicity;
            if k < seen {
                return Some(e);
            }
        }
        None
    }

    pub fn total_multiplicity(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// The first `count` eigenvalues repeated according to multiplicity.
    pub fn flattened(&self, count: usize) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.eigenvalue, e.multiplicity))
            .take(count)
            .collect()
    }
}

/// All half-lattice modes with `λ_pq <= cutoff`, sorted by eigenvalue then `(q, p)`.
pub fn modes_below(params: &TorusParams, cutoff: f64) -> Vec<(Mode, f64)> {
    let radius = cutoff.max(0.0).sqrt() / (2.0 * PI);
    let q_max = radius.floor() as i64;
    let (a, b) = (params.a(), params.b());
    let mut out = Vec::new();
    for q in 0..=q_max {
        // |p - q a| <= b * radius
        let center = q as f64 * a;
        let half = b * radius;
        let p_lo = (center - half).floor() as i64;
        let p_hi = (center + half).ceil() as i64;
        for p in p_lo..=p_hi {
            if q == 0 && p < 0 {
                continue;
            }
            let mode = Mode { p, q };
            let lam = mode_eigenvalue(params, mode);
            if lam <= cutoff {
                out.push((mode, lam));
            }
        }
    }
    out.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| x.0.order_key().cmp(&y.0.order_key())));
    out
}

fn merge(sorted: &[(Mode, f64)]) -> Vec<SpectrumEntry> {
    let mut entries: Vec<SpectrumEntry> = Vec::new();
    for &(mode, lam) in sorted {
        match entries.last_mut() {
            Some(last) if (lam - last.eigenvalue).abs() <= MERGE_RTOL * lam.abs().max(last.eigenvalue.abs()) => {
                last.multiplicity += mode.dimension();
                last.modes.push(mode);
            }
            _ => entries.push(SpectrumEntry {
                eigenvalue: lam,
                multiplicity: mode.dimension(),
                modes: vec![mode],
            }),
        }
    }
    for e in &mut entries {
        e.modes.sort_by_key(|m| m.order_key());
    }
    entries
}

/// The shortest prefix of the spectrum covering `λ_0, ..., λ_k`.
///
/// Modes are collected below a cutoff that doubles until at least `k + 1`
/// eigenvalues (with multiplicity) are present; everything below the cutoff is
/// complete, so the returned entries carry their full multiplicities.
pub fn enumerate_spectrum(params: &TorusParams, k: usize) -> Result<SpectrumList> {
    if k > MAX_INDEX {
        return Err(Error::Guard(format!("spectral index {k} exceeds {MAX_INDEX}")));
    }
    let base = mode_eigenvalue(params, Mode { p: 1, q: 0 }).min(mode_eigenvalue(params, Mode { p: 0, q: 1 }));
    let mut cutoff = base;
    loop {
        let modes = modes_below(params, cutoff);
        let count: usize = modes.iter().map(|(m, _)| m.dimension()).sum();
        // The entry straddling the cutoff could be split by merge tolerance;
        // require a margin of one extra eigenvalue.
        if count > k + 1 {
            let entries = merge(&modes);
            let mut seen = 0;
            let mut keep = 0;
            for e in &entries {
                keep += 1;
                seen += e.multiplicity;
                if seen > k {
                    break;
                }
            }
            // make sure the kept prefix is strictly below the cutoff
            if entries[keep - 1].eigenvalue * (1.0 + 2.0 * MERGE_RTOL) < cutoff {
                let mut entries = entries;
                entries.truncate(keep);
                return Ok(SpectrumList { entries });
            }
        }
        cutoff *= 2.0;
    }
}

/// `λ_k · area` for the flat metric.
pub fn normalized_eigenvalue(params: &TorusParams, k: usize) -> Result<f64> {
    let spec = enumerate_spectrum(params, k)?;
    let lam = spec
        .eigenvalue(k)
        .ok_or_else(|| Error::Guard(format!("spectrum enumeration missed index {k}")))?;
    Ok(lam * params.flat_area())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_PI2: f64 = 4.0 * PI * PI;

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs().max(1e-300)
    }

    // Brute force over a box of integer pairs, including both signs; each
    // ±(p,q) pair contributes two eigenfunctions, (0,0) one.
    fn brute_force(params: &TorusParams, range: i64, count: usize) -> Vec<f64> {
        let mut vals = Vec::new();
        for p in -range..=range {
            for q in -range..=range {
                let [k1, k2] = [q as f64, (p as f64 - q as f64 * params.a()) / params.b()];
                vals.push(FOUR_PI2 * (k1 * k1 + k2 * k2));
            }
        }
        vals.sort_by(f64::total_cmp);
        vals.truncate(count);
        vals
    }

    #[test]
    fn mode_validation() {
        assert!(Mode::new(0, 0).is_ok());
        assert!(Mode::new(-3, 1).is_ok());
        assert!(Mode::new(-1, 0).is_err());
        assert!(Mode::new(2, -1).is_err());
        assert_eq!(Mode::canonical(2, -1), Mode::new(-2, 1).unwrap());
    }

    #[test]
    fn mode_eigenvalue_examples() {
        let sq = TorusParams::square();
        assert_eq!(mode_eigenvalue(&sq, Mode::ZERO), 0.0);
        assert!(rel(mode_eigenvalue(&sq, Mode::new(1, 0).unwrap()), FOUR_PI2) < 1e-15);
        let eq = TorusParams::equilateral();
        assert!(rel(mode_eigenvalue(&eq, Mode::new(0, 1).unwrap()), 16.0 * PI * PI / 3.0) < 1e-14);
    }

    #[test]
    fn enumerate_examples() {
        let sq = TorusParams::square();
        let spec = enumerate_spectrum(&sq, 2).unwrap();
        assert_eq!(spec.entries.len(), 2);
        assert_eq!(spec.entries[0].multiplicity, 1);
        assert_eq!(spec.entries[1].multiplicity, 4);
        assert_eq!(
            spec.entries[1].modes,
            vec![Mode::new(1, 0).unwrap(), Mode::new(0, 1).unwrap()]
        );
        assert!(rel(spec.eigenvalue(1).unwrap(), FOUR_PI2) < 1e-15);
        assert!(rel(spec.eigenvalue(2).unwrap(), FOUR_PI2) < 1e-15);

        let eq = enumerate_spectrum(&TorusParams::equilateral(), 1).unwrap();
        let first = eq.entry_of(1).unwrap();
        assert_eq!(first.multiplicity, 6);
        assert!(rel(first.eigenvalue, 16.0 * PI * PI / 3.0) < 1e-12);

        let tall = TorusParams::new(0.0, 2.0).unwrap();
        let spec = enumerate_spectrum(&tall, 1).unwrap();
        assert!(rel(spec.eigenvalue(1).unwrap(), PI * PI) < 1e-15);
        assert_eq!(spec.entry_of(1).unwrap().modes, vec![Mode::new(1, 0).unwrap()]);
    }

    #[test]
    fn enumerate_matches_brute_force() {
        for &(a, b) in &[
            (0.0, 1.0),
            (0.5, 0.8660254037844386),
            (0.3, 1.2),
            (0.17, 2.9),
            (0.44, 0.95),
        ] {
            let params = TorusParams::new(a, b).unwrap();
            let spec = enumerate_spectrum(&params, 40).unwrap();
            let got = spec.flattened(41);
            let want = brute_force(&params, 12, 41);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * w.max(1.0), "({a},{b}): {g} vs {w}");
            }
        }
    }

    #[test]
    fn normalized_examples() {
        let sq = TorusParams::square();
        assert!(rel(normalized_eigenvalue(&sq, 2).unwrap(), FOUR_PI2) < 1e-15);
        assert_eq!(normalized_eigenvalue(&sq, 0).unwrap(), 0.0);
        let eq = TorusParams::equilateral();
        assert!(rel(normalized_eigenvalue(&eq, 1).unwrap(), 8.0 * PI * PI / 3f64.sqrt()) < 1e-12);
    }

    #[test]
    fn guard() {
        assert!(matches!(
            enumerate_spectrum(&TorusParams::square(), MAX_INDEX + 1),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn eigenfunction_examples() {
        let sq = TorusParams::square();
        assert_eq!(
            eigenfunction_eval(&sq, Mode::new(1, 0).unwrap(), Parity::Cos, 0.0, 0.0),
            1.0
        );
        for &y in &[0.0, 0.13, 0.5, 0.77] {
            let v = eigenfunction_eval(&sq, Mode::new(0, 1).unwrap(), Parity::Cos, 0.25, y);
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_residual_is_second_order() {
        let params = TorusParams::new(0.3, 1.2).unwrap();
        let cases = [
            (Mode::new(1, 0).unwrap(), Parity::Cos, 0.11, 0.37),
            (Mode::new(-2, 1).unwrap(), Parity::Sin, 0.71, 0.05),
            (Mode::new(3, 2).unwrap(), Parity::Cos, 0.4, 0.9),
        ];
        for (mode, parity, x, y) in cases {
            let f = |x: f64, y: f64| eigenfunction_eval(&params, mode, parity, x, y);
            let lam = mode_eigenvalue(&params, mode);
            let resid = |h: f64| {
                let lap = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h);
                (lap + lam * f(x, y)).abs()
            };
            let (e1, e2) = (resid(1e-2), resid(5e-3));
            assert!(e1 / e2 >= 3.8, "{mode:?}: ratio {}", e1 / e2);
        }
    }

    #[test]
    fn prefix_property() {
        let params = TorusParams::new(0.21, 1.37).unwrap();
        let mut prev = enumerate_spectrum(&params, 0).unwrap();
        for k in 1..60 {
            let next = enumerate_spectrum(&params, k).unwrap();
            assert!(next.entries.len() >= prev.entries.len());
            assert_eq!(&next.entries[..prev.entries.len()], &prev.entries[..]);
            prev = next;
        }
    }
}
