//! Flat-torus moduli: the lattice `Z(1,0) + Z(a,b)` and its fundamental region.
//!
//! Every flat torus is, up to isometry and dilation, `R^2 / Γ(a,b)` for a
//! unique `(a,b)` with `0 <= a <= 1/2` and `b >= sqrt(1 - a^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary tolerance for membership in the fundamental region.
pub const REGION_TOL: f64 = 1e-12;

const MAX_REDUCTION_STEPS: usize = 200;

/// A point `(a, b)` of the moduli space, lattice generators `(1,0)` and `(a,b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    a: f64,
    b: f64,
}

impl TorusParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite (a, b) = ({a}, {b})")));
        }
        if b <= 0.0 {
            return Err(Error::InvalidParams(format!("b must be positive, got {b}")));
        }
        Ok(Self { a, b })
    }

    /// The square torus `(0, 1)`.
    pub fn square() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    /// The equilateral torus `(1/2, sqrt(3)/2)`.
    pub fn equilateral() -> Self {
        Self {
            a: 0.5,
            b: 3f64.sqrt() / 2.0,
        }
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    /// `a^2 + b^2`, the squared length of the second generator.
    #[inline]
    pub fn s(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    pub fn is_in_fundamental_region(&self) -> bool {
        let a = self.a;
        let in_a = (-REGION_TOL..=0.5 + REGION_TOL).contains(&a);
        let floor = (1.0 - a * a).max(0.0).sqrt();
        in_a && self.b >= floor - REGION_TOL
    }

    /// Area of the fundamental parallelogram.
    pub fn flat_area(&self) -> f64 {
        self.b
    }
}

/// Membership test taking raw coordinates; rejects `b <= 0`.
pub fn is_in_fundamental_region(a: f64, b: f64) -> Result<bool> {
    Ok(TorusParams::new(a, b)?.is_in_fundamental_region())
}

/// A basis of a planar lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeBasis {
    pub v1: [f64; 2],
    pub v2: [f64; 2],
}

impl LatticeBasis {
    pub fn new(v1: [f64; 2], v2: [f64; 2]) -> Result<Self> {
        let det = v1[0] * v2[1] - v1[1] * v2[0];
        let scale = norm2(v1) * norm2(v2);
        if !det.is_finite() || scale.is_nan() || scale <= 0.0 || det.abs() <= 1e-12 * scale {
            let rel = if scale > 0.0 { det.abs() / scale } else { 0.0 };
            return Err(Error::DegenerateBasis { det: rel });
        }
        Ok(Self { v1, v2 })
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new([c * self.v1[0], c * self.v1[1]], [c * self.v2[0], c * self.v2[1]])
    }

    /// Covolume `|det(v1, v2)|`.
    pub fn area(&self) -> f64 {
        (self.v1[0] * self.v2[1] - self.v1[1] * self.v2[0]).abs()
    }
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Reduce a lattice basis to the fundamental region.
///
/// Returns `(params, scale)` such that the lattice spanned by `scale·(1,0)`
/// and `scale·(a,b)` is isometric to the input lattice. Works on the ratio
/// `τ = v2 / v1` in the upper half plane: translate `τ -= round(Re τ)`, invert
/// `τ ↦ -1/τ` while `|τ| < 1` (rescaling by `|τ|`), and finish with the
/// reflection `a ↦ -a` when needed.
pub fn reduce_to_fundamental(basis: &LatticeBasis) -> Result<(TorusParams, f64)> {
    let basis = LatticeBasis::new(basis.v1, basis.v2)?;
    let (mut w1, mut w2) = (basis.v1, basis.v2);
    if norm2(w2) < norm2(w1) {
        std::mem::swap(&mut w1, &mut w2);
    }
    let mut scale = norm2(w1);
    // τ = w2 / w1 as complex numbers.
    let d = w1[0] * w1[0] + w1[1] * w1[1];
    let mut x = (w2[0] * w1[0] + w2[1] * w1[1]) / d;
    let mut y = ((w2[1] * w1[0] - w2[0] * w1[1]) / d).abs();

    for _ in 0..MAX_REDUCTION_STEPS {
        x -= x.round();
        let n2 = x * x + y * y;
        if n2 < 1.0 - REGION_TOL {
            scale *= n2.sqrt();
            x = -x / n2;
            y /= n2;
            continue;
        }
        if x < 0.0 {
            x = -x;
        }
        let params = TorusParams::new(x, y)?;
        debug_assert!(params.is_in_fundamental_region());
        return Ok((params, scale));
    }
    Err(Error::NoConvergence {
        what: "lattice reduction",
        iterations: MAX_REDUCTION_STEPS,
    })
}
