//! Array layouts and phase-response (steering) vectors.
//!
//! A layout is an `m_x × m_y` grid of elements spaced `spacing` carrier
//! wavelengths apart. Element `(k, l)` sits at index `k * m_y + l`, i.e. the
//! x-axis factor is the outer factor of the Kronecker product. The same order
//! is used for channel tensors, gain vectors and beam weights.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-wavelength element spacing.
pub const DEFAULT_SPACING: f64 = 0.5;

/// Geometry of a uniform rectangular array. A ULA is the case `m_x == 1` or
/// `m_y == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    m_x: usize,
    m_y: usize,
    spacing: f64,
}

impl ArrayLayout {
    pub fn new(m_x: usize, m_y: usize, spacing: f64) -> Result<Self> {
        if m_x == 0 || m_y == 0 {
            return Err(Error::InvalidLayout(format!(
                "element counts must be at least 1, got {m_x}x{m_y}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidLayout(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        Ok(Self { m_x, m_y, spacing })
    }

    /// Rectangular layout with half-wavelength spacing.
    pub fn ura(m_x: usize, m_y: usize) -> Result<Self> {
        Self::new(m_x, m_y, DEFAULT_SPACING)
    }

    pub fn m_x(&self) -> usize {
        self.m_x
    }

    pub fn m_y(&self) -> usize {
        self.m_y
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total element count `m_x * m_y`.
    pub fn len(&self) -> usize {
        self.m_x * self.m_y
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_linear(&self) -> bool {
        self.m_x == 1 || self.m_y == 1
    }

    pub fn with_spacing(self, spacing: f64) -> Result<Self> {
        Self::new(self.m_x, self.m_y, spacing)
    }

    /// Flat index of element `(k, l)`.
    #[inline]
    pub fn index(&self, k: usize, l: usize) -> usize {
        debug_assert!(k < self.m_x && l < self.m_y);
        k * self.m_y + l
    }

    /// Grid coordinates `(k, l)` of a flat element index.
    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.m_y, index % self.m_y)
    }

    /// Element positions in wavelengths, in flat index order.
    pub fn positions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |i| {
            let (k, l) = self.coords(i);
            (k as f64 * self.spacing, l as f64 * self.spacing)
        })
    }
}

impl fmt::Display for ArrayLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m_x, self.m_y)
    }
}

/// Parses `"<m_x>x<m_y>"` with the default spacing.
impl FromStr for ArrayLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidLayout(format!("expected <m_x>x<m_y>, got {s:?}"));
        let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let m_x = a.trim().parse().map_err(|_| bad())?;
        let m_y = b.trim().parse().map_err(|_| bad())?;
        Self::ura(m_x, m_y)
    }
}

/// Elevation `theta` and azimuth `psi`, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    pub theta: f64,
    pub psi: f64,
}

impl SteeringAngles {
    pub fn new(theta: f64, psi: f64) -> Result<Self> {
        if !(theta.is_finite() && psi.is_finite()) {
            return Err(Error::NonFiniteAngle { theta, psi });
        }
        Ok(Self { theta, psi })
    }

    pub fn from_degrees(theta_deg: f64, psi_deg: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), psi_deg.to_radians())
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn psi_deg(&self) -> f64 {
        self.psi.to_degrees()
    }

    /// Whether both angles lie in the optimizer's search range `[0, 2π]`.
    pub fn in_search_range(&self) -> bool {
        let ok = |a: f64| (0.0..=2.0 * PI).contains(&a);
        ok(self.theta) && ok(self.psi)
    }
}

/// A vector of unit-modulus phase terms, one per array element.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<Complex64>);

impl PhaseVector {
    /// Wraps raw entries. Callers are responsible for unit modulus.
    pub fn from_entries(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Phase response of `layout` toward `angles`:
/// entry `(k, l)` is `exp(j 2π d (k sinθ cosψ + l sinθ sinψ))`.
pub fn phase_response(layout: &ArrayLayout, angles: &SteeringAngles) -> Result<PhaseVector> {
    if !(angles.theta.is_finite() && angles.psi.is_finite()) {
        return Err(Error::NonFiniteAngle {
            theta: angles.theta,
            psi: angles.psi,
        });
    }
    let (sin_t, _) = angles.theta.sin_cos();
    let (sin_p, cos_p) = angles.psi.sin_cos();
    let step_x = 2.0 * PI * layout.spacing * sin_t * cos_p;
    let step_y = 2.0 * PI * layout.spacing * sin_t * sin_p;

    let mut out = Vec::with_capacity(layout.len());
    for k in 0..layout.m_x {
        for l in 0..layout.m_y {
            out.push(Complex64::cis(k as f64 * step_x + l as f64 * step_y));
        }
    }
    Ok(PhaseVector(out))
}

/// Elementwise conjugate, used for the receive-side response.
pub fn conjugate_response(v: &PhaseVector) -> PhaseVector {
    PhaseVector(v.0.iter().map(|z| z.conj()).collect())
}
