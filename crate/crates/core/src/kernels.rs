//! The switching kernel `σ(z) = 1/(√(z²−b²)·√(z²−a²))` on the real axis, the
//! loss envelope `√((b²−x²)(x²−a²))/x²` and its maximum.
//!
//! Boundary values of σ are taken from the upper half-plane. Rather than
//! composing complex square roots, the real axis is split into the regions
//! `|x| < a`, `a < |x| < b` and `|x| > b` and each gets its closed form:
//!
//! | region      | σ(x)                               |
//! |-------------|------------------------------------|
//! | `0 ≤ x < a` | `−1/√((b²−x²)(a²−x²))` (real)      |
//! | `a < x < b` | `−i/√((b²−x²)(x²−a²))`             |
//! | `x > b`     | `+1/√((x²−b²)(x²−a²))` (real)      |
//!
//! and `σ(−x) = conj σ(x)` for the negative axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The band `I = [a, b]`, `0 < a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBand")]
pub struct Band {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawBand {
    a: f64,
    b: f64,
}

impl TryFrom<RawBand> for Band {
    type Error = Error;

    fn try_from(raw: RawBand) -> Result<Self> {
        Band::new(raw.a, raw.b)
    }
}

impl Band {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && 0.0 < a && a < b {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidBand { a, b })
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

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// True for `a < x < b`.
    pub fn contains_open(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }

    /// The band `[s·a, s·b]`.
    pub fn dilate(&self, s: f64) -> Result<Self> {
        Band::new(s * self.a, s * self.b)
    }
}

/// Boundary value of σ at a real point, as a complex pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaValue {
    pub re: f64,
    pub im: f64,
}

impl SigmaValue {
    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// `|x² − c²|` computed as a product of factors, accurate near `x = c`.
#[inline]
fn abs_sq_diff(x: f64, c: f64) -> f64 {
    ((x - c) * (x + c)).abs()
}

fn check_regular(x: f64, band: &Band) -> Result<f64> {
    let ax = x.abs();
    if !x.is_finite() || ax == band.a || ax == band.b {
        return Err(Error::SingularArgument { x });
    }
    Ok(ax)
}

/// Boundary value of σ at the real point `x` (continuous extension from the
/// upper half-plane).
pub fn sigma(x: f64, band: &Band) -> Result<SigmaValue> {
    let ax = check_regular(x, band)?;
    let modulus = 1.0 / (abs_sq_diff(ax, band.b) * abs_sq_diff(ax, band.a)).sqrt();
    let positive = if ax < band.a {
        SigmaValue {
            re: -modulus,
            im: 0.0,
        }
    } else if ax < band.b {
        SigmaValue {
            re: 0.0,
            im: -modulus,
        }
    } else {
        SigmaValue {
            re: modulus,
            im: 0.0,
        }
    };
    Ok(if x < 0.0 { positive.conj() } else { positive })
}

/// Real-valued σ off the band (`|x| < a` or `|x| > b`). Errors on the band.
pub fn sigma_real(x: f64, band: &Band) -> Result<f64> {
    let ax = check_regular(x, band)?;
    if band.a < ax && ax < band.b {
        return Err(Error::Domain {
            x,
            lo: band.a,
            hi: band.b,
        });
    }
    Ok(sigma(x, band)?.re)
}

/// `|σ(x)| = 1/√(|x²−b²|·|x²−a²|)`.
pub fn abs_sigma(x: f64, band: &Band) -> Result<f64> {
    let ax = check_regular(x, band)?;
    Ok(1.0 / (abs_sq_diff(ax, band.b) * abs_sq_diff(ax, band.a)).sqrt())
}

/// Approach direction to a band edge, used to factor out the inverse square
/// root of σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeApproach {
    /// `t = a − δ`, off the band.
    LowerFromBelow,
    /// `t = a + δ`, on the band.
    LowerFromAbove,
    /// `t = b − δ`, on the band.
    UpperFromBelow,
    /// `t = b + δ`, off the band.
    UpperFromAbove,
}

impl EdgeApproach {
    /// The point `edge ± δ`.
    pub fn point(self, band: &Band, delta: f64) -> f64 {
        match self {
            EdgeApproach::LowerFromBelow => band.a - delta,
            EdgeApproach::LowerFromAbove => band.a + delta,
            EdgeApproach::UpperFromBelow => band.b - delta,
            EdgeApproach::UpperFromAbove => band.b + delta,
        }
    }
}

/// `σ(t)·√δ` for `t` at distance `δ > 0` from a band edge, in closed form so
/// that no cancellation occurs as `δ → 0`. Off the band this is the signed
/// real σ; on the band it is `|σ|`.
pub fn sigma_edge_regular(band: &Band, approach: EdgeApproach, delta: f64) -> f64 {
    let (a, b) = (band.a, band.b);
    match approach {
        EdgeApproach::LowerFromBelow => {
            let t = a - delta;
            -1.0 / (((b - t) * (b + t)) * (a + t)).sqrt()
        }
        EdgeApproach::LowerFromAbove => {
            let t = a + delta;
            1.0 / (((b - t) * (b + t)) * (a + t)).sqrt()
        }
        EdgeApproach::UpperFromBelow => {
            let t = b - delta;
            1.0 / ((b + t) * ((t - a) * (t + a))).sqrt()
        }
        EdgeApproach::UpperFromAbove => {
            let t = b + delta;
            1.0 / ((t + b) * ((t - a) * (t + a))).sqrt()
        }
    }
}

/// Loss envelope `√((b²−x²)(x²−a²))/x²` on `[a, b]`; zero at both edges.
pub fn envelope(x: f64, band: &Band) -> Result<f64> {
    if !(band.a <= x && x <= band.b) {
        return Err(Error::Domain {
            x,
            lo: band.a,
            hi: band.b,
        });
    }
    let prod = ((band.b - x) * (band.b + x)) * ((x - band.a) * (x + band.a));
    Ok(prod.max(0.0).sqrt() / (x * x))
}

/// Infimum of the on-band sup-norm for level −1: `(b² − a²)/(2ab)`.
pub fn lambda_bound(band: &Band) -> f64 {
    (band.b - band.a) * (band.b + band.a) / (2.0 * band.a * band.b)
}

/// Maximiser of the envelope, `ab·√(2/(a²+b²))`.
pub fn argmax_envelope(band: &Band) -> f64 {
    band.a * band.b * (2.0 / (band.a * band.a + band.b * band.b)).sqrt()
}
