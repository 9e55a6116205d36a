//! The level functional, the on-band completion and the half-line Hilbert
//! operator.
//!
//! For a nonnegative `v` given on `ℝ⁺ ∖ I`:
//!
//! ```text
//! α    = (2/π) ∫_{ℝ⁺∖I} t·v(t)·σ(t) dt
//! v(x) = (1/π) ∫_{ℝ⁺∖I} v(t)·σ(t)·2t/(t² − x²) dt / |σ(x)|,   a < x < b
//! 𝓗v(x) = p.v. (1/π) ∫₀^∞ v(t)·2t/(t² − x²) dt
//! ```
//!
//! The completion integrand is nonnegative (σ and `t² − x²` are both
//! negative below the band and both positive above it), and the completed
//! density satisfies `𝓗v ≡ α` on the band.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{endpoint_verdict, Density, Interp, Segment, Weight, WeightEdge};
use crate::error::{Error, Result};
use crate::kernels::{abs_sigma, sigma_edge_regular, sigma_real, Band, EdgeApproach};
use crate::output::sig12;
use crate::quadrature::{
    integrate_pv_with_breaks, integrate_with_breaks, Estimate, QuadratureConfig, Side,
};

/// The completed density on the band, sampled on a grid clustered toward
/// both edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionResult {
    pub band: Band,
    pub alpha: f64,
    pub alpha_error: f64,
    /// Abscissae strictly inside `(a, b)`, ascending.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub error_estimates: Vec<f64>,
    /// Largest grid value; a lower estimate of the on-band sup-norm.
    pub sup_norm: f64,
    /// Error estimate at the grid point attaining `sup_norm`.
    pub sup_norm_error: f64,
    /// Limit of the completion at `a` (equal to `v(a⁻)`); `None` when
    /// unbounded.
    pub lower_edge_value: Option<f64>,
    /// Limit of the completion at `b` (equal to `v(b⁺)`).
    pub upper_edge_value: Option<f64>,
}

impl ExtensionResult {
    /// Index of the grid maximum.
    pub fn argmax(&self) -> usize {
        self.values.iter().enumerate().fold(
            0,
            |best, (i, &v)| if v > self.values[best] { i } else { best },
        )
    }

    /// Monotone cubic interpolant of `perturb × completion` over `[a, b]`
    /// with the edge values pinned to the one-sided limits of `v`.
    pub fn interpolant(&self, perturb: f64) -> Result<Segment> {
        let lower = self.lower_edge_value.ok_or(Error::Unresolved {
            edge: self.band.a(),
        })?;
        let upper = self.upper_edge_value.ok_or(Error::Unresolved {
            edge: self.band.b(),
        })?;
        let mut x = Vec::with_capacity(self.grid.len() + 2);
        x.push(self.band.a());
        x.extend_from_slice(&self.grid);
        x.push(self.band.b());
        let mut y = Vec::with_capacity(x.len());
        y.push(lower);
        y.extend_from_slice(&self.values);
        y.push(upper);
        let y = y.into_iter().map(|v| (perturb * v).max(0.0)).collect();
        Segment::grid(x, y, Interp::Pchip)
    }

    /// `v` off the band plus the interpolated completion on it.
    pub fn completed(&self, off_band: &Density, perturb: f64) -> Result<Density> {
        off_band.union(&Density::new(vec![self.interpolant(perturb)?])?)
    }

    /// `‖χ_I v‖_p` of the interpolated completion, `p ≥ 1`.
    pub fn lp_norm(&self, p: f64, cfg: &QuadratureConfig) -> Result<f64> {
        let seg = self.interpolant(1.0)?;
        let knots: Vec<f64> = seg.knots().to_vec();
        let integral = integrate_with_breaks(
            |t| seg.value(t).powf(p),
            self.band.a(),
            self.band.b(),
            &knots,
            cfg,
        )?;
        Ok(integral.value.max(0.0).powf(p.recip()))
    }

    /// CSV with columns `x,v_ext,err`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,v_ext,err\n");
        for ((x, v), e) in self
            .grid
            .iter()
            .zip(&self.values)
            .zip(&self.error_estimates)
        {
            out.push_str(&format!("{},{},{}\n", sig12(*x), sig12(*v), sig12(*e)));
        }
        out
    }
}

/// `n` points in `(a, b)` at `a + (b − a)·sin²(θ/2)`, `θ = π(i + ½)/n`.
pub fn band_grid(band: &Band, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let half_theta = 0.5 * PI * (i as f64 + 0.5) / n as f64;
            band.a() + band.width() * half_theta.sin().powi(2)
        })
        .collect()
}

fn require_feasible(v: &Density, band: &Band) -> Result<()> {
    v.check_off_band(band)?;
    let (verdict, notes) = endpoint_verdict(v, band);
    if !verdict.is_satisfied() {
        return Err(Error::Infeasible(notes.join("; ")));
    }
    if !v.is_square_integrable() {
        return Err(Error::Infeasible("density is not square-integrable".into()));
    }
    Ok(())
}

/// `∫_{ℝ⁺∖I} v(t)·σ(t)·k(t) dt` with σ's inverse square roots at both edges
/// taken out analytically. `k` must be smooth near the edges.
fn integrate_against_sigma(
    v: &Density,
    band: &Band,
    kernel: &(dyn Fn(f64) -> f64 + Sync),
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let (a, b) = (band.a(), band.b());
    let full = |t: f64| sigma_real(t, band).unwrap_or(f64::NAN) * kernel(t);
    let lower = |d: f64| sigma_edge_regular(band, EdgeApproach::LowerFromBelow, d) * kernel(a - d);
    let upper = |d: f64| sigma_edge_regular(band, EdgeApproach::UpperFromAbove, d) * kernel(b + d);
    let weight = Weight {
        full: &full,
        edges: vec![
            WeightEdge {
                point: a,
                side: Side::Left,
                exponent: -0.5,
                regular: &lower,
            },
            WeightEdge {
                point: b,
                side: Side::Right,
                exponent: -0.5,
                regular: &upper,
            },
        ],
    };
    v.integrate(&weight, 0.0, f64::INFINITY, cfg)
}

/// The level `α = (2/π) ∫_{ℝ⁺∖I} t·v(t)·σ(t) dt`.
pub fn alpha_functional(v: &Density, band: &Band, cfg: &QuadratureConfig) -> Result<Estimate> {
    cfg.validate()?;
    require_feasible(v, band)?;
    Ok(integrate_against_sigma(v, band, &|t| t, cfg)?.scale(2.0 / PI))
}

/// `(1/π) ∫_{ℝ⁺∖I} v(t)·σ(t)·2t/(t² − x²) dt` for `a < x < b`.
fn completion_numerator(
    v: &Density,
    band: &Band,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let (a, b) = (band.a(), band.b());
    // distances to the edges, so that t − x stays accurate for x near a or b
    let (xa, bx) = (x - a, b - x);
    let kernel = move |t: f64| {
        let diff = if t < a { -((a - t) + xa) } else { (t - b) + bx };
        2.0 * t / (diff * (t + x))
    };
    Ok(integrate_against_sigma(v, band, &kernel, cfg)?.scale(1.0 / PI))
}

/// Completes `v` on the band on a `grid_size`-point grid.
pub fn extend(
    v: &Density,
    band: &Band,
    grid_size: usize,
    cfg: &QuadratureConfig,
) -> Result<ExtensionResult> {
    cfg.validate()?;
    if grid_size == 0 {
        return Err(Error::InvalidConfig("grid_size must be positive".into()));
    }
    let alpha = alpha_functional(v, band, cfg)?;
    let grid = band_grid(band, grid_size);
    let points: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&x| {
            if v.is_empty() {
                return Ok((0.0, 0.0));
            }
            let num = completion_numerator(v, band, x, cfg)?;
            let modulus = abs_sigma(x, band)?;
            Ok((num.value / modulus, num.error / modulus))
        })
        .collect::<Result<_>>()?;
    let (values, error_estimates): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();

    let mut result = ExtensionResult {
        band: *band,
        alpha: alpha.value,
        alpha_error: alpha.error,
        grid,
        values,
        error_estimates,
        sup_norm: 0.0,
        sup_norm_error: 0.0,
        lower_edge_value: v.one_sided_limit(band.a(), Side::Left),
        upper_edge_value: v.one_sided_limit(band.b(), Side::Right),
    };
    let k = result.argmax();
    result.sup_norm = result.values[k];
    result.sup_norm_error = result.error_estimates[k];
    Ok(result)
}

/// `𝓗v(x) = p.v. (1/π) ∫₀^∞ v(t)·2t/(t² − x²) dt` for a density on all of
/// `ℝ⁺`. `x` must not sit on a segment boundary.
pub fn hilbert_full(v_full: &Density, x: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    cfg.validate()?;
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain {
            x,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if v_full.segments().iter().any(|s| s.lo() == x || s.hi() == x) {
        return Err(Error::SingularArgument { x });
    }
    let kernel = move |t: f64| 2.0 * t / ((t - x) * (t + x));
    let weight = Weight::plain(&kernel);

    let mut total = Estimate::default();
    for seg in v_full.segments() {
        if !(seg.lo() < x && x < seg.hi()) {
            total += seg.integrate(&weight, seg.lo(), seg.hi(), cfg)?;
            continue;
        }
        // the pole sits inside this segment: principal value on the middle
        // part, regular integration on either side
        let pv_lo = 0.5 * (seg.lo() + x);
        let pv_hi = if seg.is_unbounded() {
            2.0 * x
        } else {
            0.5 * (x + seg.hi())
        };
        let numer = |t: f64| seg.value(t) * 2.0 * t / (t + x);
        total += integrate_pv_with_breaks(numer, x, pv_lo, pv_hi, seg.knots(), cfg)?;
        total += seg.integrate(&weight, seg.lo(), pv_lo, cfg)?;
        total += seg.integrate(&weight, pv_hi, seg.hi(), cfg)?;
    }
    Ok(total.scale(1.0 / PI))
}

/// Outcome of the round trip `v ↦ completion ↦ 𝓗`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstancyReport {
    /// `α` from the off-band integral.
    pub alpha: f64,
    pub alpha_error: f64,
    /// Mean of `𝓗v` over the check points.
    pub alpha_measured: f64,
    /// `max |𝓗v(x) − α|` over the check points.
    pub max_deviation: f64,
    /// Largest quadrature error estimate among the `𝓗v` evaluations.
    pub max_error: f64,
    pub check_points: Vec<f64>,
    pub hilbert_values: Vec<f64>,
    /// Scale applied to the completion before transforming (1 = none).
    pub perturb: f64,
}

/// `n_check` points inside the band, each halfway between two neighbouring
/// grid points, spread evenly over the grid.
pub fn check_points(grid: &[f64], n_check: usize) -> Vec<f64> {
    let n = grid.len();
    if n < 2 {
        return Vec::new();
    }
    (0..n_check)
        .map(|k| {
            let i = ((k + 1) * (n - 1) / (n_check + 1)).min(n - 2);
            0.5 * (grid[i] + grid[i + 1])
        })
        .collect()
}

/// Completes `v`, then checks that `𝓗` of the completed density equals
/// `α` across the band.
pub fn verify_constancy(
    v: &Density,
    band: &Band,
    grid_size: usize,
    n_check: usize,
    cfg: &QuadratureConfig,
) -> Result<ConstancyReport> {
    verify_constancy_perturbed(v, band, grid_size, n_check, 1.0, cfg)
}

/// [`verify_constancy`] with the completion scaled by `perturb` before the
/// transform. Any `perturb ≠ 1` on a nonzero completion breaks constancy.
pub fn verify_constancy_perturbed(
    v: &Density,
    band: &Band,
    grid_size: usize,
    n_check: usize,
    perturb: f64,
    cfg: &QuadratureConfig,
) -> Result<ConstancyReport> {
    if grid_size < 2 || n_check == 0 {
        return Err(Error::InvalidConfig(
            "need grid_size >= 2 and n_check >= 1".into(),
        ));
    }
    let ext = extend(v, band, grid_size, cfg)?;
    let full = ext.completed(v, perturb)?;
    let xs = check_points(&ext.grid, n_check);
    let values: Vec<Estimate> = xs
        .par_iter()
        .map(|&x| hilbert_full(&full, x, cfg))
        .collect::<Result<_>>()?;

    let alpha_measured = values.iter().map(|e| e.value).sum::<f64>() / values.len() as f64;
    let max_deviation = values
        .iter()
        .map(|e| (e.value - ext.alpha).abs())
        .fold(0.0, f64::max);
    let max_error = values.iter().map(|e| e.error).fold(0.0, f64::max);
    Ok(ConstancyReport {
        alpha: ext.alpha,
        alpha_error: ext.alpha_error,
        alpha_measured,
        max_deviation,
        max_error,
        check_points: xs,
        hilbert_values: values.into_iter().map(|e| e.value).collect(),
        perturb,
    })
}
