//! Near-extremal families and the positive-level decay study.
//!
//! With `α = −1`, the smallest achievable `‖χ_I v‖_∞` is
//! `λ = (b² − a²)/(2ab)`; it is approached by mass concentrating near `0`
//! and never reached. With `α = +1` the on-band completion can be made as
//! small as desired by pushing the mass to the right.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::kernels::{abs_sigma, envelope, lambda_bound, sigma_real, Band};
use crate::output::sig12;
use crate::parametrization::extend;
use crate::quadrature::{integrate_algebraic_weight, integrate_smooth, QuadratureConfig};

/// `m·χ_{(ε/2, ε)}` normalized to `α = −1`.
pub fn near_extremal_density(epsilon: f64, band: &Band, cfg: &QuadratureConfig) -> Result<Density> {
    let limit = 0.5 * band.a();
    if !(epsilon > 0.0 && epsilon < limit) {
        return Err(Error::EpsilonTooLarge { epsilon, limit });
    }
    let weight = integrate_smooth(
        |t| t * abs_sigma(t, band).unwrap_or(f64::NAN),
        0.5 * epsilon,
        epsilon,
        cfg,
    )?;
    Density::constant(0.5 * epsilon, epsilon, PI / (2.0 * weight.value))
}

/// `m·χ_{(R, R+1)}` normalized to `α = +1`.
pub fn far_right_density(radius: f64, band: &Band, cfg: &QuadratureConfig) -> Result<Density> {
    if !(radius.is_finite() && radius > band.b()) {
        return Err(Error::InvalidRadius {
            radius,
            b: band.b(),
        });
    }
    let weight = integrate_smooth(
        |t| t * sigma_real(t, band).unwrap_or(f64::NAN),
        radius,
        radius + 1.0,
        cfg,
    )?;
    Density::constant(radius, radius + 1.0, PI / (2.0 * weight.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpNorms {
    pub l1: f64,
    pub l2: f64,
    pub l4: f64,
    pub linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub alpha: f64,
    pub sup_norm: f64,
    pub sup_norm_error: f64,
    pub lp_norms: LpNorms,
    /// `sup_norm − λ`
    pub gap: f64,
}

/// Extends the near-extremal density for each `ε`; records come back
/// sorted by `ε` descending.
pub fn sweep(
    epsilons: &[f64],
    band: &Band,
    grid_size: usize,
    cfg: &QuadratureConfig,
) -> Result<Vec<SweepRecord>> {
    if epsilons.is_empty() {
        return Err(Error::InvalidConfig("empty epsilon schedule".into()));
    }
    let lambda = lambda_bound(band);
    let mut records: Vec<SweepRecord> = epsilons
        .par_iter()
        .map(|&epsilon| {
            let v = near_extremal_density(epsilon, band, cfg)?;
            let ext = extend(&v, band, grid_size, cfg)?;
            let lp_norms = LpNorms {
                l1: ext.lp_norm(1.0, cfg)?,
                l2: ext.lp_norm(2.0, cfg)?,
                l4: ext.lp_norm(4.0, cfg)?,
                linf: ext.sup_norm,
            };
            Ok(SweepRecord {
                epsilon,
                alpha: ext.alpha,
                sup_norm: ext.sup_norm,
                sup_norm_error: ext.sup_norm_error,
                lp_norms,
                gap: ext.sup_norm - lambda,
            })
        })
        .collect::<Result<_>>()?;
    records.sort_by(|x, y| y.epsilon.total_cmp(&x.epsilon));
    Ok(records)
}

/// `gap(εᵢ₊₁)/gap(εᵢ)` for consecutive records.
pub fn gap_ratios(records: &[SweepRecord]) -> Vec<f64> {
    records.windows(2).map(|w| w[1].gap / w[0].gap).collect()
}

/// Invariant violations of a sweep: a record below `λ` beyond its error
/// bar, or gaps not strictly decreasing as `ε` shrinks.
pub fn sweep_violations(records: &[SweepRecord]) -> Vec<String> {
    let mut out = Vec::new();
    for r in records {
        if r.gap < -r.sup_norm_error {
            out.push(format!(
                "epsilon {}: sup_norm {} falls below the bound (gap {}, err {})",
                r.epsilon, r.sup_norm, r.gap, r.sup_norm_error
            ));
        }
    }
    for w in records.windows(2) {
        if w[1].gap >= w[0].gap {
            out.push(format!(
                "gap did not decrease from epsilon {} to {} ({} -> {})",
                w[0].epsilon, w[1].epsilon, w[0].gap, w[1].gap
            ));
        }
    }
    out
}

/// `(∫_I envelope^p)^{1/p}`, with the square-root edge behaviour factored
/// out of the integrand.
pub fn envelope_lp_norm(band: &Band, p: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if p.is_infinite() {
        return Ok(lambda_bound(band));
    }
    let (a, b) = (band.a(), band.b());
    let half = 0.5 * (b - a);
    let e = 0.5 * p;
    // envelope^p = ((x−a)(b−x))^{p/2}·((x+a)(b+x))^{p/2}/x^{2p}
    let rest = |x: f64| ((x + a) * (b + x)).powf(e) / x.powf(2.0 * p);
    let lower =
        integrate_algebraic_weight(|d| (b - a - d).powf(e) * rest(a + d), e, half, &[], cfg)?;
    let upper =
        integrate_algebraic_weight(|d| (b - a - d).powf(e) * rest(b - d), e, half, &[], cfg)?;
    Ok((lower.value + upper.value).powf(p.recip()))
}

/// Envelope sampled at `n` evenly spaced points of `[a, b]`.
pub fn envelope_table(band: &Band, n: usize) -> Vec<(f64, f64)> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let x = if i == n - 1 {
                band.b()
            } else {
                band.a() + band.width() * i as f64 / (n - 1) as f64
            };
            (x, envelope(x, band).unwrap_or(0.0))
        })
        .collect()
}

/// CSV with columns `epsilon,alpha,sup_norm,sup_norm_err,gap,l1,l2,l4`.
pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("epsilon,alpha,sup_norm,sup_norm_err,gap,l1,l2,l4\n");
    for r in records {
        let row = [
            r.epsilon,
            r.alpha,
            r.sup_norm,
            r.sup_norm_error,
            r.gap,
            r.lp_norms.l1,
            r.lp_norms.l2,
            r.lp_norms.l4,
        ];
        out.push_str(&row.map(sig12).join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRecord {
    pub radius: f64,
    pub alpha: f64,
    pub sup_norm: f64,
    pub sup_norm_error: f64,
}

/// On-band sup-norm of the completion of `χ_{(R, R+1)}` at `α = +1`, for
/// each radius in input order.
pub fn positive_alpha_decay(
    radii: &[f64],
    band: &Band,
    grid_size: usize,
    cfg: &QuadratureConfig,
) -> Result<Vec<DecayRecord>> {
    if radii.is_empty() {
        return Err(Error::InvalidConfig("empty radius schedule".into()));
    }
    radii
        .par_iter()
        .map(|&radius| {
            let v = far_right_density(radius, band, cfg)?;
            let ext = extend(&v, band, grid_size, cfg)?;
            Ok(DecayRecord {
                radius,
                alpha: ext.alpha,
                sup_norm: ext.sup_norm,
                sup_norm_error: ext.sup_norm_error,
            })
        })
        .collect()
}

/// Radii, in input order, whose sup-norm failed to drop below the previous.
pub fn decay_violations(records: &[DecayRecord]) -> Vec<String> {
    records
        .windows(2)
        .filter(|w| w[1].sup_norm >= w[0].sup_norm)
        .map(|w| {
            format!(
                "sup_norm did not decrease from R = {} to R = {} ({} -> {})",
                w[0].radius, w[1].radius, w[0].sup_norm, w[1].sup_norm
            )
        })
        .collect()
}

/// CSV with columns `radius,alpha,sup_norm,sup_norm_err`.
pub fn decay_csv(records: &[DecayRecord]) -> String {
    let mut out = String::from("radius,alpha,sup_norm,sup_norm_err\n");
    for r in records {
        let row = [r.radius, r.alpha, r.sup_norm, r.sup_norm_error];
        out.push_str(&row.map(sig12).join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::argmax_envelope;
    use crate::parametrization::alpha_functional;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn band12() -> Band {
        Band::new(1.0, 2.0).unwrap()
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn near_extremal_mass_matches_brute_force() {
        // composite Simpson on 2·10⁵ panels of the smooth integrand
        let n = 200_000;
        let (lo, hi) = (0.05f64, 0.1f64);
        let h = (hi - lo) / n as f64;
        let f = |t: f64| t / ((4.0 - t * t).sqrt() * (1.0 - t * t).sqrt());
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let m = PI / (2.0 * s * h / 3.0);
        let v = near_extremal_density(0.1, &band12(), &cfg()).unwrap();
        let seg = &v.segments()[0];
        assert_eq!((seg.lo(), seg.hi()), (0.05, 0.1));
        assert_relative_eq!(seg.value(0.07), m, max_relative = 1e-11);
    }

    #[test]
    fn near_extremal_rejects_large_epsilon() {
        let band = band12();
        for eps in [0.5, 0.7, 0.0, -0.1] {
            assert!(matches!(
                near_extremal_density(eps, &band, &cfg()),
                Err(Error::EpsilonTooLarge { .. })
            ));
        }
    }

    #[test]
    fn far_right_rejects_small_radius() {
        assert!(matches!(
            far_right_density(1.5, &band12(), &cfg()),
            Err(Error::InvalidRadius { .. })
        ));
    }

    #[test]
    fn envelope_norms_match_brute_force() {
        let band = band12();
        let n = 400_000;
        let h = 1.0 / n as f64;
        for p in [1.0, 2.0, 4.0] {
            let brute: f64 = (0..n)
                .map(|i| envelope(1.0 + (i as f64 + 0.5) * h, &band).unwrap().powf(p) * h)
                .sum::<f64>()
                .powf(1.0 / p);
            let got = envelope_lp_norm(&band, p, &cfg()).unwrap();
            assert_relative_eq!(got, brute, max_relative = 1e-7);
        }
        assert_eq!(
            envelope_lp_norm(&band, f64::INFINITY, &cfg()).unwrap(),
            0.75
        );
    }

    #[test]
    fn sweep_small_schedule_approaches_bound() {
        let band = band12();
        let recs = sweep(&[0.1, 0.4, 0.2], &band, 128, &cfg()).unwrap();
        let eps: Vec<f64> = recs.iter().map(|r| r.epsilon).collect();
        assert_eq!(eps, vec![0.4, 0.2, 0.1]);
        assert!(sweep_violations(&recs).is_empty(), "{recs:?}");
        for r in &recs {
            assert_relative_eq!(r.alpha, -1.0, epsilon = 1e-9);
            assert!(r.gap > 0.0);
        }
        // the maximizer of the completion drifts to the envelope's
        let v = near_extremal_density(0.05, &band, &cfg()).unwrap();
        let ext = extend(&v, &band, 256, &cfg()).unwrap();
        let xmax = ext.grid[ext.argmax()];
        assert!((xmax - argmax_envelope(&band)).abs() < 0.05, "{xmax}");
    }

    #[test]
    fn decay_small_schedule_decreases() {
        let recs = positive_alpha_decay(&[4.0, 8.0], &band12(), 64, &cfg()).unwrap();
        assert!(decay_violations(&recs).is_empty());
        assert!(recs.iter().all(|r| (r.alpha - 1.0).abs() < 1e-9));
    }

    #[test]
    fn empty_schedules_rejected() {
        assert!(sweep(&[], &band12(), 32, &cfg()).is_err());
        assert!(positive_alpha_decay(&[], &band12(), 32, &cfg()).is_err());
    }

    #[test]
    fn csv_headers() {
        assert!(sweep_csv(&[]).starts_with("epsilon,alpha,sup_norm,sup_norm_err,gap,l1,l2,l4\n"));
        assert!(decay_csv(&[]).starts_with("radius,alpha,sup_norm,sup_norm_err\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn normalization_holds(a in 0.2f64..5.0, ratio in 1.05f64..4.0, frac in 0.02f64..0.98) {
            let band = Band::new(a, a * ratio).unwrap();
            let eps = frac * 0.5 * a;
            let v = near_extremal_density(eps, &band, &cfg()).unwrap();
            let alpha = alpha_functional(&v, &band, &cfg()).unwrap();
            prop_assert!((alpha.value + 1.0).abs() < 1e-9);
            prop_assert!(v.segments().iter().all(|s| s.hi() < band.a()));
            let w = far_right_density(band.b() * (1.0 + frac), &band, &cfg()).unwrap();
            let alpha = alpha_functional(&w, &band, &cfg()).unwrap();
            prop_assert!((alpha.value - 1.0).abs() < 1e-9);
        }
    }
}
