//! Nonnegative loss densities on the half-line as lists of disjoint segments.
//!
//! A segment is a constant, a power `c·|t − e|^γ` anchored at a point `e`
//! outside its open support, or sampled data. The power form is what lets
//! feasibility be decided from exponents: a segment touching a band edge
//! with `γ > −1/2` keeps `∫ v(t)|σ(t)| dt` finite there.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Band;
use crate::quadrature::{
    integrate_algebraic_weight, integrate_tail, integrate_with_breaks, Estimate, QuadratureConfig,
    Side,
};

/// Interpolation used between samples of a grid segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    #[default]
    Linear,
    /// Monotone piecewise-cubic Hermite (Fritsch–Carlson slopes).
    Pchip,
}

/// Sampled values with a fixed interpolation rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
    interp: Interp,
}

impl Sampled {
    pub fn new(x: Vec<f64>, y: Vec<f64>, interp: Interp) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::InvalidDensity(format!(
                "grid needs matching abscissae/ordinates with at least 2 points (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDensity(
                "grid abscissae must be finite and strictly increasing".into(),
            ));
        }
        if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDensity(
                "grid ordinates must be finite and nonnegative".into(),
            ));
        }
        let slopes = match interp {
            Interp::Linear => Vec::new(),
            Interp::Pchip => pchip_slopes(&x, &y),
        };
        Ok(Self {
            x,
            y,
            slopes,
            interp,
        })
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.x
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.y
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn value(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.x.partition_point(|&xi| xi <= t) - 1;
        let (x0, x1, y0, y1) = (self.x[k], self.x[k + 1], self.y[k], self.y[k + 1]);
        let h = x1 - x0;
        let s = (t - x0) / h;
        match self.interp {
            Interp::Linear => y0 + s * (y1 - y0),
            Interp::Pchip => {
                let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
                let s2 = s * s;
                let s3 = s2 * s;
                let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
                let h10 = s3 - 2.0 * s2 + s;
                let h01 = -2.0 * s3 + 3.0 * s2;
                let h11 = s3 - s2;
                (h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1).max(0.0)
            }
        }
    }
}

/// Fritsch–Carlson slopes with the weighted harmonic mean of Fritsch and
/// Butland in the interior and the shape-preserving three-point formula at
/// the ends.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if d.signum() != m0.signum() || m0 == 0.0 {
            0.0
        } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            d
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Functional form of a segment.
#[derive(Debug, Clone, PartialEq)]
pub enum Form {
    Constant {
        c: f64,
    },
    /// `c·|t − anchor|^gamma`
    Power {
        c: f64,
        anchor: f64,
        gamma: f64,
    },
    Grid(Sampled),
}

/// A piece of a density supported on `(lo, hi]`; `hi` may be `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    lo: f64,
    hi: f64,
    form: Form,
}

impl Segment {
    pub fn new(lo: f64, hi: f64, form: Form) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDensity(msg));
        if !(lo.is_finite() && lo >= 0.0 && lo < hi && !hi.is_nan()) {
            return bad(format!("segment support ({lo}, {hi}) needs 0 <= lo < hi"));
        }
        let unbounded = hi.is_infinite();
        match &form {
            Form::Constant { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return bad(format!("constant {c} must be finite and >= 0"));
                }
                if unbounded && *c > 0.0 {
                    return bad(
                        "a nonzero constant on an unbounded support is not square-integrable"
                            .into(),
                    );
                }
            }
            Form::Power { c, anchor, gamma } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return bad(format!("power coefficient {c} must be finite and >= 0"));
                }
                if !(anchor.is_finite() && gamma.is_finite()) {
                    return bad("power anchor and exponent must be finite".into());
                }
                if lo < *anchor && *anchor < hi {
                    return bad(format!("power anchor {anchor} lies inside ({lo}, {hi})"));
                }
                if (*anchor == lo || *anchor == hi) && *gamma <= -1.0 {
                    return bad(format!(
                        "exponent {gamma} is not integrable at the anchor {anchor} (need > -1)"
                    ));
                }
                if unbounded && *c > 0.0 && *gamma > -1.0 {
                    return bad(format!(
                        "unbounded power segment must decay at least like 1/t (gamma = {gamma})"
                    ));
                }
            }
            Form::Grid(s) => {
                if unbounded {
                    return bad("grid segments must be bounded".into());
                }
                if s.x[0] != lo || *s.x.last().unwrap() != hi {
                    return bad(format!(
                        "grid abscissae must span the support ({lo}, {hi}) exactly"
                    ));
                }
            }
        }
        Ok(Self { lo, hi, form })
    }

    pub fn constant(lo: f64, hi: f64, c: f64) -> Result<Self> {
        Self::new(lo, hi, Form::Constant { c })
    }

    pub fn power(lo: f64, hi: f64, c: f64, anchor: f64, gamma: f64) -> Result<Self> {
        Self::new(lo, hi, Form::Power { c, anchor, gamma })
    }

    pub fn grid(x: Vec<f64>, y: Vec<f64>, interp: Interp) -> Result<Self> {
        let s = Sampled::new(x, y, interp)?;
        let (lo, hi) = (s.x[0], *s.x.last().unwrap());
        Self::new(lo, hi, Form::Grid(s))
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn is_unbounded(&self) -> bool {
        self.hi.is_infinite()
    }

    /// `lo < t ≤ hi`
    pub fn contains(&self, t: f64) -> bool {
        self.lo < t && t <= self.hi
    }

    /// Value at `t`, assumed to be in the closed support.
    pub fn value(&self, t: f64) -> f64 {
        match &self.form {
            Form::Constant { c } => *c,
            Form::Power { c, anchor, gamma } => {
                if *c == 0.0 {
                    0.0
                } else {
                    c * (t - anchor).abs().powf(*gamma)
                }
            }
            Form::Grid(s) => s.value(t),
        }
    }

    /// Exponent of a power segment whose anchor is the support end `p`.
    pub fn anchored_exponent(&self, p: f64) -> Option<f64> {
        match self.form {
            Form::Power { anchor, gamma, .. } if anchor == p && (p == self.lo || p == self.hi) => {
                Some(gamma)
            }
            _ => None,
        }
    }

    /// `v(t)/δ^γ` at distance `δ` inside the support from its end `p`, with
    /// `γ` the anchored exponent at `p` (zero when there is none).
    fn regular_from(&self, p: f64, delta: f64) -> f64 {
        if self.anchored_exponent(p).is_some() {
            if let Form::Power { c, .. } = self.form {
                return c;
            }
        }
        let t = if p == self.lo { p + delta } else { p - delta };
        self.value(t)
    }

    /// One-sided limit of the segment at its end `p`; `None` if unbounded.
    pub fn end_limit(&self, p: f64) -> Option<f64> {
        match (self.anchored_exponent(p), &self.form) {
            (Some(gamma), Form::Power { c, .. }) => {
                if *c == 0.0 || gamma > 0.0 {
                    Some(0.0)
                } else if gamma == 0.0 {
                    Some(*c)
                } else {
                    None
                }
            }
            _ => Some(self.value(p)),
        }
    }

    /// Abscissae of a sampled form (empty otherwise).
    pub fn knots(&self) -> &[f64] {
        match &self.form {
            Form::Grid(s) => &s.x,
            _ => &[],
        }
    }

    /// `∫ v(t)·w(t) dt` over `[lo, hi] ∩ supp`.
    pub fn integrate(
        &self,
        weight: &Weight<'_>,
        lo: f64,
        hi: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Estimate> {
        let (plo, phi) = (self.lo.max(lo), self.hi.min(hi));
        if plo >= phi {
            return Ok(Estimate::default());
        }
        integrate_piece(self, plo, phi, weight, cfg)
    }

    fn dilate(&self, s: f64) -> Self {
        let form = match &self.form {
            Form::Constant { c } => Form::Constant { c: *c },
            Form::Power { c, anchor, gamma } => Form::Power {
                c: c * s.powf(-gamma),
                anchor: s * anchor,
                gamma: *gamma,
            },
            Form::Grid(g) => Form::Grid(Sampled {
                x: g.x.iter().map(|x| s * x).collect(),
                y: g.y.clone(),
                slopes: g.slopes.iter().map(|d| d / s).collect(),
                interp: g.interp,
            }),
        };
        Self {
            lo: s * self.lo,
            hi: s * self.hi,
            form,
        }
    }

    fn scaled(&self, m: f64) -> Self {
        let form = match &self.form {
            Form::Constant { c } => Form::Constant { c: m * c },
            Form::Power { c, anchor, gamma } => Form::Power {
                c: m * c,
                anchor: *anchor,
                gamma: *gamma,
            },
            Form::Grid(g) => Form::Grid(Sampled {
                x: g.x.clone(),
                y: g.y.iter().map(|y| m * y).collect(),
                slopes: g.slopes.iter().map(|d| m * d).collect(),
                interp: g.interp,
            }),
        };
        Self {
            lo: self.lo,
            hi: self.hi,
            form,
        }
    }
}

/// A nonnegative density on `(0, ∞)`: disjoint segments, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "doc::DensityDoc", into = "doc::DensityDoc")]
pub struct Density {
    segments: Vec<Segment>,
}

impl Density {
    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        segments.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        for w in segments.windows(2) {
            if w[0].hi > w[1].lo {
                return Err(Error::InvalidDensity(format!(
                    "segments ({}, {}) and ({}, {}) overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `c·χ_(lo, hi)`
    pub fn constant(lo: f64, hi: f64, c: f64) -> Result<Self> {
        Self::new(vec![Segment::constant(lo, hi, c)?])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Pointwise value; boundary points belong to the segment on their left.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| s.contains(t))
            .map_or(0.0, |s| s.value(t))
    }

    /// `t ↦ v(t/s)`.
    pub fn dilate(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidDensity(format!(
                "dilation factor {s} must be > 0"
            )));
        }
        Ok(Self {
            segments: self.segments.iter().map(|seg| seg.dilate(s)).collect(),
        })
    }

    /// `m·v` for `m ≥ 0`.
    pub fn scaled(&self, m: f64) -> Result<Self> {
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::InvalidDensity(format!(
                "scale {m} must be finite and >= 0"
            )));
        }
        Ok(Self {
            segments: self.segments.iter().map(|seg| seg.scaled(m)).collect(),
        })
    }

    /// Sum of two densities with disjoint supports.
    pub fn union(&self, other: &Density) -> Result<Self> {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Self::new(segments)
    }

    /// Fails if any segment meets the open band.
    pub fn check_off_band(&self, band: &Band) -> Result<()> {
        match self
            .segments
            .iter()
            .find(|s| s.lo < band.b() && s.hi > band.a())
        {
            Some(s) => Err(Error::SupportOverlapsBand {
                lo: s.lo,
                hi: s.hi,
                a: band.a(),
                b: band.b(),
            }),
            None => Ok(()),
        }
    }

    /// True when no anchored power exponent reaches `−1/2` (unbounded
    /// segments already decay like `1/t` by construction).
    pub fn is_square_integrable(&self) -> bool {
        self.segments.iter().all(|s| {
            [s.lo, s.hi]
                .iter()
                .all(|&p| s.anchored_exponent(p).is_none_or(|g| g > -0.5))
        })
    }

    /// One-sided limit of `v` at a point from the left (`a⁻`) or right (`b⁺`).
    /// Zero when no segment ends there, `None` when the limit is infinite.
    pub fn one_sided_limit(&self, p: f64, side: Side) -> Option<f64> {
        let seg = self.segments.iter().find(|s| match side {
            Side::Left => s.hi == p,
            Side::Right => s.lo == p,
        });
        match seg {
            Some(s) => s.end_limit(p),
            None => Some(0.0),
        }
    }

    /// Endpoint exponent of the segment touching `p` from `side`.
    fn exponent_touching(&self, p: f64, side: Side) -> f64 {
        self.segments
            .iter()
            .find(|s| match side {
                Side::Left => s.hi == p,
                Side::Right => s.lo == p,
            })
            .and_then(|s| s.anchored_exponent(p))
            .unwrap_or(0.0)
    }

    /// `∫ v(t)·w(t) dt` over `[lo, hi]` (`hi` may be `∞`).
    pub fn integrate(
        &self,
        weight: &Weight<'_>,
        lo: f64,
        hi: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Estimate> {
        let mut total = Estimate::default();
        for seg in &self.segments {
            total += seg.integrate(weight, lo, hi, cfg)?;
        }
        Ok(total)
    }

    /// `∫ v² dt`.
    pub fn l2_norm_squared(&self, cfg: &QuadratureConfig) -> Result<Estimate> {
        let mut total = Estimate::default();
        for seg in &self.segments {
            total += integrate_segment_with(
                seg,
                seg.lo,
                seg.hi,
                2.0,
                &|_| 1.0,
                &EdgeFactors::none(),
                cfg,
            )?;
        }
        Ok(total)
    }
}

/// A kernel `w(t)` multiplying a density, with optional algebraic edge
/// factors: at `point`, for `t` on `side`, `w(t) = δ^exponent · regular(δ)`
/// with `δ = |t − point|`.
pub struct Weight<'a> {
    pub full: &'a dyn Fn(f64) -> f64,
    pub edges: Vec<WeightEdge<'a>>,
}

pub struct WeightEdge<'a> {
    pub point: f64,
    pub side: Side,
    pub exponent: f64,
    pub regular: &'a dyn Fn(f64) -> f64,
}

impl<'a> Weight<'a> {
    pub fn plain(full: &'a dyn Fn(f64) -> f64) -> Self {
        Self {
            full,
            edges: Vec::new(),
        }
    }

    fn edge(&self, point: f64, side: Side) -> Option<&WeightEdge<'a>> {
        self.edges
            .iter()
            .find(|e| e.point == point && e.side == side)
    }
}

struct EdgeFactors<'w, 'a> {
    lo: Option<&'w WeightEdge<'a>>,
    hi: Option<&'w WeightEdge<'a>>,
}

impl EdgeFactors<'_, '_> {
    fn none() -> Self {
        Self { lo: None, hi: None }
    }
}

fn integrate_piece(
    seg: &Segment,
    lo: f64,
    hi: f64,
    weight: &Weight<'_>,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let edges = EdgeFactors {
        lo: weight.edge(lo, Side::Right),
        hi: if hi.is_finite() {
            weight.edge(hi, Side::Left)
        } else {
            None
        },
    };
    integrate_segment_with(seg, lo, hi, 1.0, weight.full, &edges, cfg)
}

/// Integrates `v(t)^power·w(t)` over `[lo, hi] ⊂ supp(seg)`. At a singular
/// end the density's anchored exponent (times `power`) and the weight's
/// edge exponent are combined into one algebraic substitution.
fn integrate_segment_with(
    seg: &Segment,
    lo: f64,
    hi: f64,
    power: f64,
    weight: &dyn Fn(f64) -> f64,
    edges: &EdgeFactors<'_, '_>,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let density = |t: f64| {
        let v = seg.value(t);
        if power == 1.0 {
            v
        } else {
            v.powf(power)
        }
    };
    let full = |t: f64| density(t) * weight(t);
    let seg_exp = |p: f64| {
        if p == seg.lo || p == seg.hi {
            seg.anchored_exponent(p)
        } else {
            None
        }
    };

    let end_piece = |p: f64, dir: f64, length: f64| {
        let gamma = seg_exp(p);
        let edge = if dir > 0.0 { edges.lo } else { edges.hi };
        let exponent = gamma.map_or(0.0, |g| power * g) + edge.map_or(0.0, |e| e.exponent);
        let h = |d: f64| {
            let t = p + dir * d;
            let s = match gamma {
                Some(_) => seg.regular_from(p, d).powf(power),
                None => density(t),
            };
            let w = match edge {
                Some(e) => (e.regular)(d),
                None => weight(t),
            };
            s * w
        };
        let breaks: Vec<f64> = seg
            .knots()
            .iter()
            .map(|k| (k - p).abs())
            .filter(|&d| d > 0.0 && d < length)
            .collect();
        integrate_algebraic_weight(h, exponent, length, &breaks, cfg)
    };

    let lo_sing = seg_exp(lo).is_some() || edges.lo.is_some();
    if hi.is_infinite() {
        let mut total = Estimate::default();
        let cut = if lo_sing {
            let cut = 2.0 * lo;
            total += end_piece(lo, 1.0, cut - lo)?;
            cut
        } else {
            lo
        };
        total += integrate_tail(full, cut, 2.0, cfg)?;
        return Ok(total);
    }

    let hi_sing = seg_exp(hi).is_some() || edges.hi.is_some();
    match (lo_sing, hi_sing) {
        (false, false) => integrate_with_breaks(full, lo, hi, seg.knots(), cfg),
        (true, false) => end_piece(lo, 1.0, hi - lo),
        (false, true) => end_piece(hi, -1.0, hi - lo),
        (true, true) => {
            let mid = 0.5 * (lo + hi);
            Ok(end_piece(lo, 1.0, mid - lo)? + end_piece(hi, -1.0, hi - mid)?)
        }
    }
}

/// Verdict on one integrability condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Satisfied,
    Violated,
    UndecidableNumerically,
}

impl Verdict {
    fn worst(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Violated, _) | (_, Violated) => Violated,
            (UndecidableNumerically, _) | (_, UndecidableNumerically) => UndecidableNumerically,
            _ => Satisfied,
        }
    }

    pub fn is_satisfied(self) -> bool {
        self == Verdict::Satisfied
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub verdict: Verdict,
    /// Numeric value of the integral when it is finite and was evaluated.
    pub value: Option<Estimate>,
}

/// Endpoint integrability verdicts for a density given off the band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// `∫₀^a [v(a−t) + v(b+t)] t^{−1/2} dt < ∞`
    pub condition_one: ConditionReport,
    /// `∫₀^a∫₀^a [ν(a−t)ν(a−τ) + ν(b+t)ν(b+τ)] |log(t+τ)|/√(tτ) dt dτ < ∞`
    pub corollary_condition: ConditionReport,
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.condition_one.verdict.is_satisfied()
    }
}

/// Exponents closer than this above `−1/2` cannot be integrated reliably.
const BORDERLINE: f64 = 1e-9;

fn exponent_verdict(gamma: f64) -> Verdict {
    if gamma <= -0.5 {
        Verdict::Violated
    } else if gamma <= -0.5 + BORDERLINE {
        Verdict::UndecidableNumerically
    } else {
        Verdict::Satisfied
    }
}

/// Symbolic verdict for the endpoint condition, from the exponents of the
/// segments touching `a` from below and `b` from above. The corollary's
/// log factor does not move the threshold, so the same verdict applies.
pub fn endpoint_verdict(v: &Density, band: &Band) -> (Verdict, Vec<String>) {
    let mut verdict = Verdict::Satisfied;
    let mut notes = Vec::new();
    for (p, side, name) in [(band.a(), Side::Left, "a"), (band.b(), Side::Right, "b")] {
        let gamma = v.exponent_touching(p, side);
        let here = exponent_verdict(gamma);
        if here != Verdict::Satisfied {
            notes.push(format!(
                "segment touching {name} = {p} has endpoint exponent {gamma} ({here:?})"
            ));
        }
        verdict = verdict.worst(here);
    }
    (verdict, notes)
}

/// Decides the endpoint conditions and, where finite, evaluates them.
pub fn check_feasibility(
    v: &Density,
    band: &Band,
    cfg: &QuadratureConfig,
) -> Result<FeasibilityReport> {
    cfg.validate()?;
    v.check_off_band(band)?;
    let (verdict, mut notes) = endpoint_verdict(v, band);
    if !v.is_square_integrable() {
        notes.push("density is not square-integrable".into());
    }

    let (mut one, mut cor) = (None, None);
    if verdict.is_satisfied() {
        one = Some(condition_one_value(v, band, cfg)?);
        match corollary_value(v, band, cfg) {
            Ok(e) => cor = Some(e),
            Err(e) => notes.push(format!("corollary integral not evaluated: {e}")),
        }
    }
    Ok(FeasibilityReport {
        condition_one: ConditionReport {
            verdict,
            value: one,
        },
        corollary_condition: ConditionReport {
            verdict,
            value: cor,
        },
        notes,
    })
}

/// `∫₀^a [v(a−t) + v(b+t)] t^{−1/2} dt` with exact inverse-square-root
/// handling at both edges.
pub fn condition_one_value(v: &Density, band: &Band, cfg: &QuadratureConfig) -> Result<Estimate> {
    let (a, b) = (band.a(), band.b());
    let one = |_: f64| 1.0;
    let left_full = |t: f64| 1.0 / (a - t).sqrt();
    let left = Weight {
        full: &left_full,
        edges: vec![WeightEdge {
            point: a,
            side: Side::Left,
            exponent: -0.5,
            regular: &one,
        }],
    };
    let right_full = |t: f64| 1.0 / (t - b).sqrt();
    let right = Weight {
        full: &right_full,
        edges: vec![WeightEdge {
            point: b,
            side: Side::Right,
            exponent: -0.5,
            regular: &one,
        }],
    };
    Ok(v.integrate(&left, 0.0, a, cfg)? + v.integrate(&right, b, b + a, cfg)?)
}

/// Profile `ν(edge ± t)` for `t ∈ (0, a)` split as `t^γ·h(t)`.
struct EdgeProfile<'v> {
    v: &'v Density,
    edge: f64,
    dir: f64,
    gamma: f64,
    touching: Option<&'v Segment>,
    breaks: Vec<f64>,
}

impl<'v> EdgeProfile<'v> {
    fn new(v: &'v Density, edge: f64, side: Side, length: f64) -> Self {
        let dir = match side {
            Side::Left => -1.0,
            Side::Right => 1.0,
        };
        let touching = v.segments.iter().find(|s| match side {
            Side::Left => s.hi == edge,
            Side::Right => s.lo == edge,
        });
        let gamma = touching
            .and_then(|s| s.anchored_exponent(edge))
            .unwrap_or(0.0);
        let breaks = v
            .segments
            .iter()
            .flat_map(|s| [s.lo, s.hi])
            .map(|p| (p - edge) * dir)
            .filter(|&d| d > 0.0 && d < length)
            .collect();
        Self {
            v,
            edge,
            dir,
            gamma,
            touching,
            breaks,
        }
    }

    fn regular(&self, t: f64) -> f64 {
        let x = self.edge + self.dir * t;
        match self.touching {
            Some(s) if s.lo <= x && x <= s.hi => s.regular_from(self.edge, t),
            _ => {
                let val = self.v.evaluate(x);
                if self.gamma == 0.0 || val == 0.0 {
                    val
                } else {
                    val * t.powf(-self.gamma)
                }
            }
        }
    }
}

/// The corollary's double integral, evaluated by nested adaptive quadrature
/// with the algebraic substitution in both variables.
pub fn corollary_value(v: &Density, band: &Band, cfg: &QuadratureConfig) -> Result<Estimate> {
    let a = band.a();
    let outer_cfg = cfg.relaxed(1e-8);
    let inner_cfg = cfg.relaxed(1e-11);
    let mut total = Estimate::default();
    for (edge, side) in [(band.a(), Side::Left), (band.b(), Side::Right)] {
        let (lo, hi) = match side {
            Side::Left => (edge - a, edge),
            Side::Right => (edge, edge + a),
        };
        if !v.segments.iter().any(|s| s.lo < hi && s.hi > lo) {
            continue;
        }
        let prof = EdgeProfile::new(v, edge, side, a);
        let beta = prof.gamma - 0.5;
        let inner_err = Cell::new(0.0f64);
        let outer = integrate_algebraic_weight(
            |t| {
                let ht = prof.regular(t);
                if ht == 0.0 {
                    return 0.0;
                }
                let mut breaks = prof.breaks.clone();
                if t < 1.0 {
                    breaks.push(1.0 - t);
                }
                let inner = integrate_algebraic_weight(
                    |tau| prof.regular(tau) * (t + tau).ln().abs(),
                    beta,
                    a,
                    &breaks,
                    &inner_cfg,
                );
                match inner {
                    Ok(e) => {
                        inner_err.set(inner_err.get().max(e.error * ht.abs()));
                        ht * e.value
                    }
                    Err(_) => f64::NAN,
                }
            },
            beta,
            a,
            &prof.breaks,
            &outer_cfg,
        )?;
        // crude bound: worst inner error times the outer measure ∫ t^β dt
        let measure = a.powf(beta + 1.0) / (beta + 1.0);
        total += Estimate::new(outer.value, outer.error + inner_err.get() * measure);
    }
    Ok(total)
}

mod doc {
    use super::*;

    #[derive(Serialize, Deserialize)]
    pub(super) struct DensityDoc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        version: Option<u32>,
        segments: Vec<SegmentDoc>,
    }

    #[derive(Serialize, Deserialize)]
    struct SegmentDoc {
        lo: f64,
        hi: Option<f64>,
        #[serde(flatten)]
        form: FormDoc,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(tag = "form", rename_all = "lowercase")]
    enum FormDoc {
        Constant {
            c: f64,
        },
        Power {
            c: f64,
            anchor: f64,
            gamma: f64,
        },
        Grid {
            x: Vec<f64>,
            y: Vec<f64>,
            #[serde(default)]
            interp: Interp,
        },
    }

    impl TryFrom<DensityDoc> for Density {
        type Error = Error;

        fn try_from(doc: DensityDoc) -> Result<Self> {
            if let Some(v) = doc.version {
                if v != 1 {
                    return Err(Error::Parse(format!(
                        "unsupported density document version {v}"
                    )));
                }
            }
            let segments = doc
                .segments
                .into_iter()
                .map(|s| {
                    let hi = s.hi.unwrap_or(f64::INFINITY);
                    let form = match s.form {
                        FormDoc::Constant { c } => Form::Constant { c },
                        FormDoc::Power { c, anchor, gamma } => Form::Power { c, anchor, gamma },
                        FormDoc::Grid { x, y, interp } => Form::Grid(Sampled::new(x, y, interp)?),
                    };
                    Segment::new(s.lo, hi, form)
                })
                .collect::<Result<Vec<_>>>()?;
            Density::new(segments)
        }
    }

    impl From<Density> for DensityDoc {
        fn from(d: Density) -> Self {
            let segments = d
                .segments
                .into_iter()
                .map(|s| SegmentDoc {
                    lo: s.lo,
                    hi: s.hi.is_finite().then_some(s.hi),
                    form: match s.form {
                        Form::Constant { c } => FormDoc::Constant { c },
                        Form::Power { c, anchor, gamma } => FormDoc::Power { c, anchor, gamma },
                        Form::Grid(g) => FormDoc::Grid {
                            x: g.x,
                            y: g.y,
                            interp: g.interp,
                        },
                    },
                })
                .collect();
            DensityDoc {
                version: Some(1),
                segments,
            }
        }
    }
}

impl Density {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("density serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn band12() -> Band {
        Band::new(1.0, 2.0).unwrap()
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(Density::empty().evaluate(1.3), 0.0);
        let v = Density::constant(3.0, 4.0, 2.0).unwrap();
        assert_eq!(v.evaluate(3.5), 2.0);
        assert_eq!(v.evaluate(3.0), 0.0);
        assert_eq!(v.evaluate(4.0), 2.0);
        let p = Density::new(vec![Segment::power(2.0, 3.0, 1.0, 2.0, 0.5).unwrap()]).unwrap();
        assert_eq!(p.evaluate(2.25), 0.5);
    }

    #[test]
    fn construction_rejects_bad_segments() {
        assert!(Segment::constant(2.0, 1.0, 1.0).is_err());
        assert!(Segment::constant(-1.0, 1.0, 1.0).is_err());
        assert!(Segment::constant(0.0, 1.0, -0.5).is_err());
        assert!(Segment::constant(3.0, f64::INFINITY, 1.0).is_err());
        assert!(Segment::constant(3.0, f64::INFINITY, 0.0).is_ok());
        assert!(Segment::power(0.5, 1.0, 1.0, 0.7, 0.5).is_err());
        assert!(Segment::power(0.5, 1.0, 1.0, 1.0, -1.0).is_err());
        assert!(Segment::power(3.0, f64::INFINITY, 1.0, 0.0, -0.9).is_err());
        assert!(Segment::power(3.0, f64::INFINITY, 1.0, 0.0, -2.0).is_ok());
        assert!(Segment::grid(vec![0.0, 1.0], vec![1.0, -1.0], Interp::Linear).is_err());
        assert!(Segment::grid(vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0], Interp::Linear).is_err());
        let a = Segment::constant(0.0, 1.0, 1.0).unwrap();
        let b = Segment::constant(0.5, 2.0, 1.0).unwrap();
        assert!(Density::new(vec![a.clone(), b]).is_err());
        let c = Segment::constant(1.0, 2.0, 1.0).unwrap();
        assert!(Density::new(vec![c, a]).is_ok());
    }

    #[test]
    fn sampled_interpolation() {
        let lin = Segment::grid(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0], Interp::Linear).unwrap();
        assert_eq!(lin.value(0.5), 1.0);
        assert_eq!(lin.value(2.0), 1.0);
        let pch = Segment::grid(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 0.0, 1.0, 1.0],
            Interp::Pchip,
        )
        .unwrap();
        // monotone data stays monotone and within range
        let mut prev = 0.0;
        for i in 0..=300 {
            let v = pch.value(i as f64 / 100.0);
            assert!((0.0..=1.0).contains(&v) && v >= prev - 1e-15);
            prev = v;
        }
        assert_eq!(pch.value(1.0), 0.0);
        assert_eq!(pch.value(2.0), 1.0);
    }

    #[test]
    fn feasibility_of_bounded_density() {
        let band = band12();
        let v = Density::new(vec![
            Segment::constant(0.2, 1.0, 1.0).unwrap(),
            Segment::constant(2.0, 3.0, 0.5).unwrap(),
        ])
        .unwrap();
        let rep = check_feasibility(&v, &band, &cfg()).unwrap();
        assert_eq!(rep.condition_one.verdict, Verdict::Satisfied);
        assert_eq!(rep.corollary_condition.verdict, Verdict::Satisfied);
        assert!(rep.is_feasible());
        // ∫₀^{0.8} t^{−1/2} dt + 0.5·∫₀^1 t^{−1/2} dt
        let expected = 2.0 * 0.8f64.sqrt() + 1.0;
        assert_relative_eq!(
            rep.condition_one.value.unwrap().value,
            expected,
            max_relative = 1e-10
        );
        assert!(rep.corollary_condition.value.unwrap().value.is_finite());
    }

    #[test]
    fn feasibility_of_singular_power() {
        let band = band12();
        let bad = Density::new(vec![Segment::power(0.5, 1.0, 1.0, 1.0, -0.75).unwrap()]).unwrap();
        let rep = check_feasibility(&bad, &band, &cfg()).unwrap();
        assert_eq!(rep.condition_one.verdict, Verdict::Violated);
        assert_eq!(rep.corollary_condition.verdict, Verdict::Violated);
        assert!(rep.condition_one.value.is_none());
        assert!(!rep.notes.is_empty());

        let edge = Density::new(vec![
            Segment::power(0.5, 1.0, 1.0, 1.0, -0.5 + 1e-12).unwrap()
        ])
        .unwrap();
        let rep = check_feasibility(&edge, &band, &cfg()).unwrap();
        assert_eq!(rep.condition_one.verdict, Verdict::UndecidableNumerically);

        // γ = −0.25 at a: ∫₀^{0.5} t^{−0.25}·t^{−1/2} dt = 0.5^{0.25}/0.25
        let ok = Density::new(vec![Segment::power(0.5, 1.0, 1.0, 1.0, -0.25).unwrap()]).unwrap();
        let rep = check_feasibility(&ok, &band, &cfg()).unwrap();
        assert_eq!(rep.condition_one.verdict, Verdict::Satisfied);
        assert_relative_eq!(
            rep.condition_one.value.unwrap().value,
            0.5f64.powf(0.25) / 0.25,
            max_relative = 1e-10
        );
    }

    #[test]
    fn feasibility_of_empty_density() {
        let rep = check_feasibility(&Density::empty(), &band12(), &cfg()).unwrap();
        assert!(rep.is_feasible());
        assert_eq!(rep.condition_one.value.unwrap().value, 0.0);
        assert_eq!(rep.corollary_condition.value.unwrap().value, 0.0);
    }

    #[test]
    fn overlap_is_rejected() {
        let v = Density::constant(1.5, 3.0, 1.0).unwrap();
        assert!(matches!(
            check_feasibility(&v, &band12(), &cfg()),
            Err(Error::SupportOverlapsBand { .. })
        ));
        // touching the band is fine
        assert!(Density::constant(2.0, 3.0, 1.0)
            .unwrap()
            .check_off_band(&band12())
            .is_ok());
    }

    #[test]
    fn dilation_examples() {
        let v = Density::constant(3.0, 4.0, 2.0).unwrap();
        assert_eq!(v.dilate(1.0).unwrap(), v);
        assert_eq!(
            v.dilate(2.0).unwrap(),
            Density::constant(6.0, 8.0, 2.0).unwrap()
        );
        assert!(v.dilate(0.0).is_err());
    }

    #[test]
    fn one_sided_limits() {
        let v = Density::new(vec![
            Segment::constant(0.3, 1.0, 1.5).unwrap(),
            Segment::power(2.0, 3.0, 1.0, 2.0, -0.25).unwrap(),
        ])
        .unwrap();
        assert_eq!(v.one_sided_limit(1.0, Side::Left), Some(1.5));
        assert_eq!(v.one_sided_limit(2.0, Side::Right), None);
        assert_eq!(v.one_sided_limit(5.0, Side::Right), Some(0.0));
    }

    #[test]
    fn l2_norm_of_power_segment() {
        // ∫₁² (t−1)^{−1/2} dt = 2
        let v = Density::new(vec![Segment::power(1.0, 2.0, 1.0, 1.0, -0.25).unwrap()]).unwrap();
        assert_relative_eq!(
            v.l2_norm_squared(&cfg()).unwrap().value,
            2.0,
            max_relative = 1e-10
        );
        let tail = Density::new(vec![
            Segment::power(1.0, f64::INFINITY, 1.0, 0.0, -1.0).unwrap()
        ])
        .unwrap();
        assert_relative_eq!(
            tail.l2_norm_squared(&cfg()).unwrap().value,
            1.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"version":1,"segments":[
            {"lo":0.1,"hi":0.5,"form":"constant","c":2.0},
            {"lo":2.0,"hi":3.0,"form":"power","c":1.0,"anchor":2.0,"gamma":0.5},
            {"lo":3.5,"hi":4.0,"form":"grid","x":[3.5,3.75,4.0],"y":[0,1,0],"interp":"pchip"},
            {"lo":5.0,"hi":null,"form":"power","c":1.0,"anchor":0.0,"gamma":-2.0}]}"#;
        let v = Density::from_json(text).unwrap();
        assert_eq!(v.segments().len(), 4);
        assert!(v.segments()[3].is_unbounded());
        assert_eq!(Density::from_json(&v.to_json()).unwrap(), v);
        assert!(matches!(Density::from_json("{"), Err(Error::Parse(_))));
        assert!(matches!(
            Density::from_json(r#"{"segments":[{"lo":1,"hi":2,"form":"constant","c":-1}]}"#),
            Err(Error::Parse(_))
        ));
        assert!(Density::from_json(r#"{"version":2,"segments":[]}"#).is_err());
    }

    fn arb_segment() -> impl Strategy<Value = Segment> {
        (
            0.05f64..5.0,
            0.05f64..3.0,
            0.0f64..3.0,
            0usize..3,
            -0.4f64..2.0,
        )
            .prop_map(|(lo, len, c, kind, gamma)| {
                let hi = lo + len;
                match kind {
                    0 => Segment::constant(lo, hi, c).unwrap(),
                    1 => Segment::power(lo, hi, c, lo, gamma).unwrap(),
                    _ => Segment::grid(
                        vec![lo, lo + 0.3 * len, hi],
                        vec![c, 0.5 * c, 2.0 * c],
                        Interp::Pchip,
                    )
                    .unwrap(),
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn values_nonnegative(seg in arb_segment(), u in 0.0f64..1.0) {
            let t = seg.lo() + u * (seg.hi() - seg.lo());
            prop_assert!(seg.value(t.max(seg.lo() + 1e-12)) >= 0.0);
        }

        #[test]
        fn dilation_commutes_with_evaluation(seg in arb_segment(), s in 0.1f64..10.0, u in 0.01f64..1.0) {
            let v = Density::new(vec![seg]).unwrap();
            let w = v.dilate(s).unwrap();
            let seg = &v.segments()[0];
            let t = seg.lo() + u * (seg.hi() - seg.lo());
            let (x, y) = (v.evaluate(t), w.evaluate(s * t));
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{} vs {}", x, y);
        }

        #[test]
        fn l2_is_finite(seg in arb_segment()) {
            let v = Density::new(vec![seg]).unwrap();
            prop_assert!(v.is_square_integrable());
            let n = v.l2_norm_squared(&cfg()).unwrap();
            prop_assert!(n.value.is_finite() && n.value >= 0.0);
        }

        #[test]
        fn feasibility_is_additive(g1 in -0.45f64..1.0, g2 in -0.45f64..1.0, c in 0.1f64..3.0) {
            let band = band12();
            let v1 = Density::new(vec![Segment::power(0.4, 1.0, c, 1.0, g1).unwrap()]).unwrap();
            let v2 = Density::new(vec![Segment::power(2.0, 2.7, c, 2.0, g2).unwrap()]).unwrap();
            let sum = v1.union(&v2).unwrap();
            let r1 = check_feasibility(&v1, &band, &cfg()).unwrap();
            let r2 = check_feasibility(&v2, &band, &cfg()).unwrap();
            let rs = check_feasibility(&sum, &band, &cfg()).unwrap();
            prop_assert!(r1.is_feasible() && r2.is_feasible() && rs.is_feasible());
            let total = r1.condition_one.value.unwrap().value + r2.condition_one.value.unwrap().value;
            prop_assert!((rs.condition_one.value.unwrap().value - total).abs() <= 1e-8 * total);
        }

        #[test]
        fn verdict_survives_dilation(gamma in -0.9f64..1.0, s in 0.2f64..5.0) {
            let band = band12();
            let v = Density::new(vec![Segment::power(0.3, 1.0, 1.0, 1.0, gamma).unwrap()]).unwrap();
            let (d, _) = endpoint_verdict(&v, &band);
            let (ds, _) = endpoint_verdict(&v.dilate(s).unwrap(), &band.dilate(s).unwrap());
            prop_assert_eq!(d, ds);
        }

        #[test]
        fn corollary_implies_condition_one(gamma in -0.45f64..1.0) {
            let v = Density::new(vec![Segment::power(0.3, 1.0, 1.0, 1.0, gamma).unwrap()]).unwrap();
            let rep = check_feasibility(&v, &band12(), &cfg()).unwrap();
            if rep.corollary_condition.verdict.is_satisfied() {
                prop_assert!(rep.condition_one.verdict.is_satisfied());
            }
        }
    }
}
