//! Seeded random densities for property tests and the CLI audit.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::density::{Density, Interp, Segment};
use crate::kernels::Band;

/// Where the support of a sampled density lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Inside `(0, a]`.
    Left,
    /// Inside `[b, ∞)`.
    Right,
    Both,
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerOptions {
    pub region: Region,
    /// Allow power segments that vanish or blow up (integrably) at a band
    /// edge. Completions of such densities have no finite edge value to pin.
    pub singular_edges: bool,
    /// Allow a power-law tail reaching to `∞` on the right.
    pub unbounded_tail: bool,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            region: Region::Both,
            singular_edges: false,
            unbounded_tail: false,
        }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random feasible (square-integrable, condition-satisfying) density.
pub fn random_density<R: Rng>(rng: &mut R, band: &Band, opts: &SamplerOptions) -> Density {
    let mut segs = Vec::new();
    let (left, right) = match opts.region {
        Region::Left => (true, false),
        Region::Right => (false, true),
        Region::Both => (true, true),
    };
    if left {
        segs.extend(left_segments(rng, band, opts));
    }
    if right {
        segs.extend(right_segments(rng, band, opts));
    }
    Density::new(segs).expect("sampler produces valid densities")
}

/// Sorted breakpoints in `(lo, hi)`, an even number of them.
fn breakpoints<R: Rng>(rng: &mut R, lo: f64, hi: f64, pieces: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..2 * pieces).map(|_| rng.gen_range(lo..hi)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() % 2 == 1 {
        pts.pop();
    }
    pts
}

/// A segment on `(lo, hi)`. `edge` is the band edge the segment touches,
/// if any.
fn random_segment<R: Rng>(
    rng: &mut R,
    lo: f64,
    hi: f64,
    edge: Option<f64>,
    opts: &SamplerOptions,
) -> Segment {
    let kind = rng.gen_range(0..3);
    match (kind, edge) {
        (0, Some(e)) if opts.singular_edges => {
            let gamma = rng.gen_range(-0.4..1.5);
            Segment::power(lo, hi, rng.gen_range(0.1..2.0), e, gamma).unwrap()
        }
        (0, _) => {
            // bounded power law anchored just outside the support
            let anchor = if rng.gen_bool(0.5) {
                lo - 0.1 * (hi - lo)
            } else {
                hi + 0.1 * (hi - lo)
            };
            let anchor = anchor.max(0.0);
            let gamma = rng.gen_range(-1.0..2.0);
            Segment::power(lo, hi, rng.gen_range(0.1..2.0), anchor, gamma).unwrap()
        }
        (1, _) => {
            let n = rng.gen_range(3..9);
            let x: Vec<f64> = (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (n - 1) as f64
                    }
                })
                .collect();
            let y = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
            let interp = if rng.gen_bool(0.5) {
                Interp::Linear
            } else {
                Interp::Pchip
            };
            Segment::grid(x, y, interp).unwrap()
        }
        _ => Segment::constant(lo, hi, rng.gen_range(0.05..2.0)).unwrap(),
    }
}

fn left_segments<R: Rng>(rng: &mut R, band: &Band, opts: &SamplerOptions) -> Vec<Segment> {
    let a = band.a();
    let pieces = rng.gen_range(1..=3);
    let mut pts = breakpoints(rng, 0.02 * a, 0.98 * a, pieces);
    let touch = rng.gen_bool(0.4);
    if touch {
        *pts.last_mut().unwrap() = a;
    }
    pts.chunks(2)
        .enumerate()
        .map(|(i, w)| {
            let edge = (touch && i == pts.len() / 2 - 1).then_some(a);
            random_segment(rng, w[0], w[1], edge, opts)
        })
        .collect()
}

fn right_segments<R: Rng>(rng: &mut R, band: &Band, opts: &SamplerOptions) -> Vec<Segment> {
    let b = band.b();
    let reach = b + 2.0 * band.width() + 1.0;
    let pieces = rng.gen_range(1..=3);
    let mut pts = breakpoints(rng, b + 0.02 * band.width(), reach, pieces);
    let touch = rng.gen_bool(0.4);
    if touch {
        pts[0] = b;
    }
    let mut segs: Vec<Segment> = pts
        .chunks(2)
        .enumerate()
        .map(|(i, w)| {
            let edge = (touch && i == 0).then_some(b);
            random_segment(rng, w[0], w[1], edge, opts)
        })
        .collect();
    if opts.unbounded_tail && rng.gen_bool(0.5) {
        let start = reach + rng.gen_range(0.1..1.0);
        let gamma = rng.gen_range(-3.0..-1.2);
        segs.push(
            Segment::power(start, f64::INFINITY, rng.gen_range(0.1..2.0), 0.0, gamma).unwrap(),
        );
    }
    segs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::endpoint_verdict;

    #[test]
    fn samples_are_feasible_and_located() {
        let band = Band::new(1.0, 2.0).unwrap();
        let mut rng = seeded_rng(7);
        for region in [Region::Left, Region::Right, Region::Both] {
            for singular_edges in [false, true] {
                let opts = SamplerOptions {
                    region,
                    singular_edges,
                    unbounded_tail: true,
                };
                for _ in 0..50 {
                    let v = random_density(&mut rng, &band, &opts);
                    assert!(v.check_off_band(&band).is_ok());
                    assert!(endpoint_verdict(&v, &band).0.is_satisfied());
                    assert!(v.is_square_integrable());
                    if region == Region::Left {
                        assert!(v.segments().iter().all(|s| s.hi() <= 1.0));
                    }
                    if region == Region::Right {
                        assert!(v.segments().iter().all(|s| s.lo() >= 2.0));
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_same_density() {
        let band = Band::new(1.0, 3.0).unwrap();
        let opts = SamplerOptions::default();
        let x = random_density(&mut seeded_rng(42), &band, &opts);
        let y = random_density(&mut seeded_rng(42), &band, &opts);
        assert_eq!(x, y);
    }
}
