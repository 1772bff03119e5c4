//! The entropy-production measure of a front-tracking solution.
//!
//! For piecewise-constant solutions the measure lives on the front graphs:
//! a front with traces `(u_-, u_+)` carries density `E(u_-, u_+)` per unit
//! time. Region masses are therefore finite sums of clipped segment lengths.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::entropy::{jump_entropy_cost, rel_entropy, rel_flux, JumpPair};
use crate::fronttrack::{FrontId, Simulation, TrackError, COINCIDE_TOL};
use crate::profile::{Path, ProfileError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("lower path must stay strictly left of the upper path (violated at t = {0})")]
    PathOrder(f64),
    #[error("window [{t1}, {t2}] is empty or outside the simulated horizon")]
    BadWindow { t1: f64, t2: f64 },
    #[error("region is empty or malformed")]
    BadRegion,
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// One front during one epoch: `x(t) = x0 + speed (t - t0)` on `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub front: FrontId,
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub speed: f64,
    pub density: f64,
}

impl Segment {
    #[inline]
    pub fn position_at(&self, t: f64) -> f64 {
        self.x0 + self.speed * (t - self.t0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyMeasure {
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
    Signed,
}

impl Sign {
    #[inline]
    fn weight(self, density: f64) -> f64 {
        match self {
            Sign::Plus => density.max(0.0),
            Sign::Minus => (-density).max(0.0),
            Sign::Signed => density,
        }
    }
}

/// Space-time regions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Region {
    /// Closed rectangle `[t0, t1] x [x0, x1]`; the spatial bounds may be infinite.
    Rect { t0: f64, t1: f64, x0: f64, x1: f64 },
    /// Open cone `{0 < tau < t, -r + tau s < xi < r - tau s}`.
    Cone { r: f64, s: f64, t: f64 },
    /// Open band `{t0 < tau < t1, lower(tau) < xi < upper(tau)}`.
    Band { t0: f64, t1: f64, lower: Path, upper: Path },
}

impl Region {
    pub fn rect(t0: f64, t1: f64, x0: f64, x1: f64) -> Result<Self, MeasureError> {
        if !(t1 >= t0 && x1 >= x0) || t0.is_nan() || x0.is_nan() {
            return Err(MeasureError::BadRegion);
        }
        Ok(Region::Rect { t0, t1, x0, x1 })
    }

    pub fn cone(r: f64, s: f64, t: f64) -> Result<Self, MeasureError> {
        if !(r > 0.0 && s >= 0.0 && t >= 0.0 && r.is_finite() && s.is_finite() && t.is_finite()) {
            return Err(MeasureError::BadRegion);
        }
        Ok(Region::Cone { r, s, t })
    }

    /// Length of the part of `seg` lying in the region.
    fn clipped_length(&self, seg: &Segment) -> f64 {
        match self {
            Region::Rect { t0, t1, x0, x1 } => {
                let (lo, hi) = (seg.t0.max(*t0), seg.t1.min(*t1));
                if !(hi >= lo) {
                    return 0.0;
                }
                let (xa, xb) = (seg.position_at(lo), seg.position_at(hi));
                let span = Clip::new(lo, hi, true)
                    .above(xa - x0, xb - x0)
                    .above(x1 - xa, x1 - xb);
                span.length()
            }
            Region::Cone { r, s, t } => {
                let (lo, hi) = (seg.t0.max(0.0), seg.t1.min(*t));
                if !(hi > lo) {
                    return 0.0;
                }
                let (xa, xb) = (seg.position_at(lo), seg.position_at(hi));
                let (wa, wb) = (r - lo * s, r - hi * s);
                Clip::new(lo, hi, false)
                    .above(xa + wa, xb + wb)
                    .above(wa - xa, wb - xb)
                    .length()
            }
            Region::Band { t0, t1, lower, upper } => {
                let (lo, hi) = (seg.t0.max(*t0), seg.t1.min(*t1));
                if !(hi > lo) {
                    return 0.0;
                }
                let mut cuts: Vec<f64> = lower
                    .knots()
                    .iter()
                    .chain(upper.knots())
                    .map(|k| k.0)
                    .filter(|&t| t > lo && t < hi)
                    .chain([lo, hi])
                    .collect();
                cuts.sort_by(|a, b| a.total_cmp(b));
                cuts.dedup();
                cuts.windows(2)
                    .map(|w| {
                        let (a, b) = (w[0], w[1]);
                        let (xa, xb) = (seg.position_at(a), seg.position_at(b));
                        Clip::new(a, b, false)
                            .above(xa - lower.position(a), xb - lower.position(b))
                            .above(upper.position(a) - xa, upper.position(b) - xb)
                            .length()
                    })
                    .sum()
            }
        }
    }
}

/// Time interval cut down by affine constraints `g > 0` (open) or `g >= 0`
/// (closed), each given by its values at the ends of the original interval.
struct Clip {
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    closed: bool,
    empty: bool,
}

impl Clip {
    fn new(lo: f64, hi: f64, closed: bool) -> Self {
        Self {
            a: lo,
            b: hi,
            lo,
            hi,
            closed,
            empty: false,
        }
    }

    fn above(mut self, g_lo: f64, g_hi: f64) -> Self {
        if self.empty {
            return self;
        }
        let tol = COINCIDE_TOL * (1.0 + g_lo.abs().max(g_hi.abs()).min(1.0));
        if g_lo.abs() <= tol && g_hi.abs() <= tol {
            self.empty = !self.closed;
            return self;
        }
        if g_lo >= 0.0 && g_hi >= 0.0 {
            return self;
        }
        if g_lo <= 0.0 && g_hi <= 0.0 {
            self.empty = true;
            return self;
        }
        let root = self.a + (self.b - self.a) * g_lo / (g_lo - g_hi);
        if g_lo < 0.0 {
            self.lo = self.lo.max(root);
        } else {
            self.hi = self.hi.min(root);
        }
        self.empty = self.hi < self.lo;
        self
    }

    fn length(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            (self.hi - self.lo).max(0.0)
        }
    }
}

/// One segment per front per epoch, weighted by the front's entropy cost.
pub fn entropy_production(sim: &Simulation) -> EntropyMeasure {
    let mut segments = Vec::new();
    for e in &sim.epochs {
        if !(e.t_end > e.t_start) {
            continue;
        }
        for &id in &e.fronts {
            let f = sim.front(id);
            segments.push(Segment {
                front: id,
                t0: e.t_start,
                t1: e.t_end,
                x0: f.position_at(e.t_start),
                speed: f.speed,
                density: jump_entropy_cost(&sim.model, JumpPair::new(f.u_left, f.u_right)),
            });
        }
    }
    EntropyMeasure { segments }
}

impl EntropyMeasure {
    pub fn mass(&self, region: &Region, sign: Sign) -> f64 {
        self.segments
            .iter()
            .map(|seg| {
                let w = sign.weight(seg.density);
                if w == 0.0 {
                    0.0
                } else {
                    w * region.clipped_length(seg)
                }
            })
            .sum()
    }
}

pub fn mu_mass(measure: &EntropyMeasure, region: &Region, sign: Sign) -> f64 {
    measure.mass(region, sign)
}

/// Both sides of the local relative-entropy balance on a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
}

/// Checks the relative-entropy balance on `{t1 < tau < t2, y < xi < z}`:
/// the change of `int_y^z eta(u | v0)` equals the band's entropy production
/// plus the boundary fluxes `q(u; v0) - path' eta(u | v0)` at `y+` minus at `z-`.
pub fn variation_formula_check(
    sim: &Simulation,
    y: &Path,
    z: &Path,
    v0: f64,
    t1: f64,
    t2: f64,
) -> Result<VariationCheck, MeasureError> {
    if !(t2 > t1 && t1 >= 0.0 && t2 <= sim.t_final) {
        return Err(MeasureError::BadWindow { t1, t2 });
    }
    let times = y.knots().iter().chain(z.knots()).map(|k| k.0).chain([t1, t2]);
    for t in times.filter(|&t| t >= t1 && t <= t2) {
        if !(z.position(t) > y.position(t)) {
            return Err(MeasureError::PathOrder(t));
        }
    }

    let window = |t: f64| -> Result<f64, MeasureError> {
        let u = sim.sample(t)?;
        Ok(u.integrate(y.position(t), z.position(t), |w| rel_entropy(w, v0)))
    };
    let lhs = window(t2)? - window(t1)?;

    let band = Region::Band {
        t0: t1,
        t1: t2,
        lower: y.clone(),
        upper: z.clone(),
    };
    let mu = entropy_production(sim).mass(&band, Sign::Signed);
    let boundary = |path: &Path, use_right: bool| -> f64 {
        sim.traces_along(path)
            .iter()
            .map(|tr| {
                let len = tr.t1.min(t2) - tr.t0.max(t1);
                if !(len > 0.0) {
                    return 0.0;
                }
                let u = if use_right { tr.u_plus } else { tr.u_minus };
                len * (rel_flux(&sim.model, u, v0) - tr.slope * rel_entropy(u, v0))
            })
            .sum()
    };
    let rhs = mu + boundary(y, true) - boundary(z, false);
    Ok(VariationCheck {
        lhs,
        rhs,
        discrepancy: (lhs - rhs).abs(),
    })
}

/// Random ordered pair of piecewise-linear paths on `[t1, t2]` with shared
/// knot times, slopes in `[-max_slope, max_slope]`, starting inside
/// `[-half_width, half_width]`.
pub fn random_band<R: Rng + ?Sized>(
    rng: &mut R,
    t1: f64,
    t2: f64,
    half_width: f64,
    max_slope: f64,
    pieces: usize,
) -> Result<(Path, Path), MeasureError> {
    let pieces = pieces.max(1);
    let mut times: Vec<f64> = (1..pieces).map(|_| rng.random_range(t1..t2)).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup();
    times.push(t2);
    let slope = |rng: &mut R| {
        if max_slope > 0.0 {
            rng.random_range(-max_slope..=max_slope)
        } else {
            0.0
        }
    };
    let a = rng.random_range(-half_width..half_width);
    let b = rng.random_range(-half_width..half_width);
    let (mut ly, mut lz) = (a.min(b), a.max(b) + 1e-3 * half_width.max(1.0));
    let (mut yk, mut zk) = (vec![(t1, ly)], vec![(t1, lz)]);
    let mut tp = t1;
    for &t in &times {
        let sy = slope(rng);
        let mut sz = slope(rng);
        if lz + sz * (t - tp) <= ly + sy * (t - tp) {
            sz = sy;
        }
        ly += sy * (t - tp);
        lz += sz * (t - tp);
        yk.push((t, ly));
        zk.push((t, lz));
        tp = t;
    }
    Ok((Path::from_knots(yk)?, Path::from_knots(zk)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::FluxModel;
    use crate::fronttrack::{run, NonEntropicPolicy, RunConfig};
    use crate::profile::Profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const B: FluxModel = FluxModel::Burgers;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    fn pure_shock(t: f64) -> Simulation {
        run(&Profile::step(0.0, 1.0, -1.0), &B, &RunConfig::new(t)).unwrap()
    }

    fn non_entropic(t: f64) -> Simulation {
        let cfg = RunConfig::new(t)
            .policy(NonEntropicPolicy::PersistUntilCollision)
            .inadmissible([0]);
        run(&Profile::step(0.0, -1.0, -0.5), &B, &cfg).unwrap()
    }

    fn two_shock() -> Simulation {
        let p = Profile::new(vec![-1.0, 1.0], vec![2.0, 0.0, -2.0]).unwrap();
        run(&p, &B, &RunConfig::new(2.0)).unwrap()
    }

    #[test]
    fn production_examples() {
        let m = entropy_production(&pure_shock(1.0));
        assert_eq!(m.segments.len(), 1);
        assert!(close(m.segments[0].density, -2.0 / 3.0));

        let c = run(&Profile::constant(0.3), &B, &RunConfig::new(1.0)).unwrap();
        assert!(entropy_production(&c).segments.is_empty());

        let m = entropy_production(&non_entropic(3.0));
        assert!(close(m.segments[0].density, 1.0 / 96.0));
    }

    #[test]
    fn mass_examples() {
        let m = entropy_production(&non_entropic(3.0));
        let slab = Region::rect(0.0, 3.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!(close(m.mass(&slab, Sign::Plus), 1.0 / 32.0));

        let m = entropy_production(&two_shock());
        assert_eq!(m.mass(&slab, Sign::Plus), 0.0);

        let m = entropy_production(&pure_shock(2.0));
        let cone = Region::cone(1.0, 2.0, 1.0).unwrap();
        assert!(close(m.mass(&cone, Sign::Minus), 1.0 / 3.0));
    }

    #[test]
    fn boundary_conventions() {
        let m = entropy_production(&pure_shock(2.0));
        // front on the rectangle's edge counts, on the cone's edge does not
        let rect = Region::rect(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(close(m.mass(&rect, Sign::Signed), -2.0 / 3.0));
        let edge = Region::Band {
            t0: 0.0,
            t1: 1.0,
            lower: Path::line(0.0, 1.0, 0.0, 0.0),
            upper: Path::line(0.0, 1.0, 1.0, 0.0),
        };
        assert_eq!(m.mass(&edge, Sign::Signed), 0.0);
    }

    #[test]
    fn additivity() {
        let m = entropy_production(&two_shock());
        let whole = m.mass(&Region::rect(0.0, 2.0, -3.0, 3.0).unwrap(), Sign::Minus);
        let parts: f64 = [(0.0, 0.7, -3.0, 0.2), (0.0, 0.7, 0.2, 3.0), (0.7, 2.0, -3.0, 3.0)]
            .iter()
            .map(|&(a, b, c, d)| m.mass(&Region::rect(a, b, c, d).unwrap(), Sign::Minus))
            .sum();
        assert!(close(parts, whole));
        // front lifetimes: two shocks for t < 1, one stationary shock after
        let e1 = 1.0 / 12.0 * 8.0;
        let e2 = 1.0 / 12.0 * 64.0;
        assert!(close(whole, 2.0 * e1 + e2));
    }

    #[test]
    fn variation_examples() {
        let c = run(&Profile::constant(0.4), &B, &RunConfig::new(1.0)).unwrap();
        let y = Path::line(0.0, 1.0, -1.0, 0.3);
        let z = Path::line(0.0, 1.0, 1.0, -0.2);
        assert!(variation_formula_check(&c, &y, &z, 0.1, 0.0, 1.0).unwrap().discrepancy < 1e-12);

        let y = Path::line(0.0, 1.0, -2.0, -1.0);
        let z = Path::line(0.0, 1.0, 2.0, 1.0);
        let chk = variation_formula_check(&pure_shock(1.0), &y, &z, -1.0, 0.0, 1.0).unwrap();
        assert!(chk.discrepancy < 1e-10, "{chk:?}");

        let y = Path::line(0.0, 2.0, -4.0, 0.5);
        let z = Path::from_knots(vec![(0.0, 3.0), (1.5, 2.0), (2.0, 2.5)]).unwrap();
        let chk = variation_formula_check(&two_shock(), &y, &z, 0.0, 0.25, 2.0).unwrap();
        assert!(chk.discrepancy < 1e-10, "{chk:?}");

        assert!(matches!(
            variation_formula_check(&c, &z, &y, 0.0, 0.0, 1.0),
            Err(MeasureError::PathOrder(_))
        ));
    }

    #[test]
    fn random_bands_balance() {
        let p = Profile::new(vec![-1.0, 0.0, 0.5], vec![1.5, 1.0, -1.0, -1.25]).unwrap();
        let sim = run(&p, &B, &RunConfig::new(2.0).delta(0.1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (y, z) = random_band(&mut rng, 0.0, 2.0, 2.0, 1.5, 4).unwrap();
            let chk = variation_formula_check(&sim, &y, &z, 0.2, 0.0, 2.0).unwrap();
            assert!(chk.discrepancy < 1e-9, "{chk:?}");
        }
    }
}
