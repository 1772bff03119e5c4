//! Brute-force certification of the upper bound on the dissipation rate and
//! of the identities behind it, over grids and seeded random quadruples.
//!
//! Quadruples are `(u_-, u_+, u_ell, u_r)`. The index space is the full
//! lexicographic grid followed by the random samples; it is cut into fixed
//! chunks whose partial results are merged in order, so reports do not
//! depend on the worker count.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::{
    burgers_minus_d0, dbound_rhs, dissipation_rate, dissipation_rate_g_oracle, dissipation_split_terms,
    jump_entropy_cost, rel_entropy, rel_flux, DboundConstants, JumpPair, ShockDatum,
};
use crate::exec::Execution;
use crate::flux::{FluxModel, IntervalBounds};

/// Relative tolerance applied to every check.
pub const REL_TOL: f64 = 1e-9;

/// At most this many violations are listed in a report.
pub const MAX_LISTED_VIOLATIONS: usize = 100;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("axis {axis}: {reason}")]
    BadAxis { axis: &'static str, reason: String },
}

pub const AXIS_NAMES: [&str; 4] = ["u_minus", "u_plus", "u_ell", "u_r"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Range { lo: f64, hi: f64, points: usize },
    Values(Vec<f64>),
}

impl Axis {
    fn len(&self) -> usize {
        match self {
            Axis::Range { points, .. } => *points,
            Axis::Values(v) => v.len(),
        }
    }

    fn at(&self, k: usize) -> f64 {
        match self {
            Axis::Range { lo, hi, points } => {
                if k + 1 == *points {
                    *hi
                } else {
                    lo + (hi - lo) * k as f64 / (*points - 1) as f64
                }
            }
            Axis::Values(v) => v[k],
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Axis::Range { lo, hi, .. } => lo + (hi - lo) * rng.random::<f64>(),
            Axis::Values(v) => v[rng.random_range(0..v.len())],
        }
    }

    fn validate(&self, axis: &'static str) -> Result<(), VerifyError> {
        let bad = |reason: &str| {
            Err(VerifyError::BadAxis {
                axis,
                reason: reason.to_string(),
            })
        };
        match self {
            Axis::Range { lo, hi, points } => {
                if *points < 2 {
                    return bad("a range needs at least 2 points");
                }
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return bad("a range needs finite lo < hi");
                }
            }
            Axis::Values(v) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return bad("explicit values must be non-empty and finite");
                }
            }
        }
        Ok(())
    }
}

/// Which jumps a sweep covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpFilter {
    #[default]
    All,
    /// `u_- > u_+`
    Downward,
    /// `u_- <= u_+`
    Upward,
}

impl JumpFilter {
    fn admits(self, um: f64, up: f64) -> bool {
        match self {
            JumpFilter::All => true,
            JumpFilter::Downward => um > up,
            JumpFilter::Upward => um <= up,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub model: FluxModel,
    /// Axes in quadruple order `(u_-, u_+, u_ell, u_r)`.
    pub axes: [Axis; 4],
    pub random: u64,
    pub seed: u64,
    #[serde(default)]
    pub jumps: JumpFilter,
}

impl GridSpec {
    /// Same `points`-point range on all four axes.
    pub fn uniform(model: FluxModel, lo: f64, hi: f64, points: usize) -> Self {
        let axis = Axis::Range { lo, hi, points };
        Self {
            model,
            axes: [axis.clone(), axis.clone(), axis.clone(), axis],
            random: 0,
            seed: 0,
            jumps: JumpFilter::All,
        }
    }

    /// A grid holding the single quadruple `q`.
    pub fn point(model: FluxModel, q: [f64; 4]) -> Self {
        Self {
            model,
            axes: q.map(|v| Axis::Values(vec![v])),
            random: 0,
            seed: 0,
            jumps: JumpFilter::All,
        }
    }

    pub fn with_random(mut self, count: u64, seed: u64) -> Self {
        self.random = count;
        self.seed = seed;
        self
    }

    pub fn with_jumps(mut self, jumps: JumpFilter) -> Self {
        self.jumps = jumps;
        self
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        for (axis, name) in self.axes.iter().zip(AXIS_NAMES) {
            axis.validate(name)?;
        }
        Ok(())
    }

    /// Size of the full lexicographic grid, before filtering.
    pub fn raw_grid_size(&self) -> u64 {
        self.axes.iter().map(|a| a.len() as u64).product()
    }

    /// Number of grid quadruples with `u_ell > u_r` that pass the jump filter.
    pub fn grid_size(&self) -> u64 {
        let [um, up, ul, ur] = &self.axes;
        let shocks = (0..ul.len())
            .flat_map(|i| (0..ur.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| ul.at(i) > ur.at(j))
            .count() as u64;
        let jumps = (0..um.len())
            .flat_map(|i| (0..up.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| self.jumps.admits(um.at(i), up.at(j)))
            .count() as u64;
        shocks * jumps
    }

    fn grid_point(&self, index: u64) -> [f64; 4] {
        let mut rest = index;
        let mut q = [0.0; 4];
        for k in (0..4).rev() {
            let n = self.axes[k].len() as u64;
            q[k] = self.axes[k].at((rest % n) as usize);
            rest /= n;
        }
        q
    }

    fn admits(&self, q: &[f64; 4]) -> bool {
        q[2] > q[3] && self.jumps.admits(q[0], q[1])
    }
}

/// Result of one check at one quadruple: `margin >= -REL_TOL * scale` passes.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Outcome {
    lhs: f64,
    rhs: f64,
    margin: f64,
    scale: f64,
}

impl Outcome {
    /// `lhs <= rhs`
    fn le(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            margin: rhs - lhs,
            scale: 1f64.max(lhs.abs()).max(rhs.abs()),
        }
    }

    /// `lhs == rhs`
    fn eq(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            margin: -(lhs - rhs).abs(),
            scale: 1f64.max(lhs.abs()).max(rhs.abs()),
        }
    }

    /// `value` lies between `a` and `b` (in either order).
    fn between(value: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = (a.min(b), a.max(b));
        let (margin, bound) = if value - lo <= hi - value {
            (value - lo, lo)
        } else {
            (hi - value, hi)
        };
        Self {
            lhs: value,
            rhs: bound,
            margin,
            scale: 1f64.max(value.abs()).max(lo.abs()).max(hi.abs()),
        }
    }

    fn worst(self, other: Self) -> Self {
        if other.margin / other.scale < self.margin / self.scale {
            other
        } else {
            self
        }
    }

    fn violated(&self) -> bool {
        self.margin < -REL_TOL * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub index: u64,
    pub quadruple: [f64; 4],
    pub margin: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub evaluated: u64,
    pub violations: u64,
    /// Smallest margin, ties broken by the smaller index.
    pub worst: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    #[serde(flatten)]
    pub witness: Witness,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Throughput {
    pub seconds: f64,
    pub quadruples_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub kind: String,
    pub spec: GridSpec,
    pub grid_size: u64,
    pub random_evaluated: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<DboundConstants>,
    pub checks: Vec<CheckSummary>,
    pub total_violations: u64,
    pub violations: Vec<Violation>,
    pub passed: bool,
    /// Wall-clock statistics; not part of the reproducible content.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub throughput: Option<Throughput>,
}

impl VerifyReport {
    /// The report without wall-clock statistics.
    pub fn reproducible(&self) -> Self {
        Self {
            throughput: None,
            ..self.clone()
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone)]
struct CheckAcc {
    evaluated: u64,
    violations: u64,
    worst: Option<Witness>,
}

#[derive(Clone)]
struct ChunkAcc {
    checks: Vec<CheckAcc>,
    listed: Vec<(usize, Witness)>,
    points: u64,
}

impl ChunkAcc {
    fn new(n: usize) -> Self {
        Self {
            checks: vec![
                CheckAcc {
                    evaluated: 0,
                    violations: 0,
                    worst: None,
                };
                n
            ],
            listed: Vec::new(),
            points: 0,
        }
    }

    fn record(&mut self, check: usize, index: u64, q: [f64; 4], o: Outcome) {
        let acc = &mut self.checks[check];
        acc.evaluated += 1;
        let w = Witness {
            index,
            quadruple: q,
            margin: o.margin,
            lhs: o.lhs,
            rhs: o.rhs,
        };
        if acc.worst.is_none_or(|cur| o.margin < cur.margin) {
            acc.worst = Some(w);
        }
        if o.violated() {
            acc.violations += 1;
            if self.listed.len() < MAX_LISTED_VIOLATIONS {
                self.listed.push((check, w));
            }
        }
    }

    /// Merges a later chunk into this one.
    fn absorb(&mut self, later: ChunkAcc) {
        for (a, b) in self.checks.iter_mut().zip(later.checks) {
            a.evaluated += b.evaluated;
            a.violations += b.violations;
            a.worst = match (a.worst, b.worst) {
                (Some(x), Some(y)) => Some(if y.margin < x.margin { y } else { x }),
                (x, y) => x.or(y),
            };
        }
        let room = MAX_LISTED_VIOLATIONS.saturating_sub(self.listed.len());
        self.listed.extend(later.listed.into_iter().take(room));
        self.points += later.points;
    }
}

#[derive(Clone, Copy)]
enum Span {
    Grid { start: u64, end: u64 },
    Random { chunk: u64, start: u64, count: u64 },
}

fn spans(spec: &GridSpec) -> Vec<Span> {
    let raw = spec.raw_grid_size();
    let mut out = Vec::new();
    let mut s = 0;
    while s < raw {
        out.push(Span::Grid {
            start: s,
            end: (s + CHUNK).min(raw),
        });
        s += CHUNK;
    }
    let mut chunk = 0;
    let mut done = 0;
    while done < spec.random {
        let count = CHUNK.min(spec.random - done);
        out.push(Span::Random {
            chunk,
            start: raw + done,
            count,
        });
        chunk += 1;
        done += count;
    }
    out
}

fn sweep<F>(spec: &GridSpec, names: &[&str], exec: Execution, eval: F) -> (ChunkAcc, f64)
where
    F: Fn(&[f64; 4], &mut dyn FnMut(usize, Outcome)) + Sync + Send,
{
    let started = Instant::now();
    let n = names.len();
    let parts = exec.map(&spans(spec), |span| {
        let mut acc = ChunkAcc::new(n);
        let visit = |index: u64, q: [f64; 4], acc: &mut ChunkAcc| {
            acc.points += 1;
            eval(&q, &mut |check, o| acc.record(check, index, q, o));
        };
        match *span {
            Span::Grid { start, end } => {
                for index in start..end {
                    let q = spec.grid_point(index);
                    if spec.admits(&q) {
                        visit(index, q, &mut acc);
                    }
                }
            }
            Span::Random { chunk, start, count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(chunk);
                for k in 0..count {
                    let mut q = [0.0; 4];
                    for (slot, axis) in q.iter_mut().zip(&spec.axes) {
                        *slot = axis.sample(&mut rng);
                    }
                    if q[2] < q[3] {
                        q.swap(2, 3);
                    }
                    if spec.admits(&q) {
                        visit(start + k, q, &mut acc);
                    }
                }
            }
        }
        acc
    });
    let mut total = ChunkAcc::new(n);
    for part in parts {
        total.absorb(part);
    }
    (total, started.elapsed().as_secs_f64())
}

fn report(
    kind: &str,
    spec: &GridSpec,
    names: &[&str],
    constants: Option<DboundConstants>,
    acc: ChunkAcc,
    seconds: f64,
) -> VerifyReport {
    let grid_size = spec.grid_size();
    let checks: Vec<CheckSummary> = names
        .iter()
        .zip(&acc.checks)
        .map(|(name, c)| CheckSummary {
            name: name.to_string(),
            evaluated: c.evaluated,
            violations: c.violations,
            worst: c.worst,
        })
        .collect();
    let total_violations = checks.iter().map(|c| c.violations).sum();
    VerifyReport {
        kind: kind.to_string(),
        spec: spec.clone(),
        grid_size,
        random_evaluated: acc.points - grid_size,
        constants,
        checks,
        total_violations,
        violations: acc
            .listed
            .into_iter()
            .map(|(k, witness)| Violation {
                check: names[k].to_string(),
                witness,
            })
            .collect(),
        passed: total_violations == 0,
        throughput: Some(Throughput {
            seconds,
            quadruples_per_second: if seconds > 0.0 { acc.points as f64 / seconds } else { 0.0 },
        }),
    }
}

fn hull(model: &FluxModel, states: &[f64]) -> IntervalBounds {
    model.bounds_on_hull(states).expect("finite states")
}

fn dbound_outcome(model: &FluxModel, q: &[f64; 4], constants: DboundConstants) -> Outcome {
    let (j, s) = (JumpPair::new(q[0], q[1]), ShockDatum { u_ell: q[2], u_r: q[3] });
    let bounds = hull(model, q);
    let e = jump_entropy_cost(model, j);
    Outcome::le(dissipation_rate(model, j, s), dbound_rhs(e, j, s, &bounds, constants))
}

/// Checks `D <= C1 (M/alpha)^3 max(E, 0) - C2 alpha (u_ell - u_r)[(u_ell - u_-)^2 + (u_r - u_+)^2]`
/// with `alpha`, `M` taken on the hull of each quadruple.
pub fn verify_dbound(
    spec: &GridSpec,
    constants: DboundConstants,
    exec: Execution,
) -> Result<VerifyReport, VerifyError> {
    spec.validate()?;
    let model = spec.model;
    let names = ["dbound"];
    let (acc, secs) = sweep(spec, &names, exec, |q, out| {
        out(0, dbound_outcome(&model, q, constants))
    });
    Ok(report("dbound", spec, &names, Some(constants), acc, secs))
}

pub const IDENTITY_CHECKS: [&str; 11] = [
    "idE",
    "idF_minus",
    "idF_plus",
    "split_minus",
    "split_plus",
    "boundDu_minus",
    "boundDu_plus",
    "boundD0",
    "g_comparison",
    "qbound",
    "g_oracle",
];

fn identity_outcomes(model: &FluxModel, q: &[f64; 4], out: &mut dyn FnMut(usize, Outcome)) {
    let [um, up, ul, ur] = *q;
    let j = JumpPair::new(um, up);
    let s = ShockDatum { u_ell: ul, u_r: ur };
    let d = dissipation_rate(model, j, s);
    let split = dissipation_split_terms(model, j, s);
    let jump = hull(model, &[um, up]);
    let delta = up - um;

    let c = delta * delta * delta / 12.0;
    out(0, Outcome::between(split.e, jump.alpha * c, jump.m * c));

    let (am, bm) = (ul - um, ur - um);
    let (ap, bp) = (ul - up, ur - up);
    let pm = delta * (am * am - bm * bm) / 4.0;
    let pp = -delta * (ap * ap - bp * bp) / 4.0;
    out(1, Outcome::between(split.f_minus, jump.alpha * pm, jump.m * pm));
    out(2, Outcome::between(split.f_plus, jump.alpha * pp, jump.m * pp));

    out(3, Outcome::eq(d, split.e + split.f_minus + split.d_at_uminus));
    out(4, Outcome::eq(d, split.e + split.f_plus + split.d_at_uplus));

    for (k, u, a, b, du) in [(5, um, am, bm, split.d_at_uminus), (6, up, ap, bp, split.d_at_uplus)] {
        let alpha = hull(model, &[u, ul, ur]).alpha;
        out(k, Outcome::le(du, -alpha / 6.0 * (a * a * a - b * b * b)));
    }

    if um >= up {
        let (h, k) = (ul - um, ur - up);
        out(7, Outcome::le((ul - ur) * (h * h + k * k) / 12.0, burgers_minus_d0(j, s)));
    }
    if um > up {
        let alpha = hull(model, q).alpha;
        out(8, Outcome::le(d, -alpha * burgers_minus_d0(j, s)));
    }

    let speed = hull(model, q).s;
    let mut worst: Option<Outcome> = None;
    for (i, &u) in q.iter().enumerate() {
        for (k, &v) in q.iter().enumerate() {
            if i != k {
                let o = Outcome::le(rel_flux(model, u, v).abs(), speed * rel_entropy(u, v));
                worst = Some(worst.map_or(o, |w| w.worst(o)));
            }
        }
    }
    out(9, worst.expect("twelve ordered pairs"));

    match dissipation_rate_g_oracle(model, j, s) {
        Ok(g) => out(10, Outcome::eq(d, g)),
        Err(_) => out(
            10,
            Outcome {
                lhs: d,
                rhs: f64::NAN,
                margin: f64::NEG_INFINITY,
                scale: 1.0,
            },
        ),
    }
}

/// Checks the jump-cost and split brackets, the bounds on `D(u, u)` and on
/// the Burgers rate, `|q(u; v)| <= S eta(u | v)` over all ordered pairs of
/// the four states, and the integral representation of `D` through `g`.
pub fn verify_identities(spec: &GridSpec, exec: Execution) -> Result<VerifyReport, VerifyError> {
    spec.validate()?;
    let model = spec.model;
    let (acc, secs) = sweep(spec, &IDENTITY_CHECKS, exec, |q, out| identity_outcomes(&model, q, out));
    Ok(report("identities", spec, &IDENTITY_CHECKS, None, acc, secs))
}

/// Result of a constant search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum ConstantEstimate {
    /// No value in the searched direction produces a violation.
    Unconstrained,
    Bound(f64),
    /// Even the most favourable value is violated.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpConstants {
    /// Smallest `C1` (with the default `C2`) without violations.
    pub c1_min: ConstantEstimate,
    /// Largest `C2` (with the default `C1`) without violations.
    pub c2_max: ConstantEstimate,
    /// Worst quadruple at the reported `C1`, and at the reported `C2`.
    pub c1_witness: Option<Witness>,
    pub c2_witness: Option<Witness>,
}

const BISECTION_TOL: f64 = 1e-3;

/// Brackets the sharp constants on the grid's quadruples by bisection.
pub fn estimate_sharp_constants(spec: &GridSpec, exec: Execution) -> Result<SharpConstants, VerifyError> {
    spec.validate()?;
    let defaults = DboundConstants::default();
    let run = |c: DboundConstants| verify_dbound(spec, c, exec);
    let clean = |c: DboundConstants| -> Result<bool, VerifyError> { Ok(run(c)?.passed) };
    let witness = |c: DboundConstants| -> Result<Option<Witness>, VerifyError> {
        Ok(run(c)?.checks[0].worst)
    };

    // C1: larger is easier
    let with_c1 = |c1| DboundConstants { c1, ..defaults };
    let c1_min = if clean(with_c1(0.0))? {
        ConstantEstimate::Unconstrained
    } else {
        let mut hi = defaults.c1.max(1.0);
        let mut grow = 0;
        while !clean(with_c1(hi))? && grow < 40 {
            hi *= 2.0;
            grow += 1;
        }
        if grow == 40 {
            ConstantEstimate::Infeasible
        } else {
            let mut lo = 0.0;
            while hi - lo > BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                if clean(with_c1(mid))? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            ConstantEstimate::Bound(hi)
        }
    };

    // C2: smaller is easier
    let with_c2 = |c2| DboundConstants { c2, ..defaults };
    let c2_max = if !clean(with_c2(0.0))? {
        ConstantEstimate::Infeasible
    } else {
        let mut hi = defaults.c2.max(BISECTION_TOL);
        let mut grow = 0;
        while clean(with_c2(hi))? && grow < 40 {
            hi *= 2.0;
            grow += 1;
        }
        if grow == 40 {
            ConstantEstimate::Unconstrained
        } else {
            let mut lo = 0.0;
            while hi - lo > BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                if clean(with_c2(mid))? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            ConstantEstimate::Bound(lo)
        }
    };

    Ok(SharpConstants {
        c1_witness: match c1_min {
            ConstantEstimate::Bound(c1) => witness(with_c1(c1))?,
            _ => None,
        },
        c2_witness: match c2_max {
            ConstantEstimate::Bound(c2) => witness(with_c2(c2))?,
            _ => None,
        },
        c1_min,
        c2_max,
    })
}
