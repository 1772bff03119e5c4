//! Event-driven front tracking for piecewise-constant data.
//!
//! Every discontinuity moves at its Rankine–Hugoniot speed, so the evolved
//! profile is an exact weak solution. Upward jumps are either split into a
//! fan of small rarefaction pieces or kept as a single non-entropic front,
//! which is how the engine produces solutions with positive entropy
//! production.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flux::FluxModel;
use crate::profile::{Path, Profile, ProfileError};

/// Pairs whose collision times differ by at most this are merged into one event.
pub const TIME_TOL: f64 = 1e-12;

/// Relative distance under which a path is taken to run along a front.
pub const COINCIDE_TOL: f64 = 1e-10;

pub const DEFAULT_EVENT_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("rarefaction step must be positive and finite (got {0})")]
    BadDelta(f64),
    #[error("final time must be positive and finite (got {0})")]
    BadHorizon(f64),
    #[error("event cap of {cap} exceeded at t = {time}")]
    EventCap { cap: usize, time: f64 },
    #[error("time {t} outside [0, {t_final}]")]
    TimeOutOfRange { t: f64, t_final: f64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

pub type FrontId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontKind {
    EntropicShock,
    RarefactionPiece,
    NonEntropic,
}

impl FrontKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FrontKind::EntropicShock => "entropic_shock",
            FrontKind::RarefactionPiece => "rarefaction_piece",
            FrontKind::NonEntropic => "non_entropic",
        }
    }
}

/// How upward jumps created by collisions are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonEntropicPolicy {
    /// Upward jumps formed by a collision stay a single non-entropic front.
    PersistUntilCollision,
    /// Every collision is resolved by the admissible Riemann solution.
    #[default]
    ResolveAtCollision,
}

/// One outgoing wave of a Riemann solution, before it is placed in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub speed: f64,
    pub u_left: f64,
    pub u_right: f64,
    pub kind: FrontKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub id: FrontId,
    pub born_at: f64,
    pub position_at_birth: f64,
    pub speed: f64,
    pub u_left: f64,
    pub u_right: f64,
    pub kind: FrontKind,
    pub died_at: Option<f64>,
}

impl Front {
    #[inline]
    pub fn position_at(&self, t: f64) -> f64 {
        self.position_at_birth + self.speed * (t - self.born_at)
    }
}

/// A time interval during which the set of fronts does not change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub t_start: f64,
    pub t_end: f64,
    /// Active fronts, left to right.
    pub fronts: Vec<FrontId>,
    /// `fronts.len() + 1` constant states between them.
    pub states: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub position: f64,
    pub incoming: Vec<FrontId>,
    pub outgoing: Vec<FrontId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub policy: NonEntropicPolicy,
    pub delta: f64,
    pub t_final: f64,
    pub event_cap: usize,
    /// Indices of initial jumps (into the profile's breakpoints) whose
    /// upward jumps are kept as non-entropic fronts.
    pub inadmissible: BTreeSet<usize>,
}

impl RunConfig {
    pub fn new(t_final: f64) -> Self {
        Self {
            policy: NonEntropicPolicy::default(),
            delta: 0.01,
            t_final,
            event_cap: DEFAULT_EVENT_CAP,
            inadmissible: BTreeSet::new(),
        }
    }

    pub fn policy(mut self, policy: NonEntropicPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn inadmissible(mut self, jumps: impl IntoIterator<Item = usize>) -> Self {
        self.inadmissible.extend(jumps);
        self
    }
}

/// One constant-trace stretch of a path: on `(t0, t1)` the path moves with
/// `slope` and sees `u_minus` on its left and `u_plus` on its right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceInterval {
    pub t0: f64,
    pub t1: f64,
    pub slope: f64,
    pub u_minus: f64,
    pub u_plus: f64,
}

/// Complete front history of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub model: FluxModel,
    pub policy: NonEntropicPolicy,
    pub delta: f64,
    pub t_final: f64,
    pub initial: Profile,
    pub fronts: Vec<Front>,
    pub epochs: Vec<Epoch>,
    pub events: Vec<Event>,
}

/// Solves the Riemann problem `(u_left, u_right)` with fronts only.
///
/// Downward jumps give one entropic shock. Upward jumps give either
/// `ceil(jump / delta)` equal rarefaction pieces, each at its own secant
/// speed, or a single non-entropic front when `admissible` is false.
pub fn solve_riemann(
    model: &FluxModel,
    u_left: f64,
    u_right: f64,
    delta: f64,
    admissible: bool,
) -> Result<Vec<Wave>, TrackError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(TrackError::BadDelta(delta));
    }
    if u_left == u_right {
        return Ok(Vec::new());
    }
    let single = |kind| {
        vec![Wave {
            speed: model.shock_speed(u_left, u_right),
            u_left,
            u_right,
            kind,
        }]
    };
    if u_left > u_right {
        return Ok(single(FrontKind::EntropicShock));
    }
    if !admissible {
        return Ok(single(FrontKind::NonEntropic));
    }
    let jump = u_right - u_left;
    let ratio = jump / delta;
    let pieces = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
        ratio.round()
    } else {
        ratio.ceil()
    }
    .max(1.0) as usize;
    let step = jump / pieces as f64;
    let state = |k: usize| {
        if k == pieces {
            u_right
        } else {
            u_left + step * k as f64
        }
    };
    Ok((0..pieces)
        .map(|k| {
            let (a, b) = (state(k), state(k + 1));
            Wave {
                speed: model.shock_speed(a, b),
                u_left: a,
                u_right: b,
                kind: FrontKind::RarefactionPiece,
            }
        })
        .collect())
}

/// Evolves `initial` on `[0, cfg.t_final]`.
pub fn run(initial: &Profile, model: &FluxModel, cfg: &RunConfig) -> Result<Simulation, TrackError> {
    if !(cfg.delta > 0.0 && cfg.delta.is_finite()) {
        return Err(TrackError::BadDelta(cfg.delta));
    }
    if !(cfg.t_final > 0.0 && cfg.t_final.is_finite()) {
        return Err(TrackError::BadHorizon(cfg.t_final));
    }
    let mut fronts: Vec<Front> = Vec::new();
    let mut active: Vec<FrontId> = Vec::new();
    let values = initial.values();
    for (i, &x) in initial.breakpoints().iter().enumerate() {
        let admissible = !cfg.inadmissible.contains(&i);
        for w in solve_riemann(model, values[i], values[i + 1], cfg.delta, admissible)? {
            active.push(spawn(&mut fronts, w, 0.0, x));
        }
    }

    let left_tail = initial.left_tail();
    let states_of = |fronts: &[Front], active: &[FrontId]| -> Vec<f64> {
        std::iter::once(left_tail)
            .chain(active.iter().map(|&id| fronts[id].u_right))
            .collect()
    };

    let mut epochs = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    let mut t = 0.0;
    loop {
        let pair_times: Vec<Option<f64>> = active
            .windows(2)
            .map(|w| collision_time(&fronts[w[0]], &fronts[w[1]], t))
            .collect();
        let next = pair_times.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        if !(next <= cfg.t_final) {
            epochs.push(Epoch {
                t_start: t,
                t_end: cfg.t_final,
                states: states_of(&fronts, &active),
                fronts: active,
            });
            break;
        }
        epochs.push(Epoch {
            t_start: t,
            t_end: next,
            states: states_of(&fronts, &active),
            fronts: active.clone(),
        });

        let flagged: Vec<bool> = pair_times
            .iter()
            .map(|pt| matches!(pt, Some(tc) if *tc <= next + TIME_TOL))
            .collect();
        let mut survivors = Vec::with_capacity(active.len());
        let mut i = 0;
        while i < active.len() {
            if i + 1 < active.len() && flagged[i] {
                let mut j = i;
                while j + 1 < active.len() && flagged[j] {
                    j += 1;
                }
                let incoming: Vec<FrontId> = active[i..=j].to_vec();
                let position = fronts[incoming[0]].position_at(next);
                let u_left = fronts[incoming[0]].u_left;
                let u_right = fronts[*incoming.last().unwrap()].u_right;
                let admissible =
                    cfg.policy == NonEntropicPolicy::ResolveAtCollision || u_left > u_right;
                for &id in &incoming {
                    fronts[id].died_at = Some(next);
                }
                let outgoing: Vec<FrontId> = solve_riemann(model, u_left, u_right, cfg.delta, admissible)?
                    .into_iter()
                    .map(|w| spawn(&mut fronts, w, next, position))
                    .collect();
                survivors.extend_from_slice(&outgoing);
                events.push(Event {
                    time: next,
                    position,
                    incoming,
                    outgoing,
                });
                if events.len() > cfg.event_cap {
                    return Err(TrackError::EventCap {
                        cap: cfg.event_cap,
                        time: next,
                    });
                }
                i = j + 1;
            } else {
                survivors.push(active[i]);
                i += 1;
            }
        }
        active = survivors;
        t = next;
    }

    Ok(Simulation {
        model: *model,
        policy: cfg.policy,
        delta: cfg.delta,
        t_final: cfg.t_final,
        initial: initial.clone(),
        fronts,
        epochs,
        events,
    })
}

fn spawn(fronts: &mut Vec<Front>, w: Wave, t: f64, x: f64) -> FrontId {
    let id = fronts.len();
    fronts.push(Front {
        id,
        born_at: t,
        position_at_birth: x,
        speed: w.speed,
        u_left: w.u_left,
        u_right: w.u_right,
        kind: w.kind,
        died_at: None,
    });
    id
}

/// Time at which `right` catches `left` (or `left` catches `right`), if ever.
fn collision_time(left: &Front, right: &Front, now: f64) -> Option<f64> {
    let closing = left.speed - right.speed;
    if !(closing > 0.0) {
        return None;
    }
    let gap = (right.position_at(now) - left.position_at(now)).max(0.0);
    Some(now + gap / closing)
}

impl Simulation {
    pub fn front(&self, id: FrontId) -> &Front {
        &self.fronts[id]
    }

    /// Index of the epoch in force at `t`, taking the post-event one at
    /// event times.
    pub fn epoch_index_at(&self, t: f64) -> Result<usize, TrackError> {
        if !(t >= 0.0 && t <= self.t_final) {
            return Err(TrackError::TimeOutOfRange {
                t,
                t_final: self.t_final,
            });
        }
        Ok(self.epochs.partition_point(|e| e.t_start <= t).saturating_sub(1))
    }

    /// Profile `u(t, .)`.
    pub fn sample(&self, t: f64) -> Result<Profile, TrackError> {
        let e = &self.epochs[self.epoch_index_at(t)?];
        Ok(Profile::from_sorted_jumps(
            e.states[0],
            e.fronts.iter().map(|&id| {
                let f = &self.fronts[id];
                (f.position_at(t), f.u_right)
            }),
        ))
    }

    /// `int_a^b u(t, x) dx`.
    pub fn mass(&self, t: f64, a: f64, b: f64) -> Result<f64, TrackError> {
        Ok(self.sample(t)?.integrate(a, b, |u| u))
    }

    pub fn event_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.events.iter().map(|e| e.time).collect();
        ts.dedup();
        ts
    }

    /// Largest Rankine–Hugoniot residual over all fronts.
    pub fn max_rh_residual(&self) -> f64 {
        self.fronts
            .iter()
            .map(|f| {
                (self.model.f(f.u_right) - self.model.f(f.u_left) - f.speed * (f.u_right - f.u_left)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// One-sided traces of the solution along `path`.
    ///
    /// Where the path runs along a front the traces are that front's states;
    /// elsewhere both traces equal the ambient constant. Isolated crossing
    /// times are cut points between intervals.
    pub fn traces_along(&self, path: &Path) -> Vec<TraceInterval> {
        let mut out: Vec<TraceInterval> = Vec::new();
        for e in &self.epochs {
            if !(e.t_end > e.t_start) {
                continue;
            }
            for (lo, hi, x0, slope) in path.pieces_in(e.t_start, e.t_end) {
                let x_at = |t: f64| x0 + slope * (t - lo);
                let mut cuts = vec![lo, hi];
                let mut riding = None;
                for &id in &e.fronts {
                    let f = &self.fronts[id];
                    let da = x_at(lo) - f.position_at(lo);
                    let db = x_at(hi) - f.position_at(hi);
                    let tol = COINCIDE_TOL * (1.0 + x_at(lo).abs().max(x_at(hi).abs()));
                    if da.abs() <= tol && db.abs() <= tol {
                        riding = Some(f);
                        break;
                    }
                    if (da < 0.0) != (db < 0.0) && da != 0.0 && db != 0.0 {
                        let tc = lo + (hi - lo) * da / (da - db);
                        if tc > lo && tc < hi {
                            cuts.push(tc);
                        }
                    }
                }
                if let Some(f) = riding {
                    push_merged(&mut out, TraceInterval {
                        t0: lo,
                        t1: hi,
                        slope,
                        u_minus: f.u_left,
                        u_plus: f.u_right,
                    });
                    continue;
                }
                cuts.sort_by(|a, b| a.total_cmp(b));
                for w in cuts.windows(2) {
                    if !(w[1] > w[0]) {
                        continue;
                    }
                    let m = 0.5 * (w[0] + w[1]);
                    let xm = x_at(m);
                    let k = e
                        .fronts
                        .iter()
                        .take_while(|&&id| self.fronts[id].position_at(m) < xm)
                        .count();
                    let u = e.states[k];
                    push_merged(&mut out, TraceInterval {
                        t0: w[0],
                        t1: w[1],
                        slope,
                        u_minus: u,
                        u_plus: u,
                    });
                }
            }
        }
        out
    }
}

fn push_merged(out: &mut Vec<TraceInterval>, next: TraceInterval) {
    if let Some(last) = out.last_mut() {
        if last.t1 == next.t0
            && last.slope == next.slope
            && last.u_minus == next.u_minus
            && last.u_plus == next.u_plus
        {
            last.t1 = next.t1;
            return;
        }
    }
    out.push(next);
}
