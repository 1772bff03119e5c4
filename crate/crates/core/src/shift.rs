//! The shift path `x(t)` of the tracked shock and its drift `h(t) = x(t) - sigma t`.
//!
//! The path is the generalized characteristic through the origin: it rides
//! a front whenever it is on one and otherwise moves with the characteristic
//! speed of the ambient state.

use serde::Serialize;
use thiserror::Error;

use crate::fronttrack::{FrontId, Simulation, COINCIDE_TOL};
use crate::profile::Path;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShiftError {
    #[error("no front starts at x = 0")]
    NoFrontAtOrigin,
}

/// Piecewise-linear shift path; `attached[i]` names the front carrying piece `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftPath {
    pub path: Path,
    pub attached: Vec<Option<FrontId>>,
}

enum Mode {
    On(FrontId),
    Free,
}

struct Builder {
    knots: Vec<(f64, f64)>,
    slopes: Vec<f64>,
    attached: Vec<Option<FrontId>>,
}

impl Builder {
    fn here(&self) -> (f64, f64) {
        *self.knots.last().unwrap()
    }

    fn push(&mut self, t: f64, x: f64, slope: f64, on: Option<FrontId>) {
        if t > self.here().0 {
            self.knots.push((t, x));
            self.slopes.push(slope);
            self.attached.push(on);
        }
    }
}

/// Index of the front in `candidates` whose speed is closest to `slope`;
/// ties go to the leftmost.
fn closest_speed(sim: &Simulation, candidates: &[FrontId], slope: f64) -> Option<FrontId> {
    let mut best: Option<(FrontId, f64)> = None;
    for &id in candidates {
        let d = (sim.front(id).speed - slope).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((id, d));
        }
    }
    best.map(|(id, _)| id)
}

/// Builds the shift path on `[0, T]`.
///
/// At `t = 0` the path starts on the front at the origin (for a fan, the
/// piece whose speed is closest to `sigma`). Without such a front the path
/// starts free, unless `require_front_at_origin` is set.
pub fn construct_shift(
    sim: &Simulation,
    sigma: f64,
    require_front_at_origin: bool,
) -> Result<ShiftPath, ShiftError> {
    let model = &sim.model;
    let mut death: Vec<Option<usize>> = vec![None; sim.fronts.len()];
    for (k, ev) in sim.events.iter().enumerate() {
        for &id in &ev.incoming {
            death[id] = Some(k);
        }
    }

    let at_origin: Vec<FrontId> = sim.epochs[0]
        .fronts
        .iter()
        .copied()
        .filter(|&id| sim.front(id).position_at_birth.abs() <= COINCIDE_TOL)
        .collect();
    let mut mode = match closest_speed(sim, &at_origin, sigma) {
        Some(id) => Mode::On(id),
        None if require_front_at_origin => return Err(ShiftError::NoFrontAtOrigin),
        None => Mode::Free,
    };
    let mut b = Builder {
        knots: vec![(0.0, 0.0)],
        slopes: Vec::new(),
        attached: Vec::new(),
    };
    let mut slope = sigma;

    for (k, e) in sim.epochs.iter().enumerate() {
        let (t, x) = b.here();
        if k > 0 {
            let prev_end = sim.epochs[k - 1].t_end;
            mode = match mode {
                Mode::On(mut id) => loop {
                    if e.fronts.contains(&id) {
                        break Mode::On(id);
                    }
                    let ev = &sim.events[death[id].expect("inactive front without a death event")];
                    match closest_speed(sim, &ev.outgoing, slope) {
                        Some(next) => id = next,
                        None => break Mode::Free,
                    }
                },
                Mode::Free => sim
                    .events
                    .iter()
                    .filter(|ev| ev.time == prev_end && (ev.position - x).abs() <= COINCIDE_TOL * (1.0 + x.abs()))
                    .find_map(|ev| closest_speed(sim, &ev.outgoing, slope).filter(|id| e.fronts.contains(id)))
                    .map_or(Mode::Free, Mode::On),
            };
        }
        if !(e.t_end > e.t_start) {
            continue;
        }
        if let Mode::Free = mode {
            let region = e
                .fronts
                .iter()
                .take_while(|&&id| sim.front(id).position_at(t) < x)
                .count();
            let c = model.f1(e.states[region]);
            let mut hit: Option<(f64, FrontId)> = None;
            if region > 0 {
                let left = sim.front(e.fronts[region - 1]);
                if left.speed > c {
                    hit = Some((t + (x - left.position_at(t)).max(0.0) / (left.speed - c), left.id));
                }
            }
            if let Some(&rid) = e.fronts.get(region) {
                let right = sim.front(rid);
                if right.speed < c {
                    let th = t + (right.position_at(t) - x).max(0.0) / (c - right.speed);
                    if hit.is_none_or(|(tl, _)| th < tl) {
                        hit = Some((th, rid));
                    }
                }
            }
            slope = c;
            match hit {
                Some((th, id)) if th <= e.t_end => {
                    b.push(th, sim.front(id).position_at(th), c, None);
                    mode = Mode::On(id);
                }
                _ => {
                    b.push(e.t_end, x + c * (e.t_end - t), c, None);
                    continue;
                }
            }
        }
        if let Mode::On(id) = mode {
            let f = sim.front(id);
            slope = f.speed;
            b.push(e.t_end, f.position_at(e.t_end), f.speed, Some(id));
        }
    }

    if b.slopes.is_empty() {
        // degenerate horizon: keep a valid one-piece path
        b.knots.push((sim.t_final, slope * sim.t_final));
        b.slopes.push(slope);
        b.attached.push(None);
    }
    Ok(ShiftPath {
        path: Path::from_parts(b.knots, b.slopes),
        attached: b.attached,
    })
}

/// Drift `h(t) = x(t) - sigma t`.
pub fn drift(path: &Path, sigma: f64) -> Path {
    path.minus_drift(sigma)
}

/// `int_0^t h'(tau)^2 dtau`.
pub fn drift_energy(path: &Path, sigma: f64, t: f64) -> f64 {
    path.pieces_in(0.0, t)
        .iter()
        .map(|&(a, b, _, s)| (s - sigma).powi(2) * (b - a))
        .sum()
}
