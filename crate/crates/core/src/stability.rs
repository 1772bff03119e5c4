//! Both sides of the L2 stability estimate for a tracked shock and of the
//! drift estimate, evaluated exactly on front-tracking solutions.

use serde::Serialize;
use thiserror::Error;

use crate::config::{Constants, RegionSpec, Scenario};
use crate::entropy::{dbound_rhs, dissipation_rate, jump_entropy_cost, rel_entropy, JumpPair, ShockDatum};
use crate::exec::Execution;
use crate::flux::{FluxError, FluxModel, IntervalBounds};
use crate::fronttrack::{run, FrontKind, NonEntropicPolicy, Simulation, TrackError};
use crate::measure::{entropy_production, EntropyMeasure, MeasureError, Region, Sign};
use crate::profile::{Path, Profile};
use crate::shift::{construct_shift, drift, drift_energy, ShiftError, ShiftPath};

pub const SCHEMA_VERSION: u32 = 1;

/// Margins above this count as satisfied.
pub const MARGIN_TOL: f64 = -1e-9;

/// Samples of the default uniform time grid.
pub const DEFAULT_GRID_STEPS: usize = 64;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

impl StabilityError {
    pub fn is_event_cap(&self) -> bool {
        matches!(self, StabilityError::Track(TrackError::EventCap { .. }))
    }
}

/// Bounds on the smallest interval holding both shock states and all initial values.
pub fn scenario_bounds(model: &FluxModel, initial: &Profile, shock: ShockDatum) -> Result<IntervalBounds, FluxError> {
    model.bounds_on_interval(
        shock.u_r.min(initial.min_value()),
        shock.u_ell.max(initial.max_value()),
    )
}

fn shock_profile(path: &Path, shock: ShockDatum, t: f64) -> Profile {
    Profile::step(path.position(t), shock.u_ell, shock.u_r)
}

/// `int_a^b (u(t, x) - u_shock(x - x(t)))^2 dx`.
pub fn relative_l2(
    sim: &Simulation,
    path: &Path,
    shock: ShockDatum,
    t: f64,
    a: f64,
    b: f64,
) -> Result<f64, TrackError> {
    Ok(sim.sample(t)?.l2_distance_sq(&shock_profile(path, shock, t), a, b))
}

/// `int_a^b eta(u(t, x) | u_shock(x - x(t))) dx`, split at `x(t)`.
pub fn relative_entropy_window(
    sim: &Simulation,
    path: &Path,
    shock: ShockDatum,
    t: f64,
    a: f64,
    b: f64,
) -> Result<f64, TrackError> {
    let u = sim.sample(t)?;
    let xt = path.position(t);
    Ok(u.integrate(a, b.min(xt), |w| rel_entropy(w, shock.u_ell))
        + u.integrate(a.max(xt), b, |w| rel_entropy(w, shock.u_r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremRow {
    pub t: f64,
    #[serde(rename = "R")]
    pub r: f64,
    /// Relative L2 distance at `t` on `[-R, R]`.
    pub lhs: f64,
    /// Relative L2 distance at `0` on `[-R - tS, R + tS]`.
    pub initial_term: f64,
    /// Positive production on `[0, t] x [-R - tS, R + tS]`.
    pub mu_plus_rect: f64,
    /// Positive production on the shrinking cone of radius `R + tS`.
    pub mu_plus_cone: f64,
    pub rhs: f64,
    pub margin: f64,
    /// `initial_term - lhs`, the estimate without any production term.
    pub contraction_margin: f64,
    /// Relative entropy on `[-R, R]`; equals `lhs / 2`.
    pub f_window: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn theorem_check(
    sim: &Simulation,
    measure: &EntropyMeasure,
    path: &Path,
    shock: ShockDatum,
    bounds: &IntervalBounds,
    t: f64,
    r: f64,
    c_thm: f64,
) -> Result<TheoremRow, StabilityError> {
    let wide = r + t * bounds.s;
    let lhs = relative_l2(sim, path, shock, t, -r, r)?;
    let initial_term = relative_l2(sim, path, shock, 0.0, -wide, wide)?;
    let mu_plus_rect = measure.mass(&Region::rect(0.0, t, -wide, wide)?, Sign::Plus);
    let mu_plus_cone = measure.mass(&Region::cone(wide, bounds.s, t)?, Sign::Plus);
    let rhs = initial_term + c_thm * bounds.stiffness() * mu_plus_rect;
    Ok(TheoremRow {
        t,
        r,
        lhs,
        initial_term,
        mu_plus_rect,
        mu_plus_cone,
        rhs,
        margin: rhs - lhs,
        contraction_margin: initial_term - lhs,
        f_window: relative_entropy_window(sim, path, shock, t, -r, r)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRow {
    pub t: f64,
    /// Half-width `2 S t` of the window.
    pub window: f64,
    pub initial_term: f64,
    pub mu_plus: f64,
    pub drift_energy: f64,
    /// `initial_term + C_thm (M/alpha)^3 mu_plus`
    pub budget: f64,
    /// `c_drift alpha / M^p (u_ell - u_r) drift_energy`
    pub cost: f64,
    pub margin: f64,
    /// `cost / budget` (zero when both vanish).
    pub saturation: f64,
}

pub fn drift_check(
    sim: &Simulation,
    measure: &EntropyMeasure,
    path: &Path,
    shock: ShockDatum,
    bounds: &IntervalBounds,
    t: f64,
    constants: &Constants,
) -> Result<DriftRow, StabilityError> {
    let sigma = shock.speed(&sim.model);
    let window = 2.0 * bounds.s * t;
    let initial_term = relative_l2(sim, path, shock, 0.0, -window, window)?;
    let mu_plus = if t > 0.0 {
        measure.mass(&Region::rect(0.0, t, -window, window)?, Sign::Plus)
    } else {
        0.0
    };
    let energy = drift_energy(path, sigma, t);
    let budget = initial_term + constants.c_thm * bounds.stiffness() * mu_plus;
    let cost = constants.c_drift * bounds.alpha / bounds.m.powf(constants.drift_exponent)
        * (shock.u_ell - shock.u_r)
        * energy;
    Ok(DriftRow {
        t,
        window,
        initial_term,
        mu_plus,
        drift_energy: energy,
        budget,
        cost,
        margin: budget - cost,
        saturation: if budget > 0.0 { cost / budget } else { 0.0 },
    })
}

/// Default grid: uniform samples, event times, and the times at which the
/// path leaves each window's shrinking cone (`|x(t)| + S t = R`).
pub fn time_grid(sim: &Simulation, path: &Path, speed_bound: f64, windows: &[f64]) -> Vec<f64> {
    let t_final = sim.t_final;
    let mut ts: Vec<f64> = (0..=DEFAULT_GRID_STEPS)
        .map(|k| t_final * k as f64 / DEFAULT_GRID_STEPS as f64)
        .collect();
    ts.extend(sim.event_times());
    for &r in windows {
        for (a, b, x0, slope) in path.pieces_in(0.0, t_final) {
            for sign in [1.0, -1.0] {
                // sign * x(t) + S t = R on this piece
                let rate = sign * slope + speed_bound;
                if rate != 0.0 {
                    let tc = a + (r - sign * x0 - speed_bound * a) / rate;
                    if tc >= a && tc <= b && sign * path.position(tc) >= 0.0 {
                        ts.push(tc);
                    }
                }
            }
        }
    }
    ts.retain(|t| *t >= 0.0 && *t <= t_final);
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.dedup();
    ts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMass {
    pub region: RegionSpec,
    pub plus: f64,
    pub minus: f64,
    pub signed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftDiagnostics {
    /// Largest excess of a slope over `[min f'(u_-+), max f'(u_-+)]`.
    pub inclusion_violation: f64,
    /// Largest `|x' - sigma(u_-, u_+)|` (or `|x' - f'(u)|` off fronts).
    pub speed_residual: f64,
    /// Largest `|x(t)| - S t`, clamped at zero.
    pub cone_violation: f64,
    /// Smallest margin of the upper bound on `D` along the path.
    pub dbound_min_margin: f64,
}

pub fn shift_diagnostics(
    sim: &Simulation,
    path: &Path,
    shock: ShockDatum,
    speed_bound: f64,
    dbound: crate::entropy::DboundConstants,
) -> Result<ShiftDiagnostics, FluxError> {
    let model = &sim.model;
    let mut out = ShiftDiagnostics {
        inclusion_violation: 0.0,
        speed_residual: 0.0,
        cone_violation: 0.0,
        dbound_min_margin: f64::INFINITY,
    };
    for tr in sim.traces_along(path) {
        let (a, b) = (model.f1(tr.u_minus), model.f1(tr.u_plus));
        let excess = (a.min(b) - tr.slope).max(tr.slope - a.max(b)).max(0.0);
        out.inclusion_violation = out.inclusion_violation.max(excess);
        let expected = if tr.u_minus == tr.u_plus {
            a
        } else {
            model.shock_speed(tr.u_minus, tr.u_plus)
        };
        out.speed_residual = out.speed_residual.max((tr.slope - expected).abs());

        let j = JumpPair::new(tr.u_minus, tr.u_plus);
        let bounds = model.bounds_on_hull(&[tr.u_minus, tr.u_plus, shock.u_ell, shock.u_r])?;
        let e = jump_entropy_cost(model, j);
        let margin = dbound_rhs(e, j, shock, &bounds, dbound) - dissipation_rate(model, j, shock);
        out.dbound_min_margin = out.dbound_min_margin.min(margin);
    }
    for &(t, x) in path.knots() {
        out.cone_violation = out.cone_violation.max(x.abs() - speed_bound * t);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub front_count: usize,
    pub event_count: usize,
    pub rh_residual_max: f64,
    /// `|m(T) - m(0) - T (f(u_left_tail) - f(u_right_tail))| / max(1, |m(0)|)`
    /// over a window containing every front.
    pub mass_residual_rel: f64,
    pub mass_window: (f64, f64),
    pub mu_plus_total: f64,
    pub mu_minus_total: f64,
    /// No front ever produces entropy.
    pub production_free: bool,
    pub shift: ShiftDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub min_margin: f64,
    pub min_drift_margin: f64,
    pub min_contraction_margin: f64,
    pub max_drift_saturation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub scenario_id: String,
    pub config_sha256: String,
    pub model: FluxModel,
    pub policy: NonEntropicPolicy,
    pub delta: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub shock: ShockDatum,
    pub sigma: f64,
    pub bounds: IntervalBounds,
    pub constants: Constants,
    pub windows: Vec<f64>,
    pub times: Vec<f64>,
    pub rows: Vec<TheoremRow>,
    pub drift: Vec<DriftRow>,
    pub shift_knots: Vec<(f64, f64)>,
    pub drift_knots: Vec<(f64, f64)>,
    pub regions: Vec<RegionMass>,
    pub diagnostics: Diagnostics,
    pub summary: Summary,
}

/// Everything a scenario run produces.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub simulation: Simulation,
    pub measure: EntropyMeasure,
    pub shift: ShiftPath,
    pub report: StabilityReport,
}

pub fn simulate(scenario: &Scenario) -> Result<Simulation, TrackError> {
    run(&scenario.initial, &scenario.model, &scenario.run)
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun, StabilityError> {
    let sim = simulate(scenario)?;
    let model = scenario.model;
    let shock = scenario.shock;
    let sigma = shock.speed(&model);
    let bounds = scenario_bounds(&model, &scenario.initial, shock)?;
    let measure = entropy_production(&sim);
    let shift = construct_shift(&sim, sigma, scenario.shock_at_origin)?;
    let path = &shift.path;
    let constants = &scenario.constants;

    let times = match &scenario.sample_times {
        Some(ts) => {
            let mut ts = ts.clone();
            ts.sort_by(|a, b| a.total_cmp(b));
            ts.dedup();
            ts
        }
        None => time_grid(&sim, path, bounds.s, &scenario.windows),
    };
    let mut rows = Vec::with_capacity(times.len() * scenario.windows.len());
    let mut drift_rows = Vec::with_capacity(times.len());
    for &t in &times {
        for &r in &scenario.windows {
            rows.push(theorem_check(&sim, &measure, path, shock, &bounds, t, r, constants.c_thm)?);
        }
        drift_rows.push(drift_check(&sim, &measure, path, shock, &bounds, t, constants)?);
    }

    let regions = scenario
        .regions
        .iter()
        .map(|spec| {
            let region = match *spec {
                RegionSpec::Rect { t0, t1, x0, x1 } => Region::rect(
                    t0,
                    t1,
                    x0.unwrap_or(f64::NEG_INFINITY),
                    x1.unwrap_or(f64::INFINITY),
                )?,
                RegionSpec::Cone { r, s, t } => Region::cone(r, s.unwrap_or(bounds.s), t)?,
            };
            Ok(RegionMass {
                region: spec.clone(),
                plus: measure.mass(&region, Sign::Plus),
                minus: measure.mass(&region, Sign::Minus),
                signed: measure.mass(&region, Sign::Signed),
            })
        })
        .collect::<Result<Vec<_>, MeasureError>>()?;

    let t_final = sim.t_final;
    let slab = Region::rect(0.0, t_final, f64::NEG_INFINITY, f64::INFINITY)?;
    let bps = scenario.initial.breakpoints();
    let pad = bounds.s * t_final + 1.0;
    let mass_window = match (bps.first(), bps.last()) {
        (Some(a), Some(b)) => (a - pad, b + pad),
        _ => (-pad, pad),
    };
    let m0 = sim.mass(0.0, mass_window.0, mass_window.1)?;
    let m1 = sim.mass(t_final, mass_window.0, mass_window.1)?;
    let inflow = t_final * (model.f(scenario.initial.left_tail()) - model.f(scenario.initial.right_tail()));
    let mu_plus_total = measure.mass(&slab, Sign::Plus);
    let diagnostics = Diagnostics {
        front_count: sim.fronts.len(),
        event_count: sim.events.len(),
        rh_residual_max: sim.max_rh_residual(),
        mass_residual_rel: (m1 - m0 - inflow).abs() / m0.abs().max(1.0),
        mass_window,
        mu_plus_total,
        mu_minus_total: measure.mass(&slab, Sign::Minus),
        production_free: mu_plus_total == 0.0
            && sim.fronts.iter().all(|f| f.kind == FrontKind::EntropicShock),
        shift: shift_diagnostics(&sim, path, shock, bounds.s, constants.dbound())?,
    };

    let min_of = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    let min_margin = min_of(&mut rows.iter().map(|r| r.margin));
    let min_drift_margin = min_of(&mut drift_rows.iter().map(|r| r.margin));
    let summary = Summary {
        min_margin,
        min_drift_margin,
        min_contraction_margin: min_of(&mut rows.iter().map(|r| r.contraction_margin)),
        max_drift_saturation: drift_rows.iter().map(|r| r.saturation).fold(0.0, f64::max),
        passed: min_margin >= MARGIN_TOL && min_drift_margin >= MARGIN_TOL,
    };

    let report = StabilityReport {
        schema_version: SCHEMA_VERSION,
        scenario_id: scenario.id.clone(),
        config_sha256: scenario.config_sha256.clone(),
        model,
        policy: sim.policy,
        delta: sim.delta,
        t_final,
        shock,
        sigma,
        bounds,
        constants: *constants,
        windows: scenario.windows.clone(),
        times,
        rows,
        drift: drift_rows,
        shift_knots: path.knots().to_vec(),
        drift_knots: drift(path, sigma).knots().to_vec(),
        regions,
        diagnostics,
        summary,
    };
    Ok(ScenarioRun {
        simulation: sim,
        measure,
        shift,
        report,
    })
}

/// Runs independent scenarios, results in input order.
pub fn run_batch(scenarios: &[Scenario], exec: Execution) -> Vec<Result<StabilityReport, StabilityError>> {
    exec.map(scenarios, |s| run_scenario(s).map(|r| r.report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn scenario(json: &str) -> Scenario {
        ScenarioConfig::from_json(json).unwrap().validate().unwrap()
    }

    const PURE: &str = r#"{"id": "pure", "flux": {"name": "burgers"},
        "initial": {"breakpoints": [0], "values": [1, -1]}, "T": 1,
        "shock": {"u_ell": 1, "u_r": -1}}"#;

    const CANONICAL: &str = r#"{"id": "canonical", "flux": {"name": "burgers"},
        "initial": {"breakpoints": [0, 1, 2], "values": [1, -1, -0.5, -1],
                    "admissibility": [{"index": 1, "admissible": false}]},
        "policy": "persist_until_collision", "T": 1,
        "shock": {"u_ell": 1, "u_r": -1},
        "regions": [{"type": "rect", "t0": 0, "t1": 1}]}"#;

    #[test]
    fn pure_shock_report() {
        let out = run_scenario(&scenario(PURE)).unwrap();
        let rep = &out.report;
        assert!(rep.rows.iter().all(|r| r.margin == 0.0 && r.lhs == 0.0));
        assert!(rep.drift.iter().all(|r| r.margin == 0.0));
        assert!(rep.drift_knots.iter().all(|k| k.1 == 0.0));
        assert!(rep.summary.passed);
        assert!(rep.diagnostics.production_free);
        assert_eq!(rep.times.len(), DEFAULT_GRID_STEPS + 1);
    }

    #[test]
    fn relative_l2_examples() {
        let shock = ShockDatum::new(1.0, -1.0).unwrap();
        let p = Profile::step(0.3, 1.0, -1.0);
        let sim = run(&p, &FluxModel::Burgers, &crate::fronttrack::RunConfig::new(1.0)).unwrap();
        let path = Path::line(0.0, 1.0, 0.0, 0.0);
        assert!((relative_l2(&sim, &path, shock, 0.0, -50.0, 50.0).unwrap() - 0.3 * 4.0).abs() < 1e-14);

        let p = Profile::new(vec![0.0, 1.0, 2.0], vec![1.0, -1.0, -0.5, -1.0]).unwrap();
        let sim = run(&p, &FluxModel::Burgers, &crate::fronttrack::RunConfig::new(1.0)).unwrap();
        let l2 = relative_l2(&sim, &path, shock, 0.0, -10.0, 10.0).unwrap();
        assert!((l2 - 0.25).abs() < 1e-15);
        let f = relative_entropy_window(&sim, &path, shock, 0.0, -10.0, 10.0).unwrap();
        assert_eq!(l2, 2.0 * f);
    }

    #[test]
    fn canonical_report() {
        let out = run_scenario(&scenario(CANONICAL)).unwrap();
        let rep = &out.report;
        assert!(rep.summary.passed, "{:?}", rep.summary);
        assert!((rep.diagnostics.mu_plus_total - 1.0 / 96.0).abs() < 1e-15);
        assert!((rep.regions[0].plus - 1.0 / 96.0).abs() < 1e-15);
        assert!(rep.diagnostics.mass_residual_rel < 1e-10);
        for r in &rep.rows {
            assert!((r.lhs - 2.0 * r.f_window).abs() <= 1e-14 * (1.0 + r.lhs));
        }
    }

    #[test]
    fn fan_rate() {
        let json = r#"{"id": "fan", "flux": {"name": "burgers"},
            "initial": {"breakpoints": [0], "values": [-1, 1]}, "delta": 0.1, "T": 1,
            "policy": "resolve_at_collision",
            "shock": {"u_ell": 1, "u_r": -1, "at_origin": false}}"#;
        let out = run_scenario(&scenario(json)).unwrap();
        let expected = 20.0 * 0.1f64.powi(3) / 12.0;
        assert!((out.report.diagnostics.mu_plus_total - expected).abs() < 1e-14);
        assert!(out.report.summary.passed, "{:?}", out.report.summary);
    }

    #[test]
    fn margins_grow_with_constant() {
        let mut sc = scenario(CANONICAL);
        let base = run_scenario(&sc).unwrap().report.summary.min_margin;
        sc.constants.c_thm *= 2.0;
        assert!(run_scenario(&sc).unwrap().report.summary.min_margin >= base);
    }

    #[test]
    fn batch_matches_sequential() {
        let scs = vec![scenario(PURE), scenario(CANONICAL)];
        let seq = run_batch(&scs, Execution::Sequential);
        let par = run_batch(&scs, Execution::Parallel { workers: 2 });
        for (a, b) in seq.iter().zip(&par) {
            assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
        }
    }
}
