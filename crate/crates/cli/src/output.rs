//! CSV and JSON emission. Column orders are part of the output contract.

use std::fmt::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use shockstab::config::RegionSpec;
use shockstab::fronttrack::Simulation;
use shockstab::measure::VariationCheck;
use shockstab::stability::StabilityReport;
use shockstab::verify::VerifyReport;

pub const FRONTS_HEADER: &str = "id,born_at,position_at_birth,speed,u_left,u_right,kind,died_at";
pub const EVENTS_HEADER: &str = "time,position,incoming,outgoing";
pub const STABILITY_HEADER: &str = "t,R,lhs,mu_plus_cone,rhs,margin,drift_energy,drift_margin";
pub const REGIONS_HEADER: &str = "type,t0,t1,x0,x1,R,S,t,plus,minus,signed";
pub const VAR_CHECK_HEADER: &str = "pair,t1,t2,v0,lhs,rhs,discrepancy";
pub const VERIFY_HEADER: &str = "kind,check,index,u_minus,u_plus,u_ell,u_r,margin,lhs,rhs";

/// 17 significant digits, enough to round-trip an `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn ids(v: &[usize]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

pub fn fronts_csv(sim: &Simulation) -> String {
    let mut s = String::from(FRONTS_HEADER);
    s.push('\n');
    for f in &sim.fronts {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            f.id,
            num(f.born_at),
            num(f.position_at_birth),
            num(f.speed),
            num(f.u_left),
            num(f.u_right),
            f.kind.as_str(),
            opt(f.died_at)
        );
    }
    s
}

pub fn events_csv(sim: &Simulation) -> String {
    let mut s = String::from(EVENTS_HEADER);
    s.push('\n');
    for e in &sim.events {
        let _ = writeln!(s, "{},{},{},{}", num(e.time), num(e.position), ids(&e.incoming), ids(&e.outgoing));
    }
    s
}

/// One row per `(t, R)`. The `mu_plus_cone` column holds the positive
/// production on `[0, t] x [-R - tS, R + tS]`, the mass entering `rhs`.
pub fn stability_csv(rep: &StabilityReport) -> String {
    let mut s = String::from(STABILITY_HEADER);
    s.push('\n');
    let per_time = rep.windows.len();
    for (k, row) in rep.rows.iter().enumerate() {
        let d = &rep.drift[k / per_time];
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            num(row.t),
            num(row.r),
            num(row.lhs),
            num(row.mu_plus_rect),
            num(row.rhs),
            num(row.margin),
            num(d.drift_energy),
            num(d.margin)
        );
    }
    s
}

pub fn regions_csv(rep: &StabilityReport) -> String {
    let mut s = String::from(REGIONS_HEADER);
    s.push('\n');
    for m in &rep.regions {
        let cols = match m.region {
            RegionSpec::Rect { t0, t1, x0, x1 } => {
                format!("rect,{},{},{},{},,,", num(t0), num(t1), opt(x0), opt(x1))
            }
            RegionSpec::Cone { r, s: speed, t } => {
                format!("cone,,,,,{},{},{}", num(r), num(speed.unwrap_or(rep.bounds.s)), num(t))
            }
        };
        let _ = writeln!(s, "{cols},{},{},{}", num(m.plus), num(m.minus), num(m.signed));
    }
    s
}

pub fn var_check_csv(t_final: f64, rows: &[(usize, f64, VariationCheck)]) -> String {
    let mut s = String::from(VAR_CHECK_HEADER);
    s.push('\n');
    for (i, v0, c) in rows {
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{}",
            num(0.0),
            num(t_final),
            num(*v0),
            num(c.lhs),
            num(c.rhs),
            num(c.discrepancy)
        );
    }
    s
}

/// Worst witness of every check, then the listed violations.
pub fn verify_csv(rep: &VerifyReport) -> String {
    let mut s = String::from(VERIFY_HEADER);
    s.push('\n');
    let rows = rep
        .checks
        .iter()
        .filter_map(|c| c.worst.map(|w| ("worst", c.name.as_str(), w)))
        .chain(rep.violations.iter().map(|v| ("violation", v.check.as_str(), v.witness)));
    for (kind, check, w) in rows {
        let [a, b, c, d] = w.quadruple;
        let _ = writeln!(
            s,
            "{kind},{check},{},{},{},{},{},{},{},{}",
            w.index,
            num(a),
            num(b),
            num(c),
            num(d),
            num(w.margin),
            num(w.lhs),
            num(w.rhs)
        );
    }
    s
}

/// Pretty JSON with a `generated_at_unix` field added; the field is not
/// covered by the config hash.
pub fn json_with_timestamp<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    if let Some(map) = v.as_object_mut() {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        map.insert("generated_at_unix".into(), now.into());
    }
    serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
}
