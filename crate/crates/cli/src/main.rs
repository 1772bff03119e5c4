//! `shockstab` command-line driver.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shockstab::config::{Scenario, ScenarioConfig};
use shockstab::entropy::DboundConstants;
use shockstab::exec::Execution;
use shockstab::flux::FluxModel;
use shockstab::measure::{random_band, variation_formula_check};
use shockstab::stability::{run_scenario, scenario_bounds, simulate, StabilityError};
use shockstab::verify::{
    estimate_sharp_constants, verify_dbound, verify_identities, GridSpec, JumpFilter, VerifyReport,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_CAP: u8 = 3;
const EXIT_THEOREM: u8 = 4;
const EXIT_VIOLATION: u8 = 5;

/// Variation-formula discrepancies above this fail `var-check`.
const VAR_CHECK_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "shockstab", version, about = "Front tracking and relative-entropy stability checks for convex scalar conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the front-tracking engine and write fronts.csv and events.csv.
    Simulate(ScenarioArgs),
    /// Evaluate the stability and drift estimates; writes stability.csv, regions.csv, report.json.
    Stability(ScenarioArgs),
    /// Sweep the upper bound on the dissipation rate.
    Verify(VerifyArgs),
    /// Sweep the identities and auxiliary bounds behind the dissipation bound.
    VerifyIdentities(VerifyArgs),
    /// Check the relative-entropy balance on random bands; writes var_check.csv.
    VarCheck(VarCheckArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's output_dir, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (accepted for uniformity; scenario runs are single-threaded).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VarCheckArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of random path pairs.
    #[arg(long, default_value_t = 50)]
    pairs: usize,
    /// Paths start inside `[-half-width, half-width]`.
    #[arg(long, default_value_t = 3.0)]
    half_width: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Burgers,
    Quartic,
    Cosh,
}

#[derive(Clone, Copy, ValueEnum)]
enum Jumps {
    All,
    Downward,
    Upward,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "burgers")]
    model: ModelName,
    /// Quartic coefficient of `u^2/2`.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Quartic coefficient of `u^4/4`.
    #[arg(long, default_value_t = 3.0)]
    b: f64,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    hi: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Seeded random quadruples added to the grid.
    #[arg(long, default_value_t = 1_000_000)]
    random: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "all")]
    jumps: Jumps,
    #[arg(long = "c1", default_value_t = DboundConstants::default().c1)]
    c1: f64,
    #[arg(long = "c2", default_value_t = DboundConstants::default().c2)]
    c2: f64,
    /// Check a single quadruple `u_minus,u_plus,u_ell,u_r` instead of a grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    /// Also bisect for the sharpest constants on the same quadruples.
    #[arg(long)]
    estimate_constants: bool,
    /// Also write the worst witnesses and listed violations as CSV.
    #[arg(long)]
    csv: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

impl VerifyArgs {
    fn spec(&self) -> Result<GridSpec, String> {
        let model = match self.model {
            ModelName::Burgers => FluxModel::Burgers,
            ModelName::Cosh => FluxModel::Cosh,
            ModelName::Quartic => FluxModel::quartic(self.a, self.b).map_err(|e| e.to_string())?,
        };
        let spec = match &self.point {
            Some(q) => match q[..] {
                [a, b, c, d] => GridSpec::point(model, [a, b, c, d]),
                _ => return Err(format!("--point needs 4 values, got {}", q.len())),
            },
            None => GridSpec::uniform(model, self.lo, self.hi, self.points).with_random(self.random, self.seed),
        };
        let spec = spec.with_jumps(match self.jumps {
            Jumps::All => JumpFilter::All,
            Jumps::Downward => JumpFilter::Downward,
            Jumps::Upward => JumpFilter::Upward,
        });
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    fn exec(&self) -> Execution {
        Execution::from_workers(self.workers)
    }
}

/// Failure carrying its exit code.
struct Failure(u8, String);

impl<E: std::fmt::Display> From<(u8, E)> for Failure {
    fn from((code, e): (u8, E)) -> Self {
        Failure(code, e.to_string())
    }
}

fn io_err(e: std::io::Error, path: &Path) -> Failure {
    Failure(1, format!("{}: {e}", path.display()))
}

fn load(args: &ScenarioArgs) -> Result<(Scenario, PathBuf), Failure> {
    let text = fs::read_to_string(&args.config).map_err(|e| Failure(EXIT_CONFIG, format!("{}: {e}", args.config.display())))?;
    let cfg = ScenarioConfig::from_json(&text).map_err(|e| Failure(EXIT_CONFIG, e.to_string()))?;
    let scenario = cfg.validate().map_err(|e| Failure(EXIT_CONFIG, e.to_string()))?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| io_err(e, &out))?;
    Ok((scenario, out))
}

fn stability_failure(e: StabilityError) -> Failure {
    let code = if e.is_event_cap() { EXIT_CAP } else { 1 };
    Failure(code, e.to_string())
}

fn write(path: PathBuf, contents: String) -> Result<(), Failure> {
    fs::write(&path, contents).map_err(|e| io_err(e, &path))
}

fn cmd_simulate(args: &ScenarioArgs) -> Result<(), Failure> {
    let (scenario, out) = load(args)?;
    let sim = simulate(&scenario).map_err(|e| stability_failure(e.into()))?;
    write(out.join("fronts.csv"), output::fronts_csv(&sim))?;
    write(out.join("events.csv"), output::events_csv(&sim))?;
    eprintln!(
        "{}: {} fronts, {} events -> {}",
        scenario.id,
        sim.fronts.len(),
        sim.events.len(),
        out.display()
    );
    Ok(())
}

fn cmd_stability(args: &ScenarioArgs) -> Result<(), Failure> {
    let (scenario, out) = load(args)?;
    let run = run_scenario(&scenario).map_err(stability_failure)?;
    let rep = &run.report;
    write(out.join("stability.csv"), output::stability_csv(rep))?;
    write(out.join("regions.csv"), output::regions_csv(rep))?;
    write(out.join("report.json"), output::json_with_timestamp(rep))?;
    eprintln!(
        "{}: min margin {:.6e}, min drift margin {:.6e}",
        rep.scenario_id, rep.summary.min_margin, rep.summary.min_drift_margin
    );
    if rep.summary.passed {
        Ok(())
    } else {
        Err(Failure(EXIT_THEOREM, "negative stability margin".into()))
    }
}

fn finish_verify(args: &VerifyArgs, report: VerifyReport, name: &str, extra: Option<serde_json::Value>) -> Result<(), Failure> {
    fs::create_dir_all(&args.out).map_err(|e| io_err(e, &args.out))?;
    let mut value = serde_json::to_value(&report).expect("report serializes");
    if let (Some(extra), Some(map)) = (extra, value.as_object_mut()) {
        map.insert("sharp_constants".into(), extra);
    }
    write(
        args.out.join(format!("{name}.json")),
        serde_json::to_string_pretty(&value).expect("report serializes") + "\n",
    )?;
    if args.csv {
        write(args.out.join(format!("{name}.csv")), output::verify_csv(&report))?;
    }
    for c in &report.checks {
        eprintln!(
            "{:<14} evaluated {:>9}  violations {:>6}  worst margin {}",
            c.name,
            c.evaluated,
            c.violations,
            c.worst.map_or("-".into(), |w| format!("{:.6e}", w.margin))
        );
    }
    if let Some(t) = report.throughput {
        eprintln!("{:.2} s, {:.3e} quadruples/s", t.seconds, t.quadruples_per_second);
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure(EXIT_VIOLATION, format!("{} violations", report.total_violations)))
    }
}

fn announce(spec: &GridSpec) {
    eprintln!("grid: {} quadruples + {} random", spec.grid_size(), spec.random);
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let spec = args.spec().map_err(|e| Failure(EXIT_CONFIG, e))?;
    announce(&spec);
    let constants = DboundConstants { c1: args.c1, c2: args.c2 };
    let report = verify_dbound(&spec, constants, args.exec()).map_err(|e| Failure(EXIT_CONFIG, e.to_string()))?;
    let sharp = if args.estimate_constants {
        let est = estimate_sharp_constants(&spec, args.exec()).map_err(|e| Failure(EXIT_CONFIG, e.to_string()))?;
        Some(serde_json::to_value(est).expect("estimate serializes"))
    } else {
        None
    };
    finish_verify(args, report, "verify_report", sharp)
}

fn cmd_verify_identities(args: &VerifyArgs) -> Result<(), Failure> {
    let spec = args.spec().map_err(|e| Failure(EXIT_CONFIG, e))?;
    announce(&spec);
    let report = verify_identities(&spec, args.exec()).map_err(|e| Failure(EXIT_CONFIG, e.to_string()))?;
    finish_verify(args, report, "identities_report", None)
}

fn cmd_var_check(args: &VarCheckArgs) -> Result<(), Failure> {
    let (scenario, out) = load(&args.scenario)?;
    let sim = simulate(&scenario).map_err(|e| stability_failure(e.into()))?;
    let s = scenario_bounds(&scenario.model, &scenario.initial, scenario.shock)
        .map_err(|e| Failure(EXIT_CONFIG, e.to_string()))?
        .s;
    let mut rng = ChaCha8Rng::seed_from_u64(args.scenario.seed);
    let t_final = sim.t_final;
    let v0s = [scenario.shock.u_ell, scenario.shock.u_r, 0.0];
    let mut rows = Vec::with_capacity(args.pairs);
    for i in 0..args.pairs {
        let (y, z) = random_band(&mut rng, 0.0, t_final, args.half_width, s, 1 + i % 5)
            .map_err(|e| Failure(1, e.to_string()))?;
        let v0 = v0s[i % v0s.len()];
        let chk = variation_formula_check(&sim, &y, &z, v0, 0.0, t_final).map_err(|e| Failure(1, e.to_string()))?;
        rows.push((i, v0, chk));
    }
    write(out.join("var_check.csv"), output::var_check_csv(t_final, &rows))?;
    let worst = rows.iter().map(|r| r.2.discrepancy).fold(0.0, f64::max);
    eprintln!("{}: {} pairs, max discrepancy {worst:.3e}", scenario.id, rows.len());
    if worst <= VAR_CHECK_TOL {
        Ok(())
    } else {
        Err(Failure(EXIT_VIOLATION, format!("discrepancy {worst:e} exceeds {VAR_CHECK_TOL:e}")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Verify(a) => cmd_verify(a),
        Command::VerifyIdentities(a) => cmd_verify_identities(a),
        Command::VarCheck(a) => cmd_var_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
