//! The `loglab` command line.
//!
//! Every subcommand reads a [`Scenario`]: a flat set of optional fields that
//! can come from `--config <file.toml>` and from flags, flags winning.
//! Primary output goes to stdout, or to `--out`.
//!
//! Exit codes: `0` success, `2` invalid input, `3` numerical failure, `1`
//! I/O failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{
    simulate_policy, synthesize_policy, ControlProblem, PolicySchedule, Regime, ResolvedSegment,
};
use crate::dynamics::{HarvestMode, ModelParams};
use crate::error::Error;
use crate::integrate::{
    integrate_with_events, CrossingEvent, Direction, Sample, Termination, Trajectory,
};
use crate::stability::classify;
use crate::timescale::{
    consistency_compare, iterate, positivity_scan, ConsistencyReport, MapKind, OrbitReport,
    ScanSummary, ViolationKind,
};

/// Environment variable seeding `discrete --scan`.
pub const SEED_VAR: &str = "LOGLAB_SEED";

const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(
    name = "loglab",
    version,
    about = "Logistic growth, harvesting and discrete logistic maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the model and print `t,x,u` as CSV.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Classify the equilibria of the model and print a JSON report.
    #[command(allow_negative_numbers = true)]
    Stability {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Synthesize and simulate a harvesting policy; print a JSON report.
    #[command(allow_negative_numbers = true)]
    Policy {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Iterate a discrete logistic map and print the orbit as `t,x,flag`.
    #[command(allow_negative_numbers = true)]
    Discrete {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Print a JSON summary instead of the orbit (the orbit still goes to `--csv`).
        #[arg(long)]
        summary: bool,
        /// Add a positivity scan over this many random `(r, k, x0)` draws.
        #[arg(long, value_name = "DRAWS")]
        scan: Option<usize>,
        /// Add the deviation from the continuous solution.
        #[arg(long)]
        compare: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MapChoice {
    Streipert,
    Nsfd,
    Euler,
    /// Experimental step-`h` nonstandard map.
    NsfdScaled,
}

/// Scenario fields as flags.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Flat TOML file with any of the fields below.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub quota: Option<f64>,
    #[arg(long)]
    pub effort: Option<f64>,
    #[arg(long)]
    pub umax: Option<f64>,
    #[arg(long)]
    pub xb: Option<f64>,
    /// End of the time span.
    #[arg(long, visible_alias = "t1")]
    pub b: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub map: Option<MapChoice>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Report crossings of this level (repeatable).
    #[arg(long = "threshold")]
    pub thresholds: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Scenario fields as read from a config file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub r: Option<f64>,
    pub k: Option<f64>,
    pub x0: Option<f64>,
    pub quota: Option<f64>,
    pub effort: Option<f64>,
    pub umax: Option<f64>,
    pub xb: Option<f64>,
    #[serde(alias = "t1")]
    pub b: Option<f64>,
    pub t0: Option<f64>,
    pub dt: Option<f64>,
    pub n: Option<usize>,
    pub map: Option<MapChoice>,
    pub step: Option<f64>,
    #[serde(default, alias = "thresholds")]
    pub threshold: Vec<f64>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
    }

    /// Resolve `args` over the config file it names, if any.
    pub fn resolve(args: &ScenarioArgs) -> Result<Self, CliError> {
        let base = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("config: {}: {e}", path.display()))
                })?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        Ok(base.overridden_by(args))
    }

    fn overridden_by(self, a: &ScenarioArgs) -> Self {
        Self {
            r: a.r.or(self.r),
            k: a.k.or(self.k),
            x0: a.x0.or(self.x0),
            quota: a.quota.or(self.quota),
            effort: a.effort.or(self.effort),
            umax: a.umax.or(self.umax),
            xb: a.xb.or(self.xb),
            b: a.b.or(self.b),
            t0: a.t0.or(self.t0),
            dt: a.dt.or(self.dt),
            n: a.n.or(self.n),
            map: a.map.or(self.map),
            step: a.step.or(self.step),
            threshold: if a.thresholds.is_empty() {
                self.threshold
            } else {
                a.thresholds.clone()
            },
            out: a.out.clone().or(self.out),
            csv: a.csv.clone().or(self.csv),
        }
    }

    fn params(&self) -> Result<ModelParams, CliError> {
        let r = require("r", self.r)?;
        let k = require("k", self.k)?;
        Ok(ModelParams::new(r, k)?)
    }

    fn mode(&self) -> Result<HarvestMode, CliError> {
        match (self.quota, self.effort) {
            (Some(_), Some(_)) => Err(CliError::Validation(
                "`quota` and `effort` are mutually exclusive".to_owned(),
            )),
            (Some(h), None) => Ok(HarvestMode::quota(h)?),
            (None, Some(e)) => Ok(HarvestMode::effort(e)?),
            (None, None) => Ok(HarvestMode::Unexploited),
        }
    }

    fn dt(&self) -> Result<f64, CliError> {
        positive("dt", self.dt.unwrap_or(DEFAULT_DT))
    }

    fn map_kind(&self) -> Result<MapKind, CliError> {
        let map = require("map", self.map)?;
        let step = || positive("step", require("step", self.step)?);
        Ok(match map {
            MapChoice::Streipert => MapKind::StreipertZ,
            MapChoice::Nsfd => MapKind::NonstandardZ,
            MapChoice::Euler => MapKind::ExplicitEulerZ { step: step()? },
            MapChoice::NsfdScaled => MapKind::NonstandardScaled { step: step()? },
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite { .. }
            | Error::SingularDenominator { .. }
            | Error::ZeroPopulationUnderQuota => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn require<T>(name: &str, v: Option<T>) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("missing required field `{name}`")))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Validation(format!(
            "`{name}` must be positive and finite, got {v}"
        )))
    }
}

fn non_negative(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::Validation(format!(
            "`{name}` must be non-negative and finite, got {v}"
        )))
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { scenario } => {
            let s = Scenario::resolve(scenario)?;
            emit(s.out.as_deref(), &cmd_simulate(&s)?)
        }
        Command::Stability { scenario } => {
            let s = Scenario::resolve(scenario)?;
            emit(s.out.as_deref(), &cmd_stability(&s)?)
        }
        Command::Policy { scenario } => {
            let s = Scenario::resolve(scenario)?;
            let (json, csv) = cmd_policy(&s)?;
            if let Some(path) = &s.csv {
                emit(Some(path), &csv)?;
            }
            emit(s.out.as_deref(), &json)
        }
        Command::Discrete {
            scenario,
            summary,
            scan,
            compare,
        } => {
            let s = Scenario::resolve(scenario)?;
            let seed = seed_from_env()?;
            let (csv, report) = cmd_discrete(&s, *scan, *compare, seed)?;
            if let Some(path) = &s.csv {
                emit(Some(path), &csv)?;
            }
            let primary = if *summary { to_json(&report) } else { csv };
            emit(s.out.as_deref(), &primary)
        }
    }
}

fn emit(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, content).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn seed_from_env() -> Result<u64, CliError> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Validation(format!(
                "`{SEED_VAR}` must be an unsigned integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(0),
    }
}

/// `t,x,u` rows, then `#` footers for crossings and extinction.
pub fn trajectory_csv(traj: &Trajectory, events: &[CrossingEvent]) -> String {
    let mut s = String::from("t,x,u\n");
    for Sample { t, x, u } in &traj.samples {
        match u {
            Some(u) => writeln!(s, "{t},{x},{u}"),
            None => writeln!(s, "{t},{x},"),
        }
        .expect("writing to a String");
    }
    for e in events {
        let dir = match e.direction {
            Direction::Upward => "upward",
            Direction::Downward => "downward",
        };
        writeln!(
            s,
            "# crossing threshold={} t={} direction={dir}",
            e.threshold, e.t_cross
        )
        .unwrap();
    }
    if let Termination::Extinction { t_ext } = traj.termination {
        writeln!(s, "# extinction t={t_ext}").unwrap();
    }
    s
}

pub fn cmd_simulate(s: &Scenario) -> Result<String, CliError> {
    let p = s.params()?;
    let mode = s.mode()?;
    let x0 = non_negative("x0", require("x0", s.x0)?)?;
    let t0 = non_negative("t0", s.t0.unwrap_or(0.0))?;
    let b = positive("b", require("b", s.b)?)?;
    if b <= t0 {
        return Err(CliError::Validation(format!(
            "`b` must exceed `t0`, got b={b} t0={t0}"
        )));
    }
    let dt = s.dt()?;
    for &v in &s.threshold {
        non_negative("threshold", v)?;
    }
    let (traj, events) = integrate_with_events(&p, &mode, x0, (t0, b), dt, &s.threshold)?;
    Ok(trajectory_csv(&traj, &events))
}

pub fn cmd_stability(s: &Scenario) -> Result<String, CliError> {
    let p = s.params()?;
    let mode = s.mode()?;
    Ok(to_json(&classify(&p, &mode)?))
}

/// JSON emitted by `policy`. The trajectory itself goes to the CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub problem: ControlProblem,
    pub regime: Regime,
    pub schedule: PolicySchedule,
    pub segments: Vec<ResolvedSegment>,
    pub switch_times: Vec<f64>,
    #[serde(rename = "yield")]
    pub harvest_yield: f64,
    pub terminal_state: f64,
    pub terminal_feasible: bool,
    pub termination: Termination,
    pub singular_drift: f64,
}

pub fn cmd_policy(s: &Scenario) -> Result<(String, String), CliError> {
    let p = s.params()?;
    let b = require("b", s.b)?;
    let x0 = require("x0", s.x0)?;
    let xb = require("xb", s.xb)?;
    let umax = require("umax", s.umax)?;
    let dt = s.dt()?;
    if let Some(t0) = s.t0.filter(|&t| t != 0.0) {
        return Err(CliError::Validation(format!(
            "`t0` must be 0 for policy, got {t0}"
        )));
    }
    let prob = ControlProblem::new(p, b, x0, xb, umax)?;
    let schedule = synthesize_policy(&prob);
    let run = simulate_policy(&prob, &schedule, dt)?;
    let csv = trajectory_csv(&run.trajectory, &[]);
    let report = PolicyReport {
        problem: prob,
        regime: schedule.regime,
        schedule,
        segments: run.segments,
        switch_times: run.switch_times,
        harvest_yield: run.harvest_yield,
        terminal_state: run.terminal_state,
        terminal_feasible: run.terminal_feasible,
        termination: run.trajectory.termination,
        singular_drift: run.singular_drift,
    };
    Ok((to_json(&report), csv))
}

/// JSON emitted by `discrete --summary`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteReport {
    pub params: ModelParams,
    pub x0: f64,
    pub n: usize,
    pub orbit: OrbitReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyReport>,
}

/// `t,x,flag` rows. An undefined step gets a row with an empty `x`.
pub fn orbit_csv(report: &OrbitReport) -> String {
    let dt = report.kind.time_step();
    let mut s = String::from("t,x,flag\n");
    let flagged = report.first_violation();
    for (i, x) in report.orbit.iter().enumerate() {
        let t = i as f64 * dt;
        let flag = match flagged {
            Some(v) if v.index == i => "VIOLATION",
            _ => "",
        };
        writeln!(s, "{t},{x},{flag}").unwrap();
    }
    if let Some(v) = flagged {
        if v.kind == ViolationKind::Undefined {
            writeln!(s, "{},,UNDEFINED", v.index as f64 * dt).unwrap();
        }
        let kind = match v.kind {
            ViolationKind::Negative => "negative",
            ViolationKind::Undefined => "undefined",
            ViolationKind::NonFinite => "non_finite",
        };
        writeln!(s, "# violation index={} kind={kind}", v.index).unwrap();
    }
    if let Some(limit) = report.limit {
        writeln!(s, "# limit x={limit}").unwrap();
    }
    s
}

/// Random `(r, k, x0)` with `r, k ∈ (0, 10]` and `x0 ∈ (0, 3k]`.
pub fn random_cases(draws: usize, seed: u64) -> Vec<(ModelParams, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws)
        .map(|_| {
            let r = 10.0 * (1.0 - rng.gen::<f64>());
            let k = 10.0 * (1.0 - rng.gen::<f64>());
            let x0 = 3.0 * k * (1.0 - rng.gen::<f64>());
            (ModelParams::new(r, k).expect("drawn in (0, 10]"), x0)
        })
        .collect()
}

pub fn cmd_discrete(
    s: &Scenario,
    scan: Option<usize>,
    compare: bool,
    seed: u64,
) -> Result<(String, DiscreteReport), CliError> {
    let p = s.params()?;
    let kind = s.map_kind()?;
    let x0 = non_negative("x0", require("x0", s.x0)?)?;
    let n = require("n", s.n)?;
    let orbit = iterate(kind, &p, x0, n)?;
    let scan = scan
        .map(|draws| positivity_scan(kind, random_cases(draws, seed), n))
        .transpose()?;
    let consistency = if compare {
        Some(consistency_compare(kind, &p, positive("x0", x0)?, n)?)
    } else {
        None
    };
    let csv = orbit_csv(&orbit);
    Ok((
        csv,
        DiscreteReport {
            params: p,
            x0,
            n,
            orbit,
            scan,
            consistency,
        },
    ))
}
