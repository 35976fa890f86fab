//! Scenario files, run artifacts and the horizon sweep behind the
//! `formation` binary.
//!
//! A scenario file has three sections. `#` starts a comment.
//!
//! ```text
//! [scenario]
//! agent_count = 2
//! radius = 0.05
//! horizon = inf
//!
//! [agents]
//! # id x y vx vy
//! 1 -1 0 0.3 0
//!
//! [goals]
//! # index bx by fvx fvy ampx ampy freq
//! 1 1.6 0 0 0 0 0 0
//! 2 -1.6 0 0 0 0 0 0
//! ```
//!
//! Every `[scenario]` key is optional. Agents missing from `[agents]` are
//! drawn at random from `spawn_box` using `seed`. Goal lines may stop after
//! the base offset; the motion terms then default to zero.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use formation_core::simulator::{run, AgentSpec, Event, Metrics, RunFailure, RunOutput, ScenarioConfig, TrajectoryRow};
use formation_core::{AgentState, Bounds, Error, GoalMotion, Vec2};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {field}: {message}")]
    Parse { line: usize, field: String, message: String },
    #[error(transparent)]
    Invalid(Error),
    #[error(transparent)]
    Run(Box<RunFailure>),
}

impl CliError {
    /// 2 for unreadable or invalid input, 3 for assignment failures, 4 when
    /// no safe trajectory exists, 5 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Invalid(_) => 2,
            CliError::Write { .. } => 5,
            CliError::Run(f) => match f.error {
                Error::Validation(_) => 2,
                Error::InfeasibleAssignment { .. } | Error::NonTermination { .. } => 3,
                Error::NoFeasibleTrajectory { .. } => 4,
                _ => 5,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn parse_error(line: usize, field: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn number(line: usize, field: &str, text: &str) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => Err(parse_error(line, field, format!("expected a number, got `{text}`"))),
    }
}

fn finite(line: usize, field: &str, text: &str) -> Result<f64> {
    let v = number(line, field, text)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_error(line, field, format!("expected a finite number, got `{text}`")))
    }
}

fn integer<T: std::str::FromStr>(line: usize, field: &str, text: &str) -> Result<T> {
    text.parse()
        .map_err(|_| parse_error(line, field, format!("expected a non-negative integer, got `{text}`")))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Scenario,
    Agents,
    Goals,
}

const KEYS: [&str; 14] = [
    "agent_count",
    "radius",
    "horizon",
    "ban_extension",
    "initial_deadline",
    "dt",
    "min_time",
    "max_time",
    "seed",
    "v_min",
    "v_max",
    "u_min",
    "u_max",
    "spawn_box",
];

const AGENT_FIELDS: [&str; 5] = ["id", "x", "y", "vx", "vy"];
const GOAL_FIELDS: [&str; 8] = ["index", "bx", "by", "fvx", "fvy", "ampx", "ampy", "freq"];

/// Parses and validates a scenario.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut section = Section::None;
    let mut values: Vec<(usize, &str, &str)> = Vec::new();
    let mut agents = Vec::new();
    let mut goals = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if body.starts_with('[') {
            section = match body {
                "[scenario]" => Section::Scenario,
                "[agents]" => Section::Agents,
                "[goals]" => Section::Goals,
                other => return Err(parse_error(line, "section", format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::None => return Err(parse_error(line, "section", "content before the first section")),
            Section::Scenario => {
                let (key, value) = body
                    .split_once('=')
                    .ok_or_else(|| parse_error(line, "scenario", "expected `key = value`"))?;
                let (key, value) = (key.trim(), value.trim());
                if !KEYS.contains(&key) {
                    return Err(parse_error(line, key, "unknown key"));
                }
                if values.iter().any(|(_, k, _)| *k == key) {
                    return Err(parse_error(line, key, "key given twice"));
                }
                values.push((line, key, value));
            }
            Section::Agents => {
                let f: Vec<&str> = body.split_whitespace().collect();
                if f.len() != AGENT_FIELDS.len() {
                    return Err(parse_error(line, "agent", format!("expected `id x y vx vy`, got {} fields", f.len())));
                }
                let id = integer(line, "id", f[0])?;
                let n: Vec<f64> = (1..5).map(|i| finite(line, AGENT_FIELDS[i], f[i])).collect::<Result<_>>()?;
                agents.push(AgentSpec {
                    id,
                    state: AgentState::new(Vec2::new(n[0], n[1]), Vec2::new(n[2], n[3])),
                });
            }
            Section::Goals => {
                let f: Vec<&str> = body.split_whitespace().collect();
                if f.len() < 3 || f.len() > GOAL_FIELDS.len() {
                    return Err(parse_error(
                        line,
                        "goal",
                        format!("expected `index bx by [fvx fvy ampx ampy freq]`, got {} fields", f.len()),
                    ));
                }
                let goal_index = integer(line, "index", f[0])?;
                let mut n = [0.0; 7];
                for i in 1..f.len() {
                    n[i - 1] = finite(line, GOAL_FIELDS[i], f[i])?;
                }
                goals.push(GoalMotion {
                    goal_index,
                    base_offset: Vec2::new(n[0], n[1]),
                    formation_velocity: Vec2::new(n[2], n[3]),
                    periodic_amplitude: Vec2::new(n[4], n[5]),
                    periodic_frequency: n[6],
                });
            }
        }
    }

    let mut c = ScenarioConfig::new(agents.len(), goals);
    c.agents = agents;
    let mut bounds = Bounds::UNBOUNDED;
    let mut initial_deadline = None;
    for &(line, key, value) in &values {
        match key {
            "agent_count" => c.agent_count = integer(line, key, value)?,
            "radius" => c.radius = finite(line, key, value)?,
            "horizon" => c.horizon = number(line, key, value)?,
            "ban_extension" => c.ban_extension = finite(line, key, value)?,
            "initial_deadline" => initial_deadline = Some(finite(line, key, value)?),
            "dt" => c.dt = finite(line, key, value)?,
            "min_time" => c.min_time = finite(line, key, value)?,
            "max_time" => c.max_time = finite(line, key, value)?,
            "seed" => c.seed = integer(line, key, value)?,
            "v_min" => bounds.v_min = finite(line, key, value)?,
            "v_max" => bounds.v_max = number(line, key, value)?,
            "u_min" => bounds.u_min = finite(line, key, value)?,
            "u_max" => bounds.u_max = number(line, key, value)?,
            "spawn_box" => {
                let f: Vec<&str> = value.split_whitespace().collect();
                if f.len() != 4 {
                    return Err(parse_error(line, key, "expected `x0 y0 x1 y1`"));
                }
                let n: Vec<f64> = f.iter().map(|s| finite(line, key, s)).collect::<Result<_>>()?;
                c.spawn_box = Some([Vec2::new(n[0], n[1]), Vec2::new(n[2], n[3])]);
            }
            _ => unreachable!("keys are checked while reading"),
        }
    }
    c.bounds = bounds;
    c.initial_deadline = initial_deadline.unwrap_or(c.ban_extension);
    c.validate().map_err(CliError::Invalid)?;
    Ok(c)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// The scenario file that parses back to `c`, with every default spelled out.
pub fn echo_scenario(c: &ScenarioConfig) -> String {
    let mut s = String::from("[scenario]\n");
    let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
    kv("agent_count", c.agent_count.to_string());
    kv("radius", c.radius.to_string());
    kv("horizon", c.horizon.to_string());
    kv("ban_extension", c.ban_extension.to_string());
    kv("initial_deadline", c.initial_deadline.to_string());
    kv("dt", c.dt.to_string());
    kv("min_time", c.min_time.to_string());
    kv("max_time", c.max_time.to_string());
    kv("seed", c.seed.to_string());
    kv("v_min", c.bounds.v_min.to_string());
    kv("v_max", c.bounds.v_max.to_string());
    kv("u_min", c.bounds.u_min.to_string());
    kv("u_max", c.bounds.u_max.to_string());
    if let Some([lo, hi]) = c.spawn_box {
        kv("spawn_box", format!("{} {} {} {}", lo.x, lo.y, hi.x, hi.y));
    }
    s.push_str("\n[agents]\n# id x y vx vy\n");
    for a in &c.agents {
        let (p, v) = (a.state.position, a.state.velocity);
        writeln!(s, "{} {} {} {} {}", a.id, p.x, p.y, v.x, v.y).unwrap();
    }
    s.push_str("\n[goals]\n# index bx by fvx fvy ampx ampy freq\n");
    for g in &c.goals {
        writeln!(
            s,
            "{} {} {} {} {} {} {} {}",
            g.goal_index,
            g.base_offset.x,
            g.base_offset.y,
            g.formation_velocity.x,
            g.formation_velocity.y,
            g.periodic_amplitude.x,
            g.periodic_amplitude.y,
            g.periodic_frequency
        )
        .unwrap();
    }
    s
}

/// Command-line replacements for scenario settings.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
}

pub fn apply_overrides(mut c: ScenarioConfig, o: &Overrides) -> Result<ScenarioConfig> {
    if let Some(h) = o.horizon {
        c.horizon = h;
    }
    if let Some(dt) = o.dt {
        c.dt = dt;
    }
    if let Some(seed) = o.seed {
        c.seed = seed;
    }
    c.validate().map_err(CliError::Invalid)?;
    Ok(c)
}

/// Reads `inf`, `infinity` or a decimal number.
pub fn parse_horizon(text: &str) -> std::result::Result<f64, String> {
    match text.trim().parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => Err(format!("`{text}` is not a horizon")),
    }
}

/// Comma-separated horizons. Blank entries are skipped.
pub fn parse_horizon_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_horizon)
        .collect()
}

pub const TRAJECTORY_HEADER: &str = "t,agent_id,x,y,vx,vy,ux,uy,goal";

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.t, r.agent_id, r.position.x, r.position.y, r.velocity.x, r.velocity.y, r.control.x, r.control.y, r.goal
        )
        .unwrap();
    }
    s
}

pub fn metrics_text(m: &Metrics) -> String {
    let mut s = String::new();
    for (k, v) in m.fields() {
        writeln!(s, "{k} = {v}").unwrap();
    }
    s
}

/// One `[kind]` block per event with one `key = value` line per field.
pub fn events_text(events: &[Event]) -> String {
    let mut s = String::new();
    for (i, e) in events.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        writeln!(s, "[{}]", e.kind()).unwrap();
        for (k, v) in e.fields() {
            writeln!(s, "{k} = {v}").unwrap();
        }
    }
    s
}

pub const ARTIFACTS: [&str; 4] = ["trajectory.csv", "metrics.txt", "events.log", "scenario.txt"];

/// Writes the four run artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, out: &RunOutput) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Write { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let files = [
        trajectory_csv(&out.trajectory),
        metrics_text(&out.metrics),
        events_text(&out.events),
        echo_scenario(&out.config),
    ];
    for (name, body) in ARTIFACTS.iter().zip(files) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(&path))?;
    }
    Ok(())
}

/// Runs `config` and writes its artifacts, also when the run halts.
pub fn run_command(config: &ScenarioConfig, out_dir: &Path) -> Result<Metrics> {
    match run(config) {
        Ok(out) => {
            write_artifacts(out_dir, &out)?;
            Ok(out.metrics)
        }
        Err(failure) => {
            write_artifacts(out_dir, &failure.partial)?;
            Err(CliError::Run(Box::new(failure)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub horizon: f64,
    pub outcome: std::result::Result<Metrics, String>,
}

/// Runs `config` once per horizon with everything else unchanged.
pub fn sweep(config: &ScenarioConfig, horizons: &[f64]) -> Vec<SweepRow> {
    horizons
        .iter()
        .map(|&h| {
            let mut c = config.clone();
            c.horizon = h;
            let outcome = match c.validate() {
                Err(e) => Err(e.to_string()),
                Ok(()) => run(&c).map(|o| o.metrics).map_err(|f| f.to_string()),
            };
            SweepRow { horizon: h, outcome }
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "h,min_separation,energy,t_f,total_bans,status";

/// Comma-separated sweep report. Failed runs keep their row with empty
/// metric cells and the error as status.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        match &r.outcome {
            Ok(m) => {
                let status = if m.completed { "ok" } else { "incomplete" };
                writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.horizon, m.min_separation, m.total_energy, m.t_f, m.total_bans, status
                )
                .unwrap();
            }
            Err(e) => writeln!(s, "{},,,,,error: {}", r.horizon, e.replace([',', '\n'], ";")).unwrap(),
        }
    }
    s
}
