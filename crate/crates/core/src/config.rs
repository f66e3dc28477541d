//! Run configuration: defaults, a flat `key = value` file format, command-line
//! overrides, and validation into a [`RunConfig`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{ComplexMatrix, StateVector};
use crate::model::{Branch, ModelParams, MAX_CUTOFF, MIN_CUTOFF};
use crate::report::format_float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaMode {
    AutoHalf,
    AutoInteger,
    Explicit(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateBasis {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub z_re: f64,
    pub z_im: f64,
    pub theta_mode: ThetaMode,
    pub cutoff: usize,
    pub margin: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
    pub state: Vec<(usize, Complex64)>,
    pub state_basis: StateBasis,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_steps: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Where a configuration value came from, for diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Default,
    Line(usize),
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag(flag) => write!(f, "{flag}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: unknown key '{key}'")]
    UnknownKey { origin: Origin, key: String },
    #[error("line {0}: expected 'key = value'")]
    Syntax(usize),
    #[error("line {line}: duplicate key '{key}'")]
    Duplicate { line: usize, key: String },
    #[error("{origin}: invalid {key} '{value}': {reason}")]
    Value { origin: Origin, key: String, value: String, reason: String },
}

pub const KEYS: [&str; 14] = [
    "z", "theta", "n", "margin", "t_min", "t_max", "t_steps", "state", "state_basis", "grid_min", "grid_max",
    "grid_steps", "output", "format",
];

/// `--t-min` → `t_min`
pub fn key_for_flag(flag: &str) -> String {
    flag.trim_start_matches('-').replace('-', "_")
}

fn defaults() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("z", "0.3+0.2i"),
        ("theta", "auto-half"),
        ("n", "64"),
        ("t_min", "0"),
        ("t_max", "4pi"),
        ("t_steps", "513"),
        ("state", "1:1"),
        ("state_basis", "a"),
        ("grid_min", "-6"),
        ("grid_max", "6"),
        ("grid_steps", "481"),
        ("format", "csv"),
    ])
}

/// Accepts `a+bi`, `a-bi`, `bi`, `a` and `a,b`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    if let Some((re, im)) = s.split_once(',') {
        return Some(Complex64::new(parse_real(re)?, parse_real(im)?));
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return Some(Complex64::new(parse_real(&s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (parse_real(&body[..i])?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => parse_real(other)?,
    };
    Some(Complex64::new(re, im))
}

/// Finite real, optionally written as a multiple of `pi` (`4pi`, `-pi`, `0.5*pi`).
pub fn parse_real(text: &str) -> Option<f64> {
    let s = text.trim();
    let value = match s.strip_suffix("pi") {
        Some(coeff) => {
            let coeff = coeff.strip_suffix('*').unwrap_or(coeff);
            let c = match coeff {
                "" | "+" => 1.0,
                "-" => -1.0,
                other => other.parse::<f64>().ok()?,
            };
            c * PI
        }
        None => s.parse::<f64>().ok()?,
    };
    value.is_finite().then_some(value)
}

/// `level:amplitude` items separated by whitespace or `;`.
pub fn parse_state(text: &str) -> Result<Vec<(usize, Complex64)>, String> {
    let mut out = Vec::new();
    for item in text.split(|c: char| c.is_whitespace() || c == ';').filter(|s| !s.is_empty()) {
        let (level, amp) = item.split_once(':').ok_or_else(|| format!("'{item}' is not level:amplitude"))?;
        let level = level.parse::<usize>().map_err(|_| format!("bad level '{level}'"))?;
        let amp = parse_complex(amp).ok_or_else(|| format!("malformed complex literal '{amp}'"))?;
        out.push((level, amp));
    }
    if out.is_empty() {
        return Err("state is empty".into());
    }
    if out.iter().all(|(_, a)| *a == Complex64::ZERO) {
        return Err("state has no nonzero amplitude".into());
    }
    Ok(out)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<Vec<(String, String, Origin)>, ConfigError> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax(line_no))?;
        let key = key.trim().to_owned();
        if key.is_empty() {
            return Err(ConfigError::Syntax(line_no));
        }
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { origin: Origin::Line(line_no), key });
        }
        if seen.insert(key.clone(), line_no).is_some() {
            return Err(ConfigError::Duplicate { line: line_no, key });
        }
        out.push((key, value.trim().to_owned(), Origin::Line(line_no)));
    }
    Ok(out)
}

struct Sources {
    values: BTreeMap<String, (String, Origin)>,
}

impl Sources {
    fn raw(&self, key: &str) -> Option<&(String, Origin)> {
        self.values.get(key)
    }

    fn error(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        let (value, origin) = self.values.get(key).cloned().unwrap_or((String::new(), Origin::Default));
        ConfigError::Value { origin, key: key.to_owned(), value, reason: reason.into() }
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>, what: &str) -> Result<T, ConfigError> {
        let (value, _) = self.raw(key).ok_or_else(|| self.error(key, "missing"))?;
        parse(value).ok_or_else(|| self.error(key, format!("expected {what}")))
    }
}

fn parse_theta(text: &str) -> Option<ThetaMode> {
    match text.trim() {
        "auto-half" => Some(ThetaMode::AutoHalf),
        "auto-integer" => Some(ThetaMode::AutoInteger),
        other => parse_real(other).map(ThetaMode::Explicit),
    }
}

fn parse_count(text: &str) -> Option<usize> {
    text.trim().parse().ok()
}

impl RunConfig {
    /// Layers defaults, then file entries, then flags, and validates.
    pub fn from_sources(
        file: Option<&str>,
        flags: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let mut values: BTreeMap<String, (String, Origin)> =
            defaults().into_iter().map(|(k, v)| (k.to_owned(), (v.to_owned(), Origin::Default))).collect();
        if let Some(text) = file {
            for (key, value, origin) in parse_file(text)? {
                values.insert(key, (value, origin));
            }
        }
        for (flag, value) in flags {
            let key = key_for_flag(flag);
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { origin: Origin::Flag(flag.clone()), key });
            }
            values.insert(key, (value.clone(), Origin::Flag(flag.clone())));
        }
        Self::validate(&Sources { values })
    }

    pub fn from_file(text: &str) -> Result<Self, ConfigError> {
        Self::from_sources(Some(text), &[])
    }

    fn validate(src: &Sources) -> Result<Self, ConfigError> {
        let z = src.get("z", parse_complex, "a complex literal (a+bi or a,b)")?;
        let theta_mode = src.get("theta", parse_theta, "auto-half, auto-integer or a real angle")?;
        let cutoff = src.get("n", parse_count, "a positive integer")?;
        if !(MIN_CUTOFF..=MAX_CUTOFF).contains(&cutoff) {
            return Err(src.error("n", format!("must lie in [{MIN_CUTOFF}, {MAX_CUTOFF}]")));
        }
        let margin = match src.raw("margin") {
            Some(_) => src.get("margin", parse_count, "a positive integer")?,
            None => ModelParams::default_margin(cutoff),
        };
        if margin < 2 || margin >= cutoff {
            return Err(src.error("margin", "need 2 <= margin < n"));
        }
        let t_min = src.get("t_min", parse_real, "a finite real")?;
        let t_max = src.get("t_max", parse_real, "a finite real")?;
        let t_steps = src.get("t_steps", parse_count, "an integer")?;
        if t_steps < 2 {
            return Err(src.error("t_steps", "need at least 2"));
        }
        if t_max <= t_min {
            return Err(src.error("t_max", "must exceed t_min"));
        }
        for (key, t) in [("t_min", t_min), ("t_max", t_max)] {
            if t.abs() >= 1e4 {
                return Err(src.error(key, "|t| must stay below 1e4"));
            }
        }
        let state = {
            let (value, _) = src.raw("state").ok_or_else(|| src.error("state", "missing"))?;
            parse_state(value).map_err(|reason| src.error("state", reason))?
        };
        if let Some((level, _)) = state.iter().find(|(level, _)| *level >= cutoff) {
            return Err(src.error("state", format!("level {level} is outside the {cutoff}-level space")));
        }
        let state_basis = src.get(
            "state_basis",
            |s| match s {
                "a" => Some(StateBasis::A),
                "b" => Some(StateBasis::B),
                _ => None,
            },
            "a or b",
        )?;
        let grid_min = src.get("grid_min", parse_real, "a finite real")?;
        let grid_max = src.get("grid_max", parse_real, "a finite real")?;
        let grid_steps = src.get("grid_steps", parse_count, "an integer")?;
        if grid_max <= grid_min {
            return Err(src.error("grid_max", "must exceed grid_min"));
        }
        if grid_steps < 2 {
            return Err(src.error("grid_steps", "need at least 2"));
        }
        let output = src.raw("output").map(|(v, _)| PathBuf::from(v)).filter(|p| !p.as_os_str().is_empty());
        let format = src.get(
            "format",
            |s| match s {
                "csv" => Some(OutputFormat::Csv),
                "json" => Some(OutputFormat::Json),
                _ => None,
            },
            "csv or json",
        )?;

        let cfg = RunConfig {
            z_re: z.re,
            z_im: z.im,
            theta_mode,
            cutoff,
            margin,
            t_min,
            t_max,
            t_steps,
            state,
            state_basis,
            grid_min,
            grid_max,
            grid_steps,
            output,
            format,
        };
        cfg.params().map_err(|e| src.error("theta", e.to_string()))?;
        Ok(cfg)
    }

    pub fn z_star(&self) -> Complex64 {
        Complex64::new(self.z_re, self.z_im)
    }

    pub fn params(&self) -> crate::Result<ModelParams> {
        let zs = self.z_star();
        let base = ModelParams::on_branch(zs, Branch::HalfIntegerPi, self.cutoff)?;
        let theta = match self.theta_mode {
            ThetaMode::AutoHalf => base.theta,
            ThetaMode::AutoInteger => base.lambda(),
            ThetaMode::Explicit(theta) => theta,
        };
        let params = ModelParams::new(zs, theta, self.cutoff, self.margin)?;
        params.require_branch()?;
        Ok(params)
    }

    /// Envelope warnings: large shift or small cutoff.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.z_star().norm() > 1.0 {
            out.push(format!("|z| = {} exceeds 1; truncation residuals grow quickly", self.z_star().norm()));
        }
        if self.cutoff < 64 {
            out.push(format!("N = {} is below 64; interior residuals may exceed tolerances", self.cutoff));
        }
        out
    }

    /// Initial state in the a-basis; b-basis specs are expanded over basis columns.
    pub fn initial_state(&self, basis: &ComplexMatrix) -> StateVector {
        let n = self.cutoff;
        match self.state_basis {
            StateBasis::A => {
                let mut amps = vec![Complex64::ZERO; n];
                for &(level, amp) in &self.state {
                    amps[level] += amp;
                }
                StateVector::from_amplitudes(amps)
            }
            StateBasis::B => {
                let mut psi = StateVector::zeros(n);
                for &(level, amp) in &self.state {
                    psi.axpy(amp, &basis.column(level));
                }
                psi
            }
        }
    }

    /// Serializes to the file format; parsing the result yields `self` again.
    pub fn to_config_string(&self) -> String {
        let theta = match self.theta_mode {
            ThetaMode::AutoHalf => "auto-half".to_owned(),
            ThetaMode::AutoInteger => "auto-integer".to_owned(),
            ThetaMode::Explicit(t) => format_float(t),
        };
        let state: Vec<String> = self
            .state
            .iter()
            .map(|(level, a)| format!("{level}:{},{}", format_float(a.re), format_float(a.im)))
            .collect();
        let mut lines = vec![
            format!("z = {},{}", format_float(self.z_re), format_float(self.z_im)),
            format!("theta = {theta}"),
            format!("n = {}", self.cutoff),
            format!("margin = {}", self.margin),
            format!("t_min = {}", format_float(self.t_min)),
            format!("t_max = {}", format_float(self.t_max)),
            format!("t_steps = {}", self.t_steps),
            format!("state = {}", state.join(" ")),
            format!("state_basis = {}", if self.state_basis == StateBasis::A { "a" } else { "b" }),
            format!("grid_min = {}", format_float(self.grid_min)),
            format!("grid_max = {}", format_float(self.grid_max)),
            format!("grid_steps = {}", self.grid_steps),
            format!("format = {}", if self.format == OutputFormat::Csv { "csv" } else { "json" }),
        ];
        if let Some(path) = &self.output {
            lines.push(format!("output = {}", path.display()));
        }
        lines.join("\n") + "\n"
    }
}
