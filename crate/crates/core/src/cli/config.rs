//! Flat `key = value` run configuration.
//!
//! Resolution order: per-command defaults, then the `--config` file, then
//! `--set key=value` overrides, then the dedicated flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dk2::EntropyMode;
use crate::error::{Error, Result};
use crate::model::PhysicalParams;

use super::csv::fmt_num;
use super::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisVar {
    T,
    K,
    NB,
    MScatter,
    NEx,
    Gamma,
}

impl AxisVar {
    pub fn name(&self) -> &'static str {
        match self {
            AxisVar::T => "T",
            AxisVar::K => "k",
            AxisVar::NB => "n_b",
            AxisVar::MScatter => "m_scatter",
            AxisVar::NEx => "N_ex",
            AxisVar::Gamma => "gamma",
        }
    }
}

impl FromStr for AxisVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "T" | "t_ramp" => AxisVar::T,
            "k" => AxisVar::K,
            "n_b" => AxisVar::NB,
            "m_scatter" | "m" => AxisVar::MScatter,
            "N_ex" | "n_ex" => AxisVar::NEx,
            "gamma" => AxisVar::Gamma,
            other => {
                return Err(Error::Config(format!(
                    "unknown axis variable `{other}` (expected T, k, n_b, m_scatter, N_ex or gamma)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn name(&self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
        }
    }
}

fn spaced(start: f64, stop: f64, count: usize, scale: Scale) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let last = (count - 1) as f64;
    (0..count)
        .map(|i| {
            let f = i as f64 / last;
            match scale {
                Scale::Linear => start + (stop - start) * f,
                Scale::Log => (start.ln() + (stop.ln() - start.ln()) * f).exp(),
            }
        })
        .map(|v| v.clamp(start.min(stop), start.max(stop)))
        .collect()
}

/// One sweep axis of a figure or steady-state run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub var: AxisVar,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scale: Scale,
}

impl SweepAxis {
    pub fn linear(var: AxisVar, start: f64, stop: f64, count: usize) -> Self {
        Self {
            var,
            start,
            stop,
            count,
            scale: Scale::Linear,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = spaced(self.start, self.stop, self.count, self.scale);
        if self.var == AxisVar::NB {
            v.iter_mut().for_each(|x| *x = x.round());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::Config("axis_count must be at least 2".into()));
        }
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config("axis_start must be below axis_stop".into()));
        }
        if self.scale == Scale::Log && self.start <= 0.0 {
            return Err(Error::Config("a log axis needs axis_start > 0".into()));
        }
        if self.var == AxisVar::NB && self.start < 0.0 {
            return Err(Error::Config("n_b axis must be non-negative".into()));
        }
        Ok(())
    }
}

/// A list of grid values written either explicitly (`1,2,5`) or as
/// `lin:start:stop:count` / `log:start:stop:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub text: String,
    pub values: Vec<f64>,
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse grid `{s}`"));
        let values = if let Some(rest) = s.strip_prefix("lin:").or_else(|| s.strip_prefix("log:")) {
            let scale = if s.starts_with("log:") { Scale::Log } else { Scale::Linear };
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let start: f64 = parts[0].parse().map_err(|_| bad())?;
            let stop: f64 = parts[1].parse().map_err(|_| bad())?;
            let count: usize = parts[2].parse().map_err(|_| bad())?;
            if count == 0 || stop < start || (scale == Scale::Log && start <= 0.0) {
                return Err(bad());
            }
            spaced(start, stop, count, scale)
        } else {
            parse_list::<f64>(s, "grid")?
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        Ok(GridSpec {
            text: s.to_string(),
            values,
        })
    }
}

fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{}`", item.trim())))
        })
        .collect()
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Fully resolved settings of one CLI invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: PhysicalParams,
    pub axis: Option<SweepAxis>,
    /// Columns of fig2 and fig4.
    pub n_b_list: Vec<usize>,
    /// Columns of fig3 (values of `u_x - u_b/2`).
    pub m_list: Vec<f64>,
    /// Subspace of fig3.
    pub n_b: usize,
    pub entropy_mode: EntropyMode,
    pub window: f64,
    pub tol: f64,
    pub threshold: f64,
    pub verify_k: GridSpec,
    pub verify_t: GridSpec,
    pub verify_n_b: Vec<usize>,
    pub verify_m: Vec<f64>,
    pub gamma: f64,
    pub n_ex: f64,
    pub tau: Option<f64>,
    pub n_max: Option<usize>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub samples: usize,
    pub initial_n: usize,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults reproducing the corresponding figure with zero arguments.
    pub fn defaults(command: Command) -> Self {
        let mut cfg = RunConfig {
            command,
            params: PhysicalParams::sweep(20.0, 1.0).with_scattering(0.5),
            axis: None,
            n_b_list: vec![0, 2, 5],
            m_list: vec![0.0, 0.5, 5.0, 10.0, 50.0],
            n_b: 1,
            entropy_mode: EntropyMode::Amplitude,
            window: 8.0,
            tol: 1e-10,
            threshold: 1e-3,
            verify_k: "log:10:100:5".parse().expect("static grid"),
            verify_t: "log:0.01:5:5".parse().expect("static grid"),
            verify_n_b: vec![0, 1, 2, 5],
            verify_m: vec![0.0, 0.5],
            gamma: 0.01,
            n_ex: 4.0,
            tau: None,
            n_max: None,
            horizon: None,
            dt: None,
            samples: 100,
            initial_n: 0,
            out: None,
        };
        match command {
            Command::Fig2 => {
                cfg.axis = Some(SweepAxis::linear(AxisVar::T, 0.0, 30.0, 300));
            }
            Command::Fig3 => {
                cfg.params = PhysicalParams::sweep(100.0, 0.01).with_scattering(0.5);
                cfg.axis = Some(SweepAxis {
                    var: AxisVar::K,
                    start: 100.0,
                    stop: 1000.0,
                    count: 200,
                    scale: Scale::Log,
                });
            }
            Command::Fig4 => {
                cfg.params = PhysicalParams::sweep(10.0, 1.0).with_scattering(0.5);
                cfg.axis = Some(SweepAxis::linear(AxisVar::T, 0.0, 40.0, 401));
            }
            Command::Verify | Command::Steady | Command::Evolve => {}
        }
        cfg
    }

    fn axis_mut(&mut self) -> &mut SweepAxis {
        self.axis
            .get_or_insert_with(|| SweepAxis::linear(AxisVar::T, 0.0, 1.0, 2))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        let p = &mut self.params;
        match key {
            "omega_b" => p.omega_b = parse_num(key, value)?,
            "omega_f" => p.omega_f = parse_num(key, value)?,
            "u_f" => p.u_f = parse_num(key, value)?,
            "u_x" => p.u_x = parse_num(key, value)?,
            "u_b" => p.u_b = parse_num(key, value)?,
            "chi" => p.chi = parse_num(key, value)?,
            "k" => p.k = parse_num(key, value)?,
            "T" | "t_ramp" => p.t_ramp = parse_num(key, value)?,
            "m_scatter" => *p = p.with_scattering(parse_num(key, value)?),
            "axis" => {
                if value == "none" {
                    self.axis = None;
                } else {
                    self.axis_mut().var = value.parse()?;
                }
            }
            "axis_start" => self.axis_mut().start = parse_num(key, value)?,
            "axis_stop" => self.axis_mut().stop = parse_num(key, value)?,
            "axis_count" => self.axis_mut().count = parse_num(key, value)?,
            "axis_scale" => {
                self.axis_mut().scale = match value {
                    "linear" | "lin" => Scale::Linear,
                    "log" => Scale::Log,
                    other => return Err(Error::Config(format!("unknown axis_scale `{other}`"))),
                }
            }
            "n_b_list" => self.n_b_list = parse_list(value, key)?,
            "m_list" => self.m_list = parse_list(value, key)?,
            "n_b" => self.n_b = parse_num(key, value)?,
            "entropy_mode" => self.entropy_mode = value.parse()?,
            "window" => self.window = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "threshold" => self.threshold = parse_num(key, value)?,
            "verify_k" => self.verify_k = value.parse()?,
            "verify_t" => self.verify_t = value.parse()?,
            "verify_n_b" => self.verify_n_b = parse_list(value, key)?,
            "verify_m" => self.verify_m = parse_list(value, key)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "n_ex" | "N_ex" => self.n_ex = parse_num(key, value)?,
            "tau" => self.tau = Some(parse_num(key, value)?),
            "n_max" => self.n_max = Some(parse_num(key, value)?),
            "horizon" => self.horizon = Some(parse_num(key, value)?),
            "dt" => self.dt = Some(parse_num(key, value)?),
            "samples" => self.samples = parse_num(key, value)?,
            "initial_n" => self.initial_n = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
        self.set(key, value)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Some(axis) = &self.axis {
            axis.validate()?;
            let allowed: &[AxisVar] = match self.command {
                Command::Fig2 | Command::Fig4 => &[AxisVar::T, AxisVar::K, AxisVar::MScatter],
                Command::Fig3 => &[AxisVar::T, AxisVar::K, AxisVar::NB],
                Command::Steady => &[AxisVar::T, AxisVar::K, AxisVar::MScatter, AxisVar::NEx, AxisVar::Gamma],
                Command::Verify | Command::Evolve => &[],
            };
            if !allowed.contains(&axis.var) {
                return Err(Error::Config(format!(
                    "axis `{}` is not available for {}",
                    axis.var.name(),
                    self.command.name()
                )));
            }
        } else if matches!(self.command, Command::Fig2 | Command::Fig3 | Command::Fig4) {
            return Err(Error::Config(format!("{} needs a sweep axis", self.command.name())));
        }
        match self.command {
            Command::Fig2 | Command::Fig4 if self.n_b_list.is_empty() => {
                return Err(Error::Config("n_b_list must not be empty".into()))
            }
            Command::Fig3 if self.m_list.is_empty() => {
                return Err(Error::Config("m_list must not be empty".into()))
            }
            _ => {}
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        Ok(())
    }

    /// Every setting as `key=value`, in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let mut e: Vec<(String, String)> = vec![
            ("command".into(), self.command.name().into()),
            ("omega_b".into(), fmt_num(p.omega_b)),
            ("omega_f".into(), fmt_num(p.omega_f)),
            ("u_f".into(), fmt_num(p.u_f)),
            ("u_x".into(), fmt_num(p.u_x)),
            ("u_b".into(), fmt_num(p.u_b)),
            ("chi".into(), fmt_num(p.chi)),
            ("k".into(), fmt_num(p.k)),
            ("t_ramp".into(), fmt_num(p.t_ramp)),
        ];
        match &self.axis {
            Some(a) => {
                e.push(("axis".into(), a.var.name().into()));
                e.push(("axis_start".into(), fmt_num(a.start)));
                e.push(("axis_stop".into(), fmt_num(a.stop)));
                e.push(("axis_count".into(), a.count.to_string()));
                e.push(("axis_scale".into(), a.scale.name().into()));
            }
            None => e.push(("axis".into(), "none".into())),
        }
        e.push(("n_b_list".into(), join(&self.n_b_list)));
        e.push((
            "m_list".into(),
            self.m_list.iter().map(|m| fmt_num(*m)).collect::<Vec<_>>().join(","),
        ));
        e.push(("n_b".into(), self.n_b.to_string()));
        e.push(("entropy_mode".into(), self.entropy_mode.to_string()));
        e.push(("window".into(), fmt_num(self.window)));
        e.push(("tol".into(), fmt_num(self.tol)));
        e.push(("threshold".into(), fmt_num(self.threshold)));
        e.push(("verify_k".into(), self.verify_k.text.clone()));
        e.push(("verify_t".into(), self.verify_t.text.clone()));
        e.push(("verify_n_b".into(), join(&self.verify_n_b)));
        e.push((
            "verify_m".into(),
            self.verify_m.iter().map(|m| fmt_num(*m)).collect::<Vec<_>>().join(","),
        ));
        e.push(("gamma".into(), fmt_num(self.gamma)));
        e.push(("n_ex".into(), fmt_num(self.n_ex)));
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_else(|| "auto".into());
        e.push(("tau".into(), opt(self.tau)));
        e.push(("n_max".into(), self.n_max.map(|n| n.to_string()).unwrap_or_else(|| "auto".into())));
        e.push(("horizon".into(), opt(self.horizon)));
        e.push(("dt".into(), opt(self.dt)));
        e.push(("samples".into(), self.samples.to_string()));
        e.push(("initial_n".into(), self.initial_n.to_string()));
        e
    }

    /// Single-line rendering used as the CSV comment header.
    pub fn comment_line(&self) -> String {
        let body = self
            .entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        format!("# {body}")
    }
}
