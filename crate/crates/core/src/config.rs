//! Run configuration: flat `key = value` text with dotted keys.
//!
//! ```text
//! # comment
//! grid.n = 32
//! params.epsilon = 0.1
//! time.dt = auto
//! diag.s_list = -1, 0, 0.5, 1
//! sweep.epsilons = 0.1, 0.05, 0.02, 0.01
//! ```
//!
//! Unknown keys are errors. Every key has a default, so an empty file is
//! the default acceptance scenario.

use std::path::Path;

use crate::error::{Error, Result};
use crate::params::Params;
use crate::pe::DiagConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    pub seed: u64,
    /// Peak of the Gaussian shell spectrum, in integer wavenumber units.
    pub spectrum_peak_k: f64,
    /// `||U_QG||_{H^1}` of the initial data.
    pub qg_amplitude: f64,
    /// `||U_osc||_{H^-1}` of the initial data.
    pub osc_amplitude: f64,
    /// Extra `|k|^-delta` weight on the oscillating spectrum.
    pub osc_extra_smoothness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Oscillating amplitude per run is `osc_coefficient * epsilon`.
    pub osc_coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub box_length: f64,
    pub params: Params,
    /// `None` selects the advective default.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub init: InitConfig,
    pub diag: DiagConfig,
    pub sweep: SweepConfig,
    /// `C` of the bootstrap threshold.
    pub bootstrap_c: f64,
    /// The constant of the smallness conditions.
    pub smallness_c: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 32,
            box_length: 2.0 * std::f64::consts::PI,
            params: Params {
                epsilon: 0.1,
                nu: 1e-2,
                nu_prime: 5e-3,
                froude: 1.0,
            },
            dt: None,
            t_end: 1.0,
            init: InitConfig {
                seed: 20240917,
                spectrum_peak_k: 2.0,
                qg_amplitude: 0.5,
                osc_amplitude: 0.01,
                osc_extra_smoothness: 0.25,
            },
            diag: DiagConfig::default(),
            sweep: SweepConfig {
                epsilons: vec![0.1, 0.05, 0.02, 0.01],
                osc_coefficient: 0.1,
            },
            bootstrap_c: 1.0,
            smallness_c: 1.0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "grid.n",
    "grid.box_length",
    "params.epsilon",
    "params.nu",
    "params.nu_prime",
    "params.froude",
    "time.dt",
    "time.t_end",
    "init.seed",
    "init.spectrum_peak_k",
    "init.qg_amplitude",
    "init.osc_amplitude",
    "init.osc_extra_smoothness",
    "diag.s_list",
    "diag.cadence",
    "diag.snapshot_every",
    "sweep.epsilons",
    "sweep.osc_coefficient",
    "conditions.bootstrap_c",
    "conditions.smallness_c",
];

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: `{v}` is not a number")))
}

fn int(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|_| Error::Config(format!("{key}: `{v}` is not a nonnegative integer")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key; the result is not re-validated.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "grid.n" => self.n = int(key, v)? as usize,
            "grid.box_length" => self.box_length = num(key, v)?,
            "params.epsilon" => self.params.epsilon = num(key, v)?,
            "params.nu" => self.params.nu = num(key, v)?,
            "params.nu_prime" => self.params.nu_prime = num(key, v)?,
            "params.froude" => self.params.froude = num(key, v)?,
            "time.dt" => {
                self.dt = if v.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(num(key, v)?)
                }
            }
            "time.t_end" => self.t_end = num(key, v)?,
            "init.seed" => self.init.seed = int(key, v)?,
            "init.spectrum_peak_k" => self.init.spectrum_peak_k = num(key, v)?,
            "init.qg_amplitude" => self.init.qg_amplitude = num(key, v)?,
            "init.osc_amplitude" => self.init.osc_amplitude = num(key, v)?,
            "init.osc_extra_smoothness" => self.init.osc_extra_smoothness = num(key, v)?,
            "diag.s_list" => self.diag.s_list = list(key, v)?,
            "diag.cadence" => self.diag.cadence = int(key, v)? as usize,
            "diag.snapshot_every" => self.diag.snapshot_every = int(key, v)? as usize,
            "sweep.epsilons" => self.sweep.epsilons = list(key, v)?,
            "sweep.osc_coefficient" => self.sweep.osc_coefficient = num(key, v)?,
            "conditions.bootstrap_c" => self.bootstrap_c = num(key, v)?,
            "conditions.smallness_c" => self.smallness_c = num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order, then validates.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 8 || !self.n.is_power_of_two() {
            return bad(format!("grid.n must be a power of two >= 8, got {}", self.n));
        }
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return bad(format!("grid.box_length must be > 0, got {}", self.box_length));
        }
        self.params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return bad(format!("time.dt must be > 0, got {dt}"));
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("time.t_end must be > 0, got {}", self.t_end));
        }
        let init = &self.init;
        if !(init.spectrum_peak_k.is_finite() && init.spectrum_peak_k >= 0.0) {
            return bad("init.spectrum_peak_k must be >= 0".into());
        }
        for (k, v) in [
            ("init.qg_amplitude", init.qg_amplitude),
            ("init.osc_amplitude", init.osc_amplitude),
            ("init.osc_extra_smoothness", init.osc_extra_smoothness),
            ("sweep.osc_coefficient", self.sweep.osc_coefficient),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{k} must be >= 0, got {v}"));
            }
        }
        if self.diag.s_list.is_empty() {
            return bad("diag.s_list is empty".into());
        }
        if let Some(s) = self.diag.s_list.iter().find(|s| !(-2.0..=2.0).contains(*s)) {
            return bad(format!("diag.s_list entry {s} outside [-2, 2]"));
        }
        if self.diag.cadence == 0 {
            return bad("diag.cadence must be >= 1".into());
        }
        let eps = &self.sweep.epsilons;
        if eps.is_empty() || eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return bad("sweep.epsilons must be positive".into());
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad("sweep.epsilons must be strictly decreasing".into());
        }
        for (k, v) in [
            ("conditions.bootstrap_c", self.bootstrap_c),
            ("conditions.smallness_c", self.smallness_c),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{k} must be > 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Back to text; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let p = &self.params;
        let i = &self.init;
        let dt = self.dt.map_or("auto".to_string(), |d| format!("{d:?}"));
        [
            format!("grid.n = {}", self.n),
            format!("grid.box_length = {:?}", self.box_length),
            format!("params.epsilon = {:?}", p.epsilon),
            format!("params.nu = {:?}", p.nu),
            format!("params.nu_prime = {:?}", p.nu_prime),
            format!("params.froude = {:?}", p.froude),
            format!("time.dt = {dt}"),
            format!("time.t_end = {:?}", self.t_end),
            format!("init.seed = {}", i.seed),
            format!("init.spectrum_peak_k = {:?}", i.spectrum_peak_k),
            format!("init.qg_amplitude = {:?}", i.qg_amplitude),
            format!("init.osc_amplitude = {:?}", i.osc_amplitude),
            format!("init.osc_extra_smoothness = {:?}", i.osc_extra_smoothness),
            format!("diag.s_list = {}", join(&self.diag.s_list)),
            format!("diag.cadence = {}", self.diag.cadence),
            format!("diag.snapshot_every = {}", self.diag.snapshot_every),
            format!("sweep.epsilons = {}", join(&self.sweep.epsilons)),
            format!("sweep.osc_coefficient = {:?}", self.sweep.osc_coefficient),
            format!("conditions.bootstrap_c = {:?}", self.bootstrap_c),
            format!("conditions.smallness_c = {:?}", self.smallness_c),
        ]
        .join("\n")
            + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(
            RunConfig::parse(&RunConfig::default().to_text()).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn parses_keys_and_comments() {
        let c = RunConfig::parse(
            "# header\n grid.n = 16 \nsweep.epsilons = 0.2, 0.1 # trailing\ntime.dt = 0.005\n",
        )
        .unwrap();
        assert_eq!(c.n, 16);
        assert_eq!(c.sweep.epsilons, vec![0.2, 0.1]);
        assert_eq!(c.dt, Some(0.005));
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        let e = RunConfig::parse("grid.nn = 16").unwrap_err();
        assert!(e.to_string().contains("grid.nn"));
        assert!(RunConfig::parse("grid.n = 12").is_err());
        assert!(RunConfig::parse("sweep.epsilons = 0.1, 0.2").is_err());
        assert!(RunConfig::parse("params.nu = -1").is_err());
        assert!(RunConfig::parse("just text").is_err());
        let mut c = RunConfig::default();
        assert!(c.apply_overrides(&["grid.n=64".into()]).is_ok());
        assert_eq!(c.n, 64);
        assert!(c.apply_overrides(&["grid.n".into()]).is_err());
    }
}
