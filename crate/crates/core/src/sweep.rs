//! Convergence sweep over the Rossby number: one QG reference run, one PE
//! run per epsilon on a common time grid, and log-log rate fits.

use crate::config::RunConfig;
use crate::diagnostics::{
    bootstrap_monitor, energy_check, es_norm, hs_channel, sobolev_norm, BootstrapReport,
    EnergyCheck, NormSeries,
};
use crate::error::{Error, Result};
use crate::field::leray_project;
use crate::init::well_prepared_parts;
use crate::pe::{default_dt, step_plan, DiagContext, PeSolver};
use crate::qg::{QgRunRecord, QgSolver};
use crate::structure::omega;

/// Least-squares fit of `log metric = slope * log eps + intercept`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the fit error in log space.
    pub residual: f64,
    /// Points used.
    pub points: usize,
    /// Indices dropped because a value was nonpositive or not finite.
    pub excluded: Vec<usize>,
}

impl RateFit {
    /// False when fewer than two usable points were left.
    pub fn is_present(&self) -> bool {
        self.slope.is_finite()
    }
}

pub fn fit_rate(eps: &[f64], metric: &[f64]) -> RateFit {
    assert_eq!(eps.len(), metric.len());
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, (&e, &m)) in eps.iter().zip(metric).enumerate() {
        if e > 0.0 && m > 0.0 && e.is_finite() && m.is_finite() {
            xs.push(e.ln());
            ys.push(m.ln());
        } else {
            excluded.push(i);
        }
    }
    let n = xs.len();
    let nan = RateFit {
        slope: f64::NAN,
        intercept: f64::NAN,
        residual: f64::NAN,
        points: n,
        excluded: excluded.clone(),
    };
    if n < 2 {
        return nan;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return nan;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    RateFit {
        slope,
        intercept,
        residual,
        points: n,
        excluded,
    }
}

/// Metric names used in rows and slopes.
pub fn es_osc_name(s: f64) -> String {
    format!("Es(U_osc;{s})")
}

pub fn es_qg_diff_name(s: f64) -> String {
    format!("Es(dQG;{s})")
}

pub const SUP_OSC_L2: &str = "sup_L2(U_osc)";
pub const SUP_OMEGA_DIFF: &str = "sup_L2(dOmega)";

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub epsilon: f64,
    pub osc_amplitude: f64,
    /// `||U_osc||_{E^s}` for each entry of the sweep's `s_list`.
    pub osc_es: Vec<f64>,
    /// `sup_t ||P U(t)||_{L2}`.
    pub osc_sup_l2: f64,
    /// `sup_t ||Omega_eps - Omega_QG||_{L2}`.
    pub omega_diff_sup: f64,
    /// `||U_QG - U_QG_limit||_{E^s}` for each entry of `s_list`.
    pub qg_diff_es: Vec<f64>,
    pub bootstrap: BootstrapReport,
    pub energy: EnergyCheck,
    pub series: NormSeries,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub s_list: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub rows: Vec<SweepRow>,
    pub slopes: Vec<(String, RateFit)>,
    pub qg_series: NormSeries,
    pub qg_energy: EnergyCheck,
}

impl SweepResult {
    pub fn epsilons(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.epsilon).collect()
    }

    /// Every per-epsilon metric as a named column, in row order.
    pub fn metrics(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::new();
        for (j, &s) in self.s_list.iter().enumerate() {
            out.push((es_osc_name(s), self.rows.iter().map(|r| r.osc_es[j]).collect()));
        }
        out.push((SUP_OSC_L2.to_string(), self.rows.iter().map(|r| r.osc_sup_l2).collect()));
        out.push((
            SUP_OMEGA_DIFF.to_string(),
            self.rows.iter().map(|r| r.omega_diff_sup).collect(),
        ));
        for (j, &s) in self.s_list.iter().enumerate() {
            out.push((es_qg_diff_name(s), self.rows.iter().map(|r| r.qg_diff_es[j]).collect()));
        }
        out.push((
            "bootstrap_ratio".to_string(),
            self.rows.iter().map(|r| r.bootstrap.ratio).collect(),
        ));
        out
    }

    pub fn metric(&self, name: &str) -> Option<Vec<f64>> {
        self.metrics().into_iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn slope(&self, name: &str) -> Option<&RateFit> {
        self.slopes.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

fn tag_epsilon(eps: f64, e: Error) -> Error {
    match e {
        Error::BlowUp { time, reason } => Error::BlowUp {
            time,
            reason: format!("epsilon = {eps}: {reason}"),
        },
        Error::EnergyIncrease { time, relative } => Error::BlowUp {
            time,
            reason: format!("epsilon = {eps}: L2 norm increased by {relative:e}"),
        },
        other => other,
    }
}

fn column_max(series: &NormSeries, name: &str) -> Result<f64> {
    Ok(series.require(name)?.iter().copied().fold(0.0, f64::max))
}

/// Runs the QG reference once and a PE run for every
/// `epsilon` in `cfg.sweep.epsilons`, with oscillating amplitude
/// `cfg.sweep.osc_coefficient * epsilon`.
pub fn run_convergence_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let eps_list = cfg.sweep.epsilons.clone();
    let mut data = Vec::with_capacity(eps_list.len());
    for &eps in &eps_list {
        let mut c = cfg.clone();
        c.params.epsilon = eps;
        c.init.osc_amplitude = cfg.sweep.osc_coefficient * eps;
        let parts = well_prepared_parts(&c)?;
        let u0 = leray_project(&(&parts.qg + &parts.osc));
        data.push((c, parts.qg, u0));
    }
    let dt_req = match cfg.dt {
        Some(dt) => dt,
        None => data
            .iter()
            .map(|(_, _, u0)| default_dt(u0, cfg.t_end))
            .fold(f64::INFINITY, f64::min),
    };
    let (steps, dt) = step_plan(cfg.t_end, dt_req)?;
    let grid = data[0].2.grid().clone();
    let f = cfg.params.froude;
    let mut diag = cfg.diag.clone();
    diag.snapshot_every = 0;
    let exps = diag.exponents();

    let w0 = omega(&data[0].1, f);
    let qg: QgRunRecord = QgSolver::new(&grid, &cfg.params, dt)?.run(&w0, steps, &diag)?;
    let qg_energy = energy_check(&qg.series, cfg.params.min_viscosity())?;

    let mut rows = Vec::with_capacity(eps_list.len());
    for (c, _, u0) in &data {
        let eps = c.params.epsilon;
        let solver = PeSolver::new(&grid, &c.params, dt)?;
        let mut observer = |ctx: &DiagContext<'_>| -> Result<Vec<(String, f64)>> {
            let w_ref = &qg.omega_snapshots[ctx.record];
            let u_ref = qg.u_snapshot(ctx.record);
            let d_qg = &ctx.parts.qg - &u_ref;
            let mut row = vec![(
                "L2(dOmega)".to_string(),
                (&ctx.parts.omega - w_ref).l2_norm(),
            )];
            for &s in &exps {
                row.push((hs_channel("dQG", s), sobolev_norm(&d_qg, s)));
            }
            Ok(row)
        };
        let run = solver
            .run(u0, steps, &diag, &mut observer)
            .map_err(|e| tag_epsilon(eps, e))?;
        let p = &c.params;
        let osc_es = diag
            .s_list
            .iter()
            .map(|&s| es_norm(&run.series, "U_osc", s, p.nu, p.nu_prime, cfg.t_end))
            .collect::<Result<Vec<_>>>()?;
        let qg_diff_es = diag
            .s_list
            .iter()
            .map(|&s| es_norm(&run.series, "dQG", s, p.nu, p.nu_prime, cfg.t_end))
            .collect::<Result<Vec<_>>>()?;
        rows.push(SweepRow {
            epsilon: eps,
            osc_amplitude: c.init.osc_amplitude,
            osc_es,
            osc_sup_l2: column_max(&run.series, &hs_channel("U_osc", 0.0))?,
            omega_diff_sup: column_max(&run.series, "L2(dOmega)")?,
            qg_diff_es,
            bootstrap: bootstrap_monitor(&run.series, p.nu, p.nu_prime, cfg.bootstrap_c)?,
            energy: energy_check(&run.series, p.min_viscosity())?,
            series: run.series,
        });
    }

    let mut result = SweepResult {
        s_list: diag.s_list.clone(),
        dt,
        t_end: cfg.t_end,
        rows,
        slopes: Vec::new(),
        qg_series: qg.series,
        qg_energy,
    };
    let eps = result.epsilons();
    result.slopes = result
        .metrics()
        .into_iter()
        .map(|(name, vals)| {
            let fit = fit_rate(&eps, &vals);
            (name, fit)
        })
        .collect();
    Ok(result)
}
