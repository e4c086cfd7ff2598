//! The quasi-geostrophic limit system, evolved in potential-vorticity form:
//!
//! ```text
//! dt W + v . grad W - Gamma W = 0,    U = biot_savart(W)
//! ```
//!
//! `Gamma` is a Fourier multiplier, so the diffusion is integrated exactly
//! by a scalar factor `exp(dt gamma(xi))` inside a Lawson RK4 step.

use std::sync::Arc;

use crate::diagnostics::{hs_channel, sobolev_norm, NormSeries};
use crate::error::{Error, Result};
use crate::field::{
    derivative, dot_product, inverse_laplacian_f, laplacian, Axis, ScalarField, State4,
};
use crate::grid::Grid;
use crate::params::Params;
use crate::pe::{step_plan, DiagConfig, BLOWUP_FACTOR, ENERGY_GROWTH_TOL};
use crate::structure::{apply_l, biot_savart, gamma_symbol, project_qg};

/// `-v . grad W` with `v` the Biot-Savart velocity of `W`, dealiased.
pub fn qg_rhs(omega: &ScalarField, params: &Params) -> Result<ScalarField> {
    let phi = inverse_laplacian_f(omega, params.froude);
    let v1 = -&derivative(&phi, Axis::X2);
    let v2 = derivative(&phi, Axis::X1);
    let d1 = derivative(omega, Axis::X1);
    let d2 = derivative(omega, Axis::X2);
    Ok(dot_product(&[&v1, &v2], &[&d1, &d2])?.scaled(-1.0))
}

/// Cached integrating factors for one grid, parameter set and step.
#[derive(Clone, Debug)]
pub struct QgSolver {
    grid: Arc<Grid>,
    params: Params,
    dt: f64,
    full: Vec<f64>,
    half: Vec<f64>,
}

impl QgSolver {
    pub fn new(grid: &Arc<Grid>, params: &Params, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
        }
        let mut full = vec![0.0; grid.len()];
        let mut half = vec![0.0; grid.len()];
        for k in 0..grid.len() {
            if grid.is_representable(k) {
                let g = gamma_symbol(grid.xi(k), params);
                full[k] = (dt * g).exp();
                half[k] = (0.5 * dt * g).exp();
            }
        }
        Ok(QgSolver {
            grid: grid.clone(),
            params: *params,
            dt,
            full,
            half,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, w: &ScalarField) -> Result<ScalarField> {
        if !w.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let h = self.dt;
        let p = &self.params;
        let e = |f: &ScalarField| f.apply_symbol(|k| self.full[k]);
        let eh = |f: &ScalarField| f.apply_symbol(|k| self.half[k]);

        let ew_half = eh(w);
        let k1 = qg_rhs(w, p)?;
        let mut a = ew_half.clone();
        a.axpy(0.5 * h, &eh(&k1));
        let k2 = qg_rhs(&a, p)?;
        let mut b = ew_half.clone();
        b.axpy(0.5 * h, &k2);
        let k3 = qg_rhs(&b, p)?;
        let mut c = eh(&ew_half);
        c.axpy(h, &eh(&k3));
        let k4 = qg_rhs(&c, p)?;
        let mut mid = k2;
        mid.axpy(1.0, &k3);
        let mut out = e(w);
        out.axpy(h / 6.0, &e(&k1));
        out.axpy(h / 3.0, &eh(&mid));
        out.axpy(h / 6.0, &k4);
        if !out.is_finite() {
            return Err(Error::BlowUp {
                time: f64::NAN,
                reason: "non-finite coefficient".into(),
            });
        }
        Ok(out)
    }

    /// Runs `steps` steps from `w0`.
    pub fn run(&self, w0: &ScalarField, steps: usize, diag: &DiagConfig) -> Result<QgRunRecord> {
        let f = self.params.froude;
        let exps = diag.exponents();
        let cadence = diag.cadence.max(1);
        let mut series = NormSeries::new();
        let mut snapshot_times = Vec::new();
        let mut omega_snapshots = Vec::new();
        let mut w = w0.clone();
        let h1_0 = sobolev_norm(&biot_savart(&w, f), 1.0);
        let mut energy = w.inner(&w);
        let mut record = 0usize;

        for step in 0..=steps {
            let t = step as f64 * self.dt;
            if step > 0 {
                w = self.step(&w).map_err(|e| match e {
                    Error::BlowUp { reason, .. } => Error::BlowUp { time: t, reason },
                    other => other,
                })?;
                let h1 = sobolev_norm(&biot_savart(&w, f), 1.0);
                if !h1.is_finite() || (h1_0 > 0.0 && h1 > BLOWUP_FACTOR * h1_0) {
                    return Err(Error::BlowUp {
                        time: t,
                        reason: format!("H1 norm {h1:e} exceeds {BLOWUP_FACTOR:e} x initial {h1_0:e}"),
                    });
                }
                let e_new = w.inner(&w);
                if e_new.sqrt() > energy.sqrt() * (1.0 + ENERGY_GROWTH_TOL) {
                    let rel = if energy > 0.0 {
                        e_new.sqrt() / energy.sqrt() - 1.0
                    } else {
                        f64::INFINITY
                    };
                    return Err(Error::EnergyIncrease { time: t, relative: rel });
                }
                energy = e_new;
            }
            if step % cadence == 0 || step == steps {
                let u = biot_savart(&w, f);
                let mut row = vec![
                    ("energy".to_string(), energy),
                    ("grad_sq".to_string(), sobolev_norm(&w, 1.0).powi(2)),
                    ("omega_l2".to_string(), energy.sqrt()),
                ];
                for &s in &exps {
                    row.push((hs_channel("U", s), sobolev_norm(&u, s)));
                }
                series.push(t, &row);
                omega_snapshots.push(w.clone());
                snapshot_times.push(t);
                record += 1;
            }
        }
        debug_assert_eq!(record, snapshot_times.len());
        Ok(QgRunRecord {
            dt: self.dt,
            steps,
            froude: f,
            snapshot_times,
            omega_snapshots,
            series,
            final_omega: w,
        })
    }
}

/// QG run output. Potential vorticity is kept at every diagnostic record;
/// the velocity-temperature field is rebuilt from it on demand.
#[derive(Clone, Debug)]
pub struct QgRunRecord {
    pub dt: f64,
    pub steps: usize,
    pub froude: f64,
    pub snapshot_times: Vec<f64>,
    pub omega_snapshots: Vec<ScalarField>,
    pub series: NormSeries,
    pub final_omega: ScalarField,
}

impl QgRunRecord {
    pub fn u_snapshot(&self, i: usize) -> State4 {
        biot_savart(&self.omega_snapshots[i], self.froude)
    }

    pub fn final_state(&self) -> State4 {
        biot_savart(&self.final_omega, self.froude)
    }
}

/// One step of size `dt`. Rebuilds the integrating factors; use [`QgSolver`]
/// for repeated steps.
pub fn qg_step(omega: &ScalarField, dt: f64, params: &Params) -> Result<ScalarField> {
    QgSolver::new(omega.grid(), params, dt)?.step(omega)
}

/// Integrates to `t_end`, shrinking `dt` so a whole number of steps lands on it.
pub fn qg_run(
    omega0: &ScalarField,
    params: &Params,
    t_end: f64,
    dt: f64,
    diag: &DiagConfig,
) -> Result<QgRunRecord> {
    let (steps, dt) = step_plan(t_end, dt)?;
    QgSolver::new(omega0.grid(), params, dt)?.run(omega0, steps, diag)
}

/// Relative residual of the velocity formulation
/// `Q(dt U + v . grad U - L U) = 0` along a QG run, centered differences in
/// time. Channel `qg2_residual` at interior records.
pub fn qg2_residual(run: &QgRunRecord, params: &Params) -> Result<NormSeries> {
    let n = run.omega_snapshots.len();
    if n < 3 {
        return Err(Error::InsufficientSnapshots { needed: 3, got: n });
    }
    let times = &run.snapshot_times;
    let h = times[1] - times[0];
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::InsufficientSnapshots { needed: 3, got: 0 });
    }
    let f = params.froude;
    let mut out = NormSeries::with_channels(["qg2_residual"]);
    for j in 1..n - 1 {
        let u = run.u_snapshot(j);
        let dt_u = (&run.u_snapshot(j + 1) - &run.u_snapshot(j - 1)).scaled(0.5 / h);
        let adv = project_qg(&crate::field::advect(u.velocity(), &u)?, f);
        let lu = project_qg(&apply_l(&u, params.nu, params.nu_prime), f);
        let mut res = dt_u.clone();
        res.axpy(1.0, &adv);
        res.axpy(-1.0, &lu);
        let scale = [&dt_u, &adv, &lu]
            .iter()
            .map(|t| t.l2_norm())
            .fold(0.0, f64::max);
        let r = if scale == 0.0 { 0.0 } else { res.l2_norm() / scale };
        out.push(times[j], &[("qg2_residual".to_string(), r)]);
    }
    Ok(out)
}

/// `||grad W||^2` through the Laplacian, for checks independent of the
/// Sobolev weight cache.
pub fn gradient_sq(w: &ScalarField) -> f64 {
    -w.inner(&laplacian(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup() -> (Arc<Grid>, Params, f64) {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let p = Params::new(0.1, 0.02, 0.007, 1.0).unwrap();
        (g, p, 1.0)
    }

    #[test]
    fn single_mode_rhs_vanishes() {
        let (g, p, k) = setup();
        let w = ScalarField::from_fn(&g, |x| (k * x[0] + 2.0 * k * x[2]).sin());
        assert!(qg_rhs(&w, &p).unwrap().l2_norm() < 1e-14);
        assert_eq!(qg_rhs(&ScalarField::zeros(&g), &p).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn single_mode_decays_exactly() {
        let (g, p, k) = setup();
        let w0 = ScalarField::from_fn(&g, |x| (k * x[1] - k * x[2]).cos());
        let rec = qg_run(&w0, &p, 1.0, 0.05, &DiagConfig::default()).unwrap();
        let gamma = gamma_symbol([0.0, k, -k], &p);
        let want = w0.scaled(gamma.exp());
        assert!((&rec.final_omega - &want).l2_norm() < 1e-10 * want.l2_norm());
    }

    #[test]
    fn gradient_sq_matches_weights() {
        let (g, _, k) = setup();
        let w = ScalarField::from_fn(&g, |x| (k * x[0]).sin() + (2.0 * k * x[1]).cos());
        assert!((gradient_sq(&w) - sobolev_norm(&w, 1.0).powi(2)).abs() < 1e-12);
    }
}
