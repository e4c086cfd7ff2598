//! Time integration of the penalized primitive equations in Leray-projected,
//! pressure-free form:
//!
//! ```text
//! dt U = -P(v . grad U) + L U - (1/eps) P A U
//! ```
//!
//! The linear part is propagated exactly per Fourier mode with the cached
//! 4x4 matrix exponential; the advection term goes through a Lawson
//! (integrating-factor) RK4 step.

use std::sync::Arc;

use num_complex::Complex64;

use crate::diagnostics::{hs_channel, sobolev_norm, NormSeries};
use crate::error::{Error, Result};
use crate::expm::{expm, scale, Mat4};
use crate::field::{advect, leray_project, ScalarField, State4};
use crate::grid::Grid;
use crate::params::Params;
use crate::structure::{decompose, DecompositionResult};

/// Blow-up proxy: `||U||_{H^1}` may not grow past this multiple of its
/// initial value.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Relative growth of `||U||_{L2}` over one step that fails a run.
pub const ENERGY_GROWTH_TOL: f64 = 1e-8;

/// Symbol of `L - (1/eps) P A` at wavevector `xi`, with `P` the Leray
/// symbol extended by the identity on theta. The symbol is real.
pub fn mode_symbol(xi: [f64; 3], params: &Params) -> Mat4 {
    let q = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let mut m = [[0.0; 4]; 4];
    if q == 0.0 {
        return m;
    }
    let inv_f = 1.0 / params.froude;
    let a: Mat4 = [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, inv_f],
        [0.0, 0.0, -inv_f, 0.0],
    ];
    let mut p = [[0.0; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] = if i == j { 1.0 } else { 0.0 } - xi[i] * xi[j] / q;
        }
    }
    p[3][3] = 1.0;
    let rot = 1.0 / params.epsilon;
    for i in 0..4 {
        for j in 0..4 {
            let pa: f64 = (0..4).map(|k| p[i][k] * a[k][j]).sum();
            m[i][j] = -rot * pa;
        }
        m[i][i] -= if i < 3 { params.nu } else { params.nu_prime } * q;
    }
    m
}

/// Per-mode exponentials `exp(dt M(xi))` and `exp(dt/2 M(xi))` for a fixed
/// grid, parameter set and step.
#[derive(Clone, Debug)]
pub struct LinearPropagator {
    grid: Arc<Grid>,
    params: Params,
    dt: f64,
    full: Vec<Mat4>,
    half: Vec<Mat4>,
}

pub fn build_propagator(grid: &Arc<Grid>, params: &Params, dt: f64) -> Result<LinearPropagator> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
    }
    let zero = [[0.0; 4]; 4];
    let mut full = vec![zero; grid.len()];
    let mut half = vec![zero; grid.len()];
    for k in 0..grid.len() {
        if !grid.is_representable(k) {
            continue;
        }
        // M(-xi) = M(xi)
        let c = grid.conj_index(k);
        if c < k {
            full[k] = full[c];
            half[k] = half[c];
            continue;
        }
        let m = mode_symbol(grid.xi(k), params);
        half[k] = expm(&scale(&m, 0.5 * dt));
        full[k] = expm(&scale(&m, dt));
    }
    Ok(LinearPropagator {
        grid: grid.clone(),
        params: *params,
        dt,
        full,
        half,
    })
}

impl LinearPropagator {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `exp(dt M)` at mode index `k`.
    pub fn matrix(&self, k: usize) -> &Mat4 {
        &self.full[k]
    }

    pub fn half_matrix(&self, k: usize) -> &Mat4 {
        &self.half[k]
    }

    pub fn apply(&self, u: &State4) -> State4 {
        apply_mats(&self.full, u)
    }

    pub fn apply_half(&self, u: &State4) -> State4 {
        apply_mats(&self.half, u)
    }
}

fn apply_mats(mats: &[Mat4], u: &State4) -> State4 {
    let g = u.grid().clone();
    let c = u.components();
    let mut out: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![Complex64::default(); g.len()]);
    for (k, m) in mats.iter().enumerate() {
        let w = [
            c[0].coeffs()[k],
            c[1].coeffs()[k],
            c[2].coeffs()[k],
            c[3].coeffs()[k],
        ];
        for i in 0..4 {
            out[i][k] = w[0] * m[i][0] + w[1] * m[i][1] + w[2] * m[i][2] + w[3] * m[i][3];
        }
    }
    let [a, b, cc, d] = out;
    State4::new(
        ScalarField::from_raw(&g, a),
        ScalarField::from_raw(&g, b),
        ScalarField::from_raw(&g, cc),
        ScalarField::from_raw(&g, d),
    )
    .expect("same grid")
}

fn nonlinear(u: &State4) -> Result<State4> {
    Ok(leray_project(&advect(u.velocity(), u)?).scaled(-1.0))
}

/// One Lawson RK4 step with the advection term switched on or off.
pub fn lawson_step(u: &State4, prop: &LinearPropagator, advection: bool) -> Result<State4> {
    if !u.grid().same_as(prop.grid()) {
        return Err(Error::GridMismatch);
    }
    let h = prop.dt;
    let mut next = if advection {
        let eu_half = prop.apply_half(u);
        let k1 = nonlinear(u)?;
        let mut a = eu_half.clone();
        a.axpy(0.5 * h, &prop.apply_half(&k1));
        let k2 = nonlinear(&a)?;
        let mut b = eu_half.clone();
        b.axpy(0.5 * h, &k2);
        let k3 = nonlinear(&b)?;
        let mut c = prop.apply_half(&eu_half);
        c.axpy(h, &prop.apply_half(&k3));
        let k4 = nonlinear(&c)?;
        let mut mid = k2;
        mid.axpy(1.0, &k3);
        let mut out = prop.apply(u);
        out.axpy(h / 6.0, &prop.apply(&k1));
        out.axpy(h / 3.0, &prop.apply_half(&mid));
        out.axpy(h / 6.0, &k4);
        out
    } else {
        prop.apply(u)
    };
    next = leray_project(&next);
    if !next.is_finite() {
        return Err(Error::BlowUp {
            time: f64::NAN,
            reason: "non-finite coefficient".into(),
        });
    }
    Ok(next)
}

/// One integrating-factor RK4 step of the full system.
pub fn pe_step(state: &State4, prop: &LinearPropagator, params: &Params) -> Result<State4> {
    if params != prop.params() {
        return Err(Error::InvalidParams(
            "propagator was built for different parameters".into(),
        ));
    }
    lawson_step(state, prop, true)
}

/// What to record along a run.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagConfig {
    /// Sobolev exponents `s` whose `E^s` norms are wanted; `H^s` and
    /// `H^{s+1}` channels are recorded for each.
    pub s_list: Vec<f64>,
    /// Steps between diagnostic records.
    pub cadence: usize,
    /// Diagnostic records between snapshots; 0 keeps no snapshots.
    pub snapshot_every: usize,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig {
            s_list: vec![-1.0, 0.0, 0.5, 1.0],
            cadence: 10,
            snapshot_every: 0,
        }
    }
}

impl DiagConfig {
    /// Every exponent with a recorded `H^s` channel: the requested ones, their
    /// shifts by one, 0, 1 and 3/2 (bootstrap monitor).
    pub fn exponents(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .s_list
            .iter()
            .flat_map(|&x| [x, x + 1.0])
            .chain([0.0, 1.0, 1.5])
            .collect();
        s.sort_by(|a, b| a.partial_cmp(b).expect("finite exponents"));
        s.dedup();
        s
    }
}

/// Step count and effective step so that a whole number of steps lands on `t_end`.
pub fn step_plan(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidParams(format!("t_end must be > 0, got {t_end}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
    }
    let steps = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((steps, t_end / steps as f64))
}

/// `min(0.5 dx / max|v|, t_end / 1000)`.
pub fn default_dt(u0: &State4, t_end: f64) -> f64 {
    let phys: Vec<Vec<f64>> = (0..3).map(|j| u0.v(j).to_physical()).collect();
    let vmax = (0..u0.grid().len())
        .map(|p| (phys[0][p].powi(2) + phys[1][p].powi(2) + phys[2][p].powi(2)).sqrt())
        .fold(0.0, f64::max);
    let cap = t_end / 1000.0;
    if vmax == 0.0 {
        cap
    } else {
        (0.5 * u0.grid().dx() / vmax).min(cap)
    }
}

/// State handed to a run observer at every diagnostic record.
pub struct DiagContext<'a> {
    pub record: usize,
    pub time: f64,
    pub state: &'a State4,
    pub parts: &'a DecompositionResult,
}

pub type Observer<'o> = dyn FnMut(&DiagContext<'_>) -> Result<Vec<(String, f64)>> + 'o;

#[derive(Clone, Debug)]
pub struct PeRunRecord {
    /// Effective step.
    pub dt: f64,
    pub steps: usize,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<State4>,
    pub series: NormSeries,
    pub final_state: State4,
}

/// Configured PE integrator: parameters, cached propagator and the advection switch.
pub struct PeSolver {
    params: Params,
    prop: LinearPropagator,
    advection: bool,
}

impl PeSolver {
    pub fn new(grid: &Arc<Grid>, params: &Params, dt: f64) -> Result<Self> {
        Ok(PeSolver {
            params: *params,
            prop: build_propagator(grid, params, dt)?,
            advection: true,
        })
    }

    pub fn with_advection(mut self, on: bool) -> Self {
        self.advection = on;
        self
    }

    pub fn propagator(&self) -> &LinearPropagator {
        &self.prop
    }

    pub fn step(&self, u: &State4) -> Result<State4> {
        lawson_step(u, &self.prop, self.advection)
    }

    /// Runs `steps` steps of the cached size from `u0`.
    pub fn run(
        &self,
        u0: &State4,
        steps: usize,
        diag: &DiagConfig,
        observer: &mut Observer<'_>,
    ) -> Result<PeRunRecord> {
        let dt = self.prop.dt;
        let f = self.params.froude;
        let exps = diag.exponents();
        let cadence = diag.cadence.max(1);
        let mut series = NormSeries::new();
        let mut snapshot_times = Vec::new();
        let mut snapshots = Vec::new();
        let mut u = leray_project(u0);
        let h1_0 = sobolev_norm(&u, 1.0);
        let mut energy = u.inner(&u);
        let mut record = 0usize;

        for step in 0..=steps {
            let t = step as f64 * dt;
            if step > 0 {
                u = self.step(&u).map_err(|e| match e {
                    Error::BlowUp { reason, .. } => Error::BlowUp { time: t, reason },
                    other => other,
                })?;
                let h1 = sobolev_norm(&u, 1.0);
                if !h1.is_finite() || (h1_0 > 0.0 && h1 > BLOWUP_FACTOR * h1_0) {
                    return Err(Error::BlowUp {
                        time: t,
                        reason: format!("H1 norm {h1:e} exceeds {BLOWUP_FACTOR:e} x initial {h1_0:e}"),
                    });
                }
                let e_new = u.inner(&u);
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
                let parts = decompose(&u, f);
                let mut row = vec![
                    ("energy".to_string(), energy),
                    ("grad_sq".to_string(), sobolev_norm(&u, 1.0).powi(2)),
                    ("max_divergence".to_string(), u.max_divergence()),
                    ("omega_l2".to_string(), parts.omega.l2_norm()),
                ];
                for &s in &exps {
                    row.push((hs_channel("U", s), sobolev_norm(&u, s)));
                    row.push((hs_channel("U_qg", s), sobolev_norm(&parts.qg, s)));
                    row.push((hs_channel("U_osc", s), sobolev_norm(&parts.osc, s)));
                }
                let ctx = DiagContext {
                    record,
                    time: t,
                    state: &u,
                    parts: &parts,
                };
                row.extend(observer(&ctx)?);
                series.push(t, &row);
                if diag.snapshot_every > 0 && record % diag.snapshot_every == 0 {
                    snapshot_times.push(t);
                    snapshots.push(u.clone());
                }
                record += 1;
            }
        }
        Ok(PeRunRecord {
            dt,
            steps,
            snapshot_times,
            snapshots,
            series,
            final_state: u,
        })
    }
}

/// Integrates from `u0` to `t_end`. The step is shrunk, if needed, so that
/// a whole number of steps reaches `t_end` exactly.
pub fn pe_run(
    u0: &State4,
    params: &Params,
    t_end: f64,
    dt: f64,
    diag: &DiagConfig,
) -> Result<PeRunRecord> {
    let (steps, dt) = step_plan(t_end, dt)?;
    PeSolver::new(u0.grid(), params, dt)?.run(u0, steps, diag, &mut |_| Ok(Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expm::matmul;

    #[test]
    fn heat_kernel_without_rotation() {
        let p = Params::new(f64::INFINITY, 0.03, 0.03, 1.0).unwrap();
        let xi = [1.0, -2.0, 0.5];
        let q = 1.0 + 4.0 + 0.25;
        let dt = 0.7;
        let e = expm(&scale(&mode_symbol(xi, &p), dt));
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { (-0.03 * dt * q).exp() } else { 0.0 };
                assert!((e[i][j] - want).abs() < 1e-15, "{i}{j}");
            }
        }
    }

    #[test]
    fn vertical_mode_is_a_rotation() {
        // xi || e3: P is the identity on (v1, v2), which rotate at rate 1/eps.
        let eps = 0.013;
        let p = Params::inviscid(eps, 1.0).unwrap();
        let dt = 0.1;
        let e = expm(&scale(&mode_symbol([0.0, 0.0, 2.0], &p), dt));
        let a = dt / eps;
        let want = [
            [a.cos(), a.sin(), 0.0, 0.0],
            [-a.sin(), a.cos(), 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, a, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((e[i][j] - want[i][j]).abs() < 1e-12, "{i}{j}: {} vs {}", e[i][j], want[i][j]);
            }
        }
    }

    #[test]
    fn half_step_squares_to_full() {
        let g = Grid::new(8, 2.0).unwrap();
        let p = Params::new(0.05, 0.02, 0.004, 0.7).unwrap();
        let prop = build_propagator(&g, &p, 0.03).unwrap();
        for k in [g.index_of([1, 2, 3]), g.index_of([-3, 0, 1])] {
            let sq = matmul(prop.half_matrix(k), prop.half_matrix(k));
            let full = prop.matrix(k);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((sq[i][j] - full[i][j]).abs() < 1e-13);
                }
            }
        }
        assert!(build_propagator(&g, &p, 0.0).is_err());
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = Grid::new(8, 2.0).unwrap();
        let p = Params::new(0.1, 0.01, 0.005, 1.0).unwrap();
        let prop = build_propagator(&g, &p, 0.01).unwrap();
        let z = State4::zeros(&g);
        assert_eq!(pe_step(&z, &prop, &p).unwrap().l2_norm(), 0.0);
        let other = Params::new(0.2, 0.01, 0.005, 1.0).unwrap();
        assert!(pe_step(&z, &prop, &other).is_err());

        let rec = pe_run(&z, &p, 0.1, 0.01, &DiagConfig::default()).unwrap();
        assert!(rec.series.channel("energy").unwrap().iter().all(|&e| e == 0.0));
        assert_eq!(rec.final_state.l2_norm(), 0.0);
    }

    #[test]
    fn step_plan_hits_t_end() {
        assert_eq!(step_plan(1.0, 1e-3).unwrap().0, 1000);
        let (n, dt) = step_plan(1.0, 0.3).unwrap();
        assert_eq!(n, 4);
        assert!((dt * n as f64 - 1.0).abs() < 1e-15);
        assert!(step_plan(0.0, 0.1).is_err());
    }

    #[test]
    fn exponents_cover_shifts() {
        let d = DiagConfig::default();
        assert_eq!(d.exponents(), vec![-1.0, 0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}
