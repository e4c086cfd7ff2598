//! Seeded random initial data.
//!
//! Spectra are Gaussian shells `exp(-(|k| - k_peak)^2 / 2)` in integer
//! wavenumber units with unit-normal complex draws, restricted to the
//! dealiased band. Each random component comes from its own ChaCha stream,
//! so the QG part does not depend on the oscillating amplitude.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::RunConfig;
use crate::diagnostics::sobolev_norm;
use crate::error::{Error, Result};
use crate::field::{leray_project, ScalarField, State4};
use crate::grid::Grid;
use crate::structure::{biot_savart, project_osc};

const QG_STREAM: u64 = 0;
const OSC_STREAM: u64 = 1;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Random real field with shell spectrum around `k_peak`, weighted by
/// `|k|^-extra_decay`.
pub fn random_field<R: Rng>(grid: &Arc<Grid>, rng: &mut R, k_peak: f64, extra_decay: f64) -> ScalarField {
    let coeffs: Vec<Complex64> = (0..grid.len())
        .map(|idx| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if !grid.in_band(idx) || !grid.is_representable(idx) {
                return Complex64::default();
            }
            let k = grid.mode_frequency(idx);
            let mag = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
            let amp = (-(mag - k_peak).powi(2) / 2.0).exp() * mag.powf(-extra_decay);
            Complex64::new(re, im) * amp
        })
        .collect();
    ScalarField::from_coeffs(grid, coeffs).expect("length matches grid")
}

/// Four independent random components.
pub fn random_state<R: Rng>(grid: &Arc<Grid>, rng: &mut R, k_peak: f64, extra_decay: f64) -> State4 {
    State4::from_components(std::array::from_fn(|_| random_field(grid, rng, k_peak, extra_decay)))
        .expect("same grid")
}

/// The two constructed pieces of the initial data, before summation.
#[derive(Clone, Debug)]
pub struct WellPrepared {
    pub qg: State4,
    pub osc: State4,
}

/// Well-prepared data `U0 = U_QG + U_osc` with `||U_QG||_{H^1} =
/// init.qg_amplitude` and `||U_osc||_{H^-1} = init.osc_amplitude`, divergence
/// free, mean zero and inside the dealiased band.
pub fn make_well_prepared_data(cfg: &RunConfig) -> Result<State4> {
    let parts = well_prepared_parts(cfg)?;
    Ok(leray_project(&(&parts.qg + &parts.osc)))
}

pub fn well_prepared_parts(cfg: &RunConfig) -> Result<WellPrepared> {
    let grid = Grid::new(cfg.n, cfg.box_length)?;
    let f = cfg.params.froude;
    let init = &cfg.init;

    let w = random_field(&grid, &mut rng(init.seed, QG_STREAM), init.spectrum_peak_k, 0.0);
    let qg = biot_savart(&w, f);
    let h1 = sobolev_norm(&qg, 1.0);
    let qg = if init.qg_amplitude == 0.0 {
        State4::zeros(&grid)
    } else if h1 > 0.0 {
        qg.scaled(init.qg_amplitude / h1)
    } else {
        return Err(Error::DegenerateData);
    };

    let osc = if init.osc_amplitude == 0.0 {
        State4::zeros(&grid)
    } else {
        let r = random_state(
            &grid,
            &mut rng(init.seed, OSC_STREAM),
            init.spectrum_peak_k,
            init.osc_extra_smoothness,
        );
        let p = project_osc(&leray_project(&r), f);
        let m = sobolev_norm(&p, -1.0);
        if !(m > 1e-300) {
            return Err(Error::DegenerateData);
        }
        p.scaled(init.osc_amplitude / m)
    };
    Ok(WellPrepared { qg, osc })
}
