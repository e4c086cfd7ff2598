#![allow(dead_code)]

use std::sync::Arc;

use qglab::config::RunConfig;
use qglab::init::{random_state, rng};
use qglab::{Grid, Params, State4};

pub type M4 = [[f64; 4]; 4];

/// Symbol of the linear PE operator, assembled directly from its pieces:
/// `-diag(nu, nu, nu, nu') |xi|^2 - (1/eps) P A`.
pub fn oracle_symbol(xi: [f64; 3], p: &Params) -> M4 {
    let q: f64 = xi.iter().map(|x| x * x).sum();
    let mut proj = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let delta = if i == j { 1.0 } else { 0.0 };
            proj[i][j] = if i < 3 && j < 3 { delta - xi[i] * xi[j] / q } else { delta };
        }
    }
    let mut a = [[0.0; 4]; 4];
    a[0][1] = -1.0;
    a[1][0] = 1.0;
    a[2][3] = 1.0 / p.froude;
    a[3][2] = -1.0 / p.froude;
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut pa = 0.0;
            for k in 0..4 {
                pa += proj[i][k] * a[k][j];
            }
            m[i][j] = -pa / p.epsilon;
        }
    }
    for i in 0..3 {
        m[i][i] -= p.nu * q;
    }
    m[3][3] -= p.nu_prime * q;
    m
}

fn mat_vec(m: &M4, w: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] += m[i][j] * w[j];
        }
    }
    out
}

/// Classical RK4 on `dw/dt = M w` with substeps of size about `2e-3 / ||M||`.
pub fn rk4_flow(m: &M4, w0: [f64; 4], t: f64) -> [f64; 4] {
    let norm = m
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let steps = ((t * norm / 2e-3).ceil() as usize).max(16);
    let h = t / steps as f64;
    let mut w = w0;
    for _ in 0..steps {
        let add = |a: &[f64; 4], b: &[f64; 4], s: f64| std::array::from_fn(|i| a[i] + s * b[i]);
        let k1 = mat_vec(m, &w);
        let k2 = mat_vec(m, &add(&w, &k1, h / 2.0));
        let k3 = mat_vec(m, &add(&w, &k2, h / 2.0));
        let k4 = mat_vec(m, &add(&w, &k3, h));
        for i in 0..4 {
            w[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    w
}

/// Columns of `exp(t M)` by the RK4 oracle.
pub fn rk4_exp(m: &M4, t: f64) -> M4 {
    let mut e = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut unit = [0.0; 4];
        unit[j] = 1.0;
        let col = rk4_flow(m, unit, t);
        for i in 0..4 {
            e[i][j] = col[i];
        }
    }
    e
}

pub fn max_abs(m: &M4) -> f64 {
    m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn max_diff(a: &M4, b: &M4) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d
}

pub fn grid(n: usize) -> Arc<Grid> {
    Grid::new(n, 2.0 * std::f64::consts::PI).unwrap()
}

/// Random divergence-free, mean-zero, dealiased state.
pub fn random_divfree(g: &Arc<Grid>, seed: u64, k_peak: f64, amplitude: f64) -> State4 {
    let u = qglab::field::leray_project(&random_state(g, &mut rng(seed, 3), k_peak, 0.0));
    let n = u.l2_norm();
    u.scaled(amplitude / n)
}

/// The default scenario with a smaller grid and horizon for quick tests.
pub fn small_config(n: usize, t_end: f64) -> RunConfig {
    let mut c = RunConfig::default();
    c.n = n;
    c.t_end = t_end;
    c
}

/// Observed order from three solutions at `h`, `h/2`, `h/4`.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}
