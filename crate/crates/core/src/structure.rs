//! Quasi-geostrophic structure: potential vorticity, the QG/oscillating
//! projectors, the Biot-Savart inversion, the rotation matrix `A`, the
//! diffusions `L` and `Gamma`, and the quadratic form `q`.

use num_complex::Complex64;

use crate::error::Result;
use crate::field::{derivative, dot_product, inverse_laplacian_f, Axis, FieldLike, ScalarField, State4};
use crate::params::Params;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `U = qg + osc`, together with the potential vorticity of `U`.
#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub qg: State4,
    pub osc: State4,
    pub omega: ScalarField,
}

/// Potential vorticity `d1 v2 - d2 v1 - F d3 theta`.
pub fn omega(u: &State4, froude: f64) -> ScalarField {
    let g = u.grid().clone();
    let [v1, v2, _, th] = u.components();
    let mut out = vec![Complex64::default(); g.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let d1 = g.deriv_symbol(k, 0);
        let d2 = g.deriv_symbol(k, 1);
        let d3 = g.deriv_symbol(k, 2);
        *o = I * (v2.coeffs()[k] * d1 - v1.coeffs()[k] * d2 - th.coeffs()[k] * (froude * d3));
    }
    ScalarField::from_raw(&g, out)
}

/// `(-d2, d1, 0, -F d3) Delta_F^{-1} omega`.
pub fn biot_savart(omega: &ScalarField, froude: f64) -> State4 {
    let phi = inverse_laplacian_f(omega, froude);
    State4::new(
        -&derivative(&phi, Axis::X2),
        derivative(&phi, Axis::X1),
        ScalarField::zeros(omega.grid()),
        derivative(&phi, Axis::X3).scaled(-froude),
    )
    .expect("components share the grid of omega")
}

pub fn project_qg(u: &State4, froude: f64) -> State4 {
    biot_savart(&omega(u, froude), froude)
}

pub fn project_osc(u: &State4, froude: f64) -> State4 {
    u - &project_qg(u, froude)
}

pub fn decompose(u: &State4, froude: f64) -> DecompositionResult {
    let om = omega(u, froude);
    let qg = biot_savart(&om, froude);
    let osc = u - &qg;
    DecompositionResult { qg, osc, omega: om }
}

/// Pointwise action of `A`: `(-v2, v1, theta / F, -v3 / F)`.
pub fn apply_a(u: &State4, froude: f64) -> State4 {
    let [v1, v2, v3, th] = u.components();
    State4::new(
        -v2,
        v1.clone(),
        th.scaled(1.0 / froude),
        v3.scaled(-1.0 / froude),
    )
    .expect("same grid")
}

/// `L U = (nu Delta v, nu' Delta theta)`.
pub fn apply_l(u: &State4, nu: f64, nu_prime: f64) -> State4 {
    let g = u.grid().clone();
    let [v1, v2, v3, th] = u.components();
    let lap = |f: &ScalarField, c: f64| f.apply_symbol(|k| -c * g.xi_sq(k));
    State4::new(lap(v1, nu), lap(v2, nu), lap(v3, nu), lap(th, nu_prime)).expect("same grid")
}

/// Symbol of `Gamma = Delta Delta_F^{-1} (nu d1^2 + nu d2^2 + nu' F^2 d3^2)`:
/// `-|xi|^2 (nu xi_h^2 + nu' F^2 xi3^2) / (xi_h^2 + F^2 xi3^2)`, zero at `xi = 0`.
pub fn gamma_symbol(xi: [f64; 3], params: &Params) -> f64 {
    let h = xi[0] * xi[0] + xi[1] * xi[1];
    let v = params.froude * params.froude * xi[2] * xi[2];
    let den = h + v;
    if den == 0.0 {
        return 0.0;
    }
    -(h + xi[2] * xi[2]) * (params.nu * h + params.nu_prime * v) / den
}

/// `Gamma` applied to every component.
pub fn apply_gamma<T: FieldLike>(f: &T, params: &Params) -> T {
    let g = f.grid().clone();
    f.apply_symbol(|k| gamma_symbol(g.xi(k), params))
}

/// The quadratic source of the potential-vorticity equation,
///
/// ```text
/// q = d3 v3_osc (d1 v2 - d2 v1) - d1 v3_osc d3 v2 + d2 v3_osc d3 v1
///     + F (d3 v_qg . grad theta_osc + d3 v_osc . grad theta)
/// ```
///
/// with every product formed pseudo-spectrally and dealiased. The factor
/// `F` on the temperature terms is 1 in the non-dispersive case.
pub fn q_epsilon(u_osc: &State4, u: &State4, u_qg: &State4, froude: f64) -> Result<ScalarField> {
    let d = |f: &ScalarField, a: Axis| derivative(f, a);
    let v3o = u_osc.v(2);
    let horizontal_curl = &d(u.v(1), Axis::X1) - &d(u.v(0), Axis::X2);
    let mut left = vec![
        d(v3o, Axis::X3),
        -&d(v3o, Axis::X1),
        d(v3o, Axis::X2),
    ];
    let mut right = vec![
        horizontal_curl,
        d(u.v(1), Axis::X3),
        d(u.v(0), Axis::X3),
    ];
    for (vel, th) in [(u_qg, u_osc.theta()), (u_osc, u.theta())] {
        for a in Axis::ALL {
            left.push(d(vel.v(a.index()), Axis::X3).scaled(froude));
            right.push(d(th, a));
        }
    }
    let l: Vec<&ScalarField> = left.iter().collect();
    let r: Vec<&ScalarField> = right.iter().collect();
    dot_product(&l, &r)
}
