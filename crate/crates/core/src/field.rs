//! Spectral fields on a [`Grid`] and the basic multiplier operators:
//! differentiation, anisotropic inverse Laplacian, 2/3 dealiasing, Leray
//! projection and pseudo-spectral advection.
//!
//! A [`ScalarField`] only ever holds representable modes: the zero mode and
//! every mode on a Nyquist plane are kept at exactly zero, and the
//! coefficients are conjugate-symmetric so the physical field is real.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
    X3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];

    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
            Axis::X3 => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        ScalarField {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    /// Builds a field from arbitrary coefficients, projecting onto the
    /// representable, conjugate-symmetric subspace.
    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        let sym = (0..grid.len())
            .map(|k| {
                if grid.is_representable(k) {
                    (coeffs[k] + coeffs[grid.conj_index(k)].conj()) * 0.5
                } else {
                    Complex64::default()
                }
            })
            .collect();
        Ok(ScalarField {
            grid: grid.clone(),
            coeffs: sym,
        })
    }

    /// Coefficients already known to be symmetric and representable.
    pub(crate) fn from_raw(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        ScalarField {
            grid: grid.clone(),
            coeffs,
        }
    }

    /// Samples `f` at the grid points and transforms.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 3]) -> f64) -> Self {
        let n = grid.n();
        let mut samples = Vec::with_capacity(grid.len());
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    samples.push(f([grid.position(i1), grid.position(i2), grid.position(i3)]));
                }
            }
        }
        to_spectral(grid, &samples).expect("sample count matches grid")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of the integer frequency `k`.
    pub fn coeff(&self, k: [i64; 3]) -> Complex64 {
        self.coeffs[self.grid.index_of(k)]
    }

    pub fn to_physical(&self) -> Vec<f64> {
        from_spectral(self)
    }

    /// Pointwise map over (mode index, coefficient).
    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| f(k, c))
                .collect(),
        }
    }

    /// Real multiplier applied mode by mode.
    pub fn apply_symbol(&self, symbol: impl Fn(usize) -> f64) -> Self {
        self.map_modes(|k, c| if c == Complex64::default() { c } else { c * symbol(k) })
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_modes(|_, c| c * a)
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    /// `sum_k Re(conj(a_k) b_k)`, the volume-averaged L2 pairing.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, a: f64) -> ScalarField {
        self.scaled(a)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scaled(-1.0)
    }
}

/// The four-component field `U = (v1, v2, v3, theta)`.
#[derive(Clone, Debug)]
pub struct State4 {
    comps: [ScalarField; 4],
}

impl State4 {
    pub fn new(
        v1: ScalarField,
        v2: ScalarField,
        v3: ScalarField,
        theta: ScalarField,
    ) -> Result<Self> {
        let g = v1.grid().clone();
        if [&v2, &v3, &theta].iter().any(|f| !f.grid().same_as(&g)) {
            return Err(Error::GridMismatch);
        }
        Ok(State4 {
            comps: [v1, v2, v3, theta],
        })
    }

    pub fn from_components(comps: [ScalarField; 4]) -> Result<Self> {
        let [a, b, c, d] = comps;
        State4::new(a, b, c, d)
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let z = ScalarField::zeros(grid);
        State4 {
            comps: [z.clone(), z.clone(), z.clone(), z],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.comps[0].grid()
    }

    pub fn components(&self) -> &[ScalarField; 4] {
        &self.comps
    }

    pub fn into_components(self) -> [ScalarField; 4] {
        self.comps
    }

    /// Velocity component, `j` in `0..3`.
    pub fn v(&self, j: usize) -> &ScalarField {
        assert!(j < 3, "velocity component index {j} out of range");
        &self.comps[j]
    }

    pub fn theta(&self) -> &ScalarField {
        &self.comps[3]
    }

    pub fn velocity(&self) -> &[ScalarField; 3] {
        self.comps[..3].try_into().expect("three velocity components")
    }

    /// `max_k |xi . v_hat(k)| / (|xi| max |v_hat|)`.
    pub fn max_divergence(&self) -> f64 {
        let g = self.grid();
        let scale = (0..3)
            .map(|j| self.comps[j].max_abs_coeff())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for k in 0..g.len() {
            if !g.is_representable(k) {
                continue;
            }
            let xi = g.xi(k);
            let d = (0..3).fold(Complex64::default(), |acc, j| acc + self.comps[j].coeffs[k] * xi[j]);
            worst = worst.max(d.norm() / g.xi_sq(k).sqrt());
        }
        worst / scale
    }

    pub fn inner(&self, other: &State4) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn axpy(&mut self, a: f64, other: &State4) {
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            x.axpy(a, y);
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_components(|c| c.scaled(a))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }
}

impl Add for &State4 {
    type Output = State4;
    fn add(self, rhs: &State4) -> State4 {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &State4 {
    type Output = State4;
    fn sub(self, rhs: &State4) -> State4 {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &State4 {
    type Output = State4;
    fn mul(self, a: f64) -> State4 {
        self.scaled(a)
    }
}

/// Shared surface of scalar and four-component fields, so that norms and
/// multipliers are written once.
pub trait FieldLike: Clone {
    fn components(&self) -> &[ScalarField];

    fn map_components(&self, f: impl FnMut(&ScalarField) -> ScalarField) -> Self;

    fn grid(&self) -> &Arc<Grid> {
        self.components()[0].grid()
    }

    /// Same real multiplier on every component.
    fn apply_symbol(&self, symbol: impl Fn(usize) -> f64) -> Self {
        self.map_components(|c| c.apply_symbol(&symbol))
    }

    /// `sum_components sum_k w_k |c_k|^2`
    fn weighted_sq_sum(&self, weights: &[f64]) -> f64 {
        self.components()
            .iter()
            .map(|c| {
                c.coeffs
                    .iter()
                    .zip(weights)
                    .map(|(z, w)| w * z.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// `sum_components sum_k w_k Re(conj(a_k) b_k)`
    fn weighted_inner(&self, other: &Self, weights: &[f64]) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| {
                a.coeffs
                    .iter()
                    .zip(&b.coeffs)
                    .zip(weights)
                    .map(|((x, y), w)| w * (x.re * y.re + x.im * y.im))
                    .sum::<f64>()
            })
            .sum()
    }
}

impl FieldLike for ScalarField {
    fn components(&self) -> &[ScalarField] {
        std::slice::from_ref(self)
    }

    fn map_components(&self, mut f: impl FnMut(&ScalarField) -> ScalarField) -> Self {
        f(self)
    }
}

impl FieldLike for State4 {
    fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    fn map_components(&self, mut f: impl FnMut(&ScalarField) -> ScalarField) -> Self {
        State4 {
            comps: [
                f(&self.comps[0]),
                f(&self.comps[1]),
                f(&self.comps[2]),
                f(&self.comps[3]),
            ],
        }
    }
}

/// Physical samples to spectral coefficients. The mean and the Nyquist
/// planes are dropped.
pub fn to_spectral(grid: &Arc<Grid>, samples: &[f64]) -> Result<ScalarField> {
    let zero = vec![0.0; samples.len()];
    let (a, _) = grid.forward_pair(samples, &zero)?;
    Ok(ScalarField::from_raw(grid, project_representable(grid, a)))
}

pub fn from_spectral(f: &ScalarField) -> Vec<f64> {
    let zero = vec![Complex64::default(); f.coeffs.len()];
    f.grid
        .inverse_pair(&f.coeffs, &zero)
        .expect("field length matches its grid")
        .0
}

/// Physical samples of several fields, two per complex transform.
pub fn to_physical_many(fields: &[&ScalarField]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let g = pair[0].grid();
        if pair.len() == 2 {
            let (a, b) = g
                .inverse_pair(&pair[0].coeffs, &pair[1].coeffs)
                .expect("field length matches its grid");
            out.push(a);
            out.push(b);
        } else {
            out.push(from_spectral(pair[0]));
        }
    }
    out
}

/// Spectral coefficients of several physical arrays, two per complex transform.
pub fn to_spectral_many(grid: &Arc<Grid>, samples: &[Vec<f64>]) -> Result<Vec<ScalarField>> {
    let mut out = Vec::with_capacity(samples.len());
    for pair in samples.chunks(2) {
        let zero;
        let second = if pair.len() == 2 {
            &pair[1]
        } else {
            zero = vec![0.0; pair[0].len()];
            &zero
        };
        let (a, b) = grid.forward_pair(&pair[0], second)?;
        out.push(ScalarField::from_raw(grid, project_representable(grid, a)));
        if pair.len() == 2 {
            out.push(ScalarField::from_raw(grid, project_representable(grid, b)));
        }
    }
    Ok(out)
}

fn project_representable(grid: &Grid, mut c: Vec<Complex64>) -> Vec<Complex64> {
    for (k, z) in c.iter_mut().enumerate() {
        if !grid.is_representable(k) {
            *z = Complex64::default();
        }
    }
    c
}

/// Multiplies each coefficient by `i xi_axis` (zero on the Nyquist plane).
pub fn derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    let g = f.grid.clone();
    let a = axis.index();
    f.map_modes(|k, c| I * c * g.deriv_symbol(k, a))
}

/// Symbol `-(xi1^2 + xi2^2 + F^2 xi3^2)` of the anisotropic Laplacian.
pub fn laplacian_f_symbol(xi: [f64; 3], froude: f64) -> f64 {
    -(xi[0] * xi[0] + xi[1] * xi[1] + froude * froude * xi[2] * xi[2])
}

pub fn laplacian<T: FieldLike>(f: &T) -> T {
    let g = f.grid().clone();
    f.apply_symbol(|k| -g.xi_sq(k))
}

/// `Delta_F^{-1}`; the zero mode stays zero. `froude = 1` gives `Delta^{-1}`.
pub fn inverse_laplacian_f(f: &ScalarField, froude: f64) -> ScalarField {
    let g = f.grid.clone();
    f.apply_symbol(|k| {
        let d = laplacian_f_symbol(g.xi(k), froude);
        if d == 0.0 {
            0.0
        } else {
            1.0 / d
        }
    })
}

/// 2/3 rule: zero every mode with some `|k_j| > n/3`.
pub fn dealias<T: FieldLike>(f: &T) -> T {
    let g = f.grid().clone();
    f.map_components(|c| c.map_modes(|k, z| if g.in_band(k) { z } else { Complex64::default() }))
}

/// `v_hat -> v_hat - xi (xi . v_hat) / |xi|^2` on the velocity, identity on theta.
pub fn leray_project(u: &State4) -> State4 {
    let g = u.grid().clone();
    let [v1, v2, v3, th] = u.components();
    let len = g.len();
    let mut out = [
        vec![Complex64::default(); len],
        vec![Complex64::default(); len],
        vec![Complex64::default(); len],
    ];
    for k in 0..len {
        let q = g.xi_sq(k);
        if q == 0.0 {
            continue;
        }
        let xi = g.xi(k);
        let v = [v1.coeffs[k], v2.coeffs[k], v3.coeffs[k]];
        let d = (v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]) / q;
        for j in 0..3 {
            out[j][k] = v[j] - d * xi[j];
        }
    }
    let [a, b, c] = out;
    State4 {
        comps: [
            ScalarField::from_raw(&g, a),
            ScalarField::from_raw(&g, b),
            ScalarField::from_raw(&g, c),
            th.clone(),
        ],
    }
}

/// Dealiased pseudo-spectral `v . grad U` for all four components.
pub fn advect(v: &[ScalarField; 3], u: &State4) -> Result<State4> {
    let g = u.grid().clone();
    if v.iter().any(|c| !c.grid().same_as(&g)) {
        return Err(Error::GridMismatch);
    }
    let grads: Vec<ScalarField> = u
        .components()
        .iter()
        .flat_map(|c| Axis::ALL.map(|a| derivative(c, a)))
        .collect();
    let mut refs: Vec<&ScalarField> = v.iter().collect();
    refs.extend(grads.iter());
    let phys = to_physical_many(&refs);
    let (vel, grad) = phys.split_at(3);
    let products: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            let gi = &grad[3 * i..3 * i + 3];
            (0..g.len())
                .map(|p| vel[0][p] * gi[0][p] + vel[1][p] * gi[1][p] + vel[2][p] * gi[2][p])
                .collect()
        })
        .collect();
    let spec = to_spectral_many(&g, &products)?;
    let [a, b, c, d]: [ScalarField; 4] = spec.try_into().expect("four components");
    Ok(dealias(&State4 {
        comps: [a, b, c, d],
    }))
}

/// Dealiased pseudo-spectral product `sum_j a_j b_j` of scalar fields.
pub fn dot_product(a: &[&ScalarField], b: &[&ScalarField]) -> Result<ScalarField> {
    assert_eq!(a.len(), b.len());
    let g = a[0].grid().clone();
    if a.iter().chain(b).any(|c| !c.grid().same_as(&g)) {
        return Err(Error::GridMismatch);
    }
    let mut refs: Vec<&ScalarField> = a.to_vec();
    refs.extend_from_slice(b);
    let phys = to_physical_many(&refs);
    let (pa, pb) = phys.split_at(a.len());
    let prod: Vec<f64> = (0..g.len())
        .map(|p| pa.iter().zip(pb).map(|(x, y)| x[p] * y[p]).sum())
        .collect();
    let f = to_spectral(&g, &prod)?;
    Ok(dealias(&f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Arc<Grid> {
        Grid::new(16, 3.0).unwrap()
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_maps_to_zero() {
        let g = grid();
        let f = to_spectral(&g, &vec![1.0; g.len()]).unwrap();
        assert_eq!(f.max_abs_coeff(), 0.0);
    }

    #[test]
    fn cosine_coefficients() {
        let g = grid();
        let k = 2.0 * PI / g.box_length();
        let f = ScalarField::from_fn(&g, |x| (k * x[0]).cos());
        for idx in 0..g.len() {
            let m = g.mode_frequency(idx);
            let c = f.coeffs()[idx];
            if m == [1, 0, 0] || m == [-1, 0, 0] {
                assert!((c - Complex64::new(0.5, 0.0)).norm() < 1e-14);
            } else {
                assert!(c.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let g = grid();
        assert!(matches!(
            to_spectral(&g, &[0.0; 7]),
            Err(Error::ShapeMismatch { got: 7, .. })
        ));
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid();
        let k = 2.0 * PI / g.box_length();
        let f = ScalarField::from_fn(&g, |x| (k * x[0]).sin());
        let d = derivative(&f, Axis::X1).to_physical();
        let expected = ScalarField::from_fn(&g, |x| k * (k * x[0]).cos()).to_physical();
        assert!(max_err(&d, &expected) < 1e-12);
        assert_eq!(derivative(&f, Axis::X2).max_abs_coeff(), 0.0);
    }

    #[test]
    fn inverse_laplacian_examples() {
        let g = grid();
        let k = 2.0 * PI / g.box_length();
        let f = ScalarField::from_fn(&g, |x| (k * x[0]).sin());
        for froude in [1.0, 0.5, 0.2] {
            let got = inverse_laplacian_f(&f, froude);
            let want = f.scaled(-1.0 / (k * k));
            assert!((&got - &want).l2_norm() < 1e-14);
        }
        let f3 = ScalarField::from_fn(&g, |x| (k * x[2]).sin());
        let got = inverse_laplacian_f(&f3, 0.5);
        let want = f3.scaled(-4.0 / (k * k));
        assert!((&got - &want).l2_norm() < 1e-13);
    }

    #[test]
    fn dealias_cutoff() {
        let g = grid();
        let k = 2.0 * PI / g.box_length();
        let low = ScalarField::from_fn(&g, |x| (4.0 * k * x[0]).cos() + (3.0 * k * x[2]).sin());
        assert!((&dealias(&low) - &low).l2_norm() < 1e-15);
        let high = ScalarField::from_fn(&g, |x| (7.0 * k * x[0]).cos());
        assert!(high.l2_norm() > 0.1);
        assert!(dealias(&high).l2_norm() < 1e-15);
    }

    #[test]
    fn leray_examples() {
        let g = grid();
        let k = 2.0 * PI / g.box_length();
        let s = ScalarField::from_fn(&g, |x| (k * x[0]).sin());
        let z = ScalarField::zeros(&g);
        let u = State4::new(s.clone(), z.clone(), z.clone(), z.clone()).unwrap();
        assert!(leray_project(&u).l2_norm() < 1e-15);

        let phi = ScalarField::from_fn(&g, |x| (k * x[0]).sin() * (2.0 * k * x[1]).cos() + (k * x[2]).cos());
        let grad = State4::new(
            derivative(&phi, Axis::X1),
            derivative(&phi, Axis::X2),
            derivative(&phi, Axis::X3),
            z.clone(),
        )
        .unwrap();
        assert!(leray_project(&grad).l2_norm() < 1e-14 * grad.l2_norm());

        let c = ScalarField::from_fn(&g, |x| (k * x[0]).cos());
        let df = State4::new(z.clone(), c.clone(), c, s).unwrap();
        assert!((&leray_project(&df) - &df).l2_norm() < 1e-15);
    }

    #[test]
    fn advect_single_product() {
        let g = grid();
        let k = 2.0 * PI / g.box_length();
        let z = ScalarField::zeros(&g);
        let v3 = ScalarField::from_fn(&g, |x| (k * x[0]).cos());
        let th = ScalarField::from_fn(&g, |x| (k * x[2]).sin());
        let u = State4::new(z.clone(), z.clone(), z.clone(), th).unwrap();
        let v = [z.clone(), z.clone(), v3];
        let a = advect(&v, &u).unwrap();
        let want = ScalarField::from_fn(&g, |x| k * (k * x[0]).cos() * (k * x[2]).cos());
        assert!(max_err(&a.theta().to_physical(), &want.to_physical()) < 1e-12);
        for j in 0..3 {
            assert!(a.v(j).l2_norm() < 1e-15);
        }
        let zero_v = [z.clone(), z.clone(), z];
        assert_eq!(advect(&zero_v, &u).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn advect_rejects_foreign_grid() {
        let g = grid();
        let h = Grid::new(8, 3.0).unwrap();
        let u = State4::zeros(&g);
        let zh = ScalarField::zeros(&h);
        assert!(matches!(
            advect(&[zh.clone(), zh.clone(), zh], &u),
            Err(Error::GridMismatch)
        ));
    }
}
