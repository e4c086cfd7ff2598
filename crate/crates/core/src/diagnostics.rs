//! Norms, frequency truncation, residuals and the evaluators for the
//! global-existence and bootstrap conditions.
//!
//! All Sobolev norms are homogeneous and use the squared modulus of the
//! average-normalized coefficients:
//!
//! ```text
//! ||f||_{H^s}^2 = sum_{k != 0} |xi_k|^{2s} |f_hat_k|^2
//! ```
//!
//! so `s = 0` is the volume-averaged L2 norm.

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{derivative, dot_product, laplacian, Axis, FieldLike, ScalarField, State4};
use crate::params::Params;
use crate::pe::PeRunRecord;
use crate::structure::{apply_gamma, decompose, omega, q_epsilon};

/// Time-stamped diagnostic channels, all aligned with `times`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormSeries {
    times: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

/// Channel name for the `H^s` norm of a named field, e.g. `Hs(U_osc;0.5)`.
pub fn hs_channel(field: &str, s: f64) -> String {
    format!("Hs({field};{s})")
}

impl NormSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty series with a fixed set of channels.
    pub fn with_channels<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let columns = vec![Vec::new(); names.len()];
        NormSeries {
            times: Vec::new(),
            names,
            columns,
        }
    }

    /// Appends one record. The first record of an empty series fixes the
    /// channel set; later records must supply exactly the same names.
    pub fn push(&mut self, t: f64, row: &[(String, f64)]) {
        if self.times.is_empty() && self.names.is_empty() {
            self.names = row.iter().map(|(n, _)| n.clone()).collect();
            self.columns = vec![Vec::new(); self.names.len()];
        }
        assert_eq!(row.len(), self.names.len(), "channel set changed mid-series");
        if let Some(&last) = self.times.last() {
            assert!(t > last, "times must be strictly increasing");
        }
        for (name, value) in row {
            let j = self
                .names
                .iter()
                .position(|n| n == name)
                .unwrap_or_else(|| panic!("unknown channel {name}"));
            self.columns[j].push(*value);
        }
        self.times.push(t);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.names
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.columns[j].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.channel(name)
            .ok_or_else(|| Error::MissingChannel(name.to_string()))
    }

    pub fn all_finite(&self) -> bool {
        self.times.iter().all(|t| t.is_finite())
            && self.columns.iter().flatten().all(|v| v.is_finite())
    }

    /// CSV text: header `t,<channels...>`, values printed like C `%.17g`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format_g17(*t));
            for c in &self.columns {
                out.push(',');
                out.push_str(&format_g17(c[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty CSV".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("t") {
            return Err(Error::Config("CSV must start with a `t` column".into()));
        }
        let names: Vec<String> = cols.map(str::to_string).collect();
        let mut series = NormSeries::with_channels(names.clone());
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("CSV line {}: {e}", lineno + 2)))?;
            if vals.len() != names.len() + 1 {
                return Err(Error::Config(format!(
                    "CSV line {}: expected {} fields",
                    lineno + 2,
                    names.len() + 1
                )));
            }
            if series.times.last().is_some_and(|&last| !(vals[0] > last)) {
                return Err(Error::Config(format!(
                    "CSV line {}: times must be strictly increasing",
                    lineno + 2
                )));
            }
            let row: Vec<(String, f64)> = names.iter().cloned().zip(vals[1..].iter().copied()).collect();
            series.push(vals[0], &row);
        }
        Ok(series)
    }
}

/// C-style `%.17g`: 17 significant digits, trailing zeros stripped, fixed
/// notation for decimal exponents in `[-4, 17)`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        strip_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = strip_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn strip_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(tt, yy)| 0.5 * (tt[1] - tt[0]) * (yy[0] + yy[1]))
        .sum()
}

/// Homogeneous Sobolev norm; components of a [`State4`] are summed.
/// Exponents in `[-2, 3]` are the supported range.
pub fn sobolev_norm<T: FieldLike>(f: &T, s: f64) -> f64 {
    let w = f.grid().sobolev_weights(s);
    f.weighted_sq_sum(&w).sqrt()
}

pub fn sobolev_inner<T: FieldLike>(a: &T, b: &T, s: f64) -> f64 {
    let w = a.grid().sobolev_weights(s);
    a.weighted_inner(b, &w)
}

/// `||f||_{E^s_T}` from the recorded channels `Hs(field;s)` and
/// `Hs(field;s+1)` on `[0, t_end]`.
pub fn es_norm(
    series: &NormSeries,
    field: &str,
    s: f64,
    nu: f64,
    nu_prime: f64,
    t_end: f64,
) -> Result<f64> {
    let hs = series.require(&hs_channel(field, s))?;
    let hs1 = series.require(&hs_channel(field, s + 1.0))?;
    let cut = series
        .times()
        .iter()
        .take_while(|&&t| t <= t_end * (1.0 + 1e-12) + 1e-300)
        .count();
    let times = &series.times()[..cut];
    let sup = hs[..cut].iter().map(|x| x * x).fold(0.0, f64::max);
    let sq: Vec<f64> = hs1[..cut].iter().map(|x| x * x).collect();
    Ok((sup + nu.min(nu_prime) * trapezoid(times, &sq)).sqrt())
}

/// Radial cutoff: 1 on `[0, 3/4]`, 0 on `[4/3, inf)`, quintic smoothstep
/// in between. Nonincreasing and C^2.
pub fn chi(r: f64) -> f64 {
    const INNER: f64 = 0.75;
    const OUTER: f64 = 4.0 / 3.0;
    if r <= INNER {
        1.0
    } else if r >= OUTER {
        0.0
    } else {
        let u = (r - INNER) / (OUTER - INNER);
        1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

/// Smooth low-pass `S_m`: multiplies mode `xi` by `chi(|xi| / 2^m)`.
pub fn truncate_high<T: FieldLike>(f: &T, m: u32) -> T {
    let g = f.grid().clone();
    let scale = 2f64.powi(m as i32);
    f.apply_symbol(|k| chi(g.xi_sq(k).sqrt() / scale))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `||(Id - S_m) f||_{H^s} <= ((3/4) 2^m)^-alpha ||f||_{H^{s+alpha}}`, for
/// `alpha >= 0`.
pub fn tail_bound_check<T: FieldLike>(f: &T, m: u32, s: f64, alpha: f64) -> TailCheck {
    let g = f.grid().clone();
    let scale = 2f64.powi(m as i32);
    let tail = f.apply_symbol(|k| 1.0 - chi(g.xi_sq(k).sqrt() / scale));
    let lhs = sobolev_norm(&tail, s);
    let rhs = (0.75 * scale).powf(-alpha) * sobolev_norm(f, s + alpha);
    TailCheck {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-10),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapReport {
    /// `int_0^T ||U_osc||_{H^{3/2}}^2`
    pub integral: f64,
    /// `ln 2 / C * min(nu, nu')`
    pub threshold: f64,
    pub ratio: f64,
}

pub fn bootstrap_monitor(
    series: &NormSeries,
    nu: f64,
    nu_prime: f64,
    c_const: f64,
) -> Result<BootstrapReport> {
    let h = series.require(&hs_channel("U_osc", 1.5))?;
    let sq: Vec<f64> = h.iter().map(|x| x * x).collect();
    let integral = trapezoid(series.times(), &sq);
    let threshold = std::f64::consts::LN_2 / c_const * nu.min(nu_prime);
    Ok(BootstrapReport {
        integral,
        threshold,
        ratio: integral / threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallnessReport {
    /// Bound on `||P U0||_{H^-1}`.
    pub threshold_osc: f64,
    /// Bound on `epsilon`.
    pub threshold_eps: f64,
    pub measured_osc: f64,
    pub measured_eps: f64,
    pub margin_osc: f64,
    pub margin_eps: f64,
    pub big_c: f64,
}

/// Evaluates both smallness conditions of the global existence result
/// literally, for a user-supplied constant `big_c`:
///
/// ```text
/// ||U0_osc||_{H^-1} <= m^4 / (C^2 |U0|_1^3) exp(-C |U0|_0 |U0|_1 / m^2)
/// eps               <= m^4 / (C^2 |U0|_1^4 (|U0|_{1/2} + M)) exp(-C |U0|_0 |U0|_1 / m^2)
/// ```
///
/// with `m = min(nu, nu')`, `M = max(nu, nu')`.
pub fn smallness_condition(u0: &State4, params: &Params, big_c: f64) -> SmallnessReport {
    let l2 = sobolev_norm(u0, 0.0);
    let h_half = sobolev_norm(u0, 0.5);
    let h1 = sobolev_norm(u0, 1.0);
    let m = params.min_viscosity();
    let big_m = params.max_viscosity();
    let damp = (-big_c * l2 * h1 / (m * m)).exp();
    let m4 = m.powi(4);
    let threshold_osc = m4 / (big_c * big_c * h1.powi(3)) * damp;
    let threshold_eps = m4 / (big_c * big_c * h1.powi(4) * (h_half + big_m)) * damp;
    let measured_osc = sobolev_norm(&crate::structure::project_osc(u0, params.froude), -1.0);
    SmallnessReport {
        threshold_osc,
        threshold_eps,
        measured_osc,
        measured_eps: params.epsilon,
        margin_osc: threshold_osc - measured_osc,
        margin_eps: threshold_eps - params.epsilon,
        big_c,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyCheck {
    pub pass: bool,
    /// Largest `(E(t) + 2 m int |grad|^2) / E(0) - 1`.
    pub worst_excess: f64,
    pub strictly_decreasing: bool,
}

/// Discrete Leray inequality on the channels `energy` (squared L2 norm) and
/// `grad_sq` (squared L2 norm of the gradient):
/// `E(t) + 2 m int_0^t G <= E(0) (1 + 1e-6)`, trapezoid in time.
pub fn energy_check(series: &NormSeries, min_viscosity: f64) -> Result<EnergyCheck> {
    let e = series.require("energy")?;
    let g = series.require("grad_sq")?;
    let t = series.times();
    if e.is_empty() {
        return Ok(EnergyCheck {
            pass: true,
            worst_excess: 0.0,
            strictly_decreasing: false,
        });
    }
    let e0 = e[0];
    let mut integral = 0.0;
    let mut worst = f64::NEG_INFINITY;
    let mut pass = true;
    for i in 0..e.len() {
        if i > 0 {
            integral += 0.5 * (t[i] - t[i - 1]) * (g[i] + g[i - 1]);
        }
        let lhs = e[i] + 2.0 * min_viscosity * integral;
        if lhs > e0 * (1.0 + 1e-6) {
            pass = false;
        }
        if e0 > 0.0 {
            worst = worst.max(lhs / e0 - 1.0);
        }
    }
    if e0 == 0.0 {
        worst = 0.0;
    }
    let strictly_decreasing = e.len() > 1 && e.windows(2).all(|w| w[1] < w[0]);
    Ok(EnergyCheck {
        pass,
        worst_excess: worst,
        strictly_decreasing,
    })
}

/// Relative residual of the potential-vorticity equation
///
/// ```text
/// dt Omega + v . grad Omega - Gamma Omega = F (nu - nu') Delta d3 theta_osc + q
/// ```
///
/// along a recorded run, with `dt Omega` from centered differences of the
/// snapshots. Each value is `||lhs - rhs|| / max_i ||term_i||` (L2), and
/// `0` when every term vanishes. Returned as channel `vorticity_residual`
/// at the interior snapshot times.
pub fn vorticity_residual(run: &PeRunRecord, params: &Params) -> Result<NormSeries> {
    let snaps = &run.snapshots;
    let times = &run.snapshot_times;
    if snaps.len() < 3 {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            got: snaps.len(),
        });
    }
    let h = times[1] - times[0];
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
    if !uniform || h <= 0.0 {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            got: 0,
        });
    }
    let f = params.froude;
    let omegas: Vec<ScalarField> = snaps.iter().map(|u| omega(u, f)).collect();
    let mut out = NormSeries::with_channels(["vorticity_residual"]);
    for j in 1..snaps.len() - 1 {
        let u = &snaps[j];
        let parts = decompose(u, f);
        let om = &parts.omega;
        let dt_om = (&omegas[j + 1] - &omegas[j - 1]).scaled(0.5 / h);
        let grad: Vec<ScalarField> = Axis::ALL.iter().map(|&a| derivative(om, a)).collect();
        let transport = dot_product(
            &[u.v(0), u.v(1), u.v(2)],
            &[&grad[0], &grad[1], &grad[2]],
        )?;
        let gamma = apply_gamma(om, params);
        let forcing = laplacian(&derivative(parts.osc.theta(), Axis::X3))
            .scaled(f * (params.nu - params.nu_prime));
        let q = q_epsilon(&parts.osc, u, &parts.qg, f)?;

        let mut res = dt_om.clone();
        res.axpy(1.0, &transport);
        res.axpy(-1.0, &gamma);
        res.axpy(-1.0, &forcing);
        res.axpy(-1.0, &q);
        let scale = [&dt_om, &transport, &gamma, &forcing, &q]
            .iter()
            .map(|t| t.l2_norm())
            .fold(0.0, f64::max);
        let r = if scale == 0.0 { 0.0 } else { res.l2_norm() / scale };
        out.push(times[j], &[("vorticity_residual".to_string(), r)]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn g17_matches_c_printf() {
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(1e17), "1e+17");
        assert_eq!(format_g17(0.0001), "0.0001");
        assert_eq!(format_g17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(format_g17(0.0), "0");
    }

    #[test]
    fn sobolev_of_cosine() {
        let g = Grid::new(16, 3.0).unwrap();
        let k = 2.0 * PI / 3.0;
        let f = ScalarField::from_fn(&g, |x| (k * x[0]).cos());
        for s in [-2.0, -1.0, 0.0, 0.5, 1.0, 1.5, 3.0] {
            let want = k.powf(s) / 2f64.sqrt();
            assert!((sobolev_norm(&f, s) - want).abs() < 1e-13 * want, "{s}");
        }
        assert_eq!(sobolev_norm(&ScalarField::zeros(&g), 0.7), 0.0);
        let phys = f.to_physical();
        let l2 = (phys.iter().map(|x| x * x).sum::<f64>() / phys.len() as f64).sqrt();
        assert!((sobolev_norm(&f, 0.0) - l2).abs() < 1e-14);
    }

    #[test]
    fn es_norm_constant_channel() {
        let mut s = NormSeries::new();
        let (c, c1, nu, nup, t_end) = (0.3, 0.8, 0.02, 0.005, 2.0);
        for i in 0..=20 {
            s.push(
                i as f64 * 0.1,
                &[(hs_channel("f", 0.0), c), (hs_channel("f", 1.0), c1)],
            );
        }
        let got = es_norm(&s, "f", 0.0, nu, nup, t_end).unwrap();
        let want = (c * c + 0.005 * t_end * c1 * c1).sqrt();
        assert!((got - want).abs() < 1e-14);
        assert!(matches!(
            es_norm(&s, "g", 0.0, nu, nup, t_end),
            Err(Error::MissingChannel(_))
        ));
        // monotone in T
        let a = es_norm(&s, "f", 0.0, nu, nup, 1.0).unwrap();
        assert!(a <= got);
    }

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(0.75), 1.0);
        assert_eq!(chi(4.0 / 3.0), 0.0);
        assert_eq!(chi(2.0), 0.0);
        let u: f64 = (1.0 - 0.75) / (4.0 / 3.0 - 0.75);
        let want = 1.0 - (6.0 * u.powi(5) - 15.0 * u.powi(4) + 10.0 * u.powi(3));
        assert!((chi(1.0) - want).abs() < 1e-15);
        assert!(chi(1.0) > 0.0 && chi(1.0) < 1.0);
        let mut prev = 1.0;
        for i in 0..=200 {
            let c = chi(i as f64 / 100.0);
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn trapezoid_constant() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let y = vec![0.49; 11];
        assert!((trapezoid(&t, &y) - 0.49 * 3.0).abs() < 1e-14);
    }

    #[test]
    fn bootstrap_constant() {
        let mut s = NormSeries::new();
        for i in 0..=10 {
            s.push(i as f64 * 0.1, &[(hs_channel("U_osc", 1.5), 0.2)]);
        }
        let r = bootstrap_monitor(&s, 0.01, 0.005, 1.0).unwrap();
        assert!((r.integral - 0.04).abs() < 1e-15);
        assert!((r.threshold - std::f64::consts::LN_2 * 0.005).abs() < 1e-18);
        let mut z = NormSeries::new();
        z.push(0.0, &[(hs_channel("U_osc", 1.5), 0.0)]);
        z.push(1.0, &[(hs_channel("U_osc", 1.5), 0.0)]);
        assert_eq!(bootstrap_monitor(&z, 0.01, 0.005, 1.0).unwrap().ratio, 0.0);
        assert!(bootstrap_monitor(&NormSeries::new(), 0.01, 0.01, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut s = NormSeries::new();
        s.push(0.0, &[("a".into(), 1.0 / 3.0), ("b".into(), -2e-300)]);
        s.push(0.1, &[("a".into(), 12345.678901234567), ("b".into(), 1e22)]);
        let back = NormSeries::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
        let empty = NormSeries::with_channels(["x", "y"]);
        assert_eq!(empty.to_csv(), "t,x,y\n");
    }
}
