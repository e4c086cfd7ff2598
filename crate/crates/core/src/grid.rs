//! Periodic box discretization: wavevector tables and the discrete Fourier
//! transform pair.
//!
//! Layout is row-major with the third axis fastest: the sample at
//! `(i1, i2, i3)` lives at `(i1 * n + i2) * n + i3`, at physical position
//! `x_j = i_j * L / n`. Spectral coefficients use the same layout and the
//! average-based normalization
//!
//! ```text
//! f_hat(k) = n^-3 * sum_x f(x) exp(-i 2 pi k.x / L)
//! ```
//!
//! so that `mean(|f|^2) = sum_k |f_hat(k)|^2`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct Grid {
    n: usize,
    box_length: f64,
    freqs: Vec<i64>,
    wavenumbers: Vec<f64>,
    deriv: Vec<f64>,
    xi: Vec<[f64; 3]>,
    xi_sq: Vec<f64>,
    representable: Vec<bool>,
    in_band: Vec<bool>,
    conj: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    weights: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("box_length", &self.box_length)
            .finish()
    }
}

impl Grid {
    /// Cubic grid with `n` points per axis on `[0, box_length)^3`.
    pub fn new(n: usize, box_length: f64) -> Result<Arc<Grid>> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 8, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive, got {box_length}"
            )));
        }
        let half = n as i64 / 2;
        let freqs: Vec<i64> = (0..n as i64)
            .map(|i| if i < half { i } else { i - n as i64 })
            .collect();
        let scale = 2.0 * PI / box_length;
        let wavenumbers: Vec<f64> = freqs.iter().map(|&k| scale * k as f64).collect();
        // Nyquist has no odd-derivative sign; it differentiates to zero.
        let deriv: Vec<f64> = freqs
            .iter()
            .map(|&k| if k == -half { 0.0 } else { scale * k as f64 })
            .collect();

        let len = n * n * n;
        let mut xi = Vec::with_capacity(len);
        let mut xi_sq = Vec::with_capacity(len);
        let mut representable = Vec::with_capacity(len);
        let mut in_band = Vec::with_capacity(len);
        let mut conj = Vec::with_capacity(len);
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    let k = [freqs[i1], freqs[i2], freqs[i3]];
                    let x = [wavenumbers[i1], wavenumbers[i2], wavenumbers[i3]];
                    xi.push(x);
                    xi_sq.push(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                    let zero = k == [0, 0, 0];
                    let nyquist = k.iter().any(|&c| c == -half);
                    representable.push(!zero && !nyquist);
                    in_band.push(k.iter().all(|&c| 3 * c.abs() <= n as i64));
                    let j1 = (n - i1) % n;
                    let j2 = (n - i2) % n;
                    let j3 = (n - i3) % n;
                    conj.push((j1 * n + j2) * n + j3);
                }
            }
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        Ok(Arc::new(Grid {
            n,
            box_length,
            freqs,
            wavenumbers,
            deriv,
            xi,
            xi_sq,
            representable,
            in_band,
            conj,
            forward,
            inverse,
            weights: Mutex::new(HashMap::new()),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Number of samples (and of spectral coefficients), `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Integer frequencies of one axis, in FFT order.
    pub fn axis_frequencies(&self) -> &[i64] {
        &self.freqs
    }

    /// Wavenumbers `2 pi k / L` of one axis, in FFT order.
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n + i2) * self.n + i3
    }

    /// Flat index of the integer frequency triple `k` (components taken modulo n).
    pub fn index_of(&self, k: [i64; 3]) -> usize {
        let n = self.n as i64;
        let w = |c: i64| c.rem_euclid(n) as usize;
        self.index(w(k[0]), w(k[1]), w(k[2]))
    }

    pub fn position(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn mode_frequency(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        [
            self.freqs[idx / (n * n)],
            self.freqs[(idx / n) % n],
            self.freqs[idx % n],
        ]
    }

    pub fn xi(&self, idx: usize) -> [f64; 3] {
        self.xi[idx]
    }

    pub fn xi_sq(&self, idx: usize) -> f64 {
        self.xi_sq[idx]
    }

    /// Derivative symbol (without the `i`) along `axis` (0-based) for mode `idx`.
    pub fn deriv_symbol(&self, idx: usize, axis: usize) -> f64 {
        let n = self.n;
        let i = match axis {
            0 => idx / (n * n),
            1 => (idx / n) % n,
            _ => idx % n,
        };
        self.deriv[i]
    }

    /// Mode carries data: not the zero mode and not on a Nyquist plane.
    pub fn is_representable(&self, idx: usize) -> bool {
        self.representable[idx]
    }

    /// Mode survives the 2/3 rule: every `|k_j| <= n/3`.
    pub fn in_band(&self, idx: usize) -> bool {
        self.in_band[idx]
    }

    /// Index of the mode `-k`.
    pub fn conj_index(&self, idx: usize) -> usize {
        self.conj[idx]
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.box_length == other.box_length)
    }

    /// Per-mode weights `|xi|^(2s)`, zero on non-representable modes. Cached per `s`.
    pub fn sobolev_weights(&self, s: f64) -> Arc<Vec<f64>> {
        let key = s.to_bits();
        let mut cache = self.weights.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(key)
            .or_insert_with(|| {
                Arc::new(
                    (0..self.len())
                        .map(|i| {
                            if !self.representable[i] {
                                0.0
                            } else if s == 0.0 {
                                1.0
                            } else if s == 1.0 {
                                self.xi_sq[i]
                            } else {
                                self.xi_sq[i].powf(s)
                            }
                        })
                        .collect(),
                )
            })
            .clone()
    }

    /// Forward transform of two real arrays packed into one complex transform.
    /// The outputs are exactly conjugate-symmetric.
    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        let mut z: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.fft3(&mut z, false);
        let scale = 1.0 / self.len() as f64;
        let mut fa = vec![Complex64::default(); z.len()];
        let mut fb = vec![Complex64::default(); z.len()];
        for k in 0..z.len() {
            let zk = z[k] * scale;
            let zc = z[self.conj[k]].conj() * scale;
            fa[k] = (zk + zc) * 0.5;
            fb[k] = Complex64::new(0.0, -0.5) * (zk - zc);
        }
        Ok((fa, fb))
    }

    /// Inverse transform of two conjugate-symmetric spectra packed into one
    /// complex transform.
    pub fn inverse_pair(&self, a: &[Complex64], b: &[Complex64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        let i = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
        self.fft3(&mut z, true);
        Ok((z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect()))
    }

    /// Unnormalized complex transform in place; the inverse does not rescale.
    pub fn fft3(&self, data: &mut Vec<Complex64>, inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut tmp = vec![Complex64::default(); data.len()];
        // Transform along the contiguous axis, then rotate (a,b,c) -> (c,a,b);
        // three rounds visit every axis and restore the layout.
        for _ in 0..3 {
            plan.process_with_scratch(data, &mut scratch);
            rotate_axes(data, &mut tmp, self.n);
            std::mem::swap(data, &mut tmp);
        }
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

fn rotate_axes(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for a in 0..n {
        for b in 0..n {
            let row = &src[(a * n + b) * n..(a * n + b + 1) * n];
            for (c, &v) in row.iter().enumerate() {
                dst[(c * n + a) * n + b] = v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(4, 1.0).is_err());
        assert!(Grid::new(12, 1.0).is_err());
        assert!(Grid::new(16, 0.0).is_err());
        assert!(Grid::new(16, 2.0).is_ok());
    }

    #[test]
    fn wavevector_tables() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let k = g.axis_frequencies();
        assert_eq!(k, &[0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(k.iter().filter(|&&c| c == 0).count(), 1);
        // symmetric under k -> -k except the Nyquist entry
        for &c in k {
            if c != -4 {
                assert!(k.contains(&-c));
            }
        }
        let zeros = (0..g.len()).filter(|&i| g.xi_sq(i) == 0.0).count();
        assert_eq!(zeros, 1);
        assert_eq!(g.deriv_symbol(g.index_of([-4, 0, 0]), 0), 0.0);
        assert_eq!(g.deriv_symbol(g.index_of([3, 0, 0]), 0), 3.0);
    }

    #[test]
    fn conj_index_is_involution() {
        let g = Grid::new(8, 1.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.conj_index(g.conj_index(i)), i);
            let k = g.mode_frequency(i);
            let kc = g.mode_frequency(g.conj_index(i));
            if g.is_representable(i) {
                assert_eq!(kc, [-k[0], -k[1], -k[2]]);
            }
        }
    }

    #[test]
    fn raw_transform_round_trip() {
        let g = Grid::new(8, 1.0).unwrap();
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let mut z = orig.clone();
        g.fft3(&mut z, false);
        g.fft3(&mut z, true);
        let scale = g.len() as f64;
        let err = z
            .iter()
            .zip(&orig)
            .map(|(a, b)| (a / scale - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }
}
