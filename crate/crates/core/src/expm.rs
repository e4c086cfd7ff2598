//! Exponential of small dense real matrices by scaling and squaring of a
//! truncated Taylor series.
//!
//! The argument is scaled by `2^-s` until its 1-norm is at most 1/2, the
//! series is summed to degree 20 (truncation below `0.5^21 / 21!`, far under
//! f64 resolution) and the result is squared `s` times. This holds for
//! defective and non-normal matrices alike, which matters because the
//! per-mode symbols are non-normal whenever the two viscosities differ.

pub type Mat4 = [[f64; 4]; 4];

const TAYLOR_DEGREE: usize = 20;

pub fn identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..4 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn scale(a: &Mat4, s: f64) -> Mat4 {
    a.map(|row| row.map(|x| x * s))
}

/// Maximum absolute column sum.
pub fn norm1(a: &Mat4) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn expm(a: &Mat4) -> Mat4 {
    let norm = norm1(a);
    if norm == 0.0 {
        return identity();
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = scale(a, 0.5f64.powi(squarings));

    // Horner: I + A/1 (I + A/2 (I + ... (I + A/d)))
    let mut acc = identity();
    for k in (1..=TAYLOR_DEGREE).rev() {
        let t = scale(&matmul(&scaled, &acc), 1.0 / k as f64);
        acc = t;
        for (i, row) in acc.iter_mut().enumerate() {
            row[i] += 1.0;
        }
    }
    for _ in 0..squarings {
        acc = matmul(&acc, &acc);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &Mat4, b: &Mat4) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((a[i][j] - b[i][j]).abs());
            }
        }
        m
    }

    #[test]
    fn diagonal() {
        let mut a = [[0.0; 4]; 4];
        let d = [-3.0, 0.5, -40.0, 2.0];
        for i in 0..4 {
            a[i][i] = d[i];
        }
        let e = expm(&a);
        for i in 0..4 {
            let want = d[i].exp();
            assert!((e[i][i] - want).abs() <= 1e-14 * want.max(1.0), "{i}");
        }
    }

    #[test]
    fn rotation() {
        let w = 37.3;
        let mut a = [[0.0; 4]; 4];
        a[0][1] = w;
        a[1][0] = -w;
        let e = expm(&a);
        let mut want = identity();
        want[0][0] = w.cos();
        want[0][1] = w.sin();
        want[1][0] = -w.sin();
        want[1][1] = w.cos();
        assert!(max_diff(&e, &want) < 1e-12);
    }

    #[test]
    fn nilpotent_jordan_block() {
        let mut a = [[0.0; 4]; 4];
        a[0][1] = 1.0;
        a[1][2] = 1.0;
        a[2][3] = 1.0;
        let e = expm(&a);
        let want = [
            [1.0, 1.0, 0.5, 1.0 / 6.0],
            [0.0, 1.0, 1.0, 0.5],
            [0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        assert!(max_diff(&e, &want) < 1e-15);
    }

    #[test]
    fn group_property() {
        let a = [
            [-0.3, 2.0, 0.1, 0.0],
            [-2.0, -0.3, 0.0, 0.4],
            [0.2, 0.0, -0.1, 5.0],
            [0.0, -0.7, -5.0, -0.05],
        ];
        let full = expm(&scale(&a, 2.0));
        let half = expm(&a);
        assert!(max_diff(&full, &matmul(&half, &half)) < 1e-13);
    }
}
