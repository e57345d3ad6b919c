//! Radix-2 complex FFT, in place, plus a 2-D transform on square row-major
//! arrays. Lengths must be powers of two.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

fn bit_reverse(data: &mut [Complex64]) {
    let n = data.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
}

fn transform(data: &mut [Complex64], sign: f64) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    bit_reverse(data);
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let half = len / 2;
        let twiddles: Vec<Complex64> = (0..half).map(|k| Complex64::from_polar(1.0, ang * k as f64)).collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = data[start + k];
                let b = data[start + k + half] * twiddles[k];
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Forward transform `X_k = sum_j x_j e^{-2 pi i jk/n}`.
pub fn forward(data: &mut [Complex64]) {
    transform(data, -1.0);
}

/// Inverse transform, normalized by `1/n`.
pub fn inverse(data: &mut [Complex64]) {
    transform(data, 1.0);
    let s = 1.0 / data.len() as f64;
    for v in data.iter_mut() {
        *v *= s;
    }
}

fn rows_then_columns(data: &mut [Complex64], n: usize, f: fn(&mut [Complex64])) {
    assert_eq!(data.len(), n * n);
    for row in data.chunks_mut(n) {
        f(row);
    }
    let mut col = alloc::vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = data[j * n + i];
        }
        f(&mut col);
        for j in 0..n {
            data[j * n + i] = col[j];
        }
    }
}

/// 2-D forward transform of an `n x n` row-major array.
pub fn forward_2d(data: &mut [Complex64], n: usize) {
    rows_then_columns(data, n, forward);
}

/// 2-D inverse transform of an `n x n` row-major array.
pub fn inverse_2d(data: &mut [Complex64], n: usize) {
    rows_then_columns(data, n, inverse);
}

/// Signed integer frequency of index `k` for a length-`n` transform.
pub fn frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<Complex64> = (0..16).map(|k| Complex64::new((k as f64 * 0.7).sin(), (k as f64).cos() * 0.3)).collect();
        let mut y = x.clone();
        forward(&mut y);
        for (a, b) in y.iter().zip(naive(&x)) {
            assert!((a - b).norm() < 1e-12);
        }
        inverse(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn two_dimensional_round_trip() {
        let n = 8;
        let x: Vec<Complex64> = (0..n * n).map(|k| Complex64::new(k as f64, -(k as f64).sqrt())).collect();
        let mut y = x.clone();
        forward_2d(&mut y, n);
        assert!((y[0] - x.iter().sum::<Complex64>()).norm() < 1e-10);
        inverse_2d(&mut y, n);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn frequencies_wrap() {
        assert_eq!(frequency(0, 8), 0.0);
        assert_eq!(frequency(4, 8), 4.0);
        assert_eq!(frequency(5, 8), -3.0);
    }
}
