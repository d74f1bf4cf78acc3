//! Discrete Fourier transforms and spectral differentiation used by the
//! operator assembly and the Sobolev-norm multipliers.
//!
//! Sizes are small (grids of a few hundred nodes), so a radix-2 FFT plus an
//! O(n^2) fallback for non power-of-two lengths is all that is needed.

use crate::scalar::{cis, Cx, Scalar};

/// In-place forward DFT, `X_k = sum_j x_j e^{-2 pi i j k / n}`.
pub fn dft_forward<T: Scalar>(data: &mut [Cx<T>]) {
    dft(data, T::of(-1.0));
}

/// In-place inverse DFT including the `1/n` factor.
pub fn dft_inverse<T: Scalar>(data: &mut [Cx<T>]) {
    dft(data, T::of(1.0));
    let scale = T::one() / T::from_usize_(data.len());
    for v in data.iter_mut() {
        *v = v.scale(scale);
    }
}

fn dft<T: Scalar>(data: &mut [Cx<T>], sign: T) {
    let n = data.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        fft_pow2(data, sign);
    } else {
        let out = dft_naive(data, sign);
        data.copy_from_slice(&out);
    }
}

fn dft_naive<T: Scalar>(data: &[Cx<T>], sign: T) -> Vec<Cx<T>> {
    let n = data.len();
    let base = sign * T::of(2.0) * T::PI() / T::from_usize_(n);
    (0..n)
        .map(|k| {
            let mut acc = Cx::new(T::zero(), T::zero());
            for (j, &x) in data.iter().enumerate() {
                // j*k mod n keeps the phase argument small.
                let phase = base * T::from_usize_((j * k) % n);
                acc += x * cis(phase);
            }
            acc
        })
        .collect()
}

fn fft_pow2<T: Scalar>(data: &mut [Cx<T>], sign: T) {
    let n = data.len();
    // bit reversal permutation
    let mut j = 0usize;
    for i in 0..n {
        if i < j {
            data.swap(i, j);
        }
        let mut m = n >> 1;
        while m >= 1 && j & m != 0 {
            j ^= m;
            m >>= 1;
        }
        j |= m;
    }
    let mut len = 2usize;
    while len <= n {
        let ang = sign * T::of(2.0) * T::PI() / T::from_usize_(len);
        let wlen = cis(ang);
        let half = len / 2;
        let mut start = 0usize;
        while start < n {
            let mut w = Cx::new(T::one(), T::zero());
            for k in 0..half {
                let u = data[start + k];
                let v = data[start + k + half] * w;
                data[start + k] = u + v;
                data[start + k + half] = u - v;
                w = w * wlen;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// DFT frequency in "index" convention: wavenumber `k` mapped to the signed
/// integer in `[-n/2, n/2)`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    let k = k as i64;
    let n = n as i64;
    if k <= (n - 1) / 2 {
        k
    } else {
        k - n
    }
}

/// Angular frequencies `2 pi k~ / (n h)` for a periodic grid of `n` nodes and
/// spacing `h`; the Nyquist mode of an even grid is zeroed for derivatives.
pub fn angular_frequencies<T: Scalar>(n: usize, h: T, zero_nyquist: bool) -> Vec<T> {
    let period = h * T::from_usize_(n);
    (0..n)
        .map(|k| {
            let s = signed_index(k, n);
            if zero_nyquist && n % 2 == 0 && s == -((n / 2) as i64) {
                T::zero()
            } else {
                T::of(2.0) * T::PI() * T::from_f64(s as f64).unwrap() / period
            }
        })
        .collect()
}

/// Dense spectral differentiation matrix (row-major `n x n`) for a uniform
/// periodic grid of spacing `h`: the exact `d/du` on trigonometric
/// interpolants. Entries are real; returned as such.
pub fn spectral_derivative_matrix<T: Scalar>(n: usize, h: T) -> Vec<T> {
    let freqs = angular_frequencies(n, h, true);
    let mut mat = vec![T::zero(); n * n];
    // column c of the matrix = D applied to the c-th unit vector
    let mut col: Vec<Cx<T>> = vec![Cx::new(T::zero(), T::zero()); n];
    for c in 0..n {
        for v in col.iter_mut() {
            *v = Cx::new(T::zero(), T::zero());
        }
        col[c] = Cx::new(T::one(), T::zero());
        dft_forward(&mut col);
        for (k, v) in col.iter_mut().enumerate() {
            *v = *v * Cx::new(T::zero(), freqs[k]);
        }
        dft_inverse(&mut col);
        for r in 0..n {
            mat[r * n + c] = col[r].re;
        }
    }
    mat
}

/// Dense Fourier multiplier matrix `F^{-1} diag(sym(tau_k)) F` on a uniform
/// periodic grid; complex in general because `sym` need not be even.
pub fn multiplier_matrix<T: Scalar>(n: usize, h: T, sym: impl Fn(T) -> T) -> Vec<Cx<T>> {
    let freqs = angular_frequencies(n, h, false);
    let vals: Vec<T> = freqs.iter().map(|&t| sym(t)).collect();
    let mut mat = vec![Cx::new(T::zero(), T::zero()); n * n];
    let mut col: Vec<Cx<T>> = vec![Cx::new(T::zero(), T::zero()); n];
    for c in 0..n {
        for v in col.iter_mut() {
            *v = Cx::new(T::zero(), T::zero());
        }
        col[c] = Cx::new(T::one(), T::zero());
        dft_forward(&mut col);
        for (k, v) in col.iter_mut().enumerate() {
            *v = v.scale(vals[k]);
        }
        dft_inverse(&mut col);
        for r in 0..n {
            mat[r * n + c] = col[r];
        }
    }
    mat
}

/// Apply the exact periodic spectral derivative to samples (out of place).
pub fn spectral_derivative<T: Scalar>(samples: &[Cx<T>], h: T) -> Vec<Cx<T>> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    dft_forward(&mut buf);
    let freqs = angular_frequencies(n, h, true);
    for (k, v) in buf.iter_mut().enumerate() {
        *v = *v * Cx::new(T::zero(), freqs[k]);
    }
    dft_inverse(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_matches_naive() {
        let data: Vec<Cx<f64>> = (0..16)
            .map(|i| Cx::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let naive = dft_naive(&data, -1.0);
        let mut fast = data.clone();
        dft_forward(&mut fast);
        for (a, b) in naive.iter().zip(fast.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let data: Vec<Cx<f64>> = (0..24)
            .map(|i| Cx::new((i as f64).sin(), (i as f64 * 1.1).cos()))
            .collect();
        let mut buf = data.clone();
        dft_forward(&mut buf);
        dft_inverse(&mut buf);
        for (a, b) in data.iter().zip(buf.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn spectral_derivative_on_mode() {
        let n = 32;
        let h = 0.25;
        let period = h * n as f64;
        let k = 3.0;
        let omega = 2.0 * std::f64::consts::PI * k / period;
        let samples: Vec<Cx<f64>> = (0..n)
            .map(|j| {
                let u = j as f64 * h;
                Cx::new((omega * u).cos(), (omega * u).sin())
            })
            .collect();
        let d = spectral_derivative(&samples, h);
        for (j, v) in d.iter().enumerate() {
            let expect = samples[j] * Cx::new(0.0, omega);
            assert!((v - expect).norm() < 1e-10, "node {j}");
        }
    }
}
