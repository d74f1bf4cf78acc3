//! Small shared helpers.

use crate::scalar::Scalar;

/// Uniform nodes on `[a, b]` inclusive.
pub fn linspace<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    assert!(n >= 2, "linspace needs at least two nodes");
    let step = (b - a) / T::from_usize_(n - 1);
    (0..n).map(|i| a + step * T::from_usize_(i)).collect()
}

/// Uniform nodes on `[-half, half]`, built so that for odd `n` the middle node
/// is exactly zero (signed multiples of the step, not accumulated sums).
pub fn linspace_sym<T: Scalar>(half: T, n: usize) -> Vec<T> {
    assert!(n >= 2);
    let step = (half + half) / T::from_usize_(n - 1);
    let mid = T::from_usize_(n - 1) / T::of(2.0);
    (0..n).map(|i| (T::from_usize_(i) - mid) * step).collect()
}

/// Quintic smoothstep: 0 for `u <= 0`, 1 for `u >= 1`, C^2 monotone between.
pub fn smoothstep5<T: Scalar>(u: T) -> T {
    if u <= T::zero() {
        T::zero()
    } else if u >= T::one() {
        T::one()
    } else {
        let u2 = u * u;
        let u3 = u2 * u;
        u3 * (T::of(10.0) - T::of(15.0) * u + T::of(6.0) * u2)
    }
}

/// Smooth bump equal to 1 on `[lo + w, hi - w]`, 0 outside `[lo, hi]`,
/// with quintic transitions of width `w` at both ends.
pub fn plateau_bump<T: Scalar>(x: T, lo: T, hi: T, w: T) -> T {
    if x <= lo || x >= hi {
        return T::zero();
    }
    smoothstep5((x - lo) / w) * smoothstep5((hi - x) / w)
}

/// Trapezoid weights for `n` uniform nodes of spacing `h`.
pub fn trapezoid_weights<T: Scalar>(n: usize, h: T) -> Vec<T> {
    let mut w = vec![h; n];
    if n >= 2 {
        let half = h / T::of(2.0);
        w[0] = half;
        w[n - 1] = half;
    }
    w
}

/// Next power of two at or above `n`.
pub fn next_pow2(n: usize) -> usize {
    let mut p = 1usize;
    while p < n {
        p <<= 1;
    }
    p
}
