//! Discrete Sobolev norms on a zero-padded periodic extension of the support
//! box, realized by the Fourier multiplier `(1 + |xi|^2 + |tau|^2)^{±1/2}`,
//! plus the `H^1` norm of the cutoff piece `Qu` evaluated in the same
//! frequency domain.

use crate::fourier::{angular_frequencies, dft_forward};
use crate::operators::{q_symbol, GridSpec};
use crate::scalar::{Cx, Scalar};
use crate::util::next_pow2;

pub struct NormSuite<T: Scalar> {
    nx: usize,
    nt: usize,
    px: usize,
    pt: usize,
    dx: T,
    dt: T,
    xi: Vec<T>,
    tau: Vec<T>,
}

impl<T: Scalar> NormSuite<T> {
    pub fn new(grid: &GridSpec<T>) -> Self {
        let nx = grid.nx;
        let nt = grid.nt;
        let px = next_pow2(2 * nx);
        let pt = next_pow2(2 * nt);
        let dx = grid.dx();
        let dt = grid.t_spacing();
        let xi = angular_frequencies(px, dx, false);
        let tau = angular_frequencies(pt, dt, false);
        Self { nx, nt, px, pt, dx, dt, xi, tau }
    }

    fn padded_spectrum(&self, u: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(u.len(), self.nx * self.nt);
        let zero = Cx::new(T::zero(), T::zero());
        let mut field = vec![zero; self.px * self.pt];
        for i in 0..self.nx {
            for j in 0..self.nt {
                field[i * self.pt + j] = u[i * self.nt + j];
            }
        }
        // transform rows (t direction)
        for i in 0..self.px {
            dft_forward(&mut field[i * self.pt..(i + 1) * self.pt]);
        }
        // transform columns (x direction)
        let mut col = vec![zero; self.px];
        for j in 0..self.pt {
            for i in 0..self.px {
                col[i] = field[i * self.pt + j];
            }
            dft_forward(&mut col);
            for i in 0..self.px {
                field[i * self.pt + j] = col[i];
            }
        }
        field
    }

    fn weighted_sum(&self, u: &[Cx<T>], weight: impl Fn(T, T) -> T) -> T {
        let spec = self.padded_spectrum(u);
        let mut acc = T::zero();
        for i in 0..self.px {
            for j in 0..self.pt {
                let w = weight(self.xi[i], self.tau[j]);
                acc += spec[i * self.pt + j].norm_sqr() * w;
            }
        }
        let scale = self.dx * self.dt / (T::from_usize_(self.px) * T::from_usize_(self.pt));
        (acc * scale).sqrt()
    }

    /// Plain `L^2` norm (matches the padded Parseval normalization).
    pub fn l2(&self, u: &[Cx<T>]) -> T {
        let acc: T = u.iter().map(|z| z.norm_sqr()).sum();
        (acc * self.dx * self.dt).sqrt()
    }

    /// `H^1` multiplier norm.
    pub fn h1(&self, u: &[Cx<T>]) -> T {
        self.weighted_sum(u, |xi, tau| T::one() + xi * xi + tau * tau)
    }

    /// `H^{-1}` multiplier norm.
    pub fn h_neg1(&self, u: &[Cx<T>]) -> T {
        self.weighted_sum(u, |xi, tau| T::one() / (T::one() + xi * xi + tau * tau))
    }

    /// `||Q u||_{H^1}` with the cutoff symbol applied in the padded frequency
    /// domain.
    pub fn q_h1(&self, u: &[Cx<T>]) -> T {
        self.weighted_sum(u, |xi, tau| {
            let q = q_symbol(tau);
            q * q * (T::one() + xi * xi + tau * tau)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::GridSpec;

    fn suite() -> (GridSpec<f64>, NormSuite<f64>) {
        let g = GridSpec::support_box(1.0, 0.25, 32, 32).unwrap();
        let n = NormSuite::new(&g);
        (g, n)
    }

    fn sample_field(g: &GridSpec<f64>, seed: f64) -> Vec<Cx<f64>> {
        let xs = g.x_nodes();
        let ts = g.t_nodes();
        (0..g.len())
            .map(|idx| {
                let x = xs[idx / g.nt];
                let t = ts[idx % g.nt];
                let w = (1.0 - (x / 1.2).powi(2)).max(0.0) * (1.0 - (t / 0.24).powi(2)).max(0.0);
                Cx::new((seed * x + 3.0 * t).sin() * w, (x - seed * t).cos() * w * 0.3)
            })
            .collect()
    }

    #[test]
    fn norm_axioms() {
        let (g, n) = suite();
        let u = sample_field(&g, 2.0);
        let v = sample_field(&g, 5.0);
        // homogeneity
        let scaled: Vec<Cx<f64>> = u.iter().map(|z| z.scale(2.5)).collect();
        assert!((n.h1(&scaled) - 2.5 * n.h1(&u)).abs() < 1e-10 * n.h1(&u));
        assert!((n.h_neg1(&scaled) - 2.5 * n.h_neg1(&u)).abs() < 1e-10 * n.h_neg1(&u));
        // triangle
        let sum: Vec<Cx<f64>> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        assert!(n.h1(&sum) <= n.h1(&u) + n.h1(&v) + 1e-12);
        assert!(n.h_neg1(&sum) <= n.h_neg1(&u) + n.h_neg1(&v) + 1e-12);
        assert!(n.l2(&sum) <= n.l2(&u) + n.l2(&v) + 1e-12);
    }

    #[test]
    fn multiplier_bracketing() {
        let (g, n) = suite();
        for seed in [1.0, 4.0, 7.5] {
            let u = sample_field(&g, seed);
            let lo = n.h_neg1(&u);
            let mid = n.l2(&u);
            let hi = n.h1(&u);
            assert!(lo <= mid * (1.0 + 1e-12), "{lo} vs {mid}");
            assert!(mid <= hi * (1.0 + 1e-12), "{mid} vs {hi}");
        }
    }

    #[test]
    fn q_h1_below_h1() {
        let (g, n) = suite();
        let u = sample_field(&g, 3.3);
        assert!(n.q_h1(&u) <= n.h1(&u) * (1.0 + 1e-12));
    }
}
