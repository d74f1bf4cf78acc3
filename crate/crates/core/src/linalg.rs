//! Banded complex linear algebra: LU factorization of tridiagonal systems with
//! partial pivoting, plus solves with the conjugate transpose. Backs the
//! Dirichlet solves and the smallest-singular-value probe.

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

/// Tridiagonal matrix stored by diagonals: `sub[i] x_{i-1} + diag[i] x_i +
/// sup[i] x_{i+1}`.
#[derive(Clone, Debug)]
pub struct Tridiagonal<T: Scalar> {
    pub sub: Vec<Cx<T>>,
    pub diag: Vec<Cx<T>>,
    pub sup: Vec<Cx<T>>,
}

impl<T: Scalar> Tridiagonal<T> {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.n();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn apply_adjoint(&self, y: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.n();
        assert_eq!(y.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i].conj() * y[i];
                if i + 1 < n {
                    acc += self.sub[i + 1].conj() * y[i + 1];
                }
                if i > 0 {
                    acc += self.sup[i - 1].conj() * y[i - 1];
                }
                acc
            })
            .collect()
    }

    pub fn factorize(&self) -> Result<TridiagLu<T>> {
        TridiagLu::new(self)
    }
}

/// LU factorization of a tridiagonal matrix with partial pivoting. Pivoting
/// fills one extra superdiagonal; `PA = LU` in banded storage.
pub struct TridiagLu<T: Scalar> {
    n: usize,
    // U: main, first and second superdiagonal
    u0: Vec<Cx<T>>,
    u1: Vec<Cx<T>>,
    u2: Vec<Cx<T>>,
    // L multipliers and the row-swap flags
    l: Vec<Cx<T>>,
    swapped: Vec<bool>,
}

impl<T: Scalar> TridiagLu<T> {
    fn new(a: &Tridiagonal<T>) -> Result<Self> {
        let n = a.n();
        let zero = Cx::new(T::zero(), T::zero());
        let mut u0 = a.diag.clone();
        let mut u1 = vec![zero; n];
        let mut u2 = vec![zero; n];
        for i in 0..n.saturating_sub(1) {
            u1[i] = a.sup[i];
        }
        let mut sub: Vec<Cx<T>> = a.sub.clone();
        let mut l = vec![zero; n];
        let mut swapped = vec![false; n];
        for i in 0..n - 1 {
            let below = sub[i + 1];
            if below.norm_sqr() > u0[i].norm_sqr() {
                swapped[i] = true;
                // swap row i and i+1
                let t0 = u0[i];
                u0[i] = below;
                let t1 = u1[i];
                u1[i] = u0[i + 1];
                u0[i + 1] = t1;
                // row i+1 had no second superdiagonal before the swap
                u2[i] = if i + 2 < n { u1[i + 1] } else { zero };
                u1[i + 1] = zero;
                sub[i + 1] = t0;
            }
            if u0[i].norm_sqr() == T::zero() {
                return Err(Error::SingularSystem(format!("zero pivot at row {i}")));
            }
            let m = sub[i + 1] / u0[i];
            l[i + 1] = m;
            u0[i + 1] = u0[i + 1] - m * u1[i];
            if i + 2 < n {
                u1[i + 1] = u1[i + 1] - m * u2[i];
            }
        }
        if u0[n - 1].norm_sqr() == T::zero() {
            return Err(Error::SingularSystem(format!("zero pivot at row {}", n - 1)));
        }
        Ok(Self { n, u0, u1, u2, l, swapped })
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        // forward elimination replaying the pivoted steps
        for i in 0..n - 1 {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            let m = self.l[i + 1];
            let yi = y[i];
            y[i + 1] = y[i + 1] - m * yi;
        }
        // back substitution with two superdiagonals
        for i in (0..n).rev() {
            let mut acc = y[i];
            if i + 1 < n {
                acc -= self.u1[i] * y[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * y[i + 2];
            }
            y[i] = acc / self.u0[i];
        }
        y
    }

    /// Solve `A* x = b` reusing the factorization: `A = P^T L U` gives
    /// `A* = U* L* P`, so solve `U* w = b`, `L* v = w`, then `x = P^T v`.
    pub fn solve_adjoint(&self, b: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // U* is lower triangular with two subdiagonals: forward substitution
        let mut w = vec![Cx::new(T::zero(), T::zero()); n];
        for i in 0..n {
            let mut acc = b[i];
            if i >= 1 {
                acc -= self.u1[i - 1].conj() * w[i - 1];
            }
            if i >= 2 {
                acc -= self.u2[i - 2].conj() * w[i - 2];
            }
            w[i] = acc / self.u0[i].conj();
        }
        // The elimination sequence K = M_{n-2} P_{n-2} ... M_0 P_0 satisfies
        // U = K A, so A* x = b reduces to x = K* w with the conjugated
        // eliminations and swaps replayed in reverse, interleaved per step.
        for i in (0..n - 1).rev() {
            let wi1 = w[i + 1];
            w[i] = w[i] - self.l[i + 1].conj() * wi1;
            if self.swapped[i] {
                w.swap(i, i + 1);
            }
        }
        w
    }
}

/// Smallest singular value by inverse power iteration on the normal equations
/// `A* A`, using tridiagonal solves. Returns the estimate and the iteration
/// count; a singular factorization yields `(0, flagged)`.
pub struct SigmaMinResult<T> {
    pub sigma_min: T,
    pub iterations: usize,
    pub singular_flag: bool,
}

pub fn smallest_singular_value<T: Scalar>(
    a: &Tridiagonal<T>,
    max_iter: usize,
    rel_tol: T,
) -> SigmaMinResult<T> {
    let n = a.n();
    let lu = match a.factorize() {
        Ok(lu) => lu,
        Err(_) => {
            return SigmaMinResult { sigma_min: T::zero(), iterations: 0, singular_flag: true }
        }
    };
    // deterministic pseudo-random start vector
    let mut v: Vec<Cx<T>> = (0..n)
        .map(|i| {
            let x = T::of(0.7) * T::from_usize_(i) + T::of(0.3);
            Cx::new(x.sin(), (x * T::of(1.3)).cos())
        })
        .collect();
    normalize(&mut v);
    let mut sigma = T::zero();
    let mut iters = 0usize;
    for k in 0..max_iter {
        iters = k + 1;
        let w = lu.solve_adjoint(&v);
        let w = lu.solve(&w);
        let norm = l2_norm(&w);
        if !norm.is_finite() || norm == T::zero() {
            return SigmaMinResult { sigma_min: T::zero(), iterations: iters, singular_flag: true };
        }
        let new_sigma = T::one() / norm.sqrt();
        v = w;
        normalize(&mut v);
        if k > 0 && (new_sigma - sigma).abs() <= rel_tol * new_sigma {
            sigma = new_sigma;
            break;
        }
        sigma = new_sigma;
    }
    SigmaMinResult { sigma_min: sigma, iterations: iters, singular_flag: false }
}

fn l2_norm<T: Scalar>(v: &[Cx<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

fn normalize<T: Scalar>(v: &mut [Cx<T>]) {
    let n = l2_norm(v);
    if n > T::zero() {
        for z in v.iter_mut() {
            *z = z.scale(T::one() / n);
        }
    }
}
