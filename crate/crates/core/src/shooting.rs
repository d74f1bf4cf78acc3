//! The ODE family `H_zeta` on `I = [-r, r]`, its shooting solution, zero
//! location of the endpoint map `Phi(zeta) = phi_zeta(r)` by argument-principle
//! winding counts with Newton refinement, the exceptional Sobolev exponents,
//! and a Dirichlet smallest-singular-value probe.

use crate::error::{Error, Result};
use crate::linalg::{smallest_singular_value, Tridiagonal};
use crate::operators::OdeCoefficients;
use crate::quadrature::gauss_legendre;
use crate::scalar::{cre, Cx, Scalar};
use serde::Serialize;

/// Canonical second-order expansion of
/// `H_zeta = (d_x + i zeta a)(d_x - i zeta a) + beta1 (d_x + i zeta a)
///         + beta2 (d_x - i zeta a) + beta3`
/// as `f'' + p(x) f' + q(x) f`.
pub struct HOperator<'a, T: Scalar> {
    pub zeta: Cx<T>,
    coeffs: &'a OdeCoefficients<T>,
}

pub fn assemble_h<T: Scalar>(zeta: Cx<T>, coeffs: &OdeCoefficients<T>) -> HOperator<'_, T> {
    HOperator { zeta, coeffs }
}

impl<'a, T: Scalar> HOperator<'a, T> {
    /// First-order coefficient `p = beta1 + beta2`.
    pub fn p(&self, x: T) -> T {
        self.coeffs.beta1.value(x) + self.coeffs.beta2.value(x)
    }

    /// Zeroth-order coefficient
    /// `q = zeta^2 a^2 - i zeta a' + i zeta a (beta1 - beta2) + beta3`.
    pub fn q(&self, x: T) -> Cx<T> {
        let a = self.coeffs.a.value(x);
        let da = self.coeffs.a.derivative(x);
        let b1 = self.coeffs.beta1.value(x);
        let b2 = self.coeffs.beta2.value(x);
        let b3 = self.coeffs.beta3.value(x);
        let z = self.zeta;
        z * z * cre(a * a) + Cx::new(T::zero(), T::one()) * z * cre(a * (b1 - b2) - da)
            + cre(b3)
    }

    /// `dq/dzeta = 2 zeta a^2 - i a' + i a (beta1 - beta2)`.
    pub fn dq_dzeta(&self, x: T) -> Cx<T> {
        let a = self.coeffs.a.value(x);
        let da = self.coeffs.a.derivative(x);
        let b1 = self.coeffs.beta1.value(x);
        let b2 = self.coeffs.beta2.value(x);
        self.zeta.scale(T::of(2.0) * a * a) + Cx::new(T::zero(), a * (b1 - b2) - da)
    }

    /// Expanded form applied to samples: `f'' + p f' + q f` with the same
    /// centered first-derivative composed twice, so grid compositions of the
    /// factored fields match it to rounding.
    pub fn apply_expanded(&self, xs: &[T], dx: T, f: &[Cx<T>]) -> Vec<Cx<T>> {
        let d1 = centered(f, dx);
        let d2 = centered(&d1, dx);
        (0..f.len())
            .map(|i| d2[i] + d1[i].scale(self.p(xs[i])) + self.q(xs[i]) * f[i])
            .collect()
    }

    /// Factored form applied to samples, composing the two first-order
    /// factors operationally.
    pub fn apply_factored(&self, xs: &[T], dx: T, f: &[Cx<T>]) -> Vec<Cx<T>> {
        h_apply_grid(self.zeta, self.coeffs, xs, dx, f)
    }
}

fn centered<T: Scalar>(f: &[Cx<T>], dx: T) -> Vec<Cx<T>> {
    let n = f.len();
    let inv = T::one() / (T::of(2.0) * dx);
    (0..n)
        .map(|i| {
            let up = if i + 1 < n { f[i + 1] } else { Cx::new(T::zero(), T::zero()) };
            let dn = if i >= 1 { f[i - 1] } else { Cx::new(T::zero(), T::zero()) };
            (up - dn).scale(inv)
        })
        .collect()
}

/// `H_zeta` on grid samples via the factored composition
/// `(D + i zeta a)(D - i zeta a) + beta1 (D + i zeta a) + beta2 (D - i zeta a)
///  + beta3` with `D` the centered difference. This mirrors the 2-D operator
/// composition exactly, which the Mellin conjugation check relies on.
pub fn h_apply_grid<T: Scalar>(
    zeta: Cx<T>,
    coeffs: &OdeCoefficients<T>,
    xs: &[T],
    dx: T,
    f: &[Cx<T>],
) -> Vec<Cx<T>> {
    let n = f.len();
    let iz = Cx::new(T::zero(), T::one()) * zeta;
    let a: Vec<T> = xs.iter().map(|&x| coeffs.a.value(x)).collect();
    let inner: Vec<Cx<T>> = {
        let d = centered(f, dx);
        (0..n).map(|i| d[i] - iz.scale(a[i]) * f[i]).collect()
    };
    let outer: Vec<Cx<T>> = {
        let d = centered(&inner, dx);
        (0..n).map(|i| d[i] + iz.scale(a[i]) * inner[i]).collect()
    };
    let d1 = centered(f, dx);
    (0..n)
        .map(|i| {
            let b1 = coeffs.beta1.value(xs[i]);
            let b2 = coeffs.beta2.value(xs[i]);
            let b3 = coeffs.beta3.value(xs[i]);
            outer[i]
                + (d1[i] + iz.scale(a[i]) * f[i]).scale(b1)
                + (d1[i] - iz.scale(a[i]) * f[i]).scale(b2)
                + f[i].scale(b3)
        })
        .collect()
}

// ---- adaptive Runge-Kutta 5(4) on the extended complex system ----

type State<T> = [Cx<T>; 4];

struct OdeRhs<'a, T: Scalar> {
    h: HOperator<'a, T>,
}

impl<'a, T: Scalar> OdeRhs<'a, T> {
    #[inline]
    fn eval(&self, x: T, y: &State<T>) -> State<T> {
        let p = cre(self.h.p(x));
        let q = self.h.q(x);
        let qz = self.h.dq_dzeta(x);
        [
            y[1],
            -(p * y[1] + q * y[0]),
            y[3],
            -(p * y[3] + q * y[2] + qz * y[0]),
        ]
    }
}

/// Shooting output: endpoint value, derivative, the zeta-derivative of the
/// endpoint value from the variational system, and integrator statistics.
#[derive(Clone, Copy, Debug)]
pub struct ShootingResult<T: Scalar> {
    pub phi_end: Cx<T>,
    pub dphi_end: Cx<T>,
    pub dzeta_phi_end: Cx<T>,
    pub dzeta_dphi_end: Cx<T>,
    pub steps: usize,
    pub rejected: usize,
    pub max_error_estimate: T,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

struct Integrator<'a, T: Scalar> {
    rhs: OdeRhs<'a, T>,
    atol: T,
    rtol: T,
    steps: usize,
    rejected: usize,
    max_err: T,
}

impl<'a, T: Scalar> Integrator<'a, T> {
    fn new(rhs: OdeRhs<'a, T>, tol: T) -> Self {
        Self { rhs, atol: tol, rtol: tol, steps: 0, rejected: 0, max_err: T::zero() }
    }

    /// Integrate from `x0` to `x1` (either direction), mutating the state.
    fn advance(&mut self, x0: T, x1: T, y: &mut State<T>) -> Result<T> {
        let span = x1 - x0;
        if span == T::zero() {
            return Ok(x0);
        }
        let dir = span.signum();
        let mut x = x0;
        let mut h = span.abs().min(T::of(0.1)) * dir;
        let min_step = span.abs() * T::of(1e-14) + T::of(1e-300);
        loop {
            let remaining = x1 - x;
            if remaining == T::zero() || remaining.signum() != dir {
                return Ok(x);
            }
            if h.abs() > remaining.abs() {
                h = remaining;
            }
            let (ynew, err) = self.step(x, y, h);
            self.max_err = self.max_err.max(err);
            if err <= T::one() {
                self.steps += 1;
                x = x + h;
                *y = ynew;
                let factor = if err == T::zero() {
                    T::of(5.0)
                } else {
                    (T::of(0.9) * err.powf(T::of(-0.2))).min(T::of(5.0)).max(T::of(0.2))
                };
                h = h * factor;
            } else {
                self.rejected += 1;
                h = h * (T::of(0.9) * err.powf(T::of(-0.2))).max(T::of(0.1));
                if h.abs() < min_step {
                    return Err(Error::StepUnderflow {
                        x: x.to_f64_(),
                        hint: "stiff or misconfigured coefficients".into(),
                    });
                }
            }
        }
    }

    fn step(&self, x: T, y: &State<T>, h: T) -> (State<T>, T) {
        let f = |x: T, y: &State<T>| self.rhs.eval(x, y);
        let ch = |c: f64| x + h * T::of(c);
        let k1 = f(x, y);
        let y2 = comb(y, &[(&k1, A21)], h);
        let k2 = f(ch(C2), &y2);
        let y3 = comb(y, &[(&k1, A31), (&k2, A32)], h);
        let k3 = f(ch(C3), &y3);
        let y4 = comb(y, &[(&k1, A41), (&k2, A42), (&k3, A43)], h);
        let k4 = f(ch(C4), &y4);
        let y5 = comb(y, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)], h);
        let k5 = f(ch(C5), &y5);
        let y6 = comb(y, &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)], h);
        let k6 = f(x + h, &y6);
        let ynew = comb(y, &[(&k1, B1), (&k3, B3), (&k4, B4), (&k5, B5), (&k6, B6)], h);
        let k7 = f(x + h, &ynew);
        let mut err_acc = T::zero();
        for i in 0..4 {
            let e = (k1[i].scale(T::of(E1))
                + k3[i].scale(T::of(E3))
                + k4[i].scale(T::of(E4))
                + k5[i].scale(T::of(E5))
                + k6[i].scale(T::of(E6))
                + k7[i].scale(T::of(E7)))
            .scale(h.abs());
            let scale = self.atol + self.rtol * y[i].norm().max(ynew[i].norm());
            let r = e.norm() / scale;
            err_acc = err_acc + r * r;
        }
        (ynew, (err_acc / T::of(4.0)).sqrt())
    }
}

#[inline]
fn comb<T: Scalar>(y: &State<T>, ks: &[(&State<T>, f64)], h: T) -> State<T> {
    let mut out = *y;
    for &(k, c) in ks {
        let hc = h * T::of(c);
        for i in 0..4 {
            out[i] += k[i].scale(hc);
        }
    }
    out
}

fn check_tol<T: Scalar>(tol: T) -> Result<T> {
    if tol < T::of(1e-12) || tol > T::of(1e-6) {
        return Err(Error::ToleranceOutOfRange(tol.to_f64_()));
    }
    Ok(tol)
}

/// Integrate `H_zeta phi = 0` with `phi(-r) = 0`, `phi'(-r) = 1`, together
/// with the variational system for the zeta-derivative, from `-r` to `r`.
pub fn shoot<T: Scalar>(
    zeta: Cx<T>,
    coeffs: &OdeCoefficients<T>,
    tol: T,
) -> Result<ShootingResult<T>> {
    let tol = check_tol(tol)?;
    coeffs.validate()?;
    let r = coeffs.r;
    let rhs = OdeRhs { h: assemble_h(zeta, coeffs) };
    let mut integ = Integrator::new(rhs, tol);
    let zero = Cx::new(T::zero(), T::zero());
    let mut y: State<T> = [zero, cre(T::one()), zero, zero];
    integ.advance(-r, r, &mut y)?;
    Ok(ShootingResult {
        phi_end: y[0],
        dphi_end: y[1],
        dzeta_phi_end: y[2],
        dzeta_dphi_end: y[3],
        steps: integ.steps,
        rejected: integ.rejected,
        max_error_estimate: integ.max_err,
    })
}

/// Trajectory of the homogeneous solution with initial data `(value, slope)`
/// at `anchor`, sampled at the sorted nodes `xs` (which may extend beyond the
/// base interval; coefficients are evaluated by their closed forms).
/// Returns `(phi, phi')` per node.
pub fn shoot_trajectory<T: Scalar>(
    zeta: Cx<T>,
    coeffs: &OdeCoefficients<T>,
    anchor: T,
    init: (Cx<T>, Cx<T>),
    xs: &[T],
    tol: T,
) -> Result<Vec<(Cx<T>, Cx<T>)>> {
    let tol = check_tol(tol)?;
    let zero = Cx::new(T::zero(), T::zero());
    let mut out = vec![(zero, zero); xs.len()];
    let split = xs.partition_point(|&x| x < anchor);
    // upward sweep
    {
        let rhs = OdeRhs { h: assemble_h(zeta, coeffs) };
        let mut integ = Integrator::new(rhs, tol);
        let mut y: State<T> = [init.0, init.1, zero, zero];
        let mut x = anchor;
        for (k, &xk) in xs.iter().enumerate().skip(split) {
            integ.advance(x, xk, &mut y)?;
            x = xk;
            out[k] = (y[0], y[1]);
        }
    }
    // downward sweep
    {
        let rhs = OdeRhs { h: assemble_h(zeta, coeffs) };
        let mut integ = Integrator::new(rhs, tol);
        let mut y: State<T> = [init.0, init.1, zero, zero];
        let mut x = anchor;
        for k in (0..split).rev() {
            integ.advance(x, xs[k], &mut y)?;
            x = xs[k];
            out[k] = (y[0], y[1]);
        }
    }
    Ok(out)
}

// ---- argument-principle zero location ----

/// Axis-aligned box in the complex `zeta` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZBox<T: Scalar> {
    pub re_min: T,
    pub re_max: T,
    pub im_min: T,
    pub im_max: T,
}

impl<T: Scalar> ZBox<T> {
    pub fn new(re_min: T, re_max: T, im_min: T, im_max: T) -> Result<Self> {
        if !(re_max > re_min && im_max > im_min) {
            return Err(Error::EmptyRange("degenerate box".into()));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    pub fn center(&self) -> Cx<T> {
        Cx::new(
            (self.re_min + self.re_max) / T::of(2.0),
            (self.im_min + self.im_max) / T::of(2.0),
        )
    }

    pub fn width(&self) -> T {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> T {
        self.im_max - self.im_min
    }

    pub fn diameter(&self) -> T {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, z: Cx<T>) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    fn corners(&self) -> [Cx<T>; 4] {
        [
            Cx::new(self.re_min, self.im_min),
            Cx::new(self.re_max, self.im_min),
            Cx::new(self.re_max, self.im_max),
            Cx::new(self.re_min, self.im_max),
        ]
    }

    fn perturbed(&self, attempt: usize) -> Self {
        let k = T::from_usize_(attempt);
        let dw = self.width() * T::of(0.017) * k;
        let dh = self.height() * T::of(0.013) * k;
        Self {
            re_min: self.re_min - dw,
            re_max: self.re_max + dw * T::of(1.31),
            im_min: self.im_min - dh * T::of(1.17),
            im_max: self.im_max + dh,
        }
    }

    fn quadrants(&self, jitter: T) -> [Self; 4] {
        let cx = (self.re_min + self.re_max) / T::of(2.0) + self.width() * jitter;
        let cy = (self.im_min + self.im_max) / T::of(2.0) + self.height() * jitter;
        [
            Self { re_min: self.re_min, re_max: cx, im_min: self.im_min, im_max: cy },
            Self { re_min: cx, re_max: self.re_max, im_min: self.im_min, im_max: cy },
            Self { re_min: self.re_min, re_max: cx, im_min: cy, im_max: self.im_max },
            Self { re_min: cx, re_max: self.re_max, im_min: cy, im_max: self.im_max },
        ]
    }
}

/// A refined zero of the endpoint map.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RefinedZero<T: Scalar> {
    pub re: T,
    pub im: T,
    pub residual: T,
    pub newton_iterations: usize,
    pub multiplicity: usize,
    /// Set when Newton failed and the zero came from the sampling fallback or
    /// from an unsplittable multiple cluster.
    pub flagged: bool,
}

/// Certified zero list for a box: winding count plus refined zeros.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroCertificate<T: Scalar> {
    pub zbox: ZBox<T>,
    pub winding: i64,
    pub zeros: Vec<RefinedZero<T>>,
}

struct PhiEvaluator<'a, T: Scalar> {
    coeffs: &'a OdeCoefficients<T>,
    tol: T,
}

impl<'a, T: Scalar> PhiEvaluator<'a, T> {
    fn eval(&self, zeta: Cx<T>) -> Result<(Cx<T>, Cx<T>)> {
        let r = shoot(zeta, self.coeffs, self.tol)?;
        Ok((r.phi_end, r.dzeta_phi_end))
    }
}

/// Winding number of `Phi` around `zbox` by Gauss-Legendre quadrature of the
/// logarithmic derivative, with adaptive node doubling and edge nudging.
pub fn count_zeros<T: Scalar>(
    zbox: &ZBox<T>,
    coeffs: &OdeCoefficients<T>,
    tol: T,
) -> Result<i64> {
    let ev = PhiEvaluator { coeffs, tol: check_tol(tol)? };
    let (w, b) = winding_with_nudging(&ev, zbox)?;
    let _ = b;
    Ok(w)
}

fn winding_with_nudging<T: Scalar>(
    ev: &PhiEvaluator<'_, T>,
    zbox: &ZBox<T>,
) -> Result<(i64, ZBox<T>)> {
    let mut current = *zbox;
    for attempt in 0..8 {
        match winding_integral(ev, &current) {
            Ok(w) => return Ok((w, current)),
            Err(Error::EdgeTooCloseToZero(_)) | Err(Error::WindingUncertified(_)) => {
                current = zbox.perturbed(attempt + 1);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::EdgeTooCloseToZero(8))
}

fn winding_integral<T: Scalar>(ev: &PhiEvaluator<'_, T>, zbox: &ZBox<T>) -> Result<i64> {
    let corners = zbox.corners();
    let mut prev_round: Option<i64> = None;
    let mut nodes_per_edge = 32usize;
    let mut last_dist = T::infinity();
    while nodes_per_edge <= 512 {
        let (gx, gw) = gauss_legendre::<T>(nodes_per_edge);
        let mut integral = Cx::new(T::zero(), T::zero());
        let mut mags: Vec<T> = Vec::with_capacity(4 * nodes_per_edge);
        for e in 0..4 {
            let a = corners[e];
            let b = corners[(e + 1) % 4];
            let half = (b - a).scale(T::of(0.5));
            let mid = (a + b).scale(T::of(0.5));
            for (&u, &w) in gx.iter().zip(gw.iter()) {
                let z = mid + half.scale(u);
                let (phi, dphi) = ev.eval(z)?;
                mags.push(phi.norm());
                integral += (dphi / phi) * half.scale(w);
            }
        }
        // edge safety: relative floor on |Phi| along the contour
        let mut sorted = mags.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let min = sorted[0];
        if median > T::zero() && min < T::of(1e-8) * median {
            return Err(Error::EdgeTooCloseToZero(0));
        }
        let w = integral / Cx::new(T::zero(), T::of(2.0) * T::PI());
        let rounded = w.re.round();
        let dist = (w - cre(rounded)).norm();
        let as_int = rounded.to_f64_() as i64;
        if dist <= T::of(0.2) {
            if prev_round == Some(as_int) {
                return Ok(as_int);
            }
            prev_round = Some(as_int);
        } else {
            prev_round = None;
        }
        last_dist = dist;
        nodes_per_edge *= 2;
    }
    Err(Error::WindingUncertified(last_dist.to_f64_()))
}

fn newton_refine<T: Scalar>(
    ev: &PhiEvaluator<'_, T>,
    start: Cx<T>,
    zbox: &ZBox<T>,
) -> Result<Option<(Cx<T>, T, usize)>> {
    let mut z = start;
    let margin = zbox.diameter();
    for it in 0..50 {
        let (phi, dphi) = ev.eval(z)?;
        if dphi.norm() == T::zero() {
            return Ok(None);
        }
        let step = phi / dphi;
        z = z - step;
        // diverged out of the neighborhood
        if (z - zbox.center()).norm() > zbox.diameter() + margin {
            return Ok(None);
        }
        if step.norm() <= ev.tol * (T::one() + z.norm()) {
            let (phi, dphi) = ev.eval(z)?;
            let scale = T::one() + dphi.norm();
            if phi.norm() <= T::of(100.0) * ev.tol * scale {
                return Ok(Some((z, phi.norm(), it + 1)));
            }
        }
    }
    Ok(None)
}

/// Sampling fallback when Newton fails: minimize `|Phi|` along the box
/// diagonal by golden-section refinement of the best sample.
fn diagonal_fallback<T: Scalar>(
    ev: &PhiEvaluator<'_, T>,
    zbox: &ZBox<T>,
) -> Result<(Cx<T>, T)> {
    let a = Cx::new(zbox.re_min, zbox.im_min);
    let b = Cx::new(zbox.re_max, zbox.im_max);
    let f = |u: T| -> Result<T> {
        let z = a + (b - a).scale(u);
        Ok(ev.eval(z)?.0.norm())
    };
    let mut best_u = T::zero();
    let mut best = T::infinity();
    let n = 64;
    for k in 0..=n {
        let u = T::from_usize_(k) / T::from_usize_(n);
        let v = f(u)?;
        if v < best {
            best = v;
            best_u = u;
        }
    }
    let mut lo = (best_u - T::of(0.02)).max(T::zero());
    let mut hi = (best_u + T::of(0.02)).min(T::one());
    for _ in 0..60 {
        let m1 = lo + (hi - lo) * T::of(0.382);
        let m2 = lo + (hi - lo) * T::of(0.618);
        if f(m1)? < f(m2)? {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let u = (lo + hi) / T::of(2.0);
    let z = a + (b - a).scale(u);
    Ok((z, f(u)?))
}

/// Locate all zeros in a box: recursive subdivision until each sub-box has
/// winding at most 1, then Newton refinement; unsplittable clusters are
/// reported with multiplicity flags.
pub fn locate_zeros<T: Scalar>(
    zbox: &ZBox<T>,
    coeffs: &OdeCoefficients<T>,
    tol: T,
) -> Result<ZeroCertificate<T>> {
    let ev = PhiEvaluator { coeffs, tol: check_tol(tol)? };
    let (total, outer_box) = winding_with_nudging(&ev, zbox)?;
    let mut zeros: Vec<RefinedZero<T>> = Vec::new();
    if total != 0 {
        let mut queue: Vec<(ZBox<T>, usize)> = vec![(outer_box, 0)];
        while let Some((b, depth)) = queue.pop() {
            let (w, b_used) = winding_with_nudging(&ev, &b)?;
            if w == 0 {
                continue;
            }
            let min_size = ev.tol * T::of(100.0)
                + T::of(1e-10) * (T::one() + b_used.center().norm());
            if w == 1 {
                match newton_refine(&ev, b_used.center(), &b_used)? {
                    Some((z, residual, iters)) => {
                        zeros.push(RefinedZero {
                            re: z.re,
                            im: z.im,
                            residual,
                            newton_iterations: iters,
                            multiplicity: 1,
                            flagged: false,
                        });
                    }
                    None => {
                        let (z, residual) = diagonal_fallback(&ev, &b_used)?;
                        zeros.push(RefinedZero {
                            re: z.re,
                            im: z.im,
                            residual,
                            newton_iterations: 50,
                            multiplicity: 1,
                            flagged: true,
                        });
                    }
                }
                continue;
            }
            if b_used.diameter() < min_size || depth >= 48 {
                // unsplittable multiple zero (or cluster below resolution)
                let z = b_used.center();
                let (phi, _) = ev.eval(z)?;
                zeros.push(RefinedZero {
                    re: z.re,
                    im: z.im,
                    residual: phi.norm(),
                    newton_iterations: 0,
                    multiplicity: w.unsigned_abs() as usize,
                    flagged: true,
                });
                continue;
            }
            let jitter = T::of(0.0173) * T::from_usize_((depth % 5) + 1) / T::of(5.0);
            for q in b_used.quadrants(jitter) {
                queue.push((q, depth + 1));
            }
        }
    }
    // deduplicate refinements that converged to the same zero from adjacent boxes
    zeros.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut dedup: Vec<RefinedZero<T>> = Vec::new();
    for z in zeros {
        if let Some(last) = dedup.last() {
            let dist = (z.re - last.re).hypot(z.im - last.im);
            if dist <= T::of(10.0) * ev.tol * (T::one() + z.re.hypot(z.im)) {
                continue;
            }
        }
        dedup.push(z);
    }
    let counted: usize = dedup.iter().map(|z| z.multiplicity).sum();
    if counted as i64 != total {
        return Err(Error::CertificateMismatch { winding: total, zeros: counted });
    }
    Ok(ZeroCertificate { zbox: *zbox, winding: total, zeros: dedup })
}

/// One exceptional exponent with its witnessing zero.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExceptionalEntry<T: Scalar> {
    pub s: T,
    pub zeta_re: T,
    pub zeta_im: T,
    pub residual: T,
}

/// Exceptional Sobolev exponents found in a strip, with the searched region
/// recorded so the truncation is explicit.
#[derive(Clone, Debug, Serialize)]
pub struct ExceptionalExponents<T: Scalar> {
    pub entries: Vec<ExceptionalEntry<T>>,
    pub searched_strip: ZBox<T>,
    pub gamma_max: T,
}

/// Scan the strip `Re zeta in [s_min - 1/2, s_max - 1/2]`,
/// `|Im zeta| <= gamma_max` and map zeros to exponents `s = Re zeta + 1/2`.
pub fn exceptional_sobolev<T: Scalar>(
    s_min: T,
    s_max: T,
    gamma_max: T,
    coeffs: &OdeCoefficients<T>,
    tol: T,
) -> Result<ExceptionalExponents<T>> {
    if s_min < T::zero() || !(s_max > s_min) {
        return Err(Error::EmptyRange(format!(
            "s range [{}, {}]",
            s_min.to_f64_(),
            s_max.to_f64_()
        )));
    }
    let half = T::of(0.5);
    let strip = ZBox::new(s_min - half, s_max - half, -gamma_max, gamma_max)?;
    let cert = locate_zeros(&strip, coeffs, tol)?;
    let mut entries: Vec<ExceptionalEntry<T>> = cert
        .zeros
        .iter()
        .map(|z| ExceptionalEntry {
            s: z.re + half,
            zeta_re: z.re,
            zeta_im: z.im,
            residual: z.residual,
        })
        .collect();
    entries.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
    // deduplicate exponents witnessed by conjugate zero pairs
    let mut dedup: Vec<ExceptionalEntry<T>> = Vec::new();
    for e in entries {
        if let Some(last) = dedup.last() {
            if (e.s - last.s).abs() <= tol * T::of(10.0) * (T::one() + e.s.abs()) {
                continue;
            }
        }
        dedup.push(e);
    }
    Ok(ExceptionalExponents { entries: dedup, searched_strip: strip, gamma_max })
}

// ---- Dirichlet discretization and smallest singular value ----

/// Dirichlet discretization of `H_zeta` on the `n` interior nodes of `I`.
pub fn dirichlet_matrix<T: Scalar>(
    zeta: Cx<T>,
    coeffs: &OdeCoefficients<T>,
    n: usize,
) -> Tridiagonal<T> {
    let r = coeffs.r;
    let h = (r + r) / T::from_usize_(n + 1);
    let hop = assemble_h(zeta, coeffs);
    let inv_h2 = T::one() / (h * h);
    let inv_2h = T::one() / (h + h);
    let zero = Cx::new(T::zero(), T::zero());
    let mut sub = vec![zero; n];
    let mut diag = vec![zero; n];
    let mut sup = vec![zero; n];
    for i in 0..n {
        let x = -r + h * T::from_usize_(i + 1);
        let p = hop.p(x);
        let q = hop.q(x);
        diag[i] = cre(-T::of(2.0) * inv_h2) + q;
        if i > 0 {
            sub[i] = cre(inv_h2 - p * inv_2h);
        }
        if i + 1 < n {
            sup[i] = cre(inv_h2 + p * inv_2h);
        }
    }
    Tridiagonal { sub, diag, sup }
}

/// Smallest singular value of the Dirichlet discretization.
#[derive(Clone, Copy, Debug)]
pub struct SigmaMin<T> {
    pub value: T,
    pub iterations: usize,
    pub singular_flag: bool,
}

pub fn dirichlet_sigma_min<T: Scalar>(
    zeta: Cx<T>,
    coeffs: &OdeCoefficients<T>,
    n: usize,
) -> Result<SigmaMin<T>> {
    if n < 64 {
        return Err(Error::GridTooCoarse(format!("sigma_min needs n >= 64, got {n}")));
    }
    let m = dirichlet_matrix(zeta, coeffs, n);
    let r = smallest_singular_value(&m, 600, T::of(1e-11));
    Ok(SigmaMin { value: r.sigma_min, iterations: r.iterations, singular_flag: r.singular_flag })
}
