//! Worm-domain boundary geometry: the defining function, the boundary chart,
//! the CR vector field coefficients and the Levi data, plus a pseudoconvexity
//! scan over the chart.
//!
//! Chart coordinates are `(x, theta, t)` with `z2 = e^{x + i theta}` and
//! `z1 = e^{i 2x} (e^{it} (1 - phi(2x)) - 1)`. The flat half-width `r_flat`
//! is half of the profile's vanishing interval, so the exceptional annulus is
//! `{t = 0, |x| <= r_flat}` in the chart.

use crate::error::{Error, Result};
use crate::scalar::{cis, Cx, Scalar};
use crate::util::linspace_sym;
use serde::Serialize;

/// Parameters of the bump profile
/// `phi(u) = amplitude * exp(-sharpness / (|u| - 2 r_flat)^2)` for
/// `|u| > 2 r_flat`, identically zero otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhiParams<T: Scalar> {
    pub amplitude: T,
    pub sharpness: T,
}

/// Geometric configuration of the worm chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WormConfig<T: Scalar> {
    /// Half-width of the Levi-flat interval in the `x`-chart.
    pub r_flat: T,
    /// Chart half-thickness in `t`.
    pub delta: T,
    pub phi: PhiParams<T>,
}

/// A point of the boundary chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint<T: Scalar> {
    pub x: T,
    pub theta: T,
    pub t: T,
}

/// Commutator coefficients at a chart point: `[Lbar, L] = i mu d_t + i nu Re Lbar`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeviData<T: Scalar> {
    pub mu: T,
    pub nu: T,
}

impl<T: Scalar> WormConfig<T> {
    pub fn new(r_flat: T, delta: T, phi: PhiParams<T>) -> Result<Self> {
        let cfg = Self { r_flat, delta, phi };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural validity. Pseudoconvexity of the profile is checked
    /// numerically by [`pseudoconvexity_scan`](Self::pseudoconvexity_scan),
    /// not here, so deliberately bad profiles can be scanned.
    pub fn validate(&self) -> Result<()> {
        if !(self.r_flat > T::zero()) {
            return Err(Error::InvalidWormConfig("r_flat must be positive".into()));
        }
        if !(self.delta > T::zero() && self.delta < T::PI()) {
            return Err(Error::InvalidWormConfig("delta must lie in (0, pi)".into()));
        }
        if !(self.phi.amplitude < T::one()) {
            return Err(Error::InvalidWormConfig(
                "phi amplitude must be < 1 so that 1 - phi stays positive".into(),
            ));
        }
        if !(self.phi.sharpness > T::zero()) {
            return Err(Error::InvalidWormConfig("phi sharpness must be positive".into()));
        }
        Ok(())
    }

    /// Default profile: passes the pseudoconvexity scan and keeps `phi`
    /// below 1e-14 on the whole chart box.
    pub fn standard() -> Self {
        Self {
            r_flat: T::of(0.5),
            delta: T::of(0.25),
            phi: PhiParams { amplitude: T::of(0.5), sharpness: T::of(2.0) },
        }
    }

    /// Chart half-width in `x`: `|x| < r_flat + delta/2`.
    pub fn x_half_width(&self) -> T {
        self.r_flat + self.delta / T::of(2.0)
    }

    pub fn chart_contains(&self, p: &ChartPoint<T>) -> bool {
        p.x.abs() <= self.x_half_width() && p.t.abs() <= self.delta
    }

    /// Profile value and first derivative at `u`. Exactly zero (not merely
    /// small) on `|u| <= 2 r_flat`.
    pub fn eval_phi(&self, u: T) -> (T, T) {
        let (p, dp, _) = self.eval_phi_full(u);
        (p, dp)
    }

    /// Profile with first and second derivatives.
    pub fn eval_phi_full(&self, u: T) -> (T, T, T) {
        let d = u.abs() - T::of(2.0) * self.r_flat;
        if d <= T::zero() {
            return (T::zero(), T::zero(), T::zero());
        }
        let s = self.phi.sharpness;
        let e = (-s / (d * d)).exp();
        if e == T::zero() {
            // underflow region: the profile and all derivatives vanish
            return (T::zero(), T::zero(), T::zero());
        }
        let m = self.phi.amplitude;
        let phi = m * e;
        let d2 = d * d;
        let d3 = d2 * d;
        let d4 = d2 * d2;
        let d6 = d4 * d2;
        let dphi_dd = phi * T::of(2.0) * s / d3;
        let d2phi_dd2 = phi * (T::of(4.0) * s * s / d6 - T::of(6.0) * s / d4);
        let sign = if u >= T::zero() { T::one() } else { -T::one() };
        (phi, sign * dphi_dd, d2phi_dd2)
    }

    /// Defining function `rho = 1 - phi(log|z2|^2) - |z1 + e^{i log|z2|^2}|^2`;
    /// positive inside the domain.
    pub fn defining_function(&self, z1: Cx<T>, z2: Cx<T>) -> Result<T> {
        if z2.norm_sqr() == T::zero() {
            return Err(Error::ZeroZ2);
        }
        let u = z2.norm_sqr().ln();
        let (phi, _) = self.eval_phi(u);
        let w = z1 + cis(u);
        Ok(T::one() - phi - w.norm_sqr())
    }

    /// Boundary chart `(x, theta, t) -> (z1, z2)`.
    pub fn boundary_chart(&self, p: &ChartPoint<T>) -> (Cx<T>, Cx<T>) {
        let (phi, _) = self.eval_phi(T::of(2.0) * p.x);
        let z2 = cis(p.theta).scale(p.x.exp());
        let inner = cis(p.t).scale(T::one() - phi) - Cx::new(T::one(), T::zero());
        let z1 = cis(T::of(2.0) * p.x) * inner;
        (z1, z2)
    }

    /// The `d_t` coefficient of `Lbar = d_x + i d_theta + gamma d_t`:
    /// `gamma = 2 [e^{-it} - 1 + phi(2x) - i phi'(2x)] / [1 - phi(2x)]`.
    pub fn gamma_coefficient(&self, x: T, t: T) -> Result<Cx<T>> {
        let (phi, dphi) = self.eval_phi(T::of(2.0) * x);
        let denom = T::one() - phi;
        if !(denom > T::zero()) {
            return Err(Error::ProfileDenominator(denom.to_f64_()));
        }
        let num = cis(-t) - Cx::new(T::one(), T::zero()) + Cx::new(phi, -dphi);
        Ok(num.scale(T::of(2.0) / denom))
    }

    /// `alpha(t) = 2 (e^{-it} - 1) / (i t)` with the removable singularity at
    /// `t = 0` filled by its Taylor series; satisfies `i t alpha(t) = gamma`
    /// on the flat region and `alpha(0) = -2`.
    pub fn alpha_coefficient(&self, t: T) -> Cx<T> {
        alpha_series_or_closed(t)
    }

    /// Max of `|Lbar z1|` and `|Lbar z2|` at `p`, the field applied by central
    /// differences of the chart maps; O(h^2) for the correct `gamma`.
    pub fn cr_annihilation_residual(&self, p: &ChartPoint<T>, h: T) -> Result<T> {
        self.cr_residual_with_gamma(p, h, self.gamma_coefficient(p.x, p.t)?)
    }

    /// Same residual with an explicitly supplied `d_t` coefficient (negative
    /// controls pass a wrong one).
    pub fn cr_residual_with_gamma(&self, p: &ChartPoint<T>, h: T, gamma: Cx<T>) -> Result<T> {
        if !(h > T::zero()) || h > self.delta / T::of(8.0) {
            return Err(Error::StepTooLarge { step: h.to_f64_(), delta: self.delta.to_f64_() });
        }
        if !self.chart_contains(p) {
            return Err(Error::OutsideChart(format!(
                "({}, {}, {})",
                p.x.to_f64_(),
                p.theta.to_f64_(),
                p.t.to_f64_()
            )));
        }
        let two_h = h + h;
        let diff = |f: &dyn Fn(&ChartPoint<T>) -> Cx<T>| -> Cx<T> {
            let dx = (f(&ChartPoint { x: p.x + h, ..*p }) - f(&ChartPoint { x: p.x - h, ..*p }))
                .unscale(two_h);
            let dth = (f(&ChartPoint { theta: p.theta + h, ..*p })
                - f(&ChartPoint { theta: p.theta - h, ..*p }))
            .unscale(two_h);
            let dt = (f(&ChartPoint { t: p.t + h, ..*p }) - f(&ChartPoint { t: p.t - h, ..*p }))
                .unscale(two_h);
            dx + Cx::new(T::zero(), T::one()) * dth + gamma * dt
        };
        let r1 = diff(&|q| self.boundary_chart(q).0).norm();
        let r2 = diff(&|q| self.boundary_chart(q).1).norm();
        Ok(r1.max(r2))
    }

    /// Levi coefficients from the commutator `[Lbar, L] = (Lbar conj(gamma) -
    /// L gamma) d_t`, evaluated with closed-form derivatives of `gamma`. In
    /// these chart fields the `Re Lbar` component vanishes identically, so
    /// `nu = 0`.
    pub fn levi_coefficients(&self, x: T, t: T) -> Result<LeviData<T>> {
        let (phi, dphi, d2phi) = self.eval_phi_full(T::of(2.0) * x);
        let denom = T::one() - phi;
        if !(denom > T::zero()) {
            return Err(Error::ProfileDenominator(denom.to_f64_()));
        }
        let two = T::of(2.0);
        let one = Cx::new(T::one(), T::zero());
        // gamma = 2 N / D with N = e^{-it} - 1 + phi - i phi', D = 1 - phi
        let n = cis(-t) - one + Cx::new(phi, -dphi);
        // d/dx: phi(2x) terms pick up a factor 2
        let dn_dx = Cx::new(two * dphi, -two * d2phi);
        let dd_dx = -two * dphi;
        let dgamma_dx = (dn_dx.scale(denom) - n.scale(dd_dx)).scale(two / (denom * denom));
        let dgamma_dt = (Cx::new(T::zero(), -T::one()) * cis(-t)).scale(two / denom);
        let gamma_bar = n.conj().scale(two / denom);
        let mu = -two * dgamma_dx.im - two * (gamma_bar * dgamma_dt).im;
        Ok(LeviData { mu, nu: T::zero() })
    }

    /// Scan `mu` over a symmetric chart grid (`nx x nt` nodes; for odd counts
    /// the flat segment `t = 0` and `x = 0` land exactly on nodes).
    pub fn pseudoconvexity_scan(&self, nx: usize, nt: usize, tol: T) -> Result<ScanReport<T>> {
        if nx < 3 || nt < 3 {
            return Err(Error::GridTooCoarse("scan needs at least 3x3 nodes".into()));
        }
        let xs = linspace_sym(self.x_half_width(), nx);
        let ts = linspace_sym(self.delta, nt);
        let mut samples = Vec::with_capacity(nx * nt);
        let mut min_mu = T::infinity();
        let mut argmin = (T::zero(), T::zero());
        let mut violations = Vec::new();
        let mut flat_exact = true;
        for &x in &xs {
            for &t in &ts {
                let levi = self.levi_coefficients(x, t)?;
                if levi.mu < min_mu {
                    min_mu = levi.mu;
                    argmin = (x, t);
                }
                if levi.mu < -tol {
                    violations.push(ScanSample { x, t, mu: levi.mu, nu: levi.nu });
                }
                if t == T::zero() && x.abs() <= self.r_flat && levi.mu != T::zero() {
                    flat_exact = false;
                }
                samples.push(ScanSample { x, t, mu: levi.mu, nu: levi.nu });
            }
        }
        Ok(ScanReport { min_mu, argmin, violations, tol, flat_exact, samples })
    }
}

/// One grid sample of the Levi scan.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanSample<T: Scalar> {
    pub x: T,
    pub t: T,
    pub mu: T,
    pub nu: T,
}

/// Result of a pseudoconvexity scan; violations are reported, not fatal.
#[derive(Clone, Debug, Serialize)]
pub struct ScanReport<T: Scalar> {
    pub min_mu: T,
    pub argmin: (T, T),
    pub violations: Vec<ScanSample<T>>,
    pub tol: T,
    /// `mu == 0` exactly at every node with `t = 0`, `|x| <= r_flat`.
    pub flat_exact: bool,
    pub samples: Vec<ScanSample<T>>,
}

impl<T: Scalar> ScanReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.flat_exact
    }
}

/// `2 (e^{-it} - 1)/(it)`, switching to the Taylor series
/// `-2 sum_m (-it)^m / (m+1)!` below `|t| = 1e-3` to avoid cancellation.
fn alpha_series_or_closed<T: Scalar>(t: T) -> Cx<T> {
    if t.abs() < T::of(1e-3) {
        let mit = Cx::new(T::zero(), -t);
        let mut term = Cx::new(T::one(), T::zero());
        let mut acc = term;
        let mut fact = T::one();
        for m in 1..=8usize {
            term = term * mit;
            fact = fact * T::from_usize_(m + 1);
            acc += term.unscale(fact);
        }
        acc.scale(T::of(-2.0))
    } else {
        let num = cis(-t) - Cx::new(T::one(), T::zero());
        let den = Cx::new(T::zero(), t);
        (num / den).scale(T::of(2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type W = WormConfig<f64>;

    fn cfg() -> W {
        W::standard()
    }

    #[test]
    fn phi_vanishes_on_flat_interval() {
        let w = cfg();
        assert_eq!(w.eval_phi(0.0), (0.0, 0.0));
        assert_eq!(w.eval_phi(2.0 * w.r_flat), (0.0, 0.0));
        assert_eq!(w.eval_phi(-2.0 * w.r_flat), (0.0, 0.0));
    }

    #[test]
    fn phi_positive_beyond_flat_interval() {
        let w = cfg();
        // regression anchors for the shipped profile at h = 0.5
        let (p, dp) = w.eval_phi(2.0 * w.r_flat + 0.5);
        let d: f64 = 0.5;
        let expect_p = 0.5 * (-2.0 / (d * d)).exp();
        let expect_dp = expect_p * 2.0 * 2.0 / (d * d * d);
        assert!(p > 0.0 && dp > 0.0);
        assert_relative_eq!(p, expect_p, max_relative = 1e-14);
        assert_relative_eq!(dp, expect_dp, max_relative = 1e-14);
        // mirror symmetry: value even, derivative odd
        let (pm, dpm) = w.eval_phi(-(2.0 * w.r_flat + 0.5));
        assert_eq!(pm, p);
        assert_eq!(dpm, -dp);
    }

    #[test]
    fn phi_second_derivative_matches_finite_differences() {
        let w = cfg();
        let u = 2.0 * w.r_flat + 0.3;
        let h = 1e-5;
        let (_, dp_minus) = w.eval_phi(u - h);
        let (_, dp_plus) = w.eval_phi(u + h);
        let (_, _, d2) = w.eval_phi_full(u);
        assert_relative_eq!(d2, (dp_plus - dp_minus) / (2.0 * h), max_relative = 1e-6);
    }

    #[test]
    fn defining_function_examples() {
        let w = cfg();
        let o = Cx::new(0.0, 0.0);
        let one = Cx::new(1.0, 0.0);
        assert_eq!(w.defining_function(o, one).unwrap(), 0.0);
        assert_relative_eq!(
            w.defining_function(Cx::new(-0.5, 0.0), one).unwrap(),
            0.75,
            max_relative = 1e-15
        );
        // z1 = 0 with |log|z2|^2| beyond the flat interval: rho = -phi < 0
        let u = 2.0 * w.r_flat + 0.2;
        let z2 = Cx::new((u / 2.0).exp(), 0.0);
        let rho = w.defining_function(o, z2).unwrap();
        let (phi, _) = w.eval_phi(u);
        assert!(rho < 0.0);
        assert_relative_eq!(rho, -phi, max_relative = 1e-9);
        assert!(w.defining_function(one, o).is_err());
    }

    #[test]
    fn chart_examples() {
        let w = cfg();
        let (z1, z2) = w.boundary_chart(&ChartPoint { x: 0.0, theta: 0.0, t: 0.0 });
        assert_eq!(z1, Cx::new(0.0, 0.0));
        assert_eq!(z2, Cx::new(1.0, 0.0));
        // flat region, t = 0: points of the exceptional annulus
        let p = ChartPoint { x: 0.3, theta: 0.7, t: 0.0 };
        let (z1, z2) = w.boundary_chart(&p);
        assert!(z1.norm() < 1e-15);
        assert_relative_eq!(z2.norm(), (0.3f64).exp(), max_relative = 1e-14);
        // (0, 0, t): z1 = e^{it} - 1 with |z1 + 1| = 1
        let p = ChartPoint { x: 0.0, theta: 0.0, t: 0.2 };
        let (z1, _) = w.boundary_chart(&p);
        assert_relative_eq!((z1 + Cx::new(1.0, 0.0)).norm(), 1.0, max_relative = 1e-14);
        let rho = w.defining_function(z1, Cx::new(1.0, 0.0)).unwrap();
        assert!(rho.abs() < 1e-15);
    }

    #[test]
    fn chart_consistency_over_grid() {
        let w = cfg();
        for &x in &crate::util::linspace_sym(w.x_half_width(), 31) {
            for &t in &crate::util::linspace_sym(w.delta, 31) {
                let p = ChartPoint { x, theta: 0.4, t };
                let (z1, z2) = w.boundary_chart(&p);
                let rho = w.defining_function(z1, z2).unwrap();
                let scale = 1.0 + z1.norm_sqr() + z2.norm_sqr();
                assert!(
                    rho.abs() / scale <= 1e-12,
                    "rho = {rho} at x = {x}, t = {t}"
                );
            }
        }
    }

    #[test]
    fn gamma_on_flat_region() {
        let w = cfg();
        for t in [-0.2, 0.0, 0.1, 0.24] {
            let g = w.gamma_coefficient(0.3, t).unwrap();
            let expect = (cis(-t) - Cx::new(1.0, 0.0)).scale(2.0);
            assert!((g - expect).norm() < 1e-14);
        }
        assert!(w.gamma_coefficient(0.2, 0.0).unwrap().norm() < 1e-15);
    }

    #[test]
    fn gamma_off_flat_matches_independent_evaluation() {
        let w = cfg();
        let x = w.r_flat + 0.1;
        let t = 0.15;
        let g = w.gamma_coefficient(x, t).unwrap();
        // independent arithmetic path: real and imaginary parts separately
        let (phi, dphi) = w.eval_phi(2.0 * x);
        let re = 2.0 * ((t).cos() - 1.0 + phi) / (1.0 - phi);
        let im = 2.0 * (-(t).sin() - dphi) / (1.0 - phi);
        assert_relative_eq!(g.re, re, max_relative = 1e-13);
        assert_relative_eq!(g.im, im, max_relative = 1e-13, epsilon = 1e-16);
    }

    #[test]
    fn alpha_taylor_and_identity() {
        let w = cfg();
        let a0 = w.alpha_coefficient(0.0);
        assert_eq!(a0.re, -2.0);
        assert_eq!(a0.im, 0.0);
        // alpha(t) = -2 + it + O(t^2)
        let t = 1e-4;
        let a = w.alpha_coefficient(t);
        assert!((a - Cx::new(-2.0, t)).norm() < 1e-7);
        // i t alpha(t) = 2(e^{-it} - 1) across the series switchover
        for &t in &crate::util::linspace_sym(w.delta, 2001) {
            let a = w.alpha_coefficient(t);
            let lhs = Cx::new(0.0, t) * a;
            let rhs = (cis(-t) - Cx::new(1.0, 0.0)).scale(2.0);
            assert!((lhs - rhs).norm() <= 1e-12, "t = {t}");
        }
    }

    #[test]
    fn cr_residual_second_order() {
        let w = cfg();
        let points = [
            ChartPoint { x: 0.0, theta: 0.0, t: 0.0 },
            ChartPoint { x: 0.3, theta: 0.5, t: 0.1 },
            ChartPoint { x: -0.55, theta: 1.0, t: -0.12 },
        ];
        for p in &points {
            let r1 = w.cr_annihilation_residual(p, 1e-4).unwrap();
            assert!(r1 <= 1e-7, "residual {r1} at {p:?}");
            let r2 = w.cr_annihilation_residual(p, 5e-5).unwrap();
            // halving h reduces a second-order residual by about 4
            assert!(r2 <= r1 / 2.0 || r1 < 1e-11, "r1 = {r1}, r2 = {r2}");
        }
    }

    #[test]
    fn cr_residual_negative_control() {
        let w = cfg();
        let p = ChartPoint { x: 0.1, theta: 0.2, t: 0.05 };
        let wrong = w.gamma_coefficient(p.x, p.t).unwrap() + Cx::new(1.0, 0.0);
        let r = w.cr_residual_with_gamma(&p, 1e-4, wrong).unwrap();
        assert!(r > 1e-3, "wrong gamma must not annihilate: {r}");
    }

    #[test]
    fn cr_residual_rejects_large_step() {
        let w = cfg();
        let p = ChartPoint { x: 0.0, theta: 0.0, t: 0.0 };
        assert!(w.cr_annihilation_residual(&p, 0.2).is_err());
    }

    #[test]
    fn levi_flat_region_oracle() {
        let w = cfg();
        for &x in &[-0.4, 0.0, 0.25] {
            for &t in &[-0.2, -0.05, 0.0, 0.1, 0.24] {
                let l = w.levi_coefficients(x, t).unwrap();
                assert!((l.mu - 8.0 * (1.0 - t.cos())).abs() < 1e-10, "x={x}, t={t}");
                assert_eq!(l.nu, 0.0);
            }
        }
        assert_eq!(w.levi_coefficients(0.2, 0.0).unwrap().mu, 0.0);
    }

    #[test]
    fn levi_matches_finite_difference_commutator() {
        // independent oracle: mu from central differences of gamma
        let w = cfg();
        let h = 1e-5;
        for &(x, t) in &[(0.3, 0.1), (0.55, -0.12), (0.6, 0.2)] {
            let g = |x: f64, t: f64| w.gamma_coefficient(x, t).unwrap();
            let dg_dx = (g(x + h, t) - g(x - h, t)).unscale(2.0 * h);
            let dg_dt = (g(x, t + h) - g(x, t - h)).unscale(2.0 * h);
            let mu_fd = -2.0 * dg_dx.im - 2.0 * (g(x, t).conj() * dg_dt).im;
            let l = w.levi_coefficients(x, t).unwrap();
            assert_relative_eq!(l.mu, mu_fd, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn scan_flat_grid() {
        let w = cfg();
        let report = w.pseudoconvexity_scan(41, 41, 1e-10).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations.len());
        assert_eq!(report.min_mu, 0.0);
        assert_eq!(report.argmin.1, 0.0);
    }

    #[test]
    fn scan_negative_control() {
        // concave profile: negative amplitude with a soft wall
        let w = W {
            r_flat: 0.5,
            delta: 0.25,
            phi: PhiParams { amplitude: -0.5, sharpness: 0.5 },
        };
        let report = w.pseudoconvexity_scan(41, 41, 1e-10).unwrap();
        assert!(!report.violations.is_empty(), "min mu = {}", report.min_mu);
        assert!(report.min_mu < -1e-6);
    }

    #[test]
    fn rotation_invariance() {
        let w = cfg();
        let z1 = Cx::new(-0.3, 0.4);
        let z2 = Cx::new(0.9, -0.2);
        let base = w.defining_function(z1, z2).unwrap();
        for &theta in &[0.1, 1.0, 2.5, -0.7] {
            let rotated = w.defining_function(z1, cis(theta) * z2).unwrap();
            assert_relative_eq!(rotated, base, max_relative = 1e-12, epsilon = 1e-13);
        }
    }
}
