//! Partial Mellin transform in `t` on log-spaced grids: forward/inverse
//! quadrature, Plancherel on the base and shifted lines, the dilation symbol
//! rule `(t d_t f)^ = i gamma f^`, the half-power shift identity, and the
//! conjugation of the 2-D model family into the ODE family.
//!
//! Conventions: forward kernel `t^{-i gamma} dt/t` evaluated at `gamma + i
//! offset`; inversion and Plancherel constants are both `1/(2 pi)`.

use crate::error::{Error, Result};
use crate::fourier::spectral_derivative;
use crate::operators::{assemble_call, AChoice, GridSpec, OdeCoefficients, TAxis};
use crate::scalar::{cis, Cx, Scalar};
use crate::shooting::h_apply_grid;
use crate::util::{linspace, smoothstep5, trapezoid_weights};

/// Log-spaced `t` grid paired with a symmetric `gamma` grid.
#[derive(Clone, Debug)]
pub struct MellinGrid<T: Scalar> {
    pub t_min: T,
    pub t_max: T,
    pub nt: usize,
    pub gamma_max: T,
    pub ngamma: usize,
}

impl<T: Scalar> MellinGrid<T> {
    pub fn new(t_min: T, t_max: T, nt: usize, gamma_max: T, ngamma: usize) -> Result<Self> {
        let g = Self { t_min, t_max, nt, gamma_max, ngamma };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > T::zero() && self.t_max > self.t_min) {
            return Err(Error::InvalidMellinGrid("need 0 < t_min < t_max".into()));
        }
        if self.nt < 32 {
            return Err(Error::InvalidMellinGrid(format!("nt = {} < 32", self.nt)));
        }
        if self.ngamma < 16 {
            return Err(Error::InvalidMellinGrid(format!("ngamma = {} < 16", self.ngamma)));
        }
        if !(self.gamma_max > T::zero()) {
            return Err(Error::InvalidMellinGrid("gamma_max must be positive".into()));
        }
        // Nyquist relation: the gamma spacing must resolve the log-t span
        let dgamma = self.dgamma();
        let bound = T::PI() / self.lambda_span();
        if dgamma > bound {
            return Err(Error::InvalidMellinGrid(format!(
                "gamma spacing {} exceeds Nyquist bound {} for log-span {}",
                dgamma.to_f64_(),
                bound.to_f64_(),
                self.lambda_span().to_f64_()
            )));
        }
        Ok(())
    }

    pub fn lambda_span(&self) -> T {
        self.t_max.ln() - self.t_min.ln()
    }

    pub fn dlambda(&self) -> T {
        self.lambda_span() / T::from_usize_(self.nt - 1)
    }

    pub fn dgamma(&self) -> T {
        (self.gamma_max + self.gamma_max) / T::from_usize_(self.ngamma - 1)
    }

    pub fn lambda_nodes(&self) -> Vec<T> {
        linspace(self.t_min.ln(), self.t_max.ln(), self.nt)
    }

    pub fn t_nodes(&self) -> Vec<T> {
        self.lambda_nodes().into_iter().map(|l| l.exp()).collect()
    }

    pub fn gamma_nodes(&self) -> Vec<T> {
        linspace(-self.gamma_max, self.gamma_max, self.ngamma)
    }

    /// Sample a scalar function of `t` on the grid.
    pub fn sample(&self, f: impl Fn(T) -> T) -> Vec<Cx<T>> {
        self.t_nodes().into_iter().map(|t| Cx::new(f(t), T::zero())).collect()
    }
}

/// Windowing of non-decaying inputs: smooth cosine-like taper over the first
/// and last decade of the `t` grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    None,
    Taper,
}

/// Transform values on the `gamma` grid at a fixed strip offset.
#[derive(Clone, Debug)]
pub struct MellinSample<T: Scalar> {
    pub gammas: Vec<T>,
    pub values: Vec<Cx<T>>,
    /// Imaginary part of the evaluation line: values are `f^(gamma + i offset)`.
    pub offset: T,
}

fn taper_weights<T: Scalar>(grid: &MellinGrid<T>) -> Vec<T> {
    let decade = T::of(std::f64::consts::LN_10);
    let l0 = grid.t_min.ln();
    let l1 = grid.t_max.ln();
    grid.lambda_nodes()
        .into_iter()
        .map(|l| smoothstep5((l - l0) / decade) * smoothstep5((l1 - l) / decade))
        .collect()
}

fn decay_ratio<T: Scalar>(f: &[Cx<T>]) -> T {
    let max = f.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if max == T::zero() {
        return T::zero();
    }
    let ends = f[..2.min(f.len())]
        .iter()
        .chain(f[f.len().saturating_sub(2)..].iter())
        .map(|z| z.norm())
        .fold(T::zero(), T::max);
    ends / max
}

fn windowed<T: Scalar>(grid: &MellinGrid<T>, f: &[Cx<T>], window: Window) -> Result<Vec<Cx<T>>> {
    if f.len() != grid.nt {
        return Err(Error::ShapeMismatch(format!("{} samples on {}-node grid", f.len(), grid.nt)));
    }
    match window {
        Window::Taper => {
            let w = taper_weights(grid);
            Ok(f.iter().zip(w).map(|(z, wi)| z.scale(wi)).collect())
        }
        Window::None => {
            let ratio = decay_ratio(f);
            if ratio > T::of(1e-6) {
                return Err(Error::NonDecaying(ratio.to_f64_()));
            }
            Ok(f.to_vec())
        }
    }
}

/// Forward transform: `f^(gamma + i offset) = int f(t) t^{offset - i gamma}
/// dt/t` by trapezoid quadrature in `log t`.
pub fn mellin_forward<T: Scalar>(
    grid: &MellinGrid<T>,
    f: &[Cx<T>],
    offset: T,
    window: Window,
) -> Result<MellinSample<T>> {
    grid.validate()?;
    let f = windowed(grid, f, window)?;
    let lambdas = grid.lambda_nodes();
    let w = trapezoid_weights(grid.nt, grid.dlambda());
    // fold the measure and the real-power factor into the samples
    let weighted: Vec<Cx<T>> = f
        .iter()
        .zip(lambdas.iter())
        .zip(w.iter())
        .map(|((z, &l), &wi)| z.scale(wi * (offset * l).exp()))
        .collect();
    let gammas = grid.gamma_nodes();
    let values = gammas
        .iter()
        .map(|&g| {
            let mut acc = Cx::new(T::zero(), T::zero());
            for (z, &l) in weighted.iter().zip(lambdas.iter()) {
                acc += z * cis(-g * l);
            }
            acc
        })
        .collect();
    Ok(MellinSample { gammas, values, offset })
}

/// Inverse transform `f(t) = t^{-offset} (1/2pi) int f^(gamma + i offset)
/// t^{i gamma} dgamma` back onto the `t` nodes.
pub fn mellin_inverse<T: Scalar>(grid: &MellinGrid<T>, sample: &MellinSample<T>) -> Result<Vec<Cx<T>>> {
    grid.validate()?;
    if sample.values.len() != grid.ngamma {
        return Err(Error::ShapeMismatch(format!(
            "{} transform values on {}-node gamma grid",
            sample.values.len(),
            grid.ngamma
        )));
    }
    let wg = trapezoid_weights(grid.ngamma, grid.dgamma());
    let inv_2pi = T::one() / (T::of(2.0) * T::PI());
    Ok(grid
        .lambda_nodes()
        .into_iter()
        .map(|l| {
            let mut acc = Cx::new(T::zero(), T::zero());
            for ((z, &g), &wi) in sample.values.iter().zip(sample.gammas.iter()).zip(wg.iter()) {
                acc += z.scale(wi) * cis(g * l);
            }
            acc.scale(inv_2pi * (-sample.offset * l).exp())
        })
        .collect())
}

/// Relative round-trip error of forward-then-inverse at offset 0.
pub fn roundtrip_defect<T: Scalar>(grid: &MellinGrid<T>, f: &[Cx<T>], window: Window) -> Result<T> {
    let fwd = mellin_forward(grid, f, T::zero(), window)?;
    let back = mellin_inverse(grid, &fwd)?;
    let wl = trapezoid_weights(grid.nt, grid.dlambda());
    let norm: T = f.iter().zip(wl.iter()).map(|(z, &w)| z.norm_sqr() * w).sum::<T>().sqrt();
    if norm == T::zero() {
        return Ok(T::zero());
    }
    let err: T = f
        .iter()
        .zip(back.iter())
        .zip(wl.iter())
        .map(|((a, b), &w)| (a - b).norm_sqr() * w)
        .sum::<T>()
        .sqrt();
    Ok(err / norm)
}

/// Plancherel defects on both lines.
#[derive(Clone, Copy, Debug)]
pub struct PlancherelDefect<T> {
    /// `int |f|^2 dt/t` versus `1/(2 pi) int |f^(gamma)|^2 dgamma`.
    pub line_zero: T,
    /// `int |f|^2 dt` versus `1/(2 pi) int |f^(gamma + i/2)|^2 dgamma`.
    pub shifted: T,
}

pub fn plancherel_defect<T: Scalar>(
    grid: &MellinGrid<T>,
    f: &[Cx<T>],
    window: Window,
) -> Result<PlancherelDefect<T>> {
    let wl = trapezoid_weights(grid.nt, grid.dlambda());
    let ts = grid.t_nodes();
    let wg = trapezoid_weights(grid.ngamma, grid.dgamma());
    let inv_2pi = T::one() / (T::of(2.0) * T::PI());

    let lhs0: T = f.iter().zip(wl.iter()).map(|(z, &w)| z.norm_sqr() * w).sum();
    let f0 = mellin_forward(grid, f, T::zero(), window)?;
    let rhs0: T =
        f0.values.iter().zip(wg.iter()).map(|(z, &w)| z.norm_sqr() * w).sum::<T>() * inv_2pi;

    let lhs1: T = f
        .iter()
        .zip(wl.iter())
        .zip(ts.iter())
        .map(|((z, &w), &t)| z.norm_sqr() * w * t)
        .sum();
    let fh = mellin_forward(grid, f, T::of(0.5), window)?;
    let rhs1: T =
        fh.values.iter().zip(wg.iter()).map(|(z, &w)| z.norm_sqr() * w).sum::<T>() * inv_2pi;

    let rel = |lhs: T, rhs: T| if lhs == T::zero() { T::zero() } else { (lhs - rhs).abs() / lhs };
    Ok(PlancherelDefect { line_zero: rel(lhs0, rhs0), shifted: rel(lhs1, rhs1) })
}

/// `|| (t d_t f)^ - i gamma f^ || / || f^ ||` with the dilation derivative
/// taken spectrally in `log t`.
pub fn tdt_symbol_defect<T: Scalar>(grid: &MellinGrid<T>, f: &[Cx<T>], window: Window) -> Result<T> {
    let f = windowed(grid, f, window)?;
    let d = spectral_derivative(&f, grid.dlambda());
    let df = mellin_forward(grid, &d, T::zero(), Window::Taper)?;
    let ff = mellin_forward(grid, &f, T::zero(), Window::Taper)?;
    let wg = trapezoid_weights(grid.ngamma, grid.dgamma());
    let norm: T = ff.values.iter().zip(wg.iter()).map(|(z, &w)| z.norm_sqr() * w).sum::<T>().sqrt();
    if norm == T::zero() {
        return Ok(T::zero());
    }
    let err: T = df
        .values
        .iter()
        .zip(ff.values.iter())
        .zip(ff.gammas.iter())
        .zip(wg.iter())
        .map(|(((d, f), &g), &w)| (d - f * Cx::new(T::zero(), g)).norm_sqr() * w)
        .sum::<T>()
        .sqrt();
    Ok(err / norm)
}

/// Relative sup difference between `(t^{1/2} f)^(gamma)` and `f^(gamma + i/2)`.
pub fn shift_identity_defect<T: Scalar>(
    grid: &MellinGrid<T>,
    f: &[Cx<T>],
    window: Window,
) -> Result<T> {
    let ts = grid.t_nodes();
    let shifted_samples: Vec<Cx<T>> =
        f.iter().zip(ts.iter()).map(|(z, &t)| z.scale(t.sqrt())).collect();
    let a = mellin_forward(grid, &shifted_samples, T::zero(), window)?;
    let b = mellin_forward(grid, f, T::of(0.5), window)?;
    let sup_b = b.values.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if sup_b == T::zero() {
        return Ok(T::zero());
    }
    let sup_diff = a
        .values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(T::zero(), T::max);
    Ok(sup_diff / sup_b)
}

/// Conjugation defect: for separable `u = f(x) g(t)` on a log-axis grid,
/// compares the Mellin transform of `calL_s u` row by row against
/// `H_{sign*s + i gamma}` applied to `f(x) g^(gamma)`. Returns the sup over
/// gamma nodes of the relative x-slice error; slices where `u^` vanishes are
/// skipped.
pub fn conjugation_defect<T: Scalar>(
    gspec: &GridSpec<T>,
    f_x: &[Cx<T>],
    g_t: &[Cx<T>],
    s: T,
    coeffs: &OdeCoefficients<T>,
    gammas: &[T],
) -> Result<T> {
    match gspec.t_axis {
        TAxis::LogHalfLine { .. } => {}
        _ => return Err(Error::InvalidGrid("conjugation requires a log-spaced t axis".into())),
    }
    if f_x.len() != gspec.nx || g_t.len() != gspec.nt {
        return Err(Error::ShapeMismatch("separable factors do not match the grid".into()));
    }
    let op = assemble_call(s, coeffs, gspec, AChoice::Zero, T::zero())?;
    let u: Vec<Cx<T>> = {
        let mut u = Vec::with_capacity(gspec.len());
        for fx in f_x {
            for gt in g_t {
                u.push(fx * gt);
            }
        }
        u
    };
    let lu = op.apply(&u);
    let lambdas: Vec<T> = gspec.t_nodes().iter().map(|&t| t.ln()).collect();
    let wl = trapezoid_weights(gspec.nt, gspec.t_spacing());
    let xs = gspec.x_nodes();
    let dx = gspec.dx();

    // row-wise Mellin transform at a single gamma
    let transform_rows = |rows: &[Cx<T>], gamma: T| -> Vec<Cx<T>> {
        (0..gspec.nx)
            .map(|i| {
                let mut acc = Cx::new(T::zero(), T::zero());
                for j in 0..gspec.nt {
                    acc += rows[gspec.idx(i, j)].scale(wl[j]) * cis(-gamma * lambdas[j]);
                }
                acc
            })
            .collect()
    };
    let g_hat = |gamma: T| -> Cx<T> {
        let mut acc = Cx::new(T::zero(), T::zero());
        for j in 0..gspec.nt {
            acc += g_t[j].scale(wl[j]) * cis(-gamma * lambdas[j]);
        }
        acc
    };

    let sign = coeffs.sign_s.factor::<T>();
    let mut sup = T::zero();
    // floor to skip gamma slices with no transform mass
    let mut max_uhat = T::zero();
    let uhat_norms: Vec<T> = gammas
        .iter()
        .map(|&g| {
            let gh = g_hat(g);
            let n = (f_x.iter().map(|z| z.norm_sqr()).sum::<T>() * dx).sqrt() * gh.norm();
            max_uhat = max_uhat.max(n);
            n
        })
        .collect();
    for (k, &gamma) in gammas.iter().enumerate() {
        if uhat_norms[k] < T::of(1e-13) * max_uhat {
            continue;
        }
        let lhs = transform_rows(&lu, gamma);
        let zeta = Cx::new(sign * s, gamma);
        let gh = g_hat(gamma);
        let uhat: Vec<Cx<T>> = f_x.iter().map(|z| z * gh).collect();
        let rhs = h_apply_grid(zeta, coeffs, &xs, dx, &uhat);
        let mut num = T::zero();
        let mut den = T::zero();
        for i in 0..gspec.nx {
            num += (lhs[i] - rhs[i]).norm_sqr() * dx;
            den += uhat[i].norm_sqr() * dx;
        }
        let rel = num.sqrt() / den.sqrt();
        sup = sup.max(rel);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> MellinGrid<f64> {
        MellinGrid::new(1e-10, 50.0, 256, 25.0, 1001).unwrap()
    }

    #[test]
    fn nyquist_enforced() {
        // span ~ 27, bound ~ 0.116; 31 gammas over [-25, 25] is far too coarse
        assert!(MellinGrid::new(1e-10, 50.0, 256, 25.0, 31).is_err());
    }

    #[test]
    fn gamma_zero_unit_integral() {
        // f = t e^{-t}: f^(0) = Gamma(1) = 1
        let g = grid();
        let f = g.sample(|t| t * (-t).exp());
        let fwd = mellin_forward(&g, &f, 0.0, Window::None).unwrap();
        let mid = fwd.values[fwd.gammas.iter().position(|&x| x == 0.0).unwrap()];
        assert!((mid.re - 1.0).abs() < 1e-9, "{}", mid.re);
        assert!(mid.im.abs() < 1e-12);
    }

    #[test]
    fn scaling_law() {
        // f(lambda t) picks up |f^| invariance
        let g = grid();
        let f1 = g.sample(|t| t * (-t).exp());
        let lam = 2.0;
        let f2 = g.sample(|t| lam * t * (-lam * t).exp());
        let a = mellin_forward(&g, &f1, 0.0, Window::None).unwrap();
        let b = mellin_forward(&g, &f2, 0.0, Window::None).unwrap();
        for (x, y) in a.values.iter().zip(b.values.iter()).step_by(50) {
            assert!((x.norm() - y.norm()).abs() < 1e-7, "{} vs {}", x.norm(), y.norm());
        }
    }

    #[test]
    fn roundtrip_zero_is_zero() {
        let g = grid();
        let f = vec![Cx::new(0.0, 0.0); g.nt];
        assert_eq!(roundtrip_defect(&g, &f, Window::None).unwrap(), 0.0);
        let p = plancherel_defect(&g, &f, Window::None).unwrap();
        assert_eq!(p.line_zero, 0.0);
        assert_eq!(p.shifted, 0.0);
        assert_eq!(tdt_symbol_defect(&g, &f, Window::None).unwrap(), 0.0);
        assert_eq!(shift_identity_defect(&g, &f, Window::None).unwrap(), 0.0);
    }

    #[test]
    fn roundtrip_on_smooth_decaying_inputs() {
        let g = grid();
        for f in [g.sample(|t| t * (-t).exp()), g.sample(|t| t * t * (-t * t).exp())] {
            let d = roundtrip_defect(&g, &f, Window::None).unwrap();
            assert!(d <= 1e-6, "round-trip defect {d}");
        }
    }

    #[test]
    fn plancherel_both_lines() {
        let g = grid();
        let f = g.sample(|t| t * (-t).exp());
        let d = plancherel_defect(&g, &f, Window::None).unwrap();
        assert!(d.line_zero <= 1e-6, "{}", d.line_zero);
        assert!(d.shifted <= 1e-6, "{}", d.shifted);
    }

    #[test]
    fn plancherel_dilation_invariance() {
        // the dt/t Plancherel defect pattern is identical across dilations
        let g = grid();
        let mut defects = Vec::new();
        for lam in [0.5, 1.0, 2.0] {
            let f = g.sample(|t| lam * t * (-lam * t).exp());
            defects.push(plancherel_defect(&g, &f, Window::None).unwrap().line_zero);
        }
        for d in &defects {
            assert!(*d <= 1e-6);
        }
    }

    #[test]
    fn tdt_defect_small() {
        let g = grid();
        let f = g.sample(|t| t * (-t).exp());
        let d = tdt_symbol_defect(&g, &f, Window::None).unwrap();
        assert!(d <= 1e-8, "t d_t defect {d}");
    }

    #[test]
    fn tdt_on_windowed_monomial() {
        // t d_t t^k = k t^k; with the window flat in the bulk, the transform
        // of the derivative concentrates on k * f^ plus window residue
        let g = MellinGrid::new(1e-6, 1e2, 512, 10.0, 501).unwrap();
        let k = 1.5;
        let f = g.sample(|t| t.powf(k));
        let fw = windowed(&g, &f, Window::Taper).unwrap();
        let d = spectral_derivative(&fw, g.dlambda());
        // compare d against k * fw in the flat region
        let l0 = g.t_min.ln();
        let l1 = g.t_max.ln();
        let decade = std::f64::consts::LN_10;
        for (j, l) in g.lambda_nodes().iter().enumerate() {
            if *l > l0 + 1.5 * decade && *l < l1 - 1.5 * decade {
                let err = (d[j] - fw[j].scale(k)).norm() / fw[j].norm().max(1e-30);
                assert!(err < 1e-6, "node {j}: err {err}");
            }
        }
    }

    #[test]
    fn shift_identity() {
        let g = grid();
        let f = g.sample(|t| t * (-t).exp());
        let d = shift_identity_defect(&g, &f, Window::None).unwrap();
        assert!(d <= 1e-8, "shift defect {d}");
        // random band-limited in log t
        let f2 = g.sample(|t| {
            let l = t.ln();
            (0.3 * l).sin() * (-t).exp() * t + 0.2 * (0.7 * l).cos() * t * t * (-t * t).exp()
        });
        let d2 = shift_identity_defect(&g, &f2, Window::None).unwrap();
        assert!(d2 <= 1e-6, "shift defect {d2}");
    }

    #[test]
    fn non_decaying_rejected_without_window() {
        let g = grid();
        let f = g.sample(|_| 1.0);
        assert!(matches!(
            mellin_forward(&g, &f, 0.0, Window::None),
            Err(Error::NonDecaying(_))
        ));
        assert!(mellin_forward(&g, &f, 0.0, Window::Taper).is_ok());
    }

    #[test]
    fn pole_structure_by_quadrature_convergence() {
        // f smooth with bounded support, f(0) = 1: positive offsets converge
        // as t_min -> 0, offset 0 diverges logarithmically
        let f = |t: f64| if t < 0.5 { 1.0 } else { smoothstep5((1.0 - t) / 0.5) };
        let value_at = |t_min: f64, offset: f64| {
            let g = MellinGrid::new(t_min, 2.0, 512, 5.0, 301).unwrap();
            let samples = g.sample(f);
            let fwd = mellin_forward(&g, &samples, offset, Window::Taper).unwrap();
            fwd.values[fwd.gammas.iter().position(|&x| x == 0.0).unwrap()].norm()
        };
        let conv: Vec<f64> = [1e-4, 1e-6, 1e-8].iter().map(|&tm| value_at(tm, 0.5)).collect();
        assert!((conv[1] - conv[2]).abs() < 1e-2 * conv[2].abs().max(1.0));
        assert!((conv[1] - conv[2]).abs() < (conv[0] - conv[1]).abs() + 1e-12);
        let div: Vec<f64> = [1e-4, 1e-6, 1e-8].iter().map(|&tm| value_at(tm, 0.0)).collect();
        assert!(div[2] > div[1] && div[1] > div[0], "{div:?}");
        assert!(div[2] - div[1] > 1.0, "log growth expected: {div:?}");
    }

    #[test]
    fn defects_shrink_under_refinement() {
        // coarse grid chosen so defects are truncation-dominated
        let coarse = MellinGrid::new(1e-10, 50.0, 48, 10.0, 301).unwrap();
        let fine = MellinGrid::new(1e-10, 50.0, 96, 10.0, 301).unwrap();
        let sample = |g: &MellinGrid<f64>| g.sample(|t| t * (-t).exp());
        let fc = sample(&coarse);
        let ff = sample(&fine);
        let rc = roundtrip_defect(&coarse, &fc, Window::None).unwrap();
        let rf = roundtrip_defect(&fine, &ff, Window::None).unwrap();
        assert!(rf * 2.0 <= rc || rc < 1e-12, "roundtrip {rc} -> {rf}");
        let pc = plancherel_defect(&coarse, &fc, Window::None).unwrap();
        let pf = plancherel_defect(&fine, &ff, Window::None).unwrap();
        assert!(pf.line_zero * 2.0 <= pc.line_zero || pc.line_zero < 1e-12);
        assert!(pf.shifted * 2.0 <= pc.shifted || pc.shifted < 1e-12);
    }
}
