//! Test-function families for the inequality lab: seeded band-limited random
//! fields with smooth compact support, and dilation-type wave packets carrying
//! positive `t`-frequency content, built from homogeneous solutions of the
//! ODE family.

use crate::operators::{GridSpec, OdeCoefficients};
use crate::scalar::{cis, Cx, Scalar};
use crate::shooting::shoot_trajectory;
use crate::util::plateau_bump;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Smooth window supported in the open grid box, equal to 1 in the bulk.
pub fn support_window<T: Scalar>(grid: &GridSpec<T>) -> Vec<T> {
    let xs = grid.x_nodes();
    let ts = grid.t_nodes();
    let x_edge = grid.x_max;
    let t_edge = match grid.t_axis {
        crate::operators::TAxis::Linear { t_max, .. } => t_max,
        crate::operators::TAxis::LogHalfLine { t_max, .. } => t_max,
    };
    let wx = x_edge * T::of(0.12);
    let wt = t_edge * T::of(0.15);
    let mut w = Vec::with_capacity(grid.len());
    for &x in &xs {
        let a = plateau_bump(x, -x_edge, x_edge, wx);
        for &t in &ts {
            let b = plateau_bump(t, -t_edge, t_edge, wt);
            w.push(a * b);
        }
    }
    w
}

/// Seeded band-limited Gaussian field times the support window.
pub fn random_field<T: Scalar>(grid: &GridSpec<T>, seed: u64, kmax: usize) -> Vec<Cx<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = grid.x_nodes();
    let ts = grid.t_nodes();
    let lx = grid.x_max - grid.x_min;
    let lt = match grid.t_axis {
        crate::operators::TAxis::Linear { t_min, t_max } => t_max - t_min,
        crate::operators::TAxis::LogHalfLine { t_min, t_max } => t_max - t_min,
    };
    let two_pi = T::of(2.0) * T::PI();
    // draw modes deterministically in a fixed order
    let mut modes = Vec::new();
    for kx in -(kmax as i64)..=(kmax as i64) {
        for kt in -(kmax as i64)..=(kmax as i64) {
            let amp = 1.0 / (1.0 + (kx * kx + kt * kt) as f64);
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            modes.push((kx, kt, Cx::new(T::of(re * amp), T::of(im * amp))));
        }
    }
    let window = support_window(grid);
    let mut u = vec![Cx::new(T::zero(), T::zero()); grid.len()];
    for (idx, w) in window.iter().enumerate() {
        if *w == T::zero() {
            continue;
        }
        let x = xs[idx / grid.nt];
        let t = ts[idx % grid.nt];
        let mut acc = Cx::new(T::zero(), T::zero());
        for &(kx, kt, c) in &modes {
            let phase = two_pi * (T::of(kx as f64) * x / lx + T::of(kt as f64) * t / lt);
            acc += c * cis(phase);
        }
        u[idx] = acc.scale(*w);
    }
    u
}

/// Parameters of a dilation wave packet `g_zeta(x) eta(x) (t + i0)^{-1/2 + i
/// gamma0} W(log |t|)`: Mellin frequency, log-window center and half-width,
/// and the half-width of the transition of the `x` cutoff.
#[derive(Clone, Copy, Debug)]
pub struct PacketParams<T> {
    pub gamma0: T,
    pub log_center: T,
    pub log_half_width: T,
    pub x_transition: T,
}

/// The admissible parameter box for a grid (log range resolvable by the grid).
pub fn packet_param_box<T: Scalar>(grid: &GridSpec<T>) -> ([T; 4], [T; 4]) {
    let t_edge = match grid.t_axis {
        crate::operators::TAxis::Linear { t_max, .. } => t_max,
        crate::operators::TAxis::LogHalfLine { t_max, .. } => t_max,
    };
    let t_small = grid.t_spacing() * T::of(2.0);
    let l_min = t_small.ln();
    let l_max = (t_edge * T::of(0.9)).ln();
    let span = l_max - l_min;
    let lo = [
        -T::of(2.0),
        l_min + span * T::of(0.3),
        span * T::of(0.1),
        (grid.x_max - grid.x_min) * T::of(0.02),
    ];
    let hi = [
        T::of(2.0),
        l_max - span * T::of(0.1),
        span * T::of(0.45),
        (grid.x_max - grid.x_min) * T::of(0.12),
    ];
    (lo, hi)
}

/// Build the packet on the grid. The `x` profile solves `H_zeta g = 0` with
/// `zeta = s - 1/2 + i gamma0` (Dirichlet-null exactly when `zeta` lies in the
/// exceptional set), extended over the whole box and cut off smoothly.
pub fn mellin_packet<T: Scalar>(
    grid: &GridSpec<T>,
    coeffs: &OdeCoefficients<T>,
    s: T,
    p: &PacketParams<T>,
) -> crate::error::Result<Vec<Cx<T>>> {
    let zeta = Cx::new(coeffs.sign_s.factor::<T>() * s - T::of(0.5), p.gamma0);
    let xs = grid.x_nodes();
    let traj = shoot_trajectory(
        zeta,
        coeffs,
        -coeffs.r,
        (Cx::new(T::zero(), T::zero()), Cx::new(T::one(), T::zero())),
        &xs,
        T::of(1e-9),
    )?;
    let ts = grid.t_nodes();
    let x_edge = grid.x_max * T::of(0.97);
    let eta: Vec<T> =
        xs.iter().map(|&x| plateau_bump(x, -x_edge, x_edge, p.x_transition)).collect();
    let lw = p.log_half_width;
    let trans = lw * T::of(0.35);
    let exp_damp = (-T::PI() * p.gamma0).exp();
    let minus_i = Cx::new(T::zero(), -T::one());
    let v: Vec<Cx<T>> = ts
        .iter()
        .map(|&t| {
            if t == T::zero() {
                return Cx::new(T::zero(), T::zero());
            }
            let l = t.abs().ln();
            let w = plateau_bump(l, p.log_center - lw, p.log_center + lw, trans);
            if w == T::zero() {
                return Cx::new(T::zero(), T::zero());
            }
            let magnitude = (-T::of(0.5) * l).exp() * w;
            let osc = cis(p.gamma0 * l);
            if t > T::zero() {
                osc.scale(magnitude)
            } else {
                // (t + i0)^w for t < 0: extra factor e^{i pi w} = -i e^{-pi gamma0}
                (minus_i * osc).scale(magnitude * exp_damp)
            }
        })
        .collect();
    let mut u = Vec::with_capacity(grid.len());
    for (i, (g, _)) in traj.iter().enumerate() {
        let gx = g.scale(eta[i]);
        for vj in &v {
            u.push(gx * vj);
        }
    }
    Ok(u)
}

/// Modulated Gaussian wave packet `e^{i(xi x + tau t)} exp(-((x-x0)^2/wx^2 +
/// t^2/wt^2))`, windowed to the box.
pub fn modulated_gaussian<T: Scalar>(
    grid: &GridSpec<T>,
    x0: T,
    wx: T,
    wt: T,
    xi: T,
    tau: T,
) -> Vec<Cx<T>> {
    let xs = grid.x_nodes();
    let ts = grid.t_nodes();
    let window = support_window(grid);
    let mut u = Vec::with_capacity(grid.len());
    for (idx, w) in window.iter().enumerate() {
        let x = xs[idx / grid.nt];
        let t = ts[idx % grid.nt];
        let g = (-(x - x0) * (x - x0) / (wx * wx) - t * t / (wt * wt)).exp();
        u.push(cis(xi * x + tau * t).scale(g * *w));
    }
    u
}

/// Draw a uniform value in `[lo, hi]` from the rng (f64 path keeps sequences
/// identical across scalar types).
pub fn uniform<T: Scalar>(rng: &mut ChaCha8Rng, lo: T, hi: T) -> T {
    let u: f64 = rng.gen_range(0.0..1.0);
    lo + (hi - lo) * T::of(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::GridSpec;

    #[test]
    fn random_field_deterministic_and_supported() {
        let g = GridSpec::support_box(1.0, 0.25, 32, 32).unwrap();
        let a = random_field(&g, 42, 4);
        let b = random_field(&g, 42, 4);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x, y);
        }
        // boundary ring vanishes
        for i in 0..g.nx {
            assert_eq!(a[g.idx(i, 0)].norm(), 0.0);
            assert_eq!(a[g.idx(i, g.nt - 1)].norm(), 0.0);
        }
        for j in 0..g.nt {
            assert_eq!(a[g.idx(0, j)].norm(), 0.0);
            assert_eq!(a[g.idx(g.nx - 1, j)].norm(), 0.0);
        }
    }

    #[test]
    fn packet_is_supported_and_finite() {
        let g = GridSpec::support_box(1.0, 0.25, 48, 64).unwrap();
        let c = crate::operators::OdeCoefficients::model(1.0, 1.0);
        let (lo, hi) = packet_param_box(&g);
        let p = PacketParams {
            gamma0: 0.0,
            log_center: 0.5 * (lo[1] + hi[1]),
            log_half_width: 0.5 * (lo[2] + hi[2]),
            x_transition: 0.5 * (lo[3] + hi[3]),
        };
        let u = mellin_packet(&g, &c, 0.5 + std::f64::consts::FRAC_PI_2, &p).unwrap();
        assert!(u.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        let max = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max > 0.0);
        for j in 0..g.nt {
            assert_eq!(u[g.idx(0, j)].norm(), 0.0, "x boundary");
        }
    }
}
