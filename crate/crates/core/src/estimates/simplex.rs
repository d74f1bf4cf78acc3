//! Small deterministic Nelder-Mead maximizer over a parameter box, used for
//! the adversarial refinement of empirical constants.

use crate::scalar::Scalar;

/// Maximize `f` over the box `[lo, hi]` starting from `start`, with an
/// evaluation budget. Returns the best point and value seen.
pub fn maximize_simplex<T: Scalar, const N: usize>(
    f: &mut impl FnMut(&[T; N]) -> T,
    lo: &[T; N],
    hi: &[T; N],
    start: &[T; N],
    budget: usize,
) -> ([T; N], T) {
    let clamp = |p: &[T; N]| -> [T; N] {
        let mut q = *p;
        for i in 0..N {
            q[i] = q[i].max(lo[i]).min(hi[i]);
        }
        q
    };
    let evals = std::cell::Cell::new(0usize);
    let eval = |p: &[T; N], f: &mut dyn FnMut(&[T; N]) -> T| -> T {
        evals.set(evals.get() + 1);
        f(&clamp(p))
    };

    // initial simplex: start plus axis steps of 15% of the box
    let mut simplex: Vec<([T; N], T)> = Vec::with_capacity(N + 1);
    let v0 = eval(start, f);
    simplex.push((clamp(start), v0));
    for i in 0..N {
        let mut p = *start;
        let step = (hi[i] - lo[i]) * T::of(0.15);
        p[i] = if p[i] + step <= hi[i] { p[i] + step } else { p[i] - step };
        let v = eval(&p, f);
        simplex.push((clamp(&p), v));
    }

    while evals.get() < budget {
        // sort descending by value (maximization)
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let worst = simplex[N].0;
        let mut centroid = [T::zero(); N];
        for item in simplex.iter().take(N) {
            for i in 0..N {
                centroid[i] += item.0[i];
            }
        }
        for c in centroid.iter_mut() {
            *c = *c / T::from_usize_(N);
        }
        let blend = |a: &[T; N], b: &[T; N], alpha: T| -> [T; N] {
            let mut out = [T::zero(); N];
            for i in 0..N {
                out[i] = a[i] + (a[i] - b[i]) * alpha;
            }
            out
        };
        let reflected = blend(&centroid, &worst, T::one());
        let vr = eval(&reflected, f);
        if vr > simplex[0].1 {
            let expanded = blend(&centroid, &worst, T::of(2.0));
            let ve = eval(&expanded, f);
            if ve > vr {
                simplex[N] = (clamp(&expanded), ve);
            } else {
                simplex[N] = (clamp(&reflected), vr);
            }
        } else if vr > simplex[N - 1].1 {
            simplex[N] = (clamp(&reflected), vr);
        } else {
            let contracted = blend(&centroid, &worst, T::of(-0.5));
            let vc = eval(&contracted, f);
            if vc > simplex[N].1 {
                simplex[N] = (clamp(&contracted), vc);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0;
                for k in 1..=N {
                    let mut p = [T::zero(); N];
                    for i in 0..N {
                        p[i] = best[i] + (simplex[k].0[i] - best[i]) * T::of(0.5);
                    }
                    let v = eval(&p, f);
                    simplex[k] = (clamp(&p), v);
                }
            }
        }
        // convergence: simplex collapsed
        let spread = simplex[0].1 - simplex[N].1;
        if spread.abs() <= T::of(1e-12) * (T::one() + simplex[0].1.abs()) {
            break;
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    simplex[0]
}
