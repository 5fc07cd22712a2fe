//! Dormand–Prince 5(4) with PI step control.
//!
//! Local errors are controlled per unit step: a step of length `h` is
//! accepted when its scaled error estimate is at most `|h|`. Steps never
//! exceed `h_max` and are shortened to land exactly on every output point.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth order weights minus the embedded fourth order ones
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub tol: f64,
    pub h_max: f64,
    /// Relative floor on the step: `|h| >= h_min_rel * max(1, |x|)`.
    pub h_min_rel: f64,
    pub max_steps: u64,
}

impl StepControl {
    pub fn new(tol: f64, h_max: f64) -> StepControl {
        StepControl {
            tol,
            h_max,
            h_min_rel: 1e-13,
            max_steps: 2_000_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        *o += h * s;
    }
    out
}

/// Integrates `y' = f(x, y)` from `mesh[0]` through every point of `mesh`
/// (monotone, either direction).
///
/// `scale(y_old, y_new)` gives the per-component error scale before the
/// tolerance is applied. `observe(x, y)` sees every accepted step and may
/// abort the run. Returns the state at each mesh point.
pub fn integrate<const N: usize, F, S, O>(
    mut f: F,
    y0: [f64; N],
    mesh: &[f64],
    ctl: &StepControl,
    scale: S,
    mut observe: O,
) -> Result<(Vec<[f64; N]>, StepStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: Fn(&[f64; N], &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]) -> Result<()>,
{
    let mut stats = StepStats::default();
    let mut out = Vec::with_capacity(mesh.len());
    let Some(&start) = mesh.first() else {
        return Ok((out, stats));
    };
    out.push(y0);
    let dir = match mesh.last() {
        Some(&end) if end < start => -1.0,
        _ => 1.0,
    };
    let mut x = start;
    let mut y = y0;
    let mut k1 = f(x, &y);
    stats.rhs_evals += 1;
    let mut h = ctl.h_max.min(0.01 * (1.0 + x.abs())) * dir;
    let mut err_prev = 1e-4f64;
    let mut rejected_last = false;

    for &target in &mesh[1..] {
        if (target - x) * dir < 0.0 {
            return Err(Error::Trajectory("output mesh is not monotone".into()));
        }
        while (target - x) * dir > 0.0 {
            if stats.accepted + stats.rejected >= ctl.max_steps {
                return Err(Error::StepFailure {
                    x,
                    reason: format!("step budget of {} exhausted", ctl.max_steps),
                });
            }
            let remaining = target - x;
            let mut step = h.abs().min(ctl.h_max) * dir;
            let lands = step.abs() >= remaining.abs() * (1.0 - 1e-12);
            if lands {
                step = remaining;
            }
            let h_min = ctl.h_min_rel * x.abs().max(1.0);
            if step.abs() < h_min && !lands {
                return Err(Error::StepFailure {
                    x,
                    reason: format!("step size {:.3e} below minimum {h_min:.3e}", step.abs()),
                });
            }

            let k2 = f(x + C2 * step, &axpy(&y, step, &[(A21, &k1)]));
            let k3 = f(x + C3 * step, &axpy(&y, step, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(
                x + C4 * step,
                &axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = f(
                x + C5 * step,
                &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                x + step,
                &axpy(
                    &y,
                    step,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = axpy(
                &y,
                step,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let x_new = if lands { target } else { x + step };
            let k7 = f(x_new, &y_new);
            stats.rhs_evals += 6;

            let sc = scale(&y, &y_new);
            let mut acc = 0.0;
            for i in 0..N {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let r = e / (ctl.tol * sc[i]);
                acc += r * r;
            }
            let err = (acc / N as f64).sqrt() / step.abs();
            if !err.is_finite() {
                stats.rejected += 1;
                h = step * 0.2;
                rejected_last = true;
                continue;
            }

            if err <= 1.0 {
                // PI controller for an error that scales like h^4
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.7 / 4.0) * err_prev.powf(0.4 / 4.0)).clamp(0.2, 5.0)
                };
                let fac = if rejected_last { fac.min(1.0) } else { fac };
                err_prev = err.max(1e-4);
                rejected_last = false;
                x = x_new;
                y = y_new;
                k1 = k7;
                stats.accepted += 1;
                observe(x, &y)?;
                if !lands {
                    h = step * fac;
                }
            } else {
                stats.rejected += 1;
                rejected_last = true;
                h = step * (0.9 * err.powf(-0.25)).clamp(0.2, 0.9);
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(_: &[f64; 2], _: &[f64; 2]) -> [f64; 2] {
        [1.0, 1.0]
    }

    #[test]
    fn harmonic_oscillator_forward_and_back() {
        let ctl = StepControl::new(1e-10, 0.1);
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mesh: Vec<f64> = (0..=20).map(|i| i as f64).collect();
        let (ys, stats) = integrate(f, [0.0, 1.0], &mesh, &ctl, unit, |_, _| Ok(())).unwrap();
        for (x, y) in mesh.iter().zip(&ys) {
            assert!((y[0] - x.sin()).abs() < 1e-8, "x = {x}");
        }
        assert!(stats.accepted >= 200);
        let back: Vec<f64> = mesh.iter().rev().cloned().collect();
        let (ys, _) = integrate(f, *ys.last().unwrap(), &back, &ctl, unit, |_, _| Ok(())).unwrap();
        assert!(ys.last().unwrap()[0].abs() < 1e-8);
    }

    #[test]
    fn exponential_growth_is_accurate() {
        let ctl = StepControl::new(1e-9, 1.0);
        let f = |_: f64, y: &[f64; 1]| [y[0]];
        let rel = |a: &[f64; 1], b: &[f64; 1]| [a[0].abs().max(b[0].abs())];
        let (ys, _) = integrate(f, [1.0], &[0.0, 5.0], &ctl, rel, |_, _| Ok(())).unwrap();
        assert!((ys[1][0] / 5f64.exp() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn observer_can_abort() {
        let ctl = StepControl::new(1e-8, 0.1);
        let f = |_: f64, _: &[f64; 1]| [1.0];
        let r = integrate(f, [0.0], &[0.0, 10.0], &ctl, |_, _| [1.0], |x, _| {
            if x > 5.0 {
                Err(Error::StepFailure {
                    x,
                    reason: "stop".into(),
                })
            } else {
                Ok(())
            }
        });
        assert!(matches!(r, Err(Error::StepFailure { .. })));
    }

    #[test]
    fn non_monotone_mesh_is_rejected() {
        let ctl = StepControl::new(1e-8, 0.1);
        let f = |_: f64, _: &[f64; 1]| [1.0];
        let r = integrate(f, [0.0], &[0.0, 2.0, 1.0], &ctl, |_, _| [1.0], |_, _| Ok(()));
        assert!(r.is_err());
    }
}
