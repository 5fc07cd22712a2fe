//! Decay fits, construction checks, eigenvalue detection and energy scans.
//!
//! Along a phase-locked solution `(log R)' ~ -B x^{-(p-1) gamma}`, so
//! `log R = c - B log x` when `(p-1) gamma = 1` and
//! `log R = c - B x^{1-(p-1) gamma} / (1 - (p-1) gamma)` otherwise.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{
    integrate_direct, integrate_prufer, log_mesh, prufer_to_solution, ConstructionRun,
    Frozen, IntegratorConfig, Potential, Profiled, PruferState, Trajectory,
};
use crate::potential::{ConstructionPlan, PotentialModel, PotentialSpec};
use crate::rational::to_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `gamma = 1/(p-1)`: power-law decay `x^-B`.
    Critical,
    /// `gamma < 1/(p-1)`: stretched-exponential decay.
    Subcritical,
}

/// Exponents of a construction: resonant forcing `x^-power`, transient of
/// `psi` like `x^transient`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayModel {
    pub regime: Regime,
    pub power: f64,
    pub transient: f64,
}

impl DecayModel {
    pub fn from_spec(spec: &PotentialSpec) -> DecayModel {
        let gamma = to_f64(&spec.gamma);
        let p = spec.p as f64;
        DecayModel {
            regime: if spec.is_critical() {
                Regime::Critical
            } else {
                Regime::Subcritical
            },
            power: (p - 1.0) * gamma,
            transient: 1.0 - p * gamma,
        }
    }

    /// The function multiplying `-B` in `log R`.
    pub fn basis(&self, x: f64) -> f64 {
        match self.regime {
            Regime::Critical => x.ln(),
            Regime::Subcritical => {
                let e = 1.0 - self.power;
                x.powf(e) / e
            }
        }
    }
}

/// Least squares `y = a + b t`, returning `(a, b, rms residual)`.
pub fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (a, b) in t.iter().zip(y) {
        stt += (a - mt) * (a - mt);
        sty += (a - mt) * (b - my);
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let icpt = my - slope * mt;
    let ss: f64 = t
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - icpt - slope * a;
            r * r
        })
        .sum();
    (icpt, slope, (ss / n).sqrt())
}

/// The default window `[x_hi / 100, 0.95 x_hi]` of a sample set.
fn tail_window(xs: &[f64]) -> Result<(f64, f64)> {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(hi > 0.0) || lo > hi / 100.0 * (1.0 + 1e-9) {
        return Err(Error::WindowTooShort(format!(
            "samples cover [{lo:.4e}, {hi:.4e}], less than two decades"
        )));
    }
    Ok((hi / 100.0, 0.95 * hi))
}

fn select(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (a, b): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(x, y)| (*x, *y))
        .unzip();
    if a.len() < 10 {
        return Err(Error::WindowTooShort(format!(
            "only {} samples in [{lo:.4e}, {hi:.4e}]",
            a.len()
        )));
    }
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitFit {
    pub limit: f64,
    pub coeff: f64,
    pub exponent: f64,
    pub residual: f64,
}

/// Fits `y = L + C x^s` for a known `s` over the default tail window.
pub fn estimate_limit(xs: &[f64], ys: &[f64], exponent: f64) -> Result<LimitFit> {
    let (lo, hi) = tail_window(xs)?;
    let (wx, wy) = select(xs, ys, lo, hi)?;
    let t: Vec<f64> = wx.iter().map(|x| x.powf(exponent)).collect();
    let (limit, coeff, residual) = linear_fit(&t, &wy);
    Ok(LimitFit {
        limit,
        coeff,
        exponent,
        residual,
    })
}

/// Fits `y = L + C x^s` with `s` free in `[-3, -0.01]` (grid plus golden
/// section on the residual).
pub fn fit_transient(xs: &[f64], ys: &[f64]) -> Result<LimitFit> {
    let (lo, hi) = tail_window(xs)?;
    let (wx, wy) = select(xs, ys, lo, hi)?;
    let logs: Vec<f64> = wx.iter().map(|x| x.ln()).collect();
    let rms = |s: f64| {
        let t: Vec<f64> = logs.iter().map(|l| (s * l).exp()).collect();
        linear_fit(&t, &wy).2
    };
    let grid: Vec<f64> = (0..=299).map(|i| -3.0 + 0.01 * i as f64).collect();
    let best = grid
        .iter()
        .cloned()
        .min_by(|a, b| rms(*a).total_cmp(&rms(*b)))
        .expect("nonempty grid");
    let (mut a, mut b) = ((best - 0.01).max(-3.0), (best + 0.01).min(-0.01));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if rms(c) < rms(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let s = 0.5 * (a + b);
    let t: Vec<f64> = logs.iter().map(|l| (s * l).exp()).collect();
    let (limit, coeff, residual) = linear_fit(&t, &wy);
    Ok(LimitFit {
        limit,
        coeff,
        exponent: s,
        residual,
    })
}

/// Log-log slope of the block maxima of `|y - limit|` over the window,
/// with `blocks` geometric blocks.
pub fn envelope_exponent(xs: &[f64], ys: &[f64], limit: f64, lo: f64, hi: f64, blocks: usize) -> Result<f64> {
    let (wx, wy) = select(xs, ys, lo, hi)?;
    let edges = log_mesh(lo, hi, blocks + 1);
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for w in edges.windows(2) {
        let best = wx
            .iter()
            .zip(&wy)
            .filter(|(x, _)| **x >= w[0] && **x < w[1])
            .map(|(x, y)| (*x, (y - limit).abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((x, d)) = best {
            if d > 0.0 {
                lx.push(x.ln());
                ly.push(d.ln());
            }
        }
    }
    if lx.len() < 3 {
        return Err(Error::WindowTooShort("fewer than three envelope blocks".into()));
    }
    Ok(linear_fit(&lx, &ly).1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticsFit {
    pub regime: Regime,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub theta_inf: f64,
    pub psi_inf: Option<f64>,
    /// RMS of the `log R` fit.
    pub residual: f64,
    pub window: (f64, f64),
}

/// Fits `log R = c - B basis(x)` on `[lo, hi]`; `theta` and `psi` limits
/// are extrapolated with the transient exponent of the model.
pub fn fit_decay_window(samples: &[PruferState], model: &DecayModel, lo: f64, hi: f64) -> Result<AsymptoticsFit> {
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let lr: Vec<f64> = samples.iter().map(|s| s.log_r).collect();
    let (wx, wl) = select(&xs, &lr, lo, hi)?;
    let basis: Vec<f64> = wx.iter().map(|&x| model.basis(x)).collect();
    let (c, slope, residual) = linear_fit(&basis, &wl);
    let limit_of = |ys: &[f64]| -> Result<f64> {
        let (wx, wy) = select(&xs, ys, lo, hi)?;
        let t: Vec<f64> = wx.iter().map(|x| x.powf(model.transient)).collect();
        Ok(linear_fit(&t, &wy).0)
    };
    let thetas: Vec<f64> = samples.iter().map(|s| s.theta).collect();
    let psi_inf = if samples.iter().all(|s| s.psi.is_some()) {
        let psis: Vec<f64> = samples.iter().map(|s| s.psi.unwrap_or(0.0)).collect();
        Some(limit_of(&psis)?)
    } else {
        None
    };
    Ok(AsymptoticsFit {
        regime: model.regime,
        b: -slope,
        amplitude: c.exp(),
        theta_inf: limit_of(&thetas)?,
        psi_inf,
        residual,
        window: (lo, hi),
    })
}

/// [`fit_decay_window`] on the last two decades, excluding the final 5%.
pub fn fit_decay(samples: &[PruferState], model: &DecayModel) -> Result<AsymptoticsFit> {
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let (lo, hi) = tail_window(&xs)?;
    fit_decay_window(samples, model, lo, hi)
}

/// RMS residuals of the `log R` regression against the stretched basis
/// `x^{1-power}` and against `log x`, on the same window.
pub fn regime_residuals(samples: &[PruferState], power: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let lr: Vec<f64> = samples.iter().map(|s| s.log_r).collect();
    let (wx, wl) = select(&xs, &lr, lo, hi)?;
    let stretched: Vec<f64> = wx.iter().map(|x| x.powf(1.0 - power)).collect();
    let logs: Vec<f64> = wx.iter().map(|x| x.ln()).collect();
    Ok((linear_fit(&stretched, &wl).2, linear_fit(&logs, &wl).2))
}

/// Decay of the secant-slope residual `|Delta log R / Delta x + |Lambda| x^-power|`:
/// log-log slope of its block maxima over the window.
pub fn slope_residual_exponent(samples: &[PruferState], lambda_abs: f64, power: f64, lo: f64, hi: f64) -> Result<f64> {
    let mut xs = Vec::new();
    let mut rs = Vec::new();
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.x < lo || b.x > hi || b.x <= a.x {
            continue;
        }
        let mid = (a.x * b.x).sqrt();
        let secant = (b.log_r - a.log_r) / (b.x - a.x);
        xs.push(mid);
        rs.push(secant + lambda_abs * mid.powf(-power));
    }
    envelope_exponent(&xs, &rs, 0.0, lo, hi, 12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub psi_locked: bool,
    pub decay_rate: bool,
    pub slope_residual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub psi_inf: f64,
    pub target_psi: f64,
    /// `psi_inf` minus the nearest `target + 2 pi n`.
    pub psi_miss: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "Lambda_abs")]
    pub lambda_abs: f64,
    pub ratio: f64,
    pub residual: f64,
    pub slope_residual_exponent: f64,
    pub fit: AsymptoticsFit,
    pub verdicts: Verdicts,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        let v = self.verdicts;
        v.psi_locked && v.decay_rate && v.slope_residual
    }
}

pub const PSI_TOLERANCE: f64 = 1e-3;
pub const RATE_TOLERANCE: f64 = 0.05;

/// Distance from `angle` to the nearest `target + 2 pi n`.
pub fn angle_miss(angle: f64, target: f64) -> f64 {
    let d = (angle - target).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// Checks phase locking, the decay rate and the slope law on a
/// construction trajectory.
pub fn verify_construction(spec: &PotentialSpec, plan: &ConstructionPlan, traj: &Trajectory) -> Result<VerificationReport> {
    let model = DecayModel::from_spec(spec);
    let samples = &traj.samples;
    let fit = fit_decay(samples, &model)?;
    let psi_inf = fit
        .psi_inf
        .ok_or_else(|| Error::Trajectory("trajectory carries no psi samples".into()))?;
    let miss = angle_miss(psi_inf, plan.target_psi);
    let ratio = fit.b / plan.lambda_abs;
    let slope_exp =
        slope_residual_exponent(samples, plan.lambda_abs, model.power, fit.window.0, fit.window.1)?;
    Ok(VerificationReport {
        psi_inf,
        target_psi: plan.target_psi,
        psi_miss: miss,
        b: fit.b,
        lambda_abs: plan.lambda_abs,
        ratio,
        residual: fit.residual,
        slope_residual_exponent: slope_exp,
        fit,
        verdicts: Verdicts {
            psi_locked: miss.abs() < PSI_TOLERANCE,
            decay_rate: (ratio - 1.0).abs() <= RATE_TOLERANCE,
            slope_residual: slope_exp < -model.power,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSearchConfig {
    pub x_max: f64,
    pub samples: usize,
    /// Number of generic boundary angles used by the growth control.
    pub boundary_angle_grid: usize,
    /// Square-integrability threshold on `B`: `1/2` critical, `0` otherwise.
    pub b_threshold: f64,
    pub integrator: IntegratorConfig,
}

impl EigenSearchConfig {
    pub fn for_spec(spec: &PotentialSpec, x_max: f64, integrator: IntegratorConfig) -> Self {
        EigenSearchConfig {
            x_max,
            samples: 4000,
            boundary_angle_grid: 8,
            b_threshold: if spec.is_critical() { 0.5 } else { 0.0 },
            integrator,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Detection {
    /// Boundary angle in `[0, pi)` with `u'(0) sin t = u(0) cos t`.
    pub theta_boundary: f64,
    /// Prüfer angle at `x = 0` of the decaying solution.
    pub theta_at_zero: f64,
    pub fit: AsymptoticsFit,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Boundary angle selecting the solution with Prüfer angle `theta` at 0.
pub fn boundary_angle(theta: f64, eta: f64) -> f64 {
    let t = theta.sin().atan2(0.5 * eta * theta.cos());
    t.rem_euclid(PI)
}

/// Integrates the decaying solution backward from `x_max` to `x0`.
///
/// With a recorded forward construction the terminal angle is the forward
/// `theta(x_max)` and `V` follows the recorded `xi(x)`. Otherwise the phase
/// is frozen and the terminal angle is the locked value
/// `(target - offset) / 2`. Below `x0` the potential vanishes, so
/// `theta(0) = theta(x0)`.
pub fn detect_embedded_eigenvalue(
    spec: &PotentialSpec,
    plan: &ConstructionPlan,
    model: &PotentialModel,
    forward: Option<&ConstructionRun>,
    cfg: &EigenSearchConfig,
) -> Result<Detection> {
    let energy = to_f64(&spec.energy);
    let mesh = log_mesh(cfg.x_max, spec.x0, cfg.samples);
    let trajectory = match forward.and_then(|f| f.profile.as_ref().map(|p| (f, p))) {
        Some((run, profile)) => {
            let end = run
                .trajectory
                .samples
                .iter()
                .min_by(|a, b| (a.x - cfg.x_max).abs().total_cmp(&(b.x - cfg.x_max).abs()))
                .ok_or_else(|| Error::Trajectory("empty forward run".into()))?;
            let pot = Profiled { model, profile };
            integrate_prufer(&pot, energy, end.theta, end.log_r, &mesh, &cfg.integrator)?
        }
        None => {
            let theta_end = 0.5 * (plan.target_psi - plan.xi_offset);
            let pot = Frozen { model, xi: 0.0 };
            integrate_prufer(&pot, energy, theta_end, 0.0, &mesh, &cfg.integrator)?
        }
    };
    let samples = &trajectory.samples;
    let fit = fit_decay(samples, &DecayModel::from_spec(spec))?;
    if !(fit.b > cfg.b_threshold) {
        return Err(Error::NotFound(format!(
            "fitted B = {:.4} does not exceed {}",
            fit.b, cfg.b_threshold
        )));
    }
    let theta0 = samples[0].theta;
    Ok(Detection {
        theta_boundary: boundary_angle(theta0, trajectory.eta),
        theta_at_zero: theta0,
        fit,
        trajectory,
    })
}

/// Decay rate of the same solution from direct integration of `(u, u')`:
/// runs backward from the Prüfer state at the right end of `traj` and regresses
/// `log sqrt(u^2 + (2u'/eta)^2)` against the basis of `model`.
pub fn direct_decay_oracle<P: Potential + ?Sized>(
    potential: &P,
    traj: &Trajectory,
    model: &DecayModel,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let end = traj.samples.last().ok_or_else(|| Error::Trajectory("empty".into()))?;
    let start = prufer_to_solution(end, traj.eta);
    let mesh: Vec<f64> = traj.samples.iter().rev().map(|s| s.x).collect();
    let sol = integrate_direct(potential, traj.energy, start.u, start.du, &mesh, cfg)?;
    let xs: Vec<f64> = sol.iter().map(|s| s.x).collect();
    let log_amps: Vec<f64> = sol
        .iter()
        .map(|s| s.u.hypot(2.0 * s.du / traj.eta).ln())
        .collect();
    let (lo, hi) = tail_window(&xs)?;
    let (wx, wl) = select(&xs, &log_amps, lo, hi)?;
    let basis: Vec<f64> = wx.iter().map(|&x| model.basis(x)).collect();
    Ok(-linear_fit(&basis, &wl).1)
}

/// Fitted `B` of forward solutions started at `x0` from evenly spaced
/// angles in `[0, pi)`.
pub fn forward_rates<P: Potential + ?Sized>(
    potential: &P,
    spec: &PotentialSpec,
    angles: &[f64],
    x_max: f64,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let energy = to_f64(&spec.energy);
    let mesh = log_mesh(spec.x0, x_max, samples);
    let model = DecayModel::from_spec(spec);
    angles
        .par_iter()
        .map(|&theta| {
            let t = integrate_prufer(potential, energy, theta, 0.0, &mesh, cfg)?;
            Ok(fit_decay(&t.samples, &model)?.b)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    #[serde(rename = "E")]
    pub energy: f64,
    pub sup_log_r: f64,
    pub status: String,
}

/// `sup log R` over `[x_start, x_end]` for each energy, with `theta(x_start) = 0`
/// and `log R(x_start) = 0`. Failures are recorded per row.
pub fn scan_energies<P: Potential + ?Sized>(
    potential: &P,
    energies: &[f64],
    x_start: f64,
    x_end: f64,
    cfg: &IntegratorConfig,
) -> Vec<ScanRow> {
    energies
        .par_iter()
        .map(|&e| match integrate_prufer(potential, e, 0.0, 0.0, &[x_start, x_end], cfg) {
            Ok(t) => ScanRow {
                energy: e,
                sup_log_r: t.sup_log_r,
                status: "ok".into(),
            },
            Err(err) => ScanRow {
                energy: e,
                sup_log_r: f64::NAN,
                status: err.to_string().replace(',', ";"),
            },
        })
        .collect()
}

/// Energies of local maxima of `sup log R` exceeding `factor` times the
/// grid median.
pub fn spike_energies(rows: &[ScanRow], factor: f64) -> Vec<f64> {
    let mut vals: Vec<f64> = rows.iter().map(|r| r.sup_log_r).filter(|v| v.is_finite()).collect();
    if vals.is_empty() {
        return Vec::new();
    }
    vals.sort_by(f64::total_cmp);
    let median = vals[vals.len() / 2];
    let mut out = Vec::new();
    for i in 0..rows.len() {
        let v = rows[i].sup_log_r;
        let left = if i > 0 { rows[i - 1].sup_log_r } else { f64::NEG_INFINITY };
        let right = rows.get(i + 1).map_or(f64::NEG_INFINITY, |r| r.sup_log_r);
        if v.is_finite() && v >= left && v >= right && v > factor * median {
            out.push(rows[i].energy);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(xs: &[f64], mut f: impl FnMut(f64) -> f64) -> Vec<PruferState> {
        xs.iter()
            .map(|&x| PruferState {
                x,
                theta: 0.3 + 1.0 / x,
                log_r: f(x),
                xi: None,
                psi: None,
            })
            .collect()
    }

    fn critical() -> DecayModel {
        DecayModel {
            regime: Regime::Critical,
            power: 1.0,
            transient: -1.0,
        }
    }

    #[test]
    fn exact_power_law_fit() {
        let xs = log_mesh(1.0, 1e4, 400);
        let s = samples(&xs, |x| -2.0 * x.ln() + 1.0);
        let fit = fit_decay(&s, &critical()).unwrap();
        assert!((fit.b - 2.0).abs() < 1e-10);
        assert!((fit.amplitude - 1f64.exp()).abs() < 1e-10);
        assert!(fit.residual < 1e-10);
        assert!((fit.theta_inf - 0.3).abs() < 1e-10);
    }

    #[test]
    fn exact_stretched_exponential_fit() {
        let xs = log_mesh(1.0, 1e4, 400);
        let s = samples(&xs, |x| -3.0 * x.powf(0.25) / 0.25);
        let m = DecayModel {
            regime: Regime::Subcritical,
            power: 0.75,
            transient: -0.5,
        };
        let fit = fit_decay(&s, &m).unwrap();
        assert!((fit.b - 3.0).abs() < 1e-10);
    }

    #[test]
    fn noisy_power_law_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs = log_mesh(1.0, 1e4, 2000);
        let s = samples(&xs, |x| {
            let noise = 1.0 + 1e-3 * (2.0 * rng.gen::<f64>() - 1.0);
            (1.5 * x.powf(-2.0) * noise).ln()
        });
        let fit = fit_decay(&s, &critical()).unwrap();
        assert!((fit.b / 2.0 - 1.0).abs() < 0.01);
        assert!((fit.amplitude / 1.5 - 1.0).abs() < 0.01);
    }

    #[test]
    fn short_window_is_rejected() {
        let xs = log_mesh(10.0, 100.0, 50);
        let s = samples(&xs, |x| -x.ln());
        assert!(matches!(fit_decay(&s, &critical()), Err(Error::WindowTooShort(_))));
    }

    #[test]
    fn transient_exponent_recovered() {
        let xs = log_mesh(1.0, 1e5, 3000);
        let ys: Vec<f64> = xs.iter().map(|x| 0.7 + 2.0 * x.powf(-0.5)).collect();
        let fit = fit_transient(&xs, &ys).unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-6, "{fit:?}");
        assert!((fit.limit - 0.7).abs() < 1e-8);
        let slope = envelope_exponent(&xs, &ys, 0.7, 1e3, 9e4, 10).unwrap();
        assert!((slope + 0.5).abs() < 0.02);
    }

    #[test]
    fn angle_helpers() {
        assert!((angle_miss(-PI / 2.0 + 4.0 * PI + 1e-4, -PI / 2.0) - 1e-4).abs() < 1e-9);
        assert!((boundary_angle(0.0, 2.0) - 0.0).abs() < 1e-15);
        // u(0) = 0 is the Dirichlet condition t = 0; u'(0) = 0 is t = pi/2
        assert!((boundary_angle(PI / 2.0, 2.0) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn spikes_above_median() {
        let rows: Vec<ScanRow> = [0.1, 0.1, 0.12, 0.9, 0.1, 0.11]
            .iter()
            .enumerate()
            .map(|(i, &v)| ScanRow {
                energy: i as f64,
                sup_log_r: v,
                status: "ok".into(),
            })
            .collect();
        assert_eq!(spike_energies(&rows, 3.0), vec![3.0]);
    }
}
