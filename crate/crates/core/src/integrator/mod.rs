//! Prüfer-variable and direct integration of `-u'' + V u = E u`.
//!
//! With `eta = 2 sqrt(E)`, `u = R sin(eta x / 2 + theta)` and
//! `2 u' / eta = R cos(eta x / 2 + theta)`:
//!
//! ```text
//! theta'  = (V / eta) (cos(eta x + 2 theta) - 1)
//! log R'  = (V / eta) sin(eta x + 2 theta)
//! ```
//!
//! `theta` is integrated as a continuous lift and never reduced mod `2 pi`.

mod dopri5;
mod shooting;

pub use dopri5::{integrate, StepControl, StepStats};
pub use shooting::{circle_coverage_gap, psi_limit_map, shoot_psi_initial, ShootingConfig, ShootingResult};

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::PotentialModel;

/// A real potential on the half-line.
pub trait Potential: Sync {
    fn value(&self, x: f64) -> f64;
    /// Largest angular frequency present, used to cap step sizes.
    fn max_frequency(&self) -> f64;
}

/// `V = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn value(&self, _: f64) -> f64 {
        0.0
    }
    fn max_frequency(&self) -> f64 {
        0.0
    }
}

/// A model with the aggregate phase `xi` held fixed.
#[derive(Debug, Clone, Copy)]
pub struct Frozen<'a> {
    pub model: &'a PotentialModel,
    pub xi: f64,
}

impl Potential for Frozen<'_> {
    fn value(&self, x: f64) -> f64 {
        self.model.value(x, self.xi)
    }
    fn max_frequency(&self) -> f64 {
        self.model.max_alpha()
    }
}

/// A model driven by a recorded phase profile `xi(x)`.
#[derive(Debug, Clone, Copy)]
pub struct Profiled<'a> {
    pub model: &'a PotentialModel,
    pub profile: &'a XiProfile,
}

impl Potential for Profiled<'_> {
    fn value(&self, x: f64) -> f64 {
        self.model.value(x, self.profile.eval(x))
    }
    fn max_frequency(&self) -> f64 {
        self.model.max_alpha()
    }
}

/// An arbitrary closure with a declared top frequency.
pub struct FnPotential<F: Fn(f64) -> f64 + Sync> {
    pub f: F,
    pub frequency: f64,
}

impl<F: Fn(f64) -> f64 + Sync> Potential for FnPotential<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn max_frequency(&self) -> f64 {
        self.frequency
    }
}

/// Piecewise cubic Hermite interpolant of `xi` through accepted steps.
#[derive(Debug, Clone, Default)]
pub struct XiProfile {
    xs: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl XiProfile {
    pub fn push(&mut self, x: f64, value: f64, slope: f64) {
        if self.xs.last().is_some_and(|&last| x <= last) {
            return;
        }
        self.xs.push(x);
        self.values.push(value);
        self.slopes.push(slope);
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Constant extension outside the recorded range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 0 {
            return 0.0;
        }
        if x <= self.xs[0] {
            return self.values[0];
        }
        if x >= self.xs[n - 1] {
            return self.values[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruferState {
    pub x: f64,
    pub theta: f64,
    #[serde(rename = "logR")]
    pub log_r: f64,
    pub xi: Option<f64>,
    pub psi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionState {
    pub x: f64,
    pub u: f64,
    pub du: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub energy: f64,
    pub eta: f64,
    pub samples: Vec<PruferState>,
    /// Supremum of `log R` over all accepted steps.
    pub sup_log_r: f64,
    /// Supremum of `log R` over the accepted steps between consecutive
    /// mesh points.
    pub interval_sup: Vec<f64>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> Option<&PruferState> {
        self.samples.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub tol: f64,
    /// Step cap as a fraction of the shortest oscillation period.
    pub period_fraction: f64,
    pub max_steps: u64,
    /// Spread of `psi` over the last decade of a construction run above
    /// which a spread that is not shrinking is reported as not settling.
    pub settle_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            tol: 1e-10,
            period_fraction: 1.0 / 20.0,
            max_steps: 2_000_000_000,
            settle_tol: 0.1,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorConfig {
            tol,
            ..Default::default()
        }
    }

    /// `period_fraction * 2 pi / max(eta, alpha_max, eta + 2 alpha_max)`.
    pub fn step_control(&self, eta: f64, alpha_max: f64) -> StepControl {
        let top = eta.max(alpha_max).max(eta + 2.0 * alpha_max);
        let h_max = if top > 0.0 {
            self.period_fraction * 2.0 * PI / top
        } else {
            1.0
        };
        StepControl {
            max_steps: self.max_steps,
            ..StepControl::new(self.tol, h_max)
        }
    }
}

/// `n` points from `a` to `b` (either order), geometrically spaced.
pub fn log_mesh(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0 && n >= 2, "log mesh needs positive ends and two points");
    let (la, lb) = (a.ln(), b.ln());
    let mut m: Vec<f64> = (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect();
    m[0] = a;
    m[n - 1] = b;
    m
}

/// `n` equally spaced points from `a` to `b`.
pub fn linear_mesh(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linear mesh needs two points");
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn check_energy(energy: f64) -> Result<f64> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::InvalidSpec(format!("energy must be positive, got {energy}")));
    }
    Ok(2.0 * energy.sqrt())
}

/// Tracks suprema of `log R` (overall and per mesh interval) and rejects
/// phase jumps above `pi`.
struct Watch<'m> {
    sup: f64,
    interval_sup: Vec<f64>,
    mesh: &'m [f64],
    interval: usize,
    last_theta: f64,
}

impl<'m> Watch<'m> {
    fn new(mesh: &'m [f64], theta: f64, log_r: f64) -> Self {
        Watch {
            sup: log_r,
            interval_sup: vec![log_r; mesh.len().saturating_sub(1)],
            mesh,
            interval: 0,
            last_theta: theta,
        }
    }

    fn see(&mut self, x: f64, theta: f64, log_r: f64) -> Result<()> {
        if !(theta.is_finite() && log_r.is_finite()) {
            return Err(Error::StepFailure {
                x,
                reason: "non-finite Prüfer state".into(),
            });
        }
        if (theta - self.last_theta).abs() > PI {
            return Err(Error::StepFailure {
                x,
                reason: format!("theta jumped by {:.3} in one step", theta - self.last_theta),
            });
        }
        self.last_theta = theta;
        self.sup = self.sup.max(log_r);
        if let Some(s) = self.interval_sup.get_mut(self.interval) {
            *s = s.max(log_r);
        }
        // steps land exactly on mesh points, so this advances at the boundary
        if self.interval + 1 < self.mesh.len() && x == self.mesh[self.interval + 1] {
            self.interval += 1;
            if let Some(s) = self.interval_sup.get_mut(self.interval) {
                *s = log_r;
            }
        }
        Ok(())
    }
}

fn prufer_rhs(v: f64, eta: f64, x: f64, theta: f64) -> (f64, f64) {
    let arg = eta * x + 2.0 * theta;
    let w = v / eta;
    (w * (arg.cos() - 1.0), w * arg.sin())
}

/// Puts samples (and the per-interval suprema) in increasing `x`.
fn ascending_samples(mut samples: Vec<PruferState>, mut interval_sup: Vec<f64>) -> (Vec<PruferState>, Vec<f64>) {
    if samples.len() > 1 && samples[0].x > samples[samples.len() - 1].x {
        samples.reverse();
        interval_sup.reverse();
    }
    (samples, interval_sup)
}

/// Solves the Prüfer system through the points of `mesh`; the mesh may run
/// backward, but samples are returned in increasing `x`.
pub fn integrate_prufer<P: Potential + ?Sized>(
    potential: &P,
    energy: f64,
    theta0: f64,
    log_r0: f64,
    mesh: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let eta = check_energy(energy)?;
    let ctl = cfg.step_control(eta, potential.max_frequency());
    let mut watch = Watch::new(mesh, theta0, log_r0);
    let rhs = |x: f64, y: &[f64; 2]| {
        let (dt, dl) = prufer_rhs(potential.value(x), eta, x, y[0]);
        [dt, dl]
    };
    // theta and log R are phases/log-amplitudes: absolute control
    let (ys, stats) = integrate(
        rhs,
        [theta0, log_r0],
        mesh,
        &ctl,
        |_, _| [1.0, 1.0],
        |x, y| watch.see(x, y[0], y[1]),
    )?;
    let samples = mesh
        .iter()
        .zip(ys)
        .map(|(&x, y)| PruferState {
            x,
            theta: y[0],
            log_r: y[1],
            xi: None,
            psi: None,
        })
        .collect();
    let (samples, interval_sup) = ascending_samples(samples, watch.interval_sup);
    Ok(Trajectory {
        energy,
        eta,
        samples,
        sup_log_r: watch.sup,
        interval_sup,
        stats,
    })
}

/// Solves `u'' = (V - E) u` through the points of `mesh`, controlling the
/// error relative to the amplitude `sqrt(u^2 + (2 u' / eta)^2)`.
pub fn integrate_direct<P: Potential + ?Sized>(
    potential: &P,
    energy: f64,
    u0: f64,
    du0: f64,
    mesh: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<SolutionState>> {
    let eta = check_energy(energy)?;
    if u0 == 0.0 && du0 == 0.0 {
        return Err(Error::InvalidSpec("initial data must be nontrivial".into()));
    }
    let ctl = cfg.step_control(eta, potential.max_frequency());
    let rhs = |x: f64, y: &[f64; 2]| [y[1], (potential.value(x) - energy) * y[0]];
    let amp = |y: &[f64; 2]| y[0].hypot(2.0 * y[1] / eta);
    let scale = |a: &[f64; 2], b: &[f64; 2]| {
        let s = amp(a).max(amp(b));
        [s, s * eta / 2.0]
    };
    let (ys, _) = integrate(rhs, [u0, du0], mesh, &ctl, scale, |x, y| {
        if y[0].is_finite() && y[1].is_finite() {
            Ok(())
        } else {
            Err(Error::StepFailure {
                x,
                reason: "non-finite solution".into(),
            })
        }
    })?;
    Ok(mesh
        .iter()
        .zip(ys)
        .map(|(&x, y)| SolutionState {
            x,
            u: y[0],
            du: y[1],
        })
        .collect())
}

/// `(u, u')` from Prüfer variables.
pub fn prufer_to_solution(state: &PruferState, eta: f64) -> SolutionState {
    let r = state.log_r.exp();
    let phase = eta * state.x / 2.0 + state.theta;
    SolutionState {
        x: state.x,
        u: r * phase.sin(),
        du: 0.5 * eta * r * phase.cos(),
    }
}

/// Prüfer `(theta, log R)` of `(u, u')`, with `theta` in `(-pi, pi]`.
pub fn solution_to_prufer(s: &SolutionState, eta: f64) -> (f64, f64) {
    let amp = s.u.hypot(2.0 * s.du / eta);
    let phase = s.u.atan2(2.0 * s.du / eta);
    let theta = crate::potential::wrap_angle(phase - eta * s.x / 2.0);
    (theta, amp.ln())
}

/// Spread of `psi` over `[x_end / 10, x_end]` and over the decade before it,
/// when the samples span that far.
fn decade_psi_ranges(samples: &[PruferState]) -> Option<(f64, Option<f64>)> {
    let (first, last) = (samples.first()?, samples.last()?);
    let range = |lo: f64, hi: f64| {
        let (a, b) = samples
            .iter()
            .filter(|s| s.x >= lo && s.x <= hi)
            .filter_map(|s| s.psi)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        b - a
    };
    if last.x < 10.0 * first.x {
        return None;
    }
    let previous = (last.x >= 100.0 * first.x).then(|| range(last.x / 100.0, last.x / 10.0));
    Some((range(last.x / 10.0, last.x), previous))
}

/// Result of a construction run.
#[derive(Debug, Clone)]
pub struct ConstructionRun {
    pub trajectory: Trajectory,
    pub profile: Option<XiProfile>,
}

/// Solves the Prüfer system jointly with the phase-locking equation
/// `xi' = -2 Re(Lambda x^{-(p-1) gamma} e^{i psi})`, `psi = xi offset + xi + 2 theta`,
/// with `V` evaluated at the live `xi`.
pub fn integrate_coupled_construction(
    model: &PotentialModel,
    energy: f64,
    theta0: f64,
    xi0: f64,
    mesh: &[f64],
    cfg: &IntegratorConfig,
    record_profile: bool,
) -> Result<ConstructionRun> {
    let eta = check_energy(energy)?;
    let ctl = cfg.step_control(eta, model.max_alpha());
    let mut watch = Watch::new(mesh, theta0, 0.0);
    let mut profile = record_profile.then(XiProfile::default);
    let rhs = |x: f64, y: &[f64; 3]| {
        let v = model.value(x, y[2]);
        let (dt, dl) = prufer_rhs(v, eta, x, y[0]);
        [dt, dl, model.xi_rate(x, model.psi(y[0], y[2]))]
    };
    if let (Some(p), Some(&x)) = (profile.as_mut(), mesh.first()) {
        p.push(x, xi0, model.xi_rate(x, model.psi(theta0, xi0)));
    }
    let (ys, stats) = integrate(
        rhs,
        [theta0, 0.0, xi0],
        mesh,
        &ctl,
        |_, _| [1.0; 3],
        |x, y| {
            if let Some(p) = profile.as_mut() {
                p.push(x, y[2], model.xi_rate(x, model.psi(y[0], y[2])));
            }
            watch.see(x, y[0], y[1])
        },
    )?;
    let samples = mesh
        .iter()
        .zip(ys)
        .map(|(&x, y)| PruferState {
            x,
            theta: y[0],
            log_r: y[1],
            xi: Some(y[2]),
            psi: Some(model.psi(y[0], y[2])),
        })
        .collect();
    let (samples, interval_sup) = ascending_samples(samples, watch.interval_sup);
    // slow algebraic settling is fine; a spread that is large and not shrinking is not
    if let Some((range, previous)) = decade_psi_ranges(&samples) {
        if range > cfg.settle_tol && previous.map_or(true, |p| range >= 0.9 * p) {
            return Err(Error::NonConvergence(format!(
                "psi varies by {range:.3e} over the last decade, above {:.3e} and not shrinking",
                cfg.settle_tol
            )));
        }
    }
    Ok(ConstructionRun {
        trajectory: Trajectory {
            energy,
            eta,
            samples,
            sup_log_r: watch.sup,
            interval_sup,
            stats,
        },
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_equation_keeps_prufer_constant() {
        let mesh = linear_mesh(0.0, 50.0, 11);
        let t = integrate_prufer(&ZeroPotential, 1.7, 0.4, -0.3, &mesh, &IntegratorConfig::default())
            .unwrap();
        for s in &t.samples {
            assert_eq!(s.theta, 0.4);
            assert_eq!(s.log_r, -0.3);
        }
        assert_eq!(t.sup_log_r, -0.3);
    }

    #[test]
    fn free_equation_direct() {
        let cfg = IntegratorConfig::with_tol(1e-10);
        let mesh = linear_mesh(0.0, 20.0, 41);
        let s = integrate_direct(&ZeroPotential, 1.0, 0.0, 1.0, &mesh, &cfg).unwrap();
        for st in &s {
            assert!((st.u - st.x.sin()).abs() < 1e-8);
        }
        let c = integrate_direct(&ZeroPotential, 4.0, 1.0, 0.0, &mesh, &cfg).unwrap();
        for st in &c {
            assert!((st.u - (2.0 * st.x).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn prufer_round_trip() {
        let s = PruferState {
            x: 3.3,
            theta: 0.7,
            log_r: 1.2,
            xi: None,
            psi: None,
        };
        let sol = prufer_to_solution(&s, 1.5);
        let (theta, log_r) = solution_to_prufer(&sol, 1.5);
        assert!((theta - 0.7).abs() < 1e-12);
        assert!((log_r - 1.2).abs() < 1e-12);
    }

    #[test]
    fn hermite_profile_reproduces_cubics() {
        let f = |x: f64| 0.5 * x * x * x - x + 2.0;
        let df = |x: f64| 1.5 * x * x - 1.0;
        let mut p = XiProfile::default();
        for x in [0.0, 0.5, 1.7, 3.0] {
            p.push(x, f(x), df(x));
        }
        for x in [0.1, 1.0, 2.2, 2.9] {
            assert!((p.eval(x) - f(x)).abs() < 1e-12);
        }
        assert_eq!(p.eval(-1.0), f(0.0));
        assert_eq!(p.eval(9.0), f(3.0));
    }

    #[test]
    fn meshes() {
        let m = log_mesh(1.0, 1000.0, 4);
        assert!((m[1] - 10.0).abs() < 1e-9 && m[3] == 1000.0);
        let back = log_mesh(1000.0, 1.0, 4);
        assert_eq!(back[3], 1.0);
        assert_eq!(linear_mesh(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }
}
