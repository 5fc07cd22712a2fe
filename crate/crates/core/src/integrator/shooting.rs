//! Choosing `xi(x0)` so that the phase `psi` settles on a prescribed angle.
//!
//! The map from `xi(x0)` to the lifted limit of `psi` is continuous and of
//! degree one over a turn, so a crossing of `target + 2 pi n` is bracketed
//! on a coarse grid over `[0, 2 pi]` and refined by bisection.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{integrate_coupled_construction, IntegratorConfig};
use crate::asymptotics::estimate_limit;
use crate::error::{Error, Result};
use crate::potential::PotentialModel;

#[derive(Debug, Clone)]
pub struct ShootingConfig {
    pub energy: f64,
    pub theta0: f64,
    pub mesh: Vec<f64>,
    pub target: f64,
    /// Exponent `s` of the transient `psi = psi_inf + C x^s`.
    pub exponent: f64,
    pub tol: f64,
    /// Number of grid intervals over `[0, 2 pi]`.
    pub grid: usize,
    pub max_bisections: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingResult {
    pub xi0: f64,
    pub psi_inf: f64,
    /// `psi_inf - (target + 2 pi n)` for the branch that was hit.
    pub miss: f64,
    /// `(xi0, psi_inf)` at the grid points.
    pub grid: Vec<(f64, f64)>,
    pub runs: usize,
}

/// Lifted limit of `psi` for one initial value of `xi`.
pub fn psi_limit_map(
    model: &PotentialModel,
    cfg: &ShootingConfig,
    icfg: &IntegratorConfig,
    xi0: f64,
) -> Result<f64> {
    let run = integrate_coupled_construction(model, cfg.energy, cfg.theta0, xi0, &cfg.mesh, icfg, false)?;
    let (xs, psis): (Vec<f64>, Vec<f64>) = run
        .trajectory
        .samples
        .iter()
        .map(|s| (s.x, s.psi.expect("construction sample")))
        .unzip();
    Ok(estimate_limit(&xs, &psis, cfg.exponent)?.limit)
}

/// Largest gap between the grid limits reduced to the circle.
pub fn circle_coverage_gap(limits: &[f64]) -> f64 {
    let mut v: Vec<f64> = limits.iter().map(|a| a.rem_euclid(2.0 * PI)).collect();
    if v.is_empty() {
        return 2.0 * PI;
    }
    v.sort_by(f64::total_cmp);
    let mut gap = v[0] + 2.0 * PI - v[v.len() - 1];
    for w in v.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

/// The branch `target + 2 pi n` nearest to `value`.
fn nearest_branch(target: f64, value: f64) -> f64 {
    target + 2.0 * PI * ((value - target) / (2.0 * PI)).round()
}

pub fn shoot_psi_initial(
    model: &PotentialModel,
    cfg: &ShootingConfig,
    icfg: &IntegratorConfig,
) -> Result<ShootingResult> {
    let n = cfg.grid.max(2);
    let xis: Vec<f64> = (0..=n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let limits: Vec<f64> = xis
        .par_iter()
        .map(|&xi| psi_limit_map(model, cfg, icfg, xi))
        .collect::<Result<_>>()?;
    let grid: Vec<(f64, f64)> = xis.iter().cloned().zip(limits.iter().cloned()).collect();
    let mut runs = grid.len();

    if let Some(&(xi0, psi)) = grid
        .iter()
        .find(|(_, m)| (m - nearest_branch(cfg.target, *m)).abs() < cfg.tol)
    {
        return Ok(ShootingResult {
            xi0,
            psi_inf: psi,
            miss: psi - nearest_branch(cfg.target, psi),
            grid,
            runs,
        });
    }

    // intervals whose end values straddle some branch, tamest first
    let mut brackets: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        let (a, b) = (limits[i], limits[i + 1]);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let k = ((lo - cfg.target) / (2.0 * PI)).ceil();
        let goal = cfg.target + 2.0 * PI * k;
        if goal <= hi {
            brackets.push((i, goal));
        }
    }
    brackets.sort_by(|x, y| {
        let w = |i: usize| (limits[i + 1] - limits[i]).abs();
        w(x.0).total_cmp(&w(y.0))
    });
    let Some(&(i, goal)) = brackets.first() else {
        return Err(Error::BracketFailure(format!(
            "psi limits on the {n}-point grid never cross target {:.6} + 2 pi n",
            cfg.target
        )));
    };

    let (mut a, mut b) = (xis[i], xis[i + 1]);
    let mut fa = limits[i] - goal;
    for _ in 0..cfg.max_bisections {
        let mid = 0.5 * (a + b);
        let m = psi_limit_map(model, cfg, icfg, mid)?;
        runs += 1;
        let fm = m - goal;
        if fm.abs() < cfg.tol {
            return Ok(ShootingResult {
                xi0: mid,
                psi_inf: m,
                miss: fm,
                grid,
                runs,
            });
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Err(Error::NonConvergence(format!(
        "bisection on [{a:.3e}, {b:.3e}] did not reach {:.1e}",
        cfg.tol
    )))
}
