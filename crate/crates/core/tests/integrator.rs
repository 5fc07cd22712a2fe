use std::f64::consts::PI;

use proptest::prelude::*;

use embedded_spectra::asymptotics::{envelope_exponent, estimate_limit, verify_construction, DecayModel};
use embedded_spectra::coeff::CoeffEngine;
use embedded_spectra::integrator::{
    circle_coverage_gap, integrate_coupled_construction, integrate_direct, integrate_prufer, log_mesh,
    prufer_to_solution, psi_limit_map, shoot_psi_initial, solution_to_prufer, FnPotential, Frozen,
    IntegratorConfig, PruferState, ShootingConfig, ZeroPotential,
};
use embedded_spectra::potential::{plan_construction, ComplexValue, PotentialModel, PotentialSpec};
use embedded_spectra::rational::to_f64;
use embedded_spectra::Error;

fn wvn() -> FnPotential<impl Fn(f64) -> f64 + Sync> {
    FnPotential {
        f: |x: f64| if x < 1.0 { 0.0 } else { -8.0 * (2.0 * x).sin() / x },
        frequency: 2.0,
    }
}

fn p2_spec() -> PotentialSpec {
    PotentialSpec::from_json(
        r#"{"p":2,"gamma":"3/4","terms":[{"lambda":4,"alpha":"2","xi_mode":"dynamic"}],"x0":10.0,"E":"1"}"#,
    )
    .unwrap()
}

#[test]
fn prufer_matches_direct_integration() {
    let cfg = IntegratorConfig::default();
    let mesh = log_mesh(1.0, 1e3, 100);
    let cases: [(f64, f64); 3] = [(1.0, 0.3), (4.0, -1.2), (0.37, 2.0)];
    for (energy, theta0) in cases {
        let pot = wvn();
        let t = integrate_prufer(&pot, energy, theta0, 0.0, &mesh, &cfg).unwrap();
        let s0 = prufer_to_solution(&t.samples[0], t.eta);
        let d = integrate_direct(&pot, energy, s0.u, s0.du, &mesh, &cfg).unwrap();
        for (p, q) in t.samples.iter().zip(&d) {
            let r = prufer_to_solution(p, t.eta);
            let amp = p.log_r.exp();
            let dev = (r.u - q.u).hypot(2.0 * (r.du - q.du) / t.eta) / amp;
            assert!(dev < 1e-6, "E = {energy}, x = {}: {dev:e}", p.x);
        }
    }
}

#[test]
fn wronskian_is_conserved() {
    // off resonance, so both solutions stay bounded and W does not cancel
    let cfg = IntegratorConfig::default();
    let mesh = log_mesh(1.0, 1e3, 200);
    let a = integrate_direct(&wvn(), 4.0, 1.0, 0.0, &mesh, &cfg).unwrap();
    let b = integrate_direct(&wvn(), 4.0, 0.0, 1.0, &mesh, &cfg).unwrap();
    for (s, t) in a.iter().zip(&b) {
        let w = s.u * t.du - s.du * t.u;
        assert!((w - 1.0).abs() < 1e-8, "x = {}: W = {w}", s.x);
    }
}

#[test]
fn off_resonance_amplitude_stays_bounded() {
    // E = 4 is not in S_2 for phases {2, -2}
    let t = integrate_prufer(&wvn(), 4.0, 0.0, 0.0, &[1.0, 5e3, 1e4], &IntegratorConfig::default()).unwrap();
    let (first, second) = (t.interval_sup[0], t.interval_sup[1]);
    assert!(second - first < 0.05, "{first} then {second}");
    assert!(t.sup_log_r.is_finite());
}

#[test]
fn backward_runs_return_increasing_samples() {
    let mesh = log_mesh(100.0, 1.0, 50);
    let t = integrate_prufer(&wvn(), 1.0, 0.0, 0.0, &mesh, &IntegratorConfig::default()).unwrap();
    assert!(t.samples.windows(2).all(|w| w[0].x < w[1].x));
    assert_eq!(t.samples.last().unwrap().x, 100.0);
    assert_eq!(t.samples.last().unwrap().theta, 0.0);
}

#[test]
fn huge_potential_reports_step_failure() {
    let pot = FnPotential {
        f: |x: f64| 1e300 * (1e3 * x).sin(),
        frequency: 1.0,
    };
    let r = integrate_prufer(&pot, 1.0, 0.0, 0.0, &[0.0, 1.0], &IntegratorConfig::default());
    assert!(matches!(r, Err(Error::StepFailure { .. })), "{r:?}");
}

#[test]
fn zero_resonance_reduces_to_plain_prufer() {
    let spec = p2_spec();
    let mut plan = plan_construction(&spec, &CoeffEngine::new()).unwrap();
    plan.lambda = ComplexValue { re: 0.0, im: 0.0 };
    let model = PotentialModel::from_plan(&spec, &plan);
    let mesh = log_mesh(10.0, 1e3, 200);
    let cfg = IntegratorConfig::default();
    let xi0 = 0.7;
    let run = integrate_coupled_construction(&model, 1.0, 0.2, xi0, &mesh, &cfg, false).unwrap();
    let plain = integrate_prufer(&Frozen { model: &model, xi: xi0 }, 1.0, 0.2, 0.0, &mesh, &cfg).unwrap();
    for (a, b) in run.trajectory.samples.iter().zip(&plain.samples) {
        assert_eq!(a.xi, Some(xi0));
        assert!((a.theta - b.theta).abs() < 1e-8);
        assert!((a.log_r - b.log_r).abs() < 1e-8);
    }
}

#[test]
fn single_cosine_construction_settles_on_target() {
    let spec = p2_spec();
    let plan = plan_construction(&spec, &CoeffEngine::new()).unwrap();
    let model = PotentialModel::from_plan(&spec, &plan);
    let dm = DecayModel::from_spec(&spec);
    let cfg = ShootingConfig {
        energy: 1.0,
        theta0: 0.0,
        mesh: log_mesh(10.0, 1e4, 2000),
        target: plan.target_psi,
        exponent: dm.transient,
        tol: 1e-4,
        grid: 16,
        max_bisections: 60,
    };
    let icfg = IntegratorConfig::default();
    let shot = shoot_psi_initial(&model, &cfg, &icfg).unwrap();
    assert!(shot.miss.abs() < 1e-4);
    assert!(circle_coverage_gap(&shot.grid.iter().map(|g| g.1).collect::<Vec<_>>()) < PI);

    let run = integrate_coupled_construction(&model, 1.0, 0.0, shot.xi0, &cfg.mesh, &icfg, false).unwrap();
    let t = &run.trajectory;
    let rep = verify_construction(&spec, &plan, t).unwrap();
    assert!(rep.all_pass(), "{rep:?}");

    // |psi - psi_inf| <= C x^{1 - p gamma} with positive C
    let xs: Vec<f64> = t.samples.iter().map(|s| s.x).collect();
    let psis: Vec<f64> = t.samples.iter().map(|s| s.psi.unwrap()).collect();
    let env = envelope_exponent(&xs, &psis, rep.psi_inf, 100.0, 9500.0, 10).unwrap();
    assert!((env - dm.transient).abs() <= 0.15, "envelope exponent {env}");
    let fit = estimate_limit(&xs, &psis, dm.transient).unwrap();
    assert!(fit.coeff.abs() > 0.0);

    // the locking drift xi' vanishes faster than the forcing x^{-(p-1) gamma}
    let rates: Vec<f64> = t
        .samples
        .iter()
        .map(|s| model.xi_rate(s.x, s.psi.unwrap()))
        .collect();
    let slope = envelope_exponent(&xs, &rates, 0.0, 100.0, 9500.0, 10).unwrap();
    assert!(slope < -dm.power, "xi' decays like x^{slope}");
}

#[test]
fn shooting_fixed_point_sanity() {
    let spec = p2_spec();
    let plan = plan_construction(&spec, &CoeffEngine::new()).unwrap();
    let model = PotentialModel::from_plan(&spec, &plan);
    let icfg = IntegratorConfig::default();
    let mut cfg = ShootingConfig {
        energy: to_f64(&spec.energy),
        theta0: 0.0,
        mesh: log_mesh(10.0, 1e3, 400),
        target: 0.0,
        exponent: DecayModel::from_spec(&spec).transient,
        tol: 1e-4,
        grid: 16,
        max_bisections: 60,
    };
    cfg.target = psi_limit_map(&model, &cfg, &icfg, 0.0).unwrap();
    let shot = shoot_psi_initial(&model, &cfg, &icfg).unwrap();
    assert!(shot.xi0.abs() < 1e-3, "{}", shot.xi0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_equation_is_a_fixed_point(energy in 0.01f64..50.0, theta0 in -10.0f64..10.0, log_r0 in -5.0f64..5.0) {
        let t = integrate_prufer(&ZeroPotential, energy, theta0, log_r0, &[0.0, 3.0, 40.0], &IntegratorConfig::default()).unwrap();
        for s in &t.samples {
            prop_assert_eq!(s.theta, theta0);
            prop_assert_eq!(s.log_r, log_r0);
        }
    }

    #[test]
    fn prufer_coordinates_round_trip(x in 0.0f64..100.0, theta in -PI..PI, log_r in -20.0f64..20.0, energy in 0.1f64..10.0) {
        let eta = 2.0 * energy.sqrt();
        let s = PruferState { x, theta, log_r, xi: None, psi: None };
        let (t2, l2) = solution_to_prufer(&prufer_to_solution(&s, eta), eta);
        let d = (t2 - theta).rem_euclid(2.0 * PI);
        prop_assert!(d.min(2.0 * PI - d) < 1e-9);
        prop_assert!((l2 - log_r).abs() < 1e-9);
    }
}
