//! Acceptance criteria, one PASS/FAIL line each. Exit status is nonzero if
//! any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use embedded_spectra::asymptotics::{
    detect_embedded_eigenvalue, direct_decay_oracle, envelope_exponent, fit_decay, regime_residuals,
    verify_construction, DecayModel, EigenSearchConfig,
};
use embedded_spectra::coeff::{
    check_convolution_identity, check_h_expansion, check_reflection_symmetry, probe_pole_containment,
    CoeffEngine, CoeffKey, CoeffKind, CoeffValue, EvalPoint,
};
use embedded_spectra::integrator::{
    integrate_coupled_construction, integrate_direct, integrate_prufer, log_mesh, prufer_to_solution,
    shoot_psi_initial, Frozen, IntegratorConfig, ShootingConfig,
};
use embedded_spectra::potential::{plan_construction, ConstructionPlan, PotentialModel, PotentialSpec};
use embedded_spectra::rational::{int, ratio, to_f64, Rational};
use embedded_spectra::Error;

type Outcome = (bool, String);

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> PotentialSpec {
    let text = std::fs::read_to_string(config_path(name)).expect("config file");
    PotentialSpec::from_json(&text).expect("valid config")
}

fn planned(name: &str) -> (PotentialSpec, ConstructionPlan, PotentialModel) {
    let spec = load(name).resolve_constraint().expect("feasible");
    let plan = plan_construction(&spec, &CoeffEngine::new()).expect("plan");
    let model = PotentialModel::from_plan(&spec, &plan);
    (spec, plan, model)
}

fn identity_suite() -> Outcome {
    let t = Instant::now();
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut points = 0;
    let mut failures = Vec::new();
    for order in 1..=5 {
        for harmonic in 2..=order {
            for split in 1..harmonic {
                for kind in [CoeffKind::UpperF, CoeffKind::UpperG] {
                    let r = check_convolution_identity(&engine, kind, order, harmonic, split, 100, &mut rng)
                        .expect("valid indices");
                    points += r.checked();
                    if !r.passed() || r.checked() < 100 {
                        failures.push(format!("{} I={order} K={harmonic} k={split}: {r}", kind.symbol()));
                    }
                }
            }
        }
    }
    for order in 1..=5 {
        let r = check_reflection_symmetry(&engine, order, 100, &mut rng).expect("valid order");
        points += r.checked();
        if !r.passed() || r.checked() < 100 {
            failures.push(format!("reflection I={order}: {r}"));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs < 120.0;
    (ok, format!("{points} exact checks, {} failures, {secs:.1}s (budget 120s)", failures.len()))
}

fn oracle_equivalence() -> Outcome {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut parts = Vec::new();
    let mut ok = true;
    for order in 1..=5 {
        let r = check_h_expansion(&engine, order, 20, &mut rng).expect("valid order");
        ok &= r.passed() && r.checked() == 20;
        parts.push(format!("I={order}: {r}"));
    }
    (ok, parts.join(", "))
}

fn base_cases() -> Outcome {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ok = true;
    for _ in 0..50 {
        let eta = Rational::new(rng.gen_range(1i64..=99).into(), rng.gen_range(1i64..=9).into());
        let phi = Rational::new(rng.gen_range(-50i64..=50).into(), rng.gen_range(1i64..=9).into());
        let p = EvalPoint::new(eta.clone(), vec![phi]);
        let f10 = engine.eval_f(CoeffKey::new(1, 0).unwrap(), &p).unwrap();
        let f11 = engine.eval_f(CoeffKey::new(1, 1).unwrap(), &p).unwrap();
        ok &= f10 == CoeffValue::Finite(-eta.recip()) && f11 == CoeffValue::Finite(eta.recip());
    }
    let p = EvalPoint::new(int(3), vec![int(-2), int(5)]);
    let f21 = engine.eval_f(CoeffKey::new(2, 1).unwrap(), &p).unwrap();
    ok &= f21 == CoeffValue::Finite(ratio(-1, 30));
    (ok, format!("f_{{1,0}} = -1/eta, f_{{1,1}} = 1/eta at 50 points; f_{{2,1}}(3; -2, 5) = {f21}"))
}

fn pole_containment() -> Outcome {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut probes, mut poles, mut outside) = (0, 0, 0);
    for order in 1..=5 {
        // 4 coefficient kinds times I + 1 harmonics per point
        let trials = 2000_usize.div_ceil(4 * (order + 1));
        let r = probe_pole_containment(&engine, order, trials, &mut rng).expect("within cap");
        probes += r.probes;
        poles += r.poles;
        outside += r.outside_locus.len();
    }
    (
        probes >= 10_000 && outside == 0,
        format!("{probes} probes, {poles} poles, {outside} outside the predicted locus"),
    )
}

/// Max over the mesh of `|(u, u') - (u_ref, u_ref')| / R_ref`.
fn amplitude_error(a: &[(f64, f64)], b: &[(f64, f64)], amp: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(amp)
        .map(|((p, q), r)| (p.0 - q.0).hypot(p.1 - q.1) / r)
        .fold(0.0, f64::max)
}

fn integrator_cross_check() -> Outcome {
    let (_, _, model) = planned("wigner_von_neumann.json");
    let pot = Frozen { model: &model, xi: 0.0 };
    let mesh = log_mesh(1.0, 1e3, 400);
    let prufer_uv = |tol: f64| -> (Vec<(f64, f64)>, Vec<f64>) {
        let t = integrate_prufer(&pot, 1.0, 0.3, 0.0, &mesh, &IntegratorConfig::with_tol(tol)).unwrap();
        let uv = t.samples.iter().map(|s| prufer_to_solution(s, 2.0)).map(|s| (s.u, s.du)).collect();
        (uv, t.samples.iter().map(|s| s.log_r.exp()).collect())
    };
    let (reference, amp) = prufer_uv(1e-14);
    let direct_uv = |tol: f64| -> Vec<(f64, f64)> {
        let (u0, du0) = reference[0];
        integrate_direct(&pot, 1.0, u0, du0, &mesh, &IntegratorConfig::with_tol(tol))
            .unwrap()
            .iter()
            .map(|s| (s.u, s.du))
            .collect()
    };
    let tol = IntegratorConfig::default().tol;
    let (p1, _) = prufer_uv(tol);
    let d1 = direct_uv(tol);
    let cross = amplitude_error(&p1, &d1, &amp);
    let (p2, _) = prufer_uv(tol / 2.0);
    let d2 = direct_uv(tol / 2.0);
    // terminal deviation between the two integrators
    let n = mesh.len() - 1;
    let terminal = |p: &[(f64, f64)], d: &[(f64, f64)]| amplitude_error(&p[n..], &d[n..], &amp[n..]);
    let ratio = terminal(&p1, &d1) / terminal(&p2, &d2);
    let prufer_ratio = amplitude_error(&p1, &reference, &amp) / amplitude_error(&p2, &reference, &amp);
    (
        cross < 1e-6 && ratio >= 4.0,
        format!(
            "Prüfer vs direct {cross:.2e} (< 1e-6); tol {tol:e} -> {:e}: terminal deviation ratio {ratio:.2} (need >= 4), Prüfer error vs tight reference ratio {prufer_ratio:.2}",
            tol / 2.0
        ),
    )
}

fn wigner_von_neumann() -> Outcome {
    let (spec, plan, model) = planned("wigner_von_neumann.json");
    let cfg = EigenSearchConfig::for_spec(&spec, 1e4, IntegratorConfig::default());
    let det = match detect_embedded_eigenvalue(&spec, &plan, &model, None, &cfg) {
        Ok(d) => d,
        Err(e) => return (false, format!("detection failed: {e}")),
    };
    let pot = Frozen { model: &model, xi: 0.0 };
    let oracle = direct_decay_oracle(&pot, &det.trajectory, &DecayModel::from_spec(&spec), &cfg.integrator)
        .expect("oracle fit");
    let mut ok = det.fit.b > 0.5 && (det.fit.b / oracle - 1.0).abs() < 0.10;
    let mut growth = Vec::new();
    for e in [0.5, 2.0, 3.0] {
        let t = integrate_prufer(&pot, e, 0.0, 0.0, &[1.0, 1e2, 1e3, 1e4], &IntegratorConfig::default())
            .expect("off-resonance run");
        let d = t.interval_sup[2] - t.interval_sup[1];
        ok &= d < 0.1;
        growth.push(format!("E={e}: {d:+.4}"));
    }
    (
        ok,
        format!(
            "boundary angle {:.6}, B = {:.5} (oracle {:.5}); sup growth [1e3,1e4] vs [1e2,1e3]: {}",
            det.theta_boundary,
            det.fit.b,
            oracle,
            growth.join(", ")
        ),
    )
}

struct Pipeline {
    spec: PotentialSpec,
    plan: ConstructionPlan,
    model: PotentialModel,
    shooting: ShootingConfig,
    icfg: IntegratorConfig,
}

impl Pipeline {
    fn new(name: &str, x_max: f64) -> Pipeline {
        let (spec, plan, model) = planned(name);
        let shooting = ShootingConfig {
            energy: to_f64(&spec.energy),
            theta0: 0.0,
            mesh: log_mesh(spec.x0, x_max, 2000),
            target: plan.target_psi,
            exponent: DecayModel::from_spec(&spec).transient,
            tol: 1e-5,
            grid: 16,
            max_bisections: 60,
        };
        Pipeline {
            spec,
            plan,
            model,
            shooting,
            icfg: IntegratorConfig::default(),
        }
    }

    fn run(&self, target: f64) -> embedded_spectra::Result<embedded_spectra::integrator::Trajectory> {
        let cfg = ShootingConfig {
            target,
            ..self.shooting.clone()
        };
        let shot = shoot_psi_initial(&self.model, &cfg, &self.icfg)?;
        let run = integrate_coupled_construction(
            &self.model,
            cfg.energy,
            cfg.theta0,
            shot.xi0,
            &cfg.mesh,
            &self.icfg,
            false,
        )?;
        Ok(run.trajectory)
    }
}

fn p2_pipeline() -> Outcome {
    let pl = Pipeline::new("p2_subcritical.json", 1e4);
    let traj = match pl.run(pl.plan.target_psi) {
        Ok(t) => t,
        Err(e) => return (false, format!("shooting failed: {e}")),
    };
    let rep = verify_construction(&pl.spec, &pl.plan, &traj).expect("fit");
    let xs: Vec<f64> = traj.samples.iter().map(|s| s.x).collect();
    let psis: Vec<f64> = traj.samples.iter().map(|s| s.psi.unwrap()).collect();
    let (lo, hi) = rep.fit.window;
    let env = envelope_exponent(&xs, &psis, rep.psi_inf, lo, hi, 10).expect("envelope");
    let want = DecayModel::from_spec(&pl.spec).transient;
    let ok = rep.psi_miss.abs() < 1e-3 && (rep.ratio - 1.0).abs() <= 0.05 && (env - want).abs() <= 0.15;
    (
        ok,
        format!(
            "|psi_inf - target| = {:.2e}; B/|Lambda| = {:.5}; envelope exponent {env:.3} (target {want}, tol 0.15)",
            rep.psi_miss.abs(),
            rep.ratio
        ),
    )
}

fn p3_pipeline() -> Outcome {
    let pl = Pipeline::new("p3_two_frequency.json", 1e4);
    let omega = pl.plan.omega_coefficient(2);
    let traj = match pl.run(pl.plan.target_psi) {
        Ok(t) => t,
        Err(e) => return (false, format!("shooting failed: {e}")),
    };
    let rep = verify_construction(&pl.spec, &pl.plan, &traj).expect("fit");
    let dm = DecayModel::from_spec(&pl.spec);
    let (lo, hi) = rep.fit.window;
    let (stretched, power) = regime_residuals(&traj.samples, dm.power, lo, hi).expect("window");
    let ok = omega == int(0) && (rep.ratio - 1.0).abs() <= 0.05 && stretched < power;
    (
        ok,
        format!(
            "Omega order-2 coefficient = {omega}; B/|Lambda| = {:.5}; residual x^{:.2} fit {stretched:.3e} vs log x fit {power:.3e}",
            rep.ratio,
            1.0 - dm.power
        ),
    )
}

fn control_runs() -> Outcome {
    let pl = Pipeline::new("p2_subcritical.json", 1e4);
    let wrong = pl.plan.target_psi + PI;
    let (ok_growth, growth) = match pl.run(wrong) {
        Ok(t) => {
            let fit = fit_decay(&t.samples, &DecayModel::from_spec(&pl.spec)).expect("fit");
            let r = fit.b / -pl.plan.lambda_abs;
            ((r - 1.0).abs() <= 0.05, format!("wrong target: B = {:.5} vs -|Lambda| = {:.5}", fit.b, -pl.plan.lambda_abs))
        }
        Err(e) => (false, format!("wrong-target shooting failed: {e}")),
    };
    let rejected = matches!(load("p3_infeasible.json").resolve_constraint(), Err(Error::Infeasible(_)));
    (
        ok_growth && rejected,
        format!("{growth}; E = 8 outside (1, 25/4) rejected: {rejected}"),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_embspec");
    let config = config_path("p2_subcritical.json");
    let run_once = || -> Result<Vec<Vec<u8>>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let plan = dir.path().join("plan.json");
        let traj = dir.path().join("traj.csv");
        let report = dir.path().join("report.json");
        let steps: [Vec<&std::ffi::OsStr>; 3] = [
            vec!["build".as_ref(), "--config".as_ref(), config.as_os_str(), "--out".as_ref(), plan.as_os_str()],
            vec!["simulate".as_ref(), "--plan".as_ref(), plan.as_os_str(), "--seed".as_ref(), "7".as_ref(), "--out".as_ref(), traj.as_os_str()],
            vec!["verify".as_ref(), "--plan".as_ref(), plan.as_os_str(), "--traj".as_ref(), traj.as_os_str(), "--seed".as_ref(), "7".as_ref(), "--out".as_ref(), report.as_os_str()],
        ];
        for args in steps {
            let st = Command::new(bin).args(&args).output().map_err(|e| e.to_string())?;
            if !st.status.success() {
                return Err(format!("{:?} exited with {}: {}", args[0], st.status, String::from_utf8_lossy(&st.stderr)));
            }
        }
        [plan, traj, report]
            .iter()
            .map(|p| std::fs::read(p).map_err(|e| e.to_string()))
            .collect()
    };
    match (run_once(), run_once()) {
        (Ok(a), Ok(b)) => {
            let same = a == b;
            let bytes: usize = a.iter().map(Vec::len).sum();
            (same, format!("build/simulate/verify twice: {bytes} bytes, identical = {same}"))
        }
        (Err(e), _) | (_, Err(e)) => (false, e),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact identity suite", identity_suite),
        ("oracle equivalence", oracle_equivalence),
        ("base cases", base_cases),
        ("pole containment", pole_containment),
        ("integrator cross-check", integrator_cross_check),
        ("classical Wigner-von Neumann", wigner_von_neumann),
        ("p = 2 pipeline", p2_pipeline),
        ("p = 3 pipeline", p3_pipeline),
        ("control runs", control_runs),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
