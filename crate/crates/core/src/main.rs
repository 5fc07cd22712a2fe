use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use embedded_spectra::asymptotics::{
    detect_embedded_eigenvalue, scan_energies, spike_energies, verify_construction, DecayModel,
    EigenSearchConfig, VerificationReport,
};
use embedded_spectra::coeff::{
    check_convolution_identity, check_h_expansion, check_reflection_symmetry, CoeffEngine, CoeffKey,
    CoeffKind, CoeffValue, EvalPoint,
};
use embedded_spectra::integrator::{
    integrate_coupled_construction, integrate_prufer, log_mesh, shoot_psi_initial, ConstructionRun,
    Frozen, IntegratorConfig, ShootingConfig, Trajectory, XiProfile,
};
use embedded_spectra::io::{
    gnuplot_script, json_with_provenance, read_trajectory_csv, scan_csv, trajectory_csv, write_atomic,
    Provenance,
};
use embedded_spectra::phase_sets::{build_resonance_set, PhaseSet};
use embedded_spectra::potential::{plan_construction, ConstructionPlan, PotentialModel, PotentialSpec};
use embedded_spectra::rational::{parse_rational, parse_rational_list, to_f64};
use embedded_spectra::{Error, Result};

#[derive(Parser)]
#[command(name = "embspec", version, about = "Embedded eigenvalues of decaying oscillatory potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the candidate energies S_p of a phase set as JSON.
    ResonanceSet(ResonanceSetArgs),
    /// Evaluate and check the coefficient functions.
    #[command(subcommand)]
    Coeffs(CoeffsCommand),
    /// Write the construction plan for a potential.
    Build(BuildArgs),
    /// Integrate a trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Check a construction trajectory; the exit status reflects the verdicts.
    Verify(VerifyArgs),
    /// Tabulate sup log R over an energy grid.
    Scan(ScanArgs),
}

#[derive(Args)]
struct ResonanceSetArgs {
    /// Comma-separated rational phases, e.g. `2,-2`.
    #[arg(long, allow_hyphen_values = true)]
    phases: String,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CoeffsCommand {
    /// Evaluate one coefficient exactly.
    Eval(EvalArgs),
    /// Check an identity at random rational points.
    Check(CheckArgs),
    /// Compare the recursion for F_{I,0} with the lattice-path expansion.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "F", num_args = 2, value_names = ["I", "K"], group = "which")]
    upper_f: Option<Vec<usize>>,
    #[arg(long = "G", num_args = 2, value_names = ["I", "K"], group = "which")]
    upper_g: Option<Vec<usize>>,
    #[arg(long = "f", num_args = 2, value_names = ["I", "K"], group = "which")]
    lower_f: Option<Vec<usize>>,
    #[arg(long = "g", num_args = 2, value_names = ["I", "K"], group = "which")]
    lower_g: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    eta: String,
    /// Comma-separated phases; defaults to I zeros.
    #[arg(long, allow_hyphen_values = true)]
    phases: Option<String>,
    #[arg(long, default_value_t = embedded_spectra::coeff::DEFAULT_ORDER_CAP)]
    cap: usize,
}

#[derive(Args)]
struct CheckArgs {
    /// `convolution-f` (alias 5.8), `convolution-g` (5.9) or `reflection` (5.11).
    #[arg(long)]
    identity: String,
    #[arg(long = "I")]
    order: usize,
    #[arg(long = "K", default_value_t = 0)]
    harmonic: usize,
    #[arg(long = "k", default_value_t = 0)]
    split: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long = "I")]
    order: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BuildArgs {
    /// Potential description (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Potential description (JSON); without `--plan` the potential is
    /// integrated forward as given.
    #[arg(long, required_unless_present = "plan")]
    config: Option<PathBuf>,
    /// Plan written by `build`; enables phase locking.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 1e4)]
    x_max: f64,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Prüfer angle at the left end of forward runs.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta0: f64,
    /// For frozen-phase plans: integrate the decaying solution backward
    /// from the locked state at `x_max`.
    #[arg(long)]
    decaying: bool,
    #[arg(long, default_value_t = 16)]
    shoot_grid: usize,
    #[arg(long, default_value_t = 1e-4)]
    shoot_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    traj: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    e_min: f64,
    #[arg(long, default_value_t = 3.0)]
    e_max: f64,
    /// Number of grid points, endpoints included.
    #[arg(long, default_value_t = 281)]
    e_steps: usize,
    /// Left end of each run; defaults to x0 of the potential.
    #[arg(long)]
    x_start: Option<f64>,
    #[arg(long, default_value_t = 1e3)]
    x_max: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scan CSV; a gnuplot script is written next to it with extension `.gp`.
    #[arg(long)]
    out: PathBuf,
}

/// What `build` writes and `simulate`/`verify` read back.
#[derive(Serialize, Deserialize)]
struct PlanArtifact {
    spec: PotentialSpec,
    plan: ConstructionPlan,
}

#[derive(Serialize)]
struct VerifyArtifact<'a> {
    #[serde(flatten)]
    report: &'a VerificationReport,
    eigenvalue: EigenvalueSummary,
}

#[derive(Serialize)]
#[serde(untagged)]
enum EigenvalueSummary {
    Found {
        theta_boundary: f64,
        #[serde(rename = "B")]
        b: f64,
        square_integrable: bool,
    },
    Missing {
        not_found: String,
    },
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_plan(path: &Path) -> Result<(Vec<u8>, PlanArtifact)> {
    let bytes = read(path)?;
    let art: PlanArtifact = serde_json::from_slice(&bytes)?;
    art.spec.validate()?;
    Ok((bytes, art))
}

fn resonance_set(a: ResonanceSetArgs) -> Result<u8> {
    let phases = parse_rational_list(&a.phases)?;
    if a.p < 2 {
        return Err(Error::InvalidSpec(format!("p must be at least 2, got {}", a.p)));
    }
    let set = build_resonance_set(&PhaseSet::new(phases), a.p);
    let text = match &a.out {
        Some(_) => {
            let prov = Provenance::new("resonance-set", &format!("{} {}", a.phases, a.p), &[], 0);
            json_with_provenance(&set, &prov)?
        }
        None => serde_json::to_string(&set)? + "\n",
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn coeff_eval(a: EvalArgs) -> Result<u8> {
    let (kind, idx) = [
        (CoeffKind::UpperF, &a.upper_f),
        (CoeffKind::UpperG, &a.upper_g),
        (CoeffKind::LowerF, &a.lower_f),
        (CoeffKind::LowerG, &a.lower_g),
    ]
    .into_iter()
    .find_map(|(k, v)| v.as_ref().map(|v| (k, v.clone())))
    .ok_or_else(|| Error::InvalidCoefficient("one of --F, --G, --f, --g is required".into()))?;
    let key = CoeffKey::new(idx[0], idx[1])?;
    let eta = parse_rational(&a.eta)?;
    let phis = match &a.phases {
        Some(p) => parse_rational_list(p)?,
        None => vec![Default::default(); key.order],
    };
    let engine = CoeffEngine::with_cap(a.cap);
    match engine.eval(kind, key, &EvalPoint::new(eta, phis))? {
        v @ CoeffValue::Finite(_) => {
            println!("{v}");
            Ok(0)
        }
        v => {
            println!("{v}");
            Ok(3)
        }
    }
}

fn coeff_check(a: CheckArgs) -> Result<u8> {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let report = match a.identity.as_str() {
        "convolution-f" | "5.8" => check_convolution_identity(
            &engine,
            CoeffKind::UpperF,
            a.order,
            a.harmonic,
            a.split,
            a.trials,
            &mut rng,
        )?,
        "convolution-g" | "5.9" => check_convolution_identity(
            &engine,
            CoeffKind::UpperG,
            a.order,
            a.harmonic,
            a.split,
            a.trials,
            &mut rng,
        )?,
        "reflection" | "5.11" => check_reflection_symmetry(&engine, a.order, a.trials, &mut rng)?,
        other => {
            return Err(Error::InvalidCoefficient(format!(
                "unknown identity {other:?}; expected convolution-f, convolution-g or reflection"
            )))
        }
    };
    println!("{report}");
    if report.skipped > 0 {
        eprintln!("{} points on poles were redrawn", report.skipped);
    }
    Ok(if report.passed() && report.checked() == a.trials { 0 } else { 2 })
}

fn coeff_oracle(a: OracleArgs) -> Result<u8> {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let report = check_h_expansion(&engine, a.order, a.trials, &mut rng)?;
    println!("path expansion vs F_{{{},0}}: {report}", a.order);
    Ok(if report.passed() { 0 } else { 2 })
}

fn build(a: BuildArgs) -> Result<u8> {
    let bytes = read(&a.config)?;
    let spec = PotentialSpec::from_json(std::str::from_utf8(&bytes).map_err(|e| Error::InvalidSpec(e.to_string()))?)?
        .resolve_constraint()?;
    let plan = plan_construction(&spec, &CoeffEngine::new())?;
    let prov = Provenance::new("build", "", &[&bytes], 0);
    let text = json_with_provenance(&PlanArtifact { spec, plan }, &prov)?;
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

/// Rebuilds the `xi` interpolant of a construction trajectory from its
/// samples, with slopes from the locking equation.
fn profile_from(traj: &Trajectory, model: &PotentialModel) -> Option<XiProfile> {
    let mut p = XiProfile::default();
    for s in &traj.samples {
        let (xi, psi) = (s.xi?, s.psi?);
        p.push(s.x, xi, model.xi_rate(s.x, psi));
    }
    Some(p)
}

fn simulate(a: SimulateArgs) -> Result<u8> {
    let icfg = IntegratorConfig::with_tol(a.tol);
    let params = format!(
        "x_max={} samples={} tol={} theta0={} decaying={} grid={} shoot_tol={}",
        a.x_max, a.samples, a.tol, a.theta0, a.decaying, a.shoot_grid, a.shoot_tol
    );
    let mut extra: Vec<(&str, String)> = Vec::new();
    let (inputs, traj) = if let Some(plan_path) = &a.plan {
        let (bytes, art) = load_plan(plan_path)?;
        let (spec, plan) = (&art.spec, &art.plan);
        let model = PotentialModel::from_plan(spec, plan);
        let energy = to_f64(&spec.energy);
        let traj = if plan.dynamic {
            let cfg = ShootingConfig {
                energy,
                theta0: a.theta0,
                mesh: log_mesh(spec.x0, a.x_max, a.samples),
                target: plan.target_psi,
                exponent: DecayModel::from_spec(spec).transient,
                tol: a.shoot_tol,
                grid: a.shoot_grid,
                max_bisections: 60,
            };
            let shot = shoot_psi_initial(&model, &cfg, &icfg)?;
            extra.push(("mode", "construction".into()));
            extra.push(("xi0", format!("{:.16e}", shot.xi0)));
            extra.push(("psi_inf", format!("{:.16e}", shot.psi_inf)));
            extra.push(("shooting_runs", shot.runs.to_string()));
            integrate_coupled_construction(&model, energy, a.theta0, shot.xi0, &cfg.mesh, &icfg, false)?
                .trajectory
        } else {
            let pot = Frozen { model: &model, xi: 0.0 };
            let mut t = if a.decaying {
                extra.push(("mode", "decaying".into()));
                let theta_end = 0.5 * (plan.target_psi - plan.xi_offset);
                integrate_prufer(&pot, energy, theta_end, 0.0, &log_mesh(a.x_max, spec.x0, a.samples), &icfg)?
            } else {
                extra.push(("mode", "forward".into()));
                integrate_prufer(&pot, energy, a.theta0, 0.0, &log_mesh(spec.x0, a.x_max, a.samples), &icfg)?
            };
            for s in &mut t.samples {
                s.psi = Some(model.psi(s.theta, 0.0));
            }
            t
        };
        (bytes, traj)
    } else {
        let path = a.config.as_ref().expect("clap enforces --config or --plan");
        let bytes = read(path)?;
        let spec = PotentialSpec::from_json(std::str::from_utf8(&bytes).map_err(|e| Error::InvalidSpec(e.to_string()))?)?;
        let model = PotentialModel::from_spec(&spec, &CoeffEngine::new())?;
        let pot = Frozen { model: &model, xi: 0.0 };
        extra.push(("mode", "forward".into()));
        let mesh = log_mesh(spec.x0, a.x_max, a.samples);
        (bytes, integrate_prufer(&pot, to_f64(&spec.energy), a.theta0, 0.0, &mesh, &icfg)?)
    };
    let prov = Provenance::new("simulate", &params, &[&inputs], a.seed);
    emit(a.out.as_deref(), &trajectory_csv(&traj, &prov, &extra))?;
    Ok(0)
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let (plan_bytes, art) = load_plan(&a.plan)?;
    let traj_bytes = read(&a.traj)?;
    let traj = read_trajectory_csv(&String::from_utf8_lossy(&traj_bytes))?;
    let (spec, plan) = (&art.spec, &art.plan);
    let report = verify_construction(spec, plan, &traj)?;

    let model = PotentialModel::from_plan(spec, plan);
    let x_max = traj.samples.last().map_or(spec.x0, |s| s.x);
    let ecfg = EigenSearchConfig::for_spec(spec, x_max, IntegratorConfig::with_tol(a.tol));
    let forward = plan.dynamic.then(|| ConstructionRun {
        profile: profile_from(&traj, &model),
        trajectory: traj.clone(),
    });
    let eigenvalue = match detect_embedded_eigenvalue(spec, plan, &model, forward.as_ref(), &ecfg) {
        Ok(d) => EigenvalueSummary::Found {
            theta_boundary: d.theta_boundary,
            b: d.fit.b,
            square_integrable: true,
        },
        Err(e @ Error::NotFound(_)) => EigenvalueSummary::Missing {
            not_found: e.to_string(),
        },
        Err(e) => return Err(e),
    };

    let prov = Provenance::new("verify", &format!("tol={}", a.tol), &[&plan_bytes, &traj_bytes], a.seed);
    let text = json_with_provenance(&VerifyArtifact { report: &report, eigenvalue }, &prov)?;
    emit(a.out.as_deref(), &text)?;
    if report.all_pass() {
        eprintln!("all verdicts pass");
        Ok(0)
    } else {
        eprintln!("verdicts failed: {:?}", report.verdicts);
        Ok(2)
    }
}

fn scan(a: ScanArgs) -> Result<u8> {
    let bytes = read(&a.config)?;
    let spec = PotentialSpec::from_json(std::str::from_utf8(&bytes).map_err(|e| Error::InvalidSpec(e.to_string()))?)?;
    if a.e_steps < 2 || !(a.e_min > 0.0 && a.e_max > a.e_min) {
        return Err(Error::InvalidSpec("energy grid needs 0 < e_min < e_max and two points".into()));
    }
    let model = PotentialModel::from_spec(&spec, &CoeffEngine::new())?;
    let pot = Frozen { model: &model, xi: 0.0 };
    let energies: Vec<f64> = (0..a.e_steps)
        .map(|i| a.e_min + (a.e_max - a.e_min) * i as f64 / (a.e_steps - 1) as f64)
        .collect();
    let x_start = a.x_start.unwrap_or(spec.x0);
    let mut rows = scan_energies(&pot, &energies, x_start, a.x_max, &IntegratorConfig::with_tol(a.tol));

    let candidates: Vec<f64> = build_resonance_set(&spec.phase_set(), spec.p)
        .energies()
        .map(to_f64)
        .collect();
    for r in &mut rows {
        if candidates.iter().any(|c| (c - r.energy).abs() <= 1e-12 * c) {
            r.status.push_str(";on_candidate");
        }
    }
    let spikes = spike_energies(&rows, 3.0);
    let params = format!(
        "e_min={} e_max={} e_steps={} x_start={} x_max={} tol={}",
        a.e_min, a.e_max, a.e_steps, x_start, a.x_max, a.tol
    );
    let prov = Provenance::new("scan", &params, &[&bytes], a.seed);
    let fmt_list = |v: &[f64]| v.iter().map(|e| format!("{e}")).collect::<Vec<_>>().join(" ");
    let extra = [("candidates", fmt_list(&candidates)), ("spikes", fmt_list(&spikes))];
    write_atomic(&a.out, scan_csv(&rows, &prov, &extra).as_bytes())?;
    let csv_name = a.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let marks: Vec<f64> = candidates.iter().cloned().filter(|c| *c >= a.e_min && *c <= a.e_max).collect();
    write_atomic(&a.out.with_extension("gp"), gnuplot_script(&csv_name, &marks).as_bytes())?;
    if let Some(top) = rows.iter().filter(|r| r.sup_log_r.is_finite()).max_by(|x, y| x.sup_log_r.total_cmp(&y.sup_log_r)) {
        eprintln!("max sup log R = {:.4} at E = {}; spikes at [{}]", top.sup_log_r, top.energy, fmt_list(&spikes));
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ResonanceSet(a) => resonance_set(a),
        Command::Coeffs(CoeffsCommand::Eval(a)) => coeff_eval(a),
        Command::Coeffs(CoeffsCommand::Check(a)) => coeff_check(a),
        Command::Coeffs(CoeffsCommand::Oracle(a)) => coeff_oracle(a),
        Command::Build(a) => build(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Scan(a) => scan(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
