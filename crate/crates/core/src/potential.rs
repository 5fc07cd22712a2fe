//! Potentials `V(x) = sum_k lambda_k x^-gamma cos(alpha_k x + xi_k(x)) + beta0(x)`
//! built to carry an embedded eigenvalue at a chosen energy.
//!
//! Each cosine is split into two exponential components of half amplitude,
//! `(lambda/2) x^-gamma e^{+-i(alpha x + xi)}` with phases `+-alpha`. The
//! resonant coefficient therefore carries a factor `(1/2)^(p-1)`, reported
//! as `amplitude_convention` in the plan.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::coeff::{CoeffEngine, CoeffKey, CoeffKind, CoeffValue, EvalPoint};
use crate::error::{Error, Result};
use crate::phase_sets::{build_resonance_set, for_each_multiset, PhaseSet};
use crate::rational::{
    distinct_permutations, format_rational, from_f64, int, parse_rational, ratio, serde_str,
    sqrt_exact, to_f64, Rational,
};

/// A positive amplitude, kept exact whenever the input allows it.
#[derive(Debug, Clone, PartialEq)]
pub enum Lambda {
    /// A JSON number.
    Number(f64),
    /// `"num/den"`.
    Exact(Rational),
    /// `"sqrt(num/den)"`: the amplitude whose square is the given rational.
    Sqrt(Rational),
    /// `"constraint"`: solved so that `sum_k lambda_k^2 / (4E - alpha_k^2) = 0`.
    Constraint,
}

impl Lambda {
    /// `value^2` as an exact rational (every finite double is dyadic).
    pub fn square(&self) -> Option<Rational> {
        match self {
            Lambda::Number(x) => from_f64(*x).map(|r| &r * &r),
            Lambda::Exact(r) => Some(r * r),
            Lambda::Sqrt(s) => Some(s.clone()),
            Lambda::Constraint => None,
        }
    }

    pub fn exact(&self) -> Option<Rational> {
        match self {
            Lambda::Number(x) => from_f64(*x),
            Lambda::Exact(r) => Some(r.clone()),
            Lambda::Sqrt(s) => sqrt_exact(s),
            Lambda::Constraint => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Lambda::Number(x) => Some(*x),
            Lambda::Exact(r) => Some(to_f64(r)),
            Lambda::Sqrt(s) => Some(to_f64(s).sqrt()),
            Lambda::Constraint => None,
        }
    }

    /// The amplitude with square `s`, as an exact rational when possible.
    pub fn from_square(s: Rational) -> Lambda {
        match sqrt_exact(&s) {
            Some(r) => Lambda::Exact(r),
            None => Lambda::Sqrt(s),
        }
    }

    pub fn parse(s: &str) -> Result<Lambda> {
        let t = s.trim();
        if t == "constraint" {
            return Ok(Lambda::Constraint);
        }
        if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            return Ok(Lambda::Sqrt(parse_rational(inner)?));
        }
        Ok(Lambda::Exact(parse_rational(t)?))
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Number(x) => write!(f, "{x}"),
            Lambda::Exact(r) => f.write_str(&format_rational(r)),
            Lambda::Sqrt(s) => write!(f, "sqrt({})", format_rational(s)),
            Lambda::Constraint => f.write_str("constraint"),
        }
    }
}

impl Serialize for Lambda {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Lambda::Number(x) => s.serialize_f64(*x),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Lambda {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Lambda::Number(x)),
            Raw::Str(s) => Lambda::parse(&s).map_err(de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiMode {
    /// `xi_k` is the constant `xi`.
    #[default]
    Frozen,
    /// `xi_k(x) = xi + c_k xi(x)` with `xi(x)` generated by the phase-locking equation.
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Beta0Mode {
    #[default]
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "iterative", alias = "iterative-cancellation")]
    Iterative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub lambda: Lambda,
    #[serde(with = "serde_str")]
    pub alpha: Rational,
    #[serde(default)]
    pub xi_mode: XiMode,
    #[serde(default)]
    pub xi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub p: usize,
    #[serde(with = "serde_str")]
    pub gamma: Rational,
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub beta0_mode: Beta0Mode,
    pub x0: f64,
    #[serde(rename = "E", with = "serde_str")]
    pub energy: Rational,
}

impl PotentialSpec {
    pub fn from_json(text: &str) -> Result<PotentialSpec> {
        let spec: PotentialSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.p < 2 {
            return bad(format!("p must be at least 2, got {}", self.p));
        }
        let lo = ratio(1, self.p as i64);
        let hi = ratio(1, self.p as i64 - 1);
        if !(self.gamma > lo && self.gamma <= hi) {
            return bad(format!(
                "gamma = {} outside ({}, {}]",
                format_rational(&self.gamma),
                format_rational(&lo),
                format_rational(&hi)
            ));
        }
        if !self.energy.is_positive() {
            return bad("E must be positive".into());
        }
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return bad(format!("x0 must be positive, got {}", self.x0));
        }
        let mut constraints = 0;
        for (k, t) in self.terms.iter().enumerate() {
            if !t.alpha.is_positive() {
                return bad(format!("term {k}: alpha must be positive"));
            }
            if self.terms[..k].iter().any(|o| o.alpha == t.alpha) {
                return bad(format!("term {k}: alpha repeats an earlier term"));
            }
            match &t.lambda {
                Lambda::Constraint => constraints += 1,
                l if !l.value().is_some_and(|v| v > 0.0 && v.is_finite()) => {
                    return bad(format!("term {k}: lambda must be positive, got {l}"));
                }
                _ => {}
            }
            if !t.xi.is_finite() || t.c.is_some_and(|c| !c.is_finite()) {
                return bad(format!("term {k}: xi and c must be finite"));
            }
        }
        if constraints > 1 {
            return bad("at most one lambda may be \"constraint\"".into());
        }
        Ok(())
    }

    pub fn is_critical(&self) -> bool {
        self.gamma == ratio(1, self.p as i64 - 1)
    }

    pub fn eta(&self) -> f64 {
        2.0 * to_f64(&self.energy).sqrt()
    }

    /// `eta = 2 sqrt(E)` when it is rational.
    pub fn eta_exact(&self) -> Option<Rational> {
        sqrt_exact(&self.energy).map(|r| r * int(2))
    }

    pub fn phase_set(&self) -> PhaseSet {
        PhaseSet::symmetric(self.terms.iter().map(|t| t.alpha.clone()))
    }

    /// Replaces a `"constraint"` amplitude by its solved value.
    pub fn resolve_constraint(&self) -> Result<PotentialSpec> {
        let Some(j) = self.terms.iter().position(|t| t.lambda == Lambda::Constraint) else {
            return Ok(self.clone());
        };
        let four_e = &self.energy * int(4);
        let den = |a: &Rational| &four_e - a * a;
        let signs: Vec<bool> = self.terms.iter().map(|t| den(&t.alpha).is_positive()).collect();
        if signs.iter().all(|&s| s) || signs.iter().all(|&s| !s) {
            return Err(Error::Infeasible(format!(
                "E = {} is not strictly between min alpha^2/4 and max alpha^2/4",
                format_rational(&self.energy)
            )));
        }
        let dj = den(&self.terms[j].alpha);
        if dj.is_zero() {
            return Err(Error::Infeasible(format!(
                "4E equals alpha^2 for term {j}; the constraint has no finite solution"
            )));
        }
        let mut rest = Rational::zero();
        for (k, t) in self.terms.iter().enumerate() {
            if k == j {
                continue;
            }
            let dk = den(&t.alpha);
            if dk.is_zero() {
                return Err(Error::Infeasible(format!("4E equals alpha^2 for term {k}")));
            }
            rest += t.lambda.square().expect("resolved amplitude") / dk;
        }
        let square = -dj * rest;
        if !square.is_positive() {
            return Err(Error::Infeasible(format!(
                "term {j} cannot balance the others: lambda^2 would be {}",
                format_rational(&square)
            )));
        }
        let mut out = self.clone();
        out.terms[j].lambda = Lambda::from_square(square);
        Ok(out)
    }
}

/// Positive amplitudes with `sum_k lambda_k^2 / (4E - alpha_k^2) = 0`.
///
/// All amplitudes but one equal `scale`; the remaining one balances the
/// sum. The last index whose denominator has the opposite sign to the rest
/// of the sum is used.
pub fn solve_lambda_constraint(alphas: &[Rational], energy: &Rational, scale: f64) -> Result<Vec<Lambda>> {
    if alphas.len() < 2 {
        return Err(Error::Infeasible("need at least two terms".into()));
    }
    let s = from_f64(scale)
        .filter(|s| s.is_positive())
        .ok_or_else(|| Error::Infeasible(format!("scale must be positive, got {scale}")))?;
    let s2 = &s * &s;
    let four_e = energy * int(4);
    let dens: Vec<Rational> = alphas.iter().map(|a| &four_e - a * a).collect();
    if let Some(k) = dens.iter().position(|d| d.is_zero()) {
        return Err(Error::Infeasible(format!("4E equals alpha_{k}^2")));
    }
    if dens.iter().all(|d| d.is_positive()) || dens.iter().all(|d| d.is_negative()) {
        return Err(Error::Infeasible(format!(
            "E = {} is not strictly between min alpha^2/4 and max alpha^2/4",
            format_rational(energy)
        )));
    }
    for j in (0..alphas.len()).rev() {
        let rest: Rational = dens
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, d)| &s2 / d)
            .sum();
        let square = -&dens[j] * rest;
        if square.is_positive() {
            let value = if let Some(r) = from_f64(scale).filter(|_| scale.fract() == 0.0) {
                Lambda::Exact(r)
            } else {
                Lambda::Number(scale)
            };
            let mut out = vec![value; alphas.len()];
            out[j] = Lambda::from_square(square);
            return Ok(out);
        }
    }
    Err(Error::Infeasible(
        "no single amplitude can balance the others at this scale".into(),
    ))
}

/// One exponential component of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// `(lambda_k / 2) x^-gamma e^{-i sign xi_k}` with phase `sign * alpha_k`.
    Term { index: usize, sign: i8 },
    /// The non-oscillating correction `beta0`.
    Beta0,
}

impl Component {
    fn phase(&self, spec: &PotentialSpec) -> Rational {
        match *self {
            Component::Term { index, sign } => &spec.terms[index].alpha * int(sign as i64),
            Component::Beta0 => Rational::zero(),
        }
    }
}

/// A zero-phase-sum product of components contributing to the drift `Omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaTerm {
    pub components: Vec<Component>,
    pub order: usize,
    /// `f_{I,0}` at the component phases.
    #[serde(with = "serde_str")]
    pub coefficient: Rational,
    /// Number of distinct orderings of the components.
    pub multiplicity: u64,
    /// Independent of the `xi_k` (each `+alpha_k` paired with a `-alpha_k`).
    pub static_term: bool,
}

/// Exact coefficient of `x^{-I gamma}` collected from static terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaCoefficient {
    pub order: usize,
    #[serde(with = "serde_str")]
    pub value: Rational,
}

/// Index `j` of the representation and the sign of its phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepEntry {
    pub term: usize,
    pub sign: i8,
    #[serde(with = "serde_str")]
    pub phase: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn arg(&self) -> f64 {
        self.im.atan2(self.re)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionPlan {
    #[serde(rename = "E", with = "serde_str")]
    pub energy: Rational,
    pub eta: f64,
    pub representation: Vec<RepEntry>,
    #[serde(rename = "C1")]
    pub c1: u64,
    /// `f_{p-1,1}` at the representation phases.
    #[serde(with = "serde_str")]
    pub resonant_coefficient: Rational,
    pub amplitude_convention: f64,
    #[serde(rename = "Lambda")]
    pub lambda: ComplexValue,
    #[serde(rename = "Lambda_abs")]
    pub lambda_abs: f64,
    pub target_psi: f64,
    /// Per-term weights `c_k` of the dynamic phase.
    pub c: Vec<f64>,
    /// Per-term factors `kappa_k` in `xi_k(x) = xi + kappa_k xi(x)`.
    pub kappa: Vec<f64>,
    /// Constant part of the aggregate phase `sum_j -s_j xi_{k_j}`.
    pub xi_offset: f64,
    pub dynamic: bool,
    pub omega_terms: Vec<OmegaTerm>,
    pub omega_coefficients: Vec<OmegaCoefficient>,
}

/// Distinct-permutation count of a component multiset.
fn component_multiplicity(comps: &[Component]) -> u64 {
    let mut counts: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < comps.len() {
        let j = comps[i..].iter().take_while(|c| **c == comps[i]).count();
        counts.push(j);
        i += j;
    }
    distinct_permutations(&counts)
}

fn eval_lower_f(
    engine: &CoeffEngine,
    order: usize,
    harmonic: usize,
    eta: &Rational,
    phis: Vec<Rational>,
) -> Result<CoeffValue> {
    engine.eval(
        CoeffKind::LowerF,
        CoeffKey::new(order, harmonic)?,
        &EvalPoint::new(eta.clone(), phis),
    )
}

fn components(spec: &PotentialSpec) -> Vec<Component> {
    let mut out = Vec::new();
    for index in 0..spec.terms.len() {
        out.push(Component::Term { index, sign: 1 });
        out.push(Component::Term { index, sign: -1 });
    }
    if spec.beta0_mode == Beta0Mode::Iterative {
        out.push(Component::Beta0);
    }
    out
}

/// Zero-sum component products of orders `1..=p-1` with their `f_{I,0}`.
pub fn omega_terms(spec: &PotentialSpec, engine: &CoeffEngine) -> Result<Vec<OmegaTerm>> {
    let eta = spec.eta_exact().ok_or_else(|| {
        Error::InvalidSpec("E must be the square of a rational for exact coefficients".into())
    })?;
    let comps = components(spec);
    let mut tuples = Vec::new();
    for order in 1..spec.p {
        for_each_multiset(comps.len(), order, |idx| {
            let cs: Vec<Component> = idx.iter().map(|&i| comps[i]).collect();
            let sum: Rational = cs.iter().map(|c| c.phase(spec)).sum();
            if sum.is_zero() {
                tuples.push(cs);
            }
        });
    }
    let mut out = Vec::with_capacity(tuples.len());
    for cs in tuples {
        let phis: Vec<Rational> = cs.iter().map(|c| c.phase(spec)).collect();
        let coefficient = match eval_lower_f(engine, cs.len(), 0, &eta, phis)? {
            CoeffValue::Finite(v) => v,
            CoeffValue::Pole(h) => {
                return Err(Error::NonGeneric(format!(
                    "f_{{{},0}} is singular at the drift term {:?} ({} hyperplanes)",
                    cs.len(),
                    cs,
                    h.len()
                )))
            }
        };
        let static_term = !cs.contains(&Component::Beta0)
            && (0..spec.terms.len()).all(|k| {
                let n = |s: i8| {
                    cs.iter()
                        .filter(|c| **c == Component::Term { index: k, sign: s })
                        .count()
                };
                n(1) == n(-1)
            });
        out.push(OmegaTerm {
            order: cs.len(),
            multiplicity: component_multiplicity(&cs),
            components: cs,
            coefficient,
            static_term,
        });
    }
    Ok(out)
}

/// Exact `x^{-I gamma}` coefficients of the `xi`-independent, `beta0`-free
/// part of `Omega`. Each static product contains every `lambda_k` an even
/// number of times, so only the exact squares are needed.
pub fn omega_coefficients(spec: &PotentialSpec, terms: &[OmegaTerm]) -> Vec<OmegaCoefficient> {
    let quarter = ratio(1, 4);
    let mut out: Vec<OmegaCoefficient> = Vec::new();
    for t in terms.iter().filter(|t| t.static_term) {
        let mut value = &t.coefficient * int(t.multiplicity as i64);
        for c in &t.components {
            if let Component::Term { index, sign: 1 } = c {
                let sq = spec.terms[*index].lambda.square().expect("resolved amplitude");
                value *= sq * &quarter;
            }
        }
        match out.iter_mut().find(|o| o.order == t.order) {
            Some(o) => o.value += value,
            None => out.push(OmegaCoefficient {
                order: t.order,
                value,
            }),
        }
    }
    out.sort_by_key(|o| o.order);
    out
}

/// Checks membership of `E` in the shell and computes the resonant data.
pub fn plan_construction(spec: &PotentialSpec, engine: &CoeffEngine) -> Result<ConstructionPlan> {
    spec.validate()?;
    if spec.terms.iter().any(|t| t.lambda == Lambda::Constraint) {
        return Err(Error::InvalidSpec(
            "resolve the \"constraint\" amplitude before planning".into(),
        ));
    }
    let p = spec.p;
    let energy_str = format_rational(&spec.energy);
    let eta = spec.eta_exact().ok_or_else(|| Error::NotInResonanceShell {
        energy: energy_str.clone(),
        detail: "2 sqrt(E) is irrational, so no rational phase sum reaches it".into(),
    })?;
    let phases = spec.phase_set();
    let lower = build_resonance_set(&phases, p - 1);
    if lower.contains(&spec.energy) {
        return Err(Error::NotInResonanceShell {
            energy: energy_str,
            detail: format!("already a sum of at most {} phases", p.saturating_sub(2)),
        });
    }
    let set = build_resonance_set(&phases, p);
    let Some(reps) = set.energies.get(&spec.energy) else {
        return Err(Error::NotInResonanceShell {
            energy: energy_str,
            detail: format!("eta = {} is not a sum of {} phases", format_rational(&eta), p - 1),
        });
    };
    if reps.len() > 1 {
        let shown: Vec<String> = reps
            .iter()
            .map(|r| {
                let v: Vec<String> = r.iter().map(format_rational).collect();
                format!("({})", v.join(", "))
            })
            .collect();
        return Err(Error::NonGeneric(format!(
            "eta = {} has several representations: {}",
            format_rational(&eta),
            shown.join(", ")
        )));
    }
    let rep = &reps[0];
    let representation: Vec<RepEntry> = rep
        .iter()
        .map(|phi| {
            let term = spec
                .terms
                .iter()
                .position(|t| t.alpha == phi.abs())
                .expect("phase comes from a term");
            RepEntry {
                term,
                sign: if phi.is_negative() { -1 } else { 1 },
                phase: phi.clone(),
            }
        })
        .collect();

    let mut counts = Vec::new();
    let mut i = 0;
    while i < rep.len() {
        let j = rep[i..].iter().take_while(|x| **x == rep[i]).count();
        counts.push(j);
        i += j;
    }
    let c1 = distinct_permutations(&counts);

    let resonant_coefficient = match eval_lower_f(engine, p - 1, 1, &eta, rep.clone())? {
        CoeffValue::Finite(v) if !v.is_zero() => v,
        CoeffValue::Finite(_) => {
            return Err(Error::NonGeneric("f_{p-1,1} vanishes at the representation".into()))
        }
        CoeffValue::Pole(_) => {
            return Err(Error::NonGeneric("f_{p-1,1} is singular at the representation".into()))
        }
    };
    let amplitude_convention = 0.5f64.powi(p as i32 - 1);
    let lambda_product: f64 = representation
        .iter()
        .map(|e| spec.terms[e.term].lambda.value().expect("resolved amplitude"))
        .product();
    let re = c1 as f64 * to_f64(&resonant_coefficient) * lambda_product * amplitude_convention;
    let lambda = ComplexValue { re, im: 0.0 };
    let target_psi = wrap_angle(-FRAC_PI_2 - lambda.arg());

    let dynamic = spec.terms.iter().any(|t| t.xi_mode == XiMode::Dynamic);
    let n = spec.terms.len();
    let mut mult = vec![0usize; n];
    let mut sign = vec![1i8; n];
    for e in &representation {
        mult[e.term] += 1;
        sign[e.term] = e.sign;
    }
    let dynamic_in_rep: Vec<usize> = (0..n)
        .filter(|&k| mult[k] > 0 && spec.terms[k].xi_mode == XiMode::Dynamic)
        .collect();
    let share = 1.0 / dynamic_in_rep.iter().map(|&k| mult[k]).sum::<usize>().max(1) as f64;
    let c: Vec<f64> = (0..n)
        .map(|k| match spec.terms[k].xi_mode {
            XiMode::Frozen => 0.0,
            XiMode::Dynamic => spec.terms[k]
                .c
                .unwrap_or(if mult[k] > 0 { share } else { 0.0 }),
        })
        .collect();
    if dynamic {
        let total: f64 = (0..n).map(|k| mult[k] as f64 * c[k]).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "dynamic weights over the representation sum to {total}, not 1"
            )));
        }
    }
    let kappa: Vec<f64> = (0..n)
        .map(|k| if mult[k] > 0 { -(sign[k] as f64) * c[k] } else { c[k] })
        // no negative zeros in the written plan
        .map(|v| v + 0.0)
        .collect();
    let xi_offset: f64 = representation
        .iter()
        .map(|e| -(e.sign as f64) * spec.terms[e.term].xi)
        .sum();

    let omega = omega_terms(spec, engine)?;
    let omega_coefficients = omega_coefficients(spec, &omega);
    Ok(ConstructionPlan {
        energy: spec.energy.clone(),
        eta: to_f64(&eta),
        representation,
        c1,
        resonant_coefficient,
        amplitude_convention,
        lambda,
        lambda_abs: lambda.abs(),
        target_psi,
        c,
        kappa,
        xi_offset,
        dynamic,
        omega_terms: omega,
        omega_coefficients,
    })
}

/// Maps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone)]
struct DriftProduct {
    components: Vec<Component>,
    weight: f64,
}

/// Pointwise evaluator of the constructed potential.
#[derive(Debug, Clone)]
pub struct PotentialModel {
    gamma: f64,
    x0: f64,
    eta: f64,
    /// `(lambda, alpha, xi, kappa)` per term.
    terms: Vec<(f64, f64, f64, f64)>,
    drift: Vec<DriftProduct>,
    iterations: usize,
    resonant: Option<Resonance>,
}

/// The averaged resonant forcing `Lambda x^{-(p-1) gamma} e^{i psi}`.
#[derive(Debug, Clone, Copy)]
pub struct Resonance {
    pub lambda: Complex64,
    pub power: f64,
    pub xi_offset: f64,
    pub dynamic: bool,
}

impl PotentialModel {
    /// The identically zero potential.
    pub fn zero() -> PotentialModel {
        PotentialModel {
            gamma: 1.0,
            x0: 0.0,
            eta: 0.0,
            terms: Vec::new(),
            drift: Vec::new(),
            iterations: 0,
            resonant: None,
        }
    }

    /// Evaluator without construction data: `xi_k` frozen at `xi + kappa_k xi`
    /// with `kappa_k = c_k`, and `beta0` from the drift terms if requested.
    pub fn from_spec(spec: &PotentialSpec, engine: &CoeffEngine) -> Result<PotentialModel> {
        spec.validate()?;
        let spec = spec.resolve_constraint()?;
        let kappa: Vec<f64> = spec.terms.iter().map(|t| t.c.unwrap_or(0.0)).collect();
        let drift = if spec.beta0_mode == Beta0Mode::Iterative {
            omega_terms(&spec, engine)?
        } else {
            Vec::new()
        };
        Ok(Self::assemble(&spec, kappa, &drift, None))
    }

    pub fn from_plan(spec: &PotentialSpec, plan: &ConstructionPlan) -> PotentialModel {
        let drift = if spec.beta0_mode == Beta0Mode::Iterative {
            plan.omega_terms.clone()
        } else {
            Vec::new()
        };
        let resonance = Resonance {
            lambda: Complex64::new(plan.lambda.re, plan.lambda.im),
            power: (spec.p as f64 - 1.0) * to_f64(&spec.gamma),
            xi_offset: plan.xi_offset,
            dynamic: plan.dynamic,
        };
        Self::assemble(spec, plan.kappa.clone(), &drift, Some(resonance))
    }

    fn assemble(
        spec: &PotentialSpec,
        kappa: Vec<f64>,
        drift: &[OmegaTerm],
        resonant: Option<Resonance>,
    ) -> PotentialModel {
        let terms = spec
            .terms
            .iter()
            .zip(kappa)
            .map(|(t, k)| (t.lambda.value().expect("resolved"), to_f64(&t.alpha), t.xi, k))
            .collect();
        let drift = drift
            .iter()
            .map(|t| DriftProduct {
                components: t.components.clone(),
                weight: to_f64(&t.coefficient) * t.multiplicity as f64,
            })
            .collect();
        PotentialModel {
            gamma: to_f64(&spec.gamma),
            x0: spec.x0,
            eta: spec.eta(),
            terms,
            drift,
            iterations: spec.p - 1,
            resonant,
        }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn resonance(&self) -> Option<&Resonance> {
        self.resonant.as_ref()
    }

    pub fn max_alpha(&self) -> f64 {
        self.terms.iter().map(|t| t.1).fold(0.0, f64::max)
    }

    /// `Omega(x)`: the averaged drift of `theta` produced by the zero-sum
    /// component products, given the current `beta0`.
    pub fn omega(&self, x: f64, xi: f64, beta0: f64) -> f64 {
        if self.drift.is_empty() {
            return 0.0;
        }
        let envelope = x.powf(-self.gamma);
        let amps: Vec<Complex64> = self
            .terms
            .iter()
            .map(|&(l, _, xi_k, kappa)| {
                Complex64::from_polar(0.5 * l * envelope, -(xi_k + kappa * xi))
            })
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for d in &self.drift {
            let mut prod = Complex64::new(d.weight, 0.0);
            for c in &d.components {
                prod *= match *c {
                    Component::Term { index, sign: 1 } => amps[index],
                    Component::Term { index, .. } => amps[index].conj(),
                    Component::Beta0 => Complex64::new(beta0, 0.0),
                };
            }
            total += prod;
        }
        total.re
    }

    /// `beta0(x)` after `p - 1` rounds of `beta <- beta + eta Omega(beta)`.
    pub fn beta0(&self, x: f64, xi: f64) -> f64 {
        if self.drift.is_empty() {
            return 0.0;
        }
        let mut beta = 0.0;
        for _ in 0..self.iterations {
            beta += self.eta * self.omega(x, xi, beta);
        }
        beta
    }

    /// `V(x)` for the current aggregate phase `xi`; zero below `x0`.
    pub fn value(&self, x: f64, xi: f64) -> f64 {
        if x < self.x0 {
            return 0.0;
        }
        let envelope = x.powf(-self.gamma);
        let oscillating: f64 = self
            .terms
            .iter()
            .map(|&(l, a, xi_k, kappa)| l * envelope * (a * x + xi_k + kappa * xi).cos())
            .sum();
        oscillating + self.beta0(x, xi)
    }

    /// `xi'(x) = -2 Re(Lambda x^{-(p-1) gamma} e^{i psi})`, zero below `x0`
    /// and without dynamic terms.
    pub fn xi_rate(&self, x: f64, psi: f64) -> f64 {
        match &self.resonant {
            Some(r) if r.dynamic && x >= self.x0 => {
                -2.0 * (r.lambda * Complex64::from_polar(1.0, psi)).re * x.powf(-r.power)
            }
            _ => 0.0,
        }
    }

    /// `psi = sum_j -s_j xi_{k_j} + 2 theta`.
    pub fn psi(&self, theta: f64, xi: f64) -> f64 {
        match &self.resonant {
            Some(r) if r.dynamic => r.xi_offset + xi + 2.0 * theta,
            Some(r) => r.xi_offset + 2.0 * theta,
            None => 2.0 * theta,
        }
    }
}

impl ConstructionPlan {
    /// Exact static drift coefficient of order `I` (zero when absent).
    pub fn omega_coefficient(&self, order: usize) -> Rational {
        self.omega_coefficients
            .iter()
            .find(|o| o.order == order)
            .map(|o| o.value.clone())
            .unwrap_or_else(Rational::zero)
    }
}
