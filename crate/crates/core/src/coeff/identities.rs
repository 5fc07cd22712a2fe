//! Randomised exact checks of the identities the coefficients satisfy, and
//! the predicted pole locus.

use std::fmt;

use rand::Rng;

use num_traits::{Signed, Zero};

use super::oracle::{eval_h_expansion, symmetric_product_sym};
use super::{CoeffEngine, CoeffKey, CoeffKind, CoeffValue, EvalPoint};
use crate::error::{Error, Result};
use crate::rational::{int, Rational};

/// A random rational with numerator in `[-lim, lim]` and denominator in `1..=7`.
fn random_rational<R: Rng + ?Sized>(rng: &mut R, lim: i64) -> Rational {
    Rational::new(rng.gen_range(-lim..=lim).into(), rng.gen_range(1i64..=7).into())
}

/// A random evaluation point with `order` phases and `eta > 0`.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, order: usize) -> EvalPoint {
    let eta = Rational::new(rng.gen_range(1i64..=60).into(), rng.gen_range(1i64..=7).into());
    let phis = (0..order).map(|_| random_rational(rng, 40)).collect();
    EvalPoint::new(eta, phis)
}

/// A random point whose phases sum to zero.
fn random_balanced_point<R: Rng + ?Sized>(rng: &mut R, order: usize) -> EvalPoint {
    let mut p = random_point(rng, order);
    if let Some(last) = order.checked_sub(1) {
        let rest: Rational = p.phis[..last].iter().sum();
        p.phis[last] = -rest;
    }
    p
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub point: EvalPoint,
    pub lhs: CoeffValue,
    pub rhs: CoeffValue,
    pub label: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {} != {}", self.label, self.point, self.lhs, self.rhs)
    }
}

/// Outcome of a randomised identity check.
#[derive(Debug, Clone, Default)]
pub struct IdentityReport {
    pub trials: usize,
    /// Points skipped because some term was non-finite.
    pub skipped: usize,
    pub violations: Vec<Witness>,
}

impl IdentityReport {
    pub fn checked(&self) -> usize {
        self.trials - self.skipped
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ok = self.checked() - self.violations.len();
        if self.passed() {
            write!(f, "OK {ok}/{}", self.checked())?;
        } else {
            write!(f, "FAIL {ok}/{}", self.checked())?;
        }
        for w in &self.violations {
            write!(f, "\n  {w}")?;
        }
        Ok(())
    }
}

/// Points landing on poles are redrawn, up to this many draws per
/// requested point.
const MAX_DRAWS: usize = 20;

pub type ReflectionReport = IdentityReport;
pub type OracleReport = IdentityReport;

/// Evaluates `kind_{order,harmonic}`, treating `harmonic > order` and empty
/// phase lists as the zero function.
fn eval_or_zero(
    engine: &CoeffEngine,
    kind: CoeffKind,
    order: usize,
    harmonic: usize,
    eta: &Rational,
    phis: &[Rational],
) -> CoeffValue {
    if order == 0 || harmonic > order {
        return CoeffValue::Finite(Rational::zero());
    }
    let key = CoeffKey { order, harmonic };
    engine
        .eval(kind, key, &EvalPoint::new(eta.clone(), phis.to_vec()))
        .expect("validated key")
}

fn sum_values(values: impl IntoIterator<Item = CoeffValue>) -> Option<Rational> {
    let mut acc = Rational::zero();
    for v in values {
        acc += v.into_finite()?;
    }
    Some(acc)
}

/// Checks `F_{I,K} = sum_i F_{i,k} (.) G_{I-i,K-k}` and
/// `G_{I,K} = sum_i G_{i,k} (.) G_{I-i,K-k}` exactly at random points.
pub fn check_convolution_identities<R: Rng + ?Sized>(
    engine: &CoeffEngine,
    order: usize,
    harmonic: usize,
    split: usize,
    trials: usize,
    rng: &mut R,
) -> Result<IdentityReport> {
    convolution(engine, &[CoeffKind::UpperF, CoeffKind::UpperG], order, harmonic, split, trials, rng)
}

/// The convolution identity for `F` (`kind = UpperF`) or `G` alone.
pub fn check_convolution_identity<R: Rng + ?Sized>(
    engine: &CoeffEngine,
    kind: CoeffKind,
    order: usize,
    harmonic: usize,
    split: usize,
    trials: usize,
    rng: &mut R,
) -> Result<IdentityReport> {
    if !matches!(kind, CoeffKind::UpperF | CoeffKind::UpperG) {
        return Err(Error::InvalidCoefficient(format!(
            "convolution identities are stated for F and G, not {}",
            kind.symbol()
        )));
    }
    convolution(engine, &[kind], order, harmonic, split, trials, rng)
}

fn convolution<R: Rng + ?Sized>(
    engine: &CoeffEngine,
    kinds: &[CoeffKind],
    order: usize,
    harmonic: usize,
    split: usize,
    trials: usize,
    rng: &mut R,
) -> Result<IdentityReport> {
    if !(0 < split && split < harmonic && harmonic <= order) {
        return Err(Error::InvalidCoefficient(format!(
            "need 0 < k < K <= I, got I = {order}, K = {harmonic}, k = {split}"
        )));
    }
    if order > engine.cap() {
        return Err(Error::OrderCap {
            order,
            cap: engine.cap(),
        });
    }
    let mut report = IdentityReport::default();
    while report.checked() < trials && report.trials < MAX_DRAWS * trials {
        report.trials += 1;
        let point = random_point(rng, order);
        let mut skip = false;
        let mut found = Vec::new();
        for &kind in kinds {
            let label = kind.symbol();
            let lhs = eval_or_zero(engine, kind, order, harmonic, &point.eta, &point.phis);
            let terms = (1..order).map(|i| {
                let p = |eta: &Rational, phis: &[Rational]| {
                    eval_or_zero(engine, kind, i, split, eta, phis)
                };
                let q = |eta: &Rational, phis: &[Rational]| {
                    eval_or_zero(engine, CoeffKind::UpperG, order - i, harmonic - split, eta, phis)
                };
                symmetric_product_sym(&p, i, &q, &point)
            });
            let rhs = sum_values(terms);
            match (lhs.finite(), rhs) {
                (Some(l), Some(r)) if *l == r => {}
                (Some(_), Some(r)) => found.push(Witness {
                    point: point.clone(),
                    lhs: lhs.clone(),
                    rhs: CoeffValue::Finite(r),
                    label: format!("{label}_{{{order},{harmonic}}} split k = {split}"),
                }),
                _ => skip = true,
            }
        }
        if skip {
            report.skipped += 1;
        } else {
            report.violations.extend(found);
        }
    }
    Ok(report)
}

/// Checks `F_{I,0}(eta; phi) = F_{I,0}(eta; -phi)` at random points with
/// `sum phi = 0`.
pub fn check_reflection_symmetry<R: Rng + ?Sized>(
    engine: &CoeffEngine,
    order: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ReflectionReport> {
    let key = CoeffKey::new(order, 0)?;
    let mut report = IdentityReport::default();
    while report.checked() < trials && report.trials < MAX_DRAWS * trials {
        report.trials += 1;
        let point = random_balanced_point(rng, order);
        let a = engine.eval_F(key, &point)?;
        let b = engine.eval_F(key, &point.negated_phases())?;
        match (a.finite(), b.finite()) {
            (Some(x), Some(y)) if x == y => {}
            (Some(_), Some(_)) => report.violations.push(Witness {
                point,
                lhs: a,
                rhs: b,
                label: format!("F_{{{order},0}} reflection"),
            }),
            _ => report.skipped += 1,
        }
    }
    Ok(report)
}

/// Compares the recursion against the lattice-path expansion of `F_{I,0}`.
pub fn check_h_expansion<R: Rng + ?Sized>(
    engine: &CoeffEngine,
    order: usize,
    trials: usize,
    rng: &mut R,
) -> Result<OracleReport> {
    let key = CoeffKey::new(order, 0)?;
    let mut report = IdentityReport::default();
    while report.checked() < trials && report.trials < MAX_DRAWS * trials {
        report.trials += 1;
        let point = random_point(rng, order);
        let a = engine.eval_F(key, &point)?;
        let b = eval_h_expansion(&point);
        match (a.finite(), b.finite()) {
            (Some(x), Some(y)) if x == y => {}
            (Some(_), Some(_)) => report.violations.push(Witness {
                point,
                lhs: a,
                rhs: b,
                label: format!("F_{{{order},0}} vs path expansion"),
            }),
            _ => report.skipped += 1,
        }
    }
    Ok(report)
}

/// Whether `eta` equals the sum of some `b` of the phases, with `1 <= b < I`
/// for `F`/`f` and `1 <= b <= I` for `G`/`g`: the locus where a
/// nonremovable singularity may sit.
pub fn singularity_support(kind: CoeffKind, _key: CoeffKey, point: &EvalPoint) -> bool {
    let n = point.phis.len();
    let max_b = if kind.is_g() { n } else { n.saturating_sub(1) };
    (1u32..(1u32 << n)).any(|mask| {
        let b = mask.count_ones() as usize;
        if b > max_b {
            return false;
        }
        let sum: Rational = (0..n)
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| &point.phis[j])
            .sum();
        sum == point.eta
    })
}

/// Outcome of probing points forced onto denominator hyperplanes.
#[derive(Debug, Clone, Default)]
pub struct PoleProbeReport {
    pub probes: usize,
    pub poles: usize,
    pub outside_locus: Vec<String>,
}

impl PoleProbeReport {
    pub fn passed(&self) -> bool {
        self.outside_locus.is_empty()
    }
}

impl fmt::Display for PoleProbeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "OK" } else { "FAIL" };
        write!(
            f,
            "{verdict}: {} poles in {} probes, {} outside the predicted locus",
            self.poles,
            self.probes,
            self.outside_locus.len()
        )?;
        for w in &self.outside_locus {
            write!(f, "\n  {w}")?;
        }
        Ok(())
    }
}

/// Places `eta` on random hyperplanes `k eta = sum of a phase subset` and
/// checks that every non-finite `F`/`G`/`f`/`g` value is predicted by
/// [`singularity_support`].
pub fn probe_pole_containment<R: Rng + ?Sized>(
    engine: &CoeffEngine,
    order: usize,
    trials: usize,
    rng: &mut R,
) -> Result<PoleProbeReport> {
    if order > engine.cap() {
        return Err(Error::OrderCap {
            order,
            cap: engine.cap(),
        });
    }
    let mut report = PoleProbeReport::default();
    let kinds = [
        CoeffKind::UpperF,
        CoeffKind::UpperG,
        CoeffKind::LowerF,
        CoeffKind::LowerG,
    ];
    let mut done = 0;
    while done < trials {
        let mut point = random_point(rng, order);
        let mask = rng.gen_range(1u32..(1u32 << order));
        let k = rng.gen_range(1..=order);
        let sum: Rational = (0..order)
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| &point.phis[j])
            .sum();
        let eta = sum / int(k as i64);
        if !eta.is_positive() {
            continue;
        }
        point.eta = eta;
        done += 1;
        for kind in kinds {
            for harmonic in 0..=order {
                let key = CoeffKey::new(order, harmonic)?;
                report.probes += 1;
                if let CoeffValue::Pole(_) = engine.eval(kind, key, &point)? {
                    report.poles += 1;
                    if !singularity_support(kind, key, &point) {
                        report.outside_locus.push(format!(
                            "{}_{{{order},{harmonic}}} at {point}",
                            kind.symbol()
                        ));
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(eta: i64, phis: &[i64]) -> EvalPoint {
        EvalPoint::new(int(eta), phis.iter().map(|&p| int(p)).collect())
    }

    #[test]
    fn support_examples() {
        let k21 = CoeffKey::new(2, 1).unwrap();
        assert!(!singularity_support(CoeffKind::UpperF, k21, &pt(3, &[-2, 5])));
        assert!(singularity_support(CoeffKind::UpperG, k21, &pt(3, &[-2, 5])));
        assert!(!singularity_support(CoeffKind::UpperG, k21, &pt(100, &[-2, 5])));
    }

    #[test]
    fn small_identity_run() {
        let engine = CoeffEngine::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = check_convolution_identities(&engine, 3, 2, 1, 10, &mut rng).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.checked() > 0);
        assert!(check_convolution_identities(&engine, 3, 1, 1, 1, &mut rng).is_err());
    }

    #[test]
    fn report_formatting() {
        let r = IdentityReport {
            trials: 5,
            skipped: 0,
            violations: vec![],
        };
        assert_eq!(r.to_string(), "OK 5/5");
    }
}
