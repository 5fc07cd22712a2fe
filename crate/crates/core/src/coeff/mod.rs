//! Exact evaluation of the coefficient functions produced by repeated
//! integration by parts of the Prüfer equations.
//!
//! Rescaled form used throughout:
//!
//! ```text
//! F_{I,K} = Xi_{I,K} + sum_{a=-1}^{1} Omega_a (.) G_{I-1,K+a}
//! G_{I,K} = K / (K eta - sum phi_i) * F_{I,K}
//! ```
//!
//! with `Omega_0 = 2`, `Omega_{+-1} = 1`, `Xi_{1,K} = 1` and `(.)` the
//! symmetric product. Since `Omega_a` is constant, `Omega_a (.) G` is
//! `Omega_a` times the average of `G` over the `I` ways of dropping one
//! phase, so the recursion only ever visits sub-multisets of the input
//! phases. Values are memoised per `(sub-multiset, K)`.
//!
//! The original coefficients are recovered as
//! `f = (-1)^(K-1) eta^-I F` and `g = 2 (-1)^K eta^-I G`.

mod identities;
mod oracle;
mod series;

pub use identities::{
    check_convolution_identities, check_convolution_identity, check_h_expansion, check_reflection_symmetry,
    probe_pole_containment, random_point, singularity_support, IdentityReport, OracleReport,
    PoleProbeReport, ReflectionReport, Witness,
};
pub use oracle::{eval_h_expansion, h_expansion_literal, symmetric_product, symmetric_product_sym};
pub use series::Series;

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, int, Rational};

pub const DEFAULT_ORDER_CAP: usize = 6;

/// Which coefficient family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoeffKind {
    /// Rescaled `F_{I,K}`.
    UpperF,
    /// Rescaled `G_{I,K}`.
    UpperG,
    /// Original `f_{I,K}`.
    LowerF,
    /// Original `g_{I,K}`.
    LowerG,
}

impl CoeffKind {
    /// `true` for the `G`/`g` families, whose pole locus includes full sums.
    pub fn is_g(self) -> bool {
        matches!(self, CoeffKind::UpperG | CoeffKind::LowerG)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CoeffKind::UpperF => "F",
            CoeffKind::UpperG => "G",
            CoeffKind::LowerF => "f",
            CoeffKind::LowerG => "g",
        }
    }
}

/// Index `(I, K)`: number of phase arguments and harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoeffKey {
    pub order: usize,
    pub harmonic: usize,
}

impl CoeffKey {
    pub fn new(order: usize, harmonic: usize) -> Result<Self> {
        if harmonic > order {
            return Err(Error::InvalidCoefficient(format!(
                "harmonic K = {harmonic} exceeds order I = {order}"
            )));
        }
        Ok(CoeffKey { order, harmonic })
    }
}

/// `eta` together with the ordered phase arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPoint {
    pub eta: Rational,
    pub phis: Vec<Rational>,
}

impl EvalPoint {
    pub fn new(eta: Rational, phis: Vec<Rational>) -> Self {
        EvalPoint { eta, phis }
    }

    pub fn negated_phases(&self) -> EvalPoint {
        EvalPoint {
            eta: self.eta.clone(),
            phis: self.phis.iter().map(|p| -p).collect(),
        }
    }
}

impl fmt::Display for EvalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phis: Vec<String> = self.phis.iter().map(format_rational).collect();
        write!(f, "({}; {})", format_rational(&self.eta), phis.join(", "))
    }
}

/// A hyperplane `K eta = phase_sum` on which a denominator vanished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperplane {
    pub harmonic: usize,
    pub phase_sum: Rational,
}

impl fmt::Display for Hyperplane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*eta = {}", self.harmonic, format_rational(&self.phase_sum))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoeffValue {
    Finite(Rational),
    /// Nonremovable singularity; carries the vanishing denominators met.
    Pole(Vec<Hyperplane>),
}

impl CoeffValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, CoeffValue::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            CoeffValue::Finite(r) => Some(r),
            CoeffValue::Pole(_) => None,
        }
    }

    pub fn into_finite(self) -> Option<Rational> {
        match self {
            CoeffValue::Finite(r) => Some(r),
            CoeffValue::Pole(_) => None,
        }
    }
}

impl fmt::Display for CoeffValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffValue::Finite(r) => f.write_str(&format_rational(r)),
            CoeffValue::Pole(planes) => {
                let list: Vec<String> = planes.iter().map(|h| h.to_string()).collect();
                write!(f, "non-finite (pole on {})", list.join("; "))
            }
        }
    }
}


/// Scalar arithmetic the recursion is generic over.
trait Arith {
    type V: Clone;
    fn constant(&self, r: &Rational) -> Self::V;
    fn eta(&self) -> Self::V;
    fn add(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn scale(&self, a: &Self::V, r: &Rational) -> Self::V;
    /// `None` when the quotient cannot be formed.
    fn div(&self, a: &Self::V, b: &Self::V) -> Option<Self::V>;
    /// Whether the value vanishes at the evaluation point itself.
    fn vanishes(&self, a: &Self::V) -> bool;
}

struct Exact {
    eta: Rational,
}

impl Arith for Exact {
    type V = Rational;
    fn constant(&self, r: &Rational) -> Rational {
        r.clone()
    }
    fn eta(&self) -> Rational {
        self.eta.clone()
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }
    fn scale(&self, a: &Rational, r: &Rational) -> Rational {
        a * r
    }
    fn div(&self, a: &Rational, b: &Rational) -> Option<Rational> {
        (!b.is_zero()).then(|| a / b)
    }
    fn vanishes(&self, a: &Rational) -> bool {
        a.is_zero()
    }
}

/// Arithmetic along the line `eta = eta0 + eps`, truncated at `eps^prec`.
struct AlongEta {
    eta0: Rational,
    prec: i32,
}

impl Arith for AlongEta {
    type V = Series;
    fn constant(&self, r: &Rational) -> Series {
        Series::polynomial(std::slice::from_ref(r), self.prec)
    }
    fn eta(&self) -> Series {
        Series::polynomial(&[self.eta0.clone(), Rational::one()], self.prec)
    }
    fn add(&self, a: &Series, b: &Series) -> Series {
        a.add(b)
    }
    fn scale(&self, a: &Series, r: &Rational) -> Series {
        a.scale(r)
    }
    fn div(&self, a: &Series, b: &Series) -> Option<Series> {
        a.div(b)
    }
    fn vanishes(&self, a: &Series) -> bool {
        (a.lo().min(0)..=0).all(|e| a.get(e).is_zero())
    }
}

/// Memoised recursion over the sub-multisets of one point's phases.
///
/// A sub-multiset is encoded as a mixed-radix index of per-value counts.
struct Recursion<'a, A: Arith> {
    arith: &'a A,
    distinct: Vec<Rational>,
    mult: Vec<usize>,
    strides: Vec<usize>,
    width: usize,
    f_memo: Vec<Option<Option<A::V>>>,
    g_memo: Vec<Option<Option<A::V>>>,
    hyperplanes: Vec<Hyperplane>,
}

impl<'a, A: Arith> Recursion<'a, A> {
    fn new(arith: &'a A, phis: &[Rational]) -> Self {
        let mut distinct: Vec<Rational> = phis.to_vec();
        distinct.sort();
        distinct.dedup();
        let mult: Vec<usize> = distinct
            .iter()
            .map(|d| phis.iter().filter(|p| *p == d).count())
            .collect();
        let mut strides = Vec::with_capacity(mult.len());
        let mut size = 1usize;
        for m in &mult {
            strides.push(size);
            size *= m + 1;
        }
        let width = phis.len() + 2;
        Recursion {
            arith,
            distinct,
            mult,
            strides,
            width,
            f_memo: vec![None; size * width],
            g_memo: vec![None; size * width],
            hyperplanes: Vec::new(),
        }
    }

    fn count(&self, idx: usize, j: usize) -> usize {
        (idx / self.strides[j]) % (self.mult[j] + 1)
    }

    fn order(&self, idx: usize) -> usize {
        (0..self.mult.len()).map(|j| self.count(idx, j)).sum()
    }

    fn phase_sum(&self, idx: usize) -> Rational {
        (0..self.mult.len())
            .map(|j| &self.distinct[j] * int(self.count(idx, j) as i64))
            .sum()
    }

    fn full(&self) -> usize {
        self.mult.iter().zip(&self.strides).map(|(m, s)| m * s).sum()
    }

    fn upper_f(&mut self, idx: usize, k: usize) -> Option<A::V> {
        let order = self.order(idx);
        if order == 0 || k > order {
            return Some(self.arith.constant(&Rational::zero()));
        }
        if order == 1 {
            return Some(self.arith.constant(&Rational::one()));
        }
        let key = idx * self.width + k;
        if let Some(hit) = &self.f_memo[key] {
            return hit.clone();
        }
        let out = self.upper_f_uncached(idx, k, order);
        self.f_memo[key] = Some(out.clone());
        out
    }

    fn upper_f_uncached(&mut self, idx: usize, k: usize, order: usize) -> Option<A::V> {
        let mut acc = self.arith.constant(&Rational::zero());
        for a in -1i64..=1 {
            let k2 = k as i64 + a;
            if k2 < 1 || k2 as usize > order - 1 {
                continue;
            }
            let omega: i64 = if a == 0 { 2 } else { 1 };
            for j in 0..self.mult.len() {
                let c = self.count(idx, j);
                if c == 0 {
                    continue;
                }
                let g = self.upper_g(idx - self.strides[j], k2 as usize)?;
                let weight = Rational::new((omega * c as i64).into(), (order as i64).into());
                acc = self.arith.add(&acc, &self.arith.scale(&g, &weight));
            }
        }
        Some(acc)
    }

    fn upper_g(&mut self, idx: usize, k: usize) -> Option<A::V> {
        let order = self.order(idx);
        if k == 0 || order == 0 || k > order {
            return Some(self.arith.constant(&Rational::zero()));
        }
        let key = idx * self.width + k;
        if let Some(hit) = &self.g_memo[key] {
            return hit.clone();
        }
        let out = self.upper_f(idx, k).and_then(|f| {
            let sum = self.phase_sum(idx);
            let kr = int(k as i64);
            let eta_k = self.arith.scale(&self.arith.eta(), &kr);
            let denom = self.arith.add(&eta_k, &self.arith.constant(&-&sum));
            if self.arith.vanishes(&denom) {
                self.note(k, sum);
            }
            self.arith.div(&self.arith.scale(&f, &kr), &denom)
        });
        self.g_memo[key] = Some(out.clone());
        out
    }

    fn note(&mut self, k: usize, sum: Rational) {
        let h = Hyperplane {
            harmonic: k,
            phase_sum: sum,
        };
        if !self.hyperplanes.contains(&h) {
            self.hyperplanes.push(h);
        }
    }

    fn top(&mut self, g: bool, k: usize) -> Option<A::V> {
        let full = self.full();
        if g {
            self.upper_g(full, k)
        } else {
            self.upper_f(full, k)
        }
    }
}

/// Largest series precision tried before a singular point is given up on.
const MAX_SERIES_PRECISION: i32 = 64;

/// Rescaled `F`/`G` value at a point, resolving removable singularities.
fn eval_upper(g: bool, k: usize, point: &EvalPoint) -> CoeffValue {
    let exact = Exact {
        eta: point.eta.clone(),
    };
    let mut rec = Recursion::new(&exact, &point.phis);
    if let Some(v) = rec.top(g, k) {
        return CoeffValue::Finite(v);
    }
    let mut planes = rec.hyperplanes;
    let mut prec = point.phis.len() as i32 + 3;
    while prec <= MAX_SERIES_PRECISION {
        let along = AlongEta {
            eta0: point.eta.clone(),
            prec,
        };
        let mut rec = Recursion::new(&along, &point.phis);
        if let Some(s) = rec.top(g, k) {
            let s = s.normalized();
            match s.leading() {
                Some((e, _)) if e < 0 => return CoeffValue::Pole(rec.hyperplanes),
                _ if s.hi() > 0 => return CoeffValue::Finite(s.get(0)),
                _ => {}
            }
        }
        planes = rec.hyperplanes;
        prec *= 2;
    }
    CoeffValue::Pole(planes)
}

type CacheKey = (CoeffKind, usize, Rational, Vec<Rational>);

/// Coefficient evaluator with an order cap and a shared value cache.
///
/// Results do not depend on the order of the phases, so the cache is keyed
/// on the sorted multiset. The cache is behind a mutex and may be shared
/// across threads.
#[derive(Debug)]
pub struct CoeffEngine {
    cap: usize,
    cache: Mutex<HashMap<CacheKey, CoeffValue>>,
}

impl Default for CoeffEngine {
    fn default() -> Self {
        CoeffEngine::with_cap(DEFAULT_ORDER_CAP)
    }
}

impl CoeffEngine {
    pub fn new() -> Self {
        CoeffEngine::default()
    }

    pub fn with_cap(cap: usize) -> Self {
        CoeffEngine {
            cap,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn clear_cache(&self) {
        self.lock().clear();
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<CacheKey, CoeffValue>> {
        // a poisoned cache only ever holds complete entries
        self.cache.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn validate(&self, kind: CoeffKind, key: CoeffKey, point: &EvalPoint) -> Result<()> {
        if key.harmonic > key.order {
            return Err(Error::InvalidCoefficient(format!(
                "harmonic K = {} exceeds order I = {}",
                key.harmonic, key.order
            )));
        }
        if point.phis.len() != key.order {
            return Err(Error::InvalidCoefficient(format!(
                "{}_{{{},{}}} takes {} phases, got {}",
                kind.symbol(),
                key.order,
                key.harmonic,
                key.order,
                point.phis.len()
            )));
        }
        if key.order > self.cap {
            return Err(Error::OrderCap {
                order: key.order,
                cap: self.cap,
            });
        }
        let lower = matches!(kind, CoeffKind::LowerF | CoeffKind::LowerG);
        if lower && key.order == 0 {
            return Err(Error::InvalidCoefficient(format!(
                "{} needs at least one phase",
                kind.symbol()
            )));
        }
        if lower && point.eta.is_zero() {
            return Err(Error::InvalidCoefficient(format!(
                "{} is undefined at eta = 0",
                kind.symbol()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, kind: CoeffKind, key: CoeffKey, point: &EvalPoint) -> Result<CoeffValue> {
        self.validate(kind, key, point)?;
        let mut sorted = point.phis.clone();
        sorted.sort();
        let cache_key = (kind, key.harmonic, point.eta.clone(), sorted);
        if let Some(hit) = self.lock().get(&cache_key) {
            return Ok(hit.clone());
        }
        let upper = eval_upper(kind.is_g(), key.harmonic, point);
        let value = match (kind, upper) {
            (_, CoeffValue::Pole(p)) => CoeffValue::Pole(p),
            (CoeffKind::UpperF | CoeffKind::UpperG, v) => v,
            (CoeffKind::LowerF, CoeffValue::Finite(v)) => {
                let sign = if key.harmonic % 2 == 1 { 1 } else { -1 };
                CoeffValue::Finite(v * int(sign) * eta_power(&point.eta, key.order))
            }
            (CoeffKind::LowerG, CoeffValue::Finite(v)) => {
                let sign = if key.harmonic % 2 == 0 { 2 } else { -2 };
                CoeffValue::Finite(v * int(sign) * eta_power(&point.eta, key.order))
            }
        };
        self.lock().insert(cache_key, value.clone());
        Ok(value)
    }

    #[allow(non_snake_case)]
    pub fn eval_F(&self, key: CoeffKey, point: &EvalPoint) -> Result<CoeffValue> {
        self.eval(CoeffKind::UpperF, key, point)
    }

    #[allow(non_snake_case)]
    pub fn eval_G(&self, key: CoeffKey, point: &EvalPoint) -> Result<CoeffValue> {
        self.eval(CoeffKind::UpperG, key, point)
    }

    pub fn eval_f(&self, key: CoeffKey, point: &EvalPoint) -> Result<CoeffValue> {
        self.eval(CoeffKind::LowerF, key, point)
    }

    pub fn eval_g(&self, key: CoeffKey, point: &EvalPoint) -> Result<CoeffValue> {
        self.eval(CoeffKind::LowerG, key, point)
    }
}

/// `eta^-order`.
fn eta_power(eta: &Rational, order: usize) -> Rational {
    num_traits::pow(eta.recip(), order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn pt(eta: i64, phis: &[i64]) -> EvalPoint {
        EvalPoint::new(int(eta), phis.iter().map(|&p| int(p)).collect())
    }

    fn key(i: usize, k: usize) -> CoeffKey {
        CoeffKey::new(i, k).unwrap()
    }

    #[test]
    fn first_order_values() {
        let e = CoeffEngine::new();
        for k in 0..=1 {
            assert_eq!(e.eval_F(key(1, k), &pt(7, &[3])).unwrap(), CoeffValue::Finite(int(1)));
        }
        assert_eq!(e.eval_f(key(1, 0), &pt(2, &[9])).unwrap().into_finite(), Some(ratio(-1, 2)));
        assert_eq!(e.eval_f(key(1, 1), &pt(2, &[9])).unwrap().into_finite(), Some(ratio(1, 2)));
        assert_eq!(e.eval_G(key(1, 1), &pt(7, &[3])).unwrap().into_finite(), Some(ratio(1, 4)));
        assert_eq!(e.eval_G(key(3, 0), &pt(7, &[3, 1, 2])).unwrap().into_finite(), Some(int(0)));
    }

    #[test]
    fn second_order_hand_values() {
        let e = CoeffEngine::new();
        let p = pt(3, &[-2, 5]);
        assert_eq!(e.eval_F(key(2, 1), &p).unwrap().into_finite(), Some(ratio(-3, 10)));
        assert_eq!(e.eval_f(key(2, 1), &p).unwrap().into_finite(), Some(ratio(-1, 30)));
        match e.eval_G(key(2, 1), &p).unwrap() {
            CoeffValue::Pole(planes) => assert!(planes.contains(&Hyperplane {
                harmonic: 1,
                phase_sum: int(3)
            })),
            v => panic!("expected a pole, got {v}"),
        }
    }

    #[test]
    fn removable_singularity_is_finite() {
        // G_{2,2} = 2 F_{2,2} / (2 eta - phi1 - phi2) and F_{2,2} vanishes on
        // that line; the limit is 1 / ((eta - phi1)(eta - phi2)).
        let e = CoeffEngine::new();
        let v = e.eval_G(key(2, 2), &pt(3, &[1, 5])).unwrap();
        assert_eq!(v, CoeffValue::Finite(ratio(-1, 4)));
    }

    #[test]
    fn permutation_does_not_matter() {
        let e = CoeffEngine::new();
        let a = e.eval_F(key(4, 1), &pt(11, &[1, -3, 4, 2])).unwrap();
        let b = e.eval_F(key(4, 1), &pt(11, &[2, 4, 1, -3])).unwrap();
        assert_eq!(a, b);
        e.clear_cache();
        let c = e.eval_F(key(4, 1), &pt(11, &[2, 4, 1, -3])).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn validation_errors() {
        let e = CoeffEngine::with_cap(3);
        assert!(matches!(
            e.eval_F(key(4, 1), &pt(11, &[1, 2, 3, 4])),
            Err(Error::OrderCap { order: 4, cap: 3 })
        ));
        assert!(e.eval_F(key(2, 1), &pt(11, &[1])).is_err());
        assert!(e.eval_f(key(1, 1), &pt(0, &[1])).is_err());
        assert!(CoeffKey::new(1, 2).is_err());
    }
}
