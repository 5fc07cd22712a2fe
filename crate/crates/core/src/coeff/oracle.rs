//! Brute-force evaluators used to cross-check the memoised recursion.

use itertools::Itertools;
use num_traits::{One, Zero};

use super::{CoeffValue, EvalPoint, Hyperplane};
use crate::rational::{factorial, int, Rational};

/// A coefficient-like function of `eta` and a phase list.
pub type PhaseFn<'a> = dyn Fn(&Rational, &[Rational]) -> CoeffValue + 'a;

fn merge_poles(into: &mut Vec<Hyperplane>, from: Vec<Hyperplane>) {
    for h in from {
        if !into.contains(&h) {
            into.push(h);
        }
    }
}

/// Averages `p(first i phases) * q(remaining phases)` over all `n!`
/// orderings of the point's phases.
pub fn symmetric_product(p: &PhaseFn, i: usize, q: &PhaseFn, point: &EvalPoint) -> CoeffValue {
    let n = point.phis.len();
    assert!(i <= n, "split {i} exceeds {n} phases");
    let mut acc = Rational::zero();
    let mut poles = Vec::new();
    for perm in (0..n).permutations(n) {
        let phis: Vec<Rational> = perm.iter().map(|&j| point.phis[j].clone()).collect();
        match (p(&point.eta, &phis[..i]), q(&point.eta, &phis[i..])) {
            (CoeffValue::Finite(a), CoeffValue::Finite(b)) => acc += a * b,
            (a, b) => {
                for v in [a, b] {
                    if let CoeffValue::Pole(h) = v {
                        merge_poles(&mut poles, h);
                    }
                }
            }
        }
    }
    if !poles.is_empty() {
        return CoeffValue::Pole(poles);
    }
    CoeffValue::Finite(acc / int(factorial(n) as i64))
}

/// Same as [`symmetric_product`] for `p` and `q` that are themselves
/// symmetric in their phases: averages over the `C(n, i)` splits only.
pub fn symmetric_product_sym(p: &PhaseFn, i: usize, q: &PhaseFn, point: &EvalPoint) -> CoeffValue {
    let n = point.phis.len();
    assert!(i <= n, "split {i} exceeds {n} phases");
    let mut acc = Rational::zero();
    let mut count = 0i64;
    let mut poles = Vec::new();
    for left in (0..n).combinations(i) {
        count += 1;
        let mut lhs = Vec::with_capacity(i);
        let mut rhs = Vec::with_capacity(n - i);
        for (j, phi) in point.phis.iter().enumerate() {
            if left.contains(&j) {
                lhs.push(phi.clone());
            } else {
                rhs.push(phi.clone());
            }
        }
        match (p(&point.eta, &lhs), q(&point.eta, &rhs)) {
            (CoeffValue::Finite(a), CoeffValue::Finite(b)) => acc += a * b,
            (a, b) => {
                for v in [a, b] {
                    if let CoeffValue::Pole(h) = v {
                        merge_poles(&mut poles, h);
                    }
                }
            }
        }
    }
    if !poles.is_empty() {
        return CoeffValue::Pole(poles);
    }
    CoeffValue::Finite(acc / int(count))
}

/// Lattice paths `(k_0, ..., k_I)` with unit steps, `k_0 = k_I = 0` and
/// positive interior.
fn lattice_paths(order: usize) -> Vec<Vec<usize>> {
    fn extend(path: &mut Vec<usize>, order: usize, out: &mut Vec<Vec<usize>>) {
        let i = path.len();
        let last = *path.last().expect("path starts at 0");
        if i == order + 1 {
            if last == 0 {
                out.push(path.clone());
            }
            return;
        }
        for next in last.saturating_sub(1)..=last + 1 {
            let interior = i < order;
            if (interior && next == 0) || (!interior && next != 0) {
                continue;
            }
            // must still be able to come back down to 0
            if next > order - i {
                continue;
            }
            path.push(next);
            extend(path, order, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    let mut path = vec![0];
    extend(&mut path, order, &mut out);
    out
}

fn path_sum(point: &EvalPoint, skip_entry_weight: bool) -> CoeffValue {
    let order = point.phis.len();
    let paths = lattice_paths(order);
    let mut acc = Rational::zero();
    let mut poles = Vec::new();
    for perm in (0..order).permutations(order) {
        let mut partial = Vec::with_capacity(order);
        let mut s = Rational::zero();
        for &j in &perm {
            s += &point.phis[j];
            partial.push(s.clone());
        }
        for path in &paths {
            let first = if skip_entry_weight { 1 } else { 0 };
            let mut term = Rational::one();
            for i in first..order {
                let step = path[i + 1].abs_diff(path[i]);
                term *= int(2 - step as i64);
            }
            let mut pole = false;
            for i in 1..order {
                let k = int(path[i] as i64);
                let den = &k * &point.eta - &partial[i - 1];
                if den.is_zero() {
                    merge_poles(
                        &mut poles,
                        vec![Hyperplane {
                            harmonic: path[i],
                            phase_sum: partial[i - 1].clone(),
                        }],
                    );
                    pole = true;
                    break;
                }
                term *= k / den;
            }
            if !pole {
                acc += term;
            }
        }
    }
    if !poles.is_empty() {
        return CoeffValue::Pole(poles);
    }
    CoeffValue::Finite(acc / int(factorial(order) as i64))
}

/// `F_{I,0}` as a sum over lattice paths and orderings.
///
/// The step weight `2 - |k_{i+1} - k_i|` is applied to every step except
/// the first: the step leaving `k_0 = 0` corresponds to the base value
/// `Xi = 1` of the recursion rather than to an `Omega` factor. This only
/// matters for `I = 1`, where the lone path `(0, 0)` would otherwise be
/// weighted 2 while `F_{1,0} = 1`.
pub fn eval_h_expansion(point: &EvalPoint) -> CoeffValue {
    path_sum(point, true)
}

/// The path sum with every step weighted, including the first.
pub fn h_expansion_literal(point: &EvalPoint) -> CoeffValue {
    path_sum(point, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn pt(eta: i64, phis: &[i64]) -> EvalPoint {
        EvalPoint::new(int(eta), phis.iter().map(|&p| int(p)).collect())
    }

    #[test]
    fn path_counts_are_shifted_motzkin_numbers() {
        let counts: Vec<usize> = (1..=7).map(|i| lattice_paths(i).len()).collect();
        assert_eq!(counts, vec![1, 1, 1, 2, 4, 9, 21]);
    }

    #[test]
    fn constants_average_to_themselves() {
        let one = |_: &Rational, _: &[Rational]| CoeffValue::Finite(int(1));
        let v = symmetric_product(&one, 1, &one, &pt(3, &[1, 2, 7]));
        assert_eq!(v, CoeffValue::Finite(int(1)));
    }

    #[test]
    fn omega_zero_times_first_order_g() {
        let two = |_: &Rational, _: &[Rational]| CoeffValue::Finite(int(2));
        let g11 = |eta: &Rational, phis: &[Rational]| CoeffValue::Finite((eta - &phis[0]).recip());
        let v = symmetric_product(&two, 1, &g11, &pt(10, &[3, 7])).into_finite();
        assert_eq!(v, Some(ratio(1, 7) + ratio(1, 3)));
    }

    #[test]
    fn first_order_literal_weight_is_doubled() {
        assert_eq!(eval_h_expansion(&pt(5, &[2])), CoeffValue::Finite(int(1)));
        assert_eq!(h_expansion_literal(&pt(5, &[2])), CoeffValue::Finite(int(2)));
    }
}
