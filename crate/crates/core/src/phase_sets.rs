//! Phase sumsets and the finite set of candidate embedded eigenvalues.
//!
//! A potential with oscillating components `e^{-i phi x}` can only carry an
//! embedded eigenvalue at `E = eta^2 / 4` when `eta` is a sum of at most
//! `p - 1` of its phases. Everything here is exact rational arithmetic.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::rational::{format_rational, Rational};

/// A phase (angular frequency in `x`), kept exact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phase(pub Rational);

impl From<Rational> for Phase {
    fn from(r: Rational) -> Self {
        Phase(r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhaseSet {
    phases: BTreeSet<Rational>,
    symmetric: bool,
}

impl PhaseSet {
    pub fn new<I: IntoIterator<Item = Rational>>(phases: I) -> Self {
        let phases: BTreeSet<Rational> = phases.into_iter().collect();
        let symmetric = phases.iter().all(|p| phases.contains(&-p.clone()));
        PhaseSet { phases, symmetric }
    }

    /// The set together with all negatives, as for a real-valued potential.
    pub fn symmetric<I: IntoIterator<Item = Rational>>(phases: I) -> Self {
        let mut set = BTreeSet::new();
        for p in phases {
            set.insert(-p.clone());
            set.insert(p);
        }
        PhaseSet {
            phases: set,
            symmetric: true,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn contains(&self, phi: &Rational) -> bool {
        self.phases.contains(phi)
    }

    /// Phases in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = &Rational> {
        self.phases.iter()
    }

    pub fn to_vec(&self) -> Vec<Rational> {
        self.phases.iter().cloned().collect()
    }
}

/// `{phi + psi : phi in a, psi in b}`.
pub fn sumset(a: &PhaseSet, b: &PhaseSet) -> PhaseSet {
    let mut out = BTreeSet::new();
    for x in &a.phases {
        for y in &b.phases {
            out.insert(x + y);
        }
    }
    PhaseSet {
        symmetric: out.iter().all(|p| out.contains(&-p.clone())),
        phases: out,
    }
}

/// Candidate energies of a given order with every multiset realising them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResonanceSet {
    pub order: usize,
    /// Positive energies mapped to the sorted phase multisets (`eta > 0`)
    /// whose sum is `2 sqrt(E)`.
    pub energies: BTreeMap<Rational, Vec<Vec<Rational>>>,
    /// Multisets summing to zero. They would give `E = 0`, which is never a
    /// candidate on the open half-line, so they are only logged here.
    pub zero_sums: Vec<Vec<Rational>>,
}

impl ResonanceSet {
    pub fn contains(&self, energy: &Rational) -> bool {
        self.energies.contains_key(energy)
    }

    pub fn energies(&self) -> impl Iterator<Item = &Rational> {
        self.energies.keys()
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

impl Serialize for ResonanceSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Reps<'a>(&'a BTreeMap<Rational, Vec<Vec<Rational>>>);
        impl Serialize for Reps<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut map = s.serialize_map(Some(self.0.len()))?;
                for (e, reps) in self.0 {
                    map.serialize_entry(&format_rational(e), &strings(reps))?;
                }
                map.end()
            }
        }
        fn strings(reps: &[Vec<Rational>]) -> Vec<Vec<String>> {
            reps.iter()
                .map(|r| r.iter().map(format_rational).collect())
                .collect()
        }
        let mut st = s.serialize_struct("ResonanceSet", 4)?;
        let energies: Vec<String> = self.energies.keys().map(format_rational).collect();
        st.serialize_field("energies", &energies)?;
        st.serialize_field("order", &self.order)?;
        st.serialize_field("representations", &Reps(&self.energies))?;
        st.serialize_field("zero_sums", &strings(&self.zero_sums))?;
        st.end()
    }
}

/// Visits every multiset of `size` elements (as non-decreasing index tuples).
pub(crate) fn for_each_multiset(n: usize, size: usize, mut visit: impl FnMut(&[usize])) {
    if size == 0 || n == 0 {
        return;
    }
    let mut idx = vec![0usize; size];
    loop {
        visit(&idx);
        // advance to the next non-decreasing tuple
        let mut pos = size;
        while pos > 0 && idx[pos - 1] == n - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        idx[pos - 1] += 1;
        let v = idx[pos - 1];
        for slot in idx.iter_mut().skip(pos) {
            *slot = v;
        }
    }
}

/// The set `S_p` of candidate energies built from sums of `1..=p-1` phases.
pub fn build_resonance_set(a: &PhaseSet, p: usize) -> ResonanceSet {
    let phases = a.to_vec();
    let mut energies: BTreeMap<Rational, Vec<Vec<Rational>>> = BTreeMap::new();
    let mut zero_sums = Vec::new();
    for k in 1..p {
        for_each_multiset(phases.len(), k, |idx| {
            let sum: Rational = idx.iter().map(|&i| &phases[i]).sum();
            let rep: Vec<Rational> = idx.iter().map(|&i| phases[i].clone()).collect();
            if sum.is_zero() {
                zero_sums.push(rep);
            } else if sum.is_positive() {
                let energy = &sum * &sum / Rational::from_integer(4.into());
                energies.entry(energy).or_default().push(rep);
            }
        });
    }
    ResonanceSet {
        order: p,
        energies,
        zero_sums,
    }
}

/// All multisets of at most `max_terms` phases summing exactly to `eta`,
/// sorted ascending within each multiset; shorter multisets come first.
pub fn represent(eta: &Rational, a: &PhaseSet, max_terms: usize) -> Vec<Vec<Rational>> {
    let phases = a.to_vec();
    let mut out = Vec::new();
    for k in 1..=max_terms {
        for_each_multiset(phases.len(), k, |idx| {
            let sum: Rational = idx.iter().map(|&i| &phases[i]).sum();
            if &sum == eta {
                out.push(idx.iter().map(|&i| phases[i].clone()).collect());
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn set(v: &[i64]) -> PhaseSet {
        PhaseSet::new(v.iter().map(|&x| int(x)))
    }

    #[test]
    fn sumset_examples() {
        let pm2 = PhaseSet::symmetric([int(2)]);
        assert_eq!(sumset(&pm2, &pm2), set(&[-4, 0, 4]));
        assert!(sumset(&PhaseSet::default(), &pm2).is_empty());
        let a = PhaseSet::symmetric([int(2), int(5)]);
        assert_eq!(sumset(&a, &a), set(&[-10, -7, -4, -3, 0, 3, 4, 7, 10]));
    }

    #[test]
    fn resonance_set_small_orders() {
        let a = PhaseSet::symmetric([int(2)]);
        let s2 = build_resonance_set(&a, 2);
        assert_eq!(s2.energies().cloned().collect::<Vec<_>>(), vec![int(1)]);
        let s3 = build_resonance_set(&a, 3);
        assert_eq!(s3.energies().cloned().collect::<Vec<_>>(), vec![int(1), int(4)]);
        assert_eq!(s3.zero_sums, vec![vec![int(-2), int(2)]]);
        assert!(build_resonance_set(&a, 1).is_empty());
    }

    #[test]
    fn resonance_set_two_frequencies() {
        let a = PhaseSet::symmetric([int(2), int(5)]);
        let s3 = build_resonance_set(&a, 3);
        let want: BTreeSet<Rational> = [
            int(1),
            ratio(25, 4),
            int(4),
            ratio(9, 4),
            ratio(49, 4),
            int(25),
        ]
        .into_iter()
        .collect();
        assert_eq!(s3.energies().cloned().collect::<BTreeSet<_>>(), want);
        assert_eq!(s3.energies[&ratio(9, 4)], vec![vec![int(-2), int(5)]]);
    }

    #[test]
    fn representation_search() {
        let a = PhaseSet::symmetric([int(2), int(5)]);
        assert_eq!(represent(&int(3), &a, 2), vec![vec![int(-2), int(5)]]);
        let b = PhaseSet::symmetric([int(2), int(6)]);
        let reps: BTreeSet<_> = represent(&int(4), &b, 2).into_iter().collect();
        let want: BTreeSet<_> = [vec![int(2), int(2)], vec![int(-2), int(6)]]
            .into_iter()
            .collect();
        assert_eq!(reps, want);
        assert!(represent(&int(1), &PhaseSet::symmetric([int(2)]), 1).is_empty());
    }

    #[test]
    fn json_lists_energies_first() {
        let s = build_resonance_set(&PhaseSet::symmetric([int(2)]), 3);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.starts_with(r#"{"energies":["1","4"]"#), "{json}");
    }
}
