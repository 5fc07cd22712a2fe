//! Truncated Laurent series in a formal offset `eps`, with exact rational
//! coefficients and tracked absolute precision.
//!
//! Used to evaluate the coefficient recurrences along `eta = eta0 + eps`
//! when a direct rational evaluation divides by zero: a removable
//! singularity then shows up as a series without negative powers.

use num_traits::{One, Zero};

use crate::rational::Rational;

/// `sum_{e = lo}^{hi - 1} coeffs[e - lo] eps^e + O(eps^hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    lo: i32,
    coeffs: Vec<Rational>,
}

impl Series {
    /// A polynomial known to absolute order `prec`.
    pub fn polynomial(coeffs: &[Rational], prec: i32) -> Series {
        let len = prec.max(0) as usize;
        let mut c = vec![Rational::zero(); len];
        for (slot, v) in c.iter_mut().zip(coeffs) {
            *slot = v.clone();
        }
        Series { lo: 0, coeffs: c }
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn get(&self, e: i32) -> Rational {
        if e < self.lo || e >= self.hi() {
            Rational::zero()
        } else {
            self.coeffs[(e - self.lo) as usize].clone()
        }
    }

    /// Strips known-zero leading coefficients.
    pub fn normalized(mut self) -> Series {
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        self.coeffs.drain(..lead);
        self.lo += lead as i32;
        self
    }

    /// Leading known nonzero coefficient and its exponent.
    pub fn leading(&self) -> Option<(i32, &Rational)> {
        self.coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.lo + i as i32, c))
    }

    pub fn add(&self, other: &Series) -> Series {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().min(other.hi());
        let coeffs = (lo..hi.max(lo)).map(|e| self.get(e) + other.get(e)).collect();
        Series { lo, coeffs }
    }

    pub fn scale(&self, r: &Rational) -> Series {
        Series {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    pub fn mul(&self, other: &Series) -> Series {
        let lo = self.lo + other.lo;
        let hi = (self.lo + other.hi()).min(other.lo + self.hi());
        let n = (hi - lo).max(0) as usize;
        let mut coeffs = vec![Rational::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                coeffs[i + j] += a * b;
            }
        }
        Series { lo, coeffs }
    }

    /// `None` when the divisor has no known nonzero coefficient.
    pub fn div(&self, other: &Series) -> Option<Series> {
        let d = other.clone().normalized();
        let b0 = d.coeffs.first()?.clone();
        let len = d.coeffs.len();
        let inv_b0 = Rational::one() / &b0;
        let mut inv: Vec<Rational> = Vec::with_capacity(len);
        inv.push(inv_b0.clone());
        for n in 1..len {
            let mut acc = Rational::zero();
            for i in 1..=n {
                acc += &d.coeffs[i] * &inv[n - i];
            }
            inv.push(-acc * &inv_b0);
        }
        let inverse = Series {
            lo: -d.lo,
            coeffs: inv,
        };
        Some(self.mul(&inverse))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn removable_quotient_has_no_pole() {
        // (eps^2 + 2 eps) / eps = eps + 2
        let num = Series::polynomial(&[int(0), int(2), int(1)], 6);
        let den = Series::polynomial(&[int(0), int(1)], 6);
        let q = num.div(&den).unwrap().normalized();
        assert_eq!(q.leading(), Some((0, &int(2))));
    }

    #[test]
    fn genuine_pole_has_negative_order() {
        let num = Series::polynomial(&[int(3)], 6);
        let den = Series::polynomial(&[int(0), int(2)], 6);
        let q = num.div(&den).unwrap().normalized();
        assert_eq!(q.leading(), Some((-1, &ratio(3, 2))));
    }

    #[test]
    fn geometric_inverse() {
        // 1 / (1 - eps) = 1 + eps + eps^2 + ...
        let one = Series::polynomial(&[int(1)], 5);
        let den = Series::polynomial(&[int(1), int(-1)], 5);
        let q = one.div(&den).unwrap();
        assert_eq!(q.coeffs, vec![int(1); 5]);
        assert_eq!(q.hi(), 5);
    }

    #[test]
    fn precision_is_lost_under_cancellation() {
        let a = Series::polynomial(&[int(1), int(1)], 4);
        let b = Series::polynomial(&[int(-1), int(-1)], 4);
        let s = a.add(&b).normalized();
        assert!(s.leading().is_none());
        assert_eq!(s.lo(), 4);
    }
}
