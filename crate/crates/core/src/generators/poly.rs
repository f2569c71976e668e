//! Dense integer polynomials, coefficients stored from the constant term up.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly(pub Vec<BigInt>);

impl IntPoly {
    pub fn new(mut c: Vec<BigInt>) -> Self {
        while c.len() > 1 && c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        if c.is_empty() {
            c.push(BigInt::zero());
        }
        IntPoly(c)
    }

    pub fn from_i64(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.0.len() == 1 && self.0[0].is_zero()
    }

    pub fn lead(&self) -> &BigInt {
        &self.0[self.0.len() - 1]
    }

    pub fn derivative(&self) -> Self {
        if self.degree() == 0 {
            return Self::new(alloc::vec![BigInt::zero()]);
        }
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = alloc::vec![BigInt::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Division by a monic polynomial: `(quotient, remainder)`.
    pub fn divrem_monic(&self, divisor: &Self) -> (Self, Self) {
        assert!(divisor.lead().is_one(), "divisor must be monic");
        let dd = divisor.degree();
        if self.degree() < dd {
            return (Self::new(alloc::vec![BigInt::zero()]), self.clone());
        }
        let mut rem = self.0.clone();
        let mut quot = alloc::vec![BigInt::zero(); self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd].clone();
            if !c.is_zero() {
                for (j, dv) in divisor.0.iter().enumerate() {
                    rem[k + j] -= &c * dv;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd.max(1));
        (Self::new(quot), Self::new(rem))
    }

    pub fn divisible_by_monic(&self, divisor: &Self) -> bool {
        self.divrem_monic(divisor).1.is_zero()
    }

    fn content(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::zero(), |g, c| num_integer::Integer::gcd(&g, c))
    }

    pub fn primitive(&self) -> Self {
        let g = self.content();
        if g.is_zero() {
            return self.clone();
        }
        let mut p = Self::new(self.0.iter().map(|c| c / &g).collect());
        if p.lead().is_negative() {
            p = Self::new(p.0.iter().map(|c| -c).collect());
        }
        p
    }

    /// Pseudo-remainder of `self` by `other`.
    fn pseudo_rem(&self, other: &Self) -> Self {
        let mut r = self.clone();
        let dv = other.degree();
        let lc = other.lead().clone();
        while !r.is_zero() && r.degree() >= dv {
            let shift = r.degree() - dv;
            let rl = r.lead().clone();
            let mut next: Vec<BigInt> = r.0.iter().map(|c| c * &lc).collect();
            for (j, c) in other.0.iter().enumerate() {
                next[j + shift] -= &rl * c;
            }
            r = Self::new(next);
        }
        r
    }

    /// Greatest common divisor over the rationals, as a primitive integer polynomial.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.primitive(), other.primitive());
        if a.degree() < b.degree() {
            core::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b);
            a = b;
            b = if r.is_zero() { r } else { r.primitive() };
        }
        a.primitive()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|c| num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::NAN))
            .collect()
    }
}

/// Euler's totient.
pub fn totient(mut k: u64) -> u64 {
    let mut result = k;
    let mut p = 2;
    while p * p <= k {
        if k % p == 0 {
            while k % p == 0 {
                k /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if k > 1 {
        result -= result / k;
    }
    result
}

/// The k-th cyclotomic polynomial, from `x^k - 1 = prod_{j | k} Phi_j`.
pub fn cyclotomic(k: u64) -> IntPoly {
    assert!(k >= 1);
    let mut c = alloc::vec![BigInt::zero(); k as usize + 1];
    c[0] = -BigInt::one();
    c[k as usize] = BigInt::one();
    let mut p = IntPoly::new(c);
    for j in 1..k {
        if k % j == 0 {
            p = p.divrem_monic(&cyclotomic(j)).0;
        }
    }
    p
}

/// Indices `k` with `totient(k) <= d` such that `Phi_k` divides `poly`.
pub fn cyclotomic_factors(poly: &IntPoly, d: usize) -> Vec<u64> {
    let d = d as u64;
    // totient(k) >= sqrt(k / 2), so every k with totient(k) <= d satisfies k <= 2 d^2.
    (1..=2 * d * d + 2)
        .filter(|&k| totient(k) <= d && poly.divisible_by_monic(&cyclotomic(k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cyclotomics() {
        assert_eq!(cyclotomic(1), IntPoly::from_i64(&[-1, 1]));
        assert_eq!(cyclotomic(2), IntPoly::from_i64(&[1, 1]));
        assert_eq!(cyclotomic(4), IntPoly::from_i64(&[1, 0, 1]));
        assert_eq!(cyclotomic(6), IntPoly::from_i64(&[1, -1, 1]));
        assert_eq!(cyclotomic(12), IntPoly::from_i64(&[1, 0, -1, 0, 1]));
        assert_eq!(totient(12), 4);
        assert_eq!(totient(1), 1);
    }

    #[test]
    fn gcd_detects_repeated_factor() {
        // (x^2 + 1)^2 (x - 3)
        let p = IntPoly::from_i64(&[1, 0, 1])
            .mul(&IntPoly::from_i64(&[1, 0, 1]))
            .mul(&IntPoly::from_i64(&[-3, 1]));
        assert_eq!(p.gcd(&p.derivative()), IntPoly::from_i64(&[1, 0, 1]));
        let q = IntPoly::from_i64(&[1, -3, 1]);
        assert_eq!(q.gcd(&q.derivative()).degree(), 0);
    }

    #[test]
    fn cyclotomic_search() {
        let p = IntPoly::from_i64(&[1, 0, 1]).mul(&IntPoly::from_i64(&[1, -3, 1]));
        assert_eq!(cyclotomic_factors(&p, 4), alloc::vec![4]);
    }
}
