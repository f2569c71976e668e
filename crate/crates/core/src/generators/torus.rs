//! Linear automorphisms `x -> M x mod 1` of the d-torus.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};
use num_bigint::{BigInt, BigUint};
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::path::SamplePath;
use super::poly::{cyclotomic_factors, IntPoly};
use crate::error::{Error, Result};
use crate::rng::{lane, stream};

/// Tolerance on `| |mu| - 1 |` for calling an eigenvalue unit-modulus.
pub const UNIT_MODULUS_TOL: f64 = 1e-8;
/// Default cap on the fixed-point precision of orbit simulation.
pub const DEFAULT_PRECISION_CAP_BITS: u64 = 1 << 20;
const GUARD_BITS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TorusClass {
    Hyperbolic,
    QuasiHyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusAutomorphism {
    pub matrix: Vec<Vec<i64>>,
    pub det_sign: i8,
    /// Characteristic polynomial `det(x I - M)`, constant term first.
    pub char_poly: Vec<f64>,
    /// Eigenvalues as `(re, im)`, sorted by decreasing modulus.
    pub eigenvalues: Vec<(f64, f64)>,
    pub eigen_moduli: Vec<f64>,
    pub is_ergodic: bool,
    /// `k` such that the cyclotomic polynomial `Phi_k` divides the characteristic polynomial.
    pub cyclotomic_factors: Vec<u64>,
    pub class: TorusClass,
    pub jordan_exponent: u32,
    /// False when the Jordan exponent came from numerical ranks.
    pub jordan_exact: bool,
    /// `min(min_{|mu|>1} |mu|, 1 / max_{|mu|<1} |mu|)`; `None` without expanding or contracting directions.
    pub expansion_rate: Option<f64>,
}

/// Modulus of a complex number.
pub fn modulus(z: &Complex<f64>) -> f64 {
    libm::hypot(z.re, z.im)
}

fn to_dmatrix(m: &[Vec<i64>]) -> DMatrix<f64> {
    let d = m.len();
    DMatrix::from_fn(d, d, |i, j| m[i][j] as f64)
}

/// Exact characteristic polynomial `det(x I - M)` by Faddeev-LeVerrier.
pub fn characteristic_polynomial(m: &[Vec<i64>]) -> IntPoly {
    let d = m.len();
    let a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut coeffs = alloc::vec![BigInt::zero(); d + 1];
    coeffs[d] = BigInt::one();
    let mut mk = alloc::vec![alloc::vec![BigInt::zero(); d]; d];
    for k in 1..=d {
        // M_k = A M_{k-1} + c_{d-k+1} I
        let mut next = alloc::vec![alloc::vec![BigInt::zero(); d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut s = BigInt::zero();
                for l in 0..d {
                    if !a[i][l].is_zero() && !mk[l][j].is_zero() {
                        s += &a[i][l] * &mk[l][j];
                    }
                }
                next[i][j] = s;
            }
            next[i][i] += &coeffs[d - k + 1];
        }
        mk = next;
        let mut tr = BigInt::zero();
        for i in 0..d {
            for l in 0..d {
                tr += &a[i][l] * &mk[l][i];
            }
        }
        coeffs[d - k] = -(tr / BigInt::from(k));
    }
    IntPoly::new(coeffs)
}

fn numeric_rank(a: &DMatrix<Complex<f64>>, tol: f64) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let scale = sv.iter().fold(1.0f64, |m, v| m.max(*v));
    sv.iter().filter(|v| **v > tol * scale).count()
}

/// Largest Jordan block at `lambda`: the first power where ranks of `(M - lambda I)^j` stabilize.
fn jordan_block_size(m: &DMatrix<f64>, lambda: Complex<f64>) -> u32 {
    let d = m.nrows();
    let a: DMatrix<Complex<f64>> = DMatrix::from_fn(d, d, |i, j| {
        Complex::new(m[(i, j)], 0.0)
            - if i == j {
                lambda
            } else {
                Complex::new(0.0, 0.0)
            }
    });
    let mut power = a.clone();
    let mut prev = numeric_rank(&power, UNIT_MODULUS_TOL);
    for j in 1..=d {
        power = &power * &a;
        let r = numeric_rank(&power, UNIT_MODULUS_TOL);
        if r == prev {
            return j as u32;
        }
        prev = r;
    }
    d as u32
}

/// Checks unimodularity and classifies the automorphism.
pub fn validate_torus(matrix: &[Vec<i64>]) -> Result<TorusAutomorphism> {
    let d = matrix.len();
    if d == 0 || matrix.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument(
            "torus matrix must be square and nonempty".into(),
        ));
    }
    let poly = characteristic_polynomial(matrix);
    let det = if d % 2 == 0 {
        poly.0[0].clone()
    } else {
        -poly.0[0].clone()
    };
    if det.abs() != BigInt::one() {
        return Err(Error::NotUnimodular {
            det: det.to_string(),
        });
    }
    let det_sign: i8 = if det.is_positive() { 1 } else { -1 };
    let cyclo = cyclotomic_factors(&poly, d);

    let mf = to_dmatrix(matrix);
    let eig = mf.clone().complex_eigenvalues();
    let mut eigenvalues: Vec<Complex<f64>> = eig.iter().copied().collect();
    eigenvalues.sort_by(|a, b| modulus(b).total_cmp(&modulus(a)));
    let eigen_moduli: Vec<f64> = eigenvalues.iter().map(|z| modulus(z)).collect();

    let unit: Vec<Complex<f64>> = eigenvalues
        .iter()
        .copied()
        .filter(|z| (modulus(z) - 1.0).abs() <= UNIT_MODULUS_TOL)
        .collect();
    // Roots of unity sit on the circle even when a defective block smears their numerical values.
    let class = if unit.is_empty() && cyclo.is_empty() {
        TorusClass::Hyperbolic
    } else {
        TorusClass::QuasiHyperbolic
    };

    let (jordan_exponent, jordan_exact) = if unit.is_empty() {
        (0, true)
    } else {
        let g = poly.gcd(&poly.derivative());
        let repeated_unit_root = g.degree() > 0 && {
            let gm = companion_f64(&g);
            gm.complex_eigenvalues()
                .iter()
                .any(|z| (modulus(z) - 1.0).abs() <= 1e-6)
        };
        if !repeated_unit_root {
            (1, true)
        } else {
            // Cluster nearby eigenvalues; the cluster mean is far more accurate than its members.
            let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
            for z in &unit {
                match clusters.iter_mut().find(|c| modulus(&(c[0] - z)) < 1e-4) {
                    Some(c) => c.push(*z),
                    None => clusters.push(alloc::vec![*z]),
                }
            }
            let r = clusters
                .iter()
                .map(|c| {
                    let mean = c.iter().fold(Complex::new(0.0, 0.0), |s, z| s + z) / c.len() as f64;
                    jordan_block_size(&mf, mean)
                })
                .max()
                .unwrap_or(1);
            (r, false)
        }
    };

    let grow = eigen_moduli
        .iter()
        .copied()
        .filter(|v| *v > 1.0 + UNIT_MODULUS_TOL)
        .fold(f64::INFINITY, f64::min);
    let shrink = eigen_moduli
        .iter()
        .copied()
        .filter(|v| *v < 1.0 - UNIT_MODULUS_TOL)
        .fold(0.0, f64::max);
    let mut rate = grow;
    if shrink > 0.0 {
        rate = rate.min(1.0 / shrink);
    }
    let expansion_rate = rate.is_finite().then_some(rate);

    Ok(TorusAutomorphism {
        matrix: matrix.to_vec(),
        det_sign,
        char_poly: poly.to_f64(),
        eigenvalues: eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
        eigen_moduli,
        is_ergodic: cyclo.is_empty(),
        cyclotomic_factors: cyclo,
        class,
        jordan_exponent,
        jordan_exact,
        expansion_rate,
    })
}

/// Companion matrix of a polynomial with leading coefficient normalised to 1.
fn companion_f64(p: &IntPoly) -> DMatrix<f64> {
    let c = p.to_f64();
    let n = p.degree();
    let lead = c[n];
    DMatrix::from_fn(n, n, |i, j| {
        if i + 1 < n {
            if j == i + 1 {
                1.0
            } else {
                0.0
            }
        } else {
            -c[j] / lead
        }
    })
}

/// Integer companion matrix of a monic polynomial `x^n + c_{n-1} x^{n-1} + ... + c_0`,
/// given as `[c_0, ..., c_{n-1}]`.
pub fn companion_matrix(low_coeffs: &[i64]) -> Vec<Vec<i64>> {
    let n = low_coeffs.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i + 1 < n {
                        i64::from(j == i + 1)
                    } else {
                        -low_coeffs[j]
                    }
                })
                .collect()
        })
        .collect()
}

/// Deterministic search over companion matrices of `x^4 + a x^3 + b x^2 + a x + 1`
/// for an ergodic automorphism with unit-modulus eigenvalues.
pub fn find_quasi_hyperbolic() -> Option<TorusAutomorphism> {
    for bound in 1..=4i64 {
        for a in -bound..=bound {
            for b in -bound..=bound {
                if a.abs() != bound && b.abs() != bound {
                    continue;
                }
                let m = companion_matrix(&[1, a, b, a]);
                if let Ok(t) = validate_torus(&m) {
                    if t.is_ergodic && t.class == TorusClass::QuasiHyperbolic {
                        return Some(t);
                    }
                }
            }
        }
    }
    None
}

/// The cat map `[[2, 1], [1, 1]]`.
pub fn cat_map() -> TorusAutomorphism {
    validate_torus(&[alloc::vec![2, 1], alloc::vec![1, 1]]).expect("cat map is unimodular")
}

impl TorusAutomorphism {
    pub fn dimension(&self) -> usize {
        self.matrix.len()
    }

    /// `ceil(n log2(max row sum of |M|)) + 64`.
    pub fn precision_bits(&self, n: usize) -> u64 {
        let row = self
            .matrix
            .iter()
            .map(|r| r.iter().map(|v| v.unsigned_abs()).sum::<u64>())
            .max()
            .unwrap_or(1);
        let growth = if row <= 1 {
            0.0
        } else {
            (n as f64 * (row as f64).log2()).ceil()
        };
        growth as u64 + GUARD_BITS
    }

    fn check_simulable(&self, n: usize) -> Result<()> {
        if !self.is_ergodic {
            return Err(Error::NotErgodic);
        }
        if n == 0 {
            return Err(Error::Empty("path length"));
        }
        Ok(())
    }

    /// Orbit of a uniform random start, `(X_1, ..., X_n)`.
    pub fn simulate(
        &self,
        n: usize,
        seed: u64,
        replicate: u64,
        cap_bits: u64,
    ) -> Result<SamplePath> {
        self.check_simulable(n)?;
        let bits = self.precision_bits(n);
        if bits > cap_bits {
            return Err(Error::PrecisionBudget {
                required: bits,
                cap: cap_bits,
            });
        }
        self.simulate_with_precision(n, seed, replicate, bits)
    }

    /// As [`simulate`](Self::simulate) with an explicit precision. The random
    /// start is drawn most significant word first, so a larger precision only
    /// appends bits to the same start.
    pub fn simulate_with_precision(
        &self,
        n: usize,
        seed: u64,
        replicate: u64,
        bits: u64,
    ) -> Result<SamplePath> {
        self.check_simulable(n)?;
        if bits < GUARD_BITS {
            return Err(Error::OutOfRange {
                what: "precision bits",
                value: bits as f64,
            });
        }
        let d = self.dimension();
        let start: Vec<BigUint> = (0..d)
            .map(|i| {
                let mut rng = stream(seed, replicate, lane::TORUS_BASE + i as u32);
                let words = bits.div_ceil(64);
                let mut x = BigUint::zero();
                for _ in 0..words {
                    x = (x << 64u32) + BigUint::from(rng.next_u64());
                }
                x >> (words * 64 - bits)
            })
            .collect();
        let values = self.orbit(start, n, bits);
        Ok(SamplePath::new(values, d, "torus", seed, replicate)?
            .with_metadata("precision_bits", bits as f64))
    }

    /// Orbit of an explicit start in `[0,1)^d` (exact for dyadic starts).
    pub fn simulate_from(&self, x0: &[f64], n: usize) -> Result<SamplePath> {
        if x0.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: x0.len(),
            });
        }
        if x0.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "torus start must lie in [0,1)^d".into(),
            ));
        }
        if n == 0 {
            return Err(Error::Empty("path length"));
        }
        let bits = self.precision_bits(n).max(1100);
        let start = x0.iter().map(|v| dyadic_to_fixed(*v, bits)).collect();
        let values = self.orbit(start, n, bits);
        SamplePath::new(values, self.dimension(), "torus", 0, 0)
    }

    fn orbit(&self, mut x: Vec<BigUint>, n: usize, bits: u64) -> Vec<f64> {
        let d = self.dimension();
        let mask = (BigUint::one() << bits) - BigUint::one();
        let shift = bits - 53;
        let scale = 1.0 / (1u64 << 53) as f64;
        let neg_mass: Vec<u64> = self
            .matrix
            .iter()
            .map(|r| {
                r.iter()
                    .filter(|v| **v < 0)
                    .map(|v| v.unsigned_abs())
                    .sum::<u64>()
            })
            .collect();
        let mut out = Vec::with_capacity(n * d);
        for _ in 0..n {
            let mut next = Vec::with_capacity(d);
            for i in 0..d {
                let mut pos = BigUint::zero();
                let mut neg = BigUint::zero();
                for j in 0..d {
                    let c = self.matrix[i][j];
                    if c > 0 {
                        pos += &x[j] * (c as u64);
                    } else if c < 0 {
                        neg += &x[j] * c.unsigned_abs();
                    }
                }
                if neg_mass[i] > 0 {
                    // Add a multiple of 2^bits that keeps the difference nonnegative.
                    pos += BigUint::from(neg_mass[i]) << bits;
                    pos -= neg;
                }
                next.push(pos & &mask);
            }
            x = next;
            for xi in &x {
                let top = (xi >> shift).to_u64().unwrap_or(0);
                out.push(top as f64 * scale);
            }
        }
        out
    }
}

fn dyadic_to_fixed(v: f64, bits: u64) -> BigUint {
    if v == 0.0 {
        return BigUint::zero();
    }
    let raw = v.to_bits();
    let exp = ((raw >> 52) & 0x7ff) as i64;
    let (mant, e) = if exp == 0 {
        (raw & ((1 << 52) - 1), -1074)
    } else {
        ((raw & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    let total = bits as i64 + e;
    let m = BigUint::from(mant);
    if total >= 0 {
        m << total as u64
    } else {
        m >> (-total) as u64
    }
}

impl core::fmt::Display for TorusClass {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            TorusClass::Hyperbolic => "hyperbolic",
            TorusClass::QuasiHyperbolic => "quasi-hyperbolic",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cat_map_classification() {
        let t = cat_map();
        assert!(t.is_ergodic);
        assert_eq!(t.class, TorusClass::Hyperbolic);
        assert_eq!(t.jordan_exponent, 0);
        let golden = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((t.eigen_moduli[0] - golden).abs() < 1e-12);
        assert!((t.eigen_moduli[1] - 1.0 / golden).abs() < 1e-12);
        assert!((t.expansion_rate.unwrap() - golden).abs() < 1e-12);
        assert_eq!(t.char_poly, vec![1.0, -3.0, 1.0]);
    }

    #[test]
    fn rotation_and_identity_are_not_ergodic() {
        let r = validate_torus(&[vec![0, -1], vec![1, 0]]).unwrap();
        assert!(!r.is_ergodic);
        assert_eq!(r.cyclotomic_factors, vec![4]);
        let id = validate_torus(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        assert!(!id.is_ergodic);
        assert_eq!(id.jordan_exponent, 1);
        assert!(!id.jordan_exact);
    }

    #[test]
    fn shear_has_jordan_block_two() {
        let s = validate_torus(&[vec![1, 1], vec![0, 1]]).unwrap();
        assert!(!s.is_ergodic);
        assert_eq!(s.jordan_exponent, 2);
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(matches!(
            validate_torus(&[vec![2, 0], vec![0, 1]]),
            Err(Error::NotUnimodular { .. })
        ));
        assert!(validate_torus(&[vec![1, 0]]).is_err());
    }

    #[test]
    fn exact_rational_orbits() {
        let t = cat_map();
        let p = t.simulate_from(&[0.0, 0.0], 5).unwrap();
        assert!(p.values().iter().all(|v| *v == 0.0));
        let p = t.simulate_from(&[0.5, 0.5], 1).unwrap();
        assert_eq!(p.row(0), &[0.5, 0.0]);
    }

    #[test]
    fn quasi_hyperbolic_search_finds_a_matrix() {
        let q = find_quasi_hyperbolic().unwrap();
        assert!(q.is_ergodic);
        assert_eq!(q.class, TorusClass::QuasiHyperbolic);
        assert_eq!(q.jordan_exponent, 1);
        assert!(q.jordan_exact);
        assert!(q.expansion_rate.unwrap() > 1.0);
    }

    #[test]
    fn precision_budget_is_enforced() {
        let t = cat_map();
        assert!(matches!(
            t.simulate(1000, 1, 0, 256),
            Err(Error::PrecisionBudget { .. })
        ));
        let ok = t.simulate(10, 1, 0, DEFAULT_PRECISION_CAP_BITS).unwrap();
        assert_eq!(ok.len(), 10);
        assert!(ok.values().iter().all(|v| (0.0..1.0).contains(v)));
    }
}
