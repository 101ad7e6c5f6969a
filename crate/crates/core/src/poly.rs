//! Dense complex polynomials with coefficients stored in ascending powers.

use std::ops::{Add, Mul};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    /// `coeffs[k]` multiplies `x^k`.
    pub coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Poly { coeffs }
    }

    pub fn constant(c: C64) -> Self {
        Poly { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        Poly::constant(C64::new(0.0, 0.0))
    }

    /// `x - root`
    pub fn linear(root: C64) -> Self {
        Poly { coeffs: vec![-root, C64::new(1.0, 0.0)] }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        roots
            .iter()
            .fold(Poly::constant(C64::new(1.0, 0.0)), |acc, &r| &acc * &Poly::linear(r))
    }

    /// Degree after dropping exactly-zero leading coefficients (zero polynomial has degree 0).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != C64::new(0.0, 0.0)).unwrap_or(0)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs[self.degree()]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// The polynomial whose coefficients are conjugated, `conj(p(conj x))`.
    pub fn conj(&self) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    /// Roots by eigenvalues of the companion matrix, each refined by one Newton step.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.coeffs[n];
        if n == 1 {
            return Ok(vec![-self.coeffs[0] / lead]);
        }
        let mut companion = DMatrix::<C64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = C64::new(1.0, 0.0);
        }
        for i in 0..n {
            companion[(i, n - 1)] = -self.coeffs[i] / lead;
        }
        let schur = Schur::try_new(companion, 1e-15, 10_000)
            .ok_or_else(|| Error::InvalidInput("companion eigenvalue iteration failed".into()))?;
        let (_, t) = schur.unpack();
        let dp = self.derivative();
        let roots = (0..n)
            .map(|i| {
                let r = t[(i, i)];
                let d = dp.eval(r);
                if d.norm() > 0.0 {
                    let step = self.eval(r) / d;
                    // Newton may diverge near a multiple root; keep the eigenvalue then
                    if step.norm() < 1e-3 * (1.0 + r.norm()) {
                        return r - step;
                    }
                }
                r
            })
            .collect();
        Ok(roots)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        Poly {
            coeffs: (0..len)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        + other.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, other: &Poly) -> Poly {
        let mut coeffs = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly { coeffs }
    }
}

/// Pairs of roots closer than `rel * max|root|`.
pub fn find_repeated(roots: &[C64], rel: f64) -> Option<C64> {
    let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if (roots[i] - roots[j]).norm() < rel * scale {
                return Some(roots[i]);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eval_and_derivative() {
        // 1 + 2x + 3x^2
        let p = Poly::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(p.eval(c(2.0, 0.0)), c(17.0, 0.0));
        assert_eq!(p.derivative().coeffs, vec![c(2.0, 0.0), c(6.0, 0.0)]);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn roots_of_quadratic() {
        let p = Poly::from_roots(&[c(1.0, 0.5), c(-2.0, 3.0)]);
        let mut r = p.roots().unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - c(-2.0, 3.0)).norm() < 1e-13);
        assert!((r[1] - c(1.0, 0.5)).norm() < 1e-13);
    }

    #[test]
    fn trailing_zero_coefficients_lower_degree() {
        let p = Poly::new(vec![c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), 1);
        assert_eq!(p.roots().unwrap(), vec![c(1.0, 0.0)]);
    }

    #[test]
    fn repeated_detection() {
        assert!(find_repeated(&[c(1.0, 0.0), c(1.0 + 1e-12, 0.0)], 1e-8).is_some());
        assert!(find_repeated(&[c(1.0, 0.0), c(2.0, 0.0)], 1e-8).is_none());
    }

    proptest! {
        #[test]
        fn roots_reproduce_polynomial(
            parts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..6)
        ) {
            let roots: Vec<C64> = parts.iter().map(|&(a, b)| c(a, b)).collect();
            prop_assume!(find_repeated(&roots, 1e-2).is_none());
            let p = Poly::from_roots(&roots);
            for r in p.roots().unwrap() {
                let nearest = roots.iter().map(|x| (x - r).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(nearest < 1e-8, "root {} off by {}", r, nearest);
            }
        }
    }
}
