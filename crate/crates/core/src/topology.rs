//! Closed-form topological invariants of configuration spaces and their
//! quotients, in exact integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{CcError, Result};

/// Polynomial with integer coefficients indexed by degree, trailing zeros
/// trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntPolynomial {
    coefficients: Vec<i64>,
}

impl IntPolynomial {
    pub fn new(mut coefficients: Vec<i64>) -> Self {
        while coefficients.last() == Some(&0) {
            coefficients.pop();
        }
        Self { coefficients }
    }

    pub fn one() -> Self {
        Self::new(vec![1])
    }

    /// `1 + k t^degree`.
    pub fn binomial(k: i64, degree: usize) -> Self {
        let mut c = vec![0; degree + 1];
        c[0] = 1;
        c[degree] += k;
        Self::new(c)
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn coefficient(&self, degree: usize) -> i64 {
        self.coefficients.get(degree).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coefficients.is_empty() || other.coefficients.is_empty() {
            return Self::default();
        }
        let mut c = vec![0; self.coefficients.len() + other.coefficients.len() - 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            for (j, b) in other.coefficients.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn eval(&self, t: i64) -> i64 {
        self.coefficients.iter().rev().fold(0, |acc, c| acc * t + c)
    }

    /// Coefficients `0..=max_degree`, zero-padded.
    pub fn truncated(&self, max_degree: usize) -> Vec<i64> {
        (0..=max_degree).map(|k| self.coefficient(k)).collect()
    }
}

fn product(factors: impl Iterator<Item = IntPolynomial>) -> IntPolynomial {
    factors.fold(IntPolynomial::one(), |acc, f| acc.mul(&f))
}

/// `P(t) = prod_{k=1}^{n-1} (1 + k t^(d-1))` for the configuration space of
/// `n` points in `R^d`.
pub fn poincare_configuration(n: usize, d: usize) -> Result<IntPolynomial> {
    if n < 2 {
        return Err(CcError::Domain(format!("need n >= 2, got {n}")));
    }
    if d < 2 {
        return Err(CcError::Unsupported("the configuration-space formula needs d >= 2".into()));
    }
    Ok(product((1..n).map(|k| IntPolynomial::binomial(k as i64, d - 1))))
}

/// `p(t) = prod_{k=2}^{n-1} (1 + k t)`; coefficient `j` is the Betti number
/// `b_j` of the planar quotient by `SO(2)`.
pub fn poincare_planar_quotient(n: usize) -> Result<IntPolynomial> {
    if n < 3 {
        return Err(CcError::Domain(format!("planar quotient needs n >= 3, got {n}")));
    }
    Ok(product((2..n).map(|k| IntPolynomial::binomial(k as i64, 1))))
}

/// `dim H^k(M_n(R^2)) = sum_{j <= k} b_j` for `k = 0..=n-3`.
pub fn mccord_m_dimensions(n: usize) -> Result<Vec<i64>> {
    let betti = poincare_planar_quotient(n)?;
    Ok((0..=n - 3)
        .scan(0, |acc, k| {
            *acc += betti.coefficient(k);
            Some(*acc)
        })
        .collect())
}

/// Coefficients of `prod_{k=2}^{n-1} (1 + k t^2) / (1 - t^2)` up to and
/// including `max_degree`.
pub fn pacella_series(n: usize, max_degree: usize) -> Result<IntPolynomial> {
    if n < 3 {
        return Err(CcError::Domain(format!("equivariant series needs n >= 3, got {n}")));
    }
    let numerator = product((2..n).map(|k| IntPolynomial::binomial(k as i64, 2)));
    // Multiplying by 1/(1 - t^2) takes running sums over same-parity degrees.
    let mut c = vec![0i64; max_degree + 1];
    for k in 0..=max_degree {
        c[k] = numerator.coefficient(k) + if k >= 2 { c[k - 2] } else { 0 };
    }
    Ok(IntPolynomial::new(c))
}

/// `d(n-1) - 1 - d(d-1)/2`; negative values are returned as they are.
pub fn dim_maximal_orbit_manifold(n: usize, d: usize) -> i64 {
    let (n, d) = (n as i64, d as i64);
    d * (n - 1) - 1 - d * (d - 1) / 2
}

/// Closed cases in which the degree of the regularized quotient map follows
/// from its Lefschetz number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeCase {
    /// Self-map of `P^1(R)`: `L = 1 - deg`.
    Circle,
    /// Self-map of `P^1(C)`: `L = 1 + deg`.
    ComplexProjectiveLine,
    None,
}

/// Lefschetz number `L = sum of indices`, with the degree when it is
/// determined by `L`.
pub fn lefschetz_and_degree(indices: &[i32], case: DegreeCase) -> (i64, Option<i64>) {
    let l: i64 = indices.iter().map(|&i| i as i64).sum();
    let degree = match case {
        DegreeCase::Circle => Some(1 - l),
        DegreeCase::ComplexProjectiveLine => Some(l - 1),
        DegreeCase::None => None,
    };
    (l, degree)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseInequalityReport {
    /// `c_j`: number of classes with Morse index `j`.
    pub counts: Vec<i64>,
    pub betti: Vec<i64>,
    /// `c_j >= b_j` for every `j`.
    pub inequalities_hold: bool,
    pub morse_alternating_sum: i64,
    pub betti_alternating_sum: i64,
    pub euler_characteristic_match: bool,
    /// `c_j == b_j` for every `j`.
    pub perfect: bool,
}

fn alternating(c: &[i64]) -> i64 {
    c.iter().enumerate().map(|(j, &x)| if j % 2 == 0 { x } else { -x }).sum()
}

/// Compares the Morse-index counts of a census with Betti numbers.
pub fn morse_inequality_report(morse_indices: &[usize], betti: &IntPolynomial) -> MorseInequalityReport {
    let top = morse_indices.iter().copied().max().map_or(0, |m| m + 1);
    let len = top.max(betti.coefficients().len());
    let mut counts = vec![0i64; len];
    for &m in morse_indices {
        counts[m] += 1;
    }
    let betti: Vec<i64> = (0..len).map(|j| betti.coefficient(j)).collect();
    let morse_alternating_sum = alternating(&counts);
    let betti_alternating_sum = alternating(&betti);
    MorseInequalityReport {
        inequalities_hold: counts.iter().zip(&betti).all(|(c, b)| c >= b),
        perfect: counts == betti,
        euler_characteristic_match: morse_alternating_sum == betti_alternating_sum,
        morse_alternating_sum,
        betti_alternating_sum,
        counts,
        betti,
    }
}
