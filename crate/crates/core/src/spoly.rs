//! Polynomials in `s = sin²(π t / T)`.
//!
//! Every base envelope used here is either a polynomial in `s` or `sin(πt/T)`
//! times one, so its square is a polynomial in `s`, and so are all even time
//! derivatives of that square. The recursive square-root pulses are therefore
//! square roots of polynomials in `s`; factoring out the lowest power of `s`
//! lets us take the root without any singularity at the pulse edges.

use crate::jet::Jet;

/// Ascending coefficients: `c[0] + c[1] s + c[2] s² + ...`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SPoly(pub Vec<f64>);

impl SPoly {
    pub fn monomial(k: usize, c: f64) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        Self(v)
    }

    pub fn constant(c: f64) -> Self {
        Self(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self::default();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self(out)
    }

    /// Derivative with respect to `s`.
    pub fn ds(&self) -> Self {
        if self.0.len() <= 1 {
            return Self(vec![0.0]);
        }
        Self(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Second time derivative of `P(s(t))` with `s = sin²(ω t)`.
    ///
    /// Uses `ṡ² = 4ω² s (1 - s)` and `s̈ = 2ω² (1 - 2s)`.
    pub fn d2t(&self, omega: f64) -> Self {
        let w2 = omega * omega;
        let p1 = self.ds();
        let p2 = p1.ds();
        let a = SPoly(vec![0.0, 4.0 * w2, -4.0 * w2]);
        let b = SPoly(vec![2.0 * w2, -4.0 * w2]);
        p2.mul(&a).add(&p1.mul(&b))
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn eval_jet<const N: usize>(&self, s: Jet<N>) -> Jet<N> {
        self.0
            .iter()
            .rev()
            .fold(Jet::zero(), |acc, c| acc * s + *c)
    }

    /// Zero coefficients below `rel_tol` times the largest magnitude and drop
    /// trailing zeros.
    pub fn cleaned(&self, rel_tol: f64) -> Self {
        let peak = self.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut v: Vec<f64> = self
            .0
            .iter()
            .map(|&c| if c.abs() <= rel_tol * peak { 0.0 } else { c })
            .collect();
        while v.len() > 1 && v.last() == Some(&0.0) {
            v.pop();
        }
        Self(v)
    }

    /// Split `P = s^m Q` with `Q(0) != 0`. Returns `(m, Q)`.
    pub fn factor_s(&self) -> (usize, SPoly) {
        let m = self.0.iter().position(|&c| c != 0.0).unwrap_or(0);
        (m, SPoly(self.0[m..].to_vec()))
    }

    /// Chebyshev polynomial `T_k(1 - 2s)`, i.e. `cos(2k x)` with `s = sin² x`.
    pub fn cos_even(k: usize) -> Self {
        let c = SPoly(vec![1.0, -2.0]);
        let mut prev = SPoly::constant(1.0);
        if k == 0 {
            return prev;
        }
        let mut cur = c.clone();
        for _ in 1..k {
            let next = cur.mul(&c).scale(2.0).add(&prev.scale(-1.0));
            prev = cur;
            cur = next;
        }
        cur
    }
}
