//! Truncated Taylor arithmetic in one variable.
//!
//! A `Jet<N>` carries the normalized Taylor coefficients `f^(k)(t) / k!` for
//! `k < N` of a smooth function at a fixed point. Arithmetic on jets is exact
//! up to the truncation order, which gives closed-form derivatives of every
//! composed pulse without symbolic expansion.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize>(pub [f64; N]);

impl<const N: usize> Jet<N> {
    pub const fn zero() -> Self {
        Self([0.0; N])
    }

    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Self(c)
    }

    /// The independent variable `t` expanded about `t0`.
    pub fn variable(t0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = t0;
        if N > 1 {
            c[1] = 1.0;
        }
        Self(c)
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// The `k`-th derivative at the expansion point. Orders at or beyond `N`
    /// are not represented and return zero.
    pub fn derivative(&self, k: usize) -> f64 {
        if k >= N {
            return 0.0;
        }
        self.0[k] * factorial(k)
    }

    /// Jet of the time derivative. The highest coefficient is lost.
    pub fn diff(&self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N.saturating_sub(1) {
            c[k] = (k + 1) as f64 * self.0[k + 1];
        }
        Self(c)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.0;
        c.iter_mut().for_each(|x| *x *= s);
        Self(c)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(1.0);
        for _ in 0..n {
            out = out * *self;
        }
        out
    }

    /// Square root. Requires a strictly positive value.
    pub fn sqrt(&self) -> Self {
        let a = &self.0;
        let mut r = [0.0; N];
        r[0] = a[0].sqrt();
        for k in 1..N {
            let mut acc = a[k];
            for j in 1..k {
                acc -= r[j] * r[k - j];
            }
            r[k] = acc / (2.0 * r[0]);
        }
        Self(r)
    }

    /// `sin(phase + omega * (t - t0))` as a jet in `t`.
    pub fn sin_linear(phase: f64, omega: f64) -> Self {
        let (s, c) = phase.sin_cos();
        let cycle = [s, c, -s, -c];
        let mut out = [0.0; N];
        let mut w = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            *o = w * cycle[k % 4] / factorial(k);
            w *= omega;
        }
        Self(out)
    }

    /// `cos(phase + omega * (t - t0))` as a jet in `t`.
    pub fn cos_linear(phase: f64, omega: f64) -> Self {
        let (s, c) = phase.sin_cos();
        let cycle = [c, -s, -c, s];
        let mut out = [0.0; N];
        let mut w = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            *o = w * cycle[k % 4] / factorial(k);
            w *= omega;
        }
        Self(out)
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(rhs.0) {
            *x += y;
        }
        Self(c)
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(rhs.0) {
            *x -= y;
        }
        Self(c)
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut c = [0.0; N];
        for i in 0..N {
            if self.0[i] == 0.0 {
                continue;
            }
            for j in 0..N - i {
                c[i + j] += self.0[i] * rhs.0[j];
            }
        }
        Self(c)
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        let mut c = self.0;
        c[0] += rhs;
        Self(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_closed_form() {
        // f = t^2 * sin(t) at t = 0.7
        let t0 = 0.7;
        let t = Jet::<5>::variable(t0);
        let f = t * t * Jet::sin_linear(t0, 1.0);
        let d1 = 2.0 * t0 * t0.sin() + t0 * t0 * t0.cos();
        let d2 = 2.0 * t0.sin() + 4.0 * t0 * t0.cos() - t0 * t0 * t0.sin();
        assert!((f.derivative(1) - d1).abs() < 1e-14);
        assert!((f.derivative(2) - d2).abs() < 1e-14);
    }

    #[test]
    fn sqrt_inverts_square() {
        let t = Jet::<6>::variable(0.3);
        let g = (t * t + 2.0).sqrt();
        let back = g * g;
        assert!((back.value() - 2.09).abs() < 1e-14);
        assert!((back.derivative(1) - 0.6).abs() < 1e-14);
        assert!((back.derivative(2) - 2.0).abs() < 1e-13);
        for k in 3..6 {
            assert!(back.derivative(k).abs() < 1e-12);
        }
    }

    #[test]
    fn diff_shifts_orders() {
        let f = Jet::<4>::sin_linear(0.2, 3.0);
        let df = f.diff();
        assert!((df.value() - 3.0 * 0.2f64.cos()).abs() < 1e-14);
        assert!((df.derivative(1) + 9.0 * 0.2f64.sin()).abs() < 1e-13);
    }
}
