//! Quadrature, bracketed root finding and finite-difference stencils.

use crate::error::{Error, Result};

/// Composite Simpson rule on `[a, b]` with `2^k` intervals, refined by step
/// halving until successive estimates agree to `rel_tol`.
///
/// The first estimate uses `initial_intervals` (rounded up to a power of
/// two, minimum 2). Returns the converged integral and the interval count.
pub fn simpson_adaptive<F>(
    f: F,
    a: f64,
    b: f64,
    initial_intervals: usize,
    rel_tol: f64,
) -> Result<(f64, usize)>
where
    F: Fn(f64) -> f64,
{
    const MAX_INTERVALS: usize = 1 << 22;
    if b == a {
        return Ok((0.0, 0));
    }
    // trapezoid sums reused across refinements
    let mut n = 1usize;
    let mut h = b - a;
    let edge = 0.5 * (f(a) + f(b));
    let mut interior = 0.0;
    let mut trap = edge * h;
    let target = initial_intervals.max(2).next_power_of_two();
    let mut simpson_prev: Option<f64> = None;
    loop {
        // halve: add midpoints
        let mut mid = 0.0;
        for i in 0..n {
            mid += f(a + (i as f64 + 0.5) * h);
        }
        interior += mid;
        n *= 2;
        h *= 0.5;
        let trap_new = (edge + interior) * h;
        let simpson = (4.0 * trap_new - trap) / 3.0;
        trap = trap_new;
        if n >= target {
            if let Some(prev) = simpson_prev {
                let diff = (simpson - prev).abs();
                if diff <= rel_tol * simpson.abs() || diff <= 1e-15 * (b - a) {
                    return Ok((simpson, n));
                }
            }
            simpson_prev = Some(simpson);
            if n >= MAX_INTERVALS {
                return Err(Error::Numerical(format!(
                    "Simpson quadrature on [{a}, {b}] did not reach rel. tolerance {rel_tol:e} \
                     with {n} intervals (last estimate {simpson:.15e})"
                )));
            }
        }
    }
}

/// Fixed composite Simpson rule with `n` (even) intervals.
pub fn simpson_fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Running integral of uniformly sampled values, integrating the local
/// quadratic interpolant over each panel.
pub fn cumulative_integral(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for i in 1..values.len() {
        // quadratic through three points containing [i-1, i]
        let (a, b, c) = if i + 1 < values.len() {
            (values[i - 1], values[i], values[i + 1])
        } else {
            (values[i - 2], values[i - 1], values[i])
        };
        let piece = if i + 1 < values.len() {
            h * (5.0 * a + 8.0 * b - c) / 12.0
        } else {
            h * (-a + 8.0 * b + 5.0 * c) / 12.0
        };
        out[i] = out[i - 1] + piece;
    }
    out
}

/// Brent's bracketed root finder on `[a, b]`.
pub fn brent<F>(f: F, mut a: f64, mut b: f64, abs_tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracketing(format!(
            "no sign change on [{a:.6e}, {b:.6e}]: f(a) = {fa:.3e}, f(b) = {fb:.3e}"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * abs_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::Numerical(format!(
        "Brent root finder did not converge in {max_iter} iterations (last b = {b:.12e}, f = {fb:.3e})"
    )))
}

/// Five-point central difference of `f` at `t` with step `h`.
pub fn central_diff5<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}
