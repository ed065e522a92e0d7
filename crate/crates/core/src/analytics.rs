//! First-order Magnus predictions for the calibration prefactors.
//!
//! The ideal gate is removed by a toggling frame that rotates the qubit by
//! `θ(t) = ∫₀ᵗ Ω_x` and lets level 2 precess at `Δ₂`. What is left is the
//! error Hamiltonian; its time integral `Z₁` is small for slow enough gates,
//! and zeroing parts of it yields the constant detuning `δ_c`, the amplitude
//! scale `β` and the quadrature prefactor `α`.
//!
//! The qubit-block elements carry `sin θ`, `cos θ` of the full rotation
//! angle while the leakage elements carry the half angle, matching a
//! toggling unitary `exp(−iθσˣ/2)`. With this reading the detuning integral
//! for a Hann π pulse evaluates to the `0.712` coefficient of the closed
//! form.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::envelopes::{Envelope, EnvelopeKind};
use crate::error::{Error, Result};
use crate::model::LadderParams;
use crate::numerics::{brent, cumulative_integral};
use crate::synthesis::{ControlWaveform, Detuning, Pulse};

/// Intervals of the quadrature grid; the estimate is checked against the
/// grid with half as many.
pub const QUADRATURE_INTERVALS: usize = 4096;

/// Closed-form detuning coefficient for a Hann π pulse.
pub const DELTA_C_HANN_COEFF: f64 = 0.712;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeltaCMode {
    #[default]
    Integral,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    Cubic,
    #[default]
    Linearized,
}

/// Samples of `Ω_x`, `Ω̇_x` and `θ` on a uniform grid.
struct Grid {
    h: f64,
    t: Vec<f64>,
    omega: Vec<f64>,
    omega_dot: Vec<f64>,
    /// Unscaled `Ω_x`, i.e. `θ̇`.
    nominal: Vec<f64>,
    theta: Vec<f64>,
}

impl Grid {
    /// `x` scaled by `beta`; `θ` always follows the unscaled pulse.
    fn new(x: &Pulse, beta: f64) -> Self {
        let n = QUADRATURE_INTERVALS;
        let big_t = x.duration();
        let h = big_t / n as f64;
        let t: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let jets: Vec<_> = t.iter().map(|&s| x.jet::<2>(s)).collect();
        let nominal: Vec<f64> = jets.iter().map(|j| j.value()).collect();
        Self {
            h,
            theta: cumulative_integral(&nominal, h),
            omega: nominal.iter().map(|v| beta * v).collect(),
            omega_dot: jets.iter().map(|j| beta * j.derivative(1)).collect(),
            nominal,
            t,
        }
    }

    fn len(&self) -> usize {
        self.t.len()
    }

    /// Simpson sums on the full and the halved grid.
    fn integrate_pair<F: Fn(usize) -> C64>(&self, f: F) -> (C64, C64) {
        let n = self.len() - 1;
        let vals: Vec<C64> = (0..=n).map(&f).collect();
        let simpson = |stride: usize| {
            let m = n / stride;
            let mut acc = vals[0] + vals[n];
            for i in 1..m {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += vals[i * stride] * w;
            }
            acc * (self.h * stride as f64 / 3.0)
        };
        (simpson(1), simpson(2))
    }

    fn integrate<F: Fn(usize) -> C64>(&self, f: F) -> C64 {
        self.integrate_pair(f).0
    }

    fn integrate_re<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        self.integrate(|i| C64::new(f(i), 0.0)).re
    }
}

/// Integrated toggling-frame error Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnusElements {
    pub alpha: f64,
    /// `Z₁[1,1] − Z₁[0,0]`: relative phase error on the qubit.
    pub phase_error: C64,
    /// `Z₁[0,1]`: rotation error.
    pub z01: C64,
    /// `Z₁[1,2]` at `alpha`.
    pub z12: C64,
    /// `Z₁[0,2]` at `alpha`.
    pub z02: C64,
    /// Coefficients of `α⁰, α¹, α²` in `Z₁[1,2]`.
    pub h12: [C64; 3],
    /// Coefficients of `α⁰, α¹, α²` in `Z₁[0,2]`.
    pub h02: [C64; 3],
    /// Largest change of any element between the full and the halved grid.
    pub quadrature_error: f64,
}

impl MagnusElements {
    pub fn z21(&self) -> C64 {
        self.z12.conj()
    }

    pub fn z20(&self) -> C64 {
        self.z02.conj()
    }

    /// `|Z₁[1,2]|² + |Z₁[0,2]|²` as a function of `α`.
    pub fn leakage_norm(&self, alpha: f64) -> f64 {
        let poly = |h: &[C64; 3]| h[0] + h[1] * alpha + h[2] * (alpha * alpha);
        poly(&self.h12).norm_sqr() + poly(&self.h02).norm_sqr()
    }
}

/// Physical constants entering the toggling-frame integrands.
#[derive(Debug, Clone, Copy)]
struct Consts {
    lambda2: f64,
    delta2: f64,
    alpha: f64,
    delta_c: f64,
}

fn phase_error_integrand(g: &Grid, c: Consts, i: usize) -> C64 {
    let (o, od, th) = (g.omega[i], g.omega_dot[i], g.theta[i]);
    let l2 = c.lambda2 * c.lambda2;
    let d = c.delta2;
    let re = (4.0 * d * c.delta_c + (4.0 * c.alpha - l2) * o * o) * th.cos() / (4.0 * d)
        + od * (c.alpha - 1.0) * c.alpha * l2 * o * th.sin() / (8.0 * d.powi(3));
    C64::new(0.0, re)
}

fn z01_integrand(g: &Grid, c: Consts, i: usize) -> C64 {
    let (o, od, th) = (g.omega[i], g.omega_dot[i], g.theta[i]);
    let l2 = c.lambda2 * c.lambda2;
    let d = c.delta2;
    let cubic = 4.0 * c.alpha * c.alpha + l2 * (1.0 - 2.0 * c.alpha);
    let re = (o - g.nominal[i]) / 2.0
        - o * (8.0 * d * c.alpha * c.delta_c + cubic * o * o) / (16.0 * d * d);
    let im = (4.0 * d * c.delta_c + (4.0 * c.alpha - l2) * o * o) * th.sin() / (8.0 * d)
        + od * (c.alpha - 1.0) * c.alpha * l2 * o * th.cos() / (16.0 * d.powi(3));
    C64::new(re, im)
}

/// `α⁰, α¹, α²` integrands of `Z₁[1,2]` and `Z₁[0,2]` at grid point `i`.
fn leakage_integrands(g: &Grid, c: Consts, i: usize) -> ([C64; 3], [C64; 3]) {
    let (o, od, t) = (g.omega[i], g.omega_dot[i], g.t[i]);
    let d = c.delta2;
    let (s, co) = (0.5 * g.theta[i]).sin_cos();
    let pre = C64::from_polar(c.lambda2 / (4.0 * d), -d * t);
    let j = C64::new(0.0, 1.0);
    let z12 = [
        j * (o * o * s - 2.0 * od * co),
        -((-4.0 * j * d * od * co) + o * (2.0 * od + j * d * o) * s) / (2.0 * d),
        C64::new(o * od * s / d, 0.0),
    ];
    let z02 = [
        C64::new(o * o * co + 2.0 * od * s, 0.0),
        -(4.0 * d * od * s + o * (-2.0 * j * od + d * o) * co) / (2.0 * d),
        -j * (o * od * co / d),
    ];
    (z12.map(|z| pre * z), z02.map(|z| pre * z))
}

fn check_delta2(delta2: f64) -> Result<()> {
    if delta2 == 0.0 || !delta2.is_finite() {
        return Err(Error::SingularParameter(format!(
            "Δ₂ must be finite and nonzero, got {delta2}"
        )));
    }
    Ok(())
}

/// All first-order elements for the in-phase pulse of `wave`, using its `β`
/// and constant detuning (zero unless the waveform carries one) with the
/// quadrature prefactor `alpha`.
pub fn magnus_elements(
    wave: &ControlWaveform,
    params: &LadderParams,
    alpha: f64,
) -> Result<MagnusElements> {
    let delta_c = match wave.detuning {
        Detuning::Constant(c) => c,
        _ => 0.0,
    };
    magnus_for_pulse(
        &wave.x,
        wave.beta,
        Consts {
            lambda2: params.lambda2(),
            delta2: params.delta2(),
            alpha,
            delta_c,
        },
    )
}

fn magnus_for_pulse(x: &Pulse, beta: f64, c: Consts) -> Result<MagnusElements> {
    check_delta2(c.delta2)?;
    let g = Grid::new(x, beta);
    let mut err = 0.0f64;
    let mut track = |(a, b): (C64, C64)| {
        err = err.max((a - b).norm());
        a
    };
    let phase_error = track(g.integrate_pair(|i| phase_error_integrand(&g, c, i)));
    let z01 = track(g.integrate_pair(|i| z01_integrand(&g, c, i)));
    let leak: Vec<_> = (0..g.len()).map(|i| leakage_integrands(&g, c, i)).collect();
    let mut h12 = [C64::new(0.0, 0.0); 3];
    let mut h02 = [C64::new(0.0, 0.0); 3];
    for k in 0..3 {
        h12[k] = track(g.integrate_pair(|i| leak[i].0[k]));
        h02[k] = track(g.integrate_pair(|i| leak[i].1[k]));
    }
    let poly = |h: &[C64; 3]| h[0] + h[1] * c.alpha + h[2] * (c.alpha * c.alpha);
    Ok(MagnusElements {
        alpha: c.alpha,
        phase_error,
        z01,
        z12: poly(&h12),
        z02: poly(&h02),
        h12,
        h02,
        quadrature_error: err,
    })
}

/// The π-normalized Hann pulse the closed forms assume.
pub fn hann_pi(duration: f64) -> Result<Pulse> {
    Ok(Pulse::Plain(Envelope::with_area(
        EnvelopeKind::Hann,
        duration,
        PI,
    )?))
}

fn warn_if_not_pi(x: &Pulse) -> Result<()> {
    let area = x.area()?;
    if (area - PI).abs() > 1e-6 * PI {
        log::warn!(
            "rotation angle {area:.6} is not π; the symmetry that removes the phase error \
             does not hold"
        );
    }
    Ok(())
}

/// Constant detuning that zeroes `Im Z₁[0,1]`.
///
/// `Integral` evaluates the ratio of integrals for the given pulse;
/// `ClosedForm` is `0.712 (λ₂² − 4α)/Δ₂ · π²/T²`, which assumes a Hann pulse.
pub fn predict_delta_c(
    x: &Pulse,
    alpha: f64,
    lambda2: f64,
    delta2: f64,
    mode: DeltaCMode,
) -> Result<f64> {
    check_delta2(delta2)?;
    let big_t = x.duration();
    let l2 = lambda2 * lambda2;
    match mode {
        DeltaCMode::ClosedForm => {
            Ok(DELTA_C_HANN_COEFF * (l2 - 4.0 * alpha) / delta2 * PI * PI / (big_t * big_t))
        }
        DeltaCMode::Integral => {
            warn_if_not_pi(x)?;
            let g = Grid::new(x, 1.0);
            let s = g.integrate_re(|i| g.theta[i].sin());
            if s.abs() < 1e-14 {
                return Err(Error::Numerical(
                    "∫ sin θ vanishes; detuning prediction undefined".into(),
                ));
            }
            let a = g.integrate_re(|i| (4.0 * alpha - l2) * g.omega[i].powi(2) * g.theta[i].sin());
            let b = g.integrate_re(|i| {
                g.omega_dot[i] * (alpha - 1.0) * alpha * l2 * g.omega[i] * g.theta[i].cos()
            });
            Ok(-a / (4.0 * delta2 * s) - b / (8.0 * delta2.powi(3) * s))
        }
    }
}

/// Amplitude scale that zeroes `Re Z₁[0,1]`.
///
/// `Cubic` solves the integrated cubic in `β` on `[0.5, 1.5]` for the given
/// pulse. `Linearized` evaluates the Hann closed form obtained with
/// `β³ ≈ 1 + 3(β − 1)`.
pub fn predict_beta(
    x: &Pulse,
    alpha: f64,
    delta_c: f64,
    lambda2: f64,
    delta2: f64,
    mode: BetaMode,
) -> Result<f64> {
    check_delta2(delta2)?;
    let l2 = lambda2 * lambda2;
    let cubic = 4.0 * alpha * alpha + l2 - 2.0 * alpha * l2;
    match mode {
        BetaMode::Linearized => {
            let t2 = x.duration().powi(2);
            let q = cubic * 5.0 * PI.powi(3) / t2;
            let lin = 16.0 * alpha * delta_c * PI * delta2;
            let num = lin + q;
            let den = 16.0 * PI * delta2 * delta2 - lin - 3.0 * q;
            if den.abs() < 1e-14 {
                return Err(Error::Numerical("degenerate β denominator".into()));
            }
            Ok(1.0 + num / den)
        }
        BetaMode::Cubic => {
            let g = Grid::new(x, 1.0);
            let i1 = g.integrate_re(|i| g.omega[i]);
            let i3 = g.integrate_re(|i| g.omega[i].powi(3));
            let d = delta2;
            let f = |b: f64| {
                Ok((b - 1.0) * i1 / 2.0
                    - (8.0 * d * alpha * delta_c * b * i1 + cubic * b.powi(3) * i3)
                        / (16.0 * d * d))
            };
            brent(f, 0.5, 1.5, 1e-13, 200).map_err(|e| {
                Error::Numerical(format!("no amplitude root in [0.5, 1.5]: {e}"))
            })
        }
    }
}

/// Quadrature prefactor balancing the `|1⟩ ↔ |2⟩` and `|0⟩ ↔ |2⟩` leakage
/// elements, from the mean-field linearization `αⁿ ≈ 1 + n(α − 1)` around 1.
pub fn predict_alpha(x: &Pulse, lambda2: f64, delta2: f64) -> Result<f64> {
    let m = magnus_for_pulse(
        x,
        1.0,
        Consts {
            lambda2,
            delta2,
            alpha: 1.0,
            delta_c: 0.0,
        },
    )?;
    let x1 = |h: &[C64; 3]| {
        let s = (h[0] + h[1] + h[2]).conj();
        h[1] * s + h[2] * s * 2.0
    };
    let x2 = |h: &[C64; 3]| {
        let b = h.map(|z| z.conj());
        h[1] * b[1] + h[1] * b[2] * 2.0 + h[2] * b[0] * 2.0 + h[2] * b[1] * 4.0 + h[2] * b[2] * 6.0
    };
    let n = x1(&m.h12) + x1(&m.h02);
    let d = x2(&m.h12) + x2(&m.h02);
    let den = (d + d.conj()).re;
    if den.abs() < 1e-14 {
        return Err(Error::Numerical("degenerate α denominator".into()));
    }
    Ok(1.0 - (n + n.conj()).re / den)
}

/// Predicted DRAG prefactors for one gate time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    #[serde(rename = "T_ns")]
    pub t_ns: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta_c_rad_per_ns: f64,
    pub delta_c_mhz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictOptions {
    pub delta_c: DeltaCMode,
    pub beta: BetaMode,
}

/// `α` (predicted unless given), then `δ_c` and `β` for a Hann π pulse.
pub fn predict(
    params: &LadderParams,
    duration: f64,
    alpha: Option<f64>,
    opts: PredictOptions,
) -> Result<Prediction> {
    let x = hann_pi(duration)?;
    predict_for_pulse(params, &x, alpha, opts)
}

/// As [`predict`] for an arbitrary in-phase pulse, e.g. an R2D envelope with
/// `α` standing for `α12`.
pub fn predict_for_pulse(
    params: &LadderParams,
    x: &Pulse,
    alpha: Option<f64>,
    opts: PredictOptions,
) -> Result<Prediction> {
    let (l, d) = (params.lambda2(), params.delta2());
    let alpha = match alpha {
        Some(a) => a,
        None => predict_alpha(x, l, d)?,
    };
    let delta_c = predict_delta_c(x, alpha, l, d, opts.delta_c)?;
    let beta = predict_beta(x, alpha, delta_c, l, d, opts.beta)?;
    Ok(Prediction {
        t_ns: x.duration(),
        alpha,
        beta,
        delta_c_rad_per_ns: delta_c,
        delta_c_mhz: delta_c / (2.0 * PI) * 1e3,
    })
}
