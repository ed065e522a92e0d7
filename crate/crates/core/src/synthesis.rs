//! Corrected control waveforms: DRAG, the recursive square-root pulses,
//! superlinear corrections, prefactors and minimum gate times.
//!
//! The recursions are evaluated exactly. With `U = Ω₂²`,
//! `Ω̇² + Ω̈Ω = ½ d²(Ω²)/dt²` turns each recursion into a linear map on the
//! squared pulse, `Ω₁² = U + b Ü` and `Ω_x² = Ω₁² + a d²(Ω₁²)/dt²`, where
//! `a = α02/Δ₂²`, `b = α13/Δ₃²`. Every squared pulse is a polynomial in
//! `s = sin²(πt/T)`, so `Ω = sin^m(πt/T) √Q(s)` with `Q(0) ≠ 0` and all
//! derivatives follow from Taylor jets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::envelopes::{rotation_angle, Envelope, EnvelopeKind};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::model::{DriveSample, LadderParams};
use crate::spoly::SPoly;

/// Grid used for radicand feasibility scans.
pub const RADICAND_GRID: usize = 4096;

/// `sin^m(πt/T) · √Q(s)` for a unit-amplitude pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct RootPulse {
    pub m: usize,
    pub q: SPoly,
}

impl RootPulse {
    /// Root of a squared pulse given as a polynomial in `s`.
    pub fn from_square(square: &SPoly) -> Self {
        let (m, q) = square.factor_s();
        Self { m, q }
    }

    pub fn jet<const N: usize>(&self, t: f64, omega: f64) -> Jet<N> {
        let sn = Jet::<N>::sin_linear(omega * t, omega);
        let s = sn * sn;
        sn.powi(self.m as u32) * self.q.eval_jet(s).sqrt()
    }

    /// Most negative value of `Q` over `s ∈ [0, 1]`, as `(s, Q(s))`.
    pub fn min_radicand(&self) -> (f64, f64) {
        (0..=RADICAND_GRID)
            .map(|i| {
                let s = i as f64 / RADICAND_GRID as f64;
                (s, self.q.eval(s))
            })
            .fold((0.0, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
    }
}

/// A real pulse on `[0, T]`: either a base envelope or a recursive root.
#[derive(Debug, Clone, PartialEq)]
pub enum Pulse {
    Plain(Envelope),
    Root {
        amplitude: f64,
        duration: f64,
        root: RootPulse,
    },
}

impl Pulse {
    pub fn duration(&self) -> f64 {
        match self {
            Self::Plain(e) => e.duration(),
            Self::Root { duration, .. } => *duration,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            Self::Plain(e) => e.amplitude(),
            Self::Root { amplitude, .. } => *amplitude,
        }
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        match self {
            Self::Plain(e) => Self::Plain(e.with_amplitude(amplitude)),
            Self::Root { duration, root, .. } => Self::Root {
                amplitude,
                duration: *duration,
                root: root.clone(),
            },
        }
    }

    pub fn jet<const N: usize>(&self, t: f64) -> Jet<N> {
        match self {
            Self::Plain(e) => e.jet::<N>(t),
            Self::Root {
                amplitude,
                duration,
                root,
            } => root.jet::<N>(t, PI / duration).scale(*amplitude),
        }
    }

    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        crate::envelopes::check_time(t, self.duration())?;
        if order > 3 {
            return Err(Error::Domain(format!("derivative order {order} not in 0..=3")));
        }
        Ok(self.jet::<4>(t).derivative(order))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.jet::<1>(t).value()
    }

    /// Squared pulse as a polynomial in `s`.
    fn square(&self) -> SPoly {
        let a2 = self.amplitude() * self.amplitude();
        match self {
            Self::Plain(e) => e.shape().square().scale(a2),
            Self::Root { root, .. } => SPoly::monomial(root.m, 1.0).mul(&root.q).scale(a2),
        }
    }

    /// `∫₀ᵀ Ω dt`.
    pub fn area(&self) -> Result<f64> {
        match self {
            Self::Plain(e) => Ok(e.area()),
            Self::Root { .. } => rotation_angle(|t| self.value(t), self.duration()),
        }
    }
}

/// Apply one recursion `Ω_out² = Ω_in² + (2 coef)(Ω̇_in² + Ω̈_in Ω_in)`.
fn recurse(input: &Pulse, coef: f64, level: &str) -> Result<Pulse> {
    let duration = input.duration();
    let omega = PI / duration;
    let amp = input.amplitude();
    if amp == 0.0 {
        return Ok(Pulse::Root {
            amplitude: 0.0,
            duration,
            root: RootPulse {
                m: 0,
                q: SPoly::constant(1.0),
            },
        });
    }
    let unit_sq = input.square().scale(1.0 / (amp * amp));
    let sq = unit_sq.add(&unit_sq.d2t(omega).scale(coef));
    let root = RootPulse::from_square(&sq);
    let (s_min, q_min) = root.min_radicand();
    if !(q_min > 0.0) {
        // s = sin²(πt/T) maps back to the first half of the pulse
        let t = duration / PI * s_min.sqrt().asin();
        return Err(Error::InfeasibleGateTime {
            level: level.to_string(),
            t_ns: t,
            value: q_min * amp * amp * s_min.powi(root.m as i32),
            tmin_ns: None,
        });
    }
    Ok(Pulse::Root {
        amplitude: amp,
        duration,
        root,
    })
}

fn check_delta(name: &str, d: f64) -> Result<()> {
    if d == 0.0 || !d.is_finite() {
        return Err(Error::SingularParameter(format!("{name} must be finite and nonzero, got {d}")));
    }
    Ok(())
}

/// First recursion: `Ω_x = √(Ω₁² + 2α02/Δ₂² (Ω̇₁² + Ω̈₁Ω₁))`.
pub fn synth_r1d(omega1: &Envelope, delta2: f64, alpha02: f64) -> Result<Pulse> {
    check_delta("Δ₂", delta2)?;
    recurse(
        &Pulse::Plain(omega1.clone()),
        alpha02 / (delta2 * delta2),
        "outer recursion (Δ₂)",
    )
}

/// Both recursions; returns `(Ω₁, Ω_x)`.
pub fn synth_r2d(
    omega2: &Envelope,
    delta2: f64,
    delta3: f64,
    alpha13: f64,
    alpha02: f64,
) -> Result<(Pulse, Pulse)> {
    check_delta("Δ₂", delta2)?;
    check_delta("Δ₃", delta3)?;
    let inner = recurse(
        &Pulse::Plain(omega2.clone()),
        alpha13 / (delta3 * delta3),
        "inner recursion (Δ₃)",
    )?;
    let outer = recurse(&inner, alpha02 / (delta2 * delta2), "outer recursion (Δ₂)")?;
    Ok((inner, outer))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Hann,
    Drag,
    R1d,
    R2d,
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Hann => "hann",
            Self::Drag => "drag",
            Self::R1d => "r1d",
            Self::R2d => "r2d",
        }
    }

    /// Base shape used for analytic runs.
    pub fn default_base(&self) -> EnvelopeKind {
        match self {
            Self::Hann | Self::Drag => EnvelopeKind::Hann,
            Self::R1d => EnvelopeKind::SinPow { n: 3 },
            Self::R2d => EnvelopeKind::FourierBl,
        }
    }

    /// Minimum sin power / boundary order the base must satisfy.
    pub fn boundary_order(&self) -> usize {
        match self {
            Self::Hann | Self::Drag => 1,
            Self::R1d => 2,
            Self::R2d => 3,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(Self::Hann),
            "drag" => Ok(Self::Drag),
            "r1d" => Ok(Self::R1d),
            "r2d" => Ok(Self::R2d),
            other => Err(Error::Config(format!(
                "unknown pulse family '{other}' (expected hann, drag, r1d or r2d)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum Detuning {
    None,
    /// `δ(t) = −Ω_x²(4 − λ₂²)/(4Δ₂)`.
    Stark,
    /// Constant detuning in rad/ns.
    Constant(f64),
}

/// Which auxiliary `A` the superlinear correction uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Superlinear {
    Off,
    /// `A = (4 − λ₂²) Ω_x³ / 8`.
    Simplified,
    /// Full four-level `A` built from `Ω_x`, `Ω₁` and `Ω₂`. The symbol that
    /// multiplies the `Ω̇₁Ω₁Ω_x` term of the auxiliary `F` is taken as `Δ₂`.
    Full,
    /// As `Full`, with that symbol set to zero.
    FullDelta1Zero,
}

/// Coefficients of the superlinear correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperlinearCoeffs {
    pub delta2: f64,
    pub delta3: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub mode: Superlinear,
}

/// Pointwise superlinear correction.
///
/// Takes jets of `Ω_x` and (for the full form) `Ω₁`, `Ω₂` at one instant and
/// returns `(Ω_x', Ω_y', δ')` with `Ω_y' = −Ω̇_x'/Δ₂ − Ȧ/Δ₂³` and
/// `δ' = δ − AΩ_x/Δ₂³`.
pub fn superlinear_correct(
    x: Jet<4>,
    inner: Option<(Jet<4>, Jet<4>)>,
    c: &SuperlinearCoeffs,
    delta: f64,
) -> Result<(f64, f64, f64)> {
    let d2 = c.delta2;
    let l2s = c.lambda2 * c.lambda2;
    let k = (4.0 - l2s) / (8.0 * d2 * d2);
    let x_new = x - (x * x * x).scale(k);
    let a = match c.mode {
        Superlinear::Off => {
            return Ok((x.value(), -x.derivative(1) / d2, delta));
        }
        Superlinear::Simplified => (x * x * x).scale((4.0 - l2s) / 8.0),
        Superlinear::Full | Superlinear::FullDelta1Zero => {
            let (o1, o2) = inner.ok_or_else(|| {
                Error::Config("full superlinear correction needs Ω₁ and Ω₂".into())
            })?;
            let d1 = if c.mode == Superlinear::Full { d2 } else { 0.0 };
            full_a(x, o1, o2, d1, c)
        }
    };
    let y = -x_new.derivative(1) / d2 - a.derivative(1) / (d2 * d2 * d2);
    let dl = delta - a.value() * x.value() / (d2 * d2 * d2);
    Ok((x_new.value(), y, dl))
}

fn full_a(x: Jet<4>, o1: Jet<4>, o2: Jet<4>, d1: f64, c: &SuperlinearCoeffs) -> Jet<4> {
    let (d2, d3) = (c.delta2, c.delta3);
    let l2s = c.lambda2 * c.lambda2;
    let l3s = c.lambda3 * c.lambda3;
    let dd = d3 - 2.0 * d2;
    let e = d2 * d2 - d3 * d3;
    // G = E D² λ₃² F, written without the division inside F
    let g = (o2.diff() * o2 * x).scale(e * dd * dd * l3s)
        + (o1.diff() * o1 * x).scale((d1 * d1 + dd * dd * l3s) * d2 * d2);
    let bracket = g.diff().scale(-1.0 / (d3 * d3))
        + (o1 * o1 * x).scale(3.0 * d2 * (d2.powi(3) + d3 * dd * dd * l3s))
        + (o2 * o2 * x).scale(e * dd * dd / d3 * 3.0 * d2 * l3s)
        + (x * x * x).scale(d2.powi(3) * (-3.0 * d3 * l3s + d2 * (31.0 - 14.0 * l2s + 10.0 * l3s)));
    bracket.scale(1.0 / (24.0 * d2.powi(4)))
}

/// Calibration knobs applied on top of a synthesized waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefactorSet {
    pub beta: f64,
    /// Quadrature scale (`α`, or `α12` for the recursive families).
    pub alpha12: f64,
    pub alpha02: f64,
    pub alpha13: f64,
    /// Constant detuning in rad/ns; `None` keeps the synthesized detuning.
    pub delta_c: Option<f64>,
}

impl Default for PrefactorSet {
    fn default() -> Self {
        Self {
            beta: 1.0,
            alpha12: 1.0,
            alpha02: 1.0,
            alpha13: 1.0,
            delta_c: None,
        }
    }
}

impl PrefactorSet {
    pub fn drag(beta: f64, alpha: f64, delta_c: f64) -> Self {
        Self {
            beta,
            alpha12: alpha,
            delta_c: Some(delta_c),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Domain(format!("β must be positive, got {}", self.beta)));
        }
        for (n, v) in [
            ("α12", self.alpha12),
            ("α02", self.alpha02),
            ("α13", self.alpha13),
        ] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{n} must be finite")));
            }
        }
        Ok(())
    }
}

/// Everything needed to synthesize one waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub family: Family,
    pub base: EnvelopeKind,
    pub duration: f64,
    /// Target rotation angle (radians) of the pre-correction `Ω_x`.
    pub theta: f64,
    pub detuning: Detuning,
    pub superlinear: Superlinear,
    pub prefactors: PrefactorSet,
}

impl Recipe {
    /// Uncalibrated pulse of the given family as used for analytic sweeps:
    /// π rotation, Stark detuning and superlinear corrections (full form for
    /// the two-level recursion).
    pub fn analytic(family: Family, duration: f64) -> Self {
        let superlinear = match family {
            Family::Hann => Superlinear::Off,
            Family::Drag | Family::R1d => Superlinear::Simplified,
            Family::R2d => Superlinear::Full,
        };
        let detuning = match family {
            Family::Hann => Detuning::None,
            _ => Detuning::Stark,
        };
        Self {
            family,
            base: family.default_base(),
            duration,
            theta: PI,
            detuning,
            superlinear,
            prefactors: PrefactorSet::default(),
        }
    }

    /// Pulse with calibration prefactors and no superlinear terms.
    pub fn calibrated(family: Family, duration: f64, prefactors: PrefactorSet) -> Self {
        let base = match family {
            Family::R2d => EnvelopeKind::SinPow { n: 4 },
            f => f.default_base(),
        };
        Self {
            family,
            base,
            duration,
            theta: PI,
            detuning: Detuning::None,
            superlinear: Superlinear::Off,
            prefactors,
        }
    }

    pub fn with_prefactors(&self, p: PrefactorSet) -> Self {
        Self {
            prefactors: p,
            ..self.clone()
        }
    }

    pub fn with_duration(&self, duration: f64) -> Self {
        Self {
            duration,
            ..self.clone()
        }
    }
}

/// In-phase, quadrature and detuning channels of one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlWaveform {
    pub label: String,
    pub duration: f64,
    /// Pre-correction in-phase pulse.
    pub x: Pulse,
    /// `(Ω₁, Ω₂)` for the recursive families.
    pub inner: Option<(Pulse, Pulse)>,
    /// Whether a DRAG quadrature is present.
    pub drag: bool,
    pub delta2: f64,
    pub lambda2: f64,
    pub detuning: Detuning,
    pub superlinear: Option<SuperlinearCoeffs>,
    pub beta: f64,
    pub alpha: f64,
}

impl ControlWaveform {
    /// Drive values at time `t`.
    pub fn sample(&self, t: f64) -> DriveSample {
        let x = self.x.jet::<4>(t);
        let stark = || -(4.0 - self.lambda2 * self.lambda2) * x.value() * x.value() / (4.0 * self.delta2);
        let (xv, yv, dv) = match &self.superlinear {
            Some(c) => {
                let inner = self
                    .inner
                    .as_ref()
                    .map(|(o1, o2)| (o1.jet::<4>(t), o2.jet::<4>(t)));
                let d0 = if self.detuning == Detuning::Stark { stark() } else { 0.0 };
                // validated at synthesis time
                let (xv, yv, dv) = superlinear_correct(x, inner, c, d0).unwrap_or((0.0, 0.0, 0.0));
                let dv = if self.detuning == Detuning::Stark { dv } else { 0.0 };
                (xv, if self.drag { yv } else { 0.0 }, dv)
            }
            None => {
                let yv = if self.drag {
                    -x.derivative(1) / self.delta2
                } else {
                    0.0
                };
                let dv = if self.detuning == Detuning::Stark { stark() } else { 0.0 };
                (x.value(), yv, dv)
            }
        };
        let delta = match self.detuning {
            Detuning::Constant(c) => c,
            _ => dv,
        };
        DriveSample {
            x: self.beta * xv,
            y: self.beta * self.alpha * yv,
            delta,
        }
    }

    /// Replace `β`, the quadrature scale and the detuning. The recursion
    /// prefactors `α02`, `α13` reshape `Ω_x` and are applied at synthesis.
    pub fn apply_prefactors(&self, p: &PrefactorSet) -> Self {
        let mut w = self.clone();
        w.beta = p.beta;
        w.alpha = p.alpha12;
        if let Some(dc) = p.delta_c {
            w.detuning = Detuning::Constant(dc);
        }
        w
    }

    /// Samples `(t, Ω_x, Ω_y, δ)` on `n + 1` evenly spaced points.
    pub fn samples(&self, n: usize) -> Vec<(f64, DriveSample)> {
        let n = n.max(1);
        (0..=n)
            .map(|i| {
                let t = self.duration * i as f64 / n as f64;
                (t, self.sample(t))
            })
            .collect()
    }

    pub fn to_csv(&self, n: usize) -> String {
        let mut out = String::from("t_ns,omega_x,omega_y,delta\n");
        for (t, d) in self.samples(n) {
            out.push_str(&format!("{t:.12e},{:.15e},{:.15e},{:.15e}\n", d.x, d.y, d.delta));
        }
        out
    }
}

/// `Ω_y = −α Ω̇_x/Δ₂` and the chosen detuning on top of `x`.
pub fn synth_drag(
    x: Pulse,
    delta2: f64,
    lambda2: f64,
    alpha: f64,
    detuning: Detuning,
) -> Result<ControlWaveform> {
    check_delta("Δ₂", delta2)?;
    Ok(ControlWaveform {
        label: "drag".into(),
        duration: x.duration(),
        x,
        inner: None,
        drag: true,
        delta2,
        lambda2,
        detuning,
        superlinear: None,
        beta: 1.0,
        alpha,
    })
}

fn delta3_of(params: &LadderParams) -> Result<f64> {
    params
        .delta3()
        .ok_or_else(|| Error::Config("the two-level recursion needs Δ₃ (at least 4 levels)".into()))
}

/// Unit-amplitude pre-correction pulses `(Ω_x, Some((Ω₁, Ω₂)))`.
fn unit_pulses(params: &LadderParams, recipe: &Recipe) -> Result<(Pulse, Option<(Pulse, Pulse)>)> {
    let base = Envelope::new(recipe.base.clone(), 1.0, recipe.duration)?;
    let p = &recipe.prefactors;
    match recipe.family {
        Family::Hann | Family::Drag => Ok((Pulse::Plain(base), None)),
        Family::R1d => {
            let x = synth_r1d(&base, params.delta2(), p.alpha02)?;
            let b = Pulse::Plain(base);
            Ok((x, Some((b.clone(), b))))
        }
        Family::R2d => {
            let (o1, x) = synth_r2d(&base, params.delta2(), delta3_of(params)?, p.alpha13, p.alpha02)?;
            Ok((x, Some((o1, Pulse::Plain(base)))))
        }
    }
}

/// Synthesize the waveform described by `recipe`, with the pre-correction
/// `Ω_x` normalized to the rotation angle `recipe.theta`.
///
/// All recursions are homogeneous in the amplitude, so the normalization is
/// a single rescaling by `θ / ∫Ω_x(unit)`.
pub fn synthesize(params: &LadderParams, recipe: &Recipe) -> Result<ControlWaveform> {
    synthesize_inner(params, recipe, true)
}

/// As [`synthesize`] but infeasible-time errors do not carry `T_min`, which
/// saves its numeric search when infeasibility is expected.
pub fn synthesize_quiet(params: &LadderParams, recipe: &Recipe) -> Result<ControlWaveform> {
    synthesize_inner(params, recipe, false)
}

fn synthesize_inner(params: &LadderParams, recipe: &Recipe, attach_tmin: bool) -> Result<ControlWaveform> {
    params.validate()?;
    recipe.prefactors.validate()?;
    check_delta("Δ₂", params.delta2())?;
    if recipe.family != Family::Hann && recipe.family != Family::Drag {
        let need = recipe.family.boundary_order();
        let base = Envelope::new(recipe.base.clone(), 1.0, recipe.duration)?;
        let report = crate::envelopes::check_envelope_boundary(&base, need, 1e-9);
        if !report.pass() {
            return Err(Error::Domain(format!(
                "base shape {} does not vanish to derivative order {need} at the edges",
                recipe.base.label()
            )));
        }
    }
    let (x_unit, inner_unit) = unit_pulses(params, recipe).map_err(|e| match e {
        Error::InfeasibleGateTime {
            level,
            t_ns,
            value,
            ..
        } => Error::InfeasibleGateTime {
            level,
            t_ns,
            value,
            tmin_ns: if attach_tmin {
                tmin_numeric(params, recipe).ok()
            } else {
                None
            },
        },
        e => e,
    })?;
    let area = x_unit.area()?;
    if !(area > 0.0) {
        return Err(Error::Numerical(format!("unit pulse area {area} is not positive")));
    }
    let amp = recipe.theta / area;
    let x = x_unit.with_amplitude(amp);
    let inner = inner_unit.map(|(a, b)| (a.with_amplitude(amp), b.with_amplitude(amp)));
    let superlinear = match recipe.superlinear {
        Superlinear::Off => None,
        mode => {
            if matches!(mode, Superlinear::Full | Superlinear::FullDelta1Zero)
                && recipe.family != Family::R2d
            {
                return Err(Error::Config(
                    "the full superlinear correction needs the two-level recursion (r2d)".into(),
                ));
            }
            Some(SuperlinearCoeffs {
                delta2: params.delta2(),
                delta3: params.delta3().unwrap_or(f64::INFINITY),
                lambda2: params.lambda2(),
                lambda3: params.lambda3().unwrap_or(0.0),
                mode,
            })
        }
    };
    let p = &recipe.prefactors;
    let detuning = match p.delta_c {
        Some(dc) => Detuning::Constant(dc),
        None => recipe.detuning,
    };
    let label = match (recipe.family, superlinear.is_some()) {
        (Family::R2d, true) => "r2d+superlinear".to_string(),
        (f, _) => f.label().to_string(),
    };
    Ok(ControlWaveform {
        label,
        duration: recipe.duration,
        x,
        inner,
        drag: recipe.family != Family::Hann,
        delta2: params.delta2(),
        lambda2: params.lambda2(),
        detuning,
        superlinear,
        beta: p.beta,
        alpha: p.alpha12,
    })
}

/// `√(2n) π / |Δ₂|` for an `sinⁿ` trial pulse under the first recursion.
pub fn tmin_r1d(n: u32, delta2: f64) -> Result<f64> {
    tmin_r1d_alpha(n, delta2, 1.0)
}

/// As [`tmin_r1d`] with the recursion prefactor `α02`.
pub fn tmin_r1d_alpha(n: u32, delta2: f64, alpha02: f64) -> Result<f64> {
    check_delta("Δ₂", delta2)?;
    if n == 0 {
        return Err(Error::Domain("sin power must be >= 1".into()));
    }
    Ok((2.0 * n as f64 * alpha02).sqrt() * PI / delta2.abs())
}

/// Closed-form two-recursion minimum time for an `sinⁿ` trial pulse.
///
/// Returns `None` when the closed form does not apply: `α02 ≤ α13` with
/// non-unit prefactors, or no real root (the radicand first vanishes away
/// from the pulse center, as for `n = 5` with `Δ₃ = 3Δ₂`).
pub fn tmin_r2d(n: u32, delta2: f64, delta3: f64, alpha02: f64, alpha13: f64) -> Result<Option<f64>> {
    check_delta("Δ₂", delta2)?;
    check_delta("Δ₃", delta3)?;
    if n == 0 {
        return Err(Error::Domain("sin power must be >= 1".into()));
    }
    let unit = alpha02 == 1.0 && alpha13 == 1.0;
    if !unit && alpha02 <= alpha13 {
        return Ok(None);
    }
    let n = n as f64;
    let (d2s, d3s) = (delta2 * delta2, delta3 * delta3);
    let disc = n * n * (alpha13 * alpha13 * d2s * d2s + alpha02 * alpha02 * d3s * d3s)
        + 2.0 * (2.0 - 5.0 * n) * n * alpha13 * alpha02 * d2s * d3s;
    if disc < 0.0 {
        // the radicand minimum is not at the pulse center
        return Ok(None);
    }
    let nu = disc.sqrt();
    let num = n * (alpha13 * d2s + alpha02 * d3s) + nu;
    Ok(Some(PI * num.sqrt() / (delta2 * delta3).abs()))
}

/// Whether every radicand of the recipe's recursions stays positive.
pub fn feasible(params: &LadderParams, recipe: &Recipe) -> Result<bool> {
    match unit_pulses(params, recipe) {
        Ok(_) => Ok(true),
        Err(Error::InfeasibleGateTime { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Smallest gate time at which all radicands are nonnegative, by bisection
/// to 1e-4 ns.
pub fn tmin_numeric(params: &LadderParams, recipe: &Recipe) -> Result<f64> {
    let at = |t: f64| feasible(params, &recipe.with_duration(t));
    if matches!(recipe.family, Family::Hann | Family::Drag) {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while !at(hi)? {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Numerical("no feasible gate time below 10 µs".into()));
        }
    }
    let mut lo = hi / 2.0;
    while at(lo)? {
        lo /= 2.0;
        if lo < 1e-6 {
            return Ok(0.0);
        }
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{duffing_ladder, DELTA2_DEFAULT};
    use crate::numerics::central_diff5;

    fn ladder() -> LadderParams {
        duffing_ladder(DELTA2_DEFAULT, 4).unwrap()
    }

    #[test]
    fn r1d_midpoint_matches_closed_form_derivatives() {
        let t = 8.0;
        let w = PI / t;
        let env = Envelope::new(EnvelopeKind::SinPow { n: 3 }, 1.0, t).unwrap();
        let x = synth_r1d(&env, DELTA2_DEFAULT, 1.0).unwrap();
        // sin³ at the peak: Ω = 1, Ω̇ = 0, Ω̈ = −3ω²
        let expect = (1.0 + 2.0 * (0.0 - 3.0 * w * w) / (DELTA2_DEFAULT * DELTA2_DEFAULT)).sqrt();
        assert!((x.value(t / 2.0) - expect).abs() < 1e-14);
    }

    #[test]
    fn r1d_collapses_for_large_anharmonicity() {
        let env = Envelope::new(EnvelopeKind::SinPow { n: 3 }, 0.7, 9.0).unwrap();
        let x = synth_r1d(&env, DELTA2_DEFAULT * 1e6, 1.0).unwrap();
        for i in 1..50 {
            let t = 9.0 * i as f64 / 50.0;
            let a = env.eval(t, 0).unwrap();
            assert!((x.value(t) - a).abs() <= 1e-6 * a.abs());
        }
    }

    #[test]
    fn r1d_tmin_touches_zero_at_midpoint() {
        let tmin = tmin_r1d(3, DELTA2_DEFAULT).unwrap();
        assert!((tmin - 6f64.sqrt() * PI / DELTA2_DEFAULT.abs()).abs() < 1e-15);
        assert!((tmin - 5.443).abs() < 1e-3);
        let env = Envelope::new(EnvelopeKind::SinPow { n: 3 }, 1.0, tmin).unwrap();
        let unit = env.shape().square();
        let sq = unit.add(&unit.d2t(PI / tmin).scale(1.0 / (DELTA2_DEFAULT * DELTA2_DEFAULT)));
        assert!(sq.eval(1.0).abs() < 1e-12);
        assert!(synth_r1d(&env.with_amplitude(1.0), DELTA2_DEFAULT, 1.0).is_err());
        let ok = Envelope::new(EnvelopeKind::SinPow { n: 3 }, 1.0, tmin * 1.001).unwrap();
        assert!(synth_r1d(&ok, DELTA2_DEFAULT, 1.0).is_ok());
    }

    #[test]
    fn r2d_closed_form_matches_numeric_for_sin_powers() {
        let p = ladder();
        for n in [3u32, 4] {
            let recipe = Recipe {
                base: EnvelopeKind::SinPow { n },
                ..Recipe::calibrated(Family::R2d, 10.0, PrefactorSet::default())
            };
            let numeric = tmin_numeric(&p, &recipe).unwrap();
            let closed = tmin_r2d(n, p.delta2(), p.delta3().unwrap(), 1.0, 1.0)
                .unwrap()
                .unwrap();
            assert!((numeric - closed).abs() < 2e-4, "n={n}: {numeric} vs {closed}");
        }
    }

    #[test]
    fn r2d_closed_form_declines_when_center_is_not_critical() {
        let p = ladder();
        assert_eq!(tmin_r2d(5, p.delta2(), p.delta3().unwrap(), 1.0, 1.0).unwrap(), None);
        assert_eq!(tmin_r2d(4, p.delta2(), p.delta3().unwrap(), 1.0, 1.2).unwrap(), None);
    }

    #[test]
    fn r2d_tmin_reduces_to_r1d_for_far_third_level() {
        let a = tmin_r2d(3, DELTA2_DEFAULT, 1e4 * DELTA2_DEFAULT, 1.0, 1.0).unwrap().unwrap();
        let b = tmin_r1d(3, DELTA2_DEFAULT).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let p = ladder();
        let w = synthesize(&p, &Recipe::analytic(Family::R2d, 9.0)).unwrap();
        for &t in &[1.0, 2.5, 4.5, 7.3] {
            let j = w.x.jet::<4>(t);
            for k in 1..=3 {
                let fd = central_diff5(|u| w.x.jet::<4>(u).derivative(k - 1), t, 1e-3);
                assert!((j.derivative(k) - fd).abs() < 1e-6 * (1.0 + fd.abs()), "order {k} at {t}");
            }
        }
    }

    #[test]
    fn synthesized_pulses_have_target_area() {
        let p = ladder();
        for fam in [Family::Hann, Family::Drag, Family::R1d, Family::R2d] {
            let w = synthesize(&p, &Recipe::analytic(fam, 9.0)).unwrap();
            let area = rotation_angle(|t| w.x.value(t), 9.0).unwrap();
            assert!((area - PI).abs() < 1e-9, "{fam:?}");
        }
    }

    #[test]
    fn drag_quadrature_is_minus_derivative_over_anharmonicity() {
        let p = ladder();
        let mut r = Recipe::analytic(Family::Drag, 10.0);
        r.superlinear = Superlinear::Off;
        let w = synthesize(&p, &r).unwrap();
        let omega0 = 2.0 * PI / 10.0;
        assert!(w.sample(5.0).y.abs() < 1e-14);
        let peak = omega0 * PI / (10.0 * DELTA2_DEFAULT.abs());
        assert!((w.sample(2.5).y.abs() - peak).abs() < 1e-12);
        // Stark detuning is a positive bump for negative anharmonicity
        let d = w.sample(5.0).delta;
        assert!((d - omega0 * omega0 / (-2.0 * DELTA2_DEFAULT)).abs() < 1e-14);
        assert!(d > 0.0);
    }

    #[test]
    fn simplified_superlinear_leaves_quadrature_unchanged() {
        let p = ladder();
        let w = synthesize(&p, &Recipe::analytic(Family::Drag, 10.0)).unwrap();
        let mut r = Recipe::analytic(Family::Drag, 10.0);
        r.superlinear = Superlinear::Off;
        let plain = synthesize(&p, &r).unwrap();
        for &t in &[1.0, 3.0, 6.5] {
            let a = w.sample(t);
            let b = plain.sample(t);
            assert!((a.y - b.y).abs() < 1e-13);
            let k = 2.0 / (8.0 * DELTA2_DEFAULT * DELTA2_DEFAULT);
            assert!((a.x - (b.x - k * b.x.powi(3))).abs() < 1e-14);
        }
    }

    #[test]
    fn full_a_reduces_to_simplified_without_third_level() {
        let c = SuperlinearCoeffs {
            delta2: DELTA2_DEFAULT,
            delta3: 1e7 * DELTA2_DEFAULT,
            lambda2: 2f64.sqrt(),
            lambda3: 0.0,
            mode: Superlinear::Full,
        };
        let env = Envelope::new(EnvelopeKind::Hann, 0.6, 10.0).unwrap();
        let simple = SuperlinearCoeffs {
            mode: Superlinear::Simplified,
            ..c
        };
        for &t in &[1.5, 4.0, 7.7] {
            let x = env.jet::<4>(t);
            let full = superlinear_correct(x, Some((x, x)), &c, 0.1).unwrap();
            let simp = superlinear_correct(x, None, &simple, 0.1).unwrap();
            assert!((full.0 - simp.0).abs() < 1e-12);
            assert!((full.1 - simp.1).abs() < 1e-8);
            assert!((full.2 - simp.2).abs() < 1e-8);
        }
    }

    #[test]
    fn full_a_derivative_matches_stencil() {
        let p = ladder();
        let w = synthesize(&p, &Recipe::analytic(Family::R2d, 9.0)).unwrap();
        let c = w.superlinear.unwrap();
        let (o1, o2) = w.inner.clone().unwrap();
        let a_of = |t: f64| {
            let x = w.x.jet::<4>(t);
            full_a(x, o1.jet::<4>(t), o2.jet::<4>(t), c.delta2, &c).value()
        };
        for &t in &[2.0, 4.4, 6.1] {
            let exact = full_a(w.x.jet::<4>(t), o1.jet::<4>(t), o2.jet::<4>(t), c.delta2, &c).derivative(1);
            let h = 9.0 / (1u64 << 12) as f64;
            let d1 = central_diff5(a_of, t, h);
            let d2 = central_diff5(a_of, t, h / 2.0);
            assert!((d1 - d2).abs() < 1e-8 * (1.0 + exact.abs()));
            assert!((exact - d2).abs() < 1e-8 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn identity_prefactors_keep_waveform() {
        let p = ladder();
        let w = synthesize(&p, &Recipe::analytic(Family::R2d, 9.0)).unwrap();
        let same = w.apply_prefactors(&PrefactorSet::default());
        for &t in &[0.0, 2.0, 4.5, 9.0] {
            assert_eq!(w.sample(t), same.sample(t));
        }
        let doubled = w.apply_prefactors(&PrefactorSet {
            beta: 2.0,
            ..Default::default()
        });
        let a = rotation_angle(|t| doubled.sample(t).x, 9.0).unwrap();
        let b = rotation_angle(|t| w.sample(t).x, 9.0).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-9);
    }

    #[test]
    fn infeasible_time_reports_tmin() {
        let p = ladder();
        let err = synthesize(&p, &Recipe::analytic(Family::R2d, 4.4)).unwrap_err();
        match err {
            Error::InfeasibleGateTime { tmin_ns, .. } => {
                let t = tmin_ns.unwrap();
                assert!(t > 4.4 && t < 4.5, "{t}");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn hann_is_rejected_by_recursions() {
        let p = ladder();
        let mut r = Recipe::analytic(Family::R1d, 10.0);
        r.base = EnvelopeKind::Hann;
        assert!(matches!(synthesize(&p, &r), Err(Error::Domain(_))));
    }
}
