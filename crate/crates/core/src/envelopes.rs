//! Base pulse envelopes on `[0, T]`, rotation-angle quadrature, amplitude
//! calibration and boundary-condition checks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::numerics::{brent, simpson_adaptive};
use crate::spoly::SPoly;

/// Tolerance used when accepting `t` slightly outside `[0, T]`.
const EDGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `sin²(πt/T)`.
    Hann,
    /// `sinⁿ(πt/T)`.
    SinPow { n: u32 },
    /// `cos(6πt/T)/16 − 9 cos(2πt/T)/16 + 1/2`, peak 1 at `T/2`.
    FourierBl,
    /// `1/2 + [cos(2πjt/T) − k cos(2πnt/T)] / (2(k − 1))` with `k = j²/n²`.
    FourierAnsatz { n: u32, j: u32 },
    /// Weighted sum of shapes that share the same `sin` parity.
    Composite { parts: Vec<(f64, EnvelopeKind)> },
}

/// Unit shape written as `sin^p(x) · P(sin² x)` with `x = πt/T`, `p ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinPoly {
    pub odd: bool,
    pub poly: SPoly,
}

impl SinPoly {
    /// Square of the shape as a polynomial in `s`.
    pub fn square(&self) -> SPoly {
        let sq = self.poly.mul(&self.poly);
        if self.odd {
            SPoly::monomial(1, 1.0).mul(&sq)
        } else {
            sq
        }
    }

    pub fn jet<const N: usize>(&self, t: f64, omega: f64) -> Jet<N> {
        let sn = Jet::<N>::sin_linear(omega * t, omega);
        let s = sn * sn;
        let p = self.poly.eval_jet(s);
        if self.odd {
            sn * p
        } else {
            p
        }
    }
}

impl EnvelopeKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Hann | Self::FourierBl => Ok(()),
            Self::SinPow { n } if *n >= 1 => Ok(()),
            Self::SinPow { n } => Err(Error::Domain(format!("sin power must be >= 1, got {n}"))),
            Self::FourierAnsatz { n, j } => {
                if *n == 0 || *j == 0 {
                    Err(Error::Domain("Fourier ansatz needs n, j >= 1".into()))
                } else if n == j {
                    Err(Error::Domain("Fourier ansatz needs k = j²/n² != 1".into()))
                } else {
                    Ok(())
                }
            }
            Self::Composite { parts } => {
                if parts.is_empty() {
                    return Err(Error::Domain("empty composite envelope".into()));
                }
                for (_, k) in parts {
                    k.validate()?;
                }
                let odd = parts[0].1.sin_poly().odd;
                if parts.iter().any(|(_, k)| k.sin_poly().odd != odd) {
                    return Err(Error::Domain(
                        "composite parts must share sin parity (all odd or all even powers)".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// The unit shape in `sin^p · P(s)` form.
    pub fn sin_poly(&self) -> SinPoly {
        match self {
            Self::Hann => SinPoly {
                odd: false,
                poly: SPoly::monomial(1, 1.0),
            },
            Self::SinPow { n } => SinPoly {
                odd: n % 2 == 1,
                poly: SPoly::monomial((*n / 2) as usize, 1.0),
            },
            Self::FourierBl => {
                let p = SPoly::cos_even(3)
                    .scale(1.0 / 16.0)
                    .add(&SPoly::cos_even(1).scale(-9.0 / 16.0))
                    .add(&SPoly::constant(0.5));
                SinPoly {
                    odd: false,
                    poly: p.cleaned(1e-14),
                }
            }
            Self::FourierAnsatz { n, j } => {
                let k = (*j as f64 / *n as f64).powi(2);
                let c = 1.0 / (2.0 * (k - 1.0));
                let p = SPoly::constant(0.5)
                    .add(&SPoly::cos_even(*j as usize).scale(c))
                    .add(&SPoly::cos_even(*n as usize).scale(-k * c));
                SinPoly {
                    odd: false,
                    poly: p.cleaned(1e-14),
                }
            }
            Self::Composite { parts } => {
                let odd = parts.first().map(|p| p.1.sin_poly().odd).unwrap_or(false);
                let poly = parts
                    .iter()
                    .fold(SPoly::constant(0.0), |acc, (w, k)| acc.add(&k.sin_poly().poly.scale(*w)));
                SinPoly { odd, poly }
            }
        }
    }

    /// `∫₀ᵀ shape dt / T` for the unit-amplitude shape.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Hann | Self::FourierBl | Self::FourierAnsatz { .. } => 0.5,
            Self::SinPow { n } => wallis(*n) / PI,
            Self::Composite { parts } => parts.iter().map(|(w, k)| w * k.mean()).sum(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Hann => "hann".into(),
            Self::SinPow { n } => format!("sin{n}"),
            Self::FourierBl => "fourier_bl".into(),
            Self::FourierAnsatz { n, j } => format!("ansatz_n{n}_j{j}"),
            Self::Composite { .. } => "composite".into(),
        }
    }
}

/// `∫₀^π sinⁿ x dx`.
fn wallis(n: u32) -> f64 {
    match n {
        0 => PI,
        1 => 2.0,
        _ => (n - 1) as f64 / n as f64 * wallis(n - 2),
    }
}

/// A base pulse shape with its amplitude scale (rad/ns) and duration (ns).
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    kind: EnvelopeKind,
    amplitude: f64,
    duration: f64,
    shape: SinPoly,
}

/// Flat key-value form of an envelope descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRecord {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j: Option<u32>,
    pub amplitude: f64,
    pub duration_ns: f64,
}

impl Envelope {
    pub fn new(kind: EnvelopeKind, amplitude: f64, duration: f64) -> Result<Self> {
        kind.validate()?;
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::Domain(format!("duration must be positive, got {duration}")));
        }
        if !amplitude.is_finite() {
            return Err(Error::Domain("amplitude must be finite".into()));
        }
        let shape = kind.sin_poly();
        Ok(Self {
            kind,
            amplitude,
            duration,
            shape,
        })
    }

    /// Envelope whose plain area `∫Ω dt` equals `theta`.
    pub fn with_area(kind: EnvelopeKind, duration: f64, theta: f64) -> Result<Self> {
        let mean = kind.mean();
        if mean == 0.0 {
            return Err(Error::Domain("shape has zero mean".into()));
        }
        Self::new(kind, theta / (mean * duration), duration)
    }

    pub fn kind(&self) -> &EnvelopeKind {
        &self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn omega(&self) -> f64 {
        PI / self.duration
    }

    pub fn shape(&self) -> &SinPoly {
        &self.shape
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        Self {
            amplitude,
            ..self.clone()
        }
    }

    /// Closed-form `∫₀ᵀ Ω dt`.
    pub fn area(&self) -> f64 {
        self.amplitude * self.kind.mean() * self.duration
    }

    pub fn jet<const N: usize>(&self, t: f64) -> Jet<N> {
        self.shape.jet::<N>(t, self.omega()).scale(self.amplitude)
    }

    /// The `order`-th time derivative at `t`.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        check_time(t, self.duration)?;
        if order > 3 {
            return Err(Error::Domain(format!("derivative order {order} not in 0..=3")));
        }
        Ok(self.jet::<4>(t).derivative(order))
    }

    pub fn to_record(&self) -> EnvelopeRecord {
        let (n, j) = match &self.kind {
            EnvelopeKind::SinPow { n } => (Some(*n), None),
            EnvelopeKind::FourierAnsatz { n, j } => (Some(*n), Some(*j)),
            _ => (None, None),
        };
        EnvelopeRecord {
            kind: match &self.kind {
                EnvelopeKind::Hann => "hann",
                EnvelopeKind::SinPow { .. } => "sin_pow",
                EnvelopeKind::FourierBl => "fourier_bl",
                EnvelopeKind::FourierAnsatz { .. } => "fourier_ansatz",
                EnvelopeKind::Composite { .. } => "composite",
            }
            .into(),
            n,
            j,
            amplitude: self.amplitude,
            duration_ns: self.duration,
        }
    }

    pub fn from_record(rec: &EnvelopeRecord) -> Result<Self> {
        let need = |v: Option<u32>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("envelope kind {} needs field {name}", rec.kind)))
        };
        let kind = match rec.kind.as_str() {
            "hann" => EnvelopeKind::Hann,
            "sin_pow" => EnvelopeKind::SinPow { n: need(rec.n, "n")? },
            "fourier_bl" => EnvelopeKind::FourierBl,
            "fourier_ansatz" => EnvelopeKind::FourierAnsatz {
                n: need(rec.n, "n")?,
                j: need(rec.j, "j")?,
            },
            other => return Err(Error::Config(format!("unknown envelope kind '{other}'"))),
        };
        Self::new(kind, rec.amplitude, rec.duration_ns)
    }
}

pub(crate) fn check_time(t: f64, duration: f64) -> Result<()> {
    let slack = EDGE_SLACK * duration;
    if !(t >= -slack && t <= duration + slack) {
        return Err(Error::Domain(format!("t = {t} outside [0, {duration}]")));
    }
    Ok(())
}

/// `∫₀ᵀ Ω_x dt` by composite Simpson with step halving, relative error 1e-10.
pub fn rotation_angle<F: Fn(f64) -> f64>(omega_x: F, duration: f64) -> Result<f64> {
    simpson_adaptive(omega_x, 0.0, duration, 1024, 1e-10).map(|(v, _)| v)
}

/// Amplitude `Ω₀` at which the synthesized pulse area equals `theta`.
///
/// `area_of(Ω₀)` synthesizes the pulse at amplitude `Ω₀` and returns its
/// rotation angle. The search brackets `[0.5, 2] · naive`; the bracket is
/// widened (up to a factor 16 either way) before giving up.
pub fn calibrate_amplitude<F>(area_of: F, naive: f64, theta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(naive > 0.0) {
        return Err(Error::Domain(format!("naive amplitude must be positive, got {naive}")));
    }
    let g = |a: f64| area_of(a).map(|v| v - theta);
    let mut lo = 0.5 * naive;
    let mut hi = 2.0 * naive;
    let mut last_err = None;
    for _ in 0..4 {
        match brent(&g, lo, hi, 1e-13 * naive, 200) {
            Ok(root) => {
                let resid = g(root)?;
                if resid.abs() > 1e-9 {
                    return Err(Error::Numerical(format!(
                        "amplitude calibration residual {resid:.3e} rad exceeds 1e-9"
                    )));
                }
                return Ok(root);
            }
            Err(e @ Error::Bracketing(_)) => {
                last_err = Some(e);
                lo *= 0.5;
                hi *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Bracketing("amplitude bracket".into())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryEntry {
    pub order: usize,
    pub at_start: f64,
    pub at_end: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub label: String,
    pub peak: f64,
    pub entries: Vec<BoundaryEntry>,
}

impl BoundaryReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.entries.iter().find(|e| !e.pass).map(|e| e.order)
    }
}

/// Measure `|f^(k)|` at `t = 0` and `t = T` for `k ≤ max_order`.
///
/// The threshold for order `k` is `tol · peak · (π/T)^k`, with `peak` the
/// largest `|f|` on a 4096-point grid.
pub fn check_boundary<F>(
    label: &str,
    deriv: F,
    duration: f64,
    max_order: usize,
    tol: f64,
) -> BoundaryReport
where
    F: Fn(f64, usize) -> f64,
{
    let grid = 4096;
    let peak = (0..=grid)
        .map(|i| deriv(duration * i as f64 / grid as f64, 0).abs())
        .fold(0.0, f64::max);
    let unit = PI / duration;
    let entries = (0..=max_order)
        .map(|k| {
            let at_start = deriv(0.0, k).abs();
            let at_end = deriv(duration, k).abs();
            let threshold = tol * peak * unit.powi(k as i32);
            BoundaryEntry {
                order: k,
                at_start,
                at_end,
                threshold,
                pass: at_start <= threshold && at_end <= threshold,
            }
        })
        .collect();
    BoundaryReport {
        label: label.to_string(),
        peak,
        entries,
    }
}

/// Boundary check of a plain envelope.
pub fn check_envelope_boundary(env: &Envelope, max_order: usize, tol: f64) -> BoundaryReport {
    check_boundary(
        &env.kind.label(),
        |t, k| env.jet::<8>(t).derivative(k),
        env.duration,
        max_order,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn fourier_bl_peak_and_edges() {
        let env = Envelope::new(EnvelopeKind::FourierBl, 0.7, 10.0).unwrap();
        assert!(close(env.eval(5.0, 0).unwrap(), 0.7, 1e-14));
        assert!(env.eval(0.0, 0).unwrap().abs() < 1e-15);
        assert!(env.eval(10.0, 0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn fourier_bl_matches_cosine_form() {
        let t_total = 7.3;
        let env = Envelope::new(EnvelopeKind::FourierBl, 1.0, t_total).unwrap();
        for &t in &[0.4, 2.2, 3.65, 6.1] {
            let w = 2.0 * PI / t_total;
            let direct = (3.0 * w * t).cos() / 16.0 - 9.0 / 16.0 * (w * t).cos() + 0.5;
            assert!(close(env.eval(t, 0).unwrap(), direct, 1e-13));
        }
    }

    #[test]
    fn sin4_third_derivative_vanishes_at_start() {
        let env = Envelope::new(EnvelopeKind::SinPow { n: 4 }, 1.0, 10.0).unwrap();
        assert!(env.eval(0.0, 3).unwrap().abs() < 1e-14);
    }

    #[test]
    fn hann_quarter_point() {
        let env = Envelope::new(EnvelopeKind::Hann, 0.9, 10.0).unwrap();
        assert!(close(env.eval(2.5, 0).unwrap(), 0.45, 1e-14));
    }

    #[test]
    fn out_of_range_requests_fail() {
        let env = Envelope::new(EnvelopeKind::Hann, 1.0, 10.0).unwrap();
        assert!(matches!(env.eval(10.5, 0), Err(Error::Domain(_))));
        assert!(matches!(env.eval(-0.1, 0), Err(Error::Domain(_))));
        assert!(matches!(env.eval(1.0, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn hann_rotation_angle_is_pi() {
        let t = 10.0;
        let env = Envelope::new(EnvelopeKind::Hann, 2.0 * PI / t, t).unwrap();
        let a = rotation_angle(|x| env.jet::<1>(x).value(), t).unwrap();
        assert!(close(a, PI, 1e-12));
        assert!(close(env.area(), PI, 1e-14));
    }

    #[test]
    fn zero_envelope_has_zero_area() {
        assert_eq!(rotation_angle(|_| 0.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_amplitudes() {
        let t = 10.0;
        let hann = EnvelopeKind::Hann;
        let a = calibrate_amplitude(
            |amp| Ok(Envelope::new(hann.clone(), amp, t)?.area()),
            1.0,
            PI,
        )
        .unwrap();
        assert!(close(a, 2.0 * PI / t, 1e-12));

        let sin3 = EnvelopeKind::SinPow { n: 3 };
        let naive = PI / (sin3.mean() * t);
        let a = calibrate_amplitude(
            |amp| {
                let e = Envelope::new(sin3.clone(), amp, t)?;
                rotation_angle(|x| e.jet::<1>(x).value(), t)
            },
            naive,
            PI,
        )
        .unwrap();
        assert!(close(a, 3.0 * PI * PI / (4.0 * t), 1e-10));
    }

    #[test]
    fn boundary_reports() {
        let hann = Envelope::new(EnvelopeKind::Hann, 1.0, 10.0).unwrap();
        assert!(check_envelope_boundary(&hann, 1, 1e-9).pass());
        let r = check_envelope_boundary(&hann, 2, 1e-9);
        assert_eq!(r.first_failure(), Some(2));
        // d²/dt² sin²(πt/T) at 0 is 2π²/T²
        assert!(close(r.entries[2].at_start, 2.0 * PI * PI / 100.0, 1e-12));
        let bl = Envelope::new(EnvelopeKind::FourierBl, 1.0, 10.0).unwrap();
        assert!(check_envelope_boundary(&bl, 3, 1e-9).pass());
    }

    #[test]
    fn ansatz_edges_vanish_to_third_order() {
        for (n, j) in [(1, 2), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)] {
            let env = Envelope::new(EnvelopeKind::FourierAnsatz { n, j }, 1.0, 9.0).unwrap();
            let r = check_envelope_boundary(&env, 3, 1e-9);
            assert!(r.pass(), "n={n} j={j}: {r:?}");
        }
        let bl = EnvelopeKind::FourierBl.sin_poly();
        let ans = EnvelopeKind::FourierAnsatz { n: 1, j: 3 }.sin_poly();
        for &s in &[0.1, 0.5, 0.9] {
            assert!(close(bl.poly.eval(s), ans.poly.eval(s), 1e-14));
        }
    }

    #[test]
    fn composite_parity_enforced() {
        let mixed = EnvelopeKind::Composite {
            parts: vec![(1.0, EnvelopeKind::Hann), (0.5, EnvelopeKind::SinPow { n: 3 })],
        };
        assert!(mixed.validate().is_err());
        let ok = EnvelopeKind::Composite {
            parts: vec![(0.5, EnvelopeKind::Hann), (0.5, EnvelopeKind::SinPow { n: 4 })],
        };
        let env = Envelope::new(ok, 1.0, 8.0).unwrap();
        assert!(close(env.eval(4.0, 0).unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn record_round_trip() {
        let env = Envelope::new(EnvelopeKind::FourierAnsatz { n: 1, j: 4 }, 0.3, 8.5).unwrap();
        let rec = env.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back: EnvelopeRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(Envelope::from_record(&back).unwrap(), env);
    }
}
