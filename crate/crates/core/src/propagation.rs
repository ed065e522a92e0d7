//! Time-ordered propagators for the closed system and the Lindblad master
//! equation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_unitary, CMat};
use crate::model::{hamiltonian, LadderParams};
use crate::synthesis::ControlWaveform;

/// Largest step count tried before giving up.
pub const MAX_STEPS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// One exponential per step with `H` at the step midpoint (2nd order).
    Midpoint,
    /// Two exponentials per step built from `H` at the Gauss–Legendre nodes
    /// (commutator-free, 4th order).
    #[default]
    Cf4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub scheme: Scheme,
    /// First step count tried; doubled until converged.
    pub initial_steps: usize,
    /// Allowed change of the projected fidelity between the last two
    /// resolutions.
    pub fidelity_tol: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Cf4,
            initial_steps: 64,
            fidelity_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub u: CMat,
    pub steps: usize,
    /// Change of the projected fidelity between the last two resolutions.
    pub fidelity_change: f64,
    /// Largest element change between the last two resolutions.
    pub error_estimate: f64,
}

const CF4_SQRT3_6: f64 = 0.288_675_134_594_812_9; // √3/6
const CF4_A1: f64 = (3.0 - 2.0 * 1.732_050_807_568_877_2) / 12.0;
const CF4_A2: f64 = (3.0 + 2.0 * 1.732_050_807_568_877_2) / 12.0;

fn h_at(params: &LadderParams, wave: &ControlWaveform, t: f64) -> CMat {
    hamiltonian(params, wave.sample(t))
}

/// One step of length `h` starting at `t`.
fn step(params: &LadderParams, wave: &ControlWaveform, t: f64, h: f64, scheme: Scheme) -> CMat {
    match scheme {
        Scheme::Midpoint => expm_unitary(&h_at(params, wave, t + 0.5 * h), h),
        Scheme::Cf4 => {
            let h1 = h_at(params, wave, t + (0.5 - CF4_SQRT3_6) * h);
            let h2 = h_at(params, wave, t + (0.5 + CF4_SQRT3_6) * h);
            let first = expm_unitary(&(h1.scale_re(CF4_A2) + h2.scale_re(CF4_A1)), h);
            let second = expm_unitary(&(h1.scale_re(CF4_A1) + h2.scale_re(CF4_A2)), h);
            second * first
        }
    }
}

/// Propagator over `[0, T]` with a fixed number of equal steps.
pub fn propagate_fixed(
    params: &LadderParams,
    wave: &ControlWaveform,
    steps: usize,
    scheme: Scheme,
) -> CMat {
    let steps = steps.max(1);
    let h = wave.duration / steps as f64;
    let mut u = CMat::identity(params.levels);
    for k in 0..steps {
        u = step(params, wave, k as f64 * h, h, scheme) * u;
    }
    u
}

/// Propagator with step doubling until the projected fidelity against `σˣ`
/// changes by at most `opts.fidelity_tol`.
pub fn propagate_unitary(
    params: &LadderParams,
    wave: &ControlWaveform,
    opts: &PropagationOptions,
) -> Result<Propagator> {
    let target = crate::metrics::pauli_x();
    let mut steps = opts.initial_steps.max(1);
    let mut prev = propagate_fixed(params, wave, steps, opts.scheme);
    let mut prev_f = crate::metrics::gate_fidelity(&prev, &target);
    loop {
        let next_steps = steps * 2;
        if next_steps > MAX_STEPS {
            return Err(Error::Numerical(format!(
                "propagator did not converge to fidelity change {:.1e} within {MAX_STEPS} steps",
                opts.fidelity_tol
            )));
        }
        let u = propagate_fixed(params, wave, next_steps, opts.scheme);
        let f = crate::metrics::gate_fidelity(&u, &target);
        let change = (f - prev_f).abs();
        let err = (u - prev).max_abs();
        if change <= opts.fidelity_tol {
            let defect = u.unitarity_defect();
            if defect > 1e-10 {
                return Err(Error::Numerical(format!(
                    "propagator unitarity defect {defect:.3e} exceeds 1e-10"
                )));
            }
            return Ok(Propagator {
                u,
                steps: next_steps,
                fidelity_change: change,
                error_estimate: err,
            });
        }
        steps = next_steps;
        prev = u;
        prev_f = f;
    }
}

/// Level populations of `U(t)|ψ₀⟩` every `stride` steps.
pub fn trajectory(
    params: &LadderParams,
    wave: &ControlWaveform,
    psi0: &[C64],
    steps: usize,
    stride: usize,
    scheme: Scheme,
) -> Vec<(f64, Vec<f64>)> {
    let steps = steps.max(1);
    let stride = stride.max(1);
    let h = wave.duration / steps as f64;
    let mut psi = psi0.to_vec();
    let pops = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>();
    let mut out = vec![(0.0, pops(&psi))];
    for k in 0..steps {
        let u = step(params, wave, k as f64 * h, h, scheme);
        let mut next = vec![C64::new(0.0, 0.0); psi.len()];
        for (i, n) in next.iter_mut().enumerate() {
            for (j, p) in psi.iter().enumerate() {
                *n += u[(i, j)] * p;
            }
        }
        psi = next;
        if (k + 1) % stride == 0 || k + 1 == steps {
            out.push(((k + 1) as f64 * h, pops(&psi)));
        }
    }
    out
}

pub fn trajectory_csv(rows: &[(f64, Vec<f64>)]) -> String {
    let levels = rows.first().map(|r| r.1.len()).unwrap_or(0);
    let mut out = String::from("t_ns");
    for j in 0..levels {
        out.push_str(&format!(",p{j}"));
    }
    out.push('\n');
    for (t, p) in rows {
        out.push_str(&format!("{t:.12e}"));
        for v in p {
            out.push_str(&format!(",{v:.15e}"));
        }
        out.push('\n');
    }
    out
}

/// A density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub rho: CMat,
}

impl DensityState {
    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(psi: &[C64]) -> Self {
        let n = psi.len();
        Self {
            rho: CMat::from_fn(n, |i, j| psi[i] * psi[j].conj()),
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.rho - self.rho.adjoint()).max_abs()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.rho + self.rho.adjoint()).scale_re(0.5);
        let eig = nalgebra::SymmetricEigen::new(herm.to_nalgebra());
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let h = self.hermiticity_defect();
        let tr = (self.trace() - 1.0).abs();
        let ev = self.min_eigenvalue();
        if h > tol || tr > tol || ev < -tol {
            return Err(Error::Numerical(format!(
                "invalid density matrix: hermiticity {h:.2e}, trace drift {tr:.2e}, min eigenvalue {ev:.2e}"
            )));
        }
        Ok(())
    }
}

struct Lindbladian {
    a: CMat,
    ad: CMat,
    ada: CMat,
    n: CMat,
    n2: CMat,
    gamma: f64,
    gamma_phi: f64,
}

impl Lindbladian {
    fn new(params: &LadderParams) -> Self {
        let a = params.annihilation();
        let ad = a.adjoint();
        let n = params.number();
        Self {
            ada: ad * a,
            n2: n * n,
            a,
            ad,
            n,
            gamma: params.gamma,
            gamma_phi: params.gamma_phi,
        }
    }

    fn apply(&self, h: &CMat, rho: &CMat) -> CMat {
        let hr = *h * *rho;
        let rh = *rho * *h;
        let mut out = (hr - rh).scale(C64::new(0.0, -1.0));
        if self.gamma > 0.0 {
            let jump = self.a * *rho * self.ad;
            let anti = self.ada * *rho + *rho * self.ada;
            out = out + (jump - anti.scale_re(0.5)).scale_re(self.gamma);
        }
        if self.gamma_phi > 0.0 {
            let jump = self.n * *rho * self.n;
            let anti = self.n2 * *rho + *rho * self.n2;
            out = out + (jump - anti.scale_re(0.5)).scale_re(self.gamma_phi);
        }
        out
    }
}

/// Fixed-step RK4 integration of a batch of initial density matrices.
pub fn propagate_lindblad_fixed(
    params: &LadderParams,
    wave: &ControlWaveform,
    rho0: &[CMat],
    steps: usize,
) -> Vec<CMat> {
    let l = Lindbladian::new(params);
    let steps = steps.max(1);
    let h = wave.duration / steps as f64;
    let mut rhos = rho0.to_vec();
    for k in 0..steps {
        let t = k as f64 * h;
        let h0 = h_at(params, wave, t);
        let hm = h_at(params, wave, t + 0.5 * h);
        let h1 = h_at(params, wave, t + h);
        for rho in rhos.iter_mut() {
            let k1 = l.apply(&h0, rho);
            let k2 = l.apply(&hm, &(*rho + k1.scale_re(0.5 * h)));
            let k3 = l.apply(&hm, &(*rho + k2.scale_re(0.5 * h)));
            let k4 = l.apply(&h1, &(*rho + k3.scale_re(h)));
            *rho = *rho + (k1 + k2.scale_re(2.0) + k3.scale_re(2.0) + k4).scale_re(h / 6.0);
        }
    }
    rhos
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladOptions {
    pub initial_steps: usize,
    /// Allowed largest element change between the last two resolutions.
    pub tol: f64,
    /// Allowed `|Tr ρ − 1|`.
    pub trace_tol: f64,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self {
            initial_steps: 0,
            tol: 1e-10,
            trace_tol: 1e-9,
        }
    }
}

/// Step count giving `h ‖H‖ ≈ 0.05` for the undriven ladder.
fn default_lindblad_steps(params: &LadderParams, duration: f64) -> usize {
    let scale = params
        .detunings
        .iter()
        .fold(1.0f64, |m, d| m.max(d.abs()));
    ((duration * scale / 0.05).ceil() as usize).max(64)
}

/// Integrate the master equation for each initial state with step halving
/// until successive resolutions agree to `opts.tol`.
pub fn propagate_lindblad_batch(
    params: &LadderParams,
    wave: &ControlWaveform,
    rho0: &[DensityState],
    opts: &LindbladOptions,
) -> Result<(Vec<DensityState>, usize)> {
    let init: Vec<CMat> = rho0.iter().map(|d| d.rho).collect();
    let mut steps = if opts.initial_steps == 0 {
        default_lindblad_steps(params, wave.duration)
    } else {
        opts.initial_steps
    };
    let mut prev = propagate_lindblad_fixed(params, wave, &init, steps);
    loop {
        steps *= 2;
        if steps > MAX_STEPS {
            return Err(Error::Numerical(format!(
                "master equation did not converge to {:.1e} within {MAX_STEPS} steps",
                opts.tol
            )));
        }
        let next = propagate_lindblad_fixed(params, wave, &init, steps);
        let diff = next
            .iter()
            .zip(&prev)
            .map(|(a, b)| (*a - *b).max_abs())
            .fold(0.0, f64::max);
        if diff <= opts.tol {
            let out: Vec<DensityState> = next.into_iter().map(|rho| DensityState { rho }).collect();
            for d in &out {
                let drift = (d.trace() - 1.0).abs();
                if drift > opts.trace_tol {
                    return Err(Error::Numerical(format!(
                        "trace drift {drift:.3e} exceeds {:.1e}",
                        opts.trace_tol
                    )));
                }
            }
            return Ok((out, steps));
        }
        prev = next;
    }
}

/// Single-state master-equation propagation.
pub fn propagate_lindblad(
    params: &LadderParams,
    wave: &ControlWaveform,
    rho0: &DensityState,
) -> Result<DensityState> {
    let (mut out, _) =
        propagate_lindblad_batch(params, wave, std::slice::from_ref(rho0), &LindbladOptions::default())?;
    Ok(out.remove(0))
}
