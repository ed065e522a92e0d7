//! Gate fidelity, state-averaged dissipative fidelity and leakage.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::CMat;
use crate::model::LadderParams;
use crate::propagation::{
    propagate_lindblad_batch, propagate_unitary, DensityState, LindbladOptions, PropagationOptions,
};
use crate::synthesis::ControlWaveform;

/// `σˣ` on the qubit levels.
pub fn pauli_x() -> CMat {
    let mut x = CMat::zeros(2);
    x[(0, 1)] = C64::new(1.0, 0.0);
    x[(1, 0)] = C64::new(1.0, 0.0);
    x
}

/// `(Tr[U_Q U_Q†] + |Tr[U_Q U_I†]|²) / 6` with `U_Q` the qubit block of `u`.
pub fn gate_fidelity(u: &CMat, target: &CMat) -> f64 {
    let uq = u.block(2);
    let norm = (uq * uq.adjoint()).trace().re;
    let overlap = (uq * target.adjoint()).trace().norm_sqr();
    (norm + overlap) / 6.0
}

/// Populations outside the qubit levels after the gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leakage {
    /// `|U_{j,0}|²` for `j ≥ 2`.
    pub from0: Vec<f64>,
    /// `|U_{j,1}|²` for `j ≥ 2`.
    pub from1: Vec<f64>,
}

impl Leakage {
    pub fn total_from0(&self) -> f64 {
        self.from0.iter().sum()
    }

    pub fn total_from1(&self) -> f64 {
        self.from1.iter().sum()
    }

    /// Population of level `j` averaged over the two initial states.
    pub fn level_mean(&self, j: usize) -> f64 {
        match (self.from0.get(j - 2), self.from1.get(j - 2)) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            _ => 0.0,
        }
    }
}

pub fn leakage_report(u: &CMat) -> Leakage {
    let m = u.dim();
    Leakage {
        from0: (2..m).map(|j| u[(j, 0)].norm_sqr()).collect(),
        from1: (2..m).map(|j| u[(j, 1)].norm_sqr()).collect(),
    }
}

/// Outcome of simulating one gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    #[serde(rename = "T_ns")]
    pub t_ns: f64,
    pub fidelity: f64,
    pub infidelity: f64,
    pub leakage: Leakage,
}

impl GateResult {
    pub fn from_unitary(t_ns: f64, u: &CMat) -> Self {
        let f = gate_fidelity(u, &pauli_x());
        Self {
            t_ns,
            fidelity: f,
            infidelity: 1.0 - f,
            leakage: leakage_report(u),
        }
    }
}

/// Converged closed-system gate result against `σˣ`.
pub fn simulate(params: &LadderParams, wave: &ControlWaveform) -> Result<GateResult> {
    let prop = propagate_unitary(params, wave, &PropagationOptions::default())?;
    Ok(GateResult::from_unitary(wave.duration, &prop.u))
}

/// Eigenstates of `σˣ`, `σʸ`, `σᶻ` on the qubit levels, embedded in `m`
/// levels.
pub fn bloch_states(m: usize) -> Vec<Vec<C64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let pairs = [
        (C64::new(1.0, 0.0), z),
        (z, C64::new(1.0, 0.0)),
        (C64::new(r, 0.0), C64::new(r, 0.0)),
        (C64::new(r, 0.0), C64::new(-r, 0.0)),
        (C64::new(r, 0.0), C64::new(0.0, r)),
        (C64::new(r, 0.0), C64::new(0.0, -r)),
    ];
    pairs
        .iter()
        .map(|&(a, b)| {
            let mut v = vec![z; m];
            v[0] = a;
            v[1] = b;
            v
        })
        .collect()
}

/// Averaged state fidelity `1/6 Σ Tr[U_I ρ_j U_I† M(ρ_j)]` over the six
/// Bloch states, with `M` the master-equation evolution.
pub fn dissipative_fidelity(
    params: &LadderParams,
    wave: &ControlWaveform,
    target: &CMat,
) -> Result<f64> {
    dissipative_fidelity_with(params, wave, target, &LindbladOptions::default())
}

pub fn dissipative_fidelity_with(
    params: &LadderParams,
    wave: &ControlWaveform,
    target: &CMat,
    opts: &LindbladOptions,
) -> Result<f64> {
    let m = params.levels;
    let states = bloch_states(m);
    let finals: Vec<Result<DensityState>> = states
        .par_iter()
        .map(|psi| {
            let (mut out, _) =
                propagate_lindblad_batch(params, wave, &[DensityState::pure(psi)], opts)?;
            Ok(out.remove(0))
        })
        .collect();
    let mut total = 0.0;
    for (psi, fin) in states.iter().zip(finals) {
        let fin = fin?;
        let ideal: Vec<C64> = (0..m)
            .map(|i| {
                if i < 2 {
                    target[(i, 0)] * psi[0] + target[(i, 1)] * psi[1]
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        // ⟨φ|ρ|φ⟩ with |φ⟩ = U_I|ψ⟩
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                acc += ideal[i].conj() * fin.rho[(i, j)] * ideal[j];
            }
        }
        total += acc.re;
    }
    Ok(total / 6.0)
}
