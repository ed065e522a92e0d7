//! Rotating-frame ladder Hamiltonian.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, MAX_DIM};

/// Canonical anharmonicity `Δ₂ = −2π · 0.225 rad/ns`.
pub const DELTA2_DEFAULT: f64 = -2.0 * PI * 0.225;

/// Physical model of the driven ladder.
///
/// Level `j` (`0 ≤ j < levels`) sits at energy `detuning(j) + j δ(t)` in the
/// frame rotating with the drive; `detunings[j-1]` stores `Δ_j` and
/// `couplings[j-1]` stores `λ_j` for the `(j-1, j)` transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderParams {
    pub levels: usize,
    /// `Δ_1 … Δ_{M-1}` in rad/ns.
    pub detunings: Vec<f64>,
    /// `λ_1 … λ_{M-1}`.
    pub couplings: Vec<f64>,
    /// Relaxation rate `1/T₁` in 1/ns.
    pub gamma: f64,
    /// Dephasing rate `1/T₂*` in 1/ns.
    pub gamma_phi: f64,
}

impl LadderParams {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 3 || self.levels > MAX_DIM {
            return Err(Error::Domain(format!(
                "level count must be in 3..={MAX_DIM}, got {}",
                self.levels
            )));
        }
        if self.detunings.len() != self.levels - 1 || self.couplings.len() != self.levels - 1 {
            return Err(Error::Domain(format!(
                "expected {} detunings and couplings, got {} and {}",
                self.levels - 1,
                self.detunings.len(),
                self.couplings.len()
            )));
        }
        if self.detunings[0] != 0.0 {
            return Err(Error::Domain("Δ₁ must be 0 (resonant qubit drive)".into()));
        }
        if self.couplings[0] != 1.0 {
            return Err(Error::Domain("λ₁ must be 1".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma_phi >= 0.0) {
            return Err(Error::Domain("decay rates must be nonnegative".into()));
        }
        Ok(())
    }

    /// `Δ_j` for level `j`; level 0 is the energy reference.
    pub fn detuning(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.detunings[j - 1]
        }
    }

    /// `λ_j` for the `(j-1, j)` transition.
    pub fn coupling(&self, j: usize) -> f64 {
        self.couplings[j - 1]
    }

    pub fn delta2(&self) -> f64 {
        self.detuning(2)
    }

    /// `Δ₃`, or `None` for a three-level ladder.
    pub fn delta3(&self) -> Option<f64> {
        (self.levels > 3).then(|| self.detuning(3))
    }

    pub fn lambda2(&self) -> f64 {
        self.coupling(2)
    }

    pub fn lambda3(&self) -> Option<f64> {
        (self.levels > 3).then(|| self.coupling(3))
    }

    pub fn with_decoherence(mut self, t1_us: Option<f64>, t2_us: Option<f64>) -> Self {
        self.gamma = t1_us.map(|t| 1.0 / (t * 1e3)).unwrap_or(0.0);
        self.gamma_phi = t2_us.map(|t| 1.0 / (t * 1e3)).unwrap_or(0.0);
        self
    }

    /// Replace `Δ₃` (four or more levels).
    pub fn with_delta3(mut self, delta3: f64) -> Result<Self> {
        if self.levels < 4 {
            return Err(Error::Domain("Δ₃ override needs at least 4 levels".into()));
        }
        self.detunings[2] = delta3;
        Ok(self)
    }

    /// Truncated annihilation operator `a = Σ √j |j−1⟩⟨j|`.
    pub fn annihilation(&self) -> CMat {
        let mut a = CMat::zeros(self.levels);
        for j in 1..self.levels {
            a[(j - 1, j)] = C64::new((j as f64).sqrt(), 0.0);
        }
        a
    }

    pub fn number(&self) -> CMat {
        let mut n = CMat::zeros(self.levels);
        for j in 0..self.levels {
            n[(j, j)] = C64::new(j as f64, 0.0);
        }
        n
    }
}

/// Duffing ladder: `Δ_j = Δ₂ j(j−1)/2`, `λ_j = √j`, no decoherence.
pub fn duffing_ladder(delta2: f64, levels: usize) -> Result<LadderParams> {
    if levels < 3 {
        return Err(Error::Domain(format!(
            "leakage modeling needs at least 3 levels, got {levels}"
        )));
    }
    if levels > MAX_DIM {
        return Err(Error::Domain(format!("at most {MAX_DIM} levels supported")));
    }
    let p = LadderParams {
        levels,
        detunings: (1..levels)
            .map(|j| delta2 * (j * (j - 1)) as f64 / 2.0)
            .collect(),
        couplings: (1..levels).map(|j| (j as f64).sqrt()).collect(),
        gamma: 0.0,
        gamma_phi: 0.0,
    };
    p.validate()?;
    Ok(p)
}

/// Drive values at one instant: in-phase, quadrature and detuning (rad/ns).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriveSample {
    pub x: f64,
    pub y: f64,
    pub delta: f64,
}

/// `H = Σ_j [Δ_j + j δ] |j⟩⟨j| + Σ_j λ_j [Ω_x/2 σˣ_{j−1,j} + Ω_y/2 σʸ_{j−1,j}]`
/// with `σʸ_{j−1,j} = −i|j−1⟩⟨j| + i|j⟩⟨j−1|`, so that `Ω_y = −Ω̇_x/Δ₂`
/// cancels the first-order `|1⟩ ↔ |2⟩` coupling.
pub fn hamiltonian(params: &LadderParams, drive: DriveSample) -> CMat {
    let m = params.levels;
    let mut h = CMat::zeros(m);
    for j in 0..m {
        h[(j, j)] = C64::new(params.detuning(j) + j as f64 * drive.delta, 0.0);
    }
    for j in 1..m {
        let lam = params.coupling(j);
        let z = C64::new(0.5 * lam * drive.x, -0.5 * lam * drive.y);
        h[(j - 1, j)] = z;
        h[(j, j - 1)] = z.conj();
    }
    h
}

/// Ladder description with explicit units, as read from config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LadderRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta2_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta2_rad_per_ns: Option<f64>,
    pub levels: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta3_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t1_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t2_us: Option<f64>,
}

impl LadderRecord {
    pub fn to_params(&self) -> Result<LadderParams> {
        let delta2 = match (self.delta2_ghz, self.delta2_rad_per_ns) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either delta2_ghz or delta2_rad_per_ns, not both".into(),
                ))
            }
            (Some(g), None) => 2.0 * PI * g,
            (None, Some(r)) => r,
            (None, None) => DELTA2_DEFAULT,
        };
        let mut p = duffing_ladder(delta2, self.levels)?;
        if let Some(d3) = self.delta3_ghz {
            p = p.with_delta3(2.0 * PI * d3)?;
        }
        Ok(p.with_decoherence(self.t1_us, self.t2_us))
    }
}
