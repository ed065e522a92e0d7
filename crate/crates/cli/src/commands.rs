//! Subcommand bodies. Each returns the payload text; `main` adds the header.

use dragkit::analytics::{self, PredictOptions};
use dragkit::calibration::{
    self, ansatz_csv, ansatz_scan, optimize_prefactors, predicted_prefactors, sweep_csv,
    AnsatzOptions, Dissipation, NelderMeadOptions, PrefactorMode, SweepConfig,
};
use dragkit::envelopes::EnvelopeKind;
use dragkit::metrics::{dissipative_fidelity, pauli_x, simulate, GateResult};
use dragkit::synthesis::{
    synthesize, tmin_numeric, tmin_r1d_alpha, tmin_r2d, ControlWaveform, Family, PrefactorSet, Recipe,
};
use dragkit::{Error, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Output of one subcommand.
pub enum Payload {
    Csv(String),
    Json(serde_json::Value),
}

fn json<T: Serialize>(v: &T) -> Result<Payload> {
    serde_json::to_value(v)
        .map(Payload::Json)
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))
}

/// Recipe for the configured family, gate time and prefactor mode.
fn recipe(cfg: &RunConfig, duration: f64) -> Result<Recipe> {
    let params = &cfg.params;
    let mut r = match cfg.mode {
        PrefactorMode::Analytic => Recipe::analytic(cfg.family, duration),
        PrefactorMode::Predicted | PrefactorMode::Optimized => {
            let mut probe = Recipe::calibrated(cfg.family, duration, PrefactorSet::default());
            if let Some(b) = &cfg.base {
                probe.base = b.clone();
            }
            // surface an infeasible gate time before calibrating
            synthesize(params, &probe)?;
            let p = if cfg.mode == PrefactorMode::Predicted {
                predicted_prefactors(params, cfg.family, duration)?
            } else {
                optimize_prefactors(params, cfg.family, duration, None, &NelderMeadOptions::default())?
                    .final_prefactors
            };
            Recipe::calibrated(cfg.family, duration, p)
        }
    };
    if let Some(b) = &cfg.base {
        r.base = b.clone();
    }
    r.theta = cfg.theta;
    r.prefactors = cfg.override_prefactors(r.prefactors);
    Ok(r)
}

fn waveform(cfg: &RunConfig) -> Result<ControlWaveform> {
    let t = cfg.duration()?;
    synthesize(&cfg.params, &recipe(cfg, t)?)
}

pub fn pulse(cfg: &RunConfig) -> Result<Payload> {
    Ok(Payload::Csv(waveform(cfg)?.to_csv(cfg.samples)))
}

#[derive(Serialize)]
struct DissipativeResult {
    t1_us: f64,
    t2_us: f64,
    fidelity: f64,
    infidelity: f64,
}

#[derive(Serialize)]
struct SimulateOutput {
    #[serde(flatten)]
    gate: GateResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    dissipative: Option<DissipativeResult>,
}

pub fn simulate_cmd(cfg: &RunConfig) -> Result<Payload> {
    let w = waveform(cfg)?;
    let gate = simulate(&cfg.params, &w)?;
    let dissipative = if cfg.dissipation {
        let (t1_us, t2_us) = cfg.decoherence()?;
        let noisy = cfg.params.clone().with_decoherence(Some(t1_us), Some(t2_us));
        let f = dissipative_fidelity(&noisy, &w, &pauli_x())?;
        Some(DissipativeResult {
            t1_us,
            t2_us,
            fidelity: f,
            infidelity: 1.0 - f,
        })
    } else {
        None
    };
    json(&SimulateOutput { gate, dissipative })
}

pub fn predict(cfg: &RunConfig) -> Result<Payload> {
    let t = cfg.duration()?;
    let opts = PredictOptions {
        delta_c: cfg.delta_c_method,
        beta: cfg.beta_method,
    };
    let pred = match (cfg.family, &cfg.base) {
        (Family::Hann | Family::Drag, None) => analytics::predict(&cfg.params, t, cfg.alpha, opts)?,
        _ => {
            let mut r = Recipe::calibrated(cfg.family, t, PrefactorSet::default());
            if let Some(b) = &cfg.base {
                r.base = b.clone();
            }
            let w = synthesize(&cfg.params, &r)?;
            analytics::predict_for_pulse(&cfg.params, &w.x, cfg.alpha, opts)?
        }
    };
    json(&pred)
}

pub fn calibrate(cfg: &RunConfig) -> Result<Payload> {
    let t = cfg.duration()?;
    let mut probe = Recipe::calibrated(cfg.family, t, PrefactorSet::default());
    if let Some(b) = &cfg.base {
        probe.base = b.clone();
    }
    synthesize(&cfg.params, &probe)?;
    let init = (cfg.beta.is_some()
        || cfg.alpha.is_some()
        || cfg.alpha02.is_some()
        || cfg.alpha13.is_some()
        || cfg.delta_c.is_some())
    .then(|| {
        let start = predicted_prefactors(&cfg.params, cfg.family, t).unwrap_or_default();
        cfg.override_prefactors(start)
    });
    let run = optimize_prefactors(&cfg.params, cfg.family, t, init, &NelderMeadOptions::default())?;
    json(&run)
}

pub fn sweep(cfg: &RunConfig) -> Result<Payload> {
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| Error::Config("grid: a gate-time grid is required".into()))?;
    let dissipation = if cfg.dissipation {
        let (t1_us, t2_us) = cfg.decoherence()?;
        Dissipation::On { t1_us, t2_us }
    } else {
        Dissipation::Off
    };
    let sc = SweepConfig {
        family: cfg.family,
        mode: cfg.mode,
        dissipation,
        nelder_mead: NelderMeadOptions::default(),
    };
    let rows = calibration::sweep(&cfg.params, grid, &sc)?;
    Ok(Payload::Csv(sweep_csv(&rows)))
}

pub fn ansatz(cfg: &RunConfig) -> Result<Payload> {
    let opts = AnsatzOptions {
        target: cfg.target,
        t_max: cfg.t_max,
        ..AnsatzOptions::default()
    };
    let rows = ansatz_scan(&cfg.params, &cfg.pairs, &opts)?;
    Ok(Payload::Csv(ansatz_csv(&rows)))
}

#[derive(Serialize)]
struct TminOutput {
    family: Family,
    base: String,
    /// Closed form for an `sinⁿ` trial pulse, when it applies.
    closed_form_ns: Option<f64>,
    /// Bisection on radicand feasibility.
    numeric_ns: f64,
}

pub fn tmin(cfg: &RunConfig) -> Result<Payload> {
    let base = match (&cfg.base, cfg.n) {
        (Some(b), _) => b.clone(),
        (None, Some(n)) => EnvelopeKind::SinPow { n },
        (None, None) => cfg.family.default_base(),
    };
    let power = match base {
        EnvelopeKind::SinPow { n } => Some(n),
        EnvelopeKind::Hann => Some(2),
        _ => None,
    };
    let p = cfg.override_prefactors(PrefactorSet::default());
    let d2 = cfg.params.delta2();
    let closed_form_ns = match (cfg.family, power) {
        (Family::R1d, Some(n)) => Some(tmin_r1d_alpha(n, d2, p.alpha02)?),
        (Family::R2d, Some(n)) => {
            let d3 = cfg
                .params
                .delta3()
                .ok_or_else(|| Error::Config("levels: r2d needs at least 4 levels".into()))?;
            tmin_r2d(n, d2, d3, p.alpha02, p.alpha13)?
        }
        _ => None,
    };
    let mut r = Recipe::analytic(cfg.family, 10.0);
    r.base = base.clone();
    r.prefactors = p;
    let numeric_ns = tmin_numeric(&cfg.params, &r)?;
    json(&TminOutput {
        family: cfg.family,
        base: base.label(),
        closed_form_ns,
        numeric_ns,
    })
}
