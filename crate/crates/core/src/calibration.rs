//! Prefactor calibration by Nelder–Mead, gate-time sweeps and the Fourier
//! ansatz scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, PredictOptions};
use crate::envelopes::EnvelopeKind;
use crate::error::{Error, Result};
use crate::metrics::{dissipative_fidelity, gate_fidelity, pauli_x, simulate};
use crate::model::LadderParams;
use crate::propagation::{propagate_fixed, propagate_unitary, PropagationOptions, Scheme};
use crate::synthesis::{synthesize, synthesize_quiet, tmin_numeric, Family, PrefactorSet, Recipe};

/// Nelder–Mead stopping rules and restart policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    /// Stop when `max f − min f` over the simplex is at most this.
    pub spread_tol: f64,
    pub max_evals: usize,
    /// Initial simplex edge relative to each coordinate.
    pub initial_step: f64,
    /// Edge used for coordinates that are (close to) zero.
    pub zero_step: f64,
    /// Fresh simplices built around the best point after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            spread_tol: 1e-12,
            max_evals: 2000,
            initial_step: 0.02,
            zero_step: 2e-3,
            restarts: 1,
        }
    }
}

/// Outcome of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
    /// `(evaluation index, point, value)` each time the best value improved.
    pub trace: Vec<(usize, Vec<f64>, f64)>,
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction ½,
/// shrink ½). Non-finite objective values are treated as `+∞`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evals = 0usize;
    let mut best = Minimum {
        x: x0.to_vec(),
        f: f64::INFINITY,
        evals: 0,
        converged: false,
        trace: Vec::new(),
    };
    let mut eval = |x: &[f64], best: &mut Minimum, evals: &mut usize| {
        let v = f(x);
        let v = if v.is_finite() { v } else { f64::INFINITY };
        *evals += 1;
        if v < best.f {
            best.f = v;
            best.x = x.to_vec();
            best.trace.push((*evals, x.to_vec(), v));
        }
        v
    };
    let mut start = x0.to_vec();
    for _round in 0..=opts.restarts {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let v0 = eval(&start, &mut best, &mut evals);
        simplex.push((start.clone(), v0));
        for i in 0..dim {
            let mut p = start.clone();
            let step = if p[i].abs() > opts.zero_step / opts.initial_step {
                opts.initial_step * p[i]
            } else {
                opts.zero_step
            };
            p[i] += step;
            let v = eval(&p, &mut best, &mut evals);
            simplex.push((p, v));
        }
        let mut converged = false;
        while evals < opts.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (lo, hi) = (simplex[0].1, simplex[dim].1);
            if lo.is_finite() && hi - lo <= opts.spread_tol {
                converged = true;
                break;
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|k| simplex[..dim].iter().map(|p| p.0[k]).sum::<f64>() / dim as f64)
                .collect();
            let along = |c: f64| -> Vec<f64> {
                (0..dim)
                    .map(|k| centroid[k] + c * (simplex[dim].0[k] - centroid[k]))
                    .collect()
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut best, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut best, &mut evals);
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
                continue;
            }
            if fr < simplex[dim].1 {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut best, &mut evals);
                if fc <= fr {
                    simplex[dim] = (xc, fc);
                    continue;
                }
            } else {
                let xc = along(0.5);
                let fc = eval(&xc, &mut best, &mut evals);
                if fc < simplex[dim].1 {
                    simplex[dim] = (xc, fc);
                    continue;
                }
            }
            let x_lo = simplex[0].0.clone();
            for p in simplex.iter_mut().skip(1) {
                let xs: Vec<f64> = (0..dim).map(|k| x_lo[k] + 0.5 * (p.0[k] - x_lo[k])).collect();
                let v = eval(&xs, &mut best, &mut evals);
                *p = (xs, v);
            }
        }
        best.converged = converged;
        start = best.x.clone();
        if evals >= opts.max_evals {
            break;
        }
    }
    best.evals = evals;
    best
}

/// One calibratable coordinate of a [`PrefactorSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    Beta,
    Alpha12,
    Alpha02,
    Alpha13,
    DeltaC,
}

impl Knob {
    fn get(self, p: &PrefactorSet) -> f64 {
        match self {
            Self::Beta => p.beta,
            Self::Alpha12 => p.alpha12,
            Self::Alpha02 => p.alpha02,
            Self::Alpha13 => p.alpha13,
            Self::DeltaC => p.delta_c.unwrap_or(0.0),
        }
    }

    fn set(self, p: &mut PrefactorSet, v: f64) {
        match self {
            Self::Beta => p.beta = v,
            Self::Alpha12 => p.alpha12 = v,
            Self::Alpha02 => p.alpha02 = v,
            Self::Alpha13 => p.alpha13 = v,
            Self::DeltaC => p.delta_c = Some(v),
        }
    }
}

/// Free coordinates of each family: `[β, α, δ_c]` for DRAG,
/// `[β, α12, α02, δ_c]` for R1D and `[β, α12, α02, α13, δ_c]` for R2D.
pub fn family_knobs(family: Family) -> Result<&'static [Knob]> {
    use Knob::*;
    match family {
        Family::Drag => Ok(&[Beta, Alpha12, DeltaC]),
        Family::R1d => Ok(&[Beta, Alpha12, Alpha02, DeltaC]),
        Family::R2d => Ok(&[Beta, Alpha12, Alpha02, Alpha13, DeltaC]),
        Family::Hann => Err(Error::Config("the Hann family has no prefactors to calibrate".into())),
    }
}

pub fn pack(knobs: &[Knob], p: &PrefactorSet) -> Vec<f64> {
    knobs.iter().map(|k| k.get(p)).collect()
}

/// Overwrite the `knobs` of `base` with `v`; the detuning always becomes
/// constant.
pub fn unpack(knobs: &[Knob], base: &PrefactorSet, v: &[f64]) -> PrefactorSet {
    let mut p = *base;
    p.delta_c = Some(p.delta_c.unwrap_or(0.0));
    for (k, x) in knobs.iter().zip(v) {
        k.set(&mut p, *x);
    }
    p
}

/// Prefactor-objective over a fixed time grid.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub params: &'a LadderParams,
    pub family: Family,
    pub duration: f64,
    pub steps: usize,
    /// `|δ_c|` beyond this is rejected.
    pub delta_c_bound: f64,
}

impl Objective<'_> {
    pub fn recipe(&self, p: PrefactorSet) -> Recipe {
        Recipe::calibrated(self.family, self.duration, p)
    }

    /// Unitary infidelity against `σˣ`, or `+∞` for infeasible or rejected
    /// points.
    pub fn eval(&self, p: PrefactorSet) -> f64 {
        if !(p.beta > 0.0) || p.delta_c.is_some_and(|d| d.abs() > self.delta_c_bound) {
            return f64::INFINITY;
        }
        match synthesize_quiet(self.params, &self.recipe(p)) {
            Ok(w) => {
                let u = propagate_fixed(self.params, &w, self.steps, Scheme::Cf4);
                1.0 - gate_fidelity(&u, &pauli_x())
            }
            Err(_) => f64::INFINITY,
        }
    }
}

/// Result of calibrating one gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    pub family: Family,
    #[serde(rename = "T_ns")]
    pub t_ns: f64,
    pub initial: PrefactorSet,
    pub initial_infidelity: f64,
    #[serde(rename = "final")]
    pub final_prefactors: PrefactorSet,
    /// Converged-propagator infidelity at the final prefactors.
    pub final_infidelity: f64,
    pub converged: bool,
    pub evaluations: usize,
    /// `(evaluation, infidelity)` at every improvement of the running best.
    pub trace: Vec<(usize, f64)>,
}

/// Initial prefactors from the first-order predictions, with `α02 = α13 = 1`.
pub fn predicted_prefactors(
    params: &LadderParams,
    family: Family,
    duration: f64,
) -> Result<PrefactorSet> {
    let pred = match family {
        Family::Drag | Family::Hann => analytics::predict(params, duration, None, PredictOptions::default())?,
        _ => {
            let w = synthesize(params, &Recipe::calibrated(family, duration, PrefactorSet::default()))?;
            analytics::predict_for_pulse(params, &w.x, None, PredictOptions::default())?
        }
    };
    Ok(PrefactorSet {
        beta: pred.beta,
        alpha12: pred.alpha,
        alpha02: 1.0,
        alpha13: 1.0,
        delta_c: Some(pred.delta_c_rad_per_ns),
    })
}

fn fixed_steps(params: &LadderParams, family: Family, duration: f64, p: PrefactorSet) -> Result<usize> {
    let w = synthesize(params, &Recipe::calibrated(family, duration, p))?;
    let prop = propagate_unitary(params, &w, &PropagationOptions::default())?;
    Ok(prop.steps)
}

/// Minimize the unitary infidelity over the family's prefactors.
///
/// Without `init` the search starts from the predicted prefactors or from
/// `β = α = 1` with the closed-form `δ_c`, whichever is better. The
/// `δ_c` search range is ±20 times its predicted magnitude.
pub fn optimize_prefactors(
    params: &LadderParams,
    family: Family,
    duration: f64,
    init: Option<PrefactorSet>,
    opts: &NelderMeadOptions,
) -> Result<CalibrationRun> {
    optimize_knobs(params, family, duration, init, family_knobs(family)?, opts)
}

/// As [`optimize_prefactors`] with only `knobs` free; the other prefactors
/// keep their starting values.
pub fn optimize_knobs(
    params: &LadderParams,
    family: Family,
    duration: f64,
    init: Option<PrefactorSet>,
    knobs: &[Knob],
    opts: &NelderMeadOptions,
) -> Result<CalibrationRun> {
    family_knobs(family)?;
    let predicted = predicted_prefactors(params, family, duration).ok();
    let closed = {
        let x = analytics::hann_pi(duration)?;
        analytics::predict_delta_c(&x, 1.0, params.lambda2(), params.delta2(), analytics::DeltaCMode::ClosedForm)?
    };
    let plain = PrefactorSet {
        delta_c: Some(closed),
        ..PrefactorSet::default()
    };
    let scale = predicted
        .and_then(|p| p.delta_c)
        .unwrap_or(closed)
        .abs()
        .max(closed.abs());
    let delta_c_bound = (20.0 * scale).max(0.05);
    let steps_for = |p: PrefactorSet| fixed_steps(params, family, duration, p);

    let mut candidates: Vec<PrefactorSet> = Vec::new();
    match init {
        Some(p) => candidates.push(p),
        None => {
            if let Some(p) = predicted {
                candidates.push(p);
            }
            candidates.push(plain);
        }
    }
    let steps = candidates
        .iter()
        .find_map(|p| steps_for(*p).ok())
        .ok_or_else(|| {
            Error::Calibration(format!(
                "no feasible starting point for {} at T = {duration} ns",
                family.label()
            ))
        })?;
    let obj = Objective {
        params,
        family,
        duration,
        steps: steps * 2,
        delta_c_bound,
    };
    let (start, f0) = candidates
        .iter()
        .map(|p| (*p, obj.eval(*p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one candidate");
    if !f0.is_finite() {
        return Err(Error::Calibration(format!(
            "all starting points infeasible for {} at T = {duration} ns",
            family.label()
        )));
    }
    let x0 = pack(knobs, &start);
    let m = nelder_mead(|v| obj.eval(unpack(knobs, &start, v)), &x0, opts);
    let fin = unpack(knobs, &start, &m.x);
    let w = synthesize(params, &obj.recipe(fin))?;
    let final_infidelity = simulate(params, &w)?.infidelity;
    Ok(CalibrationRun {
        family,
        t_ns: duration,
        initial: start,
        initial_infidelity: f0,
        final_prefactors: fin,
        final_infidelity,
        converged: m.converged,
        evaluations: m.evals,
        trace: m.trace.iter().map(|(i, _, f)| (*i, *f)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PrefactorMode {
    /// Analytic pulse: time-dependent Stark detuning and superlinear
    /// corrections, no prefactors.
    #[default]
    Analytic,
    /// First-order predictions for `β`, `α`, `δ_c`.
    Predicted,
    /// Full Nelder–Mead calibration.
    Optimized,
}

/// Decoherence used when scoring a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Dissipation {
    #[default]
    Off,
    /// `(T₁, T₂*)` in μs.
    On { t1_us: f64, t2_us: f64 },
}

/// One row of a gate-time sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T_ns")]
    pub t_ns: f64,
    /// `NaN` when the point failed.
    pub infidelity: f64,
    pub prefactors: PrefactorSet,
    /// Why the point has no infidelity, e.g. an infeasible gate time.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub family: Family,
    pub mode: PrefactorMode,
    pub dissipation: Dissipation,
    pub nelder_mead: NelderMeadOptions,
}

fn score(params: &LadderParams, recipe: &Recipe, dissipation: Dissipation) -> Result<f64> {
    let w = synthesize(params, recipe)?;
    match dissipation {
        Dissipation::Off => Ok(simulate(params, &w)?.infidelity),
        Dissipation::On { t1_us, t2_us } => {
            let noisy = params.clone().with_decoherence(Some(t1_us), Some(t2_us));
            Ok(1.0 - dissipative_fidelity(&noisy, &w, &pauli_x())?)
        }
    }
}

fn failed(t: f64, p: PrefactorSet, e: &Error) -> SweepRow {
    log::warn!("T = {t} ns: {e}");
    SweepRow {
        t_ns: t,
        infidelity: f64::NAN,
        prefactors: p,
        error: Some(e.to_string()),
    }
}

/// Infidelity over an increasing grid of gate times.
///
/// Analytic and predicted points are independent and run in parallel;
/// optimized points run in order, each warm-started from the previous
/// optimum. Failed points are kept with a `NaN` infidelity.
pub fn sweep(params: &LadderParams, grid: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("empty gate-time grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("gate-time grid must be strictly increasing".into()));
    }
    match cfg.mode {
        PrefactorMode::Analytic | PrefactorMode::Predicted => Ok(grid
            .par_iter()
            .map(|&t| {
                let (recipe, p) = match cfg.mode {
                    PrefactorMode::Analytic => (Recipe::analytic(cfg.family, t), PrefactorSet::default()),
                    _ => match predicted_prefactors(params, cfg.family, t) {
                        Ok(p) => (Recipe::calibrated(cfg.family, t, p), p),
                        Err(e) => return failed(t, PrefactorSet::default(), &e),
                    },
                };
                match score(params, &recipe, cfg.dissipation) {
                    Ok(inf) => SweepRow {
                        t_ns: t,
                        infidelity: inf,
                        prefactors: p,
                        error: None,
                    },
                    Err(e) => failed(t, p, &e),
                }
            })
            .collect()),
        PrefactorMode::Optimized => {
            let mut rows = Vec::with_capacity(grid.len());
            let mut warm: Option<PrefactorSet> = None;
            for &t in grid {
                let run = optimize_prefactors(params, cfg.family, t, None, &cfg.nelder_mead);
                // also try the previous optimum and keep the better run
                let warm_run = warm.and_then(|w| {
                    optimize_prefactors(params, cfg.family, t, Some(w), &cfg.nelder_mead).ok()
                });
                let best = match (run, warm_run) {
                    (Ok(a), Some(b)) => Ok(if b.final_infidelity < a.final_infidelity { b } else { a }),
                    (Ok(a), None) => Ok(a),
                    (Err(_), Some(b)) => Ok(b),
                    (Err(e), None) => Err(e),
                };
                match best {
                    Ok(run) => {
                        warm = Some(run.final_prefactors);
                        let p = run.final_prefactors;
                        let inf = match cfg.dissipation {
                            Dissipation::Off => Ok(run.final_infidelity),
                            d => score(params, &Recipe::calibrated(cfg.family, t, p), d),
                        };
                        rows.push(match inf {
                            Ok(inf) => SweepRow {
                                t_ns: t,
                                infidelity: inf,
                                prefactors: p,
                                error: None,
                            },
                            Err(e) => failed(t, p, &e),
                        });
                    }
                    Err(e) => rows.push(failed(t, PrefactorSet::default(), &e)),
                }
            }
            Ok(rows)
        }
    }
}

pub const SWEEP_CSV_HEADER: &str = "T_ns,infidelity,beta,alpha12,alpha02,alpha13,delta_c";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        let p = &r.prefactors;
        out.push_str(&format!(
            "{},{:.6e},{:.9},{:.9},{:.9},{:.9},{:.9e}\n",
            r.t_ns,
            r.infidelity,
            p.beta,
            p.alpha12,
            p.alpha02,
            p.alpha13,
            p.delta_c.unwrap_or(0.0)
        ));
    }
    out
}

/// Smallest gate time reaching the infidelity target for one ansatz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzRow {
    pub n: u32,
    pub j: u32,
    pub k: f64,
    /// `None` when the target is not reached on `[T_min, t_max]`.
    pub t_target_ns: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzOptions {
    pub target: f64,
    pub t_max: f64,
    /// Coarse scan step before bisection (ns).
    pub scan_step: f64,
    /// Bisection width (ns).
    pub t_tol: f64,
}

impl Default for AnsatzOptions {
    fn default() -> Self {
        Self {
            target: 1e-4,
            t_max: 30.0,
            scan_step: 0.25,
            t_tol: 1e-3,
        }
    }
}

fn ansatz_recipe(n: u32, j: u32, t: f64) -> Recipe {
    let mut r = Recipe::analytic(Family::R2d, t);
    r.base = EnvelopeKind::FourierAnsatz { n, j };
    r
}

fn ansatz_infidelity(params: &LadderParams, n: u32, j: u32, t: f64) -> f64 {
    synthesize_quiet(params, &ansatz_recipe(n, j, t))
        .and_then(|w| simulate(params, &w))
        .map(|g| g.infidelity)
        .unwrap_or(f64::INFINITY)
}

/// First crossing of the target above `T_min` for one `(n, j)` pair.
pub fn ansatz_time(params: &LadderParams, n: u32, j: u32, opts: &AnsatzOptions) -> Result<AnsatzRow> {
    let k = (j as f64 / n as f64).powi(2);
    ansatz_recipe(n, j, 10.0).base.validate()?;
    let tmin = tmin_numeric(params, &ansatz_recipe(n, j, 10.0))?;
    let below = |t: f64| ansatz_infidelity(params, n, j, t) <= opts.target;
    let mut lo = tmin + 1e-3;
    let mut found = None;
    if below(lo) {
        found = Some(lo);
    } else {
        let mut t = lo;
        while t < opts.t_max {
            let next = (t + opts.scan_step).min(opts.t_max);
            if below(next) {
                lo = t;
                let mut hi = next;
                while hi - lo > opts.t_tol {
                    let mid = 0.5 * (lo + hi);
                    if below(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                found = Some(hi);
                break;
            }
            t = next;
        }
    }
    Ok(AnsatzRow {
        n,
        j,
        k,
        t_target_ns: found,
    })
}

/// [`ansatz_time`] for every pair, sorted by the reached time (unreachable
/// entries last).
pub fn ansatz_scan(
    params: &LadderParams,
    pairs: &[(u32, u32)],
    opts: &AnsatzOptions,
) -> Result<Vec<AnsatzRow>> {
    let mut rows: Vec<AnsatzRow> = pairs
        .par_iter()
        .map(|&(n, j)| ansatz_time(params, n, j, opts))
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| {
        let key = |r: &AnsatzRow| r.t_target_ns.unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b))
    });
    Ok(rows)
}

pub const ANSATZ_CSV_HEADER: &str = "n,j,k,T99p99_ns";

pub fn ansatz_csv(rows: &[AnsatzRow]) -> String {
    let mut out = format!("{ANSATZ_CSV_HEADER}\n");
    for r in rows {
        let t = r
            .t_target_ns
            .map(|t| format!("{t:.4}"))
            .unwrap_or_else(|| "unreachable".into());
        out.push_str(&format!("{},{},{},{t}\n", r.n, r.j, r.k));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{duffing_ladder, DELTA2_DEFAULT};

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            spread_tol: 1e-20,
            max_evals: 5000,
            ..Default::default()
        };
        let m = nelder_mead(rosen, &[-1.2, 1.0], &opts);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
        assert!(m.evals <= 5000);
    }

    #[test]
    fn nelder_mead_respects_infinite_walls() {
        // minimum of (x−2)² subject to x ≤ 1
        let f = |x: &[f64]| if x[0] > 1.0 { f64::INFINITY } else { (x[0] - 2.0).powi(2) };
        let m = nelder_mead(f, &[0.0], &NelderMeadOptions::default());
        assert!(m.x[0] <= 1.0 && (m.x[0] - 1.0).abs() < 1e-3, "{:?}", m.x);
    }

    #[test]
    fn trace_running_best_is_monotone() {
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
        let m = nelder_mead(f, &[1.0, -1.0, 2.0], &NelderMeadOptions::default());
        assert!(m.trace.windows(2).all(|w| w[1].2 < w[0].2));
        assert_eq!(m.trace.last().unwrap().2, m.f);
        assert!(m.evals <= 2000);
    }

    #[test]
    fn pack_round_trip() {
        let p = PrefactorSet {
            beta: 0.99,
            alpha12: 1.1,
            alpha02: 1.3,
            alpha13: 1.7,
            delta_c: Some(0.02),
        };
        let knobs = family_knobs(Family::R2d).unwrap();
        let v = pack(knobs, &p);
        assert_eq!(unpack(knobs, &PrefactorSet::default(), &v), p);
        let drag = family_knobs(Family::Drag).unwrap();
        let d = unpack(drag, &PrefactorSet::default(), &pack(drag, &p));
        assert_eq!((d.beta, d.alpha12, d.delta_c), (0.99, 1.1, Some(0.02)));
        assert_eq!((d.alpha02, d.alpha13), (1.0, 1.0));
        assert!(family_knobs(Family::Hann).is_err());
    }

    #[test]
    fn calibration_never_worsens_start() {
        let params = duffing_ladder(DELTA2_DEFAULT, 4).unwrap();
        let opts = NelderMeadOptions {
            max_evals: 150,
            restarts: 0,
            ..Default::default()
        };
        let run = optimize_prefactors(&params, Family::Drag, 10.0, None, &opts).unwrap();
        assert!(run.final_infidelity <= run.initial_infidelity * (1.0 + 1e-6));
        assert!(run.trace.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn sweep_rejects_bad_grids_and_keeps_infeasible_points() {
        let params = duffing_ladder(DELTA2_DEFAULT, 4).unwrap();
        let cfg = SweepConfig {
            family: Family::R1d,
            mode: PrefactorMode::Analytic,
            dissipation: Dissipation::Off,
            nelder_mead: NelderMeadOptions::default(),
        };
        assert!(sweep(&params, &[], &cfg).is_err());
        assert!(sweep(&params, &[5.0, 5.0], &cfg).is_err());
        let rows = sweep(&params, &[4.0, 12.0], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].infidelity.is_nan() && rows[0].error.is_some());
        assert!(rows[1].infidelity < 1e-3);
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);
    }
}
