//! Run configuration: a flat `key = value` file merged with command-line
//! flags, validated into typed settings and echoed into every output.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use dragkit::analytics::{BetaMode, DeltaCMode};
use dragkit::calibration::PrefactorMode;
use dragkit::envelopes::EnvelopeKind;
use dragkit::model::{duffing_ladder, LadderParams};
use dragkit::synthesis::{Family, PrefactorSet};
use dragkit::{Error, Result};
use sha2::{Digest, Sha256};

/// Every accepted key with a one-line description. Flags use the same names
/// with `-` in place of `_`.
pub const SCHEMA: &[(&str, &str)] = &[
    ("delta2_ghz", "anharmonicity Δ₂/2π in GHz (default -0.225)"),
    ("delta2_rad_ns", "anharmonicity Δ₂ in rad/ns, instead of delta2_ghz"),
    ("delta3_ghz", "override of Δ₃/2π in GHz (default: Duffing value 3Δ₂)"),
    ("levels", "number of ladder levels, 3..=6 (default 4)"),
    ("family", "hann | drag | r1d | r2d (default drag)"),
    ("base", "base shape: hann | sinN | fourier_bl | ansatz_nN_jJ"),
    ("T", "gate time in ns"),
    ("theta_pi", "rotation angle in units of π (default 1)"),
    ("mode", "analytic | predicted | optimized (default analytic)"),
    ("alpha", "quadrature prefactor α (α12 for recursive families)"),
    ("beta", "amplitude prefactor β"),
    ("alpha02", "prefactor of the 0↔2 recursion"),
    ("alpha13", "prefactor of the 1↔3 recursion"),
    ("delta_c_mhz", "constant detuning δc/2π in MHz"),
    ("delta_c_method", "integral | closed (default integral)"),
    ("beta_method", "linearized | cubic (default linearized)"),
    ("dissipation", "true | false: six-state Lindblad average (default false)"),
    ("t1_us", "relaxation time T₁ in μs"),
    ("t2_us", "dephasing time T₂* in μs"),
    ("grid", "gate times: start:stop:step or a comma list, in ns"),
    ("n", "sin power of the trial pulse for tmin"),
    ("pairs", "ansatz (n, j) pairs as n:j,n:j,..."),
    ("target", "ansatz infidelity target (default 1e-4)"),
    ("t_max", "ansatz search limit in ns (default 30)"),
    ("samples", "waveform samples (default 200)"),
    ("seed", "recorded seed; all algorithms are deterministic (default 0)"),
    ("out", "output path (default stdout)"),
];

const DEFAULTS: &[(&str, &str)] = &[
    ("levels", "4"),
    ("family", "drag"),
    ("theta_pi", "1"),
    ("mode", "analytic"),
    ("delta_c_method", "integral"),
    ("beta_method", "linearized"),
    ("dissipation", "false"),
    ("target", "1e-4"),
    ("t_max", "30"),
    ("samples", "200"),
    ("seed", "0"),
];

/// Pairs scanned by `ansatz-scan` when none are given.
pub const DEFAULT_PAIRS: &[(u32, u32)] = &[(1, 2), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)];

fn known(key: &str) -> bool {
    SCHEMA.iter().any(|(k, _)| *k == key)
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !known(k) {
            return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(out)
}

pub fn load_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_file(&text)
}

/// Typed settings after merging file, flags and defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Resolved `key = value` pairs, as echoed in output headers.
    pub entries: BTreeMap<String, String>,
    pub params: LadderParams,
    pub family: Family,
    pub base: Option<EnvelopeKind>,
    pub duration: Option<f64>,
    pub theta: f64,
    pub mode: PrefactorMode,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub alpha02: Option<f64>,
    pub alpha13: Option<f64>,
    /// rad/ns.
    pub delta_c: Option<f64>,
    pub delta_c_method: DeltaCMode,
    pub beta_method: BetaMode,
    pub dissipation: bool,
    pub t1_us: Option<f64>,
    pub t2_us: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub n: Option<u32>,
    pub pairs: Vec<(u32, u32)>,
    pub target: f64,
    pub t_max: f64,
    pub samples: usize,
    pub out: Option<String>,
}

fn num(entries: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    entries
        .get(key)
        .map(|v| {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: '{v}' is not a number")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Config(format!("{key}: must be finite")))
            }
        })
        .transpose()
}

fn int<T: std::str::FromStr>(entries: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    entries
        .get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: '{v}' is not a nonnegative integer")))
        })
        .transpose()
}

fn positive(key: &str, v: Option<f64>) -> Result<Option<f64>> {
    match v {
        Some(x) if x <= 0.0 => Err(Error::Config(format!("{key}: must be positive, got {x}"))),
        v => Ok(v),
    }
}

pub fn ghz_to_rad_ns(ghz: f64) -> f64 {
    2.0 * PI * ghz
}

/// Parse a base shape label as printed by [`EnvelopeKind::label`].
pub fn parse_base(s: &str) -> Result<EnvelopeKind> {
    let bad = || Error::Config(format!("base: unknown shape '{s}'"));
    let kind = match s {
        "hann" => EnvelopeKind::Hann,
        "fourier_bl" => EnvelopeKind::FourierBl,
        _ if s.starts_with("sin") => EnvelopeKind::SinPow {
            n: s[3..].parse().map_err(|_| bad())?,
        },
        _ if s.starts_with("ansatz_n") => {
            let (n, j) = s["ansatz_n".len()..].split_once("_j").ok_or_else(bad)?;
            EnvelopeKind::FourierAnsatz {
                n: n.parse().map_err(|_| bad())?,
                j: j.parse().map_err(|_| bad())?,
            }
        }
        _ => return Err(bad()),
    };
    kind.validate().map_err(|e| Error::Config(format!("base: {e}")))?;
    Ok(kind)
}

/// `start:stop:step` (inclusive) or `a,b,c`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Config(format!("grid: {why} in '{s}'"));
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("not a number"));
    if let [a, b, h] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, b, h) = (parse(a)?, parse(b)?, parse(h)?);
        if !(h > 0.0) || !(b >= a) {
            return Err(bad("need start <= stop and step > 0"));
        }
        let count = ((b - a) / h + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(bad("too many points"));
        }
        return Ok((0..count).map(|i| a + i as f64 * h).collect());
    }
    s.split(',').map(parse).collect()
}

pub fn parse_pairs(s: &str) -> Result<Vec<(u32, u32)>> {
    s.split(',')
        .map(|p| {
            let bad = || Error::Config(format!("pairs: expected n:j, got '{p}'"));
            let (n, j) = p.trim().split_once(':').ok_or_else(bad)?;
            Ok((n.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

impl RunConfig {
    /// Merge `flags` over `file`, fill defaults and validate every field.
    pub fn resolve(
        file: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut e = file;
        for (k, v) in flags {
            if !known(&k) {
                return Err(Error::Config(format!("unknown key '{k}'")));
            }
            e.insert(k, v);
        }
        if e.contains_key("delta2_ghz") && e.contains_key("delta2_rad_ns") {
            return Err(Error::Config(
                "give either delta2_ghz or delta2_rad_ns, not both".into(),
            ));
        }
        if !e.contains_key("delta2_rad_ns") {
            e.entry("delta2_ghz".into()).or_insert_with(|| "-0.225".into());
        }
        for (k, v) in DEFAULTS {
            e.entry(k.to_string()).or_insert_with(|| v.to_string());
        }

        let delta2 = match num(&e, "delta2_rad_ns")? {
            Some(w) => w,
            None => ghz_to_rad_ns(num(&e, "delta2_ghz")?.expect("defaulted")),
        };
        if delta2 == 0.0 {
            return Err(Error::Config("delta2: must be nonzero".into()));
        }
        let levels: usize = int(&e, "levels")?.expect("defaulted");
        let mut params =
            duffing_ladder(delta2, levels).map_err(|err| Error::Config(format!("levels: {err}")))?;
        if let Some(d3) = num(&e, "delta3_ghz")? {
            params = params
                .with_delta3(ghz_to_rad_ns(d3))
                .map_err(|err| Error::Config(format!("delta3_ghz: {err}")))?;
        }
        let family: Family = e["family"]
            .parse()
            .map_err(|err: Error| Error::Config(format!("family: {err}")))?;
        let base = e.get("base").map(|s| parse_base(s)).transpose()?;
        let mode = match e["mode"].as_str() {
            "analytic" => PrefactorMode::Analytic,
            "predicted" => PrefactorMode::Predicted,
            "optimized" => PrefactorMode::Optimized,
            other => {
                return Err(Error::Config(format!(
                    "mode: expected analytic, predicted or optimized, got '{other}'"
                )))
            }
        };
        let delta_c_method = match e["delta_c_method"].as_str() {
            "integral" => DeltaCMode::Integral,
            "closed" => DeltaCMode::ClosedForm,
            other => {
                return Err(Error::Config(format!(
                    "delta_c_method: expected integral or closed, got '{other}'"
                )))
            }
        };
        let beta_method = match e["beta_method"].as_str() {
            "linearized" => BetaMode::Linearized,
            "cubic" => BetaMode::Cubic,
            other => {
                return Err(Error::Config(format!(
                    "beta_method: expected linearized or cubic, got '{other}'"
                )))
            }
        };
        let theta_pi = num(&e, "theta_pi")?.expect("defaulted");
        if theta_pi < 0.0 {
            return Err(Error::Config("theta_pi: must be nonnegative".into()));
        }
        let grid = e.get("grid").map(|s| parse_grid(s)).transpose()?;
        if let Some(g) = &grid {
            if g.iter().any(|t| !(*t > 0.0)) {
                return Err(Error::Config("grid: gate times must be positive".into()));
            }
        }
        let pairs = match e.get("pairs") {
            Some(s) => parse_pairs(s)?,
            None => DEFAULT_PAIRS.to_vec(),
        };
        let n: Option<u32> = int(&e, "n")?;
        if n == Some(0) {
            return Err(Error::Config("n: must be at least 1".into()));
        }
        let samples: usize = int(&e, "samples")?.expect("defaulted");
        if samples == 0 {
            return Err(Error::Config("samples: must be at least 1".into()));
        }
        let _: u64 = int(&e, "seed")?.expect("defaulted");

        Ok(Self {
            params,
            family,
            base,
            duration: positive("T", num(&e, "T")?)?,
            theta: theta_pi * PI,
            mode,
            alpha: num(&e, "alpha")?,
            beta: positive("beta", num(&e, "beta")?)?,
            alpha02: num(&e, "alpha02")?,
            alpha13: num(&e, "alpha13")?,
            delta_c: num(&e, "delta_c_mhz")?.map(|m| ghz_to_rad_ns(m * 1e-3)),
            delta_c_method,
            beta_method,
            dissipation: parse_bool("dissipation", &e["dissipation"])?,
            t1_us: positive("t1_us", num(&e, "t1_us")?)?,
            t2_us: positive("t2_us", num(&e, "t2_us")?)?,
            grid,
            n,
            pairs,
            target: positive("target", num(&e, "target")?)?.expect("defaulted"),
            t_max: positive("t_max", num(&e, "t_max")?)?.expect("defaulted"),
            samples,
            out: e.get("out").cloned(),
            entries: e,
        })
    }

    pub fn duration(&self) -> Result<f64> {
        self.duration
            .ok_or_else(|| Error::Config("T: a gate time is required".into()))
    }

    pub fn decoherence(&self) -> Result<(f64, f64)> {
        match (self.t1_us, self.t2_us) {
            (Some(t1), Some(t2)) => Ok((t1, t2)),
            _ => Err(Error::Config(
                "dissipation needs both t1_us and t2_us".into(),
            )),
        }
    }

    /// Explicit prefactor keys laid over `p`.
    pub fn override_prefactors(&self, mut p: PrefactorSet) -> PrefactorSet {
        if let Some(b) = self.beta {
            p.beta = b;
        }
        if let Some(a) = self.alpha {
            p.alpha12 = a;
        }
        if let Some(a) = self.alpha02 {
            p.alpha02 = a;
        }
        if let Some(a) = self.alpha13 {
            p.alpha13 = a;
        }
        if let Some(d) = self.delta_c {
            p.delta_c = Some(d);
        }
        p
    }

    /// Canonical text hashed into the header. The output path is left out
    /// so that the same run written elsewhere keeps its hash.
    pub fn canonical(&self, command: &str) -> String {
        let mut s = format!("command = {command}\n");
        for (k, v) in self.entries.iter().filter(|(k, _)| k.as_str() != "out") {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn hash(&self, command: &str) -> String {
        format!("{:x}", Sha256::digest(self.canonical(command).as_bytes()))
    }

    /// `#`-prefixed header for CSV outputs.
    pub fn comment_header(&self, command: &str) -> String {
        let mut s = String::new();
        for line in self.canonical(command).lines() {
            s.push_str(&format!("# {line}\n"));
        }
        s.push_str(&format!("# config_sha256 = {}\n", self.hash(command)));
        s
    }
}
