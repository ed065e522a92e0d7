//! Reproduction targets for the gate-time, leakage, prediction and
//! calibration results. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use dragkit::analytics::{self, magnus_elements, PredictOptions};
use dragkit::calibration::{
    ansatz_scan, optimize_knobs, sweep, AnsatzOptions, Dissipation, Knob, NelderMeadOptions,
    PrefactorMode, SweepConfig, SweepRow,
};
use dragkit::envelopes::{check_boundary, Envelope, EnvelopeKind};
use dragkit::linalg::CMat;
use dragkit::metrics::{
    bloch_states, dissipative_fidelity, gate_fidelity, pauli_x, simulate, Leakage,
};
use dragkit::model::{duffing_ladder, LadderParams, DELTA2_DEFAULT};
use dragkit::propagation::{
    propagate_lindblad_batch, propagate_unitary, DensityState, LindbladOptions,
    PropagationOptions,
};
use dragkit::synthesis::{
    synth_r1d, synth_r2d, synthesize, tmin_numeric, tmin_r1d, Family, PrefactorSet, Recipe,
};
use num_complex::Complex64 as C64;

type Outcome = (bool, String);

fn ladder() -> LadderParams {
    duffing_ladder(DELTA2_DEFAULT, 4).unwrap()
}

fn grid(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = ((b - a) / h + 1e-9).floor() as usize;
    (0..=n).map(|i| a + i as f64 * h).collect()
}

fn analytic_infidelity(p: &LadderParams, family: Family, t: f64) -> f64 {
    let w = synthesize(p, &Recipe::analytic(family, t)).unwrap();
    simulate(p, &w).unwrap().infidelity
}

fn analytic_leakage(p: &LadderParams, family: Family, t: f64) -> Leakage {
    let w = synthesize(p, &Recipe::analytic(family, t)).unwrap();
    simulate(p, &w).unwrap().leakage
}

/// Smallest grid time from which every later point is at or below `level`.
fn settles_below(ts: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    let mut out = None;
    for (t, y) in ts.iter().zip(ys).rev() {
        if *y <= level {
            out = Some(*t);
        } else {
            break;
        }
    }
    out
}

fn c1_analytic_sweep(p: &LadderParams) -> Outcome {
    let ts = grid(11.0, 15.0, 0.1);
    let drag: Vec<f64> = ts.iter().map(|&t| analytic_infidelity(p, Family::Drag, t)).collect();
    // refine the grid crossing by bisection on the neighbouring interval
    let cross = settles_below(&ts, &drag, 1e-4).map(|t| {
        let (mut lo, mut hi) = (t - 0.1, t);
        while hi - lo > 1e-3 {
            let mid = 0.5 * (lo + hi);
            if analytic_infidelity(p, Family::Drag, mid) <= 1e-4 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    });
    let a = cross.is_some_and(|t| (t - 12.7).abs() <= 0.7);

    let r1d_ts = grid(11.2, 20.0, 0.2);
    let r1d_max = r1d_ts
        .iter()
        .map(|&t| analytic_infidelity(p, Family::R1d, t))
        .fold(0.0, f64::max);
    let b = r1d_max <= 1e-4;

    let r9 = analytic_infidelity(p, Family::R2d, 9.0);
    let r118 = analytic_infidelity(p, Family::R2d, 11.8);
    let c = r9 <= 2.0 * 1e-4 && r118 <= 2.0 * 1e-5;
    (
        a && b && c,
        format!(
            "(a) DRAG crosses 1e-4 at {} ns [{}]; (b) R1D max over T >= 11.2 ns = {r1d_max:.2e} [{}]; \
             (c) R2D 1-F(9.0) = {r9:.2e}, 1-F(11.8) = {r118:.2e} [{}]",
            cross.map_or("never".into(), |t| format!("{t:.3}")),
            verdict(a),
            verdict(b),
            verdict(c)
        ),
    )
}

fn c2_leakage_budget(p: &LadderParams) -> Outcome {
    let t = 6.0;
    let l: Vec<Leakage> = [Family::Hann, Family::Drag, Family::R1d, Family::R2d]
        .iter()
        .map(|&f| analytic_leakage(p, f, t))
        .collect();
    let two: Vec<f64> = l.iter().map(|x| x.level_mean(2)).collect();
    let order = two[0] > two[1] && two[1] > two[2];
    let (r1d3, r2d3) = (l[2].level_mean(3), l[3].level_mean(3));
    let three = 5.0 * r2d3 <= r1d3;
    (
        order && three,
        format!(
            "|2> leakage Hann {:.2e} > DRAG {:.2e} > R1D {:.2e} [{}]; |3> R2D {r2d3:.2e} vs R1D {r1d3:.2e}, \
             ratio {:.2} (need >= 5) [{}]",
            two[0],
            two[1],
            two[2],
            verdict(order),
            r1d3 / r2d3,
            verdict(three)
        ),
    )
}

fn c3_minimum_times(p: &LadderParams) -> Outcome {
    let closed = tmin_r1d(3, p.delta2()).unwrap();
    let exact = 6f64.sqrt() * PI / p.delta2().abs();
    let a = (closed - exact).abs() <= 4.0 * f64::EPSILON * exact;
    let r2d = tmin_numeric(p, &Recipe::analytic(Family::R2d, 10.0)).unwrap();
    let b = (r2d - 4.45).abs() <= 0.05;
    let by_ratio: Vec<f64> = [2.5, 3.0, 4.0]
        .iter()
        .map(|r| {
            let q = p.clone().with_delta3(r * p.delta2()).unwrap();
            tmin_numeric(&q, &Recipe::analytic(Family::R2d, 10.0)).unwrap()
        })
        .collect();
    let c = by_ratio.windows(2).all(|w| w[1] < w[0]) || by_ratio.windows(2).all(|w| w[1] > w[0]);
    (
        a && b && c,
        format!(
            "R1D(n=3) closed form {closed:.6} ns [{}]; numeric R2D T_min {r2d:.4} ns [{}]; \
             R2D T_min at Δ3/Δ2 = 2.5, 3, 4: {:.4}, {:.4}, {:.4} ns [{}]",
            verdict(a),
            verdict(b),
            by_ratio[0],
            by_ratio[1],
            by_ratio[2],
            verdict(c)
        ),
    )
}

fn c4_predictions(p: &LadderParams) -> Outcome {
    let nm = NelderMeadOptions::default();
    let alphas = [0.9, 1.0, 1.1, 1.2, 1.3, 1.4];
    let mut ok = true;
    let mut worst = [(0.0f64, 0.0f64); 2];
    let mut improves = true;
    for &alpha in &alphas {
        let mut dc_err = [0.0; 2];
        for (k, &(t, tol)) in [(8.0, 0.25), (15.0, 0.10)].iter().enumerate() {
            let pred = analytics::predict(p, t, Some(alpha), PredictOptions::default()).unwrap();
            let init = PrefactorSet::drag(pred.beta, alpha, pred.delta_c_rad_per_ns);
            let run = optimize_knobs(p, Family::Drag, t, Some(init), &[Knob::Beta, Knob::DeltaC], &nm)
                .unwrap();
            let opt = run.final_prefactors;
            let e_dc = ((pred.delta_c_rad_per_ns - opt.delta_c.unwrap()) / opt.delta_c.unwrap()).abs();
            let e_b = ((pred.beta - opt.beta) / opt.beta).abs();
            dc_err[k] = e_dc;
            worst[k] = (worst[k].0.max(e_dc), worst[k].1.max(e_b));
            ok &= e_dc <= tol && e_b <= tol;
        }
        improves &= dc_err[1] < dc_err[0];
    }
    let alpha15 = analytics::predict(p, 15.0, None, PredictOptions::default())
        .unwrap()
        .alpha;
    let alpha_ok = (1.1..=1.3).contains(&alpha15);
    (
        ok && improves && alpha_ok,
        format!(
            "worst relative error at 8 ns: δc {:.1}%, β {:.1}% (tol 25%); at 15 ns: δc {:.1}%, β {:.1}% (tol 10%) [{}]; \
             δc agreement improves with T [{}]; predicted α(15 ns) = {alpha15:.3} (need 1.1..1.3) [{}]",
            100.0 * worst[0].0,
            100.0 * worst[0].1,
            100.0 * worst[1].0,
            100.0 * worst[1].1,
            verdict(ok),
            verdict(improves),
            verdict(alpha_ok)
        ),
    )
}

fn optimized_sweep(p: &LadderParams, family: Family, ts: &[f64]) -> Vec<SweepRow> {
    let cfg = SweepConfig {
        family,
        mode: PrefactorMode::Optimized,
        dissipation: Dissipation::Off,
        nelder_mead: NelderMeadOptions::default(),
    };
    sweep(p, ts, &cfg).unwrap()
}

fn c5_calibrated(drag: &[SweepRow], r2d: &[SweepRow]) -> Outcome {
    let (t_best, f_best) = drag
        .iter()
        .map(|r| (r.t_ns, r.infidelity))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let a = f_best <= 1e-5;
    let ts: Vec<f64> = r2d.iter().map(|r| r.t_ns).collect();
    let fs: Vec<f64> = r2d.iter().map(|r| r.infidelity).collect();
    let cross = settles_below(&ts, &fs, 1e-5);
    let b = cross.is_some_and(|t| (t - 6.8).abs() <= 0.2) && *ts.last().unwrap() >= 15.0;
    (
        a && b,
        format!(
            "optimized DRAG minimum on 8.9..9.4 ns: {f_best:.2e} at {t_best:.2} ns [{}]; \
             optimized R2D stays <= 1e-5 from {} ns to 15 ns [{}]",
            verdict(a),
            cross.map_or("never".into(), |t| format!("{t:.2}")),
            verdict(b)
        ),
    )
}

fn averaged_infidelity(p: &LadderParams, row: &SweepRow, t1: f64, t2: f64) -> f64 {
    let w = synthesize(p, &Recipe::calibrated(Family::R2d, row.t_ns, row.prefactors)).unwrap();
    let noisy = p.clone().with_decoherence(Some(t1), Some(t2));
    1.0 - dissipative_fidelity(&noisy, &w, &pauli_x()).unwrap()
}

fn c6_dissipation(p: &LadderParams, r2d: &[SweepRow]) -> Outcome {
    let rows: Vec<&SweepRow> = r2d.iter().filter(|r| r.infidelity.is_finite()).collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.t_ns).collect();
    let good: Vec<f64> = rows.iter().map(|r| averaged_infidelity(p, r, 1000.0, 1000.0)).collect();
    // the crossing on the short-time side; decoherence lifts long gates again
    let near = ts.iter().filter(|t| **t <= 8.0).count();
    let cross = settles_below(&ts[..near], &good[..near], 1e-5);
    let a = cross.is_some_and(|t| (t - 6.93).abs() <= 0.15);
    let (t_min, f_min) = ts
        .iter()
        .zip(&good)
        .map(|(t, f)| (*t, *f))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let b = (7.0..=7.6).contains(&t_min);
    let floor = rows
        .iter()
        .map(|r| averaged_infidelity(p, r, 40.0, 50.0))
        .fold(f64::INFINITY, f64::min);
    let c = floor > 1e-5;
    (
        a && b && c,
        format!(
            "(1000, 1000) μs: <= 1e-5 from {} ns [{}], minimum {f_min:.2e} at {t_min:.1} ns [{}]; \
             (40, 50) μs floor {floor:.2e} [{}]",
            cross.map_or("never".into(), |t| format!("{t:.2}")),
            verdict(a),
            verdict(b),
            verdict(c)
        ),
    )
}

fn c7_table(p: &LadderParams) -> Outcome {
    let expect = [((1, 2), 10.43), ((1, 3), 8.42), ((1, 4), 8.45), ((1, 5), 8.60)];
    let pairs: Vec<(u32, u32)> = expect.iter().map(|e| e.0).collect();
    let rows = ansatz_scan(p, &pairs, &AnsatzOptions::default()).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for ((n, j), want) in expect {
        let got = rows
            .iter()
            .find(|r| r.n == n && r.j == j)
            .and_then(|r| r.t_target_ns);
        let hit = got.is_some_and(|t| (t - want).abs() <= 0.15);
        ok &= hit;
        parts.push(format!(
            "({n},{j}) {} vs {want}",
            got.map_or("unreachable".into(), |t| format!("{t:.2}"))
        ));
    }
    let min_ok = rows.first().is_some_and(|r| (r.n, r.j) == (1, 3));
    (
        ok && min_ok,
        format!(
            "{} [{}]; minimum at ({},{}) [{}]",
            parts.join(", "),
            verdict(ok),
            rows[0].n,
            rows[0].j,
            verdict(min_ok)
        ),
    )
}

fn c8_properties(p: &LadderParams) -> Outcome {
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let mut defect: f64 = 0.0;
    for f in [Family::Hann, Family::Drag, Family::R1d, Family::R2d] {
        let w = synthesize(p, &Recipe::analytic(f, 10.0)).unwrap();
        let u = propagate_unitary(p, &w, &PropagationOptions::default()).unwrap().u;
        defect = defect.max(u.unitarity_defect());
    }
    checks.push(("unitarity", defect <= 1e-10));

    let w = synthesize(p, &Recipe::analytic(Family::R2d, 8.0)).unwrap();
    let states: Vec<DensityState> = bloch_states(4).iter().map(|s| DensityState::pure(s)).collect();
    let noisy = p.clone().with_decoherence(Some(40.0), Some(50.0));
    let (out, _) = propagate_lindblad_batch(&noisy, &w, &states, &LindbladOptions::default()).unwrap();
    let drift = out.iter().map(|d| (d.trace() - 1.0).abs()).fold(0.0, f64::max);
    checks.push(("Lindblad trace", drift <= 1e-9));
    let (closed, _) = propagate_lindblad_batch(p, &w, &states, &LindbladOptions::default()).unwrap();
    let u = propagate_unitary(p, &w, &PropagationOptions::default()).unwrap().u;
    let gap = closed
        .iter()
        .zip(&states)
        .map(|(c, s)| (c.rho - u * s.rho * u.adjoint()).max_abs())
        .fold(0.0, f64::max);
    checks.push(("closed-system Lindblad", gap <= 1e-8));

    let r1d_min = tmin_r1d(3, p.delta2()).unwrap();
    let mut edges = true;
    for f in [Family::Hann, Family::Drag, Family::R1d, Family::R2d] {
        let tmin = tmin_numeric(p, &Recipe::analytic(f, 10.0)).unwrap();
        let t = 1.2 * if tmin > 0.0 { tmin } else { r1d_min };
        for recipe in [
            Recipe::analytic(f, t),
            Recipe::calibrated(f, t, PrefactorSet::default()),
        ] {
            let Ok(w) = synthesize(p, &recipe) else {
                edges = false;
                continue;
            };
            for ch in 0..3 {
                let rep = check_boundary(
                    f.label(),
                    |s, _| {
                        let d = w.sample(s);
                        [d.x, d.y, d.delta][ch]
                    },
                    t,
                    0,
                    1e-9,
                );
                edges &= rep.pass();
            }
        }
    }
    checks.push(("boundary at 1.2 T_min", edges));

    let env = Envelope::new(EnvelopeKind::SinPow { n: 4 }, 0.6, 9.0).unwrap();
    let big = DELTA2_DEFAULT * 1e6;
    let x1 = synth_r1d(&env, big, 1.0).unwrap();
    let (_, x2) = synth_r2d(&env, big, 3.0 * big, 1.0, 1.0).unwrap();
    let collapse = (1..100).all(|i| {
        let t = 9.0 * i as f64 / 100.0;
        let a = env.eval(t, 0).unwrap();
        (x1.value(t) - a).abs() <= 1e-6 * a && (x2.value(t) - a).abs() <= 1e-6 * a
    });
    checks.push(("large-Δ collapse", collapse));

    let x = pauli_x();
    let mut perfect = CMat::identity(4);
    perfect[(0, 0)] = C64::new(0.0, 0.0);
    perfect[(1, 1)] = C64::new(0.0, 0.0);
    perfect[(0, 1)] = C64::new(1.0, 0.0);
    perfect[(1, 0)] = C64::new(1.0, 0.0);
    let exact = (gate_fidelity(&perfect, &x) - 1.0).abs() < 1e-15
        && (gate_fidelity(&CMat::identity(4), &x) - 1.0 / 3.0).abs() < 1e-15
        && (gate_fidelity(&perfect.scale_re(0.99), &x) - 0.9801).abs() < 1e-14;
    checks.push(("fidelity formula", exact));

    let wd = synthesize(p, &Recipe::analytic(Family::Drag, 12.0)).unwrap();
    let m = magnus_elements(&wd, p, 1.0).unwrap();
    let sum = |h: &[C64; 3]| h[0] + h[1] + h[2];
    let h_ok = (sum(&m.h12) - m.z12).norm() <= 1e-12 * m.z12.norm().max(1e-30)
        && (sum(&m.h02) - m.z02).norm() <= 1e-12 * m.z02.norm().max(1e-30)
        && (m.leakage_norm(1.0) - m.z12.norm_sqr() - m.z02.norm_sqr()).abs()
            <= 1e-12 * m.leakage_norm(1.0);
    checks.push(("h decomposition at α = 1", h_ok));

    let g = gate_fidelity(&u, &x);
    let phased = (0..8).all(|k| {
        let ph = C64::from_polar(1.0, 0.7 * k as f64);
        (gate_fidelity(&u.scale(ph), &x) - g).abs() <= 1e-14
    });
    checks.push(("global phase", phased));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    (
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} property checks hold", checks.len())
        } else {
            format!("failing: {}", failed.join(", "))
        },
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "miss"
    }
}

/// `cargo test --test acceptance -- 1 3` runs only the listed criteria.
fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: usize| only.is_empty() || only.contains(&n);
    let p = ladder();
    let start = Instant::now();
    let mut all = true;
    let mut report = |n: usize, name: &str, run: &dyn Fn() -> Outcome| {
        if !want(n) {
            return;
        }
        let (ok, detail) = run();
        all &= ok;
        println!(
            "criterion {n} {name}: {} ({:.0} s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };
    report(1, "analytic sweep", &|| c1_analytic_sweep(&p));
    report(2, "leakage budget", &|| c2_leakage_budget(&p));
    report(3, "minimum gate times", &|| c3_minimum_times(&p));
    report(4, "prefactor predictions", &|| c4_predictions(&p));
    let r2d = std::cell::OnceCell::new();
    let r2d_rows = || {
        r2d.get_or_init(|| {
            let mut ts = grid(6.4, 8.0, 0.1);
            ts.extend(grid(8.5, 15.0, 0.5));
            optimized_sweep(&p, Family::R2d, &ts)
        })
    };
    report(5, "calibrated sweeps", &|| {
        let drag = optimized_sweep(&p, Family::Drag, &grid(8.9, 9.4, 0.05));
        c5_calibrated(&drag, r2d_rows())
    });
    report(6, "dissipation", &|| c6_dissipation(&p, r2d_rows()));
    report(7, "ansatz table", &|| c7_table(&p));
    report(8, "property suite", &|| c8_properties(&p));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
