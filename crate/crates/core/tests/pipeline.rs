use dragkit::analytics::{self, PredictOptions};
use dragkit::calibration::{
    optimize_prefactors, sweep, sweep_csv, CalibrationRun, Dissipation, NelderMeadOptions,
    PrefactorMode, SweepConfig,
};
use dragkit::metrics::simulate;
use dragkit::model::{duffing_ladder, LadderParams, DELTA2_DEFAULT};
use dragkit::synthesis::{synthesize, Family, PrefactorSet, Recipe};
use dragkit::Error;

fn ladder() -> LadderParams {
    duffing_ladder(DELTA2_DEFAULT, 4).unwrap()
}

fn analytic(p: &LadderParams, f: Family, t: f64) -> f64 {
    simulate(p, &synthesize(p, &Recipe::analytic(f, t)).unwrap())
        .unwrap()
        .infidelity
}

#[test]
fn drag_beats_hann_by_orders_of_magnitude() {
    let p = ladder();
    for t in [10.0, 15.0, 20.0] {
        let (h, d) = (analytic(&p, Family::Hann, t), analytic(&p, Family::Drag, t));
        assert!(d < h / 10.0, "T = {t}: DRAG {d:.2e} vs Hann {h:.2e}");
    }
}

#[test]
fn recursive_families_cut_two_photon_leakage() {
    let p = ladder();
    let leak = |f| {
        simulate(&p, &synthesize(&p, &Recipe::analytic(f, 8.0)).unwrap())
            .unwrap()
            .leakage
            .level_mean(2)
    };
    assert!(leak(Family::R1d) < leak(Family::Drag));
}

#[test]
fn infeasible_time_is_reported_with_minimum() {
    let p = ladder();
    match synthesize(&p, &Recipe::analytic(Family::R2d, 4.0)) {
        Err(Error::InfeasibleGateTime { tmin_ns: Some(t), .. }) => assert!((t - 4.45).abs() < 0.05),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn calibrated_drag_improves_tenfold_at_twelve_ns() {
    let p = ladder();
    let run = optimize_prefactors(&p, Family::Drag, 12.0, None, &NelderMeadOptions::default()).unwrap();
    assert!(run.final_infidelity <= run.initial_infidelity);
    assert!(run.final_infidelity * 10.0 <= analytic(&p, Family::Drag, 12.0));
    let json = serde_json::to_string(&run).unwrap();
    let back: CalibrationRun = serde_json::from_str(&json).unwrap();
    assert_eq!(back.final_prefactors, run.final_prefactors);
}

#[test]
fn predicted_prefactors_beat_plain_drag() {
    let p = ladder();
    let t = 15.0;
    let pred = analytics::predict(&p, t, None, PredictOptions::default()).unwrap();
    let with = |q: PrefactorSet| {
        let w = synthesize(&p, &Recipe::calibrated(Family::Drag, t, q)).unwrap();
        simulate(&p, &w).unwrap().infidelity
    };
    let predicted = with(PrefactorSet::drag(pred.beta, pred.alpha, pred.delta_c_rad_per_ns));
    let plain = with(PrefactorSet::default());
    assert!(predicted < plain / 10.0, "{predicted:.2e} vs {plain:.2e}");
}

#[test]
fn analytic_sweep_is_sorted_and_flags_infeasible_points() {
    let p = ladder();
    let cfg = SweepConfig {
        family: Family::R2d,
        mode: PrefactorMode::Analytic,
        dissipation: Dissipation::Off,
        nelder_mead: NelderMeadOptions::default(),
    };
    let rows = sweep(&p, &[4.0, 9.0, 12.0], &cfg).unwrap();
    assert_eq!(rows.iter().map(|r| r.t_ns).collect::<Vec<_>>(), vec![4.0, 9.0, 12.0]);
    assert!(rows[0].infidelity.is_nan() && rows[0].error.is_some());
    assert!(rows[2].infidelity < rows[1].infidelity);
    let csv = sweep_csv(&rows);
    assert!(csv.starts_with("T_ns,infidelity,beta,alpha12,alpha02,alpha13,delta_c\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn optimized_sweep_never_worse_than_analytic() {
    let p = ladder();
    let grid = [9.0, 9.5];
    let run = |mode| {
        let cfg = SweepConfig {
            family: Family::Drag,
            mode,
            dissipation: Dissipation::Off,
            nelder_mead: NelderMeadOptions::default(),
        };
        sweep(&p, &grid, &cfg).unwrap()
    };
    let (a, o) = (run(PrefactorMode::Analytic), run(PrefactorMode::Optimized));
    for (a, o) in a.iter().zip(&o) {
        assert!(o.infidelity <= a.infidelity + 1e-12, "T = {}", a.t_ns);
    }
}
