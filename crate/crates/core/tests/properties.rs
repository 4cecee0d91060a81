use proptest::prelude::*;

use ituav::experiments::{run_experiment, write_results, ExperimentConfig, Preset};
use ituav::mission::{run_mission, step_mobility, Activity, ClusterDrift, MissionParams, Mobility};
use ituav::pointprocess::{estimate_cov, sample_thomas, ThomasParams, DEFAULT_RESOLUTION_M};
use ituav::scenario::{AnchorsConfig, Area, ScenarioConfig, SystemKind, UsersConfig};
use ituav::seeding::rng_from_seed;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thomas_samples_exact_count_inside_area(
        n in 1usize..300,
        parents in 1usize..8,
        sigma in 0.0..2000.0f64,
        side in 100.0..5000.0f64,
        seed in any::<u64>(),
    ) {
        let area = Area::square(side).unwrap();
        let params = ThomasParams { n_parents: parents, cluster_sigma: sigma, n_total: n };
        let ues = sample_thomas(&params, area, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(ues.len(), n);
        for (i, u) in ues.iter().enumerate() {
            prop_assert_eq!(u.id as usize, i);
            prop_assert!(area.contains(u.pos));
            prop_assert!((u.cluster_id.unwrap() as usize) < parents);
        }
    }

    #[test]
    fn cov_estimate_is_finite_and_positive(seed in any::<u64>(), sigma in 5.0..1500.0f64) {
        let area = Area::default();
        let params = ThomasParams { n_parents: 4, cluster_sigma: sigma, n_total: 120 };
        let ues = sample_thomas(&params, area, &mut rng_from_seed(seed)).unwrap();
        let est = estimate_cov(&ues, area, DEFAULT_RESOLUTION_M).unwrap();
        prop_assert!(est.value.is_finite() && est.value > 0.0);
        prop_assert_eq!(est.n_points, 120);
    }
}

#[test]
fn wider_scatter_lowers_cov() {
    let area = Area::default();
    let mean = |sigma: f64| {
        (0..50u64)
            .map(|s| {
                let p = ThomasParams { n_parents: 4, cluster_sigma: sigma, n_total: 200 };
                let ues = sample_thomas(&p, area, &mut rng_from_seed(s)).unwrap();
                estimate_cov(&ues, area, DEFAULT_RESOLUTION_M).unwrap().value
            })
            .sum::<f64>()
            / 50.0
    };
    let (tight, medium, wide) = (mean(30.0), mean(200.0), mean(3000.0));
    assert!(tight > medium && medium > wide, "{tight} {medium} {wide}");
    assert!((wide - 1.0).abs() < 0.1, "{wide}");
}

#[test]
fn long_horizon_drift_stays_inside() {
    let area = Area::default();
    let params = ThomasParams { n_parents: 5, cluster_sigma: 80.0, n_total: 100 };
    let mut ues = sample_thomas(&params, area, &mut rng_from_seed(1)).unwrap();
    let mut drift = ClusterDrift::new(&ues, area);
    let mut rng = rng_from_seed(2);
    for _ in 0..10_000 {
        step_mobility(&mut drift, &mut ues, Mobility { drift_speed_mps: 12.0 }, 10.0, &mut rng);
        assert!(drift.centers().all(|(_, c)| area.contains(c)));
    }
    assert!(ues.iter().all(|u| area.contains(u.pos)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mission_invariants_hold(seed in any::<u64>(), kind in 0usize..6, drift in prop::option::of(0.0..5.0f64)) {
        let s = ScenarioConfig {
            seed,
            users: UsersConfig { count: 50, cov: 1.0 },
            anchors: AnchorsConfig { count: 4, ..AnchorsConfig::default() },
            ..ScenarioConfig::default()
        }
        .realize()
        .unwrap();
        let tether = s.tether;
        let system = match kind {
            0 => SystemKind::UavNoSwap { battery_min: 12.0 },
            1 => SystemKind::UavSwap,
            2 => SystemKind::Tuav { tether },
            3 => SystemKind::Ituav { tether, n_anchors: 4 },
            4 => SystemKind::MultiTuav { k: 2, tether },
            _ => SystemKind::MultiItuav { k: 2, tether, n_anchors: 4 },
        };
        let mp = MissionParams {
            duration_min: 15.0,
            battery_capacity_min: 12.0,
            mobility: drift.map(|v| Mobility { drift_speed_mps: v }),
            ..MissionParams::default()
        };
        let trace = run_mission(&s, system, &mp, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(trace.steps.len(), 90);
        for step in &trace.steps {
            prop_assert_eq!(step.uavs.len(), system.uav_count());
            prop_assert!(step.covered_count <= s.ues.len());
            for u in &step.uavs {
                prop_assert!((0.0..=12.0).contains(&u.battery_min));
                if u.activity != Activity::Serving {
                    prop_assert_eq!(u.covered, 0);
                }
            }
        }
        prop_assert!(trace.summary.service_uptime_fraction <= 1.0);
    }
}

#[test]
fn experiment_files_are_byte_identical() {
    let mut cfg = ExperimentConfig::new(Preset::Fig5, 77);
    cfg.n_runs = 3;
    cfg.sweep = vec![2.0];
    cfg.overrides.n_ues = 60;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_results(&run_experiment(&cfg).unwrap(), &mut a).unwrap();
    write_results(&run_experiment(&cfg).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn doubling_runs_keeps_means_stable() {
    let mut cfg = ExperimentConfig::new(Preset::Fig3, 5);
    cfg.sweep = vec![1.0];
    cfg.n_runs = 40;
    cfg.overrides.n_ues = 100;
    let small = run_experiment(&cfg).unwrap();
    cfg.n_runs = 80;
    let large = run_experiment(&cfg).unwrap();
    for (a, b) in small.rows.iter().zip(&large.rows) {
        assert_eq!(a.system, b.system);
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() < 3.0 * se.max(1e-9), "{}: {} vs {}", a.system, a.mean, b.mean);
    }
}

#[test]
fn fig4_ituav_improves_with_anchors() {
    let mut cfg = ExperimentConfig::new(Preset::Fig4, 12);
    cfg.n_runs = 30;
    cfg.overrides.n_ues = 100;
    let t = run_experiment(&cfg).unwrap();
    let i3 = t.get("ituav(3)", 3.0).unwrap();
    let i10 = t.get("ituav(10)", 3.0).unwrap();
    assert!(i10.mean > i3.mean, "{} vs {}", i10.mean, i3.mean);
    let order: Vec<&str> = t.rows.iter().map(|r| r.system.as_str()).collect();
    assert_eq!(order.first(), Some(&"uav-no-swap(30)"));
    assert_eq!(order.last(), Some(&"uav-swap"));
}
