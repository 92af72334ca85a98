use isac_core::robust::Method;
use isac_core::simkit::engine::{run_montecarlo, MonteCarloConfig, Scenario};
use isac_core::simkit::report::{read_csv, read_json, rows, write_csv, write_json};
use isac_core::simkit::{derive_seed, PerturbationModel};
use isac_core::model::SystemConfig;

fn small(method: Method) -> MonteCarloConfig {
    MonteCarloConfig {
        system: SystemConfig { users: 2, antennas: 6, frame_length: 10, ..SystemConfig::reference() },
        theta_grid: vec![0.0, 0.05, 0.1],
        episodes: 25,
        ..MonteCarloConfig::reference(method)
    }
}

#[test]
fn csv_round_trip_and_row_count() {
    let mc = small(Method::M2);
    let report = run_montecarlo(&mc).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    write_csv(&report, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), mc.episodes * mc.theta_grid.len());
    for (a, b) in back.iter().zip(rows(&report)) {
        assert_eq!(a.method, b.method);
        assert_eq!(a.episode, b.episode);
        assert_eq!(a.coverage, b.coverage);
        for (x, y) in [(a.theta, b.theta), (a.aasr_true, b.aasr_true), (a.aasr_nominal, b.aasr_nominal), (a.aasr_robust, b.aasr_robust)] {
            assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn json_round_trip() {
    let report = run_montecarlo(&small(Method::M3Papc)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    write_json(&report, &path).unwrap();
    assert_eq!(read_json(&path).unwrap(), report);
}

#[test]
fn episodes_do_not_depend_on_run_length() {
    let short = run_montecarlo(&MonteCarloConfig { episodes: 5, ..small(Method::M1) }).unwrap();
    let long = run_montecarlo(&small(Method::M1)).unwrap();
    assert_eq!(short.blocks[0].nominal_true[..], long.blocks[0].nominal_true[..5]);
    for (a, b) in short.blocks[0].points.iter().zip(&long.blocks[0].points) {
        assert_eq!(a.true_aasr[..], b.true_aasr[..5]);
    }
}

#[test]
fn episode_channels_are_order_free() {
    let sc = Scenario::build(&small(Method::M1)).unwrap();
    let forward: Vec<_> = (0..8).map(|e| sc.model.h_true(e)).collect();
    let backward: Vec<_> = (0..8).rev().map(|e| sc.model.h_true(e)).collect();
    for (e, h) in backward.iter().rev().enumerate() {
        assert_eq!(h, &forward[e]);
    }
    let other = PerturbationModel::new(sc.model.h_ref.clone(), 0.05, derive_seed(1, 2)).unwrap();
    assert_ne!(other.h_true(0), forward[0]);
}

#[test]
fn rho_grid_produces_one_block_each() {
    let mc = MonteCarloConfig { rho_grid: vec![0.0, 0.5, 1.0], episodes: 5, ..small(Method::M3Tpc) };
    let report = run_montecarlo(&mc).unwrap();
    assert_eq!(report.blocks.len(), 3);
    assert_eq!(rows(&report).len(), 3 * 5 * 3);
    // Sensing-centric methods ignore the grid.
    let mc = MonteCarloConfig { rho_grid: vec![0.0, 0.5], episodes: 5, ..small(Method::M1) };
    assert_eq!(run_montecarlo(&mc).unwrap().blocks.len(), 1);
}

#[test]
fn different_seeds_differ() {
    let a = run_montecarlo(&small(Method::M1)).unwrap();
    let b = run_montecarlo(&MonteCarloConfig { master_seed: 7, ..small(Method::M1) }).unwrap();
    assert_ne!(a.blocks[0].nominal_true, b.blocks[0].nominal_true);
}

