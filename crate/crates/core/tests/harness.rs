mod common;

use common::{partition_inertia, rng};
use qdeim_pinn::estimator::PdeSpec;
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig};
use qdeim_pinn::harness::{
    baseline_seed, error_points, greedy_counts, kmeans, lloyd, log_space, mean_errors_by_size,
    plot_data, read_records_csv, read_records_json, sweep_greedy, sweep_random, write_records_csv,
    write_records_json, ExperimentRecord, SweepConfig,
};
use qdeim_pinn::sampler::{sample_size_grid, SamplerKind};
use qdeim_pinn::trainer::TrainConfig;
use rand::Rng;

fn tiny_train() -> TrainConfig {
    TrainConfig {
        widths: vec![2, 8, 1],
        max_iter: 3,
        ..TrainConfig::default()
    }
}

fn burgers_small() -> (qdeim_pinn::snapshot::SnapshotMatrix, PdeSpec) {
    let spec = PdeSpec::burgers();
    let cfg = GeneratorConfig {
        n: 64,
        m: 41,
        ..GeneratorConfig::preset("burgers").unwrap()
    };
    (generate_synthetic(&spec, &cfg).unwrap(), spec)
}

#[test]
fn log_grid_hits_both_ends() {
    let v = log_space(1e-10, 1e-2, 20).unwrap();
    assert_eq!(v.len(), 20);
    assert_eq!((v[0], v[19]), (1e-10, 1e-2));
    let ratios: Vec<f64> = v.windows(2).map(|w| (w[1] / w[0]).log10()).collect();
    for r in &ratios {
        assert!((r - 8.0 / 19.0).abs() < 1e-12);
    }
}

#[test]
fn sweep_produces_one_record_per_pair() {
    let (s, spec) = burgers_small();
    let sweep = SweepConfig {
        t_divs: vec![1, 3],
        eps_count: 4,
        jobs: 2,
        ..SweepConfig::for_pde("burgers")
    };
    let recs = sweep_greedy(&s, &spec, &sweep, &tiny_train()).unwrap();
    assert_eq!(recs.len(), 8);
    let counts = greedy_counts(&s, &sweep).unwrap();
    for (r, (td, eps, n)) in recs.iter().zip(&counts) {
        assert_eq!(r.sampler, SamplerKind::Greedy);
        assert_eq!((r.t_div, r.eps_thr, r.n_samples), (Some(*td), Some(*eps), *n));
        assert_eq!(r.rel_errors.len(), 2);
        assert!(r.succeeded(), "{r:?}");
    }
    // thread count does not change the results
    let serial = sweep_greedy(&s, &spec, &SweepConfig { jobs: 1, ..sweep.clone() }, &tiny_train()).unwrap();
    let strip = |v: &[ExperimentRecord]| v.iter().map(|r| (r.n_samples, r.final_p.clone())).collect::<Vec<_>>();
    assert_eq!(strip(&recs), strip(&serial));
}

#[test]
fn greedy_counts_grow_as_threshold_shrinks() {
    let (s, _) = burgers_small();
    let sweep = SweepConfig::for_pde("burgers");
    let counts = greedy_counts(&s, &sweep).unwrap();
    assert_eq!(counts.len(), 4 * 20);
    for td in 1..=4 {
        let mut by_eps: Vec<(f64, usize)> = counts.iter().filter(|c| c.0 == td).map(|c| (c.1, c.2)).collect();
        by_eps.sort_by(|a, b| b.0.total_cmp(&a.0));
        assert!(by_eps.windows(2).all(|w| w[1].1 >= w[0].1), "t_div {td}: {by_eps:?}");
    }
}

#[test]
fn baseline_covers_the_size_grid() {
    let (s, spec) = burgers_small();
    let sweep = SweepConfig {
        repetitions: 2,
        base_seed: 9,
        ..SweepConfig::for_pde("burgers")
    };
    let recs = sweep_random(&s, &spec, 20, 120, &sweep, &tiny_train()).unwrap();
    let sizes = sample_size_grid(20, 120).unwrap();
    assert_eq!(recs.len(), sizes.len() * 2);
    for (i, r) in recs.iter().enumerate() {
        let (size, rep) = (sizes[i / 2], i % 2);
        assert_eq!(r.size, Some(size));
        assert_eq!(r.n_samples, size);
        assert_eq!(r.seed, Some(baseline_seed(9, size, rep)));
    }
    let means = mean_errors_by_size(&recs);
    assert_eq!(means.len(), sizes.len());
    for (size, m) in &means {
        let group: Vec<f64> = recs
            .iter()
            .filter(|r| r.size == Some(*size))
            .map(|r| r.rel_errors[0].unwrap())
            .collect();
        let want = group.iter().sum::<f64>() / group.len() as f64;
        assert!((m[0].unwrap() - want).abs() < 1e-15 * want.max(1.0));
    }
}

#[test]
fn failed_runs_are_recorded_and_skipped() {
    let (s, spec) = burgers_small();
    // a t_div larger than the time axis cannot be windowed
    let sweep = SweepConfig {
        t_divs: vec![1, 500],
        eps_count: 2,
        ..SweepConfig::for_pde("burgers")
    };
    let recs = sweep_greedy(&s, &spec, &sweep, &tiny_train()).unwrap();
    assert_eq!(recs.len(), 4);
    assert!(recs[..2].iter().all(ExperimentRecord::succeeded));
    assert!(recs[2..].iter().all(|r| r.failure.is_some()));
    assert_eq!(error_points(&recs, 0).len(), 2);
}

#[test]
fn lloyd_inertia_never_increases() {
    let mut r = rng(5);
    let pts: Vec<(f64, f64)> = (0..300)
        .map(|i| {
            let c = (i % 5) as f64;
            (c * 3.0 + r.gen_range(-1.5..1.5), c.sin() + r.gen_range(-1.0..1.0))
        })
        .collect();
    for seed in 0..10u64 {
        let init: Vec<(f64, f64)> = (0..7).map(|k| pts[(seed as usize * 13 + k * 41) % 300]).collect();
        let run = lloyd(&pts, &init);
        assert!(run.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{:?}", run.trace);
        let oracle = partition_inertia(&pts, &run.labels, 7);
        assert!((oracle - run.inertia).abs() < 1e-9 * oracle);
    }
}

#[test]
fn best_initialization_wins() {
    let mut r = rng(8);
    let pts: Vec<(f64, f64)> = (0..200).map(|_| (r.gen_range(0.0..10.0), r.gen_range(0.0..1.0))).collect();
    let s = kmeans(&pts, 6, 25, 3).unwrap();
    assert_eq!(s.init_inertias.len(), 25);
    let min = s.init_inertias.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(s.inertia, min);
    assert!((partition_inertia(&pts, &s.labels, 6) - s.inertia).abs() < 1e-9 * s.inertia);
    let more = kmeans(&pts, 6, 100, 3).unwrap();
    assert!(more.inertia <= s.inertia);
    assert_eq!(kmeans(&pts, 6, 25, 3).unwrap(), s);
    // more clusters, lower best inertia
    let fewer = kmeans(&pts, 3, 25, 3).unwrap();
    assert!(fewer.inertia > s.inertia);
}

fn mixed_records() -> Vec<ExperimentRecord> {
    let (s, spec) = burgers_small();
    let sweep = SweepConfig {
        t_divs: vec![2],
        eps_count: 3,
        repetitions: 1,
        ..SweepConfig::for_pde("burgers")
    };
    let mut recs = sweep_greedy(&s, &spec, &sweep, &tiny_train()).unwrap();
    recs.extend(sweep_random(&s, &spec, 30, 40, &sweep, &tiny_train()).unwrap());
    recs
}

#[test]
fn result_files_round_trip() {
    let recs = mixed_records();
    let mut json = Vec::new();
    write_records_json(&recs, &mut json).unwrap();
    assert_eq!(read_records_json(json.as_slice()).unwrap(), recs);

    let mut csv = Vec::new();
    write_records_csv(&recs, &mut csv).unwrap();
    let back = read_records_csv(csv.as_slice()).unwrap();
    assert_eq!(back.len(), recs.len());
    for (a, b) in back.iter().zip(&recs) {
        assert_eq!(
            (a.sampler, &a.pde, a.t_div, a.eps_thr, a.size, a.seed, a.n_samples, &a.rel_errors, a.wall_time_s),
            (b.sampler, &b.pde, b.t_div, b.eps_thr, b.size, b.seed, b.n_samples, &b.rel_errors, b.wall_time_s)
        );
    }
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + recs.len() * 2);
}

#[test]
fn plot_series_split_by_window_count() {
    let recs = mixed_records();
    let terms = PdeSpec::burgers().term_names();
    let greedy: Vec<ExperimentRecord> = recs.iter().filter(|r| r.sampler == SamplerKind::Greedy).cloned().collect();
    let clusters = vec![(0, kmeans(&error_points(&greedy, 0), 2, 5, 0).unwrap())];
    let plot = plot_data("burgers", &terms, &recs, &clusters);
    assert_eq!(plot.greedy.len(), 2);
    assert!(plot.greedy.iter().all(|s| s.label == "t_div=2" && s.points.len() == 3));
    assert_eq!(plot.random_mean.len(), 2);
    assert_eq!(plot.centroids.len(), 1);
    assert_eq!(plot.centroids[0].points.len(), 2);
}
