use qdeim_pinn::estimator::{FeatureTerm, LossWeights, PdeSpec};
use qdeim_pinn::linalg::Matrix;
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig};
use qdeim_pinn::sampler::{qdeim_sample, random_sample, QdeimConfig, SampleSet};
use qdeim_pinn::siren::param_count;
use qdeim_pinn::snapshot::SnapshotMatrix;
use qdeim_pinn::trainer::{composite_loss, cyclic_lr, init_network, train, TrainConfig};

fn toy() -> (SnapshotMatrix, SampleSet, PdeSpec) {
    let spec = PdeSpec::burgers();
    let cfg = GeneratorConfig {
        n: 64,
        m: 41,
        ..GeneratorConfig::preset("burgers").unwrap()
    };
    let s = generate_synthetic(&spec, &cfg).unwrap();
    let set = qdeim_sample(&s, &QdeimConfig::new(2, 1e-4).unwrap()).unwrap();
    (s, set, spec)
}

fn small(max_iter: usize) -> TrainConfig {
    TrainConfig {
        widths: vec![2, 16, 16, 1],
        max_iter,
        ..TrainConfig::default()
    }
}

#[test]
fn identical_seeds_give_identical_runs() {
    let (s, set, spec) = toy();
    let cfg = small(30);
    let run = || {
        let mut net = init_network(&cfg).unwrap();
        let r = train(&mut net, &set, &spec, s.scales(), &cfg).unwrap();
        (r, net.params().to_vec())
    };
    let (a, pa) = run();
    let (b, pb) = run();
    assert_eq!(a.p_trajectory, b.p_trajectory);
    assert_eq!(a.loss_history, b.loss_history);
    assert_eq!(pa, pb);
    let other = TrainConfig { seed: 1, ..cfg.clone() };
    let mut net = init_network(&other).unwrap();
    let c = train(&mut net, &set, &spec, s.scales(), &other).unwrap();
    assert_ne!(a.final_p, c.final_p);
}

#[test]
fn recorded_losses_add_up() {
    let (s, set, spec) = toy();
    let cfg = TrainConfig {
        mu1: 0.5,
        mu2: 0.25,
        ..small(20)
    };
    let mut net = init_network(&cfg).unwrap();
    let r = train(&mut net, &set, &spec, s.scales(), &cfg).unwrap();
    assert_eq!(r.iterations, 20);
    assert_eq!(r.loss_history.len(), 20);
    assert_eq!(r.p_trajectory.len(), 20);
    assert_eq!(r.lr_history.len(), 20);
    for l in &r.loss_history {
        let want = 0.5 * l.mse + 0.25 * l.deri;
        assert!((l.total - want).abs() <= 1e-14 * want.abs().max(1e-300), "{l:?}");
    }
    for (i, lr) in r.lr_history.iter().enumerate() {
        assert_eq!(*lr, cyclic_lr(i, &cfg));
    }
    assert_eq!(r.final_p, *r.p_trajectory.last().unwrap());
    // the first record is the loss of the untrained network
    let fresh = init_network(&cfg).unwrap();
    let e = composite_loss(
        &fresh,
        &set.coords(),
        &set.values(),
        &spec,
        s.scales(),
        LossWeights { mu1: 0.5, mu2: 0.25 },
    )
    .unwrap();
    assert_eq!(e.total, r.loss_history[0].total);
    assert_eq!(e.p_hat, r.p_trajectory[0]);
}

/// Travelling wave `sin(2(x − t))`: one sine neuron represents it exactly
/// and it satisfies `u_t = −u_x`, so both losses can reach zero.
fn advection_toy() -> (SnapshotMatrix, SampleSet, PdeSpec) {
    let spec = PdeSpec::new("advection", vec![FeatureTerm::from_pairs(&[(1, 1)]).unwrap()], Some(vec![-1.0])).unwrap();
    let x: Vec<f64> = (0..48).map(|i| -1.0 + 2.0 * i as f64 / 47.0).collect();
    let t: Vec<f64> = (0..33).map(|j| j as f64 / 32.0).collect();
    let u = Matrix::from_fn(48, 33, |i, j| (2.0 * (x[i] - t[j])).sin());
    let s = SnapshotMatrix::new("advection", x, t, u).unwrap();
    let set = random_sample(&s, 200, 3).unwrap();
    (s, set, spec)
}

#[test]
fn losses_fall_over_training() {
    let (s, set, spec) = advection_toy();
    let cfg = small(400);
    let mut net = init_network(&cfg).unwrap();
    let r = train(&mut net, &set, &spec, s.scales(), &cfg).unwrap();
    assert!(!r.diverged);
    let window_mean = |k: usize, f: &dyn Fn(usize) -> f64| (k * 100..(k + 1) * 100).map(f).sum::<f64>() / 100.0;
    let deri: Vec<f64> = (0..4).map(|k| window_mean(k, &|i| r.loss_history[i].deri)).collect();
    let total: Vec<f64> = (0..4).map(|k| window_mean(k, &|i| r.loss_history[i].total)).collect();
    for w in total.windows(2) {
        assert!(w[1] < w[0], "total by window {total:?}");
    }
    for w in deri.windows(2) {
        assert!(w[1] < w[0], "deri by window {deri:?}");
    }
}

#[test]
fn too_few_samples_are_rejected() {
    let (s, set, spec) = toy();
    let tiny = SampleSet {
        points: set.points[..1].to_vec(),
        ..set.clone()
    };
    let cfg = small(5);
    let mut net = init_network(&cfg).unwrap();
    assert!(train(&mut net, &tiny, &spec, s.scales(), &cfg).is_err());
    assert_eq!(net.num_params(), param_count(&cfg.widths));
}

#[test]
fn divergence_is_flagged_not_raised() {
    let (s, set, spec) = toy();
    let cfg = TrainConfig {
        divergence_threshold: 1e-12,
        ..small(50)
    };
    let mut net = init_network(&cfg).unwrap();
    let r = train(&mut net, &set, &spec, s.scales(), &cfg).unwrap();
    assert!(r.diverged);
    assert!(r.iterations < 50);
}
