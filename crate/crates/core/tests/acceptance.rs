//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; the process fails if any criterion does.
//!
//! Reference snapshots are read from `$QDEIM_PINN_DATA_DIR/{allen_cahn,burgers,kdv}.{txt,csv}`
//! when present. Otherwise the built-in spectral generator supplies the data.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use common::*;
use qdeim_pinn::estimator::{
    build_theta, solve_parameters, time_derivatives, DomainScales, LossWeights, PdeSpec,
};
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig};
use qdeim_pinn::harness::{
    baseline_seed, error_points, export_results, greedy_count_range, kmeans, lloyd, sweep_greedy,
    sweep_random, ExperimentRecord, ResultFormat, SweepConfig,
};
use qdeim_pinn::linalg::{pivoted_qr, qr_least_squares, svd, truncate};
use qdeim_pinn::sampler::{qdeim_sample, random_sample, QdeimConfig, QdeimPlan, SampleSet};
use qdeim_pinn::siren::{forward_jet, to_checkpoint_string, Jet};
use qdeim_pinn::snapshot::{load_snapshot, SnapshotFormat, SnapshotMatrix};
use qdeim_pinn::trainer::{composite_loss, init_network, train, TrainConfig, TrainResult};
use rand::Rng;

type Check = Result<String, String>;

struct Dataset {
    pde: &'static str,
    snapshot: SnapshotMatrix,
    reference: bool,
}

fn reference_path(stem: &str) -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os("QDEIM_PINN_DATA_DIR")?);
    ["txt", "csv"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

fn dataset(pde: &'static str) -> Dataset {
    let stem = pde.replace('-', "_");
    if let Some(path) = reference_path(&stem) {
        let snapshot = load_snapshot(&path, SnapshotFormat::from_path(&path))
            .unwrap_or_else(|e| panic!("reference data {}: {e}", path.display()));
        return Dataset { pde, snapshot, reference: true };
    }
    let spec = PdeSpec::preset(pde).unwrap();
    let snapshot = generate_synthetic(&spec, &GeneratorConfig::preset(pde).unwrap()).unwrap();
    Dataset { pde, snapshot, reference: false }
}

fn source(d: &Dataset) -> &'static str {
    if d.reference {
        "reference data"
    } else {
        "generator data"
    }
}

fn operating_samples(d: &Dataset) -> SampleSet {
    qdeim_sample(&d.snapshot, &QdeimConfig::for_pde(d.pde).unwrap()).unwrap()
}

fn fit(d: &Dataset, samples: &SampleSet, cfg: &TrainConfig) -> TrainResult {
    let spec = PdeSpec::preset(d.pde).unwrap();
    let mut net = init_network(cfg).unwrap();
    train(&mut net, samples, &spec, d.snapshot.scales(), cfg).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---------- criterion 1 ----------

fn sample_counts(sets: &[Dataset]) -> Check {
    let mut notes = Vec::new();
    for d in sets {
        let start = Instant::now();
        if d.reference {
            let want = match d.pde {
                "allen-cahn" => 394,
                "kdv" => 288,
                _ => 359,
            };
            let got = operating_samples(d).len();
            ensure(got == want, format!("{}: {got} samples, expected {want}", d.pde))?;
            notes.push(format!("{} {got}", d.pde));
        } else {
            let sweep = SweepConfig::for_pde(d.pde);
            let mut checked = 0;
            for t_div in 1..=4 {
                let plan = QdeimPlan::new(&d.snapshot, t_div).unwrap();
                for eps in sweep.eps_values().unwrap() {
                    let set = plan.sample(eps, false).unwrap();
                    let expect: usize = set.ranks().iter().map(|r| r * r).sum();
                    ensure(
                        set.len() == expect,
                        format!("{} t_div={t_div} eps={eps:e}: {} != Σr² = {expect}", d.pde, set.len()),
                    )?;
                    checked += 1;
                }
            }
            let op = operating_samples(d);
            notes.push(format!("{} Σr² over {checked} pairs, operating point {} {:?}", d.pde, op.len(), op.ranks()));
        }
        let secs = start.elapsed().as_secs_f64();
        ensure(secs < 10.0, format!("{}: {secs:.1} s", d.pde))?;
    }
    Ok(notes.join("; "))
}

// ---------- criteria 2 to 4 ----------

fn recovery(d: &Dataset, bounds: &[f64], label: &str) -> (Check, Option<Vec<f64>>) {
    let start = Instant::now();
    let samples = operating_samples(d);
    let r = fit(d, &samples, &TrainConfig::for_pde(d.pde));
    let errs: Vec<f64> = r.rel_errors.as_ref().unwrap().iter().map(|e| e.unwrap()).collect();
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{} samples ({}), {} iterations, p = {:?}, rel. errors {:?}, {secs:.0} s",
        samples.len(),
        source(d),
        r.iterations,
        r.final_p,
        errs
    );
    let mut failures = Vec::new();
    if r.diverged {
        failures.push("diverged".to_string());
    }
    for (i, b) in bounds.iter().enumerate() {
        if !(errs[i] < *b) {
            failures.push(format!("{label} coefficient {} error {:.4} ≥ {b}", i + 1, errs[i]));
        }
    }
    let check = if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join(", ")))
    };
    (check, Some(errs))
}

// ---------- criterion 5 ----------

fn protocol_counts(d: &Dataset) -> Check {
    // counts do not depend on how well each run converges, so a three-step
    // run on a one-layer net stands in for the full training budget
    let tiny = TrainConfig {
        widths: vec![2, 8, 1],
        max_iter: 3,
        ..TrainConfig::for_pde(d.pde)
    };
    let spec = PdeSpec::preset(d.pde).unwrap();
    let sweep = SweepConfig::for_pde(d.pde);
    let greedy = sweep_greedy(&d.snapshot, &spec, &sweep, &tiny).unwrap();
    ensure(greedy.len() == 80, format!("greedy sweep: {} records", greedy.len()))?;
    let (lo, hi) = greedy_count_range(&d.snapshot, &sweep).unwrap();
    let random = sweep_random(&d.snapshot, &spec, lo, hi, &sweep, &tiny).unwrap();
    ensure(random.len() == 55, format!("random baseline: {} records", random.len()))?;
    let points = error_points(&greedy, 0);
    let c = kmeans(&points, 20, 100, 0).map_err(|e| e.to_string())?;
    ensure(
        c.centroids.len() == 20 && c.init_inertias.len() == 100,
        format!("{} centroids from {} initializations", c.centroids.len(), c.init_inertias.len()),
    )?;
    Ok(format!(
        "80 greedy records, 55 random over sizes {lo}..={hi}, 20 centroids from 100 initializations on {} points",
        points.len()
    ))
}

// ---------- criterion 6 ----------

fn property_suites() -> Check {
    let mut parts = Vec::new();

    // (a) jets vs Richardson differences
    let net = random_net(&[2, 24, 24, 1], 30.0, 41);
    let mut r = rng(42);
    let mut worst = [0.0f64; 3];
    for _ in 0..100 {
        let (t, x) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let j = forward_jet(&net, t, x, 3).unwrap();
        let fd = [
            richardson(|e| net.forward(t, x + e), 1e-4),
            richardson(|e| forward_jet(&net, t, x + e, 1).unwrap().du_dx, 1e-4),
            richardson(|e| forward_jet(&net, t, x + e, 2).unwrap().d2u_dx2, 1e-4),
        ];
        for (k, w) in worst.iter_mut().enumerate() {
            *w = w.max(rel(j.x_derivative(k as u8 + 1), fd[k]));
        }
    }
    ensure(worst.iter().all(|w| *w < 1e-5), format!("(a) jet errors {worst:?}"))?;
    parts.push(format!("(a) {:.1e}", worst.iter().cloned().fold(0.0, f64::max)));

    // (b) composite-loss gradient
    let net = random_net(&[2, 8, 8, 1], 30.0, 43);
    let coords: Vec<(f64, f64)> = (0..16).map(|_| (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
    let values: Vec<f64> = coords.iter().map(|(t, x)| (2.0 * x + t).cos()).collect();
    let (spec, scales, w) = (PdeSpec::kdv(), DomainScales::new(20.0, 30.0).unwrap(), LossWeights::default());
    let eval = composite_loss(&net, &coords, &values, &spec, scales, w).unwrap();
    let mut gworst = 0.0f64;
    for i in 0..net.num_params() {
        let fd = richardson(
            |e| {
                let mut n = net.clone();
                n.params_mut()[i] += e;
                composite_loss(&n, &coords, &values, &spec, scales, w).unwrap().total
            },
            1e-4,
        );
        gworst = gworst.max(rel(eval.grad.as_slice()[i], fd));
    }
    ensure(gworst < 1e-4, format!("(b) gradient error {gworst:e}"))?;
    parts.push(format!("(b) {gworst:.1e}"));

    // (c) least squares vs normal equations
    let mut lworst = 0.0f64;
    for seed in 0..20 {
        let a = random_matrix(30, 3, seed);
        let b: Vec<f64> = (0..30).map(|_| r.gen_range(-1.0..1.0)).collect();
        let x = qr_least_squares(&a, &b).unwrap();
        let o = normal_equations_3(&a, &b);
        for k in 0..3 {
            lworst = lworst.max((x[k] - o[k]).abs());
        }
    }
    ensure(lworst < 1e-10, format!("(c) {lworst:e}"))?;
    parts.push(format!("(c) {lworst:.1e}"));

    // (d) pivot order vs projection oracle
    for seed in 0..20 {
        let rows = 2 + (seed as usize % 7);
        let cols = 3 + (seed as usize * 5 % 10);
        let a = random_matrix(rows, cols, 100 + seed);
        let k = rows.min(cols);
        let got = &pivoted_qr(&a).pivots[..k];
        let want = greedy_projection_pivots(&a, k);
        ensure(got == want.as_slice(), format!("(d) {rows}×{cols}: {got:?} vs {want:?}"))?;
    }
    parts.push("(d) 20 matrices".into());

    // (e) truncation error
    let mut tworst = 0.0f64;
    for seed in 0..10 {
        let a = random_matrix(12, 9, 200 + seed);
        let f = svd(&a).unwrap();
        for rk in 1..9 {
            let direct = truncate(&f, rk).unwrap().reconstruct().distance(&a);
            let tail = f.singular_values[rk..].iter().map(|s| s * s).sum::<f64>().sqrt();
            tworst = tworst.max((direct - tail).abs() / tail);
        }
    }
    ensure(tworst < 1e-8, format!("(e) {tworst:e}"))?;
    parts.push(format!("(e) {tworst:.1e}"));

    // (f) scale covariance: u = sin(x − 2t) solves u_t = −2 u_x
    let adv = PdeSpec::new(
        "advection",
        vec![qdeim_pinn::estimator::FeatureTerm::from_pairs(&[(1, 1)]).unwrap()],
        None,
    )
    .unwrap();
    let pts: Vec<(f64, f64)> = (0..50).map(|_| (r.gen_range(0.0..3.0), r.gen_range(-5.0..5.0))).collect();
    let mut fworst = 0.0f64;
    for (s_t, s_x) in [(1.0, 1.0), (3.0, 5.0), (0.1, 40.0)] {
        let sc = DomainScales::new(s_t, s_x).unwrap();
        let jets: Vec<Jet> = pts
            .iter()
            .map(|&(t, x)| Jet {
                u: (x - 2.0 * t).sin(),
                du_dt: -2.0 * (x - 2.0 * t).cos() * s_t,
                du_dx: (x - 2.0 * t).cos() * s_x,
                x_order: 1,
                ..Jet::default()
            })
            .collect();
        let theta = build_theta(&jets, &adv, sc).unwrap();
        let p = solve_parameters(&theta, &time_derivatives(&jets, sc)).unwrap();
        fworst = fworst.max((p[0] + 2.0).abs());
    }
    ensure(fworst < 1e-8, format!("(f) {fworst:e}"))?;
    parts.push(format!("(f) {fworst:.1e}"));

    // (g) Lloyd inertia trace
    let cloud: Vec<(f64, f64)> = (0..400).map(|_| (r.gen_range(0.0..8.0), r.gen_range(-2.0..2.0))).collect();
    for seed in 0..10 {
        let init: Vec<(f64, f64)> = (0..9).map(|k| cloud[(seed * 31 + k * 17) % 400]).collect();
        let run = lloyd(&cloud, &init);
        ensure(
            run.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
            format!("(g) non-monotone trace {:?}", run.trace),
        )?;
        let oracle = partition_inertia(&cloud, &run.labels, 9);
        ensure((oracle - run.inertia).abs() < 1e-9 * oracle, "(g) inertia disagrees with oracle")?;
    }
    parts.push("(g) 10 runs".into());
    Ok(parts.join(", "))
}

// ---------- criterion 7 ----------

fn pipeline_bytes(d: &Dataset) -> Vec<Vec<u8>> {
    let spec = PdeSpec::preset(d.pde).unwrap();
    let samples = operating_samples(d);
    let mut sample_csv = Vec::new();
    samples.write_csv(&mut sample_csv).unwrap();
    let random = random_sample(&d.snapshot, 100, 7).unwrap();
    let mut random_csv = Vec::new();
    random.write_csv(&mut random_csv).unwrap();

    let cfg = TrainConfig {
        widths: vec![2, 32, 32, 1],
        max_iter: 25,
        seed: 3,
        ..TrainConfig::for_pde(d.pde)
    };
    let mut net = init_network(&cfg).unwrap();
    let r = train(&mut net, &samples, &spec, d.snapshot.scales(), &cfg).unwrap();
    let mut traj = Vec::new();
    r.write_trajectory_csv(&mut traj).unwrap();
    let summary = r.summary_json(false).unwrap().into_bytes();
    let ckpt = to_checkpoint_string(&net).into_bytes();

    let sweep = SweepConfig {
        t_divs: vec![1, 2],
        eps_count: 3,
        jobs: 2,
        ..SweepConfig::for_pde(d.pde)
    };
    let tiny = TrainConfig {
        max_iter: 3,
        widths: vec![2, 8, 1],
        ..cfg.clone()
    };
    let mut recs: Vec<ExperimentRecord> = sweep_greedy(&d.snapshot, &spec, &sweep, &tiny).unwrap();
    recs.iter_mut().for_each(|r| r.wall_time_s = 0.0);
    let mut rec_csv = Vec::new();
    export_results(&recs, &mut rec_csv, ResultFormat::Csv).unwrap();
    let clusters =
        serde_json::to_vec(&kmeans(&error_points(&recs, 0), 2, 10, 1).unwrap()).unwrap();
    vec![sample_csv, random_csv, traj, summary, ckpt, rec_csv, clusters]
}

fn determinism(d: &Dataset) -> Check {
    let a = pipeline_bytes(d);
    let b = pipeline_bytes(d);
    let names = ["samples", "random samples", "trajectory", "summary", "checkpoint", "sweep records", "clusters"];
    for ((x, y), name) in a.iter().zip(&b).zip(names) {
        ensure(x == y, format!("{name} differ between identical runs"))?;
    }
    Ok(format!("{} outputs byte-identical across two runs", names.len()))
}

// ---------- greedy vs random at the KdV operating point ----------

fn greedy_beats_random(d: &Dataset, greedy: &[f64]) -> Check {
    let cfg = TrainConfig::for_pde(d.pde);
    let n = operating_samples(d).len();
    let mut sums = vec![0.0; greedy.len()];
    for rep in 0..5 {
        let seed = baseline_seed(0, n, rep);
        let set = random_sample(&d.snapshot, n, seed).unwrap();
        let r = fit(d, &set, &TrainConfig { seed: cfg.seed ^ seed, ..cfg.clone() });
        for (s, e) in sums.iter_mut().zip(r.rel_errors.unwrap()) {
            *s += e.unwrap_or(f64::INFINITY);
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / 5.0).collect();
    let detail = format!("{n} samples: random mean errors {means:?}, greedy {greedy:?}");
    ensure(means.iter().zip(greedy).all(|(m, g)| m > g), detail.clone())?;
    Ok(detail)
}

fn run(label: &str, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(d) => {
            println!("PASS {label} [{secs:.1} s]: {d}");
            true
        }
        Err(d) => {
            println!("FAIL {label} [{secs:.1} s]: {d}");
            false
        }
    }
}

fn main() {
    let sets = [dataset("allen-cahn"), dataset("kdv"), dataset("burgers")];
    let (ac, kdv, burgers) = (&sets[0], &sets[1], &sets[2]);
    let mut all = Vec::new();

    all.push(run("1 sample counts", || sample_counts(&sets)));

    let mut kdv_errs = None;
    all.push(run("2 KdV recovery", || {
        let (c, e) = recovery(kdv, &[0.05, 0.10], "KdV");
        kdv_errs = e;
        c
    }));
    all.push(run("3 Burgers recovery", || recovery(burgers, &[0.02, 0.10], "Burgers").0));
    all.push(run("4 Allen-Cahn recovery", || recovery(ac, &[0.05, 0.05], "Allen-Cahn").0));

    all.push(run("5 protocol counts", || protocol_counts(kdv)));
    all.push(run("6 property suites", property_suites));
    all.push(run("7 determinism", || determinism(burgers)));
    all.push(run("note greedy vs random (KdV)", || match &kdv_errs {
        Some(g) => greedy_beats_random(kdv, g),
        None => Err("KdV greedy run unavailable".into()),
    }));

    let failed = all.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", all.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
