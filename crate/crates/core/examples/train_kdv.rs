//! Full pipeline on KdV: generate, sample greedily, train, report the
//! recovered coefficients. Pass an iteration count to shorten the run.

use qdeim_pinn::estimator::PdeSpec;
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig};
use qdeim_pinn::sampler::{qdeim_sample, QdeimConfig};
use qdeim_pinn::trainer::{init_network, train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PdeSpec::kdv();
    let s = generate_synthetic(&spec, &GeneratorConfig::preset("kdv")?)?;
    let samples = qdeim_sample(&s, &QdeimConfig::for_pde("kdv").expect("preset"))?;

    let mut cfg = TrainConfig::for_pde("kdv");
    if let Some(n) = std::env::args().nth(1) {
        cfg.max_iter = n.parse()?;
    }
    let mut net = init_network(&cfg)?;
    let r = train(&mut net, &samples, &spec, s.scales(), &cfg)?;

    for i in (0..r.iterations).step_by(200) {
        let l = &r.loss_history[i];
        println!("{i:5}  lr {:.2e}  mse {:.3e}  deri {:.3e}  p {:.4?}", r.lr_history[i], l.mse, l.deri, r.p_trajectory[i]);
    }
    println!("{} samples, {} iterations, {:.1} s", samples.len(), r.iterations, r.wall_time);
    println!("final p {:.5?}  (true {:?})", r.final_p, spec.true_p().unwrap_or(&[]));
    println!("relative errors {:?}", r.rel_errors);
    Ok(())
}
