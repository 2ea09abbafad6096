//! Uniform random samples without replacement and the baseline size grid.

use qdeim_pinn::estimator::PdeSpec;
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig};
use qdeim_pinn::harness::baseline_seed;
use qdeim_pinn::sampler::{random_sample, sample_size_grid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = generate_synthetic(&PdeSpec::burgers(), &GeneratorConfig::preset("burgers")?)?;
    let sizes = sample_size_grid(52, 1404)?;
    println!("baseline sizes: {sizes:?}");
    for rep in 0..3 {
        let seed = baseline_seed(0, sizes[0], rep);
        let set = random_sample(&s, sizes[0], seed)?;
        let idx: Vec<usize> = set.points.iter().take(6).map(|p| p.t_index).collect();
        println!("rep {rep} (seed {seed}): first time indices {idx:?}");
    }
    Ok(())
}
