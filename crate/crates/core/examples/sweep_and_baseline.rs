//! A reduced greedy sweep and random baseline on Burgers, written as CSV.
//! Small networks and few iterations keep it to a few seconds.

use qdeim_pinn::estimator::PdeSpec;
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig};
use qdeim_pinn::harness::{greedy_count_range, sweep_greedy, sweep_random, write_records_csv, SweepConfig};
use qdeim_pinn::trainer::TrainConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PdeSpec::burgers();
    let gen = GeneratorConfig {
        n: 128,
        m: 51,
        ..GeneratorConfig::preset("burgers")?
    };
    let s = generate_synthetic(&spec, &gen)?;
    let sweep = SweepConfig {
        t_divs: vec![1, 2],
        eps_count: 4,
        repetitions: 2,
        ..SweepConfig::for_pde("burgers")
    };
    let train = TrainConfig {
        widths: vec![2, 32, 32, 1],
        max_iter: 50,
        ..TrainConfig::default()
    };

    let mut records = sweep_greedy(&s, &spec, &sweep, &train)?;
    let (lo, hi) = greedy_count_range(&s, &sweep)?;
    records.extend(sweep_random(&s, &spec, lo, hi, &sweep, &train)?);

    let mut out = Vec::new();
    write_records_csv(&records, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
