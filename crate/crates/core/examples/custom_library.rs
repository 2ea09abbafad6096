//! A user-defined feature library read from JSON, recovered from a generated
//! Burgers snapshot with an extra distractor term.

use qdeim_pinn::estimator::PdeSpec;
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig};
use qdeim_pinn::sampler::{qdeim_sample, QdeimConfig};
use qdeim_pinn::trainer::{init_network, train, TrainConfig};

const LIBRARY: &str = r#"{
  "name": "burgers-plus",
  "terms": [
    [{"order": 0, "power": 1}, {"order": 1, "power": 1}],
    [{"order": 2, "power": 1}],
    [{"order": 0, "power": 2}]
  ],
  "true_p": [-1.0, 0.1, 0.0]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::temp_dir().join("qdeim-pinn-library.json");
    std::fs::write(&path, LIBRARY)?;
    let spec = PdeSpec::from_json_file(&path)?;
    println!("terms {:?}", spec.term_names());

    // data comes from the preset equation; the third term should vanish
    let gen = GeneratorConfig {
        n: 128,
        m: 51,
        ..GeneratorConfig::preset("burgers")?
    };
    let s = generate_synthetic(&PdeSpec::burgers(), &gen)?;
    let samples = qdeim_sample(&s, &QdeimConfig::new(2, 1e-6)?)?;
    let cfg = TrainConfig {
        max_iter: 300,
        ..TrainConfig::default()
    };
    let mut net = init_network(&cfg)?;
    let r = train(&mut net, &samples, &spec, s.scales(), &cfg)?;
    println!("{} samples, p = {:.4?}", samples.len(), r.final_p);
    Ok(())
}
