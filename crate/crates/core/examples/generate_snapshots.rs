//! Integrates the three preset equations with the pseudo-spectral solver and
//! writes the snapshot matrices to a temporary directory.

use qdeim_pinn::estimator::PdeSpec;
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig};
use qdeim_pinn::snapshot::{load_snapshot, save_snapshot, SnapshotFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("qdeim-pinn-snapshots");
    std::fs::create_dir_all(&dir)?;
    for pde in ["burgers", "kdv", "allen-cahn"] {
        let spec = PdeSpec::preset(pde)?;
        let cfg = GeneratorConfig::preset(pde)?;
        let start = std::time::Instant::now();
        let s = generate_synthetic(&spec, &cfg)?;
        let path = dir.join(format!("{pde}.txt"));
        save_snapshot(&s, &path, SnapshotFormat::MatrixText)?;
        let back = load_snapshot(&path, SnapshotFormat::MatrixText)?;
        assert_eq!(back.values(), s.values());
        println!(
            "{pde:>10}: {}×{} on x∈[{}, {}), t∈[0, {}], max|u| = {:.3}, {:.2} s -> {}",
            s.n(),
            s.m(),
            cfg.x_min,
            cfg.x_max,
            cfg.t_max,
            s.values().max_abs(),
            start.elapsed().as_secs_f64(),
            path.display()
        );
    }
    Ok(())
}
