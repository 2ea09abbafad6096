//! k-means summary of (sample count, error) pairs, raw and standardized.

use qdeim_pinn::harness::{kmeans, kmeans_with};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // errors that shrink with the sample count, plus noise
    let points: Vec<(f64, f64)> = (0..80)
        .map(|_| {
            let n = rng.gen_range(50.0..2000.0);
            (n, 5.0 / n + rng.gen_range(0.0..0.004))
        })
        .collect();

    let raw = kmeans(&points, 5, 100, 0)?;
    let std = kmeans_with(&points, 5, 100, 0, true)?;
    for (name, s) in [("raw", &raw), ("standardized", &std)] {
        let mut c = s.centroids.clone();
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        println!("{name:>12}: inertia {:.3e}", s.inertia);
        for (n, e) in c {
            println!("              n ≈ {n:7.1}  error ≈ {e:.5}");
        }
    }
    Ok(())
}
