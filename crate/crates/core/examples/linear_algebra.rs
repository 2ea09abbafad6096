//! SVD, rank truncation, column-pivoted QR and least squares on small dense
//! matrices.

use qdeim_pinn::linalg::{pivoted_qr, qr_least_squares, svd, truncate, Matrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // smooth 8×6 matrix of numerical rank ~3
    let a = Matrix::from_fn(8, 6, |i, j| {
        let (x, t) = (i as f64 / 7.0, j as f64 / 5.0);
        (x + t).sin() + 0.1 * (3.0 * x * t).cos()
    });

    let f = svd(&a)?;
    println!("singular values: {:?}", f.singular_values.as_slice());
    for r in 1..=4 {
        let err = truncate(&f, r)?.reconstruct().distance(&a);
        let tail: f64 = f.singular_values[r..].iter().map(|s| s * s).sum::<f64>().sqrt();
        println!("rank {r}: ‖A − A_r‖ = {err:.3e}  (tail energy {tail:.3e})");
    }

    let qr = pivoted_qr(&a);
    println!("pivot order: {:?}", qr.pivots);

    let b: Vec<f64> = (0..8).map(|i| 1.0 + 0.5 * i as f64).collect();
    let x = qr_least_squares(&a.select_columns(&qr.pivots[..3]), &b)?;
    println!("least-squares fit on the first three pivots: {x:.4?}");
    Ok(())
}
