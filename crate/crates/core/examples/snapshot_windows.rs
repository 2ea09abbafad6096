//! Builds a snapshot from a closed-form field, shows the normalized axes and
//! how the time axis is split into windows.

use qdeim_pinn::linalg::Matrix;
use qdeim_pinn::snapshot::{to_matrix_text, SnapshotMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x: Vec<f64> = (0..16).map(|i| -4.0 + 0.5 * i as f64).collect();
    let t: Vec<f64> = (0..11).map(|j| 0.2 * j as f64).collect();
    let u = Matrix::from_fn(16, 11, |i, j| (-(x[i] - t[j]).powi(2)).exp());
    let s = SnapshotMatrix::new("pulse", x, t, u)?;

    let sc = s.scales();
    println!("scales: s_t = {}, s_x = {}", sc.s_t, sc.s_x);
    println!("normalized x ends: {} .. {}", s.x_norm()[0], s.x_norm()[s.n() - 1]);
    for t_div in [1, 2, 3, 4] {
        let w = s.subdivide_time(t_div)?;
        let spans: Vec<String> = w.iter().map(|w| format!("[{}, {})", w.col_start, w.col_end)).collect();
        println!("t_div = {t_div}: {}", spans.join(" "));
    }
    let text = to_matrix_text(&s);
    println!("matrix-text header: {}", text.lines().next().unwrap_or(""));
    Ok(())
}
