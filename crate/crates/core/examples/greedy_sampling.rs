//! Two-way Q-DEIM sampling of the KdV snapshot: per-window ranks and sample
//! counts across thresholds, then the reference operating point.

use qdeim_pinn::estimator::PdeSpec;
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig};
use qdeim_pinn::sampler::{qdeim_sample, QdeimConfig, QdeimPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = generate_synthetic(&PdeSpec::kdv(), &GeneratorConfig::preset("kdv")?)?;

    for t_div in 1..=4 {
        // window SVDs are computed once and reused for every threshold
        let plan = QdeimPlan::new(&s, t_div)?;
        let row: Vec<String> = [1e-2, 1e-3, 1e-4, 1e-6]
            .iter()
            .map(|&eps| plan.sample(eps, false).map(|set| format!("{eps:.0e}:{:>5}", set.len())))
            .collect::<qdeim_pinn::Result<_>>()?;
        println!("t_div = {t_div}  {}", row.join("  "));
    }

    let cfg = QdeimConfig::for_pde("kdv").expect("preset");
    let set = qdeim_sample(&s, &cfg)?;
    println!(
        "t_div = {}, eps = {:e}: ranks {:?} -> {} samples",
        cfg.t_div,
        cfg.eps_thr,
        set.ranks(),
        set.len()
    );
    for p in set.points.iter().take(4) {
        println!("  window {} at (t={:.3}, x={:.3}) u = {:.4}", p.window, p.t, p.x, p.u);
    }
    Ok(())
}
