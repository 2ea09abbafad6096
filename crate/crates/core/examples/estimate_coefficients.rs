//! Least-squares coefficient recovery from exact derivatives of a KdV soliton,
//! in normalized coordinates with the chain-rule correction applied.

use qdeim_pinn::estimator::{build_theta, relative_error, solve_parameters, time_derivatives, DomainScales, PdeSpec};
use qdeim_pinn::siren::Jet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PdeSpec::kdv();
    let scales = DomainScales::new(20.0, 30.0)?;
    let c: f64 = 1.0;
    let (a, k) = (c / 2.0, c.sqrt() / 2.0);

    let mut jets = Vec::new();
    for i in 0..40 {
        for j in 0..10 {
            let (x, t) = (-10.0 + 0.5 * i as f64, 0.2 * j as f64);
            let th = (k * (x - c * t)).tanh();
            let s = 1.0 - th * th;
            let ux = -2.0 * a * k * s * th;
            jets.push(Jet {
                u: a * s,
                du_dt: -c * ux * scales.s_t,
                du_dx: ux * scales.s_x,
                d2u_dx2: a * k * k * (4.0 * s * th * th - 2.0 * s * s) * scales.s_x.powi(2),
                d3u_dx3: a * k.powi(3) * (16.0 * s * s * th - 8.0 * s * th.powi(3)) * scales.s_x.powi(3),
                x_order: 3,
            });
        }
    }
    let theta = build_theta(&jets, &spec, scales)?;
    let p = solve_parameters(&theta, &time_derivatives(&jets, scales))?;
    println!("terms {:?}", spec.term_names());
    println!("estimated p = {p:?}");
    println!("relative errors {:?}", relative_error(spec.true_p().unwrap_or(&[]), &p)?);
    Ok(())
}
