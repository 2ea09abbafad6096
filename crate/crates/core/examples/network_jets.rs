//! Evaluates a sine network together with its exact input derivatives and
//! saves it as a checkpoint.

use qdeim_pinn::siren::{forward_jet, init_siren, load_checkpoint, save_checkpoint, DEFAULT_WIDTHS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = init_siren(&DEFAULT_WIDTHS, 30.0, 0)?;
    println!("widths {:?}: {} parameters", net.widths(), net.num_params());

    for (t, x) in [(0.0, -0.5), (0.5, 0.0), (1.0, 0.75)] {
        let j = forward_jet(&net, t, x, 3)?;
        println!(
            "u({t}, {x}) = {:+.4e}  u_t = {:+.3e}  u_x = {:+.3e}  u_xx = {:+.3e}  u_xxx = {:+.3e}",
            j.u, j.du_dt, j.du_dx, j.d2u_dx2, j.d3u_dx3
        );
    }

    let path = std::env::temp_dir().join("qdeim-pinn-example.ckpt");
    save_checkpoint(&net, &path)?;
    let back = load_checkpoint(&path)?;
    assert_eq!(back.params(), net.params());
    println!("checkpoint round trip ok: {}", path.display());
    Ok(())
}
