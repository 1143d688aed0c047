//! Recovering a smooth signal on a graph from a few accurate samples and many
//! samples of a perturbed copy.

use orex::instances::{graph_signal, ring_laplacian};
use orex::local::local_recover;

fn main() -> orex::error::Result<()> {
    let n = 12;
    let lap = ring_laplacian(n, 4, 1)?;
    let hi: Vec<usize> = (0..n).step_by(4).collect();
    let lo: Vec<usize> = (0..n).filter(|v| v % 4 != 0).collect();
    for eps1 in [0.05, 0.2, 1.0] {
        let inst = graph_signal(&lap, &hi, &lo, 1.0, eps1, 5)?;
        let rep = local_recover(&inst.problem, &inst.obs)?;
        println!("eps1 {eps1:<5} radius {:.5}  tau_y {:.4}", rep.radius, rep.tau_y);
    }
    Ok(())
}
