//! A single linear map that is optimal over every data vector.

use orex::global::{global_recover, solve_global};
use orex::instances::generic;
use orex::model::lift;

fn main() -> orex::error::Result<()> {
    let inst = generic(7, 5)?;
    let sol = solve_global(&inst.problem)?;
    println!("c0 = {:.6}  c1 = {:.6}", sol.c0, sol.c1);
    println!("tau = {:.6}  gwce = {:.6}", sol.tau_sharp, sol.gwce_sq.sqrt());
    println!("map is {} x {}", sol.map_matrix.nrows(), sol.map_matrix.ncols());

    let ops = lift(&inst.problem)?;
    let rec = global_recover(&sol, &ops, &inst.obs.stacked())?;
    println!("estimate {:.4?}", rec.estimate.as_slice());
    println!("bound    {:.6}", rec.bound);
    Ok(())
}
