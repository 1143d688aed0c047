//! Compare solver bounds with what random sampling of the feasible set finds.

use orex::chebyshev::consistent_estimate;
use orex::global::solve_global;
use orex::instances::generic;
use orex::local::local_recover;
use orex::model::lift;
use orex::oracle::{sampled_gwce, sampled_half_diameter, sampled_lwce, SampleBudget};

fn main() -> orex::error::Result<()> {
    let inst = generic(11, 4)?;
    let ops = lift(&inst.problem)?;
    let y = inst.obs.stacked();
    let budget = SampleBudget::new(50_000, 1)?;

    let sol = solve_global(&inst.problem)?;
    let g = sampled_gwce(&sol.map_matrix, &ops, &budget)?;
    println!("global   bound {:.6}  sampled {:.6}", sol.gwce_sq.sqrt(), g);

    let local = local_recover(&inst.problem, &inst.obs)?;
    let d = sampled_half_diameter(&ops, &y, &budget)?;
    let l = sampled_lwce(&ops, &y, &local.estimate, &budget)?;
    println!("local    radius {:.6}  sampled lwce {:.6}  half diameter {:.6}", local.radius, l, d);

    let c = consistent_estimate(&ops, &y)?;
    let lc = sampled_lwce(&ops, &y, &c.estimate, &budget)?;
    println!("consistent bound {:.6}  sampled lwce {:.6}", c.lwce_factor2_bound, lc);
    Ok(())
}
