//! Data-dependent recovery: the Chebyshev center of the slice, compared with the
//! global map on the same data.

use orex::global::solve_global;
use orex::instances::digital_twin;
use orex::local::{local_radius_bound, local_recover};
use orex::oracle::SampleBudget;

fn main() -> orex::error::Result<()> {
    for (seed, active) in [(3, true), (3, false)] {
        let inst = digital_twin(seed, 4, active)?;
        let local = local_recover(&inst.problem, &inst.obs)?;
        let global = solve_global(&inst.problem)?;
        println!("discrepancy on boundary: {active}");
        println!("  kernel case {:?}, certified {}", local.kernel_case, local.certified);
        println!("  tau_y {:.6}  c0 {:.6}  c1 {:.6}", local.tau_y, local.c0, local.c1);
        println!("  local radius {:.6}  global bound {:.6}", local.radius, global.gwce_sq.sqrt());

        let b = local_radius_bound(&inst.problem, &inst.obs, &SampleBudget::new(20_000, 0)?)?;
        println!("  radius in [{:.6}, {:.6}], sampled half diameter {:.6}", b.lower, b.upper, b.sampled);
    }
    Ok(())
}
