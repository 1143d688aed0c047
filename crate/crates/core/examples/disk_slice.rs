//! The smallest example: a unit disk cut by the line x = 1/2.

use orex::instances::disk_slice;
use orex::local::local_recover;

fn main() -> orex::error::Result<()> {
    let inst = disk_slice();
    let rep = local_recover(&inst.problem, &inst.obs)?;
    println!("center   {:.6?}", rep.estimate.as_slice());
    println!("radius^2 {:.6} (expected 0.75)", rep.radius * rep.radius);
    let (a, b) = &rep.cheb.witnesses;
    println!("witnesses {:.4?} / {:.4?}", a.as_slice(), b.as_slice());
    Ok(())
}
