//! A tilted disk strictly between the two saddles meets the local stable
//! set: follow it forward and read off a point whose orbit never leaves.

use blenderlab::blender_property::{intersect_disk, DEFAULT_STEPS};
use blenderlab::central_reduction::BranchPolicy;
use blenderlab::disks::{classify_position, UUDisk};
use blenderlab::model::default_instance;

fn main() -> blenderlab::Result<()> {
    let m = default_instance();
    let d = UUDisk::tilted(vec![0.3], 0.037, &[0.01]);
    println!("{:?}", classify_position(&d, &m)?);
    for policy in [BranchPolicy::PreferA, BranchPolicy::PreferB, BranchPolicy::Midpoint] {
        let w = intersect_disk(&d, &m, DEFAULT_STEPS, policy)?;
        println!(
            "{policy:?}: point ({:.6}, {:.12}, {:.12})  residual {:.1e}  clearance {:.3e}",
            w.point.xs[0], w.point.xc, w.point.xu[0], w.residual, w.min_clearance
        );
        println!("    {}...", &w.itinerary[..40]);
    }
    Ok(())
}
