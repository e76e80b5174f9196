//! The central iterated function system: covering of the superposition
//! interval and a few itineraries.

use blenderlab::central_reduction::{BranchPolicy, CentralIfs};
use blenderlab::model::word_string;

fn main() -> blenderlab::Result<()> {
    for (lambda, mu) in [(1.2, 0.02), (1.5, 0.05), (1.9, 0.1)] {
        let ifs = CentralIfs::new(lambda, mu);
        let c = ifs.covering_check()?;
        println!(
            "lambda {lambda} mu {mu}: J = [0, {:.6}], overlap {:.6}, defects {:.1e} {:.1e}",
            ifs.superposition_end(),
            c.overlap_width,
            c.right_defect,
            c.left_defect
        );
    }
    // lambda = 2 leaves no overlap and is refused
    println!("lambda 2: {:?}", CentralIfs::new(2.0, 0.02).covering_check().err());

    let ifs = CentralIfs::new(1.2, 0.02);
    for x in [0.0, 0.01, 0.05, 0.09, 0.1] {
        let it = ifs.itinerary(x, 24, BranchPolicy::Midpoint)?;
        println!("x = {x:<5} {}", word_string(&it.word));
    }
    Ok(())
}
