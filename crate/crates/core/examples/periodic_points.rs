//! Counts periodic points of the affine model by word length.

use blenderlab::map::periodic_point;
use blenderlab::model::{default_instance, Branch};

fn main() -> blenderlab::Result<()> {
    let m = default_instance();
    for k in 1..=8usize {
        let mut count = 0;
        let mut worst: f64 = 0.0;
        for bits in 0..1u32 << k {
            let word: Vec<Branch> = (0..k).map(|j| if bits >> j & 1 == 0 { Branch::A } else { Branch::B }).collect();
            let p = periodic_point(&m, &word)?;
            let mut x = p.clone();
            for b in &word {
                x = m.apply_branch(*b, &x)?;
            }
            worst = worst.max(x.distance(&p));
            count += usize::from(m.cube().contains(&p, 0.0));
        }
        println!("k = {k}: {count} points in the cube, worst return error {worst:.1e}");
    }
    Ok(())
}
