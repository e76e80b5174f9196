//! Certificate status over a (lambda, mu) grid, printed as a text map.
//! `+` certified, `?` inconclusive, `.` refuted.

use blenderlab::axioms::{certify_model, CertifyOptions, Status};
use blenderlab::model::default_instance;

fn main() -> blenderlab::Result<()> {
    let m = default_instance();
    let opts = CertifyOptions { samples_per_class: 30, ..Default::default() };
    println!("mu / ((lambda - 1) delta) across, lambda down");
    for i in 1..=9 {
        let lambda = 1.0 + 0.1 * i as f64;
        let mut row = String::new();
        for j in 1..=12 {
            let mu = 0.1 * j as f64 * (lambda - 1.0) * m.delta;
            let c = certify_model(&m.with_params(lambda, mu, m.delta), &opts)?;
            row.push(match c.status {
                Status::Certified => '+',
                Status::Inconclusive => '?',
                Status::Refuted => '.',
            });
        }
        println!("{lambda:.1}  {row}");
    }
    Ok(())
}
