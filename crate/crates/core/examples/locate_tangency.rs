//! Nested search for a tangency between a quadratic fold and the local
//! stable set. Pass the apex as the first argument.

use blenderlab::folding::{locate_tangency, make_quadratic_fold, LocateOptions, DEFAULT_T_GRID};
use blenderlab::map::Saddle;
use blenderlab::model::default_instance;

fn main() -> blenderlab::Result<()> {
    let apex: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.05);
    let m = default_instance();
    let fold = make_quadratic_fold(&m, Saddle::P, apex, 0.005, DEFAULT_T_GRID)?;
    let r = locate_tangency(&fold, &m, &LocateOptions { n_iter: 60, tol: 0.0, alpha: None })?;
    for (i, w) in r.parameter_intervals.iter().enumerate().step_by(6) {
        println!("{i:>3}  [{:.12}, {:.12}]  width {:.3e}", w[0], w[1], w[1] - w[0]);
    }
    println!("t* = {:.15}", r.t_star);
    println!("itinerary {}", r.itinerary);
    println!("residual angle {:.2e}, cone margin {:.3e}", r.residual_angle, r.cone_margin);
    Ok(())
}
