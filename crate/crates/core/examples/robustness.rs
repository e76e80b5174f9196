//! Re-certifies small random perturbations of the model and re-locates the
//! tangency for each. Takes a while in debug builds; use `--release`.

use blenderlab::axioms::{certify_model, CertifyOptions};
use blenderlab::model::default_instance;
use blenderlab::perturbation::{random_perturbations, robustness_suite, FoldSpec, RobustnessOptions};

fn main() -> blenderlab::Result<()> {
    let m = default_instance();
    let base = certify_model(&m, &CertifyOptions::default())?;
    let perturbations = random_perturbations(&m, 6, 0.1 * base.min_margin, 3);
    let opts = RobustnessOptions {
        certify: CertifyOptions { samples_per_class: 100, ..Default::default() },
        fold: FoldSpec { n_iter: 30, ..Default::default() },
        ..Default::default()
    };
    let report = robustness_suite(&m, &perturbations, &opts)?;
    for c in &report.cases {
        let t = c.tangency.as_ref();
        println!(
            "case {}: c1 {:.3e}  margin {:?}  t* {:?}  residual {:?}  passed {}",
            c.index,
            c.c1_bound,
            c.min_margin,
            t.map(|t| t.t_star),
            t.map(|t| t.residual_angle),
            c.passed
        );
    }
    println!("all passed: {}, max safe c1 {:.3e}", report.all_passed, report.max_safe_c1);
    Ok(())
}
