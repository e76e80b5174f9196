//! Certifies the built-in instance and prints each condition's margin.

use blenderlab::axioms::{certify_model, CertifyOptions};
use blenderlab::model::default_instance;

fn main() -> blenderlab::Result<()> {
    let m = default_instance();
    let cert = certify_model(&m, &CertifyOptions::default())?;
    println!("status {:?}  alpha {:.6}  alpha' {:.6}", cert.status, cert.alpha, cert.alpha_prime);
    for (name, v) in &cert.conditions {
        println!("{name}: {:?} margin {:.6e}  ({})", v.status, v.margin, v.detail);
    }
    if let Some(a) = &cert.audit {
        println!("audit: {} disks, {} checks, {} violations", a.disks, a.checks, a.violations);
    }
    Ok(())
}
