//! Writes the local manifolds of both saddles as JSON records, ready for
//! plotting elsewhere.

use blenderlab::model::default_instance;

fn main() -> blenderlab::Result<()> {
    let m = default_instance();
    let lm = m.local_manifolds();
    let records = vec![
        lm.ws_p.to_record("ws_loc_p"),
        lm.ws_q.to_record("ws_loc_q"),
        lm.wuu_p.to_record("wuu_loc_p"),
        lm.wuu_q.to_record("wuu_loc_q"),
    ];
    println!("{}", serde_json::to_string_pretty(&records)?);
    Ok(())
}
