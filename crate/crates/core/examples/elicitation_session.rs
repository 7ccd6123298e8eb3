//! Enters comparisons into a session one at a time, the way the web front
//! end does, and watches the report appear once every player is linked.

use pcm_entropy::service::{EntryOutcome, SessionStore};

fn main() {
    let store = SessionStore::new();
    let labels = ["A", "B", "D", "F", "N", "S"].map(String::from).to_vec();
    let id = store.create(labels, None, None).expect("valid labels");

    let judgments = [
        ("A", "B", 1.39),
        ("A", "F", 0.76),
        ("A", "N", 0.90),
        ("A", "S", 0.73),
        ("B", "S", 0.77),
        ("D", "F", 0.95),
        ("D", "N", 0.77),
        ("F", "N", 0.52),
        ("F", "S", 1.05),
    ];
    for (a, b, v) in judgments {
        match store
            .set_entry(&id, &a.into(), &b.into(), v)
            .expect("valid entry")
        {
            EntryOutcome::Disconnected { components } => {
                println!("{a}-{b} = {v}: waiting, groups {components:?}")
            }
            EntryOutcome::Ok { report } => {
                println!("{a}-{b} = {v}: sdot {:.5}", report.sdot)
            }
        }
    }

    let r = store.report(&id, None, 3).expect("connected");
    println!("\nrevisit first:");
    for c in &r.top_k {
        println!(
            "  {}-{} (currently {}) contributes {:.5}",
            c.label_a, c.label_b, c.value, c.contribution
        );
    }
    println!("\n{}", store.export(&id, pcm_entropy::Format::Csv).unwrap());
}
