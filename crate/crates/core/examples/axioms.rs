//! Checks the six index axioms on random matrices and the conjecture that a
//! single perturbation looks the same on any consistent background.

use pcm_entropy::{axiom_suite, conjecture_check, ConjectureSpec, Pattern};

fn main() -> pcm_entropy::Result<()> {
    let report = axiom_suite(200, 1)?;
    for r in &report.requirements {
        let verdict = if r.passed() { "ok" } else { "FAILED" };
        println!("{} {:<32} {verdict}", r.requirement, r.name);
        for w in r.witnesses.iter().take(3) {
            println!("    sample {}: {}", w.sample, w.detail);
        }
    }

    for pattern in [
        Pattern::Complete { n: 5 },
        Pattern::Ring { n: 6 },
        Pattern::Random { n: 7, density: 0.3 },
    ] {
        let gap = conjecture_check(&ConjectureSpec {
            pattern,
            alpha: 3.0,
            trials: 50,
            seed: 2,
        })?;
        println!("{pattern:?}: max transition gap {gap:.2e}");
    }
    Ok(())
}
