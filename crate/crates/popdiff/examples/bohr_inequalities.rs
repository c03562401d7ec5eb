//! Regular Bohr sets and the inequality suite on seeded random instances.
//!
//! ```text
//! cargo run --release --example bohr_inequalities
//! ```

use popdiff::bohr::{bohr_set, inequality_suite, suite_instance, InstanceKind};

fn main() -> popdiff::Result<()> {
    let b = bohr_set(101, &[1], 0.1)?;
    println!("B({{1}}, 0.1) in Z_101: |B| = {}, regular {}", b.len(), b.is_regular()?);
    let r = b.regularize()?;
    println!("regularized radius {:.6}, |B| = {}", r.rho, r.len());

    let mut tested = 0;
    let mut worst: Option<(String, f64)> = None;
    for n in [101, 1009] {
        for kind in [InstanceKind::Continuity, InstanceKind::MeanCube] {
            for seed in 0..10 {
                let inst = suite_instance(n, kind, seed)?;
                let report = inequality_suite(&inst.f, &inst.b1, &inst.b2, inst.nu)?;
                tested += report.tested();
                for e in report.entries.iter().filter(|e| e.hypotheses_ok) {
                    if worst.as_ref().is_none_or(|w| e.margin < w.1) {
                        worst = Some((e.name.clone(), e.margin));
                    }
                }
            }
        }
    }
    let (name, margin) = worst.expect("some entry ran");
    println!("{tested} inequality checks, smallest margin {margin:.3e} ({name})");
    Ok(())
}
