//! Progression-free sets: exhaustive maxima, the digit construction, and the
//! low-AP-density subsets of a cyclic group.
//!
//! ```text
//! cargo run --release --example behrend_sets
//! ```

use popdiff::behrend::{apfree_set, brute_max_apfree, is_apfree, low_ap_density_subset};

fn main() -> popdiff::Result<()> {
    print!("r_3(N), N = 1..=20:");
    for n in 1..=20 {
        print!(" {}", brute_max_apfree(n)?.0);
    }
    println!();

    for n in [100, 1000, 10_000, 100_000] {
        let s = apfree_set(n);
        println!("apfree_set({n:>6}): |A| = {:>5}, density {:.4}, AP-free {}", s.len(), s.density(), is_apfree(&s.elements));
    }

    for n in [55, 1009] {
        let x = low_ap_density_subset(n, 0.05)?;
        println!(
            "low-AP subset of Z_{n}: |X| = {}, density {:.4}, AP density {:.3e} <= bound {:.3e}: {} ({:?})",
            x.elements.len(),
            x.density,
            x.ap_density,
            x.bound,
            x.meets_bound,
            x.branch
        );
    }
    Ok(())
}
