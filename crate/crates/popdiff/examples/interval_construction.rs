//! End-to-end interval construction on `[1, N]` followed by random sampling of a set.
//!
//! ```text
//! cargo run --release --example interval_construction -- 100000 0.01 5e-8
//! ```

use popdiff::interval::construct_and_sample;

fn main() -> popdiff::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().map_or(100_000, |s| s.parse().expect("N"));
    let alpha: f64 = args.next().map_or(0.01, |s| s.parse().expect("alpha"));
    let eps: f64 = args.next().map_or(5e-8, |s| s.parse().expect("epsilon"));

    let (out, set) = construct_and_sample(n, alpha, eps, &[3], 42, 8, 10)?;
    let c = &out.cert;
    println!("N = {}, N' = {}, q = {}, |supp xi| = {}", c.n_total, c.n_prime, c.q, c.xi_support);
    println!("function mean {:.9}, worst density {:.3e} at d = {} (bound {:.3e}), passes {}", c.mean, c.worst_density, c.worst_d, c.bound, c.passes());
    for w in &c.waived {
        println!("  waived at desk scale: {w}");
    }
    println!(
        "sampled |A| = {} (need >= {:.0}), max density {:.3e} at d = {}, {} attempt(s), ok = {}",
        set.elements.len(),
        alpha * n as f64,
        set.max_density,
        set.worst_d,
        set.attempts,
        set.size_ok && set.density_ok
    );
    Ok(())
}
