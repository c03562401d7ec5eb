//! Density-increment search for a popular difference, checked against brute force.
//!
//! ```text
//! cargo run --release --example upper_search
//! ```

use popdiff::bohr::{diff_density, upper_search, Schedule, UpperOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> popdiff::Result<()> {
    let n = 1009;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 1.0 } else { 0.0 }).collect();

    let opts = UpperOptions { epsilon: 0.005, schedule: Schedule::default(), include_chi0: false };
    let t = upper_search(&f, &opts)?;
    for (i, l) in t.levels.iter().enumerate() {
        println!("B_{}: rho {:.4}, |S| = {}, |B| = {}, E[f_phi^3] = {:.5}", i + 1, l.rho, l.s_size, l.b_size, l.mean_cube);
    }
    println!("chosen i = {}, final |B| = {}, d = {}, density {:.5}", t.chosen_i, t.b_size, t.d, t.density);
    println!("target a^3 - eps = {:.5}, pass {}", t.alpha.powi(3) - t.epsilon, t.pass);

    let (best_d, best) = (1..n).map(|d| (d, diff_density(&f, d))).fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    println!("global brute-force max: d = {best_d}, density {best:.5}");
    Ok(())
}
