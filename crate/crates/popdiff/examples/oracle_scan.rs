//! Per-difference 3-AP densities: spectral identity against the triple loop,
//! and the sparse profile of a model function against the dense one.
//!
//! ```text
//! cargo run --example oracle_scan
//! ```

use popdiff::group::{ap_profile_dense, ap_profile_sparse, dft, total_3ap_density, total_3ap_density_direct, Domain, DensityFn};
use popdiff::model::build_model_fn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> popdiff::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = 2 * rng.gen_range(1..100) + 1;
        let v: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let f = DensityFn::new(Domain::cyclic(n)?, v.clone())?;
        worst = worst.max((total_3ap_density(&f)? - total_3ap_density_direct(&v)).abs());
    }
    println!("spectral vs triple loop, 20 random f: max |diff| = {worst:.2e}");

    let g = build_model_fn(0.3, 211)?;
    let sparse = ap_profile_sparse(&dft(&g.values)?);
    let dense = ap_profile_dense(&g.values.values);
    let gap = sparse.densities.iter().zip(&dense.densities).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("sparse vs dense profile of g_0.3 on Z_211: max |diff| = {gap:.2e}");
    let (d, v) = dense.max_nonzero().expect("n > 1");
    println!("most popular difference d = {d} with density {v:.6} (a^3 = {:.6})", 0.3f64.powi(3));
    Ok(())
}
