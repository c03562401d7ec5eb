//! Build the five-frequency model function and check its moments.
//!
//! ```text
//! cargo run --example model_function -- 0.25 1009
//! ```

use popdiff::group::{ap_profile, total_3ap_density, Norm};
use popdiff::model::{build_model_fn, g_mean_cube, verify_model_properties, G_SUPPORT};

fn main() -> popdiff::Result<()> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().map_or(0.25, |s| s.parse().expect("alpha"));
    let n: u64 = args.next().map_or(1009, |s| s.parse().expect("n"));

    let g = build_model_fn(alpha, n)?;
    println!("g_alpha on Z_{n}, alpha = {alpha}");
    for r in G_SUPPORT {
        let c = g.spectrum.get(r);
        println!("  coeff[{r:>2}] = {:+.6} {:+.6}i", c.re, c.im);
    }

    let lambda = total_3ap_density(&g.values)?;
    println!("Lambda       = {lambda:.12}  (31/32 a^3 = {:.12})", 31.0 / 32.0 * alpha.powi(3));
    println!("E[g^3]       = {:.12}  (closed form {:.12})", g.values.mean_cube(), g_mean_cube(alpha));

    let profile = ap_profile(&g.values, Norm::Group)?;
    let (d, v) = profile.max_nonzero().expect("n > 1");
    println!("max_(d!=0)   = {v:.6} at d = {d}");

    for c in verify_model_properties(&g).checks {
        println!("  {:<16} {} measured {:.6} target {:.6}", c.name, if c.pass { "ok  " } else { "FAIL" }, c.measured, c.target);
    }
    Ok(())
}
