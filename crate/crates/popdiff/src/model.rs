//! The cosine model function `g_α` and the smoothness certificate for affine tuples.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{is_prime, lambda_spectral, Domain, DensityFn, Spectrum};

/// `g_α(x) = α - (α/2)cos(2πx/m) - (α/2)cos(4πx/m)` on `Z_m`.
pub fn g_value(alpha: f64, m: u64, x: u64) -> f64 {
    let t = 2.0 * std::f64::consts::PI * (x % m) as f64 / m as f64;
    alpha - 0.5 * alpha * t.cos() - 0.5 * alpha * (2.0 * t).cos()
}

pub fn g_values(alpha: f64, m: u64) -> Vec<f64> {
    (0..m).map(|x| g_value(alpha, m, x)).collect()
}

/// Closed-form spectrum: `ĝ(0) = α`, `ĝ(±1) = ĝ(±2) = -α/4`.
pub fn g_spectrum(alpha: f64, m: usize) -> Spectrum {
    let mut c = vec![Complex64::new(0.0, 0.0); m];
    c[0] += alpha;
    for r in [1, m - 1, 2, m - 2] {
        c[r] += -alpha / 4.0;
    }
    Spectrum::from_coeffs(c)
}

/// The five frequencies `0, 1, -1, 2, -2` in the order used for witness search.
pub const G_SUPPORT: [i64; 5] = [0, 1, -1, 2, -2];

#[derive(Clone, Debug)]
pub struct ModelFn {
    pub alpha: f64,
    pub n: u64,
    pub values: DensityFn,
    pub spectrum: Spectrum,
}

pub fn build_model_fn(alpha: f64, n: u64) -> Result<ModelFn> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::Precondition(format!("alpha {alpha} outside (0, 1/2]")));
    }
    if n < 5 || !is_prime(n) {
        return Err(Error::Precondition(format!("n = {n} is not an odd prime >= 5")));
    }
    let values = DensityFn::new(Domain::cyclic(n as usize)?, g_values(alpha, n))?;
    Ok(ModelFn { alpha, n, values, spectrum: g_spectrum(alpha, n as usize) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessCert {
    pub h: usize,
    pub a: Vec<u64>,
    pub supp: Vec<i64>,
    pub verdict: bool,
    /// Nonzero `(r_1..r_h)` with every `r_j ∈ supp` and `Σ r_j a_j ≡ 0`, centered representatives.
    pub witness: Option<Vec<i64>>,
}

/// Exhaustive search of `supp^h` for a nonzero relation `Σ r_j a_j ≡ 0 (mod n)`.
pub fn smooth_tuple_ok(supp: &[i64], a: &[u64], n: u64) -> Result<SmoothnessCert> {
    if a.is_empty() {
        return Err(Error::Precondition("empty tuple".into()));
    }
    if let Some(j) = a.iter().position(|&x| x % n == 0) {
        return Err(Error::Precondition(format!("a_{} is zero mod {n}", j + 1)));
    }
    let h = a.len();
    let l = supp.len();
    let ni = n as i128;
    let mut idx = vec![0usize; h];
    let mut witness = None;
    'outer: loop {
        let r: Vec<i64> = idx.iter().map(|&i| supp[i]).collect();
        if r.iter().any(|&x| x.rem_euclid(n as i64) != 0) {
            let s: i128 = r.iter().zip(a).map(|(&x, &y)| x as i128 * y as i128).sum();
            if s.rem_euclid(ni) == 0 {
                witness = Some(r);
                break;
            }
        }
        for j in (0..h).rev() {
            idx[j] += 1;
            if idx[j] < l {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(SmoothnessCert {
        h,
        a: a.to_vec(),
        supp: supp.to_vec(),
        verdict: witness.is_none(),
        witness,
    })
}

/// Draws tuples uniformly from `(Z_n∖{0})^h` until one is smooth. Returns the tuple,
/// its certificate and the number of draws used.
pub fn sample_smooth_tuple<R: Rng + ?Sized>(
    h: usize,
    n: u64,
    supp: &[i64],
    rng: &mut R,
    max_tries: usize,
) -> Result<(Vec<u64>, SmoothnessCert, usize)> {
    if max_tries == 0 || h == 0 {
        return Err(Error::Precondition("need h >= 1 and max_tries >= 1".into()));
    }
    for tries in 1..=max_tries {
        let a: Vec<u64> = (0..h).map(|_| rng.gen_range(1..n)).collect();
        let cert = smooth_tuple_ok(supp, &a, n)?;
        if cert.verdict {
            return Ok((a, cert, tries));
        }
    }
    Err(Error::RetriesExhausted(format!(
        "no smooth {h}-tuple mod {n} in {max_tries} draws"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub checks: Vec<PropertyCheck>,
}

impl ModelReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const MOMENT_TOL: f64 = 1e-9;

/// Direct evaluation of the range, mean, Λ, mean-cube, off-diagonal pair and
/// second-moment properties on the stored values.
pub fn verify_model_properties(g: &ModelFn) -> ModelReport {
    let v = &g.values.values;
    let a = g.alpha;
    let n = v.len() as f64;
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let sum: f64 = v.iter().sum();
    let sum2: f64 = v.iter().map(|x| x * x).sum();
    let mean = sum / n;
    let m2 = sum2 / n;
    let m3 = v.iter().map(|x| x * x * x).sum::<f64>() / n;
    let lambda = lambda_spectral(&crate::group::dft_values(v));
    let pairs = (sum * sum - sum2) / (n * (n - 1.0));
    let a3 = a * a * a;
    let checks = vec![
        PropertyCheck {
            name: "range".into(),
            pass: lo >= -MOMENT_TOL && hi <= (2.0 * a).min(1.0) + MOMENT_TOL,
            measured: if lo < 0.0 { lo } else { hi },
            target: 2.0 * a,
        },
        PropertyCheck { name: "mean".into(), pass: (mean - a).abs() <= MOMENT_TOL, measured: mean, target: a },
        PropertyCheck {
            name: "lambda".into(),
            pass: (lambda - 31.0 / 32.0 * a3).abs() <= MOMENT_TOL,
            measured: lambda,
            target: 31.0 / 32.0 * a3,
        },
        PropertyCheck {
            name: "mean_cube_bound".into(),
            pass: m3 <= 1.5 * a3 + MOMENT_TOL,
            measured: m3,
            target: 1.5 * a3,
        },
        PropertyCheck {
            name: "pairs".into(),
            pass: pairs <= a * a + MOMENT_TOL,
            measured: pairs,
            target: a * a,
        },
        PropertyCheck {
            name: "second_moment".into(),
            pass: (m2 - 1.25 * a * a).abs() <= MOMENT_TOL,
            measured: m2,
            target: 1.25 * a * a,
        },
    ];
    ModelReport { checks }
}

/// Exact mean cube of `g_α` on a prime `Z_n` with `n >= 7`: `(53/32)α³`.
pub fn g_mean_cube(alpha: f64) -> f64 {
    53.0 / 32.0 * alpha.powi(3)
}
