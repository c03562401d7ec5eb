//! Domains, the discrete Fourier transform and 3-AP density engines.
//!
//! Conventions: `f̂(r) = (1/n) Σ_x f(x) e(xr/n)` with `e(t) = exp(2πit)`, so
//! inversion reads `f(x) = Σ_r f̂(r) e(-xr/n)`. Interval domains store `f(1..=N)`
//! at indices `0..N`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest size transformed by the direct O(n²) sum; above this rustfft is used.
pub const DIRECT_DFT_MAX: usize = 4096;

/// Relative zero threshold for spectral support: `|c| > SUPPORT_EPS * n`.
pub const SUPPORT_EPS: f64 = 1e-10;

const RANGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Cyclic,
    Product,
    Interval,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: Kind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<u64>>,
}

impl Domain {
    pub fn cyclic(n: usize) -> Result<Self> {
        let d = Domain { kind: Kind::Cyclic, n, factors: None };
        d.validate()?;
        Ok(d)
    }

    pub fn product(factors: &[u64]) -> Result<Self> {
        let n = factors.iter().try_fold(1usize, |acc, &m| acc.checked_mul(m as usize));
        let n = n.ok_or_else(|| Error::Domain("product of factors overflows".into()))?;
        let d = Domain { kind: Kind::Product, n, factors: Some(factors.to_vec()) };
        d.validate()?;
        Ok(d)
    }

    pub fn interval(n: usize) -> Result<Self> {
        let d = Domain { kind: Kind::Interval, n, factors: None };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("empty domain".into()));
        }
        match self.kind {
            Kind::Interval => Ok(()),
            Kind::Cyclic | Kind::Product => {
                if self.n.is_multiple_of(2) {
                    return Err(Error::Domain(format!("group order {} is even", self.n)));
                }
                if self.kind == Kind::Product {
                    let fs = self
                        .factors
                        .as_ref()
                        .ok_or_else(|| Error::Domain("product domain without factors".into()))?;
                    check_distinct_primes(fs)?;
                    let prod: u128 = fs.iter().map(|&m| m as u128).product();
                    if prod != self.n as u128 {
                        return Err(Error::Domain(format!(
                            "factors multiply to {prod}, domain size is {}",
                            self.n
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_group(&self) -> bool {
        self.kind != Kind::Interval
    }
}

pub fn check_distinct_primes(fs: &[u64]) -> Result<()> {
    for (i, &m) in fs.iter().enumerate() {
        if !is_prime(m) {
            return Err(Error::Domain(format!("factor {m} is not prime")));
        }
        if fs[..i].contains(&m) {
            return Err(Error::Domain(format!("factor {m} repeated")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityFn {
    pub domain: Domain,
    pub values: Vec<f64>,
}

impl DensityFn {
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self> {
        domain.validate()?;
        if values.len() != domain.n {
            return Err(Error::Domain(format!(
                "{} values for a domain of size {}",
                values.len(),
                domain.n
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= -RANGE_TOL && **v <= 1.0 + RANGE_TOL))
        {
            return Err(Error::Domain(format!("value {v} at index {i} outside [0,1]")));
        }
        Ok(DensityFn { domain, values })
    }

    pub fn constant(domain: Domain, alpha: f64) -> Result<Self> {
        let n = domain.n;
        Self::new(domain, vec![alpha; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    pub fn mean_cube(&self) -> f64 {
        self.values.iter().map(|v| v * v * v).sum::<f64>() / self.len() as f64
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub n: usize,
    pub coeffs: Vec<Complex64>,
    pub support: Vec<usize>,
}

impl Spectrum {
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        let n = coeffs.len();
        let eps = SUPPORT_EPS * n as f64;
        let support = (0..n).filter(|&r| coeffs[r].norm() > eps).collect();
        Spectrum { n, coeffs, support }
    }

    pub fn get(&self, r: i64) -> Complex64 {
        self.coeffs[r.rem_euclid(self.n as i64) as usize]
    }

    /// Σ_r |f̂(r)|², which equals E|f|² by Parseval.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn inverse(&self) -> Vec<f64> {
        idft(&self.coeffs).into_iter().map(|c| c.re).collect()
    }
}

/// `e(t) = exp(2πit)` for `t = k/n`, tabulated.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect()
}

fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Unnormalized `Σ_x a(x) e(sign·xr/n)`.
fn transform(a: &[Complex64], sign: i32) -> Vec<Complex64> {
    let n = a.len();
    if n <= DIRECT_DFT_MAX {
        let w = twiddles(n);
        (0..n)
            .map(|r| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut k = 0usize;
                for x in a {
                    let t = w[k];
                    acc += x * if sign > 0 { t } else { t.conj() };
                    k += r;
                    if k >= n {
                        k -= n;
                    }
                }
                acc
            })
            .collect()
    } else {
        let mut buf = a.to_vec();
        // rustfft's inverse direction uses e^{+2πi jk/n}.
        fft_plan(n, sign > 0).process(&mut buf);
        buf
    }
}

/// Fourier coefficients of a complex vector over `Z_n`.
pub fn dft_complex(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len() as f64;
    transform(a, 1).into_iter().map(|c| c / n).collect()
}

pub fn dft_values(v: &[f64]) -> Vec<Complex64> {
    let a: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dft_complex(&a)
}

/// Fourier inversion: `f(x) = Σ_r c(r) e(-xr/n)`.
pub fn idft(c: &[Complex64]) -> Vec<Complex64> {
    transform(c, -1)
}

pub fn dft(f: &DensityFn) -> Result<Spectrum> {
    if !f.domain.is_group() {
        return Err(Error::Domain("interval domains have no Fourier transform; embed first".into()));
    }
    Ok(Spectrum::from_coeffs(dft_values(&f.values)))
}

/// `(f*g)(x) = E_y f(y) g(x-y)` over `Z_n`.
pub fn convolve(f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    if f.len() != g.len() {
        return Err(Error::Domain(format!("convolving sizes {} and {}", f.len(), g.len())));
    }
    let (a, b) = (dft_values(f), dft_values(g));
    let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(idft(&prod).into_iter().map(|c| c.re).collect())
}

/// `Σ_r f̂(r)² f̂(-2r)`.
pub fn lambda_spectral(c: &[Complex64]) -> f64 {
    let n = c.len();
    (0..n)
        .map(|r| c[r] * c[r] * c[(2 * (n - r)) % n])
        .sum::<Complex64>()
        .re
}

/// Total 3-AP density `E_{x,d} f(x)f(x+d)f(x+2d)`, all `d` including 0.
pub fn total_3ap_density(f: &DensityFn) -> Result<f64> {
    if !f.domain.is_group() {
        return Err(Error::Domain("total 3-AP density needs a group domain".into()));
    }
    Ok(lambda_spectral(&dft_values(&f.values)))
}

/// Same quantity by direct O(n²) summation.
pub fn total_3ap_density_direct(v: &[f64]) -> f64 {
    let n = v.len();
    let vv = tripled(v);
    (0..n).map(|d| cyclic_diff_sum(v, &vv, d)).sum::<f64>() / (n * n) as f64
}

fn tripled(v: &[f64]) -> Vec<f64> {
    let mut vv = Vec::with_capacity(3 * v.len());
    for _ in 0..3 {
        vv.extend_from_slice(v);
    }
    vv
}

fn cyclic_diff_sum(v: &[f64], vv: &[f64], d: usize) -> f64 {
    let n = v.len();
    let a = &vv[d..d + n];
    let b = &vv[2 * d..2 * d + n];
    v.iter().zip(a).zip(b).map(|((x, y), z)| x * y * z).sum()
}

fn interval_diff_sum(v: &[f64], d: usize) -> f64 {
    let len = v.len() - 2 * d;
    let (x, y, z) = (&v[..len], &v[d..d + len], &v[2 * d..2 * d + len]);
    x.iter().zip(y).zip(z).map(|((a, b), c)| a * b * c).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    Group,
    IntervalOverN,
    IntervalOverLen,
}

fn check_norm(f: &DensityFn, norm: Norm) -> Result<()> {
    match (f.domain.is_group(), norm) {
        (true, Norm::Group) => Ok(()),
        (false, Norm::IntervalOverN | Norm::IntervalOverLen) => Ok(()),
        _ => Err(Error::Domain(format!("normalization {norm:?} does not fit a {:?} domain", f.domain.kind))),
    }
}

/// Density of 3-APs with common difference `d`.
pub fn per_diff_density(f: &DensityFn, d: usize, norm: Norm) -> Result<f64> {
    check_norm(f, norm)?;
    let n = f.len();
    match norm {
        Norm::Group => {
            if d >= n {
                return Err(Error::Domain(format!("difference {d} outside Z_{n}")));
            }
            Ok((0..n)
                .map(|x| f.values[x] * f.values[(x + d) % n] * f.values[(x + 2 * d) % n])
                .sum::<f64>()
                / n as f64)
        }
        _ => {
            if 2 * d >= n {
                return Err(Error::Domain(format!("difference {d} needs 0 <= d < N/2 = {}", n as f64 / 2.0)));
            }
            let s = interval_diff_sum(&f.values, d);
            Ok(match norm {
                Norm::IntervalOverN => s / n as f64,
                _ => s / (n - 2 * d) as f64,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApProfile {
    pub norm: Norm,
    pub densities: Vec<f64>,
}

impl ApProfile {
    /// Largest entry over `d != 0` and its (smallest) argmax.
    pub fn max_nonzero(&self) -> Option<(usize, f64)> {
        argmax(&self.densities, 1)
    }

    pub fn min_nonzero(&self) -> Option<(usize, f64)> {
        self.densities
            .iter()
            .enumerate()
            .skip(1)
            .fold(None, |best: Option<(usize, f64)>, (d, &v)| match best {
                Some((_, b)) if b <= v => best,
                _ => Some((d, v)),
            })
    }

    pub fn mean(&self) -> f64 {
        mean(&self.densities)
    }
}

/// Argmax over `v[from..]`, ties to the smallest index.
pub fn argmax(v: &[f64], from: usize) -> Option<(usize, f64)> {
    v.iter()
        .enumerate()
        .skip(from)
        .fold(None, |best: Option<(usize, f64)>, (d, &x)| match best {
            Some((_, b)) if b >= x => best,
            _ => Some((d, x)),
        })
}

/// Per-difference densities for every admissible `d` (including `d = 0`).
/// Group domains take the sparse-spectrum path when `|supp f̂|²` is small.
pub fn ap_profile(f: &DensityFn, norm: Norm) -> Result<ApProfile> {
    check_norm(f, norm)?;
    if norm == Norm::Group {
        let spec = dft(f)?;
        let l = spec.support.len();
        if l * l * 8 <= f.len() {
            return Ok(ap_profile_sparse(&spec));
        }
        return Ok(ap_profile_dense(&f.values));
    }
    let n = f.len();
    let dmax = (n - 1) / 2;
    let densities = (0..=dmax)
        .into_par_iter()
        .map(|d| {
            let s = interval_diff_sum(&f.values, d);
            match norm {
                Norm::IntervalOverN => s / n as f64,
                _ => s / (n - 2 * d) as f64,
            }
        })
        .collect();
    Ok(ApProfile { norm, densities })
}

/// Direct O(n²) group profile.
pub fn ap_profile_dense(v: &[f64]) -> ApProfile {
    let n = v.len();
    let vv = tripled(v);
    let densities = (0..n)
        .into_par_iter()
        .map(|d| cyclic_diff_sum(v, &vv, d) / n as f64)
        .collect();
    ApProfile { norm: Norm::Group, densities }
}

/// Coefficients `c_k` with `E_x f(x)f(x+d)f(x+2d) = Re Σ_k c_k e(-dk/n)`,
/// collected over support triples `r1+r2+r3 = 0`, `k = r2 + 2 r3`.
pub fn sparse_phase_terms(spec: &Spectrum) -> BTreeMap<usize, Complex64> {
    let n = spec.n;
    let mut terms: BTreeMap<usize, Complex64> = BTreeMap::new();
    let eps = SUPPORT_EPS * n as f64;
    for &r1 in &spec.support {
        for &r2 in &spec.support {
            let r3 = (2 * n - r1 - r2) % n;
            let c3 = spec.coeffs[r3];
            if c3.norm() <= eps {
                continue;
            }
            let k = (r2 + 2 * r3) % n;
            *terms.entry(k).or_default() += spec.coeffs[r1] * spec.coeffs[r2] * c3;
        }
    }
    terms
}

/// O(n·ℓ²) group profile from a sparse spectrum.
pub fn ap_profile_sparse(spec: &Spectrum) -> ApProfile {
    let n = spec.n;
    let terms: Vec<(usize, Complex64)> = sparse_phase_terms(spec).into_iter().collect();
    let w = twiddles(n);
    let densities = (0..n)
        .into_par_iter()
        .map(|d| {
            terms
                .iter()
                .map(|&(k, c)| (c * w[(d * k) % n].conj()).re)
                .sum()
        })
        .collect();
    ApProfile { norm: Norm::Group, densities }
}

/// `tower(0) = 1`, `tower(m) = 2^tower(m-1)`. Heights above 5 do not fit in memory
/// and return `None`.
pub fn tower(m: u32) -> Option<BigUint> {
    if m > 5 {
        return None;
    }
    let mut t = BigUint::from(1u32);
    for _ in 0..m {
        let e = u64::try_from(&t).ok()?;
        t = BigUint::from(1u32) << e;
    }
    Some(t)
}

/// Least `m` with `tower(m) >= n`.
pub fn tower_height(n: &BigUint) -> u32 {
    let mut m = 0;
    let mut t = BigUint::from(1u32);
    while &t < n {
        m += 1;
        // 2^t >= n as soon as t >= bits(n).
        if t >= BigUint::from(n.bits()) {
            return m;
        }
        let e = u64::try_from(&t).expect("tower exponent below bit length fits in u64");
        t = BigUint::from(1u32) << e;
    }
    m
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (a as i128 % m as i128, m as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m as i128) as u64)
}

fn check_coprime(factors: &[u64]) -> Result<()> {
    for i in 0..factors.len() {
        if factors[i] == 0 {
            return Err(Error::Domain("zero modulus".into()));
        }
        for j in 0..i {
            if gcd(factors[i], factors[j]) != 1 {
                return Err(Error::Domain(format!("factors {} and {} are not coprime", factors[j], factors[i])));
            }
        }
    }
    Ok(())
}

/// Chinese-remainder coordinates of `x ∈ Z_n`, `n = ∏ factors`.
pub fn to_coords(x: u64, factors: &[u64]) -> Result<Vec<u64>> {
    check_coprime(factors)?;
    Ok(factors.iter().map(|&m| x % m).collect())
}

pub fn from_coords(coords: &[u64], factors: &[u64]) -> Result<u64> {
    check_coprime(factors)?;
    if coords.len() != factors.len() {
        return Err(Error::Domain("coordinate count differs from factor count".into()));
    }
    let n: u128 = factors.iter().map(|&m| m as u128).product();
    let mut x: u128 = 0;
    for (&c, &m) in coords.iter().zip(factors) {
        let rest = (n / m as u128) as u64;
        let inv = mod_inverse(rest % m, m).expect("coprime factors");
        let term = (c % m) as u128 * inv as u128 % m as u128 * rest as u128;
        x = (x + term) % n;
    }
    Ok(x as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut p = 3u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            return false;
        }
        p += 2;
    }
    true
}

/// Largest prime `<= n`.
pub fn prev_prime(n: u64) -> Option<u64> {
    (2..=n).rev().find(|&p| is_prime(p))
}
