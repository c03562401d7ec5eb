//! Bohr sets in `Z_n` (odd `n`), their measures, the numerical inequality suite, and
//! the mean-cube increment search for a popular difference.
//!
//! A point's *width* is `max_{r∈S} min(xr mod n, n - xr mod n)`, an integer in
//! `0..=(n-1)/2`. Membership in `B(S, ρ)` is `width <= ρn`, so every dilation of a set
//! with the same frequencies is a threshold on one integer array.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{argmax, convolve, dft_values, mean, mod_inverse};

/// Relative slack on `width <= ρn`, so radii rebuilt from `w/n` keep their boundary points.
const RADIUS_SLACK: f64 = 1e-12;
/// Negative margin tolerated before a suite entry counts as a violation.
pub const SUITE_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct BohrSet {
    pub n: u64,
    pub freqs: Vec<u64>,
    pub rho: f64,
    pub elements: Vec<u64>,
    width: Vec<u32>,
}

fn widths(n: u64, freqs: &[u64]) -> Vec<u32> {
    (0..n)
        .map(|x| {
            freqs
                .iter()
                .map(|&r| {
                    let k = (x as u128 * r as u128 % n as u128) as u64;
                    k.min(n - k) as u32
                })
                .max()
                .unwrap_or(0)
        })
        .collect()
}

fn threshold(rho: f64, n: u64) -> f64 {
    rho * n as f64 * (1.0 + RADIUS_SLACK)
}

/// `B(S, ρ)` enumerated exactly. Frequencies are reduced mod `n` and deduplicated.
pub fn bohr_set(n: u64, freqs: &[u64], rho: f64) -> Result<BohrSet> {
    if n.is_multiple_of(2) || n == 0 {
        return Err(Error::Domain(format!("Bohr sets need odd n, got {n}")));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("radius {rho} outside [0, 1]")));
    }
    let mut s: Vec<u64> = freqs.iter().map(|r| r % n).collect();
    s.sort_unstable();
    s.dedup();
    let width = widths(n, &s);
    Ok(from_widths(n, s, rho, width))
}

fn from_widths(n: u64, freqs: Vec<u64>, rho: f64, width: Vec<u32>) -> BohrSet {
    let t = threshold(rho, n);
    let elements = (0..n).filter(|&x| width[x as usize] as f64 <= t).collect();
    BohrSet { n, freqs, rho, elements, width }
}

impl BohrSet {
    pub fn codim(&self) -> usize {
        self.freqs.len()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.width[(x % self.n) as usize] as f64 <= threshold(self.rho, self.n)
    }

    pub fn width(&self, x: u64) -> u32 {
        self.width[(x % self.n) as usize]
    }

    /// `(B)_ν`: same frequencies, radius `νρ`.
    pub fn dilate(&self, nu: f64) -> Result<BohrSet> {
        let r = nu * self.rho;
        if !(0.0..=1.0 + 1e-12).contains(&r) {
            return Err(Error::Domain(format!("dilated radius {r} outside [0, 1]")));
        }
        Ok(from_widths(self.n, self.freqs.clone(), r.min(1.0), self.width.clone()))
    }

    /// `2·B`, the Bohr set with frequencies `r/2` and the same radius.
    pub fn double(&self) -> BohrSet {
        let half = mod_inverse(2, self.n).expect("n odd");
        let s: Vec<u64> = self.freqs.iter().map(|&r| (r as u128 * half as u128 % self.n as u128) as u64).collect();
        bohr_set(self.n, &s, self.rho).expect("same radius, same n")
    }

    pub fn is_subset_of(&self, other: &BohrSet) -> bool {
        self.n == other.n && self.elements.iter().all(|&x| other.contains(x))
    }

    fn shell(&self, delta: f64, inclusive_lower: bool) -> usize {
        let lo = (1.0 - delta) * self.rho * self.n as f64;
        let hi = threshold((1.0 + delta) * self.rho, self.n);
        self.width
            .iter()
            .filter(|&&w| {
                let w = w as f64;
                w <= hi && if inclusive_lower { w >= lo } else { w > lo }
            })
            .count()
    }

    /// Regularity `|(B)_{1+δ} \ (B)_{1-δ}| <= 160δd|B|` for every `0 < δ <= 1/(80d)`.
    ///
    /// The left side is a step function of δ, so it suffices to test each breakpoint,
    /// both at the point and immediately to its right.
    pub fn is_regular(&self) -> Result<bool> {
        Ok(self.regularity_violation()?.is_none())
    }

    /// First violating `δ` with the shell size, if any.
    pub fn regularity_violation(&self) -> Result<Option<(f64, usize)>> {
        let d = self.codim();
        if d == 0 {
            return Err(Error::Precondition("regularity needs codimension >= 1".into()));
        }
        let dmax = 1.0 / (80.0 * d as f64);
        let size = self.len() as f64;
        let rn = self.rho * self.n as f64;
        if rn == 0.0 {
            // Radius 0: every dilation is the same set.
            return Ok(None);
        }
        let mut cands: Vec<f64> = self
            .distinct_widths()
            .into_iter()
            .map(|w| {
                let w = w as f64;
                if w > rn { w / rn - 1.0 } else { 1.0 - w / rn }
            })
            .filter(|&dl| (0.0..=dmax).contains(&dl))
            .collect();
        cands.push(dmax);
        cands.sort_by(f64::total_cmp);
        cands.dedup();
        for dl in cands {
            let bound = 160.0 * dl * d as f64 * size;
            let at = self.shell(dl, false);
            let right = if dl < dmax { self.shell(dl, true) } else { at };
            let worst = at.max(right);
            if worst as f64 > bound * (1.0 + 1e-12) {
                return Ok(Some((dl, worst)));
            }
        }
        Ok(None)
    }

    fn distinct_widths(&self) -> Vec<u32> {
        let mut w = self.width.clone();
        w.sort_unstable();
        w.dedup();
        w
    }

    /// Largest `ν ∈ [1/2, 1]` making `(B)_ν` regular.
    ///
    /// A radius equal to some attained width is never regular (the boundary shell
    /// survives as δ → 0), so candidates are `ρ`, `ρ/2`, and the geometric mean of each
    /// pair of consecutive attained widths inside `[ρ/2, ρ]`. A 4096-point grid is the
    /// fallback.
    pub fn find_regular_scale(&self) -> Result<f64> {
        if self.codim() == 0 {
            return Err(Error::Precondition("regularity needs codimension >= 1".into()));
        }
        let rn = self.rho * self.n as f64;
        let ws = self.distinct_widths();
        let mut cands = vec![1.0, 0.5];
        for pair in ws.windows(2) {
            let (a, b) = (pair[0] as f64, pair[1] as f64);
            let g = if a == 0.0 { b / 2.0 } else { (a * b).sqrt() };
            let nu = g / rn;
            if (0.5..=1.0).contains(&nu) {
                cands.push(nu);
            }
        }
        if let Some(&top) = ws.last() {
            let nu = (top as f64 + 0.5) / rn;
            if (0.5..=1.0).contains(&nu) {
                cands.push(nu);
            }
        }
        cands.sort_by(|a, b| b.total_cmp(a));
        cands.dedup();
        for &nu in &cands {
            if self.dilate(nu)?.is_regular()? {
                return Ok(nu);
            }
        }
        for k in (0..=4096).rev() {
            let nu = 0.5 + 0.5 * k as f64 / 4096.0;
            if self.dilate(nu)?.is_regular()? {
                return Ok(nu);
            }
        }
        Err(Error::Degenerate(format!(
            "no regular dilation of B(|S| = {}, rho = {}) in [1/2, 1]",
            self.codim(),
            self.rho
        )))
    }

    /// `(B)_ν` at the largest regular scale.
    pub fn regularize(&self) -> Result<BohrSet> {
        if self.codim() == 0 {
            return Ok(self.clone());
        }
        self.dilate(self.find_regular_scale()?)
    }

    /// `β_B = n·1_B / |B|`.
    pub fn beta(&self) -> Measure {
        let s = self.n as f64 / self.len() as f64;
        let mut v = vec![0.0; self.n as usize];
        for &x in &self.elements {
            v[x as usize] = s;
        }
        Measure { values: v }
    }

    /// `φ_B = β_B * β_B`, computed by exact counting of representations.
    pub fn phi(&self) -> Measure {
        let n = self.n as usize;
        let mut counts = vec![0u64; n];
        for &a in &self.elements {
            for &b in &self.elements {
                counts[(a as usize + b as usize) % n] += 1;
            }
        }
        let s = n as f64 / (self.len() as f64 * self.len() as f64);
        Measure { values: counts.into_iter().map(|c| c as f64 * s).collect() }
    }
}

/// Nonnegative function with mean 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    pub values: Vec<f64>,
}

impl Measure {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Domain("measure values must be finite and nonnegative".into()));
        }
        let m = mean(&values);
        if (m - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("measure mean {m} differs from 1")));
        }
        Ok(Measure { values })
    }

    /// Point mass at 0 with value `n`.
    pub fn delta(n: usize) -> Self {
        let mut v = vec![0.0; n];
        v[0] = n as f64;
        Measure { values: v }
    }

    pub fn uniform(n: usize) -> Self {
        Measure { values: vec![1.0; n] }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] > 0.0).collect()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

/// `f_κ = f * κ`, with `(f*κ)(x) = E_y f(x-y)κ(y)`.
pub fn smooth(f: &[f64], kappa: &Measure) -> Result<Vec<f64>> {
    if f.len() != kappa.values.len() {
        return Err(Error::Domain("smoothing needs equal sizes".into()));
    }
    let n = f.len();
    let supp = kappa.support();
    // Sparse measures are convolved directly; this keeps point masses exact.
    if supp.len() * 8 <= n {
        let mut out = vec![0.0; n];
        for &y in &supp {
            let w = kappa.values[y] / n as f64;
            for (x, o) in out.iter_mut().enumerate() {
                *o += w * f[(x + n - y) % n];
            }
        }
        return Ok(out);
    }
    convolve(f, &kappa.values)
}

/// `E_x f(x)f(x+d)f(x+2d)` in `Z_n`.
pub fn diff_density(f: &[f64], d: usize) -> f64 {
    let n = f.len();
    let d = d % n;
    (0..n).map(|x| f[x] * f[(x + d) % n] * f[(x + 2 * d) % n]).sum::<f64>() / n as f64
}

/// `Λ_φ(f) = E_{x,d} f(x)f(x+d)f(x+2d)φ(d)` by direct summation over `supp φ`.
pub fn lambda_weighted(f: &[f64], phi: &Measure) -> Result<f64> {
    if f.len() != phi.values.len() {
        return Err(Error::Domain("Λ_φ needs equal sizes".into()));
    }
    let n = f.len() as f64;
    let terms: Vec<f64> = phi.support().par_iter().map(|&d| phi.values[d] * diff_density(f, d)).collect();
    Ok(terms.iter().sum::<f64>() / n)
}

/// `a³+b³+c³+3abc - Σ_sym a²b`.
pub fn schur_gap(a: f64, b: f64, c: f64) -> Result<f64> {
    if a < 0.0 || b < 0.0 || c < 0.0 {
        return Err(Error::Domain(format!("Schur needs nonnegative inputs, got ({a}, {b}, {c})")));
    }
    let lhs = a * a * a + b * b * b + c * c * c + 3.0 * a * b * c;
    let rhs = a * a * b + b * b * a + a * a * c + c * c * a + b * b * c + c * c * b;
    Ok(lhs - rhs)
}

/// `⌊2 log₂(2/ε)⌋`, the last index the increment lemma may need.
pub fn increment_horizon(epsilon: f64) -> usize {
    (2.0 * (2.0 / epsilon).log2()).floor() as usize
}

/// Least 1-based `i` with `2a_i - a_{i+1} >= α³ - ε/2`.
pub fn pick_increment_index(a: &[f64], alpha: f64, epsilon: f64) -> Result<usize> {
    let a3 = alpha.powi(3);
    if let Some(v) = a.iter().find(|&&v| v < a3 - 1e-12 || v > 1.0 + 1e-12) {
        return Err(Error::Precondition(format!("a_i = {v} outside [alpha^3, 1]")));
    }
    for i in 0..a.len().saturating_sub(1) {
        if 2.0 * a[i] - a[i + 1] >= a3 - epsilon / 2.0 {
            return Ok(i + 1);
        }
    }
    let h = increment_horizon(epsilon);
    Err(Error::Precondition(if a.len() <= h {
        format!("{} terms without an increment index; the guarantee needs {}", a.len(), h + 1)
    } else {
        "no increment index within the horizon: inputs break the lemma".into()
    }))
}

// ---------------------------------------------------------------------------
// Inequality suite

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub hypotheses_ok: bool,
    pub hypotheses: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; the inequality reads `lhs >= rhs`.
    pub margin: f64,
}

impl SuiteEntry {
    pub fn violated(&self) -> bool {
        self.hypotheses_ok && self.margin < -SUITE_TOL
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
}

impl SuiteReport {
    pub fn violations(&self) -> Vec<&SuiteEntry> {
        self.entries.iter().filter(|e| e.violated()).collect()
    }

    pub fn tested(&self) -> usize {
        self.entries.iter().filter(|e| e.hypotheses_ok).count()
    }

    pub fn get(&self, name: &str) -> Option<&SuiteEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    fn push(&mut self, name: &str, ok: bool, hyp: String, lhs: f64, rhs: f64) {
        self.entries.push(SuiteEntry { name: name.into(), hypotheses_ok: ok, hypotheses: hyp, lhs, rhs, margin: lhs - rhs });
    }
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn moment(v: &[f64], k: i32) -> f64 {
    v.iter().map(|x| x.powi(k)).sum::<f64>() / v.len() as f64
}

/// `sup_r |f̂(r) - f̂_φ(r)|` over all `n` frequencies.
pub fn sup_fourier_gap(f: &[f64], g: &[f64]) -> f64 {
    let (a, b) = (dft_values(f), dft_values(g));
    a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Evaluates every inequality of the Bohr toolkit on `(f, B₁, B₂, ν)`. Entries record
/// whether their hypotheses hold; only those entries can be violations.
pub fn inequality_suite(f: &[f64], b1: &BohrSet, b2: &BohrSet, nu: f64) -> Result<SuiteReport> {
    let n = b1.n as usize;
    if f.len() != n || b2.n != b1.n {
        return Err(Error::Domain("suite inputs live on different groups".into()));
    }
    if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain("f must take values in [0, 1]".into()));
    }
    let d1 = b1.codim().max(1) as f64;
    let reg1 = b1.codim() == 0 || b1.is_regular()?;
    let reg2 = b2.codim() == 0 || b2.is_regular()?;
    let (beta1, phi1) = (b1.beta(), b1.phi());
    let (beta2, phi2) = (b2.beta(), b2.phi());
    let f_phi1 = smooth(f, &phi1)?;
    let f_phi2 = smooth(f, &phi2)?;
    let f_beta2 = smooth(f, &beta2)?;
    let mut rep = SuiteReport::default();

    // Continuity, with τ uniform on (B₁)_ν.
    let b1nu = b1.dilate(nu)?;
    let tau = b1nu.beta();
    let cont_ok = reg1 && nu <= 1.0 / (80.0 * d1);
    let hyp = format!("B1 regular: {reg1}; nu = {nu:e} <= 1/(80 d1) = {:e}", 1.0 / (80.0 * d1));
    let rhs = -160.0 * nu * d1;
    let bt = smooth(&beta1.values, &tau)?;
    rep.push("continuity_beta", cont_ok, hyp.clone(), -l1_diff(&bt, &beta1.values), rhs);
    let pt = smooth(&phi1.values, &tau)?;
    rep.push("continuity_phi", cont_ok, hyp.clone(), -l1_diff(&pt, &phi1.values), rhs);
    let f_tau = smooth(f, &tau)?;
    for (name, kappa) in [("continuity_f_beta", &beta1), ("continuity_f_phi", &phi1)] {
        let lhs = smooth(&f_tau, kappa)?;
        let fk = smooth(f, kappa)?;
        rep.push(name, cont_ok, hyp.clone(), -l1_diff(&lhs, &fk), rhs);
    }

    // Jensen-Bohr moments.
    let base = reg1 && reg2 && nu <= 1.0 / (80.0 * d1);
    let in_half = b2.is_subset_of(&b1.dilate(nu / 2.0)?);
    let in_full = b2.is_subset_of(&b1nu);
    for k in 1..=3 {
        let target = moment(&f_phi1, k) - 160.0 * nu * d1 * k as f64;
        rep.push(
            &format!("jensen_phi_k{k}"),
            base && in_half,
            format!("regular: {reg1}/{reg2}; B2 in (B1)_(nu/2): {in_half}"),
            moment(&f_phi2, k),
            target,
        );
        rep.push(
            &format!("jensen_beta_k{k}"),
            base && in_full,
            format!("regular: {reg1}/{reg2}; B2 in (B1)_nu: {in_full}"),
            moment(&f_beta2, k),
            target,
        );
    }

    // Counting lemma, stated form with the square root.
    let sup = sup_fourier_gap(f, &f_phi2);
    let ef2 = moment(f, 2);
    let lam_f = lambda_weighted(f, &phi1)?;
    let lam_s = lambda_weighted(&f_phi2, &phi1)?;
    let ratio = n as f64 / b1.len() as f64;
    rep.push("counting_lemma", true, "none".into(), lam_s, lam_f - 3.0 * sup * ef2 * ratio.sqrt());
    rep.push("counting_lemma_linear", true, "none".into(), lam_s, lam_f - 3.0 * sup * ef2 * ratio);

    // Schur over every (x, d).
    let min_gap = (0..n)
        .into_par_iter()
        .map(|d| {
            (0..n)
                .map(|x| schur_gap(f_phi2[x], f_phi2[(x + d) % n], f_phi2[(x + 2 * d) % n]).unwrap_or(f64::NEG_INFINITY))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    rep.push("schur", true, "values of f_phi2 are nonnegative".into(), min_gap, 0.0);

    // Mean-cube increment over the regular B = (B₁)_{δν/2}.
    let b1d = b1.double();
    let contain = b2.is_subset_of(&b1.dilate(nu * nu / 8.0)?) && b2.is_subset_of(&b1d.dilate(nu * nu / 8.0)?);
    let mc_ok = reg1 && reg2 && nu <= 1.0 / (1000.0 * d1) && contain;
    let half = b1.dilate(nu / 2.0)?;
    let b = half.regularize()?;
    let lam = lambda_weighted(&f_phi2, &b.phi())?;
    let target = 2.0 * moment(&f_phi1, 3) - moment(&f_phi2, 3) - 1920.0 * nu * d1;
    rep.push(
        "mean_cube_increment",
        mc_ok,
        format!(
            "regular: {reg1}/{reg2}; nu = {nu:e} <= 1/(1000 d1) = {:e}; B2 in both nu^2/8 dilations: {contain}",
            1.0 / (1000.0 * d1)
        ),
        lam,
        target,
    );
    Ok(rep)
}

/// Which lemma family a random suite instance is built to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    /// `ν = 1/(80d₁)` and `B₂ ⊆ (B₁)_{ν/2}`.
    Continuity,
    /// `ν = 1/(1000d₁)` and `B₂` inside both `ν²/8` dilations.
    MeanCube,
}

#[derive(Clone, Debug)]
pub struct SuiteInstance {
    pub f: Vec<f64>,
    pub b1: BohrSet,
    pub b2: BohrSet,
    pub nu: f64,
}

/// Seeded random instance meeting the hypotheses of `kind`.
///
/// `f` is a clipped random trigonometric polynomial, so smoothing changes it visibly.
pub fn suite_instance(n: u64, kind: InstanceKind, seed: u64) -> Result<SuiteInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nn = n as usize;
    let terms: Vec<(u64, f64, f64)> = (0..3).map(|_| (rng.gen_range(1..n), rng.gen_range(0.05..0.3), rng.gen::<f64>())).collect();
    let base = rng.gen_range(0.2..0.6);
    let f: Vec<f64> = (0..nn)
        .map(|x| {
            let s: f64 = terms
                .iter()
                .map(|&(r, a, ph)| a * (std::f64::consts::TAU * ((x as u64 * r % n) as f64 / n as f64 + ph)).cos())
                .sum();
            (base + s + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0)
        })
        .collect();
    let k = rng.gen_range(1..=2);
    let s1: Vec<u64> = (0..k).map(|_| rng.gen_range(1..n)).collect();
    let rho1 = rng.gen_range(0.1..0.9);
    let b1 = bohr_set(n, &s1, rho1)?.regularize()?;
    let d1 = b1.codim() as f64;
    let (nu, b2) = match kind {
        InstanceKind::Continuity => {
            let nu = 1.0 / (80.0 * d1);
            let s2: Vec<u64> = b1.freqs.iter().copied().chain([rng.gen_range(1..n)]).collect();
            let b2 = bohr_set(n, &s2, b1.rho * nu / 2.0 * rng.gen_range(0.5..1.0))?.regularize()?;
            (nu, b2)
        }
        InstanceKind::MeanCube => {
            let nu = 1.0 / (1000.0 * d1);
            let half = mod_inverse(2, n).expect("n odd");
            let s2: Vec<u64> = b1.freqs.iter().flat_map(|&r| [r, (r as u128 * half as u128 % n as u128) as u64]).collect();
            let b2 = bohr_set(n, &s2, b1.rho * nu * nu / 8.0)?.regularize()?;
            (nu, b2)
        }
    };
    Ok(SuiteInstance { f, b1, b2, nu })
}

// ---------------------------------------------------------------------------
// Upper search

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Schedule {
    /// `ρ₁ = ε^10`, `ρ_i = exp(-ρ_{i-1}^{-5})`, `ν_i = 10^{-5} ε ρ_i²`.
    Strict,
    /// `ρ_i = base·2^{-i}` and a fixed `ν`.
    Desk { base: f64, nu: f64 },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Desk { base: 0.3, nu: 1.0 }
    }
}

impl Schedule {
    /// `ln ρ_i` for `i >= 1`; the strict recursion overflows `f64` only in the exponent.
    pub fn ln_rho(&self, i: usize, epsilon: f64) -> f64 {
        match self {
            Schedule::Strict => {
                let mut l = 10.0 * epsilon.ln();
                for _ in 1..i {
                    l = -(-5.0 * l).exp();
                }
                l
            }
            Schedule::Desk { base, .. } => base.ln() - i as f64 * std::f64::consts::LN_2,
        }
    }

    pub fn rho(&self, i: usize, epsilon: f64) -> f64 {
        self.ln_rho(i, epsilon).exp()
    }

    pub fn nu(&self, i: usize, epsilon: f64) -> f64 {
        match self {
            Schedule::Strict => 1e-5 * epsilon * self.rho(i, epsilon).powi(2),
            Schedule::Desk { nu, .. } => *nu,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceLevel {
    pub rho: f64,
    pub ln_rho: f64,
    #[serde(rename = "S_size")]
    pub s_size: usize,
    #[serde(rename = "B_size")]
    pub b_size: usize,
    pub radius: f64,
    pub mean_cube: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementTrace {
    pub levels: Vec<TraceLevel>,
    pub chosen_i: usize,
    #[serde(rename = "B_size")]
    pub b_size: usize,
    pub b_radius: f64,
    pub b_freqs: Vec<u64>,
    pub delta: f64,
    pub lambda_phi: f64,
    pub d: u64,
    pub density: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperOptions {
    pub epsilon: f64,
    pub schedule: Schedule,
    /// Adds the frequency 1 to every `S_i`, confining differences near 0 (interval variant).
    pub include_chi0: bool,
}

/// Frequencies with `|f̂(r)| >= t`.
fn large_spectrum(coeffs: &[num_complex::Complex64], t: f64) -> Vec<u64> {
    (0..coeffs.len() as u64).filter(|&r| coeffs[r as usize].norm() >= t).collect()
}

/// Mean-cube increment search: builds the Bohr chain, picks the increment index, forms the
/// final regular Bohr set `B`, and returns the best nonzero `d ∈ supp φ_B` (ties to the smallest).
pub fn upper_search(f: &[f64], opts: &UpperOptions) -> Result<IncrementTrace> {
    let n = f.len() as u64;
    if n.is_multiple_of(2) || n < 3 {
        return Err(Error::Domain(format!("upper search needs odd n >= 3, got {n}")));
    }
    if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain("f must take values in [0, 1]".into()));
    }
    let eps = opts.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("epsilon = {eps} outside (0, 1)")));
    }
    let alpha = mean(f);
    let coeffs = dft_values(f);
    let half = mod_inverse(2, n).expect("n odd");
    let horizon = increment_horizon(eps);
    let mut levels = Vec::new();
    let mut sets: Vec<BohrSet> = Vec::new();
    let mut a = Vec::new();
    let mut prev: Vec<u64> = Vec::new();
    let mut chosen = None;
    for i in 1..=horizon + 1 {
        let rho = opts.schedule.rho(i, eps);
        let mut s = large_spectrum(&coeffs, rho / 2.0);
        s.extend(prev.iter().map(|&r| (r as u128 * half as u128 % n as u128) as u64));
        if opts.include_chi0 {
            s.push(1);
        }
        let radius = (rho / (4.0 * std::f64::consts::PI)).min(1.0);
        let b = bohr_set(n, &s, radius)?.regularize()?;
        prev = b.freqs.clone();
        let cube = moment(&smooth(f, &b.phi())?, 3).clamp(alpha.powi(3), 1.0);
        levels.push(TraceLevel {
            rho,
            ln_rho: opts.schedule.ln_rho(i, eps),
            s_size: b.codim(),
            b_size: b.len(),
            radius: b.rho,
            mean_cube: cube,
        });
        a.push(cube);
        sets.push(b);
        if a.len() >= 2 {
            if let Ok(k) = pick_increment_index(&a, alpha, eps) {
                chosen = Some(k);
                break;
            }
        }
    }
    let i = match chosen {
        Some(k) => k,
        None => pick_increment_index(&a, alpha, eps)?,
    };
    let nu = opts.schedule.nu(i, eps);
    let bi = &sets[i - 1];
    let half_set = bi.dilate((nu / 2.0).min(1.0))?;
    let delta = if half_set.codim() == 0 { 1.0 } else { half_set.find_regular_scale()? };
    let b = half_set.dilate(delta)?;
    if b.len() <= 1 {
        return Err(Error::Degenerate(format!(
            "final Bohr set (B_{i})_(delta nu/2) collapsed to {{0}} (radius {:e}, |S| = {})",
            b.rho,
            b.codim()
        )));
    }
    let phi = b.phi();
    let lambda_phi = lambda_weighted(f, &phi)?;
    let supp: Vec<usize> = phi.support().into_iter().filter(|&d| d != 0).collect();
    let dens: Vec<f64> = supp.par_iter().map(|&d| diff_density(f, d)).collect();
    let (k, density) = argmax(&dens, 0).expect("support has a nonzero element");
    Ok(IncrementTrace {
        levels,
        chosen_i: i,
        b_size: b.len(),
        b_radius: b.rho,
        b_freqs: b.freqs.clone(),
        delta,
        lambda_phi,
        d: supp[k] as u64,
        density,
        alpha,
        epsilon: eps,
        pass: density >= alpha.powi(3) - eps,
    })
}
