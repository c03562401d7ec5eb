//! Progression-free sets of integers and low 3-AP density subsets of `Z_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{dft_values, lambda_spectral, Domain, DensityFn};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct APFreeSet {
    pub n: u64,
    pub elements: Vec<u64>,
}

impl APFreeSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn density(&self) -> f64 {
        self.len() as f64 / self.n as f64
    }
}

/// Some `(a, b, c)` with `a < b < c` in the sorted set and `a + c = 2b`, by pairwise midpoint check.
pub fn find_3ap(sorted: &[u64]) -> Option<(u64, u64, u64)> {
    let &max = sorted.last()?;
    let mut member = vec![false; max as usize + 1];
    for &x in sorted {
        member[x as usize] = true;
    }
    for (i, &a) in sorted.iter().enumerate() {
        for &c in &sorted[i + 1..] {
            if (a + c) % 2 == 0 && member[((a + c) / 2) as usize] {
                return Some((a, (a + c) / 2, c));
            }
        }
    }
    None
}

pub fn is_apfree(sorted: &[u64]) -> bool {
    find_3ap(sorted).is_none()
}

/// Vectors in `{0..k-1}^dim` on one sphere, read as base-`(2k-1)` digits (no carries
/// when two are added), shifted into `[1, n]`. For `k = 2` every vector is used.
fn sphere_candidate(n: u64, k: u64, dim: u32) -> Vec<u64> {
    let base = 2 * k - 1;
    let mut buckets: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
    let total = k.pow(dim);
    for code in 0..total {
        let (mut c, mut value, mut norm, mut place) = (code, 0u64, 0u64, 1u64);
        for _ in 0..dim {
            let digit = c % k;
            c /= k;
            value += digit * place;
            norm += digit * digit;
            place *= base;
        }
        if value < n {
            let key = if k == 2 { 0 } else { norm };
            buckets.entry(key).or_default().push(value + 1);
        }
    }
    let mut best: Vec<u64> = Vec::new();
    for (_, v) in buckets {
        if v.len() > best.len() {
            best = v;
        }
    }
    best.sort_unstable();
    best
}

/// Adds every `x ∈ [1, n]`, in increasing order, that keeps the set progression-free.
fn greedy_extend(n: u64, start: &[u64]) -> Vec<u64> {
    let mut member = vec![false; n as usize + 1];
    let mut set: Vec<u64> = start.to_vec();
    for &x in start {
        member[x as usize] = true;
    }
    let inside = |v: i64, member: &Vec<bool>| v >= 1 && v <= n as i64 && member[v as usize];
    for x in 1..=n {
        if member[x as usize] {
            continue;
        }
        let xi = x as i64;
        let blocked = set.iter().any(|&y| {
            let yi = y as i64;
            ((xi + yi) % 2 == 0 && inside((xi + yi) / 2, &member))
                || inside(2 * yi - xi, &member)
                || inside(2 * xi - yi, &member)
        });
        if !blocked {
            member[x as usize] = true;
            set.push(x);
        }
    }
    set.sort_unstable();
    set
}

const SPHERE_ENUM_CAP: u64 = 1 << 21;

/// Behrend-type progression-free subset of `[1, n]`: the largest sphere slice over a
/// small grid of digit ranges `k` and dimensions, extended greedily to a maximal set.
pub fn apfree_set(n: u64) -> APFreeSet {
    if n == 0 {
        return APFreeSet { n, elements: vec![] };
    }
    let mut best: Vec<u64> = vec![1];
    for k in 2u64..=64 {
        let base = 2 * k - 1;
        if base > 2 * n + 1 {
            break;
        }
        let mut dim = 1u32;
        loop {
            if k.checked_pow(dim).is_none_or(|t| t > SPHERE_ENUM_CAP) {
                break;
            }
            let cand = sphere_candidate(n, k, dim);
            if cand.len() > best.len() {
                best = cand;
            }
            if base.checked_pow(dim).is_none_or(|p| p >= n) {
                break;
            }
            dim += 1;
        }
    }
    APFreeSet { n, elements: greedy_extend(n, &best) }
}

pub const BRUTE_MAX_N: u64 = 40;

/// Exact maximum size of a progression-free subset of `[1, n]` with a witness.
/// Computes `r(1), r(2), …` in turn; `r(k) ∈ {r(k-1), r(k-1)+1}` and the larger value
/// needs a set containing `k`, searched depth-first with the bound `|chosen| + r(j)`.
pub fn brute_max_apfree(n: u64) -> Result<(usize, Vec<u64>)> {
    if n > BRUTE_MAX_N {
        return Err(Error::Precondition(format!("brute force limited to N <= {BRUTE_MAX_N}, got {n}")));
    }
    let mut r = vec![0usize; n as usize + 1];
    let mut witness: u64 = 0;
    for k in 1..=n as usize {
        let target = r[k - 1] + 1;
        let mut found = None;
        extend(1u64 << k, 1, k - 1, target, &r, &mut found);
        match found {
            Some(mask) => {
                r[k] = target;
                witness = mask;
            }
            None => r[k] = r[k - 1],
        }
    }
    let elems: Vec<u64> = (1..=n).filter(|&x| witness >> x & 1 == 1).collect();
    Ok((r[n as usize], elems))
}

fn extend(mask: u64, size: usize, j: usize, target: usize, r: &[usize], found: &mut Option<u64>) {
    if found.is_some() {
        return;
    }
    if size == target {
        *found = Some(mask);
        return;
    }
    if j == 0 || size + r[j] < target {
        return;
    }
    // j is below every chosen element, so it can only start a progression.
    let mut blocked = false;
    let mut rest = mask;
    while rest != 0 {
        let y = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let z = 2 * y - j;
        if z < 64 && mask >> z & 1 == 1 {
            blocked = true;
            break;
        }
    }
    if !blocked {
        extend(mask | 1u64 << j, size + 1, j - 1, target, r, found);
    }
    extend(mask, size, j - 1, target, r, found);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// A window of length at most `⌈n/2⌉` of a progression-free set, read mod `n`.
    Window,
    /// Blocks of width `t` placed at the doubled set `2A`.
    Blocks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowAPSubset {
    pub n: u64,
    pub elements: Vec<u64>,
    pub density: f64,
    pub ap_density: f64,
    pub bound: f64,
    pub meets_bound: bool,
    pub branch: Branch,
    /// Length of the integer interval whose progression-free set was used.
    pub source_n: u64,
    pub block_width: Option<u64>,
}

/// `max(1/n, 2^{-(log₂ 1/α)²/9})`.
pub fn low_ap_bound(n: u64, alpha: f64) -> f64 {
    let l = (1.0 / alpha).log2();
    (1.0 / n as f64).max((-(l * l) / 9.0).exp2())
}

/// Total 3-AP density of an indicator in `Z_n`, all differences including 0.
pub fn indicator_ap_density(n: u64, elements: &[u64]) -> f64 {
    let mut v = vec![0.0; n as usize];
    for &x in elements {
        v[(x % n) as usize] = 1.0;
    }
    lambda_spectral(&dft_values(&v))
}

const SCAN_PATIENCE: u64 = 64;
const SCAN_CAP: u64 = 1 << 14;

/// Largest `N` (scanning upward until `SCAN_PATIENCE` consecutive failures) with a
/// progression-free set of density at least `6α`, and that set.
fn surrogate_source(alpha: f64) -> Option<APFreeSet> {
    let mut best = None;
    let mut misses = 0;
    for nn in 1..=SCAN_CAP {
        let s = apfree_set(nn);
        if s.len() as f64 >= (6.0 * alpha * nn as f64).ceil() {
            best = Some(s);
            misses = 0;
        } else {
            misses += 1;
            if misses >= SCAN_PATIENCE {
                break;
            }
        }
    }
    best
}

fn certify(n: u64, alpha: f64, mut elements: Vec<u64>, branch: Branch, source_n: u64, t: Option<u64>) -> Result<LowAPSubset> {
    elements.sort_unstable();
    elements.dedup();
    let density = elements.len() as f64 / n as f64;
    if density < alpha {
        return Err(Error::Infeasible(format!("subset density {density} below alpha = {alpha}")));
    }
    let ap_density = indicator_ap_density(n, &elements);
    let bound = low_ap_bound(n, alpha);
    Ok(LowAPSubset {
        n,
        elements,
        density,
        ap_density,
        bound,
        meets_bound: ap_density <= bound * (1.0 + 1e-12),
        branch,
        source_n,
        block_width: t,
    })
}

/// Subset of `Z_n` with density at least α and small 3-AP density, following both
/// branches of the window/block argument on top of [`apfree_set`].
pub fn low_ap_density_subset(n: u64, alpha: f64) -> Result<LowAPSubset> {
    if !(alpha > 0.0 && alpha <= 0.1) {
        return Err(Error::Precondition(format!("alpha = {alpha} outside (0, 0.1]")));
    }
    if n == 0 {
        return Err(Error::Precondition("n = 0".into()));
    }
    let a = surrogate_source(alpha).ok_or_else(|| Error::Infeasible(format!("no progression-free set of density {}", 6.0 * alpha)))?;
    let big_n = a.n;
    if n <= 4 * big_n {
        let len = n.div_ceil(2);
        let mut best: Vec<u64> = Vec::new();
        let mut start = 1;
        while start <= big_n {
            let piece: Vec<u64> = a.elements.iter().copied().filter(|&x| x >= start && x < start + len).collect();
            if piece.len() > best.len() {
                best = piece;
            }
            start += len;
        }
        let elems = best.into_iter().map(|x| x % n).collect();
        certify(n, alpha, elems, Branch::Window, big_n, None)
    } else {
        let s: Vec<u64> = a.elements.iter().map(|&x| 2 * x).collect();
        assert!(approximate_3ap(&s).is_none(), "doubled progression-free set has an approximate 3-AP");
        let t = n / (4 * big_n);
        let mut elems = Vec::with_capacity(s.len() * t as usize);
        for &i in &s {
            elems.extend((i - 1) * t + 1..=(i - 1) * t + t);
        }
        debug_assert!(elems.iter().all(|&x| 2 * x <= n));
        certify(n, alpha, elems, Branch::Blocks, big_n, Some(t))
    }
}

/// Some distinct-valued `(x, y, z)` in `s` with `|2z - x - y| <= 1`.
pub fn approximate_3ap(s: &[u64]) -> Option<(u64, u64, u64)> {
    let set: std::collections::HashSet<u64> = s.iter().copied().collect();
    for (i, &x) in s.iter().enumerate() {
        for &y in &s[i + 1..] {
            let sum = x + y;
            for z2 in [sum.saturating_sub(1), sum, sum + 1] {
                if z2 % 2 == 0 {
                    let z = z2 / 2;
                    if z != x && z != y && set.contains(&z) {
                        return Some((x, y, z));
                    }
                }
            }
        }
    }
    None
}

/// Progression-free subset of `Z_n` from `[1, (n-1)/2]`; as every element is below `n/2`,
/// no nontrivial progression appears modulo `n` either.
pub fn apfree_residues(n: u64) -> Result<LowAPSubset> {
    if n < 3 {
        return Err(Error::Precondition(format!("n = {n} < 3")));
    }
    let a = apfree_set((n - 1) / 2);
    let density = a.len() as f64 / n as f64;
    certify(n, density, a.elements, Branch::Window, (n - 1) / 2, None)
}

/// `ξ(x) = α* n X(x) / |X|`.
pub fn scaled_indicator(x: &LowAPSubset, alpha_star: f64) -> Result<DensityFn> {
    let scale = alpha_star * x.n as f64 / x.elements.len() as f64;
    if !(scale <= 1.0) {
        return Err(Error::Precondition(format!("scaling factor {scale} exceeds 1")));
    }
    let mut v = vec![0.0; x.n as usize];
    for &e in &x.elements {
        v[e as usize] = scale;
    }
    DensityFn::new(Domain::cyclic(x.n as usize)?, v)
}
