//! Interval construction: tile a product-group function along `[N′]`, overlay affine
//! copies of a scaled progression-free indicator on the classes where it is constant,
//! then sample a genuine subset of `[N]`.
//!
//! Interval functions store `f(1..=N)` at indices `0..N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::behrend::{apfree_residues, scaled_indicator, LowAPSubset};
use crate::error::{Error, Result};
use crate::group::{ap_profile, is_prime, per_diff_density, prev_prime, Domain, DensityFn, Norm};
use crate::product::{construct_product, ConstructionCert, Mode, ProductParams};

/// Configurable stand-in for the unquantified small-density threshold.
pub const ALPHA_0_DEFAULT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalParams {
    #[serde(rename = "N")]
    pub n_total: u64,
    pub alpha: f64,
    pub epsilon: f64,
    pub beta: f64,
    #[serde(rename = "N_prime")]
    pub n_prime: u64,
    pub q: u64,
    pub q_factors: Vec<u64>,
    /// `N′/q`, prime.
    pub p: u64,
    pub mode: Mode,
    pub trace: Vec<String>,
}

impl IntervalParams {
    /// Mean of the tiled function on `Z_q`, `α N / N′`, so that the mean over `[N]` is exactly α.
    pub fn alpha_prime(&self) -> f64 {
        self.alpha * self.n_total as f64 / self.n_prime as f64
    }
}

/// Picks `N′ = q·p ≤ N` with `p` prime.
///
/// Strict mode enforces `ε ≤ α⁷`, `N ≥ ε^{-15}`, a prime `p` in
/// `(N^{1/5}, sqrt(ε⁴α³(1-ε)N))`, and product admissibility of `q`. Desk mode takes
/// `q = ∏ q_factors`, `p` the largest prime at most `N/q`, and records each
/// strict inequality in the trace.
pub fn choose_interval_params(n_total: u64, alpha: f64, epsilon: f64, mode: Mode, q_factors: &[u64]) -> Result<IntervalParams> {
    let nf = n_total as f64;
    let mut trace = Vec::new();
    let eps_ok = epsilon <= alpha.powi(7);
    let big_ok = nf >= epsilon.powi(-15);
    trace.push(format!("eps <= alpha^7: {eps_ok} ({epsilon:e} vs {:e})", alpha.powi(7)));
    trace.push(format!("N >= eps^-15: {big_ok} ({n_total} vs {:e})", epsilon.powi(-15)));
    let lo = nf.powf(0.2);
    let hi = (epsilon.powi(4) * alpha.powi(3) * (1.0 - epsilon) * nf).sqrt();
    trace.push(format!("prime window ({lo:.3}, {hi:.3e})"));
    match mode {
        Mode::Strict => {
            if !eps_ok {
                return Err(Error::Infeasible(format!("epsilon = {epsilon:e} exceeds alpha^7 = {:e}", alpha.powi(7))));
            }
            if !big_ok {
                return Err(Error::Infeasible(format!("N = {n_total} below eps^-15 = {:e}", epsilon.powi(-15))));
            }
            let p = prev_prime(hi.ceil() as u64 - 1)
                .filter(|&p| p as f64 > lo)
                .ok_or_else(|| Error::Infeasible(format!("no prime in ({lo}, {hi})")))?;
            let r = (nf * (1.0 - epsilon * epsilon / 4.0) / p as f64).floor() as u64;
            let q = prev_prime(r).ok_or_else(|| Error::Infeasible("no prime below r".into()))?;
            crate::product::feasibility(&ProductParams::new(alpha, 4.0 * epsilon, &[q], Mode::Strict))?;
            let n_prime = p * q;
            if (n_prime as f64) < nf * (1.0 - epsilon * epsilon) {
                return Err(Error::Infeasible(format!("N' = {n_prime} below (1-eps^2)N")));
            }
            Ok(finish(n_total, alpha, epsilon, q, vec![q], p, mode, trace))
        }
        Mode::Desk => {
            if n_total < 1000 {
                return Err(Error::Precondition(format!("desk mode needs N >= 1000, got {n_total}")));
            }
            crate::group::check_distinct_primes(q_factors)?;
            let q: u64 = q_factors.iter().product();
            let target = n_total / q;
            let p = prev_prime(target).filter(|&p| p > 2).ok_or_else(|| Error::Infeasible(format!("no odd prime below {target}")))?;
            let n_prime = p * q;
            trace.push(format!("q in prime window: {} (q = {q})", (q as f64) > lo && (q as f64) < hi));
            trace.push(format!(
                "N' >= (1-eps^2)N: {} (N' = {n_prime})",
                n_prime as f64 >= nf * (1.0 - epsilon * epsilon)
            ));
            Ok(finish(n_total, alpha, epsilon, q, q_factors.to_vec(), p, mode, trace))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(n_total: u64, alpha: f64, epsilon: f64, q: u64, q_factors: Vec<u64>, p: u64, mode: Mode, trace: Vec<String>) -> IntervalParams {
    let n_prime = p * q;
    debug_assert!(is_prime(p));
    IntervalParams {
        n_total,
        alpha,
        epsilon,
        beta: 1.0 - n_prime as f64 / n_total as f64,
        n_prime,
        q,
        q_factors,
        p,
        mode,
        trace,
    }
}

/// `f₂(x) = g(x mod q)` on `[N′]`, zero above.
pub fn step1_step2_tile(params: &IntervalParams, g: &DensityFn) -> Result<DensityFn> {
    if g.len() as u64 != params.q {
        return Err(Error::Domain(format!("g has {} values, q = {}", g.len(), params.q)));
    }
    let ap = params.alpha_prime();
    if (g.mean() - ap).abs() > 1e-12 {
        return Err(Error::Precondition(format!("mean of g is {}, expected {ap}", g.mean())));
    }
    let q = params.q as usize;
    let values = (1..=params.n_total as usize)
        .map(|x| if x <= params.n_prime as usize { g.values[x % q] } else { 0.0 })
        .collect();
    DensityFn::new(Domain::interval(params.n_total as usize)?, values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayPlan {
    pub alpha_star: f64,
    pub n: u64,
    pub q: u64,
    pub classes: Vec<u64>,
    pub maps: Vec<(u64, u64)>,
}

impl OverlayPlan {
    /// Most frequent positive value of `g` and the classes carrying it, with fresh affine maps.
    pub fn draw<R: Rng + ?Sized>(g: &DensityFn, n: u64, rng: &mut R) -> Self {
        let mut counts: Vec<(f64, usize)> = Vec::new();
        for &v in &g.values {
            if v > 0.0 {
                match counts.iter_mut().find(|(u, _)| *u == v) {
                    Some(c) => c.1 += 1,
                    None => counts.push((v, 1)),
                }
            }
        }
        let alpha_star = counts.iter().fold((0.0, 0), |b, &c| if c.1 > b.1 { c } else { b }).0;
        let classes: Vec<u64> = (0..g.len() as u64).filter(|&t| g.values[t as usize] == alpha_star).collect();
        let maps = classes.iter().map(|_| (rng.gen_range(1..n), rng.gen_range(0..n))).collect();
        OverlayPlan { alpha_star, n, q: g.len() as u64, classes, maps }
    }

    /// `φ_t(x) = i mod n` for the `i`-th element (from 1) of `{x ∈ [N′] : x ≡ t (mod q)}`.
    pub fn phi(&self, x: u64) -> u64 {
        let t = x % self.q;
        let first = if t == 0 { self.q } else { t };
        ((x - first) / self.q + 1) % self.n
    }
}

/// `f₃(x) = ξ(a_t φ_t(x) + b_t)` on classes `t` of the plan, `f₂` elsewhere.
pub fn step3_overlay(f2: &DensityFn, plan: &OverlayPlan, xi: &DensityFn, n_prime: u64) -> Result<DensityFn> {
    if xi.len() as u64 != plan.n {
        return Err(Error::Domain("xi lives on the wrong group".into()));
    }
    if n_prime != plan.n * plan.q {
        return Err(Error::Domain("N' differs from n q".into()));
    }
    let mut slot = vec![None; plan.q as usize];
    for (k, &t) in plan.classes.iter().enumerate() {
        slot[t as usize] = Some(plan.maps[k]);
    }
    let mut values = f2.values.clone();
    for x in 1..=n_prime {
        if let Some((a, b)) = slot[(x % plan.q) as usize] {
            let y = (a as u128 * plan.phi(x) as u128 + b as u128) % plan.n as u128;
            values[x as usize - 1] = xi.values[y as usize];
        }
    }
    DensityFn::new(f2.domain.clone(), values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalCert {
    pub seed: u64,
    pub retries: IntervalRetries,
    #[serde(rename = "N")]
    pub n_total: u64,
    #[serde(rename = "N_prime")]
    pub n_prime: u64,
    pub q: u64,
    pub mean: f64,
    pub mean_cube: f64,
    pub alpha_star: f64,
    pub fraction_at_alpha_star: f64,
    pub max_offdiag_density: f64,
    pub worst_d: u64,
    pub worst_density: f64,
    pub bound: f64,
    pub mean_ok: bool,
    pub density_ok: bool,
    pub normalizations_ordered: bool,
    /// Hypotheses recorded but not enforced in desk mode.
    pub waived: Vec<String>,
    pub product: ConstructionCert,
    pub xi_support: usize,
}

impl IntervalCert {
    pub fn passes(&self) -> bool {
        self.mean_ok && self.density_ok
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalRetries {
    pub overlay: usize,
    pub product: usize,
}

#[derive(Clone, Debug)]
pub struct IntervalOutcome {
    pub f: DensityFn,
    pub cert: IntervalCert,
    pub plan: OverlayPlan,
    pub xi_set: LowAPSubset,
}

const MEAN_TOL: f64 = 1e-9;

/// Full three-step construction, verified at every `0 < d < N/2` under the
/// `N - 2d` normalization. The overlay randomness is redrawn up to `max_retries` times,
/// then the product seed.
pub fn construct_interval_fn(params: &IntervalParams, seed: u64, max_retries: usize) -> Result<IntervalOutcome> {
    let ap = params.alpha_prime();
    let pparams = ProductParams::new(ap, 4.0 * params.epsilon, &params.q_factors, params.mode);
    let xi_set = apfree_residues(params.p)?;
    let mut best: Option<IntervalOutcome> = None;
    for product_round in 0..=max_retries {
        let pseed = seed.wrapping_add(product_round as u64);
        let prod = construct_product(&pparams, pseed, max_retries)?;
        if params.mode == Mode::Strict && !prod.cert.passes() {
            continue;
        }
        let g = &prod.f;
        let f2 = step1_step2_tile(params, g)?;
        let mut rng = ChaCha8Rng::seed_from_u64(pseed ^ 0x9e37_79b9_7f4a_7c15);
        for attempt in 0..=max_retries {
            let plan = OverlayPlan::draw(g, params.p, &mut rng);
            let xi = scaled_indicator(&xi_set, plan.alpha_star).map_err(|e| match e {
                Error::Precondition(m) => Error::Infeasible(format!("overlay needs density {} but the progression-free set has {}: {m}", plan.alpha_star, xi_set.density)),
                other => other,
            })?;
            let f3 = step3_overlay(&f2, &plan, &xi, params.n_prime)?;
            let cert = certify(params, &f3, &plan, &prod.cert, &xi_set, seed, IntervalRetries { overlay: attempt, product: product_round })?;
            let pass = cert.passes();
            let better = best.as_ref().is_none_or(|b| cert.worst_density < b.cert.worst_density);
            if better || pass {
                best = Some(IntervalOutcome { f: f3, cert, plan, xi_set: xi_set.clone() });
            }
            if pass {
                return Ok(best.unwrap());
            }
        }
    }
    match best {
        Some(b) => Err(Error::RetriesExhausted(format!(
            "worst d = {} with density {:e} > {:e}",
            b.cert.worst_d, b.cert.worst_density, b.cert.bound
        ))),
        None => Err(Error::RetriesExhausted("product construction never certified".into())),
    }
}

fn certify(
    params: &IntervalParams,
    f: &DensityFn,
    plan: &OverlayPlan,
    pcert: &ConstructionCert,
    xi_set: &LowAPSubset,
    seed: u64,
    retries: IntervalRetries,
) -> Result<IntervalCert> {
    let a = params.alpha;
    let bound = a.powi(3) * (1.0 - params.epsilon);
    let over_len = ap_profile(f, Norm::IntervalOverLen)?;
    let over_n = ap_profile(f, Norm::IntervalOverN)?;
    let (worst_d, worst) = over_len.max_nonzero().unwrap_or((0, 0.0));
    let ordered = over_len.densities.iter().zip(&over_n.densities).all(|(l, n)| l + 1e-15 >= *n);
    let mean = f.mean();
    let q = params.q as f64;
    let mut waived = Vec::new();
    if params.mode == Mode::Desk {
        if (plan.classes.len() as f64) < 0.75 * q {
            waived.push(format!("|T| = {} < 3q/4 = {}", plan.classes.len(), 0.75 * q));
        }
        let ap = params.alpha_prime();
        if plan.alpha_star > ap * (1.0 + (4.0 * params.epsilon).powf(0.25)) {
            waived.push(format!("alpha* = {} outside [alpha', alpha'(1+(4eps)^(1/4))]", plan.alpha_star));
        }
        if !pcert.mean_cube_ok {
            waived.push("product mean cube above 3/2 alpha'^3".into());
        }
        waived.extend(params.trace.iter().filter(|t| t.contains("false")).cloned());
    }
    Ok(IntervalCert {
        seed,
        retries,
        n_total: params.n_total,
        n_prime: params.n_prime,
        q: params.q,
        mean,
        mean_cube: f.mean_cube(),
        alpha_star: plan.alpha_star,
        fraction_at_alpha_star: plan.classes.len() as f64 / q,
        max_offdiag_density: worst,
        worst_d: worst_d as u64,
        worst_density: worst,
        bound,
        mean_ok: (mean - a).abs() <= MEAN_TOL,
        density_ok: worst <= bound,
        normalizations_ordered: ordered,
        waived,
        product: pcert.clone(),
        xi_support: xi_set.elements.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSet {
    #[serde(rename = "N")]
    pub n_total: u64,
    pub alpha: f64,
    pub epsilon: f64,
    pub elements: Vec<u64>,
    pub attempts: usize,
    pub size_ok: bool,
    pub max_density: f64,
    pub worst_d: u64,
    pub density_ok: bool,
}

/// `density(d) = #{x : x, x+d, x+2d ∈ A} / (N - 2d)` for `1 <= d < N/2`, by pair enumeration.
pub fn set_profile(n_total: u64, sorted: &[u64]) -> Vec<f64> {
    let dmax = ((n_total - 1) / 2) as usize;
    let mut member = vec![false; n_total as usize + 1];
    for &x in sorted {
        member[x as usize] = true;
    }
    let mut counts = vec![0u64; dmax + 1];
    for (i, &a) in sorted.iter().enumerate() {
        for &c in &sorted[i + 1..] {
            if (c - a) % 2 == 0 && member[((a + c) / 2) as usize] {
                counts[((c - a) / 2) as usize] += 1;
            }
        }
    }
    counts
        .iter()
        .enumerate()
        .map(|(d, &k)| if d == 0 { 0.0 } else { k as f64 / (n_total as f64 - 2.0 * d as f64) })
        .collect()
}

/// `f` with `x >= N(1-ε)` zeroed.
pub fn truncate_tail(values: &[f64], epsilon: f64) -> Vec<f64> {
    let cut = values.len() as f64 * (1.0 - epsilon);
    values.iter().enumerate().map(|(i, &v)| if (i + 1) as f64 >= cut { 0.0 } else { v }).collect()
}

/// Zeroes `f` for `x >= N(1-ε)`, keeps each `x` with probability `f′(x)`, and accepts the
/// first draw with `|A| >= αN` and every difference density at most `α³ - ε`.
pub fn sample_set<R: Rng + ?Sized>(f: &DensityFn, alpha: f64, epsilon: f64, rng: &mut R, max_attempts: usize) -> Result<SampledSet> {
    if f.domain.is_group() {
        return Err(Error::Domain("sampling needs an interval function".into()));
    }
    let n = f.len() as u64;
    let fp = truncate_tail(&f.values, epsilon);
    let bound = alpha.powi(3) - epsilon;
    let mut last = None;
    for attempt in 1..=max_attempts {
        let elements: Vec<u64> = fp
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| (rng.gen::<f64>() < p).then_some(i as u64 + 1))
            .collect();
        let prof = set_profile(n, &elements);
        let (worst_d, max_density) = crate::group::argmax(&prof, 1).unwrap_or((0, 0.0));
        let s = SampledSet {
            n_total: n,
            alpha,
            epsilon,
            size_ok: elements.len() as f64 >= alpha * n as f64,
            density_ok: max_density <= bound,
            elements,
            attempts: attempt,
            max_density,
            worst_d: worst_d as u64,
        };
        if s.size_ok && s.density_ok {
            return Ok(s);
        }
        last = Some(s);
    }
    let s = last.expect("max_attempts >= 1");
    Err(Error::RetriesExhausted(format!(
        "{max_attempts} samples; last had |A| = {} and max density {:e}",
        s.elements.len(),
        s.max_density
    )))
}

/// Sampling flow: build at density `α + 2ε` with tolerance `12ε/α³`, then sample.
pub fn construct_and_sample(
    n_total: u64,
    alpha: f64,
    epsilon: f64,
    q_factors: &[u64],
    seed: u64,
    max_retries: usize,
    max_attempts: usize,
) -> Result<(IntervalOutcome, SampledSet)> {
    let eps_run = 12.0 * epsilon / alpha.powi(3);
    if eps_run >= 1.0 {
        return Err(Error::Infeasible(format!("12 eps / alpha^3 = {eps_run} must be below 1")));
    }
    let params = choose_interval_params(n_total, alpha + 2.0 * epsilon, eps_run, Mode::Desk, q_factors)?;
    let out = construct_interval_fn(&params, seed, max_retries)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let set = sample_set(&out.f, alpha, epsilon, &mut rng, max_attempts)?;
    Ok((out, set))
}

/// Density of `f` at `d` over `[N′ - 2d]`, the window the tiling comparison uses.
pub fn density_within(f: &DensityFn, n_prime: usize, d: usize) -> Result<f64> {
    let head = DensityFn::new(Domain::interval(n_prime)?, f.values[..n_prime].to_vec())?;
    per_diff_density(&head, d, Norm::IntervalOverLen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behrend::{low_ap_density_subset};
    use crate::group::{dft_values, lambda_spectral};
    use rand::Rng;

    #[test]
    fn desk_params_large_n() {
        let p = choose_interval_params(1_000_000, 0.1, 0.01, Mode::Desk, &[3]).unwrap();
        assert!(is_prime(p.p));
        assert_eq!(p.n_prime, 3 * p.p);
        assert!(p.n_prime as f64 >= 1e6 * (1.0 - 1e-4) && p.n_prime <= 1_000_000);
        assert!((p.alpha_prime() * p.n_prime as f64 - 0.1 * 1e6).abs() < 1e-6);
    }

    #[test]
    fn strict_params_reject_small_n() {
        match choose_interval_params(10_000, 0.1, 1e-2, Mode::Strict, &[3]) {
            Err(Error::Infeasible(m)) => assert!(m.contains("alpha^7") || m.contains("eps^-15")),
            other => panic!("{other:?}"),
        }
        match choose_interval_params(10_000, 0.9, 1e-2, Mode::Strict, &[3]) {
            Err(Error::Infeasible(m)) => assert!(m.contains("eps^-15"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(choose_interval_params(10_000, 0.1, 0.01, Mode::Desk, &[3, 9]).is_err());
    }

    fn small_setup(q_factors: &[u64], alpha: f64) -> (IntervalParams, DensityFn) {
        let params = choose_interval_params(20_000, alpha, 1e-3, Mode::Desk, q_factors).unwrap();
        let pp = ProductParams::new(params.alpha_prime(), 4e-3, q_factors, Mode::Desk);
        let g = construct_product(&pp, 1, 0).unwrap().f;
        (params, g)
    }

    #[test]
    fn tiling_matches_group_densities() {
        let (params, g) = small_setup(&[7], 0.1);
        let f2 = step1_step2_tile(&params, &g).unwrap();
        assert!((f2.mean() - 0.1).abs() < 1e-12);
        let q = params.q as usize;
        let gp = crate::group::ap_profile_dense(&g.values);
        let np = params.n_prime as usize;
        for d in 1..np / 2 {
            let v = density_within(&f2, np, d).unwrap();
            if d % q != 0 {
                assert!((v - gp.densities[d % q]).abs() <= 1.0 / q as f64, "d={d}");
            } else {
                assert!(v <= 1.5 * params.alpha_prime().powi(3) + 1.0 / q as f64 || v <= gp.densities[0] + 1.0 / q as f64);
            }
        }
        let prof = ap_profile(&f2, Norm::IntervalOverLen).unwrap();
        for d in np.div_ceil(2)..prof.densities.len() {
            assert_eq!(prof.densities[d], 0.0);
        }
    }

    #[test]
    fn tail_differences_below_threshold() {
        let (params, g) = small_setup(&[7], 0.1);
        let f2 = step1_step2_tile(&params, &g).unwrap();
        let n = params.n_total as f64;
        let beta = params.beta;
        let thr = 0.1f64.powi(3) * (1.0 - 1e-3);
        let prof = ap_profile(&f2, Norm::IntervalOverLen).unwrap();
        let np = params.n_prime as f64;
        for (d, &v) in prof.densities.iter().enumerate().skip(1) {
            let t = np - 2.0 * d as f64;
            if t > 0.0 && t <= beta * n * thr {
                assert!(v <= t / (beta * n + t) + 1e-15);
                assert!(v < thr);
            }
        }
    }

    #[test]
    fn overlay_preserves_class_means() {
        let (params, g) = small_setup(&[7], 0.1);
        let f2 = step1_step2_tile(&params, &g).unwrap();
        let x = low_ap_density_subset(params.p, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let plan = OverlayPlan::draw(&g, params.p, &mut rng);
        let xi = scaled_indicator(&x, plan.alpha_star).unwrap();
        let f3 = step3_overlay(&f2, &plan, &xi, params.n_prime).unwrap();
        let q = params.q as usize;
        for t in 0..q {
            let idx = (1..=params.n_prime as usize).filter(|x| x % q == t);
            let (s2, s3, k) = idx.fold((0.0, 0.0, 0.0), |(a, b, c), x| (a + f2.values[x - 1], b + f3.values[x - 1], c + 1.0));
            assert!((s2 / k - s3 / k).abs() < 1e-12, "class {t}");
            if !plan.classes.contains(&(t as u64)) {
                assert!((1..=params.n_prime as usize).filter(|x| x % q == t).all(|x| f2.values[x - 1] == f3.values[x - 1]));
            }
        }
        assert!((f3.mean() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn identity_maps_copy_xi() {
        let (params, g) = small_setup(&[7], 0.1);
        let f2 = step1_step2_tile(&params, &g).unwrap();
        let x = low_ap_density_subset(params.p, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut plan = OverlayPlan::draw(&g, params.p, &mut rng);
        plan.maps.iter_mut().for_each(|m| *m = (1, 0));
        let xi = scaled_indicator(&x, plan.alpha_star).unwrap();
        let f3 = step3_overlay(&f2, &plan, &xi, params.n_prime).unwrap();
        let t = plan.classes[0];
        for xx in (1..=params.n_prime).filter(|x| x % params.q == t) {
            assert_eq!(f3.values[xx as usize - 1], xi.values[plan.phi(xx) as usize]);
        }
    }

    #[test]
    fn overlay_fiber_density_is_lambda_of_xi() {
        // A block set has progressions with nonzero difference, so the expectation is nontrivial.
        let (params, g) = small_setup(&[7], 0.1);
        let x = low_ap_density_subset(params.p, 0.1).unwrap();
        let n = params.p as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let plan0 = OverlayPlan::draw(&g, params.p, &mut rng);
        let xi = scaled_indicator(&x, plan0.alpha_star).unwrap();
        let v = &xi.values;
        let big = lambda_spectral(&dft_values(v));
        let cube = v.iter().map(|x| x * x * x).sum::<f64>() / n as f64;
        let lambda = (big * n as f64 - cube) / (n as f64 - 1.0);
        assert!(lambda <= big);
        let f2 = step1_step2_tile(&params, &g).unwrap();
        let t = plan0.classes[0] as usize;
        let q = params.q as usize;
        let d = 5 * q;
        let np = params.n_prime as usize;
        let samples = 4000;
        let mut xs = Vec::with_capacity(samples);
        for _ in 0..samples {
            let mut plan = plan0.clone();
            plan.maps = plan.classes.iter().map(|_| (rng.gen_range(1..params.p), rng.gen_range(0..params.p))).collect();
            let f3 = step3_overlay(&f2, &plan, &xi, params.n_prime).unwrap();
            let (s, k) = (1..=np - 2 * d).filter(|x| x % q == t).fold((0.0, 0.0), |(s, k), x| {
                (s + f3.values[x - 1] * f3.values[x - 1 + d] * f3.values[x - 1 + 2 * d], k + 1.0)
            });
            xs.push(s / k);
        }
        let mean = xs.iter().sum::<f64>() / samples as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        assert!((mean - lambda).abs() <= 3.0 * (var / samples as f64).sqrt() + 1e-15, "{mean} vs {lambda}");
    }

    #[test]
    fn flat_function_rejected_everywhere() {
        let f = DensityFn::constant(Domain::interval(2001).unwrap(), 0.1).unwrap();
        let prof = ap_profile(&f, Norm::IntervalOverLen).unwrap();
        assert!(prof.densities[1..].iter().all(|&v| v > 1e-3 * (1.0 - 1e-3)));
    }

    #[test]
    fn sampling_edge_cases() {
        let z = DensityFn::constant(Domain::interval(1000).unwrap(), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_set(&z, 0.1, 1e-3, &mut rng, 3).is_err());
        let f = DensityFn::constant(Domain::interval(1000).unwrap(), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = sample_set(&f, 0.4, 0.01, &mut rng, 2).unwrap_err();
        assert!(matches!(err, Error::RetriesExhausted(_)));
    }

    #[test]
    fn sampled_tail_is_empty() {
        let t = truncate_tail(&[1.0; 100], 0.1);
        assert!(t[..89].iter().all(|&v| v == 1.0));
        assert!(t[89..].iter().all(|&v| v == 0.0));
        let f = DensityFn::constant(Domain::interval(5000).unwrap(), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // A negative tolerance only moves the cut past N; the density bound becomes 1.
        let s = sample_set(&f, 0.5, -1.0, &mut rng, 1).unwrap();
        assert_eq!(s.elements.len(), 5000);
    }

    #[test]
    fn set_profile_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 301u64;
        let elems: Vec<u64> = (1..=n).filter(|_| rng.gen::<f64>() < 0.3).collect();
        let mut v = vec![0.0; n as usize];
        for &e in &elems {
            v[e as usize - 1] = 1.0;
        }
        let f = DensityFn::new(Domain::interval(n as usize).unwrap(), v).unwrap();
        let dense = ap_profile(&f, Norm::IntervalOverLen).unwrap();
        let sparse = set_profile(n, &elems);
        for d in 1..sparse.len() {
            assert!((dense.densities[d] - sparse[d]).abs() < 1e-12);
        }
    }
}
