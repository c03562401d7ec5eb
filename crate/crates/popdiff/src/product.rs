//! Level-by-level randomized construction on `∏ Z_{m_i}` with exhaustive certification.
//!
//! Functions on `Q_i = Z_{m_1} × … × Z_{m_i}` are stored in mixed radix,
//! `index(x_1..x_i) = ((x_1 m_2 + x_2) m_3 + …) m_i + x_i`; the final function is
//! re-indexed to `Z_n` through the Chinese remainder map.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{check_distinct_primes, from_coords, idft, Domain, DensityFn};
use crate::model::{g_spectrum, g_values};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    Desk,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Mode::Strict),
            "desk" => Ok(Mode::Desk),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub factors: Vec<u64>,
    pub mode: Mode,
    /// Explicit μ schedule; `None` uses the strict formula, capped by the available α′-fraction in desk mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

impl ProductParams {
    pub fn new(alpha: f64, epsilon: f64, factors: &[u64], mode: Mode) -> Self {
        ProductParams { alpha, epsilon, factors: factors.to_vec(), mode, mu: None }
    }

    pub fn alpha_prime(&self) -> f64 {
        self.alpha * self.factors[0] as f64 / (self.factors[0] - 1) as f64
    }

    /// `μ_1 = ε^{1/4}`, `μ_i = 150^{i-1} α′^{-6} ε^{1/4}`.
    pub fn strict_mu(&self, i: usize) -> f64 {
        let e4 = self.epsilon.powf(0.25);
        if i == 1 {
            e4
        } else {
            150f64.powi(i as i32 - 1) * self.alpha_prime().powi(-6) * e4
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HypStatus {
    Pass,
    Waived,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub status: HypStatus,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub mode: Mode,
    pub hypotheses: Vec<Hypothesis>,
}

impl FeasibilityReport {
    pub fn all_pass(&self) -> bool {
        self.hypotheses.iter().all(|h| h.status == HypStatus::Pass)
    }

    pub fn status(&self, name: &str) -> Option<HypStatus> {
        self.hypotheses.iter().find(|h| h.name == name).map(|h| h.status)
    }
}

const REL_TOL: f64 = 1e-12;

/// Checks each hypothesis of the product theorem. Strict mode fails on any
/// violation; desk mode records violations as waived.
pub fn feasibility(params: &ProductParams) -> Result<FeasibilityReport> {
    if params.factors.is_empty() {
        return Err(Error::Domain("no factors".into()));
    }
    check_distinct_primes(&params.factors)?;
    if params.factors.contains(&2) {
        return Err(Error::Domain("factor 2 makes the group order even".into()));
    }
    let (a, e) = (params.alpha, params.epsilon);
    let mut hyps = Vec::new();
    let mut push = |name: &str, ok: bool, detail: String| {
        let status = match (ok, params.mode) {
            (true, _) => HypStatus::Pass,
            (false, Mode::Strict) => HypStatus::Fail,
            (false, Mode::Desk) => HypStatus::Waived,
        };
        hyps.push(Hypothesis { name: name.into(), status, detail });
    };
    push("alpha_range", a > 0.0 && a <= 0.25, format!("0 < alpha = {a} <= 1/4"));
    push("epsilon_small", e > 0.0 && e <= 20f64.powi(-9), format!("epsilon = {e:e} <= 20^-9 = {:e}", 20f64.powi(-9)));
    let top = e.powf(-1.0 / 3.0);
    let m1 = params.factors[0] as f64;
    push(
        "m1_window",
        top / 2.0 < m1 && m1 <= top * (1.0 + REL_TOL),
        format!("{} < m_1 = {m1} <= eps^(-1/3) = {top}", top / 2.0),
    );
    let mut n_prev = m1;
    for (k, &m) in params.factors.iter().enumerate().skip(1) {
        let i = k + 1;
        let lower = n_prev.powi(6);
        // Upper bound exp(X)/2 compared in log space.
        let x = 0.5 / 4096.0 * 150f64.powi(i as i32 - 1) * e.powf(0.25) * n_prev;
        let ok_lo = (m as f64) > lower;
        let ok_hi = (m as f64).ln() < x - std::f64::consts::LN_2;
        push(&format!("m{i}_lower"), ok_lo, format!("m_{i} = {m} > n_{}^6 = {lower:e}", i - 1));
        push(
            &format!("m{i}_upper"),
            ok_hi,
            format!("ln m_{i} = {:.4} < ln(exp(X)/2) = {:.4} (the variant without /2 allows {:.4})", (m as f64).ln(), x - std::f64::consts::LN_2, x),
        );
        n_prev *= m as f64;
    }
    let s = params.factors.len() as f64;
    let smax = (e.powf(-0.25) * a.powi(6) / 8.0).ln() / 150f64.ln();
    push("s_bound", s <= smax, format!("s = {s} <= log_150(eps^(-1/4) alpha^6 / 8) = {smax:.4}"));
    let report = FeasibilityReport { mode: params.mode, hypotheses: hyps };
    if params.mode == Mode::Strict {
        if let Some(h) = report.hypotheses.iter().find(|h| h.status == HypStatus::Fail) {
            return Err(Error::Infeasible(format!("{}: {}", h.name, h.detail)));
        }
    }
    Ok(report)
}

/// A level of the construction. `fibers[w]` is `Some((a, b))` when the `Z_{m_i}`-fiber
/// over `w ∈ Q_{i-1}` carries `g_{α′}(a·y + b)`, and `None` when it is constant.
#[derive(Clone, Debug)]
pub struct LevelState {
    pub level: usize,
    pub factors: Vec<u64>,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub values: Vec<f64>,
    pub prev_values: Vec<f64>,
    pub fibers: Vec<Option<(u64, u64)>>,
    pub chosen: Vec<usize>,
    pub mu: f64,
}

impl LevelState {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    pub fn mean_cube(&self) -> f64 {
        self.values.iter().map(|v| v * v * v).sum::<f64>() / self.n() as f64
    }

    pub fn count_at(&self, v: f64) -> usize {
        self.values.iter().filter(|&&x| x == v).count()
    }
}

/// `f_1(0) = 0`, `f_1(x) = α m_1/(m_1 - 1)` otherwise.
pub fn build_level1(alpha: f64, m1: u64) -> Result<LevelState> {
    if m1 < 3 {
        return Err(Error::Precondition(format!("m_1 = {m1} < 3")));
    }
    let ap = alpha * m1 as f64 / (m1 - 1) as f64;
    if !(alpha > 0.0 && ap <= 1.0) {
        return Err(Error::Precondition(format!("boosted value {ap} outside (0, 1]")));
    }
    let mut values = vec![ap; m1 as usize];
    values[0] = 0.0;
    Ok(LevelState {
        level: 1,
        factors: vec![m1],
        alpha,
        alpha_prime: ap,
        values,
        prev_values: vec![alpha],
        fibers: vec![None],
        chosen: vec![],
        mu: 1.0 / m1 as f64,
    })
}

/// Closed form of the level-1 difference density, `α³ m²(m-3)/(m-1)³`.
pub fn level1_offdiag(alpha: f64, m1: u64) -> f64 {
    let m = m1 as f64;
    alpha.powi(3) * m * m * (m - 3.0) / (m - 1.0).powi(3)
}

/// Overwrites the first `⌊μ n_{i-1}⌋` fibers of value α′ with random affine copies of `g_{α′}`.
pub fn random_modify_level<R: Rng + ?Sized>(state: &LevelState, m: u64, mu: f64, rng: &mut R) -> Result<LevelState> {
    if state.alpha_prime > 0.5 {
        return Err(Error::Precondition(format!("alpha' = {} > 1/2", state.alpha_prime)));
    }
    let prev = &state.values;
    let n_prev = prev.len();
    let want = (mu * n_prev as f64).floor() as usize;
    let chosen: Vec<usize> = (0..n_prev).filter(|&w| prev[w] == state.alpha_prime).take(want).collect();
    if chosen.len() < want {
        return Err(Error::Infeasible(format!(
            "level {}: need {want} points at alpha', found {}",
            state.level + 1,
            chosen.len()
        )));
    }
    let mut fibers = vec![None; n_prev];
    for &w in &chosen {
        let a = rng.gen_range(1..m);
        let b = rng.gen_range(0..m);
        fibers[w] = Some((a, b));
    }
    let g = g_values(state.alpha_prime, m);
    let mu_usize = m as usize;
    let mut values = Vec::with_capacity(n_prev * mu_usize);
    for w in 0..n_prev {
        match fibers[w] {
            None => values.extend(std::iter::repeat_n(prev[w], mu_usize)),
            Some((a, b)) => values.extend((0..m).map(|y| g[((a * y + b) % m) as usize])),
        }
    }
    let mut factors = state.factors.clone();
    factors.push(m);
    Ok(LevelState {
        level: state.level + 1,
        factors,
        alpha: state.alpha,
        alpha_prime: state.alpha_prime,
        values,
        prev_values: prev.clone(),
        fibers,
        chosen,
        mu,
    })
}

/// Sparse spectrum of one fiber: `(frequency, coefficient)` pairs.
fn fiber_spectrum(value: f64, fiber: Option<(u64, u64)>, gs: &[(usize, Complex64)], m: usize) -> Vec<(usize, Complex64)> {
    match fiber {
        None => vec![(0, Complex64::new(value, 0.0))],
        Some((a, b)) => gs
            .iter()
            .map(|&(r, c)| {
                let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((b as usize * r) % m) as f64 / m as f64);
                ((a as usize * r) % m, c * phase)
            })
            .collect(),
    }
}

/// Per-difference densities of a level over all of `Q_i`, mixed-radix indexed.
///
/// Level 1 is scanned directly. Higher levels use the fiber structure: for each
/// `d′ ∈ Q_{i-1}` the triple correlations of the fibers over `w, w+d′, w+2d′`
/// are accumulated as coefficients of `e(-δk/m_i)` and evaluated for every `δ`
/// by one inverse transform.
pub fn level_profile(state: &LevelState) -> Vec<f64> {
    if state.level == 1 {
        let v = &state.values;
        let m = v.len();
        return (0..m)
            .map(|d| (0..m).map(|x| v[x] * v[(x + d) % m] * v[(x + 2 * d) % m]).sum::<f64>() / m as f64)
            .collect();
    }
    let m = *state.factors.last().unwrap() as usize;
    let prev_factors = &state.factors[..state.factors.len() - 1];
    let n_prev = state.prev_values.len();
    let gspec = g_spectrum(state.alpha_prime, m);
    let gs: Vec<(usize, Complex64)> = gspec.support.iter().map(|&r| (r, gspec.coeffs[r])).collect();
    let spectra: Vec<Vec<(usize, Complex64)>> = (0..n_prev)
        .map(|w| fiber_spectrum(state.prev_values[w], state.fibers[w], &gs, m))
        .collect();
    let rows: Vec<Vec<f64>> = (0..n_prev)
        .into_par_iter()
        .map(|dp| {
            let mut acc = vec![Complex64::new(0.0, 0.0); m];
            for w in 0..n_prev {
                let w1 = mixed_add(w, dp, prev_factors);
                let w2 = mixed_add(w1, dp, prev_factors);
                let (s1, s2, s3) = (&spectra[w], &spectra[w1], &spectra[w2]);
                for &(r1, c1) in s1 {
                    for &(r2, c2) in s2 {
                        let r3 = (2 * m - r1 - r2) % m;
                        if let Some(&(_, c3)) = s3.iter().find(|(r, _)| *r == r3) {
                            acc[(r2 + 2 * r3) % m] += c1 * c2 * c3;
                        }
                    }
                }
            }
            idft(&acc).into_iter().map(|c| c.re / n_prev as f64).collect()
        })
        .collect();
    rows.concat()
}

/// `u + v` in mixed radix over `factors`.
pub fn mixed_add(u: usize, v: usize, factors: &[u64]) -> usize {
    let mut out = 0usize;
    let mut place = 1usize;
    let (mut u, mut v) = (u, v);
    let mut carry_free = vec![0usize; factors.len()];
    for (k, &m) in factors.iter().enumerate().rev() {
        let m = m as usize;
        carry_free[k] = (u % m + v % m) % m;
        u /= m;
        v /= m;
    }
    for (k, &m) in factors.iter().enumerate().rev() {
        out += carry_free[k] * place;
        place *= m as usize;
    }
    out
}

/// Mixed-radix coordinates of an index.
pub fn mixed_coords(mut idx: usize, factors: &[u64]) -> Vec<u64> {
    let mut c = vec![0u64; factors.len()];
    for (k, &m) in factors.iter().enumerate().rev() {
        c[k] = (idx % m as usize) as u64;
        idx /= m as usize;
    }
    c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelVerdict {
    pub pass: bool,
    pub bound: f64,
    pub max_offdiag: f64,
    /// Worst difference as an element of `Z_{n_i}`.
    pub worst_d: u64,
    pub worst_coords: Vec<u64>,
    /// Largest density over `d ≠ 0` with `d_[i-1] = 0` and with `d_[i-1] ≠ 0`.
    pub max_fiber_diag: Option<f64>,
    pub max_fiber_offdiag: Option<f64>,
    pub violations: Vec<(u64, f64)>,
}

const MAX_VIOLATIONS: usize = 16;

/// Exhaustive check of `density(d) ≤ α³(1-ε)` for every nonzero `d ∈ Q_i`.
pub fn verify_level(state: &LevelState, epsilon: f64) -> LevelVerdict {
    let prof = level_profile(state);
    verdict_from_profile(state, &prof, epsilon)
}

fn verdict_from_profile(state: &LevelState, prof: &[f64], epsilon: f64) -> LevelVerdict {
    let bound = state.alpha.powi(3) * (1.0 - epsilon);
    let m = *state.factors.last().unwrap() as usize;
    let mut worst = (1usize, f64::NEG_INFINITY);
    let mut diag: Option<f64> = None;
    let mut off: Option<f64> = None;
    let mut violations = Vec::new();
    for (d, &v) in prof.iter().enumerate().skip(1) {
        if v > worst.1 {
            worst = (d, v);
        }
        if state.level > 1 {
            let slot = if d < m { &mut diag } else { &mut off };
            *slot = Some(slot.map_or(v, |s: f64| s.max(v)));
        }
        if v > bound + REL_TOL && violations.len() < MAX_VIOLATIONS {
            violations.push((d, v));
        }
    }
    let coords = mixed_coords(worst.0, &state.factors);
    let to_z = |d: usize| from_coords(&mixed_coords(d, &state.factors), &state.factors).unwrap_or(0);
    LevelVerdict {
        pass: violations.is_empty(),
        bound,
        max_offdiag: worst.1,
        worst_d: to_z(worst.0),
        worst_coords: coords,
        max_fiber_diag: diag,
        max_fiber_offdiag: off,
        violations: violations.into_iter().map(|(d, v)| (to_z(d), v)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelLog {
    pub level: usize,
    pub m: u64,
    pub mu: f64,
    pub chosen: usize,
    pub attempts: usize,
    pub pass: bool,
    pub max_offdiag: f64,
    pub worst_d: u64,
    pub mean_cube: f64,
    pub mean_cube_recursion_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionCert {
    pub seed: u64,
    pub retries: Vec<usize>,
    pub max_offdiag_density: f64,
    pub worst_d: u64,
    pub mean_cube: f64,
    pub alpha_star: f64,
    pub fraction_at_alpha_star: f64,
    pub offdiag_ok: bool,
    pub mean_cube_ok: bool,
    pub fraction_ok: bool,
    pub alpha_star_window_ok: bool,
    /// `Some(i)` when level `i` never passed within the retry budget.
    pub exhausted_at: Option<usize>,
    pub levels: Vec<LevelLog>,
}

impl ConstructionCert {
    pub fn passes(&self) -> bool {
        self.exhausted_at.is_none() && self.offdiag_ok && self.mean_cube_ok && self.fraction_ok && self.alpha_star_window_ok
    }
}

#[derive(Clone, Debug)]
pub struct ProductOutcome {
    pub f: DensityFn,
    pub cert: ConstructionCert,
    pub feasibility: FeasibilityReport,
    pub state: LevelState,
}

fn mu_for(params: &ProductParams, i: usize, state: &LevelState) -> f64 {
    if let Some(mu) = &params.mu {
        return mu[i - 1];
    }
    let strict = params.strict_mu(i);
    match params.mode {
        Mode::Strict => strict,
        Mode::Desk => {
            let avail = state.count_at(state.alpha_prime) as f64 / state.n() as f64;
            strict.min(avail)
        }
    }
}

/// Runs levels `1..=s`, retrying each level with fresh randomness until its
/// exhaustive scan passes. A level that never passes keeps its best attempt and
/// stops the run; the certificate records where.
pub fn construct_product(params: &ProductParams, seed: u64, max_retries_per_level: usize) -> Result<ProductOutcome> {
    let feas = feasibility(params)?;
    if let Some(mu) = &params.mu {
        if mu.len() != params.factors.len() {
            return Err(Error::Precondition("mu schedule length differs from factor count".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = build_level1(params.alpha, params.factors[0])?;
    let v1 = verify_level(&state, params.epsilon);
    let ap3 = state.alpha_prime.powi(3);
    let mut logs = vec![LevelLog {
        level: 1,
        m: params.factors[0],
        mu: 1.0 / params.factors[0] as f64,
        chosen: 1,
        attempts: 1,
        pass: v1.pass,
        max_offdiag: v1.max_offdiag,
        worst_d: v1.worst_d,
        mean_cube: state.mean_cube(),
        mean_cube_recursion_ok: state.mean_cube() <= ap3 * (1.0 + 2.0 * params.strict_mu(1)) + REL_TOL,
    }];
    let mut retries = vec![0usize];
    let mut exhausted_at = (!v1.pass).then_some(1);
    let mut last = v1;
    for (k, &m) in params.factors.iter().enumerate().skip(1) {
        if exhausted_at.is_some() {
            break;
        }
        let i = k + 1;
        let mu = mu_for(params, i, &state);
        let mut best: Option<(LevelState, LevelVerdict)> = None;
        let mut attempts = 0;
        for _ in 0..=max_retries_per_level {
            attempts += 1;
            let next = random_modify_level(&state, m, mu, &mut rng)?;
            let v = verify_level(&next, params.epsilon);
            let better = best.as_ref().is_none_or(|(_, b)| v.max_offdiag < b.max_offdiag);
            let pass = v.pass;
            if better {
                best = Some((next, v));
            }
            if pass {
                break;
            }
        }
        let (next, v) = best.expect("at least one attempt");
        let mc = next.mean_cube();
        logs.push(LevelLog {
            level: i,
            m,
            mu,
            chosen: next.chosen.len(),
            attempts,
            pass: v.pass,
            max_offdiag: v.max_offdiag,
            worst_d: v.worst_d,
            mean_cube: mc,
            mean_cube_recursion_ok: mc <= ap3 * (1.0 + 2.0 * mu) + REL_TOL,
        });
        retries.push(attempts - 1);
        if !v.pass {
            exhausted_at = Some(i);
        }
        state = next;
        last = v;
    }
    let a = params.alpha;
    let frac = state.count_at(state.alpha_prime) as f64 / state.n() as f64;
    let mean_cube = state.mean_cube();
    let cert = ConstructionCert {
        seed,
        retries,
        max_offdiag_density: last.max_offdiag,
        worst_d: last.worst_d,
        mean_cube,
        alpha_star: state.alpha_prime,
        fraction_at_alpha_star: frac,
        offdiag_ok: last.pass,
        mean_cube_ok: mean_cube <= 1.5 * a.powi(3) + REL_TOL,
        fraction_ok: frac >= 0.75,
        alpha_star_window_ok: state.alpha_prime >= a && state.alpha_prime <= a * (1.0 + params.epsilon.powf(0.25)) * (1.0 + REL_TOL),
        exhausted_at,
        levels: logs,
    };
    let f = to_cyclic(&state)?;
    Ok(ProductOutcome { f, cert, feasibility: feas, state })
}

/// Re-indexes a mixed-radix level function to `Z_n` via the CRT isomorphism.
pub fn to_cyclic(state: &LevelState) -> Result<DensityFn> {
    let fs = &state.factors;
    let n = state.n();
    let mut values = vec![0.0; n];
    for x in 0..n as u64 {
        let mut idx = 0usize;
        for &m in fs {
            idx = idx * m as usize + (x % m) as usize;
        }
        values[x as usize] = state.values[idx];
    }
    DensityFn::new(Domain::product(fs)?, values)
}

/// Off-diagonal difference density on level 2 averaged over the fibers with
/// `d_[1] = 0`, when every level-1 point of value α′ carries a random copy of
/// `g_{α′}`: `(1 - 1/m_1) · E_{e≠0} Λ_e(g_{α′})`, which is independent of the randomness.
pub fn level2_fiber_mean(alpha: f64, m1: u64, m2: u64) -> f64 {
    let ap = alpha * m1 as f64 / (m1 - 1) as f64;
    let g = g_values(ap, m2);
    let m = m2 as usize;
    let lam_nonzero: f64 = (1..m)
        .map(|e| (0..m).map(|z| g[z] * g[(z + e) % m] * g[(z + 2 * e) % m]).sum::<f64>() / m as f64)
        .sum::<f64>()
        / (m - 1) as f64;
    (m1 - 1) as f64 / m1 as f64 * lam_nonzero
}
