//! MAP bit-error-rate bounds, Shannon limits and the code planner.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussHermite;
use serde::{Deserialize, Serialize};

use crate::channel::{ebn0_db_from_snr_db, sigma_from_snr_db};
use crate::code_model::CodeSpec;
use crate::math::{binary_entropy, binom, ln_binom};
use crate::rng::derive_seed;
use crate::wef::IrwefTable;
use crate::{Error, Result};

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Value of the truncated upper bound and the list radius attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub value: f64,
    pub r_star: usize,
}

/// `sum_{i <= 2r} (i/k) sum_j A_ij Q(sqrt(i+j)/sigma)` for every `r`, as prefix sums over `i`.
fn union_rows(table: &IrwefTable, sigma: f64) -> Vec<f64> {
    let k = table.info_bits() as f64;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(table.truncation() + 1);
    for i in 0..=table.truncation() {
        let row: f64 = table
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(j, &a)| a * q_function(((i + j) as f64).sqrt() / sigma))
            .sum();
        acc += i as f64 / k * row;
        out.push(acc);
    }
    out
}

/// Binomial(k, eps) probabilities, computed term by term in the log domain.
fn binomial_pmf(k: usize, eps: f64) -> Vec<f64> {
    let (le, l1e) = (eps.ln(), (-eps).ln_1p());
    (0..=k)
        .map(|i| {
            (ln_binom(k as u64, i as u64) + i as f64 * le + (k - i) as f64 * l1e).exp()
        })
        .collect()
}

/// `sum_{i=r+1}^{k} min(i+r, k)/k * P(Bin(k, eps) = i)`.
fn list_tail(pmf: &[f64], r: usize) -> f64 {
    let k = pmf.len() - 1;
    pmf.iter()
        .enumerate()
        .skip(r + 1)
        .map(|(i, &p)| (i + r).min(k) as f64 / k as f64 * p)
        .sum()
}

/// The list-decoding bound at one radius `r_star`. Needs the rows up to
/// `2 r_star`, unless `r_star >= k` where the table must be complete.
pub fn upper_bound_at(table: &IrwefTable, sigma: f64, r_star: usize) -> Result<f64> {
    let k = table.info_bits();
    let t = table.truncation();
    if 2 * r_star > t && t < k {
        return Err(Error::param("r_star", "2 r* exceeds the truncation"));
    }
    let eps = q_function(1.0 / sigma);
    if r_star == 0 {
        // the tail sum is the mean number of hard-decision errors over k
        return Ok(eps);
    }
    let union = union_rows(table, sigma);
    let head = union[(2 * r_star).min(t)];
    Ok(head + list_tail(&binomial_pmf(k, eps), r_star))
}

/// Minimum of the list-decoding bound over `0 <= r* <= T/2`.
pub fn upper_bound_truncated(table: &IrwefTable, sigma: f64) -> UpperBound {
    let k = table.info_bits();
    let t = table.truncation();
    let eps = q_function(1.0 / sigma);
    let union = union_rows(table, sigma);
    let pmf = binomial_pmf(k, eps);
    let mut best = UpperBound {
        value: eps,
        r_star: 0,
    };
    for r in 1..=t / 2 {
        let v = union[2 * r] + list_tail(&pmf, r);
        if v < best.value {
            best = UpperBound { value: v, r_star: r };
        }
    }
    best
}

/// Union bound from a complete enumerator (`T = k`).
pub fn union_bound(table: &IrwefTable, sigma: f64) -> f64 {
    *union_rows(table, sigma).last().unwrap_or(&0.0)
}

/// Lower bound for the ensemble with puncturing fraction `theta`, from the
/// distribution of the generator row weights.
pub fn lower_bound_ensemble(n: usize, m: usize, theta: f64, sigma: f64) -> f64 {
    let base = (n + m * (n - 2)) as f64 - 1.0;
    (0..=m + 1)
        .map(|l| {
            let w = binom(m as i64 + 1, l as i64)
                * theta.powi((m + 1 - l) as i32)
                * (1.0 - theta).powi(l as i32);
            if w == 0.0 {
                0.0
            } else {
                w * q_function((base + l as f64).sqrt() / sigma)
            }
        })
        .sum()
}

/// `(1/k) sum_i Q(sqrt(d_i)/sigma)` for per-bit minimum weights `d_i`.
pub fn lower_bound_per_bit(dmin: &[usize], sigma: f64) -> f64 {
    assert!(!dmin.is_empty());
    dmin.iter()
        .map(|&d| q_function((d as f64).sqrt() / sigma))
        .sum::<f64>()
        / dmin.len() as f64
}

/// `(1/k) Q(sqrt(d_min)/sigma)`, from the minimum distance alone.
pub fn lower_bound_dmin(dmin: usize, k: usize, sigma: f64) -> f64 {
    q_function((dmin as f64).sqrt() / sigma) / k as f64
}

/// The per-bit bound with generator row weights in place of `d_min,i`.
pub fn lower_bound_row_weights(weights: &[usize], sigma: f64) -> f64 {
    lower_bound_per_bit(weights, sigma)
}

fn hermite() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(NonZeroUsize::new(96).unwrap()))
}

/// Capacity in bits of the binary-input AWGN channel with noise deviation `sigma`.
pub fn biawgn_capacity(sigma: f64) -> f64 {
    // C = 1 - E[log2(1 + exp(-2Y/sigma^2))], Y ~ N(1, sigma^2)
    let s2 = sigma * sigma;
    let e = hermite().integrate(|x| {
        let y = 1.0 + sigma * std::f64::consts::SQRT_2 * x;
        let a = -2.0 * y / s2;
        // log2(1 + e^a), stable for both signs
        (a.max(0.0) + (-a.abs()).exp().ln_1p()) / std::f64::consts::LN_2
    }) / std::f64::consts::PI.sqrt();
    (1.0 - e).clamp(0.0, 1.0)
}

/// Smallest SNR `1/sigma^2` (dB) at which rate `rate` can be sent with
/// bit-error rate `target_ber`: `C(sigma) = R (1 - H2(p))`.
pub fn shannon_limit_snr(rate: f64, target_ber: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::param("rate", "must lie in (0, 1)"));
    }
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return Err(Error::param("target_ber", "must lie in (0, 0.5)"));
    }
    let need = rate * (1.0 - binary_entropy(target_ber));
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if biawgn_capacity(sigma_from_snr_db(mid)) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(hi)
}

/// Largest memory searched by [`required_memory`].
pub const MEMORY_CAP: usize = 256;

/// Smallest `m` whose ensemble lower bound at `snr_db` is at most `target_ber`.
pub fn required_memory(n: usize, theta: f64, snr_db: f64, target_ber: f64) -> Result<usize> {
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return Err(Error::param("target_ber", "must lie in (0, 0.5)"));
    }
    if n < 2 || !(0.0..1.0).contains(&theta) {
        return Err(Error::param("theta", "need N >= 2 and 0 <= theta < 1"));
    }
    let sigma = sigma_from_snr_db(snr_db);
    (0..=MEMORY_CAP)
        .find(|&m| lower_bound_ensemble(n, m, theta, sigma) <= target_ber)
        .ok_or(Error::SearchCap("encoding memory"))
}

/// Outcome of the construction procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub target_rate: f64,
    pub target_ber: f64,
    pub n: usize,
    /// `N - 1/R`.
    pub theta: f64,
    pub k_p: usize,
    pub memory: usize,
    pub spec: CodeSpec,
    /// Rate of the terminated code.
    pub terminated_rate: f64,
    pub rate_loss: f64,
    pub shannon_limit_snr_db: f64,
    pub shannon_limit_ebn0_db: f64,
    /// Ensemble lower bound at the Shannon limit for the chosen code.
    pub predicted_floor: f64,
}

/// Picks `N`, `theta` and the smallest memory whose lower bound at the
/// Shannon limit meets `target_ber`; interleaver and puncturing seeds are
/// drawn from `seed`.
pub fn plan_code(rate: f64, target_ber: f64, k: usize, l: usize, seed: u64) -> Result<PlanResult> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::param("rate", "must lie in (0, 1)"));
    }
    let inv = 1.0 / rate;
    let n = (inv - 1e-9).ceil().max(2.0) as usize;
    let theta = (n as f64 - inv).max(0.0);
    let k_p = (theta * k as f64).round() as usize;
    let realized = k_p as f64 / k as f64;
    let limit = shannon_limit_snr(rate, target_ber)?;
    let memory = required_memory(n, realized, limit, target_ber)?;
    let spec = CodeSpec::new(n, k, k_p, l, memory)
        .with_seeds(derive_seed(seed, 0), derive_seed(seed, 1))
        .validate()?;
    let r_l = spec.terminated_rate().as_f64();
    Ok(PlanResult {
        target_rate: rate,
        target_ber,
        n,
        theta,
        k_p,
        memory,
        spec,
        terminated_rate: r_l,
        rate_loss: rate - r_l,
        shannon_limit_snr_db: limit,
        shannon_limit_ebn0_db: ebn0_db_from_snr_db(rate, limit),
        predicted_floor: lower_bound_ensemble(n, memory, realized, sigma_from_snr_db(limit)),
    })
}

/// Which bound a curve holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    EnsembleLower,
    TruncatedUpper,
    PerBitLower,
    HardDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub kind: BoundKind,
    /// `(snr_db, ber)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Evaluates `f(sigma)` on an SNR grid given in dB.
pub fn bound_curve(kind: BoundKind, snr_db: &[f64], f: impl Fn(f64) -> f64) -> BoundCurve {
    BoundCurve {
        kind,
        points: snr_db
            .iter()
            .map(|&s| (s, f(sigma_from_snr_db(s)).clamp(0.0, 1.0)))
            .collect(),
    }
}

/// SNR (dB) at which `f(sigma) = target`, for `f` decreasing in SNR, by bisection
/// on `[lo_db, hi_db]`.
pub fn solve_snr(f: impl Fn(f64) -> f64, target: f64, lo_db: f64, hi_db: f64) -> Option<f64> {
    let g = |db: f64| f(sigma_from_snr_db(db)) - target;
    let (mut lo, mut hi) = (lo_db, hi_db);
    if g(lo) < 0.0 || g(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wef::{compute_irwef, IrwefOptions};

    #[test]
    fn q_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        for &x in &[0.3, 1.7, 4.0] {
            assert!((q_function(-x) - (1.0 - q_function(x))).abs() < 1e-15);
        }
        // far tail, relative accuracy
        assert!((q_function(8.0) / 6.220_960_574_271_785e-16 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ensemble_lower_bound() {
        let s = 0.7;
        assert_eq!(lower_bound_ensemble(2, 0, 0.0, s), q_function(2f64.sqrt() / s));
        for &(n, m) in &[(2, 3), (3, 2), (4, 5)] {
            let want = q_function(((n + m * (n - 1)) as f64).sqrt() / s);
            assert!((lower_bound_ensemble(n, m, 0.0, s) - want).abs() < 1e-18);
            let v = lower_bound_ensemble(n, m, 0.4, s);
            let lo = q_function(((n + m * (n - 1)) as f64).sqrt() / s);
            let hi = q_function((((n + m * (n - 2)) as f64) - 1.0).sqrt() / s);
            assert!(lo <= v && v <= hi);
        }
    }

    #[test]
    fn per_bit_bounds() {
        let s = 0.9;
        assert!((lower_bound_per_bit(&[5; 7], s) - q_function(5f64.sqrt() / s)).abs() < 1e-16);
        assert!(lower_bound_dmin(2, 4, s) <= lower_bound_per_bit(&[2, 3, 3, 4], s));
    }

    #[test]
    fn upper_bound_branches() {
        let spec = CodeSpec::new(2, 3, 0, 2, 1);
        let full = compute_irwef(&spec, &IrwefOptions::exact(6)).unwrap();
        for &s in &[0.5, 0.8, 1.2] {
            let eps = q_function(1.0 / s);
            assert_eq!(upper_bound_at(&full, s, 0).unwrap(), eps);
            let ub = upper_bound_at(&full, s, 6).unwrap();
            assert!((ub - union_bound(&full, s)).abs() < 1e-15);
            let best = upper_bound_truncated(&full, s);
            assert!(best.value <= eps);
        }
        let part = compute_irwef(&spec, &IrwefOptions::exact(2)).unwrap();
        assert!(upper_bound_at(&part, 1.0, 2).is_err());
    }

    #[test]
    fn tail_identity_at_radius_zero() {
        // the general expression at r* = 0 is the binomial mean over k
        let pmf = binomial_pmf(200, 0.03);
        assert!((list_tail(&pmf, 0) - 0.03).abs() < 1e-14);
    }

    #[test]
    fn capacity_matches_trapezoid_integration() {
        for &sigma in &[0.3, 0.7, 0.97, 1.5, 3.0] {
            let s2 = sigma * sigma;
            let (lo, hi, n) = (1.0 - 12.0 * sigma, 1.0 + 12.0 * sigma, 200_000);
            let h = (hi - lo) / n as f64;
            let f = |y: f64| {
                let pdf = (-(y - 1.0) * (y - 1.0) / (2.0 * s2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                let a = -2.0 * y / s2;
                pdf * (a.max(0.0) + (-a.abs()).exp().ln_1p()) / std::f64::consts::LN_2
            };
            let sum: f64 = (0..=n)
                .map(|i| {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * f(lo + i as f64 * h)
                })
                .sum();
            let reference = 1.0 - sum * h;
            assert!((biawgn_capacity(sigma) - reference).abs() < 1e-6, "sigma {sigma}");
        }
    }

    #[test]
    fn capacity_reference_points() {
        assert!(biawgn_capacity(0.01) > 1.0 - 1e-12);
        assert!(biawgn_capacity(30.0) < 1e-3);
        // rate-1/2 limit at vanishing error probability: Eb/N0 = 0.187 dB
        let snr = shannon_limit_snr(0.5, 1e-5).unwrap();
        assert!((ebn0_db_from_snr_db(0.5, snr) - 0.187).abs() < 0.02);
        let mut prev = f64::NEG_INFINITY;
        for r in 1..10 {
            let s = shannon_limit_snr(r as f64 / 10.0, 1e-5).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn memory_search() {
        let snr = shannon_limit_snr(0.5, 1e-5).unwrap();
        assert_eq!(required_memory(2, 0.0, snr, 1e-5).unwrap(), 16);
        let snr = shannon_limit_snr(1.0 / 3.0, 1e-3).unwrap();
        assert_eq!(required_memory(3, 0.0, snr, 1e-3).unwrap(), 7);
        assert!(required_memory(2, 0.0, -10.0, 1e-9).is_err());
    }

    #[test]
    fn planner() {
        let p = plan_code(0.5, 1e-5, 100, 10, 1).unwrap();
        assert_eq!((p.n, p.theta, p.k_p, p.memory), (2, 0.0, 0, 16));
        assert!(p.predicted_floor <= 1e-5);
        let p = plan_code(0.4, 1e-4, 100, 10, 1).unwrap();
        assert_eq!((p.n, p.k_p), (3, 50));
        assert!((p.theta - 0.5).abs() < 1e-12);
        let p = plan_code(2.0 / 3.0, 1e-4, 100, 10, 1).unwrap();
        assert_eq!((p.n, p.k_p), (2, 50));
        assert!(p.rate_loss > 0.0);
    }

    #[test]
    fn solve_for_target() {
        let f = |s: f64| lower_bound_ensemble(2, 2, 0.0, s);
        let db = solve_snr(f, 1e-4, -5.0, 20.0).unwrap();
        assert!((f(sigma_from_snr_db(db)) / 1e-4 - 1.0).abs() < 1e-8);
    }
}
