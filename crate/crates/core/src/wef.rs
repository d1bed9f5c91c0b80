//! Ensemble weight enumerators.
//!
//! Over the ensemble of uniformly random, time-varying interleavers (and
//! uniformly random puncturing patterns), the weight of a parity branch at
//! layer `t` depends on the message only through the weights of the blocks
//! `u(t), ..., u(t-m)`. This makes the input-redundancy weight enumerator
//! computable on a trellis whose state is the vector of the last `m` block
//! weights.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::code_model::CodeSpec;
use crate::math::{binom, ln_binom, poly, BinomialTable};
use crate::{Error, Result};

/// Probability that two independently and uniformly interleaved length-`k`
/// vectors of weights `p` and `q` add up to weight `r`, for every `r` in `0..=k`.
pub fn superpose_dist(p: usize, q: usize, k: usize) -> Vec<f64> {
    assert!(p <= k && q <= k);
    let mut out = vec![0.0; k + 1];
    superpose_into(p, q, k, 1.0, &mut out, &Binomials::new(k));
    out
}

/// Binomials up to `k`, as doubles while they fit, in the log domain beyond.
#[derive(Debug, Clone)]
struct Binomials {
    table: Option<BinomialTable>,
}

impl Binomials {
    fn new(k: usize) -> Self {
        Binomials {
            table: (k <= 1000).then(|| BinomialTable::new(k)),
        }
    }

    /// `C(a, x) C(b, y) / C(c, z)`.
    fn ratio(&self, a: usize, x: i64, b: usize, y: i64, c: usize, z: i64) -> f64 {
        match &self.table {
            Some(t) => t.get(a, x) * t.get(b, y) / t.get(c, z),
            None => {
                if x < 0 || y < 0 || z < 0 || x as usize > a || y as usize > b || z as usize > c {
                    return 0.0;
                }
                (ln_binom(a as u64, x as u64) + ln_binom(b as u64, y as u64)
                    - ln_binom(c as u64, z as u64))
                .exp()
            }
        }
    }
}

/// `out[r] += scale * g(r | p, q)`.
fn superpose_into(p: usize, q: usize, k: usize, scale: f64, out: &mut [f64], b: &Binomials) {
    // overlap o: r = p + q - 2o, max(0, p + q - k) <= o <= min(p, q)
    let lo = (p + q).saturating_sub(k);
    for o in lo..=p.min(q) {
        let w = b.ratio(q, o as i64, k - q, (p - o) as i64, k, p as i64);
        out[p + q - 2 * o] += scale * w;
    }
}

/// Weight distribution `f(r | p, q0)` of `pi_0(u(t)) + pi_1(u(t-1)) + ...`
/// when `u(t)` has weight `q0` and the history blocks have weights `p`.
pub fn branch_dist(p: &[usize], q0: usize, k: usize) -> Vec<f64> {
    branch_dist_with(p, q0, k, &Binomials::new(k))
}

fn branch_dist_with(p: &[usize], q0: usize, k: usize, b: &Binomials) -> Vec<f64> {
    let mut alpha = vec![0.0; k + 1];
    alpha[q0] = 1.0;
    for &pj in p {
        if pj == 0 {
            continue;
        }
        let mut next = vec![0.0; k + 1];
        for (l, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                superpose_into(pj, l, k, a, &mut next, b);
            }
        }
        alpha = next;
    }
    alpha
}

/// Redundancy weight enumerator of the punctured last branch: `f(r | p, q0)`
/// thinned by a uniformly random choice of `k_p` punctured positions.
pub fn punctured_branch_dist(p: &[usize], q0: usize, k: usize, k_p: usize) -> Vec<f64> {
    let b = Binomials::new(k);
    thin(&branch_dist_with(p, q0, k, &b), k, k_p, &b)
}

fn thin(f: &[f64], k: usize, k_p: usize, b: &Binomials) -> Vec<f64> {
    if k_p == 0 {
        return f.to_vec();
    }
    let mut out = vec![0.0; k - k_p + 1];
    for (r, &fr) in f.iter().enumerate() {
        if fr == 0.0 {
            continue;
        }
        // w of the r ones fall on punctured positions
        for w in r.saturating_sub(k - k_p)..=r.min(k_p) {
            out[r - w] += fr * b.ratio(r, w as i64, k - r, (k_p - w) as i64, k, k_p as i64);
        }
    }
    out
}

/// Truncated input-redundancy weight enumerator `A(X, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrwefTable {
    /// `rows[i][j] = A_{i,j}` for `i <= truncation`.
    rows: Vec<Vec<f64>>,
    truncation: usize,
    /// Terms with `i + j > cap` are stored at `j = cap + 1 - i`.
    weight_cap: Option<usize>,
    info_bits: usize,
}

impl IrwefTable {
    pub fn from_rows(rows: Vec<Vec<f64>>, info_bits: usize, weight_cap: Option<usize>) -> Self {
        let truncation = rows.len().saturating_sub(1);
        IrwefTable {
            rows: rows.into_iter().map(poly::trim).collect(),
            truncation,
            weight_cap,
            info_bits,
        }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn weight_cap(&self) -> Option<usize> {
        self.weight_cap
    }

    /// `k = K L`.
    pub fn info_bits(&self) -> usize {
        self.info_bits
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows
            .get(i)
            .and_then(|r| r.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    /// `A_i(Y)` as coefficients in `Y`.
    pub fn row(&self, i: usize) -> &[f64] {
        self.rows.get(i).map_or(&[], Vec::as_slice)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Nonzero entries `(i, j, A_ij)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .enumerate()
                .filter(|(_, &a)| a != 0.0)
                .map(move |(j, &a)| (i, j, a))
        })
    }

    /// `D_s = sum_i (i / k) A_{i, s-i}` for `s = 1 ..= truncation`; index `s - 1`.
    pub fn spectrum(&self) -> Vec<f64> {
        spectrum(self, self.info_bits)
    }
}

/// Minimum-weight spectrum `D_s`, `0 < s <= T`, with `k` information bits.
/// Element `s - 1` holds `D_s`.
pub fn spectrum(table: &IrwefTable, k: usize) -> Vec<f64> {
    let t = table.truncation;
    (1..=t)
        .map(|s| {
            (1..=s)
                .map(|i| i as f64 / k as f64 * table.get(i, s - i))
                .sum()
        })
        .collect()
}

/// Smallest `s` with `D_s > 0`.
pub fn min_spectral_weight(spectrum: &[f64]) -> Option<usize> {
    spectrum.iter().position(|&d| d > 0.0).map(|i| i + 1)
}

/// Knobs of the trellis computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrwefOptions {
    /// Largest input weight kept (`T`).
    pub truncation: usize,
    /// Lumps every term of total weight above the cap at total weight
    /// `cap + 1`. Counts are preserved, the spectrum up to the cap is exact,
    /// and union-type bounds only get larger. `None` keeps every term.
    pub weight_cap: Option<usize>,
    /// Budget on `states * coefficients per state`.
    pub max_coefficients: usize,
}

impl IrwefOptions {
    pub fn exact(truncation: usize) -> Self {
        IrwefOptions {
            truncation,
            weight_cap: None,
            max_coefficients: 1 << 26,
        }
    }

    pub fn capped(truncation: usize, cap: usize) -> Self {
        IrwefOptions {
            weight_cap: Some(cap),
            ..Self::exact(truncation)
        }
    }
}

/// Triangular storage of a bivariate polynomial truncated at `X^T`.
#[derive(Debug, Clone)]
struct Shape {
    offsets: Vec<usize>,
    /// Largest `j` stored in each row.
    last: Vec<usize>,
    capped: Vec<bool>,
    size: usize,
}

impl Shape {
    fn new(t: usize, j_max: usize, cap: Option<usize>) -> Self {
        let mut offsets = Vec::with_capacity(t + 1);
        let mut last = Vec::with_capacity(t + 1);
        let mut capped = Vec::with_capacity(t + 1);
        let mut size = 0;
        for i in 0..=t {
            let (l, c) = match cap {
                Some(c) if c + 1 - i < j_max => (c + 1 - i, true),
                _ => (j_max, false),
            };
            offsets.push(size);
            last.push(l);
            capped.push(c);
            size += l + 1;
        }
        Shape {
            offsets,
            last,
            capped,
            size,
        }
    }

    #[inline]
    fn row<'a>(&self, data: &'a [f64], i: usize) -> &'a [f64] {
        &data[self.offsets[i]..=self.offsets[i] + self.last[i]]
    }
}

/// Per-branch factor `C(K, q0) gamma~(Y) gamma(Y)^(N-2)` with suffix sums for lumping.
#[derive(Debug)]
struct Factor {
    coef: Vec<f64>,
    suffix: Vec<f64>,
}

impl Factor {
    fn new(coef: Vec<f64>) -> Self {
        let coef = poly::trim(coef);
        let mut suffix = vec![0.0; coef.len() + 1];
        for r in (0..coef.len()).rev() {
            suffix[r] = suffix[r + 1] + coef[r];
        }
        Factor { coef, suffix }
    }
}

/// Trellis computation of the truncated IRWEF of the ensemble of `spec`.
pub fn compute_irwef(spec: &CodeSpec, opts: &IrwefOptions) -> Result<IrwefTable> {
    let spec = spec.validate()?;
    let (n, k, k_p, l, m) = (spec.n(), spec.k(), spec.k_p(), spec.l(), spec.m());
    let t_max = opts.truncation.min(k * l);
    if let Some(c) = opts.weight_cap {
        if c < t_max {
            return Err(Error::param("weight_cap", "must be at least the truncation"));
        }
    }
    if k > u16::MAX as usize {
        return Err(Error::ResourceLimit("block length too large for the trellis".into()));
    }
    let j_max = (l + m) * ((n - 1) * k - k_p);
    let shape = Shape::new(t_max, j_max, opts.weight_cap);
    let bin = Binomials::new(k);

    let mut factor_index: HashMap<(Vec<u16>, u16), usize> = HashMap::new();
    let mut factors: Vec<Factor> = Vec::new();
    let mut states: Vec<(Vec<u16>, Vec<f64>)> = {
        let mut d = vec![0.0; shape.size];
        d[0] = 1.0;
        vec![(vec![0u16; m], d)]
    };

    for t in 0..l + m {
        let q_hi = if t < l { k } else { 0 };
        let mut factor_id = |p: &[u16], q0: usize| -> usize {
            let mut key: Vec<u16> = p.to_vec();
            key.sort_unstable();
            *factor_index.entry((key, q0 as u16)).or_insert_with_key(|(key, _)| {
                let pw: Vec<usize> = key.iter().map(|&x| x as usize).collect();
                let f = branch_dist_with(&pw, q0, k, &bin);
                let last = thin(&f, k, k_p, &bin);
                let g = poly::mul(&poly::pow(&f, n - 2), &last);
                factors.push(Factor::new(poly::scale(&g, binom(k as i64, q0 as i64))));
                factors.len() - 1
            })
        };
        // destination -> [(source index, q0, factor)]
        let mut groups: HashMap<Vec<u16>, Vec<(usize, usize, usize)>> = HashMap::new();
        for (si, (p, _)) in states.iter().enumerate() {
            let sum: usize = p.iter().map(|&x| x as usize).sum();
            for q0 in 0..=q_hi {
                if q0 + sum > t_max {
                    break;
                }
                let mut q = Vec::with_capacity(m);
                if m > 0 {
                    q.push(q0 as u16);
                    q.extend_from_slice(&p[..m - 1]);
                }
                groups.entry(q).or_default().push((si, q0, factor_id(p, q0)));
            }
        }
        let needed = groups.len().saturating_mul(shape.size);
        if needed > opts.max_coefficients {
            return Err(Error::ResourceLimit(format!(
                "{} trellis states x {} coefficients exceeds the budget of {}",
                groups.len(),
                shape.size,
                opts.max_coefficients
            )));
        }
        let mut jobs: Vec<_> = groups.into_iter().collect();
        jobs.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let factors = &factors;
        let states_ref = &states;
        let shape = &shape;
        let run = |(q, srcs): &(Vec<u16>, Vec<(usize, usize, usize)>)| {
            let mut out = vec![0.0; shape.size];
            for &(si, q0, fi) in srcs {
                let (p, beta) = &states_ref[si];
                let sum: usize = p.iter().map(|&x| x as usize).sum();
                accumulate(shape, beta, &factors[fi], q0, sum, t_max, &mut out);
            }
            (q.clone(), out)
        };
        #[cfg(feature = "parallel")]
        let next: Vec<(Vec<u16>, Vec<f64>)> = {
            use rayon::prelude::*;
            jobs.par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let next: Vec<(Vec<u16>, Vec<f64>)> = jobs.iter().map(run).collect();
        states = next;
    }

    let zero = vec![0u16; m];
    let data = states
        .into_iter()
        .find(|(p, _)| *p == zero)
        .map(|(_, d)| d)
        .unwrap_or_else(|| vec![0.0; shape.size]);
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::ResourceLimit("enumerator coefficients overflowed".into()));
    }
    let rows = (0..=t_max).map(|i| shape.row(&data, i).to_vec()).collect();
    Ok(IrwefTable::from_rows(rows, k * l, opts.weight_cap))
}

/// `out += X^q0 F(Y) beta`, truncated at `X^T` and lumped at the cap.
fn accumulate(
    shape: &Shape,
    beta: &[f64],
    f: &Factor,
    q0: usize,
    min_row: usize,
    t_max: usize,
    out: &mut [f64],
) {
    let flen = f.coef.len();
    if flen == 0 {
        return;
    }
    for i in min_row..=t_max - q0 {
        let src = shape.row(beta, i);
        let di = i + q0;
        let last = shape.last[di];
        let lump = shape.capped[di];
        let base = shape.offsets[di];
        for (j, &b) in src.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            if j > last {
                // only possible when the destination row is capped
                out[base + last] += b * f.suffix[0];
                continue;
            }
            let direct = (last - j + 1).min(flen);
            let dst = &mut out[base + j..base + j + direct];
            for (d, &c) in dst.iter_mut().zip(&f.coef[..direct]) {
                *d += b * c;
            }
            if direct < flen {
                debug_assert!(lump);
                out[base + last] += b * f.suffix[direct];
            }
        }
    }
}

/// Input-weight 1 and 2 rows of the ensemble IRWEF in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crwef {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
}

/// Redundancy enumerator of a weight-1 length-`k` vector after puncturing
/// `k_p` random positions: `theta + (1 - theta) Y`.
pub fn puncture_enumerator_1(k: usize, k_p: usize) -> Vec<f64> {
    let c = binom(k as i64, k_p as i64);
    vec![
        binom(k as i64 - 1, k_p as i64 - 1) / c,
        binom(k as i64 - 1, k_p as i64) / c,
    ]
}

/// The same for a weight-2 vector. Out-of-range binomials vanish, so one
/// expression covers every `k_p`.
pub fn puncture_enumerator_2(k: usize, k_p: usize) -> Vec<f64> {
    let c = binom(k as i64, k_p as i64);
    let (k, k_p) = (k as i64, k_p as i64);
    vec![
        binom(k - 2, k_p - 2) / c,
        2.0 * binom(k - 2, k_p - 1) / c,
        binom(k - 2, k_p) / c,
    ]
}

/// `A_1(Y)` and `A_2(Y)` assembled from the same-layer, short-gap and
/// long-gap cases.
pub fn crwef_closed_form(spec: &CodeSpec) -> Result<Crwef> {
    let spec = spec.validate()?;
    let (n, k, k_p, l, m) = (spec.n(), spec.k(), spec.k_p(), spec.l(), spec.m());
    let kf = k as f64;
    let b1 = puncture_enumerator_1(k, k_p);
    let b2 = puncture_enumerator_2(k, k_p);
    let y = |e: usize| poly::shift(&[1.0], e);

    let a1 = poly::scale(
        &poly::mul(&y((m + 1) * (n - 2)), &poly::pow(&b1, m + 1)),
        (l * k) as f64,
    );

    let mut a2 = Vec::new();
    if k >= 2 {
        let same = poly::mul(&y(2 * (m + 1) * (n - 2)), &poly::pow(&b2, m + 1));
        poly::add_into(&mut a2, &poly::scale(&same, kf * (kf - 1.0) * l as f64 / 2.0));
    }
    // two weight-1 vectors interleaved independently: weight 0 or 2
    let overlap = [1.0 / kf, 0.0, (kf - 1.0) / kf];
    let overlap_last = poly::add_scalar(&poly::scale(&b2, (kf - 1.0) / kf), 1.0 / kf);
    for gap in 1..l {
        let term = if gap <= m {
            let o = m + 1 - gap;
            poly::mul(
                &poly::mul(&y(2 * gap * (n - 2)), &poly::pow(&b1, 2 * gap)),
                &poly::mul(&poly::pow(&overlap, o * (n - 2)), &poly::pow(&overlap_last, o)),
            )
        } else {
            poly::mul(&y(2 * (m + 1) * (n - 2)), &poly::pow(&b1, 2 * (m + 1)))
        };
        poly::add_into(&mut a2, &poly::scale(&term, (l - gap) as f64 * kf * kf));
    }
    Ok(Crwef {
        a1: poly::trim(a1),
        a2: poly::trim(a2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let n = a.len().max(b.len());
        (0..n).all(|i| {
            let x = a.get(i).copied().unwrap_or(0.0);
            let y = b.get(i).copied().unwrap_or(0.0);
            (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
        })
    }

    #[test]
    fn superposition() {
        let g = superpose_dist(2, 2, 4);
        assert!(close(&g, &[1.0 / 6.0, 0.0, 4.0 / 6.0, 0.0, 1.0 / 6.0], 1e-15));
        for k in 1..=12 {
            for p in 0..=k {
                for q in 0..=k {
                    let g = superpose_dist(p, q, k);
                    assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    if p == 0 {
                        assert_eq!(g[q], 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn branch_distributions() {
        let f = branch_dist(&[0], 3, 8);
        assert_eq!(f[3], 1.0);
        let a = branch_dist(&[2, 5, 1], 3, 10);
        let b = branch_dist(&[5, 1, 2], 3, 10);
        assert!(close(&a, &b, 1e-12));
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(punctured_branch_dist(&[2, 1], 3, 8, 0), branch_dist(&[2, 1], 3, 8));
        let full = punctured_branch_dist(&[2, 1], 3, 8, 8);
        assert_eq!(full, vec![1.0]);
        for kp in 0..=8 {
            let f = branch_dist(&[2, 1], 3, 8);
            let g = punctured_branch_dist(&[2, 1], 3, 8, kp);
            let mean = |v: &[f64]| v.iter().enumerate().map(|(r, &x)| r as f64 * x).sum::<f64>();
            assert!((mean(&g) - mean(&f) * (8 - kp) as f64 / 8.0).abs() < 1e-12);
            assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn a1_matches_closed_form() {
        for m in 0..=2 {
            let spec = CodeSpec::new(2, 30, 0, 20, m);
            let t = compute_irwef(&spec, &IrwefOptions::exact(1)).unwrap();
            assert_eq!(t.get(0, 0), 1.0);
            let cf = crwef_closed_form(&spec).unwrap();
            let mut want = vec![0.0; m + 2];
            want[m + 1] = 600.0;
            assert!(close(&cf.a1, &want, 1e-12));
            assert!(close(t.row(1), &cf.a1, 1e-9));
        }
    }

    #[test]
    fn rows_match_closed_form_with_puncturing() {
        for &(n, k, kp, l, m) in &[(2, 10, 3, 5, 1), (3, 6, 1, 4, 2), (2, 5, 2, 3, 0), (4, 4, 0, 3, 1)] {
            let spec = CodeSpec::new(n, k, kp, l, m);
            let t = compute_irwef(&spec, &IrwefOptions::exact(2)).unwrap();
            let cf = crwef_closed_form(&spec).unwrap();
            assert!(close(t.row(1), &cf.a1, 1e-9), "{n} {k} {kp} {l} {m}");
            assert!(close(t.row(2), &cf.a2, 1e-9), "{n} {k} {kp} {l} {m}");
        }
    }

    #[test]
    fn memoryless_a2() {
        let (k, l) = (7.0, 4usize);
        let cf = crwef_closed_form(&CodeSpec::new(2, 7, 0, l, 0)).unwrap();
        let gaps: f64 = (1..l).map(|g| (l - g) as f64 * k * k).sum();
        assert!(close(&cf.a2, &[0.0, 0.0, k * (k - 1.0) * l as f64 / 2.0 + gaps], 1e-12));
    }

    #[test]
    fn printed_b2_branches() {
        for k in 2..12 {
            for kp in 0..=1usize {
                let printed = [0.0, 2.0 * kp as f64 / k as f64, (k - 2 * kp) as f64 / k as f64];
                assert!(close(&puncture_enumerator_2(k, kp), &printed, 1e-14));
            }
        }
        assert!(close(&puncture_enumerator_1(10, 3), &[0.3, 0.7], 1e-15));
    }

    #[test]
    fn counts_are_conserved() {
        let spec = CodeSpec::new(3, 4, 1, 3, 1);
        for opts in [IrwefOptions::exact(12), IrwefOptions::capped(6, 8)] {
            let t = compute_irwef(&spec, &opts).unwrap();
            for i in 0..=t.truncation() {
                let total: f64 = t.row(i).iter().sum();
                assert!((total - binom(12, i as i64)).abs() < 1e-9 * total.max(1.0));
            }
        }
    }

    #[test]
    fn cap_keeps_low_spectrum() {
        let spec = CodeSpec::new(2, 6, 0, 4, 1);
        let exact = compute_irwef(&spec, &IrwefOptions::exact(10)).unwrap();
        let capped = compute_irwef(&spec, &IrwefOptions::capped(10, 10)).unwrap();
        assert!(close(&exact.spectrum(), &capped.spectrum(), 1e-12));
        for (i, j, _) in capped.entries() {
            assert!(i + j <= 11);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let spec = CodeSpec::new(2, 30, 0, 20, 2);
        let opts = IrwefOptions {
            max_coefficients: 1000,
            ..IrwefOptions::capped(60, 60)
        };
        assert!(matches!(compute_irwef(&spec, &opts), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn spectrum_of_memoryless_code() {
        let spec = CodeSpec::new(2, 5, 0, 3, 0);
        let t = compute_irwef(&spec, &IrwefOptions::exact(4)).unwrap();
        let d = t.spectrum();
        assert_eq!(min_spectral_weight(&d), Some(2));
        // D_2 = (1/k) A_{1,1}
        assert!((d[1] - 15.0 / 15.0).abs() < 1e-12);
        assert_eq!(d[0], 0.0);
    }
}
