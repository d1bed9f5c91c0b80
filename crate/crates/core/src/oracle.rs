//! Brute-force references for small codes.
//!
//! Everything here is exponential in the code size and exists to validate
//! the production paths: exhaustive codebooks with exact MAP, ML and list
//! decoding, exhaustive ensemble averaging of weight enumerators, a
//! block-trellis MAP decoder for codes whose codebook is too large to list
//! but whose state space (`2^(K m)`) is small, and the two-component
//! product code used to show how loose the minimum-distance bound can be.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::q_function;
use crate::channel::{bpsk_modulate, llr_unclipped, transmit, ChannelParams};
use crate::code_model::{CodeSpec, FrameLayout};
use crate::decoder::decide;
use crate::encoder::{encode_message, CodeTables, Interleaver, PuncturePattern};
use crate::math::binom;
use crate::rng;
use crate::wef::IrwefTable;
use crate::{Error, Result};

/// Largest message length accepted by the exhaustive codebook.
pub const MAX_CODEBOOK_BITS: usize = 16;

/// Every codeword of a code with `k <= 16` information bits, indexed by
/// message: bit `i` of the index is message bit `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    k: usize,
    n: usize,
    codewords: Vec<Vec<u8>>,
    /// Codeword position carrying message bit `i`.
    systematic: Vec<usize>,
}

impl Codebook {
    pub fn from_codewords(k: usize, codewords: Vec<Vec<u8>>, systematic: Vec<usize>) -> Result<Self> {
        if k > MAX_CODEBOOK_BITS {
            return Err(Error::ResourceLimit(format!("codebook with k = {k} > {MAX_CODEBOOK_BITS}")));
        }
        if codewords.len() != 1 << k || systematic.len() != k {
            return Err(Error::param("codewords", "need 2^k codewords and k systematic positions"));
        }
        let n = codewords[0].len();
        if codewords.iter().any(|c| c.len() != n) || systematic.iter().any(|&p| p >= n) {
            return Err(Error::param("codewords", "inconsistent lengths"));
        }
        Ok(Codebook {
            k,
            n,
            codewords,
            systematic,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, message: usize) -> &[u8] {
        &self.codewords[message]
    }

    pub fn codewords(&self) -> &[Vec<u8>] {
        &self.codewords
    }

    pub fn systematic_positions(&self) -> &[usize] {
        &self.systematic
    }

    pub fn message_bits(&self, message: usize) -> Vec<u8> {
        (0..self.k).map(|i| ((message >> i) & 1) as u8).collect()
    }

    pub fn message_index(bits: &[u8]) -> usize {
        bits.iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (usize::from(b & 1) << i))
    }
}

/// Encodes every message of a concrete code.
pub fn enumerate_codebook<T: CodeTables + ?Sized>(tables: &T) -> Result<Codebook> {
    let spec = tables.spec();
    let k = spec.info_bits();
    if k > MAX_CODEBOOK_BITS {
        return Err(Error::ResourceLimit(format!(
            "codebook of K L = {k} bits exceeds {MAX_CODEBOOK_BITS}"
        )));
    }
    let codewords = (0..1usize << k)
        .map(|idx| {
            let msg: Vec<u8> = (0..k).map(|i| ((idx >> i) & 1) as u8).collect();
            encode_message(tables, &msg)
        })
        .collect::<Result<Vec<_>>>()?;
    let systematic = spec.layout().systematic_positions().collect();
    Codebook::from_codewords(k, codewords, systematic)
}

fn weight(c: &[u8]) -> usize {
    c.iter().filter(|&&b| b == 1).count()
}

/// `d_min,i`: the least codeword weight among messages with `u_i = 1`.
pub fn dmin_per_bit(book: &Codebook) -> Vec<usize> {
    let mut d = vec![usize::MAX; book.k];
    for (idx, c) in book.codewords.iter().enumerate() {
        let w = weight(c);
        for (i, di) in d.iter_mut().enumerate() {
            if (idx >> i) & 1 == 1 {
                *di = (*di).min(w);
            }
        }
    }
    d
}

pub fn min_distance(book: &Codebook) -> usize {
    dmin_per_bit(book).into_iter().min().unwrap_or(0)
}

/// Weights of the codewords of the unit messages (generator rows).
pub fn row_weights(book: &Codebook) -> Vec<usize> {
    (0..book.k).map(|i| weight(&book.codewords[1 << i])).collect()
}

/// Exact posteriors and decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    /// `ln P(u_i = 0 | y) - ln P(u_i = 1 | y)`.
    pub llrs: Vec<f64>,
    pub bits: Vec<u8>,
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// `sum_n (l_n / 2) (1 - 2 c_n)`: the codeword log-likelihood up to a constant.
fn correlation(llrs: &[f64], c: &[u8]) -> f64 {
    llrs.iter()
        .zip(c)
        .map(|(&l, &b)| if b == 0 { 0.5 * l } else { -0.5 * l })
        .sum()
}

/// Bitwise MAP by summing likelihoods over the whole codebook (log domain,
/// unclipped LLRs). A posterior of exactly one half decides 0.
pub fn map_decode(y: &[f64], book: &Codebook, sigma: f64) -> MapOutput {
    map_decode_llrs(&llr_unclipped(y, sigma), book)
}

pub fn map_decode_llrs(llrs: &[f64], book: &Codebook) -> MapOutput {
    assert_eq!(llrs.len(), book.n);
    let mut num = vec![f64::NEG_INFINITY; book.k];
    let mut den = vec![f64::NEG_INFINITY; book.k];
    for (idx, c) in book.codewords.iter().enumerate() {
        let m = correlation(llrs, c);
        for i in 0..book.k {
            if (idx >> i) & 1 == 0 {
                num[i] = log_sum_exp(num[i], m);
            } else {
                den[i] = log_sum_exp(den[i], m);
            }
        }
    }
    let llrs: Vec<f64> = num.iter().zip(&den).map(|(a, b)| a - b).collect();
    let bits = llrs.iter().map(|&l| decide(l)).collect();
    MapOutput { llrs, bits }
}

/// Picks the best-scoring message among `candidates`, breaking exact ties
/// uniformly at random.
fn best_of<R: Rng + ?Sized>(
    candidates: impl Iterator<Item = usize>,
    score: impl Fn(usize) -> f64,
    rng: &mut R,
) -> usize {
    let mut best = usize::MAX;
    let mut best_score = f64::NEG_INFINITY;
    let mut ties = 0u64;
    for idx in candidates {
        let s = score(idx);
        if best == usize::MAX || s > best_score {
            best = idx;
            best_score = s;
            ties = 1;
        } else if s == best_score {
            ties += 1;
            if rng.gen_range(0..ties) == 0 {
                best = idx;
            }
        }
    }
    best
}

/// Maximum-likelihood message index for the channel output `y`.
pub fn ml_decode<R: Rng + ?Sized>(y: &[f64], book: &Codebook, rng: &mut R) -> usize {
    best_of(0..book.len(), |i| correlation(y, &book.codewords[i]), rng)
}

/// List decoding: hard-decide the systematic part, keep the messages within
/// Hamming distance `r_star` of it, and return the one whose codeword is
/// closest to `y`.
pub fn list_decode<R: Rng + ?Sized>(y: &[f64], book: &Codebook, r_star: usize, rng: &mut R) -> Vec<u8> {
    let hard: Vec<u8> = book.systematic.iter().map(|&p| u8::from(y[p] < 0.0)).collect();
    let center = Codebook::message_index(&hard);
    if r_star == 0 {
        return hard;
    }
    let inside = (0..book.len()).filter(|&i| ((i ^ center).count_ones() as usize) <= r_star);
    let idx = best_of(inside, |i| correlation(y, &book.codewords[i]), rng);
    book.message_bits(idx)
}

/// Interleavers and puncturing patterns that may differ from layer to layer.
#[derive(Debug, Clone)]
pub struct LayeredTables {
    spec: CodeSpec,
    /// Indexed `((t (N-1) + b - 1) (m + 1) + j`.
    interleavers: Vec<Interleaver>,
    puncture: Vec<PuncturePattern>,
}

impl LayeredTables {
    pub fn new(spec: CodeSpec, interleavers: Vec<Interleaver>, puncture: Vec<PuncturePattern>) -> Result<Self> {
        let spec = spec.validate()?;
        let layers = spec.total_layers();
        if interleavers.len() != layers * spec.interleaver_count() || puncture.len() != layers {
            return Err(Error::param("interleavers", "one table per layer, branch and lag"));
        }
        Ok(LayeredTables {
            spec,
            interleavers,
            puncture,
        })
    }

    fn slot(spec: &CodeSpec, t: usize, b: usize, j: usize) -> usize {
        (t * spec.parity_branches() + b - 1) * (spec.m() + 1) + j
    }
}

impl CodeTables for LayeredTables {
    fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn interleaver(&self, layer: usize, branch: usize, lag: usize) -> &Interleaver {
        &self.interleavers[Self::slot(&self.spec, layer, branch, lag)]
    }

    fn puncture(&self, layer: usize) -> &PuncturePattern {
        &self.puncture[layer]
    }
}

/// `A_{i,j}` of a specific code, by encoding every message.
pub fn irwef_exhaustive<T: CodeTables + ?Sized>(tables: &T) -> Result<IrwefTable> {
    let book = enumerate_codebook(tables)?;
    Ok(irwef_of_codebook(&book))
}

fn irwef_of_codebook(book: &Codebook) -> IrwefTable {
    let mut rows = vec![vec![0.0; book.n - book.k + 1]; book.k + 1];
    accumulate_irwef(book, 1.0, &mut rows);
    IrwefTable::from_rows(rows, book.k, None)
}

fn accumulate_irwef(book: &Codebook, scale: f64, rows: &mut [Vec<f64>]) {
    for (idx, c) in book.codewords.iter().enumerate() {
        let i = idx.count_ones() as usize;
        let j = weight(c) - i;
        rows[i][j] += scale;
    }
}

/// All permutations of `0..k` in lexicographic order.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..k).rev().find(|&i| p[i - 1] < p[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// All `c`-subsets of `0..k` in lexicographic order.
fn subsets(k: usize, c: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, c: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == c {
            out.push(cur.clone());
            return;
        }
        for x in start..k {
            cur.push(x);
            rec(x + 1, k, c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, c, &mut Vec::new(), &mut out);
    out
}

/// Largest number of (interleaver, puncturing) combinations averaged.
pub const MAX_ENSEMBLE_MEMBERS: u64 = 1 << 20;

/// The ensemble enumerator by brute force: the exact IRWEF of every code
/// obtained by choosing each layer's interleavers and puncturing pattern
/// independently, averaged with equal weights.
///
/// Only interleavers that touch a data block (`0 <= t - j < L`) are
/// enumerated; the others multiply zero blocks and do not change the code.
pub fn ensemble_irwef_exhaustive(spec: &CodeSpec) -> Result<IrwefTable> {
    let spec = spec.validate()?;
    let (k, l, m) = (spec.k(), spec.l(), spec.m());
    let nb = spec.parity_branches();
    let layers = spec.total_layers();
    if spec.info_bits() > 12 {
        return Err(Error::ResourceLimit("ensemble oracle needs K L <= 12".into()));
    }
    let perms = permutations(k);
    let patterns = subsets(k, spec.k_p());
    let live: Vec<usize> = (0..layers)
        .flat_map(|t| (1..=nb).flat_map(move |b| (0..=m).map(move |j| (t, b, j))))
        .filter(|&(t, _, j)| t >= j && t - j < l)
        .map(|(t, b, j)| LayeredTables::slot(&spec, t, b, j))
        .collect();
    let punct_slots = if spec.k_p() > 0 { layers } else { 0 };
    let members = (perms.len() as f64).powi(live.len() as i32) * (patterns.len() as f64).powi(punct_slots as i32);
    if members > MAX_ENSEMBLE_MEMBERS as f64 {
        return Err(Error::ResourceLimit(format!("{members} ensemble members to enumerate")));
    }
    let members = members as u64;

    let identity = Interleaver::identity(k);
    let mut inter = vec![identity; layers * spec.interleaver_count()];
    let mut punct = vec![PuncturePattern::from_positions(k, &patterns[0])?; layers];
    let mut rows = vec![vec![0.0; spec.layout().total_bits - spec.info_bits() + 1]; spec.info_bits() + 1];
    let scale = 1.0 / members as f64;
    // mixed-radix counter over interleaver slots then puncturing slots
    let radix: Vec<usize> = live
        .iter()
        .map(|_| perms.len())
        .chain((0..punct_slots).map(|_| patterns.len()))
        .collect();
    let mut digits = vec![0usize; radix.len()];
    for _ in 0..members {
        for (d, &slot) in live.iter().enumerate() {
            inter[slot] = Interleaver::from_perm(&perms[digits[d]])?;
        }
        for t in 0..punct_slots {
            punct[t] = PuncturePattern::from_positions(k, &patterns[digits[live.len() + t]])?;
        }
        let tables = LayeredTables::new(spec, inter.clone(), punct.clone())?;
        accumulate_irwef(&enumerate_codebook(&tables)?, scale, &mut rows);
        for (d, r) in digits.iter_mut().zip(&radix) {
            *d += 1;
            if *d < *r {
                break;
            }
            *d = 0;
        }
    }
    Ok(IrwefTable::from_rows(rows, spec.info_bits(), None))
}

/// Largest number of trellis branches per layer accepted by [`BlockTrellis`].
pub const MAX_TRELLIS_BRANCHES: usize = 1 << 24;

/// The code as a trellis whose state is the last `m` information blocks.
///
/// Exact bitwise MAP (forward-backward), per-bit minimum distances and the
/// exact IRWEF of a specific code, for `K <= 16` and `2^(K(m+1)) <= 2^24`.
#[derive(Debug, Clone)]
pub struct BlockTrellis {
    spec: CodeSpec,
    layout: FrameLayout,
    /// Image of every `K`-bit block under each interleaver,
    /// indexed `[((t nb + b - 1)(m + 1) + j) 2^K + x]`.
    images: Vec<u32>,
    /// Per layer and branch: frame position of each of the `K` parity bits,
    /// or `None` if punctured.
    parity_pos: Vec<Vec<Option<usize>>>,
}

impl BlockTrellis {
    pub fn new<T: CodeTables + ?Sized>(tables: &T) -> Result<Self> {
        let spec = *tables.spec();
        let (k, m) = (spec.k(), spec.m());
        let nb = spec.parity_branches();
        let layers = spec.total_layers();
        if k > 16 || k * (m + 1) > 24 {
            return Err(Error::ResourceLimit(format!(
                "trellis with K = {k}, m = {m} exceeds {MAX_TRELLIS_BRANCHES} branches"
            )));
        }
        let size = 1usize << k;
        let mut images = vec![0u32; layers * nb * (m + 1) * size];
        for t in 0..layers {
            for b in 1..=nb {
                for j in 0..=m {
                    let pi = tables.interleaver(t, b, j);
                    let base = ((t * nb + b - 1) * (m + 1) + j) * size;
                    // linear: build from unit vectors
                    let unit: Vec<u32> = (0..k)
                        .map(|src| {
                            (0..k)
                                .filter(|&out| pi.source(out) == src)
                                .fold(0u32, |acc, out| acc | (1 << out))
                        })
                        .collect();
                    for x in 1..size {
                        let low = x.trailing_zeros() as usize;
                        images[base + x] = images[base + (x & (x - 1))] ^ unit[low];
                    }
                }
            }
        }
        let layout = spec.layout();
        let mut parity_pos = Vec::with_capacity(layers * nb);
        for t in 0..layers {
            let pattern = tables.puncture(t);
            let base = layout.parity_offset(t);
            for b in 1..=nb {
                let mut kept = 0;
                let pos = (0..k)
                    .map(|kk| {
                        if b < nb {
                            Some(base + (b - 1) * k + kk)
                        } else if pattern.is_punctured(kk) {
                            None
                        } else {
                            kept += 1;
                            Some(base + (nb - 1) * k + kept - 1)
                        }
                    })
                    .collect();
                parity_pos.push(pos);
            }
        }
        Ok(BlockTrellis {
            spec,
            layout,
            images,
            parity_pos,
        })
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn states(&self) -> usize {
        1 << (self.spec.k() * self.spec.m())
    }

    fn inputs(&self, t: usize) -> usize {
        if t < self.spec.l() {
            1 << self.spec.k()
        } else {
            1
        }
    }

    fn next_state(&self, s: usize, x: usize) -> usize {
        let km = self.spec.k() * self.spec.m();
        if km == 0 {
            0
        } else {
            ((s << self.spec.k()) | x) & ((1 << km) - 1)
        }
    }

    /// Parity word of branch `b` at layer `t` from state `s` with input `x`.
    #[inline]
    fn parity(&self, t: usize, b: usize, s: usize, x: usize) -> u32 {
        let (k, m) = (self.spec.k(), self.spec.m());
        let nb = self.spec.parity_branches();
        let size = 1usize << k;
        let kmask = size - 1;
        let base = (t * nb + b - 1) * (m + 1) * size;
        let mut w = self.images[base + x];
        for j in 1..=m {
            let blk = (s >> (k * (j - 1))) & kmask;
            w ^= self.images[base + j * size + blk];
        }
        w
    }

    fn kept_mask(&self, t: usize, b: usize) -> u32 {
        let nb = self.spec.parity_branches();
        self.parity_pos[t * nb + b - 1]
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_some())
            .fold(0, |acc, (kk, _)| acc | (1 << kk))
    }

    /// `g[w] = exp(sum_{k in w} c_k - sum_k max(c_k, 0))` with `c_k = -llr_k`:
    /// the likelihood of block pattern `w` relative to the best pattern.
    fn block_table(&self, llr: &[f64]) -> Vec<f64> {
        let k = self.spec.k();
        let top: f64 = llr.iter().map(|&l| (-l).max(0.0)).sum();
        let mut lv = vec![0.0f64; 1 << k];
        for w in 1usize..1 << k {
            let low = w.trailing_zeros() as usize;
            lv[w] = lv[w & (w - 1)] - llr[low];
        }
        lv.into_iter().map(|v| (v - top).exp()).collect()
    }

    /// Exact bitwise MAP from unclipped channel LLRs in frame order.
    pub fn map_decode(&self, llrs: &[f64]) -> Result<MapOutput> {
        if llrs.len() != self.layout.total_bits {
            return Err(Error::FrameLength {
                expected: self.layout.total_bits,
                actual: llrs.len(),
            });
        }
        let (k, l) = (self.spec.k(), self.spec.l());
        let nb = self.spec.parity_branches();
        let layers = self.spec.total_layers();
        let ns = self.states();

        let sys: Vec<Vec<f64>> = (0..l)
            .map(|t| {
                let o = self.layout.systematic_offset(t);
                self.block_table(&llrs[o..o + k])
            })
            .collect();
        let par: Vec<Vec<f64>> = self
            .parity_pos
            .iter()
            .map(|pos| {
                let v: Vec<f64> = pos.iter().map(|p| p.map_or(0.0, |p| llrs[p])).collect();
                self.block_table(&v)
            })
            .collect();
        // branch metrics, computed once: gamma[t][s * inputs(t) + x]
        let gamma: Vec<Vec<f64>> = (0..layers)
            .map(|t| {
                let nin = self.inputs(t);
                let mut g = vec![0.0; ns * nin];
                for s in 0..ns {
                    for x in 0..nin {
                        let mut v = if t < l { sys[t][x] } else { 1.0 };
                        for b in 1..=nb {
                            v *= par[t * nb + b - 1][self.parity(t, b, s, x) as usize];
                        }
                        g[s * nin + x] = v;
                    }
                }
                g
            })
            .collect();

        let mut alpha = vec![vec![0.0; ns]; layers + 1];
        alpha[0][0] = 1.0;
        for t in 0..layers {
            let nin = self.inputs(t);
            let (cur, next) = alpha.split_at_mut(t + 1);
            let (cur, next) = (&cur[t], &mut next[0]);
            for s in 0..ns {
                if cur[s] == 0.0 {
                    continue;
                }
                let g = &gamma[t][s * nin..(s + 1) * nin];
                for (x, &gx) in g.iter().enumerate() {
                    next[self.next_state(s, x)] += cur[s] * gx;
                }
            }
            normalize(next);
        }
        let mut beta = vec![vec![0.0; ns]; layers + 1];
        beta[layers][0] = 1.0;
        for t in (0..layers).rev() {
            let nin = self.inputs(t);
            let (cur, next) = beta.split_at_mut(t + 1);
            let (cur, next) = (&mut cur[t], &next[0]);
            for s in 0..ns {
                if alpha[t][s] == 0.0 {
                    continue;
                }
                let g = &gamma[t][s * nin..(s + 1) * nin];
                cur[s] = g
                    .iter()
                    .enumerate()
                    .map(|(x, &gx)| gx * next[self.next_state(s, x)])
                    .sum();
            }
            normalize(cur);
        }
        let mut out = Vec::with_capacity(l * k);
        let mut px = vec![0.0; 1 << k];
        for t in 0..l {
            let nin = self.inputs(t);
            px.iter_mut().for_each(|v| *v = 0.0);
            for s in 0..ns {
                if alpha[t][s] == 0.0 {
                    continue;
                }
                let g = &gamma[t][s * nin..(s + 1) * nin];
                for (x, p) in px.iter_mut().enumerate() {
                    *p += alpha[t][s] * g[x] * beta[t + 1][self.next_state(s, x)];
                }
            }
            for bit in 0..k {
                let (mut p0, mut p1) = (0.0, 0.0);
                for (x, &p) in px.iter().enumerate() {
                    if (x >> bit) & 1 == 0 {
                        p0 += p;
                    } else {
                        p1 += p;
                    }
                }
                out.push(p0.ln() - p1.ln());
            }
        }
        let bits = out.iter().map(|&v| decide(v)).collect();
        Ok(MapOutput { llrs: out, bits })
    }

    /// Weight of the transmitted part of a branch.
    fn branch_weight(&self, t: usize, s: usize, x: usize, masks: &[u32]) -> usize {
        let nb = self.spec.parity_branches();
        let mut w = if t < self.spec.l() { x.count_ones() as usize } else { 0 };
        for b in 1..=nb {
            w += (self.parity(t, b, s, x) & masks[t * nb + b - 1]).count_ones() as usize;
        }
        w
    }

    fn masks(&self) -> Vec<u32> {
        let nb = self.spec.parity_branches();
        (0..self.spec.total_layers())
            .flat_map(|t| (1..=nb).map(move |b| (t, b)))
            .map(|(t, b)| self.kept_mask(t, b))
            .collect()
    }

    /// `d_min,i` for every message bit, by a constrained shortest path.
    pub fn dmin_per_bit(&self) -> Vec<usize> {
        let (k, l) = (self.spec.k(), self.spec.l());
        let layers = self.spec.total_layers();
        let ns = self.states();
        let masks = self.masks();
        let mut out = Vec::with_capacity(k * l);
        for ti in 0..l {
            for bit in 0..k {
                let mut dist = vec![usize::MAX; ns];
                dist[0] = 0;
                for t in 0..layers {
                    let mut next = vec![usize::MAX; ns];
                    for (s, &ds) in dist.iter().enumerate() {
                        if ds == usize::MAX {
                            continue;
                        }
                        for x in 0..self.inputs(t) {
                            if t == ti && (x >> bit) & 1 == 0 {
                                continue;
                            }
                            let d = ds + self.branch_weight(t, s, x, &masks);
                            let ns_ = self.next_state(s, x);
                            next[ns_] = next[ns_].min(d);
                        }
                    }
                    dist = next;
                }
                out.push(dist[0]);
            }
        }
        out
    }

    /// Weights of the generator rows (unit messages).
    pub fn row_weights(&self) -> Vec<usize> {
        let (k, l, m) = (self.spec.k(), self.spec.l(), self.spec.m());
        let masks = self.masks();
        let mut out = Vec::with_capacity(k * l);
        for ti in 0..l {
            for bit in 0..k {
                let mut s = 0;
                let mut w = 0;
                for t in 0..l + m {
                    let x = if t == ti { 1 << bit } else { 0 };
                    w += self.branch_weight(t, s, x, &masks);
                    s = self.next_state(s, x);
                }
                out.push(w);
            }
        }
        out
    }

    /// Exact IRWEF of the specific code, rows `i <= t_max`.
    pub fn irwef(&self, t_max: usize) -> Result<IrwefTable> {
        let l = self.spec.l();
        let layers = self.spec.total_layers();
        let ns = self.states();
        let masks = self.masks();
        let t_max = t_max.min(self.spec.info_bits());
        let jw = self.layout.total_bits - self.layout.info_bits + 1;
        let size = (t_max + 1) * jw;
        if ns.saturating_mul(size) > 1 << 27 {
            return Err(Error::ResourceLimit("trellis enumerator too large".into()));
        }
        let mut cur = vec![vec![0.0; 0]; ns];
        cur[0] = vec![0.0; size];
        cur[0][0] = 1.0;
        for t in 0..layers {
            let mut next: Vec<Vec<f64>> = vec![Vec::new(); ns];
            for s in 0..ns {
                if cur[s].is_empty() {
                    continue;
                }
                for x in 0..self.inputs(t) {
                    let di = if t < l { x.count_ones() as usize } else { 0 };
                    let dj = self.branch_weight(t, s, x, &masks) - di;
                    let dst = &mut next[self.next_state(s, x)];
                    if dst.is_empty() {
                        *dst = vec![0.0; size];
                    }
                    for i in 0..=t_max.saturating_sub(di) {
                        if i + di > t_max {
                            break;
                        }
                        for j in 0..jw - dj {
                            let v = cur[s][i * jw + j];
                            if v != 0.0 {
                                dst[(i + di) * jw + j + dj] += v;
                            }
                        }
                    }
                }
            }
            cur = next;
        }
        let data = std::mem::take(&mut cur[0]);
        let rows = (0..=t_max)
            .map(|i| {
                if data.is_empty() {
                    vec![0.0]
                } else {
                    data[i * jw..(i + 1) * jw].to_vec()
                }
            })
            .collect();
        Ok(IrwefTable::from_rows(rows, self.spec.info_bits(), None))
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// Bit and frame error counts of a Monte Carlo run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCount {
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
}

impl ErrorCount {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.frames as f64
    }

    fn add(mut self, o: ErrorCount) -> Self {
        self.frames += o.frames;
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.frame_errors += o.frame_errors;
        self
    }

    fn record(msg: &[u8], est: &[u8]) -> Self {
        let e = msg.iter().zip(est).filter(|(a, b)| a != b).count() as u64;
        ErrorCount {
            frames: 1,
            bits: msg.len() as u64,
            bit_errors: e,
            frame_errors: u64::from(e > 0),
        }
    }
}

/// Exact-MAP bit error rate of a specific code by simulation over random
/// messages, with frame `f` drawn from streams `f` of `seed`.
pub fn map_ber_monte_carlo<T: CodeTables + Sync + ?Sized>(
    tables: &T,
    trellis: &BlockTrellis,
    sigma: f64,
    frames: u64,
    seed: u64,
) -> Result<ErrorCount> {
    let spec = *tables.spec();
    let params = ChannelParams::awgn(sigma).with_seeds(rng::derive_seed(seed, 1), 0);
    let one = |f: u64| -> Result<ErrorCount> {
        let mut r = rng::stream(seed, f);
        let msg: Vec<u8> = (0..spec.info_bits()).map(|_| r.gen_range(0..=1u8)).collect();
        let cw = encode_message(tables, &msg)?;
        let rx = transmit(&bpsk_modulate(&cw), &params, f);
        let out = trellis.map_decode(&llr_unclipped(&rx.y, sigma))?;
        Ok(ErrorCount::record(&msg, &out.bits))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..frames)
            .into_par_iter()
            .map(one)
            .try_reduce(ErrorCount::default, |a, b| Ok(a.add(b)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..frames).map(one).try_fold(ErrorCount::default(), |a, b| Ok(a.add(b?)))
    }
}

/// `A x B^J` with `A = {00, 10}` and `B = {00, 11}`: one bit protected by a
/// weight-1 codeword, `J` bits by repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductCode {
    pub j: usize,
}

impl ProductCode {
    pub fn k(&self) -> usize {
        self.j + 1
    }

    pub fn n(&self) -> usize {
        2 * (self.j + 1)
    }

    pub fn encode(&self, u: &[u8]) -> Vec<u8> {
        assert_eq!(u.len(), self.k());
        let mut c = vec![u[0], 0];
        for &b in &u[1..] {
            c.extend([b, b]);
        }
        c
    }

    /// Exact bitwise MAP. The code is a Cartesian product, so the posterior
    /// of each bit depends on its own component only.
    pub fn map_decode_llrs(&self, llrs: &[f64]) -> MapOutput {
        assert_eq!(llrs.len(), self.n());
        let mut out = vec![llrs[0]];
        out.extend((1..self.k()).map(|i| llrs[2 * i] + llrs[2 * i + 1]));
        let bits = out.iter().map(|&v| decide(v)).collect();
        MapOutput { llrs: out, bits }
    }

    pub fn codebook(&self) -> Result<Codebook> {
        let k = self.k();
        if k > MAX_CODEBOOK_BITS {
            return Err(Error::ResourceLimit("product codebook too large".into()));
        }
        let codewords = (0..1usize << k)
            .map(|idx| self.encode(&(0..k).map(|i| ((idx >> i) & 1) as u8).collect::<Vec<_>>()))
            .collect();
        let systematic = std::iter::once(0).chain((1..k).map(|i| 2 * i)).collect();
        Codebook::from_codewords(k, codewords, systematic)
    }

    /// `(1/k) Q(1/sigma) + (J/k) Q(sqrt(2)/sigma)`.
    pub fn map_ber(&self, sigma: f64) -> f64 {
        let k = self.k() as f64;
        (q_function(1.0 / sigma) + self.j as f64 * q_function(2f64.sqrt() / sigma)) / k
    }

    /// The minimum-distance bound `(1/k) Q(sqrt(d_min)/sigma)` with `d_min = 1`.
    pub fn dmin_bound(&self, sigma: f64) -> f64 {
        q_function(1.0 / sigma) / self.k() as f64
    }

    /// Monte Carlo exact-MAP bit error rate.
    pub fn simulate_map(&self, sigma: f64, frames: u64, seed: u64) -> ErrorCount {
        let params = ChannelParams::awgn(sigma).with_seeds(rng::derive_seed(seed, 1), 0);
        let one = |f: u64| {
            let mut r = rng::stream(seed, f);
            let msg: Vec<u8> = (0..self.k()).map(|_| r.gen_range(0..=1u8)).collect();
            let rx = transmit(&bpsk_modulate(&self.encode(&msg)), &params, f);
            let out = self.map_decode_llrs(&llr_unclipped(&rx.y, sigma));
            ErrorCount::record(&msg, &out.bits)
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..frames).into_par_iter().map(one).reduce(ErrorCount::default, ErrorCount::add)
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..frames).map(one).fold(ErrorCount::default(), ErrorCount::add)
        }
    }
}

/// Number of weight-`i` messages, for count checks against enumerators.
pub fn messages_of_weight(k: usize, i: usize) -> f64 {
    binom(k as i64, i as i64)
}
