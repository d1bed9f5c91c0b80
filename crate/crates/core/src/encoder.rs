//! Block Markov superposition encoder.
//!
//! At layer `t` the information block `u(t)` is sent as is and, for each
//! parity branch `i`, the replicas `u(t), u(t-1), ..., u(t-m)` are passed
//! through the interleavers `P(i,0), ..., P(i,m)` and added mod 2. Blocks
//! before the start of the frame are zero. The last branch drops the `K_p`
//! positions of the puncturing pattern. After `L` data layers the encoder is
//! driven back to the zero state by `m` zero blocks, for which only the
//! parity branches are sent.

use std::collections::VecDeque;

use rand::Rng;

use crate::code_model::{CodeSpec, FrameLayout};
use crate::rng::{self, below_inclusive};
use crate::{Error, Result};

/// A permutation of `0..K`. Output position `k` takes input position `perm[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<u32>,
}

impl Interleaver {
    pub fn identity(k: usize) -> Self {
        Interleaver {
            perm: (0..k as u32).collect(),
        }
    }

    /// Builds an interleaver from an explicit permutation, checking bijectivity.
    pub fn from_perm(perm: &[usize]) -> Result<Self> {
        let k = perm.len();
        let mut seen = vec![false; k];
        for &p in perm {
            if p >= k || std::mem::replace(&mut seen[p], true) {
                return Err(Error::param("perm", "not a permutation"));
            }
        }
        Ok(Interleaver {
            perm: perm.iter().map(|&p| p as u32).collect(),
        })
    }

    /// Uniform random permutation by Fisher-Yates.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut perm: Vec<u32> = (0..k as u32).collect();
        for i in (1..k).rev() {
            let j = below_inclusive(rng, i);
            perm.swap(i, j);
        }
        Interleaver { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Input position read by output position `k`.
    #[inline]
    pub fn source(&self, k: usize) -> usize {
        self.perm[k] as usize
    }

    pub fn perm(&self) -> impl Iterator<Item = usize> + '_ {
        self.perm.iter().map(|&p| p as usize)
    }

    pub fn inverse(&self) -> Interleaver {
        let mut inv = vec![0u32; self.perm.len()];
        for (k, &p) in self.perm.iter().enumerate() {
            inv[p as usize] = k as u32;
        }
        Interleaver { perm: inv }
    }

    pub fn apply(&self, input: &[u8]) -> Vec<u8> {
        self.perm.iter().map(|&p| input[p as usize]).collect()
    }

    /// `acc ^= self(input)`.
    pub fn xor_into(&self, input: &[u8], acc: &mut [u8]) {
        for (a, &p) in acc.iter_mut().zip(&self.perm) {
            *a ^= input[p as usize];
        }
    }
}

/// Positions of the last parity branch that are not transmitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePattern {
    positions: Vec<usize>,
    mask: Vec<bool>,
}

impl PuncturePattern {
    pub fn none(k: usize) -> Self {
        PuncturePattern {
            positions: Vec::new(),
            mask: vec![false; k],
        }
    }

    pub fn from_positions(k: usize, positions: &[usize]) -> Result<Self> {
        let mut mask = vec![false; k];
        for &p in positions {
            if p >= k || std::mem::replace(&mut mask[p], true) {
                return Err(Error::param("positions", "out of range or repeated"));
            }
        }
        let mut positions = positions.to_vec();
        positions.sort_unstable();
        Ok(PuncturePattern { positions, mask })
    }

    /// `count` distinct positions of `0..k`, uniformly at random.
    pub fn random<R: Rng + ?Sized>(k: usize, count: usize, rng: &mut R) -> Self {
        assert!(count <= k);
        let mut idx: Vec<usize> = (0..k).collect();
        for i in 0..count {
            let j = i + below_inclusive(rng, k - 1 - i);
            idx.swap(i, j);
        }
        let mut positions = idx[..count].to_vec();
        positions.sort_unstable();
        let mut mask = vec![false; k];
        for &p in &positions {
            mask[p] = true;
        }
        PuncturePattern { positions, mask }
    }

    /// Sorted punctured positions.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn is_punctured(&self, k: usize) -> bool {
        self.mask[k]
    }

    /// The transmitted bits of a full-length branch, in position order.
    pub fn keep(&self, bits: &[u8]) -> Vec<u8> {
        bits.iter()
            .zip(&self.mask)
            .filter(|(_, &p)| !p)
            .map(|(&b, _)| b)
            .collect()
    }
}

/// Source of the interleavers and puncturing patterns used at each layer.
///
/// A deployable code uses the same tables at every layer ([`CodeInstance`]);
/// ensemble oracles plug in layer-dependent tables.
pub trait CodeTables {
    fn spec(&self) -> &CodeSpec;

    /// Interleaver applied at `layer` to the replica of block `layer - lag`
    /// feeding parity `branch` (`1..=N-1`).
    fn interleaver(&self, layer: usize, branch: usize, lag: usize) -> &Interleaver;

    /// Puncturing pattern of the last parity branch at `layer`.
    fn puncture(&self, layer: usize) -> &PuncturePattern;
}

/// A concrete code: spec plus its fixed interleavers and puncturing pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeInstance {
    spec: CodeSpec,
    interleavers: Vec<Interleaver>,
    puncture: PuncturePattern,
}

impl CodeInstance {
    /// Draws the interleavers and the puncturing pattern from the spec seeds.
    pub fn new(spec: CodeSpec) -> Result<Self> {
        let spec = spec.validate()?;
        Ok(CodeInstance {
            interleavers: build_interleavers(&spec),
            puncture: build_puncture_pattern(&spec),
            spec,
        })
    }

    /// Uses explicit tables; `interleavers` is indexed `(i - 1)(m + 1) + j`.
    pub fn with_tables(
        spec: CodeSpec,
        interleavers: Vec<Interleaver>,
        puncture: PuncturePattern,
    ) -> Result<Self> {
        let spec = spec.validate()?;
        if interleavers.len() != spec.interleaver_count() {
            return Err(Error::param(
                "interleavers",
                format!("need {}, got {}", spec.interleaver_count(), interleavers.len()),
            ));
        }
        if interleavers.iter().any(|p| p.len() != spec.k()) || puncture.mask.len() != spec.k() {
            return Err(Error::param("interleavers", "size differs from K"));
        }
        if puncture.len() != spec.k_p() {
            return Err(Error::param("puncture", "pattern size differs from K_p"));
        }
        Ok(CodeInstance {
            spec,
            interleavers,
            puncture,
        })
    }

    /// All interleavers set to the identity, puncturing drawn from the seed.
    pub fn with_identity_interleavers(spec: CodeSpec) -> Result<Self> {
        let spec = spec.validate()?;
        let interleavers = vec![Interleaver::identity(spec.k()); spec.interleaver_count()];
        let puncture = build_puncture_pattern(&spec);
        Self::with_tables(spec, interleavers, puncture)
    }

    pub fn interleavers(&self) -> &[Interleaver] {
        &self.interleavers
    }

    pub fn puncture_pattern(&self) -> &PuncturePattern {
        &self.puncture
    }
}

impl CodeTables for CodeInstance {
    fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn interleaver(&self, _layer: usize, branch: usize, lag: usize) -> &Interleaver {
        &self.interleavers[(branch - 1) * (self.spec.memory + 1) + lag]
    }

    fn puncture(&self, _layer: usize) -> &PuncturePattern {
        &self.puncture
    }
}

/// The `(m + 1)(N - 1)` interleavers of a spec, drawn in `(i, j)` order from
/// stream 0 of `interleaver_seed`.
pub fn build_interleavers(spec: &CodeSpec) -> Vec<Interleaver> {
    let mut rng = rng::stream(spec.interleaver_seed, 0);
    (0..spec.interleaver_count())
        .map(|_| Interleaver::random(spec.info_block_len, &mut rng))
        .collect()
}

/// The `K_p` punctured positions, drawn from stream 0 of `puncture_seed`.
/// The same pattern is used at every layer.
pub fn build_puncture_pattern(spec: &CodeSpec) -> PuncturePattern {
    let mut rng = rng::stream(spec.puncture_seed, 0);
    PuncturePattern::random(spec.info_block_len, spec.puncture_len, &mut rng)
}

/// Output of one encoder step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodewordBlock {
    pub layer: usize,
    /// `c_0 = u(t)`; absent for tail layers.
    pub systematic: Option<Vec<u8>>,
    /// Full parity branches `c_1 .. c_{N-2}`.
    pub parity: Vec<Vec<u8>>,
    /// Transmitted part of `c_{N-1}`.
    pub last: Vec<u8>,
    /// Punctured positions of `c_{N-1}`.
    pub punctured: Vec<usize>,
}

impl CodewordBlock {
    /// Emitted bits in transmission order.
    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        self.systematic
            .iter()
            .flatten()
            .chain(self.parity.iter().flatten())
            .chain(self.last.iter())
            .copied()
    }

    pub fn emitted_len(&self) -> usize {
        self.systematic.as_ref().map_or(0, Vec::len)
            + self.parity.iter().map(Vec::len).sum::<usize>()
            + self.last.len()
    }

    pub fn weight(&self) -> usize {
        self.bits().filter(|&b| b == 1).count()
    }
}

/// Sequential encoder. Holds the `m` most recent information blocks.
#[derive(Debug, Clone)]
pub struct Encoder<'a, T: CodeTables + ?Sized> {
    tables: &'a T,
    history: VecDeque<Vec<u8>>,
    layer: usize,
}

impl<'a, T: CodeTables + ?Sized> Encoder<'a, T> {
    pub fn new(tables: &'a T) -> Self {
        let spec = tables.spec();
        Encoder {
            tables,
            history: (0..spec.memory)
                .map(|_| vec![0u8; spec.info_block_len])
                .collect(),
            layer: 0,
        }
    }

    /// Index of the next layer to be produced.
    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn is_zero_state(&self) -> bool {
        self.history.iter().all(|b| b.iter().all(|&x| x == 0))
    }

    /// Encodes one information block.
    pub fn encode_block(&mut self, u: &[u8]) -> Result<CodewordBlock> {
        let k = self.tables.spec().info_block_len;
        if u.len() != k {
            return Err(Error::BlockLength {
                expected: k,
                actual: u.len(),
            });
        }
        if u.iter().any(|&b| b > 1) {
            return Err(Error::param("u", "bits must be 0 or 1"));
        }
        let mut block = self.step(u);
        block.systematic = Some(u.to_vec());
        Ok(block)
    }

    /// Drives the encoder back to the zero state; returns the `m` tail blocks,
    /// each carrying parity only.
    pub fn terminate(&mut self) -> Vec<CodewordBlock> {
        let spec = self.tables.spec();
        let zero = vec![0u8; spec.info_block_len];
        (0..spec.memory).map(|_| self.step(&zero)).collect()
    }

    fn step(&mut self, u: &[u8]) -> CodewordBlock {
        let spec = *self.tables.spec();
        let (k, m, branches) = (spec.info_block_len, spec.memory, spec.parity_branches());
        let t = self.layer;
        let mut outputs = Vec::with_capacity(branches);
        for i in 1..=branches {
            let mut acc = vec![0u8; k];
            self.tables.interleaver(t, i, 0).xor_into(u, &mut acc);
            for (j, past) in self.history.iter().enumerate() {
                self.tables.interleaver(t, i, j + 1).xor_into(past, &mut acc);
            }
            outputs.push(acc);
        }
        let full_last = outputs.pop().expect("at least one parity branch");
        let pattern = self.tables.puncture(t);
        if m > 0 {
            self.history.pop_back();
            self.history.push_front(u.to_vec());
        }
        self.layer += 1;
        CodewordBlock {
            layer: t,
            systematic: None,
            parity: outputs,
            last: pattern.keep(&full_last),
            punctured: pattern.positions().to_vec(),
        }
    }
}

/// An encoded frame and its bit layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedFrame {
    pub bits: Vec<u8>,
    pub layout: FrameLayout,
}

/// Encodes exactly `L` blocks plus the zero tail.
pub fn encode_frame<T, B>(tables: &T, blocks: &[B]) -> Result<EncodedFrame>
where
    T: CodeTables + ?Sized,
    B: AsRef<[u8]>,
{
    let spec = tables.spec();
    if blocks.len() != spec.data_blocks {
        return Err(Error::BlockCount {
            expected: spec.data_blocks,
            actual: blocks.len(),
        });
    }
    let layout = spec.layout();
    let mut bits = Vec::with_capacity(layout.total_bits);
    let mut enc = Encoder::new(tables);
    for u in blocks {
        bits.extend(enc.encode_block(u.as_ref())?.bits());
    }
    for tail in enc.terminate() {
        bits.extend(tail.bits());
    }
    debug_assert_eq!(bits.len(), layout.total_bits);
    Ok(EncodedFrame { bits, layout })
}

/// Encodes a flat message of `K L` bits.
pub fn encode_message<T: CodeTables + ?Sized>(tables: &T, message: &[u8]) -> Result<Vec<u8>> {
    let spec = tables.spec();
    if message.len() != spec.info_bits() {
        return Err(Error::FrameLength {
            expected: spec.info_bits(),
            actual: message.len(),
        });
    }
    let blocks: Vec<&[u8]> = message.chunks(spec.info_block_len).collect();
    Ok(encode_frame(tables, &blocks)?.bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_code(n: usize, k: usize, l: usize, m: usize) -> CodeInstance {
        CodeInstance::with_identity_interleavers(CodeSpec::new(n, k, 0, l, m)).unwrap()
    }

    #[test]
    fn hand_computed_k2_frame() {
        let code = identity_code(2, 2, 2, 1);
        let mut enc = Encoder::new(&code);
        let b0 = enc.encode_block(&[1, 1]).unwrap();
        assert_eq!(b0.bits().collect::<Vec<_>>(), vec![1, 1, 1, 1]);
        let b1 = enc.encode_block(&[0, 1]).unwrap();
        assert_eq!(b1.bits().collect::<Vec<_>>(), vec![0, 1, 1, 0]);
        let tail = enc.terminate();
        assert_eq!(tail.len(), 1);
        assert_eq!(tail[0].systematic, None);
        assert_eq!(tail[0].bits().collect::<Vec<_>>(), vec![0, 1]);
        assert!(enc.is_zero_state());

        let frame = encode_frame(&code, &[[1u8, 1], [0, 1]]).unwrap();
        assert_eq!(frame.bits.len(), 10);
        assert_eq!(code.spec().terminated_rate().as_f64(), 0.4);
    }

    #[test]
    fn memoryless_is_interleaved_repetition() {
        let code = CodeInstance::new(CodeSpec::new(2, 16, 0, 1, 0).with_seeds(9, 0)).unwrap();
        let u: Vec<u8> = (0..16).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let mut enc = Encoder::new(&code);
        let block = enc.encode_block(&u).unwrap();
        assert_eq!(block.systematic.as_deref(), Some(&u[..]));
        assert_eq!(block.last, code.interleavers()[0].apply(&u));
        assert!(enc.terminate().is_empty());
    }

    #[test]
    fn zero_in_zero_out() {
        let code = CodeInstance::new(CodeSpec::new(3, 10, 4, 5, 3).with_seeds(1, 2)).unwrap();
        let blocks = vec![vec![0u8; 10]; 5];
        let frame = encode_frame(&code, &blocks).unwrap();
        assert!(frame.bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn frame_bit_count() {
        let code = CodeInstance::new(CodeSpec::new(2, 30, 0, 20, 2)).unwrap();
        let frame = encode_frame(&code, &vec![vec![1u8; 30]; 20]).unwrap();
        assert_eq!(frame.bits.len(), 1260);
        assert!((600.0f64 / 1260.0 - 0.4762).abs() < 5e-5);
    }

    #[test]
    fn wrong_sizes_rejected() {
        let code = identity_code(2, 4, 3, 1);
        let mut enc = Encoder::new(&code);
        assert_eq!(
            enc.encode_block(&[1, 0, 1]),
            Err(Error::BlockLength { expected: 4, actual: 3 })
        );
        assert_eq!(
            encode_frame(&code, &[[0u8; 4]; 2]),
            Err(Error::BlockCount { expected: 3, actual: 2 })
        );
    }

    #[test]
    fn weight_one_rows() {
        for (n, k, l, m) in [(2, 5, 4, 2), (3, 4, 3, 1), (4, 3, 5, 3), (2, 6, 2, 0)] {
            let code = CodeInstance::new(CodeSpec::new(n, k, 0, l, m).with_seeds(77, 0)).unwrap();
            for pos in 0..k * l {
                let mut msg = vec![0u8; k * l];
                msg[pos] = 1;
                let cw = encode_message(&code, &msg).unwrap();
                let w = cw.iter().filter(|&&b| b == 1).count();
                assert_eq!(w, n + m * (n - 1));
            }
        }
    }

    #[test]
    fn after_termination_state_is_zero() {
        let code = CodeInstance::new(CodeSpec::new(3, 6, 2, 3, 2).with_seeds(3, 4)).unwrap();
        let mut enc = Encoder::new(&code);
        for t in 0..3 {
            enc.encode_block(&[1, 0, 1, 1, t as u8 % 2, 1]).unwrap();
        }
        enc.terminate();
        assert!(enc.is_zero_state());
        let next = enc.encode_block(&[0; 6]).unwrap();
        assert!(next.parity.iter().flatten().chain(&next.last).all(|&b| b == 0));
    }

    #[test]
    fn interleaver_properties() {
        let spec = CodeSpec::new(3, 12, 0, 2, 2).with_seeds(123, 0);
        let a = build_interleavers(&spec);
        let b = build_interleavers(&spec);
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        for p in &a {
            let inv = p.inverse();
            let x: Vec<u8> = (0..12).map(|i| (i % 5) as u8).collect();
            assert_eq!(inv.apply(&p.apply(&x)), x);
            let mut sorted: Vec<usize> = p.perm().collect();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..12).collect::<Vec<_>>());
        }
        let single = build_interleavers(&CodeSpec::new(2, 1, 0, 2, 3).with_seeds(5, 0));
        assert!(single.iter().all(|p| *p == Interleaver::identity(1)));
        assert!(Interleaver::from_perm(&[0, 0, 1]).is_err());
        assert!(Interleaver::from_perm(&[2, 0, 1]).is_ok());
    }

    #[test]
    fn puncture_patterns() {
        let spec = CodeSpec::new(2, 4, 3, 2, 1).with_seeds(0, 99);
        let p = build_puncture_pattern(&spec);
        assert_eq!(p.len(), 3);
        assert!(p.positions().windows(2).all(|w| w[0] < w[1]));
        assert!(p.positions().iter().all(|&x| x < 4));
        assert_eq!(p, build_puncture_pattern(&spec));
        assert!(build_puncture_pattern(&CodeSpec::new(2, 4, 0, 2, 1)).is_empty());
        assert_eq!(p.keep(&[1, 2, 3, 4]).len(), 1);
    }
}
