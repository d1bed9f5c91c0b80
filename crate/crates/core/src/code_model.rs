//! Code parameters and the figures derived from them.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// All parameters of one terminated systematic BMST-R code.
///
/// The puncturing fraction is kept as the exact pair `(puncture_len,
/// info_block_len)`; see [`CodeSpec::theta`] for a float view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpec {
    /// Number of branches per layer, systematic branch included (`N`).
    pub repetition_degree: usize,
    /// Bits per information block (`K`).
    pub info_block_len: usize,
    /// Bits removed from the last parity branch of every layer (`K_p`).
    pub puncture_len: usize,
    /// Number of information blocks in a frame (`L`).
    pub data_blocks: usize,
    /// Encoding memory (`m`).
    pub memory: usize,
    #[serde(with = "decimal_string")]
    pub interleaver_seed: u64,
    #[serde(with = "decimal_string")]
    pub puncture_seed: u64,
}

mod decimal_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(D::Error::custom)
    }
}

impl CodeSpec {
    /// Spec with both seeds set to zero.
    pub fn new(n: usize, k: usize, k_p: usize, l: usize, m: usize) -> Self {
        CodeSpec {
            repetition_degree: n,
            info_block_len: k,
            puncture_len: k_p,
            data_blocks: l,
            memory: m,
            interleaver_seed: 0,
            puncture_seed: 0,
        }
    }

    pub fn with_seeds(mut self, interleaver_seed: u64, puncture_seed: u64) -> Self {
        self.interleaver_seed = interleaver_seed;
        self.puncture_seed = puncture_seed;
        self
    }

    /// Checks the structural invariants and returns the spec unchanged.
    pub fn validate(self) -> Result<Self> {
        if self.repetition_degree < 2 {
            return Err(Error::InvalidSpec("repetition_degree must be at least 2"));
        }
        if self.info_block_len == 0 {
            return Err(Error::InvalidSpec("info_block_len must be positive"));
        }
        if self.info_block_len > u32::MAX as usize {
            return Err(Error::InvalidSpec("info_block_len does not fit in 32 bits"));
        }
        if self.puncture_len > self.info_block_len {
            return Err(Error::InvalidSpec("puncture_len must not exceed info_block_len"));
        }
        if self.puncture_len == self.info_block_len {
            if self.repetition_degree == 2 {
                return Err(Error::InvalidSpec(
                    "theta = 1 with N = 2 leaves no redundancy (rate 1)",
                ));
            }
            return Err(Error::InvalidSpec("puncturing fraction must be below 1"));
        }
        if self.data_blocks == 0 {
            return Err(Error::InvalidSpec("data_blocks must be at least 1"));
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.repetition_degree
    }
    pub fn k(&self) -> usize {
        self.info_block_len
    }
    pub fn k_p(&self) -> usize {
        self.puncture_len
    }
    pub fn l(&self) -> usize {
        self.data_blocks
    }
    pub fn m(&self) -> usize {
        self.memory
    }

    /// Puncturing fraction `K_p / K`.
    pub fn theta(&self) -> f64 {
        self.puncture_len as f64 / self.info_block_len as f64
    }

    /// Number of parity branches, `N - 1`.
    pub fn parity_branches(&self) -> usize {
        self.repetition_degree - 1
    }

    /// Number of interleavers, `(m + 1)(N - 1)`.
    pub fn interleaver_count(&self) -> usize {
        (self.memory + 1) * self.parity_branches()
    }

    /// Layers in a terminated frame, `L + m`.
    pub fn total_layers(&self) -> usize {
        self.data_blocks + self.memory
    }

    /// Information bits per frame, `k = K L`.
    pub fn info_bits(&self) -> usize {
        self.info_block_len * self.data_blocks
    }

    pub fn layout(&self) -> FrameLayout {
        FrameLayout::new(self)
    }

    /// Rate of the terminated code, as the exact ratio `K L / n`.
    pub fn terminated_rate(&self) -> Rate {
        let layout = self.layout();
        Rate {
            info_bits: layout.info_bits as u64,
            coded_bits: layout.total_bits as u64,
        }
    }

    /// Latency of the window decoder in bits: the bits of `d + 1` data layers.
    pub fn decoding_latency_bits(&self, delay: usize) -> usize {
        self.layout().data_layer_bits() * (delay + 1)
    }

    /// Decoding complexity figure `N m d` (arbitrary units).
    pub fn complexity_estimate(&self, delay: usize) -> u64 {
        complexity_estimate(self.repetition_degree, self.memory, delay)
    }
}

/// Decoding complexity figure `N m d` (arbitrary units).
pub fn complexity_estimate(n: usize, m: usize, delay: usize) -> u64 {
    n as u64 * m as u64 * delay as u64
}

/// An exact code rate `info_bits / coded_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub info_bits: u64,
    pub coded_bits: u64,
}

impl Rate {
    pub fn as_f64(&self) -> f64 {
        self.info_bits as f64 / self.coded_bits as f64
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.info_bits, self.coded_bits)
    }
}

/// Bit accounting of one terminated frame.
///
/// Within a layer bits are emitted as: systematic block (data layers only),
/// parity branches `1..N-2`, then the unpunctured part of branch `N-1`.
/// Layers follow each other in time order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub info_block_len: usize,
    pub parity_branches: usize,
    pub puncture_len: usize,
    pub data_layers: usize,
    pub tail_layers: usize,
    /// Systematic bits per data layer.
    pub systematic_bits: usize,
    /// Parity bits per layer, `(N-1)K - K_p`.
    pub parity_bits: usize,
    pub total_bits: usize,
    pub info_bits: usize,
}

impl FrameLayout {
    pub fn new(spec: &CodeSpec) -> Self {
        let k = spec.info_block_len;
        let parity_bits = spec.parity_branches() * k - spec.puncture_len;
        let layers = spec.total_layers();
        FrameLayout {
            info_block_len: k,
            parity_branches: spec.parity_branches(),
            puncture_len: spec.puncture_len,
            data_layers: spec.data_blocks,
            tail_layers: spec.memory,
            systematic_bits: k,
            parity_bits,
            total_bits: k * spec.data_blocks + parity_bits * layers,
            info_bits: k * spec.data_blocks,
        }
    }

    pub fn layers(&self) -> usize {
        self.data_layers + self.tail_layers
    }

    pub fn data_layer_bits(&self) -> usize {
        self.systematic_bits + self.parity_bits
    }

    /// Bits emitted for layer `t`.
    pub fn layer_bits(&self, t: usize) -> usize {
        if t < self.data_layers {
            self.data_layer_bits()
        } else {
            self.parity_bits
        }
    }

    /// Offset of layer `t` in the frame.
    pub fn layer_offset(&self, t: usize) -> usize {
        if t <= self.data_layers {
            t * self.data_layer_bits()
        } else {
            self.data_layers * self.data_layer_bits() + (t - self.data_layers) * self.parity_bits
        }
    }

    /// Offset of the systematic block of data layer `t`.
    pub fn systematic_offset(&self, t: usize) -> usize {
        debug_assert!(t < self.data_layers);
        self.layer_offset(t)
    }

    /// Offset of the parity part of layer `t`.
    pub fn parity_offset(&self, t: usize) -> usize {
        let sys = if t < self.data_layers {
            self.systematic_bits
        } else {
            0
        };
        self.layer_offset(t) + sys
    }

    /// Frame positions of the information bits, in message order.
    pub fn systematic_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.data_layers).flat_map(move |t| {
            let base = self.systematic_offset(t);
            base..base + self.systematic_bits
        })
    }
}
