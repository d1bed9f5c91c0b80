//! BPSK over AWGN and block Rayleigh fading, with coherent LLR computation.

use serde::{Deserialize, Serialize};

use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// Magnitude at which LLRs are clipped.
pub const LLR_CLIP: f64 = 50.0;

/// Noise level, optional block fading, and the seeds of both random streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Noise standard deviation per real sample.
    pub sigma: f64,
    /// Coherence length in symbols; `None` for AWGN.
    pub coherence_len: Option<usize>,
    pub noise_seed: u64,
    pub fading_seed: u64,
}

impl ChannelParams {
    pub fn awgn(sigma: f64) -> Self {
        ChannelParams {
            sigma,
            coherence_len: None,
            noise_seed: 0,
            fading_seed: 0,
        }
    }

    pub fn from_snr_db(snr_db: f64) -> Self {
        Self::awgn(sigma_from_snr_db(snr_db))
    }

    pub fn with_fading(mut self, coherence_len: usize) -> Self {
        self.coherence_len = Some(coherence_len);
        self
    }

    pub fn with_seeds(mut self, noise_seed: u64, fading_seed: u64) -> Self {
        self.noise_seed = noise_seed;
        self.fading_seed = fading_seed;
        self
    }

    pub fn snr_db(&self) -> f64 {
        snr_db_from_sigma(self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", "must be positive and finite"));
        }
        if self.coherence_len == Some(0) {
            return Err(Error::param("coherence_len", "must be at least 1"));
        }
        Ok(())
    }

    /// The noise and fading generators for one frame. Both are functions of
    /// their own seed and the frame index only.
    pub fn frame_streams(&self, frame: u64) -> (StreamRng, StreamRng) {
        (
            rng::stream(self.noise_seed, frame),
            rng::stream(self.fading_seed, frame),
        )
    }
}

/// `10 log10(1 / sigma^2)`.
pub fn snr_db_from_sigma(sigma: f64) -> f64 {
    -20.0 * sigma.log10()
}

pub fn sigma_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// `E_b/N_0` in dB for a code of rate `rate` at the given SNR, using
/// `E_b/N_0 = (1/sigma^2) / (2R)`.
pub fn ebn0_db_from_snr_db(rate: f64, snr_db: f64) -> f64 {
    snr_db - 10.0 * (2.0 * rate).log10()
}

pub fn snr_db_from_ebn0_db(rate: f64, ebn0_db: f64) -> f64 {
    ebn0_db + 10.0 * (2.0 * rate).log10()
}

/// Channel output for one frame. `fading` is all ones on AWGN.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub y: Vec<f64>,
    pub fading: Vec<f64>,
}

/// 0 -> +1, 1 -> -1.
pub fn bpsk_modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| 1.0 - 2.0 * f64::from(b & 1)).collect()
}

/// `y = s + z`, `z ~ N(0, sigma^2)`.
pub fn awgn_transmit(symbols: &[f64], sigma: f64, noise: &mut StreamRng) -> ReceivedFrame {
    let y = symbols
        .iter()
        .map(|&s| s + sigma * rng::standard_normal(noise))
        .collect();
    ReceivedFrame {
        y,
        fading: vec![1.0; symbols.len()],
    }
}

/// `y = a s + z` with `a` Rayleigh (`E[a^2] = 1`), constant over runs of
/// `coherence_len` symbols and independent across runs.
pub fn block_fading_transmit(
    symbols: &[f64],
    sigma: f64,
    coherence_len: usize,
    noise: &mut StreamRng,
    fading: &mut StreamRng,
) -> ReceivedFrame {
    assert!(coherence_len >= 1);
    let mut a = Vec::with_capacity(symbols.len());
    for chunk in symbols.chunks(coherence_len) {
        let coef = rng::rayleigh_unit_power(fading);
        a.extend(std::iter::repeat_n(coef, chunk.len()));
    }
    let y = symbols
        .iter()
        .zip(&a)
        .map(|(&s, &c)| c * s + sigma * rng::standard_normal(noise))
        .collect();
    ReceivedFrame { y, fading: a }
}

/// Transmits according to `params`, using the streams of frame `frame`.
pub fn transmit(symbols: &[f64], params: &ChannelParams, frame: u64) -> ReceivedFrame {
    let (mut noise, mut fade) = params.frame_streams(frame);
    match params.coherence_len {
        None => awgn_transmit(symbols, params.sigma, &mut noise),
        Some(b) => block_fading_transmit(symbols, params.sigma, b, &mut noise, &mut fade),
    }
}

/// `LLR = 2 a y / sigma^2`, clipped to `[-LLR_CLIP, LLR_CLIP]`. Positive favours 0.
pub fn llr(received: &ReceivedFrame, sigma: f64) -> Vec<f64> {
    let scale = 2.0 / (sigma * sigma);
    received
        .y
        .iter()
        .zip(&received.fading)
        .map(|(&y, &a)| (scale * a * y).clamp(-LLR_CLIP, LLR_CLIP))
        .collect()
}

/// Unclipped AWGN LLRs, for exact reference decoders.
pub fn llr_unclipped(y: &[f64], sigma: f64) -> Vec<f64> {
    let scale = 2.0 / (sigma * sigma);
    y.iter().map(|&v| scale * v).collect()
}
