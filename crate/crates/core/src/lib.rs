//! Systematic block Markov superposition transmission of repetition codes
//! (BMST-R).
//!
//! An information sequence is cut into `L` blocks of `K` bits. Each block is
//! sent as is, while `N - 1` interleaved replicas of it and of the `m`
//! preceding blocks are superimposed (mod 2) to form the parity branches.
//! The last parity branch may be partially punctured to reach any rate in
//! `(1/N, 1/(N-1))`.
//!
//! The crate provides:
//!
//! * [`code_model`]: code parameters, rates, latency and complexity figures;
//! * [`encoder`]: the block-oriented encoder with zero-tail termination;
//! * [`channel`]: BPSK over AWGN and block Rayleigh fading, LLRs, SNR bookkeeping;
//! * [`decoder`]: iterative sliding-window decoding on the normal graph;
//! * [`wef`]: ensemble weight enumerators (trellis and closed forms) and spectra;
//! * [`bounds`]: MAP bit-error-rate bounds, Shannon limits and a code planner;
//! * [`simulator`]: Monte Carlo sweeps and CSV output;
//! * [`oracle`]: brute-force references for small codes, used for validation.

pub mod bounds;
pub mod channel;
pub mod code_model;
pub mod decoder;
pub mod encoder;
mod error;
pub mod math;
pub mod oracle;
pub mod rng;
pub mod simulator;
pub mod wef;

pub use code_model::{CodeSpec, FrameLayout, Rate};
pub use encoder::{CodeInstance, CodeTables, Encoder, Interleaver, PuncturePattern};
pub use error::{Error, Result};
