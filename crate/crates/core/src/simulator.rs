//! Monte Carlo SNR sweeps and their CSV form.
//!
//! Frame `f` at grid point `i` draws its message, noise and fading from
//! streams `f` of three seeds derived from `(master_seed, i)`, so a frame's
//! outcome does not depend on the worker that decodes it or on the other grid
//! points. Frames are processed in fixed batches and the stopping rule is
//! checked between batches, which makes the records (apart from wall time)
//! identical for any worker count.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{bpsk_modulate, ebn0_db_from_snr_db, llr, sigma_from_snr_db, transmit, ChannelParams};
use crate::code_model::CodeSpec;
use crate::decoder::{hard_decision_decode, DecoderConfig, LlrFrame, WindowDecoder};
use crate::encoder::{encode_message, CodeInstance, CodeTables};
use crate::rng;
use crate::{Error, Result};

/// Frames decoded between two checks of the stopping rule.
pub const BATCH_FRAMES: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DecoderMode {
    Window(DecoderConfig),
    /// Systematic hard decisions, ignoring parity.
    HardDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub spec: CodeSpec,
    pub decoder: DecoderMode,
    pub snr_db: Vec<f64>,
    pub min_bit_errors: u64,
    pub max_frames: u64,
    pub master_seed: u64,
    /// Block-fading coherence length in symbols; `None` for AWGN.
    pub coherence: Option<usize>,
}

impl SweepConfig {
    pub fn new(spec: CodeSpec, decoder: DecoderMode, snr_db: Vec<f64>) -> Self {
        SweepConfig {
            spec,
            decoder,
            snr_db,
            min_bit_errors: 100,
            max_frames: 10_000,
            master_seed: 0,
            coherence: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.snr_db.is_empty() {
            return Err(Error::param("snr_db", "grid is empty"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("snr_db", "must be finite"));
        }
        if self.min_bit_errors == 0 {
            return Err(Error::param("min_bit_errors", "must be at least 1"));
        }
        if self.max_frames == 0 {
            return Err(Error::param("max_frames", "must be at least 1"));
        }
        if self.coherence == Some(0) {
            return Err(Error::param("coherence", "must be at least 1"));
        }
        if let DecoderMode::Window(cfg) = &self.decoder {
            cfg.validate()?;
        }
        Ok(())
    }
}

/// Which condition ended a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    MinErrors,
    MaxFrames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub snr_db: f64,
    pub ebn0_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Data layers decoded with at least one bit error.
    pub word_errors: u64,
    pub ber: f64,
    pub fer: f64,
    /// `word_errors / (L frames)`.
    pub wer: f64,
    pub wall_seconds: f64,
    pub seed: u64,
    /// Not part of the CSV form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_rule: Option<StopRule>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    frames: u64,
    bit_errors: u64,
    frame_errors: u64,
    word_errors: u64,
}

impl Counts {
    fn add(self, o: Counts) -> Counts {
        Counts {
            frames: self.frames + o.frames,
            bit_errors: self.bit_errors + o.bit_errors,
            frame_errors: self.frame_errors + o.frame_errors,
            word_errors: self.word_errors + o.word_errors,
        }
    }
}

struct PointStreams {
    message: u64,
    params: ChannelParams,
}

fn simulate_frame(
    code: &CodeInstance,
    decoder: Option<&WindowDecoder>,
    streams: &PointStreams,
    frame: u64,
) -> Result<Counts> {
    let spec = *code.spec();
    let mut r = rng::stream(streams.message, frame);
    let msg: Vec<u8> = (0..spec.info_bits()).map(|_| r.gen_range(0..=1u8)).collect();
    let cw = encode_message(code, &msg)?;
    let rx = transmit(&bpsk_modulate(&cw), &streams.params, frame);
    let llrs = LlrFrame::new(&spec, llr(&rx, streams.params.sigma))?;
    let est = match decoder {
        Some(d) => d.decode(&llrs)?.bits,
        None => hard_decision_decode(&llrs),
    };
    let mut c = Counts {
        frames: 1,
        ..Counts::default()
    };
    for (a, b) in msg.chunks(spec.k()).zip(est.chunks(spec.k())) {
        let e = a.iter().zip(b).filter(|(x, y)| x != y).count() as u64;
        c.bit_errors += e;
        c.word_errors += u64::from(e > 0);
    }
    c.frame_errors = u64::from(c.bit_errors > 0);
    Ok(c)
}

fn run_batch(
    code: &CodeInstance,
    decoder: Option<&WindowDecoder>,
    streams: &PointStreams,
    frames: std::ops::Range<u64>,
) -> Result<Counts> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        frames
            .into_par_iter()
            .map(|f| simulate_frame(code, decoder, streams, f))
            .try_reduce(Counts::default, |a, b| Ok(a.add(b)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        frames
            .map(|f| simulate_frame(code, decoder, streams, f))
            .try_fold(Counts::default(), |a, b| Ok(a.add(b?)))
    }
}

/// Runs every grid point of `cfg`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SimRecord>> {
    cfg.validate()?;
    let code = CodeInstance::new(cfg.spec)?;
    let decoder = match &cfg.decoder {
        DecoderMode::Window(d) => Some(WindowDecoder::new(&code, *d)?),
        DecoderMode::HardDecision => None,
    };
    let rate = cfg.spec.terminated_rate().as_f64();
    let info_bits = cfg.spec.info_bits() as u64;
    let mut out = Vec::with_capacity(cfg.snr_db.len());
    for (i, &snr_db) in cfg.snr_db.iter().enumerate() {
        let start = Instant::now();
        let seed = rng::derive_seed(cfg.master_seed, i as u64);
        let mut params = ChannelParams::from_snr_db(snr_db)
            .with_seeds(rng::derive_seed(seed, 1), rng::derive_seed(seed, 2));
        if let Some(b) = cfg.coherence {
            params = params.with_fading(b);
        }
        let streams = PointStreams {
            message: rng::derive_seed(seed, 0),
            params,
        };
        let mut counts = Counts::default();
        let stop = loop {
            if counts.bit_errors >= cfg.min_bit_errors {
                break StopRule::MinErrors;
            }
            if counts.frames >= cfg.max_frames {
                break StopRule::MaxFrames;
            }
            let end = (counts.frames + BATCH_FRAMES).min(cfg.max_frames);
            counts = counts.add(run_batch(&code, decoder.as_ref(), &streams, counts.frames..end)?);
        };
        let frames = counts.frames as f64;
        out.push(SimRecord {
            snr_db,
            ebn0_db: ebn0_db_from_snr_db(rate, snr_db),
            frames: counts.frames,
            bit_errors: counts.bit_errors,
            frame_errors: counts.frame_errors,
            word_errors: counts.word_errors,
            ber: counts.bit_errors as f64 / (info_bits as f64 * frames),
            fer: counts.frame_errors as f64 / frames,
            wer: counts.word_errors as f64 / (cfg.spec.l() as f64 * frames),
            wall_seconds: start.elapsed().as_secs_f64(),
            seed,
            stop_rule: Some(stop),
        });
    }
    Ok(out)
}

/// The SNR grid `a, a + step, ...` up to and including `b` (within rounding).
pub fn snr_grid(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !a.is_finite() || !b.is_finite() || b < a {
        return Err(Error::param("snr grid", "need a <= b and step > 0"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + i as f64 * step).collect())
}

/// Noise standard deviation of a grid point.
pub fn sigma_of(record: &SimRecord) -> f64 {
    sigma_from_snr_db(record.snr_db)
}

pub const CSV_HEADER: &str = "snr_db,ebn0_db,frames,bit_errors,frame_errors,word_errors,ber,fer,wer,seconds,seed";

/// Six significant digits, plain notation for moderate exponents.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn emit_csv(records: &[SimRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_sig6(r.snr_db),
            fmt_sig6(r.ebn0_db),
            r.frames,
            r.bit_errors,
            r.frame_errors,
            r.word_errors,
            fmt_sig6(r.ber),
            fmt_sig6(r.fer),
            fmt_sig6(r.wer),
            fmt_sig6(r.wall_seconds),
            r.seed
        );
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<SimRecord>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Parse("missing or unexpected header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, line)| {
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 11 {
                return Err(Error::Parse(format!("row {}: expected 11 fields", n + 1)));
            }
            let bad = |i: usize| Error::Parse(format!("row {}: bad field {}", n + 1, i + 1));
            let fl = |i: usize| f[i].parse::<f64>().map_err(|_| bad(i));
            let int = |i: usize| f[i].parse::<u64>().map_err(|_| bad(i));
            Ok(SimRecord {
                snr_db: fl(0)?,
                ebn0_db: fl(1)?,
                frames: int(2)?,
                bit_errors: int(3)?,
                frame_errors: int(4)?,
                word_errors: int(5)?,
                ber: fl(6)?,
                fer: fl(7)?,
                wer: fl(8)?,
                wall_seconds: fl(9)?,
                seed: int(10)?,
                stop_rule: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::q_function;

    fn record(ber: f64) -> SimRecord {
        SimRecord {
            snr_db: 2.5,
            ebn0_db: 2.5,
            frames: 10,
            bit_errors: 3,
            frame_errors: 2,
            word_errors: 2,
            ber,
            fer: 0.2,
            wer: 0.1,
            wall_seconds: 0.0123456789,
            seed: 42,
            stop_rule: None,
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1");
        assert_eq!(fmt_sig6(-2.25), "-2.25");
        assert_eq!(fmt_sig6(0.000123456789), "0.000123457");
        assert_eq!(fmt_sig6(1.234567e-7), "1.23457e-7");
        assert_eq!(fmt_sig6(123456789.0), "1.23457e8");
        assert_eq!(fmt_sig6(9999995.0), "1e7");
    }

    #[test]
    fn csv_round_trip() {
        assert_eq!(emit_csv(&[]), format!("{CSV_HEADER}\n"));
        let recs = vec![record(3.0e-7), record(0.5)];
        let text = emit_csv(&recs);
        assert_eq!(text, emit_csv(&recs));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].ber, 3.0e-7);
        assert_eq!(back[1].seed, 42);
        assert_eq!(emit_csv(&back), text);
        assert!(parse_csv("nope\n").is_err());
    }

    #[test]
    fn grid() {
        assert_eq!(snr_grid(1.0, 2.0, 0.5).unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(snr_grid(0.0, 0.3, 0.1).unwrap().len(), 4);
        assert!(snr_grid(2.0, 1.0, 0.5).is_err());
        assert!(snr_grid(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn noiseless_sweep_has_no_errors() {
        let spec = CodeSpec::new(2, 8, 0, 6, 2).with_seeds(1, 2);
        let mut cfg = SweepConfig::new(spec, DecoderMode::Window(DecoderConfig::new(3)), vec![60.0]);
        cfg.max_frames = 100;
        let r = &run_sweep(&cfg).unwrap()[0];
        assert_eq!((r.frames, r.bit_errors, r.stop_rule), (100, 0, Some(StopRule::MaxFrames)));
    }

    #[test]
    fn hard_decision_matches_q() {
        let spec = CodeSpec::new(2, 50, 0, 10, 1);
        let mut cfg = SweepConfig::new(spec, DecoderMode::HardDecision, vec![0.0]);
        cfg.min_bit_errors = u64::MAX;
        cfg.max_frames = 200;
        let r = &run_sweep(&cfg).unwrap()[0];
        let p = q_function(1.0);
        let n = (r.frames * 500) as f64;
        assert!((r.ber - p).abs() < 3.0 * (p * (1.0 - p) / n).sqrt(), "{}", r.ber);
        assert!(r.ber <= r.fer && r.fer <= 500.0 * r.ber);
    }

    #[test]
    fn reproducible_and_stops_on_errors() {
        let spec = CodeSpec::new(2, 10, 0, 8, 1).with_seeds(3, 4);
        let mut cfg = SweepConfig::new(spec, DecoderMode::Window(DecoderConfig::new(2)), vec![0.0, 1.0]);
        cfg.min_bit_errors = 50;
        let mut a = run_sweep(&cfg).unwrap();
        let mut b = run_sweep(&cfg).unwrap();
        for r in a.iter_mut().chain(b.iter_mut()) {
            r.wall_seconds = 0.0;
        }
        assert_eq!(a, b);
        assert_eq!(a[0].stop_rule, Some(StopRule::MinErrors));
        // adding a grid point leaves earlier points untouched
        cfg.snr_db.push(2.0);
        let mut c = run_sweep(&cfg).unwrap();
        c[0].wall_seconds = 0.0;
        assert_eq!(c[0], a[0]);
    }

    #[test]
    fn invalid_configs() {
        let spec = CodeSpec::new(2, 4, 0, 2, 1);
        let mut cfg = SweepConfig::new(spec, DecoderMode::HardDecision, vec![]);
        assert!(run_sweep(&cfg).is_err());
        cfg.snr_db = vec![1.0];
        cfg.min_bit_errors = 0;
        assert!(run_sweep(&cfg).is_err());
    }
}
