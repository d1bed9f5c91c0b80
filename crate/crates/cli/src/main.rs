use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bmst::bounds::{lower_bound_ensemble, plan_code, upper_bound_truncated};
use bmst::channel::{sigma_from_snr_db, snr_db_from_ebn0_db};
use bmst::decoder::{hard_decision_decode, DecoderConfig, LlrFrame, WindowDecoder};
use bmst::encoder::encode_message;
use bmst::oracle::BlockTrellis;
use bmst::simulator::{emit_csv, fmt_sig6, run_sweep, snr_grid, DecoderMode, SweepConfig};
use bmst::wef::{compute_irwef, spectrum, IrwefOptions, IrwefTable};
use bmst::{CodeInstance, CodeSpec};
use clap::{Args, Parser, Subcommand};
use rand::Rng;

/// Systematic block Markov superposition transmission of repetition codes.
#[derive(Parser)]
#[command(name = "bmst", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Code description (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Choose N, theta and the encoding memory for a rate and target BER.
    Plan {
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 1e-5)]
        target_ber: f64,
        /// Block length (taken from --spec if given).
        #[arg(long, default_value_t = 1000)]
        k: usize,
        /// Number of data blocks (taken from --spec if given).
        #[arg(long, default_value_t = 1000)]
        l: usize,
    },
    /// Encode a message given as 0/1 characters (random if no input).
    Encode {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Decode channel LLRs (whitespace or comma separated, frame order).
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        delay: usize,
        #[arg(long, default_value_t = 18)]
        max_iter: usize,
        /// Systematic hard decisions instead of iterative decoding.
        #[arg(long)]
        hard: bool,
    },
    /// Monte Carlo BER/FER/WER over an SNR grid.
    Simulate(SimArgs),
    /// Ensemble IRWEF as CSV `i,j,A_ij`.
    Wef(WefArgs),
    /// Lower and truncated upper bound over an SNR grid.
    Bounds {
        #[arg(long, default_value = "0:8:0.5")]
        snr_db: String,
        #[command(flatten)]
        wef: WefArgs,
    },
    /// Minimum-weight spectrum as CSV `s,D_s`.
    Spectrum(WefArgs),
    /// Per-bit minimum distances of a small specific code.
    #[command(hide = true)]
    Oracle,
}

#[derive(Args)]
struct SimArgs {
    /// SNR grid `a:b:step` in dB (1/sigma^2).
    #[arg(long, conflicts_with = "ebn0_db")]
    snr_db: Option<String>,
    /// Eb/N0 grid `a:b:step` in dB.
    #[arg(long)]
    ebn0_db: Option<String>,
    #[arg(long, default_value_t = 4)]
    delay: usize,
    #[arg(long, default_value_t = 18)]
    max_iter: usize,
    /// Block Rayleigh fading instead of AWGN.
    #[arg(long)]
    fading: bool,
    /// Coherence length in symbols (with --fading).
    #[arg(long, requires = "fading")]
    coherence: Option<usize>,
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    #[arg(long, default_value_t = 10_000)]
    max_frames: u64,
    /// Systematic hard decisions instead of iterative decoding.
    #[arg(long)]
    hard: bool,
}

#[derive(Args)]
struct WefArgs {
    /// Largest input weight `T`.
    #[arg(long, default_value_t = 8)]
    truncation: usize,
    /// Lump all total weights above this value (at least `T`).
    #[arg(long)]
    weight_cap: Option<usize>,
}

impl WefArgs {
    fn compute(&self, spec: &CodeSpec) -> Result<IrwefTable> {
        let t = self.truncation.min(spec.info_bits());
        let opts = match self.weight_cap {
            Some(c) => IrwefOptions::capped(t, c),
            None => IrwefOptions::exact(t),
        };
        compute_irwef(spec, &opts).context("enumerator too large; try a smaller --truncation or a --weight-cap")
    }
}

fn load_spec(path: &Option<PathBuf>) -> Result<CodeSpec> {
    let path = path.as_ref().context("--spec is required")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: CodeSpec = serde_json::from_str(&text).context("parsing the spec")?;
    Ok(spec.validate()?)
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad grid {s:?}"))?;
    match parts[..] {
        [a] => Ok(vec![a]),
        [a, b] => Ok(snr_grid(a, b, 1.0)?),
        [a, b, step] => Ok(snr_grid(a, b, step)?),
        _ => bail!("grid must be a, a:b or a:b:step"),
    }
}

fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

fn run(cli: Cli) -> Result<String> {
    let c = &cli.common;
    Ok(match cli.cmd {
        Cmd::Plan { rate, target_ber, k, l } => {
            let (k, l) = match &c.spec {
                Some(_) => {
                    let s = load_spec(&c.spec)?;
                    (s.k(), s.l())
                }
                None => (k, l),
            };
            let plan = plan_code(rate, target_ber, k, l, c.seed)?;
            serde_json::to_string_pretty(&plan)? + "\n"
        }
        Cmd::Encode { input } => {
            let spec = load_spec(&c.spec)?;
            let code = CodeInstance::new(spec)?;
            let msg: Vec<u8> = match input {
                Some(p) => fs::read_to_string(&p)?
                    .chars()
                    .filter(|ch| !ch.is_whitespace())
                    .map(|ch| match ch {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        _ => bail!("message must contain only 0 and 1"),
                    })
                    .collect::<Result<_>>()?,
                None => {
                    let mut r = bmst::rng::stream(c.seed, 0);
                    (0..spec.info_bits()).map(|_| r.gen_range(0..=1u8)).collect()
                }
            };
            bits_to_string(&encode_message(&code, &msg)?) + "\n"
        }
        Cmd::Decode { input, delay, max_iter, hard } => {
            let spec = load_spec(&c.spec)?;
            let llrs: Vec<f64> = fs::read_to_string(&input)?
                .split(|ch: char| ch.is_whitespace() || ch == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().with_context(|| format!("bad LLR {t:?}")))
                .collect::<Result<_>>()?;
            let frame = LlrFrame::new(&spec, llrs)?;
            let bits = if hard {
                hard_decision_decode(&frame)
            } else {
                let code = CodeInstance::new(spec)?;
                let mut cfg = DecoderConfig::new(delay);
                cfg.max_iterations = max_iter;
                WindowDecoder::new(&code, cfg)?.decode(&frame)?.bits
            };
            bits_to_string(&bits) + "\n"
        }
        Cmd::Simulate(a) => {
            let spec = load_spec(&c.spec)?;
            let snr = match (&a.snr_db, &a.ebn0_db) {
                (Some(g), None) => parse_grid(g)?,
                (None, Some(g)) => {
                    let rate = spec.terminated_rate().as_f64();
                    parse_grid(g)?.into_iter().map(|e| snr_db_from_ebn0_db(rate, e)).collect()
                }
                _ => bail!("give exactly one of --snr-db and --ebn0-db"),
            };
            let decoder = if a.hard {
                DecoderMode::HardDecision
            } else {
                let mut d = DecoderConfig::new(a.delay);
                d.max_iterations = a.max_iter;
                DecoderMode::Window(d)
            };
            let mut cfg = SweepConfig::new(spec, decoder, snr);
            cfg.min_bit_errors = a.min_errors;
            cfg.max_frames = a.max_frames;
            cfg.master_seed = c.seed;
            if a.fading {
                // default: one coherence period per data layer
                cfg.coherence = Some(a.coherence.unwrap_or(spec.n() * spec.k()));
            }
            emit_csv(&run_sweep(&cfg)?)
        }
        Cmd::Wef(w) => {
            let spec = load_spec(&c.spec)?;
            let table = w.compute(&spec)?;
            let mut s = String::from("i,j,A_ij\n");
            for (i, j, a) in table.entries() {
                let _ = writeln!(s, "{i},{j},{}", fmt_sig6(a));
            }
            s
        }
        Cmd::Spectrum(w) => {
            let spec = load_spec(&c.spec)?;
            let table = w.compute(&spec)?;
            let mut s = String::from("s,D_s\n");
            for (i, d) in spectrum(&table, spec.info_bits()).into_iter().enumerate() {
                let _ = writeln!(s, "{},{}", i + 1, fmt_sig6(d));
            }
            s
        }
        Cmd::Bounds { snr_db, wef } => {
            let spec = load_spec(&c.spec)?;
            let table = wef.compute(&spec)?;
            let mut s = String::from("snr_db,lower,upper,r_star\n");
            for db in parse_grid(&snr_db)? {
                let sigma = sigma_from_snr_db(db);
                let lo = lower_bound_ensemble(spec.n(), spec.m(), spec.theta(), sigma);
                let up = upper_bound_truncated(&table, sigma);
                let _ = writeln!(s, "{},{},{},{}", fmt_sig6(db), fmt_sig6(lo), fmt_sig6(up.value), up.r_star);
            }
            s
        }
        Cmd::Oracle => {
            let spec = load_spec(&c.spec)?;
            let trellis = BlockTrellis::new(&CodeInstance::new(spec)?)?;
            let dmin = trellis.dmin_per_bit();
            let report = serde_json::json!({
                "min_distance": dmin.iter().min(),
                "dmin_per_bit": dmin,
                "row_weights": trellis.row_weights(),
            });
            serde_json::to_string_pretty(&report)? + "\n"
        }
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let out = cli.common.out.clone();
    let text = run(cli)?;
    match out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
