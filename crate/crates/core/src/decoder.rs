//! Iterative sliding-window decoding on the normal graph.
//!
//! Layer `s` has one equality node per information bit `u(s)[kk]`, which is
//! tied to its systematic channel LLR and to `(N-1)(m+1)` check nodes: for
//! every branch `b` and lag `j`, the check `(s + j, b, k)` with
//! `perm_{b,j}[k] = kk`. Check `(t, b, k)` enforces
//! `c_b(t)[k] = sum_j u(t-j)[perm_{b,j}[k]]` together with the parity channel
//! LLR (zero when punctured). Tail information blocks are known zeros and are
//! removed from the graph.
//!
//! The window for target layer `t0` covers check layers `t0 ..= t0 + d`
//! (truncated at the last layer) and the information layers among them.
//! Every iteration updates all checks of the window, then all equality nodes.
//! Messages are kept across window positions; variables of decided layers
//! keep their last outgoing messages, and checks not yet reached by the
//! window send zero.

use serde::{Deserialize, Serialize};

use crate::channel::LLR_CLIP;
use crate::code_model::{CodeSpec, FrameLayout};
use crate::encoder::CodeTables;
use crate::math::binary_entropy;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    /// Decoding delay `d`: the window spans `d + 1` layers.
    pub delay: usize,
    pub max_iterations: usize,
    pub entropy_threshold: f64,
}

impl DecoderConfig {
    pub fn new(delay: usize) -> Self {
        DecoderConfig {
            delay,
            max_iterations: 18,
            entropy_threshold: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        if self.entropy_threshold.is_nan() || self.entropy_threshold <= 0.0 {
            return Err(Error::param("entropy_threshold", "must be positive"));
        }
        Ok(())
    }
}

/// Channel LLRs of one frame in transmission order (see [`FrameLayout`]).
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    llrs: Vec<f64>,
    layout: FrameLayout,
}

impl LlrFrame {
    pub fn new(spec: &CodeSpec, llrs: Vec<f64>) -> Result<Self> {
        let layout = spec.layout();
        if llrs.len() != layout.total_bits {
            return Err(Error::FrameLength {
                expected: layout.total_bits,
                actual: llrs.len(),
            });
        }
        if llrs.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("llrs", "values must be finite"));
        }
        let llrs = llrs
            .into_iter()
            .map(|x| x.clamp(-LLR_CLIP, LLR_CLIP))
            .collect();
        Ok(LlrFrame { llrs, layout })
    }

    pub fn values(&self) -> &[f64] {
        &self.llrs
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    /// The `K L` LLRs of the systematic positions, in message order.
    pub fn systematic(&self) -> Vec<f64> {
        self.layout
            .systematic_positions()
            .map(|p| self.llrs[p])
            .collect()
    }
}

/// Bit decision from an LLR; zero decides 0.
#[inline]
pub fn decide(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// `2 atanh(tanh(a/2) tanh(b/2))` in the sign-magnitude form with exact
/// logarithmic corrections, which neither overflows nor loses precision for
/// large arguments.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    let m = a.abs().min(b.abs());
    sign * m + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Parity-check node: `out[e]` is the boxplus of all inputs except `e`.
pub fn check_node_update(inputs: &[f64], out: &mut [f64]) {
    let n = inputs.len();
    debug_assert_eq!(out.len(), n);
    match n {
        0 => {}
        1 => out[0] = LLR_CLIP,
        _ => {
            // forward prefixes in `out`, then a backward sweep
            out[0] = f64::INFINITY;
            let mut acc = inputs[0];
            for i in 1..n {
                out[i] = acc;
                acc = boxplus(acc, inputs[i]);
            }
            let mut back = inputs[n - 1];
            for i in (0..n - 1).rev() {
                out[i] = if i == 0 { back } else { boxplus(out[i], back) };
                back = boxplus(back, inputs[i]);
            }
        }
    }
    for o in out.iter_mut() {
        *o = o.clamp(-LLR_CLIP, LLR_CLIP);
    }
}

/// Equality node: `out[e]` is the sum of all inputs except `e`. Returns the
/// posterior, the sum of all inputs. Everything is clipped.
pub fn equality_node_update(inputs: &[f64], out: &mut [f64]) -> f64 {
    let total: f64 = inputs.iter().sum();
    for (o, &x) in out.iter_mut().zip(inputs) {
        *o = (total - x).clamp(-LLR_CLIP, LLR_CLIP);
    }
    total.clamp(-LLR_CLIP, LLR_CLIP)
}

/// Mean binary entropy of the bit posteriors given as LLRs.
pub fn mean_entropy(posteriors: &[f64]) -> f64 {
    if posteriors.is_empty() {
        return 0.0;
    }
    let s: f64 = posteriors
        .iter()
        .map(|&l| binary_entropy(1.0 / (1.0 + l.abs().exp())))
        .sum();
    s / posteriors.len() as f64
}

/// Stopping rule: true once the mean entropy changed by less than `threshold`
/// since the previous iteration. Never true without a previous value.
pub fn entropy_stop(previous: Option<f64>, current: f64, threshold: f64) -> bool {
    previous.is_some_and(|p| (p - current).abs() < threshold)
}

/// Signs of the systematic channel LLRs.
pub fn hard_decision_decode(llrs: &LlrFrame) -> Vec<u8> {
    llrs.layout
        .systematic_positions()
        .map(|p| decide(llrs.llrs[p]))
        .collect()
}

/// Result of decoding one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    pub bits: Vec<u8>,
    /// Posterior LLRs of the information bits at their decision time.
    pub posteriors: Vec<f64>,
    /// Iterations run at each window position.
    pub iterations: Vec<usize>,
}

/// The normal graph of one code, reusable across frames.
#[derive(Debug, Clone)]
pub struct WindowDecoder {
    spec: CodeSpec,
    layout: FrameLayout,
    cfg: DecoderConfig,
    /// Per check `(t, b, k)` and lag `j`: variable index, or `u32::MAX` when
    /// the lagged block is outside the data layers.
    check_vars: Vec<u32>,
    /// Per variable and `(b, j)`: edge index.
    var_edges: Vec<u32>,
    /// Per check: position of its parity bit in the frame, `None` if punctured.
    check_channel: Vec<Option<u32>>,
}

impl WindowDecoder {
    pub fn new<T: CodeTables + ?Sized>(tables: &T, cfg: DecoderConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = *tables.spec();
        spec.validate()?;
        let layout = spec.layout();
        let (k, l, m) = (spec.k(), spec.l(), spec.m());
        let nb = spec.parity_branches();
        let layers = l + m;
        let deg = m + 1;
        let n_checks = layers * nb * k;
        if n_checks.saturating_mul(deg) >= u32::MAX as usize {
            return Err(Error::ResourceLimit("graph too large".into()));
        }
        let mut check_vars = vec![u32::MAX; n_checks * deg];
        let mut var_edges = vec![u32::MAX; l * k * nb * deg];
        let mut check_channel = vec![None; n_checks];
        for t in 0..layers {
            let pattern = tables.puncture(t);
            let base = layout.parity_offset(t);
            for b in 1..=nb {
                let mut kept = 0usize;
                for kk in 0..k {
                    let c = (t * nb + b - 1) * k + kk;
                    check_channel[c] = if b < nb {
                        Some((base + (b - 1) * k + kk) as u32)
                    } else if pattern.is_punctured(kk) {
                        None
                    } else {
                        kept += 1;
                        Some((base + (nb - 1) * k + kept - 1) as u32)
                    };
                }
                for j in 0..deg {
                    if t < j || t - j >= l {
                        continue;
                    }
                    let s = t - j;
                    let perm = tables.interleaver(t, b, j);
                    for kk in 0..k {
                        let c = (t * nb + b - 1) * k + kk;
                        let e = c * deg + j;
                        let v = s * k + perm.source(kk);
                        check_vars[e] = v as u32;
                        var_edges[(v * nb + b - 1) * deg + j] = e as u32;
                    }
                }
            }
        }
        debug_assert!(var_edges.iter().all(|&e| e != u32::MAX));
        Ok(WindowDecoder {
            spec,
            layout,
            cfg,
            check_vars,
            var_edges,
            check_channel,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    pub fn decode(&self, frame: &LlrFrame) -> Result<DecodeOutput> {
        if frame.layout != self.layout {
            return Err(Error::FrameLength {
                expected: self.layout.total_bits,
                actual: frame.llrs.len(),
            });
        }
        let (k, l, m) = (self.spec.k(), self.spec.l(), self.spec.m());
        let nb = self.spec.parity_branches();
        let deg = m + 1;
        let var_deg = nb * deg;
        let last_layer = l + m - 1;
        let ch = &frame.llrs;

        let sys: Vec<f64> = self.layout.systematic_positions().map(|p| ch[p]).collect();
        let check_ch: Vec<f64> = self
            .check_channel
            .iter()
            .map(|p| p.map_or(0.0, |p| ch[p as usize]))
            .collect();

        let n_edges = self.check_vars.len();
        let mut v2c = vec![0.0; n_edges];
        let mut c2v = vec![0.0; n_edges];
        for (v, &s) in sys.iter().enumerate() {
            for &e in &self.var_edges[v * var_deg..(v + 1) * var_deg] {
                v2c[e as usize] = s;
            }
        }
        let mut post = sys.clone();
        let mut iterations = Vec::with_capacity(l);
        let mut bits = Vec::with_capacity(l * k);
        let mut final_post = Vec::with_capacity(l * k);

        let mut cin = Vec::with_capacity(deg + 1);
        let mut cout = vec![0.0; deg + 1];
        let mut vin = Vec::with_capacity(var_deg + 1);
        let mut vout = vec![0.0; var_deg + 1];

        for t0 in 0..l {
            let t_end = (t0 + self.cfg.delay).min(last_layer);
            let s_end = t_end.min(l - 1);
            let checks = t0 * nb * k..(t_end + 1) * nb * k;
            let vars = t0 * k..(s_end + 1) * k;
            let mut prev = None;
            let mut iters = 0;
            for _ in 0..self.cfg.max_iterations {
                iters += 1;
                for c in checks.clone() {
                    let t = c / (nb * k);
                    let j_lo = (t + 1).saturating_sub(l);
                    let j_hi = t.min(m);
                    cin.clear();
                    cin.push(check_ch[c]);
                    for j in j_lo..=j_hi {
                        cin.push(v2c[c * deg + j]);
                    }
                    let n = cin.len();
                    check_node_update(&cin, &mut cout[..n]);
                    for (i, j) in (j_lo..=j_hi).enumerate() {
                        c2v[c * deg + j] = cout[i + 1];
                    }
                }
                for v in vars.clone() {
                    let edges = &self.var_edges[v * var_deg..(v + 1) * var_deg];
                    vin.clear();
                    vin.push(sys[v]);
                    vin.extend(edges.iter().map(|&e| c2v[e as usize]));
                    post[v] = equality_node_update(&vin, &mut vout[..var_deg + 1]);
                    for (i, &e) in edges.iter().enumerate() {
                        v2c[e as usize] = vout[i + 1];
                    }
                }
                let h = mean_entropy(&post[vars.clone()]);
                if entropy_stop(prev, h, self.cfg.entropy_threshold) {
                    break;
                }
                prev = Some(h);
            }
            iterations.push(iters);
            let target = &post[t0 * k..(t0 + 1) * k];
            bits.extend(target.iter().map(|&x| decide(x)));
            final_post.extend_from_slice(target);
        }
        Ok(DecodeOutput {
            bits,
            posteriors: final_post,
            iterations,
        })
    }
}

/// Decodes one frame; builds the graph on every call. Use [`WindowDecoder`]
/// to decode many frames of the same code.
pub fn decode_frame<T: CodeTables + ?Sized>(
    llrs: &LlrFrame,
    tables: &T,
    cfg: DecoderConfig,
) -> Result<Vec<u8>> {
    Ok(WindowDecoder::new(tables, cfg)?.decode(llrs)?.bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bpsk_modulate, llr, transmit, ChannelParams};
    use crate::encoder::{encode_message, CodeInstance};
    use crate::rng;
    use rand::Rng;

    fn boxplus_ref(a: f64, b: f64) -> f64 {
        2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh()
    }

    #[test]
    fn boxplus_matches_definition() {
        assert!((boxplus(2.0, 3.0) - 1.693_453_660_970_895).abs() < 1e-12);
        for &(a, b) in &[(0.3, -1.2), (-4.0, -0.1), (7.5, 7.0), (0.0, 3.0), (-2.2, 9.0)] {
            assert!((boxplus(a, b) - boxplus_ref(a, b)).abs() < 1e-10, "{a} {b}");
        }
        assert_eq!(boxplus(0.0, 5.0), 0.0);
        assert!(boxplus(LLR_CLIP, LLR_CLIP) > LLR_CLIP - 1.0);
        assert!(boxplus(1e300, -1e300).is_finite());
    }

    #[test]
    fn check_node_rules() {
        let mut out = [0.0; 3];
        check_node_update(&[0.0, 2.0, 3.0], &mut out);
        assert_eq!(out[1], 0.0);
        assert_eq!(out[2], 0.0);
        assert!((out[0] - boxplus(2.0, 3.0)).abs() < 1e-12);
        let mut out2 = [0.0; 2];
        check_node_update(&[LLR_CLIP, LLR_CLIP], &mut out2);
        assert_eq!(out2, [LLR_CLIP, LLR_CLIP]);
        let x = [0.7, -1.4, 2.2, -0.3, 5.0];
        let mut o = [0.0; 5];
        check_node_update(&x, &mut o);
        for e in 0..5 {
            let want = x
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != e)
                .map(|(_, &v)| v)
                .reduce(boxplus_ref)
                .unwrap();
            assert!((o[e] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn equality_node_rules() {
        let mut out = [0.0; 3];
        let post = equality_node_update(&[1.0, 2.0, 3.0], &mut out);
        assert_eq!(out, [5.0, 4.0, 3.0]);
        assert_eq!(post, 6.0);
        let post = equality_node_update(&[0.0; 3], &mut out);
        assert_eq!((out, post), ([0.0; 3], 0.0));
        assert_eq!(decide(-1e-9), 1);
        assert_eq!(decide(0.0), 0);
    }

    #[test]
    fn entropy_rule() {
        assert!(!entropy_stop(None, 0.0, 1e-6));
        assert!(mean_entropy(&[LLR_CLIP, -LLR_CLIP]) < 1e-18);
        assert!(entropy_stop(Some(mean_entropy(&[LLR_CLIP])), mean_entropy(&[LLR_CLIP]), 1e-6));
        // posteriors growing towards certainty: stops after finitely many steps
        let mut prev = None;
        let mut stopped = None;
        for it in 0..100 {
            let h = mean_entropy(&[1.0 + it as f64, -2.0 - 1.5 * it as f64]);
            if entropy_stop(prev, h, 1e-6) {
                stopped = Some(it);
                break;
            }
            prev = Some(h);
        }
        assert!(stopped.is_some_and(|i| i > 1));
    }

    fn random_bits(n: usize, seed: u64) -> Vec<u8> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| r.gen_range(0..=1u8)).collect()
    }

    #[test]
    fn noiseless_frames_decode() {
        let spec = CodeSpec::new(2, 30, 0, 10, 2).with_seeds(1, 2);
        let code = CodeInstance::new(spec).unwrap();
        let dec = WindowDecoder::new(&code, DecoderConfig::new(6)).unwrap();
        for f in 0..5 {
            let msg = random_bits(spec.info_bits(), f);
            let cw = encode_message(&code, &msg).unwrap();
            let rx = transmit(&bpsk_modulate(&cw), &ChannelParams::awgn(1e-3).with_seeds(f, 0), 0);
            let frame = LlrFrame::new(&spec, llr(&rx, 1e-3)).unwrap();
            assert_eq!(dec.decode(&frame).unwrap().bits, msg);
            assert_eq!(hard_decision_decode(&frame), msg);
        }
    }

    #[test]
    fn punctured_multibranch_noiseless() {
        let spec = CodeSpec::new(3, 12, 5, 6, 2).with_seeds(3, 4);
        let code = CodeInstance::new(spec).unwrap();
        let msg = random_bits(spec.info_bits(), 9);
        let cw = encode_message(&code, &msg).unwrap();
        let frame = LlrFrame::new(&spec, llr(&transmit(&bpsk_modulate(&cw), &ChannelParams::awgn(0.01), 0), 0.01)).unwrap();
        // with the systematic part erased, the parity alone must recover the message
        let mut vals = frame.values().to_vec();
        for p in spec.layout().systematic_positions() {
            vals[p] = 0.0;
        }
        let erased = LlrFrame::new(&spec, vals).unwrap();
        let out = decode_frame(&erased, &code, DecoderConfig::new(4)).unwrap();
        assert_eq!(out, msg);
    }

    #[test]
    fn memoryless_is_exact_map() {
        // m = 0, N = 2: each bit sees its systematic and parity LLR only
        let spec = CodeSpec::new(2, 6, 0, 3, 0).with_seeds(5, 0);
        let code = CodeInstance::new(spec).unwrap();
        let vals: Vec<f64> = (0..spec.layout().total_bits).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let frame = LlrFrame::new(&spec, vals.clone()).unwrap();
        let out = WindowDecoder::new(&code, DecoderConfig::new(0)).unwrap().decode(&frame).unwrap();
        let layout = spec.layout();
        for t in 0..3 {
            for kk in 0..6 {
                let perm = code.interleavers()[0].inverse();
                let p = vals[layout.parity_offset(t) + perm.source(kk)];
                let want = vals[layout.systematic_offset(t) + kk] + p;
                assert!((out.posteriors[t * 6 + kk] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_frame_rejected() {
        let spec = CodeSpec::new(2, 4, 0, 2, 1);
        assert!(LlrFrame::new(&spec, vec![0.0; 3]).is_err());
        assert!(LlrFrame::new(&spec, vec![f64::NAN; spec.layout().total_bits]).is_err());
        assert!(DecoderConfig { max_iterations: 0, ..DecoderConfig::new(1) }.validate().is_err());
    }
}
