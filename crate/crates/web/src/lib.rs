//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs no bundler or generated type glue beyond `wasm-bindgen`'s.

use bmst::bounds::{lower_bound_ensemble, plan_code, upper_bound_truncated};
use bmst::channel::sigma_from_snr_db;
use bmst::simulator::snr_grid;
use bmst::wef::{compute_irwef, min_spectral_weight, IrwefOptions};
use bmst::CodeSpec;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps browser computations interactive.
const MAX_TRUNCATION: usize = 12;
const MAX_COEFFICIENTS: usize = 1 << 22;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn spec(n: usize, k: usize, k_p: usize, l: usize, m: usize) -> Result<CodeSpec, JsError> {
    CodeSpec::new(n, k, k_p, l, m).validate().map_err(js_err)
}

fn options(truncation: usize) -> IrwefOptions {
    let t = truncation.min(MAX_TRUNCATION);
    IrwefOptions {
        max_coefficients: MAX_COEFFICIENTS,
        ..IrwefOptions::capped(t, 3 * t)
    }
}

#[derive(Serialize)]
struct CurvePoint {
    snr_db: f64,
    lower: f64,
    upper: f64,
    r_star: usize,
}

/// Ensemble lower bound and truncated upper bound on an SNR grid.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn bound_curves(
    n: usize,
    k: usize,
    k_p: usize,
    l: usize,
    m: usize,
    truncation: usize,
    snr_lo: f64,
    snr_hi: f64,
    step: f64,
) -> Result<String, JsError> {
    let s = spec(n, k, k_p, l, m)?;
    let table = compute_irwef(&s, &options(truncation.min(s.info_bits()))).map_err(js_err)?;
    let points: Vec<CurvePoint> = snr_grid(snr_lo, snr_hi, step)
        .map_err(js_err)?
        .into_iter()
        .map(|db| {
            let sigma = sigma_from_snr_db(db);
            let up = upper_bound_truncated(&table, sigma);
            CurvePoint {
                snr_db: db,
                lower: lower_bound_ensemble(n, m, s.theta(), sigma),
                upper: up.value,
                r_star: up.r_star,
            }
        })
        .collect();
    serde_json::to_string(&points).map_err(js_err)
}

#[derive(Serialize)]
struct SpectrumOut {
    spectrum: Vec<f64>,
    min_weight: Option<usize>,
    rate: f64,
}

/// Minimum-weight spectrum `D_s` for `s <= T`.
#[wasm_bindgen]
pub fn spectrum(n: usize, k: usize, k_p: usize, l: usize, m: usize, truncation: usize) -> Result<String, JsError> {
    let s = spec(n, k, k_p, l, m)?;
    let table = compute_irwef(&s, &options(truncation.min(s.info_bits()))).map_err(js_err)?;
    let d = bmst::wef::spectrum(&table, s.info_bits());
    serde_json::to_string(&SpectrumOut {
        min_weight: min_spectral_weight(&d),
        spectrum: d,
        rate: s.terminated_rate().as_f64(),
    })
    .map_err(js_err)
}

/// The construction procedure for a target rate and BER.
#[wasm_bindgen]
pub fn plan(rate: f64, target_ber: f64, k: usize, l: usize) -> Result<String, JsError> {
    let p = plan_code(rate, target_ber, k, l, 0).map_err(js_err)?;
    serde_json::to_string(&p).map_err(js_err)
}
