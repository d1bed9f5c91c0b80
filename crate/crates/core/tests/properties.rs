use bmst::bounds::{lower_bound_ensemble, lower_bound_per_bit, upper_bound_truncated};
use bmst::channel::sigma_from_snr_db;
use bmst::encoder::encode_message;
use bmst::math::binom;
use bmst::oracle::{dmin_per_bit, enumerate_codebook};
use bmst::wef::{compute_irwef, spectrum, IrwefOptions};
use bmst::{CodeInstance, CodeSpec, Encoder};
use proptest::prelude::*;

fn small_spec() -> impl Strategy<Value = CodeSpec> {
    (2usize..=4, 1usize..=6, 1usize..=4, 0usize..=3, any::<u64>(), any::<u64>())
        .prop_flat_map(|(n, k, l, m, s1, s2)| {
            let kp = if n > 2 { 0..k } else { 0..1 };
            (Just((n, k, l, m, s1, s2)), kp)
        })
        .prop_map(|((n, k, l, m, s1, s2), kp)| CodeSpec::new(n, k, kp, l, m).with_seeds(s1, s2))
}

fn message(spec: CodeSpec) -> impl Strategy<Value = (CodeSpec, Vec<u8>, Vec<u8>)> {
    let kl = spec.info_bits();
    (
        Just(spec),
        prop::collection::vec(0u8..=1, kl),
        prop::collection::vec(0u8..=1, kl),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn encoder_is_linear((spec, a, b) in small_spec().prop_flat_map(message)) {
        let code = CodeInstance::new(spec).unwrap();
        let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let ca = encode_message(&code, &a).unwrap();
        let cb = encode_message(&code, &b).unwrap();
        let sum: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(sum, encode_message(&code, &ab).unwrap());
    }

    #[test]
    fn codeword_is_systematic_with_expected_length((spec, a, _b) in small_spec().prop_flat_map(message)) {
        let code = CodeInstance::new(spec).unwrap();
        let c = encode_message(&code, &a).unwrap();
        let rate = spec.terminated_rate();
        prop_assert_eq!(c.len() as u64, rate.coded_bits);
        let sys: Vec<u8> = spec.layout().systematic_positions().map(|p| c[p]).collect();
        prop_assert_eq!(sys, a);
    }

    #[test]
    fn termination_reaches_zero_state((spec, a, _b) in small_spec().prop_flat_map(message)) {
        let code = CodeInstance::new(spec).unwrap();
        let mut enc = Encoder::new(&code);
        for blk in a.chunks(spec.k()) {
            enc.encode_block(blk).unwrap();
        }
        let tail = enc.terminate();
        prop_assert_eq!(tail.len(), spec.m());
        prop_assert!(enc.is_zero_state());
    }

    #[test]
    fn enumerator_counts_are_binomial(spec in small_spec()) {
        let kl = spec.info_bits();
        let t = compute_irwef(&spec, &IrwefOptions::exact(kl)).unwrap();
        prop_assert_eq!(t.get(0, 0), 1.0);
        for i in 0..=kl {
            let total: f64 = t.row(i).iter().sum();
            let want = binom(kl as i64, i as i64);
            prop_assert!((total - want).abs() <= 1e-9 * want, "row {} sums to {} not {}", i, total, want);
        }
        // every nonzero input weight produces at least one check bit per lag in range
        let d = spectrum(&t, kl);
        prop_assert!(d.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn ensemble_lower_bound_decreases_with_snr(n in 2usize..6, m in 0usize..20, theta in 0.0f64..0.99, a in -5.0f64..10.0, step in 0.01f64..3.0) {
        let lo = lower_bound_ensemble(n, m, theta, sigma_from_snr_db(a + step));
        let hi = lower_bound_ensemble(n, m, theta, sigma_from_snr_db(a));
        prop_assert!(lo <= hi);
    }

    #[test]
    fn specific_bounds_are_ordered(spec in small_spec().prop_filter("codebook size", |s| s.info_bits() <= 10), db in -2.0f64..8.0) {
        let code = CodeInstance::new(spec).unwrap();
        let book = enumerate_codebook(&code).unwrap();
        let table = bmst::oracle::irwef_exhaustive(&code).unwrap();
        let sigma = sigma_from_snr_db(db);
        let lower = lower_bound_per_bit(&dmin_per_bit(&book), sigma);
        let upper = upper_bound_truncated(&table, sigma);
        prop_assert!(lower <= upper.value * (1.0 + 1e-12), "{} > {}", lower, upper.value);
    }
}
