use bmst::encoder::build_interleavers;
use bmst::CodeSpec;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Across many seeds, the source of every output position of a drawn
/// interleaver is uniform over the `K` inputs.
#[test]
fn interleavers_are_uniform_over_seeds() {
    let k = 8;
    let seeds = 10_000u64;
    let mut counts = vec![vec![0u64; k]; k];
    for seed in 0..seeds {
        let spec = CodeSpec::new(2, k, 0, 1, 0).with_seeds(seed, 0);
        let pi = &build_interleavers(&spec)[0];
        for (out, src) in pi.perm().enumerate() {
            counts[out][src] += 1;
        }
    }
    let expected = seeds as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .flatten()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // rows and columns both sum to the seed count
    let dof = ((k - 1) * (k - 1)) as f64;
    let critical = ChiSquared::new(dof).unwrap().inverse_cdf(0.99);
    assert!(stat < critical, "chi-square {stat} exceeds {critical}");
}

#[test]
fn interleaver_tables_differ_between_branches() {
    let spec = CodeSpec::new(4, 32, 0, 1, 3).with_seeds(99, 0);
    let tables = build_interleavers(&spec);
    assert_eq!(tables.len(), 3 * 4);
    for (i, a) in tables.iter().enumerate() {
        for b in &tables[i + 1..] {
            assert_ne!(a, b);
        }
    }
}
