//! Small numeric helpers shared by the enumerator and bound code.

/// Binomial coefficient as a double, zero outside `0 <= k <= n`.
///
/// Exact for results below 2^53; relative error of a few ulps beyond.
pub fn binom(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 1..=k {
        acc = acc * (n - k + i) as f64 / i as f64;
    }
    // the running product is an integer at every step; undo rounding drift
    if acc < 9.0e15 {
        acc.round()
    } else {
        acc
    }
}

/// `ln C(n, k)`, `-inf` outside the support.
pub fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if n < 64 {
        return binom(n as i64, k as i64).ln();
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Rows `0..=n_max` of Pascal's triangle as doubles.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    rows: Vec<Vec<f64>>,
}

impl BinomialTable {
    pub fn new(n_max: usize) -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
        rows.push(vec![1.0]);
        for n in 1..=n_max {
            let prev = &rows[n - 1];
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = prev[k - 1] + prev[k];
            }
            rows.push(row);
        }
        BinomialTable { rows }
    }

    /// `C(n, k)`, zero for `k < 0` or `k > n`.
    #[inline]
    pub fn get(&self, n: usize, k: i64) -> f64 {
        if k < 0 || k as usize > n {
            0.0
        } else {
            self.rows[n][k as usize]
        }
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Dense univariate polynomials with nonnegative coefficients, index = degree.
pub mod poly {
    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn pow(a: &[f64], e: usize) -> Vec<f64> {
        let mut acc = vec![1.0];
        for _ in 0..e {
            acc = mul(&acc, a);
        }
        acc
    }

    pub fn add_into(acc: &mut Vec<f64>, a: &[f64]) {
        if acc.len() < a.len() {
            acc.resize(a.len(), 0.0);
        }
        for (x, &y) in acc.iter_mut().zip(a) {
            *x += y;
        }
    }

    /// `a + c`.
    pub fn add_scalar(a: &[f64], c: f64) -> Vec<f64> {
        let mut out = if a.is_empty() { vec![0.0] } else { a.to_vec() };
        out[0] += c;
        out
    }

    pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
        a.iter().map(|&x| x * s).collect()
    }

    /// `Y^shift * a`.
    pub fn shift(a: &[f64], shift: usize) -> Vec<f64> {
        let mut out = vec![0.0; shift];
        out.extend_from_slice(a);
        out
    }

    pub fn eval(a: &[f64], y: f64) -> f64 {
        a.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    /// Drops trailing zero coefficients.
    pub fn trim(mut a: Vec<f64>) -> Vec<f64> {
        while a.last() == Some(&0.0) {
            a.pop();
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binom(4, 2), 6.0);
        assert_eq!(binom(4, 5), 0.0);
        assert_eq!(binom(4, -1), 0.0);
        assert_eq!(binom(600, 1), 600.0);
        let t = BinomialTable::new(40);
        for n in 0..=40 {
            for k in 0..=n as i64 {
                assert_eq!(t.get(n, k), binom(n as i64, k));
            }
        }
        assert!((ln_binom(1000, 500) - binom(1000, 500).ln()).abs() < 1e-9);
    }

    #[test]
    fn entropy() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(1e-5) - 1.8e-4).abs() < 1e-5);
    }

    #[test]
    fn polynomial_ops() {
        let a = [1.0, 1.0];
        assert_eq!(poly::pow(&a, 3), vec![1.0, 3.0, 3.0, 1.0]);
        assert_eq!(poly::eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
        assert_eq!(poly::shift(&[1.0], 2), vec![0.0, 0.0, 1.0]);
        assert_eq!(poly::trim(vec![1.0, 0.0, 0.0]), vec![1.0]);
    }
}
