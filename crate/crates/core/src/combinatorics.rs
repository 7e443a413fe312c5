use std::sync::OnceLock;

const LN_TABLE_LEN: usize = 1024;

/// `ln n!` from a cumulative table; `n` beyond the table falls back to Stirling.
pub fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_TABLE_LEN);
        let mut acc = 0.0_f64;
        t.push(0.0);
        for i in 1..LN_TABLE_LEN {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    });
    if n < LN_TABLE_LEN {
        table[n]
    } else {
        let x = n as f64;
        x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x * x * x)
    }
}

/// Exact `n!` for `n ≤ 34`.
pub fn factorial_u128(n: usize) -> u128 {
    assert!(n <= 34, "{n}! does not fit in u128");
    (1..=n as u128).product()
}

/// `(2n - 1)!!` with the convention `(-1)!! = 1`.
pub fn double_factorial_odd(n: usize) -> u128 {
    (1..=n as u128).map(|k| 2 * k - 1).product()
}
