//! Rational-arithmetic versions of the closed forms.
//!
//! Transcendental inputs are taken as given rationals: the reduced strengths
//! `s_j = V_j/2m` and the neighbour decays `w_j = e^{-m(a_{j+1}-a_j)}`. Every
//! identity below then holds exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn int(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `(2n-1)!!`.
pub fn double_factorial_odd(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(2 * k - 1))
}

fn pow(x: &Rational, n: usize) -> Rational {
    (0..n).fold(Rational::one(), |acc, _| acc * x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalParams {
    pub lambda: Rational,
    pub mu: Rational,
    pub nu: Rational,
}

/// Closed pairing sum for `F_{k,l}`.
pub fn form_factor_exact(k: usize, l: usize, p: &RationalParams) -> Rational {
    if (k + l) % 2 == 1 {
        return Rational::zero();
    }
    let r = k % 2;
    let (hk, hl) = (k / 2, l / 2);
    let half = rational(1, 2);
    let hl_ = &p.lambda * &half;
    let hn_ = &p.nu * &half;
    let one_mu = Rational::one() + &p.mu;
    let num = factorial(k) * factorial(l);
    let mut sum = Rational::zero();
    for j in 0..=hk.min(hl) {
        let den = factorial(2 * j + r) * factorial(hk - j) * factorial(hl - j);
        sum += Rational::new(num.clone(), den)
            * pow(&hl_, hk - j)
            * pow(&one_mu, 2 * j + r)
            * pow(&hn_, hl - j);
    }
    sum
}

/// `F_{k,l}` from the row `F_{0,·}` and the recursion in the first index.
pub fn form_factor_recursive_exact(k: usize, l: usize, p: &RationalParams) -> Result<Rational> {
    let one_mu = Rational::one() + &p.mu;
    if one_mu.is_zero() {
        return Err(Error::DegenerateMu);
    }
    let ratio = &p.lambda / &one_mu;
    let delta = &one_mu - &p.lambda * &p.nu / &one_mu;
    let width = k + l + 1;
    let mut row = vec![Rational::zero(); width];
    row[0] = Rational::one();
    let mut c = 0;
    while c + 2 < width {
        row[c + 2] = &row[c] * &p.nu * int(c + 1);
        c += 2;
    }
    for r in 0..k {
        let len = width - r - 1;
        row = (0..len)
            .map(|c| {
                let mut v = &ratio * &row[c + 1];
                if c > 0 {
                    v += &delta * &row[c - 1] * int(c);
                }
                v
            })
            .collect();
    }
    Ok(row[l].clone())
}

/// `⟨0|(a + a†)^{2n}|0⟩`, propagated exactly in the unnormalized basis
/// `|k) = (a†)^k|0⟩` where `a†|k) = |k+1)` and `a|k) = k|k-1)`.
pub fn wick_count(n: usize) -> BigInt {
    let steps = 2 * n;
    let mut v = vec![BigInt::zero(); steps + 2];
    v[0] = BigInt::one();
    for _ in 0..steps {
        let mut next = vec![BigInt::zero(); steps + 2];
        for (k, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if k + 1 < next.len() {
                next[k + 1] += c;
            }
            if k > 0 {
                next[k - 1] += c * BigInt::from(k);
            }
        }
        v = next;
    }
    v[0].clone()
}

/// Partial sum `Σ_{n<terms} (-s/2)^n ⟨0|(a+a†)^{2n}|0⟩ / n!` of the one-point function.
pub fn one_point_series_exact(s: &Rational, terms: usize) -> Rational {
    let x = -s * rational(1, 2);
    (0..terms)
        .map(|n| pow(&x, n) * Rational::new(wick_count(n), factorial(n)))
        .sum()
}

/// Commutator `[a, a†]` of the unnormalized ladder matrices at dimension `dim`.
pub fn ladder_commutator_exact(dim: usize) -> Vec<Vec<BigInt>> {
    // (a)_{k-1,k} = k, (a†)_{k+1,k} = 1
    let a = |i: usize, j: usize| if j == i + 1 { BigInt::from(j) } else { BigInt::zero() };
    let ad = |i: usize, j: usize| if i == j + 1 { BigInt::one() } else { BigInt::zero() };
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    (0..dim).fold(BigInt::zero(), |acc, k| acc + a(i, k) * ad(k, j) - ad(i, k) * a(k, j))
                })
                .collect()
        })
        .collect()
}

/// Determinant by rational Gaussian elimination.
pub fn det_exact(mut m: Vec<Vec<Rational>>) -> Rational {
    let n = m.len();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let pivot = m[c][c].clone();
        det *= &pivot;
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &pivot;
            for k in c..n {
                let sub = &f * &m[c][k];
                m[r][k] -= sub;
            }
        }
    }
    det
}

fn check_strengths(s: &[Rational], w: &[Rational]) -> Result<()> {
    if s.is_empty() || w.len() + 1 != s.len() {
        return Err(Error::InvalidInput(format!("{} strengths need {} decays, got {}", s.len(), s.len().max(1) - 1, w.len())));
    }
    if let Some(j) = s.iter().position(|x| (Rational::one() + x).is_zero()) {
        return Err(Error::SingularExtension { index: j });
    }
    if w.iter().any(|x| !x.is_positive()) {
        return Err(Error::InvalidInput("decays must be positive".into()));
    }
    Ok(())
}

/// Collapsed block-tridiagonal tau determinant.
pub fn tau_collapsed_exact(s: &[Rational], w: &[Rational]) -> Result<Rational> {
    check_strengths(s, w)?;
    let n = s.len();
    let mut t = vec![vec![Rational::zero(); 2 * n]; 2 * n];
    for (i, row) in t.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    let one = Rational::one();
    for j in 0..n - 1 {
        let q = &w[j] / (&one + &s[j + 1]);
        t[2 * j][2 * j + 2] = -q.clone();
        t[2 * j][2 * j + 3] = &q * &s[j + 1];
        let r = &w[j] / (&one + &s[j]);
        t[2 * j + 3][2 * j] = &r * &s[j];
        t[2 * j + 3][2 * j + 1] = -r;
    }
    Ok(det_exact(t))
}

/// `det(δ_ij + V_i G(a_i, a_j)) / ∏(1 + s_j)`, where `V_i G(a_i,a_j) = s_i ∏ w` over the gaps between.
pub fn weinstein_aronszajn_ratio_exact(s: &[Rational], w: &[Rational]) -> Result<Rational> {
    check_strengths(s, w)?;
    let n = s.len();
    let d: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (lo, hi) = (i.min(j), i.max(j));
                    let decay: Rational = w[lo..hi].iter().fold(Rational::one(), |acc, x| acc * x);
                    let delta = if i == j { Rational::one() } else { Rational::zero() };
                    delta + &s[i] * decay
                })
                .collect()
        })
        .collect();
    let norm: Rational = s.iter().fold(Rational::one(), |acc, x| acc * (Rational::one() + x));
    Ok(det_exact(d) / norm)
}

/// `1 - s₁/(1+s₁) · s₂/(1+s₂) · w²`.
pub fn tau_two_point_exact(s1: &Rational, s2: &Rational, w: &Rational) -> Result<Rational> {
    check_strengths(&[s1.clone(), s2.clone()], &[w.clone()])?;
    let one = Rational::one();
    Ok(&one - s1 / (&one + s1) * (s2 / (&one + s2)) * w * w)
}
