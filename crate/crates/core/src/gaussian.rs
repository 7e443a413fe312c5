//! Finite-dimensional Gaussian integrals: the block-determinant and inverse
//! identities, and a Monte Carlo check of the moment formulas.
//!
//! Real forms use `exp(-½φᵀAφ - ½μᵀBμ - φᵀCμ)`; complex forms use
//! `exp(-φ†Aφ - μ†Bμ - φ†Cμ - μ†C†φ)` with the measure `2^M ∏ dRe φ dIm φ`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, CMatrix, CVector, Lu, C64};

/// Seed used when the caller does not supply one.
pub const DEFAULT_MC_SEED: u64 = 0x5eed_2024;
/// Batches for the batch-means standard error.
pub const MC_BATCHES: usize = 64;
/// Deviations beyond this many standard errors are flagged.
pub const MC_FLAG_SIGMA: f64 = 4.0;
/// Random instances with a larger condition number are redrawn.
pub const MAX_CONDITION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

/// Blocks `A` (M×M), `B` (N×N), coupling `C` (M×N) and source `J` (length M).
/// Real forms are stored with zero imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    field: Field,
    a: CMatrix,
    b: CMatrix,
    c: CMatrix,
    j: CVector,
}

fn is_hermitian(m: &CMatrix) -> bool {
    let scale = linalg::max_abs(m).max(f64::MIN_POSITIVE);
    linalg::max_abs(&(m - m.adjoint())) <= 1e-12 * scale
}

fn has_imaginary_part(m: &CMatrix) -> bool {
    m.iter().any(|z| z.im != 0.0)
}

impl QuadraticForm {
    pub fn new(field: Field, a: CMatrix, b: CMatrix, c: CMatrix, j: CVector) -> Result<Self> {
        let (m, n) = (a.nrows(), b.nrows());
        if m == 0 || a.ncols() != m || b.ncols() != n || c.shape() != (m, n) || j.len() != m {
            return Err(Error::InvalidInput(format!(
                "inconsistent block shapes A {:?}, B {:?}, C {:?}, J {}",
                a.shape(),
                b.shape(),
                c.shape(),
                j.len()
            )));
        }
        if field == Field::Real
            && (has_imaginary_part(&a) || has_imaginary_part(&b) || has_imaginary_part(&c) || j.iter().any(|z| z.im != 0.0))
        {
            return Err(Error::InvalidInput("real form with complex entries".into()));
        }
        if !is_hermitian(&a) || !is_hermitian(&b) {
            let what = if field == Field::Real { "symmetric" } else { "hermitian" };
            return Err(Error::InvalidInput(format!("A and B must be {what}")));
        }
        if Lu::new(&a).is_err() {
            return Err(Error::SingularInput("A".into()));
        }
        if n > 0 && Lu::new(&b).is_err() {
            return Err(Error::SingularInput("B".into()));
        }
        Ok(QuadraticForm { field, a, b, c, j })
    }

    /// Uncoupled form with only `A`.
    pub fn single(field: Field, a: CMatrix) -> Result<Self> {
        let m = a.nrows();
        Self::new(field, a, CMatrix::zeros(0, 0), CMatrix::zeros(m, 0), CVector::zeros(m))
    }

    pub fn with_source(mut self, j: CVector) -> Result<Self> {
        if j.len() != self.a.nrows() || (self.field == Field::Real && j.iter().any(|z| z.im != 0.0)) {
            return Err(Error::InvalidInput("source has the wrong length or field".into()));
        }
        self.j = j;
        Ok(self)
    }

    pub fn field(&self) -> Field {
        self.field
    }
    pub fn a(&self) -> &CMatrix {
        &self.a
    }
    pub fn b(&self) -> &CMatrix {
        &self.b
    }
    pub fn c(&self) -> &CMatrix {
        &self.c
    }
    pub fn j(&self) -> &CVector {
        &self.j
    }
    pub fn m(&self) -> usize {
        self.a.nrows()
    }
    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    /// `[[A, C], [C†, B]]`.
    pub fn joint(&self) -> CMatrix {
        let (m, n) = (self.m(), self.n());
        let mut k = CMatrix::zeros(m + n, m + n);
        k.view_mut((0, 0), (m, m)).copy_from(&self.a);
        k.view_mut((m, m), (n, n)).copy_from(&self.b);
        k.view_mut((0, m), (m, n)).copy_from(&self.c);
        k.view_mut((m, 0), (n, m)).copy_from(&self.c.adjoint());
        k
    }

    fn inv(m: &CMatrix, what: &str) -> Result<CMatrix> {
        Lu::new(m).map(|lu| lu.inverse()).map_err(|_| Error::SingularInput(what.into()))
    }

    /// `B - C†A⁻¹C`.
    pub fn schur_of_a(&self) -> Result<CMatrix> {
        let ainv = Self::inv(&self.a, "A")?;
        Ok(&self.b - self.c.adjoint() * ainv * &self.c)
    }

    /// `A - CB⁻¹C†`.
    pub fn schur_of_b(&self) -> Result<CMatrix> {
        if self.n() == 0 {
            return Ok(self.a.clone());
        }
        let binv = Self::inv(&self.b, "B")?;
        Ok(&self.a - &self.c * binv * self.c.adjoint())
    }
}

/// The three determinant forms of the coupled partition function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurDeterminants {
    pub joint: C64,
    pub via_a: C64,
    pub via_b: C64,
}

impl SchurDeterminants {
    pub fn residual(&self) -> f64 {
        (self.joint - self.via_a)
            .norm()
            .max((self.joint - self.via_b).norm())
            .max((self.via_a - self.via_b).norm())
    }
}

fn det(m: &CMatrix, what: &str) -> Result<C64> {
    linalg::det(m).map_err(|_| Error::SingularInput(what.into()))
}

pub fn schur_determinants(q: &QuadraticForm) -> Result<SchurDeterminants> {
    Ok(SchurDeterminants {
        joint: linalg::det_or_zero(&q.joint()),
        via_a: det(&q.a, "A")? * det(&q.schur_of_a()?, "B - C†A⁻¹C")?,
        via_b: det(&q.b, "B")? * det(&q.schur_of_b()?, "A - CB⁻¹C†")?,
    })
}

/// Largest absolute disagreement among the three determinant forms.
pub fn schur_partition_identity(q: &QuadraticForm) -> Result<f64> {
    Ok(schur_determinants(q)?.residual())
}

/// `(A - CB⁻¹C†)⁻¹` and `A⁻¹ + A⁻¹C(B - C†A⁻¹C)⁻¹C†A⁻¹` as full matrices.
pub fn krein_matrices(q: &QuadraticForm) -> Result<(CMatrix, CMatrix)> {
    let lhs = QuadraticForm::inv(&q.schur_of_b()?, "A - CB⁻¹C†")?;
    let ainv = QuadraticForm::inv(&q.a, "A")?;
    let rhs = if q.n() == 0 {
        ainv
    } else {
        let s = QuadraticForm::inv(&q.schur_of_a()?, "B - C†A⁻¹C")?;
        &ainv + &ainv * &q.c * s * q.c.adjoint() * &ainv
    };
    Ok((lhs, rhs))
}

/// Entrywise disagreement of the two sides relative to the largest of
/// `(A - CB⁻¹C†)⁻¹`, `A⁻¹` and the correction term; with `A` near-singular the
/// correction cancels most of `A⁻¹`, so the result alone is the wrong scale.
pub fn krein_residual(q: &QuadraticForm) -> Result<f64> {
    let (lhs, rhs) = krein_matrices(q)?;
    let ainv = QuadraticForm::inv(&q.a, "A")?;
    let scale = max_abs(&lhs).max(max_abs(&ainv)).max(max_abs(&(&rhs - &ainv)));
    Ok(max_abs(&(&lhs - &rhs)) / scale)
}

pub fn krein_identity(q: &QuadraticForm, i: usize, j: usize) -> Result<(C64, C64)> {
    if i >= q.m() || j >= q.m() {
        return Err(Error::InvalidInput(format!("index ({i}, {j}) outside {}", q.m())));
    }
    let (lhs, rhs) = krein_matrices(q)?;
    Ok((lhs[(i, j)], rhs[(i, j)]))
}

fn gaussian_matrix<R: Rng>(rng: &mut R, field: Field, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = if field == Field::Complex { StandardNormal.sample(rng) } else { 0.0 };
        C64::new(re, im)
    })
}

fn condition(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let ic = linalg::inverse_condition(m);
    if ic > 0.0 {
        1.0 / ic
    } else {
        f64::INFINITY
    }
}

/// Random instance whose `A`, `B`, joint matrix and both Schur complements all have
/// condition number at most [`MAX_CONDITION`]. With `definite` the joint matrix
/// is positive definite; otherwise `A` and `B` are indefinite in general.
pub fn random_form<R: Rng>(rng: &mut R, field: Field, m: usize, n: usize, definite: bool) -> QuadraticForm {
    loop {
        let k = if definite {
            let g = gaussian_matrix(rng, field, m + n, m + n);
            (&g * g.adjoint()) * C64::new(1.0 / (m + n) as f64, 0.0) + CMatrix::identity(m + n, m + n) * C64::new(0.2, 0.0)
        } else {
            let g = gaussian_matrix(rng, field, m + n, m + n);
            (&g + g.adjoint()) * C64::new(0.5, 0.0)
        };
        let a = k.view((0, 0), (m, m)).into_owned();
        let b = k.view((m, m), (n, n)).into_owned();
        let c = k.view((0, m), (m, n)).into_owned();
        let j = gaussian_matrix(rng, field, m, 1).column(0) * C64::new(0.3, 0.0);
        let Ok(q) = QuadraticForm::new(field, a, b, c, j) else { continue };
        let (Ok(sa), Ok(sb)) = (q.schur_of_a(), q.schur_of_b()) else { continue };
        if [&q.a, &q.b, &k, &sa, &sb].iter().all(|x| condition(x) <= MAX_CONDITION) {
            return q;
        }
    }
}

/// One Monte Carlo estimate next to its closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub name: String,
    pub estimate: f64,
    pub expected: f64,
    pub std_error: f64,
}

impl MomentCheck {
    /// Deviation in units of the standard error; a tiny floor covers exact zeros.
    pub fn z_score(&self) -> f64 {
        let floor = 1e-12 * self.expected.abs().max(1e-300);
        (self.estimate - self.expected).abs() / self.std_error.max(floor)
    }

    pub fn within(&self, sigma: f64) -> bool {
        self.z_score() <= sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub field: Field,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<MomentCheck>,
}

impl MonteCarloReport {
    pub fn flagged(&self, sigma: f64) -> Vec<&MomentCheck> {
        self.checks.iter().filter(|c| !c.within(sigma)).collect()
    }

    pub fn passed(&self) -> bool {
        self.flagged(MC_FLAG_SIGMA).is_empty()
    }

    pub fn max_z_score(&self) -> f64 {
        self.checks.iter().map(MomentCheck::z_score).fold(0.0, f64::max)
    }
}

/// `exp(-½ xᵀPx)` over `x ∈ R^d`, times `factor`, with linear source `s·x`.
struct RealGaussian {
    precision: DMatrix<f64>,
    factor: f64,
    source: Vec<f64>,
    /// isotropic proposal variance
    sigma2: f64,
}

impl RealGaussian {
    fn new(k: &CMatrix, field: Field, j: &CVector, what: &str) -> Result<Self> {
        let (precision, factor, source) = match field {
            Field::Real => (
                DMatrix::from_fn(k.nrows(), k.ncols(), |i, l| k[(i, l)].re),
                1.0,
                j.iter().map(|z| z.re).collect::<Vec<_>>(),
            ),
            Field::Complex => {
                // φ†Kφ = xᵀ[[Re K, -Im K], [Im K, Re K]]x for x = (Re φ, Im φ)
                let n = k.nrows();
                let p = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
                    let z = k[(r % n, c % n)];
                    2.0 * match (r < n, c < n) {
                        (true, true) | (false, false) => z.re,
                        (true, false) => -z.im,
                        (false, true) => z.im,
                    }
                });
                let mut s: Vec<f64> = j.iter().map(|z| 2.0 * z.re).collect();
                s.extend(j.iter().map(|z| 2.0 * z.im));
                (p, 2f64.powi(n as i32), s)
            }
        };
        let lmin = precision.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if !(lmin > 0.0) {
            return Err(Error::NotPositiveDefinite(what.into()));
        }
        Ok(RealGaussian { precision, factor, source, sigma2: 1.0 / lmin })
    }

    fn dim(&self) -> usize {
        self.precision.nrows()
    }

    /// Importance weight of the isotropic sample `x`; unbiased for the integral.
    fn weight(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut quad = 0.0;
        let mut norm2 = 0.0;
        for r in 0..d {
            let mut row = 0.0;
            for c in 0..d {
                row += self.precision[(r, c)] * x[c];
            }
            quad += x[r] * row;
            norm2 += x[r] * x[r];
        }
        let log_q = -0.5 * norm2 / self.sigma2 - 0.5 * d as f64 * (2.0 * std::f64::consts::PI * self.sigma2).ln();
        self.factor * (-0.5 * quad - log_q).exp()
    }

    fn source_exp(&self, x: &[f64]) -> f64 {
        self.source.iter().zip(x).map(|(s, v)| s * v).sum::<f64>().exp()
    }
}

/// Weighted sums accumulated per batch; the named quantities are ratios of sums.
#[derive(Clone)]
struct Batch {
    sums: Vec<f64>,
}

/// Draws `n` samples of the real Gaussian proposal and applies `accumulate`.
fn run_batches(
    g: &RealGaussian,
    samples: usize,
    seed: u64,
    stream_base: u64,
    width: usize,
    accumulate: &(dyn Fn(&[f64], f64, &mut [f64]) + Sync),
) -> Vec<Batch> {
    let per = samples.div_ceil(MC_BATCHES);
    (0..MC_BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base + b as u64);
            let sd = g.sigma2.sqrt();
            let mut x = vec![0.0; g.dim()];
            let mut sums = vec![0.0; width];
            for _ in 0..per {
                for v in x.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = sd * z;
                }
                let w = g.weight(&x);
                accumulate(&x, w, &mut sums);
            }
            for s in sums.iter_mut() {
                *s /= per as f64;
            }
            Batch { sums }
        })
        .collect()
}

/// Mean and batch-means standard error of `f(batch)`.
fn batch_stat(batches: &[Batch], f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let vals: Vec<f64> = batches.iter().map(|b| f(&b.sums)).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check(name: String, (estimate, std_error): (f64, f64), expected: f64) -> MomentCheck {
    MomentCheck { name, estimate, expected, std_error }
}

/// Index pairs `i ≤ j` of an `m`-vector.
fn pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect()
}

/// `φ_i φ_j` (real) or `φ_i φ̄_j` (complex) from the real coordinates `x`.
fn product(field: Field, x: &[f64], dim: usize, i: usize, j: usize) -> C64 {
    match field {
        Field::Real => C64::new(x[i] * x[j], 0.0),
        Field::Complex => C64::new(x[i], x[dim + i]) * C64::new(x[j], -x[dim + j]),
    }
}

#[allow(clippy::too_many_arguments)]
fn push_complex(out: &mut Vec<MomentCheck>, field: Field, diagonal: bool, name: &str, batches: &[Batch], re: usize, im: usize, denom: usize, expected: C64) {
    out.push(check(format!("{name}.re"), batch_stat(batches, |s| s[re] / s[denom]), expected.re));
    // φ_i φ̄_i is real, so only off-diagonal pairs carry an imaginary part
    if field == Field::Complex && !diagonal {
        out.push(check(format!("{name}.im"), batch_stat(batches, |s| s[im] / s[denom]), expected.im));
    }
}

/// Monte Carlo estimates of the partition functions, the source generating
/// function and the second moments, each against its closed form.
///
/// Samples come from an isotropic Gaussian proposal whose variance is the
/// inverse smallest eigenvalue of the (real) precision, so the importance
/// weights are bounded. Requires `A` and the joint matrix positive definite
/// and `M + N ≤ 4`.
pub fn moment_check_mc(q: &QuadraticForm, samples: usize, seed: u64) -> Result<MonteCarloReport> {
    let (m, n) = (q.m(), q.n());
    if m + n > 4 {
        return Err(Error::InvalidInput(format!("Monte Carlo check limited to M + N <= 4, got {}", m + n)));
    }
    if samples < 2 * MC_BATCHES {
        return Err(Error::InvalidInput(format!("need at least {} samples", 2 * MC_BATCHES)));
    }
    let field = q.field;
    let ainv = QuadraticForm::inv(&q.a, "A")?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut checks = Vec::new();

    // uncoupled block with source
    let g = RealGaussian::new(&q.a, field, &q.j, "A")?;
    let ps = pairs(m);
    // layout: [w, w e^{Jφ}, (w φφ re, im, w φφ e^{Jφ} re, im) per pair]
    let width = 2 + 4 * ps.len();
    let acc = |x: &[f64], w: f64, s: &mut [f64]| {
        let e = g.source_exp(x);
        s[0] += w;
        s[1] += w * e;
        for (p, &(i, j)) in ps.iter().enumerate() {
            let v = product(field, x, m, i, j);
            s[2 + 4 * p] += w * v.re;
            s[3 + 4 * p] += w * v.im;
            s[4 + 4 * p] += w * e * v.re;
            s[5 + 4 * p] += w * e * v.im;
        }
    };
    let batches = run_batches(&g, samples, seed, 0, width, &acc);
    let det_a = det(&q.a, "A")?;
    let z_a = match field {
        Field::Real => two_pi.powf(m as f64 / 2.0) / det_a.re.sqrt(),
        Field::Complex => two_pi.powi(m as i32) / det_a.re,
    };
    checks.push(check("Z_A".into(), batch_stat(&batches, |s| s[0]), z_a));
    let aj = &ainv * &q.j;
    let jaj = (q.j.adjoint() * &aj)[(0, 0)].re;
    let gen = match field {
        Field::Real => (0.5 * jaj).exp(),
        Field::Complex => jaj.exp(),
    };
    checks.push(check("<exp(source)>".into(), batch_stat(&batches, |s| s[1] / s[0]), gen));
    for (p, &(i, j)) in ps.iter().enumerate() {
        push_complex(&mut checks, field, i == j, &format!("<phi{i} phi{j}>"), &batches, 2 + 4 * p, 3 + 4 * p, 0, ainv[(i, j)]);
        let with_source = (ainv[(i, j)] + aj[i] * aj[j].conj()) * gen;
        push_complex(&mut checks, field, i == j, &format!("<phi{i} phi{j} exp(source)>"), &batches, 4 + 4 * p, 5 + 4 * p, 0, with_source);
    }

    if n > 0 {
        let k = q.joint();
        let g = RealGaussian::new(&k, field, &CVector::zeros(m + n), "joint matrix")?;
        let width = 1 + 2 * ps.len();
        let acc = |x: &[f64], w: f64, s: &mut [f64]| {
            s[0] += w;
            for (p, &(i, j)) in ps.iter().enumerate() {
                let v = product(field, x, m + n, i, j);
                s[1 + 2 * p] += w * v.re;
                s[2 + 2 * p] += w * v.im;
            }
        };
        let batches = run_batches(&g, samples, seed, MC_BATCHES as u64, width, &acc);
        let d = schur_determinants(q)?.via_a;
        let z = match field {
            Field::Real => two_pi.powf((m + n) as f64 / 2.0) / d.re.sqrt(),
            Field::Complex => two_pi.powi((m + n) as i32) / d.re,
        };
        checks.push(check("Z_ABC".into(), batch_stat(&batches, |s| s[0]), z));
        let (_, rhs) = krein_matrices(q)?;
        for (p, &(i, j)) in ps.iter().enumerate() {
            push_complex(&mut checks, field, i == j, &format!("<phi{i} phi{j}>_coupled"), &batches, 1 + 2 * p, 2 + 2 * p, 0, rhs[(i, j)]);
        }
    }

    Ok(MonteCarloReport { field, seed, samples, checks })
}
