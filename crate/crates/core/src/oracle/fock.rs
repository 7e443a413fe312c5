//! Truncated Fock-space calculus for a single oscillator mode.
//!
//! Basis `|k⟩ = (a†)^k / √(k!) |0⟩`, `k < D`. The normal-ordered operators
//! `P̂_λ = exp(½λ(a†)²)` (lower triangular), `Q̂_μ` (diagonal) and
//! `R̂_ν = exp(½ν a²)` (upper triangular) truncate exactly, and so does their
//! product `P̂ Q̂ R̂`: every retained entry of the truncated matrix equals the
//! corresponding entry of the infinite one. Truncation error only enters when
//! several such matrices are multiplied through intermediate states.

use crate::bogolyubov::BogolyubovParams;
use crate::error::{Error, Result};
use crate::greenfn::SpectralParameter;
use crate::linalg::{CMatrix, C64, ONE, ZERO};

/// Smallest dimension accepted by [`build_operator`].
pub const MIN_OPERATOR_DIM: usize = 8;

#[derive(Debug, Clone)]
pub struct FockTruncation {
    dim: usize,
    create: CMatrix,
    annihilate: CMatrix,
}

impl FockTruncation {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("Fock dimension must be positive".into()));
        }
        let create = CMatrix::from_fn(dim, dim, |i, j| {
            if i == j + 1 {
                C64::new((i as f64).sqrt(), 0.0)
            } else {
                ZERO
            }
        });
        let annihilate = create.transpose();
        Ok(FockTruncation { dim, create, annihilate })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Matrix of `a†`.
    pub fn create(&self) -> &CMatrix {
        &self.create
    }

    /// Matrix of `a`.
    pub fn annihilate(&self) -> &CMatrix {
        &self.annihilate
    }

    /// Largest deviation of `[a, a†]` from the identity on the retained `(D-1)` block.
    pub fn commutator_defect(&self) -> f64 {
        let comm = &self.annihilate * &self.create - &self.create * &self.annihilate;
        let n = self.dim - 1;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((comm[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// `φ̂(0) = (a + a†) / √(2m)`.
    pub fn phi(&self, sp: &SpectralParameter) -> CMatrix {
        (&self.annihilate + &self.create) / (2.0 * sp.m()).sqrt()
    }

    /// `π̂(0) = i √(m/2) (a† - a)`.
    pub fn pi(&self, sp: &SpectralParameter) -> CMatrix {
        (&self.create - &self.annihilate) * (C64::i() * (sp.m() / 2.0).sqrt())
    }

    /// Diagonal of `e^{-Ĥx}` with `Ĥ = m a†a`.
    pub fn evolution_diagonal(&self, sp: &SpectralParameter, x: f64) -> Vec<C64> {
        (0..self.dim).map(|k| (-sp.m() * (k as f64 * x)).exp()).collect()
    }
}

/// `X ↦ X (a†)²` without forming the shift matrix.
fn right_mul_create_sq(x: &CMatrix) -> CMatrix {
    let d = x.ncols();
    CMatrix::from_fn(x.nrows(), d, |i, j| {
        if j + 2 < d {
            x[(i, j + 2)] * (((j + 1) * (j + 2)) as f64).sqrt()
        } else {
            ZERO
        }
    })
}

/// `X ↦ X a²`.
fn right_mul_annihilate_sq(x: &CMatrix) -> CMatrix {
    let d = x.ncols();
    CMatrix::from_fn(x.nrows(), d, |i, j| {
        if j >= 2 {
            x[(i, j - 2)] * (((j - 1) * j) as f64).sqrt()
        } else {
            ZERO
        }
    })
}

/// `exp(c·S)` for the nilpotent shift `S = (a†)²` or `a²`, summed until exhausted.
fn nilpotent_exp(dim: usize, c: C64, step: fn(&CMatrix) -> CMatrix) -> CMatrix {
    let mut sum = CMatrix::identity(dim, dim);
    if c == ZERO {
        return sum;
    }
    let mut term = sum.clone();
    for n in 1..=dim / 2 {
        term = step(&term) * (c / n as f64);
        sum += &term;
    }
    sum
}

/// `P̂_λ = exp(½λ(a†)²)`.
pub fn squeeze_create(lambda: C64, t: &FockTruncation) -> CMatrix {
    nilpotent_exp(t.dim, lambda / 2.0, right_mul_create_sq)
}

/// `R̂_ν = exp(½ν a²)`.
pub fn squeeze_annihilate(nu: C64, t: &FockTruncation) -> CMatrix {
    nilpotent_exp(t.dim, nu / 2.0, right_mul_annihilate_sq)
}

/// Diagonal of `Q̂_μ = Σ_n μⁿ/n! (a†)ⁿ aⁿ`. On `|k⟩` the sum is `Σ_n C(k, n) μⁿ = (1+μ)^k`;
/// the binomial form cancels catastrophically for `Re μ < 0`, so the power is used.
pub fn number_scaling_diagonal(mu: C64, t: &FockTruncation) -> Vec<C64> {
    let base = ONE + mu;
    let mut q = Vec::with_capacity(t.dim);
    let mut acc = ONE;
    for _ in 0..t.dim {
        q.push(acc);
        acc *= base;
    }
    q
}

/// Matrix of `Ô_{λ,μ,ν} = P̂_λ Q̂_μ R̂_ν` on the truncated space.
///
/// Fails with `TruncationNotConverged` when `|λ| ≥ 1` or `|ν| ≥ 1`: the pair
/// series behind `P̂|0⟩` or `⟨0|R̂` then has term ratio ≥ 1 and no finite
/// truncation represents the operator.
pub fn build_operator(p: &BogolyubovParams, t: &FockTruncation) -> Result<CMatrix> {
    if t.dim < MIN_OPERATOR_DIM {
        return Err(Error::InvalidInput(format!(
            "Fock dimension {} below minimum {MIN_OPERATOR_DIM}",
            t.dim
        )));
    }
    let ratio = p.lambda.norm().max(p.nu.norm());
    if ratio >= 1.0 {
        return Err(Error::TruncationNotConverged { dim: t.dim, change: ratio });
    }
    let mut pq = squeeze_create(p.lambda, t);
    for (k, q) in number_scaling_diagonal(p.mu, t).into_iter().enumerate() {
        pq.column_mut(k).scale_mut_complex(q);
    }
    Ok(pq * squeeze_annihilate(p.nu, t))
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, s: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, s: C64) {
        for z in self.iter_mut() {
            *z *= s;
        }
    }
}

/// `⟨0| X₁ e^{-Ĥ(x₂-x₁)} X₂ … X_n |0⟩` for operators sorted by position.
pub fn ordered_vev(ops: &[(f64, &CMatrix)], sp: &SpectralParameter) -> C64 {
    let Some((_, first)) = ops.first() else {
        return ONE;
    };
    let dim = first.nrows();
    let mut row: Vec<C64> = first.row(0).iter().copied().collect();
    for w in 0..ops.len() - 1 {
        let gap = ops[w + 1].0 - ops[w].0;
        for (k, r) in row.iter_mut().enumerate() {
            *r *= (-sp.m() * (k as f64 * gap)).exp();
        }
        let next = ops[w + 1].1;
        let mut out = vec![ZERO; dim];
        for (k, &r) in row.iter().enumerate() {
            if r == ZERO {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += r * next[(k, j)];
            }
        }
        row = out;
    }
    row[0]
}

/// Vacuum expectation of ordered normalized Bogolyubov operators.
pub fn vev_product(
    ops: &[(BogolyubovParams, f64)],
    sp: &SpectralParameter,
    t: &FockTruncation,
) -> Result<C64> {
    if ops.windows(2).any(|w| w[1].1 < w[0].1) {
        return Err(Error::InvalidInput("operator positions must be sorted".into()));
    }
    let mats = ops
        .iter()
        .map(|(p, x)| Ok((*x, build_operator(p, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(f64, &CMatrix)> = mats.iter().map(|(x, m)| (*x, m)).collect();
    Ok(ordered_vev(&refs, sp))
}
