//! Boundary-value subspaces of local solutions and the tau function they define.
//!
//! Each isolating interval `(x^L_j, x^R_j)` contributes four coordinates
//! `ψ_{R,+}, ψ_{L,-}, ψ_{R,-}, ψ_{L,+}` with `ψ_{·,±} = ψ ± ψ'/m`, stored
//! consecutively at `4j..4j+4`.

use crate::error::{Error, Result};
use crate::greenfn::{correlator_det, one_point, PointInteractionConfig, SpectralParameter};
use crate::linalg::{self, CMatrix, CVector, Lu, C64, ONE};

/// Offset of each coordinate inside an interval's block of four.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCoord {
    RightPlus = 0,
    LeftMinus = 1,
    RightMinus = 2,
    LeftPlus = 3,
}

fn slot(interval: usize, c: BoundaryCoord) -> usize {
    4 * interval + c as usize
}

/// Disjoint ordered open intervals, one around each interaction point.
#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Localization {
    pub fn new(intervals: &[(f64, f64)]) -> Result<Self> {
        if intervals.iter().any(|&(l, r)| !(l.is_finite() && r.is_finite() && l < r)) {
            return Err(Error::InvalidInput("each interval needs finite x_L < x_R".into()));
        }
        if intervals.windows(2).any(|w| w[0].1 >= w[1].0) {
            return Err(Error::InvalidInput("intervals must be disjoint and ordered".into()));
        }
        Ok(Localization {
            left: intervals.iter().map(|i| i.0).collect(),
            right: intervals.iter().map(|i| i.1).collect(),
        })
    }

    /// `a_j ∓ g/3` with `g` the smallest gap (`g = 1` for a single point).
    pub fn default_for(cfg: &PointInteractionConfig) -> Self {
        let h = cfg.min_gap().unwrap_or(1.0) / 3.0;
        Localization {
            left: cfg.positions().iter().map(|a| a - h).collect(),
            right: cfg.positions().iter().map(|a| a + h).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.left.iter().copied().zip(self.right.iter().copied())
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// Whether every point lies strictly inside its own interval.
    pub fn admits(&self, cfg: &PointInteractionConfig) -> bool {
        cfg.len() == self.len()
            && cfg
                .positions()
                .iter()
                .zip(self.intervals())
                .all(|(&a, (l, r))| l < a && a < r)
    }

    fn check(&self, cfg: &PointInteractionConfig) -> Result<()> {
        if self.admits(cfg) {
            Ok(())
        } else {
            Err(Error::InvalidInput("localization does not isolate the configuration".into()))
        }
    }

    /// Chain coefficient `w_i = e^{-m(x^L_{i+1} - x^R_i)}` between intervals `i` and `i+1`.
    pub fn chain_coefficient(&self, sp: &SpectralParameter, i: usize) -> C64 {
        sp.decay(self.left[i + 1] - self.right[i])
    }
}

/// A point of `C^{4N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVector {
    coords: CVector,
}

impl BoundaryVector {
    pub fn new(coords: CVector) -> Result<Self> {
        if coords.is_empty() || coords.len() % 4 != 0 {
            return Err(Error::InvalidInput(format!(
                "boundary vector length {} is not a positive multiple of 4",
                coords.len()
            )));
        }
        Ok(BoundaryVector { coords })
    }

    pub fn intervals(&self) -> usize {
        self.coords.len() / 4
    }

    pub fn get(&self, interval: usize, c: BoundaryCoord) -> C64 {
        self.coords[slot(interval, c)]
    }

    pub fn coords(&self) -> &CVector {
        &self.coords
    }
}

/// Full column rank with threshold `σ_min > n·ε·σ_max`, `n` the ambient dimension.
fn numerically_full_rank(m: &CMatrix) -> bool {
    let sv = linalg::singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) => hi > 0.0 && lo > m.nrows() as f64 * f64::EPSILON * hi,
        _ => true,
    }
}

/// Column span of an `n × d` matrix with linearly independent columns; `n = 4N` for boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: CMatrix,
}

impl Subspace {
    pub fn new(basis: CMatrix) -> Result<Self> {
        let rows = basis.nrows();
        if rows == 0 || basis.ncols() == 0 || basis.ncols() > rows {
            return Err(Error::InvalidInput(format!(
                "basis of shape {}x{} does not span a subspace",
                rows,
                basis.ncols()
            )));
        }
        if !numerically_full_rank(&basis) {
            return Err(Error::InvalidInput("basis vectors are linearly dependent".into()));
        }
        Ok(Subspace { basis })
    }

    pub fn from_vectors(vectors: &[BoundaryVector]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::InvalidInput("empty basis".into()));
        };
        let rows = first.coords.len();
        if vectors.iter().any(|v| v.coords.len() != rows) {
            return Err(Error::InvalidInput("basis vectors differ in length".into()));
        }
        Self::new(CMatrix::from_fn(rows, vectors.len(), |i, j| vectors[j].coords[i]))
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn vector(&self, i: usize) -> BoundaryVector {
        BoundaryVector { coords: self.basis.column(i).into_owned() }
    }

    /// The same subspace described by the basis `B·G` for invertible `G`.
    pub fn rebased(&self, g: &CMatrix) -> Result<Self> {
        Self::new(&self.basis * g)
    }
}

/// `N_j(V)`: maps `(ψ_{R,+}, ψ_{L,-})` of a local interior solution to `(ψ_{R,-}, ψ_{L,+})`.
fn n_block(sp: &SpectralParameter, xl: f64, a: f64, xr: f64, strength: f64, index: usize) -> Result<CMatrix> {
    let s = sp.check_extension(strength, index)?;
    let k = -s / (ONE + s);
    let off = sp.decay(xr - xl) / (ONE + s);
    let alpha = k * sp.decay(2.0 * (xr - a));
    let delta = k * sp.decay(2.0 * (a - xl));
    Ok(CMatrix::from_row_slice(2, 2, &[alpha, off, off, delta]))
}

/// `N_j(V)` for interval `j`; `V = 0` gives the free (Friedrichs) block.
pub fn n_matrix(
    j: usize,
    strength: f64,
    sp: &SpectralParameter,
    loc: &Localization,
    cfg: &PointInteractionConfig,
) -> Result<CMatrix> {
    loc.check(cfg)?;
    n_block(sp, loc.left[j], cfg.positions()[j], loc.right[j], strength, j)
}

/// Boundary data of solutions on the exterior of the localization.
pub fn ext_subspace(sp: &SpectralParameter, loc: &Localization) -> Result<Subspace> {
    let n = loc.len();
    if n == 0 {
        return Err(Error::InvalidInput("localization has no intervals".into()));
    }
    let mut b = CMatrix::zeros(4 * n, 2 * n);
    for i in 0..n {
        // solutions on the gap right of interval i
        b[(slot(i, BoundaryCoord::RightMinus), 2 * i)] = ONE;
        if i + 1 < n {
            b[(slot(i + 1, BoundaryCoord::LeftMinus), 2 * i)] = loc.chain_coefficient(sp, i);
        }
        // solutions on the gap left of interval i
        b[(slot(i, BoundaryCoord::LeftPlus), 2 * i + 1)] = ONE;
        if i > 0 {
            b[(slot(i - 1, BoundaryCoord::RightPlus), 2 * i + 1)] = loc.chain_coefficient(sp, i - 1);
        }
    }
    Subspace::new(b)
}

fn graph_subspace(blocks: &[CMatrix]) -> Result<Subspace> {
    let n = blocks.len();
    let mut b = CMatrix::zeros(4 * n, 2 * n);
    for (j, nj) in blocks.iter().enumerate() {
        b[(slot(j, BoundaryCoord::RightPlus), 2 * j)] = ONE;
        b[(slot(j, BoundaryCoord::LeftMinus), 2 * j + 1)] = ONE;
        for c in 0..2 {
            b[(slot(j, BoundaryCoord::RightMinus), 2 * j + c)] = nj[(0, c)];
            b[(slot(j, BoundaryCoord::LeftPlus), 2 * j + c)] = nj[(1, c)];
        }
    }
    Subspace::new(b)
}

/// Boundary data of interior solutions obeying the jump conditions of `cfg`.
pub fn int_subspace(
    sp: &SpectralParameter,
    loc: &Localization,
    cfg: &PointInteractionConfig,
) -> Result<Subspace> {
    loc.check(cfg)?;
    if cfg.is_empty() {
        return Err(Error::InvalidInput("configuration has no points".into()));
    }
    let blocks = (0..cfg.len())
        .map(|j| n_block(sp, loc.left[j], cfg.positions()[j], loc.right[j], cfg.strengths()[j], j))
        .collect::<Result<Vec<_>>>()?;
    graph_subspace(&blocks)
}

/// Interior subspace without interactions.
pub fn friedrichs_subspace(sp: &SpectralParameter, loc: &Localization) -> Result<Subspace> {
    if loc.is_empty() {
        return Err(Error::InvalidInput("localization has no intervals".into()));
    }
    let blocks = loc
        .intervals()
        .enumerate()
        .map(|(j, (l, r))| n_block(sp, l, 0.5 * (l + r), r, 0.0, j))
        .collect::<Result<Vec<_>>>()?;
    graph_subspace(&blocks)
}

/// Span of the `ψ_{R,-}, ψ_{L,+}` coordinates: projecting along it keeps `(ψ_{R,+}, ψ_{L,-})`.
pub fn reference_subspace(n_intervals: usize) -> Result<Subspace> {
    let mut b = CMatrix::zeros(4 * n_intervals, 2 * n_intervals);
    for j in 0..n_intervals {
        b[(slot(j, BoundaryCoord::RightMinus), 2 * j)] = ONE;
        b[(slot(j, BoundaryCoord::LeftPlus), 2 * j + 1)] = ONE;
    }
    Subspace::new(b)
}

fn stacked(u: &Subspace, v: &Subspace) -> CMatrix {
    let mut s = CMatrix::zeros(u.ambient_dim(), u.dim() + v.dim());
    s.columns_mut(0, u.dim()).copy_from(u.basis());
    s.columns_mut(u.dim(), v.dim()).copy_from(v.basis());
    s
}

/// `σ_min / σ_max` of the stacked bases; zero means the sum is not direct.
pub fn transversality_margin(u: &Subspace, v: &Subspace) -> f64 {
    let sv = linalg::singular_values(&stacked(u, v));
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn check_transverse(u: &Subspace, v: &Subspace, pair: &str) -> Result<()> {
    let ok = u.ambient_dim() == v.ambient_dim()
        && u.dim() + v.dim() == u.ambient_dim()
        && numerically_full_rank(&stacked(u, v));
    if ok {
        Ok(())
    } else {
        Err(Error::NotTransverse { pair: pair.to_string() })
    }
}

/// Determinant of the projection of `w1` onto `w2` along `along`, in the stored bases.
fn projection_det(w1: &Subspace, w2: &Subspace, along: &Subspace, pair: &str) -> Result<C64> {
    check_transverse(w2, along, pair)?;
    let lu = Lu::new(&stacked(w2, along)).map_err(|_| Error::NotTransverse { pair: pair.into() })?;
    let coeffs = lu.solve(w1.basis());
    Ok(linalg::det_or_zero(&coeffs.rows(0, w2.dim()).into_owned()))
}

/// Ratio of the projections of `w1` onto `w2` along `w3` and along `w4`.
pub fn cross_ratio_tau(w1: &Subspace, w2: &Subspace, w3: &Subspace, w4: &Subspace) -> Result<C64> {
    let n = w1.ambient_dim();
    if [w2, w3, w4].iter().any(|w| w.ambient_dim() != n) || [w1, w2, w3, w4].iter().any(|w| 2 * w.dim() != n) {
        return Err(Error::InvalidInput("cross ratio needs four half-dimensional subspaces".into()));
    }
    let num = projection_det(w1, w2, w3, "(W2, W3)")?;
    let den = projection_det(w1, w2, w4, "(W2, W4)")?;
    if den.norm() == 0.0 {
        return Err(Error::NotTransverse { pair: "(W1, W4)".into() });
    }
    Ok(num / den)
}

/// Block-tridiagonal `M` of the linear system relating a boundary vector to its
/// projection; `strengths` of zero give the free `M₀`.
fn m_matrix_with(sp: &SpectralParameter, loc: &Localization, positions: &[f64], strengths: &[f64]) -> Result<CMatrix> {
    let n = loc.len();
    let blocks = (0..n)
        .map(|j| n_block(sp, loc.left[j], positions[j], loc.right[j], strengths[j], j))
        .collect::<Result<Vec<_>>>()?;
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n.saturating_sub(1) {
        let w = loc.chain_coefficient(sp, i);
        let (next, cur) = (&blocks[i + 1], &blocks[i]);
        // row 2i: -w (γ, δ) of interval i+1; row 2i+3: -w (α, β) of interval i
        m[(2 * i, 2 * i + 2)] = -w * next[(1, 0)];
        m[(2 * i, 2 * i + 3)] = -w * next[(1, 1)];
        m[(2 * i + 3, 2 * i)] = -w * cur[(0, 0)];
        m[(2 * i + 3, 2 * i + 1)] = -w * cur[(0, 1)];
    }
    Ok(m)
}

pub fn m_matrix(sp: &SpectralParameter, loc: &Localization, cfg: &PointInteractionConfig) -> Result<CMatrix> {
    loc.check(cfg)?;
    m_matrix_with(sp, loc, cfg.positions(), cfg.strengths())
}

/// `M₀`: the matrix of the interaction-free configuration.
pub fn m0_matrix(sp: &SpectralParameter, loc: &Localization) -> CMatrix {
    let mid: Vec<f64> = loc.intervals().map(|(l, r)| 0.5 * (l + r)).collect();
    m_matrix_with(sp, loc, &mid, &vec![0.0; loc.len()]).expect("free blocks are never singular")
}

fn det_one_plus(m: &CMatrix) -> C64 {
    let n = m.nrows();
    linalg::det_or_zero(&(CMatrix::identity(n, n) + m))
}

/// `det(1 + M₀)`, identically one.
pub fn free_normalization(sp: &SpectralParameter, loc: &Localization) -> C64 {
    det_one_plus(&m0_matrix(sp, loc))
}

/// `det(1 + M_{a,V}) / det(1 + M₀)` for a localization that isolates `cfg`.
pub fn tau_via_m(sp: &SpectralParameter, loc: &Localization, cfg: &PointInteractionConfig) -> Result<C64> {
    loc.check(cfg)?;
    if cfg.is_empty() {
        return Ok(ONE);
    }
    let ext = ext_subspace(sp, loc)?;
    check_transverse(&ext, &int_subspace(sp, loc, cfg)?, "(W_ext, W_int)")?;
    check_transverse(&ext, &friedrichs_subspace(sp, loc)?, "(W_ext, W_F)")?;
    let num = det_one_plus(&m_matrix(sp, loc, cfg)?);
    let den = free_normalization(sp, loc);
    if den.norm() == 0.0 {
        return Err(Error::SingularDet);
    }
    Ok(num / den)
}

/// The tau function as a cross ratio of interior, free, exterior and reference subspaces.
pub fn tau_via_cross_ratio(
    sp: &SpectralParameter,
    loc: &Localization,
    cfg: &PointInteractionConfig,
) -> Result<C64> {
    loc.check(cfg)?;
    if cfg.is_empty() {
        return Ok(ONE);
    }
    cross_ratio_tau(
        &int_subspace(sp, loc, cfg)?,
        &friedrichs_subspace(sp, loc)?,
        &ext_subspace(sp, loc)?,
        &reference_subspace(loc.len())?,
    )
}

/// The localization shrunk onto the points: blocks built from `e^{-m(a_{j+1}-a_j)}` and `V/2m`.
pub fn collapsed_matrix(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> Result<CMatrix> {
    let s = cfg.check_extensions(sp)?;
    let n = cfg.len();
    let a = cfg.positions();
    let mut t = CMatrix::identity(2 * n, 2 * n);
    for j in 0..n.saturating_sub(1) {
        let w = sp.decay(a[j + 1] - a[j]);
        let q = w / (ONE + s[j + 1]);
        t[(2 * j, 2 * j + 2)] = -q;
        t[(2 * j, 2 * j + 3)] = q * s[j + 1];
        let r = w / (ONE + s[j]);
        t[(2 * j + 3, 2 * j)] = r * s[j];
        t[(2 * j + 3, 2 * j + 1)] = -r;
    }
    Ok(t)
}

pub fn tau_collapsed(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> Result<C64> {
    Ok(linalg::det_or_zero(&collapsed_matrix(sp, cfg)?))
}

/// `(tau, [⟨∏O⟩ / ∏⟨O⟩]^{-2})`; the two agree.
pub fn fin_check(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> Result<(C64, C64)> {
    let tau = tau_collapsed(sp, cfg)?;
    let mut ratio = correlator_det(sp, cfg)?;
    for &v in cfg.strengths() {
        ratio /= one_point(sp, v)?;
    }
    Ok((tau, (ratio * ratio).inv()))
}

/// The collapsed two-point closed form `1 - s₁/(1+s₁)·s₂/(1+s₂)·e^{-2m(a₂-a₁)}`.
pub fn tau_two_point(sp: &SpectralParameter, v1: f64, v2: f64, distance: f64) -> Result<C64> {
    let s1 = sp.check_extension(v1, 0)?;
    let s2 = sp.check_extension(v2, 1)?;
    Ok(ONE - s1 / (ONE + s1) * s2 / (ONE + s2) * sp.decay(2.0 * distance))
}
