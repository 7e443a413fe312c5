//! Free and perturbed resolvent kernels of `-d²/dx² + Σ V_j δ(x - a_j)` and
//! the determinant form of the correlator of the associated fields.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, Lu, C64, ONE, ZERO};

/// Tolerance below which `1 + V/2m` is treated as zero.
const EXTENSION_TOL: f64 = 1e-12;

/// Complex mass `m` with `Re m > 0`; the spectral parameter is `E = -m²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParameter {
    m: C64,
}

impl SpectralParameter {
    pub fn new(m: C64) -> Result<Self> {
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(Error::InvalidInput(format!("mass {m} is not finite")));
        }
        if m.re <= 0.0 {
            return Err(Error::InvalidInput(format!("mass {m} must have Re m > 0")));
        }
        Ok(SpectralParameter { m })
    }

    pub fn real(m: f64) -> Result<Self> {
        Self::new(C64::new(m, 0.0))
    }

    pub fn m(&self) -> C64 {
        self.m
    }

    pub fn energy(&self) -> C64 {
        -self.m * self.m
    }

    /// `V / 2m`, the dimensionless strength that appears everywhere.
    pub fn reduced_strength(&self, strength: f64) -> C64 {
        C64::new(strength, 0.0) / (2.0 * self.m)
    }

    /// `e^{-m d}` for a non-negative distance `d`.
    pub fn decay(&self, distance: f64) -> C64 {
        (-self.m * distance).exp()
    }

    pub(crate) fn check_extension(&self, strength: f64, index: usize) -> Result<C64> {
        let s = self.reduced_strength(strength);
        if (ONE + s).norm() <= EXTENSION_TOL * s.norm().max(1.0) {
            return Err(Error::SingularExtension { index });
        }
        Ok(s)
    }
}

/// Sorted positions `a_1 < … < a_N` with non-zero real strengths.
///
/// Points given with zero strength are dropped at construction, so the
/// configuration may end up empty even though at least one point is required
/// on input.
#[derive(Debug, Clone, PartialEq)]
pub struct PointInteractionConfig {
    positions: Vec<f64>,
    strengths: Vec<f64>,
}

impl PointInteractionConfig {
    pub fn new(positions: Vec<f64>, strengths: Vec<f64>) -> Result<Self> {
        if positions.len() != strengths.len() {
            return Err(Error::InvalidInput(format!(
                "{} positions but {} strengths",
                positions.len(),
                strengths.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::InvalidInput("at least one point interaction is required".into()));
        }
        if positions.iter().chain(&strengths).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("positions and strengths must be finite".into()));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("positions must be strictly increasing".into()));
        }
        let (positions, strengths) = positions
            .into_iter()
            .zip(strengths)
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        Ok(PointInteractionConfig { positions, strengths })
    }

    /// Builds a configuration from `(a, V)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.positions.iter().copied().zip(self.strengths.iter().copied())
    }

    /// Smallest distance between neighbouring points, `None` for fewer than two.
    pub fn min_gap(&self) -> Option<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }

    /// Rejects configurations with `1 + V_j/2m = 0` for the given mass.
    pub fn check_extensions(&self, sp: &SpectralParameter) -> Result<Vec<C64>> {
        self.strengths
            .iter()
            .enumerate()
            .map(|(j, &v)| sp.check_extension(v, j))
            .collect()
    }
}

/// Self-adjoint extension parameters `B`, hermitian exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianExtensionMatrix {
    entries: CMatrix,
}

impl HermitianExtensionMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidInput("extension matrix must be square".into()));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in 0..n {
                if entries[(i, j)] != entries[(j, i)].conj() {
                    return Err(Error::InvalidInput(format!(
                        "extension matrix is not hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(HermitianExtensionMatrix { entries })
    }

    /// `B = diag(1/V_j)`, the local point-interaction case.
    pub fn from_strengths(strengths: &[f64]) -> Result<Self> {
        if strengths.iter().any(|&v| v == 0.0) {
            return Err(Error::SingularExtension {
                index: strengths.iter().position(|&v| v == 0.0).unwrap(),
            });
        }
        let n = strengths.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(1.0 / strengths[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// `G_E(x, y) = e^{-m|x-y|} / (2m)`.
pub fn free_green(sp: &SpectralParameter, x: f64, y: f64) -> C64 {
    sp.decay((x - y).abs()) / (2.0 * sp.m())
}

fn green_matrix(sp: &SpectralParameter, positions: &[f64]) -> CMatrix {
    let n = positions.len();
    CMatrix::from_fn(n, n, |i, j| free_green(sp, positions[i], positions[j]))
}

/// `U_ij = δ_ij / V_i + G_E(a_i, a_j)`.
pub fn u_matrix(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> Result<CMatrix> {
    let mut u = green_matrix(sp, cfg.positions());
    for (i, &v) in cfg.strengths().iter().enumerate() {
        if v == 0.0 {
            return Err(Error::SingularExtension { index: i });
        }
        u[(i, i)] += C64::new(1.0 / v, 0.0);
    }
    Ok(u)
}

/// Factorized Krein-type resolvent, reusable across many `(x, y)` pairs.
///
/// `G_{E,U}(x, y) = G_E(x, y) - Σ_ij G_E(x, a_i) U⁻¹_ij G_E(a_j, y)`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    sp: SpectralParameter,
    positions: Vec<f64>,
    lu: Option<Lu>,
}

impl Resolvent {
    pub fn new(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> Result<Self> {
        cfg.check_extensions(sp)?;
        let u = u_matrix(sp, cfg)?;
        Self::from_u(sp, cfg.positions().to_vec(), u)
    }

    pub fn with_extension(
        sp: &SpectralParameter,
        positions: &[f64],
        b: &HermitianExtensionMatrix,
    ) -> Result<Self> {
        if positions.len() != b.dim() {
            return Err(Error::InvalidInput(format!(
                "{} positions but extension matrix of size {}",
                positions.len(),
                b.dim()
            )));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("positions must be strictly increasing".into()));
        }
        let u = b.entries() + green_matrix(sp, positions);
        Self::from_u(sp, positions.to_vec(), u)
    }

    fn from_u(sp: &SpectralParameter, positions: Vec<f64>, u: CMatrix) -> Result<Self> {
        let lu = if positions.is_empty() {
            None
        } else {
            Some(Lu::new(&u).map_err(|_| Error::SingularU)?)
        };
        Ok(Resolvent { sp: *sp, positions, lu })
    }

    pub fn kernel(&self, x: f64, y: f64) -> C64 {
        let free = free_green(&self.sp, x, y);
        let Some(lu) = &self.lu else {
            return free;
        };
        let g_y = CVector::from_iterator(
            self.positions.len(),
            self.positions.iter().map(|&a| free_green(&self.sp, a, y)),
        );
        let z = lu.solve_vec(&g_y);
        let correction: C64 = self
            .positions
            .iter()
            .zip(z.iter())
            .map(|(&a, &zi)| free_green(&self.sp, x, a) * zi)
            .sum();
        free - correction
    }
}

pub fn resolvent_kernel(
    sp: &SpectralParameter,
    cfg: &PointInteractionConfig,
    x: f64,
    y: f64,
) -> Result<C64> {
    Ok(Resolvent::new(sp, cfg)?.kernel(x, y))
}

/// Resolvent of the general self-adjoint extension with `U = B + G`.
pub fn resolvent_kernel_general(
    sp: &SpectralParameter,
    positions: &[f64],
    b: &HermitianExtensionMatrix,
    x: f64,
    y: f64,
) -> Result<C64> {
    Ok(Resolvent::with_extension(sp, positions, b)?.kernel(x, y))
}

/// `D_ij = δ_ij + V_i G_E(a_i, a_j)`, diagonally similar to the symmetric
/// `δ_ij + √(V_i V_j) G_E(a_i, a_j)`.
pub fn weinstein_aronszajn_matrix(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> CMatrix {
    let mut d = green_matrix(sp, cfg.positions());
    for (i, &v) in cfg.strengths().iter().enumerate() {
        for j in 0..cfg.len() {
            d[(i, j)] *= v;
        }
        d[(i, i)] += ONE;
    }
    d
}

pub fn weinstein_aronszajn_det(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> Result<C64> {
    cfg.check_extensions(sp)?;
    linalg::det(&weinstein_aronszajn_matrix(sp, cfg)).map_err(|_| Error::SingularDet)
}

/// Principal `z^{-1/2}`, refusing values on (or numerically at) the cut.
pub(crate) fn inv_sqrt_principal(z: C64) -> Result<C64> {
    if z.norm() == 0.0 || !z.norm().is_finite() {
        return Err(Error::SingularDet);
    }
    if z.re < 0.0 && z.im.abs() <= 1e-12 * z.norm() {
        return Err(Error::BranchAmbiguity { re: z.re, im: z.im });
    }
    Ok(z.sqrt().inv())
}

/// `⟨O_{V_1}(a_1) … O_{V_N}(a_N)⟩ = det(δ_ij + √(V_i V_j) G_E(a_i, a_j))^{-1/2}`.
pub fn correlator_det(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> Result<C64> {
    inv_sqrt_principal(weinstein_aronszajn_det(sp, cfg)?)
}

/// One-point function `(1 + V/2m)^{-1/2}`.
pub fn one_point(sp: &SpectralParameter, strength: f64) -> Result<C64> {
    let s = sp.check_extension(strength, 0)?;
    inv_sqrt_principal(ONE + s)
}
