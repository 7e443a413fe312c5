//! Normal-ordered Bogolyubov operators
//! `Ô_{λ,μ,ν} = :exp{½λ(a†)² + μ a†a + ½ν a²}:` and their induced
//! `SL(2)` maps, form factors, imaginary-time evolution, fusion and
//! multipoint correlators.
//!
//! Conventions:
//! * `⟨0|Ô|0⟩ = 1` for every operator built from [`BogolyubovParams`].
//! * `Ô (a, a†)ᵀ Ô⁻¹ = Λ (a, a†)ᵀ` with `Λ = [[α, β], [γ, δ]]`.
//! * [`fuse`]`(p1, p2)` represents the operator product `Ô₁ Ô₂`, whose induced
//!   map is `Λ₂ Λ₁`.

use std::ops::Mul;

use num_complex::Complex;
use num_traits::{One, Zero};
use twofloat::TwoFloat;

use crate::combinatorics::{factorial_u128, ln_factorial};
use crate::error::{Error, Result};
use crate::greenfn::{PointInteractionConfig, SpectralParameter};
use crate::linalg::{rel_diff, CMatrix, C64, ONE, ZERO};
use crate::oracle::fock::{self, FockTruncation};

type Wide = Complex<TwoFloat>;

const DEGENERACY_TOL: f64 = 1e-12;

/// Largest index accepted by [`form_factor`] and [`matrix_element`].
pub const MAX_FORM_FACTOR_INDEX: usize = 170;

/// Below this index the combinatorial coefficients are computed as exact integers.
const EXACT_COEFFICIENT_INDEX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogolyubovParams {
    pub lambda: C64,
    pub mu: C64,
    pub nu: C64,
}

impl BogolyubovParams {
    pub fn new(lambda: C64, mu: C64, nu: C64) -> Result<Self> {
        if (ONE + mu).norm() <= DEGENERACY_TOL {
            return Err(Error::DegenerateMu);
        }
        Ok(BogolyubovParams { lambda, mu, nu })
    }

    pub fn real(lambda: f64, mu: f64, nu: f64) -> Result<Self> {
        Self::new(C64::new(lambda, 0.0), C64::new(mu, 0.0), C64::new(nu, 0.0))
    }

    pub fn identity() -> Self {
        BogolyubovParams { lambda: ZERO, mu: ZERO, nu: ZERO }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            (self.lambda - other.lambda).norm(),
            (self.mu - other.mu).norm(),
            (self.nu - other.nu).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Linear map `(a, a†) ↦ (αa + βa†, γa + δa†)` with unit determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl2Element {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl Sl2Element {
    pub fn new(alpha: C64, beta: C64, gamma: C64, delta: C64) -> Result<Self> {
        let s = Sl2Element { alpha, beta, gamma, delta };
        let scale = (alpha * delta).norm().max((beta * gamma).norm()).max(1.0);
        if (s.determinant() - ONE).norm() > 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "alpha*delta - beta*gamma = {} is not 1",
                s.determinant()
            )));
        }
        Ok(s)
    }

    pub fn identity() -> Self {
        Sl2Element { alpha: ONE, beta: ZERO, gamma: ZERO, delta: ONE }
    }

    pub fn determinant(&self) -> C64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            (self.alpha - other.alpha).norm(),
            (self.beta - other.beta).norm(),
            (self.gamma - other.gamma).norm(),
            (self.delta - other.delta).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl Mul for Sl2Element {
    type Output = Sl2Element;

    fn mul(self, r: Sl2Element) -> Sl2Element {
        Sl2Element {
            alpha: self.alpha * r.alpha + self.beta * r.gamma,
            beta: self.alpha * r.beta + self.beta * r.delta,
            gamma: self.gamma * r.alpha + self.delta * r.gamma,
            delta: self.gamma * r.beta + self.delta * r.delta,
        }
    }
}

pub fn sl2_from_params(p: &BogolyubovParams) -> Result<Sl2Element> {
    let one_mu = ONE + p.mu;
    if one_mu.norm() <= DEGENERACY_TOL {
        return Err(Error::DegenerateMu);
    }
    Ok(Sl2Element {
        alpha: one_mu.inv(),
        beta: -p.lambda / one_mu,
        gamma: p.nu / one_mu,
        delta: one_mu - p.lambda * p.nu / one_mu,
    })
}

pub fn params_from_sl2(s: &Sl2Element) -> Result<BogolyubovParams> {
    if s.alpha.norm() <= DEGENERACY_TOL {
        return Err(Error::AlphaZero);
    }
    Ok(BogolyubovParams {
        lambda: -s.beta / s.alpha,
        mu: s.alpha.inv() - ONE,
        nu: s.gamma / s.alpha,
    })
}

/// Parameters of the field `exp(-½Vφ²)`: `λ = μ = ν = -(V/2m)/(1 + V/2m)`.
pub fn delta_params(strength: f64, sp: &SpectralParameter) -> Result<BogolyubovParams> {
    let s = sp.check_extension(strength, 0)?;
    let x = -s / (ONE + s);
    Ok(BogolyubovParams { lambda: x, mu: x, nu: x })
}

/// `(ln|z|^n, (z/|z|)^n)`; zero exponent gives `(0, 1)` even for `z = 0`.
fn log_pow(z: C64, n: usize) -> (f64, C64) {
    if n == 0 {
        return (0.0, ONE);
    }
    let r = z.norm();
    if r == 0.0 {
        return (f64::NEG_INFINITY, ONE);
    }
    (n as f64 * r.ln(), (z / r).powi(n as i32))
}

fn check_index(k: usize, l: usize) -> Result<()> {
    if k > MAX_FORM_FACTOR_INDEX || l > MAX_FORM_FACTOR_INDEX {
        return Err(Error::Overflow { k, l, max: MAX_FORM_FACTOR_INDEX });
    }
    Ok(())
}

/// Closed-form pairing sum, rescaled by `exp(-ln_shift)`.
fn pairing_sum(k: usize, l: usize, p: &BogolyubovParams, ln_shift: f64) -> C64 {
    if (k + l) % 2 == 1 {
        return ZERO;
    }
    let parity = k % 2;
    let (hk, hl) = (k / 2, l / 2);
    let half_lambda = p.lambda / 2.0;
    let half_nu = p.nu / 2.0;
    let one_mu = ONE + p.mu;
    let exact = k.max(l) <= EXACT_COEFFICIENT_INDEX;
    let numerator = if exact { factorial_u128(k) * factorial_u128(l) } else { 0 };

    let mut sum = ZERO;
    for j in 0..=hk.min(hl) {
        let ln_coef = if exact {
            let denom =
                factorial_u128(2 * j + parity) * factorial_u128(hk - j) * factorial_u128(hl - j);
            ((numerator / denom) as f64).ln()
        } else {
            ln_factorial(k) + ln_factorial(l)
                - ln_factorial(2 * j + parity)
                - ln_factorial(hk - j)
                - ln_factorial(hl - j)
        };
        let (la, pa) = log_pow(half_lambda, hk - j);
        let (lm, pm) = log_pow(one_mu, 2 * j + parity);
        let (ln, pn) = log_pow(half_nu, hl - j);
        let ln_mag = ln_coef + la + lm + ln - ln_shift;
        if ln_mag == f64::NEG_INFINITY {
            continue;
        }
        sum += pa * pm * pn * ln_mag.exp();
    }
    sum
}

/// `F_{k,l} = √(k! l!) ⟨k|Ô_{λ,μ,ν}|l⟩` from the closed pairing formulas.
pub fn form_factor(k: usize, l: usize, p: &BogolyubovParams) -> Result<C64> {
    check_index(k, l)?;
    let f = pairing_sum(k, l, p, 0.0);
    if !(f.re.is_finite() && f.im.is_finite()) {
        return Err(Error::Overflow { k, l, max: MAX_FORM_FACTOR_INDEX });
    }
    Ok(f)
}

/// `⟨k|Ô_{λ,μ,ν}|l⟩ = F_{k,l} / √(k! l!)`, evaluated with the factorials in log space.
pub fn matrix_element(k: usize, l: usize, p: &BogolyubovParams) -> Result<C64> {
    check_index(k, l)?;
    let shift = 0.5 * (ln_factorial(k) + ln_factorial(l));
    let f = pairing_sum(k, l, p, shift);
    if !(f.re.is_finite() && f.im.is_finite()) {
        return Err(Error::Overflow { k, l, max: MAX_FORM_FACTOR_INDEX });
    }
    Ok(f)
}

/// `F_{k,l}` obtained from the boundary values `F_{2k,0}`, `F_{0,2l}` and the
/// recursion `F_{k+1,l} = λ/(1+μ) F_{k,l+1} + l (1+μ - λν/(1+μ)) F_{k,l-1}`.
pub fn form_factor_recursive(k: usize, l: usize, p: &BogolyubovParams) -> Result<C64> {
    check_index(k, l)?;
    let one_mu = ONE + p.mu;
    if one_mu.norm() <= DEGENERACY_TOL {
        return Err(Error::DegenerateMu);
    }
    // the recursion cancels for complex phases; carry it in double-double
    let wide = |z: C64| Wide::new(TwoFloat::from(z.re), TwoFloat::from(z.im));
    let (lambda, nu, one_mu) = (wide(p.lambda), wide(p.nu), wide(one_mu));
    let ratio = lambda / one_mu;
    let delta = one_mu - lambda * nu / one_mu;
    let int = |n: usize| TwoFloat::from(n as f64);

    let width = k + l + 1;
    // F_{0,2n} = (2n)!/n! (ν/2)^n, built incrementally: F_{0,c+2} = (c+1) ν F_{0,c}.
    let mut row = vec![Wide::zero(); width];
    row[0] = Wide::one();
    let mut c = 0;
    while c + 2 < width {
        row[c + 2] = row[c] * nu * int(c + 1);
        c += 2;
    }
    for r in 0..k {
        let len = width - r - 1;
        let mut next = vec![Wide::zero(); len];
        for (c, slot) in next.iter_mut().enumerate() {
            let mut v = ratio * row[c + 1];
            if c > 0 {
                v = v + delta * row[c - 1] * int(c);
            }
            *slot = v;
        }
        row = next;
    }
    let f = C64::new(row[l].re.into(), row[l].im.into());
    if !(f.re.is_finite() && f.im.is_finite()) {
        return Err(Error::Overflow { k, l, max: MAX_FORM_FACTOR_INDEX });
    }
    Ok(f)
}

/// Imaginary-time translation `e^{-Hx} Ô e^{Hx}`: `λ → λe^{-2mx}`, `ν → νe^{2mx}`.
pub fn evolve(p: &BogolyubovParams, x: f64, sp: &SpectralParameter) -> BogolyubovParams {
    let shift = 2.0 * sp.m() * x;
    let scale = |z: C64, e: C64| if z == ZERO { ZERO } else { z * e.exp() };
    BogolyubovParams { lambda: scale(p.lambda, -shift), mu: p.mu, nu: scale(p.nu, shift) }
}

/// `Ô₁ Ô₂ = c₁₂ Ô₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fusion {
    pub params: BogolyubovParams,
    pub c12: C64,
}

/// Fuses the operator product `Ô_{p1} Ô_{p2}` into `c₁₂ Ô_{p3}`.
///
/// `μ₃` is taken as `(μ₁ + μ₂ + μ₁μ₂ + ν₁λ₂) / (1 - ν₁λ₂)`, which is what the
/// composition `Λ₃ = Λ₂Λ₁` of the induced maps requires.
pub fn fuse(p1: &BogolyubovParams, p2: &BogolyubovParams) -> Result<Fusion> {
    let t = p1.nu * p2.lambda;
    let denom = ONE - t;
    if denom.norm() <= DEGENERACY_TOL {
        return Err(Error::FusionSingular { pair: 0 });
    }
    let (one_mu1, one_mu2) = (ONE + p1.mu, ONE + p2.mu);
    let params = BogolyubovParams {
        lambda: p1.lambda + p2.lambda * one_mu1 * one_mu1 / denom,
        mu: (p1.mu + p2.mu + p1.mu * p2.mu + t) / denom,
        nu: p2.nu + p1.nu * one_mu2 * one_mu2 / denom,
    };
    Ok(Fusion { params, c12: denom.sqrt().inv() })
}

fn checked_inv_sqrt(z: C64, pair: usize) -> Result<C64> {
    if z.norm() <= DEGENERACY_TOL {
        return Err(Error::FusionSingular { pair });
    }
    Ok(z.sqrt().inv())
}

/// `⟨Ô₁(a₁) Ô₂(a₂)⟩ = [1 - ν₁λ₂ e^{-2m(a₂-a₁)}]^{-1/2}` for `a₂ ≥ a₁`.
pub fn two_point(
    p1: &BogolyubovParams,
    p2: &BogolyubovParams,
    a1: f64,
    a2: f64,
    sp: &SpectralParameter,
) -> Result<C64> {
    if a2 < a1 {
        return Err(Error::InvalidInput("two_point requires a2 >= a1".into()));
    }
    let r = p1.nu * p2.lambda * (-2.0 * sp.m() * (a2 - a1)).exp();
    checked_inv_sqrt(ONE - r, 0)
}

/// A normalized Bogolyubov field placed at `position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldInsertion {
    pub params: BogolyubovParams,
    pub position: f64,
}

impl FieldInsertion {
    pub fn new(params: BogolyubovParams, position: f64) -> Self {
        FieldInsertion { params, position }
    }
}

/// Vacuum expectation of an ordered product of fields, by successive fusion.
///
/// The running fused operator is kept anchored at the latest insertion point,
/// so only `ν e^{-2mΔ}` factors (never `e^{+2mΔ}`) enter the constants.
pub fn n_point_correlator(insertions: &[FieldInsertion], sp: &SpectralParameter) -> Result<C64> {
    if insertions.windows(2).any(|w| w[1].position < w[0].position) {
        return Err(Error::InvalidInput("insertion positions must be non-decreasing".into()));
    }
    let Some(first) = insertions.first() else {
        return Ok(ONE);
    };
    let mut current = first.params;
    let mut anchor = first.position;
    let mut value = ONE;
    for (pair, next) in insertions.iter().skip(1).enumerate() {
        let shifted = evolve(&current, anchor - next.position, sp);
        let fusion = fuse(&shifted, &next.params).map_err(|_| Error::FusionSingular { pair })?;
        value *= fusion.c12;
        current = fusion.params;
        anchor = next.position;
    }
    Ok(value)
}

/// Delta-interaction fields `O_{V_j}(a_j)` as normalized insertions.
pub fn delta_insertions(
    sp: &SpectralParameter,
    cfg: &PointInteractionConfig,
) -> Result<Vec<FieldInsertion>> {
    cfg.pairs()
        .enumerate()
        .map(|(j, (a, v))| {
            delta_params(v, sp)
                .map(|p| FieldInsertion::new(p, a))
                .map_err(|e| match e {
                    Error::SingularExtension { .. } => Error::SingularExtension { index: j },
                    other => other,
                })
        })
        .collect()
}

/// `⟨O_{V_1}(a_1) … O_{V_N}(a_N)⟩` including the one-point normalizations
/// `(1 + V_j/2m)^{-1/2}`, evaluated by fusion.
pub fn delta_correlator_fused(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> Result<C64> {
    let insertions = delta_insertions(sp, cfg)?;
    let normalization: C64 = cfg
        .strengths()
        .iter()
        .map(|&v| crate::greenfn::one_point(sp, v))
        .product::<Result<C64>>()?;
    Ok(normalization * n_point_correlator(&insertions, sp)?)
}

/// Partial sum of the intermediate-state expansion
/// `Σ_k ⟨0|Ô₁|k⟩⟨k|Ô₂|0⟩ e^{-km(a₂-a₁)}` over the first `terms` non-vanishing (even) `k`.
pub fn two_point_series(
    p1: &BogolyubovParams,
    p2: &BogolyubovParams,
    a1: f64,
    a2: f64,
    sp: &SpectralParameter,
    terms: usize,
) -> Result<C64> {
    if a2 < a1 {
        return Err(Error::InvalidInput("two_point_series requires a2 >= a1".into()));
    }
    let mut sum = ZERO;
    for n in 0..terms {
        let k = 2 * n;
        let decay = (-sp.m() * (k as f64 * (a2 - a1))).exp();
        sum += matrix_element(0, k, p1)? * matrix_element(k, 0, p2)? * decay;
    }
    Ok(sum)
}

/// Partial sum `Σ_{n<terms} (-V/4m)^n (2n-1)!! / n!` of the one-point function.
pub fn one_point_series(strength: f64, sp: &SpectralParameter, terms: usize) -> C64 {
    let x = -C64::new(strength, 0.0) / (4.0 * sp.m());
    let mut term = ONE;
    let mut sum = ZERO;
    for n in 0..terms {
        sum += term;
        term *= x * ((2 * n + 1) as f64 / (n + 1) as f64);
    }
    sum
}

/// Default Fock-space dimension for the truncated-oracle routes.
pub const DEFAULT_FOCK_DIM: usize = 64;

/// Convergence tolerance of the dimension-doubling check.
pub const FOCK_CONVERGENCE_TOL: f64 = 1e-10;

/// Resolvent as `⟨∏O_{V_j}(a_j) φ(x)φ(y)⟩ / ⟨∏O_{V_j}(a_j)⟩`, both correlators
/// evaluated as truncated Fock-space matrix products.
#[derive(Debug, Clone)]
pub struct FieldResolvent {
    sp: SpectralParameter,
    fields: Vec<(f64, CMatrix)>,
    phi: CMatrix,
    denominator: C64,
}

impl FieldResolvent {
    pub fn new(sp: &SpectralParameter, cfg: &PointInteractionConfig, dim: usize) -> Result<Self> {
        let trunc = FockTruncation::new(dim)?;
        let fields = delta_insertions(sp, cfg)?
            .into_iter()
            .map(|ins| Ok((ins.position, fock::build_operator(&ins.params, &trunc)?)))
            .collect::<Result<Vec<_>>>()?;
        let denominator = fock::ordered_vev(
            &fields.iter().map(|(x, o)| (*x, o)).collect::<Vec<_>>(),
            sp,
        );
        if denominator.norm() == 0.0 || !denominator.norm().is_finite() {
            return Err(Error::SingularDet);
        }
        Ok(FieldResolvent { sp: *sp, fields, phi: trunc.phi(sp), denominator })
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn kernel(&self, x: f64, y: f64) -> C64 {
        let mut ops: Vec<(f64, &CMatrix)> = self.fields.iter().map(|(p, o)| (*p, o)).collect();
        ops.push((x, &self.phi));
        ops.push((y, &self.phi));
        // stable: φ insertions commute with fields at the same point
        ops.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        fock::ordered_vev(&ops, &self.sp) / self.denominator
    }
}

/// Field-theoretic resolvent at a fixed truncation, without a convergence check.
pub fn resolvent_via_fields_at(
    sp: &SpectralParameter,
    cfg: &PointInteractionConfig,
    x: f64,
    y: f64,
    dim: usize,
) -> Result<C64> {
    Ok(FieldResolvent::new(sp, cfg, dim)?.kernel(x, y))
}

/// Field-theoretic resolvent at dimension `dim`, verified against `2·dim`.
pub fn resolvent_via_fields(
    sp: &SpectralParameter,
    cfg: &PointInteractionConfig,
    x: f64,
    y: f64,
    dim: usize,
) -> Result<C64> {
    let coarse = resolvent_via_fields_at(sp, cfg, x, y, dim)?;
    let fine = resolvent_via_fields_at(sp, cfg, x, y, 2 * dim)?;
    let change = rel_diff(coarse, fine);
    if change > FOCK_CONVERGENCE_TOL {
        return Err(Error::TruncationNotConverged { dim, change });
    }
    Ok(fine)
}

/// Largest entry difference between `sl2(fuse(p1, p2))` and `sl2(p2)·sl2(p1)`.
pub fn fused_params_match_sl2(p1: &BogolyubovParams, p2: &BogolyubovParams) -> Result<f64> {
    let fused = fuse(p1, p2)?;
    let lhs = sl2_from_params(&fused.params)?;
    let rhs = sl2_from_params(p2)? * sl2_from_params(p1)?;
    Ok(lhs.max_abs_diff(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sp1() -> SpectralParameter {
        SpectralParameter::real(1.0).unwrap()
    }

    #[test]
    fn sl2_examples() {
        let id = sl2_from_params(&BogolyubovParams::identity()).unwrap();
        assert_eq!(id, Sl2Element::identity());

        let s = sl2_from_params(&BogolyubovParams::real(0.3, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(s, Sl2Element { alpha: ONE, beta: c(-0.3), gamma: ZERO, delta: ONE });

        let p = BogolyubovParams::new(C64::new(0.2, 0.1), C64::new(-0.4, 0.3), C64::new(0.7, -0.2))
            .unwrap();
        assert!((sl2_from_params(&p).unwrap().determinant() - ONE).norm() < 1e-14);
    }

    #[test]
    fn params_from_sl2_inverts() {
        assert_eq!(params_from_sl2(&Sl2Element::identity()).unwrap(), BogolyubovParams::identity());
        let s = Sl2Element { alpha: ZERO, beta: ONE, gamma: -ONE, delta: ZERO };
        assert_eq!(params_from_sl2(&s), Err(Error::AlphaZero));
        let p = BogolyubovParams::real(0.4, -0.25, 0.6).unwrap();
        let back = params_from_sl2(&sl2_from_params(&p).unwrap()).unwrap();
        assert!(back.max_abs_diff(&p) < 1e-15);
    }

    #[test]
    fn degenerate_mu_rejected() {
        assert_eq!(BogolyubovParams::real(0.0, -1.0, 0.0), Err(Error::DegenerateMu));
    }

    #[test]
    fn delta_params_examples() {
        assert_eq!(delta_params(0.0, &sp1()).unwrap(), BogolyubovParams::identity());
        let p = delta_params(2.0, &sp1()).unwrap();
        assert_eq!(p, BogolyubovParams::real(-0.5, -0.5, -0.5).unwrap());
        assert!(matches!(delta_params(-2.0, &sp1()), Err(Error::SingularExtension { .. })));
        let mut last = 0.0;
        for v in [1.0, 10.0, 100.0, 1e4, 1e8] {
            let x = delta_params(v, &sp1()).unwrap().lambda.re;
            assert!(x < last && x > -1.0);
            last = x;
        }
        assert!(last + 1.0 < 1e-7);
    }

    #[test]
    fn delta_params_reproduce_conjugation_map() {
        // Λ for the delta field must equal [[1 + s, s], [-s, 1 - s]], s = V/2m
        let m = SpectralParameter::new(C64::new(1.3, 0.2)).unwrap();
        let v = 0.9;
        let s = m.reduced_strength(v);
        let lam = sl2_from_params(&delta_params(v, &m).unwrap()).unwrap();
        let expected = Sl2Element { alpha: ONE + s, beta: s, gamma: -s, delta: ONE - s };
        assert!(lam.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn low_order_form_factors() {
        let p = BogolyubovParams::new(C64::new(0.3, 0.1), c(-0.2), C64::new(0.5, -0.4)).unwrap();
        assert_eq!(form_factor(0, 0, &p).unwrap(), ONE);
        assert!((form_factor(1, 1, &p).unwrap() - (ONE + p.mu)).norm() < 1e-15);
        assert!((form_factor(2, 0, &p).unwrap() - p.lambda).norm() < 1e-15);
        assert!((form_factor(0, 2, &p).unwrap() - p.nu).norm() < 1e-15);
        assert_eq!(form_factor(1, 0, &p).unwrap(), ZERO);
        assert_eq!(form_factor(3, 6, &p).unwrap(), ZERO);
    }

    #[test]
    fn f42_by_hand() {
        // j = 0: 4!2!/(0!2!1!) (λ/2)² (ν/2) ; j = 1: 4!2!/(2!1!0!) (λ/2)(1+μ)²
        let p = BogolyubovParams::real(0.3, -0.2, 0.5).unwrap();
        let (l, m, n) = (0.3, -0.2, 0.5);
        let hand = 24.0 * (l / 2.0) * (l / 2.0) * (n / 2.0) + 24.0 * (l / 2.0) * (1.0 + m) * (1.0 + m);
        assert!((form_factor(4, 2, &p).unwrap() - c(hand)).norm() < 1e-14);
        assert!((form_factor_recursive(4, 2, &p).unwrap() - c(hand)).norm() < 1e-14);
    }

    #[test]
    fn recursion_matches_closed_form() {
        let p = BogolyubovParams::new(C64::new(0.6, -0.2), C64::new(0.3, 0.5), C64::new(-0.7, 0.1))
            .unwrap();
        for k in 0..=16 {
            for l in 0..=16 {
                let a = form_factor(k, l, &p).unwrap();
                let b = form_factor_recursive(k, l, &p).unwrap();
                assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0), "({k},{l}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn matrix_element_is_scaled_form_factor() {
        let p = BogolyubovParams::real(0.5, 0.1, -0.3).unwrap();
        for (k, l) in [(0, 0), (2, 4), (7, 3), (30, 22), (25, 25)] {
            let f = form_factor(k, l, &p).unwrap();
            let scale = (ln_factorial(k) + ln_factorial(l)).mul_add(0.5, 0.0).exp();
            let me = matrix_element(k, l, &p).unwrap();
            assert!((me * scale - f).norm() <= 1e-11 * f.norm().max(1e-300));
        }
    }

    #[test]
    fn index_limit() {
        let p = BogolyubovParams::identity();
        assert!(matches!(form_factor(171, 1, &p), Err(Error::Overflow { .. })));
        assert!(matrix_element(170, 170, &p).is_ok());
    }

    #[test]
    fn evolve_rules() {
        let m = SpectralParameter::new(C64::new(1.0, 0.3)).unwrap();
        let p = BogolyubovParams::real(0.4, 0.2, -0.3).unwrap();
        assert_eq!(evolve(&p, 0.0, &m), p);
        let twice = evolve(&evolve(&p, 0.3, &m), 0.5, &m);
        assert!(twice.max_abs_diff(&evolve(&p, 0.8, &m)) < 1e-15);
        let q = evolve(&p, 2f64.ln(), &sp1());
        assert!((q.lambda - c(0.1)).norm() < 1e-15);
        assert!((q.nu - c(-1.2)).norm() < 1e-15);
    }

    #[test]
    fn fusion_examples() {
        let p1 = BogolyubovParams::real(0.3, 0.2, -0.4).unwrap();
        let f = fuse(&p1, &BogolyubovParams::identity()).unwrap();
        assert!(f.params.max_abs_diff(&p1) < 1e-15);
        assert_eq!(f.c12, ONE);

        let f = fuse(&BogolyubovParams::real(0.0, 0.0, 1.0).unwrap(), &BogolyubovParams::real(0.5, 0.0, 0.0).unwrap())
            .unwrap();
        assert!((f.c12 - c(2f64.sqrt())).norm() < 1e-15);

        let f = fuse(&BogolyubovParams::real(0.3, 0.0, 0.0).unwrap(), &BogolyubovParams::real(0.45, 0.0, 0.0).unwrap())
            .unwrap();
        assert!((f.params.lambda - c(0.75)).norm() < 1e-15);

        assert_eq!(
            fuse(&BogolyubovParams::real(0.0, 0.0, 2.0).unwrap(), &BogolyubovParams::real(0.5, 0.0, 0.0).unwrap()),
            Err(Error::FusionSingular { pair: 0 })
        );
    }

    #[test]
    fn fusion_respects_sl2_composition() {
        let p1 = BogolyubovParams::new(C64::new(0.3, 0.1), C64::new(-0.2, 0.05), C64::new(0.6, 0.0)).unwrap();
        let p2 = BogolyubovParams::new(C64::new(-0.5, 0.2), C64::new(0.4, -0.1), C64::new(0.1, 0.3)).unwrap();
        assert!(fused_params_match_sl2(&p1, &p2).unwrap() < 1e-13);
    }

    #[test]
    fn two_point_examples() {
        let p = BogolyubovParams::real(0.4, 0.1, 0.0).unwrap();
        assert_eq!(two_point(&p, &p, 0.0, 1.0, &sp1()).unwrap(), ONE);
        assert!(two_point(&p, &p, 1.0, 0.0, &sp1()).is_err());

        let v = delta_params(2.0, &sp1()).unwrap();
        let one = crate::greenfn::one_point(&sp1(), 2.0).unwrap();
        let val = one * one * two_point(&v, &v, 0.0, 2f64.ln(), &sp1()).unwrap();
        assert!((val.re - 0.516_397_779_494_322).abs() < 1e-12);
    }

    #[test]
    fn two_point_series_converges() {
        // Σ_k (2k)!/(k!)² (r/4)^k, error bounded by the first omitted terms
        let p1 = BogolyubovParams::real(0.0, 0.0, 0.8).unwrap();
        let p2 = BogolyubovParams::real(0.7, 0.0, 0.0).unwrap();
        let m = sp1();
        let delta: f64 = 0.2;
        let r = 0.8 * 0.7 * (-2.0 * delta).exp();
        let closed = two_point(&p1, &p2, 0.0, delta, &m).unwrap().re;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 0..=40 {
            sum += term;
            term *= (2 * k + 1) as f64 * (2 * k + 2) as f64 / ((k + 1) * (k + 1)) as f64 * r / 4.0;
        }
        assert!((sum - closed).abs() < 1e-14 + r.powi(41));
    }

    #[test]
    fn n_point_edge_cases() {
        let m = sp1();
        assert_eq!(n_point_correlator(&[], &m).unwrap(), ONE);
        let p = BogolyubovParams::real(0.3, 0.2, 0.5).unwrap();
        assert_eq!(n_point_correlator(&[FieldInsertion::new(p, 1.0)], &m).unwrap(), ONE);
        let q = BogolyubovParams::real(-0.4, 0.1, 0.2).unwrap();
        let two = n_point_correlator(&[FieldInsertion::new(p, 0.2), FieldInsertion::new(q, 0.9)], &m).unwrap();
        assert!((two - two_point(&p, &q, 0.2, 0.9, &m).unwrap()).norm() < 1e-15);
        assert!(n_point_correlator(&[FieldInsertion::new(p, 1.0), FieldInsertion::new(q, 0.0)], &m).is_err());
    }

    #[test]
    fn n_point_reports_failing_pair() {
        let m = sp1();
        let p = BogolyubovParams::real(0.0, 0.0, 0.0).unwrap();
        let bad_left = BogolyubovParams::real(0.0, 0.0, 2.0).unwrap();
        let bad_right = BogolyubovParams::real(0.5, 0.0, 0.0).unwrap();
        let ins = [
            FieldInsertion::new(p, 0.0),
            FieldInsertion::new(bad_left, 1.0),
            FieldInsertion::new(bad_right, 1.0),
        ];
        assert_eq!(n_point_correlator(&ins, &m), Err(Error::FusionSingular { pair: 1 }));
    }

    #[test]
    fn three_delta_fields_match_determinant() {
        let m = sp1();
        let ln2 = 2f64.ln();
        let cfg = PointInteractionConfig::from_pairs(&[(0.0, 2.0), (ln2, 2.0), (2.0 * ln2, 2.0)]).unwrap();
        let fused = delta_correlator_fused(&m, &cfg).unwrap();
        let det = crate::greenfn::correlator_det(&m, &cfg).unwrap();
        assert!((fused - det).norm() < 1e-10 * det.norm());
    }

    #[test]
    fn field_resolvent_free_and_single_point() {
        let m = SpectralParameter::real(1.0).unwrap();
        let empty = PointInteractionConfig::from_pairs(&[(0.0, 0.0)]).unwrap();
        let g = resolvent_via_fields_at(&m, &empty, 0.1, 0.8, 16).unwrap();
        assert!((g - crate::greenfn::free_green(&m, 0.1, 0.8)).norm() < 1e-15);

        let cfg = PointInteractionConfig::from_pairs(&[(0.0, 2.0)]).unwrap();
        let g = resolvent_via_fields(&m, &cfg, 0.0, 0.0, 40).unwrap();
        assert!((g - c(0.25)).norm() < 1e-12);
    }
}
