//! Green function of `-f'' + m² f` with derivative jumps `f'(a⁺) - f'(a⁻) = V f(a)`,
//! built from the two decaying solutions propagated through each point.
//!
//! On every segment a solution is stored as `e^{s}·[c₊ e^{-m(x-x₀)} + c₋ e^{m(x-x₀)}]`
//! with a per-segment anchor `x₀` and a complex log-scale `s`, so that spans far
//! beyond `700 / Re m` neither overflow nor underflow.

use crate::error::{Error, Result};
use crate::greenfn::{PointInteractionConfig, SpectralParameter};
use crate::linalg::{C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferState {
    pub c_plus: C64,
    pub c_minus: C64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    anchor: f64,
    log_scale: C64,
    state: TransferState,
}

/// Value and derivative sharing one log scale: `f = e^{s}·value`, `f' = e^{s}·slope`.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    log_scale: C64,
    value: C64,
    slope: C64,
}

impl Segment {
    fn eval(&self, m: C64, x: f64) -> Scaled {
        let t = x - self.anchor;
        let TransferState { c_plus, c_minus } = self.state;
        // factor out the dominant exponential
        let (shift, fp, fm) = if t >= 0.0 {
            (m * t, c_plus * (-2.0 * m * t).exp(), c_minus)
        } else {
            (-m * t, c_plus, c_minus * (2.0 * m * t).exp())
        };
        Scaled { log_scale: self.log_scale + shift, value: fp + fm, slope: m * (fm - fp) }
    }

    fn from_boundary(m: C64, anchor: f64, at: Scaled) -> Segment {
        let c_minus = (at.value + at.slope / m) / 2.0;
        let c_plus = (at.value - at.slope / m) / 2.0;
        let norm = c_plus.norm().max(c_minus.norm());
        let (state, log_scale) = if norm > 0.0 {
            (
                TransferState { c_plus: c_plus / norm, c_minus: c_minus / norm },
                at.log_scale + norm.ln(),
            )
        } else {
            (TransferState { c_plus, c_minus }, at.log_scale)
        };
        Segment { anchor, log_scale, state }
    }
}

/// The two Jost-type solutions on every segment between the interaction points.
#[derive(Debug, Clone)]
pub struct TransferGreen {
    m: C64,
    positions: Vec<f64>,
    /// decaying at -∞; segment `s` lies between `a_s` and `a_{s+1}`
    left: Vec<Segment>,
    /// decaying at +∞
    right: Vec<Segment>,
}

impl TransferGreen {
    pub fn new(sp: &SpectralParameter, cfg: &PointInteractionConfig) -> Result<Self> {
        cfg.check_extensions(sp)?;
        let m = sp.m();
        let a = cfg.positions();
        let v = cfg.strengths();
        let n = a.len();
        let origin = a.first().copied().unwrap_or(0.0);

        let mut left = Vec::with_capacity(n + 1);
        left.push(Segment {
            anchor: origin,
            log_scale: ZERO,
            state: TransferState { c_plus: ZERO, c_minus: ONE },
        });
        for j in 0..n {
            let mut at = left[j].eval(m, a[j]);
            at.slope += v[j] * at.value;
            left.push(Segment::from_boundary(m, a[j], at));
        }

        let end = a.last().copied().unwrap_or(0.0);
        let mut right = vec![
            Segment {
                anchor: end,
                log_scale: ZERO,
                state: TransferState { c_plus: ONE, c_minus: ZERO },
            };
            n + 1
        ];
        for j in (0..n).rev() {
            let mut at = right[j + 1].eval(m, a[j]);
            at.slope -= v[j] * at.value;
            right[j] = Segment::from_boundary(m, a[j], at);
        }

        Ok(TransferGreen { m, positions: a.to_vec(), left, right })
    }

    fn segment(&self, x: f64) -> usize {
        self.positions.partition_point(|&a| a < x)
    }

    /// Solution decaying at -∞, up to normalization: `(ln scale, value, slope)`.
    pub fn left_solution(&self, x: f64) -> (C64, C64, C64) {
        let s = self.left[self.segment(x)].eval(self.m, x);
        (s.log_scale, s.value, s.slope)
    }

    pub fn right_solution(&self, x: f64) -> (C64, C64, C64) {
        let s = self.right[self.segment(x)].eval(self.m, x);
        (s.log_scale, s.value, s.slope)
    }

    pub fn kernel(&self, x: f64, y: f64) -> Result<C64> {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let seg_lo = self.segment(lo);
        let l = self.left[seg_lo].eval(self.m, lo);
        let r_lo = self.right[seg_lo].eval(self.m, lo);
        let r_hi = self.right[self.segment(hi)].eval(self.m, hi);
        // W = ψ₋' ψ₊ - ψ₋ ψ₊', evaluated at `lo`; the ψ₋ scale cancels
        let wronskian = l.slope * r_lo.value - l.value * r_lo.slope;
        let magnitude = (l.slope * r_lo.value).norm().max((l.value * r_lo.slope).norm());
        if wronskian.norm() <= 1e-13 * magnitude || wronskian.norm() == 0.0 {
            return Err(Error::ZeroWronskian);
        }
        let scale = (r_hi.log_scale - r_lo.log_scale).exp();
        Ok(scale * l.value * r_hi.value / wronskian)
    }
}

pub fn transfer_green(
    sp: &SpectralParameter,
    cfg: &PointInteractionConfig,
    x: f64,
    y: f64,
) -> Result<C64> {
    TransferGreen::new(sp, cfg)?.kernel(x, y)
}
