use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::region::{BoxRegion, ThinFilm, UnitFilm};
use crate::error::{Error, Result};

/// Analytic building block of a [`FieldKind::SmoothSeparable`] field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SmoothKind {
    /// `Σ c_k y^k`.
    Polynomial(Vec<f64>),
    /// `c + Σ a_k cos(ω_k y) + Σ b_k sin(ω_k y)`, terms stored as `(amplitude, ω)`.
    Trig {
        constant: f64,
        cos: Vec<(f64, f64)>,
        sin: Vec<(f64, f64)>,
    },
}

/// One-dimensional smooth function `x ↦ g((x - shift) * scale)`.
///
/// The affine argument lets translations, dilations and the vertical
/// rescaling `t ↦ εt` act on the argument without touching coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothFn {
    kind: SmoothKind,
    shift: f64,
    scale: f64,
}

impl SmoothFn {
    pub fn new(kind: SmoothKind) -> Result<Self> {
        let finite = match &kind {
            SmoothKind::Polynomial(c) => c.iter().all(|v| v.is_finite()),
            SmoothKind::Trig { constant, cos, sin } => {
                constant.is_finite()
                    && cos.iter().chain(sin).all(|(a, w)| a.is_finite() && w.is_finite())
            }
        };
        if !finite {
            return Err(Error::invalid("smooth function coefficients must be finite"));
        }
        Ok(Self {
            kind,
            shift: 0.0,
            scale: 1.0,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(vec![c])
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self {
            kind: SmoothKind::Polynomial(coeffs),
            shift: 0.0,
            scale: 1.0,
        }
    }

    /// `x ↦ x`.
    pub fn identity() -> Self {
        Self::polynomial(vec![0.0, 1.0])
    }

    /// `x ↦ amplitude · cos(ω x)`.
    pub fn cos(amplitude: f64, omega: f64) -> Self {
        Self {
            kind: SmoothKind::Trig {
                constant: 0.0,
                cos: vec![(amplitude, omega)],
                sin: vec![],
            },
            shift: 0.0,
            scale: 1.0,
        }
    }

    /// `x ↦ amplitude · sin(ω x)`.
    pub fn sin(amplitude: f64, omega: f64) -> Self {
        Self {
            kind: SmoothKind::Trig {
                constant: 0.0,
                cos: vec![],
                sin: vec![(amplitude, omega)],
            },
            shift: 0.0,
            scale: 1.0,
        }
    }

    pub fn kind(&self) -> &SmoothKind {
        &self.kind
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = (x - self.shift) * self.scale;
        match &self.kind {
            SmoothKind::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * y + ck),
            SmoothKind::Trig { constant, cos, sin } => {
                let mut v = *constant;
                for &(a, w) in cos {
                    v += a * (w * y).cos();
                }
                for &(b, w) in sin {
                    v += b * (w * y).sin();
                }
                v
            }
        }
    }

    pub fn derivative(&self) -> Self {
        let kind = match &self.kind {
            SmoothKind::Polynomial(c) => {
                let d: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, ck)| k as f64 * ck * self.scale)
                    .collect();
                SmoothKind::Polynomial(if d.is_empty() { vec![0.0] } else { d })
            }
            SmoothKind::Trig { cos, sin, .. } => SmoothKind::Trig {
                constant: 0.0,
                cos: sin.iter().map(|&(b, w)| (b * w * self.scale, w)).collect(),
                sin: cos.iter().map(|&(a, w)| (-a * w * self.scale, w)).collect(),
            },
        };
        Self {
            kind,
            shift: self.shift,
            scale: self.scale,
        }
    }

    /// `Some(c)` when the function is identically `c`.
    pub fn constant_value(&self) -> Option<f64> {
        match &self.kind {
            SmoothKind::Polynomial(c) => {
                if c.iter().skip(1).all(|v| *v == 0.0) {
                    Some(c.first().copied().unwrap_or(0.0))
                } else {
                    None
                }
            }
            SmoothKind::Trig { constant, cos, sin } => {
                let trivial = |t: &(f64, f64)| t.0 == 0.0;
                let cos_const: f64 = cos.iter().filter(|t| t.1 == 0.0).map(|t| t.0).sum();
                if cos.iter().all(|t| trivial(t) || t.1 == 0.0)
                    && sin.iter().all(|t| trivial(t) || t.1 == 0.0)
                {
                    Some(constant + cos_const)
                } else {
                    None
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.constant_value().is_some()
    }

    /// `x ↦ self(a·x + b)`, `a ≠ 0`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Self {
        debug_assert!(a != 0.0);
        Self {
            kind: self.kind.clone(),
            shift: (self.shift - b) / a,
            scale: self.scale * a,
        }
    }

    /// `x ↦ c · self(x)`.
    pub fn times(&self, c: f64) -> Self {
        let kind = match &self.kind {
            SmoothKind::Polynomial(p) => SmoothKind::Polynomial(p.iter().map(|v| v * c).collect()),
            SmoothKind::Trig { constant, cos, sin } => SmoothKind::Trig {
                constant: constant * c,
                cos: cos.iter().map(|&(a, w)| (a * c, w)).collect(),
                sin: sin.iter().map(|&(a, w)| (a * c, w)).collect(),
            },
        };
        Self {
            kind,
            shift: self.shift,
            scale: self.scale,
        }
    }
}

/// Regularity class used by the engines to pick singular substitutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    /// Lipschitz: `|u(x+r) - u(x)|² = O(r²)`.
    Lipschitz,
    /// Jump discontinuities: `|u(x+r) - u(x)|²` integrates to `O(r)`.
    Jump,
}

impl Regularity {
    /// Small-lag power `β` with `∫|u(x+r)-u(x)|² dx ~ r^β`.
    pub fn lag_power(self) -> f64 {
        match self {
            Regularity::Lipschitz => 2.0,
            Regularity::Jump => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldKind {
    /// `v(x₁)` on `(lo, hi)`, constant `values[j]` between consecutive breakpoints.
    PiecewiseConstant1D {
        lo: f64,
        hi: f64,
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `Π_i horizontal[i](x'_i) · vertical(x_d)`.
    SmoothSeparable {
        horizontal: Vec<SmoothFn>,
        vertical: SmoothFn,
    },
    /// Node values on a tensor grid over `region`, multilinear in between.
    GridSample {
        region: BoxRegion,
        shape: Vec<usize>,
        values: Vec<f64>,
    },
}

/// Scalar field on a film (or on `ω` for `x'`-only fields).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    kind: FieldKind,
    lipschitz: Option<f64>,
    sup_norm: Option<f64>,
}

impl Field {
    pub fn piecewise_constant(
        lo: f64,
        hi: f64,
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("pwc support must satisfy lo < hi, got ({lo}, {hi})")));
        }
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::invalid(format!(
                "pwc field needs breakpoints.len() + 1 values, got {} breakpoints and {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("pwc values must be finite"));
        }
        let mut prev = lo;
        for &b in &breakpoints {
            if !(b > prev && b < hi) {
                return Err(Error::invalid(format!(
                    "pwc breakpoints must be strictly increasing and interior to ({lo}, {hi}); offending breakpoint {b}"
                )));
            }
            prev = b;
        }
        Ok(Self {
            kind: FieldKind::PiecewiseConstant1D {
                lo,
                hi,
                breakpoints,
                values,
            },
            lipschitz: None,
            sup_norm: None,
        })
    }

    /// Characteristic function of `(at, hi)` on `(lo, hi)` scaled by `height`.
    pub fn step(lo: f64, hi: f64, at: f64, height: f64) -> Result<Self> {
        Self::piecewise_constant(lo, hi, vec![at], vec![0.0, height])
    }

    pub fn smooth(horizontal: Vec<SmoothFn>, vertical: SmoothFn) -> Result<Self> {
        if horizontal.is_empty() || horizontal.len() > 2 {
            return Err(Error::unsupported(format!(
                "smooth fields need 1 or 2 horizontal factors, got {}",
                horizontal.len()
            )));
        }
        Ok(Self {
            kind: FieldKind::SmoothSeparable {
                horizontal,
                vertical,
            },
            lipschitz: None,
            sup_norm: None,
        })
    }

    pub fn grid(region: BoxRegion, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.len() != region.dim() {
            return Err(Error::invalid(format!(
                "grid shape has {} axes for a {}-dimensional region",
                shape.len(),
                region.dim()
            )));
        }
        if shape.iter().any(|&n| n < 2) {
            return Err(Error::invalid("grid fields need at least 2 nodes per axis"));
        }
        let count: usize = shape.iter().product();
        if values.len() != count {
            return Err(Error::invalid(format!(
                "grid expects {count} node values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid values must be finite"));
        }
        Ok(Self {
            kind: FieldKind::GridSample {
                region,
                shape,
                values,
            },
            lipschitz: None,
            sup_norm: None,
        })
    }

    pub fn with_lipschitz(mut self, l: f64) -> Result<Self> {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::invalid(format!("Lipschitz bound must be >= 0, got {l}")));
        }
        self.lipschitz = Some(l);
        Ok(self)
    }

    pub fn with_sup_norm(mut self, m: f64) -> Result<Self> {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::invalid(format!("sup norm must be >= 0, got {m}")));
        }
        self.sup_norm = Some(m);
        Ok(self)
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn sup_norm(&self) -> Option<f64> {
        self.sup_norm
    }

    /// Point dimension the field expects, `None` for pwc fields (any `d`).
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            FieldKind::PiecewiseConstant1D { .. } => None,
            FieldKind::SmoothSeparable { horizontal, .. } => Some(horizontal.len() + 1),
            FieldKind::GridSample { shape, .. } => Some(shape.len()),
        }
    }

    pub fn regularity(&self) -> Regularity {
        match &self.kind {
            FieldKind::PiecewiseConstant1D { .. } if !self.is_constant() => Regularity::Jump,
            _ => Regularity::Lipschitz,
        }
    }

    pub fn is_pwc(&self) -> bool {
        matches!(self.kind, FieldKind::PiecewiseConstant1D { .. })
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            FieldKind::PiecewiseConstant1D { values, .. } => values.iter().all(|v| *v == values[0]),
            FieldKind::SmoothSeparable {
                horizontal,
                vertical,
            } => {
                let all_const =
                    horizontal.iter().all(SmoothFn::is_constant) && vertical.is_constant();
                let any_zero = horizontal
                    .iter()
                    .chain(std::iter::once(vertical))
                    .any(|f| f.constant_value() == Some(0.0));
                all_const || any_zero
            }
            FieldKind::GridSample { values, .. } => values.iter().all(|v| *v == values[0]),
        }
    }

    /// True when the field does not depend on the last (thin) coordinate.
    pub fn is_horizontal_only(&self) -> bool {
        match &self.kind {
            FieldKind::PiecewiseConstant1D { .. } => true,
            FieldKind::SmoothSeparable { vertical, .. } => vertical.is_constant() || self.is_constant(),
            FieldKind::GridSample { shape, values, .. } => grid_constant_along(shape, values, &[shape.len() - 1]),
        }
    }

    /// True when the field depends on the thin coordinate only.
    pub fn is_vertical_only(&self) -> bool {
        match &self.kind {
            FieldKind::PiecewiseConstant1D { .. } => self.is_constant(),
            FieldKind::SmoothSeparable { horizontal, .. } => {
                horizontal.iter().all(SmoothFn::is_constant) || self.is_constant()
            }
            FieldKind::GridSample { shape, values, .. } => {
                let axes: Vec<usize> = (0..shape.len() - 1).collect();
                grid_constant_along(shape, values, &axes)
            }
        }
    }

    /// Unchecked evaluation; coordinates outside the support are clamped.
    pub fn value_at(&self, p: &[f64]) -> f64 {
        match &self.kind {
            FieldKind::PiecewiseConstant1D {
                breakpoints,
                values,
                ..
            } => values[breakpoints.partition_point(|b| *b <= p[0])],
            FieldKind::SmoothSeparable {
                horizontal,
                vertical,
            } => {
                let h: f64 = horizontal.iter().zip(p).map(|(f, x)| f.eval(*x)).product();
                match p.get(horizontal.len()) {
                    Some(t) => h * vertical.eval(*t),
                    None => h * vertical.constant_value().unwrap_or_else(|| vertical.eval(0.0)),
                }
            }
            FieldKind::GridSample {
                region,
                shape,
                values,
            } => multilinear(region, shape, values, p),
        }
    }

    /// Checked pointwise evaluation; pwc fields are right-continuous at breakpoints.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        if p.iter().any(|x| !x.is_finite()) || p.is_empty() {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
        match &self.kind {
            FieldKind::PiecewiseConstant1D { lo, hi, .. } => {
                if p[0] < *lo || p[0] > *hi {
                    return Err(Error::OutOfDomain(p.to_vec()));
                }
            }
            FieldKind::SmoothSeparable { horizontal, .. } => {
                if p.len() != horizontal.len() + 1 {
                    return Err(Error::DomainMismatch(format!(
                        "smooth field on R^{} evaluated at a point of length {}",
                        horizontal.len() + 1,
                        p.len()
                    )));
                }
            }
            FieldKind::GridSample { region, .. } => {
                if !region.contains(p) {
                    return Err(Error::OutOfDomain(p.to_vec()));
                }
            }
        }
        Ok(self.value_at(p))
    }

    /// Value of an `x'`-only field at `x' ∈ ω` (grids may live on the film or on `ω`).
    pub fn horizontal_value(&self, xp: &[f64]) -> f64 {
        match &self.kind {
            FieldKind::GridSample { region, .. } if region.dim() == xp.len() + 1 => {
                let mut p = xp.to_vec();
                p.push(region.lower()[region.dim() - 1]);
                self.value_at(&p)
            }
            _ => self.value_at(xp),
        }
    }

    /// Maps `u` to `(x', t) ↦ u(x', factor·t)`.
    pub fn compose_vertical(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid(format!("vertical factor must be > 0, got {factor}")));
        }
        let kind = match &self.kind {
            FieldKind::PiecewiseConstant1D { .. } => self.kind.clone(),
            FieldKind::SmoothSeparable {
                horizontal,
                vertical,
            } => FieldKind::SmoothSeparable {
                horizontal: horizontal.clone(),
                vertical: vertical.compose_affine(factor, 0.0),
            },
            FieldKind::GridSample {
                region,
                shape,
                values,
            } => {
                let n = region.dim() - 1;
                let mut lower = region.lower().to_vec();
                let mut upper = region.upper().to_vec();
                lower[n] /= factor;
                upper[n] /= factor;
                FieldKind::GridSample {
                    region: BoxRegion::new(lower, upper)?,
                    shape: shape.clone(),
                    values: values.clone(),
                }
            }
        };
        Ok(Self {
            kind,
            lipschitz: self.lipschitz,
            sup_norm: self.sup_norm,
        })
    }

    /// `x ↦ u(x - shift)`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        let kind = match &self.kind {
            FieldKind::PiecewiseConstant1D {
                lo,
                hi,
                breakpoints,
                values,
            } => FieldKind::PiecewiseConstant1D {
                lo: lo + shift[0],
                hi: hi + shift[0],
                breakpoints: breakpoints.iter().map(|b| b + shift[0]).collect(),
                values: values.clone(),
            },
            FieldKind::SmoothSeparable {
                horizontal,
                vertical,
            } => {
                if shift.len() != horizontal.len() + 1 {
                    return Err(Error::DomainMismatch("shift length differs from field dimension".into()));
                }
                FieldKind::SmoothSeparable {
                    horizontal: horizontal
                        .iter()
                        .zip(shift)
                        .map(|(f, c)| f.compose_affine(1.0, -c))
                        .collect(),
                    vertical: vertical.compose_affine(1.0, -shift[horizontal.len()]),
                }
            }
            FieldKind::GridSample {
                region,
                shape,
                values,
            } => FieldKind::GridSample {
                region: region.translated(shift)?,
                shape: shape.clone(),
                values: values.clone(),
            },
        };
        Ok(Self {
            kind,
            lipschitz: self.lipschitz,
            sup_norm: self.sup_norm,
        })
    }

    /// `x ↦ u(x / lambda)`.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("dilation must be > 0, got {lambda}")));
        }
        let kind = match &self.kind {
            FieldKind::PiecewiseConstant1D {
                lo,
                hi,
                breakpoints,
                values,
            } => FieldKind::PiecewiseConstant1D {
                lo: lo * lambda,
                hi: hi * lambda,
                breakpoints: breakpoints.iter().map(|b| b * lambda).collect(),
                values: values.clone(),
            },
            FieldKind::SmoothSeparable {
                horizontal,
                vertical,
            } => FieldKind::SmoothSeparable {
                horizontal: horizontal
                    .iter()
                    .map(|f| f.compose_affine(1.0 / lambda, 0.0))
                    .collect(),
                vertical: vertical.compose_affine(1.0 / lambda, 0.0),
            },
            FieldKind::GridSample {
                region,
                shape,
                values,
            } => FieldKind::GridSample {
                region: region.dilated(lambda)?,
                shape: shape.clone(),
                values: values.clone(),
            },
        };
        Ok(Self {
            kind,
            lipschitz: self.lipschitz.map(|l| l / lambda),
            sup_norm: self.sup_norm,
        })
    }

    /// `x ↦ c · u(x)`.
    pub fn times(&self, c: f64) -> Self {
        let kind = match &self.kind {
            FieldKind::PiecewiseConstant1D {
                lo,
                hi,
                breakpoints,
                values,
            } => FieldKind::PiecewiseConstant1D {
                lo: *lo,
                hi: *hi,
                breakpoints: breakpoints.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
            FieldKind::SmoothSeparable {
                horizontal,
                vertical,
            } => FieldKind::SmoothSeparable {
                horizontal: horizontal.clone(),
                vertical: vertical.times(c),
            },
            FieldKind::GridSample {
                region,
                shape,
                values,
            } => FieldKind::GridSample {
                region: region.clone(),
                shape: shape.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
        };
        Self {
            kind,
            lipschitz: self.lipschitz.map(|l| l * c.abs()),
            sup_norm: self.sup_norm.map(|m| m * c.abs()),
        }
    }

    /// Pwc pieces `(a, b, value)` clipped to `[lo, hi]`.
    pub fn pwc_pieces(&self, lo: f64, hi: f64) -> Result<Vec<(f64, f64, f64)>> {
        let FieldKind::PiecewiseConstant1D {
            lo: a,
            hi: b,
            breakpoints,
            values,
        } = &self.kind
        else {
            return Err(Error::unsupported("pwc pieces requested for a non-pwc field"));
        };
        if lo < *a || hi > *b {
            return Err(Error::DomainMismatch(format!(
                "interval ({lo}, {hi}) exceeds the pwc support ({a}, {b})"
            )));
        }
        let mut edges = vec![*a];
        edges.extend(breakpoints);
        edges.push(*b);
        let mut pieces = Vec::new();
        for (j, v) in values.iter().enumerate() {
            let (l, r) = (edges[j].max(lo), edges[j + 1].min(hi));
            if r > l {
                pieces.push((l, r, *v));
            }
        }
        Ok(pieces)
    }

    /// Node coordinates along `axis` where a grid field has kinks.
    pub fn grid_nodes(&self, axis: usize) -> Vec<f64> {
        match &self.kind {
            FieldKind::GridSample { region, shape, .. } if axis < shape.len() => {
                let n = shape[axis];
                let h = region.extent(axis) / (n - 1) as f64;
                (0..n).map(|i| region.lower()[axis] + i as f64 * h).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Gradient of a smooth field with respect to `x'` at a horizontal point.
    pub fn horizontal_gradient(&self, xp: &[f64]) -> Result<Vec<f64>> {
        let FieldKind::SmoothSeparable {
            horizontal,
            vertical,
        } = &self.kind
        else {
            return Err(Error::unsupported("horizontal gradients are available for smooth fields only"));
        };
        let c = vertical
            .constant_value()
            .ok_or_else(|| Error::unsupported("horizontal gradient of an x_d-dependent field"))?;
        let vals: Vec<f64> = horizontal.iter().zip(xp).map(|(f, x)| f.eval(*x)).collect();
        Ok((0..horizontal.len())
            .map(|i| {
                let d = horizontal[i].derivative().eval(xp[i]);
                let rest: f64 = vals
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| *v)
                    .product();
                c * d * rest
            })
            .collect())
    }

    /// Checks declared Lipschitz / sup-norm metadata on 1000 random pairs in `region`.
    ///
    /// Lipschitz is the horizontal bound `|u(x',t) - u(y',t)| <= L|x'-y'|`.
    pub fn validate_metadata(&self, region: &BoxRegion, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = region.dim();
        let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|i| region.lower()[i] + rng.gen::<f64>() * region.extent(i))
                .collect()
        };
        for _ in 0..1000 {
            let x = sample(&mut rng);
            let mut y = sample(&mut rng);
            if let Some(m) = self.sup_norm {
                let ux = self.value_at(&x);
                if ux.abs() > m * (1.0 + 1e-12) + 1e-300 {
                    return Err(Error::invalid(format!(
                        "declared sup norm {m} violated: |u({x:?})| = {}",
                        ux.abs()
                    )));
                }
            }
            if let Some(l) = self.lipschitz {
                if n > 1 {
                    y[n - 1] = x[n - 1];
                }
                let dist = x[..n.max(2) - 1]
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let diff = (self.value_at(&x) - self.value_at(&y)).abs();
                if diff > l * dist * (1.0 + 1e-9) + 1e-14 {
                    return Err(Error::invalid(format!(
                        "declared Lipschitz bound {l} violated between {x:?} and {y:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn grid_constant_along(shape: &[usize], values: &[f64], axes: &[usize]) -> bool {
    let n = shape.len();
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    let mut idx = vec![0usize; n];
    for (flat, v) in values.iter().enumerate() {
        let mut rem = flat;
        for i in 0..n {
            idx[i] = rem / strides[i];
            rem %= strides[i];
        }
        let base: usize = (0..n)
            .filter(|i| !axes.contains(i))
            .map(|i| idx[i] * strides[i])
            .sum();
        if *v != values[base] {
            return false;
        }
    }
    true
}

fn multilinear(region: &BoxRegion, shape: &[usize], values: &[f64], p: &[f64]) -> f64 {
    let n = shape.len();
    let mut cell = [0usize; 3];
    let mut frac = [0f64; 3];
    for i in 0..n {
        let cells = (shape[i] - 1) as f64;
        let t = ((p[i] - region.lower()[i]) / region.extent(i) * cells).clamp(0.0, cells);
        let c = (t.floor() as usize).min(shape[i] - 2);
        cell[i] = c;
        frac[i] = t - c as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for i in 0..n {
            let bit = (corner >> i) & 1;
            w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
            flat = flat * shape[i] + cell[i] + bit;
        }
        if w != 0.0 {
            acc += w * values[flat];
        }
    }
    acc
}

/// `v(x', t) = u(x', ε t)` on `ω × (0,1)`.
pub fn rescale_to_unit(u: &Field, film: &ThinFilm, eps: f64) -> Result<(Field, UnitFilm)> {
    if (eps - film.eps()).abs() > 1e-12 * film.eps() {
        return Err(Error::DomainMismatch(format!(
            "rescaling thickness {eps} differs from film thickness {}",
            film.eps()
        )));
    }
    Ok((u.compose_vertical(eps)?, UnitFilm::new(film.omega().clone())?))
}

/// Inverse of [`rescale_to_unit`]: `u(x', x_d) = v(x', x_d / ε)` on `ω × (0, ε)`.
pub fn rescale_from_unit(v: &Field, unit: &UnitFilm, eps: f64) -> Result<(Field, ThinFilm)> {
    Ok((
        v.compose_vertical(1.0 / eps)?,
        ThinFilm::new(unit.omega().clone(), eps)?,
    ))
}

/// Jumps `(t, v(t+) - v(t-))` of a piecewise-constant profile, zero jumps omitted.
pub fn jump_set(u: &Field) -> Result<Vec<(f64, f64)>> {
    match &u.kind {
        FieldKind::PiecewiseConstant1D {
            breakpoints,
            values,
            ..
        } => Ok(breakpoints
            .iter()
            .enumerate()
            .filter_map(|(j, &t)| {
                let h = values[j + 1] - values[j];
                (h != 0.0).then_some((t, h))
            })
            .collect()),
        _ => Err(Error::unsupported("jump set of a non piecewise-constant field")),
    }
}

/// Checked pointwise evaluation.
pub fn field_eval(u: &Field, point: &[f64]) -> Result<f64> {
    u.eval(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn chi_half() -> Field {
        Field::step(0.0, 1.0, 0.5, 1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let v = chi_half();
        assert_eq!(field_eval(&v, &[0.75, 0.0]).unwrap(), 1.0);
        assert_eq!(field_eval(&v, &[0.25, 0.0]).unwrap(), 0.0);
        assert_eq!(field_eval(&v, &[0.5, 0.0]).unwrap(), 1.0, "right-continuous");
        assert!(matches!(field_eval(&v, &[1.5, 0.0]), Err(Error::OutOfDomain(_))));

        let c = Field::smooth(vec![SmoothFn::cos(1.0, PI)], SmoothFn::constant(1.0)).unwrap();
        assert_eq!(field_eval(&c, &[0.0, 0.3]).unwrap(), 1.0);
        assert!(field_eval(&c, &[0.0]).is_err());
    }

    #[test]
    fn jump_set_examples() {
        let constant = Field::piecewise_constant(0.0, 1.0, vec![0.3], vec![2.0, 2.0]).unwrap();
        assert!(jump_set(&constant).unwrap().is_empty());
        assert_eq!(jump_set(&chi_half()).unwrap(), vec![(0.5, 1.0)]);
        let v = Field::piecewise_constant(0.0, 1.0, vec![0.2, 0.7], vec![0.0, 2.0, 1.0]).unwrap();
        assert_eq!(jump_set(&v).unwrap(), vec![(0.2, 2.0), (0.7, -1.0)]);
        let smooth = Field::smooth(vec![SmoothFn::identity()], SmoothFn::constant(1.0)).unwrap();
        assert!(matches!(jump_set(&smooth), Err(Error::Unsupported(_))));
    }

    #[test]
    fn pwc_validation() {
        assert!(Field::piecewise_constant(0.0, 1.0, vec![0.5, 0.4], vec![0.0, 1.0, 2.0]).is_err());
        assert!(Field::piecewise_constant(0.0, 1.0, vec![1.0], vec![0.0, 1.0]).is_err());
        assert!(Field::piecewise_constant(0.0, 1.0, vec![0.5], vec![0.0]).is_err());
        assert!(Field::grid(BoxRegion::unit(2), vec![1, 2], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn rescale_examples() {
        let omega = BoxRegion::interval(0.0, 1.0).unwrap();
        let film = ThinFilm::new(omega.clone(), 0.5).unwrap();
        let u = Field::smooth(vec![SmoothFn::constant(1.0)], SmoothFn::identity()).unwrap();
        let (v, unit) = rescale_to_unit(&u, &film, 0.5).unwrap();
        assert_eq!(unit.omega(), &omega);
        for t in [0.0, 0.3, 1.0] {
            assert!((v.value_at(&[0.4, t]) - 0.5 * t).abs() < 1e-15);
        }
        assert!(matches!(
            rescale_to_unit(&u, &film, 0.25),
            Err(Error::DomainMismatch(_))
        ));

        let unit_film = ThinFilm::new(omega.clone(), 1.0).unwrap();
        let (same, _) = rescale_to_unit(&u, &unit_film, 1.0).unwrap();
        assert_eq!(same, u);

        let pwc = chi_half();
        let (pv, _) = rescale_to_unit(&pwc, &film, 0.5).unwrap();
        assert_eq!(pv, pwc);
    }

    #[test]
    fn grid_rescale_round_trip() {
        let region = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 0.125]).unwrap();
        let values: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let u = Field::grid(region.clone(), vec![3, 4], values.clone()).unwrap();
        let film = ThinFilm::new(BoxRegion::interval(0.0, 1.0).unwrap(), 0.125).unwrap();
        let (v, unit) = rescale_to_unit(&u, &film, 0.125).unwrap();
        let (back, _) = rescale_from_unit(&v, &unit, 0.125).unwrap();
        assert_eq!(back, u);
        let FieldKind::GridSample { region: r, values: vv, .. } = v.kind() else { panic!() };
        assert_eq!(r.upper(), &[1.0, 1.0]);
        assert_eq!(vv, &values);
    }

    #[test]
    fn multilinear_reproduces_nodes_and_bilinear() {
        let region = BoxRegion::unit(2);
        let f = |x: f64, y: f64| 1.0 + 2.0 * x - y + 3.0 * x * y;
        let mut values = Vec::new();
        for i in 0..3 {
            for j in 0..4 {
                values.push(f(i as f64 / 2.0, j as f64 / 3.0));
            }
        }
        let u = Field::grid(region, vec![3, 4], values).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.5, 1.0 / 3.0), (0.3, 0.9), (1.0, 1.0), (0.77, 0.01)] {
            assert!((u.value_at(&[x, y]) - f(x, y)).abs() < 1e-13);
        }
    }

    #[test]
    fn smooth_derivative_and_constants() {
        let f = SmoothFn::polynomial(vec![1.0, 2.0, 3.0]).compose_affine(2.0, 1.0);
        let df = f.derivative();
        let h = 1e-6;
        for x in [-0.5, 0.0, 0.7] {
            let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
            assert!((df.eval(x) - fd).abs() < 1e-6);
        }
        let g = SmoothFn::cos(2.0, 3.0).compose_affine(0.5, -0.2);
        let dg = g.derivative();
        for x in [-0.5, 0.0, 0.7] {
            let fd = (g.eval(x + h) - g.eval(x - h)) / (2.0 * h);
            assert!((dg.eval(x) - fd).abs() < 1e-6);
        }
        assert_eq!(SmoothFn::constant(3.0).constant_value(), Some(3.0));
        assert_eq!(SmoothFn::cos(1.0, 0.0).constant_value(), Some(1.0));
        assert_eq!(SmoothFn::cos(1.0, 1.0).constant_value(), None);
    }

    #[test]
    fn horizontal_and_vertical_flags() {
        let hx = Field::smooth(vec![SmoothFn::identity()], SmoothFn::constant(2.0)).unwrap();
        assert!(hx.is_horizontal_only() && !hx.is_vertical_only());
        let vx = Field::smooth(vec![SmoothFn::constant(1.0)], SmoothFn::identity()).unwrap();
        assert!(vx.is_vertical_only() && !vx.is_horizontal_only());
        let grid = Field::grid(BoxRegion::unit(2), vec![2, 2], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(grid.is_horizontal_only());
        assert!(!grid.is_vertical_only());
        assert_eq!(hx.horizontal_value(&[0.25]), 0.5);
        assert_eq!(grid.horizontal_value(&[0.25]), 0.25);
    }

    #[test]
    fn metadata_validation() {
        let u = Field::smooth(vec![SmoothFn::sin(1.0, 2.0)], SmoothFn::constant(1.0))
            .unwrap()
            .with_lipschitz(2.0)
            .unwrap()
            .with_sup_norm(1.0)
            .unwrap();
        let region = BoxRegion::new(vec![0.0, 0.0], vec![3.0, 0.1]).unwrap();
        u.validate_metadata(&region, 7).unwrap();
        let bad = u.clone().with_lipschitz(0.5).unwrap();
        assert!(bad.validate_metadata(&region, 7).is_err());
        let bad_sup = u.with_sup_norm(0.5).unwrap();
        assert!(bad_sup.validate_metadata(&region, 7).is_err());
    }
}
