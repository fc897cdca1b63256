//! Limit and auxiliary functionals: sliced vertical seminorm, reduced seminorm
//! on `ω`, vertical limit energy and vertical mean deviation.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::c_const;
use crate::domain::{BoxRegion, Field, FieldKind, Regularity, UnitFilm};
use crate::error::{Error, Result};
use crate::quadrature::gauss::GaussRule;
use crate::quadrature::weight::Profile;
use crate::quadrature::{horizontal_profile, profile_seminorm_sq, Estimate, Method, QuadConfig};

/// A seminorm that may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Seminorm {
    Finite(Estimate),
    Divergent { reason: String },
}

impl Seminorm {
    pub fn finite(&self) -> Option<&Estimate> {
        match self {
            Seminorm::Finite(e) => Some(e),
            Seminorm::Divergent { .. } => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Seminorm::Divergent { .. })
    }
}

/// Gauss–Legendre nodes per `ω` axis for slice integrals.
pub const SLICE_NODES: usize = 16;

/// Kernel exponent `n + 2σ` of the `H^σ` seminorm on an `n`-dimensional set.
pub fn reduced_exponent(dim_omega: usize, sigma: f64) -> f64 {
    (dim_omega as f64) + 2.0 * sigma
}

/// Composite Gauss rule on `[lo, hi]` split at `breaks`.
fn composite(rule: &GaussRule, lo: f64, hi: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2).flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>()).collect()
}

/// Tensor quadrature points `(x', weight)` on `ω`.
fn omega_points(u: &Field, omega: &BoxRegion, per_axis: usize) -> Vec<(Vec<f64>, f64)> {
    let grid = matches!(u.kind(), FieldKind::GridSample { .. });
    let rule = GaussRule::new(if grid { 4 } else { per_axis });
    let axes: Vec<Vec<(f64, f64)>> = (0..omega.dim())
        .map(|i| {
            let breaks = match u.kind() {
                FieldKind::PiecewiseConstant1D { breakpoints, .. } if i == 0 => breakpoints.clone(),
                _ => u.grid_nodes(i),
            };
            composite(&rule, omega.lower()[i], omega.upper()[i], &breaks)
        })
        .collect();
    let mut pts = vec![(Vec::new(), 1.0)];
    for axis in &axes {
        pts = pts
            .into_iter()
            .flat_map(|(p, w)| {
                axis.iter().map(move |&(x, wx)| {
                    let mut q = p.clone();
                    q.push(x);
                    (q, w * wx)
                })
            })
            .collect();
    }
    pts
}

fn check_unit(v: &Field, unit: &UnitFilm) -> Result<()> {
    match v.dim() {
        Some(n) if n != unit.d() => Err(Error::DomainMismatch(format!(
            "field lives in R^{n}, unit film in R^{}",
            unit.d()
        ))),
        _ => Ok(()),
    }
}

/// `∫_ω ∫₀¹∫₀¹ |v(x',t) - v(x',τ)|² / |t-τ|^{1+2s} dt dτ dx'`.
pub fn sliced_vertical_seminorm_sq(v: &Field, unit: &UnitFilm, s: f64, cfg: &QuadConfig) -> Result<Estimate> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("s must lie in (0,1), got {s}")));
    }
    check_unit(v, unit)?;
    if v.is_horizontal_only() {
        return Ok(Estimate::zero(Method::Quadrature));
    }
    let tol = cfg.deterministic_tol();
    let e = 1.0 + 2.0 * s;
    let last = unit.d() - 1;
    let nodes: Vec<f64> = v.grid_nodes(last);
    let pts = omega_points(v, unit.omega(), SLICE_NODES);
    let slices: Vec<Result<(f64, f64, u64)>> = pts
        .par_iter()
        .map(|(xp, w)| {
            let xp = xp.clone();
            let f = move |t: f64| {
                let mut p = xp.clone();
                p.push(t);
                v.value_at(&p)
            };
            let profile = Profile::Function {
                f: &f,
                lo: 0.0,
                hi: 1.0,
                nodes: nodes.clone(),
            };
            let (val, err, n) = profile_seminorm_sq(&profile, e, tol)?;
            Ok((w * val, w * err, n))
        })
        .collect();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut budget = 0;
    for r in slices {
        let (a, b, n) = r?;
        value += a;
        error += b;
        budget += n;
    }
    Ok(Estimate {
        value,
        error,
        method: Method::Quadrature,
        budget,
        seed: None,
    })
}

/// Squared `H^σ(ω)` seminorm of an `x'` field; `Divergent` for jumps at `σ ≥ 1/2`.
pub fn reduced_seminorm_sq(u: &Field, omega: &BoxRegion, sigma: f64, cfg: &QuadConfig) -> Result<Seminorm> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::invalid(format!("sigma must lie in (0,1), got {sigma}")));
    }
    if u.regularity() == Regularity::Jump && sigma >= 0.5 {
        return Ok(Seminorm::Divergent {
            reason: format!("jump discontinuity: H^sigma seminorm is infinite for sigma = {sigma} >= 1/2"),
        });
    }
    if u.is_constant() {
        return Ok(Seminorm::Finite(Estimate::zero(Method::Quadrature)));
    }
    let tol = cfg.deterministic_tol();
    let e = reduced_exponent(omega.dim(), sigma);
    let (value, error, budget) = match omega.dim() {
        1 => {
            let f = |x: f64| u.horizontal_value(&[x]);
            let profile = horizontal_profile(u, &f, omega.lower()[0], omega.upper()[0])?;
            profile_seminorm_sq(&profile, e, tol)?
        }
        2 => polar_seminorm_sq(u, omega, e, tol)?,
        n => return Err(Error::unsupported(format!("reduced seminorm on a {n}-dimensional set"))),
    };
    Ok(Seminorm::Finite(Estimate {
        value,
        error,
        method: Method::Quadrature,
        budget,
        seed: None,
    }))
}

/// `∫_{R²} G(z) |z|^{-e} dz` on a rectangle, in polar coordinates.
fn polar_seminorm_sq(u: &Field, omega: &BoxRegion, e: f64, tol: f64) -> Result<(f64, f64, u64)> {
    let (l1, l2) = (omega.extent(0), omega.extent(1));
    let inner = GaussRule::new(12);
    let breaks = |axis: usize| -> Vec<f64> {
        match u.kind() {
            FieldKind::PiecewiseConstant1D { breakpoints, .. } if axis == 0 => breakpoints.clone(),
            _ => u.grid_nodes(axis),
        }
    };
    let (b0, b1) = (breaks(0), breaks(1));
    let beta = match u.regularity() {
        Regularity::Jump => 1.0,
        Regularity::Lipschitz => 2.0,
    };
    let angle_rule = GaussRule::new(24);
    let angles: Vec<(f64, f64)> = angle_rule
        .mapped(0.0, PI / 2.0)
        .chain(angle_rule.mapped(PI / 2.0, PI))
        .collect();
    let per_angle: Vec<Result<(f64, f64, u64)>> = angles
        .par_iter()
        .map(|&(theta, wt)| {
            let (c, s) = (theta.cos(), theta.sin());
            let rmax = (l1 / c.abs().max(1e-300)).min(l2 / s.abs().max(1e-300));
            let g = |r: f64| {
                let z = [r * c, r * s];
                let lo0 = omega.lower()[0] + (-z[0]).max(0.0);
                let hi0 = omega.upper()[0] - z[0].max(0.0);
                let lo1 = omega.lower()[1] + (-z[1]).max(0.0);
                let hi1 = omega.upper()[1] - z[1].max(0.0);
                if hi0 <= lo0 || hi1 <= lo1 {
                    return 0.0;
                }
                let shifted = |b: &[f64], dz: f64| -> Vec<f64> {
                    b.iter().copied().chain(b.iter().map(|x| x - dz)).collect()
                };
                let xs = composite(&inner, lo0, hi0, &shifted(&b0, z[0]));
                let ys = composite(&inner, lo1, hi1, &shifted(&b1, z[1]));
                let mut acc = 0.0;
                for &(x, wx) in &xs {
                    for &(y, wy) in &ys {
                        let d = u.horizontal_value(&[x + z[0], y + z[1]]) - u.horizontal_value(&[x, y]);
                        acc += wx * wy * d * d;
                    }
                }
                acc
            };
            let profile = Profile::Lag {
                g: &g,
                len: rmax,
                beta,
                kinks: Vec::new(),
            };
            // radial measure r dr turns r^{-e} into r^{1-e}
            let (v, err, n) = profile_seminorm_sq(&profile, e - 1.0, tol)?;
            Ok((wt * v, wt * err, n))
        })
        .collect();
    let mut total = (0.0, 0.0, 0u64);
    for r in per_angle {
        let (v, err, n) = r?;
        total.0 += v;
        total.1 += err;
        total.2 += n;
    }
    // angles cover [0, π); the factor 2 from G(-z) = G(z) is carried by the lag integral
    Ok(total)
}

/// `E(v) = C_{s₀,d} · sliced_vertical_seminorm_sq(v, s₀)`.
pub fn vertical_limit_energy(v: &Field, unit: &UnitFilm, s0: f64, d: usize, cfg: &QuadConfig) -> Result<Estimate> {
    if !(s0 > 0.0 && s0 < 0.5) {
        return Err(Error::invalid(format!("s0 must lie in (0, 1/2), got {s0}")));
    }
    if d != unit.d() {
        return Err(Error::DomainMismatch(format!("d = {d} for a unit film in R^{}", unit.d())));
    }
    let c = c_const(s0, d, cfg)?;
    vertical_limit_energy_with_constant(v, unit, s0, &c, cfg)
}

/// [`vertical_limit_energy`] with a caller-supplied kernel constant.
pub fn vertical_limit_energy_with_constant(
    v: &Field,
    unit: &UnitFilm,
    s0: f64,
    c: &Estimate,
    cfg: &QuadConfig,
) -> Result<Estimate> {
    let sl = sliced_vertical_seminorm_sq(v, unit, s0, cfg)?;
    Ok(Estimate {
        value: c.value * sl.value,
        error: c.value * sl.error + sl.value * c.error,
        method: Method::Quadrature,
        budget: sl.budget,
        seed: None,
    })
}

/// `∫_ω∫₀¹ |v(x',t) - v̄(x')|² dt dx'` with `v̄` the vertical mean.
pub fn vertical_mean_deviation(v: &Field, unit: &UnitFilm, cfg: &QuadConfig) -> Result<Estimate> {
    let _ = cfg;
    check_unit(v, unit)?;
    if v.is_horizontal_only() {
        return Ok(Estimate::zero(Method::Quadrature));
    }
    let last = unit.d() - 1;
    let tnodes = v.grid_nodes(last);
    let dev = |per: usize| -> f64 {
        let rule = GaussRule::new(per);
        let ts = composite(&rule, 0.0, 1.0, &tnodes);
        omega_points(v, unit.omega(), SLICE_NODES)
            .iter()
            .map(|(xp, w)| {
                let vals: Vec<f64> = ts
                    .iter()
                    .map(|(t, _)| {
                        let mut p = xp.clone();
                        p.push(*t);
                        v.value_at(&p)
                    })
                    .collect();
                let mean: f64 = vals.iter().zip(&ts).map(|(x, (_, wt))| x * wt).sum();
                let d: f64 = vals.iter().zip(&ts).map(|(x, (_, wt))| wt * (x - mean).powi(2)).sum();
                w * d
            })
            .sum()
    };
    let fine = dev(32);
    let coarse = dev(16);
    Ok(Estimate {
        value: fine,
        error: (fine - coarse).abs(),
        method: Method::Quadrature,
        budget: 32 * SLICE_NODES.pow(last as u32) as u64,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SmoothFn;

    fn unit1() -> UnitFilm {
        UnitFilm::new(BoxRegion::interval(0.0, 1.0).unwrap()).unwrap()
    }

    fn id_seminorm(s: f64) -> f64 {
        2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
    }

    #[test]
    fn sliced_examples() {
        let cfg = QuadConfig::default();
        let flat = Field::smooth(vec![SmoothFn::cos(1.0, PI)], SmoothFn::constant(1.0)).unwrap();
        assert_eq!(sliced_vertical_seminorm_sq(&flat, &unit1(), 0.25, &cfg).unwrap().value, 0.0);

        let t = Field::smooth(vec![SmoothFn::constant(1.0)], SmoothFn::identity()).unwrap();
        let v = sliced_vertical_seminorm_sq(&t, &unit1(), 0.25, &cfg).unwrap();
        assert!((v.value - id_seminorm(0.25)).abs() < 1e-9, "{v:?}");

        // x₁·g(t): factor ∫₀¹ x² = 1/3
        let sep = Field::smooth(vec![SmoothFn::identity()], SmoothFn::sin(1.0, 2.0)).unwrap();
        let g = Field::smooth(vec![SmoothFn::constant(1.0)], SmoothFn::sin(1.0, 2.0)).unwrap();
        let a = sliced_vertical_seminorm_sq(&sep, &unit1(), 0.3, &cfg).unwrap().value;
        let b = sliced_vertical_seminorm_sq(&g, &unit1(), 0.3, &cfg).unwrap().value;
        assert!((a - b / 3.0).abs() < 1e-3 * a);
    }

    #[test]
    fn reduced_examples() {
        let cfg = QuadConfig::default();
        let omega = BoxRegion::interval(0.0, 1.0).unwrap();
        let jump = Field::step(0.0, 1.0, 0.5, 1.0).unwrap();
        assert!(reduced_seminorm_sq(&jump, &omega, 0.75, &cfg).unwrap().is_divergent());
        assert!(!reduced_seminorm_sq(&jump, &omega, 0.25, &cfg).unwrap().is_divergent());
        let c = Field::smooth(vec![SmoothFn::constant(3.0)], SmoothFn::constant(1.0)).unwrap();
        assert_eq!(reduced_seminorm_sq(&c, &omega, 0.75, &cfg).unwrap().finite().unwrap().value, 0.0);
        let lin = Field::smooth(vec![SmoothFn::identity()], SmoothFn::constant(1.0)).unwrap();
        let v = reduced_seminorm_sq(&lin, &omega, 0.75, &cfg).unwrap();
        let exact = id_seminorm(0.75);
        assert!((v.finite().unwrap().value - exact).abs() < 1e-9);
    }

    #[test]
    fn exponent_identity() {
        for d in [2usize, 3] {
            for s0 in [0.1, 0.25, 0.4] {
                assert_eq!(reduced_exponent(d - 1, s0 + 0.5), d as f64 + 2.0 * s0);
            }
        }
    }

    #[test]
    fn polar_reduction_matches_product_structure() {
        // u(x, y) = x on (0,1)²: compare with the 2-D grid oracle
        let cfg = QuadConfig::default();
        let omega = BoxRegion::unit(2);
        let u = Field::smooth(vec![SmoothFn::identity(), SmoothFn::constant(1.0)], SmoothFn::constant(1.0)).unwrap();
        let v = reduced_seminorm_sq(&u, &omega, 0.4, &cfg).unwrap();
        let v = v.finite().unwrap();
        let g = crate::quadrature::grid_on_region(&u, &omega, 0.4, 32, u64::MAX, |p| u.horizontal_value(p)).unwrap();
        assert!((v.value - g.value).abs() <= 3.0 * (g.error + v.error), "{v:?} vs {g:?}");
    }

    #[test]
    fn mean_deviation_examples() {
        let cfg = QuadConfig::default();
        let t = Field::smooth(vec![SmoothFn::constant(1.0)], SmoothFn::identity()).unwrap();
        let d = vertical_mean_deviation(&t, &unit1(), &cfg).unwrap();
        assert!((d.value - 1.0 / 12.0).abs() < 1e-14);
        let x = Field::smooth(vec![SmoothFn::identity()], SmoothFn::constant(1.0)).unwrap();
        assert_eq!(vertical_mean_deviation(&x, &unit1(), &cfg).unwrap().value, 0.0);
    }

    #[test]
    fn limit_energy_is_linear_in_the_constant() {
        let cfg = QuadConfig::default();
        let t = Field::smooth(vec![SmoothFn::constant(1.0)], SmoothFn::identity()).unwrap();
        let e = vertical_limit_energy(&t, &unit1(), 0.25, 2, &cfg).unwrap();
        let c = c_const(0.25, 2, &cfg).unwrap();
        assert!((e.value - c.value * id_seminorm(0.25)).abs() < 1e-8);
        let fake = Estimate { value: 2.0 * c.value, ..c };
        let e2 = vertical_limit_energy_with_constant(&t, &unit1(), 0.25, &fake, &cfg).unwrap();
        assert_eq!(e2.value, 2.0 * e.value);
    }
}
