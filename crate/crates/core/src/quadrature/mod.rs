//! Squared Gagliardo seminorms `∫_A∫_A |u(x)-u(y)|² / |x-y|^{n+2s}`.
//!
//! Three engines: stratified Monte Carlo (`mc`), a midpoint double-sum
//! oracle (`grid`) and the semi-analytic lag reduction (`weight`) for
//! `d = 2` fields that depend on a single coordinate.

pub mod gauss;
pub(crate) mod grid;
pub(crate) mod mc;
pub mod weight;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{BoxRegion, Field, FieldKind, Regularity, ThinFilm};
use crate::error::{Error, Result};
use weight::{power_lag_integral, weighted_lag_integral, Profile, VerticalWeight};

pub use weight::{vertical_weight, vertical_weight_quadrature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    Grid,
    Weight,
    /// Deterministic 1-D or tensor quadrature (reduced and sliced seminorms).
    Quadrature,
    ClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Grid => "grid",
            Method::Weight => "weight",
            Method::Quadrature => "quadrature",
            Method::ClosedForm => "closed_form",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(Method::Mc),
            "grid" => Ok(Method::Grid),
            "weight" => Ok(Method::Weight),
            "quadrature" => Ok(Method::Quadrature),
            "closed_form" => Ok(Method::ClosedForm),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// A quadrature result with its error bar, engine and budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub method: Method,
    pub budget: u64,
    pub seed: Option<u64>,
}

impl Estimate {
    pub fn zero(method: Method) -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            method,
            budget: 0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    pub shells: usize,
    pub nodes_per_axis: usize,
    pub rel_tol: f64,
    pub max_budget: u64,
    /// Monte Carlo samples per estimate, split evenly across shells.
    pub samples: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            shells: 24,
            nodes_per_axis: 32,
            rel_tol: 1e-3,
            max_budget: 1 << 32,
            samples: 1 << 18,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shells < 1 {
            return Err(Error::invalid("shells must be >= 1"));
        }
        if self.nodes_per_axis < 4 {
            return Err(Error::invalid("nodes_per_axis must be >= 4"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid(format!("rel_tol must lie in (0,1), got {}", self.rel_tol)));
        }
        if self.samples < 2 {
            return Err(Error::invalid("samples must be >= 2"));
        }
        Ok(())
    }

    /// Tolerance handed to the deterministic adaptive rules.
    pub(crate) fn deterministic_tol(&self) -> f64 {
        (self.rel_tol * 1e-6).max(1e-13)
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("s must lie in (0,1), got {s}")));
    }
    Ok(())
}

fn check_divergence(u: &Field, s: f64) -> Result<()> {
    if u.regularity() == Regularity::Jump && s >= 0.5 {
        return Err(Error::Divergent(format!(
            "piecewise-constant field has infinite H^s seminorm for s = {s} >= 1/2"
        )));
    }
    Ok(())
}

fn check_dim(u: &Field, dim: usize) -> Result<()> {
    match u.dim() {
        Some(n) if n != dim => Err(Error::DomainMismatch(format!(
            "field lives in R^{n}, domain in R^{dim}"
        ))),
        _ => Ok(()),
    }
}

fn grid_order(u: &Field, s: f64) -> f64 {
    match u.regularity() {
        Regularity::Jump => 1.0 - 2.0 * s,
        Regularity::Lipschitz => 2.0 - 2.0 * s,
    }
}

/// `⌊u⌋²_s(Ω_ε)` by the requested engine.
pub fn gagliardo_sq(
    u: &Field,
    dom: &ThinFilm,
    s: f64,
    cfg: &QuadConfig,
    method: Method,
    seed: u64,
) -> Result<Estimate> {
    check_s(s)?;
    cfg.validate()?;
    check_dim(u, dom.d())?;
    check_divergence(u, s)?;
    if u.is_constant() {
        return Ok(Estimate {
            seed: (method == Method::Mc).then_some(seed),
            ..Estimate::zero(method)
        });
    }
    let region = dom.region();
    let e = dom.d() as f64 + 2.0 * s;
    let f = |p: &[f64]| u.value_at(p);
    let est = match method {
        Method::Mc => {
            let jumps: Vec<f64> = match u.kind() {
                FieldKind::PiecewiseConstant1D { breakpoints, .. } => breakpoints.clone(),
                _ => Vec::new(),
            };
            let tail = u.regularity().lag_power() - 2.0 * s;
            let (value, error) = mc::stratified(&f, &region, e, cfg.shells, cfg.samples, seed, &jumps, tail);
            Ok(Estimate {
                value,
                error,
                method,
                budget: cfg.samples,
                seed: Some(seed),
            })
        }
        Method::Grid => grid_oracle(u, dom, s, cfg.nodes_per_axis, cfg.max_budget),
        Method::Weight => weight_seminorm_sq(u, dom, s, cfg),
        other => Err(Error::unsupported(format!("method '{other}' for film seminorms"))),
    }?;
    if !(est.value.is_finite() && est.error.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite estimate {} ± {} (s = {s}, eps = {})",
            est.value,
            est.error,
            dom.eps()
        )));
    }
    Ok(est)
}

/// Brute-force midpoint oracle with `n` cells per axis.
pub fn grid_oracle(u: &Field, dom: &ThinFilm, s: f64, n: usize, max_budget: u64) -> Result<Estimate> {
    check_s(s)?;
    check_dim(u, dom.d())?;
    check_divergence(u, s)?;
    let region = dom.region();
    grid_on_region(u, &region, s, n, max_budget, |p| u.value_at(p))
}

pub(crate) fn grid_on_region(
    u: &Field,
    region: &BoxRegion,
    s: f64,
    n: usize,
    max_budget: u64,
    f: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<Estimate> {
    if n < 4 {
        return Err(Error::invalid(format!("grid oracle needs n >= 4, got {n}")));
    }
    if u.is_constant() {
        return Ok(Estimate {
            budget: grid::pair_count(n, region.dim()).unwrap_or(u64::MAX),
            ..Estimate::zero(Method::Grid)
        });
    }
    let e = region.dim() as f64 + 2.0 * s;
    let (value, error) = grid::oracle(&f, region, e, n, grid_order(u, s), max_budget)?;
    Ok(Estimate {
        value,
        error,
        method: Method::Grid,
        budget: grid::pair_count(n, region.dim()).unwrap_or(u64::MAX),
        seed: None,
    })
}

/// 1-D profile of an `x₁`-dependent field over `(lo, hi)`.
pub(crate) fn horizontal_profile<'a>(
    u: &'a Field,
    f: &'a (dyn Fn(f64) -> f64 + Sync),
    lo: f64,
    hi: f64,
) -> Result<Profile<'a>> {
    Ok(match u.kind() {
        FieldKind::PiecewiseConstant1D { .. } => Profile::Pieces(u.pwc_pieces(lo, hi)?),
        _ => Profile::Function {
            f,
            lo,
            hi,
            nodes: u.grid_nodes(0).into_iter().filter(|x| *x >= lo && *x <= hi).collect(),
        },
    })
}

/// Exact-integrand evaluation of `⌊v(x₁)⌋²_s((a,b)×(0,ε))` for piecewise-constant `v`.
pub fn pwc_seminorm_sq(v: &Field, eps: f64, s: f64) -> Result<Estimate> {
    let FieldKind::PiecewiseConstant1D { lo, hi, .. } = v.kind() else {
        return Err(Error::unsupported("pwc_seminorm_sq needs a piecewise-constant field"));
    };
    let omega = BoxRegion::interval(*lo, *hi)?;
    let film = ThinFilm::new(omega, eps)?;
    weight_seminorm_sq(v, &film, s, &QuadConfig::default())
}

/// Lag-reduction engine for `d = 2` fields depending on `x₁` only or on `x₂` only.
pub fn weight_seminorm_sq(u: &Field, dom: &ThinFilm, s: f64, cfg: &QuadConfig) -> Result<Estimate> {
    check_s(s)?;
    check_dim(u, dom.d())?;
    check_divergence(u, s)?;
    if dom.d() != 2 {
        return Err(Error::unsupported("the weight engine handles d = 2 films only"));
    }
    if u.is_constant() {
        return Ok(Estimate::zero(Method::Weight));
    }
    let tol = cfg.deterministic_tol();
    let vw = VerticalWeight::new(s, 2)?;
    let (lo, hi) = (dom.omega().lower()[0], dom.omega().upper()[0]);
    let eps = dom.eps();
    let q = if u.is_horizontal_only() {
        let f = |x: f64| u.horizontal_value(&[x]);
        let profile = horizontal_profile(u, &f, lo, hi)?;
        weighted_lag_integral(
            &profile,
            |r| vw.eval(r, eps),
            vw.near_coefficient() * eps,
            vw.near_exponent(),
            eps,
            tol,
        )?
    } else if u.is_vertical_only() {
        // same reduction with the roles of x₁ and x₂ exchanged
        let len = hi - lo;
        let f = |t: f64| u.value_at(&[lo, t]);
        let nodes = u.grid_nodes(1);
        let profile = Profile::Function {
            f: &f,
            lo: 0.0,
            hi: eps,
            nodes,
        };
        weighted_lag_integral(
            &profile,
            |h| vw.eval(h, len),
            vw.near_coefficient() * len,
            vw.near_exponent(),
            len,
            tol,
        )?
    } else {
        return Err(Error::unsupported(
            "the weight engine needs a field depending on x1 only or on x2 only",
        ));
    };
    Ok(Estimate {
        value: q.value.max(0.0),
        error: q.error,
        method: Method::Weight,
        budget: q.evals,
        seed: None,
    })
}

/// 1-D seminorm `2∫₀^L G(r) r^{-e} dr` of a profile, used by the reduced and sliced functionals.
pub(crate) fn profile_seminorm_sq(profile: &Profile, e: f64, tol: f64) -> Result<(f64, f64, u64)> {
    let q = power_lag_integral(profile, e, tol)?;
    Ok((q.value.max(0.0), q.error, q.evals))
}
