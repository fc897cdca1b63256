//! ε-sweeps of scaled seminorms, regime classification and Γ-limit verdicts.

mod fit;
mod verify;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{lambda_scale, PconvCase, RegimeClass};
use crate::domain::{rescale_from_unit, BoxRegion, Field, Schedule, ThinFilm, UnitFilm};
use crate::error::{Error, Result};
use crate::quadrature::{gagliardo_sq, Method, QuadConfig};

pub use fit::{extrapolate_limit, extrapolate_polynomial, fit_power_law, PowerFit};
pub use verify::{case_seed, verify_gamma_limit, CaseOutcome, GammaCase, Limit, Verdict};

/// Divisor applied to raw seminorms along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scaling {
    /// `ε²`
    Eps2,
    /// `ε^{1-2s}`
    Eps1m2s,
    /// `λ(s, ε)` of the schedule's regime.
    Lambda,
    /// `ε^p`
    EpsPower(f64),
}

impl Scaling {
    pub fn factor(&self, s: f64, eps: f64, regime: Option<RegimeClass>) -> Result<f64> {
        Ok(match self {
            Scaling::Eps2 => eps * eps,
            Scaling::Eps1m2s => eps.powf(1.0 - 2.0 * s),
            Scaling::Lambda => {
                let r = regime.ok_or_else(|| Error::invalid("lambda scaling needs a regime"))?;
                lambda_scale(s, eps, r)
            }
            Scaling::EpsPower(p) => eps.powf(*p),
        })
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scaling::Eps2 => f.write_str("eps2"),
            Scaling::Eps1m2s => f.write_str("eps_1m2s"),
            Scaling::Lambda => f.write_str("lambda"),
            Scaling::EpsPower(p) => write!(f, "eps_pow:{p}"),
        }
    }
}

impl FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps2" => Ok(Scaling::Eps2),
            "eps_1m2s" => Ok(Scaling::Eps1m2s),
            "lambda" => Ok(Scaling::Lambda),
            other => match other.strip_prefix("eps_pow:") {
                Some(p) => p
                    .parse::<f64>()
                    .map(Scaling::EpsPower)
                    .map_err(|_| Error::invalid(format!("bad scaling exponent in '{other}'"))),
                None => Err(Error::invalid(format!(
                    "unknown scaling '{other}' (expected eps2, eps_1m2s, lambda or eps_pow:<p>)"
                ))),
            },
        }
    }
}

/// The family `u_ε` swept over the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepField {
    /// The same `u` restricted to every `Ω_ε`.
    Fixed(Field),
    /// `u_ε(x', x_d) = v(x', x_d/ε)` for a field `v` on the unit film.
    Recovery(Field),
}

impl SweepField {
    pub fn field(&self) -> &Field {
        match self {
            SweepField::Fixed(f) | SweepField::Recovery(f) => f,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub case_id: String,
    pub field: SweepField,
    pub omega: BoxRegion,
    pub schedule: Schedule,
    pub eps_grid: Vec<f64>,
    pub scaling: Scaling,
    /// Engine override; `None` picks the best engine for the field.
    pub method: Option<Method>,
}

/// One row of a sweep; `error` is the uncertainty of `scaled`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub case_id: String,
    pub d: usize,
    pub s: f64,
    pub eps: f64,
    pub scaling: f64,
    pub raw: f64,
    pub scaled: f64,
    pub error: f64,
    pub method: Method,
}

/// `ε = 2^{-k}` for `k = k_min..=k_max`.
pub fn dyadic_grid(k_min: i32, k_max: i32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 2f64.powi(-k)).collect()
}

/// `ε = 2^{-2^k}` for `k = k_min..=k_max`; `|log ε|` doubles at each step.
pub fn squared_dyadic_grid(k_min: u32, k_max: u32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 2f64.powi(-(1i32 << k))).collect()
}

pub(crate) fn check_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return Err(Error::invalid("empty eps grid"));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::invalid("eps grid values must lie in (0,1)"));
    }
    if eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("eps grid must be strictly decreasing"));
    }
    Ok(())
}

/// Per-record seed split from a master seed (SplitMix64 finaliser).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Regime `ρ = lim ε^{s_ε}` and the matching case of the jump-energy limit.
///
/// Power schedules `ε^α` are accepted for `α ≤ 2`, where `ε^α ≫ ε²/|log ε|`
/// still holds; steeper schedules are refused. Tables are classified from
/// the sequence `ε^{s_ε}` along their own nodes.
pub fn classify_schedule(sch: &Schedule, eps_grid: &[f64]) -> Result<(RegimeClass, PconvCase)> {
    check_grid(eps_grid)?;
    match sch {
        Schedule::Constant(_) => Ok((RegimeClass::RhoZero, PconvCase::I)),
        Schedule::LogReciprocal(c) => Ok((RegimeClass::mid((-c).exp())?, PconvCase::II)),
        Schedule::Power(a) => {
            if *a <= 2.0 {
                Ok((RegimeClass::RhoOne, PconvCase::III))
            } else {
                Err(Error::Unclassifiable(format!(
                    "power schedule eps^{a} decays faster than eps^2/|log eps|"
                )))
            }
        }
        Schedule::Table(pairs) => classify_table(pairs),
    }
}

fn classify_table(pairs: &[(f64, f64)]) -> Result<(RegimeClass, PconvCase)> {
    if pairs.len() < 3 {
        return Err(Error::Unclassifiable("tables need at least 3 entries".into()));
    }
    // pairs are sorted by decreasing eps
    let rho: Vec<f64> = pairs.iter().map(|(e, s)| e.powf(*s)).collect();
    let incs: Vec<f64> = rho.windows(2).map(|w| w[1] - w[0]).collect();
    const TOL: f64 = 1e-3;
    let up = incs.iter().all(|d| *d >= -TOL);
    let down = incs.iter().all(|d| *d <= TOL);
    if !(up || down) {
        return Err(Error::Unclassifiable(format!(
            "eps^s along the table is not monotone: {rho:?}"
        )));
    }
    let last = *rho.last().expect("nonempty");
    let pts: Vec<(f64, f64)> = pairs.iter().zip(&rho).map(|((e, _), r)| (*e, *r)).collect();
    let (lim, _) = extrapolate_limit(&pts).unwrap_or((last, 0.0));
    let rho_inf = if lim.is_finite() { lim.clamp(0.0, 1.0) } else { last };
    if rho_inf < 0.02 {
        Ok((RegimeClass::RhoZero, PconvCase::I))
    } else if rho_inf > 0.98 {
        Ok((RegimeClass::RhoOne, PconvCase::III))
    } else {
        Ok((RegimeClass::mid(rho_inf)?, PconvCase::II))
    }
}

pub(crate) fn best_method(u: &Field, d: usize) -> Method {
    if d == 2 && (u.is_horizontal_only() || u.is_vertical_only()) {
        Method::Weight
    } else {
        Method::Mc
    }
}

/// Scaled seminorms `⌊u_ε⌋²_{s_ε}(Ω_ε) / scaling(s_ε, ε)` along the grid.
pub fn sweep(spec: &SweepSpec, cfg: &QuadConfig, seed: u64) -> Result<Vec<SweepRecord>> {
    let id = spec.case_id.as_str();
    check_grid(&spec.eps_grid).map_err(|e| e.in_case(id))?;
    let regime = match spec.scaling {
        Scaling::Lambda => Some(classify_schedule(&spec.schedule, &spec.eps_grid).map_err(|e| e.in_case(id))?.0),
        _ => None,
    };
    let d = spec.omega.dim() + 1;
    spec.eps_grid
        .par_iter()
        .enumerate()
        .map(|(k, &eps)| -> Result<SweepRecord> {
            let s = spec.schedule.exponent_at(eps)?;
            let (u, film) = match &spec.field {
                SweepField::Fixed(u) => (u.clone(), ThinFilm::new(spec.omega.clone(), eps)?),
                SweepField::Recovery(v) => rescale_from_unit(v, &UnitFilm::new(spec.omega.clone())?, eps)?,
            };
            let method = spec.method.unwrap_or_else(|| best_method(&u, d));
            let est = gagliardo_sq(&u, &film, s, cfg, method, derive_seed(seed, k as u64))?;
            let scaling = spec.scaling.factor(s, eps, regime)?;
            Ok(SweepRecord {
                case_id: spec.case_id.clone(),
                d,
                s,
                eps,
                scaling,
                raw: est.value,
                scaled: est.value / scaling,
                error: est.error / scaling,
                method: est.method,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .map(|r| r.map_err(|e| e.in_case(id)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SmoothFn;

    #[test]
    fn classification() {
        let g = dyadic_grid(3, 8);
        assert_eq!(
            classify_schedule(&Schedule::constant(0.25).unwrap(), &g).unwrap(),
            (RegimeClass::RhoZero, PconvCase::I)
        );
        let (r, c) = classify_schedule(&Schedule::log_reciprocal(1.0).unwrap(), &g).unwrap();
        assert_eq!(c, PconvCase::II);
        assert!((r.rho() - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(
            classify_schedule(&Schedule::power(1.0).unwrap(), &g).unwrap(),
            (RegimeClass::RhoOne, PconvCase::III)
        );
        assert!(matches!(
            classify_schedule(&Schedule::power(3.0).unwrap(), &g),
            Err(Error::Unclassifiable(_))
        ));
        // grid independence for symbolic rules
        for sch in [Schedule::constant(0.1).unwrap(), Schedule::log_reciprocal(2.0).unwrap()] {
            assert_eq!(
                classify_schedule(&sch, &dyadic_grid(3, 8)).unwrap(),
                classify_schedule(&sch, &dyadic_grid(2, 20)).unwrap()
            );
        }
    }

    #[test]
    fn table_classification() {
        let g = dyadic_grid(3, 8);
        let mk = |f: &dyn Fn(f64) -> f64| {
            Schedule::table(squared_dyadic_grid(2, 7).into_iter().map(|e| (e, f(e))).collect()).unwrap()
        };
        let mid = mk(&|e: f64| 1.0 / e.ln().abs());
        let (r, c) = classify_schedule(&mid, &g).unwrap();
        assert_eq!(c, PconvCase::II);
        assert!((r.rho() - (-1f64).exp()).abs() < 1e-3);
        assert_eq!(classify_schedule(&mk(&|_| 0.3), &g).unwrap().1, PconvCase::I);
        assert_eq!(classify_schedule(&mk(&|e| e.sqrt()), &g).unwrap().1, PconvCase::III);
        let wobbly = Schedule::table(vec![(0.5, 0.9), (0.25, 0.05), (0.125, 0.9), (0.0625, 0.05)]).unwrap();
        assert!(matches!(classify_schedule(&wobbly, &g), Err(Error::Unclassifiable(_))));
    }

    #[test]
    fn scaling_parse_round_trip() {
        for s in [Scaling::Eps2, Scaling::Eps1m2s, Scaling::Lambda, Scaling::EpsPower(3.0)] {
            assert_eq!(s.to_string().parse::<Scaling>().unwrap(), s);
        }
        assert!("eps3".parse::<Scaling>().is_err());
    }

    #[test]
    fn constant_field_sweeps_to_zero() {
        let spec = SweepSpec {
            case_id: "c".into(),
            field: SweepField::Fixed(Field::smooth(vec![SmoothFn::constant(1.0)], SmoothFn::constant(1.0)).unwrap()),
            omega: BoxRegion::interval(0.0, 1.0).unwrap(),
            schedule: Schedule::constant(0.25).unwrap(),
            eps_grid: dyadic_grid(3, 5),
            scaling: Scaling::Eps2,
            method: None,
        };
        let recs = sweep(&spec, &QuadConfig::default(), 0).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.scaled == 0.0 && r.raw == 0.0));
    }

    #[test]
    fn errors_carry_the_case_id() {
        let spec = SweepSpec {
            case_id: "bad".into(),
            field: SweepField::Fixed(Field::step(0.0, 1.0, 0.5, 1.0).unwrap()),
            omega: BoxRegion::interval(0.0, 1.0).unwrap(),
            schedule: Schedule::table(vec![(0.5, 0.6), (0.25, 0.7), (0.125, 0.8)]).unwrap(),
            eps_grid: vec![0.5, 0.25],
            scaling: Scaling::Eps2,
            method: None,
        };
        match sweep(&spec, &QuadConfig::default(), 0) {
            Err(Error::Case { case_id, source }) => {
                assert_eq!(case_id, "bad");
                assert!(matches!(*source, Error::Divergent(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
