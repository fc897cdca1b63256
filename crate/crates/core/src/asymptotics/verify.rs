//! Γ-limit and pointwise-limit verdicts.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{check_grid, derive_seed, extrapolate_limit, extrapolate_polynomial, fit_power_law, sweep};
use super::{Scaling, SweepField, SweepRecord, SweepSpec};
use crate::constants::{jump_limit_coefficient, sphere_measure};
use crate::domain::{jump_set, BoxRegion, Field, FieldKind, Schedule, UnitFilm};
use crate::error::{Error, Result};
use crate::quadrature::gauss::GaussRule;
use crate::quadrature::QuadConfig;
use crate::seminorms::{reduced_seminorm_sq, vertical_limit_energy, Seminorm};

/// A limit value that may be `+∞`. Serialised as a number or the string `"divergent"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Finite(f64),
    Divergent,
}

impl Limit {
    pub fn value(&self) -> Option<f64> {
        match self {
            Limit::Finite(v) => Some(*v),
            Limit::Divergent => None,
        }
    }
}

impl Serialize for Limit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Limit::Finite(v) => s.serialize_f64(*v),
            Limit::Divergent => s.serialize_str("divergent"),
        }
    }
}

impl<'de> Deserialize<'de> for Limit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Limit::Finite(v)),
            Raw::Tag(t) if t == "divergent" => Ok(Limit::Divergent),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("expected a number or \"divergent\", got \"{t}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub case_id: String,
    pub predicted: Limit,
    pub extrapolated: Limit,
    pub uncertainty: f64,
    pub rel_err: f64,
    pub pass: bool,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Inputs of a verification run.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaCase {
    /// `ε^{-2}⌊u⌋²_{s₀}(Ω_ε) → ⌊u⌋²_{s₀+1/2}(ω)` for `u = u(x')`.
    Dr {
        field: Field,
        omega: BoxRegion,
        s0: f64,
        eps_grid: Vec<f64>,
    },
    /// `ε^{2s₀-1}⌊v(x', x_d/ε)⌋²_{s₀}(Ω_ε) → C_{s₀,d} ∫_ω ⌊v(x',·)⌋²_{s₀}(0,1)`.
    Vert {
        field: Field,
        omega: BoxRegion,
        s0: f64,
        eps_grid: Vec<f64>,
    },
    /// `⌊u⌋²_{s_ε}(Ω_ε)/λ(s_ε, ε) → κ(ρ) Σ|jump|²` for a piecewise-constant `u(x₁)`.
    Jump {
        field: Field,
        schedule: Schedule,
        eps_grid: Vec<f64>,
    },
    /// `(1/2 - s)⌊u⌋²_{s+1/2}(ω) → |S^{d-2}|/(2(d-1)) ∫_ω |∇u|²` as `s → 1/2`.
    Bbm {
        field: Field,
        omega: BoxRegion,
        s_values: Vec<f64>,
    },
    /// Scaled energies that must vanish in the limit.
    Zero {
        field: Field,
        omega: BoxRegion,
        schedule: Schedule,
        scaling: Scaling,
        eps_grid: Vec<f64>,
    },
}

impl GammaCase {
    pub fn tag(&self) -> &'static str {
        match self {
            GammaCase::Dr { .. } => "DR",
            GammaCase::Vert { .. } => "VERT",
            GammaCase::Jump { .. } => "JUMP",
            GammaCase::Bbm { .. } => "BBM",
            GammaCase::Zero { .. } => "ZERO",
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            GammaCase::Jump { .. } => 0.10,
            GammaCase::Zero { .. } => 1e-2,
            _ => 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseOutcome {
    pub verdict: Verdict,
    pub records: Vec<SweepRecord>,
}

/// Runs the sweep behind `case`, extrapolates and compares with the predicted limit.
pub fn verify_gamma_limit(case_id: &str, case: &GammaCase, cfg: &QuadConfig, seed: u64) -> Result<CaseOutcome> {
    run(case_id, case, cfg, seed).map_err(|e| e.in_case(case_id))
}

fn run(case_id: &str, case: &GammaCase, cfg: &QuadConfig, seed: u64) -> Result<CaseOutcome> {
    let tol = case.tolerance();
    let spec = |field: SweepField, omega: &BoxRegion, schedule: Schedule, eps_grid: &[f64], scaling| SweepSpec {
        case_id: case_id.to_string(),
        field,
        omega: omega.clone(),
        schedule,
        eps_grid: eps_grid.to_vec(),
        scaling,
        method: None,
    };
    let (predicted, records) = match case {
        GammaCase::Dr {
            field,
            omega,
            s0,
            eps_grid,
        } => {
            require_horizontal(field)?;
            let target = match reduced_seminorm_sq(field, omega, s0 + 0.5, cfg)? {
                Seminorm::Finite(e) => Limit::Finite(e.value),
                Seminorm::Divergent { .. } => Limit::Divergent,
            };
            let sp = spec(SweepField::Fixed(field.clone()), omega, Schedule::constant(*s0)?, eps_grid, Scaling::Eps2);
            (target, sweep(&sp, cfg, seed)?)
        }
        GammaCase::Vert {
            field,
            omega,
            s0,
            eps_grid,
        } => {
            let unit = UnitFilm::new(omega.clone())?;
            let target = vertical_limit_energy(field, &unit, *s0, unit.d(), cfg)?.value;
            let sp = spec(
                SweepField::Recovery(field.clone()),
                omega,
                Schedule::constant(*s0)?,
                eps_grid,
                Scaling::Eps1m2s,
            );
            (Limit::Finite(target), sweep(&sp, cfg, seed)?)
        }
        GammaCase::Jump {
            field,
            schedule,
            eps_grid,
        } => {
            let FieldKind::PiecewiseConstant1D { lo, hi, .. } = field.kind() else {
                return Err(Error::invalid("JUMP needs a piecewise-constant field"));
            };
            let omega = BoxRegion::interval(*lo, *hi)?;
            let (regime, _) = super::classify_schedule(schedule, eps_grid)?;
            let sum_sq: f64 = jump_set(field)?.iter().map(|(_, h)| h * h).sum();
            let target = jump_limit_coefficient(regime) * sum_sq;
            let sp = spec(SweepField::Fixed(field.clone()), &omega, schedule.clone(), eps_grid, Scaling::Lambda);
            (Limit::Finite(target), sweep(&sp, cfg, seed)?)
        }
        GammaCase::Bbm {
            field,
            omega,
            s_values,
        } => {
            let target = bbm_target(field, omega)?;
            (Limit::Finite(target), bbm_records(case_id, field, omega, s_values, cfg)?)
        }
        GammaCase::Zero {
            field,
            omega,
            schedule,
            scaling,
            eps_grid,
        } => {
            let sp = spec(SweepField::Fixed(field.clone()), omega, schedule.clone(), eps_grid, *scaling);
            (Limit::Finite(0.0), sweep(&sp, cfg, seed)?)
        }
    };
    let verdict = judge(case_id, case, predicted, &records, tol)?;
    Ok(CaseOutcome { verdict, records })
}

fn require_horizontal(u: &Field) -> Result<()> {
    if !u.is_horizontal_only() {
        return Err(Error::invalid("the reduced limit needs a field independent of x_d"));
    }
    Ok(())
}

/// `|S^{d-2}|/(2(d-1)) ∫_ω |∇u|²` for a smooth `u(x')`.
fn bbm_target(u: &Field, omega: &BoxRegion) -> Result<f64> {
    require_horizontal(u)?;
    let n = omega.dim();
    if u.dim() != Some(n + 1) {
        return Err(Error::DomainMismatch(format!("field of dimension {:?} on ω in R^{n}", u.dim())));
    }
    let rule = GaussRule::new(48);
    let axes: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|i| rule.mapped(omega.lower()[i], omega.upper()[i]).collect())
        .collect();
    let mut dirichlet = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let xp: Vec<f64> = (0..n).map(|i| axes[i][idx[i]].0).collect();
        let w: f64 = (0..n).map(|i| axes[i][idx[i]].1).product();
        dirichlet += w * u.horizontal_gradient(&xp)?.iter().map(|g| g * g).sum::<f64>();
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    let d = n + 1;
    Ok(sphere_measure(d - 2) / (2.0 * (d - 1) as f64) * dirichlet)
}

/// One record per `s`, with `eps = 1/2 - s`, `s = σ = s + 1/2`, `scaled = (1/2 - s)⌊u⌋²_σ(ω)`.
fn bbm_records(case_id: &str, u: &Field, omega: &BoxRegion, s_values: &[f64], cfg: &QuadConfig) -> Result<Vec<SweepRecord>> {
    if s_values.len() < 3 {
        return Err(Error::invalid("BBM needs at least 3 values of s"));
    }
    if s_values.iter().any(|s| !(*s > 0.0 && *s < 0.5)) {
        return Err(Error::invalid("BBM values of s must lie in (0, 1/2)"));
    }
    let deltas: Vec<f64> = s_values.iter().map(|s| 0.5 - s).collect();
    check_grid(&deltas).map_err(|_| Error::invalid("BBM values of s must be strictly increasing"))?;
    s_values
        .iter()
        .zip(&deltas)
        .map(|(&s, &delta)| {
            let sigma = s + 0.5;
            let est = match reduced_seminorm_sq(u, omega, sigma, cfg)? {
                Seminorm::Finite(e) => e,
                Seminorm::Divergent { reason } => return Err(Error::Divergent(reason)),
            };
            let scaling = 1.0 / delta;
            Ok(SweepRecord {
                case_id: case_id.to_string(),
                d: omega.dim() + 1,
                s: sigma,
                eps: delta,
                scaling,
                raw: est.value,
                scaled: est.value / scaling,
                error: est.error / scaling,
                method: est.method,
            })
        })
        .collect()
}

/// Positive values growing like a negative power of `ε` without slowing down.
pub(crate) fn looks_divergent(records: &[SweepRecord]) -> bool {
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.scaled)).collect();
    if pts.len() < 3 || pts.iter().any(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return pts.iter().any(|p| p.1.is_infinite());
    }
    let Ok(fit) = fit_power_law(&pts) else {
        return false;
    };
    let n = pts.len();
    let first = (pts[1].1 / pts[0].1).ln();
    let last = (pts[n - 1].1 / pts[n - 2].1).ln();
    fit.exponent <= -0.1 && first > 0.0 && last >= 0.5 * first
}

fn judge(case_id: &str, case: &GammaCase, predicted: Limit, records: &[SweepRecord], tol: f64) -> Result<Verdict> {
    let verdict = |extrapolated, uncertainty, rel_err: f64, pass, reason| Verdict {
        case_id: case_id.to_string(),
        predicted,
        extrapolated,
        uncertainty,
        rel_err,
        pass,
        tolerance: tol,
        reason,
    };
    let diverging = looks_divergent(records);
    match (predicted, diverging) {
        (Limit::Divergent, true) => return Ok(verdict(Limit::Divergent, 0.0, 0.0, true, None)),
        (Limit::Divergent, false) => {
            let last = records.last().map_or(f64::NAN, |r| r.scaled);
            return Ok(verdict(
                Limit::Finite(last),
                0.0,
                f64::INFINITY,
                false,
                Some("predicted divergent, observed values stay bounded".into()),
            ));
        }
        (Limit::Finite(_), true) => {
            return Ok(verdict(
                Limit::Divergent,
                0.0,
                f64::INFINITY,
                false,
                Some("predicted finite, observed values diverge".into()),
            ))
        }
        (Limit::Finite(_), false) => {}
    }
    let target = predicted.value().expect("finite");
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.scaled)).collect();
    let (limit, unc) = match case {
        GammaCase::Bbm { .. } => extrapolate_polynomial(&pts, 0.0)?,
        _ => extrapolate_limit(&pts)?,
    };
    let rel_err = match case {
        GammaCase::Zero { .. } => {
            let first = pts[0].1.abs();
            if first == 0.0 {
                limit.abs()
            } else {
                limit.abs() / first
            }
        }
        _ if target == 0.0 => limit.abs(),
        _ => (limit - target).abs() / target.abs(),
    };
    let pass = rel_err <= tol;
    let reason = (!pass).then(|| format!("relative error {rel_err:.3e} exceeds tolerance {tol}"));
    Ok(verdict(Limit::Finite(limit), unc, rel_err, pass, reason))
}

/// Seeds for a list of cases run under one master seed.
pub fn case_seed(master: u64, index: usize) -> u64 {
    derive_seed(master ^ 0xC0FF_EE00_D15E_A5E5, index as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{dyadic_grid, squared_dyadic_grid};
    use crate::domain::SmoothFn;
    use std::f64::consts::PI;

    fn unit() -> BoxRegion {
        BoxRegion::interval(0.0, 1.0).unwrap()
    }

    fn cos_pi() -> Field {
        Field::smooth(vec![SmoothFn::cos(1.0, PI)], SmoothFn::constant(1.0)).unwrap()
    }

    #[test]
    fn constant_field_dr_passes() {
        let case = GammaCase::Dr {
            field: Field::smooth(vec![SmoothFn::constant(2.0)], SmoothFn::constant(1.0)).unwrap(),
            omega: unit(),
            s0: 0.25,
            eps_grid: dyadic_grid(3, 8),
        };
        let v = verify_gamma_limit("c", &case, &QuadConfig::default(), 0).unwrap().verdict;
        assert_eq!(v.predicted, Limit::Finite(0.0));
        assert_eq!(v.extrapolated, Limit::Finite(0.0));
        assert!(v.pass);
    }

    #[test]
    fn zero_limit_between_the_scalings() {
        let case = GammaCase::Zero {
            field: cos_pi(),
            omega: unit(),
            schedule: Schedule::constant(0.25).unwrap(),
            scaling: Scaling::EpsPower(1.0),
            eps_grid: dyadic_grid(3, 8),
        };
        let out = verify_gamma_limit("z", &case, &QuadConfig::default(), 0).unwrap();
        assert!(out.verdict.pass, "{:?}", out.verdict);
        // below ε² the scaled values blow up
        let case = GammaCase::Zero {
            field: cos_pi(),
            omega: unit(),
            schedule: Schedule::constant(0.25).unwrap(),
            scaling: Scaling::EpsPower(3.0),
            eps_grid: dyadic_grid(3, 8),
        };
        let out = verify_gamma_limit("z", &case, &QuadConfig::default(), 0).unwrap();
        assert!(out.records.last().unwrap().scaled > 10.0 * out.records[0].scaled);
        assert!(!out.verdict.pass);
    }

    #[test]
    fn jump_case_iii_tends_to_two() {
        let case = GammaCase::Jump {
            field: Field::step(0.0, 1.0, 0.5, 1.0).unwrap(),
            schedule: Schedule::power(1.0).unwrap(),
            eps_grid: squared_dyadic_grid(2, 8),
        };
        let v = verify_gamma_limit("j", &case, &QuadConfig::default(), 0).unwrap().verdict;
        assert_eq!(v.predicted, Limit::Finite(2.0));
        assert!(v.pass, "{v:?}");
    }

    #[test]
    fn divergent_prediction_matches_divergent_sweep() {
        let case = GammaCase::Dr {
            field: Field::step(0.0, 1.0, 0.5, 1.0).unwrap(),
            omega: unit(),
            s0: 0.25,
            eps_grid: dyadic_grid(3, 8),
        };
        let v = verify_gamma_limit("d", &case, &QuadConfig::default(), 0).unwrap().verdict;
        assert_eq!(v.predicted, Limit::Divergent);
        assert_eq!(v.extrapolated, Limit::Divergent);
        assert!(v.pass);
    }

    #[test]
    fn bad_inputs_are_rejected_with_case_id() {
        let case = GammaCase::Jump {
            field: cos_pi(),
            schedule: Schedule::power(1.0).unwrap(),
            eps_grid: dyadic_grid(3, 8),
        };
        let err = verify_gamma_limit("nope", &case, &QuadConfig::default(), 0).unwrap_err();
        assert!(matches!(err, Error::Case { ref case_id, .. } if case_id == "nope"));
        let case = GammaCase::Bbm {
            field: cos_pi(),
            omega: unit(),
            s_values: vec![0.45, 0.4],
        };
        assert!(verify_gamma_limit("b", &case, &QuadConfig::default(), 0).is_err());
    }

    #[test]
    fn limit_serialisation() {
        for l in [Limit::Finite(0.1 + 0.2), Limit::Divergent] {
            let s = serde_json::to_string(&l).unwrap();
            assert_eq!(serde_json::from_str::<Limit>(&s).unwrap(), l);
        }
        assert_eq!(serde_json::to_string(&Limit::Divergent).unwrap(), "\"divergent\"");
        assert!(serde_json::from_str::<Limit>("\"finite\"").is_err());
    }
}
