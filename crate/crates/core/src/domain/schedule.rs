use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent rule `ε ↦ s_ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    Constant(f64),
    /// `s_ε = c / |log ε|`.
    LogReciprocal(f64),
    /// `s_ε = ε^α`.
    Power(f64),
    /// Tabulated `(ε, s)` pairs; lookups interpolate linearly in `log ε`.
    Table(Vec<(f64, f64)>),
}

impl Schedule {
    pub fn constant(s0: f64) -> Result<Self> {
        if !(s0 > 0.0 && s0 < 0.5) {
            return Err(Error::invalid(format!("constant exponent must lie in (0, 1/2), got {s0}")));
        }
        Ok(Schedule::Constant(s0))
    }

    pub fn log_reciprocal(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("log-reciprocal coefficient must be > 0, got {c}")));
        }
        Ok(Schedule::LogReciprocal(c))
    }

    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("power exponent must be > 0, got {alpha}")));
        }
        Ok(Schedule::Power(alpha))
    }

    pub fn table(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("empty schedule table"));
        }
        for &(e, s) in &pairs {
            if !(e > 0.0 && e < 1.0) || !(s > 0.0 && s < 1.0) {
                return Err(Error::invalid(format!(
                    "table entries need eps in (0,1) and s in (0,1), got ({e}, {s})"
                )));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("duplicate eps in schedule table"));
        }
        Ok(Schedule::Table(pairs))
    }

    /// `s_ε`, guaranteed to lie in `(0, 1)`.
    pub fn exponent_at(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid(format!("schedules are defined for eps in (0,1), got {eps}")));
        }
        let s = match self {
            Schedule::Constant(s0) => *s0,
            Schedule::LogReciprocal(c) => c / eps.ln().abs(),
            Schedule::Power(a) => eps.powf(*a),
            Schedule::Table(pairs) => table_lookup(pairs, eps)?,
        };
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::invalid(format!("schedule yields s = {s} outside (0,1) at eps = {eps}")));
        }
        Ok(s)
    }
}

fn table_lookup(pairs: &[(f64, f64)], eps: f64) -> Result<f64> {
    // pairs sorted by decreasing eps
    if let Some(&(_, s)) = pairs.iter().find(|(e, _)| (e - eps).abs() <= 1e-14 * eps) {
        return Ok(s);
    }
    let i = pairs.iter().position(|(e, _)| *e < eps);
    match i {
        Some(i) if i > 0 => {
            let (e0, s0) = pairs[i - 1];
            let (e1, s1) = pairs[i];
            let t = (eps.ln() - e0.ln()) / (e1.ln() - e0.ln());
            Ok(s0 + t * (s1 - s0))
        }
        _ => Err(Error::invalid(format!("eps = {eps} lies outside the schedule table"))),
    }
}
