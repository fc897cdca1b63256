use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]` in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid(format!(
                "box corners must have equal nonzero length, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                return Err(Error::invalid(format!(
                    "box axis {i} must satisfy lower < upper with finite ends, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    /// The unit cube `(0,1)^n`.
    pub fn unit(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn extents(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.extent(i)).collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.extent(i)).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.extent(i).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Closed-box membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::DomainMismatch(format!(
                "shift has {} components for a {}-dimensional box",
                shift.len(),
                self.dim()
            )));
        }
        Self::new(
            self.lower.iter().zip(shift).map(|(a, b)| a + b).collect(),
            self.upper.iter().zip(shift).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn dilated(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid(format!("dilation factor must be > 0, got {factor}")));
        }
        Self::new(
            self.lower.iter().map(|a| a * factor).collect(),
            self.upper.iter().map(|a| a * factor).collect(),
        )
    }

    /// Product `self × (lo, hi)`.
    pub fn extruded(&self, lo: f64, hi: f64) -> Result<Self> {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower.push(lo);
        upper.push(hi);
        Self::new(lower, upper)
    }

    /// Drop the last axis.
    pub fn base(&self) -> Result<Self> {
        if self.dim() < 2 {
            return Err(Error::invalid("cannot drop the only axis of a box"));
        }
        let n = self.dim() - 1;
        Self::new(self.lower[..n].to_vec(), self.upper[..n].to_vec())
    }
}

/// The thin film `ω × (0, ε)` in `R^d`, `d ∈ {2, 3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinFilm {
    omega: BoxRegion,
    eps: f64,
}

impl ThinFilm {
    pub fn new(omega: BoxRegion, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("film thickness must be > 0, got {eps}")));
        }
        let d = omega.dim() + 1;
        if !(2..=3).contains(&d) {
            return Err(Error::unsupported(format!(
                "films of dimension {d} (only d = 2, 3 are supported)"
            )));
        }
        Ok(Self { omega, eps })
    }

    pub fn d(&self) -> usize {
        self.omega.dim() + 1
    }

    pub fn omega(&self) -> &BoxRegion {
        &self.omega
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The film as a box in `R^d`.
    pub fn region(&self) -> BoxRegion {
        self.omega
            .extruded(0.0, self.eps)
            .expect("validated film always extrudes")
    }
}

/// The reference film `ω × (0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitFilm {
    omega: BoxRegion,
}

impl UnitFilm {
    pub fn new(omega: BoxRegion) -> Result<Self> {
        ThinFilm::new(omega.clone(), 1.0)?;
        Ok(Self { omega })
    }

    pub fn d(&self) -> usize {
        self.omega.dim() + 1
    }

    pub fn omega(&self) -> &BoxRegion {
        &self.omega
    }

    pub fn film(&self) -> ThinFilm {
        ThinFilm {
            omega: self.omega.clone(),
            eps: 1.0,
        }
    }

    pub fn region(&self) -> BoxRegion {
        self.film().region()
    }
}

impl From<&UnitFilm> for ThinFilm {
    fn from(unit: &UnitFilm) -> Self {
        unit.film()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_validation() {
        assert!(BoxRegion::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxRegion::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BoxRegion::new(vec![], vec![]).is_err());
        let b = BoxRegion::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(b.volume(), 4.0);
        assert!((b.diameter() - 8f64.sqrt()).abs() < 1e-15);
        assert!(b.contains(&[2.0, 1.0]));
        assert!(!b.contains(&[2.1, 0.0]));
    }

    #[test]
    fn film_dimensions() {
        let omega = BoxRegion::interval(0.0, 1.0).unwrap();
        let film = ThinFilm::new(omega.clone(), 0.25).unwrap();
        assert_eq!(film.d(), 2);
        assert_eq!(film.region().upper(), &[1.0, 0.25]);
        assert!(ThinFilm::new(omega.clone(), 0.0).is_err());
        assert!(ThinFilm::new(omega, -1.0).is_err());
        assert!(ThinFilm::new(BoxRegion::unit(3), 0.1).is_err());
    }
}
