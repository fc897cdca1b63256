//! Power-law fits and limit extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r2: f64,
}

/// Least-squares line through `(log ε, log value)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(e, v)| !(*e > 0.0 && *v > 0.0)) {
        return Err(Error::Fit(format!("log-log fit needs positive data, got {p:?}")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all eps values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(PowerFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r2,
    })
}

/// Aitken Δ² limit of the value sequence, `(limit, uncertainty)`.
///
/// The accelerated value of the last triple is returned with uncertainty
/// `|accelerated - last|`; a vanishing second difference falls back to the
/// last value with the last two-point gap as uncertainty.
pub fn extrapolate_limit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("extrapolation needs at least 3 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::Fit("eps values must be strictly decreasing".into()));
    }
    let n = points.len();
    let (a, b, c) = (points[n - 3].1, points[n - 2].1, points[n - 1].1);
    let d1 = b - a;
    let d2 = c - b;
    let den = d2 - d1;
    let scale = a.abs().max(b.abs()).max(c.abs());
    if den == 0.0 || den.abs() <= 1e-13 * scale || !den.is_finite() {
        return Ok((c, d2.abs()));
    }
    let lim = c - d2 * d2 / den;
    if !lim.is_finite() {
        return Ok((c, d2.abs()));
    }
    Ok((lim, (lim - c).abs()))
}

/// Polynomial interpolation through `(x, y)` evaluated at `x0` (Neville).
/// Uncertainty is the gap to the interpolant that drops the first point.
pub fn extrapolate_polynomial(points: &[(f64, f64)], x0: f64) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Fit("polynomial extrapolation needs at least 2 points".into()));
    }
    let neville = |pts: &[(f64, f64)]| -> Result<f64> {
        let mut p: Vec<f64> = pts.iter().map(|q| q.1).collect();
        let n = pts.len();
        for k in 1..n {
            for i in 0..n - k {
                let (xi, xj) = (pts[i].0, pts[i + k].0);
                if xi == xj {
                    return Err(Error::Fit("duplicate abscissae".into()));
                }
                p[i] = ((x0 - xj) * p[i] + (xi - x0) * p[i + 1]) / (xi - xj);
            }
        }
        Ok(p[0])
    };
    let full = neville(points)?;
    let reduced = neville(&points[1..])?;
    Ok((full, (full - reduced).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dyadic(k: i32) -> f64 {
        2f64.powi(-k)
    }

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = (3..9).map(|k| (dyadic(k), 3.0 * dyadic(k).powi(2))).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = (3..9).map(|k| (dyadic(k), dyadic(k).powf(1.5))).collect();
        assert!((fit_power_law(&pts).unwrap().exponent - 1.5).abs() < 1e-12);
        assert!(fit_power_law(&[(0.1, 1.0), (0.01, 0.0), (0.001, 1.0)]).is_err());
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (3..9)
            .map(|k| {
                let e = dyadic(k);
                (e, e * e * (1.0 + 0.1 * (2.0 * rng.gen::<f64>() - 1.0)))
            })
            .collect();
        assert!((fit_power_law(&pts).unwrap().exponent - 2.0).abs() < 0.1);
    }

    #[test]
    fn aitken_examples() {
        let c: Vec<(f64, f64)> = (3..9).map(|k| (dyadic(k), 4.5)).collect();
        assert_eq!(extrapolate_limit(&c).unwrap(), (4.5, 0.0));

        let g: Vec<(f64, f64)> = (0..8).map(|k| (dyadic(k), 1.25 + 0.7 * 0.5f64.powi(k))).collect();
        let (l, _) = extrapolate_limit(&g).unwrap();
        assert!((l - 1.25).abs() < 1e-10);

        let h: Vec<(f64, f64)> = (1..=8).map(|k| (1.0 / k as f64, 2.0 + 1.0 / k as f64)).collect();
        let (l, u) = extrapolate_limit(&h).unwrap();
        assert!((l - 2.0).abs() <= 10.0 * u);

        assert!(extrapolate_limit(&[(0.1, 1.0), (0.2, 1.0), (0.05, 1.0)]).is_err());
    }

    #[test]
    fn neville_is_exact_on_quadratics() {
        let f = |x: f64| 2.0 - 3.0 * x + 0.5 * x * x;
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.02].iter().map(|&x| (x, f(x))).collect();
        let (v, _) = extrapolate_polynomial(&pts, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }
}
