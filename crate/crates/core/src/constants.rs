//! Kernel constants, jump-energy scalings and sphere measures.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::gauss::integrate;
use crate::quadrature::{Estimate, Method, QuadConfig};

/// `ρ = lim ε^{s_ε}` class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegimeClass {
    RhoZero,
    RhoMid(f64),
    RhoOne,
}

impl RegimeClass {
    pub fn mid(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid(format!("RhoMid needs rho in (0,1), got {rho}")));
        }
        Ok(RegimeClass::RhoMid(rho))
    }

    pub fn rho(&self) -> f64 {
        match self {
            RegimeClass::RhoZero => 0.0,
            RegimeClass::RhoMid(r) => *r,
            RegimeClass::RhoOne => 1.0,
        }
    }
}

/// The three cases of the pointwise jump-energy limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PconvCase {
    I,
    II,
    III,
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("s must lie in (0,1), got {s}")));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if !(2..=3).contains(&d) {
        return Err(Error::unsupported(format!("constants for d = {d} (only 2, 3)")));
    }
    Ok(())
}

/// Hausdorff measure of the unit `n`-sphere.
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        _ => {
            let a = (n + 1) as f64 / 2.0;
            2.0 * PI.powf(a) / gamma(a)
        }
    }
}

/// `π^{(d-1)/2} Γ(s+1/2) / Γ(d/2+s)`.
pub fn c_const_closed_form(s: f64, d: usize) -> f64 {
    PI.powf((d as f64 - 1.0) / 2.0) * gamma(s + 0.5) / gamma(d as f64 / 2.0 + s)
}

/// `∫_{R^{d-1}} (1+|ξ|²)^{-(d/2+s)} dξ` by radial reduction and `|ξ| = tan θ`:
/// `|S^{d-2}| ∫₀^{π/2} sin^{d-2}θ cos^{2s}θ dθ`, with `θ = π/2 - w^m`,
/// `m = 1/(1+2s)`, to smooth the endpoint behaviour at `π/2`.
pub fn c_const_quadrature(s: f64, d: usize, rel_tol: f64) -> (f64, f64) {
    let m = 1.0 / (1.0 + 2.0 * s);
    let w_max = FRAC_PI_2.powf(1.0 / m);
    let q = integrate(
        |w| {
            if w == 0.0 {
                return 0.0;
            }
            let phi = w.powf(m);
            let theta = FRAC_PI_2 - phi;
            // cos θ = sin φ
            let c = phi.sin();
            theta.sin().powi(d as i32 - 2) * c.powf(2.0 * s) * m * w.powf(m - 1.0)
        },
        0.0,
        w_max,
        &[],
        rel_tol,
        0.0,
    );
    let sm = sphere_measure(d - 2);
    (sm * q.value, sm * q.error)
}

/// `C_{s,d}`: closed-form value, error = gap to the quadrature of its defining integral.
pub fn c_const(s: f64, d: usize, cfg: &QuadConfig) -> Result<Estimate> {
    check_s(s)?;
    check_d(d)?;
    let closed = c_const_closed_form(s, d);
    let (quad, qerr) = c_const_quadrature(s, d, cfg.deterministic_tol().min(1e-12));
    Ok(Estimate {
        value: closed,
        error: (closed - quad).abs().max(qerr.min(1e-15 * closed)),
        method: Method::ClosedForm,
        budget: 0,
        seed: None,
    })
}

/// `∫_{R^{d-1}} (a² + |ξ'|²)^{-(d/2+s)} dξ'`, truncated at `|ξ'| = R` with the
/// two leading terms of the tail expansion added. Returns `(value, tail_bound)`.
pub fn kernel_slice_integral(a: f64, s: f64, d: usize) -> Result<(f64, f64)> {
    check_s(s)?;
    check_d(d)?;
    if !(a > 0.0) {
        return Err(Error::invalid(format!("a must be > 0, got {a}")));
    }
    let p = d as f64 / 2.0 + s;
    let big_r = 1e4 * a;
    let n = d - 2;
    let q = integrate(
        |u| {
            let rho = u.exp();
            rho.powi(n as i32 + 1) * (a * a + rho * rho).powf(-p)
        },
        (1e-12 * a).ln(),
        big_r.ln(),
        &[a.ln()],
        1e-13,
        0.0,
    );
    // ∫₀^{ρ₀} ρ^n a^{-2p} for the cut-off near the origin
    let rho0 = 1e-12 * a;
    let core = rho0.powi(n as i32 + 1) / (n as f64 + 1.0) * a.powf(-2.0 * p);
    let k = 2.0 * p - n as f64 - 1.0; // = 1 + 2s
    let tail = big_r.powf(-k) / k - p * a * a * big_r.powf(-k - 2.0) / (k + 2.0);
    let bound = big_r.powf(-k) / k;
    let sm = sphere_measure(n);
    Ok((sm * (q.value + core + tail), sm * bound))
}

/// `φ(s, τ) = (2 - 2^{-s}) τ^{-2s} / (1 + 2s)`.
pub fn phi_fn(s: f64, tau: f64) -> f64 {
    (2.0 - 2f64.powf(-s)) * tau.powf(-2.0 * s) / (1.0 + 2.0 * s)
}

/// Scaling `λ(s, ε)` of the jump energy in each regime.
pub fn lambda_scale(s: f64, eps: f64, regime: RegimeClass) -> f64 {
    match regime {
        RegimeClass::RhoZero => eps.powf(2.0 - 2.0 * s) / s,
        RegimeClass::RhoMid(_) => eps * eps / s,
        RegimeClass::RhoOne => eps * eps * eps.ln().abs(),
    }
}

/// Coefficient of `Σ |v(t⁺) - v(t⁻)|²` in the pointwise jump-energy limit.
pub fn jump_limit_coefficient(regime: RegimeClass) -> f64 {
    match regime {
        RegimeClass::RhoZero => 1.0,
        RegimeClass::RhoMid(rho) => (1.0 - rho * rho) / (rho * rho),
        RegimeClass::RhoOne => 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_examples() {
        let cfg = QuadConfig::default();
        // ∫ (1+ξ²)^{-3/2} = 2
        assert!((c_const(0.5, 2, &cfg).unwrap().value - 2.0).abs() < 1e-13);
        assert!((c_const_quadrature(0.5, 2, 1e-13).0 - 2.0).abs() < 1e-11);
        // s → 0⁺ gives π
        assert!((c_const_closed_form(1e-9, 2) - PI).abs() < 1e-7);
        let c = c_const(0.25, 2, &cfg).unwrap();
        assert!((c.value - 2.3962).abs() < 1e-4);
        assert!(c.error < 1e-10);
        // d = 3 reduces to 2π/(1+2s)
        assert!((c_const_closed_form(0.3, 3) - 2.0 * PI / 1.6).abs() < 1e-13);
    }

    #[test]
    fn closed_form_agrees_with_quadrature() {
        for d in [2, 3] {
            for s in [0.05, 0.15, 0.25, 0.35, 0.45] {
                let closed = c_const_closed_form(s, d);
                let (q, _) = c_const_quadrature(s, d, 1e-13);
                assert!(((closed - q) / closed).abs() < 1e-8, "(s, d) = ({s}, {d})");
            }
        }
    }

    #[test]
    fn phi_lambda_coefficients() {
        assert!((phi_fn(0.5, 1.0) - 0.646446609).abs() < 1e-8);
        assert!((phi_fn(1e-12, 0.3) - 1.0).abs() < 1e-10);
        assert!((lambda_scale(0.25, 0.1, RegimeClass::RhoZero) - 0.126491106).abs() < 1e-8);
        assert!((lambda_scale(0.25, 0.1, RegimeClass::RhoMid(0.5)) - 0.04).abs() < 1e-15);
        assert!((lambda_scale(0.25, 0.1, RegimeClass::RhoOne) - 0.0230258509).abs() < 1e-9);
        assert_eq!(jump_limit_coefficient(RegimeClass::RhoZero), 1.0);
        assert_eq!(jump_limit_coefficient(RegimeClass::RhoOne), 2.0);
        let mid = jump_limit_coefficient(RegimeClass::RhoMid((-1f64).exp()));
        assert!((mid - 6.38905609893065).abs() < 1e-12);
        let half = jump_limit_coefficient(RegimeClass::RhoMid(std::f64::consts::FRAC_1_SQRT_2));
        assert!((half - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spheres() {
        assert_eq!(sphere_measure(0), 2.0);
        assert!((sphere_measure(1) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_measure(2) - 4.0 * PI).abs() < 1e-15);
        let general = |n: usize| {
            let a = (n + 1) as f64 / 2.0;
            2.0 * PI.powf(a) / gamma(a)
        };
        assert!((general(2) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_measure(3) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn slice_identity() {
        let cfg = QuadConfig::default();
        for d in [2, 3] {
            for s in [0.05, 0.25, 0.45] {
                let c = c_const(s, d, &cfg).unwrap().value;
                for a in [0.01, 0.1, 1.0] {
                    let (v, _) = kernel_slice_integral(a, s, d).unwrap();
                    let pred = c * a.powf(-(1.0 + 2.0 * s));
                    assert!(((v - pred) / pred).abs() < 1e-6, "(a, s, d) = ({a}, {s}, {d})");
                }
            }
        }
    }
}
