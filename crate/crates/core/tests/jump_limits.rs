//! At a fixed exponent the jump energy over `λ = ε^{2-2s}/s` tends to
//! `∫₀¹∫₀¹ |t-τ|^{-2s} = 1/((1-2s)(1-s))` per unit squared jump, not to 1;
//! the coefficient 1 is only reached as `s_ε → 0`.

use thinfilm::asymptotics::{dyadic_grid, verify_gamma_limit, GammaCase};
use thinfilm::domain::{Field, Schedule};
use thinfilm::quadrature::QuadConfig;

fn fixed_s_limit(s: f64) -> f64 {
    1.0 / ((1.0 - 2.0 * s) * (1.0 - s))
}

fn extrapolated(s: f64, height: f64, kmax: i32) -> f64 {
    let case = GammaCase::Jump {
        field: Field::step(0.0, 1.0, 0.5, height).unwrap(),
        schedule: Schedule::constant(s).unwrap(),
        eps_grid: dyadic_grid(6, kmax),
    };
    let out = verify_gamma_limit("fixed_s", &case, &QuadConfig::default(), 0).unwrap();
    out.verdict.extrapolated.value().unwrap()
}

#[test]
fn quarter_exponent_tends_to_eight_thirds() {
    let got = extrapolated(0.25, 1.0, 14);
    assert!((got - 8.0 / 3.0).abs() < 1e-3 * 8.0 / 3.0, "{got}");
}

#[test]
fn limit_scales_with_squared_jump_for_several_exponents() {
    for (s, h) in [(0.35, 1.0), (0.4, -0.5), (0.3, 2.0)] {
        let want = h * h * fixed_s_limit(s);
        let got = extrapolated(s, h, 14);
        assert!(((got - want) / want).abs() < 1e-2, "s = {s}: {got} vs {want}");
    }
}

#[test]
fn prediction_of_one_is_missed_at_fixed_s() {
    let case = GammaCase::Jump {
        field: Field::step(0.0, 1.0, 0.5, 1.0).unwrap(),
        schedule: Schedule::constant(0.25).unwrap(),
        eps_grid: dyadic_grid(3, 8),
    };
    let v = verify_gamma_limit("fixed_s", &case, &QuadConfig::default(), 0).unwrap().verdict;
    assert_eq!(v.predicted.value(), Some(1.0));
    assert!(!v.pass);
}
