//! Semi-analytic engine for fields depending on one coordinate of a `d = 2` film.
//!
//! For `u(x₁, x₂) = f(x₁)` the two vertical integrations collapse into the
//! weight `W(r)`, and the remaining double integral over `ω` reduces to a single
//! lag integral `2∫₀^L G(r) W(r) dr` with `G(r) = ∫ (f(x+r) - f(x))² dx`.

use super::gauss::{integrate, Quad};
use crate::error::{Error, Result};

/// `W(r) = ∫₀^ε∫₀^ε (r² + (t-τ)²)^{-(d/2+s)} dt dτ` for a fixed `(s, d)`.
///
/// With `h = r·tanθ`, `W = 2r^{1-2p}[ε·I_q(θ_m) - r(1 - cos^q θ_m)/q]`, where
/// `p = d/2 + s`, `q = 2p - 2`, `θ_m = atan(ε/r)` and `I_q(θ) = ∫₀^θ cos^q`.
/// `I_q` is summed from binomial series that converge geometrically on
/// either side of `π/4`, so no quadrature is involved.
#[derive(Debug, Clone, Copy)]
pub struct VerticalWeight {
    s: f64,
    p: f64,
    q: f64,
    j0: f64,
}

impl VerticalWeight {
    pub fn new(s: f64, d: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::invalid(format!("s must lie in (0,1), got {s}")));
        }
        if !(2..=3).contains(&d) {
            return Err(Error::unsupported(format!("vertical weight in dimension {d}")));
        }
        let p = d as f64 / 2.0 + s;
        // not 2p - 2: for tiny s, 1 + s rounds to 1
        let q = (d - 2) as f64 + 2.0 * s;
        let x = std::f64::consts::FRAC_1_SQRT_2;
        let j0 = sin_series(q, x) + cos_series(q, x);
        Ok(Self { s, p, q, j0 })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `∫₀^{π/2} cos^q θ dθ`.
    pub fn j0(&self) -> f64 {
        self.j0
    }

    /// Near-field coefficient `A` in `W(r) ≈ A·ε·r^{1-2p}` for `r ≪ ε`.
    pub fn near_coefficient(&self) -> f64 {
        2.0 * self.j0
    }

    /// Exponent `e` in `W(r) ~ r^{-e}` for `r ≪ ε`.
    pub fn near_exponent(&self) -> f64 {
        2.0 * self.p - 1.0
    }

    pub fn eval(&self, r: f64, eps: f64) -> f64 {
        let a = r / eps;
        let (iq, one_minus_cq) = if a >= 1.0 {
            let x = 1.0 / (a * (1.0 + 1.0 / (a * a)).sqrt());
            let lncos = -0.5 * (1.0 / (a * a)).ln_1p();
            (sin_series(self.q, x), -(self.q * lncos).exp_m1())
        } else {
            let x = a / (1.0 + a * a).sqrt();
            let lncos = -0.5 * (1.0 / (a * a)).ln_1p();
            (self.j0 - cos_series(self.q, x), -(self.q * lncos).exp_m1())
        };
        2.0 * r.powf(1.0 - 2.0 * self.p) * (eps * iq - r * one_minus_cq / self.q)
    }
}

/// `∫₀^{asin x} cos^q θ dθ = ∫₀^x (1-y²)^{(q-1)/2} dy` for `x ≤ 1/√2`.
fn sin_series(q: f64, x: f64) -> f64 {
    let alpha = 0.5 * (q - 1.0);
    let x2 = x * x;
    let mut a = 1.0;
    let mut pw = x;
    let mut sum = x;
    for k in 0..400 {
        a *= (k as f64 - alpha) / (k as f64 + 1.0);
        pw *= x2;
        let term = a * pw / (2 * k + 3) as f64;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `∫_{acos x}^{π/2} cos^q θ dθ = ∫₀^x y^q (1-y²)^{-1/2} dy` for `x ≤ 1/√2`.
fn cos_series(q: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut c = 1.0;
    let mut pw = 1.0;
    let mut sum = 1.0 / (q + 1.0);
    for k in 0..400 {
        c *= (2 * k + 1) as f64 / (2 * k + 2) as f64;
        pw *= x2;
        let term = c * pw / (q + 1.0 + (2 * k + 2) as f64);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    x.powf(q + 1.0) * sum
}

/// `W(r)` for one-off evaluations; see [`VerticalWeight`].
pub fn vertical_weight(r: f64, eps: f64, s: f64, d: usize) -> Result<f64> {
    if !(r > 0.0 && eps > 0.0) {
        return Err(Error::invalid(format!("vertical weight needs r, eps > 0, got ({r}, {eps})")));
    }
    Ok(VerticalWeight::new(s, d)?.eval(r, eps))
}

/// Direct adaptive evaluation of `2∫₀^ε (ε-h)(r²+h²)^{-p} dh`.
pub fn vertical_weight_quadrature(r: f64, eps: f64, s: f64, d: usize, rel_tol: f64) -> Quad {
    let p = d as f64 / 2.0 + s;
    let mut q = integrate(
        |h| (eps - h) * (r * r + h * h).powf(-p),
        0.0,
        eps,
        &[r],
        rel_tol,
        0.0,
    );
    q.value *= 2.0;
    q.error *= 2.0;
    q
}

/// One-dimensional profile whose squared increments feed the lag integrals.
pub(crate) enum Profile<'a> {
    /// Pieces `(a, b, value)`, contiguous and increasing.
    Pieces(Vec<(f64, f64, f64)>),
    /// A continuous function on `[lo, hi]` with optional kink nodes.
    Function {
        f: &'a (dyn Fn(f64) -> f64 + Sync),
        lo: f64,
        hi: f64,
        nodes: Vec<f64>,
    },
    /// A lag function `G` supplied directly.
    Lag {
        g: &'a (dyn Fn(f64) -> f64 + Sync),
        len: f64,
        beta: f64,
        kinks: Vec<f64>,
    },
}

impl Profile<'_> {
    fn length(&self) -> f64 {
        match self {
            Profile::Pieces(p) => p[p.len() - 1].1 - p[0].0,
            Profile::Function { lo, hi, .. } => hi - lo,
            Profile::Lag { len, .. } => *len,
        }
    }

    /// Small-lag power `β` with `G(r) ~ r^β`.
    fn beta(&self) -> f64 {
        match self {
            Profile::Pieces(_) => 1.0,
            Profile::Function { .. } => 2.0,
            Profile::Lag { beta, .. } => *beta,
        }
    }

    pub(crate) fn is_constant(&self) -> bool {
        match self {
            Profile::Pieces(p) => p.iter().all(|x| x.2 == p[0].2),
            _ => false,
        }
    }

    /// `G(r) = ∫_{lo}^{hi-r} (f(x+r) - f(x))² dx`.
    fn lag(&self, r: f64) -> f64 {
        match self {
            Profile::Pieces(p) => {
                let mut g = 0.0;
                for i in 0..p.len() {
                    let (ai, bi, li) = p[i];
                    for &(aj, bj, lj) in &p[i + 1..] {
                        let len = (bi - ai)
                            .min(bj - aj)
                            .min((bi - aj) + r)
                            .min((bj - ai) - r);
                        if len > 0.0 {
                            g += (li - lj) * (li - lj) * len;
                        }
                    }
                }
                g
            }
            Profile::Function { f, lo, hi, nodes } => {
                let b = hi - r;
                if b <= *lo {
                    return 0.0;
                }
                let mut br: Vec<f64> = nodes.clone();
                br.extend(nodes.iter().map(|x| x - r));
                integrate(|x| (f(x + r) - f(x)).powi(2), *lo, b, &br, 1e-13, 0.0).value
            }
            Profile::Lag { g, len, .. } => {
                if r >= *len {
                    0.0
                } else {
                    g(r)
                }
            }
        }
    }

    fn kinks(&self) -> Vec<f64> {
        let ends: Vec<f64> = match self {
            Profile::Pieces(p) => {
                let mut e: Vec<f64> = p.iter().map(|x| x.0).collect();
                e.push(p[p.len() - 1].1);
                e
            }
            Profile::Function { nodes, .. } => nodes.clone(),
            Profile::Lag { kinks, .. } => {
                let mut k = kinks.clone();
                k.retain(|x| *x > 0.0);
                k.sort_by(f64::total_cmp);
                return k;
            }
        };
        let mut k = Vec::new();
        for i in 0..ends.len() {
            for j in i + 1..ends.len() {
                k.push(ends[j] - ends[i]);
            }
        }
        k.retain(|x| *x > 0.0);
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// Cut-off below which `G(r)/r^β` is replaced by its linear extrapolation,
    /// plus the extrapolation coefficients `(h0, h1)`.
    fn small_lag_model(&self) -> (f64, f64, f64) {
        let l = self.length();
        let first_kink = self.kinks().first().copied().unwrap_or(l);
        let rc = (1e-4 * l).min(0.25 * first_kink);
        let beta = self.beta();
        let h_a = self.lag(rc) / rc.powf(beta);
        let h_b = self.lag(2.0 * rc) / (2.0 * rc).powf(beta);
        let h1 = (h_b - h_a) / rc;
        (rc, h_a - h1 * rc, h1)
    }
}

/// `2∫₀^L G(r) r^{-e} dr`; finite iff `β - e + 1 > 0`.
pub(crate) fn power_lag_integral(profile: &Profile, e: f64, rel_tol: f64) -> Result<Quad> {
    if profile.is_constant() {
        return Ok(Quad {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let beta = profile.beta();
    let k = beta - e + 1.0;
    if k <= 0.0 {
        return Err(Error::Divergent(format!(
            "lag integral with small-lag power {beta} against r^-{e} diverges at r = 0"
        )));
    }
    let l = profile.length();
    let (rc, h0, h1) = profile.small_lag_model();
    let tail = h0 * rc.powf(k) / k + h1 * rc.powf(k + 1.0) / (k + 1.0);
    let breaks: Vec<f64> = profile.kinks().iter().map(|x| x.ln()).collect();
    let q = integrate(
        |u| {
            let r = u.exp();
            profile.lag(r) * (u * (1.0 - e)).exp()
        },
        rc.ln(),
        l.ln(),
        &breaks,
        rel_tol,
        0.0,
    );
    Ok(Quad {
        value: 2.0 * (q.value + tail),
        error: 2.0 * q.error + 1e-6 * tail.abs() * (rc / l),
        evals: q.evals + 2,
    })
}

/// `2∫₀^L G(r) W(r) dr` for a weight with near-field form `W ≈ A r^{-e}` on `r ≪ scale`.
pub(crate) fn weighted_lag_integral(
    profile: &Profile,
    w: impl Fn(f64) -> f64,
    near_a: f64,
    near_e: f64,
    scale: f64,
    rel_tol: f64,
) -> Result<Quad> {
    if profile.is_constant() {
        return Ok(Quad {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let beta = profile.beta();
    let k = beta - near_e + 1.0;
    if k <= 0.0 {
        return Err(Error::Divergent(format!(
            "lag integral with small-lag power {beta} against r^-{near_e} diverges at r = 0"
        )));
    }
    let l = profile.length();
    let (rc, h0, h1) = profile.small_lag_model();
    let g = |r: f64| {
        if r < rc {
            (h0 + h1 * r) * r.powf(beta)
        } else {
            profile.lag(r)
        }
    };
    let r_lo = 1e-12 * scale.min(rc);
    let tail = near_a * (h0 * r_lo.powf(k) / k + h1 * r_lo.powf(k + 1.0) / (k + 1.0));
    let ls = scale.ln();
    let mut breaks: Vec<f64> = profile.kinks().iter().map(|x| x.ln()).collect();
    breaks.push(rc.ln());
    breaks.extend([-6.0, -3.0, -1.0, 0.0, 1.0, 3.0].iter().map(|d| ls + d));
    let q = integrate(
        |u| {
            let r = u.exp();
            g(r) * w(r) * r
        },
        r_lo.ln(),
        l.ln(),
        &breaks,
        rel_tol,
        0.0,
    );
    Ok(Quad {
        value: 2.0 * (q.value + tail),
        error: 2.0 * q.error + 1e-6 * tail.abs(),
        evals: q.evals + 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_matches_direct_quadrature() {
        for &(r, eps, s, d) in &[
            (0.1, 0.05, 0.25, 2),
            (1e-4, 0.05, 0.25, 2),
            (0.3, 0.3, 0.1, 2),
            (2.0, 0.01, 0.45, 3),
            (1e-3, 1.0, 0.05, 3),
            (0.05, 0.1, 0.01, 2),
        ] {
            let w = vertical_weight(r, eps, s, d).unwrap();
            let q = vertical_weight_quadrature(r, eps, s, d, 1e-13);
            assert!(
                ((w - q.value) / q.value).abs() < 1e-10,
                "(r, eps, s, d) = ({r}, {eps}, {s}, {d}): {w} vs {}",
                q.value
            );
        }
    }

    #[test]
    fn weight_limits() {
        let vw = VerticalWeight::new(0.25, 2).unwrap();
        let eps = 1e-3;
        let far = vw.eval(100.0 * eps, eps) * (100.0 * eps).powf(2.5) / (eps * eps);
        assert!((far - 1.0).abs() < 0.01);
        let r = 1e-9;
        let near = vw.eval(r, eps) / (vw.near_coefficient() * eps * r.powf(-vw.near_exponent()));
        assert!((near - 1.0).abs() < 1e-5);
        // W decreases as the film thins
        let mut prev = f64::INFINITY;
        for k in 1..30 {
            let w = vw.eval(0.1, 2f64.powi(-k));
            assert!(w < prev && w > 0.0);
            prev = w;
        }
    }

    #[test]
    fn pwc_lag_is_exact() {
        let p = Profile::Pieces(vec![(0.0, 0.5, 0.0), (0.5, 1.0, 1.0)]);
        for r in [1e-300, 1e-12, 0.2, 0.5, 0.7, 1.0] {
            assert!((p.lag(r) - r.min(1.0 - r)).abs() < 1e-16);
        }
        // 2[∫₀^½ r^{-2σ} dr + ∫_½^1 (1-r) r^{-1-2σ} dr]
        let sigma: f64 = 0.3;
        let q = power_lag_integral(&p, 1.0 + 2.0 * sigma, 1e-12).unwrap();
        let k = 1.0 - 2.0 * sigma;
        let first = 0.5f64.powf(k) / k;
        let second = (1.0 - 0.5f64.powf(-2.0 * sigma)) / (-2.0 * sigma) - (1.0 - 0.5f64.powf(k)) / k;
        let exact2 = 2.0 * (first + second);
        assert!((q.value - exact2).abs() < 1e-10 * exact2, "{} vs {exact2}", q.value);
    }

    #[test]
    fn smooth_lag_integral_matches_closed_form() {
        // f(x) = x on (0,1): G(r) = r²(1-r), 2∫ r^{2-e}(1-r) dr = 2/((3-e)(4-e))
        let f = |x: f64| x;
        let p = Profile::Function {
            f: &f,
            lo: 0.0,
            hi: 1.0,
            nodes: vec![],
        };
        for e in [1.2, 1.5, 2.5, 2.96] {
            let q = power_lag_integral(&p, e, 1e-12).unwrap();
            let exact = 2.0 / ((3.0 - e) * (4.0 - e));
            assert!((q.value - exact).abs() < 1e-9 * exact, "e = {e}: {} vs {exact}", q.value);
        }
        assert!(matches!(power_lag_integral(&p, 3.0, 1e-10), Err(Error::Divergent(_))));
    }
}
