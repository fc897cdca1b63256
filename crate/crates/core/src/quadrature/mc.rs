//! Monte Carlo with dyadic stratification of the difference variable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::BoxRegion;

/// Samples per RNG stream; fixes the reduction tree independently of workers.
pub const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, y: f64) {
        self.n += 1;
        let d = y - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (y - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64,
        }
    }
}

fn stream_key(seed: u64, shell: usize) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(shell as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"gagliard");
    key
}

/// Union of `[b - r, b + r] ∩ [lo, hi]` over the sorted points `b`.
fn neighbourhoods(points: &[f64], r: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &b in points {
        let (a, c) = ((b - r).max(lo), (b + r).min(hi));
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(c),
            _ => out.push((a, c)),
        }
    }
    out
}

/// `(value, standard error)` of `∫_A∫_A (f(x)-f(y))² |x-y|^{-e}` over shells
/// `diam·2^{-k} ≤ |x-y| < diam·2^{-k+1}`, `k = 1..=shells`.
///
/// `jumps` lists the discontinuities of a field that is piecewise constant in
/// `x₁`; pairs in shell `k` can only differ when `x₁` lies within `r_out` of one,
/// so `x₁` is drawn from those neighbourhoods alone. The core below the last
/// shell is added as the geometric tail `c_K q/(1-q)`, `q = 2^{-tail_power}`,
/// of the innermost shell value `c_K`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stratified(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    region: &BoxRegion,
    kernel_exp: f64,
    shells: usize,
    samples: u64,
    seed: u64,
    jumps: &[f64],
    tail_power: f64,
) -> (f64, f64) {
    let n = region.dim();
    let diam = region.diameter();
    let vol = region.volume();
    let per_shell = samples.div_ceil(shells as u64).max(2);
    let chunks = per_shell.div_ceil(CHUNK);
    let jobs: Vec<(usize, u64)> = (1..=shells)
        .flat_map(|k| (0..chunks).map(move |c| (k, c)))
        .collect();
    let (lo0, hi0) = (region.lower()[0], region.upper()[0]);

    let parts: Vec<Moments> = jobs
        .par_iter()
        .map(|&(k, c)| {
            let r_out = diam * 0.5f64.powi(k as i32 - 1);
            let r_in = 0.5 * r_out;
            let half: Vec<f64> = (0..n).map(|i| r_out.min(region.extent(i))).collect();
            let box_vol: f64 = half.iter().map(|w| 2.0 * w).product();
            let strips = if jumps.is_empty() {
                vec![(lo0, hi0)]
            } else {
                neighbourhoods(jumps, r_out, lo0, hi0)
            };
            let strip_len: f64 = strips.iter().map(|(a, b)| b - a).sum();
            let scale = vol / region.extent(0) * strip_len * box_vol;

            let mut rng = ChaCha8Rng::from_seed(stream_key(seed, k));
            rng.set_stream(c);
            let count = CHUNK.min(per_shell - c * CHUNK);
            let mut x = [0.0f64; 3];
            let mut z = [0.0f64; 3];
            let mut y = [0.0f64; 3];
            let mut m = Moments::default();
            for _ in 0..count {
                for i in 0..n {
                    x[i] = region.lower()[i] + rng.gen::<f64>() * region.extent(i);
                    z[i] = (2.0 * rng.gen::<f64>() - 1.0) * half[i];
                }
                if strips.len() > 1 || strip_len < region.extent(0) {
                    let mut t = (x[0] - lo0) / region.extent(0) * strip_len;
                    x[0] = strips[strips.len() - 1].1;
                    for &(a, b) in &strips {
                        if t < b - a {
                            x[0] = a + t;
                            break;
                        }
                        t -= b - a;
                    }
                }
                let rho = z[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(rho >= r_in && rho < r_out) {
                    m.push(0.0);
                    continue;
                }
                let kern = rho.powf(-kernel_exp);
                let fx = f(&x[..n]);
                let mut acc = 0.0;
                for sign in [1.0, -1.0] {
                    for i in 0..n {
                        y[i] = x[i] + sign * z[i];
                    }
                    if region.contains(&y[..n]) {
                        let d = fx - f(&y[..n]);
                        acc += d * d * kern;
                    }
                }
                m.push(0.5 * scale * acc);
            }
            m
        })
        .collect();

    let mut value = 0.0;
    let mut var = 0.0;
    let mut last = (0.0, 0.0);
    for shell in parts.chunks(chunks as usize) {
        let m = shell.iter().fold(Moments::default(), |a, b| a.merge(*b));
        let v = if m.n > 1 { m.m2 / (m.n - 1) as f64 / m.n as f64 } else { 0.0 };
        value += m.mean;
        var += v;
        last = (m.mean, v);
    }
    let q = 0.5f64.powf(tail_power);
    let g = q / (1.0 - q);
    value += g * last.0;
    var += g * g * last.1;
    (value, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_sequential() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut all = Moments::default();
        data.iter().for_each(|v| all.push(*v));
        let mut a = Moments::default();
        let mut b = Moments::default();
        data[..333].iter().for_each(|v| a.push(*v));
        data[333..].iter().for_each(|v| b.push(*v));
        let m = a.merge(b);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.m2 - all.m2).abs() < 1e-9 * all.m2);
    }

    #[test]
    fn one_dimensional_linear_field() {
        // ∫₀¹∫₀¹ |x-y|^{2-1-2s} = 2/((2-2s)(3-2s))
        let s: f64 = 0.25;
        let region = BoxRegion::interval(0.0, 1.0).unwrap();
        let (v, e) = stratified(&|p: &[f64]| p[0], &region, 1.0 + 2.0 * s, 30, 1 << 18, 3, &[], 2.0 - 2.0 * s);
        let exact = 2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s));
        assert!((v - exact).abs() < 4.0 * e + 1e-6, "{v} ± {e} vs {exact}");
        assert!(e < 0.01 * exact);
    }

    #[test]
    fn jump_sampling_matches_exact_one_dimensional_value() {
        // ∫∫ over (0,a)×(a,1) of |x-y|^{-1-2s}, twice
        let (s, a): (f64, f64) = (0.4, 0.3);
        let region = BoxRegion::interval(0.0, 1.0).unwrap();
        let f = move |p: &[f64]| if p[0] < a { 0.0 } else { 1.0 };
        let (v, e) = stratified(&f, &region, 1.0 + 2.0 * s, 24, 1 << 18, 5, &[a], 1.0 - 2.0 * s);
        let k = 1.0 - 2.0 * s;
        let exact = 2.0 * (a.powf(k) + (1.0 - a).powf(k) - 1.0) / (2.0 * s * k);
        assert!((v - exact).abs() < 4.0 * e, "{v} ± {e} vs {exact}");
        assert!(e < 0.02 * exact);
    }

    #[test]
    fn neighbourhoods_merge_and_clip() {
        assert_eq!(neighbourhoods(&[0.125, 0.25, 0.75], 0.25, 0.0, 1.0), vec![(0.0, 1.0)]);
        assert_eq!(neighbourhoods(&[0.125, 0.25, 0.75], 0.125, 0.0, 1.0), vec![(0.0, 0.375), (0.625, 0.875)]);
    }
}
