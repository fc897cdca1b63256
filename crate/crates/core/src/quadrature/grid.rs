//! Brute-force midpoint double sum, the auditable oracle for the other engines.

use rayon::prelude::*;

use crate::domain::BoxRegion;
use crate::error::{Error, Result};

/// Number of ordered cell pairs for `n` cells per axis in `dim` dimensions.
pub(crate) fn pair_count(n: usize, dim: usize) -> Option<u64> {
    (n as u64).checked_pow(2 * dim as u32)
}

/// Midpoint sum over ordered pairs of distinct cells of an `n^dim` grid.
pub(crate) fn midpoint_sum(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    region: &BoxRegion,
    kernel_exp: f64,
    n: usize,
    max_budget: u64,
) -> Result<f64> {
    let dim = region.dim();
    let needed = pair_count(n, dim).unwrap_or(u64::MAX);
    if needed > max_budget {
        return Err(Error::Budget {
            needed,
            cap: max_budget,
        });
    }
    let h: Vec<f64> = (0..dim).map(|i| region.extent(i) / n as f64).collect();
    let cell_vol: f64 = h.iter().product();
    let cells = n.pow(dim as u32);

    let index = |mut c: usize| -> [usize; 3] {
        let mut idx = [0usize; 3];
        for i in (0..dim).rev() {
            idx[i] = c % n;
            c /= n;
        }
        idx
    };
    let values: Vec<f64> = (0..cells)
        .map(|c| {
            let idx = index(c);
            let p: Vec<f64> = (0..dim)
                .map(|i| region.lower()[i] + (idx[i] as f64 + 0.5) * h[i])
                .collect();
            f(&p)
        })
        .collect();

    // kernel depends only on the index offset
    let span = 2 * n - 1;
    let table_len = span.pow(dim as u32);
    let kernel: Vec<f64> = (0..table_len)
        .map(|t| {
            let mut t = t;
            let mut r2 = 0.0;
            for i in (0..dim).rev() {
                let off = (t % span) as f64 - (n - 1) as f64;
                t /= span;
                r2 += (off * h[i]).powi(2);
            }
            if r2 == 0.0 {
                0.0
            } else {
                r2.powf(-0.5 * kernel_exp)
            }
        })
        .collect();
    let offset_index = |a: &[usize; 3], b: &[usize; 3]| -> usize {
        let mut t = 0usize;
        for i in 0..dim {
            t = t * span + (b[i] + n - 1 - a[i]);
        }
        t
    };

    let rows: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let a = index(i);
            let ui = values[i];
            let mut acc = 0.0;
            for j in i + 1..cells {
                let d = ui - values[j];
                if d != 0.0 {
                    acc += d * d * kernel[offset_index(&a, &index(j))];
                }
            }
            acc
        })
        .collect();
    let total: f64 = rows.iter().sum();
    Ok(2.0 * total * cell_vol * cell_vol)
}

/// `(value at n, error)` with the error taken from the `n` vs `n/2` gap and
/// scaled by the Richardson factor for convergence order `gamma`.
pub(crate) fn oracle(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    region: &BoxRegion,
    kernel_exp: f64,
    n: usize,
    gamma: f64,
    max_budget: u64,
) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::invalid(format!("grid oracle needs n >= 4, got {n}")));
    }
    let fine = midpoint_sum(f, region, kernel_exp, n, max_budget)?;
    let coarse = midpoint_sum(f, region, kernel_exp, n / 2, max_budget)?;
    let factor = (1.0 / (2f64.powf(gamma) - 1.0)).max(1.0);
    Ok((fine, (fine - coarse).abs() * factor))
}
