//! Distribution-discrepancy criteria between a design and the uniform target.
//!
//! Batch-based estimators treat the [`SampleBatch`] as the target measure:
//! every double integral against the target is replaced by the batch's
//! empirical average. With that convention each criterion is an exact
//! kernel discrepancy between two empirical measures, so it is non-negative
//! and vanishes when the design equals the batch. The `*_exact_1d` functions
//! integrate against `U[0,1]` in closed form.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::kernel::{distance_kernel, euclid, gauss_uniform_mean, gaussian, norm, sqdist};
use crate::rng::RngConfig;
use crate::sampling::{PriorDrawBatch, SampleBatch};

/// Batches larger than this estimate `E||Y - Y'||^q` from sampled pairs.
pub const EXACT_PAIR_LIMIT: usize = 4096;
/// Number of sampled pairs used above [`EXACT_PAIR_LIMIT`].
pub const PAIR_SUBSAMPLE: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    /// Standard error of the design-to-batch term; 0 for closed-form paths.
    pub std_error: f64,
    /// Batch size used for the design-to-batch term (0 for closed form).
    pub n_batch: usize,
}

fn check_dims(d: &Design, batch: &SampleBatch) -> Result<()> {
    if d.p() != batch.p() {
        return Err(Error::DimensionMismatch {
            expected: d.p(),
            got: batch.p(),
        });
    }
    Ok(())
}

#[inline]
fn dist_pow(x: &[f64], y: &[f64], q: f64) -> f64 {
    if q == 1.0 {
        euclid(x, y)
    } else if q == 2.0 {
        sqdist(x, y)
    } else {
        euclid(x, y).powf(q)
    }
}

/// `(1/N^2) sum_{m,m'} ||y_m - y_m'||^q`, with the diagonal included.
///
/// Exact for batches up to [`EXACT_PAIR_LIMIT`]; above it the off-diagonal
/// mean is estimated from [`PAIR_SUBSAMPLE`] uniformly drawn distinct pairs
/// and rescaled by `(N-1)/N`.
pub fn batch_pair_mean(batch: &SampleBatch, q: f64) -> f64 {
    batch_pair_mean_with(batch, q, PAIR_SUBSAMPLE)
}

/// [`batch_pair_mean`] with an explicit number of sampled pairs for large batches.
pub fn batch_pair_mean_with(batch: &SampleBatch, q: f64, pairs: usize) -> f64 {
    let n = batch.len();
    if n <= EXACT_PAIR_LIMIT {
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|a| {
                let ya = batch.row(a);
                (a + 1..n).map(|b| dist_pow(ya, batch.row(b), q)).sum::<f64>()
            })
            .collect();
        return 2.0 * rows.iter().sum::<f64>() / (n as f64 * n as f64);
    }
    let mut g = RngConfig::with_stream(batch.seed, 0x5041_4952).rng();
    let mut s = 0.0;
    for _ in 0..pairs {
        let a = g.random_range(0..n);
        let mut b = g.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        s += dist_pow(batch.row(a), batch.row(b), q);
    }
    s / pairs as f64 * (n as f64 - 1.0) / n as f64
}

/// `(1/n^2) sum_{i,j} ||x_i - x_j||^q`
pub fn design_pair_mean(d: &Design, q: f64) -> f64 {
    let n = d.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += dist_pow(d.row(i), d.row(j), q);
        }
    }
    2.0 * s / (n as f64 * n as f64)
}

/// Per-batch-point values `(1/n) sum_i ||x_i - y_m||^q`.
fn cross_terms(d: &Design, batch: &SampleBatch, q: f64) -> Vec<f64> {
    let n = d.n() as f64;
    batch
        .as_slice()
        .par_chunks(batch.p())
        .map(|y| d.rows().map(|x| dist_pow(x, y, q)).sum::<f64>() / n)
        .collect()
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `2 E||X - Y||^q - E||Y - Y'||^q - E||X - X'||^q` with `X ~ F_n`, `Y ~ batch`.
pub fn q_energy_distance(d: &Design, batch: &SampleBatch, q: f64) -> Result<EnergyEstimate> {
    if !(q > 0.0) || q > 2.0 {
        return Err(Error::invalid(format!("q-energy exponent must lie in (0, 2], got {q}")));
    }
    check_dims(d, batch)?;
    let cross = cross_terms(d, batch, q);
    let (cross_mean, cross_se) = mean_and_se(&cross);
    let value = 2.0 * cross_mean - batch_pair_mean(batch, q) - design_pair_mean(d, q);
    Ok(EnergyEstimate {
        value,
        std_error: 2.0 * cross_se,
        n_batch: batch.len(),
    })
}

pub fn energy_distance(d: &Design, batch: &SampleBatch) -> Result<EnergyEstimate> {
    q_energy_distance(d, batch, 1.0)
}

/// `E||Y - Y'||` for `Y, Y'` i.i.d. uniform on the unit square.
pub const UNIT_SQUARE_MEAN_DISTANCE: f64 = 0.521_405_433_164_720_7;

/// Energy distance with the design-to-target term from `batch` and a known
/// target self-distance `e_yy = E||Y - Y'||`.
pub fn energy_distance_known_target(d: &Design, batch: &SampleBatch, e_yy: f64) -> Result<EnergyEstimate> {
    check_dims(d, batch)?;
    let cross = cross_terms(d, batch, 1.0);
    let (cross_mean, cross_se) = mean_and_se(&cross);
    Ok(EnergyEstimate {
        value: 2.0 * cross_mean - e_yy - design_pair_mean(d, 1.0),
        std_error: 2.0 * cross_se,
        n_batch: batch.len(),
    })
}

/// q-energy distance of a 1-d design to `U[0,1]`, in closed form:
/// `int_0^1 |x - y|^q dy = (x^{q+1} + (1-x)^{q+1}) / (q+1)` and
/// `E|Y - Y'|^q = 2 / ((q+1)(q+2))`.
pub fn q_energy_exact_1d(d: &Design, q: f64) -> Result<f64> {
    if d.p() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: d.p(),
        });
    }
    if !(q > 0.0) || q > 2.0 {
        return Err(Error::invalid(format!("q-energy exponent must lie in (0, 2], got {q}")));
    }
    let xs = d.column(0);
    Ok(q_energy_exact_1d_points(&xs, q))
}

pub(crate) fn q_energy_exact_1d_points(xs: &[f64], q: f64) -> f64 {
    let n = xs.len() as f64;
    let cross = xs
        .iter()
        .map(|&x| (x.powf(q + 1.0) + (1.0 - x).powf(q + 1.0)) / (q + 1.0))
        .sum::<f64>()
        / n;
    let mut pair = 0.0;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            pair += (xs[i] - xs[j]).abs().powf(q);
        }
    }
    2.0 * cross - 2.0 / ((q + 1.0) * (q + 2.0)) - 2.0 * pair / (n * n)
}

pub fn energy_exact_1d(d: &Design) -> Result<f64> {
    q_energy_exact_1d(d, 1.0)
}

/// Energy distance of every 1-d coordinate projection, closed form.
pub fn projected_energy_1d(d: &Design) -> Vec<f64> {
    (0..d.p())
        .map(|l| q_energy_exact_1d_points(&d.column(l), 1.0))
        .collect()
}

/// The design-dependent part of the sampled energy distance,
/// `(2/(nN)) sum_{i,m} ||x_i - y_m|| - (1/n^2) sum_{i,j} ||x_i - x_j||`,
/// which the support-point iteration minimizes.
pub fn sp_objective(d: &Design, batch: &SampleBatch) -> Result<f64> {
    check_dims(d, batch)?;
    sp_objective_raw(d.as_slice(), d.p(), batch)
}

pub(crate) fn sp_objective_raw(points: &[f64], p: usize, batch: &SampleBatch) -> Result<f64> {
    let n = points.len() / p;
    let cross: Vec<f64> = points
        .par_chunks(p)
        .map(|x| batch.rows().map(|y| euclid(x, y)).sum::<f64>())
        .collect();
    let cross = cross.iter().sum::<f64>() / (n as f64 * batch.len() as f64);
    let mut pair = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pair += euclid(&points[i * p..(i + 1) * p], &points[j * p..(j + 1) * p]);
        }
    }
    Ok(2.0 * cross - 2.0 * pair / (n as f64 * n as f64))
}

/// Monte Carlo estimate of the projected-support-point objective
/// `-(2/n) sum_i E_{Y,theta} gamma(x_i, Y) + (1/n^2) sum_{i,j} E_theta gamma(x_i, x_j)`
/// averaging over the full batch x prior-draw product.
pub fn psp_objective(d: &Design, batch: &SampleBatch, priors: &PriorDrawBatch) -> Result<f64> {
    check_dims(d, batch)?;
    check_prior_dims(d, priors)?;
    let n = d.n() as f64;
    let r = priors.len();
    let attraction: Vec<f64> = d
        .as_slice()
        .par_chunks(d.p())
        .map(|x| {
            let mut s = 0.0;
            for k in 0..r {
                let w = priors.weights(k);
                s += batch.rows().map(|y| gaussian(x, y, w)).sum::<f64>();
            }
            s / (batch.len() * r) as f64
        })
        .collect();
    let attraction = attraction.iter().sum::<f64>() / n;
    Ok(-2.0 * attraction + psp_repulsion(d, priors))
}

/// [`psp_objective`] with the expectation over `Y ~ U[0,1]^p` taken in
/// closed form, so only the prior draws are Monte Carlo.
pub fn psp_objective_exact_y(d: &Design, priors: &PriorDrawBatch) -> Result<f64> {
    check_prior_dims(d, priors)?;
    let n = d.n() as f64;
    let r = priors.len();
    let mut attraction = 0.0;
    for x in d.rows() {
        let mut s = 0.0;
        for k in 0..r {
            let w = priors.weights(k);
            s += x.iter().zip(w).map(|(&xl, &wl)| gauss_uniform_mean(xl, wl)).product::<f64>();
        }
        attraction += s / r as f64;
    }
    Ok(-2.0 * attraction / n + psp_repulsion(d, priors))
}

fn psp_repulsion(d: &Design, priors: &PriorDrawBatch) -> f64 {
    let n = d.n();
    let r = priors.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (xi, xj) = (d.row(i), d.row(j));
            s += (0..r).map(|k| gaussian(xi, xj, priors.weights(k))).sum::<f64>();
        }
    }
    // diagonal terms are exactly 1
    (n as f64 + 2.0 * s / r as f64) / (n * n) as f64
}

fn check_prior_dims(d: &Design, priors: &PriorDrawBatch) -> Result<()> {
    if priors.p() != d.p() {
        return Err(Error::DimensionMismatch {
            expected: d.p(),
            got: priors.p(),
        });
    }
    if priors.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

/// `sum_{i,j} r_G(x_i, x_j)` for the projected kernel
/// `r_G(x, y) = r(x, y) - E r(x, Y) - E r(Y, y) + E r(Y, Y')` of
/// `r = (||x|| + ||y|| - ||x - y||) / 2`, expectations taken over the batch.
pub fn projected_kernel_sum(d: &Design, batch: &SampleBatch) -> Result<f64> {
    projected_kernel_sum_scaled(d, batch, 1.0)
}

/// [`projected_kernel_sum`] for the kernel `sigma2 * r`.
pub fn projected_kernel_sum_scaled(d: &Design, batch: &SampleBatch, sigma2: f64) -> Result<f64> {
    projected_kernel_sum_with(d, batch, sigma2, PAIR_SUBSAMPLE)
}

/// [`projected_kernel_sum_scaled`] with `pairs` sampled pairs for `E r(Y, Y')`
/// on large batches.
pub fn projected_kernel_sum_with(d: &Design, batch: &SampleBatch, sigma2: f64, pairs: usize) -> Result<f64> {
    check_dims(d, batch)?;
    let mean_norm_y = batch.rows().map(norm).sum::<f64>() / batch.len() as f64;
    let e_yy = 0.5 * (2.0 * mean_norm_y - batch_pair_mean_with(batch, 1.0, pairs));
    let e_xy: Vec<f64> = cross_terms_per_point(d, batch)
        .into_iter()
        .zip(d.rows())
        .map(|(m, x)| 0.5 * (norm(x) + mean_norm_y - m))
        .collect();
    let n = d.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += distance_kernel(d.row(i), d.row(j)) - e_xy[i] - e_xy[j] + e_yy;
        }
    }
    Ok(sigma2 * s)
}

/// Per-design-point values `(1/N) sum_m ||x_i - y_m||`.
fn cross_terms_per_point(d: &Design, batch: &SampleBatch) -> Vec<f64> {
    let nb = batch.len() as f64;
    d.as_slice()
        .par_chunks(d.p())
        .map(|x| batch.rows().map(|y| euclid(x, y)).sum::<f64>() / nb)
        .collect()
}

/// Squared centered L2 discrepancy,
/// `(13/12)^p - (2/n) sum_i prod_l (1 + a_il/2 - a_il^2/2) + (1/n^2) sum_{i,j} prod_l K_l`
/// with `a = |x - 1/2|` and `K_l = 1 + a_il/2 + a_jl/2 - |x_il - x_jl|/2`.
pub fn cl2_discrepancy(d: &Design) -> f64 {
    let n = d.n();
    let p = d.p() as i32;
    let cross: f64 = d
        .rows()
        .map(|x| {
            x.iter()
                .map(|&v| {
                    let a = (v - 0.5).abs();
                    1.0 + 0.5 * a - 0.5 * a * a
                })
                .product::<f64>()
        })
        .sum();
    let mut pair = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (xi, xj) = (d.row(i), d.row(j));
            pair += xi
                .iter()
                .zip(xj)
                .map(|(&a, &b)| 1.0 + 0.5 * (a - 0.5).abs() + 0.5 * (b - 0.5).abs() - 0.5 * (a - b).abs())
                .product::<f64>();
        }
    }
    (13.0f64 / 12.0).powi(p) - 2.0 * cross / n as f64 + pair / (n * n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_exp_prior, sample_sobol, sample_uniform};

    fn d1(xs: &[f64]) -> Design {
        Design::new(xs.to_vec(), 1, "").unwrap()
    }

    #[test]
    fn unit_square_mean_distance() {
        let closed = (2.0 + 2f64.sqrt() + 5.0 * (1.0 + 2f64.sqrt()).ln()) / 15.0;
        assert!((UNIT_SQUARE_MEAN_DISTANCE - closed).abs() < 1e-15);
        // density of the coordinate gaps is 4(1-u)(1-v) on [0,1]^2
        let m = 400;
        let h = 1.0 / m as f64;
        let w = |k: usize| if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        let mut s = 0.0;
        for i in 0..=m {
            for j in 0..=m {
                let (u, v) = (i as f64 * h, j as f64 * h);
                s += w(i) * w(j) * (u * u + v * v).sqrt() * 4.0 * (1.0 - u) * (1.0 - v);
            }
        }
        s *= h * h / 9.0;
        assert!((s - closed).abs() < 1e-6, "{s}");
    }

    #[test]
    fn closed_form_1d_values() {
        assert!((energy_exact_1d(&d1(&[0.5])).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((energy_exact_1d(&d1(&[0.25, 0.75])).unwrap() - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn batch_estimate_near_closed_form() {
        let b = sample_uniform(100_000, 1, RngConfig::new(3)).unwrap();
        let e = energy_distance(&d1(&[0.5]), &b).unwrap();
        assert!((e.value - 1.0 / 6.0).abs() < 0.003, "{e:?}");
        let e = energy_distance(&d1(&[0.25, 0.75]), &b).unwrap();
        assert!((e.value - 1.0 / 24.0).abs() < 0.003 + 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn design_equal_to_batch_gives_zero() {
        let b = sample_uniform(64, 3, RngConfig::new(9)).unwrap();
        let d = Design::new(b.as_slice().to_vec(), 3, "").unwrap();
        let e = energy_distance(&d, &b).unwrap();
        assert!(e.value.abs() < 1e-14, "{}", e.value);
        assert!(projected_kernel_sum(&d, &b).unwrap().abs() < 1e-10);
    }

    #[test]
    fn q_one_is_energy_bitwise() {
        let b = sample_sobol(512, 2, RngConfig::new(1)).unwrap();
        let d = Design::new(vec![0.1, 0.2, 0.7, 0.4, 0.5, 0.9], 2, "").unwrap();
        let a = energy_distance(&d, &b).unwrap();
        let c = q_energy_distance(&d, &b, 1.0).unwrap();
        assert_eq!(a.value.to_bits(), c.value.to_bits());
    }

    #[test]
    fn q_two_is_mean_gap() {
        let b = sample_uniform(1000, 1, RngConfig::new(4)).unwrap();
        let d = d1(&[0.5]);
        let mean_b = b.as_slice().iter().sum::<f64>() / 1000.0;
        let v = q_energy_distance(&d, &b, 2.0).unwrap().value;
        assert!((v - 2.0 * (mean_b - 0.5).powi(2)).abs() < 1e-12);
        assert!(q_energy_distance(&d, &b, 0.0).is_err());
    }

    #[test]
    fn q_half_matches_quadrature() {
        // oracle: closed-form 1-d integrals, checked against the batch path
        let d = d1(&[0.25, 0.75]);
        let exact = q_energy_exact_1d(&d, 0.5).unwrap();
        let b = sample_uniform(100_000, 1, RngConfig::new(12)).unwrap();
        let e = q_energy_distance(&d, &b, 0.5).unwrap();
        assert!((e.value - exact).abs() < 3.0 * e.std_error + 2e-3, "{} vs {exact}", e.value);
    }

    #[test]
    fn dimension_mismatch() {
        let b = sample_uniform(10, 2, RngConfig::new(1)).unwrap();
        assert!(matches!(energy_distance(&d1(&[0.5]), &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cl2_properties() {
        // oracle: 2-d tensor Simpson quadrature of the kernel against (F - F_n)^2 for D = {0.5}
        let d = d1(&[0.5]);
        let k = |x: f64, y: f64| 1.0 + 0.5 * (x - 0.5).abs() + 0.5 * (y - 0.5).abs() - 0.5 * (x - y).abs();
        let m = 2000;
        let h = 1.0 / m as f64;
        let w = |k: usize| if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        let mut ff = 0.0;
        let mut fx = 0.0;
        for a in 0..=m {
            let x = a as f64 * h;
            fx += w(a) * k(x, 0.5);
            for b in 0..=m {
                ff += w(a) * w(b) * k(x, b as f64 * h);
            }
        }
        ff *= h * h / 9.0;
        fx *= h / 3.0;
        let oracle = ff - 2.0 * fx + k(0.5, 0.5);
        assert!((cl2_discrepancy(&d) - oracle).abs() < 1e-6);

        let mut rng = RngConfig::new(2).rng();
        for _ in 0..200 {
            let pts: Vec<f64> = (0..12).map(|_| rng.random()).collect();
            let d = Design::new(pts.clone(), 3, "").unwrap();
            assert!(cl2_discrepancy(&d) >= -1e-12);
            let refl = Design::new(pts.iter().map(|v| 1.0 - v).collect(), 3, "").unwrap();
            assert!((cl2_discrepancy(&d) - cl2_discrepancy(&refl)).abs() < 1e-12);
        }
    }

    #[test]
    fn psp_objective_degenerate_kernel() {
        let d = Design::new(vec![0.1, 0.9, 0.4, 0.3], 2, "").unwrap();
        let b = sample_sobol(64, 2, RngConfig::new(1)).unwrap();
        let zero = PriorDrawBatch::from_weights(vec![0.0; 10], 2).unwrap();
        assert!((psp_objective(&d, &b, &zero).unwrap() + 1.0).abs() < 1e-14);
        assert!((psp_objective_exact_y(&d, &zero).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn psp_objective_single_point_exp_prior() {
        // E_{Y,theta}[gamma] = sqrt(lambda) * phi(0.5; 1) in 1-d with phi = 2 atan(0.5)
        let expected = -2.0 * 2.0 * 0.5f64.atan() + 1.0;
        let d = d1(&[0.5]);
        let pri = sample_exp_prior(1.0, 1, 200_000, RngConfig::new(8)).unwrap();
        let v = psp_objective_exact_y(&d, &pri).unwrap();
        assert!((v - expected).abs() < 5e-3, "{v} vs {expected}");
        assert!((expected + 0.854590).abs() < 1e-6);
    }

    #[test]
    fn projected_kernel_scaling() {
        let b = sample_sobol(2048, 2, RngConfig::new(5)).unwrap();
        let d = Design::new(vec![0.1, 0.2, 0.6, 0.9, 0.35, 0.5], 2, "").unwrap();
        let one = projected_kernel_sum(&d, &b).unwrap();
        let two = projected_kernel_sum_scaled(&d, &b, 2.0).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-12 * one.abs().max(1.0));
    }
}
