//! Gaussian process emulation with the Gaussian correlation
//! `r(x, y) = exp(-sum_l theta_l (x_l - y_l)^2)`, prediction-error
//! criteria, and fractional Brownian motion paths.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::energy::q_energy_distance;
use crate::error::{Error, Result};
use crate::kernel::gaussian;
use crate::rng::RngConfig;
use crate::sampling::{BatchSource, SampleBatch};
use crate::sobol::sobol_u32;

/// Largest jitter tried before a factorization is declared failed.
pub const MAX_NUGGET: f64 = 1e-4;
const MIN_ESCALATED_NUGGET: f64 = 1e-8;
pub const THETA_BOUNDS: (f64, f64) = (1e-2, 1e2);
pub const MLE_STARTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThetaSpec {
    Fixed(Vec<f64>),
    /// Maximize the profile likelihood over `THETA_BOUNDS^p`.
    Mle,
}

#[derive(Debug, Clone)]
pub struct GpModel {
    pub design: Design,
    pub responses: Vec<f64>,
    pub theta: Vec<f64>,
    pub mu: f64,
    pub sigma2: f64,
    /// Jitter actually used after escalation.
    pub nugget: f64,
    pub chol: Cholesky<f64, Dyn>,
    /// `R^{-1} (f - mu 1)`
    alpha: DVector<f64>,
}

fn corr_matrix(d: &Design, theta: &[f64], nugget: f64) -> DMatrix<f64> {
    let n = d.n();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 + nugget
        } else {
            gaussian(d.row(i), d.row(j), theta)
        }
    })
}

/// Cholesky of `R + nugget I`, escalating the nugget by x10 from
/// `max(nugget, 1e-8)` up to [`MAX_NUGGET`] on failure.
pub(crate) fn factor_with_ladder(d: &Design, theta: &[f64], nugget: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut g = nugget;
    loop {
        if let Some(c) = Cholesky::new(corr_matrix(d, theta, g)) {
            return Ok((c, g));
        }
        let next = if g < MIN_ESCALATED_NUGGET {
            MIN_ESCALATED_NUGGET
        } else {
            g * 10.0
        };
        if next > MAX_NUGGET * (1.0 + 1e-9) {
            return Err(Error::Factorization { nugget: g });
        }
        g = next;
    }
}

fn check_theta(theta: &[f64], p: usize) -> Result<()> {
    if theta.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: theta.len(),
        });
    }
    if theta.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::invalid("correlation parameters must be finite and non-negative"));
    }
    Ok(())
}

struct Profile {
    chol: Cholesky<f64, Dyn>,
    nugget: f64,
    mu: f64,
    sigma2: f64,
    alpha: DVector<f64>,
    loglik: f64,
}

fn profile(d: &Design, f: &DVector<f64>, theta: &[f64], nugget: f64) -> Result<Profile> {
    let n = d.n();
    let (chol, nugget) = factor_with_ladder(d, theta, nugget)?;
    let ones = DVector::from_element(n, 1.0);
    let ri1 = chol.solve(&ones);
    let rif = chol.solve(f);
    let mu = ones.dot(&rif) / ones.dot(&ri1);
    let resid = f - DVector::from_element(n, mu);
    let alpha = chol.solve(&resid);
    let sigma2 = (resid.dot(&alpha) / n as f64).max(0.0);
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let loglik = -0.5 * n as f64 * sigma2.max(1e-300).ln() - 0.5 * logdet;
    Ok(Profile {
        chol,
        nugget,
        mu,
        sigma2,
        alpha,
        loglik,
    })
}

/// Profile log-likelihood `-(n/2) log sigma2_hat - (1/2) log|R|` (constants dropped).
pub fn profile_loglik(d: &Design, responses: &[f64], theta: &[f64], nugget: f64) -> Result<f64> {
    check_theta(theta, d.p())?;
    Ok(profile(d, &DVector::from_column_slice(responses), theta, nugget)?.loglik)
}

/// Multi-start points for the likelihood search, in `log theta`.
pub fn mle_starts(p: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = (THETA_BOUNDS.0.ln(), THETA_BOUNDS.1.ln());
    (1..=MLE_STARTS as u32)
        .map(|k| {
            (0..p)
                .map(|l| lo + (hi - lo) * (sobol_u32(k, l) as f64 / 4294967296.0))
                .collect()
        })
        .collect()
}

/// Compass search on the profile likelihood in `log theta`, from each of
/// [`mle_starts`]; returns the best `theta`.
fn mle_theta(d: &Design, f: &DVector<f64>, nugget: f64) -> Vec<f64> {
    let p = d.p();
    let (lo, hi) = (THETA_BOUNDS.0.ln(), THETA_BOUNDS.1.ln());
    let ll = |z: &[f64]| {
        let t: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        profile(d, f, &t, nugget).map(|pr| pr.loglik).unwrap_or(f64::NEG_INFINITY)
    };
    let mut best = (f64::NEG_INFINITY, vec![0.0; p]);
    for start in mle_starts(p) {
        let mut z = start;
        let mut fz = ll(&z);
        let mut step = 1.0;
        while step > 1e-3 {
            let mut improved = false;
            for l in 0..p {
                for dir in [1.0, -1.0] {
                    let mut t = z.clone();
                    t[l] = (t[l] + dir * step).clamp(lo, hi);
                    if t[l] == z[l] {
                        continue;
                    }
                    let ft = ll(&t);
                    if ft > fz + 1e-12 {
                        z = t;
                        fz = ft;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if fz > best.0 {
            best = (fz, z);
        }
    }
    best.1.iter().map(|v| v.exp()).collect()
}

/// Fit with GLS mean and profile variance.
pub fn gp_fit(d: &Design, responses: &[f64], theta: &ThetaSpec, nugget: f64) -> Result<GpModel> {
    if responses.len() != d.n() {
        return Err(Error::DimensionMismatch {
            expected: d.n(),
            got: responses.len(),
        });
    }
    if let Some(i) = responses.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i + 1 });
    }
    if !(nugget >= 0.0) {
        return Err(Error::invalid("nugget must be non-negative"));
    }
    let f = DVector::from_column_slice(responses);
    let theta = match theta {
        ThetaSpec::Fixed(t) => {
            check_theta(t, d.p())?;
            t.clone()
        }
        ThetaSpec::Mle => mle_theta(d, &f, nugget),
    };
    let pr = profile(d, &f, &theta, nugget)?;
    Ok(GpModel {
        design: d.clone(),
        responses: responses.to_vec(),
        theta,
        mu: pr.mu,
        sigma2: pr.sigma2,
        nugget: pr.nugget,
        chol: pr.chol,
        alpha: pr.alpha,
    })
}

impl GpModel {
    pub fn loglik(&self) -> f64 {
        let n = self.design.n() as f64;
        let logdet = 2.0 * self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        -0.5 * n * self.sigma2.max(1e-300).ln() - 0.5 * logdet
    }

    fn r_new(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.design.n(), self.design.rows().map(|z| gaussian(x, z, &self.theta)))
    }

    /// `1 - r' R^{-1} r` at `x`.
    fn radicand(&self, r: &DVector<f64>) -> f64 {
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(r)
            .expect("Cholesky factor has a positive diagonal");
        1.0 - v.norm_squared()
    }
}

/// Predictive mean `mu + r' R^{-1}(f - mu 1)` and RMSE `sigma sqrt(1 - r' R^{-1} r)`.
pub fn gp_predict(m: &GpModel, xnew: &[f64]) -> Result<(f64, f64)> {
    if xnew.len() != m.design.p() {
        return Err(Error::DimensionMismatch {
            expected: m.design.p(),
            got: xnew.len(),
        });
    }
    let r = m.r_new(xnew);
    let mean = m.mu + r.dot(&m.alpha);
    let rad = m.radicand(&r);
    if rad < -1e-10 {
        return Err(Error::IllConditioned(rad));
    }
    Ok((mean, m.sigma2.sqrt() * rad.max(0.0).sqrt()))
}

/// Predictive means at many points.
pub fn gp_predict_mean(m: &GpModel, xs: &SampleBatch) -> Vec<f64> {
    xs.as_slice()
        .par_chunks(m.design.p())
        .map(|x| m.mu + m.r_new(x).dot(&m.alpha))
        .collect()
}

const NODE_CHUNK: usize = 256;

/// Integrated RMSE with `sigma = 1`: the mean of `sqrt(1 - r' R^{-1} r)` over
/// the integration nodes. The design is factored with the nugget ladder
/// starting at 0.
pub fn irmse(d: &Design, theta: &[f64], nodes: &SampleBatch) -> Result<f64> {
    check_theta(theta, d.p())?;
    if nodes.p() != d.p() {
        return Err(Error::DimensionMismatch {
            expected: d.p(),
            got: nodes.p(),
        });
    }
    let (chol, _) = factor_with_ladder(d, theta, 0.0)?;
    let l = chol.l();
    let n = d.n();
    let p = d.p();
    let sums: Vec<f64> = nodes
        .as_slice()
        .par_chunks(NODE_CHUNK * p)
        .map(|chunk| {
            let m = chunk.len() / p;
            let r = DMatrix::from_fn(n, m, |i, k| gaussian(d.row(i), &chunk[k * p..(k + 1) * p], theta));
            let v = l.solve_lower_triangular(&r).expect("positive diagonal");
            v.column_iter().map(|c| (1.0 - c.norm_squared()).max(0.0).sqrt()).sum::<f64>()
        })
        .collect();
    Ok(sums.iter().sum::<f64>() / nodes.len() as f64)
}

/// `min_theta IRMSE_theta(D*) / IRMSE_theta(d)`, with `D*` the best of
/// `d` and `competitors` at each `theta`.
pub fn efficiency(d: &Design, competitors: &[Design], theta_grid: &[Vec<f64>], nodes: &SampleBatch) -> Result<f64> {
    let mut pool = vec![d.clone()];
    pool.extend(competitors.iter().cloned());
    Ok(efficiency_table(&pool, theta_grid, nodes)?[0])
}

/// IRMSE of every pool member at every grid point (`[theta][design]`).
pub fn irmse_matrix(pool: &[Design], theta_grid: &[Vec<f64>], nodes: &SampleBatch) -> Result<Vec<Vec<f64>>> {
    if theta_grid.is_empty() || pool.is_empty() {
        return Err(Error::Empty);
    }
    theta_grid
        .iter()
        .map(|t| pool.iter().map(|d| irmse(d, t, nodes)).collect())
        .collect()
}

/// Efficiency of every pool member against the pool.
pub fn efficiency_table(pool: &[Design], theta_grid: &[Vec<f64>], nodes: &SampleBatch) -> Result<Vec<f64>> {
    Ok(efficiency_from_irmse(&irmse_matrix(pool, theta_grid, nodes)?))
}

pub fn efficiency_from_irmse(m: &[Vec<f64>]) -> Vec<f64> {
    let k = m[0].len();
    (0..k)
        .map(|j| {
            m.iter()
                .map(|row| {
                    let best = row.iter().cloned().fold(f64::INFINITY, f64::min);
                    ratio(best, row[j])
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `best / own` with `0/0 = 1`.
fn ratio(best: f64, own: f64) -> f64 {
    if own == 0.0 {
        1.0
    } else {
        best / own
    }
}

/// Mean absolute prediction error of a fitted emulator over `nodes`.
pub fn abs_error(d: &Design, f: &(dyn Fn(&[f64]) -> f64 + Sync), theta: &ThetaSpec, nodes: &SampleBatch) -> Result<f64> {
    let y: Vec<f64> = d.rows().map(f).collect();
    let m = gp_fit(d, &y, theta, 1e-8)?;
    let pred = gp_predict_mean(&m, nodes);
    let err: f64 = nodes.rows().zip(&pred).map(|(x, p)| (f(x) - p).abs()).sum();
    Ok(err / nodes.len() as f64)
}

/// `IRMSE~(D*) / IRMSE~(d)` with `IRMSE~` the mean absolute error of an
/// emulator fitted to `f` on each design.
pub fn eff_tilde(
    d: &Design,
    competitors: &[Design],
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    theta: &ThetaSpec,
    nodes: &SampleBatch,
) -> Result<f64> {
    let mut pool = vec![d.clone()];
    pool.extend(competitors.iter().cloned());
    Ok(eff_tilde_table(&pool, f, theta, nodes)?[0])
}

pub fn eff_tilde_table(
    pool: &[Design],
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    theta: &ThetaSpec,
    nodes: &SampleBatch,
) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::Empty);
    }
    let errs = pool
        .iter()
        .map(|d| abs_error(d, f, theta, nodes))
        .collect::<Result<Vec<_>>>()?;
    let best = errs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(errs.iter().map(|&e| ratio(best, e)).collect())
}

/// Fractional Brownian motion with covariance
/// `(sigma2/2)(||x||^q + ||y||^q - ||x - y||^q)`, observed on `grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmSpec {
    pub q: f64,
    pub sigma2: f64,
    pub p: usize,
    /// Row-major `m x p` evaluation points.
    pub grid: Vec<f64>,
}

impl FbmSpec {
    pub fn new(q: f64, sigma2: f64, grid: Vec<f64>, p: usize) -> Result<Self> {
        let s = Self { q, sigma2, p, grid };
        s.validate()?;
        Ok(s)
    }

    /// `m` midpoints `(k + 1/2)/m` of `[0, 1]`.
    pub fn midpoint_grid_1d(m: usize, q: f64, sigma2: f64) -> Result<Self> {
        Self::new(q, sigma2, (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect(), 1)
    }

    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 2.0) {
            return Err(Error::invalid("fBm exponent must lie in (0, 2)"));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::invalid("fBm variance scale must be positive"));
        }
        if self.p == 0 || self.grid.is_empty() || self.grid.len() % self.p != 0 {
            return Err(Error::invalid("fBm grid must be a non-empty m x p buffer"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.grid.len() / self.p
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn cov(&self, x: &[f64], y: &[f64]) -> f64 {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nd = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        0.5 * self.sigma2 * (nx.powf(self.q) + ny.powf(self.q) - nd.powf(self.q))
    }
}

/// Paths at arbitrary points (`points` row-major, `p` columns), returned as
/// `paths x points`. Repeated points share a value and points at the origin
/// are exactly 0.
fn fbm_paths_at(spec: &FbmSpec, points: &[f64], count: usize, rng: RngConfig) -> Result<Vec<Vec<f64>>> {
    let p = spec.p;
    let m = points.len() / p;
    // unique non-origin points
    let mut uniq: Vec<usize> = Vec::new();
    let mut map = vec![usize::MAX; m];
    let mut seen = std::collections::HashMap::new();
    for i in 0..m {
        let x = &points[i * p..(i + 1) * p];
        if x.iter().all(|&v| v == 0.0) {
            continue;
        }
        let key: Vec<u64> = x.iter().map(|v| (v + 0.0).to_bits()).collect();
        let k = *seen.entry(key).or_insert_with(|| {
            uniq.push(i);
            uniq.len() - 1
        });
        map[i] = k;
    }
    let u = uniq.len();
    let mut paths = vec![vec![0.0; m]; count];
    if u == 0 || count == 0 {
        return Ok(paths);
    }
    let row = |k: usize| &points[uniq[k] * p..(uniq[k] + 1) * p];
    let cov = DMatrix::from_fn(u, u, |a, b| spec.cov(row(a), row(b)));
    let scale = cov.diagonal().max();
    let mut chol = None;
    for jitter in [0.0, 1e-12, 1e-10, 1e-8, 1e-6] {
        let mut c = cov.clone();
        for a in 0..u {
            c[(a, a)] += jitter * scale;
        }
        if let Some(f) = Cholesky::new(c) {
            chol = Some(f);
            break;
        }
    }
    let l = chol.ok_or(Error::Factorization { nugget: 1e-6 * scale })?.l();
    let mut g = rng.rng();
    let z = DMatrix::from_fn(u, count, |_, _| StandardNormal.sample(&mut g));
    let vals = l * z;
    for (c, path) in paths.iter_mut().enumerate() {
        for i in 0..m {
            if map[i] != usize::MAX {
                path[i] = vals[(map[i], c)];
            }
        }
    }
    Ok(paths)
}

/// `count` sample paths on the spec's grid (`paths x grid points`).
pub fn fbm_simulate(spec: &FbmSpec, count: usize, rng: RngConfig) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    fbm_paths_at(spec, &spec.grid, count, rng)
}

/// Monte Carlo `E[I^2]` for `I = (grid mean of Z) - (design mean of Z)`,
/// together with `(sigma2/2)` times the q-energy distance between the
/// design and the grid.
pub fn fbm_integration_error_moment(d: &Design, spec: &FbmSpec, paths: usize, rng: RngConfig) -> Result<(f64, f64)> {
    spec.validate()?;
    if d.p() != spec.p {
        return Err(Error::DimensionMismatch {
            expected: spec.p,
            got: d.p(),
        });
    }
    if paths == 0 {
        return Err(Error::invalid("need at least one path"));
    }
    let m = spec.len();
    let mut pts = spec.grid.clone();
    pts.extend_from_slice(d.as_slice());
    let z = fbm_paths_at(spec, &pts, paths, rng)?;
    let n = d.n() as f64;
    let moment = z
        .iter()
        .map(|path| {
            let i = path[..m].iter().sum::<f64>() / m as f64 - path[m..].iter().sum::<f64>() / n;
            i * i
        })
        .sum::<f64>()
        / paths as f64;
    let grid = SampleBatch::from_points(spec.grid.clone(), spec.p, BatchSource::MonteCarlo, 0)?;
    let reference = 0.5 * spec.sigma2 * q_energy_distance(d, &grid, spec.q)?.value;
    Ok((moment, reference))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_sobol, sample_uniform};
    use approx::assert_relative_eq;

    fn d1(xs: &[f64]) -> Design {
        Design::new(xs.to_vec(), 1, "").unwrap()
    }

    #[test]
    fn correlation_matrix_shape() {
        let d = d1(&[0.1, 0.6]);
        let r = corr_matrix(&d, &[3.0], 0.0);
        assert_eq!(r[(0, 0)], 1.0);
        assert_eq!(r[(1, 1)], 1.0);
        assert!(r[(0, 1)] > 0.0 && r[(0, 1)] < 1.0);
    }

    #[test]
    fn constant_responses() {
        let d = sample_uniform(6, 2, RngConfig::new(1)).unwrap().into_design("").unwrap();
        let m = gp_fit(&d, &[2.5; 6], &ThetaSpec::Fixed(vec![2.0, 2.0]), 0.0).unwrap();
        assert_relative_eq!(m.mu, 2.5, epsilon = 1e-10);
        assert!(m.sigma2.abs() < 1e-20);
    }

    #[test]
    fn interpolates_design_points() {
        let d = sample_uniform(8, 2, RngConfig::new(2)).unwrap().into_design("").unwrap();
        let y: Vec<f64> = d.rows().map(|x| (3.0 * x[0]).sin() + x[1] * x[1]).collect();
        let m = gp_fit(&d, &y, &ThetaSpec::Fixed(vec![5.0, 5.0]), 0.0).unwrap();
        for (x, f) in d.rows().zip(&y) {
            let (mean, rmse) = gp_predict(&m, x).unwrap();
            assert!((mean - f).abs() < 1e-6);
            assert!(rmse < 1e-7 * m.sigma2.sqrt().max(1.0) + 1e-7);
        }
    }

    #[test]
    fn far_point_reverts_to_mean() {
        let d = d1(&[0.0, 0.05]);
        let m = gp_fit(&d, &[1.0, 3.0], &ThetaSpec::Fixed(vec![100.0]), 0.0).unwrap();
        let (mean, rmse) = gp_predict(&m, &[1.0]).unwrap();
        assert_relative_eq!(mean, m.mu, epsilon = 1e-12);
        assert_relative_eq!(rmse, m.sigma2.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn single_point_hand_algebra() {
        let d = d1(&[0.3]);
        let m = gp_fit(&d, &[2.0], &ThetaSpec::Fixed(vec![10.0]), 0.0).unwrap();
        // n = 1: mu = f1, sigma2 = 0, so use the formula with the model's own mu and sigma
        let r = (-10.0f64 * 0.16).exp();
        let (mean, rmse) = gp_predict(&m, &[0.7]).unwrap();
        assert_relative_eq!(mean, m.mu + r * (2.0 - m.mu), epsilon = 1e-14);
        assert_relative_eq!(rmse, m.sigma2.sqrt() * (1.0 - r * r).sqrt(), epsilon = 1e-14);
        // and the radicand on its own
        let rad = m.radicand(&m.r_new(&[0.7]));
        assert_relative_eq!(rad, 1.0 - r * r, epsilon = 1e-14);
    }

    #[test]
    fn mle_beats_every_start_and_is_local_max() {
        let d = sample_sobol(20, 2, RngConfig::new(3)).unwrap().into_design("").unwrap();
        let y: Vec<f64> = d.rows().map(|x| (4.0 * x[0]).sin() + 0.3 * x[1]).collect();
        let m = gp_fit(&d, &y, &ThetaSpec::Mle, 1e-8).unwrap();
        let best = profile_loglik(&d, &y, &m.theta, 1e-8).unwrap();
        for s in mle_starts(2) {
            let t: Vec<f64> = s.iter().map(|v| v.exp()).collect();
            assert!(best >= profile_loglik(&d, &y, &t, 1e-8).unwrap());
        }
        for l in 0..2 {
            for f in [0.95, 1.05] {
                let mut t = m.theta.clone();
                t[l] = (t[l] * f).clamp(THETA_BOUNDS.0, THETA_BOUNDS.1);
                assert!(best >= profile_loglik(&d, &y, &t, 1e-8).unwrap() - 1e-9);
            }
        }
    }

    #[test]
    fn nugget_ladder_handles_duplicates_in_projection() {
        // two points equal in the only active coordinate
        let d = Design::from_rows(&[[0.2, 0.1], [0.2, 0.9], [0.7, 0.5]], "").unwrap();
        let (_, g) = factor_with_ladder(&d, &[4.0, 0.0], 0.0).unwrap();
        assert!(g > 0.0 && g <= MAX_NUGGET);
    }

    #[test]
    fn irmse_limits_and_augmentation() {
        let nodes = sample_sobol(1024, 1, RngConfig::new(0)).unwrap();
        let v = irmse(&d1(&[0.5]), &[1e6], &nodes).unwrap();
        assert!((v - 1.0).abs() < 0.01);
        for seed in 0..100 {
            let pts = sample_uniform(7, 2, RngConfig::new(seed)).unwrap();
            let nodes = sample_sobol(256, 2, RngConfig::new(seed + 1000)).unwrap();
            let small = Design::new(pts.as_slice()[..12].to_vec(), 2, "").unwrap();
            let big = pts.into_design("").unwrap();
            let t = [3.0, 3.0];
            assert!(irmse(&big, &t, &nodes).unwrap() <= irmse(&small, &t, &nodes).unwrap() + 1e-12);
        }
    }

    #[test]
    fn efficiency_basics() {
        let nodes = sample_sobol(512, 2, RngConfig::new(0)).unwrap();
        let grid = vec![vec![1.0, 1.0], vec![5.0, 0.0]];
        let a = sample_sobol(10, 2, RngConfig::new(1)).unwrap().into_design("").unwrap();
        let b = sample_uniform(10, 2, RngConfig::new(2)).unwrap().into_design("").unwrap();
        assert_eq!(efficiency(&a, &[], &grid, &nodes).unwrap(), 1.0);
        let t = efficiency_table(&[a, b], &grid, &nodes).unwrap();
        assert!(t.iter().all(|&e| e > 0.0 && e <= 1.0));
        assert!(efficiency_table(&[], &grid, &nodes).is_err());
    }

    #[test]
    fn eff_tilde_degenerate_cases() {
        let nodes = sample_sobol(256, 2, RngConfig::new(0)).unwrap();
        let a = sample_sobol(8, 2, RngConfig::new(1)).unwrap().into_design("").unwrap();
        let b = sample_uniform(8, 2, RngConfig::new(2)).unwrap().into_design("").unwrap();
        let konst = |_: &[f64]| 4.0;
        let t = eff_tilde_table(&[a.clone(), b], &konst, &ThetaSpec::Fixed(vec![1.0, 1.0]), &nodes).unwrap();
        assert_eq!(t, vec![1.0, 1.0]);
        let f = |x: &[f64]| x[0] * x[1];
        assert_eq!(eff_tilde(&a, &[], &f, &ThetaSpec::Fixed(vec![1.0, 1.0]), &nodes).unwrap(), 1.0);
    }

    #[test]
    fn fbm_variance_and_anchor() {
        let spec = FbmSpec::new(1.0, 1.0, vec![0.0, 0.5, 1.0], 1).unwrap();
        let paths = fbm_simulate(&spec, 4000, RngConfig::new(7)).unwrap();
        assert!(paths.iter().all(|z| z[0] == 0.0));
        let var1 = paths.iter().map(|z| z[2] * z[2]).sum::<f64>() / 4000.0;
        assert!((var1 - 1.0).abs() < 0.05, "{var1}");
        let a: Vec<f64> = paths.iter().map(|z| z[1] - z[0]).collect();
        let b: Vec<f64> = paths.iter().map(|z| z[2] - z[1]).collect();
        let ma = a.iter().sum::<f64>() / 4000.0;
        let mb = b.iter().sum::<f64>() / 4000.0;
        let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>();
        let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>();
        let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>();
        assert!((cov / (va * vb).sqrt()).abs() < 0.05);
    }

    #[test]
    fn fbm_design_equal_to_grid_gives_zero() {
        let spec = FbmSpec::midpoint_grid_1d(16, 1.0, 1.0).unwrap();
        let d = Design::new(spec.grid.clone(), 1, "").unwrap();
        let (m, r) = fbm_integration_error_moment(&d, &spec, 50, RngConfig::new(1)).unwrap();
        assert!(m < 1e-24);
        assert!(r.abs() < 1e-15);
    }

    #[test]
    fn fbm_moment_scales_with_sigma2() {
        let d = d1(&[0.1, 0.3, 0.5, 0.7, 0.9]);
        let s1 = FbmSpec::midpoint_grid_1d(64, 1.0, 1.0).unwrap();
        let s4 = FbmSpec::midpoint_grid_1d(64, 1.0, 4.0).unwrap();
        let (m1, r1) = fbm_integration_error_moment(&d, &s1, 300, RngConfig::new(2)).unwrap();
        let (m4, r4) = fbm_integration_error_moment(&d, &s4, 300, RngConfig::new(2)).unwrap();
        assert_relative_eq!(m4, 4.0 * m1, max_relative = 1e-9);
        assert_relative_eq!(r4, 4.0 * r1, max_relative = 1e-12);
    }

    #[test]
    fn fbm_rejects_bad_exponent() {
        assert!(FbmSpec::midpoint_grid_1d(8, 2.0, 1.0).is_err());
        assert!(FbmSpec::midpoint_grid_1d(8, 0.0, 1.0).is_err());
    }
}
