//! Batches approximating `U[0,1]^p`, kernel-parameter prior draws, and
//! baseline designs.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, PodSpec};
use crate::rng::RngConfig;
use crate::sobol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchSource {
    MonteCarlo,
    RandomizedSobol,
}

/// `N` points in `[0,1]^p` standing in for the target distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    points: Vec<f64>,
    n: usize,
    p: usize,
    pub source: BatchSource,
    pub seed: u64,
}

impl SampleBatch {
    pub fn from_points(points: Vec<f64>, p: usize, source: BatchSource, seed: u64) -> Result<Self> {
        if p == 0 || points.is_empty() {
            return Err(Error::Empty);
        }
        if points.len() % p != 0 {
            return Err(Error::invalid("batch buffer length is not a multiple of p"));
        }
        if let Some(pos) = points.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::OutOfRange {
                row: pos / p + 1,
                value: points[pos],
            });
        }
        let n = points.len() / p;
        Ok(Self {
            points,
            n,
            p,
            source,
            seed,
        })
    }

    /// The design's own points as a batch (the empirical measure of `d`).
    pub fn from_design(d: &Design) -> Self {
        Self {
            points: d.as_slice().to_vec(),
            n: d.n(),
            p: d.p(),
            source: BatchSource::MonteCarlo,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.points[m * self.p..(m + 1) * self.p]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        self.rows().map(|r| r[l]).collect()
    }

    /// Reinterpret the batch as a design (fails on repeated rows).
    pub fn into_design(self, label: impl Into<String>) -> Result<Design> {
        Design::new(self.points, self.p, label)
    }
}

fn check_np(n: usize, p: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("n and p must be at least 1"));
    }
    Ok(())
}

/// I.i.d. uniform draws on `[0,1]^p`.
pub fn sample_uniform(n: usize, p: usize, rng: RngConfig) -> Result<SampleBatch> {
    check_np(n, p)?;
    let mut g = rng.rng();
    let points = (0..n * p).map(|_| g.random::<f64>()).collect();
    SampleBatch::from_points(points, p, BatchSource::MonteCarlo, rng.seed)
}

/// First `n` points of a digitally shifted Sobol' sequence.
pub fn sample_sobol(n: usize, p: usize, rng: RngConfig) -> Result<SampleBatch> {
    check_np(n, p)?;
    let mut g = rng.rng();
    let shifts: Vec<u64> = (0..p).map(|_| g.next_u64()).collect();
    let points = sobol::shifted_points(n, p, &shifts)?;
    SampleBatch::from_points(points, p, BatchSource::RandomizedSobol, rng.seed)
}

pub fn sample_batch(source: BatchSource, n: usize, p: usize, rng: RngConfig) -> Result<SampleBatch> {
    match source {
        BatchSource::MonteCarlo => sample_uniform(n, p, rng),
        BatchSource::RandomizedSobol => sample_sobol(n, p, rng),
    }
}

/// Kernel-parameter prior used by projected support points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Prior {
    /// Product-and-order weights with i.i.d. Gamma product weights.
    Pod { max_order: usize },
    /// Independent `Exp(lambda)` scale per dimension, no interactions.
    Exp { lambda: f64 },
}

/// `R` draws of kernel scale parameters.
///
/// Every draw is stored twice: the raw product weights `theta_l`, and the
/// per-dimension weights `w_l = sum_{u containing l} theta_u` that the
/// generalized Gaussian kernel reduces to, since
/// `sum_u theta_u ||x_u - y_u||^2 = sum_l w_l (x_l - y_l)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDrawBatch {
    pub prior: Option<Prior>,
    p: usize,
    r: usize,
    product: Vec<f64>,
    weights: Vec<f64>,
    pod: Option<PodSpec>,
}

impl PriorDrawBatch {
    /// Draws with explicit per-dimension kernel weights (`r x p`, row-major).
    pub fn from_weights(weights: Vec<f64>, p: usize) -> Result<Self> {
        if p == 0 || weights.is_empty() || weights.len() % p != 0 {
            return Err(Error::invalid("weights must be a non-empty r x p buffer"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("kernel weights must be finite and non-negative"));
        }
        Ok(Self {
            prior: None,
            p,
            r: weights.len() / p,
            product: weights.clone(),
            weights,
            pod: None,
        })
    }

    pub fn len(&self) -> usize {
        self.r
    }

    pub fn is_empty(&self) -> bool {
        self.r == 0
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Raw product weights `theta_l` of draw `r`.
    pub fn product_weights(&self, r: usize) -> &[f64] {
        &self.product[r * self.p..(r + 1) * self.p]
    }

    /// Effective per-dimension kernel weights of draw `r`.
    pub fn weights(&self, r: usize) -> &[f64] {
        &self.weights[r * self.p..(r + 1) * self.p]
    }

    pub fn all_weights(&self) -> &[f64] {
        &self.weights
    }

    /// `theta_u` for the subset `u` (0-based dimension indices) under draw `r`.
    /// Subsets beyond the interaction cap, or non-singletons under an
    /// exponential prior, have weight zero.
    pub fn subset_weight(&self, r: usize, u: &[usize]) -> f64 {
        if u.is_empty() {
            return 0.0;
        }
        let theta = self.product_weights(r);
        match self.pod {
            Some(spec) => {
                if u.len() > spec.max_order {
                    return 0.0;
                }
                spec.order_weight(u.len()) * u.iter().map(|&l| theta[l]).product::<f64>()
            }
            None if u.len() == 1 => theta[u[0]],
            None => 0.0,
        }
    }
}

/// Per-dimension weights `w_l = theta_l * sum_{k<K} Gamma_{k+1} e_k(theta_{-l})`
/// where `e_k` is the k-th elementary symmetric polynomial of the other
/// product weights and `K` the interaction cap.
pub(crate) fn pod_effective_weights(theta: &[f64], spec: &PodSpec) -> Vec<f64> {
    let p = theta.len();
    let k_max = spec.max_order.min(p);
    let gammas: Vec<f64> = (1..=k_max).map(|k| spec.order_weight(k)).collect();
    let mut out = vec![0.0; p];
    let mut e = vec![0.0; k_max];
    for l in 0..p {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[0] = 1.0;
        for (k, &t) in theta.iter().enumerate() {
            if k == l {
                continue;
            }
            for j in (1..k_max).rev() {
                e[j] += t * e[j - 1];
            }
        }
        let s: f64 = gammas.iter().zip(&e).map(|(g, e)| g * e).sum();
        out[l] = theta[l] * s;
    }
    out
}

/// I.i.d. product weights `theta_l ~ Gamma(shape, scale)` under the POD form.
pub fn sample_pod_prior(spec: &KernelSpec, r: usize, rng: RngConfig) -> Result<PriorDrawBatch> {
    let KernelSpec::Pod(pod) = spec else {
        return Err(Error::invalid("sample_pod_prior requires a POD kernel spec"));
    };
    pod.validate()?;
    if r == 0 {
        return Err(Error::invalid("prior batch size must be at least 1"));
    }
    let gamma = Gamma::new(pod.shape, pod.scale).map_err(|e| Error::invalid(e.to_string()))?;
    let mut g = rng.rng();
    let mut product = Vec::with_capacity(r * pod.p);
    let mut weights = Vec::with_capacity(r * pod.p);
    for _ in 0..r {
        let theta: Vec<f64> = (0..pod.p)
            // Gamma(0.1) underflows to exactly 0 with small probability
            .map(|_| gamma.sample(&mut g).max(f64::MIN_POSITIVE))
            .collect();
        weights.extend(pod_effective_weights(&theta, pod));
        product.extend(theta);
    }
    Ok(PriorDrawBatch {
        prior: Some(Prior::Pod {
            max_order: pod.max_order,
        }),
        p: pod.p,
        r,
        product,
        weights,
        pod: Some(*pod),
    })
}

/// I.i.d. `theta_l ~ Exp(lambda)` for a first-order anisotropic Gaussian kernel.
pub fn sample_exp_prior(lambda: f64, p: usize, r: usize, rng: RngConfig) -> Result<PriorDrawBatch> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("exponential prior rate must be positive"));
    }
    check_np(r, p)?;
    let exp = Exp::new(lambda).map_err(|e| Error::invalid(e.to_string()))?;
    let mut g = rng.rng();
    let product: Vec<f64> = (0..r * p)
        .map(|_| exp.sample(&mut g).max(f64::MIN_POSITIVE))
        .collect();
    Ok(PriorDrawBatch {
        prior: Some(Prior::Exp { lambda }),
        p,
        r,
        weights: product.clone(),
        product,
        pod: None,
    })
}

pub fn sample_prior(prior: Prior, p: usize, r: usize, rng: RngConfig) -> Result<PriorDrawBatch> {
    match prior {
        Prior::Pod { max_order } => sample_pod_prior(&KernelSpec::Pod(PodSpec::new(p, max_order)), r, rng),
        Prior::Exp { lambda } => sample_exp_prior(lambda, p, r, rng),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Random,
    Sobol,
    MaximinLhd,
    Chebyshev1d,
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "sobol" => Ok(Self::Sobol),
            "maximin-lhd" => Ok(Self::MaximinLhd),
            "chebyshev-1d" | "chebyshev" => Ok(Self::Chebyshev1d),
            other => Err(Error::invalid(format!("unknown baseline design `{other}`"))),
        }
    }
}

pub fn baseline_design(kind: BaselineKind, n: usize, p: usize, rng: RngConfig) -> Result<Design> {
    check_np(n, p)?;
    let tag = |name: &str| format!("{name} n={n} p={p} seed={} stream={}", rng.seed, rng.stream);
    match kind {
        BaselineKind::Random => {
            let b = sample_uniform(n, p, rng)?;
            Design::new(b.points, p, tag("random"))
        }
        BaselineKind::Sobol => {
            let b = sample_sobol(n, p, rng)?;
            Design::new(b.points, p, tag("sobol"))
        }
        BaselineKind::MaximinLhd => maximin_lhd(n, p, rng, &LhdAnneal::default()).map(|d| d.with_label(tag("maximin-lhd"))),
        BaselineKind::Chebyshev1d => {
            if p != 1 {
                return Err(Error::invalid("chebyshev-1d requires p = 1"));
            }
            let pts = (1..=n)
                .map(|i| {
                    let t = (2 * i - 1) as f64 * std::f64::consts::PI / (2 * n) as f64;
                    ((1.0 + t.cos()) / 2.0).clamp(0.0, 1.0)
                })
                .collect();
            Design::new(pts, 1, tag("chebyshev-1d"))
        }
    }
}

/// Annealing schedule for the maximin Latin hypercube.
#[derive(Debug, Clone, Copy)]
pub struct LhdAnneal {
    pub proposals: usize,
    pub cooling: f64,
    pub cooling_every: usize,
    /// exponent of the Morris–Mitchell surrogate that drives acceptance
    pub phi_power: f64,
}

impl Default for LhdAnneal {
    fn default() -> Self {
        Self {
            proposals: 10_000,
            cooling: 0.95,
            cooling_every: 100,
            phi_power: 15.0,
        }
    }
}

/// Midpoint Latin hypercube improved by within-column swaps.
///
/// Proposals are accepted by simulated annealing on the Morris–Mitchell
/// `phi_q` surrogate of the maximin criterion; the returned design is the
/// incumbent with the largest minimum pairwise distance seen, so it is never
/// worse than the random starting hypercube.
pub fn maximin_lhd(n: usize, p: usize, rng: RngConfig, sched: &LhdAnneal) -> Result<Design> {
    check_np(n, p)?;
    let mut g = rng.rng();
    let mut levels = vec![0usize; n * p];
    for l in 0..p {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut g);
        for i in 0..n {
            levels[i * p + l] = perm[i];
        }
    }
    let coord = |k: usize| (k as f64 + 0.5) / n as f64;
    if n < 3 {
        let pts = levels.iter().map(|&k| coord(k)).collect();
        return Design::new(pts, p, "maximin-lhd");
    }

    let half_q = sched.phi_power / 2.0;
    let mut d2 = vec![0.0; n * n];
    let sqdist = |lv: &[usize], a: usize, b: usize| -> f64 {
        (0..p)
            .map(|l| {
                let t = coord(lv[a * p + l]) - coord(lv[b * p + l]);
                t * t
            })
            .sum()
    };
    for a in 0..n {
        for b in a + 1..n {
            let v = sqdist(&levels, a, b);
            d2[a * n + b] = v;
            d2[b * n + a] = v;
        }
    }
    let phi_sum = |d2: &[f64]| -> f64 {
        let mut s = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                s += d2[a * n + b].powf(-half_q);
            }
        }
        s
    };
    let min_d2 = |d2: &[f64]| -> f64 {
        let mut m = f64::INFINITY;
        for a in 0..n {
            for b in a + 1..n {
                m = m.min(d2[a * n + b]);
            }
        }
        m
    };

    let mut cur = phi_sum(&d2);
    let mut best_levels = levels.clone();
    let mut best_mm = min_d2(&d2);
    let mut temp = 0.1 * cur.powf(1.0 / sched.phi_power);
    let mut row_a = vec![0.0; n];
    let mut row_b = vec![0.0; n];

    for step in 0..sched.proposals {
        if step > 0 && step % sched.cooling_every == 0 {
            temp *= sched.cooling;
        }
        let l = g.random_range(0..p);
        let a = g.random_range(0..n);
        let mut b = g.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        levels.swap(a * p + l, b * p + l);
        let mut delta = 0.0;
        for k in 0..n {
            if k == a || k == b {
                continue;
            }
            row_a[k] = sqdist(&levels, a, k);
            row_b[k] = sqdist(&levels, b, k);
            delta += row_a[k].powf(-half_q) + row_b[k].powf(-half_q)
                - d2[a * n + k].powf(-half_q)
                - d2[b * n + k].powf(-half_q);
        }
        // the (a, b) distance is unchanged by a single-column swap
        let new = cur + delta;
        let crit_old = cur.powf(1.0 / sched.phi_power);
        let crit_new = new.max(0.0).powf(1.0 / sched.phi_power);
        let accept = crit_new <= crit_old || g.random::<f64>() < (-(crit_new - crit_old) / temp).exp();
        if accept {
            for k in 0..n {
                if k == a || k == b {
                    continue;
                }
                d2[a * n + k] = row_a[k];
                d2[k * n + a] = row_a[k];
                d2[b * n + k] = row_b[k];
                d2[k * n + b] = row_b[k];
            }
            cur = new;
            let mm = min_d2(&d2);
            if mm > best_mm {
                best_mm = mm;
                best_levels.copy_from_slice(&levels);
            }
        } else {
            levels.swap(a * p + l, b * p + l);
        }
        if step % 1000 == 999 {
            // refresh the running sum against drift
            cur = phi_sum(&d2);
        }
    }
    let pts = best_levels.iter().map(|&k| coord(k)).collect();
    Design::new(pts, p, "maximin-lhd")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::maximin;

    #[test]
    fn uniform_is_deterministic_and_in_range() {
        let a = sample_uniform(4, 2, RngConfig::new(7)).unwrap();
        let b = sample_uniform(4, 2, RngConfig::new(7)).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn uniform_mean() {
        let b = sample_uniform(100_000, 1, RngConfig::new(1)).unwrap();
        let mean = b.as_slice().iter().sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }

    fn stratified(col: &[f64], k: u32) -> bool {
        let m = 1usize << k;
        let mut counts = vec![0usize; m];
        for &v in &col[..m] {
            counts[((v * m as f64) as usize).min(m - 1)] += 1;
        }
        counts.iter().all(|&c| c == 1)
    }

    #[test]
    fn sobol_stratification() {
        let b = sample_sobol(8, 1, RngConfig::new(3)).unwrap();
        assert!(stratified(b.as_slice(), 3));
        for s in 0..4 {
            let b = sample_sobol(256, 5, RngConfig::with_stream(9, s)).unwrap();
            for l in 0..5 {
                let col = b.column(l);
                for k in 0..=8 {
                    assert!(stratified(&col, k), "stream {s} dim {l} k {k}");
                }
            }
        }
        let x = sample_sobol(8, 2, RngConfig::with_stream(9, 0)).unwrap();
        let y = sample_sobol(8, 2, RngConfig::with_stream(9, 1)).unwrap();
        assert_ne!(x, y);
    }

    #[test]
    fn pod_order_weights() {
        let spec = PodSpec::new(16, 2);
        assert!((spec.order_weight(1) - 0.5).abs() < 1e-15);
        for p in [1, 3, 10] {
            let s = PodSpec::new(p, 2);
            assert!((s.order_weight(2) / s.order_weight(1) - 0.5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn pod_effective_weights_match_subset_sum() {
        let spec = PodSpec::new(4, 3);
        let theta = [0.3, 1.2, 0.05, 2.0];
        let w = pod_effective_weights(&theta, &spec);
        // brute force over all subsets up to the cap
        for l in 0..4 {
            let mut s = 0.0;
            for mask in 1u32..16 {
                let u: Vec<usize> = (0..4).filter(|k| mask >> k & 1 == 1).collect();
                if !u.contains(&l) || u.len() > 3 {
                    continue;
                }
                s += spec.order_weight(u.len()) * u.iter().map(|&k| theta[k]).product::<f64>();
            }
            assert!((w[l] - s).abs() < 1e-14, "{l}: {} vs {s}", w[l]);
        }
    }

    #[test]
    fn gamma_prior_mean() {
        let draws = sample_pod_prior(&KernelSpec::Pod(PodSpec::new(1, 1)), 100_000, RngConfig::new(5)).unwrap();
        let mean = (0..draws.len()).map(|r| draws.product_weights(r)[0]).sum::<f64>() / 1e5;
        assert!((mean - 0.1).abs() < 0.01, "{mean}");
        assert!((0..draws.len()).all(|r| draws.product_weights(r)[0] > 0.0));
    }

    #[test]
    fn exp_prior_means() {
        let m = |lambda: f64| {
            let d = sample_exp_prior(lambda, 1, 100_000, RngConfig::new(2)).unwrap();
            d.all_weights().iter().sum::<f64>() / 1e5
        };
        let m1 = m(1.0);
        let m2 = m(2.0);
        assert!((m1 - 1.0).abs() < 0.01, "{m1}");
        assert!((m2 / m1 - 0.5).abs() < 1e-12);
        let d = sample_exp_prior(1.0, 3, 1000, RngConfig::new(2)).unwrap();
        assert!(d.all_weights().iter().all(|&w| w > 0.0));
        assert!(sample_exp_prior(0.0, 1, 10, RngConfig::new(1)).is_err());
    }

    #[test]
    fn chebyshev_nodes() {
        let d = baseline_design(BaselineKind::Chebyshev1d, 1, 1, RngConfig::new(0)).unwrap();
        assert!((d.row(0)[0] - 0.5).abs() < 1e-15);
        assert!(baseline_design(BaselineKind::Chebyshev1d, 5, 2, RngConfig::new(0)).is_err());
        let d = baseline_design(BaselineKind::Chebyshev1d, 7, 1, RngConfig::new(0)).unwrap();
        assert!((d.row(0)[0] - (1.0 + (std::f64::consts::PI / 14.0).cos()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn lhd_structure_and_improvement() {
        let d = baseline_design(BaselineKind::MaximinLhd, 5, 2, RngConfig::new(4)).unwrap();
        for l in 0..2 {
            let mut col = d.column(l);
            col.sort_by(f64::total_cmp);
            for (i, v) in col.iter().enumerate() {
                assert!((v - (2 * i + 1) as f64 / 10.0).abs() < 1e-15);
            }
        }
        for seed in 0..5 {
            let start = maximin_lhd(12, 3, RngConfig::new(seed), &LhdAnneal { proposals: 0, ..Default::default() }).unwrap();
            let opt = maximin_lhd(12, 3, RngConfig::new(seed), &LhdAnneal::default()).unwrap();
            assert!(maximin(&opt).unwrap() >= maximin(&start).unwrap());
        }
    }
}
