//! Distance-based design criteria.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::kernel::{euclid, sqdist};
use crate::rng::RngConfig;
use crate::sampling::{sample_sobol, SampleBatch};

/// Default Sobol candidate count per subspace for the sup in `mM_l`.
pub const DEFAULT_CANDIDATES: usize = 1 << 14;
/// Subset enumeration cap; beyond it subsets are sampled.
pub const DEFAULT_SUBSET_CAP: usize = 10_000;

/// One named criterion value with evaluation metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub meta: Map<String, Value>,
}

impl MetricReport {
    pub fn new(metric: impl Into<String>, value: f64) -> Self {
        Self {
            metric: metric.into(),
            value,
            meta: Map::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Smallest pairwise Euclidean distance.
pub fn maximin(d: &Design) -> Result<f64> {
    if d.n() < 2 {
        return Err(Error::invalid("maximin distance needs at least two points"));
    }
    let n = d.n();
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = d.row(i);
            (i + 1..n).map(|j| sqdist(xi, d.row(j))).fold(f64::INFINITY, f64::min)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(best.sqrt())
}

fn nearest_sq(pts: &[f64], p: usize, x: &[f64]) -> f64 {
    pts.chunks_exact(p).map(|z| sqdist(x, z)).fold(f64::INFINITY, f64::min)
}

/// Fill distance over a candidate set: the largest distance from a
/// candidate to its nearest design point.
pub fn minimax_fill(d: &Design, candidates: &SampleBatch) -> Result<f64> {
    check_dims(d.p(), candidates.p())?;
    if candidates.is_empty() {
        return Err(Error::Empty);
    }
    let best = candidates
        .as_slice()
        .par_chunks(d.p())
        .map(|c| nearest_sq(d.as_slice(), d.p(), c))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(best.sqrt())
}

/// [`minimax_fill`] followed by a simplex refinement from the best few
/// candidates; never smaller than the candidate value.
pub fn minimax_fill_refined(d: &Design, candidates: &SampleBatch) -> Result<f64> {
    check_dims(d.p(), candidates.p())?;
    if candidates.is_empty() {
        return Err(Error::Empty);
    }
    let p = d.p();
    let f = |x: &[f64]| nearest_sq(d.as_slice(), p, x).sqrt();
    let vals: Vec<f64> = candidates.as_slice().par_chunks(p).map(f).collect();
    Ok(refine_top(&vals, candidates.as_slice(), p, 8, &f))
}

fn refine_top(vals: &[f64], cand: &[f64], p: usize, k: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let best = vals[idx[0]];
    let step = 0.5 / (vals.len() as f64).powf(1.0 / p as f64);
    idx.iter()
        .take(k)
        .map(|&i| nelder_mead_max(f, &cand[i * p..(i + 1) * p], step, 200 * p))
        .fold(best, f64::max)
}

/// Box-constrained Nelder–Mead maximization; returns the best value seen.
fn nelder_mead_max(f: &(dyn Fn(&[f64]) -> f64 + Sync), x0: &[f64], step: f64, iters: usize) -> f64 {
    let p = x0.len();
    let clamp = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|t| t.clamp(0.0, 1.0)).collect() };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for l in 0..p {
        let mut v = x0.to_vec();
        v[l] += if v[l] + step <= 1.0 { step } else { -step };
        let v = clamp(v);
        let fv = f(&v);
        simplex.push((v, fv));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let spread = simplex[0].1 - simplex[p].1;
        if spread.abs() < 1e-14 {
            let size = simplex[1..]
                .iter()
                .map(|(v, _)| euclid(v, &simplex[0].0))
                .fold(0.0, f64::max);
            if size < 1e-12 {
                break;
            }
        }
        let centroid: Vec<f64> = (0..p)
            .map(|l| simplex[..p].iter().map(|(v, _)| v[l]).sum::<f64>() / p as f64)
            .collect();
        let worst = simplex[p].clone();
        let along = |t: f64| clamp((0..p).map(|l| centroid[l] + t * (centroid[l] - worst.0[l])).collect());
        let xr = along(1.0);
        let fr = f(&xr);
        if fr > simplex[0].1 {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[p] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[p - 1].1 {
            simplex[p] = (xr, fr);
        } else {
            let xc = along(-0.5);
            let fc = f(&xc);
            if fc > worst.1 {
                simplex[p] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = (0..p).map(|l| best[l] + 0.5 * (s.0[l] - best[l])).collect();
                    let fv = f(&v);
                    *s = (v, fv);
                }
            }
        }
    }
    simplex.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max)
}

/// Value of a projected index criterion with enumeration metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexValue {
    pub value: f64,
    pub subsets_evaluated: usize,
    /// `C(p, l)`, saturating.
    pub subsets_total: u64,
    pub sampled: bool,
    /// Some evaluated projection had coincident points.
    pub degenerate: bool,
}

impl IndexValue {
    pub fn report(&self, name: &str, l: usize) -> MetricReport {
        MetricReport::new(name, self.value)
            .with_meta("l", l)
            .with_meta("subsets_evaluated", self.subsets_evaluated)
            .with_meta("subsets_total", self.subsets_total)
            .with_meta("sampled", self.sampled)
            .with_meta("degenerate", self.degenerate)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for i in 0..k {
        c = match c.checked_mul((n - i) as u64) {
            Some(v) => v / (i as u64 + 1),
            None => return u64::MAX,
        };
    }
    c
}

/// All size-`l` subsets of `0..p` in lexicographic order, or `cap` sampled
/// subsets when there are more than `cap`.
fn subsets(p: usize, l: usize, cap: usize, rng: RngConfig) -> (Vec<Vec<usize>>, u64, bool) {
    let total = binomial(p, l);
    if total <= cap as u64 {
        let mut out = Vec::with_capacity(total as usize);
        let mut u: Vec<usize> = (0..l).collect();
        loop {
            out.push(u.clone());
            let mut k = l;
            while k > 0 && u[k - 1] == p - l + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            u[k - 1] += 1;
            for m in k..l {
                u[m] = u[m - 1] + 1;
            }
        }
        (out, total, false)
    } else {
        let mut g = rng.rng();
        let out = (0..cap)
            .map(|_| {
                let mut u = sample(&mut g, p, l).into_vec();
                u.sort_unstable();
                u
            })
            .collect();
        (out, total, true)
    }
}

fn check_l(l: usize, p: usize) -> Result<()> {
    if l == 0 || l > p {
        return Err(Error::invalid(format!("subspace dimension {l} must lie in 1..={p}")));
    }
    Ok(())
}

/// `{(1/n) sum_i ||x - z_i||^{-2l}}^{-1/(2l)}`, 0 when `x` hits a point.
fn soft_fill(pts: &[f64], l: usize, x: &[f64]) -> f64 {
    let n = pts.len() / l;
    let mut s = 0.0;
    for z in pts.chunks_exact(l) {
        let d2 = sqdist(x, z);
        if d2 == 0.0 {
            return 0.0;
        }
        s += d2.powi(-(l as i32));
    }
    (s / n as f64).powf(-0.5 / l as f64)
}

/// Projected minimax index `mM_l`: the worst size-`l` coordinate subspace
/// of the sup of a soft nearest-point distance. The sup is taken over a
/// randomized Sobol candidate set refined by a simplex walk.
pub fn projected_minimax_index(
    d: &Design,
    l: usize,
    candidates: usize,
    subset_cap: usize,
    rng: RngConfig,
) -> Result<IndexValue> {
    check_l(l, d.p())?;
    if candidates == 0 || subset_cap == 0 {
        return Err(Error::invalid("candidate count and subset cap must be positive"));
    }
    let (us, total, sampled) = subsets(d.p(), l, subset_cap, rng.derive(1));
    let cand = sample_sobol(candidates, l, rng.derive(2))?;
    let vals: Vec<f64> = us
        .par_iter()
        .map(|u| {
            let pts = d.project(u);
            let f = |x: &[f64]| soft_fill(&pts, l, x);
            let v: Vec<f64> = cand.rows().map(f).collect();
            refine_top(&v, cand.as_slice(), l, 1, &f)
        })
        .collect();
    Ok(IndexValue {
        value: vals.into_iter().fold(f64::NEG_INFINITY, f64::max),
        subsets_evaluated: us.len(),
        subsets_total: total,
        sampled,
        degenerate: false,
    })
}

/// Projected maximin index `Mm_l`: the worst size-`l` coordinate subspace
/// of `{C(n,2)^{-1} sum_{i<j} ||P_u x_i - P_u x_j||^{-2l}}^{-1/(2l)}`.
/// Coincident projected points give 0 and set `degenerate`.
pub fn projected_maximin_index(d: &Design, l: usize, subset_cap: usize, rng: RngConfig) -> Result<IndexValue> {
    check_l(l, d.p())?;
    if d.n() < 2 {
        return Err(Error::invalid("maximin index needs at least two points"));
    }
    if subset_cap == 0 {
        return Err(Error::invalid("subset cap must be positive"));
    }
    let (us, total, sampled) = subsets(d.p(), l, subset_cap, rng.derive(1));
    let n = d.n();
    let pairs = (n * (n - 1) / 2) as f64;
    let vals: Vec<f64> = us
        .par_iter()
        .map(|u| {
            let pts = d.project(u);
            let mut s = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    let d2 = sqdist(&pts[i * l..(i + 1) * l], &pts[j * l..(j + 1) * l]);
                    if d2 == 0.0 {
                        return 0.0;
                    }
                    s += d2.powi(-(l as i32));
                }
            }
            (s / pairs).powf(-0.5 / l as f64)
        })
        .collect();
    let degenerate = vals.iter().any(|&v| v == 0.0);
    Ok(IndexValue {
        value: vals.into_iter().fold(f64::INFINITY, f64::min),
        subsets_evaluated: us.len(),
        subsets_total: total,
        sampled,
        degenerate,
    })
}

/// `sum_{i<j} 1 / prod_l ((x_il - x_jl)^2 + lambda)`.
///
/// With `lambda = 0` a shared coordinate makes the sum infinite, which is
/// returned as `f64::INFINITY`.
pub fn maxpro_criterion(d: &Design, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("MaxPro offset must be finite and non-negative"));
    }
    let n = d.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let prod: f64 = d
                .row(i)
                .iter()
                .zip(d.row(j))
                .map(|(a, b)| (a - b) * (a - b) + lambda)
                .product();
            if prod == 0.0 {
                return Ok(f64::INFINITY);
            }
            s += 1.0 / prod;
        }
    }
    Ok(s)
}

/// `phi(x; lambda) = atan(x / sqrt(lambda)) + atan((1 - x) / sqrt(lambda))`,
/// so that `int_0^1 dy / ((x - y)^2 + lambda) = phi(x; lambda) / sqrt(lambda)`.
pub fn phi_correction(x: f64, lambda: f64) -> f64 {
    let s = lambda.sqrt();
    (x / s).atan() + ((1.0 - x) / s).atan()
}

/// `MaxPro(D; lambda) - (n / lambda^{p/2}) sum_i prod_l phi(x_il; lambda) + n / (2 lambda^p)`.
///
/// Under i.i.d. `Exp(lambda)` first-order kernel scales the projected
/// support point objective equals `2 lambda^p / n^2` times this value.
pub fn psp_closed_form(d: &Design, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("rate must be positive"));
    }
    let n = d.n() as f64;
    let p = d.p() as f64;
    let phi_sum: f64 = d
        .rows()
        .map(|x| x.iter().map(|&v| phi_correction(v, lambda)).product::<f64>())
        .sum();
    Ok(maxpro_criterion(d, lambda)? - n / lambda.powf(p / 2.0) * phi_sum + n / (2.0 * lambda.powf(p)))
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Random single-point perturbation used by the minimax/maximin trade-off check.
pub(crate) fn perturb_one(d: &Design, scale: f64, rng: &mut impl Rng) -> Result<Design> {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.0, scale).map_err(|e| Error::invalid(e.to_string()))?;
    let i = rng.random_range(0..d.n());
    let mut pts = d.as_slice().to_vec();
    for l in 0..d.p() {
        let v = &mut pts[i * d.p() + l];
        *v = (*v + normal.sample(rng)).clamp(0.0, 1.0);
    }
    Design::new(pts, d.p(), d.label.clone())
}
