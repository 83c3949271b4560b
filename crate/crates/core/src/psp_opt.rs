//! Projected support points by cyclic per-point descent.
//!
//! Points are visited in order `0..n`; each visit draws fresh kernel scales
//! (and, in batch mode, a fresh target batch) and moves the point to lower
//!
//! ```text
//! g_i(x) = -(2/R) sum_r A_r(x) + (1/(nR)) sum_r [1 + 2 sum_{j != i} gamma_r(x, x_j)]
//! ```
//!
//! where `A_r(x)` is the mean of `gamma_r(x, Y)` over the target. Later
//! visits see earlier updates (Gauss–Seidel).
//!
//! Both step rules use the curvature of the tangent-line majorizer of the
//! attraction term, `2 A'_l = (4/R) sum_r w_rl A_r(x0)`, as a diagonal
//! preconditioner: the majorization step is `x0 - grad / (2 A')`, clamped.

use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::energy::psp_objective_exact_y;
use crate::error::{Error, Result};
use crate::kernel::{gauss_uniform_mean, gauss_uniform_mean_dx};
use crate::rng::RngConfig;
use crate::sampling::{sample_batch, sample_prior, BatchSource, Prior, PriorDrawBatch, SampleBatch};
use crate::sp_opt::{max_movement, OptTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerStep {
    /// Majorization step, halved toward the current point if it fails to descend.
    ClosedFormMm,
    /// Preconditioned gradient step with Armijo backtracking.
    GuardedGradient,
}

/// How the attraction mean over the target is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetTerm {
    /// Closed form for the uniform target (product of 1-d erf means).
    Exact,
    /// Average over a sampled batch, redrawn every visit.
    Batch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PspConfig {
    /// Target batch size in [`TargetTerm::Batch`] mode; `None` means `max(2048, 25 n)`.
    pub batch_size: Option<usize>,
    pub prior_batch_size: usize,
    pub prior: Prior,
    pub source: BatchSource,
    pub target: TargetTerm,
    pub max_sweeps: usize,
    /// `None` means `1e-6 sqrt(p)`.
    pub tol: Option<f64>,
    /// Pairs closer than this contribute no gradient.
    pub guard: f64,
    pub step: InnerStep,
    /// Prior draws for the final comparison against the initial design.
    pub eval_prior_size: usize,
    pub rng: RngConfig,
}

impl Default for PspConfig {
    fn default() -> Self {
        Self {
            batch_size: None,
            prior_batch_size: 128,
            prior: Prior::Pod { max_order: 2 },
            source: BatchSource::RandomizedSobol,
            target: TargetTerm::Exact,
            max_sweeps: 300,
            tol: None,
            guard: 1e-12,
            step: InnerStep::GuardedGradient,
            eval_prior_size: 1024,
            rng: RngConfig::new(0),
        }
    }
}

impl PspConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng: RngConfig::new(seed),
            ..Self::default()
        }
    }

    pub fn batch_size_for(&self, n: usize) -> usize {
        self.batch_size.unwrap_or_else(|| 2048.max(25 * n))
    }

    pub fn tol_for(&self, p: usize) -> f64 {
        self.tol.unwrap_or(1e-6 * (p as f64).sqrt())
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.prior_batch_size == 0 || self.eval_prior_size == 0 || self.batch_size == Some(0) {
            return Err(Error::invalid("batch sizes must be at least 1"));
        }
        if !(self.tol_for(1) > 0.0) || !(self.guard > 0.0) {
            return Err(Error::invalid("tol and guard must be positive"));
        }
        if let Prior::Pod { max_order } = self.prior {
            if max_order == 0 {
                return Err(Error::invalid("POD interaction order must be at least 1"));
            }
            let _ = p;
        }
        Ok(())
    }

    fn prior_for(&self, p: usize) -> Prior {
        // the interaction cap cannot exceed the dimension
        match self.prior {
            Prior::Pod { max_order } => Prior::Pod {
                max_order: max_order.min(p),
            },
            other => other,
        }
    }
}

/// Sampled per-point objective for one visit, with everything but the
/// visited point held fixed.
pub struct VisitObjective<'a> {
    others: Vec<&'a [f64]>,
    n: usize,
    batch: Option<&'a SampleBatch>,
    priors: &'a PriorDrawBatch,
    guard: f64,
}

impl<'a> VisitObjective<'a> {
    /// `batch = None` takes the target mean in closed form.
    pub fn new(
        i: usize,
        current: &'a [f64],
        p: usize,
        batch: Option<&'a SampleBatch>,
        priors: &'a PriorDrawBatch,
        guard: f64,
    ) -> Result<Self> {
        if priors.p() != p || batch.is_some_and(|b| b.p() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: priors.p(),
            });
        }
        if priors.is_empty() || batch.is_some_and(|b| b.is_empty()) {
            return Err(Error::Empty);
        }
        let n = current.len() / p;
        if i >= n {
            return Err(Error::invalid(format!("point index {i} out of range")));
        }
        let others = current
            .chunks_exact(p)
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, x)| x)
            .collect();
        Ok(Self {
            others,
            n,
            batch,
            priors,
            guard,
        })
    }

    fn attraction(&self, x: &[f64], w: &[f64]) -> f64 {
        match self.batch {
            None => x.iter().zip(w).map(|(&xl, &wl)| gauss_uniform_mean(xl, wl)).product(),
            Some(b) => b.rows().map(|y| gauss_exp(x, y, w)).sum::<f64>() / b.len() as f64,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r = self.priors.len() as f64;
        let mut att = 0.0;
        let mut rep = 0.0;
        for k in 0..self.priors.len() {
            let w = self.priors.weights(k);
            att += self.attraction(x, w);
            rep += 1.0 + 2.0 * self.others.iter().map(|z| gauss_exp(x, z, w)).sum::<f64>();
        }
        -2.0 * att / r + rep / (self.n as f64 * r)
    }

    /// Value, gradient and the majorizer curvature `A'` (per coordinate).
    pub fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let p = x.len();
        let r = self.priors.len() as f64;
        let nf = self.n as f64;
        let mut val = 0.0;
        let mut grad = vec![0.0; p];
        let mut curv = vec![0.0; p];
        let mut h = vec![0.0; p];
        for k in 0..self.priors.len() {
            let w = self.priors.weights(k);
            // attraction: -(2/R) A(x)
            match self.batch {
                None => {
                    for l in 0..p {
                        h[l] = gauss_uniform_mean(x[l], w[l]);
                    }
                    let a: f64 = h.iter().product();
                    val -= 2.0 * a / r;
                    for l in 0..p {
                        let rest: f64 = (0..p).filter(|&m| m != l).map(|m| h[m]).product();
                        grad[l] -= 2.0 / r * gauss_uniform_mean_dx(x[l], w[l]) * rest;
                        curv[l] += 2.0 / r * w[l] * a;
                    }
                }
                Some(b) => {
                    let nb = b.len() as f64;
                    for y in b.rows() {
                        let g = gauss_exp(x, y, w);
                        val -= 2.0 * g / (r * nb);
                        for l in 0..p {
                            grad[l] += 4.0 / (r * nb) * w[l] * (x[l] - y[l]) * g;
                            curv[l] += 2.0 / (r * nb) * w[l] * g;
                        }
                    }
                }
            }
            // repulsion: (1/(nR)) [1 + 2 sum_j gamma(x, x_j)]
            val += 1.0 / (nf * r);
            for z in &self.others {
                let g = gauss_exp(x, z, w);
                val += 2.0 * g / (nf * r);
                let mut d2 = 0.0;
                for l in 0..p {
                    d2 += (x[l] - z[l]) * (x[l] - z[l]);
                }
                if d2 < self.guard * self.guard {
                    continue;
                }
                for l in 0..p {
                    grad[l] -= 4.0 / (nf * r) * w[l] * (x[l] - z[l]) * g;
                }
            }
        }
        (val, grad, curv)
    }
}

#[inline]
fn gauss_exp(x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    crate::kernel::gaussian(x, y, w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisitOutcome {
    pub point: Vec<f64>,
    pub before: f64,
    pub after: f64,
    /// No descent step was found; the point is unchanged.
    pub flagged: bool,
}

const MAX_HALVINGS: usize = 30;
const ARMIJO: f64 = 1e-4;

/// One descent step on `g_i` from the current position of point `i`.
pub fn psp_update_point(
    i: usize,
    current: &Design,
    batch: Option<&SampleBatch>,
    priors: &PriorDrawBatch,
    cfg: &PspConfig,
) -> Result<VisitOutcome> {
    let obj = VisitObjective::new(i, current.as_slice(), current.p(), batch, priors, cfg.guard)?;
    Ok(step(&obj, current.row(i), cfg.step))
}

fn step(obj: &VisitObjective<'_>, x0: &[f64], rule: InnerStep) -> VisitOutcome {
    let (g0, grad, curv) = obj.value_grad(x0);
    let dir: Vec<f64> = grad
        .iter()
        .zip(&curv)
        .map(|(&g, &c)| if c > 0.0 { -g / (2.0 * c) } else { 0.0 })
        .collect();
    let unchanged = |flagged| VisitOutcome {
        point: x0.to_vec(),
        before: g0,
        after: g0,
        flagged,
    };
    if dir.iter().all(|&v| v == 0.0) {
        return unchanged(false);
    }
    let mm: Vec<f64> = x0.iter().zip(&dir).map(|(&a, &d)| (a + d).clamp(0.0, 1.0)).collect();
    let mut alpha = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let cand: Vec<f64> = match rule {
            InnerStep::ClosedFormMm => x0.iter().zip(&mm).map(|(&a, &b)| a + alpha * (b - a)).collect(),
            InnerStep::GuardedGradient => x0
                .iter()
                .zip(&dir)
                .map(|(&a, &d)| (a + alpha * d).clamp(0.0, 1.0))
                .collect(),
        };
        let g = obj.value(&cand);
        let accept = match rule {
            InnerStep::ClosedFormMm => g <= g0,
            InnerStep::GuardedGradient => {
                let slope: f64 = grad.iter().zip(&cand).zip(x0).map(|((gr, c), a)| gr * (c - a)).sum();
                g <= g0 + ARMIJO * slope
            }
        };
        if accept {
            return VisitOutcome {
                point: cand,
                before: g0,
                after: g,
                flagged: false,
            };
        }
        alpha *= 0.5;
    }
    unchanged(true)
}

/// Projected support points warm-started from `init`.
pub fn psp_optimize(init: &Design, cfg: &PspConfig) -> Result<(Design, OptTrace)> {
    let start = std::time::Instant::now();
    let (n, p) = (init.n(), init.p());
    cfg.validate(p)?;
    let prior = cfg.prior_for(p);
    let nb = cfg.batch_size_for(n);
    let tol = cfg.tol_for(p);
    let mut pts = init.as_slice().to_vec();
    let mut trace = OptTrace::default();

    for sweep in 0..cfg.max_sweeps {
        let snapshot = pts.clone();
        let mut total = 0.0;
        for i in 0..n {
            let visit = cfg.rng.derive2(sweep as u64, i as u64);
            let priors = sample_prior(prior, p, cfg.prior_batch_size, visit.derive(0))?;
            let batch = match cfg.target {
                TargetTerm::Exact => None,
                TargetTerm::Batch => Some(sample_batch(cfg.source, nb, p, visit.derive(1))?),
            };
            let obj = VisitObjective::new(i, &pts, p, batch.as_ref(), &priors, cfg.guard)?;
            let out = step(&obj, &pts[i * p..(i + 1) * p], cfg.step);
            if out.flagged {
                trace.flagged.push((sweep, i));
            }
            total += out.after;
            pts[i * p..(i + 1) * p].copy_from_slice(&out.point);
        }
        let movement = max_movement(&snapshot, &pts, p);
        trace.objective.push(total / n as f64);
        trace.movement.push(movement);
        trace.sweeps = sweep + 1;
        if movement < tol {
            trace.converged = true;
            break;
        }
    }

    let label = format!(
        "psp n={n} p={p} seed={} stream={} init=[{}]",
        cfg.rng.seed, cfg.rng.stream, init.label
    );
    trace.elapsed_secs = start.elapsed().as_secs_f64();
    let out = match Design::new(pts, p, label.clone()) {
        Ok(d) => d,
        Err(Error::DuplicateRow { .. }) => {
            trace.kept_initial = true;
            return Ok((init.clone().with_label(label), trace));
        }
        Err(e) => return Err(e),
    };
    let eval = sample_prior(prior, p, cfg.eval_prior_size, cfg.rng.derive(u64::MAX))?;
    let before = psp_objective_exact_y(init, &eval)?;
    let after = psp_objective_exact_y(&out, &eval)?;
    if after > before + 1e-9 {
        trace.kept_initial = true;
        return Ok((init.clone().with_label(label), trace));
    }
    Ok((out, trace))
}
