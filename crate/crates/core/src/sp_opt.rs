//! Support points by the sampled convex-concave iteration.
//!
//! Each sweep draws a batch `Y` from the target and replaces every point by
//! the minimizer of a separable majorizer of the sampled energy objective:
//! `||x - y_m||` is bounded above by a quadratic touching at the current
//! point, and the concave `-||x_i - x_j||` is replaced by its tangent. The
//! minimizer has the closed form
//!
//! ```text
//! x_i+ = [ sum_m y_m / ||x_i - y_m|| + (N/n) sum_{j != i} (x_i - x_j) / ||x_i - x_j|| ]
//!        / sum_m 1 / ||x_i - y_m||
//! ```
//!
//! with all distances at the sweep-start snapshot. Because the majorizer is
//! an isotropic quadratic in each point, clamping to the unit box gives its
//! constrained minimizer, so a sweep on a fixed batch never increases the
//! sampled objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::energy::sp_objective_raw;
use crate::error::{Error, Result};
use crate::rng::RngConfig;
use crate::sampling::{sample_batch, BatchSource, SampleBatch};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpConfig {
    /// Batch size per sweep; `None` means `max(4096, 50 n)`.
    pub batch_size: Option<usize>,
    pub source: BatchSource,
    pub max_sweeps: usize,
    /// Convergence threshold on the largest point movement in a sweep;
    /// `None` means `1e-6 sqrt(p)`.
    pub tol: Option<f64>,
    /// Distances below this are dropped from the update.
    pub guard: f64,
    /// Draw a fresh batch every sweep. When false the first batch is reused,
    /// which turns the iteration into plain majorization-minimization.
    pub resample: bool,
    pub rng: RngConfig,
}

impl Default for SpConfig {
    fn default() -> Self {
        Self {
            batch_size: None,
            source: BatchSource::RandomizedSobol,
            max_sweeps: 500,
            tol: None,
            guard: 1e-10,
            resample: true,
            rng: RngConfig::new(0),
        }
    }
}

impl SpConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng: RngConfig::new(seed),
            ..Self::default()
        }
    }

    pub fn batch_size_for(&self, n: usize) -> usize {
        self.batch_size.unwrap_or_else(|| 4096.max(50 * n))
    }

    pub fn tol_for(&self, p: usize) -> f64 {
        self.tol.unwrap_or(1e-6 * (p as f64).sqrt())
    }

    fn validate(&self, n: usize) -> Result<()> {
        let nb = self.batch_size_for(n);
        if nb < n {
            return Err(Error::invalid(format!("batch size {nb} is smaller than n = {n}")));
        }
        if !(self.tol_for(1) > 0.0) || !(self.guard > 0.0) {
            return Err(Error::invalid("tol and guard must be positive"));
        }
        Ok(())
    }
}

/// Per-sweep record of an optimizer run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptTrace {
    /// Sampled objective at the start of each sweep (on that sweep's batch).
    pub objective: Vec<f64>,
    pub movement: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// `(sweep, point)` pairs whose update was skipped.
    pub flagged: Vec<(usize, usize)>,
    /// The output failed to beat the initial design on the evaluation batch
    /// and the initial design was returned instead.
    pub kept_initial: bool,
    pub elapsed_secs: f64,
}

impl OptTrace {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointUpdate {
    pub point: Vec<f64>,
    /// Every batch point was within the guard distance; the point is unchanged.
    pub flagged: bool,
}

/// Majorization update of point `i` against a fixed snapshot and batch.
pub fn sp_update_point(i: usize, snapshot: &Design, batch: &SampleBatch, guard: f64) -> Result<PointUpdate> {
    if snapshot.p() != batch.p() {
        return Err(Error::DimensionMismatch {
            expected: snapshot.p(),
            got: batch.p(),
        });
    }
    if i >= snapshot.n() {
        return Err(Error::invalid(format!("point index {i} out of range")));
    }
    Ok(update_raw(i, snapshot.as_slice(), snapshot.p(), batch, guard).0)
}

/// Returns the update and this point's share of the sampled cross term
/// `sum_m ||x_i - y_m||`, which the sweep reuses for the trace.
fn update_raw(i: usize, pts: &[f64], p: usize, batch: &SampleBatch, guard: f64) -> (PointUpdate, f64) {
    let n = pts.len() / p;
    let x = &pts[i * p..(i + 1) * p];
    let mut num = vec![0.0; p];
    let mut denom = 0.0;
    let mut cross = 0.0;
    for y in batch.rows() {
        let mut s = 0.0;
        for l in 0..p {
            let t = x[l] - y[l];
            s += t * t;
        }
        let dist = s.sqrt();
        cross += dist;
        if dist < guard {
            continue;
        }
        let inv = 1.0 / dist;
        denom += inv;
        for l in 0..p {
            num[l] += y[l] * inv;
        }
    }
    if denom == 0.0 {
        return (
            PointUpdate {
                point: x.to_vec(),
                flagged: true,
            },
            cross,
        );
    }
    let ratio = batch.len() as f64 / n as f64;
    let mut rep = vec![0.0; p];
    for j in 0..n {
        if j == i {
            continue;
        }
        let xj = &pts[j * p..(j + 1) * p];
        let mut s = 0.0;
        for l in 0..p {
            let t = x[l] - xj[l];
            s += t * t;
        }
        let dist = s.sqrt();
        if dist < guard {
            continue;
        }
        for l in 0..p {
            rep[l] += (x[l] - xj[l]) / dist;
        }
    }
    let point = (0..p)
        .map(|l| ((num[l] + ratio * rep[l]) / denom).clamp(0.0, 1.0))
        .collect();
    (PointUpdate { point, flagged: false }, cross)
}

/// One Jacobi sweep: every point reads the same snapshot.
///
/// Returns the new points, the sampled objective at the snapshot, and the
/// indices of flagged points.
pub fn sp_sweep(pts: &[f64], p: usize, batch: &SampleBatch, guard: f64) -> (Vec<f64>, f64, Vec<usize>) {
    let n = pts.len() / p;
    let results: Vec<(PointUpdate, f64)> = (0..n)
        .into_par_iter()
        .map(|i| update_raw(i, pts, p, batch, guard))
        .collect();
    let mut out = Vec::with_capacity(pts.len());
    let mut flagged = Vec::new();
    let mut cross = 0.0;
    for (i, (u, c)) in results.into_iter().enumerate() {
        if u.flagged {
            flagged.push(i);
        }
        cross += c;
        out.extend(u.point);
    }
    let mut pair = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let mut s = 0.0;
            for l in 0..p {
                let t = pts[i * p + l] - pts[j * p + l];
                s += t * t;
            }
            pair += s.sqrt();
        }
    }
    let nf = n as f64;
    let objective = 2.0 * cross / (nf * batch.len() as f64) - 2.0 * pair / (nf * nf);
    (out, objective, flagged)
}

/// Support points warm-started from `init`.
pub fn sp_optimize(init: &Design, cfg: &SpConfig) -> Result<(Design, OptTrace)> {
    let start = std::time::Instant::now();
    let (n, p) = (init.n(), init.p());
    cfg.validate(n)?;
    let nb = cfg.batch_size_for(n);
    let tol = cfg.tol_for(p);
    let mut pts = init.as_slice().to_vec();
    let mut trace = OptTrace::default();
    let mut batch = sample_batch(cfg.source, nb, p, cfg.rng.derive(0))?;

    for sweep in 0..cfg.max_sweeps {
        if cfg.resample && sweep > 0 {
            batch = sample_batch(cfg.source, nb, p, cfg.rng.derive(sweep as u64))?;
        }
        let (next, obj, flagged) = sp_sweep(&pts, p, &batch, cfg.guard);
        let movement = max_movement(&pts, &next, p);
        trace.objective.push(obj);
        trace.movement.push(movement);
        trace.flagged.extend(flagged.into_iter().map(|i| (sweep, i)));
        trace.sweeps = sweep + 1;
        pts = next;
        if movement < tol {
            trace.converged = true;
            break;
        }
    }

    let eval = sample_batch(BatchSource::RandomizedSobol, nb, p, cfg.rng.derive(u64::MAX))?;
    let before = sp_objective_raw(init.as_slice(), p, &eval)?;
    let after = sp_objective_raw(&pts, p, &eval)?;
    let label = format!(
        "sp n={n} p={p} seed={} stream={} init=[{}]",
        cfg.rng.seed, cfg.rng.stream, init.label
    );
    trace.elapsed_secs = start.elapsed().as_secs_f64();
    if after > before + 1e-9 {
        trace.kept_initial = true;
        return Ok((init.clone().with_label(label), trace));
    }
    Ok((Design::new(pts, p, label)?, trace))
}

pub(crate) fn max_movement(a: &[f64], b: &[f64], p: usize) -> f64 {
    a.chunks_exact(p)
        .zip(b.chunks_exact(p))
        .map(|(u, v)| u.iter().zip(v).map(|(s, t)| (s - t) * (s - t)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}
