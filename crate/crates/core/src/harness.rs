//! Study orchestration: 1-d robustness, efficiency and emulation tables,
//! criterion curves, and numerical checks of the distance identities.
//!
//! Every study is a pure function of its configuration and [`RngConfig`];
//! [`Manifest`] records both next to the output.

use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::energy::{
    energy_distance_known_target, projected_kernel_sum_with, q_energy_distance, UNIT_SQUARE_MEAN_DISTANCE,
};
use crate::error::{Error, Result};
use crate::gp::{
    efficiency_from_irmse, eff_tilde_table, fbm_integration_error_moment, gp_fit, gp_predict_mean, irmse_matrix,
    FbmSpec, ThetaSpec,
};
use crate::metrics::{
    maximin, minimax_fill_refined, perturb_one, projected_maximin_index, projected_minimax_index, psp_closed_form,
    DEFAULT_SUBSET_CAP,
};
use crate::psp_opt::{psp_optimize, PspConfig};
use crate::rng::RngConfig;
use crate::sampling::{
    baseline_design, sample_exp_prior, sample_sobol, BaselineKind, BatchSource, SampleBatch,
};
use crate::sp_opt::{sp_optimize, SpConfig};
use crate::testfns::{eval_runge, eval_step, Benchmark};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedDesign {
    pub name: String,
    pub design: Design,
}

/// Optimizer settings used when building design pools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolOptions {
    pub sp: SpConfig,
    pub psp: PspConfig,
}

impl Default for PoolOptions {
    fn default() -> Self {
        Self {
            sp: SpConfig::default(),
            psp: PspConfig::default(),
        }
    }
}

pub const POOL_NAMES: [&str; 5] = ["sp", "psp", "random", "sobol", "maximin-lhd"];

/// The internal comparison pool `{SP, PSP, random, Sobol, maximin LHD}`.
///
/// SP starts from a randomized Sobol set and PSP from a maximin LHD; every
/// member draws from its own derived stream.
pub fn standard_pool(n: usize, p: usize, opts: &PoolOptions, rng: RngConfig) -> Result<Vec<NamedDesign>> {
    let sp_init = baseline_design(BaselineKind::Sobol, n, p, rng.derive(10))?;
    let sp_cfg = SpConfig {
        rng: rng.derive(11),
        ..opts.sp.clone()
    };
    let sp = sp_optimize(&sp_init, &sp_cfg)?.0;
    let psp_init = baseline_design(BaselineKind::MaximinLhd, n, p, rng.derive(20))?;
    let psp_cfg = PspConfig {
        rng: rng.derive(21),
        ..opts.psp.clone()
    };
    let psp = psp_optimize(&psp_init, &psp_cfg)?.0;
    let named = |name: &str, design: Design| NamedDesign {
        name: name.to_string(),
        design,
    };
    Ok(vec![
        named("sp", sp),
        named("psp", psp),
        named("random", baseline_design(BaselineKind::Random, n, p, rng.derive(30))?),
        named("sobol", baseline_design(BaselineKind::Sobol, n, p, rng.derive(40))?),
        named("maximin-lhd", baseline_design(BaselineKind::MaximinLhd, n, p, rng.derive(50))?),
    ])
}

/// Reproducibility record written next to every study output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub study: String,
    pub seed: u64,
    pub stream: u64,
    pub config: serde_json::Value,
    pub crate_version: String,
    pub elapsed_secs: f64,
}

impl Manifest {
    pub fn new(study: &str, rng: RngConfig, config: serde_json::Value, elapsed_secs: f64) -> Self {
        Self {
            study: study.to_string(),
            seed: rng.seed,
            stream: rng.stream,
            config,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            elapsed_secs,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(self, path)
    }
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

// ------------------------------------------------------- 1-d robustness

pub const FIG4_GRID: usize = 1001;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MspeRow {
    pub design: String,
    pub function: String,
    pub mspe: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig4Report {
    pub n: usize,
    pub theta: f64,
    pub grid: Vec<f64>,
    pub designs: Vec<NamedDesign>,
    pub mspe: Vec<MspeRow>,
    /// `(design, function) -> predictions on grid`, in the order of `mspe`.
    pub curves: Vec<Vec<f64>>,
}

impl Fig4Report {
    pub fn mspe_of(&self, design: &str, function: &str) -> Option<f64> {
        self.mspe
            .iter()
            .find(|r| r.design == design && r.function == function)
            .map(|r| r.mspe)
    }

    /// `design,function,mspe` rows.
    pub fn write_mspe_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "design,function,mspe")?;
        for r in &self.mspe {
            writeln!(w, "{},{},{}", r.design, r.function, r.mspe)?;
        }
        Ok(())
    }

    /// `x,truth_runge,truth_step,<design>_<function>...` columns.
    pub fn write_curves_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "x,runge,step")?;
        for r in &self.mspe {
            write!(w, ",{}_{}", r.design, r.function)?;
        }
        writeln!(w)?;
        for (k, &x) in self.grid.iter().enumerate() {
            write!(w, "{},{},{}", x, eval_runge(x), eval_step(x))?;
            for c in &self.curves {
                write!(w, ",{}", c[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// GP fits with fixed `theta` on `n` support points and `n` Chebyshev nodes
/// for the Runge and step functions, scored by mean squared prediction error
/// on a 1001-point grid.
pub fn run_fig4_study(n: usize, theta: f64, sp: &SpConfig, rng: RngConfig) -> Result<Fig4Report> {
    let init = baseline_design(BaselineKind::Sobol, n, 1, rng.derive(1))?;
    let cfg = SpConfig {
        rng: rng.derive(2),
        ..sp.clone()
    };
    let sp_design = sp_optimize(&init, &cfg)?.0;
    let cheb = baseline_design(BaselineKind::Chebyshev1d, n, 1, rng)?;
    let grid: Vec<f64> = (0..FIG4_GRID).map(|k| k as f64 / (FIG4_GRID - 1) as f64).collect();
    let nodes = SampleBatch::from_points(grid.clone(), 1, BatchSource::MonteCarlo, 0)?;
    let designs = vec![
        NamedDesign {
            name: "sp".into(),
            design: sp_design,
        },
        NamedDesign {
            name: "chebyshev".into(),
            design: cheb,
        },
    ];
    let funcs: [(&str, fn(f64) -> f64); 2] = [("runge", eval_runge), ("step", eval_step)];
    let mut mspe = Vec::new();
    let mut curves = Vec::new();
    for nd in &designs {
        for (fname, f) in funcs {
            let y: Vec<f64> = nd.design.rows().map(|x| f(x[0])).collect();
            let m = gp_fit(&nd.design, &y, &ThetaSpec::Fixed(vec![theta]), 0.0)?;
            let pred = gp_predict_mean(&m, &nodes);
            let err = grid.iter().zip(&pred).map(|(&x, p)| (f(x) - p).powi(2)).sum::<f64>() / grid.len() as f64;
            mspe.push(MspeRow {
                design: nd.name.clone(),
                function: fname.into(),
                mspe: err,
            });
            curves.push(pred);
        }
    }
    Ok(Fig4Report {
        n,
        theta,
        grid,
        designs,
        mspe,
        curves,
    })
}

// ------------------------------------------------------ efficiency table

pub const THETA_GRID_SIZE: usize = 20;
pub const IRMSE_NODES: usize = 1 << 12;

/// Stratified scale draws in `(0, theta_max]^s` for `s = round(active * p)`
/// randomly chosen active coordinates; the rest are 0.
pub fn theta_grid(p: usize, theta_max: f64, active_fraction: f64, count: usize, rng: RngConfig) -> Result<Vec<Vec<f64>>> {
    if !(theta_max > 0.0) || !(active_fraction > 0.0 && active_fraction <= 1.0) || count == 0 {
        return Err(Error::invalid("theta grid needs theta_max > 0, active fraction in (0, 1], count >= 1"));
    }
    let s = ((active_fraction * p as f64).round() as usize).clamp(1, p);
    let mut g = rng.rng();
    // one stratified permutation per active slot
    let perms: Vec<Vec<usize>> = (0..s)
        .map(|_| {
            let mut v: Vec<usize> = (0..count).collect();
            rand::seq::SliceRandom::shuffle(v.as_mut_slice(), &mut g);
            v
        })
        .collect();
    Ok((0..count)
        .map(|k| {
            let active = if s == p {
                (0..p).collect::<Vec<_>>()
            } else {
                sample(&mut g, p, s).into_vec()
            };
            let mut theta = vec![0.0; p];
            for (slot, &l) in active.iter().enumerate() {
                // (stratum + u)/count lies in (0, 1]
                let u: f64 = 1.0 - g.random::<f64>();
                theta[l] = theta_max * (perms[slot][k] as f64 + u) / count as f64;
            }
            theta
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EfficiencyTable {
    pub p: usize,
    pub n: usize,
    pub theta_max: f64,
    pub active_fraction: f64,
    pub names: Vec<String>,
    pub efficiency: Vec<f64>,
    pub theta_grid: Vec<Vec<f64>>,
    /// `[theta][design]`
    pub irmse: Vec<Vec<f64>>,
}

impl EfficiencyTable {
    /// Index of the highest efficiency (first on ties).
    pub fn best(&self) -> usize {
        argmax(&self.efficiency)
    }

    pub fn best_name(&self) -> &str {
        &self.names[self.best()]
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Efficiency of each pool member over a stratified scale grid.
pub fn run_efficiency_table(
    p: usize,
    n: usize,
    theta_max: f64,
    active_fraction: f64,
    pool: &[NamedDesign],
    rng: RngConfig,
) -> Result<EfficiencyTable> {
    if pool.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(bad) = pool.iter().find(|d| d.design.p() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: bad.design.p(),
        });
    }
    let grid = theta_grid(p, theta_max, active_fraction, THETA_GRID_SIZE, rng.derive(1))?;
    let nodes = sample_sobol(IRMSE_NODES, p, rng.derive(2))?;
    let designs: Vec<Design> = pool.iter().map(|d| d.design.clone()).collect();
    let irmse = irmse_matrix(&designs, &grid, &nodes)?;
    Ok(EfficiencyTable {
        p,
        n,
        theta_max,
        active_fraction,
        names: pool.iter().map(|d| d.name.clone()).collect(),
        efficiency: efficiency_from_irmse(&irmse),
        theta_grid: grid,
        irmse,
    })
}

// ------------------------------------------------------- emulation table

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmulationTable {
    pub function: String,
    pub n_list: Vec<usize>,
    pub names: Vec<String>,
    /// `[n][design]`
    pub eff: Vec<Vec<f64>>,
    pub average: Vec<f64>,
}

impl EmulationTable {
    pub fn best_average(&self) -> &str {
        &self.names[argmax(&self.average)]
    }

    /// One row per design: `design,<n...>,avg`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "design")?;
        for n in &self.n_list {
            write!(w, ",n{n}")?;
        }
        writeln!(w, ",avg")?;
        for (j, name) in self.names.iter().enumerate() {
            write!(w, "{name}")?;
            for row in &self.eff {
                write!(w, ",{:.6}", row[j])?;
            }
            writeln!(w, ",{:.6}", self.average[j])?;
        }
        Ok(())
    }
}

pub const EMULATION_NODES: usize = 1 << 12;

/// Design sizes used for each benchmark.
pub fn default_n_list(f: Benchmark) -> Vec<usize> {
    match f {
        Benchmark::Exponential => vec![30, 50, 70, 90],
        Benchmark::Friedman | Benchmark::Friedman10 => vec![50, 70, 90, 110],
        Benchmark::EightDim => vec![80, 100, 120, 140],
        Benchmark::WingWeight => vec![100, 110, 120, 130],
        Benchmark::Runge | Benchmark::Step => vec![7],
    }
}

/// Mean-absolute-error efficiency of an MLE-fitted emulator for each pool
/// member and design size, with row averages.
pub fn run_emulation_table(
    function: Benchmark,
    n_list: &[usize],
    opts: &PoolOptions,
    extra: &[NamedDesign],
    rng: RngConfig,
) -> Result<EmulationTable> {
    if n_list.is_empty() {
        return Err(Error::Empty);
    }
    let p = function.dim();
    let nodes = sample_sobol(EMULATION_NODES, p, rng.derive(1))?;
    let f = move |x: &[f64]| function.eval_unchecked(x);
    let mut names = Vec::new();
    let mut eff = Vec::new();
    for (k, &n) in n_list.iter().enumerate() {
        let mut pool = standard_pool(n, p, opts, rng.derive2(2, k as u64))?;
        pool.extend(extra.iter().filter(|d| d.design.n() == n && d.design.p() == p).cloned());
        if names.is_empty() {
            names = pool.iter().map(|d| d.name.clone()).collect();
        }
        let designs: Vec<Design> = pool.into_iter().map(|d| d.design).collect();
        eff.push(eff_tilde_table(&designs, &f, &ThetaSpec::Mle, &nodes)?);
    }
    let k = names.len();
    let average = (0..k)
        .map(|j| eff.iter().map(|row| row.get(j).copied().unwrap_or(0.0)).sum::<f64>() / eff.len() as f64)
        .collect();
    Ok(EmulationTable {
        function: function.name().to_string(),
        n_list: n_list.to_vec(),
        names,
        eff,
        average,
    })
}

// ------------------------------------------------------- criterion curves

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionCurve {
    pub l: usize,
    pub minimax_index: f64,
    pub maximin_index: f64,
}

/// `mM_l` and `Mm_l` for `l = 1..=p`.
pub fn criterion_curves(d: &Design, candidates: usize, rng: RngConfig) -> Result<Vec<CriterionCurve>> {
    (1..=d.p())
        .map(|l| {
            Ok(CriterionCurve {
                l,
                minimax_index: projected_minimax_index(d, l, candidates, DEFAULT_SUBSET_CAP, rng.derive(l as u64))?
                    .value,
                maximin_index: projected_maximin_index(d, l, DEFAULT_SUBSET_CAP, rng.derive(l as u64))?.value,
            })
        })
        .collect()
}

// ------------------------------------------------------ identity checks

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Vec<f64>,
    pub bounds: (f64, f64),
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn within(v: &[f64], (lo, hi): (f64, f64)) -> bool {
    v.iter().all(|x| (lo..=hi).contains(x))
}

pub const KERNEL_CHECK_BATCH: usize = 1_000_000;
pub const KERNEL_CHECK_PAIRS: usize = 10_000_000;

/// Ratio of the projected distance-kernel sum to `(n^2/2)` times the energy
/// distance, at `n = 10`, `p = 2`. The two sides use independent batches;
/// the energy side uses the exact mean distance of the unit square.
pub fn projected_kernel_ratio(rng: RngConfig) -> Result<f64> {
    let d = baseline_design(BaselineKind::Random, 10, 2, rng.derive(1))?;
    let lhs_batch = sample_sobol(KERNEL_CHECK_BATCH, 2, rng.derive(2))?;
    let lhs = projected_kernel_sum_with(&d, &lhs_batch, 1.0, KERNEL_CHECK_PAIRS)?;
    let rhs_batch = sample_sobol(KERNEL_CHECK_BATCH, 2, rng.derive(3))?;
    let e = energy_distance_known_target(&d, &rhs_batch, UNIT_SQUARE_MEAN_DISTANCE)?.value;
    Ok(lhs / (0.5 * 100.0 * e))
}

pub const FBM_GRID: usize = 512;
pub const FBM_PATHS: usize = 2000;

/// `E[I^2] / ((sigma2/2) E_q)` for 5 one-dimensional support points,
/// one ratio per `q`.
pub fn integration_error_ratios(qs: &[f64], rng: RngConfig) -> Result<Vec<f64>> {
    let init = baseline_design(BaselineKind::Sobol, 5, 1, rng.derive(1))?;
    let sp = sp_optimize(
        &init,
        &SpConfig {
            rng: rng.derive(2),
            ..SpConfig::default()
        },
    )?
    .0;
    qs.iter()
        .enumerate()
        .map(|(k, &q)| {
            let spec = FbmSpec::midpoint_grid_1d(FBM_GRID, q, 1.0)?;
            let (m, r) = fbm_integration_error_moment(&sp, &spec, FBM_PATHS, rng.derive2(3, k as u64))?;
            Ok(m / r)
        })
        .collect()
}

pub const CLOSED_FORM_DRAWS: usize = 100_000;

/// Relative gap between the Monte Carlo objective under `Exp(1)` scales and
/// the closed form, for a random 5-point design in 2-d.
pub fn closed_form_gap(rng: RngConfig) -> Result<f64> {
    let d = baseline_design(BaselineKind::Random, 5, 2, rng.derive(1))?;
    let lambda = 1.0;
    let priors = sample_exp_prior(lambda, 2, CLOSED_FORM_DRAWS, rng.derive(2))?;
    let mc = crate::energy::psp_objective_exact_y(&d, &priors)?;
    let closed = psp_closed_form(&d, lambda)?;
    let scaled = 2.0 * lambda.powi(2) / 25.0 * closed;
    Ok((mc - scaled).abs() / scaled.abs())
}

/// Outcome of the minimax/maximin surrogate direction check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionCheck {
    pub agree: usize,
    pub trials: usize,
    pub fraction: f64,
    /// Trials where the perturbation left both `mM` and `Mm` unchanged.
    pub surrogate_flat: usize,
    /// Agreement among trials where the surrogate moved.
    pub conditional_fraction: f64,
}

pub const DIRECTION_Q: f64 = 0.1;
pub const DIRECTION_TRIALS: usize = 200;
pub const DIRECTION_SCALE: f64 = 0.1;

/// Sign agreement between the change in q-energy and the change in
/// `2 mM^q - Mm^q` under single-point perturbations of random designs
/// (`n = 10`, `p = 2`). Both designs of a pair share the evaluation batch
/// and candidate set.
pub fn minimax_maximin_direction(trials: usize, rng: RngConfig) -> Result<DirectionCheck> {
    let q = DIRECTION_Q;
    let batch = sample_sobol(1 << 16, 2, rng.derive(1))?;
    let cand = sample_sobol(1 << 14, 2, rng.derive(2))?;
    let mut g = rng.derive(3).rng();
    let (mut agree, mut flat) = (0, 0);
    for t in 0..trials {
        let base = baseline_design(BaselineKind::Random, 10, 2, rng.derive2(4, t as u64))?;
        let moved = perturb_one(&base, DIRECTION_SCALE, &mut g)?;
        let surrogate = |d: &Design| -> Result<f64> {
            Ok(2.0 * minimax_fill_refined(d, &cand)?.powf(q) - maximin(d)?.powf(q))
        };
        let de = q_energy_distance(&moved, &batch, q)?.value - q_energy_distance(&base, &batch, q)?.value;
        let ds = surrogate(&moved)? - surrogate(&base)?;
        if ds == 0.0 {
            flat += 1;
        } else if de.signum() == ds.signum() && de != 0.0 {
            agree += 1;
        }
    }
    let moved = trials - flat;
    Ok(DirectionCheck {
        agree,
        trials,
        fraction: agree as f64 / trials as f64,
        surrogate_flat: flat,
        conditional_fraction: if moved == 0 { 0.0 } else { agree as f64 / moved as f64 },
    })
}

/// The four identity/approximation checks with their acceptance bands.
pub fn run_identity_checks(rng: RngConfig) -> Result<CheckReport> {
    let mut checks = Vec::new();

    let r = projected_kernel_ratio(rng.derive(1))?;
    let b = (0.98, 1.02);
    checks.push(Check {
        name: "projected-kernel-identity".into(),
        passed: within(&[r], b),
        measured: vec![r],
        bounds: b,
        detail: "sum_ij r_G(x_i, x_j) / ((n^2/2) E), n=10, p=2, N=1e6".into(),
    });

    let qs = [0.5, 1.0, 1.5];
    let ratios = integration_error_ratios(&qs, rng.derive(2))?;
    let b = (0.9, 1.1);
    checks.push(Check {
        name: "integration-error-identity".into(),
        passed: within(&ratios, b),
        measured: ratios,
        bounds: b,
        detail: "E[I^2] / ((sigma2/2) E_q) for q = 0.5, 1, 1.5; 2000 fBm paths on 512 points".into(),
    });

    let gap = closed_form_gap(rng.derive(3))?;
    let b = (0.0, 0.02);
    checks.push(Check {
        name: "closed-form-objective".into(),
        passed: within(&[gap], b),
        measured: vec![gap],
        bounds: b,
        detail: "relative gap, Exp(1) scales, R=1e5, n=5, p=2".into(),
    });

    let dir = minimax_maximin_direction(DIRECTION_TRIALS, rng.derive(4))?;
    let b = (0.8, 1.0);
    checks.push(Check {
        name: "minimax-maximin-direction".into(),
        passed: within(&[dir.fraction], b),
        measured: vec![dir.fraction],
        bounds: b,
        detail: format!(
            "sign agreement of dE_q and d(2 mM^q - Mm^q), q={DIRECTION_Q}, {} perturbations; \
             surrogate unchanged in {}, agreement where it moved {:.3}",
            dir.trials, dir.surrogate_flat, dir.conditional_fraction
        ),
    });

    Ok(CheckReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_opts() -> PoolOptions {
        PoolOptions {
            sp: SpConfig {
                max_sweeps: 20,
                ..SpConfig::default()
            },
            psp: PspConfig {
                max_sweeps: 10,
                ..PspConfig::default()
            },
        }
    }

    #[test]
    fn theta_grid_is_stratified_and_sparse() {
        let g = theta_grid(5, 5.0, 0.4, 20, RngConfig::new(1)).unwrap();
        assert_eq!(g.len(), 20);
        for t in &g {
            assert_eq!(t.iter().filter(|&&v| v > 0.0).count(), 2);
            assert!(t.iter().all(|&v| (0.0..=5.0).contains(&v)));
        }
        let full = theta_grid(3, 20.0, 1.0, 20, RngConfig::new(2)).unwrap();
        for l in 0..3 {
            let mut strata: Vec<usize> = full.iter().map(|t| ((t[l] / 1.0).ceil() as usize).max(1) - 1).collect();
            strata.sort();
            assert_eq!(strata, (0..20).collect::<Vec<_>>(), "coordinate {l}");
        }
        assert!(theta_grid(3, 0.0, 1.0, 5, RngConfig::new(0)).is_err());
        assert!(theta_grid(3, 1.0, 0.0, 5, RngConfig::new(0)).is_err());
    }

    #[test]
    fn argmax_takes_first_of_ties() {
        assert_eq!(argmax(&[0.5, 1.0, 1.0, 0.2]), 1);
        assert_eq!(argmax(&[3.0]), 0);
    }

    #[test]
    fn pool_has_five_named_members() {
        let pool = standard_pool(8, 2, &small_opts(), RngConfig::new(3)).unwrap();
        let names: Vec<&str> = pool.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, POOL_NAMES);
        assert!(pool.iter().all(|d| d.design.n() == 8 && d.design.p() == 2));
    }

    #[test]
    fn efficiency_table_has_a_perfect_member_per_theta() {
        let pool = standard_pool(8, 2, &small_opts(), RngConfig::new(4)).unwrap();
        let t = run_efficiency_table(2, 8, 5.0, 1.0, &pool, RngConfig::new(5)).unwrap();
        assert_eq!(t.efficiency.len(), 5);
        assert!(t.efficiency.iter().all(|&e| e > 0.0 && e <= 1.0 + 1e-12));
        for row in &t.irmse {
            let best = row.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(row.iter().any(|&v| v == best));
        }
        let wrong = standard_pool(8, 3, &small_opts(), RngConfig::new(4)).unwrap();
        assert!(run_efficiency_table(2, 8, 5.0, 1.0, &wrong, RngConfig::new(5)).is_err());
    }

    #[test]
    fn fig4_report_shapes_and_csv() {
        let r = run_fig4_study(7, 10.0, &SpConfig::default(), RngConfig::new(6)).unwrap();
        assert_eq!(r.mspe.len(), 4);
        assert_eq!(r.curves.len(), 4);
        assert!(r.curves.iter().all(|c| c.len() == FIG4_GRID));
        let mut buf = Vec::new();
        r.write_mspe_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
        assert!(r.mspe.iter().all(|m| m.mspe.is_finite() && m.mspe >= 0.0));
    }

    #[test]
    fn emulation_table_averages_rows() {
        let t = run_emulation_table(Benchmark::Exponential, &[10, 12], &small_opts(), &[], RngConfig::new(7)).unwrap();
        assert_eq!(t.eff.len(), 2);
        for j in 0..t.names.len() {
            let avg = (t.eff[0][j] + t.eff[1][j]) / 2.0;
            assert!((t.average[j] - avg).abs() < 1e-12);
        }
        assert!(t.eff.iter().all(|row| row.iter().any(|&e| (e - 1.0).abs() < 1e-12)));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("design,n10,n12,avg"));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = std::env::temp_dir().join(format!("spdesign-manifest-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.json");
        let m = Manifest::new("fig4", RngConfig::new(9), serde_json::json!({"n": 7}), 0.5);
        m.save(&path).unwrap();
        let back: Manifest = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back.seed, 9);
        assert_eq!(back.config["n"], 7);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn closed_form_gap_is_small() {
        assert!(closed_form_gap(RngConfig::new(10)).unwrap() < 0.02);
    }
}
