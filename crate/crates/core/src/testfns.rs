//! Benchmark response surfaces on `[0,1]^p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1 / (1 + 100 (x - 1/2)^2)`
pub fn eval_runge(x: f64) -> f64 {
    1.0 / (1.0 + 100.0 * (x - 0.5) * (x - 0.5))
}

const STEP_A: f64 = 0.4;
const STEP_B: f64 = 0.6;

/// Continuous ramp from 0.25 to 0.75 on `[0.4, 0.6)`.
pub fn eval_step(x: f64) -> f64 {
    let ramp = if (STEP_A..STEP_B).contains(&x) {
        0.5 * (x - STEP_A) / (STEP_B - STEP_A)
    } else {
        0.0
    };
    0.25 + ramp + if x >= STEP_B { 0.5 } else { 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Runge,
    Step,
    Exponential,
    Friedman,
    /// Friedman embedded in 10 inputs, the last five inert.
    Friedman10,
    EightDim,
    WingWeight,
}

pub struct TestFunction {
    pub name: &'static str,
    pub p: usize,
    pub source: &'static str,
    pub kind: Benchmark,
}

pub const REGISTRY: &[TestFunction] = &[
    TestFunction {
        name: "runge",
        p: 1,
        source: "scaled Runge function",
        kind: Benchmark::Runge,
    },
    TestFunction {
        name: "step",
        p: 1,
        source: "continuous step with ramp on [0.4, 0.6)",
        kind: Benchmark::Step,
    },
    TestFunction {
        name: "exponential",
        p: 3,
        source: "Dette & Pepelyshev (2010), exponential function",
        kind: Benchmark::Exponential,
    },
    TestFunction {
        name: "friedman",
        p: 5,
        source: "Friedman, Grosse & Stuetzle (1983)",
        kind: Benchmark::Friedman,
    },
    TestFunction {
        name: "friedman10",
        p: 10,
        source: "Friedman, Grosse & Stuetzle (1983), five inert inputs appended",
        kind: Benchmark::Friedman10,
    },
    TestFunction {
        name: "eightdim",
        p: 8,
        source: "Dette & Pepelyshev (2010), curved 8-d function",
        kind: Benchmark::EightDim,
    },
    TestFunction {
        name: "wingweight",
        p: 10,
        source: "Forrester, Sobester & Keane (2008), light aircraft wing weight",
        kind: Benchmark::WingWeight,
    },
];

impl Benchmark {
    pub fn info(self) -> &'static TestFunction {
        REGISTRY.iter().find(|t| t.kind == self).expect("every variant is registered")
    }

    pub fn name(self) -> &'static str {
        self.info().name
    }

    pub fn dim(self) -> usize {
        self.info().p
    }

    pub fn eval(self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluate without the length check (panics on short input).
    pub fn eval_unchecked(self, x: &[f64]) -> f64 {
        match self {
            Benchmark::Runge => eval_runge(x[0]),
            Benchmark::Step => eval_step(x[0]),
            Benchmark::Exponential => exponential(x),
            Benchmark::Friedman | Benchmark::Friedman10 => friedman(x),
            Benchmark::EightDim => eight_dim(x),
            Benchmark::WingWeight => wing_weight(x),
        }
    }
}

impl std::str::FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        REGISTRY
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(s))
            .map(|t| t.kind)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

pub fn eval_benchmark(name: &str, x: &[f64]) -> Result<f64> {
    name.parse::<Benchmark>()?.eval(x)
}

fn exponential(x: &[f64]) -> f64 {
    // exp(-2 / 0) evaluates to exp(-inf) = 0 at the lower boundary
    100.0 * ((-2.0 / x[0].powf(1.75)).exp() + (-2.0 / x[1].powf(1.5)).exp() + (-2.0 / x[2].powf(1.25)).exp())
}

fn friedman(x: &[f64]) -> f64 {
    10.0 * (std::f64::consts::PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

fn eight_dim(x: &[f64]) -> f64 {
    let a = x[0] - 2.0 + 8.0 * x[1] - 8.0 * x[1] * x[1];
    let mut f = 4.0 * a * a + (3.0 - 4.0 * x[1]).powi(2) + 16.0 * (x[2] + 1.0).sqrt() * (2.0 * x[2] - 1.0).powi(2);
    let mut partial = x[2];
    for i in 4..=8 {
        partial += x[i - 1];
        f += i as f64 * (1.0 + partial).ln();
    }
    f
}

/// Physical input ranges, in the order
/// `Sw, Wfw, A, Lambda (deg), q, lambda, tc, Nz, Wdg, Wp`.
pub const WING_RANGES: [(f64, f64); 10] = [
    (150.0, 200.0),
    (220.0, 300.0),
    (6.0, 10.0),
    (-10.0, 10.0),
    (16.0, 45.0),
    (0.5, 1.0),
    (0.08, 0.18),
    (2.5, 6.0),
    (1700.0, 2500.0),
    (0.025, 0.08),
];

pub fn wing_weight_physical(v: &[f64; 10]) -> f64 {
    let [sw, wfw, a, sweep_deg, q, taper, tc, nz, wdg, wp] = *v;
    let c = sweep_deg.to_radians().cos();
    0.036
        * sw.powf(0.758)
        * wfw.powf(0.0035)
        * (a / (c * c)).powf(0.6)
        * q.powf(0.006)
        * taper.powf(0.04)
        * (100.0 * tc / c).powf(-0.3)
        * (nz * wdg).powf(0.49)
        + sw * wp
}

fn wing_weight(x: &[f64]) -> f64 {
    let mut v = [0.0; 10];
    for (k, (lo, hi)) in WING_RANGES.iter().enumerate() {
        v[k] = lo + (hi - lo) * x[k];
    }
    wing_weight_physical(&v)
}
