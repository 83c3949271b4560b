//! Kernel specifications shared by the criterion and optimizer layers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Product-and-order weight structure: `theta_u = Gamma_|u| prod_{l in u} theta_l`
/// with `Gamma_k = p^{-1/4} (k!)^{-1/2}` and `theta_l ~ Gamma(shape, scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PodSpec {
    pub p: usize,
    pub max_order: usize,
    pub shape: f64,
    pub scale: f64,
}

impl PodSpec {
    pub fn new(p: usize, max_order: usize) -> Self {
        Self {
            p,
            max_order,
            shape: 0.1,
            scale: 1.0,
        }
    }

    pub fn order_weight(&self, order: usize) -> f64 {
        let fact: f64 = (1..=order).map(|k| k as f64).product();
        (self.p as f64).powf(-0.25) / fact.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::invalid("POD kernel needs p >= 1"));
        }
        if self.max_order == 0 || self.max_order > self.p {
            return Err(Error::invalid(format!(
                "max interaction order {} must lie in 1..={}",
                self.max_order, self.p
            )));
        }
        if !(self.shape > 0.0 && self.scale > 0.0) {
            return Err(Error::invalid("Gamma prior parameters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "variant")]
pub enum KernelSpec {
    /// `r(x, y) = (||x|| + ||y|| - ||x - y||) / 2`
    Distance,
    /// `exp(-sum_l theta_l (x_l - y_l)^2)`
    GaussianAniso { theta: Vec<f64> },
    Pod(PodSpec),
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Distance => Ok(()),
            KernelSpec::GaussianAniso { theta } => {
                if theta.is_empty() || theta.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
                    Err(Error::invalid("Gaussian scale parameters must be positive"))
                } else {
                    Ok(())
                }
            }
            KernelSpec::Pod(s) => s.validate(),
        }
    }
}

/// `exp(-sum_l w_l (x_l - y_l)^2)`
#[inline]
pub fn gaussian(x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let mut t = 0.0;
    for l in 0..x.len() {
        let d = x[l] - y[l];
        t += w[l] * d * d;
    }
    (-t).exp()
}

#[inline]
pub fn euclid(x: &[f64], y: &[f64]) -> f64 {
    sqdist(x, y).sqrt()
}

#[inline]
pub fn sqdist(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for l in 0..x.len() {
        let d = x[l] - y[l];
        s += d * d;
    }
    s
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `r(x, y) = (||x|| + ||y|| - ||x - y||) / 2`, the Brownian-type kernel.
#[inline]
pub fn distance_kernel(x: &[f64], y: &[f64]) -> f64 {
    0.5 * (norm(x) + norm(y) - euclid(x, y))
}

/// `int_0^1 exp(-w (x - y)^2) dy`, the mean of a 1-d Gaussian kernel
/// against the uniform distribution.
#[inline]
pub fn gauss_uniform_mean(x: f64, w: f64) -> f64 {
    if w <= 0.0 {
        return 1.0;
    }
    let s = w.sqrt();
    if s < 1e-6 {
        // series in w; the erf form loses digits to cancellation here
        let m2 = x * x - x + 1.0 / 3.0;
        return 1.0 - w * m2;
    }
    0.5 * std::f64::consts::PI.sqrt() / s * (erf(s * x) + erf(s * (1.0 - x)))
}

/// Derivative of [`gauss_uniform_mean`] in `x`.
#[inline]
pub fn gauss_uniform_mean_dx(x: f64, w: f64) -> f64 {
    (-w * x * x).exp() - (-w * (1.0 - x) * (1.0 - x)).exp()
}

#[inline]
fn erf(x: f64) -> f64 {
    libm::erf(x)
}
