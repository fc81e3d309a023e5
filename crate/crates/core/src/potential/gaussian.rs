//! Stationary Gaussian fields by circulant embedding.
//!
//! The covariance is periodized on a torus with twice the box side per axis
//! (wrapped per-axis displacements), diagonalized by the FFT, and a sample is
//! the real part of `FFT(sqrt(λ/N) ξ)` with `ξ` complex standard normal. All
//! in-box displacements are shorter than half the torus, so the sampled
//! covariance equals `C(x_i − x_j)` exactly whenever the embedding spectrum is
//! nonnegative.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use super::Covariance;
use crate::error::{Error, Result};
use crate::lattice::BoxSpec;
use crate::rng::Rng;

const NEGATIVE_MODE_TOLERANCE: f64 = 1e-12;
const TORUS_FACTOR: usize = 2;

#[derive(Clone)]
pub struct GaussianSynthesizer {
    box_spec: BoxSpec,
    torus: Vec<usize>,
    amplitudes: Vec<f64>,
    plans: Vec<Arc<dyn Fft<f64>>>,
    clipped_modes: usize,
    embedded_variance: f64,
    variance: f64,
}

impl fmt::Debug for GaussianSynthesizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianSynthesizer")
            .field("torus", &self.torus)
            .field("clipped_modes", &self.clipped_modes)
            .field("embedded_variance", &self.embedded_variance)
            .finish_non_exhaustive()
    }
}

fn torus_coords(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (c, &m) in out.iter_mut().zip(dims) {
        *c = index % m;
        index /= m;
    }
}

/// In-place multidimensional FFT, axis 0 fastest.
fn fft_nd(data: &mut [Complex64], dims: &[usize], plans: &[Arc<dyn Fft<f64>>]) {
    let total = data.len();
    let mut stride = 1;
    for (axis, &len) in dims.iter().enumerate() {
        let plan = &plans[axis];
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for start in 0..total {
            if (start / stride) % len != 0 {
                continue;
            }
            for (i, x) in line.iter_mut().enumerate() {
                *x = data[start + i * stride];
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for (i, x) in line.iter().enumerate() {
                data[start + i * stride] = *x;
            }
        }
        stride *= len;
    }
}

impl GaussianSynthesizer {
    pub fn new(covariance: &Covariance, bx: &BoxSpec) -> Result<Self> {
        covariance.validate()?;
        let torus: Vec<usize> = bx.sides().iter().map(|&l| TORUS_FACTOR * l).collect();
        let n: usize = torus.iter().product();
        let h = bx.spacing();
        let mut planner = FftPlanner::new();
        let plans: Vec<_> = torus.iter().map(|&m| planner.plan_fft_forward(m)).collect();

        let mut coords = vec![0; torus.len()];
        let mut displacement = vec![0.0; torus.len()];
        let mut spectrum: Vec<Complex64> = (0..n)
            .map(|i| {
                torus_coords(i, &torus, &mut coords);
                for ((x, &c), &m) in displacement.iter_mut().zip(&coords).zip(&torus) {
                    let signed = if 2 * c <= m { c as f64 } else { c as f64 - m as f64 };
                    *x = signed * h;
                }
                Complex64::new(covariance.value(&displacement), 0.0)
            })
            .collect();
        fft_nd(&mut spectrum, &torus, &plans);

        let c0 = covariance.variance();
        let tolerance = NEGATIVE_MODE_TOLERANCE * c0;
        let (worst_mode, worst) = spectrum
            .iter()
            .enumerate()
            .map(|(k, z)| (k, z.re))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if worst < -tolerance {
            return Err(Error::EmbeddingFailure { mode: worst_mode, value: worst, tolerance });
        }
        let clipped_modes = spectrum.iter().filter(|z| z.re < 0.0).count();
        let eigen: Vec<f64> = spectrum.iter().map(|z| z.re.max(0.0)).collect();
        let embedded_variance = eigen.iter().sum::<f64>() / n as f64;
        let amplitudes = eigen.iter().map(|&l| (l / n as f64).sqrt()).collect();
        Ok(GaussianSynthesizer {
            box_spec: bx.clone(),
            torus,
            amplitudes,
            plans,
            clipped_modes,
            embedded_variance,
            variance: c0,
        })
    }

    /// Marginal variance realized by the (clipped) embedding.
    pub fn embedded_variance(&self) -> f64 {
        self.embedded_variance
    }

    /// `|embedded variance − C(0)| / C(0)`.
    pub fn variance_error(&self) -> f64 {
        (self.embedded_variance - self.variance).abs() / self.variance
    }

    pub fn clipped_modes(&self) -> usize {
        self.clipped_modes
    }

    pub fn torus(&self) -> &[usize] {
        &self.torus
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let mut field: Vec<Complex64> = self
            .amplitudes
            .iter()
            .map(|&a| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(a * re, a * im)
            })
            .collect();
        fft_nd(&mut field, &self.torus, &self.plans);
        let bx = &self.box_spec;
        (0..bx.n_sites())
            .map(|i| {
                let mut t = 0;
                let mut stride = 1;
                for (c, &m) in bx.coords(i).iter().zip(&self.torus) {
                    t += c * stride;
                    stride *= m;
                }
                field[t].re
            })
            .collect()
    }
}
