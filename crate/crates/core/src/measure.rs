//! Atomic measures on the line and the vague-convergence toolkit: Stieltjes-type
//! transforms, the normalized smoothing kernel, the ramp indicator `I_E` and a
//! tightness surrogate.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted point masses, sorted by location with ties merged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct AtomicMeasure {
    locations: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<RawMeasure> for AtomicMeasure {
    type Error = Error;
    fn try_from(raw: RawMeasure) -> Result<Self> {
        AtomicMeasure::new(raw.atoms)
    }
}

impl From<AtomicMeasure> for RawMeasure {
    fn from(m: AtomicMeasure) -> Self {
        RawMeasure { atoms: m.atoms().collect() }
    }
}

impl AtomicMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(loc, w) in &atoms {
            if !loc.is_finite() {
                return Err(Error::param("location", format!("atom location {loc} is not finite")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::param("weight", format!("atom weight {w} must be positive and finite")));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut locations: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (loc, w) in atoms {
            match locations.last() {
                Some(&last) if last == loc => *weights.last_mut().unwrap() += w,
                _ => {
                    locations.push(loc);
                    weights.push(w);
                }
            }
        }
        Ok(AtomicMeasure { locations, weights })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dirac(location: f64, weight: f64) -> Result<Self> {
        Self::new(vec![(location, weight)])
    }

    /// Eigenvalue counting measure with every eigenvalue carrying `weight`
    /// (e.g. `1/|Λ|` for the normalized density of states).
    pub fn from_eigenvalues(eigenvalues: &[f64], weight: f64) -> Result<Self> {
        Self::new(eigenvalues.iter().map(|&e| (e, weight)).collect())
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locations.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `μ(]−∞, E[)`.
    pub fn distribution_function(&self, e: f64) -> f64 {
        let k = self.locations.partition_point(|&x| x < e);
        self.weights[..k].iter().sum()
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", "scale factor must be positive and finite"));
        }
        Ok(AtomicMeasure { locations: self.locations.clone(), weights: self.weights.iter().map(|w| w * c).collect() })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut total = 0.0;
        for (loc, w) in self.atoms() {
            let v = f(loc);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { location: loc });
            }
            total += w * v;
        }
        Ok(total)
    }

    /// `∫ μ(dE) / |E − z|^p`.
    pub fn stieltjes(&self, z: Complex64, p: f64) -> Result<f64> {
        check_transform_args(z, p)?;
        Ok(self.atoms().map(|(loc, w)| w / (Complex64::new(loc, 0.0) - z).norm().powf(p)).sum())
    }

    /// CSV with columns `location,weight`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "location,weight")?;
        for (loc, wt) in self.atoms() {
            writeln!(w, "{loc:.16e},{wt:.16e}")?;
        }
        Ok(())
    }
}

fn check_transform_args(z: Complex64, p: f64) -> Result<()> {
    if z.im == 0.0 || !z.is_finite() {
        return Err(Error::RealArgument { re: z.re, im: z.im });
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", "transform exponent must exceed 1"));
    }
    Ok(())
}

/// Default test grid `z ∈ {i, 1+i, −1+i, 2i}` with exponent `p = 2`.
pub fn default_stieltjes_grid() -> Vec<(Complex64, f64)> {
    [Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0), Complex64::new(-1.0, 1.0), Complex64::new(0.0, 2.0)]
        .into_iter()
        .map(|z| (z, 2.0))
        .collect()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 50)
}

const TAIL_BOUND: f64 = 1e-10;

/// `Υ_p = 1 / ∫ dξ (1 + ξ^2)^{−p/2}`, integrating over `[−T, T]` with
/// `2 ∫_T^∞ ξ^{−p} dξ < 1e−10`, split into geometric segments.
pub fn upsilon(p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", "smoothing kernel needs p > 1"));
    }
    let cutoff = (2.0 / ((p - 1.0) * TAIL_BOUND)).powf(1.0 / (p - 1.0));
    let f = |x: f64| (1.0 + x * x).powf(-p / 2.0);
    let mut half = adaptive_simpson(f, 0.0, 1f64.min(cutoff), 1e-14);
    let mut a = 1.0;
    while a < cutoff {
        let b = (2.0 * a).min(cutoff);
        half += adaptive_simpson(f, a, b, 1e-14 * a.powf(1.0 - p).max(1e-300));
        a = b;
    }
    Ok(1.0 / (2.0 * half))
}

/// `δ^(ε)(E) = Υ_p ε^{p−1} / |E − iε|^p`, a probability density in `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingKernel {
    p: f64,
    eps: f64,
    upsilon: f64,
}

impl SmoothingKernel {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn upsilon(&self) -> f64 {
        self.upsilon
    }

    pub fn eval(&self, e: f64) -> f64 {
        self.upsilon * self.eps.powf(self.p - 1.0) / (e * e + self.eps * self.eps).powf(self.p / 2.0)
    }
}

pub fn smoothing_kernel(p: f64, eps: f64) -> Result<SmoothingKernel> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", "must be positive and finite"));
    }
    Ok(SmoothingKernel { p, eps, upsilon: upsilon(p)? })
}

/// `I_E(x) = 1` for `x < E`, `E + 1 − x` on `[E, E+1[`, `0` beyond.
pub fn indicator_hat(e: f64) -> impl Fn(f64) -> f64 + Copy {
    move |x| {
        if x < e {
            1.0
        } else if x < e + 1.0 {
            e + 1.0 - x
        } else {
            0.0
        }
    }
}

/// `I_E` convolved with the Cauchy density of width `eps`, in closed form:
/// `f(x) = G(E + 1 − x) − G(E − x)` where `G(t) = ∫ max(t + y, 0) δ^(ε)(y) dy`
/// for the Cauchy density `δ^(ε)`.
pub fn smoothed_indicator(e: f64, eps: f64) -> Result<impl Fn(f64) -> f64 + Copy> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", "must be positive and finite"));
    }
    let g =
        move |t: f64| t / 2.0 + (t * (t / eps).atan() - 0.5 * eps * (t * t + eps * eps).ln()) / std::f64::consts::PI;
    Ok(move |x: f64| g(e - x + 1.0) - g(e - x))
}

/// `max |μ̃(z,p) − ν̃(z,p)|` over the grid.
pub fn vague_distance(mu: &AtomicMeasure, nu: &AtomicMeasure, grid: &[(Complex64, f64)]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::param("grid", "test grid must be nonempty"));
    }
    grid.iter().try_fold(0.0f64, |m, &(z, p)| Ok(m.max((mu.stieltjes(z, p)? - nu.stieltjes(z, p)?).abs())))
}

/// For each `E`, the maximum of `μ_n(]−∞,E[)` over the later half of the
/// sequence (a finite stand-in for `limsup_n`).
pub fn tightness_profile(sequence: &[AtomicMeasure], egrid: &[f64]) -> Result<Vec<f64>> {
    if sequence.is_empty() || egrid.is_empty() {
        return Err(Error::param("sequence", "sequence and energy grid must be nonempty"));
    }
    let tail = &sequence[sequence.len() / 2..];
    Ok(egrid.iter().map(|&e| tail.iter().map(|m| m.distribution_function(e)).fold(0.0, f64::max)).collect())
}
