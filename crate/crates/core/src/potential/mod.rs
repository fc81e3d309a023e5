//! Random potentials: alloy-type, Poissonian and Gaussian ensembles sampled at
//! lattice sites, truncation, and the convolution moment bound.

mod gaussian;
mod moment;

use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::BoxSpec;
use crate::rng::{rng_from_seed, Rng};

pub use gaussian::GaussianSynthesizer;
pub use moment::{check_moment_bound, poisson_raw_moment, MomentReport};

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

/// Single-site profile `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Profile {
    /// `a` on the half-open unit cube `[-1/2, 1/2)^d`.
    UnitCube {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `a exp(-|x|^2 / w^2)` for `|x| <= radius`.
    GaussianBump {
        #[serde(default = "one")]
        amplitude: f64,
        width: f64,
        radius: f64,
    },
    /// `a exp(-|x| / decay)` for `|x| <= radius`.
    Exponential {
        #[serde(default = "one")]
        amplitude: f64,
        decay: f64,
        radius: f64,
    },
}

impl Profile {
    pub fn unit_cube() -> Self {
        Profile::UnitCube { amplitude: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let amplitude = self.amplitude();
        if !amplitude.is_finite() {
            return Err(Error::param("amplitude", "must be finite"));
        }
        match *self {
            Profile::UnitCube { .. } => Ok(()),
            Profile::GaussianBump { width: scale, radius, .. } | Profile::Exponential { decay: scale, radius, .. } => {
                if radius.is_infinite() {
                    return Err(Error::InfiniteSupport);
                }
                if !(radius > 0.0) {
                    return Err(Error::param("radius", "must be positive"));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::param("width/decay", "must be positive and finite"));
                }
                Ok(())
            }
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Profile::UnitCube { amplitude }
            | Profile::GaussianBump { amplitude, .. }
            | Profile::Exponential { amplitude, .. } => amplitude,
        }
    }

    /// Half-width of the smallest centred cube containing the support.
    pub fn reach(&self) -> f64 {
        match *self {
            Profile::UnitCube { .. } => 0.5,
            Profile::GaussianBump { radius, .. } | Profile::Exponential { radius, .. } => radius,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.amplitude().abs()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.amplitude() >= 0.0
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Profile::UnitCube { amplitude } => {
                if x.iter().all(|&c| (-0.5..0.5).contains(&c)) {
                    amplitude
                } else {
                    0.0
                }
            }
            Profile::GaussianBump { amplitude, width, radius } => {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                if r2 <= radius * radius {
                    amplitude * (-r2 / (width * width)).exp()
                } else {
                    0.0
                }
            }
            Profile::Exponential { amplitude, decay, radius } => {
                let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                if r <= radius {
                    amplitude * (-r / decay).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

/// Law of the alloy couplings `λ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum CouplingDist {
    Uniform {
        low: f64,
        high: f64,
    },
    /// Centred normal with standard deviation `std`.
    Gaussian {
        std: f64,
    },
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint {
        low: f64,
        high: f64,
        #[serde(default = "half")]
        p_high: f64,
    },
    Constant {
        value: f64,
    },
}

impl CouplingDist {
    pub fn validate(&self) -> Result<()> {
        let finite = |name, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        match *self {
            CouplingDist::Uniform { low, high } => {
                finite("low", low)?;
                finite("high", high)?;
                if !(low < high) {
                    return Err(Error::param("high", "uniform law needs low < high"));
                }
            }
            CouplingDist::Gaussian { std } => {
                if !(std > 0.0 && std.is_finite()) {
                    return Err(Error::param("std", "must be positive and finite"));
                }
            }
            CouplingDist::TwoPoint { low, high, p_high } => {
                finite("low", low)?;
                finite("high", high)?;
                if !(0.0..=1.0).contains(&p_high) {
                    return Err(Error::param("p_high", "must lie in [0, 1]"));
                }
            }
            CouplingDist::Constant { value } => finite("value", value)?,
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            CouplingDist::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            CouplingDist::Gaussian { std } => {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            }
            CouplingDist::TwoPoint { low, high, p_high } => {
                if rng.random::<f64>() < p_high {
                    high
                } else {
                    low
                }
            }
            CouplingDist::Constant { value } => value,
        }
    }

    /// `E|λ|^r`.
    pub fn abs_moment(&self, r: f64) -> f64 {
        match *self {
            CouplingDist::Uniform { low, high } => {
                let antiderivative = |x: f64| x.signum() * x.abs().powf(r + 1.0) / (r + 1.0);
                (antiderivative(high) - antiderivative(low)) / (high - low)
            }
            CouplingDist::Gaussian { std } => {
                std.powf(r) * 2f64.powf(r / 2.0) * statrs::function::gamma::gamma((r + 1.0) / 2.0)
                    / std::f64::consts::PI.sqrt()
            }
            CouplingDist::TwoPoint { low, high, p_high } => {
                p_high * high.abs().powf(r) + (1.0 - p_high) * low.abs().powf(r)
            }
            CouplingDist::Constant { value } => value.abs().powf(r),
        }
    }

    /// Almost-sure bound on `|λ|`, if any.
    pub fn max_abs(&self) -> Option<f64> {
        match *self {
            CouplingDist::Uniform { low, high } | CouplingDist::TwoPoint { low, high, .. } => {
                Some(low.abs().max(high.abs()))
            }
            CouplingDist::Gaussian { .. } => None,
            CouplingDist::Constant { value } => Some(value.abs()),
        }
    }
}

/// Stationary covariance function of a Gaussian field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Covariance {
    /// `C(x) = variance exp(-|x|^2 / length^2)`.
    GaussianBump { variance: f64, length: f64 },
    /// `C(x) = variance exp(-|x| / length)`.
    Exponential { variance: f64, length: f64 },
}

impl Covariance {
    pub fn validate(&self) -> Result<()> {
        let (Covariance::GaussianBump { variance, length } | Covariance::Exponential { variance, length }) = *self;
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::param("variance", "C(0) must be positive and finite"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::param("length", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Covariance::GaussianBump { variance, .. } | Covariance::Exponential { variance, .. } => variance,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        match *self {
            Covariance::GaussianBump { variance, length } => variance * (-r2 / (length * length)).exp(),
            Covariance::Exponential { variance, length } => variance * (-r2.sqrt() / length).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnsembleSpec {
    Alloy { profile: Profile, coupling: CouplingDist },
    Poisson { profile: Profile, intensity: f64 },
    Gaussian { covariance: Covariance },
}

impl EnsembleSpec {
    /// The deterministic potential `V = 0` (empty Poisson process).
    pub fn free() -> Self {
        EnsembleSpec::Poisson { profile: Profile::unit_cube(), intensity: 0.0 }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EnsembleSpec::Alloy { .. } => "alloy",
            EnsembleSpec::Poisson { .. } => "poisson",
            EnsembleSpec::Gaussian { .. } => "gaussian",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnsembleSpec::Alloy { profile, coupling } => {
                profile.validate()?;
                coupling.validate()
            }
            EnsembleSpec::Poisson { profile, intensity } => {
                profile.validate()?;
                if intensity.is_nan() || *intensity < 0.0 {
                    return Err(Error::NegativeIntensity(*intensity));
                }
                if !intensity.is_finite() {
                    return Err(Error::param("intensity", "must be finite"));
                }
                Ok(())
            }
            EnsembleSpec::Gaussian { covariance } => covariance.validate(),
        }
    }

    /// True when every realization is identically zero.
    pub fn is_free(&self) -> bool {
        match self {
            EnsembleSpec::Poisson { profile, intensity } => *intensity == 0.0 || profile.amplitude() == 0.0,
            EnsembleSpec::Alloy { profile, coupling } => {
                profile.amplitude() == 0.0 || *coupling == CouplingDist::Constant { value: 0.0 }
            }
            EnsembleSpec::Gaussian { .. } => false,
        }
    }

    /// True when every realization is pointwise nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            EnsembleSpec::Poisson { profile, .. } => profile.is_nonnegative(),
            EnsembleSpec::Alloy { profile, coupling } => {
                let lambda_sign_ok = match *coupling {
                    CouplingDist::Uniform { low, .. } => low >= 0.0,
                    CouplingDist::TwoPoint { low, high, .. } => low >= 0.0 && high >= 0.0,
                    CouplingDist::Constant { value } => value >= 0.0,
                    CouplingDist::Gaussian { .. } => false,
                };
                profile.amplitude() == 0.0 || (lambda_sign_ok && profile.is_nonnegative())
            }
            EnsembleSpec::Gaussian { .. } => false,
        }
    }
}

/// One realization `V^(ω)` at the sites of a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSample {
    pub values: Vec<f64>,
    pub ensemble: EnsembleSpec,
    pub seed: u64,
    pub box_spec: BoxSpec,
    /// Set by [`truncate`]: sites with `|V| >= n` were zeroed.
    pub truncated_at: Option<f64>,
}

impl PotentialSample {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with one row per site: coordinates `x0..x{d-1}` (physical units) and `value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.box_spec.dim();
        let header: Vec<String> = (0..d).map(|k| format!("x{k}")).chain(["value".into()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            for x in self.box_spec.position(i) {
                write!(w, "{x:.16e},")?;
            }
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }
}

/// Adds `weight * u(x - centre)` to every site `x` within reach of `centre`.
fn deposit(values: &mut [f64], bx: &BoxSpec, profile: &Profile, centre: &[f64], weight: f64) {
    let h = bx.spacing();
    let reach = profile.reach();
    let d = bx.dim();
    let mut lo = vec![0usize; d];
    let mut hi = vec![0usize; d];
    for k in 0..d {
        let a = ((centre[k] - reach) / h).ceil().max(0.0);
        let b = ((centre[k] + reach) / h).floor().min((bx.sides()[k] - 1) as f64);
        if a > b {
            return;
        }
        lo[k] = a as usize;
        hi[k] = b as usize;
    }
    let mut coords = lo.clone();
    let mut offset = vec![0.0; d];
    loop {
        for k in 0..d {
            offset[k] = coords[k] as f64 * h - centre[k];
        }
        let u = profile.value(&offset);
        if u != 0.0 {
            values[bx.index(&coords)] += weight * u;
        }
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            if coords[k] < hi[k] {
                coords[k] += 1;
                break;
            }
            coords[k] = lo[k];
            k += 1;
        }
    }
}

/// Integer cell centres whose profile translate can touch the box, axis 0 fastest.
fn alloy_centres(bx: &BoxSpec, reach: f64) -> Vec<Vec<f64>> {
    let d = bx.dim();
    let ranges: Vec<(i64, i64)> = (0..d)
        .map(|k| {
            let lo = (-reach).ceil() as i64;
            let hi = ((bx.sides()[k] - 1) as f64 * bx.spacing() + reach).floor() as i64;
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return out;
    }
    loop {
        out.push(cur.iter().map(|&c| c as f64).collect());
        let mut k = 0;
        loop {
            if k == d {
                return out;
            }
            if cur[k] < ranges[k].1 {
                cur[k] += 1;
                break;
            }
            cur[k] = ranges[k].0;
            k += 1;
        }
    }
}

fn sample_alloy_values(bx: &BoxSpec, profile: &Profile, coupling: &CouplingDist, rng: &mut Rng) -> Vec<f64> {
    let mut values = vec![0.0; bx.n_sites()];
    for centre in alloy_centres(bx, profile.reach()) {
        let lambda = coupling.sample(rng);
        deposit(&mut values, bx, profile, &centre, lambda);
    }
    values
}

/// Points of a homogeneous Poisson process with the given intensity in the
/// rectangle `[lower, upper]`.
pub fn poisson_points(intensity: f64, lower: &[f64], upper: &[f64], rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    if intensity.is_nan() || intensity < 0.0 {
        return Err(Error::NegativeIntensity(intensity));
    }
    let volume: f64 = lower.iter().zip(upper).map(|(a, b)| (b - a).max(0.0)).product();
    let mean = intensity * volume;
    let count = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::param("intensity", e.to_string()))?.sample(rng) as usize
    } else {
        0
    };
    Ok((0..count).map(|_| lower.iter().zip(upper).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect()).collect())
}

/// Haloed sampling region `[−reach, (L−1)h + reach]` per axis.
fn haloed_region(bx: &BoxSpec, reach: f64) -> (Vec<f64>, Vec<f64>) {
    let lower = vec![-reach; bx.dim()];
    let upper = bx.sides().iter().map(|&l| (l - 1) as f64 * bx.spacing() + reach).collect();
    (lower, upper)
}

fn sample_poisson_values(bx: &BoxSpec, profile: &Profile, intensity: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    let (lower, upper) = haloed_region(bx, profile.reach());
    let mut values = vec![0.0; bx.n_sites()];
    for point in poisson_points(intensity, &lower, &upper, rng)? {
        deposit(&mut values, bx, profile, &point, 1.0);
    }
    Ok(values)
}

fn finish(values: Vec<f64>, spec: &EnsembleSpec, bx: &BoxSpec, seed: u64) -> PotentialSample {
    PotentialSample { values, ensemble: *spec, seed, box_spec: bx.clone(), truncated_at: None }
}

fn wrong_kind(expected: &'static str, spec: &EnsembleSpec) -> Error {
    Error::UnsupportedEnsemble { kind: spec.kind(), reason: format!("expected a {expected} ensemble") }
}

pub fn sample_alloy(spec: &EnsembleSpec, bx: &BoxSpec, seed: u64) -> Result<PotentialSample> {
    let EnsembleSpec::Alloy { profile, coupling } = spec else {
        return Err(wrong_kind("alloy", spec));
    };
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    Ok(finish(sample_alloy_values(bx, profile, coupling, &mut rng), spec, bx, seed))
}

pub fn sample_poisson(spec: &EnsembleSpec, bx: &BoxSpec, seed: u64) -> Result<PotentialSample> {
    let EnsembleSpec::Poisson { profile, intensity } = spec else {
        return Err(wrong_kind("poisson", spec));
    };
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    Ok(finish(sample_poisson_values(bx, profile, *intensity, &mut rng)?, spec, bx, seed))
}

pub fn sample_gaussian(spec: &EnsembleSpec, bx: &BoxSpec, seed: u64) -> Result<PotentialSample> {
    let EnsembleSpec::Gaussian { covariance } = spec else {
        return Err(wrong_kind("gaussian", spec));
    };
    let synth = GaussianSynthesizer::new(covariance, bx)?;
    let mut rng = rng_from_seed(seed);
    Ok(finish(synth.sample(&mut rng), spec, bx, seed))
}

/// Reusable sampler for one `(ensemble, box)` pair; caches the Gaussian
/// embedding spectrum.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: EnsembleSpec,
    box_spec: BoxSpec,
    gaussian: Option<GaussianSynthesizer>,
}

impl Sampler {
    pub fn new(spec: &EnsembleSpec, bx: &BoxSpec) -> Result<Self> {
        spec.validate()?;
        let gaussian = match spec {
            EnsembleSpec::Gaussian { covariance } => Some(GaussianSynthesizer::new(covariance, bx)?),
            _ => None,
        };
        Ok(Sampler { spec: *spec, box_spec: bx.clone(), gaussian })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.box_spec
    }

    pub fn sample(&self, seed: u64) -> Result<PotentialSample> {
        let bx = &self.box_spec;
        let mut rng = rng_from_seed(seed);
        let values = match (&self.spec, &self.gaussian) {
            (EnsembleSpec::Alloy { profile, coupling }, _) => sample_alloy_values(bx, profile, coupling, &mut rng),
            (EnsembleSpec::Poisson { profile, intensity }, _) => {
                sample_poisson_values(bx, profile, *intensity, &mut rng)?
            }
            (EnsembleSpec::Gaussian { .. }, Some(synth)) => synth.sample(&mut rng),
            (EnsembleSpec::Gaussian { .. }, None) => unreachable!("synthesizer built in Sampler::new"),
        };
        Ok(finish(values, &self.spec, bx, seed))
    }
}

/// `V_n(x) = V(x) Θ(n − |V(x)|)` with the left-continuous Heaviside: sites with
/// `|V| >= n` are set to zero.
pub fn truncate(sample: &PotentialSample, n: f64) -> Result<PotentialSample> {
    if !(n > 0.0) {
        return Err(Error::param("n", "truncation height must be positive"));
    }
    let values = sample.values.iter().map(|&v| if v.abs() < n { v } else { 0.0 }).collect();
    Ok(PotentialSample { values, truncated_at: Some(sample.truncated_at.map_or(n, |m| m.min(n))), ..sample.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoundaryCondition;
    use proptest::prelude::*;

    fn square(l: usize, h: f64) -> BoxSpec {
        BoxSpec::cube(2, l, h, BoundaryCondition::Dirichlet).unwrap()
    }

    fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn unit_cube_couplings_one_give_constant_potential() {
        let spec =
            EnsembleSpec::Alloy { profile: Profile::unit_cube(), coupling: CouplingDist::Constant { value: 1.0 } };
        for h in [1.0, 0.5, 0.25] {
            let s = sample_alloy(&spec, &square(7, h), 3).unwrap();
            assert!(s.values.iter().all(|&v| v == 1.0), "h = {h}");
        }
    }

    #[test]
    fn alloy_uniform_site_mean() {
        let spec = EnsembleSpec::Alloy {
            profile: Profile::unit_cube(),
            coupling: CouplingDist::Uniform { low: 0.0, high: 1.0 },
        };
        let bx = square(3, 1.0);
        let sampler = Sampler::new(&spec, &bx).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|s| sampler.sample(s).unwrap().values[4]).collect();
        let (m, se) = mean_and_stderr(&xs);
        assert!((m - 0.5).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn samples_are_deterministic() {
        let specs = [
            EnsembleSpec::Alloy {
                profile: Profile::GaussianBump { amplitude: 1.0, width: 0.7, radius: 2.0 },
                coupling: CouplingDist::Gaussian { std: 1.0 },
            },
            EnsembleSpec::Poisson { profile: Profile::unit_cube(), intensity: 1.3 },
            EnsembleSpec::Gaussian { covariance: Covariance::GaussianBump { variance: 1.0, length: 1.0 } },
        ];
        let bx = square(6, 0.5);
        for spec in &specs {
            let a = Sampler::new(spec, &bx).unwrap().sample(99).unwrap();
            let b = Sampler::new(spec, &bx).unwrap().sample(99).unwrap();
            assert_eq!(a, b);
            let c = match spec {
                EnsembleSpec::Alloy { .. } => sample_alloy(spec, &bx, 99),
                EnsembleSpec::Poisson { .. } => sample_poisson(spec, &bx, 99),
                EnsembleSpec::Gaussian { .. } => sample_gaussian(spec, &bx, 99),
            }
            .unwrap();
            assert_eq!(a, c);
            assert_ne!(a.values, Sampler::new(spec, &bx).unwrap().sample(100).unwrap().values);
        }
    }

    #[test]
    fn empty_poisson_process_is_zero() {
        let s = sample_poisson(&EnsembleSpec::free(), &square(5, 1.0), 1).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert!(EnsembleSpec::free().is_free());
    }

    #[test]
    fn poisson_count_mean_and_variance() {
        let rho = 0.8;
        let (lower, upper) = (vec![0.0, 0.0], vec![3.0, 2.5]);
        let expected = rho * 7.5;
        let counts: Vec<f64> = (0..10_000)
            .map(|s| poisson_points(rho, &lower, &upper, &mut rng_from_seed(s)).unwrap().len() as f64)
            .collect();
        let (m, se) = mean_and_stderr(&counts);
        assert!((m - expected).abs() < 3.0 * se, "mean {m} se {se}");
        let var = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (counts.len() as f64 - 1.0);
        assert!((var / expected - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn poisson_points_stay_in_region() {
        let pts = poisson_points(5.0, &[-1.0, 2.0], &[1.0, 3.0], &mut rng_from_seed(0)).unwrap();
        assert!(!pts.is_empty());
        for p in pts {
            assert!((-1.0..=1.0).contains(&p[0]) && (2.0..=3.0).contains(&p[1]));
        }
    }

    #[test]
    fn negative_intensity_rejected() {
        let spec = EnsembleSpec::Poisson { profile: Profile::unit_cube(), intensity: -1.0 };
        assert_eq!(sample_poisson(&spec, &square(2, 1.0), 0), Err(Error::NegativeIntensity(-1.0)));
    }

    #[test]
    fn infinite_support_rejected() {
        let spec = EnsembleSpec::Alloy {
            profile: Profile::Exponential { amplitude: 1.0, decay: 1.0, radius: f64::INFINITY },
            coupling: CouplingDist::Constant { value: 1.0 },
        };
        assert_eq!(sample_alloy(&spec, &square(2, 1.0), 0), Err(Error::InfiniteSupport));
    }

    #[test]
    fn wrong_sampler_for_kind_rejected() {
        let spec = EnsembleSpec::free();
        assert!(matches!(sample_alloy(&spec, &square(2, 1.0), 0), Err(Error::UnsupportedEnsemble { .. })));
        assert!(matches!(sample_gaussian(&spec, &square(2, 1.0), 0), Err(Error::UnsupportedEnsemble { .. })));
    }

    #[test]
    fn nonnegative_profile_gives_nonnegative_potential() {
        let spec = EnsembleSpec::Poisson {
            profile: Profile::GaussianBump { amplitude: 2.0, width: 0.5, radius: 1.5 },
            intensity: 2.0,
        };
        let sampler = Sampler::new(&spec, &square(8, 0.5)).unwrap();
        for seed in 0..20 {
            assert!(sampler.sample(seed).unwrap().values.iter().all(|&v| v >= 0.0));
        }
        assert!(spec.is_nonnegative());
    }

    #[test]
    fn bounded_alloy_obeys_overlap_bound() {
        // exponential profile of radius 1 at h = 0.5: at most 9 translates overlap in 2D
        let spec = EnsembleSpec::Alloy {
            profile: Profile::Exponential { amplitude: 1.5, decay: 0.5, radius: 1.0 },
            coupling: CouplingDist::TwoPoint { low: -2.0, high: 1.0, p_high: 0.3 },
        };
        let sampler = Sampler::new(&spec, &square(9, 0.5)).unwrap();
        for seed in 0..20 {
            assert!(sampler.sample(seed).unwrap().max_abs() <= 2.0 * 9.0 * 1.5);
        }
    }

    #[test]
    fn truncation_examples() {
        let bx = BoxSpec::new(vec![3], 1.0, BoundaryCondition::Dirichlet).unwrap();
        let s = PotentialSample {
            values: vec![-3.0, 0.5, 7.0],
            ensemble: EnsembleSpec::free(),
            seed: 0,
            box_spec: bx,
            truncated_at: None,
        };
        assert_eq!(truncate(&s, 5.0).unwrap().values, vec![-3.0, 0.5, 0.0]);
        assert_eq!(truncate(&s, 5.0).unwrap().truncated_at, Some(5.0));
        assert_eq!(truncate(&s, 7.0).unwrap().values, vec![-3.0, 0.5, 0.0]);
        assert_eq!(truncate(&s, 7.5).unwrap().values, s.values);
        let edge = PotentialSample { values: vec![5.0, -5.0, 4.999], ..s.clone() };
        assert_eq!(truncate(&edge, 5.0).unwrap().values, vec![0.0, 0.0, 4.999]);
        assert!(truncate(&s, 0.0).is_err());
    }

    #[test]
    fn coupling_moments() {
        let u = CouplingDist::Uniform { low: 0.0, high: 1.0 };
        assert!((u.abs_moment(3.0) - 0.25).abs() < 1e-15);
        let sym = CouplingDist::Uniform { low: -1.0, high: 1.0 };
        assert!((sym.abs_moment(2.0) - 1.0 / 3.0).abs() < 1e-15);
        let g = CouplingDist::Gaussian { std: 2.0 };
        assert!((g.abs_moment(2.0) - 4.0).abs() < 1e-12);
        assert!((g.abs_moment(4.0) - 48.0).abs() < 1e-10);
        let t = CouplingDist::TwoPoint { low: -1.0, high: 1.0, p_high: 0.5 };
        assert_eq!(t.abs_moment(3.0), 1.0);
    }

    #[test]
    fn csv_export_lists_every_site() {
        let s = sample_alloy(
            &EnsembleSpec::Alloy { profile: Profile::unit_cube(), coupling: CouplingDist::Constant { value: 2.0 } },
            &square(2, 0.5),
            0,
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x0,x1,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("5.0000000000000000e-1,0.0000000000000000e0,2.0"));
    }

    #[test]
    fn ensemble_serde_round_trip() {
        let spec = EnsembleSpec::Alloy {
            profile: Profile::unit_cube(),
            coupling: CouplingDist::TwoPoint { low: -1.0, high: 1.0, p_high: 0.5 },
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"alloy\""));
        assert!(json.contains("\"law\":\"two-point\""));
        let back: EnsembleSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let defaulted: Profile = serde_json::from_str(r#"{"shape":"unit-cube"}"#).unwrap();
        assert_eq!(defaulted, Profile::unit_cube());
    }

    proptest! {
        #[test]
        fn truncation_idempotent_and_monotone(
            values in proptest::collection::vec(-10.0f64..10.0, 1..40),
            n in 0.1f64..10.0,
            extra in 0.0f64..5.0,
        ) {
            let bx = BoxSpec::new(vec![values.len()], 1.0, BoundaryCondition::Dirichlet).unwrap();
            let s = PotentialSample {
                values,
                ensemble: EnsembleSpec::free(),
                seed: 0,
                box_spec: bx,
                truncated_at: None,
            };
            let once = truncate(&s, n).unwrap();
            prop_assert_eq!(&truncate(&once, n).unwrap().values, &once.values);
            let wider = truncate(&s, n + extra).unwrap();
            for ((a, b), v) in once.values.iter().zip(&wider.values).zip(&s.values) {
                prop_assert!(*a == 0.0 || a == b);
                if v.abs() < n {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}
