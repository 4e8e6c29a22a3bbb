//! Observables computed from final momenta: energy, zero-velocity fraction,
//! lineshape class, and the dominant frequency of an energy-vs-phase curve.
//!
//! Momenta are in two-photon recoils (`n = ρ/k̄`) and energies in
//! two-photon-recoil units (`E = ⟨n²⟩/2`).

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::classical::MomentumSamples;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const UNITS_HEADER: &str = "# units: momentum=two-photon-recoils energy=two-photon-recoil-units";

pub const DEFAULT_BIN_WIDTH: f64 = 0.5;
pub const DEFAULT_ZERO_VELOCITY_EPSILON: f64 = 1.0;

/// Normalized histogram on a uniform grid of bin centres `first_center + i·bin_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumDistribution<T> {
    first_center: T,
    bin_width: T,
    masses: Vec<T>,
}

impl<T: Real> MomentumDistribution<T> {
    /// Normalizes `masses` to unit sum.
    pub fn from_masses(first_center: T, bin_width: T, masses: Vec<T>) -> Result<Self> {
        if !(bin_width > T::zero()) {
            return Err(Error::param("bin_width", format!("must be positive, got {bin_width}")));
        }
        if masses.iter().any(|m| !(*m >= T::zero()) || !m.is_finite()) {
            return Err(Error::Analysis("negative or non-finite histogram mass".into()));
        }
        let total = masses.iter().fold(T::zero(), |acc, &m| acc + m);
        if !(total > T::zero()) {
            return Err(Error::Analysis("empty distribution".into()));
        }
        Ok(Self {
            first_center,
            bin_width,
            masses: masses.into_iter().map(|m| m / total).collect(),
        })
    }

    /// Histogram of momentum samples on bins centred at integer multiples of `bin_width`.
    pub fn from_samples(samples: &[T], bin_width: T) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Analysis("no samples".into()));
        }
        let extent = samples.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        let mut histogram = Histogram::covering(extent, bin_width)?;
        let weight = T::one() / T::from_usize_lossy(samples.len());
        for &x in samples {
            histogram.add(x, weight);
        }
        histogram.into_distribution()
    }

    pub fn bin_width(&self) -> T {
        self.bin_width
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn center(&self, i: usize) -> T {
        self.first_center + self.bin_width * T::from_usize_lossy(i)
    }

    pub fn centers(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.masses.len()).map(|i| self.center(i))
    }

    /// Probability density (mass / bin width) per bin.
    pub fn densities(&self) -> impl Iterator<Item = T> + '_ {
        self.masses.iter().map(|&m| m / self.bin_width)
    }

    /// Drops empty bins at both ends.
    pub fn trimmed(&self) -> Self {
        let first = self.masses.iter().position(|&m| m > T::zero()).unwrap_or(0);
        let last = self.masses.iter().rposition(|&m| m > T::zero()).map_or(0, |i| i + 1);
        Self {
            first_center: self.center(first),
            bin_width: self.bin_width,
            masses: self.masses[first..last.max(first)].to_vec(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{UNITS_HEADER}\nmomentum,probability_density,mass\n");
        for (i, &m) in self.masses.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.center(i).to_f64_lossy(),
                (m / self.bin_width).to_f64_lossy(),
                m.to_f64_lossy()
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut centers = Vec::new();
        let mut masses = Vec::new();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("momentum")) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Analysis(format!("malformed distribution row `{line}`")));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Analysis(format!("bad number `{s}`: {e}")))
            };
            centers.push(parse(fields[0])?);
            masses.push(T::lit(parse(fields[2])?));
        }
        if centers.len() < 2 {
            return Err(Error::Analysis("distribution needs at least two bins".into()));
        }
        Self::from_masses(T::lit(centers[0]), T::lit(centers[1] - centers[0]), masses)
    }
}

/// Accumulator on a symmetric grid of `2·half_bins + 1` bins centred on zero.
/// Momenta beyond the grid land in the outermost bins.
#[derive(Debug, Clone)]
pub struct Histogram<T> {
    half_bins: usize,
    bin_width: T,
    masses: Vec<T>,
}

impl<T: Real> Histogram<T> {
    pub fn covering(extent: T, bin_width: T) -> Result<Self> {
        if !(bin_width > T::zero()) {
            return Err(Error::param("bin_width", format!("must be positive, got {bin_width}")));
        }
        let half_bins = (extent / bin_width + T::lit(0.5)).ceil().to_usize().unwrap_or(0);
        Ok(Self {
            half_bins,
            bin_width,
            masses: vec![T::zero(); 2 * half_bins + 1],
        })
    }

    #[inline]
    pub fn add(&mut self, momentum: T, weight: T) {
        let offset = (momentum / self.bin_width).round().to_i64().unwrap_or(0) + self.half_bins as i64;
        let index = offset.clamp(0, self.masses.len() as i64 - 1) as usize;
        self.masses[index] = self.masses[index] + weight;
    }

    /// Adds another histogram on the same grid.
    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.masses.len(), other.masses.len());
        for (a, &b) in self.masses.iter_mut().zip(&other.masses) {
            *a = *a + b;
        }
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn into_distribution(self) -> Result<MomentumDistribution<T>> {
        let first = -self.bin_width * T::from_usize_lossy(self.half_bins);
        MomentumDistribution::from_masses(first, self.bin_width, self.masses)
    }
}

/// Anything an energy `⟨n²⟩/2` can be read from.
pub trait MomentumEnergy<T> {
    fn energy(&self) -> Result<T>;
}

impl<T: Real> MomentumEnergy<T> for MomentumDistribution<T> {
    fn energy(&self) -> Result<T> {
        if self.masses.is_empty() {
            return Err(Error::Analysis("empty distribution".into()));
        }
        let second = self
            .masses
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &m)| acc + m * self.center(i).powi(2));
        Ok(second * T::lit(0.5))
    }
}

impl<T: Real> MomentumEnergy<T> for MomentumSamples<T> {
    fn energy(&self) -> Result<T> {
        energy_of_samples(&self.momenta).map(|e| e.mean)
    }
}

impl<T: Real> MomentumEnergy<T> for [T] {
    fn energy(&self) -> Result<T> {
        energy_of_samples(self).map(|e| e.mean)
    }
}

/// `E = ⟨n²⟩/2`.
pub fn energy<T: Real, M: MomentumEnergy<T> + ?Sized>(input: &M) -> Result<T> {
    input.energy()
}

/// Mean of per-item values with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub mean: T,
    pub stderr: T,
}

/// Energy of momentum samples with the standard error of the mean.
pub fn energy_of_samples<T: Real>(momenta: &[T]) -> Result<Estimate<T>> {
    let half = T::lit(0.5);
    mean_with_error(momenta.iter().map(|&n| n * n * half))
}

/// Sample mean and standard error; fails on empty input.
pub fn mean_with_error<T: Real>(values: impl IntoIterator<Item = T>) -> Result<Estimate<T>> {
    let values: Vec<T> = values.into_iter().collect();
    if values.is_empty() {
        return Err(Error::Analysis("no samples".into()));
    }
    let n = T::from_usize_lossy(values.len());
    let mean = values.iter().fold(T::zero(), |acc, &v| acc + v) / n;
    let stderr = if values.len() > 1 {
        let var = values.iter().fold(T::zero(), |acc, &v| acc + (v - mean).powi(2)) / (n - T::one());
        (var / n).sqrt()
    } else {
        T::zero()
    };
    Ok(Estimate { mean, stderr })
}

/// Probability mass in `[−ε, ε]`, pro-rating bins cut by the window.
pub fn zero_velocity_fraction<T: Real>(dist: &MomentumDistribution<T>, epsilon: T) -> Result<T> {
    if !(epsilon > T::zero()) {
        return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
    }
    let w = dist.bin_width;
    let half = w * T::lit(0.5);
    let fraction = dist.masses.iter().enumerate().fold(T::zero(), |acc, (i, &m)| {
        let c = dist.center(i);
        let overlap = ((c + half).min(epsilon) - (c - half).max(-epsilon)).max(T::zero());
        acc + m * overlap / w
    });
    Ok(fraction.min(T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lineshape {
    Exponential,
    Gaussian,
    Undetermined,
}

impl Lineshape {
    pub fn as_str(&self) -> &'static str {
        match self {
            Lineshape::Exponential => "exponential",
            Lineshape::Gaussian => "gaussian",
            Lineshape::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for Lineshape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Lineshape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(Lineshape::Exponential),
            "gaussian" => Ok(Lineshape::Gaussian),
            "undetermined" => Ok(Lineshape::Undetermined),
            other => Err(Error::Analysis(format!("unknown lineshape `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineshapeOptions<T> {
    /// Bins below this fraction of the peak mass are left out of both fits.
    pub floor_fraction: T,
    /// A model wins only if its residual is smaller by this factor.
    pub margin: T,
    pub min_bins: usize,
}

impl<T: Real> Default for LineshapeOptions<T> {
    fn default() -> Self {
        Self {
            floor_fraction: T::lit(1e-4),
            margin: T::lit(1.2),
            min_bins: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineshapeReport<T> {
    pub class: Lineshape,
    /// Weighted mean squared residual of `ln p` against `a + b|n|`.
    pub exponential_residual: T,
    /// Weighted mean squared residual of `ln p` against `a + b n²`.
    pub gaussian_residual: T,
    /// `L` of `exp(−|n|/L)`; infinite if the fit does not decay.
    pub exponential_width: T,
    /// `σ` of `exp(−n²/2σ²)`; infinite if the fit does not decay.
    pub gaussian_width: T,
}

/// Weighted least squares of `y = a + b x`; returns `(slope, mean squared residual)`.
fn weighted_line_fit<T: Real>(points: &[(T, T, T)]) -> (T, T) {
    let sw = points.iter().fold(T::zero(), |acc, p| acc + p.2);
    let mx = points.iter().fold(T::zero(), |acc, p| acc + p.2 * p.0) / sw;
    let my = points.iter().fold(T::zero(), |acc, p| acc + p.2 * p.1) / sw;
    let sxx = points.iter().fold(T::zero(), |acc, p| acc + p.2 * (p.0 - mx).powi(2));
    let sxy = points.iter().fold(T::zero(), |acc, p| acc + p.2 * (p.0 - mx) * (p.1 - my));
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    let residual = points
        .iter()
        .fold(T::zero(), |acc, p| acc + p.2 * (p.1 - my - slope * (p.0 - mx)).powi(2))
        / sw;
    (slope, residual)
}

pub fn classify_lineshape<T: Real>(dist: &MomentumDistribution<T>) -> Result<LineshapeReport<T>> {
    classify_lineshape_with(dist, &LineshapeOptions::default())
}

/// Compares exponential and Gaussian fits of the log-density, weighting each
/// bin by its mass so that sparsely populated tail bins carry little weight.
pub fn classify_lineshape_with<T: Real>(dist: &MomentumDistribution<T>, options: &LineshapeOptions<T>) -> Result<LineshapeReport<T>> {
    let nonempty = dist.masses.iter().filter(|&&m| m > T::zero()).count();
    if nonempty < options.min_bins {
        return Err(Error::Analysis(format!(
            "lineshape needs at least {} nonempty bins, got {nonempty}",
            options.min_bins
        )));
    }
    let peak = dist.masses.iter().fold(T::zero(), |acc, &m| acc.max(m));
    let floor = peak * options.floor_fraction;
    let kept: Vec<(T, T, T)> = dist
        .masses
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > T::zero() && m >= floor)
        .map(|(i, &m)| (dist.center(i), m.ln(), m))
        .collect();

    let abs_points: Vec<(T, T, T)> = kept.iter().map(|&(n, y, w)| (n.abs(), y, w)).collect();
    let sq_points: Vec<(T, T, T)> = kept.iter().map(|&(n, y, w)| (n * n, y, w)).collect();
    let (exp_slope, exponential_residual) = weighted_line_fit(&abs_points);
    let (gauss_slope, gaussian_residual) = weighted_line_fit(&sq_points);

    // Both fits essentially exact (e.g. a flat distribution): nothing to decide.
    let resolvable = T::lit(1e-12);
    let class = if exponential_residual.max(gaussian_residual) <= resolvable {
        Lineshape::Undetermined
    } else if exponential_residual * options.margin < gaussian_residual {
        Lineshape::Exponential
    } else if gaussian_residual * options.margin < exponential_residual {
        Lineshape::Gaussian
    } else {
        Lineshape::Undetermined
    };

    let exponential_width = if exp_slope < T::zero() { -T::one() / exp_slope } else { T::infinity() };
    let gaussian_width = if gauss_slope < T::zero() {
        (-T::one() / (gauss_slope * T::lit(2.0))).sqrt()
    } else {
        T::infinity()
    };
    Ok(LineshapeReport {
        class,
        exponential_residual,
        gaussian_residual,
        exponential_width,
        gaussian_width,
    })
}

/// Strongest nonzero frequency (cycles per degree) of an energy-vs-ψ₀ curve.
/// Returns `None` when the mean-removed curve carries no spectral weight.
pub fn dominant_phase_frequency<T: Real>(psi0_deg: &[T], energies: &[T]) -> Result<Option<T>> {
    if psi0_deg.len() != energies.len() {
        return Err(Error::Analysis("phase grid and energies differ in length".into()));
    }
    let n = psi0_deg.len();
    if n < 16 {
        return Err(Error::Analysis(format!("need at least 16 phase points, got {n}")));
    }
    let spacing = psi0_deg[1] - psi0_deg[0];
    if !(spacing > T::zero()) {
        return Err(Error::Analysis("phase grid must be increasing".into()));
    }
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) * spacing.max(psi0_deg[n - 1].abs());
    if psi0_deg.windows(2).any(|w| ((w[1] - w[0]) - spacing).abs() > tol) {
        return Err(Error::Analysis("phase grid is not uniform".into()));
    }

    let mean = energies.iter().fold(T::zero(), |acc, &e| acc + e) / T::from_usize_lossy(n);
    let mut buffer: Vec<Complex<T>> = energies.iter().map(|&e| Complex::new(e - mean, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);

    let scale = energies.iter().fold(T::zero(), |acc, &e| acc.max(e.abs())).max(T::min_positive_value());
    let noise_floor = T::lit(1e-9) * scale * T::from_usize_lossy(n);
    let (best, magnitude) = (1..=n / 2)
        .map(|k| (k, buffer[k].norm()))
        .fold((0, T::zero()), |acc, item| if item.1 > acc.1 { item } else { acc });
    if best == 0 || magnitude <= noise_floor {
        return Ok(None);
    }
    Ok(Some(T::from_usize_lossy(best) / (T::from_usize_lossy(n) * spacing)))
}
