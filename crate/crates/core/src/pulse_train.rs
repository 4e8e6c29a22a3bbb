//! Two-frequency pulse trains and their resolution into a single piecewise envelope.
//!
//! Train 1 has pulses centred at `τ = 0, 1, …, N−1`; train 2 at `α₀ + r·m` for
//! `m = 0, …, M−1`. Overlapping pulses add pointwise and merge into one
//! resultant pulse. Each resultant pulse carries a uniform grid whose cells
//! hold the exact cell-averaged rate, so the grid integrates to the pulse area
//! with no quadrature error.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fraction of `k_max` below which a shaped pulse is treated as off.
pub const DEFAULT_ON_THRESHOLD: f64 = 0.10;
/// Minimum number of grid cells in a pulse that does not overlap anything.
pub const MIN_STEPS_PER_PULSE: usize = 16;

const BISECTION_ITERATIONS: usize = 200;

/// Parameters of the empirical erf pulse shape, all in scaled time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShapeParams<T> {
    /// δt₁: a line from 0 to 100% over this time matches the rising slope at half maximum.
    pub rise_time: T,
    /// δt₂: the same for the falling edge.
    pub fall_time: T,
    /// t₂ − t₁.
    pub fwhm: T,
    pub on_threshold_fraction: T,
}

impl<T: Real> PulseShapeParams<T> {
    pub fn new(rise_time: T, fall_time: T, fwhm: T, on_threshold_fraction: T) -> Result<Self> {
        let params = Self {
            rise_time,
            fall_time,
            fwhm,
            on_threshold_fraction,
        };
        params.validate()?;
        Ok(params)
    }

    /// Shape measured at the atoms for a 480 ns command pulse: δt₁ = 104 ns,
    /// δt₂ = 121 ns, t₂ − t₁ = 396 ns, expressed for a primary period in µs.
    pub fn measured(period_us: f64) -> Self {
        let scaled = |ns: f64| T::lit(crate::units::ns_to_scaled(ns, period_us));
        Self {
            rise_time: scaled(104.0),
            fall_time: scaled(121.0),
            fwhm: scaled(396.0),
            on_threshold_fraction: T::lit(DEFAULT_ON_THRESHOLD),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("rise_time", self.rise_time), ("fall_time", self.fall_time), ("fwhm", self.fwhm)] {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(Error::param(name, format!("must be positive and finite, got {value}")));
            }
        }
        let f = self.on_threshold_fraction;
        if !(f > T::zero() && f < T::lit(0.5)) {
            return Err(Error::param("on_threshold_fraction", format!("must lie in (0, 0.5), got {f}")));
        }
        Ok(())
    }
}

/// Temporal profile of one pulse, positioned relative to its centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape<T> {
    /// Rectangular pulse of the given width.
    Square { width: T },
    /// `½[erf((t−t₁)√π/δt₁) − erf((t−t₂)√π/δt₂)]` with `t₁,₂ = ∓fwhm/2`, clamped below the on-threshold.
    Erf(PulseShapeParams<T>),
}

impl<T: Real> PulseShape<T> {
    pub fn square(width: T) -> Result<Self> {
        let shape = PulseShape::Square { width };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PulseShape::Square { width } => {
                if *width > T::zero() && width.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("width", format!("must be positive and finite, got {width}")))
                }
            }
            PulseShape::Erf(params) => params.validate(),
        }
    }

    /// Unclamped height for `k_max = 1`.
    pub fn unit_profile(&self, t_rel: T) -> T {
        match self {
            PulseShape::Square { width } => {
                let half = *width / (T::one() + T::one());
                if t_rel >= -half && t_rel < half {
                    T::one()
                } else {
                    T::zero()
                }
            }
            PulseShape::Erf(p) => {
                let half = T::lit(0.5);
                let root_pi = T::PI().sqrt();
                let t1 = -p.fwhm * half;
                let t2 = p.fwhm * half;
                half * (((t_rel - t1) * root_pi / p.rise_time).erf() - ((t_rel - t2) * root_pi / p.fall_time).erf())
            }
        }
    }

    fn threshold(&self) -> T {
        match self {
            PulseShape::Square { .. } => T::zero(),
            PulseShape::Erf(p) => p.on_threshold_fraction,
        }
    }

    /// Antiderivative of the unclamped unit profile.
    fn unit_primitive(&self, t: T) -> T {
        match self {
            PulseShape::Square { width } => {
                let half = *width / (T::one() + T::one());
                t.max(-half).min(half)
            }
            PulseShape::Erf(p) => {
                let half = T::lit(0.5);
                // ∫ erf(x√π/δ) dx = x erf(x√π/δ) + (δ/π) exp(−π x²/δ²)
                let g = |x: T, delta: T| {
                    let a = x * T::PI().sqrt() / delta;
                    x * a.erf() + delta / T::PI() * (-a * a).exp()
                };
                half * (g(t + p.fwhm * half, p.rise_time) - g(t - p.fwhm * half, p.fall_time))
            }
        }
    }

    /// Interval `[t_on, t_off)` where the clamped pulse is nonzero.
    pub fn support(&self) -> Result<(T, T)> {
        self.validate()?;
        match self {
            PulseShape::Square { width } => {
                let half = *width / (T::one() + T::one());
                Ok((-half, half))
            }
            PulseShape::Erf(p) => {
                let f = p.on_threshold_fraction;
                if self.unit_profile(T::zero()) < f {
                    return Err(Error::param("fwhm", "pulse never reaches the on-threshold"));
                }
                let reach = p.fwhm + T::lit(8.0) * p.rise_time.max(p.fall_time);
                let on = self.crossing(-reach, T::zero(), f);
                let off = self.crossing(reach, T::zero(), f);
                Ok((on, off))
            }
        }
    }

    /// Bisection for `unit_profile = level` between `outside` (below) and `inside` (above).
    fn crossing(&self, mut outside: T, mut inside: T, level: T) -> T {
        let mut step = outside - inside;
        while self.unit_profile(outside) >= level {
            outside = outside + step;
            step = step + step;
        }
        for _ in 0..BISECTION_ITERATIONS {
            let mid = (outside + inside) * T::lit(0.5);
            if mid == outside || mid == inside {
                break;
            }
            if self.unit_profile(mid) >= level {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    }

    /// Area of the clamped unit pulse.
    pub fn unit_area(&self) -> Result<T> {
        let (on, off) = self.support()?;
        Ok(self.unit_primitive(off) - self.unit_primitive(on))
    }

    fn geometry(&self) -> Result<ShapeGeometry<T>> {
        let (on, off) = self.support()?;
        let area = self.unit_primitive(off) - self.unit_primitive(on);
        if !(area > T::zero()) {
            return Err(Error::param("shape", "pulse has zero area"));
        }
        Ok(ShapeGeometry {
            shape: *self,
            on,
            off,
            unit_area: area,
        })
    }
}

/// Height of a clamped pulse of peak parameter `k_max` at time `t_rel` from its centre.
pub fn pulse_envelope<T: Real>(t_rel: T, k_max: T, shape: &PulseShape<T>) -> T {
    let unit = shape.unit_profile(t_rel);
    if unit > T::zero() && unit >= shape.threshold() {
        k_max * unit
    } else {
        T::zero()
    }
}

/// `k_max` such that the clamped pulse has area `kappa`.
pub fn normalize_height<T: Real>(kappa: T, shape: &PulseShape<T>) -> Result<T> {
    if !(kappa >= T::zero()) || !kappa.is_finite() {
        return Err(Error::param("kappa", format!("must be non-negative and finite, got {kappa}")));
    }
    let geometry = shape.geometry()?;
    Ok(kappa / geometry.unit_area)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ShapeGeometry<T> {
    shape: PulseShape<T>,
    on: T,
    off: T,
    unit_area: T,
}

impl<T: Real> ShapeGeometry<T> {
    fn width(&self) -> T {
        self.off - self.on
    }

    /// Integral of the clamped unit pulse over `[a, b]` (relative times).
    fn integral(&self, a: T, b: T) -> T {
        let clip = |t: T| t.max(self.on).min(self.off);
        (self.shape.unit_primitive(clip(b)) - self.shape.unit_primitive(clip(a))).max(T::zero())
    }
}

/// The two pulse trains of one experimental run.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFreqTrainSpec<T> {
    /// `r = T₂ / T₁`.
    pub ratio: T,
    /// Delay of train 2 in units of `T₁`; `ψ₀ = 360° α₀`.
    pub alpha0: T,
    /// Pulses in train 1 (N).
    pub n_first: usize,
    /// Pulses in train 2 (M).
    pub n_second: usize,
    pub kappa1: T,
    pub kappa2: T,
    pub shape: PulseShape<T>,
    geometry: ShapeGeometry<T>,
}

impl<T: Real> TwoFreqTrainSpec<T> {
    pub fn n_total(&self) -> usize {
        self.n_first + self.n_second
    }

    /// `ψ₀` in degrees.
    pub fn initial_phase_deg(&self) -> T {
        self.alpha0 * T::lit(360.0)
    }

    /// Pulse centres with their kick strengths, sorted by time.
    pub fn pulses(&self) -> Vec<(T, T)> {
        let mut pulses: Vec<(T, T)> = (0..self.n_first)
            .map(|n| (T::from_usize_lossy(n), self.kappa1))
            .chain((0..self.n_second).map(|m| (self.alpha0 + self.ratio * T::from_usize_lossy(m), self.kappa2)))
            .collect();
        pulses.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite pulse times"));
        pulses
    }
}

fn train_length<T: Real>(n_first: usize, n_second: usize, ratio: T, alpha0: T) -> T {
    let first = if n_first > 0 { T::from_usize_lossy(n_first - 1) } else { T::zero() };
    let second = if n_second > 0 {
        alpha0 + ratio * T::from_usize_lossy(n_second - 1)
    } else {
        T::zero()
    };
    first.max(second)
}

/// Splits `n_total` kicks between the trains so that the longer train is as
/// short as possible; ties go to the larger `N`.
pub fn build_train_spec<T: Real>(
    ratio: T,
    alpha0: T,
    n_total: usize,
    kappa1: T,
    kappa2: T,
    shape: PulseShape<T>,
) -> Result<TwoFreqTrainSpec<T>> {
    if !(ratio > T::zero()) || !ratio.is_finite() {
        return Err(Error::param("ratio", format!("must be positive, got {ratio}")));
    }
    if n_total == 0 {
        return Err(Error::param("n_total", "must be at least 1"));
    }
    if !(alpha0 >= T::zero() && alpha0 < T::one()) {
        return Err(Error::param("alpha0", format!("must lie in [0, 1), got {alpha0}")));
    }
    for (name, kappa) in [("kappa1", kappa1), ("kappa2", kappa2)] {
        if !(kappa >= T::zero()) || !kappa.is_finite() {
            return Err(Error::param(name, format!("must be non-negative, got {kappa}")));
        }
    }
    let geometry = shape.geometry()?;

    let tie = T::lit(1e-12);
    let mut best: Option<(T, usize)> = None;
    for n_first in (0..=n_total).rev() {
        let length = train_length(n_first, n_total - n_first, ratio, alpha0);
        match best {
            Some((shortest, _)) if length >= shortest - tie * shortest.max(T::one()) => {}
            _ => best = Some((length, n_first)),
        }
    }
    let (_, n_first) = best.expect("at least one split");
    Ok(TwoFreqTrainSpec {
        ratio,
        alpha0,
        n_first,
        n_second: n_total - n_first,
        kappa1,
        kappa2,
        shape,
        geometry,
    })
}

/// A single train of `n` pulses of strength `kappa` at unit spacing.
pub fn single_train_spec<T: Real>(n: usize, kappa: T, shape: PulseShape<T>) -> Result<TwoFreqTrainSpec<T>> {
    let mut spec = build_train_spec(T::one(), T::zero(), n, kappa, T::zero(), shape)?;
    spec.n_first = n;
    spec.n_second = 0;
    Ok(spec)
}

/// One pulse after overlaps have been merged, with its integration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultantPulse<T> {
    pub start: T,
    /// Uniform cell width.
    pub step: T,
    /// Cell-averaged rate `k` in each cell.
    pub rates: Vec<T>,
    /// Areas of the individual pulses merged into this one.
    pub constituents: Vec<T>,
}

impl<T: Real> ResultantPulse<T> {
    pub fn n_steps(&self) -> usize {
        self.rates.len()
    }

    pub fn end(&self) -> T {
        self.start + self.step * T::from_usize_lossy(self.rates.len())
    }

    pub fn area(&self) -> T {
        self.rates.iter().fold(T::zero(), |acc, &k| acc + k) * self.step
    }

    /// `(τ, k)` at each cell midpoint.
    pub fn samples(&self) -> impl Iterator<Item = (T, T)> + '_ {
        let half = T::lit(0.5);
        self.rates
            .iter()
            .enumerate()
            .map(move |(i, &k)| (self.start + self.step * (T::from_usize_lossy(i) + half), k))
    }
}

/// Time-ordered, disjoint resultant pulses; free flight everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedTimeline<T> {
    pub pulses: Vec<ResultantPulse<T>>,
    /// Cell width used for a pulse that overlaps nothing.
    pub nominal_step: T,
    /// Area of the strongest single pulse; the unit for per-pulse emission probability.
    pub reference_area: T,
}

impl<T: Real> ResolvedTimeline<T> {
    /// `N_res`.
    pub fn n_resultant(&self) -> usize {
        self.pulses.len()
    }

    /// Free-flight durations between consecutive resultant pulses.
    pub fn gaps(&self) -> Vec<T> {
        self.pulses.windows(2).map(|w| w[1].start - w[0].end()).collect()
    }

    pub fn total_area(&self) -> T {
        self.pulses.iter().fold(T::zero(), |acc, p| acc + p.area())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# units: tau=scaled-time(t/T1) k=scaled-rate\ntau,k\n");
        for pulse in &self.pulses {
            for (tau, k) in pulse.samples() {
                let _ = writeln!(out, "{},{}", tau.to_f64_lossy(), k.to_f64_lossy());
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Resolves overlaps with the default minimum of 16 cells per pulse.
pub fn resolve_timeline<T: Real>(spec: &TwoFreqTrainSpec<T>) -> ResolvedTimeline<T> {
    resolve_timeline_with_steps(spec, MIN_STEPS_PER_PULSE)
}

pub fn resolve_timeline_with_steps<T: Real>(spec: &TwoFreqTrainSpec<T>, min_steps: usize) -> ResolvedTimeline<T> {
    let min_steps = min_steps.max(1);
    let geometry = spec.geometry;
    let nominal_step = geometry.width() / T::from_usize_lossy(min_steps);

    // (centre, k_max, kappa) of every pulse that actually carries light.
    let lit: Vec<(T, T, T)> = spec
        .pulses()
        .into_iter()
        .filter(|&(_, kappa)| kappa > T::zero())
        .map(|(centre, kappa)| (centre, kappa / geometry.unit_area, kappa))
        .collect();
    let reference_area = spec.kappa1.max(spec.kappa2);

    let mut groups: Vec<Vec<(T, T, T)>> = Vec::new();
    let mut group_end = T::neg_infinity();
    for pulse in lit {
        let start = pulse.0 + geometry.on;
        match groups.last_mut() {
            Some(group) if start <= group_end => group.push(pulse),
            _ => groups.push(vec![pulse]),
        }
        group_end = group_end.max(pulse.0 + geometry.off);
    }

    let pulses = groups
        .into_iter()
        .map(|group| {
            let start = group[0].0 + geometry.on;
            let end = group.iter().fold(T::neg_infinity(), |acc, p| acc.max(p.0 + geometry.off));
            let length = end - start;
            let cells = (length / nominal_step * (T::one() - T::lit(1e-12))).ceil().to_usize().unwrap_or(min_steps);
            let cells = cells.max(min_steps);
            let step = length / T::from_usize_lossy(cells);
            let rates = (0..cells)
                .map(|i| {
                    let a = start + step * T::from_usize_lossy(i);
                    let b = if i + 1 == cells { end } else { a + step };
                    let area = group
                        .iter()
                        .fold(T::zero(), |acc, &(centre, k_max, _)| acc + k_max * geometry.integral(a - centre, b - centre));
                    area / step
                })
                .collect();
            ResultantPulse {
                start,
                step,
                rates,
                constituents: group.iter().map(|p| p.2).collect(),
            }
        })
        .collect();

    ResolvedTimeline {
        pulses,
        nominal_step,
        reference_area,
    }
}
