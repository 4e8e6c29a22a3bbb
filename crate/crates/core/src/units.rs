//! Caesium D2 constants and the conversions between laboratory and scaled units.
//!
//! Scaled time is `τ = t / T₁`, scaled position `φ = 2 k_L x` and scaled momentum
//! `ρ = (k̄ / 2ħk_L) p`, so one two-photon recoil `2ħk_L` equals `k̄`.

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J / K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of ¹³³Cs (kg).
pub const CESIUM_MASS: f64 = 132.905_451_961 * ATOMIC_MASS_UNIT;
/// Wavelength of the kicking laser near the Cs D2 line (m).
pub const KICK_WAVELENGTH: f64 = 852.347_275_82e-9;

/// Laser wavenumber `k_L = 2π/λ` (1/m).
pub fn laser_wavenumber() -> f64 {
    std::f64::consts::TAU / KICK_WAVELENGTH
}

/// Effective Planck constant `k̄ = 4ħk_L²T₁/m` for a primary period given in microseconds.
pub fn kbar_from_period_us(period_us: f64) -> f64 {
    let k = laser_wavenumber();
    4.0 * HBAR * k * k * period_us * 1e-6 / CESIUM_MASS
}

/// Thermal momentum spread `σ_n = √(m k_B T) / (2ħk_L)` in two-photon recoils.
pub fn thermal_spread_recoils(temperature_uk: f64) -> f64 {
    (CESIUM_MASS * BOLTZMANN * temperature_uk.max(0.0) * 1e-6).sqrt() / (2.0 * HBAR * laser_wavenumber())
}

/// Converts a laboratory duration in nanoseconds to scaled time for period `T₁` in microseconds.
pub fn ns_to_scaled(duration_ns: f64, period_us: f64) -> f64 {
    duration_ns * 1e-3 / period_us
}
