//! Physical parameters, derived coefficients, the steady-state operating
//! point and the drift/diffusion matrices of the linearized fluctuations.
//!
//! Two rotating mirrors, each forming a Laguerre-Gaussian cavity with a fixed
//! mirror, share a single magnon mode hosted by a YIG sphere. The fluctuation
//! vector always uses [`CANONICAL_ORDERING`].

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Quadrature labels of the 10-dimensional fluctuation vector.
///
/// Mirror `j` contributes its angle `phi{j}` and angular momentum `lz{j}`,
/// cavity `j` its amplitude/phase quadratures `x{j}`/`y{j}` and the magnon
/// its quadratures `xm`/`ym`.
pub const CANONICAL_ORDERING: [&str; 10] = [
    "phi1", "lz1", "phi2", "lz2", "x1", "y1", "x2", "y2", "xm", "ym",
];

/// Position of `label` in [`CANONICAL_ORDERING`].
pub fn canonical_index(label: &str) -> Option<usize> {
    CANONICAL_ORDERING.iter().position(|l| *l == label)
}

/// Relative tolerance of the bare-detuning fixed point, in units of the mirror frequency.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-6;
/// Iteration cap of the bare-detuning fixed point.
pub const FIXED_POINT_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("asymmetric drive: laser wavelengths {0:e} m and {1:e} m differ, a single magnon detuning cannot describe both cavities")]
    AsymmetricDrive(f64, f64),
    #[error("bare-detuning fixed point for cavity {cavity} did not converge after {iterations} iterations (last change {last_change:e} rad/s)")]
    FixedPointNotConverged {
        cavity: usize,
        iterations: usize,
        last_change: f64,
    },
    #[error("non-finite intermediate value for {0}")]
    NonFinite(&'static str),
    #[error("effective frequency has no real solution (radicand {0:e} rad^2/s^2)")]
    NegativeRadicand(f64),
}

/// How the user-supplied cavity detuning enters the steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetuningMode {
    /// The supplied detuning is the effective detuning directly.
    #[default]
    Effective,
    /// The supplied detuning is the bare one; the radiation-torque shift is
    /// found by fixed-point iteration.
    BareFixedPoint,
}

impl DetuningMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DetuningMode::Effective => "effective",
            DetuningMode::BareFixedPoint => "bare_fixed_point",
        }
    }
}

impl std::str::FromStr for DetuningMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "effective" => Ok(DetuningMode::Effective),
            "bare_fixed_point" => Ok(DetuningMode::BareFixedPoint),
            other => Err(format!(
                "unknown detuning mode `{other}` (expected `effective` or `bare_fixed_point`)"
            )),
        }
    }
}

/// Experimental knobs, all in SI units with frequencies in rad/s.
///
/// Two-element arrays are indexed by mirror/cavity (`[0]` is mirror 1).
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub mirror_radius: f64,
    pub oam: u32,
    pub input_power: [f64; 2],
    pub laser_wavelength: [f64; 2],
    pub finesse: f64,
    pub quality_factor: f64,
    pub cavity_length: [f64; 2],
    pub mirror_mass: [f64; 2],
    pub omega_phi: [f64; 2],
    pub gamma_m: f64,
    pub g_ma: [f64; 2],
    pub delta_a: [f64; 2],
    pub delta_m: f64,
    pub temperature: f64,
    pub detuning_mode: DetuningMode,
}

impl Default for PhysicalParams {
    /// Symmetric cavities at the reference operating point: `Δ_m = ω_φ`,
    /// `Δ_a = -ω_φ`, `T = 10 K`, 40 ng mirrors.
    fn default() -> Self {
        let omega_phi = 2.0 * PI * 10e6;
        Self {
            mirror_radius: 10e-6,
            oam: 100,
            input_power: [50e-3; 2],
            laser_wavelength: [810e-9; 2],
            finesse: 0.5e4,
            quality_factor: 20e5,
            cavity_length: [1e-3; 2],
            mirror_mass: [40e-12; 2],
            omega_phi: [omega_phi; 2],
            gamma_m: 2.0 * PI * 1e6,
            g_ma: [2.0 * PI * 3.2e6; 2],
            delta_a: [-omega_phi; 2],
            delta_m: omega_phi,
            temperature: 10.0,
            detuning_mode: DetuningMode::Effective,
        }
    }
}

impl PhysicalParams {
    /// Frequency used to normalize detunings and coupling axes (mirror 2).
    pub fn reference_omega(&self) -> f64 {
        self.omega_phi[1]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        fn positive(name: &'static str, v: f64) -> Result<(), ModelError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        }
        fn finite(name: &'static str, v: f64) -> Result<(), ModelError> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                })
            }
        }

        positive("mirror_radius", self.mirror_radius)?;
        if self.oam < 1 {
            return Err(ModelError::InvalidParameter {
                name: "oam",
                reason: "topological charge must be >= 1".into(),
            });
        }
        positive("finesse", self.finesse)?;
        positive("quality_factor", self.quality_factor)?;
        positive("gamma_m", self.gamma_m)?;
        finite("delta_m", self.delta_m)?;
        for j in 0..2 {
            positive("input_power", self.input_power[j])?;
            positive("laser_wavelength", self.laser_wavelength[j])?;
            positive("cavity_length", self.cavity_length[j])?;
            positive("mirror_mass", self.mirror_mass[j])?;
            positive("omega_phi", self.omega_phi[j])?;
            // g_ma = 0 is the decoupled-magnon limit
            if !(self.g_ma[j].is_finite() && self.g_ma[j] >= 0.0) {
                return Err(ModelError::InvalidParameter {
                    name: "g_ma",
                    reason: format!("must be finite and >= 0, got {}", self.g_ma[j]),
                });
            }
            finite("delta_a", self.delta_a[j])?;
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "temperature",
                reason: format!("must be finite and >= 0, got {}", self.temperature),
            });
        }
        Ok(())
    }
}

/// Coefficients computed from [`PhysicalParams`], per mirror/cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams {
    /// Moment of inertia `m R² / 2` (kg·m²).
    pub inertia: [f64; 2],
    /// Single-photon optorotational coupling `g_j` (rad/s).
    pub opto_coupling: [f64; 2],
    /// Drive amplitude `ε_j` (s⁻¹).
    pub drive_amplitude: [f64; 2],
    /// Cavity amplitude decay `γ_a = πc / (2 L F)` (rad/s).
    pub cavity_decay: [f64; 2],
    /// Mirror damping `γ_φ = ω_φ / Q_φ` (rad/s).
    pub mirror_damping: [f64; 2],
    /// Steady cavity amplitude `a_s`.
    pub cavity_amplitude: [Complex<f64>; 2],
    /// Magnon amplitude driven through each cavity.
    pub magnon_amplitude: [Complex<f64>; 2],
    /// Steady mirror angle `φ_s`.
    pub steady_angle: [f64; 2],
    /// Effective cavity detuning `Δ_j` (rad/s).
    pub effective_detuning: [f64; 2],
    /// Magnon-induced cavity self-energy `λ_j` (rad/s).
    pub magnon_self_energy: [Complex<f64>; 2],
    /// Enhanced coupling `G_j = √2 g_j |a_s|` (rad/s).
    pub enhanced_coupling: [f64; 2],
    /// Thermal occupation of each mirror.
    pub occupation: [f64; 2],
    /// Rotation frequency used for the thermal occupation (rad/s).
    pub omega_eff: [f64; 2],
    /// Iterations spent in the bare-detuning fixed point (0 in effective mode).
    pub fixed_point_iterations: usize,
}

/// Bose-Einstein occupation `1 / (exp(ħω / k_B T) - 1)`, zero at `T = 0`.
pub fn mean_occupation(temperature: f64, omega: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (K_B * temperature);
    1.0 / x.exp_m1()
}

/// Laser angular frequency `2πc/λ`.
pub fn laser_frequency(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}

fn steady_amplitude(
    drive: f64,
    detuning: f64,
    decay: f64,
    self_energy: Complex<f64>,
) -> Complex<f64> {
    Complex::new(drive, 0.0) / (Complex::new(decay, detuning) + self_energy)
}

fn check_finite(name: &'static str, v: f64) -> Result<f64, ModelError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::NonFinite(name))
    }
}

pub fn derive_params(p: &PhysicalParams) -> Result<DerivedParams, ModelError> {
    p.validate()?;
    let [lambda_1, lambda_2] = p.laser_wavelength;
    if lambda_1 != lambda_2 {
        return Err(ModelError::AsymmetricDrive(lambda_1, lambda_2));
    }

    let magnon_response = Complex::new(p.gamma_m, p.delta_m);
    let mut d = DerivedParams {
        inertia: [0.0; 2],
        opto_coupling: [0.0; 2],
        drive_amplitude: [0.0; 2],
        cavity_decay: [0.0; 2],
        mirror_damping: [0.0; 2],
        cavity_amplitude: [Complex::new(0.0, 0.0); 2],
        magnon_amplitude: [Complex::new(0.0, 0.0); 2],
        steady_angle: [0.0; 2],
        effective_detuning: [0.0; 2],
        magnon_self_energy: [Complex::new(0.0, 0.0); 2],
        enhanced_coupling: [0.0; 2],
        occupation: [0.0; 2],
        omega_eff: [0.0; 2],
        fixed_point_iterations: 0,
    };

    for j in 0..2 {
        let omega_phi = p.omega_phi[j];
        let inertia = p.mirror_mass[j] * p.mirror_radius * p.mirror_radius / 2.0;
        let g = SPEED_OF_LIGHT * p.oam as f64 / p.cavity_length[j]
            * (HBAR / (inertia * omega_phi)).sqrt();
        let gamma_a = PI * SPEED_OF_LIGHT / (2.0 * p.cavity_length[j] * p.finesse);
        let eps = (2.0 * p.input_power[j] * gamma_a / (HBAR * laser_frequency(p.laser_wavelength[j])))
            .sqrt();
        let self_energy = Complex::new(p.g_ma[j] * p.g_ma[j], 0.0) / magnon_response;

        let angle_of = |a: Complex<f64>| g * a.norm_sqr() / omega_phi;
        let detuning = match p.detuning_mode {
            DetuningMode::Effective => p.delta_a[j],
            DetuningMode::BareFixedPoint => {
                let mut delta = p.delta_a[j];
                let mut converged = false;
                let mut change = f64::INFINITY;
                let mut iterations = 0;
                while iterations < FIXED_POINT_MAX_ITERATIONS {
                    iterations += 1;
                    let a = steady_amplitude(eps, delta, gamma_a, self_energy);
                    let next = p.delta_a[j] - g * angle_of(a);
                    change = (next - delta).abs();
                    delta = check_finite("effective detuning", next)?;
                    if change < FIXED_POINT_TOLERANCE * omega_phi {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(ModelError::FixedPointNotConverged {
                        cavity: j + 1,
                        iterations,
                        last_change: change,
                    });
                }
                d.fixed_point_iterations = d.fixed_point_iterations.max(iterations);
                delta
            }
        };

        let a_s = steady_amplitude(eps, detuning, gamma_a, self_energy);
        let m_s = -Complex::i() * p.g_ma[j] * a_s / magnon_response;
        let omega_eff = omega_phi;

        d.inertia[j] = inertia;
        d.opto_coupling[j] = check_finite("optorotational coupling", g)?;
        d.drive_amplitude[j] = check_finite("drive amplitude", eps)?;
        d.cavity_decay[j] = gamma_a;
        d.mirror_damping[j] = omega_phi / p.quality_factor;
        d.cavity_amplitude[j] = a_s;
        d.magnon_amplitude[j] = m_s;
        d.steady_angle[j] = check_finite("steady angle", angle_of(a_s))?;
        d.effective_detuning[j] = detuning;
        d.magnon_self_energy[j] = self_energy;
        d.enhanced_coupling[j] =
            check_finite("enhanced coupling", 2f64.sqrt() * g * a_s.norm())?;
        d.occupation[j] = check_finite("thermal occupation", mean_occupation(p.temperature, omega_eff))?;
        d.omega_eff[j] = omega_eff;
    }
    Ok(d)
}

/// Effective rotation frequency of mirror `mirror` (0 or 1) including the
/// optical-spring shift at probe frequency `omega`.
///
/// `xi_phi` and `input_power` are supplied by the caller; the default
/// pipeline never calls this and uses `ω_eff = ω_φ`.
pub fn effective_frequency(
    p: &PhysicalParams,
    d: &DerivedParams,
    mirror: usize,
    omega: f64,
    xi_phi: f64,
    input_power: f64,
) -> Result<f64, ModelError> {
    let j = mirror;
    let omega_phi = p.omega_phi[j];
    let gamma_half = d.cavity_decay[j] / 2.0;
    let hw2 = gamma_half * gamma_half;
    let delta = p.delta_a[j];
    let omega_cavity = laser_frequency(p.laser_wavelength[j]) + delta;

    let prefactor = 2.0 * xi_phi * xi_phi * d.cavity_decay[j] * input_power
        / (d.inertia[j] * omega_cavity);
    let detuning_factor = delta / (delta + hw2);
    let response = (hw2 - (omega * omega - delta * delta))
        / ((hw2 + (omega - delta).powi(2)) * (hw2 + (omega + delta).powi(2)));
    let shift = prefactor * detuning_factor * response;
    // the shift vanishes identically without coupling or drive, whatever the
    // detuning factor evaluates to
    let shift = if xi_phi == 0.0 || input_power == 0.0 {
        0.0
    } else {
        check_finite("effective frequency shift", shift)?
    };

    let radicand = omega_phi * omega_phi - shift;
    if radicand < 0.0 {
        return Err(ModelError::NegativeRadicand(radicand));
    }
    Ok(radicand.sqrt())
}

/// Drift and diffusion matrices in [`CANONICAL_ORDERING`].
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub ordering: [&'static str; 10],
}

pub fn build_system_matrices(d: &DerivedParams, p: &PhysicalParams) -> SystemMatrices {
    let ix = |label: &str| canonical_index(label).expect("label in canonical ordering");
    let n = CANONICAL_ORDERING.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut diffusion = DMatrix::<f64>::zeros(n, n);

    let (xm, ym) = (ix("xm"), ix("ym"));
    for j in 0..2 {
        let k = j + 1;
        let phi = ix(&format!("phi{k}"));
        let lz = ix(&format!("lz{k}"));
        let x = ix(&format!("x{k}"));
        let y = ix(&format!("y{k}"));

        let omega = p.omega_phi[j];
        let gamma_phi = d.mirror_damping[j];
        let coupling = d.enhanced_coupling[j];
        let detuning = d.effective_detuning[j];
        let gamma_a = d.cavity_decay[j];
        let g_ma = p.g_ma[j];

        a[(phi, lz)] = omega;

        a[(lz, phi)] = -omega;
        a[(lz, lz)] = -gamma_phi;
        a[(lz, x)] = coupling;

        a[(x, x)] = -gamma_a;
        a[(x, y)] = detuning;
        a[(x, ym)] = g_ma;

        a[(y, y)] = -gamma_a;
        a[(y, x)] = -detuning;
        a[(y, xm)] = -g_ma;
        a[(y, phi)] = coupling;

        a[(xm, y)] += g_ma;
        a[(ym, x)] -= g_ma;

        diffusion[(lz, lz)] = gamma_phi * (2.0 * d.occupation[j] + 1.0);
        diffusion[(x, x)] = gamma_a;
        diffusion[(y, y)] = gamma_a;
    }
    a[(xm, xm)] = -p.gamma_m;
    a[(xm, ym)] = p.delta_m;
    a[(ym, ym)] = -p.gamma_m;
    a[(ym, xm)] = -p.delta_m;
    diffusion[(xm, xm)] = p.gamma_m;
    diffusion[(ym, ym)] = p.gamma_m;

    SystemMatrices {
        drift: a,
        diffusion,
        ordering: CANONICAL_ORDERING,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn inertia_of_forty_nanogram_mirror() {
        let d = derive_params(&PhysicalParams::default()).unwrap();
        // 40e-12 kg * (10e-6 m)^2 / 2
        assert!(rel(d.inertia[0], 2.0e-21) < 1e-12);
        assert_eq!(d.inertia[0], d.inertia[1]);
    }

    #[test]
    fn mirror_damping_from_quality_factor() {
        let d = derive_params(&PhysicalParams::default()).unwrap();
        // 2π·10 MHz / 2e6
        assert!((d.mirror_damping[0] - 31.415_926_535_897_93).abs() < 1e-9);
    }

    #[test]
    fn decoupled_magnon_has_no_self_energy() {
        let p = PhysicalParams {
            g_ma: [0.0; 2],
            ..Default::default()
        };
        let d = derive_params(&p).unwrap();
        for j in 0..2 {
            assert_eq!(d.magnon_self_energy[j], Complex::new(0.0, 0.0));
            assert_eq!(d.magnon_amplitude[j], Complex::new(0.0, 0.0));
        }
    }

    #[test]
    fn occupation_limits() {
        assert_eq!(mean_occupation(0.0, 1e7), 0.0);
        // ħω / k_B T = ln 2  =>  n = 1
        let omega = 2.0 * PI * 10e6;
        let t = HBAR * omega / (K_B * 2f64.ln());
        assert!((mean_occupation(t, omega) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn occupation_matches_high_temperature_expansion() {
        let omega = 2.0 * PI * 10e6;
        let n = mean_occupation(10.0, omega);
        let classical = K_B * 10.0 / (HBAR * omega) - 0.5;
        assert!(rel(n, classical) < 1e-3);
    }

    #[test]
    fn enhanced_coupling_invariant() {
        let d = derive_params(&PhysicalParams::default()).unwrap();
        for j in 0..2 {
            let expect = 2f64.sqrt() * d.opto_coupling[j] * d.cavity_amplitude[j].norm();
            assert_eq!(d.enhanced_coupling[j], expect);
        }
    }

    #[test]
    fn zero_temperature_has_no_thermal_phonons() {
        let p = PhysicalParams {
            temperature: 0.0,
            ..Default::default()
        };
        let d = derive_params(&p).unwrap();
        assert_eq!(d.occupation, [0.0, 0.0]);
    }

    #[test]
    fn rejects_asymmetric_drive() {
        let mut p = PhysicalParams::default();
        p.laser_wavelength[1] = 1064e-9;
        assert!(matches!(
            derive_params(&p),
            Err(ModelError::AsymmetricDrive(_, _))
        ));
    }

    #[test]
    fn rejects_invalid_parameters() {
        let cases: Vec<Box<dyn Fn(&mut PhysicalParams)>> = vec![
            Box::new(|p| p.oam = 0),
            Box::new(|p| p.mirror_mass[0] = 0.0),
            Box::new(|p| p.temperature = -1.0),
            Box::new(|p| p.finesse = f64::NAN),
            Box::new(|p| p.g_ma[1] = -1.0),
            Box::new(|p| p.delta_m = f64::INFINITY),
        ];
        for mutate in cases {
            let mut p = PhysicalParams::default();
            mutate(&mut p);
            assert!(matches!(
                derive_params(&p),
                Err(ModelError::InvalidParameter { .. })
            ));
        }
    }

    #[test]
    fn effective_mode_uses_supplied_detuning() {
        let p = PhysicalParams::default();
        let d = derive_params(&p).unwrap();
        assert_eq!(d.effective_detuning, p.delta_a);
        assert_eq!(d.fixed_point_iterations, 0);
    }

    #[test]
    fn bare_fixed_point_satisfies_self_consistency() {
        // a weak drive keeps the radiation-torque shift small and contractive
        let p = PhysicalParams {
            input_power: [1e-6; 2],
            delta_a: [2.0 * PI * 10e6; 2],
            detuning_mode: DetuningMode::BareFixedPoint,
            ..Default::default()
        };
        let d = derive_params(&p).unwrap();
        assert!(d.fixed_point_iterations > 1);
        for j in 0..2 {
            let shifted = p.delta_a[j] - d.opto_coupling[j] * d.steady_angle[j];
            assert!((shifted - d.effective_detuning[j]).abs() < 1e-5 * p.omega_phi[j]);
        }
    }

    #[test]
    fn bare_fixed_point_reports_non_convergence() {
        // at full power the shift is comparable to the linewidth and the plain
        // iteration oscillates
        let p = PhysicalParams {
            input_power: [5.0; 2],
            detuning_mode: DetuningMode::BareFixedPoint,
            ..Default::default()
        };
        match derive_params(&p) {
            Err(ModelError::FixedPointNotConverged { iterations, .. }) => {
                assert_eq!(iterations, FIXED_POINT_MAX_ITERATIONS)
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn effective_frequency_without_coupling_or_drive() {
        let p = PhysicalParams::default();
        let d = derive_params(&p).unwrap();
        let w = p.omega_phi[0];
        assert_eq!(effective_frequency(&p, &d, 0, w, 0.0, 1e-3).unwrap(), w);
        assert_eq!(effective_frequency(&p, &d, 0, w, 1e-20, 0.0).unwrap(), w);
    }

    #[test]
    fn effective_frequency_shift_is_linear_in_power() {
        let p = PhysicalParams {
            delta_a: [2.0 * PI * 5e6; 2],
            ..Default::default()
        };
        let d = derive_params(&p).unwrap();
        let w = p.omega_phi[0];
        let xi = 1e9;
        let shift = |power: f64| {
            let we = effective_frequency(&p, &d, 0, w, xi, power).unwrap();
            we * we - w * w
        };
        let (p1, p2) = (1e-3, 2e-3);
        let slope_low = (shift(p1) - shift(0.0)) / p1;
        let slope_high = (shift(p2) - shift(p1)) / (p2 - p1);
        assert!(slope_low != 0.0);
        assert!(rel(slope_high, slope_low) < 1e-2);
    }

    #[test]
    fn effective_frequency_reports_negative_radicand() {
        let p = PhysicalParams {
            delta_a: [2.0 * PI * 5e6; 2],
            ..Default::default()
        };
        let d = derive_params(&p).unwrap();
        let w = p.omega_phi[0];
        let sign_probe = effective_frequency(&p, &d, 0, w, 1e9, 1e-3).unwrap();
        // push the shift in whichever direction lowers the frequency
        let power = if sign_probe < w { 1e12 } else { -1e12 };
        assert!(matches!(
            effective_frequency(&p, &d, 0, w, 1e9, power),
            Err(ModelError::NegativeRadicand(_))
        ));
    }

    #[test]
    fn diffusion_diagonal_layout() {
        let p = PhysicalParams::default();
        let d = derive_params(&p).unwrap();
        let s = build_system_matrices(&d, &p);
        let expect = [
            0.0,
            d.mirror_damping[0] * (2.0 * d.occupation[0] + 1.0),
            0.0,
            d.mirror_damping[1] * (2.0 * d.occupation[1] + 1.0),
            d.cavity_decay[0],
            d.cavity_decay[0],
            d.cavity_decay[1],
            d.cavity_decay[1],
            p.gamma_m,
            p.gamma_m,
        ];
        for i in 0..10 {
            for k in 0..10 {
                let want = if i == k { expect[i] } else { 0.0 };
                assert_eq!(s.diffusion[(i, k)], want);
            }
        }
    }

    #[test]
    fn coupling_enters_cavity_phase_row() {
        let p = PhysicalParams::default();
        let d = derive_params(&p).unwrap();
        let s = build_system_matrices(&d, &p);
        let y1 = canonical_index("y1").unwrap();
        let phi1 = canonical_index("phi1").unwrap();
        assert_eq!(s.drift[(y1, phi1)], d.enhanced_coupling[0]);
    }

    #[test]
    fn build_is_bitwise_deterministic() {
        let p = PhysicalParams::default();
        let d = derive_params(&p).unwrap();
        let a = build_system_matrices(&d, &p);
        let b = build_system_matrices(&d.clone(), &p.clone());
        assert_eq!(a, b);
    }
}
