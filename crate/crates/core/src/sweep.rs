//! Single-point pipeline and 1-D/2-D parameter grids.
//!
//! Every grid point runs independently through parameter derivation, matrix
//! assembly, the stability check, the Lyapunov solve and the mirror-pair
//! measures. Rows come back in row-major order (last axis fastest) no
//! matter how many workers evaluated them.

use rayon::prelude::*;
use thiserror::Error;

use crate::lyapunov::{self, CovarianceMatrix, LyapunovError, StabilityReport};
use crate::measures::{self, CorrelationSet, MeasureError, TwoModeCM};
use crate::model::{self, DerivedParams, ModelError, PhysicalParams, SystemMatrices};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub covariance: CovarianceMatrix,
    pub residual: f64,
    pub asymmetry: f64,
    pub mirrors: TwoModeCM,
    pub correlations: CorrelationSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointEvaluation {
    pub derived: DerivedParams,
    pub system: SystemMatrices,
    pub stability: StabilityReport,
    /// `None` when the drift matrix is unstable.
    pub steady: Option<SteadyState>,
}

pub fn evaluate_point(p: &PhysicalParams) -> Result<PointEvaluation, PipelineError> {
    let derived = model::derive_params(p)?;
    let system = model::build_system_matrices(&derived, p);
    let stability = lyapunov::check_stability(&system.drift)?;
    let steady = if stability.stable {
        let (covariance, solution) = lyapunov::steady_state(&system)?;
        let mirrors = measures::extract_mirrors(&covariance)?;
        let correlations = measures::correlations(&mirrors)?;
        Some(SteadyState {
            covariance,
            residual: solution.residual,
            asymmetry: solution.asymmetry,
            mirrors,
            correlations,
        })
    } else {
        None
    };
    Ok(PointEvaluation {
        derived,
        system,
        stability,
        steady,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("unknown figure preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid axis `{axis}`: {reason}")]
    InvalidAxis { axis: String, reason: String },
    #[error("a sweep needs one or two axes, got {0}")]
    AxisCount(usize),
    #[error("duplicate axis `{0}`")]
    DuplicateAxis(String),
    #[error("no measures requested")]
    NoMeasures,
    #[error("invalid base parameters: {0}")]
    Base(#[from] ModelError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Quantities a grid axis may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisParam {
    /// `Δ_m / ω_φ`.
    DeltaMOverWphi,
    /// `Δ_a / ω_φ`, both cavities.
    DeltaAOverWphi,
    /// Temperature in kelvin.
    TemperatureK,
    /// Mass of both mirrors in ng.
    MassNg,
    /// Topological charge (integer values).
    Oam,
    /// `g_ma` in units of `G₀`, the enhanced coupling of mirror 2 at `g_ma = 0`.
    GmaOverG0,
    /// `ω_φ1 / ω_φ2` with `ω_φ2` held fixed.
    WphiRatio,
}

impl AxisParam {
    pub const ALL: [AxisParam; 7] = [
        AxisParam::DeltaMOverWphi,
        AxisParam::DeltaAOverWphi,
        AxisParam::TemperatureK,
        AxisParam::MassNg,
        AxisParam::Oam,
        AxisParam::GmaOverG0,
        AxisParam::WphiRatio,
    ];

    /// CSV column name, also accepted by [`str::parse`].
    pub fn column(self) -> &'static str {
        match self {
            AxisParam::DeltaMOverWphi => "delta_m_over_wphi",
            AxisParam::DeltaAOverWphi => "delta_a_over_wphi",
            AxisParam::TemperatureK => "T_K",
            AxisParam::MassNg => "mass_ng",
            AxisParam::Oam => "oam_l",
            AxisParam::GmaOverG0 => "gma_over_g0",
            AxisParam::WphiRatio => "wphi1_over_wphi2",
        }
    }

    /// Axis label for plots.
    pub fn label(self) -> &'static str {
        match self {
            AxisParam::DeltaMOverWphi => "Δm/ωφ",
            AxisParam::DeltaAOverWphi => "Δa/ωφ",
            AxisParam::TemperatureK => "T (K)",
            AxisParam::MassNg => "m (ng)",
            AxisParam::Oam => "l",
            AxisParam::GmaOverG0 => "gma/G",
            AxisParam::WphiRatio => "ωφ1/ωφ2",
        }
    }

    fn validate_value(self, v: f64) -> Result<(), String> {
        match self {
            AxisParam::TemperatureK if v < 0.0 => Err("temperature must be >= 0".into()),
            AxisParam::MassNg | AxisParam::WphiRatio if v <= 0.0 => {
                Err("values must be > 0".into())
            }
            AxisParam::GmaOverG0 if v < 0.0 => Err("coupling must be >= 0".into()),
            AxisParam::Oam if v < 1.0 || (v - v.round()).abs() > 1e-9 => {
                Err("topological charge values must be integers >= 1".into())
            }
            _ => Ok(()),
        }
    }

    fn apply(self, p: &mut PhysicalParams, v: f64) {
        let w = p.reference_omega();
        match self {
            AxisParam::DeltaMOverWphi => p.delta_m = v * w,
            AxisParam::DeltaAOverWphi => p.delta_a = [v * w; 2],
            AxisParam::TemperatureK => p.temperature = v,
            AxisParam::MassNg => p.mirror_mass = [v * 1e-12; 2],
            AxisParam::Oam => p.oam = v.round() as u32,
            AxisParam::WphiRatio => p.omega_phi[0] = v * p.omega_phi[1],
            // resolved in `resolve_point`, after every other axis
            AxisParam::GmaOverG0 => {}
        }
    }
}

impl std::str::FromStr for AxisParam {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AxisParam::ALL
            .into_iter()
            .find(|a| a.column() == s)
            .ok_or_else(|| SweepError::UnknownParameter(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    E,
    S12,
    S21,
    Ds,
    Ggd,
}

impl Measure {
    pub const ALL: [Measure; 5] = [Measure::E, Measure::S12, Measure::S21, Measure::Ds, Measure::Ggd];

    pub fn column(self) -> &'static str {
        match self {
            Measure::E => "E",
            Measure::S12 => "S12",
            Measure::S21 => "S21",
            Measure::Ds => "Ds",
            Measure::Ggd => "GGD",
        }
    }

    pub fn value(self, c: &CorrelationSet) -> f64 {
        match self {
            Measure::E => c.log_negativity,
            Measure::S12 => c.steering_12,
            Measure::S21 => c.steering_21,
            Measure::Ds => c.steering_asymmetry,
            Measure::Ggd => c.ggd,
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.column().eq_ignore_ascii_case(s))
            .ok_or_else(|| SweepError::UnknownMeasure(s.to_string()))
    }
}

/// Linear grid axis. `count == 1` is allowed only when `start == stop`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: AxisParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(param: AxisParam, start: f64, stop: f64, count: usize) -> Self {
        Self {
            param,
            start,
            stop,
            count,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.stop
                } else {
                    self.start + span * k as f64 / last
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<(), SweepError> {
        let bad = |reason: String| SweepError::InvalidAxis {
            axis: self.param.column().to_string(),
            reason,
        };
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(bad("range must be finite".into()));
        }
        if self.count == 0 || (self.count == 1 && self.start != self.stop) {
            return Err(bad(format!("needs at least 2 points, got {}", self.count)));
        }
        for v in [self.start, self.stop] {
            self.param.validate_value(v).map_err(bad)?;
        }
        if self.param == AxisParam::Oam {
            for v in self.values() {
                self.param.validate_value(v).map_err(bad)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: PhysicalParams,
    pub axes: Vec<Axis>,
    pub measures: Vec<Measure>,
    pub preset: Option<String>,
    /// Free-form notes copied into the output metadata.
    pub notes: Vec<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(SweepError::AxisCount(self.axes.len()));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return Err(SweepError::DuplicateAxis(self.axes[0].param.column().into()));
        }
        if self.measures.is_empty() {
            return Err(SweepError::NoMeasures);
        }
        for a in &self.axes {
            a.validate()?;
        }
        self.base.validate()?;
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn has_gma_axis(&self) -> bool {
        self.axes.iter().any(|a| a.param == AxisParam::GmaOverG0)
    }

    /// Grid coordinates, row-major with the last axis fastest.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut out = vec![Vec::new()];
        for axis_values in &values {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis_values.iter().map(move |v| {
                        let mut row = prefix.clone();
                        row.push(*v);
                        row
                    })
                })
                .collect();
        }
        out
    }
}

/// Parameters of one grid point. Returns the point and, when the grid
/// varies `g_ma`, the reference coupling `G₀`.
pub fn resolve_point(
    spec: &SweepSpec,
    coords: &[f64],
) -> Result<(PhysicalParams, Option<f64>), ModelError> {
    let mut p = spec.base.clone();
    for (axis, &v) in spec.axes.iter().zip(coords) {
        axis.param.apply(&mut p, v);
    }
    let mut g0 = None;
    if let Some(k) = spec.axes.iter().position(|a| a.param == AxisParam::GmaOverG0) {
        let decoupled = PhysicalParams {
            g_ma: [0.0; 2],
            ..p.clone()
        };
        let reference = model::derive_params(&decoupled)?.enhanced_coupling[1];
        p.g_ma = [coords[k] * reference; 2];
        g0 = Some(reference);
    }
    Ok((p, g0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Stable(Box<CorrelationSet>),
    Unstable { spectral_abscissa: f64 },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub coords: Vec<f64>,
    /// `g_ma / G` at this point (mirror 2), for grids that vary `g_ma`.
    pub gma_over_g: Option<f64>,
    pub outcome: RowOutcome,
}

impl SweepRow {
    pub fn is_stable(&self) -> bool {
        matches!(self.outcome, RowOutcome::Stable(_))
    }

    pub fn correlations(&self) -> Option<&CorrelationSet> {
        match &self.outcome {
            RowOutcome::Stable(c) => Some(c),
            _ => None,
        }
    }

    pub fn measure(&self, m: Measure) -> Option<f64> {
        self.correlations().map(|c| m.value(c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub metadata: Vec<(String, String)>,
}

fn evaluate_row(spec: &SweepSpec, coords: Vec<f64>) -> SweepRow {
    let (params, g0) = match resolve_point(spec, &coords) {
        Ok(x) => x,
        Err(e) => {
            return SweepRow {
                coords,
                gma_over_g: None,
                outcome: RowOutcome::Failed(e.to_string()),
            }
        }
    };
    match evaluate_point(&params) {
        Ok(eval) => {
            let gma_over_g = g0.map(|_| params.g_ma[1] / eval.derived.enhanced_coupling[1]);
            let outcome = match eval.steady {
                Some(s) => RowOutcome::Stable(Box::new(s.correlations)),
                None => RowOutcome::Unstable {
                    spectral_abscissa: eval.stability.spectral_abscissa,
                },
            };
            SweepRow {
                coords,
                gma_over_g,
                outcome,
            }
        }
        Err(e) => SweepRow {
            coords,
            gma_over_g: None,
            outcome: RowOutcome::Failed(e.to_string()),
        },
    }
}

/// Evaluates every grid point on `jobs` worker threads (`0` lets the pool decide).
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let grid = spec.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        grid.into_par_iter()
            .map(|coords| evaluate_row(spec, coords))
            .collect()
    });
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
        metadata: metadata(spec),
    })
}

/// Resolved parameters and conventions recorded with every output.
pub fn metadata(spec: &SweepSpec) -> Vec<(String, String)> {
    let p = &spec.base;
    let mut m: Vec<(String, String)> = vec![
        ("code_version".into(), env!("CARGO_PKG_VERSION").into()),
        (
            "preset".into(),
            spec.preset.clone().unwrap_or_else(|| "none".into()),
        ),
        (
            "quadrature_convention".into(),
            "X=(a+a^dag)/sqrt(2), vacuum variance 1/2".into(),
        ),
        ("cavity_decay_formula".into(), "gamma_a = pi*c/(2*L*F)".into()),
        ("detuning_mode".into(), p.detuning_mode.as_str().into()),
        ("omega_eff".into(), "omega_eff = omega_phi".into()),
        (
            "normalization".into(),
            "frequencies normalized by omega_phi2".into(),
        ),
    ];
    let pair = |v: [f64; 2]| format!("{:e},{:e}", v[0], v[1]);
    m.extend([
        ("mirror_radius_m".into(), format!("{:e}", p.mirror_radius)),
        ("oam_l".into(), p.oam.to_string()),
        ("input_power_w".into(), pair(p.input_power)),
        ("laser_wavelength_m".into(), pair(p.laser_wavelength)),
        ("finesse".into(), format!("{:e}", p.finesse)),
        ("quality_factor".into(), format!("{:e}", p.quality_factor)),
        ("cavity_length_m".into(), pair(p.cavity_length)),
        ("mirror_mass_kg".into(), pair(p.mirror_mass)),
        ("omega_phi_rad_s".into(), pair(p.omega_phi)),
        ("gamma_m_rad_s".into(), format!("{:e}", p.gamma_m)),
        ("g_ma_rad_s".into(), pair(p.g_ma)),
        ("delta_a_rad_s".into(), pair(p.delta_a)),
        ("delta_m_rad_s".into(), format!("{:e}", p.delta_m)),
        ("temperature_k".into(), format!("{:e}", p.temperature)),
    ]);
    for (k, a) in spec.axes.iter().enumerate() {
        m.push((
            format!("axis{}", k + 1),
            format!("{} linear {:e}..{:e} n={}", a.param.column(), a.start, a.stop, a.count),
        ));
    }
    m.push((
        "measures".into(),
        spec.measures
            .iter()
            .map(|x| x.column())
            .collect::<Vec<_>>()
            .join(","),
    ));
    for note in &spec.notes {
        m.push(("note".into(), note.clone()));
    }
    m
}

pub const PRESET_IDS: [&str; 10] = [
    "fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "fig3c", "fig3d", "fig4a", "fig4b",
];

/// Default 1-D resolution.
pub const POINTS_1D: usize = 101;
/// Default per-axis resolution of 2-D grids.
pub const POINTS_2D: usize = 61;

pub fn figure_preset(id: &str) -> Result<SweepSpec, SweepError> {
    use AxisParam::*;
    use Measure::*;

    let base = PhysicalParams::default();
    let w = base.reference_omega();
    let inherited_detuning =
        "delta_a = -omega_phi inherited from the fig2 panel set (not stated for this panel)".to_string();
    let spec = |base: PhysicalParams, axes: Vec<Axis>, measures: Vec<Measure>, notes: Vec<String>| {
        SweepSpec {
            base,
            axes,
            measures,
            preset: Some(id.to_string()),
            notes,
        }
    };
    let dm_axis = Axis::new(DeltaMOverWphi, 0.0, 2.0, POINTS_2D);
    let temperature_axis = Axis::new(TemperatureK, 0.0, 400.0, POINTS_1D);
    let mass_series = Axis::new(MassNg, 40.0, 60.0, 3);
    let gma_note = "gma_over_g0 scales g_ma by G at g_ma=0; the realized g_ma/G is reported in gma_over_g".to_string();
    let asymmetric = |mass_ng: f64| PhysicalParams {
        mirror_mass: [mass_ng * 1e-12; 2],
        omega_phi: [0.7 * w, w],
        ..base.clone()
    };

    let s = match id {
        "fig2a" => spec(
            base.clone(),
            vec![dm_axis, Axis::new(DeltaAOverWphi, -2.0, 2.0, POINTS_2D)],
            vec![E],
            vec![],
        ),
        "fig2b" => spec(
            base.clone(),
            vec![dm_axis, Axis::new(TemperatureK, 0.0, 400.0, POINTS_2D)],
            vec![E],
            vec![inherited_detuning],
        ),
        "fig2c" => spec(
            base.clone(),
            vec![dm_axis, Axis::new(MassNg, 10.0, 100.0, POINTS_2D)],
            vec![E],
            vec![inherited_detuning],
        ),
        "fig2d" => spec(
            base.clone(),
            vec![dm_axis, Axis::new(Oam, 20.0, 140.0, POINTS_2D)],
            vec![E],
            vec![inherited_detuning],
        ),
        "fig3a" => spec(
            base.clone(),
            vec![temperature_axis, mass_series],
            vec![E],
            vec![inherited_detuning],
        ),
        "fig3b" => spec(
            PhysicalParams {
                temperature: 0.4,
                ..base.clone()
            },
            vec![Axis::new(GmaOverG0, 0.0, 1.5, POINTS_1D), mass_series],
            vec![E],
            vec![inherited_detuning, gma_note],
        ),
        "fig3c" => spec(
            PhysicalParams {
                temperature: 0.01,
                ..base.clone()
            },
            vec![Axis::new(WphiRatio, 0.5, 1.5, POINTS_1D)],
            vec![E, S12, S21, Ds],
            vec![inherited_detuning, "reference line: ln 2".into()],
        ),
        "fig3d" => spec(
            PhysicalParams {
                delta_a: [-1.07 * w; 2],
                mirror_mass: [60e-12; 2],
                temperature: 10.0,
                ..base.clone()
            },
            vec![dm_axis, Axis::new(GmaOverG0, 0.0, 1.5, POINTS_2D)],
            vec![E],
            vec![gma_note],
        ),
        "fig4a" => spec(
            asymmetric(60.0),
            vec![temperature_axis],
            vec![E, S12, S21, Ggd],
            vec![inherited_detuning],
        ),
        "fig4b" => spec(
            asymmetric(50.0),
            vec![temperature_axis],
            vec![E, S12, S21, Ggd],
            vec![inherited_detuning],
        ),
        other => return Err(SweepError::UnknownPreset(other.to_string())),
    };
    Ok(s)
}
