//! Two-mode Gaussian correlation measures.
//!
//! Quadratures follow `X = (a + a†)/√2`, so the vacuum has variance 1/2 and
//! a physical covariance matrix has every symplectic eigenvalue ≥ 1/2.

// `!(x > 0.0)` is kept on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use thiserror::Error;

use crate::lyapunov::CovarianceMatrix;

/// Roundoff slack below zero absorbed when clamping measures.
pub const CLAMP_SLACK: f64 = 1e-12;
/// Off-standard-form tolerance for the GGD cross block, relative to `αβ`.
pub const GGD_FORM_TOLERANCE: f64 = 1e-6;
/// Relative slack on the symplectic discriminants.
const DISCRIMINANT_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("unknown mode label `{0}`")]
    UnknownLabel(String),
    #[error("modes must differ, got `{0}` twice")]
    SameMode(String),
    #[error("covariance matrix must be square with even dimension, got {0}x{1}")]
    BadShape(usize, usize),
    #[error("non-finite entry in covariance matrix")]
    NonFinite,
    #[error("covariance matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("unphysical covariance matrix: {0}")]
    Unphysical(String),
    #[error("degenerate marginal: det of {0} block is {1:e}")]
    DegenerateMarginal(&'static str, f64),
    #[error("eigenvalue solver did not converge")]
    EigenNonConvergence,
}

/// One bosonic mode of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Mirror1,
    Mirror2,
    Cavity1,
    Cavity2,
    Magnon,
}

impl Mode {
    /// Position/momentum labels in the canonical ordering.
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            Mode::Mirror1 => ["phi1", "lz1"],
            Mode::Mirror2 => ["phi2", "lz2"],
            Mode::Cavity1 => ["x1", "y1"],
            Mode::Cavity2 => ["x2", "y2"],
            Mode::Magnon => ["xm", "ym"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Mirror1 => "mirror1",
            Mode::Mirror2 => "mirror2",
            Mode::Cavity1 => "cavity1",
            Mode::Cavity2 => "cavity2",
            Mode::Magnon => "magnon",
        }
    }
}

impl FromStr for Mode {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mirror1" | "m1" => Ok(Mode::Mirror1),
            "mirror2" | "m2" => Ok(Mode::Mirror2),
            "cavity1" | "a1" => Ok(Mode::Cavity1),
            "cavity2" | "a2" => Ok(Mode::Cavity2),
            "magnon" | "m" => Ok(Mode::Magnon),
            other => Err(MeasureError::UnknownLabel(other.to_string())),
        }
    }
}

/// Covariance matrix of a mode pair, `[[V, Θ], [Θᵀ, F]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCM {
    pub v: Matrix2<f64>,
    pub f: Matrix2<f64>,
    pub theta: Matrix2<f64>,
}

impl TwoModeCM {
    pub fn vacuum() -> Self {
        Self {
            v: Matrix2::identity() * 0.5,
            f: Matrix2::identity() * 0.5,
            theta: Matrix2::zeros(),
        }
    }

    /// Two-mode squeezed vacuum with squeezing `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let c = (2.0 * r).cosh() / 2.0;
        let s = (2.0 * r).sinh() / 2.0;
        Self {
            v: Matrix2::identity() * c,
            f: Matrix2::identity() * c,
            theta: Matrix2::new(s, 0.0, 0.0, -s),
        }
    }

    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        Self {
            v: m.fixed_view::<2, 2>(0, 0).into_owned(),
            f: m.fixed_view::<2, 2>(2, 2).into_owned(),
            theta: m.fixed_view::<2, 2>(0, 2).into_owned(),
        }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.v);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.f);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.theta);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.theta.transpose());
        m
    }

    pub fn det(&self) -> f64 {
        self.to_matrix().determinant()
    }

    /// Invariant `det V + det F - 2 det Θ` under partial transposition.
    pub fn pt_invariant(&self) -> f64 {
        self.v.determinant() + self.f.determinant() - 2.0 * self.theta.determinant()
    }

    /// Same state with the modes exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            v: self.f,
            f: self.v,
            theta: self.theta.transpose(),
        }
    }
}

pub fn extract_two_mode(
    cm: &CovarianceMatrix,
    mode_a: Mode,
    mode_b: Mode,
) -> Result<TwoModeCM, MeasureError> {
    if mode_a == mode_b {
        return Err(MeasureError::SameMode(mode_a.name().into()));
    }
    let lookup = |mode: Mode| -> Result<[usize; 2], MeasureError> {
        let [q, p] = mode.labels();
        let idx = |l: &str| {
            cm.index_of(l)
                .ok_or_else(|| MeasureError::UnknownLabel(l.to_string()))
        };
        Ok([idx(q)?, idx(p)?])
    };
    let ia = lookup(mode_a)?;
    let ib = lookup(mode_b)?;
    let block = |rows: [usize; 2], cols: [usize; 2]| {
        Matrix2::from_fn(|r, c| cm.matrix[(rows[r], cols[c])])
    };
    Ok(TwoModeCM {
        v: block(ia, ia),
        f: block(ib, ib),
        theta: block(ia, ib),
    })
}

/// Mirror pair, the default extraction.
pub fn extract_mirrors(cm: &CovarianceMatrix) -> Result<TwoModeCM, MeasureError> {
    extract_two_mode(cm, Mode::Mirror1, Mode::Mirror2)
}

fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn pair_up(mut moduli: Vec<f64>) -> Vec<f64> {
    moduli.sort_by(f64::total_cmp);
    moduli.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Symplectic eigenvalues of a `2n × 2n` covariance matrix in ascending
/// order. With `partial_transpose` the momentum of the last mode is
/// sign-flipped first.
///
/// Positive-definite inputs go through the symmetric problem
/// `Lᵀ Ωᵀ M Ω L` (with `M = L Lᵀ`), whose eigenvalues are the squared
/// symplectic eigenvalues; anything else falls back to the moduli of the
/// eigenvalues of `Ω M`.
pub fn symplectic_spectrum(
    m: &DMatrix<f64>,
    partial_transpose: bool,
) -> Result<Vec<f64>, MeasureError> {
    let (r, c) = m.shape();
    if r != c || r % 2 != 0 || r == 0 {
        return Err(MeasureError::BadShape(r, c));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(MeasureError::NonFinite);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax() / scale;
    if asym > 1e-9 {
        return Err(MeasureError::NotSymmetric(asym));
    }
    let mut m = (m + m.transpose()) * 0.5;
    if partial_transpose {
        let p = r - 1;
        for k in 0..r {
            if k != p {
                m[(p, k)] = -m[(p, k)];
                m[(k, p)] = -m[(k, p)];
            }
        }
    }
    let omega = symplectic_form(r / 2);

    if let Some(chol) = m.clone().cholesky() {
        let l = chol.l();
        let s = l.transpose() * omega.transpose() * &m * &omega * &l;
        let s = (&s + s.transpose()) * 0.5;
        let eig = s.symmetric_eigenvalues();
        return Ok(pair_up(eig.iter().map(|v| v.max(0.0).sqrt()).collect()));
    }

    let schur = nalgebra::Schur::try_new(&omega * &m, 1e-14, 10_000)
        .ok_or(MeasureError::EigenNonConvergence)?;
    Ok(pair_up(
        schur.complex_eigenvalues().iter().map(|z| z.norm()).collect(),
    ))
}

/// Which discriminant the closed-form partial-transpose eigenvalue uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discriminant {
    /// `ũ² - 4 det σ`, the two-mode result in the vacuum-1/2 convention.
    #[default]
    Standard,
    /// `ũ² - det σ`. Wrong by a factor 4; kept as a negative control for
    /// the self-test battery.
    MissingFactorFour,
}

/// Smallest partial-transpose symplectic eigenvalue from the 2×2 block invariants.
pub fn nu_minus_closed_form(cm: &TwoModeCM, form: Discriminant) -> Result<f64, MeasureError> {
    let u = cm.pt_invariant();
    let det = cm.det();
    let factor = match form {
        Discriminant::Standard => 4.0,
        Discriminant::MissingFactorFour => 1.0,
    };
    let mut disc = u * u - factor * det;
    if disc < 0.0 {
        if disc < -DISCRIMINANT_SLACK * u * u {
            return Err(MeasureError::Unphysical(format!(
                "negative discriminant {disc:e} in the partial-transpose spectrum"
            )));
        }
        disc = 0.0;
    }
    // (u - √disc)/2 rewritten to avoid cancellation for strongly squeezed states
    let denom = 2.0 * (u + disc.sqrt());
    let nu2 = if denom > 0.0 { factor * det / denom } else { 0.0 };
    if nu2 < 0.0 {
        return Err(MeasureError::Unphysical(format!(
            "negative squared symplectic eigenvalue {nu2:e}"
        )));
    }
    Ok(nu2.sqrt())
}

fn log_negativity_from_nu(nu: f64) -> f64 {
    let e = -(2.0 * nu).ln();
    if e > CLAMP_SLACK {
        e
    } else {
        0.0
    }
}

/// `max(0, -ln 2ν̃⁻)` using the closed-form `ν̃⁻`.
pub fn log_negativity(cm: &TwoModeCM) -> Result<f64, MeasureError> {
    log_negativity_with(cm, Discriminant::Standard)
}

pub fn log_negativity_with(cm: &TwoModeCM, form: Discriminant) -> Result<f64, MeasureError> {
    Ok(log_negativity_from_nu(nu_minus_closed_form(cm, form)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steering {
    /// Mode 1 steers mode 2.
    pub s12: f64,
    /// Mode 2 steers mode 1.
    pub s21: f64,
    /// `|s12 - s21|`.
    pub asymmetry: f64,
}

fn clamp_measure(x: f64) -> f64 {
    if x > CLAMP_SLACK {
        x
    } else {
        0.0
    }
}

fn marginal_dets(cm: &TwoModeCM) -> Result<(f64, f64, f64), MeasureError> {
    let dv = cm.v.determinant();
    let df = cm.f.determinant();
    let det = cm.det();
    if !(dv > 0.0) {
        return Err(MeasureError::DegenerateMarginal("V", dv));
    }
    if !(df > 0.0) {
        return Err(MeasureError::DegenerateMarginal("F", df));
    }
    if !(det > 0.0) {
        return Err(MeasureError::Unphysical(format!(
            "non-positive determinant {det:e}"
        )));
    }
    Ok((dv, df, det))
}

/// Gaussian steerability in both directions, from `½ ln(det V / 4 det σ)`.
pub fn gaussian_steering(cm: &TwoModeCM) -> Result<Steering, MeasureError> {
    let (dv, df, det) = marginal_dets(cm)?;
    let s12 = clamp_measure(0.5 * (dv / (4.0 * det)).ln());
    let s21 = clamp_measure(0.5 * (df / (4.0 * det)).ln());
    Ok(Steering {
        s12,
        s21,
        asymmetry: (s12 - s21).abs(),
    })
}

/// Unclamped `-½ ln(4 det(F - Θᵀ V⁻¹ Θ))`, the Schur-complement route for
/// steering from mode 1 to mode 2.
pub fn steering_schur_raw(cm: &TwoModeCM) -> Result<f64, MeasureError> {
    let vinv = cm
        .v
        .try_inverse()
        .ok_or(MeasureError::DegenerateMarginal("V", cm.v.determinant()))?;
    let conditional = cm.f - cm.theta.transpose() * vinv * cm.theta;
    let dc = conditional.determinant();
    if !(dc > 0.0) {
        return Err(MeasureError::Unphysical(format!(
            "non-positive conditional determinant {dc:e}"
        )));
    }
    Ok(-0.5 * (4.0 * dc).ln())
}

/// Unclamped `½ ln(det V / 4 det σ)`.
pub fn steering_ratio_raw(cm: &TwoModeCM) -> Result<f64, MeasureError> {
    let (dv, _, det) = marginal_dets(cm)?;
    Ok(0.5 * (dv / (4.0 * det)).ln())
}

/// Standard-form parameters: `V → α·1`, `F → β·1`, `Θ → diag(c₊, c₋)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardForm {
    pub alpha: f64,
    pub beta: f64,
    /// Larger correlation, `c₊ ≥ |c₋|`.
    pub c_plus: f64,
    pub c_minus: f64,
}

/// Inverse square root of a 2×2 symmetric positive matrix with unit determinant.
/// The result also has unit determinant, so it is a local symplectic map.
fn inverse_sqrt_unimodular(n: &Matrix2<f64>) -> Matrix2<f64> {
    // √N = (N + 1) / √(tr N + 2) when det N = 1
    let root = (n + Matrix2::identity()) / (n.trace() + 2.0).sqrt();
    Matrix2::new(root[(1, 1)], -root[(0, 1)], -root[(1, 0)], root[(0, 0)])
}

/// Brings `V` and `F` to multiples of the identity with local symplectic
/// maps, then reads `c₊ ≥ |c₋|` off the singular values of the transformed
/// cross block, with the sign of `det Θ` on `c₋`.
pub fn standard_form(cm: &TwoModeCM) -> Result<StandardForm, MeasureError> {
    let dv = cm.v.determinant();
    let df = cm.f.determinant();
    if !(dv > 0.0) {
        return Err(MeasureError::DegenerateMarginal("V", dv));
    }
    if !(df > 0.0) {
        return Err(MeasureError::DegenerateMarginal("F", df));
    }
    let alpha = dv.sqrt();
    let beta = df.sqrt();
    let s1 = inverse_sqrt_unimodular(&(cm.v / alpha));
    let s2 = inverse_sqrt_unimodular(&(cm.f / beta));
    let t = s1 * cm.theta * s2.transpose();

    // singular values of [[a, b], [c, d]]
    let (a, b, c, d) = (t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]);
    let q = (a + d).hypot(b - c);
    let r = (a - d).hypot(b + c);
    let c_plus = (q + r) / 2.0;
    let small = (q - r).abs() / 2.0;
    let c_minus = if cm.theta.determinant() < 0.0 {
        -small
    } else {
        small
    };
    Ok(StandardForm {
        alpha,
        beta,
        c_plus,
        c_minus,
    })
}

/// Closed-form Gaussian geometric discord for `V = α·1`, `F = β·1`, `Θ = diag(c, -c)`.
pub fn ggd_closed_form(alpha: f64, beta: f64, c_sq: f64) -> Result<f64, MeasureError> {
    let ab = alpha * beta;
    let radicand = 4.0 * ab - 3.0 * c_sq;
    if radicand < 0.0 {
        return Err(MeasureError::Unphysical(format!(
            "GGD radicand 4αβ - 3c² = {radicand:e} is negative"
        )));
    }
    let denom = 2.0 * radicand.sqrt() + 2.0 * ab.sqrt();
    Ok(1.0 / (4.0 * (ab - c_sq)) - 9.0 / (denom * denom))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ggd {
    pub value: f64,
    /// Set when the cross block is not of the form `diag(c, -c)`.
    pub warning: Option<String>,
}

/// Gaussian geometric discord with `c² = |c₊ c₋| = |det Θ|`.
pub fn ggd(cm: &TwoModeCM) -> Result<Ggd, MeasureError> {
    let sf = standard_form(cm)?;
    ggd_from_standard_form(&sf)
}

pub fn ggd_from_standard_form(sf: &StandardForm) -> Result<Ggd, MeasureError> {
    let ab = sf.alpha * sf.beta;
    let c_sq = (sf.c_plus * sf.c_minus).abs();
    let offset = (sf.c_plus + sf.c_minus).abs();
    let warning = (offset > GGD_FORM_TOLERANCE * ab).then(|| {
        format!(
            "cross block not in diag(c,-c) form: c+ = {:e}, c- = {:e}",
            sf.c_plus, sf.c_minus
        )
    });
    let raw = ggd_closed_form(sf.alpha, sf.beta, c_sq)?;
    if raw < -CLAMP_SLACK {
        return Err(MeasureError::Unphysical(format!(
            "negative geometric discord {raw:e}"
        )));
    }
    Ok(Ggd {
        value: raw.max(0.0),
        warning,
    })
}

/// All measures for one mode pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    pub log_negativity: f64,
    pub steering_12: f64,
    pub steering_21: f64,
    pub steering_asymmetry: f64,
    pub ggd: f64,
    pub ggd_warning: Option<String>,
    /// Smallest partial-transpose symplectic eigenvalue.
    pub nu_min_pt: f64,
    /// Smallest symplectic eigenvalue of the state itself.
    pub nu_min: f64,
    pub standard_form: StandardForm,
}

pub fn correlations(cm: &TwoModeCM) -> Result<CorrelationSet, MeasureError> {
    let nu_min_pt = nu_minus_closed_form(cm, Discriminant::Standard)?;
    let m = DMatrix::from_column_slice(4, 4, cm.to_matrix().as_slice());
    let nu_min = symplectic_spectrum(&m, false)?[0];
    let steering = gaussian_steering(cm)?;
    let sf = standard_form(cm)?;
    let g = ggd_from_standard_form(&sf)?;
    Ok(CorrelationSet {
        log_negativity: log_negativity_from_nu(nu_min_pt),
        steering_12: steering.s12,
        steering_21: steering.s21,
        steering_asymmetry: steering.asymmetry,
        ggd: g.value,
        ggd_warning: g.warning,
        nu_min_pt,
        nu_min,
        standard_form: sf,
    })
}
