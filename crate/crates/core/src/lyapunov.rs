//! Stability of the drift matrix and the steady-state covariance
//! `A Y + Y Aᵀ + D = 0`.
//!
//! The direct solver vectorizes the equation into `(I ⊗ A + A ⊗ I) vec(Y) = -vec(D)`
//! and solves the dense `n² × n²` system with partial pivoting. At `n = 10`
//! that is a 100 × 100 solve. The fixed-step integrators of
//! `dY/dt = A Y + Y Aᵀ + D` exist as an independent reference.

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

use crate::model::SystemMatrices;

/// Relative asymmetry of a raw solution above which it is flagged.
pub const ASYMMETRY_DIAGNOSTIC: f64 = 1e-8;

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITERATIONS: usize = 10_000;
const DIVERGENCE_BOUND: f64 = 1e100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("matrix shapes do not match: drift {drift:?}, diffusion {diffusion:?}")]
    Shape {
        drift: (usize, usize),
        diffusion: (usize, usize),
    },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("eigenvalue solver did not converge")]
    EigenNonConvergence,
    #[error("drift matrix is not stable (spectral abscissa {0:e})")]
    Unstable(f64),
    #[error("vectorized Lyapunov system is singular (marginal stability)")]
    Singular,
    #[error("step size {dt:e} violates dt < 0.1/|abscissa| = {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("integration diverged at step {0}")]
    Divergence(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    /// Largest real part over the spectrum of `A`.
    pub spectral_abscissa: f64,
    /// Eigenvalues sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex<f64>>,
}

fn ensure_finite(name: &'static str, m: &DMatrix<f64>) -> Result<(), LyapunovError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LyapunovError::NonFinite(name))
    }
}

/// Eigenvalue form of the Routh-Hurwitz test: stable iff every eigenvalue
/// has a negative real part.
pub fn check_stability(a: &DMatrix<f64>) -> Result<StabilityReport, LyapunovError> {
    if !a.is_square() {
        return Err(LyapunovError::Shape {
            drift: a.shape(),
            diffusion: a.shape(),
        });
    }
    ensure_finite("drift matrix", a)?;
    let schur = nalgebra::Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITERATIONS)
        .ok_or(LyapunovError::EigenNonConvergence)?;
    let mut eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    if eigenvalues.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(LyapunovError::EigenNonConvergence);
    }
    eigenvalues.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let spectral_abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        stable: spectral_abscissa < 0.0,
        spectral_abscissa,
        eigenvalues,
    })
}

/// Assembles `K = I ⊗ A + A ⊗ I` and `rhs = -vec(D)` (column-major `vec`).
pub fn kronecker_system(a: &DMatrix<f64>, d: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.nrows();
    let mut k = DMatrix::<f64>::zeros(n * n, n * n);
    // vec(A Y)   -> (I ⊗ A) vec(Y),  vec(Y Aᵀ) -> (A ⊗ I) vec(Y)
    for col in 0..n {
        for i in 0..n {
            let row = col * n + i;
            for l in 0..n {
                k[(row, col * n + l)] += a[(i, l)];
                k[(row, l * n + i)] += a[(col, l)];
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, d.iter().map(|v| -v));
    (k, rhs)
}

/// Solves an assembled vectorized system, with one step of iterative refinement.
pub fn solve_kronecker_system(
    k: &DMatrix<f64>,
    rhs: &DVector<f64>,
    n: usize,
) -> Result<DMatrix<f64>, LyapunovError> {
    let lu = k.clone().lu();
    let mut x = lu.solve(rhs).ok_or(LyapunovError::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LyapunovError::Singular);
    }
    let residual = rhs - k * &x;
    if let Some(correction) = lu.solve(&residual) {
        if correction.iter().all(|v| v.is_finite()) {
            x += correction;
        }
    }
    Ok(DMatrix::from_column_slice(n, n, x.as_slice()))
}

/// `max |A Y + Y Aᵀ + D|`.
pub fn lyapunov_residual(a: &DMatrix<f64>, y: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let r = a * y + y * a.transpose() + d;
    r.amax()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSolution {
    /// Symmetrized solution.
    pub y: DMatrix<f64>,
    /// `max |A Y + Y Aᵀ + D|` of the symmetrized solution.
    pub residual: f64,
    /// `max |Y - Yᵀ| / max |Y|` before symmetrization.
    pub asymmetry: f64,
}

impl LyapunovSolution {
    pub fn asymmetry_flagged(&self) -> bool {
        self.asymmetry > ASYMMETRY_DIAGNOSTIC
    }
}

fn check_shapes(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<(), LyapunovError> {
    if !a.is_square() || a.shape() != d.shape() {
        return Err(LyapunovError::Shape {
            drift: a.shape(),
            diffusion: d.shape(),
        });
    }
    ensure_finite("drift matrix", a)?;
    ensure_finite("diffusion matrix", d)
}

pub fn solve_lyapunov(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> Result<LyapunovSolution, LyapunovError> {
    check_shapes(a, d)?;
    let report = check_stability(a)?;
    if !report.stable {
        return Err(LyapunovError::Unstable(report.spectral_abscissa));
    }
    let (k, rhs) = kronecker_system(a, d);
    let raw = solve_kronecker_system(&k, &rhs, a.nrows())?;

    let scale = raw.amax().max(f64::MIN_POSITIVE);
    let asymmetry = (&raw - raw.transpose()).amax() / scale;
    let y = (&raw + raw.transpose()) * 0.5;
    let residual = lyapunov_residual(a, &y, d);
    Ok(LyapunovSolution {
        y,
        residual,
        asymmetry,
    })
}

/// Steady-state covariance matrix labelled by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: DMatrix<f64>,
    pub ordering: Vec<String>,
}

impl CovarianceMatrix {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.ordering.iter().position(|l| l == label)
    }
}

/// Stability check and Lyapunov solve for a built system.
pub fn steady_state(
    sys: &SystemMatrices,
) -> Result<(CovarianceMatrix, LyapunovSolution), LyapunovError> {
    let solution = solve_lyapunov(&sys.drift, &sys.diffusion)?;
    let cm = CovarianceMatrix {
        matrix: solution.y.clone(),
        ordering: sys.ordering.iter().map(|s| s.to_string()).collect(),
    };
    Ok((cm, solution))
}

fn step_limit(a: &DMatrix<f64>, dt: f64) -> Result<(), LyapunovError> {
    let report = check_stability(a)?;
    if !report.stable {
        return Err(LyapunovError::Unstable(report.spectral_abscissa));
    }
    let limit = 0.1 / report.spectral_abscissa.abs();
    if !(dt > 0.0 && dt < limit) {
        return Err(LyapunovError::StepTooLarge { dt, limit });
    }
    Ok(())
}

fn covariance_rate(a: &DMatrix<f64>, y: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    a * y + y * a.transpose() + d
}

fn rk4_step(a: &DMatrix<f64>, y: &DMatrix<f64>, d: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let k1 = covariance_rate(a, y, d);
    let k2 = covariance_rate(a, &(y + &k1 * (h / 2.0)), d);
    let k3 = covariance_rate(a, &(y + &k2 * (h / 2.0)), d);
    let k4 = covariance_rate(a, &(y + &k3 * h), d);
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn diverged(y: &DMatrix<f64>) -> bool {
    y.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
}

/// Classic RK4 on `dY/dt = A Y + Y Aᵀ + D` from `Y(0) = 0`, stepping with
/// `dt` until `t_final` (the last step is shortened to land exactly).
pub fn integrate_covariance_ode(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    t_final: f64,
    dt: f64,
) -> Result<DMatrix<f64>, LyapunovError> {
    check_shapes(a, d)?;
    step_limit(a, dt)?;
    let n = a.nrows();
    let mut y = DMatrix::<f64>::zeros(n, n);
    let mut t = 0.0;
    let mut step = 0usize;
    while t < t_final {
        let h = dt.min(t_final - t);
        y = rk4_step(a, &y, d, h);
        t += h;
        step += 1;
        if diverged(&y) {
            return Err(LyapunovError::Divergence(step));
        }
    }
    Ok(y)
}

/// Affine step map `Y ↦ Φ Y Φᵀ + C`.
#[derive(Clone)]
struct StepMap {
    phi: DMatrix<f64>,
    offset: DMatrix<f64>,
}

impl StepMap {
    /// `self ∘ other`; powers of one map commute, so order is immaterial here.
    fn compose(&self, other: &StepMap) -> StepMap {
        StepMap {
            phi: &self.phi * &other.phi,
            offset: &self.phi * &other.offset * self.phi.transpose() + &self.offset,
        }
    }
}

/// Fixed-step fourth-order integration for stiff drift matrices.
///
/// One step is `Y ↦ Φ Y Φᵀ + C` where `Φ` is the RK4 propagator of
/// `du/dt = A u` and `C` the RK4 solution of the covariance equation over
/// one step from zero. `ceil(t_final/dt)` steps are composed by repeated
/// squaring, so the cost is logarithmic in the step count.
pub fn integrate_covariance_doubling(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    t_final: f64,
    dt: f64,
) -> Result<DMatrix<f64>, LyapunovError> {
    check_shapes(a, d)?;
    step_limit(a, dt)?;
    let n = a.nrows();
    let ha = a * dt;
    let ha2 = &ha * &ha;
    let ha3 = &ha2 * &ha;
    let ha4 = &ha3 * &ha;
    let phi = DMatrix::<f64>::identity(n, n) + &ha + ha2 / 2.0 + ha3 / 6.0 + ha4 / 24.0;
    let offset = rk4_step(a, &DMatrix::zeros(n, n), d, dt);

    let mut base = StepMap { phi, offset };
    let mut acc = StepMap {
        phi: DMatrix::identity(n, n),
        offset: DMatrix::zeros(n, n),
    };
    let mut remaining = (t_final / dt).ceil().max(0.0) as u64;
    let mut round = 0usize;
    while remaining > 0 {
        if remaining & 1 == 1 {
            acc = acc.compose(&base);
        }
        remaining >>= 1;
        if remaining > 0 {
            base = base.compose(&base);
        }
        round += 1;
        if diverged(&acc.offset) || diverged(&base.phi) {
            return Err(LyapunovError::Divergence(round));
        }
    }
    Ok(acc.offset)
}
