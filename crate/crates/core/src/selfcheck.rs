//! Seeded oracle battery: analytic states, random physical covariance
//! matrices and random stable drift matrices checked against independent
//! routes. Shared by the test suites and the `check` command.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lyapunov;
use crate::measures::{self, Discriminant, TwoModeCM};
use crate::model::PhysicalParams;
use crate::sweep;

pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// Worst deviation seen (or count of disagreements for boolean checks).
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, worst: f64, tolerance: f64, cases: usize, detail: String) -> Self {
        Self {
            name,
            worst,
            tolerance,
            cases,
            passed: worst.is_finite() && worst <= tolerance,
            detail,
        }
    }

    fn failed(name: &'static str, cases: usize, detail: String) -> Self {
        Self {
            name,
            worst: f64::INFINITY,
            tolerance: 0.0,
            cases,
            passed: false,
            detail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub seed: u64,
    pub random_states: usize,
    pub random_drifts: usize,
    /// Discriminant used on the closed-form side; `MissingFactorFour` must make the battery fail.
    pub discriminant: Discriminant,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            random_states: 200,
            random_drifts: 50,
            discriminant: Discriminant::Standard,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn block(a: Matrix2<f64>, b: Matrix2<f64>, c: Matrix2<f64>, d: Matrix2<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&b);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&c);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&d);
    m
}

/// Local rotations on both modes.
pub fn local_rotation(t1: f64, t2: f64) -> Matrix4<f64> {
    let z = Matrix2::zeros();
    block(rotation(t1), z, z, rotation(t2))
}

/// Random symplectic map built from rotations, single-mode squeezers, a
/// beam splitter and a two-mode squeezer.
pub fn random_symplectic<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let i2 = Matrix2::identity();
    let angle = |rng: &mut R| -> f64 { rng.random_range(0.0..std::f64::consts::TAU) };
    let squeeze = |rng: &mut R| -> f64 { rng.random_range(-0.8..0.8) };

    let r1 = local_rotation(angle(rng), angle(rng));
    let (s1, s2) = (squeeze(rng), squeeze(rng));
    let sq = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        (-s1).exp(),
        s1.exp(),
        (-s2).exp(),
        s2.exp(),
    ));
    let t: f64 = angle(rng);
    let bs = block(i2 * t.cos(), i2 * t.sin(), -i2 * t.sin(), i2 * t.cos());
    let r: f64 = squeeze(rng);
    let zr = Matrix2::new(1.0, 0.0, 0.0, -1.0) * r.sinh();
    let tms = block(i2 * r.cosh(), zr, zr, i2 * r.cosh());
    let r2 = local_rotation(angle(rng), angle(rng));
    r2 * tms * bs * sq * r1
}

/// `S diag(ν₁,ν₁,ν₂,ν₂) Sᵀ` with symplectic eigenvalues in `[1/2, 2]`.
pub fn random_physical_cm<R: Rng>(rng: &mut R) -> TwoModeCM {
    let s = random_symplectic(rng);
    let nu1 = rng.random_range(0.5..2.0);
    let nu2 = rng.random_range(0.5..2.0);
    let w = Matrix4::from_diagonal(&nalgebra::Vector4::new(nu1, nu1, nu2, nu2));
    let m = s * w * s.transpose();
    TwoModeCM::from_matrix(&((m + m.transpose()) * 0.5))
}

/// Random Gaussian matrix shifted so its spectral abscissa lies in `[-2, -0.5]`,
/// with a random diagonal positive semidefinite diffusion.
pub fn random_stable_pair<R: Rng>(rng: &mut R, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let r = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let abscissa = r
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = abscissa + rng.random_range(0.5..2.0);
    let a = r - DMatrix::<f64>::identity(n, n) * shift;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        rng.random_range(0.0..2.0)
    }));
    (a, d)
}

const TMSV_SQUEEZINGS: [f64; 6] = [0.0, 0.1, 0.3, 0.5, 1.0, 2.0];

/// Log negativity `2r`, steering `ln cosh 2r` both ways, zero asymmetry and
/// standard form `(cosh 2r, cosh 2r, sinh 2r, -sinh 2r) / 2`.
pub fn check_tmsv(form: Discriminant) -> CheckOutcome {
    let mut worst = 0.0f64;
    for r in TMSV_SQUEEZINGS {
        let cm = TwoModeCM::two_mode_squeezed(r);
        let e = match measures::log_negativity_with(&cm, form) {
            Ok(e) => e,
            Err(err) => return CheckOutcome::failed("tmsv_analytics", 0, err.to_string()),
        };
        let st = match measures::gaussian_steering(&cm) {
            Ok(s) => s,
            Err(err) => return CheckOutcome::failed("tmsv_analytics", 0, err.to_string()),
        };
        let sf = match measures::standard_form(&cm) {
            Ok(sf) => sf,
            Err(err) => return CheckOutcome::failed("tmsv_analytics", 0, err.to_string()),
        };
        let (ch, sh) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
        let expect_s = (2.0 * r).cosh().ln();
        worst = worst
            .max((sf.alpha - ch).abs())
            .max((sf.beta - ch).abs())
            .max((sf.c_plus - sh).abs())
            .max((sf.c_minus + sh).abs())
            .max((e - 2.0 * r).abs())
            .max((st.s12 - expect_s).abs())
            .max((st.s21 - expect_s).abs())
            .max(st.asymmetry.abs());
    }
    CheckOutcome::new(
        "tmsv_analytics",
        worst,
        1e-9,
        TMSV_SQUEEZINGS.len(),
        "E=2r, S=ln cosh 2r, standard form".into(),
    )
}

/// Closed-form `ν̃⁻` against the numerical partial-transpose spectrum.
pub fn check_closed_form_spectrum(states: &[TwoModeCM], form: Discriminant) -> CheckOutcome {
    let mut worst = 0.0f64;
    for cm in states {
        let numeric = measures::symplectic_spectrum(&to_dmatrix(cm), true);
        let closed = measures::nu_minus_closed_form(cm, form);
        match (numeric, closed) {
            (Ok(n), Ok(c)) => worst = worst.max((n[0] - c).abs()),
            (Err(e), _) | (_, Err(e)) => {
                return CheckOutcome::failed("closed_form_vs_spectrum", states.len(), e.to_string())
            }
        }
    }
    CheckOutcome::new(
        "closed_form_vs_spectrum",
        worst,
        1e-9,
        states.len(),
        "|nu_closed - nu_eigen|".into(),
    )
}

/// `E > 0` from the closed form iff the numerical PT spectrum dips below 1/2.
pub fn check_ppt_consistency(states: &[TwoModeCM], form: Discriminant) -> CheckOutcome {
    let mut disagreements = 0usize;
    for cm in states {
        let e = measures::log_negativity_with(cm, form).unwrap_or(f64::NAN);
        let numeric = measures::symplectic_spectrum(&to_dmatrix(cm), true)
            .map(|v| v[0])
            .unwrap_or(f64::NAN);
        // states within 1e-9 of the boundary are not decisive either way
        if (numeric - 0.5).abs() < 1e-9 {
            continue;
        }
        if (e > 0.0) != (numeric < 0.5) {
            disagreements += 1;
        }
    }
    CheckOutcome::new(
        "ppt_consistency",
        disagreements as f64,
        0.0,
        states.len(),
        format!("{disagreements} disagreements"),
    )
}

/// Both steering routes agree.
pub fn check_schur_identity(states: &[TwoModeCM]) -> CheckOutcome {
    let mut worst = 0.0f64;
    for cm in states {
        for c in [*cm, cm.swapped()] {
            match (measures::steering_schur_raw(&c), measures::steering_ratio_raw(&c)) {
                (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
                (Err(e), _) | (_, Err(e)) => {
                    return CheckOutcome::failed("steering_schur_identity", states.len(), e.to_string())
                }
            }
        }
    }
    CheckOutcome::new(
        "steering_schur_identity",
        worst,
        1e-10,
        states.len(),
        "|schur - ratio|".into(),
    )
}

/// Standard-form invariants survive local rotations.
pub fn check_local_invariance<R: Rng>(states: &[TwoModeCM], rng: &mut R) -> CheckOutcome {
    let mut worst = 0.0f64;
    for cm in states {
        let rot = local_rotation(
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let m = rot * cm.to_matrix() * rot.transpose();
        let turned = TwoModeCM::from_matrix(&((m + m.transpose()) * 0.5));
        let (Ok(a), Ok(b)) = (measures::correlations(cm), measures::correlations(&turned)) else {
            return CheckOutcome::failed("local_invariance", states.len(), "measure failed".into());
        };
        let scale = 1.0 + a.log_negativity.abs() + a.ggd.abs();
        worst = worst
            .max((a.log_negativity - b.log_negativity).abs() / scale)
            .max((a.steering_12 - b.steering_12).abs() / scale)
            .max((a.steering_21 - b.steering_21).abs() / scale)
            .max((a.ggd - b.ggd).abs() / scale);
    }
    CheckOutcome::new(
        "local_invariance",
        worst,
        1e-8,
        states.len(),
        "measures under local rotations".into(),
    )
}

/// Product states have zero discord; correlated states have positive discord.
pub fn check_ggd_vanishing(states: &[TwoModeCM]) -> CheckOutcome {
    let mut bad = 0usize;
    for cm in states {
        let product = TwoModeCM {
            v: cm.v,
            f: cm.f,
            theta: Matrix2::zeros(),
        };
        match (measures::ggd(&product), measures::ggd(cm)) {
            (Ok(p), Ok(c)) => {
                if p.value.abs() > 1e-10 {
                    bad += 1;
                }
                if cm.theta.determinant().abs() > 1e-8 && c.value <= 0.0 {
                    bad += 1;
                }
            }
            _ => bad += 1,
        }
    }
    CheckOutcome::new(
        "ggd_vanishing",
        bad as f64,
        0.0,
        states.len(),
        format!("{bad} violations"),
    )
}

/// Lyapunov solutions: residual and agreement with long-time integration.
pub fn check_lyapunov_vs_ode<R: Rng>(rng: &mut R, count: usize) -> CheckOutcome {
    let mut worst_rel = 0.0f64;
    let mut worst_residual = 0.0f64;
    for _ in 0..count {
        let (a, d) = random_stable_pair(rng, 10);
        let sol = match lyapunov::solve_lyapunov(&a, &d) {
            Ok(s) => s,
            Err(e) => return CheckOutcome::failed("lyapunov_vs_ode", count, e.to_string()),
        };
        let report = lyapunov::check_stability(&a).expect("finite matrix");
        let decay = report.spectral_abscissa.abs();
        let dt = (0.05 / a.norm()).min(0.05 / decay);
        let ode = match lyapunov::integrate_covariance_doubling(&a, &d, 40.0 / decay, dt) {
            Ok(y) => y,
            Err(e) => return CheckOutcome::failed("lyapunov_vs_ode", count, e.to_string()),
        };
        let scale = sol.y.amax().max(1.0);
        worst_rel = worst_rel.max((&ode - &sol.y).amax() / scale);
        worst_residual = worst_residual.max(sol.residual / d.amax().max(1.0));
    }
    let worst = worst_rel.max(worst_residual / 1e-9 * 1e-6);
    CheckOutcome::new(
        "lyapunov_vs_ode",
        worst,
        1e-6,
        count,
        format!("max rel diff {worst_rel:.3e}, max scaled residual {worst_residual:.3e}"),
    )
}

/// A stable model point yields a physical covariance matrix.
pub fn check_model_physicality() -> CheckOutcome {
    let mut p = PhysicalParams::default();
    p.delta_a = [p.reference_omega(); 2];
    let eval = match sweep::evaluate_point(&p) {
        Ok(e) => e,
        Err(e) => return CheckOutcome::failed("model_physicality", 1, e.to_string()),
    };
    let Some(steady) = eval.steady else {
        return CheckOutcome::failed("model_physicality", 1, "reference point unstable".into());
    };
    match measures::symplectic_spectrum(&steady.covariance.matrix, false) {
        Ok(nu) => CheckOutcome::new(
            "model_physicality",
            (0.5 - nu[0]).max(0.0),
            1e-8,
            1,
            format!("min symplectic eigenvalue {:.12}", nu[0]),
        ),
        Err(e) => CheckOutcome::failed("model_physicality", 1, e.to_string()),
    }
}

pub fn to_dmatrix(cm: &TwoModeCM) -> DMatrix<f64> {
    let m = cm.to_matrix();
    DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
}

/// Random states plus the squeezed-vacuum family and the vacuum.
pub fn state_pool<R: Rng>(rng: &mut R, count: usize) -> Vec<TwoModeCM> {
    let mut states: Vec<TwoModeCM> = (0..count).map(|_| random_physical_cm(rng)).collect();
    states.extend(TMSV_SQUEEZINGS.iter().map(|&r| TwoModeCM::two_mode_squeezed(r)));
    states
}

pub fn run_all(cfg: &CheckConfig) -> Vec<CheckOutcome> {
    let mut rng = rng(cfg.seed);
    let states = state_pool(&mut rng, cfg.random_states);
    vec![
        check_tmsv(cfg.discriminant),
        check_closed_form_spectrum(&states, cfg.discriminant),
        check_ppt_consistency(&states, cfg.discriminant),
        check_schur_identity(&states),
        check_local_invariance(&states, &mut rng),
        check_ggd_vanishing(&states),
        check_lyapunov_vs_ode(&mut rng, cfg.random_drifts),
        check_model_physicality(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CheckConfig {
        CheckConfig {
            random_states: 40,
            random_drifts: 4,
            ..CheckConfig::default()
        }
    }

    #[test]
    fn random_symplectic_preserves_form() {
        let mut r = rng(3);
        let omega = Matrix4::new(
            0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0,
        );
        for _ in 0..20 {
            let s = random_symplectic(&mut r);
            assert!((s * omega * s.transpose() - omega).amax() < 1e-10);
        }
    }

    #[test]
    fn battery_passes() {
        for c in run_all(&small()) {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let cfg = CheckConfig {
            discriminant: Discriminant::MissingFactorFour,
            ..small()
        };
        let out = run_all(&cfg);
        assert!(out.iter().any(|c| !c.passed));
        assert!(!check_tmsv(Discriminant::MissingFactorFour).passed);
    }

    #[test]
    fn verdicts_do_not_depend_on_seed() {
        for seed in [1, 2, 3] {
            let cfg = CheckConfig { seed, ..small() };
            assert!(run_all(&cfg).iter().all(|c| c.passed));
        }
    }
}
