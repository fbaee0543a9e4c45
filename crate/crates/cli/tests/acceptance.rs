//! Acceptance suite. Each test prints one `PASS`/`FAIL` line (plus detail
//! lines) straight to stderr so the verdicts show up even when the test
//! harness captures output.

use std::f64::consts::LN_2;
use std::io::Write as _;
use std::process::Command;
use std::time::{Duration, Instant};

use dlgc::lyapunov::{check_stability, integrate_covariance_doubling, solve_lyapunov};
use dlgc::measures::{
    gaussian_steering, ggd, log_negativity, standard_form, steering_ratio_raw,
    steering_schur_raw, symplectic_spectrum, TwoModeCM,
};
use dlgc::model::{build_system_matrices, derive_params, PhysicalParams};
use dlgc::selfcheck::{local_rotation, random_physical_cm, random_stable_pair, rng};
use dlgc::sweep::{
    evaluate_point, figure_preset, resolve_point, run_sweep, Measure, SweepResult, SweepRow,
};

const TMSV_TOL: f64 = 1e-9;
const TMSV_BUDGET: Duration = Duration::from_secs(1);
const LYAP_RESIDUAL: f64 = 1e-9;
const LYAP_ODE_REL: f64 = 1e-6;
const LYAP_BUDGET: Duration = Duration::from_secs(10);
const PHYSICAL_SLACK: f64 = 1e-8;
const PEAK_BAND: (f64, f64) = (0.8, 1.2);
const REFERENCE_PEAK: f64 = 1.25;
const DECOUPLED_TOL: f64 = 1e-9;
const DS_SLACK: f64 = 1e-9;
const QUALITATIVE_BUDGET: Duration = Duration::from_secs(120);
const SCHUR_TOL: f64 = 1e-10;
const GGD_ZERO_TOL: f64 = 1e-10;
const GGD_CROSS_THRESHOLD: f64 = 1e-8;
const ROTATION_TOL: f64 = 1e-9;
const SEED: u64 = 0x5eed_acce;

fn say(line: &str) {
    let mut err = std::io::stderr();
    let _ = writeln!(err, "{line}");
}

fn verdict(criterion: &str, pass: bool, summary: &str) {
    say(&format!(
        "[acceptance] {} criterion {criterion}: {summary}",
        if pass { "PASS" } else { "FAIL" }
    ));
}

fn detail(line: &str) {
    say(&format!("[acceptance]      {line}"));
}

#[test]
fn criterion_1_squeezed_vacuum_analytics() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for r in [0.0, 0.1, 0.5, 1.0, 2.0] {
        let cm = TwoModeCM::two_mode_squeezed(r);
        let e = log_negativity(&cm).unwrap();
        let s = gaussian_steering(&cm).unwrap();
        let sf = standard_form(&cm).unwrap();
        let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let errs = [
            e - 2.0 * r,
            s.s12 - ch.ln(),
            s.s21 - ch.ln(),
            s.asymmetry,
            sf.alpha - ch / 2.0,
            sf.beta - ch / 2.0,
            sf.c_plus - sh / 2.0,
            sf.c_minus + sh / 2.0,
        ];
        let w = errs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        detail(&format!("r = {r}: max abs error {w:.2e}"));
        worst = worst.max(w);
    }
    let elapsed = start.elapsed();
    let pass = worst <= TMSV_TOL && elapsed < TMSV_BUDGET;
    verdict(
        "1",
        pass,
        &format!("worst error {worst:.2e} (tol {TMSV_TOL:e}), {elapsed:.2?}"),
    );
    assert!(pass);
}

struct LyapunovCase {
    residual_ok: bool,
    ode_rel: f64,
}

fn lyapunov_case(a: &nalgebra::DMatrix<f64>, d: &nalgebra::DMatrix<f64>) -> Result<LyapunovCase, String> {
    let sol = solve_lyapunov(a, d).map_err(|e| e.to_string())?;
    let residual_ok = sol.residual <= LYAP_RESIDUAL * d.amax().max(1.0);
    let decay = check_stability(a).map_err(|e| e.to_string())?.spectral_abscissa.abs();
    let dt = (0.05 / a.norm()).min(0.05 / decay);
    let ode = integrate_covariance_doubling(a, d, 40.0 / decay, dt).map_err(|e| e.to_string())?;
    Ok(LyapunovCase {
        residual_ok,
        ode_rel: (&ode - &sol.y).amax() / sol.y.amax(),
    })
}

#[test]
fn criterion_2_lyapunov_correctness() {
    let start = Instant::now();
    let mut r = rng(SEED);
    let mut random_ok = true;
    let mut worst_rel = 0.0f64;
    for k in 0..50 {
        let (a, d) = random_stable_pair(&mut r, 10);
        match lyapunov_case(&a, &d) {
            Ok(c) => {
                worst_rel = worst_rel.max(c.ode_rel);
                random_ok &= c.residual_ok && c.ode_rel <= LYAP_ODE_REL;
            }
            Err(e) => {
                detail(&format!("random case {k}: {e}"));
                random_ok = false;
            }
        }
    }
    detail(&format!(
        "50 random stable pairs: {} (worst ODE relative difference {worst_rel:.2e})",
        if random_ok { "ok" } else { "failed" }
    ));

    let p = PhysicalParams::default();
    let sys = build_system_matrices(&derive_params(&p).unwrap(), &p);
    let default_ok = match lyapunov_case(&sys.drift, &sys.diffusion) {
        Ok(c) => {
            detail(&format!("reference point: ODE relative difference {:.2e}", c.ode_rel));
            c.residual_ok && c.ode_rel <= LYAP_ODE_REL
        }
        Err(e) => {
            let abscissa = check_stability(&sys.drift).unwrap().spectral_abscissa;
            detail(&format!(
                "reference point (delta_a = -omega_phi, delta_m = omega_phi): {e}; abscissa = {:.4} omega_phi",
                abscissa / p.reference_omega()
            ));
            false
        }
    };
    let elapsed = start.elapsed();
    let pass = random_ok && default_ok && elapsed < LYAP_BUDGET;
    verdict(
        "2",
        pass,
        &format!(
            "random pairs {}, reference point {}, {elapsed:.2?}",
            if random_ok { "ok" } else { "failed" },
            if default_ok { "ok" } else { "has no steady state" }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_physicality_over_fig2a() {
    let spec = figure_preset("fig2a").unwrap();
    let mut stable = 0;
    let mut worst = f64::INFINITY;
    for coords in spec.grid() {
        let (p, _) = resolve_point(&spec, &coords).unwrap();
        let eval = evaluate_point(&p).unwrap();
        if let Some(s) = eval.steady {
            let m = s.mirrors.to_matrix();
            let m = nalgebra::DMatrix::from_fn(4, 4, |i, j| m[(i, j)]);
            let nu = symplectic_spectrum(&m, false).unwrap();
            worst = worst.min(nu[0]);
            stable += 1;
        }
    }
    let pass = stable > 0 && worst >= 0.5 - PHYSICAL_SLACK;
    verdict(
        "3",
        pass,
        &format!("{stable} stable points of 3721, smallest mirror-pair symplectic eigenvalue {worst:.9}"),
    );
    assert!(pass);
}

fn stable_rows(r: &SweepResult) -> impl Iterator<Item = &SweepRow> {
    r.rows.iter().filter(|row| row.is_stable())
}

fn fig2a_peak(result: &SweepResult) -> (bool, String) {
    let best = stable_rows(result)
        .map(|r| (r.measure(Measure::E).unwrap(), r.coords[0], r.coords[1]))
        .fold(None::<(f64, f64, f64)>, |acc, x| match acc {
            Some(a) if a.0 >= x.0 => Some(a),
            _ => Some(x),
        });
    match best {
        Some((e, dm, da)) if e > 0.0 => {
            let in_band = (PEAK_BAND.0..=PEAK_BAND.1).contains(&dm);
            let ratio = e / REFERENCE_PEAK;
            detail(&format!(
                "(a) peak E = {e:.4} at delta_m/omega = {dm:.3}, delta_a/omega = {da:.3}; reference value {REFERENCE_PEAK}: {}",
                if (0.5..=2.0).contains(&ratio) { "within a factor of 2" } else { "deviation" }
            ));
            (in_band, format!("peak at {dm:.3}"))
        }
        Some((e, ..)) => (false, format!("E has no positive maximum (max {e:e})")),
        None => (false, "no stable points".into()),
    }
}

fn thermal_decay(result: &SweepResult, series: usize, stride: usize) -> Result<f64, String> {
    let points: Vec<(f64, Option<f64>)> = result
        .rows
        .iter()
        .skip(series)
        .step_by(stride)
        .map(|r| (r.coords[0], r.measure(Measure::E)))
        .collect();
    let values: Vec<(f64, f64)> = points.iter().filter_map(|(t, e)| e.map(|e| (*t, e))).collect();
    if values.is_empty() {
        return Err("no stable temperatures".into());
    }
    let peak = values
        .iter()
        .enumerate()
        .fold(0, |best, (k, v)| if v.1 > values[best].1 { k } else { best });
    if values[peak].1 <= 0.0 {
        return Err("E is zero at every stable temperature".into());
    }
    if values[peak..].windows(2).any(|w| w[1].1 > w[0].1 + 1e-12) {
        return Err("E increases after its maximum".into());
    }
    values[peak..]
        .iter()
        .find(|v| v.1 == 0.0)
        .map(|v| v.0)
        .ok_or_else(|| "E does not reach zero on the grid".into())
}

#[test]
fn criterion_4_qualitative_reproduction() {
    let start = Instant::now();
    let mut parts: Vec<(&str, bool, String)> = Vec::new();

    // (a)
    let fig2a = run_sweep(&figure_preset("fig2a").unwrap(), 0).unwrap();
    let stable = stable_rows(&fig2a).count();
    detail(&format!("fig2a: {stable} of {} points stable", fig2a.rows.len()));
    let (ok, msg) = fig2a_peak(&fig2a);
    parts.push(("a", ok, msg));

    // (b)
    let fig3a = run_sweep(&figure_preset("fig3a").unwrap(), 0).unwrap();
    let masses = fig3a.spec.axes[1].values();
    let mut ok_b = true;
    let mut msgs = Vec::new();
    for (j, m) in masses.iter().enumerate() {
        match thermal_decay(&fig3a, j, masses.len()) {
            Ok(t) => msgs.push(format!("m = {m} ng: E = 0 from T = {t:.1} K")),
            Err(e) => {
                ok_b = false;
                msgs.push(format!("m = {m} ng: {e}"));
            }
        }
    }
    parts.push(("b", ok_b, msgs.join("; ")));

    // (c)
    let mut decoupled = figure_preset("fig2a").unwrap();
    decoupled.base.g_ma = [0.0; 2];
    let dec = run_sweep(&decoupled, 0).unwrap();
    let n_dec = stable_rows(&dec).count();
    let worst_e = stable_rows(&dec)
        .map(|r| r.measure(Measure::E).unwrap())
        .fold(0.0f64, f64::max);
    parts.push((
        "c",
        n_dec > 0 && worst_e <= DECOUPLED_TOL,
        format!("g_ma = 0: max E = {worst_e:e} over {n_dec} stable points"),
    ));

    // (d)
    let fig3c = run_sweep(&figure_preset("fig3c").unwrap(), 0).unwrap();
    let n3c = stable_rows(&fig3c).count();
    let ds_max = stable_rows(&fig3c)
        .map(|r| r.measure(Measure::Ds).unwrap())
        .fold(0.0f64, f64::max);
    let one_way = stable_rows(&fig3c)
        .filter(|r| {
            let (a, b) = (r.measure(Measure::S12).unwrap(), r.measure(Measure::S21).unwrap());
            (a > 0.0) != (b > 0.0)
        })
        .count();
    parts.push((
        "d",
        n3c > 0 && ds_max <= LN_2 + DS_SLACK && one_way > 0,
        format!("{n3c} stable points, max Ds = {ds_max:.4}, {one_way} one-way steering points"),
    ));

    // (e)
    let mut ok_e = true;
    let mut msgs = Vec::new();
    for id in ["fig4a", "fig4b"] {
        let r = run_sweep(&figure_preset(id).unwrap(), 0).unwrap();
        let last = |m: Measure| {
            stable_rows(&r)
                .filter(|row| row.measure(m).unwrap() > 0.0)
                .map(|row| row.coords[0])
                .fold(None::<f64>, |a, t| Some(a.map_or(t, |a| a.max(t))))
        };
        let n = stable_rows(&r).count();
        match (last(Measure::Ggd), last(Measure::E)) {
            (Some(g), Some(e)) if g > e => msgs.push(format!("{id}: GGD > 0 to {g:.1} K, E > 0 to {e:.1} K")),
            (g, e) => {
                ok_e = false;
                msgs.push(format!("{id}: {n} stable points, last T with GGD > 0 {g:?}, with E > 0 {e:?}"));
            }
        }
    }
    parts.push(("e", ok_e, msgs.join("; ")));

    let elapsed = start.elapsed();
    for (name, ok, msg) in &parts {
        detail(&format!("({name}) {}: {msg}", if *ok { "ok" } else { "failed" }));
    }
    let pass = parts.iter().all(|p| p.1) && elapsed < QUALITATIVE_BUDGET;
    let failed: Vec<&str> = parts.iter().filter(|p| !p.1).map(|p| p.0).collect();
    verdict(
        "4",
        pass,
        &format!("failed parts {failed:?}, {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_identities() {
    let mut r = rng(SEED ^ 5);
    let states: Vec<TwoModeCM> = (0..100).map(|_| random_physical_cm(&mut r)).collect();

    let mut schur = 0.0f64;
    for cm in &states {
        for c in [*cm, cm.swapped()] {
            schur = schur.max((steering_schur_raw(&c).unwrap() - steering_ratio_raw(&c).unwrap()).abs());
        }
    }

    let mut ggd_bad = 0;
    for cm in &states {
        let product = TwoModeCM {
            theta: nalgebra::Matrix2::zeros(),
            ..*cm
        };
        if ggd(&product).unwrap().value.abs() > GGD_ZERO_TOL {
            ggd_bad += 1;
        }
        if cm.theta.determinant().abs() > GGD_CROSS_THRESHOLD && ggd(cm).unwrap().value <= 0.0 {
            ggd_bad += 1;
        }
    }

    let mut rot = 0.0f64;
    for cm in &states {
        let t = local_rotation(
            rand::Rng::random_range(&mut r, 0.0..std::f64::consts::TAU),
            rand::Rng::random_range(&mut r, 0.0..std::f64::consts::TAU),
        );
        let m = t * cm.to_matrix() * t.transpose();
        let turned = TwoModeCM::from_matrix(&((m + m.transpose()) * 0.5));
        let (a, b) = (standard_form(cm).unwrap(), standard_form(&turned).unwrap());
        rot = rot
            .max((a.alpha - b.alpha).abs())
            .max((a.beta - b.beta).abs())
            .max((a.c_plus - b.c_plus).abs())
            .max((a.c_minus - b.c_minus).abs());
    }

    detail(&format!("steering routes differ by at most {schur:.2e}"));
    detail(&format!("GGD zero/non-zero violations: {ggd_bad}"));
    detail(&format!("standard form moves by at most {rot:.2e} under local rotations"));
    let pass = schur <= SCHUR_TOL && ggd_bad == 0 && rot <= ROTATION_TOL;
    verdict("5", pass, "Schur identity, GGD vanishing, local invariance");
    assert!(pass);
}

fn fig2a_csv(jobs: usize) -> String {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_dlgc"))
        .args(["figure", "fig2a", "--formats", "csv", "--jobs"])
        .arg(jobs.to_string())
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = std::fs::read_to_string(dir.path().join("fig2a.csv")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with("# generated_unix_time:"))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[test]
fn criterion_6_determinism() {
    let serial = fig2a_csv(1);
    let again = fig2a_csv(1);
    let parallel = fig2a_csv(8);
    let rows = serial.lines().filter(|l| !l.starts_with('#')).count();
    let pass = serial == again && serial == parallel && rows == 3722;
    verdict(
        "6",
        pass,
        &format!(
            "repeat identical: {}, jobs 1 vs 8 identical: {}, {} data lines",
            serial == again,
            serial == parallel,
            rows - 1
        ),
    );
    assert!(pass);
}
