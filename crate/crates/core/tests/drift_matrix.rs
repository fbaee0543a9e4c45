use std::collections::HashMap;
use std::f64::consts::PI;

use dlgc::lyapunov::check_stability;
use dlgc::model::{build_system_matrices, derive_params, PhysicalParams, CANONICAL_ORDERING};
use nalgebra::DMatrix;

/// Linearized fluctuation equations written out by variable name.
fn rhs(
    s: &HashMap<&str, f64>,
    p: &PhysicalParams,
    g: [f64; 2],
    delta: [f64; 2],
    gamma_a: [f64; 2],
    gamma_phi: [f64; 2],
) -> HashMap<&'static str, f64> {
    let mut out = HashMap::new();
    let (x, y) = (s["xm"], s["ym"]);
    let mut dx = p.delta_m * y - p.gamma_m * x;
    let mut dy = -p.delta_m * x - p.gamma_m * y;
    let names = [
        ("phi1", "lz1", "x1", "y1"),
        ("phi2", "lz2", "x2", "y2"),
    ];
    for (j, (phi, lz, cx, cy)) in names.into_iter().enumerate() {
        let w = p.omega_phi[j];
        out.insert(phi, w * s[lz]);
        out.insert(lz, -w * s[phi] - gamma_phi[j] * s[lz] + g[j] * s[cx]);
        out.insert(cx, delta[j] * s[cy] - gamma_a[j] * s[cx] + p.g_ma[j] * y);
        out.insert(
            cy,
            -delta[j] * s[cx] - gamma_a[j] * s[cy] - p.g_ma[j] * x + g[j] * s[phi],
        );
        dx += p.g_ma[j] * s[cy];
        dy -= p.g_ma[j] * s[cx];
    }
    out.insert("xm", dx);
    out.insert("ym", dy);
    out
}

fn finite_difference_jacobian(p: &PhysicalParams) -> DMatrix<f64> {
    let d = derive_params(p).unwrap();
    let f = |s: &HashMap<&str, f64>| {
        rhs(
            s,
            p,
            d.enhanced_coupling,
            d.effective_detuning,
            d.cavity_decay,
            d.mirror_damping,
        )
    };
    let n = CANONICAL_ORDERING.len();
    let origin: HashMap<&str, f64> = CANONICAL_ORDERING.iter().map(|k| (*k, 0.0)).collect();
    let h = 1e-3;
    let mut jac = DMatrix::zeros(n, n);
    for (col, var) in CANONICAL_ORDERING.iter().enumerate() {
        let mut plus = origin.clone();
        let mut minus = origin.clone();
        *plus.get_mut(var).unwrap() += h;
        *minus.get_mut(var).unwrap() -= h;
        let (fp, fm) = (f(&plus), f(&minus));
        for (row, out) in CANONICAL_ORDERING.iter().enumerate() {
            jac[(row, col)] = (fp[out] - fm[out]) / (2.0 * h);
        }
    }
    jac
}

fn operating_points() -> Vec<PhysicalParams> {
    let base = PhysicalParams::default();
    let w = base.reference_omega();
    vec![
        base.clone(),
        PhysicalParams {
            delta_a: [0.7 * w, 1.3 * w],
            delta_m: 0.4 * w,
            omega_phi: [0.7 * w, w],
            mirror_mass: [60e-12, 50e-12],
            g_ma: [2.0 * PI * 1e6, 2.0 * PI * 4e6],
            ..base.clone()
        },
        PhysicalParams {
            temperature: 0.0,
            oam: 30,
            ..base
        },
    ]
}

#[test]
fn drift_matches_finite_difference_jacobian() {
    for p in operating_points() {
        let d = derive_params(&p).unwrap();
        let a = build_system_matrices(&d, &p).drift;
        let jac = finite_difference_jacobian(&p);
        let scale = a.amax();
        for i in 0..10 {
            for j in 0..10 {
                let diff = (a[(i, j)] - jac[(i, j)]).abs();
                assert!(
                    diff <= 1e-8 * a[(i, j)].abs().max(1e-8 * scale),
                    "entry ({}, {}): {} vs {}",
                    CANONICAL_ORDERING[i],
                    CANONICAL_ORDERING[j],
                    a[(i, j)],
                    jac[(i, j)]
                );
            }
        }
    }
}

#[test]
fn decoupled_spectrum_is_the_union_of_oscillators() {
    let p = PhysicalParams {
        g_ma: [0.0; 2],
        delta_a: [0.8e7, 1.1e7],
        ..Default::default()
    };
    let mut d = derive_params(&p).unwrap();
    d.enhanced_coupling = [0.0; 2];
    let a = build_system_matrices(&d, &p).drift;
    let got = check_stability(&a).unwrap().eigenvalues;

    let mut expected: Vec<(f64, f64)> = Vec::new();
    for j in 0..2 {
        let (w, gp) = (p.omega_phi[j], d.mirror_damping[j]);
        let im = (w * w - gp * gp / 4.0).sqrt();
        expected.extend([(-gp / 2.0, im), (-gp / 2.0, -im)]);
        let (ga, dl) = (d.cavity_decay[j], d.effective_detuning[j]);
        expected.extend([(-ga, dl), (-ga, -dl)]);
    }
    expected.extend([(-p.gamma_m, p.delta_m), (-p.gamma_m, -p.delta_m)]);

    assert_eq!(got.len(), expected.len());
    for (re, im) in expected {
        let closest = got
            .iter()
            .map(|z| ((z.re - re).powi(2) + (z.im - im).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(closest <= 1e-6 * (re.abs() + im.abs()), "missing {re} + {im}i");
    }
}

#[test]
fn decoupled_magnon_leaves_mirror_cavity_block_alone() {
    let p = PhysicalParams {
        g_ma: [0.0; 2],
        ..Default::default()
    };
    let block = |delta_m: f64| {
        let q = PhysicalParams {
            delta_m,
            ..p.clone()
        };
        let d = derive_params(&q).unwrap();
        build_system_matrices(&d, &q).drift.view((0, 0), (8, 8)).into_owned()
    };
    let w = p.reference_omega();
    assert_eq!(block(0.2 * w), block(1.9 * w));
    assert_eq!(block(-w), block(3.0 * w));
}

#[test]
fn drift_depends_on_drive_only_through_amplitude_modulus() {
    // doubling the power scales |a_s| by √2 and G by √2; no other entry moves
    let p = PhysicalParams::default();
    let q = PhysicalParams {
        input_power: [2.0 * p.input_power[0], 2.0 * p.input_power[1]],
        ..p.clone()
    };
    let (dp, dq) = (derive_params(&p).unwrap(), derive_params(&q).unwrap());
    for j in 0..2 {
        let ratio = dq.cavity_amplitude[j].norm() / dp.cavity_amplitude[j].norm();
        assert!((ratio - 2f64.sqrt()).abs() < 1e-12);
    }
    let (ap, aq) = (
        build_system_matrices(&dp, &p).drift,
        build_system_matrices(&dq, &q).drift,
    );
    for i in 0..10 {
        for j in 0..10 {
            if ap[(i, j)] != aq[(i, j)] {
                let r = aq[(i, j)] / ap[(i, j)];
                assert!((r - 2f64.sqrt()).abs() < 1e-12, "({i},{j}) ratio {r}");
            }
        }
    }
}

#[test]
fn diffusion_is_diagonal_and_psd_with_zero_angle_rows() {
    for p in operating_points() {
        let d = derive_params(&p).unwrap();
        let dm = build_system_matrices(&d, &p).diffusion;
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    assert_eq!(dm[(i, j)], 0.0);
                }
            }
            let label = CANONICAL_ORDERING[i];
            if label.starts_with("phi") {
                assert_eq!(dm[(i, i)], 0.0);
            } else {
                assert!(dm[(i, i)] > 0.0);
            }
        }
    }
}
