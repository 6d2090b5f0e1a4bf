//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).
//!
//! Temporal-rate checks measure against the exact evolution of the
//! spatially-discrete system (`ErrorBaseline::DiscreteMode`), which
//! isolates the temporal order from the fixed spatial error floor of
//! the pinned mesh.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use wavedg::*;

fn report(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion} ({name}): {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn sinwave_setup(nx: usize) -> (FeSpace, SparseMatrix, SparseMatrix, DgState) {
    let space = FeSpace::uniform(0.0, PI, nx).unwrap();
    let m = assemble_mass(&space);
    let a = assemble_stiffness(&space);
    let sol = ManufacturedSolution::default_example();
    let init = sol.initial_state(&space).unwrap();
    (space, m, a, init)
}

#[test]
fn criterion_1_energy_identity() {
    let mut worst: f64 = 0.0;
    for scheme in [DgScheme::Dg0, DgScheme::Dg1] {
        for nx in [16, 64] {
            for nt in [10, 100] {
                let (_, m, a, init) = sinwave_setup(nx);
                let part = TimePartition::uniform(1.0, nt).unwrap();
                let traj = run(scheme, &m, &a, &part, init, None).unwrap();
                let ledger = audit(&traj, &m, &a, None).unwrap();
                let rel = ledger.residual().abs() / ledger.e0;
                worst = worst.max(rel);
            }
        }
    }
    report(
        1,
        "energy identity",
        worst <= 1e-10,
        &format!("max |eN + jumps - e0| / e0 = {worst:.3e}, tolerance 1e-10"),
    );
}

fn temporal_table(scheme: DgScheme) -> RateTable {
    let mut cfg = StudyConfig::new(scheme, BuiltinProblem::SinWave);
    cfg.nx = vec![512];
    cfg.nt = vec![8, 16, 32, 64, 128];
    cfg.t_final = 1.0;
    cfg.baseline = ErrorBaseline::DiscreteMode;
    run_temporal_study(&cfg).unwrap()
}

#[test]
fn criterion_2_temporal_eoc_uniform_u1_l2() {
    let t0 = temporal_table(DgScheme::Dg0);
    let e0 = t0.final_eocs()[3].unwrap();
    let t1 = temporal_table(DgScheme::Dg1);
    let e1 = t1.final_eocs()[3].unwrap();
    let pass = (0.85..=1.15).contains(&e0) && (1.8..=2.6).contains(&e1);
    report(
        2,
        "temporal EOC, uniform-in-time u1 L2",
        pass,
        &format!("dG0 final-pair EOC = {e0:.3} (band [0.85, 1.15]), dG1 = {e1:.3} (band [1.8, 2.6])"),
    );
}

#[test]
fn criterion_3_temporal_eoc_at_nodes() {
    let mut detail = String::new();
    let mut pass = true;
    for scheme in [DgScheme::Dg0, DgScheme::Dg1] {
        let table = temporal_table(scheme);
        let sums: Vec<f64> = table
            .rows
            .iter()
            .map(|r| r.err_u1_h1_nodal + r.err_u2_l2_nodal)
            .collect();
        let ks: Vec<f64> = table.rows.iter().map(|r| r.k).collect();
        let final_eoc = eoc(&sums, &ks).last().unwrap().unwrap();
        let floor = scheme.q() as f64 + 1.0 - 0.15;
        pass &= final_eoc >= floor;
        detail.push_str(&format!(
            "{scheme}: ||e1||_1 + ||e2|| EOC = {final_eoc:.3} (>= {floor:.2}); "
        ));
    }
    // Observed dG(1) nodal rates sit near 3 (superconvergence);
    // recorded above, asserted only against the guaranteed order.
    report(3, "temporal EOC at nodes", pass, detail.trim_end());
}

#[test]
fn criterion_4_spatial_eoc_dg1() {
    let mut cfg = StudyConfig::new(DgScheme::Dg1, BuiltinProblem::SinWave);
    cfg.nx = vec![8, 16, 32, 64];
    cfg.t_final = 1.0;
    let table = run_spatial_study(&cfg).unwrap();
    let l2 = table.final_eocs()[0].unwrap();
    let h1 = table.final_eocs()[1].unwrap();
    let pass = (1.8..=2.2).contains(&l2) && (0.85..=1.15).contains(&h1);
    report(
        4,
        "spatial EOC, dG1 with k = h",
        pass,
        &format!("u1 L2 EOC = {l2:.3} (band [1.8, 2.2]), u1 H1 EOC = {h1:.3} (band [0.85, 1.15])"),
    );
}

/// Dense Gaussian elimination with partial pivoting (test-local oracle).
fn dense_solve(a: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for j in 0..n {
        let piv = (j..n)
            .max_by(|&p, &q| m[p * n + j].abs().partial_cmp(&m[q * n + j].abs()).unwrap())
            .unwrap();
        for c in 0..n {
            m.swap(j * n + c, piv * n + c);
        }
        x.swap(j, piv);
        for i in (j + 1)..n {
            let l = m[i * n + j] / m[j * n + j];
            for c in j..n {
                m[i * n + c] -= l * m[j * n + c];
            }
            x[i] -= l * x[j];
        }
    }
    for j in (0..n).rev() {
        for c in (j + 1)..n {
            x[j] -= m[j * n + c] * x[c];
        }
        x[j] /= m[j * n + j];
    }
    x
}

#[test]
fn criterion_5_scalar_mode_oracle() {
    let mut worst: f64 = 0.0;
    for &lambda in &[0.5, 1.0, 10.0] {
        for &k in &[0.01, 0.1] {
            let m = SparseMatrix::diagonal(&[1.0]);
            let a = SparseMatrix::diagonal(&[lambda]);
            let prev = DgState {
                u1: vec![0.8],
                u2: vec![-0.35],
            };

            // dG(0): [[l, -k l], [k l, 1]] x = (l u1, u2 + k f).
            let f0 = 0.4;
            let st = step_dg0(&m, &a, &prev, k, &[f0]).unwrap();
            let dense = dense_solve(
                &[lambda, -k * lambda, k * lambda, 1.0],
                2,
                &[lambda * prev.u1[0], prev.u2[0] + f0],
            );
            worst = worst.max((st.u1[0] - dense[0]).abs());
            worst = worst.max((st.u2[0] - dense[1]).abs());

            // dG(1): the printed 4x4 system.
            let (f1, f2) = (0.15, -0.05);
            let rec = step_dg1(&m, &a, &prev, k, (&[f1], &[f2])).unwrap();
            let (w11, w12) = (k / 3.0, k / 6.0);
            let (w21, w22) = (w12, w11);
            let l = lambda;
            #[rustfmt::skip]
            let sys = [
                0.5 * l,  0.5 * l, -w12 * l, -w11 * l,
                0.5 * l, -0.5 * l, -w22 * l, -w21 * l,
                w12 * l,  w11 * l,  0.5,      0.5,
                w22 * l,  w21 * l,  0.5,     -0.5,
            ];
            let dense = dense_solve(&sys, 4, &[l * prev.u1[0], 0.0, prev.u2[0] + f1, f2]);
            for (got, want) in [
                (rec.u1_minus[0], dense[0]),
                (rec.u1_plus[0], dense[1]),
                (rec.u2_minus[0], dense[2]),
                (rec.u2_plus[0], dense[3]),
            ] {
                worst = worst.max((got - want).abs());
            }
        }
    }
    report(
        5,
        "scalar-mode oracle",
        worst <= 1e-12,
        &format!("max |step - dense solve| = {worst:.3e}, tolerance 1e-12"),
    );
}

#[test]
fn criterion_6_weak_form_residual() {
    // Random 5-interval partition (seeded), nx = 8, smooth nonzero f.
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let mut nodes = vec![0.0];
    for _ in 0..4 {
        nodes.push(nodes.last().unwrap() + rng.gen_range(0.05..0.35));
    }
    nodes.push(nodes.last().unwrap() + rng.gen_range(0.05..0.35));
    let scale = 1.0 / *nodes.last().unwrap();
    for v in nodes.iter_mut() {
        *v *= scale;
    }
    *nodes.last_mut().unwrap() = 1.0;
    let part = TimePartition::from_nodes(nodes).unwrap();

    let space = FeSpace::uniform(0.0, PI, 8).unwrap();
    let m = assemble_mass(&space);
    let a = assemble_stiffness(&space);
    let sp = space.clone();
    let load = move |t: f64| assemble_load(&sp, |x| (2.0 * x).sin() * (1.0 + t).ln().cos());
    let init = DgState {
        u1: space.interpolate(|x| x.sin()).coeffs().to_vec(),
        u2: space.interpolate(|x| 0.5 * (3.0 * x).sin()).coeffs().to_vec(),
    };

    let mut worst: f64 = 0.0;
    for scheme in [DgScheme::Dg0, DgScheme::Dg1] {
        let traj = run(scheme, &m, &a, &part, init.clone(), Some(&load)).unwrap();
        let residuals = weak_form_residuals(&traj, &m, &a, Some(&load)).unwrap();
        for r in &residuals {
            worst = worst.max(r.max());
        }
    }
    report(
        6,
        "weak-form residual",
        worst <= 1e-10,
        &format!("max relative interval residual = {worst:.3e}, tolerance 1e-10"),
    );
}

#[test]
fn criterion_7_projection_properties() {
    // Idempotence on P1 functions.
    let space = FeSpace::uniform(0.0, PI, 16).unwrap();
    let w = space.interpolate(|x| x * (PI - x) / PI);
    let wc = w.coeffs().to_vec();
    let wf = {
        let sp = space.clone();
        let c = wc.clone();
        let sp2 = space.clone();
        let c2 = wc.clone();
        ExactField::new(move |x, _| sp.eval(&c, x), move |x, _| sp2.eval_dx(&c2, x))
    };
    let ritz = ritz_project(&space, &wf, 0.0).unwrap();
    let l2p = l2_project(&space, |x| wf.value(x, 0.0)).unwrap();
    let mut idem: f64 = 0.0;
    for d in 0..space.n_dof() {
        idem = idem.max((ritz.coeffs()[d] - wc[d]).abs());
        idem = idem.max((l2p.coeffs()[d] - wc[d]).abs());
    }

    // Orthogonality residuals against every basis function, recomputed
    // with a 10-point rule.
    let v = ExactField::new(|x, _| x.sin(), |x, _| x.cos());
    let r = ritz_project(&space, &v, 0.0).unwrap();
    let p = l2_project(&space, |x| v.value(x, 0.0)).unwrap();
    let mesh = space.mesh();
    let mut ortho: f64 = 0.0;
    for d in 0..space.n_dof() {
        let j = space.node_of_dof(d);
        let mut ra = 0.0;
        let mut rm = 0.0;
        for e in [j - 1, j] {
            let x0 = mesh.nodes()[e];
            let x1 = mesh.nodes()[e + 1];
            let h = x1 - x0;
            let dphi = if e == j - 1 { 1.0 / h } else { -1.0 / h };
            for (x, wq) in quadrature::gauss_on(x0, x1, 10) {
                let phi = if e == j - 1 { (x - x0) / h } else { (x1 - x) / h };
                ra += wq * (r.eval_dx(x) - v.dx(x, 0.0)) * dphi;
                rm += wq * (p.eval(x) - v.value(x, 0.0)) * phi;
            }
        }
        ortho = ortho.max(ra.abs()).max(rm.abs());
    }

    // L2-error EOC of both projections on sin x.
    let ladder = [8usize, 16, 32, 64, 128];
    let mut ritz_errs = Vec::new();
    let mut l2_errs = Vec::new();
    let mut hs = Vec::new();
    for &nx in &ladder {
        let s = FeSpace::uniform(0.0, PI, nx).unwrap();
        let r = ritz_project(&s, &v, 0.0).unwrap();
        let p = l2_project(&s, |x| v.value(x, 0.0)).unwrap();
        ritz_errs.push(error_norms(&r, &v, 0.0).0);
        l2_errs.push(error_norms(&p, &v, 0.0).0);
        hs.push(s.mesh().h_max());
    }
    let ritz_eoc = eoc(&ritz_errs, &hs).last().unwrap().unwrap();
    let l2_eoc = eoc(&l2_errs, &hs).last().unwrap().unwrap();

    let pass = idem <= 1e-12
        && ortho <= 1e-10
        && (1.8..=2.2).contains(&ritz_eoc)
        && (1.8..=2.2).contains(&l2_eoc);
    report(
        7,
        "projection properties",
        pass,
        &format!(
            "idempotence {idem:.2e} (<= 1e-12), orthogonality {ortho:.2e} (<= 1e-10), \
             Ritz L2 EOC {ritz_eoc:.3}, L2-projection EOC {l2_eoc:.3} (band [1.8, 2.2])"
        ),
    );
}

#[test]
fn criterion_8_interpolant_conditions_and_rates() {
    let u = |t: f64| t.cos();
    let mut detail = String::new();
    let mut pass = true;
    for q in [0usize, 1] {
        let rep = interpolation_rate_probe(&u, 1.0, &[8, 16, 32, 64], q).unwrap();
        let final_eoc = rep.eoc.last().unwrap().unwrap();
        let lo = q as f64 + 0.85;
        let hi = q as f64 + 1.15;
        pass &= rep.endpoint_residual <= 1e-12
            && rep.moment_residual <= 1e-12
            && (lo..=hi).contains(&final_eoc);
        detail.push_str(&format!(
            "q={q}: endpoint {:.1e}, moment {:.1e}, EOC {final_eoc:.3} (band [{lo:.2}, {hi:.2}]); ",
            rep.endpoint_residual, rep.moment_residual
        ));
    }
    report(8, "interpolant conditions and rates", pass, detail.trim_end());
}

#[test]
fn criterion_9_t_independence() {
    let k = 0.0005;
    let nx = 64;
    let mut pass = true;
    let mut detail = String::new();
    for scheme in [DgScheme::Dg0, DgScheme::Dg1] {
        let mut ratios = Vec::new();
        for t_final in [1.0f64, 10.0] {
            let nt = (t_final / k).round() as usize;
            let mut cfg = StudyConfig::new(scheme, BuiltinProblem::SinWave);
            cfg.t_final = t_final;
            let (ledger, rep, _) = run_audit(&cfg, nx, nt).unwrap();
            pass &= *ledger.e_node.last().unwrap() <= ledger.e0;
            ratios.push(rep.ratio);
        }
        let drift = (ratios[0] - ratios[1]).abs();
        pass &= drift <= 0.01;
        detail.push_str(&format!(
            "{scheme}: ratio(T=1) = {:.4}, ratio(T=10) = {:.4}, drift {drift:.4} (<= 0.01); ",
            ratios[0], ratios[1]
        ));
    }
    report(9, "T-independence of the stability ratio", pass, detail.trim_end());
}
