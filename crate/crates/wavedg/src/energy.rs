//! Discrete energy identity along a trajectory: final energy plus
//! accumulated jump energy equals initial energy plus load work.
//!
//! Energies are the discrete instances `||v||_1^2 = v' A v` and
//! `||v||^2 = v' M v`. The work integral reuses the stepper's load
//! moments, so a solved trajectory balances to solver precision.

use crate::error::Result;
use crate::sparse::SparseMatrix;
use crate::stepper::{
    dg0_time_load, dg1_time_moments, DgScheme, DgState, DgTrajectory, SpatialLoad,
};

/// Discrete energy `u1' A u1 + u2' M u2` of a state.
pub fn energy(m: &SparseMatrix, a: &SparseMatrix, state: &DgState) -> Result<f64> {
    Ok(a.quadratic_form(&state.u1, &state.u1)? + m.quadratic_form(&state.u2, &state.u2)?)
}

/// Per-node energy bookkeeping for the identity
/// `e_node[N] + jump_sum = e0 + work`.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    /// Energy of the minus limit at every node; `e_node[0] = e0`.
    pub e_node: Vec<f64>,
    /// Cumulative jump energy up to (and including) node n - 1.
    pub jump_cum: Vec<f64>,
    /// Cumulative load work `2 int (f, U2) dt` up to node n.
    pub work_cum: Vec<f64>,
    /// Initial energy.
    pub e0: f64,
}

impl EnergyLedger {
    /// Total accumulated jump energy.
    pub fn jump_sum(&self) -> f64 {
        *self.jump_cum.last().unwrap()
    }

    /// Total accumulated load work.
    pub fn work(&self) -> f64 {
        *self.work_cum.last().unwrap()
    }

    /// Identity residual `e_node[N] + jump_sum - e0 - work`.
    pub fn residual(&self) -> f64 {
        self.e_node.last().unwrap() + self.jump_sum() - self.e0 - self.work()
    }

    /// Residual relative to the initial energy (or to the largest ledger
    /// entry when starting from zero data).
    pub fn residual_rel(&self) -> f64 {
        let scale = self
            .e_node
            .iter()
            .copied()
            .fold(self.e0.max(self.work().abs()), f64::max);
        if scale == 0.0 {
            self.residual().abs()
        } else {
            self.residual().abs() / scale
        }
    }

    /// Partial identity residual at node n.
    pub fn residual_at(&self, n: usize) -> f64 {
        self.e_node[n] + self.jump_cum[n] - self.e0 - self.work_cum[n]
    }
}

/// Evaluate both sides of the energy identity along a trajectory.
///
/// The work term integrates `2 (f, U2)` per interval with the same
/// Gauss moments the step systems used, which makes the identity exact
/// up to solver residuals even for quadrature-approximated loads.
pub fn audit(
    traj: &DgTrajectory,
    m: &SparseMatrix,
    a: &SparseMatrix,
    load: Option<SpatialLoad>,
) -> Result<EnergyLedger> {
    let n_nodes = traj.n_intervals() + 1;
    let n_dof = m.n_rows();
    let mut e_node = Vec::with_capacity(n_nodes);
    let mut jump_cum = Vec::with_capacity(n_nodes);
    let mut work_cum = Vec::with_capacity(n_nodes);

    let state_energy = |u1: &[f64], u2: &[f64]| -> Result<f64> {
        Ok(a.quadratic_form(u1, u1)? + m.quadratic_form(u2, u2)?)
    };

    let (i1, i2) = traj.minus_at_node(0);
    let e0 = state_energy(i1, i2)?;
    e_node.push(e0);
    jump_cum.push(0.0);
    work_cum.push(0.0);

    let jumps = traj.jumps();
    let mut jac = 0.0;
    let mut wac = 0.0;
    for n in 0..traj.n_intervals() {
        let (j1, j2) = &jumps[n];
        jac += a.quadratic_form(j1, j1)? + m.quadratic_form(j2, j2)?;

        let t0 = traj.partition().node(n);
        let t1 = traj.partition().node(n + 1);
        let rec = traj.interval(n);
        wac += match traj.scheme() {
            DgScheme::Dg0 => {
                let f = dg0_time_load(load, t0, t1, n_dof);
                2.0 * dot(&f, &rec.u2_minus)
            }
            DgScheme::Dg1 => {
                let (f1, f2) = dg1_time_moments(load, t0, t1, n_dof);
                2.0 * (dot(&f1, &rec.u2_plus) + dot(&f2, &rec.u2_minus))
            }
        };

        let (m1, m2) = traj.minus_at_node(n + 1);
        e_node.push(state_energy(m1, m2)?);
        jump_cum.push(jac);
        work_cum.push(wac);
    }

    Ok(EnergyLedger {
        e_node,
        jump_cum,
        work_cum,
        e0,
    })
}

/// Observed stability ratio against the data-plus-load bracket.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// `||U1_N^-||_1 + ||U2_N^-||`.
    pub lhs: f64,
    /// `||u_{h,0}||_1 + ||v_{h,0}|| + int (||P_h f2||) dt` (f1 = 0 here).
    pub rhs: f64,
    /// `lhs / rhs`, the observed stability constant.
    pub ratio: f64,
    /// Both sides vanished; the ratio is meaningless.
    pub degenerate: bool,
}

/// Check the stability estimate: reports the ratio of the final state
/// norms to the initial-data-plus-load bracket. With no load the energy
/// identity forces `ratio <= sqrt(2)`.
pub fn stability_bound_check(
    traj: &DgTrajectory,
    m: &SparseMatrix,
    a: &SparseMatrix,
    load: Option<SpatialLoad>,
) -> Result<StabilityReport> {
    let final_state = traj.final_state();
    let lhs = a
        .quadratic_form(&final_state.u1, &final_state.u1)?
        .sqrt()
        + m.quadratic_form(&final_state.u2, &final_state.u2)?.sqrt();

    let (i1, i2) = traj.minus_at_node(0);
    let mut rhs =
        a.quadratic_form(i1, i1)?.sqrt() + m.quadratic_form(i2, i2)?.sqrt();

    if let Some(f) = load {
        // int ||P_h f2|| dt with (q+2)-point Gauss per interval; the
        // projection norm is ||c||_M with M c = b.
        let factors = crate::sparse::factorize(m, true)?;
        let pts = traj.scheme().q() + 2;
        for n in 0..traj.n_intervals() {
            let t0 = traj.partition().node(n);
            let t1 = traj.partition().node(n + 1);
            for (t, w) in crate::quadrature::gauss_on(t0, t1, pts) {
                let b = f(t);
                let c = crate::sparse::solve_prefactored(m, &factors, &b)?;
                rhs += w * m.quadratic_form(&c, &c)?.sqrt();
            }
        }
    }

    let degenerate = lhs == 0.0 && rhs == 0.0;
    let ratio = if degenerate { 0.0 } else { lhs / rhs };
    Ok(StabilityReport {
        lhs,
        rhs,
        ratio,
        degenerate,
    })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_load, assemble_mass, assemble_stiffness, ExactField, FeSpace};
    use crate::quadrature::gauss_on;
    use crate::stepper::{initial_state, run, TimePartition};
    use std::f64::consts::PI;

    fn setup(nx: usize) -> (FeSpace, SparseMatrix, SparseMatrix) {
        let space = FeSpace::uniform(0.0, PI, nx).unwrap();
        let m = assemble_mass(&space);
        let a = assemble_stiffness(&space);
        (space, m, a)
    }

    fn sin_init(space: &FeSpace) -> DgState {
        let u0 = ExactField::new(|x, _| x.sin(), |x, _| x.cos());
        initial_state(space, &u0, &ExactField::zero()).unwrap()
    }

    #[test]
    fn energy_reference_values() {
        let (space, m, a) = setup(64);
        assert_eq!(energy(&m, &a, &DgState::zero(space.n_dof())).unwrap(), 0.0);

        // ||sin||_1^2 = int cos^2 = pi/2, up to O(h^2).
        let st = sin_init(&space);
        let e = energy(&m, &a, &st).unwrap();
        assert!((e - PI / 2.0).abs() < 5e-3, "energy {e}");

        // Quadratic form: sign flip leaves the energy unchanged.
        let flipped = DgState {
            u1: st.u1.iter().map(|v| -v).collect(),
            u2: st.u2.iter().map(|v| -v).collect(),
        };
        assert_eq!(e, energy(&m, &a, &flipped).unwrap());
    }

    #[test]
    fn identity_holds_without_load() {
        let (space, m, a) = setup(16);
        let init = sin_init(&space);
        for scheme in [DgScheme::Dg0, DgScheme::Dg1] {
            let part = TimePartition::uniform(1.0, 10).unwrap();
            let traj = run(scheme, &m, &a, &part, init.clone(), None).unwrap();
            let ledger = audit(&traj, &m, &a, None).unwrap();
            assert!(
                ledger.residual().abs() <= 1e-10 * ledger.e0,
                "{scheme}: residual {:.2e}",
                ledger.residual()
            );
            // f = 0: final energy plus jump energy equals e0, so the
            // node energies cannot exceed e0.
            assert!(ledger.e_node.last().unwrap() <= &ledger.e0);
            // Ledger terms other than work are nonnegative.
            assert!(ledger.e_node.iter().all(|e| *e >= 0.0));
            assert!(ledger.jump_cum.iter().all(|j| *j >= 0.0));
        }
    }

    #[test]
    fn node_energies_decrease_without_load() {
        let (space, m, a) = setup(16);
        let init = sin_init(&space);
        for scheme in [DgScheme::Dg0, DgScheme::Dg1] {
            let part = TimePartition::uniform(1.0, 20).unwrap();
            let traj = run(scheme, &m, &a, &part, init.clone(), None).unwrap();
            let ledger = audit(&traj, &m, &a, None).unwrap();
            for w in ledger.e_node.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{scheme}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn identity_holds_with_manufactured_load() {
        let (space, m, a) = setup(12);
        let sp = space.clone();
        let load = move |t: f64| assemble_load(&sp, |x| (2.0 * x).sin() * (0.7 * t).cos());
        let init = sin_init(&space);
        for scheme in [DgScheme::Dg0, DgScheme::Dg1] {
            let part = TimePartition::uniform(1.0, 24).unwrap();
            let traj = run(scheme, &m, &a, &part, init.clone(), Some(&load)).unwrap();
            let ledger = audit(&traj, &m, &a, Some(&load)).unwrap();
            assert!(
                ledger.residual_rel() <= 1e-12,
                "{scheme}: relative residual {:.2e}",
                ledger.residual_rel()
            );

            // High-order time-quadrature oracle for the work integral:
            // the identity still balances to 1e-9 relative.
            let mut work = 0.0;
            for n in 0..traj.n_intervals() {
                let t0 = part.node(n);
                let t1 = part.node(n + 1);
                for (t, w) in gauss_on(t0, t1, 6) {
                    let b = load(t);
                    let (_, u2) = traj.eval_in_interval(n, t);
                    work += 2.0 * w * dot(&b, &u2);
                }
            }
            let res = ledger.e_node.last().unwrap() + ledger.jump_sum() - ledger.e0 - work;
            assert!(
                res.abs() <= 1e-9 * ledger.e0,
                "{scheme}: oracle residual {res:.2e}"
            );
        }
    }

    #[test]
    fn stability_ratio_bounded_without_load() {
        let (space, m, a) = setup(16);
        let init = sin_init(&space);
        for scheme in [DgScheme::Dg0, DgScheme::Dg1] {
            let part = TimePartition::uniform(1.0, 25).unwrap();
            let traj = run(scheme, &m, &a, &part, init.clone(), None).unwrap();
            let rep = stability_bound_check(&traj, &m, &a, None).unwrap();
            assert!(!rep.degenerate);
            assert!(
                rep.ratio <= 2.0_f64.sqrt() + 1e-12,
                "{scheme}: ratio {}",
                rep.ratio
            );
        }
    }

    #[test]
    fn stability_flags_degenerate_zero_problem() {
        let (space, m, a) = setup(8);
        let part = TimePartition::uniform(1.0, 4).unwrap();
        let traj = run(
            DgScheme::Dg1,
            &m,
            &a,
            &part,
            DgState::zero(space.n_dof()),
            None,
        )
        .unwrap();
        let rep = stability_bound_check(&traj, &m, &a, None).unwrap();
        assert!(rep.degenerate);
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs, 0.0);
    }
}
