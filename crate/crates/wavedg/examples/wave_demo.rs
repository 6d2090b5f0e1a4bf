//! Solve the standing-wave problem with dG(1)-cG(1), audit the energy
//! identity, and print a temporal rate table.
//!
//! Run with `cargo run --release --example wave_demo`.

use wavedg::*;

fn main() -> Result<()> {
    let space = FeSpace::uniform(0.0, std::f64::consts::PI, 64)?;
    let m = assemble_mass(&space);
    let a = assemble_stiffness(&space);
    let sol = ManufacturedSolution::default_example();
    let init = sol.initial_state(&space)?;
    let part = TimePartition::uniform(1.0, 32)?;
    let traj = run(DgScheme::Dg1, &m, &a, &part, init, None)?;

    let (l2, h1, v_l2) = nodal_errors(&traj, &space, &sol);
    println!("final-time errors: u1 L2 = {l2:.3e}, u1 H1 = {h1:.3e}, u2 L2 = {v_l2:.3e}");

    let ledger = audit(&traj, &m, &a, None)?;
    println!(
        "energy identity: e0 = {:.6}, eN = {:.6}, jumps = {:.3e}, residual = {:.3e}",
        ledger.e0,
        ledger.e_node.last().unwrap(),
        ledger.jump_sum(),
        ledger.residual()
    );

    let mut cfg = StudyConfig::new(DgScheme::Dg1, BuiltinProblem::SinWave);
    cfg.nx = vec![256];
    cfg.nt = vec![8, 16, 32, 64];
    cfg.baseline = ErrorBaseline::DiscreteMode;
    let table = run_temporal_study(&cfg)?;
    print!("{}", table.to_csv());
    Ok(())
}
