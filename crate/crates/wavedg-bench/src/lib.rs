//! Shared fixtures for the kernel benchmarks.

use wavedg::{assemble_mass, assemble_stiffness, DgState, FeSpace, SparseMatrix};

pub struct Fixture {
    pub space: FeSpace,
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub state: DgState,
}

pub fn fixture(nx: usize) -> Fixture {
    let space = FeSpace::uniform(0.0, std::f64::consts::PI, nx).expect("valid mesh");
    let mass = assemble_mass(&space);
    let stiffness = assemble_stiffness(&space);
    let state = DgState {
        u1: space.interpolate(|x| x.sin()).coeffs().to_vec(),
        u2: space.interpolate(|x| (2.0 * x).sin()).coeffs().to_vec(),
    };
    Fixture {
        space,
        mass,
        stiffness,
        state,
    }
}
