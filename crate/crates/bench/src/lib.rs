//! Shared problem instances for the kernel benchmarks.

use cylspec::cylinder::{assemble_cylinder, DiscreteOperator};
use cylspec::profiles::{make_cubic, periodic_wave, synth_example_potential, uniform_grid, BoundaryCondition, CrossSection, Nonlinearity};

pub fn cubic() -> Nonlinearity {
    make_cubic(0.5).expect("valid cubic")
}

/// Standing-wave cylinder with `n_x × n_z` unknowns and speed 1/2.
pub fn cylinder(n_x: usize, n_z: usize) -> DiscreteOperator {
    let f = cubic();
    let w = periodic_wave(&f, 4.5 * std::f64::consts::PI, 1e-12).expect("orbit exists");
    let cs = CrossSection::interval(w.period, BoundaryCondition::Periodic, n_x).expect("cross-section");
    let v = synth_example_potential(&f, &w, 1.0, cs, uniform_grid(-20.0, 20.0, n_z)).expect("potential");
    assemble_cylinder(&v, 0.5, BoundaryCondition::Dirichlet).expect("operator")
}
