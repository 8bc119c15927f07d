//! Bistable nonlinearities, 1D wave profiles and cylinder potentials.

mod front;
mod hypotheses;
mod nonlinearity;
mod potential;
mod wave;

pub use front::{exact_front, FrontProfile};
pub use hypotheses::{check_hypotheses, gap_curves, H3Status, HypothesisReport};
pub use nonlinearity::{make_cubic, Nonlinearity};
pub use potential::{
    front_potential, glued_potential, periodic_grid, separable_potential, synth_example_potential, uniform_grid,
    BoundaryCondition, CrossSection, CylinderPotential,
};
pub use wave::{energy_range, min_period, period_function, periodic_wave, turning_points, StandingWaveProfile, WAVE_STEPS};
