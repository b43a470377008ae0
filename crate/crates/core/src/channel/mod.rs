//! Scenario description and synthesis of scattering matrices for the RIS link:
//! geometry, Rician transmission blocks, the tabulated RIS coupling block and
//! Touchstone import/export.

mod coupling;
mod geometry;
mod scenario;
mod synth;
mod touchstone;

pub use coupling::{build_coupling_matrix, coupling_table, CouplingModel, PhaseMode, COUPLING_TABLE};
pub use geometry::{array_response, azimuth, distance, path_loss_db, upa_positions, LinkGeometry, Point};
pub use scenario::{PathLossExponents, Scenario};
pub use synth::{rician_block, synthesize, synthesize_seeded, CouplingSource, Link, SynthesizedNetwork};
pub use touchstone::{load_touchstone, parse_touchstone, write_touchstone, TouchstoneData, TouchstoneFormat};
