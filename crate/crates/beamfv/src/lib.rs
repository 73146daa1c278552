//! Cell-centred finite-volume solver for geometrically exact beams.
//!
//! The model is the Simo-Reissner beam with arbitrary initial curvature in a
//! total Lagrangian setting: six strain measures (three force, three moment)
//! work-conjugate to stress resultants through diagonal elastic moduli, with
//! cross-section rotations parametrised by rotation vectors on SO(3).
//!
//! Discretisation is cell-centred on a uniform one-dimensional mesh. Each
//! control volume carries displacement and rotation increments at its centre;
//! equilibrium of force and moment fluxes through the two cell faces yields a
//! 6x6 block-tridiagonal Newton-Raphson system per load increment, solved
//! directly by a block Thomas sweep.
//!
//! The crate is no_std-compatible (`default-features = false` plus the `libm`
//! feature); `alloc` is required.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("beamfv needs a float math provider: enable `std` or `libm`");

pub(crate) mod math;

pub mod assembly;
#[cfg(feature = "std")]
pub mod bench;
pub mod boundary;
pub mod case;
pub mod geometry;
pub mod so3;
pub mod solver;
pub mod state;
