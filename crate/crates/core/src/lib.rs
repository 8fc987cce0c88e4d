//! Restoration scheduling for blacked-out transmission grids.
//!
//! Given a network with black-start (BS) and non-black-start (NBS)
//! generators, a set of damaged lines and a per-step repair budget,
//! [`restore::solve`] finds the repair sequence and NBS energization times
//! that minimize total unserved load over the horizon.
//!
//! ```no_run
//! use gridrestore::{io, restore};
//!
//! let case = io::load_case("data/cases/ieee9.json".as_ref())?;
//! let scenario = io::load_scenario("data/scenarios/ieee9_all.json".as_ref(), &case)?;
//! let outcome = restore::solve(&case, &scenario, &restore::SolveOptions::default())?;
//! println!("unserved energy: {}", outcome.plan.objective);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod grid;
pub mod io;
pub mod model;
pub mod oracle;
pub mod report;
pub mod restore;
pub mod solver;
