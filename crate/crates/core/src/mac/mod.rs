//! TDD frame, traffic, scheduling and the simulation loop.

pub mod engine;
pub mod scheduler;
pub mod tdd;
pub mod traffic;

pub use engine::{run_simulation, SimConfig};
pub use scheduler::{rr_schedule, Bearer, SlotSchedule};
pub use tdd::slot_type;
pub use traffic::{generate_traffic, CbrSource};
