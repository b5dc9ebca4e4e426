//! Hybrid force/position NMPC for a hexacopter carrying a 3-DoF delta arm,
//! together with a closed-loop simulator for aerial writing missions and the
//! accuracy metrics used to evaluate them.

pub mod allocation;
pub mod boxqp;
pub mod delta;
pub mod dynamics;
pub mod eval;
pub mod geometry;
pub mod nmpc;
pub mod params;
pub mod sim;
pub mod state;
pub mod trajgen;

pub use geometry::{Mat3, Rigid2, Transform, UnitQuat, Vec2, Vec3};
pub use params::{ContactSurface, VehicleParams};
pub use state::{ControlInput, ReferencePoint, RigidBodyState, Stage};
