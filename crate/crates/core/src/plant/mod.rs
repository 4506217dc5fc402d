//! Planar multibody plant: human and exoskeleton segments, ground contact,
//! actuation and time integration.

pub mod body;
pub mod contact;
pub mod dynamics;
pub mod forces;
pub mod integrate;
pub mod kinematics;
pub mod log;
pub mod system;

pub use body::{BodyParams, Joint, Segment, SegmentParams};
pub use contact::{ContactParams, Ground, SphereContact};
pub use dynamics::EomTerms;
pub use forces::{InteractionParams, JointLimitParams};
pub use kinematics::{BodyId, Kinematics, MatQ, VecQ, NQ};
pub use log::{LogRow, LOG_SCHEMA_VERSION};
pub use system::{
    rollout, ExoInput, ExoTorque, InitialPose, PassiveExo, PlantEval, PlantModel, Rollout,
    Simulation, StateVec, Termination, Timing, NX,
};
