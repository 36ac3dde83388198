//! Binary-asteroid dynamical environment.
//!
//! The spacecraft moves in a barycentric, ecliptic-aligned quasi-inertial
//! frame under the point-mass attraction of both asteroids, the solar tide
//! and cannonball solar radiation pressure. The Sun is realized by an
//! unperturbed heliocentric Kepler orbit of the system barycenter, and the
//! two asteroids by a circular mutual orbit in the primary's equatorial
//! plane.

mod ephemeris;
mod epoch;
mod forces;
mod frames;
pub mod integrator;
mod model;
mod propagation;

pub use ephemeris::{
    asteroid_states, body_position, heliocentric_state, kepler_solve, sun_direction, sun_position,
};
pub use epoch::{Epoch, DAY, HOUR};
pub use forces::{
    accel_fourbody, accel_srp, accel_total, gravity_gradient, jacobian, phase_angle, AccelParts,
    Dynamics, Environment, ForceFlags, Perturbation,
};
pub use frames::{
    from_sun_south_frame, sun_south_rotation, to_sun_south_frame, FrameId, StateVector,
};
pub use model::{
    pole_from_ecliptic, Body, HelioElements, SpacecraftModel, SystemModel, AU, G, MU_SUN,
    SOLAR_FLUX_1AU, SPEED_OF_LIGHT,
};
pub use propagation::{
    propagate, propagate_augmented, propagate_dense, propagate_until, propagate_with_stm,
    AugmentedTransition, PropagationOptions, Stm, Trajectory,
};
