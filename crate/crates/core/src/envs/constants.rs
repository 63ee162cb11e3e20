//! Physical constants, episode limits and per-task reference values.
//!
//! Pendulum and mountain car follow the classic-control reference dynamics.
//! The cart-pole is a continuous-force variant standing in for the MuJoCo
//! inverted pendulum: same +1 survival reward, 0.2 rad failure angle and
//! 1000-step horizon, but rigid-body Euler dynamics instead of contacts.

use core::f64::consts::PI;

pub mod pendulum {
    pub const GRAVITY: f64 = 10.0;
    pub const MASS: f64 = 1.0;
    pub const LENGTH: f64 = 1.0;
    pub const DT: f64 = 0.05;
    pub const MAX_TORQUE: f64 = 2.0;
    pub const MAX_SPEED: f64 = 8.0;
    pub const MAX_STEPS: usize = 200;
    /// Initial angle is uniform in `±INIT_ANGLE`, angular velocity in `±INIT_SPEED`.
    pub const INIT_ANGLE: f64 = super::PI;
    pub const INIT_SPEED: f64 = 1.0;
    pub const SPEED_COST: f64 = 0.1;
    pub const TORQUE_COST: f64 = 0.001;
}

pub mod mountain_car {
    pub const MIN_ACTION: f64 = -1.0;
    pub const MAX_ACTION: f64 = 1.0;
    pub const MIN_POSITION: f64 = -1.2;
    pub const MAX_POSITION: f64 = 0.6;
    pub const MAX_SPEED: f64 = 0.07;
    pub const GOAL_POSITION: f64 = 0.45;
    pub const GOAL_VELOCITY: f64 = 0.0;
    pub const POWER: f64 = 0.0015;
    pub const HILL: f64 = 0.0025;
    pub const GOAL_REWARD: f64 = 100.0;
    pub const ACTION_COST: f64 = 0.1;
    pub const INIT_LOW: f64 = -0.6;
    pub const INIT_HIGH: f64 = -0.4;
    pub const MAX_STEPS: usize = 999;
    /// Nominal seconds per step; the task itself is unitless.
    pub const DT: f64 = 1.0;
}

pub mod cartpole {
    pub const GRAVITY: f64 = 9.8;
    pub const CART_MASS: f64 = 1.0;
    pub const POLE_MASS: f64 = 0.1;
    /// Half the pole length.
    pub const HALF_LENGTH: f64 = 0.5;
    pub const MAX_FORCE: f64 = 3.0;
    pub const DT: f64 = 0.02;
    /// The episode fails once |θ| exceeds this.
    pub const ANGLE_LIMIT: f64 = 0.2;
    /// Hard end stops of the track; the cart halts there and the episode goes on.
    pub const TRACK_LIMIT: f64 = 1.0;
    pub const INIT_BAND: f64 = 0.01;
    pub const MAX_STEPS: usize = 1000;
}

/// Fixed `(min, max)` episode returns used to normalise learning curves.
pub mod return_bounds {
    pub const PENDULUM: (f64, f64) = (-1600.0, 0.0);
    pub const MOUNTAIN_CAR: (f64, f64) = (-100.0, 100.0);
    pub const CARTPOLE: (f64, f64) = (0.0, 1000.0);
}

/// Typical per-step reward magnitude; the default fast-action penalty is a
/// tenth of it.
pub mod reward_scale {
    pub const PENDULUM: f64 = 1.0;
    pub const MOUNTAIN_CAR: f64 = 0.1;
    pub const CARTPOLE: f64 = 1.0;
}
