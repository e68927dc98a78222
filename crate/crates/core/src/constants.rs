//! CODATA 2018 SI constants.

pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Rb-87 atomic mass in kg.
pub const RB87_MASS: f64 = 1.443_160_648e-25;
/// Rb D2 vacuum wavelength in m.
pub const RB_D2_WAVELENGTH: f64 = 780.241_209_686e-9;
