//! Physical constants (CODATA 2018, 9 significant figures where available).

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_82e-34;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_81e-12;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649_00e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_63e-19;
/// Avogadro constant, 1/mol.
pub const AVOGADRO: f64 = 6.022_140_76e23;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_11e-11;
/// Atomic mass unit in eV/c^2.
pub const AMU_EV: f64 = 9.314_941_02e8;
/// Electron rest energy, eV.
pub const ELECTRON_REST_EV: f64 = 5.109_989_50e5;
/// Coulomb constant times e^2, in eV m: e^2 / (4 pi eps0).
pub const COULOMB_EV_M: f64 = 1.439_964_55e-9;
