//! Electronic stopping cross sections and displacement-damage estimates.
//!
//! Stopping for He and H projectiles in carbon is taken from embedded tables
//! (log-log interpolated) of the stopping cross section per target atom,
//! assembled from a velocity-proportional low-energy branch joined to a
//! shell-corrected Bethe branch through the stopping maximum. Scaling to any
//! carbon target density (graphite, diamond) is linear in atomic density.
//! Above the table maximum a Bethe-form extrapolation is used up to 10 MeV.

use super::{TargetMaterial, TransportError};
use crate::constants::ELECTRON_REST_EV;

/// Stopping cross section table: (lab energy eV, eV cm^2 per atom).
pub(crate) const HE_IN_CARBON: [(f64, f64); 49] = [
    (1.000000e1, 1.502082e-16),
    (1.333521e1, 1.734577e-16),
    (1.778279e1, 2.003058e-16),
    (2.371374e1, 2.313096e-16),
    (3.162278e1, 2.671121e-16),
    (4.216965e1, 3.084563e-16),
    (5.623413e1, 3.561997e-16),
    (7.498942e1, 4.113331e-16),
    (1.000000e2, 4.750000e-16),
    (1.333521e2, 5.485214e-16),
    (1.778279e2, 6.334227e-16),
    (2.371374e2, 7.314651e-16),
    (3.162278e2, 8.446827e-16),
    (4.216965e2, 9.754244e-16),
    (5.623413e2, 1.126403e-15),
    (7.498942e2, 1.300749e-15),
    (1.000000e3, 1.502082e-15),
    (1.333521e3, 1.734577e-15),
    (1.778279e3, 2.003058e-15),
    (2.371374e3, 2.313096e-15),
    (3.162278e3, 2.671121e-15),
    (4.216965e3, 3.084563e-15),
    (5.623413e3, 3.561997e-15),
    (7.498942e3, 4.113331e-15),
    (1.000000e4, 4.750000e-15),
    (1.333521e4, 5.485214e-15),
    (1.778279e4, 6.334227e-15),
    (2.371374e4, 7.314651e-15),
    (3.162278e4, 8.446827e-15),
    (4.216965e4, 9.769077e-15),
    (5.623413e4, 1.190959e-14),
    (7.498942e4, 1.532987e-14),
    (1.000000e5, 2.017840e-14),
    (1.333521e5, 2.630578e-14),
    (1.778279e5, 3.289579e-14),
    (2.371374e5, 3.821758e-14),
    (3.162278e5, 4.007445e-14),
    (4.216965e5, 4.130571e-14),
    (5.623413e5, 4.273323e-14),
    (7.498942e5, 4.256657e-14),
    (1.000000e6, 3.936761e-14),
    (1.333521e6, 3.488272e-14),
    (1.778279e6, 3.019359e-14),
    (2.371374e6, 2.565951e-14),
    (3.162278e6, 2.148975e-14),
    (4.216965e6, 1.778630e-14),
    (5.623413e6, 1.457963e-14),
    (7.498942e6, 1.185601e-14),
    (1.000000e7, 9.577003e-15),
];

pub(crate) const H_IN_CARBON: [(f64, f64); 49] = [
    (1.000000e1, 2.213594e-16),
    (1.333521e1, 2.556219e-16),
    (1.778279e1, 2.951876e-16),
    (2.371374e1, 3.408773e-16),
    (3.162278e1, 3.936389e-16),
    (4.216965e1, 4.545671e-16),
    (5.623413e1, 5.249259e-16),
    (7.498942e1, 6.061750e-16),
    (1.000000e2, 7.000000e-16),
    (1.333521e2, 8.083474e-16),
    (1.778279e2, 9.334650e-16),
    (2.371374e2, 1.077949e-15),
    (3.162278e2, 1.244796e-15),
    (4.216965e2, 1.437468e-15),
    (5.623413e2, 1.659962e-15),
    (7.498942e2, 1.916894e-15),
    (1.000000e3, 2.213594e-15),
    (1.333521e3, 2.556219e-15),
    (1.778279e3, 2.951876e-15),
    (2.371374e3, 3.408773e-15),
    (3.162278e3, 3.936389e-15),
    (4.216965e3, 4.545671e-15),
    (5.623413e3, 5.249259e-15),
    (7.498942e3, 6.061750e-15),
    (1.000000e4, 7.000000e-15),
    (1.333521e4, 8.083474e-15),
    (1.778279e4, 9.334650e-15),
    (2.371374e4, 1.077949e-14),
    (3.162278e4, 1.244796e-14),
    (4.216965e4, 1.437146e-14),
    (5.623413e4, 1.620616e-14),
    (7.498942e4, 1.680459e-14),
    (1.000000e5, 1.524920e-14),
    (1.333521e5, 1.341078e-14),
    (1.778279e5, 1.180934e-14),
    (2.371374e5, 1.037527e-14),
    (3.162278e5, 9.061783e-15),
    (4.216965e5, 7.838933e-15),
    (5.623413e5, 6.675457e-15),
    (7.498942e5, 5.600092e-15),
    (1.000000e6, 4.641563e-15),
    (1.333521e6, 3.809357e-15),
    (1.778279e6, 3.100997e-15),
    (2.371374e6, 2.507232e-15),
    (3.162278e6, 2.015530e-15),
    (4.216965e6, 1.612319e-15),
    (5.623413e6, 1.284320e-15),
    (7.498942e6, 1.019283e-15),
    (1.000000e7, 8.063261e-16),
];

/// Hard upper bound of the supported projectile energy range, eV.
pub const MAX_SUPPORTED_ENERGY_EV: f64 = 1.0e7;

fn table_for(species_z: u32) -> Option<&'static [(f64, f64)]> {
    match species_z {
        1 => Some(&H_IN_CARBON),
        2 => Some(&HE_IN_CARBON),
        _ => None,
    }
}

/// Log-log interpolation of a stopping table at energy `e` (eV), returning
/// the cross section in eV cm^2 per atom. `e` must lie within the table.
fn interp_loglog(table: &[(f64, f64)], e: f64) -> f64 {
    let idx = table.partition_point(|&(te, _)| te < e);
    if idx == 0 {
        return table[0].1;
    }
    if idx >= table.len() {
        return table[table.len() - 1].1;
    }
    let (e0, s0) = table[idx - 1];
    let (e1, s1) = table[idx];
    let t = (e / e0).ln() / (e1 / e0).ln();
    (s0.ln() + t * (s1.ln() - s0.ln())).exp()
}

/// Bethe-form extrapolation anchored at the table end, eV cm^2 per atom.
fn bethe_extrapolation(table: &[(f64, f64)], e: f64, mass_amu: f64, i_ev: f64) -> f64 {
    let (e_end, s_end) = table[table.len() - 1];
    let bethe = |en: f64| {
        let beta2 = 2.0 * en / (mass_amu * crate::constants::AMU_EV);
        (2.0 * ELECTRON_REST_EV * beta2 / i_ev).ln() / beta2
    };
    s_end * bethe(e) / bethe(e_end)
}

/// Electronic stopping power for the ion species in the target, eV/m.
///
/// The supported projectiles are H (Z=1) and He (Z=2) in carbon-based
/// targets; the cross section scales linearly with the target atomic
/// density, so a zero-density target stops nothing.
pub fn electronic_stopping(
    energy_ev: f64,
    species_z: u32,
    species_mass_amu: f64,
    target: &TargetMaterial,
) -> Result<f64, TransportError> {
    let table = table_for(species_z).ok_or(TransportError::UnsupportedSpecies {
        species_z,
    })?;
    if target.atomic_z != 6 {
        return Err(TransportError::UnsupportedTarget {
            atomic_z: target.atomic_z,
        });
    }
    if !(energy_ev > 0.0) || energy_ev > MAX_SUPPORTED_ENERGY_EV {
        return Err(TransportError::EnergyOutOfRange {
            energy_ev,
            max_ev: MAX_SUPPORTED_ENERGY_EV,
        });
    }
    let per_atom = if energy_ev > table[table.len() - 1].0 {
        bethe_extrapolation(
            table,
            energy_ev,
            species_mass_amu,
            target.mean_ionization_energy_ev,
        )
    } else {
        interp_loglog(table, energy_ev)
    };
    // eV cm^2 * atoms/cm^3 = eV/cm; * 100 = eV/m.
    Ok(per_atom * target.atomic_density_cm3 * 100.0)
}

/// Lindhard-Scharff electronic stopping cross section for slow recoils,
/// eV cm^2 per atom. Used for target-atom recoils in full-cascade mode.
pub(crate) fn lindhard_scharff(energy_ev: f64, z1: f64, m1_amu: f64, z2: f64) -> f64 {
    if energy_ev <= 0.0 {
        return 0.0;
    }
    let k = 1.212 * z1.powf(7.0 / 6.0) * z2
        / ((z1.powf(2.0 / 3.0) + z2.powf(2.0 / 3.0)).powf(1.5) * m1_amu.sqrt());
    k * energy_ev.sqrt() * 1e-15
}

/// Modified Kinchin-Pease (NRT) displacement count for a transferred energy
/// `t_ev` against threshold `e_d`: 0 below threshold, 1 in the
/// single-displacement band, 0.8 T / (2 E_d) above it. Returns the
/// expectation value; fractional results are meaningful.
pub fn nrt_vacancies(t_ev: f64, e_d: f64) -> f64 {
    if t_ev < e_d {
        0.0
    } else if t_ev < 2.0 * e_d / 0.8 {
        1.0
    } else {
        0.8 * t_ev / (2.0 * e_d)
    }
}

/// NRT damage-energy partition for a carbon recoil of energy `t_ev` in a
/// target of atomic number `z` and mass `a`: the fraction of the recoil
/// energy available for further displacements after electronic losses
/// within the sub-cascade (Robinson's fit to the Lindhard partition).
pub fn damage_energy(t_ev: f64, z: f64, a: f64) -> f64 {
    if t_ev <= 0.0 {
        return 0.0;
    }
    let el = 86.931 * z.powf(7.0 / 3.0);
    let eps = t_ev / el;
    let g = 3.4008 * eps.powf(1.0 / 6.0) + 0.40244 * eps.powf(0.75) + eps;
    let k = 0.1337 * z.powf(1.0 / 6.0) * (z / a).sqrt();
    t_ev / (1.0 + k * g)
}
