//! Binary-collision Monte Carlo transport of light MeV ions in diamond.
//!
//! The kernel follows the amorphous-target TRIM scheme: free-flight paths
//! with a high-energy path extension (Biersack-Haggmark), ZBL universal
//! screening with the magic-formula scattering angle, tabulated electronic
//! stopping, and quick Kinchin-Pease damage accounting in which each recoil
//! above the displacement threshold contributes its NRT displacement count
//! at the collision site. Recoils can instead be followed recursively with
//! `follow_recoils`.
//!
//! Determinism: each ion draws from its own counter-based random stream
//! derived from `(rng_seed, ion index)`, ions are accumulated in fixed-size
//! batches, and batches are merged in index order, so results are bit-stable
//! for any worker count.

mod screening;
mod stopping;

pub use screening::{scattering_angle, screening_length, CollisionPair};
pub use stopping::{damage_energy, nrt_vacancies, MAX_SUPPORTED_ENERGY_EV};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Ions per deterministic accumulation batch.
const BATCH_SIZE: u64 = 256;
/// Fraction of the ion energy allowed to be lost electronically per step.
const MAX_ELECTRONIC_LOSS_FRACTION: f64 = 0.05;
/// Hard per-ion step limit.
const MAX_STEPS: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("non-physical input: {0}")]
    NonPhysical(String),
    #[error("projectile energy {energy_ev} eV outside supported range (0, {max_ev}] eV")]
    EnergyOutOfRange { energy_ev: f64, max_ev: f64 },
    #[error("no stopping table for projectile Z={species_z}; supported: H (Z=1), He (Z=2)")]
    UnsupportedSpecies { species_z: u32 },
    #[error("no stopping table for target Z={atomic_z}; carbon targets only")]
    UnsupportedTarget { atomic_z: u32 },
    #[error("window {window_m} m must lie in (0, range_mean = {range_mean_m} m)")]
    WindowTooLarge { window_m: f64, range_mean_m: f64 },
    #[error("ion exceeded {0} transport steps; inputs are likely degenerate")]
    StepLimit(u64),
}

/// Ion beam parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonBeamSpec {
    /// Atomic number of the projectile.
    pub species_z: u32,
    /// Projectile mass, amu.
    pub species_mass_amu: f64,
    /// Kinetic energy, eV.
    pub energy_ev: f64,
    /// Implanted fluence, ions/cm^2.
    pub fluence_cm2: f64,
}

impl IonBeamSpec {
    /// He+ beam at the given energy with the given fluence.
    pub fn helium(energy_ev: f64, fluence_cm2: f64) -> Self {
        IonBeamSpec {
            species_z: 2,
            species_mass_amu: 4.002602,
            energy_ev,
            fluence_cm2,
        }
    }

    /// Proton beam at the given energy with the given fluence.
    pub fn hydrogen(energy_ev: f64, fluence_cm2: f64) -> Self {
        IonBeamSpec {
            species_z: 1,
            species_mass_amu: 1.007825,
            energy_ev,
            fluence_cm2,
        }
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        if self.species_z < 1 {
            return Err(TransportError::NonPhysical("species_z must be >= 1".into()));
        }
        if !(self.species_mass_amu > 0.0) {
            return Err(TransportError::NonPhysical("species mass must be positive".into()));
        }
        if !(self.energy_ev > 0.0) {
            return Err(TransportError::NonPhysical("beam energy must be positive".into()));
        }
        if self.energy_ev > MAX_SUPPORTED_ENERGY_EV {
            return Err(TransportError::EnergyOutOfRange {
                energy_ev: self.energy_ev,
                max_ev: MAX_SUPPORTED_ENERGY_EV,
            });
        }
        if self.fluence_cm2 < 0.0 {
            return Err(TransportError::NonPhysical("fluence must be >= 0".into()));
        }
        Ok(())
    }
}

/// Target material description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetMaterial {
    pub atomic_z: u32,
    pub atomic_mass_amu: f64,
    /// Atomic number density, atoms/cm^3.
    pub atomic_density_cm3: f64,
    /// Mass density, g/cm^3.
    pub mass_density_g_cm3: f64,
    /// Displacement threshold energy, eV.
    pub displacement_energy_ev: f64,
    /// Mean ionization energy for the Bethe extrapolation, eV.
    pub mean_ionization_energy_ev: f64,
}

impl Default for TargetMaterial {
    fn default() -> Self {
        TargetMaterial::diamond()
    }
}

impl TargetMaterial {
    /// Diamond preset: density 3.52 g/cm^3, E_d = 50 eV, I = 78 eV. The
    /// atomic density is derived from the mass density so the two stay
    /// consistent to well under 0.1%.
    pub fn diamond() -> Self {
        let mass_density = 3.52;
        let mass_amu = 12.011;
        let atomic_density = mass_density * crate::constants::AVOGADRO / mass_amu;
        TargetMaterial {
            atomic_z: 6,
            atomic_mass_amu: mass_amu,
            atomic_density_cm3: atomic_density,
            mass_density_g_cm3: mass_density,
            displacement_energy_ev: 50.0,
            mean_ionization_energy_ev: 78.0,
        }
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        if !(self.displacement_energy_ev > 0.0) {
            return Err(TransportError::NonPhysical(
                "displacement energy must be positive".into(),
            ));
        }
        if !(self.atomic_density_cm3 > 0.0) || !(self.mass_density_g_cm3 > 0.0) {
            return Err(TransportError::NonPhysical("target density must be positive".into()));
        }
        let derived = self.mass_density_g_cm3 * crate::constants::AVOGADRO / self.atomic_mass_amu;
        let rel = ((self.atomic_density_cm3 - derived) / derived).abs();
        if rel > 1e-3 {
            return Err(TransportError::NonPhysical(format!(
                "atomic density {:.4e} inconsistent with mass density (expected {:.4e}, {:.2}% off)",
                self.atomic_density_cm3,
                derived,
                rel * 100.0
            )));
        }
        Ok(())
    }
}

/// Monte Carlo execution parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub ion_count: u64,
    pub rng_seed: u64,
    /// Depth histogram bin width, m.
    pub depth_bin_width_m: f64,
    /// Ion tracking cutoff, eV. Must be at least the displacement energy.
    pub energy_cutoff_ev: f64,
    /// Follow recoil cascades explicitly instead of NRT quick damage.
    pub follow_recoils: bool,
    /// Convert recoil energy to damage energy (Robinson partition) before
    /// the NRT count in quick mode.
    pub lindhard_partition: bool,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            ion_count: 10_000,
            rng_seed: 42,
            depth_bin_width_m: 50e-9,
            energy_cutoff_ev: 50.0,
            follow_recoils: false,
            lindhard_partition: true,
        }
    }
}

impl TransportConfig {
    pub fn validate(&self, target: &TargetMaterial) -> Result<(), TransportError> {
        if self.ion_count < 1 {
            return Err(TransportError::NonPhysical("ion_count must be >= 1".into()));
        }
        if !(self.depth_bin_width_m > 0.0) {
            return Err(TransportError::NonPhysical("depth_bin_width must be positive".into()));
        }
        if self.energy_cutoff_ev < target.displacement_energy_ev {
            return Err(TransportError::NonPhysical(format!(
                "energy cutoff {} eV below displacement energy {} eV",
                self.energy_cutoff_ev, target.displacement_energy_ev
            )));
        }
        Ok(())
    }
}

/// Depth-resolved damage and stopping statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DamageProfile {
    /// Depth bin width, m.
    pub bin_width_m: f64,
    /// Expected vacancies per ion created in each depth bin.
    pub vacancies_per_ion_per_bin: Vec<f64>,
    /// Fraction of simulated ions coming to rest in each depth bin.
    pub ion_stop_per_bin: Vec<f64>,
    /// Mean stopping depth of ions that came to rest, m.
    pub range_mean_m: f64,
    /// RMS spread of the stopping depth, m.
    pub range_straggle_m: f64,
    pub ions_simulated: u64,
    /// Fraction of ions that left through the surface; these are the ions
    /// not accounted for in `ion_stop_per_bin`.
    pub backscattered_fraction: f64,
    /// Worst per-ion violation of energy bookkeeping
    /// |E0 - (electronic + nuclear + residual)| / E0.
    pub energy_audit_max_rel_error: f64,
}

impl DamageProfile {
    /// Total expected vacancies produced per ion.
    pub fn vacancies_per_ion(&self) -> f64 {
        self.vacancies_per_ion_per_bin.iter().sum()
    }

    /// Fraction of all vacancies lying at depths >= range_mean - window.
    pub fn end_of_range_fraction(&self, window_m: f64) -> Result<f64, TransportError> {
        if !(window_m > 0.0) || window_m >= self.range_mean_m {
            return Err(TransportError::WindowTooLarge {
                window_m,
                range_mean_m: self.range_mean_m,
            });
        }
        let total = self.vacancies_per_ion();
        if total == 0.0 {
            return Ok(0.0);
        }
        let cut = self.range_mean_m - window_m;
        let mut tail = 0.0;
        for (i, &v) in self.vacancies_per_ion_per_bin.iter().enumerate() {
            let lo = i as f64 * self.bin_width_m;
            let hi = lo + self.bin_width_m;
            if lo >= cut {
                tail += v;
            } else if hi > cut {
                tail += v * (hi - cut) / self.bin_width_m;
            }
        }
        Ok(tail / total)
    }

    /// Average vacancy density in the surface layer [0, cap_thickness] for
    /// the given fluence, vacancies/cm^3.
    pub fn cap_layer_density(&self, fluence_cm2: f64, cap_thickness_m: f64) -> f64 {
        assert!(cap_thickness_m > 0.0, "cap thickness must be positive");
        let mut in_cap = 0.0;
        for (i, &v) in self.vacancies_per_ion_per_bin.iter().enumerate() {
            let lo = i as f64 * self.bin_width_m;
            let hi = lo + self.bin_width_m;
            if hi <= cap_thickness_m {
                in_cap += v;
            } else if lo < cap_thickness_m {
                in_cap += v * (cap_thickness_m - lo) / self.bin_width_m;
            }
        }
        in_cap * fluence_cm2 / (cap_thickness_m * 100.0)
    }

    /// Local vacancy density per bin for the given fluence, vacancies/cm^3.
    pub fn vacancy_density_per_bin(&self, fluence_cm2: f64) -> Vec<f64> {
        let bin_cm = self.bin_width_m * 100.0;
        self.vacancies_per_ion_per_bin
            .iter()
            .map(|v| v * fluence_cm2 / bin_cm)
            .collect()
    }
}

/// Electronic stopping power of the target for the beam species, eV/m.
pub fn electronic_stopping(
    energy_ev: f64,
    beam: &IonBeamSpec,
    target: &TargetMaterial,
) -> Result<f64, TransportError> {
    stopping::electronic_stopping(energy_ev, beam.species_z, beam.species_mass_amu, target)
}

#[derive(Clone, Copy)]
struct Medium {
    /// Atomic density, 1/m^3.
    n_m3: f64,
    /// Interatomic spacing n^(-1/3), m.
    mfp_solid: f64,
    e_d: f64,
    cutoff: f64,
    z: f64,
    mass: f64,
}

struct BatchAccum {
    vacancies: Vec<f64>,
    stops: Vec<u64>,
    stopped: u64,
    backscattered: u64,
    depth_sum: f64,
    depth_sq_sum: f64,
    audit_max: f64,
}

impl BatchAccum {
    fn new() -> Self {
        BatchAccum {
            vacancies: Vec::new(),
            stops: Vec::new(),
            stopped: 0,
            backscattered: 0,
            depth_sum: 0.0,
            depth_sq_sum: 0.0,
            audit_max: 0.0,
        }
    }

    fn add_vacancies(&mut self, bin: usize, count: f64) {
        if self.vacancies.len() <= bin {
            self.vacancies.resize(bin + 1, 0.0);
        }
        self.vacancies[bin] += count;
    }

    fn add_stop(&mut self, bin: usize, depth: f64) {
        if self.stops.len() <= bin {
            self.stops.resize(bin + 1, 0);
        }
        self.stops[bin] += 1;
        self.stopped += 1;
        self.depth_sum += depth;
        self.depth_sq_sum += depth * depth;
    }
}

struct Track {
    energy: f64,
    depth: f64,
    dir: [f64; 3],
}

/// Rotate `dir` by polar angle `psi` about a random azimuth `phi`.
fn rotate(dir: [f64; 3], psi: f64, phi: f64) -> [f64; 3] {
    let [dx, dy, dz] = dir;
    // orthonormal frame around dir
    let (e1, e2) = if dx.abs() < 0.9 {
        // t = x_hat
        let mut e1 = [0.0, dz, -dy]; // x_hat cross dir
        let norm = (e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
        e1[1] /= norm;
        e1[2] /= norm;
        let e2 = [
            dy * e1[2] - dz * e1[1],
            dz * e1[0] - dx * e1[2],
            dx * e1[1] - dy * e1[0],
        ];
        (e1, e2)
    } else {
        // t = y_hat
        let mut e1 = [-dz, 0.0, dx]; // y_hat cross dir
        let norm = (e1[0] * e1[0] + e1[2] * e1[2]).sqrt();
        e1[0] /= norm;
        e1[2] /= norm;
        let e2 = [
            dy * e1[2] - dz * e1[1],
            dz * e1[0] - dx * e1[2],
            dx * e1[1] - dy * e1[0],
        ];
        (e1, e2)
    };
    let (sp, cp) = psi.sin_cos();
    let (sf, cf) = phi.sin_cos();
    let out = [
        cp * dx + sp * (cf * e1[0] + sf * e2[0]),
        cp * dy + sp * (cf * e1[1] + sf * e2[1]),
        cp * dz + sp * (cf * e1[2] + sf * e2[2]),
    ];
    let norm = (out[0] * out[0] + out[1] * out[1] + out[2] * out[2]).sqrt();
    [out[0] / norm, out[1] / norm, out[2] / norm]
}

/// Outcome of one free-flight step of a track.
enum StepEnd {
    Stopped { residual: f64 },
    Backscattered { residual: f64 },
}

/// Trace one track (primary ion or recoil) through the target. Returns how
/// it ended plus the electronic/nuclear energy sums for the audit. Recoils
/// spawned above the displacement threshold are pushed to `cascade` when
/// the caller follows cascades, otherwise they are converted to NRT counts
/// on the spot.
#[allow(clippy::too_many_arguments)]
fn trace_track(
    mut track: Track,
    pair: &CollisionPair,
    medium: &Medium,
    stopping_fn: &dyn Fn(f64) -> f64,
    cfg: &TransportConfig,
    rng: &mut ChaCha8Rng,
    acc: &mut BatchAccum,
    cascade: Option<&mut Vec<Track>>,
    is_primary: bool,
) -> Result<(StepEnd, f64, f64), TransportError> {
    let mut electronic = 0.0;
    let mut nuclear = 0.0;
    let bin_w = cfg.depth_bin_width_m;
    let mut cascade = cascade;

    // Lab energy below which the maximum transfer cannot displace an atom;
    // weaker collisions than this are folded into the free-flight path.
    let e_min_lab = medium.cutoff / pair.gamma;
    let eps_min = pair.reduced_energy(e_min_lab);

    for _step in 0..MAX_STEPS {
        if track.energy <= medium.cutoff {
            let bin = (track.depth / bin_w).max(0.0) as usize;
            if is_primary {
                acc.add_stop(bin, track.depth);
            }
            return Ok((StepEnd::Stopped { residual: track.energy }, electronic, nuclear));
        }

        // Free-flight path and impact parameter (Biersack-Haggmark).
        let eps = pair.reduced_energy(track.energy);
        let ep = (eps * eps_min).sqrt();
        let mut pmax = pair.a / (ep + ep.sqrt() + 0.125 * ep.powf(0.1));
        let mut ffp = 1.0 / (medium.n_m3 * PI * pmax * pmax);

        let se = stopping_fn(track.energy);
        let de_e = se * ffp;
        if de_e > MAX_ELECTRONIC_LOSS_FRACTION * track.energy {
            ffp *= MAX_ELECTRONIC_LOSS_FRACTION * track.energy / de_e;
            pmax = (1.0 / (medium.n_m3 * PI * ffp)).sqrt();
        }

        let r_p: f64 = rng.random();
        let phi = 2.0 * PI * rng.random::<f64>();
        let p = if ffp < medium.mfp_solid {
            ffp = medium.mfp_solid;
            let pmax_solid = medium.mfp_solid / PI.sqrt();
            pmax_solid * r_p.sqrt()
        } else {
            pmax * (-(1.0 - r_p).ln()).sqrt()
        };

        // Electronic loss along the path, then collide at the reduced energy.
        let de_e = (se * ffp).min(MAX_ELECTRONIC_LOSS_FRACTION * track.energy);
        let new_depth = track.depth + track.dir[0] * ffp;
        if new_depth < 0.0 {
            // left through the surface
            electronic += de_e.min(track.energy);
            let residual = (track.energy - de_e).max(0.0);
            if is_primary {
                acc.backscattered += 1;
            }
            return Ok((StepEnd::Backscattered { residual }, electronic, nuclear));
        }
        track.depth = new_depth;
        electronic += de_e;
        track.energy -= de_e;
        if track.energy <= medium.cutoff {
            continue;
        }

        let theta = scattering_angle(pair, track.energy, p);
        let t = screening::recoil_energy(pair, track.energy, theta);
        nuclear += t;
        track.energy -= t;

        if t >= medium.e_d {
            let bin = (track.depth / bin_w) as usize;
            match cascade.as_deref_mut() {
                Some(queue) => {
                    // displaced atom leaves a vacancy and is followed
                    acc.add_vacancies(bin, 1.0);
                    let psi_recoil = 0.5 * (PI - theta);
                    let recoil_dir = rotate(track.dir, psi_recoil, phi + PI);
                    queue.push(Track {
                        energy: t - medium.e_d,
                        depth: track.depth,
                        dir: recoil_dir,
                    });
                }
                None => {
                    let effective = if cfg.lindhard_partition {
                        damage_energy(t, medium.z, medium.mass)
                    } else {
                        t
                    };
                    let nu = nrt_vacancies(effective, medium.e_d).max(1.0);
                    acc.add_vacancies(bin, nu);
                }
            }
        }

        // deflect the projectile
        let psi = theta.sin().atan2(pair.m1 / pair.m2 + theta.cos()).abs();
        track.dir = rotate(track.dir, psi, phi);
    }
    Err(TransportError::StepLimit(MAX_STEPS))
}

/// Run the damage Monte Carlo. See the module docs for the scheme.
pub fn simulate_transport(
    beam: &IonBeamSpec,
    target: &TargetMaterial,
    cfg: &TransportConfig,
) -> Result<DamageProfile, TransportError> {
    beam.validate()?;
    target.validate()?;
    cfg.validate(target)?;
    // fail early if the species/target pair has no stopping data
    stopping::electronic_stopping(beam.energy_ev, beam.species_z, beam.species_mass_amu, target)?;

    let medium = Medium {
        n_m3: target.atomic_density_cm3 * 1e6,
        mfp_solid: (target.atomic_density_cm3 * 1e6).powf(-1.0 / 3.0),
        e_d: target.displacement_energy_ev,
        cutoff: cfg.energy_cutoff_ev,
        z: target.atomic_z as f64,
        mass: target.atomic_mass_amu,
    };
    let ion_pair = CollisionPair::new(
        beam.species_z as f64,
        beam.species_mass_amu,
        target.atomic_z as f64,
        target.atomic_mass_amu,
    );
    let self_pair = CollisionPair::new(
        target.atomic_z as f64,
        target.atomic_mass_amu,
        target.atomic_z as f64,
        target.atomic_mass_amu,
    );

    let n_batches = cfg.ion_count.div_ceil(BATCH_SIZE);
    let batches: Vec<Result<BatchAccum, TransportError>> = (0..n_batches)
        .into_par_iter()
        .map(|batch| {
            let first = batch * BATCH_SIZE;
            let last = (first + BATCH_SIZE).min(cfg.ion_count);
            let mut acc = BatchAccum::new();
            for ion in first..last {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
                rng.set_stream(ion);
                run_ion(beam, target, cfg, &medium, &ion_pair, &self_pair, &mut rng, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();

    let mut vac = Vec::new();
    let mut stops = Vec::new();
    let mut stopped = 0u64;
    let mut backscattered = 0u64;
    let mut depth_sum = 0.0;
    let mut depth_sq = 0.0;
    let mut audit = 0.0f64;
    for b in batches {
        let b = b?;
        if b.vacancies.len() > vac.len() {
            vac.resize(b.vacancies.len(), 0.0);
        }
        for (i, v) in b.vacancies.iter().enumerate() {
            vac[i] += v;
        }
        if b.stops.len() > stops.len() {
            stops.resize(b.stops.len(), 0u64);
        }
        for (i, s) in b.stops.iter().enumerate() {
            stops[i] += s;
        }
        stopped += b.stopped;
        backscattered += b.backscattered;
        depth_sum += b.depth_sum;
        depth_sq += b.depth_sq_sum;
        audit = audit.max(b.audit_max);
    }

    let n_ions = cfg.ion_count as f64;
    let n_bins = vac.len().max(stops.len()).max(1);
    vac.resize(n_bins, 0.0);
    stops.resize(n_bins, 0);
    let range_mean = if stopped > 0 { depth_sum / stopped as f64 } else { 0.0 };
    let range_straggle = if stopped > 0 {
        (depth_sq / stopped as f64 - range_mean * range_mean).max(0.0).sqrt()
    } else {
        0.0
    };

    Ok(DamageProfile {
        bin_width_m: cfg.depth_bin_width_m,
        vacancies_per_ion_per_bin: vac.iter().map(|v| v / n_ions).collect(),
        ion_stop_per_bin: stops.iter().map(|&s| s as f64 / n_ions).collect(),
        range_mean_m: range_mean,
        range_straggle_m: range_straggle,
        ions_simulated: cfg.ion_count,
        backscattered_fraction: backscattered as f64 / n_ions,
        energy_audit_max_rel_error: audit,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_ion(
    beam: &IonBeamSpec,
    target: &TargetMaterial,
    cfg: &TransportConfig,
    medium: &Medium,
    ion_pair: &CollisionPair,
    self_pair: &CollisionPair,
    rng: &mut ChaCha8Rng,
    acc: &mut BatchAccum,
) -> Result<(), TransportError> {
    let e0 = beam.energy_ev;
    let primary = Track { energy: e0, depth: 0.0, dir: [1.0, 0.0, 0.0] };

    let species_z = beam.species_z;
    let species_m = beam.species_mass_amu;
    let ion_stopping = move |e: f64| -> f64 {
        stopping::electronic_stopping(e, species_z, species_m, target).unwrap_or(0.0)
    };

    let mut cascade: Vec<Track> = Vec::new();
    let (end, electronic, nuclear) = trace_track(
        primary,
        ion_pair,
        medium,
        &ion_stopping,
        cfg,
        rng,
        acc,
        cfg.follow_recoils.then_some(&mut cascade),
        true,
    )?;

    let residual = match end {
        StepEnd::Stopped { residual } | StepEnd::Backscattered { residual } => residual,
    };
    let rel_err = ((e0 - (electronic + nuclear + residual)) / e0).abs();
    acc.audit_max = acc.audit_max.max(rel_err);

    if cfg.follow_recoils {
        let z_t = target.atomic_z as f64;
        let n_cm3 = target.atomic_density_cm3;
        let recoil_stopping = move |e: f64| -> f64 {
            stopping::lindhard_scharff(e, z_t, target.atomic_mass_amu, z_t) * n_cm3 * 100.0
        };
        while let Some(recoil) = cascade.pop() {
            let mut sub = Vec::new();
            trace_track(
                recoil,
                self_pair,
                medium,
                &recoil_stopping,
                cfg,
                rng,
                acc,
                Some(&mut sub),
                false,
            )?;
            cascade.extend(sub);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quick_cfg(ions: u64, seed: u64) -> TransportConfig {
        TransportConfig { ion_count: ions, rng_seed: seed, ..Default::default() }
    }

    #[test]
    fn helium_2mev_range_near_3_5_um() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let profile =
            simulate_transport(&beam, &TargetMaterial::diamond(), &quick_cfg(2000, 1)).unwrap();
        let um = profile.range_mean_m * 1e6;
        assert!((2.975..=4.025).contains(&um), "range {um} um outside 3.5 +/- 15%");
    }

    #[test]
    fn vacancy_yield_near_38_per_ion() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let profile =
            simulate_transport(&beam, &TargetMaterial::diamond(), &quick_cfg(2000, 2)).unwrap();
        let yield_ = profile.vacancies_per_ion();
        assert!((26.6..=49.4).contains(&yield_), "yield {yield_} outside 38 +/- 30%");
    }

    #[test]
    fn damage_peaks_near_end_of_range() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let profile =
            simulate_transport(&beam, &TargetMaterial::diamond(), &quick_cfg(1000, 3)).unwrap();
        let (argmax, _) = profile
            .vacancies_per_ion_per_bin
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        let peak_depth = (argmax as f64 + 0.5) * profile.bin_width_m;
        assert!(peak_depth > 0.8 * profile.range_mean_m);
    }

    #[test]
    fn threshold_above_max_transfer_gives_zero_vacancies() {
        // gamma * E = 1.5 MeV < E_d: no transfer can displace
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let mut target = TargetMaterial::diamond();
        target.displacement_energy_ev = 1.6e6;
        let cfg = TransportConfig {
            ion_count: 50,
            rng_seed: 4,
            energy_cutoff_ev: 1.6e6,
            ..Default::default()
        };
        let profile = simulate_transport(&beam, &target, &cfg).unwrap();
        assert_eq!(profile.vacancies_per_ion(), 0.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let target = TargetMaterial::diamond();
        let cfg = quick_cfg(600, 9);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| simulate_transport(&beam, &target, &cfg).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.vacancies_per_ion_per_bin, b.vacancies_per_ion_per_bin);
        assert_eq!(a.ion_stop_per_bin, b.ion_stop_per_bin);
        assert_eq!(a.range_mean_m.to_bits(), b.range_mean_m.to_bits());
    }

    #[test]
    fn energy_audit_tight() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let profile =
            simulate_transport(&beam, &TargetMaterial::diamond(), &quick_cfg(500, 5)).unwrap();
        assert!(profile.energy_audit_max_rel_error < 1e-6);
    }

    #[test]
    fn stop_fractions_account_for_every_ion() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let profile =
            simulate_transport(&beam, &TargetMaterial::diamond(), &quick_cfg(500, 6)).unwrap();
        let sum: f64 = profile.ion_stop_per_bin.iter().sum();
        assert_relative_eq!(sum + profile.backscattered_fraction, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn single_ion_profile_is_valid() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let profile =
            simulate_transport(&beam, &TargetMaterial::diamond(), &quick_cfg(1, 7)).unwrap();
        assert_eq!(profile.ions_simulated, 1);
        let sum: f64 = profile.ion_stop_per_bin.iter().sum();
        assert_relative_eq!(sum + profile.backscattered_fraction, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn doubling_threshold_reduces_yield() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let mut hard = TargetMaterial::diamond();
        hard.displacement_energy_ev = 100.0;
        let cfg = TransportConfig { ion_count: 400, rng_seed: 8, energy_cutoff_ev: 100.0, ..Default::default() };
        let soft_profile =
            simulate_transport(&beam, &TargetMaterial::diamond(), &quick_cfg(400, 8)).unwrap();
        let hard_profile = simulate_transport(&beam, &hard, &cfg).unwrap();
        assert!(hard_profile.vacancies_per_ion() < soft_profile.vacancies_per_ion());
    }

    #[test]
    fn follow_recoils_mode_runs_and_produces_damage() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let cfg = TransportConfig { ion_count: 20, rng_seed: 11, follow_recoils: true, ..Default::default() };
        let profile = simulate_transport(&beam, &TargetMaterial::diamond(), &cfg).unwrap();
        assert!(profile.vacancies_per_ion() > 1.0);
    }

    #[test]
    fn rejects_nonphysical_inputs() {
        let beam = IonBeamSpec::helium(2.0e6, 1e15);
        let mut zero_density = TargetMaterial::diamond();
        zero_density.atomic_density_cm3 = 0.0;
        assert!(simulate_transport(&beam, &zero_density, &quick_cfg(10, 1)).is_err());

        let cfg = TransportConfig { energy_cutoff_ev: 10.0, ..quick_cfg(10, 1) };
        assert!(simulate_transport(&beam, &TargetMaterial::diamond(), &cfg).is_err());

        let bad_beam = IonBeamSpec { energy_ev: -5.0, ..IonBeamSpec::helium(2.0e6, 1e15) };
        assert!(simulate_transport(&bad_beam, &TargetMaterial::diamond(), &quick_cfg(10, 1)).is_err());
    }

    #[test]
    fn end_of_range_fraction_uniform_profile() {
        // synthetic uniform histogram: fraction in a window is window/range...
        // built directly rather than via the kernel
        let profile = DamageProfile {
            bin_width_m: 1e-7,
            vacancies_per_ion_per_bin: vec![1.0; 100],
            ion_stop_per_bin: vec![0.0; 100],
            range_mean_m: 100.0 * 1e-7, // mean at the far end
            range_straggle_m: 0.0,
            ions_simulated: 1,
            backscattered_fraction: 0.0,
            energy_audit_max_rel_error: 0.0,
        };
        let f = profile.end_of_range_fraction(1e-6).unwrap(); // 10% window
        assert_relative_eq!(f, 0.10, epsilon = 1e-9);
        let whole = profile.end_of_range_fraction(99.9999e-7).unwrap();
        assert_relative_eq!(whole, 1.0, epsilon = 1e-4);
        assert!(profile.end_of_range_fraction(2e-5).is_err());
    }

    #[test]
    fn cap_density_linear_in_fluence() {
        let profile = DamageProfile {
            bin_width_m: 1e-7,
            vacancies_per_ion_per_bin: vec![0.5; 50],
            ion_stop_per_bin: vec![0.0; 50],
            range_mean_m: 4e-6,
            range_straggle_m: 0.0,
            ions_simulated: 1,
            backscattered_fraction: 0.0,
            energy_audit_max_rel_error: 0.0,
        };
        let d1 = profile.cap_layer_density(1e15, 3e-6);
        let d2 = profile.cap_layer_density(2e15, 3e-6);
        assert_relative_eq!(d2, 2.0 * d1, max_relative = 1e-12);
        assert_eq!(profile.cap_layer_density(0.0, 3e-6), 0.0);
    }
}
