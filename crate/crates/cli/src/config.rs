//! Run configuration: one strict-schema JSON document collecting every
//! module's parameters. Unknown keys are rejected and the format version
//! must match the supported schema.

use crate::error::CliError;
use nvforge_core::defect::{AnnealModel, ChargeEquilibrium, PhotoionizationModel};
use nvforge_core::pl::{AbsorptionModel, BroadeningModel};
use nvforge_core::qmem::{EnsembleSpec, GammaInterpretation, LambdaSystem, MemoryDesign};
use nvforge_core::transport::{IonBeamSpec, TargetMaterial, TransportConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    /// Projectile species: "He" or "H".
    pub species: String,
    pub energy_ev: f64,
    pub fluence_cm2: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection { species: "He".into(), energy_ev: 2.0e6, fluence_cm2: 1e15 }
    }
}

impl BeamSection {
    pub fn to_spec(&self) -> Result<IonBeamSpec, CliError> {
        match self.species.as_str() {
            "He" | "he" | "helium" => Ok(IonBeamSpec::helium(self.energy_ev, self.fluence_cm2)),
            "H" | "h" | "hydrogen" => Ok(IonBeamSpec::hydrogen(self.energy_ev, self.fluence_cm2)),
            other => Err(CliError::usage(format!(
                "unknown ion species '{other}' (supported: He, H)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Schema version; must equal the supported version.
    pub format_version: String,
    /// Global seed; overrides `transport.rng_seed` and is itself overridden
    /// by `--seed`.
    pub rng_seed: u64,
    pub output_dir: String,
    pub beam: BeamSection,
    pub target: TargetMaterial,
    pub transport: TransportConfig,
    pub nitrogen_density_cm3: f64,
    pub cap_thickness_m: f64,
    pub anneal: AnnealModel,
    pub charge: ChargeEquilibrium,
    pub photoionization: PhotoionizationModel,
    pub absorption: AbsorptionModel,
    pub broadening: BroadeningModel,
    pub lambda_system: LambdaSystem,
    pub memory_design: MemoryDesign,
    pub ensemble: EnsembleSpec,
    pub gamma_interpretation: GammaInterpretation,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: nvforge_core::CONFIG_SCHEMA_VERSION.to_string(),
            rng_seed: 42,
            output_dir: ".".into(),
            beam: BeamSection::default(),
            target: TargetMaterial::diamond(),
            transport: TransportConfig::default(),
            nitrogen_density_cm3: 2e19,
            cap_thickness_m: 3e-6,
            anneal: AnnealModel::default(),
            charge: ChargeEquilibrium::default(),
            photoionization: PhotoionizationModel::default(),
            absorption: AbsorptionModel::default(),
            broadening: BroadeningModel::default(),
            lambda_system: LambdaSystem::default(),
            memory_design: MemoryDesign::default(),
            ensemble: EnsembleSpec::default(),
            gamma_interpretation: GammaInterpretation::InhomogeneousLinewidth,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        config.check_version()?;
        Ok(config)
    }

    pub fn check_version(&self) -> Result<(), CliError> {
        if self.format_version != nvforge_core::CONFIG_SCHEMA_VERSION {
            return Err(CliError::usage(format!(
                "config format_version '{}' unsupported (expected '{}')",
                self.format_version,
                nvforge_core::CONFIG_SCHEMA_VERSION
            )));
        }
        Ok(())
    }

    /// Transport configuration with the global seed applied.
    pub fn transport_with_seed(&self) -> TransportConfig {
        TransportConfig { rng_seed: self.rng_seed, ..self.transport.clone() }
    }

    /// The resolved configuration as a single JSON line for output headers.
    pub fn resolved_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
