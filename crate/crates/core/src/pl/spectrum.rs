//! Wavelength-gridded spectra and line synthesis.

use super::{EmissionLine, LineShape, PlError};
use crate::constants::SPEED_OF_LIGHT;
use serde::{Deserialize, Serialize};

/// A PL trace on a uniform wavelength grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub wavelength_nm: Vec<f64>,
    pub counts: Vec<f64>,
}

impl Spectrum {
    /// Build a spectrum, checking grid uniformity (to 1e-9 nm) and lengths.
    pub fn new(wavelength_nm: Vec<f64>, counts: Vec<f64>) -> Result<Self, PlError> {
        if wavelength_nm.len() != counts.len() {
            return Err(PlError::LengthMismatch(wavelength_nm.len(), counts.len()));
        }
        if wavelength_nm.len() < 2 {
            return Err(PlError::BadGrid);
        }
        let step = wavelength_nm[1] - wavelength_nm[0];
        if step <= 0.0 {
            return Err(PlError::BadGrid);
        }
        for w in wavelength_nm.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-9 {
                return Err(PlError::BadGrid);
            }
        }
        Ok(Spectrum { wavelength_nm, counts })
    }

    pub fn step_nm(&self) -> f64 {
        self.wavelength_nm[1] - self.wavelength_nm[0]
    }

    /// Trapezoidal integral of the counts, counts x nm.
    pub fn integral(&self) -> f64 {
        let step = self.step_nm();
        let sum: f64 = self.counts.iter().sum();
        let ends = 0.5 * (self.counts[0] + self.counts[self.counts.len() - 1]);
        (sum - ends) * step
    }
}

/// Uniform wavelength grid specification.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
}

impl GridSpec {
    pub fn wavelengths(&self) -> Vec<f64> {
        let n = ((self.stop_nm - self.start_nm) / self.step_nm).round() as usize;
        (0..=n).map(|i| self.start_nm + i as f64 * self.step_nm).collect()
    }
}

/// Phonon-sideband descriptor: a red-shifted broadened Gaussian replica of
/// each ZPL.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Sideband {
    /// Dominant phonon frequency, Hz.
    pub phonon_shift_hz: f64,
    /// Rendered sideband width, nm.
    pub width_nm: f64,
    /// Sideband area relative to the ZPL area, (1 - f12)/f12 for a ZPL
    /// branching fraction f12.
    pub relative_weight: f64,
}

impl Default for Sideband {
    fn default() -> Self {
        Sideband {
            phonon_shift_hz: 15.3e12,
            width_nm: 15.0,
            relative_weight: (1.0 - 0.04) / 0.04,
        }
    }
}

impl Sideband {
    /// Center of the sideband replica of a ZPL at `zpl_nm`.
    pub fn center_nm(&self, zpl_nm: f64) -> f64 {
        let nu = SPEED_OF_LIGHT / (zpl_nm * 1e-9) - self.phonon_shift_hz;
        SPEED_OF_LIGHT / nu / 1e-9
    }
}

/// Unit-area analytic line shape evaluated at `x` nm.
pub(crate) fn unit_shape(shape: LineShape, center: f64, fwhm: f64, x: f64) -> f64 {
    let w = fwhm.abs().max(1e-12);
    let u = (x - center) / w;
    match shape {
        LineShape::Lorentzian => 2.0 / (std::f64::consts::PI * w) / (1.0 + 4.0 * u * u),
        LineShape::Gaussian => {
            let ln2 = std::f64::consts::LN_2;
            2.0 * (ln2 / std::f64::consts::PI).sqrt() / w * (-4.0 * ln2 * u * u).exp()
        }
    }
}

/// Evaluate one line over the grid, normalized so its trapezoidal integral
/// over this grid equals exactly `area`. The renormalization keeps the
/// stated area meaningful for fat-tailed shapes truncated by the grid.
pub(crate) fn render_line(
    grid: &[f64],
    shape: LineShape,
    center: f64,
    fwhm: f64,
    area: f64,
) -> Vec<f64> {
    let vals: Vec<f64> = grid.iter().map(|&x| unit_shape(shape, center, fwhm, x)).collect();
    let step = grid[1] - grid[0];
    let raw: f64 = (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[vals.len() - 1])) * step;
    if raw <= 0.0 {
        return vec![0.0; grid.len()];
    }
    let scale = area / raw;
    vals.into_iter().map(|v| v * scale).collect()
}

/// Superpose emission lines (and optionally their phonon sidebands) on a
/// wavelength grid. Every ZPL center must sit at least 5 FWHM inside the
/// grid. Each line's numerically integrated area matches its `area` field.
pub fn synthesize_spectrum(
    lines: &[EmissionLine],
    sideband: Option<&Sideband>,
    grid: &GridSpec,
) -> Result<Spectrum, PlError> {
    let wavelengths = grid.wavelengths();
    if wavelengths.len() < 2 {
        return Err(PlError::BadGrid);
    }
    let (lo, hi) = (wavelengths[0], wavelengths[wavelengths.len() - 1]);
    for line in lines {
        if line.center_nm - 5.0 * line.fwhm_nm < lo || line.center_nm + 5.0 * line.fwhm_nm > hi {
            return Err(PlError::GridTooNarrow { lo, hi, center: line.center_nm });
        }
    }
    let mut counts = vec![0.0; wavelengths.len()];
    for line in lines {
        for (c, v) in counts
            .iter_mut()
            .zip(render_line(&wavelengths, line.shape, line.center_nm, line.fwhm_nm, line.area))
        {
            *c += v;
        }
        if let Some(psb) = sideband {
            let center = psb.center_nm(line.center_nm);
            let psb_area = psb.relative_weight * line.area;
            for (c, x) in counts.iter_mut().zip(wavelengths.iter()) {
                // analytic, not renormalized: the replica may spill past the grid
                *c += psb_area * unit_shape(LineShape::Gaussian, center, psb.width_nm, *x);
            }
        }
    }
    Spectrum::new(wavelengths, counts)
}
