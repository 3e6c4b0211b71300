//! Least-squares line fitting and Raman line subtraction.

use super::spectrum::{render_line, Spectrum};
use super::{raman_line_wavelength, EmissionLine, PlError, DIAMOND_RAMAN_SHIFT_PER_CM};
use serde::{Deserialize, Serialize};

/// Result of a least-squares refinement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitOutcome {
    pub lines: Vec<EmissionLine>,
    /// Euclidean norm of the final residual vector.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

const LM_MAX_ITER: usize = 200;
const LM_COST_TOL: f64 = 1e-14;

/// Levenberg-Marquardt over a generic residual function. Returns the best
/// parameters found, the final cost, whether the iteration converged and
/// the number of outer iterations.
fn levenberg_marquardt<F>(mut params: Vec<f64>, residuals: F) -> (Vec<f64>, f64, bool, usize)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = params.len();
    let mut r = residuals(&params);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..LM_MAX_ITER {
        iterations = iter + 1;
        // numerical Jacobian, central differences
        let m = r.len();
        let mut jac = vec![vec![0.0; n]; m];
        for j in 0..n {
            let h = 1e-7 * params[j].abs().max(1e-3);
            let mut plus = params.clone();
            plus[j] += h;
            let mut minus = params.clone();
            minus[j] -= h;
            let rp = residuals(&plus);
            let rm = residuals(&minus);
            for i in 0..m {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        // normal equations
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            for a in 0..n {
                jtr[a] += jac[i][a] * r[i];
                for b in a..n {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }

        let mut improved = false;
        for _ in 0..30 {
            // damped system (J^T J + lambda D) delta = -J^T r
            let mut a_mat = jtj.clone();
            for (i, row) in a_mat.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-12);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(delta) = solve_linear(a_mat, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
            let r_trial = residuals(&trial);
            let cost_trial: f64 = r_trial.iter().map(|v| v * v).sum();
            if cost_trial < cost {
                let rel_drop = (cost - cost_trial) / cost.max(1e-300);
                params = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                if rel_drop < LM_COST_TOL || cost < 1e-28 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if converged {
            break;
        }
        if !improved {
            // stuck at a (possibly perfect) minimum
            converged = cost < 1e-20 || lambda > 1e14;
            break;
        }
    }
    (params, cost, converged, iterations)
}

/// Gaussian elimination with partial pivoting; None when singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

fn model_on_grid(grid: &[f64], lines: &[EmissionLine], params: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for (k, line) in lines.iter().enumerate() {
        let center = params[3 * k];
        let fwhm = params[3 * k + 1];
        let area = params[3 * k + 2];
        for (o, v) in out.iter_mut().zip(render_line(grid, line.shape, center, fwhm, area)) {
            *o += v;
        }
    }
    out
}

/// Refine line centers, widths and areas against a spectrum by damped
/// least squares. The shape of each line is fixed by its initial guess.
/// On hitting the iteration cap the best parameters so far are returned
/// with `converged = false`.
pub fn fit_lines(spectrum: &Spectrum, initial: &[EmissionLine]) -> Result<FitOutcome, PlError> {
    if initial.is_empty() {
        return Ok(FitOutcome { lines: vec![], residual_norm: 0.0, converged: true, iterations: 0 });
    }
    let grid = &spectrum.wavelength_nm;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    for line in initial {
        if line.center_nm < lo || line.center_nm > hi {
            return Err(PlError::GridTooNarrow { lo, hi, center: line.center_nm });
        }
    }

    let params0: Vec<f64> = initial
        .iter()
        .flat_map(|l| [l.center_nm, l.fwhm_nm, l.area])
        .collect();
    let counts = &spectrum.counts;
    let residual_fn = |p: &[f64]| -> Vec<f64> {
        model_on_grid(grid, initial, p)
            .iter()
            .zip(counts.iter())
            .map(|(m, c)| m - c)
            .collect()
    };
    let (params, cost, converged, iterations) = levenberg_marquardt(params0, residual_fn);

    let lines = initial
        .iter()
        .enumerate()
        .map(|(k, l)| EmissionLine {
            center_nm: params[3 * k],
            fwhm_nm: params[3 * k + 1].abs(),
            area: params[3 * k + 2],
            shape: l.shape,
        })
        .collect();
    Ok(FitOutcome { lines, residual_norm: cost.sqrt(), converged, iterations })
}

/// What `subtract_raman` did.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RamanSubtraction {
    /// The fitted line that was removed.
    Subtracted(EmissionLine),
    /// The Raman wavelength fell outside the grid; spectrum unchanged.
    OutsideGrid { raman_nm: f64 },
}

/// Fit and remove the first-order diamond Raman line excited at
/// `lambda_exc_nm`. The fit runs in a window around the Raman wavelength
/// with a linear baseline absorbing tails of neighboring features; only the
/// fitted line is subtracted and counts are clamped at zero.
pub fn subtract_raman(
    spectrum: &Spectrum,
    lambda_exc_nm: f64,
    raman_fwhm_nm: f64,
) -> Result<(Spectrum, RamanSubtraction), PlError> {
    let raman_nm = raman_line_wavelength(lambda_exc_nm, DIAMOND_RAMAN_SHIFT_PER_CM)?;
    let grid = &spectrum.wavelength_nm;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if raman_nm < lo || raman_nm > hi {
        return Ok((spectrum.clone(), RamanSubtraction::OutsideGrid { raman_nm }));
    }

    let step = spectrum.step_nm();
    let half_window = (3.0 * raman_fwhm_nm).max(5.0 * step);
    let i0 = grid.partition_point(|&w| w < raman_nm - half_window);
    let i1 = grid.partition_point(|&w| w <= raman_nm + half_window).min(grid.len());
    let wgrid = &grid[i0..i1];
    let wcounts = &spectrum.counts[i0..i1];

    // line + linear baseline: [center, fwhm, area, offset, slope]
    let area0: f64 = wcounts.iter().sum::<f64>() * step;
    let params0 = vec![raman_nm, raman_fwhm_nm, area0, 0.0, 0.0];
    let full_grid = grid.clone();
    let shape = EmissionLine::lorentzian(raman_nm, raman_fwhm_nm, area0);
    let residual_fn = |p: &[f64]| -> Vec<f64> {
        // evaluate the full-grid-normalized line, restricted to the window
        let line = render_line(&full_grid, shape.shape, p[0], p[1], p[2]);
        wgrid
            .iter()
            .enumerate()
            .map(|(i, &w)| line[i0 + i] + p[3] + p[4] * (w - raman_nm) - wcounts[i])
            .collect()
    };
    let (params, _, _, _) = levenberg_marquardt(params0, residual_fn);

    let fitted = EmissionLine::lorentzian(params[0], params[1].abs(), params[2]);
    let line = render_line(grid, fitted.shape, fitted.center_nm, fitted.fwhm_nm, fitted.area);
    let counts: Vec<f64> = spectrum
        .counts
        .iter()
        .zip(line.iter())
        .map(|(c, l)| (c - l).max(0.0))
        .collect();
    let out = Spectrum::new(grid.clone(), counts)?;
    Ok((out, RamanSubtraction::Subtracted(fitted)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pl::spectrum::{synthesize_spectrum, GridSpec};
    use crate::pl::LineShape;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nv_gr1_lines() -> Vec<EmissionLine> {
        vec![
            EmissionLine::lorentzian(638.0, 1.1, 900.0),
            EmissionLine::lorentzian(742.0, 2.2, 400.0),
        ]
    }

    #[test]
    fn roundtrip_recovers_synthesis_parameters() {
        let grid = GridSpec { start_nm: 600.0, stop_nm: 790.0, step_nm: 0.05 };
        let truth = nv_gr1_lines();
        let spec = synthesize_spectrum(&truth, None, &grid).unwrap();
        let initial = vec![
            EmissionLine::lorentzian(637.0, 1.5, 500.0),
            EmissionLine::lorentzian(743.5, 1.5, 600.0),
        ];
        let fit = fit_lines(&spec, &initial).unwrap();
        for (got, want) in fit.lines.iter().zip(truth.iter()) {
            assert_relative_eq!(got.center_nm, want.center_nm, max_relative = 1e-4);
            assert_relative_eq!(got.fwhm_nm, want.fwhm_nm, max_relative = 0.02);
            assert_relative_eq!(got.area, want.area, max_relative = 0.02);
        }
    }

    #[test]
    fn roundtrip_with_one_percent_noise() {
        let grid = GridSpec { start_nm: 600.0, stop_nm: 790.0, step_nm: 0.05 };
        let truth = nv_gr1_lines();
        let mut spec = synthesize_spectrum(&truth, None, &grid).unwrap();
        let peak = spec.counts.iter().cloned().fold(f64::MIN, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for c in spec.counts.iter_mut() {
            *c += 0.01 * peak * (2.0 * rng.random::<f64>() - 1.0);
        }
        let initial = vec![
            EmissionLine::lorentzian(637.5, 1.5, 700.0),
            EmissionLine::lorentzian(742.5, 1.8, 500.0),
        ];
        let fit = fit_lines(&spec, &initial).unwrap();
        for (got, want) in fit.lines.iter().zip(truth.iter()) {
            assert_relative_eq!(got.fwhm_nm, want.fwhm_nm, max_relative = 0.05);
            assert_relative_eq!(got.area, want.area, max_relative = 0.05);
        }
    }

    #[test]
    fn gaussian_roundtrip() {
        let grid = GridSpec { start_nm: 560.0, stop_nm: 600.0, step_nm: 0.02 };
        let truth = vec![EmissionLine::gaussian(575.0, 0.9, 250.0)];
        let spec = synthesize_spectrum(&truth, None, &grid).unwrap();
        let fit = fit_lines(&spec, &[EmissionLine::gaussian(574.5, 1.4, 100.0)]).unwrap();
        assert_relative_eq!(fit.lines[0].fwhm_nm, 0.9, max_relative = 0.02);
        assert_relative_eq!(fit.lines[0].area, 250.0, max_relative = 0.02);
    }

    #[test]
    fn all_zero_spectrum_gives_zero_areas() {
        let wl: Vec<f64> = (0..500).map(|i| 600.0 + 0.1 * i as f64).collect();
        let spec = Spectrum::new(wl, vec![0.0; 500]).unwrap();
        let fit = fit_lines(&spec, &[EmissionLine::lorentzian(620.0, 1.0, 50.0)]).unwrap();
        assert!(fit.lines[0].area.abs() < 1e-9, "area {}", fit.lines[0].area);
        assert!(fit.residual_norm < 1e-9);
    }

    #[test]
    fn initial_guess_outside_grid_rejected() {
        let wl: Vec<f64> = (0..100).map(|i| 600.0 + 0.1 * i as f64).collect();
        let spec = Spectrum::new(wl, vec![0.0; 100]).unwrap();
        assert!(fit_lines(&spec, &[EmissionLine::lorentzian(900.0, 1.0, 50.0)]).is_err());
    }

    #[test]
    fn raman_self_subtraction() {
        // spectrum that is only the Raman line: subtraction leaves <= 2%
        let grid = GridSpec { start_nm: 560.0, stop_nm: 590.0, step_nm: 0.02 };
        let raman_nm = raman_line_wavelength(532.0, DIAMOND_RAMAN_SHIFT_PER_CM).unwrap();
        let line = EmissionLine::lorentzian(raman_nm, 0.5, 120.0);
        let spec = synthesize_spectrum(&[line], None, &grid).unwrap();
        let (clean, what) = subtract_raman(&spec, 532.0, 0.5).unwrap();
        assert!(matches!(what, RamanSubtraction::Subtracted(_)));
        assert!(clean.integral() <= 0.02 * spec.integral(), "residual {}", clean.integral());
    }

    #[test]
    fn raman_noop_when_no_feature() {
        let grid = GridSpec { start_nm: 560.0, stop_nm: 600.0, step_nm: 0.02 };
        let nv0 = EmissionLine::gaussian(580.0, 1.0, 300.0);
        let spec = synthesize_spectrum(&[nv0], None, &grid).unwrap();
        let (clean, _) = subtract_raman(&spec, 532.0, 0.5).unwrap();
        let before = spec.integral();
        let after = clean.integral();
        assert!((before - after).abs() <= 1e-3 * before, "changed by {}", before - after);
    }

    #[test]
    fn raman_outside_grid_is_noop_with_flag() {
        let grid = GridSpec { start_nm: 600.0, stop_nm: 700.0, step_nm: 0.1 };
        let spec = synthesize_spectrum(&[EmissionLine::lorentzian(650.0, 1.0, 10.0)], None, &grid)
            .unwrap();
        let (clean, what) = subtract_raman(&spec, 532.0, 0.5).unwrap();
        assert!(matches!(what, RamanSubtraction::OutsideGrid { .. }));
        assert_eq!(clean.counts, spec.counts);
    }

    #[test]
    fn overlapping_nv0_survives_raman_subtraction() {
        // NV0 at 575 partially overlaps the 572.6 nm Raman line
        let grid = GridSpec { start_nm: 560.0, stop_nm: 596.0, step_nm: 0.02 };
        let raman_nm = raman_line_wavelength(532.0, DIAMOND_RAMAN_SHIFT_PER_CM).unwrap();
        let nv0_truth = EmissionLine::gaussian(575.0, 1.2, 200.0);
        let raman = EmissionLine::lorentzian(raman_nm, 0.4, 500.0);
        let spec =
            synthesize_spectrum(&[nv0_truth.clone(), raman], None, &grid).unwrap();
        let (clean, _) = subtract_raman(&spec, 532.0, 0.4).unwrap();
        let fit = fit_lines(&clean, &[EmissionLine::gaussian(574.8, 1.5, 150.0)]).unwrap();
        assert_relative_eq!(fit.lines[0].area, 200.0, max_relative = 0.05);
        assert_eq!(fit.lines[0].shape, LineShape::Gaussian);
    }
}
