//! ZBL universal screening and the Biersack-Haggmark "magic" scattering
//! angle approximation.
//!
//! All lengths here are in meters and energies in eV. Angles are returned in
//! the center-of-mass frame.

use crate::constants::{BOHR_RADIUS, COULOMB_EV_M};

/// ZBL universal screening function coefficients.
const ZBL_C: [f64; 4] = [0.18175, 0.50986, 0.28022, 0.02817];
const ZBL_D: [f64; 4] = [3.19980, 0.94229, 0.40290, 0.20162];

/// Magic-formula fit constants for the ZBL potential.
const MAGIC_C: [f64; 5] = [0.99229, 0.011615, 0.0071222, 9.3066, 14.813];

/// Universal (ZBL) screening length, m.
pub fn screening_length(z1: f64, z2: f64) -> f64 {
    0.8854 * BOHR_RADIUS / (z1.powf(0.23) + z2.powf(0.23))
}

/// ZBL screening function phi(x), x = r/a.
pub fn phi(x: f64) -> f64 {
    ZBL_C
        .iter()
        .zip(ZBL_D.iter())
        .map(|(c, d)| c * (-d * x).exp())
        .sum()
}

/// d phi / dx.
pub fn dphi(x: f64) -> f64 {
    ZBL_C
        .iter()
        .zip(ZBL_D.iter())
        .map(|(c, d)| -c * d * (-d * x).exp())
        .sum()
}

/// Parameters of a projectile-target pair that stay fixed along a track.
#[derive(Clone, Copy, Debug)]
pub struct CollisionPair {
    pub z1: f64,
    pub m1: f64,
    pub z2: f64,
    pub m2: f64,
    /// Screening length, m.
    pub a: f64,
    /// Coulomb barrier scale Z1 Z2 e^2 / (4 pi eps0 a), eV.
    pub v0: f64,
    /// Kinematic energy-transfer factor 4 M1 M2 / (M1 + M2)^2.
    pub gamma: f64,
}

impl CollisionPair {
    pub fn new(z1: f64, m1: f64, z2: f64, m2: f64) -> Self {
        let a = screening_length(z1, z2);
        let v0 = z1 * z2 * COULOMB_EV_M / a;
        let gamma = 4.0 * m1 * m2 / ((m1 + m2) * (m1 + m2));
        CollisionPair { z1, m1, z2, m2, a, v0, gamma }
    }

    /// Reduced (Lindhard) energy for lab energy `e` in eV.
    pub fn reduced_energy(&self, e: f64) -> f64 {
        e * self.m2 / (self.m1 + self.m2) / self.v0
    }
}

/// Reduced distance of closest approach: root of
/// `1 - phi(x)/(x eps) - beta^2/x^2 = 0`, solved by Newton iteration with a
/// Coulomb-limit initial guess and a bisection fallback.
pub fn closest_approach(eps: f64, beta: f64) -> f64 {
    let f = |x: f64| x * x - x * phi(x) / eps - beta * beta;
    let df = |x: f64| 2.0 * x - (phi(x) + x * dphi(x)) / eps;

    let inv2e = 0.5 / eps;
    let mut x = inv2e + (inv2e * inv2e + beta * beta).sqrt();
    if x < 1e-12 {
        x = 1e-12;
    }
    for _ in 0..60 {
        let fx = f(x);
        let dfx = df(x);
        if dfx.abs() < 1e-300 {
            break;
        }
        let step = fx / dfx;
        let xn = x - step;
        if !xn.is_finite() || xn <= 0.0 {
            break;
        }
        if (xn - x).abs() <= 1e-12 * xn.abs() {
            return xn;
        }
        x = xn;
    }
    if f(x).abs() < 1e-6 * (beta * beta + 1.0) {
        return x;
    }
    // Bisection fallback on [lo, hi]; f(lo) < 0 and f grows at large x.
    let mut lo = (beta).max(1e-9);
    while f(lo) > 0.0 && lo > 1e-12 {
        lo *= 0.5;
    }
    let mut hi = lo.max(1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return hi;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Center-of-mass scattering angle for a collision at lab energy `e` (eV)
/// and impact parameter `p` (m), via the magic formula.
pub fn scattering_angle(pair: &CollisionPair, e: f64, p: f64) -> f64 {
    let eps = pair.reduced_energy(e);
    let beta = p / pair.a;
    let x0 = closest_approach(eps, beta);

    let sqe = eps.sqrt();
    let r0 = pair.a * x0;
    let e_rel = e * pair.m2 / (pair.m1 + pair.m2);
    let v = pair.v0 * pair.a / r0 * phi(x0);
    let dv = -v / r0 + pair.v0 / r0 * dphi(x0);
    let rho = -2.0 * (e_rel - v) / dv;
    let d = 2.0 * (1.0 + MAGIC_C[0] / sqe)
        * eps
        * beta.powf((MAGIC_C[1] + sqe) / (MAGIC_C[2] + sqe));
    let g = (MAGIC_C[4] + eps) / (MAGIC_C[3] + eps) * ((1.0 + d * d).sqrt() - d);
    let delta = d * g / (1.0 + g) * (x0 - beta);
    let cos_half = (beta + rho / pair.a + delta) / (x0 + rho / pair.a);
    2.0 * cos_half.clamp(-1.0, 1.0).acos()
}

/// Recoil energy transferred in a collision with CM angle `theta`, eV.
pub fn recoil_energy(pair: &CollisionPair, e: f64, theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    pair.gamma * e * s * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn screening_function_limits() {
        assert_relative_eq!(phi(0.0), 1.0, epsilon = 1e-12);
        assert!(phi(10.0) < 0.02);
        assert!(dphi(1.0) < 0.0);
    }

    #[test]
    fn closest_approach_head_on_coulomb_limit() {
        // At very high reduced energy and beta = 0 the doca tends to the
        // unscreened head-on value 1/eps (in reduced units).
        let eps = 1e4;
        let x0 = closest_approach(eps, 0.0);
        assert_relative_eq!(x0, 1.0 / eps, max_relative = 0.05);
    }

    #[test]
    fn closest_approach_grazing() {
        // For large impact parameter the doca approaches the impact parameter.
        let x0 = closest_approach(10.0, 50.0);
        assert_relative_eq!(x0, 50.0, max_relative = 1e-3);
    }

    #[test]
    fn magic_angle_matches_rutherford_at_high_energy() {
        // In the unscreened limit (impact parameter well inside the
        // screening length): tan(theta/2) = 1/(2 eps beta).
        let pair = CollisionPair::new(2.0, 4.002602, 6.0, 12.011);
        let e = 2.0e6;
        let eps = pair.reduced_energy(e);
        for &beta in &[0.002, 0.01] {
            let p = beta * pair.a;
            let theta = scattering_angle(&pair, e, p);
            let rutherford = 2.0 * (1.0 / (2.0 * eps * beta)).atan();
            assert_relative_eq!(theta, rutherford, max_relative = 0.05);
        }
    }

    #[test]
    fn scattering_angle_decreases_with_impact_parameter() {
        let pair = CollisionPair::new(2.0, 4.002602, 6.0, 12.011);
        let e = 1.0e4;
        let mut last = std::f64::consts::PI + 1e-9;
        for i in 1..40 {
            let p = pair.a * 0.1 * i as f64;
            let theta = scattering_angle(&pair, e, p);
            assert!(theta <= last + 1e-9, "theta not monotone at p index {i}");
            last = theta;
        }
    }

    #[test]
    fn recoil_energy_bounded_by_kinematics() {
        let pair = CollisionPair::new(2.0, 4.002602, 6.0, 12.011);
        let t = recoil_energy(&pair, 1000.0, std::f64::consts::PI);
        assert_relative_eq!(t, pair.gamma * 1000.0, epsilon = 1e-9);
        assert_relative_eq!(pair.gamma, 0.75, max_relative = 1e-3);
    }
}
