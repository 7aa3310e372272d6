//! Relativistic four-momentum and its collider-frame coordinates.

use alloc::format;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerated negative invariant mass squared (GeV²) from float noise.
pub const MASS_EPSILON: f64 = 1e-6;

/// Cartesian four-momentum `(E, px, py, pz)` in GeV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourMomentum {
    pub e: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

/// The two non-Cartesian parametrisations of a four-momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentumRepr {
    /// Energy, momentum magnitude, polar and azimuthal angles.
    Spherical { energy: f64, momentum: f64, theta: f64, phi: f64 },
    /// Transverse mass, transverse momentum, azimuth and rapidity.
    Transverse { transverse_mass: f64, pt: f64, phi: f64, rapidity: f64 },
}

pub fn transverse_momentum(px: f64, py: f64) -> f64 {
    libm::hypot(px, py)
}

/// `½ ln((E + pz) / (E − pz))`; requires `E > |pz|`.
pub fn rapidity(e: f64, pz: f64) -> Result<f64> {
    if !(e.is_finite() && pz.is_finite()) || e <= libm::fabs(pz) {
        return Err(Error::Domain(format!("rapidity needs E > |pz| (E={e}, pz={pz})")));
    }
    Ok(0.5 * libm::log((e + pz) / (e - pz)))
}

/// `−ln tan(θ/2)` for `0 < θ < π`.
pub fn pseudorapidity(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < core::f64::consts::PI) {
        return Err(Error::Domain(format!("pseudorapidity needs 0 < θ < π (θ={theta})")));
    }
    Ok(-libm::log(libm::tan(0.5 * theta)))
}

pub fn to_cartesian(repr: MomentumRepr) -> Result<FourMomentum> {
    let p4 = match repr {
        MomentumRepr::Spherical { energy, momentum, theta, phi } => {
            if momentum < 0.0 {
                return Err(Error::Domain(format!("negative momentum {momentum}")));
            }
            let st = libm::sin(theta);
            FourMomentum {
                e: energy,
                px: momentum * st * libm::cos(phi),
                py: momentum * st * libm::sin(phi),
                pz: momentum * libm::cos(theta),
            }
        }
        MomentumRepr::Transverse { transverse_mass, pt, phi, rapidity } => {
            if pt < 0.0 || transverse_mass < 0.0 {
                return Err(Error::Domain(format!(
                    "negative transverse quantity (m_T={transverse_mass}, p_T={pt})"
                )));
            }
            FourMomentum {
                e: transverse_mass * libm::cosh(rapidity),
                px: pt * libm::cos(phi),
                py: pt * libm::sin(phi),
                pz: transverse_mass * libm::sinh(rapidity),
            }
        }
    };
    if ![p4.e, p4.px, p4.py, p4.pz].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("non-finite four-momentum".into()));
    }
    Ok(p4)
}

impl FourMomentum {
    pub const ZERO: Self = Self { e: 0.0, px: 0.0, py: 0.0, pz: 0.0 };

    pub fn new(e: f64, px: f64, py: f64, pz: f64) -> Self {
        Self { e, px, py, pz }
    }

    /// Massless momentum from `(p_T, η, φ)`.
    pub fn massless_from_pt_eta_phi(pt: f64, eta: f64, phi: f64) -> Self {
        let pz = pt * libm::sinh(eta);
        Self {
            e: libm::hypot(pt, pz),
            px: pt * libm::cos(phi),
            py: pt * libm::sin(phi),
            pz,
        }
    }

    pub fn p(&self) -> f64 {
        libm::sqrt(self.px * self.px + self.py * self.py + self.pz * self.pz)
    }

    pub fn pt(&self) -> f64 {
        transverse_momentum(self.px, self.py)
    }

    pub fn phi(&self) -> f64 {
        libm::atan2(self.py, self.px)
    }

    pub fn theta(&self) -> f64 {
        libm::atan2(self.pt(), self.pz)
    }

    pub fn mass_squared(&self) -> f64 {
        self.e * self.e - (self.px * self.px + self.py * self.py + self.pz * self.pz)
    }

    /// `E ≥ 0` and `m² ≥ −MASS_EPSILON`.
    pub fn is_physical(&self) -> bool {
        self.e >= 0.0 && self.mass_squared() >= -MASS_EPSILON
    }

    /// `m_T = sqrt(E² − pz²)`, equivalently `sqrt(m² + p_T²)`.
    pub fn transverse_mass(&self) -> f64 {
        libm::sqrt((self.e * self.e - self.pz * self.pz).max(0.0))
    }

    pub fn rapidity(&self) -> Result<f64> {
        rapidity(self.e, self.pz)
    }

    pub fn eta(&self) -> Result<f64> {
        pseudorapidity(self.theta())
    }

    pub fn to_spherical(&self) -> MomentumRepr {
        MomentumRepr::Spherical {
            energy: self.e,
            momentum: self.p(),
            theta: self.theta(),
            phi: self.phi(),
        }
    }

    pub fn to_transverse(&self) -> Result<MomentumRepr> {
        Ok(MomentumRepr::Transverse {
            transverse_mass: self.transverse_mass(),
            pt: self.pt(),
            phi: self.phi(),
            rapidity: self.rapidity()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn pt_examples() {
        assert_eq!(transverse_momentum(3.0, 4.0), 5.0);
        assert_eq!(transverse_momentum(0.0, 0.0), 0.0);
        let (p, theta, phi) = (2.0, PI / 3.0, 0.7);
        let pt = transverse_momentum(p * libm::sin(theta) * libm::cos(phi), p * libm::sin(theta) * libm::sin(phi));
        assert!((pt - p * libm::sin(theta)).abs() < 1e-12);
        assert!((pt - 1.7320508075688772).abs() < 1e-12);
    }

    #[test]
    fn rapidity_examples() {
        assert_eq!(rapidity(2.0, 0.0).unwrap(), 0.0);
        assert!((rapidity(5.0, 3.0).unwrap() - 0.6931471805599453).abs() < 1e-12);
        assert!(matches!(rapidity(1.0, 1.0), Err(Error::Domain(_))));
        assert!(rapidity(1.0, -2.0).is_err());
    }

    #[test]
    fn pseudorapidity_examples() {
        assert!(pseudorapidity(PI / 2.0).unwrap().abs() < 1e-15);
        let theta = 2.0 * libm::atan(libm::exp(-2.1));
        assert!((pseudorapidity(theta).unwrap() - 2.1).abs() < 1e-12);
        assert!(pseudorapidity(0.0).is_err());
        assert!(pseudorapidity(PI).is_err());
    }

    #[test]
    fn massless_eta_equals_rapidity() {
        for &(p, theta) in &[(10.0, 0.3), (50.0, 1.2), (3.0, 2.9)] {
            let p4 = to_cartesian(MomentumRepr::Spherical { energy: p, momentum: p, theta, phi: 0.4 }).unwrap();
            let y = rapidity(p4.e, p4.pz).unwrap();
            assert!((pseudorapidity(theta).unwrap() - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rest_frame_conversions() {
        let a = to_cartesian(MomentumRepr::Spherical { energy: 1.0, momentum: 0.0, theta: 1.3, phi: -2.0 }).unwrap();
        assert_eq!(a, FourMomentum::new(1.0, 0.0, 0.0, 0.0));
        let b = to_cartesian(MomentumRepr::Transverse { transverse_mass: 1.0, pt: 0.0, phi: 0.0, rapidity: 0.0 }).unwrap();
        assert_eq!(b, FourMomentum::new(1.0, 0.0, 0.0, 0.0));
        assert!(to_cartesian(MomentumRepr::Transverse { transverse_mass: 1.0, pt: -1.0, phi: 0.0, rapidity: 0.0 }).is_err());
        assert!(to_cartesian(MomentumRepr::Transverse { transverse_mass: -1.0, pt: 1.0, phi: 0.0, rapidity: 0.0 }).is_err());
    }
}
