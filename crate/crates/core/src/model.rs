//! Physical parameters, wall specifications, and the closed-form bulk and
//! surface potentials.

use crate::mesh::WallTag;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("stabilization constant S = {s} violates S >= Lbar/2 = {required} for the configured contact angles")]
    StabilizationTooSmall { s: f64, required: f64 },
}

/// Non-dimensional physical parameters of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    /// Viscosity coefficient.
    pub nu: f64,
    /// Capillary strength relative to the Newtonian stress.
    pub lambda: f64,
    /// Mobility coefficient.
    pub mobility: f64,
    /// Interface thickness.
    pub eps: f64,
    /// Gravity acceleration for the optional body force; 0 disables it.
    pub g0: f64,
    /// Time step.
    pub dt: f64,
}

impl PhysParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("M", self.mobility),
            ("eps", self.eps),
            ("dt", self.dt),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.g0.is_finite() {
            return Err(ModelError::InvalidParameter(format!("g0 must be finite, got {}", self.g0)));
        }
        Ok(())
    }
}

/// Per-wall boundary data: static contact angle, slip coefficient, tangential
/// wall speed, and whether the contact-line terms are active on this wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSpec {
    /// Static contact angle in degrees, in (0, 180).
    pub theta_s_deg: f64,
    /// Slip coefficient l >= 0 of the Navier condition.
    pub slip_l: f64,
    /// Signed tangential wall speed.
    pub u_wall: f64,
    /// Whether the contact-line boundary terms apply here.
    pub active_sclc: bool,
}

impl Default for WallSpec {
    fn default() -> Self {
        // theta_s = 90 degrees makes every boundary term vanish identically,
        // i.e. a natural Neumann condition.
        WallSpec { theta_s_deg: 90.0, slip_l: 0.0, u_wall: 0.0, active_sclc: true }
    }
}

impl WallSpec {
    pub fn theta_s_rad(&self) -> f64 {
        self.theta_s_deg * PI / 180.0
    }

    pub fn validate(&self, wall: WallTag) -> Result<(), ModelError> {
        if !(self.theta_s_deg > 0.0 && self.theta_s_deg < 180.0) {
            return Err(ModelError::InvalidParameter(format!(
                "theta_s on {} must lie in (0, 180) degrees, got {}",
                wall.name(),
                self.theta_s_deg
            )));
        }
        if !(self.slip_l >= 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "slip coefficient on {} must be nonnegative, got {}",
                wall.name(),
                self.slip_l
            )));
        }
        Ok(())
    }
}

/// All four walls in tag order (Left, Right, Bottom, Top).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Walls {
    pub left: WallSpec,
    pub right: WallSpec,
    pub bottom: WallSpec,
    pub top: WallSpec,
}

impl Walls {
    pub fn get(&self, tag: WallTag) -> &WallSpec {
        match tag {
            WallTag::Left => &self.left,
            WallTag::Right => &self.right,
            WallTag::Bottom => &self.bottom,
            WallTag::Top => &self.top,
        }
    }

    pub fn get_mut(&mut self, tag: WallTag) -> &mut WallSpec {
        match tag {
            WallTag::Left => &mut self.left,
            WallTag::Right => &mut self.right,
            WallTag::Bottom => &mut self.bottom,
            WallTag::Top => &mut self.top,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for tag in WallTag::ALL {
            self.get(tag).validate(tag)?;
        }
        Ok(())
    }

    /// Maximum of Lbar over walls with active contact-line terms.
    pub fn l_bar_max(&self) -> f64 {
        WallTag::ALL
            .iter()
            .filter(|&&t| self.get(t).active_sclc)
            .map(|&t| l_bar(self.get(t).theta_s_rad()))
            .fold(0.0, f64::max)
    }

    pub fn any_moving(&self) -> bool {
        WallTag::ALL.iter().any(|&t| self.get(t).u_wall != 0.0)
    }
}

/// How the stabilization constant S is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabSpec {
    /// S = max over active walls of Lbar(theta_s)/2, the minimal admissible
    /// value for the discrete energy law.
    Auto,
    Explicit(f64),
}

impl StabSpec {
    /// Resolves S, rejecting explicit values below Lbar_max/2.
    pub fn resolve(&self, walls: &Walls) -> Result<f64, ModelError> {
        let required = walls.l_bar_max() / 2.0;
        match *self {
            StabSpec::Auto => Ok(required),
            StabSpec::Explicit(s) => {
                if s + 1e-14 < required {
                    Err(ModelError::StabilizationTooSmall { s, required })
                } else {
                    Ok(s)
                }
            }
        }
    }
}

/// Ginzburg-Landau double well F(phi) = (phi^2 - 1)^2 / (4 eps).
pub fn bulk_f_potential(phi: f64, eps: f64) -> f64 {
    let s = phi * phi - 1.0;
    s * s / (4.0 * eps)
}

/// f = F' = (phi^3 - phi) / eps.
pub fn bulk_f_prime(phi: f64, eps: f64) -> f64 {
    (phi * phi * phi - phi) / eps
}

/// Surface energy density g(phi) = -(sqrt(2)/3) cos(theta_s) sin(pi phi / 2).
pub fn surf_g(phi: f64, theta_s: f64) -> f64 {
    -(2.0f64.sqrt() / 3.0) * theta_s.cos() * (PI * phi / 2.0).sin()
}

/// g'(phi) = -(sqrt(2) pi / 6) cos(theta_s) cos(pi phi / 2).
pub fn surf_g1(phi: f64, theta_s: f64) -> f64 {
    -(2.0f64.sqrt() * PI / 6.0) * theta_s.cos() * (PI * phi / 2.0).cos()
}

/// g''(phi) = (sqrt(2) pi^2 / 12) cos(theta_s) sin(pi phi / 2).
pub fn surf_g2(phi: f64, theta_s: f64) -> f64 {
    (2.0f64.sqrt() * PI * PI / 12.0) * theta_s.cos() * (PI * phi / 2.0).sin()
}

/// Lbar = max over phi of |g''| = (sqrt(2) pi^2 / 12) |cos(theta_s)|.
pub fn l_bar(theta_s: f64) -> f64 {
    (2.0f64.sqrt() * PI * PI / 12.0) * theta_s.cos().abs()
}
