//! Reduced model of a three-joint manipulator whose third joint is passive,
//! written at the center of percussion of the third link, and the exact
//! coordinate change that turns it into the chained form.
//!
//! In these coordinates the translational and rotational dynamics decouple:
//! the center of percussion accelerates only along the link direction while
//! the link angle integrates its own input. The change of coordinates is a
//! diffeomorphism on |theta| < pi/2; every operation that evaluates sec or
//! tan refuses angles within `SINGULARITY_MARGIN` of the boundary instead
//! of producing enormous finite values.

use crate::chained::{ChainedInput, ChainedState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Angular distance from |theta| = pi/2 at which transforms give up.
/// Keeps sec^2(theta) below roughly 1e6.
pub const SINGULARITY_MARGIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum TransformError {
    #[error("link angle {theta} rad within {margin} rad of the +/-pi/2 singularity")]
    NearSingularity { theta: f64, margin: f64 },
}

/// Third-link inertial parameters. `l_cop` is always derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipulatorParams {
    pub m3: f64,
    pub d3: f64,
    #[serde(rename = "I3")]
    pub i3: f64,
}

impl ManipulatorParams {
    pub fn new(m3: f64, d3: f64, i3: f64) -> Self {
        assert!(m3 > 0.0 && d3 > 0.0 && i3 > 0.0, "parameters must be positive");
        ManipulatorParams { m3, d3, i3 }
    }

    /// Distance from the passive joint to the center of percussion.
    pub fn l_cop(&self) -> f64 {
        (self.i3 + self.m3 * self.d3 * self.d3) / (self.m3 * self.d3)
    }
}

/// Center-of-percussion position, link angle, and their rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ManipulatorState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl ManipulatorState {
    pub const DIM: usize = 6;

    pub fn at_rest(x: f64, y: f64, theta: f64) -> Self {
        ManipulatorState {
            x,
            y,
            theta,
            ..Default::default()
        }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), Self::DIM);
        ManipulatorState {
            x: v[0],
            y: v[1],
            theta: v[2],
            dx: v[3],
            dy: v[4],
            dtheta: v[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.x, self.y, self.theta, self.dx, self.dy, self.dtheta]
    }

    pub fn positions(&self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }
}

/// Translational acceleration along the link and angular acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AccelInput {
    pub alpha1: f64,
    pub alpha2: f64,
}

fn check_angle(theta: f64) -> Result<(), TransformError> {
    if theta.abs() >= std::f64::consts::FRAC_PI_2 - SINGULARITY_MARGIN {
        Err(TransformError::NearSingularity {
            theta,
            margin: SINGULARITY_MARGIN,
        })
    } else {
        Ok(())
    }
}

/// State derivative of the reduced model: the center of percussion
/// accelerates along the link, the angle integrates its own input.
pub fn dynamics(chi: ManipulatorState, alpha: AccelInput) -> [f64; 6] {
    [
        chi.dx,
        chi.dy,
        chi.dtheta,
        chi.theta.cos() * alpha.alpha1,
        chi.theta.sin() * alpha.alpha1,
        alpha.alpha2,
    ]
}

/// Chained coordinates of a manipulator state:
/// xi = [x - l_cop, tan(theta), y], xidot = [dx, dtheta*sec^2(theta), dy].
pub fn to_chained(
    chi: ManipulatorState,
    params: &ManipulatorParams,
) -> Result<ChainedState, TransformError> {
    check_angle(chi.theta)?;
    let sec2 = 1.0 / (chi.theta.cos() * chi.theta.cos());
    Ok(ChainedState {
        xi1: chi.x - params.l_cop(),
        xi2: chi.theta.tan(),
        xi3: chi.y,
        dxi1: chi.dx,
        dxi2: chi.dtheta * sec2,
        dxi3: chi.dy,
    })
}

/// Inverse of [`to_chained`]; total because atan lands inside (-pi/2, pi/2).
pub fn from_chained(xi: ChainedState, params: &ManipulatorParams) -> ManipulatorState {
    let theta = xi.xi2.atan();
    let cos2 = theta.cos() * theta.cos();
    ManipulatorState {
        x: xi.xi1 + params.l_cop(),
        y: xi.xi3,
        theta,
        dx: xi.dxi1,
        dy: xi.dxi3,
        dtheta: xi.dxi2 * cos2,
    }
}

/// Map chained-form inputs to manipulator accelerations at the current
/// angle and angular rate: alpha1 = u1*sec(theta),
/// alpha2 = u2*cos^2(theta) - 2*dtheta^2*tan(theta).
pub fn input_transform(
    u: ChainedInput,
    theta: f64,
    dtheta: f64,
) -> Result<AccelInput, TransformError> {
    check_angle(theta)?;
    let cos = theta.cos();
    Ok(AccelInput {
        alpha1: u.u1 / cos,
        alpha2: u.u2 * cos * cos - 2.0 * dtheta * dtheta * theta.tan(),
    })
}
