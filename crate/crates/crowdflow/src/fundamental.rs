//! Closed-form constitutive laws: the revisited Kladek speed-density
//! relation, the speed-dependent sensory depth, the distance and angular
//! perception weights, and the platform-motion corrective factor.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Speed-density relation `v(rho) = v_M (1 - exp(-gamma (1/rho - 1/rho_M)))`.
///
/// Works in dimensional units or, with `v_max = rho_max = 1`, in the
/// nondimensional form used by the solvers. `gamma` carries the same unit
/// as `rho_max`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FundamentalDiagram {
    pub v_max: f64,
    pub rho_max: f64,
    pub gamma: f64,
}

impl FundamentalDiagram {
    /// Europe, rush-hour traffic: rho_M = 6 ped/m^2, v_M = 1.69 m/s.
    pub fn europe_rush() -> FundamentalDiagram {
        FundamentalDiagram { v_max: 1.69, rho_max: 6.0, gamma: 0.273 * 6.0 }
    }

    /// Asia, rush-hour traffic: rho_M = 7.7 ped/m^2, v_M = 1.48 m/s.
    pub fn asia_rush() -> FundamentalDiagram {
        FundamentalDiagram { v_max: 1.48, rho_max: 7.7, gamma: 0.273 * 7.7 }
    }

    /// Same law rescaled so that density and speed live in [0, 1].
    pub fn normalized(&self) -> FundamentalDiagram {
        FundamentalDiagram { v_max: 1.0, rho_max: 1.0, gamma: self.gamma / self.rho_max }
    }

    /// Walking speed at the perceived density. The density 0 maps to `v_max`
    /// (analytic limit of the exponential term).
    pub fn speed(&self, rho: f64) -> Result<f64> {
        if !(0.0..=self.rho_max).contains(&rho) {
            return Err(Error::DensityOutOfRange(rho));
        }
        Ok(self.speed_unchecked(rho))
    }

    #[inline]
    pub(crate) fn speed_unchecked(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            return self.v_max;
        }
        self.v_max * (1.0 - (-self.gamma * (1.0 / rho - 1.0 / self.rho_max)).exp())
    }

    /// Analytic derivative `dv/drho`; the limit at density 0 is 0.
    #[inline]
    pub fn speed_derivative(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        -self.v_max * self.gamma / (rho * rho)
            * (-self.gamma * (1.0 / rho - 1.0 / self.rho_max)).exp()
    }

    /// Flow `q(rho) = rho v(rho)`.
    pub fn flow(&self, rho: f64) -> Result<f64> {
        Ok(rho * self.speed(rho)?)
    }
}

/// Sensory-region parameters: minimum depth, visual half-angle, lateral
/// fading exponent and the reflex delay (in solver steps).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SensoryLaw {
    /// Minimum visual depth delta_0 (same length unit as the grid).
    pub delta0: f64,
    /// Visual field half-width, radians, in (0, pi/2].
    pub half_angle: f64,
    /// Lateral fading exponent mu >= 0 (1 = linear fading).
    pub mu: f64,
    /// Reflex delay tau_1, counted in solver steps through the speed ring
    /// buffer; 0 uses the current speed field.
    pub tau1_steps: usize,
}

impl SensoryLaw {
    /// 85 degree half-angle, linear fading, 5% minimum depth, no delay.
    pub fn default_visual() -> SensoryLaw {
        SensoryLaw {
            delta0: 0.05,
            half_angle: 85.0f64.to_radians(),
            mu: 1.0,
            tau1_steps: 0,
        }
    }

    /// Sensory depth `delta(v) = (Delta_s / v_max) v + delta_0` from the
    /// delayed walking speed and the free visual depth at this point.
    #[inline]
    pub fn depth(&self, delta_s: f64, v_delayed: f64, v_max: f64) -> f64 {
        delta_s / v_max * v_delayed + self.delta0
    }

    /// Lateral visual fading `G(alpha) = 1 - (|alpha|/alpha_bar)^mu`,
    /// checked against the visual field.
    pub fn angular_weight(&self, alpha: f64) -> Result<f64> {
        if alpha.abs() > self.half_angle {
            return Err(Error::OutsideVisualField { alpha: alpha.abs(), half_angle: self.half_angle });
        }
        Ok(self.lateral_fading(alpha))
    }

    /// Unchecked fading used by the field drivers, where the cone test has
    /// already bounded alpha (up to rounding).
    #[inline]
    pub(crate) fn lateral_fading(&self, alpha: f64) -> f64 {
        let r = alpha.abs() / self.half_angle;
        if self.mu == 1.0 {
            1.0 - r
        } else {
            1.0 - r.powf(self.mu)
        }
    }
}

/// Distance weight of strategy s3: `g(r_p) = 1 - 8 r_p / (10 delta)`,
/// ranging in [0.2, 1].
pub fn distance_weight(delta: f64, r_p: f64) -> Result<f64> {
    if r_p > delta {
        return Err(Error::OutsideRegion { rp: r_p, delta });
    }
    Ok(distance_weight_unchecked(delta, r_p))
}

#[inline]
pub(crate) fn distance_weight_unchecked(delta: f64, r_p: f64) -> f64 {
    1.0 - 0.8 * r_p / delta
}

/// Thresholds and delays for pedestrian sensitivity to lateral platform
/// motion.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MotionSensitivity {
    /// Threshold of motion perception, m/s^2.
    pub accel_perception: f64,
    /// Stopping threshold, m/s^2.
    pub accel_stop: f64,
    /// Reaction delay tau_hat_1, seconds.
    pub delay: f64,
    /// Stop-and-go hold tau_hat_2, seconds.
    pub hold: f64,
}

impl MotionSensitivity {
    pub fn footbridge_default() -> MotionSensitivity {
        MotionSensitivity { accel_perception: 0.1, accel_stop: 2.1, delay: 1.0, hold: 5.0 }
    }

    /// Corrective walking-speed factor from the delayed acceleration
    /// envelope. Inside a stop-and-go hold the factor is 0 regardless of the
    /// envelope; otherwise it is 1 below the perception threshold, 0 above
    /// the stopping threshold and ramps linearly in between.
    pub fn motion_factor(&self, env_delayed: f64, t: f64, t_stop: Option<f64>) -> f64 {
        if let Some(ts) = t_stop {
            if t > ts && t < ts + self.hold {
                return 0.0;
            }
        }
        if env_delayed <= self.accel_perception {
            1.0
        } else if env_delayed >= self.accel_stop {
            0.0
        } else {
            (self.accel_stop - env_delayed) / (self.accel_stop - self.accel_perception)
        }
    }
}
