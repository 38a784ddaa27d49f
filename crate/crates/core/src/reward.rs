//! Episode objective: net revolutions minus a weighted fall penalty.
//!
//! `r = r_rot - lambda * p_fall`, where `r_rot` sums wrapped frame-to-frame
//! changes of `theta_z` over pairs of present frames (in revolutions) and
//! `p_fall` is the fraction of frames in which the pen is absent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perception::PenObservation;
use crate::scalar::{wrap_angle, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig<T = f64> {
    /// Weight of the fall penalty.
    pub lambda: T,
    /// Success needs at least `2 pi - success_slack_rad` of net rotation.
    pub success_slack_rad: T,
    /// Success needs the final `success_tail_frames` frames present.
    pub success_tail_frames: usize,
}

impl<T: Scalar> Default for RewardConfig<T> {
    fn default() -> Self {
        Self {
            lambda: T::one(),
            success_slack_rad: T::of(0.1),
            success_tail_frames: 5,
        }
    }
}

impl<T: Scalar> RewardConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= T::zero() && self.lambda.is_finite()) {
            return Err(Error::Config("reward lambda must be finite and non-negative".into()));
        }
        if !(self.success_slack_rad >= T::zero() && self.success_slack_rad.is_finite()) {
            return Err(Error::Config("success_slack_rad must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown<T = f64> {
    pub r_rot: T,
    pub p_fall: T,
    pub r: T,
}

/// Sum of wrapped `theta_z` increments between consecutive frames that are
/// both present, in radians.
pub fn net_rotation<T: Scalar>(obs: &[PenObservation<T>]) -> T {
    obs.windows(2)
        .filter_map(|w| match (&w[0], &w[1]) {
            (a, b) if a.present && b.present => Some(wrap_angle(b.theta_z? - a.theta_z?)),
            _ => None,
        })
        .fold(T::zero(), |acc, d| acc + d)
}

/// Net revolutions about the camera z-axis. Empty input gives 0.
pub fn rotation_reward<T: Scalar>(obs: &[PenObservation<T>]) -> T {
    net_rotation(obs) / T::two_pi()
}

/// Fraction of frames where the pen is absent.
pub fn fall_penalty<T: Scalar>(obs: &[PenObservation<T>]) -> Result<T> {
    if obs.is_empty() {
        return Err(Error::Contract("fall penalty of an empty trajectory".into()));
    }
    let absent = obs.iter().filter(|o| !o.present).count();
    Ok(T::of_usize(absent) / T::of_usize(obs.len()))
}

pub fn objective<T: Scalar>(obs: &[PenObservation<T>], cfg: &RewardConfig<T>) -> Result<RewardBreakdown<T>> {
    let p_fall = fall_penalty(obs)?;
    let r_rot = rotation_reward(obs);
    Ok(RewardBreakdown {
        r_rot,
        p_fall,
        r: r_rot - cfg.lambda * p_fall,
    })
}

/// Automated success label: a full turn (within the configured slack) and
/// the pen still held over the final frames.
pub fn label_success<T: Scalar>(obs: &[PenObservation<T>], cfg: &RewardConfig<T>) -> bool {
    if obs.is_empty() {
        return false;
    }
    let turned = net_rotation(obs) >= T::two_pi() - cfg.success_slack_rad;
    let tail = cfg.success_tail_frames.min(obs.len());
    turned && obs[obs.len() - tail..].iter().all(|o| o.present)
}
