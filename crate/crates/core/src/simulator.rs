//! Deterministic surrogate for one grasp, spin and catch episode.
//!
//! The pen is a rigid rod pivoting about the grasp point in the camera
//! xy-plane. The spin is an angular impulse followed by exponential drag:
//!
//! ```text
//! a      = grasp_offset - com_offset
//! I      = m L^2 / 12 + m a^2
//! w0     = kappa * sum_i(w_i * servo_deg_i) / I
//! theta  = (w0 / gamma) * (1 - exp(-gamma t))
//! ```
//!
//! The episode fails by slip (lever arm beyond the slip limit), by stall
//! (too slow while on the far side of finger m3) or by missing the catch
//! window around one full turn at `t = delay`. An undershoot drops right
//! after the catch time; an overshoot drops as soon as it spins past the
//! window, which can be before the catch time. The result is rendered as
//! noisy surface points so the reward has to go through perception.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::action_space::{denormalize, ActionParams, PhysicalAction, ScalingConfig, SERVO_COUNT};
use crate::error::{Error, Result};
use crate::perception::{observe_trajectory, FilterConfig, TrajectoryFrame};
use crate::reward::{label_success, objective, RewardBreakdown, RewardConfig};
use crate::scalar::{rem_two_pi, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectModel<T = f64> {
    pub name: String,
    /// Meters.
    pub length: T,
    /// Meters.
    pub radius: T,
    /// Kilograms.
    pub mass: T,
    /// Signed offset of the center of mass from the geometric center along
    /// the major axis, meters.
    pub com_offset: T,
}

/// Names accepted by [`ObjectModel::preset`].
pub const PRESET_NAMES: [&str; 5] = ["pen1", "pen2", "pen3", "screwdriver", "brush"];

impl<T: Scalar> ObjectModel<T> {
    fn new(name: &str, length: f64, radius: f64, mass: f64, com_offset: f64) -> Self {
        Self {
            name: name.to_owned(),
            length: T::of(length),
            radius: T::of(radius),
            mass: T::of(mass),
            com_offset: T::of(com_offset),
        }
    }

    /// Built-in objects. Lengths and masses are measured values; the
    /// center-of-mass offsets of everything except `pen1`, and the radii of
    /// the screwdriver and brush, are calibration choices.
    pub fn preset(name: &str) -> Result<Self> {
        let model = match name {
            "pen1" => Self::new("pen1", 0.304, 0.00425, 0.038, 0.0),
            "pen2" => Self::new("pen2", 0.304, 0.00425, 0.026, 0.04),
            "pen3" => Self::new("pen3", 0.304, 0.00425, 0.026, -0.04),
            "screwdriver" => Self::new("screwdriver", 0.216, 0.0122, 0.038, 0.05),
            "brush" => Self::new("brush", 0.352, 0.007, 0.042, 0.06),
            other => {
                return Err(Error::Config(format!(
                    "unknown object preset `{other}` (expected one of {PRESET_NAMES:?})"
                )))
            }
        };
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !(positive(self.length) && positive(self.radius) && positive(self.mass)) {
            return Err(Error::Config(format!(
                "object `{}`: length, radius and mass must be positive",
                self.name
            )));
        }
        if !(self.com_offset.abs() < self.length / T::of(2.0)) {
            return Err(Error::Config(format!(
                "object `{}`: center of mass lies outside the object",
                self.name
            )));
        }
        Ok(())
    }

    /// Moment of inertia about a pivot at `lever` from the center of mass.
    pub fn inertia_about(&self, lever: T) -> T {
        self.mass * self.length * self.length / T::of(12.0) + self.mass * lever * lever
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig<T = f64> {
    /// Frames per second.
    pub fps: T,
    /// Seconds.
    pub episode_duration: T,
    /// Angular impulse per weighted servo degree, N m s / deg.
    pub impulse_gain: T,
    pub drive_weights: [T; SERVO_COUNT],
    /// 1/s.
    pub drag_rate: T,
    /// rad/s.
    pub stall_speed: T,
    /// Half-width of the catch window around one full turn, rad.
    pub catch_window: T,
    /// Largest tolerated distance between grasp point and center of mass, m.
    pub grasp_slip_limit: T,
    pub surface_points: usize,
    /// Isotropic Gaussian noise on every rendered point, m.
    pub noise_sigma: T,
    pub rng_seed: u64,
    /// Camera-frame position of the grasp pivot, m.
    pub pivot: [T; 3],
    /// Translation applied to a dropped pen, m.
    pub drop_offset: [T; 3],
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            fps: T::of(30.0),
            episode_duration: T::of(2.0),
            impulse_gain: T::of(2.2e-5),
            drive_weights: [0.5, 0.5, 1.0, 1.0, 0.5, 0.5].map(T::of),
            drag_rate: T::of(0.5),
            stall_speed: T::of(2.0),
            catch_window: T::of(0.6),
            grasp_slip_limit: T::of(0.035),
            surface_points: 200,
            noise_sigma: T::of(0.0005),
            rng_seed: 0,
            pivot: [0.0, 0.0, 0.35].map(T::of),
            drop_offset: [0.0, -1.0, 0.0].map(T::of),
        }
    }
}

impl<T: Scalar> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        let checks = [
            (self.fps >= T::one() && self.fps.is_finite(), "fps must be at least 1"),
            (positive(self.episode_duration), "episode_duration must be positive"),
            (positive(self.impulse_gain), "impulse_gain must be positive"),
            (positive(self.drag_rate), "drag_rate must be positive"),
            (positive(self.stall_speed), "stall_speed must be positive"),
            (positive(self.catch_window), "catch_window must be positive"),
            (positive(self.grasp_slip_limit), "grasp_slip_limit must be positive"),
            (self.surface_points > 0, "surface_points must be positive"),
            (
                self.noise_sigma >= T::zero() && self.noise_sigma.is_finite(),
                "noise_sigma must be non-negative",
            ),
            (
                self.drive_weights.iter().all(|w| w.is_finite()),
                "drive_weights must be finite",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).into())),
            None => Ok(()),
        }
    }

    /// `floor(fps * duration) + 1`.
    pub fn frame_count(&self) -> usize {
        (self.fps * self.episode_duration).floor().as_f64() as usize + 1
    }

    pub fn frame_time(&self, k: usize) -> T {
        T::of_usize(k) / self.fps
    }
}

/// Closed-form rotation of the free spin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinProfile<T> {
    pub omega0: T,
    pub drag_rate: T,
}

impl<T: Scalar> SpinProfile<T> {
    pub fn angle(&self, t: T) -> T {
        self.omega0 / self.drag_rate * (T::one() - (-self.drag_rate * t).exp())
    }

    pub fn rate(&self, t: T) -> T {
        self.omega0 * (-self.drag_rate * t).exp()
    }

    /// `|theta(inf)| = |w0| / gamma`.
    pub fn asymptote(&self) -> T {
        self.omega0 / self.drag_rate
    }

    /// First time the rotation reaches `target` (same sign as `w0`), if ever.
    pub fn time_to(&self, target: T) -> Option<T> {
        let ratio = target * self.drag_rate / self.omega0;
        if !(ratio >= T::zero() && ratio < T::one()) {
            return None;
        }
        Some(-(T::one() - ratio).ln() / self.drag_rate)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult<T: Scalar = f64> {
    pub fps: T,
    pub trajectory: Vec<TrajectoryFrame<T>>,
    pub ground_truth_theta: Vec<T>,
    /// First frame at which the pen is gone; it stays gone afterwards.
    pub dropped_at: Option<usize>,
    pub caught: bool,
    pub omega0: T,
}

/// Initial angular rate for an action on an object.
pub fn spin_profile<T: Scalar>(action: &PhysicalAction<T>, obj: &ObjectModel<T>, cfg: &SimConfig<T>) -> SpinProfile<T> {
    let lever = action.grasp_offset_m - obj.com_offset;
    let inertia = obj.inertia_about(lever);
    let drive = action
        .servo_deltas_deg
        .iter()
        .zip(&cfg.drive_weights)
        .fold(T::zero(), |acc, (s, w)| acc + *s * *w);
    SpinProfile {
        omega0: cfg.impulse_gain * drive / inertia,
        drag_rate: cfg.drag_rate,
    }
}

pub fn simulate<T: Scalar>(
    action: &PhysicalAction<T>,
    obj: &ObjectModel<T>,
    cfg: &SimConfig<T>,
) -> Result<EpisodeResult<T>> {
    obj.validate()?;
    cfg.validate()?;
    let half = obj.length / T::of(2.0);
    if !(action.grasp_offset_m.abs() < half) {
        return Err(Error::SimulationInput(format!(
            "grasp offset {} m is off the {} m object",
            action.grasp_offset_m.as_f64(),
            obj.length.as_f64()
        )));
    }
    if !(action.delay_s.is_finite() && action.delay_s >= T::zero())
        || action.servo_deltas_deg.iter().any(|s| !s.is_finite())
    {
        return Err(Error::SimulationInput(
            "action must be finite with a non-negative delay".into(),
        ));
    }

    let profile = spin_profile(action, obj, cfg);
    let frames = cfg.frame_count();
    let t_catch = action.delay_s;
    let lever = action.grasp_offset_m - obj.com_offset;

    let mut dropped_at = None;
    let mut caught = false;
    // Time after which theta stays constant for ground-truth purposes.
    let mut t_stop = t_catch;

    if lever.abs() > cfg.grasp_slip_limit {
        dropped_at = Some(0);
        t_stop = T::zero();
    } else {
        let far_lo = T::frac_pi_2();
        let far_hi = T::of(3.0) * T::frac_pi_2();
        let past_catch = T::two_pi() + cfg.catch_window;
        for k in 0..frames {
            let t = cfg.frame_time(k);
            if t > t_catch {
                break;
            }
            let theta = profile.angle(t);
            let side = rem_two_pi(theta);
            // A pen that has already spun past the catch window before m1
            // closes is gone too.
            let stalled = profile.rate(t).abs() < cfg.stall_speed && side > far_lo && side < far_hi;
            if stalled || theta > past_catch {
                dropped_at = Some(k);
                t_stop = t;
                break;
            }
        }
        if dropped_at.is_none() {
            let theta_catch = profile.angle(t_catch);
            if (theta_catch - T::two_pi()).abs() <= cfg.catch_window {
                caught = true;
            } else {
                dropped_at = (0..frames).find(|&k| cfg.frame_time(k) > t_catch);
            }
        }
    }

    let ground_truth_theta: Vec<T> = (0..frames)
        .map(|k| profile.angle(cfg.frame_time(k).min(t_stop)))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let trajectory = ground_truth_theta
        .iter()
        .enumerate()
        .map(|(k, &theta)| {
            let gone = dropped_at.is_some_and(|d| k >= d);
            TrajectoryFrame {
                t: cfg.frame_time(k),
                points: render_rod(obj, action.grasp_offset_m, theta, gone, cfg, &mut rng),
            }
        })
        .collect();

    Ok(EpisodeResult {
        fps: cfg.fps,
        trajectory,
        ground_truth_theta,
        dropped_at,
        caught,
        omega0: profile.omega0,
    })
}

/// Surface samples of the rod rotated by `theta` about the camera z-axis
/// through the pivot. Samples come in diametrically opposite pairs, so the
/// sample covariance has no axial/radial cross term and noiseless PCA
/// recovers the rod axis exactly.
fn render_rod<T: Scalar>(
    obj: &ObjectModel<T>,
    grasp: T,
    theta: T,
    gone: bool,
    cfg: &SimConfig<T>,
    rng: &mut ChaCha8Rng,
) -> Vec<Vector3<T>> {
    let m = cfg.surface_points;
    let half = obj.length.as_f64() / 2.0;
    let radius = obj.radius;
    let (sin, cos) = (theta.sin(), theta.cos());
    let mut origin = Vector3::from(cfg.pivot);
    if gone {
        origin += Vector3::from(cfg.drop_offset);
    }
    let noise = Normal::new(0.0, cfg.noise_sigma.as_f64().max(f64::MIN_POSITIVE)).expect("finite sigma");
    let noisy = cfg.noise_sigma > T::zero();

    let mut body = Vec::with_capacity(m);
    for _ in 0..m / 2 {
        let along = T::of(rng.random_range(-half..half)) - grasp;
        let phi = T::of(rng.random_range(0.0..std::f64::consts::TAU));
        let (ry, rz) = (radius * phi.cos(), radius * phi.sin());
        body.push(Vector3::new(along, ry, rz));
        body.push(Vector3::new(along, -ry, -rz));
    }
    if m % 2 == 1 {
        body.push(Vector3::new(
            T::of(rng.random_range(-half..half)) - grasp,
            T::zero(),
            T::zero(),
        ));
    }

    body.into_iter()
        .map(|b| {
            let mut p = Vector3::new(b.x * cos - b.y * sin, b.x * sin + b.y * cos, b.z) + origin;
            if noisy {
                for c in p.iter_mut() {
                    *c += T::of(noise.sample(rng));
                }
            }
            p
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionEvaluation<T = f64> {
    pub reward: RewardBreakdown<T>,
    pub success: bool,
}

/// Everything needed to score an action besides the action itself.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationSetup<T: Scalar = f64> {
    pub object: ObjectModel<T>,
    pub scaling: ScalingConfig<T>,
    pub sim: SimConfig<T>,
    pub filter: FilterConfig<T>,
    pub reward: RewardConfig<T>,
}

/// Scores a rendered episode from its point clouds alone.
pub fn score_episode<T: Scalar>(
    trajectory: &[TrajectoryFrame<T>],
    filter: &FilterConfig<T>,
    reward: &RewardConfig<T>,
) -> Result<ActionEvaluation<T>> {
    let obs = observe_trajectory(trajectory, filter);
    Ok(ActionEvaluation {
        reward: objective(&obs, reward)?,
        success: label_success(&obs, reward),
    })
}

/// Denormalize, simulate, observe and score. Ground-truth angles never
/// enter the reward.
pub fn evaluate_action<T: Scalar>(a: &ActionParams<T>, setup: &EvaluationSetup<T>) -> Result<ActionEvaluation<T>> {
    setup.filter.validate()?;
    setup.reward.validate()?;
    let physical = denormalize(a, &setup.scaling)?;
    let episode = simulate(&physical, &setup.object, &setup.sim)?;
    score_episode(&episode.trajectory, &setup.filter, &setup.reward)
}
