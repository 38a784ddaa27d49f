//! Normalized grasp/spin/catch action parameterization.
//!
//! An action is eight numbers in the unit box `[-1, 1]`: six servo angle
//! deltas (fingers m1, m2, m3, two servos each), the catch delay and the
//! grasp offset. [`denormalize`] maps them to physical units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SERVO_COUNT: usize = 6;
/// Search dimension with grasp optimization enabled.
pub const ACTION_DIM: usize = 8;
/// Search dimension with the grasp offset pinned at the pen center.
pub const ACTION_DIM_NO_GRASP: usize = 7;

pub const NORM_LOWER: f64 = -1.0;
pub const NORM_UPPER: f64 = 1.0;

/// Component names in flattened order.
pub const COMPONENT_NAMES: [&str; ACTION_DIM] = ["m1a", "m1b", "m2a", "m2b", "m3a", "m3b", "delay", "grasp"];

/// Hand-crafted starting action: `[0, 0, 0.5, 1.0, 0.5, 1.0]` servo deltas,
/// zero delay and grasp offsets.
pub const INITIAL_ACTION: [f64; ACTION_DIM] = [0.0, 0.0, 0.5, 1.0, 0.5, 1.0, 0.0, 0.0];

// Tolerance for values that land a few ulps outside the box after an
// affine round trip.
const BOX_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionParams<T = f64> {
    /// Servo deltas in `[m1a, m1b, m2a, m2b, m3a, m3b]` order.
    pub s_norm: [T; SERVO_COUNT],
    pub d_norm: T,
    pub g_norm: T,
}

impl<T: Scalar> ActionParams<T> {
    /// Validating constructor; rejects any component outside `[-1, 1]`.
    pub fn new(s_norm: [T; SERVO_COUNT], d_norm: T, g_norm: T) -> Result<Self> {
        let a = Self { s_norm, d_norm, g_norm };
        a.validate()?;
        Ok(a)
    }

    pub fn initial() -> Self {
        Self::from_array(INITIAL_ACTION.map(T::of))
    }

    fn from_array(v: [T; ACTION_DIM]) -> Self {
        let mut s_norm = [T::zero(); SERVO_COUNT];
        s_norm.copy_from_slice(&v[..SERVO_COUNT]);
        Self {
            s_norm,
            d_norm: v[6],
            g_norm: v[7],
        }
    }

    /// Flattened `[s.., d, g]` view.
    pub fn to_array(&self) -> [T; ACTION_DIM] {
        let mut out = [T::zero(); ACTION_DIM];
        out[..SERVO_COUNT].copy_from_slice(&self.s_norm);
        out[6] = self.d_norm;
        out[7] = self.g_norm;
        out
    }

    /// Flattened vector for the optimizer: 8 components, or 7 when the grasp
    /// is not searched.
    pub fn to_search_vector(&self, grasp_enabled: bool) -> Vec<T> {
        let full = self.to_array();
        let n = if grasp_enabled { ACTION_DIM } else { ACTION_DIM_NO_GRASP };
        full[..n].to_vec()
    }

    /// Inverse of [`to_search_vector`](Self::to_search_vector). A 7-vector
    /// yields `g_norm = 0`. Components are clamped into the box.
    pub fn from_search_vector(v: &[T]) -> Result<Self> {
        match v.len() {
            ACTION_DIM => Ok(clamp_to_bounds(v)),
            ACTION_DIM_NO_GRASP => {
                let mut full = [T::zero(); ACTION_DIM];
                full[..ACTION_DIM_NO_GRASP].copy_from_slice(v);
                Ok(clamp_to_bounds(&full))
            }
            n => Err(Error::Contract(format!(
                "search vector must have {ACTION_DIM_NO_GRASP} or {ACTION_DIM} components, got {n}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (value, name) in self.to_array().into_iter().zip(COMPONENT_NAMES) {
            check_box(name, value, T::zero())?;
        }
        Ok(())
    }
}

fn check_box<T: Scalar>(component: &'static str, value: T, slack: T) -> Result<()> {
    let lo = T::of(NORM_LOWER) - slack;
    let hi = T::of(NORM_UPPER) + slack;
    // NaN fails both comparisons and is rejected as well.
    if value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::BoundsViolation {
            component,
            value: value.as_f64(),
            lower: NORM_LOWER,
            upper: NORM_UPPER,
        })
    }
}

/// An action in physical units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalAction<T = f64> {
    pub servo_deltas_deg: [T; SERVO_COUNT],
    pub delay_s: T,
    /// Signed displacement of the grasp point from the pen center along the
    /// pen axis.
    pub grasp_offset_m: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig<T = f64> {
    pub servo_scales_deg: [T; SERVO_COUNT],
    pub delay_gain: T,
    pub delay_bias: T,
    pub grasp_max_m: T,
}

impl<T: Scalar> Default for ScalingConfig<T> {
    fn default() -> Self {
        Self {
            servo_scales_deg: [30.0, 35.0, 70.0, 70.0, 35.0, 45.0].map(T::of),
            delay_gain: T::of(0.2),
            delay_bias: T::of(0.7),
            grasp_max_m: T::of(0.10),
        }
    }
}

impl<T: Scalar> ScalingConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self
            .servo_scales_deg
            .iter()
            .position(|s| !(s.is_finite() && *s > T::zero()))
        {
            return Err(Error::Config(format!(
                "servo_scales_deg[{i}] must be positive and finite"
            )));
        }
        if !(self.delay_gain > T::zero() && self.delay_gain.is_finite()) {
            return Err(Error::Config("delay_gain must be positive".into()));
        }
        if !(self.delay_bias - self.delay_gain > T::zero() && self.delay_bias.is_finite()) {
            return Err(Error::Config("delay_bias - delay_gain must be positive".into()));
        }
        if !(self.grasp_max_m > T::zero() && self.grasp_max_m.is_finite()) {
            return Err(Error::Config("grasp_max_m must be positive".into()));
        }
        Ok(())
    }

    /// Shortest and longest catch delay representable by the box.
    pub fn delay_range(&self) -> (T, T) {
        (self.delay(T::of(NORM_LOWER)), self.delay(T::of(NORM_UPPER)))
    }

    fn delay(&self, d_norm: T) -> T {
        snap_to_nanoseconds(self.delay_gain * d_norm + self.delay_bias)
    }
}

// The affine delay map evaluated in binary floating point leaves a one-ulp
// residue at decimal endpoints (0.7 - 0.2 is 0.49999999999999994 in f64).
// Values within a few ulps of the nanosecond grid are snapped onto it; all
// other values pass through untouched, so the map stays invertible to
// machine precision.
fn snap_to_nanoseconds<T: Scalar>(x: T) -> T {
    let grid = T::of(1e9);
    let snapped = (x * grid).round() / grid;
    let tol = T::of(4.0) * T::epsilon() * x.abs().max(T::one());
    if (snapped - x).abs() <= tol {
        snapped
    } else {
        x
    }
}

/// Maps a normalized action to servo degrees, seconds and meters.
pub fn denormalize<T: Scalar>(a: &ActionParams<T>, c: &ScalingConfig<T>) -> Result<PhysicalAction<T>> {
    a.validate()?;
    c.validate()?;
    let mut servo_deltas_deg = [T::zero(); SERVO_COUNT];
    for ((out, s), scale) in servo_deltas_deg.iter_mut().zip(a.s_norm).zip(c.servo_scales_deg) {
        *out = s * scale;
    }
    Ok(PhysicalAction {
        servo_deltas_deg,
        delay_s: c.delay(a.d_norm),
        grasp_offset_m: a.g_norm * c.grasp_max_m,
    })
}

/// Inverse of [`denormalize`].
pub fn normalize<T: Scalar>(p: &PhysicalAction<T>, c: &ScalingConfig<T>) -> Result<ActionParams<T>> {
    c.validate()?;
    let slack = T::of(BOX_SLACK);
    let lo = T::of(NORM_LOWER);
    let hi = T::of(NORM_UPPER);
    let fit = |name: &'static str, v: T| -> Result<T> {
        check_box(name, v, slack)?;
        Ok(v.clamp(lo, hi))
    };
    let mut s_norm = [T::zero(); SERVO_COUNT];
    for i in 0..SERVO_COUNT {
        s_norm[i] = fit(COMPONENT_NAMES[i], p.servo_deltas_deg[i] / c.servo_scales_deg[i])?;
    }
    let d_norm = fit("delay", (p.delay_s - c.delay_bias) / c.delay_gain)?;
    let g_norm = fit("grasp", p.grasp_offset_m / c.grasp_max_m)?;
    Ok(ActionParams { s_norm, d_norm, g_norm })
}

/// Catch motion for finger m1: the negated spin deltas of its two servos.
/// Fingers m2 and m3 hold still during the catch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatchAction<T = f64> {
    pub m1_deltas_deg: [T; 2],
}

pub fn catch_action<T: Scalar>(p: &PhysicalAction<T>) -> CatchAction<T> {
    CatchAction {
        m1_deltas_deg: [-p.servo_deltas_deg[0], -p.servo_deltas_deg[1]],
    }
}

/// Projects an arbitrary 8-vector onto the box (componentwise clamp, the
/// nearest point in the L-infinity sense). NaN components map to 0.
///
/// # Panics
///
/// If `v` does not have exactly eight components.
pub fn clamp_to_bounds<T: Scalar>(v: &[T]) -> ActionParams<T> {
    assert_eq!(v.len(), ACTION_DIM, "clamp_to_bounds expects an 8-vector");
    let lo = T::of(NORM_LOWER);
    let hi = T::of(NORM_UPPER);
    let mut out = [T::zero(); ACTION_DIM];
    for (o, x) in out.iter_mut().zip(v) {
        *o = if x.is_nan() { T::zero() } else { x.clamp(lo, hi) };
    }
    ActionParams::from_array(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phys(deg: [f64; 6]) -> PhysicalAction {
        PhysicalAction {
            servo_deltas_deg: deg,
            delay_s: 0.7,
            grasp_offset_m: 0.0,
        }
    }

    #[test]
    fn initial_action_scales_to_degrees() {
        let c = ScalingConfig::default();
        let p = denormalize(&ActionParams::<f64>::initial(), &c).unwrap();
        assert_eq!(p.servo_deltas_deg, [0.0, 0.0, 35.0, 70.0, 17.5, 45.0]);
        assert_eq!(p.delay_s, 0.7);
        assert_eq!(p.grasp_offset_m, 0.0);
    }

    #[test]
    fn delay_endpoints_are_exact() {
        let c = ScalingConfig::<f64>::default();
        assert_eq!(c.delay_range(), (0.5, 0.9));
        let mut a = ActionParams::<f64>::initial();
        a.d_norm = -1.0;
        assert_eq!(denormalize(&a, &c).unwrap().delay_s, 0.5);
        a.d_norm = 1.0;
        assert_eq!(denormalize(&a, &c).unwrap().delay_s, 0.9);
    }

    #[test]
    fn out_of_box_component_is_named() {
        let mut a = ActionParams::<f64>::initial();
        a.d_norm = 1.5;
        match denormalize(&a, &ScalingConfig::default()) {
            Err(Error::BoundsViolation { component, .. }) => assert_eq!(component, "delay"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ActionParams::new([0.0, 0.0, 0.0, 0.0, 0.0, f64::NAN], 0.0, 0.0).is_err());
    }

    #[test]
    fn normalize_examples() {
        let c = ScalingConfig::default();
        let a = normalize(&phys([0.0, 0.0, 35.0, 70.0, 17.5, 45.0]), &c).unwrap();
        assert_eq!(a.s_norm, [0.0, 0.0, 0.5, 1.0, 0.5, 1.0]);
        assert_eq!(a.d_norm, 0.0);
        let mut p = phys([0.0; 6]);
        p.grasp_offset_m = 0.05;
        assert!((normalize(&p, &c).unwrap().g_norm - 0.5).abs() < 1e-15);
        p.servo_deltas_deg[3] = 71.0;
        assert!(matches!(
            normalize(&p, &c),
            Err(Error::BoundsViolation { component: "m2b", .. })
        ));
    }

    #[test]
    fn catch_negates_m1_only() {
        assert_eq!(
            catch_action(&phys([10.0, -20.0, 5.0, 5.0, 5.0, 5.0])).m1_deltas_deg,
            [-10.0, 20.0]
        );
        assert_eq!(catch_action(&phys([0.0; 6])).m1_deltas_deg, [-0.0, -0.0]);
        assert_eq!(
            catch_action(&phys([-30.0, 35.0, 0.0, 0.0, 0.0, 0.0])).m1_deltas_deg,
            [30.0, -35.0]
        );
    }

    #[test]
    fn clamp_examples() {
        let a = clamp_to_bounds(&[1.7, -2.0, 0.0, 0.0, 0.0, 0.0, 0.5, -0.3]);
        assert_eq!(a.to_array(), [1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.5, -0.3]);
        let inside = [0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8];
        assert_eq!(clamp_to_bounds(&inside).to_array(), inside);
    }

    #[test]
    fn search_vector_without_grasp_pins_center() {
        let a = ActionParams::<f64>::from_search_vector(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]).unwrap();
        assert_eq!(a.g_norm, 0.0);
        assert_eq!(a.to_search_vector(false).len(), 7);
        assert!(ActionParams::<f64>::from_search_vector(&[0.0; 5]).is_err());
    }

    #[test]
    fn invalid_scaling_rejected() {
        let c = ScalingConfig::<f64> {
            delay_bias: 0.1,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = ScalingConfig::<f64>::default();
        c.servo_scales_deg[2] = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn generic_over_f32() {
        let c = ScalingConfig::<f32>::default();
        let p = denormalize(&ActionParams::<f32>::initial(), &c).unwrap();
        assert_eq!(p.servo_deltas_deg, [0.0, 0.0, 35.0, 70.0, 17.5, 45.0]);
        let (lo, hi) = c.delay_range();
        assert!((lo - 0.5).abs() < 1e-6 && (hi - 0.9).abs() < 1e-6);
    }

    fn unit() -> impl Strategy<Value = f64> {
        -1.0f64..=1.0
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(v in proptest::collection::vec(-5.0f64..5.0, 8)) {
            let once = clamp_to_bounds(&v).to_array();
            prop_assert_eq!(clamp_to_bounds(&once).to_array(), once);
            for (c, x) in once.iter().zip(&v) {
                // nearest point of the box, componentwise
                prop_assert_eq!(*c, x.clamp(-1.0, 1.0));
            }
        }

        #[test]
        fn round_trip_is_identity(s in proptest::array::uniform6(unit()), d in unit(), g in unit()) {
            let c = ScalingConfig::default();
            let a = ActionParams::new(s, d, g).unwrap();
            let back = normalize(&denormalize(&a, &c).unwrap(), &c).unwrap();
            for (x, y) in a.to_array().iter().zip(back.to_array()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn denormalize_is_increasing(s in proptest::array::uniform6(unit()), d in unit(), g in unit(),
                                     i in 0usize..8, step in 1e-6f64..0.5) {
            let c = ScalingConfig::default();
            let a = ActionParams::new(s, d, g).unwrap();
            let mut v = a.to_array();
            prop_assume!(v[i] + step <= 1.0);
            v[i] += step;
            let b = clamp_to_bounds(&v);
            let (pa, pb) = (denormalize(&a, &c).unwrap(), denormalize(&b, &c).unwrap());
            let flat = |p: &PhysicalAction| {
                let mut f = p.servo_deltas_deg.to_vec();
                f.push(p.delay_s);
                f.push(p.grasp_offset_m);
                f
            };
            prop_assert!(flat(&pb)[i] > flat(&pa)[i]);
            prop_assert!(pa.delay_s >= 0.5 && pa.delay_s <= 0.9);
        }
    }
}
