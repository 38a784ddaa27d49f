//! Pen state estimation from segmented point clouds.
//!
//! Per frame: bounding-box filter, presence test on the filtered count,
//! PCA for the pen axis, sign alignment against the last present frame and
//! projection to angles. Angle conventions (camera frame):
//!
//! * `theta_z = atan2(v_y, v_x)`
//! * `theta_x = atan2(v_z, v_y)`
//! * `theta_y = atan2(v_x, v_z)`

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Point3<T> = Vector3<T>;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFrame<T: Scalar = f64> {
    /// Seconds since episode start.
    pub t: T,
    /// Camera-frame positions in meters.
    pub points: Vec<Point3<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig<T = f64> {
    /// Fingertip bounding box, camera frame, meters.
    pub bbox_min: [T; 3],
    pub bbox_max: [T; 3],
    /// A frame is present when strictly more points than this survive.
    pub presence_threshold: usize,
}

impl<T: Scalar> Default for FilterConfig<T> {
    fn default() -> Self {
        Self {
            bbox_min: [-0.3, -0.3, 0.3].map(T::of),
            bbox_max: [0.3, 0.3, 0.4].map(T::of),
            presence_threshold: 50,
        }
    }
}

impl<T: Scalar> FilterConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.bbox_min.iter().zip(&self.bbox_max).any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::Config("bbox_min must be below bbox_max on every axis".into()));
        }
        if self.presence_threshold == 0 {
            return Err(Error::Config("presence_threshold must be at least 1".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point3<T>) -> bool {
        (0..3).all(|i| p[i] >= self.bbox_min[i] && p[i] <= self.bbox_max[i])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenObservation<T: Scalar = f64> {
    /// Unit principal axis, sign-aligned with the previous present frame.
    pub axis: Option<Vector3<T>>,
    pub theta_x: Option<T>,
    pub theta_y: Option<T>,
    pub theta_z: Option<T>,
    pub point_count: usize,
    pub present: bool,
    /// Enough points survived the filter but PCA had no defined axis; the
    /// frame is then reported as not present.
    pub degenerate: bool,
}

impl<T: Scalar> PenObservation<T> {
    pub fn absent(point_count: usize) -> Self {
        Self {
            axis: None,
            theta_x: None,
            theta_y: None,
            theta_z: None,
            point_count,
            present: false,
            degenerate: false,
        }
    }
}

/// Points inside the closed bounding box, in input order.
pub fn filter_points<T: Scalar>(frame: &TrajectoryFrame<T>, cfg: &FilterConfig<T>) -> Vec<Point3<T>> {
    frame.points.iter().filter(|p| cfg.contains(p)).copied().collect()
}

/// Direction of largest variance, canonically signed so that its first
/// nonzero component is positive.
pub fn principal_axis<T: Scalar>(points: &[Point3<T>]) -> Result<Vector3<T>> {
    if points.len() < 2 {
        return Err(Error::DegenerateGeometry(format!(
            "principal axis needs at least 2 points, got {}",
            points.len()
        )));
    }
    let count = T::of_usize(points.len());
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / count;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= count;

    let eig = SymmetricEigen::new(cov);
    let (imax, lmax) =
        eig.eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, T::min_value().unwrap()),
                |best, (i, l)| if l > best.1 { (i, l) } else { best },
            );
    // Rounding leaves O(eps^2 |p|^2) variance behind for coincident points.
    let floor = T::of(16.0) * T::epsilon() * T::epsilon() * (T::one() + centroid.norm_squared());
    if !(lmax > floor) || !lmax.is_finite() {
        return Err(Error::DegenerateGeometry("point covariance is zero".into()));
    }
    let mut axis: Vector3<T> = eig.eigenvectors.column(imax).into_owned();
    axis.normalize_mut();
    if let Some(first) = axis.iter().copied().find(|c| *c != T::zero()) {
        if first < T::zero() {
            axis = -axis;
        }
    }
    Ok(axis)
}

/// Projection angles of a unit axis; `None` where the projection onto the
/// relevant plane vanishes.
pub fn euler_angles<T: Scalar>(axis: &Vector3<T>) -> (Option<T>, Option<T>, Option<T>) {
    let tiny = T::epsilon().sqrt();
    let angle = |num: T, den: T| {
        if (num * num + den * den).sqrt() <= tiny {
            None
        } else {
            Some(num.atan2(den))
        }
    };
    let (x, y, z) = (axis[0], axis[1], axis[2]);
    (angle(z, y), angle(x, z), angle(y, x))
}

/// Runs the per-frame pipeline over a time-ordered trajectory.
pub fn observe_trajectory<T: Scalar>(frames: &[TrajectoryFrame<T>], cfg: &FilterConfig<T>) -> Vec<PenObservation<T>> {
    let mut previous: Option<Vector3<T>> = None;
    frames
        .iter()
        .map(|frame| {
            let kept = filter_points(frame, cfg);
            let count = kept.len();
            if count <= cfg.presence_threshold {
                return PenObservation::absent(count);
            }
            let mut axis = match principal_axis(&kept) {
                Ok(a) => a,
                Err(_) => {
                    let mut obs = PenObservation::absent(count);
                    obs.degenerate = true;
                    return obs;
                }
            };
            if let Some(prev) = previous {
                if axis.dot(&prev) < T::zero() {
                    axis = -axis;
                }
            }
            previous = Some(axis);
            let (theta_x, theta_y, theta_z) = euler_angles(&axis);
            PenObservation {
                axis: Some(axis),
                theta_x,
                theta_y,
                theta_z,
                point_count: count,
                present: true,
                degenerate: false,
            }
        })
        .collect()
}
