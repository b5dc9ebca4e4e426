//! Forward and inverse kinematics of the 3-DoF delta arm.
//!
//! Arm frame A sits at the centre of the base with z pointing away from the
//! platform, so reachable end-effector positions have `z < 0`. Joint `i` drives
//! an upper link in the vertical plane rotated by `120° * i` about z; a positive
//! angle swings the link down.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{Mat3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("joint angles have no consistent end-effector position")]
    NoIntersection,
    #[error("end-effector position {0:?} is outside the reachable workspace")]
    Unreachable([f64; 3]),
    #[error("end-effector position {0:?} is at a singular configuration")]
    Singular([f64; 3]),
    #[error("joint {joint} angle {angle} rad exceeds the mechanical limit")]
    JointLimit { joint: usize, angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmGeometry {
    pub base_radius: f64,
    pub platform_radius: f64,
    pub upper_link: f64,
    pub lower_link: f64,
    /// Symmetric joint limit (rad).
    pub joint_limit: f64,
}

impl Default for ArmGeometry {
    fn default() -> Self {
        Self {
            base_radius: 0.072,
            platform_radius: 0.025,
            upper_link: 0.065,
            lower_link: 0.202,
            joint_limit: PI / 2.0,
        }
    }
}

impl ArmGeometry {
    pub fn validate(&self) -> Result<(), String> {
        let all_positive = [self.base_radius, self.platform_radius, self.upper_link, self.lower_link, self.joint_limit]
            .iter()
            .all(|&v| v > 0.0);
        if !all_positive {
            return Err("arm dimensions must be positive".into());
        }
        if self.lower_link <= self.upper_link {
            return Err("lower link must be longer than the upper link".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAngles(pub [f64; 3]);

fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn leg_angle(i: usize) -> f64 {
    i as f64 * 2.0 * PI / 3.0
}

/// Sphere centres for the forward kinematics: elbows shifted inwards by the
/// platform radius.
fn sphere_centres(theta: &JointAngles, geom: &ArmGeometry) -> [Vec3; 3] {
    std::array::from_fn(|i| {
        let t = theta.0[i];
        let local = Vec3::new(geom.base_radius - geom.platform_radius + geom.upper_link * t.cos(), 0.0, -geom.upper_link * t.sin());
        rot_z(leg_angle(i)) * local
    })
}

/// Intersection of the three lower-link spheres below the arm base.
pub fn forward_kinematics(theta: &JointAngles, geom: &ArmGeometry) -> Result<Vec3, KinematicsError> {
    for (joint, &angle) in theta.0.iter().enumerate() {
        if angle.abs() > geom.joint_limit {
            return Err(KinematicsError::JointLimit { joint, angle });
        }
    }
    let [c1, c2, c3] = sphere_centres(theta, geom);
    // Subtracting the sphere equations pairwise leaves two planes whose
    // intersection line is then cut with the first sphere.
    let n2 = c2 - c1;
    let n3 = c3 - c1;
    let dir = n2.cross(&n3);
    if dir.norm_squared() < 1e-18 {
        return Err(KinematicsError::NoIntersection);
    }
    let b2 = 0.5 * (c2.norm_squared() - c1.norm_squared());
    let b3 = 0.5 * (c3.norm_squared() - c1.norm_squared());
    let m = Mat3::from_rows(&[n2.transpose(), n3.transpose(), dir.transpose()]);
    let p0 = m.lu().solve(&Vec3::new(b2, b3, 0.0)).ok_or(KinematicsError::NoIntersection)?;

    let rel = p0 - c1;
    let a = dir.norm_squared();
    let b = 2.0 * dir.dot(&rel);
    let c = rel.norm_squared() - geom.lower_link * geom.lower_link;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(KinematicsError::NoIntersection);
    }
    let sq = disc.sqrt();
    let t1 = (-b + sq) / (2.0 * a);
    let t2 = (-b - sq) / (2.0 * a);
    let (p1, p2) = (p0 + t1 * dir, p0 + t2 * dir);
    let p = if p1.z < p2.z { p1 } else { p2 };
    if p.z >= 0.0 {
        return Err(KinematicsError::NoIntersection);
    }
    Ok(p)
}

/// Tangency tolerance of the sphere-circle intersection (m).
const SINGULAR_TOL: f64 = 1e-7;

fn joint_angle(p_local: &Vec3, geom: &ArmGeometry, p: &Vec3) -> Result<f64, KinematicsError> {
    // Sphere of radius l around the platform joint, cut with the plane of the leg.
    let centre = p_local + geom.platform_radius * Vec3::x();
    let rho2 = geom.lower_link * geom.lower_link - centre.y * centre.y;
    if rho2 <= 0.0 {
        return Err(KinematicsError::Unreachable((*p).into()));
    }
    // Circle-circle intersection in the (x, z) plane with the elbow circle of
    // radius L around (R, 0).
    let (sx, sz) = (geom.base_radius, 0.0);
    let (dx, dz) = (centre.x - sx, centre.z - sz);
    let d = (dx * dx + dz * dz).sqrt();
    let big_l = geom.upper_link;
    if d < 1e-12 {
        return Err(KinematicsError::Singular((*p).into()));
    }
    let a = (big_l * big_l - rho2 + d * d) / (2.0 * d);
    let h2 = big_l * big_l - a * a;
    if h2 < 0.0 {
        return Err(KinematicsError::Unreachable((*p).into()));
    }
    let h = h2.sqrt();
    if h < SINGULAR_TOL {
        return Err(KinematicsError::Singular((*p).into()));
    }
    let (ex, ez) = (dx / d, dz / d);
    let (mx, mz) = (sx + a * ex, sz + a * ez);
    let i1 = (mx + h * ez, mz - h * ex);
    let i2 = (mx - h * ez, mz + h * ex);
    // Elbow-out branch.
    let (ix, iz) = if i1.0 >= i2.0 { i1 } else { i2 };
    Ok((-iz).atan2(ix - sx))
}

/// Joint angles placing the end effector at `p` (elbow-out branch).
pub fn inverse_kinematics(p: &Vec3, geom: &ArmGeometry) -> Result<JointAngles, KinematicsError> {
    let mut theta = [0.0; 3];
    for (i, t) in theta.iter_mut().enumerate() {
        let local = rot_z(-leg_angle(i)) * p;
        *t = joint_angle(&local, geom, p)?;
        if t.abs() > geom.joint_limit {
            return Err(KinematicsError::JointLimit { joint: i, angle: *t });
        }
    }
    Ok(JointAngles(theta))
}

/// Axis-aligned safe region in A, e.g. bounded above by the propeller
/// clearance plane `max.z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl SafetyBox {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn clamp(&self, p: &Vec3) -> Vec3 {
        Vec3::from_fn(|i, _| p[i].clamp(self.min[i], self.max[i]))
    }
}

impl Default for SafetyBox {
    fn default() -> Self {
        Self {
            min: Vec3::new(-0.05, -0.05, -0.22),
            max: Vec3::new(0.05, 0.05, -0.15),
        }
    }
}

/// Delta arm together with its safe operating region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaArm {
    pub geometry: ArmGeometry,
    pub safety: SafetyBox,
    /// Nominal end-effector position in A; must be feasible.
    pub nominal: Vec3,
}

impl Default for DeltaArm {
    fn default() -> Self {
        Self {
            geometry: ArmGeometry::default(),
            safety: SafetyBox::default(),
            nominal: Vec3::new(0.0, 0.0, -0.2),
        }
    }
}

impl DeltaArm {
    pub fn is_feasible(&self, p: &Vec3) -> bool {
        self.safety.contains(p) && inverse_kinematics(p, &self.geometry).is_ok()
    }

    pub fn validate(&self) -> Result<(), String> {
        self.geometry.validate()?;
        if !self.is_feasible(&self.nominal) {
            return Err("nominal end-effector position must be reachable and inside the safety box".into());
        }
        Ok(())
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        project_to_workspace(p, &self.geometry, &self.safety, &self.nominal)
    }
}

/// Maps a command onto the feasible-and-safe set.
///
/// Feasible commands are returned unchanged. Otherwise the command is first
/// clamped to the safety box and, if still unreachable, bisected along the
/// segment towards `nominal` (which must be feasible) until it lies on the
/// reachability boundary.
pub fn project_to_workspace(p: &Vec3, geom: &ArmGeometry, safety: &SafetyBox, nominal: &Vec3) -> Vec3 {
    let feasible = |q: &Vec3| safety.contains(q) && inverse_kinematics(q, geom).is_ok();
    if feasible(p) {
        return *p;
    }
    let target = safety.clamp(p);
    if feasible(&target) {
        return target;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if feasible(&(nominal + mid * (target - nominal))) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    nominal + lo * (target - nominal)
}
