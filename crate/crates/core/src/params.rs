//! Physical parameters of the vehicle and of the contact surface.

use std::f64::consts::PI;

use crate::geometry::{rotation, rotation_from_axes, transform, Mat3, Transform, UnitQuat, Vec3};

pub const GRAVITY: f64 = 9.81;
pub const NUM_MOTORS: usize = 6;

/// Constants of the combined MAV-arm model.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// MAV mass without the end effector (kg).
    pub mass: f64,
    /// End-effector mass (kg).
    pub ee_mass: f64,
    /// Principal inertia of the MAV with the arm at its nominal position (kg·m²).
    pub inertia_diag: Vec3,
    /// Rotor drag moment per unit thrust (N·m/N).
    pub thrust_moment_coeff: f64,
    pub motor_positions: [Vec3; NUM_MOTORS],
    /// `(-1)^(i+1)` for motor `i = 1..6`.
    pub spin_signs: [f64; NUM_MOTORS],
    pub f_min: f64,
    pub f_max: f64,
    /// End-effector position in B that leaves the CoM undisturbed.
    pub nominal_ee_position: Vec3,
    /// Arm base frame A expressed in B.
    pub t_ba: Transform,
    pub gravity: Vec3,
}

impl VehicleParams {
    /// `m_c = m + m_e`.
    pub fn combined_mass(&self) -> f64 {
        self.mass + self.ee_mass
    }

    pub fn hover_thrust(&self) -> f64 {
        self.combined_mass() * -self.gravity.z
    }

    pub fn inertia(&self) -> Mat3 {
        Mat3::from_diagonal(&self.inertia_diag)
    }

    /// Rotation from the end-effector frame into B. The delta platform keeps the
    /// orientation of its base, so E is rigidly aligned with A.
    pub fn c_be(&self) -> UnitQuat {
        self.t_ba.rotation
    }

    pub fn arm_to_body(&self, p_a: &Vec3) -> Vec3 {
        self.t_ba.transform_point(&(*p_a).into()).coords
    }

    pub fn body_to_arm(&self, p_b: &Vec3) -> Vec3 {
        self.t_ba.inverse_transform_point(&(*p_b).into()).coords
    }

    /// Nominal end-effector position expressed in A.
    pub fn nominal_ee_arm(&self) -> Vec3 {
        self.body_to_arm(&self.nominal_ee_position)
    }

    /// Regular hexagon with motor 1 on +x and alternating spin directions.
    pub fn hexagon(arm_length: f64) -> [Vec3; NUM_MOTORS] {
        std::array::from_fn(|i| {
            let a = i as f64 * PI / 3.0;
            Vec3::new(arm_length * a.cos(), arm_length * a.sin(), 0.0)
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
        if !(self.mass > 0.0 && self.ee_mass >= 0.0) {
            return Err("masses must be positive".into());
        }
        if !self.inertia_diag.iter().all(|&j| j > 0.0) {
            return Err("inertia must be positive definite".into());
        }
        if !(self.f_min < self.f_max) {
            return Err("f_min must be below f_max".into());
        }
        if !self.motor_positions.iter().all(finite) || !finite(&self.nominal_ee_position) {
            return Err("non-finite geometry".into());
        }
        Ok(())
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        let ee_mass = 0.058;
        // Arm mounted sideways on the nose: the A-frame -z axis points along B +x.
        let c_ba = rotation(&Vec3::y(), -PI / 2.0);
        let t_ba = transform(Vec3::new(0.25, 0.0, 0.0), c_ba);
        let nominal_ee_position = t_ba.transform_point(&Vec3::new(0.0, 0.0, -0.2).into()).coords;
        Self {
            mass: 2.6 - ee_mass,
            ee_mass,
            inertia_diag: Vec3::new(0.042, 0.054, 0.110),
            thrust_moment_coeff: 1.58e-2,
            motor_positions: Self::hexagon(0.275),
            spin_signs: [1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
            f_min: 0.0,
            f_max: 10.0,
            nominal_ee_position,
            t_ba,
            gravity: Vec3::new(0.0, 0.0, -GRAVITY),
        }
    }
}

/// Planar compliant surface. The contact frame T has its z-axis along the
/// outward surface normal; the writing area is `|x| <= half_extents.0`,
/// `|y| <= half_extents.1` in T.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactSurface {
    pub t_wt: Transform,
    /// Spring coefficient of the pen (N/m).
    pub spring_coeff: f64,
    pub half_extents: (f64, f64),
}

impl ContactSurface {
    /// Vertical board whose outward normal points along the horizontal heading
    /// `normal_yaw` (rad). T's x-axis runs left-to-right as seen by a viewer
    /// facing the board and y points up.
    pub fn vertical(origin: Vec3, normal_yaw: f64, spring_coeff: f64, half_extents: (f64, f64)) -> Self {
        let z = Vec3::new(normal_yaw.cos(), normal_yaw.sin(), 0.0);
        let y = Vec3::z();
        let x = y.cross(&z);
        Self {
            t_wt: transform(origin, rotation_from_axes(&x, &y, &z)),
            spring_coeff,
            half_extents,
        }
    }

    pub fn normal_w(&self) -> Vec3 {
        self.t_wt.rotation * Vec3::z()
    }

    pub fn to_surface(&self, p_w: &Vec3) -> Vec3 {
        self.t_wt.inverse_transform_point(&(*p_w).into()).coords
    }

    pub fn to_world(&self, p_t: &Vec3) -> Vec3 {
        self.t_wt.transform_point(&(*p_t).into()).coords
    }

    pub fn within_extents(&self, p_t: &Vec3) -> bool {
        p_t.x.abs() <= self.half_extents.0 && p_t.y.abs() <= self.half_extents.1
    }

    /// One-sided penetration depth along the inward normal (m).
    pub fn penetration(&self, p_w: &Vec3) -> f64 {
        let p = self.to_surface(p_w);
        if p.z < 0.0 && self.within_extents(&p) {
            -p.z
        } else {
            0.0
        }
    }

    /// Spring force magnitude at a given penetration depth.
    pub fn force_at_depth(&self, depth: f64) -> f64 {
        self.spring_coeff * depth.max(0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.spring_coeff > 0.0) {
            return Err("spring coefficient must be positive".into());
        }
        if !(self.half_extents.0 > 0.0 && self.half_extents.1 > 0.0) {
            return Err("surface extents must be positive".into());
        }
        Ok(())
    }
}

impl Default for ContactSurface {
    /// 1 m x 0.5 m whiteboard 1 m ahead of the origin, facing back along -x.
    fn default() -> Self {
        Self::vertical(Vec3::new(1.0, 0.0, 1.5), PI, 42.95, (0.5, 0.25))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_masses() {
        let p = VehicleParams::default();
        assert_eq!(p.combined_mass(), p.mass + p.ee_mass);
        assert!((p.combined_mass() - 2.6).abs() < 1e-12);
        assert!((p.hover_thrust() - 25.506).abs() < 1e-9);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn nominal_ee_is_ahead_of_body() {
        let p = VehicleParams::default();
        assert!((p.nominal_ee_position - Vec3::new(0.45, 0.0, 0.0)).norm() < 1e-12);
        assert!((p.nominal_ee_arm() - Vec3::new(0.0, 0.0, -0.2)).norm() < 1e-12);
    }

    #[test]
    fn default_surface_faces_back_along_x() {
        let s = ContactSurface::default();
        assert!((s.normal_w() - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        // Text direction runs towards -y for a viewer facing +x.
        assert!((s.t_wt.rotation * Vec3::x() - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
        assert!((s.penetration(&Vec3::new(1.01, 0.0, 1.5)) - 0.01).abs() < 1e-12);
        assert_eq!(s.penetration(&Vec3::new(0.995, 0.0, 1.5)), 0.0);
        assert_eq!(s.penetration(&Vec3::new(1.01, 0.6, 1.5)), 0.0);
    }
}
