//! Control allocation: wrench demand to individual motor thrusts.

use nalgebra::{DMatrix, DVector, Matrix4, Matrix4x6, Matrix6, Vector4};

use crate::boxqp::{solve_box_qp_with, Bound};
use crate::dynamics::{AllocationMatrix, MotorThrusts};
use crate::params::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationConfig {
    /// Weight on the `(M_r; T)` residual.
    pub weight: Matrix4<f64>,
    pub regularization: f64,
    pub f_min: f64,
    pub f_max: f64,
}

impl AllocationConfig {
    pub fn from_params(params: &VehicleParams) -> Self {
        Self {
            weight: Matrix4::identity(),
            regularization: 1e-7,
            f_min: params.f_min,
            f_max: params.f_max,
        }
    }

    /// Identity weight with the thrust row scaled by `thrust_weight`.
    pub fn with_thrust_weight(mut self, thrust_weight: f64) -> Self {
        self.weight[(3, 3)] = thrust_weight;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.regularization < 0.0 {
            return Err("regularization must be non-negative".into());
        }
        if !(self.f_min < self.f_max) {
            return Err("f_min must be below f_max".into());
        }
        let sym = 0.5 * (self.weight + self.weight.transpose());
        if sym.symmetric_eigenvalues().iter().any(|&e| e < -1e-12) {
            return Err("allocation weight must be positive semi-definite".into());
        }
        Ok(())
    }
}

/// Hessian and linear term of `‖A f - d‖²_W + λ‖f‖²` (scaled by ½).
pub fn allocation_qp(demand: &Vector4<f64>, a: &AllocationMatrix, cfg: &AllocationConfig) -> (Matrix6<f64>, MotorThrusts) {
    let atw = a.0.transpose() * cfg.weight;
    let h = atw * a.0 + Matrix6::identity() * cfg.regularization;
    let g = -(atw * demand);
    (h, g)
}

fn weight_sqrt(w: &Matrix4<f64>) -> Matrix4<f64> {
    let eig = (0.5 * (w + w.transpose())).symmetric_eigen();
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(|e| e.max(0.0).sqrt()));
    eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Reduced problem solved as the stacked least-squares system
/// `[W½ A_F; √λ I] f_F ≈ [W½ (d - A_P f_P); 0]` via QR. The normal equations
/// square the condition number, which with λ = 1e-7 costs about eight digits.
fn least_squares_subproblem(
    wa: &Matrix4x6<f64>,
    wd: &Vector4<f64>,
    lambda: f64,
    x: &MotorThrusts,
    active: &[Bound; 6],
) -> Option<MotorThrusts> {
    let free: Vec<usize> = (0..6).filter(|&i| active[i] == Bound::Free).collect();
    let mut out = *x;
    if free.is_empty() {
        return Some(out);
    }
    let mut rhs_top = *wd;
    for i in (0..6).filter(|&i| active[i] != Bound::Free) {
        rhs_top -= wa.column(i) * x[i];
    }
    let n = free.len();
    let mut m = DMatrix::zeros(4 + n, n);
    let mut b = DVector::zeros(4 + n);
    for (k, &i) in free.iter().enumerate() {
        m.view_mut((0, k), (4, 1)).copy_from(&wa.column(i));
        m[(4 + k, k)] = lambda.sqrt();
    }
    b.rows_mut(0, 4).copy_from(&rhs_top);
    let qr = m.qr();
    let qtb = qr.q().transpose() * b;
    let sol = qr.r().solve_upper_triangular(&qtb)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    for (k, &i) in free.iter().enumerate() {
        out[i] = sol[k];
    }
    Some(out)
}

/// Regularized box-constrained least-squares allocation.
pub fn solve_allocation(demand: &Vector4<f64>, a: &AllocationMatrix, cfg: &AllocationConfig) -> MotorThrusts {
    let (h, g) = allocation_qp(demand, a, cfg);
    let lo = MotorThrusts::repeat(cfg.f_min);
    let hi = MotorThrusts::repeat(cfg.f_max);
    let w_half = weight_sqrt(&cfg.weight);
    let wa = w_half * a.0;
    let wd = w_half * demand;
    let sub = |x: &MotorThrusts, active: &[Bound; 6]| least_squares_subproblem(&wa, &wd, cfg.regularization, x, active);
    match solve_box_qp_with(&h, &g, &lo, &hi, None, sub) {
        Some(s) => s.x,
        // Only reachable with λ = 0 and a rank-deficient weight; fall back to
        // an even thrust split.
        None => MotorThrusts::repeat((demand[3] / 6.0).clamp(cfg.f_min, cfg.f_max)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxqp::kkt_residual;
    use proptest::prelude::*;

    fn setup() -> (AllocationMatrix, AllocationConfig) {
        let p = VehicleParams::default();
        (AllocationMatrix::build(&p).unwrap(), AllocationConfig::from_params(&p))
    }

    #[test]
    fn symmetric_hover_splits_evenly() {
        let (a, cfg) = setup();
        let t = 25.506;
        let f = solve_allocation(&Vector4::new(0.0, 0.0, 0.0, t), &a, &cfg);
        // Minimizing (6c - T)² + 6λc² gives c = T / (6 + λ), within 1e-7 of T/6.
        for &fi in f.iter() {
            assert!((fi - f[0]).abs() < 1e-9, "{f}");
            assert!((fi - t / (6.0 + cfg.regularization)).abs() < 1e-12, "{f}");
            assert!((fi - t / 6.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_demand_gives_zero_thrust() {
        let (a, cfg) = setup();
        assert_eq!(cfg.f_min, 0.0);
        let f = solve_allocation(&Vector4::zeros(), &a, &cfg);
        assert!(f.amax() < 1e-15);
    }

    #[test]
    fn saturated_thrust() {
        let (a, cfg) = setup();
        let f = solve_allocation(&Vector4::new(0.1, -0.2, 0.0, 80.0), &a, &cfg);
        for &fi in f.iter() {
            assert_eq!(fi, cfg.f_max);
        }
    }

    #[test]
    fn validation() {
        let (_, cfg) = setup();
        assert!(cfg.validate().is_ok());
        assert!(AllocationConfig { regularization: -1.0, ..cfg }.validate().is_err());
        assert!(AllocationConfig { f_min: 11.0, ..cfg }.validate().is_err());
    }

    proptest! {
        #[test]
        fn within_bounds_and_kkt(m in proptest::array::uniform3(-3.0..3.0f64), t in 0.0..80.0f64) {
            let (a, cfg) = setup();
            let d = Vector4::new(m[0], m[1], m[2], t);
            let f = solve_allocation(&d, &a, &cfg);
            prop_assert!(f.iter().all(|&x| (cfg.f_min..=cfg.f_max).contains(&x)));
            let (h, g) = allocation_qp(&d, &a, &cfg);
            let kkt = kkt_residual(&h, &g, &MotorThrusts::repeat(cfg.f_min), &MotorThrusts::repeat(cfg.f_max), &f);
            prop_assert!(kkt < 1e-8, "kkt {}", kkt);
        }

        #[test]
        fn interior_solutions_satisfy_normal_equations(m in proptest::array::uniform3(-0.3..0.3f64), t in 20.0..30.0f64) {
            let (a, cfg) = setup();
            let d = Vector4::new(m[0], m[1], m[2] * 0.1, t);
            let f = solve_allocation(&d, &a, &cfg);
            prop_assume!(f.iter().all(|&x| x > cfg.f_min && x < cfg.f_max));
            let lhs = (a.0.transpose() * cfg.weight * a.0 + Matrix6::identity() * cfg.regularization) * f;
            let rhs = a.0.transpose() * cfg.weight * d;
            prop_assert!((lhs - rhs).amax() < 1e-9);
        }

        #[test]
        fn symmetric_solution_scales_linearly(t in 1.0..59.0f64, s in 0.1..1.0f64) {
            let (a, cfg) = setup();
            let f1 = solve_allocation(&Vector4::new(0.0, 0.0, 0.0, t), &a, &cfg);
            let f2 = solve_allocation(&Vector4::new(0.0, 0.0, 0.0, s * t), &a, &cfg);
            prop_assert!((f2 - s * f1).amax() < 1e-9);
        }
    }
}
