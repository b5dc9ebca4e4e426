//! Primal active-set solver for small strictly convex box-constrained QPs
//!
//! ```text
//! minimize ½ xᵀ H x + gᵀ x   subject to   lo <= x <= hi
//! ```
//!
//! Sizes are fixed at compile time; everything stays on the stack.

use nalgebra::{SMatrix, SVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Free,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy)]
pub struct BoxQpSolution<const N: usize> {
    pub x: SVector<f64, N>,
    pub active: [Bound; N],
    pub iterations: usize,
}

impl<const N: usize> BoxQpSolution<N> {
    pub fn is_free(&self, i: usize) -> bool {
        self.active[i] == Bound::Free
    }
}

/// Minimizes over the free variables with the rest pinned at their bounds.
pub fn cholesky_subproblem<const N: usize>(
    h: &SMatrix<f64, N, N>,
    g: &SVector<f64, N>,
    x: &SVector<f64, N>,
    active: &[Bound; N],
) -> Option<SVector<f64, N>> {
    let mut m = *h;
    let mut rhs = -g;
    for i in 0..N {
        if active[i] != Bound::Free {
            for j in 0..N {
                if active[j] == Bound::Free {
                    rhs[j] -= h[(j, i)] * x[i];
                }
                m[(i, j)] = 0.0;
                m[(j, i)] = 0.0;
            }
            m[(i, i)] = 1.0;
            rhs[i] = x[i];
        }
    }
    m.cholesky().map(|c| c.solve(&rhs))
}

/// Solves the box QP starting from `start` (clamped into the box). Returns
/// `None` if `H` is not positive definite on the free subspace.
pub fn solve_box_qp<const N: usize>(
    h: &SMatrix<f64, N, N>,
    g: &SVector<f64, N>,
    lo: &SVector<f64, N>,
    hi: &SVector<f64, N>,
    start: Option<&SVector<f64, N>>,
) -> Option<BoxQpSolution<N>> {
    solve_box_qp_with(h, g, lo, hi, start, |x, active| cholesky_subproblem(h, g, x, active))
}

/// Same as [`solve_box_qp`] with a caller-supplied solver for the reduced
/// problems, e.g. a least-squares factorization for ill-conditioned `H`.
/// `subproblem(x, active)` must return the minimizer over the free variables
/// with the pinned entries of `x` unchanged.
pub fn solve_box_qp_with<const N: usize, S>(
    h: &SMatrix<f64, N, N>,
    g: &SVector<f64, N>,
    lo: &SVector<f64, N>,
    hi: &SVector<f64, N>,
    start: Option<&SVector<f64, N>>,
    subproblem: S,
) -> Option<BoxQpSolution<N>>
where
    S: Fn(&SVector<f64, N>, &[Bound; N]) -> Option<SVector<f64, N>>,
{
    let mut active = [Bound::Free; N];
    let mut x = match start {
        Some(s) => *s,
        None => subproblem(&SVector::zeros(), &active)?,
    };
    for i in 0..N {
        if x[i] <= lo[i] {
            x[i] = lo[i];
            active[i] = Bound::Lower;
        } else if x[i] >= hi[i] {
            x[i] = hi[i];
            active[i] = Bound::Upper;
        }
    }

    // Each active set is visited at most once for a strictly convex problem;
    // the cap only guards against round-off cycling.
    let max_iter = 8 * N + 32;
    for iter in 0..max_iter {
        let target = subproblem(&x, &active)?;
        let step = target - x;
        // Largest feasible step towards the subproblem minimizer.
        let mut alpha = 1.0;
        let mut blocking = None;
        for i in 0..N {
            if active[i] != Bound::Free {
                continue;
            }
            if step[i] < 0.0 && target[i] < lo[i] {
                let a = (lo[i] - x[i]) / step[i];
                if a < alpha {
                    alpha = a;
                    blocking = Some((i, Bound::Lower));
                }
            } else if step[i] > 0.0 && target[i] > hi[i] {
                let a = (hi[i] - x[i]) / step[i];
                if a < alpha {
                    alpha = a;
                    blocking = Some((i, Bound::Upper));
                }
            }
        }
        x += alpha.max(0.0) * step;
        if let Some((i, b)) = blocking {
            x[i] = if b == Bound::Lower { lo[i] } else { hi[i] };
            active[i] = b;
            continue;
        }

        // Subproblem optimum reached: check the multipliers of the pinned variables.
        let grad = h * x + g;
        let mut worst = None;
        let mut worst_val = 0.0;
        for i in 0..N {
            let violation = match active[i] {
                Bound::Free => 0.0,
                Bound::Lower => -grad[i],
                Bound::Upper => grad[i],
            };
            if violation > worst_val {
                worst_val = violation;
                worst = Some(i);
            }
        }
        let scale = 1e-12 * (1.0 + grad.amax());
        match worst {
            Some(i) if worst_val > scale => active[i] = Bound::Free,
            _ => {
                return Some(BoxQpSolution {
                    x,
                    active,
                    iterations: iter + 1,
                })
            }
        }
    }
    Some(BoxQpSolution {
        x,
        active,
        iterations: max_iter,
    })
}

/// Largest violation of the KKT conditions at `x`.
pub fn kkt_residual<const N: usize>(
    h: &SMatrix<f64, N, N>,
    g: &SVector<f64, N>,
    lo: &SVector<f64, N>,
    hi: &SVector<f64, N>,
    x: &SVector<f64, N>,
) -> f64 {
    let grad = h * x + g;
    let mut r: f64 = 0.0;
    for i in 0..N {
        r = r.max(lo[i] - x[i]).max(x[i] - hi[i]);
        // Projected gradient: zero at the optimum.
        let proj = (x[i] - grad[i]).clamp(lo[i], hi[i]) - x[i];
        r = r.max(proj.abs());
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector3};
    use proptest::prelude::*;

    /// Enumerates all 3^N active-set combinations and keeps the best KKT point.
    fn brute_force<const N: usize>(
        h: &SMatrix<f64, N, N>,
        g: &SVector<f64, N>,
        lo: &SVector<f64, N>,
        hi: &SVector<f64, N>,
    ) -> SVector<f64, N> {
        let mut best = None;
        let mut best_cost = f64::INFINITY;
        let combos = 3usize.pow(N as u32);
        for c in 0..combos {
            let mut code = c;
            let mut active = [Bound::Free; N];
            let mut x = SVector::<f64, N>::zeros();
            for i in 0..N {
                active[i] = match code % 3 {
                    0 => Bound::Free,
                    1 => {
                        x[i] = lo[i];
                        Bound::Lower
                    }
                    _ => {
                        x[i] = hi[i];
                        Bound::Upper
                    }
                };
                code /= 3;
            }
            let Some(sol) = cholesky_subproblem(h, g, &x, &active) else { continue };
            if (0..N).any(|i| sol[i] < lo[i] - 1e-12 || sol[i] > hi[i] + 1e-12) {
                continue;
            }
            let cost = 0.5 * sol.dot(&(h * sol)) + g.dot(&sol);
            if cost < best_cost {
                best_cost = cost;
                best = Some(sol);
            }
        }
        best.unwrap()
    }

    #[test]
    fn unconstrained_interior() {
        let h = Matrix3::identity() * 2.0;
        let g = Vector3::new(-1.0, 0.0, 1.0);
        let s = solve_box_qp(&h, &g, &Vector3::repeat(-5.0), &Vector3::repeat(5.0), None).unwrap();
        assert!((s.x - Vector3::new(0.5, 0.0, -0.5)).norm() < 1e-15);
        assert!(s.active.iter().all(|&b| b == Bound::Free));
    }

    #[test]
    fn clamped_corner() {
        let h = Matrix3::identity();
        let g = Vector3::new(-10.0, 10.0, 0.0);
        let s = solve_box_qp(&h, &g, &Vector3::repeat(-1.0), &Vector3::repeat(1.0), None).unwrap();
        assert_eq!(s.x, Vector3::new(1.0, -1.0, 0.0));
        assert_eq!(s.active, [Bound::Upper, Bound::Lower, Bound::Free]);
    }

    proptest! {
        #[test]
        fn matches_enumeration(
            m in proptest::array::uniform16(-1.0..1.0f64),
            g in proptest::array::uniform4(-3.0..3.0f64),
            w in proptest::array::uniform4(0.1..1.5f64),
        ) {
            let m = SMatrix::<f64, 4, 4>::from_column_slice(&m);
            let h = m * m.transpose() + SMatrix::<f64, 4, 4>::identity() * 0.05;
            let g = SVector::<f64, 4>::from_column_slice(&g);
            let hi = SVector::<f64, 4>::from_column_slice(&w);
            let lo = -hi;
            let s = solve_box_qp(&h, &g, &lo, &hi, None).unwrap();
            let oracle = brute_force(&h, &g, &lo, &hi);
            prop_assert!((s.x - oracle).norm() < 1e-9, "{} vs {}", s.x, oracle);
            prop_assert!(kkt_residual(&h, &g, &lo, &hi, &s.x) < 1e-10);
        }
    }
}
