//! Gauss-Newton sequential linear-quadratic solver.
//!
//! Each iteration linearizes the discrete dynamics and the stacked error
//! around the current rollout (finite differences in the state tangent space),
//! runs a box-constrained Riccati backward pass and a clamped forward rollout
//! with backtracking. A step is only accepted if it strictly lowers the cost,
//! so the returned cost never exceeds that of the initial guess.

use nalgebra::SMatrix;

use crate::boxqp::{solve_box_qp, Bound};
use crate::dynamics::rk4_step;
use crate::geometry::Mat3;
use crate::nmpc::cost::{end_effector_state, model_errors, terminal_errors, ERROR_DIM};
use crate::nmpc::{FeedbackGain, GainSet, HorizonSolution, InputWeight, NmpcError, OcpConfig, StateWeights};
use crate::params::{ContactSurface, VehicleParams};
use crate::state::{ControlInput, InputVector, ReferencePoint, RigidBodyState, TangentVector, INPUT_DIM, STATE_DIM};

type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;
type InputMatrix = SMatrix<f64, STATE_DIM, INPUT_DIM>;
type InputHessian = SMatrix<f64, INPUT_DIM, INPUT_DIM>;
type StateJacobian = SMatrix<f64, ERROR_DIM, STATE_DIM>;
type InputJacobian = SMatrix<f64, ERROR_DIM, INPUT_DIM>;

const DYNAMICS_EPS: f64 = 1e-7;
const ERROR_EPS: f64 = 1e-6;
const MU_INIT: f64 = 1e-6;
const MU_MAX: f64 = 1e6;
const LINE_SEARCH_STEPS: usize = 10;

/// Block-diagonal error weight, multiplied block by block.
#[derive(Debug, Clone)]
struct BlockWeight {
    blocks: [Mat3; 5],
    force: f64,
    input: InputWeight,
}

impl BlockWeight {
    fn new(w: &StateWeights, input: &InputWeight) -> Self {
        Self {
            blocks: [w.mav_position, w.ee_position, w.velocity, w.body_rate, w.attitude],
            force: w.force,
            input: *input,
        }
    }

    fn apply<const C: usize>(&self, m: &SMatrix<f64, ERROR_DIM, C>) -> SMatrix<f64, ERROR_DIM, C> {
        let mut out = SMatrix::<f64, ERROR_DIM, C>::zeros();
        for (k, b) in self.blocks.iter().enumerate() {
            out.fixed_rows_mut::<3>(3 * k).copy_from(&(b * m.fixed_rows::<3>(3 * k)));
        }
        out.row_mut(15).copy_from(&(m.row(15) * self.force));
        out.fixed_rows_mut::<7>(16).copy_from(&(self.input * m.fixed_rows::<7>(16)));
        out
    }
}

/// Linearized dynamics and Gauss-Newton expansion of one stage cost.
struct StageModel {
    a: StateMatrix,
    b: InputMatrix,
    lx: TangentVector,
    lu: InputVector,
    lxx: StateMatrix,
    luu: InputHessian,
    lux: FeedbackGain,
}

struct TerminalModel {
    lx: TangentVector,
    lxx: StateMatrix,
}

struct Policy {
    k: Vec<InputVector>,
    gain: Vec<FeedbackGain>,
    /// Linear and quadratic coefficients of the predicted cost change in α.
    expected: (f64, f64),
}

struct Trajectory {
    inputs: Vec<ControlInput>,
    states: Vec<RigidBodyState>,
    cost: f64,
}

/// Jacobian of a stacked error with respect to the state tangent. The velocity
/// and body-rate errors are `v - v_r` and `ω - C ω_r` and nothing else depends
/// on `v` or `ω`, so those columns are unit columns; the position and attitude
/// columns use central differences.
fn state_jacobian(x: &RigidBodyState, res: impl Fn(&RigidBodyState) -> SMatrix<f64, ERROR_DIM, 1>) -> StateJacobian {
    let mut jx = StateJacobian::zeros();
    for i in (0..3).chain(6..9) {
        let mut d = TangentVector::zeros();
        d[i] = ERROR_EPS;
        jx.set_column(i, &((res(&x.retract(&d)) - res(&x.retract(&-d))) / (2.0 * ERROR_EPS)));
    }
    for k in 0..3 {
        jx[(6 + k, 3 + k)] = 1.0;
        jx[(9 + k, 9 + k)] = 1.0;
    }
    jx
}

/// Solver for one controller instance; holds only immutable problem data.
#[derive(Debug, Clone)]
pub struct SlqSolver {
    config: OcpConfig,
    gains: GainSet,
    params: VehicleParams,
    surface: ContactSurface,
    stage_weight: BlockWeight,
    terminal_weight: BlockWeight,
}

impl SlqSolver {
    pub fn new(config: OcpConfig, gains: GainSet, params: VehicleParams, surface: ContactSurface) -> Self {
        let stage_weight = BlockWeight::new(&gains.stage, &gains.input);
        let terminal_weight = BlockWeight::new(&gains.terminal, &InputWeight::zeros());
        Self {
            config,
            gains,
            params,
            surface,
            stage_weight,
            terminal_weight,
        }
    }

    pub fn config(&self) -> &OcpConfig {
        &self.config
    }

    pub fn gains(&self) -> &GainSet {
        &self.gains
    }

    pub fn params(&self) -> &VehicleParams {
        &self.params
    }

    pub fn surface(&self) -> &ContactSurface {
        &self.surface
    }

    fn clamp(&self, u: &ControlInput) -> ControlInput {
        ControlInput::from_vector(&self.config.clamp(&u.to_vector()))
    }

    fn step(&self, x: &RigidBodyState, u: &ControlInput) -> Option<RigidBodyState> {
        rk4_step(x, u, self.config.step, &self.params, &self.surface).ok()
    }

    /// States obtained by applying `inputs` from `x0`; `None` if the model blows up.
    pub fn rollout(&self, x0: &RigidBodyState, inputs: &[ControlInput]) -> Option<Vec<RigidBodyState>> {
        let mut states = Vec::with_capacity(inputs.len() + 1);
        states.push(*x0);
        for u in inputs {
            let next = self.step(states.last().unwrap(), u)?;
            states.push(next);
        }
        Some(states)
    }

    /// Cost of a state/input trajectory against `refs` (length `N + 1`).
    pub fn trajectory_cost(&self, states: &[RigidBodyState], inputs: &[ControlInput], refs: &[ReferencePoint]) -> f64 {
        let n = inputs.len();
        let mut c = 0.0;
        for i in 0..n {
            let e = model_errors(&states[i], &inputs[i], &refs[i], &self.params, &self.surface);
            c += super::stage_cost(&e, &self.gains);
        }
        let e = terminal_errors(&states[n], &refs[n], &self.params, &self.surface);
        c + super::terminal_cost(&e, &self.gains)
    }

    /// Rollout cost of `inputs` taken as given (no clamping); infinite if the rollout fails.
    pub fn rollout_cost(&self, x0: &RigidBodyState, inputs: &[ControlInput], refs: &[ReferencePoint]) -> f64 {
        match self.rollout(x0, inputs) {
            Some(states) => self.trajectory_cost(&states, inputs, refs),
            None => f64::INFINITY,
        }
    }

    fn evaluate(&self, x0: &RigidBodyState, inputs: Vec<ControlInput>, refs: &[ReferencePoint]) -> Option<Trajectory> {
        let inputs: Vec<ControlInput> = inputs.iter().map(|u| self.clamp(u)).collect();
        let states = self.rollout(x0, &inputs)?;
        let cost = self.trajectory_cost(&states, &inputs, refs);
        cost.is_finite().then_some(Trajectory { inputs, states, cost })
    }

    fn residual_jacobians(&self, x: &RigidBodyState, u: &ControlInput, r: &ReferencePoint) -> (StateJacobian, InputJacobian) {
        let res = |x: &RigidBodyState, u: &ControlInput| model_errors(x, u, r, &self.params, &self.surface).to_vector();
        let jx = state_jacobian(x, |x| res(x, u));
        // The input error is `u - u_r`; only the end-effector columns also
        // move the end-effector and contact errors.
        let mut ju = InputJacobian::zeros();
        ju.fixed_rows_mut::<INPUT_DIM>(ERROR_DIM - INPUT_DIM).fill_with_identity();
        let uv = u.to_vector();
        for i in 4..INPUT_DIM {
            let mut d = InputVector::zeros();
            d[i] = ERROR_EPS;
            let hi = res(x, &ControlInput::from_vector(&(uv + d)));
            let lo = res(x, &ControlInput::from_vector(&(uv - d)));
            ju.set_column(i, &((hi - lo) / (2.0 * ERROR_EPS)));
        }
        (jx, ju)
    }

    fn linearize_stage(&self, x: &RigidBodyState, u: &ControlInput, x_next: &RigidBodyState, r: &ReferencePoint) -> StageModel {
        let mut a = StateMatrix::zeros();
        for i in 0..STATE_DIM {
            let mut d = TangentVector::zeros();
            d[i] = DYNAMICS_EPS;
            if let Some(xn) = self.step(&x.retract(&d), u) {
                a.set_column(i, &(x_next.local(&xn) / DYNAMICS_EPS));
            }
        }
        let mut b = InputMatrix::zeros();
        let uv = u.to_vector();
        for i in 0..INPUT_DIM {
            let mut d = InputVector::zeros();
            d[i] = DYNAMICS_EPS;
            if let Some(xn) = self.step(x, &ControlInput::from_vector(&(uv + d))) {
                b.set_column(i, &(x_next.local(&xn) / DYNAMICS_EPS));
            }
        }
        let (jx, ju) = self.residual_jacobians(x, u, r);
        let r = model_errors(x, u, r, &self.params, &self.surface).to_vector();
        let w = &self.stage_weight;
        let (wr, wjx, wju) = (w.apply(&r), w.apply(&jx), w.apply(&ju));
        StageModel {
            a,
            b,
            lx: 2.0 * jx.tr_mul(&wr),
            lu: 2.0 * ju.tr_mul(&wr),
            lxx: 2.0 * jx.tr_mul(&wjx),
            luu: 2.0 * ju.tr_mul(&wju),
            lux: 2.0 * ju.tr_mul(&wjx),
        }
    }

    fn linearize_terminal(&self, x: &RigidBodyState, r: &ReferencePoint) -> TerminalModel {
        let res = |x: &RigidBodyState| terminal_errors(x, r, &self.params, &self.surface).to_vector();
        let jx = state_jacobian(x, res);
        let r = res(x);
        let w = &self.terminal_weight;
        TerminalModel {
            lx: 2.0 * jx.tr_mul(&w.apply(&r)),
            lxx: 2.0 * jx.tr_mul(&w.apply(&jx)),
        }
    }

    fn linearize(&self, traj: &Trajectory, refs: &[ReferencePoint]) -> (Vec<StageModel>, TerminalModel) {
        let n = traj.inputs.len();
        let stages = (0..n)
            .map(|i| self.linearize_stage(&traj.states[i], &traj.inputs[i], &traj.states[i + 1], &refs[i]))
            .collect();
        (stages, self.linearize_terminal(&traj.states[n], &refs[n]))
    }

    /// Gradient of [`rollout_cost`](Self::rollout_cost) with respect to each
    /// input, computed by the adjoint recursion on the solver's linearization.
    pub fn cost_gradient(&self, x0: &RigidBodyState, inputs: &[ControlInput], refs: &[ReferencePoint]) -> Option<Vec<InputVector>> {
        let states = self.rollout(x0, inputs)?;
        let traj = Trajectory {
            inputs: inputs.to_vec(),
            states,
            cost: 0.0,
        };
        let (stages, term) = self.linearize(&traj, refs);
        let mut lambda = term.lx;
        let mut grad = vec![InputVector::zeros(); inputs.len()];
        for (i, s) in stages.iter().enumerate().rev() {
            grad[i] = s.lu + s.b.tr_mul(&lambda);
            lambda = s.lx + s.a.tr_mul(&lambda);
        }
        Some(grad)
    }

    fn backward(&self, traj: &Trajectory, stages: &[StageModel], term: &TerminalModel, mu: f64) -> Option<Policy> {
        let n = stages.len();
        let mut vx = term.lx;
        let mut vxx = term.lxx;
        let mut k = vec![InputVector::zeros(); n];
        let mut gain = vec![FeedbackGain::zeros(); n];
        let (mut d1, mut d2) = (0.0, 0.0);
        for i in (0..n).rev() {
            let s = &stages[i];
            let qx = s.lx + s.a.tr_mul(&vx);
            let qu = s.lu + s.b.tr_mul(&vx);
            let vxx_a = vxx * s.a;
            let vxx_b = vxx * s.b;
            let qxx = s.lxx + s.a.tr_mul(&vxx_a);
            let quu = s.luu + s.b.tr_mul(&vxx_b);
            let qux = s.lux + s.b.tr_mul(&vxx_a);
            let quu = 0.5 * (quu + quu.transpose());
            let quu_reg = quu + InputHessian::identity() * mu;

            let u = traj.inputs[i].to_vector();
            let lo = self.config.u_lb - u;
            let hi = self.config.u_ub - u;
            let qp = solve_box_qp(&quu_reg, &qu, &lo.map(|v| v.min(0.0)), &hi.map(|v| v.max(0.0)), None)?;

            let mut m = quu_reg;
            let mut rhs = -qux;
            for j in 0..INPUT_DIM {
                if qp.active[j] != Bound::Free {
                    m.row_mut(j).fill(0.0);
                    m.column_mut(j).fill(0.0);
                    m[(j, j)] = 1.0;
                    rhs.row_mut(j).fill(0.0);
                }
            }
            let kk = m.cholesky()?.solve(&rhs);
            let kf = qp.x;

            vx = qx + kk.tr_mul(&(quu * kf + qu)) + qux.tr_mul(&kf);
            let kq = kk.tr_mul(&qux);
            let v = qxx + kk.tr_mul(&(quu * kk)) + kq + kq.transpose();
            vxx = 0.5 * (v + v.transpose());
            d1 += kf.dot(&qu);
            d2 += 0.5 * kf.dot(&(quu * kf));
            k[i] = kf;
            gain[i] = kk;
        }
        Some(Policy {
            k,
            gain,
            expected: (d1, d2),
        })
    }

    /// Rolls out `u_i = ū_i + α k_i + K_i (x_i ⊟ x̄_i)`, clamped, from `x0`
    /// about the nominal inputs `ū` and states `x̄`.
    #[allow(clippy::too_many_arguments)]
    fn track(
        &self,
        x0: &RigidBodyState,
        nominal_inputs: &[ControlInput],
        nominal_states: &[RigidBodyState],
        step: Option<&[InputVector]>,
        alpha: f64,
        gains: &[FeedbackGain],
        refs: &[ReferencePoint],
    ) -> Option<Trajectory> {
        let n = nominal_inputs.len();
        let mut states = Vec::with_capacity(n + 1);
        let mut inputs = Vec::with_capacity(n);
        states.push(*x0);
        for i in 0..n {
            let x = states[i];
            let dx = nominal_states[i].local(&x);
            let mut u = nominal_inputs[i].to_vector() + gains[i] * dx;
            if let Some(k) = step {
                u += alpha * k[i];
            }
            let u = ControlInput::from_vector(&self.config.clamp(&u));
            states.push(self.step(&x, &u)?);
            inputs.push(u);
        }
        let cost = self.trajectory_cost(&states, &inputs, refs);
        cost.is_finite().then_some(Trajectory { inputs, states, cost })
    }

    /// Solves the optimal control problem from `x0` against `refs`
    /// (`N + 1` samples), warm-started from `warm` shifted by one step.
    pub fn solve(&self, x0: &RigidBodyState, refs: &[ReferencePoint], warm: Option<&HorizonSolution>) -> Result<HorizonSolution, NmpcError> {
        let n = self.config.horizon_steps;
        if refs.len() != n + 1 {
            return Err(NmpcError::ReferenceLength {
                expected: n + 1,
                got: refs.len(),
            });
        }
        if !x0.is_finite() {
            return Err(NmpcError::NonFiniteState);
        }

        let hover = self.evaluate(x0, vec![ControlInput::hover(&self.params); n], refs);
        let hover_cost = hover.as_ref().map_or(f64::INFINITY, |t| t.cost);
        // The previous solution is re-run with its own feedback law, which
        // keeps the unstable open-loop rollout close to the prediction.
        let shifted = warm.filter(|w| w.inputs.len() == n && w.states.len() == n + 1).and_then(|w| {
            let w = w.advanced();
            let gains = if w.feedback.len() == n { w.feedback } else { vec![FeedbackGain::zeros(); n] };
            let t = self.track(x0, &w.inputs, &w.states, None, 0.0, &gains, refs)?;
            t.cost.is_finite().then_some((t, gains))
        });
        let warm_start_cost = warm.map(|_| shifted.as_ref().map_or(f64::INFINITY, |t| t.0.cost));

        let (mut traj, mut feedback) = match (shifted, hover) {
            (Some(s), Some(h)) => {
                if s.0.cost <= h.cost {
                    s
                } else {
                    (h, vec![FeedbackGain::zeros(); n])
                }
            }
            (Some(s), None) => s,
            (None, Some(h)) => (h, vec![FeedbackGain::zeros(); n]),
            (None, None) => return Err(NmpcError::Diverged),
        };

        let mut mu = MU_INIT;
        let mut iterations = 0;
        let mut model = None;
        while iterations < self.config.max_iterations && traj.cost > 0.0 {
            let (stages, term) = model.get_or_insert_with(|| self.linearize(&traj, refs));
            iterations += 1;
            let Some(policy) = self.backward(&traj, stages, term, mu) else {
                mu *= 10.0;
                if mu > MU_MAX {
                    break;
                }
                continue;
            };
            feedback.clone_from(&policy.gain);
            let (d1, d2) = policy.expected;
            if -(d1 + d2) <= self.config.tolerance * traj.cost {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..LINE_SEARCH_STEPS {
                if let Some(cand) = self.track(x0, &traj.inputs, &traj.states, Some(&policy.k), alpha, &policy.gain, refs) {
                    if cand.cost < traj.cost {
                        accepted = Some(cand);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some(cand) => {
                    let rel = (traj.cost - cand.cost) / traj.cost.max(f64::MIN_POSITIVE);
                    traj = cand;
                    model = None;
                    mu = (mu * 0.1).max(MU_INIT);
                    if rel < self.config.tolerance {
                        break;
                    }
                }
                None => {
                    mu *= 10.0;
                    if mu > MU_MAX {
                        break;
                    }
                }
            }
        }

        let predicted_contact = (0..n)
            .map(|i| end_effector_state(&traj.states[i], &traj.inputs[i].ee_position, &self.params, &self.surface).1)
            .collect();
        Ok(HorizonSolution {
            inputs: traj.inputs,
            states: traj.states,
            cost: traj.cost,
            warm_start_cost,
            hover_cost,
            iterations,
            predicted_contact,
            feedback,
        })
    }
}
