use nalgebra::DVector;

use super::cost::{Cost, StageDerivatives, TerminalDerivatives};
use super::dynamics::CountedDynamics;
use crate::error::{Error, Result};

/// States `x_0..=x_T` and controls `u_0..u_{T-1}`; no control is applied at
/// the terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn is_finite(&self) -> bool {
        self.states
            .iter()
            .chain(self.controls.iter())
            .all(|v| v.iter().all(|e| e.is_finite()))
    }
}

/// Simulates `controls` forward from `x0`. Makes exactly `T` dynamics calls
/// unless a non-finite state stops it early.
pub fn rollout(
    f: &CountedDynamics,
    x0: &DVector<f64>,
    controls: &[DVector<f64>],
    dt: f64,
) -> Result<Trajectory> {
    if x0.len() != f.state_dim() {
        return Err(Error::InvalidDimension(format!(
            "initial state has length {}, model expects {}",
            x0.len(),
            f.state_dim()
        )));
    }
    if let Some(bad) = controls.iter().find(|u| u.len() != f.control_dim()) {
        return Err(Error::InvalidDimension(format!(
            "control has length {}, model expects {}",
            bad.len(),
            f.control_dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::RolloutDiverged { index: 0 });
    }
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(x0.clone());
    for (i, u) in controls.iter().enumerate() {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::RolloutDiverged { index: i });
        }
        let next = f.step(&states[i], u);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::RolloutDiverged { index: i + 1 });
        }
        states.push(next);
    }
    Ok(Trajectory {
        dt,
        states,
        controls: controls.to_vec(),
    })
}

/// `Σ ℓ(x_i, u_i) + ℓ_T(x_T)`.
pub fn total_cost(traj: &Trajectory, cost: &dyn Cost) -> f64 {
    let running: f64 = traj
        .controls
        .iter()
        .zip(&traj.states)
        .map(|(u, x)| cost.stage(x, u))
        .sum();
    running + cost.terminal(traj.states.last().expect("trajectory has a terminal state"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostDerivatives {
    pub stages: Vec<StageDerivatives>,
    pub terminal: TerminalDerivatives,
}

pub fn cost_derivatives(traj: &Trajectory, cost: &dyn Cost) -> CostDerivatives {
    CostDerivatives {
        stages: traj
            .controls
            .iter()
            .zip(&traj.states)
            .map(|(u, x)| cost.stage_derivatives(x, u))
            .collect(),
        terminal: cost
            .terminal_derivatives(traj.states.last().expect("trajectory has a terminal state")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpc::cost::{ConstantCost, QuadraticCost};
    use crate::mpc::dynamics::{Dynamics, LinearDynamics};
    use nalgebra::{dmatrix, dvector, DMatrix};

    struct Identity;
    impl Dynamics for Identity {
        fn state_dim(&self) -> usize {
            2
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn step(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
            x.clone()
        }
    }

    fn double_integrator() -> CountedDynamics {
        CountedDynamics::from_model(LinearDynamics {
            a: dmatrix![1.0, 0.01; 0.0, 1.0],
            b: dmatrix![0.0; 0.01],
        })
    }

    #[test]
    fn zero_stays_zero() {
        let f = double_integrator();
        let traj = rollout(&f, &dvector![0.0, 0.0], &vec![dvector![0.0]; 5], 0.01).unwrap();
        assert!(traj.states.iter().all(|x| x.amax() == 0.0));
        assert_eq!(f.calls(), 5);
        assert_eq!(traj.states.len(), 6);
    }

    #[test]
    fn identity_single_step() {
        let f = CountedDynamics::from_model(Identity);
        let x0 = dvector![0.3, -1.0];
        let traj = rollout(&f, &x0, &[dvector![2.0]], 0.01).unwrap();
        assert_eq!(traj.states, vec![x0.clone(), x0]);
    }

    #[test]
    fn divergence_reports_index() {
        struct Blowup;
        impl Dynamics for Blowup {
            fn state_dim(&self) -> usize {
                1
            }
            fn control_dim(&self) -> usize {
                1
            }
            fn step(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
                x.map(|v| if v > 10.0 { f64::INFINITY } else { v * 100.0 })
            }
        }
        let f = CountedDynamics::from_model(Blowup);
        let err = rollout(&f, &dvector![1.0], &vec![dvector![0.0]; 4], 0.01).unwrap_err();
        assert_eq!(err, Error::RolloutDiverged { index: 2 });
    }

    #[test]
    fn constant_costs_sum() {
        let f = CountedDynamics::from_model(Identity);
        let traj = rollout(&f, &dvector![1.0, 1.0], &vec![dvector![0.0]; 2], 0.01).unwrap();
        let cost = ConstantCost {
            stage: 1.0,
            terminal: 5.0,
            state_dim: 2,
            control_dim: 1,
        };
        assert_eq!(total_cost(&traj, &cost), 7.0);
        let d = cost_derivatives(&traj, &cost);
        assert!(d
            .stages
            .iter()
            .all(|s| s.lx.amax() == 0.0 && s.luu.amax() == 0.0));
        assert_eq!(d.terminal.lxx.amax(), 0.0);
    }

    #[test]
    fn quadratic_at_origin() {
        let f = double_integrator();
        let traj = rollout(&f, &dvector![0.0, 0.0], &vec![dvector![0.0]; 3], 0.01).unwrap();
        let cost = QuadraticCost::diagonal(&[2.0, 3.0], &[0.5], &[4.0, 4.0]);
        assert_eq!(total_cost(&traj, &cost), 0.0);
        let d = cost_derivatives(&traj, &cost);
        assert_eq!(d.stages[0].lx.amax(), 0.0);
        assert_eq!(d.stages[0].lxx, DMatrix::from_diagonal(&dvector![2.0, 3.0]));
    }
}
