use nalgebra::{DMatrix, DVector};

/// First and second derivatives of a stage cost at one `(x, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDerivatives {
    pub lx: DVector<f64>,
    pub lu: DVector<f64>,
    pub lxx: DMatrix<f64>,
    pub luu: DMatrix<f64>,
    /// `∂²ℓ/∂u∂x`, shape `d_u × d_x`.
    pub lux: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalDerivatives {
    pub lx: DVector<f64>,
    pub lxx: DMatrix<f64>,
}

/// Stage plus terminal cost with analytic derivatives.
pub trait Cost: Send + Sync {
    fn stage(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64;
    fn terminal(&self, x: &DVector<f64>) -> f64;
    fn stage_derivatives(&self, x: &DVector<f64>, u: &DVector<f64>) -> StageDerivatives;
    fn terminal_derivatives(&self, x: &DVector<f64>) -> TerminalDerivatives;
}

/// `½(x−x*)ᵀQ(x−x*) + ½(u−u*)ᵀR(u−u*)` per stage and `½(x−x*)ᵀQ_f(x−x*)` at the end.
#[derive(Debug, Clone)]
pub struct QuadraticCost {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub qf: DMatrix<f64>,
    pub x_goal: DVector<f64>,
    pub u_goal: DVector<f64>,
}

impl QuadraticCost {
    /// Symmetrizes the weight matrices.
    pub fn new(
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        qf: DMatrix<f64>,
        x_goal: DVector<f64>,
        u_goal: DVector<f64>,
    ) -> Self {
        let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
        Self {
            q: sym(q),
            r: sym(r),
            qf: sym(qf),
            x_goal,
            u_goal,
        }
    }

    /// Diagonal weights regulating to the origin.
    pub fn diagonal(q: &[f64], r: &[f64], qf: &[f64]) -> Self {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(q)),
            DMatrix::from_diagonal(&DVector::from_column_slice(r)),
            DMatrix::from_diagonal(&DVector::from_column_slice(qf)),
            DVector::zeros(q.len()),
            DVector::zeros(r.len()),
        )
    }

    pub fn with_goal(mut self, x_goal: DVector<f64>) -> Self {
        self.x_goal = x_goal;
        self
    }
}

impl Cost for QuadraticCost {
    fn stage(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        let dx = x - &self.x_goal;
        let du = u - &self.u_goal;
        0.5 * (dx.dot(&(&self.q * &dx)) + du.dot(&(&self.r * &du)))
    }

    fn terminal(&self, x: &DVector<f64>) -> f64 {
        let dx = x - &self.x_goal;
        0.5 * dx.dot(&(&self.qf * &dx))
    }

    fn stage_derivatives(&self, x: &DVector<f64>, u: &DVector<f64>) -> StageDerivatives {
        StageDerivatives {
            lx: &self.q * (x - &self.x_goal),
            lu: &self.r * (u - &self.u_goal),
            lxx: self.q.clone(),
            luu: self.r.clone(),
            lux: DMatrix::zeros(u.len(), x.len()),
        }
    }

    fn terminal_derivatives(&self, x: &DVector<f64>) -> TerminalDerivatives {
        TerminalDerivatives {
            lx: &self.qf * (x - &self.x_goal),
            lxx: self.qf.clone(),
        }
    }
}

/// `ℓ ≡ stage`, `ℓ_T ≡ terminal`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantCost {
    pub stage: f64,
    pub terminal: f64,
    pub state_dim: usize,
    pub control_dim: usize,
}

impl Cost for ConstantCost {
    fn stage(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> f64 {
        self.stage
    }

    fn terminal(&self, _x: &DVector<f64>) -> f64 {
        self.terminal
    }

    fn stage_derivatives(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> StageDerivatives {
        let (nx, nu) = (self.state_dim, self.control_dim);
        StageDerivatives {
            lx: DVector::zeros(nx),
            lu: DVector::zeros(nu),
            lxx: DMatrix::zeros(nx, nx),
            luu: DMatrix::zeros(nu, nu),
            lux: DMatrix::zeros(nu, nx),
        }
    }

    fn terminal_derivatives(&self, _x: &DVector<f64>) -> TerminalDerivatives {
        TerminalDerivatives {
            lx: DVector::zeros(self.state_dim),
            lxx: DMatrix::zeros(self.state_dim, self.state_dim),
        }
    }
}
