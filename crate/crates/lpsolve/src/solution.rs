use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl Status {
    pub fn is_optimal(self) -> bool {
        self == Status::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub iteration_limit: usize,
    /// Geometric-mean row/column scaling before the solve.
    pub scaling: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            iteration_limit: 2_000_000,
            scaling: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable sitting at zero.
    Free,
}

/// Basis statuses for all variables followed by all row slacks; used to
/// warm-start a related model.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub vars: Vec<BasisStatus>,
    pub rows: Vec<BasisStatus>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub refactorizations: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    /// Objective including the model's constant offset.
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Row duals, `d objective / d rhs`; present for optimal solutions.
    pub duals: Option<Vec<f64>>,
    pub basis: Option<Basis>,
    pub stats: SolveStats,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status.is_optimal()
    }
}
