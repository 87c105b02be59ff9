use crate::error::SolveError;
use crate::model::LpModel;
use crate::simplex;
use crate::solution::{Basis, LpSolution, SolveOptions};

/// Anything that can solve an [`LpModel`]. Implementations must be
/// deterministic for a given model and warm-start basis.
pub trait LpBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Warm-start bases from other backends may be ignored.
    fn solve(&self, model: &LpModel, warm: Option<&Basis>) -> Result<LpSolution, SolveError>;
}

/// The bundled bounded revised simplex.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexBackend {
    pub options: SolveOptions,
}

impl SimplexBackend {
    pub fn new(options: SolveOptions) -> Self {
        Self { options }
    }
}

impl LpBackend for SimplexBackend {
    fn name(&self) -> &str {
        "simplex"
    }

    fn solve(&self, model: &LpModel, warm: Option<&Basis>) -> Result<LpSolution, SolveError> {
        simplex::solve(model, &self.options, warm)
    }
}
