//! Subproblems and alternating schemes shared by the one-way and two-way
//! designs. Everything here works on a [`Network`], so the same code serves
//! both relaying modes.

mod alternating;
mod relay;
mod simplified;
mod source;

use std::fmt;
use std::sync::Arc;

pub use alternating::{iterate, IterationTrace, PassStats};
pub use relay::{relay_cone_program, relay_program, relay_step, RelayLayout};
pub use simplified::{
    assemble_relay_matrix, structured_relay_matrix, first_hop_filters, first_hop_mse, relay_q_sdp, simplified_design,
    source_socp, QSolution, SimplifiedDesignOutput,
};
pub use source::{source_program, source_step};

use crate::conic::{solve_with, ConicProgram, ConicSolution, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
#[cfg(doc)]
use crate::model::Network;

/// Callback receiving every conic program before it is solved, labelled
/// by stage.
pub type DumpHook = Arc<dyn Fn(&str, &ConicProgram) + Send + Sync>;

/// How the relay subproblem is posed to the conic solver. Both forms have
/// the same optimum; the cone form is much smaller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelayForm {
    /// Epigraph LMIs with `Ξ_k` and the `Φ` power LMI.
    Lmi,
    /// Rotated second-order cones.
    Cone,
}

/// How the simplified design turns the relay covariance `Q` into `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelayRecovery {
    /// Leading eigenpairs of `Q` assigned to users in order.
    Truncated,
    /// Regularized-inverse structure with receive directions taken from
    /// `Q` and balanced per-user weights.
    Structured,
}

#[derive(Clone)]
pub struct Settings {
    /// Convergence threshold on the change of the worst-user MSE.
    pub tol: f64,
    pub max_iters: usize,
    /// Threshold and pass limit of the simplified design's inner loop.
    pub inner_tol: f64,
    pub inner_max: usize,
    pub solver: SolverSettings,
    pub relay_form: RelayForm,
    pub recovery: RelayRecovery,
    /// Weight-balancing rounds of [`RelayRecovery::Structured`].
    pub balance_rounds: usize,
    pub dump: Option<DumpHook>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iters: 50,
            inner_tol: 1e-3,
            inner_max: 50,
            solver: SolverSettings::default(),
            relay_form: RelayForm::Cone,
            recovery: RelayRecovery::Structured,
            balance_rounds: 30,
            dump: None,
        }
    }
}

impl fmt::Debug for Settings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Settings")
            .field("tol", &self.tol)
            .field("max_iters", &self.max_iters)
            .field("inner_tol", &self.inner_tol)
            .field("inner_max", &self.inner_max)
            .field("solver", &self.solver)
            .field("relay_form", &self.relay_form)
            .field("recovery", &self.recovery)
            .field("balance_rounds", &self.balance_rounds)
            .field("dump", &self.dump.is_some())
            .finish()
    }
}

/// Solver outcome of one convex subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemStats {
    pub stage: &'static str,
    pub status: SolveStatus,
    pub iterations: usize,
    pub objective: f64,
    pub gap: f64,
    pub residual: f64,
    pub variables: usize,
}

impl SubproblemStats {
    fn from_solution(stage: &'static str, prog: &ConicProgram, sol: &ConicSolution) -> Self {
        Self {
            stage,
            status: sol.status,
            iterations: sol.iterations,
            objective: sol.objective_value,
            gap: sol.duality_gap,
            residual: sol.kkt_residual,
            variables: prog.var_count,
        }
    }
}

pub(crate) fn run_program(
    stage: &'static str,
    prog: &ConicProgram,
    settings: &Settings,
) -> Result<(Vec<f64>, SubproblemStats)> {
    if let Some(hook) = &settings.dump {
        hook(stage, prog);
    }
    let sol = solve_with(prog, &settings.solver)?;
    let stats = SubproblemStats::from_solution(stage, prog, &sol);
    if !sol.is_optimal() {
        return Err(Error::Solver {
            stage,
            status: sol.status,
            iterations: sol.iterations,
            gap: sol.duality_gap,
            residual: sol.kkt_residual,
        });
    }
    Ok((sol.primal_values, stats))
}
