//! Finite-difference solver for `u_t = a u_xx + b u_x + f(x, u)` on an
//! interval, and the truncated, forced and ladder constructions built on it.

mod operator;
mod solver;

pub use operator::{GrowthProbe, Operator1D};
pub use solver::{solve, solve_dirichlet, step, step_with, Boundary, BoundaryFn, Domain, Field1D, Profile, RunStats, SolverOptions, TimeScheme, Trajectory};

mod forced;

pub use forced::{
    minimal_solution, smoothstep, solve_forced, uniqueness_probe, ForcedProblemSpec, ForcedRung, LadderOptions, MinimalSolution, UniquenessOptions,
    UniquenessReport, UniquenessVerdict,
};
