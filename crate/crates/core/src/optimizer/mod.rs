//! EE maximisation: Dinkelbach outer loop around a dual-decomposition
//! inner solver.

pub mod dinkelbach;
pub mod dual;
pub mod greedy;
pub mod inner;
pub mod local;
pub mod power;
pub mod waterfill;

pub use dinkelbach::{
    dinkelbach, dinkelbach_shared, solve_ee, solve_ee_shared, EeSolution, InnerSolver, OuterConfig, OuterStep,
    SharedLoad, SolveTrace,
};
pub use inner::{solve_inner, InnerConfig, InnerSolution, InnerStop, WarmStart};
pub use power::{optimal_powers, PowerSolution};
