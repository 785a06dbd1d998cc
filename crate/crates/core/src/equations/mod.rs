//! Concrete positive operators: second-kind integral equations, linear ODE
//! systems, and the Poisson, heat and wave equations.

pub mod heat;
pub mod ode;
pub mod poisson;
pub mod resolvent;
pub mod wave;

pub use heat::{HeatCase, HeatError, HeatProblem};
pub use ode::{matrix_exponential, MatrixExp, OdeProblem};
pub use poisson::{poisson_disk_error, Disk, PoissonDiskError, PoissonProblem};
pub use resolvent::{fredholm_resolvent, solve_second_kind, volterra_resolvent, ResolventKind, ResolventOptions, ResolventTable};
pub use wave::{wave_l1_error, WaveProblem};
