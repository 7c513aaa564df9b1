//! Third Jackson (Hahn-Exton) q-Bessel functions, their certified positive zeros,
//! and q-Fourier-Bessel expansions on the q-linear grid `{q^n : n >= 0}`.
//!
//! Everything that touches the zeros is evaluated in MPFR arithmetic through
//! [`rug::Float`]: the defining series cancels catastrophically between the zeros,
//! and the deviation of `j_k` from `q^{-k}` is far below `f64` resolution for
//! moderate `k`. The `f64` entry points round the high-precision results.
//!
//! Module layout:
//! - [`qcore`]: q-Pochhammer symbols, grid functions, Jackson integral, q-derivative.
//! - [`qbessel`]: evaluation of `J_nu(z; q^2)` and its derivative.
//! - [`zeros`]: bracketed and certified zeros with the asymptotic bounds.
//! - [`qpoly`]: the polynomials `P_n` linking grid values of `J_nu`.
//! - [`series`]: coefficients, norms, partial sums and convergence reports.
//! - [`expansions`]: closed-form expansions used as references.

pub mod error;
pub mod expansions;
pub mod hp;
pub mod qbessel;
pub mod qcore;
pub mod qpoly;
pub mod series;
pub mod zeros;

pub use error::{QbfError, Result};

pub use qbessel::{bessel_j, bessel_j_hp, bessel_j_prime, bessel_j_prime_hp, BesselEval, BesselEvalHp};
pub use expansions::{ClosedFormExpansion, ExpansionKind};
pub use qcore::{q_integral, q_pochhammer, GridFunction, Order, QContext, Residual};
pub use qpoly::PolyP;
pub use series::{ConvergenceReport, FourierBessel, FourierCoefficient};
pub use zeros::{alpha_bound, find_zero, BesselZero, ZeroCache};

pub use rug::Float;
