//! Checks derived from the scheme's stability and convergence analysis:
//! the Harten-type lemma, bound monitors, time moduli, weak-form residuals
//! and refinement tables.

pub mod bounds;
pub mod convergence;
pub mod harten;
pub mod modulus;
pub mod weak;

pub use bounds::{monitor_bounds, BoundRecord, BoundReport};
pub use convergence::{
    error_table, errors_against, format_error, CompareIn, ConvergenceRow, ConvergenceTable, ErrorSampling, FinalState,
    Formulation, CSV_HEADER,
};
pub use harten::{
    counterexample_search, harten_check, harten_property_test, harten_residual, harten_solve, HartenCoefficients,
    HartenCondition, PropertyReport,
};
pub use modulus::{time_modulus_w, time_modulus_z, Modulus};
pub use weak::{weak_residual, BumpTestFunction, TestFunction, WeakResidual};
