//! Numerical toolkit for Musielak-Orlicz spaces on boxes: Φ-functions,
//! modulars and Luxemburg norms, Young conjugates, sampled checkers for the
//! structural conditions on `M`, and a harness for Poincaré-type inequalities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod conjugate;
pub mod domain;
mod error;
pub mod field;
pub mod modular;
pub mod phi;
pub mod poincare;
mod sum;

pub use conditions::{check_local_integrability, check_log_holder, check_m1, check_y, Comparison, ConditionReport, Verdict};
pub use conjugate::{conjugate, holder_check, young_check, ConjugateOf};
pub use domain::{derivative, make_bump, mollify, AxisBox, BumpKind, Domain, GridFunction, MultiIndex};
pub use error::{Error, Result};
pub use field::{ExponentField, FieldExpr, WeightField};
pub use modular::{luxemburg_norm, modular, modular_gap, sobolev_norm, NormResult};
pub use phi::{validate_phi, LocalPhi, PhiFunction, YoungFunction};
pub use sum::{compensated_sum, NeumaierSum};
pub use poincare::{counterexample_search, poincare_constant, sweep, verify_modular_poincare, verify_norm_poincare, PoincareReport};
