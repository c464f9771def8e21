//! Past-time temporal epistemic logic over shared-memory programs: formulas,
//! a micro-step program model, bounded and exact checking, rely-guarantee
//! obligations, and a sequent proof kernel.

pub mod error;
pub mod eval;
pub mod explorer;
pub mod formula;
pub mod program;
pub mod proof;
pub mod rg;
pub mod sample;
pub mod step;

pub use error::{Error, Result};
