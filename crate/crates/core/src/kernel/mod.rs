//! The checker and its normaliser.

pub mod check;
pub mod nbe;
pub mod rterm;
pub mod syntax;

pub use check::{check_decl, check_type, conv_type, infer_usage_check, normalize_sigma0, CheckedDecl, Context, UsageVector};
pub use rterm::RTerm;
pub use syntax::{Fragment, Regime, Term, TypeExpr, Usage};
