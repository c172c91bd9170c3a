//! Polytime quantitative type theory: a usage-checked dependent calculus in
//! two regimes, a costed abstract machine, and step-bound extraction.

pub mod compile;
pub mod diag;
pub mod frontend;
pub mod kernel;
pub mod machine;
pub mod potentials;

pub use compile::{
    compile_decl, compile_named, extract_bound, run_and_verify, verify_sweep, BoundReport, CompiledProgram, Observable, VerifyReport,
};
pub use diag::{DiagKind, KernelError};
pub use frontend::{load, Diagnostic, LoadOptions, Loaded, LoadedDecl, Span};
pub use kernel::{Fragment, Regime, Term, TypeExpr};
pub use machine::{decode_nat, encode_list, eval, nat_value, Env, EvalOutcome, MachineExpr, MachineValue};
pub use potentials::{dominates_from, ExtNat, MonoidKind, Polynomial, Potential};

/// Runs `f` on a thread with a large stack; the checker and printers recurse
/// on term depth.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(512 << 20)
        .spawn(f)
        .expect("spawn worker thread")
        .join()
        .unwrap_or_else(|e| std::panic::resume_unwind(e))
}
