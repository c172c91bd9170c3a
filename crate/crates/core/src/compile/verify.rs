//! Bound extraction and empirical checking: run compiled programs on
//! concrete inputs, count steps, and compare against the extracted bound
//! and against the kernel's own evaluation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::observe::{decode, encode, fit, observe, sample_input, ObserveError, Observable};
use super::CompiledProgram;
use crate::kernel::nbe::{Nbe, TyVal, VEnv, DEFAULT_FUEL};
use crate::kernel::syntax::Term;
use crate::machine::{eval_with, CostModel, Env, EvalOutcome, Rule};
use crate::potentials::Polynomial;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("{0}")]
    Observe(#[from] ObserveError),
    #[error("machine ran out of fuel after {0} steps")]
    OutOfFuel(u64),
    #[error("machine stuck: {0}")]
    Stuck(String),
}

/// The extracted step bound `q`, applied to the input's iterable size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub regime: String,
    pub monoid: String,
    /// Coefficients of `q`, lowest degree first.
    pub bound: Vec<u64>,
    pub degree: usize,
    pub poly: String,
    pub input_usages: Vec<u64>,
}

impl BoundReport {
    pub fn q(&self) -> Polynomial {
        Polynomial::new(self.bound.clone())
    }
}

pub fn extract_bound(p: &CompiledProgram) -> BoundReport {
    let q = &p.potential.poly;
    BoundReport {
        name: p.name.clone(),
        regime: p.regime.name().to_string(),
        monoid: p.kind.name().to_string(),
        bound: q.coeffs().to_vec(),
        degree: q.degree().unwrap_or(0),
        poly: q.to_string(),
        input_usages: p.input_usages.clone(),
    }
}

/// Splits an input into `k` arguments: nothing, the value itself, or the
/// components of a right-nested tuple.
pub fn split_args(input: &Observable, k: usize) -> Vec<&Observable> {
    let mut out = Vec::with_capacity(k);
    let mut cur = input;
    for i in 0..k {
        match cur {
            Observable::Pair(a, b) if i + 1 < k => {
                out.push(&**a);
                cur = b;
            }
            _ => {
                out.push(cur);
                break;
            }
        }
    }
    out
}

impl CompiledProgram {
    /// Iterable size of an input: each argument's potential taken as many
    /// times as its declared usage.
    pub fn input_size(&self, input: &Observable) -> u64 {
        let args = split_args(input, self.input_arity);
        let parts: Vec<_> = args.iter().zip(&self.input_usages).map(|(a, u)| self.kind.n_action(*u, &a.potential(self.kind))).collect();
        self.kind.sum(&parts).size
    }

    pub fn bound_for(&self, input: &Observable) -> u128 {
        self.potential.poly.eval(self.input_size(input) as u128)
    }

    /// Argument types, each instantiated with the earlier arguments of
    /// `input`, and the result type.
    fn types(&self, nbe: &Nbe, input: &Observable) -> Result<(Vec<TyVal>, TyVal), VerifyError> {
        let args = split_args(input, self.input_arity);
        if args.len() != self.input_arity {
            return Err(ObserveError::Mismatch("arguments").into());
        }
        let mut ty = nbe.eval_ty(&VEnv::new(), &self.ty).map_err(ObserveError::from)?;
        let mut doms = vec![];
        for x in args {
            let TyVal::Pi(_, a, b) = ty else { return Err(ObserveError::NotObservable("function").into()) };
            doms.push((*a).clone());
            ty = nbe.inst_ty(&b, x.to_val()).map_err(ObserveError::from)?;
        }
        Ok((doms, ty))
    }

    /// Random input of scale `n`, reproducible from `seed`.
    pub fn sample(&self, nbe: &Nbe, n: u64, seed: u64) -> Result<Observable, VerifyError> {
        if self.input_arity == 0 {
            return Ok(Observable::Unit);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut ty = nbe.eval_ty(&VEnv::new(), &self.ty).map_err(ObserveError::from)?;
        let mut first = true;
        let mut args = vec![];
        for _ in 0..self.input_arity {
            let TyVal::Pi(_, a, b) = ty else { return Err(ObserveError::NotObservable("function").into()) };
            let x = sample_input(nbe, &a, n, &mut rng, &mut first)?;
            ty = nbe.inst_ty(&b, x.to_val()).map_err(ObserveError::from)?;
            args.push(x);
        }
        Ok(Observable::tuple(args))
    }

    /// Reshapes a literal to the argument types (see [`fit`]).
    pub fn fit_input(&self, nbe: &Nbe, input: Observable) -> Result<Observable, VerifyError> {
        if self.input_arity == 0 {
            return Ok(input);
        }
        let mut ty = nbe.eval_ty(&VEnv::new(), &self.ty).map_err(ObserveError::from)?;
        let raw: Vec<Observable> = split_args(&input, self.input_arity).into_iter().cloned().collect();
        let mut args = vec![];
        for x in raw {
            let TyVal::Pi(_, a, b) = ty else { return Err(ObserveError::NotObservable("function").into()) };
            let x = fit(nbe, x, &a)?;
            ty = nbe.inst_ty(&b, x.to_val()).map_err(ObserveError::from)?;
            args.push(x);
        }
        Ok(Observable::tuple(args))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Run {
    pub input: Observable,
    pub output: Observable,
    pub steps: u64,
    pub size: u64,
    pub bound: u128,
    pub ok: bool,
}

/// Runs `p` on `input` and compares the step count with the bound.
pub fn run_and_verify(p: &CompiledProgram, input: &Observable, fuel: Option<u64>) -> Result<Run, VerifyError> {
    run_traced(p, input, fuel, &mut |_, _| {})
}

/// As [`run_and_verify`], reporting every machine rule with the environment
/// depth where it fired.
pub fn run_traced(p: &CompiledProgram, input: &Observable, fuel: Option<u64>, trace: &mut dyn FnMut(Rule, usize)) -> Result<Run, VerifyError> {
    let nbe = Nbe::with_fuel(p.regime, DEFAULT_FUEL);
    let (doms, out_ty) = p.types(&nbe, input)?;
    let args = split_args(input, p.input_arity);
    let vals = args.iter().zip(&doms).map(|(x, a)| encode(&nbe, x, a)).collect::<Result<Vec<_>, _>>()?;
    let env = Env::from_values(vals);
    let size = p.input_size(input);
    let bound = p.potential.poly.eval(size as u128);
    let fuel = fuel.unwrap_or_else(|| u64::try_from(bound.saturating_mul(4).saturating_add(100_000)).unwrap_or(u64::MAX));
    match eval_with(&CostModel::default(), &p.code, &env, fuel, trace) {
        EvalOutcome::Done { value, steps } => {
            let output = decode(&nbe, &value, &out_ty)?;
            Ok(Run { input: input.clone(), output, steps, size, bound, ok: steps as u128 <= bound })
        }
        EvalOutcome::OutOfFuel => Err(VerifyError::OutOfFuel(fuel)),
        EvalOutcome::Stuck(m) => Err(VerifyError::Stuck(m)),
    }
}

/// Evaluates the kernel term on `input` and reads the result back, for
/// comparison with the machine.
pub fn kernel_output(p: &CompiledProgram, input: &Observable) -> Result<Observable, VerifyError> {
    let nbe = Nbe::with_fuel(p.regime, DEFAULT_FUEL);
    let (_, out_ty) = p.types(&nbe, input)?;
    let args = split_args(input, p.input_arity);
    let t = args.iter().fold(p.term.clone(), |f, x| Term::app(f, x.to_term(p.regime)));
    let v = nbe.eval(&VEnv::new(), &t).map_err(ObserveError::from)?;
    Ok(observe(&nbe, &v, &out_ty)?)
}

/// Whether the machine and the kernel compute the same observable output.
pub fn agree_with_kernel(p: &CompiledProgram, input: &Observable) -> Result<bool, VerifyError> {
    let run = run_and_verify(p, input, None)?;
    Ok(run.output == kernel_output(p, input)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyRow {
    pub n: u64,
    pub steps: u64,
    pub bound: u128,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub name: String,
    pub regime: String,
    /// Coefficients of the bound polynomial, lowest degree first.
    pub bound: Vec<u64>,
    pub rows: Vec<VerifyRow>,
    pub ok: bool,
}

/// Runs `p` on one seeded random input for every scale `0..=max_n`. A
/// program without input is run once.
pub fn verify_sweep(p: &CompiledProgram, max_n: u64, seed: u64) -> Result<VerifyReport, VerifyError> {
    let top = if p.input_arity == 0 { 0 } else { max_n };
    let rows = (0..=top)
        .into_par_iter()
        .map(|n| {
            let nbe = Nbe::new(p.regime);
            let input = p.sample(&nbe, n, seed)?;
            let r = run_and_verify(p, &input, None)?;
            Ok(VerifyRow { n, steps: r.steps, bound: r.bound, ok: r.ok })
        })
        .collect::<Result<Vec<_>, VerifyError>>()?;
    let ok = rows.iter().all(|r| r.ok);
    Ok(VerifyReport { name: p.name.clone(), regime: p.regime.name().to_string(), bound: p.potential.poly.coeffs().to_vec(), rows, ok })
}

/// Declared type of the declaration, as the surface would print it.
pub fn describe_type(p: &CompiledProgram) -> String {
    crate::frontend::pretty::pretty_type(&p.ty, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile_named;
    use crate::frontend::{load, LoadOptions};

    const SRC: &str = "#regime consfree
def not : Bool -> Bool = \\b. if b then false else true
def par : Nat -> Bool = \\n. rec n return _. Bool with | zero => true | succ _ p => not p
def konst : Bool = not false";

    #[test]
    fn parity_runs_within_bound_and_agrees() {
        let l = load(SRC, LoadOptions::default()).unwrap();
        let p = compile_named(&l, "par").unwrap();
        for n in 0..20 {
            let input = Observable::Nat(n);
            let r = run_and_verify(&p, &input, None).unwrap();
            assert_eq!(r.output, Observable::Bool(n % 2 == 0));
            assert!(r.ok, "n={} {:?}", n, r);
            assert_eq!(kernel_output(&p, &input).unwrap(), r.output);
        }
        assert_eq!(extract_bound(&p).degree, 1);
    }

    #[test]
    fn closed_program_runs_once() {
        let l = load(SRC, LoadOptions::default()).unwrap();
        let p = compile_named(&l, "konst").unwrap();
        let rep = verify_sweep(&p, 10, 1).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!(rep.ok);
        assert!(agree_with_kernel(&p, &Observable::Unit).unwrap());
    }

    #[test]
    fn sweep_is_deterministic() {
        let l = load(SRC, LoadOptions::default()).unwrap();
        let p = compile_named(&l, "par").unwrap();
        assert_eq!(verify_sweep(&p, 12, 3).unwrap(), verify_sweep(&p, 12, 3).unwrap());
    }
}
