use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use polyqtt::compile::verify::VerifyError;
use polyqtt::compile::{
    compile_named, extract_bound, kernel_output, parse_literal, run_traced, verify_sweep, CompileError, CompiledProgram,
    ObserveError, Observable,
};
use polyqtt::frontend::{expected_label, load, pretty, Loaded, LoadOptions};
use polyqtt::kernel::nbe::{Nbe, DEFAULT_FUEL};
use polyqtt::kernel::syntax::{Fragment, Regime, TypeExpr};

/// Label a fixture uses to say that verification must fail.
const EXPECT_VIOLATION: &str = "bound-violation";

#[derive(Parser)]
#[command(name = "polyqtt", version, about = "Check, compile, run, and bound polytime QTT programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Overrides the file's `#regime` pragma.
    #[arg(long, global = true, value_parser = parse_regime)]
    regime: Option<Regime>,
    /// Caps every declaration's fragment; 0 re-checks everything erased.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(0..=1))]
    sigma: Option<u8>,
    /// Step budget for normalisation while checking, and for the machine.
    #[arg(long, global = true)]
    fuel: Option<u64>,
}

#[derive(Args)]
struct Target {
    file: PathBuf,
    /// Declaration to use; defaults to `main`, else the last one.
    #[arg(long)]
    decl: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and check every declaration.
    Check { file: PathBuf },
    /// Compile a declaration to machine code.
    Compile {
        #[command(flatten)]
        target: Target,
        /// Print the machine code as an s-expression.
        #[arg(long)]
        emit_machine: bool,
    },
    /// Run a declaration on one input.
    Run {
        #[command(flatten)]
        target: Target,
        /// A value literal (`7`, `(3, true)`, `[2, 0, 1]`); a number for a
        /// non-`Nat` input is the scale of a generated input.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print every machine rule to standard error.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: Option<String>,
    },
    /// Print the extracted step bound.
    Bound {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        json: Option<String>,
    },
    /// Run on generated inputs of every scale up to `--max-n` and compare
    /// step counts with the bound.
    Verify {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 50)]
        max_n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also compare every output with the kernel's normal form.
        #[arg(long)]
        agree: bool,
        /// Write the report here (`-` for standard output).
        #[arg(long)]
        json: Option<String>,
    },
    /// Check and verify every `.qtt` file under the given paths, honouring
    /// `-- expect:` headers.
    Corpus {
        #[arg(default_values = ["corpus", "fixtures"])]
        paths: Vec<PathBuf>,
        #[arg(long, default_value_t = 20)]
        max_n: u64,
    },
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse::<Regime>().map_err(|e| e.to_string())
}

/// Exit statuses: 1 static failure, 2 bound violation, 3 anything else.
enum Failure {
    Static(String),
    Violation(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Static(_) => 1,
            Failure::Violation(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Static(m) | Failure::Violation(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::Internal(_) => Failure::Internal(e.to_string()),
            _ => Failure::Static(e.to_string()),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        Failure::Internal(e.to_string())
    }
}

impl From<ObserveError> for Failure {
    fn from(e: ObserveError) -> Self {
        Failure::Internal(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    regime: Option<Regime>,
    sigma: Option<Fragment>,
    fuel: Option<u64>,
}

impl Ctx {
    fn read(&self, path: &Path) -> Result<String, Failure> {
        fs::read_to_string(path).map_err(|e| Failure::Internal(format!("cannot read {}: {}", path.display(), e)))
    }

    fn opts(&self) -> LoadOptions {
        LoadOptions { regime: self.regime, sigma: self.sigma, fuel: self.fuel.unwrap_or(DEFAULT_FUEL) }
    }

    fn load(&self, path: &Path) -> Result<Loaded, Failure> {
        let src = self.read(path)?;
        load(&src, self.opts()).map_err(|d| Failure::Static(d.render(&src, &path.display().to_string())))
    }

    fn program(&self, t: &Target) -> Result<CompiledProgram, Failure> {
        let l = self.load(&t.file)?;
        let name = match &t.decl {
            Some(n) => n.clone(),
            None => l.entry().ok_or_else(|| Failure::Static("file has no declarations".into()))?.name.clone(),
        };
        Ok(compile_named(&l, &name)?)
    }
}

fn emit_json<T: Serialize>(dest: &str, v: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Internal(e.to_string()))? + "\n";
    if dest == "-" {
        print!("{}", text);
        Ok(())
    } else {
        fs::write(dest, text).map_err(|e| Failure::Internal(format!("cannot write {}: {}", dest, e)))
    }
}

fn cmd_check(ctx: &Ctx, file: &Path) -> CmdResult {
    let l = ctx.load(file)?;
    for d in &l.decls {
        println!("{} ^{} : {}", d.name, d.sigma.as_usage(), pretty::pretty_type(&d.ty, 0));
    }
    println!("ok: {} declarations checked under {}", l.decls.len(), l.regime.name());
    Ok(())
}

fn cmd_compile(ctx: &Ctx, t: &Target, emit_machine: bool) -> CmdResult {
    let p = ctx.program(t)?;
    if emit_machine {
        println!("{}", p.code);
        return Ok(());
    }
    println!("{} : {}", p.name, pretty::pretty_type(&p.ty, 0));
    println!("regime: {} ({})", p.regime.name(), p.kind.name());
    println!("arguments: {} {:?}", p.input_arity, p.input_usages);
    println!("code size: {}", p.code.size());
    println!("potential: {}", p.potential);
    Ok(())
}

/// Reads `--input`: a literal fitted to the argument types, or a scale for
/// the generator when a bare number is given for anything but a single
/// `Nat` argument.
fn input_for(p: &CompiledProgram, lit: Option<&str>, seed: u64) -> Result<Observable, Failure> {
    let nbe = Nbe::new(p.regime);
    let Some(lit) = lit else {
        return if p.input_arity == 0 {
            Ok(Observable::Unit)
        } else {
            Err(Failure::Static(format!("`{}` takes {} argument(s); pass --input", p.name, p.input_arity)))
        };
    };
    let o = parse_literal(lit)?;
    let single_nat = p.input_arity == 1 && matches!(&p.ty, TypeExpr::Pi(_, a, _) if **a == TypeExpr::Nat);
    match o {
        Observable::Nat(n) if !single_nat && p.input_arity > 0 => Ok(p.sample(&nbe, n, seed)?),
        o => Ok(p.fit_input(&nbe, o)?),
    }
}

#[derive(Serialize)]
struct RunJson<'a> {
    name: &'a str,
    regime: &'a str,
    input: String,
    output: String,
    steps: u64,
    size: u64,
    bound: u128,
    ok: bool,
}

fn cmd_run(ctx: &Ctx, t: &Target, input: Option<&str>, seed: u64, trace: bool, json: Option<&str>) -> CmdResult {
    let p = ctx.program(t)?;
    let input = input_for(&p, input, seed)?;
    let err = std::io::stderr();
    let mut err = err.lock();
    let mut tracer = |r: polyqtt::machine::Rule, depth: usize| {
        if trace {
            let _ = writeln!(err, "{:?} @{}", r, depth);
        }
    };
    let r = run_traced(&p, &input, ctx.fuel, &mut tracer)?;
    match json {
        Some(dest) => emit_json(
            dest,
            &RunJson {
                name: &p.name,
                regime: p.regime.name(),
                input: r.input.to_string(),
                output: r.output.to_string(),
                steps: r.steps,
                size: r.size,
                bound: r.bound,
                ok: r.ok,
            },
        )?,
        None => {
            println!("input: {}", r.input);
            println!("value: {}", r.output);
            println!("steps: {}", r.steps);
            println!("bound: {} (size {})", r.bound, r.size);
        }
    }
    if r.ok {
        Ok(())
    } else {
        Err(Failure::Violation(format!("{} steps exceed the bound {}", r.steps, r.bound)))
    }
}

fn cmd_bound(ctx: &Ctx, t: &Target, json: Option<&str>) -> CmdResult {
    let p = ctx.program(t)?;
    let b = extract_bound(&p);
    match json {
        Some(dest) => emit_json(dest, &b),
        None => {
            println!("{} [{}, {}]", b.name, b.regime, b.monoid);
            println!("q(x) = {}", b.poly);
            println!("degree: {}", b.degree);
            println!("steps <= q(S), S = size of the input (k+1 per natural k, 1 per diamond)");
            Ok(())
        }
    }
}

fn cmd_verify(ctx: &Ctx, t: &Target, max_n: u64, seed: u64, agree: bool, json: Option<&str>) -> CmdResult {
    let p = ctx.program(t)?;
    let rep = verify_sweep(&p, max_n, seed)?;
    let quiet = json == Some("-");
    if let Some(dest) = json {
        emit_json(dest, &rep)?;
    }
    if !quiet {
        println!("{} [{}] q = {:?}", rep.name, rep.regime, rep.bound);
        println!("{:>5} {:>12} {:>14}  ok", "n", "steps", "bound");
        for r in &rep.rows {
            println!("{:>5} {:>12} {:>14}  {}", r.n, r.steps, r.bound, if r.ok { "yes" } else { "NO" });
        }
    }
    if agree {
        let nbe = Nbe::new(p.regime);
        for n in 0..=max_n.min(if p.input_arity == 0 { 0 } else { max_n }) {
            let input = p.sample(&nbe, n, seed)?;
            let m = polyqtt::compile::run_and_verify(&p, &input, ctx.fuel)?.output;
            let k = kernel_output(&p, &input)?;
            if m != k {
                return Err(Failure::Internal(format!("machine gave {} but the kernel gave {} on {}", m, k, input)));
            }
        }
        if !quiet {
            println!("machine and kernel agree for n <= {}", max_n);
        }
    }
    if rep.ok {
        if !quiet {
            println!("ok");
        }
        Ok(())
    } else {
        let bad: Vec<_> = rep.rows.iter().filter(|r| !r.ok).map(|r| r.n).collect();
        Err(Failure::Violation(format!("bound violated at n = {:?}", bad)))
    }
}

fn qtt_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = vec![];
    for p in paths {
        if p.is_dir() {
            let rd = fs::read_dir(p).map_err(|e| Failure::Internal(format!("{}: {}", p.display(), e)))?;
            let mut here: Vec<_> =
                rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|f| f.extension().is_some_and(|x| x == "qtt")).collect();
            here.sort();
            out.extend(here);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Outcome of one corpus file, as (exit status it implies, message).
fn corpus_file(ctx: &Ctx, path: &Path, max_n: u64) -> Result<(u8, String), Failure> {
    let src = ctx.read(path)?;
    let expect = expected_label(&src);
    let loaded = match (load(&src, ctx.opts()), expect.as_deref()) {
        (Err(d), Some(want)) if d.label == want => return Ok((0, format!("rejected [{}]", d.label))),
        (Err(d), Some(want)) => return Ok((1, format!("rejected [{}], expected [{}]: {}", d.label, want, d.message))),
        (Err(d), None) => return Ok((1, format!("rejected [{}]: {}", d.label, d.message))),
        (Ok(_), Some(want)) if want != EXPECT_VIOLATION => return Ok((1, format!("accepted, expected [{}]", want))),
        (Ok(l), _) => l,
    };
    let mut swept = 0;
    let mut violated = vec![];
    for d in loaded.decls.iter().filter(|d| d.sigma == Fragment::One) {
        let p = compile_named(&loaded, &d.name)?;
        match verify_sweep(&p, max_n, 0) {
            Ok(rep) if rep.ok => swept += 1,
            Ok(_) => violated.push(d.name.clone()),
            Err(VerifyError::Observe(ObserveError::NotObservable(_))) => {}
            Err(e) => return Ok((3, format!("`{}`: {}", d.name, e))),
        }
    }
    let expect_violation = expect.as_deref() == Some(EXPECT_VIOLATION);
    Ok(match (violated.is_empty(), expect_violation) {
        (true, false) => (0, format!("{} declarations, {} within bound up to n = {}", loaded.decls.len(), swept, max_n)),
        (false, true) => (0, format!("bound violated as expected by {:?}", violated)),
        (true, true) => (2, "expected a bound violation, none found".into()),
        (false, false) => (2, format!("bound violated by {:?}", violated)),
    })
}

fn cmd_corpus(ctx: &Ctx, paths: &[PathBuf], max_n: u64) -> CmdResult {
    let mut worst = 0;
    let files = qtt_files(paths)?;
    for f in &files {
        let (code, msg) = corpus_file(ctx, f, max_n)?;
        println!("{} {}: {}", if code == 0 { "ok  " } else { "FAIL" }, f.display(), msg);
        worst = worst.max(code);
    }
    println!("{} files", files.len());
    match worst {
        0 => Ok(()),
        1 => Err(Failure::Static("corpus has unexpected check results".into())),
        2 => Err(Failure::Violation("corpus has unexpected bound results".into())),
        _ => Err(Failure::Internal("corpus run failed".into())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let ctx = Ctx { regime: cli.regime, sigma: cli.sigma.map(|s| Fragment::from_usage(s as u64)), fuel: cli.fuel };
    let res = polyqtt::with_big_stack(move || match &cli.cmd {
        Cmd::Check { file } => cmd_check(&ctx, file),
        Cmd::Compile { target, emit_machine } => cmd_compile(&ctx, target, *emit_machine),
        Cmd::Run { target, input, seed, trace, json } => cmd_run(&ctx, target, input.as_deref(), *seed, *trace, json.as_deref()),
        Cmd::Bound { target, json } => cmd_bound(&ctx, target, json.as_deref()),
        Cmd::Verify { target, max_n, seed, agree, json } => cmd_verify(&ctx, target, *max_n, *seed, *agree, json.as_deref()),
        Cmd::Corpus { paths, max_n } => cmd_corpus(&ctx, paths, *max_n),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let m = f.message();
            eprintln!("{}", m.strip_suffix('\n').unwrap_or(m));
            ExitCode::from(f.code())
        }
    }
}
