use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use symprob::bounds::{predicted_bounds, recurrence_audit_detail};
use symprob::probpoly::{
    bounded_recipe, char0_or, exact_recipe, general_recipe, periodic_exact_recipe, razborov_or, t_constant_recipe,
    threshold_tuple, ConstantsProfile, Recipe,
};
use symprob::reductions::{
    delta_from_shifts, maj_from_general, maj_from_periodic, mod_from_periodic, thr_complement_from_bounded,
    thr_restrictions, ReductionCertificate,
};
use symprob::symfun::{named_spectrum, standard_decomposition_in, NamedKind};
use symprob::verify::{degree_audit, empirical_error, Mode, VerifyOptions};
use symprob::{Error, FieldSpec, Prob, Spectrum};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "symprob", version, about = "Probabilistic polynomials for symmetric Boolean functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Standard decomposition and predicted bounds of a spectrum.
    Analyze {
        #[command(flatten)]
        spectrum: SpectrumArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Build a recipe and print it.
    Construct {
        #[command(flatten)]
        recipe: RecipeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Draw one polynomial from a recipe.
    Sample {
        #[command(flatten)]
        recipe: RecipeArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate per-point error; exit status 1 when the error target is missed.
    Verify {
        #[command(flatten)]
        recipe: RecipeArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = VerifyMode::ByWeight)]
        mode: VerifyMode,
    },
    /// Emit and check a reduction certificate; exit status 1 when a check fails.
    Reduce {
        #[arg(long, value_enum)]
        kind: Option<ReduceKind>,
        /// Re-check a certificate file instead of building one.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[command(flatten)]
        spectrum: SpectrumArgs,
        #[command(flatten)]
        common: Common,
        /// Threshold `t` for `thr-restrictions`.
        #[arg(long)]
        thresholds: Option<String>,
    },
    /// Predicted bounds against declared and sampled degrees, or a recurrence audit.
    Bounds {
        #[command(flatten)]
        spectrum: SpectrumArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampled draws for the degree column.
        #[arg(long, default_value_t = 20)]
        draws: u64,
        /// Audit the degree recurrence at this `t` instead.
        #[arg(long)]
        recurrence_t: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    /// Field characteristic: 0 or a prime.
    #[arg(long, default_value_t = 2)]
    field: u32,
    /// Error: a rational such as 1/8, or 2^-k.
    #[arg(long, default_value = "1/8")]
    eps: String,
    #[arg(long, default_value = "practical")]
    profile: String,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Spectrum file ('-' for standard input).
    #[arg(long)]
    spectrum: Option<PathBuf>,
    /// Named function such as MAJ, OR, THR(3), MOD(3,1).
    #[arg(long)]
    named: Option<String>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct RecipeArgs {
    #[arg(long, value_enum)]
    recipe: Option<RecipeKind>,
    /// Recipe JSON produced by `construct`.
    #[arg(long)]
    recipe_file: Option<PathBuf>,
    /// Comma-separated thresholds for `threshold-tuple`.
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long)]
    negate: bool,
    #[command(flatten)]
    spectrum: SpectrumArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecipeKind {
    RazborovOr,
    Char0Or,
    ThresholdTuple,
    TConstant,
    Bounded,
    General,
    Exact,
    PeriodicExact,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyMode {
    ByWeight,
    AllPoints,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceKind {
    DeltaFromShifts,
    ModFromPeriodic,
    MajFromPeriodic,
    ThrRestrictions,
    ThrComplementFromBounded,
    MajFromGeneral,
}

enum Failure {
    Lib(Error),
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<(Value, bool), Failure>;

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Range(_) => "range",
        Error::Malformed(_) => "malformed",
        Error::BadCharacteristic(_) => "bad_characteristic",
        Error::NotCharPower { .. } => "not_char_power",
        Error::NotSeparating(..) => "not_separating",
        Error::NotClosed(_) => "not_closed",
        Error::Periodic(_) => "periodic",
        Error::Arity { .. } => "arity",
        Error::Cap(_) => "cap",
    }
}

fn with_version(mut v: Value) -> Value {
    if let Value::Object(map) = &mut v {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    v
}

fn emit(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library types serialize")
}

fn read_text(path: &PathBuf) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Io(format!("standard input: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }
}

fn field(c: &Common) -> Result<FieldSpec, Failure> {
    Ok(FieldSpec::new(c.field)?)
}

fn eps(c: &Common) -> Result<Prob, Failure> {
    Ok(c.eps.parse::<Prob>()?)
}

fn profile(c: &Common) -> Result<ConstantsProfile, Failure> {
    Ok(ConstantsProfile::by_name(&c.profile)?)
}

fn spectrum(s: &SpectrumArgs) -> Result<Spectrum, Failure> {
    match (&s.spectrum, &s.named) {
        (Some(path), None) => Ok(read_text(path)?.parse::<Spectrum>()?),
        (None, Some(name)) => {
            let n = s.n.ok_or_else(|| Failure::Usage("--named needs --n".into()))?;
            Ok(named_spectrum(name.parse::<NamedKind>()?, n)?)
        }
        (Some(_), Some(_)) => Err(Failure::Usage("give either --spectrum or --named, not both".into())),
        (None, None) => Err(Failure::Usage("a spectrum is required (--spectrum or --named with --n)".into())),
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| Failure::Usage(format!("bad threshold list {s:?}"))))
        .collect()
}

fn build_recipe(r: &RecipeArgs, c: &Common) -> Result<Recipe, Failure> {
    if let Some(path) = &r.recipe_file {
        let text = read_text(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Lib(Error::Malformed(e.to_string())))?;
        let inner = v.get("recipe").cloned().unwrap_or(v);
        return serde_json::from_value(inner).map_err(|e| Failure::Lib(Error::Malformed(e.to_string())));
    }
    let n = || r.spectrum.n.ok_or_else(|| Failure::Usage("this recipe needs --n".into()));
    let kind = match r.recipe {
        Some(k) => k,
        None if r.spectrum.spectrum.is_some() || r.spectrum.named.is_some() => RecipeKind::General,
        None => return Err(Failure::Usage("give --recipe, --recipe-file or a spectrum".into())),
    };
    let f = field(c)?;
    Ok(match kind {
        RecipeKind::RazborovOr => razborov_or(n()?, &eps(c)?, f, r.negate)?,
        RecipeKind::Char0Or => char0_or(n()?, &eps(c)?, r.negate)?,
        RecipeKind::ThresholdTuple => {
            let list = r.thresholds.as_deref().ok_or_else(|| Failure::Usage("threshold-tuple needs --thresholds".into()))?;
            threshold_tuple(n()?, &parse_list(list)?, &eps(c)?, f, &profile(c)?)?
        }
        RecipeKind::TConstant => t_constant_recipe(&spectrum(&r.spectrum)?, &eps(c)?, f, &profile(c)?)?,
        RecipeKind::Bounded => bounded_recipe(&spectrum(&r.spectrum)?, &eps(c)?, f, &profile(c)?)?,
        RecipeKind::General => general_recipe(&spectrum(&r.spectrum)?, &eps(c)?, f, &profile(c)?)?,
        RecipeKind::Exact => exact_recipe(vec![spectrum(&r.spectrum)?], f)?,
        RecipeKind::PeriodicExact => periodic_exact_recipe(&spectrum(&r.spectrum)?, f)?,
    })
}

fn analyze(s: &SpectrumArgs, c: &Common) -> Outcome {
    let f = spectrum(s)?;
    let fs = field(c)?;
    let d = standard_decomposition_in(&f, fs)?;
    let b = predicted_bounds(&f, &eps(c)?, fs)?;
    Ok((json!({ "decomposition": to_value(&d), "bounds": to_value(&b) }), true))
}

fn verify(r: &RecipeArgs, c: &Common, seed: u64, trials: u64, jobs: usize, mode: VerifyMode) -> Outcome {
    let recipe = build_recipe(r, c)?;
    let mode = match mode {
        VerifyMode::ByWeight => Mode::ByWeight,
        VerifyMode::AllPoints => Mode::AllPoints,
        VerifyMode::Exact => Mode::Exact,
    };
    let opts = VerifyOptions { mode, trials, master_seed: seed, jobs, ..Default::default() };
    let report = empirical_error(&recipe, None, &opts)?;
    eprintln!("weight  rate        (target {} + slack {:.3e})", report.target, report.slack);
    for s in &report.per_weight {
        eprintln!("{:>6}  {:.6}", s.weight, s.rate);
    }
    let pass = report.pass;
    Ok((json!({ "branch": recipe.branch(), "report": to_value(&report) }), pass))
}

fn certificates_outcome(certs: &[ReductionCertificate], mut extra: Value) -> Outcome {
    let checks = certs.iter().map(|c| c.check()).collect::<Result<Vec<bool>, Error>>()?;
    let pass = checks.iter().all(|&b| b) && extra.get("parameters_hold").and_then(Value::as_bool).unwrap_or(true);
    for (c, ok) in certs.iter().zip(&checks) {
        eprintln!("{:<12} size {:>4}  degree {:>3}/{:<3}  identity {}", c.target.name, c.target.size, c.combiner_degree(), c.claimed_degree, if *ok { "ok" } else { "FAILED" });
    }
    let map = extra.as_object_mut().expect("object");
    map.insert("certificates".into(), to_value(&certs));
    map.insert("checks".into(), json!(checks));
    map.insert("pass".into(), json!(pass));
    Ok((extra, pass))
}

fn reduce(kind: Option<ReduceKind>, cert: &Option<PathBuf>, s: &SpectrumArgs, c: &Common, t: &Option<String>) -> Outcome {
    if let Some(path) = cert {
        let text = read_text(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Lib(Error::Malformed(e.to_string())))?;
        let list = match v.get("certificates") {
            Some(l) => l.clone(),
            None => json!([v]),
        };
        let certs: Vec<ReductionCertificate> =
            serde_json::from_value(list).map_err(|e| Failure::Lib(Error::Malformed(e.to_string())))?;
        return certificates_outcome(&certs, json!({ "kind": "recheck" }));
    }
    let kind = kind.ok_or_else(|| Failure::Usage("reduce needs --kind or --certificate".into()))?;
    let fs = field(c)?;
    match kind {
        ReduceKind::DeltaFromShifts => {
            let u = spectrum(s)?;
            let d = delta_from_shifts(u.values())?;
            let ok = (0..d.m).all(|x| d.eval(u.values(), x) == (x == d.index));
            Ok((json!({ "kind": "delta-from-shifts", "delta": to_value(&d), "pass": ok }), ok))
        }
        ReduceKind::ModFromPeriodic => {
            let certs = mod_from_periodic(&spectrum(s)?, fs)?;
            certificates_outcome(&certs, json!({ "kind": "mod-from-periodic" }))
        }
        ReduceKind::MajFromPeriodic => {
            let r = maj_from_periodic(&spectrum(s)?, &eps(c)?, fs)?;
            let hold = r.parameters.all_hold() && r.window_agrees;
            let extra = json!({
                "kind": "maj-from-periodic",
                "parameters": to_value(&r.parameters),
                "window": r.window,
                "window_agrees": r.window_agrees,
                "agreement": r.agreement,
                "parameters_hold": hold,
            });
            certificates_outcome(std::slice::from_ref(&r.certificate), extra)
        }
        ReduceKind::ThrRestrictions => {
            let n = s.n.ok_or_else(|| Failure::Usage("thr-restrictions needs --n".into()))?;
            let t = match t.as_deref().map(parse_list).transpose()?.as_deref() {
                Some([t]) => *t,
                _ => return Err(Failure::Usage("thr-restrictions needs a single --thresholds value".into())),
            };
            let certs = thr_restrictions(n, t, fs)?;
            certificates_outcome(&certs, json!({ "kind": "thr-restrictions" }))
        }
        ReduceKind::ThrComplementFromBounded => {
            let cert = thr_complement_from_bounded(&spectrum(s)?, fs)?;
            certificates_outcome(&[cert], json!({ "kind": "thr-complement-from-bounded" }))
        }
        ReduceKind::MajFromGeneral => {
            let r = maj_from_general(&spectrum(s)?, fs)?;
            let extra = json!({
                "kind": "maj-from-general",
                "m": r.m,
                "m1": r.m1,
                "a": r.a,
                "witnesses": r.witnesses,
                "chosen": r.chosen,
            });
            certificates_outcome(std::slice::from_ref(&r.certificate), extra)
        }
    }
}

fn bounds(s: &SpectrumArgs, c: &Common, seed: u64, draws: u64, recurrence_t: Option<u64>) -> Outcome {
    let fs = field(c)?;
    if let Some(t) = recurrence_t {
        let audit = recurrence_audit_detail(t, &eps(c)?, &profile(c)?, fs)?;
        for l in &audit.links {
            eprintln!("{:<26} {:>14.6e} <= {:<14.6e} {}", l.name, l.lhs, l.rhs, if l.holds { "ok" } else { "FAILS" });
        }
        eprintln!("closes: {}", audit.closes);
        let pass = audit.literal;
        return Ok((json!({ "recurrence": to_value(&audit) }), pass));
    }
    let f = spectrum(s)?;
    let e = eps(c)?;
    let report = predicted_bounds(&f, &e, fs)?;
    let (declared, sampled, branch) = match general_recipe(&f, &e, fs, &profile(c)?) {
        Ok(r) => {
            let audit = degree_audit(&r, draws.max(1), seed)?;
            (Some(r.declared_degree_bound()), Some(audit.max_tracked), Some(r.branch().to_string()))
        }
        Err(_) => (None, None, None),
    };
    let show = |v: Option<u64>| v.map_or("-".to_string(), |x| x.to_string());
    eprintln!("{:<22} {:<10} {:<10} {:<9} sampled", "case", "predicted", "lower", "declared");
    eprintln!(
        "{:<22} {:<10.3} {:<10} {:<9} {}",
        report.case.label(),
        report.upper,
        report.lower.map_or("-".into(), |l| format!("{l:.3}")),
        show(declared),
        show(sampled)
    );
    eprintln!("({})", report.allowance);
    Ok((json!({ "bounds": to_value(&report), "declared": declared, "sampled": sampled, "branch": branch }), true))
}

fn run(cli: Cli) -> Outcome {
    match cli.cmd {
        Command::Analyze { spectrum, common } => analyze(&spectrum, &common),
        Command::Construct { recipe, common } => {
            let r = build_recipe(&recipe, &common)?;
            Ok((json!({ "recipe": to_value(&r) }), true))
        }
        Command::Sample { recipe, common, seed } => {
            let r = build_recipe(&recipe, &common)?;
            Ok((json!({ "seed": seed, "expr": to_value(&r.sample(seed)) }), true))
        }
        Command::Verify { recipe, common, seed, trials, jobs, mode } => verify(&recipe, &common, seed, trials, jobs, mode),
        Command::Reduce { kind, certificate, spectrum, common, thresholds } => {
            reduce(kind, &certificate, &spectrum, &common, &thresholds)
        }
        Command::Bounds { spectrum, common, seed, draws, recurrence_t } => bounds(&spectrum, &common, seed, draws, recurrence_t),
    }
}

fn fail(kind: &str, message: String) -> ExitCode {
    emit(&with_version(json!({ "error": { "kind": kind, "message": message } })));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string()),
    };
    match run(cli) {
        Ok((v, pass)) => {
            emit(&with_version(v));
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Lib(e)) => fail(error_kind(&e), e.to_string()),
        Err(Failure::Usage(m)) => fail("usage", m),
        Err(Failure::Io(m)) => fail("io", m),
    }
}
