//! Verification harness: per-point error estimates, degree audits and identity checks.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{range, Error, Result};
use crate::expr::Evaluator;
use crate::field::{FieldElement, FieldSpec, Prob};
use crate::polyalg::EXPANSION_CAP;
use crate::probpoly::Recipe;
use crate::rng::{trial_seed, Enumerator, ExactMass, Randomness, SeededStream};
use crate::symfun::Spectrum;

/// Default bound on `n` for evaluating every point of the cube.
pub const EXHAUSTIVE_CAP: usize = 14;
/// Default bound on the number of randomness outcomes in exact mode.
pub const ENUMERATION_CAP: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One representative `1^w 0^{n-w}` per Hamming weight, Monte Carlo over seeds.
    ByWeight,
    /// Every point of `{0,1}^n`, Monte Carlo over seeds.
    AllPoints,
    /// Every outcome of the randomness, at one representative per weight.
    Exact,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub mode: Mode,
    pub trials: u64,
    pub master_seed: u64,
    pub jobs: usize,
    pub exhaustive_cap: usize,
    pub enumeration_cap: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            mode: Mode::ByWeight,
            trials: 10_000,
            master_seed: 0,
            jobs: 1,
            exhaustive_cap: EXHAUSTIVE_CAP,
            enumeration_cap: ENUMERATION_CAP,
        }
    }
}

/// Disagreement statistics of one Hamming-weight class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightStat {
    pub weight: usize,
    /// Points of this weight that were evaluated.
    pub points: u64,
    /// Disagreements at the worst point of the class.
    pub errors: u64,
    pub rate: f64,
    /// Exact error of the representative point, in exact mode.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub mode: Mode,
    pub n: usize,
    /// Monte Carlo trials, or enumerated outcomes in exact mode.
    pub trials: u64,
    pub target: Prob,
    /// Allowance added to the target before comparison; 0 in exact mode.
    pub slack: f64,
    pub per_weight: Vec<WeightStat>,
    pub worst_weight: usize,
    pub worst_rate: f64,
    pub pass: bool,
}

/// `3√(ε/trials)`, the one-sided allowance for a Monte Carlo estimate of a rate `≤ ε`.
pub fn slack(eps: &Prob, trials: u64) -> f64 {
    3.0 * (eps.to_f64() / trials as f64).sqrt()
}

fn representative(n: usize, w: usize) -> Vec<bool> {
    (0..n).map(|i| i < w).collect()
}

fn disagrees(out: &[FieldElement], targets: &[Spectrum], w: usize) -> bool {
    out.iter().zip(targets).any(|(v, t)| v.as_bool() != Some(t.at(w)))
}

fn check_targets<'a>(r: &'a Recipe, targets: Option<&'a [Spectrum]>) -> Result<&'a [Spectrum]> {
    let ts = targets.unwrap_or(r.targets());
    if ts.len() != r.arity() {
        return Err(Error::Arity { expected: r.arity(), found: ts.len() });
    }
    if let Some(t) = ts.iter().find(|t| t.n() != r.n()) {
        return Err(Error::Arity { expected: r.n(), found: t.n() });
    }
    Ok(ts)
}

/// Counts disagreements per point over trials `range`, one entry per point in `points`.
fn count_range(r: &Recipe, targets: &[Spectrum], points: &[(usize, Vec<bool>)], master: u64, trials: std::ops::Range<u64>) -> Vec<u64> {
    let mut bad = vec![0u64; points.len()];
    for k in trials {
        let e = r.sample(trial_seed(master, k));
        let mut ev = Evaluator::new(&e);
        for (slot, (w, x)) in bad.iter_mut().zip(points) {
            if disagrees(&ev.eval(x), targets, *w) {
                *slot += 1;
            }
        }
    }
    bad
}

/// Per-point error of `r` against `targets` (default: the recipe's own targets).
pub fn empirical_error(r: &Recipe, targets: Option<&[Spectrum]>, opts: &VerifyOptions) -> Result<ErrorReport> {
    let targets = check_targets(r, targets)?;
    let n = r.n();
    let eps = r.error().clone();
    if opts.mode == Mode::Exact {
        return exact_error(r, targets, opts.enumeration_cap);
    }
    if opts.trials == 0 {
        return range("trials must be at least 1");
    }
    let points: Vec<(usize, Vec<bool>)> = match opts.mode {
        Mode::ByWeight => (0..=n).map(|w| (w, representative(n, w))).collect(),
        _ => {
            if n > opts.exhaustive_cap {
                return Err(Error::Cap(format!("all-points mode needs n ≤ {}, got {n}", opts.exhaustive_cap)));
            }
            (0u64..1 << n)
                .map(|m| {
                    let x: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
                    (x.iter().filter(|&&b| b).count(), x)
                })
                .collect()
        }
    };
    let jobs = opts.jobs.clamp(1, opts.trials as usize);
    let chunk = opts.trials.div_ceil(jobs as u64);
    let bad: Vec<u64> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs as u64)
            .map(|j| {
                let lo = (j * chunk).min(opts.trials);
                let hi = ((j + 1) * chunk).min(opts.trials);
                let points = &points;
                s.spawn(move || count_range(r, targets, points, opts.master_seed, lo..hi))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).fold(vec![0; points.len()], |mut acc, part| {
            acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
            acc
        })
    });
    let mut per_weight: Vec<WeightStat> =
        (0..=n).map(|w| WeightStat { weight: w, points: 0, errors: 0, rate: 0.0, exact: None }).collect();
    for ((w, _), b) in points.iter().zip(bad) {
        let s = &mut per_weight[*w];
        s.points += 1;
        s.errors = s.errors.max(b);
    }
    for s in &mut per_weight {
        s.rate = s.errors as f64 / opts.trials as f64;
    }
    let slack = slack(&eps, opts.trials);
    Ok(finish(opts.mode, n, opts.trials, eps, slack, per_weight, |s| s.rate))
}

fn finish(
    mode: Mode,
    n: usize,
    trials: u64,
    target: Prob,
    slack: f64,
    per_weight: Vec<WeightStat>,
    ok: impl Fn(&WeightStat) -> f64,
) -> ErrorReport {
    let worst = per_weight.iter().max_by(|a, b| a.rate.total_cmp(&b.rate)).expect("n + 1 classes");
    let (worst_weight, worst_rate) = (worst.weight, worst.rate);
    let limit = target.to_f64() + slack;
    let pass = per_weight.iter().all(|s| ok(s) <= limit);
    ErrorReport { mode, n, trials, target, slack, per_weight, worst_weight, worst_rate, pass }
}

fn exact_error(r: &Recipe, targets: &[Spectrum], cap: u64) -> Result<ErrorReport> {
    let n = r.n();
    let points: Vec<Vec<bool>> = (0..=n).map(|w| representative(n, w)).collect();
    let mut mass = vec![ExactMass::default(); n + 1];
    let outcomes = Enumerator::for_each(
        cap,
        |rng| {
            let e = r.sample_with(rng);
            let mut ev = Evaluator::new(&e);
            points.iter().enumerate().map(|(w, x)| disagrees(&ev.eval(x), targets, w)).collect::<Vec<bool>>()
        },
        |bad, den| {
            for (m, b) in mass.iter_mut().zip(bad) {
                if b {
                    m.add(den);
                }
            }
        },
    )?;
    let eps = r.error().clone();
    let values: Vec<BigRational> = mass.iter().map(|m| m.value()).collect();
    let pass = values.iter().all(|v| v <= eps.value());
    let per_weight = values
        .iter()
        .enumerate()
        .map(|(w, v)| {
            let p = Prob::new(v.clone()).expect("a probability");
            WeightStat { weight: w, points: 1, errors: 0, rate: p.to_f64(), exact: Some(p.to_string()) }
        })
        .collect();
    let mut report = finish(Mode::Exact, n, outcomes, eps, 0.0, per_weight, |s| s.rate);
    report.pass = pass;
    Ok(report)
}

/// Exact error at every weight representative, as rationals.
pub fn exact_error_by_weight(r: &Recipe, cap: u64) -> Result<Vec<BigRational>> {
    let report = exact_error(r, r.targets(), cap)?;
    Ok(report.per_weight.iter().map(|s| s.exact.as_deref().expect("exact mode").parse::<Prob>().expect("valid").value().clone()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeAudit {
    pub draws: u64,
    pub declared: u64,
    pub max_tracked: u64,
    /// Largest actual degree among expanded draws, when `n ≤ 16`.
    pub max_expanded: Option<u64>,
    pub expanded_draws: u64,
    pub pass: bool,
}

/// Total cube evaluations spent on expansion per audit.
const EXPANSION_BUDGET: u64 = 1 << 22;

/// Tracked degrees of `draws` samples, and expanded degrees while the expansion budget lasts.
pub fn degree_audit(r: &Recipe, draws: u64, master_seed: u64) -> Result<DegreeAudit> {
    if draws == 0 {
        return range("draws must be at least 1");
    }
    let n = r.n();
    let expand_draws = if n <= EXPANSION_CAP { (EXPANSION_BUDGET >> n).clamp(1, draws) } else { 0 };
    let (mut max_tracked, mut max_expanded, mut pass) = (0u64, None::<u64>, true);
    for k in 0..draws {
        let e = r.sample(trial_seed(master_seed, k));
        let degs = e.output_degrees();
        let tracked = degs.iter().copied().max().unwrap_or(0);
        max_tracked = max_tracked.max(tracked);
        pass &= tracked <= r.declared_degree_bound();
        if k < expand_draws {
            for (i, &d) in degs.iter().enumerate() {
                let actual = e.expand(i)?.degree() as u64;
                pass &= actual <= d;
                max_expanded = Some(max_expanded.unwrap_or(0).max(actual));
            }
        }
    }
    Ok(DegreeAudit { draws, declared: r.declared_degree_bound(), max_tracked, max_expanded, expanded_draws: expand_draws, pass })
}

/// `Σ_terms coeff · Π (operand or 1 − operand)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityTerm {
    pub coeff: FieldElement,
    /// `(operand index, negated)`.
    pub factors: Vec<(usize, bool)>,
}

/// A claimed pointwise identity `target = Σ_terms …` between symmetric functions.
#[derive(Clone, Debug, PartialEq)]
pub struct Identity {
    pub field: FieldSpec,
    pub operands: Vec<Spectrum>,
    pub terms: Vec<IdentityTerm>,
    pub target: Spectrum,
}

/// Largest `n` accepted by [`identity_check`].
pub const IDENTITY_CAP: usize = 20;

impl Identity {
    /// `target = Σ_i c_i · operand_i`.
    pub fn linear(field: FieldSpec, operands: Vec<Spectrum>, coeffs: Vec<FieldElement>, target: Spectrum) -> Self {
        let terms = coeffs.into_iter().enumerate().map(|(i, c)| IdentityTerm { coeff: c, factors: vec![(i, false)] }).collect();
        Identity { field, operands, terms, target }
    }

    /// Value of the right-hand side at weight `w`.
    pub fn rhs_at(&self, w: usize) -> FieldElement {
        let f = self.field;
        let mut acc = f.zero();
        for t in &self.terms {
            let all = t.factors.iter().all(|&(i, neg)| self.operands[i].at(w) != neg);
            if all {
                acc = acc + &t.coeff;
            }
        }
        acc
    }
}

/// Checks the identity at every Hamming weight; symmetric operands make that exhaustive.
pub fn identity_check(id: &Identity) -> Result<bool> {
    let n = id.target.n();
    if n > IDENTITY_CAP {
        return Err(Error::Cap(format!("identity check needs n ≤ {IDENTITY_CAP}, got {n}")));
    }
    if let Some(o) = id.operands.iter().find(|o| o.n() != n) {
        return Err(Error::Arity { expected: n, found: o.n() });
    }
    for t in &id.terms {
        if t.coeff.field() != id.field {
            return Err(Error::Malformed(format!("coefficient {} is not in {}", t.coeff, id.field)));
        }
        if let Some(&(i, _)) = t.factors.iter().find(|(i, _)| *i >= id.operands.len()) {
            return Err(Error::Arity { expected: id.operands.len(), found: i + 1 });
        }
    }
    Ok((0..=n).all(|w| id.rhs_at(w) == id.field.from_bool(id.target.at(w))))
}

/// Wire form of an [`IdentityTerm`]; the coefficient is a field-element string.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct TermWire {
    coeff: String,
    factors: Vec<(usize, bool)>,
}

impl TermWire {
    pub(crate) fn from_term(t: &IdentityTerm) -> Self {
        TermWire { coeff: t.coeff.to_string(), factors: t.factors.clone() }
    }

    pub(crate) fn into_term(self, field: FieldSpec) -> Result<IdentityTerm> {
        Ok(IdentityTerm { coeff: field.parse_element(&self.coeff)?, factors: self.factors })
    }
}

#[derive(Serialize, Deserialize)]
struct IdentityWire {
    char: FieldSpec,
    operands: Vec<Spectrum>,
    terms: Vec<TermWire>,
    target: Spectrum,
}

impl Serialize for Identity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IdentityWire {
            char: self.field,
            operands: self.operands.clone(),
            terms: self.terms.iter().map(TermWire::from_term).collect(),
            target: self.target.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Identity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = IdentityWire::deserialize(d)?;
        let terms = w
            .terms
            .into_iter()
            .map(|t| t.into_term(w.char))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Ok(Identity { field: w.char, operands: w.operands, terms, target: w.target })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub trials: u64,
    /// `(weight, rate at the sorted representative, rate at random permutations of it)`.
    pub rates: Vec<(usize, f64, f64)>,
    pub pass: bool,
}

/// Compares correctness at `1^w 0^{n-w}` with correctness at a fresh random permutation of it.
pub fn permutation_equivariance(r: &Recipe, trials: u64, master_seed: u64) -> Result<EquivarianceReport> {
    if trials == 0 {
        return range("trials must be at least 1");
    }
    let n = r.n();
    let targets = r.targets();
    let mut sorted = vec![0u64; n + 1];
    let mut shuffled = vec![0u64; n + 1];
    let mut perm_rng = SeededStream::new(master_seed ^ 0x9e37_79b9_7f4a_7c15);
    for k in 0..trials {
        let e = r.sample(trial_seed(master_seed, k));
        let mut ev = Evaluator::new(&e);
        for w in 0..=n {
            let x = representative(n, w);
            if disagrees(&ev.eval(&x), targets, w) {
                sorted[w] += 1;
            }
            let mut y = x.clone();
            for i in (1..n).rev() {
                let j = perm_rng.below(i as u64 + 1) as usize;
                y.swap(i, j);
            }
            if disagrees(&ev.eval(&y), targets, w) {
                shuffled[w] += 1;
            }
        }
    }
    let t = trials as f64;
    let mut pass = true;
    let rates = (0..=n)
        .map(|w| {
            let (a, b) = (sorted[w] as f64 / t, shuffled[w] as f64 / t);
            let pooled = (a + b) / 2.0;
            // Two-proportion test at 5 standard deviations, plus one count of granularity.
            let tol = 5.0 * (2.0 * pooled * (1.0 - pooled) / t).sqrt() + 1.0 / t;
            pass &= (a - b).abs() <= tol;
            (w, a, b)
        })
        .collect();
    Ok(EquivarianceReport { trials, rates, pass })
}

/// Whether every exact rate is at most the target.
pub fn exact_rates_within(rates: &[BigRational], eps: &Prob) -> bool {
    rates.iter().all(|r| r <= eps.value() && *r >= BigRational::zero())
}
