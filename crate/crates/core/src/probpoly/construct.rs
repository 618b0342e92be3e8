//! Constructors for every recipe kind.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::profile::{ceil_log2, ConstantsProfile};
use super::{Hashing, Inductive, Plan, Recipe, RecipeSpec, Row, Slot};
use crate::error::{range, Error, Result};
use crate::field::{FieldElement, FieldSpec, Prob};
use crate::polyalg::{big_binomial, exact_sympoly, interpolate_window, periodic_exact, SymPoly, SymTable};
use crate::symfun::{bounded_radius_detail, standard_decomposition_in, threshold_combination, Spectrum};

fn thr(n: usize, t: usize) -> Spectrum {
    Spectrum::from_fn(n, |w| w >= t)
}

fn table(poly: SymPoly, arity: usize) -> Arc<SymTable> {
    Arc::new(SymTable::new(poly, arity))
}

fn check_eps(eps: &Prob) -> Result<()> {
    if eps.is_zero() || *eps.value() >= BigRational::one() {
        return range(format!("error {eps} must lie in (0,1)"));
    }
    Ok(())
}

fn check_tuple_eps(eps: &Prob) -> Result<()> {
    if eps.is_zero() || *eps >= Prob::ratio(1, 3) {
        return range(format!("error {eps} must lie in (0,1/3); amplify first"));
    }
    Ok(())
}

/// `L = ⌈log2(1/ε)⌉`.
fn log_inv(eps: &Prob) -> usize {
    eps.ceil_log2_inv() as usize
}

pub fn constant_recipe(n: usize, field: FieldSpec, values: Vec<bool>) -> Recipe {
    Recipe {
        spec: RecipeSpec::Constant { n, field, values: values.clone() },
        n,
        field,
        error: Prob::zero(),
        declared: 0,
        targets: values.iter().map(|&v| Spectrum::constant(n, v)).collect(),
        branch: "constant".into(),
        formula_bound: None,
        plan: Plan::Constant(values),
    }
}

/// Deterministic tuple of exact symmetric representations.
pub fn exact_recipe(targets: Vec<Spectrum>, field: FieldSpec) -> Result<Recipe> {
    let n = targets.first().ok_or_else(|| Error::Range("exact recipe with no targets".into()))?.n();
    if let Some(t) = targets.iter().find(|t| t.n() != n) {
        return Err(Error::Arity { expected: n, found: t.n() });
    }
    let tables: Vec<_> = targets.iter().map(|t| table(exact_sympoly(t, field), n)).collect();
    Ok(Recipe {
        spec: RecipeSpec::Exact { field, targets: targets.clone() },
        n,
        field,
        error: Prob::zero(),
        declared: tables.iter().map(|t| t.poly().degree() as u64).max().unwrap_or(0),
        targets,
        branch: "exact".into(),
        formula_bound: None,
        plan: Plan::Tables(tables),
    })
}

/// Zero-error recipe for a spectrum whose period is a power of the characteristic.
pub fn periodic_exact_recipe(g: &Spectrum, field: FieldSpec) -> Result<Recipe> {
    let poly = periodic_exact(g, field)?;
    let n = g.n();
    Ok(Recipe {
        spec: RecipeSpec::PeriodicExact { field, g: g.clone() },
        n,
        field,
        error: Prob::zero(),
        declared: poly.degree() as u64,
        targets: vec![g.clone()],
        branch: "periodic_exact".into(),
        formula_bound: None,
        plan: Plan::Tables(vec![table(poly, n)]),
    })
}

fn or_target(n: usize, negate: bool) -> Spectrum {
    if negate {
        Spectrum::from_fn(n, |w| w == n)
    } else {
        Spectrum::from_fn(n, |w| w >= 1)
    }
}

/// OR (or AND when `negate`) over `F_p` from `⌈log(1/ε)⌉` random linear forms.
pub fn razborov_or(n: usize, eps: &Prob, field: FieldSpec, negate: bool) -> Result<Recipe> {
    if field.is_char_zero() {
        return range("razborov_or needs a prime characteristic; use char0_or");
    }
    if n == 0 {
        return range("razborov_or needs n ≥ 1");
    }
    check_eps(eps)?;
    let ell = eps.ceil_log2_inv();
    Ok(Recipe {
        spec: RecipeSpec::RazborovOr { n, eps: eps.clone(), field, negate },
        n,
        field,
        error: eps.clone(),
        declared: (field.characteristic() as u64 - 1) * ell as u64,
        targets: vec![or_target(n, negate)],
        branch: "razborov".into(),
        formula_bound: None,
        plan: Plan::Razborov { ell, negate },
    })
}

/// OR (or AND) over the rationals from random subsets at every scale `2^{-j}`.
pub fn char0_or(n: usize, eps: &Prob, negate: bool) -> Result<Recipe> {
    if n == 0 {
        return range("char0_or needs n ≥ 1");
    }
    check_eps(eps)?;
    let runs = eps.ceil_log2_inv();
    let scales = ceil_log2(n) + 1;
    let field = FieldSpec::rationals();
    Ok(Recipe {
        spec: RecipeSpec::Char0Or { n, eps: eps.clone(), negate },
        n,
        field,
        error: eps.clone(),
        declared: runs as u64 * scales as u64,
        targets: vec![or_target(n, negate)],
        branch: "char0_or".into(),
        formula_bound: None,
        plan: Plan::Char0Or { runs, scales, negate },
    })
}

/// The tuple `(Thr^{t_1}, …, Thr^{t_m})` on `n` inputs with shared randomness.
pub fn threshold_tuple(
    n: usize,
    thresholds: &[usize],
    eps: &Prob,
    field: FieldSpec,
    profile: &ConstantsProfile,
) -> Result<Recipe> {
    if thresholds.is_empty() {
        return range("threshold tuple needs at least one threshold");
    }
    if let Some(t) = thresholds.iter().find(|&&t| t > n) {
        return range(format!("threshold {t} exceeds n = {n}"));
    }
    check_tuple_eps(eps)?;
    profile.validate()?;
    let capped = match profile.error_cap_log2 {
        Some(c) if *eps > Prob::pow2_neg(c) => Prob::pow2_neg(c),
        _ => eps.clone(),
    };
    let mut r = tuple_inner(n, thresholds, &capped, field, profile)?;
    r.spec = RecipeSpec::ThresholdTuple { n, thresholds: thresholds.to_vec(), eps: eps.clone(), field, profile: profile.clone() };
    Ok(r)
}

/// Like [`threshold_tuple`] but thresholds may be 0 or `n+1` (constant components).
fn tuple_inner(n: usize, ts: &[usize], eps: &Prob, field: FieldSpec, profile: &ConstantsProfile) -> Result<Recipe> {
    let spec = RecipeSpec::ThresholdTuple { n, thresholds: ts.to_vec(), eps: eps.clone(), field, profile: profile.clone() };
    let targets: Vec<Spectrum> = ts.iter().map(|&t| thr(n, t)).collect();
    let mut live: Vec<usize> = ts.iter().copied().filter(|&t| t >= 1 && t <= n).collect();
    live.sort_unstable();
    live.dedup();
    if live.is_empty() {
        let mut r = constant_recipe(n, field, ts.iter().map(|&t| t == 0).collect());
        r.spec = spec;
        return Ok(r);
    }
    if live == ts {
        let mut r = tuple_core(n, &live, eps, field, profile)?;
        r.spec = spec;
        return Ok(r);
    }
    let child = tuple_core(n, &live, eps, field, profile)?;
    let slots = ts
        .iter()
        .map(|&t| match live.binary_search(&t) {
            Ok(k) => Slot::Child(k),
            Err(_) => Slot::Const(t == 0),
        })
        .collect();
    Ok(Recipe {
        spec,
        n,
        field,
        error: child.error.clone(),
        declared: child.declared,
        targets,
        branch: child.branch.clone(),
        formula_bound: child.formula_bound,
        plan: Plan::Layout { child: Some(Box::new(child)), slots },
    })
}

/// Thresholds here are distinct, sorted and within `[1, n]`.
fn tuple_core(n: usize, ts: &[usize], eps: &Prob, field: FieldSpec, profile: &ConstantsProfile) -> Result<Recipe> {
    let targets: Vec<Spectrum> = ts.iter().map(|&t| thr(n, t)).collect();
    let t = *ts.last().expect("non-empty");
    let l = log_inv(eps);
    let formula_bound = profile.formula_bound(field, n, t, l as f64);
    let spec = RecipeSpec::ThresholdTuple { n, thresholds: ts.to_vec(), eps: eps.clone(), field, profile: profile.clone() };
    let exact = |targets: Vec<Spectrum>, branch: &str| -> Result<Recipe> {
        let mut r = exact_recipe(targets, field)?;
        r.spec = spec.clone();
        r.formula_bound = formula_bound;
        r.branch = branch.into();
        Ok(r)
    };
    if n <= profile.base_n {
        return exact(targets, "base");
    }
    if t as f64 <= l as f64 * profile.small_error_divisor {
        let r = (profile.r_multiplier * l as f64).ceil() as usize;
        if n <= r {
            // The low window alone covers every weight.
            return exact(targets, "small_error:exact");
        }
        let low: Vec<_> = ts.iter().map(|&ti| Ok(table(interpolate_window(&thr(n, ti), 0, r, field)?, n))).collect::<Result<_>>()?;
        let q: Vec<_> = ts.iter().map(|&ti| table(exact_sympoly(&thr(r, ti), field), r)).collect();
        let (gadget, gadget_degree) = if field.is_char_zero() {
            let ge = profile.char0_gadget_error.clone().unwrap_or_else(|| eps.div_int(2 * r as u64));
            let runs = ge.ceil_log2_inv();
            let scales = ceil_log2(n) + 1;
            (Some((runs, scales)), runs as u64 * scales as u64)
        } else {
            (None, field.characteristic() as u64 - 1)
        };
        let declared = low
            .iter()
            .zip(&q)
            .map(|(a, b)| a.poly().degree() as u64 + b.poly().degree() as u64 * gadget_degree)
            .max()
            .unwrap_or(0);
        return Ok(Recipe {
            spec,
            n,
            field,
            error: eps.clone(),
            declared,
            targets,
            branch: "small_error:hashing".into(),
            formula_bound,
            plan: Plan::Hashing(Box::new(Hashing { r, low, q, gadget })),
        });
    }

    let sub_n = (n as f64 * profile.subsample_ratio).floor() as usize;
    let scale = sub_n as f64 / n as f64;
    let spread = ((t * l) as f64).sqrt();
    let inner = profile.window_inner_multiplier * spread;
    let outer = profile.window_outer_multiplier * spread;
    let shifted = |delta: f64| -> Vec<usize> {
        ts.iter().map(|&ti| (ti as f64 * scale + delta).round().clamp(0.0, sub_n as f64 + 1.0) as usize).collect()
    };
    let child_eps = eps.div_int(4);
    let prime = tuple_inner(sub_n, &shifted(0.0), &child_eps, field, profile)?;
    let plus = tuple_inner(sub_n, &shifted(inner), &child_eps, field, profile)?;
    let minus = tuple_inner(sub_n, &shifted(-inner), &child_eps, field, profile)?;
    let ranges: Vec<(usize, usize)> = ts.iter().map(|&ti| inductive_window(n, ti, outer)).collect();
    let windows: Vec<Arc<SymTable>> = ts
        .iter()
        .zip(&ranges)
        .map(|(&ti, &(lo, hi))| Ok(table(interpolate_window(&thr(n, ti), lo, hi, field)?, n)))
        .collect::<Result<_>>()?;
    let window_degree = windows.iter().map(|w| w.poly().degree() as u64).max().unwrap_or(0);
    let declared = plus.declared + minus.declared + window_degree.max(prime.declared);
    Ok(Recipe {
        spec,
        n,
        field,
        error: eps.clone(),
        declared,
        targets,
        branch: "inductive".into(),
        formula_bound,
        plan: Plan::Inductive(Box::new(Inductive { sub_n, prime, plus, minus, windows, ranges })),
    })
}

/// `[max(0, ⌊t − w⌋), min(n, ⌈t + w⌉)]`.
pub(crate) fn inductive_window(n: usize, t: usize, half_width: f64) -> (usize, usize) {
    let lo = (t as f64 - half_width).floor().max(0.0) as usize;
    let hi = ((t as f64 + half_width).ceil() as usize).min(n);
    (lo, hi)
}

/// `f = a_0 + Σ_{j ≥ 1} a_j Thr^j` through one shared threshold tuple.
pub fn t_constant_recipe(f: &Spectrum, eps: &Prob, field: FieldSpec, profile: &ConstantsProfile) -> Result<Recipe> {
    let n = f.n();
    let a = threshold_combination(f);
    let spec = RecipeSpec::TConstant { f: f.clone(), eps: eps.clone(), field, profile: profile.clone() };
    let js: Vec<usize> = (1..=n).filter(|&j| a[j] != 0).collect();
    if js.is_empty() {
        let mut r = constant_recipe(n, field, vec![f.at(0)]);
        r.spec = spec;
        return Ok(r);
    }
    let child = threshold_tuple(n, &js, eps, field, profile)?;
    let row = Row {
        constant: field.from_i64(a[0] as i64),
        terms: js.iter().enumerate().map(|(k, &j)| (0, k, field.from_i64(a[j] as i64))).collect(),
    };
    Ok(Recipe {
        spec,
        n,
        field,
        error: child.error.clone(),
        declared: child.declared,
        targets: vec![f.clone()],
        branch: "t_constant".into(),
        formula_bound: child.formula_bound,
        plan: Plan::Linear { children: vec![child], rows: vec![row] },
    })
}

/// `h = h_1 + h̃_2 − c`, with `h_1`, `h_2` both `B(h)`-constant and `h̃_2` the reflection of `h_2`.
pub fn bounded_recipe(h: &Spectrum, eps: &Prob, field: FieldSpec, profile: &ConstantsProfile) -> Result<Recipe> {
    check_eps(eps)?;
    let n = h.n();
    let spec = RecipeSpec::Bounded { h: h.clone(), eps: eps.clone(), field, profile: profile.clone() };
    let rad = bounded_radius_detail(h);
    let k = rad.k;
    let c = !rad.window_empty && h.at(k);
    let h1 = Spectrum::from_fn(n, |w| if w < k { h.at(w) } else { c });
    let h2 = Spectrum::from_fn(n, |u| if u < k { h.at(n - u) } else { c });
    let half = eps.div_int(2);
    let mut constant = -field.from_bool(c);
    let mut children = Vec::new();
    for (part, flip) in [(&h1, false), (&h2, true)] {
        if part.is_constant() {
            constant = constant + field.from_bool(part.at(0));
        } else {
            let r = t_constant_recipe(part, &half, field, profile)?;
            children.push(if flip { reflect(&r) } else { r });
        }
    }
    if children.is_empty() {
        let mut r = constant_recipe(n, field, vec![h.at(0)]);
        r.spec = spec;
        return Ok(r);
    }
    let error = children.iter().fold(Prob::zero(), |acc, r| acc.add(&r.error));
    let declared = children.iter().map(|r| r.declared).max().unwrap_or(0);
    let row = Row { constant, terms: (0..children.len()).map(|c| (c, 0, field.one())).collect() };
    let formula_bound = children.iter().filter_map(|r| r.formula_bound).reduce(f64::max);
    Ok(Recipe {
        spec,
        n,
        field,
        error,
        declared,
        targets: vec![h.clone()],
        branch: "bounded".into(),
        formula_bound,
        plan: Plan::Linear { children, rows: vec![row] },
    })
}

/// The cheaper of the decomposition route `g ⊕ h` and the direct threshold route.
pub fn general_recipe(f: &Spectrum, eps: &Prob, field: FieldSpec, profile: &ConstantsProfile) -> Result<Recipe> {
    check_tuple_eps(eps)?;
    let rep = standard_decomposition_in(f, field)?;
    let direct = t_constant_recipe(f, eps, field, profile)?;
    let decomposition = if rep.period_is_char_power == Some(true) {
        let g = if rep.g.is_constant() {
            constant_recipe(f.n(), field, vec![rep.g.at(0)])
        } else {
            periodic_exact_recipe(&rep.g, field)?
        };
        let h = bounded_recipe(&rep.h, &eps.div_int(2), field, profile)?;
        Some(xor_combine(&g, &h)?)
    } else {
        None
    };
    let (mut r, branch) = match decomposition {
        Some(d) if d.declared <= direct.declared => (d, "general:decomposition"),
        _ => (direct, "general:direct"),
    };
    r.spec = RecipeSpec::General { f: f.clone(), eps: eps.clone(), field, profile: profile.clone() };
    r.branch = branch.into();
    Ok(r)
}

/// `Pr[Bin(ℓ, ε) ≥ ⌈ℓ/2⌉]` exactly.
pub fn binomial_tail(ell: u64, eps: &BigRational) -> BigRational {
    let q = BigRational::one() - eps;
    let mut acc = BigRational::zero();
    for k in ell.div_ceil(2)..=ell {
        let c = BigRational::from_integer(big_binomial(ell, k));
        acc += c * num_traits::pow(eps.clone(), k as usize) * num_traits::pow(q.clone(), (ell - k) as usize);
    }
    acc
}

/// Smallest odd `ℓ` whose majority tail at `ε` is at most `δ`.
pub fn amplify_arity(eps: &Prob, delta: &Prob) -> Result<u64> {
    if *eps > Prob::ratio(1, 3) {
        return range(format!("amplification needs error ≤ 1/3, got {eps}"));
    }
    if delta.is_zero() && !eps.is_zero() {
        return range("cannot amplify to zero error");
    }
    let mut ell = 1u64;
    while binomial_tail(ell, eps.value()) > *delta.value() {
        ell += 2;
    }
    Ok(ell)
}

/// Majority of `ℓ` independent copies of `r`.
pub fn amplify(r: &Recipe, delta: &Prob) -> Result<Recipe> {
    let spec = RecipeSpec::Amplify { child: Box::new(r.spec.clone()), delta: delta.clone() };
    if r.error.is_zero() {
        let mut out = r.clone();
        out.spec = spec;
        return Ok(out);
    }
    if *delta >= r.error {
        return range(format!("target error {delta} is not below the recipe's error {}", r.error));
    }
    let ell = amplify_arity(&r.error, delta)?;
    let maj = Spectrum::from_fn(ell as usize, |w| 2 * w as u64 > ell);
    let error = Prob::new(binomial_tail(ell, r.error.value()))?;
    Ok(Recipe {
        spec,
        n: r.n,
        field: r.field,
        error,
        declared: ell * r.declared,
        targets: r.targets.clone(),
        branch: "amplify".into(),
        formula_bound: None,
        plan: Plan::Amplify { child: Box::new(r.clone()), maj: table(exact_sympoly(&maj, r.field), ell as usize) },
    })
}

/// `outer(inner_1(x), …, inner_k(x))`; every inner has arity 1.
pub fn compose(outer: &Recipe, inners: &[Recipe]) -> Result<Recipe> {
    if inners.len() != outer.n {
        return Err(Error::Arity { expected: outer.n, found: inners.len() });
    }
    let first = inners.first().ok_or_else(|| Error::Range("compose needs at least one inner recipe".into()))?;
    let n = first.n;
    for r in inners {
        if r.arity() != 1 {
            return Err(Error::Arity { expected: 1, found: r.arity() });
        }
        if r.n != n {
            return Err(Error::Arity { expected: n, found: r.n });
        }
        if r.field != outer.field {
            return range("compose across different fields");
        }
    }
    let targets = outer
        .targets
        .iter()
        .map(|o| Spectrum::from_fn(n, |w| o.at(inners.iter().filter(|r| r.targets[0].at(w)).count())))
        .collect();
    let error = inners.iter().fold(outer.error.clone(), |acc, r| acc.add(&r.error));
    let inner_max = inners.iter().map(|r| r.declared).max().unwrap_or(0);
    Ok(Recipe {
        spec: RecipeSpec::Compose { outer: Box::new(outer.spec.clone()), inners: inners.iter().map(|r| r.spec.clone()).collect() },
        n,
        field: outer.field,
        error,
        declared: outer.declared * inner_max,
        targets,
        branch: "compose".into(),
        formula_bound: None,
        plan: Plan::Compose { outer: Box::new(outer.clone()), inners: inners.to_vec() },
    })
}

fn same_shape(a: &Recipe, b: &Recipe) -> Result<()> {
    if a.n != b.n {
        return Err(Error::Arity { expected: a.n, found: b.n });
    }
    if a.arity() != b.arity() {
        return Err(Error::Arity { expected: a.arity(), found: b.arity() });
    }
    if a.field != b.field {
        return range("recipes over different fields");
    }
    Ok(())
}

/// `Σ c_i r_i` for single-output recipes whose weighted target sum stays Boolean.
pub fn sum(parts: &[Recipe], coeffs: &[FieldElement]) -> Result<Recipe> {
    let first = parts.first().ok_or_else(|| Error::Range("sum of no recipes".into()))?;
    if coeffs.len() != parts.len() {
        return Err(Error::Arity { expected: parts.len(), found: coeffs.len() });
    }
    for r in parts {
        same_shape(first, r)?;
        if r.arity() != 1 {
            return Err(Error::Arity { expected: 1, found: r.arity() });
        }
    }
    let field = first.field;
    let n = first.n;
    let mut bits = Vec::with_capacity(n + 1);
    for w in 0..=n {
        let v = parts
            .iter()
            .zip(coeffs)
            .filter(|(r, _)| r.targets[0].at(w))
            .fold(field.zero(), |acc, (_, c)| acc + c);
        bits.push(v.as_bool().ok_or_else(|| Error::Range(format!("weighted target sum is {v} at weight {w}")))?);
    }
    let error = parts.iter().fold(Prob::zero(), |acc, r| acc.add(&r.error));
    let row = Row { constant: field.zero(), terms: coeffs.iter().enumerate().map(|(c, k)| (c, 0, k.clone())).collect() };
    Ok(Recipe {
        spec: RecipeSpec::Sum {
            parts: parts.iter().map(|r| r.spec.clone()).collect(),
            coeffs: coeffs.iter().map(|c| c.to_string()).collect(),
        },
        n,
        field,
        error,
        declared: parts.iter().map(|r| r.declared).max().unwrap_or(0),
        targets: vec![Spectrum::new(bits)?],
        branch: "sum".into(),
        formula_bound: None,
        plan: Plan::Linear { children: parts.to_vec(), rows: vec![row] },
    })
}

/// `a + b − 2ab` componentwise.
pub fn xor_combine(a: &Recipe, b: &Recipe) -> Result<Recipe> {
    same_shape(a, b)?;
    let targets = a.targets.iter().zip(&b.targets).map(|(x, y)| x.xor(y)).collect::<Result<_>>()?;
    let formula_bound = match (a.formula_bound, b.formula_bound) {
        (Some(x), Some(y)) => Some(x + y),
        (x, y) => x.or(y),
    };
    Ok(Recipe {
        spec: RecipeSpec::Xor { a: Box::new(a.spec.clone()), b: Box::new(b.spec.clone()) },
        n: a.n,
        field: a.field,
        error: a.error.add(&b.error),
        declared: a.declared + b.declared,
        targets,
        branch: "xor".into(),
        formula_bound,
        plan: Plan::Xor(Box::new(a.clone()), Box::new(b.clone())),
    })
}

/// The recipe under the substitution `x_i ↦ 1 − x_i`.
pub fn reflect(r: &Recipe) -> Recipe {
    Recipe {
        spec: RecipeSpec::Reflect { child: Box::new(r.spec.clone()) },
        n: r.n,
        field: r.field,
        error: r.error.clone(),
        declared: r.declared,
        targets: r.targets.iter().map(|t| t.reflect()).collect(),
        branch: "reflect".into(),
        formula_bound: r.formula_bound,
        plan: Plan::Reflect(Box::new(r.clone())),
    }
}
