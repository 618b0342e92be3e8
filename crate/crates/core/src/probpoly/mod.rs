//! Probabilistic-polynomial recipes and their samplers.
//!
//! A [`Recipe`] fixes a construction together with its error and declared degree bound.
//! Sampling draws every random choice from a [`Randomness`] stream and emits a
//! [`PolyExpr`] whose tracked degree never exceeds the declared bound.

mod construct;
mod profile;

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{Input, ListId, NodeId, PolyExpr};
use crate::field::{FieldElement, FieldSpec, Prob};
use crate::polyalg::SymTable;
use crate::rng::{Randomness, SeededStream};
use crate::symfun::Spectrum;

pub use construct::{
    amplify, amplify_arity, binomial_tail, bounded_recipe, char0_or, compose, constant_recipe, exact_recipe,
    general_recipe, periodic_exact_recipe, razborov_or, reflect, sum, t_constant_recipe, threshold_tuple,
    xor_combine,
};
pub use profile::{ceil_log2, ConstantsProfile};

/// Parameters from which a recipe is rebuilt; this is the serialized form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecipeSpec {
    Constant { n: usize, field: FieldSpec, values: Vec<bool> },
    Exact { field: FieldSpec, targets: Vec<Spectrum> },
    PeriodicExact { field: FieldSpec, g: Spectrum },
    RazborovOr { n: usize, eps: Prob, field: FieldSpec, negate: bool },
    Char0Or { n: usize, eps: Prob, negate: bool },
    ThresholdTuple { n: usize, thresholds: Vec<usize>, eps: Prob, field: FieldSpec, profile: ConstantsProfile },
    TConstant { f: Spectrum, eps: Prob, field: FieldSpec, profile: ConstantsProfile },
    Bounded { h: Spectrum, eps: Prob, field: FieldSpec, profile: ConstantsProfile },
    General { f: Spectrum, eps: Prob, field: FieldSpec, profile: ConstantsProfile },
    Amplify { child: Box<RecipeSpec>, delta: Prob },
    Compose { outer: Box<RecipeSpec>, inners: Vec<RecipeSpec> },
    Sum { parts: Vec<RecipeSpec>, coeffs: Vec<String> },
    Xor { a: Box<RecipeSpec>, b: Box<RecipeSpec> },
    Reflect { child: Box<RecipeSpec> },
}

impl RecipeSpec {
    pub fn build(&self) -> Result<Recipe> {
        use RecipeSpec::*;
        match self {
            Constant { n, field, values } => Ok(constant_recipe(*n, *field, values.clone())),
            Exact { field, targets } => exact_recipe(targets.clone(), *field),
            PeriodicExact { field, g } => periodic_exact_recipe(g, *field),
            RazborovOr { n, eps, field, negate } => razborov_or(*n, eps, *field, *negate),
            Char0Or { n, eps, negate } => char0_or(*n, eps, *negate),
            ThresholdTuple { n, thresholds, eps, field, profile } => threshold_tuple(*n, thresholds, eps, *field, profile),
            TConstant { f, eps, field, profile } => t_constant_recipe(f, eps, *field, profile),
            Bounded { h, eps, field, profile } => bounded_recipe(h, eps, *field, profile),
            General { f, eps, field, profile } => general_recipe(f, eps, *field, profile),
            Amplify { child, delta } => amplify(&child.build()?, delta),
            Compose { outer, inners } => {
                let inners = inners.iter().map(|s| s.build()).collect::<Result<Vec<_>>>()?;
                compose(&outer.build()?, &inners)
            }
            Sum { parts, coeffs } => {
                let parts = parts.iter().map(|s| s.build()).collect::<Result<Vec<_>>>()?;
                let field = parts.first().ok_or_else(|| Error::Range("sum of no recipes".into()))?.field();
                let coeffs = coeffs.iter().map(|c| field.parse_element(c)).collect::<Result<Vec<_>>>()?;
                sum(&parts, &coeffs)
            }
            Xor { a, b } => xor_combine(&a.build()?, &b.build()?),
            Reflect { child } => Ok(reflect(&child.build()?)),
        }
    }
}

/// One output of a [`Plan::Layout`]: a fixed bit or an output of the live sub-tuple.
#[derive(Clone, Debug)]
pub(crate) enum Slot {
    Const(bool),
    Child(usize),
}

/// `constant + Σ coeff · children[c].outputs[k]`.
#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub constant: FieldElement,
    pub terms: Vec<(usize, usize, FieldElement)>,
}

#[derive(Clone, Debug)]
pub(crate) struct Hashing {
    pub r: usize,
    /// Exact windows `EX_[0,r] Thr^{t_i}` on `n` inputs.
    pub low: Vec<Arc<SymTable>>,
    /// Exact `Thr^{t_i}` on the `r` bucket indicators.
    pub q: Vec<Arc<SymTable>>,
    /// `(runs, scales)` of the characteristic-0 bucket gadgets; `None` in characteristic p.
    pub gadget: Option<(u32, u32)>,
}

#[derive(Clone, Debug)]
pub(crate) struct Inductive {
    pub sub_n: usize,
    pub prime: Recipe,
    pub plus: Recipe,
    pub minus: Recipe,
    pub windows: Vec<Arc<SymTable>>,
    /// The weight range on which each window is exact.
    #[cfg_attr(not(test), allow(dead_code))]
    pub ranges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub(crate) enum Plan {
    Constant(Vec<bool>),
    Tables(Vec<Arc<SymTable>>),
    Razborov { ell: u32, negate: bool },
    Char0Or { runs: u32, scales: u32, negate: bool },
    Layout { child: Option<Box<Recipe>>, slots: Vec<Slot> },
    Hashing(Box<Hashing>),
    Inductive(Box<Inductive>),
    Linear { children: Vec<Recipe>, rows: Vec<Row> },
    Amplify { child: Box<Recipe>, maj: Arc<SymTable> },
    Compose { outer: Box<Recipe>, inners: Vec<Recipe> },
    Xor(Box<Recipe>, Box<Recipe>),
    Reflect(Box<Recipe>),
}

/// A distribution over polynomial tuples, sampled deterministically from a seed.
#[derive(Clone, Debug)]
pub struct Recipe {
    pub(crate) spec: RecipeSpec,
    pub(crate) n: usize,
    pub(crate) field: FieldSpec,
    pub(crate) error: Prob,
    pub(crate) declared: u64,
    pub(crate) targets: Vec<Spectrum>,
    pub(crate) branch: String,
    pub(crate) formula_bound: Option<f64>,
    pub(crate) plan: Plan,
}

impl Recipe {
    pub fn spec(&self) -> &RecipeSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    /// Number of outputs.
    pub fn arity(&self) -> usize {
        self.targets.len()
    }

    /// Bound on `Pr[some output differs from its target]` at every point.
    pub fn error(&self) -> &Prob {
        &self.error
    }

    pub fn declared_degree_bound(&self) -> u64 {
        self.declared
    }

    /// Target spectrum of each output.
    pub fn targets(&self) -> &[Spectrum] {
        &self.targets
    }

    /// Which construction produced the recipe, e.g. `"small_error:hashing"` or `"general:direct"`.
    pub fn branch(&self) -> &str {
        &self.branch
    }

    /// The closed-form bound of the profile, when it states one.
    pub fn formula_bound(&self) -> Option<f64> {
        self.formula_bound
    }

    /// Sub-recipes in emission order.
    pub fn children(&self) -> Vec<&Recipe> {
        match &self.plan {
            Plan::Layout { child: Some(c), .. } => vec![c],
            Plan::Inductive(ind) => vec![&ind.prime, &ind.plus, &ind.minus],
            Plan::Linear { children, .. } => children.iter().collect(),
            Plan::Amplify { child, .. } | Plan::Reflect(child) => vec![child],
            Plan::Compose { outer, inners } => inners.iter().chain(std::iter::once(&**outer)).collect(),
            Plan::Xor(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Whether every sample equals the targets everywhere.
    pub fn is_exact(&self) -> bool {
        self.error.is_zero()
    }

    pub fn sample(&self, seed: u64) -> PolyExpr {
        self.sample_with(&mut SeededStream::new(seed))
    }

    /// Samples from an arbitrary randomness source, e.g. an exhaustive enumerator.
    pub fn sample_with(&self, rng: &mut dyn Randomness) -> PolyExpr {
        let mut b = PolyExpr::builder(self.field, self.n);
        let scope = b.add_list((0..self.n).map(Input::Var).collect());
        let outs = self.emit(&mut b, scope, rng);
        b.set_outputs(outs);
        b
    }

    /// Emits the outputs over the inputs of `scope`, which must have length `n`.
    pub fn emit(&self, b: &mut PolyExpr, scope: ListId, rng: &mut dyn Randomness) -> Vec<NodeId> {
        let f = self.field;
        let inputs = b.list(scope).to_vec();
        assert_eq!(inputs.len(), self.n, "scope length must match the recipe's arity");
        match &self.plan {
            Plan::Constant(vs) => vs.iter().map(|&v| b.constant(f.from_bool(v))).collect(),
            Plan::Tables(ts) => ts.iter().map(|t| b.sym_apply(t.clone(), scope)).collect(),
            Plan::Razborov { ell, negate } => {
                let inputs = if *negate { negated(b, &inputs) } else { inputs };
                let p = f.characteristic() as u64;
                let mut factors = Vec::with_capacity(*ell as usize);
                for _ in 0..*ell {
                    let coeffs = (0..inputs.len()).map(|_| f.from_i64(rng.below(p) as i64)).collect();
                    let l = b.combine_inputs(&inputs, coeffs);
                    let pw = b.power(l, (p - 1) as u32);
                    factors.push(b.one_minus(pw));
                }
                let prod = b.product(factors);
                vec![if *negate { prod } else { b.one_minus(prod) }]
            }
            Plan::Char0Or { runs, scales, negate } => {
                let inputs = if *negate { negated(b, &inputs) } else { inputs };
                let or = emit_char0_or(b, &inputs, *runs, *scales, rng);
                vec![if *negate { b.one_minus(or) } else { or }]
            }
            Plan::Layout { child, slots } => {
                let outs = child.as_ref().map(|c| c.emit(b, scope, rng)).unwrap_or_default();
                slots
                    .iter()
                    .map(|s| match s {
                        Slot::Const(v) => b.constant(f.from_bool(*v)),
                        Slot::Child(k) => outs[*k],
                    })
                    .collect()
            }
            Plan::Hashing(h) => emit_hashing(b, f, h, scope, &inputs, rng),
            Plan::Inductive(ind) => {
                let picks: Vec<Input> = (0..ind.sub_n).map(|_| inputs[rng.below(inputs.len() as u64) as usize]).collect();
                let sub = b.add_list(picks);
                let tp = ind.prime.emit(b, sub, &mut *rng.child(0));
                let tplus = ind.plus.emit(b, sub, &mut *rng.child(1));
                let tminus = ind.minus.emit(b, sub, &mut *rng.child(2));
                (0..self.arity())
                    .map(|i| {
                        let e = b.sym_apply(ind.windows[i].clone(), scope);
                        let not_plus = b.one_minus(tplus[i]);
                        let near = b.product(vec![not_plus, tminus[i]]);
                        let far = b.one_minus(near);
                        let a = b.product(vec![near, e]);
                        let c = b.product(vec![far, tp[i]]);
                        b.sum(vec![(f.one(), a), (f.one(), c)])
                    })
                    .collect()
            }
            Plan::Linear { children, rows } => {
                let outs: Vec<Vec<NodeId>> =
                    children.iter().enumerate().map(|(k, c)| c.emit(b, scope, &mut *rng.child(k as u64))).collect();
                rows.iter()
                    .map(|row| {
                        let mut terms: Vec<(FieldElement, NodeId)> =
                            row.terms.iter().map(|(c, k, coeff)| (coeff.clone(), outs[*c][*k])).collect();
                        if !row.constant.is_zero() {
                            let one = b.constant(f.one());
                            terms.push((row.constant.clone(), one));
                        }
                        b.sum(terms)
                    })
                    .collect()
            }
            Plan::Amplify { child, maj } => {
                let copies: Vec<Vec<NodeId>> =
                    (0..maj.arity()).map(|k| child.emit(b, scope, &mut *rng.child(k as u64))).collect();
                (0..self.arity())
                    .map(|i| {
                        let list = b.add_list(copies.iter().map(|c| Input::Node(c[i])).collect());
                        b.sym_apply(maj.clone(), list)
                    })
                    .collect()
            }
            Plan::Compose { outer, inners } => {
                let mids: Vec<Input> = inners
                    .iter()
                    .enumerate()
                    .map(|(k, r)| Input::Node(r.emit(b, scope, &mut *rng.child(k as u64))[0]))
                    .collect();
                let list = b.add_list(mids);
                outer.emit(b, list, &mut *rng.child(inners.len() as u64))
            }
            Plan::Xor(x, y) => {
                let gs = x.emit(b, scope, &mut *rng.child(0));
                let hs = y.emit(b, scope, &mut *rng.child(1));
                gs.iter()
                    .zip(&hs)
                    .map(|(&g, &h)| {
                        let gh = b.product(vec![g, h]);
                        b.sum(vec![(f.one(), g), (f.one(), h), (f.from_i64(-2), gh)])
                    })
                    .collect()
            }
            Plan::Reflect(child) => {
                let flipped = negated(b, &inputs);
                let list = b.add_list(flipped);
                child.emit(b, list, rng)
            }
        }
    }
}

/// `1 − input` for every input.
fn negated(b: &mut PolyExpr, inputs: &[Input]) -> Vec<Input> {
    inputs
        .iter()
        .map(|&i| {
            let node = b.input(i);
            Input::Node(b.one_minus(node))
        })
        .collect()
}

/// `1 − Π_runs Π_j (1 − Σ_{i∈S_j} x_i)`, where `S_j` keeps each input with probability `2^{-j}`.
fn emit_char0_or(b: &mut PolyExpr, inputs: &[Input], runs: u32, scales: u32, rng: &mut dyn Randomness) -> NodeId {
    let f = b.field();
    if inputs.is_empty() {
        return b.constant(f.zero());
    }
    let mut factors = Vec::with_capacity((runs * scales) as usize);
    for _ in 0..runs {
        for j in 0..scales {
            let members: Vec<Input> = inputs.iter().copied().filter(|_| rng.below(1 << j) == 0).collect();
            if members.is_empty() {
                // The factor is 1 − 0.
                continue;
            }
            let form = b.combine_inputs(&members, vec![f.one(); members.len()]);
            factors.push(b.one_minus(form));
        }
    }
    let prod = b.product(factors);
    b.one_minus(prod)
}

fn emit_hashing(
    b: &mut PolyExpr,
    f: FieldSpec,
    h: &Hashing,
    scope: ListId,
    inputs: &[Input],
    rng: &mut dyn Randomness,
) -> Vec<NodeId> {
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); h.r];
    for i in 0..inputs.len() {
        buckets[rng.below(h.r as u64) as usize].push(i);
    }
    let gadgets: Vec<Input> = match h.gadget {
        None => {
            let p = f.characteristic() as u64;
            let alpha: Vec<FieldElement> = (0..inputs.len()).map(|_| f.from_i64(rng.below(p) as i64)).collect();
            buckets
                .iter()
                .map(|bucket| {
                    if bucket.is_empty() {
                        return Input::Node(b.constant(f.zero()));
                    }
                    let members: Vec<Input> = bucket.iter().map(|&i| inputs[i]).collect();
                    let coeffs = bucket.iter().map(|&i| alpha[i].clone()).collect();
                    let l = b.combine_inputs(&members, coeffs);
                    Input::Node(b.power(l, (p - 1) as u32))
                })
                .collect()
        }
        Some((runs, scales)) => buckets
            .iter()
            .enumerate()
            .map(|(j, bucket)| {
                let members: Vec<Input> = bucket.iter().map(|&i| inputs[i]).collect();
                Input::Node(emit_char0_or(b, &members, runs, scales, &mut *rng.child(j as u64)))
            })
            .collect(),
    };
    let list = b.add_list(gadgets);
    h.low
        .iter()
        .zip(&h.q)
        .map(|(low, q)| {
            let p1 = b.sym_apply(low.clone(), scope);
            let p2 = b.sym_apply(q.clone(), list);
            let a = b.one_minus(p1);
            let c = b.one_minus(p2);
            let prod = b.product(vec![a, c]);
            b.one_minus(prod)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct RecipeWire {
    recipe: RecipeSpec,
    n: usize,
    char: FieldSpec,
    arity: usize,
    error: Prob,
    declared_degree_bound: u64,
    branch: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    formula_bound: Option<f64>,
}

impl Serialize for Recipe {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RecipeWire {
            recipe: self.spec.clone(),
            n: self.n,
            char: self.field,
            arity: self.arity(),
            error: self.error.clone(),
            declared_degree_bound: self.declared,
            branch: self.branch.clone(),
            formula_bound: self.formula_bound,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Recipe {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = RecipeWire::deserialize(d)?;
        let r = w.recipe.build().map_err(D::Error::custom)?;
        if r.declared != w.declared_degree_bound || r.n != w.n || r.field != w.char || r.error != w.error {
            return Err(D::Error::custom(format!(
                "recipe rebuilds with n={}, error {}, declared bound {}, which differs from the serialized fields",
                r.n, r.error, r.declared
            )));
        }
        Ok(r)
    }
}
