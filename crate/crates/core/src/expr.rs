//! Sampled polynomials as evaluation DAGs with tracked degrees.

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::polyalg::{MultilinearPoly, SymPoly, SymTable, EXPANSION_CAP};

pub type NodeId = u32;
pub type ListId = u32;

/// An argument of a symmetric application: a variable or an earlier node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Input {
    Var(usize),
    Node(NodeId),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Constant(FieldElement),
    Var(usize),
    LinearForm { vars: Vec<usize>, coeffs: Vec<FieldElement> },
    Power { base: NodeId, exp: u32 },
    Product(Vec<NodeId>),
    /// Weighted sum `Σ c_i · child_i`.
    Sum(Vec<(FieldElement, NodeId)>),
    /// A symmetric polynomial applied to an input list (repeats allowed).
    SymApply { table: Arc<SymTable>, list: ListId },
}

/// A tuple of polynomials over `n` variables sharing one DAG.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyExpr {
    field: FieldSpec,
    n: usize,
    nodes: Vec<Node>,
    degrees: Vec<u64>,
    lists: Vec<Vec<Input>>,
    outputs: Vec<NodeId>,
    var_nodes: Vec<Option<NodeId>>,
    zero: Option<NodeId>,
    one: Option<NodeId>,
}

impl PolyExpr {
    /// An empty DAG over `n` variables.
    pub fn builder(field: FieldSpec, n: usize) -> Self {
        PolyExpr {
            field,
            n,
            nodes: Vec::new(),
            degrees: Vec::new(),
            lists: Vec::new(),
            outputs: Vec::new(),
            var_nodes: vec![None; n],
            zero: None,
            one: None,
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn set_outputs(&mut self, outputs: Vec<NodeId>) {
        self.outputs = outputs;
    }

    pub fn list(&self, id: ListId) -> &[Input] {
        &self.lists[id as usize]
    }

    pub fn degree_of(&self, id: NodeId) -> u64 {
        self.degrees[id as usize]
    }

    /// Tracked degree of each output.
    pub fn output_degrees(&self) -> Vec<u64> {
        self.outputs.iter().map(|&o| self.degree_of(o)).collect()
    }

    pub fn max_degree(&self) -> u64 {
        self.output_degrees().into_iter().max().unwrap_or(0)
    }

    fn push(&mut self, node: Node, degree: u64) -> NodeId {
        self.nodes.push(node);
        self.degrees.push(degree);
        (self.nodes.len() - 1) as NodeId
    }

    fn input_degree(&self, i: &Input) -> u64 {
        match i {
            Input::Var(_) => 1,
            Input::Node(id) => self.degree_of(*id),
        }
    }

    pub fn constant(&mut self, c: FieldElement) -> NodeId {
        if c.is_zero() {
            if let Some(z) = self.zero {
                return z;
            }
            let z = self.push(Node::Constant(c), 0);
            self.zero = Some(z);
            return z;
        }
        if c.is_one() {
            if let Some(o) = self.one {
                return o;
            }
            let o = self.push(Node::Constant(c), 0);
            self.one = Some(o);
            return o;
        }
        self.push(Node::Constant(c), 0)
    }

    pub fn var(&mut self, i: usize) -> NodeId {
        assert!(i < self.n, "variable {i} out of range");
        if let Some(id) = self.var_nodes[i] {
            return id;
        }
        let id = self.push(Node::Var(i), 1);
        self.var_nodes[i] = Some(id);
        id
    }

    pub fn input(&mut self, i: Input) -> NodeId {
        match i {
            Input::Var(v) => self.var(v),
            Input::Node(id) => id,
        }
    }

    pub fn linear_form(&mut self, vars: Vec<usize>, coeffs: Vec<FieldElement>) -> NodeId {
        assert_eq!(vars.len(), coeffs.len());
        self.push(Node::LinearForm { vars, coeffs }, 1)
    }

    /// `Σ c_i · input_i`, as a linear form when every input is a variable.
    pub fn combine_inputs(&mut self, inputs: &[Input], coeffs: Vec<FieldElement>) -> NodeId {
        if inputs.iter().all(|i| matches!(i, Input::Var(_))) {
            let vars = inputs.iter().map(|i| if let Input::Var(v) = i { *v } else { unreachable!() }).collect();
            return self.linear_form(vars, coeffs);
        }
        let terms = inputs.iter().zip(coeffs).map(|(&i, c)| (c, self.input(i))).collect();
        self.sum(terms)
    }

    pub fn power(&mut self, base: NodeId, exp: u32) -> NodeId {
        if exp == 1 {
            return base;
        }
        let d = self.degree_of(base) * exp as u64;
        self.push(Node::Power { base, exp }, d)
    }

    pub fn product(&mut self, children: Vec<NodeId>) -> NodeId {
        match children.len() {
            0 => self.constant(self.field.one()),
            1 => children[0],
            _ => {
                let d = children.iter().map(|&c| self.degree_of(c)).sum();
                self.push(Node::Product(children), d)
            }
        }
    }

    pub fn sum(&mut self, terms: Vec<(FieldElement, NodeId)>) -> NodeId {
        if terms.is_empty() {
            return self.constant(self.field.zero());
        }
        if terms.len() == 1 && terms[0].0.is_one() {
            return terms[0].1;
        }
        let d = terms.iter().map(|(_, c)| self.degree_of(*c)).max().unwrap_or(0);
        self.push(Node::Sum(terms), d)
    }

    /// `1 − a`.
    pub fn one_minus(&mut self, a: NodeId) -> NodeId {
        let one = self.constant(self.field.one());
        let m = -&self.field.one();
        self.sum(vec![(self.field.one(), one), (m, a)])
    }

    pub fn add_list(&mut self, inputs: Vec<Input>) -> ListId {
        self.lists.push(inputs);
        (self.lists.len() - 1) as ListId
    }

    pub fn sym_apply(&mut self, table: Arc<SymTable>, list: ListId) -> NodeId {
        let inputs = &self.lists[list as usize];
        assert_eq!(table.arity(), inputs.len(), "table arity must match the input list");
        let inner = inputs.iter().map(|i| self.input_degree(i)).max().unwrap_or(0);
        let d = table.poly().degree() as u64 * inner;
        self.push(Node::SymApply { table, list }, d)
    }

    /// Evaluates every output at a Boolean point.
    pub fn eval(&self, x: &[bool]) -> Vec<FieldElement> {
        Evaluator::new(self).eval(x)
    }

    /// The multilinear expansion of output `k`, via all `2^n` evaluations.
    pub fn expand(&self, k: usize) -> Result<MultilinearPoly> {
        if self.n > EXPANSION_CAP {
            return Err(Error::Cap(format!("expansion of {} variables exceeds the cap {EXPANSION_CAP}", self.n)));
        }
        let mut ev = Evaluator::new(self);
        let values = (0u64..1 << self.n)
            .map(|m| {
                let x: Vec<bool> = (0..self.n).map(|i| m >> i & 1 == 1).collect();
                ev.eval(&x).swap_remove(k)
            })
            .collect();
        MultilinearPoly::from_values(self.n, self.field, values)
    }
}

/// Reusable scratch space for repeated evaluation of one DAG.
pub struct Evaluator<'a> {
    expr: &'a PolyExpr,
    values: Vec<FieldElement>,
    weights: Vec<Option<Option<usize>>>,
    scratch: Vec<FieldElement>,
}

impl<'a> Evaluator<'a> {
    pub fn new(expr: &'a PolyExpr) -> Self {
        Evaluator {
            expr,
            values: Vec::with_capacity(expr.nodes.len()),
            weights: vec![None; expr.lists.len()],
            scratch: Vec::new(),
        }
    }

    fn input_value(&self, i: &Input, x: &[bool]) -> FieldElement {
        match i {
            Input::Var(v) => self.expr.field.from_bool(x[*v]),
            Input::Node(id) => self.values[*id as usize].clone(),
        }
    }

    /// Weight of a list when all its inputs are Boolean; memoized per evaluation.
    fn list_weight(&mut self, list: ListId, x: &[bool]) -> Option<usize> {
        if let Some(w) = self.weights[list as usize] {
            return w;
        }
        let mut w = Some(0usize);
        for i in &self.expr.lists[list as usize] {
            let bit = match i {
                Input::Var(v) => Some(x[*v]),
                Input::Node(id) => self.values[*id as usize].as_bool(),
            };
            match bit {
                Some(b) => w = w.map(|w| w + b as usize),
                None => {
                    w = None;
                    break;
                }
            }
        }
        self.weights[list as usize] = Some(w);
        w
    }

    pub fn eval(&mut self, x: &[bool]) -> Vec<FieldElement> {
        assert_eq!(x.len(), self.expr.n, "point has the wrong length");
        let f = self.expr.field;
        self.values.clear();
        self.weights.iter_mut().for_each(|w| *w = None);
        for node in &self.expr.nodes {
            let v = match node {
                Node::Constant(c) => c.clone(),
                Node::Var(i) => f.from_bool(x[*i]),
                Node::LinearForm { vars, coeffs } => {
                    let mut acc = f.zero();
                    for (v, c) in vars.iter().zip(coeffs) {
                        if x[*v] {
                            acc = acc + c;
                        }
                    }
                    acc
                }
                Node::Power { base, exp } => self.values[*base as usize].pow(*exp),
                Node::Product(cs) => {
                    let mut acc = f.one();
                    for c in cs {
                        let v = &self.values[*c as usize];
                        if v.is_zero() {
                            acc = f.zero();
                            break;
                        }
                        acc = acc * v;
                    }
                    acc
                }
                Node::Sum(ts) => {
                    let mut acc = f.zero();
                    for (c, id) in ts {
                        let v = &self.values[*id as usize];
                        if !v.is_zero() {
                            acc = acc + c * v;
                        }
                    }
                    acc
                }
                Node::SymApply { table, list } => {
                    let list = *list;
                    match self.list_weight(list, x) {
                        Some(w) => table.at(w).clone(),
                        None => {
                            let inputs: Vec<FieldElement> =
                                self.expr.lists[list as usize].iter().map(|i| self.input_value(i, x)).collect();
                            self.scratch = inputs;
                            table.poly().eval_general(&self.scratch)
                        }
                    }
                }
            };
            self.values.push(v);
        }
        self.expr.outputs.iter().map(|&o| self.values[o as usize].clone()).collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum NodeWire {
    Constant { value: String },
    Var { index: usize },
    LinearForm { vars: Vec<usize>, coeffs: Vec<String> },
    Power { base: NodeId, exp: u32 },
    Product { children: Vec<NodeId> },
    Sum { terms: Vec<(String, NodeId)> },
    SymApply { poly: SymPoly, list: ListId },
}

#[derive(Serialize, Deserialize)]
struct NodeEntry {
    id: NodeId,
    degree: u64,
    #[serde(flatten)]
    node: NodeWire,
}

#[derive(Serialize, Deserialize)]
struct ExprWire {
    char: u32,
    n: usize,
    lists: Vec<Vec<Input>>,
    nodes: Vec<NodeEntry>,
    outputs: Vec<NodeId>,
}

impl Serialize for PolyExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs = |v: &[FieldElement]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>();
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, node)| NodeEntry {
                id: id as NodeId,
                degree: self.degrees[id],
                node: match node {
                    Node::Constant(c) => NodeWire::Constant { value: c.to_string() },
                    Node::Var(i) => NodeWire::Var { index: *i },
                    Node::LinearForm { vars, coeffs } => NodeWire::LinearForm { vars: vars.clone(), coeffs: strs(coeffs) },
                    Node::Power { base, exp } => NodeWire::Power { base: *base, exp: *exp },
                    Node::Product(cs) => NodeWire::Product { children: cs.clone() },
                    Node::Sum(ts) => NodeWire::Sum { terms: ts.iter().map(|(c, id)| (c.to_string(), *id)).collect() },
                    Node::SymApply { table, list } => NodeWire::SymApply { poly: table.poly().clone(), list: *list },
                },
            })
            .collect();
        ExprWire { char: self.field.characteristic(), n: self.n, lists: self.lists.clone(), nodes, outputs: self.outputs.clone() }
            .serialize(s)
    }
}

impl PolyExpr {
    fn from_wire(w: ExprWire) -> Result<Self> {
        let field = FieldSpec::new(w.char)?;
        let mut e = PolyExpr::builder(field, w.n);
        e.lists = w.lists;
        let bad = |m: String| Error::Malformed(m);
        let parse = |s: &str| field.parse_element(s);
        for (pos, entry) in w.nodes.into_iter().enumerate() {
            if entry.id as usize != pos {
                return Err(bad(format!("node ids must be consecutive, found {} at {pos}", entry.id)));
            }
            let earlier = |id: NodeId| if (id as usize) < pos { Ok(id) } else { Err(bad(format!("node {pos} refers forward to {id}"))) };
            let (node, degree) = match entry.node {
                NodeWire::Constant { value } => (Node::Constant(parse(&value)?), 0),
                NodeWire::Var { index } => {
                    if index >= w.n {
                        return Err(bad(format!("variable {index} out of range")));
                    }
                    e.var_nodes[index].get_or_insert(pos as NodeId);
                    (Node::Var(index), 1)
                }
                NodeWire::LinearForm { vars, coeffs } => {
                    if vars.len() != coeffs.len() || vars.iter().any(|&v| v >= w.n) {
                        return Err(bad("malformed linear form".into()));
                    }
                    let coeffs = coeffs.iter().map(|c| parse(c)).collect::<Result<_>>()?;
                    (Node::LinearForm { vars, coeffs }, 1)
                }
                NodeWire::Power { base, exp } => {
                    let base = earlier(base)?;
                    (Node::Power { base, exp }, e.degree_of(base) * exp as u64)
                }
                NodeWire::Product { children } => {
                    let cs = children.into_iter().map(earlier).collect::<Result<Vec<_>>>()?;
                    let d = cs.iter().map(|&c| e.degree_of(c)).sum();
                    (Node::Product(cs), d)
                }
                NodeWire::Sum { terms } => {
                    let ts = terms.into_iter().map(|(c, id)| Ok((parse(&c)?, earlier(id)?))).collect::<Result<Vec<_>>>()?;
                    let d = ts.iter().map(|(_, c)| e.degree_of(*c)).max().unwrap_or(0);
                    (Node::Sum(ts), d)
                }
                NodeWire::SymApply { poly, list } => {
                    let inputs = e.lists.get(list as usize).ok_or_else(|| bad(format!("unknown list {list}")))?;
                    for i in inputs {
                        match *i {
                            Input::Node(id) => {
                                earlier(id)?;
                            }
                            Input::Var(v) if v >= w.n => return Err(bad(format!("variable {v} out of range"))),
                            Input::Var(_) => {}
                        }
                    }
                    let inner = inputs.iter().map(|i| e.input_degree(i)).max().unwrap_or(0);
                    let d = poly.degree() as u64 * inner;
                    let arity = inputs.len();
                    (Node::SymApply { table: Arc::new(SymTable::new(poly, arity)), list }, d)
                }
            };
            if degree != entry.degree {
                return Err(bad(format!("node {pos} declares degree {} but tracks {degree}", entry.degree)));
            }
            if let Node::Constant(c) = &node {
                if c.is_zero() {
                    e.zero.get_or_insert(pos as NodeId);
                } else if c.is_one() {
                    e.one.get_or_insert(pos as NodeId);
                }
            }
            e.push(node, degree);
        }
        if w.outputs.iter().any(|&o| o as usize >= e.nodes.len()) {
            return Err(bad("output refers to a missing node".into()));
        }
        e.outputs = w.outputs;
        Ok(e)
    }
}

impl<'de> Deserialize<'de> for PolyExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        PolyExpr::from_wire(ExprWire::deserialize(d)?).map_err(D::Error::custom)
    }
}
