//! Symmetric polynomials in the elementary-symmetric basis, and multilinear expansions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{range, Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::symfun::{period, Spectrum};

/// Default cap on the number of variables for multilinear expansion.
pub const EXPANSION_CAP: usize = 16;

fn small_binom_mod(a: u64, b: u64, p: u64) -> u64 {
    if b > a {
        return 0;
    }
    let (mut num, mut den) = (1u64, 1u64);
    for i in 0..b {
        num = num * ((a - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    let mut inv = 1u64;
    let (mut base, mut e) = (den, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            inv = inv * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    num * inv % p
}

/// `C(w, k)` in the field; Lucas' theorem in characteristic `p`.
pub fn binomial_in_field(w: u64, k: u64, field: FieldSpec) -> FieldElement {
    let p = field.characteristic() as u64;
    if p == 0 {
        return field.from_bigint(&big_binomial(w, k));
    }
    let (mut w, mut k, mut acc) = (w, k, 1u64);
    while k > 0 || w > 0 {
        let (wd, kd) = (w % p, k % p);
        if kd > wd {
            return field.zero();
        }
        acc = acc * small_binom_mod(wd, kd, p) % p;
        w /= p;
        k /= p;
    }
    field.from_i64(acc as i64)
}

pub(crate) fn big_binomial(w: u64, k: u64) -> BigInt {
    if k > w {
        return BigInt::zero();
    }
    num_integer::binomial(BigInt::from(w), BigInt::from(k.min(w - k)))
}

/// Integers in characteristic 0, residues mod p otherwise; all a difference table needs.
#[derive(Clone, Debug, PartialEq)]
enum Num {
    Int(BigInt),
    Res(u64, u64),
}

impl Num {
    fn of_bit(b: bool, field: FieldSpec) -> Num {
        match field.characteristic() {
            0 => Num::Int(BigInt::from(b as u8)),
            p => Num::Res(b as u64, p as u64),
        }
    }

    fn of_element(c: &FieldElement) -> Option<Num> {
        match c {
            FieldElement::Mod { value, p } => Some(Num::Res(*value as u64, *p as u64)),
            FieldElement::Rational(q) => q.is_integer().then(|| Num::Int(q.numer().clone())),
        }
    }

    fn sub_assign(&mut self, other: &Num) {
        match (self, other) {
            (Num::Int(a), Num::Int(b)) => *a -= b,
            (Num::Res(a, p), Num::Res(b, _)) => *a = (*a + *p - *b) % *p,
            _ => unreachable!("mixed characteristics"),
        }
    }

    fn add_assign(&mut self, other: &Num) {
        match (self, other) {
            (Num::Int(a), Num::Int(b)) => *a += b,
            (Num::Res(a, p), Num::Res(b, _)) => *a = (*a + *b) % *p,
            _ => unreachable!("mixed characteristics"),
        }
    }

    fn into_element(self, field: FieldSpec) -> FieldElement {
        match self {
            Num::Int(v) => field.from_bigint(&v),
            Num::Res(v, _) => field.from_i64(v as i64),
        }
    }
}

/// In place: `v[k] ← Δ^k v(0)`.
fn forward_differences(v: &mut [Num]) {
    for k in 1..v.len() {
        for i in (k..v.len()).rev() {
            let prev = v[i - 1].clone();
            v[i].sub_assign(&prev);
        }
    }
}

/// Newton coefficients at 0 of the spectrum restricted to `[0, top]`.
fn newton_at_zero(f: &Spectrum, top: usize, field: FieldSpec) -> SymPoly {
    let mut v: Vec<Num> = (0..=top).map(|w| Num::of_bit(f.at(w), field)).collect();
    forward_differences(&mut v);
    SymPoly::new(field, v.into_iter().map(|x| x.into_element(field)).collect()).expect("same field")
}

/// `Σ_k c_k e_k` over a field; on Boolean points `e_k(x) = C(|x|, k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymPoly {
    field: FieldSpec,
    coeffs: Vec<FieldElement>,
}

impl SymPoly {
    pub fn new(field: FieldSpec, mut coeffs: Vec<FieldElement>) -> Result<Self> {
        if let Some(bad) = coeffs.iter().find(|c| c.field() != field) {
            return Err(Error::Malformed(format!("coefficient {bad} is not in {field}")));
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(field.zero());
        }
        Ok(SymPoly { field, coeffs })
    }

    pub fn from_i64(field: FieldSpec, coeffs: &[i64]) -> Self {
        SymPoly::new(field, coeffs.iter().map(|&c| field.from_i64(c)).collect()).expect("same field")
    }

    pub fn constant(field: FieldSpec, c: FieldElement) -> Self {
        SymPoly::new(field, vec![c]).expect("same field")
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Largest `k` with `c_k ≠ 0`; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Value at Hamming weight `w`.
    pub fn eval(&self, w: u64) -> FieldElement {
        let mut acc = self.field.zero();
        for (k, c) in self.coeffs.iter().enumerate() {
            if k as u64 > w {
                break;
            }
            if !c.is_zero() {
                acc = acc + c * &binomial_in_field(w, k as u64, self.field);
            }
        }
        acc
    }

    /// Values at weights `0..=n`.
    pub fn values_up_to(&self, n: usize) -> Vec<FieldElement> {
        // The e-basis coefficients are the forward differences at 0; step the diagonal forward.
        let d = self.degree().min(n);
        let mut out = Vec::with_capacity(n + 1);
        if let Some(mut diag) = self.coeffs[..=d].iter().map(Num::of_element).collect::<Option<Vec<Num>>>() {
            for _ in 0..=n {
                out.push(diag[0].clone().into_element(self.field));
                for j in 0..diag.len() - 1 {
                    let next = diag[j + 1].clone();
                    diag[j].add_assign(&next);
                }
            }
            return out;
        }
        let mut diag: Vec<FieldElement> = self.coeffs[..=d].to_vec();
        for _ in 0..=n {
            out.push(diag[0].clone());
            for j in 0..diag.len() - 1 {
                diag[j] = &diag[j] + &diag[j + 1];
            }
        }
        out
    }

    /// Value on arbitrary (not necessarily Boolean) inputs via the elementary symmetric recurrence.
    pub fn eval_general(&self, inputs: &[FieldElement]) -> FieldElement {
        let d = self.degree();
        let mut e = vec![self.field.zero(); d + 1];
        e[0] = self.field.one();
        for x in inputs {
            for k in (1..=d).rev() {
                let t = &e[k - 1] * x;
                e[k] = &e[k] + &t;
            }
        }
        let mut acc = self.field.zero();
        for (c, ek) in self.coeffs.iter().zip(&e) {
            acc = acc + c * ek;
        }
        acc
    }
}

#[derive(Serialize, Deserialize)]
struct SymPolyWire {
    char: u32,
    coeffs: Vec<String>,
}

impl Serialize for SymPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymPolyWire { char: self.field.characteristic(), coeffs: self.coeffs.iter().map(|c| c.to_string()).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = SymPolyWire::deserialize(d)?;
        let field = FieldSpec::new(w.char).map_err(D::Error::custom)?;
        let coeffs = w.coeffs.iter().map(|c| field.parse_element(c)).collect::<Result<Vec<_>>>().map_err(D::Error::custom)?;
        SymPoly::new(field, coeffs).map_err(D::Error::custom)
    }
}

/// A symmetric polynomial together with its values at every weight up to a fixed arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymTable {
    poly: SymPoly,
    values: Vec<FieldElement>,
}

impl SymTable {
    pub fn new(poly: SymPoly, arity: usize) -> Self {
        let values = poly.values_up_to(arity);
        SymTable { poly, values }
    }

    pub fn poly(&self) -> &SymPoly {
        &self.poly
    }

    pub fn arity(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, w: usize) -> &FieldElement {
        &self.values[w]
    }
}

/// The symmetric polynomial of degree ≤ n agreeing with `f` at every weight.
pub fn exact_sympoly(f: &Spectrum, field: FieldSpec) -> SymPoly {
    newton_at_zero(f, f.n(), field)
}

/// A polynomial of degree ≤ b − a agreeing with `f` on `[a, b]`, built over the integers first.
pub fn interpolate_window(f: &Spectrum, a: usize, b: usize, field: FieldSpec) -> Result<SymPoly> {
    if a > b || b > f.n() {
        return range(format!("window [{a},{b}] not inside [0,{}]", f.n()));
    }
    // Differences at a, then walk the diagonal back to 0: D_j(w−1) = D_j(w) − D_{j+1}(w−1).
    let mut d: Vec<Num> = (a..=b).map(|w| Num::of_bit(f.at(w), field)).collect();
    forward_differences(&mut d);
    for _ in 0..a {
        for j in (0..d.len() - 1).rev() {
            let next = d[j + 1].clone();
            d[j].sub_assign(&next);
        }
    }
    SymPoly::new(field, d.into_iter().map(|x| x.into_element(field)).collect())
}

/// The exact representation of a `p^t`-periodic spectrum with degree ≤ `p^t − 1`.
pub fn periodic_exact(g: &Spectrum, field: FieldSpec) -> Result<SymPoly> {
    let b = period(g);
    if field.char_power_exponent(b).is_none() {
        return Err(Error::NotCharPower { period: b, p: field.characteristic() });
    }
    Ok(newton_at_zero(g, (b - 1).min(g.n()), field))
}

/// `Σ_k c_k C(w,k)` in the field.
pub fn eval_sympoly(p: &SymPoly, w: u64) -> FieldElement {
    p.eval(w)
}

/// A multilinear polynomial stored sparsely by sorted variable subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilinearPoly {
    n: usize,
    field: FieldSpec,
    terms: BTreeMap<Vec<usize>, FieldElement>,
}

impl MultilinearPoly {
    pub fn new(n: usize, field: FieldSpec, terms: BTreeMap<Vec<usize>, FieldElement>) -> Result<Self> {
        let mut clean = BTreeMap::new();
        for (mut s, c) in terms {
            s.sort_unstable();
            s.dedup();
            if s.last().is_some_and(|&i| i >= n) {
                return range(format!("variable index outside [0,{n})"));
            }
            if !c.is_zero() {
                clean.insert(s, c);
            }
        }
        Ok(MultilinearPoly { n, field, terms: clean })
    }

    /// Möbius interpolation from the values at all `2^n` points (bit `i` of the index is `x_i`).
    pub fn from_values(n: usize, field: FieldSpec, mut values: Vec<FieldElement>) -> Result<Self> {
        if values.len() != 1 << n {
            return Err(Error::Arity { expected: 1 << n, found: values.len() });
        }
        for i in 0..n {
            for m in 0..values.len() {
                if m >> i & 1 == 1 {
                    let lower = values[m ^ (1 << i)].clone();
                    values[m] = &values[m] - &lower;
                }
            }
        }
        let terms = values
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| ((0..n).filter(|i| m >> i & 1 == 1).collect(), c))
            .collect();
        Ok(MultilinearPoly { n, field, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, FieldElement> {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[bool]) -> FieldElement {
        let mut acc = self.field.zero();
        for (s, c) in &self.terms {
            if s.iter().all(|&i| x[i]) {
                acc = acc + c;
            }
        }
        acc
    }
}

#[derive(Serialize, Deserialize)]
struct MultilinearWire {
    n: usize,
    char: u32,
    terms: BTreeMap<String, String>,
}

fn subset_key(s: &[usize]) -> String {
    s.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl Serialize for MultilinearPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MultilinearWire {
            n: self.n,
            char: self.field.characteristic(),
            terms: self.terms.iter().map(|(k, v)| (subset_key(k), v.to_string())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultilinearPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = MultilinearWire::deserialize(d)?;
        let field = FieldSpec::new(w.char).map_err(D::Error::custom)?;
        let mut terms = BTreeMap::new();
        for (k, v) in &w.terms {
            let s: Vec<usize> = if k.is_empty() {
                vec![]
            } else {
                k.split(',').map(|i| i.trim().parse().map_err(D::Error::custom)).collect::<std::result::Result<_, _>>()?
            };
            terms.insert(s, field.parse_element(v).map_err(D::Error::custom)?);
        }
        MultilinearPoly::new(w.n, field, terms).map_err(D::Error::custom)
    }
}

/// The multilinear polynomial agreeing with `p` on `{0,1}^n`, for `n ≤ EXPANSION_CAP`.
pub fn expand_multilinear(p: &SymPoly, n: usize) -> Result<MultilinearPoly> {
    expand_multilinear_capped(p, n, EXPANSION_CAP)
}

pub fn expand_multilinear_capped(p: &SymPoly, n: usize, cap: usize) -> Result<MultilinearPoly> {
    if n > cap {
        return Err(Error::Cap(format!("expansion of {n} variables exceeds the cap {cap}")));
    }
    let mut terms = BTreeMap::new();
    for m in 0u64..1 << n {
        let k = m.count_ones() as usize;
        if k < p.coeffs().len() && !p.coeffs()[k].is_zero() {
            terms.insert((0..n).filter(|i| m >> i & 1 == 1).collect(), p.coeffs()[k].clone());
        }
    }
    MultilinearPoly::new(n, p.field(), terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::{named_spectrum, NamedKind};
    use proptest::prelude::*;

    fn fp(p: u32) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn q() -> FieldSpec {
        FieldSpec::rationals()
    }

    fn strings(p: &SymPoly) -> Vec<String> {
        p.coeffs().iter().map(|c| c.to_string()).collect()
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_in_field(4, 2, fp(2)), fp(2).zero());
        assert_eq!(binomial_in_field(9, 0, fp(3)), fp(3).one());
        assert_eq!(binomial_in_field(5, 2, q()).to_string(), "10");
        assert_eq!(binomial_in_field(2, 5, q()), q().zero());
    }

    #[test]
    fn binomial_matches_integer_reduction() {
        for p in [2u32, 3, 5, 7] {
            for w in 0..=64u64 {
                for k in 0..=64u64 {
                    let expect = fp(p).from_bigint(&big_binomial(w, k));
                    assert_eq!(binomial_in_field(w, k, fp(p)), expect, "C({w},{k}) mod {p}");
                }
            }
        }
    }

    #[test]
    fn exact_sympoly_examples() {
        let or2: Spectrum = "011".parse().unwrap();
        assert_eq!(strings(&exact_sympoly(&or2, q())), ["0", "1", "-1"]);
        assert_eq!(strings(&exact_sympoly(&"1111".parse().unwrap(), q())), ["1"]);
        assert_eq!(strings(&exact_sympoly(&"101".parse().unwrap(), q())), ["1", "-1", "2"]);
    }

    #[test]
    fn exact_sympoly_agrees_everywhere() {
        for field in [q(), fp(2), fp(3), fp(5)] {
            for n in 0..=8 {
                for f in Spectrum::all(n) {
                    let p = exact_sympoly(&f, field);
                    assert!(p.degree() <= n);
                    for (w, v) in p.values_up_to(n).iter().enumerate() {
                        assert_eq!(*v, field.from_bool(f.at(w)));
                        assert_eq!(*v, p.eval(w as u64));
                    }
                }
            }
        }
    }

    #[test]
    fn interpolate_window_examples() {
        let or = named_spectrum(NamedKind::Or, 4).unwrap();
        assert_eq!(strings(&interpolate_window(&or, 0, 2, q()).unwrap()), ["0", "1", "-1"]);
        let s: Spectrum = "0110".parse().unwrap();
        let p = interpolate_window(&s, 2, 2, q()).unwrap();
        assert_eq!((p.degree(), strings(&p)), (0, vec!["1".to_string()]));
        let thr = named_spectrum(NamedKind::Thr(2), 5).unwrap();
        let p = interpolate_window(&thr, 1, 3, q()).unwrap();
        assert!(p.degree() <= 2);
        assert_eq!([1, 2, 3].map(|w| p.eval(w).to_string()), ["0", "1", "1"]);
        assert!(interpolate_window(&thr, 3, 6, q()).is_err());
    }

    #[test]
    fn interpolate_window_round_trip_exhaustive() {
        for field in [q(), fp(2), fp(3)] {
            for n in 0..=10 {
                for f in Spectrum::all(n) {
                    for a in 0..=n {
                        for b in a..=n {
                            let p = interpolate_window(&f, a, b, field).unwrap();
                            assert!(p.degree() <= b - a);
                            for w in a..=b {
                                assert_eq!(p.eval(w as u64), field.from_bool(f.at(w)));
                            }
                        }
                    }
                }
                if n >= 8 && field != q() {
                    break;
                }
            }
        }
    }

    #[test]
    fn periodic_exact_examples() {
        let parity = named_spectrum(NamedKind::Mod(2, 0), 6).unwrap();
        assert_eq!(strings(&periodic_exact(&parity, fp(2)).unwrap()), ["1", "1"]);
        let c: Spectrum = "11111".parse().unwrap();
        assert_eq!(periodic_exact(&c, fp(3)).unwrap().degree(), 0);
        let g: Spectrum = "100100100".parse().unwrap();
        let p = periodic_exact(&g, fp(3)).unwrap();
        assert!(p.degree() <= 2);
        for w in 0..=8 {
            assert_eq!(p.eval(w), fp(3).from_bool(g.at(w as usize)));
        }
        assert_eq!(periodic_exact(&g, fp(2)), Err(Error::NotCharPower { period: 3, p: 2 }));
    }

    #[test]
    fn eval_examples() {
        let p = SymPoly::from_i64(q(), &[0, 1, -1]);
        assert_eq!(eval_sympoly(&p, 2).to_string(), "1");
        let r = SymPoly::from_i64(fp(7), &[4, 2, 3]);
        assert_eq!(eval_sympoly(&r, 0).to_string(), "4");
        assert_eq!(eval_sympoly(&SymPoly::from_i64(fp(2), &[1, 1]), 3), fp(2).zero());
    }

    #[test]
    fn zero_polynomial_has_degree_zero() {
        assert_eq!(SymPoly::from_i64(fp(3), &[0, 3, 6]).degree(), 0);
    }

    #[test]
    fn expansion_examples() {
        let e1 = expand_multilinear(&SymPoly::from_i64(q(), &[0, 1]), 3).unwrap();
        assert_eq!(e1.terms().keys().cloned().collect::<Vec<_>>(), vec![vec![0], vec![1], vec![2]]);
        let e2 = expand_multilinear(&SymPoly::from_i64(q(), &[0, 0, 1]), 3).unwrap();
        assert_eq!(e2.terms().keys().cloned().collect::<Vec<_>>(), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        let thr = exact_sympoly(&named_spectrum(NamedKind::Thr(2), 3).unwrap(), q());
        let m = expand_multilinear(&thr, 3).unwrap();
        let shown: Vec<(Vec<usize>, String)> = m.terms().iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
        assert_eq!(
            shown,
            vec![
                (vec![0, 1], "1".into()),
                (vec![0, 1, 2], "-2".into()),
                (vec![0, 2], "1".into()),
                (vec![1, 2], "1".into())
            ]
        );
        // Möbius interpolation of the truth table gives the same polynomial.
        let vals = (0..8u32).map(|m| q().from_bool(m.count_ones() >= 2)).collect();
        assert_eq!(MultilinearPoly::from_values(3, q(), vals).unwrap(), m);
        assert!(matches!(expand_multilinear(&thr, 17), Err(Error::Cap(_))));
    }

    #[test]
    fn expansion_reproduces_spectrum() {
        for field in [q(), fp(2), fp(3)] {
            for n in 0..=10 {
                for f in Spectrum::all(n).step_by(if n > 7 { 37 } else { 1 }) {
                    let p = exact_sympoly(&f, field);
                    let m = expand_multilinear(&p, n).unwrap();
                    assert_eq!(m.degree(), p.degree().min(n));
                    for x in 0u32..1 << n {
                        let pt: Vec<bool> = (0..n).map(|i| x >> i & 1 == 1).collect();
                        assert_eq!(m.eval(&pt), field.from_bool(f.at(x.count_ones() as usize)));
                    }
                }
            }
        }
    }

    #[test]
    fn serialization_round_trips() {
        let p = SymPoly::from_i64(q(), &[0, 1, -1]);
        let j = serde_json::to_value(&p).unwrap();
        assert_eq!(j, serde_json::json!({"char": 0, "coeffs": ["0", "1", "-1"]}));
        assert_eq!(serde_json::from_value::<SymPoly>(j).unwrap(), p);
        let m = expand_multilinear(&exact_sympoly(&"0011".parse().unwrap(), fp(5)), 3).unwrap();
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<MultilinearPoly>(&j).unwrap(), m);
    }

    proptest! {
        #[test]
        fn general_eval_matches_weight_eval(
            coeffs in proptest::collection::vec(-5i64..5, 1..6),
            x in proptest::collection::vec(any::<bool>(), 0..9),
        ) {
            for field in [q(), fp(3)] {
                let p = SymPoly::from_i64(field, &coeffs);
                let inputs: Vec<_> = x.iter().map(|&b| field.from_bool(b)).collect();
                let w = x.iter().filter(|&&b| b).count() as u64;
                prop_assert_eq!(p.eval_general(&inputs), p.eval(w));
            }
        }
    }
}
