//! Prime fields, exact rationals, and exact probabilities.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A field given by its characteristic: 0 (the rationals) or a prime `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct FieldSpec {
    p: u32,
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl TryFrom<u32> for FieldSpec {
    type Error = Error;
    fn try_from(c: u32) -> Result<Self> {
        FieldSpec::new(c)
    }
}

impl From<FieldSpec> for u32 {
    fn from(f: FieldSpec) -> u32 {
        f.p
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p == 0 {
            write!(f, "Q")
        } else {
            write!(f, "F_{}", self.p)
        }
    }
}

impl FieldSpec {
    pub fn new(characteristic: u32) -> Result<Self> {
        if characteristic == 0 || is_prime(characteristic) {
            Ok(FieldSpec { p: characteristic })
        } else {
            Err(Error::BadCharacteristic(characteristic as u64))
        }
    }

    pub fn rationals() -> Self {
        FieldSpec { p: 0 }
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn is_char_zero(&self) -> bool {
        self.p == 0
    }

    pub fn zero(&self) -> FieldElement {
        self.from_i64(0)
    }

    pub fn one(&self) -> FieldElement {
        self.from_i64(1)
    }

    pub fn from_bool(&self, b: bool) -> FieldElement {
        self.from_i64(b as i64)
    }

    pub fn from_i64(&self, v: i64) -> FieldElement {
        if self.p == 0 {
            FieldElement::Rational(BigRational::from_integer(BigInt::from(v)))
        } else {
            let p = self.p as i64;
            FieldElement::Mod { value: v.rem_euclid(p) as u32, p: self.p }
        }
    }

    pub fn from_bigint(&self, v: &BigInt) -> FieldElement {
        if self.p == 0 {
            FieldElement::Rational(BigRational::from_integer(v.clone()))
        } else {
            let r = v.mod_floor(&BigInt::from(self.p));
            FieldElement::Mod { value: r.to_u32().expect("residue fits"), p: self.p }
        }
    }

    /// Reduces a rational into the field; fails when the denominator vanishes mod p.
    pub fn from_rational(&self, v: &BigRational) -> Result<FieldElement> {
        if self.p == 0 {
            return Ok(FieldElement::Rational(v.clone()));
        }
        let num = self.from_bigint(v.numer());
        let den = self.from_bigint(v.denom());
        match den.inv() {
            Some(d) => Ok(&num * &d),
            None => Err(Error::Malformed(format!("{v} has no image in {self}"))),
        }
    }

    /// Parses a canonical string (`"3"`, `"-1/2"`) into this field.
    pub fn parse_element(&self, s: &str) -> Result<FieldElement> {
        let bad = || Error::Malformed(format!("field element {s:?}"));
        let s = s.trim();
        let q: BigRational = if let Some((a, b)) = s.split_once('/') {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            BigRational::new(a, b)
        } else {
            BigRational::from_integer(s.parse().map_err(|_| bad())?)
        };
        self.from_rational(&q)
    }

    /// Returns `Some(t)` when `b = p^t` (with `b = 1` counted as `p^0`).
    /// In characteristic 0 only `b = 1` qualifies.
    pub fn char_power_exponent(&self, b: usize) -> Option<u32> {
        if b == 1 {
            return Some(0);
        }
        if self.p == 0 || b == 0 {
            return None;
        }
        let (mut b, mut t) = (b, 0u32);
        while b % self.p as usize == 0 {
            b /= self.p as usize;
            t += 1;
        }
        (b == 1).then_some(t)
    }
}

/// An element of a [`FieldSpec`]: a canonical residue or a reduced rational.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FieldElement {
    Mod { value: u32, p: u32 },
    Rational(BigRational),
}

impl FieldElement {
    pub fn field(&self) -> FieldSpec {
        match self {
            FieldElement::Mod { p, .. } => FieldSpec { p: *p },
            FieldElement::Rational(_) => FieldSpec { p: 0 },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldElement::Mod { value, .. } => *value == 0,
            FieldElement::Rational(q) => q.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            FieldElement::Mod { value, .. } => *value == 1,
            FieldElement::Rational(q) => q.is_one(),
        }
    }

    /// `Some(b)` when the element is 0 or 1.
    pub fn as_bool(&self) -> Option<bool> {
        if self.is_zero() {
            Some(false)
        } else if self.is_one() {
            Some(true)
        } else {
            None
        }
    }

    pub fn inv(&self) -> Option<FieldElement> {
        match self {
            FieldElement::Mod { value, p } => {
                if *value == 0 {
                    None
                } else {
                    Some(FieldElement::Mod { value: pow_mod(*value, *p - 2, *p), p: *p })
                }
            }
            FieldElement::Rational(q) => (!q.is_zero()).then(|| FieldElement::Rational(q.recip())),
        }
    }

    pub fn pow(&self, e: u32) -> FieldElement {
        match self {
            FieldElement::Mod { value, p } => FieldElement::Mod { value: pow_mod(*value, e, *p), p: *p },
            FieldElement::Rational(q) => FieldElement::Rational(num_traits::pow(q.clone(), e as usize)),
        }
    }

    /// `1 - self`.
    pub fn one_minus(&self) -> FieldElement {
        &self.field().one() - self
    }
}

fn pow_mod(b: u32, mut e: u32, p: u32) -> u32 {
    let (mut acc, p64) = (1u64 % p as u64, p as u64);
    let mut base = b as u64 % p64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p64;
        }
        base = base * base % p64;
        e >>= 1;
    }
    acc as u32
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElement::Mod { value, .. } => write!(f, "{value}"),
            FieldElement::Rational(q) => {
                if q.denom().is_one() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
        }
    }
}

fn mismatch(a: &FieldElement, b: &FieldElement) -> ! {
    panic!("field mismatch: {} vs {}", a.field(), b.field())
}

impl Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        match (self, rhs) {
            (FieldElement::Mod { value: a, p }, FieldElement::Mod { value: b, p: q }) if p == q => {
                FieldElement::Mod { value: ((*a as u64 + *b as u64) % *p as u64) as u32, p: *p }
            }
            (FieldElement::Rational(a), FieldElement::Rational(b)) => FieldElement::Rational(a + b),
            _ => mismatch(self, rhs),
        }
    }
}

impl Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        match (self, rhs) {
            (FieldElement::Mod { value: a, p }, FieldElement::Mod { value: b, p: q }) if p == q => {
                FieldElement::Mod { value: ((*a as u64 + *p as u64 - *b as u64) % *p as u64) as u32, p: *p }
            }
            (FieldElement::Rational(a), FieldElement::Rational(b)) => FieldElement::Rational(a - b),
            _ => mismatch(self, rhs),
        }
    }
}

impl Mul for &FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &FieldElement) -> FieldElement {
        match (self, rhs) {
            (FieldElement::Mod { value: a, p }, FieldElement::Mod { value: b, p: q }) if p == q => {
                FieldElement::Mod { value: ((*a as u64 * *b as u64) % *p as u64) as u32, p: *p }
            }
            (FieldElement::Rational(a), FieldElement::Rational(b)) => FieldElement::Rational(a * b),
            _ => mismatch(self, rhs),
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        match self {
            FieldElement::Mod { value, p } => FieldElement::Mod { value: (*p - *value) % *p, p: *p },
            FieldElement::Rational(q) => FieldElement::Rational(-q),
        }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement { (&self).$m(&rhs) }
        }
        impl $tr<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: &FieldElement) -> FieldElement { (&self).$m(rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

/// `log2` of a positive big integer, accurate to double precision.
pub fn big_log2(v: &BigInt) -> f64 {
    assert!(v.sign() == Sign::Plus, "log of non-positive value");
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap().log2();
    }
    let shift = bits - 60;
    let top = (v >> shift).to_f64().unwrap();
    top.log2() + shift as f64
}

/// An exact probability in `[0, 1]`, written as `"a/b"` or `"2^-k"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Prob(BigRational);

impl Prob {
    pub fn new(q: BigRational) -> Result<Self> {
        if q.is_negative() || q > BigRational::one() {
            return Err(Error::Range(format!("probability {q} outside [0,1]")));
        }
        Ok(Prob(q))
    }

    pub fn ratio(num: u64, den: u64) -> Self {
        Prob::new(BigRational::new(num.into(), den.into())).expect("valid ratio")
    }

    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Prob(BigRational::new(BigInt::one(), BigInt::one() << k))
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        (big_log2(self.0.numer()) - big_log2(self.0.denom())).exp2()
    }

    /// `log2(1/p)` as a real number; infinite for zero.
    pub fn log2_inv(&self) -> f64 {
        if self.0.is_zero() {
            return f64::INFINITY;
        }
        big_log2(self.0.denom()) - big_log2(self.0.numer())
    }

    /// Smallest `k ≥ 0` with `2^k · p ≥ 1`, i.e. `⌈log2(1/p)⌉`.
    pub fn ceil_log2_inv(&self) -> u32 {
        assert!(!self.0.is_zero(), "ceil_log2_inv of zero");
        let (n, d) = (self.0.numer(), self.0.denom());
        let mut k = (d.bits() as i64 - n.bits() as i64 - 1).max(0) as u32;
        while (n << k) < *d {
            k += 1;
        }
        k
    }

    pub fn div_int(&self, k: u64) -> Prob {
        Prob(&self.0 / BigRational::from_integer(k.into()))
    }

    pub fn add(&self, other: &Prob) -> Prob {
        Prob((&self.0 + &other.0).min(BigRational::one()))
    }

    pub fn min(&self, other: &Prob) -> Prob {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.0.numer(), self.0.denom());
        if n.is_one() && d.bits() > 16 && (d - BigInt::one()).bits() < d.bits() {
            write!(f, "2^-{}", d.bits() - 1)
        } else if d.is_one() {
            write!(f, "{n}")
        } else {
            write!(f, "{n}/{d}")
        }
    }
}

impl std::str::FromStr for Prob {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Malformed(format!("probability {s:?}"));
        let s = s.trim();
        if let Some(k) = s.strip_prefix("2^-") {
            let k: u32 = k.parse().map_err(|_| bad())?;
            return Ok(Prob::pow2_neg(k));
        }
        let q = if let Some((a, b)) = s.split_once('/') {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            BigRational::new(a, b)
        } else if let Some((i, frac)) = s.split_once('.') {
            let digits = format!("{i}{frac}");
            let num: BigInt = digits.parse().map_err(|_| bad())?;
            BigRational::new(num, num_traits::pow(BigInt::from(10), frac.len()))
        } else {
            BigRational::from_integer(s.parse().map_err(|_| bad())?)
        };
        Prob::new(q)
    }
}

impl TryFrom<String> for Prob {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Prob> for String {
    fn from(p: Prob) -> String {
        p.to_string()
    }
}
