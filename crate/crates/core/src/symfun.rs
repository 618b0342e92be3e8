//! Symmetric Boolean functions as spectra, and their structural analyses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{range, Error, Result};
use crate::field::FieldSpec;

/// The value string of a symmetric function indexed by Hamming weight.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Spectrum {
    bits: Vec<bool>,
}

impl Spectrum {
    /// Builds a spectrum on `bits.len() - 1` variables.
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Malformed("spectrum needs at least one value".into()));
        }
        Ok(Spectrum { bits })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Self {
        Spectrum { bits: (0..=n).map(f).collect() }
    }

    pub fn constant(n: usize, c: bool) -> Self {
        Spectrum { bits: vec![c; n + 1] }
    }

    pub fn n(&self) -> usize {
        self.bits.len() - 1
    }

    pub fn at(&self, w: usize) -> bool {
        self.bits[w]
    }

    pub fn values(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_constant(&self) -> bool {
        self.bits.iter().all(|&b| b == self.bits[0])
    }

    /// All spectra on `n` variables, in lexicographic order of their strings.
    pub fn all(n: usize) -> impl Iterator<Item = Spectrum> {
        (0u64..1 << (n + 1)).map(move |m| Spectrum::from_fn(n, |w| (m >> (n - w)) & 1 == 1))
    }

    pub fn xor(&self, other: &Spectrum) -> Result<Spectrum> {
        same_size(self, other)?;
        Ok(Spectrum::from_fn(self.n(), |w| self.at(w) ^ other.at(w)))
    }

    pub fn complement(&self) -> Spectrum {
        Spectrum::from_fn(self.n(), |w| !self.at(w))
    }

    /// The spectrum of `x ↦ f(1 - x)`, i.e. `w ↦ f(n - w)`.
    pub fn reflect(&self) -> Spectrum {
        let n = self.n();
        Spectrum::from_fn(n, |w| self.at(n - w))
    }

    /// Whether the spectrum is constant on `[t, n]`.
    pub fn is_t_constant(&self, t: usize) -> bool {
        t > self.n() || self.bits[t..].iter().all(|&b| b == self.bits[t])
    }
}

fn same_size(a: &Spectrum, b: &Spectrum) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::Arity { expected: a.n(), found: b.n() });
    }
    Ok(())
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Spectrum {
    type Err = Error;
    /// Parses the one-line text format; one trailing newline is allowed.
    fn from_str(s: &str) -> Result<Self> {
        let line = s.strip_suffix('\n').unwrap_or(s);
        let line = line.strip_suffix('\r').unwrap_or(line);
        let bits = line
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Malformed(format!("unexpected character {other:?} in spectrum"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Spectrum::new(bits)
    }
}

impl TryFrom<String> for Spectrum {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Spectrum> for String {
    fn from(s: Spectrum) -> String {
        s.to_string()
    }
}

/// Named symmetric functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamedKind {
    Or,
    And,
    Maj,
    Thr(usize),
    Ethr(usize),
    Mod(usize, usize),
    Const(bool),
}

impl fmt::Display for NamedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedKind::Or => write!(f, "OR"),
            NamedKind::And => write!(f, "AND"),
            NamedKind::Maj => write!(f, "MAJ"),
            NamedKind::Thr(t) => write!(f, "THR({t})"),
            NamedKind::Ethr(t) => write!(f, "ETHR({t})"),
            NamedKind::Mod(b, i) => write!(f, "MOD({b},{i})"),
            NamedKind::Const(c) => write!(f, "CONST({})", *c as u8),
        }
    }
}

impl FromStr for NamedKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Malformed(format!("named function {s:?}"));
        let s = s.trim().to_ascii_uppercase();
        let (head, args) = match s.split_once('(') {
            Some((h, rest)) => (h.to_string(), rest.strip_suffix(')').ok_or_else(bad)?.to_string()),
            None => (s.clone(), String::new()),
        };
        let nums = || -> Result<Vec<usize>> {
            args.split(',').map(|a| a.trim().parse::<usize>().map_err(|_| bad())).collect()
        };
        match (head.as_str(), args.is_empty()) {
            ("OR", true) => Ok(NamedKind::Or),
            ("AND", true) => Ok(NamedKind::And),
            ("MAJ", true) => Ok(NamedKind::Maj),
            ("THR", false) => Ok(NamedKind::Thr(one(nums()?).ok_or_else(bad)?)),
            ("ETHR", false) => Ok(NamedKind::Ethr(one(nums()?).ok_or_else(bad)?)),
            ("CONST", false) => match one(nums()?) {
                Some(c @ (0 | 1)) => Ok(NamedKind::Const(c == 1)),
                _ => Err(bad()),
            },
            ("MOD", false) => match nums()?.as_slice() {
                [b, i] => Ok(NamedKind::Mod(*b, *i)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

fn one(v: Vec<usize>) -> Option<usize> {
    (v.len() == 1).then(|| v[0])
}

/// The spectrum of a named function on `n` variables.
pub fn named_spectrum(kind: NamedKind, n: usize) -> Result<Spectrum> {
    Ok(match kind {
        NamedKind::Or => Spectrum::from_fn(n, |w| w >= 1),
        NamedKind::And => Spectrum::from_fn(n, |w| w == n),
        NamedKind::Maj => Spectrum::from_fn(n, |w| 2 * w > n),
        NamedKind::Thr(t) => {
            if t > n {
                return range(format!("threshold {t} exceeds n = {n}"));
            }
            Spectrum::from_fn(n, |w| w >= t)
        }
        NamedKind::Ethr(t) => {
            if t > n {
                return range(format!("exact threshold {t} exceeds n = {n}"));
            }
            Spectrum::from_fn(n, |w| w == t)
        }
        NamedKind::Mod(b, i) => {
            if b < 2 || b > n || i >= b {
                return range(format!("MOD({b},{i}) needs 2 ≤ b ≤ n = {n} and i < b"));
            }
            Spectrum::from_fn(n, |w| w % b == i)
        }
        NamedKind::Const(c) => Spectrum::constant(n, c),
    })
}

/// Smallest `b ≥ 1` with `s(i) = s(i + b)` for all valid `i`.
///
/// When no `b ≤ n` works (only possible if `s(0) ≠ s(n)` and nothing shorter fits) the
/// vacuous shift `n + 1` is returned.
pub fn period(s: &Spectrum) -> usize {
    min_period(s.values())
}

pub(crate) fn min_period(v: &[bool]) -> usize {
    (1..v.len()).find(|&b| (0..v.len() - b).all(|i| v[i] == v[i + b])).unwrap_or(v.len())
}

/// Bounded radius together with the degenerate-window flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Radius {
    pub k: usize,
    /// Set when `[k, n-k]` is empty, i.e. no non-empty window is constant.
    pub window_empty: bool,
}

/// `B(f)`: the smallest `k` such that the spectrum is constant on `[k, n-k]`.
pub fn bounded_radius(s: &Spectrum) -> usize {
    bounded_radius_detail(s).k
}

pub fn bounded_radius_detail(s: &Spectrum) -> Radius {
    let n = s.n();
    for k in 0..=n {
        if 2 * k > n {
            return Radius { k: (n + 1).div_ceil(2), window_empty: true };
        }
        let w = &s.values()[k..=n - k];
        if w.iter().all(|&b| b == w[0]) {
            return Radius { k, window_empty: false };
        }
    }
    unreachable!("loop exits once the window is empty")
}

/// The standard decomposition `f = g XOR h`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub f: Spectrum,
    pub g: Spectrum,
    pub h: Spectrum,
    pub period_g: usize,
    pub bounded_radius_h: usize,
    pub window: (usize, usize),
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub characteristic: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub period_is_char_power: Option<bool>,
}

/// The middle window `[⌈n/3⌉, ⌊2n/3⌋]`.
pub fn middle_window(n: usize) -> (usize, usize) {
    (n.div_ceil(3), 2 * n / 3)
}

pub fn standard_decomposition(f: &Spectrum) -> Result<DecompositionReport> {
    let n = f.n();
    if n < 3 {
        return range(format!("decomposition needs n ≥ 3, got {n}"));
    }
    let (lo, hi) = middle_window(n);
    let b = min_period(&f.values()[lo..=hi]);
    let g = Spectrum::from_fn(n, |w| f.at(lo + (w as isize - lo as isize).rem_euclid(b as isize) as usize));
    let h = f.xor(&g)?;
    Ok(DecompositionReport {
        f: f.clone(),
        period_g: period(&g),
        bounded_radius_h: bounded_radius(&h),
        g,
        h,
        window: (lo, hi),
        characteristic: None,
        period_is_char_power: None,
    })
}

/// Decomposition plus the flag telling whether `per(g)` is a power of the characteristic.
pub fn standard_decomposition_in(f: &Spectrum, field: FieldSpec) -> Result<DecompositionReport> {
    let mut r = standard_decomposition(f)?;
    r.characteristic = Some(field.characteristic());
    r.period_is_char_power = Some(field.char_power_exponent(r.period_g).is_some());
    Ok(r)
}

/// `s'(w) = f(w + ones)` on `n - zeros - ones` variables.
pub fn restrict(f: &Spectrum, zeros: usize, ones: usize) -> Result<Spectrum> {
    if zeros + ones > f.n() {
        return range(format!("restriction fixes {} of {} variables", zeros + ones, f.n()));
    }
    Ok(Spectrum::from_fn(f.n() - zeros - ones, |w| f.at(w + ones)))
}

/// Coefficients `a_j ∈ {-1,0,1}` with `f = Σ_j a_j Thr^j` over the integers.
pub fn threshold_combination(f: &Spectrum) -> Vec<i8> {
    (0..=f.n()).map(|j| if j == 0 { f.at(0) as i8 } else { f.at(j) as i8 - f.at(j - 1) as i8 }).collect()
}

/// Whether all length-`b` windows at pairwise incongruent starts are distinct.
pub fn window_distinctness(g: &Spectrum) -> Result<bool> {
    let b = period(g);
    if b == 1 {
        return range("window distinctness needs period > 1");
    }
    let n = g.n();
    if b > n {
        return Ok(true);
    }
    let v = g.values();
    let last = n + 1 - b;
    for i in 0..=last {
        for j in i + 1..=last {
            if (j - i) % b != 0 && v[i..i + b] == v[j..j + b] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sp(s: &str) -> Spectrum {
        s.parse().unwrap()
    }

    #[test]
    fn named_examples() {
        assert_eq!(named_spectrum(NamedKind::Thr(2), 3).unwrap(), sp("0011"));
        assert_eq!(named_spectrum(NamedKind::Mod(2, 0), 4).unwrap(), sp("10101"));
        assert_eq!(named_spectrum(NamedKind::Maj, 6).unwrap(), sp("0000111"));
        assert_eq!(named_spectrum(NamedKind::Thr(0), 3).unwrap(), sp("1111"));
        assert!(matches!(named_spectrum(NamedKind::Thr(4), 3), Err(Error::Range(_))));
        assert!(named_spectrum(NamedKind::Mod(1, 0), 3).is_err());
        assert!(named_spectrum(NamedKind::Mod(3, 3), 5).is_err());
    }

    #[test]
    fn named_kind_parsing() {
        for k in [NamedKind::Or, NamedKind::Thr(3), NamedKind::Mod(3, 1), NamedKind::Const(true)] {
            assert_eq!(k.to_string().parse::<NamedKind>().unwrap(), k);
        }
        assert!("THR".parse::<NamedKind>().is_err());
    }

    #[test]
    fn period_examples() {
        assert_eq!(period(&sp("10101")), 2);
        assert_eq!(period(&sp("1111")), 1);
        assert_eq!(period(&sp("0100100")), 3);
        assert_eq!(period(&sp("01")), 2);
    }

    #[test]
    fn bounded_radius_examples() {
        assert_eq!(bounded_radius(&sp("01111")), 1);
        assert_eq!(bounded_radius(&sp("1111")), 0);
        assert_eq!(bounded_radius(&sp("0100011")), 2);
        let odd = bounded_radius_detail(&sp("0101"));
        assert_eq!(odd, Radius { k: 2, window_empty: true });
    }

    #[test]
    fn decomposition_examples() {
        // The window of parity on four inputs is the single weight 2, so g is constant.
        let r = standard_decomposition(&sp("10101")).unwrap();
        assert_eq!((r.g.to_string(), r.h.to_string()), ("11111".into(), "01010".into()));
        let r = standard_decomposition(&sp("1010101")).unwrap();
        assert_eq!((r.g.to_string(), r.h.to_string(), r.period_g), ("1010101".into(), "0000000".into(), 2));
        let r = standard_decomposition(&sp("0000111")).unwrap();
        assert_eq!(r.g, sp("0100100"));
        assert_eq!(r.h, sp("0100011"));
        assert_eq!((r.period_g, r.bounded_radius_h), (3, 2));
        let r = standard_decomposition(&sp("111")).unwrap_err();
        assert!(matches!(r, Error::Range(_)));
        let r = standard_decomposition(&sp("1111")).unwrap();
        assert_eq!((r.g, r.h), (sp("1111"), sp("0000")));
    }

    #[test]
    fn decomposition_exhaustive_small() {
        for n in 3..=10 {
            let (lo, hi) = middle_window(n);
            for f in Spectrum::all(n) {
                let r = standard_decomposition(&f).unwrap();
                assert_eq!(r.g.xor(&r.h).unwrap(), f);
                for w in lo..=hi {
                    assert_eq!(r.g.at(w), f.at(w));
                }
                // The true period never exceeds the window length, and the bounded radius
                // never exceeds ⌈n/3⌉.
                assert!(r.period_g <= hi - lo + 1);
                assert!(r.bounded_radius_h <= n.div_ceil(3));
                // Brute-force minimality among all extensions of the window.
                let best = (1..=n + 1)
                    .find(|&b| (lo..=hi).all(|w| w + b > hi || f.at(w) == f.at(w + b)))
                    .unwrap();
                assert_eq!(r.period_g, best);
            }
        }
    }

    #[test]
    fn period_bound_is_off_by_one_for_some_n() {
        // Majority on six inputs has a three-periodic part while ⌊6/3⌋ = 2.
        let r = standard_decomposition(&sp("0000111")).unwrap();
        assert!(r.period_g > 6 / 3);
        // For n ≡ 1 (mod 3) the window has exactly ⌊n/3⌋ entries, so the bound holds.
        for n in [4, 7, 10] {
            for f in Spectrum::all(n) {
                assert!(standard_decomposition(&f).unwrap().period_g <= n / 3);
            }
        }
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(restrict(&sp("001111"), 0, 1).unwrap(), sp("01111"));
        let f = sp("0110");
        assert_eq!(restrict(&f, 0, 0).unwrap(), f);
        assert_eq!(restrict(&sp("0000111"), 2, 2).unwrap(), sp("001"));
        assert!(restrict(&f, 2, 2).is_err());
    }

    #[test]
    fn threshold_combination_examples() {
        assert_eq!(threshold_combination(&sp("0111")), vec![0, 1, 0, 0]);
        assert_eq!(threshold_combination(&sp("0100")), vec![0, 1, -1, 0]);
        assert_eq!(threshold_combination(&sp("111")), vec![1, 0, 0]);
    }

    #[test]
    fn threshold_combination_telescopes_exhaustively() {
        for n in 0..=12 {
            for f in Spectrum::all(n) {
                let a = threshold_combination(&f);
                for w in 0..=n {
                    let v: i32 = a[..=w].iter().map(|&x| x as i32).sum();
                    assert_eq!(v, f.at(w) as i32);
                }
            }
        }
    }

    #[test]
    fn window_distinctness_examples() {
        assert!(window_distinctness(&sp("010101")).unwrap());
        assert!(window_distinctness(&sp("0100100")).unwrap());
        assert!(window_distinctness(&sp("1111")).is_err());
    }

    #[test]
    fn periodic_extension_has_exact_period() {
        for b in 1..=8usize {
            for m in 0u32..1 << b {
                let u: Vec<bool> = (0..b).map(|i| (m >> i) & 1 == 1).collect();
                let primitive = (1..b).all(|j| (0..b).any(|i| u[i] != u[(i + j) % b]));
                if primitive {
                    let s = Spectrum::from_fn(3 * b, |w| u[w % b]);
                    assert_eq!(period(&s), b, "u = {u:?}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn window_distinctness_holds(bits in proptest::collection::vec(any::<bool>(), 2..=25)) {
            let s = Spectrum::new(bits).unwrap();
            prop_assume!(period(&s) > 1);
            prop_assert!(window_distinctness(&s).unwrap());
        }

        #[test]
        fn spectrum_text_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..40)) {
            let s = Spectrum::new(bits).unwrap();
            prop_assert_eq!(format!("{s}\n").parse::<Spectrum>().unwrap(), s.clone());
            let j = serde_json::to_string(&s).unwrap();
            prop_assert_eq!(serde_json::from_str::<Spectrum>(&j).unwrap(), s);
        }
    }
}
