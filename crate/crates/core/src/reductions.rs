//! Restriction-based reductions from symmetric functions to MOD, Majority, threshold and OR.
//!
//! Every reduction emits a [`ReductionCertificate`]: restrictions of a source spectrum and a
//! combining polynomial over them whose value equals a named target function pointwise.

use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{range, Error, Result};
use crate::field::{FieldElement, FieldSpec, Prob};
use crate::symfun::{bounded_radius_detail, named_spectrum, period, restrict, NamedKind, Spectrum};
use crate::verify::{identity_check, Identity, IdentityTerm, TermWire};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionKind {
    ModFromPeriodic,
    MajFromPeriodic,
    ThrToMaj,
    ThrToOr,
    ThrComplementFromBounded,
    MajFromGeneral,
}

/// Fixes `zeros` inputs to 0 and `ones` inputs to 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Restriction {
    pub zeros: usize,
    pub ones: usize,
}

/// The function a certificate reconstructs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    pub size: usize,
    pub spectrum: Spectrum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionCertificate {
    pub kind: ReductionKind,
    pub field: FieldSpec,
    pub source: Spectrum,
    pub target: Target,
    pub restrictions: Vec<Restriction>,
    /// Terms over the restricted functions, indexed into `restrictions`.
    pub combiner: Vec<IdentityTerm>,
    pub claimed_degree: usize,
    /// Set when the source is the reflection `w ↦ n − w` of the caller's spectrum.
    pub reflected: bool,
}

impl ReductionCertificate {
    /// The restricted functions in order.
    pub fn restricted(&self) -> Result<Vec<Spectrum>> {
        self.restrictions.iter().map(|r| restrict(&self.source, r.zeros, r.ones)).collect()
    }

    pub fn identity(&self) -> Result<Identity> {
        let operands = self.restricted()?;
        Ok(Identity { field: self.field, operands, terms: self.combiner.clone(), target: self.target.spectrum.clone() })
    }

    /// Largest number of factors in a combiner term.
    pub fn combiner_degree(&self) -> usize {
        self.combiner.iter().map(|t| t.factors.len()).max().unwrap_or(0)
    }

    /// Pointwise identity check plus the degree claim.
    pub fn check(&self) -> Result<bool> {
        if self.target.spectrum.n() != self.target.size {
            return Ok(false);
        }
        Ok(self.combiner_degree() <= self.claimed_degree && identity_check(&self.identity()?)?)
    }
}

#[derive(Serialize, Deserialize)]
struct CertificateWire {
    kind: ReductionKind,
    char: FieldSpec,
    source: Spectrum,
    target: Target,
    restrictions: Vec<Restriction>,
    combiner: Vec<TermWire>,
    claimed_degree: usize,
    #[serde(default)]
    reflected: bool,
}

impl Serialize for ReductionCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CertificateWire {
            kind: self.kind,
            char: self.field,
            source: self.source.clone(),
            target: self.target.clone(),
            restrictions: self.restrictions.clone(),
            combiner: self.combiner.iter().map(TermWire::from_term).collect(),
            claimed_degree: self.claimed_degree,
            reflected: self.reflected,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ReductionCertificate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = CertificateWire::deserialize(d)?;
        let combiner =
            w.combiner.into_iter().map(|t| t.into_term(w.char)).collect::<Result<Vec<_>>>().map_err(D::Error::custom)?;
        Ok(ReductionCertificate {
            kind: w.kind,
            field: w.char,
            source: w.source,
            target: w.target,
            restrictions: w.restrictions,
            combiner,
            claimed_degree: w.claimed_degree,
            reflected: w.reflected,
        })
    }
}

/// `⌊log2 n⌋` for `n ≥ 1`.
pub fn floor_log2(n: usize) -> usize {
    (usize::BITS - 1 - n.max(1).leading_zeros()) as usize
}

/// Result of [`shrink_support`]: chosen family members and the surviving point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShrinkResult {
    pub chosen: Vec<usize>,
    pub point: usize,
}

/// Greedily picks at most `⌊log n⌋` members whose pointwise product has a single-point support.
///
/// The family must be closed under complement and separating: for all `i ≠ j` some member
/// is 1 at `i` and 0 at `j`. Each step takes the first member separating the two smallest
/// support points, or its complement when the member keeps more than half the support.
pub fn shrink_support(n: usize, family: &[Vec<bool>]) -> Result<ShrinkResult> {
    if n == 0 {
        return range("shrink_support needs a non-empty interval");
    }
    if let Some(f) = family.iter().find(|f| f.len() != n) {
        return Err(Error::Arity { expected: n, found: f.len() });
    }
    let mut index: HashMap<&[bool], usize> = HashMap::new();
    for (k, f) in family.iter().enumerate() {
        index.entry(f.as_slice()).or_insert(k);
    }
    let complement: Vec<usize> = family
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let c: Vec<bool> = f.iter().map(|b| !b).collect();
            index.get(c.as_slice()).copied().ok_or(Error::NotClosed(k))
        })
        .collect::<Result<_>>()?;
    check_separating(n, family)?;

    let mut support: Vec<usize> = (0..n).collect();
    let mut chosen = Vec::new();
    while support.len() > 1 {
        let (i, j) = (support[0], support[1]);
        let k = family.iter().position(|f| f[i] && !f[j]).expect("family is separating");
        let kept = support.iter().filter(|&&x| family[k][x]).count();
        let pick = if 2 * kept <= support.len() { k } else { complement[k] };
        support.retain(|&x| family[pick][x]);
        chosen.push(pick);
    }
    debug_assert!(chosen.len() <= floor_log2(n));
    Ok(ShrinkResult { chosen, point: support[0] })
}

fn check_separating(n: usize, family: &[Vec<bool>]) -> Result<()> {
    let words = n.div_ceil(64);
    let mut sep = vec![vec![0u64; words]; n];
    for f in family {
        let mut zeros = vec![0u64; words];
        for (x, _) in f.iter().enumerate().filter(|(_, &b)| !b) {
            zeros[x / 64] |= 1 << (x % 64);
        }
        for (i, _) in f.iter().enumerate().filter(|(_, &b)| b) {
            sep[i].iter_mut().zip(&zeros).for_each(|(s, z)| *s |= z);
        }
    }
    for (i, row) in sep.iter().enumerate() {
        if let Some(j) = (0..n).find(|&j| j != i && row[j / 64] >> (j % 64) & 1 == 0) {
            return Err(Error::NotSeparating(i, j));
        }
    }
    Ok(())
}

/// A product of shifts `Y_j` or `1 − Y_j` that evaluates to the delta function at `index`
/// on the cyclic-shift family `u_j(i) = u((i + j) mod m)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaCertificate {
    pub m: usize,
    pub index: usize,
    /// `(shift j, negated)`.
    pub factors: Vec<(usize, bool)>,
}

impl DeltaCertificate {
    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    /// Factors of the delta at `i`: every shift index moves by `index − i`.
    pub fn shifted_to(&self, i: usize) -> Vec<(usize, bool)> {
        let s = (self.index + self.m - i % self.m) % self.m;
        self.factors.iter().map(|&(j, neg)| ((j + s) % self.m, neg)).collect()
    }

    /// Terms `Σ_i c_i δ_i` over the shift variables, skipping zero coefficients.
    pub fn combination(&self, coeffs: &[FieldElement]) -> Vec<IdentityTerm> {
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| IdentityTerm { coeff: c.clone(), factors: self.shifted_to(i) })
            .collect()
    }

    /// Value of the product at position `x` of the shift family of `u`.
    pub fn eval(&self, u: &[bool], x: usize) -> bool {
        self.factors.iter().all(|&(j, neg)| u[(x + j) % self.m] != neg)
    }
}

/// Smallest cyclic shift `j ∈ [1, m−1]` fixing `u`, if any.
pub fn cyclic_period(u: &[bool]) -> Option<usize> {
    let m = u.len();
    (1..m).find(|&j| (0..m).all(|i| u[(i + j) % m] == u[i]))
}

/// Delta polynomial of degree at most `⌊log m⌋` over the cyclic shifts of an aperiodic `u`.
pub fn delta_from_shifts(u: &[bool]) -> Result<DeltaCertificate> {
    let m = u.len();
    if m == 0 {
        return range("delta_from_shifts needs a non-empty string");
    }
    if let Some(j) = cyclic_period(u) {
        return Err(Error::Periodic(j));
    }
    // Members 0..m are the shifts, m..2m their complements.
    let family: Vec<Vec<bool>> = (0..2 * m)
        .map(|k| (0..m).map(|i| u[(i + k % m) % m] != (k >= m)).collect())
        .collect();
    let s = shrink_support(m, &family)?;
    let factors = s.chosen.iter().map(|&k| (k % m, k >= m)).collect();
    Ok(DeltaCertificate { m, index: s.point, factors })
}

fn smallest_prime_factor_except(b: usize, p: u32) -> Option<usize> {
    let mut x = b;
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            if d != p as usize {
                return Some(d);
            }
            while x % d == 0 {
                x /= d;
            }
        }
        d += 1;
    }
    (x > 1 && x != p as usize).then_some(x)
}

/// Restrictions `g(x 0^{b−k} 1^k)` for `k = 0..b`, each further restricted by `extra`.
fn shift_restrictions(b: usize, extra: Restriction) -> Vec<Restriction> {
    (0..b).map(|k| Restriction { zeros: extra.zeros + b - k, ones: extra.ones + k }).collect()
}

/// For `g` of period `b > 1` not a power of the characteristic: one certificate per residue
/// `i < q` reconstructing `MOD(q,i)` on `n − b` inputs, `q` the least prime factor of `b`
/// other than the characteristic.
pub fn mod_from_periodic(g: &Spectrum, field: FieldSpec) -> Result<Vec<ReductionCertificate>> {
    let n = g.n();
    let b = period(g);
    if b == 1 {
        return range("mod_from_periodic needs period > 1");
    }
    if field.char_power_exponent(b).is_some() {
        return range(format!("period {b} is a power of the characteristic {}", field.characteristic()));
    }
    if b > n / 3 {
        return range(format!("period {b} exceeds ⌊n/3⌋ = {}", n / 3));
    }
    let q = smallest_prime_factor_except(b, field.characteristic()).expect("b is not a power of p");
    // The shift family of one period: restriction k at weight j reads g(j + k) = u((j + k) mod b).
    let u: Vec<bool> = g.values()[..b].to_vec();
    let delta = delta_from_shifts(&u)?;
    let restrictions = shift_restrictions(b, Restriction { zeros: 0, ones: 0 });
    (0..q)
        .map(|i| {
            let coeffs: Vec<FieldElement> = (0..b).map(|j| field.from_bool(j % q == i)).collect();
            let kind = NamedKind::Mod(q, i);
            Ok(ReductionCertificate {
                kind: ReductionKind::ModFromPeriodic,
                field,
                source: g.clone(),
                target: Target { name: kind.to_string(), size: n - b, spectrum: named_spectrum(kind, n - b)? },
                restrictions: restrictions.clone(),
                combiner: delta.combination(&coeffs),
                claimed_degree: floor_log2(b),
                reflected: false,
            })
        })
        .collect()
}

/// Which branch of the parameter rule selected `(m, δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MajCase {
    /// `b ≤ 10√n`.
    SmallPeriod,
    /// `b ≥ n/10`.
    LargePeriod,
    /// `10√n < b < n/10`.
    MiddlePeriod,
}

/// Parameters `(m, δ)` and the numeric status of the four required properties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajParameters {
    pub n: usize,
    pub b: usize,
    pub case: MajCase,
    pub m: usize,
    /// `log2(1/δ)`.
    pub delta_log2_inv: f64,
    /// `log2(1/ε)` after capping ε at 1/5.
    pub eps_log2_inv: f64,
    /// `m ∈ [1, n−b]` and `m ≡ n − b (mod 2)`.
    pub p1: bool,
    /// `1/5 ≥ δ ≥ max{ε, 2^−m}`.
    pub p2: bool,
    /// `4√(m log(1/δ)) ≤ b`.
    pub p3: bool,
    /// `√(m log(1/δ)) ≥ P4_CONSTANT · min{b, √(n log(1/ε))}`.
    pub p4: bool,
}

impl MajParameters {
    pub fn delta(&self) -> f64 {
        (-self.delta_log2_inv).exp2()
    }

    pub fn all_hold(&self) -> bool {
        self.p1 && self.p2 && self.p3 && self.p4
    }

    /// `√(m log(1/δ))`.
    pub fn spread(&self) -> f64 {
        (self.m as f64 * self.delta_log2_inv).sqrt()
    }
}

/// Constant used for the asymptotic property (P4).
pub const P4_CONSTANT: f64 = 0.01;
/// Smallest period accepted by the small-period case.
pub const MIN_SMALL_PERIOD: usize = 10;
/// Smallest `m` for which `2^−m ≤ 1/5`, so that (P2) is satisfiable.
pub const MIN_M: usize = 3;

/// Largest `m ≤ cap` with `m ∈ [1, n−b]` and `m ≡ n − b (mod 2)`.
fn largest_valid_m(n: usize, b: usize, cap: f64) -> Option<usize> {
    let top = ((cap.floor().max(0.0)) as usize).min(n - b);
    (1..=top).rev().find(|m| (n - b - m) % 2 == 0)
}

/// Selects `(m, δ)` by the three-case rule on `b` against `10√n` and `n/10`.
pub fn maj_parameters(n: usize, b: usize, eps: &Prob) -> Result<MajParameters> {
    if b == 0 || b > n {
        return range(format!("period {b} outside [1, {n}]"));
    }
    let five = 5f64.log2();
    let l_eps = eps.log2_inv().max(five);
    let nf = n as f64;
    let bf = b as f64;
    let (case, m, l_delta) = if bf <= 10.0 * nf.sqrt() {
        if b < MIN_SMALL_PERIOD {
            return range(format!("period {b} below the small-period minimum {MIN_SMALL_PERIOD}"));
        }
        let m = largest_valid_m(n, b, bf * bf / 100.0)
            .ok_or_else(|| Error::Range(format!("no valid m ≤ b²/100 for n = {n}, b = {b}")))?;
        (MajCase::SmallPeriod, m, five)
    } else if bf >= nf / 10.0 {
        let m = largest_valid_m(n, b, nf / 100.0)
            .ok_or_else(|| Error::Range(format!("no valid m ≤ n/100 for n = {n}, b = {b}")))?;
        (MajCase::LargePeriod, m, l_eps.min(m as f64))
    } else {
        let m = n - b;
        (MajCase::MiddlePeriod, m, l_eps.min(bf * bf / (16.0 * m as f64)))
    };
    if m < MIN_M {
        return range(format!("selected m = {m} < {MIN_M} leaves no δ with 2^-m ≤ δ ≤ 1/5"));
    }
    let mf = m as f64;
    let spread = (mf * l_delta).sqrt();
    let tol = 1e-9;
    Ok(MajParameters {
        n,
        b,
        case,
        m,
        delta_log2_inv: l_delta,
        eps_log2_inv: l_eps,
        p1: m >= 1 && m <= n - b && (n - b - m) % 2 == 0,
        p2: l_delta >= five - tol && l_delta <= l_eps.min(mf) + tol,
        p3: 4.0 * spread <= bf + tol,
        p4: spread >= P4_CONSTANT * bf.min((nf * l_eps).sqrt()),
    })
}

/// Outcome of [`maj_from_periodic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajFromPeriodic {
    pub parameters: MajParameters,
    pub certificate: ReductionCertificate,
    /// Open weight interval `(m/2 − 2s, m/2 + 2s)`, `s = √(m log(1/δ))`, as integer bounds.
    pub window: (usize, usize),
    /// The target agrees with `MAJ_m` at every weight in `window`.
    pub window_agrees: bool,
    /// Fraction of `{0,1}^m` where the target equals `MAJ_m`.
    pub agreement: f64,
}

/// Integer weights strictly inside `(c − r, c + r)` clipped to `[0, top]`.
fn open_window(c: f64, r: f64, top: usize) -> Option<(usize, usize)> {
    let lo = (c - r).floor() + 1.0;
    let hi = (c + r).ceil() - 1.0;
    let lo = lo.max(0.0) as usize;
    let hi = hi.min(top as f64);
    (hi >= lo as f64).then(|| (lo, hi as usize))
}

/// Fraction of `{0,1}^m` on which two spectra agree.
pub fn agreement_fraction(a: &Spectrum, b: &Spectrum) -> f64 {
    let m = a.n();
    let mut ln_binom = 0.0f64;
    let ln2m = m as f64 * std::f64::consts::LN_2;
    let mut total = 0.0;
    for w in 0..=m {
        if w > 0 {
            ln_binom += ((m - w + 1) as f64).ln() - (w as f64).ln();
        }
        if a.at(w) == b.at(w) {
            total += (ln_binom - ln2m).exp();
        }
    }
    total.min(1.0)
}

/// For `g` whose period `b` is a power of the characteristic: a certificate for a function on
/// `m` inputs agreeing with `MAJ_m` on its central window, with `(m, δ)` from [`maj_parameters`].
pub fn maj_from_periodic(g: &Spectrum, eps: &Prob, field: FieldSpec) -> Result<MajFromPeriodic> {
    let n = g.n();
    let b = period(g);
    if b <= 1 || field.char_power_exponent(b).is_none() {
        return range(format!("period {b} is not a power > 1 of the characteristic {}", field.characteristic()));
    }
    let params = maj_parameters(n, b, eps)?;
    let big = n - b;
    let s = params.spread();
    // b-periodic G on n − b inputs matching MAJ on the central window.
    let maj_big = named_spectrum(NamedKind::Maj, big)?;
    let mut residue: Vec<Option<bool>> = vec![None; b];
    if let Some((lo, hi)) = open_window(big as f64 / 2.0, 2.0 * s, big) {
        for a in lo..=hi {
            let v = maj_big.at(a);
            match residue[a % b] {
                Some(old) if old != v => return range("window longer than the period"),
                _ => residue[a % b] = Some(v),
            }
        }
    }
    let t = (big - params.m) / 2;
    let m = params.m;
    let target = Spectrum::from_fn(m, |w| residue[(w + t) % b].unwrap_or(false));
    let u: Vec<bool> = g.values()[..b].to_vec();
    let delta = delta_from_shifts(&u)?;
    let coeffs: Vec<FieldElement> = residue.iter().map(|v| field.from_bool(v.unwrap_or(false))).collect();
    let certificate = ReductionCertificate {
        kind: ReductionKind::MajFromPeriodic,
        field,
        source: g.clone(),
        target: Target { name: format!("MAJ~({m})"), size: m, spectrum: target.clone() },
        restrictions: shift_restrictions(b, Restriction { zeros: t, ones: t }),
        combiner: delta.combination(&coeffs),
        claimed_degree: floor_log2(b),
        reflected: false,
    };
    let maj = named_spectrum(NamedKind::Maj, m)?;
    let window = open_window(m as f64 / 2.0, 2.0 * s, m).unwrap_or((1, 0));
    let window_agrees = (window.0..=window.1).all(|w| target.at(w) == maj.at(w));
    let agreement = agreement_fraction(&target, &maj);
    Ok(MajFromPeriodic { parameters: params, certificate, window, window_agrees, agreement })
}

/// `MAJ_{2t−1}` and `OR_{⌈n/2⌉}` as restrictions of `Thr^t_n`, for `1 ≤ t ≤ n/2`.
pub fn thr_restrictions(n: usize, t: usize, field: FieldSpec) -> Result<[ReductionCertificate; 2]> {
    if t == 0 || 2 * t > n {
        return range(format!("threshold restrictions need 1 ≤ t ≤ n/2, got t = {t}, n = {n}"));
    }
    let source = named_spectrum(NamedKind::Thr(t), n)?;
    let single = vec![IdentityTerm { coeff: field.one(), factors: vec![(0, false)] }];
    let cert = |kind, name: String, size, spectrum, r: Restriction| ReductionCertificate {
        kind,
        field,
        source: source.clone(),
        target: Target { name, size, spectrum },
        restrictions: vec![r],
        combiner: single.clone(),
        claimed_degree: 1,
        reflected: false,
    };
    let maj = 2 * t - 1;
    let or = n.div_ceil(2);
    Ok([
        cert(
            ReductionKind::ThrToMaj,
            format!("MAJ({maj})"),
            maj,
            named_spectrum(NamedKind::Maj, maj)?,
            Restriction { zeros: n - maj, ones: 0 },
        ),
        cert(
            ReductionKind::ThrToOr,
            format!("OR({or})"),
            or,
            named_spectrum(NamedKind::Or, or)?,
            Restriction { zeros: n / 2 - t + 1, ones: t - 1 },
        ),
    ])
}

/// Coefficients `α` with `Σ α_i columns[i] = target`, by Gaussian elimination.
pub fn solve_span(columns: &[Vec<FieldElement>], target: &[FieldElement], field: FieldSpec) -> Option<Vec<FieldElement>> {
    let rows = target.len();
    let cols = columns.len();
    // Augmented rows: [columns... | target].
    let mut a: Vec<Vec<FieldElement>> =
        (0..rows).map(|r| columns.iter().map(|c| c[r].clone()).chain([target[r].clone()]).collect()).collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(pr) = (row..rows).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(row, pr);
        let inv = a[row][col].inv().expect("non-zero pivot");
        a[row] = a[row].iter().map(|x| x * &inv).collect();
        for r in 0..rows {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[row].clone();
                a[r].iter_mut().zip(&pivot_row).for_each(|(x, y)| *x = &*x - &(&f * y));
            }
        }
        pivots.push(col);
        row += 1;
    }
    if a[row..].iter().any(|r| !r[cols].is_zero()) {
        return None;
    }
    let mut alpha = vec![field.zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        alpha[c] = a[r][cols].clone();
    }
    Some(alpha)
}

fn spectrum_column(s: &Spectrum, field: FieldSpec, negated: bool) -> Vec<FieldElement> {
    s.values().iter().map(|&b| field.from_bool(b != negated)).collect()
}

/// `1 − Thr^t_{m+t} = Σ α_i h_i` with `h_i(x) = h(x 1^{b−t+i} 0^{n−m−b−i})`, `m = ⌊n/6⌋`,
/// `t = ⌈b/3⌉`, `b = B(h)`.
///
/// The side of the window where `h` leaves its constant value decides the orientation; the upper
/// side reflects `h` first. When the constant value is 1 the restricted functions enter negated.
pub fn thr_complement_from_bounded(h: &Spectrum, field: FieldSpec) -> Result<ReductionCertificate> {
    let n = h.n();
    let radius = bounded_radius_detail(h);
    let b = radius.k;
    if b == 0 {
        return range("thr_complement_from_bounded needs B(h) ≥ 1");
    }
    if radius.window_empty || b > n.div_ceil(3) {
        return range(format!("B(h) = {b} exceeds ⌈n/3⌉ = {}", n.div_ceil(3)));
    }
    let c = h.at(b);
    let (source, reflected) = if h.at(b - 1) != c {
        (h.clone(), false)
    } else if h.at(n - b + 1) != c {
        (h.reflect(), true)
    } else {
        return Err(Error::Malformed(format!("neither end of the window [{b}, {}] is a boundary", n - b)));
    };
    let m = n / 6;
    let t = b.div_ceil(3);
    if m + b + t > n + 1 {
        return range(format!("n = {n} too small for m = {m}, b = {b}, t = {t}"));
    }
    let restrictions: Vec<Restriction> =
        (0..t).map(|i| Restriction { zeros: n - m - b - i, ones: b - t + i }).collect();
    let columns: Vec<Vec<FieldElement>> = restrictions
        .iter()
        .map(|r| Ok(spectrum_column(&restrict(&source, r.zeros, r.ones)?, field, c)))
        .collect::<Result<_>>()?;
    let size = m + t;
    let target = Spectrum::from_fn(size, |w| w < t);
    let alpha = solve_span(&columns, &spectrum_column(&target, field, false), field)
        .ok_or_else(|| Error::Malformed("restricted spectra do not span the target".into()))?;
    let combiner = alpha
        .into_iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(i, a)| IdentityTerm { coeff: a, factors: vec![(i, c)] })
        .collect();
    Ok(ReductionCertificate {
        kind: ReductionKind::ThrComplementFromBounded,
        field,
        source,
        target: Target { name: format!("1-THR({t})"), size, spectrum: target },
        restrictions,
        combiner,
        claimed_degree: 1,
        reflected,
    })
}

/// Intermediate data of [`maj_from_general`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajFromGeneral {
    pub certificate: ReductionCertificate,
    /// `m = ⌊n_1/3⌋`, `n_1 = n − 2⌈n/3⌉`.
    pub m: usize,
    pub m1: usize,
    /// Witnesses `r_k` for `k = 1..=m`.
    pub witnesses: Vec<usize>,
    /// Chosen pairs `(i, j, complemented)`.
    pub chosen: Vec<(usize, usize, bool)>,
    /// Support point of the product on `[m+1, 2m]`.
    pub a: usize,
}

/// `MAJ_{m_1} = Σ_i α_i G_i` where `G` is a product of `O(log m)` restrictions of `f` and
/// `G_i(x) = G(x 1^{a−i} 0^{3m−a+i−m_1})`; requires the middle window of `f` to have no period ≤ m.
pub fn maj_from_general(f: &Spectrum, field: FieldSpec) -> Result<MajFromGeneral> {
    let n = f.n();
    let third = n.div_ceil(3);
    if n < 2 * third {
        return range("n too small");
    }
    let n1 = n - 2 * third;
    let m = n1 / 3;
    let m1 = m / 2;
    if m1 == 0 {
        return range(format!("n = {n} gives m = {m}; at least m = 2 is required"));
    }
    let (lo, hi) = (third, 2 * n / 3);
    let witnesses: Vec<usize> = (1..=m)
        .map(|k| (lo..=hi.saturating_sub(k)).find(|&r| f.at(r) != f.at(r + k)).ok_or(Error::Periodic(k)))
        .collect::<Result<_>>()?;
    // Pairs (i, j) on [m+1, 2m] and the restriction producing f_{i,j} on 3m inputs.
    let mut pairs = Vec::new();
    for i in m + 1..=2 * m {
        for j in i + 1..=2 * m {
            let r = witnesses[j - i - 1];
            if r < i || n < 3 * m + r - i {
                return range("restriction out of range");
            }
            pairs.push((i, j, Restriction { zeros: n - 3 * m - r + i, ones: r - i }));
        }
    }
    let spectra: Vec<Spectrum> = pairs.iter().map(|(_, _, r)| restrict(f, r.zeros, r.ones)).collect::<Result<_>>()?;
    let family: Vec<Vec<bool>> = (0..2 * pairs.len())
        .map(|k| {
            let s = &spectra[k % pairs.len()];
            (m + 1..=2 * m).map(|w| s.at(w) != (k >= pairs.len())).collect()
        })
        .collect();
    let shrink = shrink_support(m, &family)?;
    let a = m + 1 + shrink.point;
    let factors: Vec<(usize, bool)> = shrink.chosen.iter().map(|&k| (k % pairs.len(), k >= pairs.len())).collect();
    let g = Spectrum::from_fn(3 * m, |w| factors.iter().all(|&(p, neg)| spectra[p].at(w) != neg));

    // G_i on m1 inputs; spectra are unit-triangular so they span everything.
    let outer: Vec<Restriction> = (0..=m1).map(|i| Restriction { zeros: 3 * m - a + i - m1, ones: a - i }).collect();
    let columns: Vec<Vec<FieldElement>> = outer
        .iter()
        .map(|r| Ok(spectrum_column(&restrict(&g, r.zeros, r.ones)?, field, false)))
        .collect::<Result<_>>()?;
    let maj = named_spectrum(NamedKind::Maj, m1)?;
    let alpha = solve_span(&columns, &spectrum_column(&maj, field, false), field)
        .ok_or_else(|| Error::Malformed("restricted products do not span MAJ".into()))?;

    let mut restrictions = Vec::new();
    let mut slot: HashMap<Restriction, usize> = HashMap::new();
    let mut combiner = Vec::new();
    for (i, coeff) in alpha.into_iter().enumerate().filter(|(_, c)| !c.is_zero()) {
        let o = outer[i];
        let term_factors = factors
            .iter()
            .map(|&(p, neg)| {
                let inner = pairs[p].2;
                let r = Restriction { zeros: o.zeros + inner.zeros, ones: o.ones + inner.ones };
                let idx = *slot.entry(r).or_insert_with(|| {
                    restrictions.push(r);
                    restrictions.len() - 1
                });
                (idx, neg)
            })
            .collect();
        combiner.push(IdentityTerm { coeff, factors: term_factors });
    }
    let certificate = ReductionCertificate {
        kind: ReductionKind::MajFromGeneral,
        field,
        source: f.clone(),
        target: Target { name: format!("MAJ({m1})"), size: m1, spectrum: maj },
        restrictions,
        combiner,
        claimed_degree: factors.len(),
        reflected: false,
    };
    let chosen = factors.iter().map(|&(p, neg)| (pairs[p].0, pairs[p].1, neg)).collect();
    Ok(MajFromGeneral { certificate, m, m1, witnesses, chosen, a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{exact_sympoly, expand_multilinear};
    use crate::symfun::bounded_radius;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fp(p: u32) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn bits(s: &str) -> Vec<bool> {
        s.bytes().map(|c| c == b'1').collect()
    }

    fn product_support(family: &[Vec<bool>], chosen: &[usize], n: usize) -> Vec<usize> {
        (0..n).filter(|&x| chosen.iter().all(|&k| family[k][x])).collect()
    }

    fn with_complements(members: Vec<Vec<bool>>) -> Vec<Vec<bool>> {
        let comps: Vec<Vec<bool>> = members.iter().map(|f| f.iter().map(|b| !b).collect()).collect();
        members.into_iter().chain(comps).collect()
    }

    #[test]
    fn shrink_support_examples() {
        // Indicators of pairs on [0,3] and their complements.
        let mut members = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                members.push((0..4).map(|x| x == i || x == j).collect());
            }
        }
        let fam = with_complements(members);
        let s = shrink_support(4, &fam).unwrap();
        assert!(s.chosen.len() <= 2);
        assert_eq!(product_support(&fam, &s.chosen, 4), vec![s.point]);

        let s = shrink_support(1, &[vec![true], vec![false]]).unwrap();
        assert_eq!(s, ShrinkResult { chosen: vec![], point: 0 });
        let fam = vec![bits("10"), bits("01")];
        assert_eq!(shrink_support(2, &fam).unwrap(), ShrinkResult { chosen: vec![0], point: 0 });
    }

    #[test]
    fn shrink_support_rejects_bad_families() {
        assert_eq!(shrink_support(2, &[bits("10")]), Err(Error::NotClosed(0)));
        let fam = with_complements(vec![bits("110")]);
        assert_eq!(shrink_support(3, &fam), Err(Error::NotSeparating(0, 1)));
    }

    #[test]
    fn shrink_support_random_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..=40);
            let k = rng.gen_range(1..=12);
            let mut members: Vec<Vec<bool>> = (0..k).map(|_| (0..n).map(|_| rng.gen()).collect()).collect();
            // Binary-digit indicators make any family separating.
            for bit in 0..floor_log2(n) + 1 {
                members.push((0..n).map(|x| x >> bit & 1 == 1).collect());
            }
            let fam = with_complements(members);
            let s = shrink_support(n, &fam).unwrap();
            assert!(s.chosen.len() <= floor_log2(n));
            assert_eq!(product_support(&fam, &s.chosen, n), vec![s.point]);
        }
    }

    #[test]
    fn delta_examples() {
        let d = delta_from_shifts(&bits("100")).unwrap();
        assert_eq!((d.index, d.factors.clone()), (0, vec![(0, false)]));
        let u = bits("110");
        let d = delta_from_shifts(&u).unwrap();
        assert!(d.degree() <= 1);
        assert_eq!((0..3).filter(|&x| d.eval(&u, x)).count(), 1);
        assert_eq!(delta_from_shifts(&bits("1010")), Err(Error::Periodic(2)));
    }

    fn check_all_deltas(u: &[bool]) {
        let m = u.len();
        let d = delta_from_shifts(u).unwrap();
        assert!(d.degree() <= floor_log2(m), "{u:?}");
        for i in 0..m {
            let shifted = DeltaCertificate { m, index: i, factors: d.shifted_to(i) };
            for x in 0..m {
                assert_eq!(shifted.eval(u, x), x == i, "{u:?} delta {i} at {x}");
            }
        }
    }

    #[test]
    fn delta_degree_exhaustive() {
        for m in 1..=14 {
            for mask in 0u32..1 << m {
                let u: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
                if cyclic_period(&u).is_none() {
                    let d = delta_from_shifts(&u).unwrap();
                    assert!(d.degree() <= floor_log2(m));
                    if m <= 8 {
                        check_all_deltas(&u);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn delta_degree_random(u in proptest::collection::vec(any::<bool>(), 1..=64)) {
            prop_assume!(cyclic_period(&u).is_none());
            check_all_deltas(&u);
        }
    }

    #[test]
    fn mod_from_parity_like() {
        let g: Spectrum = "1010101".parse().unwrap();
        let certs = mod_from_periodic(&g, fp(3)).unwrap();
        let names: Vec<&str> = certs.iter().map(|c| c.target.name.as_str()).collect();
        assert_eq!(names, ["MOD(2,0)", "MOD(2,1)"]);
        for c in &certs {
            assert_eq!(c.target.size, 4);
            assert!(c.check().unwrap());
        }
        assert!(mod_from_periodic(&g, fp(2)).is_err());
        assert!(mod_from_periodic(&Spectrum::constant(6, true), fp(3)).is_err());
    }

    #[test]
    fn mod_from_period_six() {
        // Aperiodic window of length 6, repeated on n = 18.
        let w = bits("110100");
        let g = Spectrum::from_fn(18, |x| w[x % 6]);
        assert_eq!(period(&g), 6);
        let certs = mod_from_periodic(&g, fp(5)).unwrap();
        assert_eq!(certs.len(), 2);
        for c in &certs {
            assert_eq!(c.target.size, 12);
            assert!(c.combiner_degree() <= floor_log2(6));
            assert!(c.check().unwrap());
            let mut bad = c.clone();
            bad.combiner[0].coeff = fp(5).from_i64(2);
            assert!(!bad.check().unwrap());
        }
        let back: ReductionCertificate = serde_json::from_str(&serde_json::to_string(&certs[0]).unwrap()).unwrap();
        assert_eq!(back, certs[0]);
    }

    #[test]
    fn maj_parameter_cases() {
        // b = 4 is below the small-period minimum.
        assert!(maj_parameters(20, 4, &"1/5".parse().unwrap()).is_err());
        // b = 16 gives m = 2, where 2^-m > 1/5.
        assert!(maj_parameters(400, 16, &"1/5".parse().unwrap()).is_err());
        let p = maj_parameters(400, 32, &"1/5".parse().unwrap()).unwrap();
        assert_eq!((p.case, p.m), (MajCase::SmallPeriod, 10));
        assert!(p.all_hold());
        // Middle case: 10√n < b < n/10.
        let eps = Prob::pow2_neg(30);
        let p = maj_parameters(65536, 4096, &eps).unwrap();
        assert_eq!((p.case, p.m), (MajCase::MiddlePeriod, 65536 - 4096));
        let expect = (4096f64 * 4096.0 / (16.0 * 61440.0)).min(30.0);
        assert!((p.delta_log2_inv - expect).abs() < 1e-9);
        assert!(p.all_hold());
        let p = maj_parameters(100_000, 16_384, &eps).unwrap();
        assert_eq!(p.case, MajCase::LargePeriod);
        assert!(p.all_hold(), "{p:?}");
    }

    #[test]
    fn maj_parameters_sweep() {
        let mut accepted = 0;
        for p in [2usize, 3, 5] {
            let mut b = p;
            while b < 20_000 {
                if b >= MIN_SMALL_PERIOD {
                    for n in [3 * b, 3 * b + 1, 5 * b, 11 * b, 101 * b, 1000 * b].into_iter().filter(|&n| n <= 1 << 22) {
                        for k in [3u32, 10, 40, 200] {
                            let eps = Prob::pow2_neg(k);
                            match maj_parameters(n, b, &eps) {
                                Ok(par) => {
                                    assert!(par.all_hold(), "{par:?}");
                                    accepted += 1;
                                }
                                Err(_) => assert!((b * b) / 100 < MIN_M + 1 || n / 100 < MIN_M + 1, "n={n} b={b}"),
                            }
                        }
                    }
                }
                b *= p;
            }
        }
        assert!(accepted > 100);
    }

    #[test]
    fn maj_from_power_of_two_period() {
        // Period 32 (a power of 2) with an aperiodic cyclic pattern, n = 96.
        let w = bits("11010011000101110110010000111101");
        assert!(cyclic_period(&w).is_none());
        let g = Spectrum::from_fn(96, |x| w[x % 32]);
        assert_eq!(period(&g), 32);
        let r = maj_from_periodic(&g, &"1/5".parse().unwrap(), fp(2)).unwrap();
        assert!(r.parameters.all_hold());
        assert!(r.window_agrees);
        assert!(r.agreement >= 1.0 - r.parameters.delta());
        assert!(r.certificate.check().unwrap());
        assert!(maj_from_periodic(&g, &"1/5".parse().unwrap(), fp(3)).is_err());
    }

    #[test]
    fn thr_restriction_examples() {
        let [maj, or] = thr_restrictions(9, 3, fp(2)).unwrap();
        assert_eq!(maj.restrictions, vec![Restriction { zeros: 4, ones: 0 }]);
        assert_eq!(or.restrictions, vec![Restriction { zeros: 2, ones: 2 }]);
        assert_eq!((maj.target.size, or.target.size), (5, 5));
        assert!(maj.check().unwrap() && or.check().unwrap());
        let [maj, or] = thr_restrictions(2, 1, FieldSpec::rationals()).unwrap();
        assert_eq!(maj.target.spectrum.to_string(), "01");
        assert!(maj.check().unwrap() && or.check().unwrap());
        assert!(thr_restrictions(5, 3, fp(2)).is_err());
        assert!(thr_restrictions(5, 0, fp(2)).is_err());
        for n in 2..=20 {
            for t in 1..=n / 2 {
                for c in thr_restrictions(n, t, fp(3)).unwrap() {
                    assert!(c.check().unwrap());
                }
            }
        }
    }

    #[test]
    fn or_has_full_multilinear_degree() {
        for m in 1..=12 {
            for field in [fp(2), fp(3), FieldSpec::rationals()] {
                let or = named_spectrum(NamedKind::Or, m).unwrap();
                let poly = expand_multilinear(&exact_sympoly(&or, field), m).unwrap();
                assert_eq!(poly.degree(), m);
            }
        }
    }

    #[test]
    fn thr_complement_examples() {
        let q = FieldSpec::rationals();
        let nor = named_spectrum(NamedKind::Or, 18).unwrap().complement();
        let c = thr_complement_from_bounded(&nor, q).unwrap();
        assert_eq!(c.combiner.len(), 1);
        assert!(c.combiner[0].coeff.is_one());
        assert_eq!(c.target.size, 3 + 1);
        assert!(c.check().unwrap());

        let h = Spectrum::from_fn(18, |w| w == 2 || w == 0);
        assert_eq!(bounded_radius(&h), 3);
        let c = thr_complement_from_bounded(&h, q).unwrap();
        assert_eq!(c.restrictions.len(), 1);
        assert!(c.check().unwrap());
        let mut bad = c.clone();
        bad.combiner[0].coeff = q.from_i64(3);
        assert!(!bad.check().unwrap());

        // Upper side and a constant value of 1.
        let up = h.reflect();
        let c = thr_complement_from_bounded(&up, fp(3)).unwrap();
        assert!(c.reflected && c.check().unwrap());
        let c = thr_complement_from_bounded(&h.complement(), fp(3)).unwrap();
        assert!(c.check().unwrap());
        assert!(thr_complement_from_bounded(&Spectrum::constant(18, false), q).is_err());
    }

    #[test]
    fn thr_complement_exhaustive_small() {
        // Every spectrum that is zero on the middle third with radius in range.
        let n = 12;
        for mask in 0u32..1 << 10 {
            let h = Spectrum::from_fn(n, |w| {
                let pos = if w <= 4 { Some(w) } else if w >= 8 { Some(w - 3) } else { None };
                pos.is_some_and(|p| mask >> p & 1 == 1)
            });
            let r = bounded_radius_detail(&h);
            if r.k == 0 || r.k > n.div_ceil(3) {
                continue;
            }
            for field in [fp(2), fp(3), FieldSpec::rationals()] {
                match thr_complement_from_bounded(&h, field) {
                    Ok(c) => assert!(c.check().unwrap(), "{h}"),
                    Err(e) => assert!(matches!(e, Error::Range(_)), "{h}: {e}"),
                }
            }
        }
    }

    #[test]
    fn maj_from_general_majority() {
        let f = named_spectrum(NamedKind::Maj, 18).unwrap();
        for field in [fp(2), fp(3), FieldSpec::rationals()] {
            let r = maj_from_general(&f, field).unwrap();
            assert_eq!((r.m, r.m1), (2, 1));
            assert!(r.certificate.claimed_degree <= floor_log2(r.m).max(1));
            assert!(r.certificate.check().unwrap());
            let mut bad = r.certificate.clone();
            bad.combiner[0].factors[0].1 ^= true;
            assert!(!bad.check().unwrap());
        }
        let parity = Spectrum::from_fn(18, |w| w % 2 == 1);
        assert_eq!(maj_from_general(&parity, fp(3)).unwrap_err(), Error::Periodic(2));
    }

    #[test]
    fn maj_from_general_larger_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut built = 0;
        for _ in 0..200 {
            let n = 3 * rng.gen_range(6..=20);
            let bits: Vec<bool> = (0..=n).map(|_| rng.gen()).collect();
            let f = Spectrum::new(bits).unwrap();
            match maj_from_general(&f, fp(3)) {
                Ok(r) => {
                    assert!(r.certificate.claimed_degree <= floor_log2(r.m));
                    assert!(r.certificate.check().unwrap(), "{f}");
                    built += 1;
                }
                Err(e) => assert!(matches!(e, Error::Periodic(_)), "{f}: {e}"),
            }
        }
        assert!(built > 50);
    }
}
