//! Closed-form probabilistic-degree bounds, the Bernstein tail, and an audit of the degree
//! recurrence behind the threshold-tuple construction.

use serde::{Deserialize, Serialize};

use crate::error::{range, Result};
use crate::field::{FieldSpec, Prob};
use crate::probpoly::ConstantsProfile;
use crate::symfun::{standard_decomposition, Spectrum};

/// Row of the case table selected by `per(g)` and `B(h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    /// `per(g) = 1` and `B(h) = 0`: `f` is constant.
    Constant,
    /// `per(g) > 1` and not a power of the characteristic.
    PeriodNotCharPower,
    /// `per(g)` a power of the characteristic and `B(h) = 0`.
    CharPowerPeriod,
    /// Every other combination.
    Mixed,
}

impl BoundCase {
    pub fn label(&self) -> &'static str {
        match self {
            BoundCase::Constant => "constant",
            BoundCase::PeriodNotCharPower => "period_not_char_power",
            BoundCase::CharPowerPeriod => "char_power_period",
            BoundCase::Mixed => "mixed",
        }
    }
}

pub const ALLOWANCE: &str = "up to hidden polylog factors";

/// Normalized magnitudes of the upper and lower bounds (all hidden constants set to 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub case: BoundCase,
    pub n: usize,
    pub eps: Prob,
    pub characteristic: u32,
    pub per_g: usize,
    pub b_h: usize,
    /// `log2(1/ε)`.
    pub log_inv_eps: f64,
    pub upper: f64,
    /// Omitted when ε lies outside `[2^−n, 1/3]`.
    pub lower: Option<f64>,
    /// Upper magnitude for `g` alone.
    pub upper_g: f64,
    /// Upper magnitude for `h` alone.
    pub upper_h: f64,
    pub allowance: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

/// Case table evaluated at `f`, `ε` and the field's characteristic.
pub fn predicted_bounds(f: &Spectrum, eps: &Prob, field: FieldSpec) -> Result<BoundReport> {
    if eps.is_zero() {
        return range("ε must be positive");
    }
    let d = standard_decomposition(f)?;
    let n = f.n();
    let (per, b) = (d.period_g, d.bounded_radius_h);
    let l = eps.log2_inv();
    let full = (n as f64 * l).sqrt();
    let power = field.char_power_exponent(per).is_some();
    let case = match (per, b) {
        (1, 0) => BoundCase::Constant,
        _ if per > 1 && !power => BoundCase::PeriodNotCharPower,
        (_, 0) => BoundCase::CharPowerPeriod,
        _ => BoundCase::Mixed,
    };
    let h_part = if b >= 1 { (b as f64 * l).sqrt() + l } else { 0.0 };
    let magnitude = match case {
        BoundCase::Constant => 0.0,
        BoundCase::PeriodNotCharPower => full,
        BoundCase::CharPowerPeriod => full.min(per as f64),
        BoundCase::Mixed => full.min(per as f64 + h_part),
    };
    let upper_g = match per {
        1 => 0.0,
        _ if power => per as f64,
        _ => full,
    };
    let in_range = eps.to_f64() <= 1.0 / 3.0 && l <= n as f64;
    let (lower, note) = if in_range {
        (Some(magnitude), None)
    } else {
        (None, Some(format!("lower bound needs ε ∈ [2^-{n}, 1/3]")))
    };
    Ok(BoundReport {
        case,
        n,
        eps: eps.clone(),
        characteristic: field.characteristic(),
        per_g: per,
        b_h: b,
        log_inv_eps: l,
        upper: magnitude,
        lower,
        upper_g,
        upper_h: h_part,
        allowance: ALLOWANCE.to_string(),
        note,
    })
}

/// `2 exp(−θ² / (2mq(1−q) + 2θ/3))`, a bound on `Pr[|X − mq| > θ]` for `X ~ Bin(m, q)`.
pub fn bernstein_tail(m: u64, q: f64, theta: f64) -> Result<f64> {
    if m == 0 {
        return range("m must be at least 1");
    }
    if !(0.0..=1.0).contains(&q) {
        return range(format!("q = {q} outside [0,1]"));
    }
    if !(theta > 0.0) {
        return range(format!("θ = {theta} must be positive"));
    }
    let var = 2.0 * m as f64 * q * (1.0 - q);
    Ok(2.0 * (-theta * theta / (var + 2.0 * theta / 3.0)).exp())
}

/// One inequality `lhs ≤ rhs` of the degree chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceAudit {
    pub t: u64,
    pub log_inv_eps: f64,
    pub characteristic: u32,
    pub a: f64,
    pub b: f64,
    /// Each step of the chain as written.
    pub links: Vec<Link>,
    /// Every link holds.
    pub literal: bool,
    /// The exact children bound, combined as in the construction, is at most the parent bound.
    pub closes: bool,
}

/// Lower end of the inductive regime: `t > 160000 log(1/ε)`.
pub const REGIME_T_FACTOR: f64 = 160_000.0;
/// The regime needs `ε ≤ 2^−100`.
pub const REGIME_LOG_INV_EPS: f64 = 100.0;

const REL_TOL: f64 = 1e-12;

fn link(name: &str, lhs: f64, rhs: f64) -> Link {
    Link { name: name.to_string(), lhs, rhs, holds: lhs <= rhs + REL_TOL * rhs.abs().max(1.0) }
}

/// Evaluates every step of the degree recurrence at `(t, ε)` with the profile's constants.
///
/// In characteristic 0 the `log n` factor multiplies both constants; the children have `n/10`
/// inputs, so the chain is the same inequality with scaled constants and is audited as such.
pub fn recurrence_audit_detail(
    t: u64,
    eps: &Prob,
    profile: &ConstantsProfile,
    field: FieldSpec,
) -> Result<RecurrenceAudit> {
    let (a, b) = profile
        .formula_constants(field)
        .ok_or_else(|| crate::Error::Range(format!("profile {:?} states no formula constants", profile.name)))?;
    if eps.is_zero() {
        return range("ε must be positive");
    }
    let l = eps.log2_inv();
    let tf = t as f64;
    if l < REGIME_LOG_INV_EPS {
        return range(format!("ε = 2^-{l} is above 2^-100"));
    }
    if tf <= REGIME_T_FACTOR * l {
        return range(format!("t = {t} is not above 160000·log(1/ε) = {}", REGIME_T_FACTOR * l));
    }
    let l4 = l + 2.0;
    let s = (tf * l).sqrt();
    let child_plus = tf / 10.0 + 20.0 * s;
    let child_minus = tf / 10.0 - 20.0 * s;
    let pair = a * (child_plus.sqrt() + child_minus.sqrt()) * l4.sqrt() + 2.0 * b * l4;
    let t_prime = a * (tf / 10.0 * l4).sqrt() + b * l4;
    let e_deg = 600.0 * s;
    let parent = a * s + b * l;

    let inner_exact = tf * tf / 100.0 - 400.0 * tf * l;
    let inner_stated = tf * tf / 100.0 - tf * tf / 400.0;
    let c94 = 0.94;
    let links = vec![
        link(
            "pair_square",
            a * (child_plus.sqrt() + child_minus.sqrt()) * l4.sqrt(),
            a * ((tf / 5.0 + 2.0 * inner_exact.sqrt()) * l4).sqrt(),
        ),
        link("inner_t_squared_over_400", inner_exact, inner_stated),
        link("two_plus_sqrt3", (2.0 + 3f64.sqrt()) / 10.0, 0.38),
        link("max_e_t_prime", e_deg.max(t_prime), t_prime),
        link("sqrt38_plus_sqrt10", 0.38f64.sqrt() + 0.1f64.sqrt(), c94),
        link(
            "log4_split",
            c94 * a * (tf * l4).sqrt() + 3.0 * b * l4,
            c94 * a * (tf * l + 2.0 * tf).sqrt() + 3.0 * b * l + 6.0 * b,
        ),
        link(
            "step_95",
            c94 * a * (tf * l + 2.0 * tf).sqrt() + 3.0 * b * l + 6.0 * b,
            0.95 * a * s + 4.0 * b * l,
        ),
        link("final", 0.95 * a * s + 4.0 * b * l, parent),
    ];
    let literal = links.iter().all(|k| k.holds);
    let closes = pair + e_deg.max(t_prime) <= parent;
    Ok(RecurrenceAudit {
        t,
        log_inv_eps: l,
        characteristic: field.characteristic(),
        a,
        b,
        links,
        literal,
        closes,
    })
}

/// Whether every link of the chain holds at `(t, ε)`.
pub fn recurrence_audit(t: u64, eps: &Prob, profile: &ConstantsProfile, field: FieldSpec) -> Result<bool> {
    Ok(recurrence_audit_detail(t, eps, profile, field)?.literal)
}

/// `count` points `(t, k)` with `ε = 2^−k`, log-spaced over `k ∈ [100, k_max]` and
/// `t / (160000 k) ∈ (1, ratio_max]`.
pub fn regime_sweep(count: usize, k_max: u32, ratio_max: f64) -> Vec<(u64, u32)> {
    let side = (count as f64).sqrt().ceil() as usize;
    let mut out = Vec::with_capacity(count);
    'outer: for i in 0..side {
        let frac = if side > 1 { i as f64 / (side - 1) as f64 } else { 0.0 };
        let k = (100f64 * (k_max as f64 / 100.0).powf(frac)).round() as u32;
        for j in 0..side {
            if out.len() == count {
                break 'outer;
            }
            let rf = if side > 1 { j as f64 / (side - 1) as f64 } else { 0.0 };
            let ratio = ratio_max.powf(rf);
            let t = (REGIME_T_FACTOR * k as f64 * ratio).floor() as u64 + 1;
            out.push((t, k));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::{named_spectrum, NamedKind};
    use proptest::prelude::*;

    fn fp(p: u32) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    #[test]
    fn case_table_examples() {
        let eps: Prob = "1/8".parse().unwrap();
        let maj = named_spectrum(NamedKind::Maj, 30).unwrap();
        let r = predicted_bounds(&maj, &eps, fp(2)).unwrap();
        assert_eq!(r.case, BoundCase::PeriodNotCharPower);
        assert!((r.upper - (30f64 * 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(r.lower, Some(r.upper));

        let r = predicted_bounds(&Spectrum::constant(9, true), &eps, fp(3)).unwrap();
        assert_eq!((r.case, r.upper, r.lower), (BoundCase::Constant, 0.0, Some(0.0)));

        let parity = Spectrum::from_fn(12, |w| w % 2 == 1);
        let r = predicted_bounds(&parity, &eps, fp(2)).unwrap();
        assert_eq!((r.case, r.upper), (BoundCase::CharPowerPeriod, 2.0));
        let r = predicted_bounds(&parity, &eps, fp(3)).unwrap();
        assert_eq!(r.case, BoundCase::PeriodNotCharPower);

        let or = named_spectrum(NamedKind::Or, 40).unwrap();
        let r = predicted_bounds(&or, &eps, FieldSpec::rationals()).unwrap();
        assert_eq!((r.case, r.b_h), (BoundCase::Mixed, 1));
        assert!((r.upper - (1.0 + 3f64.sqrt() + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_range() {
        let or = named_spectrum(NamedKind::Or, 10).unwrap();
        let r = predicted_bounds(&or, &"1/2".parse().unwrap(), fp(2)).unwrap();
        assert!(r.lower.is_none() && r.note.is_some());
        let r = predicted_bounds(&or, &Prob::pow2_neg(11), fp(2)).unwrap();
        assert!(r.lower.is_none());
        let r = predicted_bounds(&or, &Prob::pow2_neg(10), fp(2)).unwrap();
        assert!(r.lower.is_some());
        assert!(predicted_bounds(&or, &Prob::zero(), fp(2)).is_err());
    }

    #[test]
    fn bernstein_examples() {
        let v = bernstein_tail(100, 0.5, 30.0).unwrap();
        assert!((v - 2.0 * (-900.0f64 / 70.0).exp()).abs() < 1e-18);
        assert!((v - 5.3e-6).abs() < 1e-7);
        let z = bernstein_tail(50, 0.0, 4.0).unwrap();
        assert!((z - 2.0 * (-6.0f64).exp()).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for k in 1..60 {
            let v = bernstein_tail(1000, 0.3, k as f64 * 5.0).unwrap();
            assert!(v <= last);
            last = v;
        }
        assert!(last < 1e-20);
        assert!(bernstein_tail(0, 0.5, 1.0).is_err());
        assert!(bernstein_tail(5, 1.5, 1.0).is_err());
        assert!(bernstein_tail(5, 0.5, 0.0).is_err());
    }

    #[test]
    fn recurrence_examples() {
        let asym = ConstantsProfile::asymptotic();
        let eps = Prob::pow2_neg(200);
        let a = recurrence_audit_detail(10_000_000_000, &eps, &asym, fp(2)).unwrap();
        assert!(a.closes);
        // The t²/400 substitution needs t ≤ 160000·log(1/ε), the opposite of the regime.
        let bad: Vec<&str> = a.links.iter().filter(|k| !k.holds).map(|k| k.name.as_str()).collect();
        assert_eq!(bad, ["inner_t_squared_over_400"]);
        assert!(!a.literal);
        let edge = recurrence_audit_detail(160_001 * 200, &eps, &asym, fp(2)).unwrap();
        assert!(edge.closes);
        assert!(recurrence_audit(10_000_000, &eps, &asym, fp(2)).is_err());
        assert!(recurrence_audit(10_000_000_000, &Prob::pow2_neg(50), &asym, fp(2)).is_err());
        assert!(recurrence_audit(10_000_000_000, &eps, &ConstantsProfile::practical(), fp(2)).is_err());
    }

    #[test]
    fn recurrence_closes_across_the_regime() {
        let asym = ConstantsProfile::asymptotic();
        for field in [fp(2), fp(3), fp(5), FieldSpec::rationals()] {
            for (t, k) in regime_sweep(400, 4000, 1e6) {
                let a = recurrence_audit_detail(t, &Prob::pow2_neg(k), &asym, field).unwrap();
                assert!(a.closes, "t={t} k={k}");
                let sound = a.links.iter().filter(|l| l.name != "inner_t_squared_over_400").all(|l| l.holds);
                assert!(sound, "{:?}", a.links);
            }
        }
    }

    #[test]
    fn weakened_constants_break_the_recurrence() {
        let mut weak = ConstantsProfile::asymptotic();
        weak.a_per_p = weak.a_per_p.map(|a| a / 20.0);
        let found = regime_sweep(400, 4000, 1e6).into_iter().any(|(t, k)| {
            !recurrence_audit_detail(t, &Prob::pow2_neg(k), &weak, fp(2)).unwrap().closes
        });
        assert!(found);
    }

    #[test]
    fn sweep_stays_in_regime() {
        let pts = regime_sweep(10_000, 10_000, 1e8);
        assert_eq!(pts.len(), 10_000);
        for (t, k) in pts {
            assert!(k >= 100 && t as f64 > REGIME_T_FACTOR * k as f64);
        }
    }

    #[test]
    fn threshold_formula_within_allowance() {
        let asym = ConstantsProfile::asymptotic();
        for field in [fp(2), fp(3), FieldSpec::rationals()] {
            let (a, b) = asym.formula_constants(field).unwrap();
            for n in [30usize, 100, 1000] {
                for t in [1, n / 10, n / 4] {
                    for k in [2u32, 5, 10] {
                        let f = named_spectrum(NamedKind::Thr(t), n).unwrap();
                        let r = predicted_bounds(&f, &Prob::pow2_neg(k), field).unwrap();
                        let formula = asym.formula_bound(field, n, t, k as f64).unwrap();
                        let polylog = crate::probpoly::ceil_log2(n).max(1) as f64;
                        assert!(formula <= a.max(b) * polylog * (r.upper_g + r.upper_h).max(1.0) + 1e-6);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn upper_is_monotone(n in 9usize..200, k in 1u32..40, dk in 0u32..10) {
            let f = named_spectrum(NamedKind::Thr(3), n).unwrap();
            let a = predicted_bounds(&f, &Prob::pow2_neg(k), fp(2)).unwrap();
            let b = predicted_bounds(&f, &Prob::pow2_neg(k + dk), fp(2)).unwrap();
            prop_assert!(b.upper >= a.upper);
            let c = predicted_bounds(&named_spectrum(NamedKind::Thr(3), n + 3).unwrap(), &Prob::pow2_neg(k), fp(2)).unwrap();
            prop_assert!(c.upper >= a.upper);
        }
    }
}
