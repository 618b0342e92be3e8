//! Constants driving the threshold-tuple construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Prob};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsProfile {
    pub name: String,
    /// `A = a_per_p · p` in characteristic `p`; `None` when no formula bound is claimed.
    pub a_per_p: Option<f64>,
    pub b_per_p: Option<f64>,
    pub a_char0: Option<f64>,
    pub b_char0: Option<f64>,
    /// Hash range `r = ⌈r_multiplier · L⌉`.
    pub r_multiplier: f64,
    /// The small-error branch fires when `t ≤ L · small_error_divisor`, i.e. `ε ≤ 2^{-t/divisor}`.
    pub small_error_divisor: f64,
    pub subsample_ratio: f64,
    pub window_inner_multiplier: f64,
    pub window_outer_multiplier: f64,
    pub base_n: usize,
    /// Error of each characteristic-0 OR gadget in the hashing step; `None` means `ε/(2r)`.
    pub char0_gadget_error: Option<Prob>,
    /// Targets above `2^{-cap}` are tightened to `2^{-cap}` before the tuple recursion.
    pub error_cap_log2: Option<u32>,
}

impl ConstantsProfile {
    /// The constants as stated in the construction's proof.
    pub fn asymptotic() -> Self {
        ConstantsProfile {
            name: "asymptotic".into(),
            a_per_p: Some(6_400_000.0),
            b_per_p: Some(6_400_000.0),
            a_char0: Some(64_000_000.0),
            b_char0: Some(64_000_000.0),
            r_multiplier: 6_400_000.0,
            small_error_divisor: 160_000.0,
            subsample_ratio: 0.1,
            window_inner_multiplier: 20.0,
            window_outer_multiplier: 300.0,
            base_n: 10,
            char0_gadget_error: Some(Prob::ratio(1, 4)),
            error_cap_log2: Some(100),
        }
    }

    /// Scaled-down constants under which every branch runs at desk scale.
    pub fn practical() -> Self {
        ConstantsProfile {
            name: "practical".into(),
            a_per_p: None,
            b_per_p: None,
            a_char0: None,
            b_char0: None,
            r_multiplier: 4.0,
            small_error_divisor: 0.25,
            subsample_ratio: 0.1,
            window_inner_multiplier: 1.0,
            window_outer_multiplier: 30.0,
            base_n: 10,
            char0_gadget_error: None,
            error_cap_log2: None,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "asymptotic" => Ok(Self::asymptotic()),
            "practical" => Ok(Self::practical()),
            _ => Err(Error::Malformed(format!("unknown profile {name:?}"))),
        }
    }

    /// `(A, B)` for the given field, when the profile claims a formula bound.
    pub fn formula_constants(&self, field: FieldSpec) -> Option<(f64, f64)> {
        if field.is_char_zero() {
            Some((self.a_char0?, self.b_char0?))
        } else {
            let p = field.characteristic() as f64;
            Some((self.a_per_p? * p, self.b_per_p? * p))
        }
    }

    /// `A√(tL) + BL`, times `⌈log n⌉` in characteristic 0.
    pub fn formula_bound(&self, field: FieldSpec, n: usize, t: usize, l: f64) -> Option<f64> {
        let (a, b) = self.formula_constants(field)?;
        let base = a * (t as f64 * l).sqrt() + b * l;
        Some(if field.is_char_zero() { base * ceil_log2(n).max(1) as f64 } else { base })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let positive = [self.r_multiplier, self.small_error_divisor, self.window_outer_multiplier];
        if positive.iter().any(|&v| !(v > 0.0)) || !(self.window_inner_multiplier >= 0.0) {
            return Err(Error::Range(format!("profile {:?} has a non-positive constant", self.name)));
        }
        if !(self.subsample_ratio > 0.0 && self.subsample_ratio < 1.0) {
            return Err(Error::Range("subsample ratio must lie in (0,1)".into()));
        }
        if self.base_n < 1 || (self.base_n as f64 * self.subsample_ratio) < 1.0 {
            return Err(Error::Range("base_n too small for the subsample ratio".into()));
        }
        Ok(())
    }
}

/// `⌈log2 n⌉` for `n ≥ 1`, and 0 for `n ≤ 1`.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptotic_constants_scale_with_p() {
        let p = ConstantsProfile::asymptotic();
        assert_eq!(p.formula_constants(FieldSpec::new(3).unwrap()), Some((19_200_000.0, 19_200_000.0)));
        assert_eq!(p.formula_constants(FieldSpec::rationals()), Some((64e6, 64e6)));
        assert_eq!(ConstantsProfile::practical().formula_constants(FieldSpec::new(2).unwrap()), None);
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!([1, 2, 3, 4, 5, 8, 9].map(ceil_log2), [0, 1, 2, 2, 3, 3, 4]);
    }

    #[test]
    fn profiles_validate_and_round_trip() {
        for p in [ConstantsProfile::asymptotic(), ConstantsProfile::practical()] {
            p.validate().unwrap();
            let back: ConstantsProfile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
            assert_eq!(back, p);
        }
    }
}
