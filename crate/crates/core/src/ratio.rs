//! Exact count ratios with half-up decimal rendering.
//!
//! Percentages in the report tables are computed from integer counts, so
//! rounding is done in integer arithmetic and never depends on binary
//! floating point representation.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    /// `None` when the denominator is zero.
    pub fn new(num: u64, den: u64) -> Option<Self> {
        (den > 0).then_some(Self { num, den })
    }

    pub fn fraction(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.fraction()
    }

    /// `100 * num / den` rounded half-up to `decimals` places.
    pub fn percent_fixed(&self, decimals: u32) -> String {
        let scale = 10u128.pow(decimals);
        let num = self.num as u128 * 100 * scale;
        let den = self.den as u128;
        let rounded = (2 * num + den) / (2 * den);
        fixed_from_scaled(rounded, decimals)
    }

    pub fn complement(&self) -> Self {
        Self {
            num: self.den - self.num.min(self.den),
            den: self.den,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn fixed_from_scaled(scaled: u128, decimals: u32) -> String {
    if decimals == 0 {
        return scaled.to_string();
    }
    let scale = 10u128.pow(decimals);
    format!(
        "{}.{:0width$}",
        scaled / scale,
        scaled % scale,
        width = decimals as usize
    )
}

/// Half-up rendering of a real value. Negative values round half away
/// from zero.
pub fn fixed(value: f64, decimals: u32) -> String {
    if !value.is_finite() {
        return if value > 0.0 { "inf".into() } else if value < 0.0 { "-inf".into() } else { "nan".into() };
    }
    let scale = 10f64.powi(decimals as i32);
    let scaled = (value.abs() * scale).round();
    let body = fixed_from_scaled(scaled as u128, decimals);
    if value < 0.0 && scaled > 0.0 {
        format!("-{body}")
    } else {
        body
    }
}


#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;

    fn cents(s: &str) -> i64 {
        s.replace('.', "").parse().unwrap()
    }

    proptest! {
        #[test]
        fn percent_matches_float_reference(num in 0u64..5000, extra in 0u64..5000) {
            let r = Ratio::new(num, num + extra + 1).unwrap();
            let shown: f64 = r.percent_fixed(2).parse().unwrap();
            prop_assert!((shown - r.percent()).abs() <= 0.005 + 1e-9);
        }

        #[test]
        fn complement_sums_to_within_one_unit(num in 0u64..5000, extra in 0u64..5000) {
            let r = Ratio::new(num, num + extra + 1).unwrap();
            let sum = cents(&r.percent_fixed(2)) + cents(&r.complement().percent_fixed(2));
            prop_assert!((10000..=10001).contains(&sum));
            // a tie in the third decimal is the only way to overshoot
            if sum == 10001 {
                prop_assert_eq!((r.num as u128 * 100_000) % r.den as u128, 0);
            }
        }
    }
}
