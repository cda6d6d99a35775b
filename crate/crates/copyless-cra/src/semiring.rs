//! Commutative semirings with explicit infinity sentinels.
//!
//! Three instances are provided: the natural-number semiring `(N, +, *, 0, 1)`,
//! the max-plus semiring `(N u {-inf}, max, +, -inf, 0)` and the min-plus
//! semiring `(N u {+inf}, min, +, +inf, 0)`. Values are 64-bit integers;
//! overflow is a checked error, never wraparound.

use std::fmt;
use std::str::FromStr;

use crate::error::{CraError, Result};

/// A semiring element: a finite integer or one of the two infinities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemiringValue {
    MinusInf,
    Int(i64),
    PlusInf,
}

impl SemiringValue {
    pub fn is_finite(self) -> bool {
        matches!(self, SemiringValue::Int(_))
    }
}

impl fmt::Display for SemiringValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemiringValue::MinusInf => write!(f, "-inf"),
            SemiringValue::PlusInf => write!(f, "+inf"),
            SemiringValue::Int(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for SemiringValue {
    type Err = CraError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "-inf" => Ok(SemiringValue::MinusInf),
            "+inf" | "inf" => Ok(SemiringValue::PlusInf),
            _ => s
                .parse::<i64>()
                .map(SemiringValue::Int)
                .map_err(|_| CraError::Semantic(format!("invalid semiring value `{s}`"))),
        }
    }
}

/// Which of the three supported semirings a machine works over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemiringSpec {
    /// `(N, +, *, 0, 1)`
    Nat,
    /// `(N u {-inf}, max, +, -inf, 0)`
    MaxPlus,
    /// `(N u {+inf}, min, +, +inf, 0)`
    MinPlus,
}

impl SemiringSpec {
    pub fn name(self) -> &'static str {
        match self {
            SemiringSpec::Nat => "nat",
            SemiringSpec::MaxPlus => "max-plus",
            SemiringSpec::MinPlus => "min-plus",
        }
    }

    pub fn zero(self) -> SemiringValue {
        match self {
            SemiringSpec::Nat => SemiringValue::Int(0),
            SemiringSpec::MaxPlus => SemiringValue::MinusInf,
            SemiringSpec::MinPlus => SemiringValue::PlusInf,
        }
    }

    pub fn one(self) -> SemiringValue {
        match self {
            SemiringSpec::Nat => SemiringValue::Int(1),
            SemiringSpec::MaxPlus | SemiringSpec::MinPlus => SemiringValue::Int(0),
        }
    }

    /// Checks that `v` belongs to the carrier of this semiring.
    pub fn validate(self, v: SemiringValue) -> Result<()> {
        let ok = match self {
            SemiringSpec::Nat => matches!(v, SemiringValue::Int(n) if n >= 0),
            SemiringSpec::MaxPlus => {
                matches!(v, SemiringValue::MinusInf | SemiringValue::Int(_))
            }
            SemiringSpec::MinPlus => {
                matches!(v, SemiringValue::PlusInf | SemiringValue::Int(_))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(CraError::InvalidValue(v.to_string(), self.name().to_string()))
        }
    }

    /// The semiring sum `a (+) b`.
    pub fn add(self, a: SemiringValue, b: SemiringValue) -> Result<SemiringValue> {
        use SemiringValue::*;
        match self {
            SemiringSpec::Nat => match (a, b) {
                (Int(x), Int(y)) => x.checked_add(y).map(Int).ok_or(CraError::Overflow),
                _ => Err(CraError::InvalidValue(
                    format!("{a} (+) {b}"),
                    self.name().to_string(),
                )),
            },
            SemiringSpec::MaxPlus => Ok(a.max(b)),
            SemiringSpec::MinPlus => Ok(a.min(b)),
        }
    }

    /// The semiring product `a (*) b`. In the tropical semirings this is
    /// numeric addition with infinity absorbing toward the zero element.
    pub fn mul(self, a: SemiringValue, b: SemiringValue) -> Result<SemiringValue> {
        use SemiringValue::*;
        match self {
            SemiringSpec::Nat => match (a, b) {
                (Int(x), Int(y)) => x.checked_mul(y).map(Int).ok_or(CraError::Overflow),
                _ => Err(CraError::InvalidValue(
                    format!("{a} (*) {b}"),
                    self.name().to_string(),
                )),
            },
            SemiringSpec::MaxPlus => match (a, b) {
                (MinusInf, _) | (_, MinusInf) => Ok(MinusInf),
                (Int(x), Int(y)) => x.checked_add(y).map(Int).ok_or(CraError::Overflow),
                _ => Err(CraError::InvalidValue(
                    format!("{a} (*) {b}"),
                    self.name().to_string(),
                )),
            },
            SemiringSpec::MinPlus => match (a, b) {
                (PlusInf, _) | (_, PlusInf) => Ok(PlusInf),
                (Int(x), Int(y)) => x.checked_add(y).map(Int).ok_or(CraError::Overflow),
                _ => Err(CraError::InvalidValue(
                    format!("{a} (*) {b}"),
                    self.name().to_string(),
                )),
            },
        }
    }

    /// `a (*) a (*) ... (*) a`, `n` factors; `n = 0` yields the unit.
    pub fn pow(self, a: SemiringValue, n: u32) -> Result<SemiringValue> {
        let mut acc = self.one();
        for _ in 0..n {
            acc = self.mul(acc, a)?;
        }
        Ok(acc)
    }
}

impl FromStr for SemiringSpec {
    type Err = CraError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nat" => Ok(SemiringSpec::Nat),
            "max-plus" => Ok(SemiringSpec::MaxPlus),
            "min-plus" => Ok(SemiringSpec::MinPlus),
            _ => Err(CraError::Semantic(format!("unknown semiring `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use SemiringValue::Int;

    #[test]
    fn max_plus_basics() {
        let s = SemiringSpec::MaxPlus;
        assert_eq!(s.add(Int(3), Int(5)).unwrap(), Int(5));
        assert_eq!(s.mul(Int(3), Int(5)).unwrap(), Int(8));
        assert_eq!(s.mul(SemiringValue::MinusInf, Int(7)).unwrap(), SemiringValue::MinusInf);
        assert_eq!(s.add(Int(4), s.zero()).unwrap(), Int(4));
    }

    #[test]
    fn nat_basics() {
        let s = SemiringSpec::Nat;
        assert_eq!(s.add(Int(2), Int(3)).unwrap(), Int(5));
        assert_eq!(s.mul(Int(2), Int(3)).unwrap(), Int(6));
        assert_eq!(s.mul(Int(7), s.zero()).unwrap(), Int(0));
        assert_eq!(s.mul(Int(7), s.one()).unwrap(), Int(7));
    }

    #[test]
    fn nat_overflow_is_checked() {
        let s = SemiringSpec::Nat;
        assert_eq!(s.mul(Int(i64::MAX), Int(2)), Err(CraError::Overflow));
        assert_eq!(s.add(Int(i64::MAX), Int(1)), Err(CraError::Overflow));
    }

    fn sample(spec: SemiringSpec, rng: &mut ChaCha8Rng) -> SemiringValue {
        // Occasionally produce the zero element to exercise annihilation.
        if rng.gen_ratio(1, 10) {
            spec.zero()
        } else {
            Int(rng.gen_range(0..1000))
        }
    }

    #[test]
    fn semiring_axioms_by_sampling() {
        for spec in [SemiringSpec::Nat, SemiringSpec::MaxPlus, SemiringSpec::MinPlus] {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..1000 {
                let a = sample(spec, &mut rng);
                let b = sample(spec, &mut rng);
                let c = sample(spec, &mut rng);
                // commutativity
                assert_eq!(spec.add(a, b), spec.add(b, a));
                assert_eq!(spec.mul(a, b), spec.mul(b, a));
                // associativity
                assert_eq!(
                    spec.add(spec.add(a, b).unwrap(), c),
                    spec.add(a, spec.add(b, c).unwrap())
                );
                assert_eq!(
                    spec.mul(spec.mul(a, b).unwrap(), c),
                    spec.mul(a, spec.mul(b, c).unwrap())
                );
                // distributivity
                assert_eq!(
                    spec.mul(a, spec.add(b, c).unwrap()),
                    spec.add(spec.mul(a, b).unwrap(), spec.mul(a, c).unwrap())
                );
                // identities and annihilation
                assert_eq!(spec.add(a, spec.zero()).unwrap(), a);
                assert_eq!(spec.mul(a, spec.one()).unwrap(), a);
                assert_eq!(spec.mul(a, spec.zero()).unwrap(), spec.zero());
            }
        }
    }

    #[test]
    fn value_round_trip() {
        for s in ["-inf", "+inf", "0", "42", "-3"] {
            let v: SemiringValue = s.parse().unwrap();
            let back = v.to_string();
            if s == "inf" {
                continue;
            }
            assert_eq!(back, s);
        }
    }
}
