//! Helpers for exact rationals: string serialisation and small utilities.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::Rational;

pub fn int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

pub fn frac(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Rational {
    Rational::new(p.into(), q.into())
}

/// Smallest positive rational `m` with every `m * x` an integer (inputs nonzero).
pub fn integral_multiplier<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> Rational {
    let mut den = BigInt::one();
    let mut num = BigInt::zero();
    for x in xs {
        den = den.lcm(x.denom());
        num = num.gcd(x.numer());
    }
    if num.is_zero() {
        return Rational::one();
    }
    Rational::new(den, num.abs())
}

pub fn to_u64(x: &Rational) -> Option<u64> {
    if !x.is_integer() || x.is_negative() {
        return None;
    }
    u64::try_from(x.to_integer()).ok()
}

pub mod as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<Rational>().map_err(serde::de::Error::custom)
    }
}

pub mod map_as_string {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::Rational;

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, Rational>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(k, &v.to_string())?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Rational>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| v.parse::<Rational>().map(|r| (k, r)).map_err(serde::de::Error::custom))
            .collect()
    }
}
