//! Serde helpers for integers that may not survive a trip through a JSON
//! reader using doubles: values above 2^53 are written as strings, and both
//! forms are accepted back.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

pub const SAFE_MAX: u64 = 1 << 53;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Wire {
    Num(u64),
    Str(String),
}

fn to_wire(v: u64) -> Wire {
    if v > SAFE_MAX {
        Wire::Str(v.to_string())
    } else {
        Wire::Num(v)
    }
}

fn from_wire<E: de::Error>(w: Wire) -> Result<u64, E> {
    match w {
        Wire::Num(v) => Ok(v),
        Wire::Str(s) => s.parse().map_err(|_| E::invalid_value(de::Unexpected::Str(&s), &"a decimal integer")),
    }
}

pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
    to_wire(*v).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    from_wire(Wire::deserialize(d)?)
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[u64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &x in v {
            seq.serialize_element(&to_wire(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Vec<u64>;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "a list of integers")
            }
            fn visit_seq<A: de::SeqAccess<'de>>(self, mut a: A) -> Result<Vec<u64>, A::Error> {
                let mut out = Vec::new();
                while let Some(w) = a.next_element::<Wire>()? {
                    out.push(from_wire(w)?);
                }
                Ok(out)
            }
        }
        d.deserialize_seq(V)
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct T {
        #[serde(with = "super")]
        a: u64,
        #[serde(with = "super::vec")]
        b: Vec<u64>,
    }

    #[test]
    fn large_values_become_strings() {
        let t = T { a: (1 << 53) + 1, b: vec![7, u64::MAX] };
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"a":"9007199254740993","b":[7,"18446744073709551615"]}"#);
        assert_eq!(serde_json::from_str::<T>(&s).unwrap(), t);
        let small: T = serde_json::from_str(r#"{"a":5,"b":["6"]}"#).unwrap();
        assert_eq!(small, T { a: 5, b: vec![6] });
        assert!(serde_json::from_str::<T>(r#"{"a":"x","b":[]}"#).is_err());
    }
}
