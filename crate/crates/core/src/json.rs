//! JSON helpers shared by the serializable types.
//!
//! Output goes through `serde_json::Value`, whose objects are ordered maps, so
//! keys come out sorted. Floats use the shortest round-trip representation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Serializes `value` with sorted keys and compact float formatting.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Encoding(e.to_string()))?;
    serde_json::to_string_pretty(&v).map_err(|e| Error::Encoding(e.to_string()))
}

/// `Complex64` as a `[re, im]` pair.
pub mod complex {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// `Option<Complex64>` as `[re, im]` or `null`.
pub mod opt_complex {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        z.map(|z| [z.re, z.im]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Complex64>, D::Error> {
        let v = Option::<[f64; 2]>::deserialize(d)?;
        Ok(v.map(|[re, im]| Complex64::new(re, im)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_are_sorted() {
        let mut m = HashMap::new();
        m.insert("zeta", 1.5);
        m.insert("alpha", 0.1);
        m.insert("mid", 2.0);
        let s = to_canonical_string(&m).unwrap();
        let a = s.find("alpha").unwrap();
        let b = s.find("mid").unwrap();
        let c = s.find("zeta").unwrap();
        assert!(a < b && b < c);
        assert!(s.contains("0.1") && !s.contains("0.10000"));
    }
}
