//! Deterministic seed derivation.
//!
//! Every stochastic step draws from a ChaCha stream whose seed is the SHA-256
//! of a master seed and a list of labels, so results do not depend on thread
//! scheduling or iteration order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a child seed from `parent` and an ordered list of labels.
pub fn derive(parent: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(parent.to_le_bytes());
    for l in labels {
        h.update((l.len() as u64).to_le_bytes());
        h.update(l.as_bytes());
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shorthand for `rng(derive(parent, labels))`.
pub fn rng_for(parent: u64, labels: &[&str]) -> ChaCha8Rng {
    rng(derive(parent, labels))
}

/// Serde adapter for `u64` seeds in formats limited to signed integers
/// (TOML): values above `i64::MAX` are written as decimal strings, and
/// either form is accepted on input.
pub mod serde_seed {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(i) => s.serialize_i64(i),
            Err(_) => s.serialize_str(&v.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Str(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
    struct S {
        #[serde(with = "serde_seed")]
        seed: u64,
    }

    #[test]
    fn seeds_survive_toml() {
        for seed in [0, 42, i64::MAX as u64, u64::MAX] {
            let text = toml::to_string(&S { seed }).unwrap();
            assert_eq!(toml::from_str::<S>(&text).unwrap(), S { seed });
        }
        assert_eq!(toml::from_str::<S>("seed = \"18446744073709551615\"").unwrap().seed, u64::MAX);
    }

    #[test]
    fn labels_are_length_prefixed() {
        assert_ne!(derive(1, &["ab", "c"]), derive(1, &["a", "bc"]));
        assert_eq!(derive(7, &["x"]), derive(7, &["x"]));
        assert_ne!(derive(7, &["x"]), derive(8, &["x"]));
    }
}
