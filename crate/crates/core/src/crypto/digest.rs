use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use super::CryptoError;

/// Byte length of every hash output and derived credential.
pub const DIGEST_LEN: usize = 32;

/// A 32-byte hash output. Equality is byte-wise.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    /// The all-zero digest, the identity of `xor`.
    pub const ZERO: Digest = Digest([0u8; DIGEST_LEN]);

    pub fn from_bytes(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    /// Byte-wise exclusive-or with another digest.
    pub fn xor(&self, other: &Digest) -> Digest {
        let mut out = [0u8; DIGEST_LEN];
        for (i, b) in out.iter_mut().enumerate() {
            *b = self.0[i] ^ other.0[i];
        }
        Digest(out)
    }

    /// Copy with the byte at `index` inverted. Used by tamper harnesses.
    pub fn with_flipped_byte(&self, index: usize) -> Digest {
        let mut bytes = self.0;
        bytes[index] ^= 0xff;
        Digest(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|_| CryptoError::BadHex {
            what: "digest",
            value: s.to_string(),
        })?;
        let arr: [u8; DIGEST_LEN] = bytes.try_into().map_err(|_| CryptoError::BadLength {
            what: "digest",
            expected: DIGEST_LEN,
        })?;
        Ok(Digest(arr))
    }
}

impl std::fmt::Debug for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl std::fmt::Display for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Digest::from_hex(&s).map_err(D::Error::custom)
    }
}

/// SHA-256 of `data`. The single fixed hash behind every `h(.)` in the scheme.
pub fn hash(data: &[u8]) -> Digest {
    let out: [u8; DIGEST_LEN] = Sha256::digest(data).into();
    Digest(out)
}

/// Unambiguous serialization of an ordered field list: each field is emitted
/// as a 4-byte big-endian length followed by the field bytes. Length-prefixing
/// keeps the mapping injective even for variable-length identities.
pub fn concat(fields: &[&[u8]]) -> Vec<u8> {
    let total: usize = fields.iter().map(|f| 4 + f.len()).sum();
    let mut out = Vec::with_capacity(total);
    for field in fields {
        out.extend_from_slice(&(field.len() as u32).to_be_bytes());
        out.extend_from_slice(field);
    }
    out
}

/// `hash(concat(fields))`, the shape of every multi-field `h(a||b||..)`.
pub fn hash_fields(fields: &[&[u8]]) -> Digest {
    hash(&concat(fields))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_deterministic() {
        assert_eq!(hash(b"payload"), hash(b"payload"));
    }

    #[test]
    fn hash_matches_published_empty_input_vector() {
        // SHA-256("") from the FIPS 180-4 test vectors.
        assert_eq!(
            hash(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn hash_distinguishes_single_byte_inputs() {
        let a = hash(b"a");
        let b = hash(b"b");
        assert_ne!(a, b);
        assert_eq!(
            a.to_hex(),
            "ca978112ca1bbdcafac231b39a23dc4da786eff8147c4e72b9807785afee48bb"
        );
        assert_eq!(
            b.to_hex(),
            "3e23e8160039594a33894f6564e1b1348bbd7a0088d42c4acb73eeaed59c009d"
        );
    }

    #[test]
    fn xor_self_is_zero() {
        let x = hash(b"x");
        assert_eq!(x.xor(&x), Digest::ZERO);
    }

    #[test]
    fn xor_zero_is_identity() {
        let x = hash(b"x");
        assert_eq!(x.xor(&Digest::ZERO), x);
    }

    #[test]
    fn xor_is_an_involution() {
        let a = hash(b"a");
        let b = hash(b"b");
        assert_eq!(a.xor(&b).xor(&b), a);
    }

    #[test]
    fn concat_of_empty_list_is_empty() {
        assert!(concat(&[]).is_empty());
    }

    #[test]
    fn concat_single_field_layout() {
        assert_eq!(concat(&[b"AB"]), vec![0, 0, 0, 2, 0x41, 0x42]);
    }

    #[test]
    fn concat_forbids_field_boundary_ambiguity() {
        let split = concat(&[b"A", b"B"]);
        assert_ne!(split, concat(&[b"AB", b""]));
        assert_ne!(split, concat(&[b"", b"AB"]));
        assert_ne!(split, concat(&[b"AB"]));
    }

    #[test]
    fn hex_round_trip() {
        let d = hash(b"round trip");
        assert_eq!(Digest::from_hex(&d.to_hex()).unwrap(), d);
    }

    #[test]
    fn from_hex_rejects_truncated_input() {
        let err = Digest::from_hex("abcd").unwrap_err();
        assert!(matches!(err, CryptoError::BadLength { .. }));
    }

    #[test]
    fn from_hex_rejects_non_hex_characters() {
        let err = Digest::from_hex(&"zz".repeat(32)).unwrap_err();
        assert!(matches!(err, CryptoError::BadHex { .. }));
    }
}
