//! Prime-order group abstraction with two interchangeable instantiations:
//! ristretto255 for realistic runs, and a small Schnorr group (the order-11
//! subgroup of the multiplicative group mod 23) whose discrete logs a test
//! oracle can recover by exhaustive search.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar as CurveScalar;
use rand::{Rng, RngCore};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CryptoError;

/// Modulus of the toy Schnorr group.
pub const TOY_MODULUS: u64 = 23;
/// Prime order of the toy subgroup.
pub const TOY_ORDER: u64 = 11;
/// Generator of the order-11 subgroup of Z_23^* (2^11 = 2048 = 1 mod 23).
pub const TOY_GENERATOR: u64 = 2;

/// Big-endian bytes of the ristretto255 group order
/// (2^252 + 27742317777372353535851937790883648493).
const CURVE_ORDER_BE: [u8; 32] = [
    0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x00, 0x14, 0xde, 0xf9, 0xde, 0xa2, 0xf7, 0x9c, 0xd6, 0x58, 0x12, 0x63, 0x1a, 0x5c, 0xf5,
    0xd3, 0xed,
];

/// Which prime-order group a run operates in.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupId {
    /// ristretto255, a prime-order group over Curve25519.
    Curve,
    /// Order-11 subgroup of Z_23^*, small enough for exhaustive oracles.
    Toy,
}

impl GroupId {
    pub fn params(self) -> GroupParams {
        match self {
            GroupId::Curve => GroupParams {
                id: self,
                generator: GroupElement(ElementRepr::Curve(RISTRETTO_BASEPOINT_POINT)),
                order_be: CURVE_ORDER_BE.to_vec(),
                element_len: 32,
                scalar_len: 32,
            },
            GroupId::Toy => GroupParams {
                id: self,
                generator: GroupElement(ElementRepr::Toy(TOY_GENERATOR)),
                order_be: vec![TOY_ORDER as u8],
                element_len: 8,
                scalar_len: 8,
            },
        }
    }

    /// The fixed base point `P`.
    pub fn generator(self) -> GroupElement {
        self.params().generator
    }
}

impl std::fmt::Display for GroupId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupId::Curve => "curve",
            GroupId::Toy => "toy",
        })
    }
}

impl std::str::FromStr for GroupId {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "curve" => Ok(GroupId::Curve),
            "toy" => Ok(GroupId::Toy),
            _ => Err(CryptoError::UnknownGroup(s.to_string())),
        }
    }
}

/// Group identifier plus the constants callers need for encoding.
#[derive(Clone, Debug)]
pub struct GroupParams {
    pub id: GroupId,
    pub generator: GroupElement,
    /// Group order q as minimal big-endian bytes.
    pub order_be: Vec<u8>,
    /// Canonical element-encoding length in bytes.
    pub element_len: usize,
    /// Fixed scalar-encoding length in bytes.
    pub scalar_len: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ScalarRepr {
    Curve(CurveScalar),
    /// Value in [1, 10].
    Toy(u64),
}

/// An exponent in [1, q-1] of the active group. Zero is excluded: it would
/// map every element to the identity and degenerate the agreed key.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Scalar(ScalarRepr);

impl Scalar {
    pub fn group(&self) -> GroupId {
        match self.0 {
            ScalarRepr::Curve(_) => GroupId::Curve,
            ScalarRepr::Toy(_) => GroupId::Toy,
        }
    }

    /// Build a scalar from a small integer; must lie in [1, q-1].
    pub fn from_u64(group: GroupId, value: u64) -> Result<Self, CryptoError> {
        match group {
            GroupId::Curve => {
                if value == 0 {
                    return Err(CryptoError::ScalarOutOfRange);
                }
                Ok(Scalar(ScalarRepr::Curve(CurveScalar::from(value))))
            }
            GroupId::Toy => {
                if value == 0 || value >= TOY_ORDER {
                    return Err(CryptoError::ScalarOutOfRange);
                }
                Ok(Scalar(ScalarRepr::Toy(value)))
            }
        }
    }

    /// Fixed-length canonical encoding: 32 bytes (little-endian, reduced)
    /// for the curve, 8 bytes big-endian for the toy group.
    pub fn to_bytes(&self) -> Vec<u8> {
        match self.0 {
            ScalarRepr::Curve(s) => s.to_bytes().to_vec(),
            ScalarRepr::Toy(v) => v.to_be_bytes().to_vec(),
        }
    }

    pub fn from_bytes(group: GroupId, bytes: &[u8]) -> Result<Self, CryptoError> {
        match group {
            GroupId::Curve => {
                let arr: [u8; 32] = bytes.try_into().map_err(|_| CryptoError::BadLength {
                    what: "curve scalar",
                    expected: 32,
                })?;
                let scalar: Option<CurveScalar> = CurveScalar::from_canonical_bytes(arr).into();
                let scalar = scalar.ok_or(CryptoError::NonCanonicalScalar)?;
                if scalar == CurveScalar::ZERO {
                    return Err(CryptoError::ScalarOutOfRange);
                }
                Ok(Scalar(ScalarRepr::Curve(scalar)))
            }
            GroupId::Toy => {
                let arr: [u8; 8] = bytes.try_into().map_err(|_| CryptoError::BadLength {
                    what: "toy scalar",
                    expected: 8,
                })?;
                Scalar::from_u64(GroupId::Toy, u64::from_be_bytes(arr))
            }
        }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(group: GroupId, s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|_| CryptoError::BadHex {
            what: "scalar",
            value: s.to_string(),
        })?;
        Scalar::from_bytes(group, &bytes)
    }

    /// Decode with the group inferred from the encoding length (32 bytes
    /// means curve, 8 bytes means toy). The two lengths never overlap.
    pub fn from_bytes_any(bytes: &[u8]) -> Result<Self, CryptoError> {
        match bytes.len() {
            32 => Scalar::from_bytes(GroupId::Curve, bytes),
            8 => Scalar::from_bytes(GroupId::Toy, bytes),
            _ => Err(CryptoError::UnknownEncodingLength { what: "scalar" }),
        }
    }

    pub fn from_hex_any(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|_| CryptoError::BadHex {
            what: "scalar",
            value: s.to_string(),
        })?;
        Scalar::from_bytes_any(&bytes)
    }

    /// Toy-group scalars expose their integer value for exhaustive oracles.
    pub fn toy_value(&self) -> Option<u64> {
        match self.0 {
            ScalarRepr::Toy(v) => Some(v),
            ScalarRepr::Curve(_) => None,
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Scalar::from_hex_any(&s).map_err(D::Error::custom)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ElementRepr {
    Curve(RistrettoPoint),
    /// Least residue mod 23, a member of the order-11 subgroup.
    Toy(u64),
}

/// An element of the active prime-order group, held in validated form.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GroupElement(ElementRepr);

impl GroupElement {
    pub fn group(&self) -> GroupId {
        match self.0 {
            ElementRepr::Curve(_) => GroupId::Curve,
            ElementRepr::Toy(_) => GroupId::Toy,
        }
    }

    /// Canonical fixed-length encoding: 32-byte ristretto compression for the
    /// curve, 8-byte big-endian least residue for the toy group.
    pub fn encode(&self) -> Vec<u8> {
        match self.0 {
            ElementRepr::Curve(p) => p.compress().to_bytes().to_vec(),
            ElementRepr::Toy(v) => v.to_be_bytes().to_vec(),
        }
    }

    /// Decode and validate a canonical element encoding.
    pub fn decode(group: GroupId, bytes: &[u8]) -> Result<Self, CryptoError> {
        match group {
            GroupId::Curve => {
                let compressed =
                    CompressedRistretto::from_slice(bytes).map_err(|_| CryptoError::BadLength {
                        what: "curve element",
                        expected: 32,
                    })?;
                let point = compressed
                    .decompress()
                    .ok_or(CryptoError::InvalidElement)?;
                Ok(GroupElement(ElementRepr::Curve(point)))
            }
            GroupId::Toy => {
                let arr: [u8; 8] = bytes.try_into().map_err(|_| CryptoError::BadLength {
                    what: "toy element",
                    expected: 8,
                })?;
                let v = u64::from_be_bytes(arr);
                if v == 0 || v >= TOY_MODULUS || toy_pow(v, TOY_ORDER) != 1 {
                    return Err(CryptoError::InvalidElement);
                }
                Ok(GroupElement(ElementRepr::Toy(v)))
            }
        }
    }

    /// Decode with the group inferred from the encoding length (32 bytes
    /// means curve, 8 bytes means toy). The two lengths never overlap.
    pub fn decode_any(bytes: &[u8]) -> Result<Self, CryptoError> {
        match bytes.len() {
            32 => GroupElement::decode(GroupId::Curve, bytes),
            8 => GroupElement::decode(GroupId::Toy, bytes),
            _ => Err(CryptoError::UnknownEncodingLength {
                what: "group element",
            }),
        }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.encode())
    }

    pub fn from_hex_any(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|_| CryptoError::BadHex {
            what: "group element",
            value: s.to_string(),
        })?;
        GroupElement::decode_any(&bytes)
    }

    /// Toy-group elements expose their residue for exhaustive oracles.
    pub fn toy_value(&self) -> Option<u64> {
        match self.0 {
            ElementRepr::Toy(v) => Some(v),
            ElementRepr::Curve(_) => None,
        }
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        GroupElement::from_hex_any(&s).map_err(D::Error::custom)
    }
}

/// k·E in the active group.
///
/// Panics if `k` and `E` belong to different groups; every run operates in a
/// single configured group, so a mix is a harness bug, not a protocol event.
pub fn scalar_mult(k: &Scalar, element: &GroupElement) -> GroupElement {
    match (&k.0, &element.0) {
        (ScalarRepr::Curve(s), ElementRepr::Curve(p)) => {
            GroupElement(ElementRepr::Curve(s * p))
        }
        (ScalarRepr::Toy(s), ElementRepr::Toy(v)) => {
            GroupElement(ElementRepr::Toy(toy_pow(*v, *s)))
        }
        _ => panic!("scalar and element belong to different groups"),
    }
}

/// Uniform scalar in [1, q-1]; deterministic for a given RNG state.
pub fn random_scalar<R: RngCore>(group: GroupId, rng: &mut R) -> Scalar {
    match group {
        GroupId::Curve => loop {
            let mut wide = [0u8; 64];
            rng.fill_bytes(&mut wide);
            let s = CurveScalar::from_bytes_mod_order_wide(&wide);
            if s != CurveScalar::ZERO {
                return Scalar(ScalarRepr::Curve(s));
            }
        },
        GroupId::Toy => Scalar(ScalarRepr::Toy(rng.gen_range(1..TOY_ORDER))),
    }
}

/// Exponentiation in Z_23^* by square-and-multiply.
fn toy_pow(base: u64, exp: u64) -> u64 {
    let mut result = 1u64;
    let mut base = base % TOY_MODULUS;
    let mut exp = exp;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % TOY_MODULUS;
        }
        base = base * base % TOY_MODULUS;
        exp >>= 1;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn toy_generator_has_prime_order_eleven() {
        assert_eq!(toy_pow(TOY_GENERATOR, TOY_ORDER), 1);
        for k in 1..TOY_ORDER {
            assert_ne!(toy_pow(TOY_GENERATOR, k), 1, "order divides {k}");
        }
    }

    #[test]
    fn identity_scalar_fixes_the_generator() {
        for group in [GroupId::Curve, GroupId::Toy] {
            let one = Scalar::from_u64(group, 1).unwrap();
            let p = group.generator();
            assert_eq!(scalar_mult(&one, &p), p);
        }
    }

    #[test]
    fn toy_square_of_generator() {
        // 2^2 mod 23 = 4.
        let two = Scalar::from_u64(GroupId::Toy, 2).unwrap();
        let sq = scalar_mult(&two, &GroupId::Toy.generator());
        assert_eq!(sq.toy_value(), Some(4));
    }

    #[test]
    fn toy_encode_decode_round_trip_is_exhaustive() {
        let p = GroupId::Toy.generator();
        let mut element = p;
        for _ in 0..TOY_ORDER {
            let encoded = element.encode();
            assert_eq!(encoded.len(), 8);
            let decoded = GroupElement::decode(GroupId::Toy, &encoded).unwrap();
            assert_eq!(decoded, element);
            element = scalar_mult(&Scalar::from_u64(GroupId::Toy, 2).unwrap(), &element);
        }
    }

    #[test]
    fn toy_decode_rejects_non_members() {
        // 5 generates the full order-22 group, not the order-11 subgroup.
        for bad in [0u64, 5, 7, 22, 23, 24] {
            let err = GroupElement::decode(GroupId::Toy, &bad.to_be_bytes());
            assert!(err.is_err(), "residue {bad} must not decode");
        }
    }

    #[test]
    fn curve_encode_decode_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..64 {
            let k = random_scalar(GroupId::Curve, &mut rng);
            let e = scalar_mult(&k, &GroupId::Curve.generator());
            let decoded = GroupElement::decode(GroupId::Curve, &e.encode()).unwrap();
            assert_eq!(decoded, e);
        }
    }

    #[test]
    fn curve_decode_rejects_junk() {
        assert!(GroupElement::decode(GroupId::Curve, &[0xffu8; 32]).is_err());
        assert!(GroupElement::decode(GroupId::Curve, &[1u8; 16]).is_err());
    }

    #[test]
    fn random_scalar_is_deterministic_per_seed() {
        for group in [GroupId::Curve, GroupId::Toy] {
            let a = random_scalar(group, &mut ChaCha20Rng::seed_from_u64(99));
            let b = random_scalar(group, &mut ChaCha20Rng::seed_from_u64(99));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn toy_random_scalar_covers_every_residue() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut seen = [false; TOY_ORDER as usize];
        for _ in 0..10_000 {
            let s = random_scalar(GroupId::Toy, &mut rng);
            let v = s.toy_value().unwrap();
            assert!((1..TOY_ORDER).contains(&v));
            seen[v as usize] = true;
        }
        assert!(seen[1..].iter().all(|&s| s), "all residues 1..=10 drawn");
    }

    #[test]
    fn diffie_hellman_commutes_exhaustively_on_toy() {
        let p = GroupId::Toy.generator();
        for a in 1..TOY_ORDER {
            for b in 1..TOY_ORDER {
                let sa = Scalar::from_u64(GroupId::Toy, a).unwrap();
                let sb = Scalar::from_u64(GroupId::Toy, b).unwrap();
                assert_eq!(
                    scalar_mult(&sa, &scalar_mult(&sb, &p)),
                    scalar_mult(&sb, &scalar_mult(&sa, &p))
                );
            }
        }
    }

    #[test]
    fn scalar_rejects_zero_and_out_of_range() {
        assert!(Scalar::from_u64(GroupId::Toy, 0).is_err());
        assert!(Scalar::from_u64(GroupId::Toy, 11).is_err());
        assert!(Scalar::from_u64(GroupId::Curve, 0).is_err());
        assert!(Scalar::from_u64(GroupId::Toy, 10).is_ok());
    }

    #[test]
    fn scalar_hex_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for group in [GroupId::Curve, GroupId::Toy] {
            let s = random_scalar(group, &mut rng);
            assert_eq!(Scalar::from_hex(group, &s.to_hex()).unwrap(), s);
        }
    }

    #[test]
    fn curve_order_constant_matches_known_value() {
        let params = GroupId::Curve.params();
        assert_eq!(
            hex::encode(&params.order_be),
            "1000000000000000000000000000000014def9dea2f79cd65812631a5cf5d3ed"
        );
    }
}
