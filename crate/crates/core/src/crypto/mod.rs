//! Cryptographic primitives shared by every layer above: a fixed-width hash
//! digest with injective multi-field hashing, and a prime-order group
//! abstraction with a realistic and a deliberately tiny instantiation.

mod digest;
mod group;

pub use digest::{concat, hash, hash_fields, Digest, DIGEST_LEN};
pub use group::{
    random_scalar, scalar_mult, GroupElement, GroupId, GroupParams, Scalar, TOY_GENERATOR,
    TOY_MODULUS, TOY_ORDER,
};

/// Failures while decoding or constructing primitive values.
#[derive(Debug, thiserror::Error)]
pub enum CryptoError {
    #[error("{what} is not valid hex: {value:?}")]
    BadHex { what: &'static str, value: String },

    #[error("{what} must be exactly {expected} bytes")]
    BadLength { what: &'static str, expected: usize },

    #[error("cannot infer group for {what}: expected 8 bytes (toy) or 32 bytes (curve)")]
    UnknownEncodingLength { what: &'static str },

    #[error("unknown group {0:?}, expected \"curve\" or \"toy\"")]
    UnknownGroup(String),

    #[error("scalar must lie in [1, q-1]")]
    ScalarOutOfRange,

    #[error("scalar encoding is not canonical")]
    NonCanonicalScalar,

    #[error("encoding is not a valid group element")]
    InvalidElement,
}
