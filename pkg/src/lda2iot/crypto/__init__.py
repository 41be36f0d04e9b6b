"""Elliptic-curve arithmetic, hashing and payload encryption."""
from .curve import (
    INFINITY,
    P256,
    TOY23,
    CurveParams,
    Point,
    check_point,
    curve_by_name,
    decode_point,
    encode_point,
    load_curve,
    point_add,
    point_neg,
    point_sub,
    scalar_mult,
)
from .primitives import (
    DIGEST_BYTES,
    NONCE_BYTES,
    TAG_BYTES,
    H,
    PayloadCiphertext,
    counting,
    ecc_decrypt_point,
    ecc_encrypt_point,
    hash_message,
    hybrid_decrypt,
    hybrid_encrypt,
    keygen,
    make_rng,
    pad_to,
    random_nonce,
    xor_bytes,
)
