from claimchain.crypto.group import (
    DIGEST_SIZE,
    ORDER,
    POINT_SIZE,
    GroupParams,
    Point,
    base_mul,
    hash_family,
    hash_to_group,
    hash_to_scalar,
    params,
    pedersen_commit,
    random_scalar,
)
from claimchain.crypto.proofs import (
    ClaimPublics,
    NotAMember,
    SpkTranscript,
    VrfOutput,
    claim_spk_prove,
    claim_spk_verify,
    or_membership_prove,
    or_membership_verify,
    vrf_eval,
    vrf_keygen,
    vrf_verify,
)
from claimchain.crypto.rand import random_bytes, seeded
from claimchain.crypto.symmetric import (
    AEAD_OVERHEAD,
    KeyPair,
    aead_decrypt,
    aead_encrypt,
    dh_shared_secret,
    new_symmetric_key,
    sign,
    verify,
)

__all__ = [
    "AEAD_OVERHEAD", "DIGEST_SIZE", "ORDER", "POINT_SIZE", "ClaimPublics", "GroupParams",
    "KeyPair", "NotAMember", "Point", "SpkTranscript", "VrfOutput", "aead_decrypt",
    "aead_encrypt", "base_mul", "claim_spk_prove", "claim_spk_verify", "dh_shared_secret",
    "hash_family", "hash_to_group", "hash_to_scalar", "new_symmetric_key",
    "or_membership_prove", "or_membership_verify", "params", "pedersen_commit",
    "random_bytes", "random_scalar", "seeded", "sign", "verify", "vrf_eval", "vrf_keygen", "vrf_verify",
]
