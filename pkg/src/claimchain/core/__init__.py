from claimchain.core.chain import (
    REJECTED,
    Block,
    BlockPayload,
    Claim,
    ClaimChain,
    ClaimRecord,
    ConflictReport,
    KeyMismatch,
    KeyRing,
    MissingBlock,
    MissingClaimForAcl,
    Resolution,
    ValidationResult,
    extend_chain,
    get_claim,
    resolve_latest,
    validate_blocks,
    validate_chain,
    verify_genesis,
    walk_chain,
)
from claimchain.core.claims import (
    CLAIM_BODY_SIZE,
    CapabilityEntry,
    EncodedClaim,
    dec_cap,
    dec_claim,
    enc_cap,
    enc_claim,
    pad_body,
    unpad_body,
)
from claimchain.core.consistency import (
    CannotProve,
    ConsistencyProof,
    check_consistency,
    prove_consistency,
)
