"""Small chain-building helpers shared by the consistency and acceptance tests."""

from claimchain.core.chain import Claim, ClaimChain, KeyRing


def build_chain(n_blocks, store=None):
    chain = ClaimChain(store=store)
    for _ in range(n_blocks):
        chain.extend(public_data=b"pk")
    return chain


def reference_chain(owner, label, referenced_blocks, readers=(), skip=()):
    """Extend ``owner`` once per referenced block with a claim over its encoding.

    ``skip`` lists positions where the owner extends without the claim.
    """
    for i, ref in enumerate(referenced_blocks):
        if i in skip:
            owner.extend(public_data=b"pk")
            continue
        claim = Claim.make(label, ref.encode())
        owner.extend([claim], [(r, label) for r in readers], public_data=b"pk")
    return owner


def equivocation_scenario(n_blocks=4, fake_at=(1, 2)):
    """Owner A references B's chain, except at ``fake_at`` where it references a
    fake chain shown to another group. Returns (A, B, fake, honest_reader)."""
    b = build_chain(n_blocks)
    fake = build_chain(n_blocks)
    reader = KeyRing.generate()
    a = ClaimChain()
    real, forged = b.blocks(), fake.blocks()
    refs = [forged[i] if i in fake_at else real[i] for i in range(n_blocks)]
    reference_chain(a, b"B", refs, readers=[reader.dh.pk])
    return a, b, fake, reader
