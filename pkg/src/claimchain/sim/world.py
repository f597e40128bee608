"""Discrete-event simulation of in-band key distribution.

Every message carries the sender's chain data. In the private setting that
is a ClaimChain fragment (new blocks plus the tree nodes a recipient needs
to read the cross-references it was introduced to); in the public setting
it is the sender's key block plus every view the sender holds. Senders
encrypt only when every recipient's key resolves without conflict from the
evidence they hold.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

from claimchain.core.chain import (
    REJECTED,
    Block,
    Claim,
    ClaimChain,
    KeyRing,
    MissingBlock,
    get_claim,
    resolve_latest,
    validate_blocks,
    verify_genesis,
    walk_chain,
)
from claimchain.core.claims import CLAIM_BODY_SIZE, unpad_body
from claimchain.core.consistency import (
    CannotProve,
    ConsistencyProof,
    check_consistency,
    prove_consistency,
)
from claimchain.crypto.group import Point
from claimchain.crypto.rand import random_bytes
from claimchain.crypto.symmetric import dh_shared_secret
from claimchain.encoding import DecodeError, pack, unpack
from claimchain.store import (
    ContentStore,
    IntegrityError,
    StoreView,
    decode_fragment,
    encode_fragment,
)

log = logging.getLogger(__name__)

MODES = ("private", "public")
ENC_KEY_SIZE = 32


@dataclass(frozen=True)
class SimConfig:
    mode: str = "private"
    rotation_period: int = 200
    claim_body_size: int = CLAIM_BODY_SIZE
    seed: int = 0
    window: int = 1000
    #: readers audit every owner on access gaps, not only flagged ones
    audit_all: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.claim_body_size != CLAIM_BODY_SIZE:
            raise ValueError(f"claim bodies use a fixed {CLAIM_BODY_SIZE}-byte envelope")
        if self.rotation_period < 1 or self.window < 1:
            raise ValueError("rotation period and window must be positive")


@dataclass
class MetricsRecord:
    seq: int
    sender: str
    recipients: tuple[str, ...]
    encrypted: bool
    diversity: dict[str, int]
    bytes_attached: int
    self_storage: int
    gossip_storage: int
    extended: bool = False
    #: recipient -> hash of the key block the sender resolved
    resolved: dict[str, bytes] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "sender": self.sender,
            "recipients": list(self.recipients),
            "encrypted": self.encrypted,
            "diversity": self.diversity,
            "bytes_attached": self.bytes_attached,
            "self_storage": self.self_storage,
            "gossip_storage": self.gossip_storage,
            "extended": self.extended,
        }


class Agent:
    """State common to both settings."""

    def __init__(self, name: str):
        self.name = name
        self.label = name.encode()
        self.chain = ClaimChain()
        self.enc_key = random_bytes(ENC_KEY_SIZE)
        self.gossip = ContentStore()
        #: freshest block known for each user; never forgets a user
        self.views: dict[str, Block] = {}
        #: sent ledger: peer -> store hashes already shipped to that peer
        self.sent: dict[str, set[bytes]] = {}
        #: latest validated head of each user who wrote to us directly
        self.heads: dict[str, bytes] = {}
        self.n_sent = 0

    # knowledge

    def learn(self, user: str, block: Block) -> None:
        if user == self.name:
            return
        self.gossip.put(block.encode())
        old = self.views.get(user)
        if old is None:
            self.views[user] = block
            return
        if old.hash == block.hash:
            return
        res = resolve_latest([old, block], self.gossip)
        if res.chosen is not None:
            self.views[user] = res.chosen

    def evidence(self, user: str, world: "World") -> list[Block]:
        raise NotImplementedError

    def rotate(self) -> None:
        self.enc_key = random_bytes(ENC_KEY_SIZE)
        self.chain.keyring.rotate(sig=True)

    # receipt

    def _validate_sender(self, sender: str, head: bytes, overlay) -> list[Block] | None:
        """New blocks of ``sender`` ending at ``head``, or ``None`` if invalid."""
        prev_hash = self.heads.get(sender)
        if prev_hash == head:
            return []
        prev = None if prev_hash is None else Block.decode(self.gossip.get(prev_hash))
        try:
            blocks = walk_chain(head, overlay, stop_index=prev.index if prev else 0)
        except MissingBlock:
            return None
        if prev is not None:
            if blocks[0].hash != prev.hash or len(blocks) < 2:
                return None
        elif not verify_genesis(blocks[0]):
            return None
        if not validate_blocks(blocks):
            return None
        return blocks[1:] if prev is not None else blocks


class PrivateAgent(Agent):
    def __init__(self, name: str):
        super().__init__(name)
        self.dh_keys: dict[str, Point] = {}
        #: reader -> users whose cross-references the reader was granted
        self.grants: dict[str, set[str]] = {}
        #: owner -> users whose cross-references the owner introduced us to
        self.introductions: dict[str, set[str]] = {}
        #: what the latest own block holds
        self.block_refs: dict[str, bytes] = {}
        self.block_acl: set[tuple[str, str]] = set()
        #: (owner, user) -> (owner block index, referenced block) of our last read
        self.reads: dict[tuple[str, str], tuple[int, Block]] = {}
        self._claim_cache: dict[tuple[bytes, str], Block | None] = {}
        self._secrets: dict[bytes, bytes] = {}

    def _secret(self, pk: Point) -> bytes:
        key = pk.to_bytes()
        s = self._secrets.get(key)
        if s is None:
            s = self._secrets[key] = dh_shared_secret(self.chain.keyring.dh.sk, pk)
        return s

    def read_claim(self, owner_head: bytes, user: str, world: "World") -> Block | None:
        key = (owner_head, user)
        if key in self._claim_cache:
            return self._claim_cache[key]
        raw = self.gossip.get(owner_head)
        found = None
        if raw is not None:
            block = Block.decode(raw)
            got = get_claim(self.chain.keyring.dh.sk, user.encode(), owner_head, self.gossip,
                            secret=self._secret(block.payload.pk_dh))
            if got is REJECTED:
                world.rejected += 1
            elif got is not None:
                try:
                    found = Block.decode(got)
                except (DecodeError, ValueError):
                    world.rejected += 1
        self._claim_cache[key] = found
        return found

    def evidence(self, user: str, world: "World") -> list[Block]:
        ev = [self.views[user]] if user in self.views else []
        for owner, head in self.heads.items():
            # capabilities only ever come with an introduction
            if owner == user or user not in self.introductions.get(owner, ()):
                continue
            b = self.read_claim(head, user, world)
            if b is not None:
                ev.append(b)
        return ev

    def shared_users(self) -> set[str]:
        return {u for users in self.grants.values() for u in users}

    def needs_extension(self, recipients) -> bool:
        # fresher views alone do not trigger a block; they ride along with the next one
        for r in recipients:
            if r not in self.dh_keys:
                continue
            for u in self.grants.get(r, ()):
                if u in self.views and (u not in self.block_refs or (r, u) not in self.block_acl):
                    return True
        return False

    def claims_and_acl(self):
        users = sorted(u for u in self.shared_users() if u in self.views)
        claims = [Claim.make(u, self.views[u].encode()) for u in users]
        refs = {u: self.views[u].hash for u in users}
        acl = sorted((r, u) for r, us in self.grants.items() if r in self.dh_keys
                     for u in us if u in refs)
        return claims, refs, acl

    def extend(self) -> None:
        claims, refs, acl = self.claims_and_acl()
        self.chain.extend(claims, [(self.dh_keys[r], u.encode()) for r, u in acl], self.enc_key)
        self.block_refs = refs
        self.block_acl = set(acl)

    def prove(self, user: str, own_blocks: list[Block], allowed: list[Block]) -> ConsistencyProof | None:
        records = [r for recs in self.chain.records.values() for r in recs.values()]
        try:
            return prove_consistency(self.chain.keyring.vrf.sk, user.encode(), own_blocks, allowed,
                                     records, self.chain.store)
        except CannotProve as exc:
            log.debug("%s cannot prove consistency for %s: %s", self.name, user, exc)
            return None


class Equivocator(PrivateAgent):
    """Shows one group of readers the real chain of ``target`` and the other a
    fake one, swapping groups in the 0,1,1,0 pattern of the textbook attack."""

    def __init__(self, base: PrivateAgent, target: str):
        self.__dict__.update(base.__dict__)
        self.target = target
        self.fake = ClaimChain()
        self.fake.extend([], [], random_bytes(ENC_KEY_SIZE))
        self.gossip.put(self.fake.block().encode())
        self.groups: dict[str, int] = {}
        self.n_ext = 0

    def phase(self) -> int:
        return 0 if self.n_ext % 4 in (0, 3) else 1

    def claims_and_acl(self):
        claims, refs, acl = super().claims_and_acl()
        if self.target not in refs:
            return claims, refs, acl
        for r, u in acl:
            if u == self.target and r not in self.groups:
                self.groups[r] = len(self.groups) % 2
        phase = self.phase()
        if phase == 1:
            fake = self.fake.block()
            refs[self.target] = fake.hash
            claims = [Claim.make(self.target, fake.encode()) if c.label == self.target.encode() else c
                      for c in claims]
        acl = [(r, u) for r, u in acl if u != self.target or self.groups[r] == phase]
        return claims, refs, acl

    def extend(self) -> None:
        super().extend()
        self.n_ext += 1

    def needs_extension(self, recipients) -> bool:
        # the attacker keeps rotating access on every message
        return True

    def prove(self, user, own_blocks, allowed):
        honest = super().prove(user, own_blocks, allowed)
        if honest is not None:
            return honest
        # forge a proof over the blocks actually committed to
        committed = {}
        for recs in self.chain.records.values():
            rec = recs.get(user.encode())
            if rec is not None:
                b = Block.decode(unpad_body(rec.body))
                committed[b.hash] = b
        records = [r for recs in self.chain.records.values() for r in recs.values()]
        try:
            return prove_consistency(self.chain.keyring.vrf.sk, user.encode(), own_blocks,
                                     list(committed.values()), records, self.chain.store)
        except CannotProve:
            return None


class PublicAgent(Agent):
    def __init__(self, name: str):
        super().__init__(name)
        #: user -> source -> that source's latest view of user
        self.sources: dict[str, dict[str, Block]] = {}
        self.sent_views: dict[str, dict[str, bytes]] = {}

    def evidence(self, user: str, world: "World") -> list[Block]:
        ev = [self.views[user]] if user in self.views else []
        ev.extend(b for s, b in self.sources.get(user, {}).items() if s != user)
        return ev


class World:
    def __init__(self, config: SimConfig | None = None):
        self.config = config or SimConfig()
        self.agents: dict[str, Agent] = {}
        self.bytes_sent: Counter = Counter()
        self.bytes_received: Counter = Counter()
        self.quarantined = 0
        self.rejected = 0
        self.conflicts = 0
        self.audits = 0
        self.audit_unresolved = 0
        #: owners whose readers audit access gaps
        self.audited: set[str] = set()
        #: (reader, owner) pairs that ran an audit after regaining access
        self.regranted: set[tuple[str, str]] = set()
        #: (reader, owner) pairs whose audit exposed equivocation
        self.detections: set[tuple[str, str]] = set()
        # blocks are immutable, so decoding once per hash is enough
        self._decoded: dict[bytes, Block] = {}

    def block(self, h: bytes, store) -> Block | None:
        b = self._decoded.get(h)
        if b is None:
            raw = store.get(h)
            if raw is None:
                return None
            b = self._decoded[h] = Block.decode(raw)
        return b

    def agent(self, name: str) -> Agent:
        a = self.agents.get(name)
        if a is None:
            cls = PrivateAgent if self.config.mode == "private" else PublicAgent
            a = self.agents[name] = cls(name)
        return a

    # --- sending ----------------------------------------------------------

    def _resolve(self, a: Agent, recipients):
        diversity, resolved = {}, {}
        for r in recipients:
            ev = a.evidence(r, self)
            diversity[r] = len(ev)
            res = resolve_latest(ev, a.gossip)
            if res.chosen is not None:
                resolved[r] = res.chosen
            elif res.conflict is not None:
                self.conflicts += 1
        for r, b in resolved.items():
            a.learn(r, b)
        return diversity, resolved

    def _private_attachment(self, a: PrivateAgent, recipients) -> tuple[bytes, set[bytes]]:
        chain = a.chain
        needed: dict[str, list[bytes]] = {}
        for r in recipients:
            hashes = list(chain.block_hashes)
            users = [u.encode() for u in sorted(a.grants.get(r, ())) if (r, u) in a.block_acl]
            if users:
                hashes += chain.relevant_hashes(a.dh_keys[r], users)
            sent = a.sent.setdefault(r, set())
            needed[r] = [h for h in hashes if h not in sent]
        union = list(dict.fromkeys(h for hs in needed.values() for h in hs))
        return pack(chain.head, chain.store.export_subset(union)), set(union)

    def _public_attachment(self, a: PublicAgent, recipients) -> tuple[bytes, set[bytes]]:
        own = list(a.chain.block_hashes)
        manifest_entries: dict[str, bytes] = {}
        hashes: list[bytes] = []
        for r in recipients:
            sent = a.sent.setdefault(r, set())
            sent_views = a.sent_views.setdefault(r, {})
            hashes += [h for h in own if h not in sent]
            for u, b in a.views.items():
                if u != r and sent_views.get(u) != b.hash:
                    manifest_entries[u] = b.hash
                    if b.hash not in sent:
                        hashes.append(b.hash)
        manifest = pack(*(pack(u.encode(), h) for u, h in sorted(manifest_entries.items())))
        union = list(dict.fromkeys(hashes))
        items = []
        for h in union:
            v = a.chain.store.get(h)
            items.append((h, v if v is not None else a.gossip.get(h)))
        return pack(a.chain.head, manifest, encode_fragment(items)), set(union)

    def step(self, event) -> MetricsRecord:
        cfg = self.config
        a = self.agent(event.sender)
        recipients = tuple(dict.fromkeys(r for r in event.recipients if r != event.sender))
        for r in recipients:
            self.agent(r)
        a.n_sent += 1
        rotate = a.chain.head is not None and a.n_sent % cfg.rotation_period == 0

        diversity, resolved = self._resolve(a, recipients)
        encrypted = bool(recipients) and len(resolved) == len(recipients)

        extended = False
        if cfg.mode == "private":
            assert isinstance(a, PrivateAgent)
            if len(recipients) > 1:
                for r in recipients:
                    a.grants.setdefault(r, set()).update(x for x in recipients if x != r)
            if rotate:
                a.rotate()
            if a.chain.head is None or rotate or a.needs_extension(recipients):
                a.extend()
                extended = True
            attachment, shipped = self._private_attachment(a, recipients)
        else:
            assert isinstance(a, PublicAgent)
            if rotate:
                a.rotate()
            if a.chain.head is None or rotate:
                a.chain.extend([], [], a.enc_key)
                extended = True
            attachment, shipped = self._public_attachment(a, recipients)

        for r in recipients:
            a.sent.setdefault(r, set()).update(shipped)
            self.bytes_sent[(a.name, r)] += len(attachment)
            others = tuple(x for x in recipients if x != r)
            self.deliver(a.name, self.agents[r], attachment, others)
        if cfg.mode == "public":
            for r in recipients:
                sv = a.sent_views.setdefault(r, {})
                sv.update({u: b.hash for u, b in a.views.items() if u != r})

        return MetricsRecord(
            event.seq, a.name, recipients, encrypted, diversity, len(attachment),
            a.chain.store.bytes_stored, a.gossip.bytes_stored, extended,
            {r: b.hash for r, b in resolved.items()},
        )

    # --- receiving --------------------------------------------------------

    def deliver(self, sender: str, r: Agent, attachment: bytes, co_recipients) -> None:
        self.bytes_received[(sender, r.name)] += len(attachment)
        try:
            if isinstance(r, PrivateAgent):
                head, frag = unpack(attachment, 2)
                manifest = None
            else:
                head, manifest, frag = unpack(attachment, 3)
            tmp = ContentStore()
            tmp.import_fragment(frag)
        except (DecodeError, IntegrityError) as exc:
            log.info("%s quarantined a malformed fragment from %s: %s", r.name, sender, exc)
            self.quarantined += 1
            return
        new_blocks = r._validate_sender(sender, head, StoreView(tmp, r.gossip))
        if new_blocks is None:
            log.info("%s quarantined an invalid chain fragment from %s", r.name, sender)
            self.quarantined += 1
            return
        r.gossip.import_fragment(frag)
        r.heads[sender] = head
        top = self.block(head, r.gossip)
        r.learn(sender, top)
        if isinstance(r, PrivateAgent):
            self._ingest_private(sender, r, top, co_recipients)
        else:
            self._ingest_public(sender, r, manifest, tmp)

    def _ingest_public(self, sender: str, r: PublicAgent, manifest: bytes, tmp: ContentStore) -> None:
        for entry in unpack(manifest):
            u_raw, h = unpack(entry, 2)
            u = u_raw.decode()
            if u == r.name:
                continue
            known = r.sources.setdefault(u, {})
            if sender in known and known[sender].hash == h:
                continue
            b = self.block(h, r.gossip)
            if b is None:
                continue
            known[sender] = b
            r.learn(u, b)

    def _ingest_private(self, sender: str, r: PrivateAgent, top: Block, co_recipients) -> None:
        r.dh_keys[sender] = top.payload.pk_dh
        intro = r.introductions.setdefault(sender, set())
        intro.update(co_recipients)
        for u in sorted(intro):
            ref = r.read_claim(top.hash, u, self)
            if ref is None:
                continue
            self._check_reference(r, sender, u, top, ref)
            r.learn(u, ref)

    def _check_reference(self, r: PrivateAgent, owner: str, user: str, top: Block, ref: Block) -> None:
        prev = r.reads.get((owner, user))
        r.reads[(owner, user)] = (top.index, ref)
        if prev is None:
            return
        prev_index, prev_ref = prev
        if prev_ref.hash != ref.hash:
            res = resolve_latest([prev_ref, ref], StoreView(r.gossip, self._chain_store(user)))
            if res.conflict is not None:
                self.conflicts += 1
        if top.index > prev_index + 1 and (self.config.audit_all or owner in self.audited):
            self._audit(r, owner, user, prev_index, prev_ref, top, ref)

    def _chain_store(self, user: str):
        # the referenced user serves their own chain to anyone who asks
        a = self.agents.get(user)
        return a.chain.store if a is not None else None

    def _audit(self, r: PrivateAgent, owner_name: str, user: str, j: int, ref_j: Block,
               top: Block, ref_k: Block) -> None:
        self.audits += 1
        self.regranted.add((r.name, owner_name))
        owner = self.agents[owner_name]
        assert isinstance(owner, PrivateAgent)
        own_blocks = walk_chain(top.hash, r.gossip, stop_index=j + 1)[:-1]
        lo, hi = sorted((ref_j, ref_k), key=lambda b: b.index)
        try:
            allowed = walk_chain(hi.hash, StoreView(r.gossip, owner.gossip, self._chain_store(user)),
                                 stop_index=lo.index)
        except MissingBlock:
            self.audit_unresolved += 1
            return
        if allowed[0].hash != lo.hash:
            self.detections.add((r.name, owner_name))
            return
        proof = owner.prove(user, own_blocks, allowed)
        if proof is None or not check_consistency(user.encode(), own_blocks, allowed, proof, r.gossip):
            log.info("%s detected equivocation by %s about %s", r.name, owner_name, user)
            self.detections.add((r.name, owner_name))


def inject_equivocator(world: World, attacker: str, target: str) -> World:
    """Turn ``attacker`` into an equivocator about ``target`` and have its
    readers audit it whenever they regain access."""
    if world.config.mode != "private":
        raise ValueError("equivocation needs the private setting")
    base = world.agent(attacker)
    world.agents[attacker] = Equivocator(base, target)
    world.audited.add(attacker)
    return world
