"""Schema contracts, capability tokens and the hash-chained audit log."""
from __future__ import annotations

import hashlib
import hmac
import json
import re
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import List, Mapping, Optional, Sequence, Tuple

from ..bigraph import canonical_dumps

ZERO_HASH = "0" * 64
NAME_ITEM_RE = re.compile(r"[a-z0-9-]+(\.[a-z0-9-]+)*\Z")
MAX_STRING = 256
MAX_NAMES = 64
FIELD_TYPES = ("string", "integer", "boolean", "name-list")


class Tier(IntEnum):
    LEAF = 0
    DELEGATED = 1
    CENTRAL = 2

    @classmethod
    def parse(cls, text: str) -> "Tier":
        return cls[text.upper()]

    def __str__(self):
        return self.name.lower()


def sha256_hex(data: str) -> str:
    return hashlib.sha256(data.encode("utf-8")).hexdigest()


# -- schema contracts -----------------------------------------------------------

@dataclass(frozen=True)
class FieldSpec:
    name: str
    type: str


@dataclass(frozen=True)
class SchemaContract:
    schema_id: str
    fields: Tuple[FieldSpec, ...]

    @classmethod
    def from_json(cls, d: dict) -> "SchemaContract":
        fields = tuple(FieldSpec(f["name"], f["type"]) for f in d["fields"])
        names = [f.name for f in fields]
        if len(set(names)) != len(names):
            raise ValueError(f"schema {d['id']}: duplicate field names")
        for f in fields:
            if f.type not in FIELD_TYPES:
                raise ValueError(f"schema {d['id']}: field {f.name} has unknown type {f.type}")
        return cls(d["id"], fields)

    def to_json(self) -> dict:
        return {"id": self.schema_id, "fields": [{"name": f.name, "type": f.type} for f in self.fields]}

    @property
    def field_names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def type_of(self, name: str) -> Optional[str]:
        for f in self.fields:
            if f.name == name:
                return f.type
        return None

    def mismatch(self, payload: Mapping[str, object]) -> Optional[str]:
        """Name of the first offending field, or None if ``payload`` conforms."""
        for key in sorted(payload):
            if self.type_of(key) is None:
                return key
        for f in self.fields:
            if f.name not in payload or not _has_type(payload[f.name], f.type):
                return f.name
        return None


def _has_type(value, kind: str) -> bool:
    if kind == "string":
        return isinstance(value, str) and len(value) <= MAX_STRING
    if kind == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "boolean":
        return isinstance(value, bool)
    if kind == "name-list":
        return (isinstance(value, list) and len(value) <= MAX_NAMES
                and all(isinstance(x, str) and NAME_ITEM_RE.match(x) for x in value))
    return False


BUILTIN_CONTRACTS = {
    c.schema_id: c
    for c in (
        SchemaContract("unknown-state-v1", (FieldSpec("descriptor", "string"),)),
        SchemaContract("uncertainty-v1", (FieldSpec("action", "string"),
                                          FieldSpec("confidence_pct", "integer"))),
        SchemaContract("scope-violation-v1", (FieldSpec("action", "string"),
                                              FieldSpec("refs", "name-list"))),
    )
}


# -- capability tokens ----------------------------------------------------------

@dataclass(frozen=True)
class CapabilityToken:
    agent: str
    scope: str
    schemas: Tuple[str, ...]
    issued: int
    expiry: int
    signature: str = ""

    def body(self) -> dict:
        return {"agent": self.agent, "scope": self.scope, "schemas": list(self.schemas),
                "issued": self.issued, "expiry": self.expiry}

    def canonical_bytes(self) -> bytes:
        return canonical_dumps(self.body()).encode("utf-8")

    def to_json(self) -> dict:
        return dict(self.body(), signature=self.signature)

    @classmethod
    def from_json(cls, d: dict) -> "CapabilityToken":
        return cls(d["agent"], d["scope"], tuple(d["schemas"]), d["issued"], d["expiry"], d["signature"])

    def verify(self, secret: bytes) -> bool:
        expected = hmac.new(secret, self.canonical_bytes(), hashlib.sha256).hexdigest()
        return hmac.compare_digest(expected, self.signature)


def mint_token(agent: str, scope: str, schemas: Sequence[str], issued: int, expiry: int,
               secret: bytes) -> CapabilityToken:
    if expiry < issued:
        raise ValueError("token would expire before it is issued")
    token = CapabilityToken(agent, scope, tuple(sorted(set(schemas))), issued, expiry)
    sig = hmac.new(secret, token.canonical_bytes(), hashlib.sha256).hexdigest()
    return replace(token, signature=sig)


# -- escalation messages --------------------------------------------------------

def payload_hash(payload: Mapping[str, object]) -> str:
    return sha256_hex(canonical_dumps(dict(payload)))


@dataclass(frozen=True)
class EscalationMessage:
    sender: str
    recipient: str
    round: int
    schema_id: str
    payload: Mapping[str, object]
    token: CapabilityToken
    payload_hash: str
    kind: str = "rule"

    @classmethod
    def build(cls, sender, recipient, round, schema_id, payload, token, kind="rule"):
        return cls(sender, recipient, round, schema_id, dict(payload), token, payload_hash(payload), kind)

    def to_json(self) -> dict:
        return {
            "from": self.sender, "to": self.recipient, "round": self.round,
            "schema_id": self.schema_id, "payload": dict(self.payload),
            "payload_hash": self.payload_hash, "kind": self.kind,
            "token": self.token.to_json(),
        }


@dataclass(frozen=True)
class Rejection:
    reason: str          # BadSignature | Expired | SchemaNotPermitted | TierViolation | SchemaMismatch | HashMismatch
    detail: str = ""

    def __str__(self):
        return f"{self.reason}({self.detail})" if self.detail else self.reason


def validate_escalation(msg: EscalationMessage, contracts: Mapping[str, SchemaContract],
                        secret: bytes, round: int,
                        tiers: Mapping[str, Tier]) -> Optional[Rejection]:
    """None when the message is acceptable, otherwise the first failed check."""
    token = msg.token
    if not token.verify(secret) or token.agent != msg.sender:
        return Rejection("BadSignature")
    if round > token.expiry:
        return Rejection("Expired", f"expired after round {token.expiry}")
    if msg.schema_id not in token.schemas:
        return Rejection("SchemaNotPermitted", msg.schema_id)
    sender, recipient = tiers.get(msg.sender), tiers.get(msg.recipient)
    if sender is None or recipient is None or recipient <= sender:
        return Rejection("TierViolation", f"{msg.sender} -> {msg.recipient}")
    contract = contracts.get(msg.schema_id)
    if contract is None:
        return Rejection("SchemaMismatch", msg.schema_id)
    bad = contract.mismatch(msg.payload)
    if bad is not None:
        return Rejection("SchemaMismatch", bad)
    if payload_hash(msg.payload) != msg.payload_hash:
        return Rejection("HashMismatch")
    return None


# -- audit log ------------------------------------------------------------------

@dataclass(frozen=True)
class AuditRecord:
    seq: int
    round: int
    agent: str
    payload_hash: str
    prev_hash: str
    record_hash: str

    @staticmethod
    def digest(seq: int, agent: str, payload_hash: str, prev_hash: str) -> str:
        return sha256_hex(f"{seq}|{agent}|{payload_hash}|{prev_hash}")

    def to_json(self) -> dict:
        return {"seq": self.seq, "round": self.round, "agent": self.agent,
                "payload_hash": self.payload_hash, "prev_hash": self.prev_hash,
                "record_hash": self.record_hash}

    @classmethod
    def from_json(cls, d: dict) -> "AuditRecord":
        return cls(d["seq"], d["round"], d["agent"], d["payload_hash"], d["prev_hash"], d["record_hash"])


def append_audit(log: Sequence[AuditRecord], msg: EscalationMessage) -> List[AuditRecord]:
    seq = len(log)
    prev = log[-1].record_hash if log else ZERO_HASH
    record = AuditRecord(seq, msg.round, msg.sender, msg.payload_hash, prev,
                         AuditRecord.digest(seq, msg.sender, msg.payload_hash, prev))
    return list(log) + [record]


def verify_chain(log: Sequence[AuditRecord]) -> bool:
    prev = ZERO_HASH
    for i, rec in enumerate(log):
        if rec.seq != i or rec.prev_hash != prev:
            return False
        if rec.record_hash != AuditRecord.digest(rec.seq, rec.agent, rec.payload_hash, rec.prev_hash):
            return False
        prev = rec.record_hash
    return True


def audit_jsonl(log: Sequence[AuditRecord]) -> str:
    return "".join(canonical_dumps(r.to_json()) + "\n" for r in log)


def read_audit_jsonl(text: str) -> List[AuditRecord]:
    return [AuditRecord.from_json(json.loads(line)) for line in text.splitlines() if line.strip()]


__all__ = [
    "Tier", "FieldSpec", "SchemaContract", "BUILTIN_CONTRACTS", "CapabilityToken", "mint_token",
    "EscalationMessage", "Rejection", "validate_escalation", "payload_hash", "AuditRecord",
    "append_audit", "verify_chain", "audit_jsonl", "read_audit_jsonl", "ZERO_HASH",
]
