"""Wire-level protocol objects: queries, answers, and their serialization.

A query for one server is an ordered list of message groups. Each group
names rows of (message id, sub-packet index) and carries one combining
vector; the server's answer to a group is a single sub-packet:

    share = sum_r vector[r] * subpacket(row r)  +  pad

Sub-packet indices on the wire are the user's privately permuted ones,
which is the whole point: the server learns nothing from them. Indices
are 1-based.

Serialization is canonical JSON (sorted keys, no whitespace) so that
transcript digests are stable byte-for-byte across runs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass


@dataclass(frozen=True)
class MessageGroupDescriptor:
    """Ordered rows of (message id, wire sub-packet index)."""

    rows: tuple[tuple[int, int], ...]

    def messages(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.rows)

    def row_of(self, msg: int) -> int:
        """1-based row position of a message, which must appear exactly once."""
        hits = [i for i, (m, _) in enumerate(self.rows, start=1) if m == msg]
        if len(hits) != 1:
            raise ValueError(f"message {msg} appears {len(hits)} times in group")
        return hits[0]


@dataclass(frozen=True)
class QueryGroup:
    descriptor: MessageGroupDescriptor
    vector: tuple[int, ...]


@dataclass(frozen=True)
class QueryTuple:
    """Everything one server receives in the retrieval phase."""

    server: int
    groups: tuple[QueryGroup, ...]

    def upload_symbols(self) -> int:
        return sum(len(g.vector) for g in self.groups)


@dataclass(frozen=True)
class AnswerShare:
    server: int
    group_index: int          # position in the query's group list, 0-based
    payload: tuple[int, ...]  # one sub-packet of field symbols


def encode_query(query: QueryTuple) -> dict:
    return {
        "server": query.server,
        "groups": [
            {"rows": [[m, i] for m, i in g.descriptor.rows],
             "vector": list(g.vector)}
            for g in query.groups
        ],
    }


def decode_query(obj: dict) -> QueryTuple:
    groups = tuple(
        QueryGroup(
            descriptor=MessageGroupDescriptor(
                rows=tuple((int(m), int(i)) for m, i in g["rows"])),
            vector=tuple(int(x) for x in g["vector"]),
        )
        for g in obj["groups"]
    )
    return QueryTuple(server=int(obj["server"]), groups=groups)


def encode_answers(shares: list[AnswerShare]) -> dict:
    return {
        "server": shares[0].server if shares else None,
        "shares": [{"group": s.group_index, "payload": list(s.payload)} for s in shares],
    }


def decode_answers(obj: dict) -> list[AnswerShare]:
    server = int(obj["server"])
    return [AnswerShare(server=server, group_index=int(s["group"]),
                        payload=tuple(int(x) for x in s["payload"]))
            for s in obj["shares"]]


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def payload_digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj)).hexdigest()
