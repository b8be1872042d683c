"""Two-phase protocol simulation: actors, channel, transcript, metrics.

The run is verification followed by retrieval. In verification the user
commits each sensitive attribute to its dedicated server and the public
attributes to the central server, which relays them to everyone. In
retrieval the user sends one query tuple per server and decodes the
answer shares.

Actors exchange serialized protocol messages through an in-process channel
and share no state, so the same engines could back real sockets. Every
message is logged to the transcript as a structured record (phase, sender,
receiver, kind, symbol count, payload digest); identical inputs produce
byte-identical transcript dumps. Query construction happens strictly
before any server sees the store it will answer from, and only ever reads
(v*, params, user randomness).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional

from .access import SystemParams, accessible_messages, check_vector, build_partition
from .errors import ConfigError, RetrievalFailure
from .field import PrimeField, derive_rng
from .randomness import RandomnessPool, allocate
from .schemes import engine as scheme_engine
from .schemes.base import DecodeRetry, ServerContext
from .wire import decode_answers, decode_query, encode_answers, encode_query, payload_digest

DEFAULT_RETRY_CAP = 8


def actor_name(server: int, params: SystemParams) -> str:
    return "central" if server == params.central else f"server{server}"


# ---------------------------------------------------------------- transcript

@dataclass
class Record:
    seq: int
    phase: str
    sender: str
    receiver: str
    kind: str
    symbols: int
    digest: str
    segment: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "seq": self.seq, "phase": self.phase, "sender": self.sender,
            "receiver": self.receiver, "kind": self.kind,
            "symbols": self.symbols, "digest": self.digest,
            "segment": self.segment,
        }


class Transcript:
    """Structured log of one protocol run plus accounting counters."""

    def __init__(self, scheme: str, params: SystemParams, seed):
        self.scheme = scheme
        self.params = params
        self.seed = seed
        self.records: list[Record] = []
        self.payloads: list = []
        self.retries = 0
        self.attempts = 0
        self.pool_allocated_chunks = 0
        self.pool_allocated_symbols = 0
        self.segment_chunk_len: dict = {}
        self.consumed: set = set()

    def log(self, phase, sender, receiver, kind, payload, symbols, segment=None):
        rec = Record(len(self.records), phase, sender, receiver, kind,
                     symbols, payload_digest(payload), segment)
        self.records.append(rec)
        self.payloads.append(payload)
        return rec

    def note_pool(self, pool: RandomnessPool, segment=None):
        self.pool_allocated_chunks += pool.allocated_chunks
        self.pool_allocated_symbols += pool.allocated_symbols
        self.segment_chunk_len[segment] = pool.chunk_len

    def note_consumed(self, labels, segment=None):
        for label in labels:
            self.consumed.add((segment, tuple(label)))

    def consumed_symbols(self) -> int:
        return sum(self.segment_chunk_len[seg] for seg, _ in self.consumed)

    def download_by_sender(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for rec in self.records:
            if rec.kind == "answer":
                out[rec.sender] = out.get(rec.sender, 0) + rec.symbols
        return out

    def dumps(self) -> str:
        buf = io.StringIO()
        for rec in self.records:
            buf.write(json.dumps(rec.as_dict(), sort_keys=True, separators=(",", ":")))
            buf.write("\n")
        return buf.getvalue()

    def dump(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())


# ---------------------------------------------------------------- actors

class Channel:
    """Routes serialized messages between named endpoints, logging each one."""

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self.actors: dict[str, "ServerActor"] = {}

    def connect(self, name: str, actor: "ServerActor"):
        self.actors[name] = actor

    def request(self, phase, sender, receiver, kind, payload, symbols=0, segment=None):
        """Deliver a message; if the receiver replies, log and return the reply."""
        self.transcript.log(phase, sender, receiver, kind, payload, symbols, segment)
        reply = self.actors[receiver].handle(kind, payload)
        if reply is None:
            return None
        rkind, rpayload, rsymbols = reply
        self.transcript.log(phase, receiver, sender, rkind, rpayload, rsymbols, segment)
        return rpayload


class ServerActor:
    """One server: verifies its attribute(s), then answers queries.

    Holds the full database the way a real replica would; the accessible
    slice is carved out of it once verification pins down which messages
    this server may serve. Queries touching anything else are refused.
    """

    def __init__(self, server: int, scheme: str, params: SystemParams, store, partition=None):
        self.server = server
        self.scheme = scheme
        self.params = params
        self.full_store = store
        self.partition = partition
        self.engine = scheme_engine(scheme)
        self.own_value: Optional[int] = None
        self.public: Optional[tuple[int, ...]] = None
        self.ctx: Optional[ServerContext] = None
        self.used_labels: list = []

    @property
    def is_central(self) -> bool:
        return self.server == self.params.central

    def handle(self, kind: str, payload: dict):
        if kind == "attribute-commit":
            if self.is_central:
                self.public = tuple(payload["public"])
            else:
                self.own_value = int(payload["value"])
                if not self.params.has_central:
                    self.public = ()
            return ("commit-ack", {"server": self.server}, 0)
        if kind == "attribute-relay":
            self.public = tuple(payload["public"])
            return None
        if kind == "query":
            query = decode_query(payload)
            shares, labels = self.engine.answer_query(self.ctx, query)
            self.used_labels = labels
            reply = encode_answers(shares)
            return ("answer", reply, sum(len(s.payload) for s in shares))
        raise ConfigError(f"unknown message kind {kind!r}")

    def install_pool(self, pool: RandomnessPool):
        """Server-to-server agreement on pads; never crosses the user channel."""
        if self.public is None or (not self.is_central and self.own_value is None):
            raise ConfigError("pool installed before verification finished")
        ref = list(1 for _ in range(self.params.d)) + list(self.public)
        if not self.is_central:
            ref[self.server - 1] = self.own_value
        ids = accessible_messages(self.server, tuple(ref), self.params)
        slice_ = {m: self.full_store[m] for m in ids}
        self.ctx = ServerContext(
            scheme=self.scheme, server=self.server, params=self.params,
            public=self.public, own_value=self.own_value,
            store=slice_, pool=pool, partition=self.partition)


# ---------------------------------------------------------------- stores

def random_store(params: SystemParams, seed) -> dict[int, tuple[int, ...]]:
    """Uniform content for every message id; deterministic in the seed."""
    rng = derive_rng(seed, "store")
    return {i: tuple(rng.randrange(params.q) for _ in range(params.length))
            for i in range(params.message_count)}


def store_segment(store, start: int, stop: int) -> dict[int, tuple[int, ...]]:
    """Symbol range [start, stop) of every message, for time-shared runs."""
    return {m: tuple(sym[start:stop]) for m, sym in store.items()}


# ---------------------------------------------------------------- protocol

def verification_phase(channel: Channel, v_star, params: SystemParams, segment=None):
    """Commit sensitive values to dedicated servers, public part to central,
    and relay the public part everywhere."""
    v_star = check_vector(v_star, params)
    for n in range(1, params.d + 1):
        channel.request("verification", "user", actor_name(n, params),
                        "attribute-commit", {"position": n, "value": v_star[n - 1]},
                        segment=segment)
    central = actor_name(params.central, params)
    if central in channel.actors:
        public = list(v_star[params.d:])
        channel.request("verification", "user", central,
                        "attribute-commit", {"public": public}, segment=segment)
        for n in range(1, params.d + 1):
            channel.request("verification", central, actor_name(n, params),
                            "attribute-relay", {"public": public}, segment=segment)


def retrieval_phase(channel: Channel, scheme: str, params: SystemParams, v_star,
                    seed, partition, retry_cap: int, transcript: Transcript,
                    segment=None, rng_labels=()):
    """Send queries, collect answers, decode; redraw on a decode retry."""
    eng = scheme_engine(scheme)
    field = PrimeField(params.q)
    servers = [n for n in params.servers()
               if actor_name(n, params) in channel.actors
               and (scheme != "dapac" or n != params.central)]
    last_error = None
    for attempt in range(retry_cap):
        transcript.attempts += 1
        rng = derive_rng(seed, "user", *rng_labels, attempt)
        plan, queries = eng.build(v_star, params, rng, partition=partition)
        answers = {}
        for n in servers:
            name = actor_name(n, params)
            reply = channel.request("retrieval", "user", name, "query",
                                    encode_query(queries[n]),
                                    symbols=queries[n].upload_symbols(),
                                    segment=segment)
            answers[n] = decode_answers(reply)
            transcript.note_consumed(
                (lbl for group in channel.actors[name].used_labels for lbl in group),
                segment=segment)
        try:
            return eng.decode(plan, answers, field)
        except DecodeRetry as err:
            transcript.retries += 1
            last_error = err
    raise RetrievalFailure(
        f"decode failed after {retry_cap} attempts: {last_error}", attempts=retry_cap)


def run_protocol(scheme: str, params: SystemParams, v_star, store, seed,
                 partition=None, retry_cap: int = DEFAULT_RETRY_CAP):
    """Full two-phase run. Returns (decoded message, transcript, metrics)."""
    v_star = check_vector(v_star, params)
    if scheme == "het2" and partition is None:
        partition = build_partition(params.d)
    transcript = Transcript(scheme, params, seed)
    channel = Channel(transcript)

    with_central = scheme != "dapac" or params.has_central
    for n in params.servers():
        if n == params.central and not with_central:
            continue
        actor = ServerActor(n, scheme, params, store, partition)
        channel.connect(actor_name(n, params), actor)

    verification_phase(channel, v_star, params)

    public = tuple(v_star[params.d:])
    pool = allocate(scheme, params, public, seed)
    transcript.note_pool(pool)
    for actor in channel.actors.values():
        actor.install_pool(pool)

    message = retrieval_phase(channel, scheme, params, v_star, seed,
                              partition, retry_cap, transcript)
    return message, transcript, metrics_of(transcript)


def metrics_of(transcript: Transcript) -> dict:
    """Exact accounting: rate, load ratio, downloads, randomness, retries."""
    params = transcript.params
    downloads = transcript.download_by_sender()
    dedicated = {n: downloads.get(f"server{n}", 0) for n in range(1, params.d + 1)}
    central = downloads.get("central", 0)
    total = sum(dedicated.values()) + central
    if total == 0:
        raise ConfigError("no downloads recorded")
    per_dedicated = sorted(set(dedicated.values()))
    load = Fraction(per_dedicated[-1], central) if central else float("inf")
    return {
        "rate": Fraction(params.length, total),
        "load_ratio": load,
        "download_total": total,
        "download_dedicated": dedicated,
        "download_central": central,
        "randomness_allocated_chunks": transcript.pool_allocated_chunks,
        "randomness_allocated_symbols": transcript.pool_allocated_symbols,
        "randomness_consumed_chunks": len(transcript.consumed),
        "randomness_consumed_symbols": transcript.consumed_symbols(),
        "retries": transcript.retries,
        "attempts": transcript.attempts,
    }
