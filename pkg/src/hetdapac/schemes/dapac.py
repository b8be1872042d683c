"""Retrieval engine dapac: the fully-dedicated pairwise baseline.

Messages are split into C(D,2) sub-packets, one per server pair. Server n
gets K(D-1) groups, one per (other server m, far value k): the messages
agreeing with the verified value at n and with value k at m, each
contributing a fresh permuted sub-packet under a fresh vector.

For each pair {n, m} exactly one group on each side has the far value
matching (k = the verified value at the far server); those two groups are
twins. The twin on the higher-indexed server carries the same rows and the
same pad chunk, with the combining vector lifted by the unit vector at the
desired message's row, so the difference of the two shares is one sub-packet
of the desired message. The desired message only ever appears in twin
groups, consuming exactly one sub-packet index per pair.

Per pair, 2K-1 distinct pad chunks are consumed out of the K^2 allocated.
Rate 1/(2K); the central server downloads nothing.
"""

from __future__ import annotations

from ..access import message_index, ordered_complement, pair_set, participating_vectors, public_part
from ..errors import ConfigError
from ..randomness import canonical_pair_label, chunk_length, subpacket_count
from .base import (
    FreshIndexCounter,
    PlanGroup,
    RetrievalPlan,
    ServerContext,
    VectorSource,
    answer_with_labels,
    draw_permutations,
    group_pads,
    pseudo_vstar,
)

SCHEME = "dapac"


def subpackets(params) -> int:
    return subpacket_count(SCHEME, params)


def build(v_star, params, rng, partition=None, source=None):
    """User-side query construction. Returns (plan, wire queries per server)."""
    chunk_length(SCHEME, params)
    sub = subpackets(params)
    desired = message_index(v_star, params)
    values = tuple(v_star[:params.d])
    source = source or VectorSource(params.q, rng)

    participating = sorted(
        message_index(v, params)
        for v in participating_vectors(params, public_part(v_star, params)))
    perms = draw_permutations(participating, sub, rng)
    counter = FreshIndexCounter(sub)

    groups: dict[int, list[PlanGroup]] = {n: [] for n in range(1, params.d + 1)}
    built: dict[tuple[int, int, int], PlanGroup] = {}
    gi_of: dict[tuple[int, int, int], int] = {}
    pair_info: dict[tuple[int, int], dict] = {}

    for n in range(1, params.d + 1):
        for m in ordered_complement(n, params.d):
            for k in range(1, params.k + 1):
                if m < n and k == values[m - 1]:
                    # twin of the group built at server m toward n; same rows
                    # and pad, vector lifted at the desired message's row
                    owner = built[(m, n, values[n - 1])]
                    l = owner.row_of(desired)
                    g = PlanGroup(("u", n, m, k), list(owner.rows),
                                  source.add_unit(owner.vector, l))
                    pair_info[(m, n)]["higher"] = (n, len(groups[n]))
                else:
                    members = pair_set(n, m, values[n - 1], k, v_star, params)
                    rows = []
                    for msg in members:
                        rows.append((msg, counter.next(msg)))
                    g = PlanGroup(("u", n, m, k), rows, source.fresh(len(rows)))
                    if m > n and k == values[m - 1]:
                        pair_info[(n, m)] = {
                            "lower": (n, len(groups[n])),
                            "higher": None,
                            "logical": g.logical_of(desired),
                        }
                built[(n, m, k)] = g
                gi_of[(n, m, k)] = len(groups[n])
                groups[n].append(g)

    plan = RetrievalPlan(SCHEME, params, tuple(v_star), sub, perms, groups,
                         decode_info=pair_info)
    return plan, plan.wire_queries()


def _label_table(ctx: ServerContext) -> dict[frozenset, tuple]:
    if ctx.own_value is None:
        raise ConfigError("central server answers no pairwise-scheme queries")
    n = ctx.server
    ref = pseudo_vstar(ctx)
    table = {}
    for m in ordered_complement(n, ctx.params.d):
        for k in range(1, ctx.params.k + 1):
            key = frozenset(pair_set(n, m, ctx.own_value, k, ref, ctx.params))
            if key in table:
                raise ConfigError("ambiguous pair sets")
            table[key] = canonical_pair_label(n, m, ctx.own_value, k)
    return table


def _group_labels(ctx: ServerContext, group) -> list[tuple]:
    table = _label_table(ctx)
    key = frozenset(group.descriptor.messages())
    if key not in table:
        raise ConfigError(f"group does not match any pair set on server {ctx.server}")
    return [table[key]]


def answer_query(ctx: ServerContext, query):
    return answer_with_labels(ctx, query, _group_labels)


def pads(ctx: ServerContext, query):
    return group_pads(ctx, query, _group_labels)


def decode(plan: RetrievalPlan, answers: dict, field) -> tuple[int, ...]:
    """Per pair, subtract the lower twin's share from the higher twin's."""
    decoded = {}
    for (n, m), info in plan.decode_info.items():
        low_server, low_gi = info["lower"]
        high_server, high_gi = info["higher"]
        low = answers[low_server][low_gi].payload
        high = answers[high_server][high_gi].payload
        decoded[info["logical"]] = field.vec_sub(high, low)
    return plan.assemble(decoded)
