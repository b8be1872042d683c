"""Time-sharing algebra and the executed dapac/het1 mixed runs."""

from __future__ import annotations

from fractions import Fraction

import pytest

from hetdapac.access import SystemParams, message_index
from hetdapac.errors import ConfigError, DivisibilityError
from hetdapac.harness import random_store, run_protocol
from hetdapac.mixer import (
    INF,
    central_download_of_lambda,
    dedicated_download_of_lambda,
    frontier,
    frontier_rate,
    load_ratio_of_lambda,
    plan_mix,
    randomness_of_lambda,
    rate_of_lambda,
    rate_of_load,
    run_time_shared,
    scheme_costs,
)

F = Fraction


def test_rate_endpoints_and_interior():
    # lambda is the dapac share: 0 is pure het1, 1 is pure dapac
    assert rate_of_lambda(0, 2) == F(1, 3)
    assert rate_of_lambda(1, 2) == F(1, 4)
    assert rate_of_lambda(F(3, 7), 2) == F(7, 24)
    assert rate_of_lambda(F(1, 2), 2) == F(2, 7)
    with pytest.raises(ConfigError):
        rate_of_lambda(F(3, 2), 2)


def test_load_ratio_endpoints_and_interior():
    assert load_ratio_of_lambda(0, 3, 2) == F(1, 6)
    assert load_ratio_of_lambda(F(3, 7), 3, 2) == F(2, 3)
    assert load_ratio_of_lambda(1, 3, 2) == INF
    assert load_ratio_of_lambda(F(1, 2), 2, 2) == F(5, 4)


def test_rate_of_load_endpoints():
    assert rate_of_load(F(1, 6), 3, 2) == F(1, 3)       # 1/(K+1)
    assert rate_of_load(INF, 3, 2) == F(1, 4)           # 1/(2K)
    assert rate_of_load(F(2, 3), 3, 2) == F(7, 24)      # (KD+K-1)/(2K^2D)
    with pytest.raises(ConfigError):
        rate_of_load(F(1, 7), 3, 2)


@pytest.mark.parametrize("d,k", [(2, 2), (3, 2), (4, 3), (5, 2)])
def test_load_reparameterization_identity(d, k):
    for num in range(0, 16):
        lam = F(num, 16)
        expect = rate_of_lambda(lam, k)
        assert rate_of_load(load_ratio_of_lambda(lam, d, k), d, k) == expect


def test_randomness_of_lambda():
    assert randomness_of_lambda(0, 2, 6) == 12          # KL
    assert randomness_of_lambda(1, 2, 6) == 24          # K^2 L
    assert randomness_of_lambda(F(3, 7), 2, 42) == 120


def test_download_formulas():
    assert dedicated_download_of_lambda(F(1, 2), 2, 2, 12) == 15
    assert central_download_of_lambda(F(1, 2), 2, 12) == 12
    assert dedicated_download_of_lambda(0, 3, 2, 6) == 2
    assert central_download_of_lambda(1, 2, 12) == 0


def test_timeshare_gap_below_het2_corner_is_exact():
    for d, k in [(3, 2), (4, 3)]:
        ell = F(d - 1, d)
        pure = F(d + 1, 2 * k * d)
        assert frontier_rate(ell, d, k) == pure
        assert pure - rate_of_load(ell, d, k) == F(1, 2 * k * k * d)


def test_frontier_anchors_and_monotonicity():
    points = frontier(4, 3, grid=50)
    assert (F(1, 12), F(1, 4)) in points
    assert (F(3, 4), F(5, 24)) in points
    assert points[-1] == (INF, F(1, 6))
    loads = [p[0] for p in points]
    rates = [p[1] for p in points]
    assert loads == sorted(loads)
    assert len(set(loads)) == len(loads)
    assert rates == sorted(rates, reverse=True)
    assert len(set(rates)) == len(rates)  # strictly decreasing at (4,3)


def test_frontier_dominates_timeshare_everywhere():
    for d, k in [(3, 2), (4, 3), (5, 2)]:
        for num in range(1, 64):
            lam = F(num, 64)
            ell = load_ratio_of_lambda(lam, d, k)
            assert frontier_rate(ell, d, k) >= rate_of_lambda(lam, k)
    # and strictly in the improved region around the split-cover anchor
    assert frontier_rate(F(3, 4), 4, 3) > rate_of_load(F(3, 4), 4, 3)


def test_frontier_needs_three_servers():
    with pytest.raises(ConfigError):
        frontier(2, 2)
    # but the reparameterized timeshare curve still exists at D=2
    assert frontier_rate(F(5, 4), 2, 2) == rate_of_load(F(5, 4), 2, 2)


def test_scheme_costs_match_pure_rates():
    for d, k in [(3, 2), (4, 3)]:
        costs = scheme_costs(d, k)
        ded, cen = costs["het1"]
        assert 1 / (d * ded + cen) == F(1, k + 1)
        ded, cen = costs["het2"]
        assert 1 / (d * ded + cen) == F(d + 1, 2 * k * d)
        assert ded / cen == F(d - 1, d)
        ded, cen = costs["dapac"]
        assert 1 / (d * ded + cen) == F(1, 2 * k)


class TestPlanMix:
    P = SystemParams(n_attrs=3, d=2, k=2, q=65537, length=12)

    def test_segments(self):
        mix = plan_mix(self.P, F(1, 2))
        assert (mix.dapac_length, mix.het1_length) == (6, 6)
        assert mix.components == ("dapac", "het1")

    def test_divisibility_refusal_names_minimal_length(self):
        with pytest.raises(DivisibilityError) as exc:
            plan_mix(self.P, F(1, 4))  # het1 segment of 9 cannot split by D=2
        assert exc.value.minimal_length == 8
        mix = plan_mix(SystemParams(n_attrs=3, d=2, k=2, length=8), F(1, 4))
        assert (mix.dapac_length, mix.het1_length) == (2, 6)

    def test_endpoints(self):
        assert plan_mix(self.P, 0).components == ("het1",)
        assert plan_mix(self.P, 1).components == ("dapac",)

    def test_mix_needs_central(self):
        with pytest.raises(ConfigError):
            plan_mix(SystemParams(n_attrs=3, d=3, k=2, length=12), F(1, 2))


class TestExecutedMix:
    P = SystemParams(n_attrs=3, d=2, k=2, q=65537, length=12)
    V = (1, 2, 2)

    def run(self, lam, length=12, seed=3):
        params = SystemParams(n_attrs=3, d=2, k=2, q=65537, length=length)
        store = random_store(params, 31)
        mix = plan_mix(params, lam)
        msg, transcript, metrics = run_time_shared(mix, self.V, store, seed)
        assert msg == store[message_index(self.V, params)]
        return transcript, metrics

    def test_half_mix_matches_all_closed_forms(self):
        _, metrics = self.run(F(1, 2))
        assert metrics["download_dedicated"] == {1: 15, 2: 15}
        assert metrics["download_central"] == 12
        assert metrics["download_total"] == 42
        assert metrics["rate"] == rate_of_lambda(F(1, 2), 2) == F(2, 7)
        assert metrics["load_ratio"] == load_ratio_of_lambda(F(1, 2), 2, 2)
        assert metrics["randomness_allocated_symbols"] == 36  # KL(lam(K-1)+1)
        assert metrics["randomness_consumed_symbols"] == 30   # L(K+lam(K-1))

    def test_quarter_mix_at_its_minimal_length(self):
        _, metrics = self.run(F(1, 4), length=8)
        assert metrics["download_dedicated"] == {1: 7, 2: 7}
        assert metrics["download_central"] == 12
        assert metrics["rate"] == F(4, 13) == rate_of_lambda(F(1, 4), 2)
        assert metrics["randomness_allocated_symbols"] == \
            randomness_of_lambda(F(1, 4), 2, 8)

    def test_segments_are_tagged(self):
        transcript, _ = self.run(F(1, 2))
        segs = {r.segment for r in transcript.records if r.phase == "retrieval"}
        assert segs == {"dapac", "het1"}
        # verification happens once, untagged
        ver = [r for r in transcript.records if r.phase == "verification"]
        assert ver and all(r.segment is None for r in ver)
        commits = [r for r in ver if r.kind == "attribute-commit"]
        assert len(commits) == 3  # two dedicated values plus the public part

    def test_endpoint_mixes_degenerate_to_pure_runs(self):
        params = self.P
        store = random_store(params, 31)
        for lam, scheme in ((0, "het1"), (1, "dapac")):
            mix_msg, mix_t, mix_m = run_time_shared(
                plan_mix(params, lam), self.V, store, seed=3)
            pure_msg, pure_t, pure_m = run_protocol(
                scheme, params, self.V, store, seed=3)
            assert mix_msg == pure_msg
            assert mix_m == pure_m
            assert mix_t.dumps() == pure_t.dumps()
        assert run_time_shared(plan_mix(params, 1), self.V, store, 3)[2][
            "download_central"] == 0

    def test_three_server_mix(self):
        params = SystemParams(n_attrs=4, d=3, k=2, q=65537, length=12)
        store = random_store(params, 7)
        v_star = (2, 1, 2, 1)
        mix = plan_mix(params, F(1, 2))
        msg, _, metrics = run_time_shared(mix, v_star, store, seed=5)
        assert msg == store[message_index(v_star, params)]
        assert metrics["download_dedicated"] == {1: 10, 2: 10, 3: 10}
        assert metrics["download_central"] == 12
        assert metrics["rate"] == F(2, 7)
        assert metrics["load_ratio"] == load_ratio_of_lambda(F(1, 2), 3, 2)
