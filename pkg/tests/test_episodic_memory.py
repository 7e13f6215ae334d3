import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontier_nav.episodic_memory import (
    ActionRecord,
    EpisodeEntry,
    EpisodicMemory,
    PenaltyParams,
    StatisticalSummarizer,
    compress,
    episodic_penalty,
    log_step,
)
from frontier_nav.errors import RejectedInputError


def entry(step, pos=(0.0, 0.0)):
    return EpisodeEntry(step=step, position=pos, action=ActionRecord("move", 1.0))


def direct_penalty(lam, sigma, footprint, query, t):
    """Independent summation script for Eq-style oracle checks."""
    total = 0.0
    for tau, p in footprint:
        d2 = (query[0] - p[0]) ** 2 + (query[1] - p[1]) ** 2
        total += lam ** (t - tau) * math.exp(-d2 / (2 * sigma * sigma))
    return total


class TestLogStep:
    def test_append(self):
        mem = EpisodicMemory(capacity=5)
        log_step(mem, entry(1))
        assert len(mem.short_term) == 1
        assert len(mem.footprint) == 1

    def test_full_buffer_requires_compress(self):
        mem = EpisodicMemory(capacity=5)
        for s in range(1, 6):
            log_step(mem, entry(s))
        with pytest.raises(RejectedInputError):
            log_step(mem, entry(6))
        compress(mem, StatisticalSummarizer())
        log_step(mem, entry(6))
        assert len(mem.short_term) == 1

    def test_non_monotonic_step_rejected(self):
        mem = EpisodicMemory(capacity=5)
        log_step(mem, entry(5))
        with pytest.raises(RejectedInputError):
            log_step(mem, entry(3))
        assert len(mem.footprint) == 1


class TestEpisodicPenalty:
    def test_empty_footprint(self):
        assert episodic_penalty(PenaltyParams(), [], (0.0, 0.0), 10) == 0.0

    def test_single_visit_at_query(self):
        p = PenaltyParams(lam=0.9, sigma=1.0)
        got = episodic_penalty(p, [(4, (2.0, 2.0))], (2.0, 2.0), 5)
        assert got == pytest.approx(0.9, abs=1e-12)

    def test_single_visit_at_sigma(self):
        p = PenaltyParams(lam=0.9, sigma=1.0)
        got = episodic_penalty(p, [(4, (1.0, 0.0))], (0.0, 0.0), 5)
        assert got == pytest.approx(0.9 * math.exp(-0.5), abs=1e-9)

    def test_oracle_equivalence_random(self):
        rng = random.Random(17)
        for _ in range(300):
            lam = rng.uniform(0.5, 0.99)
            sigma = rng.uniform(0.3, 3.0)
            t = rng.randint(5, 60)
            fp = [(tau, (rng.uniform(-5, 5), rng.uniform(-5, 5)))
                  for tau in range(1, rng.randint(2, t))]
            q = (rng.uniform(-5, 5), rng.uniform(-5, 5))
            got = episodic_penalty(PenaltyParams(lam=lam, sigma=sigma), fp, q, t)
            want = direct_penalty(lam, sigma, fp, q, t)
            assert got == pytest.approx(want, abs=1e-9)

    def test_temporal_decay_ratio(self):
        p = PenaltyParams(lam=0.87, sigma=1.3)
        fp = [(3, (1.0, 2.0))]
        a = episodic_penalty(p, fp, (0.5, 0.5), 10)
        b = episodic_penalty(p, fp, (0.5, 0.5), 11)
        assert b == pytest.approx(0.87 * a, abs=1e-12)

    def test_spatial_decay(self):
        p = PenaltyParams(lam=0.9, sigma=1.0)
        fp = [(1, (0.0, 0.0))]
        prev = episodic_penalty(p, fp, (0.0, 0.0), 2)
        for d in (0.5, 1.0, 2.0, 4.0):
            cur = episodic_penalty(p, fp, (d, 0.0), 2)
            assert cur < prev
            prev = cur

    @given(
        st.lists(st.tuples(st.floats(-4, 4), st.floats(-4, 4)), min_size=0, max_size=10),
        st.lists(st.tuples(st.floats(-4, 4), st.floats(-4, 4)), min_size=0, max_size=10),
        st.floats(0.5, 0.99),
        st.floats(0.2, 2.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_additivity(self, part_a, part_b, lam, sigma):
        t = 100
        fa = [(i + 1, p) for i, p in enumerate(part_a)]
        fb = [(len(fa) + i + 1, p) for i, p in enumerate(part_b)]
        params = PenaltyParams(lam=lam, sigma=sigma)
        q = (0.3, -0.7)
        whole = episodic_penalty(params, fa + fb, q, t)
        parts = episodic_penalty(params, fa, q, t) + episodic_penalty(params, fb, q, t)
        assert whole == pytest.approx(parts, abs=1e-9)

    def test_param_validation(self):
        with pytest.raises(RejectedInputError):
            episodic_penalty(PenaltyParams(lam=1.0), [], (0, 0), 1)
        with pytest.raises(RejectedInputError):
            episodic_penalty(PenaltyParams(sigma=0.0), [], (0, 0), 1)


class TestCompress:
    def fill(self, mem, positions):
        for i, p in enumerate(positions, start=1):
            log_step(mem, entry(i, p))

    def test_summary_disc_near_cluster(self):
        mem = EpisodicMemory(capacity=5)
        self.fill(mem, [(2.0, 2.0), (2.1, 2.0), (1.9, 2.1), (2.0, 1.9), (2.05, 2.05)])
        compress(mem, StatisticalSummarizer())
        rec = mem.long_term[0]
        assert math.dist(rec.center, (2.0, 2.0)) < 0.2
        assert rec.radius < 0.5
        assert mem.short_term == []
        assert len(mem.footprint) == 5

    def test_underfull_buffer_rejected(self):
        mem = EpisodicMemory(capacity=5)
        self.fill(mem, [(0, 0)] * 3)
        with pytest.raises(RejectedInputError):
            compress(mem, StatisticalSummarizer())

    def test_two_compressions_append(self):
        mem = EpisodicMemory(capacity=2)
        self.fill(mem, [(0.0, 0.0), (1.0, 0.0)])
        compress(mem, StatisticalSummarizer())
        for i in (3, 4):
            log_step(mem, entry(i, (float(i), 0.0)))
        compress(mem, StatisticalSummarizer())
        assert len(mem.long_term) == 2
        assert mem.long_term[0].step_range == (1, 2)
        assert mem.long_term[1].step_range == (3, 4)

    def test_failing_summarizer_falls_back(self):
        class Broken:
            def summarize(self, entries):
                raise TimeoutError("remote timeout")

        mem = EpisodicMemory(capacity=2)
        self.fill(mem, [(0.0, 0.0), (1.0, 0.0)])
        compress(mem, Broken())
        assert len(mem.long_term) == 1
        assert mem.summarizer_failures == 1
