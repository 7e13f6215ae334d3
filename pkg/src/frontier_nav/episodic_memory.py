"""Two-tier episodic memory: a bounded short-term buffer of step records, an
append-only list of long-term summaries, and the global footprint that feeds
the temporally decaying Gaussian penalty field."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import RejectedInputError


@dataclass
class ActionRecord:
    kind: str  # move | rotate | stop
    param: float = 0.0


@dataclass
class Rationale:
    region_id: int | None = None
    utility: dict | None = None
    text: str = ""


@dataclass
class EpisodeEntry:
    step: int
    position: tuple[float, float]
    action: ActionRecord
    rationale: Rationale = field(default_factory=Rationale)


@dataclass
class PenaltyParams:
    lam: float = 0.95
    sigma: float = 1.0
    stride: int = 1  # optional footprint subsampling, 1 = use every position

    def validate(self) -> None:
        if not (0.0 < self.lam < 1.0):
            raise RejectedInputError(f"lambda must be in (0, 1), got {self.lam}")
        if self.sigma <= 0:
            raise RejectedInputError(f"sigma must be > 0, got {self.sigma}")
        if self.stride < 1:
            raise RejectedInputError("stride must be >= 1")


@dataclass
class SummaryRecord:
    """Explored-region descriptor plus a strategy-pattern line."""

    center: tuple[float, float]
    radius: float
    strategy: str
    step_range: tuple[int, int]


class EpisodicMemory:
    def __init__(self, capacity: int = 5):
        if capacity < 1:
            raise RejectedInputError("capacity must be >= 1")
        self.capacity = capacity
        self.short_term: list[EpisodeEntry] = []
        self.long_term: list[SummaryRecord] = []
        self.footprint: list[tuple[int, tuple[float, float]]] = []
        self.last_reflection_step = 0
        self.summarizer_failures = 0

    @property
    def last_step(self) -> int | None:
        return self.footprint[-1][0] if self.footprint else None

    def clear_short_term(self) -> None:
        self.short_term = []


def log_step(mem: EpisodicMemory, entry: EpisodeEntry) -> EpisodicMemory:
    last = mem.last_step
    if last is not None and entry.step <= last:
        raise RejectedInputError(
            f"step {entry.step} not after last logged step {last}"
        )
    if len(mem.short_term) >= mem.capacity:
        raise RejectedInputError(
            "short-term buffer at capacity; compress before logging"
        )
    mem.short_term.append(entry)
    mem.footprint.append((entry.step, tuple(entry.position)))
    return mem


def episodic_penalty(params: PenaltyParams, footprint, query, t: int) -> float:
    """Direct evaluation of the decaying Gaussian field:
    sum_tau lambda^(t-tau) * exp(-|q - p_tau|^2 / (2 sigma^2))."""
    params.validate()
    qx, qy = query[0], query[1]
    two_sig2 = 2.0 * params.sigma * params.sigma
    total = 0.0
    for i, (tau, pos) in enumerate(footprint):
        if params.stride > 1 and i % params.stride != 0:
            continue
        dx, dy = qx - pos[0], qy - pos[1]
        total += params.lam ** (t - tau) * math.exp(-(dx * dx + dy * dy) / two_sig2)
    return total


class StatisticalSummarizer:
    """Deterministic fallback summarizer: centroid + radius of the logged
    positions and the dominant movement direction as the strategy pattern."""

    def summarize(self, entries) -> SummaryRecord:
        if not entries:
            raise RejectedInputError("cannot summarize an empty buffer")
        xs = [e.position[0] for e in entries]
        ys = [e.position[1] for e in entries]
        cx, cy = sum(xs) / len(xs), sum(ys) / len(ys)
        radius = max(math.dist((cx, cy), e.position) for e in entries)
        dx = entries[-1].position[0] - entries[0].position[0]
        dy = entries[-1].position[1] - entries[0].position[1]
        if abs(dx) < 1e-9 and abs(dy) < 1e-9:
            direction = "stationary"
        else:
            bearing = math.degrees(math.atan2(dy, dx)) % 360.0
            direction = f"heading {bearing:.0f} deg"
        regions = [e.rationale.region_id for e in entries if e.rationale.region_id is not None]
        chosen = f", region {max(set(regions), key=regions.count)}" if regions else ""
        return SummaryRecord(
            center=(cx, cy),
            radius=radius,
            strategy=f"explored disc r={radius:.2f} around ({cx:.2f}, {cy:.2f}), "
                     f"{direction}{chosen}",
            step_range=(entries[0].step, entries[-1].step),
        )


def compress(mem: EpisodicMemory, summarizer) -> EpisodicMemory:
    """Fold a full short-term buffer into one long-term summary record.

    A failing summarizer (e.g. remote timeout) falls back to the built-in
    statistical one; the failure is surfaced as a warning counter only.
    """
    if len(mem.short_term) != mem.capacity:
        raise RejectedInputError(
            f"compress requires a full buffer ({len(mem.short_term)}/{mem.capacity})"
        )
    try:
        summary = summarizer.summarize(mem.short_term)
    except RejectedInputError:
        raise
    except Exception:
        mem.summarizer_failures += 1
        summary = StatisticalSummarizer().summarize(mem.short_term)
    mem.long_term.append(summary)
    mem.clear_short_term()
    return mem
