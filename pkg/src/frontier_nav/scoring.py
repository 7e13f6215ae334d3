"""Semantic scorer abstraction and its three implementations: a deterministic
oracle driven by scene ground truth, a seeded noisy wrapper, and a remote
gateway client speaking the JSON protocol."""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import requests

from . import protocol
from .errors import (
    RejectedInputError,
    ScorerError,
    ScorerRangeError,
    ScorerSchemaError,
    ScorerTimeoutError,
    ScorerTransportError,
)
from .semantic_map import TaskInstruction
from .sim import Scene


@dataclass
class ScoringRequest:
    """One batched scoring call: all candidate regions in a single request."""

    instruction: TaskInstruction
    map_digest: list
    regions: list  # (id, (cx, cy), (ex, ey))
    rules: object | None = None
    long_term_summary: str | None = None

    def validate(self) -> None:
        if not self.regions:
            raise RejectedInputError("scoring request needs at least one region")
        ids = [r[0] for r in self.regions]
        if len(set(ids)) != len(ids):
            raise RejectedInputError("region ids must be unique")


@dataclass
class ScoringResponse:
    scores: list  # (region_id, score in [0, 1])
    warnings: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return dict(self.scores)


def geodesic_field(scene: Scene, source_cell) -> dict:
    """BFS cell distances (in cells) over free cells from a source cell."""
    if not scene.is_free_cell(source_cell):
        return {}
    dist = {source_cell: 0}
    queue = deque([source_cell])
    while queue:
        cx, cy = queue.popleft()
        for ox, oy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
            nb = (cx + ox, cy + oy)
            if nb not in dist and scene.is_free_cell(nb):
                dist[nb] = dist[(cx, cy)] + 1
                queue.append(nb)
    return dist


class OracleScorer:
    """Deterministic stand-in for the VLM: scores fall off exponentially with
    geodesic distance to the true target, scale L = scene diameter / 4."""

    def __init__(self, scene: Scene, target_index: int = 0):
        self.scene = scene
        target = scene.object_by_id(scene.targets[target_index].object_id)
        self._field = geodesic_field(scene, scene.cell_of(target.position))
        self._scale = scene.diameter() / 4.0

    def score(self, request: ScoringRequest) -> ScoringResponse:
        request.validate()
        cat = request.instruction.target_category
        if request.instruction.kind != "image" and cat and not any(
            o.category == cat for o in self.scene.objects
        ):
            raise RejectedInputError(f"scene has no object of category '{cat}'")
        scores = []
        for rid, centroid, _extent in request.regions:
            d = self._distance_m(centroid)
            scores.append((rid, 0.0 if d is None else math.exp(-d / self._scale)))
        return ScoringResponse(scores=scores)

    def _distance_m(self, centroid) -> float | None:
        cell = self.scene.cell_of(centroid)
        if cell in self._field:
            return self._field[cell] * self.scene.voxel_size
        # concave region whose centroid lands off free space: nearest free
        # neighbor cell stands in
        best = None
        for ox in (-1, 0, 1):
            for oy in (-1, 0, 1):
                nb = (cell[0] + ox, cell[1] + oy)
                if nb in self._field and (best is None or self._field[nb] < best):
                    best = self._field[nb]
        return None if best is None else best * self.scene.voxel_size


def noisy_score(base: ScoringResponse, noise_level: float, seed: int) -> ScoringResponse:
    """Perturb each score by seeded uniform noise in +/- noise_level, clamped
    to [0, 1]. Same seed, same output."""
    if not (0.0 <= noise_level <= 1.0):
        raise RejectedInputError(f"noise_level {noise_level} outside [0, 1]")
    rng = np.random.default_rng(seed)
    out = []
    for rid, score in base.scores:
        perturbed = score + float(rng.uniform(-noise_level, noise_level))
        out.append((rid, max(0.0, min(1.0, perturbed))))
    return ScoringResponse(scores=out, warnings=list(base.warnings))


class NoisyScorer:
    """Stress wrapper around another scorer. The per-call seed is derived from
    the request content, so the scorer is stateless and shareable."""

    def __init__(self, base, noise_level: float, seed: int = 0):
        self.base = base
        self.noise_level = noise_level
        self.seed = seed

    def score(self, request: ScoringRequest) -> ScoringResponse:
        base = self.base.score(request)
        return noisy_score(base, self.noise_level, self._derive_seed(request))

    def _derive_seed(self, request: ScoringRequest) -> int:
        canonical = json.dumps(protocol.scoring_request_to_json(request),
                               sort_keys=True, separators=(",", ":"))
        digest = hashlib.sha256(f"{self.seed}:{canonical}".encode()).digest()
        return int.from_bytes(digest[:8], "big")


class RemoteScorer:
    """Gateway client. Holds no cross-call state besides the endpoint."""

    def __init__(self, endpoint: str, deadline_ms: int = 10000):
        self.endpoint = endpoint.rstrip("/")
        self.deadline_ms = deadline_ms

    def score(self, request: ScoringRequest) -> ScoringResponse:
        request.validate()
        body = _post(self.endpoint + "/score",
                     protocol.scoring_request_to_json(request), self.deadline_ms)
        return protocol.scoring_response_from_json(
            body, expected_ids=[r[0] for r in request.regions])


class RemoteReflector:
    def __init__(self, endpoint: str, deadline_ms: int = 10000):
        self.endpoint = endpoint.rstrip("/")
        self.deadline_ms = deadline_ms

    def generate(self, mem, instruction: TaskInstruction):
        body = _post(
            self.endpoint + "/reflect",
            protocol.reflect_request_to_json(instruction, mem.long_term, mem.short_term),
            self.deadline_ms,
        )
        return protocol.reflect_response_from_json(body)


class RemoteSummarizer:
    def __init__(self, endpoint: str, deadline_ms: int = 10000):
        self.endpoint = endpoint.rstrip("/")
        self.deadline_ms = deadline_ms

    def summarize(self, entries):
        body = _post(self.endpoint + "/summarize",
                     protocol.summarize_request_to_json(entries), self.deadline_ms)
        return protocol.summarize_response_from_json(body)


def _post(url: str, payload: dict, deadline_ms: int) -> dict:
    try:
        resp = requests.post(url, json=payload, timeout=deadline_ms / 1000.0)
    except requests.Timeout as exc:
        raise ScorerTimeoutError(f"deadline of {deadline_ms} ms exceeded: {exc}")
    except requests.RequestException as exc:
        raise ScorerTransportError(str(exc))
    if resp.status_code != 200:
        raise ScorerTransportError(f"HTTP {resp.status_code} from {url}")
    try:
        return resp.json()
    except ValueError as exc:
        raise ScorerSchemaError(f"response is not JSON: {exc}")
