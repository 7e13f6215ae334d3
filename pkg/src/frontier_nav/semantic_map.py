"""Persistent object-centric semantic map.

Detections are associated to existing entries of the same category by spatial
proximity (and feature similarity when both sides carry features), merged into
confidence-weighted running means, or instantiated as new entries. The map
also answers target-localization queries used by the known-target shortcut.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

from .errors import RejectedInputError

INSTRUCTION_KINDS = ("object", "description", "image")


def _norm(vec) -> float:
    return math.sqrt(sum(v * v for v in vec))


def _cosine(a, b) -> float:
    na, nb = _norm(a), _norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return sum(x * y for x, y in zip(a, b)) / (na * nb)


def unit(vec) -> tuple[float, ...]:
    n = _norm(vec)
    if n == 0:
        raise RejectedInputError("cannot normalize a zero feature vector")
    return tuple(v / n for v in vec)


@dataclass
class Detection:
    category: str
    confidence: float
    position: tuple[float, float]
    feature: tuple[float, ...] | None = None
    attribute: str = ""

    def validate(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise RejectedInputError(
                f"detection confidence {self.confidence} outside [0, 1]"
            )
        if self.feature is not None and abs(_norm(self.feature) - 1.0) > 1e-6:
            raise RejectedInputError("detection feature must be unit-norm")


@dataclass
class ObjectEntry:
    id: int
    category: str
    confidence: float
    position: tuple[float, float]
    feature: tuple[float, ...] | None
    observations: int
    attribute: str = ""
    # accumulated confidence mass behind the position mean
    position_weight: float = 0.0


@dataclass
class TaskInstruction:
    kind: str
    target_category: str = ""
    qualifier: str | None = None
    feature: tuple[float, ...] | None = None

    def validate(self) -> None:
        if self.kind not in INSTRUCTION_KINDS:
            raise RejectedInputError(f"unknown instruction kind '{self.kind}'")
        if self.kind in ("object", "description") and not self.target_category:
            raise RejectedInputError(f"{self.kind} instruction requires target_category")
        if self.kind == "image" and self.feature is None:
            raise RejectedInputError("image instruction requires a feature vector")


class SemanticMap:
    """Single-writer per episode; snapshot() gives a copy safe for concurrent
    reads."""

    def __init__(self, r_assoc: float = 0.5, theta_feat: float = 0.8):
        self.r_assoc = r_assoc
        self.theta_feat = theta_feat
        self.entries: list[ObjectEntry] = []
        self._next_id = 0

    def update(self, detections) -> "SemanticMap":
        for det in detections:
            det.validate()
        for det in detections:
            self._apply(det)
        return self

    def _apply(self, det: Detection) -> None:
        best = None
        best_d = None
        for entry in self.entries:
            if entry.category != det.category:
                continue
            d = math.dist(entry.position, det.position)
            if d > self.r_assoc:
                continue
            if entry.feature is not None and det.feature is not None:
                if _cosine(entry.feature, det.feature) < self.theta_feat:
                    continue
            if best is None or d < best_d:
                best, best_d = entry, d
        if best is None:
            self.entries.append(
                ObjectEntry(
                    id=self._next_id,
                    category=det.category,
                    confidence=det.confidence,
                    position=tuple(det.position),
                    feature=tuple(det.feature) if det.feature is not None else None,
                    observations=1,
                    attribute=det.attribute,
                    position_weight=det.confidence,
                )
            )
            self._next_id += 1
            return
        w = best.position_weight
        total = w + det.confidence
        if total > 0:
            best.position = tuple(
                (w * pe + det.confidence * pd) / total
                for pe, pd in zip(best.position, det.position)
            )
        best.position_weight = total
        best.confidence = max(best.confidence, det.confidence)
        if best.feature is not None and det.feature is not None:
            n = best.observations
            mean = tuple(
                (fe * n + fd) / (n + 1) for fe, fd in zip(best.feature, det.feature)
            )
            best.feature = unit(mean)
        elif best.feature is None and det.feature is not None:
            best.feature = tuple(det.feature)
        if not best.attribute and det.attribute:
            best.attribute = det.attribute
        best.observations += 1

    def snapshot(self) -> "SemanticMap":
        return copy.deepcopy(self)

    def dump(self) -> str:
        lines = [
            f"OBJ {e.id} {e.category} {e.confidence:.3f} {e.position[0]:.3f} "
            f"{e.position[1]:.3f} {e.observations}"
            for e in self.entries
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def localize_target(
    smap: SemanticMap,
    instruction: TaskInstruction,
    theta_loc: float,
    theta_feat_goal: float = 0.8,
):
    """Known-target shortcut query.

    object/description: highest-confidence category match with confidence >=
    theta_loc (description additionally requires the qualifier as a substring
    of the entry attribute); image: best feature cosine if >= theta_feat_goal.
    Returns (position, entry id) or None.
    """
    if not (0.0 <= theta_loc <= 1.0):
        raise RejectedInputError(f"theta_loc {theta_loc} outside [0, 1]")
    instruction.validate()
    if instruction.kind == "image":
        best = None
        best_sim = None
        for e in smap.entries:
            if e.feature is None:
                continue
            sim = _cosine(e.feature, instruction.feature)
            if best is None or sim > best_sim or (sim == best_sim and e.id < best.id):
                best, best_sim = e, sim
        if best is not None and best_sim >= theta_feat_goal:
            return (best.position, best.id)
        return None

    best = None
    for e in smap.entries:
        if e.category != instruction.target_category:
            continue
        if instruction.kind == "description" and instruction.qualifier:
            if instruction.qualifier not in e.attribute:
                continue
        if e.confidence < theta_loc:
            continue
        if best is None or e.confidence > best.confidence or (
            e.confidence == best.confidence and e.id < best.id
        ):
            best = e
    if best is None:
        return None
    return (best.position, best.id)
