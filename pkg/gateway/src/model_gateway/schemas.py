"""Pydantic models for the version-1 wire protocol.

Deliberately independent of the engine's own serializers: the two sides only
have to agree on the JSON, which the shared golden fixtures pin down.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, field_validator

PROTOCOL_VERSION = 1


class Instruction(BaseModel):
    kind: str
    target_category: str = ""
    qualifier: str | None = None
    feature: list[float] | None = None

    @field_validator("kind")
    @classmethod
    def known_kind(cls, v):
        if v not in ("object", "description", "image"):
            raise ValueError(f"unknown instruction kind '{v}'")
        return v


class MapEntry(BaseModel):
    id: int
    category: str
    confidence: float = Field(ge=0.0, le=1.0)
    position: list[float] = Field(min_length=2, max_length=2)
    observations: int = Field(ge=1)
    attribute: str = ""


class Region(BaseModel):
    id: int
    centroid: list[float] = Field(min_length=2, max_length=2)
    extent: list[float] = Field(min_length=2, max_length=2)


class AvoidDisc(BaseModel):
    center: list[float] = Field(min_length=2, max_length=2)
    radius: float


class TrySector(BaseModel):
    center_deg: float
    half_width_deg: float
    weight: float


class Rules(BaseModel):
    avoid: list[AvoidDisc] = []
    try_hints: list[TrySector] = []
    evidence: str = ""


class ScoreRequest(BaseModel):
    v: int
    instruction: Instruction
    map_digest: list[MapEntry] = []
    regions: list[Region] = Field(min_length=1)
    rules: Rules | None = None
    long_term_summary: str | None = None

    @field_validator("v")
    @classmethod
    def version_one(cls, v):
        if v != PROTOCOL_VERSION:
            raise ValueError(f"unsupported protocol version {v}")
        return v

    @field_validator("regions")
    @classmethod
    def unique_ids(cls, regions):
        ids = [r.id for r in regions]
        if len(set(ids)) != len(ids):
            raise ValueError("region ids must be unique")
        return regions


class RegionScore(BaseModel):
    region_id: int
    score: float = Field(ge=0.0, le=1.0)


class ScoreResponse(BaseModel):
    v: int = PROTOCOL_VERSION
    scores: list[RegionScore]
    warnings: list[str] | None = None

    def body(self) -> dict:
        out = {"v": self.v,
               "scores": [s.model_dump() for s in self.scores]}
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


class Entry(BaseModel):
    step: int
    position: list[float] = Field(min_length=2, max_length=2)
    action: dict
    region_id: int | None = None
    utility: dict | None = None
    text: str = ""


class SummaryRecord(BaseModel):
    center: list[float] = Field(min_length=2, max_length=2)
    radius: float = Field(ge=0.0)
    strategy: str
    step_range: list[int] = Field(min_length=2, max_length=2)


class ReflectRequest(BaseModel):
    v: int
    instruction: Instruction
    long_term: list[SummaryRecord] = []
    recent: list[Entry] = []

    @field_validator("v")
    @classmethod
    def version_one(cls, v):
        if v != PROTOCOL_VERSION:
            raise ValueError(f"unsupported protocol version {v}")
        return v


class SummarizeRequest(BaseModel):
    v: int
    entries: list[Entry] = Field(min_length=1)

    @field_validator("v")
    @classmethod
    def version_one(cls, v):
        if v != PROTOCOL_VERSION:
            raise ValueError(f"unsupported protocol version {v}")
        return v


def sanitize_rules(raw: dict) -> dict:
    """Enforce geometry invariants on a model-produced rules body: any
    invalid disc empties the avoid list, any invalid sector empties the try
    list; evidence text always passes through."""
    avoid = raw.get("avoid") or []
    hints = raw.get("try_hints") or []
    if any(not isinstance(d, dict) or not isinstance(d.get("radius"), (int, float))
           or d["radius"] <= 0 for d in avoid):
        avoid = []
    if any(not isinstance(s, dict) or not isinstance(s.get("weight"), (int, float))
           or not (0.0 < s["weight"] <= 1.0) for s in hints):
        hints = []
    return {
        "v": PROTOCOL_VERSION,
        "avoid": avoid,
        "try_hints": hints,
        "evidence": str(raw.get("evidence", "")),
    }
