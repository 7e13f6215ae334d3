"""JSON wire protocol shared by the engine and the model gateway.

Bodies are UTF-8 JSON with a version field "v": 1 and snake_case keys that
mirror the in-memory types. Endpoints: POST /score, /reflect, /summarize.
Parsers validate field presence, types, and value ranges; key order is not
significant.
"""

from __future__ import annotations

from .episodic_memory import EpisodeEntry, SummaryRecord
from .errors import ScorerRangeError, ScorerSchemaError
from .reflection import AvoidDisc, ReflectionSummary, TrySector
from .semantic_map import ObjectEntry, TaskInstruction

PROTOCOL_VERSION = 1


def _require(body, key, types):
    if not isinstance(body, dict) or key not in body:
        raise ScorerSchemaError(f"missing field '{key}'")
    value = body[key]
    if not isinstance(value, types):
        raise ScorerSchemaError(f"field '{key}' has wrong type {type(value).__name__}")
    return value


def _check_version(body):
    v = _require(body, "v", int)
    if v != PROTOCOL_VERSION:
        raise ScorerSchemaError(f"unsupported protocol version {v}")


def _point(p):
    if not (isinstance(p, (list, tuple)) and len(p) == 2
            and all(isinstance(v, (int, float)) for v in p)):
        raise ScorerSchemaError(f"not a 2d point: {p!r}")
    return (float(p[0]), float(p[1]))


# --- instruction ---

def instruction_to_json(ins: TaskInstruction) -> dict:
    return {
        "kind": ins.kind,
        "target_category": ins.target_category,
        "qualifier": ins.qualifier,
        "feature": list(ins.feature) if ins.feature is not None else None,
    }


def instruction_from_json(body) -> TaskInstruction:
    kind = _require(body, "kind", str)
    ins = TaskInstruction(
        kind=kind,
        target_category=body.get("target_category") or "",
        qualifier=body.get("qualifier"),
        feature=tuple(body["feature"]) if body.get("feature") is not None else None,
    )
    try:
        ins.validate()
    except ValueError as exc:
        raise ScorerSchemaError(str(exc))
    return ins


# --- reflection rules ---

def rules_to_json(rules: ReflectionSummary) -> dict:
    return {
        "avoid": [{"center": list(d.center), "radius": d.radius} for d in rules.avoid],
        "try_hints": [
            {"center_deg": s.center_deg, "half_width_deg": s.half_width_deg,
             "weight": s.weight}
            for s in rules.try_hints
        ],
        "evidence": rules.evidence,
    }


def rules_from_json(body) -> ReflectionSummary:
    avoid = []
    for d in _require(body, "avoid", list):
        radius = float(_require(d, "radius", (int, float)))
        if radius <= 0:
            raise ScorerRangeError(f"avoid radius must be > 0, got {radius}")
        avoid.append(AvoidDisc(center=_point(_require(d, "center", (list, tuple))),
                               radius=radius))
    hints = []
    for s in _require(body, "try_hints", list):
        weight = float(_require(s, "weight", (int, float)))
        if not (0.0 < weight <= 1.0):
            raise ScorerRangeError(f"try weight must be in (0, 1], got {weight}")
        hints.append(TrySector(
            center_deg=float(_require(s, "center_deg", (int, float))),
            half_width_deg=float(_require(s, "half_width_deg", (int, float))),
            weight=weight,
        ))
    return ReflectionSummary(avoid=avoid, try_hints=hints,
                             evidence=str(body.get("evidence", "")))


# --- scoring ---

def scoring_request_to_json(request: "ScoringRequest") -> dict:
    return {
        "v": PROTOCOL_VERSION,
        "instruction": instruction_to_json(request.instruction),
        "map_digest": [
            {
                "id": e.id,
                "category": e.category,
                "confidence": e.confidence,
                "position": list(e.position),
                "observations": e.observations,
                "attribute": e.attribute,
            }
            for e in request.map_digest
        ],
        "regions": [
            {"id": rid, "centroid": list(centroid), "extent": list(extent)}
            for rid, centroid, extent in request.regions
        ],
        "rules": rules_to_json(request.rules) if request.rules is not None else None,
        "long_term_summary": request.long_term_summary,
    }


def scoring_request_from_json(body) -> "ScoringRequest":
    from .scoring import ScoringRequest

    _check_version(body)
    instruction = instruction_from_json(_require(body, "instruction", dict))
    digest = []
    for e in _require(body, "map_digest", list):
        digest.append(ObjectEntry(
            id=int(_require(e, "id", int)),
            category=_require(e, "category", str),
            confidence=float(_require(e, "confidence", (int, float))),
            position=_point(_require(e, "position", (list, tuple))),
            feature=None,
            observations=int(_require(e, "observations", int)),
            attribute=str(e.get("attribute", "")),
        ))
    regions = []
    for r in _require(body, "regions", list):
        regions.append((
            int(_require(r, "id", int)),
            _point(_require(r, "centroid", (list, tuple))),
            _point(_require(r, "extent", (list, tuple))),
        ))
    if not regions:
        raise ScorerSchemaError("regions must be nonempty")
    ids = [r[0] for r in regions]
    if len(set(ids)) != len(ids):
        raise ScorerSchemaError("region ids must be unique")
    rules = body.get("rules")
    req = ScoringRequest(
        instruction=instruction,
        map_digest=digest,
        regions=regions,
        rules=rules_from_json(rules) if rules is not None else None,
        long_term_summary=body.get("long_term_summary"),
    )
    return req


def scoring_response_to_json(response: "ScoringResponse") -> dict:
    body = {
        "v": PROTOCOL_VERSION,
        "scores": [{"region_id": rid, "score": score} for rid, score in response.scores],
    }
    if response.warnings:
        body["warnings"] = list(response.warnings)
    return body


def scoring_response_from_json(body, expected_ids=None) -> "ScoringResponse":
    from .scoring import ScoringResponse

    _check_version(body)
    scores = []
    for item in _require(body, "scores", list):
        rid = int(_require(item, "region_id", int))
        score = float(_require(item, "score", (int, float)))
        if not (0.0 <= score <= 1.0):
            raise ScorerRangeError(f"score {score} for region {rid} outside [0, 1]")
        scores.append((rid, score))
    if expected_ids is not None:
        got = [rid for rid, _ in scores]
        if sorted(got) != sorted(expected_ids):
            raise ScorerSchemaError(
                f"response ids {sorted(got)} do not match request ids {sorted(expected_ids)}")
    warnings = body.get("warnings") or []
    return ScoringResponse(scores=scores, warnings=list(warnings))


# --- reflection endpoint ---

def reflect_request_to_json(instruction: TaskInstruction, long_term, recent) -> dict:
    return {
        "v": PROTOCOL_VERSION,
        "instruction": instruction_to_json(instruction),
        "long_term": [summary_to_json_record(s) for s in long_term],
        "recent": [entry_to_json(e) for e in recent],
    }


def reflect_response_from_json(body) -> ReflectionSummary:
    _check_version(body)
    return rules_from_json(body)


def reflect_response_to_json(rules: ReflectionSummary) -> dict:
    body = rules_to_json(rules)
    body["v"] = PROTOCOL_VERSION
    return body


# --- summarize endpoint ---

def entry_to_json(e: EpisodeEntry) -> dict:
    return {
        "step": e.step,
        "position": list(e.position),
        "action": {"kind": e.action.kind, "param": e.action.param},
        "region_id": e.rationale.region_id,
        "utility": e.rationale.utility,
        "text": e.rationale.text,
    }


def summarize_request_to_json(entries) -> dict:
    return {"v": PROTOCOL_VERSION, "entries": [entry_to_json(e) for e in entries]}


def summary_to_json_record(s: SummaryRecord) -> dict:
    return {
        "center": list(s.center),
        "radius": s.radius,
        "strategy": s.strategy,
        "step_range": list(s.step_range),
    }


def summarize_response_to_json(s: SummaryRecord) -> dict:
    body = summary_to_json_record(s)
    body["v"] = PROTOCOL_VERSION
    return body


def summarize_response_from_json(body) -> SummaryRecord:
    _check_version(body)
    radius = float(_require(body, "radius", (int, float)))
    if radius < 0:
        raise ScorerRangeError(f"summary radius must be >= 0, got {radius}")
    rng = _require(body, "step_range", (list, tuple))
    if len(rng) != 2:
        raise ScorerSchemaError("step_range must have two elements")
    return SummaryRecord(
        center=_point(_require(body, "center", (list, tuple))),
        radius=radius,
        strategy=str(_require(body, "strategy", str)),
        step_range=(int(rng[0]), int(rng[1])),
    )
