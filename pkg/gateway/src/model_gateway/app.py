"""FastAPI application exposing /score, /reflect, /summarize.

Every 200 body is schema-valid under the shared wire protocol; malformed
requests get 400 and provider deadline overruns get 504. Request handling is
stateless, so the app is safe under concurrent clients.
"""

from __future__ import annotations

from fastapi import FastAPI, Header, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from .providers import GatewayConfig, ProviderError, ProviderTimeout, make_provider
from .schemas import (
    PROTOCOL_VERSION,
    ReflectRequest,
    RegionScore,
    ScoreRequest,
    ScoreResponse,
    SummarizeRequest,
    SummaryRecord,
    sanitize_rules,
)


def create_app(config: GatewayConfig | None = None) -> FastAPI:
    config = config or GatewayConfig.from_env()
    provider = make_provider(config)
    app = FastAPI(title="nav-model-gateway")

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"detail": jsonable_encoder(exc.errors())})

    def ask(endpoint: str, body: dict, case: str):
        try:
            return provider.reply(endpoint, body, case=case), None
        except ProviderTimeout as exc:
            return None, JSONResponse(status_code=504,
                                      content={"detail": str(exc)})
        except ProviderError as exc:
            return None, JSONResponse(status_code=502,
                                      content={"detail": str(exc)})

    @app.post("/score")
    async def score(req: ScoreRequest,
                    x_fixture_case: str = Header(default="default")):
        raw, err = ask("score", req.model_dump(), x_fixture_case)
        if err is not None:
            return err
        scores = {}
        warnings = []
        for item in raw.get("scores", []) if isinstance(raw, dict) else []:
            if not isinstance(item, dict):
                continue
            rid = item.get("region_id")
            value = item.get("score")
            if isinstance(rid, int) and isinstance(value, (int, float)):
                scores[rid] = min(1.0, max(0.0, float(value)))
        out = []
        for region in req.regions:
            if region.id not in scores:
                warnings.append(f"region {region.id} missing from model reply, "
                                "defaulted to 0.5")
            out.append(RegionScore(region_id=region.id,
                                   score=scores.get(region.id, 0.5)))
        for extra in raw.get("warnings", []) if isinstance(raw, dict) else []:
            warnings.append(str(extra))
        return JSONResponse(ScoreResponse(scores=out, warnings=warnings).body())

    @app.post("/reflect")
    async def reflect(req: ReflectRequest,
                      x_fixture_case: str = Header(default="default")):
        raw, err = ask("reflect", req.model_dump(), x_fixture_case)
        if err is not None:
            return err
        return JSONResponse(sanitize_rules(raw if isinstance(raw, dict) else {}))

    @app.post("/summarize")
    async def summarize(req: SummarizeRequest,
                        x_fixture_case: str = Header(default="default")):
        raw, err = ask("summarize", req.model_dump(), x_fixture_case)
        if err is not None:
            return err
        try:
            record = SummaryRecord.model_validate(
                {k: v for k, v in raw.items() if k != "v"}
                if isinstance(raw, dict) else {})
        except ValidationError:
            # degenerate but schema-valid fallback derived from the request
            first, last = req.entries[0], req.entries[-1]
            record = SummaryRecord(
                center=first.position, radius=0.0,
                strategy="summary unavailable",
                step_range=[first.step, last.step])
        body = record.model_dump()
        body["v"] = PROTOCOL_VERSION
        return JSONResponse(body)

    return app
