"""Response providers: canned fixtures for offline runs, hosted model calls
for production."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import httpx


class ProviderError(Exception):
    pass


class ProviderTimeout(ProviderError):
    pass


@dataclass
class GatewayConfig:
    provider: str = "fixture"  # fixture | hosted
    fixture_dir: str | None = None
    template_dir: str | None = None
    model: str = ""
    deadline_ms: int = 10000
    api_url: str = ""
    api_key: str = ""

    @classmethod
    def from_env(cls, env=os.environ) -> "GatewayConfig":
        cfg = cls(
            provider=env.get("GATEWAY_MODE", "fixture"),
            fixture_dir=env.get("GATEWAY_FIXTURES"),
            template_dir=env.get("GATEWAY_TEMPLATES"),
            model=env.get("GATEWAY_MODEL", ""),
            deadline_ms=int(env.get("GATEWAY_DEADLINE_MS", "10000")),
            api_url=env.get("GATEWAY_API_URL", ""),
            api_key=env.get("GATEWAY_API_KEY", ""),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.provider not in ("fixture", "hosted"):
            raise ValueError(f"unknown provider '{self.provider}'")
        if self.provider == "fixture" and not self.fixture_dir:
            raise ValueError("fixture mode requires a fixture directory")
        if self.provider == "hosted" and not (self.api_url and self.api_key):
            raise ValueError("hosted mode requires GATEWAY_API_URL and "
                             "GATEWAY_API_KEY in the environment")


class FixtureProvider:
    """Replays canned JSON replies. Layout: <dir>/<endpoint>/<case>.json,
    case "default" unless the request names another via header."""

    def __init__(self, fixture_dir):
        self.root = Path(fixture_dir)

    def reply(self, endpoint: str, request_body: dict, case: str = "default") -> dict:
        path = self.root / endpoint / f"{case}.json"
        if not path.is_file():
            raise ProviderError(f"no fixture for {endpoint}/{case}")
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)


_DEFAULT_TEMPLATES = {
    "score": (
        "You rate frontier regions for the task: {instruction}.\n"
        "Known objects: {map_digest}\nActive rules: {rules}\n"
        "History: {long_term_summary}\nRegions: {regions}\n"
        "Reply with JSON {{\"v\": 1, \"scores\": [{{\"region_id\": id, "
        "\"score\": 0..1}}]}} covering every region id."
    ),
    "reflect": (
        "The agent is stuck on the task: {instruction}.\n"
        "Long-term summaries: {long_term}\nRecent steps: {recent}\n"
        "Reply with JSON {{\"v\": 1, \"avoid\": [{{\"center\": [x, y], "
        "\"radius\": r}}], \"try_hints\": [{{\"center_deg\": a, "
        "\"half_width_deg\": w, \"weight\": 0..1}}], \"evidence\": text}}."
    ),
    "summarize": (
        "Compress these exploration steps into one record: {entries}\n"
        "Reply with JSON {{\"v\": 1, \"center\": [x, y], \"radius\": r, "
        "\"strategy\": text, \"step_range\": [first, last]}}."
    ),
}


class HostedProvider:
    """Templates the request into a prompt, posts it to the provider API,
    and returns the model's JSON reply."""

    def __init__(self, config: GatewayConfig):
        self.config = config

    def _template(self, endpoint: str) -> str:
        if self.config.template_dir:
            path = Path(self.config.template_dir) / f"{endpoint}.txt"
            if path.is_file():
                return path.read_text(encoding="utf-8")
        return _DEFAULT_TEMPLATES[endpoint]

    def reply(self, endpoint: str, request_body: dict, case: str = "default") -> dict:
        fields = {k: json.dumps(v, sort_keys=True) for k, v in request_body.items()}
        prompt = self._template(endpoint).format_map(_Permissive(fields))
        try:
            resp = httpx.post(
                self.config.api_url,
                json={"model": self.config.model, "prompt": prompt},
                headers={"Authorization": f"Bearer {self.config.api_key}"},
                timeout=self.config.deadline_ms / 1000.0,
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(str(exc))
        except httpx.HTTPError as exc:
            raise ProviderError(str(exc))
        if resp.status_code != 200:
            raise ProviderError(f"provider returned HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderError(f"provider reply is not JSON: {exc}")


class _Permissive(dict):
    def __missing__(self, key):
        return "null"


def make_provider(config: GatewayConfig):
    config.validate()
    if config.provider == "fixture":
        return FixtureProvider(config.fixture_dir)
    return HostedProvider(config)
