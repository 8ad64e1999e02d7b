"""HTTP clients for the pluggable neural endpoints (generator, grouper,
refiner, judge, embedder), with retrying transport and strict response
parsing."""

from __future__ import annotations

import time
from dataclasses import dataclass

import httpx
import numpy as np

from .augment import GeneratorRequest
from .core import Layout, layout_to_dict
from .diversity import FeatureSource, FeatureVector


class TransportError(Exception):
    """Endpoint unreachable after the configured retries; safe to retry later."""


class EndpointProtocolError(Exception):
    """Endpoint answered outside its wire contract."""

    def __init__(self, message: str, payload_excerpt: str = ""):
        super().__init__(f"{message}: {payload_excerpt!r}" if payload_excerpt else message)
        self.payload_excerpt = payload_excerpt


def _excerpt(text: str, limit: int = 200) -> str:
    return text[:limit]


@dataclass
class HttpEndpoint:
    """POST-JSON endpoint with exponential-backoff retries.

    5xx and transport failures retry; other non-200s and unparseable bodies
    raise EndpointProtocolError with an excerpt of the offending payload.
    """

    base_url: str
    retries: int = 2
    backoff_s: float = 0.1
    timeout_s: float = 30.0
    transport: httpx.BaseTransport | None = None

    def __post_init__(self) -> None:
        self._client = httpx.Client(
            base_url=self.base_url, timeout=self.timeout_s, transport=self.transport
        )

    def post(self, path: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self._client.post(path, json=payload)
            except httpx.TransportError as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(self.backoff_s * (2**attempt))
                continue
            if response.status_code >= 500:
                last_error = EndpointProtocolError(
                    f"server error {response.status_code}", _excerpt(response.text)
                )
                if attempt < self.retries:
                    time.sleep(self.backoff_s * (2**attempt))
                continue
            if response.status_code != 200:
                raise EndpointProtocolError(
                    f"unexpected status {response.status_code}", _excerpt(response.text)
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise EndpointProtocolError(
                    "response is not JSON", _excerpt(response.text)
                ) from exc
            if not isinstance(body, dict):
                raise EndpointProtocolError(
                    "response is not a JSON object", _excerpt(response.text)
                )
            return body
        raise TransportError(
            f"{self.base_url}{path} unreachable after {self.retries + 1} attempts: {last_error}"
        )


class HttpGeneratorClient:
    def __init__(self, endpoint: HttpEndpoint):
        self._endpoint = endpoint

    def generate(self, request: GeneratorRequest) -> list[dict]:
        body = self._endpoint.post("/generate", request.to_dict())
        layouts = body.get("layouts")
        if not isinstance(layouts, list):
            raise EndpointProtocolError("missing 'layouts' list", _excerpt(str(body)))
        return layouts


class HttpGrouperClient:
    def __init__(self, endpoint: HttpEndpoint):
        self._endpoint = endpoint

    def group(self, layout: Layout) -> list[list[str]]:
        body = self._endpoint.post("/group", {"layout": layout_to_dict(layout)})
        groups = body.get("groups")
        if not isinstance(groups, list) or not all(isinstance(g, list) for g in groups):
            raise EndpointProtocolError("missing 'groups' list of lists", _excerpt(str(body)))
        return [[str(eid) for eid in g] for g in groups]


class HttpRefinerClient:
    def __init__(self, endpoint: HttpEndpoint):
        self._endpoint = endpoint

    def refine(self, layout: Layout) -> dict:
        body = self._endpoint.post("/refine", {"layout": layout_to_dict(layout)})
        refined = body.get("layout")
        if not isinstance(refined, dict):
            raise EndpointProtocolError("missing 'layout' object", _excerpt(str(body)))
        return refined


class HttpJudgeClient:
    def __init__(self, endpoint: HttpEndpoint):
        self._endpoint = endpoint

    def judge(
        self, pair_id: str, left_render: str, right_render: str, left_meta: dict, right_meta: dict
    ) -> str:
        body = self._endpoint.post(
            "/judge",
            {
                "pair_id": pair_id,
                "left_render": left_render,
                "right_render": right_render,
                "left_meta": left_meta,
                "right_meta": right_meta,
            },
        )
        label = body.get("label")
        if not isinstance(label, str):
            raise EndpointProtocolError("missing 'label' string", _excerpt(str(body)))
        return label


class HttpEmbedderClient:
    def __init__(self, endpoint: HttpEndpoint):
        self._endpoint = endpoint

    def embed(self, layouts: list[Layout]) -> list[FeatureVector]:
        body = self._endpoint.post(
            "/embed", {"layouts": [layout_to_dict(l) for l in layouts]}
        )
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(layouts):
            raise EndpointProtocolError(
                f"expected {len(layouts)} vectors", _excerpt(str(body))
            )
        dims = {len(v) for v in vectors}
        if len(dims) > 1:
            raise EndpointProtocolError(f"inconsistent vector dimensions {sorted(dims)}")
        return [
            FeatureVector(dims=np.asarray(v, dtype=float), source=FeatureSource.REMOTE)
            for v in vectors
        ]


def remote_embedder(client: HttpEmbedderClient):
    """Adapt the batch embed endpoint to the per-layout embedder interface."""

    def embed_one(layout: Layout) -> FeatureVector:
        return client.embed([layout])[0]

    return embed_one
