"""Deterministic in-process stand-ins for the remote endpoints.

The stub generator retargets each group onto the requested canvas with a
seeded jitter so candidate sets vary but reproduce bit-for-bit. These back
offline pipeline runs and the test suite; they are not models.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .augment import GeneratorRequest
from .core import BBox, Canvas, layout_from_dict, layout_to_dict
from .grouping import group_heuristic
from .refine import RefineConfig, refine_layout


def _derive_seed(*parts) -> int:
    digest = hashlib.sha256("::".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class StubGenerator:
    """Seeded generator over the same element set.

    Sample 0 echoes the source arrangement (the 'default output'); most
    samples apply a clean whole-layout scale-and-shift so candidate sets are
    structurally distinct but defect-free; every third sample jitters groups
    independently, which may introduce overlaps for the filter to catch.
    """

    seed: int = 0
    jitter: float = 0.08

    def generate(self, request: GeneratorRequest) -> list[dict]:
        canvas = request.target_canvas
        out = []
        for sample_index in range(request.num_samples):
            rng = random.Random(
                _derive_seed(self.seed, canvas.width_px, canvas.height_px, sample_index)
            )
            if sample_index == 0:
                elements = self._echo(request)
            elif sample_index % 3 == 0:
                elements = self._group_jitter(request, rng)
            else:
                elements = self._scale_shift(request, rng)
            out.append(
                {
                    "layout_id": f"stub_sample_{sample_index}",
                    "canvas": {"width_px": canvas.width_px, "height_px": canvas.height_px},
                    "variant": "original_ratio",
                    "source": "generated",
                    "elements": elements,
                }
            )
        return out

    @staticmethod
    def _element(el: dict, x: float, y: float, w: float, h: float) -> dict:
        return {
            "id": el["id"],
            "kind": el["kind"],
            "bbox": {"x": x, "y": y, "w": w, "h": h},
            "z": el["z"],
            "label": el["label"],
        }

    def _echo(self, request: GeneratorRequest) -> list[dict]:
        return [
            self._element(el, el["bbox"]["x"], el["bbox"]["y"], el["bbox"]["w"], el["bbox"]["h"])
            for g in request.groups
            for el in g.elements
        ]

    def _scale_shift(self, request: GeneratorRequest, rng: random.Random) -> list[dict]:
        """Scale everything about the canvas center, then shift into free space.

        Uniform transforms preserve disjointness, alignment, and balance, so
        these candidates stay clean while differing positionally.
        """
        factor = rng.uniform(0.6, 0.95)
        scaled = []
        for g in request.groups:
            for el in g.elements:
                b = el["bbox"]
                w, h = b["w"] * factor, b["h"] * factor
                x = 0.5 + factor * (b["x"] - 0.5)
                y = 0.5 + factor * (b["y"] - 0.5)
                scaled.append(self._element(el, x, y, w, h))
        min_x = min(e["bbox"]["x"] for e in scaled)
        min_y = min(e["bbox"]["y"] for e in scaled)
        max_x = max(e["bbox"]["x"] + e["bbox"]["w"] for e in scaled)
        max_y = max(e["bbox"]["y"] + e["bbox"]["h"] for e in scaled)
        dx = rng.uniform(-min_x, 1.0 - max_x)
        dy = rng.uniform(-min_y, 1.0 - max_y)
        for e in scaled:
            e["bbox"]["x"] += dx
            e["bbox"]["y"] += dy
        return scaled

    def _group_jitter(self, request: GeneratorRequest, rng: random.Random) -> list[dict]:
        elements = []
        for group in request.groups:
            gb = group.bbox
            dx = rng.uniform(-self.jitter, self.jitter)
            dy = rng.uniform(-self.jitter, self.jitter)
            # keep the whole group inside the canvas
            dx = min(max(dx, -gb.x), 1.0 - gb.x2)
            dy = min(max(dy, -gb.y), 1.0 - gb.y2)
            for el in group.elements:
                b = el["bbox"]
                elements.append(self._element(el, b["x"] + dx, b["y"] + dy, b["w"], b["h"]))
        return elements


def sync_asgi_transport(app):
    """httpx sync transport running an ASGI app in a private event loop.

    Lets the synchronous HTTP clients talk to an in-process stub app with no
    socket; each request runs to completion on its own loop.
    """
    import asyncio

    import httpx

    class _SyncASGITransport(httpx.BaseTransport):
        def __init__(self, asgi_app):
            self._inner = httpx.ASGITransport(app=asgi_app)

        def handle_request(self, request: httpx.Request) -> httpx.Response:
            async def roundtrip() -> httpx.Response:
                response = await self._inner.handle_async_request(request)
                body = b"".join([chunk async for chunk in response.stream])
                await response.aclose()
                return httpx.Response(
                    response.status_code, headers=response.headers, content=body
                )

            return asyncio.run(roundtrip())

    return _SyncASGITransport(app)


def build_stub_app():
    """ASGI app exposing stub /generate, /group, /refine, /judge, /embed.

    Lets the HTTP clients be exercised over a real wire protocol in tests
    (via httpx's ASGI transport) without any model behind them.
    """
    from fastapi import FastAPI

    from .augment import GroupPayload
    from .diversity import embed_geometric
    from .judge import judge_pair_heuristic
    from .pairs import PreferencePair

    app = FastAPI()

    @app.post("/generate")
    def generate(payload: dict):
        groups = tuple(
            GroupPayload(
                ids=tuple(g["ids"]),
                bbox=BBox(g["bbox"]["x"], g["bbox"]["y"], g["bbox"]["w"], g["bbox"]["h"]),
                label=g.get("label", ""),
                elements=tuple(g["elements"]),
            )
            for g in payload["groups"]
        )
        request = GeneratorRequest(
            groups=groups,
            target_canvas=Canvas(payload["canvas"]["width_px"], payload["canvas"]["height_px"]),
            num_samples=payload.get("num_samples", 10),
            temperature=payload.get("temperature"),
        )
        return {"layouts": StubGenerator().generate(request)}

    @app.post("/group")
    def group(payload: dict):
        layout = layout_from_dict(payload["layout"])
        return {"groups": group_heuristic(layout).to_lists()}

    @app.post("/refine")
    def refine(payload: dict):
        layout = layout_from_dict(payload["layout"])
        result = refine_layout(layout, RefineConfig())
        return {"layout": layout_to_dict(result.layout)}

    @app.post("/judge")
    def judge(payload: dict):
        left = layout_from_dict(payload["left_meta"])
        right = layout_from_dict(payload["right_meta"])
        pair = PreferencePair(pair_id=payload["pair_id"], left=left, right=right)
        return {"label": judge_pair_heuristic(pair).label.value}

    @app.post("/embed")
    def embed(payload: dict):
        vectors = [
            embed_geometric(layout_from_dict(raw)).dims.tolist()
            for raw in payload["layouts"]
        ]
        return {"vectors": vectors}

    return app
