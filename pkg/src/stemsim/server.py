"""HTTP service exposing retrieval and fitting over a loaded library.

Endpoints (all JSON, versioned under /v1):

    GET  /v1/health            liveness plus library provenance
    GET  /v1/presets           named weight presets for the active config
    GET  /v1/library           paged listing of library segments
    POST /v1/query             weighted retrieval against the library
    POST /v1/fit               cross-validated weight fit on a dataset

Errors use one shape: {"error_code": str, "message": str}. Malformed
payloads map to 400, unknown names to 404, domain invariant violations
to 422, anything unexpected to 500. Every numerical response carries a
provenance block naming the encoder, source, and stem config it was
computed under.
"""

from __future__ import annotations

import dataclasses
from typing import Any, Mapping, Sequence

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import evaluation, presets, retrieval
from .errors import (
    EmptyDataset,
    StemSimError,
    UnknownDataset,
    UnknownSegment,
)
from .regression import FitConfig
from .stems import StemConfig
from .store import EmbeddingStore, TripletRecord

MAX_PAGE_SIZE = 500


@dataclasses.dataclass
class ServiceState:
    """Everything the endpoints need, resolved once at startup."""

    store: EmbeddingStore
    config: StemConfig
    encoder_id: str
    source: str
    index: retrieval.SearchIndex
    presets: dict[str, presets.WeightPreset]
    datasets: dict[str, list[TripletRecord]]

    @property
    def provenance(self) -> dict[str, str]:
        return {
            "encoder": self.encoder_id,
            "source": self.source,
            "config": self.config.name,
        }


def build_state(
    store: EmbeddingStore,
    config: StemConfig,
    encoder_id: str,
    source: str,
    datasets: Mapping[str, Sequence[TripletRecord]] | None = None,
    preset_dir: str | None = None,
) -> ServiceState:
    entries = retrieval.library_from_store(store, config, encoder_id, source)
    index = retrieval.build_index(entries, config)
    named = {
        p.name: p for p in retrieval.weight_presets(index, preset_dir=preset_dir)
    }
    return ServiceState(
        store=store,
        config=config,
        encoder_id=encoder_id,
        source=source,
        index=index,
        presets=named,
        datasets={k: list(v) for k, v in (datasets or {}).items()},
    )


class QueryBody(BaseModel):
    reference: str | dict[str, list[float]]
    weights: dict[str, float] | list[float]
    top_k: int = 10
    channel_filter: list[str] | None = None


class FitBody(BaseModel):
    dataset: str
    method: str = "ols"
    alpha: float = Field(default=1.0, alias="lambda")
    cutoff: float = 0.5
    seed: int = 0
    iterations: int = 100
    train_fraction: float = 0.7

    model_config = {"populate_by_name": True}


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error_code": code, "message": message}
    )


_NOT_FOUND = (UnknownSegment, UnknownDataset)


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="stemsim", version="1")

    @app.exception_handler(RequestValidationError)
    async def _on_bad_request(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in first.get("loc", ()))
        msg = first.get("msg", "invalid request")
        return _error(400, "InvalidRequest", f"{loc}: {msg}" if loc else msg)

    @app.exception_handler(StemSimError)
    async def _on_domain_error(request: Request, exc: StemSimError):
        status = 404 if isinstance(exc, _NOT_FOUND) else 422
        return _error(status, exc.code, str(exc))

    @app.exception_handler(Exception)
    async def _on_crash(request: Request, exc: Exception):
        return _error(500, "Internal", "internal error")

    @app.get("/v1/health")
    def health() -> dict[str, Any]:
        return {
            "status": "ok",
            "library_size": len(state.index),
            "datasets": sorted(state.datasets),
            "provenance": state.provenance,
        }

    @app.get("/v1/presets")
    def list_presets() -> dict[str, Any]:
        items = []
        for preset in state.presets.values():
            items.append(
                {
                    "name": preset.name,
                    "method": preset.method,
                    "lambda": preset.alpha,
                    "weights": {k: v for k, v in preset.weights.items()},
                }
            )
        return {
            "presets": items,
            "channels": list(state.config.channels),
            "provenance": state.provenance,
        }

    @app.get("/v1/library")
    def library(
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=50, ge=1, le=MAX_PAGE_SIZE),
    ) -> dict[str, Any]:
        ids = state.index.segment_ids
        page = ids[offset : offset + limit]
        items = []
        for segment_id in page:
            entry = state.index.entries[state.index.position(segment_id)]
            items.append({"segment_id": segment_id, "display": dict(entry.display)})
        return {
            "total": len(ids),
            "offset": offset,
            "limit": limit,
            "segments": items,
            "provenance": state.provenance,
        }

    @app.post("/v1/query")
    def run_query(body: QueryBody) -> dict[str, Any]:
        reference: str | dict = body.reference
        if isinstance(reference, dict):
            reference = {k: np.asarray(v, dtype=np.float64) for k, v in reference.items()}
        channel_filter = (
            frozenset(body.channel_filter) if body.channel_filter is not None else None
        )
        spec = retrieval.QuerySpec(
            reference=reference,
            weights=body.weights,
            top_k=body.top_k,
            channel_filter=channel_filter,
        )
        results = retrieval.query(state.index, spec)
        return {
            "results": [
                {
                    "rank": rank,
                    "segment_id": r.segment_id,
                    "score": r.score,
                    "breakdown": dict(r.breakdown),
                    "display": dict(r.display),
                }
                for rank, r in enumerate(results, start=1)
            ],
            "top_k": body.top_k,
            "provenance": state.provenance,
        }

    @app.post("/v1/fit")
    def run_fit(body: FitBody) -> dict[str, Any]:
        if body.dataset not in state.datasets:
            raise UnknownDataset(
                f"unknown dataset {body.dataset!r}; have "
                + (", ".join(sorted(state.datasets)) or "none")
            )
        triplets = state.datasets[body.dataset]
        aggregated = evaluation.aggregate(triplets, body.cutoff)
        if not aggregated:
            raise EmptyDataset(
                f"no triplets survive aggregation at cutoff {body.cutoff}"
            )
        rows = evaluation.design_rows(
            aggregated, state.store, state.config, state.encoder_id, state.source
        )
        report = evaluation.cross_validate(
            rows,
            FitConfig(method=body.method, alpha=body.alpha),
            evaluation.EvalConfig(
                cutoff=body.cutoff,
                iterations=body.iterations,
                train_fraction=body.train_fraction,
                seed=body.seed,
            ),
            channels=state.config.channels,
            provenance={**state.provenance, "dataset": body.dataset},
        )
        return report.to_dict()

    return app
