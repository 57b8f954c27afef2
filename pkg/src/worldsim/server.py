"""REST backend for the intervention console.

Mutating endpoints are idempotent via client-supplied request ids; generation
and intervention work runs on a bounded worker pool while clients poll run
status.
"""

from __future__ import annotations

import base64
import io
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from PIL import Image
from pydantic import BaseModel

from .config import PipelineConfig
from .params import ParameterNotFoundError, list_parameters
from .pipeline import Intervention, Orchestrator
from .scene import SceneInput
from .store import RunNotFoundError, RunStore

log = logging.getLogger(__name__)


class RunRequest(BaseModel):
    caption: str
    image_png_base64: str
    frame_size: tuple[int, int] | None = None
    fps: float = 30.0
    duration_s: float = 5.0
    request_id: str | None = None


class InterventionRequest(BaseModel):
    kind: str
    payload: Any
    request_id: str | None = None


def _decode_scene(body: RunRequest) -> SceneInput:
    raw = base64.b64decode(body.image_png_base64)
    image = np.asarray(Image.open(io.BytesIO(raw)).convert("RGB"))
    frame_size = body.frame_size or (image.shape[1], image.shape[0])
    return SceneInput(
        image=image,
        caption=body.caption,
        frame_size=tuple(frame_size),
        fps=body.fps,
        duration_s=body.duration_s,
    )


def _intervention_from_request(body: InterventionRequest) -> Intervention:
    if body.kind == "caption_edit":
        return Intervention.caption_edit(str(body.payload))
    if body.kind == "parameter_patch":
        if not isinstance(body.payload, dict):
            raise ValueError("parameter_patch payload must be a mapping")
        return Intervention.parameter_patch(body.payload)
    if body.kind == "source_edit":
        return Intervention.source_edit(str(body.payload))
    raise ValueError(f"unknown intervention kind {body.kind!r}")


def create_app(store: RunStore, orchestrator: Orchestrator, config: PipelineConfig) -> FastAPI:
    app = FastAPI(title="worldsim")
    # the console is served as static files from a different origin
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    pool = ThreadPoolExecutor(max_workers=config.serve.workers)
    request_lock = threading.Lock()
    store.mark_stale_runs_failed()

    def get_run(run_id: str):
        try:
            return store.get(run_id)
        except RunNotFoundError:
            raise HTTPException(status_code=404, detail=f"run {run_id} not found")

    @app.get("/runs")
    def list_runs():
        records = store.list_runs()
        children: dict[str, list[str]] = {}
        for record in records:
            if record.parent_run:
                children.setdefault(record.parent_run, []).append(record.run_id)
        out = []
        for record in records:
            summary = record.summary()
            summary["children"] = children.get(record.run_id, [])
            out.append(summary)
        return out

    @app.post("/runs", status_code=202)
    def create_run(body: RunRequest):
        with request_lock:
            if body.request_id:
                existing = store.claim_request_id(body.request_id)
                if existing:
                    return {"run_id": existing, "deduplicated": True}
            scene = _decode_scene(body)
            record = store.create_run(scene, config.snapshot())
            if body.request_id:
                store.bind_request_id(body.request_id, record.run_id)

        def work():
            try:
                orchestrator.generate(scene, record=record)
            except Exception:
                log.exception("generation failed for %s", record.run_id)

        store.update_meta(record.run_id, status="running")
        pool.submit(work)
        return {"run_id": record.run_id, "deduplicated": False}

    @app.get("/runs/{run_id}")
    def run_detail(run_id: str):
        record = get_run(run_id)
        summary = record.summary()
        summary["samples"] = record.meta.get("samples", [])
        summary["selected_sample"] = record.selected_sample
        summary["children"] = [c.run_id for c in store.children(run_id)]
        summary["scores_detail"] = record.scores()
        return summary

    @app.get("/runs/{run_id}/program")
    def run_program(run_id: str):
        record = get_run(run_id)
        try:
            source = record.final_program_source()
        except FileNotFoundError:
            raise HTTPException(status_code=404, detail="run has no final program")
        return {"run_id": run_id, "source": source}

    @app.get("/runs/{run_id}/parameters")
    def run_parameters(run_id: str):
        record = get_run(run_id)
        try:
            source = record.final_program_source()
        except FileNotFoundError:
            raise HTTPException(status_code=404, detail="run has no final program")
        return {"run_id": run_id, "parameters": list_parameters(source)}

    @app.post("/runs/{run_id}/interventions", status_code=202)
    def intervene(run_id: str, body: InterventionRequest):
        parent = get_run(run_id)
        with request_lock:
            if body.request_id:
                existing = store.claim_request_id(body.request_id)
                if existing:
                    return {"run_id": existing, "deduplicated": True}
            try:
                intervention = _intervention_from_request(body)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            # Validate payloads eagerly so bad requests fail fast instead of
            # creating a doomed run.
            if intervention.kind == "parameter_patch":
                try:
                    from .params import apply_parameter_patch

                    apply_parameter_patch(parent.final_program_source(), intervention.patches)
                except ParameterNotFoundError as exc:
                    raise HTTPException(status_code=422, detail=str(exc))
                except FileNotFoundError:
                    raise HTTPException(status_code=409, detail="parent run has no ok program")
            elif intervention.kind == "source_edit":
                from .sandbox import validate_contract

                report = validate_contract(
                    intervention.source, config.toolbox.allowed_libraries
                )
                if not report.ok:
                    raise HTTPException(status_code=422, detail=report.as_text())

            child = store.create_run(
                parent.scene(), config.snapshot(), parent_run=run_id,
                intervention=intervention.as_dict(),
            )
            if body.request_id:
                store.bind_request_id(body.request_id, child.run_id)

        def work():
            try:
                orchestrator.intervene(run_id, intervention, child=child)
            except Exception as exc:
                log.exception("intervention failed for %s", child.run_id)
                store.update_meta(child.run_id, status="failed", error=str(exc))

        pool.submit(work)
        return {"run_id": child.run_id, "deduplicated": False}

    @app.get("/runs/{run_id}/frames/{index}")
    def run_frame(run_id: str, index: int):
        record = get_run(run_id)
        path = record.frame_path(index)
        if index < 0 or not path.is_file():
            raise HTTPException(status_code=404, detail=f"no frame {index}")
        return FileResponse(path, media_type="image/png")

    @app.get("/runs/{run_id}/stmap")
    def run_stmap(run_id: str):
        record = get_run(run_id)
        path = record.path / "stmap.png"
        if not path.is_file():
            raise HTTPException(status_code=404, detail="run has no spatiotemporal map")
        return FileResponse(path, media_type="image/png")

    @app.get("/runs/{run_id}/scores")
    def run_scores(run_id: str):
        record = get_run(run_id)
        scores = record.scores()
        if scores is None:
            raise HTTPException(status_code=404, detail="run is not scored")
        return JSONResponse(scores)

    return app


def serve(config: PipelineConfig, store_dir: str | None = None) -> None:
    """Run the HTTP service (blocking)."""
    import uvicorn

    store = RunStore(store_dir or config.store_dir)
    orchestrator = Orchestrator(store, config)
    app = create_app(store, orchestrator, config)
    uvicorn.run(app, host=config.serve.host, port=config.serve.port, log_level="info")
