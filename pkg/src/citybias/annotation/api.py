"""HTTP JSON API over the annotation service.

Endpoints:
  GET  /tasks/next?annotator=ID     next task for an annotator (null when empty)
  POST /judgments                   {task_id, annotator, label}
  GET  /tasks/conflicts             conflict queue with votes and margins
  POST /tasks/{id}/adjudicate       {label, adjudicator}
  GET  /export/labels               CSV task_id,text,label,confidence,provenance
  GET  /export/summary              counts and mean confidence
  GET  /annotators/{id}             trust/accuracy profile
  GET  /history                     active-learning history CSV (when configured)

Auth is a single shared bearer token taken from CITYBIAS_ANNOTATION_TOKEN; with
the variable unset the API is open (local annotation sessions).
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from .service import AnnotationService, ServiceError

TOKEN_ENV = "CITYBIAS_ANNOTATION_TOKEN"


class JudgmentIn(BaseModel):
    task_id: str
    annotator: str
    label: str


class AdjudicationIn(BaseModel):
    label: str
    adjudicator: str


def build_app(service: AnnotationService) -> FastAPI:
    app = FastAPI(title="annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def check_auth(authorization: str | None) -> None:
        token = os.environ.get(TOKEN_ENV)
        if not token:
            return
        if authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="bad or missing token")

    def run(fn, *args):
        try:
            return fn(*args)
        except ServiceError as exc:
            raise HTTPException(status_code=exc.status_code, detail=exc.detail) from exc

    @app.get("/tasks/next")
    def next_task(annotator: str = Query(...), authorization: str | None = Header(default=None)):
        check_auth(authorization)
        task = run(service.next_task, annotator)
        return {"task": task}

    @app.post("/judgments")
    def post_judgment(body: JudgmentIn, authorization: str | None = Header(default=None)):
        check_auth(authorization)
        return run(service.submit_judgment, body.task_id, body.annotator, body.label)

    @app.get("/tasks/conflicts")
    def get_conflicts(authorization: str | None = Header(default=None)):
        check_auth(authorization)
        return {"conflicts": service.conflicts()}

    @app.post("/tasks/{task_id}/adjudicate")
    def post_adjudicate(task_id: str, body: AdjudicationIn,
                        authorization: str | None = Header(default=None)):
        check_auth(authorization)
        return run(service.adjudicate, task_id, body.label, body.adjudicator)

    @app.get("/export/labels", response_class=PlainTextResponse)
    def export_labels(authorization: str | None = Header(default=None)):
        check_auth(authorization)
        return PlainTextResponse(service.export_csv(), media_type="text/csv")

    @app.get("/export/summary")
    def export_summary(authorization: str | None = Header(default=None)):
        check_auth(authorization)
        return service.summary()

    @app.get("/annotators/{annotator_id}")
    def annotator_info(annotator_id: str, authorization: str | None = Header(default=None)):
        check_auth(authorization)
        return run(service.annotator_info, annotator_id)

    @app.get("/history", response_class=PlainTextResponse)
    def history(authorization: str | None = Header(default=None)):
        check_auth(authorization)
        if service.history_csv is None or not service.history_csv.exists():
            raise HTTPException(status_code=404, detail="no history configured")
        return PlainTextResponse(service.history_csv.read_text(encoding="utf-8"),
                                 media_type="text/csv")

    return app
