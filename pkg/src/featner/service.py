"""HTTP+JSON service for the annotation workflow.

Serves tasks with controls indistinguishable from candidates, accepts one
complete response per annotator, and exposes aggregate reports for admins.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .humaneval import (
    QUORUM,
    AnnotatorResponse,
    DuplicateSubmission,
    IncompleteResponse,
    TaskStore,
    UnknownTask,
    task_report,
)


class ResponseIn(BaseModel):
    annotator_id: str
    answers: dict[str, str]


def create_app(store: TaskStore, quorum: int = QUORUM) -> FastAPI:
    app = FastAPI(title="feature annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/tasks")
    def list_tasks():
        open_ids = {t.task_id for t in store.open_tasks(quorum)}
        return {
            "tasks": [
                {
                    "task_id": t.task_id,
                    "n_items": len(t.items),
                    "open": t.task_id in open_ids,
                    "accepted_responses": store.accepted_count(t.task_id),
                }
                for t in store.tasks()
            ]
        }

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        try:
            return store.task(task_id).public_dict()
        except UnknownTask:
            raise HTTPException(status_code=404, detail=f"no task {task_id!r}")

    @app.post("/tasks/{task_id}/responses", status_code=201)
    def submit_response(task_id: str, body: ResponseIn):
        try:
            response = AnnotatorResponse(
                annotator_id=body.annotator_id,
                task_id=task_id,
                answers=body.answers,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            accepted = store.submit(response)
        except UnknownTask:
            raise HTTPException(status_code=404, detail=f"no task {task_id!r}")
        except DuplicateSubmission as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except IncompleteResponse as exc:
            raise HTTPException(
                status_code=422,
                detail={
                    "message": str(exc),
                    "missing": exc.missing,
                    "extra": exc.extra,
                },
            )
        return {"status": "recorded", "accepted": accepted}

    @app.get("/admin/reports/{task_id}")
    def report(task_id: str):
        try:
            task = store.task(task_id)
        except UnknownTask:
            raise HTTPException(status_code=404, detail=f"no task {task_id!r}")
        return task_report(store.responses_for(task_id), task, quorum)

    return app


def serve(store_dir: str, host: str = "127.0.0.1", port: int = 8715) -> None:
    import uvicorn

    store = TaskStore(store_dir)
    uvicorn.run(create_app(store), host=host, port=port)
