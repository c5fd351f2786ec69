"""Local HTTP service for the human-in-the-loop labeling workflow.

Analysts pull keyword-flag and cluster-label tasks, resolve them, and
trigger recompiles; every resolution is appended to a JSONL audit log.
Replaying the audit log over the initial rule/pattern files reproduces the
current files byte-for-byte, and every response carries the state version
in the ``X-State-Version`` header.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from gatewatch.attribution import (
    ServiceRule,
    ServiceRuleSet,
    attribute,
    extract_keywords,
    mislabel_report,
)
from gatewatch.purpose import (
    Purpose,
    PurposePattern,
    TemplateCluster,
    label_cluster,
    save_purpose_patterns,
)

AUTH_TOKEN_ENV = "GATEWATCH_CONSOLE_TOKEN"
KEYWORD_QUEUE_CAP = 10_000


class TaskKind(str, Enum):
    KEYWORD_FLAG = "keyword_flag"
    CLUSTER_LABEL = "cluster_label"


class TaskStatus(str, Enum):
    PENDING = "pending"
    DONE = "done"
    SKIPPED = "skipped"


@dataclass
class LabelTask:
    id: str
    kind: TaskKind
    payload_id: str  # gram or cluster id
    context: dict
    status: TaskStatus = TaskStatus.PENDING
    resolution: dict | None = None

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "payload_id": self.payload_id,
            "context": self.context,
            "status": self.status.value,
            "resolution": self.resolution,
        }


class AlreadyResolved(RuntimeError):
    pass


class UnknownTask(KeyError):
    pass


def induce_pattern(purpose: Purpose, exemplar: Iterable[str]) -> PurposePattern:
    """Deterministic pattern from an exemplar: first four stems, identifier
    placeholders generalized to their kind prefix."""
    stems = []
    for tok in exemplar:
        if "{" in tok:
            tok = tok.split("{")[0] + "{"
        stems.append(tok)
        if len(stems) == 4:
            break
    return PurposePattern(purpose, tuple(stems))


class LabelState:
    """Single-writer state behind the HTTP API.

    Rule and pattern working files live under ``state_dir`` and are written
    with a canonical serialization after every change, so the audit-replay
    guarantee holds at the byte level.
    """

    def __init__(
        self,
        state_dir: str | Path,
        rules: ServiceRuleSet,
        patterns: list[PurposePattern],
        clusters: list[TemplateCluster] | None = None,
    ):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.rules = rules
        self.patterns = list(patterns)
        self.clusters = {str(c.id): c for c in (clusters or [])}
        self.version = 0
        self.tasks: dict[str, LabelTask] = {}
        self.audit_path = self.state_dir / "audit.jsonl"
        self.rules_path = self.state_dir / "service_rules.json"
        self.patterns_path = self.state_dir / "purpose_patterns.json"
        self.recompiles = 0
        self._persist()

    # -- task backlog ------------------------------------------------------

    def seed_keyword_tasks(self, corpus: Iterable[str], top_k: int = KEYWORD_QUEUE_CAP):
        known = {g for r in self.rules.rules for g in r.include}
        for cand in extract_keywords(corpus, top_k):
            if cand.gram in known:
                continue
            task_id = f"kw:{cand.gram}"
            if task_id not in self.tasks:
                self.tasks[task_id] = LabelTask(
                    id=task_id,
                    kind=TaskKind.KEYWORD_FLAG,
                    payload_id=cand.gram,
                    context={"gram": cand.gram, "frequency": cand.frequency},
                )

    def seed_cluster_tasks(self, samples: dict[str, list[str]] | None = None):
        for cid, cluster_ in self.clusters.items():
            if cluster_.purpose is not Purpose.UNLABELED:
                continue
            task_id = f"cl:{cid}"
            if task_id not in self.tasks:
                self.tasks[task_id] = LabelTask(
                    id=task_id,
                    kind=TaskKind.CLUSTER_LABEL,
                    payload_id=cid,
                    context={
                        "service": cluster_.service,
                        "exemplar": " ".join(cluster_.exemplar),
                        "member_count": cluster_.member_count,
                        "samples": (samples or {}).get(cid, [])[:10],
                    },
                )

    def next_tasks(self, kind: TaskKind, limit: int, offset: int = 0) -> list[LabelTask]:
        pending = [
            t for t in self.tasks.values()
            if t.kind is kind and t.status is TaskStatus.PENDING
        ]
        if kind is TaskKind.KEYWORD_FLAG:
            pending.sort(key=lambda t: (-t.context["frequency"], t.payload_id))
            pending = pending[:KEYWORD_QUEUE_CAP]
        else:
            pending.sort(key=lambda t: (-t.context["member_count"], t.payload_id))
        return pending[offset : offset + limit]

    # -- resolutions -------------------------------------------------------

    def apply_resolution(
        self, task_id: str, resolution: dict, _replaying: bool = False
    ) -> int:
        task = self.tasks.get(task_id)
        if task is None:
            raise UnknownTask(task_id)
        if task.status is not TaskStatus.PENDING:
            raise AlreadyResolved(task_id)
        action = resolution.get("action", "skip")
        if action == "skip":
            task.status = TaskStatus.SKIPPED
        elif task.kind is TaskKind.KEYWORD_FLAG:
            self._apply_keyword_flag(task, resolution)
            task.status = TaskStatus.DONE
        else:
            self._apply_cluster_label(task, resolution)
            task.status = TaskStatus.DONE
        task.resolution = resolution
        self.version += 1
        if not _replaying:
            self._audit(task_id, task.kind, resolution)
        self._persist()
        return self.version

    def _apply_keyword_flag(self, task: LabelTask, resolution: dict) -> None:
        gram = resolution.get("gram", task.payload_id)
        service = resolution["service"]
        category = resolution.get("category", "Other")
        as_exclude = bool(resolution.get("exclude", False))
        priority = int(resolution.get("priority", 0))
        rules = []
        found = False
        for rule in self.rules.rules:
            if rule.service == service:
                found = True
                include = set(rule.include)
                exclude = set(rule.exclude)
                (exclude if as_exclude else include).add(gram)
                rules.append(
                    ServiceRule(
                        service=rule.service,
                        category=rule.category,
                        include=tuple(sorted(include)),
                        exclude=tuple(sorted(exclude)),
                        priority=max(rule.priority, priority),
                    )
                )
            else:
                rules.append(rule)
        if not found:
            includes = () if as_exclude else (gram,)
            if not includes:
                raise ValueError("cannot create a rule from an exclude-only flag")
            rules.append(
                ServiceRule(
                    service=service,
                    category=category,
                    include=includes,
                    exclude=(),
                    priority=priority,
                )
            )
        self.rules = ServiceRuleSet(rules)

    def _apply_cluster_label(self, task: LabelTask, resolution: dict) -> None:
        purpose = Purpose(resolution["purpose"])
        cluster_ = self.clusters[task.payload_id]
        cluster_.purpose = purpose
        pattern = induce_pattern(purpose, cluster_.exemplar)
        if pattern not in self.patterns:
            self.patterns.append(pattern)

    # -- recompile ---------------------------------------------------------

    def recompile(self, corpus: list[tuple[str, str]] | None = None) -> dict:
        """Re-run attribution over (message id, text) pairs and re-apply
        purpose patterns to unlabeled clusters. Labels are versioned: each
        recompile writes labels_v<N>.json and leaves earlier versions."""
        self.recompiles += 1
        self.version += 1
        labels = {}
        if corpus:
            for msg_id, text in corpus:
                labels[msg_id] = attribute(text, self.rules).service
        ordered = sorted(
            self.patterns,
            key=lambda p: (-p.specificity[0], -p.specificity[1]),
        )
        auto_labeled = 0
        for cluster_ in self.clusters.values():
            if cluster_.purpose is Purpose.UNLABELED:
                inferred = label_cluster(cluster_, ordered)
                if inferred is not Purpose.UNLABELED:
                    cluster_.purpose = inferred
                    auto_labeled += 1
        out = self.state_dir / f"labels_v{self.version}.json"
        out.write_text(
            json.dumps(labels, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )
        self._persist()
        return {
            "version": self.version,
            "labels_file": out.name,
            "labeled_messages": len(labels),
            "auto_labeled_clusters": auto_labeled,
        }

    def progress(self) -> dict:
        by_status: Counter[str] = Counter(t.status.value for t in self.tasks.values())
        return {
            "version": self.version,
            "tasks_total": len(self.tasks),
            "pending": by_status.get("pending", 0),
            "done": by_status.get("done", 0),
            "skipped": by_status.get("skipped", 0),
            "recompiles": self.recompiles,
        }

    def mislabels(self, samples: list[tuple[str, str]]) -> dict:
        report = mislabel_report(samples, self.rules)
        return {
            "accuracy": report.accuracy,
            "total": report.total,
            "errors": report.errors,
            "false_negatives": report.false_negatives,
            "false_negative_share": report.false_negative_share,
            "offending_grams": report.offending_grams,
        }

    # -- persistence -------------------------------------------------------

    def _audit(self, task_id: str, kind: TaskKind, resolution: dict) -> None:
        record = {
            "version": self.version,
            "task_id": task_id,
            "kind": kind.value,
            "resolution": resolution,
        }
        with self.audit_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    def _persist(self) -> None:
        self.rules.dump(self.rules_path)
        save_purpose_patterns(self.patterns, self.patterns_path)


def replay_audit(
    audit_path: str | Path, initial: LabelState
) -> LabelState:
    """Re-apply an audit log over a fresh state with the same task backlog."""
    with Path(audit_path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            initial.apply_resolution(
                record["task_id"], record["resolution"], _replaying=True
            )
    return initial


# -- HTTP app --------------------------------------------------------------


def create_app(state: LabelState, mislabel_samples: list[tuple[str, str]] | None = None,
               recompile_corpus: list[tuple[str, str]] | None = None,
               static_dir: str | Path | None = None):
    from fastapi import FastAPI, HTTPException, Request, Response
    from fastapi.responses import FileResponse, JSONResponse

    app = FastAPI(title="gatewatch label console API")
    token = os.environ.get(AUTH_TOKEN_ENV, "")

    @app.middleware("http")
    async def stamp_version(request: Request, call_next):
        if token and request.url.path != "/health":
            auth = request.headers.get("authorization", "")
            if auth != f"Bearer {token}":
                return JSONResponse({"error": "unauthorized"}, status_code=401)
        response: Response = await call_next(request)
        response.headers["X-State-Version"] = str(state.version)
        return response

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/tasks")
    def tasks(kind: str, limit: int = 20, offset: int = 0):
        try:
            task_kind = TaskKind(kind)
        except ValueError:
            raise HTTPException(400, f"unknown task kind {kind!r}")
        return {
            "tasks": [t.to_record() for t in state.next_tasks(task_kind, limit, offset)]
        }

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        task = state.tasks.get(task_id)
        if task is None:
            raise HTTPException(404, f"unknown task {task_id!r}")
        return task.to_record()

    @app.post("/tasks/{task_id}/resolve")
    def resolve(task_id: str, body: dict):
        expected = body.pop("expected_version", None)
        if expected is not None and int(expected) != state.version:
            raise HTTPException(
                409, f"stale state version {expected}, server at {state.version}"
            )
        try:
            version = state.apply_resolution(task_id, body)
        except UnknownTask:
            raise HTTPException(404, f"unknown task {task_id!r}")
        except AlreadyResolved:
            raise HTTPException(409, f"task {task_id!r} already resolved")
        except (KeyError, ValueError) as exc:
            raise HTTPException(400, str(exc))
        return {"version": version, "task": state.tasks[task_id].to_record()}

    @app.post("/recompile")
    def recompile():
        return state.recompile(recompile_corpus)

    @app.get("/progress")
    def progress():
        return state.progress()

    @app.get("/mislabels")
    def mislabels():
        return state.mislabels(mislabel_samples or [])

    if static_dir and Path(static_dir).is_dir():
        static_root = Path(static_dir)

        @app.get("/")
        def index():
            return FileResponse(static_root / "index.html")

        @app.get("/static/{name}")
        def static_file(name: str):
            target = (static_root / name).resolve()
            if static_root.resolve() not in target.parents or not target.is_file():
                raise HTTPException(404, "not found")
            return FileResponse(target)

    return app


def serve(state: LabelState, host: str = "127.0.0.1", port: int = 8787, **app_kwargs):
    """Run the API; localhost-bound unless the caller widens the host."""
    import uvicorn

    app = create_app(state, **app_kwargs)
    uvicorn.run(app, host=host, port=port, log_level="warning")
