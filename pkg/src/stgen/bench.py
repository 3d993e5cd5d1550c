"""Benchmark runs over a task file: pass rate, average error count, per-class breakdown."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .generator import ERRORED, INFRA_FAILED, PipelineConfig, TaskResult, run_pipeline
from .llm import LlmGateway
from .models import SchemaError, Task
from .st import DIAGNOSTIC_CLASSES

FORMATS = ("text", "markdown", "json")


class BenchError(ValueError):
    pass


@dataclass(frozen=True)
class BenchTask:
    task: Task
    reference: str | None = None


def load_tasks(path: str | Path) -> list[BenchTask]:
    """Read a line-delimited task file.

    Each line is a task object (``name``, ``req``, ``io``, ``unit_kind``,
    ``vendor_target``, ``return_type``) with an optional ``reference`` code string.
    """
    items: list[BenchTask] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                task = Task.from_dict(data)
            except (json.JSONDecodeError, SchemaError) as exc:
                raise BenchError(f"{path}:{lineno}: {exc}") from exc
            if task.name.upper() in seen:
                raise BenchError(f"{path}:{lineno}: duplicate task name {task.name!r}")
            seen.add(task.name.upper())
            items.append(BenchTask(task, data.get("reference")))
    if not items:
        raise BenchError("no tasks")
    return items


@dataclass
class RunMetrics:
    task_count: int
    pass_count: int
    pass_rate: float
    avg_errors: float
    class_means: dict[str, float]
    total_cost: float
    total_tokens: int
    infra_failed: list[str] = field(default_factory=list)
    errored: list[str] = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    wall_times: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "task_count": self.task_count,
            "pass_count": self.pass_count,
            "pass_rate": self.pass_rate,
            "avg_errors": self.avg_errors,
            "class_means": dict(self.class_means),
            "total_cost": self.total_cost,
            "total_tokens": self.total_tokens,
            "infra_failed": list(self.infra_failed),
            "errored": list(self.errored),
            "flags": dict(self.flags),
        }
        if include_timing:
            out["wall_times"] = dict(self.wall_times)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunMetrics":
        return cls(
            task_count=data["task_count"],
            pass_count=data["pass_count"],
            pass_rate=data["pass_rate"],
            avg_errors=data["avg_errors"],
            class_means=dict(data["class_means"]),
            total_cost=data["total_cost"],
            total_tokens=data["total_tokens"],
            infra_failed=list(data.get("infra_failed", [])),
            errored=list(data.get("errored", [])),
            flags=dict(data.get("flags", {})),
            wall_times=dict(data.get("wall_times", {})),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def compute_metrics(results: Sequence[TaskResult], flags: dict | None = None) -> RunMetrics:
    """Average errors run over every task, passes included; errored tasks count as fails with 0 errors."""
    n = len(results)
    if n == 0:
        raise BenchError("no tasks")
    passed = sum(1 for r in results if r.passed)
    totals = {c: 0 for c in DIAGNOSTIC_CLASSES}
    for r in results:
        if r.final_report is not None:
            for c, k in r.final_report.class_counts().items():
                totals[c] += k
    total_errors = sum(totals.values())
    return RunMetrics(
        task_count=n,
        pass_count=passed,
        pass_rate=passed / n,
        avg_errors=total_errors / n,
        class_means={c: totals[c] / n for c in DIAGNOSTIC_CLASSES},
        total_cost=sum(r.usage.cost for r in results),
        total_tokens=sum(r.usage.total_tokens for r in results),
        infra_failed=[r.task_name for r in results if r.status == INFRA_FAILED],
        errored=[r.task_name for r in results if r.status == ERRORED],
        flags=dict(flags or {}),
        wall_times={r.task_name: r.wall_time for r in results},
    )


@dataclass
class BenchRun:
    metrics: RunMetrics
    results: list[TaskResult]

    def to_dict(self, include_timing: bool = False) -> dict:
        return {
            "metrics": self.metrics.to_dict(include_timing),
            "results": [r.to_dict(include_timing) for r in self.results],
        }


def run_benchmark(tasks: Sequence[BenchTask | Task], config: PipelineConfig, llm: LlmGateway,
                  workers: int = 1) -> BenchRun:
    """Run every task through the pipeline; results keep task-file order whatever the worker count."""
    plain = [t.task if isinstance(t, BenchTask) else t for t in tasks]
    if not plain:
        raise BenchError("no tasks")
    if workers <= 1:
        results = [run_pipeline(t, config, llm) for t in plain]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: run_pipeline(t, config, llm), plain))
    return BenchRun(compute_metrics(results, config.flags()), results)


def _rows(metrics: RunMetrics) -> list[tuple[str, str]]:
    return [(c, f"{metrics.class_means[c]:.3f}") for c in DIAGNOSTIC_CLASSES]


def report(metrics: RunMetrics, fmt: str = "text") -> str:
    """Headline metrics plus the five-class error table."""
    if fmt == "json":
        return json.dumps(metrics.to_dict(include_timing=True), indent=2, sort_keys=True) + "\n"
    headline = [
        ("Tasks", str(metrics.task_count)),
        ("Pass Rate", f"{metrics.pass_rate * 100:.2f}% ({metrics.pass_count}/{metrics.task_count})"),
        ("Avg. Errors", f"{metrics.avg_errors:.3f}"),
        ("Cost", f"{metrics.total_cost:.4f}"),
        ("Tokens", str(metrics.total_tokens)),
    ]
    if metrics.infra_failed:
        headline.append(("Infrastructure failures", ", ".join(metrics.infra_failed)))
    if metrics.errored:
        headline.append(("Errored", ", ".join(metrics.errored)))
    if fmt == "markdown":
        lines = ["| Metric | Value |", "| --- | --- |"]
        lines += [f"| {k} | {v} |" for k, v in headline]
        lines += ["", "| Error class | Mean per task |", "| --- | --- |"]
        lines += [f"| {c} | {v} |" for c, v in _rows(metrics)]
        return "\n".join(lines) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}; choose from {', '.join(FORMATS)}")
    width = max(len(k) for k, _ in headline)
    lines = [f"{k.ljust(width)}  {v}" for k, v in headline]
    lines += ["", "Error class        Mean per task"]
    lines += [f"{c.ljust(18)} {v}" for c, v in _rows(metrics)]
    return "\n".join(lines) + "\n"
