import json

import pytest

from stgen.bench import BenchError, RunMetrics, compute_metrics, load_tasks, report, run_benchmark
from stgen.generator import ERRORED, FAIL, INFRA_FAILED, PASS, TaskResult
from stgen.llm import UsageRecord
from stgen.st import DIAGNOSTIC_CLASSES, IMPLEMENTATION, CompileReport, Diagnostic

from conftest import bench_config, replay_gateway


def diag(cls):
    return Diagnostic("x", "m", 1, 1, 1, 2, IMPLEMENTATION, cls)


def result(name, status, classes=(), cost=0.0):
    report_ = CompileReport.of([diag(c) for c in classes]) if status in (PASS, FAIL) else None
    return TaskResult(name, status, final_report=report_, usage=UsageRecord(10, 5, cost), wall_time=1.5)


def test_pass_rate_two_of_three():
    m = compute_metrics([result("a", PASS), result("b", FAIL, ["CALL"]), result("c", PASS)])
    assert m.pass_rate == pytest.approx(2 / 3)
    assert m.pass_count == 2


def test_avg_errors_counts_every_task():
    m = compute_metrics([result("a", PASS), result("b", FAIL, ["CALL", "UNDEFINED", "UNDEFINED"]),
                         result("c", FAIL, ["MISMATCH"])])
    assert m.avg_errors == pytest.approx(4 / 3)
    assert m.class_means["UNDEFINED"] == pytest.approx(2 / 3)
    assert sum(m.class_means.values()) == pytest.approx(m.avg_errors)
    assert set(m.class_means) == set(DIAGNOSTIC_CLASSES)


def test_errored_and_infra_failed_are_listed():
    m = compute_metrics([result("a", ERRORED), result("b", INFRA_FAILED), result("c", PASS)])
    assert m.errored == ["a"] and m.infra_failed == ["b"]
    assert m.pass_rate == pytest.approx(1 / 3)
    assert m.avg_errors == 0


def test_usage_is_summed():
    m = compute_metrics([result("a", PASS, cost=0.25), result("b", PASS, cost=0.5)])
    assert m.total_cost == pytest.approx(0.75)
    assert m.total_tokens == 30


def test_empty_results():
    with pytest.raises(BenchError):
        compute_metrics([])


def test_metrics_json_round_trip():
    m = compute_metrics([result("a", PASS), result("b", FAIL, ["OTHER"])], {"planning": True})
    again = RunMetrics.from_dict(json.loads(m.canonical_json()))
    assert again.canonical_json() == m.canonical_json()
    assert "wall_times" not in m.to_dict()
    assert RunMetrics.from_dict(json.loads(report(m, "json"))).wall_times == {"a": 1.5, "b": 1.5}


def test_text_report():
    m = compute_metrics([result("a", PASS), result("b", FAIL, ["CALL"])])
    text = report(m, "text")
    assert "50.00% (1/2)" in text
    assert "CALL" in text and "0.500" in text


def test_markdown_report():
    m = compute_metrics([result("a", PASS), result("b", INFRA_FAILED)])
    md = report(m, "markdown")
    assert md.startswith("| Metric | Value |")
    assert "| TYPE_CONVERSION | 0.000 |" in md
    assert "Infrastructure failures | b" in md


def test_unknown_format():
    m = compute_metrics([result("a", PASS)])
    with pytest.raises(ValueError):
        report(m, "csv")


def test_empty_task_file(tmp_path):
    (tmp_path / "t.jsonl").write_text("\n")
    with pytest.raises(BenchError, match="no tasks"):
        load_tasks(tmp_path / "t.jsonl")


def test_duplicate_task_names(tmp_path):
    line = json.dumps({"name": "A", "req": "r"})
    (tmp_path / "t.jsonl").write_text(line + "\n" + line + "\n")
    with pytest.raises(BenchError, match="duplicate"):
        load_tasks(tmp_path / "t.jsonl")


def test_bad_task_line_names_the_line(tmp_path):
    (tmp_path / "t.jsonl").write_text('{"name": "A", "req": "r"}\n{"name": "B"\n')
    with pytest.raises(BenchError, match=":2:"):
        load_tasks(tmp_path / "t.jsonl")


def test_workers_keep_task_order(bench_tasks):
    serial = run_benchmark(bench_tasks, bench_config(), replay_gateway())
    parallel = run_benchmark(bench_tasks, bench_config(), replay_gateway(), workers=4)
    assert [r.task_name for r in parallel.results] == [t.task.name for t in bench_tasks]
    assert parallel.metrics.canonical_json() == serial.metrics.canonical_json()
    assert [r.canonical_json() for r in parallel.results] == [r.canonical_json() for r in serial.results]


def test_undefined_only_table_shows_zeros_elsewhere():
    m = compute_metrics([result("a", FAIL, ["UNDEFINED", "UNDEFINED"])])
    text = report(m, "text")
    for cls in DIAGNOSTIC_CLASSES:
        expected = "2.000" if cls == "UNDEFINED" else "0.000"
        assert any(line.startswith(cls) and line.endswith(expected) for line in text.splitlines()), cls
    assert m.pass_rate * m.task_count == int(m.pass_rate * m.task_count)
