"""Command line surface: subcommands, flags, exit codes, artifacts."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from click.testing import CliRunner

from souschef.cli import (JUDGE_ENDPOINT_ENV, _resolve_judge, _resolve_method,
                          main)
from souschef.harness import SuiteResult
from souschef.recipes import linearizations


@pytest.fixture()
def runner():
    return CliRunner()


# -- option plumbing ------------------------------------------------------------------

def test_resolve_method_overrides(tmp_path):
    m = _resolve_method("known-goals-policies", horizon=3, topk=7)
    assert (m.horizon, m.top_k) == (3, 7)
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"name": "from-file", "mode": "passive"}))
    assert _resolve_method(str(path), None, None).name == "from-file"


def test_resolve_judge_precedence(monkeypatch):
    m = _resolve_method("known-goals", None, None)  # requires a judge
    monkeypatch.delenv(JUDGE_ENDPOINT_ENV, raising=False)
    assert _resolve_judge(m, None).kind == "mock"
    monkeypatch.setenv(JUDGE_ENDPOINT_ENV, "http://env:1")
    assert _resolve_judge(m, None).endpoint == "http://env:1"
    # an explicit flag beats the environment
    assert _resolve_judge(m, "http://flag:2").endpoint == "http://flag:2"
    passive = _resolve_method("passive", None, None)
    monkeypatch.delenv(JUDGE_ENDPOINT_ENV)
    assert _resolve_judge(passive, None) is None


def test_help_lists_subcommands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for cmd in ("run", "episode", "repl", "bank", "sweep"):
        assert cmd in result.output


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "souschef" in result.output


# -- run ------------------------------------------------------------------------------

def test_run_writes_artifacts_and_succeeds(runner, tmp_path):
    out = tmp_path / "suite"
    result = runner.invoke(main, [
        "run", "--method", "passive", "--limit", "4", "--quiet",
        "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = (out / "episodes.csv").read_text().splitlines()
    assert len(lines) == 5
    summary = json.loads((out / "summary.json").read_text())
    assert summary["episodes"] == 4
    assert summary["method"] == "passive"
    assert "passive" in result.output  # summary table printed


def test_run_exits_2_when_any_episode_fails(runner, monkeypatch):
    bad_row = {"experiment": "a+b", "goal": "g", "stuck": True,
               "completed": False}
    summary = {"method": "m", "episodes": 1, "mean_extra_steps": 9.0,
               "mean_questions": 0.0, "mean_top1_pct": 0.0,
               "completion_rate": 0.0, "convergence_rate": 0.0}
    monkeypatch.setattr("souschef.cli.run_suite",
                        lambda *a, **k: SuiteResult([bad_row], summary))
    result = runner.invoke(main, ["run", "--limit", "1", "--quiet"])
    assert result.exit_code == 2
    assert "failed to finish" in result.output


def test_run_accepts_method_file(runner, tmp_path):
    path = tmp_path / "quiet.json"
    path.write_text(json.dumps({"name": "file-passive", "mode": "passive"}))
    result = runner.invoke(main, [
        "run", "--method", str(path), "--limit", "2", "--quiet"])
    assert result.exit_code == 0, result.output
    assert "file-passive" in result.output


# -- episode --------------------------------------------------------------------------

def test_episode_prints_timeline_and_writes_trace(runner, tmp_path):
    out = tmp_path / "trace.json"
    result = runner.invoke(main, [
        "episode", "--index", "0", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("experiment:")
    assert "completed: True" in result.output
    data = json.loads(out.read_text())
    assert data["events"]


def test_episode_by_pair_and_bad_pair(runner, bank, experiments):
    key = experiments[0].key
    result = runner.invoke(main, [
        "episode", "--pair", key, "--no-events"])
    assert result.exit_code == 0, result.output
    assert f"experiment: {key}" in result.output
    bad = runner.invoke(main, ["episode", "--pair", "bogus+pair"])
    assert bad.exit_code == 1
    assert "no experiment" in bad.output


# -- repl -----------------------------------------------------------------------------

def test_repl_scripted_full_cook(runner, bank, tmp_path):
    gid = min(bank.goal_ids(), key=lambda g: (bank.goals[g].length, g))
    script = linearizations(bank.goals[gid].network, cap=1, seed=0)[0]
    out = tmp_path / "repl_trace.json"
    result = runner.invoke(main, [
        "repl", "--method", "passive", "--goal", gid, "--out", str(out)],
        input="\n".join(script) + "\n")
    assert result.exit_code == 0, result.output
    assert "Served! Episode complete." in result.output
    assert "robot steps: 0" in result.output
    trace = json.loads(out.read_text())
    assert trace["completed"] is True
    assert trace["goal_id"] == gid


def test_repl_quit_keeps_partial_trace(runner, bank):
    gid = bank.goal_ids()[0]
    result = runner.invoke(main, [
        "repl", "--method", "passive", "--goal", gid], input="quit\n")
    assert result.exit_code == 0, result.output
    assert "Session ended early" in result.output


def test_repl_rejects_unknown_goal_and_pref(runner, bank):
    result = runner.invoke(main, ["repl", "--goal", "unicorn_stew"])
    assert result.exit_code == 1
    assert "unknown goal" in result.output
    gid = bank.goal_ids()[0]
    result = runner.invoke(main, [
        "repl", "--goal", gid, "--prefs", "sweet,imaginary"])
    assert result.exit_code == 1
    assert "unknown preference" in result.output


# -- bank check -----------------------------------------------------------------------

def test_bank_check_passes_on_bundled_data(runner):
    result = runner.invoke(main, ["bank", "check"])
    assert result.exit_code == 0, result.output
    assert "all invariants hold" in result.output
    assert "PROBLEM" not in result.output


BROKEN_BANK = """\
goalbank v1
preferences: warm, sweet

goal demo type=stew vessel=pot "Demo stew"
  step pour(oats,pot)
  step gather(oats)
  step serve(pot)
  prefs warm

goal demo2 type=smoothie vessel=blender_jar "Demo smoothie"
  step gather(banana)
  step pour(banana,blender_jar)
  step serve(blender_jar)
  chain 0 -> 1
  chain 1 -> 2
  prefs sweet
"""

TINY_QUESTIONS = """\
dish_type "Which kind of dish are we making?"
ingredient oats "Will it have oats?"
"""


def test_bank_check_flags_inexecutable_goal(runner, tmp_path):
    bank_path = tmp_path / "broken.bank"
    bank_path.write_text(BROKEN_BANK)
    q_path = tmp_path / "q.txt"
    q_path.write_text(TINY_QUESTIONS)
    result = runner.invoke(main, [
        "bank", "check", "--bank", str(bank_path),
        "--questions", str(q_path)])
    assert result.exit_code == 1
    assert "PROBLEM" in result.output
    assert "demo" in result.output


# -- sweep ----------------------------------------------------------------------------

def test_sweep_outputs_grid(runner, tmp_path):
    result = runner.invoke(main, [
        "sweep", "--cost-max", "0.5,4.0", "--limit", "3",
        "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "cost_max" in result.output
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3


def test_sweep_rejects_question_free_methods(runner):
    result = runner.invoke(main, ["sweep", "--method", "passive"])
    assert result.exit_code == 1
    assert "never asks" in result.output


def test_sweep_rejects_bad_grid(runner):
    result = runner.invoke(main, ["sweep", "--cost-max", "a,b"])
    assert result.exit_code == 1
    assert "bad --cost-max" in result.output


# -- judge endpoint wiring --------------------------------------------------------------

class _FlatJudgeHandler(BaseHTTPRequestHandler):
    hits = 0

    def log_message(self, *args):
        pass

    def do_POST(self):
        type(self).hits += 1
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        if self.path.endswith("/propose"):
            payload = {"goals": []}
        else:
            payload = {"scores": {t: 0.5 for t in body.get("targets", [])}}
        raw = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)


def test_judge_endpoint_env_var_reaches_the_wire(runner, monkeypatch):
    server = ThreadingHTTPServer(("127.0.0.1", 0), _FlatJudgeHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        monkeypatch.setenv(
            JUDGE_ENDPOINT_ENV,
            f"http://127.0.0.1:{server.server_address[1]}")
        result = runner.invoke(main, [
            "episode", "--method", "known-goals", "--index", "0",
            "--no-events"])
        assert _FlatJudgeHandler.hits > 0
        assert result.exit_code in (0, 2)  # wiring, not quality, is under test
    finally:
        server.shutdown()
