"""Command line front end.

Subcommands: ``run`` (full experiment suite), ``episode`` (one experiment),
``repl`` (play the human yourself), ``bank check`` (data invariant audit),
and ``sweep`` (question-cost grid).  A judge endpoint can be supplied with
--judge-endpoint or the SOUSCHEF_JUDGE_ENDPOINT environment variable;
without one, judge-dependent methods fall back to the bundled mock judge.
"""

from __future__ import annotations

import os
import sys
from typing import Optional

import click

from . import __version__, load_bundled_domain, load_bundled_goal_bank
from .harness import (JudgeSpec, build_runtime, compute_metrics, episode_row,
                      format_summary_table, run_episode, run_suite,
                      sweep_question_cost)
from .inquiry import build_question_bank, load_question_templates
from .methods import MethodConfig, load_bundled_method, load_method
from .recipes import generate_experiments, load_goal_bank
from .world import load_domain

JUDGE_ENDPOINT_ENV = "SOUSCHEF_JUDGE_ENDPOINT"


def _resolve_method(name: str, horizon: Optional[int],
                    topk: Optional[int]) -> MethodConfig:
    if os.path.exists(name):
        method = load_method(name)
    else:
        method = load_bundled_method(name)
    overrides = {}
    if horizon is not None:
        overrides["horizon"] = horizon
    if topk is not None:
        overrides["top_k"] = topk
    return method.replace(**overrides) if overrides else method


def _resolve_judge(method: MethodConfig,
                   endpoint: Optional[str]) -> Optional[JudgeSpec]:
    endpoint = endpoint or os.environ.get(JUDGE_ENDPOINT_ENV)
    if endpoint:
        return JudgeSpec(kind="http", endpoint=endpoint)
    if method.requires_judge:
        return JudgeSpec(kind="mock")
    return None


def _load_bank(bank_path: Optional[str]):
    return load_goal_bank(bank_path) if bank_path else load_bundled_goal_bank()


def _load_domain(domain_path: Optional[str]):
    return load_domain(domain_path) if domain_path else load_bundled_domain()


method_option = click.option(
    "--method", "-m", "method_name",
    default="known-goals-policies-questions", show_default=True,
    help="Bundled method name or path to a method JSON file.")
seed_option = click.option("--seed", default=0, show_default=True, type=int)
bank_option = click.option("--bank", "bank_path", default=None,
                           type=click.Path(exists=True),
                           help="Alternative goal bank file.")
domain_option = click.option("--domain", "domain_path", default=None,
                             type=click.Path(exists=True),
                             help="Alternative domain file.")
judge_option = click.option("--judge-endpoint", default=None,
                            help=f"HTTP judge URL (or ${JUDGE_ENDPOINT_ENV}).")
horizon_option = click.option("--horizon", default=None, type=int,
                              help="Override the planning horizon.")
topk_option = click.option("--topk", default=None, type=int,
                           help="Override the per-node expansion width.")


@click.group()
@click.version_option(__version__, prog_name="souschef")
def main() -> None:
    """Goal inference and lookahead planning for a shared kitchen."""


@main.command("run")
@method_option
@seed_option
@bank_option
@domain_option
@judge_option
@horizon_option
@topk_option
@click.option("--out", default=None, type=click.Path(),
              help="Directory for episodes.csv and summary.json.")
@click.option("--parallel", default=1, show_default=True, type=int)
@click.option("--limit", default=None, type=int,
              help="Run only the first N experiments.")
@click.option("--policy-cap", default=10, show_default=True, type=int,
              help="Linearizations sampled per goal for the policy bank.")
@click.option("--quiet", is_flag=True, help="No progress output.")
def run_cmd(method_name: str, seed: int, bank_path: Optional[str],
            domain_path: Optional[str], judge_endpoint: Optional[str],
            horizon: Optional[int], topk: Optional[int], out: Optional[str],
            parallel: int, limit: Optional[int], policy_cap: int,
            quiet: bool) -> None:
    """Run the full generated experiment suite for one method."""
    method = _resolve_method(method_name, horizon, topk)
    bank = _load_bank(bank_path)
    spec = _load_domain(domain_path)
    jspec = _resolve_judge(method, judge_endpoint)

    def progress(done: int, total: int) -> None:
        if not quiet and (done % 100 == 0 or done == total):
            click.echo(f"  {done}/{total} episodes", err=True)

    result = run_suite(bank, spec, method, seed=seed, jspec=jspec, out_dir=out,
                       parallel=parallel, limit=limit, policy_cap=policy_cap,
                       progress=progress)
    click.echo(format_summary_table([result.summary]))
    failures = [r for r in result.rows if r["stuck"] or not r["completed"]]
    if failures:
        click.echo(f"{len(failures)} episode(s) failed to finish:", err=True)
        for r in failures[:10]:
            click.echo(f"  {r['experiment']} ({r['goal']})", err=True)
        sys.exit(2)


@main.command("episode")
@method_option
@seed_option
@bank_option
@domain_option
@judge_option
@horizon_option
@topk_option
@click.option("--pair", default=None,
              help='Preference pair "prefA+prefB" selecting the experiment.')
@click.option("--index", default=None, type=int,
              help="Experiment index (alternative to --pair).")
@click.option("--out", default=None, type=click.Path(),
              help="Write the full trace JSON here.")
@click.option("--policy-cap", default=10, show_default=True, type=int)
@click.option("--events/--no-events", "show_events", default=True,
              help="Print the event timeline.")
def episode_cmd(method_name: str, seed: int, bank_path: Optional[str],
                domain_path: Optional[str], judge_endpoint: Optional[str],
                horizon: Optional[int], topk: Optional[int],
                pair: Optional[str], index: Optional[int], out: Optional[str],
                policy_cap: int, show_events: bool) -> None:
    """Run one experiment and show its event timeline."""
    method = _resolve_method(method_name, horizon, topk)
    bank = _load_bank(bank_path)
    spec = _load_domain(domain_path)
    jspec = _resolve_judge(method, judge_endpoint)
    experiments = generate_experiments(bank, seed=seed)
    if pair is not None:
        matches = [e for e in experiments if e.key == pair]
        if not matches:
            raise click.ClickException(f"no experiment with pair {pair!r}")
        exp = matches[0]
    else:
        exp = experiments[index or 0]
    from .harness import build_judge
    judge = build_judge(jspec, bank) if jspec is not None else None
    runtime = build_runtime(bank, spec, method, judge=judge,
                            policy_cap=policy_cap)
    trace = run_episode(runtime, exp, collect_probs=True)
    metrics = compute_metrics(trace)
    click.echo(f"experiment: {exp.key}  truth: {exp.true_goal}  "
               f"method: {method.name}")
    if show_events:
        for ev in trace.events:
            what = ev.action if ev.kind != "question" else \
                f"{ev.question_id} -> {ev.answer!r}"
            mark = "*" if ev.correct else " "
            click.echo(f"  [{ev.index:3d}] {ev.agent:5s} {ev.kind:8s} "
                       f"{str(what):34s} argmax={ev.belief_argmax}{mark} "
                       f"H={ev.belief_entropy:.3f}")
    row = episode_row(trace, metrics)
    for key in ("completed", "extra_steps", "questions", "top1_pct",
                "first_correct_pct", "last_incorrect_pct"):
        click.echo(f"{key}: {row[key]}")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(trace.to_json())
            fh.write("\n")
        click.echo(f"trace written to {out}")
    if trace.stuck or not trace.completed:
        sys.exit(2)


@main.command("repl")
@method_option
@seed_option
@bank_option
@domain_option
@judge_option
@click.option("--goal", "goal_id", required=True,
              help="The dish you are secretly making.")
@click.option("--prefs", default="",
              help='Comma-separated stated preferences, e.g. "warm,nutty".')
@click.option("--out", default=None, type=click.Path(),
              help="Trace JSON destination.")
@click.option("--policy-cap", default=10, show_default=True, type=int)
def repl_cmd(method_name: str, seed: int, bank_path: Optional[str],
             domain_path: Optional[str], judge_endpoint: Optional[str],
             goal_id: str, prefs: str, out: Optional[str],
             policy_cap: int) -> None:
    """Play the human against the robot in your terminal."""
    from .harness import build_judge
    from .repl import run_repl
    method = _resolve_method(method_name, None, None)
    bank = _load_bank(bank_path)
    spec = _load_domain(domain_path)
    if goal_id not in bank.goals:
        raise click.ClickException(
            f"unknown goal {goal_id!r}; see `souschef bank check` for the list")
    jspec = _resolve_judge(method, judge_endpoint)
    judge = build_judge(jspec, bank) if jspec is not None else None
    runtime = build_runtime(bank, spec, method, judge=judge,
                            policy_cap=policy_cap)
    pref_list = [p.strip() for p in prefs.split(",") if p.strip()]
    for p in pref_list:
        if p not in bank.preferences:
            raise click.ClickException(f"unknown preference {p!r}")
    run_repl(runtime, goal_id, pref_list, seed=seed, out_path=out)


@main.group("bank")
def bank_group() -> None:
    """Goal bank utilities."""


@bank_group.command("check")
@bank_option
@domain_option
@click.option("--questions", "questions_path", default=None,
              type=click.Path(exists=True),
              help="Alternative question templates file.")
@click.option("--replay-cap", default=3, show_default=True, type=int,
              help="Linearizations replayed per goal during the audit.")
def bank_check_cmd(bank_path: Optional[str], domain_path: Optional[str],
                   questions_path: Optional[str], replay_cap: int) -> None:
    """Audit bank, domain, and question data for invariant violations."""
    from .bankcheck import run_checks
    bank = _load_bank(bank_path)
    spec = _load_domain(domain_path)
    if questions_path:
        templates = load_question_templates(questions_path)
    else:
        from .harness import bundled_question_templates
        templates = bundled_question_templates()
    questions = build_question_bank(bank, templates)
    report = run_checks(bank, spec, questions, replay_cap=replay_cap)
    for line in report.lines:
        click.echo(line)
    if report.problems:
        click.echo(f"{len(report.problems)} problem(s) found", err=True)
        sys.exit(1)
    click.echo("bank check: all invariants hold")


@main.command("sweep")
@method_option
@seed_option
@bank_option
@domain_option
@click.option("--cost-max", "cost_maxes", default="0.5,1.0,2.0,4.0",
              show_default=True, help="Comma-separated C_max grid.")
@click.option("--out", default=None, type=click.Path(),
              help="Directory for sweep.csv.")
@click.option("--parallel", default=1, show_default=True, type=int)
@click.option("--limit", default=None, type=int)
def sweep_cmd(method_name: str, seed: int, bank_path: Optional[str],
              domain_path: Optional[str], cost_maxes: str, out: Optional[str],
              parallel: int, limit: Optional[int]) -> None:
    """Re-run the suite across interruption-cost ceilings."""
    method = _resolve_method(method_name, None, None)
    if not method.questions:
        raise click.ClickException(
            f"method {method.name!r} never asks; sweeping it is pointless")
    bank = _load_bank(bank_path)
    spec = _load_domain(domain_path)
    try:
        grid = [float(x) for x in cost_maxes.split(",") if x.strip()]
    except ValueError:
        raise click.ClickException(f"bad --cost-max grid {cost_maxes!r}")

    def progress(done: int, total: int) -> None:
        click.echo(f"  sweep point {done}/{total}", err=True)

    rows = sweep_question_cost(bank, spec, method, cost_maxes=grid, seed=seed,
                               out_dir=out, parallel=parallel, limit=limit,
                               progress=progress)
    header = f"{'cost_max':>8}  {'mean_q':>7}  {'extra':>7}  {'top1':>6}"
    click.echo(header)
    for row in rows:
        click.echo(f"{row['cost_max']:8.2f}  {row['mean_questions']:7.3f}  "
                   f"{row['mean_extra_steps']:7.4f}  {row['mean_top1_pct']:6.2f}")


if __name__ == "__main__":
    main()
