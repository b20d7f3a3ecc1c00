"""Command-line interface.

Exit codes follow the BSD sysexits convention where it fits: bad input data
exits 65, missing fixtures or sessions 66, upstream transport failures 69,
exhausted repair loops 70, credential problems 77, and state-machine misuse
64. Every failure prints `error[<Code>]: <message>` to stderr.
"""
from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from .coa import coa_to_canonical_json, coas_to_canonical_json, parse_coa_document
from .errors import CoaForgeError
from .gateway import TEXT_MODEL, Gateway, ModelSpec
from .metrics import compare, export, load_baselines
from .scenario import load_scenario_path, tigerclaw_default
from .session import Orchestrator, default_mission
from .simulation import config_from_scenario, outcome_to_dict, run_rollout

_EXIT_CODES: dict[str, int] = {
    "MalformedDocument": 65,
    "InvariantViolation": 65,
    "CommandParseError": 65,
    "UnknownVerb": 65,
    "ArityMismatch": 65,
    "MalformedArgument": 65,
    "NoJsonFound": 65,
    "SchemaError": 65,
    "InvalidCoa": 65,
    "InvalidMission": 65,
    "EmptyFeedback": 65,
    "ImageUnsupported": 65,
    "UnsupportedFormat": 65,
    "EmptyInput": 65,
    "FixtureMiss": 66,
    "SessionNotFound": 66,
    "TransportError": 69,
    "UnparseableAfterRepairs": 70,
    "AuthError": 77,
    "StateError": 64,
    "UnknownCoa": 64,
}


def _domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CoaForgeError as e:
            click.echo(f"error[{e.code}]: {e}", err=True)
            sys.exit(_EXIT_CODES.get(e.code, 1))

    return wrapper


def _load_scenario_arg(ref: str):
    if ref == "tigerclaw":
        return tigerclaw_default()
    return load_scenario_path(ref)


def _spec_from_backend(
    backend: str, model_id: str, supports_images: bool = False, record: str | None = None
) -> ModelSpec:
    if backend == "live":
        return ModelSpec(
            backend="live",
            model_id=model_id,
            supports_images=supports_images,
            record_path=record,
        )
    if backend.startswith("replay:"):
        return ModelSpec(
            backend="replay",
            model_id=model_id,
            supports_images=supports_images,
            fixture_path=backend[len("replay:"):],
        )
    raise click.UsageError(f"--backend must be 'live' or 'replay:PATH', got {backend!r}")


def _default_store() -> str:
    return os.environ.get("COA_FORGE_STORE", "./coa_forge_store")


@click.group()
def main() -> None:
    """Generate, refine, simulate, and evaluate courses of action."""


@main.command()
@click.option("--scenario", default="tigerclaw", show_default=True, help="Scenario name or JSON path.")
@click.option("--n", default=3, show_default=True, help="How many COAs to request.")
@click.option("--backend", required=True, help="'live' or 'replay:PATH'.")
@click.option("--model", "model_id", default=TEXT_MODEL, show_default=True)
@click.option("--record", default=None, help="Append live exchanges to this fixture file.")
@click.option("--store", default=None, help="Session store directory (default $COA_FORGE_STORE).")
@click.option("--out", default="coas.json", show_default=True, type=click.Path(dir_okay=False))
@_domain_errors
def generate(scenario, n, backend, model_id, record, store, out) -> None:
    """Create a session and generate an initial COA set."""
    scn = _load_scenario_arg(scenario)
    orch = Orchestrator(store or _default_store(), Gateway())
    spec = _spec_from_backend(backend, model_id, record=record)
    session = orch.create_session(default_mission(scn), spec)
    coas = orch.generate_coas(session.session_id, n=n)
    Path(out).write_text(coas_to_canonical_json(coas), encoding="utf-8")
    click.echo(f"session {session.session_id}: wrote {len(coas)} COA(s) to {out}")


@main.command()
@click.option("--session", "session_id", required=True)
@click.option("--coa", "coa_id", required=True)
@click.option("--feedback", required=True)
@click.option("--store", default=None)
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="Write the refined COA here.")
@_domain_errors
def refine(session_id, coa_id, feedback, store, out) -> None:
    """Send commander feedback on a COA; the backend comes from the stored session."""
    orch = Orchestrator(store or _default_store(), Gateway())
    refined = orch.submit_feedback(session_id, coa_id, feedback)
    if out:
        Path(out).write_text(coa_to_canonical_json(refined), encoding="utf-8")
        click.echo(f"session {session_id}: wrote refined COA {refined.coa_id} to {out}")
    else:
        click.echo(f"session {session_id}: refined COA {refined.coa_id} ({refined.name})")


@main.command()
@click.option("--scenario", default="tigerclaw", show_default=True)
@click.option("--coa", "coa_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seeds", default=10, show_default=True, help="Number of rollouts.")
@click.option("--base-seed", default=42, show_default=True)
@click.option("--out", default="outcomes.jsonl", show_default=True, type=click.Path(dir_okay=False))
@_domain_errors
def simulate(scenario, coa_path, seeds, base_seed, out) -> None:
    """Run seeded rollouts of the first COA in a document; one JSON line each."""
    scn = _load_scenario_arg(scenario)
    coas = parse_coa_document(Path(coa_path).read_text(encoding="utf-8"), scenario=scn)
    coa = coas[0]
    lines = []
    for seed in range(base_seed, base_seed + seeds):
        outcome = run_rollout(scn, coa, config_from_scenario(scn, seed=seed))
        lines.append(json.dumps(outcome_to_dict(outcome)))
    Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"wrote {seeds} outcome(s) for {coa.coa_id} to {out}")


@main.command()
@click.option("--variant", required=True, help="Label, e.g. COA-GPT, COA-GPT+H1, COA-GPT+H2.")
@click.option("--coas", "coas_per_variant", default=5, show_default=True)
@click.option("--sims", "sims_per_coa", default=10, show_default=True)
@click.option("--backend", required=True, help="'live' or 'replay:PATH'.")
@click.option("--model", "model_id", default=TEXT_MODEL, show_default=True)
@click.option("--scenario", default="tigerclaw", show_default=True)
@click.option("--base-seed", default=42, show_default=True)
@click.option("--store", default=None)
@click.option("--out", default="report.json", show_default=True, type=click.Path(dir_okay=False))
@_domain_errors
def evaluate(variant, coas_per_variant, sims_per_coa, backend, model_id, scenario, base_seed, store, out) -> None:
    """Run the batch evaluation protocol and write the pooled report."""
    scn = _load_scenario_arg(scenario)
    orch = Orchestrator(store or _default_store(), Gateway())
    spec = _spec_from_backend(backend, model_id)
    report = orch.run_evaluation_protocol(
        default_mission(scn),
        spec,
        variant,
        coas_per_variant=coas_per_variant,
        sims_per_coa=sims_per_coa,
        base_seed=base_seed,
    )
    Path(out).write_text(export(report, "json"), encoding="utf-8")
    click.echo(f"wrote report for {variant} ({len(report.rows)} rollouts) to {out}")
    click.echo(compare(report, load_baselines()).to_text())


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--store", default=None)
@click.option("--ui", "ui_dir", default=None, help="Serve a built UI directory at /ui.")
@_domain_errors
def serve(host, port, store, ui_dir) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .api import create_app

    app = create_app(store_dir=store or _default_store(), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
