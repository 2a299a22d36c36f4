"""Batch runner for discourse problem files."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import click

from .hocu import SearchLimits
from .parallelism import Resolution, resolve
from .problem import ProblemError, load_axioms, load_problem
from .syntax import print_term
from .terms import TermError, erase_colours

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


def run_modes(coloured: bool, relation: str) -> frozenset:
    modes = set()
    if not coloured:
        modes.add("no-colours")
    if relation != "identity":
        modes.add(relation)
    return frozenset(modes)


def check_expectations(res: Resolution, expectations, modes: frozenset) -> tuple[str, list[str]]:
    """``("pass" | "fail" | "none", failure messages)`` for the lines of ``modes``."""
    active = [e for e in expectations if e.modes == modes]
    if not active:
        return "none", []
    failures = []
    targets = {(r.label, erase_colours(r.target)) for r in res.readings}
    for e in active:
        ok = True
        if e.kind == "readings":
            ok = len(res.readings) == e.value
            got = len(res.readings)
        elif e.kind == "solutions":
            got = len(res.solution_values())
            ok = got == e.value
        elif e.kind == "status":
            got = res.status
            ok = got == e.value
        elif e.kind == "reading":
            ok = (e.key, e.value) in targets
            got = ", ".join(f"{lab}: {print_term(t, colours=False)}" for lab, t in sorted(targets, key=str)) or "none"
        elif e.kind == "binding":
            values = res.bindings(e.key)
            ok = e.value in values
            got = " ; ".join(print_term(v) for v in values) or "unbound"
        elif e.kind == "bindings":
            values = res.bindings(e.key)
            ok = set(values) == set(e.value) and len(values) == len(e.value)
            got = " ; ".join(print_term(v) for v in values) or "unbound"
        elif e.kind == "relation":
            proofs = [r.proof for r in res.readings]
            ok = bool(proofs) and all(p is not None and p.proved for p in proofs)
            got = ", ".join(p.status if p else "none" for p in proofs) or "no readings"
        if not ok:
            where = f"line {e.line}: " if e.line else ""
            failures.append(f"{where}{e.text}  (got {got})")
    return ("fail" if failures else "pass"), failures


@dataclass
class ProblemReport:
    path: str
    name: str
    status: str  # ok | no-solution | underdetermined | error
    complete: bool = True
    resource_out: bool = False
    resolution: Optional[Resolution] = None
    verdict: str = "none"
    failures: list = field(default_factory=list)
    error: Optional[str] = None
    seconds: float = 0.0

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return EXIT_INPUT
        if self.verdict == "fail":
            return EXIT_FAIL
        if self.verdict == "none" and self.resource_out:
            return EXIT_RESOURCE
        return EXIT_OK


def solve_file(
    path,
    *,
    limits: SearchLimits,
    coloured: bool = True,
    relation: str = "identity",
    axioms_file=None,
) -> ProblemReport:
    path = Path(path)
    start = time.perf_counter()
    try:
        problem = load_problem(path)
        axioms = load_axioms(axioms_file, problem.signature) if axioms_file else None
        res = resolve(problem, limits, relation=relation, axioms=axioms, coloured=coloured)
    except (ProblemError, TermError, OSError) as exc:
        return ProblemReport(str(path), path.stem, "error", error=str(exc))
    verdict, failures = check_expectations(res, problem.expectations, run_modes(coloured, relation))
    return ProblemReport(
        str(path),
        problem.name,
        res.status,
        res.complete,
        res.resource_out,
        res,
        verdict,
        failures,
        seconds=time.perf_counter() - start,
    )


def _witness(sub) -> dict:
    return {k: print_term(v) for k, v in sorted(sub.terms.items())}


def report_json(r: ProblemReport) -> dict:
    out = {"problem": r.name, "path": r.path, "status": r.status}
    if r.error is not None:
        out["error"] = r.error
        return out
    res = r.resolution
    out["complete"] = r.complete
    out["resource_out"] = r.resource_out
    out["equations"] = [str(e) for e in res.equations]
    out["solutions"] = [_witness(u) for u in res.unifiers]
    out["readings"] = [
        {
            "label": rd.label,
            "target": print_term(rd.target, colours=False),
            "witness": _witness(rd.witness),
            "proof": None if rd.proof is None else {"status": rd.proof.status, "trace": rd.proof.trace()},
        }
        for rd in res.readings
    ]
    out["expectation"] = {"verdict": r.verdict, "failures": r.failures}
    return out


def report_text(r: ProblemReport, *, show_substitutions: bool = False, trace: bool = False) -> str:
    if r.error is not None:
        return f"{r.name}: input error: {r.error}"
    res = r.resolution
    n, k = len(res.readings), len(res.solution_values())
    search = "complete" if r.complete else "truncated"
    lines = [
        f"{r.name}: {r.status}, {n} reading{'s' if n != 1 else ''} "
        f"({k} solution{'s' if k != 1 else ''} for {res.abstraction}, search {search})"
    ]
    if trace:
        lines += [f"  equation {e}" for e in res.equations]
        lines += [f"  unifier {u}" for u in res.unifiers]
    for rd in res.readings:
        lines.append(f"  {rd.label:<7} {print_term(rd.target, colours=False)}")
        if show_substitutions:
            lines += [f"          {k} <- {v}" for k, v in _witness(rd.witness).items()]
        if rd.proof is not None:
            lines.append(f"          relation {rd.proof.status}:")
            lines += ["            " + ln for ln in rd.proof.trace().splitlines()]
    if not r.complete:
        lines.append("  note: the unifier search hit its depth or solution bound")
    if res.tableau_exhausted:
        lines.append("  note: some candidates were dropped when their proofs hit the tableau bound")
    if r.verdict != "none":
        lines.append(f"  expectations: {r.verdict}")
        lines += [f"    FAILED {f}" for f in r.failures]
    return "\n".join(lines)


def expand_paths(paths) -> list[Path]:
    out = []
    for p in paths:
        p = Path(p)
        out.extend(sorted(p.glob("*.prob")) if p.is_dir() else [p])
    return sorted(set(out), key=lambda q: str(q))


@click.group()
def main():
    """Strict and sloppy readings by coloured higher-order unification."""


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--max-depth", default=12, show_default=True, type=click.IntRange(min=1), help="Binding depth bound.")
@click.option("--max-solutions", default=64, show_default=True, type=click.IntRange(min=1))
@click.option("--no-colours", is_flag=True, help="Erase all colours before solving.")
@click.option(
    "--relation",
    type=click.Choice(["identity", "entail", "common-gen"]),
    default="identity",
    show_default=True,
    help="Logical relation for target clashes.",
)
@click.option("--axioms", "axioms_file", type=click.Path(exists=True, dir_okay=False), help="Axiom file to use.")
@click.option("--show-substitutions", is_flag=True, help="Print each reading's witness substitution.")
@click.option("--trace", is_flag=True, help="Print equations and every unifier.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
def run(paths, max_depth, max_solutions, no_colours, relation, axioms_file, show_substitutions, trace, fmt):
    """Solve problem files (or directories of them) and check their expectations."""
    limits = SearchLimits(max_depth=max_depth, max_solutions=max_solutions)
    reports = [
        solve_file(p, limits=limits, coloured=not no_colours, relation=relation, axioms_file=axioms_file)
        for p in expand_paths(paths)
    ]
    if fmt == "json":
        click.echo(json.dumps([report_json(r) for r in reports], indent=2, sort_keys=True))
    else:
        for r in reports:
            click.echo(report_text(r, show_substitutions=show_substitutions, trace=trace))
    codes = {r.exit_code for r in reports}
    for code in (EXIT_INPUT, EXIT_FAIL, EXIT_RESOURCE):
        if code in codes:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
