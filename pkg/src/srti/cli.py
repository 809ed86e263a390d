"""Command-line front end.

Exit codes: 0 solved/valid, 1 no solution or check failed, 2 usage or input error.
The primary artifact goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import os
import random
import sys
from pathlib import Path

import click

from . import fes_solver, gadgets, graph_params, tcw_solver
from .core_model import (InstanceError, MatchingError, ParseError, blocking_pairs, break_ties, check_matching,
                         is_perfect, parse_instance, parse_matching, random_instance, serialize_instance,
                         serialize_matching)
from .oracle import SolveMode, TooLargeError, brute_solve, edge_cap_from_env

EXIT_OK, EXIT_NONE, EXIT_USAGE = 0, 1, 2


def _fail(message: str, code: int = EXIT_USAGE):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _note(message: str) -> None:
    click.echo(message, err=True)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        _fail(f"cannot read {path}: {exc}")


def _load_instance(path: str):
    try:
        return parse_instance(_read(path))
    except (ParseError, InstanceError) as exc:
        _fail(f"{path}: {exc}")


def _threads(value: int | None) -> int:
    if value is None:
        raw = os.environ.get("SRTI_THREADS", "1")
        try:
            value = int(raw)
        except ValueError:
            _fail(f"SRTI_THREADS must be an integer, got {raw!r}")
    if value < 1:
        _fail("thread count must be at least 1")
    return value


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Stable roommates with ties and incomplete lists."""


# -- solve --------------------------------------------------------------------

@main.command()
@click.argument("instance_path", metavar="INSTANCE")
@click.option("--mode", type=click.Choice([m.value for m in SolveMode]), default="existence", show_default=True)
@click.option("--algo", type=click.Choice(["brute", "tcw", "fes", "auto"]), default="auto", show_default=True)
@click.option("--decomp", "decomp_path", help="Tree-cut decomposition file for the tcw solver.")
@click.option("--seed", type=int, default=None, help="Accepted for reproducible scripting; all solvers are deterministic.")
@click.option("--approx", is_flag=True, help="With --mode max and --algo tcw: factor-1/2 approximation.")
@click.option("--threads", type=int, default=None, help="Worker processes for the fes solver (env SRTI_THREADS).")
def solve(instance_path, mode, algo, decomp_path, seed, approx, threads):
    """Print a stable matching (perfect / maximum per --mode) or NONE."""
    inst = _load_instance(instance_path)
    mode = SolveMode(mode)
    threads = _threads(threads)
    cap = edge_cap_from_env()
    if approx and (mode is not SolveMode.MAX or algo not in ("tcw", "auto")):
        _fail("--approx applies only to --mode max with --algo tcw")
    if algo == "auto":
        if approx:
            algo = "tcw"
        elif inst.graph.m <= cap:
            algo = "brute"
        else:
            algo = "fes" if mode is SolveMode.MAX else "tcw"
    if algo == "tcw" and mode is SolveMode.MAX and not approx:
        _fail("maximum stable matching is W[1]-hard for tree-cut width; use --algo fes, or --approx for a 1/2-approximation")
    if algo == "fes" and mode is not SolveMode.MAX:
        _fail("the fes solver computes maximum matchings; use --mode max")
    if decomp_path and algo != "tcw":
        _fail("--decomp is only used by the tcw solver")
    _note(f"algo: {algo}  mode: {mode.value}  agents: {inst.n}  edges: {inst.graph.m}")

    if algo == "brute":
        try:
            M = brute_solve(inst, mode, cap)
        except TooLargeError as exc:
            _fail(str(exc))
    elif algo == "fes":
        stats = fes_solver.FesStats()
        M = fes_solver.fes_max(inst, stats, threads=threads)
        _note(f"fes: {stats.fes_size}  branches: {stats.branches}  discarded: {stats.discarded}")
    else:
        tcd = None
        if decomp_path:
            try:
                tcd = graph_params.parse_decomposition(_read(decomp_path))
                graph_params.check_structure(inst.graph, tcd)
            except (ParseError, graph_params.DecompositionError) as exc:
                _fail(f"{decomp_path}: {exc}")
            tcd, _ = graph_params.make_nice(inst.graph, tcd)
        if approx:
            M = tcw_solver.approx_max(inst, tcd)
        else:
            M = tcw_solver.solve(inst, tcd, mode)
    if M is None:
        click.echo("NONE")
        sys.exit(EXIT_NONE)
    _note(f"size: {len(M)}")
    click.echo(serialize_matching(M), nl=False)


# -- check --------------------------------------------------------------------

@main.command()
@click.argument("instance_path", metavar="INSTANCE")
@click.argument("matching_path", metavar="MATCHING")
def check(instance_path, matching_path):
    """Report PERFECT, STABLE or UNSTABLE followed by the blocking pairs."""
    inst = _load_instance(instance_path)
    try:
        M = check_matching(inst, parse_matching(_read(matching_path)))
    except (ParseError, MatchingError) as exc:
        _fail(f"{matching_path}: {exc}")
    pairs = blocking_pairs(inst, M)
    if not pairs:
        click.echo("PERFECT" if is_perfect(inst, M) else "STABLE")
        return
    click.echo("UNSTABLE")
    for bp in pairs:
        click.echo(str(bp))
    sys.exit(EXIT_NONE)


# -- gen ----------------------------------------------------------------------

def _write_outputs(out: str, instance, manifest: dict, extras: dict[str, str] | None = None) -> None:
    base = Path(out)
    try:
        base.write_text(serialize_instance(instance))
        written = {}
        for suffix, text in (extras or {}).items():
            path = Path(f"{out}.{suffix}")
            path.write_text(text)
            written[f"{suffix}_file"] = path.name
        body = {"instance_file": base.name, "agents": instance.n, "edges": instance.graph.m, **manifest, **written}
        Path(f"{out}.manifest").write_text(gadgets.manifest_text(body))
    except OSError as exc:
        _fail(f"cannot write {out}: {exc}")
    _note(f"wrote {out} and {out}.manifest")


def _out_option(f):
    return click.option("--out", "-o", required=True, help="Instance path; the manifest goes to OUT.manifest.")(f)


def _load_graph(path: str):
    try:
        return gadgets.parse_host_graph(_read(path))
    except gadgets.GadgetError as exc:
        _fail(f"{path}: {exc}")


def _parse_clique(text: str | None):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        _fail("--clique expects comma-separated vertex numbers")


@main.group()
def gen():
    """Generate instances; each writes an instance and a key:value manifest."""


@gen.command("random")
@click.option("--n", "n", type=click.IntRange(min=0), required=True)
@click.option("--edge-prob", type=click.FloatRange(0, 1), default=0.5, show_default=True)
@click.option("--tie-prob", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_out_option
def gen_random(n, edge_prob, tie_prob, seed, out):
    """Random instance: G(n, p) acceptability, shuffled lists, random ties."""
    inst = random_instance(n, edge_prob, tie_prob, seed)
    _write_outputs(out, inst, {"kind": "random", "n": n, "edge_prob": edge_prob, "tie_prob": tie_prob, "seed": seed})


@gen.command("clique-td")
@click.argument("graph_path", metavar="GRAPH")
@click.argument("k", type=int)
@click.option("--strict-ties", is_flag=True, help="Break ties so every list is strict or one tie of size two.")
@click.option("--clique", help="Comma-separated k-clique; writes the witness matching.")
@_out_option
def gen_clique_td(graph_path, k, strict_ties, clique, out):
    """Clique reduction with bounded treedepth and feedback vertex number."""
    G = _load_graph(graph_path)
    try:
        red = gadgets.gen_td_reduction(G, k, strict_ties)
        witness = gadgets.clique_witness_matching(red, _parse_clique(clique)) if clique else None
    except gadgets.GadgetError as exc:
        _fail(str(exc))
    height = graph_params.elimination_forest_height(red.instance.graph, red.elimination)
    manifest = {"kind": "clique-td", "n": red.n, "m": red.m, "k": k, "strict_ties": strict_ties,
                "target": red.target, "fvs_size": len(red.fvs), "fvs": " ".join(sorted(red.fvs)),
                "elimination_height": height}
    extras = {"elimination": "".join(f"{v} {p if p is not None else '-'}\n" for v, p in sorted(red.elimination.items()))}
    if witness is not None:
        extras["witness"] = serialize_matching(witness)
    _write_outputs(out, red.instance, manifest, extras)


@gen.command("clique-tcw")
@click.argument("graph_path", metavar="GRAPH")
@click.argument("k", type=int)
@click.option("--clique", help="Comma-separated k-clique; writes the witness matching.")
@_out_option
def gen_clique_tcw(graph_path, k, clique, out):
    """Clique reduction with bounded tree-cut width."""
    G = _load_graph(graph_path)
    try:
        red = gadgets.gen_tcw_reduction(G, k)
        witness = gadgets.tcw_clique_witness(red, _parse_clique(clique)) if clique else None
    except gadgets.GadgetError as exc:
        _fail(str(exc))
    report = graph_params.validate_tcd(red.instance.graph, red.decomposition)
    manifest = {"kind": "clique-tcw", "n": red.n, "m": red.m, "k": k, "padding": red.C, "kappa": red.kappa,
                "target": red.target, "decomposition_width": report.width}
    extras = {"tcd": graph_params.serialize_decomposition(red.decomposition)}
    if witness is not None:
        extras["witness"] = serialize_matching(witness)
    _write_outputs(out, red.instance, manifest, extras)


@gen.command("perfectize")
@click.argument("instance_path", metavar="INSTANCE")
@click.option("--k", "k", type=click.IntRange(min=0), required=True, help="Number of universal agents to add.")
@_out_option
def gen_perfectize(instance_path, k, out):
    """Add k universal agents (maximum -> perfect)."""
    inst = _load_instance(instance_path)
    _write_outputs(out, gadgets.perfectize(inst, k), {"kind": "perfectize", "k": k, "source_agents": inst.n})


@gen.command("existencefy")
@click.argument("instance_path", metavar="INSTANCE")
@_out_option
def gen_existencefy(instance_path, out):
    """Attach a guard triangle to every agent (perfect -> existence)."""
    inst = _load_instance(instance_path)
    _write_outputs(out, gadgets.existencefy(inst), {"kind": "existencefy", "source_agents": inst.n})


@gen.command("break-ties")
@click.argument("instance_path", metavar="INSTANCE")
@click.option("--policy", type=click.Choice(["first", "random"]), default="first", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for --policy random.")
@_out_option
def gen_break_ties(instance_path, policy, seed, out):
    """Make every list strict: by agent id (first) or by a seeded shuffle (random)."""
    inst = _load_instance(instance_path)
    if policy == "first":
        strict = gadgets.break_ties_first(inst)
    else:
        rng = random.Random(seed)
        selection = {}
        for a in inst.agents:
            chosen = {}
            for i, g in enumerate(inst.prefs[a], start=1):
                if len(g) > 1:
                    order = sorted(g)
                    rng.shuffle(order)
                    chosen[i] = order
            selection[a] = chosen
        strict = break_ties(inst, selection)
    _write_outputs(out, strict, {"kind": "break-ties", "policy": policy, "seed": seed})


# -- decomp -------------------------------------------------------------------

@main.command()
@click.argument("instance_path", metavar="INSTANCE")
@click.option("--from-fes", is_flag=True, help="Print the spanning-forest decomposition.")
@click.option("--nice", is_flag=True, help="With --from-fes: rewrite towards a nice decomposition.")
@click.option("--validate", "validate_path", help="Validate a decomposition file and print its width report.")
@click.option("--exact-tiny", is_flag=True, help="Exact tree-cut width by exhaustive search (tiny graphs).")
def decomp(instance_path, from_fes, nice, validate_path, exact_tiny):
    """Build, validate or compute tree-cut decompositions."""
    if sum([from_fes, validate_path is not None, exact_tiny]) != 1:
        _fail("give exactly one of --from-fes, --validate, --exact-tiny")
    inst = _load_instance(instance_path)
    g = inst.graph
    if from_fes:
        tcd = graph_params.tcd_from_fes(g)
        if nice:
            tcd, _ = graph_params.make_nice(g, tcd)
        report = graph_params.validate_tcd(g, tcd)
        _note(f"width: {report.width}")
        click.echo(graph_params.serialize_decomposition(tcd), nl=False)
        return
    if exact_tiny:
        try:
            width = graph_params.tcw_exact_tiny(g)
        except graph_params.CapExceededError as exc:
            _fail(str(exc))
        click.echo(f"width {width}")
        return
    try:
        tcd = graph_params.parse_decomposition(_read(validate_path))
    except ParseError as exc:
        _fail(f"{validate_path}: {exc}")
    except graph_params.DecompositionError as exc:
        _fail(f"invalid decomposition: {exc}", EXIT_NONE)
    try:
        report = graph_params.validate_tcd(g, tcd)
    except graph_params.DecompositionError as exc:
        _fail(f"invalid decomposition: {exc}", EXIT_NONE)
    click.echo(str(report))


if __name__ == "__main__":
    main()
