"""Command-line front end.

Every command reads elements in the JSON wire format and prints a JSON report
(``--format json``, the stable contract) or a loose human rendering
(``--format text``). Exit codes: 0 success, 1 invalid input, 2 unsupported
instance, 3 verification failure. Any global flag can also be set through an
environment variable such as ``CSTAREXT_WINDOW``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from .algebra import (
    AlgebraElement,
    AlgebraShape,
    BlockIdeal,
    all_block_ideals,
    block_norm,
    ideal_distance,
    norm_report,
    quotient_map,
)
from .comparison import compare_projections, decompose_average, partial_isometry_average, polar_element
from .errors import CStarError, ParseError
from .extremal import (
    ProperCombination,
    classify_algebra,
    cstar_extreme_classify,
    linear_extreme_test,
)
from .linalg import DEFAULT_TOL, Tolerance, numeric_rank
from .serialize import (
    complex_to_pair,
    dump_element,
    dumps,
    element_to_json,
    parse_element,
    read_element,
    read_json,
)
from .shift import ShiftClassOperator
from .testkit import RngStream, random_element, random_shape, similarity_pair
from .wold import similarity_to_unitary_equivalence, wold_decompose

GEN_KINDS = ("contraction", "unitary", "isometry_shift", "nonextreme", "similarity_pair")


@dataclass(frozen=True)
class CliConfig:
    tol: Tolerance
    window: int
    seed: int
    fmt: str
    out: Path | None


def _render_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
        return "\n".join(lines)
    if isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            return f"{pad}{obj}"
        return "\n".join(_render_text(v, indent) for v in obj)
    return f"{pad}{obj}"


def _emit(cfg: CliConfig, report: dict, name: str | None = None):
    text = dumps(report) if cfg.fmt == "json" else _render_text(report) + "\n"
    click.echo(text, nl=False)
    if cfg.out is not None and name is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / f"{name}.json").write_text(dumps(report), encoding="utf-8")


def _error_report(exc: CStarError) -> dict:
    return {"error": type(exc).__name__, "exit_code": exc.exit_code, "message": str(exc)}


@click.group(context_settings={"auto_envvar_prefix": "CSTAREXT", "help_option_names": ["-h", "--help"]})
@click.option("--tol-rank", type=click.FloatRange(min=0, min_open=True), default=1e-9, show_default=True)
@click.option("--tol-unitary", type=click.FloatRange(min=0, min_open=True), default=1e-8, show_default=True)
@click.option("--tol-eq", type=click.FloatRange(min=0, min_open=True), default=1e-10, show_default=True)
@click.option("--window", type=click.IntRange(min=16, max=4096), default=256, show_default=True)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="Directory for report files.")
@click.version_option(__version__)
@click.pass_context
def cli(ctx, tol_rank, tol_unitary, tol_eq, window, seed, fmt, out):
    """Extreme points of the unit ball of matrix and shift algebras."""
    ctx.obj = CliConfig(Tolerance(tol_rank, tol_unitary, tol_eq), window, seed, fmt, out)


def _input(path) -> AlgebraElement:
    return read_element(path)


input_file = click.argument("path", type=click.Path(dir_okay=False))


@cli.command()
@input_file
@click.option("--route", type=click.Choice(["cstar", "linear"]), default="cstar", show_default=True)
@click.pass_obj
def classify(cfg: CliConfig, path, route):
    """Decide whether an element is a C*-extreme point."""
    x = _input(path)
    test = cstar_extreme_classify if route == "cstar" else linear_extreme_test
    rep = test(x, cfg.tol, cfg.window).to_json()
    rep["route"] = route
    _emit(cfg, rep, "classify")


@cli.command()
@input_file
@click.pass_obj
def average(cfg: CliConfig, path):
    """Split a contraction as the midpoint of two C*-extreme points."""
    x = _input(path)
    x1, x2 = decompose_average(x, cfg.tol, cfg.window)
    mid = (x1 + x2) * 0.5 - x
    rep = {
        "x1": element_to_json(x1),
        "x2": element_to_json(x2),
        "midpoint_error": max(block_norm(b, cfg.window).value for b in mid.blocks),
        "x1_extreme": cstar_extreme_classify(x1, cfg.tol, cfg.window).is_extreme,
        "x2_extreme": cstar_extreme_classify(x2, cfg.tol, cfg.window).is_extreme,
    }
    _emit(cfg, rep, "average")


@cli.command()
@input_file
@click.option("--block", type=int, default=None, help="Block index (default: first shift block, else 0).")
@click.pass_obj
def wold(cfg: CliConfig, path, block):
    """Wold decomposition of an isometric block."""
    a = _input(path)
    if block is None:
        shifts = a.shape.shift_indices
        block = shifts[0] if shifts else 0
    if not 0 <= block < len(a.shape):
        raise click.BadParameter(f"block {block} out of range", param_hint="--block")
    _emit(cfg, wold_decompose(a, block, cfg.window, cfg.tol).to_json(), "wold")


@cli.command()
@input_file
@click.pass_obj
def polar(cfg: CliConfig, path):
    """Polar decomposition and the partial-isometry average ``x = (v1 + v2)/2``."""
    x = _input(path)
    v, modulus = polar_element(x, cfg.tol)
    v1, v2 = partial_isometry_average(x, cfg.tol, cfg.window)
    rep = {
        "v": element_to_json(v),
        "modulus": element_to_json(modulus),
        "v1": element_to_json(v1),
        "v2": element_to_json(v2),
    }
    _emit(cfg, rep, "polar")


@cli.command()
@click.argument("a_path", type=click.Path(dir_okay=False))
@click.argument("b_path", type=click.Path(dir_okay=False))
@click.argument("t_path", type=click.Path(dir_okay=False))
@click.pass_obj
def simeq(cfg: CliConfig, a_path, b_path, t_path):
    """Turn a similarity ``b = t a t^-1`` of isometries into a unitary equivalence."""
    a, b, t = _input(a_path), _input(b_path), _input(t_path)
    res = similarity_to_unitary_equivalence(a, b, t, cfg.window, cfg.tol)
    _emit(cfg, res.to_json(), "simeq")
    return 0 if res.verified else 3


@cli.command()
@click.argument("e_path", type=click.Path(dir_okay=False))
@click.argument("f_path", type=click.Path(dir_okay=False))
@click.pass_obj
def compare(cfg: CliConfig, e_path, f_path):
    """Compare two projections blockwise."""
    _emit(cfg, compare_projections(_input(e_path), _input(f_path)).to_json(), "compare")


def _parse_kill(text: str, shape: AlgebraShape) -> BlockIdeal:
    try:
        killed = frozenset(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise click.BadParameter("expected comma-separated block indices", param_hint="--kill") from None
    if not all(0 <= k < len(shape) for k in killed):
        raise click.BadParameter("block index out of range", param_hint="--kill")
    return BlockIdeal(shape, killed)


def _ideal_entry(x: AlgebraElement, ideal: BlockIdeal, cfg: CliConfig) -> dict:
    entry = {"killed": sorted(ideal.killed), "distance": ideal_distance(x, ideal, cfg.window)}
    if ideal.surviving.is_zero:
        entry["image"] = None
        entry["image_verdict"] = None
    else:
        img = quotient_map(x, ideal)
        entry["image"] = element_to_json(img)
        entry["image_verdict"] = cstar_extreme_classify(img, cfg.tol, cfg.window).verdict.value
    return entry


@cli.command()
@input_file
@click.option("--kill", default=None, help="Comma-separated blocks generating the ideal (default: every ideal).")
@click.pass_obj
def quotient(cfg: CliConfig, path, kill):
    """Distance to block ideals and the class of the quotient image."""
    x = _input(path)
    ideals = [_parse_kill(kill, x.shape)] if kill is not None else list(all_block_ideals(x.shape))
    _emit(cfg, {"ideals": [_ideal_entry(x, i, cfg) for i in ideals]}, "quotient")


@cli.command()
@input_file
@click.pass_obj
def norm(cfg: CliConfig, path):
    """Operator norm with per-block convergence diagnostics."""
    rep = norm_report(_input(path), cfg.window)
    _emit(
        cfg,
        {
            "value": rep.value,
            "window": rep.window,
            "converged": rep.converged,
            "blocks": [
                {
                    "value": b.value,
                    "symbol_sup": b.symbol_sup,
                    "truncation": b.truncation,
                    "truncation_2w": b.truncation_2w,
                    "converged": b.converged,
                }
                for b in rep.blocks
            ],
        },
        "norm",
    )


def _parse_combo(obj) -> ProperCombination:
    if not isinstance(obj, dict) or not isinstance(obj.get("terms"), list) or not obj["terms"]:
        raise ParseError("combination: expected {'terms': [{'coefficient': ..., 'point': ...}, ...]}")
    ts, pts = [], []
    for k, term in enumerate(obj["terms"]):
        if not isinstance(term, dict) or "coefficient" not in term or "point" not in term:
            raise ParseError(f"combination term {k}: needs 'coefficient' and 'point'")
        ts.append(parse_element(term["coefficient"]))
        pts.append(parse_element(term["point"]))
    return ProperCombination(tuple(ts), tuple(pts))


@cli.command("verify-combo")
@click.argument("x_path", type=click.Path(dir_okay=False))
@click.argument("combo_path", type=click.Path(dir_okay=False))
@click.pass_obj
def verify_combo(cfg: CliConfig, x_path, combo_path):
    """Check a proper C*-convex combination and test each point against ``x``."""
    from .extremal import verify_proper_combination

    x = _input(x_path)
    combo = _parse_combo(read_json(combo_path))
    try:
        res = verify_proper_combination(x, combo, cfg.tol, min(cfg.window, 128))
    except CStarError as exc:
        if exc.exit_code != 3:
            raise
        _emit(cfg, {"valid": False, "reason": type(exc).__name__, "message": str(exc)}, "verify-combo")
        return 3
    _emit(cfg, res.to_json(), "verify-combo")


@cli.command("classify-algebra")
@click.argument("shape")
@click.pass_obj
def classify_algebra_cmd(cfg: CliConfig, shape):
    """Whether every C*-extreme point of a shape is an isometry or a coisometry."""
    rep = classify_algebra(AlgebraShape.parse(shape))
    if rep.witness is not None and cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / "witness.json").write_text(dump_element(rep.witness), encoding="utf-8")
    out = rep.to_json()
    out["shape"] = str(AlgebraShape.parse(shape))
    _emit(cfg, out, "classify-algebra")


def _meta(kind: str, seed: int, index: int, x: AlgebraElement, extra: dict | None = None) -> dict:
    meta = {"generator": kind, "seed": seed, "index": index, "shape": str(x.shape), "version": __version__}
    meta.update(extra or {})
    return meta


def _declared(kind: str, x: AlgebraElement) -> dict:
    if kind == "unitary":
        return {"declared": "unitary within 1e-10 blockwise"}
    if kind == "nonextreme":
        return {"declared": "NotExtreme"}
    if kind == "contraction":
        return {"declared": "norm <= 1"}
    info = []
    for b in x.blocks:
        if isinstance(b, ShiftClassOperator):
            d = b.defects().right
            info.append({"multiplicity": numeric_rank(d.perturbation, DEFAULT_TOL) if d.support_bound else 0})
        else:
            info.append({"spectrum": [complex_to_pair(z) for z in np.sort_complex(np.linalg.eigvals(b))]})
    return {"declared": info}


@cli.command()
@click.argument("kind", type=click.Choice(GEN_KINDS))
@click.option("--shape", "shape_text", default="3", show_default=True, help="Shape such as '2,shift,3'.")
@click.option("--count", type=click.IntRange(min=1, max=10000), default=10, show_default=True)
@click.option("--random-shapes", is_flag=True, help="Draw a fresh random shape per file.")
@click.pass_obj
def gen(cfg: CliConfig, kind, shape_text, count, random_shapes):
    """Write a deterministic corpus of generated elements to --out."""
    shape = AlgebraShape.parse(shape_text)
    if kind == "isometry_shift" and not shape.shift_indices:
        raise click.BadParameter("isometry_shift needs a shape with a shift block", param_hint="--shape")
    out = cfg.out or Path("corpus")
    out.mkdir(parents=True, exist_ok=True)
    root = RngStream(cfg.seed, (GEN_KINDS.index(kind),))
    files = []
    for i in range(count):
        rng = root.split(i).generator()
        sh = random_shape(rng, 3, 4, len(shape.shift_indices)) if random_shapes else shape
        stem = f"{kind}_{i:04d}"
        if kind == "similarity_pair":
            a, b, t, mode = similarity_pair(sh, rng)
            for tag, el in (("a", a), ("b", b), ("t", t)):
                name = f"{stem}_{tag}.json"
                (out / name).write_text(dump_element(el), encoding="utf-8")
                files.append(name)
            meta = _meta(kind, cfg.seed, i, a, {"mode": mode})
        else:
            x = random_element(kind, sh, rng)
            name = f"{stem}.json"
            (out / name).write_text(dump_element(x), encoding="utf-8")
            files.append(name)
            meta = _meta(kind, cfg.seed, i, x, _declared(kind, x))
        (out / f"{stem}.meta.json").write_text(dumps(meta), encoding="utf-8")
    manifest = {"kind": kind, "seed": cfg.seed, "count": count, "shape": str(shape), "files": files}
    click.echo(dumps(manifest) if cfg.fmt == "json" else _render_text(manifest) + "\n", nl=False)


def main(argv: list[str] | None = None) -> int:
    """Run the CLI and return the process exit code."""
    try:
        rv = cli.main(args=argv, prog_name="cstarext", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except CStarError as exc:
        click.echo(dumps(_error_report(exc)), nl=False)
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return exc.exit_code
    return rv if isinstance(rv, int) else 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
