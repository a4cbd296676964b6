"""Command-line interface: ``ptkv check | sat | axioms | closure``.

Every command prints one JSON document.  Exit status 2 always means the
input was rejected; the meaning of 0 and 1 depends on the command.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Union

from . import axioms as ax
from .canonical import brute_force_sat, decide_sat
from .errors import ModelFormatError, PTKVError
from .model import ProbModel, satisfies, validate
from .syntax import finite_closure, parse, to_text
from .typespace import (
    DEFAULT_CLOSURE_CAP,
    TERM_COUNT,
    PLUS_ONE,
    emit_star_axioms,
    enumerate_types,
    iterate_elimination,
    resolve_k_size,
)

EXIT_OK, EXIT_NO, EXIT_ERROR = 0, 1, 2


class UsageError(PTKVError):
    pass


@dataclass
class RunConfig:
    k_size: Union[str, int] = PLUS_ONE
    closure_cap: int = DEFAULT_CLOSURE_CAP
    seed: int = 42
    trials: int = 500
    bounds_worlds: int = 3
    bounds_domain: int = 3
    bounds_denominator: int = 3
    output: Optional[str] = None
    replicas: Optional[int] = None
    controls: list = field(default_factory=list)
    schemata: list = field(default_factory=list)

    def __post_init__(self):
        if isinstance(self.k_size, int) and self.k_size < 1:
            raise UsageError("explicit --k-size must be >= 1")
        if self.trials < 1:
            raise UsageError("--trials must be >= 1")
        if self.replicas is not None and self.replicas < 1:
            raise UsageError("--materialize-replicas must be >= 1")


def parse_k_size(text: str) -> Union[str, int]:
    text = text.strip().lower()
    if text == TERM_COUNT:
        return TERM_COUNT
    if text in ("plus-one", "plus_one"):
        return PLUS_ONE
    try:
        n = int(text)
    except ValueError:
        raise UsageError(f"--k-size must be paper, plus-one or a positive integer, not {text!r}") from None
    if n < 1:
        raise UsageError("explicit --k-size must be >= 1")
    return n


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, not {raw!r}") from None


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Flags win over PTKV_* environment variables, which win over defaults."""
    k_size = args.k_size if args.k_size is not None else os.environ.get("PTKV_K_SIZE", PLUS_ONE)
    seed = args.seed if args.seed is not None else _env_int("PTKV_SEED", 42)
    return RunConfig(
        k_size=parse_k_size(str(k_size)),
        closure_cap=args.closure_cap,
        seed=seed,
        trials=getattr(args, "trials", 500),
        bounds_worlds=args.bounds_worlds,
        bounds_domain=args.bounds_domain,
        bounds_denominator=args.bounds_denominator,
        output=args.output,
        replicas=args.materialize_replicas,
        controls=list(getattr(args, "negative_control", None) or []),
        schemata=list(getattr(args, "schema", None) or []),
    )


# -- output -------------------------------------------------------------------------

def render(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def write_output(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ptkv-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def error_doc(exc: BaseException, kind: Optional[str] = None) -> dict:
    message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
    doc = {"error": {"kind": kind or type(exc).__name__, "message": str(message)}}
    position = getattr(exc, "position", None)
    if position is not None:
        doc["error"]["position"] = position
    return doc


# -- commands -----------------------------------------------------------------------

def _require(args, name):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    return value


def cmd_check(args, cfg: RunConfig):
    formula = parse(_require(args, "formula"))
    path = _require(args, "model")
    world = _require(args, "world")
    try:
        with open(path, encoding="utf-8") as fh:
            model = ProbModel.loads(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read model file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not JSON: {exc}") from None
    problems = validate(model, [formula])
    if problems:
        return {"error": {"kind": "ValidationError", "message": "model failed validation", "violations": problems}}, EXIT_ERROR
    result = satisfies(model, world, formula)
    return {"result": result}, EXIT_OK if result else EXIT_NO


def cmd_sat(args, cfg: RunConfig):
    formula = parse(_require(args, "formula"))
    verdict = decide_sat(formula, k_size=cfg.k_size, cap=cfg.closure_cap, replicas=cfg.replicas)
    doc = verdict.to_json()
    if args.oracle:
        found = brute_force_sat(formula, cfg.bounds_worlds, cfg.bounds_domain, cfg.bounds_denominator)
        doc["oracle"] = {
            "bounds": {
                "worlds": cfg.bounds_worlds,
                "domain": cfg.bounds_domain,
                "denominator": cfg.bounds_denominator,
            },
            "found": found is not None,
            "model": found[0].to_json() if found else None,
        }
    return doc, EXIT_OK if verdict.sat else EXIT_NO


def cmd_axioms(args, cfg: RunConfig):
    schemata = cfg.schemata or list(ax.SCHEMATA)
    report = ax.soundness_suite(cfg.seed, cfg.trials, schemata=schemata, controls=cfg.controls)
    doc = {
        "seed": cfg.seed,
        "trials": cfg.trials,
        "ok": report.ok,
        "schemata": report.to_json(),
    }
    return doc, EXIT_OK if report.ok else EXIT_NO


def cmd_closure(args, cfg: RunConfig):
    formula = parse(_require(args, "formula"))
    closure = finite_closure(formula)
    size = resolve_k_size(cfg.k_size, closure)
    types = enumerate_types(closure, cfg.closure_cap)
    elim = iterate_elimination(closure, size, types=types, cap=cfg.closure_cap)
    doc = closure.to_json()
    doc.update(
        {
            "size": len(closure),
            "k_size": size,
            "types": len(types),
            "surviving": len(elim.survivors),
            "surviving_types": [g.labels() for g in sorted(elim.survivors, key=lambda g: g.mask)],
            "trace": [
                {"stage": s.index, "surviving": len(s.surviving), "eliminated": len(s.eliminated)}
                for s in elim.trace.stages
            ],
            "star_axioms": [to_text(f) for f in emit_star_axioms(elim.trace)],
        }
    )
    return doc, EXIT_OK


COMMANDS = {"check": cmd_check, "sat": cmd_sat, "axioms": cmd_axioms, "closure": cmd_closure}


# -- argument parsing ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--formula")
    common.add_argument("--k-size", dest="k_size", help="paper, plus-one or a positive integer")
    common.add_argument("--closure-cap", dest="closure_cap", type=int, default=DEFAULT_CLOSURE_CAP)
    common.add_argument("--seed", type=int)
    common.add_argument("--bounds-worlds", dest="bounds_worlds", type=int, default=3)
    common.add_argument("--bounds-domain", dest="bounds_domain", type=int, default=3)
    common.add_argument("--bounds-denominator", dest="bounds_denominator", type=int, default=3)
    common.add_argument("--output", help="write JSON here instead of stdout")
    common.add_argument("--materialize-replicas", dest="materialize_replicas", type=int, metavar="N")

    parser = _Parser(prog="ptkv", description="Exact tools for a probabilistic logic of knowing values.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("check", parents=[common], help="model-check a formula at a world")
    p.add_argument("--model", help="model JSON file")
    p.add_argument("--world")

    p = sub.add_parser("sat", parents=[common], help="decide satisfiability")
    p.add_argument("--oracle", action="store_true", help="also run the bounded brute-force search")

    p = sub.add_parser("axioms", parents=[common], help="randomized soundness check of the axiom schemata")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--schema", action="append", choices=ax.SCHEMATA)
    p.add_argument("--negative-control", dest="negative_control", action="append", choices=sorted(ax.NEGATIVE_CONTROLS))

    sub.add_parser("closure", parents=[common], help="list the closure with its type counts and elimination summary")
    return parser


def main(argv=None) -> int:
    output = None
    try:
        args = build_parser().parse_args(argv)
        output = args.output
        cfg = config_from_args(args)
        doc, code = COMMANDS[args.command](args, cfg)
    except (PTKVError, ValueError, KeyError) as exc:
        doc, code = error_doc(exc), EXIT_ERROR
    try:
        write_output(render(doc), output)
    except OSError as exc:
        sys.stderr.write(render(error_doc(exc)))
        return EXIT_ERROR
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
