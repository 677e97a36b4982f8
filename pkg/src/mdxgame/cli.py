"""Command-line front end.

Exit codes: 0 success / checks passed, 1 input error, 2 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import List, Optional

from .model import DomainError, GameParams, NotInQError
from .paths import Path

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    sub: Optional[str] = None
    params: Optional[str] = None
    out: Optional[str] = None
    grid: int = 1001
    tol: Optional[float] = None
    seed: int = 0
    trials: int = 500
    x: Optional[float] = None
    delta: float = 0.0
    T: Optional[float] = None
    strategy: str = "barrier:beta0"
    psi: Optional[str] = None
    game: str = "original"

    def __post_init__(self):
        if self.grid < 2:
            raise InputError("--grid must be at least 2")
        if self.tol is not None and not self.tol > 0:
            raise InputError("--tol must be positive")


def _load_json(path: Optional[str], what: str) -> dict:
    if path is None:
        raise InputError(f"--params is required ({what})")
    try:
        text = FsPath(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None


def load_params(path: Optional[str]) -> GameParams:
    data = _load_json(path, "game parameters")
    try:
        return GameParams.from_json(data)
    except (ValueError, TypeError, KeyError) as e:
        raise InputError(f"{path}: {e}") from None


def load_psi(path: Optional[str]):
    if path is None:
        zero = Path.constant(0.0)
        return zero, zero
    try:
        data = json.loads(FsPath(path).read_text())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    try:
        return Path.from_json(data["psi1"]), Path.from_json(data["psi2"])
    except KeyError as e:
        raise InputError(f"{path}: missing field {e.args[0]!r}") from None
    except (ValueError, TypeError) as e:
        raise InputError(f"{path}: {e}") from None


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _emit(obj) -> None:
    print(canonical_json(obj))


def _write(out: Optional[str], text: str) -> None:
    if out:
        FsPath(out).write_text(text)


def _need(value, flag: str):
    if value is None:
        raise InputError(f"{flag} is required for this command")
    return value


def cmd_solve(cfg: RunConfig) -> int:
    from .value import free_boundary, value_table

    params = load_params(cfg.params)
    fb = free_boundary(params)
    _write(cfg.out, value_table(params, cfg.grid).to_csv())
    _emit(fb.to_json())
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .value import bellman_residual

    if cfg.sub != "bellman":
        raise InputError("usage: verify bellman")
    params = load_params(cfg.params)
    rep = bellman_residual(params, cfg.grid)
    tol = cfg.tol if cfg.tol is not None else 1e-8
    ok = rep.passed(tol_inner=tol)
    _emit({**rep.to_json(), "tolerance": tol, "passed": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(cfg: RunConfig) -> int:
    from .engine import evaluate_hitting, evaluate_original, parse_strategy

    params = load_params(cfg.params)
    x = _need(cfg.x, "--x")
    psi = load_psi(cfg.psi)
    strategy = parse_strategy(cfg.strategy, params)
    if cfg.game == "hitting":
        cost = evaluate_hitting(params, x, strategy, psi)
    else:
        cost = evaluate_original(params, x, strategy, psi, _need(cfg.T, "--T"))
    _emit({"strategy": strategy.name, "game": cfg.game, **cost.to_json()})
    return EXIT_OK


def cmd_adversary(cfg: RunConfig) -> int:
    from .adversary import response_cost, termination_time
    from .value import value_g

    params = load_params(cfg.params)
    x = _need(cfg.x, "--x")
    cost, resp = response_cost(params, x, cfg.delta)
    _write(cfg.out, resp.to_csv())
    _emit({"x": x, "delta": cfg.delta, "tau_tilde": resp.tau_tilde,
           "tau_quadrature": termination_time(params, x, cfg.delta),
           "cost": cost.to_json(), "value": value_g(params, x)})
    return EXIT_OK


def cmd_witness(cfg: RunConfig) -> int:
    from .engine import divergence_witness, nojump_witness, parse_strategy

    params = load_params(cfg.params)
    x = _need(cfg.x, "--x")
    strategy = parse_strategy(cfg.strategy, params)
    if cfg.sub == "diverge":
        w = divergence_witness(params, x, _need(cfg.T, "--T"), strategy)
    elif cfg.sub == "nojump":
        w = nojump_witness(params, x, cfg.delta, strategy)
    else:
        raise InputError("usage: witness diverge|nojump")
    _emit({"strategy": strategy.name, **w.to_json()})
    return EXIT_OK if w.passed else EXIT_FAIL


def cmd_saddle(cfg: RunConfig) -> int:
    from .adversary import saddle_check

    params = load_params(cfg.params)
    x = _need(cfg.x, "--x")
    rep = saddle_check(params, x, cfg.trials, cfg.seed, tol=cfg.tol or 1e-6)
    _write(cfg.out, "p,F\n" + "".join(f"{p:.17g},{f:.17g}\n" for p, f in rep.profile))
    _emit(rep.to_json())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_collapse(cfg: RunConfig) -> int:
    from .collapse import MulticlassParams, effective_params, verify_collapse

    data = _load_json(cfg.params, "multiclass parameters")
    try:
        multi = MulticlassParams.from_json(data)
        col = effective_params(multi)
    except (ValueError, TypeError) as e:
        raise InputError(f"{cfg.params}: {e}") from None
    _write(cfg.out, col.knots_csv())
    rep = verify_collapse(multi, cfg.trials, cfg.seed)
    _emit({"params": col.params.to_json(), "i_star": col.i_star, "report": rep.to_json()})
    return EXIT_OK if rep.passed else EXIT_FAIL


COMMANDS = {
    "solve": cmd_solve, "verify": cmd_verify, "simulate": cmd_simulate,
    "adversary": cmd_adversary, "witness": cmd_witness, "saddle": cmd_saddle,
    "collapse": cmd_collapse,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdxgame", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("sub", nargs="?", help="bellman (verify) or diverge|nojump (witness)")
    p.add_argument("--params")
    p.add_argument("--out")
    p.add_argument("--grid", type=int, default=1001)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--x", type=float)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--T", type=float)
    p.add_argument("--strategy", default="barrier:beta0")
    p.add_argument("--psi")
    p.add_argument("--game", choices=["original", "hitting"], default="original")
    return p


def run_command(cfg: RunConfig) -> int:
    from .value import InfiniteValueError

    try:
        return COMMANDS[cfg.command](cfg)
    except InfiniteValueError as e:
        print(f"error: {e}", file=sys.stderr)
    except (InputError, DomainError, NotInQError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_INPUT


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**vars(args))
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
