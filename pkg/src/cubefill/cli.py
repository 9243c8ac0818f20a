"""Command line entry point and the JSON chain file format.

Chain files look like::

    {"header": {"ambient_dim": 2, "dim": 1, "ring": "Z", "scale": "1"},
     "cells": [{"anchor": [0, 0], "extents": [0], "coeff": 1}, ...]}

Coefficients are integers or "p/q" strings; they are never floats.  PL
chains use ``"kind": "pl"`` in the header and a ``simplices`` list of
``{"vertices": [[x, ...], ...], "coeff": int}`` records.

Exit codes: 0 success, 1 malformed input or internal error, 2 infeasible
(or uncertified under ``--require-certified``), 3 time limit reached.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from .chain import Chain, ChainError, Ring
from .exact_opt import Status
from .grid import GridCell, GridScale

TIME_LIMIT_ENV = "CUBEFILL_TIME_LIMIT"

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_TIME = 0, 1, 2, 3


class ChainFileError(ValueError):
    def __init__(self, index: int | None, message: str):
        self.index = index
        where = "header" if index is None else f"record {index}"
        super().__init__(f"{where}: {message}")


# ---------------------------------------------------------------------------
# serialization


def fmt_q(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _parse_q(v, index: int | None) -> Fraction:
    if isinstance(v, bool) or isinstance(v, float):
        raise ChainFileError(index, f"coefficient {v!r} must be an integer or a 'p/q' string")
    try:
        return Fraction(v)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ChainFileError(index, f"cannot parse {v!r} as a rational") from None


def chain_to_dict(c: Chain) -> dict:
    cells = []
    for cell, v in c.items():
        coeff = int(v) if c.ring is not Ring.RAT else fmt_q(v)
        cells.append({"anchor": list(cell.anchor), "extents": list(cell.extents), "coeff": coeff})
    return {"header": {"ambient_dim": c.ambient_dim, "dim": c.dim, "ring": c.ring.value,
                       "scale": fmt_q(c.scale.r)},
            "cells": cells}


def chain_from_dict(data: dict) -> Chain:
    if not isinstance(data, dict) or "header" not in data:
        raise ChainFileError(None, "missing header")
    h = data["header"]
    try:
        n, d = int(h["ambient_dim"]), int(h["dim"])
        ring = Ring.parse(str(h["ring"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ChainFileError(None, f"bad header ({exc})") from None
    r = _parse_q(h.get("scale", "1"), None)
    if r <= 0:
        raise ChainFileError(None, "scale must be positive")
    if not 0 <= d <= n:
        raise ChainFileError(None, f"dim {d} outside 0..{n}")
    coeffs: dict[GridCell, object] = {}
    for i, rec in enumerate(data.get("cells", [])):
        try:
            anchor = tuple(int(a) for a in rec["anchor"])
            extents = tuple(int(a) for a in rec["extents"])
            raw = rec["coeff"]
        except (KeyError, TypeError, ValueError):
            raise ChainFileError(i, "needs integer 'anchor', 'extents' and a 'coeff'") from None
        if len(anchor) != n:
            raise ChainFileError(i, f"anchor has {len(anchor)} entries, expected {n}")
        if len(extents) != d:
            raise ChainFileError(i, f"{len(extents)} extents for a {d}-chain")
        if list(extents) != sorted(set(extents)) or any(not 0 <= a < n for a in extents):
            raise ChainFileError(i, "extents must be increasing axis indices")
        v = _parse_q(raw, i)
        if v == 0:
            raise ChainFileError(i, "zero coefficient")
        if ring is not Ring.RAT and v.denominator != 1:
            raise ChainFileError(i, f"non-integral coefficient for ring {ring.value}")
        if ring is Ring.MOD2 and v != 1:
            raise ChainFileError(i, "Z2 coefficients must be 1")
        cell = GridCell(anchor, extents)
        if cell in coeffs:
            raise ChainFileError(i, "duplicate cell")
        coeffs[cell] = v
    return Chain(ring, GridScale(r, n), d, coeffs)


def dumps_chain(c: Chain) -> str:
    return json.dumps(chain_to_dict(c), sort_keys=True)


def loads_chain(text: str) -> Chain:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChainFileError(None, f"invalid JSON ({exc})") from None
    return chain_from_dict(data)


def pl_to_dict(T) -> dict:
    return {"header": {"kind": "pl", "ambient_dim": T.ambient_dim, "dim": T.dim},
            "simplices": [{"vertices": [[fmt_q(x) for x in v] for v in s], "coeff": c}
                          for s, c in T.items()]}


def pl_from_dict(data: dict):
    from .deform import PLChain

    h = data["header"]
    n, d = int(h["ambient_dim"]), int(h["dim"])
    items = []
    for i, rec in enumerate(data.get("simplices", [])):
        verts = [tuple(_parse_q(x, i) for x in v) for v in rec["vertices"]]
        if len(verts) != d + 1 or any(len(v) != n for v in verts):
            raise ChainFileError(i, "simplex shape does not match the header")
        c = rec.get("coeff", 1)
        if isinstance(c, bool) or not isinstance(c, int) or c == 0:
            raise ChainFileError(i, "PL coefficients are nonzero integers")
        items.append((verts, c))
    return PLChain.from_terms(d, n, items)


def read_chain(path: str) -> Chain:
    return loads_chain(Path(path).read_text())


def write_chain(c: Chain, path: str | Path) -> None:
    Path(path).write_text(dumps_chain(c) + "\n")


def _sha(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# reports


class Reporter:
    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.start = time.monotonic()
        self.report: dict = {
            "command": command,
            "inputs": {"files": {}, "params": {}},
            "values": {},
            "witnesses": {},
            "measured": {},
            "seed": getattr(args, "seed", None),
            "status": "OK",
        }

    def input_file(self, path: str):
        self.report["inputs"]["files"][path] = _sha(path)

    def params(self, **kw):
        self.report["inputs"]["params"].update({k: v for k, v in kw.items() if v is not None})

    def value(self, key: str, v):
        self.report["values"][key] = fmt_q(v) if isinstance(v, (int, Fraction)) and not isinstance(v, bool) else v

    def witness(self, key: str, c: Chain | None):
        if c is None:
            return
        base = getattr(self.args, "witness_out", None)
        if base:
            path = f"{base}" if key == "witness" else f"{base}.{key}.json"
            write_chain(c, path)
            self.report["witnesses"][key] = path
        else:
            self.report["witnesses"][key] = chain_to_dict(c)

    def emit(self) -> None:
        text = json.dumps(self.report, sort_keys=True, indent=2) + "\n"
        timing = {"wall_time": round(time.monotonic() - self.start, 6)}
        out = getattr(self.args, "out", None)
        if out:
            Path(out).write_text(text)
            Path(f"{out}.timing.json").write_text(json.dumps(timing) + "\n")
        else:
            sys.stdout.write(text)
            print(json.dumps(timing), file=sys.stderr)


def _status_code(args, status: Status | None, certified: bool = True) -> int:
    if status is Status.TIME_LIMIT:
        return EXIT_TIME
    if status in (Status.INFEASIBLE, Status.UNBOUNDED):
        return EXIT_INFEASIBLE
    if getattr(args, "require_certified", False) and not certified:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _time_limit(args) -> float | None:
    if args.time_limit is not None:
        return args.time_limit
    env = os.environ.get(TIME_LIMIT_ENV)
    return float(env) if env else None


def _ring(args) -> Ring | None:
    return Ring.parse(args.ring) if args.ring else None


# ---------------------------------------------------------------------------
# subcommands


def cmd_fv(args) -> int:
    from .filling import fv

    T = read_chain(args.file)
    rep = Reporter(args, "fv")
    rep.input_file(args.file)
    rep.params(ring=args.ring, dilate=args.dilate, time_limit=_time_limit(args))
    res = fv(T, _ring(args), dilate=args.dilate, time_limit=_time_limit(args))
    rep.report["status"] = res.status.value
    rep.value("value", res.value)
    rep.value("dual_bound", res.dual_bound)
    rep.report["values"]["certified"] = res.certified
    rep.witness("witness", res.witness)
    rep.emit()
    return _status_code(args, res.status, res.certified)


def cmd_flatnorm(args) -> int:
    from .filling import flat_norm

    A = read_chain(args.file)
    rep = Reporter(args, "flatnorm")
    rep.input_file(args.file)
    rep.params(ring=args.ring, dilate=args.dilate)
    res = flat_norm(A, _ring(args), dilate=max(args.dilate, 1), time_limit=_time_limit(args))
    rep.report["status"] = res.status.value
    rep.value("value", res.value)
    rep.report["values"]["certified"] = res.certified
    rep.witness("B", res.B)
    rep.witness("remainder", res.remainder)
    rep.emit()
    return _status_code(args, res.status, res.certified)


def cmd_noa(args) -> int:
    from .orient import noa

    A = read_chain(args.file)
    rep = Reporter(args, "noa")
    rep.input_file(args.file)
    rep.params(dilate=args.dilate, time_limit=_time_limit(args))
    res = noa(A, dilate=args.dilate, time_limit=_time_limit(args))
    rep.report["status"] = res.status.value
    rep.value("value", res.value)
    rep.value("lower_bound", res.lower_bound)
    rep.value("mass", A.mass())
    rep.report["values"]["certified"] = res.certified_region and res.optimal
    rep.witness("witness", res.R.R if res.R else None)
    rep.emit()
    return _status_code(args, res.status, res.certified_region and res.optimal)


def cmd_orient(args) -> int:
    from .orient import is_orientable

    A = read_chain(args.file)
    rep = Reporter(args, "orient")
    rep.input_file(args.file)
    res = is_orientable(A)
    rep.report["values"]["orientable"] = res.orientable
    rep.report["values"]["pseudomanifold"] = res.pseudomanifold
    if res.orientable:
        rep.witness("witness", res.witness)
    else:
        rep.report["witnesses"]["reversing_walk"] = [
            {"anchor": list(c.anchor), "extents": list(c.extents)} for c in (res.witness or [])]
    rep.emit()
    return EXIT_OK


def cmd_halve_dim0(args) -> int:
    from .orient import halve_dim0

    U = read_chain(args.file)
    rep = Reporter(args, "halve-dim0")
    rep.input_file(args.file)
    a, b = halve_dim0(U)
    rep.value("mass_U", U.mass())
    rep.value("mass_half", a.mass())
    rep.value("mass_other_half", b.mass())
    rep.witness("witness", a)
    rep.witness("other", b)
    rep.emit()
    return EXIT_OK


def cmd_halve(args) -> int:
    from .orient import halve_filling, noa

    U = read_chain(args.file)
    rep = Reporter(args, "halve")
    rep.input_file(args.file)
    if args.pseudo:
        rep.input_file(args.pseudo)
        R = read_chain(args.pseudo)
        status = Status.OPTIMAL
        noa_value = R.mass()
    else:
        res = noa(U.mod2(), time_limit=_time_limit(args))
        R, status, noa_value = res.R.R, res.status, res.value
    Uh = halve_filling(U, R)
    rep.value("mass_U", U.mass())
    rep.value("mass_R", noa_value)
    rep.value("mass_half", Uh.mass())
    rep.report["status"] = status.value
    rep.witness("witness", Uh)
    rep.emit()
    return EXIT_OK


def cmd_deform(args) -> int:
    from .deform import PLChain, deform_chain

    data = json.loads(Path(args.file).read_text())
    if data.get("header", {}).get("kind") == "pl":
        T = pl_from_dict(data)
    else:
        T = PLChain.from_cellular(chain_from_dict(data))
    r = _parse_q(args.grid, None)
    rep = Reporter(args, "deform")
    rep.input_file(args.file)
    rep.params(grid=fmt_q(r))
    out = deform_chain(T, GridScale(r, T.ambient_dim), seed=args.seed)
    rep.value("mass_P", out.P.mass())
    rep.report["measured"] = {k: round(v, 9) for k, v in out.measured_constants.items()}
    rep.witness("witness", out.P)
    rep.emit()
    return EXIT_OK


def cmd_coarsen(args) -> int:
    from .deform import coarsen

    T = read_chain(args.file)
    rep = Reporter(args, "coarsen")
    rep.input_file(args.file)
    res = coarsen(T, seed=args.seed)
    rep.value("mass_P", res.P.mass())
    rep.value("mass_H", res.H.mass())
    rep.witness("witness", res.P)
    rep.witness("H", res.H)
    rep.emit()
    return EXIT_OK


def cmd_guth_fill(args) -> int:
    from .multiscale import guth_fill

    T, U = read_chain(args.T), read_chain(args.U)
    rep = Reporter(args, "guth-fill")
    rep.input_file(args.T)
    rep.input_file(args.U)
    W, trace = guth_fill(T, U, seed=args.seed)
    rep.value("mass_W", W.mass())
    rep.value("mass_U", U.mass())
    rep.report["measured"] = trace.summary()
    rep.witness("witness", W)
    rep.emit()
    return EXIT_OK


def cmd_ms_orient(args) -> int:
    from .multiscale import multiscale_pseudo_orientation

    A = read_chain(args.file)
    rep = Reporter(args, "ms-orient")
    rep.input_file(args.file)
    R, trace = multiscale_pseudo_orientation(A, seed=args.seed)
    rep.value("mass_A", A.mass())
    rep.value("mass_R", R.R.mass())
    rep.report["measured"] = trace.summary()
    rep.witness("witness", R.R)
    rep.emit()
    return EXIT_OK


def cmd_gen(args) -> int:
    from . import gallery as G

    if not args.out:
        raise SystemExit("gen needs --out")
    ring = _ring(args) or Ring.INT
    box = tuple(int(v) for v in args.box.split("x")) if args.box else (3, 3, 3)
    extra: dict[str, Chain] = {}
    if args.kind == "klein":
        chain, _ = G.gen_klein_bottle(args.m or G.klein_min_size())
    elif args.kind == "young":
        chain, U, K = G.gen_young_rings(args.m or G.klein_min_size(), args.k)
        extra = {"U": U, "K": K}
    elif args.kind == "handled-cube":
        chain = G.gen_handled_cube(args.k, args.L)
    elif args.kind == "random-cycle":
        chain = G.gen_random_cycle(args.d, ring, box, args.density, args.seed)
    elif args.kind == "region":
        chain = G.gen_region(box, args.density, args.seed, ring)
    elif args.kind == "even-pair":
        chain, U = G.gen_even_boundary_pair(args.d, box, args.density, args.seed)
        extra = {"U": U}
    else:  # pragma: no cover - argparse restricts the choices
        raise SystemExit(f"unknown kind {args.kind}")
    write_chain(chain, args.out)
    for key, c in extra.items():
        write_chain(c, f"{args.out}.{key}.json")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .gallery import verify_surface

    A = read_chain(args.file)
    rep = verify_surface(A)
    text = json.dumps({"closed": rep.closed, "pseudomanifold": rep.pseudomanifold,
                       "orientable": rep.orientable, "embedded": rep.embedded,
                       "euler_characteristic": rep.euler_characteristic,
                       "klein_bottle": rep.is_klein_bottle}, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)
    return buf.getvalue()


def cmd_experiment(args) -> int:
    from .experiments import SUITES

    fn = SUITES[args.name]
    kw: dict = {}
    if args.name == "young-phenomenon":
        kw = {"kmax": args.kmax, "time_limit": _time_limit(args)}
        if args.m:
            kw["m"] = args.m
    elif args.n is not None:
        key = {"noa-linear-scan": "n_orientable", "guth-ratio": "n_random"}.get(args.name, "n")
        if args.name != "ms-orient":
            kw[key] = args.n
    if args.name not in ("young-phenomenon",):
        kw["seed"] = args.seed
    res = fn(**kw)
    report = {"command": "experiment", "suite": res.name, "params": kw,
              "summary": res.summary, "rows": res.rows, "seed": args.seed}
    text_json = json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"
    text_csv = rows_to_csv(res.rows)
    if args.out:
        Path(f"{args.out}.csv").write_text(text_csv)
        Path(f"{args.out}.json").write_text(text_json)
        Path(f"{args.out}.timing.json").write_text(json.dumps({"wall_time": round(res.wall_time, 3)}) + "\n")
    else:
        sys.stdout.write(text_csv if args.format == "csv" else text_json)
    return EXIT_OK if res.passed else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ring", choices=["Z", "Z2", "Q"], help="coefficient ring")
    common.add_argument("--dilate", type=int, default=0, help="extra layers around the support")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--time-limit", type=float, default=None,
                        help=f"seconds; defaults to ${TIME_LIMIT_ENV} if set")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--require-certified", action="store_true",
                        help="exit 2 unless the optimum is certified")
    common.add_argument("--witness-out", help="write witness chains to files")

    p = argparse.ArgumentParser(prog="cubefill", description="Exact fillings of cubical chains.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, *files):
        sp = sub.add_parser(name, parents=[common], help=help_)
        for f in files:
            sp.add_argument(f)
        sp.set_defaults(func=fn)
        return sp

    add("fv", cmd_fv, "filling volume", "file")
    add("flatnorm", cmd_flatnorm, "flat norm", "file")
    add("noa", cmd_noa, "nonorientability area of a mod-2 cycle", "file")
    add("orient", cmd_orient, "orientability check", "file")
    add("halve-dim0", cmd_halve_dim0, "split a 1-chain with even boundary", "file")
    sp = add("halve", cmd_halve, "halve a filling of 2T using a pseudo-orientation", "file")
    sp.add_argument("--pseudo", help="pseudo-orientation chain file (computed if absent)")
    sp = add("deform", cmd_deform, "Federer-Fleming deformation onto a grid", "file")
    sp.add_argument("--grid", default="1", help="grid side p/q")
    add("coarsen", cmd_coarsen, "coarsen a cellular chain to twice the scale", "file")
    add("guth-fill", cmd_guth_fill, "fill T from a filling U of 2T", "T", "U")
    add("ms-orient", cmd_ms_orient, "multiscale pseudo-orientation", "file")
    sp = add("gen", cmd_gen, "generate a gallery instance", "kind")
    sp.add_argument("--m", type=int)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--L", type=int, default=2)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--box", help="box extents such as 3x3x3")
    sp.add_argument("--density", type=float, default=0.3)
    add("verify", cmd_verify, "surface report of a mod-2 2-cycle", "file")
    from .experiments import SUITES
    sp = sub.add_parser("experiment", parents=[common], help="run a named suite")
    sp.add_argument("name", choices=sorted(SUITES))
    sp.add_argument("--kmax", type=int, default=4)
    sp.add_argument("--m", type=int)
    sp.add_argument("--n", type=int)
    sp.set_defaults(func=cmd_experiment)
    return p


GEN_KINDS = ("klein", "young", "handled-cube", "random-cycle", "region", "even-pair")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen" and args.kind not in GEN_KINDS:
        parser.error(f"kind must be one of {', '.join(GEN_KINDS)}")
    try:
        return args.func(args)
    except ChainFileError as exc:
        print(f"malformed chain file: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ChainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
