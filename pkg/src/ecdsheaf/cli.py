"""Command line front end.

Inputs are either description files (``--site``, ``--ecd``, ``--density``,
``--presheaf``, ``--complex``) or a built-in ``--fixture``; files override
the corresponding fixture parts.  Exit status: 0 all checks pass, 1 a
mathematical check failed, 2 input error, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from .ecd import DensityStructure, EcdStructure, check_bounded, check_complete, check_regular, load_density, load_ecd
from .fincat import CategoryError, FinCategory, loads_category
from .homological import CertificationFailed, PresheafComplex, cohomology_table, concentrated
from .qmod import QPresheaf, sheaf_violations_linear, sheafify_linear
from .sieves import check_topology_axioms

OK, FAILED, INPUT_ERROR, INCONCLUSIVE = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    fmt: str
    cat: FinCategory
    P: EcdStructure | None
    D: DensityStructure | None
    presheaf: QPresheaf | None
    complex: PresheafComplex | None
    args: argparse.Namespace


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    return p.read_text()


def _load(args) -> RunConfig:
    fx = None
    if args.fixture:
        from .zoo import build_fixture
        fx = build_fixture(args.fixture)
    if args.site:
        cat = loads_category(_read(args.site))
    elif fx is not None:
        cat = fx.cat
    else:
        raise InputError("need --site or --fixture")
    P = load_ecd(cat, _read(args.ecd)) if args.ecd else (fx.P if fx and not args.site else None)
    D = load_density(cat, _read(args.density)) if args.density else (fx.D if fx and not args.site else None)
    F = QPresheaf.from_dict(cat, json.loads(_read(args.presheaf))) if args.presheaf else None
    if F is not None:
        bad = F.check_functorial()
        if bad:
            raise InputError(f"presheaf is not a functor: {bad[0]}")
    K = PresheafComplex.from_dict(cat, json.loads(_read(args.complex))) if args.complex else None
    return RunConfig(args.command, args.format, cat, P, D, F, K, args)


def _need(value, what: str):
    if value is None:
        raise InputError(f"this command needs {what}")
    return value


def _max_degree(args) -> int:
    if args.max_degree is not None:
        n = args.max_degree
    else:
        n = int(os.environ.get("ECDSHEAF_MAX_DEGREE", "3"))
    if n < 1:
        raise InputError("degree bound must be at least 1")
    return n


# -- commands ----------------------------------------------------------------

def cmd_validate(cfg: RunConfig):
    rep = {"site": {"objects": len(cfg.cat.objects), "morphisms": len(cfg.cat.morphisms)}}
    if cfg.P is not None:
        rep["ecd"] = {"squares": [C.name for C in cfg.P.squares]}
    if cfg.D is not None:
        rep["density"] = {S: cfg.D.dim(S) for S in cfg.cat.objects}
    if cfg.presheaf is not None:
        rep["presheaf"] = dict(cfg.presheaf.dim)
    if cfg.complex is not None:
        rep["complex"] = {"lo": cfg.complex.lo, "hi": cfg.complex.hi}
    lines = [f"site: {rep['site']['objects']} objects, {rep['site']['morphisms']} morphisms"]
    if "ecd" in rep:
        lines.append("ecd squares: " + ", ".join(rep["ecd"]["squares"]))
    if "density" in rep:
        lines.append("dim_D: " + ", ".join(f"{S}={d}" for S, d in rep["density"].items()))
    if "presheaf" in rep:
        lines.append("presheaf dims: " + ", ".join(f"{S}={d}" for S, d in rep["presheaf"].items()))
    if "complex" in rep:
        lines.append(f"complex in degrees {rep['complex']['lo']}..{rep['complex']['hi']}")
    return OK, rep, "\n".join(lines)


def cmd_topology(cfg: RunConfig):
    P = _need(cfg.P, "an ecd-structure")
    t = P.topology()
    bad = check_topology_axioms(t)
    rep = {"covering_sieves": t.dump(), "axioms": not bad, "violations": bad}
    lines = []
    for X, sieves in t.dump().items():
        lines.append(f"{X}:")
        for R in sieves:
            lines.append("  {" + ", ".join(R) + "}")
    lines.append("axioms: " + ("ok" if not bad else "; ".join(bad[:3])))
    return (OK if not bad else FAILED), rep, "\n".join(lines)


def cmd_sheafify(cfg: RunConfig):
    P = _need(cfg.P, "an ecd-structure")
    F = _need(cfg.presheaf, "--presheaf")
    t = P.topology()
    a = sheafify_linear(F, t)
    bad = sheaf_violations_linear(a.sheaf, t)
    if cfg.args.out:
        Path(cfg.args.out).write_text(a.sheaf.dumps())
    rep = {"input": dict(F.dim), "sheaf": dict(a.sheaf.dim), "was_sheaf": not sheaf_violations_linear(F, t),
           "sheaf_condition": not bad, "output": a.sheaf.to_dict()}
    lines = [f"{'object':<12} F   aF"] + [f"{X:<12} {F.dim[X]:<3} {a.sheaf.dim[X]}" for X in cfg.cat.objects]
    lines.append(f"input already a sheaf: {'yes' if rep['was_sheaf'] else 'no'}")
    return (OK if not bad else FAILED), rep, "\n".join(lines)


def cmd_cohomology(cfg: RunConfig):
    P = _need(cfg.P, "an ecd-structure")
    F = _need(cfg.presheaf, "--presheaf")
    N = _max_degree(cfg.args)
    objs = [cfg.args.object] if cfg.args.object else list(cfg.cat.objects)
    for S in objs:
        if S not in cfg.cat.objects:
            raise InputError(f"unknown object {S}")
    tab = cohomology_table(F, P.topology(), N, objs)
    rep = {S: r.dims for S, r in tab.items()}
    lines = [f"{'object':<12} " + " ".join(f"H^{n}" for n in range(N + 1))]
    lines += [f"{S:<12} " + " ".join(f"{d:<3}" for d in r.dims).rstrip() for S, r in tab.items()]
    return OK, {"max_degree": N, "table": rep}, "\n".join(lines)


def cmd_check_ecd(cfg: RunConfig):
    P = _need(cfg.P, "an ecd-structure")
    a = cfg.args
    which = [k for k in ("complete", "regular", "bounded") if getattr(a, k)] or ["complete", "regular", "bounded"]
    t = P.topology()
    rep, lines, codes = {}, [], []
    if "complete" in which:
        v = check_complete(P, t, depth=a.depth)
        rep["complete"] = {"status": v.status, "sufficient_failures": v.sufficient_failures,
                           "witness": v.witness.ids() if v.witness is not None else None}
        lines.append(f"complete: {v.status}")
        codes.append(OK if v.complete else (INCONCLUSIVE if v.status == "inconclusive" else FAILED))
    if "regular" in which:
        vs = check_regular(P, t)
        rep["regular"] = {v.square: {"regular": v.regular, "cartesian": v.cartesian, "mono": v.mono,
                                     "epi": v.epi_direct, "pullback_cover": v.pullback_cover, "note": v.note}
                          for v in vs}
        for v in vs:
            lines.append(f"regular {v.square}: {'yes' if v.regular else 'no'}" + (f" ({v.note})" if v.note else ""))
        codes.append(OK if all(v.regular for v in vs) else FAILED)
    if "bounded" in which:
        D = _need(cfg.D, "a density structure")
        b = check_bounded(P, D)
        rep["bounded"] = {"bounded": b.bounded, "refinements": b.refinements,
                          "witnesses": {k: [list(map(str, w)) for w in v] for k, v in b.witnesses.items()}}
        lines.append(f"bounded: {'yes' if b.bounded else 'no'}")
        codes.append(OK if b.bounded else FAILED)
    code = FAILED if FAILED in codes else (INCONCLUSIVE if INCONCLUSIVE in codes else OK)
    return code, rep, "\n".join(lines)


def cmd_check_descent(cfg: RunConfig):
    from . import descent
    P = _need(cfg.P, "an ecd-structure")
    D = _need(cfg.D, "a density structure")
    th = cfg.args.theorem
    if th == "2.14":
        F = _need(cfg.presheaf, "--presheaf")
        try:
            r = descent.check_vanishing(P, D, F)
        except descent.VanishingFailed as e:
            return FAILED, {"vanishes": False, "witness": str(e)}, f"vanishing failed: {e}"
        return OK, r.to_dict(), r.summary()
    if cfg.complex is not None:
        K = cfg.complex
    elif cfg.presheaf is not None:
        K = concentrated(cfg.presheaf)
    else:
        raise InputError("this command needs --complex or --presheaf")
    if th == "2.3":
        v = descent.check_theorem_2_3(K, P, D)
        if v.locality.status == "inconclusive":
            code = INCONCLUSIVE
        else:
            code = OK if v.all_squares and v.locality.local else FAILED
        return code, v.to_dict(), v.summary()
    r = descent.check_theorem_2_16(K, P, D)
    if r.condition_i is None or r.condition_ii is None:
        code = INCONCLUSIVE
    else:
        code = OK if r.condition_i and r.condition_ii else FAILED
    return code, r.to_dict(), r.summary()


def cmd_fixture(cfg: RunConfig):
    from .zoo import build_fixture, emit
    fx = build_fixture(cfg.args.name)
    rep = {"name": fx.name, "objects": len(fx.cat.objects), "squares": [C.name for C in fx.P.squares],
           "dim_D": {S: fx.D.dim(S) for S in fx.cat.objects}}
    lines = [f"{fx.name}: {len(fx.cat.objects)} objects, squares {', '.join(rep['squares'])}"]
    if cfg.args.emit:
        out = cfg.args.out or f"fixture-{fx.name}"
        paths = emit(fx, out)
        rep["files"] = {k: str(v) for k, v in paths.items()}
        lines += [f"wrote {v}" for v in paths.values()]
    return OK, rep, "\n".join(lines)


COMMANDS = {
    "validate": cmd_validate,
    "topology": cmd_topology,
    "sheafify": cmd_sheafify,
    "cohomology": cmd_cohomology,
    "check-ecd": cmd_check_ecd,
    "check-descent": cmd_check_descent,
    "fixture": cmd_fixture,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--site")
    common.add_argument("--ecd")
    common.add_argument("--density")
    common.add_argument("--presheaf")
    common.add_argument("--complex")
    common.add_argument("--fixture", help="use a built-in fixture for the parts not given as files")
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--seed", type=int, default=0, help="seed for any randomized step")
    p = argparse.ArgumentParser(prog="ecdsheaf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common])
    sub.add_parser("topology", parents=[common])
    s = sub.add_parser("sheafify", parents=[common])
    s.add_argument("--out")
    c = sub.add_parser("cohomology", parents=[common])
    c.add_argument("--object")
    c.add_argument("--max-degree", type=int)
    e = sub.add_parser("check-ecd", parents=[common])
    e.add_argument("--complete", action="store_true")
    e.add_argument("--regular", action="store_true")
    e.add_argument("--bounded", action="store_true")
    e.add_argument("--depth", type=int)
    d = sub.add_parser("check-descent", parents=[common])
    d.add_argument("--theorem", choices=["2.3", "2.14", "2.16"], required=True)
    f = sub.add_parser("fixture", parents=[common])
    f.add_argument("name")
    f.add_argument("--emit", action="store_true")
    f.add_argument("--out")
    return p


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return INPUT_ERROR if e.code else OK
    random.seed(args.seed)
    try:
        if args.command == "fixture":
            cfg = RunConfig("fixture", args.format, None, None, None, None, None, args)
        else:
            cfg = _load(args)
        code, rep, text = COMMANDS[args.command](cfg)
    except (InputError, CategoryError, ValueError, KeyError, json.JSONDecodeError) as e:
        if isinstance(e, CertificationFailed):
            raise
        msg = f"input error: {e}"
        if args.format == "json":
            print(json.dumps({"status": INPUT_ERROR, "error": str(e)}), file=stdout)
        else:
            print(msg, file=sys.stderr)
        return INPUT_ERROR
    if args.format == "json":
        print(json.dumps({"command": args.command, "status": code, "report": rep}, indent=1, default=str),
              file=stdout)
    else:
        print(text, file=stdout)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
