"""Command line front end: ``abtheme <subcommand> [input] [options]``.

Inputs are a presentation (JSON file or inline JSON), a standard word or
a multivalued expansion.  Reports are JSON with rationals as strings;
``--format table`` prints the same data as aligned key/value lines.

Exit codes: 0 when a decision was reached, 2 when the answer is unknown or
did not stabilise under a trunc increase, 1 on error.
"""

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .coeff_core import Q
from .errors import ThemeError
from .families import (
    canonical_family,
    rank2_family,
    rank2_normal_form,
    rank3_family,
    rank4_family,
    rank_stratify,
    sweep_invariance,
)
from .hom_engine import (
    UNKNOWN,
    end_dimension,
    end_flag,
    ext_dimensions,
    is_invariant,
    isomorphic,
    property_u,
)
from .parser import S_CONVENTION, ParamXiText, format_xi, parse_word, parse_xi
from .theme_core import (
    FundamentalInvariants,
    ThemePresentation,
    bernstein_element,
    bernstein_roots,
    canonical_form,
    default_trunc,
    dual_twist,
    embed_in_xi,
    from_generator,
    validate,
)
from .xi_space import component_split, krylov_rank

COMMANDS = (
    "analyze", "canonical", "bernstein", "invariant", "enddim",
    "iso", "ext", "dualtwist", "embed", "sweep", "stratify",
)
TWO_INPUTS = {"iso", "ext"}


def _rat(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# -- inputs ----------------------------------------------------------------------

def _load_json(arg):
    text = arg if arg.lstrip().startswith("{") else Path(arg).read_text(encoding="utf-8")
    return json.loads(text)


def _presentation(kind, text, trunc):
    """(presentation, extra report fields) from one input source."""
    if kind == "pres":
        return ThemePresentation.from_json(_load_json(text), trunc), {}
    if kind == "word":
        w = parse_word(text, trunc or 32)
        pres = ThemePresentation(w.lambdas, w.S)
        return pres, {}
    parsed = parse_xi(text, trunc or 32)
    phi = parsed.single()
    extra = {"convention": parsed.convention, "terms": list(parsed.terms)}
    return from_generator(phi), extra


def _sources(args):
    out = []
    for kind in ("pres", "word", "xi"):
        for text in getattr(args, kind) or []:
            out.append((kind, text))
    return out


def _pres_json(pres):
    d = pres.to_json()
    d["lambdas"] = [_rat(l) for l in pres.lambdas]
    return d


# -- subcommands -----------------------------------------------------------------

def _analyze(args, src):
    kind, text = src
    if kind == "xi":
        parsed = parse_xi(text, args.trunc or 32)
        parts = parsed.element.nonzero()
        report = {"convention": parsed.convention, "terms": list(parsed.terms)}
        if len(parts) > 1:
            mods = component_split(parsed.element)
            report["rank"] = krylov_rank(parts)
            report["components"] = [
                _describe(from_generator(m)) | {"lambda": _rat(l)} for l, m in sorted(mods.items())
            ]
            return report
        pres = from_generator(next(iter(parts.values())))
        return report | _describe(pres, full=True)
    pres, extra = _presentation(kind, text, args.trunc)
    return extra | _describe(pres, full=True)


def _describe(pres, full=False):
    out = {
        "rank": pres.rank,
        "lambda1": _rat(pres.lambda1),
        "p": [int(p) for p in pres.ps],
    }
    diags = validate(pres)
    if diags:
        out["valid"] = False
        out["diagnostics"] = diags
        return out
    if not full or pres.rank == 1:
        if full:
            out["bernstein_roots"] = [_rat(r) for r in bernstein_roots(pres)]
        return out
    inv = is_invariant(pres)
    out.update({
        "presentation": _pres_json(pres),
        "bernstein_element": str(bernstein_element(pres)),
        "bernstein_roots": [_rat(r) for r in bernstein_roots(pres)],
        "invariant": bool(inv),
        "end_dimension": end_dimension(pres),
        "property_u": property_u(pres, invariant=bool(inv)).decision,
        "canonical_form": _pres_json(canonical_form(pres)),
        "trunc_used": inv.trunc_used,
        "stabilized": inv.stabilized,
    })
    return out


def _canonical(args, pres):
    return {"canonical_form": _pres_json(canonical_form(pres, args.trunc))}


def _bernstein(args, pres):
    el = bernstein_element(pres, args.trunc)
    roots = bernstein_roots(pres, args.trunc)
    return {
        "bernstein_element": str(el),
        "roots": [_rat(r) for r in roots],
        "bernstein_polynomial_roots": [_rat(-r) for r in roots],
    }


def _invariant(args, pres):
    d = is_invariant(pres, args.trunc)
    out = {"invariant": d.decision if d.decision is UNKNOWN else bool(d)}
    if d.witness:
        out["witness"] = d.witness["image"]
    if d.obstruction:
        out["obstruction"] = d.obstruction
    out.update({"trunc_used": d.trunc_used, "stabilized": d.stabilized})
    return out


def _enddim(args, pres):
    return {
        "end_dimension": end_dimension(pres, args.trunc),
        "end_flag": end_flag(pres, args.trunc),
    }


def _iso(args, A, B):
    d = isomorphic(A, B, args.trunc)
    out = {"isomorphic": bool(d)}
    if d.witness:
        out["U"] = d.witness.get("U")
        out["witness"] = d.witness["image"]
    if d.obstruction:
        out["obstruction"] = d.obstruction
    out.update(d.extra)
    out.update({"trunc_used": d.trunc_used, "stabilized": d.stabilized})
    return out


def _ext(args, E, F):
    r = ext_dimensions(E, F, args.trunc)
    return {
        "ext0": r.ext0,
        "ext1": r.ext1,
        "difference": r.ext1 - r.ext0,
        "rank_product": E.rank * F.rank,
        "trunc_used": r.trunc,
        "stabilized": r.stabilized,
    }


def _dualtwist(args, pres):
    if args.delta is None:
        raise ThemeError("dualtwist needs --delta")
    return {"dual_twist": _pres_json(dual_twist(pres, Q(Fraction(args.delta))))}


def _embed(args, pres):
    phi = embed_in_xi(pres, args.trunc)
    return {"xi": format_xi(phi), "lambda": _rat(phi.lam), "log_degree": phi.log_degree(),
            "trunc_used": phi.trunc, "convention": S_CONVENTION}


# -- sweeps and stratification -----------------------------------------------------

def _family(cfg):
    name = cfg.get("family", "canonical")
    trunc = int(cfg.get("trunc", 32))
    if name == "rank3":
        return rank3_family(Fraction(str(cfg.get("lambda1", 3))), trunc)
    if name == "rank4":
        return rank4_family(Fraction(str(cfg.get("lambda1", "7/2"))), trunc)
    if name == "rank2":
        return rank2_family(Fraction(str(cfg["lambda1"])), int(cfg["p"][0]), trunc)
    if name == "canonical":
        inv = FundamentalInvariants(Fraction(str(cfg["lambda1"])), tuple(int(p) for p in cfg["p"]))
        return canonical_family(inv, trunc)
    raise ThemeError(f"unknown family {name!r}")


def _sweep(args):
    if not args.config:
        raise ThemeError("sweep needs --config")
    cfg = _load_json(args.config)
    fam = _family(cfg)
    grid = {n: [Fraction(str(v)) for v in vs] for n, vs in cfg["params"].items()}
    missing = [n for n in fam.params if n not in grid]
    if missing:
        raise ThemeError(f"no values given for {', '.join(missing)}")
    rep = sweep_invariance(fam, grid, seed=int(cfg.get("seed", 0)), verify=int(cfg.get("verify", 4)))
    out_path = cfg.get("output")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            for rec in rep.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    if args.figures:
        _sweep_figure(rep, args.figures)
    out = rep.to_json() | {"family": cfg.get("family", "canonical"), "output": out_path}
    out["invariant_points"] = sum(1 for r in rep.records if r.get("invariant"))
    out["iso_classes"] = len({r["iso_class"] for r in rep.records if "iso_class" in r})
    out["stabilized"] = all(r.get("stabilized", True) for r in rep.records)
    if not out_path:
        out["records"] = rep.records
    return out


def _points(args):
    if args.points:
        pts = _load_json(args.points) if args.points.lstrip().startswith("{") else json.loads(
            args.points if args.points.lstrip().startswith("[") else Path(args.points).read_text())
        return [{k: Fraction(str(v)) for k, v in p.items()} for p in pts]
    if len(args.param) != 1 or not args.values:
        raise ThemeError("give --points, or one --param with --values")
    return [{args.param[0]: Fraction(v)} for v in args.values.split(",")]


def _stratify(args):
    if not args.xi or len(args.xi) != 1:
        raise ThemeError("stratify needs exactly one --xi expression")
    phi = ParamXiText(args.xi[0], args.param, args.trunc or 32)
    points = _points(args)
    records, strata = rank_stratify(phi, points)
    out = {"convention": S_CONVENTION, "points": records, "strata": strata}
    if args.normal_form:
        out["normal_form"] = [_normal_form_at(phi, pt) for pt in points]
    if args.figures:
        _stratify_figure(records, strata, args.figures)
    return out


def _normal_form_at(phi, point):
    try:
        (rec,) = rank2_normal_form(phi, [point])
    except ThemeError as exc:
        return {"point": {k: _rat(v) for k, v in point.items()}, "error": exc.as_record()}
    return {k: (_rat(v) if isinstance(v, Fraction) else v) for k, v in rec.items()}


# -- figures ---------------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _sweep_figure(rep, directory):
    plt = _pyplot()
    os.makedirs(directory, exist_ok=True)
    varying = [n for n in rep.params if len(set(rep.grid[n])) > 1]
    recs = [r for r in rep.records if "invariant" in r]
    xs_name = varying[0] if varying else None
    ys_name = varying[1] if len(varying) > 1 else None
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for flag, marker, label in ((True, "o", "invariant"), (False, "x", "not invariant")):
        pts = [r for r in recs if r["invariant"] is flag]
        xs = [float(Fraction(r["point"][xs_name])) if xs_name else 0.0 for r in pts]
        ys = [float(Fraction(r["point"][ys_name])) if ys_name else 0.0 for r in pts]
        ax.scatter(xs, ys, marker=marker, label=label)
    ax.set_xlabel(xs_name or "")
    ax.set_ylabel(ys_name or "")
    ax.set_title(rep.locus.get("description", ""))
    ax.legend(loc="upper left", bbox_to_anchor=(1.02, 1.0))
    fig.tight_layout()
    path = os.path.join(directory, "sweep_invariance.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _stratify_figure(records, strata, directory):
    plt = _pyplot()
    os.makedirs(directory, exist_ok=True)
    index = {s["bernstein_element"]: i for i, s in enumerate(strata)}
    names = sorted(records[0]["point"]) if records else []
    fig, ax = plt.subplots(figsize=(5, 3))
    xs = [float(Fraction(r["point"][names[0]])) if names else i for i, r in enumerate(records)]
    ax.scatter(xs, [index.get(r.get("bernstein_element"), -1) for r in records])
    ax.set_yticks(range(len(strata)))
    ax.set_yticklabels([f"rank {s['rank']}: {s['bernstein_element']}" for s in strata], fontsize=7)
    ax.set_xlabel(names[0] if names else "point")
    fig.tight_layout()
    path = os.path.join(directory, "rank_strata.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


# -- driver ----------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="abtheme", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--pres", action="append", help="presentation JSON file or inline JSON")
    ap.add_argument("--word", action="append", help="standard word, e.g. '(a - 3 b) inv(1 + b) (a - 3 b)'")
    ap.add_argument("--xi", action="append", help="expansion, e.g. 's^(3/2)*log(s) + b*s^(1/2)'")
    ap.add_argument("--config", help="sweep configuration (JSON file or inline JSON)")
    ap.add_argument("--trunc", type=int, help="b-adic truncation order")
    ap.add_argument("--format", choices=("json", "table"), default="json")
    ap.add_argument("--delta", help="twist parameter for dualtwist")
    ap.add_argument("--param", action="append", default=[], help="parameter name used in --xi")
    ap.add_argument("--points", help="JSON list of parameter points (inline or file)")
    ap.add_argument("--values", help="comma separated values for a single --param")
    ap.add_argument("--normal-form", action="store_true", help="stratify: add the rank 2 normal form")
    ap.add_argument("--figures", help="sweep/stratify: write PNG figures into this directory")
    return ap


def run(argv):
    """Execute one request; returns (report, exit code)."""
    return execute(build_parser().parse_args(argv))


def execute(args):
    try:
        report = _dispatch(args)
    except ThemeError as exc:
        return {"error": exc.as_record()}, 1
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        return {"error": {"code": type(exc).__name__, "message": str(exc)}}, 1
    code = 2 if _undecided(report) else 0
    return report, code


def _undecided(report):
    if isinstance(report, dict):
        if report.get("stabilized") is False:
            return True
        return any(v is UNKNOWN or _undecided(v) for k, v in report.items() if k != "property_u")
    if isinstance(report, list):
        return any(_undecided(v) for v in report)
    return False


def _dispatch(args):
    cmd = args.command
    if args.trunc is not None and args.trunc < 1:
        raise ThemeError("--trunc must be positive")
    if cmd == "sweep":
        return _sweep(args)
    if cmd == "stratify":
        return _stratify(args)
    sources = _sources(args)
    want = 2 if cmd in TWO_INPUTS else 1
    if len(sources) != want:
        raise ThemeError(f"{cmd} takes exactly {want} input{'s' if want > 1 else ''}")
    if cmd == "analyze":
        return _analyze(args, sources[0])
    press, extra = [], {}
    for src in sources:
        p, e = _presentation(*src, args.trunc)
        press.append(p)
        extra.update(e)
    if args.trunc is not None and args.trunc < default_trunc(*press) - 8:
        raise ThemeError(f"--trunc below the minimum {default_trunc(*press) - 8} for these inputs")
    handler = {
        "canonical": _canonical, "bernstein": _bernstein, "invariant": _invariant,
        "enddim": _enddim, "iso": _iso, "ext": _ext, "dualtwist": _dualtwist, "embed": _embed,
    }[cmd]
    return extra | handler(args, *press)


def _table(report, indent=0):
    lines = []
    pad = " " * indent
    for k, v in report.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.extend(_table(v, indent + 2))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}:")
            for i, item in enumerate(v):
                lines.append(f"{pad}  [{i}]")
                lines.extend(_table(item, indent + 4))
        else:
            lines.append(f"{pad}{k:<22} {json.dumps(v) if not isinstance(v, str) else v}")
    return lines


def main(argv=None):
    args = build_parser().parse_args(argv)
    report, code = execute(args)
    if args.format == "table":
        print("\n".join(_table(report)))
    else:
        print(json.dumps(report, indent=2, ensure_ascii=False))
    return code


if __name__ == "__main__":
    sys.exit(main())
