"""Command line entry point.

Every subcommand reads an optional JSON job file (--config) whose keys are
the long flag names with dashes replaced by underscores; flags given on
the command line win over the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

from . import __version__
from .arith import DEFAULT_PREC, MAX_PREC, NumberField, embed, parse_poly, parse_root, to_fraction
from .errors import NormApproxError, PrecisionExhausted
from .lattices import ModuleLattice, multiplier_ring, norm_spectrum
from .orbits import (
    ApproxWindow,
    accumulation_curves_cubic,
    accumulation_set_quadratic,
    annotate,
    enumerate_algebraic,
    oracle_scan,
    pair_set,
)
from .probes import dispersion_probe, linear_form_probe, monte_carlo
from .report import approximations_csv, approximations_json, dumps
from .svg import ellipse_samples, hyperbola_samples, render
from .units import assume_units, fundamental_units, kappa, sign_pattern

log = logging.getLogger("normapprox")

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3

DEFAULTS = {
    "poly": None,
    "root": "largest",
    "basis": None,
    "C": "1",
    "qmax": 1000,
    "prec": DEFAULT_PREC,
    "max_prec": MAX_PREC,
    "out": None,
    "format": None,
    "verify": False,
    "assume_units": None,
    "seed": 0,
    "level_max": 10,
    "cap": 8,
    "eta": None,
    "overlay": True,
    "extent": None,
    "input": None,
    "samples": 100,
    "Q": 1000,
    "alpha": None,
    "title": "",
}


class UsageError(Exception):
    pass


def _parse_elements(text) -> list | None:
    """Semicolon separated elements, each a comma separated coefficient list."""
    if text is None:
        return None
    if isinstance(text, list):
        return [[to_fraction(c) for c in (e if isinstance(e, list) else [e])] for e in text]
    out = []
    for part in str(text).split(";"):
        part = part.strip().strip("[]")
        if part:
            out.append([to_fraction(c) for c in part.split(",")])
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON job file")
    common.add_argument("--poly", help="minimal polynomial, coefficients low to high, e.g. -2,0,0,1")
    common.add_argument("--root", help="largest | smallest | positive | smallest-positive | lo:hi")
    common.add_argument("--basis", help="lattice basis as power-basis coordinates, e.g. '1;0,2'")
    common.add_argument("--C", help="bound on the normalized value (rational or decimal)")
    common.add_argument("--qmax", help="largest |q| considered, e.g. 100000 or 1e30")
    common.add_argument("--eta", help="exponent for the oracle scan (default 1/d)")
    common.add_argument("--prec", type=int, help="starting working precision in bits")
    common.add_argument("--max-prec", type=int, dest="max_prec", help="precision cap in bits")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=["json", "csv"],
                        help="output of approx and scan (default csv)")
    common.add_argument("--verify", action="store_true", default=None,
                        help="run the algebraic enumeration and the oracle and compare")
    common.add_argument("--assume-units", dest="assume_units",
                        help="trusted fundamental units, e.g. '1,1,1' or '-1,1,1;0,1,0'")
    common.add_argument("--seed", type=int, help="seed for probe sampling")
    common.add_argument("--level-max", type=int, dest="level_max", help="largest norm level")
    common.add_argument("--cap", type=int, help="coefficient cap for norm searches")
    common.add_argument("--no-overlay", dest="overlay", action="store_false", default=None)
    common.add_argument("--extent", help="half width of the plot window (default C)")
    common.add_argument("--input", help="approximation CSV to plot instead of computing")
    common.add_argument("--samples", type=int, help="number of random probe samples")
    common.add_argument("--Q", type=int, help="probe scale")
    common.add_argument("--alpha", help="probe a single vector, e.g. 0.5,0.25")
    common.add_argument("--title", help="plot title")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="normapprox",
                                 description="Normalized Diophantine approximation in number fields.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name, hlp in [
        ("field", "signature and embeddings of the field"),
        ("dual", "Gram matrix and dual basis of the lattice"),
        ("ring", "multiplier ring of the lattice"),
        ("units", "fundamental units of the multiplier ring"),
        ("approx", "normalized approximations by algebraic enumeration (CSV)"),
        ("scan", "normalized approximations by direct scan (CSV)"),
        ("curves", "accumulation points or curves (JSON)"),
        ("norms", "attained norm levels of the dual lattice (JSON)"),
        ("plot", "SVG of approximations with accumulation curves"),
        ("probe", "transference inequality probes (JSON)"),
    ]:
        sub.add_parser(name, parents=[common], help=hlp)
    return ap


def load_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(data)
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def make_lattice(cfg: dict) -> ModuleLattice:
    if cfg["poly"] is None:
        raise UsageError("--poly is required")
    try:
        coeffs = cfg["poly"] if isinstance(cfg["poly"], list) else parse_poly(str(cfg["poly"]))
        root = parse_root(cfg["root"])
        basis = _parse_elements(cfg["basis"])
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad field specification: {exc}")
    field = NumberField([int(c) for c in coeffs], root=root, max_prec=int(cfg["max_prec"]))
    return ModuleLattice(field, basis)


def make_units(lat: ModuleLattice, cfg: dict):
    ring = multiplier_ring(lat)
    if cfg["assume_units"]:
        return assume_units(ring, [lat.field(u) for u in _parse_elements(cfg["assume_units"])], lat)
    return fundamental_units(ring)


def _integer(value, name: str) -> int:
    """Exact integer from an int or a string such as '100000' or '1e30'."""
    if isinstance(value, int):
        return value
    try:
        x = Decimal(str(value))
    except InvalidOperation:
        raise UsageError(f"bad {name}: {value!r}")
    if not x.is_finite() or x != x.to_integral_value():
        raise UsageError(f"{name} must be an integer, got {value!r}")
    return int(x)


def _window(cfg: dict) -> ApproxWindow:
    try:
        C = to_fraction(cfg["C"])
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad --C: {exc}")
    if C < 0:
        raise UsageError("--C must be nonnegative")
    qmax = _integer(cfg["qmax"], "--qmax")
    if qmax < 1:
        raise UsageError("--qmax must be positive")
    eta = to_fraction(cfg["eta"]) if cfg["eta"] is not None else None
    return ApproxWindow(C, qmax, eta)


def _emit(text: str, cfg: dict) -> None:
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_field(cfg: dict) -> int:
    lat = make_lattice(cfg)
    f = lat.field
    emb = []
    for i in range(f.embedding_count):
        v = embed(f.gen, i, int(cfg["prec"]))
        if i < f.r_plus_1:
            emb.append({"real": v})
        else:
            emb.append({"real": v.real, "imag": v.imag})
    _emit(dumps({"coeffs": list(f.coeffs), "degree": f.degree,
                 "signature": list(f.signature), "root_interval": list(f.root_interval),
                 "embeddings": emb}), cfg)
    return EXIT_OK


def cmd_dual(cfg: dict) -> int:
    lat = make_lattice(cfg)
    g = lat.gram()
    dual = lat.dual()
    _emit(dumps({"basis": list(lat.basis), "gram": g.entries, "gram_det": g.det,
                 "dual_basis": list(dual.elements), "inverse_gram": dual.inverse_gram}), cfg)
    return EXIT_OK


def cmd_ring(cfg: dict) -> int:
    lat = make_lattice(cfg)
    ring = multiplier_ring(lat)
    _emit(dumps({"elements": list(ring.elements), "index": ring.index,
                 "lattice_coords": ring.lattice_coords,
                 "full_lattice": ring.is_full_lattice()}), cfg)
    return EXIT_OK


def cmd_units(cfg: dict) -> int:
    lat = make_lattice(cfg)
    group = make_units(lat, cfg)
    kb = kappa(group)
    note = ("certified by exhaustive log-space search up to the stated radius"
            if group.certified else "supplied units checked for norm and stability only")
    _emit(dumps({"units": list(group.units),
                 "ring_coords": [group.ring.coords(u) for u in group.units],
                 "logs": group.logs, "regulator": group.regulator, "kappa": kb.kappa,
                 "rho_hat": kb.rho_hat, "method": group.method, "certified": group.certified,
                 "search_radius": group.search_radius, "certification_cap": group.cert_cap,
                 "note": note, "sign_patterns": [list(sign_pattern(u)) for u in group.units]}), cfg)
    return EXIT_OK


def _annotated_csv(lat: ModuleLattice, rows: list, cfg: dict) -> str:
    min_norm = norm_spectrum(lat.dual().elements, 1, int(cfg["cap"])).min_norm if rows else None
    anns = [annotate(lat, a, min_norm) for a in rows]
    if cfg["format"] == "json":
        return approximations_json(rows, anns, lat.d)
    return approximations_csv(rows, anns, lat.d)


def _verify(lat: ModuleLattice, alg: list, window: ApproxWindow) -> bool:
    orc = oracle_scan(lat, window)
    a, o = pair_set(alg), pair_set(orc)
    if a != o:
        log.error("algebraic and oracle sets differ: %d only algebraic, %d only oracle",
                  len(a - o), len(o - a))
        for k in sorted(a ^ o)[:10]:
            log.error("  %s", k)
        return False
    log.info("verified %d pairs against the oracle", len(a))
    return True


def cmd_approx(cfg: dict) -> int:
    lat = make_lattice(cfg)
    window = _window(cfg)
    group = make_units(lat, cfg) if window.C > 0 else None
    res = enumerate_algebraic(lat, window, group, int(cfg["prec"]), details=True)
    if res.zero_q:
        log.info("skipped %d pairs with q = 0", res.zero_q)
    _emit(_annotated_csv(lat, res.approximations, cfg), cfg)
    if cfg["verify"] and not _verify(lat, res.approximations, window):
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_scan(cfg: dict) -> int:
    lat = make_lattice(cfg)
    window = _window(cfg)
    rows = oracle_scan(lat, window, int(cfg["prec"]))
    _emit(_annotated_csv(lat, rows, cfg), cfg)
    if cfg["verify"]:
        if window.eta is not None and window.eta != Fraction(1, lat.d):
            raise UsageError("--verify needs eta = 1/d")
        alg = enumerate_algebraic(lat, window, make_units(lat, cfg), int(cfg["prec"]))
        if pair_set(alg) != pair_set(rows):
            log.error("algebraic and oracle sets differ")
            return EXIT_MISMATCH
    return EXIT_OK


def _level_max(cfg: dict) -> int:
    n = int(cfg["level_max"])
    if n < 1:
        raise UsageError("--level-max must be at least 1")
    return n


def cmd_norms(cfg: dict) -> int:
    lat = make_lattice(cfg)
    n = _level_max(cfg)
    spec = norm_spectrum(lat.dual().elements, n, int(cfg["cap"]))
    levels = [{"level": k, "witness": w[0], "witness_count": len(w)}
              for k, w in spec.levels.items() if k <= n]
    _emit(dumps({"min_norm": spec.min_norm, "levels": levels, "missing": spec.missing,
                 "missing_note": f"not attained with coefficients up to {spec.cap}",
                 "inert_certificates": spec.certificates, "cap": spec.cap,
                 "norm_form": {",".join(map(str, k)): v for k, v in sorted(spec.form.items())},
                 "norm_form_scale": spec.scale}), cfg)
    return EXIT_OK


def cmd_curves(cfg: dict) -> int:
    lat = make_lattice(cfg)
    n = _level_max(cfg)
    if lat.d == 1:
        pts = accumulation_set_quadratic(lat, n, max(int(cfg["cap"]), 30))
        _emit(dumps({"kind": "points", "points": [
            {"level": p.level, "coeff": p.coeff, "sqrt": p.D, "symbolic": p.symbolic(),
             "value": p.value} for p in pts]}), cfg)
        return EXIT_OK
    fam = accumulation_curves_cubic(lat, n, int(cfg["cap"]))
    _emit(dumps({"kind": fam.kind, "m_alpha": fam.m_alpha, "min_norm": fam.min_norm,
                 "dilations": [{"level": d.level, "scale": d.scale,
                                "sign_classes": list(d.sign_classes),
                                "witnesses": d.witnesses} for d in fam.dilations],
                 "missing": fam.missing, "inert_certificates": fam.certificates}), cfg)
    return EXIT_OK


def _read_points_csv(path: str) -> list:
    import csv
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(float(r["v1"]), float(r["v2"])) for r in rows]


def overlay_curves(lat: ModuleLattice, n: int, cap: int, group=None) -> list:
    """Sampled accumulation curves for the plot overlay."""
    fam = accumulation_curves_cubic(lat, n, cap)
    curves = []
    both = True
    if fam.kind == "hyperbola-pair":
        # with every unit of positive sigma_1 sigma_2 an orbit stays on its witness class
        units = group.units if group is not None else ()
        both = any(sign_pattern(u)[1] * sign_pattern(u)[2] < 0 for u in units)
    for dil in fam.dilations:
        if fam.kind == "ellipse":
            curves += ellipse_samples(fam.m_alpha, dil.scale)
            continue
        classes = ("minus", "plus") if both else dil.sign_classes
        for cls in classes:
            curves += hyperbola_samples(fam.m_alpha, dil.scale, 1 if cls == "plus" else -1)
    return curves


def cmd_plot(cfg: dict) -> int:
    lat = make_lattice(cfg)
    if lat.d != 2:
        raise UsageError("plot needs a cubic field (d = 2)")
    window = _window(cfg)
    group = None
    if cfg["input"]:
        pts = _read_points_csv(cfg["input"])
    else:
        group = make_units(lat, cfg) if window.C > 0 else None
        pts = [a.value for a in enumerate_algebraic(lat, window, group, int(cfg["prec"]))]
    extent = float(to_fraction(cfg["extent"])) if cfg["extent"] else float(window.C) or 1.0
    curves = []
    if cfg["overlay"]:
        if group is None and lat.field.is_totally_real:
            group = make_units(lat, cfg)
        curves = overlay_curves(lat, _level_max(cfg), int(cfg["cap"]), group)
    _emit(render(pts, extent, curves, cfg["title"] or ""), cfg)
    return EXIT_OK


def cmd_probe(cfg: dict) -> int:
    Q = int(cfg["Q"])
    if Q < 1:
        raise UsageError("--Q must be positive")
    if cfg["alpha"]:
        alpha = [to_fraction(x) if "/" in x else float(x) for x in str(cfg["alpha"]).split(",")]
        dr = dispersion_probe(alpha, Q)
        lr = linear_form_probe(alpha, Q)
        _emit(dumps({"dispersion": dr.__dict__, "linear_form": lr.__dict__}), cfg)
        return EXIT_OK
    out = {}
    for d in (1, 2):
        out[f"d{d}"] = monte_carlo(d, Q, int(cfg["samples"]), int(cfg["seed"])).__dict__
    _emit(dumps(out), cfg)
    bad = sum(v["dispersion_violations"] + v["linear_form_violations"] for v in out.values())
    return EXIT_MISMATCH if bad else EXIT_OK


COMMANDS = {
    "field": cmd_field, "dual": cmd_dual, "ring": cmd_ring, "units": cmd_units,
    "approx": cmd_approx, "scan": cmd_scan, "curves": cmd_curves, "norms": cmd_norms,
    "plot": cmd_plot, "probe": cmd_probe,
}


VALUE_FLAGS = ("--poly", "--basis", "--assume-units", "--alpha", "--root", "--C", "--extent")


def _glue_negative_values(argv: list) -> list:
    """Let `--poly -1,-1,1` through: argparse would read the value as an option."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and len(argv[i + 1]) > 1 and (argv[i + 1][1].isdigit() or argv[i + 1][1] == "."):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = ap.parse_args(_glue_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args)
        return COMMANDS[args.cmd](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrecisionExhausted as exc:
        where = f" (q = {exc.q})" if exc.q is not None else ""
        print(f"error: precision exhausted{where}: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (NormApproxError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
