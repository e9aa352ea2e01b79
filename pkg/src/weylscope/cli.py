"""
Command-line front end.

    weylscope weyl     --model M.json [--B B.json] --grid SPEC [--out F.csv]
    weylscope bound    --model M.json [--mu X] [--out F.json]
    weylscope enclose  --model M.json --B B.json --regions R.json [--out F.json] [--svg F.svg]
    weylscope spectrum --model M.json --B B.json --rect "a+bi,c+di" [--regions R.json]
    weylscope verify   [--model M.json] --suite symmetry,herglotz,...

Exit codes: 0 success, 2 usage/config error, 3 numerical budget exhausted,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import __version__
from .core import (
    BudgetExhausted,
    HypothesisError,
    OnCutError,
    SingularityError,
    WeylscopeError,
    analyze_boundary_operator,
)
from .enclosures import (
    closed_form_decay,
    default_xi,
    delta_log_regions,
    dist_enclosure,
    left_resolvent_free,
    parabola_enclosure,
    region_from_json,
    sample_model_decay,
    sector_enclosure,
    DecayEstimate,
)
from .formats import (
    SCHEMA_VERSION,
    FormatError,
    check_schema,
    dump_json,
    load_json,
    matrix_from_json,
    model_from_json,
    regions_svg,
    with_schema,
)
from .models import PointLattice, schur_bound_line
from .solver import find_eigenvalues, verify_containment
from .verify import SUITES, run_suites

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_VERIFY = 0, 2, 3, 4
COMMANDS = ("weyl", "bound", "enclose", "spectrum", "verify")
DEFAULT_VIEWPORT = (-10.0, 10.0, -10.0, 10.0)

log = logging.getLogger("weylscope")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model_path: Optional[str] = None
    b_path: Optional[str] = None
    grid: Optional[str] = None
    rect: Optional[str] = None
    regions_path: Optional[str] = None
    out: Optional[str] = None
    svg: Optional[str] = None
    tol: float = 1e-10
    seed: int = 0
    threads: int = 1
    suites: List[str] = field(default_factory=list)
    mu: Optional[float] = None
    entries: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.threads < 1:
            raise UsageError("--threads must be at least 1")


# --------------------------------------------------------------------------
# parsing helpers

_RANGE = re.compile(r"^\s*(?P<key>re|im|r|logr)\s*=\s*(?P<a>[^:]+):(?P<b>[^:]+):(?P<n>\d+)\s*$")


def _range(key, text):
    m = _RANGE.match(text)
    if not m or m["key"] != key:
        raise UsageError(f"bad grid component {text!r}; expected {key}=a:b:n")
    a, b, n = float(m["a"]), float(m["b"]), int(m["n"])
    if n < 1:
        raise UsageError("grid components need n >= 1")
    if key == "logr":
        if a <= 0 or b <= 0:
            raise UsageError("logr ranges need positive radii")
        return np.geomspace(a, b, n)
    return np.linspace(a, b, n)


def parse_grid(spec: Optional[str]) -> np.ndarray:
    """``re=a:b:n,im=c:d:m`` (Cartesian) or ``r=r0:r1:n@psi[;...]`` rays."""
    if not spec or not spec.strip():
        raise UsageError("empty grid")
    spec = spec.strip()
    if spec.startswith(("r=", "logr=")):
        pts = []
        for ray in spec.split(";"):
            if "@" not in ray:
                raise UsageError(f"ray {ray!r} needs '@psi'")
            rng, psi = ray.split("@", 1)
            key = rng.split("=", 1)[0].strip()
            pts.append(_range(key, rng) * np.exp(1j * float(psi)))
        return np.concatenate(pts)
    parts = spec.split(",")
    if len(parts) != 2:
        raise UsageError(f"bad grid {spec!r}")
    re_vals, im_vals = _range("re", parts[0]), _range("im", parts[1])
    return (re_vals[:, None] + 1j * im_vals[None, :]).ravel()


def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"bad complex number {text!r}") from None


def parse_rect(text: Optional[str]):
    if not text:
        raise UsageError("--rect is required")
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError("--rect needs two corners 'a+bi,c+di'")
    return tuple(parse_complex(p) for p in parts)


def _load_model(cfg):
    if not cfg.model_path:
        raise UsageError("--model is required")
    return model_from_json(load_json(cfg.model_path))


def _load_b(cfg, model, required=True):
    if not cfg.b_path:
        if required:
            raise UsageError("--B is required")
        return None
    bop = analyze_boundary_operator(matrix_from_json(load_json(cfg.b_path)))
    if bop.dim != model.boundary_dim:
        raise UsageError(f"B is {bop.dim}x{bop.dim} but the model boundary space has dimension {model.boundary_dim}")
    return bop


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()


def _fmt(x: float) -> str:
    return repr(float(x))


# --------------------------------------------------------------------------
# commands

def model_decay(model, mu=None) -> DecayEstimate:
    est = closed_form_decay(model, mu)
    if est is not None:
        return est
    if mu is None:
        mu = model.spectrum_bottom - 1.0
    return sample_model_decay(model, mu)


def cmd_weyl(cfg: RunConfig) -> int:
    model = _load_model(cfg)
    lams = parse_grid(cfg.grid)
    lattice = isinstance(model, PointLattice)
    entries = cfg.entries and model.has_matrix

    def row(lam):
        out = [_fmt(lam.real), _fmt(lam.imag)]
        try:
            sample = model.weyl(lam)
            out += [_fmt(sample.norm), "ok"]
        except OnCutError:
            out += ["", "cut"]
            sample = None
        except SingularityError:
            out += ["", "singular"]
            sample = None
        if lattice:
            out.append(_fmt(schur_bound_line(model.d, lam)) if sample is not None else "")
        if entries:
            m = sample.matrix if sample is not None else None
            for j in range(model.boundary_dim):
                for k in range(model.boundary_dim):
                    out += ([_fmt(m[j, k].real), _fmt(m[j, k].imag)] if m is not None else ["", ""])
        return out

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            rows = list(pool.map(row, lams))
    else:
        rows = [row(l) for l in lams]
    header = ["lambda_re", "lambda_im", "norm", "status"]
    if lattice:
        header.append("schur_bound")
    if entries:
        header += [f"m{j}_{k}_{part}" for j in range(model.boundary_dim)
                   for k in range(model.boundary_dim) for part in ("re", "im")]
    with _Output(cfg.out) as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return EXIT_OK


def cmd_bound(cfg: RunConfig) -> int:
    model = _load_model(cfg)
    est = model_decay(model, cfg.mu)
    with _Output(cfg.out) as fh:
        dump_json(with_schema(est.to_json()), fh)
    return EXIT_OK


def _load_region_requests(cfg):
    if not cfg.regions_path:
        return None, []
    obj = load_json(cfg.regions_path)
    if isinstance(obj, list):
        return None, obj
    check_schema(obj)
    extra = set(obj) - {"schema_version", "viewport", "regions"}
    if extra:
        raise FormatError(f"regions file: unknown keys {sorted(extra)}")
    vp = obj.get("viewport")
    if vp is not None and len(vp) != 4:
        raise FormatError("viewport must be [xmin, xmax, ymin, ymax]")
    return vp, obj.get("regions", [])


def _decay_from(item, model):
    d = item.get("decay")
    if d is None:
        return model_decay(model, item.get("mu"))
    return DecayEstimate(C=float(d["C"]), beta=float(d["beta"]), mu=float(d["mu"]),
                         source=d.get("source", "closed-form"))


def build_regions(items, model, bop):
    """Turn region requests into regions; hypothesis failures are collected, not raised."""
    regions, errors = [], []
    for i, item in enumerate(items):
        if "tag" in item:
            regions.append(region_from_json(item))
            continue
        kind = item.get("build")
        try:
            if kind == "sector":
                eta = float(item["eta"])
                regions.append(sector_enclosure(model.weyl_matrix(eta), eta, bop))
            elif kind == "parabola":
                d = _decay_from(item, model)
                xi = item.get("xi")
                if xi is None and bop.semibound_b > 0:
                    xi = default_xi(d, bop)
                regions.append(parabola_enclosure(d, bop, xi))
            elif kind == "left_resolvent_free":
                regions.append(left_resolvent_free(model, bop, _decay_from(item, model)))
            elif kind == "dist_disk":
                d = _decay_from(item, model)
                regions.append(dist_enclosure(d, bop.norm, item.get("mode", "dist-to-spectrum"),
                                              model.spectrum_bottom))
            elif kind == "log_regions":
                regions.extend(delta_log_regions(float(item["c1"]), float(item["c2"]), item["dim"]))
            else:
                raise FormatError(f"region {i}: unknown build {kind!r}")
        except FormatError:
            raise
        except KeyError as exc:
            raise FormatError(f"region {i}: missing parameter {exc}") from None
        except (HypothesisError, ValueError, WeylscopeError) as exc:
            errors.append({"region": i, "build": kind, "error": str(exc)})
    return regions, errors


def cmd_enclose(cfg: RunConfig) -> int:
    model = _load_model(cfg)
    bop = _load_b(cfg, model)
    viewport, items = _load_region_requests(cfg)
    if not items:
        raise UsageError("--regions with at least one region is required")
    regions, errors = build_regions(items, model, bop)
    out = with_schema({"regions": [r.to_json() for r in regions], "errors": errors,
                       "b": bop.semibound_b, "im_norm": bop.im_norm, "B_norm": bop.norm})
    with _Output(cfg.out) as fh:
        dump_json(out, fh)
    if cfg.svg:
        with open(cfg.svg, "w") as fh:
            fh.write(regions_svg(regions, viewport or DEFAULT_VIEWPORT))
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    model = _load_model(cfg)
    bop = _load_b(cfg, model)
    rect = parse_rect(cfg.rect)
    report = find_eigenvalues(model, bop, rect, tol=cfg.tol, threads=cfg.threads, seed=cfg.seed)
    _, items = _load_region_requests(cfg)
    passed = True
    errors = []
    if items:
        regions, errors = build_regions(items, model, bop)
        passed = verify_containment(report, regions).passed
    out = with_schema({**report.to_json(), "region_errors": errors, "containment_passed": passed})
    with _Output(cfg.out) as fh:
        dump_json(out, fh)
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_verify(cfg: RunConfig) -> int:
    if not cfg.suites:
        raise UsageError(f"--suite needs a comma-separated subset of {','.join(SUITES)}")
    unknown = [s for s in cfg.suites if s not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}")
    model = _load_model(cfg) if cfg.model_path else None
    results = run_suites(cfg.suites, seed=cfg.seed, model=model)
    ok = all(r.passed for r in results)
    with _Output(cfg.out) as fh:
        dump_json(with_schema({"seed": cfg.seed, "passed": ok, "suites": [r.to_json() for r in results]}), fh)
    return EXIT_OK if ok else EXIT_VERIFY


HANDLERS = {"weyl": cmd_weyl, "bound": cmd_bound, "enclose": cmd_enclose,
            "spectrum": cmd_spectrum, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", dest="model_path")
    common.add_argument("--B", dest="b_path")
    common.add_argument("--grid")
    common.add_argument("--rect")
    common.add_argument("--regions", dest="regions_path")
    common.add_argument("--out")
    common.add_argument("--svg")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--suite", default="")
    common.add_argument("--mu", type=float)
    common.add_argument("--entries", action="store_true", help="also emit matrix entries (weyl)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="weylscope", description="Weyl functions, enclosures and spectra")
    parser.add_argument("--version", action="version", version=f"weylscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _attach_values(argv):
    # "--rect -3-3i,3+3i" would otherwise be read as an option
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--rect", "--grid", "--mu"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_attach_values(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig(
            command=args.command, model_path=args.model_path, b_path=args.b_path, grid=args.grid,
            rect=args.rect, regions_path=args.regions_path, out=args.out, svg=args.svg, tol=args.tol,
            seed=args.seed, threads=args.threads,
            suites=[s.strip() for s in args.suite.split(",") if s.strip()],
            mu=args.mu, entries=args.entries,
        )
        return HANDLERS[cfg.command](cfg)
    except (UsageError, FormatError, OSError) as exc:
        print(f"weylscope: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExhausted as exc:
        print(f"weylscope: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (HypothesisError, ValueError, WeylscopeError) as exc:
        print(f"weylscope: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
