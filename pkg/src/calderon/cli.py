"""Command-line front end.

Single binary with subcommands; every numerical tolerance is a flag so
experiment runs reproduce from a clean checkout.  Reports are canonical
JSON (sorted keys) or CSV; identical inputs produce byte-identical
output files (timings are kept out unless requested).

Exit codes: 0 all requested checks passed, 1 a check failed, 2 bad
usage or unparsable input, 3 a numerical precondition failed.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .acceptance import run_acceptance
from .bench import run_bench
from .errors import CalderonError, ParseError, SpecError
from .grassmann import assemble_point, compare_points, fredholm_index, schatten_fit
from .projector import calderon_projector, cauchy_frame_oracle, orthogonal_projector, sobolev_weights
from .symbols import GALLERY_NAMES, build_gallery, check_ellipticity, dump_spec, mode_symbol, read_spec

_GALLERY_TEXT = """\
available model operators (calderon write-spec NAME -p key=value ...):

  dbar            mu            scalar d_n + i d_tau + mu; its truncated point is
                                the Hardy half (nontrivial modes m <= 0 at mu=0.5);
                                integer mu produces a defect mode
  twisted_dbar    mu, d         dbar with zeroth-order term mu + d; moves the
                                stability threshold by d: the index test family
  laplace_mass    mu            -d_n^2 - d_tau^2 + mu; closed-form projector
                                ((1/2, -1/2s), (-s/2, 1/2)), s = sqrt(m^2 + mu),
                                and the block-order staircase q - j
  dirac2          mu, v         planar Dirac with mass mu and scalar shift v;
                                chiral L/R marking; pairs with different v are
                                Hilbert-Schmidt close (tail slope -1)
  dirac3          mu, v         Dirac over the 2-torus boundary; pairs decay with
                                tail slope -1/2
  custom          n, r, k, ...  raw coefficient table via the document format
"""


@dataclass
class ExperimentConfig:
    """Echoable description of one CLI invocation."""

    subcommand: str
    spec: str | None = None
    spec_a: str | None = None
    spec_b: str | None = None
    cutoff: int = 16
    alpha: float = 0.5
    tol: float = 1e-6
    p_list: tuple = (1.0, 2.0)
    out: str | None = None
    fmt: str = "json"
    mode: tuple | None = None
    side: str = "plus"
    kind: str = "R"
    samples: int = 64
    q: int | None = None
    include_timing: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cutoff < 4:
            raise SpecError("cutoff must be at least 4")
        if self.alpha <= 0:
            raise SpecError("alpha must be positive")

    def echo(self):
        out = {
            "subcommand": self.subcommand,
            "cutoff": self.cutoff,
            "alpha": self.alpha,
            "tol": self.tol,
            "p": list(self.p_list),
            "format": self.fmt,
        }
        for key in ("spec", "spec_a", "spec_b", "mode", "side", "kind", "q"):
            val = getattr(self, key)
            if val is not None:
                out[key] = list(val) if isinstance(val, tuple) else val
        return out


@dataclass
class ReportBundle:
    config: dict
    timings: dict
    reports: dict
    version: str
    ok: bool


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if np.isnan(f) else f
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _load(path):
    return read_spec(path)


def _mode_tuple(text, n):
    parts = [int(x) for x in str(text).split(",")]
    if len(parts) != n - 1:
        raise SpecError(f"mode needs {n - 1} integer component(s), got {text!r}")
    return tuple(parts)


# ---------------------------------------------------------------------------
# pipelines


def _run_ellipticity(cfg, reports, timings):
    spec = _load(cfg.spec)
    t0 = time.time()
    rep = check_ellipticity(spec, samples=cfg.samples)
    timings["ellipticity"] = time.time() - t0
    reports["ellipticity"] = {
        "spec": spec.name,
        "samples": rep.samples,
        "min_abs_det": rep.min_abs_det,
        "passed": rep.passed,
        "defect_modes": rep.defect_modes,
    }
    return rep.passed


def _run_projector(cfg, reports, timings):
    spec = _load(cfg.spec)
    mode = cfg.mode if cfg.mode is not None else (0,) * (spec.n - 1)
    t0 = time.time()
    sym = mode_symbol(spec, mode)
    if cfg.kind == "R":
        proj = calderon_projector(sym, cfg.side)
    else:
        frame = cauchy_frame_oracle(sym, cfg.side)
        weight = sobolev_weights(mode, spec.k, cfg.alpha)
        proj = orthogonal_projector(frame, weight)
    timings["projector"] = time.time() - t0
    reports["projector"] = {
        "m": mode[0] if spec.n == 2 else list(mode),
        "kind": proj.kind,
        "alpha": cfg.alpha,
        "re": proj.matrix.real.tolist(),
        "im": proj.matrix.imag.tolist(),
    }
    return True


def _compare_payload(rep):
    return {
        "cutoff": rep.cutoff,
        "alpha": rep.alpha,
        "agreement": rep.agreement,
        "modes": rep.modes,
        "dims_a": rep.dims_a,
        "dims_b": rep.dims_b,
        "angles": [a for a in rep.angles],
        "diff_norms": rep.diff_norms,
        "svals": rep.svals,
        "q_svals": rep.q_svals,
        "skipped": [list(np.atleast_1d(s)) for s in rep.skipped],
    }


def _run_compare(cfg, reports, timings):
    sa, sb = _load(cfg.spec_a), _load(cfg.spec_b)
    t0 = time.time()
    pa = assemble_point(sa, cfg.cutoff, alpha=cfg.alpha)
    pb = assemble_point(sb, cfg.cutoff, alpha=cfg.alpha)
    rep = compare_points(pa, pb)
    timings["compare"] = time.time() - t0
    reports["compare"] = _compare_payload(rep)
    return True


def _run_schatten(cfg, reports, timings):
    sa, sb = _load(cfg.spec_a), _load(cfg.spec_b)
    t0 = time.time()
    pa = assemble_point(sa, cfg.cutoff, alpha=cfg.alpha)
    pb = assemble_point(sb, cfg.cutoff, alpha=cfg.alpha)
    rep = compare_points(pa, pb)
    from .symbols import agree_up_to_order

    q = cfg.q
    if q is None:
        agreement = agree_up_to_order(sa, sb)
        q = sa.k if agreement == "full" else agreement
        if q is None:
            raise SpecError("principal symbols differ; pass --q explicitly")
    fit = schatten_fit(rep, n=sa.n, q=q, p_list=cfg.p_list)
    timings["schatten"] = time.time() - t0
    reports["schatten"] = {
        "q": q,
        "n": sa.n,
        "count": fit.count,
        "finite_rank": fit.finite_rank,
        "slope": "FINITE_RANK" if fit.finite_rank is not None else fit.slope,
        "slope_halfwidth": fit.slope_halfwidth,
        "window": None if fit.window is None else list(fit.window),
        "target_exponent": fit.target_exponent,
        "bound_constant": fit.bound_constant,
        "bound_holds": fit.bound_holds,
        "sums": {str(p): v for p, v in fit.sums.items()},
        "tail_increase": {str(p): v for p, v in fit.tail_increase.items()},
        "svals": fit.svals,
    }
    return True


def _run_index(cfg, reports, timings):
    sa, sb = _load(cfg.spec_a), _load(cfg.spec_b)
    t0 = time.time()
    pa = assemble_point(sa, cfg.cutoff, alpha=cfg.alpha)
    pb = assemble_point(sb, cfg.cutoff, alpha=cfg.alpha)
    rep = fredholm_index(pa, pb, tol=cfg.tol)
    timings["index"] = time.time() - t0
    nonzero = [
        {"m": _jsonable(m[0] if sa.n == 2 else list(m)), "ker": int(k), "coker": int(c)}
        for m, k, c in zip(rep.modes, rep.kernel_dims, rep.cokernel_dims)
        if k or c
    ]
    reports["index"] = {
        "index": rep.index,
        "kernel_total": rep.kernel_total,
        "cokernel_total": rep.cokernel_total,
        "tail_safe": rep.tail_safe,
        "min_tail_gap": rep.min_tail_gap,
        "tol": rep.tol,
        "nonzero_modes": nonzero,
    }
    return rep.tail_safe


def _run_acceptance(cfg, reports, timings):
    t0 = time.time()
    results = run_acceptance(echo=print)
    timings["acceptance"] = time.time() - t0
    table = [
        {"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail}
        for r in results
    ]
    reports["acceptance"] = {"criteria": table, "passed": all(r.passed for r in results)}
    for r in results:
        if "growth_slopes" in r.data:
            reports["growth_fit"] = {"slopes": r.data["growth_slopes"]}
    timings.update({f"criterion_{r.number}": r.elapsed for r in results})
    return all(r.passed for r in results)


def run(config):
    """Execute one configured pipeline; returns a ReportBundle."""
    reports, timings = {}, {}
    runner = {
        "ellipticity": _run_ellipticity,
        "projector": _run_projector,
        "compare": _run_compare,
        "schatten": _run_schatten,
        "index": _run_index,
        "acceptance": _run_acceptance,
    }[config.subcommand]
    ok = runner(config, reports, timings)
    return ReportBundle(
        config=config.echo(),
        timings=timings,
        reports=reports,
        version=f"calderon {__version__}",
        ok=bool(ok),
    )


# ---------------------------------------------------------------------------
# serialization of bundles


def bundle_json(bundle, include_timing=False):
    payload = {
        "config": bundle.config,
        "reports": bundle.reports,
        "version": bundle.version,
        "ok": bundle.ok,
    }
    if include_timing:
        payload["timings"] = bundle.timings
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def emit_csv(bundle, fh):
    """CSV view of a bundle: singular values or growth exponents.

    Schatten/compare bundles yield ``j,s_j,bound`` rows (zero values
    omitted); growth-fit tables yield ``q,jj,slope`` rows with NONE for
    degenerate blocks.
    """
    if "growth_fit" in bundle.reports:
        slopes = bundle.reports["growth_fit"]["slopes"]
        fh.write("q,jj,slope\n")
        for qi, row in enumerate(np.asarray(slopes, dtype=float)):
            for ji, val in enumerate(row):
                text = "NONE" if np.isnan(val) else repr(float(val))
                fh.write(f"{qi},{ji},{text}\n")
        return
    rep = bundle.reports.get("schatten") or bundle.reports.get("compare")
    if rep is None or "svals" not in rep:
        raise SpecError("bundle has no singular values or exponent table to emit")
    svals = np.asarray(rep["svals"], dtype=float)
    target = rep.get("target_exponent")
    const = rep.get("bound_constant")
    fh.write("j,s_j,bound\n")
    for j, s in enumerate(svals, start=1):
        if s <= 0.0:
            continue
        bound = "" if (target is None or const is None) else repr(float(const * j**target))
        fh.write(f"{j},{float(s)!r},{bound}\n")


def _write_bundle(bundle, cfg):
    text_out = sys.stdout
    if cfg.fmt == "csv":
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
                emit_csv(bundle, fh)
        else:
            emit_csv(bundle, text_out)
    else:
        text = bundle_json(bundle, include_timing=cfg.include_timing)
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            text_out.write(text)


def list_gallery():
    """Deterministic text listing of the model-operator gallery."""
    return _GALLERY_TEXT


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="calderon",
        description="Cauchy-data spaces, projectors and Grassmannian comparison "
        "on flat model geometries",
    )
    ap.add_argument("--version", action="version", version=f"calderon {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p, pair=False, single=False):
        if single:
            p.add_argument("--spec", required=True, help="operator document path")
        if pair:
            p.add_argument("--spec-a", required=True)
            p.add_argument("--spec-b", required=True)
        p.add_argument("--cutoff", type=int, default=16)
        p.add_argument("--alpha", type=float, default=0.5)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--p", default="1,2", help="comma-separated Schatten orders")
        p.add_argument("--out", default=None)
        p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
        p.add_argument("--timing", action="store_true", help="include timings in reports")

    p = sub.add_parser("list-gallery", help="print the model-operator gallery")

    p = sub.add_parser("write-spec", help="write a gallery operator document")
    p.add_argument("name", choices=[g for g in GALLERY_NAMES if g != "custom"])
    p.add_argument("-p", "--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", default=None)

    p = sub.add_parser("ellipticity", help="cosphere determinant scan and defect modes")
    common(p, single=True)
    p.add_argument("--samples", type=int, default=64)

    p = sub.add_parser("projector", help="dump one per-mode projector matrix")
    common(p, single=True)
    p.add_argument("--mode", default="0", help="tangential frequency (comma-separated for T^2)")
    p.add_argument("--side", choices=("plus", "minus"), default="plus")
    p.add_argument("--kind", choices=("R", "P"), default="R")

    p = sub.add_parser("compare", help="principal-angle comparison of two points")
    common(p, pair=True)

    p = sub.add_parser("schatten", help="tail decay fit of a comparison")
    common(p, pair=True)
    p.add_argument("--q", type=int, default=None, help="agreement order (default: computed)")

    p = sub.add_parser("index", help="Fredholm index of the cross restriction")
    common(p, pair=True)

    p = sub.add_parser("acceptance", help="run the acceptance suite")
    common(p)

    p = sub.add_parser("bench", help="compare the numba and numpy kernel lanes")
    p.add_argument("--modes", type=int, default=4096)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--repeat", type=int, default=3)
    return ap


def _config_from_args(args):
    kwargs = dict(
        subcommand=args.subcommand,
        out=getattr(args, "out", None),
        fmt=getattr(args, "fmt", "json"),
        cutoff=getattr(args, "cutoff", 16),
        alpha=getattr(args, "alpha", 0.5),
        tol=getattr(args, "tol", 1e-6),
        include_timing=getattr(args, "timing", False),
        samples=getattr(args, "samples", 64),
        side=getattr(args, "side", "plus"),
        kind=getattr(args, "kind", "R"),
        q=getattr(args, "q", None),
        spec=getattr(args, "spec", None),
        spec_a=getattr(args, "spec_a", None),
        spec_b=getattr(args, "spec_b", None),
    )
    ptext = getattr(args, "p", "1,2")
    try:
        kwargs["p_list"] = tuple(float(x) for x in str(ptext).split(",") if x)
    except ValueError as exc:
        raise SpecError(f"bad --p list {ptext!r}: {exc}") from exc
    cfg = ExperimentConfig(**kwargs)
    if args.subcommand == "projector":
        spec = _load(cfg.spec)
        cfg.mode = _mode_tuple(args.mode, spec.n)
    return cfg


def main(argv=None):
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        if args.subcommand == "list-gallery":
            sys.stdout.write(list_gallery())
            return 0
        if args.subcommand == "write-spec":
            params = {}
            for item in args.param:
                key, _, val = item.partition("=")
                if not _:
                    raise SpecError(f"parameter {item!r} is not KEY=VALUE")
                params[key] = float(val)
            text = dump_spec(build_gallery(args.name, **params))
            if args.out:
                with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0
        if args.subcommand == "bench":
            run_bench(n_modes=args.modes, dim=args.dim, repeat=args.repeat)
            return 0

        cfg = _config_from_args(args)
        bundle = run(cfg)
        _write_bundle(bundle, cfg)
        return 0 if bundle.ok else 1
    except (ParseError, SpecError) as exc:
        _error_record(exc)
        return 2
    except CalderonError as exc:
        _error_record(exc)
        return 3


def _error_record(exc):
    record = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
