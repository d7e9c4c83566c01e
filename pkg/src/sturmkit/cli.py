"""``sturmctl``: command line front end.

Configuration comes from flags plus an optional JSON file (``--config``);
flags win.  Errors map onto exit codes: 2 configuration, 3 precision,
4 resources, 1 failed acceptance criteria (``verify-all`` only).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib.metadata import PackageNotFoundError, version as _dist_version

from . import acceptance
from ._backend import BACKEND
from .cf import DEFAULT_DEPTH, DEFAULT_PRECISION_BITS, ContinuedFraction, expand, parse_coefficients
from .errors import ConfigError, SturmError
from .partitions import coarsest_level, standard_partition, two_block_decomposition
from .spectral import (approximate_spectrum, certified_bound, growth_fit, lyapunov_along_phase,
                       lyapunov_estimate, spectrum_proxy)
from .transfer import sn_products, word_product
from .words import RotationParams, Word, build_sn, c_prefix, rotation_word, to_rational

try:
    __version__ = _dist_version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

ROW_COLUMNS = ["lambda", "E_re", "E_im", "theta", "n", "len", "lognorm", "norm_rate",
               "f_upper", "inf_f", "band_id", "error_bound"]

SCHEMA = {
    "version": __version__,
    "rows": {
        "columns": ROW_COLUMNS,
        "notes": "one record per (E, theta, level) sample; n is empty for phase samples "
                 "and len is then the prefix length N; error_bound is the first-order "
                 "relative rounding bound of the matrix product behind lognorm",
        "csv": "first line is '# ' followed by the JSON run header, then a header row",
        "jsonl": "first record is {\"header\": {...}}, then one object per row",
    },
    "word": {"ascii": "letters 0/1, newline terminated",
             "packed": "magic 'STRW', format byte 1, uint64 little-endian length, "
                       "then letters packed 8 per byte, most significant bit first"},
    "partition": {"level": "n", "a": "leading fragment", "b": "trailing fragment",
                  "blocks": [{"tag": "S_CUR (s_n) or S_PREV (s_(n-1))",
                              "start": "offset in the word", "end": "offset, exclusive"}]},
    "transfer": {"matrix": "[[re, im] x 4] of the unit-scale matrix, row major",
                 "logScale": "the product equals exp(logScale) * matrix",
                 "length": "word length", "errorBound": "first-order relative rounding bound"},
    "spectrum": {"lambda": "coupling", "level": "n", "resolution": "bisection tolerance",
                 "window": "[lo, hi]", "bands": "[[lo, hi], ...] sorted, disjoint"},
    "verify-all": {"header": "configuration and seed", "criteria": "number, name, passed, "
                   "detail, metrics", "passed": "all criteria passed"},
    "exit_codes": {"0": "success", "1": "acceptance failure (verify-all)", "2": "configuration",
                   "3": "precision", "4": "resource or depth limit"},
}


# -- parsing helpers ------------------------------------------------------------

def parse_energy(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    try:
        return complex(str(text).strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(f"cannot read energy {text!r}") from None


def _split_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    return [v for v in str(value).split(",") if v.strip()]


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = str(text).split(":")
        return int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"range must look like m:M, got {text!r}") from None


def _parse_window(text) -> tuple[float, float] | None:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return float(text[0]), float(text[1])
    try:
        lo, hi = str(text).split(":")
        return float(lo), float(hi)
    except ValueError:
        raise ConfigError(f"window must look like lo:hi, got {text!r}") from None


def resolve_cf(args, required: bool = True) -> ContinuedFraction | None:
    given = [k for k in ("alpha_cf", "alpha_value", "preset") if getattr(args, k, None) is not None]
    if len(given) > 1:
        raise ConfigError("give exactly one of --alpha-cf, --alpha-value, --preset")
    if not given:
        if required:
            raise ConfigError("no rotation number: use --alpha-cf, --alpha-value or --preset")
        return None
    depth = args.cf_depth
    if args.preset is not None:
        return ContinuedFraction.preset(args.preset, depth or DEFAULT_DEPTH)
    if args.alpha_cf is not None:
        return parse_coefficients(str(args.alpha_cf), depth)
    return expand(str(args.alpha_value), depth or DEFAULT_DEPTH, args.precision_bits)


def _energies(args) -> list[complex]:
    out = [parse_energy(e) for e in _split_list(args.energy)]
    if getattr(args, "energy_grid", None):
        parts = str(args.energy_grid).split(":")
        if len(parts) != 3:
            raise ConfigError("energy grid must look like lo:hi:count")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ConfigError("energy grid needs count >= 1")
        out += [complex(lo + (hi - lo) * i / max(count - 1, 1)) for i in range(count)]
    if getattr(args, "band_midpoints", None):
        try:
            with open(args.band_midpoints) as fh:
                doc = json.load(fh)
            bands = [tuple(b) for b in doc["bands"]]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read bands from {args.band_midpoints}: {exc}") from None
        if args.widest:
            bands = sorted(bands, key=lambda b: (-(b[1] - b[0]), b[0]))[:args.widest]
        out += [complex(0.5 * (lo + hi)) for lo, hi in bands]
    if not out:
        raise ConfigError("no energies: use --energy, --energy-grid or --band-midpoints")
    return out


def _load_word(args) -> Word:
    if getattr(args, "word", None) is not None and getattr(args, "word_file", None) is not None:
        raise ConfigError("give only one of --word and --word-file")
    if getattr(args, "word", None) is not None:
        return Word(str(args.word))
    if getattr(args, "word_file", None) is not None:
        try:
            with open(args.word_file, "rb") as fh:
                return Word.load(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read {args.word_file}: {exc}") from None
    raise ConfigError("no word: use --word or --word-file")


def _header(args, cf, **extra) -> dict:
    h = {"tool": "sturmctl", "version": __version__, "command": args.command,
         "seed": args.seed, "alpha": str(cf) if cf else None,
         "alpha_source": cf.source if cf else None,
         "lambda": getattr(args, "lam", None)}
    h.update(extra)
    return h


# -- output ---------------------------------------------------------------------

class Output:
    """Collects text or bytes and writes once, to ``--out`` or stdout."""

    def __init__(self, path):
        self.path = path

    def text(self, s: str):
        if self.path:
            with open(self.path, "w", newline="") as fh:
                fh.write(s)
        else:
            sys.stdout.write(s)

    def binary(self, b: bytes):
        if self.path:
            with open(self.path, "wb") as fh:
                fh.write(b)
        else:
            sys.stdout.buffer.write(b)
            sys.stdout.flush()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def emit_rows(rows: list[dict], header: dict, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in ROW_COLUMNS])
        return buf.getvalue()
    lines = [json.dumps({"header": header}, sort_keys=True)]
    lines += [json.dumps({c: r.get(c) for c in ROW_COLUMNS}) for r in rows]
    return "\n".join(lines) + "\n"


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- subcommands -----------------------------------------------------------------

def cmd_word(args) -> int:
    cf = resolve_cf(args)
    modes = [m for m in ("sn", "prefix") if getattr(args, m) is not None] + \
        (["rotation"] if args.rotation else [])
    if len(modes) != 1:
        raise ConfigError("choose exactly one of --sn, --prefix, --rotation")
    if args.sn is not None:
        w = build_sn(cf, args.sn)
    elif args.prefix is not None:
        w = c_prefix(cf, args.prefix)
    else:
        m, M = _parse_range(args.range or "1:100")
        w = rotation_word(RotationParams(cf, to_rational(str(args.theta or "0")), args.lam), m, M)
    out = Output(args.out)
    if args.format == "packed":
        out.binary(w.to_packed())
    elif args.format == "ascii":
        out.text(str(w) + "\n")
    else:
        raise ConfigError(f"word output format must be ascii or packed, got {args.format!r}")
    return 0


def cmd_partition(args) -> int:
    cf = resolve_cf(args)
    w = _load_word(args)
    top = coarsest_level(w, cf)
    levels = [args.level] if args.level is not None else list(range(0, top + 1))
    doc = {"word_length": len(w), "coarsest_level": top,
           "partitions": [standard_partition(w, cf, n).to_json(cf) for n in levels]}
    tb = two_block_decomposition(w, cf)
    doc["two_block"] = {"t": tb.t, "x": str(tb.x), "y": str(tb.y)}
    if args.level is not None:
        doc = {**doc["partitions"][0], "coarsest_level": top, "two_block": doc["two_block"]}
    Output(args.out).text(_json(doc))
    return 0


def cmd_transfer(args) -> int:
    E = parse_energy(args.energy if args.energy is not None else 0)
    if args.sn is not None:
        w = build_sn(resolve_cf(args), args.sn)
    else:
        w = _load_word(args)
    p = word_product(args.lam, E, w)
    doc = p.to_json()
    doc.update(logNorm=p.log_norm(), detError=p.det_error(), backend=BACKEND,
               lambda_=args.lam, energy=[E.real, E.imag])
    doc["lambda"] = doc.pop("lambda_")
    Output(args.out).text(_json(doc))
    return 0


def cmd_spectrum(args) -> int:
    cf = resolve_cf(args)
    kw = dict(window=_parse_window(args.window), tol=args.tol, grid=args.grid)
    fn = spectrum_proxy if args.proxy else approximate_spectrum
    sp = fn(args.lam, cf, args.level, **kw)
    if args.format == "csv":
        buf = io.StringIO()
        buf.write("# " + json.dumps(_header(args, cf, level=args.level, proxy=args.proxy,
                                            resolution=sp.resolution), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["band_id", "lo", "hi", "width"])
        for i, (lo, hi) in enumerate(sp.bands):
            w.writerow([i, repr(lo), repr(hi), repr(hi - lo)])
        text = buf.getvalue()
    else:
        doc = sp.to_json()
        doc.update(proxy=args.proxy, total_width=sp.total_width, header=_header(args, cf))
        text = _json(doc)
    Output(args.out).text(text)
    return 0


def _max_level(cf, args) -> int:
    if args.max_level is not None:
        return args.max_level
    from .cf import word_length
    n = 1
    while n + 1 <= cf.depth and word_length(cf, n + 1) <= args.max_length:
        n += 1
    return n


def _lyapunov_rows(args, cf, E, band_id, top):
    est = lyapunov_estimate(args.lam, E, cf, top, tol=args.tol)
    bounds = [p.error_bound for p in sn_products(args.lam, E, cf, top)]
    rows = []
    for row in est.rows(theta=0.0):
        row["band_id"] = band_id
        row["error_bound"] = bounds[row["n"] + 1]
        rows.append(row)
    for th in _split_list(args.theta):
        theta = to_rational(str(th))
        lengths = [int(x) for x in _split_list(args.lengths)] or [10**4]
        for N, rate in lyapunov_along_phase(args.lam, E, RotationParams(cf, theta, args.lam), lengths):
            rows.append({"lambda": args.lam, "E_re": E.real, "E_im": E.imag,
                         "theta": float(theta), "n": None, "len": N, "lognorm": rate * N,
                         "norm_rate": rate, "band_id": band_id,
                         "error_bound": 8 * 2.0 ** -53 * N})
    return est, rows


def cmd_lyapunov(args) -> int:
    cf = resolve_cf(args)
    energies = _energies(args)
    top = _max_level(cf, args)
    band_ids = list(range(len(energies))) if args.band_midpoints else [None] * len(energies)
    tasks = list(zip(energies, band_ids))
    with ThreadPoolExecutor(max(1, args.jobs)) as ex:
        results = list(ex.map(lambda t: _lyapunov_rows(args, cf, t[0], t[1], top), tasks))
    rows = []
    summary = []
    for (E, _), (est, r) in sorted(zip(tasks, results), key=lambda x: (x[0][0].real, x[0][0].imag)):
        rows += r
        summary.append({"E": [E.real, E.imag], "gamma": est.gamma, "converged": est.converged,
                        "gap": est.f_upper[-1] - est.inf_f[-1], "warnings": est.warnings})
    header = _header(args, cf, max_level=top, tol=args.tol, summary=summary)
    Output(args.out).text(emit_rows(rows, header, args.format))
    return 0


def _fit(args, cf, energies, max_len):
    return growth_fit(args.lam, cf, energies, max_len, sample_count=args.samples,
                      seed=args.seed, n_lengths=args.n_lengths, jobs=args.jobs)


def _fit_summary(fit) -> dict:
    return {"log_C": fit.log_C, "mu": fit.mu, "max_violation": fit.max_violation,
            "prefix_log_C": fit.prefix_log_C, "prefix_mu": fit.prefix_mu, "log_F": fit.log_F,
            "empirical_log_C": fit.empirical_log_C, "empirical_mu": fit.empirical_mu,
            "mu_per_energy": fit.mu_per_energy, "max_len": fit.max_len,
            "sample_size": int(fit.lengths.size), "warnings": fit.warnings}


def cmd_growth(args) -> int:
    cf = resolve_cf(args)
    energies = _energies(args)
    fit = _fit(args, cf, energies, args.max_len)
    header = _header(args, cf, energies=[[E.real, E.imag] for E in energies],
                     sample_count=args.samples, fit=_fit_summary(fit))
    if args.format in ("csv", "jsonl"):
        rows = []
        for N, L, i in zip(fit.lengths.tolist(), fit.log_norms.tolist(), fit.energy_index.tolist()):
            E = energies[i]
            rows.append({"lambda": args.lam, "E_re": E.real, "E_im": E.imag, "theta": None,
                         "n": None, "len": N, "lognorm": L, "norm_rate": L / N,
                         "band_id": i, "error_bound": 8 * 2.0 ** -53 * N})
        text = emit_rows(rows, header, args.format)
    else:
        text = _json(header)
    Output(args.out).text(text)
    return 0


def cmd_certify(args) -> int:
    cf = resolve_cf(args)
    w = _load_word(args)
    energies = _energies(args)
    fit = _fit(args, cf, energies, max(args.max_len, len(w)))
    out = []
    for E in energies:
        cb = certified_bound(args.lam, E, w, cf, fit)
        out.append({"E": [E.real, E.imag], "log_bound": cb.log_bound,
                    "refined_log_bound": cb.refined_log_bound, "log_norm": cb.log_norm,
                    "bound": cb.bound if math.isfinite(cb.bound) else None,
                    "witness": cb.witness})
    doc = {"header": _header(args, cf, baseline=_fit_summary(fit)), "word_length": len(w),
           "certificates": out}
    Output(args.out).text(_json(doc))
    return 0


def cmd_verify_all(args) -> int:
    cf = resolve_cf(args, required=False)
    only = {int(x) for x in _split_list(args.only)} or None
    ctx = acceptance.Context(args.seed, args.jobs)
    header = _header(args, cf, only=sorted(only) if only else None)
    print(f"{'#':>2}  {'criterion':<32} {'result':<6} {'time':>8}  detail")

    def show(r):
        over = "" if r.seconds <= r.time_limit else f" (over {r.time_limit:g}s limit)"
        print(f"{r.number:>2}  {r.name:<32} {'PASS' if r.passed else 'FAIL':<6} "
              f"{r.seconds:7.2f}s  {r.detail}{over}", flush=True)

    results = acceptance.run_suite(ctx, only, on_result=show)
    first = acceptance.results_document(results, header)
    if not args.skip_determinism:
        t0 = time.perf_counter()
        det = acceptance.determinism_check(ctx, first, header, only)
        det.seconds = time.perf_counter() - t0
        show(det)
        results.append(det)
    doc = acceptance.results_document(results, header)
    if args.out:
        Output(args.out).text(doc)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {', '.join(map(str, failed))}" if failed else ""))
    return 1 if failed else 0


# -- parser -----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("rotation number (exactly one)")
    g.add_argument("--alpha-cf", help="coefficients a_1,a_2,...; a trailing ... repeats the pattern")
    g.add_argument("--alpha-value", help="real number in (0,1): decimal or expression such as sqrt(2)-1")
    g.add_argument("--preset", help="fibonacci, golden, silver or one-two")
    g.add_argument("--cf-depth", type=int, default=None, help=f"coefficients to keep (default {DEFAULT_DEPTH})")
    g.add_argument("--precision-bits", type=int, default=DEFAULT_PRECISION_BITS)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="coupling (default 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="concurrent tasks for sweeps")
    p.add_argument("--config", help="JSON file with option values; flags win")
    p.add_argument("--out", help="output file (default stdout)")


def _energy_opts(p):
    p.add_argument("--energy", help="comma-separated energies, e.g. 0.5 or 2+0.5i")
    p.add_argument("--energy-grid", help="lo:hi:count real grid")
    p.add_argument("--band-midpoints", help="spectrum JSON file; use its band midpoints")
    p.add_argument("--widest", type=int, default=None, help="keep the k widest bands only")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sturmctl", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"sturmctl {__version__} ({BACKEND} kernels)")
    ap.add_argument("--schema", action="store_true", help="print output format documentation")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("word", help="standard words, c_alpha prefixes, rotation words")
    _common(p)
    p.add_argument("--sn", type=int, help="print s_n")
    p.add_argument("--prefix", type=int, help="print the first L letters of c_alpha")
    p.add_argument("--rotation", action="store_true", help="print v(m..M)")
    p.add_argument("--theta", default=None)
    p.add_argument("--range", default=None, help="m:M (default 1:100)")
    p.add_argument("--format", default="ascii", choices=["ascii", "packed"])
    p.set_defaults(func=cmd_word)

    p = sub.add_parser("partition", help="standard n-partitions and two-block split of a word")
    _common(p)
    p.add_argument("--word")
    p.add_argument("--word-file")
    p.add_argument("--level", type=int)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("transfer", help="transfer matrix of a word")
    _common(p)
    p.add_argument("--energy", default=None)
    p.add_argument("--word")
    p.add_argument("--word-file")
    p.add_argument("--sn", type=int, help="use s_n of the given rotation number")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("spectrum", help="trace bands of the level-n periodic approximant")
    _common(p)
    p.add_argument("--level", type=int, default=12)
    p.add_argument("--window", help="lo:hi (default +-(2.5+|lambda|))")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--grid", type=int, default=40_000)
    p.add_argument("--proxy", action="store_true", help="intersect levels n and n+1")
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("lyapunov", help="exponent estimates along s_n and along rotation prefixes")
    _common(p)
    _energy_opts(p)
    p.add_argument("--max-level", type=int, default=None)
    p.add_argument("--max-length", type=int, default=10**5, help="largest |s_n| when --max-level is absent")
    p.add_argument("--tol", type=float, default=1e-2)
    p.add_argument("--theta", default=None, help="comma-separated phases for rotation prefixes")
    p.add_argument("--lengths", default=None, help="comma-separated prefix lengths N")
    p.add_argument("--format", default="jsonl", choices=["jsonl", "csv"])
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("growth", help="polynomial envelope of transfer-matrix norms")
    _common(p)
    _energy_opts(p)
    p.add_argument("--max-len", type=int, default=10**5)
    p.add_argument("--samples", type=int, default=5, help="random factors per length")
    p.add_argument("--n-lengths", type=int, default=40)
    p.add_argument("--format", default="json", choices=["json", "jsonl", "csv"])
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("certify", help="bound ||M(w)|| through the prefix envelope")
    _common(p)
    _energy_opts(p)
    p.add_argument("--word")
    p.add_argument("--word-file")
    p.add_argument("--max-len", type=int, default=10**4, help="baseline prefix length")
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--n-lengths", type=int, default=40)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify-all", help="run the acceptance suite")
    _common(p)
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--skip-determinism", action="store_true",
                   help="do not re-run the suite to compare result documents")
    p.set_defaults(func=cmd_verify_all)
    return ap


#: options whose values may start with "-" (negative ranges and energies)
_SIGNED_OPTIONS = {"--range", "--window", "--energy", "--energy-grid", "--theta"}


def _attach_signed_values(argv):
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _SIGNED_OPTIONS:
            val = next(it, None)
            out.append(tok if val is None else f"{tok}={val}")
        else:
            out.append(tok)
    return out


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    argv = _attach_signed_values(sys.argv[1:] if argv is None else list(argv))
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    known = {a.dest for a in sub._actions}  # noqa: SLF001
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    if "lambda" in cfg:
        cfg["lam"] = cfg.pop("lambda")
    unknown = sorted(set(cfg) - known - {"command"})
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for k, v in cfg.items():
        if isinstance(v, list) and k in ("alpha_cf", "energy", "theta", "lengths", "only"):
            cfg[k] = ",".join(map(str, v))
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.schema:
            sys.stdout.write(_json(SCHEMA))
            return 0
        if not args.command:
            parser.print_help()
            return 2
        return args.func(args)
    except SturmError as exc:
        print(f"sturmctl: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
