"""The acceptance suite behind ``sturmctl verify-all``.

Each criterion is a function ``(ctx) -> CriterionResult``.  Results carry only
seed-determined quantities; wall-clock times are reported separately so the
serialized result file is byte-stable across runs.
"""
from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cf import ContinuedFraction, word_length
from .errors import LevelTooCoarseError
from .partitions import coarsest_level, frame, standard_partition, two_block_decomposition
from .spectral import (approximate_spectrum, certified_bound, fresh_violation, growth_fit,
                       lyapunov_along_phase, lyapunov_estimate)
from .transfer import sn_product, word_product
from .words import RotationParams, Word, build_sn, c_prefix, factors_of, rotation_word, subwords

PRESET_NAMES = ("fibonacci", "silver", "one-two")
#: s_n longer than this is checked through polynomial hashes instead of letters
LETTERWISE_BUDGET = 1 << 20


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0
    time_limit: float = math.inf

    def to_json(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "detail": self.detail, "metrics": _plain(self.metrics)}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


class Context:
    """Seed plus results shared between criteria (the level-16 bands)."""

    def __init__(self, seed: int = 0, jobs: int = 1):
        self.seed = int(seed)
        self.jobs = int(jobs)
        self._midpoints = None

    def rng(self, number: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, number])

    def band_midpoints(self) -> list[float]:
        """Midpoints of the 10 widest level-16 bands, lambda = 1, Fibonacci."""
        if self._midpoints is None:
            sp = approximate_spectrum(1.0, ContinuedFraction.preset("fibonacci"), 16)
            self._midpoints = [0.5 * (lo + hi) for lo, hi in sp.widest(10)]
        return self._midpoints


# -- 1 -------------------------------------------------------------------------

_P = (1 << 61) - 1
_BASES = (1_000_003, 998_244_353)


class _Node:
    """Forward and reverse polynomial hashes of a word, two bases mod 2^61-1."""

    __slots__ = ("f", "r", "n")

    def __init__(self, f, r, n):
        self.f, self.r, self.n = f, r, n

    @classmethod
    def of(cls, data: bytes) -> "_Node":
        f = [0, 0]
        r = [0, 0]
        for i, B in enumerate(_BASES):
            h = 0
            for c in data:
                h = (h * B + c) % _P
            f[i] = h
            h = 0
            for c in reversed(data):
                h = (h * B + c) % _P
            r[i] = h
        return cls(tuple(f), tuple(r), len(data))

    def __add__(self, o: "_Node") -> "_Node":
        f = tuple((a * pow(B, o.n, _P) + b) % _P for a, b, B in zip(self.f, o.f, _BASES))
        r = tuple((b * pow(B, self.n, _P) + a) % _P for a, b, B in zip(self.r, o.r, _BASES))
        return _Node(f, r, self.n + o.n)

    def __mul__(self, k: int) -> "_Node":
        out, base = _Node.of(b""), self
        while k:
            if k & 1:
                out = out + base
            k >>= 1
            if k:
                base = base + base
        return out


class _HashedStandardWords:
    def __init__(self, cf: ContinuedFraction, N: int):
        self.cf = cf
        one, zero = _Node.of(b"1"), _Node.of(b"0")
        self.s = {-1: one, 0: zero, 1: zero * (cf.a(1) - 1) + one}
        for k in range(2, N + 1):
            self.s[k] = self.s[k - 1] * cf.a(k) + self.s[k - 2]

    def prefix(self, k: int, L: int) -> _Node:
        if L == self.s[k].n:
            return self.s[k]
        if L == 0:
            return _Node.of(b"")
        if k == 1:
            return _Node.of(b"0") * L
        prev = self.s[k - 1]
        j = min(L // prev.n, self.cf.a(k))
        head = prev * j
        if j == self.cf.a(k):
            return head + self.prefix(k - 2, L - j * prev.n)
        return head + self.prefix(k - 1, L - j * prev.n)


def _word_identities(cf: ContinuedFraction, N: int) -> dict:
    hashed = _HashedStandardWords(cf, N)
    bad = []
    exceptions = []
    letterwise_max = 1
    for n in range(1, N + 1):
        q = word_length(cf, n)
        tail = b"10" if n % 2 == 0 else b"01"
        if q <= LETTERWISE_BUDGET:
            letterwise_max = n
            s = build_sn(cf, n).data
            if n == 1:
                ok_rec = s == b"0" * (cf.a(1) - 1) + b"1"
            else:
                ok_rec = s == build_sn(cf, n - 1).data * cf.a(n) + build_sn(cf, n - 2).data
            if q <= 4096 and _Node.of(s).f != hashed.s[n].f:
                bad.append(f"hash table disagrees with letters at n={n}")
            if not ok_rec:
                bad.append(f"recursion fails at n={n}")
            if n >= 2:
                prefix_ok = (build_sn(cf, n - 1).data + s).startswith(s)
                if word_length(cf, n - 1) < 2:
                    # s_1 = "1" when a_1 = 1, and then s_2 = "1" + "0"^... is no prefix of s_1 s_2
                    exceptions.append({"level": n, "holds": prefix_ok})
                elif not prefix_ok:
                    bad.append(f"prefix identity fails at n={n}")
                pi = s[:-2]
                if s[-2:] != tail or pi != pi[::-1]:
                    bad.append(f"palindrome factorization fails at n={n}")
        elif n >= 2:
            s = hashed.s[n]
            head = hashed.s[n - 1] + hashed.prefix(n, q - hashed.s[n - 1].n)
            if head.f != s.f:
                bad.append(f"prefix identity fails at n={n} (hashed)")
            pi = hashed.prefix(n, q - 2)
            if (pi + _Node.of(tail)).f != s.f or pi.f != pi.r:
                bad.append(f"palindrome factorization fails at n={n} (hashed)")
    q10 = word_length(cf, 10)
    rot_ok = rotation_word(RotationParams(cf, Fraction(0)), 1, q10) == c_prefix(cf, q10)
    if not rot_ok:
        bad.append("rotation word at theta=0 differs from c_alpha prefix")
    return {"letterwise_max_level": letterwise_max, "max_level": N, "failures": bad,
            "prefix_identity_exceptions": exceptions}


def criterion_1(ctx: Context) -> CriterionResult:
    metrics = {}
    failures = []
    for name in PRESET_NAMES:
        r = _word_identities(ContinuedFraction.preset(name), 25)
        metrics[name] = {"letterwise_max_level": r["letterwise_max_level"],
                         "failures": len(r["failures"]),
                         "prefix_identity_exceptions": r["prefix_identity_exceptions"]}
        failures += [f"{name}: {m}" for m in r["failures"]]
    detail = "; ".join(failures[:3]) if failures else \
        "recursion, prefix identity, palindromes and theta=0 rotation hold up to n=25"
    return CriterionResult(1, "word identities", not failures, detail, metrics, time_limit=1.0)


# -- 2 -------------------------------------------------------------------------

def criterion_2(ctx: Context) -> CriterionResult:
    rng = ctx.rng(2)
    metrics = {}
    failures = []
    for name in ("fibonacci", "silver"):
        cf = ContinuedFraction.preset(name)
        thetas = [Fraction(int(rng.integers(0, 10**9)), 10**9) for _ in range(5)]
        offsets = [int(rng.integers(-10**6, 10**6)) for _ in range(5)]
        windows = [rotation_word(RotationParams(cf, th), m, m + 10**4 - 1).data
                   for th, m in zip(thetas, offsets)]
        for ell in range(1, 51):
            sw = {w.data for w in subwords(cf, ell)}
            if len(sw) != ell + 1:
                failures.append(f"{name}: {len(sw)} factors of length {ell}")
            for th, data in zip(thetas, windows):
                got = {data[i:i + ell] for i in range(len(data) - ell + 1)}
                if got != sw:
                    failures.append(f"{name}: theta={th} disagrees at length {ell}")
        metrics[name] = {"thetas": [str(t) for t in thetas], "offsets": offsets}
    detail = "; ".join(failures[:3]) if failures else \
        "ell+1 factors for ell<=50, equal to rotation-word factors at 5 phases"
    return CriterionResult(2, "subword consistency", not failures, detail, metrics, time_limit=10.0)


# -- 3 -------------------------------------------------------------------------

def _brute_two_block(w: Word, cf: ContinuedFraction):
    """Oracle: every level t <= m and every split ``w = x y`` valid there, where m
    is the first level with ``w`` a factor of ``s_m``."""
    data = w.data
    m = 1
    while data not in build_sn(cf, m).data:
        m += 1
    valid = {}
    for t in range(1, m + 1):
        st, sp, sn = (build_sn(cf, k).data for k in (t, t - 1, t + 1))
        splits = [i for i in range(len(data) + 1)
                  if sn.startswith(data[i:]) and (st.endswith(data[:i]) or sp.endswith(data[:i]))]
        if splits:
            valid[t] = splits
    preferred = 1 if m == 1 else (m - 1 if m - 1 in valid else min(valid, default=None))
    return preferred, valid


def criterion_3(ctx: Context) -> CriterionResult:
    failures = []
    metrics = {}
    for name in PRESET_NAMES:
        cf = ContinuedFraction.preset(name)
        n_words = n_parts = 0
        for ell in range(1, 31):
            for w in sorted(subwords(cf, ell)):
                n_words += 1
                top = coarsest_level(w, cf)
                for n in range(0, top + 1):
                    try:
                        p = standard_partition(w, cf, n)
                    except LevelTooCoarseError:
                        failures.append(f"{name}: no partition of {w} at level {n} <= {top}")
                        continue
                    n_parts += 1
                    if p.expand(cf) != w:
                        failures.append(f"{name}: partition of {w} at level {n} does not reassemble")
                    try:
                        p.validate(cf, w)
                    except Exception as exc:  # noqa: BLE001 - reported, not raised
                        failures.append(f"{name}: {w} level {n}: {exc}")
                tb = two_block_decomposition(w, cf)
                t, valid = _brute_two_block(w, cf)
                st, sp, sn = (build_sn(cf, k) for k in (tb.t, tb.t - 1, tb.t + 1))
                if tb.x + tb.y != w or not sn.startswith(tb.y) or \
                        not (st.endswith(tb.x) or sp.endswith(tb.x)):
                    failures.append(f"{name}: two-block predicates fail for {w}")
                if t is None:
                    failures.append(f"{name}: split search finds no decomposition of {w}")
                elif tb.t != t or len(tb.x) not in valid[t]:
                    failures.append(f"{name}: two-block of {w} disagrees with split search")
        n_frames = 0
        for n in range(0, 7):
            big = build_sn(cf, n + 3)
            margin = word_length(cf, n + 1)
            sn_word = build_sn(cf, n)
            for ell in range(1, len(sn_word) + 1):
                for w in sorted(factors_of(sn_word, ell)):
                    x, y = frame(w, cf, n)
                    n_frames += 1
                    if x + w + y != big or len(x) < margin or len(y) < margin:
                        failures.append(f"{name}: frame of {w} at level {n} fails")
        metrics[name] = {"words": n_words, "partitions": n_parts, "frames": n_frames}
    detail = "; ".join(failures[:3]) if failures else \
        "reassembly, two-block split search and frame margins hold exhaustively"
    return CriterionResult(3, "partition suite", not failures, detail, metrics, time_limit=30.0)


# -- 4 -------------------------------------------------------------------------

def _random_factor(rng, bases, max_len):
    base = bases[int(rng.integers(0, len(bases)))]
    ell = int(rng.integers(1, max_len + 1))
    s = int(rng.integers(0, len(base) - ell + 1))
    return base[s:s + ell]


def _random_energy(rng, radius=4.0):
    r = radius * math.sqrt(float(rng.random()))
    phi = 2 * math.pi * float(rng.random())
    return complex(r * math.cos(phi), r * math.sin(phi))


def _rel_diff(p, q) -> float:
    """``||P - Q|| / ||P||`` for factored products."""
    diff = p.m - q.m * math.exp(q.log_scale - p.log_scale)
    return float(np.linalg.norm(diff, 2) / np.linalg.norm(p.m, 2))


def criterion_4(ctx: Context) -> CriterionResult:
    rng = ctx.rng(4)
    cfs = [ContinuedFraction.preset(n) for n in PRESET_NAMES]
    bases = [c_prefix(cf, 20_000) for cf in cfs]
    worst_det = -math.inf     # max of det_error / |w|
    min_L = math.inf
    for _ in range(1000):
        w = _random_factor(rng, bases, 1000)
        lam = float(rng.uniform(-3, 3))
        p = word_product(lam, _random_energy(rng), w)
        worst_det = max(worst_det, p.det_error() / len(w))
        min_L = min(min_L, p.log_norm())
    worst_rev = 0.0
    for _ in range(500):
        w = _random_factor(rng, bases, 1000)
        lam, E = float(rng.uniform(-3, 3)), _random_energy(rng)
        a = word_product(lam, E, w).log_norm()
        b = word_product(lam, E, w.reverse()).log_norm()
        worst_rev = max(worst_rev, abs(math.expm1(b - a)))
    worst_sn = 0.0
    for cf in cfs:
        for _ in range(4):
            lam, E = float(rng.uniform(-3, 3)), _random_energy(rng)
            for n in range(-1, 13):
                worst_sn = max(worst_sn, _rel_diff(word_product(lam, E, build_sn(cf, n)),
                                                   sn_product(lam, E, cf, n)))
    worst_sub = -math.inf
    for _ in range(500):
        w = _random_factor(rng, bases, 1000)
        while len(w) < 2:
            w = _random_factor(rng, bases, 1000)
        cut = int(rng.integers(1, len(w)))
        lam, E = float(rng.uniform(-3, 3)), _random_energy(rng)
        L = lambda u: word_product(lam, E, u).log_norm()  # noqa: E731
        worst_sub = max(worst_sub, L(w) - L(w[:cut]) - L(w[cut:]))
    checks = {"det": worst_det <= 1e-10, "nonneg": min_L >= -1e-12,
              "reversal": worst_rev <= 1e-10, "sn_vs_direct": worst_sn <= 1e-10,
              "subadditive": worst_sub <= 1e-9}
    metrics = {"max_det_error_per_letter": worst_det, "min_log_norm": min_L,
               "max_reversal_rel": worst_rev, "max_sn_rel": worst_sn,
               "max_subadditivity_excess": worst_sub, "checks": checks}
    failed = [k for k, v in checks.items() if not v]
    detail = ("failed: " + ", ".join(failed)) if failed else \
        f"det/|w| <= {worst_det:.1e}, reversal {worst_rev:.1e}, s_n vs direct {worst_sn:.1e}"
    return CriterionResult(4, "matrix invariants", not failed, detail, metrics, time_limit=30.0)


# -- 5 -------------------------------------------------------------------------

def criterion_5(ctx: Context) -> CriterionResult:
    cf = ContinuedFraction.preset("fibonacci")
    edges = {}
    ok = True
    for n in (6, 12):
        sp = approximate_spectrum(0.0, cf, n, tol=1e-7)
        edges[n] = [list(b) for b in sp.bands]
        ok &= len(sp.bands) == 1 and abs(sp.bands[0][0] + 2) <= 1e-6 and abs(sp.bands[0][1] - 2) <= 1e-6
    gammas = {}
    for name in PRESET_NAMES:
        c = ContinuedFraction.preset(name)
        top = max(n for n in range(1, c.depth + 1) if word_length(c, n) <= 10**4)
        g0 = lyapunov_estimate(0.0, 0.0, c, top).gamma
        g1 = lyapunov_estimate(0.0, 1.0, c, top).gamma
        gammas[name] = {"level": top, "E0": g0, "E1": g1}
        ok &= abs(g0) <= 1e-12 and g1 <= 1e-3
    detail = "single band [-2, 2] at levels 6 and 12; gamma(0) = 0, gamma(1) <= 1e-3" if ok \
        else f"bands {edges}, gammas {gammas}"
    return CriterionResult(5, "free-case oracle", bool(ok), detail,
                           {"bands": edges, "gamma": gammas}, time_limit=10.0)


# -- 6 -------------------------------------------------------------------------

def criterion_6(ctx: Context) -> CriterionResult:
    cf = ContinuedFraction.preset("fibonacci")
    top = max(n for n in range(1, cf.depth + 1) if word_length(cf, n) <= 10**5)
    rows = []
    small = monotone = cert_monotone = 0
    for E in ctx.band_midpoints():
        est = lyapunov_estimate(1.0, E, cf, top)
        rates = est.rates()
        last5 = rates[-5:]
        is_small = rates[-1] <= 0.02
        is_mono = all(b <= a for a, b in zip(last5, last5[1:]))
        f5 = est.f_upper[-5:]
        cert_mono = all(b <= a for a, b in zip(f5, f5[1:]))
        small += is_small
        monotone += is_mono
        cert_monotone += cert_mono
        rows.append({"E": E, "final_rate": rates[-1], "last5": last5, "non_increasing": is_mono})
    off = lyapunov_estimate(1.0, 5.0, cf, top)
    last3 = off.rates()[-3:]
    stable = all(float(f"{r:.3g}") == float(f"{last3[0]:.3g}") for r in last3)
    off_ok = last3[-1] > 0.5 and stable
    k = len(rows)
    passed = small == k and monotone == k and off_ok
    metrics = {"level": top, "midpoints": rows, "off_spectrum_last3": last3,
               "final_rate_ok": small, "raw_non_increasing": monotone,
               "certificate_non_increasing": cert_monotone}
    detail = (f"rate <= 0.02 at {small}/{k}; last five rates non-increasing at {monotone}/{k} "
              f"(F^(n) certificates at {cert_monotone}/{k}); E=5 rate {last3[-1]:.4g}"
              f"{' stable' if stable else ' unstable'}")
    return CriterionResult(6, "zero exponent on the spectrum", passed, detail, metrics,
                           time_limit=120.0)


# -- 7 -------------------------------------------------------------------------

def criterion_7(ctx: Context) -> CriterionResult:
    E = complex(2.0, 0.5)
    out = {}
    ok = True
    for pattern in ((1,), (2,), (1, 2)):
        cf = ContinuedFraction.periodic(pattern)
        top = max(n for n in range(1, cf.depth + 1) if word_length(cf, n) <= 10**5)
        est = lyapunov_estimate(1.0, E, cf, top)
        gap = abs(est.f_upper[-1] - est.inf_f[-1])
        phases = {}
        for th in ("0", "0.3", "0.7"):
            params = RotationParams(cf, Fraction(th), 1.0)
            phases[th] = lyapunov_along_phase(1.0, E, params, [10**5])[-1][1]
        spread = max(phases.values()) - min(phases.values())
        ok &= gap <= 1e-2 and spread <= 2e-2
        out[",".join(map(str, pattern))] = {"level": top, "gamma": est.gamma, "gap": gap,
                                             "phase_rates": phases, "spread": spread}
    worst_gap = max(v["gap"] for v in out.values())
    worst_spread = max(v["spread"] for v in out.values())
    detail = f"certificate gap <= {worst_gap:.1e}, phase spread <= {worst_spread:.1e}"
    return CriterionResult(7, "uniform existence", bool(ok), detail, out, time_limit=120.0)


# -- 8 -------------------------------------------------------------------------

def criterion_8(ctx: Context) -> CriterionResult:
    cf = ContinuedFraction.preset("fibonacci")
    energies = ctx.band_midpoints()
    fit = growth_fit(1.0, cf, energies, 10**5, sample_count=5, seed=ctx.seed, jobs=ctx.jobs)
    fresh = fresh_violation(fit, cf, seed=ctx.seed + 1)
    # the tightest line through the fit sample, kept for comparison only
    emp = type(fit)(**{**fit.__dict__, "log_C": fit.empirical_log_C, "mu": fit.empirical_mu})
    fresh_emp = fresh_violation(emp, cf, seed=ctx.seed + 1)
    rng = ctx.rng(8)
    base = c_prefix(cf, 4 * 10**4)
    worst = -math.inf
    for _ in range(200):
        ell = int(rng.integers(1, 10**4 + 1))
        s = int(rng.integers(0, len(base) - ell + 1))
        E = energies[int(rng.integers(0, len(energies)))]
        cb = certified_bound(1.0, E, base[s:s + ell], cf, fit)
        worst = max(worst, cb.log_norm - cb.log_bound)
    finite = math.isfinite(fit.mu) and math.isfinite(fit.log_C)
    passed = finite and fit.max_violation <= 0 and fresh <= 0 and worst <= 0
    metrics = {"log_C": fit.log_C, "mu": fit.mu, "prefix_log_C": fit.prefix_log_C,
               "prefix_mu": fit.prefix_mu, "max_violation": fit.max_violation,
               "fresh_violation": fresh, "empirical_log_C": fit.empirical_log_C,
               "empirical_mu": fit.empirical_mu, "empirical_fresh_violation": fresh_emp,
               "certified_max_excess": worst, "sample_size": int(fit.lengths.size)}
    detail = (f"mu={fit.mu:.3f}, ln C={fit.log_C:.3f}; violation {fit.max_violation:.3f} "
              f"(fit), {fresh:.3f} (fresh); certified bound slack >= {-worst:.3f}")
    return CriterionResult(8, "polynomial growth bound", bool(passed), detail, metrics,
                           time_limit=180.0)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}


def run_criterion(number: int, ctx: Context) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](ctx)
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(ctx: Context, only=None, on_result=None) -> list[CriterionResult]:
    out = []
    for number in sorted(CRITERIA):
        if only and number not in only:
            continue
        res = run_criterion(number, ctx)
        out.append(res)
        if on_result:
            on_result(res)
    return out


def results_document(results, header: dict) -> str:
    """Canonical JSON for a suite run (no timings)."""
    doc = {"header": _plain(header), "criteria": [r.to_json() for r in results],
           "passed": all(r.passed for r in results)}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def determinism_check(ctx: Context, first: str, header: dict, only=None) -> CriterionResult:
    """Re-run the suite in process and compare the canonical documents byte for byte."""
    again = run_suite(Context(ctx.seed, ctx.jobs), only)
    second = results_document(again, header)
    same = first == second
    lines = next((i for i, (a, b) in enumerate(itertools.zip_longest(
        first.splitlines(), second.splitlines())) if a != b), None)
    detail = "two runs with the same seed gave identical result documents" if same \
        else f"result documents differ from line {lines + 1}"
    return CriterionResult(9, "determinism", same, detail, {"bytes": len(first.encode())})
