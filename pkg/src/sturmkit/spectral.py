"""Desk-scale analysis: trace bands, Lyapunov exponents, growth envelopes.

* :func:`approximate_spectrum` - bands ``{E : |tr M(s_n)| <= 2}`` of the
  periodic approximant, refined by bisection.
* :func:`lyapunov_estimate` / :func:`subadditive_limit` - ``inf_n F^(n)`` with
  ``F^(n) = max(F(s_n)/|s_n|, F(s_{n-1})/|s_{n-1}|)``.
* :func:`growth_fit` / :func:`certified_bound` - polynomial envelopes for
  ``ln ||M(w)||`` on prefixes of ``c_alpha`` and on arbitrary factors.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cf import ContinuedFraction, bounded_density_profile, word_length
from .errors import ConfigError, ContractError, InternalConsistencyError
from .partitions import two_block_decomposition
from .transfer import (local_matrix, norm2x2, prefix_log_norms, sn_log_abs_traces,
                       sn_products, word_product)
from .words import RotationParams, Word, c_prefix, rotation_word

LN2 = math.log(2.0)

#: coefficient size above which "bounded coefficients" is reported as doubtful
COEFFICIENT_CAP = 50
DENSITY_CAP = 50


# -- spectrum -------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumApprox:
    lam: float
    level: int
    bands: tuple[tuple[float, float], ...]
    resolution: float
    window: tuple[float, float]
    resolution_limited: bool = False

    @property
    def total_width(self) -> float:
        return sum(hi - lo for lo, hi in self.bands)

    def midpoints(self) -> list[float]:
        return [0.5 * (lo + hi) for lo, hi in self.bands]

    def widest(self, k: int) -> list[tuple[float, float]]:
        return sorted(self.bands, key=lambda b: (-(b[1] - b[0]), b[0]))[:k]

    def contains(self, E: float) -> bool:
        return any(lo <= E <= hi for lo, hi in self.bands)

    def distance(self, E: float) -> float:
        if self.contains(E):
            return 0.0
        return min(min(abs(E - lo), abs(E - hi)) for lo, hi in self.bands)

    def to_json(self) -> dict:
        return {"lambda": self.lam, "level": self.level, "resolution": self.resolution,
                "window": list(self.window), "resolution_limited": self.resolution_limited,
                "bands": [list(b) for b in self.bands]}


def intersect_bands(a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]]):
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo <= hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def approximate_spectrum(lam: float, cf: ContinuedFraction, n: int,
                         window: tuple[float, float] | None = None, tol: float = 1e-8,
                         grid: int = 40_000, trace_slack: float = 1e-9) -> SpectrumApprox:
    """Bands of ``{E real : |tr M(lam, E, s_n)| <= 2}`` inside ``window``.

    A coarse grid brackets every band wider than the grid spacing; each edge is
    then bisected to width ``tol``.  Reported edges are the in-band end of the
    final bracket.  Gaps narrower than ``tol`` are closed.
    """
    if n < 2:
        raise ConfigError("spectrum approximation needs level n >= 2")
    if window is None:
        r = 2.0 + abs(lam) + 0.5
        window = (-r, r)
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi or grid < 2 or tol <= 0:
        raise ConfigError("invalid window, grid or tolerance")
    limit = math.log(2.0 + trace_slack)
    limited = bool(tol < 64 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0))

    def inside(E):
        return sn_log_abs_traces(lam, E, cf, n) <= limit

    Es = np.linspace(lo, hi, grid)
    ins = inside(Es)
    if not ins.any():
        return SpectrumApprox(lam, n, (), tol, (lo, hi), limited)
    d = np.diff(ins.astype(np.int8))
    starts = list(np.nonzero(d == 1)[0] + 1)
    ends = list(np.nonzero(d == -1)[0])
    if ins[0]:
        starts.insert(0, 0)
    if ins[-1]:
        ends.append(grid - 1)

    # brackets: (inside point, outside point); bisect all of them together
    left_in = np.array([Es[s] for s in starts])
    left_out = np.array([Es[s - 1] if s > 0 else np.nan for s in starts])
    right_in = np.array([Es[e] for e in ends])
    right_out = np.array([Es[e + 1] if e < grid - 1 else np.nan for e in ends])
    pin = np.concatenate([left_in, right_in])
    pout = np.concatenate([left_out, right_out])
    active = ~np.isnan(pout)
    while active.any() and np.max(np.abs(pin[active] - pout[active])) > tol:
        mid = 0.5 * (pin[active] + pout[active])
        ok = inside(mid)
        a_idx = np.nonzero(active)[0]
        pin[a_idx[ok]] = mid[ok]
        pout[a_idx[~ok]] = mid[~ok]
    k = len(starts)
    bands = []
    for lo_e, hi_e in zip(pin[:k], pin[k:]):
        lo_e, hi_e = float(lo_e), float(hi_e)
        if bands and lo_e - bands[-1][1] <= tol:
            bands[-1] = (bands[-1][0], hi_e)
        else:
            bands.append((lo_e, hi_e))
    return SpectrumApprox(float(lam), n, tuple(bands), tol, (lo, hi), limited)


def spectrum_proxy(lam: float, cf: ContinuedFraction, n: int, **kw) -> SpectrumApprox:
    """Level-n bands intersected with level-(n+1) bands."""
    a = approximate_spectrum(lam, cf, n, **kw)
    b = approximate_spectrum(lam, cf, n + 1, **kw)
    return SpectrumApprox(a.lam, n, tuple(intersect_bands(a.bands, b.bands)), a.resolution,
                          a.window, a.resolution_limited or b.resolution_limited)


# -- subadditive limits ---------------------------------------------------------

class LogNormFunctional:
    """``w -> ln ||M(lam, E, w)||``; evaluates ``s_n`` through the matrix recursion."""

    def __init__(self, lam: float, E: complex):
        self.lam = float(lam)
        self.E = complex(E)

    def __call__(self, w: Word) -> float:
        return word_product(self.lam, self.E, w).log_norm()

    def at_levels(self, cf: ContinuedFraction, max_level: int) -> list[float]:
        return [p.log_norm() for p in sn_products(self.lam, self.E, cf, max_level)]

    def __repr__(self):
        return f"LogNormFunctional(lam={self.lam}, E={self.E})"


def hypothesis_warnings(cf: ContinuedFraction, upto: int, density: bool = False) -> list[str]:
    """Finite-depth diagnostics for the bounded / bounded-density hypotheses."""
    coeffs = cf.coefficients[:upto]
    out = []
    if not density and max(coeffs) > COEFFICIENT_CAP:
        out.append(f"coefficients up to a_{upto} reach {max(coeffs)} > {COEFFICIENT_CAP}; "
                   "bounded-coefficient hypothesis doubtful")
    if density:
        peak = max(bounded_density_profile(cf)[:upto])
        if peak > DENSITY_CAP:
            out.append(f"running coefficient mean reaches {float(peak):.3g} > {DENSITY_CAP}; "
                       "bounded-density hypothesis doubtful")
    return out


@dataclass
class SubadditiveLimit:
    limit: float
    f_upper: list[float]       # F^(n), n = 1..max_level
    inf_f: list[float]         # running infimum of F^(n)
    rates: list[float]         # F(s_n)/|s_n|, n = -1..max_level
    lengths: list[int]         # |s_n|, n = -1..max_level
    tol: float
    converged: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.f_upper[-1] - self.inf_f[-1]


def _spot_check(F, cf: ContinuedFraction, checks: int, seed: int, max_len: int = 200):
    if checks <= 0:
        return
    rng = np.random.default_rng(seed)
    base = c_prefix(cf, 4 * max_len)
    for _ in range(checks):
        ell = int(rng.integers(2, max_len + 1))
        start = int(rng.integers(0, len(base) - ell + 1))
        w = base[start:start + ell]
        cut = int(rng.integers(1, ell))
        fw, fa, fb = F(w), F(w[:cut]), F(w[cut:])
        if fw < -1e-12 or fa < -1e-12 or fb < -1e-12:
            raise ContractError(f"functional is negative on a factor of length {ell}")
        if fw > fa + fb + 1e-9 * (1.0 + abs(fa) + abs(fb)):
            raise ContractError(
                f"subadditivity fails: F(ab)={fw:.6g} > F(a)+F(b)={fa + fb:.6g} (|a|={cut}, |b|={ell - cut})")


def subadditive_limit(F: Callable[[Word], float], cf: ContinuedFraction, max_level: int,
                      tol: float = 1e-2, spot_checks: int = 20, seed: int = 0) -> SubadditiveLimit:
    """Estimate ``lim F(w)/|w|`` as ``inf_n F^(n)``.

    ``F`` must be nonnegative and subadditive; both are spot-checked on random
    splits of random factors and a violation raises :class:`ContractError`.
    If ``F`` has an ``at_levels(cf, N)`` method it is used to evaluate
    ``F(s_n)`` without materialising the words.
    """
    if not 1 <= max_level <= cf.depth:
        raise ConfigError(f"max_level must lie in 1..{cf.depth}")
    warn = hypothesis_warnings(cf, max_level)
    for msg in warn:
        warnings.warn(msg, stacklevel=2)
    _spot_check(F, cf, spot_checks, seed)
    if hasattr(F, "at_levels"):
        values = list(F.at_levels(cf, max_level))
    else:
        from .words import build_sn
        values = [F(build_sn(cf, n)) for n in range(-1, max_level + 1)]
    lengths = [word_length(cf, n) for n in range(-1, max_level + 1)]
    rates = [v / q for v, q in zip(values, lengths)]
    f_upper, inf_f = [], []
    best = math.inf
    for n in range(1, max_level + 1):
        fn = max(rates[n + 1], rates[n])
        f_upper.append(fn)
        best = min(best, fn)
        inf_f.append(best)
    return SubadditiveLimit(best, f_upper, inf_f, rates, lengths, tol,
                            abs(f_upper[-1] - best) <= tol, warn)


@dataclass
class LyapunovEstimate:
    lam: float
    E: complex
    samples: list[tuple[int, int, float, float]]  # (n, |s_n|, L(s_n)/|s_n|, L(s_{n-1})/|s_{n-1}|)
    f_upper: list[float]
    inf_f: list[float]
    gamma: float
    converged: bool
    tol: float
    warnings: list[str] = field(default_factory=list)

    def rates(self) -> list[float]:
        return [s[2] for s in self.samples]

    def rows(self, theta=0.0):
        """Flat records for CSV/JSON output."""
        for (n, q, rate, _), fu, inf in zip(self.samples, self.f_upper, self.inf_f):
            yield {"lambda": self.lam, "E_re": self.E.real, "E_im": self.E.imag,
                   "theta": float(theta), "n": n, "len": q, "lognorm": rate * q,
                   "norm_rate": rate, "f_upper": fu, "inf_f": inf}


def lyapunov_estimate(lam: float, E: complex, cf: ContinuedFraction, max_level: int,
                      tol: float = 1e-2, spot_checks: int = 0, seed: int = 0) -> LyapunovEstimate:
    """``gamma(E) = inf_n F^(n)`` for ``F = ln ||M(lam, E, .)||`` along ``s_n``."""
    res = subadditive_limit(LogNormFunctional(lam, E), cf, max_level, tol, spot_checks, seed)
    samples = [(n, res.lengths[n + 1], res.rates[n + 1], res.rates[n])
               for n in range(1, max_level + 1)]
    return LyapunovEstimate(float(lam), complex(E), samples, res.f_upper, res.inf_f,
                            res.limit, res.converged, tol, res.warnings)


def lyapunov_along_phase(lam: float, E: complex, params: RotationParams,
                         lengths: Sequence[int]) -> list[tuple[int, float]]:
    """``(N, ln ||M(v^N)|| / N)`` along prefixes ``v(1) ... v(N)`` of the rotation word."""
    lengths = sorted({int(N) for N in lengths})
    if not lengths or lengths[0] < 1:
        raise ConfigError("lengths must be positive")
    w = rotation_word(params, 1, lengths[-1])
    vals = prefix_log_norms(lam, E, w, lengths)
    return [(N, float(v) / N) for N, v in zip(lengths, vals)]


# -- growth envelopes ---------------------------------------------------------

def envelope_line(x, y, nonneg_slope: bool = True) -> tuple[float, float]:
    """Line ``c + mu*x`` above every point minimising the mean gap.

    The optimum is a supporting line of the upper convex hull, namely the hull
    edge above ``mean(x)``.  Returns ``(c, mu)``.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size == 0:
        raise ConfigError("no points to fit")
    xbar = float(np.mean(x))
    # upper hull by monotone chain on (x, max y per x)
    order = np.lexsort((-y, x))
    pts = []
    last_x = None
    for i in order:
        if x[i] == last_x:
            continue
        last_x = x[i]
        p = (float(x[i]), float(y[i]))
        while len(pts) >= 2:
            (x1, y1), (x2, y2) = pts[-2], pts[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                pts.pop()
            else:
                break
        pts.append(p)
    if len(pts) == 1:
        mu = 0.0
    else:
        mu = None
        for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
            if x1 <= xbar <= x2:
                mu = (y2 - y1) / (x2 - x1)
                break
        if mu is None:
            mu = 0.0
    if nonneg_slope and mu < 0:
        mu = 0.0
    c = float(np.max(y - mu * x))
    return c, float(mu)


@dataclass
class GrowthFit:
    """Envelope ``ln ||M(w)|| <= log_C + mu ln |w|`` over sampled factors.

    ``(log_C, mu)`` is lifted from the exhaustive prefix envelope
    ``(prefix_log_C, prefix_mu)`` through the two-block decomposition, so it
    covers every factor up to ``max_len``, not only the sampled ones.  The
    tightest line through the sample is kept as ``empirical_log_C`` /
    ``empirical_mu`` for comparison.
    """

    lam: float
    energies: list[complex]
    lengths: np.ndarray        # |w| of every sample point
    log_norms: np.ndarray      # ln ||M(w)||
    energy_index: np.ndarray   # which energy each point belongs to
    is_prefix: np.ndarray      # True for prefixes of c_alpha
    log_C: float
    mu: float
    max_violation: float
    mu_per_energy: list[float]
    prefix_log_C: float        # envelope over every prefix up to max_len
    prefix_mu: float
    log_F: float               # ln max(||T(lam,E,1)||, ||T(lam,E,0)||, 1) over the energies
    empirical_log_C: float
    empirical_mu: float
    max_len: int
    seed: int
    warnings: list[str] = field(default_factory=list)

    @property
    def C(self) -> float:
        return math.exp(self.log_C) if self.log_C < 709 else math.inf

    def violation(self, lengths, log_norms) -> float:
        lengths = np.asarray(lengths, float)
        return float(np.max(np.asarray(log_norms) - self.log_C - self.mu * np.log(lengths)))

    def prefix_envelope(self, ell: int) -> float:
        return self.prefix_log_C + self.prefix_mu * math.log(max(ell, 1))


def geometric_lengths(max_len: int, count: int) -> np.ndarray:
    return np.unique(np.round(np.geomspace(1, max_len, count)).astype(np.int64))


def sample_windows(cf: ContinuedFraction, lengths, k: int, seed: int, span: int | None = None):
    """``k`` random factors per length, as windows into a long prefix of c_alpha."""
    lengths = np.asarray(lengths, dtype=np.int64)
    span = span or 8 * int(lengths.max())
    base = c_prefix(cf, span)
    rng = np.random.default_rng(seed)
    out = []
    for ell in lengths.tolist():
        for _ in range(k):
            s = int(rng.integers(0, span - ell + 1))
            out.append(base[s:s + ell])
    return out


def growth_fit(lam: float, cf: ContinuedFraction, energies: Sequence[complex], max_len: int,
               sample_count: int = 5, seed: int = 0, n_lengths: int = 40,
               jobs: int = 1) -> GrowthFit:
    """Polynomial envelope ``ln ||M(w)|| <= ln C + mu ln |w|`` over sampled words.

    Samples are the prefixes of c_alpha at geometrically spaced lengths plus
    ``sample_count`` random factors per length.  The log-norm of *every* prefix
    up to ``max_len`` is computed (one pass per energy) and its tightest
    envelope ``(C^, mu^)`` is lifted to all factors as
    ``C = F^2 (C^^2 + 1)``, ``mu = 2 mu^``; see :func:`certified_bound`.
    """
    energies = [complex(E) for E in energies]
    if not energies:
        raise ConfigError("no energies given")
    warn = hypothesis_warnings(cf, cf.depth, density=True)
    for msg in warn:
        warnings.warn(msg, stacklevel=2)
    lengths = geometric_lengths(max_len, n_lengths)
    prefix = c_prefix(cf, max_len)
    windows = sample_windows(cf, lengths, sample_count, seed)
    win_len = np.array([len(w) for w in windows], dtype=np.int64)
    all_cps = np.arange(1, max_len + 1, dtype=np.int64)

    def one(E):
        pref = prefix_log_norms(lam, E, prefix, all_cps)
        rand = np.array([word_product(lam, E, w).log_norm() for w in windows])
        return pref, rand

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(one, energies))
    else:
        results = [one(E) for E in energies]

    Ls, Ns, idx, kind = [], [], [], []
    all_prefix_x, all_prefix_y = [], []
    mu_each = []
    for i, (pref, rand) in enumerate(results):
        px = lengths
        py = pref[lengths - 1]
        Ns += [px, win_len]
        Ls += [py, rand]
        idx.append(np.full(px.size + win_len.size, i))
        kind += [np.ones(px.size, bool), np.zeros(win_len.size, bool)]
        all_prefix_x.append(np.log(all_cps))
        all_prefix_y.append(pref)
        mu_each.append(envelope_line(np.log(np.concatenate([px, win_len])),
                                     np.concatenate([py, rand]))[1])
    N = np.concatenate(Ns)
    L = np.concatenate(Ls)
    emp_c, emp_mu = envelope_line(np.log(N), L)
    px_all, py_all = np.concatenate(all_prefix_x), np.concatenate(all_prefix_y)
    pc, pmu = envelope_line(px_all, py_all)
    pc += max(0.0, float(np.max(py_all - pc - pmu * px_all)))  # absorb rounding
    log_F = max(letter_log_bound(lam, E) for E in energies)
    log_C = 2 * log_F + float(np.logaddexp(2 * pc, 0.0))
    mu = 2 * pmu
    viol = float(np.max(L - log_C - mu * np.log(N)))
    return GrowthFit(float(lam), energies, N, L, np.concatenate(idx), np.concatenate(kind),
                     log_C, mu, viol, mu_each, pc, pmu, log_F, emp_c, emp_mu, int(max_len),
                     seed, warn)


def letter_log_bound(lam: float, E: complex) -> float:
    """``ln max(||T(lam,E,1)||, ||T(lam,E,0)||, 1)``."""
    return math.log(max(norm2x2(local_matrix(lam, E, 1)), norm2x2(local_matrix(lam, E, 0)), 1.0))


def fresh_violation(fit: GrowthFit, cf: ContinuedFraction, seed: int,
                    sample_count: int | None = None, n_lengths: int = 40) -> float:
    """Largest excess of a fresh random sample over the fitted envelope."""
    lengths = geometric_lengths(fit.max_len, n_lengths)
    k = sample_count or int(np.sum(~fit.is_prefix) // (len(lengths) * len(fit.energies)))
    windows = sample_windows(cf, lengths, k, seed)
    worst = -math.inf
    for E in fit.energies:
        L = [word_product(fit.lam, E, w).log_norm() for w in windows]
        worst = max(worst, fit.violation([len(w) for w in windows], L))
    return worst


@dataclass
class CertifiedBound:
    log_bound: float
    refined_log_bound: float
    log_norm: float
    witness: dict

    @property
    def bound(self) -> float:
        return math.exp(self.log_bound) if self.log_bound < 709 else math.inf


def certified_bound(lam: float, E: complex, w: Word, cf: ContinuedFraction,
                    baseline: GrowthFit) -> CertifiedBound:
    """Bound ``||M(w)||`` for a factor ``w`` from the prefix envelope alone.

    ``w = x y`` with ``y`` a prefix of c_alpha and ``x`` a suffix of a standard
    word, so ``x^R = b a v`` with ``v`` a prefix of c_alpha.  With
    ``F = max(||T(lam,E,1)||, ||T(lam,E,0)||, 1)`` and prefix envelope
    ``C^ |.|^mu^`` this yields ``F^2 (C^^2 + 1) |w|^(2 mu^)``; every step of the
    witness is re-checked numerically.
    """
    n = len(w)
    if n == 0:
        raise ConfigError("empty word")
    if n > baseline.max_len:
        raise ConfigError(f"baseline covers prefixes up to {baseline.max_len}, word has {n} letters")
    E = complex(E)
    tb = two_block_decomposition(w, cf)
    x, y = tb.x, tb.y
    lnF = letter_log_bound(lam, E)
    env = baseline.prefix_envelope
    slack = 1e-9

    def ln(word):
        return word_product(lam, E, word).log_norm()

    actual = ln(w)
    ly = ln(y) if len(y) else 0.0
    y_bound = env(len(y)) if len(y) else 0.0
    witness = {"t": tb.t, "x": str(x) if len(x) <= 64 else f"<{len(x)} letters>",
               "y_len": len(y), "x_len": len(x), "lnF": lnF}
    if len(x) == 0:
        log_bound = env(n)
        x_bound = lx = 0.0
        witness["case"] = "prefix"
    else:
        lx = ln(x)
        if len(x) <= 2:
            x_bound = len(x) * lnF
            witness["case"] = "short-suffix"
        else:
            xr = x.reverse()
            v = xr[2:]
            if c_prefix(cf, len(v)) != v:
                raise InternalConsistencyError(f"x^R minus two letters is not a prefix of c_alpha (t={tb.t})")
            lxr = ln(xr)
            if abs(lxr - lx) > 1e-9 * (1.0 + abs(lx)):
                raise InternalConsistencyError("reversal identity violated")
            x_bound = 2 * lnF + env(len(v))
            witness["case"] = "reversed-suffix"
            witness["v_len"] = len(v)
        log_bound = 2 * lnF + float(np.logaddexp(2 * baseline.prefix_log_C, 0.0)) \
            + 2 * baseline.prefix_mu * math.log(n)
    refined = x_bound + y_bound
    witness.update(lx=lx, ly=ly, x_bound=x_bound, y_bound=y_bound)
    if lx > x_bound + slack * (1 + abs(x_bound)) or ly > y_bound + slack * (1 + abs(y_bound)):
        raise InternalConsistencyError("prefix envelope does not cover a piece of the decomposition")
    if actual > refined + slack * (1 + abs(refined)):
        raise InternalConsistencyError("submultiplicativity check failed")
    if actual > log_bound + slack * (1 + abs(log_bound)):
        raise InternalConsistencyError(f"bound {log_bound:.6g} below actual log-norm {actual:.6g}")
    return CertifiedBound(log_bound, refined, actual, witness)
