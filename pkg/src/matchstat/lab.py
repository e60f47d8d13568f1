"""Exact laws by exhaustive enumeration, Monte Carlo sampling, KS tests and moment reports."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
from scipy import special, stats

from .census import enumerate_matchings
from .counting import SPARSE_MAX_L, count_l_matchings_sparse, count_matchings, double_factorial, matchings_complete
from .formulas import (
    LogReal,
    ModelParams,
    beta,
    exact_variance,
    lam,
    mu_n_exact,
    regime_classify,
    sigma_bar,
)
from .graph import SeedSpec, gnm_sample, gnp_sample

EXACT_MAX_N = 7
DEFAULT_MAX_P = 0.95
DEFAULT_ZERO_LIMIT = 0.01
MIN_KS_SAMPLES = 20


def check_p_guard(p, max_p: float = DEFAULT_MAX_P) -> None:
    """Reject p so close to 1 that 1 - p is no longer bounded away from zero."""
    if float(p) > max_p:
        raise ValueError(f"p={p} exceeds max_p={max_p}; 1 - p must stay bounded away from 0")


# -- exhaustive oracle ----------------------------------------------------------


def _popcount(arr: np.ndarray) -> np.ndarray:
    out = np.zeros(arr.shape, dtype=np.int64)
    a = arr.astype(np.int64)
    while a.any():
        out += a & 1
        a >>= 1
    return out


@lru_cache(maxsize=32)
def joint_table(n: int, ell: int) -> np.ndarray:
    """T[x, e] = number of graphs on [n] with e edges containing exactly x ell-matchings."""
    if n > EXACT_MAX_N:
        raise ValueError(f"exhaustive enumeration needs n <= {EXACT_MAX_N}, got {n}")
    N = n * (n - 1) // 2
    size = 1 << N
    contains = np.zeros(size, dtype=np.int32)
    for M in enumerate_matchings(n, ell):
        contains[M.edge_mask(n)] += 1
    # subset-sum (zeta) transform: contains[S] becomes the number of matchings inside S
    for b in range(N):
        view = contains.reshape(-1, 2, 1 << b)
        view[:, 1, :] += view[:, 0, :]
    edges = _popcount(np.arange(size, dtype=np.int64))
    s = int(contains.max()) if size else 0
    table = np.zeros((s + 1, N + 1), dtype=np.int64)
    np.add.at(table, (contains, edges), 1)
    return table


@dataclass
class ExactDistribution:
    n: int
    ell: int
    p: Fraction
    support: dict[int, Fraction]

    def probabilities(self) -> dict[int, float]:
        return {x: float(q) for x, q in self.support.items()}

    def total(self) -> Fraction:
        return sum(self.support.values(), Fraction(0))

    def raw_moment(self, k: int) -> Fraction:
        return sum((Fraction(x) ** k * q for x, q in self.support.items()), Fraction(0))

    def mean(self) -> Fraction:
        return self.raw_moment(1)

    def central_moment(self, k: int) -> Fraction:
        mu = self.mean()
        return sum(((x - mu) ** k * q for x, q in self.support.items()), Fraction(0))


def _as_fraction(p) -> Fraction:
    if isinstance(p, float):
        return Fraction(str(p))
    return Fraction(p)


def exact_distribution(n: int, ell: int, p) -> ExactDistribution:
    """Law of the ell-matching count in G(n, p) over all 2^C(n,2) graphs, as exact rationals."""
    p = _as_fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p={p} outside [0, 1]")
    table = joint_table(n, ell)
    N = table.shape[1] - 1
    weights = [p**e * (1 - p) ** (N - e) for e in range(N + 1)]
    support = {}
    for x in range(table.shape[0]):
        row = table[x]
        if not row.any():
            continue
        prob = sum((int(c) * w for c, w in zip(row.tolist(), weights) if c), Fraction(0))
        if prob:
            support[x] = prob
    return ExactDistribution(n, ell, p, support)


def exact_central_moment(n: int, ell: int, p, k: int) -> Fraction:
    return exact_distribution(n, ell, p).central_moment(k)


def gnm_exhaustive_mean(n: int, ell: int, m: int) -> Fraction:
    """Mean count over all C(N, m) graphs with m edges."""
    table = joint_table(n, ell)
    N = table.shape[1] - 1
    if not 0 <= m <= N:
        raise ValueError(f"m={m} outside [0, {N}]")
    col = table[:, m].tolist()
    return Fraction(sum(x * c for x, c in enumerate(col)), comb(N, m))


# -- Monte Carlo ----------------------------------------------------------------


@dataclass(frozen=True)
class Backends:
    sparse_max_l: int = SPARSE_MAX_L
    poly_max_n: int = 28

    def pick(self, n: int, ell: int) -> str:
        if ell <= min(self.sparse_max_l, SPARSE_MAX_L):
            return "sparse"
        if n <= self.poly_max_n:
            return "poly"
        raise ValueError(f"no exact backend for n={n}, ell={ell} (sparse needs ell <= {self.sparse_max_l}, "
                         f"poly needs n <= {self.poly_max_n})")


@dataclass
class SampleSet:
    model: str
    n: int
    ell: int
    p: float | None
    m: int | None
    seed: int
    counts: list[int]
    backend: str = ""

    @property
    def trials(self) -> int:
        return len(self.counts)

    @property
    def zero_count(self) -> int:
        return sum(1 for x in self.counts if x == 0)


def _draw(model: str, n: int, p, m, seed: int, trial: int):
    spec = SeedSpec(seed, trial)
    if model == "gnp":
        return gnp_sample(n, p, spec)
    return gnm_sample(n, m, spec)


def _count_chunk(args) -> list:
    model, n, p, m, seed, ells, backend, lo, hi = args
    out = []
    for t in range(lo, hi):
        G = _draw(model, n, p, m, seed, t)
        if backend == "poly":
            cv = count_matchings(G, cap=max(n, 1))
            out.append([cv[ell] for ell in ells])
        else:
            out.append([count_l_matchings_sparse(G, ell) for ell in ells])
    return out


def _run_trials(model, n, p, m, seed, ells, backend, trials, threads) -> list[list[int]]:
    if trials == 0:
        return []
    threads = max(1, int(threads))
    if threads == 1:
        return _count_chunk((model, n, p, m, seed, ells, backend, 0, trials))
    step = max(1, math.ceil(trials / (threads * 4)))
    jobs = [(model, n, p, m, seed, ells, backend, lo, min(trials, lo + step)) for lo in range(0, trials, step)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_count_chunk, jobs))
    return [row for part in parts for row in part]


def _validate_model(model, n, p, m, max_p):
    if model not in ("gnp", "gnm"):
        raise ValueError(f"model must be 'gnp' or 'gnm', got {model!r}")
    if model == "gnp":
        if p is None or not 0 < float(p) < 1:
            raise ValueError("gnp needs 0 < p < 1")
        check_p_guard(p, max_p)
    else:
        N = n * (n - 1) // 2
        if m is None or not 0 <= m <= N:
            raise ValueError(f"gnm needs 0 <= m <= {N}")


def mc_sample(model: str, n: int, ell: int, trials: int, seed: int, p: float | None = None, m: int | None = None,
              threads: int = 1, backends: Backends = Backends(), max_p: float = DEFAULT_MAX_P) -> SampleSet:
    """Independent counts, trial t drawn from the stream (seed, t); results do not depend on `threads`."""
    _validate_model(model, n, p, m, max_p)
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    backend = backends.pick(n, ell)
    rows = _run_trials(model, n, p, m, seed, (ell,), backend, trials, threads)
    return SampleSet(model, n, ell, p, m, seed, [r[0] for r in rows], backend)


# -- KS against the standard normal ---------------------------------------------------


@dataclass(frozen=True)
class KSResult:
    D: float
    size: int
    p_value: float
    reference: str = "standard normal"


def ks_vs_normal(samples) -> KSResult:
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    if m < MIN_KS_SAMPLES:
        raise ValueError(f"KS test needs at least {MIN_KS_SAMPLES} samples, got {m}")
    cdf = special.ndtr(x)
    i = np.arange(1, m + 1)
    D = float(max((i / m - cdf).max(), (cdf - (i - 1) / m).max()))
    return KSResult(D, m, float(special.kolmogorov(math.sqrt(m) * D)))


# -- normalised statistics ---------------------------------------------------------------


def linear_statistics(counts, params: ModelParams) -> np.ndarray:
    lam_v, sb = lam(params), sigma_bar(params)
    return np.array([float((LogReal.of(int(x)) - lam_v) / sb) for x in counts])


def log_statistics(counts, params: ModelParams) -> np.ndarray:
    """(ln(x / lambda) + beta^2/2) / beta over the positive counts."""
    b = beta(params)
    log_lam = lam(params).log
    return np.array([(math.log(x) - log_lam + b * b / 2) / b for x in counts if x > 0])


@dataclass
class LimitLawResult:
    normal: KSResult
    lognormal: KSResult | None
    zero_fraction: float
    regime: str
    samples: SampleSet


def limit_law_experiment(n: int, ell: int, p: float, trials: int, seed: int, threads: int = 1,
                         strict: bool = True, zero_limit: float = DEFAULT_ZERO_LIMIT,
                         backends: Backends = Backends(), max_p: float = DEFAULT_MAX_P,
                         regime_c: float = 1.0, regime_tol: float = 0.1) -> LimitLawResult:
    """KS distance to N(0,1) of the linear and the log statistic on one G(n, p) sample.

    Zero counts are dropped from the log statistic; outside the subcritical regime more
    than `zero_limit` of them is an error unless strict=False.
    """
    params = ModelParams(n, ell, p)
    check_p_guard(p, max_p)
    ss = mc_sample("gnp", n, ell, trials, seed, p=p, threads=threads, backends=backends, max_p=max_p)
    regime = regime_classify(params, regime_c, regime_tol).classification
    zero_fraction = ss.zero_count / trials if trials else 0.0
    if strict and regime != "subcritical" and zero_fraction > zero_limit:
        raise ValueError(f"{zero_fraction:.1%} zero counts exceed the {zero_limit:.0%} limit for the log statistic")
    normal = ks_vs_normal(linear_statistics(ss.counts, params))
    logs = log_statistics(ss.counts, params)
    lognormal = ks_vs_normal(logs) if logs.size >= MIN_KS_SAMPLES else None
    return LimitLawResult(normal, lognormal, zero_fraction, regime, ss)


# -- moments -----------------------------------------------------------------------


@dataclass
class MomentRow:
    k: int
    measured: float
    theory: float
    ratio: float
    std_error: float | None = None
    exact: Fraction | None = None


@dataclass
class MomentReport:
    n: int
    ell: int
    p: float
    source: str
    rows: list[MomentRow] = field(default_factory=list)


def _theory(k: int, sb: float) -> float:
    return double_factorial(k - 1) * sb**k if k % 2 == 0 else 0.0


def moment_report(n: int, ell: int, p, k_max: int, source: str = "exact", trials: int = 0, seed: int = 0,
                  threads: int = 1, max_p: float = DEFAULT_MAX_P, backends: Backends = Backends()) -> MomentReport:
    """Central moments against (k-1)!! sigma_bar^k; odd k are reported as |moment| / sigma_bar^k."""
    params = ModelParams(n, ell, float(p))
    check_p_guard(p, max_p)
    sb = float(sigma_bar(params))
    report = MomentReport(n, ell, float(p), source)

    def row(k, value, se=None, exact=None):
        th = _theory(k, sb)
        ratio = value / th if k % 2 == 0 else abs(value) / sb**k
        rse = None if se is None else (se / th if k % 2 == 0 else se / sb**k)
        report.rows.append(MomentRow(k, value, th, ratio, rse, exact))

    if source == "exact":
        dist = exact_distribution(n, ell, _as_fraction(p))
        for k in range(2, k_max + 1):
            v = dist.central_moment(k)
            row(k, float(v), exact=v)
    elif source == "identity":
        if k_max != 2:
            raise ValueError("the identity source provides k = 2 only")
        v = exact_variance(n, ell, _as_fraction(p))
        row(2, float(v), exact=v)
    elif source == "mc":
        if trials < 2:
            raise ValueError("mc moments need at least 2 trials")
        ss = mc_sample("gnp", n, ell, trials, seed, p=float(p), threads=threads, backends=backends, max_p=max_p)
        x = np.array(ss.counts, dtype=float)
        dev = x - x.mean()
        for k in range(2, k_max + 1):
            v = float(np.mean(dev**k))
            se = float(np.std(dev**k, ddof=1) / math.sqrt(trials))
            row(k, v, se=se)
    else:
        raise ValueError(f"unknown moment source {source!r}")
    return report


# -- transition scan ----------------------------------------------------------------


@dataclass
class ScanRow:
    ell: int
    skewness: float
    ks_normal: float
    ks_lognormal: float | None
    zero_fraction: float
    regime: str
    ratio: float


def transition_scan(n: int, p: float, ells, trials: int, seed: int, threads: int = 1,
                    backends: Backends = Backends(), max_p: float = DEFAULT_MAX_P,
                    regime_c: float = 1.0, regime_tol: float = 0.1) -> list[ScanRow]:
    """Per ell: skewness and KS distances of both statistics on a shared set of G(n, p) graphs."""
    ells = sorted(set(ells))
    for ell in ells:
        ModelParams(n, ell, p)
    check_p_guard(p, max_p)
    if n <= backends.poly_max_n:
        rows = _run_trials("gnp", n, p, None, seed, tuple(ells), "poly", trials, threads)
    else:
        for ell in ells:
            backends.pick(n, ell)
        rows = _run_trials("gnp", n, p, None, seed, tuple(ells), "sparse", trials, threads)
    out = []
    for col, ell in enumerate(ells):
        params = ModelParams(n, ell, p)
        counts = [r[col] for r in rows]
        lin = linear_statistics(counts, params)
        logs = log_statistics(counts, params)
        skew = float(stats.skew(lin, bias=False)) if np.ptp(lin) > 0 else 0.0
        rep = regime_classify(params, regime_c, regime_tol)
        out.append(ScanRow(
            ell,
            skew,
            ks_vs_normal(lin).D,
            ks_vs_normal(logs).D if logs.size >= MIN_KS_SAMPLES else None,
            sum(1 for x in counts if x == 0) / len(counts) if counts else 0.0,
            rep.classification,
            rep.ratio,
        ))
    return out


def gnm_mean_ratio(ss: SampleSet) -> tuple[float, float]:
    """Sample mean of X / mu_n and its standard error, for a G(n, m) sample."""
    N = ss.n * (ss.n - 1) // 2
    mu = mu_n_exact(N, ss.m, matchings_complete(ss.n, ss.ell), ss.ell)
    r = np.array([float(Fraction(x) / mu) for x in ss.counts])
    return float(r.mean()), float(r.std(ddof=1) / math.sqrt(r.size))
