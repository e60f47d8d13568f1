"""Closed-form quantities for l-matching counts, in log space where they overflow floats."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, lgamma, log

from .counting import delta_r, double_factorial, matchings_complete

DEFAULT_DELTA = Fraction(9, 10)
DEFAULT_REGIME_C = 1.0
DEFAULT_REGIME_TOL = 0.1


@dataclass(frozen=True)
class LogReal:
    """sign * exp(log); sign 0 means exactly zero (log is then ignored)."""

    sign: int
    log: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")

    @classmethod
    def zero(cls) -> LogReal:
        return cls(0, -math.inf)

    @classmethod
    def of(cls, x) -> LogReal:
        """From int, Fraction or float; big integers keep full precision in the log."""
        if isinstance(x, LogReal):
            return x
        if x == 0:
            return cls.zero()
        sign = 1 if x > 0 else -1
        ax = -x if sign < 0 else x
        if isinstance(ax, Fraction):
            return cls(sign, _log_int(ax.numerator) - _log_int(ax.denominator))
        if isinstance(ax, int):
            return cls(sign, _log_int(ax))
        return cls(sign, math.log(ax))

    @classmethod
    def exp(cls, logx: float) -> LogReal:
        return cls(1, logx)

    def __mul__(self, other) -> LogReal:
        other = LogReal.of(other)
        if self.sign == 0 or other.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.log + other.log)

    __rmul__ = __mul__

    def __truediv__(self, other) -> LogReal:
        other = LogReal.of(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        if self.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.log - other.log)

    def __neg__(self) -> LogReal:
        return LogReal(-self.sign, self.log)

    def __add__(self, other) -> LogReal:
        other = LogReal.of(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log >= other.log else (other, self)
        d = lo.log - hi.log
        if hi.sign == lo.sign:
            return LogReal(hi.sign, hi.log + math.log1p(math.exp(d)))
        if d == 0.0:
            return LogReal.zero()
        return LogReal(hi.sign, hi.log + math.log1p(-math.exp(d)))

    __radd__ = __add__

    def __sub__(self, other) -> LogReal:
        return self + (-LogReal.of(other))

    def __pow__(self, k: float) -> LogReal:
        if self.sign == 0:
            return LogReal.zero() if k > 0 else LogReal(1, 0.0)
        if self.sign < 0 and k != int(k):
            raise ValueError("fractional power of a negative LogReal")
        sign = -1 if self.sign < 0 and int(k) % 2 else 1
        return LogReal(sign, self.log * k)

    def sqrt(self) -> LogReal:
        return self ** 0.5

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log)

    def __repr__(self):
        return f"LogReal(sign={self.sign}, log={self.log!r})"


def _log_int(x: int) -> float:
    # math.log accepts arbitrarily large ints exactly
    return math.log(x)


def log_comb(a: int, b: int) -> float:
    if b < 0 or b > a:
        return -math.inf
    return lgamma(a + 1) - lgamma(b + 1) - lgamma(a - b + 1)


def log_double_factorial_odd(m: int) -> float:
    """log of m!! for odd m >= -1."""
    if m == -1:
        return 0.0
    if m < -1 or m % 2 == 0:
        raise ValueError("expected odd m >= -1")
    h = (m + 1) // 2
    return lgamma(2 * h + 1) - h * math.log(2) - lgamma(h + 1)


# -- parameters ------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    n: int
    ell: int
    p: float
    m: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 1 <= self.ell <= self.n // 2:
            raise ValueError(f"ell={self.ell} outside [1, floor(n/2)={self.n // 2}]")
        if not 0.0 < float(self.p) < 1.0:
            raise ValueError(f"p={self.p} outside (0, 1)")
        if self.m is not None and not 0 <= self.m <= self.N:
            raise ValueError(f"m={self.m} outside [0, N={self.N}]")

    @property
    def N(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def s(self) -> int:
        return matchings_complete(self.n, self.ell)


@dataclass(frozen=True)
class RegimeReport:
    ratio: float
    classification: str
    c: float
    tol: float


# -- means, variances, normalisers ----------------------------------------


def log_matchings_complete(n: int, ell: int) -> float:
    return log_comb(n, 2 * ell) + log_double_factorial_odd(2 * ell - 1)


def lam(params: ModelParams) -> LogReal:
    """Expected number of ell-matchings in G(n, p)."""
    return LogReal.exp(log_matchings_complete(params.n, params.ell) + params.ell * log(params.p))


def lam_exact(n: int, ell: int, p: Fraction) -> Fraction:
    return matchings_complete(n, ell) * Fraction(p) ** ell


def sigma_bar(params: ModelParams) -> LogReal:
    n, ell, p = params.n, params.ell, params.p
    log_comb_part = (
        log(ell)
        + log_comb(n, 2 * ell)
        + log_comb(n - 2, 2 * ell - 2)
        + log_double_factorial_odd(2 * ell - 1)
        + log_double_factorial_odd(2 * ell - 3)
    )
    log_p_part = (2 * ell - 1) * log(p) + math.log1p(-p)
    return LogReal.exp(0.5 * (log_comb_part + log_p_part))


def sigma_bar_sq_exact(n: int, ell: int, p: Fraction) -> Fraction:
    p = Fraction(p)
    coef = ell * comb(n, 2 * ell) * comb(n - 2, 2 * ell - 2) * double_factorial(2 * ell - 1) * double_factorial(2 * ell - 3)
    return coef * (p ** (2 * ell - 1) - p ** (2 * ell))


def beta(params: ModelParams) -> float:
    return params.ell * math.sqrt((1 - params.p) / (params.p * params.N))


def exact_variance(n: int, ell: int, p: Fraction) -> Fraction:
    """Var X in G(n, p) from the shared-edge pair counts: sum_{i>=1} f_i (p^{2l-i} - p^{2l})."""
    p = Fraction(p)
    base = p ** (2 * ell)
    return sum((f_exact(n, ell, i) * (p ** (2 * ell - i) - base) for i in range(1, ell + 1)), Fraction(0))


def second_moment_exact(n: int, ell: int, p: Fraction) -> Fraction:
    p = Fraction(p)
    return sum((f_exact(n, ell, i) * p ** (2 * ell - i) for i in range(ell + 1)), Fraction(0))


def mu_n(params: ModelParams, s: int, h: int) -> LogReal:
    """Mean count in G(n, m): s * C(N-h, m-h) / C(N, m) = s * [m]_h / [N]_h."""
    m, N = params.m, params.N
    if m is None:
        raise ValueError("mu_n needs the edge count m")
    if h > m:
        raise ValueError(f"h={h} exceeds m={m}")
    logv = _log_int(s) + log_comb(N - h, m - h) - log_comb(N, m)
    return LogReal.exp(logv)


def mu_n_exact(N: int, m: int, s: int, h: int) -> Fraction:
    if h > m:
        raise ValueError(f"h={h} exceeds m={m}")
    return Fraction(s * comb(N - h, m - h), comb(N, m))


def mu_n_approx(params: ModelParams, s: int, h: int) -> LogReal:
    """s (m/N)^h exp(-(N-m) h^2 / (2 m N)), the large-h simplification of mu_n."""
    m, N = params.m, params.N
    if not m:
        raise ValueError("mu_n_approx needs m > 0")
    logv = _log_int(s) + h * (log(m) - log(N)) - (N - m) / (m * N) * h * h / 2
    return LogReal.exp(logv)


# -- shared-edge pair counts -------------------------------------------------


def f_exact(n: int, ell: int, i: int) -> int:
    """Ordered pairs of ell-matchings of K_n sharing exactly i edges (inclusion-exclusion)."""
    if not 0 <= i <= ell:
        raise ValueError(f"i={i} outside [0, {ell}]")
    s = matchings_complete(n, ell)
    total = 0
    for j in range(i, ell + 1):
        term = comb(j, i) * comb(ell, j) * delta_r(n, ell, j)
        total += -term if (j - i) % 2 else term
    return s * total


def z_of_i(n: int, ell: int, i: int) -> float:
    if 2 * i >= n:
        raise ValueError(f"z(i) needs 2i < n (i={i}, n={n})")
    return 4 * (ell - i) ** 2 / (n - 2 * i)


def f_prime(n: int, ell: int, i: int, f_at_mode: int, delta=DEFAULT_DELTA) -> float:
    """Gaussian-sum approximation of f_i built from the census value at the n2 mode."""
    if i > delta * ell:
        raise ValueError(f"f_prime needs i <= {delta} * ell")
    z = z_of_i(n, ell, i)
    d1 = 2 * z
    d2 = 2 * ell - z - 2 * i
    d3 = 2 * (n - 4 * ell + z + 2 * i)
    if min(d1, d2, d3) <= 0:
        raise ValueError(f"nonpositive denominator in f_prime at n={n}, ell={ell}, i={i}")
    return math.sqrt(math.pi) * (1 / d1 + 1 / d2 + 1 / d3) ** -0.5 * f_at_mode


def f_at_mode(table, i: int) -> int:
    """Census value f(i, floor(z(i)) + 2i)."""
    n2 = math.floor(z_of_i(table.n, table.ell, i)) + 2 * i
    return table.f(i, n2)


def _check_ratio_range(ell: int, i: int) -> None:
    if i < 1:
        raise ValueError("ratio predictions need i >= 1")
    if i > (9 * ell) // 10:
        raise ValueError(f"i={i} above floor(9*ell/10)={9 * ell // 10}")


def ratio_leading(n: int, ell: int, i: int) -> float:
    """Leading-order f_i / f_{i-1} for near-perfect matchings: n^2 / (8 i ell^2)."""
    _check_ratio_range(ell, i)
    return n * n / (8 * i * ell * ell)


def ratio_leading_prime(n: int, ell: int, i: int) -> float:
    """Leading-order f'_i / f'_{i-1}: z(i)^2 / (8 i (ell - i)^2)."""
    _check_ratio_range(ell, i)
    return z_of_i(n, ell, i) ** 2 / (8 * i * (ell - i) ** 2)


def exact_ratio(n: int, ell: int, i: int) -> Fraction:
    return Fraction(f_exact(n, ell, i), f_exact(n, ell, i - 1))


# -- normalised statistics -------------------------------------------------


def normalized_subcritical(x, params: ModelParams) -> float:
    """(x - lambda) / sigma_bar."""
    lam_v = lam(params)
    return float((LogReal.of(x) - lam_v) / sigma_bar(params))


def normalized_supercritical(x, params: ModelParams) -> float:
    """(ln(x / lambda) + beta^2 / 2) / beta, for x > 0."""
    x = x if isinstance(x, LogReal) else LogReal.of(x)
    if x.sign <= 0:
        raise ValueError("supercritical statistic needs x > 0")
    b = beta(params)
    return (x.log - lam(params).log + b * b / 2) / b


# -- concentration conditions in G(n, m) ------------------------------------


@dataclass
class ConcentrationReport:
    rho: float
    gamma: int
    deviations: dict[int, float]
    b_flags: dict[int, bool]
    tail_ratio: float


def concentration_report(n: int, ell: int, m: int, ratios: dict[int, float], K: float = 1.0,
                           delta=DEFAULT_DELTA) -> ConcentrationReport:
    """Numeric view of conditions (a)-(c): deviations of r_j, the r_j <= m/2N flags, and the tail ratio."""
    N = n * (n - 1) // 2
    h = ell
    rho = h * h / m
    gamma = math.floor(delta * ell)
    deviations = {}
    for j in sorted(ratios):
        if 1 <= j <= K * rho and j <= gamma:
            target = h * h / (N * j)
            deviations[j] = (ratios[j] - target) / target
    bound = m / (2 * N)
    b_flags = {j: ratios[j] <= bound for j in sorted(ratios) if 4 * rho <= j <= gamma}
    return ConcentrationReport(rho, gamma, deviations, b_flags, tail_ratio(n, ell, m, delta))


def tail_ratio(n: int, ell: int, m: int, delta=DEFAULT_DELTA) -> float:
    """sum_{i >= ceil(delta*ell)} f_i / (s * mu_n), exact up to the final division."""
    if delta <= Fraction(4, 5):
        raise ValueError("delta must exceed 4/5")
    N = n * (n - 1) // 2
    s = matchings_complete(n, ell)
    start = math.ceil(Fraction(delta) * ell)
    tail = sum(f_exact(n, ell, i) for i in range(start, ell + 1))
    mu = mu_n_exact(N, m, s, ell)
    if mu == 0:
        return math.inf
    return float(LogReal.of(Fraction(tail)) / LogReal.of(s * mu))


def regime_classify(params: ModelParams, c: float = DEFAULT_REGIME_C, tol: float = DEFAULT_REGIME_TOL) -> RegimeReport:
    ratio = params.ell / (params.n * math.sqrt(params.p))
    if ratio < c * (1 - tol):
        label = "subcritical"
    elif ratio > c * (1 + tol):
        label = "supercritical"
    else:
        label = "boundary"
    return RegimeReport(ratio, label, c, tol)
