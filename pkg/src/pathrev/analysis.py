"""Exact law of the path-reversal cost, its generating function and moments.

Everything that is a probability is a :class:`fractions.Fraction`; floats
show up only in the asymptotic formulas and the Monte Carlo diagnostic.
"""

from __future__ import annotations

import bisect
import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

EULER_GAMMA = 0.5772156649015329
ZETA2 = math.pi ** 2 / 6
# correct value of gamma - pi^2/6 (a misprint elsewhere reads -1.6772...)
GAMMA_MINUS_ZETA2 = EULER_GAMMA - ZETA2


class AnalysisError(ValueError):
    pass


def _need(n, lo, name="n"):
    if not isinstance(n, int) or n < lo:
        raise AnalysisError(f"{name} must be an integer >= {lo}, got {n!r}")


@dataclass(frozen=True)
class HarmonicPair:
    m: int
    h: Fraction
    h2: Fraction


def harmonic(m: int) -> HarmonicPair:
    """H_m and H_m^(2) as exact fractions."""
    _need(m, 0, "m")
    h = Fraction(0)
    h2 = Fraction(0)
    for i in range(1, m + 1):
        h += Fraction(1, i)
        h2 += Fraction(1, i * i)
    return HarmonicPair(m, h, h2)


# ---------------------------------------------------------------------------
# polynomials with Fraction coefficients, index = power of z

def poly_mul(a: List[Fraction], b: List[Fraction]) -> List[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def poly_derivative_at_one(coeffs: List[Fraction], order: int) -> Fraction:
    """The order-th derivative of sum c_k z^k evaluated at z = 1."""
    total = Fraction(0)
    for k, c in enumerate(coeffs):
        if k >= order and c:
            total += c * math.perm(k, order)
    return total


@dataclass(frozen=True)
class CostDistribution:
    n: int
    probs: Dict[int, Fraction]

    def coefficients(self) -> List[Fraction]:
        top = max(self.probs, default=0)
        return [self.probs.get(k, Fraction(0)) for k in range(top + 1)]

    def __getitem__(self, k: int) -> Fraction:
        return self.probs.get(k, Fraction(0))

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def mean(self) -> Fraction:
        return poly_derivative_at_one(self.coefficients(), 1)

    def variance(self) -> Fraction:
        c = self.coefficients()
        d1 = poly_derivative_at_one(c, 1)
        return poly_derivative_at_one(c, 2) + d1 - d1 * d1

    def central_moment(self, r: int) -> Fraction:
        mu = self.mean()
        return sum((p * (k - mu) ** r for k, p in self.probs.items()), Fraction(0))

    def skewness(self) -> float:
        var = self.variance()
        if var == 0:
            return 0.0
        return float(self.central_moment(3)) / float(var) ** 1.5

    def rows(self):
        """(n, k, numerator, denominator) for every k with p > 0."""
        for k in sorted(self.probs):
            p = self.probs[k]
            yield self.n, k, p.numerator, p.denominator


def _trim(probs: Dict[int, Fraction]) -> Dict[int, Fraction]:
    return {k: p for k, p in sorted(probs.items()) if p}


def cost_distribution_recurrence(n: int) -> CostDistribution:
    """p_{n,k} = (1 - 1/(n-1)) p_{n-1,k} + 1/(n-1) p_{n-1,k-1}, p_{1,0} = 1."""
    _need(n, 1)
    p = [Fraction(1)]
    for m in range(2, n + 1):
        stay = Fraction(m - 2, m - 1)
        move = Fraction(1, m - 1)
        nxt = [Fraction(0)] * (len(p) + 1)
        for k, v in enumerate(p):
            nxt[k] += stay * v
            nxt[k + 1] += move * v
        p = nxt
    return CostDistribution(n, _trim(dict(enumerate(p))))


def cost_distribution_pgf(n: int, n1_convention: str = "empty-product") -> CostDistribution:
    """Expand prod_{j=1}^{n-1} (z + j - 1) / j.

    For n = 1 the empty product gives p_{1,0} = 1.  ``n1_convention="literal"``
    returns P_1(z) = z instead, as the recurrence's starting value is printed;
    it only changes n = 1.
    """
    _need(n, 1)
    if n1_convention not in ("empty-product", "literal"):
        raise AnalysisError(f"unknown n1_convention {n1_convention!r}")
    if n == 1 and n1_convention == "literal":
        return CostDistribution(1, {1: Fraction(1)})
    coeffs = [Fraction(1)]
    for j in range(1, n):
        coeffs = poly_mul(coeffs, [Fraction(j - 1, j), Fraction(1, j)])
    return CostDistribution(n, _trim(dict(enumerate(coeffs))))


@dataclass(frozen=True)
class Moments:
    n: int
    mean: Fraction
    variance: Fraction

    def as_dict(self):
        return {
            "n": self.n,
            "mean": str(self.mean),
            "variance": str(self.variance),
            "mean_float": float(self.mean),
            "var_float": float(self.variance),
        }


def moments(n: int, check: bool = True) -> Moments:
    """Mean H_{n-1} and variance H_{n-1} - H_{n-1}^(2), cross-checked
    against the derivatives of the expanded generating function.

    ``check=False`` skips the O(n^2) expansion for large n.
    """
    _need(n, 2)
    hp = harmonic(n - 1)
    mean, var = hp.h, hp.h - hp.h2
    if not check:
        return Moments(n, mean, var)
    dist = cost_distribution_pgf(n)
    if dist.mean() != mean or dist.variance() != var:
        raise AssertionError(f"moment routes disagree at n={n}")
    return Moments(n, mean, var)


def asymptotic_moments(n: int) -> Tuple[float, float]:
    """(ln n + gamma, ln n + gamma - pi^2/6)."""
    _need(n, 2)
    mean = math.log(n) + EULER_GAMMA
    return mean, mean - ZETA2


def appendix_recurrence_mean(n: int) -> Fraction:
    """Mean cost from the averaging recurrence
    C_{k+1} = (1/k) * sum_{i<=k} (C_i + 1), C_1 = 0."""
    _need(n, 1)
    c = Fraction(0)
    running = Fraction(0)  # sum of (C_i + 1) for i <= k
    for k in range(1, n):
        running += c + 1
        c = running / k
    return c


def appendix_recurrence_mean_short(n: int) -> Fraction:
    """Same quantity via C_{k+1} = C_k + 1/k."""
    _need(n, 1)
    c = Fraction(0)
    for k in range(1, n):
        c += Fraction(1, k)
    return c


# ---------------------------------------------------------------------------
# permutation statistics

def cycle_count(perm) -> int:
    """Number of cycles of a permutation of 0..m-1 given as a sequence."""
    seen = [False] * len(perm)
    cycles = 0
    for i in range(len(perm)):
        if not seen[i]:
            cycles += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
    return cycles


def cycle_distribution(m: int) -> Dict[int, int]:
    """Counts of permutations of [m] by cycle number (unsigned Stirling numbers)."""
    _need(m, 0, "m")
    counts: Dict[int, int] = {}
    for perm in itertools.permutations(range(m)):
        c = cycle_count(perm)
        counts[c] = counts.get(c, 0) + 1
    return counts


def stirling_cycle_check(n: int, limit: int = 8) -> bool:
    """Count permutations of [n] with exactly two cycles and compare with
    (n-1)! H_{n-1}."""
    _need(n, 1)
    if n > limit:
        raise AnalysisError(f"n={n} exceeds enumeration limit {limit}")
    count = cycle_distribution(n).get(2, 0)
    expected = math.factorial(n - 1) * harmonic(n - 1).h
    return expected.denominator == 1 and count == expected


# ---------------------------------------------------------------------------
# sampling

def sample_costs(n: int, samples: int, seed: int) -> List[int]:
    """Inverse-CDF draws from the exact cost law of size n."""
    dist = cost_distribution_pgf(n)
    ks = sorted(dist.probs)
    cdf = []
    acc = Fraction(0)
    for k in ks:
        acc += dist.probs[k]
        cdf.append(float(acc))
    cdf[-1] = 1.0
    rng = random.Random(seed)
    return [ks[bisect.bisect_right(cdf, rng.random())] for _ in range(samples)]


def normality_diagnostic(n: int, samples: int, seed: int) -> Tuple[float, float]:
    """Mean and variance of (C - H_{n-1}) / sqrt(var C) over sampled costs."""
    if n < 10 or samples < 1000:
        raise AnalysisError("normality diagnostic needs n >= 10 and samples >= 1000")
    m = moments(n)
    mu = float(m.mean)
    sd = math.sqrt(float(m.variance))
    z = [(c - mu) / sd for c in sample_costs(n, samples, seed)]
    zbar = math.fsum(z) / len(z)
    zvar = math.fsum((x - zbar) ** 2 for x in z) / (len(z) - 1)
    return zbar, zvar
