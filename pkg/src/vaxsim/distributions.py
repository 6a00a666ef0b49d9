"""Sampling distributions for processing times, lead times and outcomes.

Parameters are validated when a distribution is constructed (i.e. at config
load), never at sample time. Constant draws consume no random numbers; every
stochastic variant consumes exactly one uniform (lognormal: one normal) per
sample so that substream consumption is easy to reason about.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DistributionError(ValueError):
    """Invalid distribution parameters."""


@dataclass(frozen=True)
class Distribution:
    """Tagged distribution: constant, triangular, lognormal, uniform, bernoulli.

    Lognormal is parameterized by (median, multiplicative scale): a draw is
    ``median * exp(ln(scale) * Z)`` with Z standard normal, so the median is
    the config value and ``scale`` controls spread (scale=1 degenerates to the
    median exactly).
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        p = self.params
        if self.kind == "constant":
            if len(p) != 1:
                raise DistributionError("constant takes exactly one value")
        elif self.kind == "triangular":
            if len(p) != 3:
                raise DistributionError("triangular takes (min, mode, max)")
            lo, mode, hi = p
            if not (lo <= mode <= hi):
                raise DistributionError(
                    f"triangular requires min <= mode <= max, got {p}")
        elif self.kind == "lognormal":
            if len(p) != 2:
                raise DistributionError("lognormal takes (median, scale)")
            median, scale = p
            if median <= 0:
                raise DistributionError(f"lognormal median must be > 0, got {median}")
            if scale < 1:
                raise DistributionError(
                    f"lognormal scale must be >= 1, got {scale}")
        elif self.kind == "uniform":
            if len(p) != 2:
                raise DistributionError("uniform takes (lo, hi)")
            if p[0] > p[1]:
                raise DistributionError(f"uniform requires lo <= hi, got {p}")
        elif self.kind == "bernoulli":
            if len(p) != 1:
                raise DistributionError("bernoulli takes (p,)")
            if not 0.0 <= p[0] <= 1.0:
                raise DistributionError(f"bernoulli p must be in [0, 1], got {p[0]}")
        else:
            raise DistributionError(f"unknown distribution kind {self.kind!r}")

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw one value (size=None) or a vector of values."""
        p = self.params
        if self.kind == "constant":
            return p[0] if size is None else np.full(size, p[0])
        if self.kind == "triangular":
            u = rng.random() if size is None else rng.random(size)
            return _triangular_ppf(u, *p)
        if self.kind == "lognormal":
            z = rng.standard_normal() if size is None else rng.standard_normal(size)
            median, scale = p
            return median * np.exp(math.log(scale) * z)
        if self.kind == "uniform":
            lo, hi = p
            u = rng.random() if size is None else rng.random(size)
            return lo + (hi - lo) * u
        # bernoulli
        u = rng.random() if size is None else rng.random(size)
        return (u < p[0]) if size is None else (u < p[0]).astype(float)

    def mean(self) -> float:
        """Analytic mean, used by statistical self-checks."""
        p = self.params
        if self.kind == "constant":
            return p[0]
        if self.kind == "triangular":
            return sum(p) / 3.0
        if self.kind == "lognormal":
            median, scale = p
            sigma = math.log(scale)
            return median * math.exp(sigma * sigma / 2.0)
        if self.kind == "uniform":
            return (p[0] + p[1]) / 2.0
        return p[0]

    def variance(self) -> float:
        p = self.params
        if self.kind == "constant":
            return 0.0
        if self.kind == "triangular":
            a, m, b = p
            return (a * a + m * m + b * b - a * m - a * b - m * b) / 18.0
        if self.kind == "lognormal":
            median, scale = p
            s2 = math.log(scale) ** 2
            return (math.exp(s2) - 1.0) * median * median * math.exp(s2)
        if self.kind == "uniform":
            return (p[1] - p[0]) ** 2 / 12.0
        return p[0] * (1.0 - p[0])

    def scaled(self, factor: float) -> "Distribution":
        """Distribution with every location parameter multiplied by ``factor``.

        Bernoulli has no time scale and is rejected.
        """
        if factor <= 0:
            raise DistributionError(f"scale factor must be > 0, got {factor}")
        if self.kind == "bernoulli":
            raise DistributionError("cannot scale a bernoulli distribution")
        if self.kind == "lognormal":
            median, scale = self.params
            return Distribution("lognormal", (median * factor, scale))
        return Distribution(self.kind, tuple(p * factor for p in self.params))

    def support(self) -> tuple[float, float]:
        p = self.params
        if self.kind == "constant":
            return (p[0], p[0])
        if self.kind == "triangular":
            return (p[0], p[2])
        if self.kind == "lognormal":
            return (0.0, math.inf)
        if self.kind == "uniform":
            return (p[0], p[1])
        return (0.0, 1.0)


def _triangular_ppf(u, lo: float, mode: float, hi: float):
    """Inverse-CDF transform; handles the degenerate lo == hi case."""
    span = hi - lo
    if span == 0.0:
        return lo if np.isscalar(u) else np.full(np.shape(u), lo)
    c = (mode - lo) / span
    if np.isscalar(u):
        if u < c:
            return lo + math.sqrt(u * span * (mode - lo))
        return hi - math.sqrt((1.0 - u) * span * (hi - mode))
    out = np.where(
        u < c,
        lo + np.sqrt(u * span * (mode - lo)),
        hi - np.sqrt((1.0 - u) * span * (hi - mode)),
    )
    return out


def constant(v: float) -> Distribution:
    return Distribution("constant", (float(v),))


def triangular(lo: float, mode: float, hi: float) -> Distribution:
    return Distribution("triangular", (float(lo), float(mode), float(hi)))


def lognormal(median: float, scale: float) -> Distribution:
    return Distribution("lognormal", (float(median), float(scale)))


def uniform(lo: float, hi: float) -> Distribution:
    return Distribution("uniform", (float(lo), float(hi)))


def bernoulli(p: float) -> Distribution:
    return Distribution("bernoulli", (float(p),))


def from_config(node) -> Distribution:
    """Parse a distribution from its config form.

    Accepted forms::

        {constant: 2.0}
        {triangular: [6, 8, 12]}
        {lognormal: {median: 1.5, scale: 1.4}}   # or [median, scale]
        {uniform: [0, 1]}
        {bernoulli: 0.05}
        3.5                                       # shorthand for constant
    """
    if isinstance(node, (int, float)) and not isinstance(node, bool):
        return constant(float(node))
    if not isinstance(node, dict) or len(node) != 1:
        raise DistributionError(f"malformed distribution spec: {node!r}")
    kind, args = next(iter(node.items()))
    if kind == "constant":
        return constant(_scalar(args))
    if kind == "triangular":
        a, m, b = _triple(args)
        return triangular(a, m, b)
    if kind == "lognormal":
        if isinstance(args, dict):
            return lognormal(float(args["median"]), float(args["scale"]))
        a, b = _pair(args)
        return lognormal(a, b)
    if kind == "uniform":
        a, b = _pair(args)
        return uniform(a, b)
    if kind == "bernoulli":
        return bernoulli(_scalar(args))
    raise DistributionError(f"unknown distribution kind {kind!r}")


def to_config(dist: Distribution):
    """Inverse of ``from_config``, used when echoing configs into reports."""
    if dist.kind == "constant":
        return {"constant": dist.params[0]}
    if dist.kind == "lognormal":
        return {"lognormal": {"median": dist.params[0], "scale": dist.params[1]}}
    return {dist.kind: list(dist.params)}


def _scalar(args) -> float:
    if isinstance(args, (list, tuple)):
        if len(args) != 1:
            raise DistributionError(f"expected a single value, got {args!r}")
        args = args[0]
    return float(args)


def _pair(args) -> tuple[float, float]:
    if not isinstance(args, (list, tuple)) or len(args) != 2:
        raise DistributionError(f"expected [a, b], got {args!r}")
    return float(args[0]), float(args[1])


def _triple(args) -> tuple[float, float, float]:
    if not isinstance(args, (list, tuple)) or len(args) != 3:
        raise DistributionError(f"expected [min, mode, max], got {args!r}")
    return float(args[0]), float(args[1]), float(args[2])
