"""Ground-truth mixtures (Gaussian, Laplace, Gumbel) and seeded sampling.

Random streams come from numpy's PCG64 seeded through ``SeedSequence``.
A Monte Carlo run gets its own child stream by putting the run's counters
in the sequence's ``spawn_key``; the mapping ``(seed, keys) -> stream`` is
fixed by numpy and recorded as :data:`GENERATOR_NAME` in reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy.special import logsumexp, zeta

from .priors import GaussianPrior

GENERATOR_NAME = "numpy-pcg64-seedsequence-v1"
FAMILIES = ("gaussian", "laplace", "gumbel")
EULER_GAMMA = 0.5772156649015329


def make_rng(seed, *keys):
    """PCG64 generator for ``seed`` and the child stream named by ``keys``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class Component:
    family: str
    weight: float
    location: float
    scale: float

    def __post_init__(self):
        fam = self.family.lower()
        if fam not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", fam)
        if not self.weight > 0:
            raise ValueError("component weight must be positive")
        if not self.scale > 0:
            raise ValueError("component scale must be positive")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        if self.family == "gaussian":
            return np.exp(-0.5 * z * z) / (self.scale * math.sqrt(2 * math.pi))
        if self.family == "laplace":
            return np.exp(-np.abs(z)) / (2 * self.scale)
        # exp(-z) overflows for very negative z; the density is 0 there
        with np.errstate(over="ignore"):
            return np.exp(-(z + np.exp(-z))) / self.scale

    def log_pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        if self.family == "gaussian":
            return -0.5 * z * z - math.log(self.scale * math.sqrt(2 * math.pi))
        if self.family == "laplace":
            return -np.abs(z) - math.log(2 * self.scale)
        with np.errstate(over="ignore"):
            return -(z + np.exp(-z)) - math.log(self.scale)

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        if self.family == "gaussian":
            from scipy.special import ndtr
            return ndtr(z)
        if self.family == "laplace":
            return np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0)), 1 - 0.5 * np.exp(-np.maximum(z, 0)))
        with np.errstate(over="ignore"):
            return np.exp(-np.exp(-z))

    def cumulants(self, order):
        """Cumulants ``kappa_1..kappa_order``."""
        s, loc = self.scale, self.location
        out = []
        for k in range(1, order + 1):
            if self.family == "gaussian":
                val = loc if k == 1 else (s * s if k == 2 else 0.0)
            elif self.family == "laplace":
                val = loc if k == 1 else (0.0 if k % 2 else 2 * factorial(k - 1) * s ** k)
            else:
                val = loc + EULER_GAMMA * s if k == 1 else factorial(k - 1) * float(zeta(k)) * s ** k
            out.append(val)
        return out

    def moments(self, order):
        """Raw moments ``E[X^k]``, ``k = 0..order``, from the cumulants."""
        kappa = [0.0] + self.cumulants(order)
        mu = [1.0]
        for k in range(1, order + 1):
            mu.append(math.fsum(comb(k - 1, j - 1) * kappa[j] * mu[k - j] for j in range(1, k + 1)))
        return mu

    def sample(self, u):
        """Map uniforms ``u`` in (0, 1) of shape ``(2, m)`` to draws."""
        if self.family == "gaussian":
            # Box-Muller, cosine branch only
            z = np.sqrt(-2.0 * np.log(u[0])) * np.cos(2.0 * math.pi * u[1])
            return self.location + self.scale * z
        if self.family == "laplace":
            c = u[0] - 0.5
            return self.location - self.scale * np.sign(c) * np.log1p(-2.0 * np.abs(c))
        return self.location - self.scale * np.log(-np.log(u[0]))


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple

    def __post_init__(self):
        comps = tuple(c if isinstance(c, Component) else Component(**c) for c in self.components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        total = math.fsum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {total}, not 1")
        object.__setattr__(self, "components", comps)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return sum(c.weight * c.pdf(x) for c in self.components)

    __call__ = pdf

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        parts = [math.log(c.weight) + c.log_pdf(x) for c in self.components]
        return logsumexp(np.stack(parts), axis=0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return sum(c.weight * c.cdf(x) for c in self.components)

    def breakpoints(self):
        """Points where the density is not smooth (Laplace peaks)."""
        return tuple(sorted({c.location for c in self.components if c.family == "laplace"}))

    def moments(self, order):
        per = [c.moments(order) for c in self.components]
        return [math.fsum(c.weight * m[k] for c, m in zip(self.components, per))
                for k in range(order + 1)]

    def to_dict(self):
        return {"components": [
            {"family": c.family, "weight": c.weight, "location": c.location, "scale": c.scale}
            for c in self.components
        ]}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(Component(**c) for c in data["components"]))


def eval_mixture(spec, x):
    return spec.pdf(x)


def _open_uniform(rng, size):
    tiny = np.finfo(float).tiny
    return np.clip(rng.random(size), tiny, 1.0 - np.finfo(float).epsneg)


def sample_mixture(spec, m, seed):
    """``m`` i.i.d. draws; ``seed`` is an int or a ``numpy.random.Generator``.

    For every draw one uniform picks the component (inverse CDF of the
    weights) and two more feed that component's transform.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"sample count must be a positive integer, got {m}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    u = _open_uniform(rng, (3, int(m)))
    cum = np.cumsum([c.weight for c in spec.components])
    cum[-1] = 1.0
    which = np.searchsorted(cum, u[0], side="right")
    which = np.minimum(which, len(spec.components) - 1)
    out = np.empty(int(m))
    for i, comp in enumerate(spec.components):
        mask = which == i
        out[mask] = comp.sample(u[1:, mask])
    return out


@dataclass(frozen=True)
class BenchmarkExample:
    id: int
    spec: MixtureSpec
    prior: GaussianPrior
    order: int
    sample_count: int
    mc_runs: int = 50


def _mix(*parts):
    return MixtureSpec(tuple(Component(*p) for p in parts))


def benchmark_example(example_id):
    """The five benchmark configurations (truth, prior, order, m, runs)."""
    table = {
        1: (_mix(("gaussian", 0.5, 2.0, 1.0), ("gaussian", 0.5, -2.0, 1.0)),
            GaussianPrior(0.0, 6.7), 4, 100),
        2: (_mix(("gaussian", 0.7, 2.0, 1.0), ("gaussian", 0.3, -2.0, 1.0)),
            GaussianPrior(-0.7, 6.2), 4, 100),
        3: (_mix(("laplace", 0.5, 2.0, 0.5), ("laplace", 0.5, -2.0, 0.5)),
            GaussianPrior(0.0, 6.5), 4, 200),
        4: (_mix(("gumbel", 0.5, 1.0, 1.0), ("gumbel", 0.5, -1.0, 1.0)),
            GaussianPrior(0.5, 3.5), 6, 200),
        5: (_mix(("gaussian", 0.3, 3.0, 1.0), ("gaussian", 0.3, -3.0, 1.0),
                 ("gaussian", 0.4, 1.0, 2.0)),
            GaussianPrior(0.3, 5.0), 6, 200),
    }
    try:
        spec, prior, order, m = table[int(example_id)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown example id {example_id!r}; expected 1..5") from None
    return BenchmarkExample(int(example_id), spec, prior, order, m)
