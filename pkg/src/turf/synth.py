"""Ground-truth mixture models, spiky perturbations and seeded samplers."""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from turf.measures import SampleSet
from turf.numerics import Interval

FAMILIES = ("beta", "gamma", "gaussian")
BISECT_TOL = 1e-10
_CHUNK = 1 << 15


def stream(seed: int, *keys) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``; keys may be ints or strings."""
    spawn = tuple(k if isinstance(k, int) else zlib.crc32(str(k).encode()) for k in keys)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=spawn)))


@dataclass(frozen=True)
class Component:
    """One mixture component. Gamma uses (shape, scale); Gaussian uses (mean, sd)."""

    family: str
    params: tuple
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if len(self.params) != 2:
            raise ValueError("every family takes two parameters")
        a, b = self.params
        if self.family in ("beta", "gamma") and not (a > 0 and b > 0):
            raise ValueError(f"{self.family} parameters must be positive")
        if self.family == "gaussian" and not b > 0:
            raise ValueError("gaussian sd must be positive")
        if not self.weight >= 0:
            raise ValueError("weights must be non-negative")

    @property
    def dist(self):
        a, b = self.params
        if self.family == "beta":
            return stats.beta(a, b)
        if self.family == "gamma":
            return stats.gamma(a, scale=b)
        return stats.norm(a, b)

    def bracket(self) -> tuple[float, float]:
        if self.family == "beta":
            return 0.0, 1.0
        lo, hi = self.dist.ppf([1e-16, 1.0 - 1e-16])
        if self.family == "gamma":
            lo = 0.0
        return float(lo), float(hi)

    def singular_points(self) -> list[float]:
        a, b = self.params
        if self.family == "beta":
            return [p for p, s in ((0.0, a), (1.0, b)) if s < 1]
        if self.family == "gamma" and a < 1:
            return [0.0]
        return []

    def features(self) -> list[float]:
        a, b = self.params
        if self.family == "beta":
            return [0.0, 1.0]
        if self.family == "gamma":
            return [0.0, (a - 1) * b if a > 1 else 0.0]
        return [a - 3 * b, a, a + 3 * b]

    def to_dict(self) -> dict:
        return {"family": self.family, "params": list(self.params), "weight": self.weight}


class _Model:
    """Shared quantile/support logic; subclasses supply pdf, cdf, sample, bracket."""

    def bracket(self) -> tuple[float, float]:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, q: float) -> float:
        """Quantile by bracketed root finding on the cdf."""
        lo, hi = self.bracket()
        if q <= self.cdf(lo):
            return lo
        if q >= self.cdf(hi):
            return hi
        return float(optimize.brentq(lambda x: float(self.cdf(x)) - q, lo, hi, xtol=BISECT_TOL, rtol=1e-15))

    def effective_support(self, trim: float) -> Interval:
        """Quantile interval after trimming ``trim`` mass from each side."""
        if not 0 < trim < 0.5:
            raise ValueError("trim must lie in (0, 0.5)")
        return Interval(self.ppf(trim), self.ppf(1.0 - trim), closed=True)

    def draw(self, seed: int, count: int, *keys) -> SampleSet:
        return self.sample(stream(seed, *keys), count)


class DistributionModel(_Model):
    """Finite mixture of Beta, Gamma and Gaussian components."""

    def __init__(self, components):
        comps = [c if isinstance(c, Component) else Component(**c) for c in components]
        if not comps:
            raise ValueError("a model needs at least one component")
        w = np.array([c.weight for c in comps])
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("component weights must sum to 1")
        self.components = tuple(comps)
        self.weights = w

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = sum(c.weight * c.dist.pdf(x) for c in self.components)
        return np.where(np.isfinite(out), out, np.inf)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return sum(c.weight * c.dist.cdf(x) for c in self.components)

    def sample(self, rng: np.random.Generator, count: int) -> SampleSet:
        """Component draw, then inverse-cdf sampling within the component."""
        if count < 0:
            raise ValueError("count must be non-negative")
        which = rng.choice(len(self.components), size=count, p=self.weights)
        u = rng.random(count)
        out = np.empty(count)
        for i, c in enumerate(self.components):
            sel = which == i
            out[sel] = c.dist.ppf(u[sel])
        return SampleSet(out)

    def bracket(self):
        b = [c.bracket() for c in self.components]
        return min(v[0] for v in b), max(v[1] for v in b)

    def features(self) -> np.ndarray:
        return np.unique(np.concatenate([c.features() for c in self.components]))

    def singular_points(self) -> list[float]:
        return sorted({p for c in self.components for p in c.singular_points()})

    def to_dict(self) -> dict:
        return {"components": [c.to_dict() for c in self.components]}

    def __repr__(self):
        return f"DistributionModel({[c.to_dict() for c in self.components]})"


class PerturbedModel(_Model):
    """``3/4 base + 1/4 * mean_i N(mu_i, (c2/k)^2)``."""

    def __init__(self, base: DistributionModel, centers, c2: float, seed: int | None = None):
        centers = np.asarray(centers, dtype=float).ravel()
        if centers.size < 1:
            raise ValueError("need at least one noise center")
        if not c2 > 0:
            raise ValueError("c2 must be positive")
        self.base = base
        self.centers = centers
        self.c2 = float(c2)
        self.seed = seed

    @property
    def k(self) -> int:
        return self.centers.size

    @property
    def sd(self) -> float:
        return self.c2 / self.k

    def _bumps(self, x, fn):
        flat = np.asarray(x, dtype=float).ravel()
        out = np.empty_like(flat)
        for s in range(0, flat.size, _CHUNK):
            z = (flat[s:s + _CHUNK, None] - self.centers[None, :]) / self.sd
            out[s:s + _CHUNK] = fn(z).mean(axis=1)
        return out.reshape(np.shape(x))

    def pdf(self, x):
        return 0.75 * self.base.pdf(x) + 0.25 * self._bumps(x, stats.norm.pdf) / self.sd

    def cdf(self, x):
        return 0.75 * self.base.cdf(x) + 0.25 * self._bumps(x, stats.norm.cdf)

    def sample(self, rng: np.random.Generator, count: int) -> SampleSet:
        noisy = rng.random(count) < 0.25
        base = self.base.sample(rng, count).xs
        pick = rng.integers(0, self.k, size=count)
        bump = self.centers[pick] + self.sd * stats.norm.ppf(rng.random(count))
        return SampleSet(np.where(noisy, bump, base))

    def bracket(self):
        lo, hi = self.base.bracket()
        return min(lo, self.centers.min() - 40 * self.sd), max(hi, self.centers.max() + 40 * self.sd)

    def features(self) -> np.ndarray:
        c = self.centers
        return np.unique(np.concatenate([self.base.features(), c - 3 * self.sd, c, c + 3 * self.sd]))

    def singular_points(self) -> list[float]:
        return self.base.singular_points()

    def to_dict(self) -> dict:
        return {**self.base.to_dict(),
                "perturbation": {"k": self.k, "c2": self.c2, "seed": self.seed,
                                 "centers": self.centers.tolist()}}


def perturb(m: DistributionModel, k: int, c2: float, seed: int, trim: float = 0.05) -> PerturbedModel:
    """Add ``k`` narrow bumps with centers uniform on the trimmed support of ``m``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    sup = m.effective_support(trim)
    centers = stream(seed, "centers").uniform(sup.lo, sup.hi, size=k)
    return PerturbedModel(m, centers, c2, seed)


def beta_mixture() -> DistributionModel:
    return DistributionModel([Component("beta", (0.8, 4.0), 0.4), Component("beta", (2.0, 2.0), 0.6)])


def gamma_mixture() -> DistributionModel:
    return DistributionModel([Component("gamma", (2.0, 2.0), 0.7), Component("gamma", (7.5, 1.0), 0.3)])


def gauss_mixture() -> DistributionModel:
    return DistributionModel([Component("gaussian", (-0.45, 0.15), 0.65),
                              Component("gaussian", (0.3, 0.2), 0.35)])


MIXTURES = {"beta": beta_mixture, "gamma": gamma_mixture, "gauss": gauss_mixture}
NOISE_C2 = {"beta": 0.05, "gamma": 1.0, "gauss": 0.1}
NOISE_K = 100


def named_model(name: str, noisy: bool = False, seed: int = 0):
    if name not in MIXTURES:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MIXTURES)}")
    m = MIXTURES[name]()
    return perturb(m, NOISE_K, NOISE_C2[name], seed) if noisy else m


def model_from_dict(doc: dict):
    """Build a model from ``{"model": name}`` or ``{"components": [...]}``, with an
    optional ``perturbation`` block holding ``k``, ``c2`` and ``seed`` (or explicit
    ``centers``)."""
    if "model" in doc:
        base = MIXTURES[doc["model"]]() if doc["model"] in MIXTURES else None
        if base is None:
            raise ValueError(f"unknown model {doc['model']!r}")
    elif "components" in doc:
        base = DistributionModel(doc["components"])
    else:
        raise ValueError("model spec needs 'model' or 'components'")
    pert = doc.get("perturbation")
    if pert is None:
        return base
    if "centers" in pert:
        return PerturbedModel(base, pert["centers"], pert["c2"], pert.get("seed"))
    name = doc.get("model")
    c2 = pert.get("c2", NOISE_C2.get(name))
    if c2 is None:
        raise ValueError("perturbation needs c2")
    return perturb(base, int(pert.get("k", NOISE_K)), float(c2), int(pert.get("seed", 0)))


def model_from_json(text: str):
    return model_from_dict(json.loads(text))
