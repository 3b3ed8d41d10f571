"""Monte Carlo check of the expected-energy model.

Each generated message walks towards the sink and, at every slice it
reaches, slides with that slice's probability or is ejected. Walks are
independent, so the number of messages leaving a slice by sliding is a
binomial draw on the number that reached it; this is how the walks are
sampled, one block of replications at a time.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import EnergyProfile, NetworkSpec, Strategy

BLOCK = 10_000


class ModelMismatchError(ValueError):
    """Zero sampling error but a non-zero discrepancy: the analytic model disagrees outright."""


@dataclass(frozen=True)
class SimConfig:
    replications: int = 100_000
    seed: int = 0
    tolerance_sigmas: float = 3.0
    jobs: int = 1
    round_g: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.tolerance_sigmas <= 0:
            raise ValueError("tolerance_sigmas must be > 0")


@dataclass(frozen=True)
class SimResult:
    """Means over replications with standard errors of the mean."""

    F: np.ndarray
    J: np.ndarray
    E: np.ndarray
    e: np.ndarray
    se: np.ndarray
    g: np.ndarray
    replications: int
    rounded: bool


def integer_counts(spec: NetworkSpec, round_g: bool = False) -> tuple[np.ndarray, bool]:
    """Generated-message counts as integers; non-integers need ``round_g``."""
    rounded = np.rint(spec.g)
    changed = bool(np.any(rounded != spec.g))
    if changed and not round_g:
        raise ValueError("g holds non-integer counts; pass round_g=True to round them")
    return rounded.astype(np.int64), changed


def sample_walks(g: np.ndarray, p: np.ndarray, size: int, seed: int, block: int = 0):
    """Slid and ejected message counts per replication, each of shape (size, n).

    The stream depends only on (seed, block), so results do not depend on
    how blocks are scheduled.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, block])))
    n = len(g)
    slid = np.zeros((size, n), dtype=np.int64)
    ejected = np.zeros((size, n), dtype=np.int64)
    through = np.zeros(size, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        arrived = g[i] + through
        if p[i] > 0:
            slid[:, i] = rng.binomial(arrived, p[i])
        ejected[:, i] = arrived - slid[:, i]
        through = slid[:, i]
    return slid, ejected


def _block_sums(g: np.ndarray, p: np.ndarray, size: int, seed: int, block: int) -> np.ndarray:
    """Integer sums (F, J, F^2, J^2, F*J) per slice over one block."""
    slid, ejected = sample_walks(g, p, size, seed, block)
    return np.stack(
        [
            slid.sum(axis=0),
            ejected.sum(axis=0),
            (slid * slid).sum(axis=0),
            (ejected * ejected).sum(axis=0),
            (slid * ejected).sum(axis=0),
        ]
    )


def simulate(spec: NetworkSpec, strategy: Strategy, config: SimConfig = SimConfig()) -> SimResult:
    if strategy.n != spec.n:
        raise ValueError("strategy and network lengths differ")
    g, rounded = integer_counts(spec, config.round_g)
    p = strategy.p
    sizes = [BLOCK] * (config.replications // BLOCK)
    if config.replications % BLOCK:
        sizes.append(config.replications % BLOCK)
    tasks = [(g, p, size, config.seed, k) for k, size in enumerate(sizes)]
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            parts = list(pool.map(lambda t: _block_sums(*t), tasks))
    else:
        parts = [_block_sums(*t) for t in tasks]
    # integer sums: exact and independent of block order
    total = np.sum(parts, axis=0)
    r = config.replications
    sF, sJ, sFF, sJJ, sFJ = (total[k].astype(float) for k in range(5))
    c = spec.d**2
    meanF, meanJ = sF / r, sJ / r
    E = meanF + c * meanJ
    # sample variance of F + c J per replication
    sEE = sFF + 2 * c * sFJ + c * c * sJJ
    sE = sF + c * sJ
    var = (sEE - sE * sE / r) / (r - 1) if r > 1 else np.zeros(spec.n)
    var = np.maximum(var, 0.0)
    se_E = np.sqrt(var / r)
    return SimResult(
        F=meanF,
        J=meanJ,
        E=E,
        e=E / spec.b,
        se=se_E / spec.b,
        g=g.astype(float),
        replications=r,
        rounded=rounded,
    )


@dataclass(frozen=True)
class Comparison:
    z: np.ndarray
    worst: int
    passed: bool
    tolerance_sigmas: float

    def rows(self, analytic: EnergyProfile, sim: SimResult):
        for i in range(len(self.z)):
            yield i, float(analytic.e[i]), float(sim.e[i]), float(sim.se[i]), float(self.z[i])


def compare(analytic: EnergyProfile, sim: SimResult, config: SimConfig = SimConfig()) -> Comparison:
    """Per-slice z-scores of the empirical energies against the analytic ones."""
    if len(analytic.e) != len(sim.e):
        raise ValueError("profile lengths differ")
    diff = sim.e - analytic.e
    z = np.zeros(len(diff))
    scale = np.maximum(1.0, np.abs(analytic.e))
    for i, (delta, se) in enumerate(zip(diff, sim.se)):
        if se > 0:
            z[i] = delta / se
        elif abs(delta) > 1e-9 * scale[i]:
            raise ModelMismatchError(
                f"slice {i}: empirical {sim.e[i]!r} vs analytic {analytic.e[i]!r} with zero sampling error"
            )
    worst = int(np.argmax(np.abs(z)))
    passed = bool(np.all(np.abs(z) <= config.tolerance_sigmas))
    return Comparison(z, worst, passed, config.tolerance_sigmas)


def flake_rate(sigmas: float, slices: int = 1) -> float:
    """Chance that at least one of ``slices`` independent normal z-scores exceeds ``sigmas``."""
    per_slice = math.erfc(sigmas / math.sqrt(2))
    return 1 - (1 - per_slice) ** slices
