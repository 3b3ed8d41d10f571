"""Analytic evaluation of arbitrary strategies, optimality checks and a grid oracle."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import DEFAULT_TOL, EnergyProfile, FlowState, NetworkSpec, Strategy, profile_from_flow

MAX_ORACLE_SLICES = 5


@dataclass(frozen=True)
class Configuration:
    spec: NetworkSpec
    strategy: Strategy

    def __post_init__(self):
        if self.spec.n != self.strategy.n:
            raise ValueError(f"strategy has {self.strategy.n} entries for {self.spec.n} slices")


def evaluate_strategy(config: Configuration) -> tuple[FlowState, EnergyProfile]:
    """Expected flows and per-sensor energies when every slice applies its sliding probability."""
    spec, p = config.spec, config.strategy.p
    n = spec.n
    F, J = np.zeros(n), np.zeros(n)
    through = 0.0
    for i in range(n - 1, -1, -1):
        handled = spec.g[i] + through
        F[i] = p[i] * handled
        J[i] = (1 - p[i]) * handled
        through = F[i]
    flow = FlowState(F, J, np.zeros(n))
    return flow, profile_from_flow(flow, spec)


def energies(spec: NetworkSpec, p) -> np.ndarray:
    """Vectorised per-sensor energies.

    ``p`` has shape (..., n); the result has the same shape.
    """
    p = np.asarray(p, dtype=float)
    out = np.empty(p.shape)
    through = np.zeros(p.shape[:-1])
    cost = spec.d**2
    for i in range(spec.n - 1, -1, -1):
        handled = spec.g[i] + through
        slid = p[..., i] * handled
        out[..., i] = (slid + (handled - slid) * cost[i]) / spec.b[i]
        through = slid
    return out


@dataclass(frozen=True)
class Plateau:
    first: int
    last: int
    far_condition: bool | None
    near_condition: bool | None

    @property
    def holds(self) -> bool:
        return self.far_condition is not False and self.near_condition is not False


@dataclass(frozen=True)
class OptimalityReport:
    """Tabletop optimality test.

    ``k`` is the farthest slice at the maximal per-sensor energy and ``l`` the
    slice just sink-side of the plateau ending at ``k`` (None when that plateau
    reaches slice 0). ``left_condition`` requires p[k+1] == 0 and
    ``right_condition`` requires p[l+1] == 1; None means the condition is void.
    """

    profile: EnergyProfile
    max_value: float
    k: int
    l: int | None
    left_condition: bool | None
    right_condition: bool | None
    plateaus: tuple[Plateau, ...]
    optimal: bool

    @property
    def violated(self) -> list[str]:
        out = []
        if self.left_condition is False:
            out.append("left_condition")
        if self.right_condition is False:
            out.append("right_condition")
        return out


def _plateau(first: int, last: int, p: np.ndarray, tol: float) -> Plateau:
    n = len(p)
    far = None if last == n - 1 else bool(p[last + 1] <= tol)
    near = None if first == 0 else bool(p[first] >= 1 - tol)
    return Plateau(first, last, far, near)


def check_tabletop_optimality(config: Configuration, tol: float = DEFAULT_TOL) -> OptimalityReport:
    """Check the tabletop conditions on the maximal per-sensor energy.

    Each maximal run of slices at the peak is a plateau. A plateau is stuck
    when nothing above feeds it (p just beyond its far end is 0) and its
    nearest slice already slides everything (p == 1), unless it reaches the
    sink. The configuration is optimal when some plateau is stuck; the
    headline ``k``/``l`` fields describe the farthest plateau.
    """
    _, profile = evaluate_strategy(config)
    e = profile.e
    p = config.strategy.p
    top = float(e.max())
    at_top = e >= top - tol * abs(top)
    plateaus = []
    i = 0
    n = len(e)
    while i < n:
        if at_top[i]:
            j = i
            while j + 1 < n and at_top[j + 1]:
                j += 1
            plateaus.append(_plateau(i, j, p, tol))
            i = j + 1
        else:
            i += 1
    last = plateaus[-1]
    return OptimalityReport(
        profile=profile,
        max_value=top,
        k=last.last,
        l=None if last.first == 0 else last.first - 1,
        left_condition=last.far_condition,
        right_condition=last.near_condition,
        plateaus=tuple(plateaus),
        optimal=any(pl.holds for pl in plateaus),
    )


def grid_slack(spec: NetworkSpec, step: float) -> float:
    """Upper bound on how much the best grid point can exceed the true minimum of max e.

    Every coordinate of the optimum is within ``step`` of a grid point; the
    bound multiplies that by the largest absolute partial derivative sum of
    any e_i with respect to the sliding probabilities.
    """
    g, b, cost = spec.g, spec.b, spec.d**2
    upstream = np.cumsum(g[::-1])[::-1]  # all traffic that can possibly reach slice i
    worst = 0.0
    for i in range(spec.n):
        own = upstream[i] * (cost[i] - 1) / b[i] if i > 0 else 0.0
        # raising p_j (j > i) can add at most upstream[j] messages to slice i's load
        fed = sum(upstream[j] for j in range(i + 1, spec.n)) * cost[i] / b[i]
        worst = max(worst, own + fed)
    return worst * step


@dataclass(frozen=True)
class OracleResult:
    strategy: Strategy
    lifespan: float
    max_energy: float
    energy_slack: float
    points: int

    def lifespan_slack(self, reference_max_energy: float) -> float:
        """Lifespan gap allowed by ``energy_slack`` around a reference peak energy."""
        m = reference_max_energy
        if m <= 0:
            return math.inf
        return 1.0 / m - 1.0 / (m + self.energy_slack)


def _grid(step: float) -> np.ndarray:
    count = int(round(1.0 / step))
    if not math.isclose(count * step, 1.0, rel_tol=1e-9):
        raise ValueError(f"step {step} does not divide [0, 1] evenly")
    return np.arange(count + 1) / count


def brute_force_oracle(
    spec: NetworkSpec, step: float = 0.01, jobs: int = 1
) -> OracleResult:
    """Exhaustive search over grid strategies; ties go to the lexicographically smallest p."""
    n = spec.n
    if n > MAX_ORACLE_SLICES:
        raise ValueError(f"exhaustive search limited to {MAX_ORACLE_SLICES} slices, got {n}")
    if not 0 < step <= 1:
        raise ValueError("step must lie in (0, 1]")
    axis = _grid(step)
    slack = grid_slack(spec, step)
    if n == 1:
        p = np.zeros(1)
        peak = float(energies(spec, p).max())
        return OracleResult(Strategy(p), _lifespan(peak), peak, slack, 1)

    # one block per value of p[1], scanned in lexicographic order
    rest = n - 2
    tail = (
        np.array(list(itertools.product(axis, repeat=rest))) if rest else np.zeros((1, 0))
    )

    def block(p1: float) -> tuple[float, int]:
        pts = np.empty((len(tail), n))
        pts[:, 0] = 0.0
        pts[:, 1] = p1
        pts[:, 2:] = tail
        peaks = energies(spec, pts).max(axis=1)
        idx = int(np.argmin(peaks))
        return float(peaks[idx]), idx

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(block, axis))
    else:
        results = [block(v) for v in axis]
    best_block = min(range(len(axis)), key=lambda b: (results[b][0], b))
    peak, idx = results[best_block]
    p = np.concatenate(([0.0, axis[best_block]], tail[idx]))
    return OracleResult(Strategy(p), _lifespan(peak), peak, slack, len(axis) * len(tail))


def _lifespan(peak: float) -> float:
    return math.inf if peak <= 0 else 1.0 / peak


def no_win_win_probe(c1: Configuration, c2: Configuration, tol: float = DEFAULT_TOL) -> int | None:
    """Index of a slice where c1 spends at least as much per sensor as c2, or None if none exists.

    Energies within ``tol`` (relative to the larger peak) count as equal.
    """
    if c1.spec != c2.spec:
        raise ValueError("configurations are over different networks")
    _, e1 = evaluate_strategy(c1)
    _, e2 = evaluate_strategy(c2)
    slack = tol * max(e1.max_energy, e2.max_energy)
    hits = np.flatnonzero(e1.e >= e2.e - slack)
    return int(hits[0]) if len(hits) else None
