"""Network model, ejection-probability recurrence and energy arithmetic.

Slices are indexed from 0 (the slice adjacent to the sink) to ``n - 1``.
Message counts are non-negative reals: the model works with expectations,
so fractional messages are normal.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-9
ROUNDOFF = 256 * np.finfo(float).eps


class InvalidSpecError(ValueError):
    """Raised when a network description violates a model invariant.

    ``field`` names the offending input (``"b"``, ``"d"``, ``"g"`` or ``"n"``).
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"field '{field}': {message}")
        self.field = field


def _frozen(values, name: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidSpecError(name, f"not a numeric sequence ({exc})") from None
    if arr.ndim != 1:
        raise InvalidSpecError(name, "must be a flat sequence")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """Static description of a sliced network.

    b: battery per slice, d: distance to the sink, g: generated messages.
    """

    b: np.ndarray
    d: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        b = _frozen(self.b, "b")
        d = _frozen(self.d, "d")
        g = _frozen(self.g, "g")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "g", g)
        n = len(b)
        if n < 1:
            raise InvalidSpecError("n", "at least one slice is required")
        if len(d) != n or len(g) != n:
            raise InvalidSpecError("n", f"b, d, g lengths differ ({len(b)}, {len(d)}, {len(g)})")
        for name, arr in (("b", b), ("d", d), ("g", g)):
            if not np.all(np.isfinite(arr)):
                raise InvalidSpecError(name, "all entries must be finite")
        if np.any(b <= 0):
            raise InvalidSpecError("b", "battery capacities must be > 0")
        if d[0] < 1:
            raise InvalidSpecError("d", "d[0] must be >= 1")
        if np.any(np.diff(d) < 0):
            raise InvalidSpecError("d", "distances must be non-decreasing")
        if np.any(g < 0):
            raise InvalidSpecError("g", "event counts must be >= 0")

    @property
    def n(self) -> int:
        return len(self.b)

    @property
    def eject_cost(self) -> np.ndarray:
        return self.d**2

    @property
    def total_messages(self) -> float:
        return math.fsum(self.g)

    def message_tol(self, tol: float = DEFAULT_TOL) -> float:
        """Absolute tolerance on message counts: relative to the total traffic."""
        return tol * self.total_messages

    def with_g(self, g) -> "NetworkSpec":
        return NetworkSpec(self.b, self.d, g)

    def __eq__(self, other):
        if not isinstance(other, NetworkSpec):
            return NotImplemented
        return (
            np.array_equal(self.b, other.b)
            and np.array_equal(self.d, other.d)
            and np.array_equal(self.g, other.g)
        )

    def __hash__(self):
        return hash((self.b.tobytes(), self.d.tobytes(), self.g.tobytes()))


@dataclass
class FlowState:
    """Per-slice message accounting.

    F[i]: messages slid by slice i towards slice i - 1.
    J[i]: messages ejected by slice i to the sink.
    G[i]: messages generated at slice i not yet treated.
    """

    F: np.ndarray
    J: np.ndarray
    G: np.ndarray

    @classmethod
    def initial(cls, spec: NetworkSpec) -> "FlowState":
        return cls(np.zeros(spec.n), np.zeros(spec.n), np.array(spec.g, dtype=float))

    def copy(self) -> "FlowState":
        return FlowState(self.F.copy(), self.J.copy(), self.G.copy())

    @property
    def n(self) -> int:
        return len(self.F)

    def conservation_residuals(self, spec: NetworkSpec) -> np.ndarray:
        """F_i + J_i - F_{i+1} - g_i for every slice (zero once all messages are treated)."""
        inflow = np.append(self.F[1:], 0.0)
        return self.F + self.J - inflow - spec.g


class EpsFlag(enum.Enum):
    FREE = "free"
    FORCED_ONE = "forced-one"
    CLAMPED_ZERO = "clamped-zero"


@dataclass
class EpsilonChain:
    """Ejection probabilities of sliding messages, one per slice."""

    eps: np.ndarray
    flags: list[EpsFlag]

    def copy(self) -> "EpsilonChain":
        return EpsilonChain(self.eps.copy(), list(self.flags))

    def __len__(self):
        return len(self.eps)

    def __getitem__(self, i):
        return self.eps[i]

    @property
    def clamped(self) -> list[int]:
        return [k for k, f in enumerate(self.flags) if f is EpsFlag.CLAMPED_ZERO]


@dataclass(frozen=True, eq=False)
class Strategy:
    """Sliding probability per slice; slice 0 never slides."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1 or len(p) < 1:
            raise ValueError("p must be a non-empty flat sequence")
        if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise ValueError("sliding probabilities must lie in [0, 1]")
        if p[0] != 0:
            raise ValueError("slice 0 cannot slide: p[0] must be 0")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return len(self.p)


@dataclass(frozen=True)
class EnergyProfile:
    """Per-sensor energy e_i = E_i / b_i and the resulting lifespan."""

    e: np.ndarray
    lifespan: float = field(init=False)

    def __post_init__(self):
        e = np.array(self.e, dtype=float)
        e.setflags(write=False)
        object.__setattr__(self, "e", e)
        peak = float(e.max()) if len(e) else 0.0
        # math.inf is a distinguished value here, never reached by overflow
        object.__setattr__(self, "lifespan", math.inf if peak <= 0 else 1.0 / peak)

    @property
    def max_energy(self) -> float:
        return float(self.e.max())


def slice_energy(flow: FlowState, spec: NetworkSpec, i: int, per_sensor: bool = False) -> float:
    """Energy spent by slice ``i``: one unit per slide, d_i**2 per ejection."""
    if not 0 <= i < spec.n:
        raise IndexError(f"slice index {i} out of range for {spec.n} slices")
    energy = flow.F[i] + flow.J[i] * spec.d[i] ** 2
    return float(energy / spec.b[i]) if per_sensor else float(energy)


def slice_energies(flow: FlowState, spec: NetworkSpec) -> np.ndarray:
    return flow.F + flow.J * spec.d**2


def profile_from_flow(flow: FlowState, spec: NetworkSpec) -> EnergyProfile:
    return EnergyProfile(slice_energies(flow, spec) / spec.b)


def epsilon_chain(
    spec: NetworkSpec,
    first: int = 0,
    caution: bool = False,
    flow: FlowState | None = None,
    current: int | None = None,
    tol: float = DEFAULT_TOL,
) -> EpsilonChain:
    """Solve the balance recurrence for the ejection probabilities.

    Entries up to and including ``first`` are forced to 1. Each later entry
    makes one extra sliding message cost the same per sensor at slice k as
    everything it causes further down the chain.

    With ``caution``, an entry that comes out non-positive at a slice that has
    already been treated (``k <= current``) and has no ejected messages left
    is clamped to 0, and later entries are computed from the clamped value.
    """
    n = spec.n
    if not 0 <= first < n:
        raise IndexError(f"first={first} out of range for {n} slices")
    if caution and (flow is None or current is None):
        raise ValueError("caution requires flow and current")
    b, d = spec.b, spec.d
    eps = np.ones(n)
    flags = [EpsFlag.FORCED_ONE] * (first + 1) + [EpsFlag.FREE] * (n - first - 1)
    for k in range(first + 1, n):
        a = (d[k] ** 2 - 1) / b[k]
        bb = (eps[k - 1] * (d[k - 1] ** 2 - 1) + 1) / b[k - 1]
        assert a + bb > 0, f"degenerate recurrence at slice {k}"
        eps[k] = (bb - 1 / b[k]) / (a + bb)
        if caution and eps[k] <= 0 and k <= current and flow.J[k] <= 0:
            eps[k] = 0.0
            flags[k] = EpsFlag.CLAMPED_ZERO
    return EpsilonChain(eps, flags)


def unit_cost(spec: NetworkSpec, k: int, q: float) -> float:
    """Per-sensor cost at slice k of treating one message, ejecting with probability q."""
    return ((1 - q) + q * spec.d[k] ** 2) / spec.b[k]


def recurrence_residuals(spec: NetworkSpec, chain: EpsilonChain) -> np.ndarray:
    """Relative residual of the balance recurrence at every index.

    Zero where the relation is not expected to hold (forced or clamped entries
    and index 0).
    """
    res = np.zeros(spec.n)
    eps = chain.eps
    for k in range(1, spec.n):
        if chain.flags[k] is not EpsFlag.FREE:
            continue
        lhs = unit_cost(spec, k, eps[k])
        rhs = (1 - eps[k]) * unit_cost(spec, k - 1, eps[k - 1])
        res[k] = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    return res


def is_energy_balanced(profile: EnergyProfile, tol: float = DEFAULT_TOL) -> bool:
    e = profile.e
    if len(e) == 0:
        raise ValueError("empty profile")
    top = float(e.max())
    return top - float(e.min()) <= tol * abs(top)


def unit_slide_increments(spec: NetworkSpec, eps: EpsilonChain, i: int) -> np.ndarray:
    """Per-sensor energy added at slices i, i-1, ..., 0 by one message treated at slice i.

    Slice i ejects it with probability eps[i], every slice below treats what
    reaches it with its own eps. Entry 0 of the result is slice i.
    """
    if not 0 <= i < spec.n:
        raise IndexError(f"slice index {i} out of range")
    out = []
    reach = 1.0
    for k in range(i, -1, -1):
        q = eps[k]
        out.append(reach * unit_cost(spec, k, q))
        reach *= 1 - q
        if reach == 0:
            out.extend([0.0] * k)
            break
    return np.array(out)
