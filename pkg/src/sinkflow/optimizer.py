"""Exact lifespan-maximising slide/eject strategy.

The network is treated slice by slice, starting next to the sink. Each slice
first ejects just enough of its own messages to match the per-sensor energy
of the slice below, then slides the rest along the network using ejection
probabilities that keep every slice it touches at equal per-sensor energy.

Two situations break that scheme and are handled here:

* a slice without enough messages to catch up with its neighbour ejects
  everything and opens a new recursion level in which the slices above feed
  it until it catches up (or the network ends);
* a negative ejection probability would eventually drive some slice's
  ejected count below zero; sliding is capped at that point and the
  offending probability is clamped to 0, which produces a local peak.

The recursion uses an explicit frame stack.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import (
    DEFAULT_TOL,
    ROUNDOFF,
    EnergyProfile,
    EpsilonChain,
    FlowState,
    NetworkSpec,
    Strategy,
    epsilon_chain,
    profile_from_flow,
)

log = logging.getLogger(__name__)


class OptimizerError(AssertionError):
    """An internal invariant of the optimizer failed (progress or physicality)."""


@dataclass
class RecursionFrame:
    start: int
    max_nrg: float
    saved_eps: EpsilonChain


@dataclass
class Clamp:
    slice: int
    ejected_at_clamp: float
    current: int


@dataclass
class OptimizerState:
    spec: NetworkSpec
    flow: FlowState
    eps: EpsilonChain
    tol: float = DEFAULT_TOL
    stack: list[RecursionFrame] = field(default_factory=list)
    current: int = 0
    start: int = 0
    max_nrg: float = math.inf
    descents: list[int] = field(default_factory=list)
    clamps: list[Clamp] = field(default_factory=list)
    trace: list[tuple] | None = None

    @classmethod
    def initial(cls, spec: NetworkSpec, tol: float = DEFAULT_TOL, trace: bool = False) -> "OptimizerState":
        return cls(
            spec=spec,
            flow=FlowState.initial(spec),
            eps=epsilon_chain(spec, 0),
            tol=tol,
            trace=[] if trace else None,
        )

    @property
    def level(self) -> int:
        return len(self.stack)

    @property
    def mtol(self) -> float:
        return self.spec.message_tol(self.tol)

    @property
    def open_starts(self) -> list[int]:
        """Slices whose catch-up recursion is still open (never went back up)."""
        if not self.stack:
            return []
        return [f.start for f in self.stack[1:]] + [self.start]

    def avg_nrg(self, i: int) -> float:
        s, f = self.spec, self.flow
        return float((f.F[i] + f.J[i] * s.d[i] ** 2) / s.b[i])

    def _log(self, *event):
        if self.trace is not None:
            self.trace.append(event)

    # -- elementary moves -------------------------------------------------

    def eject(self, amount: float) -> None:
        i = self.current
        G = self.flow.G
        if amount < -self.mtol or amount > G[i] + self.mtol:
            raise OptimizerError(f"cannot eject {amount} messages from slice {i} holding {G[i]}")
        amount = min(max(amount, 0.0), G[i])
        self.flow.J[i] += amount
        G[i] -= amount
        self._log("eject", i, amount)

    def slide_careless(self, amount: float) -> None:
        """Slide ``amount`` of slice current's messages down the chain under the active eps."""
        if amount < 0:
            raise ValueError(f"negative slide amount {amount}")
        if amount == 0:
            return
        i = self.current
        F, J, G = self.flow.F, self.flow.J, self.flow.G
        eps = self.eps.eps
        G[i] -= amount
        phi = amount
        for k in range(i, -1, -1):
            F[k] += phi * (1 - eps[k])
            J[k] += phi * eps[k]
            phi *= 1 - eps[k]
            if phi == 0:
                break
        self._log("slide", i, amount)

    def _ejection_shares(self) -> np.ndarray:
        """Fraction of one message slid from slice current that ends up ejected at each slice."""
        eps = self.eps.eps
        shares = np.zeros(self.current + 1)
        reach = 1.0
        for k in range(self.current, -1, -1):
            shares[k] = reach * eps[k]
            reach *= 1 - eps[k]
            if reach == 0:
                break
        return shares

    def compute_max_slide(self) -> float:
        """Largest amount slideable from slice current before some ejected count goes negative.

        Returns ``math.inf`` when no slice down the chain has a negative ejection share.
        """
        shares = self._ejection_shares()
        neg = shares < 0
        if not neg.any():
            return math.inf
        J = np.maximum(self.flow.J[: self.current + 1][neg], 0.0)
        return float((J / -shares[neg]).min())

    def slide_careful(self, amount: float) -> None:
        """Slide ``amount`` without making any ejected count negative.

        Slides up to the cap under the current probabilities, re-solves the
        chain from the active start with clamping, and continues with the rest.
        """
        if amount < 0:
            raise ValueError(f"negative slide amount {amount}")
        remaining = amount
        while remaining > 0:
            cap = self.compute_max_slide()
            if remaining <= cap:
                self.slide_careless(remaining)
                return
            shares = self._ejection_shares()
            J = self.flow.J
            before = J[: self.current + 1].copy()
            self.slide_careless(cap)
            remaining -= cap
            # the binding slices are empty by construction; drop the rounding residue
            hit = (shares < 0) & (J[: self.current + 1] <= ROUNDOFF * before)
            J[: self.current + 1][hit] = 0.0
            self._reclamp()
            if self.compute_max_slide() <= 0:
                raise OptimizerError(
                    f"no progress sliding from slice {self.current}: cap stays 0 after clamping"
                )

    def _reclamp(self) -> None:
        before = set(self.eps.clamped)
        self.eps = epsilon_chain(
            self.spec, self.start, caution=True, flow=self.flow, current=self.current, tol=self.tol
        )
        for k in self.eps.clamped:
            if k not in before:
                self.clamps.append(Clamp(k, float(self.flow.J[k]), self.current))
        self._log("clamp", self.current, tuple(self.eps.clamped))

    # -- recursion --------------------------------------------------------

    def down_one_level(self) -> None:
        """Open a catch-up level: slice current ejects every sliding message it receives."""
        i = self.current
        self.stack.append(RecursionFrame(self.start, self.max_nrg, self.eps.copy()))
        self.start = i
        self.max_nrg = self.avg_nrg(i - 1)
        self.eps = epsilon_chain(self.spec, i)
        self.descents.append(i)
        self._log("down", i, self.max_nrg)

    def up_one_level(self) -> None:
        if not self.stack:
            raise OptimizerError("up_one_level called at the outermost level")
        frame = self.stack.pop()
        self._log("up", self.current, self.start)
        self.start = frame.start
        self.max_nrg = frame.max_nrg
        self.eps = frame.saved_eps

    def msg_to_go_up(self) -> float:
        """Messages slice current must treat to lift its group to the catch-up target."""
        i = self.current
        s = self.spec
        delta = max(self.max_nrg - self.avg_nrg(i), 0.0)
        q = self.eps[i]
        return float(s.b[i] * delta / (q * s.d[i] ** 2 + (1 - q)))

    def slide_amount_decision(self) -> tuple[float, bool]:
        """How much of slice current's backlog to slide next, and whether a level closes after it."""
        pending = float(self.flow.G[self.current])
        if self.level == 0:
            return pending, False
        target = self.msg_to_go_up()
        if pending < target * (1 - self.tol):
            return pending, False
        return min(pending, target), True

    # -- main pass --------------------------------------------------------

    def treat_slice(self, i: int) -> None:
        self.current = i
        G = self.flow.G
        if i == 0:
            self.eject(G[0])
            return
        s = self.spec
        ideal_j = self.avg_nrg(i - 1) * s.b[i] / s.d[i] ** 2
        if ideal_j > G[i] * (1 + self.tol):
            self.eject(G[i])
            self.down_one_level()
            return
        self.eject(min(ideal_j, G[i]))
        steps = 0
        while G[i] > 0:
            amount, go_up = self.slide_amount_decision()
            self.slide_careful(amount)
            if go_up:
                self.up_one_level()
            steps += 1
            if steps > s.n + 2:
                raise OptimizerError(f"slice {i} makes no progress (G={G[i]})")

    def run(self) -> "OptimizerState":
        for i in range(self.spec.n):
            self.treat_slice(i)
        return self


def strategy_from_flow(flow: FlowState, tol: float = DEFAULT_TOL) -> Strategy:
    """Sliding probability F_i / (F_i + J_i); an idle slice gets 0."""
    handled = flow.F + flow.J
    scale = tol * float(np.abs(handled).sum())
    if np.any(np.abs(flow.G) > scale):
        raise ValueError("untreated messages remain; strategy is undefined")
    p = np.zeros(flow.n)
    busy = handled > 0
    p[busy] = flow.F[busy] / handled[busy]
    p[0] = 0.0
    return Strategy(np.clip(p, 0.0, 1.0))


class OptimalSolution(NamedTuple):
    strategy: Strategy
    flow: FlowState
    profile: EnergyProfile


def run_optimizer(spec: NetworkSpec, tol: float = DEFAULT_TOL, trace: bool = False) -> OptimizerState:
    """Run the full pass and return the final optimizer state (flows, stack, clamp log)."""
    return OptimizerState.initial(spec, tol, trace).run()


def compute_optimal(spec: NetworkSpec, tol: float = DEFAULT_TOL) -> OptimalSolution:
    state = run_optimizer(spec, tol)
    flow = state.flow
    return OptimalSolution(strategy_from_flow(flow, tol), flow, profile_from_flow(flow, spec))
