"""Fermionic linear optics on correlation matrices.

Modes are indexed ``0 .. n-1``; mode ``j`` owns Majorana operators
``2j`` and ``2j + 1``.  Measurement outcome 0 means "empty" (projector
``a a^dag``) and 1 means "occupied" (``a^dag a``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .gaussian import GaussianMap, GaussianState
from .skewlin import as_skew, rotation_from_generator

IMPOSSIBLE_TOL = 1e-12
CLAMP_TOL = 1e-12
PROB_CHECK_TOL = 1e-10
PRNG_NAME = f"numpy.random.Philox(SeedSequence(seed, spawn_key=(shot,)))/numpy-{np.__version__}"


class ImpossibleOutcome(ValueError):
    """The requested outcome has (numerically) zero probability."""

    def __init__(self, mode: int, outcome: int, probability: float, op_index: int | None = None):
        self.mode = mode
        self.outcome = outcome
        self.probability = probability
        self.op_index = op_index
        where = "" if op_index is None else f" at op {op_index}"
        super().__init__(
            f"outcome {outcome} on mode {mode}{where} has probability {probability:.3e}"
        )


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """``sum_j eps_j a_j^dag a_j + H_t + H_s`` with amplitudes keyed by ``(j, k)``, ``j < k``."""

    n_modes: int
    eps: tuple[float, ...]
    t: dict[tuple[int, int], complex] = field(default_factory=dict)
    s: dict[tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        if len(self.eps) != self.n_modes:
            raise ValueError(f"need {self.n_modes} on-site energies, got {len(self.eps)}")
        for name in ("t", "s"):
            amps = getattr(self, name)
            for j, k in amps:
                if not 0 <= j < k < self.n_modes:
                    raise ValueError(f"{name} amplitude ({j}, {k}) needs 0 <= j < k < n_modes")


def hamiltonian_to_generator(h: QuadraticHamiltonian) -> np.ndarray:
    """Real antisymmetric ``H_ab`` with ``H = (i/4) sum H_ab c_a c_b + const``."""
    d = 2 * h.n_modes
    # a_j = (c_2j - i c_2j+1)/2 as coefficient vectors over the c's
    ann = np.zeros((h.n_modes, d), dtype=complex)
    for j in range(h.n_modes):
        ann[j, 2 * j] = 0.5
        ann[j, 2 * j + 1] = -0.5j
    cre = ann.conj()
    Q = np.zeros((d, d), dtype=complex)
    for j, e in enumerate(h.eps):
        Q += e * np.outer(cre[j], ann[j])
    for (j, k), v in h.t.items():
        Q += v * np.outer(cre[j], ann[k]) + np.conj(v) * np.outer(cre[k], ann[j])
    for (j, k), v in h.s.items():
        Q += v * np.outer(cre[j], cre[k]) + np.conj(v) * np.outer(ann[k], ann[j])
    # sum Q_ab c_a c_b = sum (Q - Q^T)_ab c_a c_b / 2 + tr(Q); the constant is dropped
    H = -2j * (Q - Q.T)
    assert np.max(np.abs(H.imag), initial=0.0) < 1e-12, "Hermitian input gives a real generator"
    return as_skew(H.real)


# -- circuits ----------------------------------------------------------


@dataclass(frozen=True)
class Unitary:
    """``V = exp(i * time * H)`` with ``H = (i/4) sum generator_ab c_a c_b``."""

    generator: np.ndarray = field(repr=False)
    time: float = 1.0

    def __post_init__(self):
        g = as_skew(self.generator, real=True)
        g.setflags(write=False)
        object.__setattr__(self, "generator", g)
        object.__setattr__(self, "time", float(self.time))


@dataclass(frozen=True)
class Measure:
    """Occupation measurement; ``force`` fixes the outcome, ``None`` samples it."""

    mode: int
    force: int | None = None

    def __post_init__(self):
        if self.force not in (None, 0, 1):
            raise ValueError(f"forced outcome must be 0 or 1, got {self.force!r}")


Op = Union[Unitary, Measure]


@dataclass(frozen=True)
class Circuit:
    n_modes: int
    ops: tuple[Op, ...] = ()

    def __post_init__(self):
        ops = tuple(self.ops)
        object.__setattr__(self, "ops", ops)
        d = 2 * self.n_modes
        for i, op in enumerate(ops):
            if isinstance(op, Unitary):
                if op.generator.shape != (d, d):
                    raise ValueError(f"op {i}: generator must be {d}x{d}")
            elif isinstance(op, Measure):
                if not 0 <= op.mode < self.n_modes:
                    raise ValueError(f"op {i}: mode {op.mode} out of range")
            else:
                raise TypeError(f"op {i}: unknown element {op!r}")

    @property
    def n_measurements(self) -> int:
        return sum(isinstance(op, Measure) for op in self.ops)


@dataclass(frozen=True)
class Event:
    mode: int
    outcome: int
    probability: float


@dataclass(frozen=True)
class TrajectoryRecord:
    seed: int
    shot: int
    events: tuple[Event, ...]
    final_state: GaussianState
    prng: str = PRNG_NAME

    @property
    def outcomes(self) -> str:
        return "".join(str(e.outcome) for e in self.events)


# -- state updates -----------------------------------------------------


def evolve_unitary(state: GaussianState, generator, time: float = 1.0) -> GaussianState:
    if time == 0:
        return state
    R = rotation_from_generator(time * np.asarray(generator, dtype=float))
    return GaussianState(state.n_modes, R.T @ state.corr @ R)


def _clamp(p: float) -> float:
    if 0.0 <= p <= 1.0:
        return p
    if -CLAMP_TOL <= p < 0.0:
        return 0.0
    if 1.0 < p <= 1.0 + CLAMP_TOL:
        return 1.0
    raise InvalidStateError(f"outcome probability {p!r} outside [0, 1]")


def probability_determinant(state: GaussianState, mode: int) -> float:
    """``det(M K_j - I) / 4``, the squared probability of finding ``mode`` empty."""
    d = 2 * state.n_modes
    K = np.zeros((d, d))
    K[2 * mode, 2 * mode + 1] = 1.0
    K[2 * mode + 1, 2 * mode] = -1.0
    return float(np.linalg.det(state.corr @ K - np.eye(d)) / 4)


def outcome_probabilities(state: GaussianState, mode: int, check: bool = True) -> tuple[float, float]:
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode} out of range for {state.n_modes} modes")
    p_empty = _clamp(float(1.0 + state.corr[2 * mode, 2 * mode + 1]) / 2)
    if check:
        dev = abs(probability_determinant(state, mode) - p_empty**2)
        if dev > PROB_CHECK_TOL:
            raise InvalidStateError(f"determinant and linear probability disagree by {dev:.3e}")
    return p_empty, 1.0 - p_empty


def measurement_map(n: int, mode: int, outcome: int) -> GaussianMap:
    """Gaussian map of ``X -> P X P`` for the projector of ``outcome`` on ``mode``."""
    if not 0 <= mode < n:
        raise IndexError(f"mode {mode} out of range for {n} modes")
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    d = 2 * n
    p, q = 2 * mode, 2 * mode + 1
    sign = -1.0 if outcome else 1.0
    A = np.zeros((d, d))
    A[p, q], A[q, p] = sign, -sign
    B = np.eye(d)
    B[[p, q], :] = 0.0
    B[:, [p, q]] = 0.0
    return GaussianMap(n, A, B, -A, 0.5)


def apply_measurement(state: GaussianState, mode: int, outcome: int) -> tuple[GaussianState, float]:
    """Post-measurement state and the probability of ``outcome``.

    The image of the measurement map reduces to a rank-2 update of the
    unmeasured block, divided by ``1 + s M_pq = 2 * probability``.
    """
    p_empty, p_occ = outcome_probabilities(state, mode)
    prob = p_occ if outcome else p_empty
    if prob <= IMPOSSIBLE_TOL:
        raise ImpossibleOutcome(mode, outcome, prob)
    M = state.corr
    p, q = 2 * mode, 2 * mode + 1
    s = -1.0 if outcome else 1.0
    mp, mq = M[:, p], M[:, q]
    L = M + s * (np.outer(mq, mp) - np.outer(mp, mq)) / (2 * prob)
    L[[p, q], :] = 0.0
    L[:, [p, q]] = 0.0
    L[p, q], L[q, p] = s, -s
    return GaussianState(state.n_modes, L), prob


# -- trajectories ------------------------------------------------------


def trajectory_rng(seed: int, shot: int = 0) -> np.random.Generator:
    """Counter-based stream for one shot; shots are independent of each other."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(shot,))))


def _check_dims(circuit: Circuit, initial: GaussianState) -> None:
    if circuit.n_modes != initial.n_modes:
        raise ValueError(f"circuit has {circuit.n_modes} modes, state has {initial.n_modes}")


def run_trajectory(circuit: Circuit, initial: GaussianState, seed: int, shot: int = 0) -> TrajectoryRecord:
    """One seeded run; sampled outcomes are ``1`` iff a uniform draw falls below ``p_occupied``."""
    _check_dims(circuit, initial)
    rng = trajectory_rng(seed, shot)
    state = initial
    events = []
    for i, op in enumerate(circuit.ops):
        if isinstance(op, Unitary):
            state = evolve_unitary(state, op.generator, op.time)
            continue
        outcome = op.force
        if outcome is None:
            _, p_occ = outcome_probabilities(state, op.mode)
            outcome = int(rng.random() < p_occ)
        try:
            state, prob = apply_measurement(state, op.mode, outcome)
        except ImpossibleOutcome as exc:
            exc.op_index = i
            raise
        events.append(Event(op.mode, outcome, prob))
    return TrajectoryRecord(seed, shot, tuple(events), state)


class BranchCache:
    """Memoised circuit states keyed by the outcome prefix.

    A circuit's state after op ``i`` depends only on the outcomes recorded so
    far, so many shots share the same work.
    """

    def __init__(self, circuit: Circuit, initial: GaussianState):
        _check_dims(circuit, initial)
        self.circuit = circuit
        self.initial = initial
        self._nodes: dict[tuple[int, tuple[int, ...]], tuple] = {}

    def _advance(self, i: int, prefix: tuple[int, ...], state: GaussianState):
        """State before the next measurement at or after op ``i``."""
        ops = self.circuit.ops
        while i < len(ops) and isinstance(ops[i], Unitary):
            state = evolve_unitary(state, ops[i].generator, ops[i].time)
            i += 1
        return i, state

    def node(self, i: int, prefix: tuple[int, ...], state: GaussianState):
        key = (i, prefix)
        hit = self._nodes.get(key)
        if hit is None:
            j, st = self._advance(i, prefix, state)
            probs = None
            if j < len(self.circuit.ops):
                probs = outcome_probabilities(st, self.circuit.ops[j].mode)
            hit = (j, st, probs, {})
            self._nodes[key] = hit
        return hit

    def run(self, seed: int, shot: int) -> TrajectoryRecord:
        rng = trajectory_rng(seed, shot)
        ops = self.circuit.ops
        i, prefix, state = 0, (), self.initial
        events = []
        while True:
            j, st, probs, children = self.node(i, prefix, state)
            if j >= len(ops):
                return TrajectoryRecord(seed, shot, tuple(events), st)
            op = ops[j]
            outcome = op.force
            if outcome is None:
                outcome = int(rng.random() < probs[1])
            child = children.get(outcome)
            if child is None:
                try:
                    child = apply_measurement(st, op.mode, outcome)
                except ImpossibleOutcome as exc:
                    exc.op_index = j
                    raise
                children[outcome] = child
            state, prob = child
            events.append(Event(op.mode, outcome, prob))
            prefix = prefix + (outcome,)
            i = j + 1


def run_shots(circuit: Circuit, initial: GaussianState, seed: int, shots: int) -> list[TrajectoryRecord]:
    """``shots`` trajectories; shot ``k`` equals ``run_trajectory(..., seed, shot=k)``."""
    cache = BranchCache(circuit, initial)
    return [cache.run(seed, k) for k in range(shots)]


def exact_distribution(circuit: Circuit, initial: GaussianState, max_measurements: int = 20):
    """Probability of every outcome string a run of ``circuit`` can produce.

    Forced measurements are postselected: their positions always carry the
    forced value and the table is normalised by the postselection weight,
    which is returned alongside.  Branches whose conditional probability is
    at most ``IMPOSSIBLE_TOL`` have no post-measurement state and are dropped.
    Returns ``(table, weight, finals)`` with ``finals`` mapping each outcome
    string to its final state.
    """
    _check_dims(circuit, initial)
    if circuit.n_measurements > max_measurements:
        raise ValueError(
            f"{circuit.n_measurements} measurements exceed the branch limit of {max_measurements}"
        )
    branches = [("", 1.0, initial)]
    for i, op in enumerate(circuit.ops):
        if isinstance(op, Unitary):
            branches = [(k, w, evolve_unitary(st, op.generator, op.time)) for k, w, st in branches]
            continue
        nxt = []
        for key, w, st in branches:
            for outcome in (0, 1) if op.force is None else (op.force,):
                try:
                    post, prob = apply_measurement(st, op.mode, outcome)
                except ImpossibleOutcome:
                    continue
                nxt.append((key + str(outcome), w * prob, post))
        if not nxt:
            raise ImpossibleOutcome(op.mode, op.force, 0.0, op_index=i)
        branches = nxt
    weight = sum(w for _, w, _ in branches)
    table = {k: w / weight for k, w, _ in branches if w / weight > 1e-15}
    finals = {k: st for k, _, st in branches if k in table}
    return table, weight, finals
