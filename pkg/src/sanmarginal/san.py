"""Stochastic Automata Networks with separable, local transition rates.

A model has ``d`` automata with ``sizes[mu]`` states each. Automaton ``nu`` may
move from state ``i`` to a later state ``j > i``; the rate of that move from the
global state ``x`` is the product over all automata ``mu`` of
``theta[nu][t][mu][x[mu]]``, where ``t`` indexes the pair ``(i, j)`` in
``transitions[nu]``. The factor at ``mu == nu`` (evaluated at ``x[nu] == i``) is
the baseline rate; the others are multiplicative effects, equal to one where
an automaton has no influence.

Mutual Hazard Networks are the binary special case built by :func:`from_mhn`.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dense import DEFAULT_CAP, state_table
from .errors import CapExceeded, InvalidModel, InvalidParams
from .formats.cp import CpOperator, CpTensor, identity_operator


@dataclass(frozen=True, eq=False)
class SanModel:
    sizes: tuple[int, ...]
    transitions: tuple[tuple[tuple[int, int], ...], ...]
    theta: tuple[tuple[tuple[np.ndarray, ...], ...], ...]
    x0: tuple[int, ...] | None = None

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        transitions = tuple(tuple((int(i), int(j)) for i, j in tr) for tr in self.transitions)
        theta = tuple(
            tuple(tuple(np.asarray(vec, dtype=float).ravel() for vec in per_mode) for per_mode in per_nu)
            for per_nu in self.theta
        )
        x0 = tuple(0 for _ in sizes) if self.x0 is None else tuple(int(i) for i in self.x0)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "x0", x0)

    @property
    def d(self) -> int:
        return len(self.sizes)

    @property
    def num_states(self) -> int:
        return int(np.prod(self.sizes))


@dataclass(frozen=True, eq=False)
class MhnParams:
    """Mutual Hazard Network: ``theta[nu, nu]`` is the baseline rate of event
    ``nu`` and ``theta[nu, mu]`` the factor applied once event ``mu`` occurred."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, ndmin=2)
        object.__setattr__(self, "theta", theta)

    @property
    def d(self) -> int:
        return self.theta.shape[0]


def validate_mhn(p: MhnParams) -> list[str]:
    th = p.theta
    problems = []
    if th.ndim != 2 or th.shape[0] != th.shape[1] or th.shape[0] < 1:
        return [f"MHN parameters must be a non-empty square matrix, got shape {th.shape}"]
    if not np.all(np.isfinite(th)):
        problems.append("MHN parameters contain non-finite values")
    elif np.any(th <= 0):
        problems.append("MHN parameters must be strictly positive")
    return problems


def validate_model(m: SanModel) -> list[str]:
    """Every violated model assumption, one line each; empty when valid."""
    problems = []
    d = m.d
    if d < 1:
        return ["a model needs at least one automaton"]
    if any(n < 1 for n in m.sizes):
        problems.append(f"state-space sizes must be positive, got {m.sizes}")
    if len(m.transitions) != d:
        problems.append(f"expected transition sets for {d} automata, got {len(m.transitions)}")
    if len(m.theta) != len(m.transitions):
        problems.append("theta must hold one entry per transition set")
    if len(m.x0) != d:
        problems.append(f"initial state {m.x0} has the wrong length")
    elif any(not 0 <= i < n for i, n in zip(m.x0, m.sizes)):
        problems.append(f"initial state {m.x0} outside state spaces {m.sizes}")
    if problems:
        return problems
    for nu, (pairs, factors) in enumerate(zip(m.transitions, m.theta)):
        if len(set(pairs)) != len(pairs):
            problems.append(f"automaton {nu}: duplicate transitions")
        if len(factors) != len(pairs):
            problems.append(f"automaton {nu}: {len(pairs)} transitions but {len(factors)} parameter sets")
            continue
        for (i, j), per_mode in zip(pairs, factors):
            if not (0 <= i < m.sizes[nu] and 0 <= j < m.sizes[nu]):
                problems.append(f"automaton {nu}: transition ({i}, {j}) outside 0..{m.sizes[nu] - 1}")
            elif i >= j:
                problems.append(f"automaton {nu}: transition ({i}, {j}) is not increasing in the state order")
            if len(per_mode) != d:
                problems.append(f"automaton {nu}, transition ({i}, {j}): expected {d} factor vectors")
                continue
            for mu, vec in enumerate(per_mode):
                if vec.size != m.sizes[mu]:
                    problems.append(
                        f"automaton {nu}, transition ({i}, {j}): factor for automaton {mu} "
                        f"has length {vec.size}, expected {m.sizes[mu]}"
                    )
                elif not np.all(np.isfinite(vec)):
                    problems.append(f"automaton {nu}, transition ({i}, {j}): non-finite factor for automaton {mu}")
                elif np.any(vec < 0):
                    problems.append(f"automaton {nu}, transition ({i}, {j}): negative factor for automaton {mu}")
    return problems


def check_model(m: SanModel):
    problems = validate_model(m)
    if problems:
        raise InvalidModel(problems)


def from_mhn(p: MhnParams, x0=None) -> SanModel:
    """Binary SAN of a Mutual Hazard Network.

    Event ``nu`` has the single transition ``0 -> 1``. Its factor vector for
    another event ``mu`` is ``(1, theta[nu, mu])``; at ``mu == nu`` it is
    ``(theta[nu, nu], 1)``, the baseline followed by an entry the generator
    never reads.
    """
    problems = validate_mhn(p)
    if problems:
        raise InvalidParams("; ".join(problems))
    th = p.theta
    d = p.d
    theta = []
    for nu in range(d):
        per_mode = [np.array([th[nu, nu], 1.0]) if mu == nu else np.array([1.0, th[nu, mu]]) for mu in range(d)]
        theta.append((tuple(per_mode),))
    return SanModel((2,) * d, (((0, 1),),) * d, tuple(theta), x0)


def build_cp_generator(m: SanModel) -> CpOperator:
    """Generator as one Kronecker product per local transition."""
    check_model(m)
    terms = []
    for nu in range(m.d):
        for (i, j), per_mode in zip(m.transitions[nu], m.theta[nu]):
            term = []
            for mu in range(m.d):
                if mu == nu:
                    core = np.zeros((m.sizes[nu], m.sizes[nu]))
                    core[j, i] = per_mode[nu][i]
                    core[i, i] = -per_mode[nu][i]
                else:
                    core = np.diag(per_mode[mu])
                term.append(core)
            terms.append(tuple(term))
    if not terms:
        # no transitions at all: the zero generator
        terms.append(tuple(np.zeros((n, n)) for n in m.sizes))
    return CpOperator(m.sizes, tuple(terms))


def build_identity(m: SanModel) -> CpOperator:
    return identity_operator(m.sizes)


def build_initial(m: SanModel) -> CpTensor:
    """Unit vector at ``x0`` as a rank-one CP tensor."""
    factors = []
    for mu, n in enumerate(m.sizes):
        e = np.zeros((n, 1))
        e[m.x0[mu], 0] = 1.0
        factors.append(e)
    return CpTensor(m.sizes, tuple(factors))


def build_ones(m: SanModel) -> CpTensor:
    return CpTensor(m.sizes, tuple(np.ones((n, 1)) for n in m.sizes))


def gamma_bound(m: SanModel) -> float:
    """Cheap upper bound on the largest diagonal magnitude of the generator.

    For each automaton, the worst source state's summed outgoing rates with
    every factor replaced by its maximum over states.
    """
    check_model(m)
    total = 0.0
    for nu in range(m.d):
        by_source: dict[int, float] = {}
        for (i, _), per_mode in zip(m.transitions[nu], m.theta[nu]):
            by_source[i] = by_source.get(i, 0.0) + float(np.prod([vec.max() for vec in per_mode]))
        total += max(by_source.values(), default=0.0)
    return total


def mhn_gamma(p: MhnParams) -> float:
    problems = validate_mhn(p)
    if problems:
        raise InvalidParams("; ".join(problems))
    return float(np.sum(np.prod(np.maximum(1.0, p.theta), axis=1)))


def exit_rates(m: SanModel, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Total outgoing rate of every state, in flat (mode-0-fastest) order."""
    check_model(m)
    if m.num_states > cap:
        raise CapExceeded(f"{m.num_states} states exceed the cap of {cap}")
    states = state_table(m.sizes)
    out = np.zeros(m.num_states)
    for nu in range(m.d):
        for (i, _), per_mode in zip(m.transitions[nu], m.theta[nu]):
            rate = np.where(states[:, nu] == i, 1.0, 0.0)
            for mu in range(m.d):
                rate *= per_mode[mu][states[:, mu]]
            out += rate
    return out


def diagonal_spectrum(m: SanModel, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Eigenvalues of ``Q - Id``: the diagonal entries, one per state."""
    return -1.0 - exit_rates(m, cap)


# ---------------------------------------------------------------------------
# serialization


def model_from_dict(doc: dict) -> SanModel:
    """Model from its JSON form (see README for the schema)."""
    kind = doc.get("kind")
    if kind == "mhn":
        theta = np.asarray(doc["theta"], dtype=float)
        if "d" in doc and int(doc["d"]) != theta.shape[0]:
            raise InvalidParams(f"d={doc['d']} but theta is {theta.shape[0]}x{theta.shape[1]}")
        return from_mhn(MhnParams(theta), doc.get("x0"))
    if kind == "san":
        sizes = [int(n) for n in doc["sizes"]]
        transitions = [[tuple(pair) for pair in per_nu] for per_nu in doc["transitions"]]
        raw = doc["theta"]
        theta = []
        for nu, pairs in enumerate(transitions):
            per_nu = []
            for i, j in pairs:
                key = f"{nu},{i},{j}"
                if key not in raw:
                    raise InvalidModel([f"missing theta entry {key!r}"])
                per_nu.append(tuple(raw[key]))
            theta.append(tuple(per_nu))
        return SanModel(tuple(sizes), tuple(tuple(p) for p in transitions), tuple(theta), doc.get("x0"))
    raise InvalidModel([f"unknown model kind {kind!r}; expected 'mhn' or 'san'"])


def model_to_dict(m: SanModel) -> dict:
    theta = {}
    for nu, (pairs, factors) in enumerate(zip(m.transitions, m.theta)):
        for (i, j), per_mode in zip(pairs, factors):
            theta[f"{nu},{i},{j}"] = [vec.tolist() for vec in per_mode]
    return {
        "kind": "san",
        "sizes": list(m.sizes),
        "transitions": [[list(p) for p in pairs] for pairs in m.transitions],
        "theta": theta,
        "x0": list(m.x0),
    }


def load_mhn_csv(path) -> MhnParams:
    """``d`` rows of ``d`` positive reals."""
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row and not row[0].startswith("#")]
    return MhnParams(np.array(rows))


def load_model(path) -> SanModel:
    """Read a model from ``.json`` or an MHN parameter matrix from ``.csv``."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return from_mhn(load_mhn_csv(path))
    with open(path) as fh:
        return model_from_dict(json.load(fh))
