"""Normalized low-rank uniformization for the time-marginal distribution.

The marginal distribution ``p`` solves ``(Id - Q) p = p0``. With
``P = Id + Q / gamma`` and ``rho = gamma / (1 + gamma)`` it is the normalized
limit of the partial sums ``sum_m rho**m P**m p0``. The iteration below keeps
every partial sum and every power ``P**m p0`` in HT format, truncating after
each step and rescaling so that their entries sum to the exact masses
``c_k = sum_{m<=k} rho**m`` and one, respectively.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, InvalidGamma, NotConverged
from .formats.cp import CpOperator
from .formats.ht import (
    HtTensor,
    effective_rank,
    ht_from_cp,
    ht_norm,
    ht_scale,
    ht_sum,
    max_rank,
    orthogonal_norm,
    orthogonalize_sum,
    truncate_orthogonal,
)
from .formats.tree import DimensionTree, canonical_tree
from .san import SanModel, build_cp_generator, build_identity, build_initial, check_model, exit_rates, gamma_bound

log = logging.getLogger(__name__)

# models up to this many states get the dense gamma check and the constant c
DENSE_CHECK_STATES = 2 ** 10


@dataclass
class SolverConfig:
    """``gamma=None`` picks :func:`~sanmarginal.san.gamma_bound`.

    ``patience`` stops the iteration early (flagged as stagnated) when the best
    residual has not improved for that many residual checks.
    """

    gamma: float | None = None
    tol: float = 1e-4
    eps_rel: float = 1e-8
    max_iter: int = 5000
    rank_cap: int | dict | None = None
    check_every: int = 1
    patience: int | None = None
    raise_on_failure: bool = False

    def validate(self):
        if self.gamma is not None and not self.gamma > 0:
            raise InvalidConfig(f"gamma must be positive, got {self.gamma}")
        if not self.tol > 0:
            raise InvalidConfig(f"tol must be positive, got {self.tol}")
        if not self.eps_rel >= 0:
            raise InvalidConfig(f"eps_rel must be non-negative, got {self.eps_rel}")
        if self.max_iter < 1:
            raise InvalidConfig(f"max_iter must be at least 1, got {self.max_iter}")
        if self.check_every < 1:
            raise InvalidConfig(f"check_every must be at least 1, got {self.check_every}")


@dataclass
class SolverReport:
    iterations: int
    gamma: float
    converged: bool
    initial_residual: float
    final_residual: float
    residual_history: list[float] = field(default_factory=list)
    rank_history: list[tuple[int, int]] = field(default_factory=list)
    mass_history: list[tuple[float, float]] = field(default_factory=list)
    power_mass_history: list[float] = field(default_factory=list)
    stagnated: bool = False
    constant_c: float | None = None
    best_iteration: int = 0

    @property
    def theoretical_rate(self) -> float:
        return self.gamma / (1.0 + self.gamma)

    def empirical_rate(self, tail: int = 20) -> float:
        """Geometric-mean residual ratio over the last ``tail`` recorded steps."""
        res = np.asarray(self.residual_history, dtype=float)
        res = res[res > 0]
        if res.size < 2:
            return float("nan")
        res = res[-(tail + 1):]
        return float(np.exp(np.mean(np.diff(np.log(res)))))


def convergence_bound(k: int, gamma: float, c: float) -> float:
    """A-priori error bound ``c * (gamma / (1 + gamma))**k``."""
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    return c * (gamma / (1.0 + gamma)) ** k


def a_priori_constant(p0: np.ndarray, p: np.ndarray, gamma: float) -> float:
    """``c = ||p0 / (1 + gamma) - p|| + gamma ||p||`` for dense vectors."""
    return float(np.linalg.norm(p0 / (1.0 + gamma) - p) + gamma * np.linalg.norm(p))


def system_operator(m: SanModel) -> CpOperator:
    """``Id - Q`` in CP format."""
    return build_identity(m) + build_cp_generator(m).scale(-1.0)


def _shifted(q: CpOperator, shift: float, scale: float):
    """Terms of ``shift * Id + scale * Q`` for :func:`orthogonalize_sum`."""
    return [(shift, None)] + [(scale, term) for term in q.terms]


def _residual_norm(q: CpOperator, p: HtTensor, c: float, p0: HtTensor) -> float:
    # (Id - Q) p / c - p0, orthogonalized exactly; its norm sits at the root
    r = orthogonalize_sum([(p, _shifted(q, 1.0 / c, -1.0 / c)), (p0, [(-1.0, None)])])
    return orthogonal_norm(r)


def relative_residual(m: SanModel, p_scaled: HtTensor) -> float:
    """``||(Id - Q) p - p0|| / ||p0||`` evaluated without truncation."""
    p0 = ht_from_cp(build_initial(m), p_scaled.tree)
    return _residual_norm(build_cp_generator(m), p_scaled, 1.0, p0) / ht_norm(p0)


def low_rank_uniformization(
    m: SanModel,
    cfg: SolverConfig | None = None,
    tree: DimensionTree | None = None,
    callback=None,
):
    """Approximate the marginal distribution of ``m`` in HT format.

    Returns ``(p, report)`` where ``p`` sums to one. ``callback(k, p_k, c_k)``,
    if given, sees every unnormalized iterate including ``k = 0``. When the
    tolerance is not reached the best iterate found is returned and
    ``report.converged`` is False (or :class:`NotConverged` is raised if
    ``cfg.raise_on_failure``).
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    check_model(m)
    tree = tree or canonical_tree(m.d)
    if tree.d != m.d:
        raise InvalidConfig(f"tree over {tree.d} modes for a model with {m.d} automata")

    gamma = gamma_bound(m) if cfg.gamma is None else float(cfg.gamma)
    if not gamma > 0:
        raise InvalidGamma("the generator has no transitions; gamma must be positive")
    small = m.num_states <= DENSE_CHECK_STATES
    if small:
        diag_max = float(exit_rates(m).max())
        if gamma < diag_max * (1 - 1e-12):
            raise InvalidGamma(f"gamma={gamma} is below the largest exit rate {diag_max}")

    q = build_cp_generator(m)
    step_terms = _shifted(q, 1.0, 1.0 / gamma)
    p0 = ht_from_cp(build_initial(m), tree)
    norm_p0 = ht_norm(p0)
    rho = gamma / (1.0 + gamma)

    def residual(p, c):
        return _residual_norm(q, p, c, p0) / norm_p0

    p = p0
    p_sum = p0
    s = 1.0
    c = 1.0
    if callback is not None:
        callback(0, p, c)

    res = residual(p, c)
    report = SolverReport(
        iterations=0, gamma=gamma, converged=res < cfg.tol, initial_residual=res, final_residual=res,
    )
    best = (res, p, c, 0)
    since_best = 0
    k = 0
    while not report.converged and k < cfg.max_iter:
        # tau(P p_sum) and tau(p + s p_sum); the exact sums are orthogonalized
        # without materializing them, then truncated as usual
        p_sum = truncate_orthogonal(orthogonalize_sum([(p_sum, step_terms)]), cfg.eps_rel, cfg.rank_cap)
        p_sum = ht_scale(p_sum, 1.0 / ht_sum(p_sum))
        s *= rho
        c += s
        p = truncate_orthogonal(orthogonalize_sum([(p, [(1.0, None)]), (p_sum, [(s, None)])]), cfg.eps_rel, cfg.rank_cap)
        p = ht_scale(p, c / ht_sum(p))
        k += 1

        report.power_mass_history.append(ht_sum(p_sum))
        report.mass_history.append((ht_sum(p), c))
        report.rank_history.append((max_rank(p), effective_rank(p)))
        if callback is not None:
            callback(k, p, c)

        if k % cfg.check_every == 0 or k == cfg.max_iter:
            res = residual(p, c)
            report.residual_history.append(res)
            report.final_residual = res
            if res < best[0]:
                best = (res, p, c, k)
                since_best = 0
            else:
                since_best += 1
            if res < cfg.tol:
                report.converged = True
            elif cfg.patience is not None and since_best >= cfg.patience:
                report.stagnated = True
                log.info("stopping after %d iterations: no progress in %d checks", k, cfg.patience)
                break

    report.iterations = k
    if not report.converged:
        res, p, c, report.best_iteration = best
        if cfg.max_iter <= k and not report.stagnated:
            log.info("no convergence within %d iterations (residual %.3e)", k, report.final_residual)
    else:
        report.best_iteration = k
    result = ht_scale(p, 1.0 / c)

    if small:
        from .dense import dense_marginal

        exact = dense_marginal(m).array
        report.constant_c = a_priori_constant(ht_from_cp(build_initial(m), tree).full(), exact, gamma)

    if not report.converged and cfg.raise_on_failure:
        raise NotConverged(f"residual {report.final_residual:.3e} above tol {cfg.tol}", report)
    return result, report


def iterations_for(tol: float, gamma: float, c: float = 1.0) -> int:
    """Steps after which the a-priori bound ``c * rho**k`` drops below ``tol``."""
    rho = gamma / (1.0 + gamma)
    return max(0, math.ceil(math.log(tol / c) / math.log(rho)))
