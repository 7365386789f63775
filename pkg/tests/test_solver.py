import numpy as np
import pytest

from _models import random_mhn, random_san
from sanmarginal import (
    InvalidConfig,
    InvalidGamma,
    InvalidModel,
    MhnParams,
    NotConverged,
    SanModel,
    SolverConfig,
    canonical_tree,
    convergence_bound,
    dense_marginal,
    from_mhn,
    ht_sum,
    low_rank_uniformization,
    mhn_gamma,
    relative_residual,
)
from sanmarginal import experiments as ex
from sanmarginal.solver import iterations_for, a_priori_constant


def plain_uniformization(m, gamma, steps):
    """Untruncated dense partial sums of the normalized power series."""
    from sanmarginal import dense_generator

    q = dense_generator(m).array
    n = q.shape[0]
    p_step = np.eye(n) + q / gamma
    rho = gamma / (1 + gamma)
    term = np.zeros(n)
    term[0] = 1.0
    total = term.copy()
    for k in range(1, steps + 1):
        term = rho * p_step @ term
        total += term
    return total / total.sum()


@pytest.mark.parametrize("seed", range(6))
def test_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    d = 2 + seed % 4
    p = MhnParams(ex.sample_block_matrix(d, 2, rng))
    m = from_mhn(p)
    x, rep = low_rank_uniformization(m, SolverConfig(gamma=mhn_gamma(p), tol=1e-9, eps_rel=1e-12))
    assert rep.converged
    np.testing.assert_allclose(x.full(), dense_marginal(m).array, atol=1e-7)
    assert ht_sum(x) == pytest.approx(1.0, abs=1e-13)


def test_iterates_equal_plain_uniformization_without_truncation():
    p = random_mhn(np.random.default_rng(1), 3)
    m = from_mhn(p)
    gamma = 4.0 * mhn_gamma(p)  # any gamma above the exit rates works
    seen = {}
    low_rank_uniformization(
        m, SolverConfig(gamma=gamma, tol=1e-300, eps_rel=0.0, max_iter=12),
        callback=lambda k, p, c: seen.__setitem__(k, p.full().ravel(order="F") / c),
    )
    for k in (0, 1, 5, 12):
        np.testing.assert_allclose(seen[k], plain_uniformization(m, gamma, k), atol=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_general_san(seed):
    rng = np.random.default_rng(100 + seed)
    m = random_san(rng, 3)
    if not any(m.transitions):
        pytest.skip("no transitions drawn")
    x, rep = low_rank_uniformization(m, SolverConfig(tol=1e-10, eps_rel=1e-13))
    assert rep.converged
    np.testing.assert_allclose(x.full(), dense_marginal(m).array, atol=1e-8)


def test_non_canonical_tree():
    p = MhnParams(ex.sample_block_matrix(5, 5, np.random.default_rng(0)))
    m = from_mhn(p)
    tree = canonical_tree(5, [4, 0, 3, 1, 2])
    x, rep = low_rank_uniformization(m, SolverConfig(tol=1e-9, eps_rel=1e-12), tree)
    np.testing.assert_allclose(x.full(), dense_marginal(m).array, atol=1e-7)


def test_report_histories_and_mass():
    m = from_mhn(random_mhn(np.random.default_rng(2), 4, 0.5, 1.5))
    x, rep = low_rank_uniformization(m, SolverConfig(tol=1e-6))
    assert rep.iterations == len(rep.residual_history) == len(rep.mass_history) == len(rep.rank_history)
    for s, c in rep.mass_history:
        assert abs(s - c) <= 1e-12 * c
    np.testing.assert_allclose(rep.power_mass_history, 1.0, atol=1e-12)
    assert rep.final_residual == rep.residual_history[-1] < 1e-6
    assert relative_residual(m, x) == pytest.approx(rep.final_residual, rel=1e-6)
    assert 0 < rep.empirical_rate() < 1
    assert rep.theoretical_rate == pytest.approx(rep.gamma / (1 + rep.gamma))


def test_check_every():
    m = from_mhn(random_mhn(np.random.default_rng(2), 3, 0.5, 1.5))
    _, rep = low_rank_uniformization(m, SolverConfig(tol=1e-6, check_every=5))
    assert rep.converged and rep.iterations % 5 == 0
    assert len(rep.residual_history) == rep.iterations // 5


@pytest.mark.parametrize("seed", range(4))
def test_a_priori_bound_on_exact_iterates(seed):
    rng = np.random.default_rng(seed)
    d = 1 + seed % 3
    p = random_mhn(rng, d)
    m = from_mhn(p)
    gamma = mhn_gamma(p)
    exact = dense_marginal(m).array
    p0 = np.zeros_like(exact)
    p0[(0,) * d] = 1.0
    c = a_priori_constant(p0, exact, gamma)
    errs = []
    _, rep = low_rank_uniformization(
        m, SolverConfig(gamma=gamma, tol=1e-300, eps_rel=0.0, max_iter=60),
        callback=lambda k, pk, ck: errs.append(np.linalg.norm(pk.full() / ck - exact)),
    )
    assert rep.constant_c == pytest.approx(c)
    for k, e in enumerate(errs):
        assert e <= convergence_bound(k, gamma, c) + 1e-14


def test_convergence_bound_and_iteration_count():
    assert convergence_bound(0, 3.0, 2.0) == 2.0
    assert convergence_bound(2, 3.0, 1.0) == pytest.approx(0.75 ** 2)
    k = iterations_for(1e-4, 3.0, 2.0)
    assert convergence_bound(k, 3.0, 2.0) <= 1e-4 < convergence_bound(k - 1, 3.0, 2.0)
    with pytest.raises(ValueError):
        convergence_bound(-1, 1.0, 1.0)


def test_not_converged_returns_best_or_raises():
    m = from_mhn(random_mhn(np.random.default_rng(5), 4))
    x, rep = low_rank_uniformization(m, SolverConfig(tol=1e-12, max_iter=3))
    assert not rep.converged and rep.iterations == 3
    assert ht_sum(x) == pytest.approx(1.0)
    assert rep.final_residual >= min(rep.residual_history)
    with pytest.raises(NotConverged) as err:
        low_rank_uniformization(m, SolverConfig(tol=1e-12, max_iter=3, raise_on_failure=True))
    assert err.value.report.iterations == 3


def test_patience_stops_stagnating_runs():
    m = from_mhn(MhnParams(ex.sample_block_matrix(6, 3, np.random.default_rng(0))))
    _, rep = low_rank_uniformization(m, SolverConfig(tol=1e-14, eps_rel=1e-3, patience=5, max_iter=2000))
    assert rep.stagnated and not rep.converged and rep.iterations < 2000


def test_rank_cap_respected():
    m = from_mhn(MhnParams(ex.sample_block_matrix(6, 6, np.random.default_rng(0))))
    _, rep = low_rank_uniformization(m, SolverConfig(tol=1e-3, rank_cap=2))
    assert max(r for r, _ in rep.rank_history) <= 2


@pytest.mark.parametrize(
    "cfg",
    [
        SolverConfig(gamma=0.0),
        SolverConfig(tol=0.0),
        SolverConfig(eps_rel=-1.0),
        SolverConfig(max_iter=0),
        SolverConfig(check_every=0),
    ],
)
def test_invalid_config(cfg):
    with pytest.raises(InvalidConfig):
        low_rank_uniformization(from_mhn(MhnParams([[1.0]])), cfg)


def test_gamma_below_exit_rates():
    with pytest.raises(InvalidGamma):
        low_rank_uniformization(from_mhn(MhnParams([[2.0]])), SolverConfig(gamma=1.0))
    with pytest.raises(InvalidGamma):
        low_rank_uniformization(SanModel((2,), ((),), ((),)))


def test_tree_mismatch_and_invalid_model():
    with pytest.raises(InvalidConfig):
        low_rank_uniformization(from_mhn(MhnParams(np.ones((2, 2)))), tree=canonical_tree(3))
    bad = SanModel((2,), (((1, 0),),), (((np.ones(2),),),))
    with pytest.raises(InvalidModel):
        low_rank_uniformization(bad)
