import csv
import io
import json

import numpy as np
import pytest
from scipy.stats import kstest, truncnorm
from hypothesis import given, settings
from hypothesis import strategies as st

from sanmarginal import DenseTensor, InvalidConfig, canonical_tree, dense_marginal, from_mhn, tree_singular_values
from sanmarginal import experiments as ex


def rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# sanmarginal ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


@given(st.integers(1, 12), st.data(), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_block_matrix_structure(d, data, seed):
    b = data.draw(st.integers(1, d))
    th = ex.sample_block_matrix(d, b, np.random.default_rng(seed))
    assert th.shape == (d, d) and np.all(th > 0)
    block_of = np.arange(d) // b
    outside = block_of[:, None] != block_of[None, :]
    assert np.all(th[outside] == 1.0)


def test_block_matrix_distribution():
    # each distance class against N(1, 2**(-1-k)) conditioned on being positive
    rng = np.random.default_rng(0)
    draws = np.array([ex.sample_block_matrix(4, 4, rng) for _ in range(4000)])
    for k in range(4):
        vals = np.concatenate([draws[:, i, i + k] for i in range(4 - k)] + [draws[:, i + k, i] for i in range(4 - k) if k])
        sd = 2.0 ** (-1 - k)
        law = truncnorm(-1.0 / sd, np.inf, loc=1.0, scale=sd)
        assert kstest(vals, law.cdf).pvalue > 1e-3


def test_blocks_and_block_size():
    assert [list(r) for r in ex.blocks(5, 2)] == [[0, 1], [2, 3], [4]]
    assert ex.resolve_block_size(8, "half") == 4 and ex.resolve_block_size(8, "d/2") == 4
    assert ex.resolve_block_size(1, "half") == 1 and ex.resolve_block_size(8, "3") == 3
    for cfg in (ex.BlockSamplerConfig(0, 1), ex.BlockSamplerConfig(4, 5), ex.BlockSamplerConfig(4, 2, 0, 0)):
        with pytest.raises(InvalidConfig):
            cfg.validate()


def test_samples_independent_of_count_and_order():
    a = ex.sample_block_parameters(ex.BlockSamplerConfig(6, 3, 9, 5))
    b = ex.sample_block_parameters(ex.BlockSamplerConfig(6, 3, 9, 2))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.theta, y.theta)
    c = ex.sample_block_parameters(ex.BlockSamplerConfig(6, 3, 10, 1))
    assert not np.array_equal(a[0].theta, c[0].theta)


def test_sv_study_is_mean_of_dense_svds():
    res = ex.run_sv_study(4, 2, seed=3, samples=3)
    per = []
    for p in ex.sample_block_parameters(ex.BlockSamplerConfig(4, 2, 3, 3)):
        per.append(tree_singular_values(dense_marginal(from_mhn(p)), canonical_tree(4)))
    for v, s in res.mean_sigma.items():
        np.testing.assert_allclose(s, np.mean([x[v] for x in per], axis=0), rtol=1e-12)
    left, right = res.root_children()
    np.testing.assert_allclose(res.mean_sigma[left], res.mean_sigma[right], atol=1e-14)


def test_sv_study_d2():
    res = ex.run_sv_study(2, 1, samples=2)
    assert set(res.mean_sigma) == {1, 2}
    assert all(s.size <= 2 for s in res.mean_sigma.values())


def test_independent_events_have_small_ranks():
    # the time average couples even independent events, but only weakly
    res = ex.run_rank_study([4], [1], tol=1e-8, eps=1e-10, samples=3)
    for r, p in zip(res.records, ex.sample_block_parameters(ex.BlockSamplerConfig(4, 1, 0, 3))):
        assert r.converged and r.r_max <= 4
        sv = tree_singular_values(dense_marginal(from_mhn(p)), canonical_tree(4))
        assert r.r_max <= max(int(np.count_nonzero(s > 1e-12 * s[0])) for s in sv.values())


def test_rank_study_records_and_csv():
    res = ex.run_rank_study([4, 5], [2], tol=1e-4, eps=1e-8, seed=1, samples=2)
    assert [(r.d, r.sample) for r in res.records] == [(4, 0), (4, 1), (5, 0), (5, 1)]
    means = res.means()
    assert means[0]["r_eff"] == pytest.approx(np.mean([r.r_eff for r in res.records[:2]]))
    table = rows(ex.rank_study_csv(res))
    assert list(table[0]) == ex.RANK_COLUMNS
    assert [t["sample"] for t in table] == ["0", "1", "0", "1", "mean", "mean"]
    assert all(t["wall_ms"] == "" for t in table)
    payload = json.loads(ex.to_json(res))
    assert len(payload["records"]) == 4 and payload["records"][0]["wall_ms"] is None


def test_timing_fills_wall_ms():
    res = ex.run_rank_study([3], [3], samples=1, timing=True)
    assert res.records[0].wall_ms > 0


def test_truncation_study_grid():
    res = ex.run_truncation_study(4, 2, [1e-2, 1e-4], [1e-2, 1e-6], seed=0, samples=2)
    means = res.means()
    assert [(m["tol"], m["eps"]) for m in means] == [(1e-2, 1e-2), (1e-2, 1e-6), (1e-4, 1e-2), (1e-4, 1e-6)]
    table = rows(ex.trunc_study_csv(res))
    assert list(table[0]) == ex.TRUNC_COLUMNS and len(table) == 8 + 4
    # tighter truncation never lowers the mean rank here
    assert means[1]["r_max"] >= means[0]["r_max"]


def test_convergence_study():
    res = ex.run_convergence_study([3, 4], 2, tol=1e-6, seed=0, samples=3)
    assert len(res.for_d(3)) == 3
    for c in res.curves:
        assert c.residuals[0] > c.residuals[-1] and c.residuals[-1] < 1e-6
        assert c.asymptotic_rate() < 1
    stats = res.stats(4)
    assert stats[0]["n"] == 3 and stats[0]["q25"] <= stats[0]["median"] <= stats[0]["q75"]
    table = rows(ex.conv_study_csv(res))
    assert list(table[0]) == ["d", "sample", "iter", "residual"]
    assert {"mean", "q25", "median", "q75"} <= {t["sample"] for t in table}
    json.loads(ex.to_json(res))


def test_sv_csv_and_json():
    res = ex.run_sv_study(3, 3, tree=canonical_tree(3, [2, 0, 1]), samples=1)
    table = rows(ex.sv_study_csv(res))
    assert list(table[0]) == ["vertex_id", "mode_set", "sv_index", "mean_sigma"]
    assert table[0]["mode_set"] == "3 1" or table[0]["mode_set"] == "1 3"
    assert table[0]["sv_index"] == "1"
    payload = json.loads(ex.to_json(res))
    assert payload["leaf_order"] == [3, 1, 2]
    with pytest.raises(TypeError):
        ex.to_json(object())


def test_parallel_map_matches_serial():
    a = ex.run_sv_study(4, 2, seed=1, samples=2)
    b = ex.run_sv_study(4, 2, seed=1, samples=2, n_jobs=2)
    for v in a.mean_sigma:
        np.testing.assert_array_equal(a.mean_sigma[v], b.mean_sigma[v])


def test_dense_tensor_used_by_sv_study():
    # the unfolding convention agrees with numpy's own SVD of a reshaped array
    arr = np.random.default_rng(0).standard_normal((2, 2, 2))
    sv = tree_singular_values(DenseTensor.from_array(arr), canonical_tree(3))
    np.testing.assert_allclose(sv[1], np.linalg.svd(arr.reshape(4, 2), compute_uv=False))
