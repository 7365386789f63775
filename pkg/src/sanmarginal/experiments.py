"""Seeded parameter sampling and the rank, singular-value and convergence studies.

Every sample draws from its own generator, ``numpy.random.default_rng([seed,
d, b, sample])`` (PCG64), so a record depends only on those four numbers and
never on how many samples run or in which order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dense import dense_marginal, tree_singular_values
from .errors import InvalidConfig
from .formats.ht import effective_rank, max_rank
from .formats.tree import DimensionTree, canonical_tree
from .san import MhnParams, from_mhn, mhn_gamma
from .solver import SolverConfig, low_rank_uniformization

CSV_VERSION = 1


@dataclass(frozen=True)
class BlockSamplerConfig:
    """``block_size`` may not divide ``d``; the last block is then shorter."""

    d: int
    block_size: int
    seed: int = 0
    samples: int = 1

    def validate(self):
        if self.d < 1:
            raise InvalidConfig(f"d must be positive, got {self.d}")
        if not 1 <= self.block_size <= self.d:
            raise InvalidConfig(f"block size must lie in 1..{self.d}, got {self.block_size}")
        if self.samples < 1:
            raise InvalidConfig(f"need at least one sample, got {self.samples}")


def blocks(d: int, b: int) -> list[range]:
    return [range(start, min(start + b, d)) for start in range(0, d, b)]


def resolve_block_size(d: int, b) -> int:
    """Integer block size; ``"half"`` (or ``"d/2"``) means ``d // 2`` (at least 1)."""
    if isinstance(b, str):
        if b in ("half", "d/2"):
            return max(1, d // 2)
        b = int(b)
    return int(b)


def sample_block_matrix(d: int, b: int, rng: np.random.Generator) -> np.ndarray:
    """Block-diagonal MHN parameters.

    Inside a block, entry ``(i, j)`` is drawn from a normal distribution with
    mean 1 and standard deviation ``2**(-1 - |i - j|)``, redrawn until positive.
    Blocks are filled in order, row by row. Entries outside the blocks are 1.
    """
    theta = np.ones((d, d))
    for blk in blocks(d, b):
        for i in blk:
            for j in blk:
                sd = 2.0 ** (-1 - abs(i - j))
                x = rng.normal(1.0, sd)
                while x <= 0.0:
                    x = rng.normal(1.0, sd)
                theta[i, j] = x
    return theta


def sample_rng(seed: int, d: int, b: int, sample: int) -> np.random.Generator:
    return np.random.default_rng([seed, d, b, sample])


def sample_block_parameters(cfg: BlockSamplerConfig) -> list[MhnParams]:
    cfg.validate()
    return [
        MhnParams(sample_block_matrix(cfg.d, cfg.block_size, sample_rng(cfg.seed, cfg.d, cfg.block_size, k)))
        for k in range(cfg.samples)
    ]


def _map(fn, jobs, n_jobs):
    if n_jobs is None or n_jobs <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# ---------------------------------------------------------------------------
# singular values


@dataclass
class SvStudyResult:
    d: int
    b: int
    tree: DimensionTree
    samples: int
    mean_sigma: dict[int, np.ndarray]

    def root_children(self) -> tuple[int, int]:
        return self.tree.children[self.tree.root]


def _sv_sample(d, b, seed, k, tree):
    model = from_mhn(MhnParams(sample_block_matrix(d, b, sample_rng(seed, d, b, k))))
    return tree_singular_values(dense_marginal(model), tree)


def run_sv_study(d: int, b: int, tree: DimensionTree | None = None, seed: int = 0, samples: int = 100, n_jobs=None) -> SvStudyResult:
    """Arithmetic mean over samples of each vertex's singular values, from dense solves."""
    b = resolve_block_size(d, b)
    BlockSamplerConfig(d, b, seed, samples).validate()
    tree = tree or canonical_tree(d)
    per_sample = _map(_sv_sample, [(d, b, seed, k, tree) for k in range(samples)], n_jobs)
    mean = {v: np.mean([sv[v] for sv in per_sample], axis=0) for v in per_sample[0]}
    return SvStudyResult(d, b, tree, samples, mean)


# ---------------------------------------------------------------------------
# rank and truncation studies


@dataclass
class StudyRecord:
    sample: int
    seed: int
    d: int
    b: int
    tol: float
    eps: float
    gamma: float
    iterations: int
    residual: float
    r_max: int
    r_eff: int
    converged: bool
    stagnated: bool
    wall_ms: float | None = None


@dataclass
class StudyResult:
    records: list[StudyRecord] = field(default_factory=list)

    def groups(self):
        """Records grouped by configuration, in first-seen order."""
        out: dict[tuple, list[StudyRecord]] = {}
        for r in self.records:
            out.setdefault((r.d, r.b, r.tol, r.eps), []).append(r)
        return out

    def means(self) -> list[dict]:
        rows = []
        for (d, b, tol, eps), recs in self.groups().items():
            row = {"d": d, "b": b, "tol": tol, "eps": eps, "samples": len(recs)}
            for name in ("gamma", "iterations", "residual", "r_max", "r_eff"):
                row[name] = float(np.mean([getattr(r, name) for r in recs]))
            row["converged"] = float(np.mean([r.converged for r in recs]))
            row["stagnated"] = float(np.mean([r.stagnated for r in recs]))
            rows.append(row)
        return rows


def _solve_sample(d, b, seed, k, cfg, tree, timing):
    params = MhnParams(sample_block_matrix(d, b, sample_rng(seed, d, b, k)))
    model = from_mhn(params)
    run_cfg = SolverConfig(**{**asdict(cfg), "gamma": mhn_gamma(params)})
    start = time.perf_counter()
    p, report = low_rank_uniformization(model, run_cfg, tree)
    wall = (time.perf_counter() - start) * 1e3
    return StudyRecord(
        sample=k, seed=seed, d=d, b=b, tol=cfg.tol, eps=cfg.eps_rel, gamma=report.gamma,
        iterations=report.iterations, residual=report.final_residual, r_max=max_rank(p), r_eff=effective_rank(p),
        converged=report.converged, stagnated=report.stagnated, wall_ms=wall if timing else None,
    )


def run_rank_study(
    d_list, b_list, tol: float = 1e-4, eps: float = 1e-8, seed: int = 0, samples: int = 100,
    max_iter: int = 5000, patience: int | None = 50, timing: bool = False, n_jobs=None,
) -> StudyResult:
    """Solve sampled models for every ``(d, b)`` and record final ranks.

    Non-convergence is recorded, not raised.
    """
    cfg = SolverConfig(tol=tol, eps_rel=eps, max_iter=max_iter, patience=patience)
    jobs = []
    for d in d_list:
        for b in b_list:
            bb = resolve_block_size(d, b)
            BlockSamplerConfig(d, bb, seed, samples).validate()
            jobs += [(d, bb, seed, k, cfg, canonical_tree(d), timing) for k in range(samples)]
    return StudyResult(_map(_solve_sample, jobs, n_jobs))


def run_truncation_study(
    d: int, b, tol_list, eps_list, seed: int = 0, samples: int = 100,
    max_iter: int = 5000, patience: int | None = 50, timing: bool = False, n_jobs=None,
) -> StudyResult:
    """Like :func:`run_rank_study` over a grid of tolerances and truncation errors."""
    b = resolve_block_size(d, b)
    BlockSamplerConfig(d, b, seed, samples).validate()
    jobs = []
    for tol in tol_list:
        for eps in eps_list:
            cfg = SolverConfig(tol=tol, eps_rel=eps, max_iter=max_iter, patience=patience)
            jobs += [(d, b, seed, k, cfg, canonical_tree(d), timing) for k in range(samples)]
    return StudyResult(_map(_solve_sample, jobs, n_jobs))


# ---------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceCurve:
    sample: int
    d: int
    b: int
    gamma: float
    residuals: list[float]

    @property
    def theoretical_rate(self) -> float:
        return self.gamma / (1.0 + self.gamma)

    def asymptotic_rate(self, tail: int = 20) -> float:
        """Slope of a least-squares line through the last ``tail`` log-residuals."""
        res = np.asarray(self.residuals[-tail:])
        if res.size < 2:
            return float("nan")
        slope = np.polyfit(np.arange(res.size), np.log(res), 1)[0]
        return float(np.exp(slope))


@dataclass
class ConvergenceResult:
    curves: list[ConvergenceCurve]

    def for_d(self, d: int) -> list[ConvergenceCurve]:
        return [c for c in self.curves if c.d == d]

    def stats(self, d: int) -> list[dict]:
        """Per-iteration mean and quartiles over the samples still running."""
        curves = self.for_d(d)
        length = max(len(c.residuals) for c in curves)
        rows = []
        for k in range(length):
            vals = np.array([c.residuals[k] for c in curves if k < len(c.residuals)])
            q25, med, q75 = np.percentile(vals, [25, 50, 75])
            rows.append({"iter": k, "mean": float(vals.mean()), "q25": q25, "median": med, "q75": q75, "n": vals.size})
        return rows

    def mean_rate(self, d: int, tail: int = 20) -> float:
        return float(np.mean([c.asymptotic_rate(tail) for c in self.for_d(d)]))


def _curve_sample(d, b, seed, k, cfg):
    params = MhnParams(sample_block_matrix(d, b, sample_rng(seed, d, b, k)))
    run_cfg = SolverConfig(**{**asdict(cfg), "gamma": mhn_gamma(params)})
    _, report = low_rank_uniformization(from_mhn(params), run_cfg)
    return ConvergenceCurve(k, d, b, report.gamma, [report.initial_residual] + report.residual_history)


def run_convergence_study(
    d_list, b, tol: float = 1e-4, eps: float = 1e-8, seed: int = 0, samples: int = 100,
    max_iter: int = 5000, n_jobs=None,
) -> ConvergenceResult:
    """Residual after every iteration (index 0 is the initial guess)."""
    cfg = SolverConfig(tol=tol, eps_rel=eps, max_iter=max_iter)
    jobs = []
    for d in d_list:
        bb = resolve_block_size(d, b)
        BlockSamplerConfig(d, bb, seed, samples).validate()
        jobs += [(d, bb, seed, k, cfg) for k in range(samples)]
    return ConvergenceResult(_map(_curve_sample, jobs, n_jobs))


# ---------------------------------------------------------------------------
# output


def _writer(kind: str):
    buf = io.StringIO()
    buf.write(f"# sanmarginal {kind} csv v{CSV_VERSION}\n")
    return buf, csv.writer(buf, lineterminator="\n")


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else str(x)
    return x


def sv_study_csv(result: SvStudyResult) -> str:
    buf, w = _writer("sv-study")
    w.writerow(["vertex_id", "mode_set", "sv_index", "mean_sigma"])
    for v in sorted(result.mean_sigma):
        modes = " ".join(str(m + 1) for m in result.tree.modes[v])
        for i, s in enumerate(result.mean_sigma[v], start=1):
            w.writerow([v, modes, i, _fmt(float(s))])
    return buf.getvalue()


RANK_COLUMNS = ["sample", "d", "b", "gamma", "iters", "residual", "r_max", "r_eff", "wall_ms"]
TRUNC_COLUMNS = ["sample", "d", "b", "tol", "eps", "gamma", "iters", "residual", "r_max", "r_eff", "converged", "stagnated", "wall_ms"]


def _record_row(r: StudyRecord, columns):
    values = {**asdict(r), "iters": r.iterations}
    return [_fmt(values[c]) for c in columns]


def _mean_row(m: dict, columns):
    values = {**m, "sample": "mean", "iters": m["iterations"], "wall_ms": None}
    return [_fmt(values[c]) for c in columns]


def rank_study_csv(result: StudyResult, columns=RANK_COLUMNS, kind: str = "rank-study") -> str:
    buf, w = _writer(kind)
    w.writerow(columns)
    for r in result.records:
        w.writerow(_record_row(r, columns))
    for m in result.means():
        w.writerow(_mean_row(m, columns))
    return buf.getvalue()


def trunc_study_csv(result: StudyResult) -> str:
    return rank_study_csv(result, TRUNC_COLUMNS, "trunc-study")


def conv_study_csv(result: ConvergenceResult) -> str:
    buf, w = _writer("conv-study")
    w.writerow(["d", "sample", "iter", "residual"])
    for c in result.curves:
        for k, res in enumerate(c.residuals):
            w.writerow([c.d, c.sample, k, _fmt(float(res))])
    for d in dict.fromkeys(c.d for c in result.curves):
        for row in result.stats(d):
            for name in ("mean", "q25", "median", "q75"):
                w.writerow([d, name, row["iter"], _fmt(float(row[name]))])
    return buf.getvalue()


def to_json(result) -> str:
    if isinstance(result, SvStudyResult):
        payload = {
            "d": result.d, "b": result.b, "samples": result.samples,
            "leaf_order": [m + 1 for m in result.tree.leaf_order],
            "vertices": [
                {"vertex_id": v, "modes": [m + 1 for m in result.tree.modes[v]], "mean_sigma": result.mean_sigma[v].tolist()}
                for v in sorted(result.mean_sigma)
            ],
        }
    elif isinstance(result, StudyResult):
        payload = {"records": [asdict(r) for r in result.records], "means": result.means()}
    elif isinstance(result, ConvergenceResult):
        payload = {
            "curves": [asdict(c) for c in result.curves],
            "stats": {str(d): result.stats(d) for d in dict.fromkeys(c.d for c in result.curves)},
        }
    else:
        raise TypeError(f"cannot serialize {type(result).__name__}")
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
