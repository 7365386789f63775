"""A network with three-state automata and a custom initial state.

Automaton 0 has two stages (0 -> 1 -> 2), automaton 1 one stage and automaton 2
can skip a stage. Factors other than the baseline scale a rate depending on the
current state of another automaton.
"""
import numpy as np

from sanmarginal import SanModel, dense_marginal, gamma_bound, low_rank_uniformization, validate_model
from sanmarginal.solver import SolverConfig

ones2, ones3 = np.ones(2), np.ones(3)
model = SanModel(
    sizes=(3, 2, 3),
    transitions=(((0, 1), (1, 2)), ((0, 1),), ((0, 2),)),
    theta=(
        ((np.array([0.8, 0, 0]), np.array([1.0, 2.0]), ones3),
         (np.array([0, 0.3, 0]), ones2, np.array([1.0, 1.0, 4.0]))),
        ((np.array([1.0, 0.5, 0.5]), np.array([1.5, 0]), ones3),),
        ((ones3, np.array([1.0, 3.0]), np.array([0.2, 0, 0])),),
    ),
    x0=(0, 0, 0),
)
print("problems:", validate_model(model) or "none")
print(f"gamma bound {gamma_bound(model):.3f}")

p, report = low_rank_uniformization(model, SolverConfig(tol=1e-10, eps_rel=1e-12))
full = p.full()
print(f"converged={report.converged} after {report.iterations} iterations")
print("marginal of automaton 0:", np.round(full.sum(axis=(1, 2)), 4))
print(f"agreement with dense solve: {np.max(np.abs(full - dense_marginal(model).array)):.1e}")
