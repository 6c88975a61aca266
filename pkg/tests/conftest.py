"""Shared problems, published reference values, and session-scoped solves.

The two reference plants are exercised by several modules; solving them is
the expensive part, so each configuration is solved once per session and
reused. Values in PUBLISHED_* dicts are the reference results they are compared
against (see tests for the tolerances applied).
"""

import numpy as np
import pytest

import hinfgcc as hg

# --- aircraft short-period example (3 states, 1 input) ---------------------

EX1_A = np.array(
    [
        [-0.9896, 17.41, 96.15],
        [0.2648, -0.8512, -11.39],
        [0.0, 0.0, -30.0],
    ]
)
EX1_B2 = np.array([[-97.78], [0.0], [30.0]])
EX1_B1 = np.eye(3)
EX1_C = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 0.0]])
EX1_D = np.array([[0.0], [0.0], [1.0]])

PUBLISHED_EX1 = {
    "W_star": np.array(
        [
            [41.2179, -3.9386, -12.5019, 4.7155],
            [-3.9386, 0.8802, 0.7774, -0.8563],
            [-12.5019, 0.7774, 4.2692, -1.6152],
            [4.7155, -0.8563, -1.6152, 127.8537],
        ]
    ),
    "mu_star": 4.4342,
    "K_star": np.array([[-1.4754, -4.0811, -3.9557]]),
    "gamma_star": 0.4749,
    "sweep_peak": 0.4770,
    "sweep_peak_db": -6.43,
    "sigma": 0.001,
    "tau": 0.618,
    "eps": 1e-4,
}

# --- 2-state example with 256 extreme systems -------------------------------

EX2_A = np.array([[0.2229, 0.5637], [0.8708, 0.9984]])
EX2_B2 = np.array([[0.5254, 0.6644], [0.3872, 0.9145]])
EX2_B1 = np.eye(2)
EX2_C = np.vstack([np.eye(2), np.zeros((2, 2))])
EX2_D = np.vstack([np.zeros((2, 2)), np.eye(2)])

PUBLISHED_EX2 = {
    "W_star": np.array(
        [
            [0.1608, 0.0058, 0.1673, 0.0665],
            [0.0058, 0.0129, 0.0327, 0.0744],
            [0.1673, 0.0327, 0.6892, 0.2970],
            [0.0665, 0.0744, 0.2970, 1.2701],
        ]
    ),
    "mu_star": 0.0410,
    "K_star": np.array([[0.9643, 2.1060], [0.2088, 5.6843]]),
    "gamma_star": 4.9411,
    # published singular-value peak; matches the all-lower-bounds extreme
    # system (vertex 0), not the nominal closed loop
    "sweep_peak": 3.3651,
    "sweep_peak_db": 10.54,
    "sigma": 0.1,
    "tau": 0.618,
    "eps": 5e-4,
}


def make_example1_plant() -> hg.PlantModel:
    return hg.PlantModel(A=EX1_A, B1=EX1_B1, B2=EX1_B2, C=EX1_C, D=EX1_D)


def make_example2_plant() -> hg.PlantModel:
    return hg.PlantModel(A=EX2_A, B1=EX2_B1, B2=EX2_B2, C=EX2_C, D=EX2_D)


def make_toy_plant() -> hg.PlantModel:
    """1-state plant whose optimal gain k = 1 is known in closed form."""
    return hg.PlantModel(A=[[-1.0]], B1=[[1.0]], B2=[[1.0]], C=[[1.0], [0.0]], D=[[0.0], [1.0]])


class BuiltProblem:
    """Plant together with its vertex set and assembled program data."""

    def __init__(self, plant: hg.PlantModel, spec: hg.UncertaintySpec):
        self.plant = plant
        self.vset = hg.enumerate_vertices(plant, spec)
        self.ext = hg.build_extended(plant, self.vset)
        self.schur = hg.build_schur(self.ext)


@pytest.fixture(scope="session")
def example1() -> BuiltProblem:
    return BuiltProblem(make_example1_plant(), hg.UncertaintySpec.none())


@pytest.fixture(scope="session")
def example2() -> BuiltProblem:
    spec = hg.UncertaintySpec.relative(0.2 * np.ones((2, 2)), 0.2 * np.ones((2, 2)))
    return BuiltProblem(make_example2_plant(), spec)


@pytest.fixture(scope="session")
def toy() -> BuiltProblem:
    return BuiltProblem(make_toy_plant(), hg.UncertaintySpec.none())


@pytest.fixture(scope="session")
def example1_published_solution(example1) -> hg.Solution:
    """Run at the published parameters (sigma 0.001, tau 0.618, eps 1e-4)."""
    config = hg.SolverConfig(sigma=PUBLISHED_EX1["sigma"], tau=PUBLISHED_EX1["tau"], eps=PUBLISHED_EX1["eps"])
    return hg.solve(example1.schur, config)


@pytest.fixture(scope="session")
def example1_tight_solution(example1) -> hg.Solution:
    """Tighter run used for the certified-feasibility acceptance path."""
    return hg.solve(example1.schur, hg.SolverConfig(sigma=0.01, tau=1.618, eps=1e-4))


@pytest.fixture(scope="session")
def example2_published_solution(example2) -> hg.Solution:
    config = hg.SolverConfig(sigma=PUBLISHED_EX2["sigma"], tau=PUBLISHED_EX2["tau"], eps=PUBLISHED_EX2["eps"])
    return hg.solve(example2.schur, config)


@pytest.fixture(scope="session")
def example2_tight_solution(example2) -> hg.Solution:
    return hg.solve(example2.schur, hg.SolverConfig(sigma=0.1, tau=0.618, eps=1e-4))


@pytest.fixture(scope="session")
def toy_solution(toy) -> hg.Solution:
    return hg.solve(toy.schur, hg.SolverConfig(sigma=1.0, tau=1.618, eps=1e-6))
