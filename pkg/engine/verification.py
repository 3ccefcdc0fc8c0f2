#!/usr/bin/env python3
"""
Property Verification Suites
matrices, plant, potential and lyapunov checks on seeded random inputs;
each check reports its observed value against a tolerance.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import structlog

from utils.errors import ConfigurationError
from utils.plant import SpacecraftParams, SpacecraftPlant, envelope_bounds
from utils.potential import PotentialSpec, branch_jumps, gradient, radial_derivative, value_at
from utils.topology import (build_graph, is_subgraph, leader_reaches_all, matrices, min_eig_sym,
                            permute, remove_edges)

logger = structlog.get_logger(__name__)

BUNDLED_CASE1 = Path(__file__).resolve().parent.parent / "input" / "case1.cfg"


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    observed: Union[float, int, bool, str]
    tolerance: Union[float, str]
    relation: str
    passed: bool


def _check(suite: str, name: str, observed, tolerance, relation: str) -> CheckResult:
    comparisons: Dict[str, Callable] = {
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
        "==": lambda a, b: a == b,
    }
    passed = bool(comparisons[relation](observed, tolerance))
    return CheckResult(suite, name, observed, tolerance, relation, passed)


def random_tree_positions(rng: np.random.Generator, n: int, R: float, p: int = 3) -> np.ndarray:
    """Leader at row 0; each follower lands within R of an earlier agent"""
    positions = np.zeros((n + 1, p))
    for i in range(1, n + 1):
        anchor = positions[rng.integers(0, i)]
        direction = rng.normal(size=p)
        direction /= np.linalg.norm(direction)
        positions[i] = anchor + direction * rng.uniform(0.1, 0.95) * R
    return positions


def verify_matrices(seed: int = 2024, samples: int = 200) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    R = 200.0
    incidence_ok, row_sums_ok = True, True
    reachable_floor = math.inf
    ordering_floor = math.inf
    permutation_error = 0.0

    for _ in range(samples):
        n = int(rng.integers(1, 9))
        positions = random_tree_positions(rng, n, R)
        g = build_graph(positions[0], positions[1:], R)
        tm = matrices(g)
        incidence_ok &= bool(np.array_equal(tm.L_F, tm.D_F @ tm.D_F.T))
        row_sums_ok &= bool(np.all(tm.L_F.sum(axis=1) == 0))
        if leader_reaches_all(g):
            reachable_floor = min(reachable_floor, min_eig_sym(tm.H))

        perm = [int(k) + 1 for k in rng.permutation(n)]
        P = np.zeros((n, n), dtype=np.int64)
        for old, new in enumerate(perm):
            P[new - 1, old] = 1
        permuted = matrices(permute(g, perm)).H
        permutation_error = max(permutation_error, float(np.max(np.abs(P @ tm.H @ P.T - permuted))))

    for _ in range(samples):
        n = int(rng.integers(2, 9))
        scatter = rng.uniform(-1.5 * R, 1.5 * R, size=(n + 1, 3))
        b = build_graph(scatter[0], scatter[1:], R)
        edges = sorted(b.edge_set())
        dropped = [e for e in edges if rng.uniform() < 0.5]
        a = remove_edges(b, dropped)
        if not is_subgraph(a, b):
            ordering_floor = -math.inf
            continue
        ordering_floor = min(ordering_floor, min_eig_sym(matrices(b).H - matrices(a).H))

    example = min_eig_sym(np.array([[2.0, -1.0], [-1.0, 1.0]]))
    return [
        _check("matrices", "incidence_product_exact", incidence_ok, True, "=="),
        _check("matrices", "laplacian_row_sums_zero", row_sums_ok, True, "=="),
        _check("matrices", "reachable_H_positive_definite", reachable_floor, 1e-10, ">"),
        _check("matrices", "subgraph_H_ordering", ordering_floor, -1e-10, ">="),
        _check("matrices", "permutation_consistency", permutation_error, 0.0, "=="),
        _check("matrices", "closed_form_eigenvalue_error", abs(example - (3 - math.sqrt(5)) / 2), 1e-9, "<="),
    ]


def verify_plant(seed: int = 7, samples: int = 1000, envelope_radius: float = 1000.0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    masses = (35.0, 40.0, 45.0, 50.0)
    plants = [SpacecraftPlant(SpacecraftParams(mass=m, r_0=7.0e6)) for m in masses]
    skew, regress, round_trip, mass_spread = 0.0, 0.0, 0.0, 0.0

    for k in range(samples):
        plant = plants[k % len(plants)]
        q = rng.uniform(-envelope_radius, envelope_radius, 3)
        qd, s, x, y = (rng.normal(size=3) for _ in range(4))
        C = plant.coriolis(q, qd)
        skew = max(skew, abs(float(s @ C @ s)) / float(s @ s))
        lhs = plant.lhs(q, qd, x, y)
        residual = np.linalg.norm(plant.regressor(q, qd, x, y) @ plant.theta_true - lhs)
        regress = max(regress, float(residual / (1.0 + np.linalg.norm(lhs))))
        u = rng.normal(size=3) * plant.params.mass
        back = plant.mass_matrix(q) @ plant.accel(q, qd, u) + C @ qd + plant.gravity(q)
        round_trip = max(round_trip, float(np.linalg.norm(back - u) / np.linalg.norm(u)))
        lo, hi = plant.mass_bounds()
        eigenvalues = np.linalg.eigvalsh(plant.mass_matrix(q))
        mass_spread = max(mass_spread, float(max(lo - eigenvalues.min(), eigenvalues.max() - hi)))

    k_c, k_g = envelope_bounds(plants[-1], envelope_radius, seed=seed)
    logger.info("plant envelope bounds", radius=envelope_radius, k_C=k_c, k_g=k_g)
    return [
        _check("plant", "skew_symmetry_residual", skew, 1e-10, "<"),
        _check("plant", "regressor_residual", regress, 1e-9, "<"),
        _check("plant", "accel_round_trip", round_trip, 1e-10, "<"),
        _check("plant", "mass_bounds_excess", mass_spread, 0.0, "<="),
        _check("plant", "envelope_k_C", k_c, math.inf, "<"),
        _check("plant", "envelope_k_g", k_g, math.inf, "<"),
    ]


def _finite_difference_error(rng: np.random.Generator, spec: PotentialSpec, connected: bool,
                             intervals, count: int = 20) -> float:
    worst, taken = 0.0, 0
    h = 1e-3
    while taken < count:
        lo, hi = intervals[int(rng.integers(0, len(intervals)))]
        d = float(rng.uniform(lo, hi))
        exact = radial_derivative(d, spec, connected)
        if abs(exact) < 1e-5:
            continue
        estimate = (value_at(d + h, spec, connected) - value_at(d - h, spec, connected)) / (2 * h)
        worst = max(worst, abs(estimate - exact) / abs(exact))
        taken += 1
    return worst


def verify_potential(seed: int = 11, spec: Optional[PotentialSpec] = None) -> List[CheckResult]:
    spec = spec or PotentialSpec()
    rng = np.random.default_rng(seed)
    antisymmetry, radiality, at_minimum, beyond = 0.0, 0.0, 0.0, 0.0

    for _ in range(200):
        connected = bool(rng.integers(0, 2))
        a = rng.uniform(-100, 100, 3)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        b = a + direction * rng.uniform(1.0, spec.R * 0.999)
        g_ab, g_ba = gradient(a, b, spec, connected), gradient(b, a, spec, connected)
        antisymmetry = max(antisymmetry, float(np.max(np.abs(g_ab + g_ba))))
        d = float(np.linalg.norm(a - b))
        norm = float(np.linalg.norm(g_ab))
        if norm > 0:
            radiality = max(radiality, float(np.linalg.norm(np.cross(g_ab, a - b))) / (norm * d))
        # axis-aligned integer offsets keep the separation exactly d_bar
        corner = rng.integers(-100, 100, 3).astype(float)
        partner = corner.copy()
        partner[int(rng.integers(0, 3))] += spec.d_bar
        at_minimum = max(at_minimum, float(np.linalg.norm(gradient(corner, partner, spec, connected))))
        far = a + direction * rng.uniform(spec.R, 3 * spec.R)
        beyond = max(beyond, float(np.linalg.norm(gradient(a, far, spec, False))))

    inner = (0.1 * spec.d_bar, 0.95 * spec.d_bar)
    fd_free = _finite_difference_error(rng, spec, False, [inner, (spec.d_bar + 1.0, spec.R - 1.0)])
    fd_barrier = _finite_difference_error(rng, spec, True, [inner, (spec.d_bar + 1.0, spec.R - 5.0)])

    # monotone away from d_bar: both sides of the barrier regime, and up to the
    # first crest of the cosine branch in the free regime
    below = np.linspace(0.05 * spec.d_bar, spec.d_bar, 200)
    crest = spec.d_bar + 0.5 * math.pi / spec.cosine_rate
    monotone = True
    lowest = math.inf
    for connected, above in ((True, np.linspace(spec.d_bar, spec.R - 1.0, 200)),
                             (False, np.linspace(spec.d_bar, min(crest, spec.R), 100))):
        left = np.array([value_at(d, spec, connected) for d in below])
        right = np.array([value_at(d, spec, connected) for d in above])
        monotone &= bool(np.all(np.diff(left) < 0) and np.all(np.diff(right) > 0))
        lowest = min(lowest, float(left.min()), float(right.min()))
    for d in np.linspace(1.0, 2 * spec.R, 400):
        if d < spec.R:
            lowest = min(lowest, value_at(d, spec, True))
        lowest = min(lowest, value_at(d, spec, False))

    jumps = branch_jumps(spec)
    return [
        _check("potential", "antisymmetry", antisymmetry, 0.0, "=="),
        _check("potential", "radiality", radiality, 1e-12, "<"),
        _check("potential", "zero_at_minimum_distance", at_minimum, 1e-14, "<"),
        _check("potential", "zero_beyond_radius", beyond, 0.0, "=="),
        _check("potential", "finite_difference_free", fd_free, 1e-4, "<"),
        _check("potential", "finite_difference_barrier", fd_barrier, 1e-4, "<"),
        _check("potential", "monotone_away_from_minimum", monotone, True, "=="),
        _check("potential", "nonnegative_value", lowest, 0.0, ">="),
        _check("potential", "barrier_joint_continuity", jumps["connected.d_bar"], 1e-10, "<"),
        CheckResult("potential", "free_jump_at_radius", jumps["not_connected.R"], "reported", "info", True),
    ]


def verify_lyapunov(scenario_path: Union[str, Path] = BUNDLED_CASE1, t_end: float = 20.0,
                    tolerance: float = 1e-6) -> List[CheckResult]:
    """Shortened constant-velocity run: V nonincreasing and no edge lost"""
    from engine.diagnostics import diagnostics
    from engine.scenario import parse_scenario
    from engine.simulator import run

    scenario = parse_scenario(scenario_path)
    scenario = scenario.model_copy(update={
        "integration": scenario.integration.model_copy(update={"t_end": t_end})})
    log = run(scenario)
    diag = diagnostics(log, scenario)
    return [
        _check("lyapunov", "max_V_increase", diag.max_lyapunov_increase(), tolerance, "<="),
        _check("lyapunov", "edges_lost", diag.edges_lost, 0, "=="),
        _check("lyapunov", "min_distance", diag.R_min, 1.0, ">"),
        _check("lyapunov", "cap_engagements", diag.cap_engagements, 0, "=="),
        _check("lyapunov", "lambda_min_floor", float(np.min(diag.lambda_min) - diag.lambda_min[0]), -1e-9, ">="),
    ]


SUITES: Dict[str, Callable[[], List[CheckResult]]] = {
    "matrices": verify_matrices,
    "plant": verify_plant,
    "potential": verify_potential,
    "lyapunov": verify_lyapunov,
}


def verify(suite: str) -> List[CheckResult]:
    if suite == "all":
        names = list(SUITES)
    elif suite in SUITES:
        names = [suite]
    else:
        raise ConfigurationError(f"unknown suite '{suite}', expected one of {sorted(SUITES) + ['all']}")
    checks: List[CheckResult] = []
    for name in names:
        results = SUITES[name]()
        failed = [c.name for c in results if not c.passed]
        logger.info("suite finished", suite=name, checks=len(results), failed=failed)
        checks.extend(results)
    return checks
