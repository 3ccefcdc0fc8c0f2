#!/usr/bin/env python3
"""
Closed-Loop Simulator
Fixed-step RK4 over the stacked state of all followers. The proximity
graph is rebuilt at every tick and held constant inside the step.

Per-follower block of the flat state vector:
    q (p) | q' (p) | v (p) | theta^ (p_theta) | alpha (n+1) | beta (1)
alpha[j] is the gain on neighbor label j (leader at 0).
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import structlog
from scipy.spatial.distance import pdist

from engine.scenario import Scenario
from utils.agent_interface import ControllerFactory, ControllerState, ControlOutput, NeighborMeasurement
from utils.errors import (BarrierViolationError, CollisionError, NumericalDivergenceError,
                          SafetyViolationError)
from utils.potential import pair_gradients
from utils.topology import (Edge, ProximityGraph, build_graph, edge_changes, leader_reaches_all,
                            matrices, min_eig_sym)

logger = structlog.get_logger(__name__)


@dataclass
class SimState:
    t: float
    k: int
    x: np.ndarray
    graph: ProximityGraph


@dataclass(frozen=True)
class EdgeEvent:
    t: float
    step: int
    kind: str  # "added" | "removed"
    edge: Edge


@dataclass
class SimLog:
    name: str
    n: int
    p: int
    p_theta: int
    dt: float
    steps: int
    times: np.ndarray
    q: np.ndarray           # (S, n, p)
    qd: np.ndarray
    v: np.ndarray
    theta_hat: np.ndarray   # (S, n, p_theta)
    alpha: np.ndarray       # (S, n, n+1)
    beta: np.ndarray        # (S, n)
    leader_q: np.ndarray    # (S, p)
    leader_qd: np.ndarray
    graphs: List[ProximityGraph]
    lambda_min: np.ndarray
    min_distance: np.ndarray
    connected: np.ndarray   # (n+1, n+1) regime of each pair, fixed at t=0
    edge_events: List[EdgeEvent] = field(default_factory=list)
    cap_engagements: int = 0

    @property
    def samples(self) -> int:
        return int(self.times.shape[0])

    @property
    def initial_graph(self) -> ProximityGraph:
        return self.graphs[0]

    @property
    def edge_hashes(self) -> List[str]:
        return [g.edge_hash() for g in self.graphs]

    def velocity_errors(self) -> np.ndarray:
        """|q'_i - q'_0| per sample and follower"""
        return np.linalg.norm(self.qd - self.leader_qd[:, None, :], axis=2)

    def edges_lost(self) -> int:
        initial = self.initial_graph.edge_set()
        return len({e.edge for e in self.edge_events if e.kind == "removed" and e.edge in initial})

    def edges_added(self) -> int:
        initial = self.initial_graph.edge_set()
        return len({e.edge for e in self.edge_events if e.kind == "added" and e.edge not in initial})


class Simulator:
    """Owns every mutable quantity of one run"""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.n, self.p = scenario.n, scenario.p
        self.plants = scenario.plants()
        self.p_theta = self.plants[0].p_theta
        self.spec = scenario.potential_spec()
        self.leader = scenario.leader_trajectory()
        self.controller = ControllerFactory.create(scenario.controller.kind, scenario.controller.gains())
        self.dt = scenario.integration.dt
        self.cap = scenario.integration.gradient_cap
        self.cap_engagements = 0
        self._capped = False

        p, pt = self.p, self.p_theta
        self.block = 3 * p + pt + self.n + 2
        self._q, self._qd, self._v = slice(0, p), slice(p, 2 * p), slice(2 * p, 3 * p)
        self._theta = slice(3 * p, 3 * p + pt)
        self._alpha = slice(3 * p + pt, 3 * p + pt + self.n + 1)

        stacked = np.vstack([self.leader.state(0.0)[0], scenario.initial_positions()])
        self.connected = np.linalg.norm(stacked[:, None, :] - stacked[None, :, :], axis=2) < self.spec.R
        np.fill_diagonal(self.connected, False)

    def unpack(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(self.n, self.block)

    def initial_state(self) -> SimState:
        gains = self.controller.gains
        X = np.zeros((self.n, self.block))
        X[:, self._q] = self.scenario.initial_positions()
        X[:, self._qd] = self.scenario.initial_velocities()
        X[:, self._theta] = self.scenario.initial_estimates()
        X[:, self._alpha] = float(gains.get('initial_alpha') or 0.0)
        X[:, -1] = float(gains.get('initial_beta') or 0.0)
        q_0 = self.leader.state(0.0)[0]
        graph = build_graph(q_0, X[:, self._q], self.spec.R)
        return SimState(t=0.0, k=0, x=X.reshape(-1), graph=graph)

    def _adjacency(self, graph: ProximityGraph) -> np.ndarray:
        adjacency = np.zeros((self.n + 1, self.n + 1), dtype=bool)
        for i, j in graph.edge_set():
            adjacency[i, j] = adjacency[j, i] = True
        return adjacency

    def _gradients(self, t: float, positions: np.ndarray, adjacency: np.ndarray) -> np.ndarray:
        try:
            G = pair_gradients(positions, adjacency, self.connected, self.spec)
        except SafetyViolationError as e:
            raise type(e)(e.reason, pair=e.pair, distance=e.distance, time=t) from None
        norms = np.linalg.norm(G, axis=2)
        over = norms > self.cap
        if over.any():
            G[over] *= (self.cap / norms[over])[:, None]
            self._capped = True
        return G

    def control(self, t: float, x: np.ndarray, graph: ProximityGraph,
                adjacency: Optional[np.ndarray] = None) -> List[ControlOutput]:
        """Control outputs of every follower; each sees only its neighbors"""
        X = self.unpack(x)
        q_0, qd_0, _ = self.leader.state(t)
        positions = np.vstack([q_0, X[:, self._q]])
        velocities = np.vstack([qd_0, X[:, self._qd]])
        if adjacency is None:
            adjacency = self._adjacency(graph)
        G = self._gradients(t, positions, adjacency)
        leader_velocity = qd_0 if self.controller.needs_leader_velocity else None

        outputs = []
        for i in range(1, self.n + 1):
            row = X[i - 1]
            neighbors = graph.neighbors(i)
            measurements = [NeighborMeasurement(label=j, rel_position=positions[i] - positions[j],
                                                rel_velocity=velocities[i] - velocities[j],
                                                is_leader=j == 0)
                            for j in neighbors]
            state = ControllerState(v=row[self._v], theta_hat=row[self._theta],
                                    alpha=row[self._alpha], beta=float(row[-1]))
            outputs.append(self.controller.compute(row[self._q], row[self._qd], state, measurements,
                                                   [G[i, j] for j in neighbors],
                                                   self.plants[i - 1].regressor, leader_velocity))
        return outputs

    def derivatives(self, t: float, x: np.ndarray, graph: ProximityGraph,
                    adjacency: Optional[np.ndarray] = None) -> np.ndarray:
        X = self.unpack(x)
        dX = np.zeros_like(X)
        for i, out in enumerate(self.control(t, x, graph, adjacency)):
            q, qd = X[i, self._q], X[i, self._qd]
            dX[i, self._q] = qd
            dX[i, self._qd] = self.plants[i].accel(q, qd, out.u)
            dX[i, self._v] = out.v_dot
            dX[i, self._theta] = out.theta_hat_dot
            dX[i, self._alpha] = out.alpha_dot
            dX[i, -1] = out.beta_dot
        return dX.reshape(-1)

    def _check_separations(self, t: float, x: np.ndarray):
        q_0 = self.leader.state(t)[0]
        positions = np.vstack([q_0, self.unpack(x)[:, self._q]])
        distances = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=2)
        np.fill_diagonal(distances, np.inf)
        if np.min(distances) <= 0.0:
            i, j = np.unravel_index(np.argmin(distances), distances.shape)
            raise CollisionError("agents collided", pair=(int(min(i, j)), int(max(i, j))),
                                 distance=0.0, time=t)
        breached = self.connected & (distances >= self.spec.R)
        if breached.any():
            i, j = (int(k) for k in np.argwhere(breached)[0])
            raise BarrierViolationError("initially connected pair reached the sensing radius",
                                        pair=(i, j), distance=float(distances[i, j]), time=t)

    def step(self, state: SimState) -> SimState:
        """One RK4 tick with the graph frozen at the tick's start"""
        dt, t, x, graph = self.dt, state.t, state.x, state.graph
        adjacency = self._adjacency(graph)
        self._capped = False
        k1 = self.derivatives(t, x, graph, adjacency)
        k2 = self.derivatives(t + dt / 2, x + dt / 2 * k1, graph, adjacency)
        k3 = self.derivatives(t + dt / 2, x + dt / 2 * k2, graph, adjacency)
        k4 = self.derivatives(t + dt, x + dt * k3, graph, adjacency)
        x_next = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

        k_next = state.k + 1
        t_next = k_next * dt
        if not np.all(np.isfinite(x_next)):
            raise NumericalDivergenceError(f"non-finite state at t={t_next:.6g} s (step {k_next})")
        if self._capped:
            self.cap_engagements += 1
            logger.warning("gradient cap engaged", cap=self.cap, t=t_next, step=k_next,
                           engagements=self.cap_engagements)
        self._check_separations(t_next, x_next)

        q_0 = self.leader.state(t_next)[0]
        next_graph = build_graph(q_0, self.unpack(x_next)[:, self._q], self.spec.R)
        return SimState(t=t_next, k=k_next, x=x_next, graph=next_graph)

    def run(self) -> SimLog:
        scenario = self.scenario
        steps, decimation = scenario.steps, scenario.integration.decimation
        state = self.initial_state()
        if not leader_reaches_all(state.graph):
            logger.warning("leader does not reach every follower at t=0", scenario=scenario.name)

        records: List[Tuple[SimState, np.ndarray, np.ndarray]] = []
        events: List[EdgeEvent] = []
        records.append(self._record(state))
        logger.info("simulation started", scenario=scenario.name, steps=steps, dt=self.dt,
                    edges=len(state.graph.edge_set()))

        for _ in range(steps):
            previous = state.graph
            state = self.step(state)
            added, removed = edge_changes(previous, state.graph)
            for edge in sorted(added):
                events.append(EdgeEvent(t=state.t, step=state.k, kind="added", edge=edge))
            for edge in sorted(removed):
                events.append(EdgeEvent(t=state.t, step=state.k, kind="removed", edge=edge))
            if added or removed:
                logger.debug("graph switched", t=state.t, added=sorted(added), removed=sorted(removed))
            if state.k % decimation == 0 or state.k == steps:
                records.append(self._record(state))

        log = self._assemble(records, events, steps)
        logger.info("simulation finished", scenario=scenario.name, samples=log.samples,
                    edges_added=log.edges_added(), edges_lost=log.edges_lost(),
                    cap_engagements=self.cap_engagements)
        return log

    def _record(self, state: SimState) -> Tuple[SimState, np.ndarray, np.ndarray]:
        q_0, qd_0, _ = self.leader.state(state.t)
        positions = np.vstack([q_0, self.unpack(state.x)[:, self._q]])
        return state, np.concatenate([q_0, qd_0]), np.array([
            min_eig_sym(matrices(state.graph).H),
            float(np.min(pdist(positions))),
        ])

    def _assemble(self, records, events: List[EdgeEvent], steps: int) -> SimLog:
        p = self.p
        blocks = np.array([self.unpack(state.x) for state, _, _ in records])
        leader = np.array([row for _, row, _ in records])
        extra = np.array([row for _, _, row in records])
        return SimLog(
            name=self.scenario.name, n=self.n, p=p, p_theta=self.p_theta, dt=self.dt, steps=steps,
            times=np.array([state.t for state, _, _ in records]),
            q=blocks[:, :, self._q], qd=blocks[:, :, self._qd], v=blocks[:, :, self._v],
            theta_hat=blocks[:, :, self._theta], alpha=blocks[:, :, self._alpha], beta=blocks[:, :, -1],
            leader_q=leader[:, :p], leader_qd=leader[:, p:],
            graphs=[state.graph for state, _, _ in records],
            lambda_min=extra[:, 0], min_distance=extra[:, 1],
            connected=self.connected.copy(), edge_events=events,
            cap_engagements=self.cap_engagements,
        )


def step(sim_state: SimState, scenario: Scenario) -> SimState:
    return Simulator(scenario).step(sim_state)


def run(scenario: Scenario) -> SimLog:
    return Simulator(scenario).run()
