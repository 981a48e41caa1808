"""Maximum flow on a directed network with uncertain capacities."""
from dataclasses import dataclass, field

import numpy as np

from bridged import kernels
from bridged.errors import InvalidInputError
from bridged.inner import InnerSolution

FLOW_EPS = 1e-12


@dataclass(frozen=True)
class FlowNetwork:
    """Directed network with edges ``tail[e] -> head[e]``.

    ``capacity`` holds the known capacities; entries listed in ``uncertain``
    are replaced by the parameter vector at solve time. Capacities of zero
    are allowed (a removed edge).
    """

    n_nodes: int
    tail: np.ndarray
    head: np.ndarray
    capacity: np.ndarray
    source: int
    sink: int
    uncertain: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        tail = np.asarray(self.tail, dtype=np.int64)
        head = np.asarray(self.head, dtype=np.int64)
        cap = np.asarray(self.capacity, dtype=float)
        unc = np.asarray(self.uncertain, dtype=np.int64)
        m = tail.shape[0]
        if head.shape != (m,) or cap.shape != (m,):
            raise InvalidInputError("tail, head and capacity must have equal length")
        if m and (tail.min() < 0 or head.min() < 0 or max(tail.max(), head.max()) >= self.n_nodes):
            raise InvalidInputError("edge endpoint out of range")
        if not (0 <= self.source < self.n_nodes and 0 <= self.sink < self.n_nodes):
            raise InvalidInputError("source or sink out of range")
        if self.source == self.sink:
            raise InvalidInputError("source and sink must differ")
        if np.any(cap < 0) or not np.all(np.isfinite(cap)):
            raise InvalidInputError("capacities must be finite and nonnegative")
        if unc.size and (unc.min() < 0 or unc.max() >= m or len(set(unc.tolist())) != unc.size):
            raise InvalidInputError("uncertain edges must be distinct edge indices")
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "capacity", cap)
        object.__setattr__(self, "uncertain", unc)

    @property
    def n_edges(self):
        return int(self.tail.shape[0])

    def capacities(self, lambda_caps=None):
        """Full capacity vector with the uncertain entries set to ``lambda_caps``."""
        cap = self.capacity.copy()
        if lambda_caps is not None:
            lam = np.asarray(lambda_caps, dtype=float)
            if lam.shape != self.uncertain.shape:
                raise InvalidInputError(
                    f"expected {self.uncertain.size} capacities, got {lam.shape}")
            if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
                raise InvalidInputError("uncertain capacities must be finite and positive")
            cap[self.uncertain] = lam
        return cap


def max_flow_solve(net, lambda_caps=None, eps=FLOW_EPS):
    """Edmonds-Karp maximum flow.

    Breadth-first search scans each node's arcs in edge-index order, so the
    returned edge flows are a fixed function of the input even when the
    maximum flow is not unique.

    Returns
    -------
    InnerSolution
        ``z`` holds edge flows, ``objective`` the flow value and
        ``residual`` the largest conservation error at inner nodes.
    """
    cap = net.capacities(lambda_caps)
    flows, value, aug = kernels.max_flow(
        int(net.n_nodes), net.tail, net.head, np.ascontiguousarray(cap),
        int(net.source), int(net.sink), float(eps))
    flows = np.asarray(flows)
    # the kernel tracks flow on reverse residual arcs; clean tiny roundoff
    flows = np.clip(flows, 0.0, cap)
    imbalance = np.zeros(net.n_nodes)
    np.add.at(imbalance, net.head, flows)
    np.subtract.at(imbalance, net.tail, flows)
    inner = np.ones(net.n_nodes, dtype=bool)
    inner[[net.source, net.sink]] = False
    residual = float(np.max(np.abs(imbalance[inner]))) if inner.any() else 0.0
    return InnerSolution(z=flows, objective=float(value), iterations=int(aug),
                         residual=residual, extras={"capacity": cap})


def min_cut_capacity(net, lambda_caps=None, flows=None, side=None):
    """Capacity of an s-t cut.

    With ``side`` (boolean mask of nodes on the source side) the given cut is
    measured. Otherwise the cut reachable from the source in the residual
    graph of ``flows`` is used, which is a minimum cut for a maximum flow.
    """
    cap = net.capacities(lambda_caps)
    if side is None:
        if flows is None:
            flows = max_flow_solve(net, lambda_caps).z
        side = np.zeros(net.n_nodes, dtype=bool)
        side[net.source] = True
        stack = [net.source]
        while stack:
            u = stack.pop()
            for e in range(net.n_edges):
                if net.tail[e] == u and flows[e] < cap[e] - FLOW_EPS and not side[net.head[e]]:
                    side[net.head[e]] = True
                    stack.append(net.head[e])
                elif net.head[e] == u and flows[e] > FLOW_EPS and not side[net.tail[e]]:
                    side[net.tail[e]] = True
                    stack.append(net.tail[e])
    side = np.asarray(side, dtype=bool)
    if not side[net.source] or side[net.sink]:
        raise InvalidInputError("cut must separate source from sink")
    crossing = side[net.tail] & ~side[net.head]
    return float(np.sum(cap[crossing]))
