"""Generalized single-source shortest distance over the positive real and the
real semirings (sum over paths of the product of arc weights).

Classes defined here:
    WeightedGraph
    QueueDiscipline
    DistanceVector

Functions defined here:
    shortest_distance
"""

import logging
from collections import deque
import numpy as np
from sfst.errors import ConvergenceError, CyclicMachineError, SfstError

logger = logging.getLogger(__name__)

POSITIVE_REAL = 'positive-real'
REAL = 'real'

DEFAULT_DELTA = 1e-12
DEFAULT_MAX_SWEEPS = 10000


class WeightedGraph(object):
    """Adjacency view of a machine: arcs[q] is a list of (dst, weight) in
    insertion order."""

    def __init__(self, num_states, initial, arcs):
        self.num_states = num_states
        self.initial = initial
        self.arcs = arcs

    @classmethod
    def from_automaton(cls, a):
        """Graph of the allowed paths of a (phi-)WFA (its E*-expansion)."""

        arcs = [[(e.dst, e.weight) for e in a.phi_extended(q)]
                for q in range(a.num_states)]
        return cls(a.num_states, a.initial, arcs)

    def topological_order(self):
        """States reachable from the initial state in topological order, or
        None if a cycle is reachable."""

        reach = [False] * self.num_states
        reach[self.initial] = True
        stack = [self.initial]
        while stack:
            q = stack.pop()
            for n, _ in self.arcs[q]:
                if not reach[n]:
                    reach[n] = True
                    stack.append(n)
        indeg = [0] * self.num_states
        for q in range(self.num_states):
            if reach[q]:
                for n, _ in self.arcs[q]:
                    indeg[n] += 1
        order = [self.initial] if indeg[self.initial] == 0 else []
        for q in order:
            for n, _ in self.arcs[q]:
                indeg[n] -= 1
                if indeg[n] == 0:
                    order.append(n)
        if len(order) != sum(reach):
            return None
        return order

    def is_acyclic(self):
        return self.topological_order() is not None


class QueueDiscipline(object):
    """Queue used by shortest_distance.

    kind is 'topological' (acyclic graphs only), 'fifo' (iterates until
    every residual update is below convergence_delta, at most max_sweeps
    generations) or 'auto' (topological when the graph is acyclic, fifo
    otherwise).
    """

    KINDS = ('topological', 'fifo', 'auto')

    def __init__(self, kind='auto', convergence_delta=DEFAULT_DELTA,
                 max_sweeps=DEFAULT_MAX_SWEEPS):
        if kind == 'topo':
            kind = 'topological'
        if kind not in self.KINDS:
            raise ValueError("queue invalid value: %r" % kind)
        if convergence_delta < 0 or max_sweeps < 1:
            raise ValueError("queue invalid convergence settings")
        self.kind = kind
        self.convergence_delta = convergence_delta
        self.max_sweeps = max_sweeps

    def __repr__(self):
        if self.kind == 'topological':
            return "QueueDiscipline(topological)"
        return "QueueDiscipline(%s, delta=%g, max_sweeps=%i)" % (
            self.kind, self.convergence_delta, self.max_sweeps)


class DistanceVector(object):
    """Per-state distances from the initial state.

    Attributes:
        values: numpy float64 array.
        semiring: POSITIVE_REAL or REAL.
        sweeps: number of queue generations processed (1 for topological).
    """

    def __init__(self, values, semiring, sweeps):
        self.values = np.asarray(values, dtype=np.float64)
        self.semiring = semiring
        self.sweeps = sweeps

    def __getitem__(self, q):
        return float(self.values[q])

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values.tolist())

    def __repr__(self):
        return "DistanceVector(%s, %r, sweeps=%i)" % (
            self.semiring, self.values.tolist(), self.sweeps)


def shortest_distance(g, queue=None, semiring=POSITIVE_REAL):
    """Sum over all paths from the initial state of the path weights.

    d[initial] includes the empty path. Accumulation is in extended
    precision and follows arc insertion order.

    Args:
        g: WeightedGraph.
        queue: QueueDiscipline (default: auto with default fifo settings).
        semiring: POSITIVE_REAL (weights must be >= 0) or REAL.
    Returns:
        A DistanceVector.
    Raises:
        CyclicMachineError: topological queue on a cyclic graph.
        ConvergenceError: fifo did not converge within max_sweeps.
    """

    if queue is None:
        queue = QueueDiscipline()
    if semiring == POSITIVE_REAL:
        for q in range(g.num_states):
            for n, w in g.arcs[q]:
                if w < 0:
                    raise SfstError("negative weight %r on arc %i -> %i in "
                                    "the positive real semiring" % (w, q, n))
    elif semiring != REAL:
        raise ValueError("unknown semiring %r" % semiring)

    kind = queue.kind
    order = None
    if kind in ('topological', 'auto'):
        order = g.topological_order()
        if order is None:
            if kind == 'topological':
                raise CyclicMachineError(
                    "topological queue requested on a cyclic graph")
            kind = 'fifo'

    if kind != 'fifo':
        d = np.zeros(g.num_states, dtype=np.longdouble)
        d[g.initial] = 1
        for q in order:
            dq = d[q]
            if dq == 0:
                continue
            for n, w in g.arcs[q]:
                d[n] += dq * w
        return DistanceVector(d, semiring, 1)

    delta = queue.convergence_delta
    d = np.zeros(g.num_states, dtype=np.longdouble)
    r = np.zeros(g.num_states, dtype=np.longdouble)
    d[g.initial] = 1
    r[g.initial] = 1
    queued = [False] * g.num_states
    queued[g.initial] = True
    current = deque([g.initial])
    sweeps = 0
    while current:
        if sweeps >= queue.max_sweeps:
            raise ConvergenceError(float(np.abs(r).sum()), sweeps)
        sweeps += 1
        following = deque()
        while current:
            q = current.popleft()
            queued[q] = False
            residual = r[q]
            r[q] = 0
            for n, w in g.arcs[q]:
                inc = residual * w
                if abs(inc) <= delta:
                    continue
                d[n] += inc
                r[n] += inc
                if not queued[n]:
                    queued[n] = True
                    following.append(n)
        current = following
    logger.debug("shortest distance converged after %i sweeps", sweeps)
    return DistanceVector(d, semiring, sweeps)
