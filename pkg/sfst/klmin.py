"""Normalization of expected counts into the KL-minimizing automaton.

Phi-free topologies get the closed form c(x, q) / c(q). On a phi-WFA
topology each state's companion distribution y (over the labels of q and
its failure label) maximizes

    u(y) - v(y) = sum_x C(x, q) log y_x
                  - sum_{q0 in B1(q)} C(phi, q0) log(1 - sum_{x in L[q0]} y_x)

subject to y_x >= epsilon and sum_x y_x = 1. The maximization linearizes v
about the current estimate and solves the concave surrogate exactly with a
bisection on its Lagrange multiplier. The failure weight of a state is then
y_phi divided by the mass its backoff target leaves for the labels the state
does not read.

Classes defined here:
    BackoffIndex
    DcState

Functions defined here:
    normalize_closed_form
    solve_state_dc
    assign_failure_weights
    normalize_counts
    approximate
    count_source
    identifiable_states
"""

import logging
import math
import numpy as np
from scipy.optimize import bisect
from scipy.special import xlogy
from sfst.automata import Automaton, check_backoff_complete
from sfst.counting import (AggCountTable, count_phi, count_sampled,
                           COUNT_TOL, FLOW_TOL)
from sfst.distance import QueueDiscipline
from sfst.errors import (BackoffError, DCInvariantError, NegativeCountError,
                         SfstError)
from sfst.models import SequenceModel, WfaBackedModel

logger = logging.getLogger(__name__)

EPSILON = 1e-6
TOL = 1e-10
MAX_ITERS = 1000
MAX_HALVINGS = 200
METHODS = ('kl_min', 'local')


class BackoffIndex(object):
    """Failure structure of a topology seen from the backoff targets.

    Attributes:
        labels: labels[q] is the tuple of Sigma labels of q followed by the
            failure label when q has a failure arc; y vectors use this order.
        sources: sources[q] is the sorted list of states with a failure arc
            into q (B1(q)).
        positions: positions[(q0, q)] is an index array locating
            L[q0] (Sigma labels) inside labels[q].
    """

    def __init__(self, a):
        report = check_backoff_complete(a)
        if not report.ok:
            raise BackoffError(report.violations)
        self.automaton = a
        phi = a.phi_id
        self.labels = []
        for q in range(a.num_states):
            ls = a.labels(q)
            if a.phi_arc(q) is not None:
                ls = ls + (phi,)
            self.labels.append(ls)
        self.sources = {q: sorted(b) for q, b in a.phi_sources().items()}
        self.positions = {}
        for q, b in self.sources.items():
            where = {x: i for i, x in enumerate(self.labels[q])}
            for q0 in b:
                self.positions[(q0, q)] = np.array(
                    [where[x] for x in a.labels(q0)], dtype=np.intp)

    def contributors(self, q):
        return self.sources.get(q, [])


class DcState(object):
    """Working state of the DC iteration at one topology state.

    Attributes:
        q: state id.
        labels: label order of y (failure label last, if any).
        y: numpy array, the companion distribution.
        epsilon: floor on every y_x.
        counts: numpy array of C(x, q) in label order.
        total: C(q).
        f_factors: linearization factors f(x, q, y) of the last iteration.
        lambda_bounds: (lb, ub) of the last bisection.
        iterations: number of updates performed.
        objective: u(y) - v(y) at the returned y.
        converged: max |y_new - y| fell below tol.
    """

    def __init__(self, q, labels, counts, epsilon):
        self.q = q
        self.labels = tuple(labels)
        self.counts = np.asarray(counts, dtype=np.float64)
        self.total = math.fsum(self.counts.tolist())
        self.epsilon = epsilon
        self.y = None
        self.f_factors = np.zeros(len(self.labels))
        self.lambda_bounds = None
        self.iterations = 0
        self.objective = None
        self.converged = False

    def distribution(self):
        return dict(zip(self.labels, self.y.tolist()))


def normalize_closed_form(counts, a):
    """Weights c(x, q) / c(q) on a phi-free topology.

    States with zero count get the uniform distribution over their labels.

    Args:
        counts: CountTable (or AggCountTable) over a.
        a: phi-free topology.
    Returns:
        A stochastic Automaton with a's structure.
    """

    if a.has_phi():
        raise SfstError("closed-form normalization needs a topology without "
                        "failure transitions")
    weights = {}
    for q in range(a.num_states):
        ls = a.labels(q)
        if not ls:
            continue
        c = counts.state_counts(q)
        total = math.fsum(c.values())
        for x in ls:
            weights[(q, x)] = c[x] / total if total > 0 else 1.0 / len(ls)
    return a.reweight(lambda t: weights[(t.src, t.label)])


def _objective(st, contributions):
    u = float(np.sum(xlogy(st.counts, st.y)))
    v = math.fsum(c * math.log(1.0 - float(st.y[idx].sum()))
                  for c, idx in contributions)
    return u - v


def _solve_surrogate(st, f, max_halvings):
    """Exact maximizer of sum_x C_x log y_x + y_x f_x over the floored
    simplex."""

    c = st.counts
    eps = st.epsilon
    k = len(c)
    if k == 1:
        return np.ones(1)
    lb = float(np.max(f + c))
    ub = float(np.max(f)) + st.total / (1.0 - k * eps)
    st.lambda_bounds = (lb, ub)
    pos = c > 0

    def y_of(lam):
        y = np.full(k, eps)
        y[pos] = np.maximum(c[pos] / (lam - f[pos]), eps)
        return y

    def g(lam):
        return math.fsum(y_of(lam).tolist()) - 1.0

    if g(lb) <= 0:
        lam = lb
    elif g(ub) >= 0:
        lam = ub
    else:
        lam = bisect(g, lb, ub, xtol=1e-15 * max(1.0, ub),
                     maxiter=max_halvings, disp=False)
    y = y_of(lam)
    free = y > eps
    rest = 1.0 - eps * int(np.count_nonzero(~free))
    if np.any(free):
        y[free] *= rest / math.fsum(y[free].tolist())
    return y


def solve_state_dc(q, counts, bi, epsilon=EPSILON, tol=TOL,
                   max_iters=MAX_ITERS, max_halvings=MAX_HALVINGS):
    """Maximize the per-state objective by DC iteration.

    Args:
        q: topology state.
        counts: AggCountTable over bi's topology.
        bi: BackoffIndex.
        epsilon: floor on every probability.
        tol: stop when max |y_new - y| < tol.
        max_iters: iteration cap.
        max_halvings: bisection cap for the multiplier.
    Returns:
        A DcState; y follows bi.labels[q].
    Raises:
        NegativeCountError: negative counts.
        SfstError: epsilon * |labels| >= 1.
        DCInvariantError: the objective decreased.
    """

    a = bi.automaton
    labels = bi.labels[q]
    k = len(labels)
    values = [counts.get(q, x) for x in labels if x != a.phi_id]
    if a.phi_arc(q) is not None:
        values.append(counts.phi_count(q))
    st = DcState(q, labels, values, epsilon)
    if k == 0:
        st.y = np.zeros(0)
        st.converged = True
        return st
    if np.any(st.counts < 0) or not np.all(np.isfinite(st.counts)):
        raise NegativeCountError("invalid counts at state %i: %r" %
                                 (q, st.counts.tolist()))
    if epsilon * k >= 1:
        raise SfstError("epsilon %g too large for %i labels at state %i" %
                        (epsilon, k, q))
    contributions = [(counts.phi_count(q0), bi.positions[(q0, q)])
                     for q0 in bi.contributors(q)]
    contributions = [(c, idx) for c, idx in contributions if c > 0]

    if st.total <= 0:
        st.y = np.full(k, 1.0 / k)
        st.objective = 0.0
        st.converged = True
        return st

    st.y = st.counts / st.total * (1.0 - k * epsilon) + epsilon
    st.objective = _objective(st, contributions)
    for n in range(max_iters):
        f = np.zeros(k)
        for c, idx in contributions:
            f[idx] += c / (1.0 - float(st.y[idx].sum()))
        st.f_factors = f
        y = _solve_surrogate(st, f, max_halvings)
        change = float(np.max(np.abs(y - st.y)))
        st.y = y
        st.iterations = n + 1
        obj = _objective(st, contributions)
        if obj < st.objective - 1e-9 * max(1.0, abs(st.objective)):
            raise DCInvariantError(
                "objective decreased at state %i iteration %i: %r -> %r" %
                (q, n + 1, st.objective, obj))
        st.objective = obj
        if change < tol:
            st.converged = True
            break
    if not st.converged and max_iters > 0:
        logger.warning("state %i: no convergence after %i iterations",
                       q, max_iters)
    logger.debug("state %i: %i iterations, objective %.12g", q,
                 st.iterations, st.objective)
    return st


def assign_failure_weights(ys, a):
    """Turn companion distributions into a stochastic phi-WFA.

    Sigma arcs get y_x; the failure arc q -> q' gets
    y_phi / (1 - sum_{x in L[q]} y_{q'}(x)).

    Args:
        ys: dict q -> dict label -> probability (failure label included).
        a: backoff-complete topology.
    Returns:
        An Automaton with a's structure.
    Raises:
        DCInvariantError: a non-positive residual mass d.
    """

    phi = a.phi_id
    weights = {}
    for q in range(a.num_states):
        y = ys.get(q, {})
        for x in a.labels(q):
            weights[(q, x)] = y[x]
        t = a.phi_arc(q)
        if t is None:
            continue
        target = ys[t.dst]
        d = 1.0 - math.fsum(target[x] for x in a.labels(q))
        if d <= 0:
            raise DCInvariantError("no residual mass for the failure "
                                   "transition of state %i (d = %r)" % (q, d))
        weights[(q, phi)] = y[phi] / d
    return Automaton(a.num_states,
                     [t._replace(weight=weights[(t.src, t.label)])
                      for t in a.transitions],
                     a.initial, a.final, a.symbols, validate=False)


def normalize_counts(counts_fst, method='kl_min', epsilon=EPSILON, tol=TOL,
                     max_iters=MAX_ITERS, max_halvings=MAX_HALVINGS):
    """Normalize a counts automaton (arc weights C(x, q), failure arcs
    C(phi, q)) into a stochastic automaton.

    Without failure transitions both methods give the closed form. With
    them, 'kl_min' runs the DC iteration at every state and 'local' keeps
    its floored relative-frequency starting point.

    Returns:
        An Automaton with the structure of counts_fst.
    """

    if method not in METHODS:
        raise ValueError("method invalid value: %r (choose from %s)" %
                         (method, ', '.join(METHODS)))
    table = AggCountTable.from_automaton(counts_fst)
    a = table.topology
    if not a.has_phi():
        return normalize_closed_form(table, a)
    bi = BackoffIndex(a)
    ys = {}
    iters = 0 if method == 'local' else max_iters
    for q in range(a.num_states):
        if q == a.final:
            continue
        st = solve_state_dc(q, table, bi, epsilon, tol, iters, max_halvings)
        ys[q] = st.distribution()
    return assign_failure_weights(ys, a)


def approximate(source, topology, epsilon=EPSILON, tol=TOL,
                max_iters=MAX_ITERS, max_halvings=MAX_HALVINGS, samples=0,
                seed=0, max_len=10000, shard_size=10000, jobs=1,
                route='auto', queue=None, method='kl_min',
                flow_tol=FLOW_TOL):
    """KL-minimizing stochastic automaton on topology for source.

    Counts are exact when source is an Automaton and samples == 0, and
    sampled otherwise. The result has topology's structure.

    Args:
        source: stochastic (phi-)WFA or SequenceModel.
        topology: deterministic, backoff-complete (phi-)WFA.
        samples: number of samples for sampled counting (0 = exact).
        Other arguments as for count_phi, count_sampled and
        normalize_counts.
    Returns:
        A stochastic Automaton.
    """

    counts = count_source(source, topology, samples=samples, seed=seed,
                          max_len=max_len, shard_size=shard_size, jobs=jobs,
                          route=route, queue=queue, flow_tol=flow_tol)
    return normalize_counts(counts.to_automaton(), method, epsilon, tol,
                            max_iters, max_halvings)


def count_source(source, topology, samples=0, seed=0, max_len=10000,
                 shard_size=10000, jobs=1, route='auto', queue=None,
                 flow_tol=FLOW_TOL, count_tol=COUNT_TOL):
    """Exact or sampled AggCountTable of source over topology."""

    if queue is None:
        queue = QueueDiscipline()
    if samples > 0:
        model = source
        if isinstance(source, Automaton):
            model = WfaBackedModel(source)
        return count_sampled(model, topology, samples, seed, max_len,
                             shard_size, jobs, flow_tol)
    if isinstance(source, SequenceModel):
        raise ValueError("samples invalid value: 0 (a sequence model needs "
                         "sampled counting)")
    return count_phi(source, topology, route, queue, count_tol, flow_tol)


def identifiable_states(counts, tol=COUNT_TOL):
    """States whose phi-extended distribution the counts determine.

    A state is identifiable when allowed paths enter it by Sigma arcs (or
    start there) with mass above tol. A state reached only through failure
    transitions is used for the labels its sources do not read, so the
    weights of its shadowed labels get no counts and sit at the floor.

    Args:
        counts: AggCountTable.
        tol: smallest visit mass that counts.
    Returns:
        Sorted list of states, the final state excluded.
    """

    final = counts.topology.final
    return sorted(q for q, v in counts.direct_visits().items()
                  if v > tol and q != final)
