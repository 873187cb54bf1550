"""Expected transition counts of a source distribution over a target
topology.

count_wfa gives c(x, q) for phi-free targets. count_phi gives the aggregated
counts C(x, q) of a backoff-complete phi-WFA target, either through the
compensated product machine (acyclic products) or through the phi-extended
product. phi_count_from_flow fills in the failure counts C(phi, q) from
flow conservation. count_sampled estimates the same quantities from random
samples of any SequenceModel.

Classes defined here:
    CountTable
    AggCountTable

Functions defined here:
    count_wfa
    count_phi
    phi_count_from_flow
    count_sampled
"""

import logging
import math
import multiprocessing as mp
from collections import defaultdict
from sfst.automata import check_backoff_complete
from sfst.distance import (POSITIVE_REAL, REAL, QueueDiscipline, WeightedGraph,
                           shortest_distance)
from sfst.errors import (BackoffError, CoverageError, CyclicMachineError,
                         NegativeCountError, SfstError)
from sfst.intersect import compensate_phi, expand_product, intersect_phi
from sfst.models import UniformStream, make_rng

logger = logging.getLogger(__name__)

COUNT_TOL = 1e-9
FLOW_TOL = 1e-6
COVERAGE_TOL = 1e-12
ROUTES = ('auto', 'compensate', 'expand')


class CountTable(object):
    """Counts c(x, q) for every Sigma label x readable at target state q.

    Attributes:
        topology: the target Automaton.
        counts: dict (q, x) -> float.
    """

    def __init__(self, topology, counts=None):
        self.topology = topology
        self.counts = {(q, x): 0.0 for q in range(topology.num_states)
                       for x in topology.labels(q)}
        for key, v in (counts or {}).items():
            if key not in self.counts:
                raise SfstError("count for (%i, %i) has no transition in the "
                                "topology" % key)
            self.counts[key] = float(v)

    def __getitem__(self, key):
        return self.counts[key]

    def get(self, q, x):
        return self.counts.get((q, x), 0.0)

    def state_counts(self, q):
        """dict label -> count over L[q] without phi."""

        return {x: self.counts[(q, x)] for x in self.topology.labels(q)}

    def total(self, q):
        """Count of all labels leaving q."""

        return math.fsum(self.state_counts(q).values())

    @property
    def totals(self):
        return {q: self.total(q) for q in range(self.topology.num_states)}

    def direct_visits(self):
        """dict q -> count of entries into q by Sigma arcs, plus 1 at the
        initial state. Arrivals by failure transitions are not included."""

        a = self.topology
        visits = defaultdict(list)
        visits[a.initial].append(1.0)
        for (q, x), c in self.counts.items():
            visits[a.arc(q, x).dst].append(c)
        return {q: math.fsum(visits[q]) for q in range(a.num_states)}

    def to_automaton(self):
        """The topology with each arc weighted by its count."""

        phi = self.topology.phi_id
        return self.topology.reweight(
            lambda t: 0.0 if t.label == phi else self.counts[(t.src, t.label)])

    def __repr__(self):
        return "%s(%i entries)" % (type(self).__name__, len(self.counts))


class AggCountTable(CountTable):
    """Aggregated counts C(x, q) plus failure counts C(phi, q).

    totals include C(phi, q) for states with a failure arc.
    """

    def __init__(self, topology, counts=None, phi_counts=None):
        super().__init__(topology, counts)
        self.phi_counts = {}
        for q, v in (phi_counts or {}).items():
            if topology.phi_arc(q) is None:
                raise SfstError("failure count for state %i without a "
                                "failure transition" % q)
            self.phi_counts[q] = float(v)
        self.report = {}

    def total(self, q):
        c = list(self.state_counts(q).values())
        if q in self.phi_counts:
            c.append(self.phi_counts[q])
        return math.fsum(c)

    def phi_count(self, q):
        return self.phi_counts.get(q, 0.0)

    def to_automaton(self):
        """The topology weighted by C(x, q); failure arcs carry C(phi, q)."""

        phi = self.topology.phi_id
        return self.topology.reweight(
            lambda t: self.phi_counts.get(t.src, 0.0) if t.label == phi
            else self.counts[(t.src, t.label)])

    @classmethod
    def from_automaton(cls, a):
        """Read a counts automaton written by to_automaton.

        Returns:
            An AggCountTable whose topology is a with unit weights.
        Raises:
            NegativeCountError: a negative count.
        """

        phi = a.phi_id
        counts = {}
        phi_counts = {}
        for t in a.transitions:
            if t.weight < 0:
                raise NegativeCountError("negative count %r on %i -%i-> %i" %
                                         (t.weight, t.src, t.label, t.dst))
            if t.label == phi:
                phi_counts[t.src] = t.weight
            else:
                counts[(t.src, t.label)] = t.weight
        return cls(a.reweight(lambda t: 1.0), counts, phi_counts)


def _clamp(value, tol, what):
    """Zero tiny negatives; larger ones are an error."""

    if value >= 0:
        return value
    if value < -tol:
        raise NegativeCountError("%s is negative: %r" % (what, value))
    if value < -COUNT_TOL:
        logger.warning("clamping %s = %.3g to zero", what, value)
    return 0.0


def _witness(p, q, x):
    labels = p.prefix(q) + (x,)
    return ' '.join(p.symbols.symbol(l) for l in labels)


def _check_coverage(p, gamma):
    """Raise CoverageError if source mass is lost by the product p."""

    for q, x, w in p.lost:
        if gamma[q] * w > COVERAGE_TOL:
            raise CoverageError("source string not accepted by the topology",
                                witness=_witness(p, q, x))


def _expanded_counts(p, gamma):
    """Bucket gamma(q) * w over the arcs of a phi-extended product by
    (state where the label is read, label)."""

    acc = defaultdict(list)
    for t in p.transitions:
        g = gamma[t.src]
        if g == 0:
            continue
        acc[(p.resolved[(t.src, t.label)], t.label)].append(g * t.weight)
    return {k: math.fsum(v) for k, v in acc.items()}


def _expanded(s, a, queue):
    p = expand_product(s, a)
    gamma = shortest_distance(WeightedGraph.from_automaton(p), queue,
                              POSITIVE_REAL)
    _check_coverage(p, gamma)
    return p, gamma


def count_wfa(s, a, queue=None):
    """Expected counts c(x, q) of s over a phi-free topology a.

    Args:
        s: stochastic WFA without failure transitions.
        a: target topology without failure transitions.
        queue: QueueDiscipline for the shortest distance.
    Returns:
        A CountTable over a.
    Raises:
        CoverageError: s generates a string a does not accept.
        ConvergenceError: shortest distance did not converge.
    """

    if s.has_phi() or a.has_phi():
        raise SfstError("count_wfa requires machines without failure "
                        "transitions; use count_phi")
    p, gamma = _expanded(s, a, queue)
    return CountTable(a, _expanded_counts(p, gamma))


def count_phi(s, a, route='auto', queue=None, count_tol=COUNT_TOL,
              flow_tol=FLOW_TOL):
    """Aggregated counts C(x, q) and C(phi, q) of s over a phi-WFA topology.

    route 'compensate' sums the real-semiring shortest distance of the
    compensated product over arcs tracked to each (q, x); it requires an
    acyclic product. route 'expand' buckets the counts of the phi-extended
    product by the state where each label is read. 'auto' compensates when
    the product is acyclic and expands otherwise. All routes agree.

    Args:
        s: stochastic (phi-)WFA.
        a: backoff-complete (phi-)WFA topology.
        route: 'auto', 'compensate' or 'expand'.
        queue: QueueDiscipline for the shortest distances.
        count_tol: negative counts above -count_tol are clamped to zero.
        flow_tol: tolerance for negative failure counts.
    Returns:
        An AggCountTable over a.
    Raises:
        BackoffError, CoverageError, CyclicMachineError, NegativeCountError.
    """

    if route not in ROUTES:
        raise ValueError("route invalid value: %r" % route)
    report = check_backoff_complete(a)
    if not report.ok:
        raise BackoffError(report.violations)
    if queue is None:
        queue = QueueDiscipline()

    p, gamma = _expanded(s, a, queue)
    if not (s.has_phi() or a.has_phi()):
        return phi_count_from_flow(
            AggCountTable(a, _expanded_counts(p, gamma)), a, flow_tol)

    counts = None
    if route != 'expand':
        try:
            m = compensate_phi(intersect_phi(s, a))
        except CyclicMachineError:
            if route == 'compensate':
                raise
            logger.info("product is cyclic; counting on the phi-extended "
                        "product")
        else:
            g = shortest_distance(m.graph(), queue, REAL)
            acc = defaultdict(list)
            for arcs in m.arcs:
                for e in arcs:
                    if e.label is not None and g[e.src] != 0:
                        acc[(e.tracked, e.label)].append(g[e.src] * e.weight)
            counts = {k: math.fsum(v) for k, v in acc.items()}
    if counts is None:
        counts = _expanded_counts(p, gamma)

    for key in counts:
        counts[key] = _clamp(counts[key], count_tol,
                             "count (%i, %i)" % key)
    return phi_count_from_flow(AggCountTable(a, counts), a, flow_tol)


def phi_count_from_flow(counts, a, flow_tol=FLOW_TOL, visits=None):
    """Fill C(phi, q) by flow conservation along failure arcs.

    C(phi, q) = inflow(q) - sum_x C(x, q), processing states so that every
    failure predecessor comes first. inflow(q) is the mass entering q by
    Sigma arcs (plus 1 at the initial state) and by failure arcs.

    Args:
        counts: AggCountTable with complete Sigma counts.
        a: its topology.
        flow_tol: negative results below -flow_tol raise.
        visits: optional dict q -> direct visit mass replacing the Sigma
            inflow (used by sampled counting).
    Returns:
        A new AggCountTable.
    Raises:
        NegativeCountError: inconsistent counts.
    """

    inflow = defaultdict(list)
    if visits is None:
        inflow[a.initial].append(1.0)
        for t in a.transitions:
            if t.label != a.phi_id:
                inflow[t.dst].append(counts.counts[(t.src, t.label)])
    else:
        for q, v in visits.items():
            inflow[q].append(v)
    phi_counts = {}
    for q in a.phi_order():
        t = a.phi_arc(q)
        if t is None:
            continue
        out = [counts.counts[(q, x)] for x in a.labels(q)]
        c = math.fsum(inflow[q]) - math.fsum(out)
        c = _clamp(c, flow_tol, "failure count at state %i" % q)
        phi_counts[q] = c
        inflow[t.dst].append(c)
    out = AggCountTable(a, counts.counts, phi_counts)
    out.report = dict(getattr(counts, 'report', {}))
    return out


def _sample_shard(model, a, size, seed, shard, max_len):
    """Visit counts of (model state, topology state) pairs over one shard.

    Returns:
        (visits dict, number of truncated samples).
    """

    uniforms = UniformStream(make_rng(seed, shard))
    visits = {}
    truncated = 0
    step = {}
    term = model.terminator
    for _ in range(size):
        labels, states, ok = model.walk(uniforms, max_len)
        if not ok:
            truncated += 1
            continue
        path = []
        q = a.initial
        for x, state in zip(labels, states):
            path.append((state, q))
            try:
                r = step[(q, x)]
            except KeyError:
                r = a.resolve(q, x)
                r = step[(q, x)] = None if r is None else r.dst
            if r is None or (x == term) != (r == a.final):
                raise CoverageError(
                    "sampled string not accepted by the topology",
                    witness=' '.join(a.symbols.symbol(l)
                                     for l in labels[:len(path)]))
            q = r
        for key in path:
            visits[key] = visits.get(key, 0) + 1
    logger.debug("shard %i: %i samples, %i truncated", shard, size, truncated)
    return visits, truncated


def count_sampled(model, a, n, seed=0, max_len=10000, shard_size=10000,
                  jobs=1, flow_tol=FLOW_TOL):
    """Estimate C(x, q) and C(phi, q) from n samples of a SequenceModel.

    Samples are split into shards of shard_size, each with its own random
    stream keyed by (seed, shard), so the result does not depend on jobs.
    For every visit of a (model state, topology state) pair the full next
    distribution of the model is added, bucketed by the state where the
    topology reads each label. Truncated samples are discarded.

    Args:
        model: SequenceModel.
        a: backoff-complete topology.
        n: number of samples (> 0).
        seed: integer seed.
        max_len: samples longer than this are truncated.
        shard_size: samples per random stream.
        jobs: worker processes.
    Returns:
        An AggCountTable; report holds 'samples' and 'truncated'.
    Raises:
        ValueError: n <= 0.
        BackoffError, CoverageError.
    """

    if n <= 0:
        raise ValueError("samples invalid value: %r" % n)
    if not model.symbols.compatible(a.symbols):
        raise SfstError("symbol table mismatch")
    report = check_backoff_complete(a)
    if not report.ok:
        raise BackoffError(report.violations)

    shards = [(model, a, min(shard_size, n - i), seed, j, max_len)
              for j, i in enumerate(range(0, n, shard_size))]
    if jobs > 1 and len(shards) > 1:
        with mp.Pool(min(jobs, len(shards))) as pool:
            results = pool.starmap(_sample_shard, shards)
    else:
        results = [_sample_shard(*s) for s in shards]

    visits = {}
    truncated = 0
    for v, t in results:
        truncated += t
        for key, c in v.items():
            visits[key] = visits.get(key, 0) + c
    kept = n - truncated
    if truncated:
        logger.warning("%i of %i samples truncated at %i symbols and "
                       "discarded", truncated, n, max_len)
    if kept == 0:
        raise SfstError("every sample was truncated")

    acc = defaultdict(list)
    direct = defaultdict(list)
    dists = {}
    for (state, q), v in visits.items():
        g = v / kept
        direct[q].append(g)
        try:
            dist = dists[state]
        except KeyError:
            dist = dists[state] = model.next_distribution(state)
        for x, px in dist.items():
            if px <= 0:
                continue
            r = a.resolve(q, x)
            if r is None:
                raise CoverageError(
                    "source mass not accepted by the topology",
                    witness=a.symbols.symbol(x))
            acc[(r.resolved_at, x)].append(g * px)
    counts = AggCountTable(a, {k: math.fsum(v) for k, v in acc.items()})
    counts.report = {'samples': n, 'truncated': truncated}
    return phi_count_from_flow(counts, a, flow_tol,
                               visits={q: math.fsum(v)
                                       for q, v in direct.items()})
