"""Product constructions used for counting and evaluation.

intersect_wfa builds the plain product of two phi-free machines.
intersect_phi keeps failure transitions in the product wherever both sides
back off together. expand_product intersects the phi-extended machines
(allowed paths only). compensate_phi turns a phi product into a machine
with epsilon arcs and negatively weighted arcs that cancel the paths the
failure semantics disallows.

Every Sigma-labeled product arc records the target-side state where its
label is read (q_a^x), so counts can be bucketed without re-resolving.

Classes defined here:
    ProductAutomaton
    CompensatedArc
    CompensatedMachine

Functions defined here:
    intersect_wfa
    intersect_phi
    expand_product
    compensate_phi
"""

import logging
from collections import deque, namedtuple
from sfst.automata import Automaton, Transition, check_backoff_complete
from sfst.distance import WeightedGraph
from sfst.errors import (BackoffError, CyclicMachineError, EmptyLanguageError,
                         SfstError, SymbolTableError)

logger = logging.getLogger(__name__)

CompensatedArc = namedtuple('CompensatedArc', 'src label tracked weight dst')


class ProductAutomaton(Automaton):
    """An automaton over reachable state pairs (q_s, q_a).

    Attributes:
        pairs: pairs[q] = (q_s, q_a).
        resolved: dict (q, label) -> target state where label is read.
        parents: dict q -> (previous product state, label) on a BFS path
            from the initial state (used to report witness strings).
        lost: list of (q, label, weight): source transitions at q whose
            label the target cannot read.
    """

    def __init__(self, num_states, transitions, initial, final, symbols,
                 pairs, resolved, parents=None, lost=None):
        super().__init__(num_states, transitions, initial, final, symbols,
                         validate=False)
        self.pairs = tuple(pairs)
        self.resolved = resolved
        self.parents = parents or {}
        self.lost = lost or []

    def source_state(self, q):
        return self.pairs[q][0]

    def target_state(self, q):
        return self.pairs[q][1]

    def prefix(self, q):
        """Labels of the BFS path from the initial state to q."""

        out = []
        while q in self.parents:
            q, x = self.parents[q]
            out.append(x)
        return tuple(reversed(out))


class CompensatedMachine(object):
    """Product machine with failure arcs replaced by epsilon arcs (label None)
    and negative arcs cancelling shadowed paths.

    Attributes:
        arcs: arcs[q] is a list of CompensatedArc.
        tracked: on every Sigma arc, the target state whose count it adds to.
    """

    def __init__(self, num_states, arcs, initial, final, symbols, pairs):
        self.num_states = num_states
        self.arcs = arcs
        self.initial = initial
        self.final = final
        self.symbols = symbols
        self.pairs = pairs

    @property
    def num_negative(self):
        return sum(1 for a in self.arcs for e in a if e.weight < 0)

    def graph(self):
        """WeightedGraph over all arcs (epsilon arcs included)."""

        return WeightedGraph(self.num_states, self.initial,
                             [[(e.dst, e.weight) for e in a]
                              for a in self.arcs])

    def string_weight(self, labels):
        """Sum over all runs (epsilon moves included) accepting labels."""

        labels = tuple(labels)
        memo = {}

        def weight(q, i):
            key = (q, i)
            if key in memo:
                return memo[key]
            total = 1.0 if (q == self.final and i == len(labels)) else 0.0
            for e in self.arcs[q]:
                if e.label is None:
                    total += e.weight * weight(e.dst, i)
                elif i < len(labels) and e.label == labels[i]:
                    total += e.weight * weight(e.dst, i + 1)
            memo[key] = total
            return total

        return weight(self.initial, 0)


def _check_symbols(s, a):
    if not s.symbols.compatible(a.symbols):
        raise SymbolTableError("symbol table mismatch")


def _build(s, a, step):
    """Breadth-first product construction.

    step(q_s, q_a) returns (arcs, phi, lost) where arcs is a list of
    (label, weight, next pair, resolved target state), phi is None or
    (weight, next pair) and lost a list of (label, weight).
    """

    start = (s.initial, a.initial)
    index = {start: 0}
    pairs = [start]
    transitions = []
    resolved = {}
    parents = {}
    lost = []
    queue = deque([start])
    phi = s.phi_id
    while queue:
        pair = queue.popleft()
        q = index[pair]
        arcs, phi_arc, missed = step(*pair)
        for x, w in missed:
            lost.append((q, x, w))
        if phi_arc is not None:
            arcs = arcs + [(phi, phi_arc[0], phi_arc[1], None)]
        for x, w, nxt, r in arcs:
            if nxt not in index:
                index[nxt] = len(pairs)
                pairs.append(nxt)
                parents[index[nxt]] = (q, x)
                queue.append(nxt)
            transitions.append(Transition(q, x, w, index[nxt]))
            if r is not None:
                resolved[(q, x)] = r
    fin = (s.final, a.final)
    if fin not in index:
        # keep a well-formed machine: an unreachable sink final state
        index[fin] = len(pairs)
        pairs.append(fin)
    return ProductAutomaton(len(pairs), transitions, 0, index[fin],
                            s.symbols, pairs, resolved, parents, lost)


def _coaccessible(p):
    rev = [[] for _ in range(p.num_states)]
    for t in p.transitions:
        rev[t.dst].append(t.src)
    co = {p.final}
    stack = [p.final]
    while stack:
        q = stack.pop()
        for r in rev[q]:
            if r not in co:
                co.add(r)
                stack.append(r)
    return co


def _restrict(p, keep):
    """Sub-product on the states in keep, numbered in their current order."""

    ids = sorted(keep)
    new = {q: i for i, q in enumerate(ids)}
    transitions = [Transition(new[t.src], t.label, t.weight, new[t.dst])
                   for t in p.transitions if t.src in new and t.dst in new]
    resolved = {(new[q], x): r for (q, x), r in p.resolved.items()
                if q in new}
    parents = {new[q]: (new[r], x) for q, (r, x) in p.parents.items()
               if q in new and r in new}
    lost = [(new[q], x, w) for (q, x, w) in p.lost if q in new]
    return ProductAutomaton(len(ids), transitions, new[p.initial],
                            new[p.final], p.symbols,
                            [p.pairs[q] for q in ids], resolved, parents,
                            lost)


def expand_product(s, a):
    """Product of the phi-extended machines of s and a.

    States are the pairs (q_s, q_a) reached after reading a prefix; each
    arc carries s's phi-extended weight and records q_a^x. Not trimmed, so
    p.lost lists all source mass the target cannot read.
    """

    _check_symbols(s, a)

    def step(q_s, q_a):
        arcs = []
        missed = []
        for e in s.phi_extended(q_s):
            r = a.resolve(q_a, e.label)
            if r is None:
                if e.weight > 0:
                    missed.append((e.label, e.weight))
                continue
            arcs.append((e.label, e.weight, (e.dst, r.dst), r.resolved_at))
        return arcs, None, missed

    return _build(s, a, step)


def intersect_wfa(s, a):
    """Weighted intersection of two phi-free deterministic machines.

    Args:
        s: stochastic WFA without failure transitions.
        a: WFA without failure transitions (weights ignored).
    Returns:
        A trimmed ProductAutomaton accepting L(s) and L(a) with s's weights.
    Raises:
        SymbolTableError: the machines use incompatible symbol tables.
        EmptyLanguageError: the languages are disjoint.
    """

    _check_symbols(s, a)
    if s.has_phi() or a.has_phi():
        raise SfstError("intersect_wfa requires machines without failure "
                        "transitions; use intersect_phi")
    return _trim_plain(expand_product(s, a))


def _trim_plain(p):
    co = _coaccessible(p)
    if p.initial not in co:
        raise EmptyLanguageError()
    reach = {p.initial}
    stack = [p.initial]
    while stack:
        q = stack.pop()
        for t in p.arcs(q):
            if t.dst in co and t.dst not in reach:
                reach.add(t.dst)
                stack.append(t.dst)
    return _restrict(p, reach)


def intersect_phi(s, a):
    """Intersection keeping failure transitions.

    At pair (q_s, q_a) the product reads directly every label readable at
    q_s or at q_a, each resolved through the other side's failure chain when
    needed; when both sides have a failure arc the product backs off to
    the pair of failure targets with s's failure weight. Allowed-path weights
    equal s's weights on the intersection of the languages.

    Args:
        s: stochastic phi-WFA.
        a: backoff-complete phi-WFA (weights ignored).
    Returns:
        A ProductAutomaton with failure transitions.
    Raises:
        SymbolTableError, BackoffError, EmptyLanguageError.
    """

    _check_symbols(s, a)
    report = check_backoff_complete(a)
    if not report.ok:
        raise BackoffError(report.violations)

    def step(q_s, q_a):
        arcs = []
        labels = sorted(set(s.labels(q_s)) | set(a.labels(q_a)))
        for x in labels:
            es = s.resolve(q_s, x)
            if es is None:
                continue
            ea = a.resolve(q_a, x)
            if ea is None:
                continue
            arcs.append((x, es.weight, (es.dst, ea.dst), ea.resolved_at))
        ps = s.phi_arc(q_s)
        pa = a.phi_arc(q_a)
        phi_arc = None
        if ps is not None and pa is not None:
            phi_arc = (ps.weight, (ps.dst, pa.dst))
        return arcs, phi_arc, []

    p = _build(s, a, step)
    if not _reaches_final(p):
        raise EmptyLanguageError()
    if not p.has_phi():
        return _trim_plain(p)
    return p


def _reaches_final(p):
    seen = {p.initial}
    stack = [p.initial]
    while stack:
        q = stack.pop()
        for e in p.phi_extended(q):
            if e.dst == p.final:
                return True
            if e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return False


def compensate_phi(p):
    """Replace failure arcs by epsilon arcs and cancel disallowed paths.

    For each state q with a failure arc of weight w to q' and each label x
    read at q that q' can also read (through its own failure chain), a
    negative arc q -x-> n of weight -w * E*[q'](x) is added, where n and the
    tracked target state are those of the arc that reads x from q'. The
    weight of every string summed over all runs equals its weight in p.

    Args:
        p: ProductAutomaton (failure arcs allowed).
    Returns:
        A CompensatedMachine.
    Raises:
        CyclicMachineError: the machine with failure arcs as epsilon arcs
            is cyclic.
    """

    if not WeightedGraph(p.num_states, p.initial,
                         [[(t.dst, t.weight) for t in p.arcs(q)]
                          for q in range(p.num_states)]).is_acyclic():
        raise CyclicMachineError(
            "compensated counting needs an acyclic product; use sampled "
            "counting (--samples) or the expanded route")
    phi = p.phi_id
    arcs = [[] for _ in range(p.num_states)]
    for q in range(p.num_states):
        fail = None
        for t in p.arcs(q):
            if t.label == phi:
                fail = t
                arcs[q].append(CompensatedArc(q, None, None, t.weight,
                                              t.dst))
            else:
                arcs[q].append(CompensatedArc(q, t.label,
                                              p.resolved[(q, t.label)],
                                              t.weight, t.dst))
        if fail is None:
            continue
        for x in p.labels(q):
            e = p.resolve(fail.dst, x)
            if e is None:
                continue
            arcs[q].append(CompensatedArc(
                q, x, p.resolved[(e.resolved_at, x)],
                -fail.weight * e.weight, e.dst))
    m = CompensatedMachine(p.num_states, arcs, p.initial, p.final,
                           p.symbols, p.pairs)
    logger.debug("compensated machine: %i states, %i negative arcs",
                 m.num_states, m.num_negative)
    return m
