"""Deterministic weighted automata with failure (phi) transitions.

An automaton has a single initial state and a single final state f. Strings
end with the terminator symbol, which is the only label read into f. A phi
transition is taken only when the next symbol cannot be read at the current
state, so a label matched earlier on a failure chain shadows later matches.

Text format, one record per line:
    arc:    src dst label [weight]     (weight defaults to 1)
    final:  state
The source state of the first arc is the initial state.

Classes defined here:
    SymbolTable
    Transition
    PhiExtendedArc
    Automaton
    BackoffReport

Functions defined here:
    parse_automaton
    serialize_automaton
    check_backoff_complete
    phi_extended_transitions
    is_stochastic
    trim
    accepted_strings
    string_weight
"""

import logging
import math
from collections import deque, namedtuple
from sfst.errors import (AutomatonFormatError, SymbolTableError,
                         EmptyLanguageError)

logger = logging.getLogger(__name__)

PHI_SYMBOL = '<phi>'
TERMINATOR = '$'
WEIGHT_FORMAT = '%.17g'

Transition = namedtuple('Transition', 'src label weight dst')
PhiExtendedArc = namedtuple('PhiExtendedArc',
                            'src label weight dst resolved_at')


class SymbolTable(object):
    """Bidirectional map between symbol strings and integer label ids.

    The failure label has id phi_id (default 0). The terminator symbol ('$')
    must be present.
    """

    def __init__(self, entries, phi_id=0, terminator=TERMINATOR):
        """Initialise the table.

        Args:
            entries: dict mapping symbol string -> non-negative integer id.
            phi_id: label id of the failure transition.
            terminator: symbol string of the end-of-string marker.
        """

        self._sym2id = dict(entries)
        self._id2sym = {}
        for s, i in self._sym2id.items():
            if not isinstance(i, int) or i < 0:
                raise SymbolTableError("invalid id %r for symbol %r" % (i, s))
            if i in self._id2sym:
                raise SymbolTableError("duplicate id %i (%r and %r)" %
                                       (i, self._id2sym[i], s))
            self._id2sym[i] = s
        if terminator not in self._sym2id:
            raise SymbolTableError("terminator %r missing" % terminator)
        if phi_id not in self._id2sym:
            if PHI_SYMBOL in self._sym2id:
                raise SymbolTableError("%r bound to id %i, not %i" % (
                    PHI_SYMBOL, self._sym2id[PHI_SYMBOL], phi_id))
            self._sym2id[PHI_SYMBOL] = phi_id
            self._id2sym[phi_id] = PHI_SYMBOL
        self.phi_id = phi_id
        self.terminator = terminator
        self.terminator_id = self._sym2id[terminator]
        if self.terminator_id == phi_id:
            raise SymbolTableError("terminator and phi share id %i" % phi_id)

    @classmethod
    def from_symbols(cls, symbols, phi_id=0, terminator=TERMINATOR):
        """Build a table assigning ids 1, 2, ... in the order given.

        The terminator is appended if absent. The id phi_id is skipped.
        """

        entries = {}
        i = 0
        for s in list(symbols) + [terminator]:
            if s in entries or s == PHI_SYMBOL:
                continue
            i += 1
            if i == phi_id:
                i += 1
            entries[s] = i
        return cls(entries, phi_id=phi_id, terminator=terminator)

    @classmethod
    def numeric(cls, labels, terminator_id, phi_id=0):
        """Table for files without a symbol table: names are the ids."""

        ids = set(labels) | {terminator_id}
        ids.discard(phi_id)
        entries = {str(i): i for i in ids}
        entries[TERMINATOR] = entries.pop(str(terminator_id))
        return cls(entries, phi_id=phi_id)

    @classmethod
    def read(cls, text, phi_id=0, terminator=TERMINATOR):
        """Parse `symbol id` lines."""

        if isinstance(text, bytes):
            text = text.decode('utf-8')
        entries = {}
        for n, line in enumerate(text.splitlines(), 1):
            f = line.split()
            if not f:
                continue
            if len(f) != 2:
                raise SymbolTableError("line %i: expected 'symbol id'" % n)
            try:
                i = int(f[1])
            except ValueError:
                raise SymbolTableError("line %i: bad id %r" % (n, f[1]))
            if f[0] in entries:
                raise SymbolTableError("line %i: duplicate symbol %r" %
                                       (n, f[0]))
            entries[f[0]] = i
        return cls(entries, phi_id=phi_id, terminator=terminator)

    def write(self):
        """Return the table as `symbol id` lines sorted by id."""

        return ''.join('%s %i\n' % (self._id2sym[i], i)
                       for i in sorted(self._id2sym))

    def find(self, symbol):
        """Return the id of a symbol string."""

        try:
            return self._sym2id[symbol]
        except KeyError:
            raise SymbolTableError("unknown symbol %r" % symbol)

    def symbol(self, label):
        """Return the symbol string of an id."""

        try:
            return self._id2sym[label]
        except KeyError:
            raise SymbolTableError("unknown symbol id %r" % label)

    def labels(self):
        """All non-phi label ids, sorted."""

        return [i for i in sorted(self._id2sym) if i != self.phi_id]

    def compatible(self, other):
        """True if both tables agree on phi, the terminator and every id
        they share."""

        if self.phi_id != other.phi_id or \
                self.terminator_id != other.terminator_id:
            return False
        return (all(other._id2sym[i] == s for i, s in self._id2sym.items()
                    if i in other._id2sym) and
                all(other._sym2id[s] == i for s, i in self._sym2id.items()
                    if s in other._sym2id))

    def merge(self, other):
        """Union of two compatible tables."""

        if not self.compatible(other):
            raise SymbolTableError("symbol table mismatch")
        entries = dict(other._sym2id)
        entries.update(self._sym2id)
        return SymbolTable(entries, phi_id=self.phi_id,
                           terminator=self.terminator)

    def __contains__(self, label):
        return label in self._id2sym

    def __len__(self):
        return len(self._id2sym)

    def __eq__(self, other):
        return (isinstance(other, SymbolTable) and
                self._sym2id == other._sym2id and
                self.phi_id == other.phi_id and
                self.terminator_id == other.terminator_id)

    __hash__ = None

    def __repr__(self):
        return "SymbolTable(%i symbols, phi=%i, terminator=%i)" % (
            len(self), self.phi_id, self.terminator_id)


class Automaton(object):
    """An immutable deterministic (phi-)WFA with one initial and one final
    state.

    Transitions of each state are kept sorted by label id. Weights are
    probabilities, expected counts, or 1.0 for unweighted topologies.
    """

    def __init__(self, num_states, transitions, initial, final, symbols,
                 validate=True):
        """Build an automaton.

        Args:
            num_states: number of states; ids are 0..num_states-1.
            transitions: iterable of Transition (any order).
            initial: initial state id.
            final: final state id.
            symbols: SymbolTable shared by all labels.
            validate: check structural invariants (determinism, a single
                phi arc per state, f a sink, no phi cycle, known labels).
        """

        self.num_states = num_states
        self.initial = initial
        self.final = final
        self.symbols = symbols
        by_state = [[] for _ in range(num_states)]
        for t in transitions:
            t = Transition(*t)
            if not (0 <= t.src < num_states and 0 <= t.dst < num_states):
                raise AutomatonFormatError("state id out of range in %r" %
                                           (t,))
            by_state[t.src].append(t)
        self._arcs = tuple(tuple(sorted(a, key=lambda t: t.label))
                           for a in by_state)
        self._index = [{t.label: t for t in a} for a in self._arcs]
        self._estar = {}
        if validate:
            self._validate()

    @property
    def phi_id(self):
        return self.symbols.phi_id

    @property
    def terminator(self):
        return self.symbols.terminator_id

    def _validate(self):
        phi = self.phi_id
        if not (0 <= self.initial < self.num_states and
                0 <= self.final < self.num_states):
            raise AutomatonFormatError("initial or final state out of range")
        if self.initial == self.final:
            raise AutomatonFormatError(
                "initial state equals final state")
        for q, arcs in enumerate(self._arcs):
            if len(self._index[q]) != len(arcs):
                labels = [t.label for t in arcs]
                dup = [l for l in labels if labels.count(l) > 1][0]
                if dup == phi:
                    raise AutomatonFormatError(
                        "multiple phi transitions at state %i" % q)
                raise AutomatonFormatError(
                    "duplicate label %i at state %i" % (dup, q))
            for t in arcs:
                if t.label not in self.symbols:
                    raise AutomatonFormatError("unknown symbol id %i" %
                                               t.label)
                if not (t.weight >= 0 and math.isfinite(t.weight)):
                    raise AutomatonFormatError("invalid weight %r on %r" %
                                               (t.weight, t))
        if self._arcs[self.final]:
            raise AutomatonFormatError(
                "transition out of final state %i" % self.final)
        self._check_phi_acyclic()

    def _check_phi_acyclic(self):
        color = [0] * self.num_states
        for q in range(self.num_states):
            path = []
            s = q
            while s is not None and color[s] == 0:
                color[s] = 1
                path.append(s)
                t = self.phi_arc(s)
                s = t.dst if t else None
            if s is not None and color[s] == 1:
                raise AutomatonFormatError("phi-cycle through state %i" % s)
            for p in path:
                color[p] = 2

    def arcs(self, q):
        """Outgoing transitions of q, sorted by label (phi included)."""

        return self._arcs[q]

    def arc(self, q, label):
        """The transition leaving q with label, or None."""

        return self._index[q].get(label)

    def phi_arc(self, q):
        """The failure transition leaving q, or None."""

        return self._index[q].get(self.phi_id)

    def labels(self, q):
        """L[q] without phi: labels readable directly at q."""

        phi = self.phi_id
        return tuple(t.label for t in self._arcs[q] if t.label != phi)

    @property
    def transitions(self):
        """All transitions in state order."""

        return tuple(t for a in self._arcs for t in a)

    @property
    def num_arcs(self):
        return sum(len(a) for a in self._arcs)

    def has_phi(self):
        """True if any state has a failure transition."""

        return any(self.phi_id in i for i in self._index)

    def phi_sources(self):
        """Map q' -> sorted list of states with a phi arc into q' (B1)."""

        b = {}
        for q in range(self.num_states):
            t = self.phi_arc(q)
            if t is not None:
                b.setdefault(t.dst, []).append(q)
        return b

    def phi_order(self):
        """States ordered so that each phi arc goes from earlier to later."""

        indeg = [0] * self.num_states
        for q in range(self.num_states):
            t = self.phi_arc(q)
            if t is not None:
                indeg[t.dst] += 1
        order = [q for q in range(self.num_states) if indeg[q] == 0]
        for q in order:
            t = self.phi_arc(q)
            if t is not None:
                indeg[t.dst] -= 1
                if indeg[t.dst] == 0:
                    order.append(t.dst)
        return order

    def phi_extended(self, q):
        """E*[q]; see phi_extended_transitions."""

        try:
            return self._estar[q]
        except KeyError:
            pass
        seen = set()
        out = []
        weight = 1.0
        s = q
        phi = self.phi_id
        while s is not None:
            for t in self._arcs[s]:
                if t.label == phi or t.label in seen:
                    continue
                seen.add(t.label)
                out.append(PhiExtendedArc(q, t.label, weight * t.weight,
                                          t.dst, s))
            t = self.phi_arc(s)
            if t is None:
                break
            weight *= t.weight
            s = t.dst
        out.sort(key=lambda e: e.label)
        out = tuple(out)
        self._estar[q] = out
        return out

    def resolve(self, q, label):
        """The PhiExtendedArc of E*[q] for label, or None."""

        s = q
        weight = 1.0
        while s is not None:
            t = self._index[s].get(label)
            if t is not None:
                return PhiExtendedArc(q, label, weight * t.weight, t.dst, s)
            t = self.phi_arc(s)
            if t is None:
                return None
            weight *= t.weight
            s = t.dst
        return None

    def reweight(self, weight_fn):
        """Copy with the same structure and weights weight_fn(transition)."""

        return Automaton(self.num_states,
                         [t._replace(weight=float(weight_fn(t)))
                          for t in self.transitions],
                         self.initial, self.final, self.symbols,
                         validate=False)

    def canonicalize(self):
        """Copy with states renumbered in BFS order from the initial state.

        Successors are visited in label order. States not reachable from the
        initial state follow in their original order; isolated states with
        no transitions that are neither initial nor final are dropped.
        """

        order = [self.initial]
        seen = {self.initial}
        queue = deque(order)
        while queue:
            q = queue.popleft()
            for t in self._arcs[q]:
                if t.dst not in seen:
                    seen.add(t.dst)
                    order.append(t.dst)
                    queue.append(t.dst)
        touched = {t.dst for t in self.transitions}
        for q in range(self.num_states):
            if q in seen:
                continue
            if self._arcs[q] or q in touched or q == self.final:
                order.append(q)
        new = {q: i for i, q in enumerate(order)}
        return Automaton(len(order),
                         [Transition(new[t.src], t.label, t.weight,
                                     new[t.dst])
                          for t in self.transitions if t.src in new],
                         new[self.initial], new[self.final], self.symbols,
                         validate=False)

    def _key(self):
        return (self.num_states, self.initial, self.final, self.transitions)

    def __eq__(self, other):
        if not isinstance(other, Automaton):
            return NotImplemented
        return (self.symbols == other.symbols and
                self.canonicalize()._key() == other.canonicalize()._key())

    __hash__ = None

    def __repr__(self):
        return "Automaton(%i states, %i arcs, initial=%i, final=%i)" % (
            self.num_states, self.num_arcs, self.initial, self.final)


class BackoffReport(object):
    """Result of check_backoff_complete.

    violations holds (q, q', x) triples: x in L[q] is missing at the backoff
    target q', or x is None when q' has no phi arc and L[q] equals L[q'].
    """

    def __init__(self, violations):
        self.violations = tuple(violations)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def __repr__(self):
        if self.ok:
            return "BackoffReport(ok)"
        return "BackoffReport(%i violations)" % len(self.violations)


def parse_automaton(text, symbols=None, phi_label=0):
    """Parse the line format into an Automaton.

    State ids are compacted to 0..n-1 preserving their numeric order.

    Args:
        text: str or bytes.
        symbols: SymbolTable. If None, labels are numeric and the
            terminator is inferred from the labels of arcs into the final
            state.
        phi_label: failure label id used when symbols is None.
    Returns:
        An Automaton.
    Raises:
        AutomatonFormatError: malformed line, duplicate (state, label),
            multiple phi arcs at a state, transition out of f, unknown
            symbol id, phi-cycle, missing or repeated final line.
    """

    if isinstance(text, bytes):
        text = text.decode('utf-8')
    phi = symbols.phi_id if symbols is not None else phi_label
    arcs = []
    final = None
    seen = {}
    for n, line in enumerate(text.splitlines(), 1):
        f = line.split()
        if not f:
            continue
        try:
            if len(f) == 1:
                if final is not None:
                    raise AutomatonFormatError(
                        "more than one final state", n)
                final = int(f[0])
                if final < 0:
                    raise ValueError
                continue
            if len(f) not in (3, 4):
                raise AutomatonFormatError(
                    "expected 'src dst label [weight]' or 'state'", n)
            src, dst, label = int(f[0]), int(f[1]), int(f[2])
            weight = float(f[3]) if len(f) == 4 else 1.0
        except AutomatonFormatError:
            raise
        except ValueError:
            raise AutomatonFormatError("cannot parse %r" % line.strip(), n)
        if min(src, dst, label) < 0:
            raise AutomatonFormatError("negative id", n)
        if not (weight >= 0 and math.isfinite(weight)):
            raise AutomatonFormatError("invalid weight %r" % f[3], n)
        if (src, label) in seen:
            if label == phi:
                raise AutomatonFormatError(
                    "multiple phi transitions at state %i" % src, n)
            raise AutomatonFormatError(
                "duplicate label %i at state %i" % (label, src), n)
        if symbols is not None and label not in symbols:
            raise AutomatonFormatError("unknown symbol id %i" % label, n)
        seen[(src, label)] = n
        arcs.append((src, label, weight, dst, n))

    if not arcs:
        raise AutomatonFormatError("no transitions")
    _check_phi_cycle(arcs, phi)
    if final is None:
        raise AutomatonFormatError("no final state line")
    for (src, label, weight, dst, n) in arcs:
        if src == final:
            raise AutomatonFormatError(
                "transition out of final state %i" % final, n)

    if symbols is None:
        into_final = {a[1] for a in arcs if a[3] == final and a[1] != phi}
        if len(into_final) != 1:
            raise AutomatonFormatError(
                "cannot infer the terminator: labels into the final state "
                "are %s" % sorted(into_final))
        symbols = SymbolTable.numeric([a[1] for a in arcs],
                                      into_final.pop(), phi_id=phi)

    ids = sorted({a[0] for a in arcs} | {a[3] for a in arcs} | {final})
    new = {q: i for i, q in enumerate(ids)}
    return Automaton(len(ids),
                     [Transition(new[s], l, w, new[d])
                      for (s, l, w, d, _) in arcs],
                     new[arcs[0][0]], new[final], symbols)


def _check_phi_cycle(arcs, phi):
    nxt = {a[0]: (a[3], a[4]) for a in arcs if a[1] == phi}
    done = set()
    for q in nxt:
        path = set()
        s = q
        while s in nxt and s not in done:
            if s in path:
                raise AutomatonFormatError("phi-cycle through state %i" % s,
                                           nxt[s][1])
            path.add(s)
            s = nxt[s][0]
        done |= path


def serialize_automaton(a):
    """Canonical text of an automaton.

    States are numbered in BFS order from the initial state, arcs are sorted
    by label id and weights are printed with 17 significant digits. The
    final-state line comes last.

    Returns:
        A str, LF-terminated.
    """

    c = a.canonicalize()
    lines = ['%i %i %i %s' % (t.src, t.dst, t.label,
                              WEIGHT_FORMAT % (t.weight + 0.0))
             for t in c.transitions]
    lines.append('%i' % c.final)
    return '\n'.join(lines) + '\n'


def check_backoff_complete(a):
    """Check L[q] is contained in L[q'] for every phi arc q -> q'.

    Containment must be strict when q' has no phi arc.

    Returns:
        A BackoffReport.
    """

    violations = []
    for q in range(a.num_states):
        t = a.phi_arc(q)
        if t is None:
            continue
        mine = a.labels(q)
        theirs = set(a.labels(t.dst))
        for x in mine:
            if x not in theirs:
                violations.append((q, t.dst, x))
        if a.phi_arc(t.dst) is None and len(theirs) == len(mine) and \
                theirs.issuperset(mine):
            violations.append((q, t.dst, None))
    return BackoffReport(violations)


def phi_extended_transitions(a, q):
    """Return E*[q], the phi-extended transitions of state q.

    One arc per label in L*[q]: the weight is the product of the failure
    weights along the leading phi path times the weight of the first arc
    reading the label; resolved_at is the state where it is read (q^x).
    Later matches of a label already read earlier on the chain are shadowed.

    Args:
        a: Automaton.
        q: state id.
    Returns:
        A tuple of PhiExtendedArc sorted by label.
    """

    return a.phi_extended(q)


def is_stochastic(a, tol=1e-9):
    """True if every non-final state's phi-extended weights sum to 1 +- tol
    and no weight is negative."""

    for t in a.transitions:
        if t.weight < 0:
            return False
    for q in range(a.num_states):
        if q == a.final:
            continue
        total = math.fsum(e.weight for e in a.phi_extended(q))
        if abs(total - 1.0) > tol:
            return False
    return True


def trim(a):
    """Remove states and transitions that can not lead to f.

    Starting from i, every transition whose destination is co-accessible is
    kept, failure transitions and shadowed matches included, so that the
    labels read at a failure target always cover those read at its
    sources. A dead transition is kept when removing it would let a later
    match on a failure chain become reachable, or when a kept failure
    source reads its label. Its destination is kept without transitions.

    Returns:
        The trimmed Automaton, states compacted in their original order.
    Raises:
        EmptyLanguageError: no accepting path.
    """

    n = a.num_states
    rev = [[] for _ in range(n)]
    for q in range(n):
        for e in a.phi_extended(q):
            rev[e.dst].append(q)
    co = {a.final}
    stack = [a.final]
    while stack:
        q = stack.pop()
        for p in rev[q]:
            if p not in co:
                co.add(p)
                stack.append(p)
    if a.initial not in co:
        raise EmptyLanguageError()

    phi = a.phi_id
    keep_states = {a.initial}
    keep_arcs = set()
    stack = [a.initial]
    while stack:
        q = stack.pop()
        for t in a.arcs(q):
            if t.dst not in co:
                continue
            keep_arcs.add((q, t.label))
            if t.dst not in keep_states:
                keep_states.add(t.dst)
                stack.append(t.dst)

    def kept_labels(q):
        return {x for x in a.labels(q) if (q, x) in keep_arcs}

    def keep(s, x):
        keep_arcs.add((s, x))
        keep_states.add(a.arc(s, x).dst)

    changed = True
    while changed:
        changed = False
        for s in a.phi_order():
            if (s, phi) not in keep_arcs:
                continue
            r = a.phi_arc(s).dst
            later = set()
            p = r
            while True:
                later |= kept_labels(p)
                if (p, phi) not in keep_arcs:
                    break
                p = a.phi_arc(p).dst
            for x in a.labels(s):
                if (s, x) not in keep_arcs and x in later:
                    logger.warning("trim: keeping transition %i -%i-> %i to "
                                   "preserve shadowing", s, x,
                                   a.arc(s, x).dst)
                    keep(s, x)
                    changed = True
            mine = kept_labels(s)
            for x in mine - kept_labels(r):
                if a.arc(r, x) is not None:
                    logger.debug("trim: keeping transition %i -%i-> %i "
                                 "read at failure source %i", r, x,
                                 a.arc(r, x).dst, s)
                    keep(r, x)
                    changed = True
            if (r, phi) not in keep_arcs and kept_labels(r) <= mine:
                spare = sorted(set(a.labels(r)) - mine)
                if spare:
                    keep(r, spare[0])
                    changed = True

    ids = sorted(keep_states)
    new = {q: i for i, q in enumerate(ids)}
    arcs = [Transition(new[t.src], t.label, t.weight, new[t.dst])
            for t in a.transitions
            if (t.src, t.label) in keep_arcs and t.src in new]
    return Automaton(len(ids), arcs, new[a.initial], new[a.final],
                     a.symbols, validate=False)


def accepted_strings(a, max_len):
    """Enumerate accepted strings up to max_len labels (terminator included).

    Follows allowed paths only (phi-extended transitions).

    Yields:
        (labels tuple, weight) pairs.
    """

    stack = [((), a.initial, 1.0)]
    while stack:
        prefix, q, w = stack.pop()
        if len(prefix) >= max_len:
            continue
        for e in reversed(a.phi_extended(q)):
            p = prefix + (e.label,)
            if e.dst == a.final:
                yield p, w * e.weight
            else:
                stack.append((p, e.dst, w * e.weight))


def string_weight(a, labels):
    """Weight of a label sequence along its allowed path (0 if rejected)."""

    q = a.initial
    w = 1.0
    for x in labels:
        if q == a.final:
            return 0.0
        e = a.resolve(q, x)
        if e is None:
            return 0.0
        w *= e.weight
        q = e.dst
    return w if q == a.final else 0.0
