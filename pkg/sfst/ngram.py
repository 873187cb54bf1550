"""N-gram tooling: counting, k-gram backoff topologies, Katz models and
count-threshold pruning.

A history state h is a tuple of at most k-1 labels, observed as the context
of some counted n-gram. The sentence-start marker BOS may only appear in
first position; the history (BOS,) is the start state and () is the unigram
state, which reads every label of the vocabulary. Each history backs off to
h[1:] with a failure transition.

Classes defined here:
    NgramCounts

Functions defined here:
    count_ngrams
    build_kgram_topology
    katz_model
    threshold_prune_topology
    renormalize_backoff
"""

import logging
import math
from collections import defaultdict
from sfst.automata import Automaton, Transition, check_backoff_complete, trim
from sfst.errors import BackoffError, SfstError, SymbolTableError

logger = logging.getLogger(__name__)

BOS = -1
BOS_SYMBOL = '<s>'
KATZ_CUTOFF = 5
MIN_BACKOFF_MASS = 1e-12


class NgramCounts(object):
    """Counts of all n-grams of length 1..order in a corpus.

    Attributes:
        order: k.
        symbols: SymbolTable of the labels.
        counts: dict n-gram tuple -> int; BOS marks the sentence start.
        sentences: number of sentences counted.
    """

    def __init__(self, order, symbols, counts=None, sentences=0):
        if order < 1:
            raise ValueError("order invalid value: %r" % order)
        self.order = order
        self.symbols = symbols
        self.counts = dict(counts or {})
        self.sentences = sentences

    def add_sentence(self, sentence):
        """Count every n-gram ending at each position of a terminator-ended
        label sequence."""

        term = self.symbols.terminator_id
        sentence = tuple(sentence)
        if not sentence or sentence[-1] != term:
            raise SfstError("sentence must end with the terminator")
        padded = (BOS,) + sentence
        for i in range(1, len(padded)):
            x = padded[i]
            if x not in self.symbols or x == self.symbols.phi_id:
                raise SymbolTableError("unknown symbol id %r" % (x,))
            for n in range(1, self.order + 1):
                if n > i + 1:
                    break
                g = padded[i + 1 - n:i + 1]
                self.counts[g] = self.counts.get(g, 0) + 1
        self.sentences += 1

    def of_length(self, n):
        return {g: c for g, c in self.counts.items() if len(g) == n}

    def count_of_counts(self, n):
        """n_r for the n-grams of length n, as a dict r -> n_r."""

        out = defaultdict(int)
        for g, c in self.counts.items():
            if len(g) == n:
                out[c] += 1
        return dict(out)

    def continuations(self):
        """dict history -> dict label -> count."""

        out = defaultdict(dict)
        for g, c in self.counts.items():
            out[g[:-1]][g[-1]] = c
        return out

    def _name(self, label):
        return BOS_SYMBOL if label == BOS else self.symbols.symbol(label)

    def write(self):
        """Lines "w1 ... wn<TAB>count" ordered by length then labels."""

        return ''.join('%s\t%i\n' % (' '.join(self._name(l) for l in g), c)
                       for g, c in sorted(self.counts.items(),
                                          key=lambda i: (len(i[0]), i[0])))

    @classmethod
    def read(cls, text, symbols):
        """Parse the output of write; the order is the longest n-gram."""

        if isinstance(text, bytes):
            text = text.decode('utf-8')
        counts = {}
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                words, c = line.rsplit('\t', 1)
                c = int(c)
            except ValueError:
                raise SfstError("line %i: expected 'w1 ... wn<TAB>count'" % n)
            g = tuple(BOS if w == BOS_SYMBOL else symbols.find(w)
                      for w in words.split())
            if not g or c < 0:
                raise SfstError("line %i: invalid n-gram count" % n)
            counts[g] = c
        if not counts:
            raise SfstError("empty corpus")
        order = max(len(g) for g in counts)
        return cls(order, symbols, counts,
                   counts.get((symbols.terminator_id,), 0))

    def __repr__(self):
        return "NgramCounts(order=%i, %i n-grams)" % (self.order,
                                                      len(self.counts))


def count_ngrams(corpus, order, symbols):
    """Count n-grams of length 1..order over terminator-ended sentences.

    Raises:
        SfstError: empty corpus.
    """

    counts = NgramCounts(order, symbols)
    for sentence in corpus:
        counts.add_sentence(sentence)
    if counts.sentences == 0:
        raise SfstError("empty corpus")
    return counts


def _as_counts(corpus, order, symbols):
    if isinstance(corpus, NgramCounts):
        if corpus.order < order:
            raise ValueError("order invalid value: %i exceeds the counted "
                             "order %i" % (order, corpus.order))
        return corpus
    return count_ngrams(corpus, order, symbols)


class _KgramStructure(object):
    """States and arcs of a k-gram backoff topology."""

    def __init__(self, counts, order):
        self.order = order
        self.symbols = counts.symbols
        term = self.symbols.terminator_id
        cont = counts.continuations()
        hists = {h for h in cont if h and len(h) < order}
        if order > 1:
            hists.add((BOS,))
        self.hists = [()] + sorted(hists, key=lambda h: (len(h), h))
        self.index = {h: i for i, h in enumerate(self.hists)}
        self.final = len(self.hists)
        self.initial = self.index[(BOS,)] if order > 1 else 0
        vocab = self.symbols.labels()
        self.labels = {(): list(vocab)}
        for h in self.hists[1:]:
            self.labels[h] = sorted(cont.get(h, {}))
        full = set(vocab)
        self.phi = {}
        for h in self.hists[1:]:
            if set(self.labels[h]) != full:
                self.phi[h] = h[1:]
        self.term = term
        self.cont = cont

    def dest(self, h, x):
        if x == self.term:
            return self.final
        g = (h + (x,))[-(self.order - 1):] if self.order > 1 else ()
        while g not in self.index:
            g = g[1:]
        return self.index[g]

    def automaton(self, weight):
        """weight(h, x) gives Sigma weights, weight(h, None) failure
        weights."""

        phi = self.symbols.phi_id
        transitions = []
        for h in self.hists:
            q = self.index[h]
            for x in self.labels[h]:
                transitions.append(Transition(q, x, weight(h, x),
                                              self.dest(h, x)))
            if h in self.phi:
                transitions.append(Transition(q, phi, weight(h, None),
                                              self.index[self.phi[h]]))
        return Automaton(self.final + 1, transitions, self.initial,
                         self.final, self.symbols)


def build_kgram_topology(corpus, order, symbols):
    """Unweighted k-gram backoff topology.

    Args:
        corpus: terminator-ended label sequences, or NgramCounts.
        order: k >= 1.
        symbols: SymbolTable; its labels form the vocabulary.
    Returns:
        A backoff-complete Automaton with unit weights.
    """

    st = _KgramStructure(_as_counts(corpus, order, symbols), order)
    a = st.automaton(lambda h, x: 1.0)
    logger.debug("%i-gram topology: %i states, %i arcs", order,
                 a.num_states, a.num_arcs)
    return a


def _good_turing(coc, cutoff):
    """Katz discount ratios d_r for 1 <= r <= k, with k the largest value
    up to cutoff for which every ratio lies in (0, 1].

    With k = 1 the Katz correction removes every singleton, so the plain
    Good-Turing ratio 2 n_2 / n_1 is used instead.

    Returns:
        (d, k), or (None, 0) if no cutoff gives valid ratios.
    """

    if cutoff < 1:
        return {}, 0
    n1 = coc.get(1, 0)
    if n1 == 0:
        return None, 0
    for k in range(cutoff, 1, -1):
        d = _katz_ratios(coc, k, n1)
        if d is not None:
            return d, k
    d1 = 2 * coc.get(2, 0) / n1
    if 0 < d1 <= 1:
        return {1: d1}, 1
    return None, 0


def _katz_ratios(coc, k, n1):
    common = (k + 1) * coc.get(k + 1, 0) / n1
    if common >= 1:
        return None
    d = {}
    for r in range(1, k + 1):
        nr = coc.get(r, 0)
        if nr == 0:
            continue
        rstar = (r + 1) * coc.get(r + 1, 0) / nr
        d[r] = (rstar / r - common) / (1.0 - common)
        if not 0 < d[r] <= 1:
            return None
    return d


def _absolute_discounts(coc):
    """Ratios (r - D) / r for every observed count r, D = n_1 / (n_1 + 2 n_2),
    or None without singletons and doubletons."""

    n1, n2 = coc.get(1, 0), coc.get(2, 0)
    if n1 == 0 or n2 == 0:
        return None
    dd = n1 / (n1 + 2.0 * n2)
    return {r: (r - dd) / r for r in coc}


def katz_model(corpus, order, symbols, cutoff=KATZ_CUTOFF):
    """Katz backoff model with Good-Turing discounts.

    Counts above cutoff are not discounted. When the discounts of an order
    are out of range the cutoff is lowered until they are not. An order
    with no valid cutoff falls back, with a warning, to absolute
    discounting, or to relative frequencies when it has no doubletons.
    Mass removed from unigrams goes uniformly to the labels never seen.

    Args:
        corpus: terminator-ended label sequences, or NgramCounts.
        order: k >= 1.
        symbols: SymbolTable.
        cutoff: largest discounted count.
    Returns:
        A stochastic phi-WFA on the k-gram topology.
    """

    counts = _as_counts(corpus, order, symbols)
    st = _KgramStructure(counts, order)
    discounts = {}
    for n in range(1, order + 1):
        coc = counts.count_of_counts(n)
        d, k = _good_turing(coc, cutoff)
        if d is None:
            d = _absolute_discounts(coc)
            logger.warning("Good-Turing discounts out of range for order %i;"
                           " using %s", n, "relative frequencies" if d is None
                           else "absolute discounting")
            d = d or {}
        elif k < cutoff:
            logger.info("Good-Turing cutoff for order %i lowered from %i to "
                        "%i", n, cutoff, k)
        discounts[n] = d

    probs = {}
    backoff = {}
    for h in st.hists:
        cont = st.cont.get(h, {})
        total = sum(cont.values())
        d = discounts[len(h) + 1]
        p = {x: d.get(c, 1.0) * c / total for x, c in cont.items()} \
            if total else {}
        if h == ():
            unseen = [x for x in st.labels[()] if x not in p]
            beta = 1.0 - math.fsum(p.values())
            if unseen and beta > 0:
                for x in unseen:
                    p[x] = beta / len(unseen)
            else:
                p = _renormalized(p)
                for x in unseen:
                    p[x] = 0.0
        elif h not in st.phi:
            p = _renormalized(p)
        else:
            beta = 1.0 - math.fsum(p.values())
            target = probs[st.phi[h]]
            dd = 1.0 - math.fsum(target[x] for x in st.labels[h])
            if dd <= MIN_BACKOFF_MASS or beta <= 0:
                if beta > 0:
                    logger.warning("no backoff mass below history %s; "
                                   "renormalizing", _show(st, h))
                p = _renormalized(p)
                backoff[h] = 0.0
            else:
                backoff[h] = beta / dd
        probs[h] = p

    return st.automaton(lambda h, x: backoff[h] if x is None
                        else probs[h][x])


def _renormalized(p):
    total = math.fsum(p.values())
    return {x: v / total for x, v in p.items()} if total > 0 else dict(p)


def _show(st, h):
    return ' '.join(BOS_SYMBOL if l == BOS else st.symbols.symbol(l)
                    for l in h)


def threshold_prune_topology(a, counts, theta):
    """Remove arcs whose aggregated count is below theta.

    States are visited with failure sources before their targets. An arc
    (q, x) is removed when q has a failure transition, C(x, q) < theta and
    no state backing off into q still reads x. States without a failure
    transition are never pruned. Kept arcs keep their weights; the result
    is trimmed.

    Args:
        a: backoff-complete (phi-)WFA.
        counts: AggCountTable over a.
        theta: count threshold (>= 0, may be inf).
    Returns:
        A backoff-complete Automaton.
    Raises:
        BackoffError: a is not backoff-complete.
        EmptyLanguageError: nothing is left.
    """

    if theta < 0 or math.isnan(theta):
        raise ValueError("theta invalid value: %r" % theta)
    report = check_backoff_complete(a)
    if not report.ok:
        raise BackoffError(report.violations)
    sources = a.phi_sources()
    kept = {}
    for q in a.phi_order():
        ls = a.labels(q)
        if a.phi_arc(q) is None:
            kept[q] = set(ls)
            continue
        needed = set()
        for p in sources.get(q, []):
            needed |= kept[p]
        kept[q] = {x for x in ls
                   if x in needed or not counts.get(q, x) < theta}
    phi = a.phi_id
    transitions = [t for t in a.transitions
                   if t.label == phi or t.label in kept[t.src]]
    removed = a.num_arcs - len(transitions)
    logger.info("pruning at theta=%g removed %i of %i arcs", theta, removed,
                a.num_arcs)
    out = trim(Automaton(a.num_states, transitions, a.initial, a.final,
                         a.symbols, validate=False))
    if not check_backoff_complete(out).ok:
        raise BackoffError(check_backoff_complete(out).violations)
    return out


def renormalize_backoff(a):
    """Recompute failure weights of a pruned model.

    Retained probabilities are kept. Each failure transition gets the
    retained mass deficit divided by the mass its target leaves for labels
    the state does not read; states without a failure transition are
    rescaled to sum to 1.

    Returns:
        A stochastic Automaton with a's structure.
    """

    phi = a.phi_id
    weights = {}
    for q in range(a.num_states):
        ls = a.labels(q)
        w = [a.arc(q, x).weight for x in ls]
        total = math.fsum(w)
        if a.phi_arc(q) is None and total > 0:
            w = [v / total for v in w]
        weights.update(((q, x), v) for x, v in zip(ls, w))
    for q in reversed(a.phi_order()):
        t = a.phi_arc(q)
        if t is None:
            continue
        ls = a.labels(q)
        total = math.fsum(weights[(q, x)] for x in ls)
        beta = 1.0 - total
        d = 1.0 - math.fsum(weights[(t.dst, x)] for x in ls)
        if d <= MIN_BACKOFF_MASS or beta <= 0:
            if total > 0:
                for x in ls:
                    weights[(q, x)] /= total
            weights[(q, phi)] = 0.0
        else:
            weights[(q, phi)] = beta / d
    return a.reweight(lambda t: weights[(t.src, t.label)])
