"""Intrinsic evaluation: corpus perplexity, exact KL divergence between a
source automaton and a candidate, and the perplexity lower bound of a
topology on a test corpus.

Classes defined here:
    EvalReport

Functions defined here:
    perplexity
    kl_divergence
    empirical_model
    topology_lower_bound
"""

import logging
import math
from collections import defaultdict
from sfst.automata import Automaton, Transition
from sfst.distance import POSITIVE_REAL, WeightedGraph, shortest_distance
from sfst.errors import SfstError
from sfst.intersect import expand_product
from sfst.klmin import approximate
from sfst.models import SequenceModel, WfaBackedModel

logger = logging.getLogger(__name__)

BOUND_CAVEAT = ("lower bound assumes the KL minimization reached the global "
                "optimum; it is only guaranteed to reach a stationary point")


class EvalReport(object):
    """Corpus log-likelihood summary.

    Attributes:
        log_prob_total: natural-log probability of the corpus.
        token_count: number of scored labels, terminators included.
        sentence_count: number of sentences.
        oov_count: tokens mapped to the unknown symbol while reading.
        zero_prob_line: 1-based line of the first zero-probability sentence,
            or None.
        caveat: note printed with the report, or None.
    """

    def __init__(self, log_prob_total, token_count, sentence_count=0,
                 oov_count=0, zero_prob_line=None, caveat=None):
        self.log_prob_total = log_prob_total
        self.token_count = token_count
        self.sentence_count = sentence_count
        self.oov_count = oov_count
        self.zero_prob_line = zero_prob_line
        self.caveat = caveat

    @property
    def perplexity(self):
        if self.token_count == 0:
            return math.nan
        return math.exp(-self.log_prob_total / self.token_count)

    @property
    def bits_per_symbol(self):
        if self.token_count == 0:
            return math.nan
        return -self.log_prob_total / (self.token_count * math.log(2))

    def dict(self):
        return {'log_prob_total': self.log_prob_total,
                'token_count': self.token_count,
                'sentence_count': self.sentence_count,
                'oov_count': self.oov_count,
                'perplexity': self.perplexity,
                'bits_per_symbol': self.bits_per_symbol}

    def lines(self, bits=False):
        """Aligned `key value` lines; bits puts bits_per_symbol first."""

        rows = [('perplexity', '%.6f' % self.perplexity),
                ('bits_per_symbol', '%.6f' % self.bits_per_symbol)]
        if bits:
            rows.reverse()
        rows += [('log_prob_total', '%.6f' % self.log_prob_total),
                 ('token_count', '%i' % self.token_count),
                 ('sentence_count', '%i' % self.sentence_count),
                 ('oov_count', '%i' % self.oov_count)]
        if self.zero_prob_line is not None:
            rows.append(('zero_prob_line', '%i' % self.zero_prob_line))
        if self.caveat:
            rows.append(('caveat', self.caveat))
        width = max(len(k) for k, _ in rows)
        return ['%-*s  %s' % (width, k, v) for k, v in rows]

    def __repr__(self):
        return "EvalReport(perplexity=%.6g, tokens=%i)" % (
            self.perplexity, self.token_count)


def perplexity(model, corpus, oov_count=0):
    """Per-token perplexity of a model on a corpus.

    Args:
        model: SequenceModel, or an Automaton (wrapped in WfaBackedModel).
        corpus: iterable of terminator-ended label sequences.
        oov_count: number of unknown tokens already mapped while reading.
    Returns:
        An EvalReport; perplexity is inf when a sentence has probability 0.
    """

    if isinstance(model, Automaton):
        model = WfaBackedModel(model)
    if not isinstance(model, SequenceModel):
        raise TypeError("model is of incorrect type: %r" % type(model))
    scores = []
    tokens = 0
    sentences = 0
    zero = None
    for n, sentence in enumerate(corpus, 1):
        lp = model.score(sentence)
        sentences += 1
        tokens += len(sentence)
        if lp == -math.inf:
            if zero is None:
                zero = n
                logger.warning("sentence on line %i has zero probability", n)
            continue
        scores.append(lp)
    total = -math.inf if zero is not None else math.fsum(scores)
    return EvalReport(total, tokens, sentences, oov_count, zero)


def kl_divergence(s, t, queue=None):
    """D(p_s || p_t) between a stochastic automaton and a candidate.

    Expected per-state cross terms are weighted by the visit counts of the
    phi-extended product of s and t.

    Args:
        s: stochastic (phi-)WFA.
        t: stochastic (phi-)WFA over a compatible symbol table.
        queue: QueueDiscipline for the shortest distance.
    Returns:
        The divergence in nats; inf if s generates a string t rejects or
        gives zero probability.
    """

    p = expand_product(s, t)
    gamma = shortest_distance(WeightedGraph.from_automaton(p), queue,
                              POSITIVE_REAL)
    for q, x, w in p.lost:
        if gamma[q] * w > 0:
            labels = p.prefix(q) + (x,)
            logger.warning("divergence is infinite: %s is not accepted",
                           ' '.join(p.symbols.symbol(l) for l in labels))
            return math.inf
    terms = []
    for tr in p.transitions:
        g = gamma[tr.src]
        if g == 0 or tr.weight == 0:
            continue
        pt = t.resolve(p.target_state(tr.src), tr.label).weight
        if pt <= 0:
            labels = p.prefix(tr.src) + (tr.label,)
            logger.warning("divergence is infinite: %s has zero probability",
                           ' '.join(p.symbols.symbol(l) for l in labels))
            return math.inf
        terms.append(g * tr.weight * (math.log(tr.weight) - math.log(pt)))
    return math.fsum(terms)


def empirical_model(corpus, symbols):
    """Prefix-tree automaton of the relative frequencies of a corpus.

    Args:
        corpus: iterable of terminator-ended label sequences.
        symbols: SymbolTable.
    Returns:
        A stochastic, acyclic, phi-free Automaton giving each distinct
        sentence its relative frequency.
    """

    counts = defaultdict(int)
    children = defaultdict(dict)
    term = symbols.terminator_id
    prefixes = {(): 0}
    n = 0
    for sentence in corpus:
        sentence = tuple(sentence)
        if not sentence or sentence[-1] != term or term in sentence[:-1]:
            raise SfstError("sentence must end with the terminator: %r" %
                            (sentence,))
        n += 1
        for i, x in enumerate(sentence):
            h = sentence[:i]
            counts[h] += 1
            children[h][x] = children[h].get(x, 0) + 1
            if x != term and sentence[:i + 1] not in prefixes:
                prefixes[sentence[:i + 1]] = len(prefixes)
    if n == 0:
        raise SfstError("empty corpus")
    final = len(prefixes)
    transitions = []
    for h, q in prefixes.items():
        for x, c in sorted(children[h].items()):
            dst = final if x == term else prefixes[h + (x,)]
            transitions.append(Transition(q, x, c / counts[h], dst))
    return Automaton(final + 1, transitions, 0, final, symbols)


def topology_lower_bound(corpus, a, oov_count=0, **kwargs):
    """Lowest perplexity any model on topology a can reach on corpus.

    The empirical distribution of the corpus is approximated onto a and the
    approximation is scored on the same corpus.

    Args:
        corpus: terminator-ended label sequences.
        a: backoff-complete topology.
        **kwargs: passed to approximate (epsilon, tol, max_iters, ...).
    Returns:
        An EvalReport with a caveat attached.
    Raises:
        CoverageError: a sentence is not accepted by a.
    """

    corpus = [tuple(s) for s in corpus]
    source = empirical_model(corpus, a.symbols)
    approx = approximate(source, a, **kwargs)
    report = perplexity(approx, corpus, oov_count)
    report.caveat = BOUND_CAVEAT
    return report
