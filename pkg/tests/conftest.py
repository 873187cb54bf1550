"""Shared fixtures: small hand-built machines, random backoff topologies,
random stochastic phi-WFAs and a brute-force count oracle."""

import math
from collections import defaultdict
import numpy as np
import pytest
from sfst.automata import (Automaton, SymbolTable, Transition,
                           accepted_strings)
from sfst.klmin import assign_failure_weights
from sfst.ngram import build_kgram_topology


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: long statistical checks (deselect with -m 'not "
        "slow')")


def make_symbols(k):
    """Table with letters a, b, ... as ids 1..k and '$' as k + 1."""

    return SymbolTable.from_symbols([chr(ord('a') + i) for i in range(k)])


def geometric(p_stop=0.5):
    """One state looping on 'a', stopping with '$'."""

    sy = make_symbols(1)
    a, term = sy.find('a'), sy.terminator_id
    return Automaton(2, [Transition(0, a, 1.0 - p_stop, 0),
                         Transition(0, term, p_stop, 1)], 0, 1, sy)


def random_corpus(rng, symbols, n, mean_len=3.0):
    """Random terminator-ended sentences over the non-terminator labels."""

    term = symbols.terminator_id
    vocab = [x for x in symbols.labels() if x != term]
    corpus = []
    for _ in range(n):
        length = rng.geometric(1.0 / (mean_len + 1.0)) - 1
        corpus.append(tuple(int(rng.choice(vocab)) for _ in range(length)) +
                      (term,))
    return corpus


def random_kgram_topology(rng, k=3, order=2, sentences=20):
    """A cyclic backoff-complete topology built from a random corpus."""

    symbols = make_symbols(k)
    corpus = random_corpus(rng, symbols, sentences)
    return build_kgram_topology(corpus, order, symbols)


def unrolled_topology(rng, k=2, horizon=3, keep=0.5):
    """An acyclic backoff-complete topology accepting every string of at
    most horizon labels.

    State u_t reads every label at position t (only '$' at t = horizon).
    History states h_(t, x) read a random strict subset of labels and back
    off to u_t.
    """

    symbols = make_symbols(k)
    term = symbols.terminator_id
    vocab = [x for x in symbols.labels() if x != term]
    full = vocab + [term]
    unigram = {}
    hist = {}
    n = 0
    for t in range(horizon + 1):
        unigram[t] = n
        n += 1
        if 1 <= t < horizon:
            for x in vocab:
                if rng.random() < keep:
                    hist[(t, x)] = n
                    n += 1
    final = n
    transitions = []

    def dest(t, x):
        if x == term:
            return final
        return hist.get((t + 1, x), unigram[t + 1])

    for t in range(horizon + 1):
        ls = full if t < horizon else [term]
        transitions.extend(Transition(unigram[t], x, 1.0, dest(t, x))
                           for x in ls)
    for (t, _), q in hist.items():
        size = int(rng.integers(0, len(full)))
        ls = sorted(rng.choice(full, size=size, replace=False).tolist())
        transitions.extend(Transition(q, int(x), 1.0, dest(t, int(x)))
                           for x in ls)
        transitions.append(Transition(q, symbols.phi_id, 1.0, unigram[t]))
    return Automaton(final + 1, transitions, unigram[0], final, symbols)


def random_weights(rng, topology, alpha=1.0):
    """A stochastic phi-WFA on topology with Dirichlet companion
    distributions."""

    ys = {}
    phi = topology.phi_id
    for q in range(topology.num_states):
        if q == topology.final:
            continue
        ls = list(topology.labels(q))
        if topology.phi_arc(q) is not None:
            ls.append(phi)
        if not ls:
            continue
        y = rng.dirichlet([alpha] * len(ls))
        y = np.maximum(y, 1e-3)
        y /= y.sum()
        ys[q] = dict(zip(ls, y.tolist()))
    return assign_failure_weights(ys, topology)


def brute_force_counts(s, a, max_len):
    """C(x, q) and C(phi, q) of s over a from enumerated strings of s.

    Returns:
        (counts dict (q, x) -> float, phi_counts dict q -> float).
    """

    counts = defaultdict(float)
    phi_counts = defaultdict(float)
    for labels, w in accepted_strings(s, max_len):
        q = a.initial
        for x in labels:
            while a.arc(q, x) is None:
                phi_counts[q] += w
                q = a.phi_arc(q).dst
            counts[(q, x)] += w
            q = a.arc(q, x).dst
    return dict(counts), dict(phi_counts)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def geometric_source():
    return geometric()


@pytest.fixture
def backoff_chain():
    """Three states over {a, b, $}: 0 reads a and backs off to 1, 1 reads
    b and backs off to 2, 2 reads everything. Weights are stochastic."""

    sy = make_symbols(2)
    a, b, term, phi = sy.find('a'), sy.find('b'), sy.terminator_id, sy.phi_id
    ys = {0: {a: 0.5, phi: 0.5},
          1: {a: 0.2, b: 0.3, phi: 0.5},
          2: {a: 0.3, b: 0.2, term: 0.5}}
    topo = Automaton(4, [Transition(0, a, 1.0, 0),
                         Transition(0, phi, 1.0, 1),
                         Transition(1, a, 1.0, 0),
                         Transition(1, b, 1.0, 1),
                         Transition(1, phi, 1.0, 2),
                         Transition(2, a, 1.0, 0),
                         Transition(2, b, 1.0, 1),
                         Transition(2, term, 1.0, 3)], 0, 3, sy)
    return assign_failure_weights(ys, topo)


@pytest.fixture
def shadowed_target():
    """0 reads a and b and backs off to 1, which reads a, b and $. State 1
    is entered only through the failure transition, so its a and b are
    always shadowed."""

    sy = make_symbols(2)
    a, b, term, phi = sy.find('a'), sy.find('b'), sy.terminator_id, sy.phi_id
    ys = {0: {a: 0.3, b: 0.3, phi: 0.4},
          1: {a: 0.2, b: 0.2, term: 0.6}}
    topo = Automaton(3, [Transition(0, a, 1.0, 0),
                         Transition(0, b, 1.0, 0),
                         Transition(0, phi, 1.0, 1),
                         Transition(1, a, 1.0, 0),
                         Transition(1, b, 1.0, 0),
                         Transition(1, term, 1.0, 2)], 0, 2, sy)
    return assign_failure_weights(ys, topo)


@pytest.fixture
def brute_force():
    return brute_force_counts


def total_variation(p, q):
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(x, 0.0) - q.get(x, 0.0)) for x in keys)
