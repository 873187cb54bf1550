"""Sequence models used as approximation sources.

A SequenceModel exposes a next-symbol distribution that depends only on an
opaque state handle, plus a way to advance the state. Two implementations
are provided: WfaBackedModel evaluates a stochastic phi-WFA through its
phi-extended transitions, and ToyCharModel is a small recurrent scorer
whose state hashes the whole history.

Random streams use numpy's counter-based Philox generator keyed by
SeedSequence([seed, shard]), so a seed reproduces the same samples on every
platform.

Classes defined here:
    SequenceModel
    WfaBackedModel
    ToyCharModel
    UniformStream

Functions defined here:
    make_rng
"""

import bisect
import logging
import math
from abc import ABC, abstractmethod
import numpy as np
from scipy.special import softmax
from sfst.errors import SampleTruncatedError, SfstError, SymbolTableError

logger = logging.getLogger(__name__)

# handle returned by advance() after the terminator
FINAL = None

UNIFORM_BATCH = 4096


def make_rng(seed, shard=0):
    """numpy Generator over Philox keyed by (seed, shard)."""

    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([int(seed), int(shard)])))


class UniformStream(object):
    """Uniform [0, 1) draws served from batches of a Generator."""

    def __init__(self, rng, batch=UNIFORM_BATCH):
        self.rng = rng
        self.batch = batch
        self._buf = []
        self._pos = 0

    def next(self):
        if self._pos >= len(self._buf):
            self._buf = self.rng.random(self.batch).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


class SequenceModel(ABC):
    """Source distribution p_s(x | state) over terminator-ended strings.

    Subclasses implement start, next_distribution and advance. symbols is
    the SymbolTable of the model's labels.
    """

    symbols = None

    @abstractmethod
    def start(self):
        """Initial state handle."""

    @abstractmethod
    def next_distribution(self, state):
        """dict label -> probability (sums to 1)."""

    @abstractmethod
    def advance(self, state, label):
        """State handle after reading label (FINAL after the terminator)."""

    @property
    def terminator(self):
        return self.symbols.terminator_id

    def _check_state(self, state):
        if state is FINAL:
            raise SfstError("no distribution after the terminator")

    def draw(self, state, u):
        """Label at cumulative probability u in [0, 1)."""

        dist = self.next_distribution(state)
        acc = 0.0
        last = None
        for x in sorted(dist):
            p = dist[x]
            if p <= 0:
                continue
            acc += p
            last = x
            if u < acc:
                return x
        return last

    def walk(self, uniforms, max_len):
        """Draw one string.

        Returns:
            (labels, states, complete): states[i] is the state before
            labels[i]; complete is False when max_len was reached first.
        """

        state = self.start()
        labels = []
        states = []
        term = self.terminator
        for _ in range(max_len):
            x = self.draw(state, uniforms.next())
            states.append(state)
            labels.append(x)
            if x == term:
                return labels, states, True
            state = self.advance(state, x)
        return labels, states, False

    def sample(self, seed, max_len=10000):
        """Draw one terminator-ended label sequence.

        Args:
            seed: integer seed.
            max_len: maximum number of labels.
        Raises:
            SampleTruncatedError: no terminator within max_len labels.
        """

        if max_len <= 0:
            raise ValueError("max_len invalid value: %r" % max_len)
        labels, _, ok = self.walk(UniformStream(make_rng(seed)), max_len)
        if not ok:
            raise SampleTruncatedError("sample truncated at %i symbols" %
                                       max_len)
        return labels

    def samples(self, n, seed, max_len=10000):
        """Yield (labels, complete) for n strings from one stream."""

        uniforms = UniformStream(make_rng(seed))
        for _ in range(n):
            labels, _, ok = self.walk(uniforms, max_len)
            yield labels, ok

    def score(self, labels):
        """Natural-log probability of a terminator-ended label sequence.

        Returns -inf if any factor is zero.

        Raises:
            SymbolTableError: unknown label.
        """

        state = self.start()
        total = 0.0
        for i, x in enumerate(labels):
            if x not in self.symbols or x == self.symbols.phi_id:
                raise SymbolTableError("unknown symbol id %r" % (x,))
            if state is FINAL:
                return -math.inf
            p = self.next_distribution(state).get(x, 0.0)
            if p <= 0:
                return -math.inf
            total += math.log(p)
            state = self.advance(state, x)
        if state is not FINAL:
            raise SfstError("sequence does not end with the terminator")
        return total


class WfaBackedModel(SequenceModel):
    """SequenceModel over a stochastic phi-WFA; states are automaton states.

    next_distribution(q) gives the weights of E*[q].
    """

    def __init__(self, automaton):
        self.automaton = automaton
        self.symbols = automaton.symbols
        self._cdf = {}

    def start(self):
        return self.automaton.initial

    def next_distribution(self, state):
        self._check_state(state)
        return {e.label: e.weight
                for e in self.automaton.phi_extended(state)}

    def advance(self, state, label):
        self._check_state(state)
        e = self.automaton.resolve(state, label)
        if e is None:
            raise SfstError("label %r not readable at state %r" %
                            (label, state))
        if e.dst == self.automaton.final:
            return FINAL
        return e.dst

    def draw(self, state, u):
        try:
            labels, cdf = self._cdf[state]
        except KeyError:
            arcs = [e for e in self.automaton.phi_extended(state)
                    if e.weight > 0]
            labels = [e.label for e in arcs]
            cdf = np.cumsum([e.weight for e in arcs]).tolist()
            self._cdf[state] = (labels, cdf)
        i = bisect.bisect_right(cdf, u * cdf[-1])
        return labels[min(i, len(labels) - 1)]

    def __getstate__(self):
        d = dict(self.__dict__)
        d['_cdf'] = {}
        return d


class ToyCharModel(SequenceModel):
    """A fixed-parameter recurrent scorer over a symbol table.

    The hidden state is a hash of the entire history modulo a large prime,
    so the model is not a k-gram model for any k. Logits are
    bias + mixing @ features(h), where features are +-1 bits of the hash;
    a minimum terminator probability keeps expected length finite.
    """

    MODULUS = (1 << 61) - 1
    MULTIPLIER = 1000003

    def __init__(self, symbols, bias=None, mixing=None, num_features=8,
                 seed=None, scale=1.0, min_stop=0.05):
        """Initialise the model.

        Args:
            symbols: SymbolTable; every non-phi label is emitted.
            bias: per-label logits (len = number of labels), default zeros.
            mixing: (labels x num_features) matrix, default zeros, or drawn
                from N(0, scale^2) when seed is given.
            num_features: number of hash bits used as features.
            seed: seeds random parameters when bias/mixing are not given.
            scale: standard deviation of random parameters.
            min_stop: floor on the terminator probability.
        """

        self.symbols = symbols
        self.labels = symbols.labels()
        k = len(self.labels)
        rng = make_rng(seed) if seed is not None else None
        if bias is None:
            bias = (rng.normal(0.0, scale, k) if rng is not None
                    else np.zeros(k))
        if mixing is None:
            mixing = (rng.normal(0.0, scale, (k, num_features))
                      if rng is not None else np.zeros((k, num_features)))
        self.bias = np.asarray(bias, dtype=np.float64)
        self.mixing = np.asarray(mixing, dtype=np.float64)
        if self.bias.shape != (k,) or self.mixing.shape[0] != k:
            raise ValueError("parameter shapes do not match %i labels" % k)
        self.num_features = self.mixing.shape[1]
        self.min_stop = min_stop
        self._term_index = self.labels.index(symbols.terminator_id)
        self._cache = {}

    def start(self):
        return 0

    def _features(self, h):
        return np.array([1.0 if (h >> d) & 1 else -1.0
                         for d in range(self.num_features)])

    def next_distribution(self, state):
        self._check_state(state)
        try:
            return self._cache[state]
        except KeyError:
            pass
        p = softmax(self.bias + self.mixing @ self._features(state))
        t = self._term_index
        if p[t] < self.min_stop:
            rest = 1.0 - p[t]
            p = p * ((1.0 - self.min_stop) / rest)
            p[t] = self.min_stop
        dist = dict(zip(self.labels, p.tolist()))
        if len(self._cache) < 100000:
            self._cache[state] = dist
        return dist

    def advance(self, state, label):
        self._check_state(state)
        if label == self.symbols.terminator_id:
            return FINAL
        return (state * self.MULTIPLIER + label + 1) % self.MODULUS

    def __getstate__(self):
        d = dict(self.__dict__)
        d['_cache'] = {}
        return d
