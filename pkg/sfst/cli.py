"""The `sfst` command-line interface.

One executable with a subcommand per operation. Results are written to
stdout, diagnostics to stderr. Exit codes: 0 on success, 1 on usage errors
(bad flags or flag values, found before any file is read), 2 on data errors
(malformed input, coverage failures, ...), reported with the file name.

    sfst approx SOURCE TOPOLOGY
    sfst count SOURCE TOPOLOGY
    sfst normalize COUNTS
    sfst intersect A B
    sfst perplexity MODEL CORPUS
    sfst randgen MODEL
    sfst shortestdistance A
    sfst trim A
    sfst ngram-count CORPUS
    sfst ngram-make COUNTS
    sfst ngram-prune MODEL

Any file argument may be '-' for stdin.
"""

import argparse
import contextlib
import logging
import sys
import inflection
import sfst.data.defaults as sd
import sfst.util as su
from sfst.automata import (TERMINATOR, Automaton, serialize_automaton,
                           trim as trim_automaton)
from sfst.counting import count_phi
from sfst.distance import (POSITIVE_REAL, QueueDiscipline, WeightedGraph,
                           shortest_distance)
from sfst.errors import SfstError, UsageError
from sfst.evaluate import perplexity as corpus_perplexity
from sfst.evaluate import topology_lower_bound
from sfst.intersect import intersect_phi, intersect_wfa
from sfst.klmin import count_source, normalize_counts
from sfst.models import WfaBackedModel
from sfst.ngram import (BOS_SYMBOL, NgramCounts, count_ngrams, katz_model,
                        renormalize_backoff, threshold_prune_topology)
from sfst.setter import NameSwitcher, command_config

logger = logging.getLogger(__name__)

LOG_FORMAT = "sfst: %(levelname)s: %(message)s"

COMMON = ('phi_label', 'symbols')
COUNTING = ('samples', 'seed', 'max_len', 'shard_size', 'jobs', 'route',
            'count_tol', 'flow_tol')
QUEUE = ('queue', 'delta', 'max_sweeps')
SOLVER = ('method', 'epsilon', 'tol', 'max_iters', 'max_halvings')

# subcommand (underscored) -> (positional arguments, settings accepted)
COMMANDS = {
    'approx': (('source', 'topology'), SOLVER + COUNTING + QUEUE),
    'count': (('source', 'topology'), COUNTING + QUEUE),
    'normalize': (('counts',), SOLVER),
    'intersect': (('a', 'b'), ('phi',)),
    'perplexity': (('model', 'corpus'), SOLVER + QUEUE + ('unk', 'bits')),
    'randgen': (('model',), ('n', 'seed', 'max_len')),
    'shortestdistance': (('a',), QUEUE),
    'trim': (('a',), ()),
    'ngram_count': (('corpus',), ('order', 'unk')),
    'ngram_make': (('counts',), ('order', 'katz_cutoff', 'method')),
    'ngram_prune': (('model',), ('theta', 'route') + QUEUE),
}

METHODS = {'approx': ('kl_min', 'local'),
           'normalize': ('kl_min', 'local'),
           'perplexity': ('model', 'bound'),
           'ngram_make': ('katz',)}
DEFAULT_METHOD = {'perplexity': 'model', 'ngram_make': 'katz'}
# None: taken from the command's input
COMMAND_DEFAULTS = {'ngram_make': {'order': None}}
OUT_OF_SCOPE = ('global', 'phi')


class ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser raising UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(message)


class InputError(Exception):
    """A data error while processing one named input."""

    def __init__(self, path, error):
        self.path = path
        self.error = error
        name = '<stdin>' if path == su.STDIO else path
        super().__init__("%s: %s" % (name, error))


@contextlib.contextmanager
def reading(path):
    """Attach the file name to data errors raised inside the block."""

    try:
        yield
    except (SfstError, OSError) as e:
        raise InputError(path, e)


def _flag_type(name):
    default = getattr(sd, name)
    if isinstance(default, bool):
        return None
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    return str


def build_parser():
    """The argparse parser of every subcommand."""

    ns = NameSwitcher()
    parser = ArgumentParser(prog='sfst', allow_abbrev=False, description=(
        "Approximate stochastic sequence models by phi-WFAs."))
    sub = parser.add_subparsers(dest='subcommand', metavar='SUBCOMMAND')
    sub.required = True
    for name, (positional, settings) in COMMANDS.items():
        p = sub.add_parser(inflection.dasherize(name), allow_abbrev=False)
        for arg in positional:
            p.add_argument(arg)
        for s in COMMON + settings:
            t = _flag_type(s)
            if t is None:
                p.add_argument(ns(s), dest=s, action='store_true',
                               default=None)
            else:
                p.add_argument(ns(s), dest=s, type=t, default=None)
    return parser


def configure(args):
    """Validate the parsed flags into a SettingsObject.

    Raises:
        UsageError, TypeError, ValueError: invalid flags.
    """

    name = inflection.underscore(args.subcommand)
    _, settings = COMMANDS[name]
    flags = {s: getattr(args, s) for s in COMMON + settings}
    if 'method' in flags:
        method = flags['method']
        if method in OUT_OF_SCOPE:
            raise UsageError("--method=%s is out of scope" % method)
        if method is None:
            flags['method'] = DEFAULT_METHOD.get(name)
        elif method not in METHODS[name]:
            raise UsageError("--method invalid value: %r (choose from %s)" %
                             (method, ', '.join(METHODS[name])))
    return command_config(name, COMMAND_DEFAULTS.get(name), **flags)


def _queue(so):
    return QueueDiscipline(so.queue, so.delta, so.max_sweeps)


def _symbols(so):
    if not so.symbols:
        return None
    with reading(so.symbols):
        return su.read_symbols(so.symbols, so.phi_label)


def _automaton(path, so, symbols):
    with reading(path):
        return su.read_automaton(path, symbols, so.phi_label)


def _with_symbols(a, symbols):
    return Automaton(a.num_states, a.transitions, a.initial, a.final,
                     symbols, validate=False)


def _shared(a, b, path):
    """Put two automata read without a symbol table on one table."""

    if a.symbols == b.symbols:
        return a, b
    with reading(path):
        symbols = a.symbols.merge(b.symbols)
    return _with_symbols(a, symbols), _with_symbols(b, symbols)


def _pair(args, so, first, second):
    symbols = _symbols(so)
    a = _automaton(getattr(args, first), so, symbols)
    b = _automaton(getattr(args, second), so, symbols)
    if symbols is None:
        a, b = _shared(a, b, getattr(args, second))
    return a, b


def _counts(so, args):
    source, topology = _pair(args, so, 'source', 'topology')
    with reading(args.topology):
        counts = count_source(source, topology, samples=so.samples,
                              seed=so.seed, max_len=so.max_len,
                              shard_size=so.shard_size, jobs=so.jobs,
                              route=so.route, queue=_queue(so),
                              flow_tol=so.flow_tol, count_tol=so.count_tol)
    return counts.to_automaton().canonicalize()


def _normalized(so, counts, path):
    with reading(path):
        return normalize_counts(counts, so.method, so.epsilon, so.tol,
                                so.max_iters, so.max_halvings)


def approx(so, args):
    return serialize_automaton(_normalized(so, _counts(so, args),
                                           args.topology))


def count(so, args):
    return serialize_automaton(_counts(so, args))


def normalize(so, args):
    counts = _automaton(args.counts, so, _symbols(so))
    return serialize_automaton(_normalized(so, counts, args.counts))


def intersect(so, args):
    a, b = _pair(args, so, 'a', 'b')
    with reading(args.b):
        if so.phi:
            p = intersect_phi(a, b)
        elif a.has_phi() or b.has_phi():
            raise UsageError("inputs have failure transitions; use --phi")
        else:
            p = intersect_wfa(a, b)
    return serialize_automaton(p)


def perplexity(so, args):
    symbols = _symbols(so)
    model = _automaton(args.model, so, symbols)
    with reading(args.corpus):
        sentences, oov = su.read_corpus(args.corpus, model.symbols,
                                        so.unk or None)
    with reading(args.model):
        if so.method == 'bound':
            report = topology_lower_bound(
                sentences, model, oov, epsilon=so.epsilon, tol=so.tol,
                max_iters=so.max_iters, max_halvings=so.max_halvings,
                queue=_queue(so))
        else:
            report = corpus_perplexity(model, sentences, oov)
    return '\n'.join(report.lines(so.bits)) + '\n'


def randgen(so, args):
    a = _automaton(args.model, so, _symbols(so))
    model = WfaBackedModel(a)
    out = []
    with reading(args.model):
        for labels, ok in model.samples(so.n, so.seed, so.max_len):
            if not ok:
                logger.warning("sample truncated at %i symbols; skipped",
                               so.max_len)
                continue
            out.append(tuple(labels))
    return su.write_corpus(out, a.symbols)


def shortestdistance(so, args):
    a = _automaton(args.a, so, _symbols(so))
    with reading(args.a):
        d = shortest_distance(WeightedGraph.from_automaton(a), _queue(so),
                              POSITIVE_REAL)
    return ''.join('%i\t%.17g\n' % (q, v) for q, v in enumerate(d))


def trim(so, args):
    a = _automaton(args.a, so, _symbols(so))
    with reading(args.a):
        return serialize_automaton(trim_automaton(a))


def ngram_count(so, args):
    symbols = _symbols(so)
    with reading(args.corpus):
        lines = su.corpus_lines(args.corpus)
        if symbols is None:
            symbols = su.corpus_symbols(
                sorted({w for l in lines for w in l.split()}), so.unk,
                so.phi_label)
        sentences, _ = su.read_corpus(lines, symbols, so.unk or None)
        counts = count_ngrams(sentences, so.order, symbols)
    return counts.write()


def ngram_make(so, args):
    symbols = _symbols(so)
    with reading(args.counts):
        text = su.read_text(args.counts)
        if symbols is None:
            words = {w for l in text.splitlines()
                     for w in l.rsplit('\t', 1)[0].split()}
            words -= {BOS_SYMBOL, TERMINATOR}
            symbols = su.corpus_symbols(sorted(words), '', so.phi_label)
        counts = NgramCounts.read(text, symbols)
        order = counts.order if so.order is None else so.order
        model = katz_model(counts, order, symbols, so.katz_cutoff)
    return serialize_automaton(model)


def ngram_prune(so, args):
    model = _automaton(args.model, so, _symbols(so))
    with reading(args.model):
        counts = count_phi(model, model.reweight(lambda t: 1.0), so.route,
                           _queue(so))
        pruned = threshold_prune_topology(model, counts, so.theta)
        return serialize_automaton(renormalize_backoff(pruned))


def _install_logging():
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    log = logging.getLogger('sfst')
    log.addHandler(handler)
    log.setLevel(logging.WARNING)
    return handler


def _fail(message, code):
    sys.stderr.write("sfst: error: %s\n" % message)
    return code


def run(argv=None):
    """Parse argv, run one subcommand and write its result to stdout.

    Returns:
        The exit code.
    """

    try:
        args = build_parser().parse_args(argv)
        so = configure(args)
    except (UsageError, TypeError, ValueError, AttributeError) as e:
        return _fail(e, 1)

    handler = globals()[so.subcommand]
    try:
        text = handler(so, args)
    except UsageError as e:
        return _fail(e, 1)
    except (InputError, SfstError, OSError) as e:
        return _fail(e, 2)
    except ValueError as e:
        return _fail(e, 1)
    su.write_text(text)
    return 0


def main(argv=None):
    """Entry point of the `sfst` executable."""

    handler = _install_logging()
    try:
        return run(argv)
    finally:
        logging.getLogger('sfst').removeHandler(handler)


if __name__ == '__main__':
    sys.exit(main())
