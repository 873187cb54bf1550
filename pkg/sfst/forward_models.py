"""Allows suites of desk-scale experiments to be run in sequence and handles
their IO. For most use-cases, experiments should be run using the
Experiments class.

Classes defined here:
    Experiments

Functions defined here:
    run_an_experiment
    run_async
    run_linear
"""

import logging
import math
import multiprocessing as mp
import os
import pickle
import pandas as pd
import sfst.util as su
from sfst.counting import count_phi, count_sampled
from sfst.evaluate import kl_divergence, perplexity, topology_lower_bound
from sfst.klmin import approximate, identifiable_states
from sfst.models import WfaBackedModel
from sfst.ngram import (build_kgram_topology, katz_model, renormalize_backoff,
                        threshold_prune_topology)
from sfst.setter import SettingsMaker

logger = logging.getLogger(__name__)

HELD_OUT_EVERY = 5
MIN_COUNT = 0.01


def load_corpora(settings):
    """Training and test sentences and their shared symbol table.

    Without a test corpus every HELD_OUT_EVERY-th line of the training
    corpus is held out. An empty training corpus name selects the bundled
    toy corpus.

    Returns:
        (train, test, symbols, oov_count)
    """

    train_path = settings.train_corpus or su.toy_corpus_path()
    lines = su.corpus_lines(train_path)
    if settings.test_corpus:
        train_lines = lines
        test_lines = su.corpus_lines(settings.test_corpus)
    else:
        train_lines = [l for i, l in enumerate(lines)
                       if i % HELD_OUT_EVERY != HELD_OUT_EVERY - 1]
        test_lines = [l for i, l in enumerate(lines)
                      if i % HELD_OUT_EVERY == HELD_OUT_EVERY - 1]
    # closed vocabulary unless an unknown-word symbol is given
    vocab = train_lines if settings.unk else train_lines + test_lines
    symbols = su.corpus_symbols(vocab, settings.unk, settings.phi_label)
    train, _ = su.read_corpus(train_lines, symbols, settings.unk or None)
    test, oov = su.read_corpus(test_lines, symbols, settings.unk or None)
    return train, test, symbols, oov


def max_total_variation(a, b, states=None):
    """Largest total variation distance between the phi-extended
    distributions of two automata sharing one structure.

    Args:
        a, b: Automata with the same states.
        states: states to compare (default: all but the final state).
    """

    if states is None:
        states = [q for q in range(a.num_states) if q != a.final]
    worst = 0.0
    for q in states:
        pa = {e.label: e.weight for e in a.phi_extended(q)}
        pb = {e.label: e.weight for e in b.phi_extended(q)}
        tv = 0.5 * math.fsum(abs(pa.get(x, 0.0) - pb.get(x, 0.0))
                             for x in set(pa) | set(pb))
        worst = max(worst, tv)
    return worst


def _approx_kwargs(so):
    return dict(epsilon=so.epsilon, tol=so.tol, max_iters=so.max_iters,
                max_halvings=so.max_halvings, samples=so.samples,
                seed=so.seed, max_len=so.max_len, shard_size=so.shard_size,
                jobs=so.jobs, route=so.route)


def _idempotency(so, train, test, symbols, oov):
    source = katz_model(train, so.order, symbols, so.katz_cutoff)
    topology = source.reweight(lambda t: 1.0)
    approx = approximate(source, topology, **_approx_kwargs(so))
    states = identifiable_states(count_phi(source, topology, so.route))
    return {'num_states': source.num_states,
            'num_arcs': source.num_arcs,
            'identifiable_states': len(states),
            'max_tv': max_total_variation(source, approx, states),
            'ppl_source': perplexity(source, test, oov).perplexity,
            'ppl_approx': perplexity(approx, test, oov).perplexity}


def _pruning(so, train, test, symbols, oov):
    source = katz_model(train, so.order, symbols, so.katz_cutoff)
    counts = count_phi(source, source.reweight(lambda t: 1.0), so.route)
    pruned = threshold_prune_topology(source, counts, so.theta)
    greedy = renormalize_backoff(pruned)
    approx = approximate(source, pruned.reweight(lambda t: 1.0),
                         **_approx_kwargs(so))
    return {'arcs_full': source.num_arcs,
            'arcs_pruned': pruned.num_arcs,
            'kl_greedy': kl_divergence(source, greedy),
            'kl_approx': kl_divergence(source, approx),
            'ppl_greedy': perplexity(greedy, test, oov).perplexity,
            'ppl_approx': perplexity(approx, test, oov).perplexity}


def _lower_bound(so, train, test, symbols, oov):
    source = katz_model(train, so.order, symbols, so.katz_cutoff)
    topology = build_kgram_topology(test, so.order, symbols)
    kw = _approx_kwargs(so)
    kw['samples'] = 0
    approx = approximate(source, topology, **kw)
    bound = topology_lower_bound(test, topology, oov, epsilon=so.epsilon,
                                 tol=so.tol, max_iters=so.max_iters)
    return {'ppl_bound': bound.perplexity,
            'ppl_katz': perplexity(source, test, oov).perplexity,
            'ppl_approx': perplexity(approx, test, oov).perplexity}


def _sampling(so, train, test, symbols, oov):
    if so.samples <= 0:
        raise ValueError("samples invalid value: %r (the sampling "
                         "experiment needs samples > 0)" % so.samples)
    source = katz_model(train, so.order, symbols, so.katz_cutoff)
    topology = source.reweight(lambda t: 1.0)
    exact = count_phi(source, topology, so.route)
    est = count_sampled(WfaBackedModel(source), topology, so.samples,
                        so.seed, so.max_len, so.shard_size, so.jobs)
    errors = [abs(est.counts[k] - c) for k, c in exact.counts.items()]
    rel = [abs(est.counts[k] - c) / c for k, c in exact.counts.items()
           if c >= MIN_COUNT]
    return {'max_rel_error': max(rel) if rel else 0.0,
            'mean_abs_error': math.fsum(errors) / len(errors),
            'truncated': est.report.get('truncated', 0)}


EXPERIMENTS = {'idempotency': _idempotency,
               'pruning': _pruning,
               'lower_bound': _lower_bound,
               'sampling': _sampling}


def run_an_experiment(SO):
    """Run a single experiment.

    Args:
        SO (SettingsObject): A SettingsObject describing the experiment.
    Returns:
        (r, id) where r is the results dict and id is the 'id' parameter
        in settings.
    """

    i = SO.id
    train, test, symbols, oov = load_corpora(SO)
    r = EXPERIMENTS[SO.experiment](SO, train, test, symbols, oov)
    logger.info("Experiment %s complete.", i)
    return (r, i)


def run_async(SO_list, processes=None):
    """Run multiple experiments in parallel.

    Args:
        SO_list: A list of SettingsObjects, e.g. from a SettingsMaker.
        processes: worker count (default: one per CPU).
    Returns:
        A list of (r, id) tuples sorted by id.
    """

    with mp.Pool(processes) as pool:
        results = [pool.apply_async(run_an_experiment, (e,))
                   for e in SO_list]
        r = [res.get() for res in results]
    return sorted(r, key=lambda tup: tup[1])


def run_linear(SO_list):
    """Runs multiple experiments in sequence.

    Args:
        SO_list: A list of SettingsObjects, e.g. from a SettingsMaker.
    Returns:
        A list of (r, id) tuples.
    """

    return [run_an_experiment(e) for e in SO_list]


class Experiments(object):
    """Runs sfst experiments.

    Handles generation and checking of settings suites, and saving of
    bundled output. This class is the preferred interface to the
    experiment functions above.
    """

    def __init__(self, settings=None, output_dir=None):
        """Initialise the object and process settings.

        Args:
            settings (dict): Experiment settings; list values are expanded
                into one experiment per combination. See data/defaults.py
                for options.
            output_dir: (Optional) directory for saving files. By default
                files are saved to the current directory.
        """

        self.done_input = []
        self.done_results = []
        self.results = []
        self.input = SettingsMaker(**(settings or {})).settings()
        if output_dir:
            os.makedirs(output_dir, exist_ok=True)
            self.output_dir = output_dir
        else:
            self.output_dir = os.getcwd()

    def _check_previous_saves(self, use_by_default=True):
        """Re-use saved results for settings that were already run."""

        try:
            with open(os.path.join(self.output_dir, 'settings.pkl'),
                      'rb') as f:
                prev_input = pickle.load(f)
            with open(os.path.join(self.output_dir, 'results.pkl'),
                      'rb') as f:
                prev_results = pickle.load(f)
        except FileNotFoundError:
            return
        if not use_by_default or not prev_input or not prev_results:
            return

        new_input = []
        for s in self.input:
            match = [i for i, p in enumerate(prev_input) if s.equals(p)]
            if match:
                self.done_input.append(prev_input[match[0]])
                self.done_results.append(prev_results[match[0]])
            else:
                new_input.append(s)
        logger.info("%i out of %i experiments are repeats; re-using old "
                    "output", len(self.done_input), len(self.input))
        self.input = new_input

    def run_experiments(self, mode='Serial', **kwargs):
        """Run experiments for all settings loaded into the object. Output
        is stored in self.results as a list of (r, id) tuples."""

        self._check_previous_saves(**kwargs)
        logger.info("Experiments to run:\t%s", len(self.input))
        if mode.capitalize() == 'Serial':
            results = run_linear(self.input)
        elif mode.capitalize() == 'Parallel':
            results = run_async(self.input)
        else:
            raise ValueError("Mode not recognised. Use serial / parallel")
        self.results = results + self.done_results
        self.input = self.input + self.done_input

    def save(self):
        """Save settings and results as .pkl files and one settings_results
        .csv table."""

        os.makedirs(self.output_dir, exist_ok=True)
        su.save_pkl(self.input, os.path.join(self.output_dir,
                                             'settings.pkl'))
        su.save_pkl(self.results, os.path.join(self.output_dir,
                                               'results.pkl'))
        rows = []
        for (r, i), setting in zip(self.results, self.input):
            row = setting.dict()
            row['id'] = i
            row.update(r)
            rows.append(row)
        path = os.path.join(self.output_dir, 'settings_results.csv')
        pd.DataFrame(rows).to_csv(path, index=False)
        logger.info("Results and settings have been saved in: %s",
                    os.path.abspath(self.output_dir))
        return path
