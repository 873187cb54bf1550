#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Runs a suite of sfst experiments from a .py script and saves a .csv
summary of every experiment.

The settings of the experiments can be found via s = {}. Most inputs are in
their default values; see sfst/data/defaults.py for the full list.

Multiple values in a list for one variable will cause several experiments
to be run.
"""

import logging
import sys
from sfst.forward_models import Experiments
import sfst.analyse as sa

logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                    format="%(name)s: %(message)s")

'STEP 1: Define the settings'
s = {# Corpora ('' = the bundled toy corpus, every 5th line held out)
     'train_corpus':  '',
     'test_corpus':   '',
     'unk':           '',

     # Experiment kind: idempotency, pruning, lower_bound or sampling
     'experiment':    ['idempotency', 'pruning', 'lower_bound'],
     'order':         [2, 3],         # n-gram order of the Katz source
     'theta':         0.5,            # count threshold for the pruning runs
     'katz_cutoff':   5,

     # KL minimization
     'epsilon':       1e-6,
     'tol':           1e-10,
     'max_iters':     1000,

     # Counting (samples = 0 counts exactly)
     'samples':       0,
     'seed':          0,

     # Output directory
     'out_dir':       './run_experiments_output/',
     }

'STEP 2: Run the experiments and save their output'
suite = Experiments(settings=s, output_dir=s['out_dir'])
suite.run_experiments()
suite.save()

'STEP 3: Tabulate and plot'
e = sa.Evaluate()
e.load_data(s['out_dir'])
e.save_csvs(s['out_dir'])
table = e.filter_by_settings('experiment', 'pruning').results_table()
print(table[['order', 'kl_greedy', 'kl_approx', 'ppl_greedy',
             'ppl_approx']].to_string(index=False))
