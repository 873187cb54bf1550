"""The sfst module approximates stochastic sequence models by weighted
automata with failure transitions, minimizing the KL divergence from the
source over a fixed backoff topology.

Package structure:
    /__init__.py
    /errors.py          - Exception hierarchy
    /automata.py        - Symbol tables, (phi-)WFAs, text format, trim
    /distance.py        - Shortest distance over the (positive) reals
    /intersect.py       - Products of source and target machines
    /counting.py        - Exact and sampled expected counts
    /klmin.py           - KL-minimizing normalization (DC iteration)
    /models.py          - Sequence models used as sources
    /evaluate.py        - Perplexity, KL divergence, topology lower bound
    /ngram.py           - N-gram counts, k-gram topologies, Katz, pruning
    /cli.py             - The `sfst` command-line interface
    /forward_models.py  - High-level scripting of sfst experiments.
    /setter.py          - Utility code to generate and validate settings.
    /util.py            - Utility code largely relating to file IO.
    /analyse.py         - Analysis and processing of experiment output.
    /data/
        /__init__.py
        /defaults.py           - default settings
        /types_and_limits.py   - allowable setting values for setter.py
        /mapping.py            - setting name <-> command-line flag names
        /toy_corpus.txt        - small corpus for the tutorial and tests
"""

import sfst.errors
import sfst.automata
import sfst.distance
import sfst.intersect
import sfst.counting
import sfst.klmin
import sfst.models
import sfst.evaluate
import sfst.ngram
import sfst.setter
import sfst.util
import sfst.forward_models
