"""Contains the Evaluate object, which has methods to load data from sfst
experiment .pkl output files, tabulate it and plot it.

Classes defined here:
    Evaluate
"""

import copy
import logging
import os
import pickle
import matplotlib
matplotlib.use('Agg')
from matplotlib import pyplot as plt
import pandas as pd
import seaborn as sns
import sfst.util as su

logger = logging.getLogger(__name__)


class Evaluate(object):
    """Processes sfst experiment output.

    Evaluate contains methods to load, filter, tabulate and display the
    output of Experiments.save().

    Methods:
        load_data           - Load .pkl files from directories
        results_table       - One DataFrame row per experiment
        get_settings_report - Unique values of every setting
        filter_by_settings  - Filter experiments by any input setting
        save_csvs           - Save each experiment's results to .csv
        plot_results        - Plot one result against a setting or result
    """

    def __init__(self):
        """Initialise an Evaluate object.

        After initialisation, load_data must be called to read data from .pkl
        files.
        """

        self._results = []
        self._settings = []

    @property
    def model_settings(self):
        """A list of settings dicts, one per loaded experiment."""

        if not self._settings:
            raise ValueError("Object %r has no experiments loaded." % self)
        return [s.dict() for s in self._settings]

    @property
    def model_results(self):
        """A list of results dicts, one per loaded experiment."""

        if not self._results:
            raise ValueError("Object %r has no experiments loaded." % self)
        return copy.deepcopy(self._results)

    def get_settings_report(self):
        """Get a summary of the range of experiment settings.

        Returns:
            A dict of settings, with one entry for each unique value
            detected.
        """

        o = {}
        for s in self.model_settings:
            for k, v in s.items():
                vals = o.setdefault(k, [])
                if v not in vals:
                    vals.append(v)
        return o

    def load_data(self, *args):
        """Load .pkl data into the Evaluate object.

        Each directory must contain settings.pkl and results.pkl. load_data
        may be called multiple times to merge suites for comparison.

        Args:
            *args: The directories to load data from (default: the current
                directory).
        """

        if len(args) == 0:
            args = (os.getcwd(),)

        for d in args:
            logger.info("Loading data from %s", d)
            with open(os.path.join(d, 'settings.pkl'), 'rb') as f:
                settings = pickle.load(f)
            with open(os.path.join(d, 'results.pkl'), 'rb') as f:
                results = pickle.load(f)
            if len(settings) != len(results):
                raise ValueError("%s: %i settings but %i results" %
                                 (d, len(settings), len(results)))
            self._settings.extend(settings)
            self._results.extend(r for (r, _) in results)

    def results_table(self):
        """Settings and results of every loaded experiment.

        Returns:
            A pandas DataFrame with one row per experiment.
        """

        rows = []
        for s, r in zip(self.model_settings, self.model_results):
            row = dict(s)
            row.update(r)
            rows.append(row)
        return pd.DataFrame(rows)

    def filter_by_settings(self, setting, value, n=False):
        """Return a filtered copy of the Evaluate object.

        Args:
            setting (str): setting to filter by (e.g. 'order').
            value: value of 'setting' to include (substring match for
                strings).
            n: Optional boolean argument. If True, the filter is inverted.
                Default False.
        Returns:
            A filtered copy of the Evaluate object.
        """

        if isinstance(value, str):
            match = lambda v: value in v
        else:
            match = lambda v: v == value

        A = Evaluate()
        for s, r in zip(self._settings, self._results):
            if match(s.dict()[setting]) != n:
                A._settings.append(s)
                A._results.append(r)
        return copy.deepcopy(A)

    def save_csvs(self, directory=None):
        """Save experiment results to .csv files, one per experiment.

        Args:
            directory (str): The directory to save output to.
        """

        if not directory:
            directory = os.getcwd()
        for i, r in enumerate(self._results):
            su.save_csv(r, os.path.join(directory, "out_%i.csv" % i))

    def plot_results(self, *args, x_key=None, y_key=None, label_with=None,
                     ax=None, **kwargs):
        """Plot one result against a setting or result, one point per
        experiment.

        Args:
            *args: Optional formatting parameters passed to pyplot.plot()
            x_key: setting or result on the x-axis
            y_key: result on the y-axis
            label_with (optional): setting used to group points into series
            ax (optional): Add data to a pre-existing matplotlib axis
            **kwargs (optional): kwargs to be passed to pyplot.plot()
        Returns:
            Axes object.
        """

        sns.set_style('darkgrid')
        df = self.results_table().sort_values(x_key)
        if not ax:
            fig, ax = plt.subplots()
            ax.set_ylabel(y_key)
            ax.set_xlabel(x_key)
        if label_with:
            for key, group in df.groupby(label_with):
                ax.plot(group[x_key], group[y_key], *args,
                        label="%s: %s" % (label_with, key), **kwargs)
            ax.legend(prop={'size': 6})
        else:
            ax.plot(df[x_key], df[y_key], *args, **kwargs)
        return ax
