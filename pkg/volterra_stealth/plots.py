# -*- coding: utf-8 -*-
"""SVG plots of loop signals. Needs the optional ``matplotlib`` extra."""

import logging
import os

try:
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib import pyplot
except ImportError:
    pyplot = None

logger = logging.getLogger(__name__)


def plot_signals(signals, out_dir):
    """
    Write one ``<name>.svg`` per signal and return the paths written.
    Logs an error and writes nothing when matplotlib is missing.
    """
    if pyplot is None:
        logger.error("matplotlib is not installed, skipping plots")
        return []
    paths = []
    for name, signal in signals.items():
        figure, axes = pyplot.subplots(figsize=(6, 3.5))
        axes.plot(signal.times, signal.values, linewidth=1.0)
        axes.set_xlabel("t")
        axes.set_ylabel(name)
        axes.grid(True, linewidth=0.3)
        path = os.path.join(out_dir, "{}.svg".format(name))
        figure.tight_layout()
        figure.savefig(path, format="svg")
        pyplot.close(figure)
        paths.append(path)
    logger.info("wrote %s plots to %s", len(paths), out_dir)
    return paths
