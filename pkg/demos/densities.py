"""Example user densities for config files (``logpdf = densities:...`` in a config next to this file)."""
import numpy as np


def sech_squared(x):
    # logistic density up to a constant: sech(x/2)^2
    x = np.asarray(x, dtype=float)
    return -2.0 * np.logaddexp(x / 2, -x / 2)
