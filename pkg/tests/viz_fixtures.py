"""Inputs for the golden rendering files (see tests/golden/regenerate.py)."""

import numpy as np

from codym.core import CodymModel, delta_model
from codym.nulls import build_ensemble, sample_transition_counts, significance_report

ORDER3_COUNTS = [40, 12, 9, 30, 6, 22, 35, 18, 11, 7, 25, 48, 16, 29, 20, 55]


def order1_model():
    return CodymModel.from_counts([0, 60, 40, 0], 1)


def order3_model():
    return CodymModel.from_counts(ORDER3_COUNTS, 3, stratum="patient")


def order3_report(workers=1):
    base = CodymModel.from_counts(np.array(ORDER3_COUNTS)[::-1] + 10, 3)
    ens = build_ensemble(lambda rng: sample_transition_counts(base, 383, rng), replicates=200,
                         seed=2024, workers=workers)
    return ens, significance_report(order3_model(), ens)


def order3_delta(workers=1):
    ens, rep = order3_report(workers)
    return delta_model(order3_model(), ens.mean), rep
