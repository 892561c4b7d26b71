import numpy as np
import pytest

from ckspline import SampleSet, SplineModel
from ckspline.model import rebase


def benchmark_curve(x):
    """Two-harmonic wave over [0, 16]; periodic, so all derivatives wrap."""
    return np.sin(2 * np.pi * x / 16) + 0.5 * np.sin(4 * np.pi * x / 16)


@pytest.fixture(scope="session")
def benchmark_samples():
    x = np.linspace(0.0, 16.0, 128)
    return SampleSet(x, benchmark_curve(x))


def model_from_global(breakpoints, degree, global_coeffs, domain_map=None):
    """Model whose segment polynomials are given in the unshifted basis.

    global_coeffs is one coefficient list per segment (lowest power first,
    about x=0 in internal coordinates); each is padded and rebased to the
    segment center.
    """
    breakpoints = np.asarray(breakpoints, dtype=float)
    rows = []
    centers = 0.5 * (breakpoints[:-1] + breakpoints[1:])
    for center, coeffs in zip(centers, global_coeffs):
        padded = np.zeros(degree + 1)
        padded[: len(coeffs)] = coeffs
        rows.append(rebase(padded, 0.0, center))
    kwargs = {} if domain_map is None else {"domain_map": domain_map}
    return SplineModel.from_breakpoints(breakpoints, degree, np.array(rows), **kwargs)
