from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest

from conebvp.errors import ParameterError
from conebvp.params import ProblemSpec, Region, classify, compute_denominator, cone_gamma, require_region

from conftest import POWER_PARAMS, LOG_PARAMS, SINGULAR_PARAMS


def direct_determinant(T, eta, alpha, beta):
    # determinant as it arises when the boundary conditions are solved directly
    return (alpha * eta**2 - 2 * T) - beta * (2 * eta - alpha * eta**2 - 2 * T)


@pytest.mark.parametrize(
    "params, expected",
    [
        (dict(T=2, eta=1.5, alpha=1, beta=0.5), 1 / 8),
        (dict(T=1, eta=0.5, alpha=1, beta=0), 7 / 4),
        (dict(T=1, eta=0.5, alpha=1, beta=1.4), 0.0),
    ],
)
def test_denominator_examples(params, expected):
    assert compute_denominator(ProblemSpec(**params)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "params, alpha_bound, beta_bound",
    [(POWER_PARAMS, 16 / 9, 7 / 13), (LOG_PARAMS, 24.0, 1 / 9), (SINGULAR_PARAMS, 18.0, 8 / 7)],
)
def test_fixture_parameters_are_admissible(params, alpha_bound, beta_bound):
    cls = classify(ProblemSpec(**params))
    assert cls.region is Region.ADMISSIBLE
    assert cls.alpha_bound == pytest.approx(alpha_bound, rel=1e-12)
    assert cls.beta_bound == pytest.approx(beta_bound, rel=1e-12)
    assert cls.D > 0
    assert 0 < cls.gamma < 1


def test_large_alpha_is_nonexistence_region():
    cls = classify(ProblemSpec(T=1, eta=0.5, alpha=9, beta=0))
    assert cls.region is Region.NO_POSITIVE_SOLUTION
    assert cls.alpha_bound == 8.0
    assert cls.gamma is None


def test_degenerate_and_outside():
    assert classify(ProblemSpec(T=1, eta=0.5, alpha=1, beta=1.4)).region is Region.DENOMINATOR_DEGENERATE
    assert classify(ProblemSpec(T=1, eta=0.5, alpha=1, beta=2.0)).region is Region.OUTSIDE_THEORY
    # alpha exactly on the bound belongs to neither theory region
    assert classify(ProblemSpec(T=1, eta=0.5, alpha=8, beta=0.3)).region is Region.OUTSIDE_THEORY


@pytest.mark.parametrize(
    "params, gamma, terms",
    [
        (POWER_PARAMS, 3 / 4, (3 / 4, 27 / 32, 9 / 5)),
        (SINGULAR_PARAMS, 2 / 9, (1 / 3, 2 / 9, 4 / 7)),
        (dict(T=2, eta=1, alpha=1, beta=0.5), 3 / 8, (1 / 2, 3 / 8, 3 / 5)),
    ],
)
def test_cone_gamma(params, gamma, terms):
    spec = ProblemSpec(**params)
    assert cone_gamma(spec) == pytest.approx(gamma, rel=1e-14)
    np.testing.assert_allclose(classify(spec).gamma_terms, terms, rtol=1e-14)


def test_cone_gamma_rejects_other_regions():
    with pytest.raises(ParameterError, match="Admissible"):
        cone_gamma(ProblemSpec(T=1, eta=0.5, alpha=9, beta=0))


def test_degenerate_message_names_excluded_beta():
    with pytest.raises(ParameterError, match="excluded value"):
        require_region(ProblemSpec(T=1, eta=0.5, alpha=1, beta=1.4), (Region.ADMISSIBLE,), "solve")


@pytest.mark.parametrize(
    "params",
    [
        dict(T=1, eta=1, alpha=1, beta=0),
        dict(T=1, eta=0, alpha=1, beta=0),
        dict(T=1, eta=0.5, alpha=0, beta=0),
        dict(T=1, eta=0.5, alpha=1, beta=-0.1),
        dict(T=1, eta=0.5, alpha=float("nan"), beta=0),
        dict(T=float("inf"), eta=0.5, alpha=1, beta=0),
    ],
)
def test_invalid_specs_rejected(params):
    with pytest.raises(ParameterError):
        ProblemSpec(**params)


def test_string_expressions_are_parsed():
    spec = ProblemSpec(**POWER_PARAMS, a_expr="t", f_expr="u^2")
    assert spec.a_expr is not None and not isinstance(spec.a_expr, str)


def test_sign_convention_million_random_specs():
    rng = np.random.default_rng(7)
    n = 1_000_000
    T = rng.uniform(0.1, 10.0, n)
    eta = rng.uniform(0.01, 0.99, n) * T
    alpha = rng.uniform(0.0, 5.0, n) * 2 * T / eta**2
    beta = rng.uniform(0.0, 5.0, n)
    D = compute_denominator(SimpleNamespace(T=T, eta=eta, alpha=alpha, beta=beta))
    ref = -direct_determinant(T, eta, alpha, beta)
    scale = 1 + np.abs(2 * T) + np.abs(alpha * eta**2) + beta * (np.abs(alpha * eta**2) + 2 * eta + 2 * T)
    assert np.max(np.abs(D - ref) / scale) < 1e-14


def test_sign_convention_exact_rationals():
    rng = np.random.default_rng(8)
    for _ in range(500):
        T, eta, alpha, beta = (Fraction(int(rng.integers(1, 1000)), int(rng.integers(1, 1000))) for _ in range(4))
        ns = SimpleNamespace(T=T, eta=eta, alpha=alpha, beta=beta)
        assert compute_denominator(ns) == -direct_determinant(T, eta, alpha, beta)


def test_admissible_implies_positive_denominator_and_gamma_in_unit_interval():
    rng = np.random.default_rng(9)
    for _ in range(2000):
        T = rng.uniform(0.1, 5.0)
        eta = rng.uniform(0.01, 0.99) * T
        alpha = rng.uniform(0.001, 0.999) * 2 * T / eta**2
        bb = ProblemSpec(T, eta, alpha, 0.0).beta_bound
        cls = classify(ProblemSpec(T, eta, alpha, rng.uniform(0.0, 0.999) * bb))
        assert cls.region is Region.ADMISSIBLE
        assert cls.D > 0 and 0 < cls.gamma < 1


def test_classification_changes_once_in_beta():
    rng = np.random.default_rng(10)
    for _ in range(50):
        T = rng.uniform(0.5, 3.0)
        eta = rng.uniform(0.1, 0.9) * T
        alpha = rng.uniform(0.05, 0.95) * 2 * T / eta**2
        bb = ProblemSpec(T, eta, alpha, 0.0).beta_bound
        betas = np.linspace(0.0, 3 * bb, 301)
        admissible = [classify(ProblemSpec(T, eta, alpha, b)).region is Region.ADMISSIBLE for b in betas]
        flips = np.count_nonzero(np.diff(np.array(admissible, dtype=int)))
        assert flips == 1
        assert all(a == (b < bb) for a, b in zip(admissible, betas) if abs(b - bb) > 1e-9 * bb)
        assert classify(ProblemSpec(T, eta, alpha, bb)).region in (
            Region.DENOMINATOR_DEGENERATE,
            Region.OUTSIDE_THEORY,
        )
