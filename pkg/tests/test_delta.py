import numpy as np
import pytest

from netid.delta import (DeltaDistribution, DeltaMethod, convolution_cdf, default_delta, delta_epsilon_cdf,
                         logistic_pdf, monte_carlo_cdf)

# independent values from numerical inversion of the characteristic function (pi x / sinh(pi x))^4
CHARFN = {2.0: 0.7154112918693489, -2.0: 0.284588708130651, 5.0: 0.9185575562030083}


def test_logistic_pdf_integrates_to_one():
    x = np.linspace(-40, 40, 80001)
    assert np.trapezoid(logistic_pdf(x), x) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("c, expected", sorted(CHARFN.items()))
def test_convolution_matches_characteristic_function(c, expected):
    assert float(convolution_cdf(c)) == pytest.approx(expected, abs=1e-10)
    assert float(default_delta().cdf(c)) == pytest.approx(expected, abs=1e-10)


def test_center_symmetry_and_tails():
    c = np.linspace(-20, 20, 401)
    F = default_delta().cdf(c)
    assert float(default_delta().cdf(0.0)) == pytest.approx(0.5, abs=1e-12)
    assert np.max(np.abs(F + default_delta().cdf(-c) - 1)) < 1e-10
    assert np.all(np.diff(F) >= 0)
    assert default_delta().cdf(-1e6) == 0.0 and default_delta().cdf(1e6) == 1.0


def test_monte_carlo_is_seeded_regression():
    # frozen from a single run: 10^7 draws, seed 1
    assert float(monte_carlo_cdf(2.0, 10_000_000, 1)) == pytest.approx(0.7154421, abs=1e-12)
    assert float(monte_carlo_cdf(2.0, 100_000, 7)) == float(monte_carlo_cdf(2.0, 100_000, 7))


def test_delta_epsilon_cdf_methods():
    assert delta_epsilon_cdf(1.0) == pytest.approx(float(convolution_cdf(1.0)))
    mc = delta_epsilon_cdf(1.0, DeltaMethod.MONTE_CARLO, mc_draws=200_000)
    assert mc == pytest.approx(float(convolution_cdf(1.0)), abs=5e-3)
    both = delta_epsilon_cdf(np.array([0.0, 3.0]), cross_check=True, mc_draws=1_000_000)
    assert both.shape == (2,)


def test_table_validation():
    with pytest.raises(ValueError):
        DeltaDistribution(np.array([0.0, 1.0]), np.array([0.6, 0.4]), DeltaMethod.MONTE_CARLO)
