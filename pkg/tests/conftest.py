import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from circreg.distributions import AngularErrorSpec, PredictorSpec, make_rng
from circreg.estimation import Dataset
from circreg.experiments import simulate_dataset
from circreg.mobius import ModelParams

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def truth():
    return ModelParams(0.0, 1.5, 0.5)


@pytest.fixture
def vm_data(truth):
    """n=100 responses around the truth curve with vM(0, 3) errors."""
    return simulate_dataset(truth, PredictorSpec("normal"), AngularErrorSpec("vonmises", 3.0),
                            100, make_rng(11))


def noiseless(params, n=200, seed=0):
    x = make_rng(seed).standard_normal(n)
    from circreg.mobius import predict_curve
    return Dataset(x, predict_curve(x, params))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE = []


def report(number, ok, detail):
    ACCEPTANCE.append((number, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE, key=lambda t: t[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
