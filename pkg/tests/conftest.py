import pytest

from pvrbf.circuit import FiveParamModel, ThermalContext, TwoDiodeModel

MODULE = ThermalContext(n_series=36, temperature=298.15)


def ref_model(**kw):
    params = dict(photocurrent=5.0, saturation_current=5e-9, ideality=1.3,
                  series_resistance=0.3, shunt_resistance=200.0, thermal=MODULE)
    params.update(kw)
    return FiveParamModel(**params)


def ref_two_diode(**kw):
    params = dict(photocurrent=5.0, i01=5e-9, i02=1e-6, series_resistance=0.3,
                  shunt_resistance=200.0, eta1=1.0, eta2=2.0, thermal=MODULE)
    params.update(kw)
    return TwoDiodeModel(**params)


@pytest.fixture
def ref():
    return ref_model()


# criterion number -> verdict line, filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
