import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvrbf.characteristics import (CircuitSource, Curve, SurrogateSource,
                                   compare_curves, metrics, sweep_curve)
from pvrbf.circuit import open_circuit_voltage, solve_current
from pvrbf.errors import MalformedCurveError, ValidationError
from pvrbf.rbf import RbfNeuron, RbfSurrogate, table1_power_network

from conftest import ref_model

SOURCE = CircuitSource(ref_model())


def test_curve_validation():
    with pytest.raises(ValidationError):
        Curve(1000.0, 298.15, [0.0, 1.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(ValidationError):
        Curve(1000.0, 298.15, [0.0, 1.0], [1.0])
    with pytest.raises(ValidationError):
        Curve(1000.0, 298.15, [0.0, 1.0], [1.0, math.inf])
    assert math.isnan(Curve(1000.0, None, [0.0, 1.0], [1.0, 0.5]).temperature)


def test_sweep_matches_scalar_solver():
    c = sweep_curve(SOURCE, 1000.0, None, 30.0, 61)
    assert c.v[0] == 0.0 and c.v[-1] == 30.0
    m = ref_model()
    for v, i in zip(c.v, c.i):
        assert i == pytest.approx(solve_current(m, v), abs=1e-9)
    assert np.array_equal(c.p, c.v * c.i)


def test_sweep_scales_photocurrent():
    c = sweep_curve(CircuitSource(ref_model(series_resistance=0.0)), 200.0, None, 30.0, 11)
    assert c.i[0] == 1.0


def test_reference_metrics():
    c = sweep_curve(SOURCE, 1000.0, 298.15, 30.0, 301)
    m = metrics(c, module_area=0.5, source=SOURCE)
    assert m.voc == pytest.approx(open_circuit_voltage(ref_model()), abs=1e-9)
    assert m.isc == pytest.approx(solve_current(ref_model(), 0.0), abs=1e-12)
    assert m.pmp == pytest.approx(m.vmp * m.imp, rel=1e-15)
    assert m.fill_factor == pytest.approx(m.pmp / (m.voc * m.isc))
    assert m.efficiency == pytest.approx(m.pmp / 500.0)
    # the refined MPP dominates every sampled point
    assert m.pmp >= c.p.max()
    d = m.as_dict()
    assert set(d) == {"isc", "voc", "vmp", "imp", "pmp", "fill_factor", "efficiency"}


def test_metrics_without_crossing():
    c = sweep_curve(SOURCE, 1000.0, None, 20.0, 201)
    m = metrics(c)
    assert m.voc is None and m.fill_factor is None
    assert m.pmp > 0


@pytest.mark.parametrize("v,i", [([0.0, 1.0], [1.0, 0.5]),
                                 ([0.0, 1.0, 2.0], [0.0, -1.0, -2.0]),
                                 ([0.0, 1.0, 2.0], [1.0, 2.0, 3.0])])
def test_malformed_curves(v, i):
    with pytest.raises(MalformedCurveError):
        metrics(Curve(1000.0, 298.15, v, i))


def test_bad_area():
    c = sweep_curve(SOURCE, 1000.0, None, 30.0, 31)
    with pytest.raises(ValidationError):
        metrics(c, module_area=0.0)


g_values = st.floats(50.0, 1200.0)
temps = st.floats(260.0, 340.0)


@settings(max_examples=25, deadline=None)
@given(g=g_values, t=temps)
def test_circuit_curve_invariants(g, t):
    c = sweep_curve(SOURCE, g, t, 40.0, 401)
    assert np.array_equal(c.p, c.v * c.i)
    m = metrics(c, source=SOURCE)
    upto = c.v <= m.voc
    assert np.all(np.diff(c.i[upto]) <= 0)
    assert m.isc >= m.imp and m.voc >= m.vmp
    assert 0.0 < m.fill_factor < 1.0


@pytest.mark.parametrize("g", [200.0, 600.0, 1000.0])
@pytest.mark.parametrize("with_source", [False, True])
def test_metrics_stable_under_refinement(g, with_source):
    src = SOURCE if with_source else None
    coarse = metrics(sweep_curve(SOURCE, g, None, 30.0, 301), source=src)
    fine = metrics(sweep_curve(SOURCE, g, None, 30.0, 9901), source=src)
    for name in ("pmp", "vmp", "voc", "isc", "fill_factor"):
        assert getattr(coarse, name) == pytest.approx(getattr(fine, name), rel=1e-3)


def test_surrogate_source():
    net = RbfSurrogate((RbfNeuron(5.0, 0.0, 1000.0),), 40.0)
    c = sweep_curve(SurrogateSource(net), 1000.0, None, 30.0, 31)
    assert c.source_tag == "rbf"
    assert c.i[0] == pytest.approx(5.0)
    with pytest.raises(ValidationError):
        SurrogateSource(table1_power_network(1.0))


def test_compare_curves():
    a = sweep_curve(SOURCE, 1000.0, None, 30.0, 31)
    b = Curve(a.irradiance, a.temperature, a.v, a.i * 1.1)
    cmp = compare_curves(a, b)
    assert cmp.rel_mse_current == pytest.approx(0.01)
    assert cmp.rel_mse_power == pytest.approx(0.01)
    assert cmp.max_abs_current == pytest.approx(0.1 * np.max(np.abs(a.i)))
    assert compare_curves(a, a).rel_mse_current == 0.0
    with pytest.raises(ValidationError):
        compare_curves(a, sweep_curve(SOURCE, 1000.0, None, 30.0, 32))
