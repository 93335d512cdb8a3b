import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvrbf.characteristics import CircuitSource, Curve, sweep_curve
from pvrbf.circuit import photocurrent_at_irradiance, solve_current
from pvrbf.dataset import (Dataset, curves_from_csv, curves_to_csv, dataset_from_csv,
                           dataset_to_csv, generate_grid, generate_random, read_csv,
                           read_curves, write_csv)
from pvrbf.errors import CsvFormatError, ValidationError
from pvrbf.rbf import evaluate_many, table1_current_network
from pvrbf.training import build_greedy

from conftest import ref_model


def test_random_protocol():
    data = generate_random(ref_model(), 5600, (200.0, 1000.0), (0.0, 30.0), "current", 1)
    assert len(data) == 5600
    assert np.all(np.isfinite(data.target))
    assert data.irradiance.min() >= 200.0 and data.irradiance.max() <= 1000.0
    assert data.voltage.min() >= 0.0 and data.voltage.max() <= 30.0


def test_random_stream_order():
    data = generate_random(ref_model(), 50, (200.0, 1000.0), (0.0, 30.0), seed=42)
    rng = np.random.Generator(np.random.PCG64(42))
    g = rng.uniform(200.0, 1000.0, 50)
    v = rng.uniform(0.0, 30.0, 50)
    assert np.array_equal(data.irradiance, g)
    assert np.array_equal(data.voltage, v)
    m = ref_model()
    for k in (0, 17, 49):
        scaled = type(m)(m.photocurrent * g[k] / 1000.0, m.saturation_current,
                         m.ideality, m.series_resistance, m.shunt_resistance, m.thermal)
        assert data.target[k] == pytest.approx(solve_current(scaled, v[k]), abs=1e-9)


def test_random_determinism():
    a = generate_random(ref_model(), 200, seed=9)
    assert a == generate_random(ref_model(), 200, seed=9)
    assert a != generate_random(ref_model(), 200, seed=10)


def test_degenerate_irradiance_range():
    data = generate_random(ref_model(), 20, (1000.0, 1000.0))
    assert np.all(data.irradiance == 1000.0)


@pytest.mark.parametrize("kw", [dict(n=0), dict(g_range=(500.0, 200.0)),
                                dict(g_range=(-5.0, 10.0)), dict(v_range=(0.0, math.nan))])
def test_random_validation(kw):
    args = dict(model=ref_model(), n=10)
    args.update(kw)
    with pytest.raises(ValidationError):
        generate_random(**args)


def test_grid_counts_and_rows():
    data = generate_grid(ref_model(series_resistance=0.0), [200.0, 600.0, 1000.0],
                         (0.0, 30.0), 101)
    assert len(data) == 303
    at_zero = data.voltage == 0.0
    np.testing.assert_array_equal(
        data.target[at_zero],
        photocurrent_at_irradiance(5.0, data.irradiance[at_zero], 1000.0))


def test_grid_power_is_v_times_current():
    cur = generate_grid(ref_model(), [200.0, 600.0, 1000.0])
    pwr = generate_grid(ref_model(), [200.0, 600.0, 1000.0], kind="power")
    np.testing.assert_array_equal(pwr.target, cur.voltage * cur.target)


def test_grid_matches_curve_sweep():
    data = generate_grid(ref_model(), [600.0], (0.0, 30.0), 31, g_ref=1000.0)
    c = sweep_curve(CircuitSource(ref_model()), 600.0, None, 30.0, 31)
    np.testing.assert_array_equal(data.target, c.i)


def test_dataset_validation():
    with pytest.raises(ValidationError):
        Dataset("current", [1.0, 2.0], [1.0], [1.0])
    with pytest.raises(ValidationError):
        Dataset("current", [-1.0], [1.0], [1.0])
    with pytest.raises(ValidationError):
        Dataset("current", [1.0], [math.inf], [1.0])
    with pytest.raises(ValueError):
        Dataset("voltage", [1.0], [1.0], [1.0])


def test_samples_and_subset():
    data = generate_random(ref_model(), 10, seed=3)
    s = data.samples
    assert len(s) == 10 and s[4].voltage == data.voltage[4] and s[4].temperature is None
    sub = data.subset([1, 3])
    assert len(sub) == 2 and sub.target[1] == data.target[3]


# -- CSV ----------------------------------------------------------------------

def test_dataset_round_trip(tmp_path):
    data = generate_grid(ref_model(), [200.0, 600.0, 1000.0])
    path = tmp_path / "grid.csv"
    write_csv(data, path)
    back = read_csv(path)
    assert back == data
    assert path.read_text().splitlines()[0] == "g_wm2,v_volt,t_kelvin,target"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0.0, 2000.0), st.floats(-5.0, 100.0),
                          st.one_of(st.none(), st.floats(1.0, 400.0)),
                          st.floats(-1e6, 1e6)), min_size=1, max_size=20))
def test_dataset_csv_exact(rows):
    g, v, t, y = zip(*rows)
    t = [math.nan if x is None else x for x in t]
    data = Dataset("power", g, v, y, t)
    assert dataset_from_csv(dataset_to_csv(data), "power") == data


def test_bad_value_names_line():
    lines = ["g_wm2,v_volt,t_kelvin,target"] + [f"200.0,{k}.0,,1.0" for k in range(5)]
    lines.append("200.0,abc,,1.0")
    with pytest.raises(CsvFormatError) as err:
        dataset_from_csv("\n".join(lines) + "\n")
    assert err.value.line == 7
    assert "7" in str(err.value)


@pytest.mark.parametrize("text", ["", "g,v,t,y\n", "g_wm2,v_volt,t_kelvin,target\n1,2,3\n",
                                  "g_wm2,v_volt,t_kelvin,target\n1,2,3,nan\n"])
def test_malformed_dataset_files(text):
    with pytest.raises(CsvFormatError):
        dataset_from_csv(text)


def test_header_only_dataset():
    data = dataset_from_csv("g_wm2,v_volt,t_kelvin,target\n")
    assert len(data) == 0
    assert evaluate_many(table1_current_network(1.0), data.voltage, data.irradiance).size == 0
    with pytest.raises(ValidationError):
        build_greedy(data)


def test_curves_round_trip(tmp_path):
    source = CircuitSource(ref_model(), tag="circuit")
    curves = [sweep_curve(source, g, 298.15, 30.0, 41) for g in (200.0, 1000.0)]
    curves.append(Curve(600.0, None, [0.0, 1.0, 2.0], [1.0, 0.5, -0.5], "manual"))
    path = tmp_path / "curves.csv"
    write_csv(curves, path)
    back = read_curves(path)
    assert back == curves
    assert [c.source_tag for c in back] == ["circuit", "circuit", "manual"]


def test_curve_block_parsing():
    text = "# g_wm2=800\nv_volt,i_ampere,p_watt\n0,2,0\n1,1,1\n# g_wm2=900\nv_volt,i_ampere,p_watt\n"
    curves = curves_from_csv(text)
    assert len(curves) == 2 and len(curves[1]) == 0
    assert curves[0].irradiance == 800.0 and math.isnan(curves[0].temperature)
    assert curves_to_csv(curves[:1]).startswith("# g_wm2=800.0\n")
    with pytest.raises(CsvFormatError) as err:
        curves_from_csv("# g_wm2=800\nv_volt,i_ampere,p_watt\n0,2,0\n1,x,1\n")
    assert err.value.line == 4
    with pytest.raises(CsvFormatError):
        curves_from_csv("v,i,p\n0,1,0\n")
