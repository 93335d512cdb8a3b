"""Acceptance criteria, one test each.

Every test records a one-line verdict; the lines are printed together at
the end of the pytest run (and inline with ``-s``).  Run this file
directly to execute only the acceptance suite.
"""

import time

import numpy as np
import pytest

from pvrbf.characteristics import CircuitSource, metrics, sweep_curve
from pvrbf.circuit import (FiveParamModel, ThermalContext, at_conditions,
                           open_circuit_voltage, residual_five_param, solve_current,
                           solve_current_bisect, solve_current_two_diode)
from pvrbf.extraction import PARAM_NAMES
from pvrbf.rbf import evaluate_many, table1_current_network, table1_power_network

from conftest import ACCEPTANCE, ref_model, ref_two_diode
from experiments import (G_GRID, current_experiment, evaluation_grid,
                         extraction_experiment, network_fingerprint,
                         power_experiment, train_experiment)
from test_rbf import TABLE1_SHA256, table1_digest


def record(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def test_criterion_01_current_training_error():
    net, err, seconds = current_experiment()
    ok = err < 0.02 and seconds < 60.0 and len(net.neurons) <= 16
    record(1, ok, f"current network, {len(net.neurons)} neurons: grid relative MSE "
                  f"{err:.4%} (< 2%), {seconds:.1f} s (< 60 s)")


def test_criterion_02_power_training_error():
    net, err, seconds = power_experiment()
    ok = err < 0.01 and seconds < 60.0 and len(net.neurons) <= 16
    record(2, ok, f"power network, {len(net.neurons)} neurons: grid relative MSE "
                  f"{err:.4%} (< 1%), {seconds:.1f} s (< 60 s)")


def test_criterion_03_table1_fidelity():
    digest, rows = table1_digest()
    cur, pwr = table1_current_network(1.0), table1_power_network(1.0)
    spot = ((cur.neurons[0].weight, cur.neurons[0].centroid_v, cur.neurons[0].centroid_g)
            == (5.46, 12.56, 200.0)
            and (pwr.neurons[8].weight, pwr.neurons[8].centroid_v, pwr.neurons[8].centroid_g)
            == (324721.68, 26.25, 1000.0))
    ok = digest == TABLE1_SHA256 and len(rows) * 3 == 96 and spot
    record(3, ok, f"{len(rows) * 3} published numbers, checksum {digest[:12]}...")


def random_models(count, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    thermals = (ThermalContext(1), ThermalContext(36), ThermalContext(60, 320.0))
    for k in range(count):
        m = FiveParamModel(rng.uniform(0.1, 10.0), 10.0 ** rng.uniform(-12, -6),
                           rng.uniform(1.0, 2.0), rng.uniform(0.0, 1.0),
                           rng.uniform(20.0, 5000.0), thermals[k % 3])
        yield m, rng.uniform(0.0, 1.1) * open_circuit_voltage(m)


def test_criterion_04_solver_equivalence():
    start = time.perf_counter()
    worst_gap = worst_res = 0.0
    for m, v in random_models(1000, seed=4):
        i = solve_current(m, v)
        worst_gap = max(worst_gap, abs(i - solve_current_bisect(m, v)))
        worst_res = max(worst_res, abs(residual_five_param(m, v, i)))
    seconds = time.perf_counter() - start
    ok = worst_gap < 1e-6 and worst_res < 1e-9 and seconds < 5.0
    record(4, ok, f"1000 random models: max |newton - bisect| {worst_gap:.2e} A, "
                  f"max residual {worst_res:.2e} A, {seconds:.2f} s")


def test_criterion_05_two_diode_reduction():
    five = ref_model()
    two = ref_two_diode(i01=five.saturation_current, i02=0.0, eta1=five.ideality)
    worst = 0.0
    for g in G_GRID:
        m5, m2 = at_conditions(five, g), at_conditions(two, g)
        for v in np.linspace(0.0, 30.0, 101):
            worst = max(worst, abs(solve_current_two_diode(m2, v) - solve_current(m5, v)))
    record(5, worst < 1e-9, f"3x101 grid: max current difference {worst:.2e} A (< 1e-9)")


def test_criterion_06_gradient_check():
    from experiments import gradient_error

    errors = [gradient_error(seed) for seed in range(100)]
    worst = max(errors)
    record(6, worst < 1e-5, f"100 configurations: worst relative gradient gap {worst:.2e}")


def test_criterion_07_round_trip_extraction():
    start = time.perf_counter()
    reports = extraction_experiment()
    ref = ref_model()
    worst = max(abs(getattr(r.model, k) / getattr(ref, k) - 1)
                for r in reports for k in PARAM_NAMES)
    seconds = time.perf_counter() - start
    ok = worst < 0.01 and all(r.converged for r in reports)
    record(7, ok, f"{len(reports)} perturbed starts: worst parameter error {worst:.2e} "
                  f"(< 1%), {seconds:.1f} s")


def curve_checks(source, g, t):
    coarse = sweep_curve(source, g, t, 40.0, 301)
    fine = sweep_curve(source, g, t, 40.0, 9901)
    problems = []
    for c in (coarse, fine):
        if not np.array_equal(c.p, c.v * c.i):
            problems.append("p != v*i")
    m_coarse = metrics(coarse, source=source)
    m_fine = metrics(fine, source=source)
    upto = coarse.v <= m_coarse.voc
    if np.any(np.diff(coarse.i[upto]) > 0):
        problems.append("current rises before Voc")
    if not 0.0 < m_coarse.fill_factor < 1.0:
        problems.append("fill factor outside (0, 1)")
    drift = max(abs(m_coarse.pmp / m_fine.pmp - 1), abs(m_coarse.vmp / m_fine.vmp - 1))
    interp_drift = max(abs(metrics(coarse).pmp / metrics(fine).pmp - 1),
                       abs(metrics(coarse).vmp / metrics(fine).vmp - 1))
    return problems, max(drift, interp_drift)


def test_criterion_08_curve_invariants():
    sources = [CircuitSource(ref_model()), CircuitSource(ref_two_diode())]
    problems, worst = [], 0.0
    count = 0
    for source in sources:
        for g in G_GRID:
            for t in (273.15, 298.15, 323.15):
                p, drift = curve_checks(source, g, t)
                problems += p
                worst = max(worst, drift)
                count += 1
    ok = not problems and worst < 1e-3
    record(8, ok, f"{count} sweeps: {len(problems)} invariant violations, "
                  f"MPP drift under x33 refinement {worst:.2e} (< 1e-3)")


def test_criterion_09_cross_network_consistency():
    current_net = current_experiment()[0]
    power_net = power_experiment()[0]
    grid = evaluation_grid("current")
    implied = grid.voltage * evaluate_many(current_net, grid.voltage, grid.irradiance)
    direct = evaluate_many(power_net, grid.voltage, grid.irradiance)
    err = float(np.sum((direct - implied) ** 2) / np.sum(implied ** 2))
    record(9, err <= 0.03, f"power net vs v x current net: relative MSE {err:.4%} (<= 3%)")


def test_criterion_10_determinism():
    same_current = (network_fingerprint(train_experiment("current", 5600)[0])
                    == network_fingerprint(current_experiment()[0]))
    same_power = (network_fingerprint(train_experiment("power", 4600)[0])
                  == network_fingerprint(power_experiment()[0]))
    same_fits = extraction_experiment() == extraction_experiment()
    ok = same_current and same_power and same_fits
    record(10, ok, f"repeat runs bit-identical: current {same_current}, "
                   f"power {same_power}, extraction {same_fits}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
