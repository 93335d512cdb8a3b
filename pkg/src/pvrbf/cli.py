"""Command-line entry point.

Exit status: 0 on success, 1 on validation errors (bad flags, malformed
files), 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import documents, rbf
from .characteristics import (CircuitSource, SurrogateSource, compare_curves,
                              metrics, sweep_curve)
from .dataset import (generate_grid, generate_random, read_csv, read_curves,
                      write_csv)
from .errors import NumericalError, ValidationError
from .extraction import fit_five_param
from .training import TrainConfig, build_greedy, fine_tune, relative_mse

METRIC_FIELDS = ("g_wm2", "t_kelvin", "source_tag", "isc", "voc", "vmp", "imp",
                 "pmp", "fill_factor", "efficiency")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}")


def _fmt(x):
    return "" if x is None else repr(x)


def _write_metrics(rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(METRIC_FIELDS)
    for curve, m in rows:
        writer.writerow([repr(curve.irradiance), repr(curve.temperature),
                         curve.source_tag, _fmt(m.isc), _fmt(m.voc), _fmt(m.vmp),
                         _fmt(m.imp), _fmt(m.pmp), _fmt(m.fill_factor),
                         _fmt(m.efficiency)])


def cmd_simulate(args):
    model, g_ref = documents.load_circuit(args.model)
    source = CircuitSource(model, g_ref)
    curves = [sweep_curve(source, g, args.t, args.vmax, args.n) for g in args.g]
    write_csv(curves, args.out)
    print(f"wrote {len(curves)} curve(s) to {args.out}")


def cmd_gen_data(args):
    model, _ = documents.load_circuit(args.model)
    if args.grid is not None:
        data = generate_grid(model, args.grid, (args.vmin, args.vmax), args.n_v,
                             args.kind)
    else:
        data = generate_random(model, args.n, (args.gmin, args.gmax),
                               (args.vmin, args.vmax), args.kind, args.seed)
    write_csv(data, args.out)
    print(f"wrote {len(data)} {data.kind.value} samples to {args.out}")


def cmd_train(args):
    data = read_csv(args.data, args.kind)
    cfg = TrainConfig(args.max_neurons, args.mse_goal, args.sigma_init,
                      args.epochs, args.lr, args.seed)
    holdout = None
    if args.holdout > 0:
        if not args.holdout < 1:
            raise ValidationError("holdout fraction must lie in [0, 1)")
        rng = np.random.Generator(np.random.PCG64(args.seed))
        order = rng.permutation(len(data))
        n_hold = int(round(args.holdout * len(data)))
        holdout = data.subset(np.sort(order[:n_hold]))
        data = data.subset(np.sort(order[n_hold:]))
    history = []
    net = build_greedy(data, cfg, history=history)
    net = fine_tune(net, data, cfg)
    Path(args.out).write_text(rbf.dumps(net), encoding="utf-8", newline="\n")
    print(f"neurons={len(net.neurons)}")
    print(f"sigma={net.sigma!r}")
    print(f"relative_mse={relative_mse(net, data)!r}")
    if holdout is not None and len(holdout):
        print(f"holdout_relative_mse={relative_mse(net, holdout)!r}")
    if args.figure:
        from .plotting import plot_training
        plot_training(history, net, args.figure)


def cmd_eval(args):
    net = documents.load_surrogate(args.net)
    data = read_csv(args.data, net.output_kind.value)
    print(f"relative_mse={relative_mse(net, data)!r}")


def cmd_metrics(args):
    curves = read_curves(args.curve)
    if not curves:
        raise ValidationError(f"no curves in {args.curve}")
    _write_metrics([(c, metrics(c, args.area)) for c in curves], sys.stdout)


def cmd_extract(args):
    init, g_ref = documents.load_circuit(args.init)
    if args.g_ref is not None:
        g_ref = args.g_ref
    curves = [c for path in args.curves for c in read_curves(path)]
    report = fit_five_param(curves, init, args.goal, g_ref,
                            jacobian=args.jacobian)
    documents.write_document(documents.fit_report_to_document(report, g_ref),
                             args.out)
    for name in ("photocurrent", "saturation_current", "ideality",
                 "series_resistance", "shunt_resistance"):
        print(f"{name}={getattr(report.model, name)!r}")
    print(f"residual_norm={report.residual_norm!r}")
    print(f"iterations={report.iterations}")
    print(f"converged={str(report.converged).lower()}")


def cmd_table1(args):
    make = {"current": rbf.table1_current_network,
            "power": rbf.table1_power_network}[args.which]
    Path(args.out).write_text(rbf.dumps(make(args.sigma)), encoding="utf-8",
                              newline="\n")
    print(f"wrote {args.which} network (sigma={args.sigma!r}) to {args.out}")


def cmd_report(args):
    from .plotting import plot_iv, plot_power_points

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, g_ref = documents.load_circuit(args.model)
    source = CircuitSource(model, g_ref, tag="circuit")
    circuit_curves = [sweep_curve(source, g, args.t, args.vmax, args.n)
                      for g in args.g]
    rows = [(c, metrics(c, args.area, source)) for c in circuit_curves]
    all_curves = list(circuit_curves)
    if args.current_net:
        net_source = SurrogateSource(documents.load_surrogate(args.current_net),
                                     tag="rbf-current")
        for ref in circuit_curves:
            c = sweep_curve(net_source, ref.irradiance, args.t, args.vmax, args.n)
            all_curves.append(c)
            cmp = compare_curves(ref, c)
            print(f"# G={ref.irradiance:g} rel_mse_i={cmp.rel_mse_current!r} "
                  f"rel_mse_p={cmp.rel_mse_power!r} "
                  f"max_abs_i={cmp.max_abs_current!r}")
    write_csv(all_curves, out / "curves.csv")
    plot_iv(all_curves, out / "iv.png", "i", "I-V characteristics")
    if args.power_net:
        pnet = documents.load_surrogate(args.power_net)
        v = np.tile(circuit_curves[0].v, len(args.g))
        g = np.repeat(args.g, len(circuit_curves[0].v))
        p = rbf.evaluate_many(pnet, v, g)
        plot_power_points(v, g, p, out / "pv_network.png", "P-V (power network)")
    plot_iv(all_curves, out / "pv.png", "p", "P-V characteristics")
    with open(out / "metrics.csv", "w", encoding="utf-8", newline="") as fh:
        _write_metrics(rows, fh)
    _write_metrics(rows, sys.stdout)


def build_parser():
    p = _Parser(prog="pvrbf", description="PV circuit models and RBF surrogates")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="sweep I-V curves of a circuit model")
    s.add_argument("--model", required=True)
    s.add_argument("--g", type=_floats, required=True, help="irradiances, e.g. 200,600,1000")
    s.add_argument("--t", type=float, default=298.15)
    s.add_argument("--vmax", type=float, default=30.0)
    s.add_argument("--n", type=int, default=301)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("gen-data", help="synthetic training/evaluation data")
    s.add_argument("--model", required=True)
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--n", type=int, help="number of random samples")
    mode.add_argument("--grid", type=_floats, help="grid irradiances")
    s.add_argument("--n-v", type=int, default=101)
    s.add_argument("--gmin", type=float, default=200.0)
    s.add_argument("--gmax", type=float, default=1000.0)
    s.add_argument("--vmin", type=float, default=0.0)
    s.add_argument("--vmax", type=float, default=30.0)
    s.add_argument("--kind", choices=("current", "power"), default="current")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    defaults = TrainConfig()
    s = sub.add_parser("train", help="train an RBF surrogate")
    s.add_argument("--data", required=True)
    s.add_argument("--kind", choices=("current", "power"), default="current")
    s.add_argument("--max-neurons", type=int, default=defaults.max_neurons)
    s.add_argument("--mse-goal", type=float, default=defaults.mse_goal)
    s.add_argument("--sigma-init", type=float, default=defaults.sigma_init)
    s.add_argument("--epochs", type=int, default=defaults.fine_tune_epochs)
    s.add_argument("--lr", type=float, default=defaults.learning_rate)
    s.add_argument("--seed", type=int, default=defaults.seed)
    s.add_argument("--holdout", type=float, default=0.0)
    s.add_argument("--figure", help="write a training figure (PNG)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="relative MSE of a network on a dataset")
    s.add_argument("--net", required=True)
    s.add_argument("--data", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("metrics", help="Isc, Voc, MPP and fill factor of curves")
    s.add_argument("--curve", required=True)
    s.add_argument("--area", type=float)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("extract", help="fit five-parameter model to curves")
    s.add_argument("--curves", nargs="+", required=True)
    s.add_argument("--init", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--goal", type=float, default=1e-8)
    s.add_argument("--g-ref", type=float)
    s.add_argument("--jacobian", choices=("fd", "analytic"), default="fd")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("table1", help="write a published 16-neuron network")
    s.add_argument("--which", choices=("current", "power"), required=True)
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_table1)

    s = sub.add_parser("report", help="curves, metrics and figures in one go")
    s.add_argument("--model", required=True)
    s.add_argument("--current-net")
    s.add_argument("--power-net")
    s.add_argument("--g", type=_floats, default=[200.0, 600.0, 1000.0])
    s.add_argument("--t", type=float, default=298.15)
    s.add_argument("--vmax", type=float, default=30.0)
    s.add_argument("--n", type=int, default=301)
    s.add_argument("--area", type=float)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
