"""Photovoltaic module models: equivalent circuits and RBF surrogates."""

from .characteristics import (CircuitSource, Curve, CurveMetrics, SurrogateSource,
                              compare_curves, metrics, sweep_curve)
from .circuit import (FiveParamModel, SevenParamExtension, ThermalContext,
                      TwoDiodeModel, i0_at_conditions, photocurrent_at_irradiance,
                      power_at, residual_five_param, residual_two_diode,
                      rs_at_temperature, solve_current, solve_current_array,
                      solve_current_bisect, solve_current_two_diode,
                      thermal_voltage)
from .dataset import Dataset, Sample, generate_grid, generate_random, read_csv, write_csv
from .errors import (ConvergenceError, DocumentError, ExponentOverflowError,
                     MalformedCurveError, NumericalError, PvError, ValidationError)
from .extraction import FitReport, fit_five_param
from .rbf import (InputPoint, KernelMode, OutputKind, RbfNeuron, RbfSurrogate,
                  evaluate, evaluate_many, gaussian_activation,
                  table1_current_network, table1_power_network)
from .training import TrainConfig, build_greedy, fine_tune, relative_mse

__version__ = "0.1.0"
