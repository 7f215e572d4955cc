import logging
import math
import warnings
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .config import Configuration
from .chain import cubic_tensor_axial
from .couplings import (axial_pipeline, local_field_corrections, mode_frame_cubic, phonon_resonance_gap,
                        spin_spin_couplings)
from .errors import ConfigurationError, FitError, NumericalError

logger = logging.getLogger(__name__)

SWEEP_LIMITS = (2, 60)
MIN_FIT_POINTS = 5
FIT_COLUMNS = ("j2_max", "j2_min", "local_field_edge", "resonance_gap")


@dataclass(frozen=True)
class SweepRow:
    n_ions: int
    j2_max: float
    j2_min: float
    local_field_edge: float
    resonance_gap: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def sweep_row(cfg: Configuration) -> SweepRow:
    """Couplings of one chain length, with ground-state cooled modes."""
    chain, modes, res, eps = axial_pipeline(cfg)
    J2 = spin_spin_couplings(eps, modes)
    pairs = np.abs(J2[np.triu_indices(cfg.n_ions, k=1)])
    C = mode_frame_cubic(cubic_tensor_axial(chain, cfg), modes)
    field = local_field_corrections(C, eps, [0] * cfg.n_ions)
    edge = abs(field[0])
    return SweepRow(
        n_ions=cfg.n_ions,
        j2_max=float(pairs.max()) if pairs.size else 0.0,
        j2_min=float(pairs.min()) if pairs.size else 0.0,
        local_field_edge=float(edge),
        resonance_gap=phonon_resonance_gap(modes),
    )


def run_sweep(cfg: Configuration, n_range: Optional[Tuple[int, int]] = None) -> List[SweepRow]:
    """
    One :class:`SweepRow` per chain length in ``n_range`` (inclusive).

    A numerical failure skips that row with a warning; the sweep carries on.
    """
    low, high = n_range or cfg.n_range
    if low < SWEEP_LIMITS[0] or high > SWEEP_LIMITS[1] or low > high:
        raise ConfigurationError("n_range", f"n_range must lie within [{SWEEP_LIMITS[0]}, {SWEEP_LIMITS[1]}], "
                                            f"got {low}:{high}")
    rows = []
    for n_ions in range(low, high + 1):
        try:
            rows.append(sweep_row(cfg.with_overrides(n_ions=n_ions)))
        except NumericalError as e:
            logger.warning("skipping N=%d: %s", n_ions, e)
            continue
        logger.info("sweep row N=%d done", n_ions)
    return rows


class FitModel(str, Enum):
    POWER_LAW = "power_law"
    LOG_CORRECTED = "log_corrected"


class FitSpace(str, Enum):
    LINEAR = "linear"
    LOG = "log"


# c N^a is fitted to the raw values, the log-corrected model to log values
DEFAULT_FIT_SPACE = {FitModel.POWER_LAW: FitSpace.LINEAR, FitModel.LOG_CORRECTED: FitSpace.LOG}


@dataclass(frozen=True)
class FitResult:
    """
    Scaling-law fit. ``params`` is (c, a) for c N^a or (c, a, b) for c N^a log(b N);
    ``residual`` is the RMS of the log residuals whatever ``space`` the fit ran in.
    """
    model: FitModel
    column: str
    params: Tuple[float, ...]
    param_uncertainties: Tuple[float, ...]
    residual: float
    n_points: int
    space: FitSpace = FitSpace.LOG

    @property
    def c(self) -> float:
        return self.params[0]

    @property
    def a(self) -> float:
        return self.params[1]

    @property
    def b(self) -> Optional[float]:
        return self.params[2] if self.model is FitModel.LOG_CORRECTED else None

    def predict(self, n: Sequence[float]) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        values = self.c * n ** self.a
        if self.model is FitModel.LOG_CORRECTED:
            values = values * np.log(self.b * n)
        return values


def _power_law(log_n, log_c, a):
    return log_c + a * log_n


def _linear_power_law(n, c, a):
    return c * n ** a


def _log_corrected(log_n, log_c, a, b):
    bn = b * np.exp(log_n)
    # outside the domain bN > 1 the model is undefined; steer the solver back
    safe = np.where(bn > 1.0, bn, 1.0 + 1e-12)
    return log_c + a * log_n + np.log(np.log(safe))


def _traced(model: Callable, trace: List[Tuple[float, ...]]) -> Callable:
    def wrapped(x, *params):
        trace.append(tuple(float(p) for p in params))
        return model(x, *params)
    return wrapped


def fit_scaling(rows: Sequence[SweepRow], column: str, model: FitModel = FitModel.POWER_LAW,
                space: Optional[FitSpace] = None) -> FitResult:
    """
    Fit ``column`` against N with Levenberg-Marquardt.

    ``space`` defaults per model: power laws on the raw values, the
    log-corrected law on log-transformed values.

    Raises:
        FitError: on too few or non-positive points, a singular covariance,
            non-convergence, or a log model that leaves the domain bN > 1.
    """
    model = FitModel(model)
    if column not in FIT_COLUMNS:
        raise ConfigurationError("column", f"column must be one of {', '.join(FIT_COLUMNS)}, got {column!r}")
    n = np.array([row.n_ions for row in rows], dtype=float)
    y = np.array([getattr(row, column) for row in rows], dtype=float)
    return fit_arrays(n, y, model, column, space)


def fit_arrays(n: np.ndarray, y: np.ndarray, model: FitModel, column: str = "values",
               space: Optional[FitSpace] = None) -> FitResult:
    model = FitModel(model)
    space = FitSpace(space) if space is not None else DEFAULT_FIT_SPACE[model]
    if space is FitSpace.LINEAR and model is not FitModel.POWER_LAW:
        raise ConfigurationError("fit_space", f"{model.value} fits run on log values only")
    if len(n) < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} points to fit, got {len(n)}")
    if np.any(y <= 0) or np.any(n <= 0):
        raise FitError(f"{column} must be positive to fit on a log scale")
    log_n, log_y = np.log(n), np.log(y)

    slope, intercept = np.polyfit(log_n, log_y, 1)
    trace: List[Tuple[float, ...]] = []
    # raw values are fitted at order one
    scale = float(np.max(y))
    if space is FitSpace.LINEAR:
        function, x, target, p0 = _linear_power_law, n, y / scale, [math.exp(intercept) / scale, slope]
    elif model is FitModel.POWER_LAW:
        function, x, target, p0 = _power_law, log_n, log_y, [intercept, slope]
    else:
        function, x, target, p0 = _log_corrected, log_n, log_y, [intercept, slope, 2.0 / n.min()]

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", OptimizeWarning)
            popt, pcov = curve_fit(_traced(function, trace), x, target, p0=p0, method="lm",
                                   xtol=1e-10, ftol=1e-14, maxfev=20000)
    except (RuntimeError, OptimizeWarning, ValueError) as e:
        raise FitError(f"{model.value} fit of {column} failed: {e}", trace)

    errors = np.sqrt(np.diag(pcov))
    if not np.all(np.isfinite(errors)):
        raise FitError(f"{model.value} fit of {column} has a singular covariance", trace)
    if model is FitModel.LOG_CORRECTED and popt[2] * n.min() <= 1.0:
        raise FitError(f"log-corrected fit left the domain bN > 1 (b = {popt[2]:.4g})", trace)

    if space is FitSpace.LINEAR:
        c = float(popt[0]) * scale
        uncertainties = (float(errors[0]) * scale, float(errors[1]))
    else:
        c = math.exp(popt[0])
        uncertainties = (c * float(errors[0]),) + tuple(float(e) for e in errors[1:])
    params = (c,) + tuple(float(p) for p in popt[1:])
    result = FitResult(model, column, params, uncertainties, 0.0, len(n), space)
    fitted = result.predict(n)
    if np.any(fitted <= 0):
        raise FitError(f"{model.value} fit of {column} predicts non-positive values", trace)
    residual = float(np.sqrt(np.mean((log_y - np.log(fitted)) ** 2)))
    logger.info("%s fit of %s in %s space: params %s +- %s", model.value, column, space.value, params, uncertainties)
    return replace(result, residual=residual)
