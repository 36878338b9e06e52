"""
Relative error metrics, DFT amplitude diagnostics and seed aggregation.
"""

from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from common.models import RunSummary, SpectrumReport
from mfp_solver.constants import ALPHA_HIGH_INDEX, ALPHA_LOW_INDEX
from mfp_solver.exceptions import MetricUndefinedError
from mfp_solver.utils.formatters import write_csv

# Relative spacing deviation tolerated before a sequence counts as non-uniform
_SPACING_RTOL = 1e-9


def rel_l2_error(u_vals, n_vals) -> float:
    """
    sqrt(sum (u - N)^2 / sum u^2)

    Raises:
        MetricUndefinedError: If u vanishes on every point.
    """
    u = np.asarray(u_vals, dtype=np.float64)
    n = np.asarray(n_vals, dtype=np.float64)
    denom = float(np.sum(u * u))
    if denom == 0.0:
        raise MetricUndefinedError("Relative solution error undefined: reference is identically zero")
    return float(np.sqrt(np.sum((u - n) ** 2) / denom))


def rel_residual_error(f_vals, lap_vals) -> float:
    """
    sqrt(sum (f + lap N)^2 / sum f^2)

    Raises:
        MetricUndefinedError: If f vanishes on every point.
    """
    f = np.asarray(f_vals, dtype=np.float64)
    lap = np.asarray(lap_vals, dtype=np.float64)
    denom = float(np.sum(f * f))
    if denom == 0.0:
        raise MetricUndefinedError("Relative residual error undefined: right-hand side is identically zero")
    return float(np.sqrt(np.sum((f + lap) ** 2) / denom))


def dft_amplitudes(residuals, points: Optional[np.ndarray] = None) -> SpectrumReport:
    """
    Magnitudes of the unnormalized DFT F_k = sum_j r_j exp(-2 pi i k j / N).

    For samples on [-1, 1), index m corresponds to m full periods over the
    domain: sin(2 pi x) lands at m = 2 and sin(50 pi x) at m = 50.

    Args:
        residuals: Real sequence of length N >= 2, ordered along the grid.
        points: Sample locations; when given they must be uniformly spaced.

    Returns:
        SpectrumReport with alpha_low = |F_2| and alpha_high = |F_50|.

    Raises:
        MetricUndefinedError: If N < 2 or the points are not uniformly spaced.
    """
    r = np.asarray(residuals, dtype=np.float64).ravel()
    if r.size < 2:
        raise MetricUndefinedError(f"DFT needs at least 2 samples, got {r.size}")
    if points is not None:
        xs = np.asarray(points, dtype=np.float64).reshape(r.size, -1)
        if xs.shape[1] != 1:
            raise MetricUndefinedError("DFT amplitudes are defined for 1D sequences only")
        steps = np.diff(xs[:, 0])
        if np.any(steps <= 0) or not np.allclose(steps, steps.mean(), rtol=_SPACING_RTOL, atol=0.0):
            raise MetricUndefinedError("DFT needs samples on an ordered uniform grid")
    amplitudes = np.abs(np.fft.fft(r))
    return SpectrumReport(
        amplitudes=amplitudes.tolist(),
        alpha_low=float(amplitudes[ALPHA_LOW_INDEX]) if r.size > ALPHA_LOW_INDEX else None,
        alpha_high=float(amplitudes[ALPHA_HIGH_INDEX]) if r.size > ALPHA_HIGH_INDEX else None,
    )


def aggregate(values: Sequence[float]) -> Tuple[float, float]:
    """
    Mean and sample standard deviation (divisor n - 1).

    Raises:
        MetricUndefinedError: With fewer than 2 values.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise MetricUndefinedError(f"Aggregation needs at least 2 runs, got {arr.size}")
    return float(arr.mean()), float(arr.std(ddof=1))


def aggregate_reports(summaries: Sequence[RunSummary]) -> Dict[str, Tuple[float, float]]:
    """
    Mean and std per table metric over the runs of one variant.

    eps_u and eps_u_r are taken on the test grid, eps_f and eps_f_r on the
    training set. A metric is present only when every run reports it.

    Raises:
        MetricUndefinedError: With fewer than 2 runs.
    """
    if len(summaries) < 2:
        raise MetricUndefinedError(f"Aggregation needs at least 2 runs, got {len(summaries)}")
    columns = {
        "eps_u": [s.test.eps_u for s in summaries],
        "eps_f": [s.train.eps_f for s in summaries],
        "eps_u_r": [s.test.eps_u_r for s in summaries],
        "eps_f_r": [s.train.eps_f_r for s in summaries],
    }
    return {
        name: aggregate(values)
        for name, values in columns.items()
        if all(v is not None for v in values)
    }


def write_spectrum_csv(report: SpectrumReport, path: Union[str, Path]) -> Path:
    """Columns k, magnitude"""
    return write_csv(path, ["k", "magnitude"], enumerate(report.amplitudes))
