"""Multi-channel truncated trigonometric series on a fixed period.

Used to tabulate the periodic Riccati coefficients once per block so the
ODE right-hand side can be evaluated in a handful of vector operations.
Smooth periodic functions sampled on a uniform grid are represented to
machine precision after truncating negligible harmonics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class TrigSeries:
    """``f_c(t) = mean[c] + sum_m cos_coef[c,m-1] cos(m w t) + sin_coef[c,m-1] sin(m w t)``
    with ``w = 2 pi / period``, for channels ``c = 0..C-1``.
    """

    period: float
    mean: np.ndarray       # (C,)
    cos_coef: np.ndarray   # (C, M)
    sin_coef: np.ndarray   # (C, M)
    _orders: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, float)))
        object.__setattr__(self, "cos_coef", np.atleast_2d(np.asarray(self.cos_coef, float)))
        object.__setattr__(self, "sin_coef", np.atleast_2d(np.asarray(self.sin_coef, float)))
        if self.cos_coef.shape != self.sin_coef.shape:
            raise ValueError("cos/sin coefficient shapes differ")
        if self.cos_coef.shape[0] != self.mean.shape[0]:
            raise ValueError("channel count mismatch")
        if not self.period > 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "_orders", np.arange(1, self.order + 1, dtype=float))

    @property
    def channels(self) -> int:
        return self.mean.shape[0]

    @property
    def order(self) -> int:
        return self.cos_coef.shape[1]

    @classmethod
    def constant(cls, values, period: float) -> "TrigSeries":
        values = np.atleast_1d(np.asarray(values, float))
        z = np.zeros((values.size, 1))
        return cls(period, values, z, z.copy())

    @classmethod
    def from_uniform_samples(cls, values: np.ndarray, period: float,
                             max_order: int | None = None,
                             truncate_tol: float = 1e-14) -> "TrigSeries":
        """Discrete Fourier projection of uniform samples ``values[k, c]``
        taken at ``t_k = k period / n`` (endpoint not repeated).

        Trailing harmonics whose joint amplitude falls below
        ``truncate_tol * max|values|`` are dropped.
        """
        values = np.atleast_2d(np.asarray(values, float))
        n = values.shape[0]
        if n < 3:
            raise ValueError("need at least 3 samples per period")
        spec = np.fft.rfft(values, axis=0)
        hi = n // 2 if n % 2 else n // 2 - 1   # skip ambiguous Nyquist bin
        if max_order is not None:
            hi = min(hi, max_order)
        mean = spec[0].real / n
        cos_coef = (2.0 * spec[1:hi + 1].real / n).T
        sin_coef = (-2.0 * spec[1:hi + 1].imag / n).T
        scale = max(float(np.max(np.abs(values))), 1e-300)
        amp = np.hypot(cos_coef, sin_coef).max(axis=0) if hi else np.zeros(0)
        keep = hi
        while keep > 1 and amp[keep - 1] <= truncate_tol * scale:
            keep -= 1
        return cls(period, mean, cos_coef[:, :keep], sin_coef[:, :keep])

    @classmethod
    def fit_points(cls, t: np.ndarray, values: np.ndarray, order: int,
                   period: float) -> "TrigSeries":
        """Least-squares trigonometric fit at arbitrary sample times."""
        t = np.asarray(t, float)
        values = np.atleast_2d(np.asarray(values, float))
        if values.shape[0] != t.size:
            raise ValueError("sample count mismatch")
        order = min(order, max((t.size - 1) // 2, 0))
        w = 2.0 * np.pi / period
        m = np.arange(1, order + 1)
        design = np.hstack([
            np.ones((t.size, 1)),
            np.cos(np.outer(t, m) * w),
            np.sin(np.outer(t, m) * w),
        ])
        coef, *_ = np.linalg.lstsq(design, values, rcond=None)
        mean = coef[0]
        cos_coef = coef[1:order + 1].T if order else np.zeros((values.shape[1], 0))
        sin_coef = coef[order + 1:].T if order else np.zeros((values.shape[1], 0))
        if order == 0:
            cos_coef = np.zeros((values.shape[1], 1))
            sin_coef = np.zeros((values.shape[1], 1))
        return cls(period, mean, cos_coef, sin_coef)

    # -- evaluation ----------------------------------------------------------

    def eval(self, t) -> np.ndarray:
        """Evaluate all channels; returns (C,) for scalar ``t``, else (nt, C)."""
        t_arr = np.asarray(t, float)
        ang = np.multiply.outer(np.atleast_1d(t_arr), self._orders) * (2.0 * np.pi / self.period)
        out = self.mean + np.cos(ang) @ self.cos_coef.T + np.sin(ang) @ self.sin_coef.T
        return out[0] if t_arr.ndim == 0 else out

    def eval_scalar(self, t: float) -> np.ndarray:
        """Fast path for ODE right-hand sides: one scalar time, all channels."""
        ang = (2.0 * np.pi / self.period * t) * self._orders
        return self.mean + self.cos_coef @ np.cos(ang) + self.sin_coef @ np.sin(ang)
