"""Swiss-roll regression benchmark.

Responses lie on the swiss roll ``(t cos t, u, t sin t)`` with
``t ~ U(pi, 3 pi)`` and ``u ~ U(0, 21)``.  The first two of six inputs encode
``(t, u)`` through a square-to-disk map; the other four are pure noise.

Draw order from ``Generator(PCG64(seed))``: ``t`` (n), ``u`` (n), response
noise (n x 3), noise inputs (n x 4).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ValidationError

T_RANGE = (np.pi, 3 * np.pi)
U_RANGE = (0.0, 21.0)
# covariance 0.5 I per coordinate
DEFAULT_NOISE_SD = float(np.sqrt(0.5))


@dataclass(frozen=True)
class SwissRoll:
    t: np.ndarray
    u: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Y_clean: np.ndarray

    @property
    def latents(self) -> np.ndarray:
        return np.column_stack([self.t, self.u])


def _unit_scale(v: np.ndarray) -> np.ndarray:
    c = v - v.mean()
    m = np.max(np.abs(c))
    return c / m if m > 0 else c


def square_to_disk(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map points of ``[-1, 1]^2`` into the closed unit disk."""
    return a * np.sqrt(1.0 - 0.5 * b * b), b * np.sqrt(1.0 - 0.5 * a * a)


def gen_swiss_roll(n: int, noise_sd: float = DEFAULT_NOISE_SD, seed: int = 0) -> SwissRoll:
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if noise_sd < 0:
        raise ValidationError(f"noise_sd must be >= 0, got {noise_sd}")
    rng = np.random.Generator(np.random.PCG64(seed))
    t = rng.uniform(*T_RANGE, size=n)
    u = rng.uniform(*U_RANGE, size=n)
    eps = rng.normal(0.0, 1.0, size=(n, 3)) * noise_sd
    extra = rng.normal(0.0, 1.0, size=(n, 4))
    y_clean = np.column_stack([t * np.cos(t), u, t * np.sin(t)])
    x1, x2 = square_to_disk(_unit_scale(t), _unit_scale(u))
    X = np.column_stack([x1, x2, extra])
    return SwissRoll(t=t, u=u, X=X, Y=y_clean + eps, Y_clean=y_clean)


def radial_error(y_pred, t_true):
    """Signed radius error ``sqrt(y1^2 + y3^2) - t`` (negative: radius too small).

    Accepts a single 3-vector or an (n, 3) array with matching ``t_true``.
    """
    y = np.asarray(y_pred, dtype=np.float64)
    r = np.hypot(y[..., 0], y[..., 2])
    return r - np.asarray(t_true, dtype=np.float64)
