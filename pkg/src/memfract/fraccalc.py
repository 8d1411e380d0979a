import logging
import math
from typing import Callable, Union

import numpy as np
from numpy.polynomial import polynomial
from pydantic import validator
from scipy import special

from memfract import consts
from memfract.errors import DomainError, InputError, PoleError, SingularityError
from memfract.models import FrozenModel
from memfract.polyfit import AnyPolyModel, PiecewisePolyModel, PolyModel

logger = logging.getLogger(__name__)

TimeLike = Union[float, np.ndarray]


class FracOrderPair(FrozenModel):
    alpha1: float
    alpha2: float

    @validator("alpha1", "alpha2")
    def _inside_plane(cls, value: float) -> float:
        if not 0.0 <= value <= consts.ALPHA_MAX:
            raise ValueError(f"order {value} outside [0, {consts.ALPHA_MAX}]")
        return float(value)

    @property
    def m1(self) -> int:
        return math.ceil(self.alpha1)

    @property
    def m2(self) -> int:
        return math.ceil(self.alpha2)

    def as_tuple(self) -> tuple[float, float]:
        return (self.alpha1, self.alpha2)

    def __str__(self) -> str:
        return f"({self.alpha1:g}, {self.alpha2:g})"


def gamma(x: float) -> float:
    if x <= 0 and float(x).is_integer():
        raise PoleError(f"gamma has a pole at {x}")
    return float(special.gamma(x))


def _check_order(alpha: float) -> None:
    if alpha < 0:
        raise InputError(f"order must be >= 0, got {alpha}")


def _is_integer_order(alpha: float) -> bool:
    return float(alpha).is_integer()


def rl_power(a: float, beta: float, alpha: float, t: TimeLike) -> TimeLike:
    """
    Riemann-Liouville derivative of a * t^beta with lower terminal 0:
    a * gamma(beta + 1) / gamma(beta - alpha + 1) * t^(beta - alpha).
    The reciprocal gamma vanishes at its poles, so those terms are exactly 0.
    """
    _check_order(alpha)
    if beta <= -1:
        raise InputError(f"beta must be > -1, got {beta}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("t must be > 0")
    values = a * special.gamma(beta + 1) * special.rgamma(beta - alpha + 1) * t_arr ** (beta - alpha)
    return values if t_arr.ndim else float(values)


def _rl_poly_unchecked(model: PolyModel, alpha: float, t: np.ndarray) -> np.ndarray:
    if _is_integer_order(alpha):
        return model.series.deriv(int(alpha))(t) if alpha else model(t)
    j = np.arange(model.degree + 1)
    weights = model.coefficients * special.gamma(j + 1) * special.rgamma(j + 1 - alpha)
    x = t / model.scale
    return polynomial.polyval(x, weights) * x ** (-alpha) * model.scale ** (-alpha)


def rl_poly(model: PolyModel, alpha: float, t: TimeLike) -> TimeLike:
    """
    Termwise power rule over the model's monomials, evaluated in the dilated
    variable x = t / scale. Integer orders take the classical derivative of the
    Chebyshev series.
    """
    _check_order(alpha)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("t must be > 0")
    if not model.contains(t_arr):
        raise DomainError(f"t outside the model domain {model.domain}")
    values = _rl_poly_unchecked(model, alpha, t_arr)
    return values if t_arr.ndim else float(values)


def vertex_guard(model: PiecewisePolyModel) -> float:
    return max(consts.VERTEX_GUARD_RTOL * model.domain[1], consts.VERTEX_GUARD_MIN)


def _memory_term(model: PiecewisePolyModel, alpha: float, t: np.ndarray) -> np.ndarray:
    # sum_j d_j sum_{k<=j} j!/(j-k)! X^(j-k) y^(k-alpha) / gamma(k+1-alpha),
    # d_j = a'_j - a_j, X = T/scale, y = (t-T)/scale
    scale = model.scale
    difference = model.piece2.coefficients - model.piece1.coefficients
    big_x = model.vertex_time / scale
    y = (t - model.vertex_time) / scale
    degree = model.degree
    inner = np.array(
        [
            sum(
                difference[j] * math.perm(j, k) * big_x ** (j - k)
                for j in range(k, degree + 1)
            )
            for k in range(degree + 1)
        ]
    )
    k = np.arange(degree + 1)
    weights = inner * special.rgamma(k + 1 - alpha)
    return polynomial.polyval(y, weights) * y ** (-alpha) * scale ** (-alpha)


def rl_piecewise(model: PiecewisePolyModel, alpha: float, t: TimeLike) -> TimeLike:
    """
    Riemann-Liouville derivative of the 2-piece polynomial with memory of piece 1.
    Before T only piece 1 contributes; after T the derivative of piece 1 over the
    whole [0, t] is corrected by the (t - T)^(k - alpha) terms of the coefficient
    differences between the pieces.
    """
    _check_order(alpha)
    t_arr = np.asarray(t, dtype=float)
    vertex = model.vertex_time
    if np.any(t_arr <= 0) or not model.contains(t_arr):
        raise DomainError(f"t must lie in (0, {model.domain[1]}]")
    near = np.abs(t_arr - vertex) < vertex_guard(model)
    if np.any(near):
        raise SingularityError(float(np.atleast_1d(t_arr)[np.atleast_1d(near)][0]), vertex, alpha)

    flat = np.atleast_1d(t_arr)
    values = np.empty_like(flat)
    before = flat < vertex
    values[before] = _rl_poly_unchecked(model.piece1, alpha, flat[before])
    after = flat[~before]
    if _is_integer_order(alpha):
        values[~before] = _rl_poly_unchecked(model.piece2, alpha, after)
    else:
        values[~before] = _rl_poly_unchecked(model.piece1, alpha, after) + _memory_term(
            model, alpha, after
        )
    return values.reshape(t_arr.shape) if t_arr.ndim else float(values[0])


def rl_derivative(model: AnyPolyModel, alpha: float, t: TimeLike) -> TimeLike:
    if isinstance(model, PiecewisePolyModel):
        return rl_piecewise(model, alpha, t)
    return rl_poly(model, alpha, t)


def gl_oracle(f: Callable[[np.ndarray], np.ndarray], alpha: float, t: float, h: float) -> float:
    """Grunwald-Letnikov sum of f over [0, t]; first-order accurate in h."""
    _check_order(alpha)
    if t <= 0:
        raise DomainError("t must be > 0")
    if h <= 0 or h > t / 100:
        raise InputError(f"step {h} must lie in (0, t/100] = (0, {t / 100}]")

    n = int(np.floor(t / h + 1e-9))
    k = np.arange(1, n + 1)
    weights = np.concatenate(([1.0], np.cumprod(1.0 - (alpha + 1.0) / k)))
    samples = f(np.maximum(t - np.arange(n + 1) * h, 0.0))
    return float(np.dot(weights, samples) / h**alpha)
