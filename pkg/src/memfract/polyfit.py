import logging
from typing import Optional, Union

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import chebyshev as cheb
from pydantic import root_validator

from memfract import consts
from memfract.errors import (
    ConditioningError,
    DomainError,
    InputError,
    ShapeError,
    UnderdeterminedError,
)
from memfract.models import FloatArray, FrozenModel

logger = logging.getLogger(__name__)


class FitStats(FrozenModel):
    sse: float
    ssr: float
    sst: float
    r_squared: float

    @root_validator(skip_on_failure=True)
    def _consistent_sums(cls, values):
        if not 0.0 <= values["r_squared"] <= 1.0:
            raise ValueError("r_squared must lie in [0, 1]")
        total = values["sse"] + values["ssr"]
        if abs(values["sst"] - total) > 1e-9 * max(abs(total), 1e-300):
            raise ValueError("sst must equal sse + ssr")
        return values

    @classmethod
    def from_sums(cls, sse: float, ssr: float) -> "FitStats":
        sst = sse + ssr
        return cls(sse=sse, ssr=ssr, sst=sst, r_squared=ssr / sst if sst else 1.0)


class PolyModel(FrozenModel):
    """
    Polynomial on a time domain, held in two bases:
    the Chebyshev series over the domain used for fitting and evaluation, and
    ascending power coefficients in the dilated variable x = t / scale. The dilation
    keeps t = 0 at x = 0 so the power form can feed the fractional derivatives,
    whose lower terminal is 0.
    """

    chebyshev: FloatArray
    domain: tuple[float, float]
    scale: float
    coefficients: FloatArray
    power_basis_error: float = 0.0

    @root_validator(skip_on_failure=True)
    def _well_formed(cls, values):
        lo, hi = values["domain"]
        if not hi > lo:
            raise ValueError(f"degenerate domain {values['domain']}")
        if values["scale"] <= 0:
            raise ValueError("scale must be positive")
        if len(values["chebyshev"]) != len(values["coefficients"]):
            raise ValueError("both bases must hold the same degree")
        if len(values["coefficients"]) == 0:
            raise ValueError("a polynomial needs at least one coefficient")
        return values

    @classmethod
    def from_chebyshev(
        cls, chebyshev: np.ndarray, domain: tuple[float, float], scale: float
    ) -> "PolyModel":
        series = Chebyshev(chebyshev, domain=list(domain))
        power = series.convert(kind=Polynomial, domain=[0.0, scale], window=[0.0, 1.0])
        coefficients = np.zeros(len(chebyshev))
        coefficients[: len(power.coef)] = power.coef
        return cls(
            chebyshev=chebyshev,
            domain=domain,
            scale=scale,
            coefficients=coefficients,
            power_basis_error=_power_basis_error(series, coefficients, domain, scale),
        )

    @classmethod
    def from_power_coefficients(
        cls,
        coefficients: Union[list[float], np.ndarray],
        domain: tuple[float, float],
        scale: float = 1.0,
    ) -> "PolyModel":
        """Model from ascending power coefficients in x = t / scale."""
        coefficients = np.asarray(coefficients, dtype=float)
        power = Polynomial(coefficients, domain=[0.0, scale], window=[0.0, 1.0])
        series = power.convert(kind=Chebyshev, domain=list(domain))
        chebyshev = np.zeros(len(coefficients))
        chebyshev[: len(series.coef)] = series.coef
        return cls(
            chebyshev=chebyshev,
            domain=domain,
            scale=scale,
            coefficients=coefficients,
            power_basis_error=_power_basis_error(series, coefficients, domain, scale),
        )

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def series(self) -> Chebyshev:
        return Chebyshev(self.chebyshev, domain=list(self.domain))

    @property
    def raw_coefficients(self) -> np.ndarray:
        """Ascending coefficients of powers of t itself."""
        return self.coefficients / self.scale ** np.arange(self.degree + 1)

    def __call__(self, t):
        return self.series(t)

    def evaluate_power(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t) / self.scale, self.coefficients)

    def antiderivative(self) -> "PolyModel":
        # integration constant 0 at t = 0 in both bases
        j = np.arange(self.degree + 1)
        coefficients = np.concatenate(([0.0], self.scale * self.coefficients / (j + 1)))
        chebyshev = self.series.integ(lbnd=0.0).coef
        return self._with(chebyshev, coefficients)

    def derivative(self) -> "PolyModel":
        if self.degree == 0:
            return self._with(np.zeros(1), np.zeros(1))
        j = np.arange(1, self.degree + 1)
        coefficients = self.coefficients[1:] * j / self.scale
        chebyshev = self.series.deriv().coef
        return self._with(chebyshev, coefficients)

    def contains(self, t) -> bool:
        lo, hi = self.domain
        slack = consts.DOMAIN_RTOL * (hi - lo)
        t = np.asarray(t)
        return bool(np.all((t >= lo - slack) & (t <= hi + slack)))

    def _with(self, chebyshev: np.ndarray, coefficients: np.ndarray) -> "PolyModel":
        padded = np.zeros(len(coefficients))
        padded[: len(chebyshev)] = chebyshev[: len(coefficients)]
        return PolyModel(
            chebyshev=padded,
            domain=self.domain,
            scale=self.scale,
            coefficients=coefficients,
            power_basis_error=_power_basis_error(
                Chebyshev(padded, domain=list(self.domain)),
                coefficients,
                self.domain,
                self.scale,
            ),
        )


class PiecewisePolyModel(FrozenModel):
    piece1: PolyModel
    piece2: PolyModel
    vertex_time: float

    @root_validator(skip_on_failure=True)
    def _pieces_abut(cls, values):
        piece1, piece2, vertex = values["piece1"], values["piece2"], values["vertex_time"]
        if not np.isclose(piece1.domain[1], vertex) or not np.isclose(
            piece2.domain[0], vertex
        ):
            raise ValueError("piece domains must abut at the vertex time")
        if piece1.degree != piece2.degree:
            raise ValueError("both pieces must have the same degree")
        if piece1.scale != piece2.scale:
            raise ValueError("both pieces must share the power-basis scale")
        return values

    @property
    def domain(self) -> tuple[float, float]:
        return (self.piece1.domain[0], self.piece2.domain[1])

    @property
    def degree(self) -> int:
        return self.piece1.degree

    @property
    def scale(self) -> float:
        return self.piece1.scale

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= self.vertex_time, self.piece1(t), self.piece2(t))

    def antiderivative(self) -> "PiecewisePolyModel":
        """Each piece integrated from t = 0, as the closed-form memory terms expect."""
        return PiecewisePolyModel(
            piece1=self.piece1.antiderivative(),
            piece2=self.piece2.antiderivative(),
            vertex_time=self.vertex_time,
        )

    def jump(self) -> float:
        """Discontinuity piece2(T) - piece1(T)."""
        return float(self.piece2(self.vertex_time) - self.piece1(self.vertex_time))

    def flux_jump(self) -> float:
        """Discontinuity at T of the antiderivative."""
        return self.antiderivative().jump()

    def contains(self, t) -> bool:
        lo, hi = self.domain
        slack = consts.DOMAIN_RTOL * (hi - lo)
        t = np.asarray(t)
        return bool(np.all((t >= lo - slack) & (t <= hi + slack)))


AnyPolyModel = Union[PolyModel, PiecewisePolyModel]


def _power_basis_error(
    series: Chebyshev,
    coefficients: np.ndarray,
    domain: tuple[float, float],
    scale: float,
) -> float:
    t = np.linspace(domain[0], domain[1], 201)
    reference = series(t)
    expanded = np.polynomial.polynomial.polyval(t / scale, coefficients)
    magnitude = np.max(np.abs(reference))
    if magnitude == 0:
        return float(np.max(np.abs(expanded)))
    return float(np.max(np.abs(expanded - reference)) / magnitude)


def fit_stats(y: np.ndarray, y_hat: np.ndarray) -> FitStats:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ShapeError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    if len(y) < 2:
        raise InputError("fit statistics need at least 2 samples")

    sse = float(np.sum((y - y_hat) ** 2))
    ssr = float(np.sum((y_hat - np.mean(y)) ** 2))
    if np.ptp(y) == 0:
        # zero-variance target: 1 for a perfect fit of the constant, 0 otherwise
        tolerance = (1e-9 * max(float(np.max(np.abs(y))), 1e-300)) ** 2 * len(y)
        r_squared = 1.0 if sse <= tolerance else 0.0
        return FitStats(sse=sse, ssr=ssr, sst=sse + ssr, r_squared=r_squared)
    return FitStats.from_sums(sse, ssr)


def fit_poly(
    t: np.ndarray,
    y: np.ndarray,
    degree: int,
    scale: Optional[float] = None,
    domain: Optional[tuple[float, float]] = None,
) -> tuple[PolyModel, FitStats]:
    """
    Least-squares polynomial fit, solved in the Chebyshev basis over the domain.
    scale sets the dilation of the power-basis coefficients (default: domain end).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ShapeError(f"t and y must be aligned 1-D arrays: {t.shape} vs {y.shape}")
    if degree < 0:
        raise InputError(f"degree must be >= 0, got {degree}")
    if len(t) <= degree:
        raise UnderdeterminedError(
            f"{len(t)} samples cannot determine a degree-{degree} polynomial"
        )
    if np.any(np.diff(t) <= 0):
        raise InputError("t must be strictly increasing")

    domain = domain or (float(t[0]), float(t[-1]))
    scale = scale or float(max(abs(domain[0]), abs(domain[1])))
    window_t = 2.0 * (t - domain[0]) / (domain[1] - domain[0]) - 1.0
    vander = cheb.chebvander(window_t, degree)
    chebyshev, _, rank, singular = np.linalg.lstsq(vander, y, rcond=consts.RANK_RTOL)
    if rank < degree + 1:
        raise ConditioningError(
            f"rank {rank} < {degree + 1} (smallest/largest singular value "
            f"{singular[-1] / singular[0]:.3e})"
        )

    model = PolyModel.from_chebyshev(chebyshev, domain, scale)
    if model.power_basis_error > consts.POWER_BASIS_WARN:
        logger.warning(
            "degree %d power-basis expansion deviates by %.3e (relative); "
            "evaluation uses the Chebyshev basis",
            degree,
            model.power_basis_error,
        )
    stats = fit_stats(y, model(t))
    logger.debug("degree %d fit on %s: R^2=%s", degree, domain, stats.r_squared)
    return model, stats


def fit_piecewise(
    t: np.ndarray, y: np.ndarray, vertex_time: float, degree: int
) -> tuple[PiecewisePolyModel, tuple[FitStats, FitStats]]:
    """Independent fits on [t0, T] and (T, t_end], sharing the power-basis scale t_end."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ShapeError(f"t and y must be aligned 1-D arrays: {t.shape} vs {y.shape}")
    if not t[0] < vertex_time < t[-1]:
        raise DomainError(f"vertex time {vertex_time} not inside ({t[0]}, {t[-1]})")

    scale = float(t[-1])
    before = t <= vertex_time
    for side, mask in (("before", before), ("after", ~before)):
        if mask.sum() <= degree:
            raise UnderdeterminedError(
                f"{mask.sum()} samples {side} T cannot determine a degree-{degree} piece"
            )

    piece1, stats1 = fit_poly(
        t[before], y[before], degree, scale=scale, domain=(float(t[0]), vertex_time)
    )
    piece2, stats2 = fit_poly(
        t[~before], y[~before], degree, scale=scale, domain=(vertex_time, scale)
    )
    model = PiecewisePolyModel(piece1=piece1, piece2=piece2, vertex_time=vertex_time)
    return model, (stats1, stats2)


def antiderivative(model: AnyPolyModel) -> AnyPolyModel:
    return model.antiderivative()
