import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pkg_resources
from pydantic import BaseModel, root_validator

from memfract import consts
from memfract.errors import DomainError
from memfract.fraccalc import FracOrderPair

logger = logging.getLogger(__name__)


class LatticeElement(BaseModel):
    id: str
    label: str
    alpha1: float
    alpha2: float

    @property
    def point(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2])


class LatticeTriangle(BaseModel):
    name: str
    vertices: tuple[str, str, str]


class Lattice(BaseModel):
    name: str
    elements: list[LatticeElement]
    triangles: list[LatticeTriangle]

    @root_validator(skip_on_failure=True)
    def _triangles_reference_elements(cls, values):
        points = {element.id: element.point for element in values["elements"]}
        for triangle in values["triangles"]:
            unknown = [vertex for vertex in triangle.vertices if vertex not in points]
            if unknown:
                raise ValueError(f"triangle {triangle.name} references unknown nodes {unknown}")
            a, b, c = (points[vertex] for vertex in triangle.vertices)
            if np.linalg.det(np.column_stack((b - a, c - a))) == 0:
                raise ValueError(f"triangle {triangle.name} is degenerate")
        return values

    @classmethod
    def load(cls, lattice_file: Optional[Path] = None) -> "Lattice":
        if lattice_file is None:
            raw = pkg_resources.resource_string(__name__, "lattices/default_lattice.json")
        else:
            raw = Path(lattice_file).read_bytes()
        return cls.parse_obj(json.loads(raw))

    def element(self, element_id: str) -> LatticeElement:
        return next(element for element in self.elements if element.id == element_id)


class ContainingTriangle(BaseModel):
    name: str
    labels: list[str]
    vertices: list[tuple[float, float]]
    barycentric: tuple[float, float, float]


class NearestElement(BaseModel):
    label: str
    alpha1: float
    alpha2: float
    distance: float


class ClassificationResult(BaseModel):
    orders: FracOrderPair
    containing_triangle: ContainingTriangle
    nearest_elements: list[NearestElement]

    @property
    def nearest_label(self) -> str:
        return self.nearest_elements[0].label


def _barycentric(point: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    matrix = np.column_stack((b - a, c - a))
    l2, l3 = np.linalg.solve(matrix, point - a)
    return np.array([1.0 - l2 - l3, l2, l3])


def classify(orders: FracOrderPair, lattice: Optional[Lattice] = None) -> ClassificationResult:
    """
    Locate (alpha1, alpha2) on the memfractance plane: the first triangle of the
    lattice that contains the point, and the labelled nodes ranked by distance.
    """
    lattice = lattice or Lattice.load()
    point = np.array(orders.as_tuple())
    if np.any(point < 0) or np.any(point > consts.ALPHA_MAX):
        raise DomainError(f"orders {orders} outside [0, {consts.ALPHA_MAX}]^2")

    containing = None
    for triangle in lattice.triangles:
        elements = [lattice.element(vertex) for vertex in triangle.vertices]
        weights = _barycentric(point, *(element.point for element in elements))
        if np.all(weights >= -consts.BARYCENTRIC_TOL):
            containing = ContainingTriangle(
                name=triangle.name,
                labels=[element.label for element in elements],
                vertices=[(element.alpha1, element.alpha2) for element in elements],
                barycentric=tuple(float(w) for w in weights),
            )
            break
    if containing is None:
        raise DomainError(f"orders {orders} are not covered by lattice {lattice.name!r}")

    nearest = sorted(
        (
            NearestElement(
                label=element.label,
                alpha1=element.alpha1,
                alpha2=element.alpha2,
                distance=float(np.hypot(*(point - element.point))),
            )
            for element in lattice.elements
        ),
        key=lambda element: (element.distance, element.label, element.alpha1, element.alpha2),
    )
    logger.debug("orders %s in triangle %s", orders, containing.name)
    return ClassificationResult(
        orders=orders, containing_triangle=containing, nearest_elements=nearest
    )
