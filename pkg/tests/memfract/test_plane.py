import json

import pytest
from pydantic import ValidationError

from memfract import plane
from memfract.errors import DomainError
from memfract.fraccalc import FracOrderPair


def _write_lattice(path, elements, triangles):
    path.write_text(json.dumps({"name": "custom", "elements": elements, "triangles": triangles}))
    return path


_CORNER_ELEMENTS = [
    {"id": "A", "label": "origin", "alpha1": 0, "alpha2": 0},
    {"id": "B", "label": "right", "alpha1": 1, "alpha2": 0},
    {"id": "C", "label": "top", "alpha1": 0, "alpha2": 1},
]


@pytest.mark.parametrize(
    "alpha1, alpha2, triangle, labels",
    [
        (1.441, 0.154, "T1", ["memcapacitor", "negative-resistor", "capacitor"]),
        (1.972, 1.483, "T2", ["resistor", "capacitor", "memristor"]),
        (0.172, 0.055, "T3", ["memristor", "memcapacitor", "2nd-order memristor"]),
    ],
)
def test_classify_should_place_measured_orders_in_their_triangle(alpha1, alpha2, triangle, labels):
    result = plane.classify(FracOrderPair(alpha1=alpha1, alpha2=alpha2))

    assert result.containing_triangle.name == triangle
    assert result.containing_triangle.labels == labels
    assert sum(result.containing_triangle.barycentric) == pytest.approx(1.0)
    assert min(result.containing_triangle.barycentric) >= 0


def test_classify_of_orders_one_should_be_nearest_to_the_resistor():
    result = plane.classify(FracOrderPair(alpha1=1.0, alpha2=1.0))

    assert result.nearest_label == "resistor"
    assert result.nearest_elements[0].distance == 0.0
    assert len(result.nearest_elements) == 9
    distances = [element.distance for element in result.nearest_elements]
    assert distances == sorted(distances)


def test_classify_on_a_shared_edge_should_pick_the_first_listed_triangle():
    # (0.5, 0.5) lies on the edge shared by T3 and T4
    result = plane.classify(FracOrderPair(alpha1=0.5, alpha2=0.5))

    assert result.containing_triangle.name == "T3"


def test_classify_outside_the_plane_should_fail():
    with pytest.raises(DomainError):
        plane.classify(FracOrderPair.construct(alpha1=2.5, alpha2=0.0))


def test_classify_with_custom_lattice_should_use_its_labels(tmp_path):
    lattice_file = _write_lattice(
        tmp_path / "lattice.json", _CORNER_ELEMENTS, [{"name": "only", "vertices": ["A", "B", "C"]}]
    )
    lattice = plane.Lattice.load(lattice_file)

    result = plane.classify(FracOrderPair(alpha1=0.2, alpha2=0.1), lattice)

    assert result.containing_triangle.name == "only"
    assert result.nearest_label == "origin"
    assert result.containing_triangle.barycentric == pytest.approx((0.7, 0.2, 0.1))


def test_classify_of_orders_not_covered_by_the_lattice_should_fail(tmp_path):
    lattice_file = _write_lattice(
        tmp_path / "lattice.json", _CORNER_ELEMENTS, [{"name": "only", "vertices": ["A", "B", "C"]}]
    )

    with pytest.raises(DomainError, match="not covered"):
        plane.classify(FracOrderPair(alpha1=2.0, alpha2=2.0), plane.Lattice.load(lattice_file))


def test_lattice_with_degenerate_triangle_should_fail(tmp_path):
    elements = [*_CORNER_ELEMENTS, {"id": "D", "label": "far", "alpha1": 2, "alpha2": 0}]
    lattice_file = _write_lattice(
        tmp_path / "lattice.json", elements, [{"name": "flat", "vertices": ["A", "B", "D"]}]
    )

    with pytest.raises(ValidationError, match="degenerate"):
        plane.Lattice.load(lattice_file)


def test_lattice_with_unknown_node_should_fail(tmp_path):
    lattice_file = _write_lattice(
        tmp_path / "lattice.json", _CORNER_ELEMENTS, [{"name": "bad", "vertices": ["A", "B", "Z"]}]
    )

    with pytest.raises(ValidationError, match="unknown nodes"):
        plane.Lattice.load(lattice_file)


def test_default_lattice_should_cover_the_whole_plane():
    lattice = plane.Lattice.load()

    assert len(lattice.triangles) == 8
    for alpha1, alpha2 in [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (2.0, 2.0), (0.3, 1.9)]:
        plane.classify(FracOrderPair(alpha1=alpha1, alpha2=alpha2), lattice)
