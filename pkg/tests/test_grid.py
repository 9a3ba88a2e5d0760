import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mimetic_fd.grid import (
    CellField,
    FaceField,
    GridMismatchError,
    build_grid,
    inner_product_cells,
    inner_product_faces,
    total_cells,
    total_faces,
)


def test_unit_grid_weights():
    g = build_grid(1, 4, 4.0)
    assert g.h == 1.0
    np.testing.assert_array_equal(g.cell_weights, np.ones(4))
    np.testing.assert_array_equal(g.face_weights, np.ones(4))


def test_volume_sums_to_length():
    g = build_grid(1, 8, 1.0)
    assert g.h == 0.125
    assert g.cell_weights.sum() == 1.0


def test_two_dimensional_weights():
    g = build_grid(2, [3, 4], [3.0, 2.0])
    np.testing.assert_array_equal(g.cell_weights, np.full((3, 4), 0.5))
    assert g.cell_weights.sum() == 6.0
    assert g.face_shape == (2, 3, 4)
    assert g.n_face_dofs == 24


@pytest.mark.parametrize("n", [0, 1, 2, 2.5])
def test_rejects_degenerate_cell_counts(n):
    with pytest.raises(ValueError):
        build_grid(1, n, 1.0)


@pytest.mark.parametrize("length", [0.0, -1.0, float("inf")])
def test_rejects_bad_lengths(length):
    with pytest.raises(ValueError):
        build_grid(1, 4, length)


def test_rejects_three_dimensions():
    with pytest.raises(ValueError):
        build_grid(3, 4, 1.0)


def test_coordinates_are_staggered():
    g = build_grid(1, 4, 2.0)
    np.testing.assert_allclose(g.cell_centers()[0], [0.25, 0.75, 1.25, 1.75])
    np.testing.assert_allclose(g.face_centers()[0], [0.0, 0.5, 1.0, 1.5])


def test_inner_products_of_ones():
    g = build_grid(1, 4, 4.0)
    assert inner_product_cells(g.cell_ones(), g.cell_ones()) == 4.0
    assert inner_product_faces(g.face_ones(), g.face_ones()) == 4.0


def test_inner_product_single_entry_pick():
    g = build_grid(1, 4, 4.0)
    assert inner_product_cells(g.cells([1, 2, 3, 4]), g.cells([1, 0, 0, 0])) == 1.0


def test_inner_product_faces_of_squares():
    g = build_grid(1, 4, 4.0)
    a = g.faces([1, -1, 1, -1])
    assert inner_product_faces(a, a) == 4.0


def test_two_cell_grid_rejected():
    with pytest.raises(ValueError):
        build_grid(1, 2, 2.0)


def test_totals():
    g = build_grid(1, 4, 4.0)
    assert total_cells(g.cells([1, 1, 1, 1])) == 4.0
    assert total_cells(g.cells([2, -2, 0, 0])) == 0.0
    assert total_faces(g.faces([1, 2, 3, 4])) == 10.0


def test_total_matches_brute_force_sum():
    rng = np.random.default_rng(3)
    g = build_grid(1, 17, 2.3)
    vals = rng.normal(size=17)
    brute = sum(float(x) * (2.3 / 17) for x in vals)
    assert total_cells(g.cells(vals)) == pytest.approx(brute, rel=1e-14, abs=1e-15)


def test_grid_mismatch_detected():
    a = build_grid(1, 4, 4.0).cell_ones()
    b = build_grid(1, 4, 8.0).cell_ones()
    with pytest.raises(GridMismatchError):
        inner_product_cells(a, b)
    with pytest.raises(GridMismatchError):
        a + b


def test_cell_and_face_fields_do_not_mix():
    g = build_grid(1, 4, 4.0)
    with pytest.raises(TypeError):
        g.cell_ones() + g.face_ones()
    with pytest.raises(TypeError):
        inner_product_faces(g.cell_ones(), g.cell_ones())


def test_fields_are_immutable_copies():
    g = build_grid(1, 4, 4.0)
    src = np.arange(4.0)
    f = CellField(g, src)
    src[0] = 99.0
    assert f.values[0] == 0.0
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(AttributeError):
        f.values = np.zeros(4)


def test_shape_and_finiteness_validated():
    g = build_grid(1, 4, 4.0)
    with pytest.raises(ValueError):
        CellField(g, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        FaceField(g, [1.0, np.nan, 0.0, 0.0])


def test_field_arithmetic():
    g = build_grid(1, 3, 3.0)
    a, b = g.cells([1, 2, 3]), g.cells([2, 2, 2])
    np.testing.assert_array_equal((a + b).values, [3, 4, 5])
    np.testing.assert_array_equal((a - b).values, [-1, 0, 1])
    np.testing.assert_array_equal((a * b).values, [2, 4, 6])
    np.testing.assert_array_equal((2 * a).values, [2, 4, 6])
    np.testing.assert_array_equal((a / b).values, [0.5, 1, 1.5])
    np.testing.assert_array_equal((-a).values, [-1, -2, -3])
    np.testing.assert_array_equal(a.map(np.square).values, [1, 4, 9])


sizes = st.integers(3, 40)
lengths = st.floats(0.1, 100.0)


@given(sizes, lengths, st.integers(0, 2**32 - 1))
def test_inner_product_is_symmetric_and_positive(n, length, seed):
    g = build_grid(1, n, length)
    rng = np.random.default_rng(seed)
    a, b = g.cells(rng.normal(size=n)), g.cells(rng.normal(size=n))
    assert inner_product_cells(a, b) == pytest.approx(inner_product_cells(b, a), rel=1e-15)
    assert inner_product_cells(a, a) > 0
    assert total_cells(a) == pytest.approx(inner_product_cells(g.cell_ones(), a), rel=1e-15)


@given(st.tuples(sizes, sizes), st.tuples(lengths, lengths))
def test_weights_sum_to_domain_volume(n, length):
    g = build_grid(2, n, length)
    assert g.cell_weights.sum() == pytest.approx(length[0] * length[1], rel=1e-12)
    assert g.face_weights.sum() == pytest.approx(2 * length[0] * length[1], rel=1e-12)
