import math

import numpy as np
import pytest

from qvipower.oracles import (bisect, ee_optimum_golden, golden_section_max, grid_best_response,
                              simplex_grid_projection, waterfill_bisection)


def test_bisect_finds_root():
    assert bisect(lambda x: 2.0 - x * x, 0.0, 2.0) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_waterfill_bisection_closed_form():
    np.testing.assert_allclose(waterfill_bisection(np.array([0.1, 0.3]), 1.0), [0.6, 0.4], atol=1e-12)
    assert waterfill_bisection(np.array([0.1, np.inf]), 1.0).tolist() == pytest.approx([1.0, 0.0])
    assert waterfill_bisection(np.array([0.5]), 0.0).tolist() == [0.0]


def test_golden_section_on_unit_link():
    s = golden_section_max(lambda s: math.log1p(s) / (1 + s), 0.0, 10.0)
    assert s == pytest.approx(math.e - 1, abs=1e-6)
    s, val = ee_optimum_golden([1.0], 1.0)
    assert val == pytest.approx(1 / math.e, abs=1e-12)


def test_grids():
    np.testing.assert_allclose(simplex_grid_projection([0.8, 0.4], 1.0, steps=10), [0.7, 0.3])
    x, val = grid_best_response([0.1, 0.3], 1.0, steps=10)
    np.testing.assert_allclose(x, [0.6, 0.4])
    assert val == pytest.approx(math.log(7) + math.log(7 / 3))
    with pytest.raises(ValueError):
        grid_best_response([1.0, 1.0, 1.0], 1.0)
