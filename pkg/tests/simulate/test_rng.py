import numpy as np
import pytest

from membrane.simulate.rng import chunk_generator, chunk_plan, sibling_seed


def test_chunk_plan_covers_all_paths():
    plan = chunk_plan(1050, 500)
    assert [(c.index, c.start, c.stop) for c in plan] == [(0, 0, 500), (1, 500, 1000), (2, 1000, 1050)]
    assert sum(c.size for c in plan) == 1050
    np.testing.assert_array_equal(plan[2].path_ids, np.arange(1000, 1050))


@pytest.mark.parametrize("n, size", [(0, 10), (10, 0)])
def test_chunk_plan_rejects_empty(n, size):
    with pytest.raises(ValueError):
        chunk_plan(n, size)


def test_streams_are_keyed_by_seed_and_chunk():
    a = chunk_generator(7, 3).standard_normal(5)
    b = chunk_generator(7, 3).standard_normal(5)
    c = chunk_generator(7, 4).standard_normal(5)
    d = chunk_generator(8, 3).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)


def test_large_seeds_are_accepted():
    chunk_generator(2**64 - 1, 0).random()


def test_sibling_seed_is_reproducible_and_distinct():
    seed = sibling_seed(7)
    assert seed == sibling_seed(7)
    assert seed != sibling_seed(7, tag=2)
    assert 0 <= seed < 2**64
    a = chunk_generator(7, 0).standard_normal(5)
    b = chunk_generator(seed, 0).standard_normal(5)
    assert not np.allclose(a, b)
