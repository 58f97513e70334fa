import numpy as np
import pytest

from d2dcache import (GeneratorParams, GlobalPopularity, ParameterError,
                      PreferenceMatrix, generate_preferences, global_popularity,
                      homogenize)
from d2dcache.preferences import zipf_distribution


def test_degenerate_mixing_rows_equal_zipf_base():
    prefs = generate_preferences(3, 10, GeneratorParams(zipf_exponent=0.8,
                                                        mixing_weight=1.0, seed=5))
    base = zipf_distribution(10, 0.8)
    for row in prefs.entries:
        assert np.array_equal(row, base)
    # entry m proportional to (m+1)^-0.8
    ranks = np.arange(1, 11) ** -0.8
    assert np.allclose(prefs.entries[0], ranks / ranks.sum())


def test_tv_distance_zero_at_full_mixing():
    prefs = generate_preferences(6, 30, GeneratorParams(mixing_weight=1.0, seed=2))
    base = zipf_distribution(30, 0.8)
    tv = 0.5 * np.abs(prefs.entries - base).sum(axis=1).max()
    assert tv == 0.0


def test_single_user_two_files_normalized():
    prefs = generate_preferences(1, 2, GeneratorParams(seed=9))
    assert prefs.entries.shape == (1, 2)
    assert abs(prefs.entries.sum() - 1.0) < 1e-9


def test_rows_independent_permutations_at_zero_mixing():
    params = GeneratorParams(mixing_weight=0.0, rank_permutation_strength=1.0, seed=3)
    prefs = generate_preferences(5, 40, params)
    base_sorted = np.sort(zipf_distribution(40, params.zipf_exponent))
    for row in prefs.entries:
        assert np.allclose(np.sort(row), base_sorted)
    assert not np.allclose(prefs.entries[0], prefs.entries[1])


def test_seed_reproducibility():
    params = GeneratorParams(seed=77)
    a = generate_preferences(8, 25, params)
    b = generate_preferences(8, 25, params)
    assert np.array_equal(a.entries, b.entries)
    c = generate_preferences(8, 25, GeneratorParams(seed=78))
    assert not np.array_equal(a.entries, c.entries)


def test_paper_scale_generation_row_average_is_distribution():
    prefs = generate_preferences(20000, 1000, GeneratorParams(seed=0))
    pop = global_popularity(prefs)
    assert abs(pop.probs.sum() - 1.0) < 1e-9
    assert np.all(pop.probs >= 0)


def test_global_popularity_symmetry_and_identity():
    two = PreferenceMatrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert np.allclose(global_popularity(two).probs, [0.5, 0.5])
    one = PreferenceMatrix(np.array([[0.3, 0.7]]))
    assert np.array_equal(global_popularity(one).probs, one.entries[0])


def test_global_popularity_sums_to_one(rng):
    prefs = PreferenceMatrix(rng.dirichlet(np.ones(12), size=9))
    assert abs(global_popularity(prefs).probs.sum() - 1.0) < 1e-9


def test_homogenize_examples_and_roundtrip():
    pop = GlobalPopularity(np.array([0.7, 0.3]))
    prefs = homogenize(pop, 2)
    assert np.array_equal(prefs.entries, [[0.7, 0.3], [0.7, 0.3]])
    assert np.array_equal(homogenize(pop, 1).entries[0], pop.probs)
    back = global_popularity(homogenize(pop, 5))
    assert np.abs(back.probs - pop.probs).max() < 1e-12


def test_csv_roundtrip(tmp_path, rng):
    prefs = PreferenceMatrix(rng.dirichlet(np.ones(6), size=4))
    path = tmp_path / "prefs.csv"
    prefs.to_csv(path)
    again = PreferenceMatrix.from_csv(path)
    assert np.array_equal(prefs.entries, again.entries)


def test_parameter_errors():
    with pytest.raises(ParameterError):
        generate_preferences(0, 5, GeneratorParams())
    with pytest.raises(ParameterError):
        generate_preferences(2, 1, GeneratorParams())
    with pytest.raises(ParameterError):
        GeneratorParams(zipf_exponent=0.0)
    with pytest.raises(ParameterError):
        GeneratorParams(mixing_weight=1.5)
    with pytest.raises(ParameterError):
        PreferenceMatrix(np.array([[0.5, 0.4]]))
