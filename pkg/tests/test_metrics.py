import numpy as np
import pytest
from scipy.spatial.distance import pdist

from polyembed import datasets, fit_nppe
from polyembed.errors import ConfigError, DegenerateVariance, DimensionMismatch
from polyembed.metrics import DISTANCE, ENTRIES, residual_variance, time_transform

from oracles import pearson_correlation


def test_identical_inputs_give_zero():
    rng = np.random.default_rng(40)
    z = rng.normal(size=(2, 30))
    for variant in (DISTANCE, ENTRIES):
        assert residual_variance(z, z, variant=variant).rho == pytest.approx(0.0, abs=1e-12)


def test_affine_image_gives_zero():
    rng = np.random.default_rng(41)
    z = rng.normal(size=(2, 25))
    y = 3.0 * z + 5.0
    assert residual_variance(y, z, variant=DISTANCE).rho == pytest.approx(0.0, abs=1e-12)
    assert residual_variance(y, z, variant=ENTRIES).rho == pytest.approx(0.0, abs=1e-12)
    # The distance variant is additionally immune to per-coordinate shifts.
    shifted = 3.0 * z + np.array([[5.0], [-2.0]])
    assert residual_variance(shifted, z, variant=DISTANCE).rho == pytest.approx(0.0, abs=1e-12)


def test_matches_textbook_pearson_oracle():
    rng = np.random.default_rng(42)
    y = rng.normal(size=(2, 10))
    z = rng.normal(size=(2, 10))
    report = residual_variance(y, z, variant=DISTANCE)
    r = pearson_correlation(pdist(y.T).tolist(), pdist(z.T).tolist())
    assert report.rho == pytest.approx(1.0 - r * r, abs=1e-12)


def test_rotation_invariance_of_distance_variant():
    rng = np.random.default_rng(43)
    z = rng.normal(size=(2, 40))
    y = rng.normal(size=(2, 40))
    theta = 0.7
    q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    base = residual_variance(y, z, variant=DISTANCE).rho
    rotated = residual_variance(q @ y + 1.5, z, variant=DISTANCE).rho
    assert rotated == pytest.approx(base, abs=1e-10)


def test_column_permutation_symmetry():
    rng = np.random.default_rng(44)
    y = rng.normal(size=(2, 20))
    z = rng.normal(size=(2, 20))
    perm = rng.permutation(20)
    base = residual_variance(y, z).rho
    permuted = residual_variance(y[:, perm], z[:, perm]).rho
    assert permuted == pytest.approx(base, abs=1e-12)


def test_entries_variant_sign_alignment():
    rng = np.random.default_rng(45)
    z = rng.normal(size=(2, 30))
    y = z.copy()
    y[0] = -y[0]
    assert residual_variance(y, z, variant=ENTRIES).rho == pytest.approx(0.0, abs=1e-12)


def test_entries_variant_needs_matching_rows():
    with pytest.raises(DimensionMismatch):
        residual_variance(np.zeros((2, 5)), np.ones((3, 5)), variant=ENTRIES)


def test_distance_variant_allows_different_row_counts():
    rng = np.random.default_rng(46)
    y = rng.normal(size=(3, 15))
    z = rng.normal(size=(2, 15))
    assert 0.0 <= residual_variance(y, z, variant=DISTANCE).rho <= 1.0


def test_sample_count_mismatch():
    with pytest.raises(DimensionMismatch):
        residual_variance(np.zeros((2, 5)), np.zeros((2, 6)))


def test_degenerate_variance():
    y = np.zeros((2, 10))
    z = np.random.default_rng(47).normal(size=(2, 10))
    with pytest.raises(DegenerateVariance):
        residual_variance(y, z, variant=DISTANCE)


def test_noise_worsens_rho():
    rng = np.random.default_rng(48)
    z = rng.normal(size=(2, 200))
    noisy = z + 2.0 * rng.normal(size=(2, 200))
    clean = residual_variance(z, z).rho
    assert residual_variance(noisy, z).rho > clean


def test_rho_clamped_to_unit_interval():
    rng = np.random.default_rng(49)
    y = rng.normal(size=(2, 50))
    z = rng.normal(size=(2, 50))
    rho = residual_variance(y, z).rho
    assert 0.0 <= rho <= 1.0


def test_unknown_variant():
    with pytest.raises(ValueError):
        residual_variance(np.eye(2), np.eye(2), variant="spearman")


@pytest.fixture(scope="module")
def model():
    sample = datasets.swiss_roll(150, seed=0)
    fitted, _ = fit_nppe(sample.x, k=8, p=2, m=2)
    return fitted


class TestTimeTransform:
    def test_report_structure(self, model):
        pool = datasets.swiss_roll(1000, seed=1).x
        report = time_transform(model, pool, [100, 400, 1000], repeats=3)
        assert report.batch_sizes == [100, 400, 1000]
        assert len(report.seconds) == 3
        assert all(t >= 0 for t in report.seconds)
        assert report.method == "nppe"
        np.testing.assert_allclose(
            report.per_sample, np.asarray(report.seconds) / np.array([100, 400, 1000])
        )

    def test_zero_batch_is_measured(self, model):
        pool = datasets.swiss_roll(50, seed=2).x
        report = time_transform(model, pool, [0, 50], repeats=2)
        assert report.seconds[0] >= 0.0

    def test_batches_must_increase(self, model):
        pool = datasets.swiss_roll(50, seed=3).x
        with pytest.raises(ConfigError):
            time_transform(model, pool, [50, 50], repeats=1)

    def test_batch_larger_than_pool(self, model):
        pool = datasets.swiss_roll(50, seed=4).x
        with pytest.raises(ConfigError):
            time_transform(model, pool, [10, 60], repeats=1)

    def test_repeats_validated(self, model):
        pool = datasets.swiss_roll(50, seed=5).x
        with pytest.raises(ConfigError):
            time_transform(model, pool, [10], repeats=0)
