import json

import numpy as np
import pytest

from polyembed import datasets
from polyembed.embed import (
    fit_lle,
    fit_nppe,
    fit_npp,
    fit_onpp,
    lle_from_alignment,
    load_model,
    resolve_k,
    save_model,
    transform,
)
from polyembed.errors import (
    ConfigError,
    DegenerateSpectrum,
    DimensionMismatch,
    KTooLarge,
    ParseError,
    TooManyRequested,
)
from polyembed.features import HADAMARD, KRONECKER, expand_matrix
from polyembed.lle_weights import alignment_matrix, reconstruction_weights
from polyembed.metrics import residual_variance
from polyembed.neighbors import knn_graph

from oracles import generalized_eigh_by_inverse_sqrt, jacobi_eigh


def plane_grid(side=15):
    """A perfectly isotropic 2-D lattice: its own generating coordinates."""
    axis = np.linspace(-1.0, 1.0, side)
    u, v = np.meshgrid(axis, axis)
    return np.vstack([u.ravel(), v.ravel()])


def rebuild_pencil(x, model):
    feats = expand_matrix(x, model.lift) if hasattr(model, "lift") else x
    graph = knn_graph(x, model.k)
    weights = reconstruction_weights(x, graph, model.reg)
    import scipy.sparse

    i_minus_r = scipy.sparse.identity(x.shape[1], format="csr") - weights.to_sparse()
    e = i_minus_r @ feats.T
    a = e.T @ e
    a = 0.5 * (a + a.T)
    b = feats @ feats.T
    b = 0.5 * (b + b.T)
    b_prime = b + model.ridge * (np.trace(b) / b.shape[0]) * np.eye(b.shape[0])
    return a, b_prime


class TestNppe:
    def test_identity_manifold_recovered_exactly(self):
        x = plane_grid()
        model, result = fit_nppe(x, k=6, p=1, m=2)
        assert residual_variance(result.y, x).rho <= 1e-6

    def test_swiss_roll_beats_linear_baseline(self):
        sample = datasets.swiss_roll(600, seed=0)
        _, nppe = fit_nppe(sample.x, k=10, p=2, m=2)
        _, npp = fit_npp(sample.x, k=10, m=2)
        rho_nppe = residual_variance(nppe.y, sample.z).rho
        rho_npp = residual_variance(npp.y, sample.z).rho
        assert rho_nppe < rho_npp

    def test_constraint_satisfaction(self):
        sample = datasets.gaussian_bump(300, seed=1)
        for mode in (HADAMARD, KRONECKER):
            model, _ = fit_nppe(sample.x, k=8, p=2, mode=mode, m=2)
            _, b_prime = rebuild_pencil(sample.x, model)
            gram = model.coeffs.T @ b_prime @ model.coeffs
            assert np.max(np.abs(gram - np.eye(2))) <= 1e-6

    def test_objective_equals_eigenvalue_sum(self):
        sample = datasets.swiss_roll(250, seed=2)
        model, result = fit_nppe(sample.x, k=8, p=2, m=2)
        a, _ = rebuild_pencil(sample.x, model)
        objective = float(np.trace(model.coeffs.T @ a @ model.coeffs))
        total = float(result.eigenvalues.sum())
        assert objective == pytest.approx(total, rel=1e-6)

    def test_eigenvalues_ascending_and_nonnegative(self):
        sample = datasets.swiss_hole(300, seed=3)
        _, result = fit_nppe(sample.x, k=8, p=2, m=2)
        assert np.all(np.diff(result.eigenvalues) >= 0)
        assert np.all(result.eigenvalues >= -1e-10)

    def test_more_output_dims_than_input(self):
        # Polynomial lifting admits m > n, unlike the linear baselines.
        rng = np.random.default_rng(4)
        x = rng.normal(size=(2, 120))
        model, result = fit_nppe(x, k=6, p=2, m=3)
        assert result.y.shape == (3, 120)
        assert model.coeffs.shape == (4, 3)

    def test_sign_canonicalization(self):
        sample = datasets.swiss_roll(200, seed=5)
        _, result = fit_nppe(sample.x, k=8, p=2, m=2)
        deviations = result.y[:, 0] - result.y.mean(axis=1)
        assert np.all(deviations >= 0)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(6)
        sample = datasets.gaussian_bump(150, seed=6)
        perm = rng.permutation(150)
        _, base = fit_nppe(sample.x, k=7, p=2, m=2)
        _, shuffled = fit_nppe(sample.x[:, perm], k=7, p=2, m=2)
        np.testing.assert_allclose(
            shuffled.eigenvalues, base.eigenvalues, rtol=1e-9, atol=1e-14
        )
        for j in range(2):
            target = base.y[j, perm]
            delta = min(
                np.max(np.abs(shuffled.y[j] - target)),
                np.max(np.abs(shuffled.y[j] + target)),
            )
            assert delta <= 1e-6

    def test_rigid_motion_exact_for_degree_one(self):
        rng = np.random.default_rng(7)
        sample = datasets.swiss_roll(200, seed=7)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        moved = q @ sample.x + rng.normal(size=(3, 1))
        _, base = fit_nppe(sample.x, k=8, p=1, m=2)
        _, rotated = fit_nppe(moved, k=8, p=1, m=2)
        rho_base = residual_variance(base.y, sample.z).rho
        rho_rot = residual_variance(rotated.y, sample.z).rho
        assert rho_rot == pytest.approx(rho_base, abs=1e-8)

    def test_rigid_motion_robust_for_degree_two(self):
        rng = np.random.default_rng(8)
        sample = datasets.swiss_roll(400, seed=8)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        moved = q @ sample.x + rng.normal(size=(3, 1))
        _, base = fit_nppe(sample.x, k=10, p=2, m=2)
        _, rotated = fit_nppe(moved, k=10, p=2, m=2)
        rho_base = residual_variance(base.y, sample.z).rho
        rho_rot = residual_variance(rotated.y, sample.z).rho
        assert abs(rho_rot - rho_base) <= 2e-2

    def test_degenerate_spectrum_on_rank_deficient_lift(self):
        rng = np.random.default_rng(9)
        line = rng.normal(size=120)
        x = np.vstack([line, line])  # second coordinate duplicates the first
        with pytest.raises(DegenerateSpectrum, match="ridge|usable"):
            fit_nppe(x, k=5, p=1, m=2, center=False)

    def test_too_many_requested(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(2, 60))
        with pytest.raises(TooManyRequested):
            fit_nppe(x, k=5, p=1, m=3)

    def test_k_too_large(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(2, 10))
        with pytest.raises(KTooLarge):
            fit_nppe(x, k=10, p=1, m=1)


class TestEquivalence:
    def test_degree_one_hadamard_equals_npp_bitwise(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(3, 150))
        model_a, result_a = fit_nppe(x, k=8, p=1, mode=HADAMARD, m=2, center=False)
        model_b, result_b = fit_npp(x, k=8, m=2)
        assert np.array_equal(result_a.y, result_b.y)
        assert np.array_equal(result_a.eigenvalues, result_b.eigenvalues)
        assert np.array_equal(model_a.coeffs, model_b.projection)

    def test_degree_one_equivalence_across_random_cases(self):
        rng = np.random.default_rng(13)
        for trial in range(10):
            n = int(rng.integers(2, 6))
            n_samples = int(rng.integers(40, 300))
            m = min(2, n)
            x = rng.normal(size=(n, n_samples))
            _, a = fit_nppe(x, k=8, p=1, mode=HADAMARD, m=m, center=False)
            _, b = fit_npp(x, k=8, m=m)
            np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, rtol=1e-8)
            for j in range(m):
                delta = min(
                    np.max(np.abs(a.y[j] - b.y[j])), np.max(np.abs(a.y[j] + b.y[j]))
                )
                assert delta <= 1e-6


class TestNpp:
    def test_linear_subspace_matches_dense_pencil_oracle(self):
        rng = np.random.default_rng(14)
        q = rng.normal(size=(3, 2))
        x = q @ plane_grid(10)
        model, result = fit_npp(x, k=6, m=2)
        a, b_prime = rebuild_pencil(x, model)
        oracle_values, oracle_vectors = generalized_eigh_by_inverse_sqrt(a, b_prime)
        # The plane normal is a near-null direction of B whose embedding
        # coordinate is constant; discard it the way the fit does before
        # comparing against the dense solve.
        coords = oracle_vectors.T @ x
        variances = coords.var(axis=1)
        usable = oracle_values[variances >= 1e-10 * variances.mean()]
        np.testing.assert_allclose(result.eigenvalues, usable[:2], atol=1e-8)

    def test_full_rank_data_matches_dense_pencil_oracle(self):
        rng = np.random.default_rng(34)
        x = rng.normal(size=(3, 80))
        model, result = fit_npp(x, k=6, m=2)
        a, b_prime = rebuild_pencil(x, model)
        oracle_values, _ = generalized_eigh_by_inverse_sqrt(a, b_prime)
        np.testing.assert_allclose(result.eigenvalues, oracle_values[:2], atol=1e-8)

    def test_line_in_r3_recovers_arclength(self):
        rng = np.random.default_rng(15)
        t = np.sort(rng.random(100))
        direction = np.array([[1.0], [2.0], [-0.5]])
        x = direction * t + np.array([[0.3], [-0.1], [0.2]])
        _, result = fit_npp(x, k=2, m=1)
        r = np.corrcoef(result.y[0], t)[0, 1]
        assert abs(r) >= 0.999

    def test_npp_constraint(self):
        sample = datasets.swiss_roll(250, seed=16)
        model, _ = fit_npp(sample.x, k=8, m=2)
        _, b_prime = rebuild_pencil(sample.x, model)
        gram = model.projection.T @ b_prime @ model.projection
        assert np.max(np.abs(gram - np.eye(2))) <= 1e-6


class TestOnpp:
    def test_orthonormal_projection(self):
        sample = datasets.gaussian_bump(250, seed=17)
        model, _ = fit_onpp(sample.x, k=8, m=2)
        gram = model.projection.T @ model.projection
        np.testing.assert_allclose(gram, np.eye(2), atol=1e-8)

    def test_matches_dense_eigensolver_oracle(self):
        rng = np.random.default_rng(18)
        x = rng.normal(size=(3, 40))
        model, result = fit_onpp(x, k=5, m=2)
        graph = knn_graph(x, 5)
        weights = reconstruction_weights(x, graph, model.reg)
        m_dense = alignment_matrix(weights).dense()
        a = x @ m_dense @ x.T
        oracle_values, _ = jacobi_eigh(0.5 * (a + a.T))
        np.testing.assert_allclose(result.eigenvalues, oracle_values[:2], atol=1e-8)

    def test_takes_literal_smallest_pairs(self):
        sample = datasets.swiss_roll(200, seed=19)
        model, result = fit_onpp(sample.x, k=8, m=2)
        from polyembed.linalg import sym_eigs

        graph = knn_graph(sample.x, 8)
        weights = reconstruction_weights(sample.x, graph, model.reg)
        import scipy.sparse

        i_minus_r = scipy.sparse.identity(200, format="csr") - weights.to_sparse()
        e = i_minus_r @ sample.x.T
        a = e.T @ e
        pairs = sym_eigs(0.5 * (a + a.T), 2)
        np.testing.assert_allclose(result.eigenvalues, pairs.values, atol=1e-12)


class TestLle:
    def test_identity_alignment_is_degenerate(self):
        with pytest.raises(DegenerateSpectrum, match="constant"):
            lle_from_alignment(np.eye(30), 2)

    def test_ring_matches_dense_oracle(self):
        theta = np.linspace(0.0, 2.0 * np.pi, 20, endpoint=False)
        x = np.vstack([np.cos(theta), np.sin(theta)])
        result = fit_lle(x, k=2, m=2)
        graph = knn_graph(x, 2)
        weights = reconstruction_weights(x, graph, 1e-3)
        m_dense = alignment_matrix(weights).dense()
        oracle_values, _ = jacobi_eigh(m_dense)
        # The constant eigenvector (value ~ 0) is dropped; the kept pair sits
        # right above it in the spectrum.
        np.testing.assert_allclose(result.eigenvalues, oracle_values[1:3], atol=1e-8)

    def test_unit_covariance_normalization(self):
        sample = datasets.swiss_roll(300, seed=20)
        result = fit_lle(sample.x, k=10, m=2)
        covariance = result.y @ result.y.T / 300
        np.testing.assert_allclose(covariance, np.eye(2), atol=1e-8)

    def test_unfolds_swiss_roll_reasonably(self):
        sample = datasets.swiss_roll(600, seed=21)
        result = fit_lle(sample.x, k=10, m=2)
        assert result.method == "lle"
        assert residual_variance(result.y, sample.z).rho < 1.0


class TestTransform:
    def test_training_samples_reproduce_embedding(self):
        sample = datasets.swiss_roll(300, seed=22)
        for fit in (
            lambda: fit_nppe(sample.x, k=8, p=2, m=2),
            lambda: fit_nppe(sample.x, k=8, p=2, mode=KRONECKER, m=2),
            lambda: fit_npp(sample.x, k=8, m=2),
            lambda: fit_onpp(sample.x, k=8, m=2),
        ):
            model, result = fit()
            np.testing.assert_allclose(
                model.transform(sample.x), result.y, atol=1e-8
            )

    def test_training_mean_maps_to_origin(self):
        sample = datasets.gaussian_bump(150, seed=23)
        model, _ = fit_nppe(sample.x, k=6, p=2, m=2)
        y = model.transform(model.lift.mean.reshape(3, 1))
        np.testing.assert_allclose(y, 0.0, atol=1e-12)

    def test_module_level_transform_delegates(self):
        sample = datasets.swiss_roll(150, seed=24)
        model, _ = fit_nppe(sample.x, k=6, p=2, m=2)
        probe = datasets.swiss_roll(40, seed=25).x
        assert np.array_equal(transform(model, probe), model.transform(probe))

    def test_dimension_mismatch_names_both_dims(self):
        sample = datasets.swiss_roll(150, seed=26)
        model, _ = fit_nppe(sample.x, k=6, p=2, m=2)
        with pytest.raises(DimensionMismatch, match="3.*2"):
            model.transform(np.zeros((2, 4)))

    def test_empty_batch(self):
        sample = datasets.swiss_roll(150, seed=27)
        model, _ = fit_nppe(sample.x, k=6, p=2, m=2)
        assert model.transform(np.zeros((3, 0))).shape == (2, 0)

    def test_held_out_embedding_sensible(self):
        sample = datasets.swiss_roll(1000, seed=28)
        train, test = datasets.split_indices(1000, 0.5, seed=28)
        model, _ = fit_nppe(sample.x[:, train], k=10, p=2, m=2)
        rho = residual_variance(model.transform(sample.x[:, test]), sample.z[:, test]).rho
        assert rho < 0.1


class TestSerialization:
    def test_round_trip_preserves_transforms_bitwise(self, tmp_path):
        sample = datasets.swiss_roll(200, seed=29)
        probe = datasets.swiss_roll(60, seed=30).x
        for fit in (
            lambda: fit_nppe(sample.x, k=8, p=2, m=2)[0],
            lambda: fit_npp(sample.x, k=8, m=2)[0],
            lambda: fit_onpp(sample.x, k=8, m=2)[0],
        ):
            model = fit()
            path = tmp_path / "model.json"
            save_model(model, path)
            loaded = load_model(path)
            assert np.array_equal(loaded.transform(probe), model.transform(probe))

    def test_document_structure(self, tmp_path):
        sample = datasets.swiss_roll(150, seed=31)
        model, _ = fit_nppe(sample.x, k=6, p=2, m=2)
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        assert doc["format_version"] == 1
        assert doc["kind"] == "nppe"
        assert doc["lift"]["mode"] == HADAMARD
        assert doc["coeffs"]["rows"] == 6 and doc["coeffs"]["cols"] == 2
        assert len(doc["coeffs"]["data"]) == 12
        assert doc["training"] == {"n_samples": 150, "k": 6}

    def test_linear_kinds_round_trip(self, tmp_path):
        sample = datasets.swiss_roll(150, seed=32)
        for fitter, kind in ((fit_npp, "npp"), (fit_onpp, "onpp")):
            model, _ = fitter(sample.x, k=6, m=2)
            path = tmp_path / f"{kind}.json"
            save_model(model, path)
            loaded = load_model(path)
            assert loaded.kind == kind
            assert np.array_equal(loaded.projection, model.projection)

    def test_unknown_kind_rejected(self, tmp_path):
        path = tmp_path / "weird.json"
        path.write_text(json.dumps({"format_version": 1, "kind": "umap"}))
        with pytest.raises(ParseError, match="umap"):
            load_model(path)

    def test_wrong_version_rejected(self, tmp_path):
        path = tmp_path / "old.json"
        path.write_text(json.dumps({"format_version": 99, "kind": "nppe"}))
        with pytest.raises(ParseError, match="version"):
            load_model(path)

    def test_lle_documents_refuse_transform(self, tmp_path):
        path = tmp_path / "lle.json"
        path.write_text(json.dumps({"format_version": 1, "kind": "lle"}))
        with pytest.raises(ConfigError, match="out-of-sample"):
            load_model(path)

    def test_invalid_json_is_a_parse_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            load_model(path)


def test_resolve_k_defaults():
    assert resolve_k(1000) == 10
    assert resolve_k(2000) == 20
    assert resolve_k(50) == 2
    assert resolve_k(350) == 4
    assert resolve_k(100, 7) == 7


def test_extra_candidate_window_does_not_change_output():
    sample = datasets.swiss_roll(250, seed=33)
    _, narrow = fit_nppe(sample.x, k=8, p=2, m=2, extra_pairs=3)
    _, wide = fit_nppe(sample.x, k=8, p=2, m=2, extra_pairs=8)
    np.testing.assert_allclose(narrow.y, wide.y, atol=1e-12)
    np.testing.assert_allclose(narrow.eigenvalues, wide.eigenvalues, atol=1e-14)
