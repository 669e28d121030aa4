"""Tests for ensemble generation: dominance, diversity, noise bookkeeping,
determinism, and the RLB1 container round trip."""

import numpy as np
import pytest

from replearn import rng
from replearn.linops import loewner_geq
from replearn.taskgen import (
    EnsembleSpec,
    GenerationError,
    load_bundle,
    make_covariances,
    make_ensemble,
    sample_ground_truth,
    sample_target_weight,
    sample_tasks,
    save_bundle,
    verify_dominance,
)


def lowdim_spec(**kw):
    base = dict(d=10, k=2, T=8, n1=30, n2=12, sigma=0.5, master_seed=0)
    base.update(kw)
    return EnsembleSpec(**base)


class TestEnsembleSpec:
    def test_lowdim_requires_2k_bound(self):
        with pytest.raises(ValueError, match="2k"):
            EnsembleSpec(d=10, k=3, T=4, n1=10, n2=5, track="lowdim")

    def test_highdim_allows_large_k(self):
        EnsembleSpec(d=10, k=4, T=4, n1=10, n2=5, track="highdim")

    def test_c_range(self):
        with pytest.raises(ValueError, match="c"):
            lowdim_spec(c=0.0)
        with pytest.raises(ValueError, match="c"):
            lowdim_spec(c=1.5)

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="covariance_family"):
            lowdim_spec(covariance_family="wishart")


class TestMakeCovariances:
    def test_identity_family(self):
        sigmas = make_covariances(EnsembleSpec(d=3, k=1, T=2, n1=5, n2=5, c=1.0))
        assert len(sigmas) == 3
        for S in sigmas:
            np.testing.assert_allclose(S, np.eye(3), atol=0)

    def test_identity_family_exact_for_small_c(self):
        sigmas = make_covariances(EnsembleSpec(d=4, k=1, T=3, n1=5, n2=5, c=0.3))
        for S in sigmas:
            np.testing.assert_allclose(S, np.eye(4), atol=0)

    def test_diagonal_decay_dominance(self):
        spec = lowdim_spec(covariance_family="diagonal-decay", c=0.5)
        sigmas = make_covariances(spec)
        target = sigmas[-1]
        np.testing.assert_allclose(np.diag(target), 1.0 / np.arange(1, 11))
        for S in sigmas[:-1]:
            ev = np.linalg.eigvalsh(S - 0.5 * target)
            assert ev[0] >= -1e-12

    def test_random_psd_dominance_many_seeds(self):
        for seed in range(50):
            spec = lowdim_spec(d=8, covariance_family="random-psd", c=0.7, master_seed=seed)
            sigmas = make_covariances(spec)
            for S in sigmas[:-1]:
                assert loewner_geq(S, 0.7 * sigmas[-1], 1e-10).is_psd

    def test_shared_covariance_tracks(self):
        for track in ("highdim", "relu"):
            spec = EnsembleSpec(d=6, k=2, T=4, n1=10, n2=5, track=track,
                                covariance_family="random-psd", master_seed=3)
            sigmas = make_covariances(spec)
            for S in sigmas[1:]:
                np.testing.assert_array_equal(S, sigmas[0])


class TestSampleGroundTruth:
    def test_orthonormal_representation_unit_heads(self):
        gt = sample_ground_truth(lowdim_spec(d=10, k=2, T=20))
        np.testing.assert_allclose(gt.B_star.T @ gt.B_star, np.eye(2), atol=1e-10)
        np.testing.assert_allclose(np.linalg.norm(gt.W_star, axis=0), 1.0, atol=1e-10)

    def test_k_equals_one_signs(self):
        gt = sample_ground_truth(lowdim_spec(d=6, k=1, T=10))
        np.testing.assert_allclose(np.abs(gt.W_star), 1.0, atol=1e-12)
        s = np.linalg.svd(gt.W_star, compute_uv=False)
        assert s[0] ** 2 >= 10 / 4.0

    def test_diversity_many_seeds(self):
        for seed in range(100):
            gt = sample_ground_truth(lowdim_spec(d=40, k=3, T=30, master_seed=seed))
            s = np.linalg.svd(gt.W_star, compute_uv=False)
            assert s[-1] ** 2 >= 30 / (4.0 * 3)

    def test_infeasible_diversity_raises(self):
        # sigma_k(W*) = 0 whenever T < k, so resampling must give up.
        with pytest.raises(GenerationError):
            sample_ground_truth(
                EnsembleSpec(d=10, k=3, T=2, n1=10, n2=5, track="highdim")
            )

    def test_highdim_records_nuclear_norm(self):
        gt = sample_ground_truth(lowdim_spec(track="highdim"))
        s = np.linalg.svd(gt.Theta_star, compute_uv=False)
        assert abs(gt.R - np.sum(s)) <= 1e-9
        assert np.sum(s > 1e-9) == 2  # intrinsic rank k

    def test_relu_teacher_unit_neurons(self):
        spec = EnsembleSpec(d=7, k=5, T=6, n1=10, n2=5, track="relu")
        gt = sample_ground_truth(spec)
        assert gt.nn_hidden.shape == (7, 5)
        assert gt.nn_head.shape == (5, 6)
        np.testing.assert_allclose(np.linalg.norm(gt.nn_hidden, axis=0), 1.0, atol=1e-10)


class TestSampleTasks:
    def test_noiseless_labels_exact(self):
        spec = lowdim_spec(sigma=0.0)
        gt = sample_ground_truth(spec)
        bundle = sample_tasks(spec, gt)
        for t in range(spec.T):
            clean = bundle.X[t] @ (gt.B_star @ gt.W_star[:, t])
            assert np.linalg.norm(bundle.y[t] - clean) == 0.0

    def test_noise_bookkeeping_exact(self):
        """Stored z_t reproduces the labels bitwise: y_t == clean + z_t."""
        spec = lowdim_spec(sigma=1.3)
        gt = sample_ground_truth(spec)
        bundle = sample_tasks(spec, gt)
        for t in range(spec.T):
            clean = bundle.X[t] @ (gt.B_star @ gt.W_star[:, t])
            np.testing.assert_array_equal(bundle.y[t], clean + bundle.Z[t])

    def test_empirical_covariance_lln(self):
        spec = EnsembleSpec(d=5, k=1, T=1, n1=100_000, n2=5, sigma=0.0,
                            track="highdim", master_seed=2)
        gt = sample_ground_truth(spec)
        bundle = sample_tasks(spec, gt)
        emp = bundle.X[0].T @ bundle.X[0] / spec.n1
        assert np.linalg.norm(emp - np.eye(5), 2) <= 0.05

    def test_scaled_rademacher_coordinates(self):
        spec = lowdim_spec(input_dist="scaled-rademacher", n1=20_000)
        gt = sample_ground_truth(spec)
        bundle = sample_tasks(spec, gt)
        X = bundle.X[0]  # identity covariance family: whitened == raw
        assert set(np.unique(X)) == {-1.0, 1.0}
        assert np.max(np.abs(X.mean(axis=0))) <= 0.02

    def test_determinism(self):
        spec = lowdim_spec(master_seed=99)
        g1, b1 = make_ensemble(spec)
        g2, b2 = make_ensemble(spec)
        for a, b in zip(b1.X, b2.X):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(b1.y_target, b2.y_target)
        np.testing.assert_array_equal(b1.target_weight, b2.target_weight)


class TestSampleTargetWeight:
    def test_lowdim_unit_sphere(self):
        gt = sample_ground_truth(lowdim_spec())
        for i in range(20):
            w = sample_target_weight(gt, "lowdim", seed=4, index=i)
            assert abs(np.linalg.norm(w) - 1.0) <= 1e-12

    def test_lowdim_second_moment(self):
        gt = sample_ground_truth(lowdim_spec(d=12, k=4, T=10))
        draws = np.stack([
            sample_target_weight(gt, "lowdim", seed=5, index=i) for i in range(100_000)
        ])
        second = draws.T @ draws / draws.shape[0]
        assert np.linalg.norm(second - np.eye(4) / 4.0, 2) <= 0.02

    def test_highdim_second_moment(self):
        spec = lowdim_spec(d=10, k=2, T=6, track="highdim")
        gt = sample_ground_truth(spec)
        gen = rng.stream(11, "mc")
        G = gen.standard_normal((6, 100_000))
        draws = gt.Theta_star @ G / np.sqrt(6)
        emp = draws @ draws.T / G.shape[1]
        pop = gt.Theta_star @ gt.Theta_star.T / 6
        rel = np.linalg.norm(emp - pop) / np.linalg.norm(pop)
        assert rel <= 0.05


class TestDominanceInvariant:
    @pytest.mark.parametrize("family", ["identity", "diagonal-decay", "random-psd"])
    @pytest.mark.parametrize("track", ["lowdim", "highdim", "relu"])
    def test_all_families_tracks(self, family, track):
        spec = EnsembleSpec(d=8, k=2, T=5, n1=10, n2=5, c=0.6,
                            covariance_family=family, track=track, master_seed=13)
        gt = sample_ground_truth(spec)
        assert verify_dominance(gt) >= -1e-10


class TestBundleContainer:
    def test_round_trip(self, tmp_path):
        spec = lowdim_spec(master_seed=21)
        gt, bundle = make_ensemble(spec)
        path = tmp_path / "bundle.rlb"
        save_bundle(bundle, path)
        loaded = load_bundle(path, spec)
        for t in range(spec.T):
            np.testing.assert_array_equal(loaded.X[t], bundle.X[t])
            np.testing.assert_array_equal(loaded.y[t], bundle.y[t])
            np.testing.assert_array_equal(loaded.Z[t], bundle.Z[t])
        np.testing.assert_array_equal(loaded.X_target, bundle.X_target)
        np.testing.assert_array_equal(loaded.y_target, bundle.y_target)
        np.testing.assert_array_equal(loaded.z_target, bundle.z_target)
        np.testing.assert_array_equal(loaded.target_weight, bundle.target_weight)

    def test_magic_and_header(self, tmp_path):
        spec = lowdim_spec()
        _, bundle = make_ensemble(spec)
        path = tmp_path / "bundle.rlb"
        save_bundle(bundle, path)
        raw = path.read_bytes()
        assert raw[:4] == b"RLB1"
        header = np.frombuffer(raw[4:44], dtype="<u8")
        assert tuple(header) == (spec.d, spec.k, spec.T, spec.n1, spec.n2)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.rlb"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ValueError, match="RLB1"):
            load_bundle(path)

    @pytest.mark.parametrize("track,weight_len", [("highdim", 10), ("relu", 2)])
    def test_round_trip_other_tracks(self, tmp_path, track, weight_len):
        """Target-weight length differs per track (ambient vs head space)
        and is recovered from the container tail."""
        spec = EnsembleSpec(d=10, k=2, T=4, n1=12, n2=6, sigma=0.8,
                            track=track, master_seed=5)
        _, bundle = make_ensemble(spec)
        assert bundle.target_weight.shape == (weight_len,)
        path = tmp_path / "bundle.rlb"
        save_bundle(bundle, path)
        loaded = load_bundle(path, spec)
        np.testing.assert_array_equal(loaded.target_weight, bundle.target_weight)
        np.testing.assert_array_equal(loaded.X_target, bundle.X_target)
