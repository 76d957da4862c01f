import numpy as np
import pytest

from wordcube.model import (CoocMatrix, PairKernel, build_m, build_pmi,
                            pair_kernel, sample_config, tertiary_kernel)
from wordcube.spectral import (EigenSystem, analytic_eigensystem,
                               first_order_eigs, kernel_eigs,
                               numeric_eigensystem, pmi_coefficients,
                               pmi_structure, spectrum_density, subspace_angle,
                               tertiary_perturbation_eigs, value_clusters)


class TestKernelEigs:
    def test_symmetric_case_is_exact(self):
        for s in (0.1, 0.5, 0.9):
            values, vectors = kernel_eigs(pair_kernel(s, 1.0))
            assert values[0] == pytest.approx(2.0, abs=1e-15)
            assert values[1] == pytest.approx(2.0 * s, abs=1e-15)
            inv = 1 / np.sqrt(2)
            assert np.allclose(vectors[:, 0], [inv, inv], atol=1e-15)
            assert np.allclose(vectors[:, 1], [inv, -inv], atol=1e-15)

    def test_vanishing_signal_limit(self):
        kernel = PairKernel(entries=np.ones((2, 2)), strength=0.0, odds=0.6)
        values, _ = kernel_eigs(kernel)
        assert np.allclose(values, [2.0, 0.0], atol=1e-15)

    def test_against_numeric_two_by_two(self):
        k = pair_kernel(0.3, 0.5)
        values, vectors = kernel_eigs(k)
        num_values, num_vectors = np.linalg.eigh(k.indexed_entries)
        assert abs(values[0] - num_values[1]) < 1e-12
        assert abs(values[1] - num_values[0]) < 1e-12
        for j, col in enumerate(num_vectors.T[::-1]):
            overlap = abs(float(col @ vectors[:, j]))
            assert overlap == pytest.approx(1.0, abs=1e-12)

    def test_tertiary_kernel_rejected(self):
        with pytest.raises(ValueError):
            kernel_eigs(tertiary_kernel(0.5, 0.01))

    def test_orthonormal(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            k = pair_kernel(rng.uniform(0.01, 0.99), rng.uniform(0.05, 1.0))
            _, vectors = kernel_eigs(k)
            assert np.max(np.abs(vectors.T @ vectors - np.eye(2))) < 1e-12


class TestFirstOrderEigs:
    def test_symmetric_case_matches_exact_for_all_s(self):
        for s in (0.05, 0.4):
            values, vectors = first_order_eigs(s, 1.0)
            exact_values, exact_vectors = kernel_eigs(pair_kernel(s, 1.0))
            assert np.allclose(values, exact_values, atol=1e-15)
            assert np.allclose(vectors, exact_vectors, atol=1e-15)

    def test_error_is_second_order(self):
        s, q = 1e-3, 0.5
        values, vectors = first_order_eigs(s, q)
        exact_values, exact_vectors = kernel_eigs(pair_kernel(s, q))
        assert np.max(np.abs(values - exact_values)) < 10 * s * s
        assert np.max(np.abs(vectors - exact_vectors)) < 10 * s * s

    def test_expansion_point_is_exact(self):
        values, vectors = first_order_eigs(0.0, 0.7)
        kernel = PairKernel(entries=np.ones((2, 2)), strength=0.0, odds=0.7)
        exact_values, exact_vectors = kernel_eigs(kernel)
        assert np.allclose(values, exact_values, atol=1e-15)
        assert np.allclose(vectors, exact_vectors, atol=1e-15)


class TestAnalyticEigensystem:
    def test_two_attribute_spectrum_and_sign_patterns(self):
        s1, s2 = 0.7, 0.3
        cfg = sample_config(2, "explicit", strengths=(s1, s2))
        eigs = analytic_eigensystem(cfg)
        assert np.allclose(eigs.values, [4.0, 4 * s1, 4 * s2, 4 * s1 * s2],
                           atol=1e-15)
        assert eigs.labels == ("++", "-+", "+-", "--")
        half = 0.5
        expected = {
            "++": half * np.array([1, 1, 1, 1]),
            "-+": half * np.array([1, 1, -1, -1]),
            "+-": half * np.array([1, -1, 1, -1]),
            "--": half * np.array([1, -1, -1, 1]),
        }
        for j, label in enumerate(eigs.labels):
            overlap = abs(float(expected[label] @ eigs.vectors[:, j]))
            assert overlap == pytest.approx(1.0, abs=1e-14)

    def test_vanishing_signal_rank_one(self):
        cfg = sample_config(4, "explicit", strengths=(1e-13,) * 4)
        eigs = analytic_eigensystem(cfg)
        assert eigs.values[0] == pytest.approx(16.0, abs=1e-11)
        assert np.max(np.abs(eigs.values[1:])) < 1e-11

    def test_matches_numeric_for_random_configs(self):
        for seed in range(6):
            d = 2 + seed % 4
            cfg = sample_config(d, "uniform", "explicit", seed=seed,
                                odds=tuple(np.linspace(0.3, 1.0, d)))
            ana = analytic_eigensystem(cfg)
            num = numeric_eigensystem(build_m(cfg))
            rel = np.abs(np.abs(ana.values) - np.abs(num.values)) / np.abs(
                ana.values)
            assert np.max(rel) < 1e-9

    def test_degenerate_labels_order_ties(self):
        cfg = sample_config(3, "explicit", strengths=(0.5, 0.5, 0.5))
        eigs = analytic_eigensystem(cfg)
        # the three single-minus patterns tie at 8s; ascending label order
        assert eigs.labels[1:4] == ("++-", "+-+", "-++")


class TestNumericEigensystem:
    def test_identity(self):
        eigs = numeric_eigensystem(np.eye(4))
        assert np.allclose(eigs.values, np.ones(4), atol=0)

    def test_diagonal_sorted(self):
        eigs = numeric_eigensystem(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(eigs.values, [3.0, 2.0, 1.0], atol=0)

    def test_matches_analytic_for_d2(self):
        cfg = sample_config(2, "explicit", strengths=(0.8, 0.45))
        ana = analytic_eigensystem(cfg)
        num = numeric_eigensystem(build_m(cfg))
        assert np.max(np.abs(ana.values - num.values)) < 1e-10
        for j in range(4):
            overlap = abs(float(ana.vectors[:, j] @ num.vectors[:, j]))
            assert overlap == pytest.approx(1.0, abs=1e-10)

    def test_rejects_asymmetric_input(self):
        a = np.eye(3)
        a[0, 1] = 1e-6
        with pytest.raises(ValueError):
            numeric_eigensystem(a)

    def test_eigensystem_invariants(self):
        cfg = sample_config(5, "uniform", seed=31)
        m = build_m(cfg)
        eigs = numeric_eigensystem(m)
        n = eigs.n
        gram = eigs.vectors.T @ eigs.vectors
        assert np.max(np.abs(gram - np.eye(n))) < 1e-9
        recon = (eigs.vectors * eigs.values) @ eigs.vectors.T
        assert np.max(np.abs(recon - m.values)) < 1e-8 * np.abs(
            eigs.values).max()

    def test_deterministic(self):
        cfg = sample_config(4, "uniform", seed=8)
        m = build_m(cfg)
        a = numeric_eigensystem(m)
        b = numeric_eigensystem(m)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.vectors, b.vectors)


class TestPmiCoefficients:
    def test_symmetric_case(self):
        s = 0.6
        c = pmi_coefficients(s, 1.0)
        assert c.offset == pytest.approx(0.5 * np.log(1 - s * s), abs=1e-14)
        assert c.linear == 0.0
        assert c.coupling == pytest.approx(0.5 * np.log((1 + s) / (1 - s)),
                                           abs=1e-14)

    def test_vanishing_signal(self):
        c = pmi_coefficients(1e-14, 0.8)
        assert max(abs(c.offset), abs(c.linear), abs(c.coupling)) < 1e-13

    def test_four_point_bilinear_identity(self):
        s, q = 0.5, 0.8
        c = pmi_coefficients(s, q)
        kernel = pair_kernel(s, q).entries  # rows/cols ordered (+1, -1)
        for i, a in ((0, 1), (1, -1)):
            for j, b in ((0, 1), (1, -1)):
                expected = c.offset + c.linear * (a + b) + c.coupling * a * b
                assert abs(np.log(kernel[i, j]) - expected) < 1e-12


class TestPmiStructure:
    def test_rank_bound(self):
        cfg = sample_config(3, "uniform", seed=14)
        pmi = build_pmi(build_m(cfg), 0.0)
        eigs = numeric_eigensystem(pmi)
        retained = np.abs(eigs.values) > 1e-8 * (1 << 3)
        assert retained.sum() <= 4

    def test_symmetric_case_has_no_linear_part(self):
        cfg = sample_config(4, "uniform", seed=15)
        st = pmi_structure(cfg)
        assert np.array_equal(st.linear, np.zeros(4))

    def test_reconstruction(self):
        cfg = sample_config(4, "uniform", "explicit", seed=16,
                            odds=(0.4, 0.9, 1.0, 0.6))
        st = pmi_structure(cfg)
        pmi = build_pmi(build_m(cfg), 0.0)
        assert np.max(np.abs(st.reconstruct() - pmi.values)) < 1e-10


class TestTertiaryPerturbation:
    def test_zero_weight_matches_base_kernel(self):
        for s in (0.2, 0.5, 0.9):
            predicted = tertiary_perturbation_eigs(s, 0.0)
            numeric = np.linalg.eigvalsh(tertiary_kernel(s, 0.0).entries)
            assert np.allclose(sorted(predicted, reverse=True),
                               numeric[::-1], atol=1e-12)

    def test_prediction_tracks_numeric_exactly(self):
        # base and bump parts commute, so the linear prediction is exact
        for s in (0.3, 0.5, 0.8):
            for f in np.geomspace(1e-4, 1e-2, 7):
                predicted = np.sort(tertiary_perturbation_eigs(s, f))
                numeric = np.sort(np.linalg.eigvalsh(
                    tertiary_kernel(s, f).entries))
                assert np.max(np.abs(predicted - numeric)) < 1e-12

    def test_base_kernel_eigenvectors(self):
        vals, vecs = np.linalg.eigh(tertiary_kernel(0.5, 0.0).entries)
        expected = {
            3.0: np.array([1, 1, 1]) / np.sqrt(3),
            1.0: np.array([1, -1, 0]) / np.sqrt(2),
            0.0: np.array([1, 1, -2]) / np.sqrt(6),
        }
        for target, vec in expected.items():
            j = int(np.argmin(np.abs(vals - target)))
            assert abs(abs(float(vec @ vecs[:, j])) - 1.0) < 1e-12


class TestSpectrumDensity:
    def test_constant_vector(self):
        dens = spectrum_density(np.full(32, 5.0), bins=16)
        assert (dens.counts > 0).sum() == 1
        assert dens.log_std == 0.0
        assert dens.excluded_fraction == 0.0

    def test_narrow_disorder_resolves_bands(self):
        cfg = sample_config(8, "normal", seed=3, mu=0.5, sigma=1e-3)
        values = analytic_eigensystem(cfg).values
        clusters = value_clusters(values, rel_tol=2e-2)
        sizes = [len(c) for c in clusters[:4]]
        assert sizes == [1, 8, 28, 56]

    def test_uniform_disorder_merges_bands(self):
        cfg = sample_config(8, "uniform", seed=3)
        values = analytic_eigensystem(cfg).values
        clusters = value_clusters(values, rel_tol=2e-2)
        sizes = [len(c) for c in clusters[:4]]
        assert sizes != [1, 8, 28, 56]
        dens = spectrum_density(values, bins=32)
        assert (dens.counts > 0).sum() > 8
        assert dens.log_std > 0.5

    def test_rejects_all_nonpositive(self):
        with pytest.raises(ValueError):
            spectrum_density([-1.0, -2.0, 0.0])

    def test_excluded_fraction(self):
        dens = spectrum_density([1.0, 2.0, -3.0, 0.0], bins=4)
        assert dens.excluded_fraction == pytest.approx(0.5)


class TestSpectralInvariants:
    def test_analytic_numeric_agreement_with_angles(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            d = int(rng.integers(2, 7))
            cfg = sample_config(d, "uniform", seed=int(rng.integers(1 << 30)))
            ana = analytic_eigensystem(cfg)
            num = numeric_eigensystem(build_m(cfg))
            rel = np.abs(np.abs(ana.values) - np.abs(num.values)) / np.abs(
                ana.values)
            assert np.max(rel) < 1e-9
            for cluster in value_clusters(ana.values):
                angle = subspace_angle(ana.vectors[:, cluster],
                                       num.vectors[:, cluster])
                assert angle < 1e-6

    def test_retained_pmi_modes_span_attribute_space(self):
        d = 6
        cfg = sample_config(d, "uniform", seed=41)
        pmi = build_pmi(build_m(cfg), 0.0)
        eigs = numeric_eigensystem(pmi)
        retained = np.abs(eigs.values) > 1e-8 * (1 << d)
        assert retained.sum() == d + 1
        signs = pmi_structure(cfg).signs.astype(float)
        basis = np.column_stack([np.ones(1 << d), signs])
        q, _ = np.linalg.qr(basis)
        for j in np.flatnonzero(retained):
            v = eigs.vectors[:, j]
            residual = np.linalg.norm(v - q @ (q.T @ v))
            assert residual < 1e-8

    def test_retained_pmi_scale(self):
        d = 7
        cfg = sample_config(d, "uniform", seed=5)
        st = pmi_structure(cfg)
        eigs = numeric_eigensystem(build_pmi(build_m(cfg), 0.0))
        retained = np.abs(eigs.values) > 1e-8 * (1 << d)
        lo = np.abs(st.coupling).min() / 2
        hi = 2 * np.abs(st.coupling).sum() + 2 * abs(st.offset)
        scaled = np.abs(eigs.values[retained]) / (1 << d)
        assert np.all(scaled >= lo) and np.all(scaled <= hi)

    def test_pmi_spectrum_is_not_concentrated(self):
        d = 6
        cfg = sample_config(d, "uniform", seed=77)
        st = pmi_structure(cfg)
        eigs = numeric_eigensystem(build_pmi(build_m(cfg), 0.0))
        retained = np.abs(eigs.values[np.abs(eigs.values) > 1e-8 * (1 << d)])
        # drop the constant-mode eigenvalue, then the spread of the
        # attribute modes is exactly the coupling spread
        offset_mag = abs(st.offset) * (1 << d)
        attr = np.sort([v for v in retained
                        if not np.isclose(v, offset_mag, rtol=1e-9)])
        ratio = attr[-1] / attr[0]
        expected = st.coupling.max() / st.coupling.min()
        assert ratio == pytest.approx(expected, rel=1e-9)
        assert ratio > 1.5
