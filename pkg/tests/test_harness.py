import numpy as np
import pytest

from wordcube.embed import EvalPolicy, accuracy_vs_k, all_model_families
from wordcube.harness import (ExperimentSpec, FormatError, SpecError,
                              derive_seed, emit_figure_data, figure_spec,
                              load_eigensystem, load_matrix, parse_k_grid,
                              parse_spec, restrict_families, run_experiment,
                              run_figure, save_eigensystem, save_matrix)
from wordcube.model import build_m, build_pmi, sample_config
from wordcube.perturb import SubsampleSpec, subsample_vocab
from wordcube.spectral import analytic_eigensystem, numeric_eigensystem


class TestMatrixPersistence:
    def test_roundtrip_is_byte_exact(self, tmp_path):
        m = build_m(sample_config(4, "uniform", seed=1))
        path = tmp_path / "m.cooc"
        save_matrix(m, path)
        loaded = load_matrix(path)
        assert np.array_equal(loaded.values, m.values)
        assert loaded.space == m.space
        assert np.array_equal(loaded.vocab, m.vocab)
        second = tmp_path / "again.cooc"
        save_matrix(loaded, second)
        assert path.read_bytes() == second.read_bytes()

    def test_corrupted_magic(self, tmp_path):
        path = tmp_path / "bad.cooc"
        path.write_bytes(b"NOPE!" + b"\x00" * 64)
        with pytest.raises(FormatError):
            load_matrix(path)

    def test_truncated_file(self, tmp_path):
        m = build_m(sample_config(3, "uniform", seed=2))
        path = tmp_path / "m.cooc"
        save_matrix(m, path)
        path.write_bytes(path.read_bytes()[:40])
        with pytest.raises(FormatError):
            load_matrix(path)

    def test_token_vocabulary_block(self, tmp_path):
        from wordcube.model import CoocMatrix
        m = CoocMatrix(values=np.ones((2, 2)), space="log",
                       tokens=("alpha", "beta"), provenance="corpus")
        path = tmp_path / "corpus.cooc"
        save_matrix(m, path)
        loaded = load_matrix(path)
        assert loaded.tokens == ("alpha", "beta")
        assert loaded.space == "log"
        assert loaded.provenance == "corpus"

    def test_subsampled_matrix_keeps_attribute_rows(self, tmp_path):
        m = build_m(sample_config(5, "uniform", seed=3))
        sub, _ = subsample_vocab(m, SubsampleSpec(f=0.5, seed=4))
        path = tmp_path / "sub.cooc"
        save_matrix(sub, path)
        loaded = load_matrix(path)
        assert np.array_equal(loaded.vocab, sub.vocab)
        assert np.array_equal(loaded.values, sub.values)

    def test_eigensystem_roundtrip_with_labels(self, tmp_path):
        eigs = analytic_eigensystem(sample_config(3, "uniform", seed=5))
        path = tmp_path / "system.eigs"
        save_eigensystem(eigs, path)
        loaded = load_eigensystem(path)
        assert np.array_equal(loaded.values, eigs.values)
        assert np.array_equal(loaded.vectors, eigs.vectors)
        assert loaded.labels == eigs.labels


class TestSpecParsing:
    def test_k_grid_syntax(self):
        assert parse_k_grid("1,3,9") == (1, 3, 9)
        assert parse_k_grid("1:5") == (1, 2, 3, 4, 5)
        assert parse_k_grid("2:10:4,64") == (2, 6, 10, 64)
        with pytest.raises(SpecError):
            parse_k_grid("")

    def test_derive_seed_is_stable_and_sensitive(self):
        assert derive_seed(7, "config", 0) == derive_seed(7, "config", 0)
        assert derive_seed(7, "config", 0) != derive_seed(7, "config", 1)
        assert derive_seed(7, "noise", 0) != derive_seed(8, "noise", 0)

    def test_spec_file_roundtrip(self, tmp_path):
        path = tmp_path / "spec.txt"
        path.write_text(
            "name = demo\n"
            "d = 5\n"
            "s_mode = uniform\n"
            "targets = m,pmi\n"
            "k_grid = 1:6,9\n"
            "replicates = 3\n"
            "base_seed = 42\n"
            "noise_kind = additive_log\n"
            "noise_grid = 0.1,0.5\n"
            "policy_tie = lowest_index\n",
            encoding="utf-8")
        spec = parse_spec(path)
        assert spec.name == "demo"
        assert spec.d == 5
        assert spec.targets == ("m", "pmi")
        assert spec.k_grid == (1, 2, 3, 4, 5, 6, 9)
        assert spec.noise_grid == (0.1, 0.5)
        assert spec.policy.tie_mode == "lowest_index"

    def test_invalid_spec_rejected(self):
        with pytest.raises(SpecError):
            ExperimentSpec(name="x", replicates=0)
        with pytest.raises(SpecError):
            ExperimentSpec(name="x", targets=("bogus",))
        with pytest.raises(SpecError):
            ExperimentSpec(name="x", kind="corpus")


class TestRunExperiment:
    def test_single_cell_matches_direct_call(self, tmp_path):
        spec = ExperimentSpec(name="single", d=4, s_mode="uniform",
                              targets=("pmi",), k_grid=(3, 5),
                              replicates=1, base_seed=11,
                              out_dir=str(tmp_path))
        result = run_experiment(spec)
        assert not result.failures
        cfg = sample_config(4, "uniform", "ones",
                            seed=derive_seed(11, "config", 0))
        eigs = numeric_eigensystem(build_pmi(build_m(cfg), 0.0))
        curve = accuracy_vs_k(eigs, all_model_families(4), (3, 5),
                              EvalPolicy(), source="pmi")
        direct = {(k, name): curve.accuracies[i, j]
                  for i, k in enumerate(curve.k_values)
                  for j, name in enumerate(curve.family_names)}
        for row in result.curve_rows:
            assert row["accuracy"] == direct[(row["K"], row["family"])]

    def test_byte_identical_reruns(self, tmp_path):
        def spec_for(sub):
            return ExperimentSpec(name="det", d=4, s_mode="uniform",
                                  targets=("m", "pmi"), k_grid=(2, 4, 8),
                                  replicates=2, base_seed=3,
                                  noise_kind="multiplicative_ratio",
                                  noise_grid=(0.1,),
                                  out_dir=str(tmp_path / sub))
        first = run_experiment(spec_for("a"))
        second = run_experiment(spec_for("b"))
        for key in first.files:
            assert first.files[key].read_bytes() == \
                second.files[key].read_bytes()

    def test_workers_do_not_change_output(self, tmp_path):
        def spec_for(sub, workers):
            return ExperimentSpec(name="par", d=4, s_mode="uniform",
                                  targets=("pmi",), k_grid=(3, 5),
                                  replicates=3, base_seed=9, workers=workers,
                                  out_dir=str(tmp_path / sub))
        serial = run_experiment(spec_for("serial", 1))
        threaded = run_experiment(spec_for("threaded", 4))
        for key in serial.files:
            assert serial.files[key].read_bytes() == \
                threaded.files[key].read_bytes()

    def test_failing_cells_are_recorded_and_skipped(self, tmp_path):
        # pruning is a log-space transform, so the m-target cells fail
        spec = ExperimentSpec(name="mixed", d=3, s_mode="uniform",
                              targets=("m", "pmi"), k_grid=(2, 4),
                              replicates=1, base_seed=5,
                              prune_attrs=(1,), out_dir=str(tmp_path))
        result = run_experiment(spec)
        assert len(result.failures) == 1
        targets = {row["target"] for row in result.curve_rows}
        assert targets == {"pmi"}

    def test_subsampled_families_are_reindexed(self, tmp_path):
        spec = ExperimentSpec(name="sub", d=6, s_mode="uniform",
                              targets=("pmi",), k_grid=(7,),
                              replicates=1, base_seed=8,
                              subsample_grid=(0.7,), out_dir=str(tmp_path))
        result = run_experiment(spec)
        assert not result.failures
        assert result.curve_rows
        assert all(r["n_quads"] <= 16 for r in result.curve_rows)


class TestRestrictFamilies:
    def test_reindexing(self):
        families = all_model_families(3)
        retained = np.array([0, 2, 3, 5, 6, 7])
        restricted = restrict_families(families, retained)
        kept = {f.name: f for f in restricted}
        for fam in restricted:
            arr = fam.as_array()
            assert arr.max() < len(retained)
        originals = {f.name: f for f in families}
        for name, fam in kept.items():
            assert len(fam) <= len(originals[name])


class TestFigures:
    def test_fig2d_emission(self, tmp_path):
        specs = figure_spec("2d", out_dir=tmp_path, replicates=2, base_seed=1)
        spec = specs[0]
        assert spec.targets == ("m", "pmi")
        result = run_experiment(spec)
        path = emit_figure_data(result, "2d", tmp_path)
        header = path.read_text().splitlines()[0]
        assert header == "target,K,mean_acc,std_acc"

    def test_fig1c_emission(self, tmp_path):
        path = run_figure("1c", out_dir=tmp_path, replicates=2, base_seed=2)
        lines = path.read_text().splitlines()
        assert lines[0] == "bin_lo,bin_hi,density,sigma_s"
        labels = {line.rsplit(",", 1)[1] for line in lines[1:]}
        assert "uniform" in labels and "0.001" in labels

    def test_fig3c_emission(self, tmp_path):
        path = run_figure("3c", out_dir=tmp_path, replicates=1, base_seed=3)
        lines = path.read_text().splitlines()
        assert lines[0] == "pruned,involves_pruned,K,mean_acc"
        assert any(line.startswith("strongest,1,") for line in lines[1:])
        assert any(line.startswith("weakest,0,") for line in lines[1:])

    def test_unknown_figure_id(self):
        with pytest.raises(SpecError):
            figure_spec("9z")
