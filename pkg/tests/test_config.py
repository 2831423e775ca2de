"""Config loading: precedence, path resolution, validation, hashing."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from petlab.config import ENV_EMBEDDER_RESOURCE, bundled_path, load_config
from petlab.errors import ConfigError


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        json.dumps({"id": "c1", "language": "en", "text": "a <b> c", "pet": "b", "euph_label": 1}) + "\n",
        encoding="utf-8",
    )
    return path


class TestDefaults:
    def test_no_file_gives_working_defaults(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = load_config(None, {})
        assert cfg.backend == "reference-linear"
        assert cfg.n_runs == 10
        assert cfg.seed == 0
        assert cfg.split.seed == 0
        assert cfg.corpus is None
        assert cfg.lexicon == bundled_path("sensitive_words.txt")
        assert cfg.reports["slices"] == "table4"
        assert cfg.out_dir.name == "petlab-out"
        assert cfg.out_dir.is_dir()

    def test_require_names_missing_fields(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = load_config(None, {})
        with pytest.raises(ConfigError, match="corpus"):
            cfg.require("corpus", "lexicon")

    def test_provenance_shape(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = load_config(None, {})
        prov = cfg.provenance()
        assert prov["config_hash"] == cfg.config_hash
        assert prov["generator"] == "numpy.random.PCG64"
        assert set(prov["versions"]) == {"petlab", "numpy", "python"}


class TestValidation:
    def test_unknown_top_level_key(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"corpsu": "x.jsonl"})
        with pytest.raises(ConfigError, match="corpsu"):
            load_config(path, {})

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json", {})

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{oops", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path, {})

    def test_referenced_path_must_exist(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"corpus": "missing.jsonl"})
        with pytest.raises(ConfigError, match="missing.jsonl"):
            load_config(path, {})

    def test_nested_section_keys_checked(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"split": {"train_ration": 0.8}})
        with pytest.raises(ConfigError, match="train_ration"):
            load_config(path, {})

    def test_nested_section_values_checked(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"vagueness": {"hi": 0.4, "lo": 0.6}})
        with pytest.raises(ConfigError, match="vagueness"):
            load_config(path, {})

    def test_n_runs_positive(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"n_runs": 0})
        with pytest.raises(ConfigError, match="n_runs"):
            load_config(path, {})

    def test_seed_must_be_int(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"seed": "7"})
        with pytest.raises(ConfigError, match="seed"):
            load_config(path, {})

    def test_unknown_override_rejected(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        with pytest.raises(ConfigError, match="override"):
            load_config(None, {"bogus": 1})


class TestPrecedence:
    def test_flags_beat_file(self, tmp_path, monkeypatch, corpus_file):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"seed": 3, "corpus": "corpus.jsonl"})
        cfg = load_config(path, {"seed": 99})
        assert cfg.seed == 99

    def test_none_overrides_ignored(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"seed": 3})
        cfg = load_config(path, {"seed": None})
        assert cfg.seed == 3

    def test_split_seed_follows_root_seed(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"seed": 5})
        cfg = load_config(path, {})
        assert cfg.split.seed == 5

    def test_pinned_split_seed_survives(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"seed": 5, "split": {"seed": 12}})
        cfg = load_config(path, {"seed": 99})
        assert cfg.seed == 99
        assert cfg.split.seed == 12


class TestPathResolution:
    def test_relative_paths_resolve_against_config_dir(self, tmp_path, monkeypatch, corpus_file):
        elsewhere = tmp_path / "elsewhere"
        elsewhere.mkdir()
        monkeypatch.chdir(elsewhere)
        path = _write_config(tmp_path, {"corpus": "corpus.jsonl"})
        cfg = load_config(path, {})
        assert cfg.corpus == corpus_file

    def test_relative_override_resolves_against_cwd(self, tmp_path, monkeypatch, corpus_file):
        # the config file sits elsewhere; a --corpus flag typed in the
        # working directory must resolve from there
        workdir = tmp_path / "work"
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        local = workdir / "local.jsonl"
        local.write_bytes(corpus_file.read_bytes())
        path = _write_config(tmp_path, {"corpus": "corpus.jsonl"})
        cfg = load_config(path, {"corpus": "local.jsonl"})
        assert cfg.corpus == local

    def test_out_dir_resolves_against_cwd(self, tmp_path, monkeypatch):
        workdir = tmp_path / "work"
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        path = _write_config(tmp_path, {"out_dir": "results"})
        cfg = load_config(path, {})
        # not anchored to the config dir, unlike input paths
        assert Path(cfg.out_dir).name == "results"
        assert (workdir / "results").is_dir()
        assert not (tmp_path / "results").exists()


class TestEmbedderSpec:
    def test_file_kind_resolved_and_checked(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        (tmp_path / "vecs.tsv").write_text("x\t1\n", encoding="utf-8")
        path = _write_config(tmp_path, {"embedder": {"kind": "file", "resource": "vecs.tsv"}})
        cfg = load_config(path, {})
        assert cfg.embedder.kind == "file"
        assert cfg.embedder.resource == str(tmp_path / "vecs.tsv")

    def test_file_kind_missing_resource_file(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"embedder": {"kind": "file", "resource": "nope.tsv"}})
        with pytest.raises(ConfigError, match="nope.tsv"):
            load_config(path, {})

    def test_env_var_fills_empty_resource(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv(ENV_EMBEDDER_RESOURCE, "some-remote-model")
        path = _write_config(tmp_path, {"embedder": {"kind": "sentence-transformers"}})
        cfg = load_config(path, {})
        assert cfg.embedder.resource == "some-remote-model"

    def test_no_resource_anywhere_is_an_error(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.delenv(ENV_EMBEDDER_RESOURCE, raising=False)
        path = _write_config(tmp_path, {"embedder": {"kind": "sentence-transformers"}})
        with pytest.raises(ConfigError, match=ENV_EMBEDDER_RESOURCE):
            load_config(path, {})


class TestHash:
    def test_stable_across_loads(self, tmp_path, monkeypatch, corpus_file):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"corpus": "corpus.jsonl", "seed": 2})
        h1 = load_config(path, {}).config_hash
        h2 = load_config(path, {}).config_hash
        assert h1 == h2
        assert len(h1) == 64

    def test_changes_with_content(self, tmp_path, monkeypatch, corpus_file):
        monkeypatch.chdir(tmp_path)
        p1 = _write_config(tmp_path, {"corpus": "corpus.jsonl", "seed": 2}, "a.json")
        p2 = _write_config(tmp_path, {"corpus": "corpus.jsonl", "seed": 3}, "b.json")
        assert load_config(p1, {}).config_hash != load_config(p2, {}).config_hash

    def test_override_changes_hash(self, tmp_path, monkeypatch, corpus_file):
        monkeypatch.chdir(tmp_path)
        path = _write_config(tmp_path, {"corpus": "corpus.jsonl", "seed": 2})
        assert load_config(path, {}).config_hash != load_config(path, {"seed": 9}).config_hash
