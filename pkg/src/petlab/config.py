"""Pipeline configuration: one declarative JSON document plus flag overrides.

Precedence is flags > file > defaults. Relative paths inside a config file
resolve against the file's own directory, so bundled demo configs work from
any working directory. Every loaded config carries a hash of its fully
resolved form, which ends up in the provenance block of every artifact.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass, fields as dc_fields
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import GENERATOR_ID, __version__
from .embedding import EmbedderSpec
from .errors import ConfigError
from .harness import TrainConfig
from .splits import SplitPlan
from .vagueness import VaguenessConfig

# remote embedder credentials/endpoints are never written into config files
ENV_EMBEDDER_RESOURCE = "PETLAB_EMBEDDER_RESOURCE"

_PATH_KEYS = ("corpus", "annotations", "lexicon", "vector_table", "review")
_KNOWN_KEYS = set(_PATH_KEYS) | {
    "embedder",
    "out_dir",
    "column_map",
    "vagueness",
    "split",
    "train",
    "backend",
    "n_runs",
    "seed",
    "reports",
}

DEFAULT_REPORTS = {
    "slices": "table4",
    "sensitivity": "table6",
    "results": "table7",
    "errors": "errors",
}


def bundled_path(*parts: str) -> Path:
    return Path(str(resources.files("petlab").joinpath("data", *parts)))


@dataclass(frozen=True)
class PipelineConfig:
    corpus: Path | None
    annotations: Path | None
    lexicon: Path | None
    vector_table: Path | None
    review: Path | None
    embedder: EmbedderSpec | None
    out_dir: Path
    column_map: dict[str, str] | None
    vagueness: VaguenessConfig
    split: SplitPlan
    train: TrainConfig
    backend: str
    n_runs: int
    seed: int
    reports: dict[str, str]
    config_hash: str

    def provenance(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "generator": GENERATOR_ID,
            "versions": {
                "petlab": __version__,
                "numpy": np.__version__,
                "python": sys.version.split()[0],
            },
        }

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError(f"config is missing required fields: {', '.join(missing)}")


def _check_keys(obj: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} fields: {', '.join(unknown)}")


def _sub(obj: Mapping[str, Any], key: str, cls: type, where: str) -> Any:
    section = obj.get(key) or {}
    if not isinstance(section, Mapping):
        raise ConfigError(f"{where} must be an object")
    _check_keys(section, {f.name for f in dc_fields(cls)}, where)
    try:
        return cls(**section)
    except Exception as exc:
        raise ConfigError(f"invalid {where}: {exc}") from None


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> PipelineConfig:
    """Load a config file and apply flag overrides (None values are ignored).

    All validation happens here, before any pipeline stage runs: unknown
    fields, malformed sections, and missing referenced paths all raise
    ConfigError.
    """
    raw: dict[str, Any] = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        base = path.parent
        try:
            with path.open(encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    _check_keys(raw, _KNOWN_KEYS, "config")

    merged = dict(raw)
    override_keys: set[str] = set()
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown override {key!r}")
        merged[key] = value
        override_keys.add(key)

    def path_of(key: str, default: str | None = None) -> Path | None:
        value = merged.get(key, default)
        if value is None:
            return None
        p = Path(str(value))
        if not p.is_absolute() and key not in ("out_dir",):
            # flag overrides are typed at the shell: resolve them against
            # the working directory, not the config file's directory
            p = (Path.cwd() if key in override_keys else base) / p
        return p

    resolved_paths: dict[str, Path | None] = {}
    for key in _PATH_KEYS:
        p = path_of(key)
        if p is not None and not p.is_file():
            raise ConfigError(f"{key} path does not exist: {p}")
        resolved_paths[key] = p
    if resolved_paths["lexicon"] is None:
        resolved_paths["lexicon"] = bundled_path("sensitive_words.txt")

    embedder = None
    emb_raw = merged.get("embedder")
    if emb_raw is not None:
        if not isinstance(emb_raw, Mapping):
            raise ConfigError("embedder must be an object with kind/resource")
        _check_keys(emb_raw, {"kind", "resource"}, "embedder")
        kind = str(emb_raw.get("kind") or "file")
        resource = str(emb_raw.get("resource") or "")
        if not resource:
            resource = os.environ.get(ENV_EMBEDDER_RESOURCE, "")
        if not resource:
            raise ConfigError(
                f"embedder has no resource; set it in the config or via ${ENV_EMBEDDER_RESOURCE}"
            )
        if kind == "file":
            rp = Path(resource)
            if not rp.is_absolute():
                rp = base / rp
            if not rp.is_file():
                raise ConfigError(f"embedder resource does not exist: {rp}")
            resource = str(rp)
        embedder = EmbedderSpec(kind=kind, resource=resource)

    seed = merged.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    split_raw = dict(merged.get("split") or {})
    split_raw.setdefault("seed", seed)  # one root seed unless the file pins its own
    merged_split = dict(merged)
    merged_split["split"] = split_raw

    column_map = merged.get("column_map")
    if column_map is not None and not isinstance(column_map, Mapping):
        raise ConfigError("column_map must be an object")

    reports = dict(DEFAULT_REPORTS)
    reports_raw = merged.get("reports") or {}
    _check_keys(reports_raw, set(DEFAULT_REPORTS), "reports")
    reports.update({k: str(v) for k, v in reports_raw.items()})

    n_runs = merged.get("n_runs", 10)
    if not isinstance(n_runs, int) or n_runs < 1:
        raise ConfigError(f"n_runs must be a positive integer, got {n_runs!r}")

    out_dir = path_of("out_dir", "petlab-out")
    assert out_dir is not None
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output dir is not writable: {out_dir}")

    canonical = {
        **{k: (str(v) if v is not None else None) for k, v in resolved_paths.items()},
        "embedder": None if embedder is None else {"kind": embedder.kind, "resource": embedder.resource},
        "out_dir": str(out_dir),
        "column_map": dict(column_map) if column_map else None,
        "vagueness": merged.get("vagueness") or {},
        "split": split_raw,
        "train": merged.get("train") or {},
        "backend": str(merged.get("backend", "reference-linear")),
        "n_runs": n_runs,
        "seed": seed,
        "reports": reports,
    }
    config_hash = hashlib.sha256(
        json.dumps(canonical, sort_keys=True, ensure_ascii=False).encode("utf-8")
    ).hexdigest()

    return PipelineConfig(
        corpus=resolved_paths["corpus"],
        annotations=resolved_paths["annotations"],
        lexicon=resolved_paths["lexicon"],
        vector_table=resolved_paths["vector_table"],
        review=resolved_paths["review"],
        embedder=embedder,
        out_dir=out_dir,
        column_map=dict(column_map) if column_map else None,
        vagueness=_sub(merged, "vagueness", VaguenessConfig, "vagueness"),
        split=_sub(merged_split, "split", SplitPlan, "split"),
        train=_sub(merged, "train", TrainConfig, "train"),
        backend=canonical["backend"],
        n_runs=n_runs,
        seed=seed,
        reports=reports,
        config_hash=config_hash,
    )
