"""Reproducible dataset construction: balancing, capping, splitting, k-fold.

All sampling draws from ``numpy.random.default_rng(seed)`` over id-sorted
example lists, so a (corpus, plan) pair always yields the same split on any
machine. Split manifests record the plan, the generator, the chosen ids and
subgroup diagnostics; an experiment can be replayed from the manifest alone
plus the corpus.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import GENERATOR_ID
from .corpus import SUBGROUP_ORDER, Corpus, Example
from .errors import SplitError

DEFAULT_TRAIN_RATIO = 0.8
DEFAULT_K = 5
DEFAULT_PET_CAP = 40

# soft warning when train/test ambiguous-PET shares drift apart by more than this
PET_BALANCE_TOLERANCE = 0.10


@dataclass(frozen=True)
class SplitPlan:
    kind: str = "balanced"  # "balanced" or "kfold"
    train_ratio: float = DEFAULT_TRAIN_RATIO
    k: int = DEFAULT_K
    per_pet_cap: int | None = DEFAULT_PET_CAP
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("balanced", "kfold"):
            raise SplitError(f"unknown split kind {self.kind!r}")
        if not (0.0 < self.train_ratio < 1.0):
            raise SplitError(f"train_ratio must be in (0, 1), got {self.train_ratio}")
        if self.k < 2:
            raise SplitError(f"k must be >= 2, got {self.k}")
        if self.per_pet_cap is not None and self.per_pet_cap < 1:
            raise SplitError(f"per_pet_cap must be >= 1 or None, got {self.per_pet_cap}")


def _sorted_by_id(examples: Iterable[Example]) -> list[Example]:
    return sorted(examples, key=lambda ex: ex.id)


def subgroup_partition(examples: Iterable[Example]) -> dict[tuple[int, int], list[Example]]:
    """Partition by (euph_label, vague_label); every example must carry both."""
    groups: dict[tuple[int, int], list[Example]] = {key: [] for key in SUBGROUP_ORDER}
    missing: list[str] = []
    for ex in examples:
        if ex.vague_label is None:
            missing.append(ex.id)
            continue
        groups[(ex.euph_label, ex.vague_label)].append(ex)
    if missing:
        raise SplitError(f"examples without vague labels cannot be split: {sorted(missing)[:5]}")
    return {key: _sorted_by_id(group) for key, group in groups.items()}


def _take(rng: np.random.Generator, pool: Sequence[Example], n: int) -> list[Example]:
    idx = rng.permutation(len(pool))[:n]
    return [pool[i] for i in sorted(idx)]


def balanced_sample(examples: Iterable[Example], rng: np.random.Generator) -> list[Example]:
    """Downsample every (euph, vague) subgroup to the smallest subgroup size."""
    groups = subgroup_partition(examples)
    sizes = {key: len(group) for key, group in groups.items()}
    if min(sizes.values()) == 0:
        empty = [key for key, n in sizes.items() if n == 0]
        raise SplitError(f"cannot balance with empty subgroups {empty}")
    n_min = min(sizes.values())
    out: list[Example] = []
    for key in SUBGROUP_ORDER:
        out.extend(_take(rng, groups[key], n_min))
    return out


def cap_per_pet(
    examples: Sequence[Example], cap: int, rng: np.random.Generator
) -> list[Example]:
    """Cap each (PET, euph_label) group at ``cap`` examples, sampling the
    survivors; input order is preserved for the kept examples."""
    groups: dict[tuple[str, int], list[Example]] = {}
    for ex in examples:
        groups.setdefault((ex.pet_id, ex.euph_label), []).append(ex)
    keep: set[str] = set()
    for key in sorted(groups):
        group = _sorted_by_id(groups[key])
        chosen = group if len(group) <= cap else _take(rng, group, cap)
        keep.update(ex.id for ex in chosen)
    return [ex for ex in examples if ex.id in keep]


def train_test_split(
    examples: Iterable[Example], ratio: float, rng: np.random.Generator
) -> tuple[list[Example], list[Example]]:
    """Per-subgroup split: floor(ratio * n) of each subgroup goes to train."""
    groups = subgroup_partition(examples)
    train: list[Example] = []
    test: list[Example] = []
    for key in SUBGROUP_ORDER:
        group = groups[key]
        if not group:
            continue
        n_train = int(ratio * len(group))
        shuffled = [group[i] for i in rng.permutation(len(group))]
        train.extend(_sorted_by_id(shuffled[:n_train]))
        test.extend(_sorted_by_id(shuffled[n_train:]))
    return train, test


def stratified_kfold(
    examples: Iterable[Example], k: int, rng: np.random.Generator
) -> list[tuple[list[Example], list[Example]]]:
    """k folds stratified by subgroup; per-stratum fold sizes differ by <= 1."""
    groups = subgroup_partition(examples)
    n_total = sum(len(g) for g in groups.values())
    if n_total < k:
        raise SplitError(f"cannot make {k} folds from {n_total} examples")
    fold_tests: list[list[Example]] = [[] for _ in range(k)]
    for key in SUBGROUP_ORDER:
        group = groups[key]
        shuffled = [group[i] for i in rng.permutation(len(group))]
        for j in range(k):
            fold_tests[j].extend(shuffled[j::k])
    folds: list[tuple[list[Example], list[Example]]] = []
    for j in range(k):
        test = _sorted_by_id(fold_tests[j])
        test_ids = {ex.id for ex in test}
        train = _sorted_by_id(ex for g in groups.values() for ex in g if ex.id not in test_ids)
        folds.append((train, test))
    return folds


@dataclass(frozen=True)
class Dataset:
    train: tuple[Example, ...]
    test: tuple[Example, ...]

    def __post_init__(self) -> None:
        overlap = {ex.id for ex in self.train} & {ex.id for ex in self.test}
        if overlap:
            raise SplitError(f"train/test overlap: {sorted(overlap)[:5]}")


def _subgroup_sizes(examples: Iterable[Example]) -> dict[str, int]:
    sizes = {f"{e},{v}": 0 for e, v in SUBGROUP_ORDER}
    for ex in examples:
        sizes[f"{ex.euph_label},{ex.vague_label}"] += 1
    return sizes


def _pet_diagnostics(train: Sequence[Example], test: Sequence[Example]) -> dict[str, object]:
    def profile(split: Sequence[Example]) -> tuple[int, float]:
        pets: dict[str, set[int]] = {}
        for ex in split:
            pets.setdefault(ex.pet_id, set()).add(ex.euph_label)
        ambiguous = sum(1 for labels in pets.values() if len(labels) == 2)
        return len(pets), (ambiguous / len(pets) if pets else 0.0)

    train_pets, train_amb = profile(train)
    test_pets, test_amb = profile(test)
    drift = abs(train_amb - test_amb)
    return {
        "train_unique_pets": train_pets,
        "test_unique_pets": test_pets,
        "train_ambiguous_pet_share": round(train_amb, 4),
        "test_ambiguous_pet_share": round(test_amb, 4),
        "ambiguous_share_drift": round(drift, 4),
        "ambiguous_share_warning": drift > PET_BALANCE_TOLERANCE,
    }


def build_balanced_dataset(corpus: Corpus | Sequence[Example], plan: SplitPlan) -> tuple[Dataset, dict]:
    """Cap, balance, then split. Returns the dataset and its replay manifest.

    The per-PET cap runs first so no single term dominates the balanced pool;
    balancing then equalizes the four subgroups at the smallest size; the
    ratio split happens inside each subgroup.
    """
    if plan.kind != "balanced":
        raise SplitError(f"plan kind {plan.kind!r} does not build a balanced dataset")
    examples = list(corpus)
    rng = np.random.default_rng(plan.seed)
    stages: dict[str, object] = {"input_size": len(examples)}
    if plan.per_pet_cap is not None:
        examples = cap_per_pet(examples, plan.per_pet_cap, rng)
        stages["after_cap"] = len(examples)
    balanced = balanced_sample(examples, rng)
    stages["after_balance"] = len(balanced)
    stages["subgroup_sizes"] = _subgroup_sizes(balanced)
    train, test = train_test_split(balanced, plan.train_ratio, rng)
    dataset = Dataset(tuple(train), tuple(test))
    manifest = {
        "kind": "balanced",
        "plan": asdict(plan),
        "generator": GENERATOR_ID,
        "stages": stages,
        "train_subgroup_sizes": _subgroup_sizes(train),
        "test_subgroup_sizes": _subgroup_sizes(test),
        "diagnostics": _pet_diagnostics(train, test),
        "train_ids": [ex.id for ex in train],
        "test_ids": [ex.id for ex in test],
    }
    return dataset, manifest


def build_kfold(corpus: Corpus | Sequence[Example], plan: SplitPlan) -> tuple[list[Dataset], dict]:
    """Cap, balance, then deal stratified folds. Returns folds plus manifest."""
    if plan.kind != "kfold":
        raise SplitError(f"plan kind {plan.kind!r} does not build folds")
    examples = list(corpus)
    rng = np.random.default_rng(plan.seed)
    stages: dict[str, object] = {"input_size": len(examples)}
    if plan.per_pet_cap is not None:
        examples = cap_per_pet(examples, plan.per_pet_cap, rng)
        stages["after_cap"] = len(examples)
    balanced = balanced_sample(examples, rng)
    stages["after_balance"] = len(balanced)
    stages["subgroup_sizes"] = _subgroup_sizes(balanced)
    folds = [Dataset(tuple(train), tuple(test)) for train, test in stratified_kfold(balanced, plan.k, rng)]
    manifest = {
        "kind": "kfold",
        "plan": asdict(plan),
        "generator": GENERATOR_ID,
        "stages": stages,
        "folds": [
            {
                "train_ids": [ex.id for ex in ds.train],
                "test_ids": [ex.id for ex in ds.test],
                "diagnostics": _pet_diagnostics(ds.train, ds.test),
            }
            for ds in folds
        ],
    }
    return folds, manifest


def write_manifest(manifest: dict, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path: str | Path) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)


def dataset_from_manifest(corpus: Corpus, manifest: dict) -> Dataset:
    """Rebuild a balanced dataset from its manifest ids."""
    if manifest.get("kind") != "balanced":
        raise SplitError("manifest does not describe a balanced dataset")
    return _dataset_from_ids(corpus, manifest["train_ids"], manifest["test_ids"])


def folds_from_manifest(corpus: Corpus, manifest: dict) -> list[Dataset]:
    if manifest.get("kind") != "kfold":
        raise SplitError("manifest does not describe folds")
    return [_dataset_from_ids(corpus, f["train_ids"], f["test_ids"]) for f in manifest["folds"]]


def _dataset_from_ids(corpus: Corpus, train_ids: Sequence[str], test_ids: Sequence[str]) -> Dataset:
    by_id = corpus.by_id()
    missing = [i for i in [*train_ids, *test_ids] if i not in by_id]
    if missing:
        raise SplitError(f"manifest ids missing from corpus: {missing[:5]}")
    return Dataset(
        tuple(by_id[i] for i in train_ids),
        tuple(by_id[i] for i in test_ids),
    )
