"""Classification harness: backends, training config, evaluation, multi-run
experiments with reproducible provenance.

Backends are pluggable through a registry. The reference backend is a fully
deterministic linear model over sensitivity and word-vector features, so the
harness can be exercised end to end without any deep-learning stack;
transformer adapters register lazily and raise a clear error when their
dependencies are absent.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import GENERATOR_ID, __version__
from .corpus import Corpus, Example
from .embedding import VectorTable, embed_word
from .errors import BackendUnavailableError, TrainingError
from .sensitivity import SensitiveLexicon
from .splits import Dataset, SplitPlan, build_balanced_dataset, build_kfold
from .textnorm import tokenize

# defaults used by fine-tuned transformer adapters when the config leaves a
# field unset; other backends resolve their own
TRANSFORMER_DEFAULTS = {"epochs": 10, "lr": 1e-5, "batch_size": 16}


@dataclass(frozen=True)
class TrainConfig:
    """Requested training parameters; None means backend default.

    ``strip_markers`` trains and predicts on marker-free text, hiding the
    PET position from the model.
    """

    epochs: int | None = None
    lr: float | None = None
    batch_size: int | None = None
    strip_markers: bool = False

    def __post_init__(self) -> None:
        if self.epochs is not None and self.epochs < 0:
            raise TrainingError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr is not None and self.lr <= 0:
            raise TrainingError(f"lr must be positive, got {self.lr}")
        if self.batch_size is not None and self.batch_size < 1:
            raise TrainingError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class BackendCapabilities:
    fine_tunable: bool
    deterministic: bool
    languages: tuple[str, ...] | None = None  # None = no declared restriction


class TrainedModel:
    def predict(self, examples: Sequence[Example]) -> dict[str, int]:
        raise NotImplementedError


class ClassifierBackend:
    name: str = ""
    display_name: str = ""

    def capabilities(self) -> BackendCapabilities:
        raise NotImplementedError

    def resolved_config(self, config: TrainConfig) -> dict:
        """Effective parameters after filling backend defaults; recorded in
        run provenance."""
        raise NotImplementedError

    def fit(self, train: Sequence[Example], config: TrainConfig, seed: int) -> TrainedModel:
        raise NotImplementedError


_REGISTRY: dict[str, Callable[..., ClassifierBackend]] = {}


def register_backend(name: str, factory: Callable[..., ClassifierBackend]) -> None:
    if name in _REGISTRY:
        raise TrainingError(f"backend {name!r} already registered")
    _REGISTRY[name] = factory


def backend_names() -> list[str]:
    return sorted(_REGISTRY)


def make_backend(
    name: str,
    table: VectorTable | None = None,
    lexicon: SensitiveLexicon | None = None,
) -> ClassifierBackend:
    factory = _REGISTRY.get(name)
    if factory is None:
        raise TrainingError(f"unknown backend {name!r}; registered: {backend_names()}")
    return factory(table=table, lexicon=lexicon)


class _LinearModel(TrainedModel):
    def __init__(self, backend: "ReferenceLinearBackend", weights: np.ndarray,
                 mean: np.ndarray, scale: np.ndarray, strip_markers: bool):
        self._backend = backend
        self._weights = weights
        self._mean = mean
        self._scale = scale
        self._strip_markers = strip_markers

    def predict(self, examples: Sequence[Example]) -> dict[str, int]:
        X = self._backend.features(examples, self._strip_markers)
        Xz = np.hstack([(X - self._mean) / self._scale, np.ones((len(examples), 1))])
        prob = 1.0 / (1.0 + np.exp(-Xz @ self._weights))
        return {ex.id: int(p > 0.5) for ex, p in zip(examples, prob)}


class ReferenceLinearBackend(ClassifierBackend):
    """Deterministic logistic regression over lexicon-hit and word-vector
    features.

    Features per example: per-lexicon-word hit rates, total normalized
    sensitivity score, OOV fraction, the mean in-vocabulary word vector, and
    (unless markers are stripped) a small PET block. Features are z-scored
    with training-set statistics; training is full-batch gradient descent
    with a fixed iteration count and seed-derived initialization, so the same
    (data, config, seed) triple always yields the same model.
    """

    name = "reference-linear"
    display_name = "Reference linear"

    DEFAULT_ITERATIONS = 400
    DEFAULT_LR = 0.5
    L2 = 1e-4
    INIT_STD = 0.01

    def __init__(self, table: VectorTable | None = None, lexicon: SensitiveLexicon | None = None):
        if table is None or lexicon is None:
            raise TrainingError("reference-linear needs a vector table and a lexicon")
        self.table = table
        self.lexicon = lexicon
        vecs = []
        for word in lexicon.words:
            v = embed_word(table, word)
            vecs.append(np.zeros(table.dim) if v is None else np.asarray(v, dtype=float))
        self._lex = np.vstack(vecs)
        lex_norms = np.linalg.norm(self._lex, axis=1)
        lex_norms[lex_norms == 0] = 1.0
        self._lex_unit = self._lex / lex_norms[:, None]
        self._vec_cache: dict[str, np.ndarray | None] = {}

    def capabilities(self) -> BackendCapabilities:
        return BackendCapabilities(fine_tunable=False, deterministic=True, languages=None)

    def resolved_config(self, config: TrainConfig) -> dict:
        return {
            "iterations": self.DEFAULT_ITERATIONS if config.epochs is None else config.epochs,
            "lr": self.DEFAULT_LR if config.lr is None else config.lr,
            "l2": self.L2,
            "init_std": self.INIT_STD,
            "standardize": "zscore",
            "strip_markers": config.strip_markers,
        }

    def _vector(self, token: str) -> np.ndarray | None:
        if token not in self._vec_cache:
            self._vec_cache[token] = embed_word(self.table, token)
        return self._vec_cache[token]

    def _hit_counts(self, tokens: Sequence[str]) -> tuple[np.ndarray, int, list[np.ndarray]]:
        """Per-lexicon-word hit counts over tokens, OOV count, token vectors."""
        hits = np.zeros(len(self.lexicon.words))
        oov = 0
        vectors: list[np.ndarray] = []
        for tok in tokens:
            vec = self._vector(tok)
            if vec is None:
                oov += 1
                continue
            vectors.append(vec)
            norm = np.linalg.norm(vec)
            if norm == 0:
                continue
            sims = self._lex_unit @ (vec / norm)
            hits += sims > self.lexicon.threshold
        return hits, oov, vectors

    def features(self, examples: Sequence[Example], strip_markers: bool) -> np.ndarray:
        rows = []
        for ex in examples:
            tokens = tokenize(ex.clean_text)
            n = max(len(tokens), 1)
            hits, oov, vectors = self._hit_counts(tokens)
            mean_vec = np.mean(vectors, axis=0) if vectors else np.zeros(self.table.dim)
            parts = [hits / n, [hits.sum() / n, oov / n], mean_vec]
            if not strip_markers:
                pet_tokens = tokenize(ex.pet)
                pn = max(len(pet_tokens), 1)
                pet_hits, pet_oov, _ = self._hit_counts(pet_tokens)
                parts.append([len(pet_tokens) / n, (pet_hits > 0).sum() / pn, pet_oov / pn])
            rows.append(np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts]))
        return np.vstack(rows)

    def fit(self, train: Sequence[Example], config: TrainConfig, seed: int) -> TrainedModel:
        if not train:
            raise TrainingError("empty training set")
        resolved = self.resolved_config(config)
        X = self.features(train, config.strip_markers)
        y = np.array([ex.euph_label for ex in train], dtype=float)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        Xz = np.hstack([(X - mean) / scale, np.ones((len(train), 1))])
        rng = np.random.default_rng(seed)
        w = rng.normal(0.0, self.INIT_STD, Xz.shape[1])
        lr = resolved["lr"]
        for _ in range(resolved["iterations"]):
            prob = 1.0 / (1.0 + np.exp(-Xz @ w))
            grad = Xz.T @ (prob - y) / len(y)
            grad[:-1] += self.L2 * w[:-1]
            w = w - lr * grad
        return _LinearModel(self, w, mean, scale, config.strip_markers)


class TransformerBackend(ClassifierBackend):
    """Fine-tuned transformer adapter; requires the optional deep-learning
    stack and is never exercised by the test suite."""

    def __init__(self, name: str, display_name: str, model_id: str, **_ignored):
        self.name = name
        self.display_name = display_name
        self.model_id = model_id

    def capabilities(self) -> BackendCapabilities:
        return BackendCapabilities(fine_tunable=True, deterministic=False, languages=None)

    def resolved_config(self, config: TrainConfig) -> dict:
        return {
            "model_id": self.model_id,
            "epochs": TRANSFORMER_DEFAULTS["epochs"] if config.epochs is None else config.epochs,
            "lr": TRANSFORMER_DEFAULTS["lr"] if config.lr is None else config.lr,
            "batch_size": TRANSFORMER_DEFAULTS["batch_size"] if config.batch_size is None else config.batch_size,
            "strip_markers": config.strip_markers,
        }

    def fit(self, train: Sequence[Example], config: TrainConfig, seed: int) -> TrainedModel:
        try:
            import torch  # noqa: F401
            import transformers  # noqa: F401
        except ImportError as exc:
            raise BackendUnavailableError(
                f"backend {self.name!r} needs torch and transformers installed"
            ) from exc
        raise BackendUnavailableError(
            f"backend {self.name!r} has no bundled fine-tuning loop in this build"
        )


register_backend("reference-linear", lambda **kw: ReferenceLinearBackend(**kw))
for _name, _display, _model in (
    ("mbert", "mBERT", "bert-base-multilingual-cased"),
    ("xlmr-base", "XLM-RoBERTa-base", "xlm-roberta-base"),
    ("xlmr-large", "XLM-RoBERTa-large", "xlm-roberta-large"),
):
    register_backend(_name, lambda _n=_name, _d=_display, _m=_model, **kw: TransformerBackend(_n, _d, _m, **kw))


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: tuple[str, ...] = ()


@dataclass(frozen=True)
class Metrics:
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: dict[int, ClassMetrics]
    n: int


def _safe_ratio(num: int, den: int, flag: str, flags: list[str]) -> float:
    # 0/0 is reported as 0 and flagged, never hidden
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def evaluate(gold: Mapping[str, int], predictions: Mapping[str, int]) -> Metrics:
    if set(gold) != set(predictions):
        missing = sorted(set(gold) - set(predictions))
        extra = sorted(set(predictions) - set(gold))
        raise TrainingError(f"prediction ids do not match gold ids (missing {missing[:3]}, extra {extra[:3]})")
    if not gold:
        raise TrainingError("cannot evaluate an empty test set")
    per_class: dict[int, ClassMetrics] = {}
    for cls in (0, 1):
        tp = sum(1 for i, g in gold.items() if g == cls and predictions[i] == cls)
        fp = sum(1 for i, g in gold.items() if g != cls and predictions[i] == cls)
        fn = sum(1 for i, g in gold.items() if g == cls and predictions[i] != cls)
        flags: list[str] = []
        p = _safe_ratio(tp, tp + fp, "precision", flags)
        r = _safe_ratio(tp, tp + fn, "recall", flags)
        f1 = 0.0
        if p + r == 0:
            flags.append("f1")
        else:
            f1 = 2 * p * r / (p + r)
        per_class[cls] = ClassMetrics(p, r, f1, support=tp + fn, degenerate=tuple(flags))
    return Metrics(
        macro_precision=(per_class[0].precision + per_class[1].precision) / 2,
        macro_recall=(per_class[0].recall + per_class[1].recall) / 2,
        macro_f1=(per_class[0].f1 + per_class[1].f1) / 2,
        per_class=per_class,
        n=len(gold),
    )


@dataclass(frozen=True)
class RunRecord:
    index: int
    seed: int
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    predictions: dict[str, int]
    metrics: Metrics


@dataclass(frozen=True)
class Aggregate:
    macro_precision: float
    macro_recall: float
    macro_f1: float
    n_runs: int


@dataclass(frozen=True)
class RunResults:
    runs: tuple[RunRecord, ...]
    aggregate: Aggregate
    misclass_counts: dict[str, int]
    times_in_test: dict[str, int]
    provenance: dict = field(default_factory=dict)


def _run_one(
    index: int,
    seed: int,
    dataset: Dataset,
    backend: ClassifierBackend,
    config: TrainConfig,
) -> RunRecord:
    overlap = {ex.id for ex in dataset.train} & {ex.id for ex in dataset.test}
    if overlap:
        raise TrainingError(f"train/test contamination: {sorted(overlap)[:5]}")
    model = backend.fit(dataset.train, config, seed)
    predictions = model.predict(dataset.test)
    gold = {ex.id: ex.euph_label for ex in dataset.test}
    metrics = evaluate(gold, predictions)
    return RunRecord(
        index=index,
        seed=seed,
        train_ids=tuple(ex.id for ex in dataset.train),
        test_ids=tuple(ex.id for ex in dataset.test),
        predictions=predictions,
        metrics=metrics,
    )


def _aggregate(runs: Sequence[RunRecord]) -> Aggregate:
    return Aggregate(
        macro_precision=float(np.mean([r.metrics.macro_precision for r in runs])),
        macro_recall=float(np.mean([r.metrics.macro_recall for r in runs])),
        macro_f1=float(np.mean([r.metrics.macro_f1 for r in runs])),
        n_runs=len(runs),
    )


def _error_counts(runs: Sequence[RunRecord], gold: Mapping[str, int]) -> tuple[dict[str, int], dict[str, int]]:
    misclass: dict[str, int] = {}
    in_test: dict[str, int] = {}
    for run in runs:
        for ex_id in run.test_ids:
            in_test[ex_id] = in_test.get(ex_id, 0) + 1
            if run.predictions[ex_id] != gold[ex_id]:
                misclass[ex_id] = misclass.get(ex_id, 0) + 1
    return dict(sorted(misclass.items())), dict(sorted(in_test.items()))


def run_experiment(
    corpus: Corpus,
    plan: SplitPlan,
    backend: ClassifierBackend,
    config: TrainConfig = TrainConfig(),
    n_runs: int = 10,
    seed: int = 0,
) -> RunResults:
    """Run the full experiment protocol.

    Balanced plans run ``n_runs`` times with seeds seed, seed+1, ...; each
    run resamples its own balanced split. K-fold plans build the folds once
    from ``seed`` and run once per fold. Misclassification counts are
    reported next to how often each example appeared in a test set, since
    resampling means the denominators differ per example.
    """
    if n_runs < 1:
        raise TrainingError(f"n_runs must be >= 1, got {n_runs}")
    runs: list[RunRecord] = []
    if plan.kind == "balanced":
        for i in range(n_runs):
            run_seed = seed + i
            dataset, _ = build_balanced_dataset(corpus, replace(plan, seed=run_seed))
            runs.append(_run_one(i, run_seed, dataset, backend, config))
    else:
        folds, _ = build_kfold(corpus, replace(plan, seed=seed))
        runs.extend(_run_one(i, seed + i, fold, backend, config) for i, fold in enumerate(folds))
    gold = {ex.id: ex.euph_label for ex in corpus}
    misclass, in_test = _error_counts(runs, gold)
    provenance = {
        "backend": backend.name,
        "backend_display": backend.display_name,
        "backend_config": backend.resolved_config(config),
        "train_config": asdict(config),
        "plan": asdict(plan),
        "n_runs": len(runs),
        "seed": seed,
        "generator": GENERATOR_ID,
        "version": __version__,
        "language": corpus.language_tag or ",".join(corpus.languages()),
    }
    return RunResults(
        runs=tuple(runs),
        aggregate=_aggregate(runs),
        misclass_counts=misclass,
        times_in_test=in_test,
        provenance=provenance,
    )


def run_replay(
    corpus: Corpus,
    datasets: Sequence[Dataset],
    backend: ClassifierBackend,
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
    plan: SplitPlan | None = None,
) -> RunResults:
    """Re-run training on externally supplied datasets (e.g. from a split
    manifest) instead of sampling fresh ones."""
    runs = [_run_one(i, seed + i, ds, backend, config) for i, ds in enumerate(datasets)]
    gold = {ex.id: ex.euph_label for ex in corpus}
    misclass, in_test = _error_counts(runs, gold)
    provenance = {
        "backend": backend.name,
        "backend_display": backend.display_name,
        "backend_config": backend.resolved_config(config),
        "train_config": asdict(config),
        "plan": None if plan is None else asdict(plan),
        "n_runs": len(runs),
        "seed": seed,
        "generator": GENERATOR_ID,
        "version": __version__,
        "language": corpus.language_tag or ",".join(corpus.languages()),
        "replayed": True,
    }
    return RunResults(tuple(runs), _aggregate(runs), misclass, in_test, provenance)


def _metrics_to_dict(metrics: Metrics) -> dict:
    return {
        "macro_precision": metrics.macro_precision,
        "macro_recall": metrics.macro_recall,
        "macro_f1": metrics.macro_f1,
        "n": metrics.n,
        "per_class": {
            str(cls): asdict(cm) for cls, cm in sorted(metrics.per_class.items())
        },
    }


def _metrics_from_dict(obj: dict) -> Metrics:
    per_class = {
        int(cls): ClassMetrics(
            precision=cm["precision"],
            recall=cm["recall"],
            f1=cm["f1"],
            support=cm["support"],
            degenerate=tuple(cm["degenerate"]),
        )
        for cls, cm in obj["per_class"].items()
    }
    return Metrics(
        macro_precision=obj["macro_precision"],
        macro_recall=obj["macro_recall"],
        macro_f1=obj["macro_f1"],
        per_class=per_class,
        n=obj["n"],
    )


def save_run_results(results: RunResults, path: str | Path) -> None:
    payload = {
        "runs": [
            {
                "index": r.index,
                "seed": r.seed,
                "train_ids": list(r.train_ids),
                "test_ids": list(r.test_ids),
                "predictions": r.predictions,
                "metrics": _metrics_to_dict(r.metrics),
            }
            for r in results.runs
        ],
        "aggregate": asdict(results.aggregate),
        "misclass_counts": results.misclass_counts,
        "times_in_test": results.times_in_test,
        "provenance": results.provenance,
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_run_results(path: str | Path) -> RunResults:
    with Path(path).open(encoding="utf-8") as fh:
        payload = json.load(fh)
    runs = tuple(
        RunRecord(
            index=r["index"],
            seed=r["seed"],
            train_ids=tuple(r["train_ids"]),
            test_ids=tuple(r["test_ids"]),
            predictions=dict(r["predictions"]),
            metrics=_metrics_from_dict(r["metrics"]),
        )
        for r in payload["runs"]
    )
    agg = Aggregate(**payload["aggregate"])
    return RunResults(
        runs=runs,
        aggregate=agg,
        misclass_counts=dict(payload["misclass_counts"]),
        times_in_test=dict(payload["times_in_test"]),
        provenance=dict(payload["provenance"]),
    )
