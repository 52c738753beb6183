"""Machine assessment of encoding schemes.

Classification metrics over log-mel features (k-NN stand-in classifier),
inception score over its posteriors, reconstruction fidelity, and the
cross-scheme comparison with permutation-test significance. All operations
are pure and deterministic given their seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .codec import UndecodableGeometryError, decode, encode
from .dsp import log_mel_features, mel_filterbank
from .image import GrayImage
from .schemes import EncodingScheme
from .stimuli import StimulusCorpus


class ZeroVarianceError(ValueError):
    """Correlation is undefined: at least one input has zero variance."""


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray  # (n, n) ints, rows = truth, cols = prediction

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if counts.shape[0] != len(self.labels):
            raise ValueError("label count must match matrix size")
        if np.any(counts < 0):
            raise ValueError("confusion counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def from_pairs(cls, labels, truths, predictions) -> "ConfusionMatrix":
        labels = tuple(labels)
        index = {label: i for i, label in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for truth, pred in zip(truths, predictions, strict=True):
            counts[index[truth], index[pred]] += 1
        return cls(labels, counts)

    @property
    def n_items(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[str, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    n_items: int


def prf(cm: ConfusionMatrix) -> MetricsReport:
    """Per-class precision/recall/F1 plus unweighted macro averages.

    Degenerate classes (empty row or column) score 0 rather than erroring.
    """
    counts = cm.counts.astype(np.float64)
    per_class = {}
    for i, label in enumerate(cm.labels):
        col = counts[:, i].sum()
        row = counts[i, :].sum()
        precision = counts[i, i] / col if col > 0 else 0.0
        recall = counts[i, i] / row if row > 0 else 0.0
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        per_class[label] = ClassMetrics(float(precision), float(recall), float(f1))
    n = len(cm.labels)
    return MetricsReport(
        per_class=per_class,
        macro_precision=sum(m.precision for m in per_class.values()) / n,
        macro_recall=sum(m.recall for m in per_class.values()) / n,
        macro_f1=sum(m.f1 for m in per_class.values()) / n,
        n_items=cm.n_items,
    )


def knn_posterior(
    train_features: np.ndarray,
    train_labels,
    query: np.ndarray,
    k: int,
    tau: float = 1.0,
) -> dict[str, float]:
    """Class posterior from Euclidean k-nearest neighbors.

    Score per class present in the k-set is exp(-mean_distance/tau); classes
    outside the k-set get 0. Ties in distance break by training index, so the
    result is deterministic.
    """
    features = np.asarray(train_features, dtype=np.float64)
    labels = list(train_labels)
    if features.ndim != 2 or len(labels) != features.shape[0]:
        raise ValueError("train_features must be (n, d) with one label per row")
    if features.shape[0] == 0:
        raise ValueError("empty training set")
    if not 1 <= k <= features.shape[0]:
        raise ValueError(f"k must be in [1, {features.shape[0]}], got {k}")
    if len(set(labels)) < 2:
        raise ValueError("need at least 2 classes")
    if tau <= 0:
        raise ValueError("tau must be positive")
    q = np.asarray(query, dtype=np.float64)
    distances = np.sqrt(np.sum((features - q) ** 2, axis=1))
    order = np.lexsort((np.arange(len(labels)), distances))[:k]
    by_class: dict[str, list[float]] = {}
    for idx in order:
        by_class.setdefault(labels[idx], []).append(float(distances[idx]))
    means = {c: sum(d) / len(d) for c, d in by_class.items()}
    shift = min(means.values())  # cancels in normalization, avoids underflow
    scores = {c: math.exp(-(m - shift) / tau) for c, m in means.items()}
    total = sum(scores.values())
    posterior = {c: 0.0 for c in dict.fromkeys(labels)}
    for c, s in scores.items():
        posterior[c] = s / total
    return posterior


def inception_score(posteriors) -> float:
    """exp(mean KL(p(y|x) || p_bar)) with natural log and 0*log0 = 0."""
    p = np.asarray(posteriors, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] == 0:
        raise ValueError("posteriors must be a nonempty (n, classes) array")
    if np.any(p < 0):
        raise ValueError("posterior entries must be non-negative")
    sums = p.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise ValueError("each posterior must sum to 1 within 1e-9")
    marginal = p.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(p) - np.log(marginal)), 0.0)
    return float(np.exp(terms.sum(axis=1).mean()))


def pearson(x, y) -> float:
    """Sample Pearson correlation; ZeroVarianceError when undefined."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-D sequences of equal length")
    if len(a) < 2:
        raise ValueError("need at least 2 points")
    da, db = a - a.mean(), b - b.mean()
    va, vb = float(np.dot(da, da)), float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        which = "first" if va == 0.0 else "second"
        raise ZeroVarianceError(f"{which} input has zero variance")
    return float(np.dot(da, db) / math.sqrt(va * vb))


def permutation_test(group_a, group_b, n_perm: int = 10000, seed: int = 0) -> float:
    """Two-sided seeded permutation test for a difference of means.

    p = (1 + #{permuted |diff| >= observed |diff|}) / (1 + n_perm).
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be nonempty")
    if n_perm < 1:
        raise ValueError("n_perm must be >= 1")
    observed = abs(a.mean() - b.mean())
    # sorted pool + smaller-group split make the whole computation a function
    # of the value multiset and the size pair, so exchanging the groups
    # leaves the p-value exactly unchanged
    pooled = np.sort(np.concatenate([a, b]))
    k = min(a.size, b.size)
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_perm):
        perm = rng.permutation(pooled)
        stat = abs(perm[:k].mean() - perm[k:].mean())
        if stat >= observed - 1e-12:
            hits += 1
    return (1 + hits) / (1 + n_perm)


def bonferroni(p: float, m: int) -> float:
    if m < 1:
        raise ValueError("m must be >= 1")
    return min(1.0, p * m)


def reconstruction_fidelity(original: GrayImage, reconstructed: GrayImage) -> dict:
    """PSNR (peak 255, inf for identical) and pixel Pearson (None if undefined)."""
    if original.shape != reconstructed.shape:
        raise ValueError(f"shape mismatch: {original.shape} vs {reconstructed.shape}")
    diff = original.pixels.astype(np.float64) - reconstructed.pixels.astype(np.float64)
    mse = float(np.mean(diff**2))
    psnr = math.inf if mse == 0.0 else 10.0 * math.log10(255.0**2 / mse)
    try:
        r = pearson(original.pixels.ravel(), reconstructed.pixels.ravel())
    except ZeroVarianceError:
        r = None
    return {"psnr_db": psnr, "pearson_r": r}


@dataclass(frozen=True)
class ItemResult:
    stimulus_id: str
    truth: str
    predicted: str
    correct: bool


@dataclass
class SchemeEvaluation:
    scheme_name: str
    metrics: MetricsReport
    confusion: ConfusionMatrix
    inception: float
    fidelity_pearson_mean: float | None
    fidelity_psnr_mean_db: float | None
    n_fidelity: int
    n_undecodable: int
    items: list[ItemResult] = field(default_factory=list)


def _features_for(image: GrayImage, scheme: EncodingScheme, fb, frame_len, hop, segments):
    clip = encode(image, scheme)
    return log_mel_features(
        clip, fb, frame_len_samples=frame_len, hop_samples=hop, segments=segments
    )


def evaluate_scheme(
    corpus: StimulusCorpus,
    scheme: EncodingScheme,
    k: int = 5,
    tau: float = 1.0,
    lesson: str = "objects",
    frame_len: int = 512,
    hop: int = 160,
    segments: int = 16,
) -> SchemeEvaluation:
    """Full pipeline: encode + featurize the corpus, classify the test split
    against the train split, and measure decode-reconstruction fidelity.

    Undecodable scheme geometry excludes items from the fidelity mean (with a
    count) instead of failing the evaluation.
    """
    train = corpus.split_items(lesson, "train")
    test = corpus.split_items(lesson, "test")
    if not train or not test:
        raise ValueError(f"corpus lesson {lesson!r} needs both train and test splits")
    labels = sorted({item.label for item in train})
    fb = mel_filterbank(sample_rate_hz=scheme.sample_rate_hz, frame_len_samples=frame_len)
    train_feats = np.stack(
        [_features_for(item.image, scheme, fb, frame_len, hop, segments) for item in train]
    )
    train_labels = [item.label for item in train]

    items: list[ItemResult] = []
    posteriors = np.zeros((len(test), len(labels)))
    pearson_vals: list[float] = []
    psnr_vals: list[float] = []
    n_undecodable = 0
    for row, item in enumerate(test):
        feats = _features_for(item.image, scheme, fb, frame_len, hop, segments)
        posterior = knn_posterior(train_feats, train_labels, feats, k=k, tau=tau)
        for col, label in enumerate(labels):
            posteriors[row, col] = posterior.get(label, 0.0)
        predicted = max(labels, key=lambda lb: (posterior.get(lb, 0.0), lb))
        items.append(ItemResult(item.stimulus_id, item.label, predicted, predicted == item.label))
        rows, cols = item.image.shape
        try:
            rebuilt = decode(encode(item.image, scheme), scheme, rows, cols)
        except UndecodableGeometryError:
            n_undecodable += 1
            continue
        fid = reconstruction_fidelity(item.image, rebuilt)
        if fid["pearson_r"] is not None:
            pearson_vals.append(fid["pearson_r"])
        if math.isfinite(fid["psnr_db"]):
            psnr_vals.append(fid["psnr_db"])

    cm = ConfusionMatrix.from_pairs(
        labels, [it.truth for it in items], [it.predicted for it in items]
    )
    return SchemeEvaluation(
        scheme_name=scheme.name,
        metrics=prf(cm),
        confusion=cm,
        inception=inception_score(posteriors),
        fidelity_pearson_mean=(
            sum(pearson_vals) / len(pearson_vals) if pearson_vals else None
        ),
        fidelity_psnr_mean_db=(sum(psnr_vals) / len(psnr_vals) if psnr_vals else None),
        n_fidelity=len(pearson_vals),
        n_undecodable=n_undecodable,
        items=items,
    )


@dataclass
class SchemeComparison:
    evaluations: list[SchemeEvaluation]
    ranking: list[str]  # scheme names, best macro F1 first
    pairwise_p_adjusted: dict[tuple[str, str], float]
    external_correlation: dict[str, float]


def compare_schemes(
    evaluations: list[SchemeEvaluation],
    n_perm: int = 10000,
    seed: int = 0,
    external_metric: dict[str, float] | None = None,
) -> SchemeComparison:
    """Rank schemes and test pairwise differences on per-item correctness.

    Bonferroni factor is the number of pairs. When an external metric vector
    (scheme name -> value, e.g. a human score) is supplied, reports Pearson r
    between it and each machine metric across schemes.
    """
    if len(evaluations) < 2:
        raise ValueError("need at least 2 evaluated schemes")
    reference = [it.stimulus_id for it in evaluations[0].items]
    for ev in evaluations[1:]:
        if [it.stimulus_id for it in ev.items] != reference:
            raise ValueError("schemes were not evaluated on the identical corpus split")

    ranking = [
        ev.scheme_name
        for ev in sorted(evaluations, key=lambda e: (-e.metrics.macro_f1, e.scheme_name))
    ]
    pairs = [
        (evaluations[i], evaluations[j])
        for i in range(len(evaluations))
        for j in range(i + 1, len(evaluations))
    ]
    adjusted = {}
    for ev_a, ev_b in pairs:
        correct_a = [1.0 if it.correct else 0.0 for it in ev_a.items]
        correct_b = [1.0 if it.correct else 0.0 for it in ev_b.items]
        p = permutation_test(correct_a, correct_b, n_perm=n_perm, seed=seed)
        adjusted[(ev_a.scheme_name, ev_b.scheme_name)] = bonferroni(p, len(pairs))

    external_correlation: dict[str, float] = {}
    if external_metric is not None:
        missing = [ev.scheme_name for ev in evaluations if ev.scheme_name not in external_metric]
        if missing:
            raise ValueError(f"external metric missing schemes {missing}")
        ext = [external_metric[ev.scheme_name] for ev in evaluations]
        machine = {
            "macro_f1": [ev.metrics.macro_f1 for ev in evaluations],
            "inception": [ev.inception for ev in evaluations],
        }
        if all(ev.fidelity_pearson_mean is not None for ev in evaluations):
            machine["fidelity_pearson"] = [ev.fidelity_pearson_mean for ev in evaluations]
        for name, vec in machine.items():
            try:
                external_correlation[name] = pearson(vec, ext)
            except ZeroVarianceError:
                continue  # undefined correlations are omitted, not faked
    return SchemeComparison(evaluations, ranking, adjusted, external_correlation)


def _fmt(value) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else f"{value:.6f}"
    return str(value)


def comparison_to_text(cmp: SchemeComparison) -> str:
    """Structured key-value report, one `key = value` pair per line."""
    lines = [f"ranking = {','.join(cmp.ranking)}"]
    for ev in cmp.evaluations:
        prefix = f"scheme.{ev.scheme_name}"
        lines += [
            f"{prefix}.macro_precision = {_fmt(ev.metrics.macro_precision)}",
            f"{prefix}.macro_recall = {_fmt(ev.metrics.macro_recall)}",
            f"{prefix}.macro_f1 = {_fmt(ev.metrics.macro_f1)}",
            f"{prefix}.inception_score = {_fmt(ev.inception)}",
            f"{prefix}.fidelity_pearson_mean = {_fmt(ev.fidelity_pearson_mean)}",
            f"{prefix}.fidelity_psnr_mean_db = {_fmt(ev.fidelity_psnr_mean_db)}",
            f"{prefix}.n_fidelity = {ev.n_fidelity}",
            f"{prefix}.n_undecodable = {ev.n_undecodable}",
            f"{prefix}.n_test_items = {ev.metrics.n_items}",
        ]
    for (a, b), p in cmp.pairwise_p_adjusted.items():
        lines.append(f"pair.{a}.vs.{b}.p_adjusted = {_fmt(p)}")
    for name, r in cmp.external_correlation.items():
        lines.append(f"external_correlation.{name} = {_fmt(r)}")
    names = {ev.scheme_name for ev in cmp.evaluations}
    if {"tanh", "long", "primary"} <= names:
        tanh_first = cmp.ranking[0] == "tanh"
        long_over_primary = cmp.ranking.index("long") < cmp.ranking.index("primary")
        lines.append(f"directional.tanh_ranks_first = {str(tanh_first).lower()}")
        lines.append(f"directional.long_outranks_primary = {str(long_over_primary).lower()}")
        if not (tanh_first and long_over_primary):
            lines.append(
                "directional.note = MISMATCH: expected tanh first and long over"
                " primary; synthetic corpus ranking differs"
            )
    return "\n".join(lines) + "\n"


def comparison_to_csv(cmp: SchemeComparison) -> str:
    header = (
        "scheme,macro_precision,macro_recall,macro_f1,inception_score,"
        "fidelity_pearson_mean,fidelity_psnr_mean_db,n_fidelity,n_undecodable,n_test_items"
    )
    rows = [header]
    for ev in cmp.evaluations:
        rows.append(
            ",".join(
                [
                    ev.scheme_name,
                    _fmt(ev.metrics.macro_precision),
                    _fmt(ev.metrics.macro_recall),
                    _fmt(ev.metrics.macro_f1),
                    _fmt(ev.inception),
                    _fmt(ev.fidelity_pearson_mean),
                    _fmt(ev.fidelity_psnr_mean_db),
                    str(ev.n_fidelity),
                    str(ev.n_undecodable),
                    str(ev.metrics.n_items),
                ]
            )
        )
    return "\n".join(rows) + "\n"
