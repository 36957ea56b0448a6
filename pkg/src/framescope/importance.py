"""Classifier-based feature-importance contrasts between label sources.

Fits are in-sample by design: the models explain which features drive a
few hundred labels, they do not predict. Forest importances are impurity
based; linear rankings use |coefficient| on standardized features so mixed
scales stay comparable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.multiclass import OneVsRestClassifier

from .features import FEATURE_NAMES

MODEL_KINDS = ("random_forest", "logistic_regression", "one_vs_rest")
LABEL_SOURCES = ("human", "llm")

ABSTRACT_FEATURES = frozenset(
    ["toxicity", "sentiment_compound", "sentiment_pos", "sentiment_neg", "sentiment_neu"]
)


@dataclass
class ImportanceReport:
    label_source: str
    model: str
    ranking: list[tuple[str, float]]
    accuracy: float
    per_frame: dict[str, list[tuple[str, float]]] = field(default_factory=dict)

    def rank_of(self, feature: str) -> int:
        for i, (name, _) in enumerate(self.ranking, start=1):
            if name == feature:
                return i
        raise KeyError(feature)

    def write_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("feature\timportance\n")
            for name, value in self.ranking:
                fh.write(f"{name}\t{value:.6g}\n")


def standardize(matrix: np.ndarray) -> np.ndarray:
    """Center/scale columns; zero-variance columns are centered only."""
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return (matrix - mean) / std


def _ranked(names: Sequence[str], importances: np.ndarray) -> list[tuple[str, float]]:
    pairs = [(name, float(v)) for name, v in zip(names, importances)]
    pairs.sort(key=lambda kv: (-kv[1], kv[0]))
    return pairs


def train_and_rank(
    features: np.ndarray,
    labels: Sequence[str],
    model: str = "random_forest",
    seed: int = 0,
    *,
    label_source: str = "human",
    feature_names: Sequence[str] = FEATURE_NAMES,
) -> ImportanceReport:
    """Fit one classifier on the full set and rank features by importance."""
    if model not in MODEL_KINDS:
        raise ValueError(f"model must be one of {MODEL_KINDS}")
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    if X.shape[0] != y.shape[0]:
        raise ValueError("features/labels length mismatch")
    if len(set(y.tolist())) < 2:
        raise ValueError("degenerate label set")
    if X.shape[1] != len(feature_names):
        raise ValueError("feature matrix width does not match feature names")

    # Canonicalize row order so rankings are invariant to input permutation
    # (bootstrap draws in the forest depend on row positions).
    order = np.lexsort(tuple(X[:, j] for j in range(X.shape[1] - 1, -1, -1)) + (y,))
    X, y = X[order], y[order]

    per_frame: dict[str, list[tuple[str, float]]] = {}
    if model == "random_forest":
        clf = RandomForestClassifier(n_estimators=200, random_state=seed)
        clf.fit(X, y)
        importances = clf.feature_importances_
        accuracy = float(clf.score(X, y))
    else:
        Xs = standardize(X)
        if model == "logistic_regression":
            clf = LogisticRegression(max_iter=2000, random_state=seed)
            clf.fit(Xs, y)
            importances = np.abs(clf.coef_).mean(axis=0)
            accuracy = float(clf.score(Xs, y))
        else:
            clf = OneVsRestClassifier(LogisticRegression(max_iter=2000, random_state=seed))
            clf.fit(Xs, y)
            coef = np.vstack([est.coef_[0] for est in clf.estimators_])
            importances = np.abs(coef).mean(axis=0)
            accuracy = float(clf.score(Xs, y))
            for cls_name, row in zip(clf.classes_, coef):
                pairs = [(name, float(v)) for name, v in zip(feature_names, row)]
                pairs.sort(key=lambda kv: (-abs(kv[1]), kv[0]))
                per_frame[str(cls_name)] = pairs

    return ImportanceReport(
        label_source=label_source,
        model=model,
        ranking=_ranked(feature_names, importances),
        accuracy=accuracy,
        per_frame=per_frame,
    )


@dataclass(frozen=True)
class FeatureTaxonomy:
    """Partition of the feature schema into abstract vs objective features."""

    abstract: frozenset[str]
    objective: frozenset[str]

    @classmethod
    def default(cls, feature_names: Sequence[str] = FEATURE_NAMES) -> "FeatureTaxonomy":
        abstract = frozenset(n for n in feature_names if n in ABSTRACT_FEATURES)
        objective = frozenset(feature_names) - abstract
        return cls(abstract=abstract, objective=objective)


@dataclass
class ContrastRow:
    feature_class: str
    mean_rank_human: float
    mean_rank_llm: float

    @property
    def delta(self) -> float:
        return self.mean_rank_human - self.mean_rank_llm


def abstract_vs_objective_summary(
    report_human: ImportanceReport,
    report_llm: ImportanceReport,
    taxonomy: FeatureTaxonomy | None = None,
) -> list[ContrastRow]:
    """Mean importance rank of abstract vs objective features per label source.

    Lower mean rank = higher priority; a negative human-minus-llm delta on
    the abstract row means humans lean more on abstract features.
    """
    if taxonomy is None:
        taxonomy = FeatureTaxonomy.default([name for name, _ in report_human.ranking])
    rows = []
    for label, names in (("abstract", taxonomy.abstract), ("objective", taxonomy.objective)):
        if not names:
            continue
        rows.append(
            ContrastRow(
                feature_class=label,
                mean_rank_human=sum(report_human.rank_of(n) for n in names) / len(names),
                mean_rank_llm=sum(report_llm.rank_of(n) for n in names) / len(names),
            )
        )
    return rows


def write_contrast_markdown(
    rows: Sequence[ContrastRow],
    reports: Sequence[ImportanceReport],
    path: str | Path,
    top_n: int = 10,
) -> None:
    lines = ["# Feature priority contrast", ""]
    lines.append("| feature class | mean rank (human) | mean rank (llm) |")
    lines.append("|---|---|---|")
    for row in rows:
        lines.append(f"| {row.feature_class} | {row.mean_rank_human:.1f} | {row.mean_rank_llm:.1f} |")
    lines.append("")
    for report in reports:
        lines.append(f"## {report.label_source} / {report.model} (in-sample accuracy {report.accuracy:.2f})")
        lines.append("")
        for name, value in report.ranking[:top_n]:
            lines.append(f"- {name}: {value:.4f}")
        lines.append("")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
