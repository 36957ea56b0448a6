"""Per-chunk textual feature extraction.

The feature vector covers toxicity, lexicon-and-rule sentiment, counts of
modality / hedging / degree-modifier terms, part-of-speech tag counts over a
fixed universal tag set, and per-frame vocabulary hits. All lexicons ship as
TSV assets and can be overridden from a directory.

The sentiment scorer is a self-contained reimplementation of the familiar
valence-lexicon approach: summed token valences with a 3-token negation
window and degree-modifier scaling, squashed by s / sqrt(s^2 + 15).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .frames import FRAMES, Frame
from .text import normalize_text, strip_token_punct

SENTIMENT_ALPHA = 15.0
NEGATION_WINDOW = 3
NEGATION_SCALAR = -0.74
_DEGREE_DECAY = (1.0, 0.95, 0.9)  # weight by distance 1..3 before the scored token

UNIVERSAL_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PRT", "PUNCT", "X")


def _read_tsv(path) -> dict[str, float]:
    out: dict[str, float] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        term, _, value = line.partition("\t")
        out[term.strip().lower()] = float(value) if value.strip() else 1.0
    return out


def _read_frame_vocab(path) -> dict[Frame, tuple[str, ...]]:
    vocab: dict[Frame, list[str]] = {f: [] for f in FRAMES}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        frame_name, _, term = line.partition("\t")
        vocab[Frame(frame_name.strip().lower())].append(term.strip().lower())
    return {f: tuple(terms) for f, terms in vocab.items()}


@dataclass(frozen=True)
class Lexicons:
    valence: Mapping[str, float]
    modality: frozenset[str]
    hedging: frozenset[str]
    degree: Mapping[str, float]
    negators: frozenset[str]
    toxicity: frozenset[str]
    frame_vocab: Mapping[Frame, tuple[str, ...]]


def load_lexicons(directory: str | Path | None = None) -> Lexicons:
    """Load the packaged lexicons, or a directory holding the same TSV names."""
    if directory is None:
        root = resources.files("framescope.assets").joinpath("lexicons")
    else:
        root = Path(directory)
    return Lexicons(
        valence=_read_tsv(root / "valence.tsv"),
        modality=frozenset(_read_tsv(root / "modality.tsv")),
        hedging=frozenset(_read_tsv(root / "hedging.tsv")),
        degree=_read_tsv(root / "degree.tsv"),
        negators=frozenset(_read_tsv(root / "negators.tsv")),
        toxicity=frozenset(_read_tsv(root / "toxicity.tsv")),
        frame_vocab=_read_frame_vocab(root / "frame_vocab.tsv"),
    )


def sentiment_tokens(text: str) -> list[str]:
    """Casefolded tokens with edge punctuation stripped; empties removed."""
    return [t for t in (strip_token_punct(w).casefold() for w in normalize_text(text).split()) if t]


def _is_negator(token: str, negators: frozenset[str]) -> bool:
    return token in negators or token.endswith("n't")


def sentiment_score(
    text: str,
    valence_lexicon: Mapping[str, float],
    *,
    degree: Mapping[str, float] | None = None,
    negators: frozenset[str] | None = None,
) -> tuple[float, float, float, float]:
    """Return (compound, pos, neg, neu).

    Each lexicon token's valence is adjusted by degree modifiers in the three
    preceding tokens (decayed with distance) and flipped by -0.74 when a
    negator appears in that window. compound = s / sqrt(s^2 + 15), clipped
    to (-1, 1); pos/neg/neu are the usual normalized mass shares.
    """
    if degree is None or negators is None:
        lex = load_lexicons()
        degree = degree if degree is not None else lex.degree
        negators = negators if negators is not None else lex.negators
    tokens = sentiment_tokens(text)
    sentiments: list[float] = []
    for i, tok in enumerate(tokens):
        if tok not in valence_lexicon:
            sentiments.append(0.0)
            continue
        v = valence_lexicon[tok]
        negated = False
        for back in range(1, NEGATION_WINDOW + 1):
            j = i - back
            if j < 0:
                break
            prev = tokens[j]
            if prev in valence_lexicon:
                continue
            if _is_negator(prev, negators):
                negated = True
            elif prev in degree:
                boost = degree[prev] * _DEGREE_DECAY[back - 1]
                v += boost if v > 0 else -boost
        if negated:
            v *= NEGATION_SCALAR
        sentiments.append(v)

    total = sum(sentiments)
    if not sentiments:
        return 0.0, 0.0, 0.0, 1.0
    compound = total / math.sqrt(total * total + SENTIMENT_ALPHA)
    compound = max(-1.0, min(1.0, compound))
    pos_sum = sum(v + 1 for v in sentiments if v > 0)
    neg_sum = sum(v - 1 for v in sentiments if v < 0)
    neu_count = sum(1 for v in sentiments if v == 0)
    mass = pos_sum + abs(neg_sum) + neu_count
    if mass == 0:
        return compound, 0.0, 0.0, 1.0
    return compound, pos_sum / mass, abs(neg_sum) / mass, neu_count / mass


class PosTagger(Protocol):
    def tag(self, tokens: Sequence[str]) -> list[str]: ...


class RulePosTagger:
    """Deterministic closed-class + suffix tagger over the universal tag set.

    A heuristic, not a model: good enough for tag-count features, and fully
    reproducible.
    """

    PRON = frozenset(
        """i you he she it we they me him her us them my your his its our their mine yours hers
        ours theirs myself yourself himself herself itself ourselves themselves who whom whose
        anybody anyone everyone everybody someone somebody nobody""".split()
    )
    DET = frozenset("the a an this that these those each every some any all both either another such".split())
    ADP = frozenset(
        """in on at by for with about against between into through during before after above below
        from up down of off over under around near""".split()
    )
    CONJ = frozenset("and but or nor yet because although while whereas unless since if when than".split())
    VERB = frozenset(
        """be is am are was were been being have has had do does did will would shall should can
        could may might must go goes went gone get got say said make made know knew think thought
        see saw want take took come came look feel felt need keep let mean put run tried try""".split()
    )
    ADV = frozenset("very really too also now then here there always never often soon still just quite not".split())
    NUM_WORDS = frozenset(
        "zero one two three four five six seven eight nine ten hundred thousand million billion".split()
    )
    _NUM_RE = re.compile(r"^[+-]?\d[\d,.]*$")
    _PUNCT_RE = re.compile(r"^[\W_]+$")

    def tag_one(self, token: str) -> str:
        raw = token
        if self._PUNCT_RE.match(raw):
            return "PUNCT"
        word = strip_token_punct(raw).casefold()
        if not word:
            return "PUNCT"
        if self._NUM_RE.match(word) or word in self.NUM_WORDS:
            return "NUM"
        if word.endswith("n't"):
            return "ADV"
        if word in self.PRON:
            return "PRON"
        if word in self.DET:
            return "DET"
        if word == "to":
            return "PRT"
        if word in self.CONJ:
            return "CONJ"
        if word in self.VERB:
            return "VERB"
        if word in self.ADP:
            return "ADP"
        if word in self.ADV or word.endswith("ly"):
            return "ADV"
        if word.endswith(("ing", "ed", "ify", "ize", "ise")):
            return "VERB"
        if word.endswith(("ous", "ful", "ive", "able", "ible", "less", "est", "ish")):
            return "ADJ"
        return "NOUN"

    def tag(self, tokens: Sequence[str]) -> list[str]:
        return [self.tag_one(t) for t in tokens]


class ToxicityScorer(Protocol):
    def score(self, text: str) -> float: ...


def lexicon_toxicity(text: str, toxic_terms: frozenset[str]) -> float:
    """Fallback toxicity: toxic-token hit rate, normalized by token count."""
    tokens = sentiment_tokens(text)
    if not tokens:
        return 0.0
    hits = sum(1 for t in tokens if t in toxic_terms)
    return min(1.0, hits / len(tokens))


@dataclass
class FeatureVector:
    toxicity: float
    sentiment_compound: float
    sentiment_pos: float
    sentiment_neg: float
    sentiment_neu: float
    modality_count: int
    hedging_count: int
    degree_modifier_count: int
    pos_counts: dict[str, int]
    frame_vocab_counts: dict[str, int]
    token_count: int
    toxicity_source: str = "lexicon"  # provenance, not part of the numeric schema

    def as_dict(self) -> dict[str, float]:
        out: dict[str, float] = {
            "toxicity": self.toxicity,
            "sentiment_compound": self.sentiment_compound,
            "sentiment_pos": self.sentiment_pos,
            "sentiment_neg": self.sentiment_neg,
            "sentiment_neu": self.sentiment_neu,
            "modality_count": float(self.modality_count),
            "hedging_count": float(self.hedging_count),
            "degree_modifier_count": float(self.degree_modifier_count),
        }
        for tag in UNIVERSAL_TAGS:
            out[f"pos_{tag}"] = float(self.pos_counts.get(tag, 0))
        for frame in FRAMES:
            out[f"frame_{frame.value}"] = float(self.frame_vocab_counts.get(frame.value, 0))
        out["token_count"] = float(self.token_count)
        return out


FEATURE_NAMES: tuple[str, ...] = (
    "toxicity",
    "sentiment_compound",
    "sentiment_pos",
    "sentiment_neg",
    "sentiment_neu",
    "modality_count",
    "hedging_count",
    "degree_modifier_count",
    *(f"pos_{tag}" for tag in UNIVERSAL_TAGS),
    *(f"frame_{f.value}" for f in FRAMES),
    "token_count",
)


def extract_features(
    chunk_text: str,
    tagger: PosTagger | None = None,
    toxicity_scorer: ToxicityScorer | None = None,
    lexicons: Lexicons | None = None,
) -> FeatureVector:
    """Compute the full feature vector for one chunk of text.

    Deterministic given fixed components. Without a toxicity scorer, the
    lexicon hit-rate fallback is used and recorded as the provenance.
    """
    if lexicons is None:
        lexicons = load_lexicons()
    if tagger is None:
        tagger = RulePosTagger()

    raw_tokens = normalize_text(chunk_text).split()
    tokens = sentiment_tokens(chunk_text)
    compound, pos, neg, neu = sentiment_score(
        chunk_text, lexicons.valence, degree=lexicons.degree, negators=lexicons.negators
    )

    if toxicity_scorer is not None:
        toxicity = float(toxicity_scorer.score(chunk_text))
        source = "scorer"
    else:
        toxicity = lexicon_toxicity(chunk_text, lexicons.toxicity)
        source = "lexicon"

    pos_counts = {tag: 0 for tag in UNIVERSAL_TAGS}
    if raw_tokens:
        for tag in tagger.tag(raw_tokens):
            if tag in pos_counts:
                pos_counts[tag] += 1

    frame_counts = {f.value: 0 for f in FRAMES}
    token_multiset: dict[str, int] = {}
    for t in tokens:
        token_multiset[t] = token_multiset.get(t, 0) + 1
    for frame, terms in lexicons.frame_vocab.items():
        frame_counts[frame.value] = sum(token_multiset.get(term, 0) for term in terms)

    return FeatureVector(
        toxicity=toxicity,
        sentiment_compound=compound,
        sentiment_pos=pos,
        sentiment_neg=neg,
        sentiment_neu=neu,
        modality_count=sum(1 for t in tokens if t in lexicons.modality),
        hedging_count=sum(1 for t in tokens if t in lexicons.hedging),
        degree_modifier_count=sum(1 for t in tokens if t in lexicons.degree),
        pos_counts=pos_counts,
        frame_vocab_counts=frame_counts,
        token_count=len(raw_tokens),
        toxicity_source=source,
    )


def feature_matrix(vectors: Sequence[FeatureVector]):
    """Stack vectors into a (n, len(FEATURE_NAMES)) float array."""
    import numpy as np

    rows = []
    for vec in vectors:
        d = vec.as_dict()
        rows.append([d[name] for name in FEATURE_NAMES])
    return np.asarray(rows, dtype=float)


def write_features_tsv(chunk_ids: Sequence[str], vectors: Sequence[FeatureVector], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("chunk_id\t" + "\t".join(FEATURE_NAMES) + "\n")
        for cid, vec in zip(chunk_ids, vectors):
            d = vec.as_dict()
            fh.write(cid + "\t" + "\t".join(f"{d[name]:.6g}" for name in FEATURE_NAMES) + "\n")


def read_features_tsv(path: str | Path) -> tuple[list[str], "object"]:
    import numpy as np

    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split("\t")
    if tuple(header[1:]) != FEATURE_NAMES:
        raise ValueError("feature file schema mismatch")
    ids, rows = [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split("\t")
        ids.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    return ids, np.asarray(rows, dtype=float)
