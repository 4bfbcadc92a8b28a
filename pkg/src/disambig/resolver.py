"""Rule-based resolution of a user's choice against an option list.

Given the candidates a system just listed and the user's reply, find the
selected entity (or entities).  Evidence is tried in fixed priority order:
ordinal position, exact or partial name windows, fuzzy name matches within
an edit-distance budget, then attribute descriptions.  Everything here is
pure and reentrant; ties are surfaced through the ``ambiguous`` flag rather
than silently broken.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import Entity
from .errors import NoMatch

ORDINAL = "ORDINAL"
EXACT_NAME = "EXACT_NAME"
FUZZY_NAME = "FUZZY_NAME"
ATTRIBUTE = "ATTRIBUTE"

DEFAULT_MAX_FUZZY = 0.25

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Words that never identify a name on their own; partial-name evidence must
# contain at least one token outside this set.
STOPWORDS = frozenset(
    "the a an of in on at and or to one ones it this that these those".split()
)

_ORDINAL_POSITIONS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "1st": 1, "2nd": 2, "3rd": 3, "4th": 4, "5th": 5,
}

_CONJUNCTION_TOKENS = frozenset({"and", "both"})


def normalize(text: str) -> list[str]:
    """Lowercase, strip punctuation to word boundaries, whitespace-split."""
    return _TOKEN_RE.findall(text.lower())


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit costs plus adjacent transpositions."""
    if a == b:
        return 0
    if not a or not b:
        return len(a) + len(b)
    previous2: list[int] | None = None
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current[j] = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            if i > 1 and j > 1 and ca == b[j - 2] and a[i - 2] == cb:
                current[j] = min(current[j], previous2[j - 2] + 1)
        previous2, previous = previous, current
    return previous[-1]


@dataclass(frozen=True)
class Match:
    index: int
    score: float
    evidence: str


@dataclass(frozen=True)
class Resolution:
    matches: tuple[Match, ...]
    ambiguous: bool


def _windows(tokens: list[str], length: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i:i + length]) for i in range(len(tokens) - length + 1)]


def _contains_window(haystack: list[str], needle: tuple[str, ...]) -> bool:
    return any(tuple(haystack[i:i + len(needle)]) == needle for i in range(len(haystack) - len(needle) + 1))


def _ordinal_positions(tokens: list[str], n_candidates: int) -> list[int] | None:
    """1-based positions mentioned by ordinal words, or None when no ordinal
    vocabulary appears.  'last' maps to the final option; 'the other' carries
    no elimination context here, so it matches nothing specific (all tie)."""
    positions: list[int] = []
    out_of_range = False
    the_other = False
    for i, token in enumerate(tokens):
        if token in _ORDINAL_POSITIONS:
            position = _ORDINAL_POSITIONS[token]
            if position <= n_candidates:
                if position not in positions:
                    positions.append(position)
            else:
                out_of_range = True
        elif token == "last":
            if n_candidates not in positions:
                positions.append(n_candidates)
        elif token == "other" and i > 0 and tokens[i - 1] == "the":
            the_other = True
    if positions:
        return positions
    if out_of_range:
        raise NoMatch("ordinal position exceeds the option list length")
    if the_other:
        return list(range(1, n_candidates + 1))
    return None


def _name_evidence(utterance: list[str], names: list[list[str]]) -> dict[int, float]:
    """Indices with exact or uniquely-identifying partial name windows."""
    matched: dict[int, float] = {}
    for index, name in enumerate(names):
        if _contains_window(utterance, tuple(name)):
            matched[index] = 1.0
    max_len = max((len(n) for n in names), default=0)
    for length in range(1, max_len + 1):
        for window in _windows(utterance, length):
            if all(token in STOPWORDS for token in window):
                continue
            owners = [i for i, name in enumerate(names) if len(window) < len(name) and _contains_window(name, window)]
            if len(owners) == 1:
                matched.setdefault(owners[0], 1.0)
    return matched


def _fuzzy_evidence(utterance: list[str], names: list[list[str]], max_fuzzy: float) -> dict[int, float]:
    scored: dict[int, float] = {}
    for index, name in enumerate(names):
        name_text = " ".join(name)
        best: float | None = None
        for length in range(max(1, len(name) - 1), len(name) + 2):
            for window in _windows(utterance, length):
                window_text = " ".join(window)
                longer = max(len(window_text), len(name_text))
                if longer == 0 or abs(len(window_text) - len(name_text)) / longer > max_fuzzy:
                    continue
                distance = edit_distance(window_text, name_text) / longer
                if distance <= max_fuzzy and (best is None or distance < best):
                    best = distance
        if best is not None:
            scored[index] = 1.0 - best
    return scored


def _attribute_evidence(utterance: list[str], candidates: list[Entity]) -> dict[int, float]:
    scored: dict[int, float] = {}
    for index, entity in enumerate(candidates):
        if not entity.attributes:
            continue
        hits = sum(
            1 for value in entity.attributes.values()
            if (value_tokens := normalize(str(value))) and _contains_window(utterance, tuple(value_tokens))
        )
        if hits:
            scored[index] = hits / len(entity.attributes)
    return scored


def resolve(candidates: list[Entity], user_utterance: str, max_fuzzy: float = DEFAULT_MAX_FUZZY) -> Resolution:
    """Resolve the user's reply to candidate indices.

    Raises NoMatch when no candidate clears any evidence level.  Permuting
    the candidate list permutes the returned indices accordingly, except for
    ordinal evidence, which is position-defined.
    """
    if not 1 <= len(candidates) <= 5:
        raise ValueError("resolve expects between 1 and 5 candidates")
    tokens = normalize(user_utterance)
    if not tokens:
        raise NoMatch("empty utterance")

    positions = _ordinal_positions(tokens, len(candidates))
    if positions is not None:
        matches = [Match(position - 1, 1.0, ORDINAL) for position in positions]
        return _finish(matches)

    names = [normalize(entity.name) for entity in candidates]
    for evidence_kind, evidence in (
        (EXACT_NAME, lambda: _name_evidence(tokens, names)),
        (FUZZY_NAME, lambda: _fuzzy_evidence(tokens, names, max_fuzzy)),
        (ATTRIBUTE, lambda: _attribute_evidence(tokens, candidates)),
    ):
        scored = evidence()
        if scored:
            matches = [Match(index, score, evidence_kind) for index, score in scored.items()]
            return _finish(matches)
    raise NoMatch(f"no candidate matches {user_utterance!r}")


def _finish(matches: list[Match]) -> Resolution:
    ordered = sorted(matches, key=lambda m: (-m.score, m.index))
    ambiguous = len(ordered) >= 2 and ordered[0].score == ordered[1].score
    return Resolution(matches=tuple(ordered), ambiguous=ambiguous)


def has_conjunction(user_utterance: str) -> bool:
    tokens = normalize(user_utterance)
    if _CONJUNCTION_TOKENS & set(tokens):
        return True
    if "all" in tokens and any(t in tokens for t in ("three", "four", "five")):
        return True
    return "," in user_utterance


def predict_names(candidates: list[Entity], user_utterance: str, max_fuzzy: float = DEFAULT_MAX_FUZZY) -> list[str]:
    """Batch-mode prediction: the chosen entity names, empty on no match.

    With a conjunction cue in the reply, every top-scoring candidate is
    selected (the user may have picked several); otherwise only the best.
    """
    try:
        resolution = resolve(candidates, user_utterance, max_fuzzy=max_fuzzy)
    except NoMatch:
        return []
    top = resolution.matches[0].score
    selected = [m for m in resolution.matches if m.score == top]
    if len(selected) > 1 and not has_conjunction(user_utterance):
        selected = [resolution.matches[0]]
    return [candidates[m.index].name for m in selected]
