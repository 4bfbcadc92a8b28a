"""Score prediction files against gold corpora.

Two metrics: name-entity accuracy (set equality of predicted and gold
target names per turn, so multi-selection turns are all-or-nothing) and
joint goal accuracy (a turn counts only when every gold slot's value set is
matched exactly).  Gold entity targets come from the ``disambig`` markers
that synthesis and augmentation leave in system-turn extras; turns without
a marker carry no entity decision and are skipped, with the skip count
reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .augmenter import AugmentationRecord
from .corpus import Corpus, USER, name_key
from .errors import MissingPrediction, SchemaMismatch, UnknownSubsetTurn
from .resolver import normalize

ALL = "ALL"
AUGMENTED_ONLY = "AUGMENTED_ONLY"

Key = tuple[str, int]


@dataclass
class PredictionRow:
    dialog_id: str
    turn_index: int
    entities: list[str] = field(default_factory=list)
    state: dict[str, list[str]] | None = None

    @property
    def key(self) -> Key:
        return (self.dialog_id, self.turn_index)

    def to_json(self) -> dict:
        obj: dict = {"dialog_id": self.dialog_id, "turn_index": self.turn_index, "entities": self.entities}
        if self.state is not None:
            obj["state"] = self.state
        return obj


PredictionFile = dict[Key, PredictionRow]


def read_predictions(path: str) -> PredictionFile:
    rows: PredictionFile = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                row = PredictionRow(
                    dialog_id=obj["dialog_id"],
                    turn_index=int(obj["turn_index"]),
                    entities=list(obj.get("entities", [])),
                    state={k: list(v) for k, v in obj["state"].items()} if obj.get("state") is not None else None,
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise SchemaMismatch(f"{path}: bad prediction on line {line_no}: {exc}") from exc
            if row.key in rows:
                raise SchemaMismatch(f"{path}: duplicate prediction key {row.key}")
            rows[row.key] = row
    return rows


def write_predictions(rows: list[PredictionRow], path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def _entity_key(name: str) -> str:
    return " ".join(normalize(name))


def gold_entity_turns(gold: Corpus, origin: str | None = None) -> dict[Key, set[str]]:
    """Turns with a defined gold target set, as normalized name sets."""
    turns: dict[Key, set[str]] = {}
    for dialog in gold.dialogs:
        for index, turn in enumerate(dialog.turns):
            marker = turn.extras.get("disambig")
            if not marker:
                continue
            if origin is not None and marker.get("origin") != origin:
                continue
            turns[(dialog.id, index)] = {_entity_key(n) for n in marker["target_names"]}
    return turns


def gold_states(gold: Corpus) -> dict[Key, dict[str, set[str]]]:
    """Per-user-turn gold dialog state: slot name -> normalized value set."""
    states: dict[Key, dict[str, set[str]]] = {}
    for dialog in gold.dialogs:
        for index, turn in enumerate(dialog.turns):
            if turn.speaker != USER:
                continue
            state: dict[str, set[str]] = {}
            for frame in turn.frames:
                for slot, values in frame.slot_values.items():
                    state.setdefault(slot, set()).update(name_key(v) for v in values)
            states[(dialog.id, index)] = state
    return states


def _subset_keys(gold: Corpus, subset) -> dict[Key, set[str]]:
    if subset == ALL:
        return gold_entity_turns(gold)
    if subset == AUGMENTED_ONLY:
        return gold_entity_turns(gold, origin="augment")
    # explicit key collection, e.g. from augmentation records
    marked = gold_entity_turns(gold)
    chosen: dict[Key, set[str]] = {}
    for key in subset:
        if key not in marked:
            raise UnknownSubsetTurn(key)
        chosen[key] = marked[key]
    return chosen


def entity_accuracy(preds: PredictionFile, gold: Corpus, subset=ALL) -> float:
    """Mean over subset turns of exact (normalized) target-set equality."""
    targets = _subset_keys(gold, subset)
    if not targets:
        raise SchemaMismatch("no gold turns define an entity target in this subset")
    correct = 0
    for key, gold_names in sorted(targets.items()):
        if key not in preds:
            raise MissingPrediction(key)
        predicted = {_entity_key(n) for n in preds[key].entities}
        correct += predicted == gold_names
    return correct / len(targets)


def joint_goal_accuracy(preds: PredictionFile, gold: Corpus, subset=ALL) -> float:
    """Mean over user turns of all-or-nothing state correctness.

    ``subset`` is ALL (every user turn) or an iterable of keys.  A predicted
    state matches when every gold slot's value set is reproduced exactly;
    extra predicted slots do not score either way.
    """
    states = gold_states(gold)
    if subset != ALL:
        chosen = {}
        for key in subset:
            if key not in states:
                raise UnknownSubsetTurn(key)
            chosen[key] = states[key]
        states = chosen
    if not states:
        raise SchemaMismatch("no gold turns carry a dialog state in this subset")
    correct = 0
    for key, gold_state in sorted(states.items()):
        if key not in preds or preds[key].state is None:
            raise MissingPrediction(key)
        predicted = {slot: {name_key(v) for v in values} for slot, values in preds[key].state.items()}
        correct += all(predicted.get(slot) == values for slot, values in gold_state.items())
    return correct / len(states)


def slot_accuracy(preds: PredictionFile, gold: Corpus, subset=ALL) -> float:
    """Per-slot partial credit: each turn scores the fraction of its gold
    slots predicted exactly, averaged over turns.  Because a turn's
    all-or-nothing score never exceeds its fraction correct, JGA <= this."""
    states = gold_states(gold)
    if subset != ALL:
        states = {key: states[key] for key in subset}
    fractions: list[float] = []
    for key, gold_state in sorted(states.items()):
        if key not in preds or preds[key].state is None:
            raise MissingPrediction(key)
        predicted = {slot: {name_key(v) for v in values} for slot, values in preds[key].state.items()}
        if gold_state:
            hits = sum(predicted.get(slot) == values for slot, values in gold_state.items())
            fractions.append(hits / len(gold_state))
        else:
            fractions.append(1.0)
    return sum(fractions) / len(fractions) if fractions else 1.0


@dataclass
class ScoreReport:
    entity_accuracy_all: float | None = None
    entity_accuracy_augmented: float | None = None
    jga_all: float | None = None
    jga_augmented: float | None = None
    per_method: dict[str, float] | None = None
    counts: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "entity_accuracy_all": self.entity_accuracy_all,
            "entity_accuracy_augmented": self.entity_accuracy_augmented,
            "jga_all": self.jga_all,
            "jga_augmented": self.jga_augmented,
            "per_method": self.per_method,
            "counts": self.counts,
        }


def _per_method_accuracy(preds: PredictionFile, gold: Corpus) -> dict[str, float]:
    by_method: dict[str, list[Key]] = {}
    for dialog in gold.dialogs:
        for index, turn in enumerate(dialog.turns):
            marker = turn.extras.get("disambig")
            if marker and marker.get("method"):
                by_method.setdefault(marker["method"], []).append((dialog.id, index))
    return {
        method: entity_accuracy(preds, gold, subset=keys)
        for method, keys in sorted(by_method.items())
    }


def score(preds: PredictionFile, gold: Corpus, records: list[AugmentationRecord] | None = None) -> ScoreReport:
    """All four headline numbers plus bucket counts.

    The augmented-only bucket is exactly the turn indices in ``records``
    when given (skipped records excluded), otherwise every turn whose marker
    came from the augmenter.  Buckets that do not apply stay None.
    """
    report = ScoreReport()
    turn_counts = {dialog.id: len(dialog.turns) for dialog in gold.dialogs}
    for key in preds:
        if key[0] not in turn_counts or not 0 <= key[1] < turn_counts[key[0]]:
            raise UnknownSubsetTurn(key)
    marked = gold_entity_turns(gold)
    total_turns = sum(turn_counts.values())
    report.counts["turns_total"] = total_turns
    report.counts["turns_with_gold_targets"] = len(marked)
    report.counts["turns_skipped_no_target"] = total_turns - len(marked)

    if marked:
        report.entity_accuracy_all = entity_accuracy(preds, gold, subset=ALL)
        report.per_method = _per_method_accuracy(preds, gold)

    if records is not None:
        augmented_keys = [(r.dialog_id, r.turn_index) for r in records if r.skipped_reason is None]
    else:
        augmented_keys = sorted(gold_entity_turns(gold, origin="augment"))
    report.counts["turns_augmented"] = len(augmented_keys)
    if augmented_keys:
        report.entity_accuracy_augmented = entity_accuracy(preds, gold, subset=augmented_keys)

    states = gold_states(gold)
    has_states = bool(states) and all(preds[key].state is not None for key in states if key in preds)
    if has_states and all(key in preds for key in states):
        report.jga_all = joint_goal_accuracy(preds, gold, subset=ALL)
        if augmented_keys:
            user_keys = [(d, t + 1) for d, t in augmented_keys if (d, t + 1) in states]
            if user_keys:
                report.jga_augmented = joint_goal_accuracy(preds, gold, subset=user_keys)
    return report


def write_report(report: ScoreReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report.to_json(), handle, ensure_ascii=False, sort_keys=True, indent=2)
        handle.write("\n")
