"""Normalized data model for multi-domain task-oriented dialogs.

The native on-disk format is JSON lines: an optional first line
``{"meta": {"split_name": ..., "source_format": ...}}`` followed by one
dialog object per line.  Adapters ingest SGD-style directories and
MultiWOZ-2.2-style JSON (both share the schema-guided envelope); fields the
model does not cover are carried in opaque ``extras`` blobs so writing back
is lossless for everything we touched plus everything we did not.

The per-domain entity store is a JSON document::

    {"name_fields": {"hotel": "name", ...},
     "nouns": {"hotel": "hotel", ...},            # optional
     "tables": {"hotel": [{"name": ..., "area": ...}, ...], ...}}

Corpus and Database instances are treated as immutable after load; every
operation that "modifies" a dialog returns a new copy.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import NotEnoughEntities, SchemaMismatch, UnknownDomain

USER = "USER"
SYSTEM = "SYSTEM"

_EDGE_PUNCT_RE = re.compile(r"^[^\w]+|[^\w]+$")
_WS_RE = re.compile(r"\s+")


def name_key(text: str) -> str:
    """Normalization used for entity-name uniqueness and value matching:
    lowercase, strip leading/trailing punctuation, collapse whitespace."""
    return _WS_RE.sub(" ", _EDGE_PUNCT_RE.sub("", text.strip().lower()))


@dataclass
class Entity:
    """One database row: a named entity plus its non-name attributes."""

    domain: str
    name: str
    attributes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaMismatch(f"entity in domain {self.domain!r} has an empty name")
        self.attributes = {k: str(v) for k, v in self.attributes.items()}

    def to_json(self) -> dict:
        return {"domain": self.domain, "name": self.name, "attributes": self.attributes}

    @classmethod
    def from_json(cls, obj: dict) -> "Entity":
        try:
            return cls(domain=obj["domain"], name=obj["name"], attributes=dict(obj.get("attributes", {})))
        except KeyError as exc:
            raise SchemaMismatch(f"entity record missing key {exc}") from exc


@dataclass
class Frame:
    service: str
    slot_values: dict[str, list[str]] = field(default_factory=dict)
    requested_slots: list[str] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "service": self.service,
            "slot_values": self.slot_values,
            "requested_slots": self.requested_slots,
            "extras": self.extras,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Frame":
        return cls(
            service=obj["service"],
            slot_values={k: list(v) for k, v in obj.get("slot_values", {}).items()},
            requested_slots=list(obj.get("requested_slots", [])),
            extras=dict(obj.get("extras", {})),
        )


@dataclass
class Turn:
    speaker: str
    utterance: str
    frames: list[Frame] = field(default_factory=list)
    search_results: list[Entity] | None = None
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        obj: dict = {
            "speaker": self.speaker,
            "utterance": self.utterance,
            "frames": [f.to_json() for f in self.frames],
            "extras": self.extras,
        }
        if self.search_results is not None:
            obj["search_results"] = [e.to_json() for e in self.search_results]
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Turn":
        results = obj.get("search_results")
        return cls(
            speaker=obj["speaker"],
            utterance=obj["utterance"],
            frames=[Frame.from_json(f) for f in obj.get("frames", [])],
            search_results=None if results is None else [Entity.from_json(e) for e in results],
            extras=dict(obj.get("extras", {})),
        )


@dataclass
class Dialog:
    id: str
    services: list[str]
    turns: list[Turn]
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "services": self.services,
            "turns": [t.to_json() for t in self.turns],
            "extras": self.extras,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Dialog":
        try:
            return cls(
                id=obj["id"],
                services=list(obj["services"]),
                turns=[Turn.from_json(t) for t in obj["turns"]],
                extras=dict(obj.get("extras", {})),
            )
        except KeyError as exc:
            raise SchemaMismatch(f"dialog record missing key {exc}") from exc


SPLITS = ("train", "dev", "test")


@dataclass
class Corpus:
    dialogs: list[Dialog]
    split_name: str = "train"
    source_format: str = "native"


def validate_corpus(corpus: Corpus) -> None:
    """Re-check every type invariant; raises SchemaMismatch, never repairs."""
    if corpus.split_name not in SPLITS:
        raise SchemaMismatch(f"split_name {corpus.split_name!r} not one of {SPLITS}")
    seen_ids: set[str] = set()
    for dialog in corpus.dialogs:
        if dialog.id in seen_ids:
            raise SchemaMismatch(f"duplicate dialog id {dialog.id!r}")
        seen_ids.add(dialog.id)
        declared = set(dialog.services)
        for index, turn in enumerate(dialog.turns):
            where = f"dialog {dialog.id!r} turn {index}"
            if turn.speaker not in (USER, SYSTEM):
                raise SchemaMismatch(f"{where}: speaker {turn.speaker!r}")
            if index > 0 and turn.speaker == dialog.turns[index - 1].speaker:
                raise SchemaMismatch(f"{where}: speakers do not alternate")
            if turn.speaker == USER and turn.search_results is not None:
                raise SchemaMismatch(f"{where}: user turns cannot carry search results")
            for frame in turn.frames:
                if frame.service not in declared:
                    raise SchemaMismatch(f"{where}: frame service {frame.service!r} not in dialog services")
                for slot, values in frame.slot_values.items():
                    if not slot:
                        raise SchemaMismatch(f"{where}: empty slot name")
                    if any(not isinstance(v, str) or not v for v in values):
                        raise SchemaMismatch(f"{where}: slot {slot!r} has an empty or non-string value")


# --- native format ------------------------------------------------------------


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_corpus(corpus: Corpus, path: str, format: str = "native") -> None:
    """Serialize a corpus; the native writer is the exact inverse of the loader."""
    if format == "native":
        lines = [_dumps({"meta": {"split_name": corpus.split_name, "source_format": corpus.source_format}})]
        lines.extend(_dumps(d.to_json()) for d in corpus.dialogs)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif format in ("sgd", "multiwoz22"):
        payload = [_dialog_to_schema_guided(d) for d in corpus.dialogs]
        Path(path).write_text(_dumps_pretty(payload), encoding="utf-8")
    else:
        raise SchemaMismatch(f"unknown corpus format {format!r}")


def _dumps_pretty(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=1, sort_keys=True)


def load_corpus(path: str, format: str = "native") -> Corpus:
    """Load and validate a corpus from any of the supported formats."""
    if format == "native":
        corpus = _load_native(path)
    elif format in ("sgd", "multiwoz22"):
        corpus = _load_schema_guided(path, format)
    else:
        raise SchemaMismatch(f"unknown corpus format {format!r}")
    validate_corpus(corpus)
    return corpus


def _load_native(path: str) -> Corpus:
    split_name = "train"
    source_format = "native"
    dialogs: list[Dialog] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaMismatch(f"{path}: line {line_no} is not valid JSON: {exc}") from exc
            if line_no == 1 and "meta" in obj:
                split_name = obj["meta"].get("split_name", split_name)
                source_format = obj["meta"].get("source_format", source_format)
                continue
            dialogs.append(Dialog.from_json(obj))
    return Corpus(dialogs=dialogs, split_name=split_name, source_format=source_format)


# --- schema-guided adapters (SGD and MultiWOZ 2.2 share the envelope) ---------

# Known name fields for search-result records, by service prefix.  Anything
# unlisted falls back to the first "*_name" key, then "name", then "title".
_NAME_FIELD_HINTS = {
    "restaurant": "name",
    "hotel": "name",
    "attraction": "name",
    "restaurants": "restaurant_name",
    "hotels_4": "place_name",
    "hotels": "hotel_name",
    "movies_3": "movie_title",
    "movies": "movie_name",
    "media_2": "movie_name",
    "media": "title",
    "music_3": "track",
    "music": "song_name",
    "events": "event_name",
    "homes": "property_name",
    "services_1": "stylist_name",
    "services_2": "dentist_name",
    "services_3": "doctor_name",
    "services_4": "therapist_name",
    "travel": "attraction_name",
    "messaging": "contact_name",
}


def guess_name_field(service: str, record: dict | None = None) -> str:
    for key in (service, service.rsplit("_", 1)[0]):
        if key in _NAME_FIELD_HINTS:
            return _NAME_FIELD_HINTS[key]
    if record:
        named = sorted(k for k in record if k.endswith("_name"))
        if named:
            return named[0]
        for fallback in ("name", "title"):
            if fallback in record:
                return fallback
        return sorted(record)[0]
    return "name"


def _result_to_entity(service: str, record: dict) -> Entity:
    name_field = guess_name_field(service, record)
    if name_field not in record:
        raise SchemaMismatch(f"search result for {service!r} lacks its name field {name_field!r}")
    attributes = {k: v for k, v in record.items() if k != name_field}
    return Entity(domain=service, name=str(record[name_field]), attributes=attributes)


def _schema_guided_files(path: str) -> list[Path]:
    root = Path(path)
    if root.is_dir():
        files = sorted(root.glob("dialogues_*.json"))
        if not files:
            raise SchemaMismatch(f"{path}: no dialogues_*.json files found")
        return files
    return [root]


def _infer_split(path: str) -> str:
    for part in reversed(Path(path).parts):
        stem = part.split(".")[0]
        if stem in SPLITS:
            return stem
    return "train"


def _load_schema_guided(path: str, format: str) -> Corpus:
    dialogs: list[Dialog] = []
    for file_path in _schema_guided_files(path):
        with open(file_path, encoding="utf-8") as handle:
            try:
                payload = json.load(handle)
            except json.JSONDecodeError as exc:
                raise SchemaMismatch(f"{file_path}: invalid JSON: {exc}") from exc
        if not isinstance(payload, list):
            raise SchemaMismatch(f"{file_path}: expected a list of dialogs")
        for obj in payload:
            dialogs.append(_dialog_from_schema_guided(obj, str(file_path)))
    return Corpus(dialogs=dialogs, split_name=_infer_split(path), source_format=format)


def _dialog_from_schema_guided(obj: dict, where: str) -> Dialog:
    if "turns" not in obj:
        raise SchemaMismatch(f"{where}: dialog {obj.get('dialogue_id')!r} has no 'turns' key")
    dialog_id = obj.get("dialogue_id") or obj.get("dialog_id")
    if not dialog_id:
        raise SchemaMismatch(f"{where}: dialog without a dialogue_id")
    turns: list[Turn] = []
    for raw_turn in obj["turns"]:
        try:
            speaker = raw_turn["speaker"]
            utterance = raw_turn["utterance"]
        except (KeyError, TypeError) as exc:
            raise SchemaMismatch(f"{where}: turn in {dialog_id!r} missing speaker/utterance") from exc
        frames: list[Frame] = []
        results: list[Entity] = []
        for raw_frame in raw_turn.get("frames", []):
            service = raw_frame.get("service")
            if not service:
                raise SchemaMismatch(f"{where}: frame without service in dialog {dialog_id!r}")
            state = raw_frame.get("state", {})
            slot_values = {k: [str(v) for v in vs] for k, vs in state.get("slot_values", {}).items()}
            requested = list(state.get("requested_slots", []))
            state_extras = {k: v for k, v in state.items() if k not in ("slot_values", "requested_slots")}
            frame_extras = {k: v for k, v in raw_frame.items() if k not in ("service", "state")}
            if state_extras:
                frame_extras["state_extras"] = state_extras
            for record in raw_frame.get("service_results", []):
                results.append(_result_to_entity(service, record))
            frames.append(Frame(service=service, slot_values=slot_values, requested_slots=requested, extras=frame_extras))
        turn_extras = {k: v for k, v in raw_turn.items() if k not in ("speaker", "utterance", "frames")}
        turns.append(
            Turn(
                speaker=speaker,
                utterance=utterance,
                frames=frames,
                search_results=results if (speaker == SYSTEM and results) else None,
                extras=turn_extras,
            )
        )
    services = list(obj.get("services", []))
    dialog_extras = {k: v for k, v in obj.items() if k not in ("dialogue_id", "dialog_id", "services", "turns")}
    return Dialog(id=str(dialog_id), services=services, turns=turns, extras=dialog_extras)


def _dialog_to_schema_guided(dialog: Dialog) -> dict:
    turns = []
    for turn in dialog.turns:
        frames = []
        for frame in turn.frames:
            state_extras = frame.extras.get("state_extras", {})
            raw_frame = {
                "service": frame.service,
                "state": {
                    "slot_values": frame.slot_values,
                    "requested_slots": frame.requested_slots,
                    **state_extras,
                },
            }
            raw_frame.update({k: v for k, v in frame.extras.items() if k != "state_extras"})
            frames.append(raw_frame)
        raw_turn = {"speaker": turn.speaker, "utterance": turn.utterance, "frames": frames}
        raw_turn.update(turn.extras)
        turns.append(raw_turn)
    obj = {"dialogue_id": dialog.id, "services": dialog.services, "turns": turns}
    obj.update(dialog.extras)
    return obj


# --- database -------------------------------------------------------------------


@dataclass
class Database:
    """Per-domain entity tables plus the attribute designated as each name."""

    tables: dict[str, list[Entity]]
    name_fields: dict[str, str]
    nouns: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for domain, entities in self.tables.items():
            if domain not in self.name_fields:
                raise SchemaMismatch(f"domain {domain!r} has no declared name field")
            keys = [name_key(e.name) for e in entities]
            if len(set(keys)) != len(keys):
                raise SchemaMismatch(f"domain {domain!r} has duplicate entity names after normalization")

    def noun(self, domain: str) -> str:
        """Singular noun for the domain's entity type, for surface realization."""
        if domain in self.nouns:
            return self.nouns[domain]
        base = domain.rsplit("_", 1)[0].replace("_", " ")
        return base[:-1] if base.endswith("s") and len(base) > 3 else base

    def names(self, domain: str) -> set[str]:
        return {name_key(e.name) for e in self.tables.get(domain, [])}


def load_database(path: str) -> Database:
    with open(path, encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaMismatch(f"{path}: invalid JSON: {exc}") from exc
    try:
        name_fields = dict(payload["name_fields"])
        raw_tables = payload["tables"]
    except (KeyError, TypeError) as exc:
        raise SchemaMismatch(f"{path}: database needs 'name_fields' and 'tables' keys") from exc
    tables: dict[str, list[Entity]] = {}
    for domain, records in raw_tables.items():
        if domain not in name_fields:
            raise SchemaMismatch(f"{path}: domain {domain!r} missing from name_fields")
        name_field = name_fields[domain]
        entities = []
        for record in records:
            if name_field not in record:
                raise SchemaMismatch(f"{path}: record in {domain!r} lacks name field {name_field!r}")
            attributes = {k: v for k, v in record.items() if k != name_field}
            entities.append(Entity(domain=domain, name=str(record[name_field]), attributes=attributes))
        tables[domain] = entities
    return Database(tables=tables, name_fields=name_fields, nouns=dict(payload.get("nouns", {})))


def write_database(db: Database, path: str) -> None:
    tables = {
        domain: [{db.name_fields[domain]: e.name, **e.attributes} for e in entities]
        for domain, entities in db.tables.items()
    }
    payload = {"name_fields": db.name_fields, "nouns": db.nouns, "tables": tables}
    Path(path).write_text(_dumps_pretty(payload) + "\n", encoding="utf-8")


def database_from_corpus(corpus: Corpus, name_fields: dict[str, str] | None = None) -> Database:
    """Reconstruct per-domain tables from the union of search results.

    This is an approximation: source corpora never ship their full database,
    so only entities the system actually surfaced are recoverable.
    """
    overrides = name_fields or {}
    tables: dict[str, list[Entity]] = {}
    seen: dict[str, set[str]] = {}
    for dialog in corpus.dialogs:
        for turn in dialog.turns:
            for entity in turn.search_results or []:
                key = name_key(entity.name)
                if key in seen.setdefault(entity.domain, set()):
                    continue
                seen[entity.domain].add(key)
                tables.setdefault(entity.domain, []).append(entity)
    fields = {domain: overrides.get(domain, guess_name_field(domain)) for domain in tables}
    return Database(tables=tables, name_fields=fields)


def sample_entities(db: Database, domain: str, n: int, seed: int) -> list[Entity]:
    """Draw ``n`` distinct entities without replacement, deterministic per seed."""
    if domain not in db.tables:
        raise UnknownDomain(domain)
    table = db.tables[domain]
    if n > len(table):
        raise NotEnoughEntities(have=len(table), want=n)
    return random.Random(seed).sample(table, n)
