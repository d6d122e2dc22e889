"""Controlled label noise: relabeling and UNK substitution with an audit log.

Each label instance is perturbed independently (Bernoulli per element, one
probability per category), the gold system acts of touched turns are never
re-derived, and every change is recorded so the exact original dataset can be
reconstructed from the log.
"""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .dataset import Dataset
from .engine import Dialogue
from .errors import CatalogTooSmall, UnknownLabel, ValidationError
from .ontology import IntentKind, Ontology, UNK_TOKEN
from .rng import derive_seed


class PerturbMode(Enum):
    RELABEL = "relabel"
    UNK = "unk"


class ElementKind(Enum):
    INTENT = "intent"
    ACTION = "action"
    SLOT = "slot"


@dataclass(frozen=True)
class ErrorConfig:
    p_intent: float = 0.0
    p_action: float = 0.0
    p_slot: float = 0.0
    mode_weights: tuple[float, float] = (0.5, 0.5)  # (relabel, unk)
    seed: int = 0

    def __post_init__(self):
        for name in ("p_intent", "p_action", "p_slot"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1]")
        w_relabel, w_unk = self.mode_weights
        if w_relabel < 0 or w_unk < 0 or w_relabel + w_unk == 0:
            raise ValidationError("mode_weights must be non-negative, not both zero")

    def to_dict(self) -> dict:
        return {
            "p_intent": self.p_intent,
            "p_action": self.p_action,
            "p_slot": self.p_slot,
            "mode_weights": list(self.mode_weights),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PerturbationRecord:
    dialogue_id: str
    turn_index: int
    element: ElementKind
    index: int  # position of the element within its act list
    original: str
    new: str
    mode: PerturbMode

    def to_dict(self) -> dict:
        return {
            "dialogue_id": self.dialogue_id,
            "turn_index": self.turn_index,
            "element": self.element.value,
            "index": self.index,
            "original": self.original,
            "new": self.new,
            "mode": self.mode.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PerturbationRecord":
        return cls(
            dialogue_id=obj["dialogue_id"],
            turn_index=obj["turn_index"],
            element=ElementKind(obj["element"]),
            index=obj["index"],
            original=obj["original"],
            new=obj["new"],
            mode=PerturbMode(obj["mode"]),
        )


def perturb_label(
    label: str,
    catalog: list[str],
    rng: random.Random,
    mode: PerturbMode,
) -> str:
    """Replace one label: uniform draw from catalog minus the label, or UNK."""
    if mode is PerturbMode.UNK:
        return UNK_TOKEN
    candidates = [c for c in catalog if c != label]
    if len(catalog) < 2 or not candidates:
        raise CatalogTooSmall(
            f"relabeling needs >= 2 candidates, catalog has {len(catalog)}"
        )
    return rng.choice(candidates)


def _draw_mode(rng: random.Random, weights: tuple[float, float]) -> PerturbMode:
    w_relabel, w_unk = weights
    if rng.random() * (w_relabel + w_unk) < w_relabel:
        return PerturbMode.RELABEL
    return PerturbMode.UNK


def _check_labels(dataset: Dataset, ontology: Ontology) -> None:
    intents = set(ontology.intent_catalog) | {UNK_TOKEN}
    actions = set(ontology.action_catalog) | {UNK_TOKEN}
    slots = set(ontology.all_slot_names()) | {UNK_TOKEN}
    for split, dlg in dataset.iter_dialogues():
        for ti, turn in enumerate(dlg.turns):
            for act in turn.user_acts:
                if act.kind.value not in intents:
                    raise UnknownLabel(f"{dlg.id} turn {ti}: intent {act.kind.value!r}")
                if act.slot is not None and act.slot not in slots:
                    raise UnknownLabel(f"{dlg.id} turn {ti}: slot {act.slot!r}")
            for aid in turn.system_acts:
                if aid not in actions:
                    raise UnknownLabel(f"{dlg.id} turn {ti}: action {aid!r}")


def _perturb_dialogue(
    dlg: Dialogue,
    cfg: ErrorConfig,
    rng: random.Random,
    intent_catalog: list[str],
    action_catalog: list[str],
    slot_catalog: list[str],
) -> list[PerturbationRecord]:
    records = []
    for ti, turn in enumerate(dlg.turns):
        for ai, act in enumerate(turn.user_acts):
            if cfg.p_intent > 0 and rng.random() < cfg.p_intent:
                mode = _draw_mode(rng, cfg.mode_weights)
                original = act.kind.value
                new = perturb_label(original, intent_catalog, rng, mode)
                if new != original:
                    act.kind = IntentKind(new)
                    records.append(
                        PerturbationRecord(dlg.id, ti, ElementKind.INTENT, ai, original, new, mode)
                    )
        for ai, act in enumerate(turn.user_acts):
            if act.slot is not None and cfg.p_slot > 0 and rng.random() < cfg.p_slot:
                mode = _draw_mode(rng, cfg.mode_weights)
                original = act.slot
                new = perturb_label(original, slot_catalog, rng, mode)
                if new != original:
                    act.slot = new
                    records.append(
                        PerturbationRecord(dlg.id, ti, ElementKind.SLOT, ai, original, new, mode)
                    )
        for ai, aid in enumerate(turn.system_acts):
            if cfg.p_action > 0 and rng.random() < cfg.p_action:
                mode = _draw_mode(rng, cfg.mode_weights)
                new = perturb_label(aid, action_catalog, rng, mode)
                if new != aid:
                    turn.system_acts[ai] = new
                    records.append(
                        PerturbationRecord(dlg.id, ti, ElementKind.ACTION, ai, aid, new, mode)
                    )
    return records


def inject_errors(
    dataset: Dataset,
    ontology: Ontology,
    cfg: ErrorConfig,
    splits: str = "all",
) -> tuple[Dataset, list[PerturbationRecord]]:
    """Perturb a dataset's labels; returns a new dataset plus the audit log.

    The input dataset is left untouched.  ``splits`` may be "all" or "train"
    to restrict which splits receive noise.
    """
    if splits not in ("all", "train"):
        raise ValidationError("splits must be 'all' or 'train'")
    _check_labels(dataset, ontology)

    out = Dataset(
        splits={k: copy.deepcopy(v) for k, v in dataset.splits.items()},
        ontology_hash=dataset.ontology_hash,
        config=dataset.config,
    )
    intent_catalog = list(ontology.intent_catalog)
    action_catalog = list(ontology.action_catalog)
    slot_catalog = ontology.all_slot_names()

    records: list[PerturbationRecord] = []
    ordinal = 0
    for split, dlg in out.iter_dialogues():
        if splits == "all" or split == "train":
            rng = random.Random(derive_seed(cfg.seed, ordinal))
            records.extend(
                _perturb_dialogue(dlg, cfg, rng, intent_catalog, action_catalog, slot_catalog)
            )
        ordinal += 1
    return out, records


def revert_errors(dataset: Dataset, records: list[PerturbationRecord]) -> Dataset:
    """Undo a perturbation pass, restoring the original dataset exactly."""
    out = Dataset(
        splits={k: copy.deepcopy(v) for k, v in dataset.splits.items()},
        ontology_hash=dataset.ontology_hash,
        config=dataset.config,
    )
    by_id = {dlg.id: dlg for _, dlg in out.iter_dialogues()}
    for rec in records:
        dlg = by_id[rec.dialogue_id]
        turn = dlg.turns[rec.turn_index]
        if rec.element is ElementKind.INTENT:
            act = turn.user_acts[rec.index]
            if act.kind.value != rec.new:
                raise ValidationError(f"record does not match dataset: {rec}")
            act.kind = IntentKind(rec.original)
        elif rec.element is ElementKind.SLOT:
            act = turn.user_acts[rec.index]
            if act.slot != rec.new:
                raise ValidationError(f"record does not match dataset: {rec}")
            act.slot = rec.original
        else:
            if turn.system_acts[rec.index] != rec.new:
                raise ValidationError(f"record does not match dataset: {rec}")
            turn.system_acts[rec.index] = rec.original
    return out


def write_records(records: list[PerturbationRecord], path) -> None:
    Path(path).write_text(
        "".join(json.dumps(r.to_dict(), separators=(",", ":")) + "\n" for r in records),
        encoding="utf-8",
    )


def read_records(path) -> list[PerturbationRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(PerturbationRecord.from_dict(json.loads(line)))
    return records
