"""Binary state/target vectors for supervised policy learning.

A state row is assembled from four blocks:

* slot status -- two bits (filled, just-changed-this-turn) per slot,
* the current turn's user intent kinds (multi-hot),
* the previous turn's system actions (multi-hot, zeros at turn 0),
* dialogue management -- a stack-depth>1 flag plus a phase one-hot.

States are reconstructed from serialized acts alone, so encoding works on
perturbed datasets too: an UNK intent lights the UNK position, UNK actions
contribute nothing, and a perturbed slot name that no longer resolves against
the active topic simply stays unfilled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import SPLIT_NAMES, Dataset
from .engine import Dialogue, DialogueTurn, Phase, TopicFrame
from .errors import IndexOutOfRange, UnknownLabel
from .ontology import (
    ActionKind,
    IntentKind,
    Ontology,
    UNK_TOKEN,
    parse_action_id,
)

_CLOSER_KINDS = {IntentKind.NEGATE, IntentKind.THANK, IntentKind.GOODBYE}

MANAGEMENT_FIELDS = ("stack_depth_gt1", "phase_eliciting", "phase_notified", "phase_wrapup")
_PHASE_OFFSET = {Phase.ELICITING: 1, Phase.NOTIFIED: 2, Phase.WRAPUP: 3}


@dataclass(frozen=True)
class StateLayout:
    """Bit positions of every feature; serialized with the data for decoding."""

    slot_keys: tuple[str, ...]  # "domain.topic.slot", document order
    intents: tuple[str, ...]
    actions: tuple[str, ...]
    ontology_hash: str = ""

    @classmethod
    def from_ontology(cls, ontology: Ontology) -> "StateLayout":
        return cls(
            slot_keys=tuple(".".join(key) for key in ontology.slot_keys()),
            intents=tuple(ontology.intent_catalog),
            actions=tuple(ontology.action_catalog),
            ontology_hash=ontology.content_hash(),
        )

    @property
    def intent_offset(self) -> int:
        return 2 * len(self.slot_keys)

    @property
    def action_offset(self) -> int:
        return self.intent_offset + len(self.intents)

    @property
    def management_offset(self) -> int:
        return self.action_offset + len(self.actions)

    @property
    def state_width(self) -> int:
        return self.management_offset + len(MANAGEMENT_FIELDS)

    @property
    def target_width(self) -> int:
        return len(self.actions)

    def slot_index(self) -> dict[str, int]:
        return {key: i for i, key in enumerate(self.slot_keys)}

    def action_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.actions)}

    def intent_index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.intents)}

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "slot_keys": list(self.slot_keys),
            "intents": list(self.intents),
            "actions": list(self.actions),
            "management": list(MANAGEMENT_FIELDS),
            "state_width": self.state_width,
            "target_width": self.target_width,
            "ontology_hash": self.ontology_hash,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "StateLayout":
        return cls(
            slot_keys=tuple(obj["slot_keys"]),
            intents=tuple(obj["intents"]),
            actions=tuple(obj["actions"]),
            ontology_hash=obj.get("ontology_hash", ""),
        )


class TurnReplay:
    """Rebuild the stack of topics from serialized acts, turn by turn.

    Tolerant of label noise by construction: acts that no longer make sense
    against the current stack are ignored rather than rejected.
    """

    def __init__(self, ontology: Ontology):
        self.ontology = ontology
        self.frames: list[TopicFrame] = []

    @property
    def top(self) -> Optional[TopicFrame]:
        return self.frames[-1] if self.frames else None

    def apply_user_acts(self, turn: DialogueTurn) -> set[str]:
        """Frame pushes and slot fills; returns the slot keys touched."""
        changed: set[str] = set()
        for act in turn.user_acts:
            if act.kind is IntentKind.INFORM_INTENT:
                if act.domain is None or self.ontology.topic(act.domain, act.topic) is None:
                    continue
                if self.frames and self.top.phase is Phase.WRAPUP:
                    self.frames.pop()
                self.frames.append(TopicFrame(domain=act.domain, topic=act.topic))
        for act in turn.user_acts:
            if act.kind is IntentKind.INFORM and act.slot is not None and self.frames:
                top = self.top
                topic = self.ontology.topic(top.domain, top.topic)
                if topic is not None and act.slot in topic.slot_names:
                    top.fills[act.slot] = act.value
                    changed.add(f"{top.domain}.{top.topic}.{act.slot}")
        return changed

    def apply_system_acts(self, turn: DialogueTurn) -> None:
        """Phase transitions announced by the system, then wrap-up pops."""
        for aid in turn.system_acts:
            if aid == UNK_TOKEN:
                continue
            parsed = parse_action_id(aid)
            if not self.frames or parsed.domain != self.top.domain:
                continue
            if parsed.kind is ActionKind.NOTIFY:
                self.top.phase = Phase.NOTIFIED
            elif parsed.kind is ActionKind.REQ_MORE:
                self.top.phase = Phase.WRAPUP
        kinds = {a.kind for a in turn.user_acts}
        if self.frames and self.top.phase is Phase.WRAPUP and kinds & _CLOSER_KINDS:
            self.frames.pop()


def _encode_actions_indexed(
    system_acts: list[str], index: dict[str, int], width: int
) -> np.ndarray:
    out = np.zeros(width, dtype=np.uint8)
    for aid in system_acts:
        if aid == UNK_TOKEN:
            continue
        if aid not in index:
            raise UnknownLabel(f"action {aid!r} is not in the catalog")
        out[index[aid]] = 1
    return out


def encode_actions(system_acts: list[str], ontology: Ontology) -> np.ndarray:
    """Multi-hot target over the action catalog; UNK labels contribute nothing."""
    index = {a: i for i, a in enumerate(ontology.action_catalog)}
    return _encode_actions_indexed(system_acts, index, len(index))


@dataclass
class _LayoutIndex:
    slot: dict[str, int]
    intent: dict[str, int]
    action: dict[str, int]

    @classmethod
    def build(cls, layout: StateLayout) -> "_LayoutIndex":
        return cls(layout.slot_index(), layout.intent_index(), layout.action_index())


def _encode_turn_state(
    layout: StateLayout,
    idx: _LayoutIndex,
    replay: TurnReplay,
    turn: DialogueTurn,
    prev_system_acts: Optional[list[str]],
    changed: set[str],
) -> np.ndarray:
    slot_index = idx.slot
    intent_index = idx.intent
    action_index = idx.action

    row = np.zeros(layout.state_width, dtype=np.uint8)
    for frame in replay.frames:
        for slot, value in frame.fills.items():
            if value is None:
                continue
            key = f"{frame.domain}.{frame.topic}.{slot}"
            if key in slot_index:
                row[2 * slot_index[key]] = 1
    for key in changed:
        if key in slot_index:
            row[2 * slot_index[key] + 1] = 1

    for act in turn.user_acts:
        name = act.kind.value
        if name not in intent_index:
            raise UnknownLabel(f"intent {name!r} is not in the catalog")
        row[layout.intent_offset + intent_index[name]] = 1

    if prev_system_acts:
        for aid in prev_system_acts:
            if aid == UNK_TOKEN:
                continue
            if aid not in action_index:
                raise UnknownLabel(f"action {aid!r} is not in the catalog")
            row[layout.action_offset + action_index[aid]] = 1

    base = layout.management_offset
    if len(replay.frames) > 1:
        row[base] = 1
    if replay.frames:
        row[base + _PHASE_OFFSET[replay.top.phase]] = 1
    return row


def encode_dialogue(
    dialogue: Dialogue, ontology: Ontology, layout: Optional[StateLayout] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Per-turn (state, target) matrices for one dialogue."""
    layout = layout or StateLayout.from_ontology(ontology)
    idx = _LayoutIndex.build(layout)
    replay = TurnReplay(ontology)
    states = np.zeros((len(dialogue.turns), layout.state_width), dtype=np.uint8)
    targets = np.zeros((len(dialogue.turns), layout.target_width), dtype=np.uint8)
    prev: Optional[list[str]] = None
    for i, turn in enumerate(dialogue.turns):
        changed = replay.apply_user_acts(turn)
        states[i] = _encode_turn_state(layout, idx, replay, turn, prev, changed)
        targets[i] = _encode_actions_indexed(turn.system_acts, idx.action, layout.target_width)
        replay.apply_system_acts(turn)
        prev = turn.system_acts
    return states, targets


def encode_state(dialogue: Dialogue, turn_index: int, ontology: Ontology) -> np.ndarray:
    """State vector for a single turn (replays the dialogue prefix)."""
    if not 0 <= turn_index < len(dialogue.turns):
        raise IndexOutOfRange(
            f"turn {turn_index} outside dialogue of {len(dialogue.turns)} turns"
        )
    states, _ = encode_dialogue(dialogue, ontology)
    return states[turn_index]


@dataclass
class EncodedDataset:
    splits: dict[str, tuple[np.ndarray, np.ndarray]]
    layout: StateLayout
    ontology_hash: str

    def n_pairs(self, split: str) -> int:
        return self.splits[split][0].shape[0] if split in self.splits else 0


def encode_dataset(dataset: Dataset, ontology: Ontology) -> EncodedDataset:
    """Encode every turn of every split into (state, target) pairs."""
    layout = StateLayout.from_ontology(ontology)
    splits: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for split in SPLIT_NAMES:
        dialogues = dataset.splits.get(split, [])
        state_rows, target_rows = [], []
        for dlg in dialogues:
            try:
                s, t = encode_dialogue(dlg, ontology, layout)
            except UnknownLabel as exc:
                raise UnknownLabel(f"{split}/{dlg.id}: {exc}") from None
            state_rows.append(s)
            target_rows.append(t)
        if state_rows:
            states = np.concatenate(state_rows, axis=0)
            targets = np.concatenate(target_rows, axis=0)
        else:
            states = np.zeros((0, layout.state_width), dtype=np.uint8)
            targets = np.zeros((0, layout.target_width), dtype=np.uint8)
        splits[split] = (states, targets)
    return EncodedDataset(splits=splits, layout=layout, ontology_hash=layout.ontology_hash)


# ---------------------------------------------------------------------------
# Container format: text header + row-major packed bits


_MAGIC = "dialoforge-encoded 1"


def write_encoded(encoded: EncodedDataset, outdir, csv: bool = False) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "layout.json").write_text(
        json.dumps(encoded.layout.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    for split, (states, targets) in encoded.splits.items():
        header = (
            f"{_MAGIC}\n"
            f"split {split}\n"
            f"rows {states.shape[0]}\n"
            f"state_width {encoded.layout.state_width}\n"
            f"target_width {encoded.layout.target_width}\n"
            f"ontology_hash {encoded.ontology_hash}\n"
            "---\n"
        )
        payload = (
            np.packbits(states, axis=1).tobytes()
            + np.packbits(targets, axis=1).tobytes()
        )
        with open(out / f"{split}.bin", "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(payload)
        if csv:
            _write_csv(out / f"{split}.csv", encoded.layout, states, targets)


def _write_csv(path, layout: StateLayout, states: np.ndarray, targets: np.ndarray) -> None:
    cols = [f"s{i}" for i in range(layout.state_width)] + [
        f"a{i}" for i in range(layout.target_width)
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for srow, trow in zip(states, targets):
            fh.write(",".join(str(int(v)) for v in srow) + ",")
            fh.write(",".join(str(int(v)) for v in trow) + "\n")


def read_encoded(indir) -> EncodedDataset:
    path = Path(indir)
    layout = StateLayout.from_dict(
        json.loads((path / "layout.json").read_text(encoding="utf-8"))
    )
    splits: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for split in SPLIT_NAMES:
        fp = path / f"{split}.bin"
        if not fp.exists():
            continue
        blob = fp.read_bytes()
        head, _, rest = blob.partition(b"---\n")
        meta = dict(
            line.split(" ", 1)
            for line in head.decode("ascii").strip().splitlines()[1:]
        )
        rows = int(meta["rows"])
        sw, tw = int(meta["state_width"]), int(meta["target_width"])
        sbytes = rows * ((sw + 7) // 8)
        packed_s = np.frombuffer(rest[:sbytes], dtype=np.uint8)
        packed_t = np.frombuffer(rest[sbytes:], dtype=np.uint8)
        if rows:
            states = np.unpackbits(packed_s.reshape(rows, -1), axis=1)[:, :sw]
            targets = np.unpackbits(packed_t.reshape(rows, -1), axis=1)[:, :tw]
        else:
            states = np.zeros((0, sw), dtype=np.uint8)
            targets = np.zeros((0, tw), dtype=np.uint8)
        splits[split] = (states.astype(np.uint8), targets.astype(np.uint8))
    return EncodedDataset(splits=splits, layout=layout, ontology_hash=layout.ontology_hash)
