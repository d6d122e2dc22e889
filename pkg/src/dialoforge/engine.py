"""Dialogue generation: a scripted stochastic user against the rule policy.

The policy always addresses the frame at the top of the dialogue stack.  Per
user turn the rules apply in priority order:

1. chit-chat is answered with the single chit-chat action and nothing else;
2. every INFORM records its value in the top frame and is confirmed when the
   topic declares a CONFIRM action for that slot;
3. a user REQUEST for a slot with a declared INFORM action is answered;
4. while eliciting, the first empty requestable mandatory slot is requested,
   then each unfilled requestable desired slot once;
5. once every mandatory slot is filled the frame is notified (exactly once);
6. a notified frame is asked "anything else?" (REQ_MORE) and wraps up;
7. NEGATE/THANK/GOODBYE against a wrapped-up frame pops it, resuming the
   frame below if any.

The user side is goal-scripted, with three per-turn disturbance events drawn
in fixed order (chit-chat, mind-change, domain-change), each an independent
Bernoulli draw, evaluated only if the previous ones did not fire.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import EmptyStackError, GenerationOverflow, ValidationError
from .ontology import (
    GENERAL_CHIT_CHAT_ID,
    ActionKind,
    IntentKind,
    Ontology,
    SlotCategory,
    TopicSpec,
    make_action_id,
)
from .rng import derive_seed

MAX_TURNS = 60

# Probability knobs of the goal script itself (not disturbance events).
P_SECOND_TOPIC = 0.25
P_USER_REQUEST = 0.15

_CLOSERS = {IntentKind.NEGATE, IntentKind.THANK, IntentKind.GOODBYE}


class Phase(Enum):
    ELICITING = "eliciting"
    NOTIFIED = "notified"
    WRAPUP = "wrapup"


class EventKind(Enum):
    CHIT_CHAT = "chit_chat"
    MIND_CHANGE = "mind_change"
    DOMAIN_CHANGE = "domain_change"


@dataclass
class UserAct:
    kind: IntentKind
    domain: Optional[str] = None
    topic: Optional[str] = None
    slot: Optional[str] = None
    value: Optional[str] = None

    def __post_init__(self):
        if self.kind is IntentKind.INFORM_INTENT:
            if self.domain is None or self.topic is None or self.slot is not None:
                raise ValueError("INFORM_INTENT carries (domain, topic) and no slot")
        elif self.kind is IntentKind.INFORM:
            if self.slot is None:
                raise ValueError("INFORM carries a slot (value may be empty)")
        elif self.kind is IntentKind.REQUEST:
            if self.slot is None or self.value is not None:
                raise ValueError("REQUEST carries a slot only")

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        for key in ("domain", "topic", "slot", "value"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "UserAct":
        act = cls.__new__(cls)
        act.kind = IntentKind(obj["kind"])
        act.domain = obj.get("domain")
        act.topic = obj.get("topic")
        act.slot = obj.get("slot")
        act.value = obj.get("value")
        return act


@dataclass
class TopicFrame:
    """Mutable per-topic context; all information survives interruptions."""

    domain: str
    topic: str
    fills: dict[str, Optional[str]] = field(default_factory=dict)
    requested_desired: set[str] = field(default_factory=set)
    phase: Phase = Phase.ELICITING
    pending_request: Optional[str] = None

    def filled(self, slot: str) -> bool:
        return self.fills.get(slot) is not None


@dataclass
class DialogueStack:
    ontology: Ontology
    frames: list[TopicFrame] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.frames)

    @property
    def top(self) -> TopicFrame:
        return self.frames[-1]

    def push(self, frame: TopicFrame) -> None:
        self.frames.append(frame)

    def pop(self) -> TopicFrame:
        return self.frames.pop()


@dataclass
class DialogueTurn:
    user_acts: list[UserAct]
    system_acts: list[str]
    event: Optional[EventKind] = None

    def to_dict(self) -> dict:
        out = {
            "user_acts": [a.to_dict() for a in self.user_acts],
            "system_acts": list(self.system_acts),
        }
        if self.event is not None:
            out["event"] = self.event.value
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "DialogueTurn":
        return cls(
            user_acts=[UserAct.from_dict(a) for a in obj["user_acts"]],
            system_acts=list(obj["system_acts"]),
            event=EventKind(obj["event"]) if obj.get("event") else None,
        )


@dataclass
class Dialogue:
    id: str
    seed: int
    turns: list[DialogueTurn]
    events_log: list[tuple[int, EventKind]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "seed": self.seed,
            "turns": [t.to_dict() for t in self.turns],
            "events_log": [[i, e.value] for i, e in self.events_log],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Dialogue":
        return cls(
            id=obj["id"],
            seed=obj["seed"],
            turns=[DialogueTurn.from_dict(t) for t in obj["turns"]],
            events_log=[(i, EventKind(e)) for i, e in obj["events_log"]],
        )


@dataclass(frozen=True)
class GeneratorConfig:
    n_dialogues: int = 2000
    p_chitchat: float = 0.2
    p_mind_change: float = 0.2
    p_domain_change: float = 0.2
    max_stack_depth: int = 2
    seed: int = 0
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if self.n_dialogues < 1:
            raise ValidationError("n_dialogues must be positive")
        if self.max_stack_depth < 1:
            raise ValidationError("max_stack_depth must be positive")
        for name in ("p_chitchat", "p_mind_change", "p_domain_change"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1]")
        if len(self.split_fractions) != 3 or any(f < 0 for f in self.split_fractions):
            raise ValidationError("split_fractions must be three non-negative numbers")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ValidationError("split_fractions must sum to 1")

    def to_dict(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "p_chitchat": self.p_chitchat,
            "p_mind_change": self.p_mind_change,
            "p_domain_change": self.p_domain_change,
            "max_stack_depth": self.max_stack_depth,
            "seed": self.seed,
            "split_fractions": list(self.split_fractions),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GeneratorConfig":
        obj = dict(obj)
        obj["split_fractions"] = tuple(obj["split_fractions"])
        return cls(**obj)


# ---------------------------------------------------------------------------
# Policy


def _advance_frame(frame: TopicFrame, topic: TopicSpec, phase: Phase) -> list[str]:
    """Rules 4-6 for one frame, evaluated against the given phase."""
    out: list[str] = []
    if phase is Phase.ELICITING:
        frame.pending_request = None
        missing = [
            s.name
            for s in topic.slots
            if s.category is SlotCategory.MANDATORY and not frame.filled(s.name)
        ]
        askable = [s for s in missing if s in topic.request_slots]
        if askable:
            frame.pending_request = askable[0]
            out.append(make_action_id(frame.domain, ActionKind.REQUEST, askable[0]))
        elif not missing:
            pending_desired = [
                s.name
                for s in topic.slots
                if s.category is SlotCategory.DESIRED
                and s.name in topic.request_slots
                and not frame.filled(s.name)
                and s.name not in frame.requested_desired
            ]
            if pending_desired:
                slot = pending_desired[0]
                frame.requested_desired.add(slot)
                frame.pending_request = slot
                out.append(make_action_id(frame.domain, ActionKind.REQUEST, slot))
            else:
                out.append(make_action_id(frame.domain, ActionKind.NOTIFY))
                frame.phase = Phase.NOTIFIED
        # else: an unrequestable mandatory slot is still empty; the policy
        # cannot ask for it and waits for the user to volunteer it.
    elif phase is Phase.NOTIFIED:
        out.append(make_action_id(frame.domain, ActionKind.REQ_MORE))
        frame.phase = Phase.WRAPUP
    return out


def step_policy(stack: DialogueStack, user_acts: list[UserAct]) -> list[str]:
    """Apply the system rules to one user turn, mutating the stack."""
    ont = stack.ontology
    kinds = {a.kind for a in user_acts}
    if IntentKind.CHIT_CHAT in kinds:
        return [GENERAL_CHIT_CHAT_ID]

    for act in user_acts:
        if act.kind is IntentKind.INFORM_INTENT:
            if ont.topic(act.domain, act.topic) is None:
                raise ValidationError(f"unknown topic {act.domain}/{act.topic}")
            # A wrapped-up frame is finished business: replace it instead of
            # nesting; frames still being elicited are preserved underneath.
            if stack.frames and stack.top.phase is Phase.WRAPUP:
                stack.pop()
            stack.push(TopicFrame(domain=act.domain, topic=act.topic))

    if not stack.frames:
        if any(a.slot is not None for a in user_acts):
            raise EmptyStackError("slot-bearing act with no frame and no INFORM_INTENT")
        return []

    top = stack.top
    topic = ont.topic(top.domain, top.topic)
    phase0 = top.phase
    acts: list[str] = []

    slot_names = set(topic.slot_names)
    for act in user_acts:
        if act.kind is IntentKind.INFORM and act.slot in slot_names:
            top.fills[act.slot] = act.value
            if act.slot in topic.confirm_slots:
                acts.append(make_action_id(top.domain, ActionKind.CONFIRM, act.slot))
        elif act.kind is IntentKind.REQUEST and act.slot in topic.inform_slots:
            acts.append(make_action_id(top.domain, ActionKind.INFORM, act.slot))

    if IntentKind.NEGATE in kinds and phase0 is Phase.ELICITING:
        # "No further preferences": stop offering the remaining desired slots.
        top.requested_desired.update(topic.desired_slots())

    acts.extend(_advance_frame(top, topic, phase0))

    if stack.frames and stack.top.phase is Phase.WRAPUP and kinds & _CLOSERS:
        stack.pop()
        if stack.frames:
            resumed = stack.top
            resumed_topic = ont.topic(resumed.domain, resumed.topic)
            acts.extend(_advance_frame(resumed, resumed_topic, resumed.phase))

    return acts


# ---------------------------------------------------------------------------
# User simulation


@dataclass
class TopicGoal:
    domain: str
    topic: str
    values: dict[str, str]
    user_requested: bool = False


@dataclass
class GoalScript:
    """What the simulated user wants and how far the script has advanced."""

    topics: list[TopicGoal]
    topic_index: int = 0
    active: list[TopicGoal] = field(default_factory=list)
    domain_changes_done: int = 0
    finished: bool = False

    @classmethod
    def sample(cls, ontology: Ontology, rng: random.Random) -> "GoalScript":
        pairs = ontology.topic_pairs()
        domain, topic = rng.choice(pairs)
        topics = [sample_topic_goal(ontology, domain, topic, rng)]
        dom = ontology.domain(domain)
        if len(dom.topics) >= 2 and rng.random() < P_SECOND_TOPIC:
            other = rng.choice([t.name for t in dom.topics if t.name != topic])
            topics.append(sample_topic_goal(ontology, domain, other, rng))
        return cls(topics=topics)


def sample_topic_goal(
    ontology: Ontology, domain: str, topic: str, rng: random.Random
) -> TopicGoal:
    spec = ontology.topic(domain, topic)
    values: dict[str, str] = {}
    for slot in spec.slots:
        if slot.category is not SlotCategory.DESIRED or rng.random() < 0.5:
            values[slot.name] = rng.choice(slot.values)
    return TopicGoal(domain=domain, topic=topic, values=values)


def _intent_turn_acts(
    goal: TopicGoal, ontology: Ontology, rng: random.Random, opening: bool = True
) -> list[UserAct]:
    """Open a topic: state the intent plus the volunteered constraints.

    Slots the policy cannot request ride along here out of necessity; when
    the ontology offers more than one task, at least one INFORM is always
    volunteered so the opening turn is unambiguous about the topic.  Mid-
    dialogue openings (interruptions, follow-up tasks) volunteer a mandatory
    slot; only the very first turn may lead with a side preference.
    """
    spec = ontology.topic(goal.domain, goal.topic)
    acts = [UserAct(IntentKind.INFORM_INTENT, domain=goal.domain, topic=goal.topic)]
    informs = list(spec.unrequestable_mandatory())
    multi_pair = len(ontology.topic_pairs()) >= 2
    if multi_pair and not informs:
        pool = [
            s.name
            for s in spec.slots
            if s.name in goal.values
            and (opening or s.category is SlotCategory.MANDATORY)
        ]
        informs.append(rng.choice(pool))
    for slot in informs[:2]:
        acts.append(UserAct(IntentKind.INFORM, slot=slot, value=goal.values[slot]))
    return acts


def sample_user_turn(
    stack: DialogueStack,
    goal: GoalScript,
    rng: random.Random,
    cfg: GeneratorConfig,
) -> tuple[list[UserAct], Optional[EventKind]]:
    """Draw the next user turn: disturbance events first, then the script."""
    ont = stack.ontology

    if cfg.p_chitchat > 0 and rng.random() < cfg.p_chitchat:
        return [UserAct(IntentKind.CHIT_CHAT)], EventKind.CHIT_CHAT

    top = stack.top if stack.frames else None
    topic = ont.topic(top.domain, top.topic) if top else None

    # Mind-changing stops once the frame starts offering desired slots: the
    # one-offer-per-slot bookkeeping is not observable in the binary state,
    # so reopening elicitation after it would make states ambiguous.
    mind_eligible = (
        top is not None
        and top.phase is Phase.ELICITING
        and not top.requested_desired
    )
    if mind_eligible and cfg.p_mind_change > 0:
        n_filled = sum(1 for s in topic.slots if top.filled(s.name))
        change_pool = [
            s.name
            for s in topic.slots
            if top.filled(s.name) and len(s.values) >= 2
        ]
        # Clearing is restricted to slots the policy can ask for again, and
        # must leave at least one fill so an interrupted frame stays
        # identifiable when the dialogue later resumes it.
        clear_pool = [
            s.name
            for s in topic.slots
            if top.filled(s.name)
            and s.category is SlotCategory.MANDATORY
            and s.name in topic.request_slots
        ] if n_filled >= 2 else []
        if (change_pool or clear_pool) and rng.random() < cfg.p_mind_change:
            clear = rng.random() < 0.5
            if clear and not clear_pool:
                clear = False
            elif not clear and not change_pool:
                clear = True
            if clear:
                slot = rng.choice(clear_pool)
                act = UserAct(IntentKind.INFORM, slot=slot, value=None)
            else:
                slot = rng.choice(change_pool)
                current = top.fills[slot]
                options = [v for v in topic.slot(slot).values if v != current]
                act = UserAct(IntentKind.INFORM, slot=slot, value=rng.choice(options))
            return [act], EventKind.MIND_CHANGE

    if (
        top is not None
        and top.phase is Phase.ELICITING
        and cfg.p_domain_change > 0
        and stack.depth < cfg.max_stack_depth
        and goal.domain_changes_done < cfg.max_stack_depth - 1
    ):
        pairs = [p for p in ont.topic_pairs() if p != (top.domain, top.topic)]
        if pairs and rng.random() < cfg.p_domain_change:
            domain, topic_name = rng.choice(pairs)
            pushed = sample_topic_goal(ont, domain, topic_name, rng)
            goal.active.append(pushed)
            goal.domain_changes_done += 1
            return _intent_turn_acts(pushed, ont, rng, opening=False), EventKind.DOMAIN_CHANGE

    return _scripted_turn(stack, goal, rng), None


def _scripted_turn(
    stack: DialogueStack, goal: GoalScript, rng: random.Random
) -> list[UserAct]:
    ont = stack.ontology

    if not stack.frames:
        current = goal.topics[goal.topic_index]
        goal.active.append(current)
        return _intent_turn_acts(current, ont, rng)

    top = stack.top
    topic = ont.topic(top.domain, top.topic)
    current = goal.active[-1]

    if top.phase is Phase.ELICITING:
        if not current.user_requested:
            askable = [
                s.name
                for s in topic.slots
                if top.filled(s.name) and s.name in topic.inform_slots
            ]
            if askable and rng.random() < P_USER_REQUEST:
                current.user_requested = True
                return [UserAct(IntentKind.REQUEST, slot=rng.choice(askable))]
        pending = top.pending_request
        if pending is not None and not top.filled(pending):
            if pending in current.values:
                return [UserAct(IntentKind.INFORM, slot=pending, value=current.values[pending])]
            return [UserAct(IntentKind.NEGATE)]
        # No open request: volunteer something still missing, or decline.
        unspoken = [
            s.name
            for s in topic.slots
            if s.name in current.values and not top.filled(s.name)
        ]
        if unspoken:
            slot = unspoken[0]
            return [UserAct(IntentKind.INFORM, slot=slot, value=current.values[slot])]
        return [UserAct(IntentKind.NEGATE)]

    if top.phase is Phase.NOTIFIED:
        if stack.depth > 1:
            goal.active.pop()
            return [UserAct(IntentKind.NEGATE)]
        if goal.topic_index + 1 < len(goal.topics):
            return [UserAct(IntentKind.AFFIRM)]
        goal.active.pop()
        goal.finished = True
        return [
            UserAct(IntentKind.NEGATE),
            UserAct(IntentKind.THANK),
            UserAct(IntentKind.GOODBYE),
        ]

    # WRAPUP after an AFFIRM: open the next scripted topic (replaces the frame).
    goal.topic_index += 1
    nxt = goal.topics[goal.topic_index]
    goal.active[-1] = nxt
    return _intent_turn_acts(nxt, ont, rng, opening=False)


# ---------------------------------------------------------------------------
# Whole dialogues


def generate_dialogue(
    ontology: Ontology,
    cfg: GeneratorConfig,
    dialogue_seed: int,
    dialogue_id: Optional[str] = None,
) -> Dialogue:
    """Simulate one complete dialogue from its private seed."""
    rng = random.Random(dialogue_seed)
    goal = GoalScript.sample(ontology, rng)
    stack = DialogueStack(ontology)
    turns: list[DialogueTurn] = []
    events_log: list[tuple[int, EventKind]] = []

    for index in range(MAX_TURNS):
        user_acts, event = sample_user_turn(stack, goal, rng, cfg)
        system_acts = step_policy(stack, user_acts)
        if not system_acts:
            raise RuntimeError(
                f"engine produced an empty system response at turn {index}"
            )
        turns.append(DialogueTurn(user_acts=user_acts, system_acts=system_acts, event=event))
        if event is not None:
            events_log.append((index, event))
        if goal.finished and not stack.frames:
            break
    else:
        raise GenerationOverflow(
            f"dialogue exceeded {MAX_TURNS} turns; check event probabilities"
        )

    return Dialogue(
        id=dialogue_id or f"dlg{dialogue_seed:016x}",
        seed=dialogue_seed,
        turns=turns,
        events_log=events_log,
    )


def dialogue_seeds(cfg: GeneratorConfig) -> list[int]:
    return [derive_seed(cfg.seed, i) for i in range(cfg.n_dialogues)]


def split_counts(n: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    """Floor-based split sizes with the remainder going to train."""
    n_val = int(n * fractions[1] + 1e-6)
    n_test = int(n * fractions[2] + 1e-6)
    return n - n_val - n_test, n_val, n_test
