from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from dialoforge.errors import SchemaError, UnknownPreset, ValidationError
from dialoforge.ontology import (
    GENERAL_CHIT_CHAT_ID,
    ActionKind,
    AtomicActionId,
    IntentKind,
    build_ontology,
    enumerate_atomic_actions,
    load_ontology,
    make_action_id,
    parse_action_id,
    preset_ontology,
)
from .conftest import MINI_DOC


def test_minimal_ontology_loads(mini_ontology):
    assert len(mini_ontology.domains) == 1
    assert len(mini_ontology.slot_keys()) == 2
    assert len(mini_ontology.intent_catalog) == 9


def test_topic_without_mandatory_slot_rejected():
    doc = json.loads(json.dumps(MINI_DOC))
    doc["domains"][0]["topics"][0]["slots"][0]["category"] = "optional"
    doc["domains"][0]["topics"][0]["slots"][1]["category"] = "optional"
    doc["domains"][0]["topics"][0]["emit"] = {"request": [], "confirm": [], "inform": []}
    with pytest.raises(ValidationError) as err:
        load_ontology(json.dumps(doc))
    assert "book" in str(err.value)


def test_simple_preset_counts():
    ont = preset_ontology("simple")
    assert len(ont.domains) == 2
    assert len(ont.action_catalog) == 8


@pytest.mark.parametrize(
    "name,domains,actions",
    [("simple", 2, 8), ("medium", 5, 13), ("hard", 7, 26)],
)
def test_preset_table_counts(name, domains, actions):
    ont = preset_ontology(name)
    assert len(ont.domains) == domains
    assert len(ont.action_catalog) == actions


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        preset_ontology("extreme")


def test_enumerate_empty_domains():
    ont = build_ontology([])
    assert enumerate_atomic_actions(ont) == [GENERAL_CHIT_CHAT_ID]


def test_enumerate_deterministic_and_sorted(hard_ontology):
    a = enumerate_atomic_actions(hard_ontology)
    b = enumerate_atomic_actions(hard_ontology)
    assert a == b == sorted(a)
    assert list(hard_ontology.action_catalog) == a


def test_catalog_cardinalities(medium_ontology):
    assert len(IntentKind) == 9
    assert len(ActionKind) == 6
    assert len(medium_ontology.intent_catalog) == 9


def test_action_id_round_trip_examples():
    parsed = parse_action_id("restaurant-CONFIRM-people")
    assert parsed == AtomicActionId("restaurant", ActionKind.CONFIRM, "people")
    parsed = parse_action_id("GENERAL-ANSWER_CHIT_CHAT")
    assert parsed == AtomicActionId("GENERAL", ActionKind.ANSWER_CHIT_CHAT, None)


_ident = st.from_regex(r"[a-z0-9_]{1,32}", fullmatch=True)


@given(domain=_ident, kind=st.sampled_from(list(ActionKind)), slot=st.none() | _ident)
def test_action_id_round_trip_property(domain, kind, slot):
    aid = make_action_id(domain, kind, slot)
    parsed = parse_action_id(aid)
    assert (parsed.domain, parsed.kind, parsed.slot) == (domain, kind, slot)
    assert parsed.id == aid


def test_catalog_parses_losslessly(hard_ontology):
    for aid in hard_ontology.action_catalog:
        assert parse_action_id(aid).id == aid


def test_malformed_json_rejected():
    with pytest.raises(SchemaError):
        load_ontology("{not json")


def test_unknown_keys_rejected():
    doc = json.loads(json.dumps(MINI_DOC))
    doc["extras"] = 1
    with pytest.raises(SchemaError):
        load_ontology(json.dumps(doc))


def test_bad_category_rejected():
    doc = json.loads(json.dumps(MINI_DOC))
    doc["domains"][0]["topics"][0]["slots"][0]["category"] = "needed"
    with pytest.raises(SchemaError):
        load_ontology(json.dumps(doc))


def test_empty_values_rejected():
    doc = json.loads(json.dumps(MINI_DOC))
    doc["domains"][0]["topics"][0]["slots"][0]["values"] = []
    with pytest.raises(ValidationError):
        load_ontology(json.dumps(doc))


def test_duplicate_slot_names_rejected():
    doc = json.loads(json.dumps(MINI_DOC))
    slots = doc["domains"][0]["topics"][0]["slots"]
    slots[1]["name"] = slots[0]["name"]
    with pytest.raises(ValidationError):
        load_ontology(json.dumps(doc))


def test_optional_slot_never_requestable():
    doc = json.loads(json.dumps(MINI_DOC))
    doc["domains"][0]["topics"][0]["slots"][1]["category"] = "optional"
    doc["domains"][0]["topics"][0]["emit"]["request"] = ["food", "people"]
    with pytest.raises(ValidationError) as err:
        load_ontology(json.dumps(doc))
    assert "optional" in str(err.value)


def test_too_many_unrequestable_mandatory_rejected():
    doc = json.loads(json.dumps(MINI_DOC))
    slots = doc["domains"][0]["topics"][0]["slots"]
    slots.append({"name": "day", "category": "mandatory", "values": ["monday"]})
    doc["domains"][0]["topics"][0]["emit"]["request"] = []
    with pytest.raises(ValidationError):
        load_ontology(json.dumps(doc))


def test_request_table_defaults_to_mandatory_and_desired():
    doc = json.loads(json.dumps(MINI_DOC))
    del doc["domains"][0]["topics"][0]["emit"]["request"]
    ont = load_ontology(json.dumps(doc))
    topic = ont.topic("restaurant", "book")
    assert topic.request_slots == {"food", "people"}


def test_content_hash_stable(simple_ontology):
    assert simple_ontology.content_hash() == preset_ontology("simple").content_hash()
    assert simple_ontology.content_hash() != preset_ontology("medium").content_hash()
