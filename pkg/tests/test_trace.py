import json

import pytest

from gridswarm.trace import (TraceFormatError, TraceWriter, parse_trace,
                             trace_digest, verify_trace)


def writer_with(*events):
    w = TraceWriter()
    for tick, kind, actor, payload in events:
        w.emit(tick, kind, actor, **payload)
    return w


def test_emit_rejects_unknown_kind_and_fields():
    w = TraceWriter()
    with pytest.raises(ValueError):
        w.emit(0, "Nonsense", "a")
    with pytest.raises(ValueError):
        w.emit(0, "Move", "a", src=[0, 0], dst=[1, 0], extra=True)


def test_field_order_is_fixed():
    w = TraceWriter()
    w.emit(3, "Move", "a", dst=[1, 0], src=[0, 0])
    assert w.lines() == ['{"tick":3,"kind":"Move","actor":"a","src":[0,0],"dst":[1,0]}']


def test_digest_changes_with_content():
    w1 = writer_with((0, "Move", "a", {"src": [0, 0], "dst": [1, 0]}))
    w2 = writer_with((0, "Move", "a", {"src": [0, 0], "dst": [0, 1]}))
    assert w1.digest() != w2.digest()
    assert w1.digest() == trace_digest(w1.dump())


def test_parse_round_trip():
    w = writer_with((0, "JobSpawn", "controller",
                     {"job": "j0", "location": [2, 2], "priority": 1.5,
                      "zone": [0, 0], "rejected": False}),
                    (1, "Move", "a", {"src": [0, 0], "dst": [1, 0]}))
    events = parse_trace(w.dump())
    assert [e["kind"] for e in events] == ["JobSpawn", "Move"]


def test_parse_reports_line_numbers():
    with pytest.raises(TraceFormatError) as err:
        parse_trace('{"tick":0,"kind":"Move","actor":"a"}\nnot json\n')
    assert err.value.line_no == 2
    with pytest.raises(TraceFormatError):
        parse_trace('{"tick":0,"kind":"Unknown","actor":"a"}\n')


def test_clean_trace_verifies_empty():
    w = writer_with(
        (0, "StatePublish", "a", {"zone": [0, 0], "position": [0, 0],
                                  "intent": [1, 0], "job": None, "agent_tick": 0}),
        (0, "StatePublish", "b", {"zone": [0, 0], "position": [3, 0],
                                  "intent": [3, 0], "job": None, "agent_tick": 0}),
        (1, "Move", "a", {"src": [0, 0], "dst": [1, 0]}),
    )
    assert verify_trace(w.dump()) == []


def test_verifier_flags_vertex_violation():
    w = writer_with(
        (1, "Move", "a", {"src": [0, 0], "dst": [1, 0]}),
        (1, "Move", "b", {"src": [2, 0], "dst": [1, 0]}),
    )
    assert any("vertex violation" in v for v in verify_trace(w.dump()))


def test_verifier_flags_edge_swap():
    w = writer_with(
        (1, "Move", "a", {"src": [0, 0], "dst": [1, 0]}),
        (1, "Move", "b", {"src": [1, 0], "dst": [0, 0]}),
    )
    assert any("edge swap" in v for v in verify_trace(w.dump()))


def test_verifier_flags_snapshot_disagreement():
    w = writer_with(
        (1, "TickBroadcast", "lead", {"zone": [0, 0], "new_tick": 1,
                                      "roster": ["a"], "digest": "aaaa"}),
        (1, "TickAck", "a", {"zone": [0, 0], "committed_tick": 1, "digest": "bbbb"}),
    )
    assert any("snapshot disagreement" in v for v in verify_trace(w.dump()))


def test_verifier_flags_tick_jump_without_resync():
    w = writer_with(
        (1, "TickAck", "a", {"zone": [0, 0], "committed_tick": 1, "digest": "x"}),
        (2, "TickAck", "a", {"zone": [0, 0], "committed_tick": 5, "digest": "y"}),
    )
    assert any("without resync" in v for v in verify_trace(w.dump()))


def test_verifier_allows_jump_after_resync():
    w = writer_with(
        (1, "TickAck", "a", {"zone": [0, 0], "committed_tick": 1, "digest": "x"}),
        (2, "Resync", "a", {"zone": [0, 0], "resync_tick": 4}),
        (3, "TickAck", "a", {"zone": [0, 0], "committed_tick": 5, "digest": "y"}),
    )
    assert verify_trace(w.dump()) == []


def test_verifier_flags_non_monotonic_commit():
    w = writer_with(
        (1, "TickAck", "a", {"zone": [0, 0], "committed_tick": 3, "digest": "x"}),
        (2, "TickAck", "a", {"zone": [0, 0], "committed_tick": 3, "digest": "x"}),
    )
    assert any("after" in v for v in verify_trace(w.dump()))


def election(tick, zone, leader):
    return (tick, "Election", "super", {"zone": zone, "leader": leader,
                                        "since_tick": 0, "reason": "bootstrap"})


def test_verifier_flags_assignment_by_non_leader():
    w = writer_with(
        election(0, [0, 0], "lead"),
        (1, "Assign", "other", {"job": "j0", "agent": "a", "cost": 2, "zone": [0, 0]}),
    )
    assert any("non-leader" in v for v in verify_trace(w.dump()))


def test_verifier_flags_double_assignment():
    w = writer_with(
        election(0, [0, 0], "lead"),
        (1, "Assign", "lead", {"job": "j0", "agent": "a", "cost": 2, "zone": [0, 0]}),
        (2, "Assign", "lead", {"job": "j0", "agent": "b", "cost": 2, "zone": [0, 0]}),
    )
    assert any("double-assigned" in v for v in verify_trace(w.dump()))


def test_verifier_allows_reassignment_after_release():
    w = writer_with(
        election(0, [0, 0], "lead"),
        (1, "Assign", "lead", {"job": "j0", "agent": "a", "cost": 2, "zone": [0, 0]}),
        (2, "MarkDead", "lead", {"zone": [0, 0], "agent": "a", "released_job": "j0"}),
        (3, "Assign", "lead", {"job": "j0", "agent": "b", "cost": 4, "zone": [0, 0]}),
    )
    assert verify_trace(w.dump()) == []


def test_verifier_flags_agent_with_two_jobs():
    w = writer_with(
        election(0, [0, 0], "lead"),
        (1, "Assign", "lead", {"job": "j0", "agent": "a", "cost": 2, "zone": [0, 0]}),
        (2, "Assign", "lead", {"job": "j1", "agent": "a", "cost": 2, "zone": [0, 0]}),
    )
    assert any("two assignments" in v for v in verify_trace(w.dump()))


def test_verifier_flags_mandate_from_wrong_actor():
    w = writer_with(
        (1, "Mandate", "a03", {"mandate": "m0", "agent": "a03",
                               "from_zone": [0, 0], "to_zone": [0, 1]}),
    )
    assert any("super-leader" in v for v in verify_trace(w.dump()))
