import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symmaxent.errors import InvalidEvent, InvalidState, NotOrthogonal, NotOrthonormal, SpaceMismatch
from symmaxent.events import (Event, EventSpace, FrameFunction, State, additivity_check, expectation,
                              frame_sum_check, join_orthogonal, orthocomplement, prob, validate_state)
from symmaxent.numerics import random_density, random_probability, random_unitary


def test_space_validation():
    with pytest.raises(ValueError):
        EventSpace("fuzzy", 2)
    with pytest.raises(ValueError):
        EventSpace.classical(0)


def test_validate_state_reports_violations():
    assert validate_state(np.array([0.5, 0.5])).ok
    rep = validate_state(np.array([0.7, 0.7]))
    assert not rep.ok and rep.violations["normalization"] == pytest.approx(0.4)
    rep = validate_state(np.array([1.5, -0.5]))
    assert "positivity" in rep.violations
    rep = validate_state(np.array([[0.5, 0.1], [0.2, 0.5]]))
    assert "hermiticity" in rep.violations
    rep = validate_state(np.diag([1.2, -0.2]))
    assert rep.violations["positivity"] == pytest.approx(0.2)


def test_state_construction_rejects_invalid():
    with pytest.raises(InvalidState):
        State.classical([0.2, 0.2])
    with pytest.raises(SpaceMismatch):
        State(EventSpace.classical(3), [0.5, 0.5])


def test_state_is_immutable():
    s = State.classical([0.25, 0.75])
    with pytest.raises(ValueError):
        s.data[0] = 1.0


def test_event_validation():
    q = EventSpace.quantum(2)
    with pytest.raises(InvalidEvent):
        Event(q, np.array([[1.0, 0.5], [0.5, 0.0]]))
    with pytest.raises(InvalidEvent):
        Event.subset(EventSpace.classical(3), [5])
    e = Event.span(q, [[1, 1]])
    assert np.allclose(e.data, 0.5 * np.ones((2, 2)))


def test_prob_examples():
    c = EventSpace.classical(4)
    s = State.classical([0.1, 0.2, 0.3, 0.4])
    assert prob(s, Event.subset(c, [1, 3])) == pytest.approx(0.6)
    assert prob(s, Event.unit(c)) == 1.0
    assert prob(s, Event.zero(c)) == 0.0
    rho = State.pure([1, 1j])
    plus_y = Event.span(EventSpace.quantum(2), [[1, 1j]])
    assert prob(rho, plus_y) == pytest.approx(1.0)
    with pytest.raises(SpaceMismatch):
        prob(s, Event.unit(EventSpace.classical(3)))


def test_orthocomplement_sums_to_one():
    rng = np.random.default_rng(0)
    q = EventSpace.quantum(3)
    s = State.quantum(random_density(3, rng))
    e = Event.span(q, [rng.normal(size=3) + 1j * rng.normal(size=3)])
    assert prob(s, e) + prob(s, orthocomplement(e)) == pytest.approx(1.0, abs=1e-12)


def test_join_orthogonal_rejects_overlap():
    c = EventSpace.classical(3)
    with pytest.raises(NotOrthogonal):
        join_orthogonal([Event.subset(c, [0, 1]), Event.subset(c, [1])])
    q = EventSpace.quantum(2)
    with pytest.raises(NotOrthogonal):
        join_orthogonal([Event.span(q, [[1, 0]]), Event.span(q, [[1, 1]])])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 16), st.integers(0, 2 ** 31 - 1))
def test_classical_axioms(n, seed):
    rng = np.random.default_rng(seed)
    s = State.classical(random_probability(n, rng))
    c = s.space
    assert abs(prob(s, Event.unit(c)) - 1) <= 1e-9
    labels = rng.integers(0, 3, size=n)
    family = [Event(c, labels == k) for k in range(3)]
    assert additivity_check(s, family) <= 1e-9
    assert all(prob(s, e) >= 0 for e in family)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 16), st.integers(0, 2 ** 31 - 1))
def test_quantum_axioms(d, seed):
    rng = np.random.default_rng(seed)
    s = State.quantum(random_density(d, rng))
    q = s.space
    u = random_unitary(d, rng)
    cuts = sorted(rng.choice(np.arange(1, d + 1), size=min(2, d), replace=False).tolist())
    blocks = np.split(np.arange(d), cuts)
    family = [Event.span(q, [u[:, i] for i in blk]) for blk in blocks if len(blk)]
    assert abs(prob(s, Event.unit(q)) - 1) <= 1e-9
    assert additivity_check(s, family) <= 1e-9


def test_frame_function_sums_to_one():
    rng = np.random.default_rng(5)
    s = State.quantum(random_density(4, rng))
    f = FrameFunction(s)
    for _ in range(10):
        assert frame_sum_check(f, random_unitary(4, rng)) < 1e-12
    with pytest.raises(NotOrthonormal):
        frame_sum_check(f, np.ones((4, 4)))


def test_expectation():
    s = State.classical([0.5, 0.5])
    assert expectation(s, [0.0, 2.0]) == 1.0
    rho = State.maximally_mixed(EventSpace.quantum(2))
    assert expectation(rho, np.diag([1.0, -1.0])) == 0.0
    with pytest.raises(SpaceMismatch):
        expectation(rho, np.eye(3))
