import numpy as np
import pytest

from symmaxent.entropy import (Measurement, entropy_of, measurement_entropy, measurement_entropy_for,
                               outcome_distribution, sampled_measurement_entropy, shannon, von_neumann)
from symmaxent.errors import NotOrthonormal, SpaceMismatch
from symmaxent.events import EventSpace, State
from symmaxent.numerics import random_density, random_probability


def test_shannon_values():
    assert shannon([1.0, 0.0]) == 0.0
    assert shannon([0.5, 0.5]) == pytest.approx(np.log(2))
    assert shannon(np.full(16, 1 / 16)) == pytest.approx(np.log(16))


def test_von_neumann_is_spectral_shannon():
    rng = np.random.default_rng(0)
    rho = random_density(5, rng)
    assert von_neumann(rho) == pytest.approx(shannon(np.linalg.eigvalsh(rho)), abs=1e-14)
    assert von_neumann(State.pure([1, 0, 0])) == pytest.approx(0.0, abs=1e-14)


def test_measurement_entropy_attained_by_eigenbasis():
    rng = np.random.default_rng(1)
    for d in (2, 3, 6):
        s = State.quantum(random_density(d, rng))
        value, m = measurement_entropy(s)
        assert abs(value - von_neumann(s)) <= 1e-10
        assert abs(measurement_entropy_for(s, m) - value) <= 1e-10
        samples = sampled_measurement_entropy(s, 200, seed=d)
        assert samples.min() >= value - 1e-9


def test_classical_measurement_entropy_is_shannon():
    rng = np.random.default_rng(2)
    p = random_probability(6, rng)
    s = State.classical(p)
    assert measurement_entropy(s)[0] == shannon(p)
    coarse = Measurement(s.space, blocks=((0, 1), (2, 3, 4, 5)))
    assert measurement_entropy_for(s, coarse) <= shannon(p)
    assert np.allclose(outcome_distribution(s, coarse), [p[:2].sum(), p[2:].sum()])


def test_entropy_dispatch():
    s = State.maximally_mixed(EventSpace.quantum(2))
    assert entropy_of(s, "von_neumann") == pytest.approx(np.log(2))
    with pytest.raises(SpaceMismatch):
        entropy_of(s, "shannon")
    with pytest.raises(SpaceMismatch):
        entropy_of(State.classical([1.0]), "von_neumann")
    with pytest.raises(ValueError):
        entropy_of(s, "renyi")


def test_measurement_validation():
    with pytest.raises(NotOrthonormal):
        Measurement.in_basis(np.ones((2, 2)))
    with pytest.raises(ValueError):
        Measurement(EventSpace.classical(3), blocks=((0,), (1,)))
