import numpy as np
import pytest

from qflex import PauliString, StateVector


def random_state(rng: np.random.Generator, n: int) -> StateVector:
    amps = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return StateVector(n, amps / np.linalg.norm(amps))


def random_pauli(rng: np.random.Generator, n: int) -> PauliString:
    while True:
        labels = tuple(rng.choice(("I", "X", "Y", "Z"), size=n))
        if any(lab != "I" for lab in labels):
            return PauliString(labels)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240801)
