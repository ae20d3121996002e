"""Cross-module invariant suite behind the ``verify`` CLI subcommand.

Each check re-derives a quantity through an independent route (matrix
exponentials, finite differences, closed forms, counting) and compares it
against the production path.  All randomness is seeded, so a failure is
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import ansatz, clamaps, model
from .core import (
    PauliString,
    StateVector,
    apply_rotation,
    fidelity,
    fidelity_weight_derivative,
    generator_matrix,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_state(rng: np.random.Generator, n: int) -> StateVector:
    amps = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return StateVector(n, amps / np.linalg.norm(amps))


def _random_pauli(rng: np.random.Generator, n: int) -> PauliString:
    while True:
        labels = tuple(rng.choice(("I", "X", "Y", "Z"), size=n))
        if any(lab != "I" for lab in labels):
            return PauliString(labels)


def check_unitarity(seed: int) -> CheckResult:
    rng = np.random.default_rng([seed, 1])
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        state = _random_state(rng, n)
        rotated = apply_rotation(state, _random_pauli(rng, n), rng.uniform(-6, 6))
        worst = max(worst, abs(np.linalg.norm(rotated.amplitudes) - 1.0))
    return CheckResult("unitarity", worst <= 1e-12, f"max norm drift {worst:.3e}")


def check_jacobians_vs_fd(seed: int) -> CheckResult:
    rng = np.random.default_rng([seed, 2])
    step = 1e-6
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        d_inp = int(rng.integers(1, 5))
        k = int(rng.integers(1, min(6, 4**n)))
        gens, seen = [], set()
        while len(gens) < k:
            g = _random_pauli(rng, n)
            if g.labels not in seen:
                seen.add(g.labels)
                gens.append(g)
        cmap = clamaps.bilinear_map(gens, d_inp)
        w = rng.standard_normal(cmap.d_w_total)
        x = rng.standard_normal(d_inp)
        jw = clamaps.weight_jacobian(cmap, x)
        jx = clamaps.data_jacobian(cmap, w)
        for i in range(cmap.d_w_total):
            bumped = w.copy()
            bumped[i] += step
            dipped = w.copy()
            dipped[i] -= step
            fd = (
                clamaps.eval_coefficients(cmap, bumped, x)
                - clamaps.eval_coefficients(cmap, dipped, x)
            ) / (2 * step)
            worst = max(worst, float(np.abs(fd - jw[:, i]).max()))
        for i in range(d_inp):
            bumped = x.copy()
            bumped[i] += step
            dipped = x.copy()
            dipped[i] -= step
            fd = (
                clamaps.eval_coefficients(cmap, w, bumped)
                - clamaps.eval_coefficients(cmap, w, dipped)
            ) / (2 * step)
            worst = max(worst, float(np.abs(fd - jx[:, i]).max()))
    return CheckResult("jacobians-vs-fd", worst <= 1e-8, f"max deviation {worst:.3e}")


def check_gradient_vs_fd(seed: int) -> CheckResult:
    rng = np.random.default_rng([seed, 3])
    step = 1e-5
    worst = 0.0
    for kind, n, d_inp in (("acls", 2, 3), ("pdr", 2, 2)):
        spec = ansatz.build_ansatz(kind, n, d_inp, 1, 1)
        m = model.new_model(spec, seed=int(rng.integers(1 << 30)), psi0_seed=int(rng.integers(1 << 30)))
        features = rng.uniform(-1, 1, size=(4, d_inp))
        labels = rng.integers(0, 2, size=4)
        analytic = model.gradient(m, features, labels)
        params = np.concatenate([m.circuit_weights, m.readout_weights])
        n_w = m.circuit_weights.size
        for i in range(params.size):
            up = params.copy()
            up[i] += step
            down = params.copy()
            down[i] -= step
            loss_up = model.loss(
                model.forward_batch(m.with_weights(up[:n_w], up[n_w:]), features),
                labels,
                model.task_for(spec),
            )
            loss_down = model.loss(
                model.forward_batch(m.with_weights(down[:n_w], down[n_w:]), features),
                labels,
                model.task_for(spec),
            )
            fd = (loss_up - loss_down) / (2 * step)
            scale = max(abs(fd), abs(analytic[i]), 1e-8)
            worst = max(worst, abs(fd - analytic[i]) / scale)
    return CheckResult("gradient-vs-fd", worst <= 1e-5, f"max relative deviation {worst:.3e}")


def check_closed_form(seed: int) -> CheckResult:
    del seed
    sigma_x = PauliString(("X",))
    sigma_z = PauliString(("Z",))
    zero = StateVector.basis_state(1)
    worst = 0.0
    grid = np.linspace(-math.pi, math.pi, 7)
    for x1 in grid:
        for x2 in grid:
            for w in np.linspace(-3, 3, 7):
                s1 = apply_rotation(apply_rotation(zero, sigma_x, x1), sigma_z, w * x1)
                s2 = apply_rotation(apply_rotation(zero, sigma_x, x2), sigma_z, w * x2)
                sim = fidelity(s1, s2)
                closed = clamaps.closed_form_fidelity_1d(x1, x2, w)
                worst = max(worst, abs(sim - closed))
                deriv = fidelity_weight_derivative(
                    apply_rotation(zero, sigma_x, x1),
                    apply_rotation(zero, sigma_x, x2),
                    sigma_z,
                    w * (x1 - x2),
                    x1 - x2,
                )
                worst = max(
                    worst, abs(deriv - clamaps.closed_form_derivative_1d(x1, x2, w))
                )
    return CheckResult("closed-form-vs-simulator", worst <= 1e-10, f"max deviation {worst:.3e}")


def check_cnot_generator(seed: int) -> CheckResult:
    del seed
    gamma = ansatz.cnot_generator()
    vals, vecs = np.linalg.eigh(generator_matrix(gamma))
    unitary = (vecs * np.exp(-0.5j * (math.pi / 2) * vals)) @ vecs.conj().T
    cnot = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )
    # CNOT[0, 0] = 1, so this entry carries the global phase
    phase = unitary[0, 0]
    deviation = float(np.abs(unitary / phase - cnot).max())
    return CheckResult("cnot-generator", deviation <= 1e-12, f"max deviation {deviation:.3e}")


def check_count_formulas(seed: int) -> CheckResult:
    del seed
    for n in range(1, 17):
        kse = ansatz.k_se(n)
        layer = ansatz.build_layer("acls", n, d_inp=3)
        if len(layer) != 2 * kse:
            return CheckResult("count-formulas", False, f"acls layer slots mismatch at n={n}")
        pdr_layer = ansatz.build_layer("pdr", n, d_inp=n)
        if len(pdr_layer) != kse + n:
            return CheckResult("count-formulas", False, f"pdr layer slots mismatch at n={n}")
        report = ansatz.count_report("acls", n, 3, 2)
        if report.weights_per_layer != 4 * kse or report.total_gates != 4 * kse:
            return CheckResult("count-formulas", False, f"count report mismatch at n={n}")
    return CheckResult("count-formulas", True, "closed forms match slot lists for n in [1, 16]")


def check_rigid_isometry(seed: int) -> CheckResult:
    rng = np.random.default_rng([seed, 4])
    n = 2
    slots = ansatz.build_layer("acls", n, d_inp=1)
    tunable = [s for s in slots if isinstance(s.alpha, clamaps.Constant)]
    tunable = [ansatz.GateSlot(s.generator, s.alpha, i) for i, s in enumerate(tunable)]
    worst = 0.0
    for _ in range(10):
        s1 = _random_state(rng, n)
        s2 = _random_state(rng, n)
        before = fidelity(s1, s2)
        for _ in range(5):
            w = rng.uniform(-math.pi, math.pi, size=len(tunable))
            r1 = ansatz.apply_slots(s1, tunable, d_inp=1, w=w, x=np.zeros(1))
            r2 = ansatz.apply_slots(s2, tunable, d_inp=1, w=w, x=np.zeros(1))
            worst = max(worst, abs(fidelity(r1, r2) - before))
    return CheckResult("rigid-isometry", worst <= 1e-12, f"max fidelity drift {worst:.3e}")


ALL_CHECKS: tuple[tuple[str, Callable[[int], CheckResult]], ...] = (
    ("unitarity", check_unitarity),
    ("jacobians-vs-fd", check_jacobians_vs_fd),
    ("gradient-vs-fd", check_gradient_vs_fd),
    ("closed-form-vs-simulator", check_closed_form),
    ("cnot-generator", check_cnot_generator),
    ("count-formulas", check_count_formulas),
    ("rigid-isometry", check_rigid_isometry),
)


def run_all(seed: int = 0) -> list[CheckResult]:
    return [fn(seed) for _, fn in ALL_CHECKS]
