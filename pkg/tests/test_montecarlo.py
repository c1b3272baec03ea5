import math

import pytest

from swivel.errors import DegenerateArmError
from swivel.montecarlo import (
    combined_half_width, hkw_omega_n, measure_qk, space_average_f,
)
from swivel.planar import triangle_omega_euclidean

SQ2, SQ3 = math.sqrt(2), math.sqrt(3)
N = 200_000


def within(est, value, slack=0.0):
    return abs(est.estimate - value) <= est.half_width + slack


def test_measure_examples(backend):
    q = measure_qk((3, 4, 5), 2, N, seed=1, backend=backend)
    assert within(q, 0.5)
    q = measure_qk((1, 1, 1), 0, N, seed=2, backend=backend)
    assert within(q, 1 / 3)
    assert measure_qk((2, 1), 0, N, seed=3, backend=backend).estimate == 1.0
    assert measure_qk((2, 1), 1, N, seed=3, backend=backend).estimate == 0.0


def test_measure_matches_angles(backend):
    # q_k = alpha_k / pi for three joints
    l = (2.0, 2.5, 3.0)
    alpha = triangle_omega_euclidean(l, (0, 0, 0)).angles
    for k in range(3):
        assert within(measure_qk(l, k, N, seed=10 + k, backend=backend), alpha[k] / math.pi)


def test_seeded_reproducibility_and_backends():
    a = hkw_omega_n((3, 4, 5), (1, SQ2, SQ3), N, seed=42, backend="numba")
    b = hkw_omega_n((3, 4, 5), (1, SQ2, SQ3), N, seed=42, backend="numba")
    c = hkw_omega_n((3, 4, 5), (1, SQ2, SQ3), N, seed=42, backend="numpy")
    d = hkw_omega_n((3, 4, 5), (1, SQ2, SQ3), N, seed=43, backend="numba")
    assert a == b
    assert a.estimate == pytest.approx(c.estimate, abs=1e-12)
    assert a.estimate != d.estimate
    assert a.seed == 42 and a.samples == N


def test_thread_cap_does_not_change_result(monkeypatch):
    monkeypatch.setenv("SWIVEL_THREADS", "1")
    a = hkw_omega_n((1, 1, 1, 2), (1, SQ2, SQ3, 5 ** 0.5), 3 * 65536 + 17, seed=5)
    monkeypatch.setenv("SWIVEL_THREADS", "4")
    b = hkw_omega_n((1, 1, 1, 2), (1, SQ2, SQ3, 5 ** 0.5), 3 * 65536 + 17, seed=5)
    assert a == b


def test_hkw_examples(backend):
    est = hkw_omega_n((3, 4, 5), (1, SQ2, SQ3), N, seed=7, backend=backend)
    assert within(est, triangle_omega_euclidean((3, 4, 5), (1, SQ2, SQ3)).predicted_omega)
    assert hkw_omega_n((2, 1), (5, 7), N, seed=1, backend=backend).estimate == 5.0
    assert est.half_width > 0


def test_space_average(backend):
    est = space_average_f((2, 1), (1, 0), N, seed=9, backend=backend)
    assert within(est, 1.0)
    a = space_average_f((3, 4, 5), (1, SQ2, SQ3), N, seed=9, backend=backend)
    b = hkw_omega_n((3, 4, 5), (1, SQ2, SQ3), N, seed=10, backend=backend)
    assert abs(a.estimate - b.estimate) <= combined_half_width(a, b)


def test_preconditions():
    with pytest.raises(DegenerateArmError) as exc:
        hkw_omega_n((1, 2, 3), (1, 1, 1), N)
    assert exc.value.witness == (1, 1, -1)
    with pytest.raises(DegenerateArmError):
        measure_qk((1, 2, 3), 0, N)
    with pytest.raises(DegenerateArmError):
        space_average_f((1, 2, 3), (1, 1, 1), N)
    with pytest.raises(ValueError):
        hkw_omega_n((1, 2), (1, 1), 100)
    with pytest.raises(ValueError):
        hkw_omega_n((1,), (1,), N)
    with pytest.raises(IndexError):
        measure_qk((3, 4, 5), 3, N)
