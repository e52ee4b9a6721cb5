import math

import numpy as np
import pytest

import oracles
from multisqueeze.errors import ClassMismatch, NumericalOverflow, ScheduleTooShort, Unclassifiable
from multisqueeze.model import PathSpec, StructureSpec
from multisqueeze.squeeze import (
    classify_limit,
    default_schedule,
    limit_matrix,
    limit_parameters,
    realize,
)
from multisqueeze.transfer import full_matrix, transmission, wavenumber

DELTA = StructureSpec.of((2, 1, 1), (-3, 1, 1))


def test_realize_unit_eps():
    s = StructureSpec.of((2, 1, 1), (-9, 2, 1))
    assert realize(s, PathSpec((1, 1)), 1.0) == [(2.0, 1.0), (-9.0, 1.0)]


def test_realize_keeps_regular_product():
    (V, l), = realize(StructureSpec.of((2, 1, 1)), PathSpec((1,)), 1e-3)
    assert l == pytest.approx(1e-3) and V * l == pytest.approx(2)


def test_realize_keeps_prime_phase():
    for eps in (1e-1, 1e-4):
        (V, l), = realize(StructureSpec.of((1, 2, 1)), PathSpec((1,)), eps)
        assert V * l * l == pytest.approx(1)


def test_default_schedule():
    s = default_schedule()
    assert len(s) == 13 and s[0] == pytest.approx(0.1) and s[-1] == pytest.approx(1e-6)


def test_delta_limit():
    est = limit_matrix(DELTA, PathSpec((1, 1)))
    np.testing.assert_allclose(est.matrix.as_array(), [[1, 0], [-1, 1]], atol=1e-8)
    assert 0.8 <= est.order <= 1.2
    c = classify_limit(est)
    assert c.kind == "delta" and c.alpha == pytest.approx(-1, abs=1e-8)


@pytest.mark.parametrize("exps", [(1, 1), (1, 5), (2, 1), ("1/2", 3)])
def test_delta_limit_is_path_independent(exps):
    est = limit_matrix(DELTA, PathSpec(exps))
    np.testing.assert_allclose(est.matrix.as_array(), [[1, 0], [-1, 1]], atol=1e-5)


def test_three_regular_layers_skewed_path():
    s = StructureSpec.of((2, 1, 1), (0.5, 1, 2), (-4, 1, 1))
    est = limit_matrix(s, PathSpec((1, 5, 1)))
    assert classify_limit(est).alpha == pytest.approx(-1.5, abs=1e-6)


def test_limit_is_energy_independent():
    a = limit_matrix(DELTA, PathSpec((1, 1)), E=1.0).matrix.as_array()
    b = limit_matrix(DELTA, PathSpec((1, 1)), E=2.0).matrix.as_array()
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_off_resonance_well_separates():
    est = limit_matrix(StructureSpec.of((-9, 2, 1)), PathSpec((1,)))
    assert est.status("21") == "divergent"
    assert est.fits["21"].exponent == pytest.approx(-1, abs=0.01)
    assert classify_limit(est).kind == "dirichlet"


def test_dirichlet_transmission_decays():
    s, p = StructureSpec.of((-9, 2, 1)), PathSpec((1,))
    tail = [transmission(full_matrix(realize(s, p, e), 1.0), 1.0) for e in default_schedule()[-6:]]
    assert all(b < a for a, b in zip(tail, tail[1:]))
    assert tail[-1] < 1e-6


def test_on_resonance_well_is_transparent():
    est = limit_matrix(StructureSpec.of((-math.pi**2, 2, 1)), PathSpec((1,)))
    c = classify_limit(est)
    assert c.kind == "resonant"
    assert c.theta == pytest.approx(-1, abs=1e-8) and c.alpha == pytest.approx(0, abs=1e-6)
    assert est.fits["12"].exponent > 0
    m = est.traces[-1]
    assert abs(m.m11 * m.m22 - 1) < 1e-6


def test_free_layers_give_identity():
    est = limit_matrix(StructureSpec.of((1, 0.5, 1), (0, 0, 1)), PathSpec((1, 1)))
    assert classify_limit(est).kind == "trivial"


def test_inadmissible_path_unclassifiable():
    s = StructureSpec.of((-1, 2, 1), (1, 2, 1))
    with pytest.raises((Unclassifiable, NumericalOverflow)):
        classify_limit(limit_matrix(s, PathSpec((1, 2))))


def test_schedule_checks():
    with pytest.raises(ScheduleTooShort):
        limit_matrix(DELTA, PathSpec((1, 1)), schedule=[1e-1, 1e-2, 1e-3])
    with pytest.raises(ValueError):
        limit_matrix(DELTA, PathSpec((1, 1)), schedule=[1e-1, 1e-3, 1e-2, 1e-4])


def test_overflow_reports_partial():
    s = StructureSpec.of((-9, 2, 1), (9, 2, 1))
    with pytest.raises(NumericalOverflow) as info:
        limit_matrix(s, PathSpec((1, 4)), schedule=[1e-2, 1e-4, 1e-5, 1e-6])
    assert len(info.value.partial["eps"]) < 4


def test_parallel_schedule_matches_serial():
    a = limit_matrix(DELTA, PathSpec((1, 2)))
    b = limit_matrix(DELTA, PathSpec((1, 2)), workers=4)
    assert a.traces == b.traces


def test_prime_parameters():
    lp = limit_parameters(StructureSpec.of((-9, 2, 1)), PathSpec((1,)))
    assert lp.s(1) == 3
    assert lp.tau(1).real == pytest.approx(oracles.TAU_WELL_3, rel=1e-14)


def test_barrier_tau_negative():
    lp = limit_parameters(StructureSpec.of((9, 2, 1)), PathSpec((1,)))
    assert lp.s(1) == 3j
    assert lp.tau(1).imag == 0
    assert lp.tau(1).real == pytest.approx(oracles.TAU_BARRIER_3, rel=1e-14)


def test_phase_independent_of_width_scale():
    lp = limit_parameters(StructureSpec.of((-9, 2, 5)), PathSpec((1,)))
    assert lp.s(1) == 3


def test_chi_values_and_reciprocity():
    lp = limit_parameters(StructureSpec.of((-1, 2, 2), (1, 2, 3)), PathSpec((1, 1)))
    assert lp.chi(1, 2) == pytest.approx(2 / 3)
    assert lp.chi(1, 2) * lp.chi(2, 1) == pytest.approx(1)
    skew = limit_parameters(StructureSpec.of((-1, 2, 1), (1, 2, 1)), PathSpec((1, 2)))
    assert skew.chi(1, 2) == math.inf and skew.chi(2, 1) == 0


def test_power_chi():
    lp = limit_parameters(StructureSpec.of((1, 1.5, 4), (-1, 2, 1)), PathSpec((2, 1)), sigma=2)
    assert lp.chi(1, 2) == pytest.approx(2)


def test_eta_adjoint_and_regular():
    s = StructureSpec.of((1, "3/2", 1), (-1, 2, 1), (3, 1, 1))
    lp = limit_parameters(s, PathSpec((2, 1, 1)))
    assert lp.eta(1, 2) == pytest.approx(-1)
    assert lp.eta(3, 2) == 0
    with pytest.raises(ClassMismatch):
        lp.eta(2, 1)
    assert lp.eta(1, 1, sigma=2) == pytest.approx(-1)


def test_eta_diverges_off_pencil():
    s = StructureSpec.of((1, "3/2", 1), (-1, 2, 1))
    assert limit_parameters(s, PathSpec((3, 1))).eta(1, 2) == -math.inf
    assert limit_parameters(s, PathSpec((1, 1))).eta(1, 2) == 0


def test_coupling_cases():
    s = StructureSpec.of((-1, 2, 1), (2, 1, 1), (1, 1.5, 1), (-4, 2, 2))
    lp = limit_parameters(s, PathSpec((1, 1, 2, 1)))
    assert lp.coupling(2, 1) == 0
    assert lp.coupling(1, 1) == lp.tau(1)
    assert lp.coupling(4, 1) == pytest.approx(lp.chi(1, 4) * lp.tau(4))
    assert lp.coupling(3, 1) == pytest.approx(lp.eta(3, 1))
    with pytest.raises(ClassMismatch):
        lp.alpha(1)
    assert lp.alpha(2) == 2


def test_closed_form_matches_finite_eps():
    s = StructureSpec.of((-2.5, 2, 1.5), (4, 2, 1))
    p = PathSpec((1, 1))
    lp = limit_parameters(s, p)
    vals = realize(s, p, 1e-5)
    for i, (V, l) in enumerate(vals, 1):
        ql = wavenumber(1.0, V) * l
        assert ql == pytest.approx(lp.s(i), rel=1e-4)
        assert ql * np.tan(ql) == pytest.approx(lp.tau(i), rel=1e-4)
