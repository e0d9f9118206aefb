import numpy as np
import pytest
import warnings
from types import SimpleNamespace

from weylglue import energy as en
from weylglue import tensor_core as tc
from weylglue.biharmonic import assemble_interpolant
from weylglue.curvature import flat_chart
from weylglue.gluing import GluingParams, RegimeWarning, model_F, model_H


SPEC = (1.0, 0.0, -1.0)


def pair_tensors():
    w = tc.algweyl_from_spectrum(SPEC, SPEC).tensor
    return w, w.copy()


def random_weyl(rng):
    sd = rng.standard_normal(3)
    asd = rng.standard_normal(3)
    return tc.algweyl_from_spectrum(sd - sd.mean(), asd - asd.mean()).tensor


def test_sphere_rule_volume():
    for level in (6, 12, 16):
        _, wts = en.sphere_rule(level)
        assert abs(wts.sum() - en.VOL_S3) < 1e-12


def test_sphere_rule_moment_exactness():
    for mu, nu, k, l in ((0, 0, 0, 0), (0, 1, 0, 1), (2, 3, 2, 3), (0, 1, 2, 3)):
        got = en.sphere_moment_quadrature(mu, nu, k, l, level=12)
        assert got == pytest.approx(en.sphere_moment(mu, nu, k, l), abs=1e-13)


def test_sphere_rule_rejects_low_level():
    with pytest.raises(ValueError):
        en.sphere_rule(1)


def test_radial_rule_bounds():
    with pytest.raises(ValueError):
        en.radial_rule(1.0, 0.5)


def test_sphere_moment_index_validation():
    with pytest.raises(ValueError):
        en.sphere_moment(0, 0, 0, 4)


def test_boundary_forms_agree_on_ball():
    rng = np.random.default_rng(51)
    h = model_H(random_weyl(rng))
    a = en.second_variation(h, ("ball", 1.0), form="bilap").value
    b = en.second_variation(h, ("ball", 1.0), form="biharm").value
    assert abs(a - b) < 1e-10 * max(abs(a), 1.0)


def test_boundary_forms_agree_on_annulus():
    # F has nonvanishing Laplacian, so this exercises the genuine bulk term
    rng = np.random.default_rng(52)
    F = model_F(random_weyl(rng))
    a = en.second_variation(F, ("annulus", 0.5, 2.0), form="bilap").value
    b = en.second_variation(F, ("annulus", 0.5, 2.0), form="biharm").value
    assert abs(a - b) < 1e-10 * max(abs(a), 1.0)


def test_second_variation_rejects_non_tt():
    from weylglue.fields import model_field
    kn = tc.kulkarni_nomizu(np.eye(4), np.eye(4))
    h = model_field(kn, 1.0, 0.0)
    with pytest.raises(ValueError):
        en.second_variation(h, ("ball", 1.0))


def test_second_variation_positive_for_models():
    rng = np.random.default_rng(54)
    assert en.second_variation(model_H(random_weyl(rng)), ("ball", 1.0)).value > 0.0


def test_interaction_fit_is_exact_quadratic():
    wm, wz = pair_tensors()
    out = en.extract_interaction_coefficient(wm, wz, gamma=0.1,
                                             lam_grid=(1.0, 2.0, 3.0, 4.0))
    assert out["fit_residual"] < 1e-8


def test_interaction_coefficient_prediction():
    wm, wz = pair_tensors()
    out = en.extract_interaction_coefficient(wm, wz, gamma=0.02)
    predicted = -(2.0 / 9.0) * np.pi ** 2 * 24.0
    assert out["coeff_inner"] == pytest.approx(predicted, rel=0.01)
    assert out["coeff_outer"] == pytest.approx(predicted, rel=0.01)


def test_energy_balance_decomposition():
    wm, wz = pair_tensors()
    params = GluingParams(a=2e-5, lam=2.0, gamma=0.02)
    bal = en.energy_balance(wm, wz, params)
    assert bal.interaction == pytest.approx(24.0, rel=1e-10)
    assert bal.leading_bracket < 0.0
    predicted = bal.constant_C - (4.0 / 9.0) * np.pi ** 2 * 4.0 * 24.0
    assert bal.leading_bracket == pytest.approx(predicted, rel=1e-4)
    assert bal.cutoff_region_term == 0.0


def test_energy_balance_zero_wz_is_constant():
    wm, _ = pair_tensors()
    params = GluingParams(a=2e-5, lam=2.0, gamma=0.02)
    bal = en.energy_balance(wm, np.zeros((4, 4, 4, 4)), params)
    assert bal.interaction == 0.0
    assert bal.leading_bracket == pytest.approx(bal.constant_C, rel=1e-12)


def test_choose_parameters_margin_monotone():
    wm, wz = pair_tensors()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        p1 = en.choose_parameters(wm, wz, margin=1.0)
        p10 = en.choose_parameters(wm, wz, margin=10.0)
    assert p10.lam >= p1.lam
    assert en.leading_bracket(wm, wz, p1.gamma, p1.lam) < -1.0


def test_choose_parameters_rejects_degenerate():
    wm, _ = pair_tensors()
    with pytest.raises(ValueError):
        en.choose_parameters(wm, np.zeros((4, 4, 4, 4)))


def test_rough_bound_flat_chart_is_zero():
    out = en.rough_energy_bound(flat_chart(), 0.5, 1.0)
    assert out["value"] == 0.0


def test_rough_bound_dominates_numeric_energy():
    rng = np.random.default_rng(55)
    from weylglue.curvature import FieldChart
    chart = FieldChart(model_H(random_weyl(rng)), scale=0.05, kind="custom",
                       r_max=3.0)
    bound = en.rough_energy_bound(chart, 0.3, 1.0)["value"]
    numeric = en.weyl_energy_numeric(chart, 0.3, 1.0, level=6, n_radial=8)
    assert bound >= numeric


def test_truncation_slope_of_numeric_energy():
    rng = np.random.default_rng(56)
    from weylglue.curvature import FieldChart
    h = model_H(random_weyl(rng))
    phi = en.second_variation(h, ("ball", 1.0), form="bilap").value
    ts = np.geomspace(1e-3, 1e-2, 4)
    res = []
    for t in ts:
        chart = FieldChart(h, scale=t, kind="custom", r_max=2.0)
        res.append(abs(en.weyl_energy_numeric(chart, 0.0, 1.0, level=8,
                                              n_radial=12) - t * t * phi))
    slope = np.polyfit(np.log(ts), np.log(res), 1)[0]
    assert slope >= 2.7


def test_phi_boundary_terms_reported():
    wm, wz = pair_tensors()
    interp = assemble_interpolant(wm, wz, SimpleNamespace(gamma=0.1, lam=2.0))
    out = en.phi_inner(interp)
    assert set(out.breakdown) == {"h_d3", "hess_ij", "cross", "hess_ab", "lap_rad"}
    assert out.sign == -1.0
