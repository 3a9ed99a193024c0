import numpy as np
import pytest

from grlstab import graphs, sampling, srm
from grlstab.bounds import srm_confidence
from grlstab.harness import estimate_stability
from grlstab.seeding import child_rng


def make_family(n=8, d_max=3, dim=3, radius=1.0):
    rf = graphs.one_hop_receptive_fields(graphs.cycle_graph(n))
    return srm.DegreeClassFamily(rf=rf, d_max=d_max, dim=dim,
                                 weight_radius=radius, b_x=1.0, b_y=1.0)


def make_instance(family, seed=0):
    sampler = sampling.IidSampler(rf=family.rf, dim=family.dim)
    return sampler, sampler.sample(seed)


def test_truncated_fields_nested_and_symmetric():
    rf = graphs.one_hop_receptive_fields(graphs.cycle_graph(9))
    prev = None
    for d in (1, 2, 3):
        fields = srm.truncated_fields(rf, d)
        for i, members in enumerate(fields):
            assert i in members
            for j in members:
                assert i in fields[j]
        if prev is not None:
            for small, big in zip(prev, fields):
                assert set(small) <= set(big)
        prev = fields
    assert srm.truncated_fields(rf, 1) == tuple((i,) for i in range(9))


def test_design_matrix_zero_padding_nests_predictions():
    family = make_family()
    _, z = make_instance(family)
    phi2 = family.design_matrix(z, 2)
    phi3 = family.design_matrix(z, 3)
    rng = child_rng(1, "pad")
    w2 = rng.normal(size=phi2.shape[1])
    w3 = np.concatenate([w2, np.zeros(phi3.shape[1] - phi2.shape[1])])
    assert np.allclose(phi2 @ w2, phi3 @ w3)


def test_ball_constrained_least_squares_exact_inside():
    rng = child_rng(2, "ls")
    phi = rng.normal(size=(20, 4))
    y = rng.normal(size=20)
    w = srm.ball_constrained_least_squares(phi, y, radius=1e6)
    w_ref, *_ = np.linalg.lstsq(phi, y, rcond=None)
    assert np.allclose(w, w_ref)


def test_ball_constrained_least_squares_boundary_case():
    rng = child_rng(3, "ls2")
    phi = rng.normal(size=(30, 4))
    y = 10.0 * rng.normal(size=30)
    radius = 0.3
    w = srm.ball_constrained_least_squares(phi, y, radius)
    assert np.linalg.norm(w) <= radius + 1e-9
    # optimal on the boundary: no feasible direction improves the residual
    resid = phi @ w - y
    grad = phi.T @ resid
    # KKT: gradient anti-parallel to w (grad = -nu w, nu >= 0)
    cos = float(grad @ w / (np.linalg.norm(grad) * np.linalg.norm(w)))
    assert cos == pytest.approx(-1.0, abs=1e-6)


def test_class_ris0_non_increasing_in_degree():
    family = make_family(d_max=4)
    for seed in range(5):
        _, z = make_instance(family, seed)
        risks = [srm.train_class_erm(family, z, d).empirical_risk
                 for d in range(1, family.d_max + 1)]
        assert all(b <= a + 1e-10 for a, b in zip(risks, risks[1:]))


def test_select_sparse_lambda_zero_is_plain_erm_largest_class():
    family = make_family()
    _, z = make_instance(family, seed=1)
    beta2 = {1: 0.01, 2: 0.02, 3: 0.03}
    sel = srm.select_sparse(family, z, 0.0, beta2)
    # zero penalty: minimizer of the empirical risk; ties toward smaller d
    risks = [f.empirical_risk for f in sel.fits]
    assert sel.selected.empirical_risk == pytest.approx(min(risks))


def test_select_sparse_zero_beta_equals_lambda_zero():
    family = make_family()
    _, z = make_instance(family, seed=2)
    zero_beta = {d: 0.0 for d in (1, 2, 3)}
    s_a = srm.select_sparse(family, z, 10.0, zero_beta)
    s_b = srm.select_sparse(family, z, 0.0, zero_beta)
    assert s_a.selected.degree == s_b.selected.degree


def test_selected_degree_non_increasing_in_lambda():
    family = make_family()
    _, z = make_instance(family, seed=3)
    beta2 = {1: 0.005, 2: 0.02, 3: 0.05}  # increasing d * beta2(d)
    degrees = [
        srm.select_sparse(family, z, lam, beta2).selected.degree
        for lam in (0.0, 0.1, 1.0, 10.0)
    ]
    assert all(b <= a for a, b in zip(degrees, degrees[1:]))


def test_no_dominated_degree_selected():
    family = make_family()
    _, z = make_instance(family, seed=4)
    beta2 = {1: 0.01, 2: 0.015, 3: 0.04}
    sel = srm.select_sparse(family, z, 0.7, beta2)
    assert all(sel.selected.penalized_risk <= f.penalized_risk + 1e-15 for f in sel.fits)


def test_tie_break_toward_smaller_degree():
    family = make_family()
    _, z = make_instance(family, seed=5)
    # degenerate beta2 making all penalized risks equal is contrived; instead
    # verify the comparator directly on equal keys
    fits = [srm.ClassFit(degree=d, weights=np.zeros(1), empirical_risk=1.0,
                         penalty=0.0, penalized_risk=1.0) for d in (1, 2, 3)]
    chosen = min(fits, key=lambda f: (f.penalized_risk, f.degree))
    assert chosen.degree == 1


def test_truncated_mode_returns_fixed_degree():
    family = make_family()
    _, z = make_instance(family, seed=6)
    sel = srm.select_sparse(family, z, 0.0, {}, mode="truncated", fixed_degree=2)
    assert sel.selected.degree == 2
    assert sel.selected.penalty == 0.0


def test_missing_beta_rejected():
    family = make_family()
    _, z = make_instance(family, seed=7)
    with pytest.raises(ValueError):
        srm.select_sparse(family, z, 1.0, {1: 0.0})


def test_srm_class_algorithm_stability_in_harness():
    family = make_family(n=6, d_max=2)
    sampler = sampling.IidSampler(rf=family.rf, dim=3)
    alg = srm.SrmClassAlgorithm(family, degree=2)
    est = estimate_stability(alg, sampler, 2, 2, seed=8)
    assert est.beta2 > 0.0
    assert est.beta2 <= family.loss_bound()


def test_srm_report_fields_and_confidence():
    family = make_family(n=8, d_max=3)
    sampler, z = make_instance(family, seed=9)
    beta2 = {1: 0.01, 2: 0.02, 3: 0.03}
    sel = srm.select_sparse(family, z, 1.0, beta2)
    holdout = [sampler.sample(100 + k) for k in range(4)]
    record = srm.srm_report(sel, family, holdout, epsilon=1.0, beta1=0.005,
                            n_vertices=8)
    assert 0.0 <= record.failure_probability <= 1.0
    assert record.oracle_rhs >= record.epsilon
    # the guarantee itself should comfortably hold on benign instances
    assert record.satisfied


def test_srm_report_single_class_confidence_matches_hand_value():
    family = make_family(n=8, d_max=1)
    sampler, z = make_instance(family, seed=10)
    sel = srm.select_sparse(family, z, 1.0, {1: 0.0})
    holdout = [sampler.sample(200)]
    record = srm.srm_report(sel, family, holdout, epsilon=2.0, beta1=0.0, n_vertices=8)
    b_l = family.loss_bound()
    expect = min(1.0, 2 * np.exp(-((2.0 / 2 + (1.0 - 2.0) * 1 * 0.0) ** 2)
                                 / (2 * 8 * ((2 - 2) * 0.0 + 1 * (0.0 + b_l)) ** 2)))
    assert record.failure_probability == pytest.approx(expect, rel=1e-12)
    assert record.failure_probability == pytest.approx(
        srm_confidence(0.0, 0.0, b_l, 1.0, 1, 8, 2.0), rel=1e-12
    )
