import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
import chiraldyn.Correlations as correlations
import chiraldyn.Gaussian as gaussian
import chiraldyn.Utils as utils
from conftest import TwoModeSymplectic


def _ClassicalXState(a, c):
    """alpha = beta = a I, gamma = diag(c, 0): correlations in X only."""
    cov = a*np.eye(4)
    cov[0, 2] = cov[2, 0] = c
    return cov


def _RandomMixedState(rng):
    nu = rng.uniform(1.2, 3.0, size=2)
    S = TwoModeSymplectic(rng.uniform(0.0, 1.0), rng.uniform(0.0, np.pi))
    S = gaussian.LocalSymplectic(gaussian.RandomSymplectic(rng, 0.5), gaussian.RandomSymplectic(rng, 0.5)) @ S
    return S @ np.diag([nu[0], nu[0], nu[1], nu[1]]) @ S.T


def test_entropy_function():
    assert correlations.EntropyH(1.0) == 0.0
    assert correlations.EntropyH(1.0 - 1e-12) == 0.0
    assert correlations.EntropyH(3.0) == pytest.approx(2*np.log2(2) - np.log2(1), abs=1e-12)
    with pytest.raises(utils.InvalidArgumentError):
        correlations.EntropyH(0.5)


def test_tmsv_discord_equals_entanglement_entropy():
    r = 0.5
    state = gaussian.TwoModeSqueezedState(r)
    result = correlations.GaussianDiscord(state)
    assert result.discord == pytest.approx(correlations.EntropyH(np.cosh(2*r)), abs=1e-6)
    assert result.nu_minus == pytest.approx(1.0, abs=1e-8)
    assert correlations.MutualInformation(state) == pytest.approx(2*correlations.EntropyH(np.cosh(2*r)), abs=1e-8)
    assert correlations.GaussianDiscord(state, measured='A').discord == pytest.approx(result.discord, abs=1e-6)


def test_tmsv_q_and_duan():
    r = 0.4
    jv = correlations.JointVariancesFromCov(gaussian.TwoModeSqueezedState(r))
    assert correlations.QuantumCorrelationQ(jv) == pytest.approx(2*np.sinh(2*r), rel=1e-12)
    assert jv.var_xminus == pytest.approx(np.exp(-2*r), rel=1e-12)
    assert correlations.IsDuanEntangled(jv)


def test_vacuum_has_no_correlations():
    vac = gaussian.VacuumState(2)
    jv = correlations.JointVariancesFromCov(vac)
    assert correlations.QuantumCorrelationQ(jv) == pytest.approx(0.0, abs=1e-15)
    assert correlations.GaussianDiscord(vac).discord <= 1e-10
    assert not correlations.IsDuanEntangled(jv)


def test_product_state_discord_is_zero_but_printed_form_is_not():
    cov = np.diag([2.0, 2.0, 3.0, 3.0])
    assert correlations.GaussianDiscord(cov).discord <= 1e-10
    assert abs(correlations.GaussianDiscord(cov, printed=True).discord) > 1e-3
    assert correlations.ClassicalCorrelation(cov) <= 1e-10


def test_x_correlated_state_uses_homodyne_branch():
    result = correlations.GaussianDiscord(_ClassicalXState(2.0, 1.0))
    assert result.branch == correlations.BRANCH_HOMODYNE
    assert result.discord > 0
    assert result.e_min == pytest.approx(2.0*(4.0 - 1.0)/2.0, rel=1e-10)


def test_tmsv_lies_on_branch_boundary():
    inv = gaussian.CalcDetInvariants(gaussian.TwoModeSqueezedState(0.3))
    lhs = (inv.I4 - inv.I1*inv.I2)**2
    rhs = (1 + inv.I2)*inv.I3**2*(inv.I1 + inv.I4)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_symplectic_radicand_vanishes_for_pure_states():
    c, s = sp.symbols('c s', positive=True)
    I1 = I2 = c**2
    I3 = -s**2
    I4 = (c**2 - s**2)**2
    delta = I1 + I2 + 2*I3
    radicand = sp.expand(delta**2 - 4*I4)
    assert sp.simplify(radicand) == 0
    nu_sq = sp.simplify(delta/2).subs(c**2, 1 + s**2)
    assert sp.simplify(nu_sq) == 1


def test_homodyne_radicand_factorisation():
    I1, I2, I3, I4 = sp.symbols('I1 I2 I3 I4', real=True)
    expanded = I3**4 + (I4 - I1*I2)**2 - 2*I3**2*(I4 + I1*I2)
    compact = (I1*I2 + I4 - I3**2)**2 - 4*I1*I2*I4
    assert sp.expand(expanded - compact) == 0


def test_discord_rejects_unphysical_and_wrong_size():
    with pytest.raises(utils.InvalidArgumentError):
        correlations.GaussianDiscord(0.5*np.eye(4))
    with pytest.raises(utils.InvalidArgumentError):
        correlations.GaussianDiscord(np.eye(6))
    with pytest.raises(utils.InvalidArgumentError):
        correlations.GaussianDiscord(np.eye(4), measured='C')


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_discord_invariant_under_local_symplectics(seed):
    rng = np.random.default_rng(seed)
    cov = _RandomMixedState(rng)
    S = gaussian.LocalSymplectic(gaussian.RandomSymplectic(rng, 0.5), gaussian.RandomSymplectic(rng, 0.5))
    before = correlations.GaussianDiscord(cov).discord
    after = correlations.GaussianDiscord(S @ cov @ S.T).discord
    assert before >= 0
    assert after == pytest.approx(before, abs=1e-6)


@pytest.mark.slow
def test_closed_form_matches_measurement_oracle():
    rng = np.random.default_rng(100)
    branches = set()
    for trial in range(100):
        if trial % 4 == 3:
            a = rng.uniform(1.5, 3.0)
            cov = _ClassicalXState(a, rng.uniform(0.1, 0.9)*(a - 1.0/a))
        else:
            cov = _RandomMixedState(rng)
        assert gaussian.IsPhysical(cov)
        closed = correlations.GaussianDiscord(cov)
        oracle = correlations.DiscordOracle(cov, seed=trial)
        branches.add(closed.branch)
        assert closed.discord == pytest.approx(oracle.discord, abs=1e-6)
    assert branches == {correlations.BRANCH_GENERAL, correlations.BRANCH_HOMODYNE}


def test_joint_variances_consistency():
    with pytest.raises(utils.DataInconsistencyError):
        correlations.JointVariances(var_x1=1.0, var_x2=1.0, var_p1=1.0, var_p2=1.0, var_xminus=3.0, var_pplus=1.0)
    with pytest.raises(utils.InvalidArgumentError):
        correlations.JointVariances(var_x1=-1.0, var_x2=1.0, var_p1=1.0, var_p2=1.0, var_xminus=1.0, var_pplus=1.0)


def test_covariance_from_homodyne_recovers_tmsv():
    r = 0.3
    c, s = np.cosh(2*r), np.sinh(2*r)
    covXX, covPP = correlations.CovarianceFromHomodyne(c, c, 2*c + 2*s, c, c, 2*c + 2*s)
    assert covXX == pytest.approx(s, rel=1e-12)
    assert covPP == pytest.approx(-s, rel=1e-12)
    with pytest.raises(utils.DataInconsistencyError):
        correlations.CovarianceFromHomodyne(1.0, 1.0, 10.0, 1.0, 1.0, 2.0)


def test_quadratures_from_stokes():
    X1, P1 = correlations.QuadraturesFromStokes(0.2, 0.3, 4.0, channel=1)
    X2, P2 = correlations.QuadraturesFromStokes(0.2, 0.3, 4.0, channel=2)
    assert (X1, P1) == pytest.approx((-0.1, -0.15))
    assert (X2, P2) == pytest.approx((-0.1, 0.15))
    Xs, _ = correlations.QuadraturesFromStokes(0.2, 0.3, 4.0, channel=1, shot_noise_units=True)
    assert Xs == pytest.approx(-0.1*np.sqrt(2))
    with pytest.raises(utils.UndefinedLocalOscillatorError):
        correlations.QuadraturesFromStokes(0.2, 0.3, 0.0, channel=1)
    with pytest.raises(utils.InvalidArgumentError):
        correlations.QuadraturesFromStokes(0.2, 0.3, 1.0, channel=3)


def test_discord_result_serialises():
    doc = correlations.GaussianDiscord(gaussian.TwoModeSqueezedState(0.2)).ToDict()
    assert set(doc) == {'discord_bits', 'branch', 'nu', 'e_min', 'measured'}
    assert doc['measured'] == 'B'


@pytest.mark.parametrize('max_squeeze', [8.0, 12.0])
def test_oracle_on_x_correlated_state(max_squeeze):
    cov = _ClassicalXState(2.0, 1.0)
    closed = correlations.GaussianDiscord(cov)
    oracle = correlations.DiscordOracle(cov, seed=3, max_squeeze=max_squeeze)
    assert oracle.e_min == pytest.approx(3.0, rel=1e-9)
    assert oracle.branch == correlations.BRANCH_HOMODYNE
    assert oracle.discord == pytest.approx(closed.discord, abs=1e-9)
    assert oracle.discord == pytest.approx(0.0317, abs=1e-4)


def test_oracle_input_checks():
    with pytest.raises(utils.InvalidArgumentError):
        correlations.DiscordOracle(np.eye(4), max_squeeze=0.0)
    with pytest.raises(utils.InvalidArgumentError):
        correlations.DiscordOracle(np.eye(4), n_starts=-1)


def test_singular_conditioning_is_skipped():
    assert correlations._ConditionalDet(np.eye(2), np.zeros((2, 2)), np.eye(2), np.zeros((2, 2))) == np.inf


def test_duan_criterion_ignores_round_off():
    jv = correlations.JointVariances(var_x1=1.0, var_x2=1.0, var_p1=1.0, var_p2=1.0,
                                     var_xminus=1.0 - 1e-13, var_pplus=1.0 - 1e-13)
    assert not correlations.IsDuanEntangled(jv)
    assert correlations.IsDuanEntangled(jv, tol=0.0)
    jv = correlations.JointVariances(var_x1=1.0, var_x2=1.0, var_p1=1.0, var_p2=1.0, var_xminus=0.95, var_pplus=0.95)
    assert correlations.IsDuanEntangled(jv)
    with pytest.raises(utils.InvalidArgumentError):
        correlations.IsDuanEntangled(jv, tol=-1.0)


def test_product_state_takes_general_branch_despite_round_off():
    inv = gaussian.DetInvariants(I1=4.0, I2=9.0, I3=0.0, I4=36.0*(1 + 1e-15))
    assert correlations.GeneralBranchHolds(inv)
    assert correlations.GeneralBranchHolds(inv, printed=True)
    cov = np.diag([2.0, 2.0, 3.0, 3.0])
    assert correlations.GaussianDiscord(cov).branch == correlations.BRANCH_GENERAL
    assert correlations.GaussianDiscord(cov, printed=True).branch == correlations.BRANCH_GENERAL


@pytest.mark.parametrize('r', [0.1, 0.4, 0.9])
def test_optimal_epr_variance_of_tmsv(r):
    variance, weight = correlations.OptimalEprVariance(gaussian.TwoModeSqueezedState(r))
    assert variance == pytest.approx(np.exp(-2*r), rel=1e-10)
    assert weight == pytest.approx(1.0, rel=1e-10)


def test_optimal_epr_variance_never_exceeds_unit_weight():
    cov = np.array([[3.0, 0.0, 1.5, 0.0], [0.0, 3.0, 0.0, -1.5], [1.5, 0.0, 2.0, 0.0], [0.0, -1.5, 0.0, 2.0]])
    jv = correlations.JointVariancesFromCov(cov)
    variance, weight = correlations.OptimalEprVariance(cov)
    assert variance <= 0.5*(jv.var_xminus + jv.var_pplus) + 1e-12
    assert variance == pytest.approx(2.5 - np.sqrt(0.25 + 2.25), rel=1e-12)
    with pytest.raises(utils.InvalidArgumentError):
        correlations.OptimalEprVariance(np.eye(6))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_discord_is_bounded_by_mutual_information(seed):
    cov = _RandomMixedState(np.random.default_rng(seed))
    total = correlations.MutualInformation(cov)
    for measured in ('A', 'B'):
        discord = correlations.GaussianDiscord(cov, measured=measured).discord
        assert discord >= 0
        assert discord <= total + 1e-9


@settings(max_examples=100, deadline=None)
@given(a=st.floats(min_value=1.0, max_value=1e3), b=st.floats(min_value=1.0, max_value=1e3))
def test_entropy_is_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert correlations.EntropyH(lo) <= correlations.EntropyH(hi)
    assert correlations.EntropyH(hi) >= 0
