import warnings
import numpy as np
import pytest
from scipy.integrate import trapezoid
import chiraldyn.Dynamics as dynamics
import chiraldyn.Correlations as correlations
import chiraldyn.Gaussian as gaussian
import chiraldyn.Utils as utils
from chiraldyn.Chirality import CouplingKind


def _Cooperativity(model):
    return 4*model.g1*model.g2/(model.gamma_spin*model.kappa1)


def test_build_model_validates():
    with pytest.raises(utils.InvalidArgumentError):
        dynamics.BuildModel('DBS', g1=1.0, g2=1.0, gamma_spin=1.0, kappa1=1.0)
    with pytest.raises(utils.InvalidArgumentError):
        dynamics.BuildModel('XYZ', g1=1.0, g2=1.0, gamma_spin=1.0, kappa1=1.0, kappa2=1.0)
    with pytest.raises(utils.InvalidArgumentError):
        dynamics.BuildModel('DBS', g1=-1.0, g2=1.0, gamma_spin=1.0, kappa1=1.0, kappa2=1.0)
    with pytest.raises(utils.InvalidArgumentError):
        dynamics.BuildModel('DBS', g1=1.0, g2=1.0, gamma_spin=1.0, kappa1=1.0, kappa2=1.0, efficiency=1.5)


def test_nhpa_threshold_is_enforced():
    with pytest.raises(utils.StabilityError):
        dynamics.BuildModel('NHPA', g1=1.0, g2=1.0, gamma_spin=2.0, kappa1=2.0, kappa2=2.0)
    model = dynamics.BuildModel('NHPA', g1=0.5, g2=0.5, gamma_spin=2.0, kappa1=2.0, kappa2=2.0)
    assert model.threshold_ratio == pytest.approx(0.25)


def test_dbs_preserves_vacuum(dbs_model):
    dd = dynamics.CalcDriftDiffusion(dbs_model)
    assert dd.stable
    np.testing.assert_allclose(dynamics.SteadyStateCov(dd).cov, np.eye(6), atol=1e-10)
    for offset in (0.0, 37.0, -250.0):
        cov = dynamics.SpectralCovariance(dd, dbs_model.carrier_hz + offset)
        np.testing.assert_allclose(cov.cov, np.eye(4), atol=1e-10)


def test_dbs_spectra_sit_at_shot_noise(dbs_model):
    dd = dynamics.CalcDriftDiffusion(dbs_model)
    freq = dbs_model.carrier_hz + np.linspace(-500, 500, 101)
    spectrum = dynamics.OutputNoiseSpectrum(dd, dynamics.Q_LABELS, freq)
    for label in dynamics.Q_LABELS:
        np.testing.assert_allclose(spectrum.series[label], 1.0, atol=1e-10)
    q, fwhm = dynamics.QSpectrum(dd, freq)
    np.testing.assert_allclose(q, 0.0, atol=1e-10)
    assert np.isnan(fwhm)


def test_nhpa_carrier_correlations(nhpa_model):
    dd = dynamics.CalcDriftDiffusion(nhpa_model)
    cov = dynamics.SpectralCovariance(dd, nhpa_model.carrier_hz)
    assert gaussian.IsPhysical(cov)
    jv = correlations.JointVariancesFromCov(cov)
    q = correlations.QuantumCorrelationQ(jv)
    C = _Cooperativity(nhpa_model)
    assert q == pytest.approx(8*C*(1 + 2*C), rel=0.05)
    assert correlations.GaussianDiscord(cov).discord > 0
    # equal couplings leave the unit-weight EPR combinations at shot noise
    assert jv.var_xminus == pytest.approx(1.0, abs=1e-9)
    assert jv.var_pplus == pytest.approx(1.0, abs=1e-9)
    assert not correlations.IsDuanEntangled(jv)


def test_q_grows_with_gain(nhpa_model):
    values = [dynamics.QAtCarrier(nhpa_model.Scaled(s)) for s in (0.0, 0.3, 0.6, 0.9, 1.2)]
    assert values[0] == pytest.approx(0.0, abs=1e-12)
    assert all(b > a for a, b in zip(values, values[1:]))


def test_steady_state_refuses_unstable_drift():
    A = np.diag([0.5, 0.5])
    dd = dynamics.DriftDiffusion(A=A, D=np.eye(2), B=np.eye(2), K=np.zeros((4, 2)), P=np.zeros((4, 2)))
    assert not dd.stable
    with pytest.raises(utils.NoSteadyStateError):
        dynamics.SteadyStateCov(dd)


def test_lyapunov_matches_long_time_integration():
    rng = np.random.default_rng(20)
    for trial in range(20):
        kind = CouplingKind.NHPA if trial % 2 else CouplingKind.DBS
        kappa1, kappa2, gamma = rng.uniform(0.5, 2.0, size=3)
        g_max = np.sqrt(0.5*gamma*np.sqrt(kappa1*kappa2)/4)
        g1, g2 = rng.uniform(0.1, 1.0, size=2)*g_max
        model = dynamics.BuildModel(kind, g1=g1, g2=g2, gamma_spin=gamma, kappa1=kappa1, kappa2=kappa2,
                                    delta_spin=rng.uniform(-0.5, 0.5))
        dd = dynamics.CalcDriftDiffusion(model)
        eig = np.linalg.eigvals(dd.A)
        t = 40.0/np.min(np.abs(eig.real))
        dt = 0.05/np.max(np.abs(eig))
        sigma = dynamics.EvolveCov(np.eye(6), dd, t, dt)
        assert np.linalg.norm(sigma - dynamics.SteadyStateCov(dd).cov) < 1e-8


def test_evolve_refuses_large_step(nhpa_model):
    dd = dynamics.CalcDriftDiffusion(nhpa_model)
    with pytest.raises(utils.InvalidArgumentError):
        with pytest.warns(utils.ConvergenceWarning):
            dynamics.EvolveCov(np.eye(6), dd, 1.0, 1.0)


def test_evolve_zero_time_returns_initial(nhpa_model):
    dd = dynamics.CalcDriftDiffusion(nhpa_model)
    np.testing.assert_array_equal(dynamics.EvolveCov(np.eye(6), dd, 0.0, 1e-6), np.eye(6))


@pytest.mark.parametrize('kind', [CouplingKind.DBS, CouplingKind.NHPA])
def test_adiabatic_elimination_matches_full_model(kind):
    model = dynamics.BuildModel(kind, g1=1.0, g2=0.5, gamma_spin=400.0, kappa1=0.5, kappa2=0.5)
    dd_eff, jump = dynamics.AdiabaticEliminate(model)
    full = dynamics.SteadyStateCov(dynamics.CalcDriftDiffusion(model)).cov[:4, :4]
    reduced = dynamics.SteadyStateCov(dd_eff).cov
    assert np.max(np.abs(full - reduced)) < 1e-3
    assert jump.gamma_c == pytest.approx(4*1.0*0.5/400.0)
    assert jump.form == ('a1 + a2' if kind is CouplingKind.DBS else 'a1 + a2†')


def test_adiabatic_error_shrinks_with_spin_rate():
    errors = []
    for ratio in (10.0, 30.0, 100.0):
        model = dynamics.BuildModel('NHPA', g1=1.0, g2=0.5, gamma_spin=ratio, kappa1=0.5, kappa2=0.5)
        dd_eff, _ = dynamics.AdiabaticEliminate(model)
        full = dynamics.SteadyStateCov(dynamics.CalcDriftDiffusion(model)).cov[:4, :4]
        errors.append(np.max(np.abs(full - dynamics.SteadyStateCov(dd_eff).cov)))
    assert errors[0] > errors[1] > errors[2]


def test_adiabatic_regime_warning():
    model = dynamics.BuildModel('DBS', g1=1.0, g2=1.0, gamma_spin=2.0, kappa1=1.0, kappa2=1.0)
    with pytest.warns(utils.AdiabaticRegimeWarning):
        dynamics.AdiabaticEliminate(model)


def test_selector_parsing():
    np.testing.assert_allclose(dynamics.Selector('X1'), [1, 0, 0, 0])
    np.testing.assert_allclose(dynamics.Selector('P1+P2'), np.array([0, 1, 0, 1])/np.sqrt(2))
    np.testing.assert_allclose(dynamics.Selector('X1 - X2'), np.array([1, 0, -1, 0])/np.sqrt(2))
    for bad in ('X3', 'Y1', 'X1-X1', ''):
        with pytest.raises(utils.InvalidArgumentError):
            dynamics.Selector(bad)


def _AsymmetricCouplings(g1_hz, ratio_g2_g1):
    return dict(g1=utils.HzToRad(g1_hz), g2=utils.HzToRad(ratio_g2_g1*g1_hz), gamma_spin=utils.HzToRad(100.0),
                kappa1=utils.HzToRad(1000.0), kappa2=utils.HzToRad(1000.0))


def test_nhpa_drift_instability_is_rejected():
    # threshold ratio 0.5 but g2^2 - g1^2 > gamma kappa / 4
    params = _AsymmetricCouplings(np.sqrt(100.0*1000.0/32), 4.0)
    with pytest.raises(utils.StabilityError, match='eigenvalue'):
        dynamics.BuildModel('NHPA', **params)
    g = np.sqrt(0.5*100.0*1000.0/4)
    model = dynamics.BuildModel('NHPA', **_AsymmetricCouplings(g, 1.0))
    assert model.threshold_ratio == pytest.approx(0.5)
    assert dynamics.CalcDriftDiffusion(model).stable


def test_dbs_with_unequal_couplings_is_accepted():
    model = dynamics.BuildModel('DBS', **_AsymmetricCouplings(np.sqrt(100.0*1000.0/32), 4.0))
    assert dynamics.CalcDriftDiffusion(model).stable


def test_fit_gain_stops_at_drift_instability():
    model = dynamics.BuildModel('NHPA', **_AsymmetricCouplings(10.0, 4.0))
    fitted = dynamics.FitGain(model, 0.91)
    assert fitted.g2/fitted.g1 == pytest.approx(4.0)
    assert dynamics.QAtCarrier(fitted) == pytest.approx(0.91, abs=1e-6)
    assert dynamics.CalcDriftDiffusion(fitted).stable


@pytest.mark.parametrize('scale', [0.5, 1.0, 1.3])
def test_optimal_epr_variance_is_below_shot_noise(nhpa_model, scale):
    model = nhpa_model.Scaled(scale)
    cov = dynamics.SpectralCovariance(dynamics.CalcDriftDiffusion(model), model.carrier_hz)
    C = _Cooperativity(model)
    s1, s2, cxy = 1 + 8*C**2, 1 + 8*C + 8*C**2, 4*C + 8*C**2
    expected = 0.5*(s1 + s2) - np.sqrt(0.25*(s2 - s1)**2 + cxy**2)
    variance, weight = correlations.OptimalEprVariance(cov)
    assert variance == pytest.approx(expected, rel=1e-8)
    assert variance < 1.0
    assert weight == pytest.approx((s1 - expected)/cxy, rel=1e-6)
    label = 'X1-{:.15f}X2'.format(weight)
    spectrum = dynamics.OutputNoiseSpectrum(dynamics.CalcDriftDiffusion(model), [label], [model.carrier_hz])
    assert spectrum.series[label][0] == pytest.approx(variance, rel=1e-9)


def test_optimal_epr_variance_at_default_cooperativity(nhpa_model, dbs_model):
    assert _Cooperativity(nhpa_model) == pytest.approx(0.35, rel=1e-9)
    cov = dynamics.SpectralCovariance(dynamics.CalcDriftDiffusion(nhpa_model), nhpa_model.carrier_hz)
    variance, weight = correlations.OptimalEprVariance(cov)
    assert variance == pytest.approx(0.6188, abs=1e-4)
    assert weight == pytest.approx(0.5719, abs=1e-4)
    vacuum = dynamics.SpectralCovariance(dynamics.CalcDriftDiffusion(dbs_model), dbs_model.carrier_hz)
    assert correlations.OptimalEprVariance(vacuum)[0] == pytest.approx(1.0, abs=1e-10)


def test_weighted_selector_parsing():
    np.testing.assert_allclose(dynamics.Selector('X1-0.5X2'), np.array([1, 0, -0.5, 0])/np.sqrt(1.25))
    np.testing.assert_allclose(dynamics.Selector('2*P1+P2'), np.array([0, 2, 0, 1])/np.sqrt(5))
    np.testing.assert_allclose(dynamics.Selector('X1-1e-1X2'), np.array([1, 0, -0.1, 0])/np.sqrt(1.01))
    for bad in ('0X1', 'X1-0.5', '0.5*'):
        with pytest.raises(utils.InvalidArgumentError):
            dynamics.Selector(bad)


def test_grid_must_increase(nhpa_model):
    dd = dynamics.CalcDriftDiffusion(nhpa_model)
    with pytest.raises(utils.InvalidArgumentError):
        dynamics.OutputNoiseSpectrum(dd, ['X1'], [3.0, 2.0, 1.0])
    with pytest.raises(utils.InvalidArgumentError):
        dynamics.OutputNoiseSpectrum(dd, ['X1'], None)


def test_detection_efficiency_mixes_in_vacuum(nhpa_model):
    dd = dynamics.CalcDriftDiffusion(nhpa_model)
    ideal = dynamics.SpectralCovariance(dd, nhpa_model.carrier_hz).cov
    lossy = dynamics.SpectralCovariance(dd, nhpa_model.carrier_hz, efficiency=0.8).cov
    np.testing.assert_allclose(lossy, 0.8*ideal + 0.2*np.eye(4), atol=1e-12)


def test_resolution_bandwidth_smooths_peak(nhpa_model):
    dd = dynamics.CalcDriftDiffusion(nhpa_model)
    freq = nhpa_model.carrier_hz + np.linspace(-200, 200, 81)
    sharp = dynamics.OutputNoiseSpectrum(dd, ['X1'], freq).series['X1']
    smooth = dynamics.OutputNoiseSpectrum(dd, ['X1'], freq, bandwidth_hz=100.0).series['X1']
    assert smooth.max() < sharp.max()
    assert np.all(smooth >= 1.0 - 1e-12)


def test_intracavity_spectrum_integrates_to_variance():
    model = dynamics.BuildModel('NHPA', g1=0.3, g2=0.3, gamma_spin=1.0, kappa1=1.0, kappa2=1.0, carrier_hz=1000.0)
    dd = dynamics.CalcDriftDiffusion(model)
    c = np.zeros(6)
    c[0] = 1.0
    freq = model.carrier_hz + np.linspace(-400.0, 400.0, 40001)
    s = dynamics.IntracavitySpectrum(dd, c, freq)
    total = trapezoid(s, freq)
    assert total == pytest.approx(dynamics.SteadyStateCov(dd).cov[0, 0], rel=5e-3)


def test_fit_gain_reaches_target(nhpa_model):
    fitted = dynamics.FitGain(nhpa_model, 0.91)
    assert fitted.g1 == pytest.approx(fitted.g2)
    assert dynamics.QAtCarrier(fitted) == pytest.approx(0.91, abs=1e-6)
    freq = fitted.carrier_hz + np.arange(-1000.0, 1000.0 + 1e-9, 2.0)
    _, fwhm = dynamics.QSpectrum(dynamics.CalcDriftDiffusion(fitted), freq)
    assert 50.0 <= fwhm <= 200.0


def test_fit_gain_fails_for_dbs(dbs_model):
    with pytest.raises(utils.FitError):
        dynamics.FitGain(dbs_model, 0.91)


def test_noise_simulation_pipeline(tmp_path, nhpa_model):
    sim = dynamics.NoiseSimulation()
    sim.SetSimulationParameters(model=nhpa_model, freq_hz=nhpa_model.carrier_hz + np.linspace(-500, 500, 201),
                                target_q=0.91)
    sim.Run()
    results = sim.Analysis()
    assert results['Q'] == pytest.approx(0.91, abs=1e-6)
    assert results['discord_bits'] > 0
    assert results['kind'] == 'NHPA'
    assert not results['duan_entangled']
    assert results['epr_min'] < 1.0
    path = sim.SpectrumToCSV(str(tmp_path/'spectrum.csv'))
    header = open(path).readline().strip().split(',')
    assert header == ['freq_hz'] + list(dynamics.Q_LABELS)


def test_noise_simulation_needs_run(nhpa_model):
    sim = dynamics.NoiseSimulation()
    with pytest.raises(utils.InvalidArgumentError):
        sim.Analysis()
    with pytest.raises(utils.InvalidArgumentError):
        sim.SetSimulationParameters(model=nhpa_model, freq_hz=[1.0], colour='blue')


@pytest.mark.slow
@pytest.mark.parametrize('kind, label', [(CouplingKind.DBS, 'X1'), (CouplingKind.NHPA, 'X1'), (CouplingKind.NHPA, 'X1-X2')])
def test_stochastic_spectrum_matches_analytic(kind, label):
    model = dynamics.BuildModel(kind, g1=0.2, g2=0.2, gamma_spin=0.5, kappa1=1.0, kappa2=1.0, carrier_hz=1e-6)
    dd = dynamics.CalcDriftDiffusion(model)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', utils.StatisticsWarning)
        estimate = dynamics.StochasticTrajectorySpectrum(dd, label, duration=2000.0, dt=0.01, seed=7,
                                                                nperseg=8192)
    f = estimate.freq_hz - model.carrier_hz
    keep = (f > 0) & (f <= 5.0)
    analytic = dynamics.OutputNoiseSpectrum(dd, [label], estimate.freq_hz[keep]).series[label]
    z = np.abs(estimate.series[label][keep] - analytic)/estimate.stderr[label][keep]
    assert np.mean(z <= 3.0) >= 0.95


def test_stochastic_refuses_large_step(nhpa_model):
    dd = dynamics.CalcDriftDiffusion(nhpa_model)
    with pytest.raises(utils.InvalidArgumentError):
        with pytest.warns(utils.ConvergenceWarning):
            dynamics.StochasticTrajectorySpectrum(dd, 'X1', duration=10.0, dt=1.0, seed=0)
