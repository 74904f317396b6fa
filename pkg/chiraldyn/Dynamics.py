__author__ = "chiraldyn developers"
__year__ = "2026"

#LIBRARIES
import re, logging, warnings
import dataclasses
from dataclasses import dataclass, field
from typing import Optional
import numpy as np
import pandas as pd
from scipy.linalg import solve_continuous_lyapunov, eigvals
from scipy.optimize import brentq
from scipy.signal import spectrogram, find_peaks, peak_widths
import chiraldyn.Utils as utils
import chiraldyn.Gaussian as gaussian
import chiraldyn.Correlations as correlations
from chiraldyn.Chirality import CouplingKind

logger = logging.getLogger(__name__)

"""
Three-mode quantum Langevin model of two optical channels coupled through a shared collective spin.

Quadrature ordering (X1, P1, X2, P2, Xb, Pb), shot-noise units, all rates in rad/s.
Channel 1 exchanges excitations with the spin; channel 2 either exchanges (DBS) or
pair-creates (NHPA) with it. Outputs follow the input-output relation y = x_in - sqrt(kappa) x.
"""

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
OUTPUT_LABELS = ('X1', 'P1', 'X2', 'P2')
# channel 2 is read with a pi local-oscillator phase
DETECTION_FRAME = np.diag([1.0, 1.0, -1.0, -1.0])
Q_LABELS = ('X1', 'X2', 'P1', 'P2', 'X1-X2', 'P1+P2')


@dataclass(frozen=True)
class ThreeModeModel:
    """
    Light-spin model {a1, a2, b}.

    :parameter kind:       Required (CouplingKind)
    :parameter g1, g2:     Required (flt) >= 0: light-spin coupling rates, rad/s
    :parameter gamma_spin: Required (flt) > 0: total spin decoherence, rad/s
    :parameter kappa1:     Required (flt) > 0: optical bandwidth of channel 1, rad/s
    :parameter kappa2:     Required (flt) > 0: optical bandwidth of channel 2, rad/s
    :parameter delta_spin: Optional (flt): spin detuning, rad/s
    :parameter carrier_hz: Optional (flt) > 0: detection carrier, Hz
    :parameter efficiency: Optional (flt) in (0, 1]: detection efficiency
    """
    kind: CouplingKind
    g1: float
    g2: float
    gamma_spin: float
    kappa1: float
    kappa2: float
    delta_spin: float = 0.0
    carrier_hz: float = 298.8e3
    efficiency: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', CouplingKind(self.kind))
        for name in ('g1', 'g2', 'gamma_spin', 'kappa1', 'kappa2', 'delta_spin', 'carrier_hz', 'efficiency'):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise utils.InvalidArgumentError("ERROR: {} must be finite".format(name))
            object.__setattr__(self, name, value)
        if self.g1 < 0 or self.g2 < 0: raise utils.InvalidArgumentError("ERROR: coupling rates g1, g2 must be >= 0")
        for name in ('gamma_spin', 'kappa1', 'kappa2', 'carrier_hz'):
            if getattr(self, name) <= 0: raise utils.InvalidArgumentError("ERROR: {} must be > 0".format(name))
        if not 0 < self.efficiency <= 1: raise utils.InvalidArgumentError("ERROR: efficiency must lie in (0, 1]")
        if self.kind is CouplingKind.NHPA and self.threshold_ratio >= 1:
            raise utils.StabilityError("ERROR: NHPA at or above threshold: 4 g1 g2 / (gamma_spin sqrt(kappa1 kappa2)) = {:.4g} >= 1".format(self.threshold_ratio))
        if self.kind is CouplingKind.NHPA:
            growth = float(np.max(eigvals(CalcDriftDiffusion(self).A).real))
            if growth >= 0:
                raise utils.StabilityError("ERROR: NHPA drift has a non-decaying eigenvalue (max Re eig = {:.4g} rad/s) at threshold ratio {:.4g}".format(growth, self.threshold_ratio))

    @property
    def threshold_ratio(self):
        """4 g1 g2 / (gamma_spin sqrt(kappa1 kappa2)); NHPA models must stay below 1."""
        return 4*self.g1*self.g2/(self.gamma_spin*np.sqrt(self.kappa1*self.kappa2))

    def Scaled(self, factor):
        """Same model with both couplings multiplied by factor."""
        return dataclasses.replace(self, g1=self.g1*factor, g2=self.g2*factor)


@dataclass(frozen=True, eq=False)
class DriftDiffusion:
    """
    Linear Gaussian dynamics dx = A x dt + B dW with diffusion D = B B^T and outputs y = P xi - K x.

    :parameter A:      Required (2N x 2N array): drift, rad/s
    :parameter D:      Required (2N x 2N array): diffusion, rad/s
    :parameter B:      Required (2N x M array): noise input map
    :parameter K:      Required (4 x 2N array): output coupling of the two optical channels
    :parameter P:      Required (4 x M array): direct feed-through of input noise to the outputs
    """
    A: np.ndarray
    D: np.ndarray
    B: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    carrier_hz: float = 0.0
    efficiency: float = 1.0
    stable: bool = field(init=False)

    def __post_init__(self):
        for name in ('A', 'D', 'B', 'K', 'P'):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not np.allclose(self.D, self.D.T, atol=1e-12*max(1.0, np.abs(self.D).max())):
            raise utils.InvalidArgumentError("ERROR: diffusion matrix must be symmetric")
        object.__setattr__(self, 'stable', bool(np.max(eigvals(self.A).real) < 0))

    @property
    def n_modes(self):
        return self.A.shape[0]//2


@dataclass(frozen=True)
class CollectiveJump:
    """
    Effective collective dissipator left after eliminating the spin: L ~ sqrt(gamma_c) (a1 + e^{i phi} a2[dagger]).
    """
    kind: CouplingKind
    gamma_c: float
    phi: float = 0.0

    @property
    def form(self):
        return 'a1 + a2' if self.kind is CouplingKind.DBS else 'a1 + a2†'


@dataclass(frozen=True, eq=False)
class NoiseSpectrum:
    """
    Shot-noise normalised spectra on a frequency grid.

    :parameter freq_hz: Required (array): monotone grid, Hz
    :parameter series:  Required (dict): label -> noise power array
    :parameter stderr:  Optional (dict): label -> standard-error array (stochastic estimates)
    """
    freq_hz: np.ndarray
    series: dict
    stderr: Optional[dict] = None

    def ToDataFrame(self):
        data = {'freq_hz': np.asarray(self.freq_hz)}
        for label, values in self.series.items():
            data[label] = np.asarray(values)
        for label, values in (self.stderr or {}).items():
            data['{}_stderr'.format(label)] = np.asarray(values)
        return pd.DataFrame(data)

    def ToCSV(self, path):
        """Writes `freq_hz,<label1>,...` with 12 significant digits."""
        return utils.AtomicWriteCSV(self.ToDataFrame(), path)


####################
####   MODEL    ####
####################

def BuildModel(kind, **params):
    """
    Builds the three-mode model for a coupling kind.

    DBS:  H = g1 (a1 b† + a1† b) + g2 (a2 b† + a2† b)
    NHPA: H = g1 (a1 b† + a1† b) + g2 (a2† b† + a2 b)

    :parameter kind:   Required (CouplingKind or str)
    :parameter params: Required (kwargs): g1, g2, gamma_spin, kappa1, kappa2 and optional delta_spin, carrier_hz, efficiency
    :return: ThreeModeModel
    """
    try:
        kind = CouplingKind(kind)
    except ValueError:
        raise utils.InvalidArgumentError("ERROR: unknown coupling kind {!r}".format(kind)) from None
    known = {f.name for f in dataclasses.fields(ThreeModeModel)} - {'kind'}
    unknown = set(params) - known
    if unknown:
        raise utils.InvalidArgumentError("ERROR: unknown model parameters {}".format(sorted(unknown)))
    missing = {'g1', 'g2', 'gamma_spin', 'kappa1', 'kappa2'} - set(params)
    if missing:
        raise utils.InvalidArgumentError("ERROR: model parameters {} undefined.".format(sorted(missing)))
    model = ThreeModeModel(kind=kind, **params)
    logger.debug("built %s model, threshold ratio %.4g", model.kind.value, model.threshold_ratio)
    return model


def CalcDriftDiffusion(model):
    """
    Heisenberg-Langevin linearisation of the model in quadrature form.

    :parameter model: Required (ThreeModeModel)
    :return: DriftDiffusion (6 x 6)
    """
    k1, k2, gm = model.kappa1, model.kappa2, model.gamma_spin
    A = np.zeros((6, 6))
    A[0:2, 0:2] = -0.5*k1*np.eye(2)
    A[2:4, 2:4] = -0.5*k2*np.eye(2)
    A[4:6, 4:6] = -0.5*gm*np.eye(2) + model.delta_spin*J2
    A[0:2, 4:6] = A[4:6, 0:2] = model.g1*J2
    if model.kind is CouplingKind.DBS:
        A[2:4, 4:6] = A[4:6, 2:4] = model.g2*J2
    else:
        A[2:4, 4:6] = A[4:6, 2:4] = -model.g2*SX
    rates = np.array([k1, k1, k2, k2, gm, gm])
    B = np.diag(np.sqrt(rates))
    K = np.zeros((4, 6))
    K[:, :4] = np.diag(np.sqrt(rates[:4]))
    P = np.zeros((4, 6))
    P[:, :4] = np.eye(4)
    return DriftDiffusion(A=A, D=np.diag(rates), B=B, K=K, P=P, carrier_hz=model.carrier_hz, efficiency=model.efficiency)


def _RequireStable(dd):
    if not dd.stable:
        spectrum = eigvals(dd.A)
        raise utils.NoSteadyStateError("ERROR: drift matrix is unstable (max Re eig = {:.4g})".format(spectrum.real.max()))


def SteadyStateCov(dd, rtol=1e-10):
    """
    Steady-state covariance from the Lyapunov equation A sigma + sigma A^T + D = 0.

    :parameter dd:   Required (DriftDiffusion)
    :parameter rtol: Optional (flt): residual bound relative to ||D||_F
    :return: GaussianState
    """
    _RequireStable(dd)
    sigma = solve_continuous_lyapunov(dd.A, -dd.D)
    sigma = 0.5*(sigma + sigma.T)
    residual = np.linalg.norm(dd.A @ sigma + sigma @ dd.A.T + dd.D)
    scale = np.linalg.norm(dd.D)
    if residual > rtol*max(scale, np.finfo(float).tiny):
        raise utils.NumericFailureError("ERROR: Lyapunov solve did not converge",
                                        diagnostics={'residual': residual, 'cond_A': float(np.linalg.cond(dd.A))})
    logger.debug("Lyapunov residual %.3e (||D|| = %.3e)", residual, scale)
    return gaussian.GaussianState.FromCovariance(sigma)


def _MaxRate(A):
    return float(np.max(np.abs(eigvals(A))))


def EvolveCov(cov0, dd, t, dt):
    """
    Fixed-step RK4 integration of d sigma/dt = A sigma + sigma A^T + D.

    :parameter cov0: Required (array or GaussianState): initial covariance
    :parameter t:    Required (flt) >= 0: final time, s
    :parameter dt:   Required (flt) > 0: step, at most 0.1/max|eig A|
    :return: (array) covariance at time t
    """
    sigma = np.array(cov0.cov if isinstance(cov0, gaussian.GaussianState) else cov0, dtype=float)
    if sigma.shape != dd.A.shape:
        raise utils.InvalidArgumentError("ERROR: initial covariance shape {} does not match drift {}".format(sigma.shape, dd.A.shape))
    if t < 0 or dt <= 0:
        raise utils.InvalidArgumentError("ERROR: need t >= 0 and dt > 0")
    limit = 0.1/_MaxRate(dd.A)
    if dt > limit:
        warnings.warn("step dt={:.3g} exceeds stability limit {:.3g}; refusing to integrate".format(dt, limit), utils.ConvergenceWarning)
        raise utils.InvalidArgumentError("ERROR: dt={:.3g} too large, must be <= {:.3g}".format(dt, limit))
    if t == 0: return sigma
    n_steps = int(np.ceil(t/dt - 1e-12))
    h = t/n_steps
    A, D = dd.A, dd.D

    def rhs(s):
        return A @ s + s @ A.T + D

    for _ in range(n_steps):
        k1 = rhs(sigma)
        k2 = rhs(sigma + 0.5*h*k1)
        k3 = rhs(sigma + 0.5*h*k2)
        k4 = rhs(sigma + h*k3)
        sigma = sigma + (h/6.0)*(k1 + 2*k2 + 2*k3 + k4)
    return 0.5*(sigma + sigma.T)


def AdiabaticEliminate(model, regime_factor=10.0):
    """
    Eliminates the spin mode (Schur complement of the drift) leaving an effective two-mode model
    with a collective jump operator of rate gamma_c = 4 g1 g2 / gamma_spin.

    :parameter model:         Required (ThreeModeModel)
    :parameter regime_factor: Optional (flt): gamma_spin must exceed this times every other rate
    :return: (DriftDiffusion 4 x 4, CollectiveJump)
    """
    slowest = max(model.g1, model.g2, model.kappa1, model.kappa2)
    if model.gamma_spin < regime_factor*slowest:
        warnings.warn("gamma_spin={:.4g} is below {:g} x max(g, kappa)={:.4g}; adiabatic elimination is unreliable".format(
            model.gamma_spin, regime_factor, regime_factor*slowest), utils.AdiabaticRegimeWarning)
    full = CalcDriftDiffusion(model)
    A = full.A
    Aaa, Aab, Aba, Abb = A[:4, :4], A[:4, 4:], A[4:, :4], A[4:, 4:]
    Abb_inv = np.linalg.inv(Abb)
    A_eff = Aaa - Aab @ Abb_inv @ Aba
    B_eff = full.B[:4, :] - Aab @ Abb_inv @ full.B[4:, :]
    D_eff = B_eff @ B_eff.T
    dd = DriftDiffusion(A=A_eff, D=0.5*(D_eff + D_eff.T), B=B_eff, K=full.K[:, :4], P=full.P,
                        carrier_hz=full.carrier_hz, efficiency=full.efficiency)
    jump = CollectiveJump(kind=model.kind, gamma_c=4*model.g1*model.g2/model.gamma_spin)
    logger.debug("eliminated spin: gamma_c = %.4g rad/s, jump %s", jump.gamma_c, jump.form)
    return dd, jump


####################
####  SPECTRA   ####
####################

_TERM = re.compile(r'([+-]?)((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\*?)?([XP])([12])')


def Selector(label):
    """
    Normalised row vector over the detected outputs (X1, P1, X2, P2) for a label such as 'X1', 'X1-X2',
    'P1+P2' or a weighted combination like 'X1-0.57X2' (a '*' between weight and quadrature is allowed).

    :parameter label: Required (str)
    :return: (array of length 4)
    """
    text = label.replace(' ', '')
    terms = [m for m in _TERM.finditer(text)]
    if not terms or ''.join(m.group(0) for m in terms) != text:
        raise utils.InvalidArgumentError("ERROR: cannot parse quadrature label {!r}".format(label))
    row = np.zeros(4)
    for m in terms:
        sign, weight, quad, channel = m.groups()
        coeff = float(weight.rstrip('*')) if weight else 1.0
        idx = 2*(int(channel) - 1) + (0 if quad == 'X' else 1)
        row[idx] += -coeff if sign == '-' else coeff
    norm = np.linalg.norm(row)
    if norm == 0:
        raise utils.InvalidArgumentError("ERROR: quadrature label {!r} cancels out".format(label))
    return row/norm


def _CheckGrid(freq_hz):
    if freq_hz is None: raise utils.InvalidArgumentError("ERROR: frequency grid undefined.")
    freq = np.atleast_1d(np.asarray(freq_hz, dtype=float))
    if freq.ndim != 1 or freq.size == 0 or not np.all(np.isfinite(freq)):
        raise utils.InvalidArgumentError("ERROR: frequency grid must be a non-empty finite 1-D array")
    if freq.size > 1 and np.any(np.diff(freq) <= 0):
        raise utils.InvalidArgumentError("ERROR: frequency grid must be strictly increasing")
    return freq


def TransferMatrix(dd, freq_hz, frame=True):
    """
    Output transfer T(w) = P - K (i w' - A)^-1 B with w' = 2 pi (f - carrier), stacked over the grid.

    :parameter frame: Optional (bool): apply the detection frame (pi phase on channel 2)
    :return: (array of shape (n_freq, 4, M))
    """
    freq = np.atleast_1d(np.asarray(freq_hz, dtype=float))
    w = 2*np.pi*(freq - dd.carrier_hz)
    n = dd.A.shape[0]
    M = (1j*w[:, None, None])*np.eye(n)[None] - dd.A[None]
    T = dd.P[None] - dd.K[None] @ np.linalg.solve(M, np.broadcast_to(dd.B, (len(w),) + dd.B.shape))
    if frame: T = DETECTION_FRAME[None] @ T
    return T


def _OutputCovariances(dd, freq, efficiency=None):
    T = TransferMatrix(dd, freq)
    cov = np.real(T @ np.conj(np.swapaxes(T, 1, 2)))
    eta = dd.efficiency if efficiency is None else efficiency
    return eta*cov + (1 - eta)*np.eye(4)[None]


def SpectralCovariance(dd, freq_hz, efficiency=None):
    """
    Covariance of the detected output quadratures (X1, P1, X2, P2) at one analysis frequency.

    :parameter dd:         Required (DriftDiffusion): stable dynamics
    :parameter freq_hz:    Required (flt): analysis frequency, Hz
    :parameter efficiency: Optional (flt): overrides the model detection efficiency
    :return: GaussianState
    """
    _RequireStable(dd)
    cov = _OutputCovariances(dd, _CheckGrid([freq_hz]), efficiency)[0]
    return gaussian.GaussianState.FromCovariance(cov)


def OutputNoiseSpectrum(dd, selectors=Q_LABELS, freq_hz=None, bandwidth_hz=None, efficiency=None, n_rbw=9):
    """
    Symmetrised output noise spectra for quadrature combinations, vacuum = 1.

    :parameter dd:           Required (DriftDiffusion)
    :parameter selectors:    Optional (list of str): quadrature labels such as 'X1', 'X1-X2', 'P1+P2'
    :parameter freq_hz:      Required (array): strictly increasing grid, Hz
    :parameter bandwidth_hz: Optional (flt): analyser resolution bandwidth; each point is averaged over it
    :parameter efficiency:   Optional (flt): overrides the model detection efficiency
    :return: NoiseSpectrum
    """
    _RequireStable(dd)
    freq = _CheckGrid(freq_hz)
    rows = {label: Selector(label) for label in selectors}
    if bandwidth_hz:
        if bandwidth_hz < 0: raise utils.InvalidArgumentError("ERROR: bandwidth_hz must be >= 0")
        offsets = np.linspace(-0.5, 0.5, n_rbw)*bandwidth_hz
        covs = np.mean([_OutputCovariances(dd, freq + o, efficiency) for o in offsets], axis=0)
    else:
        covs = _OutputCovariances(dd, freq, efficiency)
    series = {label: np.einsum('i,nij,j->n', row, covs, row) for label, row in rows.items()}
    return NoiseSpectrum(freq_hz=freq, series=series)


def QSpectrum(dd, freq_hz, efficiency=None):
    """
    Q(f) of the detected outputs and the full width at half maximum of its main feature.

    :return: (Q array, fwhm_hz) with fwhm_hz = nan if no peak is resolved
    """
    _RequireStable(dd)
    freq = _CheckGrid(freq_hz)
    q = correlations.QFromCovariance(_OutputCovariances(dd, freq, efficiency))
    return q, _PeakWidth(freq, q)


def _PeakWidth(freq, values):
    if freq.size < 3 or np.max(values) <= 1e-12: return float('nan')
    peaks, _ = find_peaks(values)
    if peaks.size == 0: return float('nan')
    main = peaks[np.argmax(values[peaks])]
    _, _, left, right = peak_widths(values, [main], rel_height=0.5)
    index = np.arange(freq.size)
    return float(np.interp(right[0], index, freq) - np.interp(left[0], index, freq))


def IntracavitySpectrum(dd, selector, freq_hz):
    """
    Spectrum c M(w) D M(w)^dagger c^T of an internal quadrature combination; integrates over f (Hz)
    to the steady-state variance c sigma c^T.

    :parameter selector: Required (array of length 2N): internal quadrature weights
    """
    _RequireStable(dd)
    freq = _CheckGrid(freq_hz)
    c = np.asarray(selector, dtype=float)
    if c.shape != (dd.A.shape[0],):
        raise utils.InvalidArgumentError("ERROR: selector must have length {}".format(dd.A.shape[0]))
    w = 2*np.pi*(freq - dd.carrier_hz)
    n = dd.A.shape[0]
    M = np.linalg.inv((1j*w[:, None, None])*np.eye(n)[None] - dd.A[None])
    v = c @ M
    return np.real(np.einsum('ni,ij,nj->n', v, dd.D, np.conj(v)))


def StochasticTrajectorySpectrum(dd, selector, duration, dt, seed, nperseg=4096):
    """
    Independent estimate of an output spectrum: Euler-Maruyama integration of the Langevin equations,
    output y_n = P dW_n/dt - K x_n, and segment-averaged periodograms.

    :parameter selector: Required (str): quadrature label of the detected outputs
    :parameter duration: Required (flt): record length, s
    :parameter dt:       Required (flt): step, at most 0.05/max|eig A|
    :parameter seed:     Required (int): RNG seed
    :parameter nperseg:  Optional (int): samples per periodogram segment
    :return: NoiseSpectrum with stderr; freq_hz is carrier + f for f >= 0
    """
    _RequireStable(dd)
    limit = 0.05/_MaxRate(dd.A)
    if dt <= 0 or dt > limit:
        warnings.warn("step dt={:.3g} outside (0, {:.3g}]; refusing to integrate".format(dt, limit), utils.ConvergenceWarning)
        raise utils.InvalidArgumentError("ERROR: dt={:.3g} too large, must be <= {:.3g}".format(dt, limit))
    slowest = float(np.min(np.abs(eigvals(dd.A).real)))
    if duration < 100/slowest:
        warnings.warn("duration {:.3g} is shorter than 100/slowest rate = {:.3g}; spectrum variance is large".format(
            duration, 100/slowest), utils.StatisticsWarning)
    n_steps = int(round(duration/dt))
    if n_steps < 2*nperseg:
        raise utils.InvalidArgumentError("ERROR: record of {} steps is shorter than two segments of {}".format(n_steps, nperseg))
    row = Selector(selector) @ DETECTION_FRAME
    rng = np.random.default_rng(seed)
    n_noise = dd.B.shape[1]
    sigma = SteadyStateCov(dd).cov
    x = np.linalg.cholesky(sigma) @ rng.standard_normal(dd.A.shape[0])
    dW = rng.standard_normal((n_steps, n_noise))*np.sqrt(dt)
    A, B = dd.A, dd.B
    out_noise = row @ dd.P
    out_state = row @ dd.K
    y = np.empty(n_steps)
    for n in range(n_steps):
        y[n] = out_noise @ dW[n]/dt - out_state @ x
        x = x + (A @ x)*dt + B @ dW[n]
    f, _, Sxx = spectrogram(y, fs=1.0/dt, window='hann', nperseg=nperseg, noverlap=0,
                            detrend=False, scaling='density', mode='psd')
    # one-sided density of a unit-variance white input is 2
    Sxx = 0.5*Sxx
    nseg = Sxx.shape[1]
    mean = Sxx.mean(axis=1)
    stderr = Sxx.std(axis=1, ddof=1)/np.sqrt(nseg)
    eta = dd.efficiency
    mean = eta*mean + (1 - eta)
    stderr = eta*stderr
    logger.debug("stochastic spectrum: %d steps, %d segments", n_steps, nseg)
    return NoiseSpectrum(freq_hz=dd.carrier_hz + f, series={selector: mean}, stderr={selector: stderr})


####################
####  FITTING   ####
####################

def QAtCarrier(model):
    """Q of the detected outputs at the carrier frequency."""
    dd = CalcDriftDiffusion(model)
    return float(correlations.QFromCovariance(SpectralCovariance(dd, model.carrier_hz).cov))


def _StableScaleLimit(model, scale_max, margin):
    def stable(scale):
        try:
            model.Scaled(scale)
        except utils.StabilityError:
            return False
        return True

    if stable(scale_max): return scale_max
    lo, hi = 0.0, scale_max
    for _ in range(80):
        mid = 0.5*(lo + hi)
        if stable(mid): lo = mid
        else: hi = mid
    logger.debug("drift instability caps the gain scale at %.6g", lo)
    return lo*(1 - margin)


def FitGain(model, target_q, margin=1e-6):
    """
    Scales g1 and g2 by a common factor so that Q at the carrier equals target_q.

    :parameter model:    Required (ThreeModeModel): NHPA model with g1 g2 > 0
    :parameter target_q: Required (flt) > 0
    :return: ThreeModeModel
    """
    if target_q <= 0: raise utils.InvalidArgumentError("ERROR: target_q must be > 0")
    if model.g1*model.g2 == 0:
        raise utils.FitError("ERROR: gain fit needs non-zero g1 and g2")
    scale_max = np.sqrt(model.gamma_spin*np.sqrt(model.kappa1*model.kappa2)/(4*model.g1*model.g2))*(1 - margin)
    scale_max = _StableScaleLimit(model, scale_max, margin)

    def residual(scale):
        return QAtCarrier(model.Scaled(scale)) - target_q

    top = residual(scale_max)
    if top <= 0:
        raise utils.FitError("ERROR: Q={:.4g} below threshold cannot reach target {:.4g}".format(top + target_q, target_q))
    scale = brentq(residual, 0.0, scale_max, xtol=1e-14, rtol=1e-12)
    fitted = model.Scaled(scale)
    logger.debug("fitted gain scale %.6g: g1=%.6g g2=%.6g rad/s", scale, fitted.g1, fitted.g2)
    return fitted


class NoiseSimulation:
    """
    Homodyne noise measurement of the two channels: steady state, output spectra and the Q feature.
    """
    def __init__(self):
        self._model = None
        self._freq_hz = None
        self._labels = Q_LABELS
        self._bandwidth_hz = None
        self._target_q = None
        self._dd = None
        self.spectrum = None
        self.steady_state = None
        self.results = None

    def SetSimulationParameters(self, **kwargs):
        """
        :parameter model:        Required (kwargs ThreeModeModel)
        :parameter freq_hz:      Required (kwargs array): analysis grid, Hz
        :parameter labels:       Optional (kwargs list): quadrature labels, default the Q set
        :parameter bandwidth_hz: Optional (kwargs flt): analyser resolution bandwidth
        :parameter target_q:     Optional (kwargs flt): fit the gain to this Q before running
        """
        self._model = kwargs.pop('model')
        self._freq_hz = kwargs.pop('freq_hz')
        if 'labels' in kwargs: self._labels = tuple(kwargs.pop('labels'))
        if 'bandwidth_hz' in kwargs: self._bandwidth_hz = kwargs.pop('bandwidth_hz')
        if 'target_q' in kwargs: self._target_q = kwargs.pop('target_q')
        if kwargs:
            raise utils.InvalidArgumentError("ERROR: unknown simulation parameters {}".format(sorted(kwargs)))
        return

    def Run(self):
        """Solves the steady state and the output spectra."""
        if self._model is None: raise utils.InvalidArgumentError("ERROR: model undefined.")
        if self._freq_hz is None: raise utils.InvalidArgumentError("ERROR: freq_hz undefined.")
        if self._target_q is not None:
            self._model = FitGain(self._model, self._target_q)
        dd = CalcDriftDiffusion(self._model)
        self.steady_state = SteadyStateCov(dd)
        self.spectrum = OutputNoiseSpectrum(dd, self._labels, self._freq_hz, bandwidth_hz=self._bandwidth_hz)
        self._dd = dd
        logger.info("noise spectra solved on %d points (%s)", len(self.spectrum.freq_hz), self._model.kind.value)
        return self.spectrum

    def Analysis(self):
        """
        Q and discord at the carrier, the Q(f) width and the coupling actually used.

        :return: dict
        """
        if self.spectrum is None: raise utils.InvalidArgumentError("ERROR: run the simulation first.")
        cov = SpectralCovariance(self._dd, self._model.carrier_hz)
        jv = correlations.JointVariancesFromCov(cov)
        discord = correlations.GaussianDiscord(cov)
        _, fwhm = QSpectrum(self._dd, self._freq_hz)
        epr_min, epr_weight = correlations.OptimalEprVariance(cov)
        self.results = {'Q': correlations.QuantumCorrelationQ(jv), 'discord_bits': discord.discord,
                        'epr_min': epr_min, 'epr_weight': epr_weight,
                        'branch': discord.branch, 'nu': [discord.nu_minus, discord.nu_plus],
                        'duan_entangled': correlations.IsDuanEntangled(jv), 'q_fwhm_hz': fwhm,
                        'kind': self._model.kind.value, 'g1': self._model.g1, 'g2': self._model.g2}
        return self.results

    @property
    def model(self):
        return self._model

    def SpectrumToCSV(self, path):
        """
        Export the output spectra into CSV format.

        :parameter path: Required (str)
        """
        if self.spectrum is None: raise utils.InvalidArgumentError("ERROR: run the simulation first.")
        return self.spectrum.ToCSV(path)
