__author__ = "chiraldyn developers"
__year__ = "2026"

#LIBRARIES
import logging, warnings
import dataclasses
from dataclasses import dataclass
from typing import Optional
import numpy as np
import pandas as pd
from scipy.special import jv
from scipy.optimize import curve_fit
from scipy.signal import find_peaks
import chiraldyn.Utils as utils
import chiraldyn.Dynamics as dynamics
import chiraldyn.Correlations as correlations

logger = logging.getLogger(__name__)

"""
Periodically driven Zeeman ladder: quasi-energies, Bessel sideband weights, multicolor spectra
built from independent per-sideband couplings, and Bessel calibration fits.
"""

N_MAX_LIMIT = 10
DEFAULT_LINEWIDTH_HZ = 100.0


@dataclass(frozen=True)
class FloquetDrive:
    """
    Oscillating bias field B0 + B1 cos(w1 t).

    The modulation index comes from, in order of precedence: `index`, `k_u / nu1_hz`,
    or pi gyromag b1 / w1.

    :parameter nu1_hz:         Required (flt) > 0: modulation frequency, Hz
    :parameter b1:             Optional (flt) >= 0: oscillating field amplitude, field units
    :parameter b0:             Optional (flt): static field, field units
    :parameter gyromag:        Optional (flt) > 0: Hz per field unit
    :parameter k_u:            Optional (flt) >= 0: drive-depth parameter, Hz
    :parameter index:          Optional (flt): modulation index given directly
    :parameter n_max:          Optional (int) in [0, 10]: sideband truncation
    :parameter stark_shift_hz: Optional (flt): AC Stark offset added to every sideband centre
    """
    nu1_hz: float
    b1: float = 0.0
    b0: float = 0.0
    gyromag: float = 7.0e9
    k_u: Optional[float] = None
    index: Optional[float] = None
    n_max: int = 3
    stark_shift_hz: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.nu1_hz) or self.nu1_hz <= 0:
            raise utils.InvalidArgumentError("ERROR: nu1_hz must be > 0")
        if self.b1 < 0: raise utils.InvalidArgumentError("ERROR: b1 must be >= 0")
        if self.gyromag <= 0: raise utils.InvalidArgumentError("ERROR: gyromag must be > 0")
        if self.k_u is not None and self.k_u < 0: raise utils.InvalidArgumentError("ERROR: k_u must be >= 0")
        if int(self.n_max) != self.n_max or not 0 <= self.n_max <= N_MAX_LIMIT:
            raise utils.InvalidArgumentError("ERROR: n_max must be an integer in [0, {}]".format(N_MAX_LIMIT))
        object.__setattr__(self, 'n_max', int(self.n_max))
        if not np.isfinite(ModulationIndex(self)):
            raise utils.InvalidArgumentError("ERROR: modulation index is not finite")

    @property
    def omega1(self):
        return utils.HzToRad(self.nu1_hz)


def QuasiEnergy(sign, n, omega0, omega1):
    """
    Ladder quasi-energy E(+-, n) = +-omega0 + n omega1.

    :parameter sign: Required: +1/-1 or '+'/'-'
    """
    s = {'+': 1, '-': -1}.get(sign, sign)
    if s not in (1, -1):
        raise utils.InvalidArgumentError("ERROR: sign must be +1 or -1, got {!r}".format(sign))
    return s*omega0 + n*omega1


def ModulationIndex(drive):
    """
    Modulation index of the drive.

    :parameter drive: Required (FloquetDrive)
    :return: (flt)
    """
    if drive.index is not None: return float(drive.index)
    if drive.k_u is not None: return float(drive.k_u)/drive.nu1_hz
    if drive.omega1 == 0: raise utils.InvalidArgumentError("ERROR: omega1 = 0")
    return float(np.pi*drive.gyromag*drive.b1/drive.omega1)


def SidebandWeight(n, index, n_max=N_MAX_LIMIT):
    """
    Amplitude J_n(index) of sideband n.

    :parameter n:     Required (int)
    :parameter index: Required (flt): modulation index
    :parameter n_max: Optional (int): truncation; |n| > n_max raises TruncationError
    """
    if int(n) != n:
        raise utils.InvalidArgumentError("ERROR: sideband order must be an integer, got {}".format(n))
    if abs(n) > n_max:
        raise utils.TruncationError("ERROR: sideband {} outside truncation n_max={}".format(n, n_max))
    return float(jv(int(n), index))


def SidebandModels(base, drive):
    """
    Per-sideband effective models: coupling scaled by |J_n(index)|, centred at carrier + n nu1 + Stark shift.

    :return: list of (n, weight, ThreeModeModel) in increasing n
    """
    index = ModulationIndex(drive)
    models = []
    for n in range(-drive.n_max, drive.n_max + 1):
        weight = SidebandWeight(n, index, drive.n_max)
        centre = base.carrier_hz + n*drive.nu1_hz + drive.stark_shift_hz
        if centre <= 0:
            raise utils.InvalidArgumentError("ERROR: sideband {} centre {:.6g} Hz is not positive".format(n, centre))
        # the sign of J_n is a spin phase and drops out of every noise power
        models.append((n, weight, dataclasses.replace(base.Scaled(abs(weight)), carrier_hz=centre)))
    return models


def _CheckDrive(base, drive, freq):
    linewidth = base.gamma_spin/(2*np.pi)
    if drive.nu1_hz < 3*linewidth:
        warnings.warn("nu1={:.4g} Hz is below 3 x linewidth ({:.4g} Hz); sideband superposition is unreliable".format(
            drive.nu1_hz, 3*linewidth), utils.SidebandOverlapWarning)
    span = (drive.n_max + 1)*drive.nu1_hz
    centre = base.carrier_hz + drive.stark_shift_hz
    if freq[0] > centre - span or freq[-1] < centre + span:
        raise utils.InvalidArgumentError("ERROR: grid must span carrier +- {:.6g} Hz".format(span))


def MulticolorSpectrum(base, drive, selectors=dynamics.Q_LABELS, freq_hz=None):
    """
    Noise spectra of the modulated system as 1 + sum_n (S_n - 1) over independent sidebands.

    :parameter base:      Required (ThreeModeModel): undriven model, its kind applies to every sideband
    :parameter drive:     Required (FloquetDrive)
    :parameter selectors: Optional (list of str): quadrature labels
    :parameter freq_hz:   Required (array): grid spanning carrier +- (n_max + 1) nu1
    :return: NoiseSpectrum
    """
    freq = dynamics._CheckGrid(freq_hz)
    _CheckDrive(base, drive, freq)
    total = {label: np.ones_like(freq) for label in selectors}
    for n, weight, model in SidebandModels(base, drive):
        if weight == 0: continue
        spectrum = dynamics.OutputNoiseSpectrum(dynamics.CalcDriftDiffusion(model), selectors, freq)
        for label in selectors:
            total[label] += spectrum.series[label] - 1
    return dynamics.NoiseSpectrum(freq_hz=freq, series=total)


def MulticolorQ(base, drive, freq_hz, rel_threshold=0.1):
    """
    Q(f) summed over sidebands and the grid positions of its resolved peaks.

    :parameter rel_threshold: Optional (flt): peaks below this fraction of the maximum are ignored
    :return: (Q array, peak frequencies in Hz)
    """
    freq = dynamics._CheckGrid(freq_hz)
    _CheckDrive(base, drive, freq)
    q = np.zeros_like(freq)
    for n, weight, model in SidebandModels(base, drive):
        if weight == 0: continue
        dd = dynamics.CalcDriftDiffusion(model)
        q += correlations.QFromCovariance(dynamics._OutputCovariances(dd, freq))
    qmax = float(np.max(q)) if q.size else 0.0
    if qmax <= 1e-12:
        return q, np.array([])
    peaks, _ = find_peaks(q, height=rel_threshold*qmax)
    return q, freq[peaks]


def BesselModel(nu1_hz, a, k_u, order):
    """a J_order(k_u / nu1)."""
    return a*jv(order, k_u/np.asarray(nu1_hz, dtype=float))


@dataclass(frozen=True)
class BesselFitResult:
    a: float
    k_u: float
    residual_rms: float
    order: int

    def ToDict(self):
        return dataclasses.asdict(self)


def _ProjectedAmplitude(nu, y, k, order):
    basis = jv(order, k/nu)
    norm = basis @ basis
    if norm == 0: return 0.0, np.inf
    a = (basis @ y)/norm
    return a, float(np.sum((y - a*basis)**2))


def BesselFit(nu1_values, amplitudes, order, seed=0, n_starts=8):
    """
    Least-squares fit of amplitudes to a J_order(k_u / nu1) over (a, k_u).

    Starts for k_u come from a log grid plus seeded random draws; a is projected out for each start
    and the best candidate is refined jointly.

    :parameter nu1_values: Required (list): modulation frequencies, Hz, > 0
    :parameter amplitudes: Required (list): measured peak amplitudes
    :parameter order:      Required (int): 0 or 1
    :parameter seed:       Optional (int): multi-start seed
    :return: BesselFitResult
    """
    nu = np.asarray(nu1_values, dtype=float)
    y = np.asarray(amplitudes, dtype=float)
    if order not in (0, 1):
        raise utils.InvalidArgumentError("ERROR: order must be 0 or 1, got {}".format(order))
    if nu.shape != y.shape or nu.ndim != 1:
        raise utils.InvalidArgumentError("ERROR: nu1_values and amplitudes must be 1-D and of equal length")
    if nu.size < 5:
        raise utils.InvalidArgumentError("ERROR: Bessel fit needs at least 5 points, got {}".format(nu.size))
    if np.any(nu <= 0) or not np.all(np.isfinite(nu)) or not np.all(np.isfinite(y)):
        raise utils.InvalidArgumentError("ERROR: nu1 values must be finite and > 0")
    if np.ptp(y) == 0:
        raise utils.FitError("ERROR: degenerate data, all amplitudes are equal")

    rng = np.random.default_rng(seed)
    lo, hi = 0.05*nu.min(), 20.0*nu.max()
    candidates = np.concatenate([np.geomspace(lo, hi, 400), np.exp(rng.uniform(np.log(lo), np.log(hi), n_starts))])
    scored = sorted(((_ProjectedAmplitude(nu, y, k, order)[1], k) for k in candidates))
    best = None
    for _, k0 in scored[:n_starts]:
        a0, _ = _ProjectedAmplitude(nu, y, k0, order)
        try:
            popt, _ = curve_fit(lambda x, a, k: BesselModel(x, a, k, order), nu, y, p0=[a0, k0],
                                xtol=1e-14, ftol=1e-14, gtol=1e-14, maxfev=20000)
        except (RuntimeError, ValueError) as err:
            logger.debug("Bessel refinement from k0=%.4g failed: %s", k0, err)
            continue
        rss = float(np.sum((y - BesselModel(nu, popt[0], popt[1], order))**2))
        if best is None or rss < best[0]:
            best = (rss, popt)
    if best is None:
        raise utils.FitError("ERROR: Bessel fit did not converge from any start")
    rss, (a, k_u) = best
    if k_u < 0:
        # J_0 is even; J_1 is odd, so the sign moves into a
        k_u, a = -k_u, (a if order == 0 else -a)
    return BesselFitResult(a=float(a), k_u=float(k_u), residual_rms=float(np.sqrt(rss/nu.size)), order=order)


def BesselFitFromCSV(path, order, seed=0):
    """Fits a two-column CSV table (nu1_hz, amplitude)."""
    table = utils.ReadTable(path, ['nu1_hz', 'amplitude'])
    return BesselFit(table['nu1_hz'].to_numpy(), table['amplitude'].to_numpy(), order, seed=seed)


def CrossSidebandWeight(n1, n2, delta0_hz, drive, tol_hz=DEFAULT_LINEWIDTH_HZ):
    """
    Coupling between spin waves of sidebands n1 and n2 for a control-frequency difference delta0.

    :return: (resonant, weight) with resonant iff |delta0 - (n1 - n2) nu1| <= tol_hz and weight J_n1 J_n2
    """
    index = ModulationIndex(drive)
    w1 = SidebandWeight(n1, index, drive.n_max)
    w2 = SidebandWeight(n2, index, drive.n_max)
    resonant = abs(delta0_hz - (n1 - n2)*drive.nu1_hz) <= tol_hz
    return bool(resonant), float(w1*w2)


def CrossSidebandTable(drive, delta0_hz, tol_hz=DEFAULT_LINEWIDTH_HZ):
    """
    All (n1, n2) pairs within the truncation with their resonance flag and weight.

    :return: pandas.DataFrame with columns n1, n2, order, resonant, weight
    """
    rows = []
    for n1 in range(-drive.n_max, drive.n_max + 1):
        for n2 in range(-drive.n_max, drive.n_max + 1):
            resonant, weight = CrossSidebandWeight(n1, n2, delta0_hz, drive, tol_hz)
            rows.append({'n1': n1, 'n2': n2, 'order': n1 - n2, 'resonant': resonant, 'weight': weight})
    return pd.DataFrame(rows, columns=['n1', 'n2', 'order', 'resonant', 'weight'])


class MulticolorSimulation:
    """
    Multicolor noise measurement under Floquet modulation of the bias field.
    """
    def __init__(self):
        self._model = None
        self._drive = None
        self._freq_hz = None
        self._labels = dynamics.Q_LABELS
        self.spectrum = None
        self.q = None
        self.results = None

    def SetSimulationParameters(self, **kwargs):
        """
        :parameter model:   Required (kwargs ThreeModeModel): base single-color model
        :parameter drive:   Required (kwargs FloquetDrive)
        :parameter freq_hz: Required (kwargs array): grid spanning the sidebands, Hz
        :parameter labels:  Optional (kwargs list): quadrature labels
        """
        self._model = kwargs.pop('model')
        self._drive = kwargs.pop('drive')
        self._freq_hz = kwargs.pop('freq_hz')
        if 'labels' in kwargs: self._labels = tuple(kwargs.pop('labels'))
        if kwargs:
            raise utils.InvalidArgumentError("ERROR: unknown simulation parameters {}".format(sorted(kwargs)))
        return

    def Run(self):
        if self._model is None: raise utils.InvalidArgumentError("ERROR: model undefined.")
        if self._drive is None: raise utils.InvalidArgumentError("ERROR: drive undefined.")
        self.spectrum = MulticolorSpectrum(self._model, self._drive, self._labels, self._freq_hz)
        logger.info("multicolor spectra over %d sidebands", 2*self._drive.n_max + 1)
        return self.spectrum

    def Analysis(self, rel_threshold=0.1):
        """
        :return: dict with the modulation index, carrier weight J_0, Q maximum and resolved peak positions
        """
        if self.spectrum is None: raise utils.InvalidArgumentError("ERROR: run the simulation first.")
        index = ModulationIndex(self._drive)
        self.q, peaks = MulticolorQ(self._model, self._drive, self._freq_hz, rel_threshold)
        self.results = {'index': index, 'carrier_weight': SidebandWeight(0, index), 'q_max': float(np.max(self.q)),
                        'peaks_hz': [float(p) for p in peaks],
                        'peak_orders': [int(round((p - self._model.carrier_hz - self._drive.stark_shift_hz)/self._drive.nu1_hz)) for p in peaks]}
        return self.results

    def SpectrumToCSV(self, path):
        """
        Export the multicolor spectra (and Q when analysed) into CSV format.

        :parameter path: Required (str)
        """
        if self.spectrum is None: raise utils.InvalidArgumentError("ERROR: run the simulation first.")
        df = self.spectrum.ToDataFrame()
        if self.q is not None: df['Q'] = self.q
        return utils.AtomicWriteCSV(df, path)
