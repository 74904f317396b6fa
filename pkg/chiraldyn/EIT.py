__author__ = "chiraldyn developers"
__year__ = "2026"

#LIBRARIES
import enum, logging, warnings
from dataclasses import dataclass
import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite import hermgauss
from scipy.special import wofz
from scipy.signal import find_peaks, peak_widths
import chiraldyn.Utils as utils
from chiraldyn.Chirality import RB87_D1_WAVELENGTH_NM

logger = logging.getLogger(__name__)

"""
Classical Doppler nonreciprocity of a Lambda-type EIT medium.

Weak-probe susceptibility of a three-level Lambda system with |k_c| = |k_p| = k. For co-propagating
beams the two-photon detuning is velocity independent; counter-propagating beams add 2 k v to it,
so thermal averaging washes out the transparency window.
"""


class Geometry(enum.Enum):
    CoPropagating = 0
    CounterPropagating = 2

    @property
    def doppler_factor(self):
        """Multiple of k v entering the two-photon detuning."""
        return self.value

    @classmethod
    def Parse(cls, value):
        if isinstance(value, cls): return value
        table = {'co': cls.CoPropagating, 'copropagating': cls.CoPropagating, 'forward': cls.CoPropagating,
                 'counter': cls.CounterPropagating, 'counterpropagating': cls.CounterPropagating, 'backward': cls.CounterPropagating}
        key = str(value).lower().replace('-', '').replace('_', '')
        if key not in table:
            raise utils.InvalidArgumentError("ERROR: unknown geometry {!r}".format(value))
        return table[key]


@dataclass(frozen=True)
class EitParams:
    """
    :parameter rabi_c:    Optional (flt) > 0: control Rabi frequency, rad/s
    :parameter gamma12:   Optional (flt) > 0: ground-state decoherence, rad/s
    :parameter gamma3:    Optional (flt) > 0: excited-state decay, rad/s
    :parameter delta_c:   Optional (flt): control detuning, rad/s
    :parameter k:         Optional (flt) > 0: wavenumber, rad/m
    :parameter u_thermal: Optional (flt) > 0: 1-D thermal velocity scale, m/s (f(v) ~ exp(-v^2/u^2))
    :parameter od:        Optional (flt) >= 0: optical depth
    """
    rabi_c: float = 2*np.pi*1.0e6
    gamma12: float = 2*np.pi*100.0
    gamma3: float = 2*np.pi*5.75e6
    delta_c: float = 0.0
    k: float = 2*np.pi/(RB87_D1_WAVELENGTH_NM*1e-9)
    u_thermal: float = 160.0
    od: float = 60.0

    def __post_init__(self):
        for name in ('rabi_c', 'gamma12', 'gamma3', 'k', 'u_thermal'):
            if not getattr(self, name) > 0:
                raise utils.InvalidArgumentError("ERROR: {} must be > 0".format(name))
        if self.od < 0: raise utils.InvalidArgumentError("ERROR: od must be >= 0")

    @classmethod
    def FromLabUnits(cls, rabi_c_hz=1.0e6, gamma12_hz=100.0, gamma3_hz=5.75e6, delta_c_hz=0.0,
                     wavelength_nm=RB87_D1_WAVELENGTH_NM, u_thermal=160.0, od=60.0):
        """Builds parameters from Hz, nm and m/s."""
        return cls(rabi_c=utils.HzToRad(rabi_c_hz), gamma12=utils.HzToRad(gamma12_hz), gamma3=utils.HzToRad(gamma3_hz),
                   delta_c=utils.HzToRad(delta_c_hz), k=2*np.pi/(wavelength_nm*1e-9), u_thermal=u_thermal, od=od)


def _Terms(delta_p, geom, p):
    c1 = 0.5*p.gamma3 - 1j*delta_p
    c2 = p.gamma12 - 1j*(delta_p - p.delta_c)
    return c1, c2, 0.5*p.gamma3


def LambdaChi(delta_p, v, geom, p):
    """
    Susceptibility of one velocity class, normalised so that Im chi = 1 on resonance without control:

        chi = i N (c2 + i s k v) / [(c1 + i k v)(c2 + i s k v) + |Omega_c|^2/4]

    with c1 = gamma3/2 - i delta_p, c2 = gamma12 - i (delta_p - delta_c), N = gamma3/2 and s = 0 (co) or 2 (counter).

    :parameter delta_p: Required (flt or array): probe detuning, rad/s
    :parameter v:       Required (flt or array): atomic velocity along the control, m/s
    :parameter geom:    Required (Geometry)
    :parameter p:       Required (EitParams)
    :return: complex
    """
    geom = Geometry.Parse(geom)
    c1, c2, N = _Terms(np.asarray(delta_p, dtype=float), geom, p)
    kv = p.k*np.asarray(v, dtype=float)
    two_photon = c2 + 1j*geom.doppler_factor*kv
    return 1j*N*two_photon/((c1 + 1j*kv)*two_photon + 0.25*p.rabi_c**2)


def _MaxwellResolvent(v0, u):
    """<1/(v - v0)> over f(v) = exp(-v^2/u^2)/(u sqrt(pi))."""
    z = v0/u
    if z.imag > 0:
        return 1j*np.sqrt(np.pi)/u*wofz(z)
    if z.imag < 0:
        return -1j*np.sqrt(np.pi)/u*np.conj(wofz(np.conj(z)))
    raise utils.NumericFailureError("ERROR: pole on the real velocity axis", diagnostics={'v0': complex(v0)})


def _FaddeevaAverage(delta_p, geom, p):
    # chi(v) = num(v)/den(v) with deg num < deg den; average pole by pole
    c1, c2, N = _Terms(delta_p, geom, p)
    s, k = geom.doppler_factor, p.k
    num = Polynomial([1j*N*c2, 1j*N*1j*s*k])
    den = Polynomial([c1*c2 + 0.25*p.rabi_c**2, 1j*k*c2 + 1j*s*k*c1, -s*k**2])
    den = den.trim()
    roots = den.roots()
    if len(roots) == 2 and abs(roots[0] - roots[1]) <= 1e-12*max(abs(roots[0]), abs(roots[1]), 1.0):
        return None
    dden = den.deriv()
    return complex(sum(num(r)/dden(r)*_MaxwellResolvent(r, p.u_thermal) for r in roots))


def _HermiteAverage(delta_p, geom, p, n_points):
    t, w = hermgauss(n_points)
    return complex(np.sum(w*LambdaChi(delta_p, p.u_thermal*t, geom, p))/np.sqrt(np.pi))


def DopplerAveragedChi(delta_p, geom, p, n_points=64, method='faddeeva'):
    """
    Maxwell average of the susceptibility over velocities with scale u_thermal.

    method='faddeeva' (default) is exact: partial fractions in v and the Faddeeva function per pole.
    method='hermite' uses Gauss-Hermite quadrature and compares against twice the nodes, warning
    with ConvergenceWarning when they differ by more than 1e-6 relative.

    :parameter delta_p:  Required (flt): probe detuning, rad/s
    :parameter n_points: Optional (int) >= 32: quadrature nodes for method='hermite'
    :return: complex
    """
    geom = Geometry.Parse(geom)
    if method == 'faddeeva':
        value = _FaddeevaAverage(float(delta_p), geom, p)
        if value is not None: return value
        logger.debug("double pole at delta_p=%.6g, using quadrature", delta_p)
        method = 'hermite'
    if method != 'hermite':
        raise utils.InvalidArgumentError("ERROR: method must be 'faddeeva' or 'hermite', got {!r}".format(method))
    if n_points < 32:
        raise utils.InvalidArgumentError("ERROR: n_points must be >= 32")
    coarse = _HermiteAverage(delta_p, geom, p, n_points)
    fine = _HermiteAverage(delta_p, geom, p, 2*n_points)
    if abs(fine - coarse) > 1e-6*max(abs(fine), 1e-300):
        warnings.warn("Gauss-Hermite average not converged at delta_p={:.6g} rad/s ({} vs {} nodes)".format(
            delta_p, n_points, 2*n_points), utils.ConvergenceWarning)
    return fine


def Transmission(delta_grid, geom, p, method='faddeeva', n_points=64):
    """
    Probe transmission T = exp(-od Im <chi>) on a grid of probe detunings (rad/s).

    :return: (array) values in (0, 1]
    """
    grid = np.atleast_1d(np.asarray(delta_grid, dtype=float))
    if grid.ndim != 1 or grid.size == 0:
        raise utils.InvalidArgumentError("ERROR: detuning grid must be a non-empty 1-D array")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise utils.InvalidArgumentError("ERROR: detuning grid must be strictly increasing")
    if p.od == 0:
        return np.ones_like(grid)
    chi = np.array([DopplerAveragedChi(d, geom, p, n_points=n_points, method=method) for d in grid])
    return np.exp(-p.od*np.maximum(chi.imag, 0.0))


def BaselineMask(delta_grid, min_abs):
    """Boolean mask of grid points with |delta| >= min_abs."""
    return np.abs(np.asarray(delta_grid, dtype=float)) >= min_abs


def EitContrast(T, baseline_window):
    """
    Transparency contrast (T_peak - T_baseline)/T_baseline, T_baseline the mean over the window.

    :parameter T:               Required (array): transmission
    :parameter baseline_window: Required (boolean array): grid points forming the baseline
    :return: (flt) >= 0
    """
    T = np.asarray(T, dtype=float)
    mask = np.asarray(baseline_window, dtype=bool)
    if mask.shape != T.shape:
        raise utils.InvalidArgumentError("ERROR: baseline window must match the transmission grid")
    if not mask.any():
        raise utils.InvalidArgumentError("ERROR: empty baseline window")
    base = float(np.mean(T[mask]))
    if base <= 0:
        raise utils.NumericFailureError("ERROR: baseline transmission is zero", diagnostics={'baseline': base})
    return max((float(np.max(T)) - base)/base, 0.0)


def EitWidth(delta_grid, T):
    """
    Full width at half maximum of the highest transmission peak, in the units of delta_grid.

    :return: (flt) nan when no peak is resolved
    """
    grid = np.asarray(delta_grid, dtype=float)
    T = np.asarray(T, dtype=float)
    peaks, _ = find_peaks(T)
    if peaks.size == 0: return float('nan')
    main = peaks[np.argmax(T[peaks])]
    _, _, left, right = peak_widths(T, [main], rel_height=0.5)
    index = np.arange(grid.size)
    return float(np.interp(right[0], index, grid) - np.interp(left[0], index, grid))


class TransmissionSimulation:
    """
    Probe transmission spectra of one channel for a beam geometry.
    """
    def __init__(self):
        self._params = EitParams()
        self._geometry = None
        self._delta_hz = None
        self._method = 'faddeeva'
        self._baseline_hz = 30.0e3
        self.transmission = None
        self.results = None

    def SetSimulationParameters(self, **kwargs):
        """
        :parameter geometry:    Required (kwargs Geometry or str)
        :parameter delta_hz:    Required (kwargs array): probe detuning grid, Hz
        :parameter params:      Optional (kwargs EitParams): default parameter set
        :parameter method:      Optional (kwargs str): 'faddeeva' (default) or 'hermite'
        :parameter baseline_hz: Optional (kwargs flt): |delta| beyond which points form the baseline
        """
        self._geometry = Geometry.Parse(kwargs.pop('geometry'))
        self._delta_hz = np.asarray(kwargs.pop('delta_hz'), dtype=float)
        if 'params' in kwargs: self._params = kwargs.pop('params')
        if 'method' in kwargs: self._method = kwargs.pop('method')
        if 'baseline_hz' in kwargs: self._baseline_hz = float(kwargs.pop('baseline_hz'))
        if kwargs:
            raise utils.InvalidArgumentError("ERROR: unknown simulation parameters {}".format(sorted(kwargs)))
        return

    def Run(self):
        if self._geometry is None: raise utils.InvalidArgumentError("ERROR: geometry undefined.")
        if self._delta_hz is None: raise utils.InvalidArgumentError("ERROR: delta_hz undefined.")
        self.transmission = Transmission(2*np.pi*self._delta_hz, self._geometry, self._params, method=self._method)
        logger.info("%s transmission on %d points", self._geometry.name, self._delta_hz.size)
        return self.transmission

    def Analysis(self):
        """
        :return: dict with contrast, peak width (Hz) and baseline transmission
        """
        if self.transmission is None: raise utils.InvalidArgumentError("ERROR: run the simulation first.")
        mask = BaselineMask(self._delta_hz, self._baseline_hz)
        self.results = {'geometry': self._geometry.name, 'contrast': EitContrast(self.transmission, mask),
                        'width_hz': EitWidth(self._delta_hz, self.transmission),
                        'baseline': float(np.mean(self.transmission[mask]))}
        return self.results

    def TransmissionToDataFrame(self):
        return pd.DataFrame({'delta_hz': self._delta_hz, 'transmission': self.transmission})

    def TransmissionToCSV(self, path):
        """
        Export `delta_hz,transmission` into CSV format.

        :parameter path: Required (str)
        """
        if self.transmission is None: raise utils.InvalidArgumentError("ERROR: run the simulation first.")
        return utils.AtomicWriteCSV(self.TransmissionToDataFrame(), path)
