__author__ = "chiraldyn developers"
__year__ = "2026"

#LIBRARIES
import json
from dataclasses import dataclass, field
import numpy as np
from scipy.linalg import block_diag
import chiraldyn.Utils as utils

"""
Covariance-matrix algebra for Gaussian states.

Conventions: shot-noise units (vacuum covariance = identity), quadrature ordering
(X1, P1, X2, P2, ...) so that the symplectic form is a direct sum of [[0, 1], [-1, 0]] blocks.
"""

ORDERING = 'XPXP'
SYMMETRY_TOL = 1e-12


def Omega(n_modes):
    """
    Symplectic form of n modes in XPXP ordering.

    :parameter n_modes: Required (int)
    :return: (2n x 2n array)
    """
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _AsCovariance(cov, check_symmetry=True):
    cov = np.array(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2 or cov.shape[0] == 0:
        raise utils.InvalidArgumentError("ERROR: covariance must be a non-empty square matrix of even size, got shape {}".format(cov.shape))
    if not np.all(np.isfinite(cov)):
        raise utils.NumericFailureError("ERROR: covariance contains NaN or infinite entries")
    if check_symmetry:
        scale = max(1.0, np.max(np.abs(cov)))
        asym = np.max(np.abs(cov - cov.T))
        if asym > SYMMETRY_TOL*scale:
            raise utils.InvalidArgumentError("ERROR: covariance is not symmetric (max |cov - cov^T| = {:.3e})".format(asym))
    return 0.5*(cov + cov.T)


@dataclass(frozen=True, eq=False)
class GaussianState:
    """
    Gaussian state of n bosonic modes.

    :parameter n_modes: Required (int): number of modes
    :parameter mean:    Required (array): first moments, length 2n
    :parameter cov:     Required (array): covariance matrix, 2n x 2n, symmetrised on construction
    """
    n_modes: int
    mean: np.ndarray = field(repr=False)
    cov: np.ndarray

    def __post_init__(self):
        if int(self.n_modes) < 1:
            raise utils.InvalidArgumentError("ERROR: n_modes must be >= 1")
        cov = _AsCovariance(self.cov)
        if cov.shape[0] != 2*self.n_modes:
            raise utils.InvalidArgumentError("ERROR: covariance of size {} does not match n_modes={}".format(cov.shape[0], self.n_modes))
        mean = np.zeros(2*self.n_modes) if self.mean is None else np.array(self.mean, dtype=float).reshape(-1)
        if mean.shape != (2*self.n_modes,):
            raise utils.InvalidArgumentError("ERROR: mean must have length {}".format(2*self.n_modes))
        cov.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, 'n_modes', int(self.n_modes))
        object.__setattr__(self, 'cov', cov)
        object.__setattr__(self, 'mean', mean)

    @classmethod
    def FromCovariance(cls, cov, mean=None):
        cov = np.asarray(cov, dtype=float)
        return cls(n_modes=cov.shape[0]//2, mean=mean, cov=cov)


@dataclass(frozen=True)
class DetInvariants:
    """Local symplectic invariants of a two-mode covariance: det(alpha), det(beta), det(gamma), det(sigma)."""
    I1: float
    I2: float
    I3: float
    I4: float


def VacuumState(n_modes):
    """
    Vacuum of n modes in shot-noise units.

    :parameter n_modes: Required (int) >= 1
    :return: GaussianState
    """
    if int(n_modes) != n_modes or n_modes < 1:
        raise utils.InvalidArgumentError("ERROR: n_modes must be a positive integer, got {}".format(n_modes))
    return GaussianState(n_modes=int(n_modes), mean=None, cov=np.eye(2*int(n_modes)))


def ThermalState(n_modes, nbar):
    """
    Thermal state with mean occupation nbar in every mode.

    :parameter n_modes: Required (int)
    :parameter nbar:    Required (flt) >= 0
    """
    if nbar < 0: raise utils.InvalidArgumentError("ERROR: nbar must be >= 0")
    vac = VacuumState(n_modes)
    return GaussianState(n_modes=vac.n_modes, mean=None, cov=(2*nbar + 1)*np.eye(2*vac.n_modes))


def TwoModeSqueezedState(r):
    """
    Two-mode squeezed vacuum: alpha = beta = cosh(2r) I, gamma = sinh(2r) diag(1, -1).

    :parameter r: Required (flt): squeezing parameter
    :return: GaussianState
    """
    c, s = np.cosh(2*r), np.sinh(2*r)
    z = np.diag([1.0, -1.0])
    cov = np.block([[c*np.eye(2), s*z], [s*z, c*np.eye(2)]])
    return GaussianState(n_modes=2, mean=None, cov=cov)


def SymplecticEigenvalues(cov):
    """
    Symplectic eigenvalues |eig(i Omega cov)|, one per mode, in descending order.

    :parameter cov: Required (2n x 2n array)
    :return: (array) length n
    """
    if isinstance(cov, GaussianState): cov = cov.cov
    cov = _AsCovariance(cov)
    n = cov.shape[0]//2
    if np.linalg.matrix_rank(cov) < cov.shape[0]:
        raise utils.NumericFailureError("ERROR: covariance is singular", diagnostics={'rank': int(np.linalg.matrix_rank(cov))})
    eig = np.abs(np.linalg.eigvals(1j*Omega(n) @ cov))
    eig = np.sort(eig)[::-1]
    # eigenvalues come in +/- pairs
    return eig[::2].copy()


def IsPhysical(state, tol=1e-9):
    """
    Heisenberg bound: true iff cov is positive definite and every symplectic eigenvalue is >= 1 - tol.

    :parameter state: Required (GaussianState or array)
    :parameter tol:   Optional (flt) >= 0: default 1e-9
    :return: (bool)
    """
    if tol < 0: raise utils.InvalidArgumentError("ERROR: tol must be >= 0")
    cov = state.cov if isinstance(state, GaussianState) else _AsCovariance(state)
    if np.linalg.eigvalsh(cov).min() <= 0: return False
    # floating-point floor so that exact states pass with tol = 0
    floor = 64*np.finfo(float).eps*max(1.0, np.linalg.norm(cov, 2))
    return bool(SymplecticEigenvalues(cov).min() >= 1 - tol - floor)


def CalcDetInvariants(cov):
    """
    Determinant invariants of a two-mode covariance sigma = [[alpha, gamma], [gamma^T, beta]].

    :parameter cov: Required (4 x 4 array or GaussianState)
    :return: DetInvariants
    """
    if isinstance(cov, GaussianState): cov = cov.cov
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (4, 4):
        raise utils.InvalidArgumentError("ERROR: det invariants need a 4 x 4 two-mode covariance, got shape {}".format(cov.shape))
    cov = _AsCovariance(cov)
    return DetInvariants(I1=float(np.linalg.det(cov[:2, :2])),
                         I2=float(np.linalg.det(cov[2:, 2:])),
                         I3=float(np.linalg.det(cov[:2, 2:])),
                         I4=float(np.linalg.det(cov)))


def PartialTrace(state, keep):
    """
    Reduced state on the modes listed in keep (0-based, order preserved).

    :parameter state: Required (GaussianState)
    :parameter keep:  Required (list of int)
    """
    keep = list(keep)
    if not keep or any(m < 0 or m >= state.n_modes for m in keep):
        raise utils.InvalidArgumentError("ERROR: keep must list modes in [0, {})".format(state.n_modes))
    idx = np.ravel([[2*m, 2*m + 1] for m in keep])
    return GaussianState(n_modes=len(keep), mean=state.mean[idx], cov=state.cov[np.ix_(idx, idx)])


def PhaseRotation(theta):
    """Single-mode phase rotation acting on (X, P)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def RandomSymplectic(rng, max_squeeze=1.0):
    """
    Random single-mode symplectic map R(t1) diag(e^s, e^-s) R(t2).

    :parameter rng:         Required (numpy Generator)
    :parameter max_squeeze: Optional (flt): bound on |s|
    """
    t1, t2 = rng.uniform(0, 2*np.pi, size=2)
    s = rng.uniform(-max_squeeze, max_squeeze)
    return PhaseRotation(t1) @ np.diag([np.exp(s), np.exp(-s)]) @ PhaseRotation(t2)


def LocalSymplectic(*blocks):
    """Direct sum of single-mode symplectic blocks."""
    return block_diag(*blocks)


def ApplySymplectic(state, S):
    """
    Transforms a state by a symplectic matrix: mean -> S mean, cov -> S cov S^T.
    """
    S = np.asarray(S, dtype=float)
    cov = S @ state.cov @ S.T
    return GaussianState(n_modes=state.n_modes, mean=S @ state.mean, cov=0.5*(cov + cov.T))


def CovarianceToDict(state):
    """External JSON representation {"n_modes", "ordering", "cov"}."""
    return {'n_modes': state.n_modes, 'ordering': ORDERING, 'cov': np.asarray(state.cov).tolist()}


def CovarianceFromDict(data):
    """
    Builds a GaussianState from the external JSON representation.

    :parameter data: Required (dict): keys "cov", optional "n_modes", "ordering"
    """
    if 'cov' not in data: raise utils.InvalidArgumentError("ERROR: covariance file has no 'cov' entry")
    ordering = data.get('ordering', ORDERING)
    if ordering != ORDERING:
        raise utils.InvalidArgumentError("ERROR: unsupported quadrature ordering {!r}; expected {!r}".format(ordering, ORDERING))
    cov = np.array(data['cov'], dtype=float)
    state = GaussianState.FromCovariance(cov)
    if 'n_modes' in data and int(data['n_modes']) != state.n_modes:
        raise utils.InvalidArgumentError("ERROR: n_modes={} does not match a {}x{} covariance".format(data['n_modes'], *cov.shape))
    return state


def SaveCovariance(state, path):
    """Writes a covariance JSON file atomically."""
    return utils.AtomicWriteJSON(CovarianceToDict(state), path)


def LoadCovariance(path):
    """Reads a covariance JSON file."""
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as err:
        raise utils.OutputError("ERROR: cannot read {}: {}".format(path, err)) from err
    except json.JSONDecodeError as err:
        raise utils.InvalidArgumentError("ERROR: {} is not valid JSON (line {}, column {})".format(path, err.lineno, err.colno)) from err
    return CovarianceFromDict(data)
