__author__ = "chiraldyn developers"
__year__ = "2026"

#LIBRARIES
import logging
from dataclasses import dataclass
from typing import Optional
import numpy as np
from scipy.special import xlogy
from scipy.optimize import minimize, minimize_scalar
import chiraldyn.Utils as utils
import chiraldyn.Gaussian as gaussian

logger = logging.getLogger(__name__)

"""
Bipartite correlation metrics of two-mode Gaussian states in shot-noise units:
the Q witness, homodyne covariance reconstruction, Stokes-to-quadrature mapping and
Gaussian quantum discord (closed form and brute-force measurement minimisation).
"""

ENTROPY_TOL = 1e-9
DISCORD_CLAMP = 1e-10
BRANCH_GENERAL = 'general'
BRANCH_HOMODYNE = 'homodyne'
BRANCH_TOL = 1e-12
DUAN_TOL = 1e-9


@dataclass(frozen=True)
class JointVariances:
    """
    Single-channel and joint homodyne variances, shot-noise units.

    :parameter var_xminus: Required (flt): Var[(X1 - X2)/sqrt(2)]
    :parameter var_pplus:  Required (flt): Var[(P1 + P2)/sqrt(2)]
    :parameter var_xplus:  Optional (flt): Var[(X1 + X2)/sqrt(2)]
    :parameter var_pminus: Optional (flt): Var[(P1 - P2)/sqrt(2)]
    """
    var_x1: float
    var_x2: float
    var_p1: float
    var_p2: float
    var_xminus: float
    var_pplus: float
    var_xplus: Optional[float] = None
    var_pminus: Optional[float] = None

    def __post_init__(self):
        for name in ('var_x1', 'var_x2', 'var_p1', 'var_p2', 'var_xminus', 'var_pplus', 'var_xplus', 'var_pminus'):
            value = getattr(self, name)
            if value is None: continue
            if not np.isfinite(value) or value <= 0:
                raise utils.InvalidArgumentError("ERROR: {} must be a positive number, got {}".format(name, value))
        # |cov(X1, X2)| <= sqrt(Var X1 Var X2)
        slack = 1e-9*max(1.0, self.var_x1 + self.var_x2)
        if abs(self.var_x1 + self.var_x2 - 2*self.var_xminus) > 2*np.sqrt(self.var_x1*self.var_x2) + slack:
            raise utils.DataInconsistencyError("ERROR: var_xminus={} is inconsistent with var_x1={}, var_x2={}".format(self.var_xminus, self.var_x1, self.var_x2))
        slack = 1e-9*max(1.0, self.var_p1 + self.var_p2)
        if abs(2*self.var_pplus - self.var_p1 - self.var_p2) > 2*np.sqrt(self.var_p1*self.var_p2) + slack:
            raise utils.DataInconsistencyError("ERROR: var_pplus={} is inconsistent with var_p1={}, var_p2={}".format(self.var_pplus, self.var_p1, self.var_p2))


@dataclass(frozen=True)
class DiscordResult:
    """
    Gaussian quantum discord in bits with the quantities it was assembled from.

    :parameter branch: 'general' when the optimal Gaussian measurement has finite squeezing,
                       'homodyne' when it is a quadrature measurement
    """
    discord: float
    nu_minus: float
    nu_plus: float
    e_min: float
    branch: str
    measured: str = 'B'

    def ToDict(self):
        return {'discord_bits': self.discord, 'branch': self.branch, 'nu': [self.nu_minus, self.nu_plus],
                'e_min': self.e_min, 'measured': self.measured}


def QuantumCorrelationQ(jv):
    """
    Bipartite correlation witness Q = B - A with
    A = Var[(X1 - X2)/sqrt2] + Var[(P1 + P2)/sqrt2] and B = mean single-channel X and P variances summed.

    :parameter jv: Required (JointVariances)
    :return: (flt) Q > 0 flags bipartite quantum correlation
    """
    A = jv.var_xminus + jv.var_pplus
    B = 0.5*(jv.var_x1 + jv.var_x2) + 0.5*(jv.var_p1 + jv.var_p2)
    return float(B - A)


def QFromCovariance(cov):
    """
    Q read directly from covariance entries, vectorised over leading axes: Q = cov[X1,X2] - cov[P1,P2].

    :parameter cov: Required (array of shape (..., 4, 4))
    :return: (flt or array)
    """
    cov = np.asarray(cov, dtype=float)
    return cov[..., 0, 2] - cov[..., 1, 3]


def OptimalEprVariance(cov):
    """
    Smallest normalised EPR variance over the weight w of the second channel:

        min_w [Var(X1 - w X2) + Var(P1 + w P2)] / [2 (1 + w^2)]

    Vacuum gives 1; values below 1 flag two-mode squeezing that the unit-weight combinations can miss.

    :parameter cov: Required (4 x 4 array or GaussianState)
    :return: (variance, weight); weight is inf when the optimum discards the first channel
    """
    state = cov if isinstance(cov, gaussian.GaussianState) else gaussian.GaussianState.FromCovariance(cov)
    if state.n_modes != 2:
        raise utils.InvalidArgumentError("ERROR: EPR variance needs a two-mode covariance")
    c = state.cov
    M = 0.5*np.array([[c[0, 0] + c[1, 1], c[0, 2] - c[1, 3]],
                      [c[0, 2] - c[1, 3], c[2, 2] + c[3, 3]]])
    values, vectors = np.linalg.eigh(M)
    v = vectors[:, 0]
    weight = float(-v[1]/v[0]) if abs(v[0]) > 1e-12 else float('inf')
    return float(values[0]), weight


def JointVariancesFromCov(cov, tol=1e-9):
    """
    Linear readout of the homodyne variances implied by a two-mode covariance.

    :parameter cov: Required (4 x 4 array or GaussianState)
    :parameter tol: Optional (flt): physicality tolerance
    :return: JointVariances
    """
    state = cov if isinstance(cov, gaussian.GaussianState) else gaussian.GaussianState.FromCovariance(cov)
    if state.n_modes != 2:
        raise utils.InvalidArgumentError("ERROR: joint variances need a two-mode covariance")
    if not gaussian.IsPhysical(state, tol=tol):
        raise utils.InvalidArgumentError("ERROR: covariance violates the uncertainty principle")
    c = state.cov
    return JointVariances(var_x1=c[0, 0], var_x2=c[2, 2], var_p1=c[1, 1], var_p2=c[3, 3],
                          var_xminus=0.5*(c[0, 0] + c[2, 2] - 2*c[0, 2]),
                          var_pplus=0.5*(c[1, 1] + c[3, 3] + 2*c[1, 3]),
                          var_xplus=0.5*(c[0, 0] + c[2, 2] + 2*c[0, 2]),
                          var_pminus=0.5*(c[1, 1] + c[3, 3] - 2*c[1, 3]))


def CovarianceFromHomodyne(varXA, varXB, varXsum, varPA, varPB, varPdiff, tol=1e-9):
    """
    Cross-covariances from single and combined homodyne variances.

    :parameter varXsum:  Required (flt): Var(X_A + X_B), no 1/sqrt(2)
    :parameter varPdiff: Required (flt): Var(P_A - P_B), no 1/sqrt(2)
    :return: (covXX, covPP)
    """
    values = dict(varXA=varXA, varXB=varXB, varXsum=varXsum, varPA=varPA, varPB=varPB, varPdiff=varPdiff)
    for name, value in values.items():
        if not np.isfinite(value) or value <= 0:
            raise utils.InvalidArgumentError("ERROR: {} must be a positive number, got {}".format(name, value))
    covXX = 0.5*(varXsum - varXA - varXB)
    covPP = -0.5*(varPdiff - varPA - varPB)
    if abs(covXX) > np.sqrt(varXA*varXB)*(1 + tol):
        raise utils.DataInconsistencyError("ERROR: |covXX|={:.6g} exceeds sqrt(varXA varXB)={:.6g}".format(abs(covXX), np.sqrt(varXA*varXB)))
    if abs(covPP) > np.sqrt(varPA*varPB)*(1 + tol):
        raise utils.DataInconsistencyError("ERROR: |covPP|={:.6g} exceeds sqrt(varPA varPB)={:.6g}".format(abs(covPP), np.sqrt(varPA*varPB)))
    return float(covXX), float(covPP)


def QuadraturesFromStokes(Sx, Sy, Sz, channel, shot_noise_units=False):
    """
    Maps polarisation homodyne Stokes readings onto field quadratures, the control beam acting as
    local oscillator. The two channels see opposite S_z signs, so P flips sign on channel 2.

    :parameter channel:          Required (int): 1 or 2
    :parameter shot_noise_units: Optional (bool): rescale by sqrt(2) from the [X, P] = i convention
    :return: (X, P)
    """
    if channel not in (1, 2):
        raise utils.InvalidArgumentError("ERROR: channel must be 1 or 2, got {}".format(channel))
    if Sz == 0:
        raise utils.UndefinedLocalOscillatorError("ERROR: S_z = 0, local oscillator undefined.")
    norm = np.sqrt(abs(Sz))
    X = -Sx/norm
    P = (-Sy if channel == 1 else Sy)/norm
    if shot_noise_units:
        X, P = np.sqrt(2)*X, np.sqrt(2)*P
    return X, P


def EntropyH(x):
    """
    Entropy function h(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2), h(1) = 0.

    :parameter x: Required (flt or array) >= 1
    :return: (flt or array) bits
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 1 - ENTROPY_TOL):
        raise utils.InvalidArgumentError("ERROR: entropy argument must be >= 1, got {}".format(x))
    arr = np.maximum(arr, 1.0)
    plus, minus = 0.5*(arr + 1), 0.5*(arr - 1)
    value = (xlogy(plus, plus) - xlogy(minus, minus))/np.log(2)
    return float(value) if np.ndim(value) == 0 else value


def _SwapModes(cov):
    perm = [2, 3, 0, 1]
    return np.asarray(cov)[np.ix_(perm, perm)]


def _NuPair(cov, inv):
    delta = inv.I1 + inv.I2 + 2*inv.I3
    rad = delta**2 - 4*inv.I4
    if rad < -1e-10*max(1.0, delta**2):
        raise utils.NumericFailureError("ERROR: negative radicand in symplectic eigenvalues", diagnostics={'radicand': rad})
    # closed form is ill-conditioned for pure states
    nu_plus, nu_minus = gaussian.SymplecticEigenvalues(cov)
    return float(nu_minus), float(nu_plus)


def _EminGeneral(inv, printed=False):
    I1, I2, I3, I4 = inv.I1, inv.I2, inv.I3, inv.I4
    k = (I4 - 1) if printed else (I4 - I1)
    rad = I3**2 + (I2 - 1)*k
    if rad < 0:
        if rad < -1e-10*max(1.0, I3**2): return np.nan
        rad = 0.0
    return (2*I3**2 + (I2 - 1)*k + 2*abs(I3)*np.sqrt(rad))/(I2 - 1)**2


def _EminHomodyne(inv):
    I1, I2, I3, I4 = inv.I1, inv.I2, inv.I3, inv.I4
    rad = I3**4 + (I4 - I1*I2)**2 - 2*I3**2*(I4 + I1*I2)
    if rad < 0:
        if rad < -1e-10*max(1.0, (I1*I2)**2): return np.nan
        rad = 0.0
    return (I1*I2 - I3**2 + I4 - np.sqrt(rad))/(2*I2)


def GeneralBranchHolds(inv, printed=False):
    """
    Branch test for the minimal conditional determinant. The printed variant uses
    I3^2 (I2 + 1)(I4 + 1) on the right-hand side and is kept for diagnostics only.
    """
    lhs = (inv.I4 - inv.I1*inv.I2)**2
    if printed:
        rhs = inv.I3**2*(inv.I2 + 1)*(inv.I4 + 1)
    else:
        rhs = (1 + inv.I2)*inv.I3**2*(inv.I1 + inv.I4)
    scale = max(1.0, abs(lhs), abs(rhs))
    return bool(lhs <= rhs + BRANCH_TOL*scale)


def MinimalConditionalDeterminant(inv, printed=False, pure_tol=1e-10):
    """
    Minimum over Gaussian measurements on B of det of the conditional covariance of A.

    :parameter inv:      Required (DetInvariants)
    :parameter printed:  Optional (bool): use the printed (I2 - 1)(I4 - 1) variant
    :parameter pure_tol: Optional (flt): I2 - 1 below which B is treated as pure
    :return: (e_min, branch)
    """
    # pure marginal on B: product state, conditioning changes nothing
    if inv.I2 - 1 <= pure_tol:
        return float(inv.I1), BRANCH_GENERAL
    first = GeneralBranchHolds(inv, printed=printed)
    order = [(BRANCH_GENERAL, lambda: _EminGeneral(inv, printed)), (BRANCH_HOMODYNE, lambda: _EminHomodyne(inv))]
    if not first: order.reverse()
    for branch, compute in order:
        value = compute()
        if np.isfinite(value):
            if branch != order[0][0]:
                logger.debug("discord branch %s singular, fell back to %s", order[0][0], branch)
            return float(value), branch
    raise utils.NumericFailureError("ERROR: both conditional-determinant branches are singular",
                                    diagnostics={'I1': inv.I1, 'I2': inv.I2, 'I3': inv.I3, 'I4': inv.I4})


def _PrepareTwoMode(cov, measured):
    if measured not in ('A', 'B'):
        raise utils.InvalidArgumentError("ERROR: measured must be 'A' or 'B', got {!r}".format(measured))
    state = cov if isinstance(cov, gaussian.GaussianState) else gaussian.GaussianState.FromCovariance(cov)
    if state.n_modes != 2:
        raise utils.InvalidArgumentError("ERROR: discord needs a two-mode covariance")
    if not gaussian.IsPhysical(state, tol=1e-9):
        raise utils.InvalidArgumentError("ERROR: covariance violates the uncertainty principle")
    c = np.array(state.cov)
    return _SwapModes(c) if measured == 'A' else c


def GaussianDiscord(cov, measured='B', printed=False):
    """
    Gaussian quantum discord (bits) from the determinant invariants of a two-mode covariance:
    D = h(sqrt(I2)) - h(nu_-) - h(nu_+) + h(sqrt(E_min)).

    :parameter cov:      Required (4 x 4 array or GaussianState)
    :parameter measured: Optional (str): mode the Gaussian measurement acts on, 'B' (default) or 'A'
    :parameter printed:  Optional (bool): use the printed branch formulas (diagnostic; wrong on product states)
    :return: DiscordResult
    """
    c = _PrepareTwoMode(cov, measured)
    inv = gaussian.CalcDetInvariants(c)
    nu_minus, nu_plus = _NuPair(c, inv)
    e_min, branch = MinimalConditionalDeterminant(inv, printed=printed)
    nu_minus, nu_plus = max(nu_minus, 1.0), max(nu_plus, 1.0)
    e_min = max(e_min, 1.0)
    discord = EntropyH(np.sqrt(max(inv.I2, 1.0))) - EntropyH(nu_minus) - EntropyH(nu_plus) + EntropyH(np.sqrt(e_min))
    # printed formulas are reported raw, sign included
    if discord < 0 and not printed:
        if discord < -DISCORD_CLAMP:
            raise utils.NumericFailureError("ERROR: negative discord {:.3e}".format(discord),
                                            diagnostics={'I1': inv.I1, 'I2': inv.I2, 'I3': inv.I3, 'I4': inv.I4})
        discord = 0.0
    logger.debug("discord %.6g bits, branch %s, measured %s", discord, branch, measured)
    return DiscordResult(discord=float(discord), nu_minus=nu_minus, nu_plus=nu_plus, e_min=e_min, branch=branch, measured=measured)


def MutualInformation(cov):
    """
    Total correlations in bits: h(sqrt I1) + h(sqrt I2) - h(nu_-) - h(nu_+).
    """
    c = _PrepareTwoMode(cov, 'B')
    inv = gaussian.CalcDetInvariants(c)
    nu_minus, nu_plus = _NuPair(c, inv)
    value = (EntropyH(np.sqrt(max(inv.I1, 1.0))) + EntropyH(np.sqrt(max(inv.I2, 1.0)))
             - EntropyH(max(nu_minus, 1.0)) - EntropyH(max(nu_plus, 1.0)))
    return max(float(value), 0.0)


def ClassicalCorrelation(cov, measured='B'):
    """One-way classical correlation: mutual information minus discord."""
    return max(MutualInformation(cov) - GaussianDiscord(cov, measured=measured).discord, 0.0)


def IsDuanEntangled(jv, tol=DUAN_TOL):
    """
    Duan sum criterion on the same joint variances: Var[(X1-X2)/sqrt2] + Var[(P1+P2)/sqrt2] < 2 witnesses entanglement.

    :parameter tol: Optional (flt) >= 0: relative margin below the vacuum bound of 2
    """
    if tol < 0: raise utils.InvalidArgumentError("ERROR: tol must be >= 0")
    return bool(jv.var_xminus + jv.var_pplus < 2*(1 - tol))


####################
####   ORACLE   ####
####################

def _ConditionalDet(alpha, beta, gamma, sigma_m):
    try:
        value = np.linalg.det(alpha - gamma @ np.linalg.solve(beta + sigma_m, gamma.T))
    except np.linalg.LinAlgError:
        return np.inf
    return float(value) if np.isfinite(value) else np.inf


def _MeasurementCov(theta, s):
    R = gaussian.PhaseRotation(theta).T
    return R @ np.diag([np.exp(2*s), np.exp(-2*s)]) @ R.T


def _HomodyneDet(alpha, beta, gamma, theta):
    u = np.array([np.cos(theta), np.sin(theta)])
    gu = gamma @ u
    value = np.linalg.det(alpha - np.outer(gu, gu)/(u @ beta @ u))
    return float(value) if np.isfinite(value) else np.inf


def DiscordOracle(cov, measured='B', seed=0, n_starts=12, max_squeeze=8.0):
    """
    Brute-force discord: minimises the conditional determinant over pure single-mode Gaussian
    measurements R(theta) diag(e^2s, e^-2s) R(theta)^T on the measured mode, including the homodyne limit.
    The squeezing s is confined to [-max_squeeze, max_squeeze]; larger squeezing is covered by the homodyne family.

    :parameter seed:        Optional (int): multi-start seed
    :parameter n_starts:    Optional (int) >= 0: number of random starts besides the heterodyne one
    :parameter max_squeeze: Optional (flt) in (0, 12]: bound on |s|
    :return: DiscordResult (branch reports which family attained the minimum)
    """
    if not 0 < max_squeeze <= 12:
        raise utils.InvalidArgumentError("ERROR: max_squeeze must lie in (0, 12], got {}".format(max_squeeze))
    if n_starts < 0:
        raise utils.InvalidArgumentError("ERROR: n_starts must be >= 0")
    c = _PrepareTwoMode(cov, measured)
    alpha, beta, gamma = c[:2, :2], c[2:, 2:], c[:2, 2:]
    rng = np.random.default_rng(seed)

    def objective(v):
        s = float(np.clip(v[1], -max_squeeze, max_squeeze))
        return _ConditionalDet(alpha, beta, gamma, _MeasurementCov(v[0], s))

    best_gen = _ConditionalDet(alpha, beta, gamma, np.eye(2))
    bounds = [(-np.pi, 2*np.pi), (-max_squeeze, max_squeeze)]
    starts = [(0.0, 0.0), (0.0, -0.5*max_squeeze), (0.5*np.pi, -0.5*max_squeeze)]
    starts += [(rng.uniform(0, np.pi), rng.uniform(-max_squeeze, max_squeeze)) for _ in range(n_starts)]
    for theta0, s0 in starts:
        res = minimize(objective, x0=[theta0, s0], method='Nelder-Mead', bounds=bounds,
                       options={'xatol': 1e-11, 'fatol': 1e-15, 'maxiter': 20000, 'maxfev': 40000})
        if np.isfinite(res.fun) and res.fun < best_gen: best_gen = float(res.fun)

    grid = np.linspace(0, np.pi, 181)
    values = np.array([_HomodyneDet(alpha, beta, gamma, t) for t in grid])
    t0 = grid[int(np.argmin(values))]
    res = minimize_scalar(lambda t: _HomodyneDet(alpha, beta, gamma, t), bounds=(t0 - np.pi/180, t0 + np.pi/180),
                          method='bounded', options={'xatol': 1e-13})
    best_hom = min(float(res.fun), float(np.min(values)))
    if not np.isfinite(min(best_gen, best_hom)):
        raise utils.NumericFailureError("ERROR: no finite conditional determinant found", diagnostics={'measured': measured})

    e_min, branch = (best_gen, BRANCH_GENERAL) if best_gen <= best_hom else (best_hom, BRANCH_HOMODYNE)
    inv = gaussian.CalcDetInvariants(c)
    nu_minus, nu_plus = _NuPair(c, inv)
    nu_minus, nu_plus = max(nu_minus, 1.0), max(nu_plus, 1.0)
    e_min = max(e_min, 1.0)
    discord = EntropyH(np.sqrt(max(inv.I2, 1.0))) - EntropyH(nu_minus) - EntropyH(nu_plus) + EntropyH(np.sqrt(e_min))
    logger.debug("oracle e_min %.9g (%s) from %d starts", e_min, branch, len(starts))
    return DiscordResult(discord=max(float(discord), 0.0), nu_minus=nu_minus, nu_plus=nu_plus, e_min=float(e_min),
                         branch=branch, measured=measured)
