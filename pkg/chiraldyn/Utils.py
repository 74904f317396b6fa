__author__ = "chiraldyn developers"
__year__ = "2026"

import os, sys, json, math, hashlib, tempfile, warnings
import numpy as np
import pandas as pd

"""Shared helpers: exception hierarchy, warnings, canonical JSON and atomic file output."""


####################
####   ERRORS   ####
####################

class ChiralDynError(Exception):
    """Base class of every error raised by the toolkit."""


class InvalidArgumentError(ChiralDynError, ValueError):
    """An argument violates the documented precondition."""


class NumericFailureError(ChiralDynError, ArithmeticError):
    """
    A numerical routine could not produce a trustworthy result.

    :parameter diagnostics: Optional (dict): solver diagnostics (condition estimates, residuals)
    """
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StabilityError(ChiralDynError):
    """A model sits on or above its instability threshold."""


class NoSteadyStateError(StabilityError):
    """The drift matrix has eigenvalues with non-negative real part."""


class DataInconsistencyError(ChiralDynError, ValueError):
    """Measured variances cannot come from a single covariance matrix."""


class UndefinedLocalOscillatorError(ChiralDynError, ValueError):
    """Stokes S_z vanishes, so no quadrature normalisation exists."""


class TruncationError(ChiralDynError, IndexError):
    """A sideband index lies outside the Floquet truncation."""


class FitError(ChiralDynError):
    """Least-squares fitting failed or the data are degenerate."""


class ScenarioError(ChiralDynError, ValueError):
    """
    A scenario file failed to parse or validate.

    :parameter field:  Optional (str): dotted path of the offending field
    :parameter line:   Optional (int): line of a JSON parse error
    :parameter column: Optional (int): column of a JSON parse error
    """
    def __init__(self, message, field=None, line=None, column=None):
        if field is not None: message = "{}: {}".format(field, message)
        if line is not None: message = "{} (line {}, column {})".format(message, line, column)
        super().__init__(message)
        self.field = field
        self.line = line
        self.column = column


class OutputError(ChiralDynError, OSError):
    """Result artifacts could not be written."""


def WithContext(err, context):
    """Prefixes the message of an exception with the pipeline step it came from."""
    if err.args and isinstance(err.args[0], str):
        err.args = ("{}: {}".format(context, err.args[0]),) + tuple(err.args[1:])
    return err


####################
####  WARNINGS  ####
####################

class AdiabaticRegimeWarning(UserWarning):
    """The spin mode is not fast enough for adiabatic elimination."""


class SidebandOverlapWarning(UserWarning):
    """Floquet sidebands are too close for independent superposition."""


class ConvergenceWarning(UserWarning):
    """A quadrature or iterative estimate did not converge to tolerance."""


class StatisticsWarning(UserWarning):
    """A stochastic estimate rests on too short a record."""


####################
####  HELPERS   ####
####################

def PrintProgressBar(iteration, total, prefix='', suffix='', decimals=1, length=50, fill='█', printEnd="\r", stream=None):
    """
    Call in a loop to create terminal progress bar

    :parameter iteration: Required: current iteration (Int)
    :parameter total:     Required: total iterations (Int)
    :parameter prefix:    Optional: prefix string (Str)
    :parameter suffix:    Optional: suffix string (Str)
    :parameter decimals:  Optional: positive number of decimals in percent complete (Int)
    :parameter length:    Optional: character length of bar (Int)
    :parameter fill:      Optional: bar fill character (Str)
    :parameter printEnd:  Optional: end character (Str)
    :parameter stream:    Optional: file object, default sys.stderr
    """
    stream = stream or sys.stderr
    if total <= 0: return
    percent = ("{0:." + str(decimals) + "f}").format(100 * (iteration / float(total)))
    filledLength = int(length * iteration // total)
    bar = fill * filledLength + '-' * (length - filledLength)
    print(f'\r{prefix} |{bar}| {percent}% {suffix}', end=printEnd, file=stream)
    # Print New Line on Complete
    if iteration == total:
        print(file=stream)


def HzToRad(value):
    """Converts a frequency in Hz to an angular rate in rad/s."""
    return 2*np.pi*float(value)


def RoundSignificant(value, digits=12):
    """
    Rounds a float to a fixed number of significant digits.

    :parameter value:  Required (flt)
    :parameter digits: Optional (int): default 12
    :return: (flt)
    """
    value = float(value)
    if value == 0 or not math.isfinite(value): return value
    return float('{:.{}g}'.format(value, digits))


def _Canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _Canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_Canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _Canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj): return None
        return RoundSignificant(obj)
    return obj


def CanonicalJSON(obj, indent=None):
    """
    Serialises an object as canonical JSON: sorted keys, floats at 12 significant digits.

    :parameter obj:    Required: JSON-compatible structure (numpy arrays allowed)
    :parameter indent: Optional (int): pretty-print indentation
    :return: (str)
    """
    separators = (',', ':') if indent is None else (',', ': ')
    return json.dumps(_Canonical(obj), sort_keys=True, indent=indent, separators=separators, allow_nan=False)


def Sha256(text):
    """Hex digest of a unicode string."""
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def AtomicWriteText(path, text):
    """
    Writes text to path via a temporary file in the same directory and a rename.

    :parameter path: Required (str)
    :parameter text: Required (str)
    """
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix=os.path.basename(path))
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except OSError as err:
        raise OutputError("ERROR: cannot write {}: {}".format(path, err)) from err
    return path


def AtomicWriteCSV(df, path):
    """
    Writes a DataFrame as CSV (12 significant digits) atomically.

    :parameter df:   Required (pandas.DataFrame)
    :parameter path: Required (str)
    """
    return AtomicWriteText(path, df.to_csv(index=False, float_format='%.12g', lineterminator='\n'))


def AtomicWriteJSON(obj, path):
    """Writes canonical, indented JSON atomically."""
    return AtomicWriteText(path, CanonicalJSON(obj, indent=2) + '\n')


def ThreadCount(default=1):
    """
    Worker count for runs and sweeps, capped by the CHIRALDYN_THREADS environment variable.

    :return: (int) ≥ 1
    """
    value = os.environ.get('CHIRALDYN_THREADS')
    if value is None: return default
    try:
        count = int(value)
    except ValueError:
        warnings.warn("CHIRALDYN_THREADS={!r} is not an integer; running serially".format(value))
        return 1
    return max(1, count)


def ReadTable(path, columns):
    """
    Reads a numeric CSV table, accepting files with or without a header row.

    :parameter path:    Required (str)
    :parameter columns: Required (list): column names to assign
    :return: pandas.DataFrame
    """
    try:
        df = pd.read_csv(path, header=None, comment='#')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise OutputError("ERROR: cannot read {}: {}".format(path, err)) from err
    if df.shape[1] != len(columns):
        raise InvalidArgumentError("ERROR: {} must have {} columns, found {}".format(path, len(columns), df.shape[1]))
    # header row present
    if not np.issubdtype(df.dtypes.iloc[0], np.number):
        first = pd.to_numeric(df.iloc[0], errors='coerce')
        if first.isna().any(): df = df.iloc[1:]
    df = df.apply(pd.to_numeric, errors='coerce')
    if df.isna().any().any():
        raise InvalidArgumentError("ERROR: {} contains non-numeric entries".format(path))
    df.columns = columns
    return df.reset_index(drop=True)
