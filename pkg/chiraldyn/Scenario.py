__author__ = "chiraldyn developers"
__year__ = "2026"

#LIBRARIES
import os, copy, json, logging, datetime
import dataclasses
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Optional
import numpy as np
import pandas as pd
import chiraldyn
import chiraldyn.Utils as utils
import chiraldyn.Gaussian as gaussian
import chiraldyn.Chirality as chirality
import chiraldyn.Dynamics as dynamics
import chiraldyn.Correlations as correlations
import chiraldyn.Floquet as floquet
import chiraldyn.EIT as transparency

logger = logging.getLogger(__name__)

scenarios_path = os.path.join(os.path.split(os.path.realpath(__file__))[0], 'scenarios')

"""
Declarative scenarios: loading with strict validation, running the pipeline into result files,
and one-parameter sweeps.

Scenario files use laboratory units: rates in Hz (2 pi applied on load), powers in microwatt,
velocities in m/s and wavelengths in nm.
"""

# 4 g^2 / (gamma kappa) = 0.35 at gamma/2pi = 100 Hz, kappa/2pi = 1 kHz
DEFAULT_G_HZ = float(np.sqrt(0.35*100.0*1000.0/4.0))

DEFAULT_PARAMETERS = {
    'seed': 0,
    'beam': {'power_uW': 100.0, 'detuning_hz': 0.0},
    'model': {'g1_hz': DEFAULT_G_HZ, 'g2_hz': DEFAULT_G_HZ, 'gamma_spin_hz': 100.0, 'kappa1_hz': 1000.0,
              'kappa2_hz': 1000.0, 'delta_spin_hz': 0.0, 'carrier_hz': 298.8e3, 'efficiency': 1.0, 'fit_q': None},
    'drive': {'nu1_hz': None, 'b1': 0.0, 'b0': 0.0, 'gyromag': 7.0e9, 'k_u': None, 'index': None, 'n_max': 3, 'stark_shift_hz': 0.0},
    'eit': {'rabi_c_hz': 1.0e6, 'gamma12_hz': 100.0, 'gamma3_hz': 5.75e6, 'delta_c_hz': 0.0,
            'wavelength_nm': chirality.RB87_D1_WAVELENGTH_NM, 'u_thermal': 160.0, 'od': 60.0},
}

OUTPUT_OPTIONS = {
    'Spectrum': {'span_hz': None, 'step_hz': 5.0, 'labels': list(dynamics.Q_LABELS), 'bandwidth_hz': 0.0},
    'Q': {'span_hz': None, 'step_hz': 5.0},
    'Discord': {'measured': 'B', 'offset_hz': 0.0},
    'Eit': {'geometry': None, 'span_hz': 50.0e3, 'step_hz': 100.0, 'baseline_hz': 30.0e3, 'method': 'faddeeva'},
    'Fit': {'order': 0, 'data': None, 'synthetic': None},
    'Sidebands': {'delta0_hz': 0.0, 'tol_hz': floquet.DEFAULT_LINEWIDTH_HZ},
    'Covariance': {'offset_hz': 0.0},
}
SYNTHETIC_DEFAULTS = {'k_u': None, 'a': 1.0, 'nu1_hz': None, 'noise': 0.01}

# numeric leaves a sweep may address; 'model.g_hz' sets g1_hz and g2_hz together
SWEEP_ALIASES = {'model.g_hz': ('model.g1_hz', 'model.g2_hz')}
RUN_RECORD = 'run_record.json'


@dataclass(frozen=True)
class OutputSpec:
    kind: str
    options: dict


@dataclass(frozen=True)
class Scenario:
    """
    Validated scenario. Equality and hashing are defined on the normalised document `raw`.
    """
    name: str
    seed: int
    raw: dict = field(repr=False)
    beams: tuple = field(compare=False)
    kind: chirality.CouplingKind = field(compare=False)
    model: dynamics.ThreeModeModel = field(compare=False, repr=False)
    fit_q: Optional[float] = field(compare=False, default=None)
    drive: Optional[floquet.FloquetDrive] = field(compare=False, default=None, repr=False)
    eit: Optional[transparency.EitParams] = field(compare=False, default=None, repr=False)
    outputs: tuple = field(compare=False, default=())
    base_dir: str = field(compare=False, default='.', repr=False)

    __hash__ = None

    @property
    def hash(self):
        return utils.Sha256(utils.CanonicalJSON(self.raw))


@dataclass
class RunRecord:
    scenario: str
    scenario_hash: str
    version: str
    timestamp: str
    seed: int
    outputs: dict
    status: str
    error: Optional[str] = None

    def ToDict(self):
        return {'scenario': self.scenario, 'scenario_hash': self.scenario_hash, 'version': self.version,
                'timestamp': self.timestamp, 'seed': self.seed, 'outputs': self.outputs, 'status': self.status,
                'error': self.error}


####################
####  LOADING   ####
####################

def _Keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise utils.ScenarioError("expected an object", field=path)
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise utils.ScenarioError("unknown key(s) {}; allowed {}".format(unknown, sorted(allowed)), field=path)


def _Number(value, path, minimum=None, strict=False, maximum=None, optional=False, integer=False):
    if value is None and optional: return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise utils.ScenarioError("expected a number, got {!r}".format(value), field=path)
    if not np.isfinite(value):
        raise utils.ScenarioError("must be finite", field=path)
    if integer and int(value) != value:
        raise utils.ScenarioError("expected an integer, got {!r}".format(value), field=path)
    if minimum is not None and (value < minimum or (strict and value == minimum)):
        raise utils.ScenarioError("must be {} {}".format('>' if strict else '>=', minimum), field=path)
    if maximum is not None and value > maximum:
        raise utils.ScenarioError("must be <= {}".format(maximum), field=path)
    return int(value) if integer else float(value)


def _Merge(defaults, user, path):
    _Keys(user, defaults, path)
    merged = {**copy.deepcopy(defaults), **copy.deepcopy(user)}
    return merged


def _Normalise(data):
    _Keys(data, ['name', 'seed', 'beams', 'model', 'drive', 'eit', 'outputs'], 'scenario')
    for key in ('name', 'beams', 'outputs'):
        if key not in data: raise utils.ScenarioError("required field missing", field=key)
    raw = {'name': data['name'], 'seed': data.get('seed', DEFAULT_PARAMETERS['seed'])}
    if not isinstance(raw['name'], str) or not raw['name']:
        raise utils.ScenarioError("expected a non-empty string", field='name')
    raw['seed'] = _Number(raw['seed'], 'seed', minimum=0, integer=True)

    beams = data['beams']
    if not isinstance(beams, list) or len(beams) != 2:
        raise utils.ScenarioError("expected a list of two beams", field='beams')
    raw['beams'] = []
    for i, beam in enumerate(beams):
        path = 'beams[{}]'.format(i)
        _Keys(beam, ['handedness', 'direction', 'power_uW', 'detuning_hz'], path)
        for key in ('handedness', 'direction'):
            if key not in beam: raise utils.ScenarioError("required field missing", field='{}.{}'.format(path, key))
        merged = {**DEFAULT_PARAMETERS['beam'], **beam}
        if merged['handedness'] not in ('R', 'L'):
            raise utils.ScenarioError("expected one of 'R', 'L', got {!r}".format(merged['handedness']), field=path + '.handedness')
        if merged['direction'] not in ('+z', '-z'):
            raise utils.ScenarioError("expected one of '+z', '-z', got {!r}".format(merged['direction']), field=path + '.direction')
        merged['power_uW'] = _Number(merged['power_uW'], path + '.power_uW', minimum=0)
        merged['detuning_hz'] = _Number(merged['detuning_hz'], path + '.detuning_hz')
        raw['beams'].append(merged)

    model = _Merge(DEFAULT_PARAMETERS['model'], data.get('model', {}), 'model')
    for key in ('g1_hz', 'g2_hz'):
        model[key] = _Number(model[key], 'model.' + key, minimum=0)
    for key in ('gamma_spin_hz', 'kappa1_hz', 'kappa2_hz', 'carrier_hz'):
        model[key] = _Number(model[key], 'model.' + key, minimum=0, strict=True)
    model['delta_spin_hz'] = _Number(model['delta_spin_hz'], 'model.delta_spin_hz')
    model['efficiency'] = _Number(model['efficiency'], 'model.efficiency', minimum=0, strict=True, maximum=1)
    model['fit_q'] = _Number(model['fit_q'], 'model.fit_q', minimum=0, strict=True, optional=True)
    raw['model'] = model

    if 'drive' in data:
        drive = _Merge(DEFAULT_PARAMETERS['drive'], data['drive'], 'drive')
        if 'nu1_hz' not in data['drive']:
            raise utils.ScenarioError("required field missing", field='drive.nu1_hz')
        drive['nu1_hz'] = _Number(drive['nu1_hz'], 'drive.nu1_hz', minimum=0, strict=True)
        drive['b1'] = _Number(drive['b1'], 'drive.b1', minimum=0)
        drive['b0'] = _Number(drive['b0'], 'drive.b0')
        drive['gyromag'] = _Number(drive['gyromag'], 'drive.gyromag', minimum=0, strict=True)
        drive['k_u'] = _Number(drive['k_u'], 'drive.k_u', minimum=0, optional=True)
        drive['index'] = _Number(drive['index'], 'drive.index', optional=True)
        drive['n_max'] = _Number(drive['n_max'], 'drive.n_max', minimum=0, maximum=floquet.N_MAX_LIMIT, integer=True)
        drive['stark_shift_hz'] = _Number(drive['stark_shift_hz'], 'drive.stark_shift_hz')
        raw['drive'] = drive

    if 'eit' in data:
        params = _Merge(DEFAULT_PARAMETERS['eit'], data['eit'], 'eit')
        for key in ('rabi_c_hz', 'gamma12_hz', 'gamma3_hz', 'wavelength_nm', 'u_thermal'):
            params[key] = _Number(params[key], 'eit.' + key, minimum=0, strict=True)
        params['delta_c_hz'] = _Number(params['delta_c_hz'], 'eit.delta_c_hz')
        params['od'] = _Number(params['od'], 'eit.od', minimum=0)
        raw['eit'] = params

    outputs = data['outputs']
    if not isinstance(outputs, list) or not outputs:
        raise utils.ScenarioError("expected a non-empty list", field='outputs')
    raw['outputs'] = []
    seen = set()
    for i, out in enumerate(outputs):
        path = 'outputs[{}]'.format(i)
        _Keys(out, ['kind', 'options'], path)
        kind = out.get('kind')
        if kind not in OUTPUT_OPTIONS:
            raise utils.ScenarioError("expected one of {}, got {!r}".format(sorted(OUTPUT_OPTIONS), kind), field=path + '.kind')
        if kind in seen:
            raise utils.ScenarioError("duplicate output kind {!r}".format(kind), field=path + '.kind')
        seen.add(kind)
        options = _Merge(OUTPUT_OPTIONS[kind], out.get('options', {}), path + '.options')
        raw['outputs'].append({'kind': kind, 'options': _NormaliseOptions(kind, options, raw, path + '.options')})
    return raw


def _NormaliseOptions(kind, options, raw, path):
    if kind in ('Spectrum', 'Q'):
        options['span_hz'] = _Number(options['span_hz'], path + '.span_hz', minimum=0, strict=True, optional=True)
        options['step_hz'] = _Number(options['step_hz'], path + '.step_hz', minimum=0, strict=True)
    if kind == 'Spectrum':
        labels = options['labels']
        if not isinstance(labels, list) or not labels:
            raise utils.ScenarioError("expected a non-empty list of labels", field=path + '.labels')
        for label in labels:
            try:
                dynamics.Selector(label)
            except (utils.InvalidArgumentError, AttributeError, TypeError):
                raise utils.ScenarioError("invalid quadrature label {!r}".format(label), field=path + '.labels') from None
        options['bandwidth_hz'] = _Number(options['bandwidth_hz'], path + '.bandwidth_hz', minimum=0)
    if kind == 'Discord':
        if options['measured'] not in ('A', 'B'):
            raise utils.ScenarioError("expected 'A' or 'B'", field=path + '.measured')
        options['offset_hz'] = _Number(options['offset_hz'], path + '.offset_hz')
    if kind == 'Covariance':
        options['offset_hz'] = _Number(options['offset_hz'], path + '.offset_hz')
    if kind == 'Eit':
        if 'eit' not in raw:
            raise utils.ScenarioError("output 'Eit' needs an 'eit' section", field='eit')
        if options['geometry'] is not None:
            try:
                options['geometry'] = transparency.Geometry.Parse(options['geometry']).name
            except utils.InvalidArgumentError as err:
                raise utils.ScenarioError(str(err), field=path + '.geometry') from None
        for key in ('span_hz', 'step_hz', 'baseline_hz'):
            options[key] = _Number(options[key], '{}.{}'.format(path, key), minimum=0, strict=True)
        if options['baseline_hz'] >= options['span_hz']:
            raise utils.ScenarioError("baseline_hz must be below span_hz", field=path + '.baseline_hz')
        if options['method'] not in ('faddeeva', 'hermite'):
            raise utils.ScenarioError("expected 'faddeeva' or 'hermite'", field=path + '.method')
    if kind == 'Fit':
        options['order'] = _Number(options['order'], path + '.order', minimum=0, maximum=1, integer=True)
        if (options['data'] is None) == (options['synthetic'] is None):
            raise utils.ScenarioError("exactly one of 'data' or 'synthetic' is required", field=path)
        if options['data'] is not None and not isinstance(options['data'], str):
            raise utils.ScenarioError("expected a file path", field=path + '.data')
        if options['synthetic'] is not None:
            synth = _Merge(SYNTHETIC_DEFAULTS, options['synthetic'], path + '.synthetic')
            synth['k_u'] = _Number(synth['k_u'], path + '.synthetic.k_u', minimum=0, strict=True)
            synth['a'] = _Number(synth['a'], path + '.synthetic.a')
            synth['noise'] = _Number(synth['noise'], path + '.synthetic.noise', minimum=0)
            nu = synth['nu1_hz']
            if not isinstance(nu, list) or len(nu) < 5:
                raise utils.ScenarioError("expected a list of at least 5 frequencies", field=path + '.synthetic.nu1_hz')
            synth['nu1_hz'] = [_Number(v, path + '.synthetic.nu1_hz', minimum=0, strict=True) for v in nu]
            options['synthetic'] = synth
    if kind == 'Sidebands':
        if 'drive' not in raw:
            raise utils.ScenarioError("output 'Sidebands' needs a 'drive' section", field='drive')
        options['delta0_hz'] = _Number(options['delta0_hz'], path + '.delta0_hz')
        options['tol_hz'] = _Number(options['tol_hz'], path + '.tol_hz', minimum=0)
    return options


def _Build(raw, base_dir):
    beams = tuple(chirality.BeamConfig.FromPower(b['handedness'], b['direction'], b['power_uW'], b['detuning_hz'])
                  for b in raw['beams'])
    kind = chirality.GetCouplingKind(*beams)
    m = raw['model']
    try:
        model = dynamics.BuildModel(kind, g1=utils.HzToRad(m['g1_hz']), g2=utils.HzToRad(m['g2_hz']),
                                    gamma_spin=utils.HzToRad(m['gamma_spin_hz']), kappa1=utils.HzToRad(m['kappa1_hz']),
                                    kappa2=utils.HzToRad(m['kappa2_hz']), delta_spin=utils.HzToRad(m['delta_spin_hz']),
                                    carrier_hz=m['carrier_hz'], efficiency=m['efficiency'])
    except utils.StabilityError as err:
        raise utils.ScenarioError("violates the NHPA stability condition ({})".format(err), field='model') from err
    drive = None
    if 'drive' in raw:
        d = raw['drive']
        try:
            drive = floquet.FloquetDrive(nu1_hz=d['nu1_hz'], b1=d['b1'], b0=d['b0'], gyromag=d['gyromag'], k_u=d['k_u'],
                                         index=d['index'], n_max=d['n_max'], stark_shift_hz=d['stark_shift_hz'])
        except utils.InvalidArgumentError as err:
            raise utils.ScenarioError(str(err), field='drive') from err
    params = None
    if 'eit' in raw:
        e = raw['eit']
        params = transparency.EitParams.FromLabUnits(rabi_c_hz=e['rabi_c_hz'], gamma12_hz=e['gamma12_hz'], gamma3_hz=e['gamma3_hz'],
                                            delta_c_hz=e['delta_c_hz'], wavelength_nm=e['wavelength_nm'],
                                            u_thermal=e['u_thermal'], od=e['od'])
    outputs = tuple(OutputSpec(kind=o['kind'], options=o['options']) for o in raw['outputs'])
    return Scenario(name=raw['name'], seed=raw['seed'], raw=raw, beams=beams, kind=kind, model=model,
                    fit_q=m['fit_q'], drive=drive, eit=params, outputs=outputs, base_dir=base_dir)


def ScenarioFromDict(data, base_dir='.'):
    """
    Validates a scenario document and fills defaults from DEFAULT_PARAMETERS.

    :parameter data:     Required (dict): parsed scenario document
    :parameter base_dir: Optional (str): directory that relative data paths refer to
    :return: Scenario
    """
    return _Build(_Normalise(data), base_dir)


def ScenarioToDict(scenario):
    """Normalised document of a scenario (defaults filled in); loading it gives an equal scenario."""
    return copy.deepcopy(scenario.raw)


def LoadScenario(path):
    """
    Reads and validates a JSON scenario file.

    :parameter path: Required (str)
    :return: Scenario
    """
    try:
        with open(path, encoding='utf-8') as handle:
            text = handle.read()
    except OSError as err:
        raise utils.OutputError("ERROR: cannot read scenario {}: {}".format(path, err)) from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise utils.ScenarioError("invalid JSON: {}".format(err.msg), line=err.lineno, column=err.colno) from err
    scenario = ScenarioFromDict(data, base_dir=os.path.dirname(os.path.abspath(path)))
    logger.debug("loaded scenario %s (%s), coupling %s", scenario.name, scenario.hash[:12], scenario.kind.value)
    return scenario


def ShippedScenarios():
    """Paths of the scenario files distributed with the package."""
    return sorted(os.path.join(scenarios_path, f) for f in os.listdir(scenarios_path) if f.endswith('.json'))


####################
####  RUNNING   ####
####################

def _Grid(centre, span, step):
    m = int(np.ceil(span/step - 1e-9))
    return centre + step*np.arange(-m, m + 1)


def _SpectrumGrid(scenario, options):
    if scenario.drive is not None:
        span = options['span_hz'] or (scenario.drive.n_max + 1.5)*scenario.drive.nu1_hz
        return _Grid(scenario.model.carrier_hz + scenario.drive.stark_shift_hz, span, options['step_hz'])
    span = options['span_hz'] or 1000.0
    return _Grid(scenario.model.carrier_hz, span, options['step_hz'])


def _EitGeometry(scenario, options):
    if options['geometry'] is not None: return transparency.Geometry.Parse(options['geometry'])
    same = scenario.beams[0].direction == scenario.beams[1].direction
    return transparency.Geometry.CoPropagating if same else transparency.Geometry.CounterPropagating


def _CarrierMetrics(model, offset_hz=0.0, measured='B'):
    dd = dynamics.CalcDriftDiffusion(model)
    cov = dynamics.SpectralCovariance(dd, model.carrier_hz + offset_hz)
    jv = correlations.JointVariancesFromCov(cov)
    result = correlations.GaussianDiscord(cov, measured=measured)
    return cov, jv, result


def ResolveModel(scenario):
    """Model of the scenario, with the gain fitted when `model.fit_q` is set."""
    if scenario.fit_q is None: return scenario.model
    return dynamics.FitGain(scenario.model, scenario.fit_q)


def _ProduceSpectrum(scenario, model, options):
    grid = _SpectrumGrid(scenario, options)
    if scenario.drive is not None:
        sim = floquet.MulticolorSimulation()
        sim.SetSimulationParameters(model=model, drive=scenario.drive, freq_hz=grid, labels=options['labels'])
        sim.Run()
        sim.Analysis()
        df = sim.spectrum.ToDataFrame()
        df['Q'] = sim.q
    else:
        spectrum = dynamics.OutputNoiseSpectrum(dynamics.CalcDriftDiffusion(model), options['labels'], grid,
                                                bandwidth_hz=options['bandwidth_hz'] or None)
        df = spectrum.ToDataFrame()
        df['Q'], _ = dynamics.QSpectrum(dynamics.CalcDriftDiffusion(model), grid)
    return [('spectrum.csv', df)]


def _ProduceQ(scenario, model, options):
    cov, jv, _ = _CarrierMetrics(model)
    epr_min, epr_weight = correlations.OptimalEprVariance(cov)
    grid = _SpectrumGrid(scenario, options)
    _, fwhm = dynamics.QSpectrum(dynamics.CalcDriftDiffusion(model), grid)
    doc = {'Q': correlations.QuantumCorrelationQ(jv), 'q_fwhm_hz': fwhm, 'duan_entangled': correlations.IsDuanEntangled(jv),
           'kind': model.kind.value, 'g1_hz': model.g1/(2*np.pi), 'g2_hz': model.g2/(2*np.pi),
           'threshold_ratio': model.threshold_ratio, 'epr_min': epr_min,
           'epr_weight': epr_weight if np.isfinite(epr_weight) else None}
    if scenario.drive is not None:
        q, peaks = floquet.MulticolorQ(model, scenario.drive, grid)
        doc.update({'multicolor_q_max': float(np.max(q)), 'peaks_hz': [float(p) for p in peaks],
                    'carrier_weight': floquet.SidebandWeight(0, floquet.ModulationIndex(scenario.drive))})
    return [('q.json', doc)]


def _ProduceDiscord(scenario, model, options):
    cov, jv, result = _CarrierMetrics(model, options['offset_hz'], options['measured'])
    doc = result.ToDict()
    doc.update({'Q': correlations.QuantumCorrelationQ(jv),
                'mutual_information_bits': correlations.MutualInformation(cov),
                'classical_bits': correlations.ClassicalCorrelation(cov, options['measured']),
                'duan_entangled': correlations.IsDuanEntangled(jv)})
    return [('discord.json', doc)]


def _ProduceEit(scenario, model, options):
    geometry = _EitGeometry(scenario, options)
    sim = transparency.TransmissionSimulation()
    sim.SetSimulationParameters(geometry=geometry, delta_hz=_Grid(0.0, options['span_hz'], options['step_hz']),
                                params=scenario.eit, method=options['method'], baseline_hz=options['baseline_hz'])
    sim.Run()
    summary = sim.Analysis()
    suffix = 'co' if geometry is transparency.Geometry.CoPropagating else 'counter'
    return [('eit_{}.csv'.format(suffix), sim.TransmissionToDataFrame()), ('eit.json', summary)]


def CompareEit(scenario, out_dir=None):
    """
    Transmission in both beam geometries with the scenario's EIT parameters (defaults when the
    scenario has no 'eit' section).

    :parameter scenario: Required (Scenario)
    :parameter out_dir:  Optional (str): writes eit_co.csv, eit_counter.csv and eit_compare.json there
    :return: dict with one summary per geometry and the counter/co contrast ratio
    """
    options = next((dict(s.options) for s in scenario.outputs if s.kind == 'Eit'), dict(OUTPUT_OPTIONS['Eit']))
    if scenario.eit is None:
        scenario = dataclasses.replace(scenario, eit=transparency.EitParams.FromLabUnits(**DEFAULT_PARAMETERS['eit']))
    artifacts, doc = [], {}
    for geometry in ('CoPropagating', 'CounterPropagating'):
        options['geometry'] = geometry
        (table_name, table), (_, summary) = _ProduceEit(scenario, None, options)
        artifacts.append((table_name, table))
        doc['co' if geometry == 'CoPropagating' else 'counter'] = summary
    co = doc['co']['contrast']
    doc['contrast_ratio'] = doc['counter']['contrast']/co if co > 0 else None
    artifacts.append(('eit_compare.json', doc))
    if out_dir is not None:
        for name, content in artifacts: _Write(out_dir, name, content)
    return doc


def _ProduceFit(scenario, model, options):
    if options['data'] is not None:
        path = options['data']
        if not os.path.isabs(path): path = os.path.join(scenario.base_dir, path)
        result = floquet.BesselFitFromCSV(path, options['order'], seed=scenario.seed)
        return [('fit.json', result.ToDict())]
    synth = options['synthetic']
    rng = np.random.default_rng(scenario.seed)
    nu = np.asarray(synth['nu1_hz'])
    y = floquet.BesselModel(nu, synth['a'], synth['k_u'], options['order'])
    y = y + synth['noise']*abs(synth['a'])*rng.standard_normal(nu.size)
    result = floquet.BesselFit(nu, y, options['order'], seed=scenario.seed)
    data = pd.DataFrame({'nu1_hz': nu, 'amplitude': y})
    return [('fit_data.csv', data), ('fit.json', result.ToDict())]


def _ProduceSidebands(scenario, model, options):
    table = floquet.CrossSidebandTable(scenario.drive, options['delta0_hz'], options['tol_hz'])
    return [('sidebands.csv', table)]


def _ProduceCovariance(scenario, model, options):
    dd = dynamics.CalcDriftDiffusion(model)
    detected = dynamics.SpectralCovariance(dd, model.carrier_hz + options['offset_hz'])
    steady = dynamics.SteadyStateCov(dd)
    for label, state in (('detected', detected), ('steady_state', steady)):
        if not gaussian.IsPhysical(state, tol=1e-9):
            raise utils.NumericFailureError("ERROR: {} covariance is unphysical".format(label))
    doc = gaussian.CovarianceToDict(detected)
    doc['freq_hz'] = model.carrier_hz + options['offset_hz']
    return [('covariance.json', doc), ('steady_state.json', gaussian.CovarianceToDict(steady))]


PRODUCERS = {'Spectrum': _ProduceSpectrum, 'Q': _ProduceQ, 'Discord': _ProduceDiscord, 'Eit': _ProduceEit,
             'Fit': _ProduceFit, 'Sidebands': _ProduceSidebands, 'Covariance': _ProduceCovariance}


def _Write(out_dir, name, content):
    path = os.path.join(out_dir, name)
    if isinstance(content, pd.DataFrame):
        utils.AtomicWriteCSV(content, path)
    else:
        utils.AtomicWriteJSON(content, path)
    return path


def _Produce(scenario, model, output):
    try:
        return PRODUCERS[output.kind](scenario, model, output.options)
    except utils.ChiralDynError as err:
        raise utils.WithContext(err, output.kind)


def Run(scenario, out_dir, seed=None, threads=None):
    """
    Runs every requested output and writes the artifacts plus run_record.json into out_dir.

    Each output kind is all-or-nothing: its files are removed again if any of them fails to write.

    :parameter scenario: Required (Scenario)
    :parameter out_dir:  Required (str): result directory, created if missing
    :parameter seed:     Optional (int): overrides the scenario seed
    :parameter threads:  Optional (int): worker count, default from CHIRALDYN_THREADS
    :return: RunRecord
    """
    if seed is not None and seed != scenario.seed:
        raw = ScenarioToDict(scenario)
        raw['seed'] = int(seed)
        scenario = ScenarioFromDict(raw, base_dir=scenario.base_dir)
    threads = threads or utils.ThreadCount()
    record = RunRecord(scenario=scenario.name, scenario_hash=scenario.hash, version=chiraldyn.__version__,
                       timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(), seed=scenario.seed,
                       outputs={}, status='ok')
    try:
        try:
            model = ResolveModel(scenario)
        except utils.ChiralDynError as err:
            raise utils.WithContext(err, 'model')
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            futures = [pool.submit(_Produce, scenario, model, output) for output in scenario.outputs]
            results = [f.result() for f in futures]
        for output, artifacts in zip(scenario.outputs, results):
            written = []
            try:
                for name, content in artifacts:
                    written.append(_Write(out_dir, name, content))
            except utils.OutputError:
                for path in written:
                    if os.path.exists(path): os.remove(path)
                raise
            record.outputs[output.kind] = [os.path.basename(p) for p in written]
            logger.info("%s: wrote %s", output.kind, ', '.join(record.outputs[output.kind]))
    except utils.ChiralDynError as err:
        record.status = 'failed'
        record.error = '{}: {}'.format(type(err).__name__, err)
        try:
            utils.AtomicWriteJSON(record.ToDict(), os.path.join(out_dir, RUN_RECORD))
        except utils.OutputError:
            pass
        raise
    utils.AtomicWriteJSON(record.ToDict(), os.path.join(out_dir, RUN_RECORD))
    return record


####################
####   SWEEPS   ####
####################

def SweepablePaths(scenario):
    """Dotted paths of every numeric scenario field a sweep can set."""
    paths = ['seed']
    for section in ('model', 'drive', 'eit'):
        if section not in scenario.raw: continue
        for key, value in DEFAULT_PARAMETERS[section].items():
            if key in scenario.raw[section] and (value is None or isinstance(value, (int, float))):
                paths.append('{}.{}'.format(section, key))
        if section == 'drive': paths.append('drive.nu1_hz')
    paths.extend(alias for alias, targets in SWEEP_ALIASES.items() if all(t in paths for t in targets))
    for i in range(2):
        paths.extend('beams[{}].{}'.format(i, key) for key in ('power_uW', 'detuning_hz'))
    return sorted(set(paths))


def _Assign(raw, path, value):
    if path.startswith('beams['):
        index = int(path[6])
        raw['beams'][index][path.split('.', 1)[1]] = value
    elif '.' in path:
        section, key = path.split('.', 1)
        raw[section][key] = value
    else:
        raw[path] = value


def SummaryMetrics(scenario):
    """
    Scalar summary of one scenario point: coupling, Q and discord at the carrier, plus the carrier
    weight J_0 under a drive and the EIT contrast when an Eit output is requested.
    """
    model = ResolveModel(scenario)
    cov, jv, result = _CarrierMetrics(model)
    row = {'kind': model.kind.value, 'g1_hz': model.g1/(2*np.pi), 'g2_hz': model.g2/(2*np.pi),
           'Q': correlations.QuantumCorrelationQ(jv), 'discord_bits': result.discord,
           'epr_min': correlations.OptimalEprVariance(cov)[0]}
    if scenario.drive is not None:
        index = floquet.ModulationIndex(scenario.drive)
        row.update({'index': index, 'carrier_weight': floquet.SidebandWeight(0, index)})
    for output in scenario.outputs:
        if output.kind == 'Eit':
            _, summary = _ProduceEit(scenario, model, output.options)[-1]
            row['eit_contrast'] = summary['contrast']
        if output.kind == 'Fit':
            _, fit = _ProduceFit(scenario, model, output.options)[-1]
            row['k_u'] = fit['k_u']
    return row


def Sweep(scenario, param_path, values, out_dir=None, threads=None, progress=False):
    """
    One run per value of a numeric scenario field; rows keep the order of values.

    :parameter param_path: Required (str): dotted path, e.g. 'drive.nu1_hz' or 'model.g_hz'
    :parameter values:     Required (list of flt)
    :parameter out_dir:    Optional (str): writes sweep_<param>.csv there
    :return: pandas.DataFrame with a 'value' column followed by the summary metrics
    """
    valid = SweepablePaths(scenario)
    if param_path not in valid:
        raise utils.ScenarioError("cannot sweep {!r}; valid paths: {}".format(param_path, ', '.join(valid)), field=param_path)
    values = [float(v) for v in values]
    targets = SWEEP_ALIASES.get(param_path, (param_path,))

    def point(value):
        raw = ScenarioToDict(scenario)
        for target in targets:
            _Assign(raw, target, int(value) if target == 'seed' or target.endswith('n_max') else value)
        try:
            return {'value': value, **SummaryMetrics(ScenarioFromDict(raw, base_dir=scenario.base_dir))}
        except utils.ChiralDynError as err:
            raise utils.WithContext(err, '{}={:g}'.format(param_path, value))

    rows = [None]*len(values)
    threads = threads or utils.ThreadCount()
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = {pool.submit(point, v): i for i, v in enumerate(values)}
        for done, future in enumerate(as_completed(futures), start=1):
            rows[futures[future]] = future.result()
            if progress: utils.PrintProgressBar(done, len(values), prefix='sweep', suffix=param_path, length=40)
    table = pd.DataFrame(rows) if rows else pd.DataFrame(columns=['value'])
    if out_dir is not None:
        name = 'sweep_{}.csv'.format(param_path.replace('.', '_').replace('[', '').replace(']', ''))
        utils.AtomicWriteCSV(table, os.path.join(out_dir, name))
        logger.info("sweep over %s: %d rows", param_path, len(table))
    return table
