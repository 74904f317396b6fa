import json
import numpy as np
import pytest
import chiraldyn.Dynamics as dynamics
import chiraldyn.Scenario as scenario_runner
import chiraldyn.Utils as utils
from chiraldyn.Chirality import CouplingKind


def DefaultModel(kind, **overrides):
    """Desk-scale model: gamma/2pi = 100 Hz, kappa/2pi = 1 kHz, cooperativity 0.35."""
    params = dict(g1=utils.HzToRad(scenario_runner.DEFAULT_G_HZ), g2=utils.HzToRad(scenario_runner.DEFAULT_G_HZ),
                  gamma_spin=utils.HzToRad(100.0), kappa1=utils.HzToRad(1000.0), kappa2=utils.HzToRad(1000.0))
    params.update(overrides)
    return dynamics.BuildModel(kind, **params)


def TwoModeSymplectic(r, theta):
    """Two-mode squeezer followed by a beamsplitter, XPXP ordering."""
    c, s = np.cosh(r), np.sinh(r)
    z = np.diag([1.0, -1.0])
    squeezer = np.block([[c*np.eye(2), s*z], [s*z, c*np.eye(2)]])
    ct, st = np.cos(theta), np.sin(theta)
    splitter = np.block([[ct*np.eye(2), st*np.eye(2)], [-st*np.eye(2), ct*np.eye(2)]])
    return splitter @ squeezer


@pytest.fixture
def nhpa_model():
    return DefaultModel(CouplingKind.NHPA)


@pytest.fixture
def dbs_model():
    return DefaultModel(CouplingKind.DBS)


@pytest.fixture
def backward_doc():
    return {
        'name': 'backward_test',
        'beams': [{'handedness': 'R', 'direction': '+z'}, {'handedness': 'R', 'direction': '-z'}],
        'model': {},
        'outputs': [{'kind': 'Q'}],
    }


@pytest.fixture
def write_scenario(tmp_path):
    def _write(doc, name='scenario.json'):
        path = tmp_path/name
        path.write_text(json.dumps(doc, indent=2))
        return str(path)
    return _write


@pytest.fixture
def shipped():
    return {p.split('/')[-1][:-5]: p for p in scenario_runner.ShippedScenarios()}
