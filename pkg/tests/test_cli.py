import json
import numpy as np
import pytest
import chiraldyn.Cli as cli
import chiraldyn.Correlations as correlations
import chiraldyn.Floquet as floquet
import chiraldyn.Gaussian as gaussian
import chiraldyn.Utils as utils


def test_validate(shipped, capsys):
    assert cli.main(['validate', shipped['backward_same_handedness']]) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc['status'] == 'valid'
    assert doc['coupling'] == 'NHPA'


def test_invalid_scenario_exit_code(backward_doc, write_scenario, capsys):
    backward_doc['beams'][0]['direction'] = '+x'
    assert cli.main(['validate', write_scenario(backward_doc)]) == cli.EXIT_VALIDATION
    assert 'beams[0].direction' in capsys.readouterr().err


def test_drift_instability_fails_validation(backward_doc, write_scenario, capsys):
    g1_hz = float(np.sqrt(100.0*1000.0/32))
    backward_doc['model'] = {'g1_hz': g1_hz, 'g2_hz': 4*g1_hz}
    assert cli.main(['validate', write_scenario(backward_doc)]) == cli.EXIT_VALIDATION
    assert 'stability' in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert cli.main(['run', str(tmp_path/'missing.json'), '--out', str(tmp_path/'out')]) == cli.EXIT_IO


def test_run(shipped, tmp_path, capsys):
    out = tmp_path/'out'
    assert cli.main(['run', shipped['forward_same_handedness'], '--out', str(out), '--threads', '2']) == cli.EXIT_OK
    record = json.loads(capsys.readouterr().out)
    assert record['status'] == 'ok'
    assert (out/'q.json').exists()


def test_discord_command(tmp_path, capsys):
    r = 0.4
    path = str(tmp_path/'tmsv.json')
    gaussian.SaveCovariance(gaussian.TwoModeSqueezedState(r), path)
    assert cli.main(['discord', '--cov', path, '--oracle']) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    expected = correlations.EntropyH(np.cosh(2*r))
    assert doc['discord_bits'] == pytest.approx(expected, abs=1e-4)
    assert doc['oracle_bits'] == pytest.approx(expected, abs=1e-4)
    assert doc['mutual_information_bits'] == pytest.approx(2*expected, abs=1e-8)


def test_discord_rejects_unphysical(tmp_path):
    path = tmp_path/'bad.json'
    path.write_text(json.dumps({'n_modes': 2, 'ordering': 'XPXP', 'cov': (0.5*np.eye(4)).tolist()}))
    assert cli.main(['discord', '--cov', str(path)]) == cli.EXIT_VALIDATION


def test_fit_bessel_command(tmp_path, capsys):
    nu = np.geomspace(1000.0, 10000.0, 12)
    y = floquet.BesselModel(nu, 1.0, 3000.0, 1)
    path = tmp_path/'peaks.csv'
    path.write_text('nu1_hz,amplitude\n' + ''.join('{:.12g},{:.12g}\n'.format(a, b) for a, b in zip(nu, y)))
    assert cli.main(['fit-bessel', '--order', '1', '--data', str(path)]) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc['k_u'] == pytest.approx(3000.0, rel=0.02)
    assert doc['order'] == 1


def test_sweep_with_no_values(backward_doc, write_scenario, capsys):
    assert cli.main(['sweep', write_scenario(backward_doc), '--param', 'model.g_hz', '--values', '']) == cli.EXIT_OK
    assert capsys.readouterr().out.strip() == 'value'


def test_sweep_prints_table(backward_doc, write_scenario, capsys):
    assert cli.main(['sweep', write_scenario(backward_doc), '--param', 'model.g_hz', '--values', '10,20']) == cli.EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith('value,')
    assert len(lines) == 3


def test_eit_command(shipped, tmp_path, capsys):
    assert cli.main(['eit', shipped['eit_forward'], '--out', str(tmp_path)]) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc['contrast_ratio'] < 0.02
    assert (tmp_path/'eit_counter.csv').exists()


def test_argument_errors():
    assert cli.main(['teleport']) == cli.EXIT_VALIDATION
    assert cli.main(['fit-bessel', '--order', '2', '--data', 'x.csv']) == cli.EXIT_VALIDATION
    assert cli.main(['--version']) == cli.EXIT_OK


def test_exit_code_mapping():
    assert cli.ExitCode(utils.ScenarioError('bad', field='model')) == cli.EXIT_VALIDATION
    assert cli.ExitCode(utils.DataInconsistencyError('bad')) == cli.EXIT_VALIDATION
    assert cli.ExitCode(utils.OutputError('disk')) == cli.EXIT_IO
    assert cli.ExitCode(utils.NoSteadyStateError('unstable')) == cli.EXIT_NUMERIC
    assert cli.ExitCode(utils.FitError('flat')) == cli.EXIT_NUMERIC


def test_parse_values():
    assert cli.ParseValues('1, 2.5,,3e3') == [1.0, 2.5, 3000.0]
    assert cli.ParseValues('') == []
    with pytest.raises(utils.InvalidArgumentError):
        cli.ParseValues('1,two')
