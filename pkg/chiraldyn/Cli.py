__author__ = "chiraldyn developers"
__year__ = "2026"

#LIBRARIES
import sys, argparse, logging
import chiraldyn
import chiraldyn.Utils as utils
import chiraldyn.Gaussian as gaussian
import chiraldyn.Correlations as correlations
import chiraldyn.Floquet as floquet
import chiraldyn.Scenario as scenario_runner

logger = logging.getLogger(__name__)

"""
Command line entry point `chiraldyn`.

Exit codes: 0 success, 2 validation or argument error, 3 numeric failure, 4 I/O error.
"""

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def ExitCode(err):
    """Maps an exception raised by the toolkit onto the documented exit code."""
    if isinstance(err, (utils.ScenarioError, utils.InvalidArgumentError, utils.DataInconsistencyError,
                        utils.UndefinedLocalOscillatorError)):
        return EXIT_VALIDATION
    if isinstance(err, (utils.OutputError, OSError)):
        return EXIT_IO
    return EXIT_NUMERIC


def ParseValues(text):
    """
    Parses a comma-separated list of numbers; an empty string gives an empty list.

    :parameter text: Required (str)
    :return: (list of flt)
    """
    values = []
    for item in text.split(','):
        item = item.strip()
        if not item: continue
        try:
            values.append(float(item))
        except ValueError:
            raise utils.InvalidArgumentError("ERROR: --values entry {!r} is not a number".format(item)) from None
    return values


def _Print(obj):
    print(utils.CanonicalJSON(obj, indent=2))


def _CmdRun(args):
    scenario = scenario_runner.LoadScenario(args.scenario)
    record = scenario_runner.Run(scenario, args.out, seed=args.seed, threads=args.threads)
    _Print(record.ToDict())


def _CmdSweep(args):
    scenario = scenario_runner.LoadScenario(args.scenario)
    table = scenario_runner.Sweep(scenario, args.param, ParseValues(args.values), out_dir=args.out,
                                  threads=args.threads, progress=args.progress)
    sys.stdout.write(table.to_csv(index=False, float_format='%.12g', lineterminator='\n'))


def _CmdDiscord(args):
    state = gaussian.LoadCovariance(args.cov)
    result = correlations.GaussianDiscord(state, measured=args.measured)
    doc = result.ToDict()
    doc['mutual_information_bits'] = correlations.MutualInformation(state)
    if args.oracle:
        doc['oracle_bits'] = correlations.DiscordOracle(state, measured=args.measured, seed=args.seed).discord
    _Print(doc)


def _CmdEit(args):
    scenario = scenario_runner.LoadScenario(args.scenario)
    _Print(scenario_runner.CompareEit(scenario, out_dir=args.out))


def _CmdFitBessel(args):
    result = floquet.BesselFitFromCSV(args.data, args.order, seed=args.seed)
    _Print(result.ToDict())


def _CmdValidate(args):
    scenario = scenario_runner.LoadScenario(args.scenario)
    _Print({'name': scenario.name, 'hash': scenario.hash, 'coupling': scenario.kind.value,
            'outputs': [o.kind for o in scenario.outputs], 'status': 'valid'})


def BuildParser():
    parser = argparse.ArgumentParser(prog='chiraldyn',
                                     description="Chirality-induced quantum nonreciprocity simulator")
    parser.add_argument('--version', action='version', version='%(prog)s ' + chiraldyn.__version__)
    parser.add_argument('-v', '--verbose', action='store_true', help="debug logging on stderr")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run', help="run every output of a scenario")
    p.add_argument('scenario')
    p.add_argument('--out', default='results', help="result directory (default: results)")
    p.add_argument('--seed', type=int, default=None, help="override the scenario seed")
    p.add_argument('--threads', type=int, default=None)
    p.set_defaults(func=_CmdRun)

    p = sub.add_parser('sweep', help="sweep one numeric scenario field")
    p.add_argument('scenario')
    p.add_argument('--param', required=True, help="dotted path, e.g. drive.nu1_hz")
    p.add_argument('--values', required=True, help="comma-separated values")
    p.add_argument('--out', default=None, help="also write sweep_<param>.csv into this directory")
    p.add_argument('--threads', type=int, default=None)
    p.add_argument('--progress', action='store_true', help="progress bar on stderr")
    p.set_defaults(func=_CmdSweep)

    p = sub.add_parser('discord', help="Gaussian discord of a two-mode covariance file")
    p.add_argument('--cov', required=True, help="covariance JSON {n_modes, ordering, cov}")
    p.add_argument('--measured', choices=['A', 'B'], default='B')
    p.add_argument('--oracle', action='store_true', help="also run the numerical minimisation")
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=_CmdDiscord)

    p = sub.add_parser('eit', help="co- and counter-propagating EIT transmission")
    p.add_argument('scenario')
    p.add_argument('--out', default=None)
    p.set_defaults(func=_CmdEit)

    p = sub.add_parser('fit-bessel', help="fit a J_order(k_u / nu1) amplitude table")
    p.add_argument('--order', type=int, choices=[0, 1], required=True)
    p.add_argument('--data', required=True, help="CSV with columns nu1_hz, amplitude")
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=_CmdFitBessel)

    p = sub.add_parser('validate', help="check a scenario file without running it")
    p.add_argument('scenario')
    p.set_defaults(func=_CmdValidate)
    return parser


def main(argv=None):
    """
    Runs the command line.

    :parameter argv: Optional (list): arguments without the program name, default sys.argv[1:]
    :return: (int) exit code
    """
    parser = BuildParser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except utils.ChiralDynError as err:
        print("chiraldyn {}: {}".format(args.command, err), file=sys.stderr)
        logger.debug("%s failed", args.command, exc_info=True)
        return ExitCode(err)
    except OSError as err:
        print("chiraldyn {}: {}".format(args.command, err), file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
