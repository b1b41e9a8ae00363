import argparse
import os
import re
import sys
import tempfile
import traceback

import psutil
from konfig import Config

from banditlab import __version__
from banditlab.analysis import LOG_N, GAMMA_DOMAIN, martingale_diagnostics
from banditlab.dynamics import BanditParams, RecordingPlan, simulate
from banditlab.exc import ConfigError, ValidationError
from banditlab.montecarlo import ExperimentConfig, run_experiment
from banditlab.output import output_list
from banditlab.regimes import (classify_power_family, classify_schedule,
                               describe, tuning_guide)
from banditlab.schedule import PowerSchedule, parse_schedule
from banditlab.util import logger, set_logger, dump_json


COMMANDS = ('classify', 'simulate', 'experiment', 'diagnose')

CONFIG_KEYS = ('pa', 'pb', 'schedule', 'x0', 'horizon', 'replicates', 'seed',
               'workers', 'delta0', 'delta1', 'checkpoints', 'batch_size',
               'verify_tail', 'domain', 'out')

BOOLEAN_KEYS = ('verify_tail',)

SECTION = 'banditlab'

_LINE = re.compile(r'^\s*([A-Za-z_][\w-]*)\s*[=:]\s*(.*?)\s*$')
_SECTION = re.compile(r'^\s*\[\s*([^\]]+?)\s*\]\s*$')


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; bad flags are validation
    errors here."""

    def error(self, message):
        raise ConfigError(message)


def add_options(items, parser, fmt):
    """Read the list of items and add options to the parser using the given
    format.

    :param items:
        A list of class objects to iterate over. They should contain at least
        a name and an options argument.

    :param parser:
        The parser object from argparse.

    :param fmt:
        The format to use for the option to add to the parser. It should
        contain {name} and {option}, for instance '--output-{name}-{option}' is
        a valid format.
    """
    for item in items:
        for option, value in item.options.items():
            help_, type_, default, cli = value
            if not cli:
                continue

            kw = {'help': help_, 'type': type_}
            if default is not None:
                kw['default'] = default

            parser.add_argument(fmt.format(name=item.name, option=option),
                                **kw)


def scan_config(text, filename='<config>'):
    """Checks a flat ``key = value`` config and returns {key: lineno}.

    Comments start with ``#``; a single ``[banditlab]`` header is accepted.
    """
    seen = {}
    header = False
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped == '' or stripped.startswith(('#', ';')):
            continue

        section = _SECTION.match(line)
        if section is not None:
            if section.group(1) != SECTION or header or seen:
                raise ConfigError('unexpected section [%s]'
                                  % section.group(1), filename, lineno)
            header = True
            continue

        match = _LINE.match(line)
        if match is None:
            raise ConfigError("expected 'key = value', got %r" % stripped,
                              filename, lineno)

        key = match.group(1).replace('-', '_')
        if key not in CONFIG_KEYS:
            raise ConfigError('unknown key %r' % key, filename, lineno)
        if key in seen:
            raise ConfigError('%r already set on line %d' % (key, seen[key]),
                              filename, lineno)
        if match.group(2) == '':
            raise ConfigError('no value for %r' % key, filename, lineno)
        seen[key] = lineno
    return seen


def read_config(filename):
    """Reads a flat config file through konfig, returning
    {key: (value, lineno)}."""
    try:
        with open(filename) as f:
            text = f.read()
    except IOError as e:
        raise ConfigError('cannot read config: %s' % e, filename)

    lines = scan_config(text, filename)
    if not any(_SECTION.match(line) for line in text.splitlines()):
        text = '[%s]\n%s' % (SECTION, text)

    fd, normalized = tempfile.mkstemp(suffix='.ini')
    try:
        with os.fdopen(fd, 'w') as f:
            f.write(text)
        config = Config(normalized)
        values = dict(config[SECTION]) if config.has_section(SECTION) else {}
    finally:
        os.remove(normalized)

    res = {}
    for key, value in values.items():
        key = key.replace('-', '_')
        res[key] = (value, lines.get(key))
    return res


def _boolean(value):
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ('1', 'true', 'yes', 'on')


def _seed(value):
    seed = int(value)
    if seed < 0:
        raise argparse.ArgumentTypeError('seed must be >= 0')
    return seed


def _build_parser():
    parser = _Parser(description='Two-armed bandit stochastic approximation '
                                 'laboratory.')
    parser.add_argument('command', nargs='?', choices=COMMANDS,
                        help='What to run')

    parser.add_argument('--config', help='Configuration file to read',
                        type=str, default=None)

    parser.add_argument('--pa', type=float, default=None,
                        help='Success probability of arm A')
    parser.add_argument('--pb', type=float, default=None,
                        help='Success probability of arm B (pb < pa)')
    parser.add_argument('--schedule', type=str, default=None,
                        help="constant:<gamma>, power:<C>,<C'>,<alpha> or "
                             "custom:<path>")
    parser.add_argument('--x0', type=float, default=0.5,
                        help='Initial state, in (0,1)')
    parser.add_argument('--horizon', type=int, default=10000,
                        help='Number of steps N')
    parser.add_argument('--replicates', type=int, default=100,
                        help='Number of replicates of an experiment')
    parser.add_argument('--seed', type=_seed, default=None,
                        help='Master seed (falls back to $BANDITLAB_SEED, '
                             'then 0)')
    parser.add_argument('--workers', type=int, default=1,
                        help='Worker processes; 0 means one per core')
    parser.add_argument('--batch-size', dest='batch_size', type=int,
                        default=128, help='Replicates per unit of work')
    parser.add_argument('--checkpoints', type=int, default=512,
                        help='Log-spaced states recorded per trajectory')
    parser.add_argument('--delta0', type=float, default=1e-3,
                        help='x_N below this counts as converging to 0')
    parser.add_argument('--delta1', type=float, default=1e-3,
                        help='1 - x_N below this counts as converging to 1')
    parser.add_argument('--domain', choices=(LOG_N, GAMMA_DOMAIN),
                        default=None,
                        help='Exponent fit domain (default from the '
                             'schedule)')
    parser.add_argument('--verify-tail', dest='verify_tail',
                        action='store_true', default=False,
                        help='Check exact tail products on every replicate')
    parser.add_argument('--out', default=None,
                        help='Output file (simulate) or directory '
                             '(experiment)')
    parser.add_argument('--json', action='store_true', default=False,
                        help='Print JSON instead of text')

    parser.add_argument('--version', action='store_true', default=False,
                        help='Displays banditlab version and exits.')
    parser.add_argument('--debug', action='store_true', default=False,
                        help='Debug logging.')
    parser.add_argument('--quiet', action='store_true', default=False,
                        help='Do not print progress and summaries.')

    outputs = sorted(st.name for st in output_list())
    parser.add_argument('--output', action='append', default=[],
                        help='Extra output receiving the experiment results',
                        choices=outputs)

    # Adds the per-output options.
    add_options(output_list(), parser, fmt='--output-{name}-{option}')
    return parser


class CliConfig(object):
    """A fully parsed and validated command line."""

    def __init__(self, args, params=None, schedule=None):
        self.args = args
        self.command = args.command
        self.params = params
        self.schedule = schedule

    def __getattr__(self, name):
        return getattr(self.args, name)

    def experiment(self):
        config = ExperimentConfig(
            self.params, self.schedule, horizon=self.horizon,
            replicates=self.replicates, x0=self.x0, seed=self.seed,
            thresholds=(self.delta0, self.delta1), domain=self.domain,
            checkpoints=self.checkpoints, verify_tail=self.verify_tail,
            workers=self.workers, batch_size=self.batch_size)
        return config.validate()


def parse_config(sysargs=None, environ=None):
    """Parses the command line (and the config file it names) into a
    validated :class:`CliConfig`. Flags override config file values."""
    if sysargs is None:
        sysargs = sys.argv[1:]
    if environ is None:
        environ = os.environ

    parser = _build_parser()
    args = parser.parse_args(sysargs)

    base_dir = None
    if args.config is not None:
        # second pass !
        values = read_config(args.config)
        actions = dict((action.dest, action) for action in parser._actions)
        defaults = {}
        for key, (value, lineno) in values.items():
            if key in BOOLEAN_KEYS:
                defaults[key] = _boolean(value)
                continue
            action = actions[key]
            try:
                if action.type is not None:
                    action.type(str(value))
            except (ValueError, argparse.ArgumentTypeError):
                raise ConfigError('invalid value %r for %r' % (value, key),
                                  args.config, lineno)
            if action.choices is not None and value not in action.choices:
                raise ConfigError('%r must be one of %s'
                                  % (key, ', '.join(action.choices)),
                                  args.config, lineno)
            defaults[key] = str(value)

        parser.set_defaults(**defaults)
        args = parser.parse_args(sysargs)
        if 'schedule' in values and \
                args.schedule == str(values['schedule'][0]):
            base_dir = os.path.dirname(os.path.abspath(args.config))

    if args.version:
        return CliConfig(args)

    if args.command is None:
        raise ValidationError('a command is required: %s'
                              % ', '.join(COMMANDS))

    if args.seed is None:
        seed = environ.get('BANDITLAB_SEED')
        try:
            args.seed = _seed(seed) if seed is not None else 0
        except (ValueError, argparse.ArgumentTypeError):
            raise ValidationError('BANDITLAB_SEED must be an integer >= 0, '
                                  'got %r' % seed)

    if args.workers == 0:
        args.workers = psutil.cpu_count(logical=False) or 1

    for name in ('pa', 'pb', 'schedule'):
        if getattr(args, name) is None:
            raise ValidationError('%s is required' % name)

    params = BanditParams(args.pa, args.pb)
    schedule = parse_schedule(args.schedule, base_dir)
    cli = CliConfig(args, params, schedule)

    if args.command == 'experiment':
        cli.experiment()
    elif args.command in ('simulate', 'diagnose'):
        if not 0.0 < args.x0 < 1.0:
            raise ValidationError('x0 must lie in (0,1), got %r' % args.x0)
        if args.horizon < 1:
            raise ValidationError('horizon must be >= 1, got %d'
                                  % args.horizon)
        if args.checkpoints < 1:
            raise ValidationError('checkpoints must be >= 1')

    return cli


#
# Commands
#
def _regime(cli):
    schedule = cli.schedule
    if isinstance(schedule, PowerSchedule):
        return classify_power_family(schedule.alpha, schedule.C, cli.params)
    return classify_schedule(schedule, cli.params)


def classify(cli, stdout):
    report = _regime(cli)
    if cli.json:
        data = report.as_dict()
        data['tuning'] = tuning_guide(cli.params)
        stdout.write(dump_json(data))
    else:
        stdout.write(describe(report) + '\n')
        for note in report.notes:
            stdout.write('  note: %s\n' % note)
    return 0


def simulate_command(cli, stdout):
    plan = RecordingPlan(points=cli.checkpoints)
    traj = simulate(cli.params, cli.schedule, cli.x0, cli.horizon,
                    seed=cli.seed, plan=plan)
    if cli.out is None:
        traj.write_csv(stdout)
    else:
        with open(cli.out, 'w') as f:
            traj.write_csv(f)
        logger.info('trajectory written to %s' % cli.out)
    return 0


def experiment(cli, stdout):
    config = cli.experiment()
    args = {'output': list(cli.output)}
    if not cli.quiet and not cli.json:
        args['output'].append('stdout')

    if cli.out is not None:
        if not os.path.isdir(cli.out):
            os.makedirs(cli.out)
        args['output'] += ['json', 'csv']
        args['output_json_filename'] = os.path.join(cli.out, 'summary.json')
        args['output_csv_filename'] = os.path.join(cli.out, 'replicates.csv')
    else:
        args['output_json_filename'] = cli.output_json_filename
        args['output_csv_filename'] = cli.output_csv_filename

    if not args['output']:
        args['output'] = ['null']

    summary = run_experiment(config, args)
    if cli.json:
        stdout.write(dump_json(summary.as_dict()))
    return 0


def diagnose(cli, stdout):
    plan = RecordingPlan(points=cli.checkpoints, full_branch_log=True,
                         track_variation=True)
    traj = simulate(cli.params, cli.schedule, cli.x0, cli.horizon,
                    seed=cli.seed, plan=plan)
    report = martingale_diagnostics(cli.params, traj=traj,
                                    gamma=cli.schedule.gamma(1),
                                    thresholds=(cli.delta0, cli.delta1))
    if cli.json:
        stdout.write(dump_json(report.as_dict()))
    else:
        for check in report.checks:
            line = '%-28s %s' % (check['name'], check['status'])
            if check['worst_deviation'] is not None:
                line += ' (worst %.3g' % check['worst_deviation']
                if check['location'] is not None:
                    line += ' at %s' % check['location']
                line += ')'
            stdout.write(line + '\n')
        stdout.write('%s\n' % ('all checks passed' if report.passed
                               else '%d check(s) failed'
                               % len(report.failures)))
    return 0 if report.passed else 2


_COMMANDS = {'classify': classify, 'simulate': simulate_command,
             'experiment': experiment, 'diagnose': diagnose}


def run_cli(sysargs=None, stdout=None, environ=None):
    """Runs a command and returns its exit status: 0 on success, 1 on a
    validation error, 2 on a runtime failure."""
    stdout = stdout or sys.stdout
    operation = 'parse_config'
    try:
        cli = parse_config(sysargs, environ)
        if cli.version:
            stdout.write('%s\n' % __version__)
            return 0
        operation = cli.command
        return _COMMANDS[cli.command](cli, stdout)
    except ValidationError as e:
        logger.error('error in %s: %s' % (operation, e))
        return 1
    except Exception as e:
        logger.error('error in %s: %s' % (operation, e))
        logger.debug(traceback.format_exc())
        return 2


def main(sysargs=None):
    debug = '--debug' in (sys.argv[1:] if sysargs is None else sysargs)
    set_logger(debug)
    sys.exit(run_cli(sysargs))
