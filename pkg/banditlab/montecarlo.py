"""Replicated experiments.

Replicates are cut into fixed-size batches of consecutive indices; a batch
is the unit of work of the runners. Since the batches depend only on the
configuration, and their results are merged in batch order, a summary does
not depend on how many workers ran them.
"""
import math

import numpy as np

from banditlab import analysis
from banditlab.analysis import (TO_ZERO, TO_ONE, UNDECIDED, DISTANCE_TO_ONE,
                                DISTANCE_TO_ZERO, ZERO_SIDE, ONE_SIDE)
from banditlab.dynamics import (BanditParams, RecordingPlan, simulate_batch,
                                mean_recursion)
from banditlab.exc import (AnalysisError, ValidationError, ZeroTrials,
                           InsufficientSamples)
from banditlab.regimes import (classify_power_family, classify_schedule, FAST,
                               SLOW)
from banditlab.schedule import PowerSchedule, parse_schedule
from banditlab.util import (SCHEMA_VERSION, dict_hash, logger, median,
                            get_quantiles)


Z_95 = 1.959964
MIN_HORIZON = 100
DEFAULT_BATCH_SIZE = 128
BIMODAL_SEPARATION = 3.0
BIMODAL_MIN_FRACTION = 0.05
MIN_BIMODAL_SAMPLES = 20
HISTOGRAM_BINS = 20
CAUCHY_TAIL = 0.01

REPLICATE_HEADER = ('replicate', 'outcome', 'final_x', 'beta_hat', 'stderr',
                    'mode')


class ExperimentConfig(object):
    """Everything an experiment depends on. ``workers`` and ``batch_size``
    only decide how the work is spread, never its result."""

    def __init__(self, params, schedule, horizon, replicates, x0=0.5, seed=0,
                 thresholds=analysis.DEFAULT_THRESHOLDS, domain=None,
                 checkpoints=512, verify_tail=False, workers=1,
                 batch_size=DEFAULT_BATCH_SIZE):
        if isinstance(schedule, str):
            schedule = parse_schedule(schedule)
        self.params = params
        self.schedule = schedule
        self.horizon = int(horizon)
        self.replicates = int(replicates)
        self.x0 = float(x0)
        self.seed = int(seed)
        self.thresholds = tuple(float(t) for t in thresholds)
        self.domain = domain or analysis.default_domain(schedule)
        self.checkpoints = int(checkpoints)
        self.verify_tail = bool(verify_tail)
        self.workers = int(workers)
        self.batch_size = int(batch_size)

    @classmethod
    def from_mapping(cls, data):
        """Builds a config from the flat key/value mapping of the command
        line and config files."""
        params = BanditParams(data['pa'], data['pb'])
        return cls(params, parse_schedule(data['schedule'],
                                          data.get('base_dir')),
                   horizon=data['horizon'], replicates=data['replicates'],
                   x0=data.get('x0', 0.5), seed=data.get('seed', 0),
                   thresholds=(data.get('delta0', 1e-3),
                               data.get('delta1', 1e-3)),
                   domain=data.get('domain'),
                   checkpoints=data.get('checkpoints', 512),
                   verify_tail=data.get('verify_tail', False),
                   workers=data.get('workers', 1),
                   batch_size=data.get('batch_size', DEFAULT_BATCH_SIZE))

    def validate(self):
        if self.replicates < 1:
            raise ValidationError('replicates must be >= 1, got %d'
                                  % self.replicates)
        if self.horizon < MIN_HORIZON:
            raise ValidationError('horizon must be >= %d, got %d'
                                  % (MIN_HORIZON, self.horizon))
        if not 0.0 < self.x0 < 1.0:
            raise ValidationError('x0 must lie in (0,1), got %r' % self.x0)
        if self.seed < 0:
            raise ValidationError('seed must be >= 0, got %d' % self.seed)
        if self.workers < 1:
            raise ValidationError('workers must be >= 1, got %d'
                                  % self.workers)
        if self.batch_size < 1:
            raise ValidationError('batch_size must be >= 1, got %d'
                                  % self.batch_size)
        if self.domain not in (analysis.LOG_N, analysis.GAMMA_DOMAIN):
            raise ValidationError('unknown fit domain %r' % self.domain)
        for delta in self.thresholds:
            if not 0.0 < delta < 0.1:
                raise ValidationError('outcome thresholds must lie in '
                                      '(0, 0.1), got %r' % delta)
        if self.schedule.available is not None and \
                self.schedule.available < self.horizon:
            raise ValidationError('%s defines %d terms, the horizon is %d'
                                  % (self.schedule.spec,
                                     self.schedule.available, self.horizon))
        # raises ScheduleError on a value outside (0,1)
        self.schedule.gammas(1, self.horizon + 1)
        return self

    @property
    def plan(self):
        return RecordingPlan(points=self.checkpoints,
                             full_branch_log=self.verify_tail)

    @property
    def batches(self):
        """(index, first replicate, stop) of every batch."""
        return [(index, first, min(first + self.batch_size, self.replicates))
                for index, first in
                enumerate(range(0, self.replicates, self.batch_size))]

    def regime(self):
        schedule = self.schedule
        if isinstance(schedule, PowerSchedule):
            return classify_power_family(schedule.alpha, schedule.C,
                                         self.params)
        return classify_schedule(schedule, self.params)

    def as_dict(self):
        return {'pa': self.params.pa, 'pb': self.params.pb,
                'schedule': self.schedule.spec, 'x0': self.x0,
                'horizon': self.horizon, 'replicates': self.replicates,
                'seed': self.seed, 'delta0': self.thresholds[0],
                'delta1': self.thresholds[1], 'domain': self.domain,
                'checkpoints': self.checkpoints,
                'verify_tail': self.verify_tail}

    @property
    def hash(self):
        return dict_hash(self.as_dict())


class ReplicateRecord(object):

    def __init__(self, replicate, outcome, final_x, final_d, beta_hat=None,
                 stderr=None, mode=None, y_final=None, error_tail=None,
                 tail_deviation=None, failure=None):
        self.replicate = replicate
        self.outcome = outcome
        self.final_x = final_x
        self.final_d = final_d
        self.beta_hat = beta_hat
        self.stderr = stderr
        self.mode = mode
        self.y_final = y_final
        self.error_tail = error_tail
        self.tail_deviation = tail_deviation
        self.failure = failure

    def csv_row(self):
        def _float(value):
            return '' if value is None else repr(float(value))

        return [self.replicate, self.outcome, _float(self.final_x),
                _float(self.beta_hat), _float(self.stderr), self.mode or '']

    def as_dict(self):
        return dict(self.__dict__)

    def __repr__(self):
        return '<ReplicateRecord %d %s>' % (self.replicate, self.outcome)


class BatchResult(object):
    """What one batch sends back: its records and the per-checkpoint sums
    of X_n and X_n^2 over its replicates."""

    def __init__(self, index, records, checkpoints, sum_x, sum_x2):
        self.index = index
        self.records = records
        self.checkpoints = checkpoints
        self.sum_x = sum_x
        self.sum_x2 = sum_x2


def analyze_replicate(traj, config, regime):
    outcome = analysis.classify_outcome(traj, config.thresholds)
    x, d = traj.final
    with np.errstate(over='ignore'):
        y_final = float(d * np.exp(-traj.log_theta[-1])) if d > 0 else 0.0
    record = ReplicateRecord(traj.replicate, outcome.label, x, d,
                             y_final=y_final)
    if outcome.label == UNDECIDED:
        return record

    target = DISTANCE_TO_ONE if outcome.label == TO_ONE else DISTANCE_TO_ZERO
    try:
        if outcome.label == TO_ONE:
            record.error_tail = analysis.error_series_tail(traj)
        if config.verify_tail:
            side = ONE_SIDE if outcome.label == TO_ONE else ZERO_SIDE
            tail = analysis.verify_tail_product(traj, config.params, side)
            record.tail_deviation = tail.max_deviation
        fit = analysis.fit_exponent(traj, target, config.domain, shrink=True)
        record.beta_hat = fit.beta_hat
        record.stderr = fit.stderr
        if outcome.label == TO_ONE and regime is not None:
            record.mode = analysis.detect_rate_mode(fit, regime)
    except AnalysisError as e:
        record.failure = '%s: %s' % (e.__class__.__name__, e)
    return record


def run_batch(config, index, regime=None):
    """Simulates and analyzes one batch. Module level, so that process
    pools can pickle it."""
    _, first, stop = config.batches[index]
    trajectories = simulate_batch(config.params, config.schedule, config.x0,
                                  config.horizon, config.seed,
                                  range(first, stop), plan=config.plan)
    records = [analyze_replicate(traj, config, regime)
               for traj in trajectories]
    x = np.array([traj.x for traj in trajectories])
    return BatchResult(index, records, trajectories[0].n, x.sum(axis=0),
                       (x * x).sum(axis=0))


#
# Statistics
#
def estimate_probability(successes, trials, z=Z_95):
    """(p_hat, lower, upper), the Wilson score interval."""
    if trials < 1:
        raise ZeroTrials('no trials to estimate a probability from')
    if not 0 <= successes <= trials:
        raise ValidationError('successes must lie in [0, %d], got %d'
                              % (trials, successes))

    p_hat = float(successes) / trials
    z2 = z * z
    denominator = 1.0 + z2 / trials
    center = (p_hat + z2 / (2.0 * trials)) / denominator
    half = (z * math.sqrt(p_hat * (1.0 - p_hat) / trials +
                          z2 / (4.0 * trials * trials)) / denominator)
    # at the ends center -/+ half is 0 or 1 only up to rounding
    lower = 0.0 if successes == 0 else max(0.0, center - half)
    upper = 1.0 if successes == trials else min(1.0, center + half)
    return p_hat, lower, upper


class HistogramReport(object):
    """Histogram of exponent samples and the two-cluster split used to call
    them bimodal. The split is a pragmatic detector, not a statistical
    test."""

    def __init__(self, edges, counts, bimodal, means, fractions, separation,
                 pooled_sd, deviations=None):
        self.edges = edges
        self.counts = counts
        self.bimodal = bimodal
        self.means = means
        self.fractions = fractions
        self.separation = separation
        self.pooled_sd = pooled_sd
        self.deviations = deviations

    def as_dict(self):
        return {'edges': self.edges, 'counts': self.counts,
                'bimodal': self.bimodal, 'cluster_means': self.means,
                'cluster_fractions': self.fractions,
                'separation': self.separation, 'pooled_sd': self.pooled_sd,
                'deviations': self.deviations,
                'criterion': 'separation > %g pooled sd, each cluster >= '
                             '%g%% (heuristic detector)'
                             % (BIMODAL_SEPARATION,
                                BIMODAL_MIN_FRACTION * 100)}


def exponent_histogram(samples, expected=None, bins=HISTOGRAM_BINS):
    samples = np.sort(np.asarray(samples, dtype=float))
    size = len(samples)
    if size < MIN_BIMODAL_SAMPLES:
        raise InsufficientSamples('%d samples, %d needed for a bimodality '
                                  'analysis' % (size, MIN_BIMODAL_SAMPLES))

    counts, edges = np.histogram(samples, bins=bins)

    # best split of the sorted samples into a left and a right cluster
    prefix = np.cumsum(samples)
    prefix2 = np.cumsum(samples * samples)
    left = np.arange(1, size)
    right = size - left
    left_sum, left_sum2 = prefix[:-1], prefix2[:-1]
    right_sum = prefix[-1] - left_sum
    right_sum2 = prefix2[-1] - left_sum2
    within = (left_sum2 - left_sum ** 2 / left) + \
        (right_sum2 - right_sum ** 2 / right)
    split = int(np.argmin(within))

    low, high = samples[:split + 1], samples[split + 1:]
    means = [float(low.mean()), float(high.mean())]
    fractions = [len(low) / float(size), len(high) / float(size)]
    pooled_sd = math.sqrt(max(float(within[split]), 0.0) / (size - 2))
    separation = means[1] - means[0]

    bimodal = (separation > BIMODAL_SEPARATION * pooled_sd and
               min(fractions) >= BIMODAL_MIN_FRACTION)

    deviations = None
    if expected is not None:
        deviations = [means[0] - expected[0], means[1] - expected[1]]

    return HistogramReport(edges.tolist(), counts.tolist(), bimodal, means,
                           fractions, separation, pooled_sd, deviations)


#
# Summary
#
class ExperimentSummary(object):

    def __init__(self, config, result, regime=None):
        self.config = config
        self.regime = regime
        self.records = result.records
        self.runtime = result.duration
        self.workers = config.workers

        self.counts = dict((label, 0) for label in
                           (TO_ZERO, TO_ONE, UNDECIDED))
        for record in self.records:
            self.counts[record.outcome] += 1

        self.failures = [record for record in self.records
                         if record.failure is not None]
        self.p_zero = estimate_probability(self.counts[TO_ZERO],
                                           len(self.records))

        self.exponents = {}
        for label in (TO_ZERO, TO_ONE):
            self.exponents[label] = [record.beta_hat for record in
                                     self.records if record.outcome == label
                                     and record.beta_hat is not None]

        self.histogram = None
        self.histogram_reason = None
        expected = None
        if regime is not None and regime.coexistence:
            rates = regime.exponents_to_one()
            expected = (rates['slow'], rates['fast'])
        try:
            self.histogram = exponent_histogram(self.exponents[TO_ONE],
                                                expected)
        except InsufficientSamples as e:
            self.histogram_reason = str(e)

        self.modes = {}
        for record in self.records:
            if record.mode is not None:
                self.modes[record.mode] = self.modes.get(record.mode, 0) + 1

        self.mean_x = result.mean_x
        self.mean_domination = self._mean_domination(result)

    def _mean_domination(self, result):
        config = self.config
        mean_path = mean_recursion(config.params, config.schedule, config.x0,
                                   config.horizon)
        expected = mean_path[result.checkpoints]
        margin = expected + 3 * result.stderr_x + 1e-12 - result.mean_x
        worst = int(np.argmin(margin))
        return {'holds': bool(margin[worst] >= 0),
                'worst_margin': float(margin[worst]),
                'location': int(result.checkpoints[worst])}

    def martingale(self):
        ys = [record.y_final for record in self.records]
        mean = math.fsum(ys) / len(ys)
        stderr = None
        if len(ys) > 1:
            variance = math.fsum((y - mean) ** 2 for y in ys) / (len(ys) - 1)
            stderr = math.sqrt(variance / len(ys))
        return {'y_mean': mean, 'y_stderr': stderr,
                'y_initial': 1.0 - self.config.x0}

    def error_tails(self):
        tails = [record.error_tail for record in self.records
                 if record.error_tail is not None]
        if not tails:
            return {'runs': 0, 'cauchy_fraction': None,
                    'threshold': CAUCHY_TAIL}
        cauchy = sum(1 for tail in tails if tail < CAUCHY_TAIL)
        return {'runs': len(tails), 'cauchy_fraction': cauchy / len(tails),
                'threshold': CAUCHY_TAIL}

    def tail_products(self):
        deviations = [record.tail_deviation for record in self.records
                      if record.tail_deviation is not None]
        return {'checked': len(deviations),
                'max_deviation': max(deviations) if deviations else None}

    def mode_fractions(self):
        """Share of ToOne runs per rate mode, with Wilson intervals. These
        are estimates only, there is no theoretical value to compare."""
        if self.counts[TO_ONE] == 0:
            return {}
        return dict((mode, list(estimate_probability(self.modes.get(mode, 0),
                                                     self.counts[TO_ONE])))
                    for mode in (FAST, SLOW, UNDECIDED))

    def medians(self):
        return dict((label, median(values))
                    for label, values in self.exponents.items())

    def quantiles(self, label=TO_ONE):
        """10%, 50% and 90% quantiles of the fitted exponents."""
        return get_quantiles(self.exponents[label], (0.1, 0.5, 0.9))

    def as_dict(self):
        p_hat, lower, upper = self.p_zero
        failures = {}
        for record in self.failures:
            name = record.failure.split(':')[0]
            failures[name] = failures.get(name, 0) + 1

        return {
            'schema_version': SCHEMA_VERSION,
            'config': self.config.as_dict(),
            'config_hash': self.config.hash,
            'counts': dict(self.counts),
            'p_zero': {'p_hat': p_hat, 'lower': lower, 'upper': upper,
                       'confidence': 0.95, 'method': 'wilson'},
            'exponents': dict(self.exponents),
            'medians': self.medians(),
            'quantiles': dict((label, self.quantiles(label))
                              for label in (TO_ZERO, TO_ONE)),
            'histogram': (self.histogram.as_dict()
                          if self.histogram is not None else None),
            'histogram_reason': self.histogram_reason,
            'modes': dict(self.modes),
            'mode_fractions': self.mode_fractions(),
            'regime': (self.regime.as_dict()
                       if self.regime is not None else None),
            'martingale': self.martingale(),
            'mean_domination': self.mean_domination,
            'error_series': self.error_tails(),
            'tail_products': self.tail_products(),
            'failures': {'count': len(self.failures), 'by_error': failures},
        }

    def __str__(self):
        p_hat, lower, upper = self.p_zero
        medians = self.medians()
        lines = ['%d replicates: %d to 0, %d to 1, %d undecided'
                 % (len(self.records), self.counts[TO_ZERO],
                    self.counts[TO_ONE], self.counts[UNDECIDED]),
                 'P(X -> 0) ~ %.4f [%.4f, %.4f]' % (p_hat, lower, upper)]
        for label in (TO_ZERO, TO_ONE):
            if medians[label] is not None:
                lines.append('median exponent (%s): %.3f'
                             % (label.replace('_', ' '), medians[label]))
        if self.histogram is not None:
            lines.append('exponents %s, cluster means %.3f / %.3f'
                         % ('bimodal' if self.histogram.bimodal
                            else 'unimodal', self.histogram.means[0],
                            self.histogram.means[1]))
        if self.modes:
            lines.append('modes: %s' % ', '.join(
                '%s=%d' % item for item in sorted(self.modes.items())))
        if self.failures:
            lines.append('%d replicate(s) recorded a failure'
                         % len(self.failures))
        return '\n'.join(lines)


def run_experiment(config, args=None):
    """Runs an experiment with the runner matching ``config.workers`` and
    returns its :class:`ExperimentSummary`."""
    from banditlab.runners import LocalRunner, ParallelRunner

    config.validate()
    args = dict(args or {})
    args.setdefault('output', ['null'])
    runner = LocalRunner if config.workers == 1 else ParallelRunner
    logger.debug('%d replicate(s) in %d batch(es), %s runner'
                 % (config.replicates, len(config.batches), runner.name))
    return runner(config, args).execute()

