"""Diagnostics over completed trajectories.

Everything here is a pure function of a :class:`~banditlab.dynamics.Trajectory`
(or of a state grid); nothing is simulated.
"""
import math

import numpy as np
from scipy import stats

from banditlab.dynamics import (REWARD_A, PENALTY_B, branch_probabilities)
from banditlab.exc import (AnalysisError, DistanceNotPositive, NoTailFound,
                           InsufficientCheckpoints, ValidationError)
from banditlab.regimes import SLOW, FAST
from banditlab.schedule import PowerSchedule
from banditlab.util import SCHEMA_VERSION


TO_ZERO = 'to_zero'
TO_ONE = 'to_one'
UNDECIDED = 'undecided'

DISTANCE_TO_ONE = 'distance_to_one'
DISTANCE_TO_ZERO = 'distance_to_zero'

LOG_N = 'log-n'
GAMMA_DOMAIN = 'gamma'

ZERO_SIDE = 'zero'
ONE_SIDE = 'one'

DEFAULT_THRESHOLDS = (1e-3, 1e-3)
MIN_FIT_POINTS = 8
MIN_LOG_SPAN = math.log(10.0)
MIN_GAMMA_SPAN = 2.0
ENUMERATION_TOLERANCE = 1e-12
IDENTITY_TOLERANCE = 1e-9
TAIL_TOLERANCE = 1e-9


#
# Companion processes
#
class CompanionSeries(object):
    """theta_n (kept as log theta_n), Y_n = (1 - X_n) / theta_n and
    Z_n = (1 - X_n) / gamma_n, aligned on the trajectory checkpoints."""

    def __init__(self, n, Gamma, log_theta, y, z, d):
        self.n = n
        self.Gamma = Gamma
        self.log_theta = log_theta
        self.y = y
        self.z = z
        self.d = d

    @property
    def theta(self):
        return np.exp(self.log_theta)


def companion_processes(traj, params=None, min_checkpoints=8):
    if len(traj.n) < min_checkpoints:
        raise InsufficientCheckpoints(
            'companion processes need %d checkpoints, the trajectory has %d'
            % (min_checkpoints, len(traj.n)))

    d = traj.d
    with np.errstate(divide='ignore', over='ignore'):
        log_d = np.where(d > 0, np.log(np.where(d > 0, d, 1.0)), -np.inf)
        y = np.where(d > 0, np.exp(log_d - traj.log_theta), 0.0)

    z = np.full(len(d), np.nan)
    z[1:] = d[1:] / traj.gamma[1:]
    return CompanionSeries(traj.n, traj.Gamma, traj.log_theta, y, z, d)


#
# Outcomes
#
class OutcomeLabel(object):

    def __init__(self, label, basis):
        self.label = label
        self.basis = basis

    def __eq__(self, other):
        if isinstance(other, OutcomeLabel):
            return self.label == other.label
        return self.label == other

    def __hash__(self):
        return hash(self.label)

    def __repr__(self):
        return '<OutcomeLabel %s>' % self.label


def classify_outcome(traj, thresholds=DEFAULT_THRESHOLDS):
    """Finite-horizon proxy of the limit: ToZero when x_N < delta0, ToOne
    when 1 - x_N < delta1. Accepts a trajectory or a StatePair."""
    delta0, delta1 = thresholds
    for delta in (delta0, delta1):
        if not 0.0 < delta < 0.1:
            raise ValidationError('outcome thresholds must lie in (0, 0.1), '
                                  'got %r' % delta)

    x, d = getattr(traj, 'final', traj)
    basis = {'final_x': x, 'final_d': d, 'delta0': delta0, 'delta1': delta1}
    if x < delta0:
        return OutcomeLabel(TO_ZERO, basis)
    if d < delta1:
        return OutcomeLabel(TO_ONE, basis)
    return OutcomeLabel(UNDECIDED, basis)


#
# Exponent fits
#
class ExponentFit(object):

    def __init__(self, beta_hat, stderr, domain, window, n_points,
                 target=DISTANCE_TO_ONE, intercept=None):
        self.beta_hat = beta_hat
        self.stderr = stderr
        self.domain = domain
        self.window = window
        self.n_points = n_points
        self.target = target
        self.intercept = intercept

    def as_dict(self):
        return {'beta_hat': self.beta_hat, 'stderr': self.stderr,
                'domain': self.domain, 'window': list(self.window),
                'n_points': self.n_points, 'target': self.target}

    def __repr__(self):
        return '<ExponentFit %.4f +/- %.4f (%s)>' % (self.beta_hat,
                                                     self.stderr, self.domain)


def default_domain(schedule):
    """Rates are powers of n only for gamma_n = C / (C' + n)."""
    if isinstance(schedule, PowerSchedule) and schedule.alpha == 1.0:
        return LOG_N
    return GAMMA_DOMAIN


def fit_decay(n, distance, domain=LOG_N, Gamma=None, target=DISTANCE_TO_ONE,
              min_points=MIN_FIT_POINTS):
    """Least-squares slope of log(distance) against log n (LogN) or
    Gamma_n (GammaDomain); beta_hat is minus that slope."""
    n = np.asarray(n, dtype=float)
    distance = np.asarray(distance, dtype=float)

    if len(n) < min_points:
        raise InsufficientCheckpoints('a fit needs %d points, got %d'
                                      % (min_points, len(n)))
    if (distance <= 0).any():
        raise DistanceNotPositive('distance is 0 at n=%d'
                                  % int(n[np.argmax(distance <= 0)]))

    if domain == LOG_N:
        abscissa = np.log(n)
        span, needed = abscissa[-1] - abscissa[0], MIN_LOG_SPAN
    elif domain == GAMMA_DOMAIN:
        if Gamma is None:
            raise ValidationError('a Gamma-domain fit needs Gamma_n')
        abscissa = np.asarray(Gamma, dtype=float)
        span, needed = abscissa[-1] - abscissa[0], MIN_GAMMA_SPAN
    else:
        raise ValidationError('unknown fit domain %r' % domain)

    if span < needed * (1 - 1e-9):
        raise InsufficientCheckpoints('fit window spans %.3f, %.3f needed '
                                      'in the %s domain'
                                      % (span, needed, domain))

    fit = stats.linregress(abscissa, np.log(distance))
    return ExponentFit(-float(fit.slope), float(fit.stderr), domain,
                       (int(n[0]), int(n[-1])), len(n), target,
                       float(fit.intercept))


def _window(traj, first, last):
    before = traj.n[(traj.n >= 1) & (traj.n <= first)]
    if len(before) > 0:
        first = before[-1]
    return (traj.n >= first) & (traj.n <= last)


def fit_exponent(traj, target=DISTANCE_TO_ONE, domain=None, window=None,
                 shrink=False):
    """Fits the decay exponent of the distance to 1 (or 0) of a trajectory
    over ``window`` = (first n, last n), by default the last decade.
    The window opens at the last checkpoint at or before ``first``, so a
    log-spaced plan always covers the requested span.

    With ``shrink``, a window reaching absorbed checkpoints is moved to end
    at the last positive one instead of raising DistanceNotPositive.
    """
    if domain is None:
        domain = default_domain(traj.schedule)
    if window is None:
        window = (max(traj.horizon // 10, 1), traj.horizon)

    first, last = window
    if first < 1 or last > traj.horizon or first >= last:
        raise ValidationError('fit window %r is not inside [1, %d]'
                              % (window, traj.horizon))

    distance = traj.d if target == DISTANCE_TO_ONE else traj.x
    selected = _window(traj, first, last)

    if shrink and (distance[selected] <= 0).any():
        positive = np.flatnonzero((distance > 0) & (traj.n >= 1))
        if len(positive) == 0:
            raise DistanceNotPositive('no positive checkpoint to fit')
        # last positive checkpoint before the first zero of the window
        zero_at = traj.n[selected][np.argmax(distance[selected] <= 0)]
        positive = positive[traj.n[positive] < zero_at]
        if len(positive) == 0:
            raise DistanceNotPositive('absorbed before n=%d' % zero_at)
        last = int(traj.n[positive[-1]])
        first = max(last // 10, 1)
        selected = _window(traj, first, last)

    return fit_decay(traj.n[selected], distance[selected], domain,
                     traj.Gamma[selected], target)


def detect_rate_mode(fit, regime):
    """Fast, Slow or Undecided, from a distance-to-one fit."""
    exponents = {}
    for rate in regime.rates_to_one:
        if fit.domain == LOG_N:
            if rate.exponent is None:
                return UNDECIDED
            exponents[rate.kind] = rate.exponent
        else:
            exponents[rate.kind] = rate.coefficient

    if SLOW in exponents and FAST in exponents:
        midpoint = (exponents[SLOW] + exponents[FAST]) / 2.0
        if abs(fit.beta_hat - midpoint) <= fit.stderr:
            return UNDECIDED
        return FAST if fit.beta_hat > midpoint else SLOW

    if len(exponents) == 1:
        kind, exponent = list(exponents.items())[0]
        if abs(fit.beta_hat - exponent) <= 3 * fit.stderr:
            return kind
    return UNDECIDED


#
# Exact tail products
#
class TailReport(object):

    def __init__(self, side, n0, anchor, checked, max_deviation):
        self.side = side
        self.n0 = n0
        self.anchor = anchor
        self.checked = checked
        self.max_deviation = max_deviation

    def as_dict(self):
        return {'side': self.side, 'n0': self.n0, 'anchor': self.anchor,
                'checked': self.checked, 'max_deviation': self.max_deviation}


def verify_tail_product(traj, params=None, side=ZERO_SIDE, min_tail=8):
    """After the last opposing branch n0, the distance to the side's limit
    evolves by a deterministic product: X_n = X_{n0} prod (1 - 1_B gamma_k)
    (zero side) or 1 - X_n = (1 - X_{n0}) prod (1 - 1_A gamma_k) (one side).

    Recomputes that product from the branch log and reports its largest
    relative deviation from the recorded states over (n0, N].
    """
    if traj.branches is None:
        raise AnalysisError('tail products need a full branch log')

    if side == ZERO_SIDE:
        n0, anchor = traj.last_reward
        shrinking, recorded = PENALTY_B, traj.x
    elif side == ONE_SIDE:
        n0, anchor = traj.last_penalty
        shrinking, recorded = REWARD_A, traj.d
    else:
        raise ValidationError('unknown side %r' % side)

    if traj.horizon - n0 < min_tail:
        raise NoTailFound('last opposing branch at n=%d, only %d steps '
                          'before N=%d' % (n0, traj.horizon - n0,
                                           traj.horizon))

    gammas = traj.schedule.gammas(n0 + 1, traj.horizon + 1)
    hits = traj.branches[n0:] == shrinking
    factors = np.where(hits, 1.0 - gammas, 1.0)
    with np.errstate(under='ignore'):
        product = anchor * np.cumprod(factors)

    after = traj.n > n0
    expected = product[traj.n[after] - n0 - 1]
    observed = recorded[after]
    scale = np.maximum(np.abs(observed), np.abs(expected))
    with np.errstate(invalid='ignore'):
        deviation = np.where(scale > 0,
                             np.abs(observed - expected) / scale, 0.0)

    worst = float(deviation.max()) if len(deviation) else 0.0
    return TailReport(side, int(n0), float(anchor), int(after.sum()), worst)


#
# Martingale structure
#
def branch_enumeration(x, params, gamma=1.0):
    """The three one-step outcomes from state x, with the exact conditional
    mean of Delta M, drift and conditional variance."""
    d = 1.0 - x
    p_reward, p_penalty, p_still = branch_probabilities(x, params)
    pix = params.pi * x * d
    outcomes = [(p_reward, d - pix, gamma * d),
                (p_penalty, -x - pix, -gamma * x),
                (p_still, -pix, 0.0)]

    mean = math.fsum(p * dm for p, dm, _ in outcomes)
    drift = math.fsum(p * step for p, _, step in outcomes)
    variance = math.fsum(p * dm * dm for p, dm, _ in outcomes)
    xd = x * d
    closed_form = xd * (params.pa * d + params.pb * x -
                        params.pi * params.pi * xd)
    return {'x': x, 'outcomes': outcomes, 'mean': mean, 'drift': drift,
            'expected_drift': gamma * params.pi * xd,
            'variance': variance, 'closed_form': closed_form,
            'lower': params.pb * xd, 'upper': params.pa * xd}


class DiagnosticReport(object):

    PASS = 'pass'
    FAIL = 'fail'
    INFO = 'info'
    SKIPPED = 'skipped'

    def __init__(self):
        self.checks = []

    def add(self, name, status, worst=None, location=None, detail=None):
        self.checks.append({'name': name, 'status': status,
                            'worst_deviation': worst, 'location': location,
                            'detail': detail})

    @property
    def passed(self):
        return all(check['status'] != self.FAIL for check in self.checks)

    @property
    def failures(self):
        return [check for check in self.checks
                if check['status'] == self.FAIL]

    def as_dict(self):
        return {'schema_version': SCHEMA_VERSION, 'passed': self.passed,
                'checks': list(self.checks)}


def martingale_diagnostics(params, states=None, traj=None, gamma=0.1,
                           tolerance=ENUMERATION_TOLERANCE,
                           thresholds=DEFAULT_THRESHOLDS):
    """Branch-enumeration checks over a state grid and, when a trajectory
    is given, its companion identity, quadratic variation, exact tail
    product and the submartingale property of Z. The decay ratio of Y is
    reported alongside, never as a pass/fail check."""
    report = DiagnosticReport()
    if states is None:
        states = [k / 100.0 for k in range(1, 100)]

    worst = dict((name, (0.0, None)) for name in
                 ('mean', 'drift', 'variance', 'bounds'))

    def note(name, deviation, x):
        if deviation > worst[name][0]:
            worst[name] = (deviation, x)

    for x in states:
        res = branch_enumeration(float(x), params, gamma)
        note('mean', abs(res['mean']), x)
        note('drift', abs(res['drift'] - res['expected_drift']), x)
        note('variance', abs(res['variance'] - res['closed_form']), x)
        note('bounds', max(res['lower'] - res['variance'],
                           res['variance'] - res['upper'], 0.0), x)

    for name in ('mean', 'drift', 'variance', 'bounds'):
        deviation, x = worst[name]
        status = report.PASS if deviation <= tolerance else report.FAIL
        report.add('enumeration_%s' % name, status, deviation, x)

    if traj is None:
        return report

    companion = companion_processes(traj, params)
    finite = np.isfinite(traj.y)
    if not finite.all():
        # 1/theta_n overflowed: only the prefix before it is comparable
        finite[np.argmin(finite):] = False
    theta = companion.theta[finite]
    y = traj.y[finite]
    scale = np.maximum.accumulate(np.abs(y)) * theta
    residual = np.zeros(len(y))
    positive = scale > 0
    residual[positive] = (np.abs(traj.d[finite] - theta * y)[positive] /
                          scale[positive])
    at = int(np.argmax(residual))
    status = (report.PASS if residual[at] <= IDENTITY_TOLERANCE
              else report.FAIL)
    detail = None
    if not finite.all():
        detail = 'checked up to n=%d, 1/theta_n overflows later' % int(
            traj.n[finite][-1])
    report.add('companion_identity', status, float(residual[at]),
               int(traj.n[finite][at]), detail)

    if traj.quadratic_variation is not None and traj.conditional_variation:
        ratio = traj.quadratic_variation / traj.conditional_variation
        report.add('quadratic_variation_ratio', report.INFO, ratio,
                   traj.horizon)

    n, ratio = y_decay_ratio(traj, params)
    kept = np.isfinite(ratio) & (ratio > 0)
    if kept.any():
        n, ratio = n[kept], ratio[kept]
        report.add('y_decay_ratio', report.INFO, float(ratio[-1]),
                   int(n[-1]), 'ranges over [%.3g, %.3g] for n <= %d'
                   % (ratio.min(), ratio.max(), traj.horizon // 10))
    else:
        report.add('y_decay_ratio', report.SKIPPED,
                   detail='Y_n is 0 or not finite at every n <= N/10')

    outcome = classify_outcome(traj, thresholds)
    if traj.branches is not None and outcome.label != UNDECIDED:
        side = ZERO_SIDE if outcome.label == TO_ZERO else ONE_SIDE
        try:
            tail = verify_tail_product(traj, params, side)
        except NoTailFound as e:
            report.add('tail_product_%s' % side, report.SKIPPED,
                       detail=str(e))
        else:
            status = (report.PASS if tail.max_deviation <= TAIL_TOLERANCE
                      else report.FAIL)
            report.add('tail_product_%s' % side, status, tail.max_deviation,
                       tail.n0, tail.as_dict())

    sub = submartingale_check(traj, params)
    if sub['checked'] == 0:
        report.add('z_submartingale', report.SKIPPED,
                   detail='eps_n < 0 at every checkpoint')
    else:
        status = report.PASS if sub['passed'] else report.FAIL
        report.add('z_submartingale', status, sub['worst'], sub['location'])
    return report


def submartingale_check(traj, params=None, tolerance=ENUMERATION_TOLERANCE):
    """E[Z_{n+1} - Z_n | state] >= 0 by branch enumeration, at every
    checkpoint where eps_n >= 0."""
    params = params or traj.params
    schedule = traj.schedule
    last = traj.horizon
    if schedule.available is not None:
        last = min(last, schedule.available - 1)

    selected = (traj.n >= 1) & (traj.n <= last)
    worst, location, checked = 0.0, None, 0

    for n, x, d in zip(traj.n[selected], traj.x[selected], traj.d[selected]):
        n = int(n)
        g, g_next = schedule.gammas(n, n + 2)
        eps = 1.0 / g_next - 1.0 / g - params.pi
        if eps < 0:
            continue
        checked += 1
        p_reward, p_penalty, p_still = branch_probabilities(float(x), params)
        expected = math.fsum((p_reward * d * (1.0 - g_next),
                              p_penalty * (d + g_next * x),
                              p_still * d)) / g_next
        z = d / g
        change = (expected - z) / max(1.0, z)
        if location is None or change < worst:
            worst, location = change, n

    return {'checked': checked, 'worst': float(worst), 'location': location,
            'passed': worst >= -tolerance}


def error_series_tail(traj):
    """Share of sum_{n<=N} (1 - X_n) accumulated over the last decade."""
    if traj.error_sum <= 0:
        return 0.0
    return (traj.error_sum - traj.error_sum_decade) / traj.error_sum


def y_decay_ratio(traj, params=None):
    """Y_n / sum_{k>=n} gamma_{k+1}^2 exp(pi Gamma_{k+1}) at the checkpoints
    n <= N/10, in log domain. The tail sum is truncated at N, except for
    C / (C' + n) schedules where the remainder is added in closed form.

    Only meaningful where Y decays; never used as a pass/fail check.
    """
    params = params or traj.params
    horizon = traj.horizon
    gammas = traj.schedule.gammas(1, horizon + 1)
    Gamma = np.cumsum(gammas)
    log_terms = 2 * np.log(gammas) + params.pi * Gamma
    # log of sum_{j>=i} of the terms, i.e. a reversed log-cumsum
    log_tail = np.logaddexp.accumulate(log_terms[::-1])[::-1]

    schedule = traj.schedule
    if isinstance(schedule, PowerSchedule) and schedule.alpha == 1.0:
        power = schedule.C * params.pi
        if power < 1.0:
            remainder = log_terms[-1] + math.log(horizon / (1.0 - power))
            log_tail = np.logaddexp(log_tail, remainder)

    companion = companion_processes(traj, params)
    selected = (traj.n >= 1) & (traj.n <= horizon // 10)
    n = traj.n[selected]
    y = companion.y[selected]
    with np.errstate(divide='ignore'):
        # tail from k = n is indexed by gamma_{n+1}, position n
        ratio = np.exp(np.log(y) - log_tail[n])
    return n, ratio
