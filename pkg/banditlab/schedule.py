"""Step-size (reward) schedules and the series that decide every regime.

A schedule is an immutable description of a sequence gamma_n, n >= 1, with
values in (0, 1). Three families are supported:

- ``constant:<gamma>``
- ``power:<C>,<C'>,<alpha>`` meaning gamma_n = (C / (C' + n)) ** alpha
- ``custom:<path>`` one decimal value per line, or any callable n -> gamma_n
  when built from Python.

Series verdicts are exact (closed form) for the constant and power families
and use a partial-sum heuristic for custom schedules.
"""
import math
import os

import numpy as np
from scipy import stats

from banditlab.exc import ScheduleError, ValidationError


# verdicts
CONVERGES = 'converges'
DIVERGES = 'diverges'
INCONCLUSIVE = 'inconclusive'
HOLDS = 'holds'
FAILS = 'fails'

# methods
CLOSED_FORM = 'closed-form'
NUMERIC = 'numeric-partial-sum'

# series kinds
SUM_GAMMA_SQ = 'sum_gamma_sq'
SUM_GAMMA_SQ_EXP_PI_GAMMA = 'sum_gamma_sq_exp_pi_gamma'
SUM_EXP_MINUS_PA_GAMMA = 'sum_exp_minus_pa_gamma'
SUM_PROD_ONE_MINUS_PB_GAMMA = 'sum_prod_one_minus_pb_gamma'
SUM_PROD_ONE_MINUS_PA_GAMMA = 'sum_prod_one_minus_pa_gamma'
SUM_GAMMA_EPS_PLUS = 'sum_gamma_eps_plus'
WEAK_FALLIBLE = 'weak_fallible'

SERIES_KINDS = (SUM_GAMMA_SQ, SUM_GAMMA_SQ_EXP_PI_GAMMA,
                SUM_EXP_MINUS_PA_GAMMA, SUM_PROD_ONE_MINUS_PB_GAMMA,
                SUM_PROD_ONE_MINUS_PA_GAMMA,
                SUM_GAMMA_EPS_PLUS, WEAK_FALLIBLE)

DEFAULT_BUDGET = 10 ** 6
TIE_TOLERANCE = 1e-12
LIMINF_TOLERANCE = 1e-12
LIMINF_WINDOW = 10 ** 4

# numeric heuristic bands on the fitted decay exponent q (a_n ~ n^-q)
CONVERGENCE_BAND = 1.2
DIVERGENCE_BAND = 0.8
MIN_NUMERIC_TERMS = 100
# log(1e300): partial sums beyond this are declared divergent
OVERFLOW_GUARD = 690.0


def at_least(a, b):
    """a >= b where ties within TIE_TOLERANCE count as equality."""
    return a > b or math.isclose(a, b, rel_tol=TIE_TOLERANCE,
                                 abs_tol=TIE_TOLERANCE)


def strictly_above(a, b):
    return not at_least(b, a)


def _fmt(value):
    res = repr(float(value))
    if res.endswith('.0'):
        res = res[:-2]
    return res


class StepSchedule(object):
    """Base class of the step-size families."""

    kind = ''
    # nonincreasing families satisfy the liminf condition
    nonincreasing = False

    def gammas(self, start, stop):
        """Returns gamma_n for start <= n < stop as a float array."""
        raise NotImplementedError()

    def reciprocal_increments(self, start, stop):
        """Returns 1/gamma_{n+1} - 1/gamma_n for start <= n < stop."""
        g = self.gammas(start, stop + 1)
        return 1.0 / g[1:] - 1.0 / g[:-1]

    def gamma(self, n):
        return float(self.gammas(n, n + 1)[0])

    @property
    def available(self):
        """Largest index defined, or None for an unbounded schedule."""
        return None

    @property
    def spec(self):
        raise NotImplementedError()

    def _check(self, values, start):
        bad = np.flatnonzero(~((values > 0.0) & (values < 1.0)))
        if len(bad) > 0:
            n = start + int(bad[0])
            raise ScheduleError('gamma_%d = %r is not in (0,1) for %s'
                                % (n, float(values[bad[0]]), self.spec))
        return values

    def __repr__(self):
        return '<%s %s>' % (self.__class__.__name__, self.spec)

    def __eq__(self, other):
        return isinstance(other, StepSchedule) and self.spec == other.spec

    def __hash__(self):
        return hash(self.spec)


class ConstantSchedule(StepSchedule):
    kind = 'constant'
    nonincreasing = True

    def __init__(self, gamma):
        gamma = float(gamma)
        if not 0.0 < gamma < 1.0:
            raise ScheduleError('gamma must lie in (0,1), got %r' % gamma)
        self.value = gamma

    @property
    def spec(self):
        return 'constant:%s' % _fmt(self.value)

    def gammas(self, start, stop):
        return np.full(max(stop - start, 0), self.value)

    def reciprocal_increments(self, start, stop):
        return np.zeros(max(stop - start, 0))


class PowerSchedule(StepSchedule):
    """gamma_n = (C / (C' + n)) ** alpha."""

    kind = 'power'
    nonincreasing = True

    def __init__(self, C, C_prime, alpha):
        self.C = float(C)
        self.C_prime = float(C_prime)
        self.alpha = float(alpha)
        if not self.C > 0:
            raise ScheduleError('C must be positive, got %r' % self.C)
        if not self.C_prime > 0:
            raise ScheduleError("C' must be positive, got %r" % self.C_prime)
        if not 0.0 < self.alpha <= 1.0:
            raise ScheduleError('alpha must lie in (0,1], got %r'
                                % self.alpha)

    @property
    def spec(self):
        return 'power:%s,%s,%s' % (_fmt(self.C), _fmt(self.C_prime),
                                   _fmt(self.alpha))

    def gammas(self, start, stop):
        n = np.arange(start, stop, dtype=float)
        values = self.C / (self.C_prime + n)
        if self.alpha != 1.0:
            values = values ** self.alpha
        return self._check(values, start)

    def reciprocal_increments(self, start, stop):
        size = max(stop - start, 0)
        if self.alpha == 1.0:
            # ((C'+n+1) - (C'+n)) / C, exactly
            return np.full(size, 1.0 / self.C)
        base = (self.C_prime + np.arange(start, stop, dtype=float))
        scaled = (base / self.C) ** self.alpha
        return scaled * np.expm1(self.alpha * np.log1p(1.0 / base))


class CustomSchedule(StepSchedule):
    """A schedule given by explicit values (gamma_1, gamma_2, ...) or by a
    callable n -> gamma_n."""

    kind = 'custom'

    def __init__(self, values=None, generator=None, path=None):
        if (values is None) == (generator is None):
            raise ScheduleError('a custom schedule needs values or a '
                                'generator (not both)')
        self.path = path
        self.generator = generator
        self.values = None
        if values is not None:
            values = np.asarray(values, dtype=float)
            if values.ndim != 1 or len(values) == 0:
                raise ScheduleError('a custom schedule needs at least '
                                    'one value')
            self.values = values
            self._check(values, 1)

    @classmethod
    def from_file(cls, path):
        values = []
        with open(path) as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if line == '' or line.startswith('#'):
                    continue
                try:
                    values.append(float(line))
                except ValueError:
                    raise ScheduleError('%s:%d: %r is not a decimal value'
                                        % (path, lineno, line))
        return cls(values=values, path=path)

    @property
    def available(self):
        if self.values is not None:
            return len(self.values)
        return None

    @property
    def spec(self):
        if self.path is not None:
            return 'custom:%s' % self.path
        if self.generator is not None:
            return 'custom:<%s>' % getattr(self.generator, '__name__',
                                           'generator')
        return 'custom:<%d values>' % len(self.values)

    def gammas(self, start, stop):
        if start < 1:
            raise ScheduleError('schedules are indexed from n=1')
        if self.values is not None:
            if stop - 1 > len(self.values):
                raise ScheduleError('%s defines %d terms, %d requested'
                                    % (self.spec, len(self.values), stop - 1))
            return self.values[start - 1:stop - 1]
        size = max(stop - start, 0)
        values = np.fromiter((self.generator(n) for n in range(start, stop)),
                             dtype=float, count=size)
        return self._check(values, start)


def parse_schedule(text, base_dir=None):
    """Parses the schedule grammar: ``constant:<gamma>``,
    ``power:<C>,<C'>,<alpha>`` or ``custom:<path>``.
    """
    if not isinstance(text, str) or ':' not in text:
        raise ScheduleError('schedule %r: expected constant:<gamma>, '
                            "power:<C>,<C'>,<alpha> or custom:<path>" % text)

    family, _, arguments = text.strip().partition(':')
    family = family.strip().lower()
    arguments = arguments.strip()

    if family == 'custom':
        path = arguments
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.exists(path):
            raise ScheduleError('custom schedule file %r not found' % path)
        return CustomSchedule.from_file(path)

    try:
        numbers = [float(arg) for arg in arguments.split(',')]
    except ValueError:
        raise ScheduleError('schedule %r: arguments must be decimal numbers'
                            % text)

    if family == 'constant':
        if len(numbers) != 1:
            raise ScheduleError('constant schedule takes one value')
        return ConstantSchedule(numbers[0])
    elif family == 'power':
        if len(numbers) != 3:
            raise ScheduleError("power schedule takes C,C',alpha")
        return PowerSchedule(*numbers)

    raise ScheduleError('unknown schedule family %r' % family)


#
# Accessors
#
def gamma_at(schedule, n):
    if n < 1:
        raise ScheduleError('n must be >= 1, got %r' % n)
    return schedule.gamma(n)


def cumulative(schedule, n):
    """Returns (Gamma_n, Gamma2_n), the exact partial sums of gamma_k and
    gamma_k ** 2 for k <= n. Gamma_0 = Gamma2_0 = 0."""
    if n < 0:
        raise ScheduleError('n must be >= 0, got %r' % n)
    if n == 0:
        return 0.0, 0.0
    g = schedule.gammas(1, n + 1)
    return math.fsum(g), math.fsum(g * g)


def epsilon_at(schedule, n, params):
    """epsilon_n = 1/gamma_{n+1} - 1/gamma_n - pi."""
    if n < 1:
        raise ScheduleError('n must be >= 1, got %r' % n)
    return float(schedule.reciprocal_increments(n, n + 1)[0]) - params.pi


class ScheduleDerived(object):
    """The derived series of a schedule over 1..n, as arrays indexed by
    position (position i holds index n = i + 1)."""

    def __init__(self, schedule, n, params=None):
        self.schedule = schedule
        self.n = np.arange(1, n + 1)
        self.gamma = schedule.gammas(1, n + 1)
        self.Gamma = np.cumsum(self.gamma)
        self.Gamma2 = np.cumsum(self.gamma * self.gamma)
        self.eps = None
        if params is not None:
            usable = n
            if schedule.available is not None:
                usable = min(n, schedule.available - 1)
            eps = np.full(n, np.nan)
            eps[:usable] = schedule.reciprocal_increments(1, usable + 1) \
                - params.pi
            self.eps = eps

    def row(self, k):
        i = k - 1
        res = {'n': k, 'gamma': float(self.gamma[i]),
               'Gamma': float(self.Gamma[i]),
               'Gamma2': float(self.Gamma2[i])}
        if self.eps is not None:
            res['eps'] = float(self.eps[i])
        return res


def derived(schedule, n, params=None):
    return ScheduleDerived(schedule, n, params)


#
# Verdicts
#
class SeriesVerdict(object):

    def __init__(self, verdict, method, evidence, kind=None):
        self.verdict = verdict
        self.method = method
        self.evidence = evidence
        self.kind = kind

    def as_dict(self):
        return {'kind': self.kind, 'verdict': self.verdict,
                'method': self.method, 'evidence': self.evidence}

    def __repr__(self):
        return '<SeriesVerdict %s %s (%s)>' % (self.kind, self.verdict,
                                               self.method)


def check_liminf_condition(schedule, params, window=None):
    """liminf 1/gamma_{n+1} - 1/gamma_n > -pi.

    Holds for any nonincreasing family. For custom schedules the infimum
    over ``window`` (an inclusive (first, last) index pair) is compared with
    -pi.
    """
    if schedule.nonincreasing:
        return SeriesVerdict(HOLDS, CLOSED_FORM,
                             '%s is nonincreasing' % schedule.kind,
                             kind='liminf_condition')

    if window is None:
        last = LIMINF_WINDOW
        if schedule.available is not None:
            last = min(last, schedule.available - 1)
        window = (1, last)

    first, last = window
    if last < first or first < 1:
        raise ValidationError('liminf window %r is empty' % (window,))

    increments = schedule.reciprocal_increments(first, last + 1)
    position = int(np.argmin(increments))
    infimum = float(increments[position])
    evidence = {'window': [first, last], 'infimum': infimum,
                'at': first + position, 'minus_pi': -params.pi}

    if abs(infimum + params.pi) <= LIMINF_TOLERANCE:
        verdict = INCONCLUSIVE
    elif infimum > -params.pi:
        verdict = HOLDS
    else:
        verdict = FAILS
    return SeriesVerdict(verdict, NUMERIC, evidence, kind='liminf_condition')


def default_rho(params):
    return params.pb * (1 - params.pb) / 4.0


def series_verdict(kind, schedule, params, budget=DEFAULT_BUDGET, rho=None):
    """Decides whether the series ``kind`` converges for ``schedule``."""
    if kind not in SERIES_KINDS:
        raise ValidationError('unknown series kind %r' % kind)

    if kind == WEAK_FALLIBLE:
        upper = params.pb * (1 - params.pb) / 2.0
        if rho is None:
            rho = default_rho(params)
        if not 0.0 < rho < upper:
            raise ValidationError('rho must lie in (0, pb(1-pb)/2) = '
                                  '(0, %r), got %r' % (upper, rho))

    if isinstance(schedule, ConstantSchedule):
        verdict, evidence = _constant_rule(kind, schedule, params)
    elif isinstance(schedule, PowerSchedule):
        verdict, evidence = _power_rule(kind, schedule, params)
    else:
        return _numeric_verdict(kind, schedule, params, budget, rho)

    return SeriesVerdict(verdict, CLOSED_FORM, evidence, kind=kind)


def _constant_rule(kind, schedule, params):
    gamma = schedule.value
    if kind == SUM_GAMMA_SQ:
        return DIVERGES, 'constant: gamma^2 = %r > 0' % (gamma * gamma)
    elif kind == SUM_GAMMA_SQ_EXP_PI_GAMMA:
        return DIVERGES, 'constant: terms grow like exp(pi gamma n)'
    elif kind == SUM_EXP_MINUS_PA_GAMMA:
        return CONVERGES, ('constant: geometric ratio exp(-pa gamma) = %r'
                           % math.exp(-params.pa * gamma))
    elif kind == SUM_PROD_ONE_MINUS_PB_GAMMA:
        return CONVERGES, ('constant: geometric ratio 1 - pb gamma = %r'
                           % (1 - params.pb * gamma))
    elif kind == SUM_PROD_ONE_MINUS_PA_GAMMA:
        return CONVERGES, ('constant: geometric ratio 1 - pa gamma = %r'
                           % (1 - params.pa * gamma))
    elif kind == SUM_GAMMA_EPS_PLUS:
        return CONVERGES, 'constant: epsilon_n = -pi < 0, the sum is 0'
    # WEAK_FALLIBLE: the extra factor exp(-rho gamma^2 n) only helps
    return CONVERGES, ('constant: geometric ratio 1 - pb gamma = %r'
                       % (1 - params.pb * gamma))


def _p_series(exponent, label):
    if strictly_above(exponent, 1.0):
        return CONVERGES, 'p-series exponent %s = %r > 1' % (label, exponent)
    return DIVERGES, 'p-series exponent %s = %r <= 1' % (label, exponent)


def _power_rule(kind, schedule, params):
    C, alpha = schedule.C, schedule.alpha
    note = ''
    if schedule.C_prime != C:
        note = " (C'=%s does not affect asymptotics)" % _fmt(schedule.C_prime)

    if alpha < 1.0:
        # Gamma_n ~ C^alpha n^(1-alpha) / (1-alpha): every exponential in
        # Gamma_n is stretched-exponential in n.
        if kind == SUM_GAMMA_SQ:
            verdict, evidence = _p_series(2 * alpha, '2*alpha')
        elif kind == SUM_GAMMA_SQ_EXP_PI_GAMMA:
            verdict = DIVERGES
            evidence = 'alpha<1: exp(pi Gamma_n) grows stretched-exponentially'
        elif kind == SUM_GAMMA_EPS_PLUS:
            verdict = CONVERGES
            evidence = ('alpha<1: epsilon_n -> -pi, epsilon_n^+ vanishes '
                        'eventually')
        else:
            verdict = CONVERGES
            evidence = ('alpha<1: terms decay like exp(-c n^(1-alpha)), '
                        'stretched-exponential')
        return verdict, evidence + note

    if kind == SUM_GAMMA_SQ:
        verdict, evidence = CONVERGES, 'alpha=1: gamma_n^2 ~ C^2 n^-2'
    elif kind == SUM_GAMMA_SQ_EXP_PI_GAMMA:
        verdict, evidence = _p_series(2 - C * params.pi, '2-C*pi')
    elif kind == SUM_EXP_MINUS_PA_GAMMA:
        verdict, evidence = _p_series(C * params.pa, 'C*pa')
    elif kind == SUM_PROD_ONE_MINUS_PA_GAMMA:
        verdict, evidence = _p_series(C * params.pa, 'C*pa')
    elif kind in (SUM_PROD_ONE_MINUS_PB_GAMMA, WEAK_FALLIBLE):
        # sum gamma^2 < inf: the exp(-rho Gamma2) factor has a positive limit
        verdict, evidence = _p_series(C * params.pb, 'C*pb')
    else:
        eps = 1.0 / C - params.pi
        if at_least(C * params.pi, 1.0):
            verdict = CONVERGES
            evidence = 'alpha=1: epsilon_n = 1/C - pi = %r <= 0' % eps
        else:
            verdict = DIVERGES
            evidence = ('alpha=1: epsilon_n = 1/C - pi = %r > 0 constant '
                        'and sum gamma_n diverges' % eps)
    return verdict, evidence + note


def _log_terms(kind, schedule, params, count, rho):
    g = schedule.gammas(1, count + 1)
    if kind == SUM_GAMMA_SQ:
        return 2 * np.log(g)
    elif kind == SUM_GAMMA_SQ_EXP_PI_GAMMA:
        return 2 * np.log(g) + params.pi * np.cumsum(g)
    elif kind == SUM_EXP_MINUS_PA_GAMMA:
        return -params.pa * np.cumsum(g)
    elif kind == SUM_PROD_ONE_MINUS_PB_GAMMA:
        return np.cumsum(np.log1p(-params.pb * g))
    elif kind == SUM_PROD_ONE_MINUS_PA_GAMMA:
        return np.cumsum(np.log1p(-params.pa * g))
    elif kind == SUM_GAMMA_EPS_PLUS:
        eps = schedule.reciprocal_increments(1, count + 1) - params.pi
        with np.errstate(divide='ignore'):
            return np.log(g) + np.log(np.maximum(eps, 0.0))
    # WEAK_FALLIBLE
    return -rho * np.cumsum(g * g) + np.cumsum(np.log1p(-params.pb * g))


def _numeric_verdict(kind, schedule, params, budget, rho):
    count = budget
    if schedule.available is not None:
        reserve = 1 if kind == SUM_GAMMA_EPS_PLUS else 0
        count = min(count, schedule.available - reserve)

    if count < MIN_NUMERIC_TERMS:
        return SeriesVerdict(INCONCLUSIVE, NUMERIC,
                             {'reason': 'only %d terms available' % count},
                             kind=kind)

    log_terms = _log_terms(kind, schedule, params, count, rho)
    log_partial = np.logaddexp.accumulate(log_terms)
    decades = [n for n in (10 ** k for k in range(1, 10)) if n <= count]
    evidence = {'terms': count,
                'log_partial_sums': [[n, float(log_partial[n - 1])]
                                     for n in decades + [count]]}

    if log_partial[-1] > OVERFLOW_GUARD:
        evidence['reason'] = 'partial sum beyond the overflow guard'
        return SeriesVerdict(DIVERGES, NUMERIC, evidence, kind=kind)

    first = max(count // 10, 1)
    tail = log_terms[first - 1:]
    n = np.arange(first, count + 1, dtype=float)
    finite = np.isfinite(tail)

    if not finite.any():
        evidence['reason'] = 'every term of the last decade vanishes'
        return SeriesVerdict(CONVERGES, NUMERIC, evidence, kind=kind)

    if finite.sum() < 10:
        evidence['reason'] = 'too few nonzero terms in the last decade'
        return SeriesVerdict(INCONCLUSIVE, NUMERIC, evidence, kind=kind)

    fit = stats.linregress(np.log(n[finite]), tail[finite])
    q = -float(fit.slope)
    evidence['decay_exponent'] = q
    evidence['window'] = [first, count]

    if q > CONVERGENCE_BAND:
        verdict = CONVERGES
    elif q < DIVERGENCE_BAND:
        verdict = DIVERGES
    else:
        verdict = INCONCLUSIVE
    return SeriesVerdict(verdict, NUMERIC, evidence, kind=kind)
