"""Fallibility and rate regimes of a step-size schedule.

Two code paths produce a :class:`RegimeReport`:

- :func:`classify_power_family` reads the decision table of the family
  gamma_n = (C / (C' + n)) ** alpha directly from (alpha, C, pa, pb);
- :func:`classify_schedule` composes the four general checkers, which only
  look at series verdicts, and works for any schedule.

On power schedules both paths must agree.
"""
from banditlab.schedule import (
    CONVERGES, DIVERGES, INCONCLUSIVE, HOLDS, FAILS, CLOSED_FORM, NUMERIC,
    DEFAULT_BUDGET, LIMINF_TOLERANCE, LIMINF_WINDOW,
    SUM_GAMMA_SQ, SUM_EXP_MINUS_PA_GAMMA, SUM_PROD_ONE_MINUS_PB_GAMMA,
    SUM_PROD_ONE_MINUS_PA_GAMMA, SUM_GAMMA_EPS_PLUS, WEAK_FALLIBLE,
    ConstantSchedule, PowerSchedule, SeriesVerdict, at_least, strictly_above,
    check_liminf_condition, series_verdict)
from banditlab.exc import ValidationError
from banditlab.util import SCHEMA_VERSION


FALLIBLE = 'fallible'
INFALLIBLE = 'infallible'
UNKNOWN = 'unknown'

POSSIBLE = 'possible'
NOT_POSSIBLE = 'not-possible'

DICHOTOMY = 'dichotomy'
NO_DICHOTOMY = 'no-dichotomy'

SLOW = 'slow'
FAST = 'fast'
ZERO = 'zero'

ALMOST_SURE = 'almost-sure'
POSITIVE_PROBABILITY = 'positive-probability'
UNDETERMINED = 'undetermined'

# regime labels, in the order they appear as C grows
LABELS = ('slow-only', 'coexistence', 'fast', 'fallible')


class RateDescriptor(object):
    """A convergence rate exp(-coefficient * Gamma_n).

    When gamma_n = C / (C' + n), Gamma_n = C log n + O(1) and the rate is
    the power n^-exponent with exponent = coefficient * C.
    """

    def __init__(self, kind, coefficient, occurrence=None, exponent=None):
        self.kind = kind
        self.coefficient = coefficient
        self.occurrence = occurrence
        self.exponent = exponent

    @property
    def text(self):
        if self.exponent is not None:
            return 'n^-%.2f' % self.exponent
        return 'exp(-%.2f Gamma_n)' % self.coefficient

    @property
    def domain(self):
        return 'log-n' if self.exponent is not None else 'gamma'

    def as_dict(self):
        return {'rate': self.kind, 'coefficient': self.coefficient,
                'exponent': self.exponent, 'occurrence': self.occurrence,
                'domain': self.domain, 'descriptor': self.text}

    def __eq__(self, other):
        if not isinstance(other, RateDescriptor):
            return False
        return self.as_dict() == other.as_dict()

    def __repr__(self):
        return '<RateDescriptor %s %s %s>' % (self.kind, self.text,
                                              self.occurrence)


class CheckResult(object):
    """Outcome of one general checker; unpacks as (verdict, evidence)."""

    def __init__(self, verdict, evidence, coexistence=None):
        self.verdict = verdict
        self.evidence = evidence
        self.coexistence = coexistence

    def __iter__(self):
        return iter((self.verdict, self.evidence))

    def as_dict(self):
        res = {'verdict': self.verdict,
               'evidence': [_evidence_dict(item) for item in self.evidence]}
        if self.coexistence is not None:
            res['coexistence'] = self.coexistence
        return res

    def __repr__(self):
        return '<CheckResult %s>' % self.verdict


def _evidence_dict(item):
    return {'condition': item.kind, 'verdict': item.verdict,
            'method': item.method, 'detail': item.evidence}


class RegimeReport(object):

    def __init__(self, fallibility, rate_to_zero, rates_to_one, coexistence,
                 evidence, schedule=None, params=None):
        self.fallibility = fallibility
        self.rate_to_zero = rate_to_zero
        self.rates_to_one = rates_to_one
        self.coexistence = coexistence
        self.evidence = evidence
        self.schedule = schedule
        self.params = params
        self.notes = []
        if fallibility == FALLIBLE:
            self.notes.append('rates to 1 are conditional on non-failure')

        if fallibility == FALLIBLE and not self.has_trap_evidence():
            raise ValueError('a fallible report needs a converging trap '
                             'series in its evidence')

    def has_trap_evidence(self):
        return any(item.kind in (SUM_PROD_ONE_MINUS_PB_GAMMA, WEAK_FALLIBLE)
                   and item.verdict == CONVERGES for item in self.evidence)

    @property
    def label(self):
        return regime_label(self)

    def exponents_to_one(self):
        """{'slow': x, 'fast': y} for the rates reported to 1."""
        return dict((rate.kind, rate.exponent if rate.exponent is not None
                     else rate.coefficient) for rate in self.rates_to_one)

    def as_dict(self):
        res = {'schema_version': SCHEMA_VERSION,
               'fallibility': self.fallibility,
               'rate_to_zero': (self.rate_to_zero.as_dict()
                                if self.rate_to_zero is not None
                                else 'not-applicable'),
               'rates_to_one': [rate.as_dict() for rate in self.rates_to_one],
               'coexistence': self.coexistence,
               'label': self.label,
               'notes': list(self.notes),
               'evidence': [_evidence_dict(item) for item in self.evidence]}
        if self.schedule is not None:
            res['schedule'] = self.schedule.spec
        if self.params is not None:
            res['params'] = self.params.as_dict()
        return res

    def __str__(self):
        return describe(self)


#
# Parametric family
#
def classify_power_family(alpha, C, params):
    """The decision table for gamma_n = (C / (C + n)) ** alpha."""
    schedule = PowerSchedule(C, C, alpha)

    def verdict(kind):
        return series_verdict(kind, schedule, params)

    evidence = [verdict(SUM_GAMMA_SQ)]

    if alpha < 1.0:
        if evidence[0].verdict == CONVERGES:
            evidence.append(verdict(SUM_PROD_ONE_MINUS_PB_GAMMA))
        else:
            evidence.append(verdict(WEAK_FALLIBLE))
        evidence.append(verdict(SUM_GAMMA_EPS_PLUS))
        rate_to_zero = RateDescriptor(ZERO, params.pb)
        rates = [RateDescriptor(FAST, params.pa, ALMOST_SURE)]
        return RegimeReport(FALLIBLE, rate_to_zero, rates, False, evidence,
                            schedule, params)

    evidence.append(verdict(SUM_PROD_ONE_MINUS_PB_GAMMA))
    evidence.append(verdict(SUM_GAMMA_EPS_PLUS))
    evidence.append(verdict(SUM_EXP_MINUS_PA_GAMMA))

    if strictly_above(C * params.pb, 1.0):
        fallibility = FALLIBLE
        rate_to_zero = RateDescriptor(ZERO, params.pb,
                                      exponent=C * params.pb)
    else:
        fallibility = INFALLIBLE
        rate_to_zero = None

    slow = RateDescriptor(SLOW, params.pi, exponent=C * params.pi)
    fast = RateDescriptor(FAST, params.pa, exponent=C * params.pa)
    coexistence = False

    if at_least(C * params.pi, 1.0):
        fast.occurrence = ALMOST_SURE
        rates = [fast]
    elif strictly_above(C * params.pa, 1.0):
        slow.occurrence = fast.occurrence = POSITIVE_PROBABILITY
        rates = [slow, fast]
        coexistence = True
    else:
        slow.occurrence = ALMOST_SURE
        rates = [slow]

    return RegimeReport(fallibility, rate_to_zero, rates, coexistence,
                        evidence, schedule, params)


#
# General checkers
#
def check_fallibility(schedule, params, budget=DEFAULT_BUDGET, rho=None):
    """Fallible, Infallible or Unknown.

    With sum gamma^2 finite, the schedule is fallible exactly when
    sum prod (1 - pb gamma_k) converges. Otherwise convergence of the
    weak series (the product damped by exp(-rho Gamma2_n)) is sufficient,
    and nothing is concluded when it diverges.
    """
    liminf = check_liminf_condition(schedule, params)
    evidence = [liminf]
    if liminf.verdict != HOLDS:
        return CheckResult(UNKNOWN, evidence)

    squares = series_verdict(SUM_GAMMA_SQ, schedule, params, budget)
    evidence.append(squares)

    if squares.verdict == CONVERGES:
        trap = series_verdict(SUM_PROD_ONE_MINUS_PB_GAMMA, schedule, params,
                              budget)
        evidence.append(trap)
        verdict = {CONVERGES: FALLIBLE,
                   DIVERGES: INFALLIBLE}.get(trap.verdict, UNKNOWN)
        return CheckResult(verdict, evidence)

    weak = series_verdict(WEAK_FALLIBLE, schedule, params, budget, rho=rho)
    evidence.append(weak)
    if weak.verdict == CONVERGES:
        return CheckResult(FALLIBLE, evidence)
    return CheckResult(UNKNOWN, evidence)


def check_fast_rate_possible(schedule, params, budget=DEFAULT_BUDGET):
    squares = series_verdict(SUM_GAMMA_SQ, schedule, params, budget)
    evidence = [squares]

    if squares.verdict == CONVERGES:
        fast = series_verdict(SUM_EXP_MINUS_PA_GAMMA, schedule, params,
                              budget)
        evidence.append(fast)
        verdict = {CONVERGES: POSSIBLE,
                   DIVERGES: NOT_POSSIBLE}.get(fast.verdict, UNKNOWN)
        return CheckResult(verdict, evidence)

    # sufficient only
    product = series_verdict(SUM_PROD_ONE_MINUS_PA_GAMMA, schedule, params,
                             budget)
    evidence.append(product)
    if product.verdict == CONVERGES:
        return CheckResult(POSSIBLE, evidence)
    return CheckResult(UNKNOWN, evidence)


def check_fast_rate_almost_sure(schedule, params, budget=DEFAULT_BUDGET):
    """Holds when sum gamma_n eps_n^+ converges: then the error series
    sum (1 - X_n) is finite almost surely on {X -> 1}.

    Known cases: constant schedules, (C / (C' + n)) ** alpha with alpha < 1,
    and C / (C' + n) with pi C >= 1.
    """
    result = series_verdict(SUM_GAMMA_EPS_PLUS, schedule, params, budget)
    verdict = {CONVERGES: HOLDS, DIVERGES: FAILS}.get(result.verdict, UNKNOWN)
    return CheckResult(verdict, [result])


def _eps_liminf(schedule, params):
    kind = 'liminf_eps_positive'
    if isinstance(schedule, ConstantSchedule):
        return SeriesVerdict(FAILS, CLOSED_FORM,
                             'constant: eps_n = -pi = %r' % -params.pi, kind)
    if isinstance(schedule, PowerSchedule):
        if schedule.alpha < 1.0:
            return SeriesVerdict(FAILS, CLOSED_FORM,
                                 'alpha<1: eps_n -> -pi', kind)
        eps = 1.0 / schedule.C - params.pi
        if at_least(schedule.C * params.pi, 1.0):
            return SeriesVerdict(FAILS, CLOSED_FORM,
                                 'alpha=1: eps_n = 1/C - pi = %r <= 0' % eps,
                                 kind)
        return SeriesVerdict(HOLDS, CLOSED_FORM,
                             'alpha=1: eps_n = 1/C - pi = %r > 0' % eps, kind)

    last = LIMINF_WINDOW
    if schedule.available is not None:
        last = min(last, schedule.available - 1)
    first = max(last // 2, 1)
    if last < first:
        return SeriesVerdict(INCONCLUSIVE, NUMERIC,
                             {'reason': 'schedule too short'}, kind)

    eps = schedule.reciprocal_increments(first, last + 1) - params.pi
    lowest = float(eps.min())
    detail = {'window': [first, last], 'min_eps': lowest}
    if lowest > LIMINF_TOLERANCE:
        verdict = HOLDS
    elif lowest < -LIMINF_TOLERANCE:
        verdict = FAILS
    else:
        verdict = INCONCLUSIVE
    return SeriesVerdict(verdict, NUMERIC, detail, kind)


def check_two_rate_dichotomy(schedule, params, budget=DEFAULT_BUDGET,
                             fast_possible=None):
    """Dichotomy when liminf eps_n > 0: the fast rate holds on {Y = 0} and
    the slow rate exp(-pi Gamma_n) on {Y > 0}. ``coexistence`` tells whether
    both sets have positive probability.
    """
    liminf = _eps_liminf(schedule, params)
    evidence = [liminf]

    if liminf.verdict == FAILS:
        return CheckResult(NO_DICHOTOMY, evidence, coexistence=False)
    if liminf.verdict != HOLDS:
        return CheckResult(UNKNOWN, evidence, coexistence=False)

    if fast_possible is None:
        fast_possible = check_fast_rate_possible(schedule, params, budget)
    evidence.extend(fast_possible.evidence)
    return CheckResult(DICHOTOMY, evidence,
                       coexistence=fast_possible.verdict == POSSIBLE)


def _descriptor(kind, coefficient, occurrence, schedule):
    exponent = None
    if isinstance(schedule, PowerSchedule) and schedule.alpha == 1.0:
        exponent = coefficient * schedule.C
    return RateDescriptor(kind, coefficient, occurrence, exponent)


def classify_schedule(schedule, params, budget=DEFAULT_BUDGET, rho=None):
    """Composes the general checkers into a :class:`RegimeReport`."""
    fallibility = check_fallibility(schedule, params, budget, rho)
    almost_sure = check_fast_rate_almost_sure(schedule, params, budget)
    evidence = list(fallibility.evidence) + list(almost_sure.evidence)

    rates = []
    coexistence = False
    if almost_sure.verdict == HOLDS:
        rates.append(_descriptor(FAST, params.pa, ALMOST_SURE, schedule))
    else:
        fast_possible = check_fast_rate_possible(schedule, params, budget)
        dichotomy = check_two_rate_dichotomy(schedule, params, budget,
                                             fast_possible)
        known = set(item.kind for item in evidence)
        evidence.extend(item for item in dichotomy.evidence
                        if item.kind not in known)
        if dichotomy.verdict == DICHOTOMY:
            if fast_possible.verdict == POSSIBLE:
                rates.append(_descriptor(SLOW, params.pi,
                                         POSITIVE_PROBABILITY, schedule))
                rates.append(_descriptor(FAST, params.pa,
                                         POSITIVE_PROBABILITY, schedule))
                coexistence = True
            elif fast_possible.verdict == NOT_POSSIBLE:
                rates.append(_descriptor(SLOW, params.pi, ALMOST_SURE,
                                         schedule))
            else:
                rates.append(_descriptor(SLOW, params.pi, UNDETERMINED,
                                         schedule))

    rate_to_zero = None
    if fallibility.verdict == FALLIBLE:
        rate_to_zero = _descriptor(ZERO, params.pb, None, schedule)

    return RegimeReport(fallibility.verdict, rate_to_zero, rates,
                        coexistence, evidence, schedule, params)


def regime_label(report):
    if report.fallibility == FALLIBLE:
        return 'fallible'
    if report.coexistence:
        return 'coexistence'
    occurrences = dict((rate.kind, rate.occurrence)
                       for rate in report.rates_to_one)
    if occurrences.get(FAST) == ALMOST_SURE:
        return 'fast'
    if occurrences.get(SLOW) == ALMOST_SURE:
        return 'slow-only'
    return UNKNOWN


def describe(report):
    """One human-readable line, e.g.
    ``infallible; rate to 1: slow n^-0.40 only``."""
    if report.fallibility == UNKNOWN:
        head = 'fallibility unknown'
    else:
        head = report.fallibility

    parts = [head]
    if report.rate_to_zero is not None:
        parts.append('rate to 0: %s' % report.rate_to_zero.text)

    prefix = 'rate to 1'
    if report.fallibility == FALLIBLE:
        prefix += ' (conditional on non-failure)'

    rates = dict((rate.kind, rate) for rate in report.rates_to_one)
    if report.coexistence:
        body = 'slow %s and fast %s coexist' % (rates[SLOW].text,
                                                rates[FAST].text)
    elif FAST in rates and rates[FAST].occurrence == ALMOST_SURE:
        body = 'fast %s almost surely' % rates[FAST].text
    elif SLOW in rates and rates[SLOW].occurrence == ALMOST_SURE:
        body = 'slow %s only' % rates[SLOW].text
    elif SLOW in rates:
        body = 'slow %s, fast rate undetermined' % rates[SLOW].text
    else:
        body = 'undetermined'

    parts.append('%s: %s' % (prefix, body))
    return '; '.join(parts)


def tuning_guide(params):
    """Where to put C in gamma_n = C / (C + n) for a given edge.

    When 2 pb <= pa, every C in [1/pi, 1/pb] is both infallible and fast,
    and C = 1/pb gives the fastest infallible rate n^-(pa/pb). When
    pb < pa < 2 pb no choice of C is infallible and fast at once.
    """
    if params is None:
        raise ValidationError('tuning needs bandit parameters')

    thresholds = {'one_over_pa': 1.0 / params.pa,
                  'one_over_pi': 1.0 / params.pi,
                  'one_over_pb': 1.0 / params.pb}
    guide = {'thresholds': thresholds, 'infallible_fast': None,
             'fastest_infallible': None}

    if at_least(params.pa, 2 * params.pb):
        guide['infallible_fast'] = [thresholds['one_over_pi'],
                                    thresholds['one_over_pb']]
        guide['fastest_infallible'] = {'C': thresholds['one_over_pb'],
                                       'exponent': params.pa / params.pb}
    else:
        best = classify_power_family(1.0, thresholds['one_over_pb'], params)
        guide['fastest_infallible'] = {
            'C': thresholds['one_over_pb'],
            'label': best.label,
            'exponents': best.exponents_to_one()}

    blind = classify_power_family(1.0, 1.0, params)
    guide['blind_choice'] = {'C': 1.0, 'label': blind.label,
                             'exponent': params.pi}
    return guide
