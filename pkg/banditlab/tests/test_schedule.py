import math
import os
import tempfile
import unittest

import numpy as np

from banditlab.dynamics import BanditParams
from banditlab.exc import ScheduleError, ValidationError
from banditlab import schedule as sch
from banditlab.schedule import (ConstantSchedule, PowerSchedule,
                                CustomSchedule, parse_schedule, gamma_at,
                                cumulative, epsilon_at, derived,
                                check_liminf_condition, series_verdict)
from banditlab.tests.support import rm_onexit


EULER_GAMMA = 0.5772156649015329


def alternating(n):
    return 0.1 if n % 2 == 0 else 0.9


class TestFamilies(unittest.TestCase):

    def setUp(self):
        self.params = BanditParams(0.6, 0.2)

    def test_gamma_at(self):
        self.assertEqual(gamma_at(PowerSchedule(2, 2, 1), 2), 0.5)
        self.assertEqual(gamma_at(ConstantSchedule(0.1), 7), 0.1)
        self.assertAlmostEqual(gamma_at(PowerSchedule(1, 1, 0.5), 3), 0.5,
                               places=15)

    def test_gamma_outside_unit_interval(self):
        # 3 / (1 + 1) > 1
        self.assertRaises(ScheduleError, gamma_at, PowerSchedule(3, 1, 1), 1)
        self.assertRaises(ScheduleError, gamma_at, ConstantSchedule(0.1), 0)
        self.assertRaises(ScheduleError, ConstantSchedule, 1.0)
        self.assertRaises(ScheduleError, PowerSchedule, 1, 1, 1.5)
        self.assertRaises(ScheduleError, PowerSchedule, 0, 1, 1)
        self.assertRaises(ScheduleError, CustomSchedule, values=[0.5, 1.2])

    def test_custom_values_error_names_the_term(self):
        with self.assertRaises(ScheduleError) as cm:
            CustomSchedule(values=[0.5, 1.2])
        self.assertEqual(str(cm.exception),
                         'gamma_2 = 1.2 is not in (0,1) for '
                         'custom:<2 values>')
        with self.assertRaises(ScheduleError) as cm:
            CustomSchedule(values=[0.0], path='gammas.txt')
        self.assertIn('custom:gammas.txt', str(cm.exception))

    def test_power_alpha_one_is_exact(self):
        power = PowerSchedule(2.5, 2.5, 1)
        n = np.arange(1, 1001)
        np.testing.assert_array_equal(power.gammas(1, 1001), 2.5 / (2.5 + n))

    def test_cumulative(self):
        Gamma, Gamma2 = cumulative(ConstantSchedule(0.1), 10)
        self.assertAlmostEqual(Gamma, 1.0, places=14)
        self.assertAlmostEqual(Gamma2, 0.1, places=14)

        Gamma, Gamma2 = cumulative(PowerSchedule(1, 1, 1), 3)
        self.assertAlmostEqual(Gamma, 13 / 12., places=14)
        self.assertAlmostEqual(Gamma2, 1 / 4. + 1 / 9. + 1 / 16., places=14)

        self.assertEqual(cumulative(PowerSchedule(1, 1, 1), 0), (0.0, 0.0))

    def test_cumulative_logarithmic_growth(self):
        # Gamma_n = 2 (H_{n+2} - 3/2) = 2 ln n + 2 (euler - 3/2) + o(1)
        n = 10 ** 5
        Gamma, _ = cumulative(PowerSchedule(2, 2, 1), n)
        direct = math.fsum(2.0 / (2 + k) for k in range(1, n + 1))
        self.assertAlmostEqual(Gamma, direct, places=10)
        self.assertAlmostEqual(Gamma - 2 * math.log(n),
                               2 * (EULER_GAMMA - 1.5), delta=1e-3)

    def test_cumulative_increments(self):
        for schedule in (ConstantSchedule(0.3), PowerSchedule(1, 1, 1),
                         PowerSchedule(2, 3, 0.7)):
            rows = derived(schedule, 2000)
            self.assertTrue((np.diff(rows.Gamma) > 0).all())
            self.assertTrue((rows.gamma > 0).all())
            self.assertTrue((rows.gamma < 1).all())
            for n in (2, 10, 1999):
                previous, previous2 = cumulative(schedule, n - 1)
                Gamma, Gamma2 = cumulative(schedule, n)
                gamma = gamma_at(schedule, n)
                self.assertLess(abs(Gamma - previous - gamma),
                                1e-12 * Gamma)
                self.assertLess(abs(Gamma2 - previous2 - gamma ** 2),
                                1e-12 * Gamma2)

    def test_epsilon(self):
        params = self.params
        power = PowerSchedule(2, 2, 1)
        for n in (1, 10, 10 ** 3, 10 ** 6):
            self.assertEqual(epsilon_at(power, n, params), 1 / 2. - params.pi)
        self.assertAlmostEqual(epsilon_at(power, 5, params), 0.1, places=12)
        self.assertAlmostEqual(epsilon_at(ConstantSchedule(0.1), 3, params),
                               -0.4, places=12)
        eps = epsilon_at(PowerSchedule(1, 1, 0.5), 10 ** 4, params)
        self.assertLess(abs(eps + 0.4), 1e-2)

    def test_derived_rows(self):
        rows = derived(PowerSchedule(1, 1, 1), 3, self.params)
        row = rows.row(3)
        self.assertEqual(row['n'], 3)
        self.assertEqual(row['gamma'], 0.25)
        self.assertAlmostEqual(row['Gamma'], 13 / 12., places=14)
        self.assertAlmostEqual(row['eps'], 0.6, places=12)

    def test_custom(self):
        custom = CustomSchedule(values=[0.5, 0.25, 0.125])
        self.assertEqual(custom.available, 3)
        self.assertEqual(gamma_at(custom, 2), 0.25)
        self.assertRaises(ScheduleError, custom.gammas, 1, 5)

        generated = CustomSchedule(generator=alternating)
        self.assertEqual(list(generated.gammas(1, 5)), [0.9, 0.1, 0.9, 0.1])
        self.assertIsNone(generated.available)
        self.assertRaises(ScheduleError, CustomSchedule)


class TestParsing(unittest.TestCase):

    def test_grammar(self):
        self.assertEqual(parse_schedule('constant:0.1'), ConstantSchedule(0.1))
        self.assertEqual(parse_schedule('power:1,1,1'),
                         PowerSchedule(1, 1, 1))
        self.assertEqual(parse_schedule(' power: 2, 3, 0.5 ').spec,
                         'power:2,3,0.5')

    def test_errors(self):
        for text in ('', 'constant', 'linear:0.1', 'constant:abc',
                     'power:1,1', 'constant:0.1,0.2'):
            self.assertRaises(ScheduleError, parse_schedule, text)

        try:
            parse_schedule('power:1,1,1.5')
        except ScheduleError as e:
            self.assertIn('alpha must lie in (0,1]', str(e))
        else:
            raise AssertionError('alpha = 1.5 accepted')

    def test_custom_file(self):
        fd, path = tempfile.mkstemp()
        rm_onexit(path)
        with os.fdopen(fd, 'w') as f:
            f.write('# a short schedule\n0.5\n\n0.25\n0.125\n')

        schedule = parse_schedule('custom:%s' % path)
        self.assertEqual(list(schedule.gammas(1, 4)), [0.5, 0.25, 0.125])

        relative = parse_schedule('custom:%s' % os.path.basename(path),
                                  base_dir=os.path.dirname(path))
        self.assertEqual(relative.available, 3)

        self.assertRaises(ScheduleError, parse_schedule,
                          'custom:/does/not/exist')

        with open(path, 'w') as f:
            f.write('0.5\nhalf\n')
        try:
            parse_schedule('custom:%s' % path)
        except ScheduleError as e:
            self.assertIn(':2:', str(e))
        else:
            raise AssertionError('bad line accepted')


class TestVerdicts(unittest.TestCase):

    def setUp(self):
        self.params = BanditParams(0.6, 0.2)

    def verdict(self, kind, schedule, params=None, **kw):
        return series_verdict(kind, schedule, params or self.params, **kw)

    def test_liminf(self):
        res = check_liminf_condition(ConstantSchedule(0.1), self.params)
        self.assertEqual(res.verdict, sch.HOLDS)
        res = check_liminf_condition(PowerSchedule(2, 2, 1), self.params)
        self.assertEqual(res.verdict, sch.HOLDS)
        self.assertEqual(res.method, sch.CLOSED_FORM)

        res = check_liminf_condition(CustomSchedule(generator=alternating),
                                     self.params, window=(1, 100))
        self.assertEqual(res.verdict, sch.FAILS)
        self.assertAlmostEqual(res.evidence['infimum'], 1 / 0.9 - 1 / 0.1,
                               places=10)

        self.assertRaises(ValidationError, check_liminf_condition,
                          CustomSchedule(generator=alternating), self.params,
                          (10, 1))

    def test_liminf_tie(self):
        # 1/gamma_{n+1} - 1/gamma_n = -pi exactly on the window
        pi = self.params.pi

        def drifting(n):
            return 1.0 / (100.0 - pi * n)

        res = check_liminf_condition(CustomSchedule(generator=drifting),
                                     self.params, window=(1, 50))
        self.assertEqual(res.verdict, sch.INCONCLUSIVE)

    def test_closed_form_power(self):
        params = self.params
        power = PowerSchedule(2, 2, 1)    # C pi = 0.8
        res = self.verdict(sch.SUM_GAMMA_SQ_EXP_PI_GAMMA, power)
        self.assertEqual(res.verdict, sch.CONVERGES)
        self.assertEqual(res.method, sch.CLOSED_FORM)

        # C pa = 1.2, then 0.9
        res = self.verdict(sch.SUM_EXP_MINUS_PA_GAMMA, power)
        self.assertEqual(res.verdict, sch.CONVERGES)
        res = self.verdict(sch.SUM_EXP_MINUS_PA_GAMMA,
                           PowerSchedule(1.5, 1.5, 1))
        self.assertEqual(res.verdict, sch.DIVERGES)

        res = self.verdict(sch.SUM_PROD_ONE_MINUS_PB_GAMMA,
                           PowerSchedule(4, 4, 1), BanditParams(0.6, 0.3))
        self.assertEqual(res.verdict, sch.CONVERGES)
        res = self.verdict(sch.SUM_PROD_ONE_MINUS_PB_GAMMA,
                           PowerSchedule(1, 1, 1), params)
        self.assertEqual(res.verdict, sch.DIVERGES)

    def test_closed_form_constant(self):
        constant = ConstantSchedule(0.1)
        res = self.verdict(sch.SUM_PROD_ONE_MINUS_PB_GAMMA, constant)
        self.assertEqual(res.verdict, sch.CONVERGES)
        for gamma in (0.01, 0.5, 0.99):
            res = self.verdict(sch.SUM_GAMMA_EPS_PLUS, ConstantSchedule(gamma))
            self.assertEqual(res.verdict, sch.CONVERGES)
        res = self.verdict(sch.SUM_GAMMA_SQ, constant)
        self.assertEqual(res.verdict, sch.DIVERGES)

    def test_threshold_ties(self):
        # C = 1/pi = 2.5: the fast-rate condition is met on the tie
        res = self.verdict(sch.SUM_GAMMA_EPS_PLUS, PowerSchedule(2.5, 2.5, 1))
        self.assertEqual(res.verdict, sch.CONVERGES)
        # C pb = 1 exactly: the p-series diverges
        res = self.verdict(sch.SUM_PROD_ONE_MINUS_PB_GAMMA,
                           PowerSchedule(5, 5, 1))
        self.assertEqual(res.verdict, sch.DIVERGES)

    def test_c_prime_noted(self):
        res = self.verdict(sch.SUM_GAMMA_SQ, PowerSchedule(1, 3, 1))
        self.assertIn("C'=3", res.evidence)

    def test_weak_fallible_rho(self):
        power = PowerSchedule(1, 1, 0.5)
        res = self.verdict(sch.WEAK_FALLIBLE, power)
        self.assertEqual(res.verdict, sch.CONVERGES)
        upper = self.params.pb * (1 - self.params.pb) / 2
        self.assertRaises(ValidationError, self.verdict, sch.WEAK_FALLIBLE,
                          power, rho=upper)
        self.assertRaises(ValidationError, self.verdict, sch.WEAK_FALLIBLE,
                          power, rho=0)
        self.assertEqual(sch.default_rho(self.params), upper / 2)

    def test_unknown_kind(self):
        self.assertRaises(ValidationError, self.verdict, 'sum_of_nothing',
                          ConstantSchedule(0.1))

    def test_numeric_matches_closed_form(self):
        budget = 10 ** 5
        cases = [(sch.SUM_GAMMA_SQ, PowerSchedule(1, 1, 1)),
                 (sch.SUM_GAMMA_SQ, PowerSchedule(1, 1, 0.3)),
                 (sch.SUM_PROD_ONE_MINUS_PB_GAMMA, PowerSchedule(2, 2, 1)),
                 (sch.SUM_PROD_ONE_MINUS_PB_GAMMA, PowerSchedule(8, 8, 1)),
                 (sch.SUM_EXP_MINUS_PA_GAMMA, PowerSchedule(3, 3, 1))]
        for kind, power in cases:
            closed = self.verdict(kind, power)
            custom = CustomSchedule(values=power.gammas(1, budget + 1))
            numeric = self.verdict(kind, custom, budget=budget)
            self.assertEqual(numeric.method, sch.NUMERIC)
            self.assertEqual(numeric.verdict, closed.verdict,
                             '%s on %s' % (kind, power.spec))

    def test_numeric_gamma_eps_plus(self):
        # odd indices jump from 0.1 to 0.9: eps_n^+ stays large forever
        custom = CustomSchedule(generator=alternating)
        res = self.verdict(sch.SUM_GAMMA_EPS_PLUS, custom, budget=5000)
        self.assertEqual(res.verdict, sch.DIVERGES)
        self.assertEqual(res.evidence['terms'], 5000)

        # eps_n = -pi: every term vanishes
        flat = CustomSchedule(values=[0.1] * 1000)
        res = self.verdict(sch.SUM_GAMMA_EPS_PLUS, flat, budget=1000)
        self.assertEqual(res.verdict, sch.CONVERGES)
        self.assertEqual(res.evidence['terms'], 999)

    def test_numeric_too_short(self):
        res = self.verdict(sch.SUM_GAMMA_SQ, CustomSchedule(values=[0.5] * 10))
        self.assertEqual(res.verdict, sch.INCONCLUSIVE)

    def test_numeric_overflow_guard(self):
        # exp(pi Gamma_n) with constant-like steps blows up
        custom = CustomSchedule(values=[0.5] * 20000)
        res = self.verdict(sch.SUM_GAMMA_SQ_EXP_PI_GAMMA, custom,
                           budget=20000)
        self.assertEqual(res.verdict, sch.DIVERGES)
        self.assertIn('overflow', res.evidence['reason'])
