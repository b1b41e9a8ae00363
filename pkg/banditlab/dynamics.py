"""The two-armed bandit (Linear Reward-Inaction) recursion.

The state is tracked twice: ``x`` (the share of arm A) and ``d`` (its
complement 1 - x), each with its own multiplicative or additive update, so
that relative precision is kept near both absorbing boundaries.

Randomness: replicate ``r`` of a run seeded with ``seed`` draws from its own
Philox stream keyed by ``SeedSequence(seed, spawn_key=(r,))``, two doubles
(u, v) per step, in step order. A trajectory therefore only depends on
(params, schedule, x0, horizon, seed, replicate), never on how replicates are
grouped into batches or spread over workers.
"""
import csv
from collections import namedtuple

import numpy as np

from banditlab.exc import InvalidParameters, ValidationError


REWARD_A = 1
PENALTY_B = -1
NO_CHANGE = 0

BRANCH_NAMES = {REWARD_A: 'reward_a', PENALTY_B: 'penalty_b',
                NO_CHANGE: 'no_change'}

TRAJECTORY_HEADER = ('n', 'gamma', 'x', 'd', 'branch', 'deltaM')

# steps drawn per refill of the random streams
CHUNK = 1024


class BanditParams(object):
    """The unknown environment: success probabilities of both arms."""

    __slots__ = ('pa', 'pb', 'pi')

    def __init__(self, pa, pb):
        pa = float(pa)
        pb = float(pb)
        if not 0.0 < pb < pa < 1.0:
            raise InvalidParameters('requires 0 < pb < pa < 1 (got pa=%r, '
                                    'pb=%r)' % (pa, pb))
        self.pa = pa
        self.pb = pb
        self.pi = pa - pb

    def as_dict(self):
        return {'pa': self.pa, 'pb': self.pb, 'pi': self.pi}

    def __eq__(self, other):
        return (isinstance(other, BanditParams) and
                (self.pa, self.pb) == (other.pa, other.pb))

    def __hash__(self):
        return hash((self.pa, self.pb))

    def __repr__(self):
        return '<BanditParams pa=%r pb=%r>' % (self.pa, self.pb)


StatePair = namedtuple('StatePair', ['x', 'd'])

StepOutcome = namedtuple('StepOutcome', ['branch', 'delta_m', 'next'])


def lri_step(state, gamma, u, v, params):
    """One step of the recursion.

    Arm A is evaluated when ``u <= x`` and performs well when
    ``v <= pa``; arm B is evaluated otherwise and performs well when
    ``v <= pb``. 0 and 1 are absorbing.
    """
    x, d = state
    if x == 0.0 or d == 0.0:
        return StepOutcome(NO_CHANGE, 0.0, StatePair(x, d))

    reward = penalty = 0.0
    if u <= x:
        if v <= params.pa:
            branch = REWARD_A
            reward = d
            nxt = StatePair(x + gamma * d, d * (1.0 - gamma))
        else:
            branch = NO_CHANGE
            nxt = StatePair(x, d)
    elif v <= params.pb:
        branch = PENALTY_B
        penalty = x
        nxt = StatePair(x * (1.0 - gamma), d + gamma * x)
    else:
        branch = NO_CHANGE
        nxt = StatePair(x, d)

    delta_m = reward - penalty - params.pi * x * d
    return StepOutcome(branch, delta_m, nxt)


def branch_probabilities(x, params):
    """Probabilities of (RewardA, PenaltyB, NoChange) from state x."""
    if x == 0.0 or x == 1.0:
        return 0.0, 0.0, 1.0
    p_reward = x * params.pa
    p_penalty = (1.0 - x) * params.pb
    return p_reward, p_penalty, 1.0 - p_reward - p_penalty


def replicate_stream(seed, replicate):
    """The random stream of one replicate, keyed by (seed, replicate)."""
    if seed < 0 or replicate < 0:
        raise ValidationError('seeds and replicate indices must be >= 0')
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(replicate),))
    return np.random.Generator(np.random.Philox(sequence))


class RecordingPlan(object):
    """Which states a simulation keeps.

    :param points: number of log-uniformly spaced checkpoints in [1, N]
                   (N itself is always recorded, and so is n=0).
    :param full_branch_log: keep the branch of every step, needed to
                            recompute tail products.
    :param track_variation: accumulate the realized quadratic variation of
                            M and the summed conditional variances.
    """

    def __init__(self, points=512, full_branch_log=False,
                 track_variation=False):
        if points < 1:
            raise ValidationError('a recording plan needs at least one point')
        self.points = int(points)
        self.full_branch_log = full_branch_log
        self.track_variation = track_variation

    def checkpoints(self, horizon):
        grid = np.geomspace(1, horizon, num=self.points)
        grid = np.unique(np.rint(grid).astype(np.int64))
        grid = grid[(grid >= 1) & (grid <= horizon)]
        if len(grid) == 0 or grid[-1] != horizon:
            grid = np.append(grid, horizon)
        return np.concatenate(([0], grid))

    def as_dict(self):
        return {'points': self.points,
                'full_branch_log': self.full_branch_log,
                'track_variation': self.track_variation}


class Trajectory(object):
    """One simulated path, recorded at the checkpoints of its plan.

    Arrays ``n``, ``gamma``, ``Gamma``, ``x``, ``d``, ``branch``,
    ``delta_m``, ``log_theta`` and ``y`` are aligned on the checkpoints;
    position 0 is the initial state (gamma_0 = gamma_1 by convention).
    """

    def __init__(self, params, schedule, x0, horizon, seed, replicate, plan,
                 **tracks):
        self.params = params
        self.schedule = schedule
        self.x0 = x0
        self.horizon = horizon
        self.seed = seed
        self.replicate = replicate
        self.plan = plan

        self.n = tracks['n']
        self.gamma = tracks['gamma']
        self.Gamma = tracks['Gamma']
        self.x = tracks['x']
        self.d = tracks['d']
        self.branch = tracks['branch']
        self.delta_m = tracks['delta_m']
        self.log_theta = tracks['log_theta']
        self.y = tracks['y']
        self.branches = tracks.get('branches')
        self.last_reward = tracks['last_reward']
        self.last_penalty = tracks['last_penalty']
        self.error_sum = tracks['error_sum']
        self.error_sum_decade = tracks['error_sum_decade']
        self.quadratic_variation = tracks.get('quadratic_variation')
        self.conditional_variation = tracks.get('conditional_variation')

    @property
    def final(self):
        return StatePair(float(self.x[-1]), float(self.d[-1]))

    @property
    def states(self):
        return [StatePair(float(x), float(d)) for x, d in zip(self.x, self.d)]

    def __len__(self):
        return len(self.n)

    def __repr__(self):
        return ('<Trajectory %s x0=%r N=%d seed=%d replicate=%d>'
                % (self.schedule.spec, self.x0, self.horizon, self.seed,
                   self.replicate))

    def write_csv(self, fileobj):
        writer = csv.writer(fileobj, lineterminator='\n')
        writer.writerow(TRAJECTORY_HEADER)
        for i in range(len(self.n)):
            branch = 'initial' if i == 0 else BRANCH_NAMES[int(self.branch[i])]
            writer.writerow([int(self.n[i]), repr(float(self.gamma[i])),
                             repr(float(self.x[i])), repr(float(self.d[i])),
                             branch, repr(float(self.delta_m[i]))])


def _check_start(x0, horizon):
    if not 0.0 < x0 < 1.0:
        raise ValidationError('x0 must lie in (0,1), got %r' % x0)
    if horizon < 1:
        raise ValidationError('horizon must be >= 1, got %r' % horizon)


def simulate_batch(params, schedule, x0, horizon, seed, replicates,
                   plan=None, draws=None):
    """Runs the recursion for several replicates at once.

    The recursion is sequential in n; it is vectorized across replicates.
    When ``draws`` is given (an array of shape (horizon, 2) holding (u, v)
    per step), it replaces the random stream of the single replicate.

    Returns a list of :class:`Trajectory`, in the order of ``replicates``.
    """
    x0 = float(x0)
    _check_start(x0, horizon)
    plan = plan or RecordingPlan()
    replicates = list(replicates)
    size = len(replicates)

    if draws is not None:
        draws = np.asarray(draws, dtype=float)
        if size != 1 or draws.shape != (horizon, 2):
            raise ValidationError('explicit draws need one replicate and '
                                  'shape (horizon, 2)')
        if ((draws < 0.0) | (draws >= 1.0)).any():
            raise ValidationError('draws must lie in [0,1)')
        streams = None
    else:
        streams = [replicate_stream(seed, r) for r in replicates]

    gammas = schedule.gammas(1, horizon + 1)
    Gamma = np.cumsum(gammas)
    checkpoints = plan.checkpoints(horizon)
    points = len(checkpoints)
    pa, pb, pi = params.pa, params.pb, params.pi

    x = np.full(size, x0)
    d = np.full(size, 1.0 - x0)
    log_theta = np.zeros(size)
    y = d.copy()
    error_sum = np.zeros(size)
    error_sum_decade = np.zeros(size)
    decade = horizon // 10
    last_reward_n = np.zeros(size, dtype=np.int64)
    last_reward_x = x.copy()
    last_penalty_n = np.zeros(size, dtype=np.int64)
    last_penalty_d = d.copy()

    qv = cv = None
    if plan.track_variation:
        qv = np.zeros(size)
        cv = np.zeros(size)

    branch_log = None
    if plan.full_branch_log:
        branch_log = np.zeros((size, horizon), dtype=np.int8)

    rec_x = np.empty((size, points))
    rec_d = np.empty((size, points))
    rec_branch = np.zeros((size, points), dtype=np.int8)
    rec_dm = np.zeros((size, points))
    rec_theta = np.zeros((size, points))
    rec_y = np.empty((size, points))
    rec_x[:, 0] = x
    rec_d[:, 0] = d
    rec_y[:, 0] = y

    cursor = 1
    next_checkpoint = checkpoints[1] if points > 1 else -1
    n = 0

    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        while n < horizon:
            chunk = min(CHUNK, horizon - n)
            if streams is None:
                block = draws[n:n + chunk][None, :, :]
            else:
                block = np.stack([s.random((chunk, 2)) for s in streams])
            us = np.ascontiguousarray(block[:, :, 0].T)
            vs = np.ascontiguousarray(block[:, :, 1].T)

            for j in range(chunk):
                n += 1
                g = gammas[n - 1]
                u = us[j]
                v = vs[j]

                live = (x > 0.0) & (d > 0.0)
                pick_a = u <= x
                reward = live & pick_a & (v <= pa)
                penalty = live & ~pick_a & (v <= pb)

                dm = (np.where(reward, d, 0.0) - np.where(penalty, x, 0.0) -
                      pi * x * d)
                log_theta = log_theta + np.log1p(-(g * pi) * x)
                x_new = np.where(reward, x + g * d,
                                 np.where(penalty, x * (1.0 - g), x))
                d_new = np.where(reward, d * (1.0 - g),
                                 np.where(penalty, d + g * x, d))
                y = y - g * dm * np.exp(-log_theta)

                if qv is not None:
                    xd = x * d
                    qv += dm * dm
                    cv += xd * (pa * d + pb * x - pi * pi * xd)

                if branch_log is not None:
                    branch_log[:, n - 1] = reward.view(np.int8) - \
                        penalty.view(np.int8)

                if reward.any():
                    last_reward_n[reward] = n
                    last_reward_x[reward] = x_new[reward]
                if penalty.any():
                    last_penalty_n[penalty] = n
                    last_penalty_d[penalty] = d_new[penalty]

                x = x_new
                d = d_new
                error_sum += d
                if n == decade:
                    error_sum_decade = error_sum.copy()

                if n == next_checkpoint:
                    rec_x[:, cursor] = x
                    rec_d[:, cursor] = d
                    rec_branch[:, cursor] = reward.view(np.int8) - \
                        penalty.view(np.int8)
                    rec_dm[:, cursor] = dm
                    rec_theta[:, cursor] = log_theta
                    rec_y[:, cursor] = y
                    cursor += 1
                    if cursor < points:
                        next_checkpoint = checkpoints[cursor]

    rec_gamma = np.empty(points)
    rec_gamma[0] = gammas[0]
    rec_gamma[1:] = gammas[checkpoints[1:] - 1]
    rec_Gamma = np.zeros(points)
    rec_Gamma[1:] = Gamma[checkpoints[1:] - 1]

    trajectories = []
    for i, replicate in enumerate(replicates):
        tracks = {'n': checkpoints, 'gamma': rec_gamma, 'Gamma': rec_Gamma,
                  'x': rec_x[i], 'd': rec_d[i], 'branch': rec_branch[i],
                  'delta_m': rec_dm[i], 'log_theta': rec_theta[i],
                  'y': rec_y[i],
                  'last_reward': (int(last_reward_n[i]),
                                  float(last_reward_x[i])),
                  'last_penalty': (int(last_penalty_n[i]),
                                   float(last_penalty_d[i])),
                  'error_sum': float(error_sum[i]),
                  'error_sum_decade': float(error_sum_decade[i])}
        if branch_log is not None:
            tracks['branches'] = branch_log[i]
        if qv is not None:
            tracks['quadratic_variation'] = float(qv[i])
            tracks['conditional_variation'] = float(cv[i])
        trajectories.append(Trajectory(params, schedule, x0, horizon, seed,
                                       replicate, plan, **tracks))
    return trajectories


def simulate(params, schedule, x0, horizon, seed=0, plan=None, draws=None,
             replicate=0):
    """Simulates one trajectory. Deterministic given its arguments; the
    trajectory is replicate ``replicate`` of the run seeded with ``seed``.
    """
    return simulate_batch(params, schedule, x0, horizon, seed, [replicate],
                          plan=plan, draws=draws)[0]


def mean_recursion(params, schedule, x0, horizon, complement=False):
    """The mean algorithm x_{n+1} = x_n + gamma_{n+1} pi x_n (1 - x_n).

    Returns the array (x_0, ..., x_N); with ``complement`` also returns
    (1 - x_n) computed multiplicatively, which stays accurate when x_n is
    close to 1.
    """
    x0 = float(x0)
    if not 0.0 <= x0 <= 1.0:
        raise ValidationError('x0 must lie in [0,1], got %r' % x0)

    pi = params.pi
    xs = np.empty(horizon + 1)
    ds = np.empty(horizon + 1)
    x = xs[0] = x0
    d = ds[0] = 1.0 - x0

    for k, g in enumerate(schedule.gammas(1, horizon + 1).tolist(), 1):
        step = g * pi * x
        x = x + step * d
        d = d * (1.0 - step)
        xs[k] = x
        ds[k] = d

    if complement:
        return xs, ds
    return xs


def ode_solution(pi, x0, t):
    """Solution of the mean ODE x' = pi x (1 - x) started at x0."""
    if not 0.0 <= x0 <= 1.0:
        raise ValidationError('x0 must lie in [0,1], got %r' % x0)
    if t < 0:
        raise ValidationError('t must be >= 0, got %r' % t)
    if x0 == 0.0 or x0 == 1.0:
        return float(x0)
    return x0 / (x0 + (1.0 - x0) * np.exp(-pi * t))
