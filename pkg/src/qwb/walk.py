"""Center-restricted random walk on the label set: transition kernels,
n-step probabilities, Green functions with tail certificates, and central
Martin kernels.

Truncation discipline.  Every kernel is an (x_max+1)^2 matrix; rows x with
x + band <= x_max are exactly stochastic, rows above that are truncated.
An n-step power is trusted only on rows x with x + n*band <= x_max, since
no path of length n from x can then touch the truncation boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivisionByZero, NotTransient, OutOfRange, TruncationTooSmall
from .fusion import Measure, convolution_power, fusion_range, qdim

RATIO_WINDOW = 10          # number of two-step ratios entering the certificate
RATIO_BAR = 1.0 - 1e-6     # ratios at or above this mean "not transient"
STAGNATION_LIMIT = 256     # consecutive failed certificates before giving up
N_MAX_DEFAULT = 4096


@dataclass
class Kernel:
    x_max: int
    band: int
    q: float
    p: np.ndarray         # (x_max+1, x_max+1)
    steps: int = 1        # how many applications of the one-step kernel

    @property
    def valid_max(self) -> int:
        """Largest row index unaffected by truncation."""
        return self.x_max - self.steps * self.band

    def interior_rows(self):
        return range(0, max(self.valid_max, -1) + 1)


@dataclass
class GreenTable:
    values: dict = field(default_factory=dict)   # (x, y) -> float
    tail_bound: float = 0.0
    n_used: int = 0


def transition_matrix(mu: Measure, q: float, x_max: int) -> Kernel:
    """One-step kernel p(x, z) = sum_y mu(y) mult(x,y,z) qdim(z) /
    (qdim(x) qdim(y))."""
    band = mu.max_label()
    if x_max < band:
        raise TruncationTooSmall(f"x_max = {x_max} < max support {band}")
    d = np.array([qdim(x, q) for x in range(x_max + 1)])
    p = np.zeros((x_max + 1, x_max + 1))
    for y, wy in mu.items():
        if y == 0:
            p += wy * np.eye(x_max + 1)
            continue
        for x in range(x_max + 1):
            c = wy / (d[x] * d[y])
            for z in fusion_range(x, y):
                if z <= x_max:
                    p[x, z] += c * d[z]
    return Kernel(x_max=x_max, band=band, q=q, p=p, steps=1)


def n_step(K: Kernel, n: int) -> Kernel:
    """n-fold kernel power; row x is valid only when x + n*band <= x_max."""
    if n < 0:
        raise OutOfRange("n must be >= 0")
    if K.steps != 1:
        raise OutOfRange("n_step expects a one-step kernel")
    if n == 0:
        return Kernel(K.x_max, K.band, K.q, np.eye(K.x_max + 1), steps=0)
    if K.x_max - n * K.band < 0:
        raise TruncationTooSmall(
            f"no valid rows: x_max = {K.x_max}, n*band = {n * K.band}"
        )
    return Kernel(K.x_max, K.band, K.q, np.linalg.matrix_power(K.p, n), steps=n)


def _tail_certificate(seq):
    """Geometric tail data for a nonnegative term sequence.

    Returns (ratio, last_pair_sum).  ratio is the maximum of a_{n+2}/a_n
    over the last RATIO_WINDOW available pairs (two-step ratios, so parity
    interleaving does not produce spurious zeros); when ratio < 1 the tail
    of the series past the end is bounded by last_pair_sum*ratio/(1-ratio).
    A ratio of None means no two nonzero terms two steps apart exist yet.
    """
    ratios = []
    for i in range(len(seq) - 1, 1, -1):
        if seq[i] > 0.0 and seq[i - 2] > 0.0:
            ratios.append(seq[i] / seq[i - 2])
            if len(ratios) >= RATIO_WINDOW:
                break
    if not ratios:
        return None, 0.0
    last_pair = seq[-1] + (seq[-2] if len(seq) >= 2 else 0.0)
    return max(ratios), last_pair


def _certified_tail(seq, tol):
    """Classify the tail of a term sequence: ('done', tail) when certified
    below tol, ('zero', 0.0) when the target was never reachable past the
    start, ('wait', None) while more terms are needed, ('bad', None) when
    the latest ratio estimate is not safely below 1."""
    ratio, last_pair = _tail_certificate(seq)
    if ratio is None:
        if all(t == 0.0 for t in seq[2:]) and len(seq) > 4:
            return "zero", 0.0
        return "wait", None
    if ratio >= RATIO_BAR:
        return "bad", None
    tail = last_pair * ratio / (1.0 - ratio)
    if tail < tol:
        return "done", tail
    return "wait", None


class _RowWalker:
    """Propagates the row vector e_x P^n on [0, X], growing X on demand."""

    def __init__(self, mu: Measure, q: float, x: int, x_needed: int,
                 n_budget: int = 256):
        self.mu, self.q, self.x = mu, q, x
        self.band = mu.max_label()
        self.x_needed = x_needed
        self.n_budget = n_budget
        self._reset()

    def _reset(self):
        self.X = self.x_needed + self.band * self.n_budget + 4
        self.K = transition_matrix(self.mu, self.q, self.X)
        v = np.zeros(self.X + 1)
        v[self.x] = 1.0
        self.rows = [v]

    def ensure(self, n: int):
        """Make rows 0..n available, enlarging the grid if needed."""
        while self.band > 0 and n > self.n_budget:
            self.n_budget *= 2
            old = len(self.rows)
            self._reset()
            # replay up to where we previously were
            for _ in range(old - 1):
                self.rows.append(self.rows[-1] @ self.K.p)
        while len(self.rows) <= n:
            self.rows.append(self.rows[-1] @ self.K.p)

    def term(self, n: int, y: int) -> float:
        self.ensure(n)
        return float(self.rows[n][y])


def _green_series(mu: Measure, q: float, x: int, y: int, tol: float,
                  n_max: int = N_MAX_DEFAULT, relative: bool = False):
    """Partial sums of p_n(x, y) with a two-step geometric tail certificate.

    A ratio estimate >= 1 early on just means the probability wave has not
    passed the target yet; NotTransient is raised only after the estimate
    fails to drop below 1 for STAGNATION_LIMIT consecutive steps.
    With relative=True the certificate targets tol * (partial sum), which
    matters for entries that are exponentially small in |x - y|.
    Returns (value, tail_bound, n_used).
    """
    walker = _RowWalker(mu, q, x, max(x, y))
    terms = []
    total = 0.0
    n = 0
    bad_streak = 0
    min_window = 2 * RATIO_WINDOW + 6
    while n <= n_max:
        a = walker.term(n, y)
        terms.append(a)
        total += a
        if n >= min_window:
            goal = tol * total if relative and total > 0.0 else tol
            state, tail = _certified_tail(terms, goal)
            if state in ("done", "zero"):
                return total, tail, n
            if state == "bad":
                bad_streak += 1
                if bad_streak > STAGNATION_LIMIT:
                    raise NotTransient(
                        f"ratio estimate stuck at or above 1 near n = {n}"
                    )
            else:
                bad_streak = 0
        n += 1
    raise NotTransient(f"no tail certificate after {n_max} terms")


def green_central(mu: Measure, q: float, x: int, y: int, tol: float,
                  relative: bool = False):
    """Green function G(x, y) = sum_n p_n(x, y), certified to tolerance tol
    (absolute by default, relative to the partial sum with relative=True).

    Returns (value, tail_bound, n_used).
    """
    if tol <= 0:
        raise OutOfRange("tol must be positive")
    qdim(0, q)  # validates q
    return _green_series(mu, q, x, y, tol, relative=relative)


def green_column(mu: Measure, q: float, x_window: int, tol: float,
                 n_max: int = N_MAX_DEFAULT):
    """g(x, 0) = sum_n p_n(x, 0) for all x <= x_window, each certified to
    relative tolerance tol.  Entries whose series is identically zero stay
    zero.  Returns (values array, worst tail, n_used)."""
    band = mu.max_label()
    if band == 0:
        raise NotTransient("measure with support {0} is never transient")
    X = x_window + band * 8 + 4
    K = transition_matrix(mu, q, X)
    M = np.eye(X + 1)
    hist = [[] for _ in range(x_window + 1)]
    totals = np.zeros(x_window + 1)
    n = 0
    bad_streak = 0
    min_window = 2 * RATIO_WINDOW + 6
    while n <= n_max:
        if n > 0:
            if n * band + x_window > X:
                X = x_window + band * max(2 * n, 8) + 4
                K = transition_matrix(mu, q, X)
                M = np.linalg.matrix_power(K.p, n)
            else:
                M = M @ K.p
        col = M[: x_window + 1, 0]
        totals += col
        for xx in range(x_window + 1):
            hist[xx].append(float(col[xx]))
        if n >= min_window:
            tails = []
            pending = False
            bad_any = False
            for xx in range(x_window + 1):
                goal = tol * totals[xx] if totals[xx] > 0 else tol
                state, tail = _certified_tail(hist[xx], goal)
                if state in ("done", "zero"):
                    tails.append(tail)
                elif state == "bad":
                    bad_any = True
                    break
                else:
                    pending = True
                    break
            if not pending and not bad_any:
                return totals, max(tails), n
            bad_streak = bad_streak + 1 if bad_any else 0
            if bad_streak > STAGNATION_LIMIT:
                raise NotTransient(f"column certificate stuck near n = {n}")
        n += 1
    raise NotTransient(f"no column certificate after {n_max} terms")


def green_row(mu: Measure, q: float, x: int, y_max: int, tol: float,
              n_max: int = N_MAX_DEFAULT) -> GreenTable:
    """All G(x, y) for y <= y_max in one propagation, with a joint
    certificate (every target's tail below tol)."""
    walker = _RowWalker(mu, q, x, max(x, y_max))
    table = np.zeros(y_max + 1)
    hist = [[] for _ in range(y_max + 1)]
    n = 0
    bad_streak = 0
    min_window = 2 * RATIO_WINDOW + 6
    while n <= n_max:
        walker.ensure(n)
        row = walker.rows[n][: y_max + 1]
        table += row
        for y in range(y_max + 1):
            hist[y].append(float(row[y]))
        if n >= min_window:
            tails = []
            pending = False
            bad_any = False
            for y in range(y_max + 1):
                state, tail = _certified_tail(hist[y], tol)
                if state in ("done", "zero"):
                    tails.append(tail)
                elif state == "bad":
                    bad_any = True
                    break
                else:
                    pending = True
                    break
            if not pending and not bad_any:
                g = GreenTable(tail_bound=max(tails), n_used=n)
                for y in range(y_max + 1):
                    g.values[(x, y)] = float(table[y])
                return g
            bad_streak = bad_streak + 1 if bad_any else 0
            if bad_streak > STAGNATION_LIMIT:
                raise NotTransient(f"joint certificate stuck near n = {n}")
        n += 1
    raise NotTransient(f"no joint tail certificate after {n_max} terms")


def martin_kernel_central(mu: Measure, q: float, x: int, y_list):
    """Central Martin kernel values K(x, y) = G(x, y)/G(0, y) along y_list,
    with the Cauchy differences |K(x, y') - K(x, y)| of consecutive entries.

    Convergence of K(x, y) in y is reported, never asserted.
    """
    y_list = sorted(int(y) for y in y_list)
    if not y_list:
        raise OutOfRange("y_list must be non-empty")
    y_max = max(y_list)
    tol = 1e-10
    g_x = green_row(mu, q, x, y_max, tol)
    g_0 = g_x if x == 0 else green_row(mu, q, 0, y_max, tol)
    values = []
    for y in y_list:
        denom = g_0.values[(0, y)]
        if denom <= 0.0:
            raise DivisionByZero(f"G(0,{y}) = 0: label {y} unreachable from 0")
        values.append(g_x.values[(x, y)] / denom)
    diffs = [abs(values[i + 1] - values[i]) for i in range(len(values) - 1)]
    return {
        "x": x,
        "y_list": y_list,
        "K": values,
        "cauchy_differences": diffs,
        "n_used": max(g_x.n_used, g_0.n_used),
        "tail_bound": max(g_x.tail_bound, g_0.tail_bound),
    }


def transience_report(mu: Measure, q: float, drift_samples=(24, 48)) -> dict:
    """Diagnostics: generating flag, first moment, two-step return ratios at
    the origin, and the drift sum_z (z - x) p(x, z) at a few large x.

    Never raises on a non-transient walk; problems are flagged in the
    returned report.
    """
    from .fusion import measure_props

    props = measure_props(mu)
    band = mu.max_label()
    n_probe = 120
    walker = _RowWalker(mu, q, 0, 0, n_budget=n_probe + 2)
    seq = [walker.term(n, 0) for n in range(n_probe + 1)]
    ratio, _ = _tail_certificate(seq)
    transient = ratio is not None and ratio < RATIO_BAR
    drifts = []
    if band > 0:
        x_hi = max(drift_samples) + band
        K = transition_matrix(mu, q, x_hi + band)
        for x in drift_samples:
            row = K.p[x]
            drifts.append((x, float(sum((z - x) * row[z] for z in range(len(row))))))
    return {
        "generating": props["generating"],
        "parity_note": props["parity_note"],
        "first_moment": props["first_moment"],
        "return_ratio": None if ratio is None else float(ratio),
        "transient": bool(transient),
        "drift_estimates": drifts,
    }
