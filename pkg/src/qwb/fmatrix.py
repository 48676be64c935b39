"""Defining matrices F with F*conj(F) = +-1: validation, classification
invariants and the deformation parameter q.

Conventions.  A matrix F in GL(n, C) with F conj(F) = s*1, s in {+1, -1},
determines a deformation parameter q in (-1, 0) u (0, 1) through

    s = -sgn(q)    and    |q| + 1/|q| = Tr(F*F),

where Tr(F*F) > 2 is required (the borderline |q| = 1 is rejected).  Two
matrices give isomorphic structures iff they share n, s and the spectrum
of F*F.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KacBoundary, NotInvolutive, OutOfRange, Singular

DEFAULT_TOL_F = 1e-10


@dataclass(frozen=True)
class FMatrix:
    n: int
    entries: np.ndarray  # complex, shape (n, n)


@dataclass(frozen=True)
class FParams:
    n: int
    sign: int          # value s of F*conj(F)
    trace: float       # Tr(F*F)
    q: float           # deformation parameter, in (-1,0) u (0,1)


@dataclass(frozen=True)
class ClassInvariant:
    n: int
    sign: int
    eigenvalues: tuple  # spectrum of F*F, ascending


def as_matrix(F) -> np.ndarray:
    a = np.asarray(F, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise OutOfRange(f"F must be a square matrix, got shape {a.shape}")
    if a.shape[0] < 2:
        raise OutOfRange("F must be at least 2x2")
    return a


def _abs_q_from_trace(t: float) -> float:
    """Solve |q| + 1/|q| = t on (0, 1).

    Closed form (t - sqrt(t^2 - 4))/2 as the starting value, then bisection
    to 1e-14; the bisection is kept as the authoritative root so that
    round-tripping through standard_f is exact to that level.
    """
    if t <= 2.0:
        raise KacBoundary(f"Tr(F*F) = {t} <= 2 corresponds to |q| = 1")
    lo, hi = 1e-16, 1.0
    closed = (t - np.sqrt(t * t - 4.0)) / 2.0
    if 0.0 < closed < 1.0:
        lo = max(lo, closed - 1e-3)
        hi = min(hi, closed + 1e-3)
        if (lo + 1.0 / lo) < t or (hi + 1.0 / hi) > t:
            lo, hi = 1e-16, 1.0
    f = lambda u: u + 1.0 / u - t
    # f is decreasing on (0,1): f(lo) > 0 > f(hi) for t > 2
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def validate_f(F, tol_f: float = DEFAULT_TOL_F) -> FParams:
    """Check the involutivity constraint and extract (n, sign, trace, q)."""
    a = as_matrix(F)
    n = a.shape[0]
    if abs(np.linalg.det(a)) < 1e-12:
        raise Singular("F is not invertible")
    prod = a @ np.conj(a)
    eye = np.eye(n)
    dev_plus = np.max(np.abs(prod - eye))
    dev_minus = np.max(np.abs(prod + eye))
    if dev_plus <= tol_f * max(1.0, np.max(np.abs(prod))):
        sign = 1
    elif dev_minus <= tol_f * max(1.0, np.max(np.abs(prod))):
        sign = -1
    else:
        raise NotInvolutive(
            f"F*conj(F) differs from +-1 by {min(dev_plus, dev_minus):.3e}"
        )
    trace = float(np.real(np.trace(np.conj(a.T) @ a)))
    if trace <= 2.0 + 1e-12:
        raise KacBoundary(f"Tr(F*F) = {trace} <= 2: excluded boundary case")
    q_abs = _abs_q_from_trace(trace)
    return FParams(n=n, sign=sign, trace=trace, q=float(-sign * q_abs))


def standard_f(q: float) -> np.ndarray:
    """The canonical 2x2 matrix with parameter q:
    [[0, |q|^(1/2)], [-sgn(q) |q|^(-1/2), 0]]."""
    if not (0.0 < abs(q) < 1.0):
        raise OutOfRange(f"q must lie in (-1,0) u (0,1), got {q}")
    r = np.sqrt(abs(q))
    sgn = 1.0 if q > 0 else -1.0
    return np.array([[0.0, r], [-sgn / r, 0.0]], dtype=complex)


def canonical_invariants(F, tol_f: float = DEFAULT_TOL_F) -> ClassInvariant:
    """Classification triple (n, sign, spectrum of F*F), spectrum ascending.

    Invariant under F -> v F v^t for unitary v; degeneracies are kept
    verbatim in the eigenvalue list.
    """
    a = as_matrix(F)
    params = validate_f(a, tol_f=tol_f)
    ev = np.linalg.eigvalsh(np.conj(a.T) @ a)
    return ClassInvariant(
        n=params.n, sign=params.sign, eigenvalues=tuple(float(v) for v in np.sort(ev))
    )


def fmatrix_from_json(obj) -> np.ndarray:
    """Decode {"n": int, "re": [[...]], "im": [[...]]} (row-major)."""
    n = int(obj["n"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != (n, n) or im.shape != (n, n):
        raise OutOfRange(f"re/im must be {n}x{n} row-major arrays")
    return re + 1j * im


def fmatrix_to_json(F) -> dict:
    a = as_matrix(F)
    return {
        "n": a.shape[0],
        "re": [[float(x) for x in row] for row in a.real],
        "im": [[float(x) for x in row] for row in a.imag],
    }


def fparams_to_json(p: FParams) -> dict:
    return {"n": p.n, "sign": p.sign, "trace": p.trace, "q": p.q}


def invariants_to_json(c: ClassInvariant) -> dict:
    return {"n": c.n, "sign": c.sign, "eigenvalues": list(c.eigenvalues)}
