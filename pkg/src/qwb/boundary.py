"""Block-level boundary machinery: the Markov operator on truncated
elements of the dual, the generalized Izumi operator into harmonic
elements, Poisson-kernel convergence sweeps, and block Green/Martin
kernels with central tail certificates.

Element models.  A BlockElement is a finitely truncated element of the
product of matrix blocks, one block per label, with an explicit validity
bound that shrinks by max(supp mu) per Markov step.  A SpectralElement
models an element b of the spectral subspace at label x as the matrix of
its image in H_x (x) conj(H~_x); the deformed-side space H~_x lives in a
second CategoryData built from the standard 2x2 matrix with the same
deformation parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CategoryTooSmall,
    DivisionByZero,
    NotGenerating,
    NotTransient,
    OutOfRange,
    TruncationTooSmall,
    ValidationError,
)
from .fusion import Measure, convolve, fusion_mult, fusion_range, measure_props, qdim
from .suq2 import XiNormTable
from .tlcat import CategoryData, xi_vector, zero_weight_space
from .walk import _certified_tail, transition_matrix


@dataclass
class BlockElement:
    blocks: dict                 # label -> complex (dim, dim) matrix
    x_valid: int

    def get(self, x: int, C: CategoryData) -> np.ndarray:
        if x > self.x_valid:
            raise TruncationTooSmall(
                f"block {x} outside valid window {self.x_valid}"
            )
        if x in self.blocks:
            return self.blocks[x]
        d = C.dim(x)
        return np.zeros((d, d), dtype=complex)

    def sup_norm(self) -> float:
        if not self.blocks:
            return 0.0
        return max(
            float(np.linalg.norm(b, 2)) for _, b in sorted(self.blocks.items())
        )

    def support(self):
        return sorted(x for x, b in self.blocks.items() if np.any(b != 0))


@dataclass(frozen=True)
class SpectralElement:
    x: int
    m: np.ndarray                # (dim_x, dim~_x)


@dataclass
class ConvergenceReport:
    x: int
    target: str                  # "zero_weight_projector" or "zero"
    n_star: int | None
    distances: list = field(default_factory=list)
    tol: float = 0.0


def block_identity(C: CategoryData, x_valid: int) -> BlockElement:
    return BlockElement(
        blocks={x: np.eye(C.dim(x), dtype=complex) for x in range(x_valid + 1)},
        x_valid=x_valid,
    )


def block_indicator(C: CategoryData, x: int, x_valid: int) -> BlockElement:
    """The central projection supported on the single label x."""
    if x > x_valid:
        raise TruncationTooSmall(f"indicator label {x} beyond window {x_valid}")
    return BlockElement(
        blocks={x: np.eye(C.dim(x), dtype=complex)}, x_valid=x_valid
    )


def markov_step(a: BlockElement, mu: Measure, C: CategoryData) -> BlockElement:
    """One application of the block Markov operator:

    (P a) at label x = sum_y mu(y) (id (x) psi_y)
        ( sum_{z in x(x)y} V(x (x) y, z) a_z V(x (x) y, z)^* ),

    where psi_y is the deformed trace Tr(Q_y .)/Tr(Q_y).  The validity
    window shrinks by max(supp mu)."""
    band = mu.max_label()
    new_valid = min(a.x_valid, C.x_built) - band
    if new_valid < 0:
        raise TruncationTooSmall("validity window exhausted by markov_step")
    out = {}
    for x in range(new_valid + 1):
        dx = C.dim(x)
        acc = np.zeros((dx, dx), dtype=complex)
        for y, wy in mu.items():
            if y == 0:
                acc += wy * a.get(x, C)
                continue
            dy = C.dim(y)
            Qy = C.Q(y)
            dq_y = C.qdim(y)
            for z in fusion_range(x, y):
                V = C.cg(x, y, z)
                az = a.get(z, C)
                M = V @ az @ V.conj().T
                M4 = M.reshape(dx, dy, dx, dy)
                acc += (wy / dq_y) * np.einsum("ikjl,lk->ij", M4, Qy)
        out[x] = acc
    return BlockElement(blocks=out, x_valid=new_valid)


def izumi_block(b: SpectralElement, y: int, C: CategoryData,
                C_tilde: CategoryData) -> np.ndarray:
    """Block at label y of the generalized Izumi image of b:

    Phi(b) p_y = sqrt(qdim(y)) * mat( V(y (x) y, x) (m xi_y^x) ) t_y^{-1},

    where mat(.) reshapes a vector of H_y (x) H_y to its coefficient
    matrix and t_y^{-1} inverts the pairing matrix of the cup vector.
    The block vanishes when x does not occur in y (x) y."""
    x = b.x
    if y > C.x_built or x > C.x_built:
        raise CategoryTooSmall(f"izumi block needs labels {y}, {x} built")
    dy = C.dim(y)
    if fusion_mult(y, y, x) != 1:
        return np.zeros((dy, dy), dtype=complex)
    xi = xi_vector(C_tilde, y, x).vec
    u = b.m @ xi
    w = C.cg(y, y, x) @ u
    return np.sqrt(C.qdim(y)) * (w.reshape(dy, dy) @ C.t_mat_inv(y))


def izumi_element(b: SpectralElement, C: CategoryData, C_tilde: CategoryData,
                  x_valid: int) -> BlockElement:
    """The Izumi image of b as a BlockElement on the window [0, x_valid]."""
    if x_valid > C.x_built:
        raise CategoryTooSmall(
            f"window {x_valid} beyond built range {C.x_built}"
        )
    blocks = {y: izumi_block(b, y, C, C_tilde) for y in range(x_valid + 1)}
    return BlockElement(blocks=blocks, x_valid=x_valid)


def izumi_adjoint(c: np.ndarray, y: int, x: int, C: CategoryData,
                  C_tilde: CategoryData) -> SpectralElement:
    """Adjoint of the y-block Izumi map with respect to the deformed trace
    on matrices over H_y and the invariant inner product on the spectral
    model: c |-> outer(V(y(x)y,x)^* vec(c t_y)/sqrt(qdim y), conj(xi))."""
    if fusion_mult(y, y, x) != 1:
        return SpectralElement(x=x, m=np.zeros((C.dim(x), C_tilde.dim(x)),
                                               dtype=complex))
    xi = xi_vector(C_tilde, y, x).vec
    vec = (c @ C.t_mat(y)).ravel() / np.sqrt(C.qdim(y))
    u = C.cg(y, y, x).conj().T @ vec
    return SpectralElement(x=x, m=np.outer(u, np.conj(xi)))


def s1_invariant_element(C: CategoryData, C_tilde: CategoryData, x: int,
                         w: np.ndarray) -> SpectralElement:
    """The spectral element at label x with matrix w (x) conj(eta) for the
    zero-weight line eta of the deformed side (empty for odd x)."""
    zw = zero_weight_space(C_tilde, x)
    if not zw:
        raise ValidationError(f"no circle-invariant part at odd label {x}")
    w = np.asarray(w, dtype=complex).reshape(C.dim(x))
    return SpectralElement(x=x, m=np.outer(w, np.conj(zw[0])))


def check_s1_invariant(b: SpectralElement, C_tilde: CategoryData,
                       tol: float = 1e-10) -> bool:
    """Whether the conj-side support of b lies in the zero-weight space."""
    zw = zero_weight_space(C_tilde, b.x)
    if not zw:
        return not np.any(np.abs(b.m) > tol)
    P = sum(np.outer(v, np.conj(v)) for v in zw)
    return bool(np.max(np.abs(b.m - b.m @ P)) <= tol * max(1.0, np.max(np.abs(b.m))))


def harmonicity_residuals(b: SpectralElement, mu: Measure, C: CategoryData,
                          C_tilde: CategoryData, x_max: int):
    """Residuals || P(Phi(b)) p_x - Phi(b) p_x || over the window left
    after one Markov step; small residuals witness harmonicity of the
    Izumi image."""
    if not check_s1_invariant(b, C_tilde):
        raise ValidationError(
            "spectral element is not supported on the circle-invariant part"
        )
    a = izumi_element(b, C, C_tilde, x_max)
    Pa = markov_step(a, mu, C)
    return [
        (x, float(np.linalg.norm(Pa.get(x, C) - a.get(x, C), 2)))
        for x in range(Pa.x_valid + 1)
    ]


def _xi_table(C_tilde: CategoryData, x_top: int) -> XiNormTable:
    tab = getattr(C_tilde, "_xi_norm_table", None)
    if tab is None or tab.x_top < x_top:
        tab = XiNormTable(C_tilde, x_top=max(x_top, 8))
        C_tilde._xi_norm_table = tab
    return tab


def poisson_kernel_operator(C_tilde: CategoryData, x: int, mu: Measure,
                            n: int):
    """The operator K^x after n steps: sum_y mu^{*n}(y) xi_y^x (xi_y^x)^*,
    assembled as (sum_y mu^{*n}(y) ||xi_y^x||^2) times the zero-weight
    projector, since every xi_y^x lies on the zero-weight line.

    Returns (matrix, certificate) where the certificate reports the
    pruned and out-of-table mass of mu^{*n}."""
    from .fusion import convolution_power

    C_tilde._check_built(x)
    return _poisson_kernel_from_power(
        C_tilde, x, convolution_power(mu, n, C_tilde.q)
    )


def _poisson_kernel_from_power(C_tilde: CategoryData, x: int,
                               mu_n: Measure):
    tab = _xi_table(C_tilde, x_top=max(x, 2))
    beyond = mu_n.mass_above(tab.y_cap)
    if beyond > 1e-6:
        raise CategoryTooSmall(
            f"mass {beyond:.2e} of the convolution power lies beyond the "
            f"xi table cap {tab.y_cap}"
        )
    d = C_tilde.dim(x)
    K = np.zeros((d, d), dtype=complex)
    if x % 2 == 0:
        zw = zero_weight_space(C_tilde, x)
        proj = np.outer(zw[0], np.conj(zw[0]))
        s = sum(wy * tab.value(y, x) for y, wy in mu_n.items()
                if y <= tab.y_cap)
        K = s * proj
    cert = {
        "pruned_mass": max(0.0, 1.0 - mu_n.total_mass()),
        "mass_beyond_table": beyond,
    }
    return K, cert


def poisson_convergence(C_tilde: CategoryData, x: int, mu: Measure,
                        tol: float, n_max: int) -> ConvergenceReport:
    """Distance sweep of K^x_n to its limit: the zero-weight projector for
    even x, zero for odd x.  Reports the first n meeting tol (n_star) and
    the whole distance curve."""
    if tol <= 0:
        raise OutOfRange("tol must be positive")
    props = measure_props(mu)
    if not props["generating"]:
        raise NotGenerating(props["parity_note"] or "measure not generating")
    C_tilde._check_built(x)
    if x % 2 == 0:
        zw = zero_weight_space(C_tilde, x)
        target_mat = np.outer(zw[0], np.conj(zw[0]))
        target = "zero_weight_projector"
    else:
        target_mat = np.zeros((C_tilde.dim(x),) * 2, dtype=complex)
        target = "zero"
    report = ConvergenceReport(x=x, target=target, n_star=None, tol=tol)
    mu_n = Measure.delta(0)
    for n in range(n_max + 1):
        if n > 0:
            mu_n = convolve(mu_n, mu, C_tilde.q)
        K, _ = _poisson_kernel_from_power(C_tilde, x, mu_n)
        dist = float(np.linalg.norm(K - target_mat, 2))
        report.distances.append(dist)
        if report.n_star is None and dist < tol:
            report.n_star = n
            break
    return report


def spectral_dims(C: CategoryData, C_tilde: CategoryData, x: int) -> dict:
    """Dimension of the spectral subspace at x and of its circle-invariant
    part."""
    C._check_built(x)
    C_tilde._check_built(x)
    inv = C.dim(x) * len(zero_weight_space(C_tilde, x))
    return {"dim_Bx": C.dim(x) * C_tilde.dim(x), "dim_S1_invariant": inv}


def counit_eval(a: BlockElement) -> complex:
    """Value of the block at the trivial label (the harmonic state)."""
    if a.x_valid < 0:
        raise TruncationTooSmall("no valid block at label 0")
    blk = a.blocks.get(0)
    if blk is None:
        return 0.0 + 0.0j
    return complex(blk[0, 0])


def green_block(a: BlockElement, mu: Measure, C: CategoryData, tol: float,
                n_cap: int = 512):
    """Blockwise Green sum G(a) = sum_n P^n(a) with a central majorant
    certificate: the dropped tail at label x is bounded by ||a|| times the
    certified tail of the positive series sum_n sum_{z in supp a} p_n(x,z),
    required below tol relative to that series' own partial sum.

    The relative form matters because Green blocks decay exponentially in
    the distance from supp(a); an absolute cutoff would leave far blocks
    with garbage relative accuracy.  The validity window of the result is
    a.x_valid - n_used * band, negotiated against the certificate (labels
    that drop out of the shrinking window no longer need certifying).

    Returns (BlockElement, certificate)."""
    if tol <= 0:
        raise OutOfRange("tol must be positive")
    supp = a.support()
    if not supp:
        return BlockElement(blocks={}, x_valid=a.x_valid), {
            "tail_bounds": [], "n_used": 0,
        }
    norm_a = a.sup_norm()
    band = mu.max_label()
    if band == 0:
        raise NotTransient("measure with support {0} is never transient")
    total = {x: a.get(x, C).copy() for x in range(a.x_valid + 1)}
    cur = a

    # central majorant: one matrix-power loop on a grid wide enough that
    # rows x <= a.x_valid - n*band are exact at step n
    X = a.x_valid + band + 4
    P = transition_matrix(mu, C.q, X).p
    M = np.eye(X + 1)
    hist = [[float(1.0 if x in supp else 0.0)] for x in range(a.x_valid + 1)]
    mpart = np.array([h[0] for h in hist])

    min_window = 26
    n = 0
    while True:
        n += 1
        if cur.x_valid - band < 0:
            raise TruncationTooSmall(
                f"window exhausted at step {n} before tail {tol} reached"
            )
        cur = markov_step(cur, mu, C)
        for x in range(cur.x_valid + 1):
            total[x] += cur.blocks[x]
        M = M @ P
        for x in range(cur.x_valid + 1):
            term = float(M[x, supp].sum())
            hist[x].append(term)
            mpart[x] += term
        if n >= min_window:
            tails = []
            ok = True
            for x in range(cur.x_valid + 1):
                goal = tol * mpart[x] if mpart[x] > 0 else tol
                state, tail = _certified_tail(hist[x], goal)
                if state in ("done", "zero"):
                    tails.append(tail * norm_a)
                else:
                    ok = False
                    break
            if ok:
                window = cur.x_valid
                g = BlockElement(
                    blocks={x: total[x] for x in range(window + 1)},
                    x_valid=window,
                )
                return g, {
                    "tail_bounds": tails,
                    "majorant": [float(v) for v in mpart[: window + 1]],
                    "n_used": n,
                }
        if n >= n_cap:
            raise NotTransient(f"no certified tail after {n_cap} steps")


def martin_block(a: BlockElement, mu: Measure, C: CategoryData, tol: float):
    """Blockwise Martin kernel K(a) p_x = G(a) p_x / g(x, 0), where g(., 0)
    is the central Green column at the trivial label (the reversed measure
    equals mu here since every label is self-conjugate).

    Returns (BlockElement, certificate)."""
    from .walk import green_column

    g, cert = green_block(a, mu, C, tol)
    window = g.x_valid
    denom, col_tail, col_n = green_column(mu, C.q, window, tol)
    blocks = {}
    for x in range(window + 1):
        if denom[x] <= 0.0:
            raise DivisionByZero(f"central Green g({x},0) vanishes")
        blocks[x] = g.blocks[x] / denom[x]
    K = BlockElement(blocks=blocks, x_valid=window)
    cert = dict(cert)
    cert["green_column"] = [float(v) for v in denom]
    cert["green_column_tail"] = float(col_tail)
    return K, cert


def martin_phi_fit(K: BlockElement, C: CategoryData, C_tilde: CategoryData,
                   x_range, j_list):
    """Least-squares distance of the Martin-kernel blocks to the span of
    Izumi images of circle-invariant spectral elements at labels j_list.
    Reported as a diagnostic curve; no limit is asserted."""
    dists = []
    for x in x_range:
        cols = []
        for j in j_list:
            if j > C.x_built or j % 2 == 1:
                continue
            dj = C.dim(j)
            for k in range(dj):
                w = np.zeros(dj)
                w[k] = 1.0
                b = s1_invariant_element(C, C_tilde, j, w)
                cols.append(izumi_block(b, x, C, C_tilde).ravel())
        target = K.get(x, C).ravel()
        A = np.array(cols).T
        coef, *_ = np.linalg.lstsq(A, target, rcond=None)
        resid = float(np.linalg.norm(A @ coef - target))
        dists.append((x, resid))
    return dists
