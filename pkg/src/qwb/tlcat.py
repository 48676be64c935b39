"""Corepresentation-category engine for a defining matrix F: carrier spaces
of the irreducible objects inside tensor powers of C^n, conjugate-pair
vectors t_x, s_x, positive operators Q_x, Clebsch-Gordan isometries and the
xi vectors feeding the boundary module.

Coordinates.  H_0 = C, H_1 = C^n, and H_x is realized as a subspace of
H_{x-1} (x) C^n through the isometric inclusion up[x]; no object is ever
stored in the ambient n^x-dimensional tensor power unless explicitly asked
for (ambient_w, jw_projector).  That keeps label ranges like x ~ 100
affordable when n = 2.

Phases.  Clebsch-Gordan isometries are produced by a canonical composite
recursion whose only inputs are the inclusions and the cup vector t_1, with
all normalizations by positive scalars.  Built this way, the conventions of
two categories with the same deformation parameter correspond under a
monoidal identification up to a per-degree global phase, which is what the
boundary module needs for its cross-category formulas.  The public
cg_isometry additionally rotates the result so that the entry of largest
modulus (in a deterministic scan order) is real positive; only
phase-invariant quantities are contractual downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, CategoryTooSmall, NotInFusion, OutOfRange
from .fmatrix import FParams, as_matrix, validate_f
from .fusion import classical_dim, fusion_mult, qdim

CHAIN_DIM_CAP = 3200        # cap on dim(H_{x-1}) * n for the tower build
AMBIENT_ENTRY_CAP = 10**7   # cap on n^x for ambient embeddings (spec guard)
SCALAR_RESIDUAL_TOL = 1e-8  # Schur scalars: tolerated relative off-identity


@dataclass(frozen=True)
class Isometry:
    y: int
    z: int
    x: int
    matrix: np.ndarray  # (dim_y * dim_z, dim_x)


@dataclass(frozen=True)
class XiVector:
    y: int
    x: int
    vec: np.ndarray     # in H_x of the category it was computed from


@dataclass
class CategoryData:
    F: np.ndarray
    params: FParams
    x_built: int
    dims: list
    up: list                       # up[x]: (dims[x-1]*n, dims[x]), x >= 1
    t1_convention: str
    t1_mat: np.ndarray
    _t: dict = field(default_factory=dict)
    _s: dict = field(default_factory=dict)
    _q: dict = field(default_factory=dict)
    _tinv: dict = field(default_factory=dict)
    _cg: dict = field(default_factory=dict)
    _w: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def q(self) -> float:
        return self.params.q

    def dim(self, x: int) -> int:
        self._check_built(x)
        return self.dims[x]

    def qdim(self, x: int) -> float:
        return qdim(x, self.params.q)

    def _check_built(self, x: int):
        if x < 0:
            raise OutOfRange(f"label must be >= 0, got {x}")
        if x > self.x_built:
            raise CategoryTooSmall(
                f"label {x} beyond built range {self.x_built}"
            )

    # -- conjugate-pair data -------------------------------------------

    def t_mat(self, x: int) -> np.ndarray:
        """Coefficient matrix M of t_x = sum_ab M[a,b] e_a (x) e_b,
        normalized so that Tr(Q_x) = Tr(Q_x^{-1})."""
        self._check_built(x)
        if x not in self._t:
            if x == 0:
                self._t[0] = np.eye(1, dtype=complex)
            else:
                v = _cg_multi(self, x, x, (0,))[0][:, 0]
                M = v.reshape(self.dims[x], self.dims[x])
                G = M @ M.conj().T
                scale = (np.trace(np.linalg.inv(G)).real
                         / np.trace(G).real) ** 0.25
                self._t[x] = scale * M
        return self._t[x]

    def t_mat_inv(self, x: int) -> np.ndarray:
        if x not in self._tinv:
            self._tinv[x] = np.linalg.inv(self.t_mat(x))
        return self._tinv[x]

    def Q(self, x: int) -> np.ndarray:
        """Positive operator Q_x = j_x^* j_x on H_x."""
        if x not in self._q:
            M = self.t_mat(x)
            self._q[x] = M @ M.conj().T
        return self._q[x]

    def s_mat(self, x: int) -> np.ndarray:
        """Coefficient matrix of s_x, solved from the snake equation
        (t_x^* (x) 1)(1 (x) s_x) = 1 as a least-squares problem."""
        self._check_built(x)
        if x not in self._s:
            M = self.t_mat(x)
            S, *_ = np.linalg.lstsq(np.conj(M), np.eye(M.shape[0]), rcond=None)
            self._s[x] = S
        return self._s[x]

    # -- Clebsch-Gordan ------------------------------------------------

    def cg(self, y: int, z: int, x: int) -> np.ndarray:
        """Canonical isometry H_x -> H_y (x) H_z (no phase convention
        applied); raises NotInFusion when x does not occur in y (x) z."""
        if fusion_mult(y, z, x) != 1:
            raise NotInFusion(f"{x} does not occur in {y} (x) {z}")
        for lbl in (y, z, x):
            self._check_built(lbl)
        key = (y, z, x)
        if key not in self._cg:
            self._cg[key] = _cg_multi(self, y, z, (x,))[x]
        return self._cg[key]

    # -- ambient embeddings (optional, small x only) -------------------

    def ambient_w(self, x: int) -> np.ndarray:
        """Isometry W_x: H_x -> (C^n)^(x); guarded by the ambient budget."""
        self._check_built(x)
        if x not in self._w:
            if self.n ** max(x, 1) > AMBIENT_ENTRY_CAP:
                raise BudgetExceeded(
                    f"ambient dimension n^{x} exceeds {AMBIENT_ENTRY_CAP}"
                )
            if x == 0:
                self._w[0] = np.eye(1, dtype=complex)
            elif x == 1:
                self._w[1] = np.eye(self.n, dtype=complex)
            else:
                prev = self.ambient_w(x - 1)
                self._w[x] = np.kron(prev, np.eye(self.n)) @ self.up[x]
        return self._w[x]


def _phi_map(C: CategoryData, x: int) -> np.ndarray:
    """Normalized copy of H_{x-1} inside H_x (x) C^n built from t_1:
    xi |-> (up_x^* (x) 1)(xi (x) t_1), rescaled to an isometry."""
    n = C.n
    U3 = C.up[x].reshape(C.dims[x - 1], n, C.dims[x])
    raw = np.einsum("jai,ab->ibj", np.conj(U3), C.t1_mat)
    raw = raw.reshape(C.dims[x] * n, C.dims[x - 1])
    return _normalize_isometry(raw)


def _normalize_isometry(T: np.ndarray) -> np.ndarray:
    """Rescale a nonzero multiple of an isometry (Schur scalar) to an
    isometry, verifying that T*T really is scalar."""
    G = T.conj().T @ T
    c = float(np.trace(G).real) / G.shape[0]
    if c <= 1e-28:
        raise OutOfRange("degenerate intertwiner: zero Schur scalar")
    if np.max(np.abs(G - c * np.eye(G.shape[0]))) > SCALAR_RESIDUAL_TOL * c:
        raise OutOfRange("intertwiner normalization is not scalar")
    return T / np.sqrt(c)


def _cg_pred(y: int, l: int, w: int) -> int:
    """Canonical predecessor label at level l-1 for reaching w at level l.

    Come from below whenever y (x) (l-1) contains w-1, else from above.
    The rule depends only on (y, l, w), so V(y (x) z, x) never depends on
    which sibling targets were requested alongside it, and every label on
    the resulting path stays <= max(y, w) + 1.
    """
    if w - 1 >= 0 and fusion_mult(y, l - 1, w - 1) == 1:
        return w - 1
    return w + 1


def _cg_multi(C: CategoryData, y: int, z: int, targets) -> dict:
    """Canonical isometries {x: V(y (x) z, x)} for every target x, sharing
    one pass over the strand-peeling recursion.

    Each level l holds V(y (x) l, w) for the labels w on some target's
    canonical path; a level is produced from the previous one by composing
    with a binary isometry (the inclusion up for w0 -> w0+1, the t_1-copy
    for w0 -> w0-1) and compressing onto H_l inside H_{l-1} (x) C^n.
    """
    targets = tuple(sorted(set(targets)))
    for x in targets:
        if fusion_mult(y, z, x) != 1:
            raise NotInFusion(f"{x} does not occur in {y} (x) {z}")
    if z == 0:
        return {y: np.eye(C.dims[y], dtype=complex)}
    if y == 0:
        return {z: np.eye(C.dims[z], dtype=complex)}

    # walk the canonical paths backwards to find which (level, label)
    # intertwiners are needed
    needed = [set() for _ in range(z + 1)]
    needed[z] = set(targets)
    for l in range(z, 1, -1):
        for w in needed[l]:
            needed[l - 1].add(_cg_pred(y, l, w))

    level = {}
    for w in sorted(needed[1]):
        if w == y + 1:
            level[w] = C.up[y + 1]
        else:
            level[w] = _phi_map(C, y)
    for l in range(2, z + 1):
        nxt = {}
        for w in sorted(needed[l]):
            w0 = _cg_pred(y, l, w)
            A = level[w0]                       # (d_y*d_{l-1}, d_w0)
            if w == w0 + 1:
                S = C.up[w]
            else:
                S = _phi_map(C, w0)
            S3 = S.reshape(C.dims[w0], C.n, C.dims[w])
            raw = np.einsum("pw,wbk->pbk", A, S3)
            raw = raw.reshape(C.dims[y], C.dims[l - 1] * C.n, C.dims[w])
            T = np.einsum("imk,ms->isk", raw, np.conj(C.up[l]))
            nxt[w] = _normalize_isometry(
                T.reshape(C.dims[y] * C.dims[l], C.dims[w])
            )
        level = nxt
    return {x: level[x] for x in targets}


def build_category(F, x_max: int, tol_f: float = 1e-10) -> CategoryData:
    """Construct carrier spaces, inclusions and the cup vector for labels
    0..x_max.

    H_{x} is the orthocomplement of the canonical t_1-copy of H_{x-2}
    inside H_{x-1} (x) C^n; the complement basis comes from an eigenbasis
    of the complement projector followed by a QR re-orthonormalization
    with positive R-diagonal, which keeps the build deterministic.
    """
    a = as_matrix(F)
    params = validate_f(a, tol_f=tol_f)
    n = params.n
    if x_max < 1:
        raise OutOfRange("x_max must be >= 1")
    for x in range(2, x_max + 1):
        if classical_dim(x - 1, n) * n > CHAIN_DIM_CAP:
            raise BudgetExceeded(
                f"dim(H_{x-1})*n = {classical_dim(x - 1, n) * n} exceeds "
                f"{CHAIN_DIM_CAP}; lower x_max"
            )

    # cup vector convention: t_1 = sum_i e_i (x) F e_i unless the partial
    # snake sign test prefers the conjugate variant
    sign = params.sign
    t1_mat = a.T.astype(complex)
    convention = "F"
    snake = t1_mat @ np.conj(t1_mat)
    if np.max(np.abs(snake - sign * np.eye(n))) > 1e-8:
        t1_alt = np.conj(a).T.astype(complex)
        snake_alt = t1_alt @ np.conj(t1_alt)
        if np.max(np.abs(snake_alt - sign * np.eye(n))) <= 1e-8:
            t1_mat, convention = t1_alt, "conjF"
        else:
            raise OutOfRange("no cup convention passes the snake sign test")

    dims = [1, n]
    up = [None, np.eye(n, dtype=complex)]
    C = CategoryData(
        F=a, params=params, x_built=1, dims=dims, up=up,
        t1_convention=convention, t1_mat=t1_mat,
    )
    for x in range(2, x_max + 1):
        phi = _phi_map(C, x - 1)
        m = dims[x - 1] * n
        comp = np.eye(m, dtype=complex) - phi @ phi.conj().T
        evals, evecs = np.linalg.eigh(comp)
        keep = evals > 0.5
        d_new = int(np.count_nonzero(keep))
        d_expect = dims[x - 1] * n - dims[x - 2]
        if d_new != d_expect or d_expect != classical_dim(x, n):
            raise OutOfRange(
                f"complement dimension {d_new} != expected {d_expect} at {x}"
            )
        basis = evecs[:, keep]
        Qb, R = np.linalg.qr(basis)
        phase = np.diag(R).copy()
        phase[np.abs(phase) < 1e-14] = 1.0
        Qb = Qb * (phase / np.abs(phase))
        dims.append(d_new)
        up.append(Qb)
        C.x_built = x
    return C


def cg_isometry(C: CategoryData, y: int, z: int, x: int,
                phase_seed=None) -> Isometry:
    """Public Clebsch-Gordan isometry onto the x-component of
    H_y (x) H_z.

    The global phase is fixed by making the entry of largest modulus real
    positive; the scan order is row-major unless phase_seed is given, in
    which case a seeded permutation is scanned instead (used to check that
    downstream quantities are phase-invariant).
    """
    V = C.cg(y, z, x).copy()
    flat = np.abs(V).ravel()
    if phase_seed is None:
        order = np.arange(flat.size)
    else:
        order = np.random.default_rng(phase_seed).permutation(flat.size)
    scanned = flat[order]
    pos = order[int(np.argmax(scanned))]
    pivot = V.ravel()[pos]
    if abs(pivot) > 0:
        V = V * (np.conj(pivot) / abs(pivot))
    return Isometry(y=y, z=z, x=x, matrix=V)


def xi_vector(C_tilde: CategoryData, y: int, x: int,
              phase_seed=None) -> XiVector:
    """xi_y^x = (qdim(x) qdim(y))^(-1/2) V(y (x) y, x)^* (Q_y^{-2} (x) 1) t_y,
    a vector in H_x of the deformed side."""
    if fusion_mult(y, y, x) != 1:
        raise NotInFusion(f"{x} does not occur in {y} (x) {y}")
    if phase_seed is None:
        V = C_tilde.cg(y, y, x)
    else:
        V = cg_isometry(C_tilde, y, y, x, phase_seed=phase_seed).matrix
    My = C_tilde.t_mat(y)
    # apply Q^{-2} in the eigenbasis of Q: a direct solve against Q^2 would
    # amplify errors by its condition number ~ |q|^{-4y}
    evals, evecs = np.linalg.eigh(C_tilde.Q(y))
    Wmat = evecs @ ((evecs.conj().T @ My) / (evals * evals)[:, None])
    scale = 1.0 / np.sqrt(C_tilde.qdim(x) * C_tilde.qdim(y))
    return XiVector(y=y, x=x, vec=scale * (V.conj().T @ Wmat.ravel()))


def zero_weight_space(C_tilde: CategoryData, x: int):
    """Orthonormal basis (list of vectors) of ker(Q_x - 1)."""
    C_tilde._check_built(x)
    if x == 0:
        return [np.array([1.0 + 0.0j])]
    evals, evecs = np.linalg.eigh(C_tilde.Q(x))
    gap = (1.0 - abs(C_tilde.q) ** 2) / 3.0
    idx = [i for i, ev in enumerate(evals) if abs(ev - 1.0) < gap]
    return [evecs[:, i].astype(complex) for i in idx]


# -- ambient Temperley-Lieb oracle (tests only) -------------------------

def tl_generators(C: CategoryData, strands: int):
    """The projectors e_i = t_1 t_1^* / ||t_1||^2 acting on strands
    (i, i+1) of (C^n)^(strands)."""
    n = C.n
    if n ** strands > AMBIENT_ENTRY_CAP:
        raise BudgetExceeded("ambient dimension too large for TL generators")
    tvec = C.t1_mat.ravel()
    e = np.outer(tvec, tvec.conj()) / float(np.vdot(tvec, tvec).real)
    gens = []
    for i in range(strands - 1):
        op = np.kron(np.eye(n ** i), np.kron(e, np.eye(n ** (strands - i - 2))))
        gens.append(op)
    return gens


def jw_projector(C: CategoryData, x: int) -> np.ndarray:
    """Jones-Wenzl projector on (C^n)^(x), built by the standard recursion
    from the unnormalized cups U_i = t_1 t_1^*; its range must agree with
    the chained construction of H_x (independent oracle)."""
    n = C.n
    if n ** x > AMBIENT_ENTRY_CAP:
        raise BudgetExceeded("ambient dimension too large for the JW oracle")
    tvec = C.t1_mat.ravel()
    U = np.outer(tvec, tvec.conj())
    q = C.q
    f = np.eye(n, dtype=complex)
    for k in range(1, x):
        fk = np.kron(f, np.eye(n))
        Uk = np.kron(np.eye(n ** (k - 1)), U)
        coeff = qdim(k - 1, q) / qdim(k, q)
        f = fk - coeff * (fk @ Uk @ fk)
    return f
