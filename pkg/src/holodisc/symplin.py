"""Symplectic and almost-complex linear algebra on truncated C^N.

An R-linear operator F on C^N is stored as a pair {P, Q} of complex N x N
matrices acting by u -> P u + Q conj(u).  The pair view is canonical; a real
2N x 2N matrix view (acting on stacked (Re u, Im u)) backs inversion and
spectral work.

The standard symplectic form is omega(u, v) = -Im <u, v> with the Hermitian
product <u, v> = sum_j u_j conj(v_j).  A linear symplectomorphism satisfies

    P* P - Q^t conj(Q) = I,   P^t conj(Q) - conj(Q)^t P = 0       (primal)
    P P* - Q Q*        = I,   P Q^t - Q P^t            = 0        (transposed)

and its anti-holomorphic ratio obeys the closed form
||Q conj(P)^{-1}|| = ||Q|| (1 + ||Q||^2)^{-1/2} < 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, ShapeError, SingularityError

# structural identities at double precision with O(N^3) accumulation
TOL_STRUCT = 1e-8
# certification of J o J = -I and antilinearity of the complex representation
TOL_ACS = 1e-10

# above this size operator norms fall back to power iteration instead of SVD
_SVD_LIMIT = 512


def omega(u, v):
    """Standard symplectic form omega(u, v) = -Im <u, v> on C^N."""
    return float(-np.imag(np.vdot(v, u)))


def opnorm(m):
    """Operator (spectral) norm of a complex or real matrix.

    Exact SVD at desk scale; power iteration on m m* above _SVD_LIMIT.
    """
    m = np.asarray(m)
    if max(m.shape) <= _SVD_LIMIT:
        return float(np.linalg.norm(m, 2))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(m.shape[1])
    if np.iscomplexobj(m):
        x = x + 1j * rng.standard_normal(m.shape[1])
    x /= np.linalg.norm(x)
    s = 0.0
    for _ in range(200):
        y = m @ x
        x = m.conj().T @ y
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return 0.0
        s_new = np.sqrt(nx)
        x /= nx
        if abs(s_new - s) <= 1e-12 * max(s_new, 1.0):
            return float(s_new)
        s = s_new
    return float(s)


@dataclass(frozen=True)
class RLinearOp:
    """R-linear operator u -> P u + Q conj(u) on C^N."""

    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        P = np.ascontiguousarray(np.asarray(self.P, dtype=complex))
        Q = np.ascontiguousarray(np.asarray(self.Q, dtype=complex))
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape != Q.shape:
            raise ShapeError(f"P, Q must be equal square matrices, got {P.shape} and {Q.shape}")
        if not (np.all(np.isfinite(P.view(float))) and np.all(np.isfinite(Q.view(float)))):
            raise ShapeError("P, Q entries must be finite")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)

    @property
    def dim(self):
        return self.P.shape[0]

    # ---- pointwise action and algebra ------------------------------------

    def __call__(self, u):
        u = np.asarray(u, dtype=complex)
        if u.shape[-1] != self.dim:
            raise ShapeError(f"vector of length {u.shape[-1]} fed to operator of dim {self.dim}")
        return u @ self.P.T + np.conj(u) @ self.Q.T

    def compose(self, other: "RLinearOp") -> "RLinearOp":
        """self o other in the {P, Q} calculus."""
        if self.dim != other.dim:
            raise ShapeError("composition of operators of different dims")
        return RLinearOp(
            self.P @ other.P + self.Q @ np.conj(other.Q),
            self.P @ other.Q + self.Q @ np.conj(other.P),
        )

    def __matmul__(self, other):
        return self.compose(other)

    def add(self, other: "RLinearOp") -> "RLinearOp":
        return RLinearOp(self.P + other.P, self.Q + other.Q)

    def sub(self, other: "RLinearOp") -> "RLinearOp":
        return RLinearOp(self.P - other.P, self.Q - other.Q)

    def scale(self, c: float) -> "RLinearOp":
        # real scalars only: complex scaling is not R-linear in the pair view
        return RLinearOp(c * self.P, c * self.Q)

    def adjoint(self) -> "RLinearOp":
        return RLinearOp(self.P.conj().T, self.Q.T)

    def transpose(self) -> "RLinearOp":
        return RLinearOp(self.P.T, self.Q.conj().T)

    def conjugate(self) -> "RLinearOp":
        return RLinearOp(self.P.conj(), self.Q.conj())

    # ---- real 2N x 2N view ------------------------------------------------

    def real_matrix(self):
        """Matrix on stacked (Re u, Im u) coordinates."""
        Pr, Pi = self.P.real, self.P.imag
        Qr, Qi = self.Q.real, self.Q.imag
        return np.block([[Pr + Qr, -Pi + Qi], [Pi + Qi, Pr - Qr]])

    @staticmethod
    def from_real_matrix(m) -> "RLinearOp":
        m = np.asarray(m, dtype=float)
        n2 = m.shape[0]
        if m.ndim != 2 or m.shape[0] != m.shape[1] or n2 % 2:
            raise ShapeError("real view must be a square 2N x 2N matrix")
        n = n2 // 2
        m11, m12 = m[:n, :n], m[:n, n:]
        m21, m22 = m[n:, :n], m[n:, n:]
        P = 0.5 * ((m11 + m22) + 1j * (m21 - m12))
        Q = 0.5 * ((m11 - m22) + 1j * (m21 + m12))
        return RLinearOp(P, Q)

    def inv(self) -> "RLinearOp":
        m = self.real_matrix()
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > 1e13:
            raise SingularityError("operator is numerically singular", cond=cond)
        return RLinearOp.from_real_matrix(np.linalg.inv(m))

    def norm(self):
        """Operator norm over the real Hilbert structure."""
        return opnorm(self.real_matrix())

    # ---- stock operators ----------------------------------------------------

    @staticmethod
    def identity(n) -> "RLinearOp":
        return RLinearOp(np.eye(n), np.zeros((n, n)))

    @staticmethod
    def j_standard(n) -> "RLinearOp":
        """Multiplication by i."""
        return RLinearOp(1j * np.eye(n), np.zeros((n, n)))

    @staticmethod
    def conjugation(n) -> "RLinearOp":
        return RLinearOp(np.zeros((n, n)), np.eye(n))

    @staticmethod
    def complex_linear(P) -> "RLinearOp":
        P = np.asarray(P, dtype=complex)
        return RLinearOp(P, np.zeros_like(P))

    @staticmethod
    def antilinear(A) -> "RLinearOp":
        A = np.asarray(A, dtype=complex)
        return RLinearOp(np.zeros_like(A), A)


def apply(F: RLinearOp, u):
    """Apply F = {P, Q} to a vector: P u + Q conj(u)."""
    return F(u)


@dataclass(frozen=True)
class OmegaReport:
    """Residuals of the two defining identities of a linear symplectomorphism."""

    ok: bool
    residual_gram: float   # ||P* P - Q^t conj(Q) - I||
    residual_skew: float   # ||P^t conj(Q) - conj(Q)^t P||
    tol: float

    def __bool__(self):
        return self.ok


def preserves_omega(F: RLinearOp, tol: float = TOL_STRUCT) -> OmegaReport:
    """Check the primal identities characterizing omega-preservation."""
    P, Q = F.P, F.Q
    n = F.dim
    r1 = opnorm(P.conj().T @ P - Q.T @ np.conj(Q) - np.eye(n))
    r2 = opnorm(P.T @ np.conj(Q) - np.conj(Q).T @ P)
    return OmegaReport(ok=bool(r1 <= tol and r2 <= tol), residual_gram=r1, residual_skew=r2, tol=tol)


def transposed_identities(F: RLinearOp):
    """Residuals of the transposed identities P P* - Q Q* = I, P Q^t = Q P^t."""
    P, Q = F.P, F.Q
    n = F.dim
    r1 = opnorm(P @ P.conj().T - Q @ Q.conj().T - np.eye(n))
    r2 = opnorm(P @ Q.T - Q @ P.T)
    return r1, r2


def symplectic_inverse(F: RLinearOp, tol: float = TOL_STRUCT) -> RLinearOp:
    """Inverse {P*, -Q^t} of a linear symplectomorphism."""
    rep = preserves_omega(F, tol)
    if not rep.ok:
        raise DomainError(
            f"operator does not preserve omega (residuals {rep.residual_gram:.3e}, {rep.residual_skew:.3e})"
        )
    return RLinearOp(F.P.conj().T, -F.Q.T)


def norm_antiholomorphic_ratio(F: RLinearOp):
    """Operator norm of Q conj(P)^{-1} (largest singular value).

    For an omega-preserving F, P is invertible and the value equals
    ||Q|| (1 + ||Q||^2)^{-1/2} < 1.
    """
    Pc = np.conj(F.P)
    cond = np.linalg.cond(Pc)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularityError("conj(P) is numerically singular", cond=cond)
    return opnorm(F.Q @ np.linalg.inv(Pc))


def antiholomorphic_ratio_formula(F: RLinearOp):
    """Closed form ||Q|| (1 + ||Q||^2)^{-1/2}."""
    q = opnorm(F.Q)
    return q / np.sqrt(1.0 + q * q)


# ---------------------------------------------------------------------------
# linear almost complex structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearACS:
    """Linear almost complex structure J (J o J = -I) with derived data.

    B = -J_st o J, L = (I + B)^{-1} (I - B); L is C-antilinear, L h = A conj(h);
    A is the complex representation.
    """

    J: RLinearOp
    B: RLinearOp = field(repr=False)
    L: RLinearOp = field(repr=False)
    A: np.ndarray = field(repr=False)
    cond_normalizer: float = field(repr=False, default=0.0)

    @property
    def dim(self):
        return self.J.dim


def linear_acs(J: RLinearOp, tol: float = TOL_ACS) -> LinearACS:
    """Validate J o J = -I and compute B, L and the complex representation A.

    J_st + J must be invertible; its conditioning is reported on failure.
    """
    n = J.dim
    jj = J.compose(J)
    res = opnorm(jj.add(RLinearOp.identity(n)).real_matrix())
    scale = max(1.0, J.norm() ** 2)
    if res > tol * scale:
        raise DomainError(f"J o J differs from -I by {res:.3e}")
    jst = RLinearOp.j_standard(n)
    B = jst.compose(J).scale(-1.0)
    ib = RLinearOp.identity(n).add(B).real_matrix()
    cond = np.linalg.cond(ib)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularityError("J_st + J is numerically singular", cond=cond)
    L = RLinearOp.from_real_matrix(np.linalg.solve(ib, RLinearOp.identity(n).sub(B).real_matrix()))
    # antilinearity: the C-linear part of L must vanish
    lin_part = opnorm(L.P)
    if lin_part > max(tol, tol * opnorm(L.Q)):
        raise DomainError(f"complex representation is not antilinear: linear part {lin_part:.3e}")
    return LinearACS(J=J, B=B, L=L, A=L.Q.copy(), cond_normalizer=float(cond))


def complex_representation(J, tol: float = TOL_ACS):
    """Antilinear matrix A with (J_st + J)^{-1}(J_st - J) h = A conj(h)."""
    acs = J if isinstance(J, LinearACS) else linear_acs(J, tol)
    return acs.A


def acs_from_representation(A) -> LinearACS:
    """Rebuild J = J_st (I - L)(I + L)^{-1} from the antilinear matrix of L."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    L = RLinearOp.antilinear(A)
    ident = RLinearOp.identity(n)
    J = RLinearOp.j_standard(n).compose(ident.sub(L)).compose(ident.add(L).inv())
    return linear_acs(J)


def direct_image(F: RLinearOp, J: RLinearOp | None = None) -> LinearACS:
    """Direct image F o J o F^{-1}; J defaults to J_st."""
    if J is None:
        J = RLinearOp.j_standard(F.dim)
    return linear_acs(F.compose(J).compose(F.inv()))


@dataclass(frozen=True)
class TamingReport:
    tamed: bool
    min_pairing: float       # min over sampled unit u of omega(u, J u)
    min_eig_sym: float       # smallest eigenvalue of the symmetric part of B
    trials: int

    def __bool__(self):
        return self.tamed


def is_tamed(J, trials: int = 200, seed: int = 0) -> TamingReport:
    """Sampled check omega(u, J u) > 0 plus the exact spectral certificate.

    Taming is equivalent to positive definiteness of the symmetric part of
    the real matrix of B = -J_st o J; nothing here needs J_st + J to be
    invertible, so a non-tamed J is reported rather than rejected.
    """
    Jop = J.J if isinstance(J, LinearACS) else J
    n = Jop.dim
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(trials):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u /= np.linalg.norm(u)
        worst = min(worst, omega(u, Jop(u)))
    B = RLinearOp.j_standard(n).compose(Jop).scale(-1.0)
    m = B.real_matrix()
    eig_min = float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])
    return TamingReport(tamed=bool(worst > 0.0 and eig_min > 0.0),
                        min_pairing=float(worst), min_eig_sym=eig_min, trials=trials)


def is_compatible(J, tol: float = TOL_STRUCT):
    """Compatibility test A^t = A for a tamed structure; asserts ||A|| < 1 when true."""
    acs = J if isinstance(J, LinearACS) else linear_acs(J)
    if not is_tamed(acs).tamed:
        return False
    sym_defect = opnorm(acs.A.T - acs.A)
    if sym_defect > tol * max(1.0, opnorm(acs.A)):
        return False
    a_norm = opnorm(acs.A)
    if a_norm >= 1.0:
        raise DomainError(f"compatible structure with ||A|| = {a_norm} >= 1")
    return True


def build_unit_norm_example(n: int, c) -> LinearACS:
    """Tamed, non-compatible structure on C^(2n) whose ||A|| equals max(c).

    J = {i I, Q} with Q the block [[0, 2 diag(c)], [0, 0]]; Q conj(Q) = 0
    guarantees J o J = -I, and the representation is A = (i/2) Q.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (n,):
        raise ShapeError(f"need exactly {n} diagonal entries, got shape {c.shape}")
    if np.any(c <= 0.0) or np.any(c >= 1.0):
        raise DomainError("diagonal entries must lie strictly in (0, 1)")
    Q = np.zeros((2 * n, 2 * n), dtype=complex)
    Q[:n, n:] = 2.0 * np.diag(c)
    J = RLinearOp(1j * np.eye(2 * n), Q)
    return linear_acs(J)


@dataclass(frozen=True)
class ContractionReport:
    max_ratio: float
    strict: bool      # all sampled ratios < 1
    trials: int


def taming_bound_L(J, trials: int = 400, seed: int = 0) -> ContractionReport:
    """Sample ||L x|| / ||x|| on unit vectors; tamed J gives ratios < 1.

    The sup may approach 1 (no uniform bound for merely tamed structures).
    """
    acs = J if isinstance(J, LinearACS) else linear_acs(J)
    n = acs.dim
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u /= np.linalg.norm(u)
        worst = max(worst, float(np.linalg.norm(acs.L(u))))
    # bias the sample toward the top singular pair of the real matrix of L
    m = acs.L.real_matrix()
    _, _, vt = np.linalg.svd(m)
    x = vt[0]
    worst = max(worst, float(np.linalg.norm(m @ x)))
    return ContractionReport(max_ratio=worst, strict=bool(worst < 1.0), trials=trials)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def omega_real_matrix(n):
    """Matrix of omega on stacked (x, y) coordinates: [[0, I], [-I, 0]]."""
    z = np.zeros((n, n))
    i = np.eye(n)
    return np.block([[z, i], [-i, z]])


def random_symplectomorphism(n: int, seed: int = 0, scale: float = 0.5) -> RLinearOp:
    """exp of a random Hamiltonian generator; omega-preserving up to expm accuracy."""
    rng = np.random.default_rng(seed)
    s = rng.standard_normal((2 * n, 2 * n))
    s = 0.5 * (s + s.T)
    s *= scale / max(opnorm(s), 1e-30)
    x = -omega_real_matrix(n) @ s
    return RLinearOp.from_real_matrix(expm(x))


def random_compatible_structure(n: int, seed: int = 0, scale: float = 0.5) -> LinearACS:
    """Direct image of J_st under a random linear symplectomorphism."""
    return direct_image(random_symplectomorphism(n, seed=seed, scale=scale))


# ---------------------------------------------------------------------------
# serialization (the grid module's field-file layout, one matrix per file)
# ---------------------------------------------------------------------------


def save_matrix(path, m):
    """JSON header line, then raw little-endian complex entries, row-major."""
    import json

    m = np.ascontiguousarray(np.asarray(m, dtype=complex))
    header = {"rows": m.shape[0], "cols": m.shape[1], "precision": "f64"}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(m.astype("<c16").tobytes())


def load_matrix(path):
    import json

    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    m = np.frombuffer(raw, dtype="<c16").astype(complex)
    return m.reshape(header["rows"], header["cols"])


def save_rlinear(path_p, path_q, F: RLinearOp):
    save_matrix(path_p, F.P)
    save_matrix(path_q, F.Q)


def load_rlinear(path_p, path_q) -> RLinearOp:
    return RLinearOp(load_matrix(path_p), load_matrix(path_q))
