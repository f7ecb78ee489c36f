"""Per-mode Cauchy-data machinery.

For one tangential mode the operator is an ODE system in the normal
variable; its Cauchy-data space splits into the data of solutions
decaying to the right (side ``plus``) and to the left (side ``minus``).
Two independent constructions of the projector onto the plus space are
implemented: the layer-potential route (boundary values of the decaying
inverse applied to delta layers) and the companion spectral-split
oracle.  They must agree, and tests hold them to that.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .contour import Contour, characteristic_roots, contour_quadrature, enclosing_circle, spectral_split
from .errors import CalderonError, IllConditionedFrame, SingularBlock, SpecError
from .symbols import mode_symbol

__all__ = [
    "CauchyFrame",
    "BlockProjector",
    "SobolevWeight",
    "companion_matrix",
    "cauchy_frame_oracle",
    "jump_operator",
    "invert_jump_operator",
    "layer_potential_blocks",
    "calderon_projector",
    "sobolev_weights",
    "orthogonal_projector",
    "entry_growth_fit",
    "principal_angles",
    "range_basis",
]


@dataclass
class CauchyFrame:
    """Frame whose columns span one side's Cauchy-data subspace.

    Component blocks are ordered ``(u, d_n u, ..., d_n^{k-1} u)``.
    """

    m: tuple
    matrix: np.ndarray  # (rk, d)
    side: str
    normalization: str = "raw"

    def __post_init__(self):
        if self.side not in ("plus", "minus"):
            raise SpecError(f"side must be plus or minus, got {self.side!r}")
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape[1]:
            svals = np.linalg.svd(self.matrix / np.abs(self.matrix).max(), compute_uv=False)
            if svals[-1] <= 1e-10:
                raise IllConditionedFrame(f"frame columns at mode {self.m} are dependent")

    @property
    def dim(self):
        return self.matrix.shape[1]


@dataclass
class BlockProjector:
    """rk x rk projector matrix attached to one mode."""

    m: tuple
    matrix: np.ndarray
    kind: str  # Rplus | Rminus | Pplus | Pminus
    weight: "SobolevWeight | None" = None

    @property
    def side(self):
        return "plus" if self.kind.endswith("plus") else "minus"


@dataclass
class SobolevWeight:
    """Per-component Sobolev weights for one mode.

    Component ``j`` of the Cauchy data carries smoothness index
    ``s_j = k - 1 + alpha - j`` and weight ``(1 + |m|^2)^{s_j}``.
    """

    alpha: float
    k: int
    m: tuple
    indices: tuple
    values: np.ndarray

    def full(self, r):
        """Diagonal of the weight on the rk-dimensional data space."""
        return np.repeat(self.values, r)


def sobolev_weights(m, k, alpha):
    if alpha <= 0:
        raise SpecError("alpha must be positive")
    m = tuple(np.atleast_1d(m))
    msq = float(sum(float(x) ** 2 for x in m))
    indices = tuple(k - 1 + alpha - j for j in range(k))
    values = np.array([(1.0 + msq) ** s for s in indices])
    return SobolevWeight(alpha=alpha, k=k, m=m, indices=indices, values=values)


# ---------------------------------------------------------------------------
# mode stacks (shared by the sweeps in grassmann and the defect scan)


def mode_lattice(n, cutoff):
    """Integer modes with |m|_inf <= cutoff, in ascending lex order."""
    if cutoff < 0:
        raise SpecError("cutoff must be nonnegative")
    axes = [np.arange(-cutoff, cutoff + 1)] * (n - 1)
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack(grid, axis=-1).reshape(-1, n - 1).astype(np.int64)


def mode_matrix_stack(spec, modes):
    """A_q(m) for a whole stack of modes: shape (k+1, N, r, r)."""
    modes = np.asarray(modes, dtype=float)
    N = modes.shape[0]
    A = np.zeros((spec.k + 1, N, spec.r, spec.r), dtype=complex)
    for (q, beta), c in spec.terms.items():
        phase = np.ones(N, dtype=complex)
        for j, bj in enumerate(beta):
            if bj:
                phase *= (1j * modes[:, j]) ** bj
        A[q] += phase[:, None, None] * c
    return A


def companion_stack(spec, modes):
    """Block companion matrices for a stack of modes: (N, rk, rk)."""
    A = mode_matrix_stack(spec, modes)
    k, r = spec.k, spec.r
    N = A.shape[1]
    d = r * k
    C = np.zeros((N, d, d), dtype=complex)
    for j in range(k - 1):
        C[:, j * r : (j + 1) * r, (j + 1) * r : (j + 2) * r] = np.eye(r)
    top = spec.top_coefficient
    for q in range(k):
        C[:, (k - 1) * r :, q * r : (q + 1) * r] = -np.linalg.solve(top, A[q])
    return C


def scan_defect_modes(spec, cutoff, backend=None):
    """Modes in the lattice whose roots touch the real axis."""
    modes = mode_lattice(spec.n, cutoff)
    lam = _kernels.eigvals_sweep(companion_stack(spec, modes), backend=backend)
    gap = np.abs(lam.real).min(axis=1)
    tol = 1e-10 * (1.0 + np.linalg.norm(modes, axis=1))
    bad = modes[gap <= tol]
    if spec.n == 2:
        return [int(m[0]) for m in bad]
    return [tuple(int(x) for x in m) for m in bad]


# ---------------------------------------------------------------------------
# single-mode operations


def companion_matrix(sym):
    """First-order reduction of the mode ODE on ``(u, ..., d_n^{k-1} u)``.

    Its spectrum is ``{i xi_n}`` over the characteristic roots.
    """
    k, r = sym.k, sym.r
    d = r * k
    C = np.zeros((d, d), dtype=complex)
    for j in range(k - 1):
        C[j * r : (j + 1) * r, (j + 1) * r : (j + 2) * r] = np.eye(r)
    for q in range(k):
        C[(k - 1) * r :, q * r : (q + 1) * r] = -np.linalg.solve(sym.A[k], sym.A[q])
    return C


def cauchy_frame_oracle(sym, side):
    """Cauchy-data frame of one side, straight from the companion split.

    ``plus`` returns the stable invariant subspace (solutions decaying
    as x_n grows), ``minus`` the unstable one; the two dimensions sum to
    rk.  Raises DefectMode when the split does not exist.
    """
    split = spectral_split(companion_matrix(sym))
    frame = split.stable if side == "plus" else split.unstable
    return CauchyFrame(m=sym.m, matrix=frame, side=side, normalization="raw")


def jump_operator(sym):
    """Block anti-Hankel matrix pairing Cauchy data with delta-layer
    densities: block ``(q, p)`` equals ``A_{q+p+1}(m)`` when the index
    stays within the order, zero below the anti-diagonal."""
    k, r = sym.k, sym.r
    out = np.zeros((r * k, r * k), dtype=complex)
    for q in range(k):
        for p in range(k - q):
            out[q * r : (q + 1) * r, p * r : (p + 1) * r] = sym.A[q + p + 1]
    return out


def invert_jump_operator(a_op, block_size):
    """Exact inverse of the anti-triangular block matrix from
    :func:`jump_operator`, by back substitution along block rows.

    The result has the top-order block inverse on the anti-diagonal and
    vanishes above it.  Raises SingularBlock when that block is
    singular.
    """
    a_op = np.asarray(a_op, dtype=complex)
    r = block_size
    d = a_op.shape[0]
    if d % r:
        raise SpecError("matrix size is not a multiple of the block size")
    k = d // r
    blocks = {t: a_op[0:r, (t - 1) * r : t * r] for t in range(1, k + 1)}
    top = a_op[(k - 1) * r :, 0:r]  # A_k, also visible in the last block row
    if abs(np.linalg.det(top)) < 1e-300:
        raise SingularBlock("top-order block is singular")
    top_inv = np.linalg.inv(top)
    X = np.zeros((k, k, r, r), dtype=complex)
    eye = np.eye(r, dtype=complex)
    for p in range(k):
        for j in range(k):
            rhs = eye if j == k - 1 - p else np.zeros((r, r), dtype=complex)
            acc = rhs.astype(complex)
            for pp in range(p):
                acc = acc - blocks[k - p + pp] @ X[pp, j]
            X[p, j] = top_inv @ acc
    out = np.zeros((d, d), dtype=complex)
    for p in range(k):
        for j in range(k):
            out[p * r : (p + 1) * r, j * r : (j + 1) * r] = X[p, j]
    return out


def _adjugate(M):
    d = M.shape[0]
    if d == 1:
        return np.eye(1, dtype=complex)
    adj = np.empty((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            minor = np.delete(np.delete(M, i, axis=0), j, axis=1)
            adj[j, i] = (-1) ** (i + j) * np.linalg.det(minor)
    return adj


def _powers_of_inverse(sym, n_powers):
    powers = np.arange(n_powers)

    def f(z):
        inv = np.linalg.inv(sym(z))
        zp = z[:, None] ** powers[None, :]
        return zp[:, :, None, None] * inv[:, None, :, :]

    return f


def layer_potential_blocks(sym, quad_tol=1e-10, agreement_tol=1e-8, cross_check=True):
    """Boundary blocks of the decaying solution operator.

    Block ``(q, p)`` is ``i^{p+q+1}`` times the counter-clockwise
    integral mean of ``xi^{p+q} a(m, xi)^{-1}`` around the roots in the
    upper half plane (the decaying side).  Two routes compute it:

    * residue algebra at the characteristic roots (local circles take
      over at multiple roots),
    * global contour quadrature around the whole upper root group,

    and with ``cross_check`` both must agree to ``agreement_tol``
    relative to the block scale.
    """
    k, r = sym.k, sym.r
    n_powers = 2 * k - 1
    roots = characteristic_roots(sym)
    upper = [c for c in roots if c[2] == "upper"]
    J = np.zeros((n_powers, r, r), dtype=complex)

    if upper:
        lam = np.linalg.eigvals(companion_matrix(sym))
        det_top = np.linalg.det(sym.A[k])
        powers = np.arange(n_powers)
        for root, mult, _ in upper:
            if mult == 1:
                adj = _adjugate(sym(root))
                lam_l = 1j * root
                i0 = int(np.argmin(np.abs(lam - lam_l)))
                denom = det_top * 1j * np.prod(lam_l - np.delete(lam, i0))
                res = adj / denom
                J += (root**powers)[:, None, None] * res
            else:
                others = [c[0] for c in roots if abs(c[0] - root) > 0]
                if others:
                    radius = 0.45 * min(abs(root - o) for o in others)
                else:
                    radius = max(0.5, 0.5 * abs(root))
                circle = Contour.circle(root, radius)
                val, _ = contour_quadrature(_powers_of_inverse(sym, n_powers), circle, tol=quad_tol)
                J += val

    def assemble(j_w):
        out = np.zeros((r * k, r * k), dtype=complex)
        for q in range(k):
            for p in range(k):
                out[q * r : (q + 1) * r, p * r : (p + 1) * r] = (1j) ** (p + q + 1) * j_w[p + q]
        return out

    B = assemble(J)

    if cross_check and upper:
        centers = np.array([c[0] for c in upper])
        excluded = np.array([c[0] for c in roots if c[2] != "upper"])
        circle = enclosing_circle(centers, excluded=excluded)
        Jq, _ = contour_quadrature(_powers_of_inverse(sym, n_powers), circle, tol=quad_tol)
        Bq = assemble(Jq)
        err = np.abs(B - Bq).max()
        if err > agreement_tol * (1.0 + np.abs(B).max()):
            raise CalderonError(
                f"layer-potential routes disagree at mode {sym.m}: {err:.3e}"
            )
    return B


def calderon_projector(sym, side="plus", quad_tol=1e-10, cross_check=True):
    """Projector onto one side's Cauchy-data space along the other.

    The plus projector is the layer-potential block matrix times the
    jump operator; the minus one is its complement, exactly.
    """
    B = layer_potential_blocks(sym, quad_tol=quad_tol, cross_check=cross_check)
    R = B @ jump_operator(sym)
    if side == "minus":
        R = np.eye(R.shape[0], dtype=complex) - R
        return BlockProjector(m=sym.m, matrix=R, kind="Rminus")
    if side != "plus":
        raise SpecError(f"side must be plus or minus, got {side!r}")
    return BlockProjector(m=sym.m, matrix=R, kind="Rplus")


def orthogonal_projector(frame_or_proj, weight):
    """Weighted-orthogonal projector with the same range as the input.

    Computes ``F (F* W F)^{-1} F* W`` for a frame F of the range, with
    all factorizations done on ``W^{1/2}``-scaled columns for stability.
    A zero-dimensional range returns the zero matrix; a Gram condition
    number above 1e12 raises IllConditionedFrame.
    """
    if isinstance(frame_or_proj, CauchyFrame):
        F = frame_or_proj.matrix
        side = frame_or_proj.side
        m = frame_or_proj.m
    elif isinstance(frame_or_proj, BlockProjector):
        M = frame_or_proj.matrix
        rank = int(round(float(np.trace(M).real)))
        if rank:
            u, s, _ = np.linalg.svd(M)
            F = u[:, :rank]
        else:
            F = np.zeros((M.shape[0], 0), dtype=complex)
        side = frame_or_proj.side
        m = frame_or_proj.m
    else:
        raise SpecError("expected a CauchyFrame or a BlockProjector")

    d = F.shape[0]
    kind = "Pplus" if side == "plus" else "Pminus"
    if (weight.values <= 0).any():
        raise SpecError("weights must be positive")
    if F.shape[1] == 0:
        return BlockProjector(m=m, matrix=np.zeros((d, d), dtype=complex), kind=kind, weight=weight)
    w = weight.full(d // weight.k)
    sqw = np.sqrt(w)
    G = sqw[:, None] * F
    u, s, _ = np.linalg.svd(G, full_matrices=False)
    if (s[0] / s[-1]) ** 2 > 1e12:
        raise IllConditionedFrame(f"weighted Gram matrix at mode {m} is numerically singular")
    Q = u[:, : F.shape[1]]
    P_hat = Q @ Q.conj().T
    P = P_hat * (sqw[None, :] / sqw[:, None])
    return BlockProjector(m=m, matrix=P, kind=kind, weight=weight)


def range_basis(proj_matrix):
    """Orthonormal basis of the range of a (numerical) projector.

    The rank comes from the trace, which is exact for idempotents.
    """
    M = np.asarray(proj_matrix, dtype=complex)
    rank = int(round(float(np.trace(M).real)))
    if rank == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    return np.linalg.svd(M)[0][:, :rank]


def principal_angles(F, G):
    """Principal angles between two column spaces, largest first.

    Angles near zero are resolved through complement sines rather than
    arccos of Gram singular values, so subspace agreement down to 1e-14
    is measurable.  A dimension mismatch contributes right angles; the
    returned list has length max(dim F, dim G).
    """
    F = np.asarray(F, dtype=complex)
    G = np.asarray(G, dtype=complex)
    qf = np.linalg.qr(F)[0] if F.shape[1] else F
    qg = np.linalg.qr(G)[0] if G.shape[1] else G
    df, dg = qf.shape[1], qg.shape[1]
    if df == 0 and dg == 0:
        return np.zeros(0)
    if df == 0 or dg == 0:
        return np.full(max(df, dg), np.pi / 2)
    small, big = (qf, qg) if df <= dg else (qg, qf)
    comp = small - big @ (big.conj().T @ small)
    sines = np.linalg.svd(comp, compute_uv=False)
    sines = np.concatenate([np.ones(abs(df - dg)), sines])
    return np.arcsin(np.clip(np.sort(sines)[::-1], 0.0, 1.0))


def entry_growth_fit(spec, side, modes):
    """Log-log slopes of the k x k block norms of the projector over a
    mode range.

    Returns a (k, k) float matrix of fitted exponents; a block that is
    identically zero across the range yields NaN (degenerate fit, not a
    number).  The mode range must span at least a decade.
    """
    mode_list = [np.atleast_1d(m) for m in modes]
    radii = np.array([np.linalg.norm(m) for m in mode_list])
    if radii.min() <= 0 or radii.max() / radii.min() < 10.0:
        raise SpecError("mode range must span at least one decade away from zero")
    k, r = spec.k, spec.r
    norms = np.zeros((k, k, len(mode_list)))
    for idx, m in enumerate(mode_list):
        R = calderon_projector(mode_symbol(spec, m), side).matrix
        for q in range(k):
            for j in range(k):
                block = R[q * r : (q + 1) * r, j * r : (j + 1) * r]
                norms[q, j, idx] = np.linalg.norm(block, 2)
    slopes = np.full((k, k), np.nan)
    scale = norms.max()
    logx = np.log(radii)
    for q in range(k):
        for j in range(k):
            vals = norms[q, j]
            if vals.max() <= 1e-12 * max(scale, 1.0):
                continue  # identically zero block: no exponent
            mask = vals > 0
            slopes[q, j] = np.polyfit(logx[mask], np.log(vals[mask]), 1)[0]
    return slopes
