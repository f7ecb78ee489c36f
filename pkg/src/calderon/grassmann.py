"""Truncated Grassmannian points and their pairwise comparison.

A point collects, for every tangential mode up to a cutoff, a weighted
orthonormal frame of the decaying-solution Cauchy data.  Comparing two
points mode by mode through principal angles yields the singular values
of the projector difference, whose decay rate and kernel bookkeeping
realize compactness, Schatten-class membership and the Fredholm index
at finite truncation.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    CutoffMismatch,
    DefectMode,
    InsufficientData,
    NoChiralStructure,
    SpecError,
    ThresholdAmbiguous,
    TailUnsafe,
)
from .projector import CauchyFrame, companion_stack, mode_lattice
from .symbols import agree_up_to_order, build_gallery

DEFAULT_ALPHA = 0.5


def _mode_key(vec):
    vec = np.atleast_1d(vec)
    if len(vec) == 1:
        return int(vec[0])
    return tuple(int(x) for x in vec)


def _weight_diag(modes, k, r, alpha):
    """Full per-mode weight diagonals, shape (N, rk)."""
    msq = (np.asarray(modes, dtype=float) ** 2).sum(axis=1)
    exps = np.array([k - 1 + alpha - j for j in range(k)])
    vals = (1.0 + msq)[:, None] ** exps[None, :]
    return np.repeat(vals, r, axis=1)


@dataclass
class GrassmannPoint:
    """Truncated Cauchy-data space: one weighted frame per retained mode."""

    spec: object
    cutoff: int
    alpha: float
    modes: np.ndarray  # (N, n-1) retained modes
    dims: np.ndarray  # (N,) frame dimensions
    ortho: np.ndarray = field(repr=False)  # (N, d, d) frames in W^(1/2) coordinates
    weights: np.ndarray = field(repr=False)  # (N, d) weight diagonals
    excluded: list = field(default_factory=list)  # defect modes left out
    chiral_side: str | None = None

    def __post_init__(self):
        self._index = {_mode_key(m): i for i, m in enumerate(self.modes)}

    @property
    def ambient_dim(self):
        return self.ortho.shape[1]

    def mode_index(self, m):
        key = _mode_key(np.atleast_1d(m))
        if key not in self._index:
            raise SpecError(f"mode {key} is not retained in this point")
        return self._index[key]

    def frame(self, m):
        """W-orthonormal Cauchy frame at one mode."""
        i = self.mode_index(m)
        d = int(self.dims[i])
        mat = self.ortho[i][:, :d] / np.sqrt(self.weights[i])[:, None]
        return CauchyFrame(
            m=tuple(int(x) for x in self.modes[i]),
            matrix=mat,
            side="plus",
            normalization="W-orthonormal",
        )

    def nontrivial_modes(self):
        return [_mode_key(m) for m, d in zip(self.modes, self.dims) if d > 0]


def assemble_point(spec, cutoff, alpha=DEFAULT_ALPHA, strict=False, backend=None):
    """Build the truncated decaying-side point of an operator.

    Frames are the stable invariant subspaces of the per-mode companion
    matrices, rescaled by ``W^{1/2}`` and re-orthonormalized.  Defect
    modes (real-axis characteristic roots) are excluded and listed,
    unless ``strict`` is set, in which case they raise.
    """
    if cutoff < 1:
        raise SpecError("cutoff must be at least 1")
    if alpha <= 0:
        raise SpecError("alpha must be positive")
    modes = mode_lattice(spec.n, cutoff)
    comp = companion_stack(spec, modes)
    lam = _kernels.eigvals_sweep(comp, backend=backend)
    gap = np.abs(lam.real).min(axis=1)
    tol = 1e-10 * (1.0 + np.linalg.norm(modes, axis=1))
    bad = gap <= tol
    if strict and bad.any():
        first = modes[bad][0]
        raise DefectMode(
            f"defect mode {_mode_key(first)} in strict assembly", mode=_mode_key(first)
        )
    excluded = [_mode_key(m) for m in modes[bad]]
    keep = ~bad
    modes = modes[keep]
    comp = comp[keep]
    dims = (lam[keep].real < 0).sum(axis=1).astype(np.int64)

    proj = _kernels.stable_projector_sweep(comp, backend=backend)
    raw = _kernels.orthonormal_range_sweep(proj, dims, backend=backend)
    w = _weight_diag(modes, spec.k, spec.r, alpha)
    weighted = np.sqrt(w)[:, :, None] * raw
    ortho = _kernels.orthonormal_range_sweep(weighted, dims, backend=backend)
    return GrassmannPoint(
        spec=spec,
        cutoff=int(cutoff),
        alpha=float(alpha),
        modes=modes,
        dims=dims,
        ortho=ortho,
        weights=w,
        excluded=excluded,
    )


def krichever_reference(cutoff, alpha=DEFAULT_ALPHA):
    """Hardy-space model point: the dbar(0.5) point, nontrivial exactly
    on modes m <= 0 under the fixed conventions."""
    if cutoff < 1:
        raise SpecError("cutoff must be at least 1")
    return assemble_point(build_gallery("dbar", mu=0.5), cutoff, alpha=alpha)


def chiral_point(spec, side, cutoff, alpha=DEFAULT_ALPHA, strict=False, backend=None):
    """Project a point's frames onto the declared L or R component block.

    Only available for first-order operators of even rank carrying a
    chiral marking; the projected frames are re-orthonormalized and
    collapsed ranks are recorded in the dimensions.
    """
    if side not in ("L", "R"):
        raise SpecError(f"side must be L or R, got {side!r}")
    if spec.chiral_blocks is None or spec.k != 1 or spec.r % 2:
        raise NoChiralStructure(
            f"{spec.name} has no usable chiral block structure (need k=1, even rank, marking)"
        )
    base = assemble_point(spec, cutoff, alpha=alpha, strict=strict, backend=backend)
    rows = list(spec.chiral_blocks[0 if side == "L" else 1])
    sub = np.ascontiguousarray(base.ortho[:, rows, :])
    svals = _kernels.svdvals_sweep(sub, backend=backend)
    dims = (svals > 1e-10).sum(axis=1).astype(np.int64)
    ortho = _kernels.orthonormal_range_sweep(sub, dims, backend=backend)
    return GrassmannPoint(
        spec=spec,
        cutoff=base.cutoff,
        alpha=base.alpha,
        modes=base.modes,
        dims=dims,
        ortho=ortho,
        weights=base.weights[:, rows],
        excluded=base.excluded,
        chiral_side=side,
    )


@dataclass
class CompareReport:
    """Mode-by-mode geometry of two points plus the merged spectrum.

    Per mode the report keeps the principal angles (dimension jumps
    count as right angles), the operator norm of the projector
    difference, and the singular values of the one-sided restriction
    ``(I - P_B)|_A``.  The global list ``svals`` repeats the sine of
    every angle twice, the fixed counting convention for projector
    differences used throughout.
    """

    modes: np.ndarray
    dims_a: np.ndarray
    dims_b: np.ndarray
    angles: list
    diff_norms: np.ndarray
    svals: np.ndarray
    q_svals: np.ndarray
    agreement: object
    skipped: list
    cutoff: int
    alpha: float
    cos_svals: list = field(repr=False, default_factory=list)

    @property
    def max_difference(self):
        return float(self.diff_norms.max()) if len(self.diff_norms) else 0.0


def _common_indices(a, b):
    keys_a = {_mode_key(m): i for i, m in enumerate(a.modes)}
    ia, ib, rows = [], [], []
    for j, m in enumerate(b.modes):
        key = _mode_key(m)
        if key in keys_a:
            ia.append(keys_a[key])
            ib.append(j)
            rows.append(m)
    return np.array(ia, dtype=int), np.array(ib, dtype=int), np.array(rows)


def compare_points(a, b, backend=None):
    """Principal-angle comparison of two Grassmannian points.

    Requires matching cutoff, weight exponent and ambient conventions.
    Modes excluded from either point (defects) are skipped and listed.
    """
    if a.cutoff != b.cutoff:
        raise CutoffMismatch(f"cutoffs differ: {a.cutoff} vs {b.cutoff}")
    if abs(a.alpha - b.alpha) > 0:
        raise CutoffMismatch(f"weight exponents differ: {a.alpha} vs {b.alpha}")
    if a.ambient_dim != b.ambient_dim or a.spec.n != b.spec.n or a.spec.k != b.spec.k:
        raise CutoffMismatch("points live in incompatible Cauchy-data spaces")

    ia, ib, rows = _common_indices(a, b)
    skipped = sorted(set(a.excluded) | set(b.excluded), key=lambda x: (np.atleast_1d(x).tolist()))
    QA = a.ortho[ia]
    QB = b.ortho[ib]
    da = a.dims[ia]
    db = b.dims[ib]
    n = len(ia)
    d = a.ambient_dim

    if n:
        cross = np.einsum("nij,nik->njk", QA.conj(), QB)
        comp_a = QA - QB @ np.conj(np.swapaxes(cross, 1, 2))
        sines_a = _kernels.svdvals_sweep(comp_a, backend=backend)
        diff = QA @ np.conj(np.swapaxes(QA, 1, 2)) - QB @ np.conj(np.swapaxes(QB, 1, 2))
        diff_sv = _kernels.svdvals_sweep(diff, backend=backend)
        cos_sv = _kernels.svdvals_sweep(cross, backend=backend)
    else:
        sines_a = np.zeros((0, d))
        diff_sv = np.zeros((0, d))
        cos_sv = np.zeros((0, d))

    angles = []
    cosines = []
    q_parts = []
    global_parts = []
    diff_norms = np.zeros(n)
    for i in range(n):
        na, nb = int(da[i]), int(db[i])
        sines = sines_a[i][:na]
        if nb > na:
            sines = np.concatenate([np.ones(nb - na), sines])
        sines = np.sort(sines)[::-1]
        angles.append(np.arcsin(np.clip(sines, 0.0, 1.0)))
        cosines.append(cos_sv[i][: min(na, nb)])
        q_parts.append(sines_a[i][:na])
        global_parts.append(np.repeat(sines, 2))
        diff_norms[i] = diff_sv[i][0] if (na or nb) else 0.0

    svals = np.sort(np.concatenate(global_parts))[::-1] if global_parts else np.zeros(0)
    q_svals = np.sort(np.concatenate(q_parts))[::-1] if q_parts else np.zeros(0)
    same_shape = (a.spec.n, a.spec.r, a.spec.k) == (b.spec.n, b.spec.r, b.spec.k)
    return CompareReport(
        modes=rows,
        dims_a=da,
        dims_b=db,
        angles=angles,
        diff_norms=diff_norms,
        svals=svals,
        q_svals=q_svals,
        agreement=agree_up_to_order(a.spec, b.spec) if same_shape else None,
        skipped=skipped,
        cutoff=a.cutoff,
        alpha=a.alpha,
        cos_svals=cosines,
    )


def outer_shell_max(rep):
    """Largest projector-difference norm on the outer half of the modes.

    The finite-cutoff shadow of compactness: this number must trend down
    as the cutoff doubles.
    """
    if len(rep.modes) == 0:
        return 0.0
    radius = np.abs(rep.modes).max(axis=1)
    shell = radius > rep.cutoff / 2
    if not shell.any():
        return 0.0
    return float(rep.diff_norms[shell].max())


@dataclass
class SchattenReport:
    """Tail statistics of the comparison spectrum."""

    svals: np.ndarray = field(repr=False)
    count: int
    finite_rank: int | None
    slope: float | None
    slope_halfwidth: float | None
    window: tuple | None
    target_exponent: float
    bound_constant: float | None
    bound_holds: bool | None
    sums: dict
    tail_increase: dict
    sums_converging: dict


def schatten_fit(rep, n, q, p_list=(1.0, 2.0), window=None):
    """Fit the decay exponent of the sorted singular values.

    The log-log fit runs over the middle decade of the sorted spectrum
    by default (indices around sqrt(count)), away from both the
    non-asymptotic head and the truncation edge.  Fewer than 50 nonzero
    values short-circuits to an explicit finite-rank report.  The decay
    target for operators agreeing to order ``q`` in dimension ``n`` is
    ``-(q + 1) / (n - 1)``.
    """
    if not isinstance(q, (int, np.integer)) or q < 0:
        raise SpecError("agreement order q must be a nonnegative integer")
    svals = np.asarray(rep.svals, dtype=float)
    if svals.size == 0 and len(rep.modes) == 0:
        raise InsufficientData("comparison produced no singular values")
    target = -(q + 1) / (n - 1)
    scale = svals[0] if svals.size else 0.0
    positive = svals[svals > 1e-13 * max(scale, 1.0)]
    J = positive.size

    def partial_sums(vals):
        sums, tail, conv = {}, {}, {}
        for p in p_list:
            powers = vals**p
            total = float(powers.sum())
            half = float(powers[: max(1, len(vals) // 2)].sum()) if len(vals) else 0.0
            quarter = float(powers[: max(1, len(vals) // 4)].sum()) if len(vals) else 0.0
            sums[p] = total
            tail[p] = (total - half) / half if half > 0 else 0.0
            conv[p] = (total - half) <= (half - quarter) + 1e-15
        return sums, tail, conv

    sums, tail, conv = partial_sums(positive)
    if J < 50:
        return SchattenReport(
            svals=svals,
            count=J,
            finite_rank=J,
            slope=None,
            slope_halfwidth=None,
            window=None,
            target_exponent=target,
            bound_constant=None,
            bound_holds=None,
            sums=sums,
            tail_increase=tail,
            sums_converging=conv,
        )

    if window is None:
        mid = np.sqrt(J)
        lo = max(5, int(round(mid / np.sqrt(10.0))))
        hi = min(J, int(round(mid * np.sqrt(10.0))))
    else:
        lo, hi = window
        lo, hi = max(1, int(lo)), min(J, int(hi))
    if hi - lo < 10:
        raise InsufficientData(f"fit window [{lo}, {hi}] is too narrow")

    j = np.arange(1, J + 1, dtype=float)
    sel = slice(lo - 1, hi)
    x = np.log(j[sel])
    y = np.log(positive[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(1, len(x) - 2)
    se = np.sqrt((resid**2).sum() / dof / ((x - x.mean()) ** 2).sum())
    halfwidth = 1.96 * float(se)

    C = float((positive[sel] * j[sel] ** (-target)).max())
    tail_sel = slice(lo - 1, J)
    bound_holds = bool(
        (positive[tail_sel] <= C * j[tail_sel] ** target * (1 + 1e-9)).all()
    )
    return SchattenReport(
        svals=svals,
        count=J,
        finite_rank=None,
        slope=float(slope),
        slope_halfwidth=halfwidth,
        window=(lo, hi),
        target_exponent=target,
        bound_constant=C,
        bound_holds=bound_holds,
        sums=sums,
        tail_increase=tail,
        sums_converging=conv,
    )


@dataclass
class IndexReport:
    """Kernel/cokernel bookkeeping of the cross-restriction map.

    The map goes from the first point's subspace to the second's; its
    kernel collects the directions of the first point that the second
    point's projector annihilates.  ``tail_safe`` certifies that the
    outermost mode shell is far from producing further kernel
    directions; only then is the index declared converged.
    """

    modes: np.ndarray
    kernel_dims: np.ndarray
    cokernel_dims: np.ndarray
    kernel_total: int
    cokernel_total: int
    index: int
    tail_safe: bool
    min_tail_gap: float
    tol: float

    @property
    def converged(self):
        return self.tail_safe


def fredholm_index(a, b, tol=1e-6, strict_tail=False, rep=None):
    """Index of the restriction of b's projector to a's subspace.

    Per mode, kernel dimensions count cross-Gram singular values below
    ``tol``; any value inside the forbidden decade ``[tol, 10 tol)``
    raises ThresholdAmbiguous.  Tail safety requires every outermost
    -shell mode to keep its largest principal angle at least 0.5 rad
    away from a right angle; with ``strict_tail`` an unsafe tail raises
    TailUnsafe instead of being reported.
    """
    if rep is None:
        rep = compare_points(a, b)
    n = len(rep.modes)
    ker = np.zeros(n, dtype=int)
    cok = np.zeros(n, dtype=int)
    for i in range(n):
        na, nb = int(rep.dims_a[i]), int(rep.dims_b[i])
        cos = np.asarray(rep.cos_svals[i])
        band = (cos >= tol) & (cos < 10 * tol)
        if band.any():
            raise ThresholdAmbiguous(
                f"singular value in [{tol:.1e}, {10 * tol:.1e}) at mode "
                f"{_mode_key(rep.modes[i])}; adjust tol"
            )
        rank = int((cos > tol).sum())
        ker[i] = na - rank
        cok[i] = nb - rank

    radius = np.abs(rep.modes).max(axis=1) if n else np.zeros(0)
    shell = radius == rep.cutoff
    gaps = []
    for i in np.nonzero(shell)[0]:
        ang = rep.angles[i]
        gaps.append(np.pi / 2 - float(ang[0]) if len(ang) else np.pi / 2)
    min_gap = min(gaps) if gaps else np.pi / 2
    tail_safe = min_gap > 0.5
    if strict_tail and not tail_safe:
        raise TailUnsafe(f"outermost shell angle gap {min_gap:.3f} rad is below 0.5")
    return IndexReport(
        modes=rep.modes,
        kernel_dims=ker,
        cokernel_dims=cok,
        kernel_total=int(ker.sum()),
        cokernel_total=int(cok.sum()),
        index=int(ker.sum() - cok.sum()),
        tail_safe=tail_safe,
        min_tail_gap=float(min_gap),
        tol=tol,
    )
