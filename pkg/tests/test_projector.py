import numpy as np
import pytest

from calderon.errors import DefectMode, IllConditionedFrame, SingularBlock, SpecError
from calderon.projector import (
    calderon_projector,
    cauchy_frame_oracle,
    companion_matrix,
    entry_growth_fit,
    invert_jump_operator,
    jump_operator,
    layer_potential_blocks,
    mode_lattice,
    orthogonal_projector,
    principal_angles,
    range_basis,
    scan_defect_modes,
    sobolev_weights,
)
from calderon.contour import spectral_split
from calderon.symbols import build_gallery, mode_symbol

from test_symbols import GALLERY, sample_modes


def _weighted_angle_frames(F, w):
    G = np.sqrt(w)[:, None] * F
    return np.linalg.qr(G)[0] if F.shape[1] else G


# ---------------------------------------------------------------------------
# companion and oracle


def test_companion_matrices():
    lap = build_gallery("laplace_mass", mu=1)
    C = companion_matrix(mode_symbol(lap, 0))
    assert np.abs(C - np.array([[0, 1], [1, 0]])).max() < 1e-14
    db = build_gallery("dbar", mu=0.5)
    assert companion_matrix(mode_symbol(db, 0))[0, 0] == pytest.approx(-0.5)
    assert companion_matrix(mode_symbol(db, 3))[0, 0] == pytest.approx(2.5)


def test_companion_spectrum_is_i_times_roots():
    lap = build_gallery("laplace_mass", mu=1)
    sym = mode_symbol(lap, 2)
    lam = np.sort_complex(np.linalg.eigvals(companion_matrix(sym)))
    s = np.sqrt(5.0)
    assert np.abs(lam - np.array([-s, s])).max() < 1e-12


def test_oracle_frames():
    db = build_gallery("dbar", mu=0.5)
    assert cauchy_frame_oracle(mode_symbol(db, 0), "plus").dim == 1
    assert cauchy_frame_oracle(mode_symbol(db, 3), "plus").dim == 0
    lap = build_gallery("laplace_mass", mu=1)
    fr = cauchy_frame_oracle(mode_symbol(lap, 2), "plus")
    v = fr.matrix[:, 0]
    assert v[1] / v[0] == pytest.approx(-np.sqrt(5.0))
    # plus and minus dimensions fill the Cauchy space
    fm = cauchy_frame_oracle(mode_symbol(lap, 2), "minus")
    assert fr.dim + fm.dim == 2


# ---------------------------------------------------------------------------
# jump operator


def test_jump_operator_blocks():
    lap = build_gallery("laplace_mass", mu=1)
    A = jump_operator(mode_symbol(lap, 0))
    assert np.abs(A - np.array([[0, -1], [-1, 0]])).max() < 1e-14
    db = build_gallery("dbar", mu=0.5)
    assert jump_operator(mode_symbol(db, 7))[0, 0] == 1.0
    d2 = build_gallery("dirac2", mu=1, v=0)
    s1 = np.array([[0, 1], [1, 0]])
    assert np.abs(jump_operator(mode_symbol(d2, 1)) - s1).max() < 1e-14


def test_jump_operator_inverse_pattern():
    # k = 2 scalar with blocks A_1 = c, A_2 = 1
    c = 3.7
    A = np.array([[c, 1.0], [1.0, 0.0]], dtype=complex)
    X = invert_jump_operator(A, 1)
    assert np.abs(X - np.array([[0, 1], [1, -c]])).max() < 1e-14
    assert np.abs(A @ X - np.eye(2)).max() < 1e-13


def test_jump_operator_self_inverse_case():
    A = np.array([[0.0, -1.0], [-1.0, 0.0]], dtype=complex)
    assert np.abs(invert_jump_operator(A, 1) - A).max() < 1e-14


def test_jump_operator_inverse_random_order_three():
    rng = np.random.default_rng(2)
    blocks = {t: rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for t in (1, 2, 3)}
    A = np.zeros((6, 6), dtype=complex)
    for q in range(3):
        for p in range(3 - q):
            A[2 * q : 2 * q + 2, 2 * p : 2 * p + 2] = blocks[q + p + 1]
    X = invert_jump_operator(A, 2)
    cond = np.linalg.cond(A)
    assert np.abs(A @ X - np.eye(6)).max() < 1e-12 * cond
    # anti-triangular: vanishes above the anti-diagonal
    assert np.abs(X[:2, :2]).max() < 1e-14
    assert np.abs(X[:2, 2:4]).max() < 1e-14
    assert np.abs(X[2:4, :2]).max() < 1e-14


def test_singular_top_block_rejected():
    A = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(SingularBlock):
        invert_jump_operator(A, 1)


# ---------------------------------------------------------------------------
# layer-potential blocks


def test_layer_blocks_laplace_closed_form():
    lap = build_gallery("laplace_mass", mu=1)
    B = layer_potential_blocks(mode_symbol(lap, 0))
    assert np.abs(B - np.array([[0.5, -0.5], [-0.5, 0.5]])).max() < 1e-12
    # general mode: ((1/2s, -1/2), (-1/2, s/2))
    B = layer_potential_blocks(mode_symbol(lap, 3))
    s = np.sqrt(10.0)
    expected = np.array([[1 / (2 * s), -0.5], [-0.5, s / 2]])
    assert np.abs(B - expected).max() < 1e-10


def test_layer_blocks_dbar():
    db = build_gallery("dbar", mu=0.5)
    assert layer_potential_blocks(mode_symbol(db, 0))[0, 0] == pytest.approx(1.0)
    assert layer_potential_blocks(mode_symbol(db, 3))[0, 0] == 0.0


def test_layer_blocks_double_root():
    # (d_n + 1)^2 u = 0: every solution decays, so the projector is I
    spec = build_gallery(
        "custom",
        n=2, r=1, k=2,
        terms={(2, (0,)): [[1.0]], (1, (0,)): [[2.0]], (0, (0,)): [[1.0]]},
    )
    sym = mode_symbol(spec, 0)
    B = layer_potential_blocks(sym)
    assert np.abs(B - np.array([[0.0, 1.0], [1.0, -2.0]])).max() < 1e-8
    R = calderon_projector(sym).matrix
    assert np.abs(R - np.eye(2)).max() < 1e-8


def test_layer_blocks_raise_on_defect_mode():
    db0 = build_gallery("dbar", mu=0.0)
    with pytest.raises(DefectMode):
        layer_potential_blocks(mode_symbol(db0, 0))


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_layer_block_routes_agree(name):
    # cross_check=True recomputes every block by global quadrature and
    # raises if the residue route drifts past 1e-8
    spec = build_gallery(name, **GALLERY[name])
    for m in sample_modes(spec, 32, count=10, seed=6):
        try:
            layer_potential_blocks(mode_symbol(spec, m), cross_check=True)
        except DefectMode:
            continue


def test_layer_block_growth_orders():
    lap = build_gallery("laplace_mass", mu=1)
    ms = np.unique(np.geomspace(16, 256, 12).astype(int))
    for (q, p), expected in [((0, 0), -1.0), ((0, 1), 0.0), ((1, 1), 1.0)]:
        vals = [abs(layer_potential_blocks(mode_symbol(lap, int(m)))[q, p]) for m in ms]
        slope = np.polyfit(np.log(ms), np.log(vals), 1)[0]
        assert slope == pytest.approx(expected, abs=0.05)


# ---------------------------------------------------------------------------
# the projector itself


def test_projector_closed_form_all_modes():
    lap = build_gallery("laplace_mass", mu=1)
    for m in range(-64, 65):
        s = np.sqrt(m * m + 1.0)
        expected = np.array([[0.5, -1 / (2 * s)], [-s / 2, 0.5]])
        R = calderon_projector(mode_symbol(lap, m)).matrix
        assert np.abs(R - expected).max() < 1e-10


def test_projector_scalar_rank_cases():
    db = build_gallery("dbar", mu=0.5)
    assert calderon_projector(mode_symbol(db, 0)).matrix[0, 0] == pytest.approx(1.0)
    assert calderon_projector(mode_symbol(db, 3)).matrix[0, 0] == 0.0


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_projector_algebra_and_oracle_range(name):
    spec = build_gallery(name, **GALLERY[name])
    modes = sample_modes(spec, 16, count=10, seed=9)
    for m in modes:
        sym = mode_symbol(spec, m)
        try:
            rp = calderon_projector(sym, "plus").matrix
        except DefectMode:
            continue
        rm = calderon_projector(sym, "minus").matrix
        eye = np.eye(rp.shape[0])
        assert np.abs(rp @ rp - rp).max() < 1e-8
        assert np.abs(rp + rm - eye).max() < 1e-12
        oracle = cauchy_frame_oracle(sym, "plus")
        ang = principal_angles(range_basis(rp), oracle.matrix)
        if len(ang):
            assert ang[0] < 1e-7
        # R+ is the spectral projector of the companion matrix
        sp = spectral_split(companion_matrix(sym))
        assert np.abs(rp - sp.projector).max() < 1e-8


@pytest.mark.parametrize("name", ["dbar", "laplace_mass", "dirac2"])
def test_transversality_uniform_in_weighted_metric(name):
    spec = build_gallery(name, **GALLERY[name])
    worst = np.pi
    for m in range(-64, 65):
        sym = mode_symbol(spec, (m,))
        try:
            fp = cauchy_frame_oracle(sym, "plus")
        except DefectMode:
            continue
        fm = cauchy_frame_oracle(sym, "minus")
        if fp.dim == 0 or fm.dim == 0:
            continue
        w = sobolev_weights((m,), spec.k, 0.5).full(spec.r)
        qp = _weighted_angle_frames(fp.matrix, w)
        qm = _weighted_angle_frames(fm.matrix, w)
        cosmax = np.linalg.svd(qp.conj().T @ qm, compute_uv=False).max()
        worst = min(worst, np.arccos(min(1.0, cosmax)))
    assert worst > 0.2


# ---------------------------------------------------------------------------
# weights and orthogonal projectors


def test_sobolev_weight_values():
    w = sobolev_weights((0,), 1, 0.5)
    assert w.values == pytest.approx([1.0])
    w = sobolev_weights((2,), 2, 0.5)
    assert w.values == pytest.approx([5.0**1.5, 5.0**0.5])
    w = sobolev_weights((0,), 2, 1.0)
    assert w.values == pytest.approx([1.0, 1.0])
    assert w.full(2).shape == (4,)
    with pytest.raises(SpecError):
        sobolev_weights((0,), 1, -1.0)


def test_weights_decrease_along_components():
    w = sobolev_weights((3,), 3, 0.7)
    assert all(np.diff(w.values) < 0)


def test_orthogonal_projector_full_and_zero_range():
    db = build_gallery("dbar", mu=0.5)
    w = sobolev_weights((0,), 1, 0.5)
    P = orthogonal_projector(cauchy_frame_oracle(mode_symbol(db, 0), "plus"), w)
    assert P.matrix[0, 0] == pytest.approx(1.0)
    w3 = sobolev_weights((3,), 1, 0.5)
    P = orthogonal_projector(cauchy_frame_oracle(mode_symbol(db, 3), "plus"), w3)
    assert P.matrix[0, 0] == 0.0


def test_orthogonal_projector_equal_weights_match_flat_projector():
    lap = build_gallery("laplace_mass", mu=1)
    sym = mode_symbol(lap, 0)
    w = sobolev_weights((0,), 2, 0.5)  # weights (1, 1) at m = 0
    P = orthogonal_projector(cauchy_frame_oracle(sym, "plus"), w).matrix
    expected = np.array([[0.5, -0.5], [-0.5, 0.5]])
    assert np.abs(P - expected).max() < 1e-12


def test_orthogonal_projector_gram_formula_oracle():
    lap = build_gallery("laplace_mass", mu=2)
    sym = mode_symbol(lap, 2)
    w = sobolev_weights((2,), 2, 0.5)
    fr = cauchy_frame_oracle(sym, "plus")
    P = orthogonal_projector(fr, w).matrix
    F = fr.matrix
    W = np.diag(w.full(1))
    G = F @ np.linalg.inv(F.conj().T @ W @ F) @ F.conj().T @ W
    assert np.abs(P - G).max() < 1e-12
    # weighted self-adjointness and idempotency
    assert np.abs(W @ P - P.conj().T @ W).max() < 1e-10
    assert np.abs(P @ P - P).max() < 1e-10
    # same range as the parallel projector: P R = R and R P = P
    R = calderon_projector(sym).matrix
    assert np.abs(P @ R - R).max() < 1e-8
    assert np.abs(R @ P - P).max() < 1e-8


def test_orthogonal_projector_accepts_projector_input():
    lap = build_gallery("laplace_mass", mu=2)
    sym = mode_symbol(lap, 2)
    w = sobolev_weights((2,), 2, 0.5)
    from_frame = orthogonal_projector(cauchy_frame_oracle(sym, "plus"), w).matrix
    from_R = orthogonal_projector(calderon_projector(sym, "plus"), w).matrix
    assert np.abs(from_frame - from_R).max() < 1e-9


def test_mass_one_laplacian_weighted_projector_collapses_to_flat():
    # s^2 = m^2 + 1 matches the weight ratio exactly, so the two sides
    # are weighted-orthogonal and P coincides with R for every mode
    lap = build_gallery("laplace_mass", mu=1)
    for m in (0, 2, 17):
        sym = mode_symbol(lap, m)
        w = sobolev_weights((m,), 2, 0.5)
        P = orthogonal_projector(cauchy_frame_oracle(sym, "plus"), w).matrix
        R = calderon_projector(sym).matrix
        assert np.abs(P - R).max() < 1e-10


def test_ill_conditioned_frame_rejected():
    frame_matrix = np.array([[1.0, 1.0], [1e-13, 0.0], [0.0, 1e-13], [0.0, 0.0]])
    from calderon.projector import CauchyFrame

    with pytest.raises(IllConditionedFrame):
        CauchyFrame(m=(0,), matrix=frame_matrix, side="plus")


def test_principal_symbol_dependence_decay():
    sa = build_gallery("dirac2", mu=1, v=0)
    sb = build_gallery("dirac2", mu=1, v=0.3)
    ms = np.unique(np.geomspace(16, 256, 15).astype(int))
    norms = []
    for m in ms:
        w = sobolev_weights((int(m),), 1, 0.5)
        pa = orthogonal_projector(cauchy_frame_oracle(mode_symbol(sa, int(m)), "plus"), w).matrix
        pb = orthogonal_projector(cauchy_frame_oracle(mode_symbol(sb, int(m)), "plus"), w).matrix
        sw = np.sqrt(w.full(2))
        norms.append(np.linalg.norm((pa - pb) * (sw[:, None] / sw[None, :]), 2))
    assert max(m * v for m, v in zip(ms, norms)) < 1.0  # C/|m| bound
    slope = np.polyfit(np.log(ms), np.log(norms), 1)[0]
    assert slope < -0.9


# ---------------------------------------------------------------------------
# growth fit


def test_growth_fit_laplace_staircase():
    lap = build_gallery("laplace_mass", mu=1)
    ms = np.unique(np.geomspace(16, 256, 25).astype(int))
    slopes = entry_growth_fit(lap, "plus", ms)
    assert np.abs(slopes - np.array([[0.0, -1.0], [1.0, 0.0]])).max() < 0.1


def test_growth_fit_dbar_constant_and_degenerate():
    db = build_gallery("dbar", mu=0.5)
    ms = np.unique(np.geomspace(16, 256, 10).astype(int))
    assert entry_growth_fit(db, "plus", [-int(m) for m in ms])[0, 0] == pytest.approx(0.0, abs=1e-6)
    assert np.isnan(entry_growth_fit(db, "plus", ms)[0, 0])  # zero block: NONE


def test_growth_fit_dirac_is_scalar_slope_zero():
    d2 = build_gallery("dirac2", mu=1, v=0)
    ms = np.unique(np.geomspace(16, 256, 10).astype(int))
    slopes = entry_growth_fit(d2, "plus", ms)
    assert slopes.shape == (1, 1)
    assert slopes[0, 0] == pytest.approx(0.0, abs=0.05)


def test_growth_fit_requires_a_decade():
    lap = build_gallery("laplace_mass", mu=1)
    with pytest.raises(SpecError):
        entry_growth_fit(lap, "plus", [16, 17, 18])


# ---------------------------------------------------------------------------
# defect scanning


def test_scan_defect_modes():
    assert scan_defect_modes(build_gallery("dirac2", mu=1, v=0), 8) == [-1, 0, 1]
    assert scan_defect_modes(build_gallery("dbar", mu=0.5), 8) == []
    assert scan_defect_modes(build_gallery("dirac3", mu=1, v=0), 4) == [(-1, 0), (0, 0), (1, 0)]


def test_mode_lattice_order_and_size():
    lat = mode_lattice(2, 3)
    assert lat.tolist() == [[-3], [-2], [-1], [0], [1], [2], [3]]
    lat = mode_lattice(3, 2)
    assert len(lat) == 25
    assert lat[0].tolist() == [-2, -2] and lat[-1].tolist() == [2, 2]
