import numpy as np
import pytest

from calderon.contour import (
    Contour,
    characteristic_roots,
    contour_quadrature,
    enclosing_circle,
    matrix_power,
    riesz_projector,
    spectral_split,
)
from calderon.errors import (
    ContourNotConverged,
    DefectMode,
    EigenvalueOnContour,
    EigenvalueOnCut,
    SpecError,
)
from calderon.projector import companion_matrix
from calderon.symbols import build_gallery, mode_symbol

from test_symbols import GALLERY, sample_modes


# ---------------------------------------------------------------------------
# quadrature


def test_cauchy_integral_of_reciprocal():
    val, n = contour_quadrature(lambda z: 1 / z, Contour.circle(0, 1.0))
    assert abs(val - 1.0) < 1e-12
    assert n >= 16


def test_pole_outside_contour_integrates_to_zero():
    val, _ = contour_quadrature(lambda z: 1 / (z - 2.0), Contour.circle(0, 1.0))
    assert abs(val) < 1e-12


def test_double_pole_has_no_residue():
    val, _ = contour_quadrature(lambda z: z**-2.0, Contour.circle(0, 1.0))
    assert abs(val) < 1e-12


def test_matrix_valued_quadrature_and_ellipse():
    M = np.array([[0.0, 1.0], [-2.0, 3.0]], dtype=complex)  # eigenvalues 1, 2
    eye = np.eye(2, dtype=complex)

    def resolvent(z):
        return np.linalg.inv(z[:, None, None] * eye - M)

    val, _ = contour_quadrature(resolvent, Contour.ellipse(1.5, 1.2, 0.7))
    assert np.abs(val - eye).max() < 1e-10  # both eigenvalues enclosed


def test_quadrature_gives_up_on_nonanalytic_data():
    rng = np.random.default_rng(0)
    with pytest.raises(ContourNotConverged):
        contour_quadrature(
            lambda z: rng.normal(size=len(z)), Contour.circle(0, 1.0), max_nodes=256
        )


def test_contour_validation():
    with pytest.raises(SpecError):
        Contour.circle(0, 1.0, nodes=4)
    with pytest.raises(SpecError):
        Contour.circle(0, -1.0)


# ---------------------------------------------------------------------------
# characteristic roots


def test_laplace_roots():
    lap = build_gallery("laplace_mass", mu=1)
    roots = characteristic_roots(mode_symbol(lap, 0))
    vals = sorted(r[0].imag for r in roots)
    assert vals == pytest.approx([-1.0, 1.0])
    assert {r[2] for r in roots} == {"upper", "lower"}
    roots = characteristic_roots(mode_symbol(lap, 2))
    assert sorted(r[0].imag for r in roots) == pytest.approx([-np.sqrt(5), np.sqrt(5)])


def test_dbar_root():
    db = build_gallery("dbar", mu=0.5)
    ((root, mult, half),) = characteristic_roots(mode_symbol(db, 0))
    assert root == pytest.approx(0.5j)
    assert mult == 1 and half == "upper"


def test_real_root_raises_defect():
    db0 = build_gallery("dbar", mu=0.0)
    with pytest.raises(DefectMode):
        characteristic_roots(mode_symbol(db0, 0))
    roots = characteristic_roots(mode_symbol(db0, 0), allow_real=True)
    assert roots[0][2] == "real"


def test_multiplicity_grouping():
    # (d_n + 1)^2: double root at xi = i
    spec = build_gallery(
        "custom",
        n=2, r=1, k=2,
        terms={(2, (0,)): [[1.0]], (1, (0,)): [[2.0]], (0, (0,)): [[1.0]]},
    )
    ((root, mult, half),) = characteristic_roots(mode_symbol(spec, 0))
    assert mult == 2 and half == "upper"
    assert root == pytest.approx(1j, abs=1e-7)


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_roots_annihilate_the_determinant(name):
    spec = build_gallery(name, **GALLERY[name])
    for m in sample_modes(spec, 64, count=40, seed=5):
        sym = mode_symbol(spec, m)
        try:
            roots = characteristic_roots(sym)
        except DefectMode:
            continue
        bound = 1e-8 * (1 + np.linalg.norm(m)) ** (spec.k * spec.r)
        for root, _, _ in roots:
            assert abs(np.linalg.det(sym(root))) < bound


# ---------------------------------------------------------------------------
# spectral projectors


def test_riesz_projector_on_diagonal_matrix():
    M = np.diag([1.0, 3.0]).astype(complex)
    P = riesz_projector(M, Contour.circle(1.0, 1.0))
    assert np.abs(P - np.diag([1.0, 0.0])).max() < 1e-11


def test_riesz_projector_fixes_idempotents():
    R = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)  # a projector
    P = riesz_projector(R, Contour.circle(1.0, 0.4))
    assert np.abs(P - R).max() < 1e-10


def test_riesz_projector_jordan_block():
    J = np.array([[5.0, 1.0], [0.0, 5.0]], dtype=complex)
    P = riesz_projector(J, Contour.circle(5.0, 1.0))
    assert np.abs(P - np.eye(2)).max() < 1e-10


def test_riesz_rejects_eigenvalue_on_contour():
    M = np.diag([1.0, 3.0]).astype(complex)
    with pytest.raises(EigenvalueOnContour):
        riesz_projector(M, Contour.circle(0.0, 1.0))


def test_riesz_idempotency_commutation_partition():
    rng = np.random.default_rng(11)
    for _ in range(30):
        M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        eigs = np.linalg.eigvals(M)
        sep = min(
            abs(a - b) for i, a in enumerate(eigs) for b in eigs[i + 1 :]
        )
        if sep < 0.1:
            continue
        total = np.zeros((6, 6), dtype=complex)
        for lam in eigs:
            others = eigs[np.abs(eigs - lam) > 1e-12]
            c = Contour.circle(lam, 0.45 * np.abs(others - lam).min())
            P = riesz_projector(M, c)
            assert np.abs(P @ P - P).max() < 1e-9
            assert np.abs(P @ M - M @ P).max() < 1e-9
            total += P
        assert np.abs(total - np.eye(6)).max() < 1e-9


# ---------------------------------------------------------------------------
# fractional powers


def test_power_endpoints_and_square_root():
    a = np.diag([4.0, 9.0]).astype(complex)
    assert np.abs(matrix_power(a, 0.5) - np.diag([2.0, 3.0])).max() < 1e-10
    rng = np.random.default_rng(1)
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)) + 6 * np.eye(4)
    assert np.abs(matrix_power(b, 0.0) - np.eye(4)).max() < 1e-10
    assert np.abs(matrix_power(b, 1.0) - b).max() < 1e-10


def test_power_semigroup_on_hermitian_positive():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    a = a @ a.conj().T + 5 * np.eye(5)
    for s, t in [(0.3, 0.4), (0.25, 0.5), (0.1, 0.85)]:
        lhs = matrix_power(a, s + t)
        rhs = matrix_power(a, s) @ matrix_power(a, t)
        assert np.abs(lhs - rhs).max() < 1e-8


def test_power_respects_branch_cut_choice():
    # spectrum on the negative real axis: the default cut is unusable,
    # a cut along the positive imaginary axis is fine
    a = np.diag([-4.0, -9.0]).astype(complex)
    with pytest.raises(EigenvalueOnCut):
        matrix_power(a, 0.5, cut_angle=np.pi)
    val = matrix_power(a, 0.5, cut_angle=np.pi / 2)
    # branch with arguments in (pi/2 - 2 pi, pi/2): arg(-4) = -pi
    assert np.abs(val - np.diag([-2.0j, -3.0j])).max() < 1e-10


def test_power_rejects_spectrum_at_origin():
    with pytest.raises(EigenvalueOnCut):
        matrix_power(np.diag([0.0, 2.0]).astype(complex), 0.5)


# ---------------------------------------------------------------------------
# stable/unstable splitting


def test_split_diagonal():
    sp = spectral_split(np.diag([-1.0, 1.0]).astype(complex))
    assert sp.stable.shape == (2, 1)
    assert np.abs(sp.projector - np.diag([1.0, 0.0])).max() < 1e-12
    assert sp.gap == pytest.approx(1.0)


def test_split_companion_of_u_double_prime_equals_u():
    C = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sp = spectral_split(C, validate=True)
    v = sp.stable[:, 0]
    assert abs(v[0] / v[1] + 1.0) < 1e-12  # direction (1, -1)


def test_split_all_stable():
    sp = spectral_split(np.diag([-2.0, -3.0]).astype(complex))
    assert np.abs(sp.projector - np.eye(2)).max() < 1e-12
    assert sp.unstable.shape == (2, 0)


def test_split_rejects_imaginary_axis():
    with pytest.raises(DefectMode):
        spectral_split(np.diag([1j, -1.0]).astype(complex))


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_split_projector_matches_contour_route(name):
    spec = build_gallery(name, **GALLERY[name])
    for m in sample_modes(spec, 16, count=12, seed=8):
        C = companion_matrix(mode_symbol(spec, m))
        try:
            sp = spectral_split(C)
        except DefectMode:
            continue
        eigs = np.linalg.eigvals(C)
        stable, unstable = eigs[eigs.real < 0], eigs[eigs.real >= 0]
        if len(stable) == 0 or len(unstable) == 0:
            continue
        circle = enclosing_circle(stable, excluded=unstable)
        P = riesz_projector(C, circle)
        assert np.abs(P - sp.projector).max() < 1e-8


def test_split_dimensions_sum_to_matrix_size():
    for name, params in GALLERY.items():
        spec = build_gallery(name, params)
        for m in sample_modes(spec, 8, count=8, seed=4):
            try:
                sp = spectral_split(companion_matrix(mode_symbol(spec, m)))
            except DefectMode:
                continue
            assert sp.stable.shape[1] + sp.unstable.shape[1] == spec.r * spec.k
