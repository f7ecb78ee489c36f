"""Constant-coefficient elliptic operators on the model half-cylinder.

An operator lives on ``T^{n-1} x [0, inf)`` and is stored as a table of
matrix coefficients ``c[q, beta]`` multiplying ``d_n^q d_tau^beta``.
Because the coefficients are constant, each tangential Fourier mode ``m``
decouples into an ordinary differential system in the normal variable,
and everything downstream reduces to finite matrix algebra per mode.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NoFreeRay, ParseError, SpecError

_PAULI = {
    1: np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    2: np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    3: np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

GALLERY_NAMES = ("dbar", "twisted_dbar", "laplace_mass", "dirac2", "dirac3", "custom")


@dataclass
class OperatorSpec:
    """Constant-coefficient operator of order ``k`` on rank-``r`` sections.

    ``terms`` maps ``(q, beta)`` with ``q + |beta| <= k`` to an ``r x r``
    complex matrix; ``beta`` is a tangential multi-index of length
    ``n - 1``.  The coefficient of ``d_n^k`` must be present and
    invertible.
    """

    name: str
    n: int
    r: int
    k: int
    terms: dict
    agmon_hint: float | None = None
    chiral_blocks: tuple | None = None

    def __post_init__(self):
        if self.n < 2:
            raise SpecError("total dimension n must be at least 2")
        if self.r < 1 or self.k < 1:
            raise SpecError("rank and order must be positive")
        clean = {}
        for key, mat in self.terms.items():
            q, beta = key
            beta = tuple(int(b) for b in beta)
            if len(beta) != self.n - 1:
                raise SpecError(f"multi-index {beta} has length != n-1")
            if any(b < 0 for b in beta) or q < 0 or q + sum(beta) > self.k:
                raise SpecError(f"term ({q}, {beta}) violates q + |beta| <= k")
            mat = np.asarray(mat, dtype=complex)
            if mat.shape != (self.r, self.r):
                raise SpecError(f"coefficient for ({q}, {beta}) is not {self.r}x{self.r}")
            clean[(int(q), beta)] = mat
        self.terms = clean
        top = clean.get((self.k, (0,) * (self.n - 1)))
        if top is None:
            raise SpecError("missing coefficient of d_n^k")
        if abs(np.linalg.det(top)) < 1e-300:
            raise SpecError("coefficient of d_n^k is singular")
        if self.chiral_blocks is not None:
            left, right = self.chiral_blocks
            left, right = tuple(left), tuple(right)
            if sorted(left + right) != list(range(self.r)):
                raise SpecError("chiral blocks must partition the component indices")
            self.chiral_blocks = (left, right)

    @property
    def top_coefficient(self):
        return self.terms[(self.k, (0,) * (self.n - 1))]

    def coefficient(self, q, beta):
        """Coefficient matrix for (q, beta), zero when absent."""
        return self.terms.get((q, tuple(beta)), np.zeros((self.r, self.r), dtype=complex))


@dataclass
class ModeSymbol:
    """One tangential mode of an operator: matrices A_q(m), q = 0..k.

    ``A[q] = sum_beta c[q, beta] (i m)^beta``; the top matrix ``A[k]``
    equals the d_n^k coefficient for every mode.
    """

    spec: OperatorSpec
    m: tuple
    A: np.ndarray  # (k+1, r, r)

    @property
    def r(self):
        return self.spec.r

    @property
    def k(self):
        return self.spec.k

    def __call__(self, xi_n):
        """Full mode symbol a(m, xi_n) = sum_q A_q (i xi_n)^q.

        Accepts a scalar or an array of xi_n values; in the array case
        the result has shape (len(xi_n), r, r).
        """
        xi = np.asarray(xi_n, dtype=complex)
        out = np.zeros(xi.shape + (self.r, self.r), dtype=complex)
        for q in range(self.k + 1):
            out += ((1j * xi) ** q)[..., None, None] * self.A[q]
        return out


@dataclass
class EllipticityReport:
    directions: np.ndarray
    min_abs_det: float
    passed: bool
    defect_modes: list
    samples: int


@dataclass
class AgmonRay:
    """Eigenvalue-free ray of the principal symbol over the cosphere."""

    theta: float
    half_width: float
    eigenvalues: np.ndarray = field(repr=False)
    grid: int = 0


def _phase(m, beta):
    """(i m)^beta for a tangential frequency vector m."""
    out = 1.0 + 0.0j
    for mj, bj in zip(m, beta):
        if bj:
            out *= (1j * mj) ** bj
    return out


def _as_mode(spec, m):
    if np.isscalar(m):
        m = (m,)
    m = tuple(float(x) if not float(x).is_integer() else int(x) for x in np.atleast_1d(m))
    if len(m) != spec.n - 1:
        raise SpecError(f"mode {m} has length != n-1 = {spec.n - 1}")
    return m


def build_gallery(name, params=None, **kw):
    """Construct one of the built-in model operators.

    Parameters
    ----------
    name : str
        One of ``dbar``, ``twisted_dbar``, ``laplace_mass``, ``dirac2``,
        ``dirac3`` or ``custom``.
    params, **kw
        Gallery parameters (``mu``, ``d``, ``v``), as a mapping or as
        keywords; ``custom`` instead takes ``n``, ``r``, ``k``, a raw
        ``terms`` table and an optional ``name`` label.

    Returns
    -------
    OperatorSpec

    Notes
    -----
    Fixed conventions, with ``d_tau`` the tangential derivative(s):

    * ``dbar(mu)``          scalar ``d_n + i d_tau + mu`` on the circle,
    * ``twisted_dbar(mu,d)`` same with zeroth-order term ``mu + d``,
    * ``laplace_mass(mu)``  scalar ``-d_n^2 - d_tau^2 + mu``,
    * ``dirac2(mu,v)``      ``s1 d_n + s2 d_tau + mu s3 + v`` (Pauli),
    * ``dirac3(mu,v)``      ``s1 d_n + s2 d_t1 + s3 d_t2 + mu s3 + v``
      on the 2-torus.
    """
    p = {**(params or {}), **kw}

    def take(key, default=None):
        if key in p:
            return p.pop(key)
        if default is None:
            raise SpecError(f"gallery {name!r} requires parameter {key!r}")
        return default

    if name == "dbar" or name == "twisted_dbar":
        mu = complex(take("mu"))
        shift = complex(take("d")) if name == "twisted_dbar" else 0.0
        terms = {
            (1, (0,)): [[1.0]],
            (0, (1,)): [[1.0j]],
            (0, (0,)): [[mu + shift]],
        }
        spec = OperatorSpec(name, 2, 1, 1, terms)
    elif name == "laplace_mass":
        mu = complex(take("mu"))
        terms = {
            (2, (0,)): [[-1.0]],
            (0, (2,)): [[-1.0]],
            (0, (0,)): [[mu]],
        }
        spec = OperatorSpec(name, 2, 1, 2, terms, agmon_hint=np.pi)
    elif name == "dirac2":
        mu = complex(take("mu"))
        v = complex(take("v", 0.0))
        terms = {
            (1, (0,)): _PAULI[1],
            (0, (1,)): _PAULI[2],
            (0, (0,)): mu * _PAULI[3] + v * np.eye(2),
        }
        spec = OperatorSpec(name, 2, 2, 1, terms, agmon_hint=0.0,
                            chiral_blocks=((0,), (1,)))
    elif name == "dirac3":
        mu = complex(take("mu"))
        v = complex(take("v", 0.0))
        terms = {
            (1, (0, 0)): _PAULI[1],
            (0, (1, 0)): _PAULI[2],
            (0, (0, 1)): _PAULI[3],
            (0, (0, 0)): mu * _PAULI[3] + v * np.eye(2),
        }
        spec = OperatorSpec(name, 3, 2, 1, terms, agmon_hint=0.0,
                            chiral_blocks=((0,), (1,)))
    elif name == "custom":
        spec = OperatorSpec(
            str(take("name", "custom")),
            int(take("n")), int(take("r")), int(take("k")),
            dict(take("terms")),
            agmon_hint=p.pop("agmon_hint", None),
            chiral_blocks=p.pop("chiral_blocks", None),
        )
    else:
        raise SpecError(f"unknown gallery name {name!r}")
    if p:
        raise SpecError(f"unused gallery parameters {sorted(p)} for {name!r}")
    return spec


def mode_symbol(spec, m):
    """Restrict an operator to one tangential frequency.

    Tangential derivatives become multiplication by ``(im)^beta``, so the
    mode is described by the ``k + 1`` matrices ``A_q(m)``.
    """
    m = _as_mode(spec, m)
    A = np.zeros((spec.k + 1, spec.r, spec.r), dtype=complex)
    for (q, beta), c in spec.terms.items():
        A[q] += _phase(m, beta) * c
    return ModeSymbol(spec=spec, m=m, A=A)


def homogeneous_component(spec, j, m, xi_n):
    """Degree ``k - j`` homogeneous part of the symbol at ``(m, xi_n)``."""
    if not 0 <= j <= spec.k:
        raise SpecError(f"component index {j} outside 0..{spec.k}")
    m = _as_mode(spec, m)
    out = np.zeros((spec.r, spec.r), dtype=complex)
    for (q, beta), c in spec.terms.items():
        if q + sum(beta) == spec.k - j:
            out += _phase(m, beta) * (1j * complex(xi_n)) ** q * c
    return out


def principal_symbol(spec, xi_prime, xi_n):
    """Principal symbol at a real covector ``(xi', xi_n)``."""
    out = np.zeros((spec.r, spec.r), dtype=complex)
    for (q, beta), c in spec.terms.items():
        if q + sum(beta) == spec.k:
            out += _phase(xi_prime, beta) * (1j * complex(xi_n)) ** q * c
    return out


def agree_up_to_order(a, b):
    """Largest q such that the homogeneous components of degree >= k - q
    coincide; ``"full"`` when the whole coefficient tables agree, ``None``
    when already the principal parts differ.

    With constant coefficients the derivative conditions along the
    boundary hold automatically, so agreement is plain equality of the
    component tables (exact, no tolerance).
    """
    if (a.n, a.r, a.k) != (b.n, b.r, b.k):
        raise SpecError("operators must share n, r and k to be compared")
    zero = np.zeros((a.r, a.r), dtype=complex)
    for j in range(a.k + 1):
        keys = {key for key in a.terms if key[0] + sum(key[1]) == a.k - j}
        keys |= {key for key in b.terms if key[0] + sum(key[1]) == a.k - j}
        for key in keys:
            ca = a.terms.get(key, zero)
            cb = b.terms.get(key, zero)
            if not np.array_equal(ca, cb):
                return None if j == 0 else j - 1
    return "full"


def _cosphere_directions(n, samples):
    """Deterministic sample of unit covectors in R^n."""
    if n == 2:
        t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        # Fibonacci sphere: near-uniform and reproducible
        i = np.arange(samples)
        z = 1.0 - 2.0 * (i + 0.5) / samples
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = np.pi * (1 + 5**0.5) * i
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    rng = np.random.default_rng(0)
    v = rng.normal(size=(samples, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v[: min(n, samples)] = np.eye(n)[: min(n, samples)]
    return v


def check_ellipticity(spec, samples=64, mode_scan=None):
    """Sample ``det a_k`` on the unit cosphere and scan for defect modes.

    A failure is reported through the returned flag, never raised.  The
    defect scan walks integer modes with ``|m|_inf <= mode_scan`` and
    flags those whose full mode symbol has a characteristic root on the
    real axis.
    """
    if samples < 8:
        raise SpecError("need at least 8 cosphere samples")
    dirs = _cosphere_directions(spec.n, samples)
    dets = np.array(
        [np.linalg.det(principal_symbol(spec, d[:-1], d[-1])) for d in dirs]
    )
    min_det = float(np.abs(dets).min())
    passed = min_det > 1e-10 * (1.0 + float(np.abs(dets).max()))

    from .projector import scan_defect_modes

    if mode_scan is None:
        mode_scan = 64 if spec.n == 2 else 24
    defects = scan_defect_modes(spec, mode_scan)
    return EllipticityReport(
        directions=dirs,
        min_abs_det=min_det,
        passed=passed,
        defect_modes=defects,
        samples=samples,
    )


def find_agmon_ray(spec, grid=64):
    """Midpoint of the largest eigenvalue-free angular sector.

    Eigenvalues of the principal symbol are collected over a cosphere
    grid; the gap search runs on their arguments.  The reported
    half-width keeps a 10% safety margin inside the observed gap, and a
    gap below 2 degrees raises :class:`NoFreeRay`.
    """
    if grid < 16:
        raise SpecError("need at least 16 grid points")
    samples = grid if spec.n == 2 else grid * grid
    dirs = _cosphere_directions(spec.n, samples)
    eigs = np.concatenate(
        [np.linalg.eigvals(principal_symbol(spec, d[:-1], d[-1])) for d in dirs]
    )
    scale = float(np.abs(eigs).max()) if eigs.size else 0.0
    cloud = eigs[np.abs(eigs) > 1e-12 * (1.0 + scale)]
    if cloud.size == 0:
        raise NoFreeRay("principal symbol has no nonzero eigenvalues on the grid")
    args = np.sort(np.angle(cloud))
    gaps = np.diff(args, append=args[0] + 2 * np.pi)
    best = int(np.argmax(gaps))
    gap = float(gaps[best])
    if gap < np.deg2rad(2.0):
        raise NoFreeRay(f"largest eigenvalue-free sector is only {np.rad2deg(gap):.3f} deg")
    theta = args[best] + 0.5 * gap
    theta = float(np.angle(np.exp(1j * theta)))
    return AgmonRay(theta=theta, half_width=0.45 * gap, eigenvalues=eigs, grid=grid)


def selfadjoint_double(spec):
    """Pair the operator with its formal adjoint in off-diagonal blocks.

    The result acts on rank ``2r`` sections; the adjoint block carries
    sign ``(-1)^{q+|beta|}`` on each conjugate-transposed coefficient.
    The L chiral marking points at the components carrying the original
    operator's Cauchy data.
    """
    r = spec.r
    terms = {}
    for (q, beta), c in spec.terms.items():
        sign = (-1) ** (q + sum(beta))
        block = np.zeros((2 * r, 2 * r), dtype=complex)
        block[:r, r:] = c
        block[r:, :r] = sign * c.conj().T
        terms[(q, beta)] = block
    return OperatorSpec(
        name=f"{spec.name}_double",
        n=spec.n,
        r=2 * r,
        k=spec.k,
        terms=terms,
        chiral_blocks=(tuple(range(r, 2 * r)), tuple(range(r))),
    )


# ---------------------------------------------------------------------------
# serialization


def to_document(spec):
    """Plain-dict form of a spec, suitable for JSON round-tripping."""
    terms = []
    for (q, beta) in sorted(spec.terms):
        c = spec.terms[(q, beta)]
        terms.append(
            {
                "dn": q,
                "dtau": list(beta),
                "re": c.real.tolist(),
                "im": c.imag.tolist(),
            }
        )
    doc = {
        "name": spec.name,
        "n": spec.n,
        "r": spec.r,
        "k": spec.k,
        "terms": terms,
        "agmon_hint": spec.agmon_hint,
        "chiral_blocks": None
        if spec.chiral_blocks is None
        else {"L": list(spec.chiral_blocks[0]), "R": list(spec.chiral_blocks[1])},
    }
    return doc


def from_document(doc):
    """Inverse of :func:`to_document`; raises ParseError on bad input."""
    try:
        terms = {}
        for t in doc["terms"]:
            mat = np.asarray(t["re"], dtype=float) + 1j * np.asarray(t["im"], dtype=float)
            terms[(int(t["dn"]), tuple(int(b) for b in t["dtau"]))] = mat
        chiral = doc.get("chiral_blocks")
        if chiral is not None:
            chiral = (tuple(chiral["L"]), tuple(chiral["R"]))
        hint = doc.get("agmon_hint")
        return OperatorSpec(
            name=str(doc["name"]),
            n=int(doc["n"]),
            r=int(doc["r"]),
            k=int(doc["k"]),
            terms=terms,
            agmon_hint=None if hint is None else float(hint),
            chiral_blocks=chiral,
        )
    except SpecError:
        raise
    except Exception as exc:
        raise ParseError(f"malformed operator document: {exc}") from exc


def dump_spec(spec):
    """Serialize to canonical JSON text (sorted keys, newline-terminated)."""
    return json.dumps(to_document(spec), sort_keys=True, indent=2) + "\n"


def load_spec(text):
    """Parse JSON text produced by :func:`dump_spec`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return from_document(doc)


def save_spec(spec, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_spec(spec))


def read_spec(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return load_spec(fh.read())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
