"""Structured Gaussian models for edge signals and their colored graphs.

The precision matrix of an edge signal on a 2-complex is assembled from
the signed incidence matrices and one nonnegative coefficient per vertex
and per triangle:

    omega   = k*I - b1.T @ diag(d_v) @ b1 - b2 @ diag(d_t) @ b2.T
    omega_d = k*I - b1.T @ diag(d_v) @ b1
    omega_u = k*I - b2 @ diag(d_t) @ b2.T

The three matrices satisfy, exactly in exact arithmetic,

    omega = omega_d + omega_u - k*I
    k * omega = omega_d @ omega_u = omega_u @ omega_d
    inv(omega) = inv(omega_u) + inv(omega_d) - (1/k) * I

where the product and inverse rules rely on b1 @ b2 == 0.  All three are
positive definite iff k exceeds the largest eigenvalue of the subtracted
part, which is how :func:`min_valid_k` chooses k.

The colored graph of the model has the edges of the complex as nodes and
two link colors read off the symbolic support of the coupling terms: a
lower link joins two edges sharing a vertex u with d_v[u] != 0, an upper
link joins two edges lying in a common triangle t with d_t[t] != 0.  The
support of omega is contained in the union of the two colors; strict
inclusion happens only when lower and upper contributions cancel exactly,
which :func:`find_cancellations` reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite
from .simplicial import IncidencePair, SimplicialComplex2, incidence, load_complex

__all__ = [
    "SgmParams",
    "EdgePrecision",
    "CmrfGraph",
    "min_valid_k",
    "build_precision",
    "covariance",
    "covariance_cholesky",
    "identity_residuals",
    "build_cmrf",
    "find_cancellations",
    "sample",
    "draw_params",
    "save_model",
    "load_model",
]

# A precision matrix counts as positive definite when its smallest
# eigenvalue exceeds this fraction of k.
_PD_RTOL = 1e-9

# An off-diagonal entry of omega counts as an exact cancellation when it
# is this small relative to the coupling magnitudes that formed it.
_CANCEL_RTOL = 1e-12


@dataclass(frozen=True)
class SgmParams:
    """Coefficients (k, d_v, d_t) of a structured edge-signal model.

    d_v has one nonnegative entry per vertex, d_t one per triangle, both
    in the canonical order of the complex.
    """

    k: float
    d_v: np.ndarray
    d_t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "d_v", np.asarray(self.d_v, dtype=float))
        object.__setattr__(self, "d_t", np.asarray(self.d_t, dtype=float))
        if np.any(self.d_v < 0) or np.any(self.d_t < 0):
            raise ValueError("coupling coefficients must be nonnegative")
        if not np.isfinite(self.k) or self.k <= 0:
            raise ValueError("k must be positive and finite")


@dataclass(frozen=True)
class EdgePrecision:
    """The precision matrix of an edge signal and its two factors."""

    omega: np.ndarray
    omega_d: np.ndarray
    omega_u: np.ndarray
    k: float

    @property
    def num_edges(self) -> int:
        return self.omega.shape[0]


@dataclass(frozen=True)
class CmrfGraph:
    """Colored conditional-dependence graph over the edges of a complex.

    Nodes are edge indices 0..num_nodes-1; links are unordered index
    pairs (i, j) with i < j.  A pair may carry both colors.
    """

    num_nodes: int
    lower_links: frozenset[tuple[int, int]]
    upper_links: frozenset[tuple[int, int]]

    @property
    def links(self) -> frozenset[tuple[int, int]]:
        return self.lower_links | self.upper_links


def _check_params(inc: IncidencePair, params: SgmParams) -> None:
    nv, ne = inc.b1.shape
    nt = inc.b2.shape[1]
    if params.d_v.shape != (nv,):
        raise DimensionMismatch(
            f"d_v has shape {params.d_v.shape}, expected ({nv},)"
        )
    if params.d_t.shape != (nt,):
        raise DimensionMismatch(
            f"d_t has shape {params.d_t.shape}, expected ({nt},)"
        )


def _coupling_parts(
    inc: IncidencePair, d_v: np.ndarray, d_t: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Return (a_d, a_u), the lower and upper coupling matrices."""
    b1 = inc.b1.astype(float)
    b2 = inc.b2.astype(float)
    a_d = b1.T @ (d_v[:, None] * b1)
    a_u = (b2 * d_t) @ b2.T
    # Enforce exact symmetry so eigensolvers and bitwise comparisons
    # downstream never see BLAS rounding asymmetry.
    a_d = 0.5 * (a_d + a_d.T)
    a_u = 0.5 * (a_u + a_u.T)
    return a_d, a_u


def min_valid_k(
    inc: IncidencePair,
    d_v: np.ndarray,
    d_t: np.ndarray,
    margin: float = 0.1,
) -> float:
    """Smallest admissible k for the given couplings, plus a margin.

    Returns lambda_max(a_d + a_u) + margin, the threshold above which all
    three precision matrices are positive definite.
    """
    d_v = np.asarray(d_v, dtype=float)
    d_t = np.asarray(d_t, dtype=float)
    a_d, a_u = _coupling_parts(inc, d_v, d_t)
    lam_max = float(np.linalg.eigvalsh(a_d + a_u)[-1])
    return lam_max + margin


def build_precision(inc: IncidencePair, params: SgmParams) -> EdgePrecision:
    """Assemble (omega, omega_d, omega_u) and verify positive definiteness.

    Raises NotPositiveDefinite when the smallest eigenvalue of omega is
    not above 1e-9 * k; omega_d and omega_u are then automatically
    positive definite as well.
    """
    _check_params(inc, params)
    a_d, a_u = _coupling_parts(inc, params.d_v, params.d_t)
    ne = inc.b1.shape[1]
    k_eye = params.k * np.eye(ne)
    omega = k_eye - a_d - a_u
    omega_d = k_eye - a_d
    omega_u = k_eye - a_u

    lam_min = float(np.linalg.eigvalsh(omega)[0])
    if lam_min <= _PD_RTOL * params.k:
        raise NotPositiveDefinite(
            f"k={params.k:.6g} gives smallest eigenvalue {lam_min:.3e}; "
            f"need k > {min_valid_k(inc, params.d_v, params.d_t, 0.0):.6g}"
        )
    return EdgePrecision(omega=omega, omega_d=omega_d, omega_u=omega_u, k=params.k)


def covariance(prec: EdgePrecision) -> np.ndarray:
    """The covariance matrix inv(omega)."""
    return np.linalg.inv(prec.omega)


def covariance_cholesky(prec: EdgePrecision) -> np.ndarray:
    """Lower Cholesky factor of the covariance, for drawing samples."""
    return np.linalg.cholesky(covariance(prec))


class IdentityResiduals(NamedTuple):
    """Max-norm residuals of the three precision identities.

    Natural scales for relative comparison are k for the sum rule, k**2
    for the product rule, and trace(cov)/num_edges for the inverse rule.
    """

    sum_rule: float
    product_rule: float
    inverse_rule: float


def identity_residuals(prec: EdgePrecision) -> IdentityResiduals:
    """Evaluate the decomposition identities on a built precision."""
    k = prec.k
    eye = np.eye(prec.num_edges)
    sum_rule = np.abs(prec.omega - (prec.omega_d + prec.omega_u - k * eye)).max()
    prod = prec.omega_d @ prec.omega_u
    prod_rev = prec.omega_u @ prec.omega_d
    product_rule = max(
        np.abs(k * prec.omega - prod).max(),
        np.abs(k * prec.omega - prod_rev).max(),
    )
    inv_sum = (
        np.linalg.inv(prec.omega_u) + np.linalg.inv(prec.omega_d) - eye / k
    )
    inverse_rule = np.abs(covariance(prec) - inv_sum).max()
    return IdentityResiduals(
        sum_rule=float(sum_rule),
        product_rule=float(product_rule),
        inverse_rule=float(inverse_rule),
    )


def build_cmrf(inc: IncidencePair, params: SgmParams) -> CmrfGraph:
    """Read the colored graph off the symbolic support of the couplings.

    Links depend only on the incidence pattern and on which coefficients
    are nonzero, never on float magnitudes, so exact cancellations in
    omega do not remove links.
    """
    _check_params(inc, params)
    ne = inc.b1.shape[1]

    lower = set()
    for u in np.flatnonzero(params.d_v):
        incident = np.flatnonzero(inc.b1[u])
        for a in range(len(incident)):
            for b in range(a + 1, len(incident)):
                lower.add((int(incident[a]), int(incident[b])))

    upper = set()
    for t in np.flatnonzero(params.d_t):
        members = np.flatnonzero(inc.b2[:, t])
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                upper.add((int(members[a]), int(members[b])))

    return CmrfGraph(
        num_nodes=ne,
        lower_links=frozenset(lower),
        upper_links=frozenset(upper),
    )


def find_cancellations(
    inc: IncidencePair, params: SgmParams
) -> list[tuple[int, int]]:
    """Colored links whose coupling in omega cancels to (numerical) zero.

    For such pairs the Gaussian graph of omega is strictly smaller than
    the colored graph; conditional independence statements read off the
    colors are then conservative but still valid.
    """
    a_d, a_u = _coupling_parts(inc, params.d_v, params.d_t)
    graph = build_cmrf(inc, params)
    out = []
    for i, j in sorted(graph.links):
        coupling = a_d[i, j] + a_u[i, j]
        scale = max(abs(a_d[i, j]), abs(a_u[i, j]))
        if scale > 0 and abs(coupling) <= _CANCEL_RTOL * scale:
            out.append((i, j))
    return out


def sample(
    prec: EdgePrecision, n: int, seed: int | np.random.Generator
) -> np.ndarray:
    """Draw n zero-mean Gaussian edge signals with covariance inv(omega).

    Returns an array of shape (n, num_edges).  Reproducible for a fixed
    integer seed; pass a Generator to continue an existing stream.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    chol = covariance_cholesky(prec)
    z = rng.standard_normal((n, prec.num_edges))
    return z @ chol.T


def draw_params(
    inc: IncidencePair,
    seed: int | np.random.Generator,
    *,
    dv_bounds: tuple[float, float] = (0.2, 5.0),
    dt_bounds: tuple[float, float] = (0.2, 5.0),
    margin: float = 0.1,
    sparsity: float = 0.0,
) -> SgmParams:
    """Draw uniform coupling coefficients and the matching smallest k.

    Coefficients are Uniform(lo, hi) per vertex and per triangle; with
    ``sparsity`` > 0 each coefficient is independently zeroed with that
    probability, which thins the colored graph.  k comes from
    :func:`min_valid_k` with the given margin.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    nv = inc.b1.shape[0]
    nt = inc.b2.shape[1]
    d_v = rng.uniform(dv_bounds[0], dv_bounds[1], size=nv)
    d_t = rng.uniform(dt_bounds[0], dt_bounds[1], size=nt)
    if sparsity > 0.0:
        d_v = np.where(rng.random(nv) < sparsity, 0.0, d_v)
        d_t = np.where(rng.random(nt) < sparsity, 0.0, d_t)
    k = min_valid_k(inc, d_v, d_t, margin)
    return SgmParams(k=k, d_v=d_v, d_t=d_t)


def save_model(
    params: SgmParams, complex_file: str | Path, path: str | Path
) -> None:
    """Write model coefficients plus a reference to the complex document.

    ``complex_file`` is stored as given; relative paths are interpreted
    relative to the model document's directory when loading.
    """
    doc = {
        "k": float(params.k),
        "d_v": [float(x) for x in params.d_v],
        "d_t": [float(x) for x in params.d_t],
        "complex_file": str(complex_file),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_model(path: str | Path) -> tuple[SimplicialComplex2, SgmParams]:
    """Read a model document and the complex it references."""
    path = Path(path)
    doc = json.loads(path.read_text())
    ref = Path(doc["complex_file"])
    if not ref.is_absolute():
        ref = path.parent / ref
    sc = load_complex(ref)
    params = SgmParams(k=float(doc["k"]), d_v=doc["d_v"], d_t=doc["d_t"])
    _check_params(incidence(sc), params)
    return sc, params
