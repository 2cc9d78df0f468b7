"""A posteriori error estimators, marking, and the adaptive loop.

Residual indicators bound the H1 error of the parametric and trace
solutions up to geometric consistency terms; the geometric indicators
(lambda, beta, mu) measure how far the closest-point parametrization of
each facet is from an isometry and converge at first resp. second order.
Doerfler marking plus newest-vertex bisection closes the loop.
"""

import numpy as np

from .fem import TRI_DEGREE4, triangle_geometry
from .meshes import refine_bisection
from .parametric import (
    ParametricProblem,
    parametric_solve,
    parametric_workspace,
    plane_basis,
)


class IndicatorField:
    """Per-element nonnegative indicators with their aggregation rule.

    ``reduction`` is "l2" (total = sqrt of the sum of squares, residual
    style) or "max" (geometric style).
    """

    def __init__(self, name, values, reduction="l2"):
        self.name = name
        self.values = np.asarray(values, dtype=float)
        self.reduction = reduction

    @property
    def total(self):
        if self.reduction == "l2":
            return float(np.sqrt(np.sum(self.values**2)))
        return float(self.values.max()) if len(self.values) else 0.0

    def __repr__(self):
        return f"IndicatorField({self.name}, total={self.total:.4e})"


def _edge_jumps(grad_u, grads, tri_edges, edge_lengths):
    """Summed co-normal derivatives per edge and the per-element jump term.

    The in-plane outward co-normal of the edge opposite local vertex l is
    -g_l / |g_l|; accumulating grad U . mu over both incident elements
    gives the jump J_e, and the element term is sum_e |e| J_e^2 over its
    three edges.
    """
    mu = -grads / np.linalg.norm(grads, axis=2, keepdims=True)
    s = np.einsum("td,tld->tl", grad_u, mu)  # (T, 3)
    jumps = np.zeros(len(edge_lengths))
    np.add.at(jumps, tri_edges, s)
    return jumps, (edge_lengths[tri_edges] * jumps[tri_edges] ** 2).sum(axis=1)


def residual_estimator(problem, field, workspace=None):
    """Elementwise residual indicator and data oscillation (parametric).

    eta_T^2 = h_T^2 ||F||_T^2 + (h_T / 2) sum_{e in dT} |e| J_e^2 with
    h_T = |T|^(1/2); osc_T = h_T ||F - mean_T F||_T.
    """
    mesh = problem.mesh
    ws = workspace if workspace is not None else parametric_workspace(problem)
    c = field.coefficients
    grad_u = np.einsum("ek,ekd->ed", c[mesh.triangles], ws["grads"])
    w = ws["weights"]
    F = ws["forcing"]
    bulk = (w * F**2).sum(axis=1)
    h = mesh.h
    edge_lengths = np.linalg.norm(
        mesh.vertices[mesh.edges[:, 0]] - mesh.vertices[mesh.edges[:, 1]], axis=1
    )
    _, jump_term = _edge_jumps(grad_u, ws["grads"], mesh.tri_edges, edge_lengths)
    eta = np.sqrt(h**2 * bulk + 0.5 * h * jump_term)

    fbar = (w * F).sum(axis=1) / w.sum(axis=1)
    osc = h * np.sqrt((w * (F - fbar[:, None]) ** 2).sum(axis=1))
    return IndicatorField("eta", eta), IndicatorField("osc", osc)


def _spectral_norm_3x2(c1, c2):
    """Largest singular value of the per-row 3x2 matrices [c1 c2]."""
    a = np.einsum("nd,nd->n", c1, c1)
    b = np.einsum("nd,nd->n", c2, c2)
    c = np.einsum("nd,nd->n", c1, c2)
    half = 0.5 * (a + b)
    disc = np.sqrt(np.maximum(0.25 * (a - b) ** 2 + c**2, 0.0))
    return np.sqrt(np.maximum(half + disc, 0.0))


def geometric_estimators(problem, workspace=None):
    """Facetwise parametrization-quality indicators lambda, beta, mu.

    Each facet is sampled at its six quadrature nodes and three vertices.
    beta_T is the largest displacement |P(x) - x| (second order); lambda_T
    the largest in-plane deviation of the differential DP from the
    identity, by central differences with step 1e-5 (1 + |x|) (first
    order); mu_T = beta_T + lambda_T^2.  Totals aggregate by max.
    """
    surface = problem.surface
    mesh = problem.mesh
    ws = workspace if workspace is not None else parametric_workspace(problem)
    samples = np.concatenate([ws["qp"], ws["coords"]], axis=1)  # (T, 9, 3)
    n_s = samples.shape[1]
    flat = samples.reshape(-1, 3)
    nus = np.repeat(ws["normals"], n_s, axis=0)
    t1, t2 = plane_basis(nus)
    step = (1e-5 * (1.0 + np.linalg.norm(flat, axis=1)))[:, None]

    def dP(t):
        return (
            surface._project_raw(flat + step * t)
            - surface._project_raw(flat - step * t)
        ) / (2.0 * step)

    lam = _spectral_norm_3x2(dP(t1) - t1, dP(t2) - t2).reshape(-1, n_s).max(axis=1)
    disp = np.linalg.norm(surface._project_raw(flat) - flat, axis=1)
    beta = disp.reshape(-1, n_s).max(axis=1)
    return {
        "lambda": IndicatorField("lambda", lam, reduction="max"),
        "beta": IndicatorField("beta", beta, reduction="max"),
        "mu": IndicatorField("mu", beta + lam**2, reduction="max"),
    }


def trace_estimators(problem, field, workspace=None):
    """Residual and geometric indicators for the trace solution.

    eta_F = h_F ||F_Gamma||_F + h_F^(1/2) (sum_{e in dF} |e| J_e^2)^(1/2)
    with h_F the parent tetrahedron diameter (the full face boundary, so
    interior quad diagonals contribute zero jump); xi_F = max_F |d| * K_F
    + (max_F |nu - nu_Gamma|)^2 with K_F the largest principal curvature
    magnitude over the projected samples, aggregated by max.
    """
    from .trace import _face_workspace, geometric_resolution

    cut = problem.cut
    ws = workspace if workspace is not None else _face_workspace(problem)
    if "forcing" not in ws:
        surface = problem.surface
        nq = TRI_DEGREE4.npoints
        flat = ws["qp"].reshape(-1, 3)
        nus_q = np.repeat(ws["normals"], nq, axis=0)
        ratio = surface.area_ratio(flat, nus_q)
        ws["forcing"] = (
            problem.solution.f(surface.closest_point(flat)) * ratio
        ).reshape(ws["weights"].shape)
    c = field.coefficients
    grad_u = np.einsum("ek,ekd->ed", c[ws["dofs"]], ws["proj_grads"])

    faces = cut.faces
    face_grads, _, _ = triangle_geometry(cut.vertices[faces])
    pairs = np.sort(
        np.concatenate([faces[:, [1, 2]], faces[:, [2, 0]], faces[:, [0, 1]]]),
        axis=1,
    )
    edges, inv = np.unique(pairs, axis=0, return_inverse=True)
    face_edges = inv.reshape(3, len(faces)).T
    edge_lengths = np.linalg.norm(
        cut.vertices[edges[:, 0]] - cut.vertices[edges[:, 1]], axis=1
    )
    _, jump_term = _edge_jumps(grad_u, face_grads, face_edges, edge_lengths)

    w = ws["weights"]
    bulk = (w * ws["forcing"] ** 2).sum(axis=1)
    h = cut.h_face
    eta = h * np.sqrt(bulk) + np.sqrt(h * jump_term)

    surface = problem.surface
    samples = np.concatenate([ws["qp"], cut.vertices[faces]], axis=1)
    n_s = samples.shape[1]
    flat = samples.reshape(-1, 3)
    d = np.abs(surface._distance_raw(flat)).reshape(-1, n_s).max(axis=1)
    _, g = surface._grad_raw(flat)
    dev = np.linalg.norm(
        g - np.repeat(ws["normals"], n_s, axis=0), axis=1
    ).reshape(-1, n_s).max(axis=1)
    kappa = surface.parallel_curvatures(surface._project_raw(flat))
    k_face = np.abs(kappa).max(axis=1).reshape(-1, n_s).max(axis=1)
    xi = d * k_face + dev**2
    return (
        IndicatorField("eta", eta),
        IndicatorField("xi", xi, reduction="max"),
    )


def dorfler_mark(values, theta):
    """Minimal bulk-chasing selection: the smallest prefix of elements,
    taken in decreasing value order (ties broken by lower id first),
    whose sum reaches theta times the total.

    ``values`` are the nonnegative per-element quantities to sum --
    typically squared residual indicators.
    """
    values = np.asarray(values, dtype=float)
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    if np.any(values < 0.0):
        raise ValueError("indicator values must be nonnegative")
    order = np.lexsort((np.arange(len(values)), -values))
    csum = np.cumsum(values[order])
    if csum[-1] <= 0.0:
        return np.empty(0, dtype=np.int64)
    target = theta * csum[-1]
    k = int(np.searchsorted(csum, target, side="left"))
    k = min(k, len(values) - 1)
    return np.sort(order[: k + 1])


def adapt_loop(surface, mesh, max_iters=8, theta=0.5, lift=None,
               solution=None, tol=1e-10, eta_tol=0.0):
    """Solve-estimate-mark-refine on the parametric method.

    Runs the initial solve plus up to ``max_iters`` refinement rounds,
    stopping early once the total residual indicator drops to ``eta_tol``.
    Returns (rows, mesh, field): one history row per solve with keys
    iter, n_dof, err_H1, err_L2, eta, lambda, beta, mu, n_marked.
    """
    from .geometry import CLOSEST_POINT

    if lift is None:
        lift = CLOSEST_POINT
    rows = []
    field = None
    for it in range(max_iters + 1):
        problem = ParametricProblem(surface, mesh, lift=lift, solution=solution)
        ws = {}
        field, report = parametric_solve(problem, tol=tol, workspace_out=ws)
        eta, _ = residual_estimator(problem, field, ws)
        geo = geometric_estimators(problem, ws)
        refine = it < max_iters and eta.total > eta_tol
        marked = dorfler_mark(eta.values**2, theta) if refine else []
        rows.append(
            {
                "iter": it,
                "n_dof": report.n_dof,
                "err_H1": report.err_H1,
                "err_L2": report.err_L2,
                "eta": eta.total,
                "lambda": geo["lambda"].total,
                "beta": geo["beta"].total,
                "mu": geo["mu"].total,
                "n_marked": len(marked),
            }
        )
        if not refine:
            break
        mesh = refine_bisection(mesh, marked, surface)
    return rows, mesh, field
