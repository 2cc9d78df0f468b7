"""Trace (cut) FEM on the zero level set of the interpolated distance.

Degrees of freedom are bulk vertices of cut tetrahedra; test and trial
functions are traces of the bulk P1 hats on the reconstructed surface.
Element gradients are the bulk hat gradients projected into each cut
face's plane, so the discrete problem is again a singular mean-zero
Laplace-Beltrami system.
"""

import numpy as np

from .fem import (
    TRI_DEGREE4,
    ErrorReport,
    SolutionField,
    assemble_load,
    assemble_stiffness,
    barycentric_values,
    solve_mean_zero,
    tetrahedron_geometry,
)
from .meshes import extract_cut_surface
from .parametric import surface_error_norms


class TraceProblem:
    """Problem data: surface, bulk mesh, extracted cut surface, solution."""

    def __init__(self, surface, bulk, cut=None, solution=None):
        self.surface = surface
        self.bulk = bulk
        self.cut = cut if cut is not None else extract_cut_surface(bulk, surface)
        self.solution = solution if solution is not None else surface.manufactured()

    def __repr__(self):
        return f"TraceProblem({self.surface!r}, {self.bulk!r})"


def _local_dofs(bulk, cut):
    lookup = np.full(bulk.n_vertices, -1, dtype=np.int64)
    lookup[cut.active_dofs] = np.arange(cut.n_active_dofs)
    return lookup[bulk.tets[cut.parent_tet]]


def _face_workspace(problem):
    """Per-face geometry shared by assembly, errors, and estimators."""
    bulk, cut = problem.bulk, problem.cut
    tet_coords = bulk.vertices[bulk.tets[cut.parent_tet]]
    tet_grads, _ = tetrahedron_geometry(tet_coords)
    nus = cut.normals
    pg = tet_grads - np.einsum("fkd,fd->fk", tet_grads, nus)[:, :, None] * nus[:, None, :]
    qp = TRI_DEGREE4.physical_points(cut.vertices[cut.faces])
    w = cut.areas[:, None] * TRI_DEGREE4.normalized_weights[None, :]
    phi = barycentric_values(tet_grads, tet_coords, qp)
    return {
        "tet_coords": tet_coords,
        "tet_grads": tet_grads,
        "proj_grads": pg,
        "normals": nus,
        "qp": qp,
        "weights": w,
        "phi": phi,
        "dofs": _local_dofs(bulk, cut),
    }


def trace_forcing(problem, x, face_normal):
    """Transferred data F(x) = f(P_d(x)) * area ratio for x on a cut face."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    nus = np.broadcast_to(np.atleast_2d(np.asarray(face_normal, dtype=float)),
                          pts.shape)
    vals = problem.solution.f(problem.surface.closest_point(pts))
    vals = vals * problem.surface.area_ratio(pts, nus)
    return vals if np.asarray(x).ndim == 2 else float(vals[0])


def trace_solve(problem, tol=1e-10, workspace_out=None):
    """Solve the trace problem; returns (SolutionField, ErrorReport)."""
    surface, cut = problem.surface, problem.cut
    ws = _face_workspace(problem)
    n = cut.n_active_dofs
    dofs = ws["dofs"]
    A = assemble_stiffness(ws["proj_grads"], cut.areas, dofs, n)

    nq = TRI_DEGREE4.npoints
    flat = ws["qp"].reshape(-1, 3)
    nus_q = np.repeat(ws["normals"], nq, axis=0)
    ratio = surface.area_ratio(flat, nus_q)
    fvals = (problem.solution.f(surface.closest_point(flat)) * ratio).reshape(
        ws["weights"].shape
    )
    b = assemble_load(dofs, ws["phi"], fvals, ws["weights"], n)
    # row-sum mass of the trace basis: m_i = integral of hat_i over the cut
    m = np.bincount(
        dofs.ravel(),
        weights=np.einsum("eq,eqk->ek", ws["weights"], ws["phi"]).ravel(),
        minlength=n,
    )
    history = []
    c = solve_mean_zero(A, b, m, tol=tol, history=history)
    field = SolutionField(c, cut.active_dofs, m, domain="cut-surface")

    u_q = np.einsum("eqk,ek->eq", ws["phi"], c[dofs])
    grad_u = np.einsum("ek,ekd->ed", c[dofs], ws["proj_grads"])
    l2, h1 = surface_error_norms(
        surface,
        problem.solution,
        flat,
        ws["weights"].ravel(),
        nus_q,
        u_q.ravel(),
        np.repeat(grad_u, nq, axis=0),
    )
    ws["forcing"] = fvals
    ws["grad_u"] = grad_u
    ws["u_q"] = u_q
    if workspace_out is not None:
        workspace_out.update(ws)
    geo = geometric_resolution(problem, _workspace=ws)
    report = ErrorReport(
        problem.bulk.tet_diameter, n, l2, h1, iterations=len(history),
        info={"area": cut.total_area(), "n_faces": cut.n_faces, **geo},
    )
    return field, report


def geometric_resolution(problem, _workspace=None):
    """How well the cut surface resolves the smooth one.

    Samples each face at its quadrature nodes and vertices and returns
    the max distance to the surface (second order in h) and max normal
    deviation (first order), plus the h-normalized constants.
    """
    surface, cut = problem.surface, problem.cut
    ws = _workspace if _workspace is not None else _face_workspace(problem)
    verts = cut.vertices[cut.faces]  # (F, 3, 3)
    samples = np.concatenate([ws["qp"], verts], axis=1)  # (F, 9, 3)
    flat = samples.reshape(-1, 3)
    d = surface._distance_raw(flat)
    _, g = surface._grad_raw(flat)
    nu_rep = np.repeat(ws["normals"], samples.shape[1], axis=0)
    dev = np.linalg.norm(g - nu_rep, axis=1)
    per_face_d = np.abs(d).reshape(len(cut.faces), -1).max(axis=1)
    per_face_dev = dev.reshape(len(cut.faces), -1).max(axis=1)
    h = cut.h_face
    return {
        "max_distance": float(per_face_d.max()),
        "max_normal_dev": float(per_face_dev.max()),
        "c_distance": float((per_face_d / h**2).max()),
        "c_normal": float((per_face_dev / h).max()),
    }


def skin_containment(problem, n_samples=5):
    """Fraction of projection segments that stay inside cut tetrahedra.

    For each face centroid x, samples interior points of the segment from
    x to P_d(x) and checks they land in tetrahedra that are themselves
    cut; a value of 1.0 says the skin between the discrete and smooth
    surfaces is covered by the active elements.
    """
    bulk, cut, surface = problem.bulk, problem.cut, problem.surface
    starts = cut.vertices[cut.faces].mean(axis=1)
    ends = surface.closest_point(starts)
    fractions = np.linspace(0.0, 1.0, n_samples + 2)[1:-1]
    pts = (
        starts[:, None, :]
        + fractions[None, :, None] * (ends - starts)[:, None, :]
    ).reshape(-1, 3)
    tids = problem.bulk.point_to_tet(pts)
    is_cut = np.zeros(bulk.n_tets, dtype=bool)
    is_cut[cut.cut_tets] = True
    return float(is_cut[tids].mean())
