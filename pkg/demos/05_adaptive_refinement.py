"""
A posteriori estimation and adaptive refinement
===============================================

The parametric solver comes with a residual error estimator (bulk and
edge-jump terms) and three geometric indicators measuring how far the
polyhedral mesh sits from the smooth surface.  This script computes all
of them on one solve, then runs the solve-estimate-mark-refine loop with
Doerfler marking and fits the error decay against the dof count.
"""

import numpy as np

from beltrami import ParametricProblem, Sphere, parametric_solve
from beltrami.estimators import (
    adapt_loop,
    dorfler_mark,
    geometric_estimators,
    residual_estimator,
)
from beltrami.meshes import build_sphere_mesh

# --- one solve, all indicators ------------------------------------------------
sphere = Sphere(1.0)
mesh = build_sphere_mesh(sphere, 3)
problem = ParametricProblem(sphere, mesh)
ws = {}
field, report = parametric_solve(problem, workspace_out=ws)

eta, osc = residual_estimator(problem, field, ws)
geo = geometric_estimators(problem, ws)
print("indicators on a level-3 icosphere")
print(f"  triangles      : {mesh.n_triangles}")
print(f"  err_H1         : {report.err_H1:.4e}")
print(f"  eta (residual) : {eta.total:.4e}"
      f"   efficiency eta/err_H1 = {eta.total / report.err_H1:.2f}")
print(f"  data osc       : {osc.total:.4e}")
# lambda: first-order defect of the lifted gradients; beta: vertex
# displacement to the surface; mu = beta + lambda^2 bounds the geometric
# consistency error, second order like the L2 error.
print(f"  lambda         : {geo['lambda'].total:.4e}   (first order)")
print(f"  beta           : {geo['beta'].total:.4e}   (second order)")
print(f"  mu             : {geo['mu'].total:.4e}   (second order)")

# --- the marking rule ------------------------------------------------------------
marked = dorfler_mark(eta.values**2, theta=0.5)
share = (eta.values[marked] ** 2).sum() / (eta.values**2).sum()
print(f"\nDoerfler marking, theta = 0.5: {len(marked)} of {mesh.n_triangles}"
      f" triangles carry {100 * share:.1f}% of eta^2")

# --- the adaptive loop ------------------------------------------------------------
# On smooth data adaptivity cannot beat the uniform rate, but it should
# match it: err_H1 ~ n_dof^(-1/2) for linear elements on a surface.
rows, final_mesh, final_field = adapt_loop(
    sphere, build_sphere_mesh(sphere, 2), max_iters=8, theta=0.5
)
print("\nadaptive history (start: level-2 icosphere)")
print(f"  {'iter':>4s} {'n_dof':>6s} {'err_H1':>11s} {'eta':>11s} {'marked':>6s}")
for r in rows:
    print(f"  {r['iter']:>4d} {r['n_dof']:>6d} {r['err_H1']:>11.4e}"
          f" {r['eta']:>11.4e} {r['n_marked']:>6d}")

n = np.array([r["n_dof"] for r in rows], dtype=float)
e = np.array([r["err_H1"] for r in rows], dtype=float)
slope = np.polyfit(np.log(n), np.log(e), 1)[0]
print(f"\nfitted slope of err_H1 vs n_dof : {slope:+.3f}  (optimal: -0.5)")
print(f"final mesh: {final_mesh.n_vertices} vertices,"
      f" {final_mesh.n_triangles} triangles")
