"""Solve the periodic trigonometric benchmark once and compare with the exact fields.

Run: python demos/01_solve_trig.py
"""
from lbelastic.engine import run_to_steady_state
from lbelastic.material import MaterialParams, compute_relaxation_set
from lbelastic.verification import relative_errors, setup_run, trig_case

mat = MaterialParams(E_tilde=0.11, nu=0.8)
rs = compute_relaxation_set(mat.E_tilde, mat.nu)
print(f"material: nu={mat.nu}, E~={mat.E_tilde} -> mu~={mat.mu_tilde:.5f}, K~={mat.K_tilde:.4f}")
print(f"relaxation rates (m11, ms, md, m12, m21, m22): {rs.rates()[2:].round(4).tolist()}")

case = trig_case()
sim = setup_run(case, mat, eps=1 / 20)
res = run_to_steady_state(sim, tol=1e-9)
print(f"\n20x20 grid: steady after {res.steps} steps (converged={res.converged})")

l2u, linfu, l2s, linfs = relative_errors(res.fields, case, sim.grid, mat)
print(f"relative displacement error: L2 {l2u:.2%}, Linf {linfu:.2%}")
print(f"relative stress error:       L2 {l2s:.2%}, Linf {linfs:.2%}")
print("A few percent on a 20x20 grid, shrinking like eps^2 under refinement (see demo 02).")
