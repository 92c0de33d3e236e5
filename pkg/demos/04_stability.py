"""Von Neumann scan of the scheme and a time-domain confirmation.

The spectral radius of the one-step amplification matrix is scanned over
wave vectors. A worst radius above 1 means some Fourier mode grows. The
prediction is then checked by running the Gaussian-hill problem at an
unstable and at a stable setting.

Run: python demos/04_stability.py   (about 20 s)
"""
import numpy as np

from lbelastic.engine import InstabilityError, run_to_steady_state
from lbelastic.material import MaterialParams
from lbelastic.stability import stability_map
from lbelastic.verification import gaussian_case, setup_run

nus = np.array([-0.6, -0.4, 0.0, 0.2, 0.5, 0.8, 0.997])
Es = np.array([0.02, 0.05, 0.1, 0.13, 0.2, 0.3, 0.5])
sm = stability_map(nus, Es)
print("stability map ('#' = unstable)")
print("   nu \\ E~ " + " ".join(f"{E:5.2f}" for E in Es))
for a, nu in enumerate(nus):
    print(f"{nu:10.3f} " + " ".join("    #" if not s else "    ." for s in sm.stable[a]))

print("\ntime domain, Gaussian hill on 40x40, nu=-0.4")
for E in (0.10, 0.13):
    sim = setup_run(gaussian_case(), MaterialParams(E, -0.4), 1 / 40)
    try:
        res = run_to_steady_state(sim, tol=1e-9, max_steps=320000, residual_interval=100, record_interval=1000)
        print(f"  E~={E}: converged after {res.steps} steps")
    except InstabilityError as exc:
        print(f"  E~={E}: blew up at step {exc.step}")
