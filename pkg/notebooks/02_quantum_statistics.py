"""
Reproducing single-particle and Bell statistics
===============================================

Runs seeded ensembles at desk scale and compares the estimated correlation
with the quantum value.  Selected settings along a common axis have no
admissible exact setting at N = 1024 (the nearest lattice ring is farther
than two resolution caps), which the last cell shows.
"""
from isetsim.errors import InfeasibleError
from isetsim.experiments import chsh, run_bell_ensemble, run_single_ensemble
from isetsim.geometry import UnitVector
from isetsim.ontology import ExperimenterChoice, ModelParams

params = ModelParams(N=1024, delta=0.02, seed=1)
a = ExperimenterChoice.fixed(UnitVector.from_angle(0))

for deg in (60, 90, 120):
    b = ExperimenterChoice.fixed(UnitVector.from_angle(deg))
    s = run_single_ensemble(params, a, b, 100_000)
    print(f"single {deg:3d}deg  E_hat={s.E_hat:+.4f}  a.b={s.quantum_E:+.4f}  "
          f"tol={s.tolerance:.4f}  {'PASS' if s.passed else 'FAIL'}")

for deg in (45, 90, 135, 180):
    c = ExperimenterChoice.fixed(UnitVector.from_angle(deg))
    s = run_bell_ensemble(params, a, c, 100_000)
    print(f"bell   {deg:3d}deg  E_hat={s.E_hat:+.4f}  -b.c={s.quantum_E:+.4f}  "
          f"marginals {s.marginal_1:+.4f} {s.marginal_2:+.4f}")

res = chsh(params, runs_per_pair=100_000)
print(f"CHSH S={res.S:.4f} threshold={res.threshold:.4f}")

# aligned settings: empty admissible set at this N
try:
    run_single_ensemble(params, a, a, 10_000)
except InfeasibleError as exc:
    print("aligned:", exc)

# a finer lattice reaches the pole
fine = ModelParams(N=2 ** 15, delta=0.02, seed=1)
s = run_single_ensemble(fine, a, a, 50_000)
print(f"aligned at N=2^15: E_hat={s.E_hat:+.4f}")
