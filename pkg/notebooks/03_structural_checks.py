"""
Measurement dependence, nonlocality and conspiracy
==================================================

Short tour of the structural checks in ``isetsim.analysis``.
"""
import numpy as np

from isetsim import analysis
from isetsim.experiments import DriftModel
from isetsim.geometry import UnitVector, sample_cap
from isetsim.ontology import ModelParams, mechanism

U = UnitVector.from_angle
params = ModelParams(N=1024, delta=0.02, seed=3)
rng = np.random.default_rng(3)

# p(M | A, b) for two different selected settings b
rep = analysis.measurement_dependence_single(params, U(10), U(60), U(150), U(60), 20_000, rng)
print("single:", rep.verdict, f"TV={rep.distance:.3f}", (rep.ci_low, rep.ci_high))
ctrl = analysis.measurement_dependence_single(params, U(10), U(60), U(60), U(60), 20_000, rng)
print("control:", ctrl.verdict, (ctrl.ci_low, ctrl.ci_high))

# two wing-1 settings that both sit on the bell lattice relative to one C
c = U(0)
C = mechanism(sample_cap(c, params.delta, rng), c, c)
B1, B2 = analysis.lattice_sharing_partners(params, C, U(45), U(100), rng)
print("bell:", analysis.measurement_dependence_bell(params, B1, B2, c, c, 20_000, rng).verdict)

# wing-2 outcome changes with the wing-1 exact setting, everything else fixed
w = analysis.nonlocality_witness(ModelParams(N=8, delta=0.2, azimuth_steps=4096), rng)
print("witness:", w.n1, w.n2, "k =", w.k, "O2 =", w.O2, "replay", w.replay())

# exact prepared states for separated preparations never overlap
print(analysis.psi_ontic_check(params, U(0), U(60), 10_000, rng).to_dict())

# counterfactual census: how often the naive and recomputed verdicts disagree
print(analysis.counterfactual_census(params, runs=2000, drift=DriftModel(seed=3)).to_dict())
print(analysis.counterfactual_census(params, runs=500, drift=DriftModel.none()).to_dict())

# lattice census: no orthogonal triple, plenty of orthogonal pairs
nc = analysis.noncommutativity_census(ModelParams(N=8, delta=0.2), rng=rng)
print("triples", len(nc.orthogonal_triples), "pairs", nc.two_on_lattice_pairs,
      "max |Xi.Xj|", nc.max_pairwise_dot)

# mutual information between choice and satisfier grows with the apparatus count
for n_app in (2, 4, 8, 16):
    r = analysis.conspiracy_experiment(params, n_app, 100_000, rng)
    print(n_app, f"{r.mutual_information:.4f} bits (log2 = {r.log2_count:g})")
