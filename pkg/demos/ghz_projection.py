"""GHZ states from M additions and a projection onto |0> + |M>/sqrt(M!).

The projector is realized by M displaced photon subtractions, one per root of
z^M + M!, followed by a vacuum detection.  Compare with the Waring route,
which needs 1 + 2^(M-1) terms for the homogenized target.
"""
from stellarprep import ghz_state, monomial_pair_rank, synthesize_ghz, synthesize_waring
from stellarprep.synthesis import ghz_roots

for M in (2, 3, 4):
    circuit, rep = synthesize_ghz(M)
    roots = ", ".join(f"{r.real:+.3f}{r.imag:+.3f}j" for r in ghz_roots(M))
    print(f"M={M}: fidelity {rep.fidelity:.12f}, additions {rep.additions}, subtractions {rep.subtractions}, p = {rep.success_probability:.4f}")
    print(f"   roots: {roots}")

_, waring = synthesize_waring(ghz_state(3))
print(f"Waring route for M=3: rank {waring.rank} (predicted {monomial_pair_rank(3)}), "
      f"additions {waring.additions}, PNR {waring.pnr_order}")
