"""Bifurcation diagram of the PVMC converter over the reference voltage.

Sweeps v_r across the fold, draws stable sections solid and unstable dotted
(including the saturated DC branch at v_C = 0), and marks the located
Neimark and saddle-node points.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import boostbif as bb

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

params = bb.ConverterParams(v_s=3, L=1e-6, C_f=100e-6, R=2, r=0.1, R_c=0.0,
                            V_h=1.0, f_s=600e3, scheme=bb.Pvmc(k_p=2))
model = bb.build_pvmc_model(params)

diagram = bb.sweep(model, 3.0, 8.0, 101)
bb.export_diagram(diagram, OUT, "pvmc", model.state_labels)

fig, ax = plt.subplots(figsize=(7, 4.5))
for branch in diagram.branches:
    for vr, orb in branch.points:
        stable = orb.classification in ("stable", "saturated-dc")
        ax.plot(vr, orb.x_star[1], "k." if stable else "r.",
                ms=3 if stable else 2)
for cp in diagram.critical_points:
    ax.axvline(cp.v_r, color="b", lw=0.6, ls=":")
    ax.annotate(f"{cp.kind} @ {cp.v_r:.2f}", (cp.v_r, 1.0 + cp.state[1] * 0.5),
                fontsize=8, color="b")
    print(f"critical point: {cp.kind} at v_r = {cp.v_r:.4f}, duty = {cp.duty:.4f}")
ax.set_xlabel("reference voltage v_r (V)")
ax.set_ylabel("v_C at the clock instant (V)")
ax.set_title("PVMC boost converter: stable (black) / unstable (red) branches")
fig.savefig(os.path.join(OUT, "bifurcation_diagram.png"), dpi=150)
print(f"diagram data and figure saved under {OUT}/")
