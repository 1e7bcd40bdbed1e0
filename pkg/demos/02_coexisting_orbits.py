"""Coexisting T-periodic solutions of the PVMC converter at v_r = 7.

Locates both unstable orbits predicted just below the fold, plots the ramp
against the compensator output over two clock periods for each, and shows
the jump to the saturated DC solution once v_r passes the Hopf point.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import boostbif as bb

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

params = bb.ConverterParams(v_s=3, L=1e-6, C_f=100e-6, R=2, r=0.1, R_c=0.0,
                            V_h=1.0, f_s=600e3, scheme=bb.Pvmc(k_p=2))
model = bb.build_pvmc_model(params)
v_r = 7.0

fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
for ax, duty_guess in zip(axes, bb.duty_solutions(params, v_r)):
    seed = bb.averaged_orbit_seed(model, v_r, duty_guess)
    orb = bb.find_periodic_orbit(model, v_r, seed)
    print(f"orbit from averaged duty {duty_guess:.4f}: duty = {orb.duty:.4f}, "
          f"{orb.classification}, multipliers = {np.round(orb.multipliers, 4)}")
    traj = bb.simulate_cycles(model, orb.x_star, v_r, 2)
    ax.plot(traj.t * 1e6, traj.h, "k-", lw=1, label="ramp h(t)")
    ax.plot(traj.t * 1e6, traj.y, "b--", lw=1, label=f"y(t), D = {orb.duty:.2f}")
    ax.set_ylabel("V")
    ax.legend(loc="upper right", fontsize=8)
axes[1].set_xlabel("time (us)")
fig.suptitle("Two coexisting unstable T-periodic solutions, v_r = 7")
fig.savefig(os.path.join(OUT, "coexisting_orbits.png"), dpi=150)
print(f"figure saved to {OUT}/coexisting_orbits.png")

# bistability: above the Hopf point only the DC solution attracts
for vr_test, x0 in ((4.5, None), (5.5, np.array([29.0, 0.1]))):
    if x0 is None:
        d0 = bb.duty_solutions(params, vr_test)[0]
        x0 = bb.averaged_orbit_seed(model, vr_test, d0)
    traj = bb.simulate_cycles(model, x0, vr_test, 600, record_samples=False)
    print(f"v_r = {vr_test}: settles on DC solution: "
          f"{bb.detect_dc_saturation(traj, 100)} "
          f"(terminal duty {traj.cycle_duties[-1]:.3f})")
