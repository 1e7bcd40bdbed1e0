"""Current-mode control without a compensation ramp: period doubling and
the coexistence window bounded by the fold and a border collision.

Reproduces the 2T-periodic inductor current past the period-doubling point
and reports the window over which two T-periodic solutions coexist.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import boostbif as bb

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

params = bb.ConverterParams(v_s=3, L=1e-6, C_f=100e-6, R=2, r=0.1, R_c=0.0,
                            V_h=0.0, f_s=600e3, scheme=bb.CmcClosedLoop(k_p=2))
model = bb.build_cmc_model(params)

# settle past the period doubling, then converge the 2T orbit exactly
v_r = 8.4
d0 = bb.duty_solutions(params, v_r)[0]
x0 = bb.averaged_orbit_seed(model, v_r, d0) * 1.001
settled = bb.simulate_cycles(model, x0, v_r, 600, record_samples=False)
orb2 = bb.find_periodic_orbit(model, v_r, settled.final_state(), period_mult=2)
print(f"2T orbit at v_r = {v_r}: duties = "
      f"({orb2.duties[0]:.4f}, {orb2.duties[1]:.4f}), {orb2.classification}")

traj = bb.simulate_cycles(model, orb2.x_star, v_r, 4)
fig, ax = plt.subplots(figsize=(7, 3.5))
ax.plot(traj.t * 1e6, traj.states[:, 0], "k-", lw=1, label="i_L")
ax.plot(traj.t * 1e6, traj.y + traj.states[:, 0], "b--", lw=1,
        label="current command")
ax.set_xlabel("time (us)")
ax.set_ylabel("A")
ax.set_title("2T-periodic inductor current, v_r = 8.4")
ax.legend(fontsize=8)
fig.savefig(os.path.join(OUT, "cmc_period_two.png"), dpi=150)

diagram = bb.sweep(model, 5.0, 19.0, 101)
for cp in diagram.critical_points:
    print(f"critical point: {cp.kind} at v_r = {cp.v_r:.4f}, duty = {cp.duty:.4f}")
lo, hi = bb.coexistence_window(model, diagram)
print(f"two T-periodic solutions coexist for {lo:.3f} < v_r < {hi:.3f}")
print(f"figure saved to {OUT}/cmc_period_two.png")
