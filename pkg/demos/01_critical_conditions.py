"""Closed-form critical conditions for the three study converters.

Prints the saddle-node and Hopf predictions of the averaged model side by
side: the critical duty cycles, the critical reference voltages, and the
critical-mode exclusion check.
"""

import boostbif as bb

CASES = {
    "PVMC (k_p = 2, r = 0.1)": bb.ConverterParams(
        v_s=3, L=1e-6, C_f=100e-6, R=2, r=0.1, R_c=0.0, V_h=1.0, f_s=600e3,
        scheme=bb.Pvmc(k_p=2)),
    "VMC + type-III (r = 0.6)": bb.ConverterParams(
        v_s=10, L=46.6e-6, C_f=3e-3, R=23, r=0.6, R_c=18e-3, V_h=2.0, f_s=300e3,
        scheme=bb.VmcType3(K_c=35.59, z1=556, z2=549, p1=25510, p2=19495)),
    "CMC closed loop (k_p = 2, V_h = 0)": bb.ConverterParams(
        v_s=3, L=1e-6, C_f=100e-6, R=2, r=0.1, R_c=0.0, V_h=0.0, f_s=600e3,
        scheme=bb.CmcClosedLoop(k_p=2)),
}

for name, params in CASES.items():
    rep = bb.critical_report(params)
    print(f"\n{name}")
    print(f"  eta = {params.eta:.4g}")
    print(f"  SNB:  D_S = {rep.D_S:.4f}, v_r* = {rep.v_r_star:.4f}")
    if rep.D_H is not None:
        print(f"  Hopf: D_H = {rep.D_H:.4f}, v_r(D_H) = {rep.v_r_hopf:.4f}"
              f"  (precedes SNB: {rep.hopf_precedes_snb})")
    else:
        print("  Hopf: none predicted for this scheme/gain")
    print(f"  critical mode: K = {rep.K:.4g}, K_crit = {rep.K_crit:.4g}, "
          f"K* = {rep.K_star:.4g} -> SNB excluded: "
          f"{rep.snb_excluded_in_critical_mode}")
    if params.r > 0:
        i_dc, v_dc = bb.dc_solution(params)
        print(f"  saturated DC solution: (i_L, v_C) = ({i_dc:.4g}, {v_dc:.4g})")

# removing the parasitic resistance removes the fold entirely
print("\nPVMC with r = 0: v_r(D) is monotone, so one duty per reference")
lossless = CASES["PVMC (k_p = 2, r = 0.1)"].replace(r=0.0)
for vr in (4.0, 6.0, 8.0, 12.0):
    sols = bb.duty_solutions(lossless, vr)
    print(f"  v_r = {vr}: duty solutions = {[f'{d:.4f}' for d in sols]}")
