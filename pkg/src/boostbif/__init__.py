"""Bifurcation analysis of PWM boost converters.

Closed-form saddle-node and Hopf conditions from the state-space-averaged
model, verified against a cycle-accurate switched simulator with
periodic-orbit shooting and Floquet stability analysis.
"""

from .params import (CmcClosedLoop, CmcOpenLoop, ControlScheme,
                     ConverterParams, Pvmc, VmcType3)
from .switched import (RampSpec, StateSpaceRealization, SwitchedModel,
                       build_cmc_model, build_model, build_pvmc_model,
                       build_type3_model, realize_type3)
from .averaged import (AveragedPoint, CriticalMode, CriticalReport,
                       HopfSnbOrder, NoBifurcationError, averaged_matrices,
                       averaged_point, averaged_poles, averaged_steady_state,
                       characteristic_coeffs, control_to_output_tf,
                       critical_mode_check, critical_report, dc_solution,
                       duty_solutions, hopf_duty, hopf_gain_threshold,
                       hopf_precedes_snb, i_peak, open_loop_duty, snb_duty,
                       snb_reference, snb_reference_smallgain, vr_of_duty)
from .sim import (Trajectory, detect_dc_saturation, simulate_cycles,
                  stage_advance, state_scale, switching_instant)
from .orbits import (GrazingError, Orbit, StabilityInfo, averaged_orbit_seed,
                     classify_stability, dc_orbit, dc_seed,
                     find_periodic_orbit, fixed_duty_orbit,
                     floquet_multipliers, stroboscopic_map)
from .sweep import (BifurcationDiagram, Branch, CriticalPoint, NoBracketError,
                    coexistence_window, export_diagram, locate_bifurcation,
                    sweep)

__version__ = "0.1.0"
