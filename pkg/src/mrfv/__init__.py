"""Adaptive multiresolution finite volume solver for strongly degenerate parabolic equations.

u_t + b(u)_x = A(u)_xx is discretised with Engquist-Osher fluxes and MUSCL
reconstruction, advanced with RK3 or an embedded RK3(2) pair, and evolved
either on a uniform grid or on the leaves of a graded dyadic tree.
"""

from .bench_harness import (ConvergenceReport, ErrorTriple, convergence_study, emit_outputs, error_norms,
                            factor_c_sweep, project_to_level, table_run)
from .fv_kernel import (StepSizeError, UniformField, cfl_number, engquist_osher_flux, first_order_step,
                        minmod, muscl_slopes, numerical_divergence)
from .model import (Boundary, ProblemSpec, SedimentationPreset, TrafficLight, TrafficPreset, make_custom,
                    make_problem, make_sedimentation_example1, make_traffic_example2)
from .mr_tree import (GradingError, MrTree, build_initial_tree, compression_rate, decode, detail, encode,
                      predict, project, threshold, update_tree)
from .solver_driver import (ReferenceTolerance, RunConfig, RunReport, SimulationError, reference_tolerance,
                            run, snapshot_at)
from .time_integrator import RkfController, limiter, new_dt, rk3_step, rkf_step

__version__ = "0.1.0"
