"""Finite-volume solver for the Savage-Hutter granular avalanche equations
on unstructured triangular meshes."""

from .adaptivity import (AdaptConfig, AdaptiveMesh, coarsen, error_indicator,
                         mark, refine)
from .io import Frame, frame_from_field, l1_error, read_vtk, sample_profile, write_vtk
from .mesh import MeshError, TriMesh, generate_box_mesh, load_mesh, save_mesh
from .physics import (BetaPair, EarthPressure, HyperbolicityError,
                      MaterialParams, PrimitiveState, SourceTerms, beta,
                      conserved_from_primitive, earth_pressure, eigenvalues,
                      flux_normal, primitive_from_conserved, rotation_defect,
                      source)
from .reconstruction import (candidate_gradients, eno_select, evaluate_trace,
                             limit_extremum, limited_field_gradients,
                             positivity_guard, scalar_gradients)
from .riemann import RiemannStates, WaveSpeeds, gravity_coeff, hll_flux, star_estimates, wave_speeds
from .scenarios import (BoundarySpec, ScenarioSpec, cap_initial, chute_scenario,
                        chute_zeta, cone_zb, dam_break_scenario, dam_initial,
                        exact_dambreak, flat_rest_scenario, ghost_state,
                        obstacle_scenario)
from .stepping import (SolutionField, SolverError, StepConfig, StepRecord,
                       advance, cfl_dt, corrector, initial_field,
                       predictor, pressure_state, step)

__version__ = "0.1.0"
