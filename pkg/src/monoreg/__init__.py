"""Multivalued passivity-based output regulation for strictly passive LTI plants.

Library layout:

- ``numerics``   dense linear-algebra kernel (eigh, LU solves, definiteness)
- ``plant``      plant model, passivity LMI, storage search, equilibria
- ``convex``     constraint sets, projections, normal cones, potentials
- ``hvi``        hemivariational inequality solver and exact control oracle
- ``controller`` regularized law u = (y - Proj_S(y))/eps + grad phi(y)
- ``analysis``   regulation half-space, dissipation matrices, disturbance bound
- ``simulator``  fixed-step RK4 closed loop with diagnostics
- ``scenario``   JSON scenario files and bundled examples
- ``cli``        check / analyze / simulate / sweep commands
"""

from .analysis import (RobustnessReport, dissipation_matrix, disturbance_bound,
                       omega_membership, regulation_condition)
from .controller import ContractionReport, RegularizedController, contraction_factor
from .convex import (Box, Hull, LogSumExp, QuadraticPotential, Segment,
                     ZeroPotential, normal_cone_contains, project, project_weighted)
from .errors import (ContractError, ConvergenceError, EquilibriumError, MonoregError,
                     RegularizationError, ScenarioError, SingularMatrixError)
from .hvi import HviProblem, equivalent_control, hvi_residual, solve_hvi
from .numerics import EigenResult, eig_sym, is_positive_definite, solve_linear
from .plant import (PHForm, Plant, RegulatorDesign, StorageCertificate, StorageSearch,
                    design_regulator, find_storage_matrix, ida_equilibrium,
                    passivity_lmi_matrix, ph_decomposition, unforced_equilibrium,
                    verify_passivity)
from .simulator import (ConstantReference, DisturbanceComponent, DisturbanceSpec,
                        SawtoothReference, Scenario, Trajectory, closed_loop_rhs,
                        disturbance_eval, integrate)

__version__ = "0.1.0"

__all__ = [
    "Box", "ConstantReference", "ContractError", "ContractionReport",
    "ConvergenceError", "DisturbanceComponent", "DisturbanceSpec", "EigenResult",
    "EquilibriumError", "Hull", "HviProblem", "LogSumExp", "MonoregError", "PHForm",
    "Plant", "QuadraticPotential", "RegularizationError", "RegularizedController",
    "RegulatorDesign", "RobustnessReport", "SawtoothReference", "Scenario",
    "ScenarioError", "Segment", "SingularMatrixError", "StorageCertificate",
    "StorageSearch", "Trajectory", "ZeroPotential", "closed_loop_rhs",
    "contraction_factor", "design_regulator", "disturbance_bound", "disturbance_eval",
    "dissipation_matrix", "eig_sym", "equivalent_control", "find_storage_matrix",
    "hvi_residual", "ida_equilibrium", "integrate", "is_positive_definite",
    "normal_cone_contains", "omega_membership", "passivity_lmi_matrix",
    "ph_decomposition", "project", "project_weighted", "regulation_condition",
    "solve_hvi", "solve_linear", "unforced_equilibrium", "verify_passivity",
]
