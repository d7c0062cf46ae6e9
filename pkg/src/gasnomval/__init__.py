"""Gas network nomination validation toolkit.

Ingests GasLib network and scenario files, derives physical and smoothing
constants, assembles discrete (MINLP) and continuous (NLP) validation models
with optional cut families and three pressure-loss formulations, exports
them in a documented JSON/text format, and checks candidate solutions, with
a tree-network oracle for desk-scale ground truth.
"""

from .errors import (
    BuildError,
    DataError,
    ExportError,
    GasLibParseError,
    GasNomValError,
    ScenarioError,
    SolutionError,
    UnitError,
)
from .network import (
    Arc,
    ArcKind,
    DerivedConstants,
    GasQuality,
    Network,
    Node,
    NodeKind,
    PipeGeometry,
    Scenario,
    apply_scenario,
    classify_zero_length,
    compute_heat_power_bounds,
    global_calorific_bounds,
    node_balance_residual,
)
from .units import denormalize_units, normalize_units
from .gaslib import (
    build_network,
    build_scenario,
    derive_constants,
    load_instance,
    papay_z,
    parse_network,
    parse_network_file,
    parse_scenario,
    parse_scenario_file,
)
from .pressure_loss import (
    FlowPoint,
    PipeLossParams,
    colebrook_lambda,
    derive_pipe_params,
    phi,
    phi_bar2,
    phi_fs,
    phi_hppc,
    phi_pkr,
    phi_sqrt,
    pkr_lambda,
    reynolds,
    sample_curves,
)
from .model import (
    Constraint,
    ModelBuilder,
    ModelInstance,
    Variable,
    build_instance,
    instance_stats,
)
from .export import (
    Solution,
    model_fingerprint,
    model_to_text,
    parse_model,
    parse_solution,
    serialize_model,
    serialize_solution,
)
from .validation import ValidationReport, validate
from .oracle import (
    TreeOracleResult,
    make_random_scenario,
    random_feasible_sampler,
    solution_from_oracle,
    tree_oracle,
)

__version__ = "0.1.0"
