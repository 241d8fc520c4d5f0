"""Two-tier HetNet downlink simulator with time- and frequency-domain ICIC schemes."""

from .association import BiasConfig, associate, associate_all
from .ca_freq import MultiFlowDynamicQL, MultiFlowStaticQL, SingleFlowQL
from .engine import DropResult, InvariantViolation, SimConfig, run_drop
from .icic_static import FixedAbsCre, FixedCreAdaptiveAbs, NoIcicCre, ResourcePartitioning
from .learn_q import DynamicQL, StaticQL
from .learn_sat import SatisfactionScheme
from .radio import RadioConfig, RbGrid
from .runner import ExperimentConfig, compare_report, run_experiment
from .topology import InfeasibleLayoutError, NetworkLayout, ScenarioConfig, generate_layout

__all__ = [
    "BiasConfig", "associate", "associate_all",
    "SingleFlowQL", "MultiFlowStaticQL", "MultiFlowDynamicQL",
    "DropResult", "InvariantViolation", "SimConfig", "run_drop",
    "ResourcePartitioning", "NoIcicCre", "FixedAbsCre", "FixedCreAdaptiveAbs",
    "StaticQL", "DynamicQL", "SatisfactionScheme",
    "RadioConfig", "RbGrid",
    "ExperimentConfig", "compare_report", "run_experiment",
    "InfeasibleLayoutError", "NetworkLayout", "ScenarioConfig", "generate_layout",
]
