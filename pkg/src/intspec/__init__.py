"""Estimation of the integrated spectral measure of heavy-tailed observations
and tests for a constant extreme value dependence structure over time."""
from .copulas import Scenario, frechet_quantile, generate, preset, sample_gumbel, sample_t_copula
from .estimator import SpectralPath, estimate_at, estimate_path, integrated_path, local_estimate
from .harness import ExperimentPlan, PowerTable, analyze, p_value_quantiles, run
from .kernels import BACKEND
from .limit import CriticalTable, estimated_limit_p_values, pillow_critical_values, simulate_bridge, simulate_pillow
from .sample import BlockScheme, LowerSetFamily, Sample, TimedObservation, decompose, enumerate_candidate_sets, partition
from .stationarity import PerSampleSimulation, TestReport, cm_statistic, compute_statistics, decide, ks_statistic

__version__ = "0.1.0"
