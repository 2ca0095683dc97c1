"""Deterministic simulator of crowdsourced viewpoint capture, 5G offloading,
and reconstruction fidelity for vehicle digital twins."""

from .errors import ConfigError, InvalidInputError, SimulationTimeout
from .geometry import (CameraPose, ContributorLine, CoverageSummary, Quaternion,
                       SamplingScenario, ScenarioParams, ViewpointSet,
                       compose_camera_matrix, coverage_metrics, look_at_pose,
                       quat_to_rotation, read_transforms_manifest, sample_viewpoints,
                       scaling_matrix, translation_matrix, write_transforms_manifest)
from .radio import (AreaClass, Heatmap, RadioEnvironment, Rect, heatmap,
                    link_throughput, make_environment, path_loss, write_heatmap_csv)
from .mobility import (VehicleTrajectory, associate, generate_path, position_at,
                       read_trajectories_csv, write_trajectories_csv)
from .fidelity import (CalibrationTable, FidelityRecord, ImageBuffer,
                       default_calibration, fidelity_drop, load_calibration_csv,
                       mse, predict_fidelity, psnr, write_calibration_csv)
from .pipeline import (CompressionProfile, EndToEndConfig, OffloadTask,
                       StageLatencies, SyncReport, compressed_size,
                       crowdsource_time, run_end_to_end, simulate_offload,
                       write_sync_reports_csv)
from .selection import (Candidate, SelectionPolicy, TopologyScenario,
                        generate_topology_viewpoints, select_contributors,
                        union_coverage_fraction, write_selection_report_csv)
from .config import Diagnostic, ExperimentConfig, ExperimentKind, load_config, validate_config
from .experiments import run_experiment

__version__ = "0.1.0"
