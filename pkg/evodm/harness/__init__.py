from evodm.harness.config import ExperimentConfig, available_profiles, load_experiment_config  # noqa: F401
from evodm.harness.manifest import RunManifest, find_manifest, register_outputs, software_version  # noqa: F401
