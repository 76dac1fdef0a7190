from pads.harness.config import Config, load_config, parse_config
from pads.harness.runner import build_world, run_experiment, run_simulation

__all__ = ["Config", "build_world", "load_config", "parse_config", "run_experiment", "run_simulation"]
