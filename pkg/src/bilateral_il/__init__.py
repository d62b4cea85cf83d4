"""Bilateral-control-based imitation learning for velocity-controlled robots.

Simulated master/slave arms under four-channel bilateral control, a
scripted demonstrator, an LSTM that predicts master responses from slave
responses, and autonomous operation that swaps the master for the model.
"""

from .config import ExperimentConfig, load_config
from .errors import ConfigError, DivergenceError, NumericalError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DivergenceError", "ExperimentConfig", "NumericalError", "load_config"]
