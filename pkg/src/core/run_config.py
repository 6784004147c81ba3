"""
RunConfig: the effective settings of one command, embedded in its report
"""

import bellbound_conf
from src.core.errors import ValidationError
from src.utils.helpers import get_thread_count

OUTPUT_FORMATS = ["json", "csv", "text"]


class RunConfig:
    """Command settings resolved from flags over the configuration defaults"""

    def __init__(self, command, inputs=None, state=None, povm=None, functional=None, settings=None,
                 seed=0, restarts=None, tolerance=None, cap_dim=None, output_format="json",
                 backend=None, candidates=None, threads=None):
        """Store and validate the settings"""
        if output_format not in OUTPUT_FORMATS:
            raise ValidationError(f"Unknown output format '{output_format}', expected one of {OUTPUT_FORMATS}")
        if restarts is not None and int(restarts) < 1:
            raise ValidationError(f"Restart count must be positive, got {restarts}")
        if tolerance is not None and not float(tolerance) > 0:
            raise ValidationError(f"Tolerance must be positive, got {tolerance}")

        self.command = command
        self.inputs = list(inputs or [])
        self.state = state
        self.povm = povm
        self.functional = functional
        self.settings = list(settings) if settings else None
        self.seed = int(seed)
        self.restarts = int(restarts) if restarts is not None else bellbound_conf.RESTARTS
        self.tolerance = float(tolerance) if tolerance is not None else bellbound_conf.FEASIBILITY_TOL
        self.cap_dim = int(cap_dim) if cap_dim is not None else bellbound_conf.COPIED_DIM_CAP
        self.output_format = output_format
        self.backend = backend or bellbound_conf.LP_BACKEND
        self.candidates = list(candidates) if candidates else list(bellbound_conf.DILATION_CANDIDATES)
        self.threads = int(threads) if threads is not None else get_thread_count()

    def to_dict(self):
        """Every setting that influences a reported number"""
        return {
            "command": self.command,
            "inputs": self.inputs,
            "state": self.state,
            "povm": self.povm,
            "functional": self.functional,
            "settings": self.settings,
            "seed": self.seed,
            "restarts": self.restarts,
            "tolerance": self.tolerance,
            "cap_dim": self.cap_dim,
            "format": self.output_format,
            "backend": self.backend,
            "candidates": self.candidates,
            "iteration_cap": bellbound_conf.ITERATION_CAP,
            "strategy_cap": bellbound_conf.STRATEGY_CAP,
            "version": bellbound_conf.VERSION,
        }

    def __str__(self):
        """String representation"""
        return f"RunConfig({self.command}, seed={self.seed}, restarts={self.restarts})"
