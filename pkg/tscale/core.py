import logging
from tscale.base import GridPolicy
from tscale.utils import load_args


class Settings:
    """
    Numerical settings, each overridable from a TSCALE_ environment variable.
    """

    def __init__(
        self,
        TSCALE_DENSE_STEP="1e-3",
        TSCALE_MEMBERSHIP_RTOL="1e-12",
        TSCALE_ROOT_TOL="1e-10",
        TSCALE_ROOT_STEP="0.1",
        TSCALE_S_FLOOR="-1e3",
        TSCALE_SEED="42",
        TSCALE_WORKERS="4",
        TSCALE_LOG_LEVEL="WARNING",
    ):
        self.dense_step = float(TSCALE_DENSE_STEP)
        self.membership_rtol = float(TSCALE_MEMBERSHIP_RTOL)
        self.root_tol = float(TSCALE_ROOT_TOL)
        self.root_step = float(TSCALE_ROOT_STEP)
        self.s_floor = float(TSCALE_S_FLOOR)
        self.seed = int(TSCALE_SEED)
        self.workers = int(TSCALE_WORKERS)
        self.log_level = TSCALE_LOG_LEVEL.upper()

        if self.root_tol <= 0:
            raise ValueError("must set a positive 'root_tol' setting")
        if self.root_step <= 0:
            raise ValueError("must set a positive 'root_step' setting")
        if self.s_floor >= 0:
            raise ValueError("'s_floor' setting must be negative")
        if self.workers < 1:
            raise ValueError("'workers' setting must be at least 1")
        if not isinstance(logging.getLevelName(self.log_level), int):
            raise ValueError(f"unknown log level {self.log_level}")

    @property
    def policy(self):
        return GridPolicy(dense_step=self.dense_step, membership_rtol=self.membership_rtol)

    def as_dict(self):
        return dict(vars(self))


def load_settings():
    return Settings(**load_args(Settings))
