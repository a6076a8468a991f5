"""Slicekit - Configuration"""

import json
import warnings
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings with validation.

    Every value can be overridden through a ``SLICEKIT_``-prefixed environment
    variable or a ``.env`` file.
    """

    model_config = SettingsConfigDict(
        env_prefix="SLICEKIT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Dynamic movement primitives
    dmp_alpha_z: float = Field(default=25.0, gt=0, description="Spring gain alpha_z")
    dmp_beta_z: Optional[float] = Field(
        default=None, description="Damper gain beta_z (default alpha_z / 4)"
    )
    dmp_tau: float = Field(default=1.0, gt=0, description="Time coefficient (1/s)")
    dmp_n_basis: int = Field(default=30, ge=1, description="Gaussian basis count K")
    dmp_overlap: float = Field(
        default=0.7, description="Activation of neighbouring bases at their midpoint"
    )
    dmp_dt: float = Field(default=0.001, gt=0, description="Integration step (s)")
    dmp_ridge_lambda: float = Field(default=1e-6, ge=0, description="Ridge coefficient")
    dmp_divergence_bound: float = Field(
        default=1e3, gt=0, description="Largest |y| (m) accepted from a rollout"
    )

    # Vibration / force features
    sample_rate: int = Field(default=44100, description="Microphone sample rate (Hz)")
    window_seconds: float = Field(default=0.1, description="Feature window length (s)")
    force_rate: int = Field(default=100, description="Force buffer rate (Hz)")
    n_fft: int = Field(default=1024, description="STFT frame size")
    hop_length: int = Field(default=512, description="STFT hop")
    n_mels: int = Field(default=128)
    n_mfcc: int = Field(default=40)
    log_floor: float = Field(default=1e-10, gt=0, description="Floor under every log")
    contrast_fmin: float = Field(default=200.0, gt=0)
    contrast_bands: int = Field(default=6, ge=1)
    contrast_quantile: float = Field(default=0.02)

    # Changepoint labeling
    bocd_hazard: float = Field(default=1.0 / 200.0, description="Constant hazard")
    bocd_prune_mass: float = Field(default=1e-8)
    force_gradient_threshold: float = Field(default=2.0, description="N per sample")
    coincidence_horizon: int = Field(default=3, ge=0, description="Windows")

    # Classifier training
    learning_rate: float = Field(default=1e-3, gt=0)
    adam_beta1: float = Field(default=0.9)
    adam_beta2: float = Field(default=0.999)
    adam_epsilon: float = Field(default=1e-8, gt=0)
    batch_size: int = Field(default=32, ge=1)
    epochs: int = Field(default=50, ge=1)
    dropout_rate: float = Field(default=0.5)
    test_fraction: float = Field(default=0.2)
    max_windows_per_class: Optional[int] = Field(
        default=400, description="Cap per class when building training sets"
    )
    param_upper_bound: float = Field(
        default=0.1, gt=0, description="Clamp for regressed slicing parameters (m)"
    )

    # Skill sequencer
    contact_force_threshold: float = Field(default=10.0, description="N on motion axis")
    lift_height: float = Field(default=0.005, description="Lift after board contact (m)")
    slice_thickness: float = Field(default=0.010, description="Slice thickness (m)")
    approach_speed: float = Field(default=0.04, gt=0, description="Guarded-move speed (m/s)")
    approach_clearance: float = Field(
        default=0.1, gt=0, description="Height above the board before the item top is known (m)"
    )
    hover_height: float = Field(default=0.02, gt=0, description="Clearance above a known item top (m)")
    monitor_consecutive: int = Field(default=2, ge=1)
    slip_engagement_gain: float = Field(default=1.5, gt=1.0)
    max_retries: int = Field(default=3, ge=0)
    step_budget: int = Field(default=4000, description="Windows per episode")
    max_actions_per_slice: int = Field(default=40)
    fixed_phi_x: float = Field(default=0.005, description="Conservative amplitude (m)")
    fixed_phi_z: float = Field(default=0.005, description="Conservative height (m)")

    # Run ledger
    ledger_url: str = Field(
        default="sqlite:///slicekit_runs.db", description="SQLAlchemy URL of the run ledger"
    )
    ledger_enabled: bool = Field(default=True)

    # Parallelism
    jobs: int = Field(default=1, ge=1)

    @field_validator("bocd_hazard")
    @classmethod
    def validate_hazard(cls, v: float) -> float:
        """Hazard must be a proper probability."""
        if not 0.0 < v < 1.0:
            raise ValueError(f"bocd_hazard must lie in (0, 1), got {v}")
        return v

    @field_validator("dropout_rate")
    @classmethod
    def validate_dropout(cls, v: float) -> float:
        """Dropout must leave some units alive."""
        if not 0.0 <= v < 1.0:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {v}")
        return v

    @field_validator("test_fraction", "contrast_quantile")
    @classmethod
    def validate_fraction(cls, v: float) -> float:
        """Fractions are open-interval probabilities."""
        if not 0.0 < v < 1.0:
            raise ValueError(f"fraction must lie in (0, 1), got {v}")
        return v

    @model_validator(mode="after")
    def fill_beta(self) -> "Settings":
        """Default beta_z to critical damping and warn on odd choices."""
        if self.dmp_beta_z is None:
            self.dmp_beta_z = self.dmp_alpha_z / 4.0
        elif self.dmp_beta_z <= 0:
            raise ValueError(f"dmp_beta_z must be positive, got {self.dmp_beta_z}")
        elif abs(self.dmp_beta_z - self.dmp_alpha_z / 4.0) > 1e-9:
            warnings.warn(
                "dmp_beta_z differs from alpha_z / 4; the transformation system "
                "is no longer critically damped."
            )
        if self.n_fft % 2:
            raise ValueError(f"n_fft must be even, got {self.n_fft}")
        return self

    @property
    def window_samples(self) -> int:
        """Audio samples per feature window."""
        return int(round(self.sample_rate * self.window_seconds))

    @property
    def force_samples(self) -> int:
        """Force samples buffered per feature window."""
        return int(round(self.force_rate * self.window_seconds))


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


class ConfigError(ValueError):
    """Run configuration file is missing, unreadable or invalid."""


class RunConfig(BaseModel):
    """
    Per-run options shared by every CLI command.

    Loaded from a ``--config`` JSON file; command-line flags override file
    values. Input paths are checked before anything runs.
    """

    model_config = ConfigDict(extra="forbid")

    subcommand: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    jobs: Optional[int] = Field(default=None, ge=1)

    # Paths
    materials: Optional[Path] = Field(default=None, description="Material library JSON")
    dataset: Optional[Path] = Field(default=None, description="Dataset JSON-lines file")
    models: Optional[Path] = Field(default=None, description="Directory of trained networks")
    output: Optional[Path] = Field(default=None, description="Output file or directory")

    # Features and tasks
    mask: str = "combined"
    tasks: list[str] = Field(default_factory=lambda: ["slicenet", "hitting", "slicing", "foodnet", "regress"])
    ablation_masks: Optional[list[str]] = None

    # Collection and training sizes
    recipe: Optional[dict[str, Any]] = None
    label_mode: str = "truth"
    epochs: Optional[int] = Field(default=None, ge=1)
    max_per_class: Optional[int] = Field(default=None, ge=1)

    # Cutting
    bench_materials: Optional[list[str]] = None
    trials: int = Field(default=5, ge=1)
    slices: int = Field(default=3, ge=0)
    monitor: str = "oracle"
    policy: str = "adaptive-lookup"

    @field_validator("mask")
    @classmethod
    def validate_mask(cls, v: str) -> str:
        from src.signals import NAMED_MASKS

        if v not in NAMED_MASKS:
            raise ValueError(f"unknown feature mask {v!r}; choose from {sorted(NAMED_MASKS)}")
        return v

    @field_validator("ablation_masks")
    @classmethod
    def validate_ablation_masks(cls, v: Optional[list[str]]) -> Optional[list[str]]:
        from src.signals import NAMED_MASKS

        if v is not None:
            unknown = sorted(set(v) - set(NAMED_MASKS))
            if unknown:
                raise ValueError(f"unknown feature masks {unknown}")
        return v

    @field_validator("tasks")
    @classmethod
    def validate_tasks(cls, v: list[str]) -> list[str]:
        from src.classify import TASKS

        unknown = sorted(set(v) - set(TASKS))
        if unknown:
            raise ValueError(f"unknown tasks {unknown}; choose from {sorted(TASKS)}")
        return v

    @field_validator("label_mode")
    @classmethod
    def validate_label_mode(cls, v: str) -> str:
        if v not in ("truth", "labeler"):
            raise ValueError(f"label_mode must be 'truth' or 'labeler', got {v!r}")
        return v

    @field_validator("monitor")
    @classmethod
    def validate_monitor(cls, v: str) -> str:
        if v not in ("oracle", "classifier"):
            raise ValueError(f"monitor must be 'oracle' or 'classifier', got {v!r}")
        return v

    @field_validator("policy")
    @classmethod
    def validate_policy(cls, v: str) -> str:
        if v not in ("adaptive-lookup", "adaptive-regression", "fixed"):
            raise ValueError(f"unknown slicing policy {v!r}")
        return v

    @model_validator(mode="after")
    def check_inputs(self) -> "RunConfig":
        """Referenced inputs must exist before a run starts."""
        for name in ("materials", "dataset"):
            path = getattr(self, name)
            if path is not None and not path.is_file():
                raise ValueError(f"{name} file not found: {path}")
        if self.models is not None and not self.models.is_dir():
            raise ValueError(f"models directory not found: {self.models}")
        return self

    def digest(self) -> str:
        """Digest of everything that can change results.

        The output location and worker count are left out, so the same run
        written elsewhere or with more workers has the same digest.
        """
        from src.tracking import config_digest

        return config_digest(self.model_dump(mode="json", exclude={"output", "jobs"}))


def load_run_config(path: Optional[Path] = None, **overrides) -> RunConfig:
    """
    Build a run configuration from a JSON file plus explicit overrides.

    Overrides that are None are ignored, so unset CLI flags keep the file
    value.

    Raises:
        ConfigError: Unreadable file or invalid values
    """
    data: dict = {}
    if path is not None:
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
