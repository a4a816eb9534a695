"""
Run manifests: the flat ``key=value`` record of everything a completion run used.

Example::

    artifact_version=1
    method=lrfmtc
    root_seed=0
    path.input=y.dt3
    solver.alpha=30.0
    halrtc.alphas=0.3333333333333333,0.3333333333333333,0.3333333333333333
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from pydantic import ValidationError

from config import settings
from core.errors import TensorArgumentError, TensorFormatError
from solvers.halrtc import HalrtcConfig
from solvers.lrfmtc import SolverConfig
from storage.tensor_file import atomic_write
from utils.logger import get_component_logger

logger = get_component_logger('storage', 'manifest')

METHODS = ('lrfmtc', 'halrtc')


def _format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ','.join(_format_value(v) for v in value)
    return str(value)


def _flatten(prefix, model):
    return {f"{prefix}.{name}": _format_value(value) for name, value in model.model_dump().items()}


def _section(values, prefix):
    return {key[len(prefix) + 1:]: value for key, value in values.items() if key.startswith(prefix + '.')}


@dataclass
class RunManifest:
    """Solver settings, seeds and file paths of one run."""

    method: str
    solver: SolverConfig = field(default_factory=SolverConfig)
    halrtc: HalrtcConfig = field(default_factory=HalrtcConfig)
    root_seed: int = 0
    artifact_version: str = settings.ARTIFACT_VERSION
    paths: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise TensorArgumentError(f"method must be one of {METHODS}, got {self.method!r}")

    @classmethod
    def from_configs(cls, method, solver=None, halrtc=None, root_seed: Optional[int] = None, **paths):
        solver = solver or SolverConfig()
        return cls(
            method=method,
            solver=solver,
            halrtc=halrtc or HalrtcConfig(),
            root_seed=solver.seed if root_seed is None else int(root_seed),
            paths={name: str(p) for name, p in paths.items() if p is not None}
        )

    def solver_config(self) -> SolverConfig:
        return self.solver

    def halrtc_config(self) -> HalrtcConfig:
        return self.halrtc

    def to_text(self):
        lines = [
            f"artifact_version={self.artifact_version}",
            f"method={self.method}",
            f"root_seed={self.root_seed}",
        ]
        lines += [f"path.{name}={value}" for name, value in sorted(self.paths.items())]
        for prefix, model in (('solver', self.solver), ('halrtc', self.halrtc)):
            lines += [f"{key}={value}" for key, value in _flatten(prefix, model).items()]
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text, source="<manifest>"):
        values = {}
        for line_no, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            key, sep, value = line.partition('=')
            if not sep or not key.strip():
                raise TensorFormatError(f"{source}, line {line_no}: expected key=value, got {line!r}")
            key = key.strip()
            if key in values:
                raise TensorFormatError(f"{source}, line {line_no}: duplicate key {key!r}")
            values[key] = value.strip()

        known = {'artifact_version', 'method', 'root_seed'}
        unknown = [k for k in values if k not in known and not k.startswith(('path.', 'solver.', 'halrtc.'))]
        if unknown:
            raise TensorFormatError(f"{source}: unknown keys {unknown}")
        if 'method' not in values:
            raise TensorFormatError(f"{source}: missing key 'method'")

        halrtc_values = _section(values, 'halrtc')
        if 'alphas' in halrtc_values:
            halrtc_values['alphas'] = tuple(v for v in halrtc_values['alphas'].split(','))
        try:
            solver = SolverConfig.model_validate(_section(values, 'solver'))
            halrtc = HalrtcConfig.model_validate(halrtc_values)
            root_seed = int(values.get('root_seed', solver.seed))
        except (ValidationError, ValueError) as e:
            raise TensorFormatError(f"{source}: invalid setting ({e})")

        version = values.get('artifact_version', settings.ARTIFACT_VERSION)
        if version != settings.ARTIFACT_VERSION:
            logger.warning(
                f"{source} was written by artifact version {version}, "
                f"this build writes {settings.ARTIFACT_VERSION}"
            )
        return cls(
            method=values['method'], solver=solver, halrtc=halrtc, root_seed=root_seed,
            artifact_version=version, paths=_section(values, 'path')
        )

    def save(self, path):
        atomic_write(path, self.to_text())
        logger.debug(f"Saved run manifest to {path}")

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_text(path.read_text(encoding='utf-8'), source=str(path))
