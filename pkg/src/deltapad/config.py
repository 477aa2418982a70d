"""Configuration bundle for the device, renderer, and service.

Defaults match the reference hardware build. A JSON file can override any
numeric group (geometry, workspace, layout, render, servo, pad) field by
field, and DELTAPAD_* environment variables override the service settings.
"""

from dataclasses import dataclass, field, replace, fields
import json
import os

from .geometry import DeltaGeometry, WorkspaceSpec
from .patterns import PatternLayout
from .protocol import ServoCalibration
from .simulator import FingerPadModel
from .trajectory import RenderConfig


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8431
    data_dir: str = "./sessions"
    backend: str = "sim"  # "sim" or "serial:<path>"
    realtime: bool = False


@dataclass(frozen=True)
class AppConfig:
    geometry: DeltaGeometry = field(default_factory=DeltaGeometry)
    workspace: WorkspaceSpec = field(default_factory=WorkspaceSpec)
    layout: PatternLayout = field(default_factory=PatternLayout)
    render: RenderConfig = field(default_factory=RenderConfig)
    servo: ServoCalibration = field(default_factory=ServoCalibration)
    pad: FingerPadModel = field(default_factory=FingerPadModel)
    service: ServiceConfig = field(default_factory=ServiceConfig)


_GROUPS = {
    "geometry": DeltaGeometry,
    "workspace": WorkspaceSpec,
    "layout": PatternLayout,
    "render": RenderConfig,
    "servo": ServoCalibration,
    "pad": FingerPadModel,
    "service": ServiceConfig,
}


def _override(obj, data: dict, group: str):
    known = {f.name for f in fields(obj)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {group} fields: {sorted(unknown)}")
    coerced = {}
    for name, value in data.items():
        if isinstance(value, list):
            value = tuple(value)
        coerced[name] = value
    return replace(obj, **coerced)


def load_config(path=None, env=None) -> AppConfig:
    """Build an AppConfig from defaults, an optional JSON file, then env.

    Environment variables recognized: DELTAPAD_HOST, DELTAPAD_PORT,
    DELTAPAD_DATA_DIR, DELTAPAD_REALTIME (1/true/yes).
    """
    if env is None:
        env = os.environ
    cfg = AppConfig()
    if path is not None:
        with open(path) as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(doc) - set(_GROUPS)
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        updates = {}
        for group in _GROUPS:
            if group in doc:
                updates[group] = _override(getattr(cfg, group), doc[group], group)
        cfg = replace(cfg, **updates)

    svc = cfg.service
    if "DELTAPAD_HOST" in env:
        svc = replace(svc, host=env["DELTAPAD_HOST"])
    if "DELTAPAD_PORT" in env:
        svc = replace(svc, port=int(env["DELTAPAD_PORT"]))
    if "DELTAPAD_DATA_DIR" in env:
        svc = replace(svc, data_dir=env["DELTAPAD_DATA_DIR"])
    if "DELTAPAD_BACKEND" in env:
        svc = replace(svc, backend=env["DELTAPAD_BACKEND"])
    if "DELTAPAD_REALTIME" in env:
        svc = replace(svc, realtime=env["DELTAPAD_REALTIME"].lower()
                      in ("1", "true", "yes"))
    return replace(cfg, service=svc)
