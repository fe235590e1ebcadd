"""Experiment configuration files (TOML syntax, ``.cfg`` extension).

Numbers are kept exactly as parsed; nothing is rounded before use.
"""
from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .certify import Certificate, certify_lure
from .errors import AssumptionViolation
from .plant import LurePlant, TwoTank, lqr_gain, lure_from_two_tank, make_nonlinearity
from .quantize import LogQuantizer, ZoomQuantizer, lambda0_log, lambda_zoom
from .stm import StmLogConfig, StmZoomConfig

LAMBDA_MARGIN = 1e-4


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def bundled_config(name: str) -> str:
    """Path of a config shipped with the package (e.g. ``"two_tank.cfg"``)."""
    return str(resources.files("qstc") / "configs" / name)


def _section(d, key, required=True):
    if key not in d:
        if required:
            raise ConfigError(f"missing [{key}] section")
        return {}
    if not isinstance(d[key], dict):
        raise ConfigError(f"[{key}] must be a table")
    return d[key]


def _num(sec, key, where, default=None):
    v = sec.get(key, default)
    if v is None:
        raise ConfigError(f"missing {where}.{key}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    return float(v)


def _vec(sec, key, where, default=None):
    v = sec.get(key, default)
    if v is None:
        return None
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key} must be a numeric array") from None
    return arr


@dataclass
class ExperimentConfig:
    raw: dict
    config_hash: str
    path: str = ""
    scheme: str = "log"
    x0: np.ndarray = None
    horizon: float = 6.0
    dt: float = 1e-5
    dt_pred: float = 1e-4
    output_stride: int = 100
    seed: int = 0
    out: str = "out"
    _plant: Optional[LurePlant] = field(default=None, repr=False)

    # ----------------------------------------------------------- loading
    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            data = fh.read()
        return cls.from_bytes(data, path)

    @classmethod
    def from_bytes(cls, data: bytes, path: str = "") -> "ExperimentConfig":
        try:
            raw = tomllib.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        cfg = cls(raw=raw, config_hash=hashlib.sha256(data).hexdigest()[:16], path=path)
        cfg._parse()
        return cfg

    def _parse(self):
        run = _section(self.raw, "run")
        _section(self.raw, "plant")
        _section(self.raw, "certificate")
        self.scheme = str(self.raw.get("scheme", "log"))
        if self.scheme not in ("log", "zoom"):
            raise ConfigError(f"scheme must be 'log' or 'zoom', got {self.scheme!r}")
        self.x0 = _vec(run, "x0", "run")
        if self.x0 is None:
            raise ConfigError("missing run.x0")
        self.horizon = _num(run, "horizon", "run")
        self.dt = _num(run, "dt", "run")
        self.dt_pred = _num(run, "dt_pred", "run", 1e-4)
        self.output_stride = int(run.get("output_stride", 100))
        self.seed = int(run.get("seed", 0))
        self.out = str(run.get("out", "out"))
        if not (self.horizon > 0 and self.dt > 0 and self.dt_pred > 0):
            raise ConfigError("run.horizon, run.dt and run.dt_pred must be positive")
        if self.output_stride < 1:
            raise ConfigError("run.output_stride must be at least 1")

    # ----------------------------------------------------------- building
    def plant(self) -> LurePlant:
        if self._plant is not None:
            return self._plant
        sec = self.raw["plant"]
        name = sec.get("name", "two_tank")
        R0 = _num(self.raw["certificate"], "R0", "certificate", math.inf)
        if name == "two_tank":
            tank = TwoTank(_num(sec, "a", "plant", 2.0), _num(sec, "H", "plant", 1.0))
            A = np.array([[-1.0, 1.0], [1.0, -1.0]])
            B = np.array([[1.0], [0.0]])
            K = self._gain(sec, A, B)
            p = lure_from_two_tank(tank, K, R0)
        elif name == "lure":
            A = _vec(sec, "A", "plant")
            B = _vec(sec, "B", "plant")
            if A is None or B is None:
                raise ConfigError("plant.A and plant.B are required for a Lur'e plant")
            B = B.reshape(A.shape[0], -1)
            phi_sec = sec.get("phi", {"name": "zero"})
            phi = make_nonlinearity(phi_sec.get("name", "zero"),
                                    **{k: float(v) for k, v in phi_sec.items() if k != "name"})
            p = LurePlant(A, B, self._gain(sec, A, B), _vec(sec, "xi", "plant"),
                          _vec(sec, "eta", "plant"), phi, R0)
        else:
            raise ConfigError(f"unknown plant name {name!r} (expected 'two_tank' or 'lure')")
        self._plant = p
        return p

    @staticmethod
    def _gain(sec, A, B):
        K = sec.get("K", "lqr")
        if isinstance(K, str):
            if K != "lqr":
                raise ConfigError(f"plant.K must be 'lqr' or a matrix, got {K!r}")
            return lqr_gain(A, B, _vec(sec, "Q", "plant"), _vec(sec, "R", "plant"))
        return np.asarray(K, dtype=float).reshape(B.shape[1], A.shape[0])

    def certificate(self) -> Certificate:
        sec = self.raw["certificate"]
        dec = sec.get("kappa_decimals", 2)
        return certify_lure(
            self.plant(),
            c=_num(sec, "c", "certificate"),
            d1=_num(sec, "d1", "certificate", 0.0),
            theta_cl=_vec(sec, "theta_cl", "certificate"),
            theta_op=_vec(sec, "theta_op", "certificate"),
            kappa_decimals=None if dec in (None, "none", -1) else int(dec),
            sigma0=_num(sec, "sigma0", "certificate", 1.0),
        )

    def log_setup(self, cert: Certificate):
        """Quantizer, STM config and derived constants of the logarithmic scheme.

        ``chi0 = "R"`` uses the certificate's ``R`` at full precision;
        ``lambda = "auto"`` uses ``lambda0 + LAMBDA_MARGIN``.
        """
        sec = _section(self.raw, "log")
        rho = _num(sec, "rho", "log")
        chi0 = sec.get("chi0", "R")
        chi0 = cert.R / cert.L_cl2 if chi0 == "R" else _num(sec, "chi0", "log")
        quant = LogQuantizer(rho, chi0, cert.theta_cl, cert)
        lam0 = lambda0_log(quant, cert)
        lam = sec.get("lambda", "auto")
        lam = lam0 + LAMBDA_MARGIN if lam == "auto" else _num(sec, "lambda", "log")
        S = sec.get("S")
        stm = StmLogConfig(_num(sec, "sigma", "log"), _num(sec, "tau_max", "log"), lam,
                           tuple(S) if S is not None else None)
        consts = stm.validate(rho, cert, lam0)
        consts["lambda0"] = lam0
        return quant, stm, consts

    def zoom_setup(self, cert: Certificate):
        """Quantizer, STM config and derived constants of the zooming scheme.

        ``lambda`` is always computed from ``mu0 (M + Gamma Delta) / R`` at full precision.
        """
        sec = _section(self.raw, "zoom")
        quant = ZoomQuantizer(_num(sec, "M", "zoom"), _num(sec, "Delta", "zoom"),
                              _num(sec, "mu0", "zoom", 1.0), cert.theta_op, cert)
        lam = lambda_zoom(quant, cert)
        stm = StmZoomConfig(_num(sec, "sigma", "zoom"), _num(sec, "h", "zoom"),
                            int(_num(sec, "ell_max", "zoom")), lam)
        consts = stm.validate(quant.M, quant.Delta, cert)
        consts["lambda"] = lam
        return quant, stm, consts

    def check_start(self, cert: Certificate, scheme: Optional[str] = None):
        scheme = scheme or self.scheme
        nx = cert.cl_norm(self.x0)
        if scheme == "log":
            bound = cert.R / cert.L_cl
        else:
            sec = _section(self.raw, "zoom")
            bound = _num(sec, "M", "zoom") * _num(sec, "mu0", "zoom", 1.0)
        if not nx < bound:
            raise AssumptionViolation(
                "initial_ball", f"||x0||_cl = {nx!r} must be below {bound!r}", bound - nx)

    def region_grid(self) -> np.ndarray:
        sec = self.raw.get("region", {})
        return np.linspace(float(sec.get("rho_start", 0.5)), float(sec.get("rho_stop", 1.0)),
                           int(sec.get("rho_num", 501)))

    def out_dir(self, override: Optional[str] = None) -> str:
        return override or self.out
