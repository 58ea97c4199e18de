"""
Layered run settings
defaults < --config file < environment (LPPD_<SECTION>__<KEY>, .env honoured) < --set section.key=value
"""
import configparser
import os
from copy import deepcopy
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple, Union

from dotenv import load_dotenv
from loguru import logger

from ..decomposition.recurrence import DecompConfig
from ..decomposition.trainer import FitConfig
from ..errors import UsageError
from ..inference.peaks import InferenceConfig
from ..losses.combined import LossConfig
from ..optim.pixel_fit import PixelFitConfig
from ..synth.scene import OverlapParams
from ..synth.tuples import TupleSamplingConfig

ENV_PREFIX = "LPPD_"

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "run": {
        "seed": 0,
        "threads": 1,
    },
    "synth": {
        "width": 64,
        "height": 64,
        "focal": 64.0,
        "z_front": 1.5,
        "z_rear": 2.5,
        "background_near": 4.0,
        "background_far": 5.0,
        "background_split": 48,
        "front_rect": "8,32,8,40",
        "rear_rect": "20,44,24,56",
        "feature_dim": 16,
        "noise_sigma": 0.0,
        "scene_file": "",
        "pairs": 1000,
        "triplets": 1000,
        "quadruplets": 1000,
        "mixed_fraction": 0.5,
        "same_layers": "1,3,5",
        "eps_sep_fraction": 0.01,
    },
    "loss": {
        "lambda_int": 1.0,
        "lambda_cov": 0.1,
        "lambda_gm": 1.0,
        "gm_scale_weights": "1.2,1.0,1.0,1.0",
        "gm_num_scales": 4,
        "gm_weight_mode": "per_layer",
        "scale_clip_lo": 1.0,
        "scale_clip_hi": 10.0,
        "silog_variance_weight": 0.85,
    },
    "fit": {
        "steps": 2000,
        "lr": 5e-3,
        "beta1": 0.9,
        "beta2": 0.99,
        "weight_decay": 0.01,
        "eps": 1e-8,
        "grad_clip": 0.1,
        "lr_power": 0.9,
        "objective": "max",
        "component_dim": 8,
        "n_iterations": 4,
        "per_iteration": False,
        "init_scale": 1.0,
        "center_init": "random",
        "refit_centers": False,
        "center_link": "identity",
        "detach_eta": False,
        "allow_degenerate": False,
        "log_every": 250,
    },
    "pixel_fit": {
        "n_components": 4,
        "steps": 500,
        "lr": 0.05,
        "init_scale_lo": 1.0,
        "init_scale_hi": 3.0,
        "init_center_margin": 1.0,
        "lambda_int": 1.0,
        "lambda_cov": 0.1,
        "objective": "max",
    },
    "inference": {
        "suppression_radius": 0.02,
        "min_peak_intensity": 0.05,
        "suppress_after_denormalize": False,
    },
    "eval": {
        "align": True,
        "per_layer_alignment": False,
    },
    "plot": {
        "grid_step": 0.01,
        "grid_pad": 5.0,
    },
    "experiment": {
        "lambda_gm": 0.0,
        "quadruplets": 10000,
        "same_layers": "1",
        "per_iteration": True,
        "center_init": "spread",
        "refit_centers": True,
    },
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(default: Any, raw: Any, where: str) -> Any:
    if not isinstance(raw, str):
        return type(default)(raw)
    text = raw.strip()
    try:
        if isinstance(default, bool):
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError as e:
        raise UsageError(f"Bad value for {where}: {e}") from e
    return text


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


class Settings:
    """
    Typed configuration sections with provenance-friendly dumping

    Features:
    - Values coerced to the type of their default
    - Unknown sections/keys raise UsageError
    - Builders for every library config dataclass
    """

    def __init__(self):
        self._values: Dict[str, Dict[str, Any]] = deepcopy(DEFAULTS)

    # -- layering --------------------------------------------------------

    def set(self, section: str, key: str, raw: Any, source: str = "override") -> None:
        section, key = section.strip().lower(), key.strip().lower()
        if section not in self._values:
            raise UsageError(f"Unknown config section '{section}' ({source})")
        if key not in self._values[section]:
            raise UsageError(f"Unknown config key '{section}.{key}' ({source})")
        self._values[section][key] = _coerce(DEFAULTS[section][key], raw, f"{section}.{key}")

    def get(self, section: str, key: str) -> Any:
        return self._values[section][key]

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self._values[name])

    def load_file(self, path: Union[str, Path]) -> None:
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"Config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as e:
            raise UsageError(f"Cannot parse config file {path}: {e}") from e
        for section in parser.sections():
            for key, value in parser.items(section):
                self.set(section, key, value, source=str(path))
        logger.info(f"📥 Loaded config {path}")

    def apply_env(self, environ: Optional[Mapping[str, str]] = None, dotenv: bool = True) -> None:
        """Apply LPPD_<SECTION>__<KEY> variables (after loading .env when dotenv is set)"""
        if environ is None:
            if dotenv:
                load_dotenv(override=False)
            environ = os.environ
        for name, value in environ.items():
            if not name.startswith(ENV_PREFIX):
                continue
            body = name[len(ENV_PREFIX):]
            if "__" not in body:
                raise UsageError(f"Environment variable {name} must look like {ENV_PREFIX}<SECTION>__<KEY>")
            section, key = body.split("__", 1)
            self.set(section, key, value, source=f"env {name}")

    def apply_overrides(self, overrides: Iterable[str]) -> None:
        for item in overrides or ():
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise UsageError(f"--set expects section.key=value, got '{item}'")
            lhs, value = item.split("=", 1)
            section, key = lhs.split(".", 1)
            self.set(section, key, value, source="--set")

    @classmethod
    def resolve(cls, config_path: Optional[str] = None, overrides: Iterable[str] = (),
                environ: Optional[Mapping[str, str]] = None) -> "Settings":
        settings = cls()
        if config_path:
            settings.load_file(config_path)
        settings.apply_env(environ)
        settings.apply_overrides(overrides)
        return settings

    def write(self, path: Union[str, Path]) -> Path:
        """Echo the effective configuration"""
        parser = configparser.ConfigParser()
        for section, values in self._values.items():
            parser[section] = {k: (str(v).lower() if isinstance(v, bool) else repr(v) if isinstance(v, float)
                                   else str(v)) for k, v in values.items()}
        path = Path(path)
        with open(path, "w") as f:
            parser.write(f)
        return path

    # -- builders --------------------------------------------------------

    @property
    def seed(self) -> int:
        return self.get("run", "seed")

    @property
    def threads(self) -> int:
        return self.get("run", "threads")

    def loss_config(self) -> LossConfig:
        s = self.section("loss")
        return LossConfig(s["lambda_int"], s["lambda_cov"], s["lambda_gm"], _floats(s["gm_scale_weights"]),
                          s["gm_num_scales"], s["gm_weight_mode"], s["scale_clip_lo"], s["scale_clip_hi"],
                          silog_variance_weight=s["silog_variance_weight"])

    def decomp_config(self) -> DecompConfig:
        s, loss = self.section("fit"), self.section("loss")
        return DecompConfig(s["center_link"], s["detach_eta"], s["allow_degenerate"],
                            loss["scale_clip_lo"], loss["scale_clip_hi"])

    def fit_config(self) -> FitConfig:
        s = self.section("fit")
        return FitConfig(steps=s["steps"], lr=s["lr"], betas=(s["beta1"], s["beta2"]),
                         weight_decay=s["weight_decay"], eps=s["eps"], grad_clip=s["grad_clip"],
                         lr_power=s["lr_power"], objective=s["objective"], component_dim=s["component_dim"],
                         n_iterations=s["n_iterations"], per_iteration=s["per_iteration"],
                         init_scale=s["init_scale"], center_init=s["center_init"],
                         refit_centers=s["refit_centers"], seed=self.seed, log_every=s["log_every"])

    def pixel_fit_config(self) -> PixelFitConfig:
        s, loss = self.section("pixel_fit"), self.section("loss")
        return PixelFitConfig(n_components=s["n_components"], steps=s["steps"], lr=s["lr"],
                              init_scale_range=(s["init_scale_lo"], s["init_scale_hi"]),
                              init_center_margin=s["init_center_margin"], lambda_int=s["lambda_int"],
                              lambda_cov=s["lambda_cov"],
                              scale_clip=(loss["scale_clip_lo"], loss["scale_clip_hi"]),
                              objective=s["objective"], seed=self.seed)

    def inference_config(self) -> InferenceConfig:
        s = self.section("inference")
        return InferenceConfig(s["suppression_radius"], s["min_peak_intensity"],
                               s["suppress_after_denormalize"], self.threads)

    def overlap_params(self) -> OverlapParams:
        s = self.section("synth")
        return OverlapParams(width=s["width"], height=s["height"], focal=s["focal"],
                             z_front=s["z_front"], z_rear=s["z_rear"],
                             background_depths=(s["background_near"], s["background_far"]),
                             background_split=s["background_split"],
                             front_rect=_ints(s["front_rect"]), rear_rect=_ints(s["rear_rect"]),
                             feature_dim=s["feature_dim"], feature_seed=self.seed)

    def tuple_config(self) -> TupleSamplingConfig:
        s = self.section("synth")
        counts = {2: s["pairs"], 3: s["triplets"], 4: s["quadruplets"]}
        return TupleSamplingConfig(counts={k: v for k, v in counts.items() if v > 0},
                                   mixed_fraction=s["mixed_fraction"], same_layers=_ints(s["same_layers"]),
                                   eps_sep_fraction=s["eps_sep_fraction"], seed=self.seed)

    def experiment_loss_config(self) -> LossConfig:
        """Loss settings with the experiment's own gradient-matching weight"""
        return replace(self.loss_config(), lambda_gm=self.get("experiment", "lambda_gm"))

    def experiment_fit_config(self) -> FitConfig:
        """Fit settings with the experiment's predictor layout, center init and refit"""
        s = self.section("experiment")
        return replace(self.fit_config(), per_iteration=s["per_iteration"], center_init=s["center_init"],
                       refit_centers=s["refit_centers"])

    def experiment_tuple_config(self) -> TupleSamplingConfig:
        s = self.section("experiment")
        return replace(self.tuple_config(), counts={4: s["quadruplets"]}, same_layers=_ints(s["same_layers"]))
