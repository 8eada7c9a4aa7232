"""Run configuration: flat `key = value` text with section headers,
overridable by environment variables and command-line settings.

Precedence, lowest to highest: file, environment (RETOKSYNC_SECTION_KEY),
explicit `--set section.key=value` overrides.  The fully resolved
configuration is echoed into every report header so a run can be
reproduced from its output alone.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from . import prf
from .bits import parse_hex_key
from .core import RunParams
from .errors import ConfigError
from .providers import ProviderConfig, make_provider
from .tokenizer import TokenizerProfile, load_profile

ENV_PREFIX = "RETOKSYNC_"

_DEFAULTS = {
    ("provider", "kind"): "prf-toy",
    ("provider", "seed"): "7",
    ("provider", "k"): "8",
    ("provider", "precision"): "30",
    ("provider", "temperature"): "1.2",
    ("provider", "order"): "1",
    ("run", "t"): "40",
    ("run", "skip_x"): "true",
    ("run", "buffering"): "true",
    ("run", "anchor_deferral"): "true",
    ("run", "payload_format"): "bits",
    ("run", "context"): "",
    ("session", "group_size"): "5",
    ("session", "sample_count"): "25",
    ("session", "sample_length"): "40",
    ("session", "aux_k"): "8",
    ("session", "aux_context"): "",
    ("session", "seed"): "0",
    ("eval", "runs"): "100",
    ("eval", "seed"): "0",
}

_BOOLEANS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_surfaces(text: str) -> list[str]:
    """Comma-separated token surfaces.  Surrounding whitespace is
    trimmed unless the surface is quoted, which is how leading-space
    tokens like ' cat' are written."""
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if len(piece) >= 2 and piece[0] == piece[-1] and piece[0] in "'\"":
            piece = piece[1:-1]
        if piece:
            out.append(piece)
    return out


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path=None, environ=None, overrides=()) -> "RunConfig":
        values = dict(_DEFAULTS)
        if path is not None:
            parser = configparser.ConfigParser()
            read = parser.read(path, encoding="utf-8")
            if not read:
                raise ConfigError(f"cannot read config file {path}")
            for section in parser.sections():
                for key, value in parser.items(section):
                    values[(section.lower(), key.lower())] = value
        environ = os.environ if environ is None else environ
        for name, value in environ.items():
            if not name.startswith(ENV_PREFIX):
                continue
            rest = name[len(ENV_PREFIX):].lower()
            section, _, key = rest.partition("_")
            if key:
                values[(section, key)] = value
        for item in overrides:
            target, sep, value = item.partition("=")
            if not sep or "." not in target:
                raise ConfigError(f"override {item!r} is not section.key=value")
            section, _, key = target.partition(".")
            values[(section.lower(), key.lower())] = value
        return cls(values)

    # typed accessors -------------------------------------------------
    def get(self, section, key, default=None):
        return self.values.get((section, key), default)

    def require(self, section, key) -> str:
        value = self.get(section, key)
        if value is None or value == "":
            raise ConfigError(f"missing required config value [{section}] {key}")
        return value

    def get_int(self, section, key):
        try:
            return int(self.require(section, key))
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be an integer")

    def get_float(self, section, key):
        try:
            return float(self.require(section, key))
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a number")

    def get_bool(self, section, key):
        text = self.require(section, key).lower()
        if text not in _BOOLEANS:
            raise ConfigError(f"[{section}] {key} must be a boolean")
        return _BOOLEANS[text]

    # builders ---------------------------------------------------------
    def profile(self) -> TokenizerProfile:
        return load_profile(self.require("tokenizer", "vocab"), self.require("tokenizer", "merges"))

    def provider_config(self, profile: TokenizerProfile, k=None) -> ProviderConfig:
        kind = self.require("provider", "kind")
        slice_ids = ()
        if kind == "prf-toy":
            surfaces = _parse_surfaces(self.require("provider", "slice"))
            lookup = {bs: tid for tid, bs in enumerate(profile.token_bytes)}
            missing = [s for s in surfaces if s.encode() not in lookup]
            if missing:
                raise ConfigError(f"slice surfaces not in vocabulary: {missing}")
            slice_ids = tuple(lookup[s.encode()] for s in surfaces)
        train_text = ""
        if kind == "ngram":
            with open(self.require("provider", "train"), encoding="utf-8") as fh:
                train_text = fh.read()
        return ProviderConfig(
            kind=kind,
            seed=self.get_int("provider", "seed"),
            k=k if k is not None else self.get_int("provider", "k"),
            precision=self.get_int("provider", "precision"),
            temperature=self.get_float("provider", "temperature"),
            vocab_ids=slice_ids,
            order=self.get_int("provider", "order"),
            train_text=train_text,
            endpoint=self.get("provider", "endpoint", ""),
        )

    def key(self) -> bytes:
        try:
            return parse_hex_key(self.require("run", "key"))
        except ValueError as exc:
            raise ConfigError(str(exc))

    def params(self, profile=None, k=None, key=None, **switches) -> RunParams:
        profile = profile if profile is not None else self.profile()
        cfg = self.provider_config(profile, k=k)
        provider = make_provider(cfg, profile)
        flags = dict(
            skip_x=self.get_bool("run", "skip_x"),
            buffering=self.get_bool("run", "buffering"),
            anchor_deferral=self.get_bool("run", "anchor_deferral"),
        )
        flags.update(switches)
        return RunParams(
            profile=profile,
            provider=provider,
            key=key if key is not None else self.key(),
            k=cfg.k,
            precision=cfg.precision,
            **flags,
        )

    def context_ids(self, profile: TokenizerProfile, section="run", key="context"):
        text = self.get(section, key, "") or ""
        return tuple(profile.encode(text))

    def echo(self) -> list[str]:
        """Resolved configuration, one sorted line per value, for report
        headers; the key is redacted to its length."""
        lines = [f"prf = {prf.PRF_NAME}"]
        for (section, key), value in sorted(self.values.items()):
            if key == "key":
                value = f"<{len(value)} hex chars>"
            lines.append(f"{section}.{key} = {value}")
        return lines
