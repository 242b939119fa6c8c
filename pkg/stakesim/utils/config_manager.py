"""
Configuration Manager

This module handles two kinds of configuration:

- application settings loaded from defaults, an optional stakesim.yaml
  file and STAKESIM_* environment variables (ConfigManager);
- scenario documents describing one simulation (ScenarioConfig), parsed
  from YAML or JSON, validated into a full list of violations and
  emitted back to plain dictionaries.
"""

import copy
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .exceptions import ConfigError
from .validators import (
    find_duplicates,
    validate_hash_width,
    validate_non_negative_int,
    validate_party_id,
    validate_probability,
    validate_seed,
)

SCHEMA_VERSION = 1

TREE_IMPLS = ("reference", "indexed")
STRATEGIES = ("noop", "withhold", "equivocate", "split", "forge")
SCHEDULER_POLICIES = ("fixed", "random", "adversarial")
TX_SELECTORS = ("empty", "slot-tagged")
LOTTERY_TYPES = ("bernoulli", "scripted")

SEED_ENV_VAR = "STAKESIM_SEED"


def derive_seed(master: int, label: str) -> int:
    """
    Derive an independent 64-bit seed stream from a master seed.

    Args:
        master: Master seed
        label: Stream label (lottery, scheduler, strategy, batch-N, ...)

    Returns:
        Derived seed
    """
    digest = hashlib.blake2b(f"{master}:{label}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class PartyConfig:
    """One entry of the party enumeration."""
    id: int
    honest: bool = True
    q: Optional[float] = None
    stake: Optional[float] = None
    tree_impl: Optional[str] = None


@dataclass
class LotteryConfig:
    """Lottery model selection."""
    type: str = "bernoulli"
    active_slot_coefficient: float = 0.05
    wins: List[Tuple[int, int]] = field(default_factory=list)


@dataclass
class AdversaryConfig:
    """Adversary strategy and its parameters."""
    strategy: str = "noop"
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class SeedConfig:
    """
    The three seed streams.

    Streams left unset are derived from the master seed, so changing the
    master seed changes every unset stream at once.
    """
    master: int = 0
    lottery: Optional[int] = None
    scheduler: Optional[int] = None
    strategy: Optional[int] = None

    def resolved(self) -> Dict[str, int]:
        """Return concrete seeds for every stream."""
        return {
            name: value if value is not None else derive_seed(self.master, name)
            for name, value in (
                ("lottery", self.lottery),
                ("scheduler", self.scheduler),
                ("strategy", self.strategy),
            )
        }


@dataclass
class CheckConfig:
    """Checker parameters and slack constants."""
    k: List[int] = field(default_factory=lambda: [10, 20, 40])
    stride: int = 1
    growth_lo_offset: int = 1
    growth_hi_offset: int = 2
    quality_slack: int = 2
    cp_start_offset: int = 1
    cp_super_tail: int = 2
    cp_adv_tail: int = 1
    cp_inclusive: bool = True
    monitor_knowledge: bool = True


@dataclass
class ScenarioConfig:
    """A complete, validated scenario."""
    horizon: int
    parties: List[PartyConfig]
    name: str = "scenario"
    version: int = SCHEMA_VERSION
    hash_width: int = 64
    lottery: LotteryConfig = field(default_factory=LotteryConfig)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    tx_selector: str = "empty"
    scheduler: str = "fixed"
    filter_on_receive: bool = False
    default_tree_impl: str = "indexed"
    seeds: SeedConfig = field(default_factory=SeedConfig)
    checks: CheckConfig = field(default_factory=CheckConfig)

    @property
    def party_ids(self) -> List[int]:
        return [p.id for p in self.parties]

    @property
    def honest_map(self) -> Dict[int, bool]:
        return {p.id: p.honest for p in self.parties}

    @property
    def corrupted(self) -> List[int]:
        return [p.id for p in self.parties if not p.honest]

    def tree_impl_for(self, party_id: int) -> str:
        for party in self.parties:
            if party.id == party_id:
                return party.tree_impl or self.default_tree_impl
        return self.default_tree_impl

    def with_master_seed(self, master: int, reset_streams: bool = False) -> "ScenarioConfig":
        """
        Return a copy with a new master seed.

        Args:
            master: New master seed
            reset_streams: Also clear explicit stream seeds so they derive
                from the new master

        Returns:
            New ScenarioConfig
        """
        seeds = replace(self.seeds, master=master)
        if reset_streams:
            seeds = SeedConfig(master=master)
        return replace(copy.deepcopy(self), seeds=seeds)


def _issue_list_for_parties(raw_parties: Any, lottery_type: str) -> List[str]:
    issues: List[str] = []
    if not isinstance(raw_parties, list) or not raw_parties:
        return ["Field 'parties' must be a non-empty list"]

    ids = []
    for index, raw in enumerate(raw_parties):
        if not isinstance(raw, dict):
            issues.append(f"Party entry {index} must be a mapping")
            continue
        party_id = raw.get("id")
        if party_id is None:
            issues.append(f"Party entry {index} is missing field 'id'")
            continue
        if not validate_party_id(party_id):
            issues.append(f"Party entry {index}: id {party_id!r} must be an integer >= 1")
            continue
        ids.append(party_id)

        if not isinstance(raw.get("honest", True), bool):
            issues.append(f"Party {party_id}: field 'honest' must be a boolean")

        q, stake = raw.get("q"), raw.get("stake")
        if q is not None and not validate_probability(q):
            issues.append(f"Party {party_id}: probability q={q} out of range [0, 1]")
        if stake is not None and (
            isinstance(stake, bool) or not isinstance(stake, (int, float)) or stake < 0
        ):
            issues.append(f"Party {party_id}: stake must be a non-negative number")
        if lottery_type == "bernoulli":
            if q is None and stake is None:
                issues.append(f"Party {party_id}: bernoulli lottery needs 'q' or 'stake'")
            elif q is not None and stake is not None:
                issues.append(f"Party {party_id}: give either 'q' or 'stake', not both")

        tree_impl = raw.get("tree_impl")
        if tree_impl is not None and tree_impl not in TREE_IMPLS:
            issues.append(
                f"Party {party_id}: tree_impl '{tree_impl}' must be one of {', '.join(TREE_IMPLS)}"
            )

    for duplicate in find_duplicates(ids):
        issues.append(f"Duplicate party id: {duplicate}")

    honest = [
        raw for raw in raw_parties
        if isinstance(raw, dict) and raw.get("honest", True) is True
    ]
    if not honest:
        issues.append("At least one honest party is required")

    if lottery_type == "bernoulli":
        with_stake = [raw for raw in raw_parties if isinstance(raw, dict) and raw.get("stake") is not None]
        with_q = [raw for raw in raw_parties if isinstance(raw, dict) and raw.get("q") is not None]
        if with_stake and with_q:
            issues.append("Parties must all use 'q' or all use 'stake'")
        if with_stake and len(with_stake) == len(raw_parties):
            total = sum(
                raw["stake"] for raw in with_stake
                if isinstance(raw["stake"], (int, float)) and not isinstance(raw["stake"], bool)
            )
            if total <= 0:
                issues.append("Total stake must be positive")
    return issues


def validate_scenario(data: Any) -> List[str]:
    """
    Validate a raw scenario document.

    Args:
        data: Parsed YAML/JSON document

    Returns:
        List of validation issues (empty if valid)
    """
    if not isinstance(data, dict):
        return ["Scenario document must be a mapping"]

    issues: List[str] = []

    version = data.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        issues.append(f"Unsupported schema version {version!r} (expected {SCHEMA_VERSION})")

    horizon = data.get("horizon")
    if horizon is None:
        issues.append("Missing required field 'horizon'")
    elif not validate_non_negative_int(horizon) or horizon < 1:
        issues.append(f"Horizon must be an integer >= 1, got {horizon!r}")

    width = data.get("hash_width", 64)
    if not validate_hash_width(width):
        issues.append(f"hash_width must be an integer in [1, 64], got {width!r}")

    lottery = data.get("lottery", {}) or {}
    if not isinstance(lottery, dict):
        issues.append("Field 'lottery' must be a mapping")
        lottery = {}
    lottery_type = lottery.get("type", "bernoulli")
    if lottery_type not in LOTTERY_TYPES:
        issues.append(f"Lottery type '{lottery_type}' must be one of {', '.join(LOTTERY_TYPES)}")
    coefficient = lottery.get("active_slot_coefficient", 0.05)
    if not validate_probability(coefficient) or coefficient >= 1.0:
        issues.append("active_slot_coefficient must lie in [0, 1)")

    if "parties" not in data:
        issues.append("Missing required field 'parties'")
        party_ids: List[int] = []
        honest_ids: List[int] = []
    else:
        issues.extend(_issue_list_for_parties(data["parties"], lottery_type))
        raw_parties = data["parties"] if isinstance(data["parties"], list) else []
        party_ids = [
            raw["id"] for raw in raw_parties
            if isinstance(raw, dict) and validate_party_id(raw.get("id"))
        ]
        honest_ids = [
            raw["id"] for raw in raw_parties
            if isinstance(raw, dict) and validate_party_id(raw.get("id")) and raw.get("honest", True) is True
        ]

    if lottery_type == "scripted":
        wins = lottery.get("wins", [])
        if not isinstance(wins, list):
            issues.append("Scripted lottery field 'wins' must be a list of [party, slot] pairs")
        else:
            for index, entry in enumerate(wins):
                if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                    issues.append(f"Scripted win {index} must be a [party, slot] pair")
                    continue
                party, slot = entry
                if party not in party_ids:
                    issues.append(f"Scripted win {index} names unknown party {party!r}")
                if not validate_non_negative_int(slot) or slot < 1:
                    issues.append(f"Scripted win {index}: slot {slot!r} must be >= 1 (slot 0 is genesis)")

    adversary = data.get("adversary", {}) or {}
    if not isinstance(adversary, dict):
        issues.append("Field 'adversary' must be a mapping")
        adversary = {}
    strategy = adversary.get("strategy", "noop")
    params = adversary.get("params", {}) or {}
    if strategy not in STRATEGIES:
        issues.append(f"Adversary strategy '{strategy}' must be one of {', '.join(STRATEGIES)}")
    if not isinstance(params, dict):
        issues.append("Adversary params must be a mapping")
        params = {}
    for key in ("release_lead", "lookahead"):
        if key in params and not validate_non_negative_int(params[key]):
            issues.append(f"Adversary param '{key}' must be a non-negative integer")
    if "partition" in params:
        partition = params["partition"]
        if not isinstance(partition, list):
            issues.append("Adversary param 'partition' must be a list of party ids")
        else:
            for party in partition:
                if party not in honest_ids:
                    issues.append(f"Partition member {party!r} is not an honest party")

    if data.get("tx_selector", "empty") not in TX_SELECTORS:
        issues.append(f"tx_selector must be one of {', '.join(TX_SELECTORS)}")
    if data.get("scheduler", "fixed") not in SCHEDULER_POLICIES:
        issues.append(f"scheduler must be one of {', '.join(SCHEDULER_POLICIES)}")
    if not isinstance(data.get("filter_on_receive", False), bool):
        issues.append("filter_on_receive must be a boolean")
    if data.get("default_tree_impl", "indexed") not in TREE_IMPLS:
        issues.append(f"default_tree_impl must be one of {', '.join(TREE_IMPLS)}")

    seeds = data.get("seeds", {}) or {}
    if not isinstance(seeds, dict):
        issues.append("Field 'seeds' must be a mapping")
        seeds = {}
    for name in ("master", "lottery", "scheduler", "strategy"):
        value = seeds.get(name)
        if value is not None and not validate_seed(value):
            issues.append(f"Seed '{name}' must be an unsigned 64-bit integer")

    checks = data.get("checks", {}) or {}
    if not isinstance(checks, dict):
        issues.append("Field 'checks' must be a mapping")
        checks = {}
    k_values = checks.get("k", [10, 20, 40])
    if not isinstance(k_values, list) or not all(validate_non_negative_int(k) for k in k_values):
        issues.append("checks.k must be a list of non-negative integers")
    stride = checks.get("stride", 1)
    if not validate_non_negative_int(stride) or stride < 1:
        issues.append("checks.stride must be an integer >= 1")
    for key in (
        "growth_lo_offset", "growth_hi_offset", "quality_slack",
        "cp_start_offset", "cp_super_tail", "cp_adv_tail",
    ):
        if key in checks and not validate_non_negative_int(checks[key]):
            issues.append(f"checks.{key} must be a non-negative integer")
    for key in ("cp_inclusive", "monitor_knowledge"):
        if key in checks and not isinstance(checks[key], bool):
            issues.append(f"checks.{key} must be a boolean")

    return issues


def parse_config_dict(data: Any) -> ScenarioConfig:
    """
    Build a ScenarioConfig from a raw document.

    Args:
        data: Parsed YAML/JSON document

    Returns:
        Validated ScenarioConfig

    Raises:
        ConfigError: with every violation found
    """
    issues = validate_scenario(data)
    if issues:
        raise ConfigError(issues)

    lottery = data.get("lottery", {}) or {}
    adversary = data.get("adversary", {}) or {}
    seeds = data.get("seeds", {}) or {}
    checks = data.get("checks", {}) or {}

    return ScenarioConfig(
        name=str(data.get("name", "scenario")),
        version=data.get("version", SCHEMA_VERSION),
        horizon=data["horizon"],
        hash_width=data.get("hash_width", 64),
        parties=[
            PartyConfig(
                id=raw["id"],
                honest=raw.get("honest", True),
                q=float(raw["q"]) if raw.get("q") is not None else None,
                stake=float(raw["stake"]) if raw.get("stake") is not None else None,
                tree_impl=raw.get("tree_impl"),
            )
            for raw in data["parties"]
        ],
        lottery=LotteryConfig(
            type=lottery.get("type", "bernoulli"),
            active_slot_coefficient=float(lottery.get("active_slot_coefficient", 0.05)),
            wins=[(int(p), int(s)) for p, s in lottery.get("wins", [])],
        ),
        adversary=AdversaryConfig(
            strategy=adversary.get("strategy", "noop"),
            params=dict(adversary.get("params", {}) or {}),
        ),
        tx_selector=data.get("tx_selector", "empty"),
        scheduler=data.get("scheduler", "fixed"),
        filter_on_receive=data.get("filter_on_receive", False),
        default_tree_impl=data.get("default_tree_impl", "indexed"),
        seeds=SeedConfig(
            master=seeds.get("master", 0) or 0,
            lottery=seeds.get("lottery"),
            scheduler=seeds.get("scheduler"),
            strategy=seeds.get("strategy"),
        ),
        checks=CheckConfig(
            k=list(checks.get("k", [10, 20, 40])),
            stride=checks.get("stride", 1),
            growth_lo_offset=checks.get("growth_lo_offset", 1),
            growth_hi_offset=checks.get("growth_hi_offset", 2),
            quality_slack=checks.get("quality_slack", 2),
            cp_start_offset=checks.get("cp_start_offset", 1),
            cp_super_tail=checks.get("cp_super_tail", 2),
            cp_adv_tail=checks.get("cp_adv_tail", 1),
            cp_inclusive=checks.get("cp_inclusive", True),
            monitor_knowledge=checks.get("monitor_knowledge", True),
        ),
    )


def emit_config(cfg: ScenarioConfig) -> Dict[str, Any]:
    """
    Convert a ScenarioConfig to a plain, YAML/JSON-ready dictionary.

    parse_config_dict(emit_config(cfg)) == cfg for every valid cfg.
    """
    data = asdict(cfg)
    data["lottery"]["wins"] = [[p, s] for p, s in cfg.lottery.wins]
    return data


def _with_settings(data: Any, settings: "ConfigManager") -> Any:
    """Fill the keys a scenario document leaves out from the application settings."""
    if not isinstance(data, dict):
        return data
    filled = dict(data)
    filled.setdefault("hash_width", settings.get("defaults.hash_width", 64))
    filled.setdefault("default_tree_impl", settings.get("defaults.tree_impl", "indexed"))
    checks = filled.get("checks")
    if checks is None or isinstance(checks, dict):
        checks = dict(checks or {})
        checks.setdefault("k", list(settings.get("checks.k", [10, 20, 40])))
        checks.setdefault("stride", settings.get("checks.stride", 1))
        filled["checks"] = checks
    return filled


def parse_config(path: str, apply_env: bool = True) -> ScenarioConfig:
    """
    Load and validate a scenario file (YAML or JSON).

    Args:
        path: Scenario file path
        apply_env: Fill missing hash_width, default_tree_impl and checks.k/stride
            from the application settings and apply the STAKESIM_SEED override

    Returns:
        Validated ScenarioConfig

    Raises:
        ConfigError: file missing, unreadable or invalid
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError([f"Scenario file not found: {config_path}"])

    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError([f"Could not parse {config_path}: {e}"])

    if apply_env:
        data = _with_settings(data, get_config())
    cfg = parse_config_dict(data)

    if apply_env:
        override = os.getenv(SEED_ENV_VAR)
        if override is not None:
            try:
                master = int(override)
            except ValueError:
                raise ConfigError([f"{SEED_ENV_VAR} must be an integer, got {override!r}"])
            if not validate_seed(master):
                raise ConfigError([f"{SEED_ENV_VAR} must be an unsigned 64-bit integer"])
            cfg = cfg.with_master_seed(master)

    return cfg


def save_scenario(cfg: ScenarioConfig, path: str) -> str:
    """Write a scenario to YAML (or JSON when the path ends in .json)."""
    data = emit_config(cfg)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8") as f:
        if target.suffix == ".json":
            json.dump(data, f, indent=2, sort_keys=True)
        else:
            yaml.safe_dump(data, f, default_flow_style=False, sort_keys=True)
    return str(target)


class ConfigManager:
    """
    Manages application settings for stakesim.

    Loads settings from:
    1. Default values
    2. stakesim.yaml file
    3. Environment variables
    4. Command line arguments (highest priority)
    """

    def __init__(self, config_file: str = "stakesim.yaml"):
        """
        Initialize the configuration manager.

        Args:
            config_file: Path to settings file
        """
        self.config_file = Path(config_file)
        self.config = self._load_default_config()
        self._load_config_file()
        self._load_environment_variables()

    def _load_default_config(self) -> Dict[str, Any]:
        """Load default configuration values."""
        return {
            "defaults": {
                "output_directory": "runs",
                "tree_impl": "indexed",
                "hash_width": 64,
                "write_dot": True,
            },
            "checks": {
                "k": [10, 20, 40],
                "stride": 1,
            },
            "bounds": {
                "delta": 0.1,
                "delta_prime": 0.1,
                "k_range": "10:50",
                "sl_now": 1000,
                "monte_carlo_samples": 0,
            },
            "conformance": {
                "n_blocks": 200,
                "oracle_limit": 25,
            },
            "batch": {
                "mode": "sequential",
                "workers": 4,
            },
            "logging": {
                "level": "INFO",
                "format": "%(message)s",
                "file": "",
                "console": True,
            },
            "ui": {
                "show_progress": True,
                "color_output": True,
                "max_chain_display": 6,
            },
        }

    def _load_config_file(self) -> None:
        """Load configuration from stakesim.yaml file."""
        if self.config_file.exists():
            try:
                with open(self.config_file, "r", encoding="utf-8") as f:
                    file_config = yaml.safe_load(f)
                    if file_config:
                        self._merge_config(self.config, file_config)
            except Exception as e:
                print(f"Warning: Could not load config file {self.config_file}: {e}")

    def _load_environment_variables(self) -> None:
        """Load configuration from environment variables."""
        env_mappings = {
            "STAKESIM_OUTPUT_DIRECTORY": ("defaults", "output_directory"),
            "STAKESIM_TREE_IMPL": ("defaults", "tree_impl"),
            "STAKESIM_HASH_WIDTH": ("defaults", "hash_width"),
            "STAKESIM_WRITE_DOT": ("defaults", "write_dot"),
            "STAKESIM_LOG_LEVEL": ("logging", "level"),
            "STAKESIM_LOG_FILE": ("logging", "file"),
            "STAKESIM_BATCH_MODE": ("batch", "mode"),
            "STAKESIM_BATCH_WORKERS": ("batch", "workers"),
            "STAKESIM_SHOW_PROGRESS": ("ui", "show_progress"),
        }

        for env_var, config_path in env_mappings.items():
            value: Any = os.getenv(env_var)
            if value is not None:
                # Convert string values to appropriate types
                if env_var.endswith("_WIDTH") or env_var.endswith("_WORKERS"):
                    try:
                        value = int(value)
                    except ValueError:
                        continue
                elif env_var.endswith("_DOT") or env_var.endswith("_PROGRESS"):
                    value = value.lower() in ("true", "1", "yes", "on")

                section, key = config_path
                if section in self.config and key in self.config[section]:
                    self.config[section][key] = value

    def _merge_config(self, base: Dict[str, Any], override: Dict[str, Any]) -> None:
        """Recursively merge configuration dictionaries."""
        for key, value in override.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                self._merge_config(base[key], value)
            else:
                base[key] = value

    def get(self, key_path: str, default: Any = None) -> Any:
        """
        Get a configuration value by dot-separated key path.

        Args:
            key_path: Dot-separated path (e.g., "bounds.delta")
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        keys = key_path.split(".")
        value: Any = self.config

        try:
            for key in keys:
                value = value[key]
            return value
        except (KeyError, TypeError):
            return default

    def get_logging(self) -> Dict[str, Any]:
        """Get logging configuration values."""
        return self.config.get("logging", {})

    def get_bounds(self) -> Dict[str, Any]:
        return self.config.get("bounds", {})

    def set(self, key_path: str, value: Any) -> None:
        """
        Set a configuration value by dot-separated key path.

        Args:
            key_path: Dot-separated path to configuration value
            value: Value to set
        """
        keys = key_path.split(".")
        config = self.config

        for key in keys[:-1]:
            if key not in config:
                config[key] = {}
            config = config[key]

        config[keys[-1]] = value

    def save_config(self, filepath: Optional[str] = None) -> None:
        """
        Save current configuration to file.

        Args:
            filepath: Optional custom filepath (defaults to self.config_file)
        """
        target = Path(filepath) if filepath is not None else self.config_file

        try:
            with open(target, "w", encoding="utf-8") as f:
                yaml.dump(self.config, f, default_flow_style=False, indent=2)
        except OSError as e:
            raise ConfigError([f"Could not save config file {target}: {e}"])

    def validate_config(self) -> List[str]:
        """
        Validate configuration values and return list of issues.

        Returns:
            List of validation issues (empty if valid)
        """
        issues = []

        if self.get("defaults.tree_impl") not in TREE_IMPLS:
            issues.append(f"defaults.tree_impl must be one of {', '.join(TREE_IMPLS)}")
        if not validate_hash_width(self.get("defaults.hash_width")):
            issues.append("defaults.hash_width must be an integer in [1, 64]")
        if self.get("batch.mode") not in ("sequential", "concurrent"):
            issues.append("batch.mode must be 'sequential' or 'concurrent'")
        workers = self.get("batch.workers")
        if not validate_non_negative_int(workers) or workers < 1:
            issues.append("batch.workers must be an integer >= 1")
        for key in ("bounds.delta", "bounds.delta_prime"):
            if not validate_probability(self.get(key)):
                issues.append(f"{key} must lie in [0, 1]")
        if not validate_non_negative_int(self.get("bounds.monte_carlo_samples")):
            issues.append("bounds.monte_carlo_samples must be a non-negative integer")
        stride = self.get("checks.stride")
        if not validate_non_negative_int(stride) or stride < 1:
            issues.append("checks.stride must be an integer >= 1")
        if self.get("logging.level", "INFO").upper() not in (
            "DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"
        ):
            issues.append("logging.level is not a valid logging level")

        return issues


# Global configuration instance
config_manager = ConfigManager()


def get_config() -> ConfigManager:
    """Get the global configuration manager instance."""
    return config_manager
