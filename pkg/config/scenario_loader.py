"""
Scenario file loader.
Parses the scenario YAML with line tracking and turns it into validated domain objects.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Type, Union

import yaml
from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from config.settings import get_config
from core.exceptions import ConfigurationError, FileSystemError, ValidationError
from core.logging_system import get_logger
from models.domain_models import (
    ATMOSPHERE_FIELDS, SEASON_ORDER, AntennaMetadata, AtmosphericState, AttenuationCoefficients, ChannelModelParams,
    FrequencyCoefficients, MultipathSettings, ScenarioConfig, Season, SeasonProfile,
    SweepSettings, ValidationBounds, ValidationMode
)

logger = get_logger(__name__)

SUPPORTED_VERSIONS = (1,)

_TOP_LEVEL_KEYS = {
    "version", "validation", "bounds", "seasons", "attenuation", "channel", "multipath", "sweep", "antenna"
}
_GEOMETRY_KEYS = {"base_station_height", "user_height", "tx_power"}

class LineDict(dict):
    """A mapping that remembers the source line of each key."""

    def __init__(self, *args, lines: Dict[Any, int] = None, line: Optional[int] = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.lines = lines or {}
        self.line = line

    def line_of(self, key: Any) -> Optional[int]:
        return self.lines.get(key, self.line)

class _LineLoader(yaml.SafeLoader):
    pass

def _construct_mapping(loader: _LineLoader, node: yaml.MappingNode, deep: bool = False) -> LineDict:
    loader.flatten_mapping(node)
    mapping, lines = {}, {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        line = key_node.start_mark.line + 1
        if key in mapping:
            raise ConfigurationError(str(key), "duplicate key", line=line)
        mapping[key] = loader.construct_object(value_node, deep=True)
        lines[key] = line
    return LineDict(mapping, lines=lines, line=node.start_mark.line + 1)

_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)

def parse_yaml(text: str, source: str = "<scenario>") -> Any:
    """Parse YAML text into line-tracking mappings."""
    try:
        return yaml.load(text, Loader=_LineLoader)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise ConfigurationError(source, f"YAML syntax error: {e.problem}", line=line) from e
    except yaml.YAMLError as e:
        raise ConfigurationError(source, f"YAML syntax error: {e}") from e

def _require_mapping(value: Any, key: str, line: Optional[int]) -> LineDict:
    if not isinstance(value, LineDict):
        raise ConfigurationError(key, "expected a mapping", line=line)
    return value

def _reject_unknown(mapping: LineDict, allowed: Iterable[str], section: str):
    allowed = set(allowed)
    for key in mapping:
        if key not in allowed:
            raise ConfigurationError(
                f"{section}.{key}" if section else str(key),
                f"unknown key (allowed: {', '.join(sorted(allowed))})",
                line=mapping.line_of(key)
            )

def _range(value: Any, key: str, line: Optional[int]) -> tuple:
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ValidationError(key, value, "a [min, max] pair of numbers", line=line)
    low, high = float(value[0]), float(value[1])
    if low > high:
        raise ValidationError(key, value, "min > max", line=line)
    return (low, high)

def _build(model: Type[BaseModel], mapping: LineDict, section: str, **extra) -> BaseModel:
    _reject_unknown(mapping, model.model_fields.keys(), section)
    try:
        return model(**mapping, **extra)
    except PydanticValidationError as e:
        first = e.errors()[0]
        field = str(first["loc"][0]) if first["loc"] else section
        raise ValidationError(
            f"{section}.{field}" if first["loc"] else section,
            mapping.get(field, first.get("input")),
            first["msg"],
            line=mapping.line_of(field)
        ) from e

def _parse_bounds(mapping: LineDict) -> ValidationBounds:
    _reject_unknown(mapping, ATMOSPHERE_FIELDS, "bounds")
    ranges = {name: _range(value, f"bounds.{name}", mapping.line_of(name)) for name, value in mapping.items()}
    return ValidationBounds(**ranges)

def _check_bounds(
    key: str,
    span: Tuple[float, float],
    bound: Tuple[float, float],
    mode: ValidationMode,
    line: Optional[int] = None
):
    low, high = span
    if low >= bound[0] and high <= bound[1]:
        return
    value = low if low == high else [low, high]
    expected = f"within bounds [{bound[0]}, {bound[1]}]"
    if mode == ValidationMode.STRICT:
        raise ValidationError(key, value, expected, line=line)
    where = f" (line {line})" if line is not None else ""
    logger.warning(f"{key} = {value} is not {expected}{where}")

def check_state_bounds(state: AtmosphericState, scenario: ScenarioConfig):
    """
    Check an explicit weather state against the scenario's global bounds.

    Strict scenarios raise ValidationError; warn scenarios log and accept.
    """
    for field in ATMOSPHERE_FIELDS:
        value = getattr(state, field)
        _check_bounds(field, (value, value), getattr(scenario.bounds, field), scenario.validation)

def _parse_seasons(
    items: Any,
    line: Optional[int],
    bounds: ValidationBounds,
    mode: ValidationMode
) -> List[SeasonProfile]:
    if not isinstance(items, list):
        raise ConfigurationError("seasons", "expected a list of season mappings", line=line)

    known = {season.value: season for season in Season}
    profiles: Dict[Season, SeasonProfile] = {}
    for item in items:
        item = _require_mapping(item, "seasons", line)
        _reject_unknown(item, ("name",) + ATMOSPHERE_FIELDS, "seasons")
        name = item.get("name")
        if name not in known:
            raise ConfigurationError("seasons", f"unknown season {name!r} (expected one of {', '.join(known)})",
                                     line=item.line_of("name"))
        season = known[name]
        if season in profiles:
            raise ConfigurationError("seasons", f"duplicate season {name}", line=item.line_of("name"))

        ranges = {}
        for field in ATMOSPHERE_FIELDS:
            if field not in item:
                raise ConfigurationError(f"{name}.{field}", "missing range", line=item.line)
            low, high = _range(item[field], f"{name}.{field}", item.line_of(field))
            _check_bounds(f"{name}.{field}", (low, high), getattr(bounds, field), mode, item.line_of(field))
            ranges[field] = (low, high)
        profiles[season] = SeasonProfile(season=season, **ranges)

    for season in SEASON_ORDER:
        if season not in profiles:
            raise ConfigurationError("seasons", f"missing season {season.value}", line=line)

    return [profiles[season] for season in SEASON_ORDER]

def _parse_attenuation(mapping: LineDict) -> AttenuationCoefficients:
    _reject_unknown(mapping, ("reference_temperature", "interpolate", "frequencies"), "attenuation")
    entries = mapping.get("frequencies")
    if not isinstance(entries, list) or not entries:
        raise ConfigurationError("attenuation.frequencies", "expected a nonempty list",
                                 line=mapping.line_of("frequencies"))
    coefficients = [
        _build(FrequencyCoefficients, _require_mapping(entry, "attenuation.frequencies", mapping.line), "attenuation")
        for entry in entries
    ]
    options = {k: v for k, v in mapping.items() if k != "frequencies"}
    try:
        return AttenuationCoefficients(entries=tuple(coefficients), **options)
    except PydanticValidationError as e:
        raise ConfigurationError("attenuation", e.errors()[0]["msg"], line=mapping.line) from e

def scenario_from_document(doc: Any, source: str = "<scenario>") -> ScenarioConfig:
    """Validate a parsed scenario document."""
    if not isinstance(doc, LineDict):
        raise ConfigurationError(source, "scenario must be a mapping", line=1)
    _reject_unknown(doc, _TOP_LEVEL_KEYS, "")

    version = doc.get("version")
    if version is None:
        raise ConfigurationError("version", "missing mandatory version field", line=1)
    if version not in SUPPORTED_VERSIONS:
        raise ConfigurationError("version", f"unsupported version {version!r}", line=doc.line_of("version"))

    try:
        mode = ValidationMode(doc.get("validation", ValidationMode.STRICT.value))
    except ValueError:
        raise ConfigurationError("validation", "expected 'strict' or 'warn'", line=doc.line_of("validation"))

    bounds = _parse_bounds(_require_mapping(doc["bounds"], "bounds", doc.line_of("bounds"))) \
        if "bounds" in doc else ValidationBounds()

    if "seasons" not in doc:
        raise ConfigurationError("seasons", "missing section", line=1)
    seasons = _parse_seasons(doc["seasons"], doc.line_of("seasons"), bounds, mode)

    if "attenuation" not in doc:
        raise ConfigurationError("attenuation", "missing section", line=1)
    attenuation = _parse_attenuation(_require_mapping(doc["attenuation"], "attenuation", doc.line_of("attenuation")))

    channel_doc = _require_mapping(doc.get("channel", LineDict()), "channel", doc.line_of("channel"))
    geometry = {k: v for k, v in channel_doc.items() if k in _GEOMETRY_KEYS}
    channel_only = LineDict({k: v for k, v in channel_doc.items() if k not in _GEOMETRY_KEYS},
                            lines=channel_doc.lines, line=channel_doc.line)
    channel = _build(ChannelModelParams, channel_only, "channel")

    multipath = _build(
        MultipathSettings,
        _require_mapping(doc.get("multipath", LineDict()), "multipath", doc.line_of("multipath")),
        "multipath"
    )
    sweep = _build(
        SweepSettings,
        _require_mapping(doc.get("sweep", LineDict()), "sweep", doc.line_of("sweep")),
        "sweep"
    )
    antenna = _build(
        AntennaMetadata,
        _require_mapping(doc.get("antenna", LineDict()), "antenna", doc.line_of("antenna")),
        "antenna"
    )

    return ScenarioConfig(
        version=version,
        validation=mode,
        bounds=bounds,
        seasons=tuple(seasons),
        attenuation=attenuation,
        channel=channel,
        multipath=multipath,
        sweep=sweep,
        antenna=antenna,
        **geometry
    )

def load_scenario(path: Optional[Union[str, Path]] = None) -> ScenarioConfig:
    """
    Load a scenario file.

    Args:
        path: Scenario YAML file; the configured default when omitted

    Returns:
        Validated ScenarioConfig
    """
    path = Path(path) if path is not None else get_config().paths.scenario_path
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise FileSystemError("read", str(path), "file not found") from e
    except (OSError, UnicodeDecodeError) as e:
        raise FileSystemError("read", str(path), str(e)) from e

    scenario = scenario_from_document(parse_yaml(text, str(path)), str(path))
    logger.debug(f"Loaded scenario {path} ({len(scenario.attenuation.entries)} carriers)")
    return scenario

def scenario_to_dict(scenario: ScenarioConfig) -> Dict[str, Any]:
    """JSON-ready form embedded in run manifests."""
    return scenario.model_dump(mode="json")

def scenario_from_dict(data: Dict[str, Any]) -> ScenarioConfig:
    """Rebuild a scenario embedded in a run manifest."""
    try:
        return ScenarioConfig.model_validate(data)
    except PydanticValidationError as e:
        raise ConfigurationError("manifest.scenario", e.errors()[0]["msg"]) from e
