"""
Value parsers shared by the command line and the config file, and the config-file echo of a spec
"""
from argparse import ArgumentTypeError
from typing import Any, Optional, Tuple

from asep_lab.models.experiment import ExperimentSpec


def _items(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    return [item.strip() for item in text.split(",")]


def parse_int_list(text: str) -> Tuple[int, ...]:
    """'-2,-1' -> (-2, -1); '' -> ()"""
    try:
        return tuple(int(item) for item in _items(text))
    except ValueError:
        raise ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_float_list(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(item) for item in _items(text))
    except ValueError:
        raise ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def parse_s_grid(text: str) -> Tuple[float, float, int]:
    """'lo,hi,steps'"""
    items = _items(text)
    if len(items) != 3:
        raise ArgumentTypeError(f"expected lo,hi,steps, got {text!r}")
    try:
        return float(items[0]), float(items[1]), int(items[2])
    except ValueError:
        raise ArgumentTypeError(f"expected lo,hi,steps, got {text!r}")


def parse_range(text: str) -> Tuple[float, float]:
    values = parse_float_list(text)
    if len(values) != 2:
        raise ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return values


def parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise ArgumentTypeError(f"expected a boolean, got {text!r}")


def parse_optional_float(text: str) -> Optional[float]:
    if text.strip().lower() in ("", "none"):
        return None
    try:
        return float(text)
    except ValueError:
        raise ArgumentTypeError(f"expected a number, got {text!r}")


def format_config_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(format_config_value(v) for v in value)
    return str(value)


def spec_to_config(spec: ExperimentSpec) -> str:
    """Flat key=value echo of a spec, readable back through the CLI's --config"""
    lines = [f"# asep-lab {spec.kind.value} experiment"]
    for key, value in spec.to_dict().items():
        if key == "kind" or value is None:
            continue
        lines.append(f"{key}={format_config_value(value)}")
    return "\n".join(lines) + "\n"
