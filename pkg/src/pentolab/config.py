"""Run configuration: key = value files, command-line overrides, and
binding onto the per-model config dataclasses.

Config files are UTF-8 text, one `key = value` per line, with blank
lines and `#` comments ignored.  Unknown keys are rejected with the list
of valid keys for the chosen model.  The fully resolved configuration is
written next to every command's outputs so a run can be reproduced from
its artifacts alone.
"""

from __future__ import annotations

import dataclasses


class ConfigError(ValueError):
    pass


def parse_config_file(path) -> dict:
    """Ordered key -> raw string value mapping from a config file."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("%s:%d: expected 'key = value', got %r"
                                  % (path, lineno, raw.strip()))
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError("%s:%d: empty key" % (path, lineno))
            if key in out:
                raise ConfigError("%s:%d: duplicate key %r" % (path, lineno, key))
            out[key] = value.strip()
    return out


def parse_overrides(pairs) -> dict:
    """--set key=value arguments into a mapping."""
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError("override %r is not of the form key=value" % (pair,))
        key, value = pair.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError("override %r has an empty key" % (pair,))
        out[key] = value.strip()
    return out


def _coerce(text: str, type_str: str, key: str):
    t = text.strip()
    try:
        if type_str == "int":
            return int(t)
        if type_str == "float":
            return float(t)
        if type_str == "str":
            return t
        if type_str == "bool":
            low = t.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError("not a boolean")
        if type_str.startswith("tuple"):
            return tuple(int(v) for v in t.split(",") if v.strip())
        if "None" in type_str:
            if t.lower() in ("none", ""):
                return None
            return _coerce(t, type_str.split("|")[0].strip(), key)
    except ValueError as e:
        raise ConfigError("bad value %r for key %s (%s): %s"
                          % (text, key, type_str, e)) from None
    raise ConfigError("key %s has unsupported type %s" % (key, type_str))


def bind(config_cls, mapping: dict):
    """Instantiate a config dataclass from string values.

    Starts from the dataclass defaults; every key must name a field.
    """
    fields = {f.name: f for f in dataclasses.fields(config_cls)}
    kwargs = {}
    for key, value in mapping.items():
        if key not in fields:
            raise ConfigError("unknown key %r; valid keys: %s"
                              % (key, ", ".join(sorted(fields))))
        type_str = fields[key].type if isinstance(fields[key].type, str) \
            else getattr(fields[key].type, "__name__", str(fields[key].type))
        kwargs[key] = _coerce(value, type_str, key)
    try:
        return config_cls(**kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def resolve(config_cls, config_path=None, overrides=None, forced=None):
    """File values, then --set overrides, then hard-wired values."""
    mapping = {}
    if config_path:
        mapping.update(parse_config_file(config_path))
    mapping.update(parse_overrides(overrides))
    mapping.update({k: str(v) for k, v in (forced or {}).items()})
    return bind(config_cls, mapping)


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def resolved_text(config_obj, extra: dict | None = None) -> str:
    """The full configuration as sorted key = value lines.

    Entries in `extra` (command name, input paths, ...) are emitted as
    comments so the snapshot stays loadable as a --config file.
    """
    lines = ["# %s = %s" % (k, _format_value(v))
             for k, v in sorted((extra or {}).items())]
    items = {f.name: getattr(config_obj, f.name)
             for f in dataclasses.fields(config_obj)}
    lines += ["%s = %s" % (k, _format_value(items[k])) for k in sorted(items)]
    return "\n".join(lines) + "\n"


def write_resolved(path, config_obj, extra: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(resolved_text(config_obj, extra))
