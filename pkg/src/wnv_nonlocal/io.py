# Deterministic CSV and JSON output, each file headed by the resolved run configuration

import json
import math
import os

import pandas as pd

from .config import emit_config

FLOAT_FORMAT = "%.17g"


def header_lines(config, command):
    lines = [f"# wnv-nonlocal {command}"]
    lines.extend(f"# {line}" if line else "#" for line in emit_config(config).splitlines())
    return lines


def write_csv(frame, path, config, command):
    """
    Write a DataFrame as comma-separated UTF-8 text after a `#` header echoing the configuration.

    Floats are written with 17 significant digits, so repeated runs give identical bytes.

    Parameters
    ----------
    frame: pandas DataFrame.
    path: Output file.
    config: RunConfig of the run.
    command: Command that produced the table.
    """
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(header_lines(config, command)) + "\n")
        f.write(body)

    return path


def read_csv(path):
    return pd.read_csv(path, comment="#")


def _plain(value):
    # numpy values become Python ones, tuples become lists, non-finite floats become null
    if hasattr(value, "tolist"):
        value = value.tolist()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def write_json(data, path, config, command):
    """
    Write a JSON summary. The resolved configuration is stored under "config" as TOML lines,
    since JSON has no comments.

    Floats use the shortest representation that reads back to the same value, so repeated runs
    give identical bytes.
    """
    document = _plain({"command": command, "config": emit_config(config).splitlines(), **data})

    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(document, f, indent=2, allow_nan=False)
        f.write("\n")

    return path


def output_path(out_dir, name):
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)
