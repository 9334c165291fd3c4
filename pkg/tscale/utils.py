import os
import sys
import glob
import hashlib
import inspect
import json
import yaml
import pandas as pd


def load_args(Cls):
    """
    Parameters that start with TSCALE_ are read from environment & returned as kwargs.
    """
    signature = [
        p
        for p in inspect.signature(Cls.__init__).parameters.values()
        if p.name.startswith("TSCALE_")
    ]
    args = {}
    for arg in signature:
        if arg.name not in os.environ and arg.default == arg.empty:
            raise EnvironmentError(
                f"{Cls} requires {arg.name} to be set in the environment"
            )
        elif arg.name in os.environ:
            args[arg.name] = os.environ[arg.name]
    return args


def load_docs(filename=None, dirname=None):
    """
    load JSON (or YAML) documents

    with a dirname every file in it is loaded and merged, otherwise the single file is read
    """
    if dirname:
        data = {}
        for fname in sorted(glob.glob(dirname + "/*")):
            with open(fname) as f:
                data.update(yaml.safe_load(f))
    else:
        with open(filename) as f:
            data = yaml.safe_load(f)
    return data


def doc_digest(*docs):
    """ sha256 over the canonical JSON of the given documents """
    canonical = json.dumps(docs, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def parse_source(text):
    """
    split a "kind:value" source string, e.g. const:0.5, table:p.csv, csv:history.csv

    bare numbers are treated as const
    """
    if isinstance(text, (int, float)):
        return "const", float(text)
    kind, sep, value = str(text).partition(":")
    if not sep:
        return "const", float(kind)
    if kind == "const":
        return kind, float(value)
    return kind, value


def read_table(filename, columns=2):
    """ the first two numeric columns of a CSV file, sorted by the first """
    frame = pd.read_csv(filename, comment="#")
    if frame.shape[1] < columns:
        raise ValueError(f"{filename} needs at least {columns} columns")
    frame = frame.iloc[:, :columns].astype(float).sort_values(frame.columns[0])
    return [frame.iloc[:, i].tolist() for i in range(columns)]


def write_csv(rows, columns, headers=(), out=None):
    """
    write rows as CSV with '# key: value' header lines; floats round-trip exactly

    out may be a filename or None for stdout
    """
    frame = pd.DataFrame(list(rows), columns=columns)
    stream = open(out, "w", newline="") if out else sys.stdout
    try:
        for key, value in headers:
            stream.write(f"# {key}: {value}\n")
        frame.to_csv(stream, index=False, float_format="%.17g", lineterminator="\n")
    finally:
        if out:
            stream.close()
    return frame
