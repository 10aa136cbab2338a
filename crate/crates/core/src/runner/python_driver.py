"""JSON-lines driver: loads a candidate module and serves calls on stdin.

Request:  {"call": [<args>]}
Response: {"status": "ok", "value": <value>} or {"status": "error", "kind": <name>}
"""
import importlib.util
import json
import math
import sys


def respond(obj):
    sys.stdout.write(json.dumps(obj, allow_nan=False) + "\n")
    sys.stdout.flush()


def error_kind(exc):
    if isinstance(exc, RecursionError):
        return "stack_overflow"
    if isinstance(exc, ZeroDivisionError):
        return "division_by_zero"
    if isinstance(exc, IndexError):
        return "index_out_of_range"
    return type(exc).__name__


def check_finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError("non-finite double")
    if isinstance(value, (list, tuple)):
        for item in value:
            check_finite(item)


def main():
    path, name = sys.argv[1], sys.argv[2]
    fn, load_error = None, None
    try:
        spec = importlib.util.spec_from_file_location("candidate", path)
        module = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(module)
        fn = getattr(module, name)
    except BaseException as exc:  # reported on every call
        load_error = type(exc).__name__
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            args = json.loads(line)["call"]
        except Exception:
            respond({"status": "error", "kind": "bad_request"})
            continue
        if fn is None:
            respond({"status": "error", "kind": load_error or "load_error"})
            continue
        try:
            value = fn(*args)
            check_finite(value)
            text = json.dumps({"status": "ok", "value": value}, allow_nan=False)
        except Exception as exc:
            respond({"status": "error", "kind": error_kind(exc)})
            continue
        sys.stdout.write(text + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
