"""Experiment reports: per-quantity results, provenance and JSON/CSV output."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import metadata


def library_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _clean(x):
    """JSON-safe copy: tuples become lists, infinities become strings, numpy scalars plain."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


@dataclass
class Result:
    """One reported quantity. ``passed`` is None for informational rows."""

    quantity: str
    value: object
    ci: list = None
    bound: list = None
    passed: bool = None
    params: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self):
        return _clean(asdict(self))


@dataclass
class Report:
    experiment: str
    version: str
    checks: list
    config: dict
    defaults: dict
    results: list = field(default_factory=list)
    seed: int = 0
    wall_time: float = 0.0
    error: str = None

    @property
    def verdict(self):
        if self.error is not None:
            return "fail"
        return "pass" if all(r.passed is not False for r in self.results) else "fail"

    def payload(self):
        """Everything except wall time and worker count.

        Results do not depend on the worker count, so configs that differ only
        in ``workers`` give byte-identical payloads.
        """
        config = _clean(self.config)
        config["params"] = {k: v for k, v in config.get("params", {}).items() if k != "workers"}
        return {
            "experiment": self.experiment,
            "version": self.version,
            "checks": list(self.checks),
            "config": config,
            "defaults": _clean(self.defaults),
            "results": [r.to_dict() for r in self.results],
            "provenance": {"library_version": library_version(), "seed": self.seed},
            "error": self.error,
            "verdict": self.verdict,
        }

    def payload_json(self):
        return json.dumps(self.payload(), sort_keys=True, indent=2)

    def to_json(self):
        data = self.payload()
        data["provenance"]["wall_time"] = self.wall_time
        data["provenance"]["workers"] = self.config.get("params", {}).get("workers")
        return json.dumps(data, sort_keys=True, indent=2)

    def to_csv(self):
        """One row per result: params, value, interval, bound and verdict."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["quantity", "params", "value", "ci_lo", "ci_hi", "bound_lo", "bound_hi", "verdict"])
        for r in self.results:
            d = r.to_dict()
            ci = d["ci"] or [None, None]
            bound = d["bound"] or [None, None]
            verdict = "" if r.passed is None else ("pass" if r.passed else "fail")
            writer.writerow([r.quantity, json.dumps(d["params"], sort_keys=True), d["value"], *ci, *bound, verdict])
        return buf.getvalue()

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        results = [Result(**r) for r in data["results"]]
        config = data["config"]
        workers = data["provenance"].get("workers")
        if workers is not None:
            config["params"]["workers"] = workers
        return cls(
            experiment=data["experiment"],
            version=data["version"],
            checks=data["checks"],
            config=config,
            defaults=data["defaults"],
            results=results,
            seed=data["provenance"]["seed"],
            wall_time=data["provenance"].get("wall_time", 0.0),
            error=data["error"],
        )
