"""Validation summaries and their on-disk artifacts."""
from __future__ import annotations

import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .checks import IdentityCheck
from .montecarlo import McReport
from .reference import GoldenResult

__all__ = ["ValidationSummary", "atomic_write", "write_report", "ReportError"]


class ReportError(OSError):
    pass


def atomic_write(path: str | Path, text: str) -> Path:
    """Write ``text`` through a temp file in the same directory, then rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


@dataclass
class ValidationSummary:
    family: str | None
    golden: list[GoldenResult]
    identities: list[IdentityCheck] = field(default_factory=list)
    mc: McReport | None = None
    scale: float = 1.0

    @property
    def golden_ok(self) -> bool:
        return all(g.passed for g in self.golden)

    @property
    def identities_ok(self) -> bool:
        return all(c.passed for c in self.identities)

    @property
    def mc_monotone(self) -> bool | None:
        if self.mc is None:
            return None
        d = self.mc.sup_distances
        return all(b <= a for a, b in zip(d, d[1:]))

    @property
    def passed(self) -> bool:
        return self.golden_ok and self.identities_ok and self.mc_monotone is not False

    def exit_code(self) -> int:
        if not self.golden_ok:
            return 3
        if not self.passed:
            return 2
        return 0

    def to_json(self) -> dict:
        out = {
            "status": "PASS" if self.passed else "FAIL",
            "family": self.family,
            "scale": self.scale,
            "golden": [
                {"name": g.name, "passed": g.passed, "diff": g.diff} for g in self.golden
            ],
            "identities": [c.to_json() for c in self.identities],
            "monte_carlo": None,
        }
        if self.mc is not None:
            out["monte_carlo"] = dict(self.mc.summary(), monotone=self.mc_monotone)
        return out

    def to_text(self) -> str:
        buf = io.StringIO()
        w = buf.write
        w(("PASS" if self.passed else "FAIL") + "\n\n")
        npass = sum(g.passed for g in self.golden)
        w(f"Golden symbolic results: {npass}/{len(self.golden)} exact\n")
        for g in self.golden:
            w(g.summary() + "\n")
        w("\n")
        if self.identities:
            w(f"Numeric identities ({self.family}, standardized, scale c = {self.scale!r})\n")
            for c in self.identities:
                tag = "PASS" if c.passed else "FAIL"
                w(f"[{tag}] {c.name}: lhs {c.lhs!r} rhs {c.rhs!r} residual {c.residual:.3e}\n")
        else:
            w("Numeric identities: not run\n")
        w("\n")
        if self.mc is None:
            w("Monte Carlo: not run\n")
        else:
            m = self.mc
            w(f"Monte Carlo ({m.family}, n = {m.n}, reps = {m.reps}, seed = {m.seed}, failures = {m.failures})\n")
            w(f"standard error bound 1/(2 sqrt(reps)) = {m.standard_error:.3e}\n")
            for k, d in enumerate(m.sup_distances):
                w(f"order {k}: sup distance {d:.6e}\n")
            w("per-order sup distances " + ("non-increasing" if self.mc_monotone else "NOT monotone") + "\n")
        return buf.getvalue()

    def plot_csv(self) -> str | None:
        if self.mc is None:
            return None
        buf = io.StringIO()
        buf.write("x," + ",".join(f"abs_err{k}" for k in range(4)) + "\n")
        err = self.mc.abs_err
        for j, x in enumerate(self.mc.grid):
            buf.write(",".join(repr(float(v)) for v in (x, *err[:, j])) + "\n")
        return buf.getvalue()


def write_report(summary: ValidationSummary, out_dir: str | Path, stem: str = "validation") -> list[Path]:
    """Text, JSON and (when the MC section ran) grid and plot-data CSVs."""
    out_dir = Path(out_dir)
    paths = [
        atomic_write(out_dir / f"{stem}.txt", summary.to_text()),
        atomic_write(out_dir / f"{stem}.json", json.dumps(summary.to_json(), indent=2, sort_keys=True) + "\n"),
    ]
    if summary.mc is not None:
        paths.append(atomic_write(out_dir / f"{stem}_grid.csv", summary.mc.to_csv()))
        paths.append(atomic_write(out_dir / f"{stem}_plot.csv", summary.plot_csv()))
    return paths
